//! Classification, exact divergence evaluation and Bayes-error bounds.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{conditional_entropy, conditional_mutual_information_sets, joint_entropy, kl_divergence_slices};
use crate::model::DiscreteModel;
use crate::tables::{checked_space, for_each_assignment, marginal, Dataset, JointTable, Schema, VarId};

/// Dense evaluation handles at most this many cells (20 binary variables).
pub const DENSE_CELL_CAP: f64 = (1u64 << 20) as f64;

/// `p̂(assignment)` after checking every modeled value is in range.
pub fn model_probability(model: &dyn DiscreteModel, assignment: &[usize]) -> Result<f64> {
    for (v, k) in model.domain() {
        match assignment.get(v) {
            None => return Err(Error::VariableOutOfRange(v)),
            Some(&x) if x >= k => return Err(Error::ValueOutOfDomain { var: v.to_string(), value: x, cardinality: k }),
            _ => {}
        }
    }
    Ok(model.prob(assignment))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub class: usize,
    pub posterior: Vec<f64>,
}

fn require_class(model: &dyn DiscreteModel) -> Result<(VarId, usize)> {
    let c = model.class_var().ok_or_else(|| Error::NoClassVariable("model has no class variable".into()))?;
    let k = model.domain().into_iter().find(|d| d.0 == c).map(|d| d.1).unwrap();
    Ok((c, k))
}

/// Posterior over the class for a full-length assignment (its class entry
/// is ignored), computed in log space. Ties go to the lowest class index.
pub fn classify(model: &dyn DiscreteModel, assignment: &[usize]) -> Result<Classification> {
    let (class, k) = require_class(model)?;
    let mut a = assignment.to_vec();
    if a.len() <= class {
        return Err(Error::VariableOutOfRange(class));
    }
    a[class] = 0;
    model_probability(model, &a)?;
    let logs: Vec<f64> = (0..k)
        .map(|c| {
            a[class] = c;
            model.log_prob(&a)
        })
        .collect();
    let mut best = 0;
    for c in 1..k {
        if logs[c] > logs[best] {
            best = c;
        }
    }
    let top = logs[best];
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(Error::UndefinedPosterior);
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(Classification { class: best, posterior: weights.into_iter().map(|w| w / z).collect() })
}

pub fn classify_batch(model: &dyn DiscreteModel, rows: &[Vec<usize>], exec: Execution) -> Result<Vec<Classification>> {
    exec.map(rows, |r| classify(model, r)).into_iter().collect()
}

/// Fraction of rows whose class entry equals the predicted class.
pub fn accuracy(model: &dyn DiscreteModel, data: &Dataset, exec: Execution) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (class, _) = require_class(model)?;
    let predicted = classify_batch(model, data.rows(), exec)?;
    let hits = predicted.iter().zip(data.rows()).filter(|(p, r)| p.class == r[class]).count();
    Ok(hits as f64 / data.len() as f64)
}

/// The model's distribution as a dense table over its variables in
/// ascending id order; `schema` is the schema the model was learned over.
pub fn model_table(model: &dyn DiscreteModel, schema: &Schema) -> Result<JointTable> {
    let dom = model.domain();
    let vars: Vec<VarId> = dom.iter().map(|d| d.0).collect();
    let sub = schema.select(&vars)?;
    let cards = sub.all_cards();
    if cards != dom.iter().map(|d| d.1).collect::<Vec<_>>() {
        return Err(Error::SchemaMismatch("model cardinalities disagree with the schema".into()));
    }
    let cells = checked_space(&cards, DENSE_CELL_CAP)?;
    let mut full = vec![0usize; schema.len()];
    let mut probs = vec![0.0; cells];
    for_each_assignment(&cards, |i, a| {
        for (&v, &x) in vars.iter().zip(a) {
            full[v] = x;
        }
        probs[i] = model.prob(&full);
    });
    JointTable::new(sub, probs)
}

fn class_position(table: &JointTable) -> Result<usize> {
    table
        .schema()
        .class_var()
        .ok_or_else(|| Error::NoClassVariable("table has no class variable".into()))
}

fn features_then_class(table: &JointTable) -> Result<(Vec<VarId>, VarId)> {
    let c = class_position(table)?;
    Ok(((0..table.schema().len()).filter(|&v| v != c).collect(), c))
}

/// `Σ_x max_c p(x, c)` and the maximizing class per `x`.
fn best_decisions(table: &JointTable) -> Result<(f64, Vec<usize>)> {
    let (features, c) = features_then_class(table)?;
    let k = table.schema().cardinality(c);
    let mut vars = features;
    vars.push(c);
    let p = crate::tables::CountSource::family_counts(table, &vars)?;
    let mut hit = 0.0;
    let mut decisions = Vec::with_capacity(p.len() / k);
    for row in p.chunks(k) {
        let mut best = 0;
        for j in 1..k {
            if row[j] > row[best] {
                best = j;
            }
        }
        hit += row[best];
        decisions.push(best);
    }
    Ok((hit, decisions))
}

/// `1 − Σ_x max_c p(x, c)`.
pub fn bayes_error(joint: &JointTable) -> Result<f64> {
    Ok((1.0 - best_decisions(joint)?.0).max(0.0))
}

/// `½ H(c | x)` in bits.
pub fn hellman_raviv_bound(joint: &JointTable) -> Result<f64> {
    let (features, c) = features_then_class(joint)?;
    Ok(0.5 * conditional_entropy(joint, &[c], &features)?)
}

/// Residuals of `I(x,c) = H(c) − H(c|x)` and
/// `H(c|x) = H(c) − H(x) + H(x|c)`.
pub fn identity_residuals(joint: &JointTable) -> Result<(f64, f64)> {
    let sum: f64 = joint.probs().iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(sum));
    }
    let (features, c) = features_then_class(joint)?;
    let i_xc = conditional_mutual_information_sets(joint, &features, &[c], &[])?;
    let h_c = joint_entropy(joint, &[c])?;
    let h_x = joint_entropy(joint, &features)?;
    let h_c_x = conditional_entropy(joint, &[c], &features)?;
    let h_x_c = conditional_entropy(joint, &features, &[c])?;
    Ok(((i_xc - (h_c - h_c_x)).abs(), (h_c_x - (h_c - h_x + h_x_c)).abs()))
}

fn text_float<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else {
        s.serialize_str("-inf")
    }
}

fn text_floats<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Wrap(f64);
    impl Serialize for Wrap {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            text_float(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&Wrap(x))?;
    }
    seq.end()
}

/// Exact comparison of a model against a reference distribution. Entropy
/// terms, the bound and the model Bayes error describe the model's own
/// distribution; infinite divergences serialize as `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// `D(p(x | c) ‖ p̂(x | c))` per class value (0 where `p(c) = 0`).
    #[serde(serialize_with = "text_floats")]
    pub per_class_divergence: Vec<f64>,
    /// `D(p(c) ‖ p̂(c))`.
    #[serde(serialize_with = "text_float")]
    pub class_prior_divergence: f64,
    /// `D(p(x, c) ‖ p̂(x, c))`.
    #[serde(serialize_with = "text_float")]
    pub weighted_divergence: f64,
    pub entropy_x_given_c: f64,
    pub entropy_c_given_x: f64,
    pub mutual_information: f64,
    pub hellman_raviv_bound: f64,
    pub model_bayes_error: f64,
    pub truth_bayes_error: f64,
    /// Accuracy of the model's decision rule under the reference.
    pub expected_accuracy: f64,
    /// Accuracy on a labeled dataset, when one was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_accuracy: Option<f64>,
}

/// Evaluates `model` against `truth` by full enumeration. `truth` must use
/// the schema the model was learned over; variables the model does not
/// cover are summed out of the reference.
pub fn evaluate_divergence(model: &dyn DiscreteModel, truth: &JointTable) -> Result<EvalReport> {
    let (class, k) = require_class(model)?;
    let schema = truth.schema();
    if schema.class_var() != Some(class) {
        return Err(Error::SchemaMismatch("model and reference disagree on the class variable".into()));
    }
    let vars = model.variables();
    let q = model_table(model, schema)?;
    let p = marginal(truth, &vars)?;
    let cpos = vars.iter().position(|&v| v == class).unwrap();
    let cards = p.schema().all_cards();

    let (mut pc, mut qc) = (vec![0.0; k], vec![0.0; k]);
    for_each_assignment(&cards, |i, a| {
        pc[a[cpos]] += p.probs()[i];
        qc[a[cpos]] += q.probs()[i];
    });
    let mut per_class = vec![0.0; k];
    for_each_assignment(&cards, |i, a| {
        let c = a[cpos];
        let (a_, b_) = (p.probs()[i], q.probs()[i]);
        if a_ > 0.0 {
            per_class[c] += if b_ > 0.0 {
                a_ / pc[c] * ((a_ / pc[c]) / (b_ / qc[c])).log2()
            } else {
                f64::INFINITY
            };
        }
    });
    let per_class_divergence = per_class.into_iter().map(|d| if d.is_finite() { d.max(0.0) } else { d }).collect();

    let model_decisions = best_decisions(&q)?.1;
    let (truth_hit, _) = best_decisions(&p)?;
    let features: Vec<VarId> = (0..vars.len()).filter(|&v| v != cpos).collect();
    let mut ordered = features.clone();
    ordered.push(cpos);
    let p_fc = crate::tables::CountSource::family_counts(&p, &ordered)?;
    let expected_accuracy = p_fc.chunks(k).zip(&model_decisions).map(|(row, &d)| row[d]).sum();

    Ok(EvalReport {
        per_class_divergence,
        class_prior_divergence: kl_divergence_slices(&pc, &qc),
        weighted_divergence: kl_divergence_slices(p.probs(), q.probs()),
        entropy_x_given_c: conditional_entropy(&q, &features, &[cpos])?,
        entropy_c_given_x: conditional_entropy(&q, &[cpos], &features)?,
        mutual_information: conditional_mutual_information_sets(&q, &features, &[cpos], &[])?,
        hellman_raviv_bound: hellman_raviv_bound(&q)?,
        model_bayes_error: bayes_error(&q)?,
        truth_bayes_error: (1.0 - truth_hit).max(0.0),
        expected_accuracy,
        empirical_accuracy: None,
    })
}
