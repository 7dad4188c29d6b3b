//! The common probability interface shared by every model family.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{ConditionalTreeModel, CutsetModel, Multinet};
use crate::simnet::GlobalNetwork;
use crate::tables::{Schema, VarId};

/// A normalized distribution over a set of discrete variables given as a
/// product of factors. Assignments are full schema-length vectors indexed
/// by [`VarId`]; entries of unmodeled variables are ignored.
pub trait DiscreteModel: Sync {
    /// `(variable, cardinality)` for every modeled variable, ascending.
    fn domain(&self) -> Vec<(VarId, usize)>;

    fn class_var(&self) -> Option<VarId>;

    /// Calls `f` with each factor's value at `assignment`.
    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64));

    /// Ancestral sampling: fills the modeled entries of `row` in
    /// topological order.
    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]);

    fn prob(&self, assignment: &[usize]) -> f64 {
        let mut p = 1.0;
        self.visit_factors(assignment, &mut |v| p *= v);
        p
    }

    /// Natural-log probability, summed factor by factor.
    fn log_prob(&self, assignment: &[usize]) -> f64 {
        let mut lp = 0.0;
        self.visit_factors(assignment, &mut |v| lp += v.ln());
        lp
    }

    fn variables(&self) -> Vec<VarId> {
        self.domain().into_iter().map(|d| d.0).collect()
    }
}

/// Draws `u ~ U[0, 1)` from a dyn generator.
pub(crate) fn uniform(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Every learned model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClassifierModel {
    Multinet(Multinet),
    ConditionalTree(ConditionalTreeModel),
    Cutset(CutsetModel),
    Global(GlobalNetwork),
}

impl ClassifierModel {
    pub fn family(&self) -> &'static str {
        match self {
            ClassifierModel::Multinet(_) => "multinet",
            ClassifierModel::ConditionalTree(_) => "conditional_tree",
            ClassifierModel::Cutset(_) => "cutset",
            ClassifierModel::Global(_) => "global",
        }
    }

    fn inner(&self) -> &dyn DiscreteModel {
        match self {
            ClassifierModel::Multinet(m) => m,
            ClassifierModel::ConditionalTree(m) => m,
            ClassifierModel::Cutset(m) => m,
            ClassifierModel::Global(m) => m,
        }
    }

    /// Structural and numeric checks against the schema the model was
    /// learned over.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        match self {
            ClassifierModel::Multinet(m) => m.validate()?,
            ClassifierModel::ConditionalTree(m) => m.validate()?,
            ClassifierModel::Cutset(m) => m.validate()?,
            ClassifierModel::Global(m) => m.validate()?,
        }
        for (v, k) in self.domain() {
            let var = schema.var(v)?;
            if var.cardinality() != k {
                return Err(Error::SchemaMismatch(format!(
                    "variable `{}` has cardinality {} in the schema and {k} in the model",
                    var.name,
                    var.cardinality()
                )));
            }
        }
        if let Some(c) = self.class_var() {
            if schema.class_var() != Some(c) {
                return Err(Error::SchemaMismatch("model class variable is not the schema's class".into()));
            }
        }
        Ok(())
    }
}

impl DiscreteModel for ClassifierModel {
    fn domain(&self) -> Vec<(VarId, usize)> {
        self.inner().domain()
    }

    fn class_var(&self) -> Option<VarId> {
        self.inner().class_var()
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        self.inner().visit_factors(assignment, f)
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        self.inner().sample_into(rng, row)
    }
}

pub(crate) fn check_prior(prior: &[f64]) -> Result<()> {
    let sum: f64 = prior.iter().sum();
    if prior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidStructure(format!("prior is not a distribution (sum = {sum})")));
    }
    Ok(())
}

pub(crate) fn sorted_domain(mut d: Vec<(VarId, usize)>) -> Vec<(VarId, usize)> {
    d.sort_unstable();
    d
}
