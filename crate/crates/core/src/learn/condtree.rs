use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::tree::{max_weight_spanning_tree, TreeStructure, ZeroEdges};
use super::{allowed_mask, class_of, conditioned_on};
use crate::cpt::{draw, estimate_cpt, max_row_difference, Cpt, Restriction, Tying};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{check_subset, weight_matrix, EdgeWeightScheme};
use crate::model::{check_prior, sorted_domain, uniform, DiscreteModel};
use crate::tables::{CountSource, PairStats, VarId};

/// Per-feature partition of class values into tied groups (group id per
/// class value). Features without an entry are untied.
pub type TyingRecord = BTreeMap<VarId, Vec<usize>>;

/// `p̂(x, c) = p(c) · Π_j p(x_j | x_a(j), c)`, with the class dropped from
/// the factors of features whose class link was pruned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTreeModel {
    pub class_var: VarId,
    /// Class values the model covers, sorted; the prior is zero elsewhere.
    pub class_subset: Vec<usize>,
    pub prior: Vec<f64>,
    pub structure: TreeStructure,
    /// One table per node of `structure.order`, parents `[tree parent, class]`
    /// (each present only when applicable).
    pub cpts: Vec<Cpt>,
    pub alpha: f64,
}

fn node_parents(structure: &TreeStructure, pos: usize, class: VarId) -> Vec<VarId> {
    let mut p: Vec<VarId> = structure.parent_var(pos).into_iter().collect();
    if structure.class_link[pos] {
        p.push(class);
    }
    p
}

fn class_prior(source: &dyn CountSource, class: VarId, subset: &[usize], alpha: f64) -> Result<Vec<f64>> {
    let counts = source.family_counts(&[class])?;
    let denom: f64 = subset.iter().map(|&c| counts[c] + alpha).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroSupport);
    }
    let mut prior = vec![0.0; counts.len()];
    for &c in subset {
        prior[c] = (counts[c] + alpha) / denom;
    }
    Ok(prior)
}

/// Estimated tables for a tree, plus the number of unsupported rows that
/// received a uniform placeholder.
pub struct CptSet {
    pub cpts: Vec<Cpt>,
    pub zero_support_rows: usize,
}

fn estimate_tree_cpts(
    structure: &TreeStructure,
    source: &dyn CountSource,
    class: VarId,
    allowed: &[bool],
    alpha: f64,
    tying: &TyingRecord,
) -> Result<CptSet> {
    let mut cpts = Vec::with_capacity(structure.len());
    let mut zero = 0;
    for pos in 0..structure.len() {
        let child = structure.order[pos];
        let parents = node_parents(structure, pos, class);
        let tie = tying
            .get(&child)
            .filter(|_| structure.class_link[pos])
            .map(|groups| Tying { var: class, groups });
        let e = estimate_cpt(source, child, &parents, Some(Restriction { var: class, allowed }), tie, alpha)?;
        zero += e.zero_support_rows;
        cpts.push(e.cpt);
    }
    Ok(CptSet { cpts, zero_support_rows: zero })
}

/// Smoothed tables for every node of `structure` over all class values.
/// Classes sharing a tying group for a feature pool their counts.
pub fn estimate_cpts(structure: &TreeStructure, stats: &PairStats, alpha: f64, tying: &TyingRecord) -> Result<CptSet> {
    let class = class_of(stats)?;
    let card = stats.schema().cardinality(class);
    estimate_tree_cpts(structure, stats, class, &vec![true; card], alpha, tying)
}

impl ConditionalTreeModel {
    /// Fits tables for a fixed structure from (class-conditioned)
    /// statistics, restricted to `class_subset`.
    pub fn fit(stats: &PairStats, structure: TreeStructure, class_subset: &[usize]) -> Result<Self> {
        structure.validate()?;
        let class = class_of(stats)?;
        let card = stats.schema().cardinality(class);
        let subset = check_subset(class_subset, card)?;
        let alpha = stats.alpha();
        let prior = class_prior(stats, class, &subset, alpha)?;
        let allowed = allowed_mask(card, &subset);
        let set = estimate_tree_cpts(&structure, stats, class, &allowed, alpha, &TyingRecord::new())?;
        Ok(ConditionalTreeModel { class_var: class, class_subset: subset, prior, structure, cpts: set.cpts, alpha })
    }

    /// The edgeless model over every feature of `stats`.
    pub fn naive_bayes(stats: &PairStats, class_subset: Option<&[usize]>) -> Result<Self> {
        let class = class_of(stats)?;
        let subset: Vec<usize> =
            class_subset.map_or_else(|| (0..stats.schema().cardinality(class)).collect(), <[usize]>::to_vec);
        let structure = TreeStructure::from_skeleton(stats.features(), &[])?;
        ConditionalTreeModel::fit(stats, structure, &subset)
    }

    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        check_prior(&self.prior)?;
        if self.cpts.len() != self.structure.len() {
            return Err(Error::InvalidStructure("one table per tree node expected".into()));
        }
        for (pos, cpt) in self.cpts.iter().enumerate() {
            cpt.validate()?;
            if cpt.child != self.structure.order[pos] || cpt.parents != node_parents(&self.structure, pos, self.class_var) {
                return Err(Error::InvalidStructure(format!("table {pos} does not match the tree")));
            }
        }
        if self.class_subset.iter().any(|&c| c >= self.prior.len()) {
            return Err(Error::InvalidStructure("class subset outside the class domain".into()));
        }
        Ok(())
    }
}

impl DiscreteModel for ConditionalTreeModel {
    fn domain(&self) -> Vec<(VarId, usize)> {
        let mut d: Vec<(VarId, usize)> = self.cpts.iter().map(|c| (c.child, c.child_card)).collect();
        d.push((self.class_var, self.prior.len()));
        sorted_domain(d)
    }

    fn class_var(&self) -> Option<VarId> {
        Some(self.class_var)
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        f(self.prior[assignment[self.class_var]]);
        self.cpts.iter().for_each(|c| f(c.prob(assignment)));
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        row[self.class_var] = draw(uniform(rng), &self.prior);
        for cpt in &self.cpts {
            row[cpt.child] = draw(uniform(rng), cpt.distribution(row));
        }
    }
}

/// Conditional tree over every feature of `stats` (all class values unless
/// a subset is given).
pub fn learn_conditional_tree(stats: &PairStats, class_subset: Option<&[usize]>) -> Result<ConditionalTreeModel> {
    let class = class_of(stats)?;
    let subset: Vec<usize> =
        class_subset.map_or_else(|| (0..stats.schema().cardinality(class)).collect(), <[usize]>::to_vec);
    learn_conditional_tree_over(stats, stats.features(), &subset, ZeroEdges::Keep)
}

/// Conditional tree restricted to `features` and `class_subset`: weights
/// `Σ_{c∈S} p(c|S) I(x_i; x_j | c)`, maximum-weight spanning tree, then
/// class-subset-restricted tables with every class link present.
pub fn learn_conditional_tree_over(
    stats: &PairStats,
    features: &[VarId],
    class_subset: &[usize],
    zero: ZeroEdges,
) -> Result<ConditionalTreeModel> {
    let class = class_of(stats)?;
    let stats = conditioned_on(stats, &[class])?;
    for &f in features {
        if !stats.features().contains(&f) {
            return Err(Error::UnknownVariable(stats.schema().var(f).map_or_else(|_| f.to_string(), |v| v.name.clone())));
        }
    }
    let subset = check_subset(class_subset, stats.schema().cardinality(class))?;
    let weights = weight_matrix(&stats, features, &EdgeWeightScheme::Conditional(subset.clone()), Execution::default())?;
    let structure = max_weight_spanning_tree(&weights, zero)?.relabel(features);
    ConditionalTreeModel::fit(&stats, structure, &subset)
}

/// Drops the class link of every feature whose table satisfies
/// `max |p(x_j | x_a, c) − p(x_j | x_a)| ≤ eps` over supported rows, and
/// re-estimates that table without the class.
pub fn prune_class_links(model: &ConditionalTreeModel, source: &dyn CountSource, eps: f64) -> Result<ConditionalTreeModel> {
    let mut out = model.clone();
    let class = model.class_var;
    let allowed = allowed_mask(model.prior.len(), &model.class_subset);
    let restriction = Some(Restriction { var: class, allowed: &allowed });
    for pos in 0..model.structure.len() {
        if !model.structure.class_link[pos] {
            continue;
        }
        let child = model.structure.order[pos];
        let tree_parent: Vec<VarId> = model.structure.parent_var(pos).into_iter().collect();
        let mut with_class = tree_parent.clone();
        with_class.push(class);
        let full = estimate_cpt(source, child, &with_class, restriction, None, model.alpha)?;
        let reduced = estimate_cpt(source, child, &tree_parent, restriction, None, model.alpha)?;
        if max_row_difference(&full, &reduced.cpt) <= eps {
            out.structure.class_link[pos] = false;
            out.cpts[pos] = reduced.cpt;
        } else {
            out.cpts[pos] = full.cpt;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{JointTable, Schema};

    /// x1, x2 uniform-or-biased inputs, c = x1 xor x2.
    fn xor(p2: f64) -> JointTable {
        let schema = Schema::features_and_class(&[2, 2], 2).unwrap();
        let mut probs = vec![0.0; 8];
        for a in 0..2 {
            for b in 0..2 {
                let pb = if b == 1 { p2 } else { 1.0 - p2 };
                probs[(a * 2 + b) * 2 + (a ^ b)] = 0.5 * pb;
            }
        }
        JointTable::new(schema, probs).unwrap()
    }

    #[test]
    fn xor_prunes_only_the_uninformative_root() {
        // with uniform inputs the root is independent of c, so its link goes
        let t = xor(0.5);
        let stats = PairStats::from_joint(&t, &[2]).unwrap();
        let m = learn_conditional_tree(&stats, None).unwrap();
        let pruned = prune_class_links(&m, &stats, 1e-9).unwrap();
        assert_eq!(pruned.structure.class_link, vec![false, true]);

        // biased second input: every link carries class information
        let t = xor(0.2);
        let stats = PairStats::from_joint(&t, &[2]).unwrap();
        let m = learn_conditional_tree(&stats, None).unwrap();
        let pruned = prune_class_links(&m, &stats, 1e-9).unwrap();
        assert_eq!(pruned.structure.class_link, vec![true, true]);
    }

    #[test]
    fn infinite_eps_prunes_everything() {
        let stats = PairStats::from_joint(&xor(0.2), &[2]).unwrap();
        let m = learn_conditional_tree(&stats, None).unwrap();
        let pruned = prune_class_links(&m, &stats, f64::INFINITY).unwrap();
        assert!(pruned.structure.class_link.iter().all(|l| !l));
        assert!(pruned.cpts.iter().all(|c| !c.parents.contains(&2)));
        pruned.validate().unwrap();
    }

    #[test]
    fn subset_errors() {
        let stats = PairStats::from_joint(&xor(0.5), &[2]).unwrap();
        assert!(matches!(learn_conditional_tree(&stats, Some(&[])), Err(Error::InvalidClassSubset(_))));
        assert!(matches!(learn_conditional_tree(&stats, Some(&[5])), Err(Error::InvalidClassSubset(_))));
    }

    #[test]
    fn tying_all_classes_gives_class_free_rows() {
        let stats = PairStats::from_joint(&xor(0.2), &[2]).unwrap();
        let m = learn_conditional_tree(&stats, None).unwrap();
        let mut tying = TyingRecord::new();
        tying.insert(0, vec![0, 0]);
        let set = estimate_cpts(&m.structure, &stats, 0.0, &tying).unwrap();
        let root = &set.cpts[0];
        assert_eq!(root.parents, vec![2]);
        assert_eq!(root.row(0), root.row(1));
    }
}
