use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::tree::{max_weight_spanning_tree, TreeStructure, ZeroEdges};
use super::{allowed_mask, class_of, conditioned_on};
use crate::cpt::{draw, estimate_cpt, Cpt, Restriction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{weight_matrix, EdgeWeightScheme};
use crate::model::{check_prior, sorted_domain, uniform, DiscreteModel};
use crate::tables::{PairStats, VarId};

/// A dependence tree for one class value; tables do not mention the class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub structure: TreeStructure,
    pub cpts: Vec<Cpt>,
}

/// One Chow-Liu tree per class value plus a class prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multinet {
    pub class_var: VarId,
    pub prior: Vec<f64>,
    pub trees: Vec<ClassTree>,
    pub alpha: f64,
}

impl Multinet {
    pub fn validate(&self) -> Result<()> {
        check_prior(&self.prior)?;
        if self.trees.len() != self.prior.len() {
            return Err(Error::InvalidStructure("one tree per class value expected".into()));
        }
        let vars = |t: &ClassTree| {
            let mut v = t.structure.order.clone();
            v.sort_unstable();
            v
        };
        for t in &self.trees {
            t.structure.validate()?;
            if t.cpts.len() != t.structure.len() || vars(t) != vars(&self.trees[0]) {
                return Err(Error::InvalidStructure("class trees must cover the same features".into()));
            }
            for (pos, cpt) in t.cpts.iter().enumerate() {
                cpt.validate()?;
                let parents: Vec<VarId> = t.structure.parent_var(pos).into_iter().collect();
                if cpt.child != t.structure.order[pos] || cpt.parents != parents {
                    return Err(Error::InvalidStructure(format!("table {pos} does not match its class tree")));
                }
            }
        }
        Ok(())
    }
}

impl DiscreteModel for Multinet {
    fn domain(&self) -> Vec<(VarId, usize)> {
        let mut d: Vec<(VarId, usize)> = self.trees[0].cpts.iter().map(|c| (c.child, c.child_card)).collect();
        d.push((self.class_var, self.prior.len()));
        sorted_domain(d)
    }

    fn class_var(&self) -> Option<VarId> {
        Some(self.class_var)
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        let c = assignment[self.class_var];
        f(self.prior[c]);
        self.trees[c].cpts.iter().for_each(|cpt| f(cpt.prob(assignment)));
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        let c = draw(uniform(rng), &self.prior);
        row[self.class_var] = c;
        for cpt in &self.trees[c].cpts {
            row[cpt.child] = draw(uniform(rng), cpt.distribution(row));
        }
    }
}

/// For each class value `c0`, a maximum-weight spanning tree under
/// `I(x_i; x_j | c = c0)` with tables from `c0`'s counts alone.
pub fn learn_chow_liu_multinet(stats: &PairStats) -> Result<Multinet> {
    let class = class_of(stats)?;
    let stats = conditioned_on(stats, &[class])?;
    let card = stats.schema().cardinality(class);
    let alpha = stats.alpha();
    let counts = stats.conditioning_counts();
    if alpha == 0.0 {
        if let Some(c) = (0..card).find(|&c| counts[c] <= 0.0) {
            return Err(Error::EmptyClass(c));
        }
    }
    let denom = stats.total() + alpha * card as f64;
    let prior: Vec<f64> = counts.iter().map(|n| (n + alpha) / denom).collect();
    let features = stats.features().to_vec();

    let classes: Vec<usize> = (0..card).collect();
    let trees = Execution::default()
        .map(&classes, |&c0| -> Result<ClassTree> {
            let w = weight_matrix(&stats, &features, &EdgeWeightScheme::PerClass(c0), Execution::Sequential)?;
            let mut structure = max_weight_spanning_tree(&w, ZeroEdges::Keep)?.relabel(&features);
            structure.class_link = vec![false; structure.len()];
            let allowed = allowed_mask(card, &[c0]);
            let cpts = (0..structure.len())
                .map(|pos| {
                    let parents: Vec<VarId> = structure.parent_var(pos).into_iter().collect();
                    let r = Restriction { var: class, allowed: &allowed };
                    estimate_cpt(&*stats, structure.order[pos], &parents, Some(r), None, alpha).map(|e| e.cpt)
                })
                .collect::<Result<_>>()?;
            Ok(ClassTree { structure, cpts })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Multinet { class_var: class, prior, trees, alpha })
}
