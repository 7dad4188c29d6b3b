use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::conditioned_on;
use super::tree::{max_weight_spanning_tree, TreeStructure, ZeroEdges};
use crate::cpt::{draw, estimate_cpt, max_row_difference, Cpt};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{weight_matrix, EdgeWeightScheme};
use crate::model::{check_prior, sorted_domain, uniform, DiscreteModel};
use crate::tables::{flat_index, unflatten, CountSource, PairStats, VarId};

/// Root cutset `y_1..y_l` with a joint prior, and a tree over the remaining
/// features whose tables condition on the linked cutset variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutsetModel {
    pub cutset: Vec<VarId>,
    pub cutset_cards: Vec<usize>,
    /// The class variable, when it is one of the cutset roots.
    pub class_var: Option<VarId>,
    /// Joint prior over cutset configurations (row-major in `cutset`).
    pub prior: Vec<f64>,
    pub structure: TreeStructure,
    /// Per tree node, per cutset variable: link present.
    pub links: Vec<Vec<bool>>,
    /// Parents `[tree parent, linked cutset variables in cutset order]`.
    pub cpts: Vec<Cpt>,
    pub alpha: f64,
}

fn parents_of(structure: &TreeStructure, cutset: &[VarId], links: &[bool], pos: usize) -> Vec<VarId> {
    let mut p: Vec<VarId> = structure.parent_var(pos).into_iter().collect();
    p.extend(cutset.iter().zip(links).filter(|(_, &l)| l).map(|(&y, _)| y));
    p
}

impl CutsetModel {
    pub fn fit(stats: &PairStats, structure: TreeStructure) -> Result<Self> {
        structure.validate()?;
        let cutset = stats.conditioning().to_vec();
        let cutset_cards = stats.conditioning_cards().to_vec();
        let alpha = stats.alpha();
        let k = stats.conditioning_size();
        let denom = stats.total() + alpha * k as f64;
        if denom <= 0.0 {
            return Err(Error::ZeroSupport);
        }
        let prior = stats.conditioning_counts().iter().map(|n| (n + alpha) / denom).collect();
        let links = vec![vec![true; cutset.len()]; structure.len()];
        let mut structure = structure;
        structure.class_link = vec![!cutset.is_empty(); structure.len()];
        let cpts = (0..structure.len())
            .map(|pos| {
                let parents = parents_of(&structure, &cutset, &links[pos], pos);
                estimate_cpt(stats, structure.order[pos], &parents, None, None, alpha).map(|e| e.cpt)
            })
            .collect::<Result<_>>()?;
        let class_var = stats.schema().class_var().filter(|c| cutset.contains(c));
        Ok(CutsetModel { cutset, cutset_cards, class_var, prior, structure, links, cpts, alpha })
    }

    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        check_prior(&self.prior)?;
        if self.cutset.len() != self.cutset_cards.len()
            || self.prior.len() != self.cutset_cards.iter().product::<usize>()
            || self.links.len() != self.structure.len()
            || self.cpts.len() != self.structure.len()
        {
            return Err(Error::InvalidStructure("cutset model arrays disagree in size".into()));
        }
        for (pos, cpt) in self.cpts.iter().enumerate() {
            cpt.validate()?;
            if self.links[pos].len() != self.cutset.len()
                || cpt.child != self.structure.order[pos]
                || cpt.parents != parents_of(&self.structure, &self.cutset, &self.links[pos], pos)
            {
                return Err(Error::InvalidStructure(format!("table {pos} does not match the structure")));
            }
        }
        Ok(())
    }
}

impl DiscreteModel for CutsetModel {
    fn domain(&self) -> Vec<(VarId, usize)> {
        let mut d: Vec<(VarId, usize)> = self.cpts.iter().map(|c| (c.child, c.child_card)).collect();
        d.extend(self.cutset.iter().copied().zip(self.cutset_cards.iter().copied()));
        sorted_domain(d)
    }

    fn class_var(&self) -> Option<VarId> {
        self.class_var
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        f(self.prior[flat_index(&self.cutset_cards, self.cutset.iter().map(|&y| assignment[y]))]);
        self.cpts.iter().for_each(|c| f(c.prob(assignment)));
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        let g = draw(uniform(rng), &self.prior);
        let mut values = vec![0; self.cutset.len()];
        unflatten(&self.cutset_cards, g, &mut values);
        for (&y, v) in self.cutset.iter().zip(values) {
            row[y] = v;
        }
        for cpt in &self.cpts {
            row[cpt.child] = draw(uniform(rng), cpt.distribution(row));
        }
    }
}

/// Tree over the non-cutset features under `Σ_y p(y) I(x_i; x_j | y)`
/// weights, with tables conditioned on the full cutset assignment. An empty
/// cutset gives a plain Chow-Liu tree on `p(x)`.
pub fn learn_with_cutset(stats: &PairStats, cutset: &[VarId]) -> Result<CutsetModel> {
    let stats = conditioned_on(stats, cutset)?;
    let features = stats.features().to_vec();
    let weights = weight_matrix(&stats, &features, &EdgeWeightScheme::Cutset(cutset.to_vec()), Execution::default())?;
    let structure = max_weight_spanning_tree(&weights, ZeroEdges::Keep)?.relabel(&features);
    CutsetModel::fit(&stats, structure)
}

/// For each node and each linked cutset variable in cutset order, drops the
/// link when the table without it differs by at most `eps` on supported
/// rows.
pub fn prune_cutset_links(model: &CutsetModel, source: &dyn CountSource, eps: f64) -> Result<CutsetModel> {
    let mut out = model.clone();
    for pos in 0..model.structure.len() {
        let child = model.structure.order[pos];
        let mut links = model.links[pos].clone();
        let mut current = estimate_cpt(source, child, &parents_of(&model.structure, &model.cutset, &links, pos), None, None, model.alpha)?;
        for k in 0..model.cutset.len() {
            if !links[k] {
                continue;
            }
            let mut trial = links.clone();
            trial[k] = false;
            let reduced = estimate_cpt(source, child, &parents_of(&model.structure, &model.cutset, &trial, pos), None, None, model.alpha)?;
            if max_row_difference(&current, &reduced.cpt) <= eps {
                links = trial;
                current = reduced;
            }
        }
        out.structure.class_link[pos] = links.iter().any(|&l| l);
        out.links[pos] = links;
        out.cpts[pos] = current.cpt;
    }
    Ok(out)
}
