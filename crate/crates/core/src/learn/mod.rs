//! Maximum-weight spanning-tree structure learning for Chow-Liu multinets,
//! conditional trees and cutset trees, with CPT estimation and root-link
//! pruning.

mod condtree;
mod cutset;
mod multinet;
mod tree;

use std::borrow::Cow;

pub use condtree::{
    estimate_cpts, learn_conditional_tree, CptSet, learn_conditional_tree_over, prune_class_links, ConditionalTreeModel,
    TyingRecord,
};
pub use cutset::{learn_with_cutset, prune_cutset_links, CutsetModel};
pub use multinet::{learn_chow_liu_multinet, ClassTree, Multinet};
pub use tree::{max_weight_spanning_tree, spanning_edges, total_weight, TreeStructure, ZeroEdges};

use crate::error::{Error, Result};
use crate::tables::{PairStats, VarId};

/// Default pruning tolerance for exact (table-derived) statistics.
pub const EXACT_PRUNE_EPS: f64 = 1e-9;
/// Default pruning tolerance for statistics estimated from samples.
pub const EMPIRICAL_PRUNE_EPS: f64 = 1e-3;

/// Statistics conditioned on exactly `vars`, projecting when needed.
pub(crate) fn conditioned_on<'a>(stats: &'a PairStats, vars: &[VarId]) -> Result<Cow<'a, PairStats>> {
    if stats.conditioning() == vars {
        Ok(Cow::Borrowed(stats))
    } else {
        Ok(Cow::Owned(stats.project(vars)?))
    }
}

/// Class variable of the schema; statistics must condition on it.
pub(crate) fn class_of(stats: &PairStats) -> Result<VarId> {
    let class = stats.schema().require_class()?;
    if !stats.conditioning().contains(&class) {
        return Err(Error::SchemaMismatch("statistics are not conditioned on the class variable".into()));
    }
    Ok(class)
}

pub(crate) fn allowed_mask(card: usize, subset: &[usize]) -> Vec<bool> {
    let mut m = vec![false; card];
    subset.iter().for_each(|&c| m[c] = true);
    m
}
