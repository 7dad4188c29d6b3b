//! Conditional probability tables and count-based estimation with
//! smoothing, class restriction and parameter tying.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{flat_index, space_size, unflatten, CountSource, VarId};

const ROW_TOL: f64 = 1e-9;

/// `p(child | parents)`, one row per parent configuration (row-major over
/// `parents`, first parent slowest), each row `child_card` wide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: VarId,
    pub child_card: usize,
    pub parents: Vec<VarId>,
    pub parent_cards: Vec<usize>,
    pub probs: Vec<f64>,
}

impl Cpt {
    pub fn new(child: VarId, child_card: usize, parents: Vec<VarId>, parent_cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let cpt = Cpt { child, child_card, parents, parent_cards, probs };
        cpt.validate()?;
        Ok(cpt)
    }

    /// Checks shape and that every row is a distribution within 1e-9.
    pub fn validate(&self) -> Result<()> {
        if self.parents.len() != self.parent_cards.len() || self.parents.contains(&self.child) {
            return Err(Error::InvalidStructure(format!("malformed parent list for variable {}", self.child)));
        }
        if self.child_card == 0 || self.probs.len() != self.rows() * self.child_card {
            return Err(Error::InvalidStructure(format!("table for variable {} has wrong size", self.child)));
        }
        for (r, row) in self.probs.chunks(self.child_card).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidStructure(format!(
                    "row {r} of the table for variable {} is not a distribution (sum = {sum})",
                    self.child
                )));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        space_size(&self.parent_cards)
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.probs[config * self.child_card..(config + 1) * self.child_card]
    }

    /// Parent configuration index for a full assignment (indexed by VarId).
    pub fn row_index(&self, assignment: &[usize]) -> usize {
        flat_index(&self.parent_cards, self.parents.iter().map(|&p| assignment[p]))
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[self.row_index(assignment) * self.child_card + assignment[self.child]]
    }

    pub fn distribution(&self, assignment: &[usize]) -> &[f64] {
        self.row(self.row_index(assignment))
    }
}

/// Restricts a conditioning variable (typically the class) to a subset of
/// values: counts outside the subset are ignored.
#[derive(Clone, Copy, Debug)]
pub struct Restriction<'a> {
    pub var: VarId,
    pub allowed: &'a [bool],
}

/// Pools the counts of a parent variable's values that share a group id.
#[derive(Clone, Copy, Debug)]
pub struct Tying<'a> {
    pub var: VarId,
    pub groups: &'a [usize],
}

#[derive(Clone, Debug)]
pub struct CptEstimate {
    pub cpt: Cpt,
    /// Unsmoothed count mass behind each row (after pooling).
    pub row_mass: Vec<f64>,
    /// Rows that had no support and no smoothing; they hold a uniform
    /// placeholder.
    pub zero_support_rows: usize,
}

/// Smoothed conditional frequencies `(n + α) / (n_row + α·k)`.
pub fn estimate_cpt(
    source: &dyn CountSource,
    child: VarId,
    parents: &[VarId],
    restriction: Option<Restriction<'_>>,
    tying: Option<Tying<'_>>,
    alpha: f64,
) -> Result<CptEstimate> {
    let schema = source.schema();
    let child_card = schema.cardinality(child);
    let parent_cards = schema.cards(parents);
    let rows = space_size(&parent_cards);

    let summed = restriction.filter(|r| !parents.contains(&r.var));
    let mut vars = Vec::with_capacity(parents.len() + 2);
    if let Some(r) = summed {
        vars.push(r.var);
    }
    vars.extend_from_slice(parents);
    vars.push(child);
    let raw = source.family_counts(&vars)?;

    let block = rows * child_card;
    let mut counts = match summed {
        Some(r) => {
            let mut acc = vec![0.0; block];
            for (value, chunk) in raw.chunks(block).enumerate() {
                if r.allowed[value] {
                    acc.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
                }
            }
            acc
        }
        None => raw,
    };

    // rows whose restricted parent value is excluded carry no information
    let mut excluded = vec![false; rows];
    if let Some(r) = restriction.filter(|r| parents.contains(&r.var)) {
        let pos = parents.iter().position(|&p| p == r.var).unwrap();
        let mut config = vec![0; parents.len()];
        for (row, flag) in excluded.iter_mut().enumerate() {
            unflatten(&parent_cards, row, &mut config);
            if !r.allowed[config[pos]] {
                *flag = true;
                counts[row * child_card..(row + 1) * child_card].iter_mut().for_each(|c| *c = 0.0);
            }
        }
    }

    if let Some(t) = tying {
        let pos = parents
            .iter()
            .position(|&p| p == t.var)
            .ok_or_else(|| Error::InvalidStructure(format!("tied variable {} is not a parent of {child}", t.var)))?;
        // representative of each group: its smallest value
        let rep: Vec<usize> = (0..parent_cards[pos])
            .map(|v| (0..parent_cards[pos]).find(|&u| t.groups[u] == t.groups[v]).unwrap())
            .collect();
        let mut pooled = vec![0.0; block];
        let mut config = vec![0; parents.len()];
        let key_of = |config: &mut Vec<usize>, row: usize| {
            unflatten(&parent_cards, row, config);
            config[pos] = rep[config[pos]];
            flat_index(&parent_cards, config.iter().copied())
        };
        for row in 0..rows {
            if excluded[row] {
                continue;
            }
            let key = key_of(&mut config, row);
            for x in 0..child_card {
                pooled[key * child_card + x] += counts[row * child_card + x];
            }
        }
        for row in 0..rows {
            if excluded[row] {
                continue;
            }
            let key = key_of(&mut config, row);
            counts[row * child_card..(row + 1) * child_card]
                .copy_from_slice(&pooled[key * child_card..(key + 1) * child_card]);
        }
    }

    let mut probs = vec![0.0; block];
    let mut row_mass = vec![0.0; rows];
    let mut zero_support_rows = 0;
    for row in 0..rows {
        let c = &counts[row * child_card..(row + 1) * child_card];
        let mass: f64 = c.iter().sum();
        row_mass[row] = mass;
        let denom = mass + alpha * child_card as f64;
        let out = &mut probs[row * child_card..(row + 1) * child_card];
        if denom > 0.0 && !excluded[row] {
            out.iter_mut().zip(c).for_each(|(p, n)| *p = (n + alpha) / denom);
        } else {
            if !excluded[row] {
                zero_support_rows += 1;
            }
            out.iter_mut().for_each(|p| *p = 1.0 / child_card as f64);
        }
    }

    Ok(CptEstimate {
        cpt: Cpt { child, child_card, parents: parents.to_vec(), parent_cards, probs },
        row_mass,
        zero_support_rows,
    })
}

/// Largest absolute difference between `full`'s supported rows and the rows
/// of `reduced` (whose parents are a subset of `full`'s) they project to.
pub fn max_row_difference(full: &CptEstimate, reduced: &Cpt) -> f64 {
    let f = &full.cpt;
    let positions: Vec<usize> = reduced
        .parents
        .iter()
        .map(|p| f.parents.iter().position(|q| q == p).expect("reduced parents must be a subset"))
        .collect();
    let mut config = vec![0; f.parents.len()];
    let mut worst: f64 = 0.0;
    for row in 0..f.rows() {
        if full.row_mass[row] <= 0.0 {
            continue;
        }
        unflatten(&f.parent_cards, row, &mut config);
        let key = flat_index(&reduced.parent_cards, positions.iter().map(|&p| config[p]));
        for (a, b) in f.row(row).iter().zip(reduced.row(key)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Draws a value from a categorical row using one uniform variate.
pub(crate) fn draw(u: f64, row: &[f64]) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (v, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = v;
            if u < acc {
                return v;
            }
        }
    }
    last
}
