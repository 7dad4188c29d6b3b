//! Discrete variables, datasets, dense joint tables and smoothed pairwise
//! sufficient statistics.
//!
//! All dense layouts are row-major over the listed variables: the first
//! variable varies slowest and the last fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Index of a variable within its [`Schema`].
pub type VarId = usize;

/// Default cap on dense joint tables (cells).
pub const DEFAULT_TABLE_CAP: f64 = (1u64 << 22) as f64;
/// Default cap on the joint space of conditioning (class/cutset) variables.
pub const DEFAULT_CONDITIONING_CAP: usize = 4096;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Class,
    Cutset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub role: Role,
    /// Token for each value code; the cardinality is `labels.len()`.
    pub labels: Vec<String>,
}

impl Variable {
    /// A variable whose labels are the decimal value codes.
    pub fn new(name: impl Into<String>, cardinality: usize, role: Role) -> Self {
        Variable {
            name: name.into(),
            role,
            labels: (0..cardinality).map(|v| v.to_string()).collect(),
        }
    }

    pub fn with_labels(name: impl Into<String>, role: Role, labels: Vec<String>) -> Self {
        Variable { name: name.into(), role, labels }
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn label_code(&self, token: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == token)
    }
}

/// An ordered list of variables with unique names and at most one class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct Schema {
    vars: Vec<Variable>,
}

impl TryFrom<Vec<Variable>> for Schema {
    type Error = Error;

    fn try_from(vars: Vec<Variable>) -> Result<Self> {
        Schema::new(vars)
    }
}

impl From<Schema> for Vec<Variable> {
    fn from(s: Schema) -> Self {
        s.vars
    }
}

impl Schema {
    pub fn new(vars: Vec<Variable>) -> Result<Self> {
        let mut classes = 0;
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidSchema(format!("duplicate variable name `{}`", v.name)));
            }
            let min = if v.role == Role::Class { 2 } else { 1 };
            if v.cardinality() < min {
                return Err(Error::InvalidSchema(format!(
                    "variable `{}` has cardinality {} (< {min})",
                    v.name,
                    v.cardinality()
                )));
            }
            if v.labels.iter().enumerate().any(|(k, l)| v.labels[..k].contains(l)) {
                return Err(Error::InvalidSchema(format!("duplicate label in `{}`", v.name)));
            }
            if v.role == Role::Class {
                classes += 1;
            }
        }
        if classes > 1 {
            return Err(Error::InvalidSchema("more than one class variable".into()));
        }
        Ok(Schema { vars })
    }

    /// Convenience constructor: binary features `x0..x{n-1}` followed by a
    /// class variable `c` with `classes` values.
    pub fn features_and_class(features: &[usize], classes: usize) -> Result<Self> {
        let mut vars: Vec<Variable> = features
            .iter()
            .enumerate()
            .map(|(i, &k)| Variable::new(format!("x{i}"), k, Role::Feature))
            .collect();
        vars.push(Variable::new("c", classes, Role::Class));
        Schema::new(vars)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> Result<&Variable> {
        self.vars.get(id).ok_or(Error::VariableOutOfRange(id))
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.vars[id].cardinality()
    }

    pub fn cards(&self, ids: &[VarId]) -> Vec<usize> {
        ids.iter().map(|&i| self.vars[i].cardinality()).collect()
    }

    pub fn all_cards(&self) -> Vec<usize> {
        self.vars.iter().map(Variable::cardinality).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn class_var(&self) -> Option<VarId> {
        self.vars.iter().position(|v| v.role == Role::Class)
    }

    pub fn require_class(&self) -> Result<VarId> {
        self.class_var().ok_or_else(|| Error::NoClassVariable("schema".into()))
    }

    /// Variables whose role is [`Role::Feature`], in schema order.
    pub fn features(&self) -> Vec<VarId> {
        (0..self.vars.len()).filter(|&i| self.vars[i].role == Role::Feature).collect()
    }

    /// Number of cells of the full joint space, as a float so huge schemas
    /// can be rejected without overflow.
    pub fn cells(&self) -> f64 {
        self.vars.iter().map(|v| v.cardinality() as f64).product()
    }

    pub fn check_ids(&self, ids: &[VarId]) -> Result<()> {
        for (k, &i) in ids.iter().enumerate() {
            if i >= self.vars.len() {
                return Err(Error::VariableOutOfRange(i));
            }
            if ids[..k].contains(&i) {
                return Err(Error::Overlap(format!("variable `{}` listed twice", self.vars[i].name)));
            }
        }
        Ok(())
    }

    pub fn check_assignment(&self, assignment: &[usize]) -> Result<()> {
        if assignment.len() != self.vars.len() {
            return Err(Error::SchemaMismatch(format!(
                "assignment has {} values, schema has {} variables",
                assignment.len(),
                self.vars.len()
            )));
        }
        for (v, &x) in self.vars.iter().zip(assignment) {
            if x >= v.cardinality() {
                return Err(Error::ValueOutOfDomain {
                    var: v.name.clone(),
                    value: x,
                    cardinality: v.cardinality(),
                });
            }
        }
        Ok(())
    }

    /// The sub-schema over `ids`, in the given order.
    pub fn select(&self, ids: &[VarId]) -> Result<Schema> {
        self.check_ids(ids)?;
        Schema::new(ids.iter().map(|&i| self.vars[i].clone()).collect())
    }

    /// Same variables with `id`'s role replaced.
    pub fn with_role(&self, id: VarId, role: Role) -> Result<Schema> {
        let mut vars = self.vars.clone();
        vars.get_mut(id).ok_or(Error::VariableOutOfRange(id))?.role = role;
        Schema::new(vars)
    }

    /// True when both schemas list the same names, roles and cardinalities.
    pub fn compatible(&self, other: &Schema) -> bool {
        self.vars.len() == other.vars.len()
            && self.vars.iter().zip(&other.vars).all(|(a, b)| {
                a.name == b.name && a.role == b.role && a.cardinality() == b.cardinality()
            })
    }
}

pub(crate) fn space_size(cards: &[usize]) -> usize {
    cards.iter().product()
}

pub(crate) fn checked_space(cards: &[usize], cap: f64) -> Result<usize> {
    let cells: f64 = cards.iter().map(|&k| k as f64).product();
    if cells > cap {
        return Err(Error::TableTooLarge { cells, cap });
    }
    Ok(cells as usize)
}

/// Row-major index of `values` under `cards`.
pub(crate) fn flat_index(cards: &[usize], values: impl IntoIterator<Item = usize>) -> usize {
    cards.iter().zip(values).fold(0, |acc, (&k, v)| acc * k + v)
}

/// Inverse of [`flat_index`].
pub(crate) fn unflatten(cards: &[usize], mut index: usize, out: &mut [usize]) {
    for (slot, &k) in out.iter_mut().zip(cards).rev() {
        *slot = index % k;
        index /= k;
    }
}

/// Visits every assignment of `cards` in row-major order.
pub(crate) fn for_each_assignment(cards: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let n = space_size(cards);
    let mut a = vec![0usize; cards.len()];
    for idx in 0..n {
        f(idx, &a);
        for pos in (0..cards.len()).rev() {
            a[pos] += 1;
            if a[pos] < cards[pos] {
                break;
            }
            a[pos] = 0;
        }
    }
}

/// Sums a dense table over `src` variables down to `target` (a subset,
/// any order).
pub(crate) fn project(src: &[VarId], src_cards: &[usize], data: &[f64], target: &[VarId]) -> Result<Vec<f64>> {
    let positions: Vec<usize> = target
        .iter()
        .map(|t| src.iter().position(|s| s == t).ok_or(Error::VariableOutOfRange(*t)))
        .collect::<Result<_>>()?;
    let target_cards: Vec<usize> = positions.iter().map(|&p| src_cards[p]).collect();
    let mut out = vec![0.0; space_size(&target_cards)];
    for_each_assignment(src_cards, |idx, a| {
        let t = flat_index(&target_cards, positions.iter().map(|&p| a[p]));
        out[t] += data[idx];
    });
    Ok(out)
}

/// Anything that can report (possibly fractional) counts over the joint
/// space of a family of variables.
pub trait CountSource: Sync {
    fn schema(&self) -> &Schema;

    /// Weighted counts over the joint space of `vars`, row-major in the
    /// given order.
    fn family_counts(&self, vars: &[VarId]) -> Result<Vec<f64>>;
}

/// Complete discrete observations over a schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<usize>>) -> Result<Self> {
        for row in &rows {
            schema.check_assignment(row)?;
        }
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Same rows with a different schema (roles may differ, cardinalities
    /// must not).
    pub fn with_schema(self, schema: Schema) -> Result<Self> {
        Dataset::new(schema, self.rows)
    }

    /// Splits off the rows from `at` onward.
    pub fn split(&self, at: usize) -> (Dataset, Dataset) {
        let at = at.min(self.rows.len());
        (
            Dataset { schema: self.schema.clone(), rows: self.rows[..at].to_vec() },
            Dataset { schema: self.schema.clone(), rows: self.rows[at..].to_vec() },
        )
    }
}

impl CountSource for Dataset {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn family_counts(&self, vars: &[VarId]) -> Result<Vec<f64>> {
        self.schema.check_ids(vars)?;
        let cards = self.schema.cards(vars);
        let size = checked_space(&cards, DEFAULT_TABLE_CAP)?;
        let mut out = vec![0.0; size];
        for row in &self.rows {
            out[flat_index(&cards, vars.iter().map(|&v| row[v]))] += 1.0;
        }
        Ok(out)
    }
}

/// A dense probability table over every assignment of its schema.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    schema: Schema,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(schema: Schema, probs: Vec<f64>) -> Result<Self> {
        let cells = checked_space(&schema.all_cards(), DEFAULT_TABLE_CAP)?;
        if probs.len() != cells {
            return Err(Error::SchemaMismatch(format!("{} probabilities for {cells} cells", probs.len())));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Malformed(format!("probability {bad} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(JointTable { schema, probs })
    }

    /// Normalizes nonnegative weights into a table.
    pub fn from_weights(schema: Schema, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::NotNormalized(sum));
        }
        JointTable::new(schema, weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(schema: Schema) -> Result<Self> {
        let cells = checked_space(&schema.all_cards(), DEFAULT_TABLE_CAP)?;
        JointTable::new(schema, vec![1.0 / cells as f64; cells])
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index(&self, assignment: &[usize]) -> usize {
        flat_index(&self.schema.all_cards(), assignment.iter().copied())
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[self.index(assignment)]
    }

    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        for_each_assignment(&self.schema.all_cards(), |i, a| f(a, self.probs[i]));
    }
}

impl CountSource for JointTable {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn family_counts(&self, vars: &[VarId]) -> Result<Vec<f64>> {
        self.schema.check_ids(vars)?;
        let all: Vec<VarId> = (0..self.schema.len()).collect();
        project(&all, &self.schema.all_cards(), &self.probs, vars)
    }
}

/// Laplace-smoothed empirical joint, capped at [`DEFAULT_TABLE_CAP`] cells.
pub fn fit_joint(dataset: &Dataset, alpha: f64) -> Result<JointTable> {
    fit_joint_capped(dataset, alpha, DEFAULT_TABLE_CAP)
}

pub fn fit_joint_capped(dataset: &Dataset, alpha: f64, cap: f64) -> Result<JointTable> {
    check_alpha(alpha)?;
    let cards = dataset.schema.all_cards();
    let cells = checked_space(&cards, cap)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = vec![0.0; cells];
    for row in &dataset.rows {
        counts[flat_index(&cards, row.iter().copied())] += 1.0;
    }
    let denom = dataset.len() as f64 + alpha * cells as f64;
    let probs = counts.into_iter().map(|n| (n + alpha) / denom).collect();
    JointTable::new(dataset.schema.clone(), probs)
}

/// Sums out every variable not in `vars`. The result's schema lists `vars`
/// in the given order, so its variable ids are positions in `vars`.
pub fn marginal(table: &JointTable, vars: &[VarId]) -> Result<JointTable> {
    let schema = table.schema.select(vars)?;
    let probs = table.family_counts(vars)?;
    let sum: f64 = probs.iter().sum();
    JointTable::new(schema, probs.into_iter().map(|p| p / sum).collect())
}

/// Distribution over the joint values of `target` given a partial
/// assignment, row-major in `target` order.
pub fn conditional(table: &JointTable, target: &[VarId], given: &[(VarId, usize)]) -> Result<Vec<f64>> {
    let given_vars: Vec<VarId> = given.iter().map(|g| g.0).collect();
    let mut all = target.to_vec();
    all.extend(&given_vars);
    table.schema.check_ids(&all)?;
    for &(v, x) in given {
        let k = table.schema.cardinality(v);
        if x >= k {
            return Err(Error::ValueOutOfDomain { var: table.schema.vars[v].name.clone(), value: x, cardinality: k });
        }
    }
    let joint = table.family_counts(&all)?;
    let target_size = space_size(&table.schema.cards(target));
    let given_cards = table.schema.cards(&given_vars);
    let g = flat_index(&given_cards, given.iter().map(|x| x.1));
    let given_size = space_size(&given_cards);
    let row: Vec<f64> = (0..target_size).map(|t| joint[t * given_size + g]).collect();
    let mass: f64 = row.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroSupport);
    }
    Ok(row.into_iter().map(|p| p / mass).collect())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::Malformed(format!("smoothing alpha must be finite and nonnegative, got {alpha}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMode {
    /// `alpha` pseudo-counts in every cell of each derived table.
    #[default]
    PerTable,
    /// Pseudo-counts are the marginal image of `alpha` per cell of the full
    /// joint space, so derived tables agree exactly with the marginals of
    /// [`fit_joint`] at the same `alpha`.
    JointConsistent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub alpha: f64,
    pub mode: SmoothingMode,
}

impl Smoothing {
    pub fn per_table(alpha: f64) -> Self {
        Smoothing { alpha, mode: SmoothingMode::PerTable }
    }

    pub fn none() -> Self {
        Smoothing::per_table(0.0)
    }
}

/// Counts for every feature and unordered feature pair, jointly with the
/// conditioning variables (class and/or cutset).
#[derive(Clone, Debug)]
pub struct PairStats {
    schema: Schema,
    conditioning: Vec<VarId>,
    cond_cards: Vec<usize>,
    features: Vec<VarId>,
    total: f64,
    cond_counts: Vec<f64>,
    /// Per feature position: `[g][x]`.
    single: Vec<Vec<f64>>,
    /// Per pair `(i, j)` of feature positions with `i < j`: `[g][x_i][x_j]`.
    pair: Vec<Vec<f64>>,
    smoothing: Smoothing,
}

/// Pairwise statistics from data with per-table Laplace smoothing and the
/// default conditioning-space cap.
pub fn pairwise_stats(dataset: &Dataset, conditioning: &[VarId], alpha: f64) -> Result<PairStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    PairStats::from_source(
        dataset,
        conditioning,
        Smoothing::per_table(alpha),
        DEFAULT_CONDITIONING_CAP,
        Execution::default(),
    )
}

impl PairStats {
    /// Builds statistics for all features (variables with role feature that
    /// are not conditioning variables) from any count source.
    pub fn from_source(
        source: &dyn CountSource,
        conditioning: &[VarId],
        smoothing: Smoothing,
        cap: usize,
        exec: Execution,
    ) -> Result<PairStats> {
        check_alpha(smoothing.alpha)?;
        let schema = source.schema().clone();
        schema.check_ids(conditioning)?;
        let size: f64 = conditioning.iter().map(|&v| schema.cardinality(v) as f64).product();
        if size > cap as f64 {
            return Err(Error::ConditioningSpaceTooLarge { size, cap });
        }
        let cond_cards = schema.cards(conditioning);
        let features: Vec<VarId> =
            schema.features().into_iter().filter(|f| !conditioning.contains(f)).collect();

        let cond_counts = source.family_counts(conditioning)?;
        let total: f64 = cond_counts.iter().sum();

        let family = |extra: &[VarId]| {
            let mut vars = conditioning.to_vec();
            vars.extend_from_slice(extra);
            source.family_counts(&vars)
        };
        let single = exec
            .map(&features, |&f| family(&[f]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(VarId, VarId)> = (0..features.len())
            .flat_map(|i| (i + 1..features.len()).map(move |j| (i, j)))
            .map(|(i, j)| (features[i], features[j]))
            .collect();
        let pair = exec
            .map(&pairs, |&(a, b)| family(&[a, b]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        Ok(PairStats { schema, conditioning: conditioning.to_vec(), cond_cards, features, total, cond_counts, single, pair, smoothing })
    }

    /// Exact (unsmoothed) statistics of a dense table.
    pub fn from_joint(table: &JointTable, conditioning: &[VarId]) -> Result<PairStats> {
        PairStats::from_source(table, conditioning, Smoothing::none(), DEFAULT_CONDITIONING_CAP, Execution::default())
    }

    /// Re-conditions on a subset of the current conditioning variables.
    pub fn project(&self, conditioning: &[VarId]) -> Result<PairStats> {
        if let Some(v) = conditioning.iter().find(|v| !self.conditioning.contains(v)) {
            return Err(Error::UnknownVariable(format!("{} is not a conditioning variable of these statistics", self.schema.vars[*v].name)));
        }
        PairStats::from_source(self, conditioning, self.smoothing, usize::MAX, Execution::Sequential)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn conditioning(&self) -> &[VarId] {
        &self.conditioning
    }

    pub fn conditioning_cards(&self) -> &[usize] {
        &self.cond_cards
    }

    pub fn conditioning_size(&self) -> usize {
        space_size(&self.cond_cards)
    }

    pub fn features(&self) -> &[VarId] {
        &self.features
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn alpha(&self) -> f64 {
        self.smoothing.alpha
    }

    pub fn conditioning_counts(&self) -> &[f64] {
        &self.cond_counts
    }

    pub(crate) fn feature_pos(&self, v: VarId) -> Result<usize> {
        self.features.iter().position(|&f| f == v).ok_or_else(|| {
            Error::UnknownVariable(self.schema.vars.get(v).map_or_else(|| v.to_string(), |x| x.name.clone()))
        })
    }

    fn pair_slot(&self, i: usize, j: usize) -> usize {
        // index of (i, j), i < j, in row-major upper-triangle order
        let n = self.features.len();
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Raw counts `[g][x_i][x_j]`, oriented as requested.
    pub fn pair_counts(&self, xi: VarId, xj: VarId) -> Result<Vec<f64>> {
        let (pi, pj) = (self.feature_pos(xi)?, self.feature_pos(xj)?);
        if pi == pj {
            return Err(Error::Overlap(format!("pair ({xi}, {xj})")));
        }
        let (a, b) = (pi.min(pj), pi.max(pj));
        let table = &self.pair[self.pair_slot(a, b)];
        if pi < pj {
            return Ok(table.clone());
        }
        let (ka, kb) = (self.schema.cardinality(self.features[a]), self.schema.cardinality(self.features[b]));
        let mut out = vec![0.0; table.len()];
        for g in 0..self.conditioning_size() {
            for u in 0..ka {
                for w in 0..kb {
                    out[(g * kb + w) * ka + u] = table[(g * ka + u) * kb + w];
                }
            }
        }
        Ok(out)
    }

    /// Raw counts `[g][x]`.
    pub fn single_counts(&self, x: VarId) -> Result<&[f64]> {
        Ok(&self.single[self.feature_pos(x)?])
    }

    fn pseudo_count(&self, table_cells: usize) -> f64 {
        match self.smoothing.mode {
            SmoothingMode::PerTable => self.smoothing.alpha,
            SmoothingMode::JointConsistent => self.smoothing.alpha * self.schema.cells() / table_cells as f64,
        }
    }

    /// Smoothed `p(g)` over conditioning configurations.
    pub fn conditioning_probs(&self) -> Vec<f64> {
        let k = self.conditioning_size();
        let a = self.pseudo_count(k);
        let denom = self.total + a * k as f64;
        if denom <= 0.0 {
            return vec![0.0; k];
        }
        self.cond_counts.iter().map(|n| (n + a) / denom).collect()
    }

    /// Smoothed `p(x_i, x_j | g)` laid out `[g][x_i][x_j]`; rows for
    /// configurations without support are all zero.
    pub fn pair_probs(&self, xi: VarId, xj: VarId) -> Result<Vec<f64>> {
        let counts = self.pair_counts(xi, xj)?;
        let cells = self.schema.cardinality(xi) * self.schema.cardinality(xj);
        let a = self.pseudo_count(cells * self.conditioning_size());
        Ok(normalize_rows(counts, cells, a))
    }

    /// Smoothed `p(x | g)` laid out `[g][x]`.
    pub fn single_probs(&self, x: VarId) -> Result<Vec<f64>> {
        let counts = self.single_counts(x)?.to_vec();
        let cells = self.schema.cardinality(x);
        let a = self.pseudo_count(cells * self.conditioning_size());
        Ok(normalize_rows(counts, cells, a))
    }

    /// Smoothed `p(g, x_i, x_j)` laid out `[g][x_i][x_j]`.
    pub fn pair_joint_probs(&self, xi: VarId, xj: VarId) -> Result<Vec<f64>> {
        let cond = self.conditioning_probs();
        let mut p = self.pair_probs(xi, xj)?;
        let cells = p.len() / cond.len();
        for (g, row) in p.chunks_mut(cells).enumerate() {
            row.iter_mut().for_each(|v| *v *= cond[g]);
        }
        Ok(p)
    }
}

fn normalize_rows(mut counts: Vec<f64>, width: usize, pseudo: f64) -> Vec<f64> {
    for row in counts.chunks_mut(width) {
        let denom: f64 = row.iter().sum::<f64>() + pseudo * width as f64;
        if denom > 0.0 {
            row.iter_mut().for_each(|v| *v = (*v + pseudo) / denom);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    counts
}

impl CountSource for PairStats {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Available for families made of conditioning variables plus at most
    /// two features.
    fn family_counts(&self, vars: &[VarId]) -> Result<Vec<f64>> {
        self.schema.check_ids(vars)?;
        let mut feats: Vec<usize> = Vec::new();
        for &v in vars {
            if !self.conditioning.contains(&v) {
                match self.features.iter().position(|&f| f == v) {
                    Some(p) => feats.push(p),
                    None => return Err(Error::FamilyUnavailable(vars.to_vec())),
                }
            }
        }
        feats.sort_unstable();
        let mut src = self.conditioning.clone();
        src.extend(feats.iter().map(|&p| self.features[p]));
        let data: &[f64] = match feats.as_slice() {
            [] => &self.cond_counts,
            [p] => &self.single[*p],
            [p, q] => &self.pair[self.pair_slot(*p, *q)],
            _ => return Err(Error::FamilyUnavailable(vars.to_vec())),
        };
        project(&src, &self.schema.cards(&src), data, vars)
    }
}
