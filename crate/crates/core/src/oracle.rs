//! Brute-force checks: exhaustive tree search for the divergence-optimal
//! skeleton, and a grid scan of the weak-transitivity property for two
//! binary features and a binary class.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::model_table;
use crate::exec::Execution;
use crate::info::{kl_divergence_slices, weight_matrix, EdgeWeightScheme};
use crate::learn::{
    learn_with_cutset, max_weight_spanning_tree, total_weight, ConditionalTreeModel, CutsetModel, TreeStructure,
    ZeroEdges,
};
use crate::model::DiscreteModel;
use crate::tables::{marginal, JointTable, PairStats, VarId};

pub const MIN_ORACLE_NODES: usize = 2;
pub const MAX_ORACLE_NODES: usize = 7;

type Edges = Vec<(usize, usize)>;

/// Decodes a Prüfer sequence over `0..n` into a sorted edge list.
pub fn prufer_decode(seq: &[usize], n: usize) -> Edges {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    if rest.len() == 2 {
        edges.push((rest[0], rest[1]));
    }
    edges.sort_unstable();
    edges
}

fn check_size(n: usize) -> Result<()> {
    if !(MIN_ORACLE_NODES..=MAX_ORACLE_NODES).contains(&n) {
        return Err(Error::OracleSize { got: n, min: MIN_ORACLE_NODES, max: MAX_ORACLE_NODES });
    }
    Ok(())
}

/// Number of labeled trees on `n` nodes.
pub fn tree_count(n: usize) -> Result<usize> {
    check_size(n)?;
    Ok(n.pow(n as u32 - 2))
}

/// The `index`-th skeleton: Prüfer digits base `n`, most significant first.
pub fn tree_by_index(n: usize, index: usize) -> Edges {
    let mut seq = vec![0; n - 2];
    let mut r = index;
    for d in seq.iter_mut().rev() {
        *d = r % n;
        r /= n;
    }
    prufer_decode(&seq, n)
}

/// All `n^(n−2)` labeled trees on `0..n`, in Prüfer order.
pub fn enumerate_spanning_trees(n: usize) -> Result<Vec<Edges>> {
    let count = tree_count(n)?;
    Ok((0..count).map(|i| tree_by_index(n, i)).collect())
}

fn skeleton_count(n: usize) -> Result<usize> {
    match n {
        1 => Ok(1),
        _ => tree_count(n),
    }
}

fn skeleton(n: usize, index: usize) -> Edges {
    if n < 2 {
        Vec::new()
    } else {
        tree_by_index(n, index)
    }
}

/// Exact statistics plus the features and reference distribution a scheme
/// is scored against.
struct Instance {
    stats: PairStats,
    features: Vec<VarId>,
    /// Reference restricted to the scheme's class subset (renormalized).
    reference: JointTable,
}

fn instance(truth: &JointTable, scheme: &EdgeWeightScheme) -> Result<Instance> {
    let schema = truth.schema();
    let (conditioning, subset) = match scheme {
        EdgeWeightScheme::Cutset(vars) => (vars.clone(), None),
        EdgeWeightScheme::PerClass(c0) => (vec![schema.require_class()?], Some(vec![*c0])),
        EdgeWeightScheme::Conditional(s) | EdgeWeightScheme::WongPoon(s) => (vec![schema.require_class()?], Some(s.clone())),
    };
    let stats = PairStats::from_joint(truth, &conditioning)?;
    let features = stats.features().to_vec();
    if features.is_empty() || features.len() > MAX_ORACLE_NODES {
        return Err(Error::OracleSize { got: features.len(), min: 1, max: MAX_ORACLE_NODES });
    }
    let reference = match subset {
        None => truth.clone(),
        Some(s) => {
            let class = conditioning[0];
            let s = crate::info::check_subset(&s, schema.cardinality(class))?;
            let mut probs = truth.probs().to_vec();
            let mut i = 0;
            truth.for_each(|a, _| {
                if !s.contains(&a[class]) {
                    probs[i] = 0.0;
                }
                i += 1;
            });
            JointTable::from_weights(schema.clone(), probs).map_err(|_| Error::ZeroSupport)?
        }
    };
    Ok(Instance { stats, features, reference })
}

fn subset_of(scheme: &EdgeWeightScheme) -> Option<Vec<usize>> {
    match scheme {
        EdgeWeightScheme::PerClass(c0) => Some(vec![*c0]),
        EdgeWeightScheme::Conditional(s) | EdgeWeightScheme::WongPoon(s) => Some(s.clone()),
        EdgeWeightScheme::Cutset(_) => None,
    }
}

fn fit_for(inst: &Instance, scheme: &EdgeWeightScheme, structure: TreeStructure) -> Result<Box<dyn DiscreteModel>> {
    Ok(match subset_of(scheme) {
        Some(s) => Box::new(ConditionalTreeModel::fit(&inst.stats, structure, &s)?),
        None => Box::new(CutsetModel::fit(&inst.stats, structure)?),
    })
}

fn divergence_of(model: &dyn DiscreteModel, reference: &JointTable) -> Result<f64> {
    let q = model_table(model, reference.schema())?;
    let p = marginal(reference, &model.variables())?;
    Ok(kl_divergence_slices(p.probs(), q.probs()))
}

fn skeleton_divergence(inst: &Instance, scheme: &EdgeWeightScheme, edges: &[(usize, usize)]) -> Result<f64> {
    let structure = TreeStructure::from_skeleton(&inst.features, edges)?;
    divergence_of(&*fit_for(inst, scheme, structure)?, &inst.reference)
}

fn to_vars(features: &[VarId], edges: &[(usize, usize)]) -> Vec<(VarId, VarId)> {
    let mut e: Vec<(VarId, VarId)> = edges
        .iter()
        .map(|&(a, b)| (features[a].min(features[b]), features[a].max(features[b])))
        .collect();
    e.sort_unstable();
    e
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestTree {
    /// Skeleton edges as sorted `(min, max)` variable-id pairs.
    pub edges: Vec<(VarId, VarId)>,
    pub divergence: f64,
    pub skeletons: usize,
}

const TIE_TOL: f64 = 1e-12;

/// Fits exact tables to every skeleton over the instance's features and
/// keeps the one of least divergence from the (class-restricted) truth.
/// Ties go to the lexicographically smallest edge list. Every scheme is
/// scored by the divergence of the model family it parameterizes.
pub fn exact_best_tree(truth: &JointTable, scheme: &EdgeWeightScheme, exec: Execution) -> Result<BestTree> {
    let inst = instance(truth, scheme)?;
    let n = inst.features.len();
    let count = skeleton_count(n)?;
    let scored = exec.map_range(0..count, |i| {
        let edges = skeleton(n, i);
        skeleton_divergence(&inst, scheme, &edges).map(|d| (to_vars(&inst.features, &edges), d))
    });
    let mut best: Option<(Vec<(VarId, VarId)>, f64)> = None;
    for item in scored {
        let (edges, d) = item?;
        best = match best {
            None => Some((edges, d)),
            Some((be, bd)) => {
                if d < bd - TIE_TOL || ((d - bd).abs() <= TIE_TOL && edges < be) {
                    Some((edges, d))
                } else {
                    Some((be, bd))
                }
            }
        };
    }
    let (edges, divergence) = best.unwrap();
    Ok(BestTree { edges, divergence, skeletons: count })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub instance: String,
    pub best_edges: Vec<(VarId, VarId)>,
    pub best_divergence: f64,
    pub learner_edges: Vec<(VarId, VarId)>,
    pub learner_divergence: f64,
    /// `learner − best`; negative values beyond rounding indicate a bug.
    pub gap: f64,
}

/// The spanning-tree learner's skeleton for `scheme` on exact statistics.
fn learner_structure(inst: &Instance, scheme: &EdgeWeightScheme) -> Result<TreeStructure> {
    match scheme {
        EdgeWeightScheme::Cutset(vars) => Ok(learn_with_cutset(&inst.stats, vars)?.structure),
        _ => {
            let w = weight_matrix(&inst.stats, &inst.features, scheme, Execution::Sequential)?;
            Ok(max_weight_spanning_tree(&w, ZeroEdges::Keep)?.relabel(&inst.features))
        }
    }
}

/// Compares the learner's tree with the exhaustive optimum.
pub fn certify(truth: &JointTable, scheme: &EdgeWeightScheme, exec: Execution) -> Result<OracleVerdict> {
    let best = exact_best_tree(truth, scheme, exec)?;
    let inst = instance(truth, scheme)?;
    let structure = learner_structure(&inst, scheme)?;
    let learner_edges = structure.edges();
    let learner_divergence = divergence_of(&*fit_for(&inst, scheme, structure)?, &inst.reference)?;
    Ok(OracleVerdict {
        instance: format!("{} features, scheme {}", inst.features.len(), scheme.describe()),
        gap: learner_divergence - best.divergence,
        best_edges: best.edges,
        best_divergence: best.divergence,
        learner_edges,
        learner_divergence,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub skeletons: usize,
    /// Least-squares fit `divergence ≈ intercept + slope · weight`.
    pub intercept: f64,
    pub slope: f64,
    pub max_residual: f64,
}

/// Total spanning-tree weight against exact divergence over every skeleton.
pub fn weight_divergence_duality(truth: &JointTable, scheme: &EdgeWeightScheme, exec: Execution) -> Result<DualityReport> {
    let inst = instance(truth, scheme)?;
    let n = inst.features.len();
    let count = skeleton_count(n)?;
    let w = weight_matrix(&inst.stats, &inst.features, scheme, Execution::Sequential)?;
    let points = exec
        .map_range(0..count, |i| {
            let edges = skeleton(n, i);
            skeleton_divergence(&inst, scheme, &edges).map(|d| (total_weight(&w, &edges), d))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let m = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / m, b + p.1 / m));
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let max_residual = points.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(DualityReport { skeletons: count, intercept, slope, max_residual })
}

/// Parameters `(p(c=1), p(x1=1|c=0), p(x1=1|c=1), p(x2=1|c=0), p(x2=1|c=1))`
/// of a binary distribution with `x1 ⊥ x2 | c`.
pub type ScanPoint = [f64; 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointOutcome {
    /// Marginal independence of `x1` and `x2` fails.
    Excluded,
    /// Constraint holds and one feature is independent of everything else.
    Consistent,
    Violator,
}

/// `p(c, x1, x2)` laid out `[c][x1][x2]`.
pub fn scan_joint(p: &ScanPoint) -> [f64; 8] {
    let bern = |q: f64, v: usize| if v == 1 { q } else { 1.0 - q };
    let mut out = [0.0; 8];
    for c in 0..2 {
        let pc = bern(p[0], c);
        for a in 0..2 {
            for b in 0..2 {
                out[c * 4 + a * 2 + b] = pc * bern(p[1 + c], a) * bern(p[3 + c], b);
            }
        }
    }
    out
}

/// Largest `|p(x, rest) − p(x) p(rest)|` for `x` at `feature` (1 or 2).
fn independence_gap(j: &[f64; 8], feature: usize) -> f64 {
    let value = |c: usize, a: usize, b: usize| j[c * 4 + a * 2 + b];
    let mut px = [0.0; 2];
    let mut prest = [[0.0; 2]; 2];
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let (x, other) = if feature == 1 { (a, b) } else { (b, a) };
                px[x] += value(c, a, b);
                prest[c][other] += value(c, a, b);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let (x, other) = if feature == 1 { (a, b) } else { (b, a) };
                worst = worst.max((value(c, a, b) - px[x] * prest[c][other]).abs());
            }
        }
    }
    worst
}

pub fn marginal_dependence(j: &[f64; 8]) -> f64 {
    let mut p12 = [[0.0; 2]; 2];
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                p12[a][b] += j[c * 4 + a * 2 + b];
            }
        }
    }
    let p1 = [p12[0][0] + p12[0][1], p12[1][0] + p12[1][1]];
    let p2 = [p12[0][0] + p12[1][0], p12[0][1] + p12[1][1]];
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            worst = worst.max((p12[a][b] - p1[a] * p2[b]).abs());
        }
    }
    worst
}

pub fn scan_point(p: &ScanPoint, eps_constraint: f64, eps_conclusion: f64) -> PointOutcome {
    let j = scan_joint(p);
    if marginal_dependence(&j) > eps_constraint {
        PointOutcome::Excluded
    } else if independence_gap(&j, 1) <= eps_conclusion || independence_gap(&j, 2) <= eps_conclusion {
        PointOutcome::Consistent
    } else {
        PointOutcome::Violator
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub step: f64,
    pub eps_constraint: f64,
    pub eps_conclusion: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { step: 0.05, eps_constraint: 1e-6, eps_conclusion: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub grid_points: u64,
    pub constrained: u64,
    pub violator_count: u64,
    /// The first violators in grid order (at most [`MAX_REPORTED_VIOLATORS`]).
    pub violators: Vec<ScanPoint>,
}

pub const MAX_REPORTED_VIOLATORS: usize = 100;

/// Sweeps the five parameters over `{0, step, 2·step, …, 1}` and checks
/// that every point satisfying marginal independence makes one feature
/// independent of the class and the other feature.
pub fn weak_transitivity_scan(config: &ScanConfig, exec: Execution) -> Result<ScanReport> {
    if !(config.step > 0.0 && config.step <= 1.0) {
        return Err(Error::Malformed(format!("grid step {} outside (0, 1]", config.step)));
    }
    let m = (1.0 / config.step).round() as usize;
    let axis: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let k = axis.len();
    let slabs = exec.map_range(0..k * k, |outer| {
        let (mut constrained, mut violators, mut listed) = (0u64, 0u64, Vec::new());
        let (i0, i1) = (outer / k, outer % k);
        for &a in &axis {
            for &b in &axis {
                for &c in &axis {
                    let p = [axis[i0], axis[i1], a, b, c];
                    match scan_point(&p, config.eps_constraint, config.eps_conclusion) {
                        PointOutcome::Excluded => {}
                        PointOutcome::Consistent => constrained += 1,
                        PointOutcome::Violator => {
                            constrained += 1;
                            violators += 1;
                            if listed.len() < MAX_REPORTED_VIOLATORS {
                                listed.push(p);
                            }
                        }
                    }
                }
            }
        }
        (constrained, violators, listed)
    });
    let mut report = ScanReport {
        config: config.clone(),
        grid_points: (k as u64).pow(5),
        constrained: 0,
        violator_count: 0,
        violators: Vec::new(),
    };
    for (c, v, listed) in slabs {
        report.constrained += c;
        report.violator_count += v;
        let room = MAX_REPORTED_VIOLATORS - report.violators.len();
        report.violators.extend(listed.into_iter().take(room));
    }
    Ok(report)
}
