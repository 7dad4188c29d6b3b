//! Plug-in information measures in bits, and the edge-weight schemes used
//! by the tree learners.
//!
//! `0 · log 0` and `0 · log(0/0)` are taken as 0 throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::tables::{CountSource, JointTable, PairStats, VarId};

const NORMALIZATION_TOL: f64 = 1e-9;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub(crate) fn entropy_unchecked(dist: &[f64]) -> f64 {
    -dist.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// Shannon entropy of a normalized distribution.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL || dist.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::NotNormalized(sum));
    }
    Ok(entropy_unchecked(dist).max(0.0))
}

/// Mutual information of a joint matrix `[a][b]` (any positive scale).
pub(crate) fn mi_of_matrix(m: &[f64], ka: usize, kb: usize) -> f64 {
    let total: f64 = m.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut pa = vec![0.0; ka];
    let mut pb = vec![0.0; kb];
    for a in 0..ka {
        for b in 0..kb {
            let v = m[a * kb + b] / total;
            pa[a] += v;
            pb[b] += v;
        }
    }
    let mut mi = 0.0;
    for a in 0..ka {
        for b in 0..kb {
            let p = m[a * kb + b] / total;
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `Σ_g w(g) · I_g` where `cube` is laid out `[g][a][b]` and each `g`-slice
/// is normalized on its own.
fn weighted_mi(cube: &[f64], weights: &[f64], ka: usize, kb: usize) -> f64 {
    cube.chunks(ka * kb)
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(slice, &w)| w * mi_of_matrix(slice, ka, kb))
        .sum()
}

fn disjoint(a: &[VarId], b: &[VarId]) -> Result<()> {
    if let Some(v) = a.iter().find(|v| b.contains(v)) {
        return Err(Error::Overlap(format!("variable {v} appears on both sides")));
    }
    Ok(())
}

/// Joint entropy of the listed variables.
pub fn joint_entropy(table: &JointTable, vars: &[VarId]) -> Result<f64> {
    Ok(entropy_unchecked(&table.family_counts(vars)?).max(0.0))
}

/// `H(target | given) = Σ_g p(g) H(target | given = g)`.
pub fn conditional_entropy(table: &JointTable, target: &[VarId], given: &[VarId]) -> Result<f64> {
    disjoint(target, given)?;
    let mut vars = given.to_vec();
    vars.extend_from_slice(target);
    let joint = table.family_counts(&vars)?;
    let width: usize = table.schema().cards(target).iter().product();
    let mut h = 0.0;
    for row in joint.chunks(width) {
        let pg: f64 = row.iter().sum();
        if pg > 0.0 {
            h -= row.iter().map(|&p| plogp(p / pg)).sum::<f64>() * pg;
        }
    }
    Ok(h.max(0.0))
}

/// `I(A; B | G)` between variable sets, evaluated directly from the joint.
pub fn conditional_mutual_information_sets(
    table: &JointTable,
    a: &[VarId],
    b: &[VarId],
    given: &[VarId],
) -> Result<f64> {
    disjoint(a, b)?;
    disjoint(a, given)?;
    disjoint(b, given)?;
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let mut vars = given.to_vec();
    vars.extend_from_slice(a);
    vars.extend_from_slice(b);
    let cube = table.family_counts(&vars)?;
    let ka: usize = table.schema().cards(a).iter().product();
    let kb: usize = table.schema().cards(b).iter().product();
    let weights: Vec<f64> = cube.chunks(ka * kb).map(|s| s.iter().sum()).collect();
    Ok(weighted_mi(&cube, &weights, ka, kb))
}

pub fn mutual_information(table: &JointTable, xi: VarId, xj: VarId) -> Result<f64> {
    if xi == xj {
        return Err(Error::Overlap(format!("mutual information of variable {xi} with itself")));
    }
    conditional_mutual_information_sets(table, &[xi], &[xj], &[])
}

pub fn conditional_mutual_information(table: &JointTable, xi: VarId, xj: VarId, given: &[VarId]) -> Result<f64> {
    if xi == xj {
        return Err(Error::Overlap(format!("mutual information of variable {xi} with itself")));
    }
    conditional_mutual_information_sets(table, &[xi], &[xj], given)
}

/// `Σ_g p(g) I(x_i; x_j | g)` from smoothed pairwise statistics, over all
/// conditioning configurations of `stats`.
pub fn stats_conditional_mutual_information(stats: &PairStats, xi: VarId, xj: VarId) -> Result<f64> {
    let cube = stats.pair_probs(xi, xj)?;
    let (ki, kj) = (stats.schema().cardinality(xi), stats.schema().cardinality(xj));
    Ok(weighted_mi(&cube, &stats.conditioning_probs(), ki, kj))
}

/// `D(p ‖ q)` in bits. Returns `f64::INFINITY` when `p` puts mass where
/// `q` has none.
pub fn kl_divergence(p: &JointTable, q: &JointTable) -> Result<f64> {
    if !p.schema().compatible(q.schema()) {
        return Err(Error::SchemaMismatch("divergence between tables over different schemas".into()));
    }
    Ok(kl_divergence_slices(p.probs(), q.probs()))
}

pub(crate) fn kl_divergence_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// Which mixture of per-configuration mutual informations an edge weighs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum EdgeWeightScheme {
    /// `I(x_i; x_j | c = c0)`.
    PerClass(usize),
    /// `Σ_{c∈S} p(c | S) · I(x_i; x_j | c)`.
    Conditional(Vec<usize>),
    /// `Σ_y p(y) · I(x_i; x_j | y)` over joint cutset assignments; the
    /// listed variables must be exactly the statistics' conditioning set.
    Cutset(Vec<VarId>),
    /// Conditional weight minus `I(x_i; x_j)` under the `S`-restricted
    /// distribution. May be negative.
    WongPoon(Vec<usize>),
}

impl EdgeWeightScheme {
    pub fn all_classes(stats: &PairStats) -> Result<Self> {
        let class = class_conditioning(stats)?;
        Ok(EdgeWeightScheme::Conditional((0..stats.schema().cardinality(class)).collect()))
    }

    pub fn describe(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self {
            EdgeWeightScheme::PerClass(c) => format!("per-class({c})"),
            EdgeWeightScheme::Conditional(s) => format!("conditional({})", list(s)),
            EdgeWeightScheme::Cutset(v) => format!("cutset({})", list(v)),
            EdgeWeightScheme::WongPoon(s) => format!("wong-poon({})", list(s)),
        }
    }
}

/// The class variable, when it is the only conditioning variable.
pub(crate) fn class_conditioning(stats: &PairStats) -> Result<VarId> {
    let class = stats.schema().require_class()?;
    if stats.conditioning() != [class] {
        return Err(Error::SchemaMismatch(
            "class-subset weights need statistics conditioned on the class variable alone".into(),
        ));
    }
    Ok(class)
}

/// Validated, sorted, deduplicated class subset.
pub(crate) fn check_subset(subset: &[usize], classes: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidClassSubset("empty".into()));
    }
    if let Some(c) = subset.iter().find(|&&c| c >= classes) {
        return Err(Error::InvalidClassSubset(format!("class value {c} outside domain of size {classes}")));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Conditioning weights `p(c | S)` (zero outside `S`).
fn subset_weights(stats: &PairStats, subset: &[usize]) -> Result<Vec<f64>> {
    let pc = stats.conditioning_probs();
    let mass: f64 = subset.iter().map(|&c| pc[c]).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroSupport);
    }
    let mut w = vec![0.0; pc.len()];
    for &c in subset {
        w[c] = pc[c] / mass;
    }
    Ok(w)
}

/// Conditioning weights for a validated scheme, plus whether the marginal
/// mutual information is subtracted.
fn scheme_weights(stats: &PairStats, scheme: &EdgeWeightScheme) -> Result<(Vec<f64>, bool)> {
    match scheme {
        EdgeWeightScheme::PerClass(c0) => {
            let class = class_conditioning(stats)?;
            let s = check_subset(&[*c0], stats.schema().cardinality(class))?;
            Ok((subset_weights(stats, &s)?, false))
        }
        EdgeWeightScheme::Conditional(subset) | EdgeWeightScheme::WongPoon(subset) => {
            let class = class_conditioning(stats)?;
            let s = check_subset(subset, stats.schema().cardinality(class))?;
            Ok((subset_weights(stats, &s)?, matches!(scheme, EdgeWeightScheme::WongPoon(_))))
        }
        EdgeWeightScheme::Cutset(vars) => {
            let mut a = vars.clone();
            let mut b = stats.conditioning().to_vec();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(Error::SchemaMismatch("cutset scheme must match the statistics' conditioning variables".into()));
            }
            Ok((stats.conditioning_probs(), false))
        }
    }
}

fn weight_with(stats: &PairStats, xi: VarId, xj: VarId, weights: &[f64], subtract_marginal: bool) -> Result<f64> {
    if xi == xj {
        return Err(Error::Overlap(format!("edge weight of variable {xi} with itself")));
    }
    let cube = stats.pair_probs(xi, xj)?;
    let (ki, kj) = (stats.schema().cardinality(xi), stats.schema().cardinality(xj));
    let conditional = weighted_mi(&cube, weights, ki, kj);
    if !subtract_marginal {
        return Ok(conditional);
    }
    let mut restricted = vec![0.0; ki * kj];
    for (slice, &w) in cube.chunks(ki * kj).zip(weights) {
        for (r, &p) in restricted.iter_mut().zip(slice) {
            *r += w * p;
        }
    }
    Ok(conditional - mi_of_matrix(&restricted, ki, kj))
}

pub fn edge_weight(stats: &PairStats, xi: VarId, xj: VarId, scheme: &EdgeWeightScheme) -> Result<f64> {
    let (weights, subtract) = scheme_weights(stats, scheme)?;
    weight_with(stats, xi, xj, &weights, subtract)
}

/// Symmetric matrix of edge weights over `features` (indexed by position),
/// with zeros on the diagonal. Pairs are evaluated independently.
pub fn weight_matrix(
    stats: &PairStats,
    features: &[VarId],
    scheme: &EdgeWeightScheme,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let (weights, subtract) = scheme_weights(stats, scheme)?;
    let n = features.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = exec.map(&pairs, |&(i, j)| weight_with(stats, features[i], features[j], &weights, subtract));
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), w) in pairs.iter().zip(values) {
        let w = w?;
        m[i][j] = w;
        m[j][i] = w;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{Role, Schema, Variable};

    fn xor_table() -> JointTable {
        // x1, x2 uniform independent; c = x1 xor x2
        let schema = Schema::features_and_class(&[2, 2], 2).unwrap();
        let mut probs = vec![0.0; 8];
        for a in 0..2 {
            for b in 0..2 {
                probs[(a * 2 + b) * 2 + (a ^ b)] = 0.25;
            }
        }
        JointTable::new(schema, probs).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        // -(0.25 log2 0.25 + 0.75 log2 0.75) = 0.5 + 0.311278...
        assert!((entropy(&[0.25, 0.75]).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(matches!(entropy(&[0.5, 0.6]), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn conditional_entropy_cases() {
        let schema = Schema::new(vec![Variable::new("a", 2, Role::Feature), Variable::new("b", 2, Role::Feature)]).unwrap();
        let indep = JointTable::new(schema.clone(), vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        let ha = joint_entropy(&indep, &[0]).unwrap();
        assert!((conditional_entropy(&indep, &[0], &[1]).unwrap() - ha).abs() < 1e-12);

        let copy = JointTable::new(schema.clone(), vec![0.3, 0.0, 0.0, 0.7]).unwrap();
        assert!(conditional_entropy(&copy, &[1], &[0]).unwrap().abs() < 1e-15);

        let t = JointTable::new(schema, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let chain = joint_entropy(&t, &[0, 1]).unwrap() - joint_entropy(&t, &[1]).unwrap();
        assert!((conditional_entropy(&t, &[0], &[1]).unwrap() - chain).abs() < 1e-12);
        assert!(matches!(conditional_entropy(&t, &[0], &[0]), Err(Error::Overlap(_))));
    }

    #[test]
    fn mutual_information_cases() {
        let schema = Schema::new(vec![Variable::new("a", 2, Role::Feature), Variable::new("b", 2, Role::Feature)]).unwrap();
        let indep = JointTable::new(schema.clone(), vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        assert!(mutual_information(&indep, 0, 1).unwrap().abs() < 1e-15);
        let copy = JointTable::new(schema, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&copy, 0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(mutual_information(&copy, 1, 1).is_err());
        let xor = xor_table();
        assert!(mutual_information(&xor, 0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn xor_conditional_mutual_information() {
        let xor = xor_table();
        assert!((conditional_mutual_information(&xor, 0, 1, &[2]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            conditional_mutual_information(&xor, 0, 1, &[]).unwrap(),
            mutual_information(&xor, 0, 1).unwrap()
        );
        assert!(conditional_mutual_information(&xor, 0, 2, &[2]).is_err());
    }

    #[test]
    fn kl_examples() {
        let schema = Schema::new(vec![Variable::new("a", 2, Role::Feature)]).unwrap();
        let p = JointTable::new(schema.clone(), vec![0.5, 0.5]).unwrap();
        let q = JointTable::new(schema.clone(), vec![0.25, 0.75]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // 0.5 log2(2) + 0.5 log2(2/3)
        assert!((kl_divergence(&p, &q).unwrap() - 0.207_518_749_639_422).abs() < 1e-12);
        let point = JointTable::new(schema, vec![1.0, 0.0]).unwrap();
        assert_eq!(kl_divergence(&p, &point).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&point, &p).unwrap().is_finite());
    }

    #[test]
    fn xor_edge_weights() {
        let stats = PairStats::from_joint(&xor_table(), &[2]).unwrap();
        let all = EdgeWeightScheme::Conditional(vec![0, 1]);
        assert!((edge_weight(&stats, 0, 1, &all).unwrap() - 1.0).abs() < 1e-15);
        let wp = EdgeWeightScheme::WongPoon(vec![0, 1]);
        assert!((edge_weight(&stats, 0, 1, &wp).unwrap() - 1.0).abs() < 1e-15);
        assert!(edge_weight(&stats, 0, 1, &EdgeWeightScheme::PerClass(2)).is_err());
        assert!(edge_weight(&stats, 0, 1, &EdgeWeightScheme::Conditional(vec![])).is_err());
    }

    #[test]
    fn single_class_subset_matches_per_class() {
        let stats = PairStats::from_joint(&xor_table(), &[2]).unwrap();
        for c in 0..2 {
            let a = edge_weight(&stats, 0, 1, &EdgeWeightScheme::Conditional(vec![c])).unwrap();
            let b = edge_weight(&stats, 0, 1, &EdgeWeightScheme::PerClass(c)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn independent_distribution_has_zero_weights() {
        let schema = Schema::features_and_class(&[2, 3], 2).unwrap();
        let px = [0.3, 0.7];
        let py = [0.2, 0.3, 0.5];
        let pc = [0.4, 0.6];
        let mut probs = Vec::new();
        for a in px {
            for b in py {
                for c in pc {
                    probs.push(a * b * c);
                }
            }
        }
        let t = JointTable::new(schema, probs).unwrap();
        let stats = PairStats::from_joint(&t, &[2]).unwrap();
        for scheme in [
            EdgeWeightScheme::PerClass(1),
            EdgeWeightScheme::Conditional(vec![0, 1]),
            EdgeWeightScheme::Cutset(vec![2]),
            EdgeWeightScheme::WongPoon(vec![0, 1]),
        ] {
            assert!(edge_weight(&stats, 0, 1, &scheme).unwrap().abs() < 1e-12, "{scheme:?}");
        }
    }
}
