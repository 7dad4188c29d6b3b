//! Similarity networks: local conditional trees over class-value subsets,
//! merged into one global network with tied parameters.

mod cover;
mod dag;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use cover::{validate_cover, Cover, CoverReport};
pub use dag::{arc_reverse, impose_ordering, Dag};

use crate::cpt::{estimate_cpt, Cpt, Tying};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::mi_of_matrix;
use crate::learn::{class_of, learn_conditional_tree_over, prune_class_links, ConditionalTreeModel, TyingRecord, ZeroEdges};
use crate::model::DiscreteModel;
use crate::tables::{CountSource, PairStats, VarId};

/// A cover with one relevant-feature set and one pruned local network per
/// edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityNetwork {
    pub class_var: VarId,
    pub cover: Cover,
    pub features: Vec<Vec<VarId>>,
    pub locals: Vec<ConditionalTreeModel>,
}

/// Learns a conditional tree over `features[i]` restricted to each cover
/// edge, then prunes its class links at tolerance `eps`.
pub fn learn_local_networks(stats: &PairStats, cover: &Cover, features: &[Vec<VarId>], eps: f64) -> Result<SimilarityNetwork> {
    let class = class_of(stats)?;
    let stats = crate::learn::conditioned_on(stats, &[class])?;
    let report = validate_cover(cover, stats.schema().cardinality(class));
    if !report.is_valid() {
        return Err(Error::InvalidCover(report.describe()));
    }
    if features.len() != cover.edges.len() {
        return Err(Error::InvalidCover(format!(
            "{} cover edges but {} feature sets",
            cover.edges.len(),
            features.len()
        )));
    }
    if let Some(i) = features.iter().position(Vec::is_empty) {
        return Err(Error::InvalidCover(format!("edge {i} has no relevant features")));
    }
    let jobs: Vec<usize> = (0..cover.edges.len()).collect();
    let locals = Execution::default()
        .map(&jobs, |&i| {
            let mut f = features[i].clone();
            f.sort_unstable();
            f.dedup();
            let model = learn_conditional_tree_over(&stats, &f, &cover.edges[i], ZeroEdges::Keep)?;
            prune_class_links(&model, &*stats, eps)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityNetwork { class_var: class, cover: cover.clone(), features: features.to_vec(), locals })
}

/// The local network as an explicit DAG: class prior (zero outside the
/// cover edge), then one table per tree node.
pub fn local_dag(model: &ConditionalTreeModel) -> Result<Dag> {
    let card = model.prior.len();
    let mut cpts = vec![Cpt::new(model.class_var, card, vec![], vec![], model.prior.clone())?];
    cpts.extend(model.cpts.iter().cloned());
    Dag::new(cpts)
}

/// Class first, then every relevant feature by ascending index.
pub fn canonical_order(simnet: &SimilarityNetwork) -> Vec<VarId> {
    let mut f: Vec<VarId> = simnet.features.iter().flatten().copied().collect();
    f.sort_unstable();
    f.dedup();
    f.retain(|&v| v != simnet.class_var);
    let mut order = vec![simnet.class_var];
    order.extend(f);
    order
}

/// Every local network with its arcs reversed to agree with `order`.
pub fn order_local_networks(simnet: &SimilarityNetwork, order: &[VarId]) -> Result<Vec<Dag>> {
    if order.first() != Some(&simnet.class_var) {
        return Err(Error::InvalidStructure("the ordering must start with the class variable".into()));
    }
    let jobs: Vec<&ConditionalTreeModel> = simnet.locals.iter().collect();
    Execution::default()
        .map(&jobs, |m| impose_ordering(&local_dag(m)?, order))
        .into_iter()
        .collect()
}

/// A general DAG over the class and the relevant features, class at the
/// root, with per-feature tying of class values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalNetwork {
    pub class_var: VarId,
    pub dag: Dag,
    #[serde(with = "tying_entries")]
    pub tying: TyingRecord,
    pub alpha: f64,
}

impl GlobalNetwork {
    pub fn validate(&self) -> Result<()> {
        self.dag.validate()?;
        let class = self
            .dag
            .cpt(self.class_var)
            .ok_or_else(|| Error::InvalidStructure("class variable is not a node".into()))?;
        if !class.parents.is_empty() {
            return Err(Error::InvalidStructure("class variable must be a root".into()));
        }
        for (&v, groups) in &self.tying {
            if self.dag.cpt(v).is_none() || groups.len() != class.child_card {
                return Err(Error::InvalidStructure(format!("tying record for {v} does not fit the network")));
            }
        }
        Ok(())
    }
}

impl DiscreteModel for GlobalNetwork {
    fn domain(&self) -> Vec<(VarId, usize)> {
        self.dag.domain()
    }

    fn class_var(&self) -> Option<VarId> {
        Some(self.class_var)
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        self.dag.visit_factors(assignment, f)
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        self.dag.sample_into(rng, row)
    }
}

/// The tying record as a list of `{feature, groups}` entries, since model
/// files are internally tagged and cannot carry integer map keys.
mod tying_entries {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::learn::TyingRecord;
    use crate::tables::VarId;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        feature: VarId,
        groups: Vec<usize>,
    }

    pub fn serialize<S: Serializer>(t: &TyingRecord, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = t.iter().map(|(&feature, g)| Entry { feature, groups: g.clone() }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TyingRecord, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?.into_iter().map(|e| (e.feature, e.groups)).collect())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Group id per class value (numbered by first appearance): values of a
/// cover edge are merged whenever that edge's local network leaves `x` out
/// or does not link it to the class.
pub fn tying_partition(simnet: &SimilarityNetwork, locals: &[Dag], x: VarId, classes: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..classes).collect();
    for (edge, dag) in simnet.cover.edges.iter().zip(locals) {
        let linked = dag.cpt(x).is_some_and(|c| c.parents.contains(&simnet.class_var));
        if linked {
            continue;
        }
        for w in edge.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut ids = vec![usize::MAX; classes];
    let mut next = 0;
    (0..classes)
        .map(|c| {
            let r = find(&mut parent, c);
            if ids[r] == usize::MAX {
                ids[r] = next;
                next += 1;
            }
            ids[r]
        })
        .collect()
}

/// Reverses local arcs to agree with `order`, takes the union of the local
/// edge sets and re-estimates every table from `source` with tied class
/// values pooled. Families with more than one feature parent need a count
/// source that supports them (a dataset or a joint table).
pub fn union_networks(simnet: &SimilarityNetwork, source: &dyn CountSource, order: &[VarId], alpha: f64) -> Result<GlobalNetwork> {
    let locals = order_local_networks(simnet, order)?;
    union_ordered(simnet, &locals, source, order, alpha)
}

/// Union of local networks that already agree with `order`.
pub fn union_ordered(
    simnet: &SimilarityNetwork,
    locals: &[Dag],
    source: &dyn CountSource,
    order: &[VarId],
    alpha: f64,
) -> Result<GlobalNetwork> {
    let class = simnet.class_var;
    let classes = source.schema().cardinality(class);
    let nodes = canonical_order(simnet);
    for &v in &nodes {
        if !order.contains(&v) {
            return Err(Error::InvalidStructure(format!("ordering omits node {v}")));
        }
    }
    let mut cpts = vec![estimate_cpt(source, class, &[], None, None, alpha)?.cpt];
    let mut tying = TyingRecord::new();
    let mut families = Vec::new();
    for &x in &nodes[1..] {
        let mut parents: Vec<VarId> = locals.iter().filter_map(|d| d.cpt(x)).flat_map(|c| c.parents.iter().copied()).collect();
        parents.sort_unstable();
        parents.dedup();
        families.push((x, parents));
    }
    // parents that point backwards in the order would close a cycle once
    // merged, so reject before estimating anything
    let rank = |v: VarId| order.iter().position(|&o| o == v);
    for (x, parents) in &families {
        if parents.iter().any(|&p| rank(p) > rank(*x)) {
            return Err(Error::Cycle);
        }
    }
    for (x, parents) in families {
        let groups = tying_partition(simnet, locals, x, classes);
        let tie = parents.contains(&class).then(|| Tying { var: class, groups: &groups });
        cpts.push(estimate_cpt(source, x, &parents, None, tie, alpha)?.cpt);
        tying.insert(x, groups);
    }
    let dag = Dag::new(cpts)?;
    Ok(GlobalNetwork { class_var: class, dag, tying, alpha })
}

/// A feature whose dependence on the class inside one cover edge is weak.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureAdvice {
    pub edge: usize,
    pub feature: VarId,
    /// `I(x; c)` under the distribution restricted to the edge's classes,
    /// in bits.
    pub score: f64,
}

/// Advisory only: for each cover edge, the features with `I(x; c | c ∈ A_i)`
/// at or below `threshold`, weakest first.
pub fn rank_irrelevant_features(stats: &PairStats, cover: &Cover, threshold: f64) -> Result<Vec<Vec<FeatureAdvice>>> {
    let class = class_of(stats)?;
    let stats = crate::learn::conditioned_on(stats, &[class])?;
    let kc = stats.schema().cardinality(class);
    let pc = stats.conditioning_probs();
    let mut out = Vec::with_capacity(cover.edges.len());
    for (e, edge) in cover.edges.iter().enumerate() {
        let subset = crate::info::check_subset(edge, kc)?;
        let mass: f64 = subset.iter().map(|&c| pc[c]).sum();
        if mass <= 0.0 {
            return Err(Error::ZeroSupport);
        }
        let mut ranked = Vec::new();
        for &x in stats.features() {
            let kx = stats.schema().cardinality(x);
            let px = stats.single_probs(x)?;
            let mut m = vec![0.0; kc * kx];
            for &c in &subset {
                for v in 0..kx {
                    m[c * kx + v] = pc[c] / mass * px[c * kx + v];
                }
            }
            let score = mi_of_matrix(&m, kc, kx);
            if score <= threshold {
                ranked.push(FeatureAdvice { edge: e, feature: x, score });
            }
        }
        ranked.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.feature.cmp(&b.feature)));
        out.push(ranked);
    }
    Ok(out)
}
