//! Reference computations written independently of the library: plain
//! dictionary marginals, the undirected tree factorization, and spanning
//! trees found by filtering edge subsets.

#![allow(dead_code)]

use std::collections::BTreeMap;

use condtree::cpt::Cpt;
use condtree::simnet::Dag;
use condtree::{JointTable, Schema};

pub fn decode(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for k in (0..cards.len()).rev() {
        out[k] = idx % cards[k];
        idx /= cards[k];
    }
    out
}

pub fn cards_of(t: &JointTable) -> Vec<usize> {
    t.schema().vars().iter().map(|v| v.labels.len()).collect()
}

pub fn marg(probs: &[f64], cards: &[usize], keep: &[usize]) -> BTreeMap<Vec<usize>, f64> {
    let mut m = BTreeMap::new();
    for (i, &p) in probs.iter().enumerate() {
        let a = decode(i, cards);
        *m.entry(keep.iter().map(|&k| a[k]).collect()).or_insert(0.0) += p;
    }
    m
}

pub fn h(m: &BTreeMap<Vec<usize>, f64>) -> f64 {
    m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

pub fn h_of(probs: &[f64], cards: &[usize], vars: &[usize]) -> f64 {
    h(&marg(probs, cards, vars))
}

/// `I(A; B | G)` by entropies.
pub fn cmi(probs: &[f64], cards: &[usize], a: &[usize], b: &[usize], g: &[usize]) -> f64 {
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    h_of(probs, cards, &cat(a, g)) + h_of(probs, cards, &cat(b, g)) - h_of(probs, cards, &cat(&cat(a, b), g))
        - h_of(probs, cards, g)
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// Edge subsets of size `n − 1` that connect `0..n`.
pub fn spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let m = all.len();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..m).filter(|&k| mask >> k & 1 == 1).map(|k| all[k]).collect();
        let mut comp: Vec<usize> = (0..n).collect();
        let mut ok = true;
        for &(a, b) in &edges {
            let (ca, cb) = (comp[a], comp[b]);
            if ca == cb {
                ok = false;
                break;
            }
            comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
        }
        if ok {
            out.push(edges);
        }
    }
    out
}

/// Precomputed marginals of a truth restricted to a class subset.
pub struct TreeOracle {
    pub cards: Vec<usize>,
    pub class: usize,
    pub features: Vec<usize>,
    pub reference: Vec<f64>,
    single: Vec<BTreeMap<Vec<usize>, f64>>,
    pair: BTreeMap<(usize, usize), BTreeMap<Vec<usize>, f64>>,
    pc: BTreeMap<Vec<usize>, f64>,
}

impl TreeOracle {
    pub fn new(truth: &JointTable, subset: &[usize]) -> TreeOracle {
        let cards = cards_of(truth);
        let class = truth.schema().class_var().unwrap();
        let features: Vec<usize> = (0..cards.len()).filter(|&v| v != class).collect();
        let mut reference = truth.probs().to_vec();
        for (i, p) in reference.iter_mut().enumerate() {
            if !subset.contains(&decode(i, &cards)[class]) {
                *p = 0.0;
            }
        }
        let z: f64 = reference.iter().sum();
        reference.iter_mut().for_each(|p| *p /= z);
        let single = features.iter().map(|&f| marg(&reference, &cards, &[class, f])).collect();
        let mut pair = BTreeMap::new();
        for (a, &i) in features.iter().enumerate() {
            for &j in &features[a + 1..] {
                pair.insert((i, j), marg(&reference, &cards, &[class, i, j]));
            }
        }
        let pc = marg(&reference, &cards, &[class]);
        TreeOracle { cards, class, features, reference, single, pair, pc }
    }

    /// `p̂(x, c) = p(c) Π_edges p(x_i, x_j | c) / Π_nodes p(x_i | c)^(deg − 1)`
    /// with edges given over feature positions.
    pub fn model(&self, edges: &[(usize, usize)]) -> Vec<f64> {
        let mut deg = vec![0usize; self.features.len()];
        for &(a, b) in edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        (0..self.reference.len())
            .map(|idx| {
                let a = decode(idx, &self.cards);
                let c = a[self.class];
                let pc = self.pc.get(&vec![c]).copied().unwrap_or(0.0);
                if pc <= 0.0 {
                    return 0.0;
                }
                let mut q = pc;
                for &(u, w) in edges {
                    let (i, j) = (self.features[u], self.features[w]);
                    let key = if i < j { (i, j) } else { (j, i) };
                    let v = if i < j { vec![c, a[i], a[j]] } else { vec![c, a[j], a[i]] };
                    q *= self.pair[&key].get(&v).copied().unwrap_or(0.0) / pc;
                }
                for (pos, &f) in self.features.iter().enumerate() {
                    let s = self.single[pos].get(&vec![c, a[f]]).copied().unwrap_or(0.0) / pc;
                    let power = 1i32 - deg[pos] as i32;
                    if power != 0 {
                        if s <= 0.0 {
                            return 0.0;
                        }
                        q *= s.powi(power);
                    }
                }
                q
            })
            .collect()
    }

    pub fn divergence(&self, edges: &[(usize, usize)]) -> f64 {
        kl(&self.reference, &self.model(edges))
    }

    /// `Σ_edges I(x_i; x_j | c)` under the reference.
    pub fn weight(&self, edges: &[(usize, usize)]) -> f64 {
        edges
            .iter()
            .map(|&(u, w)| cmi(&self.reference, &self.cards, &[self.features[u]], &[self.features[w]], &[self.class]))
            .sum()
    }

    /// Minimum divergence and its skeleton (as variable-id pairs).
    pub fn best(&self) -> (f64, Vec<(usize, usize)>) {
        let n = self.features.len();
        let mut best = (f64::INFINITY, Vec::new());
        for t in spanning_trees(n) {
            let d = self.divergence(&t);
            if d < best.0 {
                best = (d, t.iter().map(|&(a, b)| (self.features[a], self.features[b])).collect());
            }
        }
        best
    }
}

/// Joint of a DAG by multiplying table entries over every assignment of
/// its nodes (ascending ids).
pub fn dag_joint(dag: &Dag) -> Vec<f64> {
    let mut nodes: Vec<(usize, usize)> = dag.cpts.iter().map(|c| (c.child, c.child_card)).collect();
    nodes.sort_unstable();
    let cards: Vec<usize> = nodes.iter().map(|n| n.1).collect();
    let width = nodes.last().map_or(0, |n| n.0 + 1);
    let total: usize = cards.iter().product();
    (0..total)
        .map(|i| {
            let a = decode(i, &cards);
            let mut full = vec![0; width];
            for (k, n) in nodes.iter().enumerate() {
                full[n.0] = a[k];
            }
            dag.cpts.iter().map(|c: &Cpt| c.prob(&full)).product()
        })
        .collect()
}

fn copy_cpt(child: usize, parent: usize, class: usize, classes: usize, noise: &[f64]) -> Cpt {
    // rows [parent][class]
    let mut probs = Vec::new();
    for xp in 0..2 {
        for &e in noise.iter().take(classes) {
            if xp == 0 {
                probs.extend([1.0 - e, e]);
            } else {
                probs.extend([e, 1.0 - e]);
            }
        }
    }
    Cpt::new(child, 2, vec![parent, class], vec![2, classes], probs).unwrap()
}

/// Five binary features `x1..x5` (ids 0..4) and a five-valued class
/// (id 5) built so that the cover `{c1,c2,c3}, {c3,c4}, {c4,c5}` with
/// relevant features `{x1,x2,x3,x5}, {x3,x4,x5}, {x1}` has local trees
/// `x1–x2, x1–x3, x3–x5`; `x3–x4, x4–x5`; and the single node `x1`.
pub fn similarity_truth() -> (JointTable, Dag) {
    let c = 5;
    let prior = Cpt::new(c, 5, vec![], vec![], vec![0.2; 5]).unwrap();
    let x1_on = [0.2, 0.5, 0.8, 0.8, 0.35];
    let x1 = Cpt::new(0, 2, vec![c], vec![5], x1_on.iter().flat_map(|&p| [1.0 - p, p]).collect()).unwrap();
    let x2 = copy_cpt(1, 0, c, 5, &[0.1, 0.2, 0.3, 0.3, 0.3]);
    let x3 = copy_cpt(2, 0, c, 5, &[0.15, 0.25, 0.1, 0.2, 0.2]);
    let x4 = copy_cpt(3, 2, c, 5, &[0.1, 0.1, 0.1, 0.3, 0.3]);
    // x5 copies x3 in c1, c2 and x4 in c3..c5, always with 10% noise
    let mut probs = Vec::new();
    for x3v in 0..2 {
        for x4v in 0..2 {
            for cv in 0..5 {
                let src = if cv < 2 { x3v } else { x4v };
                probs.extend(if src == 0 { [0.9, 0.1] } else { [0.1, 0.9] });
            }
        }
    }
    let x5 = Cpt::new(4, 2, vec![2, 3, c], vec![2, 2, 5], probs).unwrap();
    let dag = Dag::new(vec![prior, x1, x2, x3, x4, x5]).unwrap();
    let schema = Schema::features_and_class(&[2; 5], 5).unwrap();
    let truth = JointTable::new(schema, dag_joint(&dag)).unwrap();
    (truth, dag)
}
