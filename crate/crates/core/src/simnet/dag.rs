//! Discrete Bayesian networks with explicit tables, and joint-preserving
//! arc reversal.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::cpt::{draw, Cpt};
use crate::error::{Error, Result};
use crate::model::{sorted_domain, uniform, DiscreteModel};
use crate::tables::{flat_index, for_each_assignment, unflatten, VarId};

/// One table per node; `cpts` is kept in a topological order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dag {
    pub cpts: Vec<Cpt>,
}

impl Dag {
    /// Validates parents and acyclicity, then sorts tables topologically
    /// (ties resolved by input position).
    pub fn new(cpts: Vec<Cpt>) -> Result<Dag> {
        for (k, c) in cpts.iter().enumerate() {
            c.validate()?;
            if cpts[..k].iter().any(|d| d.child == c.child) {
                return Err(Error::InvalidStructure(format!("variable {} has two tables", c.child)));
            }
        }
        for c in &cpts {
            for (&p, &k) in c.parents.iter().zip(&c.parent_cards) {
                match cpts.iter().find(|d| d.child == p) {
                    Some(d) if d.child_card == k => {}
                    Some(_) => return Err(Error::InvalidStructure(format!("cardinality of parent {p} disagrees"))),
                    None => return Err(Error::InvalidStructure(format!("parent {p} of {} is not a node", c.child))),
                }
            }
        }
        let order = topological_positions(&cpts).ok_or(Error::Cycle)?;
        let mut slots: Vec<Option<Cpt>> = cpts.into_iter().map(Some).collect();
        Ok(Dag { cpts: order.into_iter().map(|i| slots[i].take().unwrap()).collect() })
    }

    pub fn validate(&self) -> Result<()> {
        let rebuilt = Dag::new(self.cpts.clone())?;
        if rebuilt.cpts.iter().zip(&self.cpts).any(|(a, b)| a.child != b.child) {
            return Err(Error::InvalidStructure("tables are not in topological order".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<VarId> {
        self.cpts.iter().map(|c| c.child).collect()
    }

    pub fn cpt(&self, v: VarId) -> Option<&Cpt> {
        self.cpts.iter().find(|c| c.child == v)
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        self.cpt(v).map_or(&[], |c| &c.parents)
    }

    pub fn has_edge(&self, from: VarId, to: VarId) -> bool {
        self.parents(to).contains(&from)
    }

    /// Directed edges `(parent, child)`, sorted.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut e: Vec<(VarId, VarId)> =
            self.cpts.iter().flat_map(|c| c.parents.iter().map(move |&p| (p, c.child))).collect();
        e.sort_unstable();
        e
    }

    fn children(&self, v: VarId) -> Vec<VarId> {
        self.cpts.iter().filter(|c| c.parents.contains(&v)).map(|c| c.child).collect()
    }

    /// Dense joint over the nodes in ascending id order.
    pub fn joint(&self) -> (Vec<VarId>, Vec<f64>) {
        let dom = self.domain();
        let vars: Vec<VarId> = dom.iter().map(|d| d.0).collect();
        let cards: Vec<usize> = dom.iter().map(|d| d.1).collect();
        let width = vars.iter().max().map_or(0, |m| m + 1);
        let mut full = vec![0usize; width];
        let mut out = vec![0.0; cards.iter().product()];
        for_each_assignment(&cards, |i, a| {
            for (&v, &x) in vars.iter().zip(a) {
                full[v] = x;
            }
            out[i] = self.prob(&full);
        });
        (vars, out)
    }

    fn max_var(&self) -> usize {
        self.cpts.iter().map(|c| c.child).max().unwrap_or(0)
    }
}

fn topological_positions(cpts: &[Cpt]) -> Option<Vec<usize>> {
    let n = cpts.len();
    let mut indeg: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !done[i] && indeg[i] == 0)?;
        done[next] = true;
        order.push(next);
        for (i, c) in cpts.iter().enumerate() {
            if c.parents.contains(&cpts[next].child) {
                indeg[i] -= 1;
            }
        }
    }
    Some(order)
}

impl DiscreteModel for Dag {
    fn domain(&self) -> Vec<(VarId, usize)> {
        sorted_domain(self.cpts.iter().map(|c| (c.child, c.child_card)).collect())
    }

    fn class_var(&self) -> Option<VarId> {
        None
    }

    fn visit_factors(&self, assignment: &[usize], f: &mut dyn FnMut(f64)) {
        self.cpts.iter().for_each(|c| f(c.prob(assignment)));
    }

    fn sample_into(&self, rng: &mut dyn RngCore, row: &mut [usize]) {
        for cpt in &self.cpts {
            row[cpt.child] = draw(uniform(rng), cpt.distribution(row));
        }
    }
}

/// True when `to` is reachable from `from` without using the arc
/// `from → to` itself.
fn has_other_path(dag: &Dag, from: VarId, to: VarId) -> bool {
    let mut stack: Vec<VarId> = dag.children(from).into_iter().filter(|&c| c != to).collect();
    let mut seen = vec![false; dag.max_var() + 1];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(dag.children(v));
        }
    }
    false
}

fn sorted_union(a: &[VarId], b: &[VarId], skip: &[VarId]) -> Vec<VarId> {
    let mut u: Vec<VarId> = a.iter().chain(b).copied().filter(|v| !skip.contains(v)).collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Reverses `from → to`. Both endpoints inherit each other's parents and
/// the tables are recomputed so the joint distribution is unchanged.
pub fn arc_reverse(dag: &Dag, from: VarId, to: VarId) -> Result<Dag> {
    if !dag.has_edge(from, to) {
        return Err(Error::InvalidStructure(format!("no arc {from} -> {to}")));
    }
    if has_other_path(dag, from, to) {
        return Err(Error::WouldCreateCycle(format!("another directed path leads from {from} to {to}")));
    }
    let old_from = dag.cpt(from).unwrap();
    let old_to = dag.cpt(to).unwrap();
    let shared = sorted_union(&old_from.parents, &old_to.parents, &[from, to]);
    let card_of = |v: VarId| dag.cpt(v).unwrap().child_card;
    let shared_cards: Vec<usize> = shared.iter().map(|&v| card_of(v)).collect();
    let (kf, kt) = (old_from.child_card, old_to.child_card);

    let mut from_parents = shared.clone();
    from_parents.push(to);
    from_parents.sort_unstable();
    let from_cards: Vec<usize> = from_parents.iter().map(|&v| card_of(v)).collect();

    let mut a = vec![0usize; dag.max_var() + 1];
    let mut config = vec![0usize; shared.len()];
    let mut to_probs = vec![0.0; shared_cards.iter().product::<usize>() * kt];
    let mut from_probs = vec![0.0; from_cards.iter().product::<usize>() * kf];
    for row in 0..shared_cards.iter().product::<usize>() {
        unflatten(&shared_cards, row, &mut config);
        for (&v, &x) in shared.iter().zip(&config) {
            a[v] = x;
        }
        for vt in 0..kt {
            a[to] = vt;
            let mut joint = vec![0.0; kf];
            for (vf, j) in joint.iter_mut().enumerate() {
                a[from] = vf;
                *j = old_from.prob(&a) * old_to.prob(&a);
            }
            let marginal: f64 = joint.iter().sum();
            to_probs[row * kt + vt] = marginal;
            let frow = flat_index(&from_cards, from_parents.iter().map(|&v| a[v]));
            for vf in 0..kf {
                from_probs[frow * kf + vf] = if marginal > 0.0 {
                    joint[vf] / marginal
                } else {
                    a[from] = vf;
                    old_from.prob(&a)
                };
            }
        }
    }

    let new_to = Cpt::new(to, kt, shared.clone(), shared_cards, to_probs)?;
    let new_from = Cpt::new(from, kf, from_parents, from_cards, from_probs)?;
    let cpts = dag
        .cpts
        .iter()
        .map(|c| match c.child {
            v if v == to => new_to.clone(),
            v if v == from => new_from.clone(),
            _ => c.clone(),
        })
        .collect();
    Dag::new(cpts)
}

/// Reverses order-violating arcs until every arc points forward in `order`.
/// Each step takes the violating arc whose source is latest in `order`,
/// and among that source's violating children the one earliest in the
/// current topological order.
pub fn impose_ordering(dag: &Dag, order: &[VarId]) -> Result<Dag> {
    let width = dag.max_var().max(order.iter().copied().max().unwrap_or(0)) + 1;
    let mut rank = vec![usize::MAX; width];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    if let Some(v) = dag.nodes().into_iter().find(|&v| rank[v] == usize::MAX) {
        return Err(Error::InvalidStructure(format!("ordering omits node {v}")));
    }
    let n = dag.cpts.len();
    let limit = 64 * (n * n + 1);
    let mut current = dag.clone();
    for _ in 0..limit {
        let violating: Vec<(VarId, VarId)> =
            current.edges().into_iter().filter(|&(u, v)| rank[u] > rank[v]).collect();
        let Some(&(source, _)) = violating.iter().max_by_key(|(u, _)| rank[*u]) else {
            return Ok(current);
        };
        let topo = current.nodes();
        let target = violating
            .iter()
            .filter(|(u, _)| *u == source)
            .map(|&(_, v)| v)
            .min_by_key(|v| topo.iter().position(|t| t == v).unwrap())
            .unwrap();
        current = arc_reverse(&current, source, target)?;
    }
    Err(Error::InvalidStructure("arc reversal did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Dag {
        // c(2) -> x1(0) -> x2(1)
        let c = Cpt::new(2, 2, vec![], vec![], vec![0.3, 0.7]).unwrap();
        let x1 = Cpt::new(0, 2, vec![2], vec![2], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let x2 = Cpt::new(1, 3, vec![0], vec![2], vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8]).unwrap();
        Dag::new(vec![x2, x1, c]).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn tables_sorted_topologically() {
        assert_eq!(chain().nodes(), vec![2, 0, 1]);
    }

    #[test]
    fn reversing_chain_arc() {
        let d = chain();
        let r = arc_reverse(&d, 0, 1).unwrap();
        assert_eq!(r.edges(), vec![(1, 0), (2, 0), (2, 1)]);
        assert!(max_diff(&d.joint().1, &r.joint().1) < 1e-12);
    }

    #[test]
    fn reversal_twice_restores_joint() {
        let d = chain();
        let there = arc_reverse(&d, 2, 0).unwrap();
        let back = arc_reverse(&there, 0, 2).unwrap();
        assert!(max_diff(&d.joint().1, &back.joint().1) < 1e-12);
        assert_eq!(back.edges(), d.edges());
    }

    #[test]
    fn reversal_rejects_cycles_and_missing_arcs() {
        // c -> x1 -> x2 and c -> x2: reversing c -> x2 would close a cycle
        let c = Cpt::new(2, 2, vec![], vec![], vec![0.5, 0.5]).unwrap();
        let x1 = Cpt::new(0, 2, vec![2], vec![2], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let x2 = Cpt::new(1, 2, vec![0, 2], vec![2, 2], vec![0.5, 0.5, 0.1, 0.9, 0.3, 0.7, 0.6, 0.4]).unwrap();
        let d = Dag::new(vec![c, x1, x2]).unwrap();
        assert!(matches!(arc_reverse(&d, 2, 1), Err(Error::WouldCreateCycle(_))));
        assert!(arc_reverse(&d, 1, 2).is_err());
    }

    #[test]
    fn ordering_is_identity_when_consistent() {
        let d = chain();
        assert_eq!(impose_ordering(&d, &[2, 0, 1]).unwrap(), d);
    }

    #[test]
    fn single_violation_single_reversal() {
        let d = chain();
        let r = impose_ordering(&d, &[2, 1, 0]).unwrap();
        assert_eq!(r.edges(), vec![(1, 0), (2, 0), (2, 1)]);
        assert!(max_diff(&d.joint().1, &r.joint().1) < 1e-12);
    }

    #[test]
    fn cyclic_input_rejected() {
        let a = Cpt::new(0, 2, vec![1], vec![2], vec![0.5; 4]).unwrap();
        let b = Cpt::new(1, 2, vec![0], vec![2], vec![0.5; 4]).unwrap();
        assert!(matches!(Dag::new(vec![a, b]), Err(Error::Cycle)));
    }
}
