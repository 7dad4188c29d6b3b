use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::VarId;

/// A forest over feature variables in a fixed order where every parent
/// precedes its child, plus a per-node flag for a link from the class (or
/// cutset) roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStructure {
    /// Feature variables `m_1..m_n`.
    pub order: Vec<VarId>,
    /// Position in `order` of each node's parent; always less than the
    /// node's own position.
    pub parent: Vec<Option<usize>>,
    pub class_link: Vec<bool>,
}

impl TreeStructure {
    pub fn validate(&self) -> Result<()> {
        let n = self.order.len();
        if self.parent.len() != n || self.class_link.len() != n {
            return Err(Error::InvalidStructure("tree arrays differ in length".into()));
        }
        for (j, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= j {
                    return Err(Error::InvalidStructure(format!("node at position {j} has parent at position {p}")));
                }
            }
            if self.order[..j].contains(&self.order[j]) {
                return Err(Error::InvalidStructure(format!("variable {} listed twice", self.order[j])));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.order.iter().position(|&v| v == var)
    }

    pub fn parent_var(&self, pos: usize) -> Option<VarId> {
        self.parent[pos].map(|p| self.order[p])
    }

    /// Undirected skeleton as sorted `(min, max)` variable pairs.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut e: Vec<(VarId, VarId)> = (0..self.order.len())
            .filter_map(|j| self.parent_var(j).map(|p| (p.min(self.order[j]), p.max(self.order[j]))))
            .collect();
        e.sort_unstable();
        e
    }

    /// Orients an undirected forest over `nodes` (edges given as local
    /// indices into `nodes`): each component is rooted at its lowest-index
    /// node and visited breadth-first with neighbours in index order. Class
    /// links start present on every node.
    pub fn from_skeleton(nodes: &[VarId], edges: &[(usize, usize)]) -> Result<TreeStructure> {
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidStructure(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());

        let mut seen = vec![false; n];
        let mut pos_of = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = VecDeque::from([(root, None)]);
            while let Some((u, p)) = queue.pop_front() {
                pos_of[u] = order.len();
                order.push(nodes[u]);
                parent.push(p);
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back((w, Some(pos_of[u])));
                    }
                }
            }
        }
        if order.len() - count_roots(&parent) != edges.len() {
            return Err(Error::InvalidStructure("skeleton contains a cycle".into()));
        }
        let t = TreeStructure { order, parent, class_link: vec![true; n] };
        t.validate()?;
        Ok(t)
    }

    /// Maps local node ids to variables.
    pub fn relabel(mut self, vars: &[VarId]) -> TreeStructure {
        self.order.iter_mut().for_each(|v| *v = vars[*v]);
        self
    }
}

fn count_roots(parent: &[Option<usize>]) -> usize {
    parent.iter().filter(|p| p.is_none()).count()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroEdges {
    /// Keep zero-weight edges so the output always spans (a single tree).
    #[default]
    Keep,
    /// Drop edges of weight ≤ 0, yielding a forest.
    Drop,
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over a symmetric weight matrix. Edges are taken in descending
/// weight with ties broken by `(min index, max index)`; the chosen edges are
/// returned as `(i, j)` with `i < j`, in selection order.
pub fn spanning_edges(weights: &[Vec<f64>], zero: ZeroEdges) -> Result<Vec<(usize, usize)>> {
    let n = weights.len();
    if weights.iter().any(|row| row.len() != n) {
        return Err(Error::Malformed("weight matrix is not square".into()));
    }
    let mut candidates = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let w = weights[i][j];
            if !w.is_finite() {
                return Err(Error::Malformed(format!("weight ({i}, {j}) is not finite")));
            }
            if zero == ZeroEdges::Drop && w <= 0.0 {
                continue;
            }
            candidates.push((w, i, j));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut sets = DisjointSets::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in candidates {
        if sets.union(i, j) {
            chosen.push((i, j));
            if chosen.len() + 1 == n {
                break;
            }
        }
    }
    Ok(chosen)
}

/// Maximum-weight spanning tree over nodes `0..n`, oriented by
/// [`TreeStructure::from_skeleton`].
pub fn max_weight_spanning_tree(weights: &[Vec<f64>], zero: ZeroEdges) -> Result<TreeStructure> {
    let edges = spanning_edges(weights, zero)?;
    let nodes: Vec<VarId> = (0..weights.len()).collect();
    TreeStructure::from_skeleton(&nodes, &edges)
}

pub fn total_weight(weights: &[Vec<f64>], edges: &[(usize, usize)]) -> f64 {
    edges.iter().map(|&(i, j)| weights[i][j]).sum()
}
