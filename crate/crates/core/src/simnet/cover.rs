use serde::{Deserialize, Serialize};

/// A family of class-value subsets (hyperedges) over a class domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub edges: Vec<Vec<usize>>,
}

impl Cover {
    pub fn new(edges: Vec<Vec<usize>>) -> Self {
        Cover { edges }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoverReport {
    /// Class values that no edge contains.
    pub missing: Vec<usize>,
    /// Values outside the class domain, with the edge they appear in.
    pub out_of_domain: Vec<(usize, usize)>,
    pub empty_edges: Vec<usize>,
    /// Connected components of the similarity hypergraph, as edge indices.
    pub components: Vec<Vec<usize>>,
}

impl CoverReport {
    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }

    pub fn is_valid(&self) -> bool {
        self.missing.is_empty() && self.out_of_domain.is_empty() && self.empty_edges.is_empty() && self.is_connected()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("class values not covered: {:?}", self.missing));
        }
        if !self.out_of_domain.is_empty() {
            parts.push(format!("values outside the class domain: {:?}", self.out_of_domain));
        }
        if !self.empty_edges.is_empty() {
            parts.push(format!("empty edges: {:?}", self.empty_edges));
        }
        if !self.is_connected() {
            parts.push(format!("similarity hypergraph has {} components: {:?}", self.components.len(), self.components));
        }
        parts.join("; ")
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Union-find over edge indices: edges sharing a class value are merged.
pub(crate) fn edge_components(edges: &[Vec<usize>], classes: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    let mut first_edge: Vec<Option<usize>> = vec![None; classes];
    for (e, members) in edges.iter().enumerate() {
        for &c in members.iter().filter(|&&c| c < classes) {
            match first_edge[c] {
                None => first_edge[c] = Some(e),
                Some(f) => {
                    let (a, b) = (find(&mut parent, f), find(&mut parent, e));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; edges.len()];
    for e in 0..edges.len() {
        let r = find(&mut parent, e);
        match root_slot[r] {
            Some(s) => comps[s].push(e),
            None => {
                root_slot[r] = Some(comps.len());
                comps.push(vec![e]);
            }
        }
    }
    comps
}

/// Checks that the edges cover `0..classes` and that the similarity
/// hypergraph is connected.
pub fn validate_cover(cover: &Cover, classes: usize) -> CoverReport {
    let mut covered = vec![false; classes];
    let mut report = CoverReport::default();
    for (e, members) in cover.edges.iter().enumerate() {
        if members.is_empty() {
            report.empty_edges.push(e);
        }
        for &c in members {
            if c < classes {
                covered[c] = true;
            } else {
                report.out_of_domain.push((c, e));
            }
        }
    }
    report.missing = (0..classes).filter(|&c| !covered[c]).collect();
    report.components = edge_components(&cover.edges, classes);
    report
}
