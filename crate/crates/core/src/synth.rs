//! Seeded synthetic distributions and planted models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpt::Cpt;
use crate::error::Result;
use crate::learn::{ClassTree, ConditionalTreeModel, Multinet, TreeStructure};
use crate::oracle::prufer_decode;
use crate::tables::{JointTable, Schema, VarId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A joint drawn from the flat Dirichlet over all cells of binary-or-wider
/// features plus a class.
pub fn random_joint(features: &[usize], classes: usize, seed: u64) -> Result<JointTable> {
    let schema = Schema::features_and_class(features, classes)?;
    let mut r = rng(seed);
    let cells: usize = schema.all_cards().iter().product();
    let weights = (0..cells).map(|_| -(1.0 - r.gen::<f64>()).ln()).collect();
    JointTable::from_weights(schema, weights)
}

/// A uniformly random labeled tree on `0..n`.
pub fn random_skeleton(n: usize, r: &mut impl Rng) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => {
            let seq: Vec<usize> = (0..n - 2).map(|_| r.gen_range(0..n)).collect();
            prufer_decode(&seq, n)
        }
    }
}

/// Binary features on a random skeleton. In each class a child copies its
/// parent, possibly inverted (a class-specific choice per edge), with a
/// copy probability drawn from `copy`; roots have `p(x=1|c)` drawn from
/// `root`.
#[derive(Clone, Debug)]
pub struct PlantedSpec {
    pub features: usize,
    pub classes: usize,
    pub copy: (f64, f64),
    pub root: (f64, f64),
}

fn copy_row(r: &mut ChaCha8Rng, copy: (f64, f64), inverted: bool) -> [f64; 4] {
    let q = r.gen_range(copy.0..=copy.1);
    let (same, other) = (q, 1.0 - q);
    if inverted {
        [other, same, same, other]
    } else {
        [same, other, other, same]
    }
}

pub fn planted_conditional_tree(spec: &PlantedSpec, seed: u64) -> Result<(Schema, ConditionalTreeModel)> {
    let schema = Schema::features_and_class(&vec![2; spec.features], spec.classes)?;
    let class: VarId = spec.features;
    let mut r = rng(seed);
    let features: Vec<VarId> = (0..spec.features).collect();
    let structure = TreeStructure::from_skeleton(&features, &random_skeleton(spec.features, &mut r))?;
    let kc = spec.classes;
    let mut cpts = Vec::with_capacity(spec.features);
    for pos in 0..structure.len() {
        let child = structure.order[pos];
        match structure.parent_var(pos) {
            None => {
                let probs = (0..kc)
                    .flat_map(|_| {
                        let p = r.gen_range(spec.root.0..=spec.root.1);
                        [1.0 - p, p]
                    })
                    .collect();
                cpts.push(Cpt::new(child, 2, vec![class], vec![kc], probs)?);
            }
            Some(parent) => {
                // rows ordered [parent][class]
                let blocks: Vec<[f64; 4]> = (0..kc).map(|_| {
                    let inv = r.gen_bool(0.5);
                    copy_row(&mut r, spec.copy, inv)
                }).collect();
                let mut probs = Vec::with_capacity(4 * kc);
                for xp in 0..2 {
                    for b in &blocks {
                        probs.extend_from_slice(&b[2 * xp..2 * xp + 2]);
                    }
                }
                cpts.push(Cpt::new(child, 2, vec![parent, class], vec![2, kc], probs)?);
            }
        }
    }
    let prior = vec![1.0 / kc as f64; kc];
    let model = ConditionalTreeModel {
        class_var: class,
        class_subset: (0..kc).collect(),
        prior,
        structure,
        cpts,
        alpha: 0.0,
    };
    model.validate()?;
    Ok((schema, model))
}

/// A multinet whose class trees have independently drawn skeletons, so no
/// single shared skeleton fits every class.
pub fn class_dependent_multinet(features: usize, classes: usize, copy: (f64, f64), seed: u64) -> Result<(Schema, Multinet)> {
    let schema = Schema::features_and_class(&vec![2; features], classes)?;
    let mut r = rng(seed);
    let vars: Vec<VarId> = (0..features).collect();
    let mut trees = Vec::with_capacity(classes);
    for _ in 0..classes {
        let mut structure = TreeStructure::from_skeleton(&vars, &random_skeleton(features, &mut r))?;
        structure.class_link = vec![false; features];
        let mut cpts = Vec::with_capacity(features);
        for pos in 0..structure.len() {
            let child = structure.order[pos];
            cpts.push(match structure.parent_var(pos) {
                None => {
                    let p = r.gen_range(0.3..=0.7);
                    Cpt::new(child, 2, vec![], vec![], vec![1.0 - p, p])?
                }
                Some(parent) => {
                    let inv = r.gen_bool(0.5);
                    Cpt::new(child, 2, vec![parent], vec![2], copy_row(&mut r, copy, inv).to_vec())?
                }
            });
        }
        trees.push(ClassTree { structure, cpts });
    }
    let model = Multinet { class_var: features, prior: vec![1.0 / classes as f64; classes], trees, alpha: 0.0 };
    model.validate()?;
    Ok((schema, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::model_table;

    #[test]
    fn generators_are_deterministic_and_normalized() {
        let a = random_joint(&[2, 2, 2], 3, 7).unwrap();
        assert_eq!(a, random_joint(&[2, 2, 2], 3, 7).unwrap());
        assert_ne!(a, random_joint(&[2, 2, 2], 3, 8).unwrap());
        let spec = PlantedSpec { features: 5, classes: 3, copy: (0.8, 0.9), root: (0.3, 0.7) };
        let (schema, m) = planted_conditional_tree(&spec, 1).unwrap();
        let t = model_table(&m, &schema).unwrap();
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (schema, mn) = class_dependent_multinet(4, 2, (0.9, 0.95), 3).unwrap();
        assert!(model_table(&mn, &schema).is_ok());
    }

    #[test]
    fn skeletons_span() {
        let mut r = rng(0);
        for n in 0..8 {
            let e = random_skeleton(n, &mut r);
            assert_eq!(e.len(), n.saturating_sub(1));
        }
    }
}
