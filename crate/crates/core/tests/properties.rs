mod common;

use proptest::prelude::*;

use condtree::eval::{classify, model_table};
use condtree::io::{read_csv_with_schema, sample};
use condtree::learn::{
    learn_chow_liu_multinet, learn_conditional_tree, learn_with_cutset, spanning_edges, total_weight, ConditionalTreeModel,
    ZeroEdges,
};
use condtree::simnet::{learn_local_networks, union_networks, validate_cover, canonical_order, Cover};
use condtree::synth::{planted_conditional_tree, random_joint, PlantedSpec};
use condtree::tables::{fit_joint, marginal, pairwise_stats, Smoothing, SmoothingMode, DEFAULT_CONDITIONING_CAP};
use condtree::{Dataset, DiscreteModel, Execution, JointTable, PairStats, Role, Schema};

use common::{marg, spanning_trees};

fn schema() -> Schema {
    Schema::features_and_class(&[2, 3, 2], 3).unwrap()
}

fn rows() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec((0..2usize, 0..3usize, 0..2usize, 0..3usize).prop_map(|(a, b, c, y)| vec![a, b, c, y]), 1..60)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_consistent_pairs_are_marginals_of_the_smoothed_joint(rows in rows(), alpha in 0.0f64..3.0) {
        let data = Dataset::new(schema(), rows).unwrap();
        let smoothing = Smoothing { alpha, mode: SmoothingMode::JointConsistent };
        let stats = PairStats::from_source(&data, &[3], smoothing, DEFAULT_CONDITIONING_CAP, Execution::Sequential).unwrap();
        let joint = fit_joint(&data, alpha).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2), (2, 0)] {
            let expected = marginal(&joint, &[3, i, j]).unwrap();
            prop_assert!(close(&stats.pair_joint_probs(i, j).unwrap(), expected.probs(), 1e-12));
        }
        for x in 0..3 {
            let m = marginal(&joint, &[3, x]).unwrap();
            let pc = marginal(&joint, &[3]).unwrap();
            let kx = schema().cardinality(x);
            let cond: Vec<f64> = m.probs().iter().enumerate().map(|(k, p)| p / pc.probs()[k / kx]).collect();
            prop_assert!(close(&stats.single_probs(x).unwrap(), &cond, 1e-12));
        }
    }

    #[test]
    fn statistics_ignore_row_order(rows in rows(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut condtree::synth::rng(seed));
        let a = pairwise_stats(&Dataset::new(schema(), rows).unwrap(), &[3], 1.0).unwrap();
        let b = pairwise_stats(&Dataset::new(schema(), shuffled).unwrap(), &[3], 1.0).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            prop_assert_eq!(a.pair_counts(i, j).unwrap(), b.pair_counts(i, j).unwrap());
        }
        prop_assert_eq!(learn_conditional_tree(&a, None).unwrap(), learn_conditional_tree(&b, None).unwrap());
    }

    #[test]
    fn kruskal_finds_a_maximum_spanning_tree(n in 2usize..7, raw in prop::collection::vec(0u8..8, 21)) {
        // small integer weights force plenty of ties
        let mut w = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                w[i][j] = f64::from(raw[k]);
                w[j][i] = w[i][j];
                k += 1;
            }
        }
        let edges = spanning_edges(&w, ZeroEdges::Keep).unwrap();
        prop_assert_eq!(edges.len(), n - 1);
        let best = spanning_trees(n).iter().map(|t| total_weight(&w, t)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(total_weight(&w, &edges), best);
        prop_assert_eq!(spanning_edges(&w, ZeroEdges::Keep).unwrap(), edges);
    }

    #[test]
    fn posteriors_match_normalized_joint_probabilities(seed in 0u64..500, x in prop::collection::vec(0usize..2, 4)) {
        let spec = PlantedSpec { features: 4, classes: 3, copy: (0.6, 0.9), root: (0.2, 0.8) };
        let (_, model) = planted_conditional_tree(&spec, seed).unwrap();
        let mut a = x.clone();
        a.push(0);
        let joint: Vec<f64> = (0..3).map(|c| { a[4] = c; model.prob(&a) }).collect();
        let z: f64 = joint.iter().sum();
        let r = classify(&model, &a).unwrap();
        prop_assert!(close(&r.posterior, &joint.iter().map(|p| p / z).collect::<Vec<_>>(), 1e-12));
        let top = joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(r.class, joint.iter().position(|&p| p == top).unwrap());
    }

    #[test]
    fn every_family_sums_to_one(seed in any::<u64>()) {
        let truth = random_joint(&[2, 3, 2, 2], 3, seed).unwrap();
        let class = truth.schema().require_class().unwrap();
        let stats = PairStats::from_joint(&truth, &[class]).unwrap();
        let sum = |m: &dyn DiscreteModel, s: &Schema| model_table(m, s).unwrap().probs().iter().sum::<f64>();
        prop_assert!((sum(&learn_chow_liu_multinet(&stats).unwrap(), truth.schema()) - 1.0).abs() < 1e-12);
        prop_assert!((sum(&learn_conditional_tree(&stats, None).unwrap(), truth.schema()) - 1.0).abs() < 1e-12);
        prop_assert!((sum(&learn_conditional_tree(&stats, Some(&[0, 2])).unwrap(), truth.schema()) - 1.0).abs() < 1e-12);
        let cut_schema = truth.schema().with_role(0, Role::Cutset).unwrap();
        let cut_truth = JointTable::new(cut_schema.clone(), truth.probs().to_vec()).unwrap();
        let cut = PairStats::from_joint(&cut_truth, &[class, 0]).unwrap();
        prop_assert!((sum(&learn_with_cutset(&cut, &[class, 0]).unwrap(), &cut_schema) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cover_connectivity_matches_path_search(
        k in 1usize..7,
        edges in prop::collection::vec(prop::collection::vec(0usize..7, 0..4), 1..5),
    ) {
        let report = validate_cover(&Cover::new(edges.clone()), k);
        let missing: Vec<usize> = (0..k).filter(|c| !edges.iter().flatten().any(|v| v == c)).collect();
        prop_assert_eq!(&report.missing, &missing);
        let empty: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].is_empty()).collect();
        prop_assert_eq!(&report.empty_edges, &empty);
        let outside: Vec<(usize, usize)> =
            edges.iter().enumerate().flat_map(|(e, m)| m.iter().filter(|&&v| v >= k).map(move |&v| (v, e))).collect();
        prop_assert_eq!(&report.out_of_domain, &outside);
        // edges are adjacent when they share an in-domain value; search from edge 0
        let mut seen = vec![false; edges.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(e) = stack.pop() {
            for f in 0..edges.len() {
                if !seen[f] && edges[e].iter().any(|v| *v < k && edges[f].contains(v)) {
                    seen[f] = true;
                    stack.push(f);
                }
            }
        }
        prop_assert_eq!(report.is_connected(), seen.iter().all(|&s| s));
    }
}

#[test]
fn sampled_pair_frequencies_match_the_model() {
    let spec = PlantedSpec { features: 4, classes: 3, copy: (0.7, 0.9), root: (0.3, 0.7) };
    let (schema, model) = planted_conditional_tree(&spec, 21).unwrap();
    let data = sample(&model, &schema, 100_000, 21).unwrap();
    let empirical = fit_joint(&data, 0.0).unwrap();
    let expected = model_table(&model, &schema).unwrap();
    let cards = common::cards_of(&expected);
    for i in 0..5 {
        for j in i + 1..5 {
            let e = marg(empirical.probs(), &cards, &[i, j]);
            let m = marg(expected.probs(), &cards, &[i, j]);
            for (k, p) in &m {
                let q = e.get(k).copied().unwrap_or(0.0);
                assert!((p - q).abs() < 0.01, "pair ({i}, {j}) cell {k:?}: {q} vs {p}");
            }
        }
    }
}

#[test]
fn single_edge_cover_is_a_plain_conditional_tree() {
    for seed in 0..10 {
        let truth = random_joint(&[2, 2, 3, 2], 3, seed).unwrap();
        let stats = PairStats::from_joint(&truth, &[4]).unwrap();
        let simnet = learn_local_networks(&stats, &Cover::new(vec![vec![0, 1, 2]]), &[vec![0, 1, 2, 3]], -1.0).unwrap();
        let plain: ConditionalTreeModel = learn_conditional_tree(&stats, None).unwrap();
        assert_eq!(simnet.locals[0], plain);
    }
}

#[test]
fn fully_tied_union_pools_counts_across_classes() {
    // a huge pruning tolerance removes every class link, so every feature
    // table must equal the class-free conditional of the truth
    let truth = random_joint(&[2, 3, 2], 3, 11).unwrap();
    let class = 3;
    let stats = PairStats::from_joint(&truth, &[class]).unwrap();
    let cover = Cover::new(vec![vec![0, 1], vec![1, 2]]);
    let simnet = learn_local_networks(&stats, &cover, &[vec![0, 1, 2], vec![0, 1, 2]], 100.0).unwrap();
    let global = union_networks(&simnet, &truth, &canonical_order(&simnet), 0.0).unwrap();
    let cards = common::cards_of(&truth);
    for x in 0..3 {
        assert_eq!(global.tying[&x], vec![0, 0, 0]);
        let cpt = global.dag.cpt(x).unwrap();
        let mut family = cpt.parents.clone();
        family.push(x);
        let joint = marg(truth.probs(), &cards, &family);
        let parents = marg(truth.probs(), &cards, &cpt.parents);
        for (key, p) in &joint {
            let mut a = vec![0; 4];
            for (&v, &val) in family.iter().zip(key) {
                a[v] = val;
            }
            let expected = p / parents[&key[..key.len() - 1].to_vec()];
            for c in 0..3 {
                a[class] = c;
                assert!((cpt.prob(&a) - expected).abs() < 1e-12, "x{x} {key:?} class {c}");
            }
        }
    }
}

#[test]
fn csv_row_order_does_not_change_the_model() {
    let schema = Schema::new(vec![
        condtree::Variable::with_labels("a", Role::Feature, vec!["lo".into(), "hi".into()]),
        condtree::Variable::with_labels("b", Role::Feature, vec!["x".into(), "y".into(), "z".into()]),
        condtree::Variable::with_labels("c", Role::Feature, vec!["0".into(), "1".into()]),
        condtree::Variable::with_labels("cls", Role::Class, vec!["p".into(), "q".into()]),
    ])
    .unwrap();
    let lines: Vec<String> = (0..30usize)
        .map(|i| format!("{},{},{},{}", ["lo", "hi"][i % 2], ["x", "y", "z"][i * 7 % 3], i * 5 % 7 % 2, ["p", "q"][i / 3 % 2]))
        .collect();
    let learn = |body: Vec<String>| {
        let text = format!("a,b,c,cls\n{}\n", body.join("\n"));
        let data = read_csv_with_schema(text.as_bytes(), &schema).unwrap().dataset;
        learn_conditional_tree(&pairwise_stats(&data, &[3], 1.0).unwrap(), None).unwrap()
    };
    let mut reversed = lines.clone();
    reversed.reverse();
    assert_eq!(learn(lines), learn(reversed));
}
