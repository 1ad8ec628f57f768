use std::sync::Arc;

use mimb_core::ci::chi2::{chi_square_upper_tail, ln_gamma};
use mimb_core::ci::g2::{g2_statistic, ContingencyTable};
use mimb_core::dataset::{Dataset, Schema};
use mimb_core::graph::{InterventionFamily, VarId, VarNames, VarSet};
use mimb_core::metrics::score;
use mimb_core::sampling::{forward_sample, random_cpts, random_dag, randomize_manipulated_cpts};
use mimb_core::theorem::{intersection_of, oracle_mbs, union_of, verify};
use proptest::prelude::*;

fn assignments(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << n).map(move |m| (0..n).map(|i| (m >> i) & 1).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_separation_agrees_with_path_enumeration(seed in any::<u64>(), n in 2usize..=7, mask in any::<u16>()) {
        let dag = random_dag(n, 0.35, seed).unwrap();
        let z: VarSet = (2..n).filter(|i| mask & (1 << i) != 0).map(VarId).collect();
        let fast = dag.is_d_separated(VarId(0), VarId(1), &z).unwrap();
        prop_assert_eq!(fast, dag.brute_force_d_separated(VarId(0), VarId(1), &z).unwrap());
        prop_assert_eq!(fast, dag.is_d_separated(VarId(1), VarId(0), &z).unwrap());
    }

    #[test]
    fn markov_blanket_separates_everything_else(seed in any::<u64>(), n in 2usize..=8, t in 0usize..8) {
        let dag = random_dag(n, 0.3, seed).unwrap();
        let t = VarId(t % n);
        let mb = dag.markov_blanket(t);
        for v in (0..n).map(VarId).filter(|v| *v != t && !mb.contains(v)) {
            prop_assert!(dag.is_d_separated(t, v, &mb).unwrap());
        }
    }

    #[test]
    fn g2_is_nonnegative_and_symmetric(
        rx in 2usize..4, ry in 2usize..4,
        cells in prop::collection::vec(0u32..30, 48),
        nz in 1usize..4,
    ) {
        let strata: Vec<Vec<u32>> = (0..nz).map(|k| cells[k * rx * ry..(k + 1) * rx * ry].to_vec()).collect();
        let g = g2_statistic(&ContingencyTable::from_strata(rx, ry, strata.clone()));
        prop_assert!(g.statistic >= -1e-9);
        let transposed: Vec<Vec<u32>> = strata
            .iter()
            .map(|s| (0..ry).flat_map(|j| (0..rx).map(move |i| s[i * ry + j])).collect())
            .collect();
        let gt = g2_statistic(&ContingencyTable::from_strata(ry, rx, transposed));
        prop_assert!((g.statistic - gt.statistic).abs() < 1e-9);
        prop_assert_eq!(g.dof, gt.dof);
        let mut reversed = strata.clone();
        reversed.reverse();
        let gr = g2_statistic(&ContingencyTable::from_strata(rx, ry, reversed));
        prop_assert!((g.statistic - gr.statistic).abs() < 1e-9);
    }

    #[test]
    fn chi_square_tail_agrees_with_statrs(stat in 0.0f64..400.0, dof in 1usize..200) {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let expected = ChiSquared::new(dof as f64).unwrap().sf(stat);
        let got = chi_square_upper_tail(stat, dof);
        prop_assert!((got - expected).abs() <= 1e-10 + 1e-8 * expected, "{got} vs {expected}");
    }

    #[test]
    fn ln_gamma_agrees_with_statrs(x in 0.01f64..300.0) {
        let expected = statrs::function::gamma::ln_gamma(x);
        prop_assert!((ln_gamma(x) - expected).abs() <= 1e-10 * expected.abs().max(1.0));
    }

    #[test]
    fn intervened_joint_factorizes(seed in any::<u64>(), n in 1usize..=4, mask in any::<u8>()) {
        let bn = random_cpts(&random_dag(n, 0.5, seed).unwrap(), 2, 1.0, seed).unwrap();
        let targets: VarSet = (0..n).filter(|i| mask & (1 << i) != 0).map(VarId).collect();
        let post = randomize_manipulated_cpts(&bn, &targets, 1.0, seed ^ 1).unwrap();
        prop_assert_eq!(post.dag(), &bn.dag().intervene(&targets));
        let mut total = 0.0;
        for a in assignments(n) {
            let expected: f64 = (0..n)
                .map(VarId)
                .map(|v| {
                    if targets.contains(&v) {
                        post.cpt(v).prob(0, a[v.index()])
                    } else {
                        let cpt = bn.cpt(v);
                        cpt.prob(cpt.row_index(|p| a[p.index()]), a[v.index()])
                    }
                })
                .product();
            let got = post.joint_probability(&a);
            prop_assert!((got - expected).abs() < 1e-12);
            total += got;
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn adding_an_observational_experiment_is_monotone(seed in any::<u64>(), n in 3usize..=8, t in 0usize..8, mask in any::<u16>()) {
        let dag = random_dag(n, 0.35, seed).unwrap();
        let t = VarId(t % n);
        let set: VarSet = (0..n).filter(|i| mask & (1 << i) != 0).map(VarId).collect();
        let fam = InterventionFamily::new(vec![set]).unwrap();
        let bigger = fam.with_appended(VarSet::new());
        let (a, b) = (oracle_mbs(&dag, t, &fam), oracle_mbs(&dag, t, &bigger));
        prop_assert!(union_of(&a).is_subset(&union_of(&b)));
        prop_assert!(intersection_of(&b).is_subset(&intersection_of(&a)));
        prop_assert!(intersection_of(&b).is_subset(&dag.markov_blanket(t)));
    }

    #[test]
    fn verification_report_round_trips(seed in any::<u64>(), n in 2usize..=7, mask in any::<u16>()) {
        let dag = random_dag(n, 0.4, seed).unwrap();
        let sets: Vec<VarSet> = [mask & 0xff, mask >> 8]
            .iter()
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(VarId).collect())
            .collect();
        let r = verify(&dag, VarId(0), &InterventionFamily::new(sets).unwrap());
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<mimb_core::theorem::VerificationReport>(&json).unwrap(), r);
    }

    #[test]
    fn score_ignores_labels(found in prop::collection::btree_set(0usize..12, 0..8), truth in prop::collection::btree_set(0usize..12, 0..8), shift in 1usize..50) {
        let a: VarSet = found.iter().map(|&i| VarId(i)).collect();
        let b: VarSet = truth.iter().map(|&i| VarId(i)).collect();
        let a2: VarSet = found.iter().map(|&i| VarId(i + shift)).collect();
        let b2: VarSet = truth.iter().map(|&i| VarId(i + shift)).collect();
        let s = score(&a, &b);
        prop_assert_eq!(s, score(&a2, &b2));
        prop_assert!((0.0..=1.0).contains(&s.f1));
        if s.precision + s.recall > 0.0 {
            prop_assert!((s.f1 - 2.0 * s.precision * s.recall / (s.precision + s.recall)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sampling_matches_enumerated_joint(seed in any::<u64>(), n in 1usize..=4) {
        let bn = random_cpts(&random_dag(n, 0.6, seed).unwrap(), 2, 1.0, seed).unwrap();
        let d = forward_sample(&bn, 200_000, seed).unwrap();
        let mut counts = vec![0u32; 1 << n];
        for r in 0..d.n_rows() {
            let idx = d.row(r).iter().enumerate().map(|(i, &s)| (s as usize) << i).sum::<usize>();
            counts[idx] += 1;
        }
        let tv: f64 = assignments(n)
            .enumerate()
            .map(|(m, a)| (counts[m] as f64 / d.n_rows() as f64 - bn.joint_probability(&a)).abs())
            .sum::<f64>()
            / 2.0;
        prop_assert!(tv < 0.01, "total variation {tv}");
    }
}

#[test]
fn csv_round_trip_through_files() {
    use mimb_core::io::{infer_schema, write_csv_path, RawTable};
    let dir = tempfile::tempdir().unwrap();
    let vars = Arc::new(VarNames::new(&["X", "Y"]).unwrap());
    let schema = Arc::new(Schema::new(vars, vec![vec!["lo".into(), "hi".into()], vec!["1".into(), "2".into(), "10".into()]]));
    let d = Dataset::new(Arc::clone(&schema), vec![vec![0, 1, 1, 0], vec![2, 0, 1, 2]]).unwrap();
    let path = dir.path().join("x.csv");
    write_csv_path(&d, &path).unwrap();
    let raw = RawTable::read_path(&path).unwrap();
    assert_eq!(raw.encode(&schema).unwrap(), d);
    let inferred = infer_schema(&[raw]).unwrap();
    assert_eq!(inferred.states(VarId(1)), ["1", "2", "10"]);
    assert_eq!(inferred.states(VarId(0)), ["hi", "lo"]);
}
