use proptest::prelude::*;
use qrbf::dataset::{generate, load_csv, save_csv};
use qrbf::experiment::{mse, rcp};
use qrbf::svm::project_feasible;
use qrbf::train::TensorObjective;
use qrbf::{KernelModel, PatternFamily, PatternSpec, TensorWeights};

fn family(i: usize) -> PatternFamily {
    PatternFamily::ALL[i % PatternFamily::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_is_symmetric_with_unit_diagonal(f in 0usize..4, m in 1u32..7, seed in any::<u64>()) {
        let ds = generate(&PatternSpec::new(family(f), 1 << m, 0.05, seed)).unwrap();
        let model = KernelModel::fit(&ds).unwrap();
        let g = model.gram();
        for s in 0..g.nrows() {
            prop_assert_eq!(g[(s, s)], 1.0);
            for t in 0..s {
                prop_assert_eq!(g[(s, t)], g[(t, s)]);
                prop_assert!(g[(s, t)] > 0.0 && g[(s, t)] <= 1.0);
            }
            prop_assert!(model.row_norms()[s] >= 1.0);
        }
        prop_assert!((model.density_operator().trace() - 1.0).abs() < 1e-12);
    }

    // The training objective shares the model's Gram matrix; it must agree
    // with one built from an explicit feature matrix.
    #[test]
    fn shared_objective_matches_explicit(
        m in 1u32..7,
        seed in any::<u64>(),
        normalize in any::<bool>(),
        theta_seed in any::<u64>(),
    ) {
        let ds = generate(&PatternSpec::new(PatternFamily::Annulus, 1 << m, 0.05, seed)).unwrap();
        let model = KernelModel::fit(&ds).unwrap();
        let shared = TensorObjective::new(&model, &ds, normalize).unwrap();
        let explicit = TensorObjective::from_features(model.feature_rows(&ds, normalize).unwrap(), ds.labels()).unwrap();
        let w = TensorWeights::random(m as usize, theta_seed).unwrap();
        let (la, ga) = shared.loss_and_gradient(&w).unwrap();
        let (lb, gb) = explicit.loss_and_gradient(&w).unwrap();
        prop_assert!((la - lb).abs() <= 1e-12 * lb.abs().max(1.0));
        for (a, b) in ga.iter().zip(&gb) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let (ha, hb) = (shared.hessian(&w).unwrap(), explicit.hessian(&w).unwrap());
        prop_assert!((ha - hb).amax() <= 1e-12);
    }

    #[test]
    fn projection_is_feasible_and_idempotent(y in prop::collection::vec(-3.0f64..3.0, 2..40), seed in any::<u64>()) {
        let labels: Vec<f64> = (0..y.len()).map(|i| if i == 0 || (i > 1 && (seed >> (i % 64)) & 1 == 1) { 1.0 } else { -1.0 }).collect();
        let p = project_feasible(&y, &labels);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        let residual: f64 = p.iter().zip(&labels).map(|(a, r)| a * r).sum();
        prop_assert!(residual.abs() <= 1e-10);
        let again = project_feasible(&p, &labels);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn metrics_are_bounded(scores in prop::collection::vec(-2.0f64..2.0, 1..50), seed in any::<u64>()) {
        let labels: Vec<f64> = (0..scores.len()).map(|i| if (seed >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let r = rcp(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(mse(&scores, &labels).unwrap() >= 0.0);
        prop_assert_eq!(rcp(&labels, &labels).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip(f in 0usize..4, m in 1u32..6, seed in any::<u64>()) {
        let ds = generate(&PatternSpec::new(family(f), 1 << m, 0.1, seed)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in back.samples().iter().zip(ds.samples()) {
            prop_assert_eq!(a, b);
        }
    }
}
