use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vxslice::env::{project_action, project_action_masked, Environment, RelaxedAction};
use vxslice::eval::random_action;
use vxslice::NetworkConfig;

fn relaxed(n: usize, m: usize, values: &[f64]) -> RelaxedAction {
    RelaxedAction {
        association: Array2::from_shape_vec((n, m), values[..n * m].to_vec()).unwrap(),
        fractions: Array2::from_shape_vec((n, m), values[n * m..2 * n * m].to_vec()).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// One gNB per active vehicle, PRBs only on the serving gNB, and no gNB over capacity.
    #[test]
    fn projection_is_always_feasible(
        n in 1usize..8,
        m in 1usize..5,
        capacity in 1u32..400,
        values in prop::collection::vec(-0.5f64..1.5, 64),
        active_bits in any::<u8>(),
    ) {
        let cfg = NetworkConfig { num_vehicles: n, num_gnbs: m, prbs_per_gnb: capacity, ..Default::default() };
        let raw = relaxed(n, m, &values);
        let active: Vec<bool> = (0..n).map(|i| active_bits >> i & 1 == 1).collect();
        let alloc = project_action_masked(&raw, &cfg, &active).unwrap();
        prop_assert!(alloc.check(capacity, &active).is_ok());
        for i in 0..n {
            let assoc: u32 = (0..m).map(|g| u32::from(alloc.association(i, g))).sum();
            prop_assert_eq!(assoc, u32::from(active[i]));
            for g in 0..m {
                if alloc.serving[i] != Some(g) {
                    prop_assert_eq!(alloc.prbs[[i, g]], 0);
                }
            }
        }
        for g in 0..m {
            let used: u64 = (0..n).map(|i| u64::from(alloc.prbs[[i, g]])).sum();
            prop_assert!(used <= u64::from(capacity));
        }
    }

    #[test]
    fn rewards_are_non_positive_and_observations_bounded(seed in any::<u64>(), steps in 1usize..30) {
        let cfg = NetworkConfig::default();
        let mut env = Environment::new(cfg.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..steps {
            let out = env.step(&random_action(cfg.num_vehicles, cfg.num_gnbs, &mut rng)).unwrap();
            prop_assert!(out.reward <= 0.0);
            let penalties: f64 = out.vehicles.iter().map(|v| v.urllc_penalty + v.embb_penalty).sum();
            prop_assert!((out.reward + penalties).abs() < 1e-9);
            prop_assert_eq!(out.reward == 0.0, !out.any_violation());
            prop_assert!(out.observation.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn ten_thousand_random_projections_are_feasible() {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let raw = random_action(cfg.num_vehicles, cfg.num_gnbs, &mut rng);
        let alloc = project_action(&raw, &cfg).unwrap();
        alloc.check(cfg.prbs_per_gnb, &[true; 5]).unwrap();
    }
}

#[test]
fn clones_evolve_identically() {
    let cfg = NetworkConfig::default();
    let mut env = Environment::new(cfg.clone(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        env.step(&random_action(5, 3, &mut rng)).unwrap();
    }
    let mut twin = env.clone();
    for _ in 0..50 {
        let a = random_action(5, 3, &mut rng);
        assert_eq!(env.step(&a).unwrap(), twin.step(&a).unwrap());
    }
}

#[test]
fn reseeding_changes_future_mobility_only() {
    let cfg = NetworkConfig::default();
    let env = Environment::new(cfg, 12).unwrap();
    let (mut a, mut b) = (env.clone(), env.clone());
    a.reseed(1);
    b.reseed(2);
    assert_eq!(a.observe(), b.observe());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut diverged = false;
    for _ in 0..200 {
        let act = random_action(5, 3, &mut rng);
        let (oa, ob) = (a.step(&act).unwrap(), b.step(&act).unwrap());
        diverged |= oa.observation != ob.observation;
    }
    assert!(diverged);
}
