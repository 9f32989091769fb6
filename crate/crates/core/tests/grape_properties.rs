use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqpulse_core::circuit::{gate_matrix, GateKind};
use vqpulse_core::grape::{
    fidelity, grape_optimize, propagate, ControlPulse, GrapeConfig,
};
use vqpulse_core::hamiltonian::{build_controls, HamiltonianSpec};
use vqpulse_core::linalg;

fn random_pulse(n: usize, steps: usize, seed: u64) -> (ControlPulse, Vec<vqpulse_core::hamiltonian::ControlField>) {
    let controls = build_controls(&HamiltonianSpec::default_for(n)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = controls
        .iter()
        .map(|c| (0..steps).map(|_| rng.random_range(-c.bound..=c.bound)).collect())
        .collect();
    (ControlPulse::new(0.05, &controls, amps).unwrap(), controls)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn long_random_pulses_stay_unitary(n in 1usize..=3, seed in any::<u64>()) {
        let (pulse, controls) = random_pulse(n, 1000, seed);
        let u = propagate(&pulse, &controls).unwrap();
        prop_assert!(linalg::unitarity_error(&u) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fidelity_ignores_global_phase(n in 1usize..=2, seed in any::<u64>(), phi in -10.0f64..10.0) {
        let (pulse, controls) = random_pulse(n, 20, seed);
        let u = propagate(&pulse, &controls).unwrap();
        let (target, _) = random_pulse(n, 20, seed ^ 0x5555);
        let t = propagate(&target, &controls).unwrap();
        let rotated = &t * Complex64::from_polar(1.0, phi);
        let a = fidelity(&u, &t).unwrap();
        let b = fidelity(&u, &rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }
}

#[test]
fn optimizer_is_deterministic_per_seed() {
    let target = gate_matrix(GateKind::Cx, None).unwrap();
    let spec = HamiltonianSpec::default_for(2);
    let cfg = GrapeConfig {
        max_iterations: 60,
        rng_seed: 11,
        ..GrapeConfig::gate_library()
    };
    let a = grape_optimize(&target, &spec, &cfg, 3.0).unwrap();
    let b = grape_optimize(&target, &spec, &cfg, 3.0).unwrap();
    assert_eq!(a.cost_history, b.cost_history);
    assert_eq!(a.pulse, b.pulse);
    let c = grape_optimize(&target, &spec, &GrapeConfig { rng_seed: 12, ..cfg }, 3.0).unwrap();
    assert_ne!(a.cost_history, c.cost_history);
}

#[test]
fn feasibility_persists_when_time_doubles() {
    let target = gate_matrix(GateKind::H, None).unwrap();
    let spec = HamiltonianSpec::default_for(1);
    let mut feasible = 0;
    let mut kept = 0;
    for seed in 0..20 {
        let cfg = GrapeConfig {
            rng_seed: seed,
            ..GrapeConfig::gate_library()
        };
        if grape_optimize(&target, &spec, &cfg, 1.4).unwrap().converged {
            feasible += 1;
            if grape_optimize(&target, &spec, &cfg, 2.8).unwrap().converged {
                kept += 1;
            }
        }
    }
    assert!(feasible > 0, "H never converged at 1.4 ns");
    assert!(kept as f64 >= 0.95 * feasible as f64, "{kept}/{feasible}");
}
