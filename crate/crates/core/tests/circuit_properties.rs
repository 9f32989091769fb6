mod common;

use proptest::prelude::*;
use vqpulse_core::circuit::{
    bind_parameters, build_unitary, critical_path_runtime, merge_rotations, Circuit, GateTimes,
};
use vqpulse_core::grape::fidelity;
use vqpulse_core::linalg;

/// Longest path over the explicit dependency DAG: gate `j` depends on every
/// earlier gate sharing a qubit with it.
fn longest_path_oracle(c: &Circuit, times: &GateTimes) -> f64 {
    let gates = c.gates();
    let mut finish = vec![0.0f64; gates.len()];
    for j in 0..gates.len() {
        let ready = (0..j)
            .filter(|&i| gates[i].qubits.iter().any(|q| gates[j].qubits.contains(q)))
            .map(|i| finish[i])
            .fold(0.0, f64::max);
        finish[j] = ready + times.duration(gates[j].kind);
    }
    finish.into_iter().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn built_unitaries_are_unitary((c, p) in common::circuit_and_params(4, 50)) {
        let u = build_unitary(&c, &p).unwrap();
        prop_assert!(linalg::unitarity_error(&u) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn merge_preserves_unitary((c, p) in common::circuit_and_params(3, 40)) {
        let merged = merge_rotations(&c);
        prop_assert!(merged.len() <= c.len());
        let f = fidelity(&build_unitary(&merged, &p).unwrap(), &build_unitary(&c, &p).unwrap()).unwrap();
        prop_assert!(f >= 1.0 - 1e-9, "fidelity {}", f);
    }

    #[test]
    fn merge_is_idempotent(c in common::circuit(4, 60)) {
        let once = merge_rotations(&c);
        prop_assert_eq!(merge_rotations(&once), once);
    }

    #[test]
    fn critical_path_matches_dag_oracle(c in common::circuit(4, 60)) {
        let times = GateTimes::default();
        prop_assert_eq!(critical_path_runtime(&c, &times), longest_path_oracle(&c, &times));
    }

    #[test]
    fn binding_commutes_with_building((c, p) in common::circuit_and_params(3, 30)) {
        let bound = bind_parameters(&c, &p).unwrap();
        prop_assert!(bound.is_parameter_free());
        let direct = build_unitary(&c, &p).unwrap();
        let via_bind = build_unitary(&bound, &vqpulse_core::circuit::Parametrization::empty()).unwrap();
        prop_assert_eq!(direct, via_bind);
    }
}
