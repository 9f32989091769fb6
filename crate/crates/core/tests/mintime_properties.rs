use core::f64::consts::PI;
use vqpulse_core::circuit::{gate_matrix, GateKind, ParamAngle};
use vqpulse_core::grape::{fidelity, propagate, GrapeConfig};
use vqpulse_core::hamiltonian::{build_controls, HamiltonianSpec};
use vqpulse_core::mintime::{minimal_pulse_time, MinTimeConfig, MinTimeResult, UpperBound};

fn check_probe_log(r: &MinTimeResult, precision: f64) {
    let feasible_min = r
        .probes
        .iter()
        .filter(|p| p.converged)
        .map(|p| p.time)
        .fold(f64::INFINITY, f64::min);
    for p in r.probes.iter().filter(|p| !p.converged) {
        assert!(
            feasible_min >= p.time - precision,
            "feasible {feasible_min} below infeasible {}",
            p.time
        );
    }
    // Probes up to and including the first feasible one grow the bound;
    // the rest bisect the window it leaves.
    let first_ok = r.probes.iter().position(|p| p.converged).unwrap();
    let hi = r.probes[first_ok].time;
    let lo = if first_ok == 0 { 0.0 } else { r.probes[first_ok - 1].time };
    let bisection = r.probes.len() - first_ok - 1;
    let allowed = ((hi - lo) / precision).log2().ceil().max(0.0) as usize;
    assert!(bisection <= allowed, "{bisection} bisection probes, bound {allowed}");
}

fn search(kind: GateKind, angle: Option<f64>, bound: UpperBound, seed: u64) -> MinTimeResult {
    let target = gate_matrix(kind, angle.map(ParamAngle::Constant).as_ref()).unwrap();
    let spec = HamiltonianSpec::default_for(kind.arity());
    let gcfg = GrapeConfig {
        rng_seed: seed,
        ..GrapeConfig::gate_library()
    };
    let mcfg = MinTimeConfig {
        upper_bound: bound,
        ..MinTimeConfig::default()
    };
    let r = minimal_pulse_time(&target, &spec, &gcfg, &mcfg, 0.0).unwrap();
    let controls = build_controls(&spec).unwrap();
    let f = fidelity(&propagate(&r.pulse, &controls).unwrap(), &target).unwrap();
    assert!(f >= gcfg.target_fidelity, "re-verified fidelity {f}");
    assert_eq!(f, r.fidelity);
    assert!((r.pulse.total_time() - r.minimal_time).abs() < 1e-12);
    r
}

#[test]
fn single_qubit_searches_are_consistent() {
    for seed in 0..3 {
        for (kind, angle, bound) in [
            (GateKind::Rz, Some(PI), 3.0),
            (GateKind::H, None, 6.0),
            (GateKind::Rx, Some(PI / 2.0), 0.5),
        ] {
            let r = search(kind, angle, UpperBound::Explicit(bound), seed);
            check_probe_log(&r, 0.3);
        }
    }
}

#[test]
fn rx_half_pi_needs_doubling_from_a_short_bound() {
    let r = search(GateKind::Rx, Some(PI / 2.0), UpperBound::Explicit(0.5), 4);
    assert!(r.probes.iter().any(|p| !p.converged));
    assert!(r.minimal_time >= 1.25 - 0.05 && r.minimal_time <= 1.25 + 0.3 + 1e-9);
}
