//! GRAPE: piecewise-constant control pulses, their propagators, the trace
//! fidelity, exact analytic gradients, and bounded ADAM descent.
//!
//! Amplitudes are kept inside their bounds by optimizing unconstrained
//! variables `x` with `u = bound · tanh(x)`. The cost is
//! `(1 − F) + λ · mean((u / bound)²)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_controls, ControlField, HamiltonianSpec};
use crate::linalg::{self, CMatrix, HermitianEigen, ZERO};
use crate::parallel::par_map;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Pulse discretization in ns.
pub const DEFAULT_DT: f64 = 0.05;
const HERMITIAN_TOL: f64 = 1e-12;

/// Piecewise-constant amplitudes, one row per control field, in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub dt: f64,
    pub labels: Vec<String>,
    pub bounds: Vec<f64>,
    /// `amplitudes[field][step]`.
    pub amplitudes: Vec<Vec<f64>>,
}

impl ControlPulse {
    pub fn zeros(dt: f64, controls: &[ControlField], n_steps: usize) -> Self {
        Self {
            dt,
            labels: controls.iter().map(|c| c.label.clone()).collect(),
            bounds: controls.iter().map(|c| c.bound).collect(),
            amplitudes: vec![vec![0.0; n_steps]; controls.len()],
        }
    }

    /// Builds a pulse, rejecting any amplitude outside its field's bound.
    pub fn new(dt: f64, controls: &[ControlField], amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        let pulse = Self {
            dt,
            labels: controls.iter().map(|c| c.label.clone()).collect(),
            bounds: controls.iter().map(|c| c.bound).collect(),
            amplitudes,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_steps();
        if self.labels.len() != self.amplitudes.len() || self.bounds.len() != self.amplitudes.len()
        {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: self.amplitudes.len(),
            });
        }
        for (row, &bound) in self.amplitudes.iter().zip(&self.bounds) {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| v.abs() > bound * (1.0 + 1e-12)) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "amplitude {v} exceeds bound {bound}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_fields(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_steps(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }

    pub fn total_time(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.amplitudes
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrapeConfig {
    pub target_fidelity: f64,
    pub max_iterations: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay per iteration.
    pub decay_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Weight λ of the normalized-amplitude penalty.
    pub amplitude_penalty: f64,
    pub rng_seed: u64,
    /// Time slice in ns before the sample-rate divisor is applied.
    pub dt: f64,
    /// Pulse slices are `dt · sample_rate_divisor` long; 20 gives 1 GSa/s.
    pub sample_rate_divisor: usize,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            target_fidelity: 0.999,
            max_iterations: 1000,
            learning_rate: 0.01,
            decay_rate: 0.9999,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            amplitude_penalty: 1e-4,
            rng_seed: 0,
            dt: DEFAULT_DT,
            sample_rate_divisor: 1,
        }
    }
}

impl GrapeConfig {
    /// Settings used for one- and two-qubit gate-library pulses.
    pub fn gate_library() -> Self {
        Self {
            learning_rate: 0.05,
            decay_rate: 0.999,
            max_iterations: 3000,
            ..Self::default()
        }
    }

    /// Settings used for multi-gate blocks of up to four qubits.
    pub fn block() -> Self {
        Self {
            learning_rate: 0.1,
            decay_rate: 0.997,
            max_iterations: 1000,
            ..Self::default()
        }
    }

    /// Effective time slice of generated pulses.
    pub fn slice(&self) -> f64 {
        self.dt * self.sample_rate_divisor as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_fidelity > 0.0 && self.target_fidelity <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "target fidelity {} outside (0, 1]",
                self.target_fidelity
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(self.dt > 0.0) || self.sample_rate_divisor == 0 {
            return Err(Error::InvalidConfig("time slice must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrapeResult {
    pub pulse: ControlPulse,
    pub fidelity: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub cost_history: Vec<f64>,
}

/// Nonzero entries of a control generator.
#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != ZERO {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }
}

/// Controls prepared for repeated propagation.
#[derive(Debug, Clone)]
pub struct ControlSet {
    dim: usize,
    fields: Vec<ControlField>,
    sparse: Vec<SparseOp>,
}

impl ControlSet {
    pub fn new(fields: Vec<ControlField>) -> Result<Self> {
        let dim = fields.first().map_or(1, |f| f.matrix.nrows());
        for f in &fields {
            if f.matrix.nrows() != dim || f.matrix.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.matrix.nrows(),
                });
            }
            if linalg::hermiticity_error(&f.matrix) > HERMITIAN_TOL {
                return Err(Error::InvalidHamiltonian(alloc::format!(
                    "control {} is not Hermitian",
                    f.label
                )));
            }
        }
        let sparse = fields.iter().map(|f| SparseOp::from_dense(&f.matrix)).collect();
        Ok(Self { dim, fields, sparse })
    }

    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        Self::new(build_controls(spec)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fields(&self) -> &[ControlField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    fn check_pulse(&self, pulse: &ControlPulse) -> Result<()> {
        if pulse.n_fields() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: pulse.n_fields(),
            });
        }
        Ok(())
    }

    fn hamiltonian(&self, amps: impl Iterator<Item = f64>) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (op, a) in self.sparse.iter().zip(amps) {
            if a != 0.0 {
                for &(r, c, v) in &op.entries {
                    h[(r, c)] += v * a;
                }
            }
        }
        h
    }

    fn step_eigens(&self, amplitudes: &[Vec<f64>], n_steps: usize) -> Vec<HermitianEigen> {
        par_map(n_steps, |k| {
            HermitianEigen::new(&self.hamiltonian(amplitudes.iter().map(|row| row[k])))
        })
    }
}

/// Total propagator `U_N ⋯ U_1` of a pulse, `U_k = exp(−i Σ_f u_f[k] H_f dt)`.
pub fn propagate(pulse: &ControlPulse, controls: &[ControlField]) -> Result<CMatrix> {
    let set = ControlSet::new(controls.to_vec())?;
    propagate_with(pulse, &set)
}

pub fn propagate_with(pulse: &ControlPulse, set: &ControlSet) -> Result<CMatrix> {
    set.check_pulse(pulse)?;
    let steps = par_map(pulse.n_steps(), |k| {
        HermitianEigen::new(&set.hamiltonian(pulse.amplitudes.iter().map(|row| row[k])))
            .propagator(pulse.dt)
    });
    Ok(steps
        .iter()
        .fold(linalg::identity(set.dim()), |acc, u| u * acc))
}

/// Phase-invariant trace fidelity `|Tr(target† · achieved)|² / d²`.
pub fn fidelity(achieved: &CMatrix, target: &CMatrix) -> Result<f64> {
    if achieved.shape() != target.shape() {
        return Err(Error::DimensionMismatch {
            expected: target.nrows(),
            got: achieved.nrows(),
        });
    }
    let d = target.nrows() as f64;
    let g = linalg::trace_overlap(target, achieved);
    Ok((g.norm_sqr() / (d * d)).min(1.0))
}

/// Cost, fidelity, and gradients at one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub cost: f64,
    pub fidelity: f64,
    /// `∂cost/∂u[field][step]`.
    pub d_amplitude: Vec<Vec<f64>>,
    /// `∂cost/∂x[field][step]` for `u = bound · tanh(x)`.
    pub d_unconstrained: Vec<Vec<f64>>,
}

/// `(e^{−iλ_a dt} − e^{−iλ_b dt}) / (λ_a − λ_b)`, the divided difference of the step exponential.
/// `ea`, `eb` are the step phases `e^{−iλ dt}`.
fn exp_divided_difference(la: f64, lb: f64, ea: Complex64, eb: Complex64, dt: f64) -> Complex64 {
    let gap = la - lb;
    if (gap * dt).abs() > 1e-3 {
        (ea - eb) / gap
    } else {
        let phase = Complex64::from_polar(1.0, -(la + lb) * dt / 2.0);
        Complex64::new(0.0, -dt) * phase * linalg::sinc(gap * dt / 2.0)
    }
}

struct Evaluation {
    cost: f64,
    fidelity: f64,
    d_amplitude: Vec<Vec<f64>>,
}

/// Exact cost gradient with respect to every amplitude.
///
/// For `g = Tr(T† U)` the derivative by `u_f[k]` is `Tr(M_k ∂U_k)` with
/// `M_k = U_{k−1}⋯U_1 · T† U_N⋯U_{k+1}`; `∂U_k` comes from the
/// eigendecomposition of the step Hamiltonian via divided differences.
fn evaluate(
    amplitudes: &[Vec<f64>],
    bounds: &[f64],
    dt: f64,
    set: &ControlSet,
    target: &CMatrix,
    penalty: f64,
) -> Evaluation {
    let n_steps = amplitudes.first().map_or(0, Vec::len);
    let n_fields = amplitudes.len();
    let d = set.dim();
    let eigens = set.step_eigens(amplitudes, n_steps);
    let steps: Vec<CMatrix> = par_map(n_steps, |k| eigens[k].propagator(dt));

    // forward[k] = U_k ⋯ U_1, forward[0] = I
    let mut forward = Vec::with_capacity(n_steps + 1);
    forward.push(linalg::identity(d));
    for u in &steps {
        let next = u * forward.last().expect("nonempty");
        forward.push(next);
    }
    let total = &forward[n_steps];
    let g = linalg::trace_overlap(target, total);
    let dd = (d * d) as f64;
    let fid = (g.norm_sqr() / dd).min(1.0);

    // backward[k] = T† U_N ⋯ U_{k+1}, backward[n_steps] = T†
    let mut backward = vec![CMatrix::zeros(0, 0); n_steps + 1];
    backward[n_steps] = target.adjoint();
    for k in (1..=n_steps).rev() {
        backward[k - 1] = &backward[k] * &steps[k - 1];
    }

    let norm = (n_steps * n_fields).max(1) as f64;
    let mut penalty_sum = 0.0;
    for (row, b) in amplitudes.iter().zip(bounds) {
        for u in row {
            penalty_sum += (u / b) * (u / b);
        }
    }
    let cost = (1.0 - fid) + penalty * penalty_sum / norm;

    let g_conj = g.conj();
    let per_step: Vec<Vec<f64>> = par_map(n_steps, |k| {
        let eig = &eigens[k];
        // Step k (1-based k + 1) sits between forward[k] and backward[k + 1].
        let m = &forward[k] * &backward[k + 1];
        let m_tilde = eig.to_eigenbasis(&m);
        let phases: Vec<Complex64> = eig
            .values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * dt))
            .collect();
        let w = CMatrix::from_fn(d, d, |a, b| {
            m_tilde[(b, a)]
                * exp_divided_difference(eig.values[a], eig.values[b], phases[a], phases[b], dt)
        });
        let x = eig.conj_from_eigenbasis(&w);
        set.sparse
            .iter()
            .enumerate()
            .map(|(f, op)| {
                let dg: Complex64 = op.entries.iter().map(|&(r, c, h)| h * x[(r, c)]).sum();
                let d_fid = 2.0 * (g_conj * dg).re / dd;
                let u = amplitudes[f][k];
                let b = bounds[f];
                -d_fid + penalty * 2.0 * u / (b * b * norm)
            })
            .collect()
    });

    let mut d_amplitude = vec![vec![0.0; n_steps]; n_fields];
    for (k, grads) in per_step.into_iter().enumerate() {
        for (f, gk) in grads.into_iter().enumerate() {
            d_amplitude[f][k] = gk;
        }
    }
    Evaluation {
        cost,
        fidelity: fid,
        d_amplitude,
    }
}

fn chain_to_unconstrained(d_amplitude: &[Vec<f64>], amplitudes: &[Vec<f64>], bounds: &[f64]) -> Vec<Vec<f64>> {
    d_amplitude
        .iter()
        .zip(amplitudes)
        .zip(bounds)
        .map(|((grow, urow), &b)| {
            grow.iter()
                .zip(urow)
                .map(|(gd, u)| {
                    let s = u / b;
                    gd * b * (1.0 - s * s)
                })
                .collect()
        })
        .collect()
}

/// Cost and its gradient at `pulse` for a unitary target, with penalty weight `penalty`.
pub fn gradient(
    pulse: &ControlPulse,
    controls: &[ControlField],
    target: &CMatrix,
    penalty: f64,
) -> Result<Gradient> {
    let set = ControlSet::new(controls.to_vec())?;
    set.check_pulse(pulse)?;
    if target.nrows() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: target.nrows(),
        });
    }
    let eval = evaluate(&pulse.amplitudes, &pulse.bounds, pulse.dt, &set, target, penalty);
    let d_unconstrained = chain_to_unconstrained(&eval.d_amplitude, &pulse.amplitudes, &pulse.bounds);
    Ok(Gradient {
        cost: eval.cost,
        fidelity: eval.fidelity,
        d_amplitude: eval.d_amplitude,
        d_unconstrained,
    })
}

/// Cost of the pulse `u = bound · tanh(x)`, for finite-difference checks.
pub fn cost_of_unconstrained(
    x: &[Vec<f64>],
    controls: &[ControlField],
    dt: f64,
    target: &CMatrix,
    penalty: f64,
) -> Result<f64> {
    let set = ControlSet::new(controls.to_vec())?;
    let bounds: Vec<f64> = controls.iter().map(|c| c.bound).collect();
    let amps = to_amplitudes(x, &bounds);
    let pulse = ControlPulse {
        dt,
        labels: controls.iter().map(|c| c.label.clone()).collect(),
        bounds: bounds.clone(),
        amplitudes: amps,
    };
    let u = propagate_with(&pulse, &set)?;
    let fid = fidelity(&u, target)?;
    let norm = (pulse.n_steps() * pulse.n_fields()).max(1) as f64;
    let pen: f64 = x.iter().flatten().map(|v| v.tanh() * v.tanh()).sum::<f64>() / norm;
    Ok(1.0 - fid + penalty * pen)
}

fn to_amplitudes(x: &[Vec<f64>], bounds: &[f64]) -> Vec<Vec<f64>> {
    x.iter()
        .zip(bounds)
        .map(|(row, &b)| row.iter().map(|v| b * v.tanh()).collect())
        .collect()
}

/// Runs GRAPE toward `target` with pulses of `total_time` ns.
pub fn grape_optimize(
    target: &CMatrix,
    spec: &HamiltonianSpec,
    config: &GrapeConfig,
    total_time: f64,
) -> Result<GrapeResult> {
    let set = ControlSet::from_spec(spec)?;
    grape_optimize_with(target, &set, config, total_time)
}

pub fn grape_optimize_with(
    target: &CMatrix,
    set: &ControlSet,
    config: &GrapeConfig,
    total_time: f64,
) -> Result<GrapeResult> {
    config.validate()?;
    if target.nrows() != set.dim() || target.ncols() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: target.nrows(),
        });
    }
    let slice = config.slice();
    let n_steps = if total_time > 0.0 {
        (total_time / slice).round() as usize
    } else {
        0
    };
    if n_steps == 0 {
        return Err(Error::ZeroSteps);
    }
    let fields = set.fields();
    let bounds: Vec<f64> = fields.iter().map(|f| f.bound).collect();

    let identity_fid = fidelity(&linalg::identity(set.dim()), target)?;
    if identity_fid >= config.target_fidelity {
        return Ok(GrapeResult {
            pulse: ControlPulse::zeros(slice, fields, n_steps),
            fidelity: identity_fid,
            iterations_used: 0,
            converged: true,
            cost_history: vec![1.0 - identity_fid],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut x: Vec<f64> = (0..fields.len() * n_steps)
        .map(|_| rng.random_range(-0.1..0.1))
        .collect();
    let mut adam = Adam::new(
        x.len(),
        config.learning_rate,
        config.decay_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
    );

    let rows = |flat: &[f64]| -> Vec<Vec<f64>> {
        flat.chunks(n_steps).map(<[f64]>::to_vec).collect()
    };
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut iteration = 0;
    let mut converged = false;
    loop {
        let amps = to_amplitudes(&rows(&x), &bounds);
        let eval = evaluate(&amps, &bounds, slice, set, target, config.amplitude_penalty);
        history.push(eval.cost);
        if best.as_ref().is_none_or(|(f, _)| eval.fidelity > *f) {
            best = Some((eval.fidelity, amps.clone()));
        }
        if eval.fidelity >= config.target_fidelity {
            converged = true;
            best = Some((eval.fidelity, amps));
            break;
        }
        if iteration >= config.max_iterations {
            break;
        }
        let grad = chain_to_unconstrained(&eval.d_amplitude, &amps, &bounds);
        let flat: Vec<f64> = grad.into_iter().flatten().collect();
        adam.step(&mut x, &flat);
        iteration += 1;
    }

    let (fid, amplitudes) = best.expect("at least one evaluation");
    Ok(GrapeResult {
        pulse: ControlPulse {
            dt: slice,
            labels: fields.iter().map(|f| f.label.clone()).collect(),
            bounds,
            amplitudes,
        },
        fidelity: fid,
        iterations_used: iteration,
        converged,
        cost_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gate_matrix, GateKind};
    use core::f64::consts::PI;

    fn one_qubit() -> Vec<ControlField> {
        build_controls(&HamiltonianSpec::default_for(1)).unwrap()
    }

    fn constant_pulse(controls: &[ControlField], values: &[f64], n: usize) -> ControlPulse {
        ControlPulse::new(
            DEFAULT_DT,
            controls,
            values.iter().map(|&v| vec![v; n]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_pulse_propagates_to_identity() {
        let c = one_qubit();
        let u = propagate(&ControlPulse::zeros(DEFAULT_DT, &c, 17), &c).unwrap();
        assert!(linalg::max_abs_diff(&u, &linalg::identity(2)) < 1e-14);
    }

    #[test]
    fn constant_charge_gives_x() {
        let c = one_qubit();
        let p = constant_pulse(&c, &[0.2 * PI, 0.0], 50);
        assert!((p.total_time() - 2.5).abs() < 1e-12);
        let u = propagate(&p, &c).unwrap();
        let x = linalg::pauli_x();
        assert!((fidelity(&u, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_flux_gives_phase() {
        let c = one_qubit();
        let omega = 2.0;
        let p = constant_pulse(&c, &[0.0, omega], 8);
        let t = p.total_time();
        let u = propagate(&p, &c).unwrap();
        assert!((u[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, -omega * t)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let x = linalg::pauli_x();
        assert!((fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let phased = &x * Complex64::from_polar(1.0, 0.77);
        assert!((fidelity(&phased, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&linalg::identity(2), &x).unwrap().abs() < 1e-15);
        assert!(fidelity(&linalg::identity(4), &x).is_err());
    }

    #[test]
    fn gradient_vanishes_at_exact_optimum() {
        let c = one_qubit();
        let p = constant_pulse(&c, &[0.2 * PI * 0.5, 0.0], 20);
        let target = propagate(&p, &c).unwrap();
        let g = gradient(&p, &c, &target, 0.0).unwrap();
        assert!((g.fidelity - 1.0).abs() < 1e-12);
        let max = g.d_amplitude.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-8, "{max}");
    }

    #[test]
    fn penalty_only_gradient_at_optimum() {
        let c = one_qubit();
        let p = constant_pulse(&c, &[0.3, -1.1], 10);
        let target = propagate(&p, &c).unwrap();
        let lambda = 0.2;
        let g = gradient(&p, &c, &target, lambda).unwrap();
        let norm = 20.0;
        for f in 0..2 {
            let b = c[f].bound;
            let s = p.amplitudes[f][0] / b;
            let expected = 2.0 * lambda * s / norm * (1.0 - s * s);
            for k in 0..10 {
                assert!((g.d_unconstrained[f][k] - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_target_converges_immediately() {
        let spec = HamiltonianSpec::default_for(1);
        let r = grape_optimize(&linalg::identity(2), &spec, &GrapeConfig::default(), 1.3).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations_used, 0);
        assert_eq!(r.fidelity, 1.0);
        assert_eq!(r.pulse.max_abs_amplitude(), 0.0);
    }

    #[test]
    fn rz_pi_in_point_four_ns() {
        let spec = HamiltonianSpec::default_for(1);
        let target = gate_matrix(GateKind::Rz, Some(&PI.into())).unwrap();
        let r = grape_optimize(&target, &spec, &GrapeConfig::default(), 0.4).unwrap();
        assert!(r.converged, "fidelity {}", r.fidelity);
        assert!(r.fidelity >= 0.999);
        assert_eq!(r.pulse.n_steps(), 8);
    }

    #[test]
    fn rx_pi_unreachable_in_one_ns() {
        let spec = HamiltonianSpec::default_for(1);
        let target = gate_matrix(GateKind::Rx, Some(&PI.into())).unwrap();
        let r = grape_optimize(&target, &spec, &GrapeConfig::default(), 1.0).unwrap();
        assert!(!r.converged);
        assert!(r.fidelity < 0.999);
        assert_eq!(r.iterations_used, 1000);
    }

    #[test]
    fn zero_time_is_rejected() {
        let spec = HamiltonianSpec::default_for(1);
        let target = linalg::pauli_x();
        assert_eq!(
            grape_optimize(&target, &spec, &GrapeConfig::default(), 0.0),
            Err(Error::ZeroSteps)
        );
    }

    #[test]
    fn non_hermitian_controls_rejected() {
        let mut c = one_qubit();
        c[0].matrix[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(ControlSet::new(c).is_err());
    }

    #[test]
    fn sample_rate_divisor_coarsens_slices() {
        let spec = HamiltonianSpec::default_for(1);
        let cfg = GrapeConfig {
            sample_rate_divisor: 20,
            max_iterations: 5,
            ..GrapeConfig::default()
        };
        let r = grape_optimize(&linalg::pauli_x(), &spec, &cfg, 3.0).unwrap();
        assert_eq!(r.pulse.n_steps(), 3);
        assert!((r.pulse.dt - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_respected() {
        let spec = HamiltonianSpec::default_for(1);
        let target = gate_matrix(GateKind::Rx, Some(&PI.into())).unwrap();
        let cfg = GrapeConfig {
            learning_rate: 0.5,
            max_iterations: 50,
            ..GrapeConfig::default()
        };
        let r = grape_optimize(&target, &spec, &cfg, 1.0).unwrap();
        r.pulse.validate().unwrap();
    }
}
