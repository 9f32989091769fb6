//! Bisection for the shortest pulse duration at which GRAPE reaches its
//! target fidelity.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{self, ControlPulse, ControlSet, GrapeConfig};
use crate::hamiltonian::HamiltonianSpec;
use crate::linalg::{self, CMatrix};
#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UpperBound {
    /// The gate-based runtime passed to the search.
    GateBaseline,
    /// Fixed upper bound in ns.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinTimeConfig {
    /// Width of the final search window in ns.
    pub precision: f64,
    pub upper_bound: UpperBound,
    /// Largest multiple of the initial upper bound tried when it is infeasible.
    pub doubling_cap: f64,
}

impl Default for MinTimeConfig {
    fn default() -> Self {
        Self {
            precision: 0.3,
            upper_bound: UpperBound::GateBaseline,
            doubling_cap: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub time: f64,
    pub converged: bool,
    pub fidelity: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTimeResult {
    pub minimal_time: f64,
    pub pulse: ControlPulse,
    pub fidelity: f64,
    pub probes: Vec<Probe>,
}

impl MinTimeResult {
    /// Optimizer iterations summed over all probes.
    pub fn total_iterations(&self) -> usize {
        self.probes.iter().map(|p| p.iterations).sum()
    }
}

/// Seed of the `index`-th probe, derived from the base seed (splitmix64).
pub fn probe_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rounds `t` up to a whole number of slices.
fn ceil_to_grid(t: f64, slice: f64) -> f64 {
    let steps = (t / slice - 1e-9).ceil().max(0.0);
    steps * slice
}

/// Finds the shortest feasible `total_time` for `target`.
///
/// The upper bound is probed first and doubled (up to `doubling_cap` times
/// its initial value) while infeasible; the window between the largest
/// infeasible and smallest feasible probe is then bisected down to
/// `precision`. Every probe uses a fresh seed derived from the base seed.
pub fn minimal_pulse_time(
    target: &CMatrix,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    config: &MinTimeConfig,
    baseline_runtime: f64,
) -> Result<MinTimeResult> {
    let set = ControlSet::from_spec(spec)?;
    minimal_pulse_time_with(target, &set, grape_config, config, baseline_runtime)
}

pub fn minimal_pulse_time_with(
    target: &CMatrix,
    set: &ControlSet,
    grape_config: &GrapeConfig,
    config: &MinTimeConfig,
    baseline_runtime: f64,
) -> Result<MinTimeResult> {
    grape_config.validate()?;
    let slice = grape_config.slice();
    if !(config.precision >= slice) {
        return Err(Error::InvalidConfig(alloc::format!(
            "precision {} is finer than the {} ns slice",
            config.precision,
            slice
        )));
    }
    if target.nrows() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: target.nrows(),
        });
    }

    let identity_fid = grape::fidelity(&linalg::identity(set.dim()), target)?;
    if identity_fid >= grape_config.target_fidelity {
        return Ok(MinTimeResult {
            minimal_time: 0.0,
            pulse: ControlPulse::zeros(slice, set.fields(), 0),
            fidelity: identity_fid,
            probes: Vec::new(),
        });
    }

    let initial = match config.upper_bound {
        UpperBound::GateBaseline => {
            if !(baseline_runtime > 0.0) {
                return Err(Error::InvalidConfig(
                    "gate-baseline upper bound needs a positive baseline runtime".into(),
                ));
            }
            baseline_runtime
        }
        UpperBound::Explicit(m) => m,
    };
    let initial = ceil_to_grid(initial, slice).max(slice);

    let mut probes: Vec<Probe> = Vec::new();
    let run = |time: f64, probes: &mut Vec<Probe>| -> Result<grape::GrapeResult> {
        let cfg = GrapeConfig {
            rng_seed: probe_seed(grape_config.rng_seed, probes.len()),
            ..*grape_config
        };
        let r = grape::grape_optimize_with(target, set, &cfg, time)?;
        probes.push(Probe {
            time,
            converged: r.converged,
            fidelity: r.fidelity,
            iterations: r.iterations_used,
        });
        Ok(r)
    };

    // Find a feasible upper bound.
    let mut lo = 0.0;
    let mut hi = initial;
    let mut best = loop {
        let r = run(hi, &mut probes)?;
        if r.converged {
            break r;
        }
        lo = hi;
        let next = ceil_to_grid(hi * 2.0, slice);
        if next > initial * config.doubling_cap + 1e-9 {
            return Err(Error::NoConvergence {
                upper_bound_ns: hi,
                probes: probes.iter().map(|p| (p.time, p.converged)).collect(),
            });
        }
        hi = next;
    };

    while hi - lo > config.precision + 1e-9 {
        let mid = ceil_to_grid((lo + hi) / 2.0, slice);
        if mid >= hi - 1e-9 || mid <= lo + 1e-9 {
            break;
        }
        let r = run(mid, &mut probes)?;
        if r.converged {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
    }

    // Re-check the winning pulse outside the optimizer.
    let achieved = grape::propagate_with(&best.pulse, set)?;
    let fidelity = grape::fidelity(&achieved, target)?;
    Ok(MinTimeResult {
        minimal_time: best.pulse.total_time(),
        pulse: best.pulse,
        fidelity,
        probes,
    })
}
