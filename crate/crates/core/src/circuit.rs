//! Parametrized circuit IR, gate matrices, unitary construction, the
//! rotation-merging pass and critical-path scheduling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Widest register [`build_unitary`] will densify by default.
pub const DEFAULT_DENSE_CAP: usize = 6;

/// A rotation angle: constant, or `coeff * t[param] + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamAngle {
    Constant(f64),
    Affine { param: usize, coeff: f64, offset: f64 },
}

impl ParamAngle {
    /// Builds an affine angle, collapsing a zero coefficient to a constant.
    pub fn affine(param: usize, coeff: f64, offset: f64) -> Self {
        if coeff == 0.0 {
            ParamAngle::Constant(offset)
        } else {
            ParamAngle::Affine {
                param,
                coeff,
                offset,
            }
        }
    }

    pub fn param(param: usize) -> Self {
        Self::affine(param, 1.0, 0.0)
    }

    pub fn param_index(&self) -> Option<usize> {
        match *self {
            ParamAngle::Constant(_) => None,
            ParamAngle::Affine { param, .. } => Some(param),
        }
    }

    /// The value of a constant angle.
    pub fn constant(&self) -> Option<f64> {
        match *self {
            ParamAngle::Constant(v) => Some(v),
            ParamAngle::Affine { .. } => None,
        }
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        match *self {
            ParamAngle::Constant(v) => Ok(v),
            ParamAngle::Affine {
                param,
                coeff,
                offset,
            } => values
                .get(param)
                .map(|t| coeff * t + offset)
                .ok_or(Error::UnboundParameter(param)),
        }
    }

    /// Sum of two angles when it is still expressible as one `ParamAngle`.
    pub fn merged(&self, other: &ParamAngle) -> Option<ParamAngle> {
        use ParamAngle::*;
        match (*self, *other) {
            (Constant(a), Constant(b)) => Some(Constant(a + b)),
            (Constant(c), Affine { param, coeff, offset })
            | (Affine { param, coeff, offset }, Constant(c)) => {
                Some(ParamAngle::affine(param, coeff, offset + c))
            }
            (
                Affine {
                    param: p1,
                    coeff: c1,
                    offset: o1,
                },
                Affine {
                    param: p2,
                    coeff: c2,
                    offset: o2,
                },
            ) if p1 == p2 => Some(ParamAngle::affine(p1, c1 + c2, o1 + o2)),
            _ => None,
        }
    }
}

impl From<f64> for ParamAngle {
    fn from(v: f64) -> Self {
        ParamAngle::Constant(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Rz,
    Rx,
    H,
    Cx,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [
        GateKind::Rz,
        GateKind::Rx,
        GateKind::H,
        GateKind::Cx,
        GateKind::Swap,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rz | GateKind::Rx | GateKind::H => 1,
            GateKind::Cx | GateKind::Swap => 2,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rz | GateKind::Rx)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rz => "rz",
            GateKind::Rx => "rx",
            GateKind::H => "h",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// Present exactly for rotations.
    pub angle: Option<ParamAngle>,
}

impl Gate {
    pub fn rz(q: usize, angle: impl Into<ParamAngle>) -> Self {
        Self {
            kind: GateKind::Rz,
            qubits: vec![q],
            angle: Some(angle.into()),
        }
    }

    pub fn rx(q: usize, angle: impl Into<ParamAngle>) -> Self {
        Self {
            kind: GateKind::Rx,
            qubits: vec![q],
            angle: Some(angle.into()),
        }
    }

    pub fn h(q: usize) -> Self {
        Self {
            kind: GateKind::H,
            qubits: vec![q],
            angle: None,
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cx,
            qubits: vec![control, target],
            angle: None,
        }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Swap,
            qubits: vec![a, b],
            angle: None,
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        self.angle.and_then(|a| a.param_index())
    }

    pub fn is_parametrized(&self) -> bool {
        self.param_index().is_some()
    }

    pub fn touches(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    fn validate(&self, width: usize, param_count: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} takes {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} on repeated qubit {}",
                self.kind, self.qubits[0]
            )));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= width) {
            return Err(Error::QubitOutOfRange { index: q, width });
        }
        match (self.kind.is_rotation(), self.angle) {
            (true, None) => {
                return Err(Error::InvalidGate(format!("{} requires an angle", self.kind)))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidGate(format!("{} takes no angle", self.kind)))
            }
            _ => {}
        }
        if let Some(ParamAngle::Affine { param, coeff, .. }) = self.angle {
            if param >= param_count {
                return Err(Error::ParamOutOfRange {
                    index: param,
                    count: param_count,
                });
            }
            if coeff == 0.0 {
                return Err(Error::InvalidGate("affine angle with zero coefficient".into()));
            }
        }
        Ok(())
    }
}

/// Ordered gate list over `width` qubits and `param_count` variational parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    width: usize,
    param_count: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize, param_count: usize) -> Self {
        Self {
            width,
            param_count,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(width: usize, param_count: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(width, param_count);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width, self.param_count)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// True when no gate carries a symbolic angle.
    pub fn is_parameter_free(&self) -> bool {
        self.gates.iter().all(|g| !g.is_parametrized())
    }

    /// Parameter indices of the symbolic gates, in gate order.
    pub fn param_sequence(&self) -> Vec<usize> {
        self.gates.iter().filter_map(Gate::param_index).collect()
    }

    /// Sorted, deduplicated list of qubits some gate acts on.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut used = vec![false; self.width];
        for g in &self.gates {
            for &q in &g.qubits {
                used[q] = true;
            }
        }
        (0..self.width).filter(|&q| used[q]).collect()
    }
}

/// Parameter vector `θ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Parametrization(pub Vec<f64>);

impl Parametrization {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn check(&self, circuit: &Circuit) -> Result<()> {
        if self.0.len() != circuit.param_count() {
            return Err(Error::ParamCountMismatch {
                expected: circuit.param_count(),
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Matrix of a gate at a bound angle.
///
/// `Rx(θ) = [[i cos θ/2, sin θ/2], [sin θ/2, i cos θ/2]]` and
/// `Rz(φ) = diag(1, e^{iφ})`; the Rx phase differs from the usual
/// `exp(-iθX/2)` by a global factor of `i`.
pub fn gate_matrix(kind: GateKind, angle: Option<&ParamAngle>) -> Result<CMatrix> {
    let bound = |a: Option<&ParamAngle>| -> Result<f64> {
        match a {
            Some(ParamAngle::Constant(v)) => Ok(*v),
            Some(ParamAngle::Affine { param, .. }) => Err(Error::UnboundParameter(*param)),
            None => Err(Error::InvalidGate(format!("{kind} requires an angle"))),
        }
    };
    let m = match kind {
        GateKind::Rx => {
            let half = bound(angle)? / 2.0;
            let (s, co) = (half.sin(), half.cos());
            linalg::from_rows(&[&[c(0.0, co), c(s, 0.0)], &[c(s, 0.0), c(0.0, co)]])
        }
        GateKind::Rz => {
            let phi = bound(angle)?;
            linalg::from_rows(&[&[ONE, ZERO], &[ZERO, Complex64::from_polar(1.0, phi)]])
        }
        GateKind::H => {
            let r = c(core::f64::consts::FRAC_1_SQRT_2, 0.0);
            linalg::from_rows(&[&[r, r], &[r, -r]])
        }
        GateKind::Cx => linalg::from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
            &[ZERO, ZERO, ONE, ZERO],
        ]),
        GateKind::Swap => linalg::from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ZERO, ONE, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
        ]),
    };
    Ok(m)
}

impl Gate {
    /// Matrix of this gate, which must have a constant angle if it rotates.
    pub fn matrix(&self) -> Result<CMatrix> {
        gate_matrix(self.kind, self.angle.as_ref())
    }
}

/// Unitary of `circuit` at `params`, using the default width cap.
pub fn build_unitary(circuit: &Circuit, params: &Parametrization) -> Result<CMatrix> {
    build_unitary_capped(circuit, params, DEFAULT_DENSE_CAP)
}

pub fn build_unitary_capped(
    circuit: &Circuit,
    params: &Parametrization,
    cap: usize,
) -> Result<CMatrix> {
    if circuit.width() > cap {
        return Err(Error::TooWide {
            width: circuit.width(),
            cap,
        });
    }
    params.check(circuit)?;
    let n = circuit.width();
    let mut u = linalg::identity(1 << n);
    for gate in circuit.gates() {
        let angle = match gate.angle {
            Some(a) => Some(ParamAngle::Constant(a.eval(params.values())?)),
            None => None,
        };
        let m = gate_matrix(gate.kind, angle.as_ref())?;
        linalg::apply_on_qubits(&mut u, &m, &gate.qubits, n);
    }
    Ok(u)
}

/// Resolves every symbolic angle; the result has no parameters.
pub fn bind_parameters(circuit: &Circuit, params: &Parametrization) -> Result<Circuit> {
    params.check(circuit)?;
    let gates = circuit
        .gates()
        .iter()
        .map(|g| {
            let angle = match g.angle {
                Some(a) => Some(ParamAngle::Constant(a.eval(params.values())?)),
                None => None,
            };
            Ok(Gate {
                kind: g.kind,
                qubits: g.qubits.clone(),
                angle,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit {
        width: circuit.width(),
        param_count: 0,
        gates,
    })
}

/// Merges runs of same-axis rotations on a qubit with no intervening gate
/// on that qubit. Constant-zero results are dropped, which may expose
/// further merges; those are taken in the same pass, so the pass is
/// idempotent.
pub fn merge_rotations(circuit: &Circuit) -> Circuit {
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(circuit.len());
    // Per qubit, indices into `out` of the live gates touching it.
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.width()];

    for gate in circuit.gates() {
        if !gate.kind.is_rotation() {
            let idx = out.len();
            for &q in &gate.qubits {
                stacks[q].push(idx);
            }
            out.push(Some(gate.clone()));
            continue;
        }
        let q = gate.qubits[0];
        let mut current = Some(gate.clone());
        while let (Some(cur), Some(&top)) = (current.as_ref(), stacks[q].last()) {
            let prev = out[top].as_ref().expect("stack holds live gates");
            if prev.kind != cur.kind {
                break;
            }
            let merged = match (prev.angle, cur.angle) {
                (Some(a), Some(b)) => a.merged(&b),
                _ => None,
            };
            let Some(angle) = merged else { break };
            out[top] = None;
            stacks[q].pop();
            current = if angle == ParamAngle::Constant(0.0) {
                None
            } else {
                Some(Gate {
                    kind: cur.kind,
                    qubits: vec![q],
                    angle: Some(angle),
                })
            };
        }
        if let Some(g) = current {
            stacks[q].push(out.len());
            out.push(Some(g));
        }
    }

    Circuit {
        width: circuit.width(),
        param_count: circuit.param_count(),
        gates: out.into_iter().flatten().collect(),
    }
}

/// Per-kind gate durations in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTimes {
    pub rz: f64,
    pub rx: f64,
    pub h: f64,
    pub cx: f64,
    pub swap: f64,
}

impl Default for GateTimes {
    /// Pulse durations of the gmon gate library.
    fn default() -> Self {
        Self {
            rz: 0.4,
            rx: 2.5,
            h: 1.4,
            cx: 3.8,
            swap: 7.4,
        }
    }
}

impl GateTimes {
    pub fn duration(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::Rz => self.rz,
            GateKind::Rx => self.rx,
            GateKind::H => self.h,
            GateKind::Cx => self.cx,
            GateKind::Swap => self.swap,
        }
    }
}

/// As-soon-as-possible start times of `gates`, given a duration per gate.
/// Returns the start of each gate and the makespan.
pub fn asap_schedule(
    gates: &[Gate],
    width: usize,
    mut duration: impl FnMut(usize, &Gate) -> f64,
) -> (Vec<f64>, f64) {
    let mut free_at = vec![0.0f64; width];
    let mut starts = Vec::with_capacity(gates.len());
    let mut makespan = 0.0f64;
    for (i, g) in gates.iter().enumerate() {
        let start = g.qubits.iter().map(|&q| free_at[q]).fold(0.0, f64::max);
        let end = start + duration(i, g);
        for &q in &g.qubits {
            free_at[q] = end;
        }
        starts.push(start);
        makespan = makespan.max(end);
    }
    (starts, makespan)
}

/// Length of the longest path through the gate dependency DAG (gates
/// sharing a qubit are ordered), weighted by per-kind durations.
pub fn critical_path_runtime(circuit: &Circuit, times: &GateTimes) -> f64 {
    asap_schedule(circuit.gates(), circuit.width(), |_, g| times.duration(g.kind)).1
}
