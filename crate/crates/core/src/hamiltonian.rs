//! Control Hamiltonians of a gmon register truncated to the qubit subspace.
//!
//! Each qubit has a charge drive `Ω_c σx` and a flux drive `Ω_f |1⟩⟨1|`;
//! each coupled pair has `g σx⊗σx`. The drift term is zero. Times are in
//! ns and amplitudes in rad/ns, so `2π × 0.1 GHz` is `0.2π rad/ns`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::DEFAULT_DENSE_CAP;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `|Ω_c| ≤ 2π × 0.1 GHz`.
pub const DEFAULT_CHARGE_BOUND: f64 = 2.0 * PI * 0.1;
/// `|Ω_f| ≤ 2π × 1.5 GHz`.
pub const DEFAULT_FLUX_BOUND: f64 = 2.0 * PI * 1.5;
/// `|g| ≤ 2π × 50 MHz`.
pub const DEFAULT_COUPLING_BOUND: f64 = 2.0 * PI * 0.05;

/// Converts a frequency in GHz to an angular rate in rad/ns.
pub fn ghz_to_rad_per_ns(ghz: f64) -> f64 {
    2.0 * PI * ghz
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
    pub charge_bound: f64,
    pub flux_bound: f64,
    pub coupling_bound: f64,
    /// Coupling graph used by [`HamiltonianSpec::resized`] for blocks of
    /// its size instead of the most nearly square grid.
    #[serde(default)]
    pub block_topology: Option<BlockTopology>,
}

/// Coupling graph of an `n_qubits` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTopology {
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BlockTopology {
    pub fn grid(rows: usize, cols: usize) -> Self {
        Self {
            n_qubits: rows * cols,
            edges: grid_edges(rows, cols),
        }
    }

    /// Graph on `1 + max endpoint` qubits.
    pub fn from_edges(edges: Vec<(usize, usize)>) -> Result<Self> {
        let n_qubits = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        HamiltonianSpec::new(n_qubits, edges.clone())?;
        Ok(Self { n_qubits, edges })
    }
}

/// Nearest-neighbour edges of a row-major `rows × cols` grid.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let q = r * cols + c;
            if c + 1 < cols {
                edges.push((q, q + 1));
            }
            if r + 1 < rows {
                edges.push((q, q + cols));
            }
        }
    }
    edges
}

/// Most nearly square `rows × cols` factorization of `n` with `rows ≤ cols`.
pub fn default_grid_shape(n: usize) -> (usize, usize) {
    let mut rows = 1;
    for r in 1..=n {
        if r * r > n {
            break;
        }
        if n % r == 0 {
            rows = r;
        }
    }
    (rows, n.checked_div(rows).unwrap_or(0))
}

impl HamiltonianSpec {
    /// Default bounds on an explicit coupling graph.
    pub fn new(n_qubits: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let spec = Self {
            n_qubits,
            edges,
            charge_bound: DEFAULT_CHARGE_BOUND,
            flux_bound: DEFAULT_FLUX_BOUND,
            coupling_bound: DEFAULT_COUPLING_BOUND,
            block_topology: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        Self {
            n_qubits: rows * cols,
            edges: grid_edges(rows, cols),
            charge_bound: DEFAULT_CHARGE_BOUND,
            flux_bound: DEFAULT_FLUX_BOUND,
            coupling_bound: DEFAULT_COUPLING_BOUND,
            block_topology: None,
        }
    }

    /// `n` qubits on the most nearly square grid (a 2×2 grid for 4 qubits).
    pub fn default_for(n: usize) -> Self {
        let (rows, cols) = default_grid_shape(n);
        Self::grid(rows, cols)
    }

    /// Same bounds on `n` qubits with the block topology (if it has `n`
    /// qubits) or the default grid.
    pub fn resized(&self, n: usize) -> Self {
        let (n_qubits, edges) = match &self.block_topology {
            Some(t) if t.n_qubits == n => (n, t.edges.clone()),
            _ => {
                let base = Self::default_for(n);
                (base.n_qubits, base.edges)
            }
        };
        Self {
            n_qubits,
            edges,
            charge_bound: self.charge_bound,
            flux_bound: self.flux_bound,
            coupling_bound: self.coupling_bound,
            block_topology: self.block_topology.clone(),
        }
    }

    pub fn coupled(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("charge", self.charge_bound),
            ("flux", self.flux_bound),
            ("coupling", self.coupling_bound),
        ] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidHamiltonian(format!(
                    "{name} bound must be positive, got {b}"
                )));
            }
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if a >= self.n_qubits || b >= self.n_qubits || a == b {
                return Err(Error::InvalidHamiltonian(format!("invalid edge ({a}, {b})")));
            }
            let key = (a.min(b), a.max(b));
            if self.edges[..i]
                .iter()
                .any(|&(x, y)| (x.min(y), x.max(y)) == key)
            {
                return Err(Error::InvalidHamiltonian(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlKind {
    Charge(usize),
    Flux(usize),
    Coupling(usize, usize),
}

impl ControlKind {
    pub fn label(&self) -> String {
        match *self {
            ControlKind::Charge(j) => format!("charge[{j}]"),
            ControlKind::Flux(j) => format!("flux[{j}]"),
            ControlKind::Coupling(j, k) => format!("coupling[{j},{k}]"),
        }
    }

    /// Inverse of [`ControlKind::label`].
    pub fn parse_label(label: &str) -> Option<Self> {
        let (name, rest) = label.split_once('[')?;
        let inner = rest.strip_suffix(']')?;
        match name {
            "charge" => inner.trim().parse().ok().map(ControlKind::Charge),
            "flux" => inner.trim().parse().ok().map(ControlKind::Flux),
            "coupling" => {
                let (a, b) = inner.split_once(',')?;
                Some(ControlKind::Coupling(a.trim().parse().ok()?, b.trim().parse().ok()?))
            }
            _ => None,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            ControlKind::Charge(j) | ControlKind::Flux(j) => alloc::vec![j],
            ControlKind::Coupling(j, k) => alloc::vec![j, k],
        }
    }

    /// The local operator this control applies to its qubits.
    pub fn local_operator(&self) -> CMatrix {
        match self {
            ControlKind::Charge(_) => linalg::pauli_x(),
            ControlKind::Flux(_) => linalg::projector_one(),
            ControlKind::Coupling(..) => linalg::pauli_x().kronecker(&linalg::pauli_x()),
        }
    }
}

/// One Hermitian generator with its amplitude bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub kind: ControlKind,
    pub label: String,
    pub matrix: CMatrix,
    pub bound: f64,
}

/// Control set for `spec`: charge and flux per qubit, then one coupling per edge.
pub fn build_controls(spec: &HamiltonianSpec) -> Result<Vec<ControlField>> {
    if spec.n_qubits > DEFAULT_DENSE_CAP {
        return Err(Error::TooWide {
            width: spec.n_qubits,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    spec.validate()?;
    let n = spec.n_qubits;
    let mut kinds = Vec::with_capacity(2 * n + spec.edges.len());
    for j in 0..n {
        kinds.push((ControlKind::Charge(j), spec.charge_bound));
        kinds.push((ControlKind::Flux(j), spec.flux_bound));
    }
    for &(a, b) in &spec.edges {
        kinds.push((ControlKind::Coupling(a, b), spec.coupling_bound));
    }
    Ok(kinds
        .into_iter()
        .map(|(kind, bound)| ControlField {
            kind,
            label: kind.label(),
            matrix: linalg::embed(&kind.local_operator(), &kind.qubits(), n),
            bound,
        })
        .collect())
}
