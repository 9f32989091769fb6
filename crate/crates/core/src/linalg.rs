//! Dense complex matrix helpers shared by the circuit simulator and GRAPE.
//!
//! Qubit 0 is the most significant bit of a basis index, so a two-qubit
//! operator acting on `[a, b]` treats `a` as its first tensor factor.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Square complex matrix; unitaries, generators and propagators all use it.
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_rows(rows: &[&[Complex64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |r, c| rows[r][c])
}

pub fn pauli_x() -> CMatrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn projector_one() -> CMatrix {
    from_rows(&[&[ZERO, ZERO], &[ZERO, ONE]])
}

/// Bit offsets of each local basis state of `targets` inside an `n`-qubit index.
fn target_offsets(targets: &[usize], n: usize) -> Vec<usize> {
    let k = targets.len();
    (0..1usize << k)
        .map(|s| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| (s >> (k - 1 - j)) & 1 == 1)
                .map(|(_, &q)| 1usize << (n - 1 - q))
                .sum()
        })
        .collect()
}

/// Indices whose bits on every target qubit are zero.
fn base_indices(targets: &[usize], n: usize) -> Vec<usize> {
    let mask: usize = targets.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    (0..1usize << n).filter(|i| i & mask == 0).collect()
}

/// Left-multiplies `u` in place by `op` embedded on `targets` of an `n`-qubit register.
pub fn apply_on_qubits(u: &mut CMatrix, op: &CMatrix, targets: &[usize], n: usize) {
    let offsets = target_offsets(targets, n);
    let bases = base_indices(targets, n);
    let sub = offsets.len();
    let mut gathered = vec![ZERO; sub];
    for col in 0..u.ncols() {
        for &b in &bases {
            for (s, &off) in offsets.iter().enumerate() {
                gathered[s] = u[(b + off, col)];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (s, g) in gathered.iter().enumerate() {
                    acc += op[(r, s)] * g;
                }
                u[(b + off, col)] = acc;
            }
        }
    }
}

/// Full `2^n`-dimensional operator acting as `op` on `targets` and identity elsewhere.
pub fn embed(op: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    let mut full = identity(1 << n);
    apply_on_qubits(&mut full, op, targets, n);
    full
}

/// `Tr(a† b)`.
pub fn trace_overlap(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Max-norm distance of `u† u` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &identity(u.nrows()))
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Real matrix, used for eigenbases of real symmetric Hamiltonians.
pub type RMatrix = DMatrix<f64>;

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn split(m: &CMatrix) -> (RMatrix, RMatrix) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: &RMatrix, im: &RMatrix) -> CMatrix {
    CMatrix::from_fn(re.nrows(), re.ncols(), |r, c| {
        Complex64::new(re[(r, c)], im[(r, c)])
    })
}

/// `left · m · right` for real `left`, `right`.
pub fn real_sandwich(left: &RMatrix, m: &CMatrix, right: &RMatrix) -> CMatrix {
    let (re, im) = split(m);
    join(&(left * re * right), &(left * im * right))
}

#[derive(Debug, Clone)]
enum Basis {
    Real(RMatrix),
    Complex(CMatrix),
}

/// Eigendecomposition `h = V diag(λ) V†` of a Hermitian matrix. Real
/// symmetric input takes a real decomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    basis: Basis,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        if is_real(h) {
            let eig = SymmetricEigen::new(h.map(|z| z.re));
            Self {
                values: eig.eigenvalues.iter().copied().collect(),
                basis: Basis::Real(eig.eigenvectors),
            }
        } else {
            let eig = SymmetricEigen::new(h.clone());
            Self {
                values: eig.eigenvalues.iter().copied().collect(),
                basis: Basis::Complex(eig.eigenvectors),
            }
        }
    }

    pub fn vectors(&self) -> CMatrix {
        match &self.basis {
            Basis::Real(v) => v.map(|x| Complex64::new(x, 0.0)),
            Basis::Complex(v) => v.clone(),
        }
    }

    /// `exp(-i h t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        match &self.basis {
            Basis::Real(v) => {
                let mut c = v.clone();
                let mut s = v.clone();
                for (j, &l) in self.values.iter().enumerate() {
                    let (sin, cos) = (-l * t).sin_cos();
                    c.column_mut(j).scale_mut(cos);
                    s.column_mut(j).scale_mut(sin);
                }
                let vt = v.transpose();
                join(&(c * &vt), &(s * vt))
            }
            Basis::Complex(v) => {
                let mut scaled = v.clone();
                for (j, &l) in self.values.iter().enumerate() {
                    let p = Complex64::from_polar(1.0, -l * t);
                    scaled.column_mut(j).iter_mut().for_each(|z| *z *= p);
                }
                scaled * v.adjoint()
            }
        }
    }

    /// `V† m V`.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        match &self.basis {
            Basis::Real(v) => real_sandwich(&v.transpose(), m, v),
            Basis::Complex(v) => v.adjoint() * m * v,
        }
    }

    /// `conj(V) w Vᵀ`.
    pub fn conj_from_eigenbasis(&self, w: &CMatrix) -> CMatrix {
        match &self.basis {
            Basis::Real(v) => real_sandwich(v, w, &v.transpose()),
            Basis::Complex(v) => v.conjugate() * w * v.transpose(),
        }
    }
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

/// Reduces an angle to the interval `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let mut a = angle % tau;
    if a <= -core::f64::consts::PI {
        a += tau;
    } else if a > core::f64::consts::PI {
        a -= tau;
    }
    a
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
