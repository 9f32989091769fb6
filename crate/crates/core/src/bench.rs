//! QAOA MAXCUT benchmark circuits over seeded random graphs.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, ParamAngle};
use crate::error::{Error, Result};

/// `.vqc` text of a 2-qubit, 3-parameter ansatz with the shape of H2 UCCSD.
pub const H2_FIXTURE: &str = include_str!("../fixtures/h2.vqc");

/// Pairing-model attempts before giving up on a 3-regular graph.
const MAX_PAIRING_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("duplicate edge".into()));
        }
        Ok(Self { n, edges: norm })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self { n, edges }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    ThreeRegular,
    ErdosRenyi,
}

/// Seeded random graph. 3-regular graphs come from the pairing model with
/// rejection; Erdős–Rényi graphs keep each edge with probability 1/2.
pub fn random_graph(n: usize, kind: GraphKind, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GraphKind::ErdosRenyi => {
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(0.5) {
                        edges.push((a, b));
                    }
                }
            }
            Graph::new(n, edges)
        }
        GraphKind::ThreeRegular => {
            if n % 2 == 1 || n < 4 {
                return Err(Error::InvalidGraph(format!(
                    "a 3-regular graph needs an even node count of at least 4, got {n}"
                )));
            }
            let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
            for _ in 0..MAX_PAIRING_ATTEMPTS {
                points.shuffle(&mut rng);
                let edges: Vec<(usize, usize)> =
                    points.chunks(2).map(|c| (c[0], c[1])).collect();
                if let Ok(g) = Graph::new(n, edges) {
                    return Ok(g);
                }
            }
            Err(Error::InvalidGraph(format!(
                "pairing model found no simple 3-regular graph on {n} nodes"
            )))
        }
    }
}

/// QAOA MAXCUT instance. Round `r` uses `γ_r = t[2r]` and `β_r = t[2r+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaSpec {
    pub graph: Graph,
    pub rounds: usize,
    /// Coefficient of `γ` in each cost-layer RZ.
    pub cost_coeff: f64,
    /// Coefficient of `β` in each mixer RX.
    pub mixer_coeff: f64,
}

impl QaoaSpec {
    pub fn new(graph: Graph, rounds: usize) -> Self {
        Self {
            graph,
            rounds,
            cost_coeff: 1.0,
            mixer_coeff: 2.0,
        }
    }
}

/// H on every qubit, then per round: CX–RZ(γ)–CX on each edge and RX(2β) on each qubit.
pub fn qaoa_circuit(spec: &QaoaSpec) -> Result<Circuit> {
    if spec.rounds == 0 {
        return Err(Error::InvalidConfig("QAOA needs at least one round".into()));
    }
    let n = spec.graph.n;
    let mut c = Circuit::new(n, 2 * spec.rounds);
    for q in 0..n {
        c.push(Gate::h(q))?;
    }
    for r in 0..spec.rounds {
        for &(i, j) in &spec.graph.edges {
            c.push(Gate::cx(i, j))?;
            c.push(Gate::rz(j, ParamAngle::affine(2 * r, spec.cost_coeff, 0.0)))?;
            c.push(Gate::cx(i, j))?;
        }
        for q in 0..n {
            c.push(Gate::rx(q, ParamAngle::affine(2 * r + 1, spec.mixer_coeff, 0.0)))?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_unitary, critical_path_runtime, GateTimes, Parametrization};
    use crate::grape::fidelity;
    use crate::partition::check_parameter_monotonicity;
    use crate::qasm;
    use alloc::vec;

    #[test]
    fn three_regular_on_four_nodes_is_k4() {
        for seed in 0..5 {
            let g = random_graph(4, GraphKind::ThreeRegular, seed).unwrap();
            assert_eq!(g, Graph::complete(4));
        }
    }

    #[test]
    fn three_regular_degrees() {
        let g = random_graph(8, GraphKind::ThreeRegular, 11).unwrap();
        assert_eq!(g.edges.len(), 12);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert!(random_graph(5, GraphKind::ThreeRegular, 0).is_err());
        assert!(random_graph(2, GraphKind::ThreeRegular, 0).is_err());
    }

    #[test]
    fn erdos_renyi_is_deterministic() {
        let a = random_graph(6, GraphKind::ErdosRenyi, 3).unwrap();
        let b = random_graph(6, GraphKind::ErdosRenyi, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.edges.iter().all(|&(x, y)| x < y && y < 6));
    }

    #[test]
    fn gate_counts_and_shape() {
        let spec = QaoaSpec::new(Graph::new(2, vec![(0, 1)]).unwrap(), 1);
        let c = qaoa_circuit(&spec).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(c.width(), 2);
        assert_eq!(c.param_count(), 2);
        let k4 = QaoaSpec::new(Graph::complete(4), 3);
        let c = qaoa_circuit(&k4).unwrap();
        assert_eq!(c.param_count(), 6);
        assert!(check_parameter_monotonicity(&c));
    }

    #[test]
    fn runtime_affine_in_rounds() {
        let g = random_graph(6, GraphKind::ThreeRegular, 5).unwrap();
        let times = GateTimes::default();
        let rt: Vec<f64> = (1..=5)
            .map(|p| critical_path_runtime(&qaoa_circuit(&QaoaSpec::new(g.clone(), p)).unwrap(), &times))
            .collect();
        let step = rt[1] - rt[0];
        for w in rt.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_angles_leave_hadamards() {
        let c = qaoa_circuit(&QaoaSpec::new(Graph::complete(3), 2)).unwrap();
        let u = build_unitary(&c, &Parametrization::new(vec![0.0; 4])).unwrap();
        let h = Circuit::from_gates(3, 0, (0..3).map(Gate::h).collect()).unwrap();
        let uh = build_unitary(&h, &Parametrization::empty()).unwrap();
        assert!((fidelity(&u, &uh).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn h2_fixture_parses() {
        let c = qasm::parse(H2_FIXTURE).unwrap();
        assert_eq!((c.width(), c.param_count()), (2, 3));
        assert!(check_parameter_monotonicity(&c));
    }
}
