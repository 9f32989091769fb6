//! Circuit decompositions: width-capped blocking, strict Fixed/rotation
//! alternation, and single-parameter blocking of monotonic circuits.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{build_unitary, Circuit, Gate, GateKind, Parametrization};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qasm;

/// Largest block width handed to GRAPE.
pub const DEFAULT_MAX_WIDTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockTag {
    /// No symbolic angles.
    Fixed,
    /// A single parametrized RZ or RX gate.
    ParamGate(usize),
    /// Every symbolic angle references the same parameter.
    SingleParam(usize),
    /// Symbolic angles over several parameters (only produced by plain blocking).
    MultiParam,
}

impl BlockTag {
    pub fn param_index(&self) -> Option<usize> {
        match *self {
            BlockTag::ParamGate(i) | BlockTag::SingleParam(i) => Some(i),
            _ => None,
        }
    }
}

/// A subcircuit on local qubits `0..qubits.len()`, where local qubit `j`
/// is parent qubit `qubits[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub tag: BlockTag,
    pub qubits: Vec<usize>,
    pub circuit: Circuit,
}

/// Serializable form of a block, as stored next to cached pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub tag: BlockTag,
    pub qubits: Vec<usize>,
    pub body: String,
    pub hash: String,
}

impl Block {
    /// Builds a block from parent-indexed gates. Fixed blocks drop the
    /// parent's parameter count so identical bodies hash identically.
    fn from_parent_gates(tag: BlockTag, gates: Vec<Gate>, param_count: usize) -> Result<Self> {
        let mut qubits: Vec<usize> = gates.iter().flat_map(|g| g.qubits.iter().copied()).collect();
        qubits.sort_unstable();
        qubits.dedup();
        let local: Vec<Gate> = gates
            .into_iter()
            .map(|mut g| {
                for q in g.qubits.iter_mut() {
                    *q = qubits.binary_search(q).unwrap_or(0);
                }
                g
            })
            .collect();
        let p = if tag == BlockTag::Fixed { 0 } else { param_count };
        let circuit = Circuit::from_gates(qubits.len(), p, local)?;
        Ok(Self {
            tag,
            qubits,
            circuit,
        })
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }

    /// Gates relabelled onto parent qubits.
    pub fn parent_gates(&self) -> Vec<Gate> {
        self.circuit
            .gates()
            .iter()
            .map(|g| {
                let mut g = g.clone();
                for q in g.qubits.iter_mut() {
                    *q = self.qubits[*q];
                }
                g
            })
            .collect()
    }

    /// Local unitary; Fixed blocks ignore `params`.
    pub fn unitary(&self, params: &Parametrization) -> Result<CMatrix> {
        if self.circuit.param_count() == 0 {
            build_unitary(&self.circuit, &Parametrization::empty())
        } else {
            build_unitary(&self.circuit, params)
        }
    }

    /// `.vqc` text of the local subcircuit.
    pub fn body(&self) -> String {
        qasm::serialize(&self.circuit)
    }

    /// Hex SHA-256 of [`Block::body`].
    pub fn content_hash(&self) -> String {
        content_hash(&self.body())
    }

    pub fn record(&self) -> BlockRecord {
        let body = self.body();
        BlockRecord {
            tag: self.tag,
            qubits: self.qubits.clone(),
            hash: content_hash(&body),
            body,
        }
    }

    pub fn from_record(record: &BlockRecord) -> Result<Self> {
        let circuit = qasm::parse(&record.body)?;
        if circuit.width() != record.qubits.len() {
            return Err(Error::DimensionMismatch {
                expected: record.qubits.len(),
                got: circuit.width(),
            });
        }
        Ok(Self {
            tag: record.tag,
            qubits: record.qubits.clone(),
            circuit,
        })
    }
}

pub fn content_hash(body: &str) -> String {
    let digest = Sha256::digest(body.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Ordered blocks whose embedded composition reproduces `parent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub blocks: Vec<Block>,
    pub parent: Circuit,
}

impl PartitionPlan {
    /// Product of the embedded block unitaries, last block leftmost.
    pub fn compose(&self, params: &Parametrization) -> Result<CMatrix> {
        params.check(&self.parent)?;
        let n = self.parent.width();
        let mut u = linalg::identity(1 << n);
        for b in &self.blocks {
            let local = b.unitary(params)?;
            linalg::apply_on_qubits(&mut u, &local, &b.qubits, n);
        }
        Ok(u)
    }

    pub fn count_tag(&self, tag: BlockTag) -> usize {
        self.blocks.iter().filter(|b| b.tag == tag).count()
    }
}

fn tag_for(gates: &[Gate]) -> BlockTag {
    let mut idx: Option<usize> = None;
    for g in gates {
        if let Some(i) = g.param_index() {
            match idx {
                None => idx = Some(i),
                Some(j) if j != i => return BlockTag::MultiParam,
                _ => {}
            }
        }
    }
    match idx {
        None => BlockTag::Fixed,
        Some(i) => BlockTag::SingleParam(i),
    }
}

/// Gate indices sorted by unit-duration ASAP layer, ties by position.
fn asap_order(gates: &[Gate], width: usize) -> Vec<usize> {
    let mut level = vec![0usize; width];
    let mut layer = Vec::with_capacity(gates.len());
    for g in gates {
        let l = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0);
        for &q in &g.qubits {
            level[q] = l + 1;
        }
        layer.push(l);
    }
    let mut order: Vec<usize> = (0..gates.len()).collect();
    order.sort_by_key(|&i| (layer[i], i));
    order
}

/// Splits `gates` into consecutive groups (in ASAP order) touching at most `max_width` qubits.
fn chunk_by_width(gates: &[Gate], width: usize, max_width: usize) -> Vec<Vec<Gate>> {
    let mut chunks: Vec<Vec<Gate>> = Vec::new();
    let mut current: Vec<Gate> = Vec::new();
    let mut used: Vec<usize> = Vec::new();
    for i in asap_order(gates, width) {
        let g = &gates[i];
        let extra = g.qubits.iter().filter(|q| !used.contains(q)).count();
        if !current.is_empty() && used.len() + extra > max_width {
            chunks.push(core::mem::take(&mut current));
            used.clear();
        }
        for &q in &g.qubits {
            if !used.contains(&q) {
                used.push(q);
            }
        }
        current.push(g.clone());
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Greedy blocking into subcircuits of at most `max_width` qubits. Blocks
/// are tagged by the parameters they reference.
pub fn block_max_width(circuit: &Circuit, max_width: usize) -> Result<Vec<Block>> {
    if max_width < 2 {
        return Err(Error::InvalidConfig(format!(
            "block width {max_width} cannot hold a two-qubit gate"
        )));
    }
    chunk_by_width(circuit.gates(), circuit.width(), max_width)
        .into_iter()
        .map(|gates| {
            let tag = tag_for(&gates);
            Block::from_parent_gates(tag, gates, circuit.param_count())
        })
        .collect()
}

/// Alternating maximal Fixed blocks and single parametrized rotations.
pub fn partition_strict(circuit: &Circuit) -> Result<PartitionPlan> {
    let p = circuit.param_count();
    let mut blocks = Vec::new();
    let mut pending: Vec<Gate> = Vec::new();
    for g in circuit.gates() {
        match g.param_index() {
            None => pending.push(g.clone()),
            Some(i) => {
                if !matches!(g.kind, GateKind::Rz | GateKind::Rx) {
                    return Err(Error::Unsupported(format!(
                        "parametrized {} gate in strict partitioning",
                        g.kind
                    )));
                }
                if !pending.is_empty() {
                    blocks.push(Block::from_parent_gates(
                        BlockTag::Fixed,
                        core::mem::take(&mut pending),
                        p,
                    )?);
                }
                blocks.push(Block::from_parent_gates(
                    BlockTag::ParamGate(i),
                    vec![g.clone()],
                    p,
                )?);
            }
        }
    }
    if !pending.is_empty() {
        blocks.push(Block::from_parent_gates(BlockTag::Fixed, pending, p)?);
    }
    Ok(PartitionPlan {
        blocks,
        parent: circuit.clone(),
    })
}

/// First violation of nondecreasing parameter order, as an error.
pub fn require_monotonic(circuit: &Circuit) -> Result<()> {
    let mut last: Option<usize> = None;
    for (gate, g) in circuit.gates().iter().enumerate() {
        if let Some(i) = g.param_index() {
            if let Some(prev) = last {
                if i < prev {
                    return Err(Error::NotMonotonic {
                        gate,
                        previous: prev,
                        found: i,
                    });
                }
            }
            last = Some(i);
        }
    }
    Ok(())
}

/// True when the parameter indices of symbolic gates never decrease in gate order.
pub fn check_parameter_monotonicity(circuit: &Circuit) -> bool {
    require_monotonic(circuit).is_ok()
}

/// Blocks that each depend on at most one parameter. Fails on
/// non-monotonic circuits; callers fall back to [`partition_strict`].
pub fn partition_flexible(circuit: &Circuit, max_width: usize) -> Result<PartitionPlan> {
    require_monotonic(circuit)?;
    let gates = circuit.gates();
    let p = circuit.param_count();

    // (tag, gate range) before width capping.
    let mut runs: Vec<(BlockTag, usize, usize)> = Vec::new();
    let param_positions: Vec<(usize, usize)> = gates
        .iter()
        .enumerate()
        .filter_map(|(k, g)| g.param_index().map(|i| (k, i)))
        .collect();

    match (param_positions.first(), param_positions.last()) {
        (Some(&(first, _)), Some(&(last, _))) => {
            if first > 0 {
                runs.push((BlockTag::Fixed, 0, first));
            }
            let mut start = first;
            let mut current = param_positions[0].1;
            for &(k, i) in &param_positions[1..] {
                if i != current {
                    // Gates between runs stay with the earlier run.
                    runs.push((BlockTag::SingleParam(current), start, k));
                    start = k;
                    current = i;
                }
            }
            runs.push((BlockTag::SingleParam(current), start, last + 1));
            if last + 1 < gates.len() {
                runs.push((BlockTag::Fixed, last + 1, gates.len()));
            }
        }
        _ => {
            if !gates.is_empty() {
                runs.push((BlockTag::Fixed, 0, gates.len()));
            }
        }
    }

    let mut blocks = Vec::new();
    for (tag, a, b) in runs {
        for chunk in chunk_by_width(&gates[a..b], circuit.width(), max_width) {
            blocks.push(Block::from_parent_gates(tag, chunk, p)?);
        }
    }
    Ok(PartitionPlan {
        blocks,
        parent: circuit.clone(),
    })
}

/// Flexible plan, or the strict plan when the circuit is not monotonic.
/// The flag is true when the fallback was taken.
pub fn partition_flexible_or_strict(circuit: &Circuit, max_width: usize) -> Result<(PartitionPlan, bool)> {
    match partition_flexible(circuit, max_width) {
        Ok(plan) => Ok((plan, false)),
        Err(Error::NotMonotonic { .. }) => Ok((partition_strict(circuit)?, true)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ParamAngle;
    use crate::grape::fidelity;

    fn t(i: usize) -> ParamAngle {
        ParamAngle::param(i)
    }

    /// Three qubits, parameter order θ0 θ0 θ1 θ2 with fixed gates in between.
    fn four_param_circuit() -> Circuit {
        Circuit::from_gates(
            3,
            3,
            vec![
                Gate::h(0),
                Gate::cx(0, 1),
                Gate::rz(1, t(0)),
                Gate::cx(0, 1),
                Gate::cx(1, 2),
                Gate::rz(2, t(0)),
                Gate::cx(1, 2),
                Gate::h(2),
                Gate::rz(0, t(1)),
                Gate::h(1),
                Gate::rz(1, t(2)),
            ],
        )
        .unwrap()
    }

    fn tags(plan: &PartitionPlan) -> Vec<BlockTag> {
        plan.blocks.iter().map(|b| b.tag).collect()
    }

    #[test]
    fn strict_alternation() {
        use BlockTag::*;
        let plan = partition_strict(&four_param_circuit()).unwrap();
        assert_eq!(
            tags(&plan),
            vec![
                Fixed,
                ParamGate(0),
                Fixed,
                ParamGate(0),
                Fixed,
                ParamGate(1),
                Fixed,
                ParamGate(2)
            ]
        );
    }

    #[test]
    fn strict_without_parameters_is_one_block() {
        let c = Circuit::from_gates(2, 0, vec![Gate::h(0), Gate::cx(0, 1)]).unwrap();
        assert_eq!(tags(&partition_strict(&c).unwrap()), vec![BlockTag::Fixed]);
    }

    #[test]
    fn strict_omits_empty_fixed_blocks() {
        let c = Circuit::from_gates(1, 2, vec![Gate::rz(0, t(0)), Gate::rz(0, t(1))]).unwrap();
        assert_eq!(
            tags(&partition_strict(&c).unwrap()),
            vec![BlockTag::ParamGate(0), BlockTag::ParamGate(1)]
        );
    }

    #[test]
    fn monotonicity_examples() {
        let seq = |idx: &[usize]| {
            let gates = idx.iter().map(|&i| Gate::rz(0, t(i))).collect();
            Circuit::from_gates(1, 4, gates).unwrap()
        };
        assert!(check_parameter_monotonicity(&seq(&[1, 1, 2, 3])));
        assert!(!check_parameter_monotonicity(&seq(&[1, 2, 3, 1])));
        assert!(check_parameter_monotonicity(&Circuit::new(2, 0)));
        assert_eq!(
            require_monotonic(&seq(&[1, 2, 3, 1])),
            Err(Error::NotMonotonic {
                gate: 3,
                previous: 3,
                found: 1
            })
        );
    }

    #[test]
    fn flexible_groups_by_parameter() {
        use BlockTag::*;
        let plan = partition_flexible(&four_param_circuit(), 4).unwrap();
        assert_eq!(tags(&plan), vec![Fixed, SingleParam(0), SingleParam(1), SingleParam(2)]);
        // Both θ0 rotations and the fixed gates around them land in one block.
        let theta0 = &plan.blocks[1];
        assert_eq!(theta0.circuit.param_sequence(), vec![0, 0]);
        assert_eq!(theta0.circuit.len(), 6);
        for b in &plan.blocks {
            let mut s = b.circuit.param_sequence();
            s.dedup();
            assert!(s.len() <= 1);
        }
    }

    #[test]
    fn flexible_rejects_non_monotonic() {
        let c = Circuit::from_gates(1, 2, vec![Gate::rz(0, t(1)), Gate::rz(0, t(0))]).unwrap();
        assert!(matches!(
            partition_flexible(&c, 4),
            Err(Error::NotMonotonic { .. })
        ));
    }

    #[test]
    fn flexible_without_parameters() {
        let c = Circuit::from_gates(2, 0, vec![Gate::h(0), Gate::cx(0, 1)]).unwrap();
        assert_eq!(tags(&partition_flexible(&c, 4).unwrap()), vec![BlockTag::Fixed]);
    }

    #[test]
    fn width_blocking() {
        let two = Circuit::from_gates(2, 0, vec![Gate::h(0), Gate::cx(0, 1), Gate::h(1)]).unwrap();
        assert_eq!(block_max_width(&two, 4).unwrap().len(), 1);
        assert!(block_max_width(&Circuit::new(3, 0), 4).unwrap().is_empty());

        let gates = (0..5).map(|q| Gate::cx(q, q + 1)).collect();
        let chain = Circuit::from_gates(6, 0, gates).unwrap();
        let blocks = block_max_width(&chain, 4).unwrap();
        assert!(blocks.len() >= 2);
        assert!(blocks.iter().all(|b| b.width() <= 4));
    }

    #[test]
    fn compositions_reproduce_parent() {
        let c = four_param_circuit();
        let params = Parametrization::new(vec![0.3, -1.2, 2.5]);
        let target = build_unitary(&c, &params).unwrap();
        let plans = [
            partition_strict(&c).unwrap(),
            partition_flexible(&c, 2).unwrap(),
            PartitionPlan {
                blocks: block_max_width(&c, 2).unwrap(),
                parent: c.clone(),
            },
        ];
        for plan in plans {
            let f = fidelity(&plan.compose(&params).unwrap(), &target).unwrap();
            assert!(f > 1.0 - 1e-12, "{f}");
        }
    }

    #[test]
    fn fixed_blocks_share_hashes_across_parents() {
        let a = Circuit::from_gates(2, 1, vec![Gate::cx(0, 1), Gate::rz(1, t(0))]).unwrap();
        let b = Circuit::from_gates(3, 3, vec![Gate::cx(1, 2), Gate::rz(0, t(2))]).unwrap();
        let fa = &partition_strict(&a).unwrap().blocks[0];
        let fb = &partition_strict(&b).unwrap().blocks[0];
        assert_eq!(fa.tag, BlockTag::Fixed);
        assert_eq!(fa.content_hash(), fb.content_hash());
        assert_eq!(fb.qubits, vec![1, 2]);
        assert_eq!(fa.content_hash().len(), 64);
    }

    #[test]
    fn records_round_trip() {
        for b in partition_strict(&four_param_circuit()).unwrap().blocks {
            let back = Block::from_record(&b.record()).unwrap();
            assert_eq!(back, b);
        }
    }
}
