//! End-to-end pulse compilation: gate-based lookup, full GRAPE, strict
//! partial compilation over precomputed Fixed blocks, and flexible partial
//! compilation with tuned per-block hyperparameters.
//!
//! Every block's pulse acts on its local qubits, whose control set is the
//! default grid topology for that many qubits under the caller's bounds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    asap_schedule, bind_parameters, build_unitary, gate_matrix,
    merge_rotations, Circuit, Gate, GateKind, GateTimes, ParamAngle, Parametrization,
};
use crate::error::{Error, Result};
use crate::grape::{self, ControlPulse, ControlSet, GrapeConfig};
use crate::hamiltonian::{build_controls, ControlKind, HamiltonianSpec};
use crate::linalg::{self, CMatrix};
use crate::mintime::{minimal_pulse_time_with, MinTimeConfig};
use crate::parallel::par_map;
use crate::partition::{block_max_width, Block, BlockTag, PartitionPlan, DEFAULT_MAX_WIDTH};
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Angles this close to zero or π take the identity or library path.
const ANGLE_TOL: f64 = 1e-12;
/// Slack when comparing segment intervals.
const TIME_TOL: f64 = 1e-9;

/// Wall-clock source for latency accounting.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct SystemClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for SystemClock {
    fn default() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for SystemClock {
    fn now_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Controls of a `width`-qubit block under the bounds of `spec`.
pub fn local_controls(spec: &HamiltonianSpec, width: usize) -> Result<ControlSet> {
    ControlSet::from_spec(&spec.resized(width))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub kind: GateKind,
    /// Rotation angle of the target, if any.
    pub angle: Option<f64>,
    pub duration: f64,
    pub fidelity: f64,
    pub pulse: ControlPulse,
}

/// Precomputed pulses for H, CX, SWAP, Rx(π) and Rz(π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatePulseLibrary {
    pub spec: HamiltonianSpec,
    pub slice: f64,
    pub entries: Vec<LibraryEntry>,
}

fn library_targets() -> [(GateKind, Option<f64>); 5] {
    use core::f64::consts::PI;
    [
        (GateKind::Rz, Some(PI)),
        (GateKind::Rx, Some(PI)),
        (GateKind::H, None),
        (GateKind::Cx, None),
        (GateKind::Swap, None),
    ]
}

fn entry_name(kind: GateKind, angle: Option<f64>) -> String {
    match angle {
        Some(_) => format!("{kind}(pi)"),
        None => kind.name().to_string(),
    }
}

/// Runs the minimal-time search for each library gate, with its
/// gate-table duration as the initial upper bound.
pub fn build_gate_library(
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    times: &GateTimes,
) -> Result<GatePulseLibrary> {
    let targets = library_targets();
    let results = par_map(targets.len(), |i| {
        let (kind, angle) = targets[i];
        let name = entry_name(kind, angle);
        let fail = |e: Error| Error::LibraryBuild {
            gate: name.clone(),
            reason: e.to_string(),
        };
        let target = gate_matrix(kind, angle.map(ParamAngle::Constant).as_ref()).map_err(fail)?;
        let set = local_controls(spec, kind.arity()).map_err(fail)?;
        let r = minimal_pulse_time_with(&target, &set, grape_config, mintime_config, times.duration(kind))
            .map_err(fail)?;
        Ok(LibraryEntry {
            kind,
            angle,
            duration: r.minimal_time,
            fidelity: r.fidelity,
            pulse: r.pulse,
        })
    });
    Ok(GatePulseLibrary {
        spec: spec.clone(),
        slice: grape_config.slice(),
        entries: results.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Library whose pulses are optimized at fixed durations instead of searched.
pub fn build_gate_library_fixed(
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    times: &GateTimes,
) -> Result<GatePulseLibrary> {
    let targets = library_targets();
    let results = par_map(targets.len(), |i| {
        let (kind, angle) = targets[i];
        let name = entry_name(kind, angle);
        let fail = |e: Error| Error::LibraryBuild {
            gate: name.clone(),
            reason: e.to_string(),
        };
        let target = gate_matrix(kind, angle.map(ParamAngle::Constant).as_ref()).map_err(fail)?;
        let set = local_controls(spec, kind.arity()).map_err(fail)?;
        let r = grape::grape_optimize_with(&target, &set, grape_config, times.duration(kind))
            .map_err(fail)?;
        if !r.converged {
            return Err(Error::LibraryBuild {
                gate: name,
                reason: format!("fidelity {} below target", r.fidelity),
            });
        }
        Ok(LibraryEntry {
            kind,
            angle,
            duration: r.pulse.total_time(),
            fidelity: r.fidelity,
            pulse: r.pulse,
        })
    });
    Ok(GatePulseLibrary {
        spec: spec.clone(),
        slice: grape_config.slice(),
        entries: results.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

impl GatePulseLibrary {
    pub fn entry(&self, kind: GateKind) -> Option<&LibraryEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    /// Pulse and source for one gate with a constant (or no) angle, or
    /// `None` when the gate is an identity rotation.
    pub fn gate_pulse(&self, gate: &Gate) -> Result<Option<(ControlPulse, PulseSource)>> {
        let lookup = |kind: GateKind| {
            self.entry(kind)
                .map(|e| (e.pulse.clone(), PulseSource::Library(entry_name(kind, e.angle))))
                .ok_or_else(|| Error::MissingLibraryEntry(kind.name().into()))
        };
        if !gate.kind.is_rotation() {
            return lookup(gate.kind).map(Some);
        }
        let angle = match gate.angle {
            Some(ParamAngle::Constant(a)) => a,
            Some(ParamAngle::Affine { param, .. }) => return Err(Error::UnboundParameter(param)),
            None => return Err(Error::InvalidGate(format!("{} without angle", gate.kind))),
        };
        let wrapped = linalg::wrap_angle(angle);
        if wrapped.abs() < ANGLE_TOL {
            return Ok(None);
        }
        if (wrapped.abs() - core::f64::consts::PI).abs() < ANGLE_TOL && self.entry(gate.kind).is_some() {
            return lookup(gate.kind).map(Some);
        }
        let pulse = analytic_rotation_pulse(gate.kind, angle, &self.spec, self.slice)?;
        Ok(Some((pulse, PulseSource::Analytic)))
    }

    /// Duration of `gate` under this library (zero for identity rotations).
    pub fn gate_duration(&self, gate: &Gate) -> Result<f64> {
        Ok(self.gate_pulse(gate)?.map_or(0.0, |(p, _)| p.total_time()))
    }

    /// Durations of the non-rotation entries, with rotations at their π entries.
    pub fn gate_times(&self) -> GateTimes {
        let d = |k: GateKind, fallback: f64| self.entry(k).map_or(fallback, |e| e.duration);
        let t = GateTimes::default();
        GateTimes {
            rz: d(GateKind::Rz, t.rz),
            rx: d(GateKind::Rx, t.rx),
            h: d(GateKind::H, t.h),
            cx: d(GateKind::Cx, t.cx),
            swap: d(GateKind::Swap, t.swap),
        }
    }
}

/// Closed-form single-qubit rotation pulse. RZ drives flux and RX drives
/// charge at up to the field bound; the time is rounded up to whole slices
/// and the amplitude scaled down so the rotation angle stays exact.
pub fn analytic_rotation_pulse(
    kind: GateKind,
    angle: f64,
    spec: &HamiltonianSpec,
    slice: f64,
) -> Result<ControlPulse> {
    let controls = build_controls(&spec.resized(1))?;
    let wrapped = linalg::wrap_angle(angle);
    // Area of the field amplitude over time that the rotation needs.
    let (field, area, bound) = match kind {
        // diag(1, e^{iφ}) = exp(−i u t |1⟩⟨1|) with u t = −φ.
        GateKind::Rz => (ControlKind::Flux(0), -wrapped, spec.flux_bound),
        // Rx(θ) equals exp(−i u t σx) up to phase with u t = θ / 2.
        GateKind::Rx => (ControlKind::Charge(0), wrapped / 2.0, spec.charge_bound),
        other => {
            return Err(Error::Unsupported(format!(
                "no closed-form pulse for {other}"
            )))
        }
    };
    if wrapped.abs() < ANGLE_TOL {
        return Ok(ControlPulse::zeros(slice, &controls, 0));
    }
    let min_time = area.abs() / bound;
    let n_steps = ((min_time / slice) - 1e-9).ceil().max(1.0) as usize;
    let amplitude = area / (n_steps as f64 * slice);
    let mut pulse = ControlPulse::zeros(slice, &controls, n_steps);
    let row = controls
        .iter()
        .position(|c| c.kind == field)
        .expect("single-qubit controls include charge and flux");
    pulse.amplitudes[row] = vec![amplitude; n_steps];
    Ok(pulse)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseSource {
    Library(String),
    Cache(String),
    Analytic,
    RuntimeGrape,
}

/// One pulse applied to `qubits` (local qubit `j` is register qubit `qubits[j]`)
/// starting at `start` ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub pulse: ControlPulse,
    pub source: PulseSource,
    pub qubits: Vec<usize>,
    pub start: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.pulse.total_time()
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompileMode {
    GateBased,
    FullGrape,
    Strict,
    Flexible,
}

impl CompileMode {
    pub fn name(self) -> &'static str {
        match self {
            CompileMode::GateBased => "gate",
            CompileMode::FullGrape => "grape",
            CompileMode::Strict => "strict",
            CompileMode::Flexible => "flexible",
        }
    }
}

/// Runtime cost of compiling one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub block: usize,
    pub hash: String,
    pub grape_calls: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledSchedule {
    pub mode: CompileMode,
    pub width: usize,
    pub segments: Vec<Segment>,
    pub total_duration: f64,
    /// GRAPE runs performed while compiling this schedule.
    pub runtime_grape_calls: usize,
    pub optimizer_iterations: usize,
    pub block_stats: Vec<BlockStats>,
}

impl CompiledSchedule {
    fn empty(mode: CompileMode, width: usize) -> Self {
        Self {
            mode,
            width,
            segments: Vec::new(),
            total_duration: 0.0,
            runtime_grape_calls: 0,
            optimizer_iterations: 0,
            block_stats: Vec::new(),
        }
    }

    /// Appends segments shifted so they start at the current end; returns the shift.
    fn append_serial(&mut self, segments: Vec<Segment>, length: f64) -> f64 {
        let offset = self.total_duration;
        for mut s in segments {
            s.start += offset;
            self.segments.push(s);
        }
        self.total_duration = offset + length;
        offset
    }
}

/// Gate-based schedule of an already bound circuit.
fn gate_segments(circuit: &Circuit, library: &GatePulseLibrary) -> Result<(Vec<Segment>, f64)> {
    let pulses: Vec<Option<(ControlPulse, PulseSource)>> = circuit
        .gates()
        .iter()
        .map(|g| library.gate_pulse(g))
        .collect::<Result<_>>()?;
    let (starts, makespan) = asap_schedule(circuit.gates(), circuit.width(), |i, _| {
        pulses[i].as_ref().map_or(0.0, |(p, _)| p.total_time())
    });
    let segments = pulses
        .into_iter()
        .zip(circuit.gates())
        .zip(starts)
        .filter_map(|((p, g), start)| {
            p.map(|(pulse, source)| Segment {
                pulse,
                source,
                qubits: g.qubits.clone(),
                start,
            })
        })
        .collect();
    Ok((segments, makespan))
}

/// Binds, merges rotations, and places one library or analytic pulse per
/// gate at its as-soon-as-possible start time.
pub fn compile_gate_based(
    circuit: &Circuit,
    params: &Parametrization,
    library: &GatePulseLibrary,
) -> Result<CompiledSchedule> {
    let bound = merge_rotations(&bind_parameters(circuit, params)?);
    let (segments, makespan) = gate_segments(&bound, library)?;
    Ok(CompiledSchedule {
        segments,
        total_duration: makespan,
        ..CompiledSchedule::empty(CompileMode::GateBased, circuit.width())
    })
}

/// Gate-based runtime of a bound circuit under `library`.
pub fn gate_based_runtime(circuit: &Circuit, library: &GatePulseLibrary) -> Result<f64> {
    Ok(gate_segments(circuit, library)?.1)
}

struct LocalCompile {
    segments: Vec<Segment>,
    duration: f64,
    grape_calls: usize,
    iterations: usize,
    used_grape: bool,
}

/// Minimal-time GRAPE for one bound, parameter-free local circuit, with its
/// gate-based runtime as the default upper bound. Falls back to gate-based
/// pulses when GRAPE cannot beat that runtime.
fn compile_local_min_time(
    circuit: &Circuit,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
    source: PulseSource,
) -> Result<LocalCompile> {
    let merged = merge_rotations(circuit);
    let (gate_segs, baseline) = gate_segments(&merged, library)?;
    if merged.is_empty() || baseline <= 0.0 {
        return Ok(LocalCompile {
            segments: Vec::new(),
            duration: 0.0,
            grape_calls: 0,
            iterations: 0,
            used_grape: false,
        });
    }
    let topology = spec.resized(merged.width());
    let placement = best_embedding(&merged, &topology);
    let placed = relabel(&merged, &placement)?;
    // Pulse qubit p drives block qubit `at[p]`.
    let mut at = vec![0; placement.len()];
    for (q, &p) in placement.iter().enumerate() {
        at[p] = q;
    }
    let target = build_unitary(&placed, &Parametrization::empty())?;
    let set = local_controls(spec, merged.width())?;
    // Anything slower than the gate-based pulses is discarded, so doubling
    // an infeasible bound cannot help.
    let config = MinTimeConfig {
        doubling_cap: 1.0,
        ..*mintime_config
    };
    match minimal_pulse_time_with(&target, &set, grape_config, &config, baseline) {
        Ok(r) if r.minimal_time <= baseline + TIME_TOL => Ok(LocalCompile {
            grape_calls: r.probes.len(),
            iterations: r.total_iterations(),
            duration: r.minimal_time,
            segments: if r.minimal_time > 0.0 {
                vec![Segment {
                    pulse: r.pulse,
                    source,
                    qubits: at,
                    start: 0.0,
                }]
            } else {
                Vec::new()
            },
            used_grape: true,
        }),
        Ok(r) => Ok(LocalCompile {
            grape_calls: r.probes.len(),
            iterations: r.total_iterations(),
            segments: gate_segs,
            duration: baseline,
            used_grape: false,
        }),
        Err(Error::NoConvergence { probes, .. }) => Ok(LocalCompile {
            grape_calls: probes.len(),
            iterations: probes.len() * grape_config.max_iterations,
            segments: gate_segs,
            duration: baseline,
            used_grape: false,
        }),
        Err(e) => Err(e),
    }
}

/// Placement of the circuit's qubits onto the topology's nodes that puts the
/// most two-qubit gates on coupled pairs. `result[q]` is the node of qubit
/// `q`; ties go to the lexicographically first placement.
pub fn best_embedding(circuit: &Circuit, topology: &HamiltonianSpec) -> Vec<usize> {
    let n = circuit.width();
    let pairs: Vec<(usize, usize)> = circuit
        .gates()
        .iter()
        .filter(|g| g.qubits.len() == 2)
        .map(|g| (g.qubits[0], g.qubits[1]))
        .collect();
    let mut best: Vec<usize> = (0..n).collect();
    if pairs.is_empty() || n > 8 {
        return best;
    }
    let score = |p: &[usize]| {
        pairs
            .iter()
            .filter(|&&(a, b)| topology.coupled(p[a], p[b]))
            .count()
    };
    let mut best_score = score(&best);
    let mut perm = best.clone();
    while next_permutation(&mut perm) {
        let s = score(&perm);
        if s > best_score {
            best_score = s;
            best.clone_from(&perm);
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap_or(i);
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn relabel(circuit: &Circuit, map: &[usize]) -> Result<Circuit> {
    let mut out = Circuit::new(circuit.width(), circuit.param_count());
    for g in circuit.gates() {
        let mut g = g.clone();
        for q in g.qubits.iter_mut() {
            *q = map[*q];
        }
        out.push(g)?;
    }
    Ok(out)
}

/// Relabels local segment qubits through `map`.
fn remap(segments: Vec<Segment>, map: &[usize]) -> Vec<Segment> {
    segments
        .into_iter()
        .map(|mut s| {
            for q in s.qubits.iter_mut() {
                *q = map[*q];
            }
            s
        })
        .collect()
}

/// Compiles a parameter-free circuit chunk by chunk (at most `max_width`
/// qubits each), concatenating the chunks serially.
fn compile_chunked(
    circuit: &Circuit,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
    max_width: usize,
    source: PulseSource,
) -> Result<LocalCompile> {
    let chunks = block_max_width(circuit, max_width)?;
    let compiled = par_map(chunks.len(), |i| {
        compile_local_min_time(
            &chunks[i].circuit,
            spec,
            grape_config,
            mintime_config,
            library,
            source.clone(),
        )
    });
    let mut out = LocalCompile {
        segments: Vec::new(),
        duration: 0.0,
        grape_calls: 0,
        iterations: 0,
        used_grape: false,
    };
    for (chunk, c) in chunks.iter().zip(compiled) {
        let c = c?;
        for mut s in remap(c.segments, &chunk.qubits) {
            s.start += out.duration;
            out.segments.push(s);
        }
        out.duration += c.duration;
        out.grape_calls += c.grape_calls;
        out.iterations += c.iterations;
        out.used_grape |= c.used_grape;
    }
    Ok(out)
}

/// Full-circuit GRAPE: binds the parameters and runs the minimal-time
/// search on the whole circuit (or on consecutive width-capped blocks).
pub fn compile_full_grape(
    circuit: &Circuit,
    params: &Parametrization,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
) -> Result<CompiledSchedule> {
    let bound = bind_parameters(circuit, params)?;
    let c = compile_chunked(
        &bound,
        spec,
        grape_config,
        mintime_config,
        library,
        DEFAULT_MAX_WIDTH,
        PulseSource::RuntimeGrape,
    )?;
    Ok(CompiledSchedule {
        segments: c.segments,
        total_duration: c.duration,
        runtime_grape_calls: c.grape_calls,
        optimizer_iterations: c.iterations,
        ..CompiledSchedule::empty(CompileMode::FullGrape, circuit.width())
    })
}

/// Precomputed pulses of one Fixed block, in block-local qubits and times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub hash: String,
    pub body: String,
    pub segments: Vec<Segment>,
    pub duration: f64,
    /// False when GRAPE could not beat the gate-based pulses.
    pub grape: bool,
}

/// Content-addressed store of Fixed-block pulses.
pub trait PulseCache {
    fn get(&self, hash: &str) -> Result<Option<CacheEntry>>;
    fn insert(&mut self, entry: CacheEntry) -> Result<()>;

    fn contains(&self, hash: &str) -> Result<bool> {
        Ok(self.get(hash)?.is_some())
    }
}

#[derive(Debug, Clone, Default)]
pub struct MemoryCache {
    entries: BTreeMap<String, CacheEntry>,
}

impl MemoryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }
}

impl PulseCache for MemoryCache {
    fn get(&self, hash: &str) -> Result<Option<CacheEntry>> {
        Ok(self.entries.get(hash).cloned())
    }

    fn insert(&mut self, entry: CacheEntry) -> Result<()> {
        self.entries.entry(entry.hash.clone()).or_insert(entry);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrecomputeReport {
    pub blocks_computed: usize,
    pub grape_calls: usize,
    pub iterations: usize,
}

/// Minimal-time pulses for every uncached Fixed block of `plan`. Blocks
/// wider than four qubits are compiled as serial width-capped chunks; a
/// chunk GRAPE cannot beat keeps its gate-based pulses.
pub fn precompute_fixed(
    plan: &PartitionPlan,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
    cache: &mut dyn PulseCache,
) -> Result<PrecomputeReport> {
    let mut pending: Vec<&Block> = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for b in plan.blocks.iter().filter(|b| b.tag == BlockTag::Fixed) {
        let h = b.content_hash();
        if !seen.contains(&h) && !cache.contains(&h)? {
            seen.push(h);
            pending.push(b);
        }
    }
    let compiled = par_map(pending.len(), |i| {
        let block = pending[i];
        compile_chunked(
            &block.circuit,
            spec,
            grape_config,
            mintime_config,
            library,
            DEFAULT_MAX_WIDTH,
            PulseSource::Cache(seen[i].clone()),
        )
        .map_err(|e| Error::BlockCompile {
            block: seen[i].clone(),
            reason: e.to_string(),
        })
    });
    let mut report = PrecomputeReport::default();
    for ((block, hash), c) in pending.iter().zip(&seen).zip(compiled) {
        let c = c?;
        report.blocks_computed += 1;
        report.grape_calls += c.grape_calls;
        report.iterations += c.iterations;
        cache.insert(CacheEntry {
            hash: hash.clone(),
            body: block.body(),
            segments: c.segments,
            duration: c.duration,
            grape: c.used_grape,
        })?;
    }
    Ok(report)
}

/// Same as [`precompute_fixed`]; the plan should come from strict partitioning.
pub fn precompute_strict(
    plan: &PartitionPlan,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
    cache: &mut dyn PulseCache,
) -> Result<PrecomputeReport> {
    precompute_fixed(plan, spec, grape_config, mintime_config, library, cache)
}

fn cached_block(
    schedule: &mut CompiledSchedule,
    block: &Block,
    index: usize,
    cache: &dyn PulseCache,
) -> Result<()> {
    let hash = block.content_hash();
    let entry = cache.get(&hash)?.ok_or_else(|| Error::CacheMiss(hash.clone()))?;
    let segments = remap(entry.segments, &block.qubits)
        .into_iter()
        .map(|mut s| {
            s.source = PulseSource::Cache(hash.clone());
            s
        })
        .collect();
    schedule.append_serial(segments, entry.duration);
    schedule.block_stats.push(BlockStats {
        block: index,
        hash,
        grape_calls: 0,
        iterations: 0,
        wall_ms: 0.0,
        duration: entry.duration,
    });
    Ok(())
}

/// Serial concatenation of cached Fixed-block pulses and closed-form pulses
/// for each parametrized rotation. Runs no optimizer.
pub fn compile_strict(
    plan: &PartitionPlan,
    cache: &dyn PulseCache,
    params: &Parametrization,
    spec: &HamiltonianSpec,
    slice: f64,
) -> Result<CompiledSchedule> {
    params.check(&plan.parent)?;
    let mut schedule = CompiledSchedule::empty(CompileMode::Strict, plan.parent.width());
    for (index, block) in plan.blocks.iter().enumerate() {
        match block.tag {
            BlockTag::Fixed => cached_block(&mut schedule, block, index, cache)?,
            BlockTag::ParamGate(_) => {
                let gate = &block.circuit.gates()[0];
                let angle = gate
                    .angle
                    .ok_or_else(|| Error::InvalidGate("parametrized gate without angle".into()))?
                    .eval(params.values())?;
                let pulse = analytic_rotation_pulse(gate.kind, angle, spec, slice)?;
                let duration = pulse.total_time();
                if duration > 0.0 {
                    let seg = Segment {
                        pulse,
                        source: PulseSource::Analytic,
                        qubits: block.qubits.clone(),
                        start: 0.0,
                    };
                    schedule.append_serial(vec![seg], duration);
                }
                schedule.block_stats.push(BlockStats {
                    block: index,
                    hash: block.content_hash(),
                    grape_calls: 0,
                    iterations: 0,
                    wall_ms: 0.0,
                    duration,
                });
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "{other:?} block in a strict plan"
                )))
            }
        }
    }
    Ok(schedule)
}

/// Learning-rate and decay-rate candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub learning_rates: Vec<f64>,
    pub decay_rates: Vec<f64>,
}

impl Default for HyperGrid {
    /// Seven learning rates log-spaced over `[1e-3, 1]` and decays {0.999, 0.9999, 1}.
    fn default() -> Self {
        Self {
            learning_rates: (0..7).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect(),
            decay_rates: vec![0.999, 0.9999, 1.0],
        }
    }
}

impl HyperGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.learning_rates
            .iter()
            .flat_map(|&lr| self.decay_rates.iter().map(move |&d| (lr, d)))
            .collect()
    }
}

/// Mean outcome of one grid point over the angle samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub learning_rate: f64,
    pub decay_rate: f64,
    /// Mean of `max(1 − F, 1 − target)`, so converged runs tie.
    pub score: f64,
    pub mean_iterations: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedEntry {
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub score: f64,
    pub mean_iterations: f64,
}

/// Tuned hyperparameters by block content hash.
pub type TunedHyperparams = BTreeMap<String, TunedEntry>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub best: TunedEntry,
    pub evaluations: Vec<GridEvaluation>,
}

/// Binds parameter `index` of `block` to `angle` (other parameters zero).
fn bind_single(block: &Block, angle: f64) -> Result<Circuit> {
    let mut values = vec![0.0; block.circuit.param_count()];
    if let Some(i) = block.tag.param_index() {
        if i < values.len() {
            values[i] = angle;
        }
    }
    bind_parameters(&block.circuit, &Parametrization::new(values))
}

/// Grid search over (learning rate, decay rate) at a fixed pulse time.
/// Lower mean infidelity wins, then fewer mean iterations, then the smaller
/// learning rate.
pub fn tune_hyperparameters(
    block: &Block,
    angle_samples: &[f64],
    grid: &HyperGrid,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    fixed_time: f64,
) -> Result<TuningReport> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if angle_samples.is_empty() {
        return Err(Error::InvalidConfig("no angle samples".into()));
    }
    if block.width() > DEFAULT_MAX_WIDTH {
        return Err(Error::TooWide {
            width: block.width(),
            cap: DEFAULT_MAX_WIDTH,
        });
    }
    let set = local_controls(spec, block.width())?;
    let targets: Vec<CMatrix> = angle_samples
        .iter()
        .map(|&a| build_unitary(&bind_single(block, a)?, &Parametrization::empty()))
        .collect::<Result<_>>()?;
    let floor = 1.0 - grape_config.target_fidelity;
    let runs = par_map(points.len() * targets.len(), |job| {
        let (lr, decay) = points[job / targets.len()];
        let cfg = GrapeConfig {
            learning_rate: lr,
            decay_rate: decay,
            ..*grape_config
        };
        grape::grape_optimize_with(&targets[job % targets.len()], &set, &cfg, fixed_time)
    });
    let mut evaluations = Vec::with_capacity(points.len());
    let mut runs = runs.into_iter();
    for &(lr, decay) in &points {
        let mut score = 0.0;
        let mut iters = 0.0;
        let mut all = true;
        for _ in 0..targets.len() {
            let r = runs.next().expect("one run per job")?;
            score += (1.0 - r.fidelity).max(floor);
            iters += r.iterations_used as f64;
            all &= r.converged;
        }
        let k = targets.len() as f64;
        evaluations.push(GridEvaluation {
            learning_rate: lr,
            decay_rate: decay,
            score: score / k,
            mean_iterations: iters / k,
            all_converged: all,
        });
    }
    let best = evaluations
        .iter()
        .min_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(a.mean_iterations.total_cmp(&b.mean_iterations))
                .then(a.learning_rate.total_cmp(&b.learning_rate))
        })
        .expect("grid is nonempty");
    Ok(TuningReport {
        best: TunedEntry {
            learning_rate: best.learning_rate,
            decay_rate: best.decay_rate,
            score: best.score,
            mean_iterations: best.mean_iterations,
        },
        evaluations,
    })
}

/// Flexible partial compilation: cached Fixed blocks plus one runtime
/// minimal-time search per single-parameter block, using its tuned
/// hyperparameters.
#[allow(clippy::too_many_arguments)]
pub fn compile_flexible(
    plan: &PartitionPlan,
    tuned: &TunedHyperparams,
    params: &Parametrization,
    spec: &HamiltonianSpec,
    grape_config: &GrapeConfig,
    mintime_config: &MinTimeConfig,
    library: &GatePulseLibrary,
    cache: &dyn PulseCache,
    clock: &dyn Clock,
) -> Result<CompiledSchedule> {
    params.check(&plan.parent)?;
    // Check preconditions before spending any optimizer time.
    for b in &plan.blocks {
        match b.tag {
            BlockTag::Fixed => {}
            BlockTag::SingleParam(_) => {
                let h = b.content_hash();
                if !tuned.contains_key(&h) {
                    return Err(Error::MissingTuned(h));
                }
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "{other:?} block in a flexible plan"
                )))
            }
        }
    }
    for b in plan.blocks.iter().filter(|b| b.tag == BlockTag::Fixed) {
        let h = b.content_hash();
        if !cache.contains(&h)? {
            return Err(Error::CacheMiss(h));
        }
    }
    let mut schedule = CompiledSchedule::empty(CompileMode::Flexible, plan.parent.width());
    for (index, block) in plan.blocks.iter().enumerate() {
        if block.tag == BlockTag::Fixed {
            cached_block(&mut schedule, block, index, cache)?;
            continue;
        }
        let hash = block.content_hash();
        let entry = &tuned[&hash];
        let cfg = GrapeConfig {
            learning_rate: entry.learning_rate,
            decay_rate: entry.decay_rate,
            ..*grape_config
        };
        let started = clock.now_ms();
        let bound = bind_parameters(&block.circuit, params)?;
        let c = compile_local_min_time(
            &bound,
            spec,
            &cfg,
            mintime_config,
            library,
            PulseSource::RuntimeGrape,
        )
        .map_err(|e| Error::BlockCompile {
            block: hash.clone(),
            reason: e.to_string(),
        })?;
        let wall_ms = clock.now_ms() - started;
        schedule.runtime_grape_calls += c.grape_calls;
        schedule.optimizer_iterations += c.iterations;
        schedule.append_serial(remap(c.segments, &block.qubits), c.duration);
        schedule.block_stats.push(BlockStats {
            block: index,
            hash,
            grape_calls: c.grape_calls,
            iterations: c.iterations,
            wall_ms,
            duration: c.duration,
        });
    }
    Ok(schedule)
}

/// Propagates every segment on the full register in start order and
/// returns the fidelity against the circuit's unitary at `params`.
pub fn verify_schedule(
    schedule: &CompiledSchedule,
    circuit: &Circuit,
    params: &Parametrization,
    spec: &HamiltonianSpec,
) -> Result<f64> {
    if schedule.width != circuit.width() {
        return Err(Error::DimensionMismatch {
            expected: circuit.width(),
            got: schedule.width,
        });
    }
    let target = build_unitary(circuit, params)?;
    let n = circuit.width();
    let mut order: Vec<usize> = (0..schedule.segments.len()).collect();
    order.sort_by(|&a, &b| {
        schedule.segments[a]
            .start
            .total_cmp(&schedule.segments[b].start)
            .then(a.cmp(&b))
    });
    for (i, &a) in order.iter().enumerate() {
        let sa = &schedule.segments[a];
        if let Some(&q) = sa.qubits.iter().find(|&&q| q >= n) {
            return Err(Error::QubitOutOfRange { index: q, width: n });
        }
        for &b in &order[i + 1..] {
            let sb = &schedule.segments[b];
            if sb.start >= sa.end() - TIME_TOL {
                continue;
            }
            if let Some(&q) = sa.qubits.iter().find(|q| sb.qubits.contains(q)) {
                return Err(Error::OverlappingSegments { qubit: q });
            }
        }
    }
    let mut sets: Vec<Option<ControlSet>> = vec![None; DEFAULT_MAX_WIDTH.max(n) + 1];
    let mut u = linalg::identity(1 << n);
    for &a in &order {
        let s = &schedule.segments[a];
        let k = s.qubits.len();
        if sets[k].is_none() {
            sets[k] = Some(local_controls(spec, k)?);
        }
        let local = grape::propagate_with(&s.pulse, sets[k].as_ref().expect("just built"))?;
        linalg::apply_on_qubits(&mut u, &local, &s.qubits, n);
    }
    grape::fidelity(&u, &target)
}
