//! One function per subcommand. Each reads its inputs, runs the pipeline,
//! and writes its artifacts; printing is left to the binary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use vqpulse_core::bench::{qaoa_circuit, random_graph, GraphKind, QaoaSpec};
use vqpulse_core::circuit::{
    bind_parameters, critical_path_runtime, merge_rotations, Circuit, GateTimes, Parametrization,
    DEFAULT_DENSE_CAP,
};
use vqpulse_core::partition::{
    partition_flexible_or_strict, partition_strict, Block, BlockTag, PartitionPlan,
    DEFAULT_MAX_WIDTH,
};
use vqpulse_core::pipeline::{
    build_gate_library, build_gate_library_fixed, compile_flexible, compile_full_grape,
    compile_gate_based, compile_strict, precompute_fixed, tune_hyperparameters, verify_schedule,
    CompileMode, CompiledSchedule, GatePulseLibrary, HyperGrid, PrecomputeReport, SystemClock,
    TunedHyperparams, TuningReport,
};
use vqpulse_core::qasm;
use vqpulse_core::Error;

use crate::config::{LibraryMode, Settings};
use crate::dircache::DirCache;
use crate::error::{CliError, CliResult};
use crate::files::{
    read_circuit, read_json, update_manifest, write_atomic, write_json, ManifestEntry,
    ScheduleFile, SCHEDULE_FORMAT,
};

pub const LIBRARY_FILE: &str = "library.json";

pub fn kind_name(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::ThreeRegular => "3reg",
        GraphKind::ErdosRenyi => "er",
    }
}

/// Writes one QAOA MAXCUT circuit and records it in the directory manifest.
pub fn gen_qaoa(
    nodes: usize,
    kind: GraphKind,
    rounds: usize,
    seed: u64,
    out: &Path,
) -> CliResult<PathBuf> {
    let graph = random_graph(nodes, kind, seed)?;
    let circuit = qaoa_circuit(&QaoaSpec::new(graph.clone(), rounds))?;
    let file = format!("qaoa-{}-n{nodes}-p{rounds}-s{seed}.vqc", kind_name(kind));
    let path = out.join(&file);
    write_atomic(&path, &(qasm::serialize(&circuit) + "\n"))?;
    update_manifest(
        out,
        ManifestEntry {
            file,
            kind: kind_name(kind).into(),
            nodes,
            rounds,
            seed,
            edges: graph.edges,
        },
    )?;
    Ok(path)
}

/// Builds the gate-pulse library and writes `library.json` into `out`.
pub fn build_library(settings: &Settings, out: &Path) -> CliResult<GatePulseLibrary> {
    let spec = settings.spec(2)?;
    let gcfg = settings.library_grape()?;
    let times = GateTimes::default();
    let library = match settings.library_mode {
        LibraryMode::Search => build_gate_library(&spec, &gcfg, &settings.mintime(), &times)?,
        LibraryMode::Fixed => build_gate_library_fixed(&spec, &gcfg, &times)?,
    };
    write_json(&out.join(LIBRARY_FILE), &library)?;
    Ok(library)
}

/// Library from `path` (a file or a directory holding `library.json`), or
/// one optimized at the gate-table durations.
pub fn load_library(settings: &Settings, path: Option<&Path>) -> CliResult<GatePulseLibrary> {
    match path {
        Some(p) if p.is_dir() => read_json(&p.join(LIBRARY_FILE)),
        Some(p) => read_json(p),
        None => Ok(build_gate_library_fixed(
            &settings.spec(2)?,
            &settings.library_grape()?,
            &GateTimes::default(),
        )?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    Strict,
    Flexible,
}

/// Partition plan for `mode`; the flag is set when a flexible request fell
/// back to the strict plan because the circuit is not monotonic.
pub fn plan_for(circuit: &Circuit, mode: PlanMode) -> CliResult<(PartitionPlan, bool)> {
    Ok(match mode {
        PlanMode::Strict => (partition_strict(circuit)?, false),
        PlanMode::Flexible => partition_flexible_or_strict(circuit, DEFAULT_MAX_WIDTH)?,
    })
}

/// Fills the cache with minimal-time pulses for the plan's Fixed blocks.
pub fn precompute(
    circuit: &Path,
    mode: PlanMode,
    cache_dir: &Path,
    settings: &Settings,
    library: &GatePulseLibrary,
) -> CliResult<PrecomputeReport> {
    let (_, circuit) = read_circuit(circuit)?;
    let (plan, _) = plan_for(&circuit, mode)?;
    let mut cache = DirCache::open(cache_dir).map_err(|e| CliError::io(cache_dir, e))?;
    let spec = settings.spec(circuit.width())?;
    Ok(precompute_fixed(
        &plan,
        &spec,
        &settings.block_grape()?,
        &settings.mintime(),
        library,
        &mut cache,
    )?)
}

/// Distinct single-parameter blocks of a flexible plan, in plan order.
pub fn single_param_blocks(plan: &PartitionPlan) -> Vec<&Block> {
    let mut seen = BTreeSet::new();
    plan.blocks
        .iter()
        .filter(|b| matches!(b.tag, BlockTag::SingleParam(_)))
        .filter(|b| seen.insert(b.content_hash()))
        .collect()
}

/// `k` angles evenly spread over `(0, π]`.
pub fn angle_samples(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| std::f64::consts::PI * i as f64 / k as f64)
        .collect()
}

/// Pulse time used when tuning `block`: the configured one, or the block's
/// gate-table runtime with its parameter at π, on the slice grid.
pub fn tuning_time(block: &Block, settings: &Settings) -> CliResult<f64> {
    let slice = settings.slice();
    let t = match settings.tune_time {
        Some(t) => t,
        None => {
            let mut values = vec![0.0; block.circuit.param_count()];
            if let Some(i) = block.tag.param_index() {
                values[i] = std::f64::consts::PI;
            }
            let bound = bind_parameters(&block.circuit, &Parametrization::new(values))?;
            critical_path_runtime(&merge_rotations(&bound), &GateTimes::default())
        }
    };
    Ok(((t / slice - 1e-9).ceil().max(1.0)) * slice)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTuning {
    pub hash: String,
    pub fixed_time: f64,
    pub report: TuningReport,
}

/// Grid search per distinct single-parameter block of the flexible plan.
pub fn tune(
    circuit: &Path,
    grid: &HyperGrid,
    samples: usize,
    settings: &Settings,
) -> CliResult<(TunedHyperparams, Vec<BlockTuning>)> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let (_, circuit) = read_circuit(circuit)?;
    let (plan, _) = plan_for(&circuit, PlanMode::Flexible)?;
    let spec = settings.spec(circuit.width())?;
    let gcfg = settings.tune_grape()?;
    let angles = angle_samples(samples);
    let mut tuned = TunedHyperparams::new();
    let mut details = Vec::new();
    for block in single_param_blocks(&plan) {
        let fixed_time = tuning_time(block, settings)?;
        let report = tune_hyperparameters(block, &angles, grid, &spec, &gcfg, fixed_time)?;
        let hash = block.content_hash();
        tuned.insert(hash.clone(), report.best.clone());
        details.push(BlockTuning {
            hash,
            fixed_time,
            report,
        });
    }
    Ok((tuned, details))
}

#[derive(Debug, Clone)]
pub struct CompileRequest {
    pub circuit: PathBuf,
    pub mode: CompileMode,
    pub params: Vec<f64>,
    pub cache: Option<PathBuf>,
    pub tuned: Option<PathBuf>,
    pub library: Option<PathBuf>,
}

fn open_cache(path: Option<&PathBuf>, mode: CompileMode) -> CliResult<DirCache> {
    let dir = path.ok_or_else(|| {
        CliError::Usage(format!("--cache is required for --mode {}", mode.name()))
    })?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "cache directory {} does not exist; run precompute first",
            dir.display()
        )));
    }
    DirCache::open(dir).map_err(|e| CliError::io(dir, e))
}

/// Compiles one circuit in one mode and verifies the result when the
/// register fits the dense-matrix cap.
pub fn compile(req: &CompileRequest, settings: &Settings) -> CliResult<ScheduleFile> {
    let (name, circuit) = read_circuit(&req.circuit)?;
    let params = Parametrization::new(req.params.clone());
    params.check(&circuit)?;
    let spec = settings.spec(circuit.width())?;
    let started = Instant::now();
    let schedule: CompiledSchedule = match req.mode {
        CompileMode::GateBased => {
            let library = load_library(settings, req.library.as_deref())?;
            compile_gate_based(&circuit, &params, &library)?
        }
        CompileMode::FullGrape => {
            let library = load_library(settings, req.library.as_deref())?;
            compile_full_grape(
                &circuit,
                &params,
                &spec,
                &settings.block_grape()?,
                &settings.mintime(),
                &library,
            )?
        }
        CompileMode::Strict => {
            let cache = open_cache(req.cache.as_ref(), req.mode)?;
            let plan = partition_strict(&circuit)?;
            compile_strict(&plan, &cache, &params, &spec, settings.slice())?
        }
        CompileMode::Flexible => {
            let (plan, fell_back) = plan_for(&circuit, PlanMode::Flexible)?;
            if fell_back {
                let cache = open_cache(req.cache.as_ref(), req.mode)?;
                compile_strict(&plan, &cache, &params, &spec, settings.slice())?
            } else {
                let tuned: TunedHyperparams = match &req.tuned {
                    Some(p) => read_json(p)?,
                    None => TunedHyperparams::new(),
                };
                // Fail before building the library.
                if let Some(b) = single_param_blocks(&plan)
                    .into_iter()
                    .find(|b| !tuned.contains_key(&b.content_hash()))
                {
                    return Err(Error::MissingTuned(b.content_hash()).into());
                }
                let cache = open_cache(req.cache.as_ref(), req.mode)?;
                let library = load_library(settings, req.library.as_deref())?;
                compile_flexible(
                    &plan,
                    &tuned,
                    &params,
                    &spec,
                    &settings.block_grape()?,
                    &settings.mintime(),
                    &library,
                    &cache,
                    &SystemClock::default(),
                )?
            }
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let fidelity = if circuit.width() <= DEFAULT_DENSE_CAP {
        Some(verify_schedule(&schedule, &circuit, &params, &spec)?)
    } else {
        None
    };
    Ok(ScheduleFile {
        format: SCHEDULE_FORMAT.into(),
        circuit: name,
        mode: req.mode,
        params: req.params.clone(),
        duration_ns: schedule.total_duration,
        fidelity,
        grape_calls: schedule.runtime_grape_calls,
        iterations: schedule.optimizer_iterations,
        wall_ms,
        schedule,
    })
}

/// Fidelity of a compiled schedule against the circuit. Parameters default
/// to the ones the schedule was compiled with.
pub fn verify(
    circuit: &Path,
    schedule: &Path,
    params: Option<Vec<f64>>,
    settings: &Settings,
) -> CliResult<f64> {
    let (_, circuit) = read_circuit(circuit)?;
    let file: ScheduleFile = read_json(schedule)?;
    let params = Parametrization::new(params.unwrap_or(file.params));
    let spec = settings.spec(circuit.width())?;
    Ok(verify_schedule(&file.schedule, &circuit, &params, &spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub circuit: String,
    pub mode: String,
    pub duration_ns: f64,
    pub fidelity: String,
    pub grape_calls: usize,
    pub iterations: usize,
    pub wall_ms: f64,
}

fn mode_rank(mode: CompileMode) -> usize {
    match mode {
        CompileMode::GateBased => 0,
        CompileMode::FullGrape => 1,
        CompileMode::Strict => 2,
        CompileMode::Flexible => 3,
    }
}

/// Rows for every schedule file in `dir`, ordered by circuit then mode.
pub fn report(dir: &Path) -> CliResult<Vec<ReportRow>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut found: Vec<(String, usize, PathBuf, ScheduleFile)> = Vec::new();
    for path in files {
        let value: serde_json::Value = read_json(&path)?;
        if value.get("format").and_then(|f| f.as_str()) != Some(SCHEDULE_FORMAT) {
            continue;
        }
        let file: ScheduleFile = read_json(&path)?;
        found.push((file.circuit.clone(), mode_rank(file.mode), path, file));
    }
    found.sort_by(|a, b| (&a.0, a.1, &a.2).cmp(&(&b.0, b.1, &b.2)));
    Ok(found
        .into_iter()
        .map(|(_, _, _, f)| ReportRow {
            circuit: f.circuit,
            mode: f.mode.name().into(),
            duration_ns: f.duration_ns,
            fidelity: f.fidelity.map_or_else(|| "unverified".into(), |v| v.to_string()),
            grape_calls: f.grape_calls,
            iterations: f.iterations,
            wall_ms: f.wall_ms,
        })
        .collect())
}

pub fn write_report(rows: &[ReportRow], out: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Format {
            path: out.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["circuit", "mode", "duration_ns", "fidelity", "grape_calls", "iterations", "wall_ms"])
            .map_err(|e| CliError::Format {
                path: out.to_path_buf(),
                message: e.to_string(),
            })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(out, &String::from_utf8_lossy(&bytes))
}
