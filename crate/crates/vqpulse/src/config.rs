//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored; keys may appear once. Known keys:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `charge_bound_ghz` | 0.1 | charge drive bound, GHz (2π × value rad/ns) |
//! | `flux_bound_ghz` | 1.5 | flux drive bound, GHz |
//! | `coupling_bound_ghz` | 0.05 | coupling bound, GHz |
//! | `topology` | `grid` | block coupling graph: `grid` (most nearly square), `grid RxC`, or an edge list `0-1, 1-2` (used for blocks of that size) |
//! | `dt_ns` | 0.05 | time slice |
//! | `sample_rate_divisor` | 1 | slices per pulse sample |
//! | `target_fidelity` | 0.999 | |
//! | `amplitude_penalty` | 1e-4 | λ of the normalized amplitude penalty |
//! | `seed` | 0 | base RNG seed |
//! | `library_learning_rate`, `library_decay_rate`, `library_max_iterations` | 0.05, 0.999, 3000 | optimizer for gate-library pulses |
//! | `library_mode` | `search` | `search` (minimal time) or `fixed` (gate-table durations) |
//! | `block_learning_rate`, `block_decay_rate`, `block_max_iterations` | 0.1, 0.997, 1000 | optimizer for multi-gate blocks |
//! | `precision_ns` | 0.3 | minimal-time search window |
//! | `doubling_cap` | 4 | largest multiple of the initial bound tried |
//! | `tune_max_iterations` | 1000 | iteration budget per tuning run |
//! | `tune_time_ns` | unset | fixed pulse time for tuning (default: block gate-table runtime) |
//! | `learning_rates`, `decay_rates` | 7 log-spaced in [1e-3, 1]; 0.999, 0.9999, 1 | tuning grid (comma lists) |

use std::path::{Path, PathBuf};

use vqpulse_core::grape::GrapeConfig;
use vqpulse_core::hamiltonian::{ghz_to_rad_per_ns, BlockTopology, HamiltonianSpec};
use vqpulse_core::mintime::MinTimeConfig;
use vqpulse_core::pipeline::HyperGrid;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LibraryMode {
    Search,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub charge_bound: f64,
    pub flux_bound: f64,
    pub coupling_bound: f64,
    pub topology: Option<BlockTopology>,
    pub dt: f64,
    pub sample_rate_divisor: usize,
    pub target_fidelity: f64,
    pub amplitude_penalty: f64,
    pub seed: u64,
    pub library: Optimizer,
    pub library_mode: LibraryMode,
    pub block: Optimizer,
    pub precision: f64,
    pub doubling_cap: f64,
    pub tune_max_iterations: usize,
    pub tune_time: Option<f64>,
    pub grid: HyperGrid,
}

impl Default for Settings {
    fn default() -> Self {
        let spec = HamiltonianSpec::default_for(1);
        let lib = GrapeConfig::gate_library();
        let block = GrapeConfig::block();
        let base = GrapeConfig::default();
        let mt = MinTimeConfig::default();
        Self {
            charge_bound: spec.charge_bound,
            flux_bound: spec.flux_bound,
            coupling_bound: spec.coupling_bound,
            topology: None,
            dt: base.dt,
            sample_rate_divisor: base.sample_rate_divisor,
            target_fidelity: base.target_fidelity,
            amplitude_penalty: base.amplitude_penalty,
            seed: base.rng_seed,
            library: Optimizer {
                learning_rate: lib.learning_rate,
                decay_rate: lib.decay_rate,
                max_iterations: lib.max_iterations,
            },
            library_mode: LibraryMode::Search,
            block: Optimizer {
                learning_rate: block.learning_rate,
                decay_rate: block.decay_rate,
                max_iterations: block.max_iterations,
            },
            precision: mt.precision,
            doubling_cap: mt.doubling_cap,
            tune_max_iterations: block.max_iterations,
            tune_time: None,
            grid: HyperGrid::default(),
        }
    }
}

/// Splits a document into `(line, key, value)` triples.
fn entries(text: &str, path: &Path) -> CliResult<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(err("empty key".into()));
        }
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(err(format!("duplicate key `{k}`")));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn topology(v: &str) -> Result<Option<BlockTopology>, String> {
    if v == "grid" {
        return Ok(None);
    }
    if let Some(shape) = v.strip_prefix("grid") {
        let (r, c) = shape
            .trim()
            .split_once(['x', '×'])
            .ok_or_else(|| format!("expected `grid RxC`, found `{v}`"))?;
        let (r, c): (usize, usize) = (number(r.trim())?, number(c.trim())?);
        if r * c == 0 {
            return Err("grid must have at least one qubit".into());
        }
        return Ok(Some(BlockTopology::grid(r, c)));
    }
    let edges = v
        .split(',')
        .map(|e| {
            let (a, b) = e
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("expected an edge `a-b`, found `{}`", e.trim()))?;
            Ok((number(a.trim())?, number(b.trim())?))
        })
        .collect::<Result<Vec<_>, String>>()?;
    BlockTopology::from_edges(edges)
        .map(Some)
        .map_err(|e| e.to_string())
}

fn list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(number)
        .collect()
}

impl Settings {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut s = Settings::default();
        for (line, key, v) in entries(text, path)? {
            let applied: Result<(), String> = (|| {
                match key.as_str() {
                    "charge_bound_ghz" => s.charge_bound = ghz_to_rad_per_ns(number(&v)?),
                    "flux_bound_ghz" => s.flux_bound = ghz_to_rad_per_ns(number(&v)?),
                    "coupling_bound_ghz" => s.coupling_bound = ghz_to_rad_per_ns(number(&v)?),
                    "topology" => s.topology = topology(&v)?,
                    "dt_ns" => s.dt = number(&v)?,
                    "sample_rate_divisor" => s.sample_rate_divisor = number(&v)?,
                    "target_fidelity" => s.target_fidelity = number(&v)?,
                    "amplitude_penalty" => s.amplitude_penalty = number(&v)?,
                    "seed" => s.seed = number(&v)?,
                    "library_learning_rate" => s.library.learning_rate = number(&v)?,
                    "library_decay_rate" => s.library.decay_rate = number(&v)?,
                    "library_max_iterations" => s.library.max_iterations = number(&v)?,
                    "library_mode" => {
                        s.library_mode = match v.as_str() {
                            "search" => LibraryMode::Search,
                            "fixed" => LibraryMode::Fixed,
                            other => return Err(format!("unknown library mode `{other}`")),
                        }
                    }
                    "block_learning_rate" => s.block.learning_rate = number(&v)?,
                    "block_decay_rate" => s.block.decay_rate = number(&v)?,
                    "block_max_iterations" => s.block.max_iterations = number(&v)?,
                    "precision_ns" => s.precision = number(&v)?,
                    "doubling_cap" => s.doubling_cap = number(&v)?,
                    "tune_max_iterations" => s.tune_max_iterations = number(&v)?,
                    "tune_time_ns" => s.tune_time = Some(number(&v)?),
                    "learning_rates" => s.grid.learning_rates = list(&v)?,
                    "decay_rates" => s.grid.decay_rates = list(&v)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            applied.map_err(|message| CliError::Config {
                path: path.to_path_buf(),
                line,
                message,
            })?;
        }
        s.spec(1)?;
        s.grape(&s.block)?.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Settings from `path`, or the defaults.
    pub fn load_or_default(path: Option<&PathBuf>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), |p| Self::load(p))
    }

    /// Hamiltonian of an `n`-qubit register (or block) under these bounds.
    pub fn spec(&self, n: usize) -> CliResult<HamiltonianSpec> {
        let base = HamiltonianSpec {
            charge_bound: self.charge_bound,
            flux_bound: self.flux_bound,
            coupling_bound: self.coupling_bound,
            block_topology: self.topology.clone(),
            ..HamiltonianSpec::default_for(1)
        };
        let spec = base.resized(n.max(1));
        spec.validate()?;
        Ok(spec)
    }

    pub fn grape(&self, opt: &Optimizer) -> CliResult<GrapeConfig> {
        let cfg = GrapeConfig {
            target_fidelity: self.target_fidelity,
            max_iterations: opt.max_iterations,
            learning_rate: opt.learning_rate,
            decay_rate: opt.decay_rate,
            amplitude_penalty: self.amplitude_penalty,
            rng_seed: self.seed,
            dt: self.dt,
            sample_rate_divisor: self.sample_rate_divisor,
            ..GrapeConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn library_grape(&self) -> CliResult<GrapeConfig> {
        self.grape(&self.library)
    }

    pub fn block_grape(&self) -> CliResult<GrapeConfig> {
        self.grape(&self.block)
    }

    pub fn tune_grape(&self) -> CliResult<GrapeConfig> {
        self.grape(&Optimizer {
            max_iterations: self.tune_max_iterations,
            ..self.block
        })
    }

    pub fn mintime(&self) -> MinTimeConfig {
        MinTimeConfig {
            precision: self.precision,
            doubling_cap: self.doubling_cap,
            ..MinTimeConfig::default()
        }
    }

    pub fn slice(&self) -> f64 {
        self.dt * self.sample_rate_divisor as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<Settings> {
        Settings::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse("# nothing\n\n").unwrap(), Settings::default());
    }

    #[test]
    fn keys_override_defaults() {
        let s = parse(
            "charge_bound_ghz = 0.2\nseed=7 # trailing\nlearning_rates = 0.1, 0.3\n\
             topology = grid 1x4\nlibrary_mode = fixed\n",
        )
        .unwrap();
        assert!((s.charge_bound - 0.4 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(s.seed, 7);
        assert_eq!(s.grid.learning_rates, vec![0.1, 0.3]);
        assert_eq!(s.library_mode, LibraryMode::Fixed);
        assert_eq!(s.spec(4).unwrap().edges, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(s.block_grape().unwrap().rng_seed, 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("seed = 1\nbogus = 2\n", 2),
            ("seed = x\n", 1),
            ("\n\nseed\n", 3),
            ("seed = 1\nseed = 2\n", 2),
            ("seed = 1\ntopology = grid 0x3\n", 2),
            ("topology = 0-1, 1-1\n", 1),
            ("topology = 0:1\n", 1),
        ];
        for (text, want) in cases {
            match parse(text).unwrap_err() {
                CliError::Config { line, .. } => assert_eq!(line, want, "{text:?}"),
                other => panic!("{other:?}"),
            }
        }
        assert!(parse("dt_ns = -1\n").is_err());
        assert!(parse("charge_bound_ghz = 0\n").is_err());
    }

    #[test]
    fn explicit_topology() {
        let s = parse("topology = 0-1, 0-2\n").unwrap();
        assert_eq!(s.spec(3).unwrap().edges, vec![(0, 1), (0, 2)]);
        assert_eq!(s.spec(4).unwrap().edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(parse("topology = grid\n").unwrap(), Settings::default());
    }
}
