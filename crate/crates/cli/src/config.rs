//! Run-config files: flat `section.key = value` lines with `#` comments.
//!
//! Loading resolves defaults, validates everything the file alone can
//! validate (unknown keys, duplicates, missing or inconsistent values,
//! referenced files that do not exist), and names the offending key in every
//! error. [`RunConfig::canonical_string`] re-emits the resolved keys in a
//! fixed order, so load -> serialize is idempotent byte-for-byte; floats use
//! the shortest representation that round-trips exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dm4nls_core::dispersion::{DispersionSchedule, PiecewiseProfile};
use dm4nls_core::grid::{random_band_limited, Field, GridSpec};
use dm4nls_core::integrator::{Method, Nonlinearity, SolverConfig};

use crate::io::read_checkpoint;
use crate::CliError;

/// `grid.*` — domain discretization.
#[derive(Debug, Clone)]
pub struct GridSection {
    pub dim: usize,
    pub points: usize,
    pub half_length: f64,
}

/// `schedule.alpha_*`, `schedule.beta_*` — one square wave per coefficient.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseKeys {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub t_plus: f64,
    pub t1: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub tau_plus: f64,
    pub t2: f64,
}

/// `schedule.variant` plus the variant's own keys.
#[derive(Debug, Clone)]
pub enum ScheduleSection {
    Constant { alpha: f64, beta: f64 },
    Piecewise(PiecewiseKeys),
    /// Piecewise base played at `t/epsilon`.
    Scaled { base: PiecewiseKeys, epsilon: f64 },
    /// Tabulated coefficients, interpolated; path is kept verbatim and
    /// resolved against the config file's directory.
    Sampled { table_path: String },
}

/// `initial.kind` plus the generator's own keys.
#[derive(Debug, Clone)]
pub enum InitialSection {
    GaussianBump { amplitude: f64, width: f64 },
    PlaneWave { modes: Vec<i64> },
    BandLimitedRandom { seed: u64, max_mode: usize },
    Checkpoint { path: String },
}

/// `solver.*` — mirrors the solver configuration keys one-to-one.
#[derive(Debug, Clone)]
pub struct SolverSection {
    pub dt: f64,
    pub method: Method,
    pub nonlinearity: Nonlinearity,
    pub theta: f64,
    pub dealias: bool,
    pub picard_tol: f64,
    pub max_iter: usize,
}

/// `run.*` — horizon, cadence, artifact placement.
#[derive(Debug, Clone)]
pub struct RunSection {
    /// Absent means: resume from the checkpoint's stored time, or 0.
    pub t0: Option<f64>,
    /// `run.T`; required by `simulate`, unused elsewhere.
    pub horizon: Option<f64>,
    pub output_dir: String,
    /// Keep every k-th substep in the diagnostics output (0 = partition
    /// nodes only).
    pub snapshot_every: usize,
}

/// `average.*` — present only in averaging configs.
#[derive(Debug, Clone)]
pub struct AverageSection {
    pub eps_list: Vec<f64>,
    pub s: f64,
    /// `average.T`.
    pub horizon: f64,
}

/// `check.*` — knobs for the invariant suites.
#[derive(Debug, Clone)]
pub struct CheckSection {
    /// Multiplies every upper-bound tolerance; 1 is the shipped contract.
    pub tol_scale: f64,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSection,
    pub schedule: ScheduleSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub run: RunSection,
    pub average: Option<AverageSection>,
    pub check: CheckSection,
    /// Directory of the config file; relative paths resolve against it.
    base_dir: PathBuf,
}

fn bad(key: &str, what: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("{key}: {what}"))
}

/// Raw `key = value` map with duplicate detection and take-or-default
/// accessors that name the key in every error.
struct KeyMap(BTreeMap<String, String>);

impl KeyMap {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if map.insert(key.clone(), value).is_some() {
                return Err(bad(&key, "duplicate key"));
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Result<String, CliError> {
        self.0.remove(key).ok_or_else(|| bad(key, "missing required key"))
    }

    fn take_opt(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, &self.take(key)?)
    }

    fn take_usize(&mut self, key: &str) -> Result<usize, CliError> {
        let v = self.take(key)?;
        v.parse().map_err(|_| bad(key, format!("invalid integer '{v}'")))
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse().map_err(|_| bad(key, format!("invalid real '{v}'")))
}

/// Shortest decimal that parses back to the same f64 — the canonical form.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl RunConfig {
    /// Read and fully validate a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Self::parse(&text, base_dir)
    }

    /// Parse config text; `base_dir` anchors relative paths in values.
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let mut keys = KeyMap::parse(text)?;

        let grid = GridSection {
            dim: keys.take_usize("grid.n")?,
            points: keys.take_usize("grid.N")?,
            half_length: keys.take_f64("grid.L")?,
        };

        let schedule = match keys.take("schedule.variant")?.as_str() {
            "constant" => ScheduleSection::Constant {
                alpha: keys.take_f64("schedule.alpha")?,
                beta: keys.take_f64("schedule.beta")?,
            },
            "piecewise" => ScheduleSection::Piecewise(Self::piecewise_keys(&mut keys)?),
            "scaled" => ScheduleSection::Scaled {
                base: Self::piecewise_keys(&mut keys)?,
                epsilon: keys.take_f64("schedule.epsilon")?,
            },
            "sampled" => ScheduleSection::Sampled { table_path: keys.take("schedule.table_path")? },
            other => {
                return Err(bad(
                    "schedule.variant",
                    format!("unknown variant '{other}' (constant, piecewise, scaled, sampled)"),
                ))
            }
        };

        let method = match keys.take_opt("solver.method").as_deref() {
            None | Some("strang") => Method::Strang,
            Some("picard") => Method::Picard,
            Some(other) => return Err(bad("solver.method", format!("unknown method '{other}' (strang, picard)"))),
        };
        let nonlinearity = match keys.take_opt("solver.nonlinearity").as_deref() {
            None | Some("cubic") => {
                if keys.take_opt("solver.lambda").is_some() {
                    return Err(bad("solver.lambda", "only meaningful with solver.nonlinearity = hartree"));
                }
                Nonlinearity::Cubic
            }
            Some("hartree") => Nonlinearity::Hartree { lambda: keys.take_f64("solver.lambda")? },
            Some(other) => {
                return Err(bad("solver.nonlinearity", format!("unknown nonlinearity '{other}' (cubic, hartree)")))
            }
        };
        let dealias = match keys.take_opt("solver.dealias").as_deref() {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => return Err(bad("solver.dealias", format!("expected true or false, got '{other}'"))),
        };
        let solver = SolverSection {
            dt: keys.take_f64("solver.dt")?,
            method,
            nonlinearity,
            theta: match keys.take_opt("solver.theta") {
                Some(v) => parse_f64("solver.theta", &v)?,
                None => 0.0,
            },
            dealias,
            picard_tol: match keys.take_opt("solver.picard_tol") {
                Some(v) => parse_f64("solver.picard_tol", &v)?,
                None => 1e-12,
            },
            max_iter: match keys.take_opt("solver.max_iter") {
                Some(v) => v.parse().map_err(|_| bad("solver.max_iter", format!("invalid integer '{v}'")))?,
                None => 25,
            },
        };

        let initial = match keys.take("initial.kind")?.as_str() {
            "gaussian_bump" => InitialSection::GaussianBump {
                amplitude: keys.take_f64("initial.amplitude")?,
                width: keys.take_f64("initial.width")?,
            },
            "plane_wave" => {
                let raw = keys.take("initial.k")?;
                let modes = raw
                    .split(',')
                    .map(|s| s.trim().parse::<i64>().map_err(|_| bad("initial.k", format!("invalid mode list '{raw}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if modes.len() != grid.dim {
                    return Err(bad("initial.k", format!("{} modes for a {}-dimensional grid", modes.len(), grid.dim)));
                }
                InitialSection::PlaneWave { modes }
            }
            "band_limited_random" => InitialSection::BandLimitedRandom {
                seed: {
                    let v = keys.take("initial.seed")?;
                    v.parse().map_err(|_| bad("initial.seed", format!("invalid integer '{v}'")))?
                },
                max_mode: keys.take_usize("initial.max_mode")?,
            },
            "checkpoint" => InitialSection::Checkpoint { path: keys.take("initial.path")? },
            other => {
                return Err(bad(
                    "initial.kind",
                    format!("unknown generator '{other}' (gaussian_bump, plane_wave, band_limited_random, checkpoint)"),
                ))
            }
        };

        let run = RunSection {
            t0: match keys.take_opt("run.t0") {
                Some(v) => Some(parse_f64("run.t0", &v)?),
                None => None,
            },
            horizon: match keys.take_opt("run.T") {
                Some(v) => Some(parse_f64("run.T", &v)?),
                None => None,
            },
            output_dir: keys.take("run.output_dir")?,
            snapshot_every: match keys.take_opt("run.snapshot_every") {
                Some(v) => v.parse().map_err(|_| bad("run.snapshot_every", format!("invalid integer '{v}'")))?,
                None => 1,
            },
        };

        let average = match keys.take_opt("average.eps_list") {
            Some(raw) => {
                let eps_list = raw
                    .split(',')
                    .map(|s| parse_f64("average.eps_list", s.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(AverageSection {
                    eps_list,
                    s: keys.take_f64("average.s")?,
                    horizon: keys.take_f64("average.T")?,
                })
            }
            None => None,
        };

        let check = CheckSection {
            tol_scale: match keys.take_opt("check.tol_scale") {
                Some(v) => {
                    let x = parse_f64("check.tol_scale", &v)?;
                    if !x.is_finite() || x <= 0.0 {
                        return Err(bad("check.tol_scale", "must be a positive finite real"));
                    }
                    x
                }
                None => 1.0,
            },
        };

        if let Some(unknown) = keys.0.keys().next() {
            return Err(bad(unknown, "unknown key"));
        }

        let cfg = RunConfig { grid, schedule, solver, initial, run, average, check, base_dir };
        cfg.check_referenced_files()?;
        // Surface module-level precondition violations at load time.
        cfg.grid_spec()?;
        cfg.schedule()?;
        cfg.solver_config().validate().map_err(CliError::from)?;
        Ok(cfg)
    }

    fn piecewise_keys(keys: &mut KeyMap) -> Result<PiecewiseKeys, CliError> {
        Ok(PiecewiseKeys {
            alpha_plus: keys.take_f64("schedule.alpha_plus")?,
            alpha_minus: keys.take_f64("schedule.alpha_minus")?,
            t_plus: keys.take_f64("schedule.t_plus")?,
            t1: keys.take_f64("schedule.T1")?,
            beta_plus: keys.take_f64("schedule.beta_plus")?,
            beta_minus: keys.take_f64("schedule.beta_minus")?,
            tau_plus: keys.take_f64("schedule.tau_plus")?,
            t2: keys.take_f64("schedule.T2")?,
        })
    }

    fn check_referenced_files(&self) -> Result<(), CliError> {
        if let ScheduleSection::Sampled { table_path } = &self.schedule {
            let p = self.resolve(table_path);
            if !p.is_file() {
                return Err(bad("schedule.table_path", format!("no such file: {}", p.display())));
            }
        }
        if let InitialSection::Checkpoint { path } = &self.initial {
            let p = self.resolve(path);
            if !p.is_file() {
                return Err(bad("initial.path", format!("no such file: {}", p.display())));
            }
        }
        Ok(())
    }

    /// Resolve a config-file-relative path.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.run.output_dir)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.grid.dim, self.grid.points, self.grid.half_length).map_err(CliError::from)
    }

    /// Build the dispersion schedule (reads the table file for `sampled`).
    pub fn schedule(&self) -> Result<DispersionSchedule, CliError> {
        let piecewise = |k: &PiecewiseKeys| -> Result<DispersionSchedule, CliError> {
            let alpha = PiecewiseProfile::new(k.alpha_plus, k.alpha_minus, k.t_plus, k.t1)?;
            let beta = PiecewiseProfile::new(k.beta_plus, k.beta_minus, k.tau_plus, k.t2)?;
            Ok(DispersionSchedule::piecewise(alpha, beta))
        };
        match &self.schedule {
            ScheduleSection::Constant { alpha, beta } => {
                Ok(DispersionSchedule::constant(*alpha, *beta)?)
            }
            ScheduleSection::Piecewise(k) => piecewise(k),
            ScheduleSection::Scaled { base, epsilon } => {
                Ok(DispersionSchedule::scaled(piecewise(base)?, *epsilon)?)
            }
            ScheduleSection::Sampled { table_path } => {
                let path = self.resolve(table_path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| bad("schedule.table_path", format!("{}: {e}", path.display())))?;
                let (mut ts, mut als, mut bes) = (Vec::new(), Vec::new(), Vec::new());
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                    if cols.len() != 3 {
                        return Err(bad("schedule.table_path", format!("expected 't,alpha,beta' rows, got '{line}'")));
                    }
                    ts.push(parse_f64("schedule.table_path", cols[0])?);
                    als.push(parse_f64("schedule.table_path", cols[1])?);
                    bes.push(parse_f64("schedule.table_path", cols[2])?);
                }
                Ok(DispersionSchedule::sampled(ts, als, bes)?)
            }
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            method: self.solver.method,
            nonlinearity: self.solver.nonlinearity,
            theta: self.solver.theta,
            dealias: self.solver.dealias,
            picard_tol: self.solver.picard_tol,
            max_iter: self.solver.max_iter,
        }
    }

    /// Materialize the initial state; the second value is a checkpoint's
    /// stored time, when there is one.
    pub fn initial_field(&self, spec: GridSpec) -> Result<(Field, Option<f64>), CliError> {
        match &self.initial {
            InitialSection::GaussianBump { amplitude, width } => {
                Ok((Field::gaussian(spec, *amplitude, *width)?, None))
            }
            InitialSection::PlaneWave { modes } => Ok((Field::plane_wave(spec, modes)?, None)),
            InitialSection::BandLimitedRandom { seed, max_mode } => {
                Ok((random_band_limited(spec, *max_mode, *seed)?, None))
            }
            InitialSection::Checkpoint { path } => {
                let (field, t) = read_checkpoint(&self.resolve(path))?;
                if *field.spec() != spec {
                    return Err(bad("initial.path", "checkpoint grid does not match grid.n/grid.N/grid.L"));
                }
                Ok((field, Some(t)))
            }
        }
    }

    /// Start time: explicit `run.t0`, else the checkpoint's clock, else 0.
    pub fn start_time(&self, checkpoint_t: Option<f64>) -> f64 {
        self.run.t0.or(checkpoint_t).unwrap_or(0.0)
    }

    /// Fixed-order re-serialization; parsing the output reproduces `self`.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };

        kv("grid.n", self.grid.dim.to_string());
        kv("grid.N", self.grid.points.to_string());
        kv("grid.L", fmt_f64(self.grid.half_length));

        let piecewise = |kv: &mut dyn FnMut(&str, String), k: &PiecewiseKeys| {
            kv("schedule.alpha_plus", fmt_f64(k.alpha_plus));
            kv("schedule.alpha_minus", fmt_f64(k.alpha_minus));
            kv("schedule.t_plus", fmt_f64(k.t_plus));
            kv("schedule.T1", fmt_f64(k.t1));
            kv("schedule.beta_plus", fmt_f64(k.beta_plus));
            kv("schedule.beta_minus", fmt_f64(k.beta_minus));
            kv("schedule.tau_plus", fmt_f64(k.tau_plus));
            kv("schedule.T2", fmt_f64(k.t2));
        };
        match &self.schedule {
            ScheduleSection::Constant { alpha, beta } => {
                kv("schedule.variant", "constant".into());
                kv("schedule.alpha", fmt_f64(*alpha));
                kv("schedule.beta", fmt_f64(*beta));
            }
            ScheduleSection::Piecewise(k) => {
                kv("schedule.variant", "piecewise".into());
                piecewise(&mut kv, k);
            }
            ScheduleSection::Scaled { base, epsilon } => {
                kv("schedule.variant", "scaled".into());
                piecewise(&mut kv, base);
                kv("schedule.epsilon", fmt_f64(*epsilon));
            }
            ScheduleSection::Sampled { table_path } => {
                kv("schedule.variant", "sampled".into());
                kv("schedule.table_path", table_path.clone());
            }
        }

        kv("solver.dt", fmt_f64(self.solver.dt));
        kv(
            "solver.method",
            match self.solver.method {
                Method::Strang => "strang".into(),
                Method::Picard => "picard".into(),
            },
        );
        match self.solver.nonlinearity {
            Nonlinearity::Cubic => kv("solver.nonlinearity", "cubic".into()),
            Nonlinearity::Hartree { lambda } => {
                kv("solver.nonlinearity", "hartree".into());
                kv("solver.lambda", fmt_f64(lambda));
            }
        }
        kv("solver.theta", fmt_f64(self.solver.theta));
        kv("solver.dealias", self.solver.dealias.to_string());
        kv("solver.picard_tol", fmt_f64(self.solver.picard_tol));
        kv("solver.max_iter", self.solver.max_iter.to_string());

        match &self.initial {
            InitialSection::GaussianBump { amplitude, width } => {
                kv("initial.kind", "gaussian_bump".into());
                kv("initial.amplitude", fmt_f64(*amplitude));
                kv("initial.width", fmt_f64(*width));
            }
            InitialSection::PlaneWave { modes } => {
                kv("initial.kind", "plane_wave".into());
                kv("initial.k", modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","));
            }
            InitialSection::BandLimitedRandom { seed, max_mode } => {
                kv("initial.kind", "band_limited_random".into());
                kv("initial.seed", seed.to_string());
                kv("initial.max_mode", max_mode.to_string());
            }
            InitialSection::Checkpoint { path } => {
                kv("initial.kind", "checkpoint".into());
                kv("initial.path", path.clone());
            }
        }

        if let Some(t0) = self.run.t0 {
            kv("run.t0", fmt_f64(t0));
        }
        if let Some(horizon) = self.run.horizon {
            kv("run.T", fmt_f64(horizon));
        }
        kv("run.output_dir", self.run.output_dir.clone());
        kv("run.snapshot_every", self.run.snapshot_every.to_string());

        if let Some(avg) = &self.average {
            kv(
                "average.eps_list",
                avg.eps_list.iter().map(|&e| fmt_f64(e)).collect::<Vec<_>>().join(","),
            );
            kv("average.s", fmt_f64(avg.s));
            kv("average.T", fmt_f64(avg.horizon));
        }

        kv("check.tol_scale", fmt_f64(self.check.tol_scale));
        out
    }
}
