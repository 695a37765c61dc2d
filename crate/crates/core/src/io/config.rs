use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{Basis, BasisOptions};
use crate::error::{Error, Result};
use crate::experiments::{default_flux_grid, hypothesis1_flux_scan, DecayModel, ExperimentSetup, FluxScan};
use crate::model::{ModelParams, WallProfile, WallSide};
use crate::observables::ClassificationThresholds;
use crate::spectral::{EnergyWindow, SolverOptions};

pub const DEFAULT_SEEDS: usize = 32;
pub const DEFAULT_FAILURE_BUDGET: f64 = 0.1;
pub const DEFAULT_DISPERSION_BANDS: usize = 1;
pub const DEFAULT_SAMPLES_PER_UNIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Dispersion,
    Spectrum,
    Classify,
    Theorem1,
    Theorem2,
    FluxScan,
    Fit,
    SelfTest,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Self::Dispersion,
        Self::Spectrum,
        Self::Classify,
        Self::Theorem1,
        Self::Theorem2,
        Self::FluxScan,
        Self::Fit,
        Self::SelfTest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dispersion => "dispersion",
            Self::Spectrum => "spectrum",
            Self::Classify => "classify",
            Self::Theorem1 => "theorem1",
            Self::Theorem2 => "theorem2",
            Self::FluxScan => "flux-scan",
            Self::Fit => "fit",
            Self::SelfTest => "self-test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Subcommands that read model parameters.
    pub fn needs_model(self) -> bool {
        !matches!(self, Self::Fit | Self::SelfTest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub c: f64,
    pub m: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallsConfig {
    pub left: WallSpec,
    pub right: WallSpec,
}

impl Default for WallsConfig {
    fn default() -> Self {
        let w = WallSpec {
            c: WallProfile::DEFAULT_C,
            m: WallProfile::DEFAULT_M,
        };
        Self { left: w, right: w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub n_max: usize,
    /// Left-branch `[k_lo, k_hi]`; the right branch is sampled on
    /// `[-k_hi, -k_lo]`. Defaults to `default_k_range`.
    pub k_range: Option<[f64; 2]>,
    pub samples_per_unit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Report directories of earlier ensemble runs, one per L.
    pub inputs: Vec<PathBuf>,
    pub model: Option<DecayModel>,
}

/// Experiment configuration as read from JSON. Absent fields take defaults
/// during [`RunConfig::resolved`]; a resolved config parses back to itself.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Subcommand>,
    #[serde(rename = "B", default)]
    pub b_field: Option<f64>,
    #[serde(rename = "L", default)]
    pub length: Option<f64>,
    #[serde(rename = "V0", default)]
    pub v0: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Flux quanta through the cylinder; absent means the flux-scan optimum.
    #[serde(default)]
    pub flux: Option<f64>,
    #[serde(default)]
    pub walls: Option<WallsConfig>,
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default)]
    pub n_x: Option<usize>,
    #[serde(rename = "J", default)]
    pub j_max: Option<i64>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_cluster: Option<usize>,
    #[serde(default)]
    pub max_basis: Option<usize>,
    #[serde(default)]
    pub solver_seed: Option<u64>,
    #[serde(default)]
    pub seeds: Option<usize>,
    #[serde(default)]
    pub seed_list: Option<Vec<u64>>,
    #[serde(rename = "L_list", default)]
    pub l_list: Option<Vec<f64>>,
    #[serde(default)]
    pub flux_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Largest tolerated fraction of failed seeds.
    #[serde(default)]
    pub failure_budget: Option<f64>,
    #[serde(default)]
    pub thresholds: Option<ClassificationThresholds>,
    #[serde(default)]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub write_vectors: Option<bool>,
    #[serde(default)]
    pub write_operator: Option<bool>,
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seeds: Option<usize>,
    pub seed_list: Option<Vec<u64>>,
    pub workers: Option<usize>,
    pub window: Option<[f64; 2]>,
    pub flux: Option<f64>,
    pub l_list: Option<Vec<f64>>,
    pub fit_inputs: Option<Vec<PathBuf>>,
    pub fit_model: Option<DecayModel>,
}

fn config_error<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Parses a config, or the `config` entry of a run manifest.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        path: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let (value, prefix) = match value {
        serde_json::Value::Object(mut map) if map.contains_key("manifest_version") => {
            (map.remove("config").unwrap_or_default(), "config.")
        }
        v => (v, ""),
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::Config {
            path: format!("{prefix}{path}"),
            message: e.into_inner().to_string(),
        }
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: format!("cannot read config: {e}"),
    })?;
    parse_config_str(&text)
}

impl RunConfig {
    pub fn minimal(b_field: f64, length: f64, v0: f64, experiment: Subcommand) -> Self {
        Self {
            experiment: Some(experiment),
            b_field: Some(b_field),
            length: Some(length),
            v0: Some(v0),
            ..Default::default()
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.seeds {
            self.seeds = Some(n);
            self.seed_list = None;
        }
        if let Some(list) = &o.seed_list {
            self.seed_list = Some(list.clone());
            self.seeds = None;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(w) = o.window {
            self.window = Some(w);
        }
        if let Some(f) = o.flux {
            self.flux = Some(f);
        }
        if let Some(l) = &o.l_list {
            self.l_list = Some(l.clone());
        }
        if o.fit_inputs.is_some() || o.fit_model.is_some() {
            let fit = self.fit.get_or_insert(FitConfig {
                inputs: Vec::new(),
                model: None,
            });
            if let Some(i) = &o.fit_inputs {
                fit.inputs = i.clone();
            }
            if o.fit_model.is_some() {
                fit.model = o.fit_model;
            }
        }
    }

    /// Lengths of a sweep, or the single `L`.
    pub fn lengths(&self) -> Vec<f64> {
        match (&self.l_list, self.length) {
            (Some(l), _) if !l.is_empty() => l.clone(),
            (_, Some(l)) => vec![l],
            _ => Vec::new(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.l_list.as_ref().is_some_and(|l| l.len() > 1)
    }

    pub fn seed_values(&self) -> Vec<u64> {
        match &self.seed_list {
            Some(l) => l.clone(),
            None => (0..self.seeds.unwrap_or(DEFAULT_SEEDS) as u64).collect(),
        }
    }

    /// Checks the config against `sub` and fills every default that does not
    /// depend on L. Sweeps keep per-L fields (grid, modes, auto flux) open.
    pub fn resolved(&self, sub: Subcommand) -> Result<RunConfig> {
        let mut c = self.clone();
        if let Some(e) = c.experiment {
            let fixed = |s: Subcommand| matches!(s, Subcommand::Theorem1 | Subcommand::Theorem2);
            if fixed(e) && fixed(sub) && e != sub {
                return config_error(
                    "experiment",
                    format!("config is for {} but the subcommand is {}", e.as_str(), sub.as_str()),
                );
            }
        }
        if sub == Subcommand::Fit {
            match &c.fit {
                Some(f) if !f.inputs.is_empty() => {}
                _ => return config_error("fit.inputs", "fit needs at least one report directory"),
            }
            if c.experiment.is_none() {
                c.experiment = Some(sub);
            }
            return Ok(c);
        }
        if !sub.needs_model() {
            return Ok(c);
        }
        c.experiment = Some(match (c.experiment, sub) {
            (Some(e @ (Subcommand::Theorem1 | Subcommand::Theorem2)), _) if !matches!(sub, Subcommand::Theorem1 | Subcommand::Theorem2) => e,
            _ => sub,
        });
        let Some(b) = c.b_field else {
            return config_error("B", "missing field");
        };
        if c.v0.is_none() {
            return config_error("V0", "missing field");
        }
        if c.lengths().is_empty() {
            return config_error("L", "missing field (give L or L_list)");
        }
        if let Some(l) = &c.l_list {
            if l.is_empty() {
                return config_error("L_list", "must not be empty");
            }
            if c.length.is_none() {
                c.length = Some(l[0]);
            }
        }
        if let Some(list) = &c.seed_list {
            if list.is_empty() {
                return config_error("seed_list", "must not be empty");
            }
        }
        if let Some(w) = c.workers {
            if w == 0 {
                return config_error("workers", "must be at least 1");
            }
        }
        if let Some(f) = c.failure_budget {
            if !(0.0..=1.0).contains(&f) {
                return config_error("failure_budget", "must lie in [0, 1]");
            }
        }
        c.epsilon.get_or_insert(ModelParams::DEFAULT_EPSILON);
        c.delta.get_or_insert(ModelParams::DEFAULT_DELTA);
        c.walls.get_or_insert_with(WallsConfig::default);
        let solver = SolverOptions::default();
        c.tol.get_or_insert(solver.tol);
        c.max_cluster.get_or_insert(solver.max_cluster);
        c.max_basis.get_or_insert(solver.max_basis);
        c.solver_seed.get_or_insert(solver.seed);
        let seeds = c.seed_values();
        c.seeds = Some(seeds.len());
        c.seed_list = Some(seeds);
        c.workers.get_or_insert(1);
        c.failure_budget.get_or_insert(DEFAULT_FAILURE_BUDGET);
        c.thresholds
            .get_or_insert_with(|| ClassificationThresholds::default_for(b));
        c.flux_grid.get_or_insert_with(default_flux_grid);
        c.write_vectors.get_or_insert(false);
        c.write_operator.get_or_insert(false);
        if sub == Subcommand::Dispersion {
            c.dispersion.get_or_insert(DispersionConfig {
                n_max: DEFAULT_DISPERSION_BANDS,
                k_range: None,
                samples_per_unit: DEFAULT_SAMPLES_PER_UNIT,
            });
        }
        // invariants that do not need a grid
        for &l in &c.lengths() {
            let p = c.params_at(l, 0.0)?;
            check_experiment(&p, c.experiment.unwrap_or(sub))?;
        }
        Ok(c)
    }

    /// Single-L config with the grid, modes and flux filled in. Returns the
    /// flux scan when the flux came from one.
    pub fn for_length(&self, sub: Subcommand, length: f64) -> Result<(RunConfig, Option<FluxScan>)> {
        let mut c = self.resolved(sub)?;
        c.length = Some(length);
        c.l_list = None;
        let kind = c.experiment.unwrap_or(sub);
        let provisional = c.params_at(length, c.flux.unwrap_or(0.0))?;
        let window = c.window_for(&provisional, kind)?;
        let basis = Basis::auto(&provisional, window.hi, c.basis_options())?;
        c.dx = Some(basis.dx);
        c.n_x = Some(basis.n_x());
        c.j_max = Some(basis.j_max);
        let mut scan = None;
        if c.flux.is_none() {
            if provisional.walls_symmetric() {
                let s = hypothesis1_flux_scan(&provisional, &basis, &window, c.flux_grid.as_deref().unwrap_or(&[]))?;
                c.flux = Some(s.best_flux.unwrap_or(0.0));
                scan = Some(s);
            } else {
                c.flux = Some(0.0);
            }
        }
        if let Some(d) = &mut c.dispersion {
            if d.k_range.is_none() {
                d.k_range = Some(default_k_range(&provisional));
            }
        }
        Ok((c, scan))
    }

    fn basis_options(&self) -> BasisOptions {
        BasisOptions {
            dx: self.dx,
            n_x: self.n_x,
            j_max: self.j_max,
        }
    }

    fn params_at(&self, length: f64, flux: f64) -> Result<ModelParams> {
        let walls = self.walls.unwrap_or_default();
        let mut p = ModelParams::new(
            self.b_field.unwrap_or(f64::NAN),
            length,
            self.v0.unwrap_or(f64::NAN),
        )
        .with_flux(flux)
        .with_epsilon(self.epsilon.unwrap_or(ModelParams::DEFAULT_EPSILON))
        .with_delta(self.delta.unwrap_or(ModelParams::DEFAULT_DELTA));
        p.wall_left = WallProfile::new(walls.left.c, walls.left.m, WallSide::Left)?;
        p.wall_right = WallProfile::new(walls.right.c, walls.right.m, WallSide::Right)?;
        p.validate()?;
        Ok(p)
    }

    fn window_for(&self, params: &ModelParams, kind: Subcommand) -> Result<EnergyWindow> {
        if let Some([lo, hi]) = self.window {
            return EnergyWindow::custom(lo, hi);
        }
        match kind {
            Subcommand::Theorem2 => Ok(EnergyWindow::gap(params)),
            _ => EnergyWindow::band(params),
        }
    }

    /// Everything a single-L run needs. Call on the output of [`Self::for_length`].
    pub fn plan(&self, sub: Subcommand) -> Result<RunPlan> {
        let length = match self.length {
            Some(l) if self.l_list.is_none() => l,
            _ => return config_error("L", "plan needs a single-L config"),
        };
        let Some(flux) = self.flux else {
            return config_error("flux", "unresolved; call for_length first");
        };
        let kind = self.experiment.unwrap_or(sub);
        let params = self.params_at(length, flux)?;
        check_experiment(&params, kind)?;
        let window = self.window_for(&params, kind)?;
        let basis = Basis::auto(&params, window.hi, self.basis_options())?;
        basis.check_modes()?;
        let thresholds = self
            .thresholds
            .unwrap_or_else(|| ClassificationThresholds::default_for(params.b_field));
        thresholds.validate()?;
        let defaults = SolverOptions::default();
        let solver = SolverOptions {
            tol: self.tol.unwrap_or(defaults.tol),
            max_cluster: self.max_cluster.unwrap_or(defaults.max_cluster),
            max_basis: self.max_basis.unwrap_or(defaults.max_basis),
            seed: self.solver_seed.unwrap_or(defaults.seed),
        };
        if !(solver.tol > 0.0) {
            return config_error("tol", "must be positive");
        }
        Ok(RunPlan {
            kind,
            setup: ExperimentSetup {
                params,
                basis,
                window,
                solver,
                thresholds,
                workers: self.workers.unwrap_or(1),
            },
            seeds: self.seed_values(),
            failure_budget: self.failure_budget.unwrap_or(DEFAULT_FAILURE_BUDGET),
        })
    }
}

/// Resolved inputs of one single-L run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    /// Experiment whose window and lattice the run uses.
    pub kind: Subcommand,
    pub setup: ExperimentSetup,
    pub seeds: Vec<u64>,
    pub failure_budget: f64,
}

fn check_experiment(p: &ModelParams, kind: Subcommand) -> Result<()> {
    match kind {
        Subcommand::Theorem1 => p.validate_band_experiment(),
        Subcommand::Theorem2 => p.validate_gap_experiment(),
        _ => p.validate(),
    }
}

/// Left-branch momentum range: from the orbit centre where the steeper wall
/// equals `3B` to the interior end `k = 0`. The right branch uses the
/// reflected range.
pub fn default_k_range(p: &ModelParams) -> [f64; 2] {
    let b = p.b_field;
    let depth = p
        .wall_left
        .depth_for_energy(3.0 * b)
        .max(p.wall_right.depth_for_energy(3.0 * b));
    [-b * (0.5 * p.length + depth), 0.0]
}
