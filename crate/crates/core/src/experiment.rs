//! Experiment configuration, presets, and artifact output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::center::PaymentRule;
use crate::distributions::{fit_empirical, read_samples, DistributionSpec, Family};
use crate::equilibrium::{self, EquilibriumConfig, EquilibriumTrace, MetaGame, Mode};
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Gpd {
        #[serde(default)]
        location: f64,
        #[serde(default = "one")]
        scale: f64,
        shape: f64,
    },
    BurrXii {
        c: f64,
        k: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Normal {
        mean: f64,
        stddev: f64,
    },
    Uniform,
    /// One sample per line; relative paths resolve against the config file.
    Empirical {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl DistributionConfig {
    pub fn build(&self, grid: &Grid) -> Result<DistributionSpec> {
        let family = match self {
            DistributionConfig::Gpd { location, scale, shape } => Family::Gpd {
                location: *location,
                scale: *scale,
                shape: *shape,
            },
            DistributionConfig::BurrXii { c, k, scale } => Family::BurrXii {
                c: *c,
                k: *k,
                scale: *scale,
            },
            DistributionConfig::Normal { mean, stddev } => Family::Normal {
                mean: *mean,
                stddev: *stddev,
            },
            DistributionConfig::Uniform => Family::Uniform,
            DistributionConfig::Empirical { path } => {
                return Ok(fit_empirical(&read_samples(path)?, grid)?.spec);
            }
        };
        DistributionSpec::on_grid(family, grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    ExAnte,
    Blinded,
}

/// A complete experiment. Every field except the distribution has a
/// default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub upper: f64,
    pub bins: usize,
    pub subsamples: usize,
    pub distribution: DistributionConfig,
    pub mode: ModeName,
    /// Bidder blinding stddev (blinded mode).
    pub mu_sigma: Option<f64>,
    /// Center blinding stddev (blinded mode); defaults to `mu_sigma`.
    pub w_sigma: Option<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub max_rounds: usize,
    pub tolerance: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let eq = EquilibriumConfig::default();
        Self {
            upper: 10.0,
            bins: 50,
            subsamples: 200,
            distribution: DistributionConfig::Gpd {
                location: 0.0,
                scale: 1.0,
                shape: 1.0,
            },
            mode: ModeName::ExAnte,
            mu_sigma: None,
            w_sigma: None,
            gamma: eq.gamma,
            alpha: eq.alpha,
            alpha_decay: eq.alpha_decay,
            max_rounds: eq.max_rounds,
            tolerance: eq.tolerance,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON config; a relative empirical sample path is taken
    /// relative to the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let DistributionConfig::Empirical { path: samples } = &mut config.distribution {
            if samples.is_relative() {
                if let Some(dir) = path.parent() {
                    *samples = dir.join(&*samples);
                }
            }
        }
        Ok(config)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(0.0, self.upper, self.bins, self.subsamples)
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.mode {
            ModeName::ExAnte => Ok(Mode::ExAnte),
            ModeName::Blinded => {
                let mu_sigma = self
                    .mu_sigma
                    .ok_or_else(|| Error::Config("blinded mode needs mu_sigma".into()))?;
                Ok(Mode::Blinded {
                    mu_sigma,
                    w_sigma: self.w_sigma.unwrap_or(mu_sigma),
                })
            }
        }
    }

    pub fn equilibrium(&self) -> Result<EquilibriumConfig> {
        let config = EquilibriumConfig {
            mode: self.mode()?,
            gamma: self.gamma,
            alpha: self.alpha,
            alpha_decay: self.alpha_decay,
            max_rounds: self.max_rounds,
            tolerance: self.tolerance,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Options shared by all presets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOptions {
    pub gamma: Option<f64>,
    pub shape: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub sigma: Option<f64>,
    pub w_sigma: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

pub const PRESETS: [&str; 4] = ["exante-pareto", "exante-gamma", "exante-burr", "blinded-pareto"];

/// Builds a named preset, with flags overriding the template.
pub fn preset(name: &str, opts: &PresetOptions) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let gpd = |shape: f64| DistributionConfig::Gpd {
        location: 0.0,
        scale: 1.0,
        shape,
    };
    let unused = |flag: &str, given: bool| {
        if given {
            Err(Error::Config(format!("preset {name} does not take --{flag}")))
        } else {
            Ok(())
        }
    };
    match name {
        "exante-pareto" => {
            unused("c", opts.c.is_some())?;
            unused("k", opts.k.is_some())?;
            unused("sigma", opts.sigma.is_some())?;
            unused("w-sigma", opts.w_sigma.is_some())?;
            config.distribution = gpd(opts.shape.unwrap_or(1.0));
        }
        "exante-gamma" => {
            unused("c", opts.c.is_some())?;
            unused("k", opts.k.is_some())?;
            unused("sigma", opts.sigma.is_some())?;
            unused("w-sigma", opts.w_sigma.is_some())?;
            config.distribution = gpd(opts.shape.unwrap_or(1.0));
        }
        "exante-burr" => {
            unused("shape", opts.shape.is_some())?;
            unused("sigma", opts.sigma.is_some())?;
            unused("w-sigma", opts.w_sigma.is_some())?;
            config.distribution = DistributionConfig::BurrXii {
                c: opts.c.unwrap_or(2.0),
                k: opts.k.unwrap_or(1.0),
                scale: 1.0,
            };
        }
        "blinded-pareto" => {
            unused("c", opts.c.is_some())?;
            unused("k", opts.k.is_some())?;
            config.distribution = gpd(opts.shape.unwrap_or(1.0));
            config.mode = ModeName::Blinded;
            let sigma = opts.sigma.unwrap_or(5.0);
            config.mu_sigma = Some(sigma);
            config.w_sigma = Some(opts.w_sigma.unwrap_or(sigma));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    }
    if let Some(g) = opts.gamma {
        config.gamma = g;
    }
    config.output_dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("out/{name}")));
    Ok(config)
}

pub fn list_presets() -> String {
    let d = ExperimentConfig::default();
    format!(
        "\
exante-pareto --shape {{-0.1,0.01,1}}   [--gamma G]
    Ex-ante equilibrium for f = GPD(0, 1, shape); rule shapes and the
    constant shade across tail shapes (default shape 1).
exante-gamma --gamma {{0.25,0.5,0.75}}  [--shape X]
    Ex-ante budget sweep for f = GPD(0, 1, 1).
exante-burr --c 2 --k 1               [--gamma G]
    Ex-ante equilibrium for f = Burr XII(c, k); interior zero band.
blinded-pareto --sigma {{2,5,10,1000}}  [--w-sigma W] [--gamma G]
    Blinded equilibrium for f = GPD(0, 1, 1) with Normal(0, sigma) blinding;
    payment surfaces over (psi, shade).

Defaults: U = {}, B = {}, S = {}, gamma = {}, alpha = {}, alpha_decay = {},
max_rounds = {}, tolerance = {}. Every preset also accepts --out DIR.
",
        d.upper, d.bins, d.subsamples, d.gamma, d.alpha, d.alpha_decay, d.max_rounds, d.tolerance
    )
}

/// Machine-readable outcome; field order is the key order in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub converged: bool,
    pub rounds: usize,
    pub mode: Mode,
    pub gamma: f64,
    pub k_vcg: f64,
    pub k: f64,
    pub budget_collected: f64,
    /// The constant shade (ex-ante), otherwise null.
    pub shade: Option<f64>,
    /// Shade at every bin midpoint.
    pub shade_nodes: Vec<f64>,
    pub deviation_incentive: f64,
    pub regret_at_truth: f64,
    pub worst_case_regret: f64,
    pub bidder_gap: f64,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub max_rounds: usize,
    pub tolerance: f64,
    pub upper: f64,
    pub bins: usize,
    pub subsamples: usize,
    pub distribution: DistributionConfig,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub trace: EquilibriumTrace,
    pub summary: Summary,
    pub runtime_seconds: f64,
}

/// Solves the experiment without writing anything.
pub fn solve(config: &ExperimentConfig) -> Result<Outcome> {
    let started = Instant::now();
    let grid = config.grid()?;
    let f = config.distribution.build(&grid)?;
    let eq = config.equilibrium()?;
    let trace = equilibrium::find_equilibrium(&f, &eq, &grid)?;
    let summary = Summary {
        converged: trace.converged,
        rounds: trace.rounds.len(),
        mode: eq.mode,
        gamma: eq.gamma,
        k_vcg: trace.budget.k_vcg,
        k: trace.budget.k,
        budget_collected: trace.collected,
        shade: trace.shade(),
        shade_nodes: trace.strategy.node_values(&grid),
        deviation_incentive: trace.deviation_incentive,
        regret_at_truth: trace.rule.regret_at_truth(&f),
        worst_case_regret: trace.rule.worst_case_regret(),
        bidder_gap: trace.bidder_gap,
        alpha: eq.alpha,
        alpha_decay: eq.alpha_decay,
        max_rounds: eq.max_rounds,
        tolerance: eq.tolerance,
        upper: config.upper,
        bins: config.bins,
        subsamples: config.subsamples,
        distribution: config.distribution.clone(),
    };
    Ok(Outcome {
        config: config.clone(),
        trace,
        summary,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Solves and writes every artifact into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let outcome = solve(config)?;
    write_artifacts(&outcome)?;
    Ok(outcome)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_artifacts(outcome: &Outcome) -> Result<()> {
    let dir = &outcome.config.output_dir;
    fs::create_dir_all(dir)?;
    let grid = outcome.config.grid()?;
    let trace = &outcome.trace;

    trace.rule.write_csv(create(dir, "rule.csv")?)?;
    trace.strategy.write_csv(create(dir, "strategy.csv")?, &grid)?;

    let f = outcome.config.distribution.build(&grid)?;
    let game = MetaGame::new(&f, outcome.summary.mode, outcome.summary.gamma, &grid)?;
    write_ratio_csv(create(dir, "ratio.csv")?, &game, &trace.strategy, &grid)?;
    write_surface_csv(create(dir, "surface.csv")?, &trace.rule, &grid)?;

    let mut summary = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut summary, &outcome.summary)?;
    writeln!(summary)?;
    summary.flush()?;

    let mut report = create(dir, "report.txt")?;
    report.write_all(trace.report().as_bytes())?;
    report.flush()?;

    let mut timing = create(dir, "timing.json")?;
    writeln!(timing, "{{\n  \"runtime_seconds\": {}\n}}", outcome.runtime_seconds)?;
    timing.flush()?;
    Ok(())
}

/// Per-bin budget gained per unit of regret at truth, as the center ranks
/// bins against `strategy`.
pub fn write_ratio_csv<W: Write>(
    writer: W,
    game: &MetaGame,
    strategy: &crate::bidder::Strategy,
    grid: &Grid,
) -> Result<()> {
    let ratios = game.center_lp(strategy).ratios();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["psi", "ratio"])?;
    for (psi, r) in grid.midpoints().iter().zip(ratios) {
        w.write_record([psi.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Regret over `(psi, shade)` on the bin-width lattice of `[0, U]^2`:
/// `r(psi - shade)` while the bidder still wins, `psi` once it loses.
pub fn write_surface_csv<W: Write>(writer: W, rule: &PaymentRule, grid: &Grid) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["psi", "shade", "value"])?;
    let h = grid.width();
    let n = grid.bins();
    let at = |j: usize| {
        if j == n {
            grid.upper()
        } else {
            grid.lower() + j as f64 * h
        }
    };
    for i in 0..=n {
        let psi = at(i);
        for j in 0..=n {
            let shade = at(j) - grid.lower();
            let value = if psi >= shade { rule.eval(psi - shade) } else { psi };
            w.write_record([psi.to_string(), shade.to_string(), value.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
