//! Named, reproducible experiments and their artifacts.
//!
//! An [`ExperimentConfig`] fully determines a run: the experiment fans out
//! over every `(theta, grid, seed)` job, merges the job outputs in job
//! order and writes
//!
//! * `report.csv`: one [`ReportRow`] per successful job;
//! * `data.csv`: long-format series `(experiment, theta, seed, series, x, y)`;
//! * `profiles.csv`, `fits.csv`, `bounds.csv`: detail tables when produced;
//! * `summary.csv`: one row per check, each carrying the crate version and
//!   the config hash;
//! * `failures.csv`: jobs that errored, with their error codes;
//! * `plot.gp`: a gnuplot script for the exponent-vs-theta figure;
//! * `config.toml`: the config that produced all of the above.

mod criteria;
mod experiments;

pub use criteria::{run_criterion, Criterion, CriterionOutcome, CRITERIA};

use crate::disk_kernel::BoundRow;
use crate::disk_solver::QuadratureScheme;
use crate::error::{LabError, Result};
use crate::holder::{FitRow, ProfileRow};
use crate::VERSION;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TorusDouble,
    TorusDivfreeSplit,
    TorusLoglip,
    TorusGradient,
    DiskBoundary,
    DiskGradient,
    DiskAlmostDouble,
    KernelBounds,
    ProofScaling,
    ApproxUniformity,
    WeakResidualSuite,
    BilinearSymmetry,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::TorusDouble,
        Experiment::TorusDivfreeSplit,
        Experiment::TorusLoglip,
        Experiment::TorusGradient,
        Experiment::DiskBoundary,
        Experiment::DiskGradient,
        Experiment::DiskAlmostDouble,
        Experiment::KernelBounds,
        Experiment::ProofScaling,
        Experiment::ApproxUniformity,
        Experiment::WeakResidualSuite,
        Experiment::BilinearSymmetry,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::TorusDouble => "torus-double",
            Experiment::TorusDivfreeSplit => "torus-divfree-split",
            Experiment::TorusLoglip => "torus-loglip",
            Experiment::TorusGradient => "torus-gradient",
            Experiment::DiskBoundary => "disk-boundary",
            Experiment::DiskGradient => "disk-gradient",
            Experiment::DiskAlmostDouble => "disk-almost-double",
            Experiment::KernelBounds => "kernel-bounds",
            Experiment::ProofScaling => "proof-scaling",
            Experiment::ApproxUniformity => "approx-uniformity",
            Experiment::WeakResidualSuite => "weak-residual-suite",
            Experiment::BilinearSymmetry => "bilinear-symmetry",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::TorusDouble => "torus pressure of a divergence-free C^θ field is C^{2θ}",
            Experiment::TorusDivfreeSplit => "three-part split of the pressure when div u = Δf ≠ 0",
            Experiment::TorusLoglip => "θ = ½: the pressure is log-Lipschitz but not Lipschitz",
            Experiment::TorusGradient => "θ > ½: ∇p is C^{2θ-1}",
            Experiment::DiskBoundary => "disk pressure is C^θ up to the boundary, C^{2θ} inside",
            Experiment::DiskGradient => "θ > ½ on the disk: ∇p is C^{2θ-1}",
            Experiment::DiskAlmostDouble => "disk pressure is C^{2θ-ε} on the whole domain",
            Experiment::KernelBounds => "pointwise and difference bounds of the Green–Neumann kernel",
            Experiment::ProofScaling => "λ^θ scaling of the near/far terms of p(x₁) - p(x₂)",
            Experiment::ApproxUniformity => "mollified, tangency-corrected velocities stay uniformly C^θ",
            Experiment::WeakResidualSuite => "finite-difference pressures satisfy the weak formulation",
            Experiment::BilinearSymmetry => "T(u, v) = T(v, u)",
        }
    }

    /// Experiments whose jobs do not depend on a velocity exponent.
    fn ignores_theta(&self) -> bool {
        matches!(self, Experiment::KernelBounds)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::UnknownExperiment(s.to_string()))
    }
}

/// Optional per-experiment protocol overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Highest lacunary octave `J`.
    pub octaves: Option<u32>,
    /// Pairs per scale for oscillation profiles.
    pub pair_budget: Option<usize>,
    pub drop_fine: Option<usize>,
    pub drop_coarse: Option<usize>,
    /// Width of the boundary band and margin of the interior region.
    pub band_width: Option<f64>,
    /// Coarse sample count for the kernel bounds; the refined run uses ten
    /// times as many.
    pub samples: Option<usize>,
    /// Mollifier widths for the approximation sweep.
    pub epsilons: Option<Vec<f64>>,
    /// Number of seeded test functions for the weak residual.
    pub test_functions: Option<usize>,
    /// Torus dimension (2 or 3).
    pub dim: Option<usize>,
    pub quadrature: Option<QuadratureScheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub thetas: Vec<f64>,
    /// Grid size per axis on the torus, radial node count `N_r` on the disk
    /// (with `N_φ = 2 N_r`); empty for grid-free experiments.
    #[serde(default)]
    pub grids: Vec<usize>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub overrides: Overrides,
}

impl ExperimentConfig {
    /// The frozen protocol of `experiment`, writing to `output_dir`.
    pub fn preset(experiment: Experiment, output_dir: impl Into<PathBuf>) -> Self {
        use Experiment::*;
        let (thetas, grids, seeds): (Vec<f64>, Vec<usize>, Vec<u64>) = match experiment {
            TorusDouble => (vec![0.2, 0.3, 0.4], vec![1024], vec![1, 2, 3]),
            TorusDivfreeSplit => (vec![0.3], vec![512], vec![1]),
            TorusLoglip => (vec![0.5], vec![1024], vec![1]),
            TorusGradient => (vec![0.75], vec![1024], vec![1]),
            DiskBoundary | DiskAlmostDouble => (vec![0.3], vec![1024], vec![1]),
            DiskGradient => (vec![0.75], vec![1024], vec![1]),
            KernelBounds => (vec![], vec![], vec![1]),
            ProofScaling => (vec![0.4], vec![], vec![1]),
            ApproxUniformity => (vec![0.3], vec![64], vec![1]),
            WeakResidualSuite => (vec![0.3, 0.4], vec![512], vec![1]),
            BilinearSymmetry => (vec![0.3], vec![256], vec![1, 2, 3]),
        };
        ExperimentConfig { experiment, thetas, grids, seeds, output_dir: output_dir.into(), overrides: Overrides::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() && !self.experiment.ignores_theta() {
            return Err(LabError::Parameter(format!("{} needs at least one theta", self.experiment)));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(LabError::Parameter(format!("theta must lie in (0, 1), got {t}")));
        }
        if self.seeds.is_empty() {
            return Err(LabError::Parameter("at least one seed is required".into()));
        }
        if let Some(q) = &self.overrides.quadrature {
            q.validate()?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    /// Jobs in merge order: theta-major, then grid, then seed.
    fn jobs(&self) -> Vec<Job> {
        let thetas: Vec<Option<f64>> = if self.thetas.is_empty() {
            vec![None]
        } else {
            self.thetas.iter().copied().map(Some).collect()
        };
        let grids: Vec<Option<usize>> = if self.grids.is_empty() {
            vec![None]
        } else {
            self.grids.iter().copied().map(Some).collect()
        };
        let mut jobs = Vec::new();
        for &theta in &thetas {
            for &grid in &grids {
                for &seed in &self.seeds {
                    jobs.push(Job { theta, grid, seed });
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Job {
    pub theta: Option<f64>,
    pub grid: Option<usize>,
    pub seed: u64,
}

/// One row of the regularity report; columns a job does not measure are
/// left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub theta: Option<f64>,
    pub seed: u64,
    pub grid: Option<usize>,
    pub u_exponent: Option<f64>,
    pub p_exponent: Option<f64>,
    pub p_interior_exponent: Option<f64>,
    pub p_band_exponent: Option<f64>,
    pub grad_exponent: Option<f64>,
    pub loglip_ratio: Option<f64>,
    pub u_seminorm: Option<f64>,
    pub p_seminorm: Option<f64>,
    pub residual: Option<f64>,
}

/// Column names of `report.csv`, in order.
pub const REPORT_COLUMNS: [&str; 13] = [
    "experiment",
    "theta",
    "seed",
    "grid",
    "u_exponent",
    "p_exponent",
    "p_interior_exponent",
    "p_band_exponent",
    "grad_exponent",
    "loglip_ratio",
    "u_seminorm",
    "p_seminorm",
    "residual",
];

impl ReportRow {
    pub(crate) fn new(experiment: Experiment, job: &Job) -> Self {
        ReportRow {
            experiment: experiment.name().to_string(),
            theta: job.theta,
            seed: job.seed,
            grid: job.grid,
            u_exponent: None,
            p_exponent: None,
            p_interior_exponent: None,
            p_band_exponent: None,
            grad_exponent: None,
            loglip_ratio: None,
            u_seminorm: None,
            p_seminorm: None,
            residual: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RegularityReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub experiment: String,
    pub theta: Option<f64>,
    pub seed: u64,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

/// A pass/fail comparison of a measured value against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Check { name: name.into(), value, bound: format!("<= {}", short(max)), passed: value <= max }
    }

    pub fn below(name: impl Into<String>, value: f64, max: f64) -> Self {
        Check { name: name.into(), value, bound: format!("< {}", short(max)), passed: value < max }
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Check { name: name.into(), value, bound: format!(">= {}", short(min)), passed: value >= min }
    }

    pub fn above(name: impl Into<String>, value: f64, min: f64) -> Self {
        Check { name: name.into(), value, bound: format!("> {}", short(min)), passed: value > min }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("{} ± {}", short(target), short(tol)),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "true".into(), passed: ok }
    }
}

/// Bounds are round numbers up to floating-point noise.
fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1e6).round() / 1e6)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{verdict} {}: {:.4e} ({})", self.name, self.value, self.bound)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub version: String,
    pub config_hash: String,
    pub experiment: String,
    pub check: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub experiment: String,
    pub theta: Option<f64>,
    pub seed: u64,
    pub grid: Option<usize>,
    pub code: String,
    pub message: String,
}

/// Everything one job produces.
#[derive(Debug, Default)]
pub(crate) struct JobOutput {
    pub rows: Vec<ReportRow>,
    pub data: Vec<DataRow>,
    pub profiles: Vec<ProfileRow>,
    pub fits: Vec<FitRow>,
    pub bounds: Vec<BoundRow>,
    pub checks: Vec<Check>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub config_hash: String,
    pub report: RegularityReport,
    pub data: Vec<DataRow>,
    pub checks: Vec<Check>,
    pub failures: Vec<Failure>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every job of `config`, writes the artifacts and returns them.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let hash = config.hash()?;
    fs::create_dir_all(&config.output_dir)?;
    log::info!("{} ({} jobs) -> {}", config.experiment, config.jobs().len(), config.output_dir.display());

    let results: Vec<(Job, Result<JobOutput>)> = config
        .jobs()
        .into_par_iter()
        .map(|job| (job, experiments::run_job(config, &job)))
        .collect();

    let mut merged = JobOutput::default();
    let mut failures = Vec::new();
    for (job, result) in results {
        match result {
            Ok(out) => {
                merged.rows.extend(out.rows);
                merged.data.extend(out.data);
                merged.profiles.extend(out.profiles);
                merged.fits.extend(out.fits);
                merged.bounds.extend(out.bounds);
                merged.checks.extend(out.checks);
            }
            Err(e) => {
                log::warn!("{} job θ={:?} seed={} failed: {e}", config.experiment, job.theta, job.seed);
                failures.push(Failure {
                    experiment: config.experiment.name().to_string(),
                    theta: job.theta,
                    seed: job.seed,
                    grid: job.grid,
                    code: e.code().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }

    let dir = &config.output_dir;
    write_csv(&dir.join("report.csv"), &merged.rows, true)?;
    write_csv(&dir.join("data.csv"), &merged.data, true)?;
    write_csv(&dir.join("profiles.csv"), &merged.profiles, false)?;
    write_csv(&dir.join("fits.csv"), &merged.fits, false)?;
    write_csv(&dir.join("bounds.csv"), &merged.bounds, false)?;
    write_csv(&dir.join("failures.csv"), &failures, false)?;
    let summary: Vec<SummaryRow> = merged
        .checks
        .iter()
        .map(|c| SummaryRow {
            version: VERSION.to_string(),
            config_hash: hash.clone(),
            experiment: config.experiment.name().to_string(),
            check: c.name.clone(),
            value: c.value,
            bound: c.bound.clone(),
            passed: c.passed,
        })
        .collect();
    write_csv(&dir.join("summary.csv"), &summary, true)?;
    fs::write(dir.join("plot.gp"), plot_script(config))?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;

    Ok(RunOutput {
        config_hash: hash,
        report: RegularityReport { rows: merged.rows },
        data: merged.data,
        checks: merged.checks,
        failures,
    })
}

/// Writes `rows` with a header; empty tables are skipped unless `always`.
fn write_csv<T: Serialize>(path: &Path, rows: &[T], always: bool) -> Result<()> {
    if rows.is_empty() {
        if always {
            fs::write(path, "")?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `report.csv` back.
pub fn read_report(path: &Path) -> Result<RegularityReport> {
    let mut rows = Vec::new();
    if fs::metadata(path)?.len() == 0 {
        return Ok(RegularityReport { rows });
    }
    for row in csv::Reader::from_path(path)?.deserialize() {
        rows.push(row?);
    }
    Ok(RegularityReport { rows })
}

fn column(name: &str) -> usize {
    REPORT_COLUMNS.iter().position(|c| *c == name).expect("known column") + 1
}

/// gnuplot script: measured exponents against θ with the reference lines
/// `θ` and `2θ`, and the raw data series on log-log axes.
pub fn plot_script(config: &ExperimentConfig) -> String {
    let name = config.experiment.name();
    let series = [
        ("u_exponent", "u"),
        ("p_exponent", "p (full)"),
        ("p_interior_exponent", "p (interior)"),
        ("p_band_exponent", "p (boundary band)"),
        ("grad_exponent", "grad p"),
    ];
    let mut s = String::new();
    s.push_str(&format!("# {name}: {}\n", config.experiment.description()));
    s.push_str("set datafile separator ','\nset datafile missing ''\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{name}-exponents.png'\n"));
    s.push_str("set key left top\nset xlabel 'theta'\nset ylabel 'measured exponent'\nset xrange [0:1]\nset yrange [0:1.2]\n");
    s.push_str("plot x title 'theta' lw 1 dt 2, 2*x title '2 theta' lw 1 dt 3, 2*x-1 title '2 theta - 1' lw 1 dt 4");
    for (col, title) in series {
        s.push_str(&format!(
            ", \\\n     'report.csv' every ::1 using {}:{} with points pt 7 title '{title}'",
            column("theta"),
            column(col)
        ));
    }
    s.push_str("\n\n");
    s.push_str(&format!("set output '{name}-data.png'\n"));
    s.push_str("set logscale xy\nset autoscale\nset xlabel 'x'\nset ylabel 'y'\n");
    s.push_str("plot 'data.csv' every ::1 using 5:6 with points pt 6 title 'data series'\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        let err = "torus-triple".parse::<Experiment>().unwrap_err();
        assert_eq!(err.code(), "E_EXPERIMENT");
    }

    #[test]
    fn presets_are_valid_and_serialize_losslessly() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::preset(e, "out");
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        }
    }

    #[test]
    fn torus_double_preset_has_nine_jobs() {
        let cfg = ExperimentConfig::preset(Experiment::TorusDouble, "out");
        let jobs = cfg.jobs();
        assert_eq!(jobs.len(), 9);
        assert_eq!(jobs[0].theta, Some(0.2));
        assert_eq!(jobs[8].theta, Some(0.4));
        assert_eq!(jobs[8].seed, 3);
    }

    #[test]
    fn empty_theta_list_is_a_parameter_error() {
        let mut cfg = ExperimentConfig::preset(Experiment::DiskBoundary, "out");
        cfg.thetas.clear();
        assert_eq!(cfg.validate().unwrap_err().code(), "E_PARAM");
        cfg.thetas = vec![1.2];
        assert_eq!(cfg.validate().unwrap_err().code(), "E_PARAM");
        // the kernel experiment has no velocity
        let cfg = ExperimentConfig::preset(Experiment::KernelBounds, "out");
        assert!(cfg.thetas.is_empty());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let text = "experiment = \"torus-double\"\nthetas = [0.3]\nseeds = [1]\noutput_dir = \"o\"\nbogus = 1\n";
        assert_eq!(ExperimentConfig::from_toml(text).unwrap_err().code(), "E_FORMAT");
        let text = "experiment = \"torus-sextuple\"\nthetas = [0.3]\nseeds = [1]\noutput_dir = \"o\"\n";
        assert!(ExperimentConfig::from_toml(text).is_err());
    }

    #[test]
    fn hash_changes_with_the_config() {
        let a = ExperimentConfig::preset(Experiment::TorusDouble, "out");
        let mut b = a.clone();
        b.seeds.push(4);
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 16);
    }

    #[test]
    fn checks_compare_against_their_bounds() {
        assert!(Check::within("x", 0.55, 0.6, 0.1).passed);
        assert!(!Check::within("x", 0.45, 0.6, 0.1).passed);
        assert!(Check::at_most("x", 2.0, 2.0).passed);
        assert!(!Check::below("x", 2.0, 2.0).passed);
        assert!(!Check::above("x", 3.0, 3.0).passed);
        assert_eq!(Check::below("x", 0.0, 0.30000000000000004).bound, "< 0.3");
        assert_eq!(Check::below("x", 0.0, 1e-10).bound, "< 1e-10");
    }

    #[test]
    fn plot_script_references_report_columns() {
        let s = plot_script(&ExperimentConfig::preset(Experiment::TorusDouble, "out"));
        assert!(s.contains("using 2:6"), "theta vs p_exponent:\n{s}");
        assert!(s.contains("2*x"));
    }
}
