//! `design`, `montecarlo` and `verify` subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use isac_core::matfile::{read_matrix, write_matrix};
use isac_core::model::{check_power, NormKind, PowerConstraint, SpatialCovariance, SystemConfig};
use isac_core::nominal::{factorize_r, joint_objective};
use isac_core::robust::{bounds_f, optimal_cost, run_method, BoundReport, Method};
use isac_core::simkit::report::{emit, rows};
use isac_core::simkit::{run_montecarlo, MonteCarloReport, OutputFormat, Scenario};
use isac_core::{linalg::fro2, CMatrix};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SUMMARY_FILE: &str = "design.json";

/// Matrix artifacts written by `design`, by file stem.
pub const MATRICES: [&str; 8] = ["h_ref", "h_bar", "h_worst", "s", "r", "xs", "x_nominal", "x_robust"];

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub tolerance: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            cfg.io.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(t) = self.tolerance {
            cfg.verify.tolerance = t;
        }
    }

    fn format(&self, cfg: &ExperimentConfig) -> OutputFormat {
        self.format.unwrap_or_else(|| cfg.io.format.into())
    }
}

/// Everything `verify` needs besides the matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub method: Method,
    pub system: SystemConfig,
    pub theta: f64,
    pub budget: f64,
    pub norm: NormKind,
    pub rho: f64,
    pub master_seed: u64,
    pub tolerance: f64,
    pub cost_nominal: f64,
    pub cost_robust: f64,
    pub aasr_nominal: f64,
    pub aasr_robust: f64,
    pub bounds: BoundReport,
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Designs the nominal and robust waveforms at `uncertainty.theta` and writes
/// them with the diagnostics to the output directory.
pub fn cmd_design(config_path: &Path, ov: &Overrides) -> Result<DesignSummary, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    ov.apply(&mut cfg);
    let theta = cfg.theta()?;
    let mc = cfg.montecarlo_config(vec![theta])?;
    let rho = mc.rho_grid[0];
    let scenario = Scenario::build(&mc)?;
    let design = run_method(mc.method, &scenario.inputs(rho), theta, &mc.robust_options(0))?;

    let dir = cfg.io.output_dir.clone();
    create_dir(&dir)?;
    let mats: [(&str, &CMatrix); 8] = [
        ("h_ref", &scenario.model.h_ref),
        ("h_bar", scenario.model.h_bar()),
        ("h_worst", &design.h_worst),
        ("s", &scenario.s),
        ("r", scenario.r.matrix()),
        ("xs", &scenario.xs),
        ("x_nominal", &design.x_nominal),
        ("x_robust", &design.x_robust),
    ];
    for (name, m) in mats {
        write_matrix(&out_file(&dir, &format!("{name}.mat")), m)?;
    }
    let summary = DesignSummary {
        method: mc.method,
        system: mc.system.clone(),
        theta,
        budget: mc.budget,
        norm: mc.norm,
        rho,
        master_seed: mc.master_seed,
        tolerance: cfg.verify.tolerance,
        cost_nominal: design.cost_nominal,
        cost_robust: design.cost_robust,
        aasr_nominal: design.aasr_nominal,
        aasr_robust: design.aasr_robust,
        bounds: design.diagnostics,
    };
    write_json(&out_file(&dir, SUMMARY_FILE), &summary)?;
    write_json(&out_file(&dir, "config.json"), &cfg)?;
    log::info!("design artifacts written to {}", dir.display());
    Ok(summary)
}

pub fn report_file_name(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "report.csv",
        OutputFormat::Json => "report.json",
    }
}

/// Runs the Monte-Carlo engine over `uncertainty.theta_grid` and writes the
/// report. Returns the report and the path written.
pub fn cmd_montecarlo(config_path: &Path, ov: &Overrides) -> Result<(MonteCarloReport, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    ov.apply(&mut cfg);
    if cfg.montecarlo.is_none() {
        return Err(CliError::Config("missing field `montecarlo`".into()));
    }
    let mc = cfg.montecarlo_config(cfg.theta_grid()?)?;
    let report = run_montecarlo(&mc)?;
    let dir = cfg.io.output_dir.clone();
    create_dir(&dir)?;
    let format = ov.format(&cfg);
    let path = out_file(&dir, report_file_name(format));
    emit(&report, &path, format)?;
    log::info!("{} rows written to {}", rows(&report).len(), path.display());
    Ok((report, path))
}

fn load_matrix(dir: &Path, name: &str) -> Result<CMatrix, CliError> {
    Ok(read_matrix(&out_file(dir, &format!("{name}.mat")))?)
}

/// Re-checks feasibility, ball membership and the bound sandwich on a design
/// directory. `tolerance` overrides the one recorded at design time.
pub fn cmd_verify(dir: &Path, tolerance: Option<f64>) -> Result<Vec<String>, CliError> {
    let path = out_file(dir, SUMMARY_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let sum: DesignSummary =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let tol = tolerance.unwrap_or(sum.tolerance);
    let get = |n| load_matrix(dir, n);
    let (h_bar, h_worst, s, r, xs) = (get("h_bar")?, get("h_worst")?, get("s")?, get("r")?, get("xs")?);
    let (x_nominal, x_robust) = (get("x_nominal")?, get("x_robust")?);
    let sys = &sum.system;
    let (k, n, l) = (sys.users, sys.antennas, sys.frame_length);
    let shapes = [
        ("h_bar", &h_bar, (k, n)),
        ("h_worst", &h_worst, (k, n)),
        ("s", &s, (k, l)),
        ("r", &r, (n, n)),
        ("xs", &xs, (n, l)),
        ("x_nominal", &x_nominal, (n, l)),
        ("x_robust", &x_robust, (n, l)),
    ];
    let mut violations = Vec::new();
    for (name, m, want) in shapes {
        if m.shape() != want {
            violations.push(format!("SHAPE of {name}: expected {}x{}, found {}x{}", want.0, want.1, m.nrows(), m.ncols()));
        }
    }
    if !violations.is_empty() {
        return Err(CliError::Invariant(violations));
    }

    // Feasibility; residuals made relative to the constraint scale.
    let (mode, scale) = match sum.method {
        Method::M1 | Method::M2 => (PowerConstraint::Covariance(r.clone()), 1.0),
        Method::M3Tpc => (PowerConstraint::Total, sys.power_watts),
        Method::M3Papc => (PowerConstraint::PerAntenna, l as f64 * sys.power_watts / n as f64),
    };
    for (name, x) in [("x_nominal", &x_nominal), ("x_robust", &x_robust)] {
        let res = check_power(x, &mode, sys.power_watts, f64::INFINITY).residual / scale;
        if !(res <= tol) {
            violations.push(format!("{} residual of {name}: {res:.3e} > {tol:.1e}", mode.name()));
        }
    }

    // Ball membership.
    let radius = sum.budget * sum.theta;
    let dist = sum.norm.norm(&(&h_worst - &h_bar));
    if !(dist <= radius + tol * radius.max(1.0)) {
        violations.push(format!("BALL membership of h_worst: distance {dist:.6e} > radius {radius:.6e}"));
    }

    // Worst case dominates the center at X̄.
    let at_center = fro2(&(&h_bar * &x_nominal - &s));
    let at_worst = fro2(&(&h_worst * &x_nominal - &s));
    if at_worst < at_center - tol * at_center.max(1.0) {
        violations.push(format!("WORST-CASE dominance: ‖H*X̄ − S‖² = {at_worst:.6e} < ‖H̄X̄ − S‖² = {at_center:.6e}"));
    }

    // Bound sandwich for the sensing-centric optimum.
    if !sum.method.is_joint() {
        match SpatialCovariance::new(r.clone()).and_then(|cov| factorize_r(&cov)) {
            Ok(f) => {
                for (name, h) in [("h_bar", &h_bar), ("h_worst", &h_worst)] {
                    let (upper, lower) = bounds_f(h, &x_nominal, &s, &r, l);
                    let slack = tol * upper.max(1.0);
                    match optimal_cost(h, &s, &f, l) {
                        Ok(opt) if opt < lower - slack || opt > upper + slack => violations.push(format!(
                            "BOUND sandwich at {name}: {lower:.6e} <= {opt:.6e} <= {upper:.6e} fails"
                        )),
                        Ok(_) => {}
                        Err(e) => violations.push(format!("BOUND sandwich at {name}: {e}")),
                    }
                }
            }
            Err(e) => violations.push(format!("COVARIANCE r is not a valid covariance: {e}")),
        }
    }

    // Recorded costs.
    let cost = |h: &CMatrix, x: &CMatrix| {
        if sum.method.is_joint() {
            joint_objective(h, &s, &xs, sum.rho, x)
        } else {
            fro2(&(h * x - &s))
        }
    };
    for (name, recorded, actual) in [
        ("cost_nominal", sum.cost_nominal, cost(&h_bar, &x_nominal)),
        ("cost_robust", sum.cost_robust, cost(&h_worst, &x_robust)),
    ] {
        if !((recorded - actual).abs() <= tol * actual.abs().max(1.0)) {
            violations.push(format!("RECORDED {name} {recorded:.6e} differs from recomputed {actual:.6e}"));
        }
    }

    if violations.is_empty() {
        Ok(Vec::new())
    } else {
        Err(CliError::Invariant(violations))
    }
}
