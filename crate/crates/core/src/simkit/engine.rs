//! Monte-Carlo simulation engine.
//!
//! Stage 1 builds the scenario (reference channel, symbols, covariance,
//! sensing waveform). Stage 2 designs the nominal waveform and one robust
//! waveform per grid radius from `H̄`. Stage 3 draws the true channel of each
//! episode and evaluates the AASR of every waveform on it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{derive_seed, make_href, PerturbationModel};
use super::stats::{percentiles_with, PercentileMethod, Summary};
use crate::error::{invalid, Result};
use crate::linalg::CMatrix;
use crate::model::{aasr, qpsk_constellation, NormKind, SpatialCovariance, SystemConfig};
use crate::nominal::{factorize_r, sensing_centric_optimal, synth_covariance, synth_sensing_waveform};
use crate::robust::{nominal_joint, run_method, DesignInputs, JointConstraint, Method, RobustOptions};

const STREAM_HREF: u64 = 1 << 40;
const STREAM_SYMBOLS: u64 = (1 << 40) + 1;
const STREAM_SENSING: u64 = (1 << 40) + 2;
const STREAM_PERTURB: u64 = (1 << 40) + 3;
const STREAM_DESIGN: u64 = (1 << 40) + 4;

/// Full description of a Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub system: SystemConfig,
    pub targets_deg: Vec<f64>,
    pub beam_weight: f64,
    pub epsilon: f64,
    pub theta_grid: Vec<f64>,
    /// Trade-off coefficients; ignored (treated as `[1]`) by the
    /// sensing-centric methods.
    pub rho_grid: Vec<f64>,
    pub method: Method,
    pub alpha: f64,
    pub budget: f64,
    pub norm: NormKind,
    pub episodes: usize,
    pub master_seed: u64,
    pub percentile: PercentileMethod,
}

/// `start, start + step, …` up to and including `stop` (within 1e-9).
pub fn theta_range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| ((start + step * i as f64) * 1e12).round() / 1e12).collect()
}

impl MonteCarloConfig {
    /// K = 4, N = 16, L = 30, ε = 0.05, θ ∈ 0:0.01:0.2, 1000 episodes.
    pub fn reference(method: Method) -> Self {
        Self {
            system: SystemConfig::reference(),
            targets_deg: vec![-45.0, 45.0],
            beam_weight: 0.9,
            epsilon: 0.05,
            theta_grid: theta_range(0.0, 0.01, 0.2),
            rho_grid: vec![0.25],
            method,
            alpha: 1e4,
            budget: 1.0,
            norm: NormKind::Frobenius,
            episodes: 1000,
            master_seed: 2024,
            percentile: PercentileMethod::NearestRank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.episodes == 0 {
            return Err(invalid("episodes", "must be at least 1"));
        }
        if self.theta_grid.is_empty() {
            return Err(invalid("theta_grid", "must not be empty"));
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(invalid("theta_grid", format!("radii must be finite and nonnegative, got {t}")));
        }
        if self.method.is_joint() {
            if self.rho_grid.is_empty() {
                return Err(invalid("rho_grid", "must not be empty for joint designs"));
            }
            if let Some(r) = self.rho_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(invalid("rho_grid", format!("values must lie in [0, 1], got {r}")));
            }
        }
        if !(0.0..1.0).contains(&self.beam_weight) {
            return Err(invalid("beam_weight", format!("must lie in [0, 1), got {}", self.beam_weight)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be finite and nonnegative, got {}", self.epsilon)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be finite and nonnegative, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.budget) {
            return Err(invalid("budget", format!("must lie in [0, 1], got {}", self.budget)));
        }
        Ok(())
    }

    pub fn effective_rhos(&self) -> Vec<f64> {
        if self.method.is_joint() {
            self.rho_grid.clone()
        } else {
            vec![1.0]
        }
    }

    pub fn robust_options(&self, design_index: u64) -> RobustOptions {
        RobustOptions {
            alpha: self.alpha,
            budget: self.budget,
            norm: self.norm,
            seed: derive_seed(derive_seed(self.master_seed, STREAM_DESIGN), design_index),
            ..RobustOptions::default()
        }
    }
}

/// Stage-1 quantities shared by every design and episode.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: SystemConfig,
    pub model: PerturbationModel,
    pub s: CMatrix,
    pub r: SpatialCovariance,
    pub xs: CMatrix,
}

impl Scenario {
    pub fn build(mc: &MonteCarloConfig) -> Result<Self> {
        let cfg = mc.system.clone();
        let h_ref = make_href(cfg.users, cfg.antennas, derive_seed(mc.master_seed, STREAM_HREF));
        let model = PerturbationModel::new(h_ref, mc.epsilon, derive_seed(mc.master_seed, STREAM_PERTURB))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(mc.master_seed, STREAM_SYMBOLS));
        let s = qpsk_constellation(cfg.users, cfg.frame_length, cfg.symbol_power, &mut rng);
        let r = synth_covariance(&mc.targets_deg, mc.beam_weight, cfg.antennas, cfg.power_watts)?;
        let xs = synth_sensing_waveform(&r, cfg.frame_length, derive_seed(mc.master_seed, STREAM_SENSING))?;
        Ok(Self { cfg, model, s, r, xs })
    }

    pub fn inputs(&self, rho: f64) -> DesignInputs<'_> {
        DesignInputs { cfg: &self.cfg, h_bar: self.model.h_bar(), s: &self.s, r: &self.r, xs: &self.xs, rho }
    }
}

/// Nominal waveform `X̄` of a method at `H̄`.
pub fn nominal_waveform(method: Method, inputs: &DesignInputs<'_>, opts: &RobustOptions) -> Result<CMatrix> {
    match method {
        Method::M1 | Method::M2 => {
            let f = factorize_r(inputs.r)?;
            sensing_centric_optimal(inputs.h_bar, inputs.s, &f, inputs.cfg.frame_length)
        }
        Method::M3Tpc => nominal_joint(inputs.cfg, inputs.h_bar, inputs.s, inputs.xs, inputs.rho, JointConstraint::Total, opts),
        Method::M3Papc => {
            nominal_joint(inputs.cfg, inputs.h_bar, inputs.s, inputs.xs, inputs.rho, JointConstraint::PerAntenna, opts)
        }
    }
}

/// Results for one grid radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub theta: f64,
    /// Robust AASR `R_{H*,X*}`.
    pub aasr_robust: Option<f64>,
    pub cost_robust: Option<f64>,
    pub gap: Option<f64>,
    /// True AASRs `R_{H₀,X*}` in episode order.
    pub true_aasr: Vec<f64>,
    pub summary: Option<Summary>,
    /// Share of episodes with true AASR ≥ robust AASR.
    pub coverage: Option<f64>,
    pub error: Option<String>,
}

/// Results for one trade-off coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoBlock {
    pub rho: f64,
    /// Nominal AASR `R_{H̄,X̄}`.
    pub aasr_nominal: f64,
    /// True AASRs `R_{H₀,X̄}` in episode order.
    pub nominal_true: Vec<f64>,
    pub nominal_summary: Summary,
    pub points: Vec<ThetaPoint>,
}

impl RhoBlock {
    /// Smallest grid radius whose robust AASR lower-bounds at least `level`
    /// of the true AASRs.
    pub fn tightest_theta(&self, level: f64) -> Option<&ThetaPoint> {
        self.points.iter().find(|p| p.coverage.is_some_and(|c| c >= level))
    }

    pub fn coverage_curve(&self) -> Vec<(f64, Option<f64>)> {
        self.points.iter().map(|p| (p.theta, p.coverage)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub method: Method,
    pub episodes: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub percentile: PercentileMethod,
    pub blocks: Vec<RhoBlock>,
    /// Designs that failed (each failure drops one grid radius).
    pub failures: usize,
}

fn coverage(true_aasr: &[f64], robust: f64) -> f64 {
    true_aasr.iter().filter(|&&a| a >= robust).count() as f64 / true_aasr.len() as f64
}

/// Runs the three stages; deterministic given the configuration.
pub fn run_montecarlo(mc: &MonteCarloConfig) -> Result<MonteCarloReport> {
    mc.validate()?;
    let scenario = Scenario::build(mc)?;
    let noise = scenario.cfg.noise_watts;
    let mut blocks = Vec::new();
    let mut failures = 0;
    for (ri, &rho) in mc.effective_rhos().iter().enumerate() {
        let inputs = scenario.inputs(rho);
        let base = (ri * mc.theta_grid.len()) as u64;
        let x_bar = nominal_waveform(mc.method, &inputs, &mc.robust_options(base))?;
        let designs: Vec<_> = mc
            .theta_grid
            .iter()
            .enumerate()
            .map(|(ti, &theta)| run_method(mc.method, &inputs, theta, &mc.robust_options(base + ti as u64)))
            .collect();
        for (theta, d) in mc.theta_grid.iter().zip(&designs) {
            if let Err(e) = d {
                failures += 1;
                log::warn!("{} design failed at theta = {theta}, rho = {rho}: {e}", mc.method);
            }
        }
        let robust_x: Vec<Option<&CMatrix>> = designs.iter().map(|d| d.as_ref().ok().map(|r| &r.x_robust)).collect();
        // Episode-major evaluation, gathered in episode order.
        let per_episode: Vec<(f64, Vec<Option<f64>>)> = (0..mc.episodes as u64)
            .into_par_iter()
            .map(|e| {
                let h0 = scenario.model.h_true(e);
                let nominal = aasr(&h0, &x_bar, &scenario.s, noise).expect("dimensions validated");
                let robust = robust_x
                    .iter()
                    .map(|x| x.map(|x| aasr(&h0, x, &scenario.s, noise).expect("dimensions validated")))
                    .collect();
                (nominal, robust)
            })
            .collect();
        let nominal_true: Vec<f64> = per_episode.iter().map(|(n, _)| *n).collect();
        let mut points = Vec::with_capacity(mc.theta_grid.len());
        for (ti, (&theta, design)) in mc.theta_grid.iter().zip(&designs).enumerate() {
            let point = match design {
                Ok(d) => {
                    let true_aasr: Vec<f64> = per_episode.iter().map(|(_, r)| r[ti].expect("design succeeded")).collect();
                    ThetaPoint {
                        theta,
                        aasr_robust: Some(d.aasr_robust),
                        cost_robust: Some(d.cost_robust),
                        gap: Some(d.diagnostics.gap),
                        summary: Some(percentiles_with(&true_aasr, mc.percentile)?),
                        coverage: Some(coverage(&true_aasr, d.aasr_robust)),
                        true_aasr,
                        error: None,
                    }
                }
                Err(e) => ThetaPoint {
                    theta,
                    aasr_robust: None,
                    cost_robust: None,
                    gap: None,
                    true_aasr: Vec::new(),
                    summary: None,
                    coverage: None,
                    error: Some(e.to_string()),
                },
            };
            points.push(point);
        }
        blocks.push(RhoBlock {
            rho,
            aasr_nominal: aasr(inputs.h_bar, &x_bar, &scenario.s, noise)?,
            nominal_summary: percentiles_with(&nominal_true, mc.percentile)?,
            nominal_true,
            points,
        });
    }
    Ok(MonteCarloReport {
        method: mc.method,
        episodes: mc.episodes,
        master_seed: mc.master_seed,
        epsilon: mc.epsilon,
        percentile: mc.percentile,
        blocks,
        failures,
    })
}

/// Gap statistics over episodes that each redraw the estimated channel `H̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStudy {
    pub theta: f64,
    pub epsilon: f64,
    /// `‖H*X̄ − S‖²_F − ‖H*X* − S‖²_F` per episode.
    pub gaps: Vec<f64>,
    /// `(L₁ + L₂)·θ = 2·L_f·θ` per episode.
    pub bounds: Vec<f64>,
}

impl GapStudy {
    pub fn mean(&self) -> f64 {
        self.gaps.iter().sum::<f64>() / self.gaps.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.gaps.iter().map(|g| (g - m).powi(2)).sum::<f64>() / self.gaps.len() as f64).sqrt()
    }
}

/// Designs a robust waveform at radius `theta` for `episodes` independent
/// channel estimates `H̄ = H_ref + εΔ` and records the gap of each.
pub fn gap_study(mc: &MonteCarloConfig, theta: f64) -> Result<GapStudy> {
    mc.validate()?;
    let scenario = Scenario::build(mc)?;
    let results: Vec<Result<(f64, f64)>> = (0..mc.episodes as u64)
        .into_par_iter()
        .map(|e| {
            let model = PerturbationModel::new(
                scenario.model.h_ref.clone(),
                mc.epsilon,
                derive_seed(derive_seed(mc.master_seed, STREAM_PERTURB), e),
            )?;
            let inputs = DesignInputs { h_bar: model.h_bar(), ..scenario.inputs(mc.rho_grid.first().copied().unwrap_or(1.0)) };
            let d = run_method(mc.method, &inputs, theta, &mc.robust_options(e))?;
            let lf = if mc.method.is_joint() { d.diagnostics.l_g } else { d.diagnostics.l_f };
            Ok((d.diagnostics.gap, 2.0 * lf * d.diagnostics.theta_effective))
        })
        .collect();
    let mut gaps = Vec::with_capacity(results.len());
    let mut bounds = Vec::with_capacity(results.len());
    for r in results {
        let (g, b) = r?;
        gaps.push(g);
        bounds.push(b);
    }
    Ok(GapStudy { theta, epsilon: mc.epsilon, gaps, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: Method) -> MonteCarloConfig {
        MonteCarloConfig {
            system: SystemConfig { users: 2, antennas: 4, frame_length: 8, ..SystemConfig::reference() },
            theta_grid: vec![0.0, 0.1, 0.2],
            episodes: 40,
            ..MonteCarloConfig::reference(method)
        }
    }

    #[test]
    fn grid_helper() {
        let g = theta_range(0.0, 0.01, 0.2);
        assert_eq!(g.len(), 21);
        assert_eq!(g[13], 0.13);
        assert_eq!(*g.last().unwrap(), 0.2);
    }

    #[test]
    fn single_episode_nominal_only() {
        let mc = MonteCarloConfig { episodes: 1, theta_grid: vec![0.0], ..small(Method::M1) };
        let rep = run_montecarlo(&mc).unwrap();
        assert_eq!(rep.blocks.len(), 1);
        let b = &rep.blocks[0];
        assert_eq!(b.points.len(), 1);
        assert_eq!(b.nominal_true.len(), 1);
        assert!((b.points[0].true_aasr[0] - b.nominal_true[0]).abs() < 1e-12);
        assert!((b.points[0].aasr_robust.unwrap() - b.aasr_nominal).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_coverage_monotone() {
        for method in [Method::M1, Method::M2, Method::M3Tpc] {
            let mc = small(method);
            let a = run_montecarlo(&mc).unwrap();
            let b = run_montecarlo(&mc).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            let cov: Vec<f64> = a.blocks[0].points.iter().map(|p| p.coverage.unwrap()).collect();
            assert!(cov.windows(2).all(|w| w[1] >= w[0]), "{method}: {cov:?}");
            assert_eq!(a.failures, 0);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mc = MonteCarloConfig { episodes: 0, ..small(Method::M1) };
        assert!(run_montecarlo(&mc).is_err());
        let mc = MonteCarloConfig { rho_grid: vec![1.5], ..small(Method::M3Tpc) };
        assert!(run_montecarlo(&mc).is_err());
    }

    #[test]
    fn gap_study_respects_bound() {
        let mc = MonteCarloConfig { episodes: 10, epsilon: 0.1, ..small(Method::M1) };
        let g = gap_study(&mc, 0.12).unwrap();
        assert_eq!(g.gaps.len(), 10);
        for (gap, bound) in g.gaps.iter().zip(&g.bounds) {
            assert!(gap <= bound);
        }
    }
}
