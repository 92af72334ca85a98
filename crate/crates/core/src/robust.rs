//! Robust (worst-case) waveform designs and their bound diagnostics.
//!
//! Every method first finds the channel `H*` in the uncertainty ball that
//! maximizes the communication cost at the nominal waveform `X̄`, then
//! re-designs the waveform for `H*` while staying anchored to `X̄`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::complexify::{build_quadmax_instance, unstack_channel};
use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::{fro, fro2, real, shape, CMatrix, C64};
use crate::model::{aasr, check_power, NormKind, PowerConstraint, SpatialCovariance, SystemConfig};
use crate::nominal::{
    factorize_r, joint_objective, joint_papc, joint_tpc, sensing_centric_factor, sensing_centric_optimal, FactorF,
    PapcOptions,
};
use crate::quadmax::{QuadMaxOptions, QuadMaxProblem, Termination};
use crate::remedy::{remedy_stacked, remedy_svd_match, RemedyOptions};

/// Robust design method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Sensing-centric design with the alternating SVD-matching remedy.
    #[serde(rename = "M1")]
    M1,
    /// Sensing-centric design with the stacked closed-form remedy.
    #[serde(rename = "M2")]
    M2,
    /// Joint design under the total power constraint.
    #[serde(rename = "M3-TPC")]
    M3Tpc,
    /// Joint design under the per-antenna power constraint.
    #[serde(rename = "M3-PAPC")]
    M3Papc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3Tpc => "M3-TPC",
            Method::M3Papc => "M3-PAPC",
        }
    }

    pub fn is_joint(self) -> bool {
        matches!(self, Method::M3Tpc | Method::M3Papc)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Method::M1),
            "M2" => Ok(Method::M2),
            "M3-TPC" => Ok(Method::M3Tpc),
            "M3-PAPC" => Ok(Method::M3Papc),
            other => Err(format!("unknown method `{other}` (expected M1, M2, M3-TPC or M3-PAPC)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustOptions {
    pub alpha: f64,
    pub budget: f64,
    pub norm: NormKind,
    pub seed: u64,
    pub quadmax: QuadMaxOptions,
    pub remedy: RemedyOptions,
    pub papc: PapcOptions,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            alpha: 1e4,
            budget: 1.0,
            norm: NormKind::Frobenius,
            seed: 0,
            quadmax: QuadMaxOptions::default(),
            remedy: RemedyOptions::default(),
            papc: PapcOptions::default(),
        }
    }
}

impl RobustOptions {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be finite and nonnegative, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.budget) {
            return Err(invalid("budget", format!("must lie in [0, 1], got {}", self.budget)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub l_f: f64,
    pub l_g: f64,
    /// Upper-bound function at the center, `f̄(H̄)`.
    pub f_upper_at_center: f64,
    /// True optimal cost at the center, `f(H̄)`.
    pub f_at_center: f64,
    /// Upper-bound function at the worst case, `‖H*X̄ − S‖²_F`.
    pub f_upper_at_worst: f64,
    /// `‖H*X̄ − S‖²_F − ‖H*X* − S‖²_F`.
    pub gap: f64,
    pub theta_effective: f64,
    pub quadmax_iterations: usize,
    pub quadmax_restarts: usize,
    pub quadmax_certified: bool,
    pub quadmax_termination: Termination,
    pub remedy_iterations: usize,
    pub remedy_converged: bool,
    pub remedy_svd_residual: Option<f64>,
    /// `‖X* − X̄‖_F`.
    pub distance_to_nominal: f64,
    /// Feasibility residual of `X*` in its constraint mode.
    pub feasibility_residual: f64,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub method: Method,
    pub h_nominal: CMatrix,
    pub x_nominal: CMatrix,
    pub x_robust: CMatrix,
    pub h_worst: CMatrix,
    pub cost_nominal: f64,
    pub cost_robust: f64,
    pub aasr_nominal: f64,
    pub aasr_robust: f64,
    pub diagnostics: BoundReport,
}

/// `L_f = 2BLP_T(‖H̄‖_F + Bθ) + 2B√(LP_T)‖S‖_F`.
pub fn lipschitz_lf(cfg: &SystemConfig, h_bar: &CMatrix, s: &CMatrix, theta: f64, norm: NormKind) -> f64 {
    let b = norm.b_constant(h_bar.nrows(), h_bar.ncols());
    let lp = cfg.l() * cfg.power_watts;
    2.0 * b * lp * (fro(h_bar) + b * theta) + 2.0 * b * lp.sqrt() * fro(s)
}

/// `L_g = ρ·L_f`.
pub fn lipschitz_lg(cfg: &SystemConfig, h_bar: &CMatrix, s: &CMatrix, theta: f64, norm: NormKind, rho: f64) -> f64 {
    rho * lipschitz_lf(cfg, h_bar, s, theta, norm)
}

/// Upper and lower bounds on the optimal sensing-centric cost at `H`:
/// `f̄(H) = ‖HX̄ − S‖²_F` and `(√(L·tr(H^H H R)) − ‖S‖_F)²`.
pub fn bounds_f(h: &CMatrix, x_bar: &CMatrix, s: &CMatrix, r: &CMatrix, l: usize) -> (f64, f64) {
    let upper = fro2(&(h * x_bar - s));
    let energy = (h.adjoint() * h * r).trace().re.max(0.0) * l as f64;
    let lower = (energy.sqrt() - fro(s)).powi(2);
    (upper, lower)
}

/// Optimal sensing-centric cost `f(H) = min_X ‖HX − S‖²_F` over `XX^H = LR`.
pub fn optimal_cost(h: &CMatrix, s: &CMatrix, f: &FactorF, l: usize) -> Result<f64> {
    let x = sensing_centric_optimal(h, s, f, l)?;
    Ok(fro2(&(h * x - s)))
}

/// `‖H*X̄ − S‖²_F − ‖H*X* − S‖²_F`.
pub fn gap_diagnostic(h_star: &CMatrix, x_bar: &CMatrix, x_star: &CMatrix, s: &CMatrix) -> f64 {
    fro2(&(h_star * x_bar - s)) - fro2(&(h_star * x_star - s))
}

/// Maximizer of `‖scale·H·X_eff − S‖²_F` over `‖H − H̄‖ ≤ θ`.
pub fn worst_case_channel(
    x_eff: &CMatrix,
    s: &CMatrix,
    h_bar: &CMatrix,
    scale: f64,
    theta: f64,
    norm: NormKind,
    opts: &QuadMaxOptions,
) -> Result<(CMatrix, crate::quadmax::QuadMaxTrace)> {
    let inst = build_quadmax_instance(x_eff, s, h_bar, scale)?;
    let problem = QuadMaxProblem::from_instance(&inst, theta, norm)?;
    let sol = problem.solve(opts)?;
    Ok((unstack_channel(&sol.h, h_bar.nrows(), h_bar.ncols()), sol.trace))
}

fn check_inputs(cfg: &SystemConfig, h_bar: &CMatrix, s: &CMatrix, theta: f64) -> Result<()> {
    cfg.validate()?;
    let (k, n, l) = (cfg.users, cfg.antennas, cfg.frame_length);
    if h_bar.shape() != (k, n) {
        return Err(dim_mismatch("robust design", format!("H̄: {k}x{n}"), shape(h_bar)));
    }
    if s.shape() != (k, l) {
        return Err(dim_mismatch("robust design", format!("S: {k}x{l}"), shape(s)));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(invalid("theta", format!("must be finite and nonnegative, got {theta}")));
    }
    Ok(())
}

fn check_covariance(cfg: &SystemConfig, r: &SpatialCovariance) -> Result<()> {
    if r.dim() != cfg.antennas {
        return Err(dim_mismatch("robust design", format!("R: {0}x{0}", cfg.antennas), shape(r.matrix())));
    }
    Ok(())
}

struct SensingCentricStage {
    f: FactorF,
    a_bar: CMatrix,
    x_bar: CMatrix,
    h_star: CMatrix,
    trace: crate::quadmax::QuadMaxTrace,
    theta_eff: f64,
}

fn sensing_centric_stage(
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    r: &SpatialCovariance,
    theta: f64,
    opts: &RobustOptions,
) -> Result<SensingCentricStage> {
    check_inputs(cfg, h_bar, s, theta)?;
    check_covariance(cfg, r)?;
    opts.validate()?;
    let f = factorize_r(r)?;
    let a_bar = sensing_centric_factor(h_bar, s, &f)?;
    let sqrt_l = cfg.l().sqrt();
    let x_eff = f.matrix() * &a_bar;
    let x_bar = &x_eff * real(sqrt_l);
    let theta_eff = opts.budget * theta;
    let qopts = QuadMaxOptions { seed: opts.seed, ..opts.quadmax };
    let (h_star, trace) = worst_case_channel(&x_eff, s, h_bar, sqrt_l, theta_eff, opts.norm, &qopts)?;
    Ok(SensingCentricStage { f, a_bar, x_bar, h_star, trace, theta_eff })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    method: Method,
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    x_bar: CMatrix,
    x_star: CMatrix,
    h_star: CMatrix,
    trace: &crate::quadmax::QuadMaxTrace,
    theta_eff: f64,
    cost: impl Fn(&CMatrix, &CMatrix) -> f64,
    rho: f64,
    remedy: (usize, bool, Option<f64>),
    feasibility_residual: f64,
    opts: &RobustOptions,
) -> Result<DesignResult> {
    let l_f = lipschitz_lf(cfg, h_bar, s, theta_eff, opts.norm);
    let f_upper_at_center = fro2(&(h_bar * &x_bar - s));
    let diagnostics = BoundReport {
        l_f,
        l_g: rho * l_f,
        f_upper_at_center,
        f_at_center: f_upper_at_center,
        f_upper_at_worst: fro2(&(&h_star * &x_bar - s)),
        gap: gap_diagnostic(&h_star, &x_bar, &x_star, s),
        theta_effective: theta_eff,
        quadmax_iterations: trace.iterations,
        quadmax_restarts: trace.restarts,
        quadmax_certified: trace.global_certified,
        quadmax_termination: trace.terminated_by,
        remedy_iterations: remedy.0,
        remedy_converged: remedy.1,
        remedy_svd_residual: remedy.2,
        distance_to_nominal: fro(&(&x_star - &x_bar)),
        feasibility_residual,
    };
    Ok(DesignResult {
        method,
        h_nominal: h_bar.clone(),
        cost_nominal: cost(h_bar, &x_bar),
        cost_robust: cost(&h_star, &x_star),
        aasr_nominal: aasr(h_bar, &x_bar, s, cfg.noise_watts)?,
        aasr_robust: aasr(&h_star, &x_star, s, cfg.noise_watts)?,
        x_nominal: x_bar,
        x_robust: x_star,
        h_worst: h_star,
        diagnostics,
    })
}

/// Worst-case channel by quadratic maximization, then the SVD-matching remedy:
/// `X* = √L·F·U*·I_{N×L}·V*^H`.
pub fn method1_sensing_centric(
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    r: &SpatialCovariance,
    theta: f64,
    opts: &RobustOptions,
) -> Result<DesignResult> {
    let st = sensing_centric_stage(cfg, h_bar, s, r, theta, opts)?;
    let (triple, rtrace) = remedy_svd_match(&st.h_star, &st.f, s, &st.a_bar, opts.alpha, &opts.remedy)?;
    let x_star = st.f.matrix() * triple.semi_unitary() * real(cfg.l().sqrt());
    let feas = check_power(&x_star, &PowerConstraint::Covariance(r.matrix().clone()), cfg.power_watts, 0.0).residual;
    let cost = |h: &CMatrix, x: &CMatrix| fro2(&(h * x - s));
    assemble(
        Method::M1,
        cfg,
        h_bar,
        s,
        st.x_bar,
        x_star,
        st.h_star,
        &st.trace,
        st.theta_eff,
        cost,
        1.0,
        (rtrace.iterations, rtrace.converged, Some(rtrace.svd_residual)),
        feas,
        opts,
    )
}

/// Worst-case channel by quadratic maximization, then the stacked closed-form
/// remedy.
pub fn method2_sensing_centric(
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    r: &SpatialCovariance,
    theta: f64,
    opts: &RobustOptions,
) -> Result<DesignResult> {
    let st = sensing_centric_stage(cfg, h_bar, s, r, theta, opts)?;
    let x_star = if st.theta_eff == 0.0 {
        // H* = H̄, so X̄ minimizes both remedy terms.
        st.x_bar.clone()
    } else {
        remedy_stacked(&st.h_star, &st.x_bar, &st.f, s, opts.alpha, cfg.frame_length)?
    };
    let feas = check_power(&x_star, &PowerConstraint::Covariance(r.matrix().clone()), cfg.power_watts, 0.0).residual;
    let cost = |h: &CMatrix, x: &CMatrix| fro2(&(h * x - s));
    assemble(
        Method::M2,
        cfg,
        h_bar,
        s,
        st.x_bar,
        x_star,
        st.h_star,
        &st.trace,
        st.theta_eff,
        cost,
        1.0,
        (0, true, None),
        feas,
        opts,
    )
}

/// Power constraint of the joint design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointConstraint {
    #[serde(rename = "TPC")]
    Total,
    #[serde(rename = "PAPC")]
    PerAntenna,
}

/// Nominal joint design at `H̄`.
pub fn nominal_joint(
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    xs: &CMatrix,
    rho: f64,
    constraint: JointConstraint,
    opts: &RobustOptions,
) -> Result<CMatrix> {
    match constraint {
        JointConstraint::Total => joint_tpc(h_bar, s, xs, rho, cfg.power_watts, cfg.frame_length),
        JointConstraint::PerAntenna => {
            Ok(joint_papc(h_bar, s, xs, rho, cfg.power_watts, cfg.frame_length, opts.papc)?.x)
        }
    }
}

/// Robust joint design: worst case of `‖HX̄ − S‖²_F` over the ball, then the
/// anchored re-design `min α·g(H*, X) + ‖X − X̄‖²_F`.
#[allow(clippy::too_many_arguments)]
pub fn method3_joint(
    cfg: &SystemConfig,
    h_bar: &CMatrix,
    s: &CMatrix,
    xs: &CMatrix,
    rho: f64,
    theta: f64,
    constraint: JointConstraint,
    opts: &RobustOptions,
) -> Result<DesignResult> {
    check_inputs(cfg, h_bar, s, theta)?;
    opts.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("rho", format!("must lie in [0, 1], got {rho}")));
    }
    if xs.shape() != (cfg.antennas, cfg.frame_length) {
        return Err(dim_mismatch("method3_joint", format!("X_s: {}x{}", cfg.antennas, cfg.frame_length), shape(xs)));
    }
    let x_bar = nominal_joint(cfg, h_bar, s, xs, rho, constraint, opts)?;
    let theta_eff = opts.budget * theta;
    let qopts = QuadMaxOptions { seed: opts.seed, ..opts.quadmax };
    let (h_star, trace) = worst_case_channel(&x_bar, s, h_bar, 1.0, theta_eff, opts.norm, &qopts)?;

    let (x_star, remedy) = if theta_eff == 0.0 {
        // H* = H̄ and X̄ minimizes both remedy terms.
        (x_bar.clone(), (0, true, None))
    } else {
        let n = cfg.antennas;
        let h_tilde = crate::linalg::vstack(&(&h_star * real(rho.sqrt())), &(CMatrix::identity(n, n) * real((1.0 - rho).sqrt())));
        let s_tilde = crate::linalg::vstack(&(s * real(rho.sqrt())), &(xs * real((1.0 - rho).sqrt())));
        let weight = opts.alpha / (opts.alpha + 1.0);
        match constraint {
            JointConstraint::Total => (
                joint_tpc(&h_tilde, &s_tilde, &x_bar, weight, cfg.power_watts, cfg.frame_length)?,
                (0, true, None),
            ),
            JointConstraint::PerAntenna => {
                let res = joint_papc(&h_tilde, &s_tilde, &x_bar, weight, cfg.power_watts, cfg.frame_length, opts.papc)?;
                (res.x, (res.iterations, res.converged, None))
            }
        }
    };
    let mode = match constraint {
        JointConstraint::Total => PowerConstraint::Total,
        JointConstraint::PerAntenna => PowerConstraint::PerAntenna,
    };
    let feas = check_power(&x_star, &mode, cfg.power_watts, 0.0).residual;
    let cost = |h: &CMatrix, x: &CMatrix| joint_objective(h, s, xs, rho, x);
    let method = match constraint {
        JointConstraint::Total => Method::M3Tpc,
        JointConstraint::PerAntenna => Method::M3Papc,
    };
    assemble(method, cfg, h_bar, s, x_bar, x_star, h_star, &trace, theta_eff, cost, rho, remedy, feas, opts)
}

/// Inputs shared by all methods.
#[derive(Debug, Clone)]
pub struct DesignInputs<'a> {
    pub cfg: &'a SystemConfig,
    pub h_bar: &'a CMatrix,
    pub s: &'a CMatrix,
    pub r: &'a SpatialCovariance,
    pub xs: &'a CMatrix,
    pub rho: f64,
}

pub fn run_method(method: Method, inputs: &DesignInputs<'_>, theta: f64, opts: &RobustOptions) -> Result<DesignResult> {
    let DesignInputs { cfg, h_bar, s, r, xs, rho } = inputs;
    match method {
        Method::M1 => method1_sensing_centric(cfg, h_bar, s, r, theta, opts),
        Method::M2 => method2_sensing_centric(cfg, h_bar, s, r, theta, opts),
        Method::M3Tpc => method3_joint(cfg, h_bar, s, xs, *rho, theta, JointConstraint::Total, opts),
        Method::M3Papc => method3_joint(cfg, h_bar, s, xs, *rho, theta, JointConstraint::PerAntenna, opts),
    }
}

/// Uniform sample from the ball `‖H − center‖ ≤ radius`.
pub fn sample_ball<R: Rng + ?Sized>(center: &CMatrix, radius: f64, norm: NormKind, rng: &mut R) -> CMatrix {
    let (k, n) = center.shape();
    match norm {
        NormKind::Frobenius => {
            let dim = 2 * k * n;
            let dir = CMatrix::from_fn(k, n, |_, _| {
                C64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
            });
            let u: f64 = rng.random();
            let rad = radius * u.powf(1.0 / dim as f64);
            let dn = fro(&dir);
            center + dir * real(rad / dn)
        }
        NormKind::EntryInfinity => CMatrix::from_fn(k, n, |i, j| {
            center[(i, j)] + C64::new(rng.random_range(-radius..=radius), rng.random_range(-radius..=radius))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use crate::model::{qpsk_constellation, UncertaintySet};
    use crate::nominal::{synth_covariance, synth_sensing_waveform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        cfg: SystemConfig,
        h_bar: CMatrix,
        s: CMatrix,
        r: SpatialCovariance,
        xs: CMatrix,
    }

    fn fixture(seed: u64, k: usize, n: usize, l: usize) -> Fixture {
        let cfg = SystemConfig { users: k, antennas: n, frame_length: l, ..SystemConfig::reference() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h_bar = complex_gaussian(&mut rng, k, n);
        let s = qpsk_constellation(k, l, 1.0, &mut rng);
        let r = synth_covariance(&[-30.0, 20.0], 0.6, n, cfg.power_watts).unwrap();
        let xs = synth_sensing_waveform(&r, l, seed).unwrap();
        Fixture { cfg, h_bar, s, r, xs }
    }

    #[test]
    fn lipschitz_constants() {
        let cfg = SystemConfig::reference();
        let z = CMatrix::zeros(4, 16);
        let s0 = CMatrix::zeros(4, 30);
        assert_eq!(lipschitz_lf(&cfg, &z, &s0, 0.0, NormKind::Frobenius), 0.0);
        let fx = fixture(1, 4, 16, 30);
        let lf = lipschitz_lf(&cfg, &fx.h_bar, &fx.s, 0.1, NormKind::Frobenius);
        let expect = 2.0 * 75.0 * (fro(&fx.h_bar) + 0.1) + 2.0 * 75f64.sqrt() * fro(&fx.s);
        assert!((lf - expect).abs() < 1e-9 * expect);
        let lg = lipschitz_lg(&cfg, &fx.h_bar, &fx.s, 0.1, NormKind::Frobenius, 0.25);
        assert_eq!(lg, 0.25 * lf);
    }

    #[test]
    fn zero_radius_reproduces_nominal() {
        let fx = fixture(3, 2, 4, 8);
        let opts = RobustOptions::default();
        for method in [Method::M1, Method::M2, Method::M3Tpc, Method::M3Papc] {
            let inputs = DesignInputs { cfg: &fx.cfg, h_bar: &fx.h_bar, s: &fx.s, r: &fx.r, xs: &fx.xs, rho: 0.25 };
            let res = run_method(method, &inputs, 0.0, &opts).unwrap();
            assert_eq!(res.h_worst, fx.h_bar, "{method}");
            let dx = fro(&(&res.x_robust - &res.x_nominal));
            assert!(dx <= 1e-10, "{method}: {dx}");
            assert!((res.cost_robust - res.cost_nominal).abs() <= 1e-9 * res.cost_nominal.max(1.0));
        }
    }

    #[test]
    fn worst_case_dominates_sampled_channels() {
        let fx = fixture(5, 2, 4, 8);
        let theta = 0.3;
        let res = method2_sensing_centric(&fx.cfg, &fx.h_bar, &fx.s, &fx.r, theta, &RobustOptions::default()).unwrap();
        let set = UncertaintySet::new(fx.h_bar.clone(), theta, 1.0, NormKind::Frobenius).unwrap();
        assert!(set.contains(&res.h_worst));
        let worst = fro2(&(&res.h_worst * &res.x_nominal - &fx.s));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let h0 = sample_ball(&fx.h_bar, theta, NormKind::Frobenius, &mut rng);
            assert!(set.contains(&h0));
            assert!(fro2(&(&h0 * &res.x_nominal - &fx.s)) <= worst * (1.0 + 1e-12));
        }
        assert!(res.aasr_robust <= res.aasr_nominal);
    }

    #[test]
    fn robust_waveforms_are_feasible() {
        let fx = fixture(6, 3, 6, 10);
        let opts = RobustOptions::default();
        for method in [Method::M1, Method::M2, Method::M3Tpc, Method::M3Papc] {
            let inputs = DesignInputs { cfg: &fx.cfg, h_bar: &fx.h_bar, s: &fx.s, r: &fx.r, xs: &fx.xs, rho: 0.5 };
            let res = run_method(method, &inputs, 0.2, &opts).unwrap();
            let tol = if method == Method::M3Papc { 1e-8 } else { 1e-9 };
            assert!(res.diagnostics.feasibility_residual <= tol, "{method}: {}", res.diagnostics.feasibility_residual);
            assert!(res.diagnostics.quadmax_certified, "{method}");
            assert!(res.diagnostics.gap <= 2.0 * res.diagnostics.l_f * 0.2 + 1e-9);
        }
    }

    #[test]
    fn bound_sandwich_on_samples() {
        let fx = fixture(8, 2, 4, 8);
        let theta = 0.25;
        let f = factorize_r(&fx.r).unwrap();
        let x_bar = sensing_centric_optimal(&fx.h_bar, &fx.s, &f, 8).unwrap();
        let lf = lipschitz_lf(&fx.cfg, &fx.h_bar, &fx.s, theta, NormKind::Frobenius);
        let (u0, _) = bounds_f(&fx.h_bar, &x_bar, &fx.s, fx.r.matrix(), 8);
        assert!((u0 - optimal_cost(&fx.h_bar, &fx.s, &f, 8).unwrap()).abs() <= 1e-9 * u0.max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let h = sample_ball(&fx.h_bar, theta, NormKind::Frobenius, &mut rng);
            let (up, lo) = bounds_f(&h, &x_bar, &fx.s, fx.r.matrix(), 8);
            let val = optimal_cost(&h, &fx.s, &f, 8).unwrap();
            assert!(lo - 1e-9 <= val && val <= up + 1e-9);
            assert!(up - val <= 2.0 * lf * theta);
        }
    }

    #[test]
    fn entry_infinity_norm_design() {
        let fx = fixture(10, 2, 4, 8);
        let opts = RobustOptions { norm: NormKind::EntryInfinity, ..Default::default() };
        let res = method2_sensing_centric(&fx.cfg, &fx.h_bar, &fx.s, &fx.r, 0.05, &opts).unwrap();
        let set = UncertaintySet::new(fx.h_bar.clone(), 0.05, 1.0, NormKind::EntryInfinity).unwrap();
        assert!(set.contains(&res.h_worst));
    }

    #[test]
    fn budget_shrinks_radius() {
        let fx = fixture(12, 2, 4, 8);
        let opts = RobustOptions { budget: 0.5, ..Default::default() };
        let res = method1_sensing_centric(&fx.cfg, &fx.h_bar, &fx.s, &fx.r, 0.4, &opts).unwrap();
        assert!((fro(&(&res.h_worst - &fx.h_bar)) - 0.2).abs() < 1e-12);
        assert_eq!(res.diagnostics.theta_effective, 0.2);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::M1, Method::M2, Method::M3Tpc, Method::M3Papc] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }
}
