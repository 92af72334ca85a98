//! Non-robust waveform designs and synthetic sensing targets.

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_mismatch, invalid, IsacError, Result};
use crate::linalg::{
    fro, fro2, hermitian_eigen, min_eigenvalue, polar_factor, pseudo_inverse, random_semi_unitary, real,
    rect_identity, shape, CMatrix, C64,
};
use crate::model::{steering_vector, SpatialCovariance};
use crate::secular::solve_secular;

/// Square-root factor `F` with `F·F^H = R`, lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorF {
    f: CMatrix,
}

impl FactorF {
    pub fn matrix(&self) -> &CMatrix {
        &self.f
    }
}

/// Cholesky factor of the covariance.
pub fn factorize_r(r: &SpatialCovariance) -> Result<FactorF> {
    factorize_matrix(r.matrix())
}

pub fn factorize_matrix(r: &CMatrix) -> Result<FactorF> {
    let lo = min_eigenvalue(r);
    if !(lo > 0.0) {
        return Err(IsacError::NotPositiveDefinite { min_eigenvalue: lo });
    }
    match Cholesky::new(r.clone()) {
        Some(ch) => Ok(FactorF { f: ch.l() }),
        None => Err(IsacError::NotPositiveDefinite { min_eigenvalue: lo }),
    }
}

/// `X_c = H̄^H (H̄ H̄^H)^{-1} S`, falling back to the pseudo-inverse when
/// `H̄ H̄^H` is singular.
pub fn zero_forcing(h_bar: &CMatrix, s: &CMatrix) -> Result<CMatrix> {
    if s.nrows() != h_bar.nrows() {
        return Err(dim_mismatch("zero_forcing", format!("S with {} rows", h_bar.nrows()), shape(s)));
    }
    let gram = h_bar * h_bar.adjoint();
    let (eigs, _) = hermitian_eigen(&gram);
    let well_posed = eigs[0] > 1e-12 * eigs[eigs.len() - 1];
    if well_posed {
        if let Some(ch) = Cholesky::new(gram) {
            return Ok(h_bar.adjoint() * ch.solve(s));
        }
    }
    log::warn!("zero_forcing: channel is rank deficient, using the pseudo-inverse");
    Ok(pseudo_inverse(h_bar) * s)
}

/// Unitary part `A = U·I_{N×L}·V^H` of the sensing-centric optimum, where
/// `U Σ V^H` is the SVD of `F^H H^H S`.
pub fn sensing_centric_factor(h: &CMatrix, s: &CMatrix, f: &FactorF) -> Result<CMatrix> {
    let n = f.f.nrows();
    if h.ncols() != n || s.nrows() != h.nrows() {
        return Err(dim_mismatch(
            "sensing_centric_optimal",
            format!("H: Kx{n}, S: K rows"),
            format!("H: {}, S: {}", shape(h), shape(s)),
        ));
    }
    if s.ncols() < n {
        return Err(invalid("frame_length", format!("must be >= antennas ({n}), got {}", s.ncols())));
    }
    let t = f.f.adjoint() * h.adjoint() * s;
    Ok(polar_factor(&t))
}

/// Minimizer of `‖HX − S‖²_F` over `X X^H = L·R`: `X = √L·F·U·I_{N×L}·V^H`.
pub fn sensing_centric_optimal(h: &CMatrix, s: &CMatrix, f: &FactorF, l: usize) -> Result<CMatrix> {
    let a = sensing_centric_factor(h, s, f)?;
    Ok(&f.f * a * real((l as f64).sqrt()))
}

/// `X_s = √L·F·Q` with `Q` a seeded random N×L matrix with orthonormal rows.
pub fn synth_sensing_waveform(r: &SpatialCovariance, l: usize, seed: u64) -> Result<CMatrix> {
    let f = factorize_r(r)?;
    let n = r.dim();
    if l < n {
        return Err(invalid("frame_length", format!("must be >= antennas ({n}), got {l}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_semi_unitary(&mut rng, n, l);
    Ok(f.f * q * real((l as f64).sqrt()))
}

/// `X_s = √L·F·I_{N×L}`.
pub fn canonical_sensing_waveform(r: &SpatialCovariance, l: usize) -> Result<CMatrix> {
    let f = factorize_r(r)?;
    let n = r.dim();
    if l < n {
        return Err(invalid("frame_length", format!("must be >= antennas ({n}), got {l}")));
    }
    Ok(f.f * rect_identity(n, l) * real((l as f64).sqrt()))
}

/// Mixture of steered beams toward `targets` and an omnidirectional floor,
/// normalized to `trace(R) = P_T`.
pub fn synth_covariance(targets_deg: &[f64], beam_weight: f64, antennas: usize, power: f64) -> Result<SpatialCovariance> {
    if !(0.0..1.0).contains(&beam_weight) {
        return Err(invalid("beam_weight", format!("must lie in [0, 1), got {beam_weight}")));
    }
    if antennas == 0 {
        return Err(invalid("antennas", "must be at least 1"));
    }
    if !(power > 0.0) {
        return Err(invalid("power_watts", format!("must be positive, got {power}")));
    }
    let nf = antennas as f64;
    let mut beams = CMatrix::zeros(antennas, antennas);
    for &phi in targets_deg {
        let a = steering_vector(antennas, phi);
        beams += &a * a.adjoint();
    }
    let weight = if targets_deg.is_empty() { 0.0 } else { beam_weight };
    let mix = beams * real(weight / nf) + CMatrix::identity(antennas, antennas) * real((1.0 - weight) / nf);
    let scale = power / mix.trace().re;
    let r = mix * real(scale);
    SpatialCovariance::new((&r + r.adjoint()) * real(0.5))
}

/// `ρ‖HX − S‖²_F + (1−ρ)‖X − X_s‖²_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointObjective {
    pub rho: f64,
    pub xs: CMatrix,
}

impl JointObjective {
    pub fn new(rho: f64, xs: CMatrix) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho, xs })
    }

    pub fn value(&self, h: &CMatrix, s: &CMatrix, x: &CMatrix) -> f64 {
        joint_objective(h, s, &self.xs, self.rho, x)
    }
}

pub fn joint_objective(h: &CMatrix, s: &CMatrix, xs: &CMatrix, rho: f64, x: &CMatrix) -> f64 {
    rho * fro2(&(h * x - s)) + (1.0 - rho) * fro2(&(x - xs))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("rho", format!("must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

fn check_joint_dims(h: &CMatrix, s: &CMatrix, xs: &CMatrix) -> Result<()> {
    if s.nrows() != h.nrows() || xs.nrows() != h.ncols() || xs.ncols() != s.ncols() {
        return Err(dim_mismatch(
            "joint design",
            "H: MxN, S: MxL, X_s: NxL",
            format!("H: {}, S: {}, X_s: {}", shape(h), shape(s), shape(xs)),
        ));
    }
    Ok(())
}

/// Normal-equation data `(ρH^H H + (1−ρ)I, ρH^H S + (1−ρ)X_s)`.
fn normal_equations(h: &CMatrix, s: &CMatrix, xs: &CMatrix, rho: f64) -> (CMatrix, CMatrix) {
    let n = h.ncols();
    let hh = h.adjoint();
    let a = &hh * h * real(rho) + CMatrix::identity(n, n) * real(1.0 - rho);
    let b = hh * s * real(rho) + xs * real(1.0 - rho);
    (a, b)
}

/// Minimizer of the joint objective over `‖X‖²_F = L·P_T` via the secular
/// equation of the stationarity system `(A + μI)X = B`.
pub fn joint_tpc(h: &CMatrix, s: &CMatrix, xs: &CMatrix, rho: f64, power: f64, l: usize) -> Result<CMatrix> {
    check_rho(rho)?;
    check_joint_dims(h, s, xs)?;
    if !(power > 0.0) {
        return Err(invalid("power_watts", format!("must be positive, got {power}")));
    }
    let (a, b) = normal_equations(h, s, xs, rho);
    let (lambda, q) = hermitian_eigen(&a);
    let bt = q.adjoint() * &b;
    let weights: Vec<f64> = bt.row_iter().map(|row| row.iter().map(|z| z.norm_sqr()).sum()).collect();
    let radius = (l as f64 * power).sqrt();
    let root = solve_secular(lambda.as_slice(), &weights, radius)?;
    let mut xt = CMatrix::zeros(bt.nrows(), bt.ncols());
    let a_min = lambda[0];
    let scale = lambda.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for i in 0..bt.nrows() {
        let denom = lambda[i] + root.mu;
        if root.hard_case && lambda[i] <= a_min + 1e-12 * scale {
            continue;
        }
        xt.set_row(i, &(bt.row(i) / real(denom)));
    }
    if root.hard_case {
        let tau2 = (radius * radius - fro2(&xt)).max(0.0);
        xt[(0, 0)] += C64::new(tau2.sqrt(), 0.0);
    }
    Ok(q * xt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PapcOptions {
    pub max_iter: usize,
    pub stall_tol: f64,
}

impl Default for PapcOptions {
    fn default() -> Self {
        Self { max_iter: 500, stall_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct PapcResult {
    pub x: CMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
}

/// Scales every row of `x` to squared norm `target` (zero rows become
/// constant-modulus rows).
pub fn project_rows(x: &CMatrix, target: f64) -> CMatrix {
    let mut out = x.clone();
    let l = x.ncols() as f64;
    for mut row in out.row_iter_mut() {
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.scale_mut(target.sqrt() / norm);
        } else {
            row.fill(real((target / l).sqrt()));
        }
    }
    out
}

/// Block-coordinate descent on the joint objective under per-antenna power:
/// each row is minimized exactly with all other rows fixed.
pub fn joint_papc(
    h: &CMatrix,
    s: &CMatrix,
    xs: &CMatrix,
    rho: f64,
    power: f64,
    l: usize,
    opts: PapcOptions,
) -> Result<PapcResult> {
    check_rho(rho)?;
    check_joint_dims(h, s, xs)?;
    if !(power > 0.0) {
        return Err(invalid("power_watts", format!("must be positive, got {power}")));
    }
    let n = h.ncols();
    let target = l as f64 * power / n as f64;
    let (a, b) = normal_equations(h, s, xs, rho);
    let objective = |x: &CMatrix| joint_objective(h, s, xs, rho, x);

    let candidates = [xs.clone(), pseudo_inverse(&a) * &b, pseudo_inverse(h) * s];
    let mut x = candidates
        .iter()
        .map(|c| project_rows(c, target))
        .min_by(|p, q| objective(p).total_cmp(&objective(q)))
        .expect("non-empty candidates");
    let mut ax = &a * &x;
    let mut trace = vec![objective(&x)];
    let mut converged = false;
    let mut iterations = 0;
    let sqrt_target = target.sqrt();
    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            let xi = x.row(i).into_owned();
            let g = b.row(i) - ax.row(i) + xi.clone() * a[(i, i)];
            let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if gn == 0.0 {
                continue;
            }
            let new_row = g * real(sqrt_target / gn);
            let delta = &new_row - xi;
            ax += a.column(i) * delta;
            x.set_row(i, &new_row);
        }
        let f = objective(&x);
        let prev = *trace.last().expect("trace is non-empty");
        trace.push(f);
        if (prev - f).abs() <= opts.stall_tol * prev.abs().max(1.0) {
            converged = true;
            break;
        }
        // Refresh the cached product against drift.
        if iterations % 50 == 0 {
            ax = &a * &x;
        }
    }
    Ok(PapcResult { x, converged, iterations, objective_trace: trace })
}

/// Relative covariance residual `‖X X^H − L R‖_F / ‖L R‖_F`.
pub fn covariance_residual(x: &CMatrix, r: &CMatrix) -> f64 {
    let target = r * real(x.ncols() as f64);
    fro(&(x * x.adjoint() - &target)) / fro(&target)
}
