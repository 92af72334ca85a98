//! Remedy problems that keep the robust waveform close to the nominal one.
//!
//! [`remedy_svd_match`] alternates exact minimizations over `U`, `V` and `Σ`
//! of `ψ = α‖UΣV^H − T‖²_F + ‖U I_{N×L} V^H − Ā‖²_F` with
//! `T = F^H H*^H S`. [`remedy_stacked`] solves the stacked least-squares
//! variant in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::{fro2, full_svd, hstack, polar_factor, real, rect_identity, shape, thin_svd, vstack, CMatrix, RVector};
use crate::nominal::{sensing_centric_optimal, FactorF};

/// `U Σ V^H` with square unitary `U` (N×N), `V` (L×L) and the diagonal of the
/// N×L matrix `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: CMatrix,
    pub sigma: RVector,
    pub v: CMatrix,
}

impl SvdTriple {
    pub fn sigma_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.u.ncols(), self.v.ncols());
        for (i, &s) in self.sigma.iter().enumerate() {
            m[(i, i)] = real(s);
        }
        m
    }

    pub fn product(&self) -> CMatrix {
        &self.u * self.sigma_matrix() * self.v.adjoint()
    }

    /// `U·I_{N×L}·V^H`.
    pub fn semi_unitary(&self) -> CMatrix {
        let n = self.u.ncols();
        &self.u * self.v.columns(0, n).adjoint()
    }

    /// Largest of `‖UU^H − I‖_F` and `‖VV^H − I‖_F`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.u.nrows();
        let l = self.v.nrows();
        let eu = fro2(&(&self.u * self.u.adjoint() - CMatrix::identity(n, n))).sqrt();
        let ev = fro2(&(&self.v * self.v.adjoint() - CMatrix::identity(l, l))).sqrt();
        eu.max(ev)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemedyTrace {
    /// Objective `ψ` at the initial point and after every iteration.
    pub psi: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `‖UΣV^H − F^H H*^H S‖_F` at the returned triple.
    pub svd_residual: f64,
}

/// How the diagonal factor is recovered from `U^H T V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaProjection {
    /// Keep `max(0, Re m_ii)` and zero the rest: the exact projection.
    #[default]
    Clip,
    /// Use the singular values of the argument.
    SingularValues,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemedyOptions {
    pub max_iter: usize,
    pub stall_tol: f64,
    pub projection: SigmaProjection,
}

impl Default for RemedyOptions {
    fn default() -> Self {
        Self { max_iter: 200, stall_tol: 1e-10, projection: SigmaProjection::Clip }
    }
}

/// Unitary `U` minimizing `‖U·A − B‖_F`: the polar factor of `B·A^H`.
pub fn procrustes(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(dim_mismatch("procrustes", format!("B with {} columns", a.ncols()), shape(b)));
    }
    Ok(polar_factor(&(b * a.adjoint())))
}

/// Diagonal of the projection of `m` onto nonnegative real diagonal matrices.
pub fn project_sigma(m: &CMatrix, how: SigmaProjection) -> RVector {
    let r = m.nrows().min(m.ncols());
    match how {
        SigmaProjection::Clip => RVector::from_fn(r, |i, _| m[(i, i)].re.max(0.0)),
        SigmaProjection::SingularValues => thin_svd(m).1,
    }
}

fn psi(alpha: f64, triple: &SvdTriple, t: &CMatrix, a_bar: &CMatrix) -> f64 {
    alpha * fro2(&(triple.product() - t)) + fro2(&(triple.semi_unitary() - a_bar))
}

/// Alternating minimization of `ψ` started from an exact SVD of
/// `F^H H*^H S`.
pub fn remedy_svd_match(
    h_star: &CMatrix,
    f: &FactorF,
    s: &CMatrix,
    a_bar: &CMatrix,
    alpha: f64,
    opts: &RemedyOptions,
) -> Result<(SvdTriple, RemedyTrace)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be finite and nonnegative, got {alpha}")));
    }
    let fm = f.matrix();
    let n = fm.nrows();
    let l = s.ncols();
    if h_star.ncols() != n || s.nrows() != h_star.nrows() || a_bar.shape() != (n, l) {
        return Err(dim_mismatch(
            "remedy_svd_match",
            format!("H*: Kx{n}, S: KxL, Ā: {n}xL"),
            format!("H*: {}, S: {}, Ā: {}", shape(h_star), shape(s), shape(a_bar)),
        ));
    }
    if l < n {
        return Err(invalid("frame_length", format!("must be >= antennas ({n}), got {l}")));
    }
    let t = fm.adjoint() * h_star.adjoint() * s;
    let (u, sig, v) = full_svd(&t);
    let mut triple = SvdTriple { u, sigma: sig, v };
    let mut trace = vec![psi(alpha, &triple, &t, a_bar)];
    let i_nl = rect_identity(n, l);
    let sqrt_alpha = real(alpha.sqrt());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let sigma = triple.sigma_matrix();
        // U-step: ‖U [I V^H, √α Σ V^H] − [Ā, √α T]‖.
        let vh = triple.v.adjoint();
        let a1 = hstack(&(&i_nl * &vh), &(&sigma * &vh * sqrt_alpha));
        let b1 = hstack(a_bar, &(&t * sqrt_alpha));
        triple.u = procrustes(&a1, &b1)?;
        // V-step: ‖V [I^H U^H, √α Σ^H U^H] − [Ā^H, √α T^H]‖.
        let uh = triple.u.adjoint();
        let a2 = hstack(&(i_nl.adjoint() * &uh), &(sigma.adjoint() * &uh * sqrt_alpha));
        let b2 = hstack(&a_bar.adjoint(), &(t.adjoint() * sqrt_alpha));
        triple.v = procrustes(&a2, &b2)?;
        // Σ-step.
        triple.sigma = project_sigma(&(triple.u.adjoint() * &t * &triple.v), opts.projection);
        let value = psi(alpha, &triple, &t, a_bar);
        let prev = *trace.last().expect("non-empty");
        trace.push(value);
        if (prev - value).abs() <= opts.stall_tol {
            converged = true;
            break;
        }
    }
    let svd_residual = fro2(&(triple.product() - &t)).sqrt();
    Ok((triple, RemedyTrace { psi: trace, converged, iterations, svd_residual }))
}

/// Closed-form minimizer of `α‖H*X − S‖²_F + ‖X − X̄‖²_F` over
/// `X X^H = L·R`, via the stacked channel `[√α H*; I_N]` and symbols
/// `[√α S; X̄]`.
pub fn remedy_stacked(
    h_star: &CMatrix,
    x_bar: &CMatrix,
    f: &FactorF,
    s: &CMatrix,
    alpha: f64,
    l: usize,
) -> Result<CMatrix> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be finite and nonnegative, got {alpha}")));
    }
    let n = f.matrix().nrows();
    if x_bar.nrows() != n || x_bar.ncols() != s.ncols() {
        return Err(dim_mismatch("remedy_stacked", format!("X̄: {n}x{}", s.ncols()), shape(x_bar)));
    }
    let sa = real(alpha.sqrt());
    let h_tilde = vstack(&(h_star * sa), &CMatrix::identity(n, n));
    let s_tilde = vstack(&(s * sa), x_bar);
    sensing_centric_optimal(&h_tilde, &s_tilde, f, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, random_semi_unitary, random_unitary, C64};
    use crate::model::qpsk_constellation;
    use crate::nominal::{covariance_residual, factorize_matrix, sensing_centric_factor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64, k: usize, n: usize, l: usize) -> (CMatrix, FactorF, CMatrix, CMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = complex_gaussian(&mut rng, n, n + 1);
        let r = &g * g.adjoint() + CMatrix::identity(n, n) * real(0.2);
        let r = (&r + r.adjoint()) * real(0.5 / r.trace().re);
        let f = factorize_matrix(&r).unwrap();
        let h = complex_gaussian(&mut rng, k, n);
        let s = qpsk_constellation(k, l, 1.0, &mut rng);
        (h, f, s, r)
    }

    #[test]
    fn procrustes_scalar_phase() {
        let a = CMatrix::from_element(1, 1, real(1.0));
        let b = CMatrix::from_element(1, 1, C64::from_polar(1.0, 0.8));
        let u = procrustes(&a, &b).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.8)).norm() < 1e-14);
    }

    #[test]
    fn procrustes_beats_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = complex_gaussian(&mut rng, 3, 5);
        let b = complex_gaussian(&mut rng, 3, 5);
        let u = procrustes(&a, &b).unwrap();
        assert!(fro2(&(&u * u.adjoint() - CMatrix::identity(3, 3))).sqrt() < 1e-10);
        let best = fro2(&(&u * &a - &b));
        for _ in 0..10_000 {
            let q = random_unitary(&mut rng, 3);
            assert!(best <= fro2(&(q * &a - &b)) + 1e-12);
        }
        let same = procrustes(&a, &a).unwrap();
        assert!(fro2(&(same * &a - &a)) < 1e-20);
    }

    #[test]
    fn sigma_projection() {
        let m = CMatrix::from_row_slice(2, 3, &[real(2.0), real(5.0), real(1.0), real(0.0), real(0.5), real(3.0)]);
        assert_eq!(project_sigma(&m, SigmaProjection::Clip).as_slice(), &[2.0, 0.5]);
        let neg = CMatrix::identity(3, 3) * real(-1.0);
        assert_eq!(project_sigma(&neg, SigmaProjection::Clip).as_slice(), &[0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = complex_gaussian(&mut rng, 3, 4);
        let sig = project_sigma(&m, SigmaProjection::Clip);
        let triple = SvdTriple { u: CMatrix::identity(3, 3), sigma: sig, v: CMatrix::identity(4, 4) };
        let best = fro2(&(&m - triple.sigma_matrix()));
        for _ in 0..10_000 {
            let d = RVector::from_fn(3, |_, _| rand::Rng::random_range(&mut rng, 0.0..2.0));
            let other = SvdTriple { sigma: d, ..triple.clone() };
            assert!(best <= fro2(&(&m - other.sigma_matrix())) + 1e-14);
        }
    }

    #[test]
    fn svd_match_is_monotone_and_unitary() {
        for seed in 0..10 {
            let (h, f, s, _) = setup(seed, 2, 4, 8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let a_bar = random_semi_unitary(&mut rng, 4, 8);
            let (triple, trace) = remedy_svd_match(&h, &f, &s, &a_bar, 1e4, &RemedyOptions::default()).unwrap();
            assert!(triple.unitarity_error() < 1e-10);
            for w in trace.psi.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{} -> {}", w[0], w[1]);
            }
            assert!(trace.converged, "{} iterations", trace.iterations);
        }
    }

    #[test]
    fn svd_match_attains_zero_without_fit_term() {
        let (h, f, s, _) = setup(7, 2, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let a_bar = random_unitary(&mut rng, 3) * rect_identity(3, 5) * random_unitary(&mut rng, 5);
        let (triple, trace) = remedy_svd_match(&h, &f, &s, &a_bar, 0.0, &RemedyOptions::default()).unwrap();
        assert!(fro2(&(triple.semi_unitary() - &a_bar)) < 1e-20);
        assert!(*trace.psi.last().unwrap() < 1e-20);
    }

    #[test]
    fn svd_match_at_nominal_channel_recovers_nominal_factor() {
        let (h, f, s, _) = setup(9, 2, 4, 8);
        let a_bar = sensing_centric_factor(&h, &s, &f).unwrap();
        let (triple, _) = remedy_svd_match(&h, &f, &s, &a_bar, 1e4, &RemedyOptions::default()).unwrap();
        assert!(fro2(&(triple.semi_unitary() - &a_bar)).sqrt() < 1e-10);
    }

    #[test]
    fn stacked_remedy_properties() {
        let (h, f, s, r) = setup(11, 2, 4, 8);
        let x_bar = sensing_centric_optimal(&h, &s, &f, 8).unwrap();
        let x = remedy_stacked(&h, &x_bar, &f, &s, 1e4, 8).unwrap();
        assert!(fro2(&(&x - &x_bar)).sqrt() < 1e-10 * fro2(&x_bar).sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h_star = &h + complex_gaussian(&mut rng, 2, 4) * real(0.1);
        let alpha = 3.0;
        let x = remedy_stacked(&h_star, &x_bar, &f, &s, alpha, 8).unwrap();
        assert!(covariance_residual(&x, &r) <= 1e-9);
        let obj = |x: &CMatrix| alpha * fro2(&(&h_star * x - &s)) + fro2(&(x - &x_bar));
        let best = obj(&x);
        for _ in 0..1000 {
            let q = random_semi_unitary(&mut rng, 4, 8);
            let xr = f.matrix() * q * real(8f64.sqrt());
            assert!(best <= obj(&xr) + 1e-9);
        }
    }
}
