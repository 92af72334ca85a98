//! Maximization of a positive-definite quadratic `p(h) = ‖C·h − s‖²` over a
//! norm ball `‖h − h̄‖ ≤ θ`.
//!
//! The ascent alternates two closed-form steps: `y` maximizes the linearized
//! objective over the current level set of `p`, then `h` maximizes the
//! linearization at `y` over the ball. On top of the ascent a global check is
//! run (trust-region characterization for the 2-norm, vertex enumeration for
//! small boxes); if it finds a better point the ascent is restarted from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::complexify::QuadMaxInstance;
use crate::error::{dim_mismatch, invalid, IsacError, Result};
use crate::linalg::{symmetric_eigen, RMatrix, RVector};
use crate::model::NormKind;
use crate::secular::solve_secular;

/// Largest box dimension for which all vertices are enumerated.
pub const MAX_ENUMERATION_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMaxOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Run the global check after the ascent.
    pub certify: bool,
}

impl Default for QuadMaxOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-10, seed: 0, certify: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `⟨A·y − b, h − y⟩ ≤ tol`.
    OptimalityCondition,
    /// The last step did not increase the objective in floating point.
    Stalled,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct QuadMaxTrace {
    /// Accepted iterates and their objectives, strictly increasing.
    pub iterates: Vec<(RVector, f64)>,
    pub terminated_by: Termination,
    /// Ascent steps taken, over all restarts.
    pub iterations: usize,
    /// Final value of `⟨A·y − b, h − y⟩`.
    pub certificate: f64,
    /// The global check confirmed the returned point.
    pub global_certified: bool,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct QuadMaxSolution {
    pub h: RVector,
    pub objective: f64,
    pub trace: QuadMaxTrace,
}

/// Ball-constrained quadratic maximization problem with cached factorizations.
#[derive(Debug, Clone)]
pub struct QuadMaxProblem {
    c: RMatrix,
    s: RVector,
    h_bar: RVector,
    theta: f64,
    norm: NormKind,
    a: RMatrix,
    b: RVector,
    /// `None` when `CᵀC` is singular.
    level: Option<LevelFactor>,
}

#[derive(Debug, Clone)]
struct LevelFactor {
    /// `A = L Lᵀ`.
    lc: RMatrix,
    /// `L⁻¹b`.
    w: RVector,
    /// `bᵀA⁻¹b − sᵀs`.
    offset: f64,
}

/// Eigenvalue ratio below which `CᵀC` is treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

impl QuadMaxProblem {
    pub fn new(c: RMatrix, s: RVector, h_bar: RVector, theta: f64, norm: NormKind) -> Result<Self> {
        if c.nrows() != s.len() || c.ncols() != h_bar.len() {
            return Err(dim_mismatch(
                "QuadMaxProblem",
                format!("C: {}x{}", s.len(), h_bar.len()),
                format!("C: {}x{}", c.nrows(), c.ncols()),
            ));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid("theta", format!("must be finite and nonnegative, got {theta}")));
        }
        let a = c.transpose() * &c;
        let b = c.transpose() * &s;
        let (vals, _) = symmetric_eigen(&a);
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        let level = if lo > SINGULAR_RATIO * hi {
            nalgebra::Cholesky::new(a.clone()).map(|chol| {
                let lc = chol.l();
                let w = lc.solve_lower_triangular(&b).expect("Cholesky factor is invertible");
                let offset = w.norm_squared() - s.norm_squared();
                LevelFactor { lc, w, offset }
            })
        } else {
            None
        };
        if level.is_none() {
            log::debug!("singular Gram matrix (eigenvalues {lo:.3e}..{hi:.3e}); level-set step falls back to h_prev");
        }
        Ok(Self { c, s, h_bar, theta, norm, a, b, level })
    }

    pub fn from_instance(inst: &QuadMaxInstance, theta: f64, norm: NormKind) -> Result<Self> {
        Self::new(
            inst.c.as_matrix().clone(),
            inst.s.as_vector().clone(),
            inst.h_bar.as_vector().clone(),
            theta,
            norm,
        )
    }

    pub fn dim(&self) -> usize {
        self.h_bar.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn center(&self) -> &RVector {
        &self.h_bar
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    /// `CᵀC`.
    pub fn gram(&self) -> &RMatrix {
        &self.a
    }

    /// `Cᵀs`.
    pub fn linear_term(&self) -> &RVector {
        &self.b
    }

    pub fn objective(&self, h: &RVector) -> f64 {
        (&self.c * h - &self.s).norm_squared()
    }

    /// Half-gradient `CᵀC·h − Cᵀs`.
    pub fn half_gradient(&self, h: &RVector) -> RVector {
        &self.a * h - &self.b
    }

    pub fn ball_distance(&self, h: &RVector) -> f64 {
        let d = h - &self.h_bar;
        match self.norm {
            NormKind::Frobenius => d.norm(),
            NormKind::EntryInfinity => d.amax(),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.level.is_none()
    }

    /// `(CᵀC)⁻¹Cᵀs`, the point excluded from initialization (minimum-norm
    /// least-squares solution when `CᵀC` is singular).
    pub fn unconstrained_minimizer(&self) -> RVector {
        match &self.level {
            Some(f) => {
                let t = f.lc.solve_lower_triangular(&self.b).expect("invertible");
                f.lc.transpose().solve_upper_triangular(&t).expect("invertible")
            }
            None => self.c.clone().svd(true, true).solve(&self.s, 1e-12).expect("SVD computed with U and V"),
        }
    }

    /// Maximizer of `⟨CᵀC·h_prev − Cᵀs, y⟩` over `{y : p(y) = p(h_prev)}`.
    ///
    /// With a singular `CᵀC` the maximizer is not unique; `h_prev` itself is
    /// one, since the sublevel set is convex and the gradient supports it.
    pub fn subproblem_y(&self, h_prev: &RVector) -> Result<RVector> {
        let g = self.half_gradient(h_prev);
        let Some(f) = &self.level else {
            if self.is_excluded(h_prev) {
                return Err(IsacError::DegenerateDirection("gradient vanishes at h_prev".into()));
            }
            return Ok(h_prev.clone());
        };
        let z = f.lc.solve_lower_triangular(&g).expect("invertible");
        let zn = z.norm();
        let scale = f.w.norm() + (f.lc.transpose() * h_prev).norm();
        if !(zn > 1e-14 * scale) || !zn.is_finite() {
            return Err(IsacError::DegenerateDirection("level-set direction vanishes at the unconstrained minimizer".into()));
        }
        let gamma = (self.objective(h_prev) + f.offset).max(0.0).sqrt();
        let rhs = &f.w + z * (gamma / zn);
        Ok(f.lc.transpose().solve_upper_triangular(&rhs).expect("invertible"))
    }

    /// Maximizer of `⟨CᵀC·y − Cᵀs, h⟩` over the ball.
    pub fn subproblem_h(&self, y: &RVector) -> Result<RVector> {
        let d = self.half_gradient(y);
        self.ball_maximizer(&d)
    }

    fn ball_maximizer(&self, d: &RVector) -> Result<RVector> {
        if self.theta == 0.0 {
            return Ok(self.h_bar.clone());
        }
        match self.norm {
            NormKind::Frobenius => {
                let dn = d.norm();
                if !(dn > 0.0) || !dn.is_finite() {
                    return Err(IsacError::DegenerateDirection("ascent direction is zero".into()));
                }
                Ok(&self.h_bar + d * (self.theta / dn))
            }
            NormKind::EntryInfinity => {
                if d.iter().all(|&v| v == 0.0) {
                    return Err(IsacError::DegenerateDirection("ascent direction is zero".into()));
                }
                Ok(&self.h_bar + d.map(|v| if v >= 0.0 { self.theta } else { -self.theta }))
            }
        }
    }

    fn random_boundary_point(&self, rng: &mut ChaCha8Rng) -> RVector {
        let u = RVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        self.ball_maximizer(&u).unwrap_or_else(|_| self.h_bar.clone())
    }

    fn is_excluded(&self, h: &RVector) -> bool {
        let g = self.half_gradient(h);
        g.norm() <= 1e-13 * (self.b.norm() + self.a.norm() * h.norm()).max(f64::MIN_POSITIVE)
    }

    pub fn solve(&self, opts: &QuadMaxOptions) -> Result<QuadMaxSolution> {
        if self.theta == 0.0 {
            let p = self.objective(&self.h_bar);
            return Ok(QuadMaxSolution {
                h: self.h_bar.clone(),
                objective: p,
                trace: QuadMaxTrace {
                    iterates: vec![(self.h_bar.clone(), p)],
                    terminated_by: Termination::OptimalityCondition,
                    iterations: 0,
                    certificate: 0.0,
                    global_certified: true,
                    restarts: 0,
                },
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut h0 = self.random_boundary_point(&mut rng);
        let mut draws = 1;
        while self.is_excluded(&h0) {
            if draws >= 8 {
                return Err(IsacError::DegenerateDirection("could not draw an admissible starting point".into()));
            }
            h0 = self.random_boundary_point(&mut rng);
            draws += 1;
        }
        let mut trace = QuadMaxTrace {
            iterates: vec![(h0.clone(), self.objective(&h0))],
            terminated_by: Termination::IterationCap,
            iterations: 0,
            certificate: f64::INFINITY,
            global_certified: false,
            restarts: 0,
        };
        self.ascend(opts, &mut trace, &mut rng)?;
        if opts.certify {
            if let Some(better) = self.global_check(&mut trace)? {
                trace.restarts += 1;
                let p = self.objective(&better);
                trace.iterates.push((better, p));
                self.ascend(opts, &mut trace, &mut rng)?;
                trace.global_certified = true;
            }
        }
        let (h, objective) = trace.iterates.last().cloned().expect("at least one iterate");
        Ok(QuadMaxSolution { h, objective, trace })
    }

    fn ascend(&self, opts: &QuadMaxOptions, trace: &mut QuadMaxTrace, rng: &mut ChaCha8Rng) -> Result<()> {
        let mut retried = false;
        let budget = trace.iterations + opts.max_iter;
        trace.terminated_by = Termination::IterationCap;
        while trace.iterations < budget {
            let (h_prev, p_prev) = trace.iterates.last().cloned().expect("at least one iterate");
            let step = self.subproblem_y(&h_prev).and_then(|y| {
                let h = self.subproblem_h(&y)?;
                Ok((y, h))
            });
            let (y, h) = match step {
                Ok(v) => v,
                Err(IsacError::DegenerateDirection(msg)) => {
                    if retried {
                        return Err(IsacError::DegenerateDirection(msg));
                    }
                    retried = true;
                    let restart = self.random_boundary_point(rng);
                    let p = self.objective(&restart);
                    if p > p_prev {
                        trace.iterates.push((restart, p));
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            trace.iterations += 1;
            let d = self.half_gradient(&y);
            let cert = d.dot(&(&h - &y));
            trace.certificate = cert;
            let p = self.objective(&h);
            if p > p_prev {
                trace.iterates.push((h, p));
            }
            if cert <= opts.tol {
                trace.terminated_by = Termination::OptimalityCondition;
                return Ok(());
            }
            if p <= p_prev {
                trace.terminated_by = Termination::Stalled;
                return Ok(());
            }
        }
        Ok(())
    }

    /// Returns a strictly better point when the current one is not globally
    /// optimal; marks the trace certified when it is.
    fn global_check(&self, trace: &mut QuadMaxTrace) -> Result<Option<RVector>> {
        let (h, p) = trace.iterates.last().cloned().expect("at least one iterate");
        let slack = 1e-13 * p.abs().max(1.0);
        match self.norm {
            NormKind::Frobenius => {
                let (vals, vecs) = symmetric_eigen(&self.a);
                let a_max = vals[vals.len() - 1];
                let g = self.half_gradient(&h);
                let lambda = g.norm() / self.theta;
                let aligned = (&h - &self.h_bar - &g * (self.theta / g.norm())).norm() <= 1e-8 * self.theta;
                if aligned && lambda >= a_max * (1.0 - 1e-8) {
                    trace.global_certified = true;
                    return Ok(None);
                }
                let best = self.trust_region_maximizer(&vals, &vecs)?;
                if self.objective(&best) > p + slack {
                    Ok(Some(best))
                } else {
                    trace.global_certified = true;
                    Ok(None)
                }
            }
            NormKind::EntryInfinity => {
                if self.dim() > MAX_ENUMERATION_DIM {
                    return Ok(None);
                }
                let best = self.best_vertex();
                if self.objective(&best) > p + slack {
                    Ok(Some(best))
                } else {
                    trace.global_certified = true;
                    Ok(None)
                }
            }
        }
    }

    /// Global maximizer over the 2-norm sphere: `d = (μI − A)⁻¹ r` with
    /// `r = A·h̄ − b` and `μ ≥ λ_max(A)` solving `‖d‖ = θ`.
    fn trust_region_maximizer(&self, vals: &RVector, vecs: &RMatrix) -> Result<RVector> {
        let n = vals.len();
        let r = self.half_gradient(&self.h_bar);
        let rt = vecs.transpose() * r;
        // Reverse order so the negated eigenvalues are ascending.
        let neg: Vec<f64> = (0..n).rev().map(|i| -vals[i]).collect();
        let weights: Vec<f64> = (0..n).rev().map(|i| rt[i] * rt[i]).collect();
        let root = solve_secular(&neg, &weights, self.theta)?;
        let a_max = vals[n - 1];
        let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let mut dt = RVector::zeros(n);
        for i in 0..n {
            if root.hard_case && vals[i] >= a_max - 1e-12 * scale {
                continue;
            }
            dt[i] = rt[i] / (root.mu - vals[i]);
        }
        if root.hard_case {
            let tau = (self.theta * self.theta - dt.norm_squared()).max(0.0).sqrt();
            dt[n - 1] += tau;
        }
        Ok(&self.h_bar + vecs * dt)
    }

    fn best_vertex(&self) -> RVector {
        let n = self.dim();
        let mut best = self.h_bar.clone();
        let mut best_p = f64::NEG_INFINITY;
        let mut v = self.h_bar.add_scalar(-self.theta);
        for mask in 0u32..(1u32 << n) {
            for i in 0..n {
                v[i] = self.h_bar[i] + if mask >> i & 1 == 1 { self.theta } else { -self.theta };
            }
            let p = self.objective(&v);
            if p > best_p {
                best_p = p;
                best.copy_from(&v);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_problem(seed: u64, rows: usize, dim: usize, theta: f64, norm: NormKind) -> QuadMaxProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = RMatrix::from_fn(rows, dim, |_, _| StandardNormal.sample(&mut rng));
        let s = RVector::from_fn(rows, |_, _| StandardNormal.sample(&mut rng));
        let h = RVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        QuadMaxProblem::new(c, s, h, theta, norm).unwrap()
    }

    #[test]
    fn zero_radius_returns_center() {
        let p = random_problem(1, 6, 4, 0.0, NormKind::Frobenius);
        let sol = p.solve(&QuadMaxOptions::default()).unwrap();
        assert_eq!(&sol.h, p.center());
        assert_eq!(sol.trace.iterations, 0);
    }

    #[test]
    fn scalar_endpoint() {
        let p = QuadMaxProblem::new(
            RMatrix::from_element(1, 1, 1.0),
            RVector::from_element(1, 0.0),
            RVector::from_element(1, 1.0),
            0.5,
            NormKind::Frobenius,
        )
        .unwrap();
        let sol = p.solve(&QuadMaxOptions::default()).unwrap();
        assert!((sol.h[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn singular_gram() {
        let c = RMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let p = QuadMaxProblem::new(c, RVector::zeros(1), RVector::zeros(2), 1.0, NormKind::Frobenius).unwrap();
        assert!(p.is_singular());
        let sol = p.solve(&QuadMaxOptions::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12, "{}", sol.objective);
        let h = RVector::from_vec(vec![0.3, -0.1]);
        assert_eq!(p.subproblem_y(&h).unwrap(), h);
        assert!(p.unconstrained_minimizer().norm() < 1e-15);
    }

    #[test]
    fn level_set_step_properties() {
        let p = random_problem(3, 8, 5, 0.7, NormKind::Frobenius);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = RVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
        let y = p.subproblem_y(&h).unwrap();
        let level = p.objective(&h);
        assert!((p.objective(&y) - level).abs() <= 1e-8 * level);
        // At an aligned point the step is idempotent.
        let y2 = p.subproblem_y(&y).unwrap();
        assert!((p.subproblem_y(&y2).unwrap() - &y2).norm() <= 1e-8 * y2.norm().max(1.0));
        assert!(matches!(
            p.subproblem_y(&p.unconstrained_minimizer()),
            Err(IsacError::DegenerateDirection(_))
        ));
    }

    #[test]
    fn ball_step_properties() {
        let p = random_problem(5, 8, 5, 0.3, NormKind::Frobenius);
        let y = RVector::from_element(5, 1.0);
        let h = p.subproblem_h(&y).unwrap();
        assert!((p.ball_distance(&h) - 0.3).abs() < 1e-14);
        let q = random_problem(5, 8, 5, 0.3, NormKind::EntryInfinity);
        let h = q.subproblem_h(&y).unwrap();
        let d = q.half_gradient(&y);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let z = RVector::from_fn(5, |i, _| q.center()[i] + rng.random_range(-0.3..0.3));
            assert!(d.dot(&z) <= d.dot(&h) + 1e-12);
        }
    }

    #[test]
    fn ascent_is_monotone_and_certified() {
        for seed in 0..20 {
            let p = random_problem(seed, 10, 6, 0.5 + seed as f64 * 0.1, NormKind::Frobenius);
            let sol = p.solve(&QuadMaxOptions { seed, ..Default::default() }).unwrap();
            for w in sol.trace.iterates.windows(2) {
                assert!(w[1].1 > w[0].1);
            }
            assert!(sol.trace.global_certified);
            assert!(p.ball_distance(&sol.h) <= p.theta() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn matches_trust_region_on_larger_instance() {
        let p = random_problem(42, 40, 24, 1.3, NormKind::Frobenius);
        let sol = p.solve(&QuadMaxOptions::default()).unwrap();
        let (vals, vecs) = symmetric_eigen(p.gram());
        let trs = p.trust_region_maximizer(&vals, &vecs).unwrap();
        assert!(sol.objective >= p.objective(&trs) * (1.0 - 1e-12));
    }

    #[test]
    fn box_solution_is_best_vertex() {
        for seed in 0..10 {
            let p = random_problem(seed, 6, 4, 0.4, NormKind::EntryInfinity);
            let sol = p.solve(&QuadMaxOptions { seed, ..Default::default() }).unwrap();
            let best = p.best_vertex();
            assert!(sol.objective >= p.objective(&best) * (1.0 - 1e-14));
            assert!(sol.trace.global_certified);
        }
    }

    #[test]
    fn trust_region_hard_case() {
        // h̄ at the unconstrained minimizer along a repeated top eigenvalue.
        let c = RMatrix::from_diagonal(&RVector::from_vec(vec![2.0, 2.0, 1.0]));
        let s = RVector::from_vec(vec![0.0, 0.0, 0.0]);
        let p = QuadMaxProblem::new(c, s, RVector::zeros(3), 1.0, NormKind::Frobenius).unwrap();
        let (vals, vecs) = symmetric_eigen(p.gram());
        let h = p.trust_region_maximizer(&vals, &vecs).unwrap();
        assert!((p.objective(&h) - 4.0).abs() < 1e-12);
        let sol = p.solve(&QuadMaxOptions::default()).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-9);
    }
}
