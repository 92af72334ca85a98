//! Secular equation `Σ_i w_i / (a_i + μ)² = r²` on `μ > −min_i a_i`.
//!
//! Shared by the sphere-constrained least-squares solver (joint TPC design) and
//! the trust-region certificate of the quadratic maximizer.

use crate::error::{IsacError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularRoot {
    pub mu: f64,
    /// The weight on the smallest eigenvalue vanishes and the remaining terms
    /// cannot reach the radius; `μ = −a_min` and the solution needs a
    /// component along the bottom eigenvector.
    pub hard_case: bool,
}

fn sum_sq(a: &[f64], w: &[f64], mu: f64) -> (f64, f64) {
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for (&ai, &wi) in a.iter().zip(w) {
        let d = ai + mu;
        s2 += wi / (d * d);
        s3 += wi / (d * d * d);
    }
    (s2, s3)
}

/// Solves the secular equation. `a` must be sorted ascending and `w ≥ 0`.
pub fn solve_secular(a: &[f64], w: &[f64], radius: f64) -> Result<SecularRoot> {
    assert_eq!(a.len(), w.len());
    assert!(!a.is_empty());
    let a_min = a[0];
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let cluster = a.iter().take_while(|&&x| x <= a_min + 1e-12 * scale).count();
    let total: f64 = w.iter().sum();
    let bottom: f64 = w[..cluster].iter().sum();

    if bottom <= 1e-28 * total.max(f64::MIN_POSITIVE) || total == 0.0 {
        let rest: f64 = a[cluster..]
            .iter()
            .zip(&w[cluster..])
            .map(|(&ai, &wi)| wi / ((ai - a_min) * (ai - a_min)))
            .sum();
        if rest <= radius * radius {
            return Ok(SecularRoot { mu: -a_min, hard_case: true });
        }
    }

    let mut lo = -a_min;
    let mut hi = -a_min + total.sqrt() / radius;
    let phi = |mu: f64| {
        let (s2, s3) = sum_sq(a, w, mu);
        let norm = s2.sqrt();
        (1.0 / norm - 1.0 / radius, s3 / (norm * norm * norm))
    };
    let (mut f_hi, _) = phi(hi);
    if f_hi < 0.0 {
        // Round-off in the upper bound; widen until the sign flips.
        for _ in 0..60 {
            hi = -a_min + 2.0 * (hi + a_min);
            f_hi = phi(hi).0;
            if f_hi >= 0.0 {
                break;
            }
        }
    }
    if f_hi < 0.0 {
        return Err(IsacError::RootFinding { lo, hi, f_lo: -1.0 / radius, f_hi });
    }
    let mut mu = hi;
    for _ in 0..300 {
        let (f, df) = phi(mu);
        if f.abs() * radius <= 1e-15 {
            return Ok(SecularRoot { mu, hard_case: false });
        }
        if f < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = mu - f / df;
        mu = if newton > lo && newton < hi && df.is_finite() && df > 0.0 { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            return Ok(SecularRoot { mu: hi, hard_case: false });
        }
    }
    let f_lo = if lo > -a_min { phi(lo).0 } else { -1.0 / radius };
    let f_hi = phi(hi).0;
    if (f_hi - f_lo).abs() * radius <= 1e-9 {
        return Ok(SecularRoot { mu, hard_case: false });
    }
    Err(IsacError::RootFinding { lo, hi, f_lo, f_hi })
}
