//! Conversions between complex matrix algebra and the stacked real
//! representation used by the ball-constrained quadratic maximizer.
//!
//! A complex vector `z = a + jb` is stacked as `[a; b]`; a complex matrix
//! `Ξ = Γ + jΘ` is stacked as `[[Γ, −Θ], [Θ, Γ]]`, so that stacking commutes
//! with multiplication.

use crate::error::{dim_mismatch, Result};
use crate::linalg::{kron, shape, unvec_col_major, vec_col_major, CMatrix, CVector, RMatrix, RVector, C64};

/// Real vector `[Re z; Im z]` of even length.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStackedVector {
    data: RVector,
}

impl RealStackedVector {
    pub fn from_real(data: RVector) -> Option<Self> {
        (data.len() % 2 == 0).then_some(Self { data })
    }

    pub fn as_vector(&self) -> &RVector {
        &self.data
    }

    pub fn into_vector(self) -> RVector {
        self.data
    }

    /// Length of the underlying complex vector.
    pub fn complex_len(&self) -> usize {
        self.data.len() / 2
    }
}

/// Real matrix with block structure `[[Γ, −Θ], [Θ, Γ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStackedMatrix {
    data: RMatrix,
}

impl RealStackedMatrix {
    pub fn as_matrix(&self) -> &RMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> RMatrix {
        self.data
    }

    /// Largest deviation from the `[[Γ, −Θ], [Θ, Γ]]` block pattern.
    pub fn block_structure_error(&self) -> f64 {
        let m = self.data.nrows() / 2;
        let n = self.data.ncols() / 2;
        let d = &self.data;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..n {
                worst = worst.max((d[(i, j)] - d[(i + m, j + n)]).abs());
                worst = worst.max((d[(i, j + n)] + d[(i + m, j)]).abs());
            }
        }
        worst
    }
}

pub fn stack_vector(z: &CVector) -> RealStackedVector {
    let m = z.len();
    let data = RVector::from_fn(2 * m, |i, _| if i < m { z[i].re } else { z[i - m].im });
    RealStackedVector { data }
}

pub fn unstack_vector(v: &RealStackedVector) -> CVector {
    let m = v.complex_len();
    CVector::from_fn(m, |i, _| C64::new(v.data[i], v.data[i + m]))
}

pub fn stack_matrix(xi: &CMatrix) -> RealStackedMatrix {
    let (m, n) = xi.shape();
    let data = RMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = xi[(i % m, j % n)];
        match (i < m, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    RealStackedMatrix { data }
}

/// `stack(vec(H))` with column-major vectorization.
pub fn stack_channel(h: &CMatrix) -> RealStackedVector {
    stack_vector(&vec_col_major(h))
}

/// Inverse of [`stack_channel`].
pub fn unstack_channel(h: &RVector, rows: usize, cols: usize) -> CMatrix {
    let m = rows * cols;
    assert_eq!(h.len(), 2 * m, "stacked channel length");
    let z = CVector::from_fn(m, |i, _| C64::new(h[i], h[i + m]));
    unvec_col_major(&z, rows, cols)
}

/// Real least-squares data `(C, s, h̄)` with
/// `‖C·stack(vec H) − s‖² = ‖scale·H·X_eff − S‖²_F`.
#[derive(Debug, Clone)]
pub struct QuadMaxInstance {
    pub c: RealStackedMatrix,
    pub s: RealStackedVector,
    pub h_bar: RealStackedVector,
}

pub fn build_quadmax_instance(
    x_eff: &CMatrix,
    s: &CMatrix,
    h_bar: &CMatrix,
    scale: f64,
) -> Result<QuadMaxInstance> {
    let (k, n) = h_bar.shape();
    let l = x_eff.ncols();
    if x_eff.nrows() != n {
        return Err(dim_mismatch("build_quadmax_instance", format!("X_eff with {n} rows"), shape(x_eff)));
    }
    if s.shape() != (k, l) {
        return Err(dim_mismatch("build_quadmax_instance", format!("{k}x{l}"), shape(s)));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(crate::error::invalid("scale", format!("must be finite and nonnegative, got {scale}")));
    }
    let xt_kron = kron(&x_eff.transpose(), &CMatrix::identity(k, k)) * C64::new(scale, 0.0);
    Ok(QuadMaxInstance {
        c: stack_matrix(&xt_kron),
        s: stack_channel(s),
        h_bar: stack_channel(h_bar),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_and_unit_vectors() {
        let z = CVector::zeros(2);
        assert_eq!(stack_vector(&z).as_vector().as_slice(), &[0.0; 4]);
        let z = CVector::from_element(1, C64::new(1.0, 1.0));
        assert_eq!(stack_vector(&z).as_vector().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn scalar_matrices() {
        let one = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        assert_eq!(stack_matrix(&one).as_matrix(), &RMatrix::identity(2, 2));
        let j = CMatrix::from_element(1, 1, C64::new(0.0, 1.0));
        assert_eq!(
            stack_matrix(&j).as_matrix(),
            &RMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
        );
    }

    #[test]
    fn scalar_instance_is_identity() {
        let one = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let zero = CMatrix::zeros(1, 1);
        let inst = build_quadmax_instance(&one, &zero, &zero, 1.0).unwrap();
        assert_eq!(inst.c.as_matrix(), &RMatrix::identity(2, 2));
        assert_eq!(inst.s.as_vector().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn instance_reproduces_frobenius_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (k, n, l) = (2, 3, 4);
        let x = complex_gaussian(&mut rng, n, l);
        let s = complex_gaussian(&mut rng, k, l);
        let hb = complex_gaussian(&mut rng, k, n);
        let scale = (l as f64).sqrt();
        let inst = build_quadmax_instance(&x, &s, &hb, scale).unwrap();
        assert_eq!(inst.c.as_matrix().shape(), (16, 12));
        assert_eq!(unstack_channel(inst.h_bar.as_vector(), k, n), hb);
        for _ in 0..100 {
            let h = complex_gaussian(&mut rng, k, n);
            let stacked = inst.c.as_matrix() * stack_channel(&h).as_vector() - inst.s.as_vector();
            let direct = crate::linalg::fro2(&(&h * &x * C64::new(scale, 0.0) - &s));
            let rel = (stacked.norm_squared() - direct).abs() / direct;
            assert!(rel <= 1e-10, "{rel}");
        }
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let x = CMatrix::zeros(3, 4);
        let s = CMatrix::zeros(2, 5);
        let hb = CMatrix::zeros(2, 3);
        assert!(build_quadmax_instance(&x, &s, &hb, 1.0).is_err());
    }

    fn complex_vec(len: usize) -> impl Strategy<Value = CVector> {
        prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), len)
            .prop_map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(z in (1usize..8).prop_flat_map(complex_vec)) {
            prop_assert_eq!(unstack_vector(&stack_vector(&z)), z);
        }

        #[test]
        fn norm_is_preserved(z in (1usize..8).prop_flat_map(complex_vec)) {
            let lhs = stack_vector(&z).as_vector().norm();
            prop_assert!((lhs - z.norm()).abs() <= 1e-12 * (1.0 + z.norm()));
        }

        #[test]
        fn multiplication_commutes_with_stacking(seed in any::<u64>(), m in 1usize..5, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xi = complex_gaussian(&mut rng, m, n);
            let z = complex_gaussian(&mut rng, n, 1).column(0).into_owned();
            let stacked = stack_matrix(&xi);
            prop_assert!(stacked.block_structure_error() == 0.0);
            let lhs = stacked.as_matrix() * stack_vector(&z).as_vector();
            let rhs = stack_vector(&(&xi * &z));
            prop_assert!((lhs - rhs.as_vector()).amax() <= 1e-12);
        }
    }
}
