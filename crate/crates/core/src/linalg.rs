//! Dense complex linear-algebra helpers shared by the design modules.
//!
//! Everything here is a thin layer over `nalgebra`: SVDs with completed
//! bases, polar factors, Hermitian eigen-decompositions and seeded random
//! matrix generators.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Squared Frobenius norm.
pub fn fro2(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn fro(m: &CMatrix) -> f64 {
    fro2(m).sqrt()
}

pub fn shape(m: &CMatrix) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

/// `I_{m×n}`: ones on the main diagonal, zeros elsewhere.
pub fn rect_identity(m: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(m, n, |i, j| if i == j { real(1.0) } else { real(0.0) })
}

/// Thin SVD `M = U diag(s) V^H` with `r = min(m, n)` columns in `U` and `V`.
pub fn thin_svd(m: &CMatrix) -> (CMatrix, RVector, CMatrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v = svd.v_t.expect("svd computed with v_t").adjoint();
    (u, svd.singular_values, v)
}

/// Extends the orthonormal columns of `q` (n×r) to an n×n unitary matrix whose
/// first `r` columns are `q`.
pub fn complete_basis(q: &CMatrix) -> CMatrix {
    let n = q.nrows();
    let r = q.ncols();
    let mut cols: Vec<CVector> = (0..r).map(|j| q.column(j).into_owned()).collect();
    // Candidate directions ordered by how much of them survives projection.
    let mut residuals: Vec<(usize, f64)> = (0..n)
        .map(|i| {
            let w: f64 = (0..r).map(|j| q[(i, j)].norm_sqr()).sum();
            (i, 1.0 - w)
        })
        .collect();
    residuals.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (i, _) in residuals {
        if cols.len() == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[i] = real(1.0);
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for u in &cols {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / real(norm));
        }
    }
    CMatrix::from_columns(&cols)
}

/// Full SVD with square unitary factors: `U` is m×m, `V` is n×n and the
/// singular values are the `min(m, n)` diagonal entries.
pub fn full_svd(m: &CMatrix) -> (CMatrix, RVector, CMatrix) {
    let (u, s, v) = thin_svd(m);
    let u = if u.ncols() < m.nrows() { complete_basis(&u) } else { u };
    let v = if v.ncols() < m.ncols() { complete_basis(&v) } else { v };
    (u, s, v)
}

/// Unitary polar factor of `m` (p×q, p ≤ q): the semi-unitary `Q` maximizing
/// `Re tr(Q^H m)`, equal to `U V^H` from the thin SVD.
pub fn polar_factor(m: &CMatrix) -> CMatrix {
    let (u, _, v) = thin_svd(m);
    u * v.adjoint()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
pub fn hermitian_eigen(m: &CMatrix) -> (RVector, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    sort_eigen(eig.eigenvalues, eig.eigenvectors)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &RMatrix) -> (RVector, RMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = RVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = RMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

fn sort_eigen(values: RVector, vectors: CMatrix) -> (RVector, CMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = RVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let cols: Vec<CVector> = order.iter().map(|&i| vectors.column(i).into_owned()).collect();
    (sorted, CMatrix::from_columns(&cols))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Moore-Penrose pseudo-inverse via the SVD.
pub fn pseudo_inverse(m: &CMatrix) -> CMatrix {
    let (u, s, v) = thin_svd(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cutoff = smax * 1e-12 * (m.nrows().max(m.ncols()) as f64);
    let mut vs = v.clone();
    for (j, &sj) in s.iter().enumerate() {
        let inv = if sj > cutoff { 1.0 / sj } else { 0.0 };
        vs.column_mut(j).scale_mut(inv);
    }
    vs * u.adjoint()
}

/// Entry-wise circularly-symmetric complex Gaussian with unit variance
/// (real and imaginary parts each N(0, 1/2)).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// Random `rows × cols` matrix with orthonormal rows (`rows ≤ cols`), obtained
/// from the QR factorization of a complex Gaussian matrix.
pub fn random_semi_unitary<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows <= cols, "semi-unitary needs rows <= cols");
    let g = complex_gaussian(rng, cols, rows);
    let q = g.qr().q();
    q.adjoint()
}

/// Random square unitary matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    random_semi_unitary(rng, n, n)
}

/// Column-major vectorization `vec(M)`.
pub fn vec_col_major(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col_major`].
pub fn unvec_col_major(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Stacks `top` over `bottom`.
pub fn vstack(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = CMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Stacks `left` beside `right`.
pub fn hstack(left: &CMatrix, right: &CMatrix) -> CMatrix {
    assert_eq!(left.nrows(), right.nrows());
    let mut out = CMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

/// `‖X X^H − target‖_F / ‖target‖_F`.
pub fn gram_residual(x: &CMatrix, target: &CMatrix) -> f64 {
    let gram = x * x.adjoint();
    fro(&(gram - target)) / fro(target).max(f64::MIN_POSITIVE)
}
