//! Small dense complex linear-algebra kernels shared by the rest of the crate.
//!
//! Everything here is deterministic: pivot choices depend only on the input
//! values and ties are broken by the lowest index.

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Default absolute tolerance for all structural equalities.
pub const EPS: f64 = 1e-9;

/// Pivots whose residual is within this relative distance of the largest one
/// count as tied; the lowest index among them wins.
const PIVOT_TIE: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit `E_{row,col}` of the given shape.
pub fn unit(rows: usize, cols: usize, row: usize, col: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    m[(row, col)] = c(1.0, 0.0);
    m
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Numerical rank with threshold `EPS * max(σ_max, 1)`.
pub fn rank(m: &CMat) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = EPS * smax.max(1.0);
    sv.iter().filter(|&&s| s > thresh).count()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal matrix from a list of square (or rectangular) blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), b.shape()).copy_from(b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Residual of `p` as an orthogonal projection: `max(‖p² − p‖, ‖p* − p‖)`.
pub fn projection_residual(p: &CMat) -> f64 {
    if p.nrows() != p.ncols() {
        return f64::INFINITY;
    }
    let sq = p * p;
    frobenius_diff(&sq, p).max(frobenius_diff(&p.adjoint(), p))
}

/// Residual of `u` as a unitary: `max(‖u*u − 1‖, ‖uu* − 1‖)`.
pub fn unitary_residual(u: &CMat) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let id = identity(n);
    frobenius_diff(&(u.adjoint() * u), &id).max(frobenius_diff(&(u * u.adjoint()), &id))
}

/// Residual of `v` as an isometry: `‖v*v − 1‖`.
pub fn isometry_residual(v: &CMat) -> f64 {
    frobenius_diff(&(v.adjoint() * v), &identity(v.ncols()))
}

fn pick_pivot(norms: &[f64], taken: &[bool]) -> Option<(usize, f64)> {
    let max = norms
        .iter()
        .zip(taken)
        .filter(|(_, &t)| !t)
        .map(|(&n, _)| n)
        .fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return None;
    }
    norms
        .iter()
        .enumerate()
        .find(|&(i, &n)| !taken[i] && n >= max * (1.0 - PIVOT_TIE))
        .map(|(i, &n)| (i, n))
}

/// Pivoted Gram–Schmidt on the columns of `m`.
///
/// Returns an `nrows × r` matrix with orthonormal columns spanning the column
/// space, where `r` is the number of pivots whose residual norm exceeds
/// `EPS * max(1, largest column norm)`.
pub fn orthonormal_columns(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    let scale = (0..cols)
        .map(|j| m.column(j).norm())
        .fold(1.0_f64, f64::max);
    let tol = EPS * scale;
    let mut residual = m.clone();
    let mut taken = vec![false; cols];
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    loop {
        let norms: Vec<f64> = (0..cols).map(|j| residual.column(j).norm()).collect();
        let Some((p, norm)) = pick_pivot(&norms, &taken) else {
            break;
        };
        if norm <= tol {
            break;
        }
        taken[p] = true;
        let mut q = residual.column(p).into_owned() / c(norm, 0.0);
        // one re-orthogonalisation pass against the accepted basis
        for b in &basis {
            let proj = b.dotc(&q);
            q -= b * proj;
        }
        let qn = q.norm();
        q /= c(qn, 0.0);
        for j in 0..cols {
            if taken[j] {
                continue;
            }
            let proj = q.dotc(&residual.column(j));
            let upd = residual.column(j) - &q * proj;
            residual.set_column(j, &upd);
        }
        basis.push(q);
        if basis.len() == rows {
            break;
        }
    }
    let mut out = CMat::zeros(rows, basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the column space of the
/// isometry `v` inside `C^rows`, obtained by pivoted Gram–Schmidt of `1 − vv*`.
pub fn complement_columns(v: &CMat) -> CMat {
    let n = v.nrows();
    let q = identity(n) - v * v.adjoint();
    orthonormal_columns(&q)
}

/// Orthonormalise a family of vectors known only through its Gram matrix.
///
/// Returns the coefficient matrix `C` (generators × rank) such that
/// `C* G C = 1` and the vectors `Σ_g C[g,a] v_g` span the same space as the
/// generators. Pivoting is the same largest-residual rule as
/// [`orthonormal_columns`].
pub fn gram_orthonormalize(gram: &CMat) -> CMat {
    let n = gram.nrows();
    let scale = (0..n).map(|i| gram[(i, i)].re).fold(1.0_f64, f64::max);
    let tol = EPS * scale;
    // d[x] = squared residual norm of generator x
    let mut d: Vec<f64> = (0..n).map(|i| gram[(i, i)].re).collect();
    let mut taken = vec![false; n];
    let mut coeffs: Vec<nalgebra::DVector<C64>> = Vec::new();
    // rows of W: <ξ_a, v_x> for all x
    let mut w_rows: Vec<nalgebra::RowDVector<C64>> = Vec::new();
    while let Some((p, dp)) = pick_pivot(&d, &taken) {
        if dp <= tol {
            break;
        }
        taken[p] = true;
        let mut coef = nalgebra::DVector::<C64>::zeros(n);
        coef[p] = c(1.0, 0.0);
        for (cb, wb) in coeffs.iter().zip(&w_rows) {
            // subtract ξ_b <ξ_b, v_p>
            coef -= cb * wb[p];
        }
        // normalise against the true Gram norm
        let gc = gram * &coef;
        let norm2 = coef.dotc(&gc).re;
        if norm2 <= tol {
            taken[p] = true;
            d[p] = 0.0;
            continue;
        }
        let inv = 1.0 / norm2.sqrt();
        coef *= c(inv, 0.0);
        let row = (gram * &coef).adjoint();
        for x in 0..n {
            if !taken[x] {
                d[x] -= row[x].norm_sqr();
            }
        }
        coeffs.push(coef);
        w_rows.push(row);
    }
    let mut out = CMat::zeros(n, coeffs.len());
    for (j, col) in coeffs.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}

/// Exact-size check helper used by validation code.
pub fn same_shape(a: &CMat, b: &CMat) -> bool {
    a.shape() == b.shape()
}

/// Maximum of a list of residuals, treating an empty list as zero.
pub fn max_residual(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_projection() {
        let mut p = zeros(3, 3);
        p[(0, 0)] = c(1.0, 0.0);
        p[(1, 1)] = c(1.0, 0.0);
        assert_eq!(rank(&p), 2);
        assert_eq!(rank(&zeros(2, 2)), 0);
    }

    #[test]
    fn gram_schmidt_is_identity_on_units() {
        let v = orthonormal_columns(&identity(4));
        assert_eq!(frobenius_diff(&v, &identity(4)), 0.0);
    }

    #[test]
    fn gram_schmidt_spans_column_space() {
        let m = CMat::from_fn(4, 3, |i, j| c((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let q = orthonormal_columns(&m);
        assert!(isometry_residual(&q) < 1e-12);
        let proj = &q * q.adjoint();
        assert!(frobenius_diff(&(&proj * &m), &m) < 1e-10);
    }

    #[test]
    fn gram_orthonormalize_matches_rank() {
        // three vectors in C^2, the third a combination of the first two
        let vecs = CMat::from_row_slice(
            2,
            3,
            &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(2.0, 0.0), c(1.0, 0.0), c(3.0, 1.0)],
        );
        let g = vecs.adjoint() * &vecs;
        let coeffs = gram_orthonormalize(&g);
        assert_eq!(coeffs.ncols(), 2);
        let check = coeffs.adjoint() * &g * &coeffs;
        assert!(frobenius_diff(&check, &identity(2)) < 1e-12);
    }

    #[test]
    fn complement_completes_to_unitary() {
        let mut v = zeros(3, 1);
        v[(1, 0)] = c(1.0, 0.0);
        let w = complement_columns(&v);
        assert_eq!(w.ncols(), 2);
        let mut u = zeros(3, 3);
        u.set_column(0, &v.column(0));
        u.set_column(1, &w.column(0));
        u.set_column(2, &w.column(1));
        assert!(unitary_residual(&u) < 1e-12);
    }
}
