//! Dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{shape_err, Error, Result};

/// `c = alpha * op(a) * op(b) + beta * c` for column-major `DMatrix`.
///
/// `beta == 0` ignores the previous contents of `c`.
pub fn gemm(
    alpha: f64,
    a: &DMatrix<f64>,
    trans_a: bool,
    b: &DMatrix<f64>,
    trans_b: bool,
    beta: f64,
    c: &mut DMatrix<f64>,
) {
    let (m, k) = if trans_a {
        (a.ncols(), a.nrows())
    } else {
        (a.nrows(), a.ncols())
    };
    let (kb, n) = if trans_b {
        (b.ncols(), b.nrows())
    } else {
        (b.nrows(), b.ncols())
    };
    assert_eq!(k, kb, "gemm inner dimensions");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if beta == 0.0 {
            c.fill(0.0);
        } else {
            *c *= beta;
        }
        return;
    }
    // Column-major element (i, j) lives at i + j * nrows.
    let (rsa, csa) = if trans_a {
        (a.nrows() as isize, 1)
    } else {
        (1, a.nrows() as isize)
    };
    let (rsb, csb) = if trans_b {
        (b.nrows() as isize, 1)
    } else {
        (1, b.nrows() as isize)
    };
    let rsc = 1;
    let csc = c.nrows() as isize;
    // SAFETY: strides describe the exact extents of the three buffers, which
    // are distinct allocations (`c` is borrowed mutably).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.nrows(), b.ncols());
    gemm(1.0, a, false, b, false, 0.0, &mut c);
    c
}

/// `aᵀ b`
pub fn matmul_tn(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.ncols(), b.ncols());
    gemm(1.0, a, true, b, false, 0.0, &mut c);
    c
}

/// `a bᵀ`
pub fn matmul_nt(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.nrows(), b.nrows());
    gemm(1.0, a, false, b, true, 0.0, &mut c);
    c
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / m))
}

pub fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    c
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Eigenvector columns are sign-normalised so that their entry of largest
/// magnitude is positive (lowest index wins ties), which makes downstream
/// embeddings reproducible.
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if m.nrows() != m.ncols() {
        return Err(shape_err("square matrix", alloc::format!("{}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    // Symmetrise exactly; callers build S from products that may differ in the last ulp.
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::Convergence { what: "symmetric eigensolver", iterations: 0 })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalise_sign(col.as_mut_slice());
        vectors.set_column(dst, &col);
    }
    Ok(SortedEigen { values, vectors })
}

pub(crate) fn normalise_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if libm::fabs(v[i]) > libm::fabs(v[best]) + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn row_vec(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

/// Row-major copy of a matrix, handy for repeated row access.
pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| row_vec(x, i)).collect()
}

/// Brute-force k nearest neighbours of `query` among `points`.
///
/// `exclude` removes one index (the query itself when it is a member).
/// Ties in distance are broken by the lower index.
pub fn nearest_neighbors(points: &[Vec<f64>], query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .map(|(j, p)| (squared_distance(p, query), j))
        .collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.into_iter().map(|(_, j)| j).collect()
}

/// Solve `g w = rhs` for a symmetric positive (semi)definite `g`.
pub fn solve_symmetric(g: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = g.clone().cholesky() {
        let w = ch.solve(rhs);
        if w.iter().all(|v| v.is_finite()) {
            return Some(w);
        }
    }
    let w = g.lu().solve(rhs)?;
    w.iter().all(|v| v.is_finite()).then_some(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_product_for_all_transposes() {
        let a = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.5 - 1.0);
        let b = DMatrix::from_fn(4, 2, |i, j| (i as f64 - j as f64) * 0.25);
        let expect = &a * &b;
        assert!((matmul(&a, &b) - &expect).norm() < 1e-12);
        let at = a.transpose();
        assert!((matmul_tn(&at, &b) - &expect).norm() < 1e-12);
        let bt = b.transpose();
        assert!((matmul_nt(&a, &bt) - &expect).norm() < 1e-12);
        let mut c = DMatrix::from_element(3, 2, 1.0);
        gemm(2.0, &a, false, &b, false, 1.0, &mut c);
        assert!((c - (expect * 2.0).add_scalar(1.0)).norm() < 1e-12);
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let e = symmetric_eigen(&m).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * d * e.vectors.transpose();
        assert!((rec - m).norm() < 1e-10);
    }

    #[test]
    fn knn_breaks_ties_by_index() {
        let pts: Vec<Vec<f64>> = [[1.0], [-1.0], [2.0], [0.0]].iter().map(|p| p.to_vec()).collect();
        assert_eq!(nearest_neighbors(&pts, &[0.0], 3, Some(3)), [0, 1, 2]);
        assert_eq!(nearest_neighbors(&pts, &[0.0], 10, None), [3, 0, 1, 2]);
    }
}
