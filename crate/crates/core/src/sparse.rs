//! Thin helpers around `nalgebra_sparse::CsrMatrix`.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

pub type SparseMatrix = CsrMatrix<f64>;

/// Build a CSR matrix from `(row, col, value)` triplets; duplicates are summed
/// and explicit zeros dropped.
pub fn from_triplets(
    nrows: usize,
    ncols: usize,
    triplets: impl IntoIterator<Item = (usize, usize, f64)>,
) -> SparseMatrix {
    let mut coo = CooMatrix::new(nrows, ncols);
    for (r, c, v) in triplets {
        coo.push(r, c, v);
    }
    let csr = CsrMatrix::from(&coo);
    drop_zeros(&csr)
}

pub fn drop_zeros(m: &SparseMatrix) -> SparseMatrix {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for (r, c, &v) in m.triplet_iter() {
        if v != 0.0 {
            coo.push(r, c, v);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn matvec(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len(), "matvec dimension mismatch");
    (0..m.nrows()).map(|r| row_dot(m, r, x)).collect()
}

pub fn row_dot(m: &SparseMatrix, r: usize, x: &[f64]) -> f64 {
    let row = m.row(r);
    row.col_indices()
        .iter()
        .zip(row.values())
        .map(|(&c, &v)| v * x[c])
        .sum()
}

pub fn entry(m: &SparseMatrix, r: usize, c: usize) -> f64 {
    let row = m.row(r);
    match row.col_indices().binary_search(&c) {
        Ok(k) => row.values()[k],
        Err(_) => 0.0,
    }
}

pub fn to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, &v) in m.triplet_iter() {
        d[(r, c)] += v;
    }
    d
}

pub fn from_dense(d: &DMatrix<f64>, drop_below: f64) -> SparseMatrix {
    let mut trip = Vec::new();
    for c in 0..d.ncols() {
        for r in 0..d.nrows() {
            let v = d[(r, c)];
            if v.abs() > drop_below {
                trip.push((r, c, v));
            }
        }
    }
    from_triplets(d.nrows(), d.ncols(), trip)
}

/// `a · b · c`.
pub fn triple_product(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix) -> SparseMatrix {
    let bc = b * c;
    drop_zeros(&(a * &bc))
}

/// Remove entries with magnitude below `tol · max|entry|`.
pub fn prune(m: &SparseMatrix, rel_tol: f64) -> SparseMatrix {
    let max = m.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cut = rel_tol * max;
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for (r, c, &v) in m.triplet_iter() {
        if v.abs() > cut {
            coo.push(r, c, v);
        }
    }
    CsrMatrix::from(&coo)
}
