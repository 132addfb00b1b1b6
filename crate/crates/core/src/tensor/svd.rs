use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{JobSvd, SVDDC, SVD};

use super::DenseTensor;
use crate::error::{Error, Result};

/// Output of [`truncated_svd`]: `m ≈ u · diag(singular_values) · v`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × k`, orthonormal columns.
    pub u: DenseTensor,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `k × cols`, orthonormal rows.
    pub v: DenseTensor,
    /// Sum of the squared singular values that were dropped.
    pub discarded_weight: f64,
}

/// Thin SVD of a matrix: `(u, s, vt)` with `min(rows, cols)` singular values.
pub fn svd_full(m: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("non-finite entry in SVD input"));
    }
    let owned = m.to_owned();
    let (u, s, vt) = match owned.svddc(JobSvd::Some) {
        Ok(r) => r,
        // divide-and-conquer occasionally fails to converge; QR iteration is slower but sturdier
        Err(_) => owned.svd(true, true)?,
    };
    let (u, vt) = match (u, vt) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::numeric("LAPACK returned no singular vectors")),
    };
    let k = s.len();
    let u = if u.ncols() == k { u } else { u.slice(ndarray::s![.., ..k]).to_owned() };
    let vt = if vt.nrows() == k { vt } else { vt.slice(ndarray::s![..k, ..]).to_owned() };
    Ok((u, s.to_vec(), vt))
}

/// Thin SVD computed on the nonzero rows and columns only.
///
/// Rows (columns) of the input that are exactly zero come back as exactly zero
/// rows of `u` (columns of `vt`), so structural zeros survive the factorization.
/// The number of singular values is the smaller dimension of the stripped
/// matrix.
pub fn svd_nonzero(m: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let rows: Vec<usize> = (0..m.nrows()).filter(|&i| m.row(i).iter().any(|&x| x != 0.0)).collect();
    let cols: Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).iter().any(|&x| x != 0.0)).collect();
    if rows.is_empty() {
        return Err(Error::numeric("SVD of an all-zero matrix"));
    }
    if rows.len() == m.nrows() && cols.len() == m.ncols() {
        return svd_full(m);
    }
    let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| m[[rows[i], cols[j]]]);
    let (u_s, s, vt_s) = svd_full(sub.view())?;
    let k = s.len();
    let mut u = Array2::zeros((m.nrows(), k));
    for (i, &r) in rows.iter().enumerate() {
        u.row_mut(r).assign(&u_s.row(i));
    }
    let mut vt = Array2::zeros((k, m.ncols()));
    for (j, &c) in cols.iter().enumerate() {
        vt.column_mut(c).assign(&vt_s.column(j));
    }
    Ok((u, s, vt))
}

/// Number of leading singular values to keep and the squared weight discarded.
///
/// Keeps the smallest `k ≤ max_keep` whose discarded squared weight is strictly
/// below `weight_cutoff`, never fewer than one. A zero cutoff disables weight
/// truncation, so only `max_keep` applies.
pub fn truncation_rank(singular_values: &[f64], max_keep: usize, weight_cutoff: f64) -> (usize, f64) {
    let n = singular_values.len();
    if n == 0 {
        return (0, 0.0);
    }
    // tail[k] = sum_{i >= k} s_i^2, accumulated from the small end
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + singular_values[i] * singular_values[i];
    }
    let limit = max_keep.clamp(1, n);
    let mut k = limit;
    if weight_cutoff > 0.0 {
        if let Some(first) = (1..=limit).find(|&k| tail[k] < weight_cutoff) {
            k = first;
        }
    }
    (k, tail[k])
}

/// SVD of a rank-2 tensor truncated by bond dimension and discarded weight.
pub fn truncated_svd(m: &DenseTensor, max_keep: usize, weight_cutoff: f64) -> Result<SvdResult> {
    if max_keep == 0 {
        return Err(Error::domain("max_keep must be at least 1"));
    }
    if !(0.0..1.0).contains(&weight_cutoff) {
        return Err(Error::domain(format!("weight cutoff {weight_cutoff} outside [0, 1)")));
    }
    let view = m.matrix()?;
    let (u, s, vt) = svd_full(view)?;
    let (k, discarded) = truncation_rank(&s, max_keep, weight_cutoff);
    let u = DenseTensor::from_array2(u.slice(ndarray::s![.., ..k]).to_owned());
    let v = DenseTensor::from_array2(vt.slice(ndarray::s![..k, ..]).to_owned());
    Ok(SvdResult {
        u,
        singular_values: s[..k].to_vec(),
        v,
        discarded_weight: discarded,
    })
}
