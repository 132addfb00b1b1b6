//! Dense row-major tensors and the handful of linear-algebra kernels the
//! lattice code is built on.
//!
//! Everything is real double precision. Matrix products and factorizations are
//! delegated to BLAS/LAPACK through `ndarray`; the layout contract of
//! [`DenseTensor`] (row-major, contiguous) makes reshapes free and lets any
//! tensor be viewed as a matrix over a split of its axes.

mod lanczos;
mod svd;

pub use lanczos::{lanczos_lowest, lanczos_lowest_from, EigenPair, LanczosOptions};
pub use svd::{svd_full, svd_nonzero, truncated_svd, truncation_rank, SvdResult};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

/// A dense real tensor stored in row-major (C) order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::shape(format!("zero dimension in shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` on every multi-index in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    pub fn from_array2(a: Array2<f64>) -> Self {
        let shape = vec![a.nrows(), a.ncols()];
        let data = if a.is_standard_layout() {
            a.into_raw_vec()
        } else {
            a.iter().copied().collect()
        };
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Reinterprets the data under a new shape. The linear order is untouched.
    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data,
        })
    }

    /// Returns a tensor whose axis `k` is axis `axes[k]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let n = self.rank();
        let mut seen = vec![false; n];
        if axes.len() != n || axes.iter().any(|&a| a >= n || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::shape(format!("{axes:?} is not a permutation of {n} axes")));
        }
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Ok(self.clone());
        }
        let src_strides = strides(&self.shape);
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let perm_strides: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; n];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            // odometer increment that keeps the source offset in sync
            for k in (0..n).rev() {
                idx[k] += 1;
                src += perm_strides[k];
                if idx[k] < shape[k] {
                    break;
                }
                src -= perm_strides[k] * shape[k];
                idx[k] = 0;
            }
        }
        Ok(Self { shape, data })
    }

    /// Views a rank-2 tensor as a matrix.
    pub fn matrix(&self) -> Result<ArrayView2<'_, f64>> {
        if self.rank() != 2 {
            return Err(Error::shape(format!("expected a matrix, got shape {:?}", self.shape)));
        }
        Ok(ArrayView2::from_shape((self.shape[0], self.shape[1]), &self.data)
            .expect("contiguous row-major storage"))
    }

    /// Views the tensor as a matrix with the first `split` axes as rows.
    pub fn as_matrix(&self, split: usize) -> ArrayView2<'_, f64> {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        ArrayView2::from_shape((rows, cols), &self.data).expect("contiguous row-major storage")
    }

    pub fn as_matrix_mut(&mut self, split: usize) -> ArrayViewMut2<'_, f64> {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        ArrayViewMut2::from_shape((rows, cols), &mut self.data)
            .expect("contiguous row-major storage")
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale(factor);
        self
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch in comparison");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Sums over the paired axes of `a` and `b`.
///
/// The result carries the unpaired axes of `a` (in order) followed by the
/// unpaired axes of `b`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(Error::shape(format!("axis pair ({ia}, {ib}) out of range")));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::shape(format!(
                "axis {ia} of a has dimension {} but axis {ib} of b has {}",
                a.shape[ia], b.shape[ib]
            )));
        }
        if std::mem::replace(&mut used_a[ia], true) || std::mem::replace(&mut used_b[ib], true) {
            return Err(Error::shape(format!("axis ({ia}, {ib}) paired twice")));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&k| !used_b[k]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let ap = a.permute(&perm_a)?;
    let bp = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();

    let data = matmul(&ap.data, m, k, &bp.data, n);
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(DenseTensor { shape, data })
}

/// Row-major `(m×k)·(k×n)` product.
pub(crate) fn matmul(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let av = ArrayView2::from_shape((m, k), a).expect("lhs shape");
    let bv = ArrayView2::from_shape((k, n), b).expect("rhs shape");
    let mut out = Array2::<f64>::zeros((m, n));
    general_mat_mul(1.0, &av, &bv, 0.0, &mut out);
    out.into_raw_vec()
}

/// All eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
///
/// Dense LAPACK path; used as an exact oracle for the iterative solvers.
pub fn dense_symmetric_eigen(m: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    let view = m.matrix()?;
    if view.nrows() != view.ncols() {
        return Err(Error::shape("eigenproblem needs a square matrix"));
    }
    if !m.is_finite() {
        return Err(Error::numeric("non-finite matrix entry"));
    }
    let (vals, vecs) = view.to_owned().eigh(UPLO::Upper)?;
    Ok((vals.to_vec(), DenseTensor::from_array2(vecs)))
}
