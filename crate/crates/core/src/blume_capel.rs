//! Spin-1 Blume–Capel chain
//!
//! H = ξ Σ_j [α (S^x_j)² + β S^z_j + γ_bc (S^z_j)²] − ξ Σ_j S^x_j S^x_{j+1} − h_b (S^x_1 + S^x_L)
//!
//! Local basis order is S^z = +1, 0, −1.

use ndarray::{array, Array2};
use serde::{Deserialize, Serialize};

use crate::cft::KacLabel;
use crate::error::{Error, Result};
use crate::mpo::{Mpo, MpoBuilder};

/// `(S^x, S^z)` for spin one.
pub fn spin1_matrices() -> (Array2<f64>, Array2<f64>) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sx = array![[0.0, r, 0.0], [r, 0.0, r], [0.0, r, 0.0]];
    let sz = array![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]];
    (sx, sz)
}

/// The unitary exp(iπ S^z) = diag(−1, 1, −1), which maps S^x → −S^x.
pub fn spin_flip() -> Array2<f64> {
    Array2::from_diag(&ndarray::arr1(&[-1.0, 1.0, -1.0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlumeCapelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_bc: f64,
    pub xi: f64,
    /// Longitudinal field on S^x at both ends.
    pub h_b: f64,
}

impl BlumeCapelParams {
    pub const TRICRITICAL_ALPHA: f64 = 0.910207;
    pub const TRICRITICAL_BETA: f64 = 0.415685;
    pub const TRICRITICAL_XI: f64 = 1.0 / 0.56557;

    /// Tricritical point with boundary field `h_b`.
    pub fn tricritical(h_b: f64) -> Self {
        Self {
            alpha: Self::TRICRITICAL_ALPHA,
            beta: Self::TRICRITICAL_BETA,
            gamma_bc: 0.0,
            xi: Self::TRICRITICAL_XI,
            h_b,
        }
    }

    /// Default strong field, 2ξ, with the sign selecting (1,1) or (1,4).
    pub fn strong_field(sign: f64) -> f64 {
        2.0 * Self::TRICRITICAL_XI * sign.signum()
    }

    /// Cardy state realized at the ends: (2,1) for h_b = 0, (1,1) for h_b > 0,
    /// (1,4) for h_b < 0.
    pub fn boundary_label(&self) -> KacLabel {
        if self.h_b == 0.0 {
            KacLabel::new(2, 1)
        } else if self.h_b > 0.0 {
            KacLabel::new(1, 1)
        } else {
            KacLabel::new(1, 4)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma_bc, self.xi, self.h_b];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("Blume-Capel parameters must be finite"));
        }
        Ok(())
    }
}

/// Nearest-neighbour MPO with bond dimension 3.
pub fn build_bc_mpo(params: &BlumeCapelParams, length: usize) -> Result<Mpo> {
    params.validate()?;
    if length < 2 {
        return Err(Error::domain("the Blume-Capel chain needs L >= 2"));
    }
    let (sx, sz) = spin1_matrices();
    let onsite = params.xi * (params.alpha * sx.dot(&sx) + params.beta * &sz + params.gamma_bc * sz.dot(&sz));
    let mut b = MpoBuilder::new(3, length);
    let x = b.op(sx)?;
    let local = b.op(onsite)?;
    for j in 0..length {
        b.add(j, 1.0, &[local])?;
    }
    for j in 0..length - 1 {
        b.add(j, -params.xi, &[x, x])?;
    }
    b.add(0, -params.h_b, &[x])?;
    b.add(length - 1, -params.h_b, &[x])?;
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{dense_symmetric_eigen, DenseTensor};

    fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let (n, m) = (a.nrows(), b.nrows());
        Array2::from_shape_fn((n * m, n * m), |(i, j)| a[[i / m, j / m]] * b[[i % m, j % m]])
    }

    fn at(op: &Array2<f64>, j: usize, l: usize) -> Array2<f64> {
        let eye = Array2::<f64>::eye(3);
        (0..l).fold(Array2::eye(1), |acc, k| kron(&acc, if k == j { op } else { &eye }))
    }

    fn direct(params: &BlumeCapelParams, l: usize) -> Array2<f64> {
        let (sx, sz) = spin1_matrices();
        let n = 3usize.pow(l as u32);
        let mut h = Array2::<f64>::zeros((n, n));
        for j in 0..l {
            let x = at(&sx, j, l);
            let z = at(&sz, j, l);
            h = h + params.xi * (params.alpha * x.dot(&x) + params.beta * &z + params.gamma_bc * z.dot(&z));
            if j + 1 < l {
                h = h - params.xi * x.dot(&at(&sx, j + 1, l));
            }
        }
        h - params.h_b * (at(&sx, 0, l) + at(&sx, l - 1, l))
    }

    #[test]
    fn spin_one_algebra() {
        let (sx, sz) = spin1_matrices();
        assert!((sx.dot(&sx).diag().sum() - 2.0).abs() < 1e-15);
        assert!((sz.dot(&sz).diag().sum() - 2.0).abs() < 1e-15);
        let (vals, _) = dense_symmetric_eigen(&DenseTensor::from_array2(sx.clone())).unwrap();
        for (v, e) in vals.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
        let comm = sz.dot(&sx) - sx.dot(&sz);
        assert!((comm.iter().fold(0.0f64, |m, v| m.max(v.abs())) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // |[S^z, S^x]| = |i S^y|, whose largest matrix element is 1/sqrt(2); its norm is 1
        let (vals, _) = dense_symmetric_eigen(&DenseTensor::from_array2(comm.t().dot(&comm))).unwrap();
        assert!((vals[2].sqrt() - 1.0).abs() < 1e-14);
        let f = spin_flip();
        assert!((f.dot(&sx).dot(&f) + &sx).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn two_site_ising_ground_energy() {
        let params = BlumeCapelParams {
            alpha: 0.0,
            beta: 0.0,
            gamma_bc: 0.0,
            xi: 1.0,
            h_b: 0.0,
        };
        let mpo = build_bc_mpo(&params, 2).unwrap();
        let (vals, _) = dense_symmetric_eigen(&mpo.to_dense().unwrap()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn mpo_matches_direct_assembly() {
        for h_b in [0.0, 0.7, -3.0] {
            let params = BlumeCapelParams::tricritical(h_b);
            for l in [2, 3, 5] {
                let mpo = build_bc_mpo(&params, l).unwrap();
                assert!(mpo.max_bond_dim() <= 3);
                let d = mpo.to_dense().unwrap();
                assert!(d.max_abs_diff(&DenseTensor::from_array2(direct(&params, l))) < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_commutes_with_spin_flip() {
        let l = 8;
        let h = build_bc_mpo(&BlumeCapelParams::tricritical(0.0), l).unwrap().to_sparse().unwrap();
        let sign = |mut code: usize| {
            let mut s = 1.0;
            for _ in 0..l {
                if code % 3 != 1 {
                    s = -s;
                }
                code /= 3;
            }
            s
        };
        for i in 0..h.dim() {
            for (j, v) in h.row(i) {
                assert!((sign(i) * v - v * sign(j)).abs() < 1e-12);
            }
        }
        let h = build_bc_mpo(&BlumeCapelParams::tricritical(1.0), 4).unwrap().to_sparse().unwrap();
        let broken = (0..h.dim()).any(|i| h.row(i).any(|(j, v)| v != 0.0 && sign(i) != sign(j)));
        assert!(broken);
    }

    #[test]
    fn boundary_labels() {
        assert_eq!(BlumeCapelParams::tricritical(0.0).boundary_label(), KacLabel::new(2, 1));
        let strong = BlumeCapelParams::strong_field(1.0);
        assert_eq!(BlumeCapelParams::tricritical(strong).boundary_label(), KacLabel::new(1, 1));
        assert_eq!(BlumeCapelParams::tricritical(-strong).boundary_label(), KacLabel::new(1, 4));
        assert!((strong - 2.0 / 0.56557).abs() < 1e-15);
    }
}
