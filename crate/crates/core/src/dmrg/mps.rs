use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::EntanglementSpectrum;
use crate::tensor::svd_nonzero;

/// Singular values below this fraction of the largest are dropped when the
/// orthogonality center moves.
pub(crate) const GAUGE_FLOOR: f64 = 1e-15;

/// One site tensor `A[a, s, b]`, stored as the `d` slices `A[·, s, ·]`
/// stacked vertically: row `s·χl + a`, column `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsSite {
    pub(crate) data: Array2<f64>,
    pub(crate) chi_l: usize,
}

impl MpsSite {
    pub fn new(data: Array2<f64>, chi_l: usize) -> Result<Self> {
        if chi_l == 0 || data.nrows() % chi_l != 0 || data.ncols() == 0 {
            return Err(Error::shape(format!("site tensor {:?} with left bond {chi_l}", data.dim())));
        }
        Ok(Self { data, chi_l })
    }

    pub fn chi_l(&self) -> usize {
        self.chi_l
    }

    pub fn chi_r(&self) -> usize {
        self.data.ncols()
    }

    pub fn d(&self) -> usize {
        self.data.nrows() / self.chi_l
    }

    pub fn slice(&self, s: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![s * self.chi_l..(s + 1) * self.chi_l, ..])
    }

    pub fn slice_is_zero(&self, s: usize) -> bool {
        self.slice(s).iter().all(|&x| x == 0.0)
    }

    /// `χl × (d·χr)` with column `s·χr + b`.
    pub(crate) fn wide(&self) -> Array2<f64> {
        let (cl, cr) = (self.chi_l, self.chi_r());
        let mut m = Array2::zeros((cl, self.d() * cr));
        for s in 0..self.d() {
            m.slice_mut(s![.., s * cr..(s + 1) * cr]).assign(&self.slice(s));
        }
        m
    }

    pub(crate) fn from_wide(m: &Array2<f64>, d: usize) -> Self {
        let (cl, cr) = (m.nrows(), m.ncols() / d);
        let mut data = Array2::zeros((d * cl, cr));
        for s in 0..d {
            data.slice_mut(s![s * cl..(s + 1) * cl, ..]).assign(&m.slice(s![.., s * cr..(s + 1) * cr]));
        }
        Self { data, chi_l: cl }
    }
}

/// Matrix product state with an orthogonality center.
#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    pub(crate) sites: Vec<MpsSite>,
    pub(crate) center: usize,
}

/// Serializable copy of the shapes, used by checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpsShape {
    pub d: usize,
    pub center: usize,
    /// `(χl, χr)` per site.
    pub bonds: Vec<(usize, usize)>,
}

impl Mps {
    /// Bond-dimension-one state `⊗_j |config_j⟩`.
    pub fn product(d: usize, config: &[usize]) -> Result<Self> {
        if config.is_empty() || config.iter().any(|&c| c >= d) {
            return Err(Error::domain("product state needs at least one site and levels below d"));
        }
        let sites = config
            .iter()
            .map(|&c| MpsSite {
                data: Array2::from_shape_fn((d, 1), |(s, _)| if s == c { 1.0 } else { 0.0 }),
                chi_l: 1,
            })
            .collect();
        Ok(Self { sites, center: 0 })
    }

    /// Bond-dimension-one state `⊗_j |v_j⟩` with arbitrary local vectors.
    pub fn product_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::shape("local vectors must share a nonzero dimension"));
        }
        let sites = vectors
            .iter()
            .map(|v| MpsSite {
                data: Array2::from_shape_fn((d, 1), |(s, _)| v[s]),
                chi_l: 1,
            })
            .collect();
        let mut mps = Self { sites, center: 0 };
        mps.canonicalize()?;
        Ok(mps)
    }

    /// Equal-weight superposition of two product states, bond dimension two.
    pub fn cat(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let d = a.first().map_or(0, Vec::len);
        if n < 2 || b.len() != n || a.iter().chain(b).any(|v| v.len() != d) {
            return Err(Error::shape("cat state needs two product states of equal shape, L >= 2"));
        }
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let (cl, cr) = (if j == 0 { 1 } else { 2 }, if j + 1 == n { 1 } else { 2 });
            let mut data = Array2::zeros((d * cl, cr));
            for s in 0..d {
                for (branch, v) in [a, b].iter().enumerate() {
                    let l = if cl == 1 { 0 } else { branch };
                    let r = if cr == 1 { 0 } else { branch };
                    data[[s * cl + l, r]] += v[j][s];
                }
            }
            sites.push(MpsSite { data, chi_l: cl });
        }
        let mut mps = Self { sites, center: 0 };
        mps.canonicalize()?;
        Ok(mps)
    }

    pub fn from_sites(sites: Vec<MpsSite>, center: usize) -> Result<Self> {
        if sites.is_empty() || center >= sites.len() {
            return Err(Error::shape("MPS needs at least one site and a center inside the chain"));
        }
        let d = sites[0].d();
        if sites[0].chi_l != 1 || sites[sites.len() - 1].chi_r() != 1 {
            return Err(Error::shape("MPS boundary bonds must have dimension 1"));
        }
        for (i, w) in sites.windows(2).enumerate() {
            if w[0].chi_r() != w[1].chi_l || w[1].d() != d {
                return Err(Error::shape(format!("bond {i} mismatch")));
            }
        }
        Ok(Self { sites, center })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.sites[0].d()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, i: usize) -> &MpsSite {
        &self.sites[i]
    }

    /// Dimensions of the `L − 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(MpsSite::chi_r).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn shape(&self) -> MpsShape {
        MpsShape {
            d: self.local_dim(),
            center: self.center,
            bonds: self.sites.iter().map(|s| (s.chi_l, s.chi_r())).collect(),
        }
    }

    /// Norm, read off the center tensor.
    pub fn norm(&self) -> f64 {
        self.sites[self.center].data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Brings the state to canonical form with center 0 and unit norm, without
    /// assuming any prior gauge.
    pub fn canonicalize(&mut self) -> Result<()> {
        for i in 0..self.len() - 1 {
            self.center = i;
            self.shift_right()?;
        }
        self.center = self.len() - 1;
        self.normalize()?;
        self.move_center(0)?;
        self.normalize()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::numeric(format!("cannot normalize a state of norm {n}")));
        }
        self.sites[self.center].data /= n;
        Ok(())
    }

    pub fn move_center(&mut self, to: usize) -> Result<()> {
        if to >= self.len() {
            return Err(Error::domain(format!("center {to} outside the chain")));
        }
        while self.center < to {
            self.shift_right()?;
        }
        while self.center > to {
            self.shift_left()?;
        }
        Ok(())
    }

    fn shift_right(&mut self) -> Result<()> {
        let i = self.center;
        let d = self.local_dim();
        let (u, sv, vt) = svd_nonzero(self.sites[i].data.view())?;
        let k = kept(&sv);
        self.sites[i] = MpsSite {
            data: u.slice(s![.., ..k]).to_owned(),
            chi_l: self.sites[i].chi_l,
        };
        let mut sv_t = vt.slice(s![..k, ..]).to_owned();
        for (mut row, &x) in sv_t.rows_mut().into_iter().zip(&sv) {
            row *= x;
        }
        let next = &self.sites[i + 1];
        let mut data = Array2::zeros((d * k, next.chi_r()));
        for s in 0..d {
            data.slice_mut(s![s * k..(s + 1) * k, ..]).assign(&sv_t.dot(&next.slice(s)));
        }
        self.sites[i + 1] = MpsSite { data, chi_l: k };
        self.center = i + 1;
        Ok(())
    }

    fn shift_left(&mut self) -> Result<()> {
        let i = self.center;
        let d = self.local_dim();
        let (u, sv, vt) = svd_nonzero(self.sites[i].wide().view())?;
        let k = kept(&sv);
        self.sites[i] = MpsSite::from_wide(&vt.slice(s![..k, ..]).to_owned(), d);
        let mut us = u.slice(s![.., ..k]).to_owned();
        for (mut col, &x) in us.columns_mut().into_iter().zip(&sv) {
            col *= x;
        }
        let prev = &self.sites[i - 1];
        let cl = prev.chi_l;
        let mut data = Array2::zeros((d * cl, k));
        for s in 0..d {
            data.slice_mut(s![s * cl..(s + 1) * cl, ..]).assign(&prev.slice(s).dot(&us));
        }
        self.sites[i - 1] = MpsSite { data, chi_l: cl };
        self.center = i - 1;
        Ok(())
    }

    /// Schmidt spectrum for the left `cut` sites. Moves the center to `cut − 1`.
    ///
    /// With `labelled`, each Schmidt value carries the level of site `cut − 1`
    /// (plus one, i.e. the RSOS height) that dominates its left vector.
    pub fn schmidt_at(&mut self, cut: usize, labelled: bool) -> Result<EntanglementSpectrum> {
        if cut == 0 || cut >= self.len() {
            return Err(Error::domain(format!("cut {cut} outside 1..={}", self.len() - 1)));
        }
        self.move_center(cut - 1)?;
        let site = &self.sites[cut - 1];
        let (u, sv, _) = svd_nonzero(site.data.view())?;
        let labels = labelled.then(|| {
            (0..sv.len())
                .map(|k| {
                    let col = u.column(k);
                    let w: Vec<f64> = (0..site.d())
                        .map(|s| col.slice(s![s * site.chi_l..(s + 1) * site.chi_l]).iter().map(|x| x * x).sum())
                        .collect();
                    let best = (0..w.len()).fold(0, |b, s| if w[s] > w[b] { s } else { b });
                    best as u32 + 1
                })
                .collect()
        });
        EntanglementSpectrum::from_singular_values(cut, &sv, labels)
    }

    /// `P(site j in level s)` for every site, rows summing to one.
    pub fn occupation_profile(&mut self) -> Result<Vec<Vec<f64>>> {
        let start = self.center;
        let d = self.local_dim();
        let mut occ = vec![vec![0.0; d]; self.len()];
        self.move_center(0)?;
        for j in 0..self.len() {
            self.move_center(j)?;
            let site = &self.sites[j];
            let total: f64 = site.data.iter().map(|x| x * x).sum();
            for (s, o) in occ[j].iter_mut().enumerate() {
                *o = site.slice(s).iter().map(|x| x * x).sum::<f64>() / total;
            }
        }
        self.move_center(start)?;
        Ok(occ)
    }

    /// ⟨ψ| ⊗_j O_j |ψ⟩ for a product operator.
    pub fn expectation_product(&self, ops: &[Array2<f64>]) -> Result<f64> {
        if ops.len() != self.len() {
            return Err(Error::shape("one operator per site"));
        }
        let mut env = Array2::<f64>::ones((1, 1));
        for (site, op) in self.sites.iter().zip(ops) {
            let d = site.d();
            let mut next = Array2::zeros((site.chi_r(), site.chi_r()));
            for so in 0..d {
                let left = site.slice(so).t().dot(&env);
                for si in 0..d {
                    let o = op[[so, si]];
                    if o != 0.0 {
                        next.scaled_add(o, &left.dot(&site.slice(si)));
                    }
                }
            }
            env = next;
        }
        Ok(env[[0, 0]])
    }

    /// All `d^L` amplitudes, site 0 most significant. Small chains only.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let d = self.local_dim();
        let n = d
            .checked_pow(self.len() as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| Error::domain("too many sites for a dense vector"))?;
        // rows: configurations of the sites seen so far; columns: right bond
        let mut acc = Array2::<f64>::ones((1, 1));
        for site in &self.sites {
            let mut next = Array2::zeros((acc.nrows() * d, site.chi_r()));
            for r in 0..acc.nrows() {
                for s in 0..d {
                    let row = acc.row(r).dot(&site.slice(s));
                    next.row_mut(r * d + s).assign(&row);
                }
            }
            acc = next;
        }
        debug_assert_eq!(acc.nrows(), n);
        Ok(acc.column(0).to_vec())
    }
}

/// Number of singular values above the gauge floor (at least one).
fn kept(sv: &[f64]) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().take_while(|&&x| x > GAUGE_FLOOR * top).count().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mps(d: usize, l: usize, chi: usize, seed: u64) -> Mps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sites = Vec::new();
        for j in 0..l {
            let cl = if j == 0 { 1 } else { chi };
            let cr = if j + 1 == l { 1 } else { chi };
            sites.push(MpsSite::new(Array2::from_shape_fn((d * cl, cr), |_| rng.gen_range(-1.0..1.0)), cl).unwrap());
        }
        Mps::from_sites(sites, 0).unwrap()
    }

    fn is_left_isometry(site: &MpsSite) -> bool {
        let g = site.data.t().dot(&site.data);
        (g - Array2::<f64>::eye(site.chi_r())).iter().all(|x| x.abs() < 1e-10)
    }

    fn is_right_isometry(site: &MpsSite) -> bool {
        let w = site.wide();
        let g = w.dot(&w.t());
        (g - Array2::<f64>::eye(site.chi_l)).iter().all(|x| x.abs() < 1e-10)
    }

    #[test]
    fn canonical_form_and_center_moves_preserve_the_state() {
        let mut mps = random_mps(3, 6, 4, 1);
        let before = mps.to_dense().unwrap();
        let nb: f64 = before.iter().map(|x| x * x).sum::<f64>().sqrt();
        mps.canonicalize().unwrap();
        assert!((mps.norm() - 1.0).abs() < 1e-10);
        for target in [3, 5, 0, 2] {
            mps.move_center(target).unwrap();
            for j in 0..target {
                assert!(is_left_isometry(&mps.sites[j]));
            }
            for j in target + 1..mps.len() {
                assert!(is_right_isometry(&mps.sites[j]));
            }
            let after = mps.to_dense().unwrap();
            let overlap: f64 = after.iter().zip(&before).map(|(a, b)| a * b).sum::<f64>() / nb;
            assert!((overlap.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn product_states() {
        let mut mps = Mps::product(4, &[1, 1, 1, 1, 1]).unwrap();
        assert!((mps.norm() - 1.0).abs() < 1e-15);
        let occ = mps.occupation_profile().unwrap();
        assert!(occ.iter().all(|row| row == &vec![0.0, 1.0, 0.0, 0.0]));
        let s = mps.schmidt_at(2, true).unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert_eq!(s.block_labels, Some(vec![2]));
        assert!(Mps::product(2, &[2]).is_err());
    }

    #[test]
    fn cat_state_has_two_equal_schmidt_values() {
        let up = vec![vec![1.0, 0.0]; 5];
        let down = vec![vec![0.0, 1.0]; 5];
        let mut mps = Mps::cat(&up, &down).unwrap();
        for cut in 1..5 {
            let s = mps.schmidt_at(cut, false).unwrap();
            assert_eq!(s.len(), 2);
            assert!((s.weights[0] - 0.5).abs() < 1e-14);
        }
        let v = mps.to_dense().unwrap();
        assert!((v[0] - v[31]).abs() < 1e-14 && (v[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn schmidt_values_match_dense_svd() {
        let mut mps = random_mps(2, 8, 5, 7);
        mps.canonicalize().unwrap();
        let v = mps.to_dense().unwrap();
        for cut in 1..8 {
            let m = Array2::from_shape_vec((1 << cut, 1 << (8 - cut)), v.clone()).unwrap();
            let oracle = crate::ed::schmidt_tensor(&v, 2, cut).unwrap();
            let s = mps.schmidt_at(cut, false).unwrap();
            assert_eq!(m.nrows(), 1 << cut);
            assert_eq!(s.len(), oracle.len());
            for (a, b) in s.weights.iter().zip(&oracle.weights) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_expectation() {
        let mps = Mps::product_vectors(&[vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let z = ndarray::array![[1.0, 0.0], [0.0, -1.0]];
        let ops = vec![z.clone(), z.clone(), z];
        assert!((mps.expectation_product(&ops).unwrap() - 0.0).abs() < 1e-14);
        let eye = vec![Array2::<f64>::eye(2); 3];
        assert!((mps.expectation_product(&eye).unwrap() - 1.0).abs() < 1e-14);
    }
}
