//! Matrix product operators built from a finite-state description.
//!
//! Every bond carries two fixed channels, `START` (nothing placed yet) and
//! `DONE` (a term has been completed), plus one channel per distinct operator
//! prefix of a multi-site term. Prefix channels carry unit weight; the term's
//! coefficient sits on its last factor, so terms that share a prefix can share
//! the channel even when their coefficients differ from site to site.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::tensor::DenseTensor;

/// One nonzero block `W[left, right]` of a site tensor; `op[[out, in]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpoEntry {
    pub left: usize,
    pub right: usize,
    pub op: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpoSite {
    pub left_dim: usize,
    pub right_dim: usize,
    pub entries: Vec<MpoEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    d: usize,
    sites: Vec<MpoSite>,
}

impl Mpo {
    pub fn new(d: usize, sites: Vec<MpoSite>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::domain("an MPO needs at least one site"));
        }
        if sites[0].left_dim != 1 || sites[sites.len() - 1].right_dim != 1 {
            return Err(Error::shape("MPO boundary bonds must have dimension 1"));
        }
        for (i, w) in sites.windows(2).enumerate() {
            if w[0].right_dim != w[1].left_dim {
                return Err(Error::shape(format!("bond {i} dimension mismatch")));
            }
        }
        for site in &sites {
            for e in &site.entries {
                if e.left >= site.left_dim || e.right >= site.right_dim || e.op.dim() != (d, d) {
                    return Err(Error::shape("MPO entry out of range"));
                }
            }
        }
        Ok(Self { d, sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn site(&self, i: usize) -> &MpoSite {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[MpoSite] {
        &self.sites
    }

    /// Largest bond dimension.
    pub fn max_bond_dim(&self) -> usize {
        self.sites.iter().map(|s| s.right_dim).max().unwrap_or(1)
    }

    /// `⟨out| W |in⟩` between two product configurations.
    pub fn element(&self, out: &[usize], inp: &[usize]) -> f64 {
        let mut v = vec![1.0];
        for (i, site) in self.sites.iter().enumerate() {
            let mut next = vec![0.0; site.right_dim];
            for e in &site.entries {
                let a = e.op[[out[i], inp[i]]];
                if a != 0.0 && v[e.left] != 0.0 {
                    next[e.right] += v[e.left] * a;
                }
            }
            v = next;
        }
        v[0]
    }

    /// Full operator on the `d^L` product space, configurations numbered with
    /// site 0 as the most significant digit.
    pub fn to_sparse(&self) -> Result<CsrMatrix> {
        let n = self.d.checked_pow(self.len() as u32).filter(|&n| n <= 1 << 24).ok_or_else(|| {
            Error::domain(format!("{}^{} states is too many for a sparse matrix", self.d, self.len()))
        })?;
        let mut triplets = Vec::new();
        let mut digits = vec![0usize; self.len()];
        for col in 0..n {
            let mut rest = col;
            for k in (0..self.len()).rev() {
                digits[k] = rest % self.d;
                rest /= self.d;
            }
            self.expand(0, 0, 0, 1.0, &digits, col, &mut triplets);
        }
        CsrMatrix::from_triplets(n, triplets)
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        site: usize,
        channel: usize,
        row: usize,
        amp: f64,
        inp: &[usize],
        col: usize,
        out: &mut Vec<(usize, usize, f64)>,
    ) {
        if site == self.len() {
            out.push((row, col, amp));
            return;
        }
        for e in self.sites[site].entries.iter().filter(|e| e.left == channel) {
            for s_out in 0..self.d {
                let a = e.op[[s_out, inp[site]]];
                if a != 0.0 {
                    self.expand(site + 1, e.right, row * self.d + s_out, amp * a, inp, col, out);
                }
            }
        }
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        Ok(self.to_sparse()?.to_dense())
    }
}

/// Handle to an operator registered with an [`MpoBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpId(usize);

#[derive(Debug, Clone)]
struct Term {
    start: usize,
    coef: f64,
    ops: Vec<OpId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Channel {
    Start,
    Done,
    Prefix(usize),
}

/// Sums of operator strings `coef · o_0 ⊗ o_1 ⊗ …` placed on consecutive sites.
#[derive(Debug, Clone)]
pub struct MpoBuilder {
    d: usize,
    len: usize,
    ops: Vec<Array2<f64>>,
    terms: Vec<Term>,
}

impl MpoBuilder {
    pub fn new(d: usize, len: usize) -> Self {
        Self {
            d,
            len,
            ops: Vec::new(),
            terms: Vec::new(),
        }
    }

    /// Registers a `d × d` operator. Registering the same matrix twice gives two
    /// handles whose prefixes are not shared.
    pub fn op(&mut self, m: Array2<f64>) -> Result<OpId> {
        if m.dim() != (self.d, self.d) {
            return Err(Error::shape(format!("operator is {:?}, expected {1}x{1}", m.dim(), self.d)));
        }
        self.ops.push(m);
        Ok(OpId(self.ops.len() - 1))
    }

    pub fn add(&mut self, start: usize, coef: f64, ops: &[OpId]) -> Result<()> {
        if ops.is_empty() || start + ops.len() > self.len {
            return Err(Error::domain(format!(
                "term of length {} at site {start} does not fit in {} sites",
                ops.len(),
                self.len
            )));
        }
        if ops.iter().any(|o| o.0 >= self.ops.len()) {
            return Err(Error::domain("unknown operator handle"));
        }
        if coef != 0.0 {
            self.terms.push(Term {
                start,
                coef,
                ops: ops.to_vec(),
            });
        }
        Ok(())
    }

    pub fn build(self) -> Result<Mpo> {
        let n = self.len;
        if n == 0 {
            return Err(Error::domain("an MPO needs at least one site"));
        }
        let mut prefix_ids: BTreeMap<Vec<OpId>, usize> = BTreeMap::new();
        let mut bond_channels: Vec<BTreeSet<Channel>> =
            vec![BTreeSet::from([Channel::Start, Channel::Done]); n.saturating_sub(1)];
        for t in &self.terms {
            for m in 1..t.ops.len() {
                let next = prefix_ids.len();
                let id = *prefix_ids.entry(t.ops[..m].to_vec()).or_insert(next);
                bond_channels[t.start + m - 1].insert(Channel::Prefix(id));
            }
        }
        let index = |bond: Option<usize>, first: bool, c: Channel| -> usize {
            match bond {
                Some(b) => bond_channels[b].iter().position(|x| *x == c).expect("channel registered"),
                // outer boundary bonds carry a single channel
                None => {
                    debug_assert!(if first { c == Channel::Start } else { c == Channel::Done });
                    0
                }
            }
        };
        let left_bond = |i: usize| if i == 0 { None } else { Some(i - 1) };
        let right_bond = |i: usize| if i + 1 == n { None } else { Some(i) };

        let mut blocks: Vec<BTreeMap<(usize, usize), Array2<f64>>> = vec![BTreeMap::new(); n];
        let eye = Array2::<f64>::eye(self.d);
        // prefix blocks are shared and stored once; completing blocks accumulate
        let mut put = |site: usize, l: Channel, r: Channel, op: Array2<f64>| {
            let li = index(left_bond(site), true, l);
            let ri = index(right_bond(site), false, r);
            let entry = blocks[site].entry((li, ri));
            if matches!(r, Channel::Prefix(_)) {
                entry.or_insert(op);
            } else {
                entry.and_modify(|acc| *acc += &op).or_insert(op);
            }
        };
        for i in 0..n {
            if i + 1 < n {
                put(i, Channel::Start, Channel::Start, eye.clone());
            }
            if i > 0 {
                put(i, Channel::Done, Channel::Done, eye.clone());
            }
        }
        for t in &self.terms {
            let k = t.ops.len();
            for m in 0..k {
                let l = if m == 0 { Channel::Start } else { Channel::Prefix(prefix_ids[&t.ops[..m]]) };
                let r = if m + 1 == k { Channel::Done } else { Channel::Prefix(prefix_ids[&t.ops[..m + 1]]) };
                let mut op = self.ops[t.ops[m].0].clone();
                if m + 1 == k {
                    op *= t.coef;
                }
                put(t.start + m, l, r, op);
            }
        }

        let sites = (0..n)
            .map(|i| MpoSite {
                left_dim: left_bond(i).map_or(1, |b| bond_channels[b].len()),
                right_dim: right_bond(i).map_or(1, |b| bond_channels[b].len()),
                entries: std::mem::take(&mut blocks[i])
                    .into_iter()
                    .filter(|(_, op)| op.iter().any(|&x| x != 0.0))
                    .map(|((left, right), op)| MpoEntry { left, right, op })
                    .collect(),
            })
            .collect();
        Mpo::new(self.d, sites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let (n, m) = (a.nrows(), b.nrows());
        Array2::from_shape_fn((n * m, n * m), |(i, j)| a[[i / m, j / m]] * b[[i % m, j % m]])
    }

    #[test]
    fn two_site_ising_matches_kronecker_oracle() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let z = array![[1.0, 0.0], [0.0, -1.0]];
        let eye = Array2::<f64>::eye(2);
        let mut b = MpoBuilder::new(2, 3);
        let xo = b.op(x.clone()).unwrap();
        let zo = b.op(z.clone()).unwrap();
        for i in 0..2 {
            b.add(i, -1.0 - i as f64, &[xo, xo]).unwrap();
        }
        for i in 0..3 {
            b.add(i, 0.5, &[zo]).unwrap();
        }
        let mpo = b.build().unwrap();
        assert_eq!(mpo.max_bond_dim(), 3);

        let mut h = -1.0 * kron(&kron(&x, &x), &eye) - 2.0 * kron(&eye, &kron(&x, &x));
        for i in 0..3 {
            let ops: Vec<_> = (0..3).map(|k| if k == i { z.clone() } else { eye.clone() }).collect();
            h = h + 0.5 * kron(&kron(&ops[0], &ops[1]), &ops[2]);
        }
        let dense = mpo.to_dense().unwrap();
        let oracle = DenseTensor::from_array2(h);
        assert!(dense.max_abs_diff(&oracle) < 1e-14);
        for out in 0..8usize {
            for inp in 0..8usize {
                let o = [out >> 2 & 1, out >> 1 & 1, out & 1];
                let i = [inp >> 2 & 1, inp >> 1 & 1, inp & 1];
                assert!((mpo.element(&o, &i) - oracle.get(&[out, inp])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shared_prefix_keeps_coefficients_apart() {
        // a0 ⊗ b + 3 a0 ⊗ c with a shared prefix channel
        let a = array![[1.0, 0.0], [0.0, 0.0]];
        let bm = array![[0.0, 1.0], [1.0, 0.0]];
        let cm = array![[0.0, 0.0], [0.0, 1.0]];
        let mut b = MpoBuilder::new(2, 2);
        let (ao, bo, co) = (b.op(a.clone()).unwrap(), b.op(bm.clone()).unwrap(), b.op(cm.clone()).unwrap());
        b.add(0, 1.0, &[ao, bo]).unwrap();
        b.add(0, 3.0, &[ao, co]).unwrap();
        let mpo = b.build().unwrap();
        assert_eq!(mpo.site(0).right_dim, 3);
        let oracle = kron(&a, &bm) + 3.0 * kron(&a, &cm);
        assert!(mpo.to_dense().unwrap().max_abs_diff(&DenseTensor::from_array2(oracle)) < 1e-15);
    }

    #[test]
    fn terms_must_fit() {
        let mut b = MpoBuilder::new(2, 2);
        let o = b.op(Array2::eye(2)).unwrap();
        assert!(b.add(1, 1.0, &[o, o]).is_err());
        assert!(b.op(Array2::eye(3)).is_err());
    }
}
