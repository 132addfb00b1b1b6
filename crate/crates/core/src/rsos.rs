//! A_p RSOS chains built from Temperley–Lieb generators.
//!
//! Heights run over `1..=p`. In the path basis neighbouring heights differ by
//! one; in the tensor-product space every site is a `p`-level system with level
//! `a` stored at index `a − 1`. Both forms use
//!
//! H = −γ/(π sin γ) Σ_{j=1}^{L−2} e_j,  γ = π/(p+1),
//!
//! with e_j acting on site j and projecting its two neighbours onto a common
//! height a: ⟨a b a| e_j |a b' a⟩ = sqrt(φ_b φ_b') / φ_a.

use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cft::KacLabel;
use crate::error::{Error, Result};
use crate::mpo::{Mpo, MpoBuilder};
use crate::sparse::CsrMatrix;

/// Pinning strength used when none is given.
pub const DEFAULT_PIN: f64 = 10.0;

fn check_p(p: u32) -> Result<()> {
    if !(3..=64).contains(&p) {
        return Err(Error::domain(format!("RSOS height count p = {p} outside 3..=64")));
    }
    Ok(())
}

/// φ_a = sqrt(2γ/π) sin(aγ) for a = 1..=p, stored at index a − 1.
pub fn phi_weights(p: u32) -> Result<Vec<f64>> {
    check_p(p)?;
    let gamma = PI / f64::from(p + 1);
    let norm = (2.0 * gamma / PI).sqrt();
    Ok((1..=p).map(|a| norm * (f64::from(a) * gamma).sin()).collect())
}

/// The coupling γ/(π sin γ) in front of the TL sum.
pub fn coupling(p: u32) -> f64 {
    let gamma = PI / f64::from(p + 1);
    gamma / (PI * gamma.sin())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RsosPath {
    heights: Vec<u32>,
}

impl RsosPath {
    pub fn new(p: u32, heights: Vec<u32>) -> Result<Self> {
        check_p(p)?;
        if let Some(a) = heights.iter().find(|&&a| a == 0 || a > p) {
            return Err(Error::domain(format!("height {a} outside 1..={p}")));
        }
        if let Some(i) = heights.windows(2).position(|w| w[0].abs_diff(w[1]) != 1) {
            return Err(Error::domain(format!("heights at sites {i} and {} are not adjacent", i + 1)));
        }
        Ok(Self { heights })
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    /// Π_i (−1)^{a_i}.
    pub fn parity(&self) -> i32 {
        parity_of(&self.heights)
    }
}

fn parity_of(heights: &[u32]) -> i32 {
    if heights.iter().filter(|&&a| a % 2 == 1).count() % 2 == 0 {
        1
    } else {
        -1
    }
}

impl fmt::Display for RsosPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.heights.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsosBcKind {
    /// End height fixed to `s`; the Cardy state (1, s).
    Fixed1s(u32),
    /// End pair fixed to `(r, r+1)`; the Cardy state (r, 1).
    FixedR1(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsosBc {
    pub kind: RsosBcKind,
    /// Pinning strength of the tensor-product realization.
    pub h_b: f64,
}

impl RsosBc {
    pub fn fixed_1s(s: u32) -> Self {
        Self {
            kind: RsosBcKind::Fixed1s(s),
            h_b: DEFAULT_PIN,
        }
    }

    pub fn fixed_r1(r: u32) -> Self {
        Self {
            kind: RsosBcKind::FixedR1(r),
            h_b: DEFAULT_PIN,
        }
    }

    pub fn with_pin(mut self, h_b: f64) -> Self {
        self.h_b = h_b;
        self
    }

    /// Boundary condition realizing Cardy state `x`: labels with r = 1 become
    /// `Fixed1s`, labels with s = 1 become `FixedR1`, after trying the Kac partner.
    pub fn from_kac(p: u32, x: &KacLabel) -> Result<Self> {
        let m = crate::cft::MinimalModel::new(p)?;
        x.validate(&m)?;
        for y in [*x, x.partner(&m)] {
            if y.r == 1 {
                return Ok(Self::fixed_1s(y.s));
            }
            if y.s == 1 {
                return Ok(Self::fixed_r1(y.r));
            }
        }
        Err(Error::domain(format!("{x} has no fixed-height realization (needs r = 1 or s = 1)")))
    }

    pub fn kac_label(&self) -> KacLabel {
        match self.kind {
            RsosBcKind::Fixed1s(s) => KacLabel::new(1, s),
            RsosBcKind::FixedR1(r) => KacLabel::new(r, 1),
        }
    }

    pub fn validate(&self, p: u32) -> Result<()> {
        check_p(p)?;
        match self.kind {
            RsosBcKind::Fixed1s(s) if !(1..=p).contains(&s) => {
                Err(Error::domain(format!("Fixed1s({s}) needs 1 <= s <= {p}")))
            }
            RsosBcKind::FixedR1(r) if !(1..p).contains(&r) => {
                Err(Error::domain(format!("FixedR1({r}) needs 1 <= r <= {}", p - 1)))
            }
            _ if !(self.h_b.is_finite() && self.h_b >= 0.0) => {
                Err(Error::domain(format!("pinning strength {} must be finite and >= 0", self.h_b)))
            }
            _ => Ok(()),
        }
    }

    /// Heights fixed at the chain end, outermost first.
    pub fn end_heights(&self) -> Vec<u32> {
        match self.kind {
            RsosBcKind::Fixed1s(s) => vec![s],
            RsosBcKind::FixedR1(r) => vec![r, r + 1],
        }
    }
}

/// Result of one TL generator acting on one path: `(path, amplitude)` pairs.
pub fn apply_tl(p: u32, path: &RsosPath, j: usize) -> Result<Vec<(RsosPath, f64)>> {
    let phi = phi_weights(p)?;
    let l = path.len();
    if j == 0 || j + 1 >= l {
        return Err(Error::domain(format!("bond {j} needs 1 <= j <= {}", l.saturating_sub(2))));
    }
    let h = path.heights();
    let mut out = Vec::new();
    for (b, amp) in tl_column(p, &phi, h[j - 1], h[j], h[j + 1]) {
        let mut heights = h.to_vec();
        heights[j] = b;
        out.push((RsosPath { heights }, amp));
    }
    Ok(out)
}

/// Nonzero `(b', ⟨a b' a| e |left mid right⟩)` for one three-site window.
fn tl_column(p: u32, phi: &[f64], left: u32, mid: u32, right: u32) -> Vec<(u32, f64)> {
    if left != right || left.abs_diff(mid) != 1 {
        return Vec::new();
    }
    let a = left;
    [a.wrapping_sub(1), a + 1]
        .into_iter()
        .filter(|b| (1..=p).contains(b))
        .map(|b| (b, (phi[mid as usize - 1] * phi[b as usize - 1]).sqrt() / phi[a as usize - 1]))
        .collect()
}

/// Lexicographically ordered RSOS paths with fixed end heights.
///
/// Paths are stored as base-p codes with site 0 most significant, so numeric
/// order is lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathBasis {
    p: u32,
    len: usize,
    codes: Vec<u64>,
}

impl PathBasis {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn sites(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn heights(&self, i: usize) -> Vec<u32> {
        let mut code = self.codes[i];
        let mut h = vec![0u32; self.len];
        for k in (0..self.len).rev() {
            h[k] = (code % u64::from(self.p)) as u32 + 1;
            code /= u64::from(self.p);
        }
        h
    }

    pub fn path(&self, i: usize) -> RsosPath {
        RsosPath { heights: self.heights(i) }
    }

    pub fn index_of(&self, heights: &[u32]) -> Option<usize> {
        if heights.len() != self.len {
            return None;
        }
        self.codes.binary_search(&self.encode(heights)?).ok()
    }

    /// Index of the configuration in the `p^L` tensor-product basis.
    pub fn tensor_index(&self, i: usize) -> u64 {
        self.codes[i]
    }

    fn encode(&self, heights: &[u32]) -> Option<u64> {
        heights.iter().try_fold(0u64, |acc, &a| {
            if a == 0 || a > self.p {
                None
            } else {
                Some(acc * u64::from(self.p) + u64::from(a - 1))
            }
        })
    }
}

/// All RSOS paths of `length` sites compatible with both end conditions.
///
/// Incompatible ends (wrong parity, overlapping pins that disagree) give an
/// empty basis.
pub fn enumerate_paths(p: u32, length: usize, left: &RsosBc, right: &RsosBc) -> Result<PathBasis> {
    left.validate(p)?;
    right.validate(p)?;
    if length == 0 {
        return Err(Error::domain("a chain needs at least one site"));
    }
    if (f64::from(p)).powi(length as i32) >= 2f64.powi(63) {
        return Err(Error::domain(format!("p^L = {p}^{length} does not fit the path encoding")));
    }
    let fixed = end_pins(length, left, right);
    let mut basis = PathBasis {
        p,
        len: length,
        codes: Vec::new(),
    };
    if let Some(fixed) = fixed {
        let mut heights = vec![0u32; length];
        extend_paths(p, &fixed, &mut heights, 0, &mut basis.codes);
    }
    Ok(basis)
}

/// Heights fixed by the two ends, or `None` when the pins disagree.
fn end_pins(length: usize, left: &RsosBc, right: &RsosBc) -> Option<Vec<Option<u32>>> {
    let mut fixed: Vec<Option<u32>> = vec![None; length];
    let ends = left
        .end_heights()
        .into_iter()
        .enumerate()
        .chain(right.end_heights().into_iter().enumerate().map(|(k, a)| (length.wrapping_sub(1 + k), a)));
    for (site, a) in ends {
        if site >= length {
            return None;
        }
        match fixed[site] {
            Some(b) if b != a => return None,
            _ => fixed[site] = Some(a),
        }
    }
    Some(fixed)
}

/// Number of paths [`enumerate_paths`] would return, by transfer matrix, as a
/// float so long chains do not overflow.
pub fn count_paths(p: u32, length: usize, left: &RsosBc, right: &RsosBc) -> Result<f64> {
    left.validate(p)?;
    right.validate(p)?;
    if length == 0 {
        return Err(Error::domain("a chain needs at least one site"));
    }
    let Some(fixed) = end_pins(length, left, right) else {
        return Ok(0.0);
    };
    let allowed = |site: usize, a: usize| fixed[site].is_none_or(|f| f as usize == a);
    let mut w: Vec<f64> = (0..=p as usize).map(|a| if a >= 1 && allowed(0, a) { 1.0 } else { 0.0 }).collect();
    for site in 1..length {
        w = (0..=p as usize)
            .map(|a| {
                if a == 0 || !allowed(site, a) {
                    return 0.0;
                }
                w[a - 1] + w.get(a + 1).copied().unwrap_or(0.0)
            })
            .collect();
    }
    Ok(w.iter().sum())
}

fn reachable(fixed: &[Option<u32>], site: usize, a: u32) -> bool {
    fixed.iter().enumerate().skip(site + 1).all(|(t, f)| match f {
        None => true,
        Some(target) => {
            let dist = (t - site) as u32;
            let gap = a.abs_diff(*target);
            gap <= dist && (dist - gap) % 2 == 0
        }
    })
}

fn extend_paths(p: u32, fixed: &[Option<u32>], heights: &mut [u32], site: usize, out: &mut Vec<u64>) {
    if site == heights.len() {
        out.push(heights.iter().fold(0u64, |acc, &a| acc * u64::from(p) + u64::from(a - 1)));
        return;
    }
    let candidates: Vec<u32> = match (site, fixed[site]) {
        (_, Some(a)) => vec![a],
        (0, None) => (1..=p).collect(),
        _ => vec![heights[site - 1].wrapping_sub(1), heights[site - 1] + 1],
    };
    for a in candidates {
        if !(1..=p).contains(&a) || (site > 0 && heights[site - 1].abs_diff(a) != 1) {
            continue;
        }
        if !reachable(fixed, site, a) {
            continue;
        }
        heights[site] = a;
        extend_paths(p, fixed, heights, site + 1, out);
    }
}

/// e_j on the path basis; images outside the basis are dropped.
pub fn tl_generator(basis: &PathBasis, j: usize) -> Result<CsrMatrix> {
    let p = basis.p();
    let phi = phi_weights(p)?;
    if j == 0 || j + 1 >= basis.sites() {
        return Err(Error::domain(format!("bond {j} out of range")));
    }
    let mut triplets = Vec::new();
    for col in 0..basis.len() {
        let mut h = basis.heights(col);
        for (b, amp) in tl_column(p, &phi, h[j - 1], h[j], h[j + 1]) {
            let keep = h[j];
            h[j] = b;
            if let Some(row) = basis.index_of(&h) {
                triplets.push((row, col, amp));
            }
            h[j] = keep;
        }
    }
    CsrMatrix::from_triplets(basis.len(), triplets)
}

/// H = −γ/(π sin γ) Σ_j e_j on the constrained basis.
///
/// With a `FixedR1` end the pinned pair is frozen in the basis, so the part of
/// e_1 (or e_{L−2}) that would move it is projected out; the diagonal part that
/// keeps it in place stays.
pub fn build_hamiltonian_sparse(p: u32, length: usize, left: &RsosBc, right: &RsosBc) -> Result<(PathBasis, CsrMatrix)> {
    let basis = enumerate_paths(p, length, left, right)?;
    if basis.is_empty() {
        return Err(Error::domain(format!(
            "no RSOS path of length {length} joins {:?} and {:?}",
            left.kind, right.kind
        )));
    }
    let phi = phi_weights(p)?;
    let c = -coupling(p);
    let mut triplets = Vec::new();
    for col in 0..basis.len() {
        let mut h = basis.heights(col);
        for j in 1..length.saturating_sub(1) {
            for (b, amp) in tl_column(p, &phi, h[j - 1], h[j], h[j + 1]) {
                let keep = h[j];
                h[j] = b;
                if let Some(row) = basis.index_of(&h) {
                    triplets.push((row, col, c * amp));
                }
                h[j] = keep;
            }
        }
    }
    let h = CsrMatrix::from_triplets(basis.len(), triplets)?;
    Ok((basis, h))
}

/// How a `FixedR1` end is imposed in the tensor-product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinMode {
    /// e_1 is replaced by its part that leaves the pinned pair in place, so the
    /// pair is conserved; the pinning term only shifts the energy.
    #[default]
    Projected,
    /// The full e_1 plus the finite pinning term −h_b |r, r+1⟩⟨r, r+1|.
    Penalty,
}

/// MPO of the RSOS Hamiltonian on `p`-level sites, including pinning terms.
pub fn build_hamiltonian_mpo(p: u32, length: usize, left: &RsosBc, right: &RsosBc, mode: PinMode) -> Result<Mpo> {
    left.validate(p)?;
    right.validate(p)?;
    if length < 3 {
        return Err(Error::domain("the RSOS chain needs L >= 3"));
    }
    let d = p as usize;
    let phi = phi_weights(p)?;
    let c = -coupling(p);
    let mut b = MpoBuilder::new(d, length);
    let proj: Vec<_> = (0..d)
        .map(|a| b.op(Array2::from_shape_fn((d, d), |(i, j)| if i == a && j == a { 1.0 } else { 0.0 })))
        .collect::<Result<_>>()?;
    let middle: Vec<_> = (1..=p)
        .map(|a| {
            let v: Vec<f64> = (1..=p)
                .map(|x| if x.abs_diff(a) == 1 { phi[x as usize - 1].sqrt() } else { 0.0 })
                .collect();
            b.op(Array2::from_shape_fn((d, d), |(i, j)| v[i] * v[j]))
        })
        .collect::<Result<_>>()?;

    let frozen = |bc: &RsosBc| match (bc.kind, mode) {
        (RsosBcKind::FixedR1(r), PinMode::Projected) => Some(r),
        _ => None,
    };
    for j in 1..length - 1 {
        let pinned = if j == 1 { frozen(left) } else { None }.or(if j == length - 2 { frozen(right) } else { None });
        match pinned {
            Some(r) => {
                let (ri, mi) = (r as usize - 1, r as usize);
                b.add(j - 1, c * phi[mi] / phi[ri], &[proj[ri], proj[mi], proj[ri]])?;
            }
            None => {
                for a in 0..d {
                    b.add(j - 1, c / phi[a], &[proj[a], middle[a], proj[a]])?;
                }
            }
        }
    }
    for (bc, at_left) in [(left, true), (right, false)] {
        if bc.h_b == 0.0 {
            continue;
        }
        match bc.kind {
            RsosBcKind::Fixed1s(s) => {
                let site = if at_left { 0 } else { length - 1 };
                b.add(site, -bc.h_b, &[proj[s as usize - 1]])?;
            }
            RsosBcKind::FixedR1(r) => {
                let (ri, mi) = (proj[r as usize - 1], proj[r as usize]);
                if at_left {
                    b.add(0, -bc.h_b, &[ri, mi])?;
                } else {
                    b.add(length - 2, -bc.h_b, &[mi, ri])?;
                }
            }
        }
    }
    b.build()
}

/// Energy contributed by the pinning terms in the pinned sector; subtract it to
/// compare with [`build_hamiltonian_sparse`].
pub fn pin_offset(left: &RsosBc, right: &RsosBc) -> f64 {
    -(left.h_b + right.h_b)
}
