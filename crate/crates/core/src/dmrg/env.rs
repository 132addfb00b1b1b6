//! Environment tensors and the two-site effective Hamiltonian.
//!
//! An environment holds one `χ × χ` matrix per MPO channel of its bond, indexed
//! `[bra, ket]`. Channels that are exactly zero are stored as `None` and skipped,
//! as are zero physical slices of the wavefunction, so the constrained RSOS
//! sector costs only its allowed height pairs.

use std::collections::BTreeMap;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use super::mps::MpsSite;
use crate::mpo::MpoSite;

pub(crate) type Env = Vec<Option<Array2<f64>>>;

pub(crate) fn boundary_env() -> Env {
    vec![Some(Array2::ones((1, 1)))]
}

fn add_into(slot: &mut Option<Array2<f64>>, coef: f64, m: &Array2<f64>) {
    match slot {
        Some(acc) => acc.scaled_add(coef, m),
        None => *slot = Some(m * coef),
    }
}

fn prune(env: Env) -> Env {
    env.into_iter()
        .map(|e| e.filter(|m| m.iter().any(|&x| x != 0.0)))
        .collect()
}

/// Environment of the right bond of `site` from the environment of its left bond.
pub(crate) fn extend_left(env: &Env, site: &MpsSite, w: &MpoSite) -> Env {
    let d = site.d();
    let nonzero: Vec<bool> = (0..d).map(|s| !site.slice_is_zero(s)).collect();
    let mut t: BTreeMap<(usize, usize), Array2<f64>> = BTreeMap::new();
    let mut m: Vec<Option<Array2<f64>>> = vec![None; w.right_dim * d];
    for e in &w.entries {
        let Some(l) = &env[e.left] else { continue };
        for si in (0..d).filter(|&s| nonzero[s]) {
            for so in (0..d).filter(|&s| nonzero[s]) {
                let o = e.op[[so, si]];
                if o == 0.0 {
                    continue;
                }
                let ti = t.entry((e.left, si)).or_insert_with(|| l.dot(&site.slice(si)));
                add_into(&mut m[e.right * d + so], o, ti);
            }
        }
    }
    let out = (0..w.right_dim)
        .map(|wr| {
            let mut acc: Option<Array2<f64>> = None;
            for so in 0..d {
                if let Some(mm) = &m[wr * d + so] {
                    add_into(&mut acc, 1.0, &site.slice(so).t().dot(mm));
                }
            }
            acc
        })
        .collect();
    prune(out)
}

/// Environment of the left bond of `site` from the environment of its right bond.
pub(crate) fn extend_right(env: &Env, site: &MpsSite, w: &MpoSite) -> Env {
    let d = site.d();
    let nonzero: Vec<bool> = (0..d).map(|s| !site.slice_is_zero(s)).collect();
    let mut t: BTreeMap<(usize, usize), Array2<f64>> = BTreeMap::new();
    let mut m: Vec<Option<Array2<f64>>> = vec![None; w.left_dim * d];
    for e in &w.entries {
        let Some(r) = &env[e.right] else { continue };
        for si in (0..d).filter(|&s| nonzero[s]) {
            for so in (0..d).filter(|&s| nonzero[s]) {
                let o = e.op[[so, si]];
                if o == 0.0 {
                    continue;
                }
                let ti = t.entry((e.right, si)).or_insert_with(|| r.dot(&site.slice(si).t()));
                add_into(&mut m[e.left * d + so], o, ti);
            }
        }
    }
    let out = (0..w.left_dim)
        .map(|wl| {
            let mut acc: Option<Array2<f64>> = None;
            for so in 0..d {
                if let Some(mm) = &m[wl * d + so] {
                    add_into(&mut acc, 1.0, &site.slice(so).dot(mm));
                }
            }
            acc
        })
        .collect();
    prune(out)
}

#[derive(Debug, Clone, Copy)]
struct Term {
    wl: usize,
    wr: usize,
    ko: usize,
    ki: usize,
    val: f64,
}

/// `L ⊗ W_i W_{i+1} ⊗ R` acting on a two-site wavefunction stored as `d²`
/// blocks `θ[s1·d + s2]` of shape `χl × χr`.
pub(crate) struct TwoSiteOperator<'a> {
    left: &'a Env,
    right: &'a Env,
    terms: Vec<Term>,
    d: usize,
    chi_l: usize,
    chi_r: usize,
}

impl<'a> TwoSiteOperator<'a> {
    pub(crate) fn new(left: &'a Env, w1: &MpoSite, w2: &MpoSite, right: &'a Env, d: usize, chi_l: usize, chi_r: usize) -> Self {
        let mut acc: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        for e1 in w1.entries.iter().filter(|e| left[e.left].is_some()) {
            for e2 in w2.entries.iter().filter(|e| e.left == e1.right && right[e.right].is_some()) {
                for ((s1o, s1i), &a) in e1.op.indexed_iter() {
                    if a == 0.0 {
                        continue;
                    }
                    for ((s2o, s2i), &b) in e2.op.indexed_iter() {
                        if b != 0.0 {
                            *acc.entry((e1.left, e2.right, s1o * d + s2o, s1i * d + s2i)).or_insert(0.0) += a * b;
                        }
                    }
                }
            }
        }
        let terms = acc
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((wl, wr, ko, ki), val)| Term { wl, wr, ko, ki, val })
            .collect();
        Self {
            left,
            right,
            terms,
            d,
            chi_l,
            chi_r,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.d * self.d * self.chi_l * self.chi_r
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dd = self.d * self.d;
        let block = self.chi_l * self.chi_r;
        let view = |k: usize| ArrayView2::from_shape((self.chi_l, self.chi_r), &x[k * block..(k + 1) * block]).unwrap();
        let live: Vec<bool> = (0..dd).map(|k| x[k * block..(k + 1) * block].iter().any(|&v| v != 0.0)).collect();
        let nwl = self.left.len();
        let nwr = self.right.len();
        let mut t1: Vec<Option<Array2<f64>>> = vec![None; nwl * dd];
        let mut t2: Vec<Option<Array2<f64>>> = vec![None; nwr * dd];
        for t in &self.terms {
            if !live[t.ki] {
                continue;
            }
            let slot = t.wl * dd + t.ki;
            if t1[slot].is_none() {
                let l = self.left[t.wl].as_ref().expect("terms only reference live channels");
                t1[slot] = Some(l.dot(&view(t.ki)));
            }
            let src = t1[slot].as_ref().unwrap();
            add_into(&mut t2[t.wr * dd + t.ko], t.val, src);
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for wr in 0..nwr {
            let Some(r) = &self.right[wr] else { continue };
            for ko in 0..dd {
                if let Some(m) = &t2[wr * dd + ko] {
                    let mut out = ArrayViewMut2::from_shape((self.chi_l, self.chi_r), &mut y[ko * block..(ko + 1) * block]).unwrap();
                    general_mat_mul(1.0, m, &r.t(), 1.0, &mut out);
                }
            }
        }
    }
}

/// Density-matrix perturbation terms for a right move: for every MPO channel
/// `w` of the bond between the two sites, `Σ L[wl] W_i[wl, w] θ` as a
/// `(d·χl) × (d·χr)` matrix with the same row/column layout as `theta`.
pub(crate) fn mixer_terms_right(left: &Env, w: &MpoSite, theta: &Array2<f64>, d: usize, chi_l: usize) -> Vec<Array2<f64>> {
    let rows = |s: usize| theta.slice(ndarray::s![s * chi_l..(s + 1) * chi_l, ..]);
    let live: Vec<bool> = (0..d).map(|s| rows(s).iter().any(|&x| x != 0.0)).collect();
    let mut t: BTreeMap<(usize, usize), Array2<f64>> = BTreeMap::new();
    let mut out: Vec<Option<Array2<f64>>> = vec![None; w.right_dim];
    for e in &w.entries {
        let Some(l) = &left[e.left] else { continue };
        for si in (0..d).filter(|&s| live[s]) {
            for so in 0..d {
                let o = e.op[[so, si]];
                if o == 0.0 {
                    continue;
                }
                let ti = t.entry((e.left, si)).or_insert_with(|| l.dot(&rows(si)));
                let p = out[e.right].get_or_insert_with(|| Array2::zeros(theta.dim()));
                p.slice_mut(ndarray::s![so * chi_l..(so + 1) * chi_l, ..]).scaled_add(o, ti);
            }
        }
    }
    out.into_iter().flatten().collect()
}

/// Left-move counterpart: `Σ W_{i+1}[w, wr] R[wr] θ` for every channel `w`.
pub(crate) fn mixer_terms_left(right: &Env, w: &MpoSite, theta: &Array2<f64>, d: usize, chi_r: usize) -> Vec<Array2<f64>> {
    let cols = |s: usize| theta.slice(ndarray::s![.., s * chi_r..(s + 1) * chi_r]);
    let live: Vec<bool> = (0..d).map(|s| cols(s).iter().any(|&x| x != 0.0)).collect();
    let mut t: BTreeMap<(usize, usize), Array2<f64>> = BTreeMap::new();
    let mut out: Vec<Option<Array2<f64>>> = vec![None; w.left_dim];
    for e in &w.entries {
        let Some(r) = &right[e.right] else { continue };
        for si in (0..d).filter(|&s| live[s]) {
            for so in 0..d {
                let o = e.op[[so, si]];
                if o == 0.0 {
                    continue;
                }
                let ti = t.entry((e.right, si)).or_insert_with(|| cols(si).dot(&r.t()));
                let p = out[e.left].get_or_insert_with(|| Array2::zeros(theta.dim()));
                p.slice_mut(ndarray::s![.., so * chi_r..(so + 1) * chi_r]).scaled_add(o, ti);
            }
        }
    }
    out.into_iter().flatten().collect()
}
