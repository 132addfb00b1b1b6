use serde::{Deserialize, Serialize};

use super::{conformal_weight, fuse, KacLabel, MinimalModel, Rational};
use crate::error::{Error, Result};

/// Level degeneracies `d_0, d_1, …` of a conformal tower with base weight `h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QSeries {
    pub h: Rational,
    pub coeffs: Vec<u64>,
}

impl QSeries {
    pub fn max_level(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient-wise sum of two series with the same base weight.
    pub fn add(&self, other: &QSeries) -> Result<QSeries> {
        if self.h != other.h {
            return Err(Error::domain(format!(
                "cannot add q-series with base weights {} and {}",
                self.h, other.h
            )));
        }
        let n = self.coeffs.len().min(other.coeffs.len());
        Ok(QSeries {
            h: self.h,
            coeffs: (0..n).map(|i| self.coeffs[i] + other.coeffs[i]).collect(),
        })
    }
}

/// Rocha-Caridi character of the irreducible module (r, s), expanded to `max_level`.
///
/// χ_{r,s} = q^h / φ(q) · Σ_k [q^{pp'k² + k(p'r − ps)} − q^{pp'k² + k(p'r + ps) + rs}]
/// with p' = p + 1. Everything is integer arithmetic.
pub fn character_qseries(m: &MinimalModel, x: &KacLabel, max_level: usize) -> Result<QSeries> {
    let h = conformal_weight(m, x)?;
    let p = i64::from(m.p());
    let pp = p + 1;
    let (r, s) = (i64::from(x.r), i64::from(x.s));
    let n = max_level as i64;

    let mut numerator = vec![0i64; max_level + 1];
    // both exponents grow like pp'k², so |k| ≤ sqrt(n) + 2 is plenty
    let kmax = ((n as f64).sqrt() as i64) + 2;
    for k in -kmax..=kmax {
        let base = p * pp * k * k;
        let e1 = base + k * (pp * r - p * s);
        let e2 = base + k * (pp * r + p * s) + r * s;
        if (0..=n).contains(&e1) {
            numerator[e1 as usize] += 1;
        }
        if (0..=n).contains(&e2) {
            numerator[e2 as usize] -= 1;
        }
    }
    let partitions = partition_numbers(max_level);
    let mut coeffs = Vec::with_capacity(max_level + 1);
    for level in 0..=max_level {
        let d: i64 = (0..=level).map(|j| numerator[j] * partitions[level - j]).sum();
        let d = u64::try_from(d)
            .map_err(|_| Error::numeric(format!("negative character coefficient at level {level}")))?;
        coeffs.push(d);
    }
    Ok(QSeries { h, coeffs })
}

/// p(n) for n = 0..=max via Euler's pentagonal recurrence.
fn partition_numbers(max: usize) -> Vec<i64> {
    let mut p = vec![0i64; max + 1];
    p[0] = 1;
    for n in 1..=max as i64 {
        let mut total = 0i64;
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > n {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            total += sign * p[(n - g1) as usize];
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= n {
                total += sign * p[(n - g2) as usize];
            }
        }
        p[n as usize] = total;
    }
    p
}

/// One fusion channel of a boundary partition function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub label: KacLabel,
    pub h: Rational,
    pub coeffs: Vec<u64>,
}

/// A distinct energy offset `h_i + n` and the number of states sitting there.
///
/// Zero degeneracies are kept: the vacuum tower has nothing at level one, and
/// that hole is part of the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub offset: Rational,
    pub degeneracy: u64,
}

/// Degeneracies of Z_ab = Σ_i N_ab^i χ_i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardyTower {
    pub p: u32,
    pub a: KacLabel,
    pub b: KacLabel,
    /// Sorted by weight.
    pub channels: Vec<Channel>,
    /// Merged over channels, sorted by offset, complete up to
    /// `min_i h_i + max_level`.
    pub levels: Vec<TowerLevel>,
    pub ground_offset: Rational,
}

impl CardyTower {
    /// Degeneracies of the first `n` distinct offsets, zeros included.
    pub fn degeneracy_sequence(&self, n: usize) -> Vec<u64> {
        self.levels.iter().take(n).map(|l| l.degeneracy).collect()
    }
}

/// Boundary partition function between Cardy states `a` and `b`.
pub fn cardy_degeneracies(m: &MinimalModel, a: &KacLabel, b: &KacLabel, max_level: usize) -> Result<CardyTower> {
    let mut channels = Vec::new();
    for label in fuse(m, a, b)? {
        let q = character_qseries(m, &label, max_level)?;
        channels.push(Channel {
            label,
            h: q.h,
            coeffs: q.coeffs,
        });
    }
    channels.sort_by(|x, y| x.h.cmp(&y.h).then(x.label.cmp(&y.label)));
    let ground_offset = channels.iter().map(|c| c.h).min().expect("fusion is never empty");
    let horizon = channels
        .iter()
        .map(|c| c.h)
        .min()
        .expect("fusion is never empty")
        + Rational::from_integer(max_level as i64);

    let mut raw: Vec<(Rational, u64)> = channels
        .iter()
        .flat_map(|c| {
            c.coeffs
                .iter()
                .enumerate()
                .map(move |(n, &d)| (c.h + Rational::from_integer(n as i64), d))
        })
        .filter(|(off, _)| *off <= horizon)
        .collect();
    raw.sort_by_key(|x| x.0);
    let mut levels: Vec<TowerLevel> = Vec::new();
    for (offset, d) in raw {
        match levels.last_mut() {
            Some(last) if last.offset == offset => last.degeneracy += d,
            _ => levels.push(TowerLevel {
                offset,
                degeneracy: d,
            }),
        }
    }
    let (a, b) = (a.canonical(m), b.canonical(m));
    Ok(CardyTower {
        p: m.p(),
        a,
        b,
        channels,
        levels,
        ground_offset,
    })
}
