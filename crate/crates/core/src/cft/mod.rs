//! Boundary-CFT data of the unitary minimal models M(p+1, p).
//!
//! Conformal weights and central charges are exact rationals; characters and
//! partition-function towers are exact integer q-series. Only g-functions and
//! their logarithms are floating point.

mod characters;

pub use characters::{cardy_degeneracies, character_qseries, CardyTower, Channel, QSeries, TowerLevel};

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// The minimal model M(p+1, p), p ≥ 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinimalModel {
    p: u32,
}

impl MinimalModel {
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 {
            return Err(Error::domain(format!("minimal model needs p >= 3, got {p}")));
        }
        if p > 1000 {
            return Err(Error::domain(format!("p = {p} is beyond the supported range")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Anisotropy angle π/(p+1).
    pub fn gamma(&self) -> f64 {
        PI / f64::from(self.p + 1)
    }

    pub fn central_charge(&self) -> Rational {
        let p = i64::from(self.p);
        Rational::from_integer(1) - Rational::new(6, p * (p + 1))
    }

    /// Every canonical Kac label, sorted.
    pub fn labels(&self) -> Vec<KacLabel> {
        let mut set = BTreeSet::new();
        for r in 1..self.p {
            for s in 1..=self.p {
                set.insert(KacLabel { r, s }.canonical(self));
            }
        }
        set.into_iter().collect()
    }

    /// Every label in the Kac table, without identification.
    pub fn kac_table(&self) -> impl Iterator<Item = KacLabel> + '_ {
        (1..self.p).flat_map(move |r| (1..=self.p).map(move |s| KacLabel { r, s }))
    }
}

/// A Kac label (r, s) with 1 ≤ r ≤ p−1 and 1 ≤ s ≤ p.
///
/// (r, s) and (p−r, p+1−s) name the same primary and the same Cardy boundary
/// condition. [`KacLabel::canonical`] picks the representative with smaller
/// `(r(p+1) − s·p)²`, then smaller r, then smaller s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KacLabel {
    pub r: u32,
    pub s: u32,
}

impl KacLabel {
    pub const fn new(r: u32, s: u32) -> Self {
        Self { r, s }
    }

    pub fn validate(&self, m: &MinimalModel) -> Result<()> {
        if (1..m.p).contains(&self.r) && (1..=m.p).contains(&self.s) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "Kac label {self} outside 1 <= r <= {}, 1 <= s <= {}",
                m.p - 1,
                m.p
            )))
        }
    }

    /// The identified partner (p−r, p+1−s).
    pub fn partner(&self, m: &MinimalModel) -> Self {
        Self {
            r: m.p - self.r,
            s: m.p + 1 - self.s,
        }
    }

    fn key(&self, m: &MinimalModel) -> (i64, u32, u32) {
        let x = i64::from(self.r) * i64::from(m.p + 1) - i64::from(self.s) * i64::from(m.p);
        (x * x, self.r, self.s)
    }

    pub fn canonical(&self, m: &MinimalModel) -> Self {
        let other = self.partner(m);
        if other.key(m) < self.key(m) {
            other
        } else {
            *self
        }
    }

    /// Same primary under the Kac identification.
    pub fn same_as(&self, other: &KacLabel, m: &MinimalModel) -> bool {
        self.canonical(m) == other.canonical(m)
    }
}

impl fmt::Display for KacLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.r, self.s)
    }
}

impl FromStr for KacLabel {
    type Err = Error;

    /// Parses `"r,s"`, optionally wrapped in parentheses.
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        let t = t
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(t);
        let (r, s) = t
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("Kac label {text:?} is not of the form r,s")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u32>()
                .map_err(|e| Error::Format(format!("Kac label {text:?}: {e}")))
        };
        Ok(Self::new(parse(r)?, parse(s)?))
    }
}

/// h_{r,s} = ((r(p+1) − s·p)² − 1) / (4p(p+1)).
pub fn conformal_weight(m: &MinimalModel, x: &KacLabel) -> Result<Rational> {
    x.validate(m)?;
    let p = i64::from(m.p);
    let d = i64::from(x.r) * (p + 1) - i64::from(x.s) * p;
    Ok(Rational::new(d * d - 1, 4 * p * (p + 1)))
}

/// Affleck–Ludwig boundary entropy of the Cardy state (r, s).
pub fn g_function(m: &MinimalModel, x: &KacLabel) -> Result<f64> {
    x.validate(m)?;
    let p = f64::from(m.p);
    let num = (PI * f64::from(x.r) / p).sin() * (PI * f64::from(x.s) / (p + 1.0)).sin();
    let den = (PI / p).sin() * (PI / (p + 1.0)).sin();
    Ok(num / den)
}

/// The label maximizing the g-function: (p/2, p/2) for even p, ((p+1)/2, (p+1)/2) for odd p.
///
/// Returned as written, not canonicalized: p = 5 gives (3,3), whose canonical
/// form is (2,3).
pub fn quasi_free_bc(m: &MinimalModel) -> KacLabel {
    let k = if m.p % 2 == 0 { m.p / 2 } else { m.p.div_ceil(2) };
    KacLabel::new(k, k)
}

/// Truncated BPZ fusion x × y, as a set of canonical labels.
pub fn fuse(m: &MinimalModel, x: &KacLabel, y: &KacLabel) -> Result<Vec<KacLabel>> {
    x.validate(m)?;
    y.validate(m)?;
    let p = m.p as i64;
    let range = |a: i64, b: i64, n: i64| {
        let lo = (a - b).abs() + 1;
        let hi = (a + b - 1).min(2 * n - 1 - a - b);
        (lo..=hi).step_by(2)
    };
    let mut out = BTreeSet::new();
    for r in range(x.r as i64, y.r as i64, p) {
        for s in range(x.s as i64, y.s as i64, p + 1) {
            out.insert(KacLabel::new(r as u32, s as u32).canonical(m));
        }
    }
    Ok(out.into_iter().collect())
}

/// ln(g_b / g_b'): the change of the O(1) entropy term when the end bc goes b → b'.
pub fn delta_s_cft(m: &MinimalModel, b: &KacLabel, b_new: &KacLabel) -> Result<f64> {
    Ok((g_function(m, b)? / g_function(m, b_new)?).ln())
}

/// Exponent of the unusual corrections carried by a boundary field: its weight.
pub fn nu_prediction(m: &MinimalModel, field: &KacLabel) -> Result<Rational> {
    conformal_weight(m, field)
}
