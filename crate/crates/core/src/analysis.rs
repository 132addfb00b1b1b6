//! From spectra to universal numbers: multiplet counting against Cardy towers,
//! and the linear fits for c, the ε₀ slope and the correction exponent ν.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cft::{CardyTower, KacLabel};
use crate::error::{Error, Result};
use crate::spectrum::EntanglementSpectrum;

/// Entanglement energies closer than this (relative to `max(1, |ε|)`) are
/// exactly degenerate and never split.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Default fit windows drop chains shorter than this.
pub const DEFAULT_MIN_FIT_LENGTH: usize = 65;

/// `W_L = ln((2L/π) sin(πl/L))`.
pub fn w_l(length: usize, cut: usize) -> Result<f64> {
    if cut == 0 || cut >= length {
        return Err(Error::domain(format!("cut {cut} outside 1..={}", length.saturating_sub(1))));
    }
    let (l, x) = (length as f64, cut as f64);
    Ok(((2.0 * l / PI) * (PI * x / l).sin()).ln())
}

/// Cut used for "half-chain" quantities: `⌊L/2⌋`.
pub fn half_cut(length: usize) -> usize {
    length / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplet {
    pub mean: f64,
    pub count: usize,
    /// Spread `max ε − min ε` inside the group.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipletReport {
    pub groups: Vec<Multiplet>,
    pub rel_gap: f64,
    /// Index into the spectrum where each group starts, so the grouping can be
    /// redone by hand.
    pub boundaries: Vec<usize>,
}

impl MultipletReport {
    pub fn counts(&self) -> Vec<u64> {
        self.groups.iter().map(|g| g.count as u64).collect()
    }
}

/// Groups ascending entanglement energies into near-degenerate multiplets.
///
/// Scanning upwards, value `i` opens a new group when its gap to value `i − 1`
/// exceeds `rel_gap` times the running mean level spacing: the distance from
/// `ε_0` to the start of the latest group divided by the number of groups
/// passed so far. The first gap has no history and always opens a group.
/// Exact degeneracies are never split.
/// At most `n_levels` groups are returned. The last group of a truncated
/// spectrum may be incomplete, so callers should keep `n_levels` well inside
/// the computed range.
pub fn group_multiplets(spec: &EntanglementSpectrum, n_levels: usize, rel_gap: f64) -> Result<MultipletReport> {
    if spec.is_empty() {
        return Err(Error::domain("empty spectrum"));
    }
    if !(rel_gap > 0.0 && rel_gap < 1.0) {
        return Err(Error::domain(format!("rel_gap {rel_gap} outside (0, 1)")));
    }
    let eps = &spec.energies;
    let mut bounds = vec![0usize];
    for i in 1..eps.len() {
        let gap = eps[i] - eps[i - 1];
        let exact = gap <= DEGENERACY_TOL * eps[i].abs().max(1.0);
        let g = bounds.len();
        let spacing = if g == 1 { gap } else { (eps[bounds[g - 1]] - eps[0]) / (g - 1) as f64 };
        if !exact && gap > rel_gap * spacing {
            bounds.push(i);
        }
    }
    let ends: Vec<usize> = bounds.iter().skip(1).copied().chain(std::iter::once(eps.len())).collect();
    bounds.truncate(n_levels);
    let groups = bounds
        .iter()
        .zip(&ends)
        .map(|(&start, &end)| {
            let slice = &eps[start..end];
            Multiplet {
                mean: slice.iter().sum::<f64>() / slice.len() as f64,
                count: slice.len(),
                spread: slice[slice.len() - 1] - slice[0],
            }
        })
        .collect();
    Ok(MultipletReport {
        groups,
        rel_gap,
        boundaries: bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub level: usize,
    pub observed: Option<u64>,
    pub expected: u64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerMatch {
    pub p: u32,
    pub a: KacLabel,
    pub b: KacLabel,
    /// Number of leading levels whose counts agree.
    pub matched: usize,
    pub verdicts: Vec<LevelVerdict>,
}

impl TowerMatch {
    /// `true` when at least `n` leading levels agree.
    pub fn matches(&self, n: usize) -> bool {
        self.matched >= n
    }
}

/// Compares multiplet counts level by level with the merged tower
/// degeneracies, zero levels included (a zero never matches an observed group).
pub fn match_towers(report: &MultipletReport, tower: &CardyTower, n_levels: usize) -> TowerMatch {
    let expected = tower.degeneracy_sequence(n_levels);
    let observed = report.counts();
    let verdicts: Vec<LevelVerdict> = expected
        .iter()
        .enumerate()
        .map(|(level, &e)| {
            let o = observed.get(level).copied();
            LevelVerdict {
                level,
                observed: o,
                expected: e,
                agrees: o == Some(e),
            }
        })
        .collect();
    let matched = verdicts.iter().take_while(|v| v.agrees).count();
    TowerMatch {
        p: tower.p,
        a: tower.a,
        b: tower.b,
        matched,
        verdicts,
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// `sqrt(Σ residual²)`.
    pub residual_norm: f64,
    /// Chain lengths that entered the fit.
    pub window: Vec<usize>,
}

/// Fits `y` against `x`; `lengths` is recorded as the window.
pub fn linear_fit(x: &[f64], y: &[f64], lengths: &[usize]) -> Result<FitResult> {
    let n = x.len();
    if y.len() != n || lengths.len() != n {
        return Err(Error::shape("fit inputs differ in length"));
    }
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite fit input".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-14 * x.iter().map(|v| v * v).sum::<f64>().max(1e-300) {
        return Err(Error::Fit("degenerate design: all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let sigma2 = rss / (nf - 2.0);
    Ok(FitResult {
        slope,
        intercept,
        slope_err: (sigma2 / sxx).sqrt(),
        intercept_err: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        residual_norm: rss.sqrt(),
        window: lengths.to_vec(),
    })
}

/// Keeps points with `L ≥ min_length`.
pub fn apply_window(points: &[(usize, f64)], min_length: usize) -> Vec<(usize, f64)> {
    points.iter().copied().filter(|(l, _)| *l >= min_length).collect()
}

fn distinct_lengths(points: &[(usize, f64)]) -> Result<()> {
    let mut ls: Vec<usize> = points.iter().map(|p| p.0).collect();
    ls.sort_unstable();
    ls.dedup();
    if ls.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct chain lengths, got {}", ls.len())));
    }
    Ok(())
}

fn fit_against_w(points: &[(usize, f64)]) -> Result<FitResult> {
    distinct_lengths(points)?;
    let x = points.iter().map(|&(l, _)| w_l(l, half_cut(l))).collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ls: Vec<usize> = points.iter().map(|p| p.0).collect();
    linear_fit(&x, &y, &ls)
}

/// `S = (c/6) W_L + S₀` at the half-chain cut; `c = 6 · slope`.
pub fn fit_central_charge(entropies: &[(usize, f64)]) -> Result<FitResult> {
    fit_against_w(entropies)
}

pub fn central_charge(fit: &FitResult) -> (f64, f64) {
    (6.0 * fit.slope, 6.0 * fit.slope_err)
}

/// `ε₀ = (c/24π) W_L + C` at the half-chain cut.
pub fn fit_epsilon0(eps0s: &[(usize, f64)]) -> Result<FitResult> {
    fit_against_w(eps0s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuFit {
    pub fit: FitResult,
    pub nu: f64,
    pub nu_err: f64,
    /// Lengths dropped because `ΔS` equals the prediction exactly.
    pub excluded: Vec<usize>,
}

/// `ln|ΔS − ΔS_CFT| = −2ν ln L + const`.
pub fn fit_nu(deltas: &[(usize, f64)], delta_cft: f64) -> Result<NuFit> {
    let (used, excluded): (Vec<_>, Vec<_>) = deltas.iter().partition(|(_, d)| (d - delta_cft).abs() > 0.0);
    if used.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 usable points, got {}", used.len())));
    }
    distinct_lengths(&used)?;
    let x: Vec<f64> = used.iter().map(|(l, _)| (*l as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|(_, d)| (d - delta_cft).abs().ln()).collect();
    let ls: Vec<usize> = used.iter().map(|p| p.0).collect();
    let fit = linear_fit(&x, &y, &ls)?;
    Ok(NuFit {
        nu: -fit.slope / 2.0,
        nu_err: fit.slope_err / 2.0,
        excluded: excluded.into_iter().map(|p| p.0).collect(),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cft::{cardy_degeneracies, MinimalModel};
    use proptest::prelude::*;

    fn spectrum(eps: &[f64]) -> EntanglementSpectrum {
        let w: Vec<f64> = eps.iter().map(|e| (-2.0 * PI * e).exp()).collect();
        EntanglementSpectrum::from_weights(1, &w, None).unwrap()
    }

    #[test]
    fn w_l_values() {
        assert!((w_l(100, 50).unwrap() - (200.0 / PI).ln()).abs() < 1e-14);
        assert!((w_l(100, 50).unwrap() - 4.153588).abs() < 1e-6);
        assert!(w_l(10, 0).is_err() && w_l(10, 10).is_err());
    }

    #[test]
    fn grouping_examples() {
        let r = group_multiplets(&spectrum(&[0.0]), 5, 0.25).unwrap();
        assert_eq!(r.counts(), vec![1]);
        let r = group_multiplets(&spectrum(&[0.0, 1.0, 1.001, 2.0]), 5, 0.1).unwrap();
        assert_eq!(r.counts(), vec![1, 2, 1]);
        assert_eq!(r.boundaries, vec![0, 1, 3]);
        let r = group_multiplets(&spectrum(&[0.0, 1.0, 1.001, 2.0]), 2, 0.1).unwrap();
        assert_eq!(r.counts(), vec![1, 2]);
    }

    #[test]
    fn ising_vacuum_mismatch() {
        let m = MinimalModel::new(3).unwrap();
        let t = cardy_degeneracies(&m, &KacLabel::new(1, 1), &KacLabel::new(1, 1), 6).unwrap();
        let report = MultipletReport {
            groups: [1, 1, 2]
                .iter()
                .enumerate()
                .map(|(i, &c)| Multiplet {
                    mean: i as f64,
                    count: c,
                    spread: 0.0,
                })
                .collect(),
            rel_gap: 0.25,
            boundaries: vec![0, 1, 2],
        };
        let m = match_towers(&report, &t, 4);
        assert_eq!(m.matched, 1);
        assert!(!m.verdicts[1].agrees);
    }

    #[test]
    fn planted_fits() {
        let ls = [65usize, 129, 257, 513];
        let s: Vec<(usize, f64)> = ls.iter().map(|&l| (l, 0.7 * w_l(l, l / 2).unwrap() / 6.0 + 1.0)).collect();
        let f = fit_central_charge(&s).unwrap();
        assert!((central_charge(&f).0 - 0.7).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.residual_norm < 1e-12);
        let e: Vec<(usize, f64)> = ls.iter().map(|&l| (l, 0.7 / (24.0 * PI) * w_l(l, l / 2).unwrap() + 0.2)).collect();
        let f = fit_epsilon0(&e).unwrap();
        assert!((f.slope - 0.7 / (24.0 * PI)).abs() < 1e-14);
        let d: Vec<(usize, f64)> = ls.iter().map(|&l| (l, 0.3 + (l as f64).powf(-0.2))).collect();
        let nu = fit_nu(&d, 0.3).unwrap();
        assert!((nu.nu - 0.1).abs() < 1e-12);
        let flipped: Vec<(usize, f64)> = d.iter().map(|&(l, x)| (l, -x)).collect();
        assert!((fit_nu(&flipped, -0.3).unwrap().nu - nu.nu).abs() < 1e-14);
    }

    #[test]
    fn degenerate_fits_are_errors() {
        assert!(matches!(fit_central_charge(&[(65, 1.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_central_charge(&[(65, 1.0), (65, 1.1), (129, 1.2)]), Err(Error::Fit(_))));
        let d = [(65, 0.3), (129, 0.3), (257, 0.31), (513, 0.32)];
        let r = fit_nu(&d, 0.3);
        assert!(matches!(r, Err(Error::Fit(_))));
    }

    proptest! {
        #[test]
        fn w_l_symmetric_and_peaked(l in 2usize..5000, frac in 0.0f64..1.0) {
            let cut = 1 + ((l - 2) as f64 * frac) as usize;
            let a = w_l(l, cut).unwrap();
            prop_assert!((a - w_l(l, l - cut).unwrap()).abs() < 1e-12);
            prop_assert!(a <= w_l(l, l / 2).unwrap() + 1e-12);
        }

        #[test]
        fn grouping_is_shift_invariant(mut eps in proptest::collection::vec(0.0f64..5.0, 1..40), shift in -3.0f64..3.0) {
            eps.sort_by(f64::total_cmp);
            let e0 = eps[0];
            let base: Vec<f64> = eps.iter().map(|e| e - e0).collect();
            let shifted: Vec<f64> = base.iter().map(|e| e + shift.abs()).collect();
            let a = group_multiplets(&spectrum(&base), 8, 0.25).unwrap();
            let b = group_multiplets(&spectrum(&shifted), 8, 0.25).unwrap();
            prop_assert_eq!(a.counts(), b.counts());
        }

        #[test]
        fn exact_degeneracies_stay_together(levels in proptest::collection::vec((0.01f64..1.0, 1usize..5), 1..6)) {
            let mut eps = vec![0.0];
            let mut e = 0.0;
            for (gap, mult) in &levels {
                e += gap;
                eps.extend(std::iter::repeat_n(e, *mult));
            }
            let spec = spectrum(&eps);
            let r = group_multiplets(&spec, 100, 0.25).unwrap();
            for &b in r.boundaries.iter().skip(1) {
                prop_assert!(spec.energies[b] - spec.energies[b - 1] > DEGENERACY_TOL);
            }
            prop_assert_eq!(r.groups.iter().map(|g| g.count).sum::<usize>(), eps.len());
        }

        #[test]
        fn matching_is_monotone(counts in proptest::collection::vec(1usize..4, 1..10), n in 1usize..10) {
            let m = MinimalModel::new(4).unwrap();
            let t = cardy_degeneracies(&m, &KacLabel::new(2, 2), &KacLabel::new(1, 1), 10).unwrap();
            let report = MultipletReport {
                groups: counts.iter().map(|&c| Multiplet { mean: 0.0, count: c, spread: 0.0 }).collect(),
                rel_gap: 0.25,
                boundaries: vec![],
            };
            prop_assert!(match_towers(&report, &t, n + 1).matched >= match_towers(&report, &t, n).matched);
            let own = t.degeneracy_sequence(n);
            let exact = MultipletReport {
                groups: own.iter().map(|&c| Multiplet { mean: 0.0, count: c as usize, spread: 0.0 }).collect(),
                rel_gap: 0.25,
                boundaries: vec![],
            };
            if own.iter().all(|&c| c > 0) {
                prop_assert_eq!(match_towers(&exact, &t, n).matched, own.len());
            }
        }
    }
}
