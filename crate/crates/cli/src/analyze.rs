//! `entcut analyze`: multiplet matching and the c, ε₀ and ν fits over a set of
//! run records.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use entcut::analysis::{self, FitResult, MultipletReport, NuFit, TowerMatch};
use entcut::cft::{cardy_degeneracies, delta_s_cft, g_function, nu_prediction, quasi_free_bc, CardyTower, KacLabel, MinimalModel};
use entcut::chain::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::config::{label_str, AnalysisOptions};
use crate::error::{CliError, CliResult};
use crate::io::csv_float;
use crate::record::{Method, RunRecord, ARTIFACT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Match,
    FitC,
    FitEps0,
    FitNu,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Match => "match",
            Mode::FitC => "fit-c",
            Mode::FitEps0 => "fit-eps0",
            Mode::FitNu => "fit-nu",
        }
    }
}

/// Records sharing a model and end labels, told apart only by L.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Family {
    pub model: String,
    pub p: u32,
    #[serde(with = "label_str")]
    pub left: KacLabel,
    #[serde(with = "label_str")]
    pub right: KacLabel,
    pub method: Method,
}

impl Family {
    pub fn of(rec: &RunRecord) -> CliResult<Self> {
        let p = rec.chain.minimal_model_p();
        let m = MinimalModel::new(p)?;
        let (l, r) = rec.chain.boundary_labels();
        let model = match rec.chain.model {
            ModelSpec::Rsos { .. } => "rsos",
            ModelSpec::BlumeCapel { .. } => "blume-capel",
        };
        Ok(Self {
            model: model.into(),
            p,
            left: l.canonical(&m),
            right: r.canonical(&m),
            method: rec.method,
        })
    }

    /// Label of the physical end inside the left block.
    pub fn block_end(&self) -> KacLabel {
        self.left
    }

    fn tag(&self) -> String {
        format!("{} p={} {}|{} {}", self.model, self.p, self.left, self.right, self.method.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub records: Vec<(PathBuf, RunRecord)>,
}

/// Expands glob patterns (plain paths pass through) and loads every record.
pub fn expand(patterns: &[String]) -> CliResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for pat in patterns {
        let hits: Vec<PathBuf> = glob::glob(pat)
            .map_err(|e| CliError::Validation(format!("bad pattern {pat:?}: {e}")))?
            .filter_map(|r| r.ok())
            .filter(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != crate::run::SUMMARY_FILE))
            .collect();
        if hits.is_empty() {
            return Err(CliError::Validation(format!("no records match {pat:?}")));
        }
        paths.extend(hits);
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

pub fn load(paths: &[PathBuf], method: Method, force: bool) -> CliResult<Inputs> {
    let mut records = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let rec = RunRecord::from_json(&bytes).map_err(|e| CliError::Record {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if rec.method == method {
            records.push((path.clone(), rec));
        }
    }
    if records.is_empty() {
        return Err(CliError::Validation(format!("no {} records among the inputs", method.as_str())));
    }
    let mut versions: Vec<String> = records.iter().map(|(_, r)| r.version.clone()).collect();
    versions.sort();
    versions.dedup();
    if versions.len() > 1 && !force {
        return Err(CliError::MixedVersions(versions));
    }
    Ok(Inputs { records })
}

impl Inputs {
    /// Records grouped by family, each sorted by L; duplicate lengths are an error.
    pub fn families(&self) -> CliResult<BTreeMap<Family, Vec<&RunRecord>>> {
        let mut out: BTreeMap<Family, Vec<&RunRecord>> = BTreeMap::new();
        for (_, rec) in &self.records {
            out.entry(Family::of(rec)?).or_default().push(rec);
        }
        for (fam, recs) in out.iter_mut() {
            recs.sort_by_key(|r| r.length);
            if recs.windows(2).any(|w| w[0].length == w[1].length) {
                return Err(CliError::Family(format!("{} has two records with the same L", fam.tag())));
            }
        }
        Ok(out)
    }

    fn single_family(&self) -> CliResult<(Family, Vec<&RunRecord>)> {
        let fams = self.families()?;
        if fams.len() != 1 {
            let tags: Vec<String> = fams.keys().map(Family::tag).collect();
            return Err(CliError::Family(format!("this mode needs one family of records, found {}: {}", tags.len(), tags.join("; "))));
        }
        Ok(fams.into_iter().next().expect("one family"))
    }

    fn family_pair(&self) -> CliResult<[(Family, Vec<&RunRecord>); 2]> {
        let fams = self.families()?;
        let tags: Vec<String> = fams.keys().map(Family::tag).collect();
        if fams.len() != 2 {
            return Err(CliError::Family(format!("this mode needs exactly two families, found {}: {}", tags.len(), tags.join("; "))));
        }
        let mut it = fams.into_iter();
        let a = it.next().expect("two");
        let b = it.next().expect("two");
        if a.0.model != b.0.model || a.0.p != b.0.p {
            return Err(CliError::Family(format!("families differ in more than their ends: {}", tags.join(" vs "))));
        }
        Ok([a, b])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub length: usize,
    pub cut: usize,
    pub counts: Vec<u64>,
    pub grouping: MultipletReport,
    pub matches: Vec<TowerMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub family: Family,
    pub towers: Vec<CardyTower>,
    pub rows: Vec<MatchRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralChargeReport {
    pub family: Family,
    pub points: Vec<(usize, f64)>,
    pub fit: FitResult,
    pub c: f64,
    pub c_err: f64,
    pub c_expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eps0Fit {
    pub family: Family,
    pub points: Vec<(usize, f64)>,
    pub fit: FitResult,
    /// `c / 24π`.
    pub slope_expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterceptDifference {
    /// Second family's intercept minus the first's.
    pub measured: f64,
    pub measured_err: f64,
    /// `(1/2π) ln(g_second / g_first)`.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eps0Report {
    pub fits: Vec<Eps0Fit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difference: Option<InterceptDifference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuReport {
    pub b: Family,
    pub b_prime: Family,
    /// `(L, S_b − S_b')` over the common lengths in the window.
    pub delta_s: Vec<(usize, f64)>,
    /// `ln(g_b / g_b')`.
    pub delta_s_cft: f64,
    pub fit: NuFit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Report {
    Match(MatchReport),
    FitC(CentralChargeReport),
    FitEps0(Eps0Report),
    FitNu(NuReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDocument {
    pub version: String,
    pub options: AnalysisOptions,
    /// Input files with the checksums they carried.
    pub inputs: Vec<(String, String)>,
    pub report: Report,
}

#[derive(Debug, Clone, Default)]
pub struct MatchOptions {
    /// Entanglement-cut labels to try; empty means the quasi-free label only.
    pub cut_labels: Vec<KacLabel>,
}

#[derive(Debug, Clone, Default)]
pub struct NuOptions {
    /// Field whose weight predicts ν; (3,3) when omitted and valid.
    pub field: Option<KacLabel>,
}

pub fn match_mode(inputs: &Inputs, opts: &AnalysisOptions, m_opts: &MatchOptions) -> CliResult<MatchReport> {
    let (family, recs) = inputs.single_family()?;
    let m = MinimalModel::new(family.p)?;
    let labels = if m_opts.cut_labels.is_empty() {
        vec![quasi_free_bc(&m)]
    } else {
        m_opts.cut_labels.clone()
    };
    let towers = labels
        .iter()
        .map(|a| cardy_degeneracies(&m, a, &family.block_end(), opts.max_level))
        .collect::<entcut::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rec in recs {
        let spec = rec.spectrum.to_spectrum()?;
        let grouping = analysis::group_multiplets(&spec, opts.n_levels, opts.rel_gap)?;
        let matches = towers.iter().map(|t| analysis::match_towers(&grouping, t, opts.n_levels)).collect();
        rows.push(MatchRow {
            length: rec.length,
            cut: spec.cut,
            counts: grouping.counts(),
            grouping,
            matches,
        });
    }
    Ok(MatchReport { family, towers, rows })
}

fn windowed(points: Vec<(usize, f64)>, opts: &AnalysisOptions) -> Vec<(usize, f64)> {
    analysis::apply_window(&points, opts.min_fit_length)
}

pub fn fit_c_mode(inputs: &Inputs, opts: &AnalysisOptions) -> CliResult<CentralChargeReport> {
    let (family, recs) = inputs.single_family()?;
    let points: Vec<(usize, f64)> = recs.iter().map(|r| (r.length, r.half_chain.entropy)).collect();
    let fit = analysis::fit_central_charge(&windowed(points.clone(), opts))?;
    let (c, c_err) = analysis::central_charge(&fit);
    let cc = MinimalModel::new(family.p)?.central_charge();
    Ok(CentralChargeReport {
        family,
        points,
        fit,
        c,
        c_err,
        c_expected: *cc.numer() as f64 / *cc.denom() as f64,
    })
}

pub fn fit_eps0_mode(inputs: &Inputs, opts: &AnalysisOptions) -> CliResult<Eps0Report> {
    let fams = inputs.families()?;
    if fams.is_empty() || fams.len() > 2 {
        return Err(CliError::Family(format!("fit-eps0 takes one or two families, found {}", fams.len())));
    }
    let mut fits = Vec::new();
    for (family, recs) in fams {
        let points: Vec<(usize, f64)> = recs.iter().map(|r| (r.length, r.half_chain.epsilon0)).collect();
        let fit = analysis::fit_epsilon0(&windowed(points.clone(), opts))?;
        let cc = MinimalModel::new(family.p)?.central_charge();
        let c = *cc.numer() as f64 / *cc.denom() as f64;
        fits.push(Eps0Fit {
            family,
            points,
            fit,
            slope_expected: c / (24.0 * PI),
        });
    }
    let difference = if fits.len() == 2 {
        let (f0, f1) = (&fits[0], &fits[1]);
        if f0.family.model != f1.family.model || f0.family.p != f1.family.p {
            return Err(CliError::Family("the two families belong to different models".into()));
        }
        let m = MinimalModel::new(f0.family.p)?;
        let g0 = g_function(&m, &f0.family.block_end())?;
        let g1 = g_function(&m, &f1.family.block_end())?;
        Some(InterceptDifference {
            measured: f1.fit.intercept - f0.fit.intercept,
            measured_err: f0.fit.intercept_err.hypot(f1.fit.intercept_err),
            expected: (g1 / g0).ln() / (2.0 * PI),
        })
    } else {
        None
    };
    Ok(Eps0Report { fits, difference })
}

/// `ΔS = S_b − S_b'` over common lengths; b is the first family in sort order.
pub fn fit_nu_mode(inputs: &Inputs, opts: &AnalysisOptions, n_opts: &NuOptions) -> CliResult<NuReport> {
    let [(b, rb), (b_prime, rp)] = inputs.family_pair()?;
    let m = MinimalModel::new(b.p)?;
    let s_prime: BTreeMap<usize, f64> = rp.iter().map(|r| (r.length, r.half_chain.entropy)).collect();
    let delta_s: Vec<(usize, f64)> = rb
        .iter()
        .filter_map(|r| s_prime.get(&r.length).map(|sp| (r.length, r.half_chain.entropy - sp)))
        .collect();
    let dcft = delta_s_cft(&m, &b.block_end(), &b_prime.block_end())?;
    let fit = analysis::fit_nu(&windowed(delta_s.clone(), opts), dcft)?;
    let field = n_opts.field.or_else(|| {
        let x = KacLabel::new(3, 3);
        x.validate(&m).ok().map(|_| x)
    });
    let nu_expected = match field {
        Some(x) => {
            let h = nu_prediction(&m, &x)?;
            Some(*h.numer() as f64 / *h.denom() as f64)
        }
        None => None,
    };
    Ok(NuReport {
        b,
        b_prime,
        delta_s,
        delta_s_cft: dcft,
        fit,
        nu_expected,
    })
}

/// Plot table for a report. Columns per mode:
///
/// - match: `length,cut_label,level,observed,expected,agrees`
/// - fit-c: `length,w_l,entropy,in_window`
/// - fit-eps0: `family,length,w_l,epsilon0,in_window`
/// - fit-nu: `length,delta_s,abs_deviation,in_window`
pub fn csv_table(report: &Report, opts: &AnalysisOptions) -> CliResult<String> {
    let w = |l: usize| analysis::w_l(l, analysis::half_cut(l));
    let inw = |l: usize| l >= opts.min_fit_length;
    let mut out = String::new();
    match report {
        Report::Match(r) => {
            out.push_str("length,cut_label,level,observed,expected,agrees\n");
            for row in &r.rows {
                for t in &row.matches {
                    for v in &t.verdicts {
                        let obs = v.observed.map_or(String::new(), |o| o.to_string());
                        out.push_str(&format!("{},{}.{},{},{},{},{}\n", row.length, t.a.r, t.a.s, v.level, obs, v.expected, v.agrees));
                    }
                }
            }
        }
        Report::FitC(r) => {
            out.push_str("length,w_l,entropy,in_window\n");
            for &(l, s) in &r.points {
                out.push_str(&format!("{l},{},{},{}\n", csv_float(w(l)?), csv_float(s), inw(l)));
            }
        }
        Report::FitEps0(r) => {
            out.push_str("family,length,w_l,epsilon0,in_window\n");
            for f in &r.fits {
                let tag = format!("{}.{}-{}.{}", f.family.left.r, f.family.left.s, f.family.right.r, f.family.right.s);
                for &(l, e) in &f.points {
                    out.push_str(&format!("{tag},{l},{},{},{}\n", csv_float(w(l)?), csv_float(e), inw(l)));
                }
            }
        }
        Report::FitNu(r) => {
            out.push_str("length,delta_s,abs_deviation,in_window\n");
            for &(l, d) in &r.delta_s {
                out.push_str(&format!("{l},{},{},{}\n", csv_float(d), csv_float((d - r.delta_s_cft).abs()), inw(l)));
            }
        }
    }
    Ok(out)
}

pub struct AnalyzeRequest {
    pub patterns: Vec<String>,
    pub mode: Mode,
    pub method: Method,
    pub force: bool,
    pub options: AnalysisOptions,
    pub matching: MatchOptions,
    pub nu: NuOptions,
}

/// Loads the inputs and runs one mode.
pub fn analyze(req: &AnalyzeRequest) -> CliResult<AnalysisDocument> {
    req.options.validate()?;
    let paths = expand(&req.patterns)?;
    let inputs = load(&paths, req.method, req.force)?;
    let report = match req.mode {
        Mode::Match => Report::Match(match_mode(&inputs, &req.options, &req.matching)?),
        Mode::FitC => Report::FitC(fit_c_mode(&inputs, &req.options)?),
        Mode::FitEps0 => Report::FitEps0(fit_eps0_mode(&inputs, &req.options)?),
        Mode::FitNu => Report::FitNu(fit_nu_mode(&inputs, &req.options, &req.nu)?),
    };
    Ok(AnalysisDocument {
        version: ARTIFACT_VERSION.into(),
        options: req.options.clone(),
        inputs: inputs.records.iter().map(|(p, r)| (p.display().to_string(), r.checksums.sha256.clone())).collect(),
        report,
    })
}

/// Writes `analysis-<mode>.json` and `analysis-<mode>.csv` into `dir`.
pub fn write_outputs(doc: &AnalysisDocument, dir: &Path, mode: Mode) -> CliResult<(PathBuf, PathBuf)> {
    let json_path = dir.join(format!("analysis-{}.json", mode.as_str()));
    let csv_path = dir.join(format!("analysis-{}.csv", mode.as_str()));
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    crate::io::write_atomic(&json_path, &bytes)?;
    crate::io::write_atomic(&csv_path, csv_table(&doc.report, &doc.options)?.as_bytes())?;
    Ok((json_path, csv_path))
}
