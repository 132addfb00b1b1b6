//! `entcut run`: DMRG (and ED for small chains) over every configured length.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use entcut::analysis::half_cut;
use entcut::chain::{ModelSpec, SpinChainSpec};
use entcut::dmrg::{self, write_checkpoint};
use entcut::ed;
use entcut::rsos::{build_hamiltonian_sparse, count_paths};
use entcut::spectrum::EntanglementSpectrum;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::write_atomic;
use crate::record::{Checksums, HalfChain, Method, RunRecord, SpectrumRecord, ARTIFACT_VERSION, RECORD_FORMAT, RECORD_FORMAT_VERSION};

const ED_TOL: f64 = 1e-12;
pub const SUMMARY_FILE: &str = "run-summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Job {
    pub length: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub length: usize,
    pub method: Method,
    /// Record file name, relative to the output directory.
    pub file: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub config: RunConfig,
    pub jobs: Vec<JobOutcome>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.jobs.iter().filter(|j| j.error.is_some()).count()
    }
}

/// Size of the Hilbert space ED would work in.
pub fn constrained_dimension(spec: &SpinChainSpec) -> CliResult<f64> {
    Ok(match &spec.model {
        ModelSpec::Rsos { p, left, right, .. } => count_paths(*p, spec.length, left, right)?,
        ModelSpec::BlumeCapel { .. } => 3f64.powi(spec.length as i32),
    })
}

/// DMRG for every length, plus ED where the dimension allows, in length order.
pub fn plan(cfg: &RunConfig) -> CliResult<Vec<Job>> {
    let mut jobs = Vec::new();
    for &length in &cfg.run.lengths {
        jobs.push(Job {
            length,
            method: Method::Dmrg,
        });
        if constrained_dimension(&cfg.chain(length)?)? <= cfg.run.ed_threshold as f64 {
            jobs.push(Job { length, method: Method::Ed });
        }
    }
    jobs.sort();
    Ok(jobs)
}

fn record(cfg: &RunConfig, spec: SpinChainSpec, method: Method, energy: f64, converged: bool, sweeps: Vec<dmrg::SweepRecord>, spectrum: &EntanglementSpectrum, half: &EntanglementSpectrum, occupation: Vec<Vec<f64>>) -> RunRecord {
    RunRecord {
        format: RECORD_FORMAT.into(),
        format_version: RECORD_FORMAT_VERSION,
        version: ARTIFACT_VERSION.into(),
        config: cfg.clone(),
        chain: spec,
        method,
        length: spec.length,
        energy,
        converged,
        sweeps,
        spectrum: SpectrumRecord::from(spectrum),
        half_chain: HalfChain {
            cut: half.cut,
            entropy: half.entropy,
            epsilon0: half.energies[0],
        },
        occupation,
        checksums: Checksums { sha256: String::new() },
    }
    .seal()
}

/// Runs one job; the checkpoint, if requested, is written next to the record.
pub fn compute(cfg: &RunConfig, job: Job, out_dir: Option<&Path>) -> CliResult<RunRecord> {
    let spec = cfg.chain(job.length)?;
    let cut = cfg.cut_for(job.length);
    let half = half_cut(job.length);
    match job.method {
        Method::Dmrg => {
            let out = dmrg::ground_state(&spec, &cfg.dmrg)?;
            let labelled = matches!(spec.model, ModelSpec::Rsos { .. });
            let mut mps = out.mps;
            let s_cut = mps.schmidt_at(cut, labelled)?;
            let s_half = mps.schmidt_at(half, labelled)?;
            let occ = mps.occupation_profile()?;
            let rec = record(cfg, spec, Method::Dmrg, out.energy, out.converged, out.sweeps, &s_cut, &s_half, occ);
            if let (true, Some(dir)) = (cfg.run.checkpoint, out_dir) {
                let mut buf = Vec::new();
                write_checkpoint(&mut buf, &mps, &cfg.dmrg, &rec.sweeps)?;
                write_atomic(&dir.join(rec.file_name().replace(".json", ".mps")), &buf)?;
            }
            Ok(rec)
        }
        Method::Ed => {
            let seed = cfg.run.seed;
            match &spec.model {
                ModelSpec::Rsos { p, left, right, .. } => {
                    let (basis, h) = build_hamiltonian_sparse(*p, job.length, left, right)?;
                    let (e, v) = ed::ground_state(&h, seed, ED_TOL)?;
                    let s_cut = ed::schmidt_constrained(&basis, &v, cut)?;
                    let s_half = ed::schmidt_constrained(&basis, &v, half)?;
                    let occ = ed::occupation_constrained(&basis, &v);
                    Ok(record(cfg, spec, Method::Ed, e, true, Vec::new(), &s_cut, &s_half, occ))
                }
                ModelSpec::BlumeCapel { .. } => {
                    let h = spec.build_mpo()?.to_sparse()?;
                    let (e, v) = ed::ground_state(&h, seed, ED_TOL)?;
                    let s_cut = ed::schmidt_tensor(&v, 3, cut)?;
                    let s_half = ed::schmidt_tensor(&v, 3, half)?;
                    let occ = ed::occupation_tensor(&v, 3, job.length);
                    Ok(record(cfg, spec, Method::Ed, e, true, Vec::new(), &s_cut, &s_half, occ))
                }
            }
        }
    }
}

/// Executes the plan with up to `jobs` workers and writes one record per job
/// plus [`SUMMARY_FILE`]. Failed jobs are listed in the summary; the error
/// reports how many failed.
pub fn run(cfg: &RunConfig, out_dir: &Path, jobs: usize) -> CliResult<RunSummary> {
    let plan = plan(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<JobOutcome>>> = Mutex::new(vec![None; plan.len()]);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(&job) = plan.get(i) else { break };
        let outcome = execute(cfg, job, out_dir);
        results.lock().expect("no worker panics while holding the lock")[i] = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, plan.len().max(1)) {
            s.spawn(worker);
        }
    });
    let jobs: Vec<JobOutcome> = results.into_inner().expect("workers finished").into_iter().map(|o| o.expect("every job ran")).collect();
    let summary = RunSummary {
        version: ARTIFACT_VERSION.into(),
        config: cfg.clone(),
        jobs,
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    write_atomic(&out_dir.join(SUMMARY_FILE), &bytes)?;
    let failed = summary.failures();
    if failed > 0 {
        return Err(CliError::JobsFailed {
            failed,
            total: summary.jobs.len(),
        });
    }
    Ok(summary)
}

fn execute(cfg: &RunConfig, job: Job, out_dir: &Path) -> JobOutcome {
    let result = compute(cfg, job, Some(out_dir)).and_then(|rec| {
        let name = rec.file_name();
        write_atomic(&out_dir.join(&name), &rec.to_json())?;
        eprintln!(
            "L = {} {}: E = {:.12}, S(L/2) = {:.6}, eps0 = {:.6}{}",
            job.length,
            job.method.as_str(),
            rec.energy,
            rec.half_chain.entropy,
            rec.half_chain.epsilon0,
            if rec.converged { "" } else { " (not converged)" }
        );
        Ok(name)
    });
    match result {
        Ok(name) => JobOutcome {
            length: job.length,
            method: job.method,
            file: Some(name),
            error: None,
        },
        Err(e) => {
            eprintln!("L = {} {}: failed: {e}", job.length, job.method.as_str());
            JobOutcome {
                length: job.length,
                method: job.method,
                file: None,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Paths of all records listed in a summary.
pub fn record_paths(out_dir: &Path, summary: &RunSummary) -> Vec<PathBuf> {
    summary.jobs.iter().filter_map(|j| j.file.as_ref().map(|f| out_dir.join(f))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn ed_threshold_selects_jobs() {
        let c = cfg("[model]\nkind = \"rsos\"\np = 3\nleft = \"1,1\"\nright = \"1,1\"\n[run]\nlengths = [9, 65]\ned_threshold = 1000\n");
        let plan = plan(&c).unwrap();
        assert_eq!(
            plan,
            vec![
                Job { length: 9, method: Method::Dmrg },
                Job { length: 9, method: Method::Ed },
                Job { length: 65, method: Method::Dmrg },
            ]
        );
    }

    #[test]
    fn dmrg_and_ed_records_agree() {
        let c = cfg("[model]\nkind = \"rsos\"\np = 3\nleft = \"1,1\"\nright = \"1,1\"\n[run]\nlengths = [9]\n[dmrg]\nchi_max = 32\nenergy_tol = 1e-12\n");
        let a = compute(&c, Job { length: 9, method: Method::Dmrg }, None).unwrap();
        let b = compute(&c, Job { length: 9, method: Method::Ed }, None).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-9);
        for (x, y) in a.spectrum.lambda.iter().zip(&b.spectrum.lambda).take(20) {
            assert!((x - y).abs() < 1e-8);
        }
        assert_eq!(a.half_chain.cut, 4);
    }
}
