//! JSON result records, one per (chain, method).
//!
//! Floats are written in shortest round-trip form, so parsing a record and
//! writing it again reproduces the same bytes.

use entcut::chain::SpinChainSpec;
use entcut::dmrg::SweepRecord;
use entcut::spectrum::EntanglementSpectrum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const RECORD_FORMAT: &str = "entcut-run";
pub const RECORD_FORMAT_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dmrg,
    Ed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dmrg => "dmrg",
            Method::Ed => "ed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRecord {
    pub cut: usize,
    /// Reduced density matrix eigenvalues, descending.
    pub lambda: Vec<f64>,
    /// Entanglement energies `−ln λ / 2π`, ascending.
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_labels: Option<Vec<u32>>,
    pub entropy: f64,
}

impl From<&EntanglementSpectrum> for SpectrumRecord {
    fn from(s: &EntanglementSpectrum) -> Self {
        Self {
            cut: s.cut,
            lambda: s.weights.clone(),
            epsilon: s.energies.clone(),
            block_labels: s.block_labels.clone(),
            entropy: s.entropy,
        }
    }
}

impl SpectrumRecord {
    pub fn to_spectrum(&self) -> entcut::Result<EntanglementSpectrum> {
        EntanglementSpectrum::from_weights(self.cut, &self.lambda, self.block_labels.clone())
    }
}

/// Half-chain quantities used by the fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfChain {
    pub cut: usize,
    pub entropy: f64,
    pub epsilon0: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checksums {
    /// SHA-256 of the compact JSON of the record with this field empty.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub format: String,
    pub format_version: u32,
    pub version: String,
    pub config: RunConfig,
    pub chain: SpinChainSpec,
    pub method: Method,
    pub length: usize,
    /// Ground-state energy of the constrained Hamiltonian (pin energy removed).
    pub energy: f64,
    pub converged: bool,
    pub sweeps: Vec<SweepRecord>,
    pub spectrum: SpectrumRecord,
    pub half_chain: HalfChain,
    /// Per-site occupation of each local basis state.
    pub occupation: Vec<Vec<f64>>,
    pub checksums: Checksums,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a run record (format {0:?})")]
    WrongFormat(String),
    #[error("unsupported record format version {0}")]
    WrongFormatVersion(u32),
    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },
    #[error("record length {length} disagrees with its chain ({chain})")]
    Inconsistent { length: usize, chain: usize },
}

impl RunRecord {
    fn digest(&self) -> String {
        let mut blank = self.clone();
        blank.checksums.sha256.clear();
        let bytes = serde_json::to_vec(&blank).expect("records serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Fills in the checksum.
    pub fn seal(mut self) -> Self {
        self.checksums.sha256 = self.digest();
        self
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("records serialize");
        out.push(b'\n');
        out
    }

    /// Parses and verifies a record.
    pub fn from_json(bytes: &[u8]) -> Result<Self, RecordError> {
        let rec: RunRecord = serde_json::from_slice(bytes)?;
        if rec.format != RECORD_FORMAT {
            return Err(RecordError::WrongFormat(rec.format));
        }
        if rec.format_version != RECORD_FORMAT_VERSION {
            return Err(RecordError::WrongFormatVersion(rec.format_version));
        }
        if rec.length != rec.chain.length {
            return Err(RecordError::Inconsistent {
                length: rec.length,
                chain: rec.chain.length,
            });
        }
        let computed = rec.digest();
        if computed != rec.checksums.sha256 {
            return Err(RecordError::Checksum {
                stored: rec.checksums.sha256,
                computed,
            });
        }
        Ok(rec)
    }

    /// File name inside the output directory.
    pub fn file_name(&self) -> String {
        format!("{}_L{}_{}.json", crate::config::family_tag(&self.chain), self.length, self.method.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use proptest::prelude::*;

    fn sample(energy: f64, lambda: Vec<f64>) -> RunRecord {
        let cfg = RunConfig::from_toml_str("[model]\nkind = \"rsos\"\np = 3\nleft = \"1,1\"\nright = \"1,1\"\n[run]\nlengths = [9]\n").unwrap();
        let chain = cfg.chain(9).unwrap();
        let epsilon = lambda.iter().map(|w| -w.ln() / (2.0 * std::f64::consts::PI)).collect();
        RunRecord {
            format: RECORD_FORMAT.into(),
            format_version: RECORD_FORMAT_VERSION,
            version: ARTIFACT_VERSION.into(),
            config: cfg,
            chain,
            method: Method::Ed,
            length: 9,
            energy,
            converged: true,
            sweeps: Vec::new(),
            spectrum: SpectrumRecord {
                cut: 4,
                lambda,
                epsilon,
                block_labels: None,
                entropy: 0.25,
            },
            half_chain: HalfChain {
                cut: 4,
                entropy: 0.25,
                epsilon0: 0.1,
            },
            occupation: vec![vec![1.0, 0.0, 0.0]; 9],
            checksums: Checksums { sha256: String::new() },
        }
        .seal()
    }

    #[test]
    fn checksum_detects_edits() {
        let rec = sample(-3.5, vec![0.75, 0.25]);
        let bytes = rec.to_json();
        assert_eq!(RunRecord::from_json(&bytes).unwrap(), rec);
        let text = String::from_utf8(bytes).unwrap().replace("-3.5", "-3.25");
        assert!(matches!(RunRecord::from_json(text.as_bytes()), Err(RecordError::Checksum { .. })));
    }

    proptest! {
        #[test]
        fn reserialization_is_lossless(energy in -1e6f64..1e6, lambda in proptest::collection::vec(1e-14f64..1.0, 1..20)) {
            let rec = sample(energy, lambda);
            let bytes = rec.to_json();
            let back = RunRecord::from_json(&bytes).unwrap();
            prop_assert_eq!(back.energy.to_bits(), rec.energy.to_bits());
            prop_assert_eq!(back.to_json(), bytes);
        }
    }
}
