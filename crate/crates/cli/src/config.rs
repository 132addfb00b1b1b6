//! Declarative run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "rsos"
//! p = 4
//! left = "1,1"
//! right = "1,1"
//!
//! [run]
//! lengths = [65, 129, 257]
//! seed = 7
//!
//! [dmrg]
//! chi_max = 128
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use entcut::blume_capel::BlumeCapelParams;
use entcut::cft::{KacLabel, MinimalModel};
use entcut::chain::{ModelSpec, SpinChainSpec};
use entcut::dmrg::DmrgConfig;
use entcut::rsos::{PinMode, RsosBc, RsosBcKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_ED_THRESHOLD: u64 = 2_000_000;
pub const OUTPUT_ENV: &str = "ENTCUT_OUT";
pub const DEFAULT_OUTPUT: &str = "entcut-out";

/// Kac labels travel as `"r,s"` strings.
pub mod label_str {
    use entcut::cft::KacLabel;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &KacLabel, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{},{}", x.r, x.s))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<KacLabel, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"r,s"` and replaces it by the canonical representative of its Kac
/// class for minimal model `p`.
pub fn parse_label(p: u32, text: &str) -> CliResult<KacLabel> {
    let m = MinimalModel::new(p)?;
    let x: KacLabel = text.parse()?;
    x.validate(&m)?;
    Ok(x.canonical(&m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Rsos {
        p: u32,
        #[serde(with = "label_str")]
        left: KacLabel,
        #[serde(with = "label_str")]
        right: KacLabel,
        /// Pinning strength of height-fixing ends.
        #[serde(default = "default_pin")]
        pin: f64,
        #[serde(default)]
        pin_mode: PinMode,
    },
    BlumeCapel {
        /// Boundary field on S^x: 0 gives (2,1), positive (1,1), negative (1,4).
        h_b: f64,
    },
}

fn default_pin() -> f64 {
    RsosBc::fixed_1s(1).h_b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub lengths: Vec<usize>,
    /// Cut position as a fraction of L; the cut is `⌊fraction·L⌋` sites.
    #[serde(default = "default_cut")]
    pub cut: f64,
    #[serde(default)]
    pub seed: u64,
    /// Exact diagonalization also runs when the constrained dimension is at
    /// most this.
    #[serde(default = "default_ed_threshold")]
    pub ed_threshold: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Also write the final MPS of every DMRG run.
    #[serde(default)]
    pub checkpoint: bool,
}

fn default_cut() -> f64 {
    0.5
}

fn default_ed_threshold() -> u64 {
    DEFAULT_ED_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Multiplets compared against a tower.
    pub n_levels: usize,
    pub rel_gap: f64,
    /// Character expansion depth for predicted towers.
    pub max_level: usize,
    /// Fits drop chains shorter than this.
    pub min_fit_length: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n_levels: 6,
            rel_gap: 0.25,
            max_level: 8,
            min_fit_length: entcut::analysis::DEFAULT_MIN_FIT_LENGTH,
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> CliResult<()> {
        if self.n_levels == 0 || self.max_level == 0 {
            return Err(CliError::Config("n_levels and max_level must be positive".into()));
        }
        if !(self.rel_gap > 0.0 && self.rel_gap < 1.0) {
            return Err(CliError::Config(format!("rel_gap {} outside (0, 1)", self.rel_gap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub run: RunSection,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default)]
    pub analysis: AnalysisOptions,
}

impl RunConfig {
    /// Parses, canonicalizes labels and validates.
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve()
    }

    pub fn from_file(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Fills derived fields and checks every chain before any compute starts.
    pub fn resolve(mut self) -> CliResult<Self> {
        if let ModelConfig::Rsos { p, left, right, .. } = &mut self.model {
            let m = MinimalModel::new(*p)?;
            for x in [&mut *left, &mut *right] {
                x.validate(&m)?;
                *x = x.canonical(&m);
            }
        }
        if self.dmrg.seed != 0 && self.dmrg.seed != self.run.seed {
            return Err(CliError::Config("set the seed in [run], not [dmrg]".into()));
        }
        self.dmrg.seed = self.run.seed;
        self.dmrg.validate()?;
        self.analysis.validate()?;
        if self.run.lengths.is_empty() {
            return Err(CliError::Config("run.lengths is empty".into()));
        }
        let distinct: BTreeSet<usize> = self.run.lengths.iter().copied().collect();
        if distinct.len() != self.run.lengths.len() {
            return Err(CliError::Config("run.lengths has duplicates".into()));
        }
        if !(self.run.cut > 0.0 && self.run.cut < 1.0) {
            return Err(CliError::Config(format!("cut fraction {} outside (0, 1)", self.run.cut)));
        }
        if self.run.lengths.iter().any(|&l| l > 1_000_000) {
            return Err(CliError::Config("chain lengths above 10^6 are not supported".into()));
        }
        for &l in &self.run.lengths {
            self.chain(l)?.validate()?;
        }
        Ok(self)
    }

    pub fn minimal_model_p(&self) -> u32 {
        match &self.model {
            ModelConfig::Rsos { p, .. } => *p,
            ModelConfig::BlumeCapel { .. } => 4,
        }
    }

    pub fn chain(&self, length: usize) -> CliResult<SpinChainSpec> {
        match &self.model {
            ModelConfig::Rsos {
                p,
                left,
                right,
                pin,
                pin_mode,
            } => {
                let l = RsosBc::from_kac(*p, left)?.with_pin(*pin);
                let r = RsosBc::from_kac(*p, right)?.with_pin(*pin);
                let mut spec = SpinChainSpec::rsos(*p, length, l, r);
                if let ModelSpec::Rsos { pin_mode: mode, .. } = &mut spec.model {
                    *mode = *pin_mode;
                }
                Ok(spec)
            }
            ModelConfig::BlumeCapel { h_b } => Ok(SpinChainSpec::blume_capel(BlumeCapelParams::tricritical(*h_b), length)),
        }
    }

    /// Number of sites left of the cut for a chain of `length`.
    pub fn cut_for(&self, length: usize) -> usize {
        ((self.run.cut * length as f64).floor() as usize).clamp(1, length - 1)
    }

    pub fn output_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.run.output.clone())
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }
}

/// Short tag naming the model and its ends, used in file names.
pub fn family_tag(spec: &SpinChainSpec) -> String {
    match &spec.model {
        ModelSpec::Rsos { p, left, right, .. } => {
            let t = |bc: &RsosBc| match bc.kind {
                RsosBcKind::Fixed1s(s) => format!("1.{s}"),
                RsosBcKind::FixedR1(r) => format!("{r}.1"),
            };
            format!("rsos-p{p}-{}-{}", t(left), t(right))
        }
        ModelSpec::BlumeCapel { params } => {
            let b = params.boundary_label();
            format!("bc-{}.{}", b.r, b.s)
        }
    }
}
