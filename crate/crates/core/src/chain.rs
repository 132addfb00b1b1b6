//! Model choice, chain length and boundary conditions in one value.

use serde::{Deserialize, Serialize};

use crate::blume_capel::{build_bc_mpo, BlumeCapelParams};
use crate::cft::KacLabel;
use crate::error::{Error, Result};
use crate::mpo::Mpo;
use crate::rsos::{self, PinMode, RsosBc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Rsos {
        p: u32,
        left: RsosBc,
        right: RsosBc,
        #[serde(default)]
        pin_mode: PinMode,
    },
    BlumeCapel {
        params: BlumeCapelParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinChainSpec {
    pub model: ModelSpec,
    pub length: usize,
}

impl SpinChainSpec {
    pub fn rsos(p: u32, length: usize, left: RsosBc, right: RsosBc) -> Self {
        Self {
            model: ModelSpec::Rsos {
                p,
                left,
                right,
                pin_mode: PinMode::Projected,
            },
            length,
        }
    }

    pub fn blume_capel(params: BlumeCapelParams, length: usize) -> Self {
        Self {
            model: ModelSpec::BlumeCapel { params },
            length,
        }
    }

    /// Checks labels, pins and the length/parity constraints.
    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelSpec::Rsos { p, left, right, .. } => {
                left.validate(*p)?;
                right.validate(*p)?;
                if self.length < 3 {
                    return Err(Error::domain("an RSOS chain needs L >= 3"));
                }
                if left.kind == right.kind && self.length % 2 == 0 {
                    return Err(Error::domain(format!(
                        "identical boundary conditions need an odd chain length, got L = {}",
                        self.length
                    )));
                }
                // short chains can fail through overlapping pins, so enumerate them
                let compatible = if self.length <= 12 {
                    !rsos::enumerate_paths(*p, self.length, left, right)?.is_empty()
                } else {
                    end_parity_compatible(left, right, self.length)
                };
                if !compatible {
                    return Err(Error::domain(format!(
                        "no RSOS path of length {} joins {:?} and {:?}",
                        self.length, left.kind, right.kind
                    )));
                }
                Ok(())
            }
            ModelSpec::BlumeCapel { params } => {
                params.validate()?;
                if self.length < 2 {
                    return Err(Error::domain("a Blume-Capel chain needs L >= 2"));
                }
                Ok(())
            }
        }
    }

    pub fn local_dim(&self) -> usize {
        match &self.model {
            ModelSpec::Rsos { p, .. } => *p as usize,
            ModelSpec::BlumeCapel { .. } => 3,
        }
    }

    pub fn build_mpo(&self) -> Result<Mpo> {
        self.validate()?;
        match &self.model {
            ModelSpec::Rsos {
                p,
                left,
                right,
                pin_mode,
            } => rsos::build_hamiltonian_mpo(*p, self.length, left, right, *pin_mode),
            ModelSpec::BlumeCapel { params } => build_bc_mpo(params, self.length),
        }
    }

    /// Constant to subtract from MPO energies so they compare with the
    /// constrained Hamiltonian: the pinning energy in the pinned sector.
    pub fn energy_offset(&self) -> f64 {
        match &self.model {
            ModelSpec::Rsos { left, right, .. } => rsos::pin_offset(left, right),
            ModelSpec::BlumeCapel { .. } => 0.0,
        }
    }

    /// Cardy labels of the two physical ends.
    pub fn boundary_labels(&self) -> (KacLabel, KacLabel) {
        match &self.model {
            ModelSpec::Rsos { left, right, .. } => (left.kac_label(), right.kac_label()),
            ModelSpec::BlumeCapel { params } => (params.boundary_label(), params.boundary_label()),
        }
    }

    /// Minimal-model index: p for RSOS, 4 for the tricritical Blume–Capel chain.
    pub fn minimal_model_p(&self) -> u32 {
        match &self.model {
            ModelSpec::Rsos { p, .. } => *p,
            ModelSpec::BlumeCapel { .. } => 4,
        }
    }
}

fn end_parity_compatible(left: &RsosBc, right: &RsosBc, length: usize) -> bool {
    use rsos::RsosBcKind::*;
    let outer = |bc: &RsosBc| match bc.kind {
        Fixed1s(s) => s,
        FixedR1(r) => r,
    };
    let steps = length - 1;
    let gap = outer(left).abs_diff(outer(right)) as usize;
    gap <= steps && (steps - gap) % 2 == 0
}
