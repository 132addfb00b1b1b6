use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schmidt weights below this are treated as zeros.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// Reduced density matrix eigenvalues at one cut and the entanglement
/// energies ε = −ln(λ)/(2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    /// Number of sites in the left subsystem.
    pub cut: usize,
    /// Descending, summing to one.
    pub weights: Vec<f64>,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Cut height a_{l−1} of each Schmidt vector, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_labels: Option<Vec<u32>>,
    pub entropy: f64,
}

impl EntanglementSpectrum {
    /// Builds a spectrum from singular values, normalizing their squares.
    pub fn from_singular_values(cut: usize, singular: &[f64], labels: Option<Vec<u32>>) -> Result<Self> {
        let weights: Vec<f64> = singular.iter().map(|s| s * s).collect();
        Self::from_weights(cut, &weights, labels)
    }

    /// Builds a spectrum from unnormalized weights; values under
    /// [`WEIGHT_FLOOR`] after normalization are dropped.
    pub fn from_weights(cut: usize, weights: &[f64], labels: Option<Vec<u32>>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::numeric("Schmidt weights must be finite and nonnegative"));
        }
        if let Some(l) = &labels {
            if l.len() != weights.len() {
                return Err(Error::shape("one block label per Schmidt weight"));
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::numeric("state has zero norm"));
        }
        let mut pairs: Vec<(f64, u32)> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| (w / total, labels.as_ref().map_or(0, |l| l[i])))
            .filter(|(w, _)| *w >= WEIGHT_FLOOR)
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let kept: f64 = pairs.iter().map(|p| p.0).sum();
        let weights: Vec<f64> = pairs.iter().map(|p| p.0 / kept).collect();
        let energies = weights.iter().map(|w| -w.ln() / (2.0 * std::f64::consts::PI)).collect();
        let entropy = weights.iter().map(|w| -w * w.ln()).sum::<f64>().max(0.0);
        Ok(Self {
            cut,
            energies,
            entropy,
            block_labels: labels.map(|_| pairs.iter().map(|p| p.1).collect()),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// ε_i − ε_0.
    pub fn gaps(&self) -> Vec<f64> {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies.iter().map(|e| e - e0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_sorts() {
        let s = EntanglementSpectrum::from_weights(3, &[1.0, 3.0, 1e-20], Some(vec![1, 3, 5])).unwrap();
        assert_eq!(s.weights, vec![0.75, 0.25]);
        assert_eq!(s.block_labels, Some(vec![3, 1]));
        assert!(s.energies[0] < s.energies[1]);
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((s.entropy - expected).abs() < 1e-15);
        assert!(EntanglementSpectrum::from_weights(1, &[0.0], None).is_err());
    }

    #[test]
    fn product_state() {
        let s = EntanglementSpectrum::from_singular_values(2, &[1.0, 0.0], None).unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.energies, vec![0.0]);
    }
}
