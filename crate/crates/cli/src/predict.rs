//! `entcut predict`: the boundary-CFT tower between two Cardy states.

use entcut::cft::{cardy_degeneracies, KacLabel, MinimalModel, Rational};
use serde::{Deserialize, Serialize};

use crate::config::label_str;
use crate::error::CliResult;
use crate::record::ARTIFACT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    #[serde(with = "label_str")]
    pub label: KacLabel,
    /// Exact weight, `"num/den"`.
    pub h: String,
    pub h_value: f64,
    /// Level-n degeneracies of the character.
    pub coefficients: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDoc {
    pub offset: String,
    pub offset_value: f64,
    pub degeneracy: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerDoc {
    pub version: String,
    pub p: u32,
    pub central_charge: String,
    #[serde(with = "label_str")]
    pub a: KacLabel,
    #[serde(with = "label_str")]
    pub b: KacLabel,
    pub channels: Vec<ChannelDoc>,
    /// All channels merged by offset `h_i + n`.
    pub levels: Vec<LevelDoc>,
}

fn exact(q: Rational) -> (String, f64) {
    (q.to_string(), *q.numer() as f64 / *q.denom() as f64)
}

pub fn predict(p: u32, a: KacLabel, b: KacLabel, max_level: usize) -> CliResult<TowerDoc> {
    let m = MinimalModel::new(p)?;
    let tower = cardy_degeneracies(&m, &a, &b, max_level)?;
    let channels = tower
        .channels
        .iter()
        .map(|c| {
            let (h, h_value) = exact(c.h);
            ChannelDoc {
                label: c.label,
                h,
                h_value,
                coefficients: c.coeffs.clone(),
            }
        })
        .collect();
    let levels = tower
        .levels
        .iter()
        .map(|l| {
            let (offset, offset_value) = exact(l.offset);
            LevelDoc {
                offset,
                offset_value,
                degeneracy: l.degeneracy,
            }
        })
        .collect();
    Ok(TowerDoc {
        version: ARTIFACT_VERSION.into(),
        p,
        central_charge: m.central_charge().to_string(),
        a: tower.a,
        b: tower.b,
        channels,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_channel_for_quasi_free_and_fixed() {
        let doc = predict(4, KacLabel::new(2, 2), KacLabel::new(1, 1), 6).unwrap();
        assert_eq!(doc.channels.len(), 1);
        assert_eq!(doc.channels[0].h, "3/80");
        assert_eq!(doc.channels[0].coefficients.len(), 7);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"coefficients\":[1,1,"));
    }

    #[test]
    fn vacuum_tower() {
        let doc = predict(3, KacLabel::new(1, 1), KacLabel::new(1, 1), 4).unwrap();
        assert_eq!(doc.channels.len(), 1);
        assert_eq!(doc.channels[0].h, "0");
        assert_eq!(&doc.channels[0].coefficients[..4], &[1, 0, 1, 1]);
    }

    #[test]
    fn invalid_label_is_an_error() {
        assert!(predict(4, KacLabel::new(4, 1), KacLabel::new(1, 1), 4).is_err());
    }
}
