use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::interaction::{InteractionMode, MultiHeadConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RgnConfig {
    pub encoder: EncoderConfig,
    /// Filled in from the vocabulary when the model is built.
    pub vocab_size: usize,
    /// Entities kept per side, and relations kept.
    pub k: usize,
    /// Hidden widths of the entity score MLPs.
    pub entity_hidden: Vec<usize>,
    /// Hidden widths of the relation score MLP.
    pub relation_hidden: Vec<usize>,
    /// Hidden width of the two-layer classifier.
    pub classifier_hidden: usize,
    pub interaction_mode: InteractionMode,
    pub multi_head: MultiHeadConfig,
    pub use_entity_gating: bool,
    pub use_relation_gating: bool,
    /// Adds the polarity-mirror penalty on flipped question pairs.
    pub use_consistency: bool,
    pub consistency_weight: f64,
    pub seed: u64,
}

impl Default for RgnConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            vocab_size: 0,
            k: 10,
            entity_hidden: vec![64, 64],
            relation_hidden: vec![64, 64],
            classifier_hidden: 64,
            interaction_mode: InteractionMode::Cim,
            multi_head: MultiHeadConfig::default(),
            use_entity_gating: true,
            use_relation_gating: true,
            use_consistency: false,
            consistency_weight: 0.1,
            seed: 0,
        }
    }
}

impl RgnConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.use_relation_gating && !self.use_entity_gating {
            return bad("relation gating requires entity gating".into());
        }
        if self.use_relation_gating && self.k > super::relation_count(self.k) {
            return bad(format!("k={} exceeds the relation candidate count", self.k));
        }
        if self.entity_hidden.contains(&0) || self.relation_hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if self.classifier_hidden == 0 {
            return bad("classifier_hidden must be positive".into());
        }
        if !(self.consistency_weight.is_finite() && self.consistency_weight >= 0.0) {
            return bad(format!(
                "consistency_weight must be finite and non-negative, got {}",
                self.consistency_weight
            ));
        }
        if self.interaction_mode == InteractionMode::MultiHead
            && (self.multi_head.heads == 0 || self.encoder.d % self.multi_head.heads != 0)
        {
            return bad(format!(
                "{} interaction heads do not divide d={}",
                self.multi_head.heads, self.encoder.d
            ));
        }
        Ok(())
    }

    /// Rows per side entering the interaction: `k` when gated, otherwise
    /// every position of the longer sequence.
    pub fn side_rows(&self) -> usize {
        if self.use_entity_gating {
            self.k
        } else {
            self.encoder.m.max(self.encoder.n)
        }
    }

    /// Shape of the representation `F` before flattening.
    pub fn representation_shape(&self) -> (usize, usize) {
        let side = self.side_rows();
        let interaction_rows = match self.interaction_mode {
            InteractionMode::None => side,
            _ => 2 * side,
        };
        let relation_rows = if self.use_relation_gating { self.k } else { 0 };
        (interaction_rows + relation_rows, 2 * self.encoder.d)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_representation_is_three_k_rows() {
        let c = RgnConfig::default();
        assert_eq!(c.representation_shape(), (30, 128));
    }

    #[test]
    fn ablation_shapes() {
        let c = RgnConfig {
            use_relation_gating: false,
            ..RgnConfig::default()
        };
        assert_eq!(c.representation_shape(), (20, 128));
        let c = RgnConfig {
            use_relation_gating: false,
            use_entity_gating: false,
            ..RgnConfig::default()
        };
        assert_eq!(c.representation_shape(), (128, 128));
        let c = RgnConfig {
            interaction_mode: InteractionMode::None,
            ..RgnConfig::default()
        };
        assert_eq!(c.representation_shape(), (20, 128));
    }

    #[test]
    fn invalid_configs() {
        for c in [
            RgnConfig { k: 0, ..RgnConfig::default() },
            RgnConfig { use_entity_gating: false, ..RgnConfig::default() },
            RgnConfig { consistency_weight: f64::NAN, ..RgnConfig::default() },
            RgnConfig { entity_hidden: vec![0], ..RgnConfig::default() },
        ] {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
        RgnConfig::default().validate().unwrap();
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = RgnConfig::default();
        assert_eq!(a.fingerprint(), RgnConfig::default().fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
        let b = RgnConfig { seed: 1, ..a.clone() };
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RgnConfig>(r#"{"kk": 3}"#);
        assert!(err.is_err());
        let c: RgnConfig = serde_json::from_str(r#"{"k": 3}"#).unwrap();
        assert_eq!(c.k, 3);
    }
}
