//! Model files for the restoration commands.
//!
//! ```json
//! {"model": "subsampled_noisy", "sigma": 20, "depth": 3, "filterbank": "haar",
//!  "prior": {"family": "laplacian", "scales": "fit"}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FbError, Result};
use crate::io::read_to_string;
use crate::likelihood::ObservationKind;
use crate::pipeline::MonteCarlo;
use crate::prior::PriorSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ObservationKind,
    pub sigma: f64,
    pub depth: u32,
    pub filterbank: String,
    pub prior: PriorSpec,
    /// Optional sampling estimator in place of quadrature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| FbError::Config(format!("model file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
            .map_err(|e| FbError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(FbError::Config(format!(
                "sigma {} must be finite and ≥ 0",
                self.sigma
            )));
        }
        if self.depth == 0 {
            return Err(FbError::Config("depth must be at least 1".into()));
        }
        if let Some(mc) = self.monte_carlo {
            if mc.draws == 0 {
                return Err(FbError::Config("monte_carlo.draws must be positive".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{PriorFamily, Scales};

    #[test]
    fn parse_and_reject() {
        let c = ModelConfig::from_json(
            r#"{"model":"multiplicative","sigma":0.3,"depth":2,"filterbank":"haar",
                "prior":{"family":"generalized_gaussian","shape":0.8,"scales":[1,2,3,4]}}"#,
        )
        .unwrap();
        assert_eq!(c.model, ObservationKind::Multiplicative);
        assert_eq!(c.prior.family, PriorFamily::GeneralizedGaussian);
        assert_eq!(c.prior.scales, Scales::Values(vec![1.0, 2.0, 3.0, 4.0]));
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ModelConfig::from_json(&text).unwrap(), c);

        let unknown = r#"{"model":"multiplicative","sigma":0.3,"depth":2,"filterbank":"haar",
            "prior":{"family":"laplacian","scales":"fit"},"extra":1}"#;
        assert!(matches!(
            ModelConfig::from_json(unknown),
            Err(FbError::Config(_))
        ));
        let depth0 = r#"{"model":"subsampled_noisy","sigma":1,"depth":0,"filterbank":"haar",
            "prior":{"family":"laplacian","scales":"fit"}}"#;
        assert!(ModelConfig::from_json(depth0).is_err());
    }
}
