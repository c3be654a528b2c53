//! Zero-mean, symmetric, unimodal coefficient priors and their moment fits.
//!
//! Generalized Gaussian with scale `s` and shape `p`:
//! `p(v) = p / (2 s Γ(1/p)) · exp(−(|v|/s)^p)`. The Laplacian is `p = 1`;
//! `p = 2` is a Gaussian with variance `s²/2`.

use libm::lgamma;
use serde::{Deserialize, Serialize};

use crate::error::{FbError, Result};

/// Shapes below this are not fitted; the moment ratios blow up.
pub const MIN_SHAPE: f64 = 0.2;
pub const MAX_SHAPE: f64 = 2.0;
/// Scales are floored at this fraction of the largest fitted scale.
pub const SCALE_FLOOR_REL: f64 = 1e-6;
const SCALE_FLOOR_ABS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorFamily {
    GeneralizedGaussian,
    Laplacian,
}

/// One scalar density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenGaussian {
    pub scale: f64,
    pub shape: f64,
}

impl GenGaussian {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FbError::InvalidModel(format!("prior scale {scale}")));
        }
        if !(shape > 0.0 && shape <= MAX_SHAPE) {
            return Err(FbError::InvalidModel(format!(
                "prior shape {shape} outside (0, 2]"
            )));
        }
        Ok(GenGaussian { scale, shape })
    }

    pub fn laplacian(scale: f64) -> Result<Self> {
        Self::new(scale, 1.0)
    }

    pub fn ln_norm(&self) -> f64 {
        (self.shape / (2.0 * self.scale)).ln() - lgamma(1.0 / self.shape)
    }

    /// `−(|v|/s)^p`, the log density up to its normalizer.
    pub fn ln_kernel(&self, v: f64) -> f64 {
        -(v.abs() / self.scale).powf(self.shape)
    }

    pub fn density(&self, v: f64) -> f64 {
        (self.ln_norm() + self.ln_kernel(v)).exp()
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * ratio_gamma(3.0, 1.0, self.shape)
    }

    pub fn mean_abs(&self) -> f64 {
        self.scale * ratio_gamma(2.0, 1.0, self.shape)
    }
}

/// `Γ(a/p) / Γ(b/p)`.
fn ratio_gamma(a: f64, b: f64, p: f64) -> f64 {
    (lgamma(a / p) - lgamma(b / p)).exp()
}

/// `E[v²] / E[|v|]²` as a function of shape; decreasing from ∞ to π/2.
pub fn abs_moment_ratio(p: f64) -> f64 {
    (lgamma(1.0 / p) + lgamma(3.0 / p) - 2.0 * lgamma(2.0 / p)).exp()
}

/// `E[v⁴] / E[v²]²`; decreasing from ∞ to 3.
pub fn kurtosis(p: f64) -> f64 {
    (lgamma(5.0 / p) + lgamma(1.0 / p) - 2.0 * lgamma(3.0 / p)).exp()
}

/// Inverts a decreasing function of shape on `[MIN_SHAPE, MAX_SHAPE]`,
/// clamping at the ends.
fn invert_shape(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    if !(target.is_finite()) || target >= f(MIN_SHAPE) {
        return MIN_SHAPE;
    }
    if target <= f(MAX_SHAPE) {
        return MAX_SHAPE;
    }
    let (mut lo, mut hi) = (MIN_SHAPE, MAX_SHAPE);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-subband priors sharing a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    pub family: PriorFamily,
    /// One density per subband, in the caller's subband order.
    pub bands: Vec<GenGaussian>,
}

impl PriorModel {
    pub fn uniform(family: PriorFamily, shape: f64, scales: &[f64]) -> Result<Self> {
        let shape = match family {
            PriorFamily::Laplacian => 1.0,
            PriorFamily::GeneralizedGaussian => shape,
        };
        Ok(PriorModel {
            family,
            bands: scales
                .iter()
                .map(|&s| GenGaussian::new(s, shape))
                .collect::<Result<_>>()?,
        })
    }

    pub fn band(&self, k: usize) -> &GenGaussian {
        &self.bands[k]
    }
}

/// Result of a moment fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorFit {
    pub model: PriorModel,
    /// Bands whose scale hit the floor (e.g. identically zero coefficients).
    pub degenerate: Vec<bool>,
}

/// Moments of clean coefficients from samples observed with additive
/// Gaussian noise of the given variance.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CleanMoments {
    mean_abs: f64,
    m2: f64,
    m4: f64,
}

fn clean_moments(samples: &[f64], noise_var: f64) -> CleanMoments {
    let n = samples.len().max(1) as f64;
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let o2 = samples.iter().map(|v| v * v).sum::<f64>() / n;
    let o4 = samples.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    let m2 = o2 - noise_var;
    let m4 = o4 - 6.0 * m2.max(0.0) * noise_var - 3.0 * noise_var * noise_var;
    CleanMoments { mean_abs, m2, m4 }
}

/// Fits one prior per band by the method of moments.
///
/// With `noise_var = 0` the Laplacian uses `s = mean|v|` and the generalized
/// Gaussian matches `E[v²]/E|v|²`. With noise, second and fourth moments are
/// corrected for the Gaussian noise first; the Laplacian then uses
/// `s = √(m₂/2)` and the generalized Gaussian matches the kurtosis.
pub fn fit_prior(bands: &[&[f64]], family: PriorFamily, noise_var: &[f64]) -> Result<PriorFit> {
    if bands.is_empty() || bands.iter().any(|b| b.is_empty()) {
        return Err(FbError::InvalidModel(
            "prior fit needs samples in every band".into(),
        ));
    }
    if noise_var.len() != bands.len() {
        return Err(FbError::LengthMismatch {
            left: bands.len(),
            right: noise_var.len(),
        });
    }
    let raw: Vec<Option<(f64, f64)>> = bands
        .iter()
        .zip(noise_var)
        .map(|(b, &nv)| {
            let m = clean_moments(b, nv);
            let fit = if nv == 0.0 {
                match family {
                    PriorFamily::Laplacian => (m.mean_abs, 1.0),
                    PriorFamily::GeneralizedGaussian => {
                        if m.mean_abs == 0.0 {
                            return None;
                        }
                        let p = invert_shape(m.m2 / (m.mean_abs * m.mean_abs), abs_moment_ratio);
                        (m.mean_abs / ratio_gamma(2.0, 1.0, p), p)
                    }
                }
            } else {
                if m.m2 <= 0.0 {
                    return None;
                }
                let p = match family {
                    PriorFamily::Laplacian => 1.0,
                    PriorFamily::GeneralizedGaussian => {
                        invert_shape(m.m4 / (m.m2 * m.m2), kurtosis)
                    }
                };
                ((m.m2 / ratio_gamma(3.0, 1.0, p)).sqrt(), p)
            };
            (fit.0 > 0.0 && fit.0.is_finite()).then_some(fit)
        })
        .collect();
    let top = raw.iter().flatten().map(|f| f.0).fold(0.0, f64::max);
    let floor = (SCALE_FLOOR_REL * top).max(SCALE_FLOOR_ABS);
    let mut degenerate = Vec::with_capacity(raw.len());
    let densities = raw
        .into_iter()
        .map(|f| {
            let (s, p) = f.unwrap_or((
                0.0,
                if family == PriorFamily::Laplacian {
                    1.0
                } else {
                    MAX_SHAPE
                },
            ));
            degenerate.push(s < floor);
            GenGaussian::new(s.max(floor), p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriorFit {
        model: PriorModel {
            family,
            bands: densities,
        },
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKeyword {
    Fit,
}

/// Either explicit per-subband scales or `"fit"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scales {
    Fit(FitKeyword),
    Values(Vec<f64>),
}

impl Scales {
    pub fn fit() -> Self {
        Scales::Fit(FitKeyword::Fit)
    }
}

/// Prior configuration as written in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub family: PriorFamily,
    /// Shape `p`; ignored for the Laplacian, required with explicit scales
    /// for the generalized Gaussian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    pub scales: Scales,
}

impl PriorSpec {
    pub fn fit(family: PriorFamily) -> Self {
        PriorSpec {
            family,
            shape: None,
            scales: Scales::fit(),
        }
    }

    /// The model for `bands` subbands when scales are explicit; a single
    /// scale is shared by every band.
    pub fn explicit_model(&self, bands: usize) -> Result<Option<PriorModel>> {
        let values = match &self.scales {
            Scales::Fit(_) => return Ok(None),
            Scales::Values(v) => v,
        };
        let scales = match values.len() {
            1 => vec![values[0]; bands],
            n if n == bands => values.clone(),
            n => {
                return Err(FbError::InvalidModel(format!(
                    "prior lists {n} scales, expected 1 or {bands}"
                )))
            }
        };
        let shape = match (self.family, self.shape) {
            (PriorFamily::Laplacian, _) => 1.0,
            (PriorFamily::GeneralizedGaussian, Some(p)) => p,
            (PriorFamily::GeneralizedGaussian, None) => {
                return Err(FbError::InvalidModel(
                    "generalized Gaussian prior with explicit scales needs a shape".into(),
                ))
            }
        };
        PriorModel::uniform(self.family, shape, &scales).map(Some)
    }
}
