//! Filterbank-domain likelihoods of two observation models.
//!
//! * Subsampled and noisy, `y = x_s + ξ_s`, under a unitary filterbank:
//!   `v^y_𝒊 = ½(v_𝒊 + (−1)^{i_0} w_{𝒊′}) + noise`, with noise variance `σ²/2`
//!   when every analysis branch carries half its energy on even taps. This
//!   holds for Haar but not in general (four-tap Daubechies splits
//!   0.28 / 0.72), so the exact per-subband variance is also provided.
//! * Multiplicative, `y = x + xξ`, under gain-2 Haar: at each position the
//!   coefficient vector is Normal with mean `v_𝒊` and covariance
//!   `σ² (v ⊛ v)_{𝒊+𝒋}`. The covariance is a dyadic (XOR-circulant) matrix,
//!   so its eigenvalues are the Walsh transform of its first row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_multi, check_depth};
use crate::complement::alias_decompose;
use crate::error::{FbError, Result};
use crate::filterbank::{FilterbankPair, Normalization};
use crate::rng::NoiseStream;
use crate::scs::{require_haar_gain2, WalshBlock};
use crate::signal::{Image2D, Signal1D};
use crate::subband::{SubbandIndex, SubbandSet};

/// Relative deviation from `σ²/2` above which a warning is raised.
pub const VARIANCE_WARN_REL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NoisySubsampledModel {
    sigma2: f64,
    fb: FilterbankPair,
    depth: u32,
}

impl NoisySubsampledModel {
    pub fn new(sigma2: f64, fb: FilterbankPair, depth: u32) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(FbError::InvalidModel(format!(
                "noise variance {sigma2} must be positive"
            )));
        }
        if fb.normalization() != Normalization::Unitary {
            return Err(FbError::Normalization {
                expected: Normalization::Unitary.to_string(),
                found: fb.normalization().to_string(),
            });
        }
        if depth == 0 {
            return Err(FbError::UnsupportedDepth {
                depth,
                reason: "depth must be at least 1".into(),
            });
        }
        Ok(NoisySubsampledModel { sigma2, fb, depth })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn filterbank(&self) -> &FilterbankPair {
        &self.fb
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

#[derive(Debug, Clone)]
pub struct MultiplicativeModel {
    sigma2: f64,
    depth: u32,
}

impl MultiplicativeModel {
    pub fn new(sigma2: f64, depth: u32) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(FbError::InvalidModel(format!(
                "noise variance {sigma2} must be positive"
            )));
        }
        if depth == 0 {
            return Err(FbError::UnsupportedDepth {
                depth,
                reason: "depth must be at least 1".into(),
            });
        }
        Ok(MultiplicativeModel { sigma2, depth })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

/// Per-subband average over positions of `Σ_{m even} c_𝒊[n; m]²`, where
/// `c[·; m]` are the coefficients of `pre(δ_m)`: the variance of each
/// coefficient when unit-variance white noise is kept on even samples only
/// and then passed through `pre`.
pub fn even_noise_gain(
    fb: &FilterbankPair,
    depth: u32,
    len: usize,
    pre: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
) -> Result<Vec<f64>> {
    check_depth(len, depth)?;
    let sums: Vec<Vec<f64>> = (0..len)
        .step_by(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| -> Result<Vec<f64>> {
            let mut d = vec![0.0; len];
            d[m] = 1.0;
            let v = analyze_multi(&Signal1D::new(pre(&d))?, fb, depth)?;
            Ok(v.bands()
                .iter()
                .map(|b| b.iter().map(|c| c * c).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    let band_len = (len >> depth) as f64;
    let nb = 1usize << depth;
    Ok((0..nb)
        .map(|i| sums.iter().map(|s| s[i]).sum::<f64>() / band_len)
        .collect())
}

/// Exact noise variance of each subband of `ξ_s` for a length-`len` signal.
pub fn subsampled_noise_variance(m: &NoisySubsampledModel, len: usize) -> Result<Vec<f64>> {
    Ok(even_noise_gain(&m.fb, m.depth, len, &|x| x.to_vec())?
        .into_iter()
        .map(|g| g * m.sigma2)
        .collect())
}

#[derive(Debug, Clone)]
pub struct SubsampledLikelihood {
    /// `½(v_𝒊 + (−1)^{i_0} w_{𝒊′})`.
    pub mean: SubbandSet,
    /// `σ²/2`.
    pub variance: f64,
    /// Exact per-subband variance for this signal length.
    pub exact_variance: Vec<f64>,
    /// Set when the exact variance departs from `σ²/2`.
    pub warning: Option<String>,
}

impl SubsampledLikelihood {
    pub fn max_variance_deviation(&self) -> f64 {
        self.exact_variance
            .iter()
            .map(|v| (v - self.variance).abs() / self.variance)
            .fold(0.0, f64::max)
    }
}

/// Normal likelihood of each coefficient of `y = x_s + ξ_s`, given the clean
/// regular and complementary coefficients of `x`.
pub fn subsampled_noisy_likelihood(
    v: &SubbandSet,
    w: &SubbandSet,
    m: &NoisySubsampledModel,
) -> Result<SubsampledLikelihood> {
    if v.provenance().normalization != Normalization::Unitary {
        return Err(FbError::Normalization {
            expected: Normalization::Unitary.to_string(),
            found: v.provenance().normalization.to_string(),
        });
    }
    if v.depth() != m.depth {
        return Err(FbError::DepthMismatch {
            left: v.depth(),
            right: m.depth,
        });
    }
    let mean = alias_decompose(v, w)?;
    let variance = 0.5 * m.sigma2;
    let exact_variance = subsampled_noise_variance(m, v.signal_length())?;
    let mut lik = SubsampledLikelihood {
        mean,
        variance,
        exact_variance,
        warning: None,
    };
    let dev = lik.max_variance_deviation();
    if dev > VARIANCE_WARN_REL {
        lik.warning = Some(format!(
            "filterbank `{}`: subband noise variance departs from σ²/2 by up to {:.1}%",
            m.fb.name(),
            100.0 * dev
        ));
    }
    Ok(lik)
}

#[derive(Debug, Clone)]
pub struct MultiplicativeLikelihood {
    sigma2: f64,
    /// `v_𝒊[n]`.
    pub mean: SubbandSet,
    /// `(v ⊛ v)_𝒎[n]`, PSD-projected; the covariance generator.
    autocorr: SubbandSet,
}

impl MultiplicativeLikelihood {
    /// `Cov(v^y_𝒊[n], v^y_𝒋[n])`.
    pub fn covariance(&self, i: SubbandIndex, j: SubbandIndex, n: usize) -> f64 {
        self.sigma2 * self.autocorr.get(i + j, n)
    }

    /// Diagonal entry, identical for all subbands at a position.
    pub fn variance(&self, n: usize) -> f64 {
        self.sigma2 * self.autocorr.bands()[0][n]
    }

    pub fn covariance_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let d = self.mean.depth();
        SubbandIndex::all(d)
            .map(|i| {
                SubbandIndex::all(d)
                    .map(|j| self.covariance(i, j, n))
                    .collect()
            })
            .collect()
    }

    /// Eigenvalues of the covariance at position `n`, in Walsh order.
    pub fn eigenvalues(&self, n: usize) -> Vec<f64> {
        let walsh = WalshBlock::new(self.mean.depth());
        walsh
            .rows()
            .iter()
            .map(|row| {
                self.sigma2
                    * row
                        .iter()
                        .enumerate()
                        .map(|(m, &s)| f64::from(s) * self.autocorr.bands()[m][n])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Clips the Walsh spectrum of a dyadic generator at zero.
fn psd_project(c: &mut [f64]) {
    let nb = c.len();
    let mut spec: Vec<f64> = (0..nb)
        .map(|k| {
            (0..nb)
                .map(|m| {
                    if (k & m).count_ones() % 2 == 0 {
                        c[m]
                    } else {
                        -c[m]
                    }
                })
                .sum()
        })
        .collect();
    if spec.iter().all(|&l| l >= 0.0) {
        return;
    }
    for l in spec.iter_mut() {
        *l = l.max(0.0);
    }
    for (m, out) in c.iter_mut().enumerate() {
        *out = (0..nb)
            .map(|k| {
                if (k & m).count_ones() % 2 == 0 {
                    spec[k]
                } else {
                    -spec[k]
                }
            })
            .sum::<f64>()
            / nb as f64;
    }
}

/// Mean and covariance of the gain-2 Haar coefficients of `y = x + xξ`.
pub fn multiplicative_likelihood(
    v: &SubbandSet,
    m: &MultiplicativeModel,
) -> Result<MultiplicativeLikelihood> {
    v.validate()?;
    require_haar_gain2(v)?;
    if v.depth() != m.depth {
        return Err(FbError::DepthMismatch {
            left: v.depth(),
            right: m.depth,
        });
    }
    let auto = crate::scs::subband_convolve(v, v)?;
    let nb = 1usize << v.depth();
    let mut cols: Vec<Vec<f64>> = (0..v.band_len())
        .map(|n| (0..nb).map(|i| auto.bands()[i][n]).collect())
        .collect();
    for c in cols.iter_mut() {
        psd_project(c);
    }
    let autocorr = auto.derive_with(|idx, n| cols[n][idx.as_usize()]);
    Ok(MultiplicativeLikelihood {
        sigma2: m.sigma2,
        mean: v.clone(),
        autocorr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    SubsampledNoisy,
    Multiplicative,
}

fn observe(
    kind: ObservationKind,
    x: &[f64],
    keep: impl Fn(usize) -> bool,
    sigma: f64,
    noise: NoiseStream,
) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(FbError::InvalidModel(format!("noise level {sigma}")));
    }
    let xi = noise.normals(x.len(), sigma);
    Ok(match kind {
        ObservationKind::SubsampledNoisy => x
            .iter()
            .zip(&xi)
            .enumerate()
            .map(|(k, (v, e))| if keep(k) { v + e } else { 0.0 })
            .collect(),
        ObservationKind::Multiplicative => x.iter().zip(&xi).map(|(v, e)| v + v * e).collect(),
    })
}

/// `subsample(x) + subsample(ξ)` or `x + xξ`, with `ξ` i.i.d. `N(0, σ²)`
/// drawn from stream `stream` of `seed`; sample `k` of the noise is a pure
/// function of `(seed, stream, k)`.
pub fn sample_observation(
    kind: ObservationKind,
    x: &Signal1D,
    sigma: f64,
    seed: u64,
    stream: u64,
) -> Result<Signal1D> {
    if kind == ObservationKind::SubsampledNoisy && x.len() % 2 != 0 {
        return Err(FbError::OddLength(x.len()));
    }
    Signal1D::new(observe(
        kind,
        x,
        |k| k % 2 == 0,
        sigma,
        NoiseStream::new(seed, stream),
    )?)
}

/// Image version; subsampling keeps the pixels with even row and column.
pub fn sample_observation_2d(
    kind: ObservationKind,
    im: &Image2D,
    sigma: f64,
    seed: u64,
) -> Result<Image2D> {
    let w = im.width();
    if kind == ObservationKind::SubsampledNoisy && (im.height() % 2 != 0 || w % 2 != 0) {
        return Err(FbError::OddLength(if im.height() % 2 != 0 {
            im.height()
        } else {
            w
        }));
    }
    let px = observe(
        kind,
        im.pixels(),
        |k| (k / w) % 2 == 0 && (k % w) % 2 == 0,
        sigma,
        NoiseStream::new(seed, 0),
    )?;
    Ok(Image2D::new(im.height(), w, px)?.with_maxval(im.maxval))
}
