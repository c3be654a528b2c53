//! Bayesian restoration of images in the filterbank domain.
//!
//! Both pipelines analyze the observation, replace each coefficient by its
//! posterior mean under a per-subband prior and the model's Normal
//! likelihood, and synthesize.
//!
//! **Interpolation.** With a self-complementary filterbank the coefficients
//! of a lattice-subsampled image are shared inside groups of four subbands
//! `{r, r′} × {c, c′}`: each observation is `¼ Σ ε_m v_m` plus noise, a sum
//! over the group with known signs. The three members whose level-0 bit is
//! set on some axis are estimated first, treating the rest of the sum as
//! extra Gaussian noise of the members' prior variance. The remaining member
//! gets the residual. The global lowpass keeps a flat prior, so with `σ = 0`
//! the lattice pixels are reproduced exactly.
//!
//! **Despeckle.** Gain-2 Haar coefficients of `x + xξ` have variance
//! `σ² Σ_block x²` at every subband of a block; the block energy is
//! estimated as `Σ_block y² / (1 + σ²)`, and the lowpass passes through.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis2d::{analyze_2d, synthesize_2d, Subbands2D};
use crate::complement::check_self_complementary;
use crate::error::{FbError, Result};
use crate::filterbank::{FilterbankPair, Normalization};
use crate::likelihood::even_noise_gain;
use crate::prior::{fit_prior, GenGaussian, PriorModel, PriorSpec};
use crate::quadrature::{posterior_mean, posterior_mean_mc, Posterior};
use crate::rng::NoiseStream;
use crate::signal::Image2D;
use crate::subband::SubbandIndex;

/// Replaces quadrature by self-normalized Monte Carlo with `draws` samples
/// per coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub draws: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub prior: PriorSpec,
    pub monte_carlo: Option<MonteCarlo>,
}

impl Estimator {
    pub fn new(prior: PriorSpec) -> Self {
        Estimator {
            prior,
            monte_carlo: None,
        }
    }

    fn posterior(
        &self,
        u: f64,
        var: f64,
        prior: Option<&GenGaussian>,
        slot: usize,
        n: usize,
    ) -> Posterior {
        match self.monte_carlo {
            None => posterior_mean(u, var, prior),
            Some(mc) => {
                let noise = NoiseStream::new(mc.seed, slot as u64);
                posterior_mean_mc(
                    u,
                    var,
                    prior,
                    &noise,
                    n as u64 * u64::from(mc.draws),
                    mc.draws,
                )
            }
        }
    }
}

/// One restored coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientPosterior {
    pub observed: f64,
    /// Observation divided by the known gain, minus already-explained terms.
    pub likelihood_mean: f64,
    pub likelihood_variance: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub image: Image2D,
    /// Priors in 2-D subband order `r · 2^I + c`.
    pub prior: PriorModel,
    pub degenerate: Vec<bool>,
    /// Coefficients whose posterior integrand underflowed.
    pub underflows: usize,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(FbError::InvalidModel(format!(
            "noise level {sigma} must be finite and ≥ 0"
        )));
    }
    Ok(())
}

fn band_slices(s: &Subbands2D) -> Vec<&[f64]> {
    s.iter().map(|(_, _, b)| b).collect()
}

/// Fills odd samples of a periodic sequence by averaging their neighbours.
pub fn linear_fill(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            if k % 2 == 0 {
                x[k]
            } else {
                0.5 * (x[k - 1] + x[(k + 1) % n])
            }
        })
        .collect()
}

/// Bilinear interpolation of the even lattice, periodic at the borders.
pub fn bilinear_fill(y: &Image2D) -> Result<Image2D> {
    let (h, w) = (y.height(), y.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(FbError::OddLength(if h % 2 != 0 { h } else { w }));
    }
    let mut rows: Vec<f64> = Vec::with_capacity(h * w);
    for r in 0..h {
        rows.extend(linear_fill(y.row(r)));
    }
    let cols: Vec<Vec<f64>> = (0..w)
        .map(|c| linear_fill(&(0..h).map(|r| rows[r * w + c]).collect::<Vec<_>>()))
        .collect();
    Image2D::from_fn(h, w, |r, c| cols[c][r]).map(|im| im.with_maxval(y.maxval))
}

fn resolve_prior(
    spec: &PriorSpec,
    bands: usize,
    fit: impl FnOnce() -> Result<(PriorModel, Vec<bool>)>,
) -> Result<(PriorModel, Vec<bool>)> {
    match spec.explicit_model(bands)? {
        Some(m) => Ok((m, vec![false; bands])),
        None => fit(),
    }
}

/// Joint interpolation and denoising of `y = x_s + ξ_s`, where `x_s` keeps
/// the pixels with even row and column and `ξ` is white with deviation
/// `sigma`. The filterbank must be self-complementary; it is used in
/// unitary form.
pub fn denoise_interpolate(
    y: &Image2D,
    fb: &FilterbankPair,
    depth: u32,
    est: &Estimator,
    sigma: f64,
) -> Result<Restoration> {
    check_sigma(sigma)?;
    let signs = check_self_complementary(fb)?
        .ok_or_else(|| FbError::NotSelfComplementary(fb.name().to_string()))?;
    let fbu = fb.with_normalization(Normalization::Unitary);
    let coeffs = analyze_2d(y, &fbu, depth)?;
    let side = 1usize << depth;
    let nbands = side * side;
    let var = sigma * sigma;

    let identity = |x: &[f64]| x.to_vec();
    let q_r = even_noise_gain(&fbu, depth, y.height(), &identity)?;
    let q_c = even_noise_gain(&fbu, depth, y.width(), &identity)?;

    let (prior, degenerate) = resolve_prior(&est.prior, nbands, || {
        let pilot = analyze_2d(&bilinear_fill(y)?, &fbu, depth)?;
        let fill = |x: &[f64]| linear_fill(x);
        let p_r = even_noise_gain(&fbu, depth, y.height(), &fill)?;
        let p_c = even_noise_gain(&fbu, depth, y.width(), &fill)?;
        let noise: Vec<f64> = (0..nbands)
            .map(|s| var * p_r[s / side] * p_c[s % side])
            .collect();
        let fit = fit_prior(&band_slices(&pilot), est.prior.family, &noise)?;
        Ok((fit.model, fit.degenerate))
    })?;

    // Sign of the partner term in an observation whose own index has
    // level-0 bit 0: `(−1)^0 · s_1`.
    let eps = signs.1;
    let groups: Vec<(SubbandIndex, SubbandIndex)> = SubbandIndex::all(depth)
        .filter(|r| r.bit(0) == 0)
        .flat_map(|r| {
            SubbandIndex::all(depth)
                .filter(|c| c.bit(0) == 0)
                .map(move |c| (r, c))
        })
        .collect();
    let band_len = coeffs.band_shape().0 * coeffs.band_shape().1;

    let solved: Vec<(Vec<(usize, Vec<f64>)>, usize)> = groups
        .par_iter()
        .map(|&(rp, cp)| {
            let slot = |r: SubbandIndex, c: SubbandIndex| r.as_usize() * side + c.as_usize();
            let primary = slot(rp, cp);
            let partners = [
                (slot(rp.complement(), cp), eps),
                (slot(rp, cp.complement()), eps),
                (slot(rp.complement(), cp.complement()), eps * eps),
            ];
            let global_lowpass = rp.bits() == 0 && cp.bits() == 0;
            let obs = coeffs.band(rp, cp);
            // Noise of `4·o` and prior variances of the four members.
            let var_u = 16.0 * var * q_r[rp.as_usize()] * q_c[cp.as_usize()];
            let pv = |s: usize| prior.band(s).variance();
            let total: f64 = pv(primary) + partners.iter().map(|&(s, _)| pv(s)).sum::<f64>();
            let mut out = vec![(primary, vec![0.0; band_len])];
            out.extend(partners.iter().map(|&(s, _)| (s, vec![0.0; band_len])));
            let mut underflows = 0;
            for n in 0..band_len {
                let u = 4.0 * obs[n];
                let mut explained = 0.0;
                for (k, &(s, e)) in partners.iter().enumerate() {
                    let p = est.posterior(e * u, var_u + total - pv(s), Some(prior.band(s)), s, n);
                    underflows += usize::from(p.underflow);
                    out[k + 1].1[n] = e * p.mean;
                    explained += p.mean;
                }
                let prim_prior = (!global_lowpass).then(|| prior.band(primary));
                let p = est.posterior(u - explained, var_u, prim_prior, primary, n);
                underflows += usize::from(p.underflow);
                out[0].1[n] = p.mean;
            }
            (out, underflows)
        })
        .collect();

    let mut bands = vec![Vec::new(); nbands];
    let mut underflows = 0;
    for (out, u) in solved {
        underflows += u;
        for (s, b) in out {
            bands[s] = b;
        }
    }
    let restored = coeffs.map_bands(|r, c, _| bands[r.as_usize() * side + c.as_usize()].clone())?;
    Ok(Restoration {
        image: synthesize_2d(&restored, &fbu)?,
        prior,
        degenerate,
        underflows,
    })
}

/// Per-coefficient detail of the despeckle estimator at band `(r, c)`.
pub fn despeckle_posteriors(
    y: &Image2D,
    depth: u32,
    prior: &GenGaussian,
    sigma: f64,
    r: SubbandIndex,
    c: SubbandIndex,
) -> Result<Vec<CoefficientPosterior>> {
    check_sigma(sigma)?;
    let coeffs = analyze_2d(y, &FilterbankPair::haar(), depth)?;
    let var = block_variance(&coeffs, sigma);
    let lowpass = r.bits() == 0 && c.bits() == 0;
    Ok(coeffs
        .band(r, c)
        .iter()
        .zip(&var)
        .map(|(&o, &v)| CoefficientPosterior {
            observed: o,
            likelihood_mean: o,
            likelihood_variance: v,
            estimate: posterior_mean(o, v, (!lowpass).then_some(prior)).mean,
        })
        .collect())
}

/// `σ² Σ_block y² / (1 + σ²)` per position, from gain-2 Haar coefficients.
fn block_variance(coeffs: &Subbands2D, sigma: f64) -> Vec<f64> {
    let s2 = sigma * sigma;
    let len = coeffs.band_shape().0 * coeffs.band_shape().1;
    // Σ over bands of v² is 4^I times the block energy.
    let scale = 1.0 / coeffs.count() as f64;
    let mut e = vec![0.0; len];
    for (_, _, b) in coeffs.iter() {
        for (acc, v) in e.iter_mut().zip(b) {
            *acc += v * v;
        }
    }
    e.into_iter().map(|v| s2 * v * scale / (1.0 + s2)).collect()
}

/// Posterior-mean despeckling of `y = x + xξ` with gain-2 Haar.
pub fn despeckle(
    y: &Image2D,
    fb: &FilterbankPair,
    depth: u32,
    est: &Estimator,
    sigma: f64,
) -> Result<Restoration> {
    check_sigma(sigma)?;
    if !fb.is_reference_haar() {
        return Err(FbError::NotHaar(fb.name().to_string()));
    }
    let haar = fb.with_normalization(Normalization::Gain2);
    let coeffs = analyze_2d(y, &haar, depth)?;
    let side = 1usize << depth;
    let nbands = side * side;
    let var = block_variance(&coeffs, sigma);

    let (prior, degenerate) = resolve_prior(&est.prior, nbands, || {
        let mean_var = var.iter().sum::<f64>() / var.len() as f64;
        let fit = fit_prior(
            &band_slices(&coeffs),
            est.prior.family,
            &vec![mean_var; nbands],
        )?;
        Ok((fit.model, fit.degenerate))
    })?;

    let solved: Vec<(Vec<f64>, usize)> = (0..nbands)
        .into_par_iter()
        .map(|s| {
            let r = SubbandIndex::new((s / side) as u32, depth).expect("row index");
            let c = SubbandIndex::new((s % side) as u32, depth).expect("column index");
            let band = coeffs.band(r, c);
            if s == 0 {
                return (band.to_vec(), 0);
            }
            let mut underflows = 0;
            let out = band
                .iter()
                .zip(&var)
                .enumerate()
                .map(|(n, (&o, &v))| {
                    let p = est.posterior(o, v, Some(prior.band(s)), s, n);
                    underflows += usize::from(p.underflow);
                    p.mean
                })
                .collect();
            (out, underflows)
        })
        .collect();
    let underflows = solved.iter().map(|(_, u)| u).sum();
    let restored =
        coeffs.map_bands(|r, c, _| solved[r.as_usize() * side + c.as_usize()].0.clone())?;
    Ok(Restoration {
        image: synthesize_2d(&restored, &haar)?,
        prior,
        degenerate,
        underflows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze_multi;
    use crate::complement::analyze_complementary_multi;
    use crate::likelihood::{sample_observation_2d, ObservationKind};
    use crate::prior::PriorFamily;
    use crate::signal::{subsample, Signal1D};

    fn laplace() -> Estimator {
        Estimator::new(PriorSpec::fit(PriorFamily::Laplacian))
    }

    fn blocks() -> Image2D {
        Image2D::from_fn(32, 32, |r, c| {
            let mut v = 60.0;
            if (5..21).contains(&r) && (9..27).contains(&c) {
                v += 90.0;
            }
            if (r as f64 - 22.0).hypot(c as f64 - 10.0) < 6.5 {
                v += 50.0;
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn haar_aliasing_is_shared_within_pairs() {
        let fb = FilterbankPair::haar().with_normalization(Normalization::Unitary);
        let x = Signal1D::new((0..16).map(|n| ((n * n) % 7) as f64).collect()).unwrap();
        let xs = analyze_multi(&subsample(&x), &fb, 2).unwrap();
        let v = analyze_multi(&x, &fb, 2).unwrap();
        let (s0, s1) = check_self_complementary(&fb).unwrap().unwrap();
        assert_eq!((s0, s1), (-1.0, 1.0));
        let w = analyze_complementary_multi(&x, &fb, 2).unwrap();
        for i in xs.indices() {
            for n in 0..xs.band_len() {
                let shared = 0.5 * (v.get(i, n) + v.get(i.complement(), n));
                assert!((xs.get(i, n) - shared).abs() < 1e-12);
                let ross = 0.5 * (v.get(i, n) + i.level0_sign() * w.get(i.complement(), n));
                assert!((xs.get(i, n) - ross).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinear_fill_is_exact_on_planes() {
        let plane = Image2D::from_fn(8, 8, |r, c| 3.0 + 2.0 * r as f64 - c as f64).unwrap();
        let filled = bilinear_fill(&plane.subsample_lattice()).unwrap();
        // Away from the periodic seam the plane is reproduced.
        for r in 0..7 {
            for c in 0..7 {
                assert!((filled.get(r, c) - plane.get(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_interpolation_keeps_the_lattice() {
        let x = blocks();
        let y = x.subsample_lattice();
        let out = denoise_interpolate(&y, &FilterbankPair::haar(), 3, &laplace(), 0.0).unwrap();
        for r in (0..32).step_by(2) {
            for c in (0..32).step_by(2) {
                assert!((out.image.get(r, c) - x.get(r, c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interpolation_rejects_d4() {
        let y = blocks().subsample_lattice();
        assert!(matches!(
            denoise_interpolate(&y, &FilterbankPair::d4(), 2, &laplace(), 1.0),
            Err(FbError::NotSelfComplementary(_))
        ));
    }

    #[test]
    fn interpolation_reduces_noise_on_a_constant() {
        let x = Image2D::filled(32, 32, 100.0).unwrap();
        let y = sample_observation_2d(ObservationKind::SubsampledNoisy, &x, 10.0, 4).unwrap();
        let lattice: Vec<f64> = (0..32)
            .step_by(2)
            .flat_map(|r| (0..32).step_by(2).map(move |c| (r, c)))
            .map(|(r, c)| y.get(r, c) - 100.0)
            .collect();
        let in_var = lattice.iter().map(|v| v * v).sum::<f64>() / lattice.len() as f64;
        let out = denoise_interpolate(&y, &FilterbankPair::haar(), 3, &laplace(), 10.0).unwrap();
        assert!(
            out.image.variance() < in_var,
            "{} vs {in_var}",
            out.image.variance()
        );
    }

    #[test]
    fn despeckle_identity_at_zero_noise() {
        let x = blocks();
        let out = despeckle(&x, &FilterbankPair::haar(), 2, &laplace(), 0.0).unwrap();
        for (a, b) in out.image.pixels().iter().zip(x.pixels()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(
            despeckle(&x, &FilterbankPair::d4(), 2, &laplace(), 0.3),
            Err(FbError::NotHaar(_))
        ));
    }

    #[test]
    fn despeckle_constant_image() {
        let c = 120.0;
        let x = Image2D::filled(64, 64, c).unwrap();
        let y = sample_observation_2d(ObservationKind::Multiplicative, &x, 0.3, 11).unwrap();
        let out = despeckle(&y, &FilterbankPair::haar(), 3, &laplace(), 0.3).unwrap();
        assert!(out.image.variance() < y.variance());
        assert!((out.image.mean() - c).abs() / c < 0.02);
    }

    #[test]
    fn monte_carlo_mode_is_close_to_quadrature() {
        let x = blocks();
        let y = sample_observation_2d(ObservationKind::Multiplicative, &x, 0.3, 2).unwrap();
        let q = despeckle(&y, &FilterbankPair::haar(), 2, &laplace(), 0.3).unwrap();
        let mut est = laplace();
        est.monte_carlo = Some(MonteCarlo {
            draws: 4000,
            seed: 1,
        });
        let m = despeckle(&y, &FilterbankPair::haar(), 2, &est, 0.3).unwrap();
        let rms = crate::metrics::mse(q.image.pixels(), m.image.pixels())
            .unwrap()
            .sqrt();
        assert!(rms < 1.0, "{rms}");
    }

    #[test]
    fn despeckle_posteriors_shrink() {
        let x = blocks();
        let y = sample_observation_2d(ObservationKind::Multiplicative, &x, 0.3, 5).unwrap();
        let prior = GenGaussian::laplacian(5.0).unwrap();
        let r = SubbandIndex::new(1, 2).unwrap();
        let c = SubbandIndex::new(0, 2).unwrap();
        for p in despeckle_posteriors(&y, 2, &prior, 0.3, r, c).unwrap() {
            assert!(p.estimate.abs() <= p.likelihood_mean.abs() + 1e-12);
            assert!(p.estimate * p.likelihood_mean >= 0.0);
        }
    }
}
