//! One- and multi-level analysis/synthesis.
//!
//! `v_i[n] = (g_i ⋆ x)[2n]`; synthesis upsamples by two, filters with `h_i`
//! and sums. The multi-level table splits every branch at every level, with
//! bit `i_k` of the subband index choosing the filter at level `k` (level 0
//! acts on `x` itself).

use crate::error::{FbError, Result};
use crate::filter::Filter;
use crate::filterbank::FilterbankPair;
use crate::signal::Signal1D;
use crate::subband::{Provenance, SetKind, SubbandSet};

/// `(g ⋆ x)[2n]` for `n = 0..N/2`.
pub(crate) fn analyze_slice(x: &[f64], g: &Filter) -> Vec<f64> {
    let len = x.len() as i64;
    (0..x.len() / 2)
        .map(|n| {
            g.taps()
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let j = (2 * n as i64 - g.offset() - k as i64).rem_euclid(len);
                    t * x[j as usize]
                })
                .sum()
        })
        .collect()
}

/// `Σ_i (h_i ⋆ up2(v_i))`.
pub(crate) fn synthesize_slices(v0: &[f64], v1: &[f64], h: [&Filter; 2]) -> Vec<f64> {
    let len = 2 * v0.len();
    let mut out = vec![0.0; len];
    for (v, f) in [(v0, h[0]), (v1, h[1])] {
        for (m, &c) in v.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (k, &t) in f.taps().iter().enumerate() {
                let n = (2 * m as i64 + f.offset() + k as i64).rem_euclid(len as i64);
                out[n as usize] += t * c;
            }
        }
    }
    out
}

pub fn analyze_one_level(x: &Signal1D, fb: &FilterbankPair) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() % 2 != 0 {
        return Err(FbError::OddLength(x.len()));
    }
    Ok((analyze_slice(x, fb.g(0)), analyze_slice(x, fb.g(1))))
}

pub fn synthesize_one_level(v0: &[f64], v1: &[f64], fb: &FilterbankPair) -> Result<Signal1D> {
    if v0.len() != v1.len() {
        return Err(FbError::LengthMismatch {
            left: v0.len(),
            right: v1.len(),
        });
    }
    if v0.is_empty() {
        return Err(FbError::InvalidSignal("empty subbands".into()));
    }
    Signal1D::new(synthesize_slices(v0, v1, fb.synthesis()))
}

pub(crate) fn check_depth(len: usize, depth: u32) -> Result<()> {
    if depth == 0 || depth > 24 {
        return Err(FbError::UnsupportedDepth {
            depth,
            reason: "depth must be between 1 and 24".into(),
        });
    }
    if len % (1usize << depth) != 0 {
        return Err(FbError::Depth { len, depth });
    }
    Ok(())
}

/// Full binary tree with a separate filter pair for level 0.
pub(crate) fn analyze_tree(
    x: &[f64],
    level0: [&Filter; 2],
    upper: [&Filter; 2],
    depth: u32,
) -> Vec<Vec<f64>> {
    let mut bands = vec![x.to_vec()];
    for k in 0..depth {
        let g = if k == 0 { level0 } else { upper };
        let mut next = vec![Vec::new(); bands.len() * 2];
        for (p, band) in bands.iter().enumerate() {
            next[p] = analyze_slice(band, g[0]);
            next[p | (1 << k)] = analyze_slice(band, g[1]);
        }
        bands = next;
    }
    bands
}

pub(crate) fn synthesize_tree(
    mut bands: Vec<Vec<f64>>,
    level0: [&Filter; 2],
    upper: [&Filter; 2],
    depth: u32,
) -> Vec<f64> {
    for k in (0..depth).rev() {
        let h = if k == 0 { level0 } else { upper };
        let half = 1usize << k;
        let hi = bands.split_off(half);
        bands = bands
            .iter()
            .zip(hi.iter())
            .map(|(a, b)| synthesize_slices(a, b, h))
            .collect();
    }
    bands.pop().expect("one band remains")
}

pub(crate) fn provenance(fb: &FilterbankPair, kind: SetKind) -> Provenance {
    Provenance {
        filterbank: fb.name().to_string(),
        normalization: fb.normalization(),
        haar: fb.is_reference_haar(),
        kind,
    }
}

/// Depth-`I` decomposition into `2^I` subbands of length `N/2^I`.
pub fn analyze_multi(x: &Signal1D, fb: &FilterbankPair, depth: u32) -> Result<SubbandSet> {
    check_depth(x.len(), depth)?;
    let bands = analyze_tree(x, fb.analysis(), fb.analysis(), depth);
    SubbandSet::new(depth, x.len(), bands, provenance(fb, SetKind::Regular))
}

/// Inverse of [`analyze_multi`]. The set must have been produced with the
/// same filterbank (name and normalization) and not be a complementary table.
pub fn synthesize_multi(set: &SubbandSet, fb: &FilterbankPair) -> Result<Signal1D> {
    set.validate()?;
    check_provenance(set.provenance(), fb)?;
    if set.provenance().kind == SetKind::Complementary {
        return Err(FbError::Provenance(
            "complementary coefficients need the complementary synthesis filters".into(),
        ));
    }
    let x = synthesize_tree(
        set.bands().to_vec(),
        fb.synthesis(),
        fb.synthesis(),
        set.depth(),
    );
    Signal1D::new(x)
}

pub(crate) fn check_provenance(p: &Provenance, fb: &FilterbankPair) -> Result<()> {
    if p.filterbank != fb.name() || p.normalization != fb.normalization() {
        return Err(FbError::Provenance(format!(
            "set from `{}` ({}), filterbank `{}` ({})",
            p.filterbank,
            p.normalization,
            fb.name(),
            fb.normalization()
        )));
    }
    Ok(())
}

/// Octave-band decomposition: only the lowpass branch is split again.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    /// `details[k]` is the highpass output of level `k`, length `N/2^{k+1}`.
    pub details: Vec<Vec<f64>>,
    /// Lowpass residue after the last level, length `N/2^I`.
    pub approx: Vec<f64>,
}

pub fn analyze_wavelet(x: &Signal1D, fb: &FilterbankPair, depth: u32) -> Result<WaveletCoeffs> {
    check_depth(x.len(), depth)?;
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(depth as usize);
    for _ in 0..depth {
        details.push(analyze_slice(&approx, fb.g(1)));
        approx = analyze_slice(&approx, fb.g(0));
    }
    Ok(WaveletCoeffs { details, approx })
}

pub fn synthesize_wavelet(c: &WaveletCoeffs, fb: &FilterbankPair) -> Result<Signal1D> {
    let mut approx = c.approx.clone();
    for d in c.details.iter().rev() {
        if d.len() != approx.len() {
            return Err(FbError::LengthMismatch {
                left: approx.len(),
                right: d.len(),
            });
        }
        approx = synthesize_slices(&approx, d, fb.synthesis());
    }
    Signal1D::new(approx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::Normalization;
    use crate::subband::SubbandIndex;

    fn sig(v: &[f64]) -> Signal1D {
        Signal1D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn haar_one_level_sums_and_differences() {
        let fb = FilterbankPair::haar();
        let (v0, v1) = analyze_one_level(&sig(&[5.0, -2.0]), &fb).unwrap();
        assert_eq!((v0, v1), (vec![3.0], vec![7.0]));
        let (v0, v1) = analyze_one_level(&sig(&[1.0, 2.0, 3.0, 4.0]), &fb).unwrap();
        assert_eq!((v0, v1), (vec![3.0, 7.0], vec![-1.0, -1.0]));
        let x = synthesize_one_level(&[3.0], &[-1.0], &fb).unwrap();
        assert_eq!(x.samples(), &[1.0, 2.0]);
        assert!(analyze_one_level(&sig(&[1.0, 2.0, 3.0]), &fb).is_err());
        assert!(synthesize_one_level(&[1.0], &[1.0, 2.0], &fb).is_err());
    }

    #[test]
    fn haar_two_levels() {
        let fb = FilterbankPair::haar();
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let s = analyze_multi(&x, &fb, 2).unwrap();
        let at = |b: &[u8]| s.band(SubbandIndex::from_bits(b).unwrap())[0];
        assert_eq!(at(&[0, 0]), 10.0);
        assert_eq!(at(&[0, 1]), -2.0);
        assert_eq!(at(&[1, 0]), -4.0);
        assert_eq!(at(&[1, 1]), 0.0);
        assert_eq!(synthesize_multi(&s, &fb).unwrap().samples(), x.samples());
    }

    #[test]
    fn constant_routes_to_lowpass() {
        let fb = FilterbankPair::haar();
        let s = analyze_multi(&sig(&[1.5; 16]), &fb, 3).unwrap();
        for idx in s.indices() {
            let expect = if idx.bits() == 0 { 1.5 * 8.0 } else { 0.0 };
            assert!(s.band(idx).iter().all(|&v| (v - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn depth_errors() {
        let fb = FilterbankPair::haar();
        assert_eq!(
            analyze_multi(&sig(&[0.0; 12]), &fb, 3),
            Err(FbError::Depth { len: 12, depth: 3 })
        );
        assert!(analyze_multi(&sig(&[0.0; 4]), &fb, 0).is_err());
    }

    #[test]
    fn provenance_is_checked() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let s = analyze_multi(&x, &FilterbankPair::haar(), 1).unwrap();
        let u = FilterbankPair::haar().with_normalization(Normalization::Unitary);
        assert!(matches!(
            synthesize_multi(&s, &u),
            Err(FbError::Provenance(_))
        ));
        assert!(synthesize_multi(&s, &FilterbankPair::d4()).is_err());
    }

    #[test]
    fn wavelet_round_trip_and_lowpass_agreement() {
        let x: Vec<f64> = (0..32).map(|n| ((n * 7) % 11) as f64 - 5.0).collect();
        let x = sig(&x);
        for fb in FilterbankPair::shipped() {
            let c = analyze_wavelet(&x, &fb, 3).unwrap();
            assert_eq!(
                c.details.iter().map(Vec::len).collect::<Vec<_>>(),
                vec![16, 8, 4]
            );
            let xr = synthesize_wavelet(&c, &fb).unwrap();
            let err = x
                .iter()
                .zip(xr.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "{}: {err}", fb.name());
            // The all-lowpass branch is shared with the full tree.
            let full = analyze_multi(&x, &fb, 3).unwrap();
            let zero = SubbandIndex::new(0, 3).unwrap();
            for (a, b) in c.approx.iter().zip(full.band(zero)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
