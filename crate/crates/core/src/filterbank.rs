//! Two-channel filterbank pairs: the analysis filters `g0, g1`, the synthesis
//! filters `h0, h1`, and the normalization they are expressed in.
//!
//! The reference Haar pair is
//!
//! ```text
//! G_i(z) = 1 + (−1)^i z        taps at n = −1, 0
//! H_i(z) = ½[1 + (−1)^i z⁻¹]   taps at n = 0, 1
//! ```
//!
//! Note the sign of `h_1` sits on the `z⁻¹` tap. Putting it on the constant
//! tap instead (`H_i(z) = ½[(−1)^i + z⁻¹]`) makes the round trip return
//! pair-swapped samples, `x_r[2n] = x[2n+1]`, so that placement is rejected by
//! [`verify_pr`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_one_level, synthesize_one_level};
use crate::error::{FbError, Result};
use crate::filter::{dtft_eval, Filter};
use crate::rng::NoiseStream;
use crate::signal::Signal1D;

/// Tolerance every filterbank must meet before downstream use.
pub const PR_TOL: f64 = 1e-10;
/// Points on the `(−π, π]` grid used for frequency-domain checks.
pub const FREQ_GRID: usize = 1024;

const PR_TRIALS: usize = 16;
const PR_PROBE_LEN: usize = 64;

/// DC gain convention of the analysis filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `Σ g0 = 2` per level; the reference for subband-convolution constants.
    Gain2,
    /// `Σ g0 = √2` per level; an orthonormal pair is norm preserving.
    Unitary,
}

impl Normalization {
    /// Nominal `|Σ g0|`.
    pub fn dc_gain(self) -> f64 {
        match self {
            Normalization::Gain2 => 2.0,
            Normalization::Unitary => SQRT_2,
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Gain2 => "gain2",
            Normalization::Unitary => "unitary",
        })
    }
}

/// On-disk form of a filterbank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterbankSpec {
    pub name: String,
    pub normalization: Normalization,
    pub g0: Filter,
    pub g1: Filter,
    pub h0: Filter,
    pub h1: Filter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterbankPair {
    name: String,
    normalization: Normalization,
    g: [Filter; 2],
    h: [Filter; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrReport {
    pub pass: bool,
    pub max_time_error: f64,
    pub max_freq_error: f64,
}

const HAAR_JSON: &str = include_str!("../filterbanks/haar.json");
const D4_JSON: &str = include_str!("../filterbanks/d4.json");
const BIOR53_JSON: &str = include_str!("../filterbanks/bior53.json");

/// Names accepted by [`FilterbankPair::by_name`].
pub const SHIPPED: [&str; 3] = ["haar", "d4", "bior53"];

/// Parsed and verified once per process.
fn shipped_pairs() -> &'static [FilterbankPair; 3] {
    static PAIRS: OnceLock<[FilterbankPair; 3]> = OnceLock::new();
    PAIRS.get_or_init(|| {
        [HAAR_JSON, D4_JSON, BIOR53_JSON]
            .map(|j| FilterbankPair::from_json(j).expect("shipped filterbank"))
    })
}

impl FilterbankPair {
    /// Builds a pair and checks perfect reconstruction at [`PR_TOL`].
    pub fn new(
        name: impl Into<String>,
        normalization: Normalization,
        g: [Filter; 2],
        h: [Filter; 2],
    ) -> Result<Self> {
        let fb = Self::unchecked(name, normalization, g, h)?;
        let report = verify_pr(&fb, PR_TOL, PR_TRIALS);
        if !report.pass {
            return Err(FbError::NotPerfectReconstruction {
                name: fb.name,
                time_error: report.max_time_error,
                freq_error: report.max_freq_error,
            });
        }
        Ok(fb)
    }

    /// Builds a pair without the reconstruction check. Useful for studying
    /// broken filterbanks; downstream modules expect validated pairs.
    pub fn unchecked(
        name: impl Into<String>,
        normalization: Normalization,
        g: [Filter; 2],
        h: [Filter; 2],
    ) -> Result<Self> {
        for f in g.iter().chain(h.iter()) {
            f.validate()?;
        }
        Ok(FilterbankPair {
            name: name.into(),
            normalization,
            g,
            h,
        })
    }

    /// Validates a spec: taps, declared DC gain, then reconstruction.
    pub fn from_spec(spec: FilterbankSpec) -> Result<Self> {
        let dc = spec.g0.dc_gain().abs();
        if (dc - spec.normalization.dc_gain()).abs() > 1e-6 {
            return Err(FbError::Normalization {
                expected: spec.normalization.to_string(),
                found: format!("|Σ g0| = {dc}"),
            });
        }
        Self::new(
            spec.name,
            spec.normalization,
            [spec.g0, spec.g1],
            [spec.h0, spec.h1],
        )
    }

    /// Loads a filterbank file without the reconstruction check, so that a
    /// faulty design can still be inspected and reported on.
    pub fn from_path_unverified(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FbError::InvalidFilter(format!("cannot read {}: {e}", path.display())))?;
        let spec: FilterbankSpec = serde_json::from_str(&text)
            .map_err(|e| FbError::InvalidFilter(format!("filterbank JSON: {e}")))?;
        Self::unchecked(
            spec.name,
            spec.normalization,
            [spec.g0, spec.g1],
            [spec.h0, spec.h1],
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FilterbankSpec = serde_json::from_str(text)
            .map_err(|e| FbError::InvalidFilter(format!("filterbank JSON: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FbError::InvalidFilter(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// One of the shipped pairs: `haar`, `d4` (alias `daubechies4`), `bior53`
    /// (alias `5/3`).
    pub fn by_name(name: &str) -> Result<Self> {
        let k = match name.to_ascii_lowercase().as_str() {
            "haar" => 0,
            "d4" | "daubechies4" | "db2" => 1,
            "bior53" | "5/3" | "legall53" => 2,
            other => {
                return Err(FbError::InvalidFilter(format!(
                    "unknown filterbank `{other}` (shipped: {})",
                    SHIPPED.join(", ")
                )))
            }
        };
        Ok(shipped_pairs()[k].clone())
    }

    /// A shipped name, or else a path to a JSON spec.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::by_name(name_or_path) {
            Ok(fb) => Ok(fb),
            Err(_) if Path::new(name_or_path).exists() => Self::from_path(Path::new(name_or_path)),
            Err(e) => Err(e),
        }
    }

    pub fn haar() -> Self {
        Self::by_name("haar").expect("shipped haar filterbank")
    }

    pub fn d4() -> Self {
        Self::by_name("d4").expect("shipped d4 filterbank")
    }

    pub fn bior53() -> Self {
        Self::by_name("bior53").expect("shipped bior53 filterbank")
    }

    pub fn shipped() -> Vec<Self> {
        SHIPPED
            .iter()
            .map(|n| Self::by_name(n).expect("shipped filterbank"))
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn g(&self, i: usize) -> &Filter {
        &self.g[i]
    }

    pub fn h(&self, i: usize) -> &Filter {
        &self.h[i]
    }

    pub fn analysis(&self) -> [&Filter; 2] {
        [&self.g[0], &self.g[1]]
    }

    pub fn synthesis(&self) -> [&Filter; 2] {
        [&self.h[0], &self.h[1]]
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rescales analysis filters by `c` and synthesis filters by `1/c` per
    /// level so the pair matches `target`.
    pub fn with_normalization(&self, target: Normalization) -> Self {
        let c = match (self.normalization, target) {
            (a, b) if a == b => return self.clone(),
            (Normalization::Gain2, Normalization::Unitary) => 1.0 / SQRT_2,
            (Normalization::Unitary, Normalization::Gain2) => SQRT_2,
            _ => unreachable!(),
        };
        FilterbankPair {
            name: self.name.clone(),
            normalization: target,
            g: [self.g[0].scaled(c), self.g[1].scaled(c)],
            h: [self.h[0].scaled(1.0 / c), self.h[1].scaled(1.0 / c)],
        }
    }

    /// True when the taps are the reference Haar pair in this normalization.
    pub fn is_reference_haar(&self) -> bool {
        let reference = shipped_pairs()[0].with_normalization(self.normalization);
        (0..2).all(|i| {
            self.g[i].max_abs_diff(&reference.g[i]) <= 1e-12
                && self.h[i].max_abs_diff(&reference.h[i]) <= 1e-12
        })
    }

    pub fn to_spec(&self) -> FilterbankSpec {
        FilterbankSpec {
            name: self.name.clone(),
            normalization: self.normalization,
            g0: self.g[0].clone(),
            g1: self.g[1].clone(),
            h0: self.h[0].clone(),
            h1: self.h[1].clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("filterbank spec serializes")
    }
}

/// `ω_k = −π + 2π(k+1)/K`, covering `(−π, π]`.
pub fn frequency_grid(points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| -PI + 2.0 * PI * (k + 1) as f64 / points as f64)
}

/// Largest deviation from the two frequency-domain reconstruction identities
///
/// ```text
/// Σ_i ĝ_i(ω) ĥ_i(ω)     = 2
/// Σ_i ĝ_i(ω + π) ĥ_i(ω) = 0
/// ```
///
/// over the grid, with `ĝ(ω) = Σ g[n] e^{−jωn}`.
pub fn pr_frequency_error(fb: &FilterbankPair, points: usize) -> f64 {
    frequency_grid(points)
        .map(|w| {
            let mut direct = Complex64::new(-2.0, 0.0);
            let mut alias = Complex64::new(0.0, 0.0);
            for i in 0..2 {
                let h = dtft_eval(fb.h(i), w).value;
                direct += dtft_eval(fb.g(i), w).value * h;
                alias += dtft_eval(fb.g(i), w + PI).value * h;
            }
            direct.norm().max(alias.norm())
        })
        .fold(0.0, f64::max)
}

/// Round-trip error on `trials` random probe signals, relative to the probe
/// scale (probes are unit-variance).
pub fn pr_time_error(fb: &FilterbankPair, trials: usize) -> f64 {
    let span = (fb.g(0).last() - fb.g(0).first())
        .max(fb.g(1).last() - fb.g(1).first())
        .max(fb.h(0).last() - fb.h(0).first())
        .max(fb.h(1).last() - fb.h(1).first()) as usize;
    let len = PR_PROBE_LEN.max(2 * (span + 1)).next_multiple_of(2);
    (0..trials)
        .map(|t| {
            let x = NoiseStream::new(0x5052_5052, t as u64).normals(len, 1.0);
            let x = Signal1D::new(x).expect("finite probe");
            let (v0, v1) = analyze_one_level(&x, fb).expect("even probe length");
            let xr = synthesize_one_level(&v0, &v1, fb).expect("matching lengths");
            x.iter()
                .zip(xr.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max)
}

/// Checks reconstruction both by random round trips and on the frequency
/// grid; passes iff both errors are within `tol`.
pub fn verify_pr(fb: &FilterbankPair, tol: f64, trials: usize) -> PrReport {
    let max_time_error = pr_time_error(fb, trials.max(1));
    let max_freq_error = pr_frequency_error(fb, FREQ_GRID);
    PrReport {
        pass: max_time_error <= tol && max_freq_error <= tol,
        max_time_error,
        max_freq_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn haar_with_printed_h() -> FilterbankPair {
        // H_i(z) = ½[(−1)^i + z⁻¹]
        FilterbankPair::unchecked(
            "haar-printed",
            Normalization::Gain2,
            [
                Filter::new(vec![1.0, 1.0], -1).unwrap(),
                Filter::new(vec![-1.0, 1.0], -1).unwrap(),
            ],
            [
                Filter::new(vec![0.5, 0.5], 0).unwrap(),
                Filter::new(vec![-0.5, 0.5], 0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn shipped_pairs_pass() {
        for fb in FilterbankPair::shipped() {
            let r = verify_pr(&fb, 1e-10, 50);
            assert!(r.pass, "{}: {r:?}", fb.name());
        }
        let r = verify_pr(&FilterbankPair::haar(), 1e-12, 50);
        assert!(r.pass && r.max_time_error < 1e-15);
    }

    #[test]
    fn printed_synthesis_signs_fail_with_swapped_pairs() {
        let fb = haar_with_printed_h();
        let r = verify_pr(&fb, 1e-10, 4);
        assert!(!r.pass);
        assert!(r.max_time_error > 0.1 && r.max_freq_error > 0.1);

        let x = Signal1D::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (v0, v1) = analyze_one_level(&x, &fb).unwrap();
        let xr = synthesize_one_level(&v0, &v1, &fb).unwrap();
        assert_eq!(xr.samples(), &[2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn normalization_round_trip() {
        let fb = FilterbankPair::haar();
        let u = fb.with_normalization(Normalization::Unitary);
        assert!((u.g(0).dc_gain() - SQRT_2).abs() < 1e-15);
        assert!(verify_pr(&u, 1e-12, 8).pass);
        assert!(u.is_reference_haar());
        let back = u.with_normalization(Normalization::Gain2);
        assert!(back.g(0).max_abs_diff(fb.g(0)) < 1e-15);
        assert!(!FilterbankPair::d4().is_reference_haar());
    }

    #[test]
    fn spec_json_round_trip_and_strict_parsing() {
        for fb in FilterbankPair::shipped() {
            let again = FilterbankPair::from_json(&fb.to_json()).unwrap();
            assert_eq!(again, fb);
        }
        let bad = HAAR_JSON.replace("\"name\"", "\"extra\": 1, \"name\"");
        assert!(FilterbankPair::from_json(&bad).is_err());
        let wrong_norm = HAAR_JSON.replace("gain2", "unitary");
        assert!(matches!(
            FilterbankPair::from_json(&wrong_norm),
            Err(FbError::Normalization { .. })
        ));
        assert!(FilterbankPair::by_name("nope").is_err());
    }

    #[test]
    fn broken_pair_rejected_at_construction() {
        let fb = FilterbankPair::haar();
        let err = FilterbankPair::new(
            "broken",
            Normalization::Gain2,
            [fb.g(0).clone(), fb.g(1).scaled(3.0)],
            [fb.h(0).clone(), fb.h(1).clone()],
        );
        assert!(matches!(err, Err(FbError::NotPerfectReconstruction { .. })));
    }
}
