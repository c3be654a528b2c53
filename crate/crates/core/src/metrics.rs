//! Error measures and the metrics record written by the experiment drivers.

use serde::{Deserialize, Serialize};

use crate::error::{FbError, Result};

/// `10·log10(Σ ref² / Σ (ref − est)²)`; `infinite` is set when the two
/// agree exactly, in which case `db` is `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    pub db: f64,
    pub infinite: bool,
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(FbError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<Snr> {
    check_len(reference, estimate)?;
    let signal: f64 = reference.iter().map(|v| v * v).sum();
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(Snr {
            db: f64::INFINITY,
            infinite: true,
        });
    }
    Ok(Snr {
        db: 10.0 * (signal / err).log10(),
        infinite: false,
    })
}

pub fn mse(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len(reference, estimate)?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    Ok(reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64)
}

/// Output of `interpolate` and `despeckle`. An infinite SNR is written as
/// `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub snr_in: Option<f64>,
    pub snr_out: Option<f64>,
    pub mse_in: f64,
    pub mse_out: f64,
    pub runtime_ms: f64,
    pub seed: u64,
}

impl Metrics {
    /// `(input reference, input)` and `(output reference, output)` pairs.
    pub fn measure(
        in_ref: &[f64],
        input: &[f64],
        out_ref: &[f64],
        output: &[f64],
        runtime_ms: f64,
        seed: u64,
    ) -> Result<Self> {
        let finite = |s: Snr| (!s.infinite).then_some(s.db);
        Ok(Metrics {
            snr_in: finite(snr_db(in_ref, input)?),
            snr_out: finite(snr_db(out_ref, output)?),
            mse_in: mse(in_ref, input)?,
            mse_out: mse(out_ref, output)?,
            runtime_ms,
            seed,
        })
    }

    /// `snr_out − snr_in` in dB, if both are finite.
    pub fn gain_db(&self) -> Option<f64> {
        Some(self.snr_out? - self.snr_in?)
    }

    /// Equality ignoring wall-clock time, bit for bit.
    pub fn same_values(&self, other: &Metrics) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        bits(self.snr_in) == bits(other.snr_in)
            && bits(self.snr_out) == bits(other.snr_out)
            && self.mse_in.to_bits() == other.mse_in.to_bits()
            && self.mse_out.to_bits() == other.mse_out.to_bits()
            && self.seed == other.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_cases() {
        let r = vec![10.0; 8];
        assert!(snr_db(&r, &r).unwrap().infinite);
        // Error energy 8, signal energy 800.
        let e: Vec<f64> = r.iter().map(|v| v + 1.0).collect();
        assert!((snr_db(&r, &e).unwrap().db - 20.0).abs() < 1e-12);
        assert_eq!(snr_db(&r, &[0.0; 8]).unwrap().db, 0.0);
        assert!(snr_db(&r, &[0.0; 3]).is_err());
        assert_eq!(mse(&r, &e).unwrap(), 1.0);
    }

    #[test]
    fn metrics_json_and_comparison() {
        let a =
            Metrics::measure(&[1.0, 2.0], &[1.0, 2.5], &[1.0, 2.0], &[1.0, 2.0], 3.0, 7).unwrap();
        assert_eq!(a.snr_out, None);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"snr_out\":null"));
        let b: Metrics = serde_json::from_str(&json).unwrap();
        assert!(a.same_values(&Metrics {
            runtime_ms: 99.0,
            ..b
        }));
    }
}
