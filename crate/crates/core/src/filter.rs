use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FbError, Result};

/// A finite impulse response. Tap `k` sits at time index `offset + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    offset: i64,
    taps: Vec<f64>,
}

impl Filter {
    pub fn new(taps: Vec<f64>, offset: i64) -> Result<Self> {
        let f = Filter { offset, taps };
        f.validate()?;
        Ok(f)
    }

    pub fn delta(at: i64) -> Self {
        Filter {
            offset: at,
            taps: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(FbError::InvalidFilter("no taps".into()));
        }
        if self.taps.iter().any(|t| !t.is_finite()) {
            return Err(FbError::InvalidFilter("non-finite tap".into()));
        }
        if self.taps.iter().all(|&t| t == 0.0) {
            return Err(FbError::InvalidFilter("all taps are zero".into()));
        }
        Ok(())
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Index of the first tap.
    pub fn first(&self) -> i64 {
        self.offset
    }

    /// Index of the last tap.
    pub fn last(&self) -> i64 {
        self.offset + self.taps.len() as i64 - 1
    }

    /// Value at time index `n`, zero outside the support.
    pub fn at(&self, n: i64) -> f64 {
        let k = n - self.offset;
        if k < 0 || k >= self.taps.len() as i64 {
            0.0
        } else {
            self.taps[k as usize]
        }
    }

    pub fn scaled(&self, c: f64) -> Filter {
        Filter {
            offset: self.offset,
            taps: self.taps.iter().map(|t| t * c).collect(),
        }
    }

    /// `out[n] = self[n + shift]`.
    pub fn advanced(&self, shift: i64) -> Filter {
        Filter {
            offset: self.offset - shift,
            taps: self.taps.clone(),
        }
    }

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Max absolute tap difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &Filter) -> f64 {
        let lo = self.first().min(other.first());
        let hi = self.last().max(other.last());
        (lo..=hi)
            .map(|n| (self.at(n) - other.at(n)).abs())
            .fold(0.0, f64::max)
    }
}

/// A sampled frequency response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEval {
    pub frequency: f64,
    pub value: Complex64,
}

/// `Σ_k taps[k] · exp(−jω(offset + k))`.
pub fn dtft_eval(f: &Filter, omega: f64) -> SpectrumEval {
    let value = f
        .taps
        .iter()
        .enumerate()
        .map(|(k, &t)| Complex64::from_polar(t, -omega * (f.offset + k as i64) as f64))
        .sum();
    SpectrumEval {
        frequency: omega,
        value,
    }
}
