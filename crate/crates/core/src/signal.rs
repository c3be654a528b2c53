//! Finite periodic signals and images, plus the elementary operators that act
//! on them: circular convolution, subsampling, and modulation by `(-1)^n`.
//!
//! Every signal is treated as one period of a periodic sequence, so index
//! arithmetic is always taken modulo the length.

use std::ops::Deref;

use crate::error::{FbError, Result};
use crate::filter::Filter;

/// One period of a real periodic sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D(Vec<f64>);

impl Signal1D {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(FbError::InvalidSignal(
                "signal must have at least one sample".into(),
            ));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(FbError::InvalidSignal(format!(
                "sample {pos} is not finite"
            )));
        }
        Ok(Self(samples))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Elementwise product, the time-domain side of subband convolution.
    pub fn product(&self, other: &Signal1D) -> Result<Signal1D> {
        check_same_len(self.len(), other.len())?;
        Ok(Signal1D(
            self.iter().zip(other.iter()).map(|(a, b)| a * b).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Signal1D {
        Signal1D(self.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Signal1D) -> Result<Signal1D> {
        check_same_len(self.len(), other.len())?;
        Ok(Signal1D(
            self.iter().zip(other.iter()).map(|(a, b)| a + b).collect(),
        ))
    }
}

impl Deref for Signal1D {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Signal1D {
    type Error = FbError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Signal1D::new(v)
    }
}

/// A real-valued image stored row-major. `maxval` records the PGM range the
/// pixels came from (or should be written with); it does not rescale values.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    pub maxval: u16,
}

impl Image2D {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FbError::InvalidImage(format!(
                "empty image {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(FbError::InvalidImage(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(FbError::InvalidImage("non-finite pixel".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
            maxval: 255,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn with_maxval(mut self, maxval: u16) -> Self {
        self.maxval = maxval;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.width + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.pixels[r * self.width..(r + 1) * self.width]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.height).map(|r| self.get(r, c)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image2D {
        Image2D {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
            maxval: self.maxval,
        }
    }

    pub(crate) fn from_parts(height: usize, width: usize, pixels: Vec<f64>, maxval: u16) -> Self {
        debug_assert_eq!(pixels.len(), height * width);
        Image2D {
            height,
            width,
            pixels,
            maxval,
        }
    }

    /// Keeps the pixels whose row and column are both even; zeroes the rest.
    pub fn subsample_lattice(&self) -> Image2D {
        let mut out = self.clone();
        for r in 0..self.height {
            for c in 0..self.width {
                if r % 2 == 1 || c % 2 == 1 {
                    out.pixels[r * self.width + c] = 0.0;
                }
            }
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pixels.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.pixels.len() as f64
    }
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(FbError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Circular convolution: `out[n] = Σ_k taps[k] · x[(n − (offset + k)) mod N]`.
pub fn cyclic_convolve(x: &Signal1D, f: &Filter) -> Signal1D {
    Signal1D(convolve_slice(x, f))
}

pub(crate) fn convolve_slice(x: &[f64], f: &Filter) -> Vec<f64> {
    let n = x.len() as i64;
    let mut out = vec![0.0; x.len()];
    for (k, &t) in f.taps().iter().enumerate() {
        let shift = f.offset() + k as i64;
        for (i, o) in out.iter_mut().enumerate() {
            let j = (i as i64 - shift).rem_euclid(n) as usize;
            *o += t * x[j];
        }
    }
    out
}

/// Zeroes every odd-indexed sample.
pub fn subsample(x: &Signal1D) -> Signal1D {
    Signal1D(
        x.iter()
            .enumerate()
            .map(|(n, &v)| if n % 2 == 0 { v } else { 0.0 })
            .collect(),
    )
}

/// Multiplies by `(-1)^n`. The periodic extension is only consistent for even
/// lengths.
pub fn modulate(x: &Signal1D) -> Result<Signal1D> {
    if x.len() % 2 != 0 {
        return Err(FbError::OddLength(x.len()));
    }
    Ok(Signal1D(modulate_slice(x)))
}

pub(crate) fn modulate_slice(x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(n, &v)| if n % 2 == 0 { v } else { -v })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[f64]) -> Signal1D {
        Signal1D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn convolve_identity_and_haar_lowpass() {
        let x = sig(&[1.0, 0.0, 0.0, 0.0]);
        let delta = Filter::new(vec![1.0], 0).unwrap();
        assert_eq!(cyclic_convolve(&x, &delta).samples(), &[1.0, 0.0, 0.0, 0.0]);

        // Direct summation with mod-4 indexing: out[n] = x[n] + x[n+1].
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let g0 = Filter::new(vec![1.0, 1.0], -1).unwrap();
        let expected: Vec<f64> = (0..4).map(|n| x[n] + x[(n + 1) % 4]).collect();
        assert_eq!(expected, vec![3.0, 5.0, 7.0, 5.0]);
        assert_eq!(cyclic_convolve(&x, &g0).samples(), expected.as_slice());
    }

    #[test]
    fn convolve_constant_gives_dc_gain() {
        let x = sig(&[2.5; 6]);
        let f = Filter::new(vec![0.3, -1.0, 4.0], 2).unwrap();
        for v in cyclic_convolve(&x, &f).iter() {
            assert!((v - 2.5 * 3.3).abs() < 1e-12);
        }
    }

    #[test]
    fn long_filter_wraps() {
        let x = sig(&[1.0, 2.0]);
        let f = Filter::new(vec![1.0, 1.0, 1.0], 0).unwrap();
        // taps at 0,1,2 ≡ 0,1,0 mod 2
        assert_eq!(cyclic_convolve(&x, &f).samples(), &[4.0, 5.0]);
    }

    #[test]
    fn subsample_and_modulate_examples() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(subsample(&x).samples(), &[1.0, 0.0, 3.0, 0.0]);
        assert_eq!(modulate(&x).unwrap().samples(), &[1.0, -2.0, 3.0, -4.0]);
        assert_eq!(subsample(&sig(&[0.0; 4])).samples(), &[0.0; 4]);
        assert_eq!(modulate(&sig(&[1.0, 2.0, 3.0])), Err(FbError::OddLength(3)));
    }

    #[test]
    fn modulation_is_a_half_band_shift_on_the_dft_grid() {
        let x = sig(&[0.3, -1.2, 2.0, 0.7, -0.4, 1.1, 0.0, -2.2]);
        let xm = modulate(&x).unwrap();
        let n = x.len();
        let dft = |s: &[f64], k: usize| -> (f64, f64) {
            s.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let a = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                (re + v * a.cos(), im + v * a.sin())
            })
        };
        for k in 0..n {
            let (a, b) = dft(&xm, k);
            let (c, d) = dft(&x, (k + n / 2) % n);
            assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(Signal1D::new(vec![]).is_err());
        assert!(Signal1D::new(vec![1.0, f64::NAN]).is_err());
        assert!(Image2D::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn lattice_subsampling_keeps_even_even_pixels() {
        let im = Image2D::from_fn(4, 4, |r, c| (r * 4 + c) as f64 + 1.0).unwrap();
        let s = im.subsample_lattice();
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.get(2, 2), 11.0);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(1, 0), 0.0);
    }
}
