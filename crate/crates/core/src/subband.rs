use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FbError, Result};
use crate::filterbank::Normalization;

/// Relative threshold below which a coefficient counts as zero support.
pub const SUPPORT_EPS_REL: f64 = 1e-9;

/// A subband label `(i_{I-1}, …, i_1, i_0)` packed into an integer with `i_0`
/// in the least significant bit. Bit `i_k` selects the filter used at
/// decomposition level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubbandIndex {
    bits: u32,
    depth: u32,
}

impl SubbandIndex {
    pub fn new(bits: u32, depth: u32) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(FbError::UnsupportedDepth {
                depth,
                reason: "subband indices need 1 ≤ depth ≤ 24".into(),
            });
        }
        if bits >> depth != 0 {
            return Err(FbError::InvalidModel(format!(
                "index {bits} does not fit in {depth} bits"
            )));
        }
        Ok(Self { bits, depth })
    }

    /// Builds an index from bits listed most-significant first, i.e.
    /// `[i_{I-1}, …, i_0]`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut v = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(FbError::InvalidModel(format!("bit value {b}")));
            }
            v = (v << 1) | u32::from(b);
        }
        Self::new(v, bits.len() as u32)
    }

    pub fn all(depth: u32) -> impl Iterator<Item = SubbandIndex> {
        (0..1u32 << depth).map(move |bits| SubbandIndex { bits, depth })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn depth(self) -> u32 {
        self.depth
    }

    pub fn as_usize(self) -> usize {
        self.bits as usize
    }

    /// Bit `i_k`.
    pub fn bit(self, k: u32) -> u8 {
        ((self.bits >> k) & 1) as u8
    }

    /// `𝒊′`: flips `i_0` only.
    pub fn complement(self) -> Self {
        Self {
            bits: self.bits ^ 1,
            depth: self.depth,
        }
    }

    /// Group addition over `(ℤ₂)^I`.
    pub fn xor(self, other: Self) -> Self {
        assert_eq!(
            self.depth, other.depth,
            "subband indices of different depth"
        );
        Self {
            bits: self.bits ^ other.bits,
            depth: self.depth,
        }
    }

    /// `(-1)^{i_0}`.
    pub fn level0_sign(self) -> f64 {
        if self.bits & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for SubbandIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in (0..self.depth).rev() {
            write!(f, "{}", self.bit(k))?;
        }
        Ok(())
    }
}

impl std::ops::Add for SubbandIndex {
    type Output = SubbandIndex;

    fn add(self, rhs: Self) -> Self {
        self.xor(rhs)
    }
}

/// How a subband table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    /// `v`: the filterbank's own analysis filters at every level.
    Regular,
    /// `w`: complementary filters at level 0, regular filters above.
    Complementary,
    /// Computed from other tables (predictions, products, recoveries).
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub filterbank: String,
    pub normalization: Normalization,
    /// Produced by the reference Haar filters (any normalization).
    pub haar: bool,
    pub kind: SetKind,
}

/// The full table `{v_𝒊[n]}` of a depth-`I` decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    depth: u32,
    signal_length: usize,
    bands: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl SubbandSet {
    pub fn new(
        depth: u32,
        signal_length: usize,
        bands: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let set = SubbandSet {
            depth,
            signal_length,
            bands,
            provenance,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(FbError::IncompleteSubbandSet(
                "depth must be at least 1".into(),
            ));
        }
        let count = 1usize << self.depth;
        if self.bands.len() != count {
            return Err(FbError::IncompleteSubbandSet(format!(
                "{} subbands for depth {}, expected {count}",
                self.bands.len(),
                self.depth
            )));
        }
        if self.signal_length % count != 0 {
            return Err(FbError::Depth {
                len: self.signal_length,
                depth: self.depth,
            });
        }
        let len = self.signal_length / count;
        if let Some(bad) = self.bands.iter().position(|b| b.len() != len) {
            return Err(FbError::IncompleteSubbandSet(format!(
                "subband {bad} has {} coefficients, expected {len}",
                self.bands[bad].len()
            )));
        }
        Ok(())
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    /// Coefficients per subband, `N / 2^I`.
    pub fn band_len(&self) -> usize {
        self.signal_length >> self.depth
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn filterbank(&self) -> &str {
        &self.provenance.filterbank
    }

    pub fn band(&self, idx: SubbandIndex) -> &[f64] {
        &self.bands[idx.as_usize()]
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn get(&self, idx: SubbandIndex, n: usize) -> f64 {
        self.bands[idx.as_usize()][n]
    }

    pub fn indices(&self) -> impl Iterator<Item = SubbandIndex> {
        SubbandIndex::all(self.depth)
    }

    /// A table of the same shape filled by `f(index, position)`, marked derived.
    pub fn derive_with(&self, f: impl Fn(SubbandIndex, usize) -> f64) -> SubbandSet {
        let bands = self
            .indices()
            .map(|idx| (0..self.band_len()).map(|n| f(idx, n)).collect())
            .collect();
        SubbandSet {
            depth: self.depth,
            signal_length: self.signal_length,
            bands,
            provenance: Provenance {
                kind: SetKind::Derived,
                ..self.provenance.clone()
            },
        }
    }

    pub fn with_kind(mut self, kind: SetKind) -> Self {
        self.provenance.kind = kind;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient difference; sets must have the same shape.
    pub fn max_abs_diff(&self, other: &SubbandSet) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .bands
            .iter()
            .flatten()
            .zip(other.bands.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_shape(&self, other: &SubbandSet) -> Result<()> {
        if self.depth != other.depth {
            return Err(FbError::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        if self.signal_length != other.signal_length {
            return Err(FbError::LengthMismatch {
                left: self.signal_length,
                right: other.signal_length,
            });
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.bands.iter().flatten().map(|v| v * v).sum()
    }

    pub fn support_eps(&self) -> f64 {
        SUPPORT_EPS_REL * self.max_abs()
    }
}

/// Which coefficients of a subband table are nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMask {
    pub depth: u32,
    pub bands: Vec<Vec<bool>>,
}

impl SupportMask {
    /// `|v| > eps`, with `eps` defaulting to `1e-9 · max|v|`.
    pub fn from_set(set: &SubbandSet, eps: Option<f64>) -> Self {
        let eps = eps.unwrap_or_else(|| set.support_eps());
        SupportMask {
            depth: set.depth(),
            bands: set
                .bands()
                .iter()
                .map(|b| b.iter().map(|v| v.abs() > eps).collect())
                .collect(),
        }
    }

    pub fn all(depth: u32, band_len: usize, value: bool) -> Self {
        SupportMask {
            depth,
            bands: vec![vec![value; band_len]; 1 << depth],
        }
    }

    pub fn get(&self, idx: SubbandIndex, n: usize) -> bool {
        self.bands[idx.as_usize()][n]
    }

    pub fn band_len(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    pub fn count(&self) -> usize {
        self.bands.iter().flatten().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_bit_layout_and_complement() {
        let i = SubbandIndex::from_bits(&[1, 0, 1]).unwrap();
        assert_eq!(i.bits(), 0b101);
        assert_eq!((i.bit(2), i.bit(1), i.bit(0)), (1, 0, 1));
        assert_eq!(i.complement().to_string(), "100");
        assert_eq!(i.complement().complement(), i);
        assert_eq!(i.level0_sign(), -1.0);
    }

    #[test]
    fn index_xor_is_group_addition() {
        let d = 3;
        for a in SubbandIndex::all(d) {
            let zero = SubbandIndex::new(0, d).unwrap();
            assert_eq!(a + zero, a);
            assert_eq!(a + a, zero);
            for b in SubbandIndex::all(d) {
                assert_eq!(a + b, b + a);
            }
        }
    }

    #[test]
    fn index_rejects_overflow() {
        assert!(SubbandIndex::new(4, 2).is_err());
        assert!(SubbandIndex::new(0, 0).is_err());
        assert!(SubbandIndex::from_bits(&[2]).is_err());
    }

    #[test]
    fn set_validation() {
        let prov = Provenance {
            filterbank: "t".into(),
            normalization: Normalization::Gain2,
            haar: false,
            kind: SetKind::Regular,
        };
        assert!(SubbandSet::new(1, 4, vec![vec![0.0; 2]; 2], prov.clone()).is_ok());
        assert!(matches!(
            SubbandSet::new(1, 4, vec![vec![0.0; 2]], prov.clone()),
            Err(FbError::IncompleteSubbandSet(_))
        ));
        assert!(SubbandSet::new(1, 4, vec![vec![0.0; 2], vec![0.0; 3]], prov).is_err());
    }
}
