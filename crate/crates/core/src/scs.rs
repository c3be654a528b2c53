//! Haar subband convolution: the Haar coefficients of a pointwise product are
//! an XOR-convolution of the factors' coefficients over subband indices,
//!
//! ```text
//! v^{xy}_𝒊[n] = 2^{−I} Σ_𝒋 v^x_{𝒊+𝒋}[n] · v^y_𝒋[n]
//! ```
//!
//! Multi-level Haar analysis in gain-2 form is a blockwise Walsh–Hadamard
//! transform: with the block of `2^I` samples at position `n`,
//! `v_𝒊[n] = Σ_k (−1)^{popcount(𝒊 & k)} x[2^I n + k]`, where bit 0 of `𝒊` is
//! the level-0 bit `i_0`.

use crate::analysis::check_depth;
use crate::error::{FbError, Result};
use crate::filterbank::Normalization;
use crate::signal::Signal1D;
use crate::subband::{Provenance, SetKind, SubbandIndex, SubbandSet};

/// Walsh rows `φ_𝒊[k] = (−1)^{popcount(𝒊 & k)}` of order `2^I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalshBlock {
    depth: u32,
    rows: Vec<Vec<i8>>,
}

impl WalshBlock {
    pub fn new(depth: u32) -> Self {
        let n = 1usize << depth;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| if (i & k).count_ones() % 2 == 0 { 1 } else { -1 })
                    .collect()
            })
            .collect();
        WalshBlock { depth, rows }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn order(&self) -> usize {
        1 << self.depth
    }

    pub fn row(&self, idx: SubbandIndex) -> &[i8] {
        &self.rows[idx.as_usize()]
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }
}

fn haar_provenance(kind: SetKind) -> Provenance {
    Provenance {
        filterbank: "haar".into(),
        normalization: Normalization::Gain2,
        haar: true,
        kind,
    }
}

/// Blockwise Walsh–Hadamard transform; equals gain-2 Haar `analyze_multi`.
pub fn haar_block_transform(x: &Signal1D, depth: u32) -> Result<SubbandSet> {
    check_depth(x.len(), depth)?;
    let walsh = WalshBlock::new(depth);
    let order = walsh.order();
    let bands = walsh
        .rows()
        .iter()
        .map(|row| {
            x.chunks(order)
                .map(|block| block.iter().zip(row).map(|(v, &s)| f64::from(s) * v).sum())
                .collect()
        })
        .collect();
    SubbandSet::new(depth, x.len(), bands, haar_provenance(SetKind::Regular))
}

/// `out_𝒊 = 2^{−I} Σ_𝒋 u_{𝒊⊕𝒋} v_𝒋` for vectors of length `2^I`.
pub fn logical_convolve(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(FbError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if !u.len().is_power_of_two() {
        return Err(FbError::NotPowerOfTwo(u.len()));
    }
    let scale = 1.0 / u.len() as f64;
    Ok((0..u.len())
        .map(|i| scale * (0..u.len()).map(|j| u[i ^ j] * v[j]).sum::<f64>())
        .collect())
}

pub(crate) fn require_haar_gain2(s: &SubbandSet) -> Result<()> {
    let p = s.provenance();
    if !p.haar {
        return Err(FbError::NotHaar(p.filterbank.clone()));
    }
    if p.normalization != Normalization::Gain2 {
        return Err(FbError::Normalization {
            expected: Normalization::Gain2.to_string(),
            found: p.normalization.to_string(),
        });
    }
    Ok(())
}

/// Coefficients of the pointwise product from the factors' coefficients.
/// Both tables must come from the reference Haar pair in gain-2 form.
pub fn subband_convolve(a: &SubbandSet, b: &SubbandSet) -> Result<SubbandSet> {
    a.validate()?;
    b.validate()?;
    a.check_shape(b)?;
    require_haar_gain2(a)?;
    require_haar_gain2(b)?;
    let nb = 1usize << a.depth();
    let scale = 1.0 / nb as f64;
    // Independent across n; the inner sum runs over the index group.
    Ok(a.derive_with(|idx, n| {
        let i = idx.as_usize();
        scale
            * (0..nb)
                .map(|j| a.bands()[i ^ j][n] * b.bands()[j][n])
                .sum::<f64>()
    }))
}

/// The Haar coefficients of `x·y` from those of `x` and `y` at one
/// position, written as an explicit index sum for readability.
pub fn xor_sum_at(a: &SubbandSet, b: &SubbandSet, idx: SubbandIndex, n: usize) -> f64 {
    let scale = 1.0 / (1u64 << a.depth()) as f64;
    scale
        * SubbandIndex::all(a.depth())
            .map(|j| a.get(idx + j, n) * b.get(j, n))
            .sum::<f64>()
}
