//! Separable 2-D decomposition: every row is analyzed to depth `I`, then
//! every column of each row-subband. Band `(r, c)` has vertical index `r`
//! (from the column pass) and horizontal index `c` (from the row pass).

use rayon::prelude::*;

use crate::analysis::{analyze_tree, check_depth, check_provenance, provenance, synthesize_tree};
use crate::error::{FbError, Result};
use crate::filterbank::FilterbankPair;
use crate::signal::Image2D;
use crate::subband::{Provenance, SetKind, SubbandIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct Subbands2D {
    depth: u32,
    height: usize,
    width: usize,
    /// `bands[r * 2^I + c]`, each `(H/2^I) × (W/2^I)` row-major.
    bands: Vec<Vec<f64>>,
    provenance: Provenance,
    maxval: u16,
}

impl Subbands2D {
    /// Assembles a table from `4^I` bands in `r · 2^I + c` order.
    pub fn from_bands(
        depth: u32,
        height: usize,
        width: usize,
        bands: Vec<Vec<f64>>,
        provenance: Provenance,
        maxval: u16,
    ) -> Result<Self> {
        check_depth(height, depth)?;
        check_depth(width, depth)?;
        let side = 1usize << depth;
        if bands.len() != side * side {
            return Err(FbError::IncompleteSubbandSet(format!(
                "{} bands for depth {depth}, expected {}",
                bands.len(),
                side * side
            )));
        }
        let len = (height >> depth) * (width >> depth);
        if bands.iter().any(|b| b.len() != len) {
            return Err(FbError::IncompleteSubbandSet(format!(
                "every band needs {len} coefficients"
            )));
        }
        if bands.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FbError::IncompleteSubbandSet(
                "non-finite coefficient".into(),
            ));
        }
        Ok(Subbands2D {
            depth,
            height,
            width,
            bands,
            provenance,
            maxval,
        })
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Rows and columns of one subband.
    pub fn band_shape(&self) -> (usize, usize) {
        (self.height >> self.depth, self.width >> self.depth)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn count(&self) -> usize {
        1 << (2 * self.depth)
    }

    fn slot(&self, r: SubbandIndex, c: SubbandIndex) -> usize {
        debug_assert!(r.depth() == self.depth && c.depth() == self.depth);
        r.as_usize() * (1 << self.depth) + c.as_usize()
    }

    pub fn band(&self, r: SubbandIndex, c: SubbandIndex) -> &[f64] {
        &self.bands[self.slot(r, c)]
    }

    pub fn band_mut(&mut self, r: SubbandIndex, c: SubbandIndex) -> &mut [f64] {
        let s = self.slot(r, c);
        &mut self.bands[s]
    }

    /// Iterates `(vertical index, horizontal index, coefficients)`.
    pub fn iter(&self) -> impl Iterator<Item = (SubbandIndex, SubbandIndex, &[f64])> {
        let d = self.depth;
        SubbandIndex::all(d)
            .flat_map(move |r| SubbandIndex::all(d).map(move |c| (r, c, self.band(r, c))))
    }

    pub fn map_bands(
        &self,
        f: impl Fn(SubbandIndex, SubbandIndex, &[f64]) -> Vec<f64> + Sync,
    ) -> Result<Subbands2D> {
        let d = self.depth;
        let side = 1usize << d;
        let bands: Vec<Vec<f64>> = (0..self.bands.len())
            .into_par_iter()
            .map(|s| {
                let r = SubbandIndex::new((s / side) as u32, d).expect("row index");
                let c = SubbandIndex::new((s % side) as u32, d).expect("column index");
                f(r, c, &self.bands[s])
            })
            .collect();
        let len = self.bands[0].len();
        if bands.iter().any(|b| b.len() != len) {
            return Err(FbError::IncompleteSubbandSet(
                "mapped band has wrong size".into(),
            ));
        }
        Ok(Subbands2D {
            bands,
            provenance: Provenance {
                kind: SetKind::Derived,
                ..self.provenance.clone()
            },
            ..self.clone()
        })
    }

    pub fn energy(&self) -> f64 {
        self.bands.iter().flatten().map(|v| v * v).sum()
    }
}

fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Analyzes each row of a `rows × cols` block; returns `2^I` blocks of size
/// `rows × (cols/2^I)`.
fn analyze_rows(
    data: &[f64],
    rows: usize,
    cols: usize,
    fb: &FilterbankPair,
    depth: u32,
) -> Vec<Vec<f64>> {
    let per_row: Vec<Vec<Vec<f64>>> = data
        .par_chunks(cols)
        .map(|row| analyze_tree(row, fb.analysis(), fb.analysis(), depth))
        .collect();
    let nb = 1usize << depth;
    (0..nb)
        .map(|b| {
            let mut block = Vec::with_capacity(rows * (cols >> depth));
            for r in per_row.iter().take(rows) {
                block.extend_from_slice(&r[b]);
            }
            block
        })
        .collect()
}

fn synthesize_rows(
    blocks: &[Vec<f64>],
    rows: usize,
    cols: usize,
    fb: &FilterbankPair,
    depth: u32,
) -> Vec<f64> {
    let bc = cols >> depth;
    let out: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let bands = blocks
                .iter()
                .map(|b| b[r * bc..(r + 1) * bc].to_vec())
                .collect();
            synthesize_tree(bands, fb.synthesis(), fb.synthesis(), depth)
        })
        .collect();
    out.concat()
}

pub fn analyze_2d(im: &Image2D, fb: &FilterbankPair, depth: u32) -> Result<Subbands2D> {
    let (h, w) = (im.height(), im.width());
    check_depth(h, depth)?;
    check_depth(w, depth)?;
    let nb = 1usize << depth;
    let (bh, bw) = (h >> depth, w >> depth);
    // Row pass: horizontal index c.
    let row_blocks = analyze_rows(im.pixels(), h, w, fb, depth);
    let mut bands = vec![Vec::new(); nb * nb];
    for (c, block) in row_blocks.iter().enumerate() {
        // Column pass on the transposed block: vertical index r.
        let t = transpose(block, h, bw);
        let col_blocks = analyze_rows(&t, bw, h, fb, depth);
        for (r, cb) in col_blocks.iter().enumerate() {
            bands[r * nb + c] = transpose(cb, bw, bh);
        }
    }
    Ok(Subbands2D {
        depth,
        height: h,
        width: w,
        bands,
        provenance: provenance(fb, SetKind::Regular),
        maxval: im.maxval,
    })
}

pub fn synthesize_2d(s: &Subbands2D, fb: &FilterbankPair) -> Result<Image2D> {
    check_provenance(&s.provenance, fb)?;
    let depth = s.depth;
    let nb = 1usize << depth;
    let (h, w) = (s.height, s.width);
    let (bh, bw) = s.band_shape();
    let mut row_blocks = Vec::with_capacity(nb);
    for c in 0..nb {
        let col_bands: Vec<Vec<f64>> = (0..nb)
            .map(|r| transpose(&s.bands[r * nb + c], bh, bw))
            .collect();
        let t = synthesize_rows(&col_bands, bw, h, fb, depth);
        row_blocks.push(transpose(&t, bw, h));
    }
    let pixels = synthesize_rows(&row_blocks, h, w, fb, depth);
    if pixels.iter().any(|v| !v.is_finite()) {
        return Err(FbError::InvalidImage("non-finite synthesis output".into()));
    }
    Ok(Image2D::from_parts(h, w, pixels, s.maxval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze_multi;
    use crate::signal::Signal1D;

    #[test]
    fn constant_image_has_one_band() {
        let fb = FilterbankPair::haar();
        let im = Image2D::filled(8, 16, 3.0).unwrap();
        let s = analyze_2d(&im, &fb, 2).unwrap();
        for (r, c, b) in s.iter() {
            let expect = if r.bits() == 0 && c.bits() == 0 {
                3.0 * 16.0
            } else {
                0.0
            };
            assert!(b.iter().all(|&v| (v - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn separable_image_gives_outer_products() {
        let fb = FilterbankPair::d4();
        let a: Vec<f64> = (0..8).map(|n| (n as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..16)
            .map(|n| (n as f64 * 0.3).cos() + 0.1 * n as f64)
            .collect();
        let im = Image2D::from_fn(8, 16, |r, c| a[r] * b[c]).unwrap();
        let s = analyze_2d(&im, &fb, 2).unwrap();
        let va = analyze_multi(&Signal1D::new(a).unwrap(), &fb, 2).unwrap();
        let vb = analyze_multi(&Signal1D::new(b).unwrap(), &fb, 2).unwrap();
        let (bh, bw) = s.band_shape();
        for (r, c, band) in s.iter() {
            for i in 0..bh {
                for j in 0..bw {
                    let expect = va.band(r)[i] * vb.band(c)[j];
                    assert!((band[i * bw + j] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_and_depth_check() {
        let im = Image2D::from_fn(32, 32, |r, c| ((r * 31 + c * 17) % 13) as f64).unwrap();
        for fb in FilterbankPair::shipped() {
            let s = analyze_2d(&im, &fb, 3).unwrap();
            let back = synthesize_2d(&s, &fb).unwrap();
            let err = im
                .pixels()
                .iter()
                .zip(back.pixels())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "{}: {err}", fb.name());
        }
        let odd = Image2D::filled(12, 16, 0.0).unwrap();
        assert!(matches!(
            analyze_2d(&odd, &FilterbankPair::haar(), 3),
            Err(FbError::Depth { .. })
        ));
    }
}
