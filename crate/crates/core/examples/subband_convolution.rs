//! Haar coefficients of a product computed from the coefficients of the
//! factors.

use fbrewire::analysis::analyze_multi;
use fbrewire::filterbank::{FilterbankPair, Normalization};
use fbrewire::rng::NoiseStream;
use fbrewire::scs::{haar_block_transform, subband_convolve};
use fbrewire::signal::Signal1D;

fn main() -> fbrewire::Result<()> {
    let haar = FilterbankPair::haar().with_normalization(Normalization::Gain2);
    let x = Signal1D::new(NoiseStream::new(11, 0).normals(32, 1.0))?;
    let y = Signal1D::new(NoiseStream::new(11, 1).normals(32, 1.0))?;
    for depth in 1..=3 {
        let vx = analyze_multi(&x, &haar, depth)?;
        let vy = analyze_multi(&y, &haar, depth)?;
        let direct = analyze_multi(&x.product(&y)?, &haar, depth)?;
        let scs_err = subband_convolve(&vx, &vy)?.max_abs_diff(&direct)?;
        let wht_err = haar_block_transform(&x, depth)?.max_abs_diff(&vx)?;
        println!("depth {depth}: product {scs_err:.1e}, block Walsh-Hadamard {wht_err:.1e}");
    }
    Ok(())
}
