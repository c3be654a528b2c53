//! Remove multiplicative noise from the phantom and compare region means.

use fbrewire::filterbank::FilterbankPair;
use fbrewire::likelihood::{sample_observation_2d, ObservationKind};
use fbrewire::metrics::mse;
use fbrewire::phantom;
use fbrewire::pipeline::{despeckle, Estimator};
use fbrewire::prior::{PriorFamily, PriorSpec};

fn main() -> fbrewire::Result<()> {
    let x = phantom::shapes(64, 64)?;
    let sigma = 0.3;
    let y = sample_observation_2d(ObservationKind::Multiplicative, &x, sigma, 1)?;
    let est = Estimator::new(PriorSpec::fit(PriorFamily::Laplacian));
    let out = despeckle(&y, &FilterbankPair::haar(), 3, &est, sigma)?;
    println!(
        "mse {:.1} -> {:.1}",
        mse(x.pixels(), y.pixels())?,
        mse(x.pixels(), out.image.pixels())?
    );
    for (v, px) in phantom::flat_regions(&x, 4) {
        let mean = |im: &[f64]| px.iter().map(|&k| im[k]).sum::<f64>() / px.len() as f64;
        println!(
            "level {v:5}: {:4} pixels, observed mean {:7.2}, restored mean {:7.2}",
            px.len(),
            mean(y.pixels()),
            mean(out.image.pixels())
        );
    }
    Ok(())
}
