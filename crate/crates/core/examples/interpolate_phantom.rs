//! Denoise and upsample a noisy half-resolution phantom. Writes PGM files to
//! the directory given as the first argument, if any.

use std::path::PathBuf;

use fbrewire::filterbank::FilterbankPair;
use fbrewire::io::write_pgm;
use fbrewire::likelihood::{sample_observation_2d, ObservationKind};
use fbrewire::metrics::Metrics;
use fbrewire::phantom;
use fbrewire::pipeline::{bilinear_fill, denoise_interpolate, Estimator};
use fbrewire::prior::{PriorFamily, PriorSpec};

fn main() -> fbrewire::Result<()> {
    let x = phantom::shapes(64, 64)?;
    let sigma = 20.0;
    let y = sample_observation_2d(ObservationKind::SubsampledNoisy, &x, sigma, 1)?;
    let est = Estimator::new(PriorSpec::fit(PriorFamily::Laplacian));
    let out = denoise_interpolate(&y, &FilterbankPair::haar(), 3, &est, sigma)?;
    let m = Metrics::measure(
        x.subsample_lattice().pixels(),
        y.pixels(),
        x.pixels(),
        out.image.pixels(),
        0.0,
        1,
    )?;
    let pilot = bilinear_fill(&y)?;
    let b = Metrics::measure(
        x.subsample_lattice().pixels(),
        y.pixels(),
        x.pixels(),
        pilot.pixels(),
        0.0,
        1,
    )?;
    println!("input     snr {:.2} dB", m.snr_in.unwrap_or(f64::INFINITY));
    println!("bilinear  snr {:.2} dB", b.snr_out.unwrap_or(f64::INFINITY));
    println!(
        "restored  snr {:.2} dB (gain {:.2} dB)",
        m.snr_out.unwrap_or(f64::INFINITY),
        m.gain_db().unwrap_or(f64::NAN)
    );

    if let Some(dir) = std::env::args_os().nth(1).map(PathBuf::from) {
        write_pgm(&dir.join("truth.pgm"), &x)?;
        write_pgm(&dir.join("observed.pgm"), &y)?;
        write_pgm(&dir.join("restored.pgm"), &out.image)?;
    }
    Ok(())
}
