//! Multi-level analysis and synthesis with every shipped filterbank.

use fbrewire::analysis::{analyze_multi, synthesize_multi};
use fbrewire::filterbank::{pr_frequency_error, FilterbankPair, FREQ_GRID};
use fbrewire::rng::NoiseStream;
use fbrewire::signal::Signal1D;

fn main() -> fbrewire::Result<()> {
    let x = Signal1D::new(NoiseStream::new(7, 0).normals(256, 1.0))?;
    for fb in FilterbankPair::shipped() {
        println!(
            "{} (frequency check {:.2e})",
            fb.name(),
            pr_frequency_error(&fb, FREQ_GRID)
        );
        for depth in 1..=4 {
            let set = analyze_multi(&x, &fb, depth)?;
            let back = synthesize_multi(&set, &fb)?;
            let err = x
                .samples()
                .iter()
                .zip(back.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            println!(
                "  depth {depth}: {} subbands of {}, max error {err:.2e}",
                1 << depth,
                set.band_len()
            );
        }
    }
    Ok(())
}
