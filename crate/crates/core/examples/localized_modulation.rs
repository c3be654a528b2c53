//! Two band-limited signals share one carrier by moving each to a different
//! subband at every position.

use fbrewire::analysis::{analyze_multi, synthesize_multi};
use fbrewire::filterbank::FilterbankPair;
use fbrewire::modulation::{demultiplex, multiplex, CarrierSchedule};
use fbrewire::rng::NoiseStream;
use fbrewire::signal::Signal1D;
use fbrewire::subband::SupportMask;
use fbrewire::FbError;

fn band_limited(stream: u64, depth: u32, keep: &[u32]) -> fbrewire::Result<Signal1D> {
    let fb = FilterbankPair::haar();
    let x = Signal1D::new(NoiseStream::new(5, stream).normals(64, 1.0))?;
    let v = analyze_multi(&x, &fb, depth)?;
    let kept = v.derive_with(|idx, n| {
        if keep.contains(&idx.bits()) {
            v.get(idx, n)
        } else {
            0.0
        }
    });
    synthesize_multi(&kept, &fb)
}

fn main() -> fbrewire::Result<()> {
    let depth = 2;
    let x0 = band_limited(0, depth, &[0b00, 0b01])?;
    let x1 = band_limited(1, depth, &[0b00, 0b01])?;
    let fb = FilterbankPair::haar();
    let masks = [
        SupportMask::from_set(&analyze_multi(&x0, &fb, depth)?, None),
        SupportMask::from_set(&analyze_multi(&x1, &fb, depth)?, None),
    ];

    let j0: Vec<u32> = (0..16)
        .map(|n| if n % 2 == 0 { 0b10 } else { 0b00 })
        .collect();
    let j1: Vec<u32> = j0.iter().map(|j| j ^ 0b10).collect();
    let scheds = [
        CarrierSchedule::new("a", depth, j0)?,
        CarrierSchedule::new("b", depth, j1)?,
    ];
    let z = multiplex(&[x0.clone(), x1.clone()], &scheds)?;
    let rec = demultiplex(&z, &scheds, &masks)?;
    for (k, x) in [&x0, &x1].into_iter().enumerate() {
        let err = rec[k].max_abs_diff(&analyze_multi(x, &fb, depth)?)?;
        println!("channel {k}: recovered to {err:.1e}");
    }

    let same = [scheds[0].clone(), scheds[0].clone()];
    let z = multiplex(&[x0, x1], &same)?;
    match demultiplex(&z, &same, &masks) {
        Err(e @ FbError::SupportConflict { .. }) => println!("shared schedule: {e}"),
        other => println!("shared schedule unexpectedly gave {other:?}"),
    }
    Ok(())
}
