//! Coefficients of the modulated and subsampled signal, read off the
//! complementary table without filtering them again.

use fbrewire::analysis::analyze_multi;
use fbrewire::complement::{
    alias_decompose, analyze_complementary_multi, ross_predict_modulated, Complement,
};
use fbrewire::filterbank::FilterbankPair;
use fbrewire::rng::NoiseStream;
use fbrewire::signal::{modulate, Signal1D};

fn main() -> fbrewire::Result<()> {
    let x = Signal1D::new(NoiseStream::new(3, 0).normals(64, 1.0))?;
    let depth = 3;
    for fb in FilterbankPair::shipped() {
        let comp = Complement::of(&fb)?;
        let v = analyze_multi(&x, &fb, depth)?;
        let w = analyze_complementary_multi(&x, &fb, depth)?;

        // x_m[n] = (−1)^n x[n]
        let direct = analyze_multi(&modulate(&x)?, &fb, depth)?;
        let predicted = ross_predict_modulated(&w)?;
        let mod_err = direct.max_abs_diff(&predicted)?;

        // x_s keeps even samples: x_s = (x + x_m) / 2
        let xs = x.add(&modulate(&x)?)?.scale(0.5);
        let sub_err = analyze_multi(&xs, &fb, depth)?.max_abs_diff(&alias_decompose(&v, &w)?)?;
        println!(
            "{:7} complement {} a={} b={}: modulated {mod_err:.1e}, subsampled {sub_err:.1e}",
            fb.name(),
            comp.pair.name(),
            comp.params.a,
            comp.params.b
        );
    }
    Ok(())
}
