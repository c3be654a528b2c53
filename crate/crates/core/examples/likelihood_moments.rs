//! Likelihood parameters of subsampled-noisy and multiplicative
//! observations, for a short ramp.

use fbrewire::analysis::analyze_multi;
use fbrewire::complement::analyze_complementary_multi;
use fbrewire::filterbank::{FilterbankPair, Normalization};
use fbrewire::likelihood::{
    multiplicative_likelihood, subsampled_noisy_likelihood, MultiplicativeModel,
    NoisySubsampledModel,
};
use fbrewire::signal::Signal1D;
use fbrewire::subband::SubbandIndex;

fn main() -> fbrewire::Result<()> {
    let x = Signal1D::new((0..8).map(|n| 1.0 + n as f64).collect())?;
    let sigma2 = 0.25;

    for fb in [FilterbankPair::haar(), FilterbankPair::d4()] {
        let fb = fb.with_normalization(Normalization::Unitary);
        let m = NoisySubsampledModel::new(sigma2, fb.clone(), 1)?;
        let v = analyze_multi(&x, &fb, 1)?;
        let w = analyze_complementary_multi(&x, &fb, 1)?;
        let lik = subsampled_noisy_likelihood(&v, &w, &m)?;
        println!("{}: mean {:?}", fb.name(), lik.mean.bands());
        println!(
            "  variance σ²/2 = {}, exact {:?}",
            lik.variance, lik.exact_variance
        );
        if let Some(w) = &lik.warning {
            println!("  warning: {w}");
        }
    }

    let haar = FilterbankPair::haar().with_normalization(Normalization::Gain2);
    let depth = 2;
    let v = analyze_multi(&x, &haar, depth)?;
    let lik = multiplicative_likelihood(&v, &MultiplicativeModel::new(sigma2, depth)?)?;
    println!("multiplicative, block 0:");
    for i in SubbandIndex::all(depth) {
        let row: Vec<String> = SubbandIndex::all(depth)
            .map(|j| format!("{:8.3}", lik.covariance(i, j, 0)))
            .collect();
        println!("  {}", row.join(" "));
    }
    println!("  eigenvalues {:?}", lik.eigenvalues(0));
    Ok(())
}
