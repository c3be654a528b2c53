use fbrewire::analysis::{analyze_multi, synthesize_multi};
use fbrewire::complement::{alias_decompose, analyze_complementary_multi, ross_predict_modulated};
use fbrewire::filterbank::{FilterbankPair, Normalization};
use fbrewire::likelihood::{sample_observation, ObservationKind};
use fbrewire::prior::GenGaussian;
use fbrewire::quadrature::posterior_mean;
use fbrewire::scs::subband_convolve;
use fbrewire::signal::{modulate, subsample, Signal1D};
use proptest::prelude::*;

fn fb_strategy() -> impl Strategy<Value = FilterbankPair> {
    prop_oneof![
        Just(FilterbankPair::haar()),
        Just(FilterbankPair::d4()),
        Just(FilterbankPair::bior53()),
    ]
}

/// Signal of length `16 · 2^k` with bounded samples, and a depth it supports.
fn signal_and_depth() -> impl Strategy<Value = (Vec<f64>, u32)> {
    (0u32..3, 1u32..4).prop_flat_map(|(k, depth)| {
        (
            prop::collection::vec(-100.0f64..100.0, 16usize << k),
            Just(depth),
        )
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn scale(v: &[f64]) -> f64 {
    v.iter().fold(1.0, |m: f64, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_is_perfect(fb in fb_strategy(), (x, depth) in signal_and_depth()) {
        let s = Signal1D::new(x.clone()).unwrap();
        let back = synthesize_multi(&analyze_multi(&s, &fb, depth).unwrap(), &fb).unwrap();
        prop_assert!(max_diff(back.samples(), &x) <= 1e-10 * scale(&x));
    }

    #[test]
    fn analysis_is_linear(
        fb in fb_strategy(),
        (x, depth) in signal_and_depth(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let x = Signal1D::new(x).unwrap();
        let y = Signal1D::new(fbrewire::rng::NoiseStream::new(seed, 0).normals(x.len(), 50.0)).unwrap();
        let lhs = analyze_multi(&x.scale(a).add(&y.scale(b)).unwrap(), &fb, depth).unwrap();
        let vx = analyze_multi(&x, &fb, depth).unwrap();
        let vy = analyze_multi(&y, &fb, depth).unwrap();
        let rhs = vx.derive_with(|i, n| a * vx.get(i, n) + b * vy.get(i, n));
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-9 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn unitary_analysis_keeps_energy(fb in fb_strategy(), (x, depth) in signal_and_depth()) {
        let fb = fb.with_normalization(Normalization::Unitary);
        let s = Signal1D::new(x.clone()).unwrap();
        let e: f64 = x.iter().map(|v| v * v).sum();
        let v = analyze_multi(&s, &fb, depth).unwrap();
        // Haar and D4 are orthogonal; the biorthogonal pair is not.
        if fb.name() != "bior53" {
            prop_assert!((v.energy() - e).abs() <= 1e-9 * (1.0 + e));
        }
    }

    #[test]
    fn modulated_coefficients_are_rewired(fb in fb_strategy(), (x, depth) in signal_and_depth()) {
        let s = Signal1D::new(x).unwrap();
        let w = analyze_complementary_multi(&s, &fb, depth).unwrap();
        let direct = analyze_multi(&modulate(&s).unwrap(), &fb, depth).unwrap();
        let pred = ross_predict_modulated(&w).unwrap();
        prop_assert!(direct.max_abs_diff(&pred).unwrap() <= 1e-9 * (1.0 + direct.max_abs()));
    }

    #[test]
    fn subsampled_coefficients_average_the_tables(fb in fb_strategy(), (x, depth) in signal_and_depth()) {
        let s = Signal1D::new(x).unwrap();
        let v = analyze_multi(&s, &fb, depth).unwrap();
        let w = analyze_complementary_multi(&s, &fb, depth).unwrap();
        let xs = s.add(&modulate(&s).unwrap()).unwrap().scale(0.5);
        let direct = analyze_multi(&xs, &fb, depth).unwrap();
        prop_assert!(direct.max_abs_diff(&alias_decompose(&v, &w).unwrap()).unwrap() <= 1e-9 * (1.0 + direct.max_abs()));
    }

    #[test]
    fn subsampling_is_the_modulation_average(x in prop::collection::vec(-1e3f64..1e3, 1usize..20)) {
        let x = Signal1D::new(x.iter().flat_map(|&v| [v, v + 1.0]).collect()).unwrap();
        let avg = x.add(&modulate(&x).unwrap()).unwrap().scale(0.5);
        let s = subsample(&x);
        prop_assert_eq!(s.samples(), avg.samples());
        prop_assert!(s.samples().iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }

    #[test]
    fn haar_product_is_subband_convolution((x, depth) in signal_and_depth(), seed in any::<u64>()) {
        let haar = FilterbankPair::haar().with_normalization(Normalization::Gain2);
        let x = Signal1D::new(x).unwrap();
        let y = Signal1D::new(fbrewire::rng::NoiseStream::new(seed, 1).normals(x.len(), 10.0)).unwrap();
        let direct = analyze_multi(&x.product(&y).unwrap(), &haar, depth).unwrap();
        let scs = subband_convolve(
            &analyze_multi(&x, &haar, depth).unwrap(),
            &analyze_multi(&y, &haar, depth).unwrap(),
        ).unwrap();
        prop_assert!(direct.max_abs_diff(&scs).unwrap() <= 1e-9 * (1.0 + direct.max_abs()));
    }

    #[test]
    fn posterior_mean_shrinks_is_odd_and_monotone(
        u in -50.0f64..50.0,
        du in 0.01f64..5.0,
        var in 0.01f64..100.0,
        scale in 0.1f64..20.0,
        shape in 0.3f64..2.0,
    ) {
        let prior = GenGaussian::new(scale, shape).unwrap();
        let m = posterior_mean(u, var, Some(&prior)).mean;
        let tol = 1e-9 * (1.0 + u.abs());
        prop_assert!(m.is_finite());
        prop_assert!(m.abs() <= u.abs() + tol);
        prop_assert!(m * u >= -tol);
        prop_assert!((posterior_mean(-u, var, Some(&prior)).mean + m).abs() <= tol);
        prop_assert!(posterior_mean(u + du, var, Some(&prior)).mean >= m - tol);
    }

    #[test]
    fn observations_are_reproducible(seed in any::<u64>(), stream in 0u64..4) {
        let x = Signal1D::new((0..32).map(|n| 10.0 + n as f64).collect()).unwrap();
        for kind in [ObservationKind::SubsampledNoisy, ObservationKind::Multiplicative] {
            let a = sample_observation(kind, &x, 0.5, seed, stream).unwrap();
            let b = sample_observation(kind, &x, 0.5, seed, stream).unwrap();
            prop_assert_eq!(a.samples(), b.samples());
        }
    }
}
