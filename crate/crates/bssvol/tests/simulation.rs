use bssvol::fft::FftConvolution;
use bssvol::simulate::{simulate_bss, simulate_bss_with, simulate_volatility, Convolution, DirectConvolution};
use bssvol::{HybridConfig, KernelSpec, VolatilityConfig};
use proptest::prelude::*;

#[test]
fn fft_and_direct_schemes_agree() {
    let hc = HybridConfig::new(10_000, 2000, 1.0, 3).unwrap();
    let vol = VolatilityConfig::new(2.0, 0.125).unwrap();
    for k in [
        KernelSpec::gamma(-0.2, 1.0).unwrap(),
        KernelSpec::power(0.3, -1.5).unwrap(),
    ] {
        let sigma = simulate_volatility(&vol, &hc, 8).unwrap();
        let direct = simulate_bss(&hc, &k, &sigma, 8).unwrap();
        let fft = simulate_bss_with(&hc, &k, &sigma, 8, &FftConvolution::new()).unwrap();
        assert_eq!(direct.vol, fft.vol);
        for (a, b) in [(&direct.core, &fft.core), (&direct.bss, &fft.bss)] {
            let worst = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-10, "{k:?}: {worst:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fft_convolution_matches_direct(
        weights in prop::collection::vec(-2.0f64..2.0, 1..40),
        signal in prop::collection::vec(-3.0f64..3.0, 60),
    ) {
        let out_len = signal.len() - (weights.len() - 1);
        let d = DirectConvolution.causal_window(&weights, &signal, out_len);
        let f = FftConvolution::new().causal_window(&weights, &signal, out_len);
        for (x, y) in d.iter().zip(&f) {
            prop_assert!((x - y).abs() < 1e-11);
        }
    }
}
