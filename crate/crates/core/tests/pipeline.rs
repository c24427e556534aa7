mod support;

use afvol_core::data::{
    build_features, fit_transform_scalers, log_returns, prepare_dataset, rolling_volatility, split_sizes,
    synthetic_prices, FeatureFrame, PipelineOptions, PriceSeries, Scaler, ScalerMode,
};
use afvol_core::garch::{GarchFit, GarchKind, GarchParams};
use afvol_core::Error;
use proptest::prelude::*;

#[test]
fn training_data_ignores_everything_after_the_training_span() {
    for (seed, n) in [(3, 600), (4, 2000), (5, 151)] {
        assert!(support::poisoning_holds(seed, n), "seed {seed}, n {n}");
    }
}

#[test]
fn scaler_round_trip_is_exact() {
    let worst = support::scaler_round_trip_worst(200, 8);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn windowing_matches_hand_built_windows() {
    let worst = support::windowing_check(300, 9).expect("shape or split mismatch");
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn split_is_eighty_twenty() {
    for (n, gap) in support::split_gaps() {
        assert!(gap <= 1.0, "n {n}: {gap}");
    }
}

#[test]
fn sample_timestamps_follow_targets() {
    let series = synthetic_prices::<f64>(2, 100).unwrap();
    let prep = prepare_dataset(&series, &PipelineOptions::default()).unwrap();
    let w = 5;
    // the target of sample 0 is the volatility of the returns ending at price 2w
    assert_eq!(prep.sample_timestamp(0), series.timestamps()[2 * w]);
    let ts: Vec<i64> = (0..prep.dataset.samples()).map(|i| prep.sample_timestamp(i)).collect();
    assert!(ts.windows(2).all(|p| p[1] - p[0] == 86_400));
    assert_eq!(*ts.last().unwrap(), *series.timestamps().last().unwrap());
}

#[test]
fn degenerate_series() {
    let flat = PriceSeries::<f64>::new((0..300).collect(), vec![10.0; 300]).unwrap();
    let err = prepare_dataset(&flat, &PipelineOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Degenerate(_)), "{err}");
    let short = synthetic_prices::<f64>(1, 40).unwrap();
    assert!(prepare_dataset(&short, &PipelineOptions::default()).is_err());
    assert_eq!(
        PriceSeries::<f64>::from_csv_reader("".as_bytes()).unwrap_err(),
        Error::Data("no data rows".into())
    );
    assert_eq!(
        PriceSeries::<f64>::from_csv_reader("timestamp,close\n".as_bytes()).unwrap_err(),
        Error::Data("no data rows".into())
    );
}

fn frame_from(values: &[(f64, f64, f64)]) -> FeatureFrame<f64> {
    FeatureFrame {
        steps: (0..values.len()).collect(),
        realized_vol: values.iter().map(|v| v.0).collect(),
        garch_vol: values.iter().map(|v| v.1).collect(),
        target: values.iter().map(|v| v.2).collect(),
    }
}

fn fixed_fit() -> GarchFit<f64> {
    GarchFit::from_params(
        GarchKind::Garch,
        GarchParams::garch11(0.05, 0.1, 0.85).unwrap(),
        0.0,
        1.0,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn windows_match_brute_force(
        values in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0, 0.0f64..3.0), 8..=50),
        window in 1usize..=6,
        mode in prop_oneof![Just(ScalerMode::MinMax), Just(ScalerMode::Standard)],
    ) {
        let frame = frame_from(&values);
        let Ok((samples, train)) = split_sizes(frame.len(), window, 0.8) else { return Ok(()) };
        let ds = match fit_transform_scalers(&frame, window, 0.8, mode) {
            Ok(ds) => ds,
            Err(Error::DegenerateFeature { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(ds.samples(), samples);
        prop_assert_eq!(ds.split_index, train);

        // scalers fitted on exactly the rows training windows see
        let seen = train + window - 1;
        let fit = |col: &[f64]| -> (f64, f64) {
            match mode {
                ScalerMode::MinMax => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
                ScalerMode::Standard => {
                    let m = col.iter().sum::<f64>() / col.len() as f64;
                    let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64;
                    (m, v.sqrt())
                }
            }
        };
        let cols = [&frame.realized_vol[..seen], &frame.garch_vol[..seen]];
        let affine: Vec<(f64, f64)> = cols.iter().map(|c| fit(c)).collect();
        let y_affine = fit(&frame.target[window - 1..seen]);

        for i in 0..samples {
            for j in 0..window {
                for (f, col) in [&frame.realized_vol, &frame.garch_vol].iter().enumerate() {
                    let want = (col[i + j] - affine[f].0) / affine[f].1;
                    let got = ds.x.data()[(i * window + j) * 2 + f];
                    prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
                }
            }
            let want = (frame.target[i + window - 1] - y_affine.0) / y_affine.1;
            prop_assert!((ds.y[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn scaler_round_trip(
        cols in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2..40), 1..4),
        probes in prop::collection::vec(-1e4f64..1e4, 1..20),
        mode in prop_oneof![Just(ScalerMode::MinMax), Just(ScalerMode::Standard)],
    ) {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let names: Vec<String> = (0..cols.len()).map(|i| format!("f{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let Ok(s) = Scaler::fit(mode, &refs, &names) else { return Ok(()) };
        for (j, col) in cols.iter().enumerate() {
            for &x in col.iter().chain(&probes) {
                let back = s.inverse(j, s.transform(j, x));
                prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "{} -> {}", x, back);
            }
        }
    }

    #[test]
    fn features_only_use_the_past(
        returns in prop::collection::vec(-0.1f64..0.1, 20..80),
        cut_frac in 0.0f64..1.0,
        noise in -0.5f64..0.5,
    ) {
        let w = 5;
        let cut = w + ((returns.len() - w - 1) as f64 * cut_frac) as usize;
        let mut changed = returns.clone();
        for r in &mut changed[cut..] {
            *r += noise;
        }
        let a = build_features(&returns, &fixed_fit(), w).unwrap();
        let b = build_features(&changed, &fixed_fit(), w).unwrap();
        for k in 0..a.len() {
            let t = a.steps[k];
            if t <= cut {
                prop_assert_eq!(a.realized_vol[k], b.realized_vol[k]);
                prop_assert_eq!(a.garch_vol[k], b.garch_vol[k]);
            }
            if t < cut {
                prop_assert_eq!(a.target[k], b.target[k]);
            }
        }
    }

    #[test]
    fn rolling_matches_brute_force(returns in prop::collection::vec(-1.0f64..1.0, 1..50), window in 1usize..8) {
        prop_assume!(returns.len() >= window);
        let rv = rolling_volatility(&returns, window).unwrap();
        prop_assert_eq!(rv.len(), returns.len() - window + 1);
        for (k, v) in rv.iter().enumerate() {
            let xs = &returns[k..k + window];
            let m = xs.iter().sum::<f64>() / window as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / window as f64;
            prop_assert!((v - var.sqrt()).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_returns_round_trip(returns in prop::collection::vec(-0.2f64..0.2, 1..100), start in 1.0f64..500.0) {
        let mut prices = vec![start];
        for r in &returns {
            prices.push(prices.last().unwrap() * r.exp());
        }
        let back = log_returns(&prices).unwrap();
        for (a, b) in back.iter().zip(&returns) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn price_scale_does_not_matter(factor in 0.01f64..100.0, seed in 0u64..20) {
        let series = synthetic_prices::<f64>(seed, 120).unwrap();
        let scaled = PriceSeries::new(
            series.timestamps().to_vec(),
            series.close().iter().map(|p| p * factor).collect(),
        ).unwrap();
        let a = log_returns(series.close()).unwrap();
        let b = log_returns(scaled.close()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
