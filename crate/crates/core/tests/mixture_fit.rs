use ordershape::lfdr::{lfdr_values, step_up};
use ordershape::mixture::{em_fit, em_fit_binned, em_fit_known_f1, EmOptions};
use ordershape::simulate::{replicate_rng, simulate, Informativeness, ScenarioConfig, Variant};
use ordershape::{run_method, Method, MethodOptions, TestData, Uniform};

fn dataset(info: Informativeness, target: f64, ks: f64, seed: u64) -> TestData {
    let cfg = ScenarioConfig::basic(2000, info, target, ks);
    simulate(&cfg, &mut replicate_rng(seed, 0, 0)).unwrap().data
}

#[test]
fn em_ascends_on_simulated_data() {
    for seed in 0..10 {
        let data = dataset(Informativeness::Moderate, 0.2, 2.5, seed);
        let fit = em_fit(&data, &EmOptions::default()).unwrap();
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} → {}", w[0], w[1]);
        }
        assert!(fit.pi0.windows(2).all(|w| w[0] <= w[1]));
        assert!(fit.f1[0].heights().windows(2).all(|h| h[0] >= h[1]));
        assert!((fit.f1[0].integral() - 1.0).abs() < 1e-8);
        let raw = fit.pi0.iter().sum::<f64>() / fit.pi0.len() as f64;
        let cal = fit.pi0_calibrated.iter().sum::<f64>() / fit.pi0.len() as f64;
        assert!(cal >= raw - 1e-12);
    }
}

#[test]
fn informative_order_is_recovered() {
    let data = dataset(Informativeness::High, 0.2, 3.0, 11);
    let fit = em_fit(&data, &EmOptions::default()).unwrap();
    let m = fit.pi0.len();
    let head = fit.pi0[..m / 5].iter().sum::<f64>() / (m / 5) as f64;
    let tail = fit.pi0[m - m / 5..].iter().sum::<f64>() / (m / 5) as f64;
    assert!(head < 0.7 && tail > 0.9, "{head} {tail}");
}

#[test]
fn global_null_fit_is_near_one() {
    let cfg = ScenarioConfig::basic(5000, Informativeness::Weak, 0.0, 2.5);
    let data = simulate(&cfg, &mut replicate_rng(12, 0, 0)).unwrap().data;
    let fit = em_fit(&data, &EmOptions::default()).unwrap();
    let cal = fit.pi0_calibrated.iter().sum::<f64>() / fit.pi0.len() as f64;
    assert!((cal - 1.0).abs() < 0.05, "{cal}");
    let a = run_method(Method::OrderShape, &data, 0.05, &MethodOptions::default()).unwrap();
    assert!(a.decision.k_hat <= 5);
}

#[test]
fn binned_fit_gives_one_density_per_bin() {
    let cfg = ScenarioConfig {
        variant: Variant::VaryingF1,
        ..ScenarioConfig::basic(2000, Informativeness::High, 0.2, 2.5)
    };
    let data = simulate(&cfg, &mut replicate_rng(13, 0, 0)).unwrap().data;
    let fit = em_fit_binned(&data, 4, &EmOptions::default()).unwrap();
    assert_eq!(fit.f1.len(), 4);
    assert_eq!(fit.bin_starts, vec![0, 500, 1000, 1500]);
    for w in fit.loglik_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-8);
    }
    let opts = MethodOptions {
        bins: 4,
        ..MethodOptions::default()
    };
    let a = run_method(Method::OrderShape, &data, 0.05, &opts).unwrap();
    assert_eq!(a.fit.unwrap().f1.len(), 4);
}

#[test]
fn grouped_fit_is_constant_within_groups() {
    let data = dataset(Informativeness::Moderate, 0.2, 2.5, 14);
    let groups: Vec<usize> = (0..data.len()).map(|i| i / 400).collect();
    let opts = EmOptions {
        groups: Some(groups.clone()),
        ..EmOptions::default()
    };
    let fit = em_fit(&data, &opts).unwrap();
    for g in 0..5 {
        let vals = &fit.pi0[g * 400..(g + 1) * 400];
        assert!(vals.iter().all(|&v| v == vals[0]));
    }
    assert!(fit.pi0.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn oracle_lfdr_with_known_f1() {
    // Uniform f₁ makes every hypothesis look null: π stays at its start.
    let data = dataset(Informativeness::Moderate, 0.1, 2.5, 15);
    let fit = em_fit_known_f1(&data, &Uniform, &Uniform, &EmOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.pi0.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    let scores = lfdr_values(data.pvalues(), &fit.pi0, &Uniform, &Uniform).unwrap();
    assert_eq!(step_up(&scores, 0.05).k_hat, 0);
}
