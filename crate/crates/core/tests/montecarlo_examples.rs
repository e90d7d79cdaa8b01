use kgfa_core::experiments::{fig5_config, FIG5_MESSAGE};
use kgfa_core::model::{rbs_for_gamma, SystemConfig};
use kgfa_core::montecarlo::{
    estimate_access_probability, estimate_access_probability_with, estimate_message_delay, sweep, SimOptions,
};
use kgfa_core::rng::derive_seed;
use kgfa_core::Error;

#[test]
fn single_mtcd_never_fails() {
    let r = estimate_access_probability(&SystemConfig::new(4, 1, 2, 2), 1000, 5).unwrap();
    assert_eq!(r.p_hat, 1.0);
    assert_eq!(r.samples, 1000);
}

#[test]
fn three_rbs_two_users_tagged() {
    let cfg = SystemConfig::new(3, 2, 1, 1);
    let r = estimate_access_probability_with(&cfg, 1_000_000, 11, &SimOptions::tagged()).unwrap();
    let sigma = (2.0 / 9.0 / 1e6f64).sqrt();
    assert!((r.p_hat - 2.0 / 3.0).abs() < 3.0 * sigma, "{}", r.p_hat);
}

#[test]
fn table_cell_pooled() {
    let cfg = SystemConfig::new(rbs_for_gamma(100, 0.3).unwrap(), 100, 2, 2);
    let r = estimate_access_probability(&cfg, 1_000_000, 1).unwrap();
    let sigma = r.ci95_halfwidth / 1.96;
    assert!((r.p_hat - 0.94343).abs() < 3.0 * sigma + 0.002, "{}", r.p_hat);
}

#[test]
fn interval_shrinks_as_inverse_root() {
    let cfg = SystemConfig::new(30, 20, 2, 2);
    let a = estimate_access_probability(&cfg, 2_000, 3).unwrap();
    let b = estimate_access_probability(&cfg, 200_000, 3).unwrap();
    let ratio = a.ci95_halfwidth / b.ci95_halfwidth;
    assert!((ratio - 10.0).abs() < 0.5, "{ratio}");
}

#[test]
fn reproducible_across_thread_counts() {
    let cfg = SystemConfig::new(50, 30, 3, 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_access_probability(&cfg, 5_000, 77).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn delay_examples() {
    let r = estimate_message_delay(&SystemConfig::new(8, 1, 2, 2).with_message(32), 100, 1).unwrap();
    assert_eq!(r.mean_delay_frames, Some(32.0));
    let r = estimate_message_delay(&SystemConfig::new(3, 2, 1, 1).with_message(32), 20_000, 2).unwrap();
    let d = r.mean_delay_frames.unwrap();
    assert!((d - 48.0).abs() < 0.02 * 48.0, "{d}");
}

#[test]
fn delay_minimised_at_eight_frames() {
    let delay = |q: u32| {
        let cfg = fig5_config(5, 0.35, q).unwrap();
        assert_eq!(cfg.message_packets, FIG5_MESSAGE);
        estimate_message_delay(&cfg, 2_000, 9)
            .unwrap()
            .mean_delay_frames
            .unwrap()
    };
    let (d1, d8, d32) = (delay(1), delay(8), delay(32));
    assert!(d8 < d1 && d8 < d32, "{d1} {d8} {d32}");
}

#[test]
fn sweep_uses_derived_seeds() {
    let configs = [SystemConfig::new(30, 20, 2, 2), SystemConfig::new(30, 20, 3, 2)];
    let all = sweep(&configs, 1_000, 4).unwrap();
    for (i, cfg) in configs.iter().enumerate() {
        assert_eq!(
            all[i],
            estimate_access_probability(cfg, 1_000, derive_seed(4, i as u64)).unwrap()
        );
    }
    assert_eq!(sweep(&configs[..1], 1_000, 4).unwrap()[0], all[0]);
}

#[test]
fn repetition_sweep_peaks_at_four() {
    let configs: Vec<SystemConfig> = (1..=7)
        .map(|k| SystemConfig::new(rbs_for_gamma(100, 0.3).unwrap(), 100, k, 2))
        .collect();
    let reports = sweep(&configs, 20_000, 6).unwrap();
    let best = reports.iter().max_by(|a, b| a.p_hat.total_cmp(&b.p_hat)).unwrap();
    assert_eq!(best.config.repetition, 4);
}

#[test]
fn invalid_requests() {
    let cfg = SystemConfig::new(3, 2, 1, 1);
    assert!(matches!(
        estimate_access_probability(&cfg, 0, 1),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(sweep(&[], 10, 1), Err(Error::Parameter(_))));
    let hopeless = SystemConfig::new(1, 2, 1, 1).with_message(1);
    let opts = SimOptions {
        stf_cap: 10,
        ..SimOptions::default()
    };
    assert!(matches!(
        kgfa_core::montecarlo::estimate_message_delay_with(&hopeless, 1, 1, &opts),
        Err(Error::Budget(_))
    ));
}

#[test]
fn csv_row_columns() {
    let r = estimate_access_probability(&SystemConfig::new(3, 2, 1, 1), 10, 1).unwrap();
    let mut w = csv_like(&r.csv_row());
    w.retain(|c| c != ' ');
    assert!(
        w.starts_with("{\"R\":3,\"N\":2,\"K\":1,\"Q\":1,\"alpha\":2,\"beta\":1"),
        "{w}"
    );
}

fn csv_like<T: serde::Serialize>(row: &T) -> String {
    serde_json::to_string(row).unwrap()
}
