use kgfa_core::analytics::{
    access_probability, approx_access_probability, approx_p_d1, approx_p_d2, message_delay, p_d1, p_d2, Engine,
    EvalOptions, ModelSize,
};
use num_bigint::BigInt;
use num_rational::BigRational;

fn exact() -> EvalOptions {
    EvalOptions::default()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

#[test]
fn single_mtcd_always_succeeds() {
    for &(r, k, q) in &[(1, 1, 1), (5, 2, 2), (12, 3, 2), (40, 2, 3)] {
        let p = access_probability(ModelSize::new(r, 1, k, q), &exact()).unwrap();
        assert_eq!(p.total.as_rational(), Some(&ratio(1, 1)), "R={r} K={k} Q={q}");
        assert_eq!(p.p_d2.as_rational(), Some(&ratio(0, 1)));
    }
}

#[test]
fn three_rbs_two_users() {
    let size = ModelSize::new(3, 2, 1, 1);
    assert_eq!(p_d1(size, &exact()).unwrap().value.as_rational(), Some(&ratio(2, 3)));
    assert_eq!(p_d2(size, &exact()).unwrap().value.as_rational(), Some(&ratio(0, 1)));
    // ((R-1)/R)^(N-1)
    let p = p_d1(ModelSize::new(7, 4, 1, 1), &exact()).unwrap();
    assert_eq!(p.value.as_rational(), Some(&ratio(216, 343)));
}

#[test]
fn no_second_iteration_without_redundancy() {
    for n in [2, 5, 9] {
        let p = p_d2(ModelSize::new(20, n, 1, 1), &exact()).unwrap();
        assert_eq!(p.value.as_rational(), Some(&ratio(0, 1)));
    }
    assert!(approx_p_d2(0.4, 1, 1, &exact()).unwrap().value.to_f64() == 0.0);
}

#[test]
fn low_load_cell() {
    let size = ModelSize::new(250, 25, 2, 2);
    let p = access_probability(size, &exact()).unwrap();
    assert!(p.p_d1.to_f64() <= p.total.to_f64());
    assert!(rel(p.total.to_f64(), 0.999748) < 3e-4);
}

#[test]
fn table_cells() {
    let p = access_probability(ModelSize::new(333, 100, 2, 2), &exact()).unwrap();
    assert!(rel(p.total.to_f64(), 0.94343) < 1e-3, "{}", p.total.to_f64());
    let p = access_probability(ModelSize::new(142, 100, 2, 3), &exact()).unwrap();
    assert!(rel(p.total.to_f64(), 0.218367) < 1.5e-3, "{}", p.total.to_f64());
}

#[test]
fn approximation_examples() {
    let o = exact();
    assert!((approx_access_probability(0.0, 3, 2, &o).unwrap().total.to_f64() - 1.0).abs() < 1e-12);
    assert_eq!(approx_p_d2(0.0, 3, 2, &o).unwrap().value.to_f64(), 0.0);
    let p = approx_access_probability(0.1, 2, 2, &o).unwrap().total.to_f64();
    assert!(rel(p, 0.999748) < 2e-4, "{p}");
    let p = approx_access_probability(0.5, 3, 2, &o).unwrap().total.to_f64();
    assert!(rel(p, 0.638352) < 3.5e-3, "{p}");
    let p = approx_access_probability(0.7, 2, 2, &o).unwrap().total.to_f64();
    assert!(rel(p, 0.347588) < 3.5e-2, "{p}");
    let p = approx_access_probability(0.5, 2, 3, &o).unwrap().total.to_f64();
    assert!(rel(p, 0.590484) < 1e-2, "{p}");
    let p = approx_access_probability(1e-6, 2, 2, &o).unwrap().total.to_f64();
    assert!((p - 1.0).abs() < 1e-4);
}

#[test]
fn single_packet_limit_is_exponential() {
    let g: f64 = 0.2;
    let limit = approx_p_d1(g, 1, 1, &exact()).unwrap().value.to_f64();
    assert!((limit - (-g).exp()).abs() < 1e-14);
    let finite = p_d1(
        ModelSize::new(10_000, 2_000, 1, 1),
        &EvalOptions::with_engine(Engine::Float),
    )
    .unwrap()
    .value
    .to_f64();
    assert!(rel(finite, limit) < 1e-4, "{finite} vs {limit}");
}

#[test]
fn approximation_error_shrinks_with_population() {
    let approx = approx_access_probability(0.5, 2, 2, &exact()).unwrap().total.to_f64();
    let errors: Vec<f64> = [(50, 25), (200, 100), (500, 250), (2000, 1000)]
        .iter()
        .map(|&(r, n)| {
            let p = access_probability(ModelSize::new(r, n, 2, 2), &EvalOptions::with_engine(Engine::Float)).unwrap();
            (p.total.to_f64() - approx).abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn float_engine_tracks_exact() {
    for &(r, n, k, q) in &[(333, 100, 2, 2), (100, 25, 3, 2), (1000, 100, 2, 3)] {
        let size = ModelSize::new(r, n, k, q);
        let a = access_probability(size, &exact()).unwrap().total.to_f64();
        let b = access_probability(size, &EvalOptions::with_engine(Engine::Float))
            .unwrap()
            .total
            .to_f64();
        assert!(rel(b, a) < 1e-9, "{size:?}: {a} vs {b}");
    }
}

#[test]
fn total_overshoots_one_only_marginally() {
    let p = access_probability(ModelSize::new(250, 25, 2, 3), &exact())
        .unwrap()
        .total
        .to_f64();
    assert!(p > 1.0 && p < 1.0 + 1e-5, "{p}");
}

#[test]
fn delay_examples() {
    assert_eq!(message_delay(32, 1.0).unwrap(), 32.0);
    assert_eq!(message_delay(32, 0.5).unwrap(), 64.0);
    assert_eq!(message_delay(32, 0.0).unwrap(), f64::INFINITY);
    assert!(message_delay(0, 0.5).is_err());
    assert!(message_delay(32, 1.5).is_err());
}
