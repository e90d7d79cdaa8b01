//! Large-system limit `N, R → ∞` at fixed `γ = N/R`.

use num_bigint::BigInt;

use super::exact::{advance, map_range, pascal, recovery_weight, target_coefficient, Convolution};
use super::scalar::Scalar;
use crate::combinatorics::{binomial_int, ln_factorial, SignedLog};

fn decay(rate: f64, count: u64) -> SignedLog {
    SignedLog::from_ln(1, -rate * count as f64)
}

/// `Σ_{Q≤j≤k≤QK} (-1)^{k-j} C(k,j) C(QK,k) e^{-Kkγ}`.
pub(crate) fn first_iteration(gamma: f64, k: u64, q: u64) -> (SignedLog, u64) {
    let qk = q * k;
    let rate = k as f64 * gamma;
    let mut acc = SignedLog::zero();
    let mut terms = 0;
    for kk in q..=qk {
        let tail = SignedLog::binomial(qk, kk) * decay(rate, kk);
        for j in q..=kk {
            let coeff = binomial_int(kk, j as i64);
            let signed = if (kk - j) % 2 == 0 { coeff } else { -coeff };
            acc = acc + SignedLog::from_bigint(&signed) * tail;
            terms += 1;
        }
    }
    (acc, terms)
}

fn partner_weight(kj: u64, q: u64, qk: u64, rate: f64) -> SignedLog {
    SignedLog::from_bigint(&recovery_weight(kj, q))
        * SignedLog::from_ln(1, ln_factorial(qk) - ln_factorial(qk - 1 - kj))
        * decay(rate, kj)
}

fn outer(gamma: f64, q: u64, c: u64) -> SignedLog {
    SignedLog::from_f64(gamma / q as f64).powi(c) / SignedLog::from_ln(1, ln_factorial(c))
}

/// Reference nested sum over partner RB counts.
pub(crate) fn second_iteration_naive(gamma: f64, k: u64, q: u64) -> (SignedLog, u64) {
    let qk = q * k;
    let rate = k as f64 * gamma;
    let mut acc = SignedLog::zero();
    let mut terms = 0;
    if q >= qk {
        return (acc, 0);
    }
    for c in 1..=qk {
        let mut ks = vec![q; c as usize];
        loop {
            let kappa: u64 = ks.iter().sum();
            let mut inner = SignedLog::one();
            let mut suffix = kappa;
            for (j, &kj) in ks.iter().enumerate() {
                inner = inner
                    * SignedLog::from_f64((c - j as u64 + kappa) as f64)
                    * SignedLog::binomial(suffix, kj)
                    * partner_weight(kj, q, qk, rate);
                suffix -= kj;
            }
            let shared = inner
                * outer(gamma, q, c)
                * SignedLog::binomial(qk + kappa, c + kappa)
                * SignedLog::from_ln(1, ln_factorial(qk) - ln_factorial(qk + kappa));
            for kn in 0..=qk - c {
                terms += 1;
                let coeff = target_coefficient(c, kn, q, qk);
                if num_traits::Zero::is_zero(&coeff) {
                    continue;
                }
                acc = acc + shared * SignedLog::from_bigint(&coeff) * decay(rate, kn + c);
            }
            if !advance(&mut ks, |_| qk - 1, q) {
                break;
            }
        }
    }
    (acc, terms)
}

/// Convolution form; the exponential factorises over partners so one
/// table serves every `G`.
pub(crate) fn second_iteration_dp(gamma: f64, k: u64, q: u64) -> (SignedLog, u64) {
    let qk = q * k;
    if q >= qk {
        return (SignedLog::zero(), 0);
    }
    let rate = k as f64 * gamma;
    let a: Vec<SignedLog> = (0..qk)
        .map(|kj| {
            if kj < q {
                SignedLog::zero()
            } else {
                partner_weight(kj, q, qk, rate)
            }
        })
        .collect();
    let max_n = qk * (qk - 1);
    let table = pascal::<SignedLog>(max_n, qk);
    let (conv, ops) = Convolution::build(&a, q, qk, max_n, &table);
    let parts = map_range(1, qk, |c| {
        let mut acc = SignedLog::zero();
        let mut ops = 0u64;
        let coeffs: Vec<BigInt> = (0..=qk - c).map(|kn| target_coefficient(c, kn, q, qk)).collect();
        for kappa in c * q..=c * (qk - 1) {
            let tuple_sum = conv.get(c, kappa);
            if tuple_sum.vanishes() {
                continue;
            }
            let shared = *tuple_sum
                * SignedLog::binomial(qk + kappa, c + kappa)
                * SignedLog::from_ln(1, ln_factorial(qk) - ln_factorial(qk + kappa))
                * <SignedLog as Scalar>::falling(c + kappa, kappa);
            for (kn, coeff) in coeffs.iter().enumerate() {
                ops += 1;
                if num_traits::Zero::is_zero(coeff) {
                    continue;
                }
                acc = acc + shared * SignedLog::from_bigint(coeff) * decay(rate, kn as u64 + c);
            }
        }
        (acc * outer(gamma, q, c), ops)
    });
    let mut acc = SignedLog::zero();
    let mut total_ops = ops;
    for (v, o) in parts {
        acc = acc + v;
        total_ops += o;
    }
    (acc, total_ops)
}
