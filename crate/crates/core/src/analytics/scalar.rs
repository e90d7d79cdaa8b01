//! Number systems the analytic sums are evaluated in.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinatorics::{binomial_uint, SignedLog};

/// Ring operations shared by the exact integer and log-float evaluators.
pub(crate) trait Scalar: Clone + Send + Sync {
    fn nil() -> Self;
    fn unit() -> Self;
    fn from_int(v: &BigInt) -> Self;
    fn choose(n: u64, k: u64) -> Self;
    fn accumulate(&mut self, other: &Self);
    fn times(&self, other: &Self) -> Self;
    fn power(&self, e: u64) -> Self;
    fn vanishes(&self) -> bool;

    /// Factor `C(n, k)^e` of a product whose total is divided by one
    /// `C(qr, qk)` per placement. Integer scalars return the bare power and
    /// leave the division to the caller; float scalars return the ratio.
    fn placement(n: u64, k: u64, qr: u64, qk: u64, e: u64) -> Self;

    /// `hi! / lo!` for `lo <= hi`.
    fn falling(hi: u64, lo: u64) -> Self {
        let mut acc = BigInt::one();
        for i in lo + 1..=hi {
            acc *= i;
        }
        Self::from_int(&acc)
    }
}

impl Scalar for BigInt {
    fn nil() -> Self {
        Zero::zero()
    }

    fn unit() -> Self {
        One::one()
    }

    fn from_int(v: &BigInt) -> Self {
        v.clone()
    }

    fn choose(n: u64, k: u64) -> Self {
        BigInt::from(binomial_uint(n, k))
    }

    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }

    fn times(&self, other: &Self) -> Self {
        self * other
    }

    fn power(&self, e: u64) -> Self {
        num_traits::pow(self.clone(), e as usize)
    }

    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }

    fn placement(n: u64, k: u64, _qr: u64, _qk: u64, e: u64) -> Self {
        Self::choose(n, k).power(e)
    }
}

impl Scalar for SignedLog {
    fn nil() -> Self {
        SignedLog::zero()
    }

    fn unit() -> Self {
        SignedLog::one()
    }

    fn from_int(v: &BigInt) -> Self {
        SignedLog::from_bigint(v)
    }

    fn choose(n: u64, k: u64) -> Self {
        if k > n {
            return SignedLog::zero();
        }
        if crate::combinatorics::ln_binomial(n, k) < 600.0 {
            return SignedLog::from_bigint(&BigInt::from(binomial_uint(n, k)));
        }
        SignedLog::binomial(n, k)
    }

    fn accumulate(&mut self, other: &Self) {
        *self = *self + *other;
    }

    fn times(&self, other: &Self) -> Self {
        *self * *other
    }

    fn power(&self, e: u64) -> Self {
        self.powi(e)
    }

    fn vanishes(&self) -> bool {
        SignedLog::is_zero(self)
    }

    fn falling(hi: u64, lo: u64) -> Self {
        if hi - lo <= 64 {
            let mut acc = BigInt::one();
            for i in lo + 1..=hi {
                acc *= i;
            }
            return SignedLog::from_bigint(&acc);
        }
        let ln: f64 = (lo + 1..=hi).map(|i| (i as f64).ln()).sum();
        SignedLog::from_ln(1, ln)
    }

    fn placement(n: u64, k: u64, qr: u64, qk: u64, e: u64) -> Self {
        if k > n {
            return SignedLog::zero();
        }
        // C(n,k)/C(qr,k), then C(qr,k)/C(qr,qk), each as a sum of logs of
        // factors close to one.
        let shrink = (qr - n) as f64;
        let mut ln: f64 = (0..k).map(|i| (-shrink / (qr - i) as f64).ln_1p()).sum();
        if k < qk {
            ln += (k..qk).map(|i| ((i + 1) as f64 / (qr - i) as f64).ln()).sum::<f64>();
        } else {
            ln += (qk..k).map(|i| ((qr - i) as f64 / (i + 1) as f64).ln()).sum::<f64>();
        }
        SignedLog::from_ln(1, ln * e as f64)
    }
}
