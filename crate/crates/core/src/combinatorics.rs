//! Exact and extended-range float arithmetic for alternating binomial sums, plus a
//! brute-force checker for the set-difference inclusion–exclusion identity.
//!
//! Two number systems live here. [`BigRational`] (via [`binomial`] and
//! [`binomial_int`]) is the reference: every probability in the analytic
//! models is a ratio of integers, and the sums alternate in sign with terms
//! far larger than the result. [`SignedLog`] is a fast floating path that
//! carries a running magnitude bound, so a caller can tell how many digits
//! were lost to cancellation.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{param, Result};

pub use num_rational::BigRational;

/// `C(n, k)` as an exact integer; zero outside `0 <= k <= n`.
pub fn binomial_uint(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` as an exact signed integer; zero outside `0 <= k <= n`.
pub fn binomial_int(n: u64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    BigInt::from(binomial_uint(n, k as u64))
}

/// `C(n, k)` as an exact rational; zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigRational {
    BigRational::from_integer(binomial_int(n, k))
}

/// Natural log of `C(n, k)`; `-inf` outside `0 <= k <= n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut acc = 0.0;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// Natural log of `n!`.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Small signed binomial for coefficient bookkeeping; panics on overflow.
pub(crate) fn binomial_i128(n: u64, k: u64) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k as i128 {
        acc = acc.checked_mul(n as i128 - i).expect("binomial overflows i128") / (i + 1);
    }
    acc
}

/// Converts an exact rational to the nearest `f64`, including values whose
/// numerator and denominator individually overflow.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    if value.numer().is_zero() {
        return 0.0;
    }
    if let Some(v) = value.to_f64() {
        if v.is_finite() && v != 0.0 {
            return v;
        }
    }
    let ln = ln_abs_bigint(value.numer()) - ln_abs_bigint(value.denom());
    let sign = if value.is_negative() { -1.0 } else { 1.0 };
    sign * ln.exp()
}

fn ln_abs_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 960 {
        return v.abs().to_f64().expect("finite below 2^960").ln();
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift;
    top.to_f64().expect("64-bit mantissa").ln() + shift as f64 * LN_2
}

/// Formats an exact rational with `digits` significant decimal digits.
pub fn rational_to_decimal(value: &BigRational, digits: u32) -> String {
    if value.numer().is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let abs = value.abs();
    // Find e with 10^e <= abs < 10^(e+1).
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut e: i64 = rational_to_f64(&abs).log10().floor() as i64;
    let pow = |e: i64| -> BigRational {
        let p = BigInt::from(10).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            BigRational::from_integer(p)
        } else {
            BigRational::new(BigInt::one(), p)
        }
    };
    while abs < pow(e) {
        e -= 1;
    }
    while abs >= pow(e) * &ten {
        e += 1;
    }
    let scale = digits as i64 - 1 - e;
    let scaled = &abs * pow(scale);
    // round half up
    let mut int = (scaled.clone() + BigRational::new(BigInt::one(), BigInt::from(2))).floor();
    if int >= BigRational::from_integer(BigInt::from(10).pow(digits)) {
        int /= &ten;
        e += 1;
    }
    let mantissa = int.to_integer().to_string();
    let body = place_decimal(&mantissa, e);
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Formats an `f64` with `digits` significant decimal digits in positional
/// notation, matching [`rational_to_decimal`].
pub fn f64_to_decimal(value: f64, digits: u32) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    if value == 0.0 {
        return "0".to_string();
    }
    let s = format!("{:.*e}", digits as usize - 1, value.abs());
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let mantissa: String = mant.chars().filter(|c| *c != '.').collect();
    let e: i64 = exp.parse().expect("exponent digits");
    let body = place_decimal(&mantissa, e);
    if value < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn place_decimal(mantissa: &str, e: i64) -> String {
    let digits = mantissa.len() as i64;
    if e < 0 {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), mantissa)
    } else if e + 1 >= digits {
        format!("{}{}", mantissa, "0".repeat((e + 1 - digits) as usize))
    } else {
        let (a, b) = mantissa.split_at((e + 1) as usize);
        format!("{a}.{b}")
    }
}

/// A signed real with an unbounded binary exponent, so products of huge
/// binomials neither overflow nor lose relative precision.
///
/// Alongside the value it tracks `ln_scale`, the log of the total magnitude
/// of the terms that were added to produce it. `exp(ln_scale - ln|value|)`
/// is the cancellation severity: roughly the factor by which rounding error
/// was amplified. Exact constructions start with severity 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    /// Signed mantissa with `1 <= |mant| < 2`, or zero.
    mant: f64,
    exp: i64,
    ln_scale: f64,
}

const EXP_MASK: u64 = 0x7ff << 52;

fn normalise(m: f64, e: i64) -> (f64, i64) {
    if m == 0.0 || !m.is_finite() {
        return (if m.is_finite() { 0.0 } else { m }, 0);
    }
    let (mut m, mut e) = (m, e);
    if m.to_bits() & EXP_MASK == 0 {
        m *= 2f64.powi(64);
        e -= 64;
    }
    let bits = m.to_bits();
    let biased = ((bits & EXP_MASK) >> 52) as i64;
    let unit = f64::from_bits((bits & !EXP_MASK) | (1023u64 << 52));
    (unit, e + biased - 1023)
}

fn scale_pow2(m: f64, e: i64) -> f64 {
    if e > 2100 {
        return m * f64::INFINITY;
    }
    if e < -2200 {
        return m * 0.0;
    }
    let half = (e / 2) as i32;
    m * 2f64.powi(half) * 2f64.powi(e as i32 - half)
}

impl SignedLog {
    fn raw(m: f64, e: i64, ln_scale: Option<f64>) -> Self {
        let (mant, exp) = normalise(m, e);
        let mut v = Self {
            mant,
            exp,
            ln_scale: f64::NEG_INFINITY,
        };
        v.ln_scale = ln_scale.unwrap_or_else(|| v.ln_abs());
        v
    }

    pub fn zero() -> Self {
        Self {
            mant: 0.0,
            exp: 0,
            ln_scale: f64::NEG_INFINITY,
        }
    }

    pub fn one() -> Self {
        Self::raw(1.0, 0, None)
    }

    /// Builds `sign * exp(ln_mag)`.
    pub fn from_ln(sign: i8, ln_mag: f64) -> Self {
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            return Self::zero();
        }
        let e = (ln_mag / LN_2).floor();
        let m = (ln_mag - e * LN_2).exp() * sign.signum() as f64;
        Self::raw(m, e as i64, Some(ln_mag))
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            return Self::zero();
        }
        Self::raw(v, 0, None)
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        if v.is_zero() {
            return Self::zero();
        }
        let sign = if v.is_negative() { -1.0 } else { 1.0 };
        let mag = v.magnitude();
        let shift = mag.bits().saturating_sub(64);
        let top = (mag >> shift).to_f64().unwrap_or(f64::INFINITY);
        Self::raw(sign * top, shift as i64, None)
    }

    /// `C(n, k)`.
    pub fn binomial(n: u64, k: u64) -> Self {
        if k > n {
            Self::zero()
        } else {
            Self::from_ln(1, ln_binomial(n, k))
        }
    }

    pub fn sign(&self) -> i8 {
        match self.mant.partial_cmp(&0.0) {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            _ => 0,
        }
    }

    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().ln() + self.exp as f64 * LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    pub fn to_f64(&self) -> f64 {
        scale_pow2(self.mant, self.exp)
    }

    /// Cancellation severity (>= 1; infinite when terms cancelled to zero).
    pub fn severity(&self) -> f64 {
        if self.ln_scale == f64::NEG_INFINITY {
            return 1.0;
        }
        if self.is_zero() {
            return f64::INFINITY;
        }
        (self.ln_scale - self.ln_abs()).exp().max(1.0)
    }

    /// Decimal digits lost to cancellation, `log10(severity)`.
    pub fn digits_lost(&self) -> f64 {
        self.severity().log10()
    }

    pub fn powi(self, e: u64) -> Self {
        if e == 0 {
            return Self::one();
        }
        let ln_scale = self.ln_scale * e as f64;
        let mut base = self;
        let mut acc = Self::one();
        let mut left = e;
        while left > 0 {
            if left & 1 == 1 {
                acc = acc * base;
            }
            left >>= 1;
            if left > 0 {
                base = base * base;
            }
        }
        acc.ln_scale = ln_scale;
        acc
    }

    pub fn abs(self) -> Self {
        Self {
            mant: self.mant.abs(),
            ..self
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl Add for SignedLog {
    type Output = SignedLog;

    fn add(self, rhs: SignedLog) -> SignedLog {
        let ln_scale = log_add_exp(self.ln_scale, rhs.ln_scale);
        if self.is_zero() {
            return SignedLog { ln_scale, ..rhs };
        }
        if rhs.is_zero() {
            return SignedLog { ln_scale, ..self };
        }
        let (big, small) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let gap = small.exp - big.exp;
        if gap < -64 {
            return SignedLog { ln_scale, ..big };
        }
        let sum = big.mant + small.mant * 2f64.powi(gap as i32);
        if sum == 0.0 {
            return SignedLog {
                ln_scale,
                ..SignedLog::zero()
            };
        }
        SignedLog::raw(sum, big.exp, Some(ln_scale))
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;

    fn sub(self, rhs: SignedLog) -> SignedLog {
        self + (-rhs)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;

    fn neg(self) -> SignedLog {
        SignedLog {
            mant: -self.mant,
            ..self
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        let ln_scale = self.ln_scale + rhs.ln_scale;
        if self.is_zero() || rhs.is_zero() {
            return SignedLog {
                ln_scale,
                ..SignedLog::zero()
            };
        }
        SignedLog::raw(self.mant * rhs.mant, self.exp + rhs.exp, Some(ln_scale))
    }
}

impl Div for SignedLog {
    type Output = SignedLog;

    /// Division by an exactly-known divisor; the divisor's own severity is
    /// not propagated.
    fn div(self, rhs: SignedLog) -> SignedLog {
        assert!(!rhs.is_zero(), "SignedLog division by zero");
        let ln_scale = self.ln_scale - rhs.ln_abs();
        if self.is_zero() {
            return SignedLog {
                ln_scale,
                ..SignedLog::zero()
            };
        }
        SignedLog::raw(self.mant / rhs.mant, self.exp - rhs.exp, Some(ln_scale))
    }
}

impl fmt::Display for SignedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// A finite probability space with `S` named events over its outcomes.
#[derive(Clone, Debug)]
pub struct FiniteEventSpace {
    outcome_probabilities: Vec<f64>,
    membership: Vec<Vec<bool>>,
}

impl FiniteEventSpace {
    /// Largest number of events for which subset enumeration is allowed.
    pub const MAX_EVENTS: usize = 20;

    /// `events[s]` lists the outcome indices belonging to event `s`.
    pub fn new(outcome_probabilities: Vec<f64>, events: Vec<Vec<usize>>) -> Result<Self> {
        if outcome_probabilities.iter().any(|p| p.is_nan() || *p < 0.0) {
            return param("outcome probabilities must be non-negative");
        }
        let total: f64 = outcome_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return param(format!("outcome probabilities sum to {total}, not 1"));
        }
        if events.is_empty() || events.len() > Self::MAX_EVENTS {
            return param(format!("event count must be in 1..={}", Self::MAX_EVENTS));
        }
        let n = outcome_probabilities.len();
        let mut membership = Vec::with_capacity(events.len());
        for ev in &events {
            let mut row = vec![false; n];
            for &o in ev {
                if o >= n {
                    return param(format!("event refers to outcome {o} of {n}"));
                }
                row[o] = true;
            }
            membership.push(row);
        }
        Ok(Self {
            outcome_probabilities,
            membership,
        })
    }

    pub fn event_count(&self) -> usize {
        self.membership.len()
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_probabilities.len()
    }

    /// `P(∩_{s ∈ subset} A_s)` where `subset` is a bitmask over events.
    fn intersection_probability(&self, subset: u32) -> f64 {
        (0..self.outcome_count())
            .filter(|&o| {
                (0..self.event_count())
                    .filter(|s| subset >> s & 1 == 1)
                    .all(|s| self.membership[s][o])
            })
            .map(|o| self.outcome_probabilities[o])
            .sum()
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order == 0 || order > self.event_count() {
            return param(format!("intersection order {order} outside 1..={}", self.event_count()));
        }
        Ok(())
    }
}

/// Left side of the identity: over all `order`-subsets `π` of the events, the
/// probability that every event of `π` occurs and no other event does,
/// computed by enumerating outcomes.
pub fn set_difference_probability_lhs(space: &FiniteEventSpace, order: usize) -> Result<f64> {
    space.check_order(order)?;
    let s = space.event_count();
    let mut total = 0.0;
    for pi in 0u32..(1 << s) {
        if pi.count_ones() as usize != order {
            continue;
        }
        for o in 0..space.outcome_count() {
            let inside = (0..s).filter(|e| pi >> e & 1 == 1).all(|e| space.membership[e][o]);
            let outside = (0..s).filter(|e| pi >> e & 1 == 0).any(|e| space.membership[e][o]);
            if inside && !outside {
                total += space.outcome_probabilities[o];
            }
        }
    }
    Ok(total)
}

/// Right side of the identity:
/// `Σ_{k=order}^{S} (-1)^{k-order} C(k, order) Σ_{|G|=k} P(∩_{g∈G} A_g)`.
pub fn set_difference_probability_rhs(space: &FiniteEventSpace, order: usize) -> Result<f64> {
    space.check_order(order)?;
    let s = space.event_count();
    let mut by_size = vec![0.0; s + 1];
    for g in 1u32..(1 << s) {
        by_size[g.count_ones() as usize] += space.intersection_probability(g);
    }
    let mut total = 0.0;
    for (k, sum) in by_size.iter().enumerate().skip(order) {
        let sign = if (k - order).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * binomial_i128(k as u64, order as u64) as f64 * sum;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(6, 2), big(15));
        assert_eq!(binomial(5, 7), big(0));
        assert_eq!(binomial(5, -1), big(0));
        assert_eq!(binomial(0, 0), big(1));
    }

    #[test]
    fn binomial_matches_factorial_product() {
        // n! / (k! (n-k)!) with every factorial expanded digit by digit.
        fn fact(n: u64) -> BigUint {
            (1..=n).fold(BigUint::one(), |acc, i| acc * i)
        }
        for &(n, k) in &[(500u64, 4u64), (500, 250), (2000, 17), (2000, 1000)] {
            let oracle = fact(n) / (fact(k) * fact(n - k));
            assert_eq!(binomial_uint(n, k), oracle, "C({n},{k})");
        }
        assert_eq!(binomial_uint(500, 4).to_string(), "2573031125");
    }

    #[test]
    fn pascal_recurrence_up_to_60() {
        for n in 1..=60u64 {
            for k in 0..=n as i64 {
                assert_eq!(
                    binomial_int(n, k),
                    binomial_int(n - 1, k - 1) + binomial_int(n - 1, k),
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn signed_log_binomial_ratios_match_exact() {
        // products and quotients of binomials up to n = 500
        let cases = [(500u64, 4u64, 300u64, 7u64), (499, 250, 120, 60), (64, 3, 60, 30)];
        for (a, b, c, d) in cases {
            let exact = BigRational::new(binomial_int(a, b as i64), binomial_int(c, d as i64)) * binomial(c + 5, 3);
            let approx = SignedLog::binomial(a, b) / SignedLog::binomial(c, d) * SignedLog::binomial(c + 5, 3);
            let e = rational_to_f64(&exact);
            let rel = ((approx.to_f64() - e) / e).abs();
            assert!(rel < 1e-12, "rel {rel} for {a},{b},{c},{d}");
        }
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLog::from_f64(3.0);
        let b = SignedLog::from_f64(-1.25);
        assert!(((a + b).to_f64() - 1.75).abs() < 1e-15);
        assert!(((a * b).to_f64() + 3.75).abs() < 1e-15);
        assert!(((b - a).to_f64() + 4.25).abs() < 1e-15);
        assert!((a.powi(3).to_f64() - 27.0).abs() < 1e-12);
        assert_eq!((a + (-a)).sign(), 0);
        assert!((a + (-a)).severity().is_infinite());
        assert_eq!(a.severity(), 1.0);
    }

    #[test]
    fn signed_log_beyond_f64_range() {
        let huge = SignedLog::from_bigint(&binomial_int(5000, 2500));
        assert!((huge.ln_abs() - ln_binomial(5000, 2500)).abs() < 1e-9);
        assert!(huge.to_f64().is_infinite());
        let ratio = huge / SignedLog::from_bigint(&binomial_int(5000, 2499));
        assert!((ratio.to_f64() - 2501.0 / 2500.0).abs() < 1e-14);
        let tiny = SignedLog::one() / huge;
        assert_eq!(tiny.to_f64(), 0.0);
        assert!(((tiny * huge).to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_is_flagged() {
        let big = SignedLog::from_f64(1e12);
        let almost = SignedLog::from_f64(-(1e12 - 1.0));
        let r = big + almost;
        assert!((r.to_f64() - 1.0).abs() < 1e-9);
        assert!(r.digits_lost() > 11.0, "lost {}", r.digits_lost());
        let benign = SignedLog::from_f64(1.0) + SignedLog::from_f64(2.0);
        assert!(benign.digits_lost() < 1e-12);
    }

    #[test]
    fn decimal_formatting() {
        let r = BigRational::new(BigInt::from(2), BigInt::from(3));
        assert_eq!(rational_to_decimal(&r, 15), "0.666666666666667");
        assert_eq!(rational_to_decimal(&big(1), 15), "1.00000000000000");
        assert_eq!(rational_to_decimal(&big(0), 15), "0");
        let tiny = BigRational::new(BigInt::from(-1), BigInt::from(800));
        assert_eq!(rational_to_decimal(&tiny, 3), "-0.00125");
        assert_eq!(f64_to_decimal(2.0 / 3.0, 15), "0.666666666666667");
        assert_eq!(f64_to_decimal(-0.00125, 3), "-0.00125");
        assert_eq!(f64_to_decimal(1234.5, 3), "1230");
    }

    #[test]
    fn huge_rational_to_f64() {
        let n = binomial_int(5000, 2400) - BigInt::one();
        let d = binomial_int(5000, 2400);
        let v = rational_to_f64(&BigRational::new(n, d));
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_event_space() {
        let space = FiniteEventSpace::new(vec![0.4, 0.6], vec![vec![0]]).unwrap();
        assert!((set_difference_probability_lhs(&space, 1).unwrap() - 0.4).abs() < 1e-15);
        assert!((set_difference_probability_rhs(&space, 1).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn disjoint_events_union() {
        let space = FiniteEventSpace::new(vec![0.3, 0.2, 0.5], vec![vec![0], vec![1]]).unwrap();
        assert!((set_difference_probability_lhs(&space, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn independent_pair_intersection() {
        // outcomes (a, b) in {0,1}^2 uniformly; A1 = {a=1}, A2 = {b=1}
        let space = FiniteEventSpace::new(vec![0.25; 4], vec![vec![2, 3], vec![1, 3]]).unwrap();
        assert!((set_difference_probability_rhs(&space, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((set_difference_probability_lhs(&space, 2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn order_out_of_range() {
        let space = FiniteEventSpace::new(vec![1.0], vec![vec![0]]).unwrap();
        assert!(set_difference_probability_lhs(&space, 0).is_err());
        assert!(set_difference_probability_rhs(&space, 2).is_err());
        assert!(FiniteEventSpace::new(vec![0.5, 0.4], vec![vec![0]]).is_err());
        assert!(FiniteEventSpace::new(vec![1.0], vec![vec![3]]).is_err());
    }

    fn arb_space() -> impl Strategy<Value = (FiniteEventSpace, usize)> {
        (1usize..=10, 1usize..=4).prop_flat_map(|(outcomes, s)| {
            (
                proptest::collection::vec(0.01f64..1.0, outcomes),
                proptest::collection::vec(proptest::collection::vec(any::<bool>(), outcomes), s),
                1..=s,
            )
                .prop_map(|(w, masks, order)| {
                    let total: f64 = w.iter().sum();
                    let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
                    let events = masks.iter().map(|m| (0..m.len()).filter(|&i| m[i]).collect()).collect();
                    (FiniteEventSpace::new(probs, events).unwrap(), order)
                })
        })
    }

    proptest! {
        #[test]
        fn set_difference_identity((space, order) in arb_space()) {
            let lhs = set_difference_probability_lhs(&space, order).unwrap();
            let rhs = set_difference_probability_rhs(&space, order).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10, "lhs {} rhs {}", lhs, rhs);
        }
    }
}
