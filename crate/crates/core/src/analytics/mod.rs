//! Closed-form access probability with two IIC iterations and single-MTCD
//! cancellation, its large-system approximation, and message delay.
//!
//! The finite model is `P(D1) + P(D2)`: recovery from exclusive RBs in the
//! first iteration, plus recovery once the replicas of first-iteration
//! partners are cancelled. Both are alternating sums. The exact engine
//! evaluates them over the integers and divides once at the end; the float
//! engine normalises every placement factor up front, sums in [`SignedLog`]
//! and reports how many digits cancellation cost.

mod approx;
mod exact;
mod scalar;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial_int, f64_to_decimal, rational_to_decimal, rational_to_f64, BigRational, SignedLog,
};
use crate::error::{param, Error, Result};
use crate::model::SystemConfig;
use exact::Dims;
pub use exact::IndexTuple;

/// Default cap on estimated work units per evaluation.
pub const DEFAULT_TERM_BUDGET: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Rational arithmetic; the reference.
    Exact,
    /// Extended-range floats with a cancellation estimate.
    Float,
    /// Large-system limit in extended-range floats.
    Approx,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Exact => "exact",
            Engine::Float => "float",
            Engine::Approx => "approx",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Engine::Exact),
            "float" => Ok(Engine::Float),
            "approx" => Ok(Engine::Approx),
            _ => param(format!("unknown engine '{s}'")),
        }
    }
}

/// How the second-iteration sum is enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Whichever of the two below is estimated cheaper.
    Auto,
    /// Nested loops over partner RB counts.
    Naive,
    /// Convolution over the partners' total RB count.
    Convolution,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub engine: Engine,
    pub strategy: Strategy,
    pub term_budget: u64,
    /// Float results losing more digits than this carry a warning.
    pub max_digits_lost: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            engine: Engine::Exact,
            strategy: Strategy::Auto,
            term_budget: DEFAULT_TERM_BUDGET,
            max_digits_lost: 6.0,
        }
    }
}

impl EvalOptions {
    pub fn with_engine(engine: Engine) -> Self {
        Self {
            engine,
            ..Self::default()
        }
    }
}

/// A probability from one of the engines.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbabilityValue {
    Exact(BigRational),
    Float { value: f64, digits_lost: f64 },
}

impl ProbabilityValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ProbabilityValue::Exact(r) => rational_to_f64(r),
            ProbabilityValue::Float { value, .. } => *value,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ProbabilityValue::Exact(r) => Some(r),
            ProbabilityValue::Float { .. } => None,
        }
    }

    /// Decimal string with `digits` significant digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        match self {
            ProbabilityValue::Exact(r) => rational_to_decimal(r, digits),
            ProbabilityValue::Float { value, .. } => f64_to_decimal(*value, digits),
        }
    }

    pub fn digits_lost(&self) -> f64 {
        match self {
            ProbabilityValue::Exact(_) => 0.0,
            ProbabilityValue::Float { digits_lost, .. } => *digits_lost,
        }
    }

    fn sum(&self, other: &ProbabilityValue) -> ProbabilityValue {
        match (self, other) {
            (ProbabilityValue::Exact(a), ProbabilityValue::Exact(b)) => ProbabilityValue::Exact(a + b),
            _ => ProbabilityValue::Float {
                value: self.to_f64() + other.to_f64(),
                digits_lost: self.digits_lost().max(other.digits_lost()),
            },
        }
    }
}

/// One evaluated component.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: ProbabilityValue,
    pub term_count: u64,
    pub warnings: Vec<String>,
}

/// `P(D1) + P(D2)` with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessProbability {
    pub engine: Engine,
    pub p_d1: ProbabilityValue,
    pub p_d2: ProbabilityValue,
    pub total: ProbabilityValue,
    pub term_count: u64,
    pub warnings: Vec<String>,
}

/// The four sizes the finite model depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSize {
    pub rbs: u32,
    pub mtcds: u32,
    pub repetition: u32,
    pub frames: u32,
}

impl ModelSize {
    pub fn new(rbs: u32, mtcds: u32, repetition: u32, frames: u32) -> Self {
        Self {
            rbs,
            mtcds,
            repetition,
            frames,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.mtcds as f64 / self.rbs as f64
    }

    fn dims(&self) -> Result<Dims> {
        if self.rbs == 0 || self.repetition == 0 || self.frames == 0 {
            return param("R, K and Q must be positive");
        }
        if self.mtcds == 0 {
            return param("the access probability needs N >= 1");
        }
        if self.repetition > self.rbs {
            return param(format!("QK exceeds QR (K={} > R={})", self.repetition, self.rbs));
        }
        let q = self.frames as u64;
        Ok(Dims {
            q,
            qk: q * self.repetition as u64,
            qr: q * self.rbs as u64,
            n: self.mtcds as u64,
        })
    }
}

impl From<&SystemConfig> for ModelSize {
    fn from(c: &SystemConfig) -> Self {
        Self::new(c.rbs, c.mtcds, c.repetition, c.frames)
    }
}

fn float_value(v: SignedLog, opts: &EvalOptions, what: &str, warnings: &mut Vec<String>) -> ProbabilityValue {
    let lost = v.digits_lost();
    if lost > opts.max_digits_lost {
        warnings.push(format!(
            "degraded precision in {what}: about {lost:.1} decimal digits lost to cancellation"
        ));
    }
    ProbabilityValue::Float {
        value: v.to_f64(),
        digits_lost: lost,
    }
}

fn check_budget(cost: u128, budget: u64, what: &str) -> Result<()> {
    if cost > budget as u128 {
        return Err(Error::Budget(format!(
            "{what} needs about {cost} work units, budget is {budget}; \
             use the approximation or raise the term budget"
        )));
    }
    Ok(())
}

/// Probability that a tagged MTCD is recovered from its exclusive RBs.
pub fn p_d1(size: ModelSize, opts: &EvalOptions) -> Result<Evaluation> {
    let d = size.dims()?;
    let mut warnings = Vec::new();
    let den_exp = d.n - 1;
    let (value, terms) = match opts.engine {
        Engine::Exact => {
            let (num, terms) = exact::first_iteration_numerator::<BigInt>(d);
            let den = num_traits::pow(binomial_int(d.qr, d.qk as i64), den_exp as usize);
            (ProbabilityValue::Exact(BigRational::new(num, den)), terms)
        }
        Engine::Float => {
            let (v, terms) = exact::first_iteration_numerator::<SignedLog>(d);
            (float_value(v, opts, "P(D1)", &mut warnings), terms)
        }
        Engine::Approx => {
            return approx_p_d1(size.gamma(), size.repetition, size.frames, opts);
        }
    };
    Ok(Evaluation {
        value,
        term_count: terms,
        warnings,
    })
}

/// Probability that a tagged MTCD becomes recoverable after cancelling
/// first-iteration partners.
pub fn p_d2(size: ModelSize, opts: &EvalOptions) -> Result<Evaluation> {
    let d = size.dims()?;
    if opts.engine == Engine::Approx {
        return approx_p_d2(size.gamma(), size.repetition, size.frames, opts);
    }
    let naive = exact::naive_cost(d);
    let conv = exact::dp_cost(d);
    let use_naive = match opts.strategy {
        Strategy::Naive => true,
        Strategy::Convolution => false,
        Strategy::Auto => naive <= conv,
    };
    check_budget(if use_naive { naive } else { conv }, opts.term_budget, "P(D2)")?;
    let mut warnings = Vec::new();
    let (value, terms) = match opts.engine {
        Engine::Exact => {
            let (num, terms) = if use_naive {
                exact::second_iteration_naive::<BigInt>(d)
            } else {
                exact::second_iteration_dp::<BigInt>(d)
            };
            let den = num_traits::pow(binomial_int(d.qr, d.qk as i64), d.n as usize);
            (ProbabilityValue::Exact(BigRational::new(num, den)), terms)
        }
        _ => {
            let (v, terms) = if use_naive {
                exact::second_iteration_naive::<SignedLog>(d)
            } else {
                exact::second_iteration_dp::<SignedLog>(d)
            };
            (float_value(v, opts, "P(D2)", &mut warnings), terms)
        }
    };
    Ok(Evaluation {
        value,
        term_count: terms,
        warnings,
    })
}

fn combine(engine: Engine, d1: Evaluation, d2: Evaluation) -> AccessProbability {
    let total = d1.value.sum(&d2.value);
    let mut warnings = d1.warnings;
    warnings.extend(d2.warnings);
    AccessProbability {
        engine,
        total,
        p_d1: d1.value,
        p_d2: d2.value,
        term_count: d1.term_count + d2.term_count,
        warnings,
    }
}

/// `P(D1) + P(D2)` for the finite system, or the approximation at
/// `γ = N/R` when the approximation engine is selected.
pub fn access_probability(size: ModelSize, opts: &EvalOptions) -> Result<AccessProbability> {
    size.dims()?;
    if opts.engine == Engine::Approx {
        return approx_access_probability(size.gamma(), size.repetition, size.frames, opts);
    }
    let d1 = p_d1(size, opts)?;
    let d2 = p_d2(size, opts)?;
    Ok(combine(opts.engine, d1, d2))
}

fn check_gamma(gamma: f64, k: u32, q: u32) -> Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return param(format!("gamma must be a non-negative number, got {gamma}"));
    }
    if k == 0 || q == 0 {
        return param("K and Q must be positive");
    }
    Ok(())
}

/// Limit of [`p_d1`] at fixed `γ`.
pub fn approx_p_d1(gamma: f64, k: u32, q: u32, opts: &EvalOptions) -> Result<Evaluation> {
    check_gamma(gamma, k, q)?;
    let (v, terms) = approx::first_iteration(gamma, k as u64, q as u64);
    let mut warnings = Vec::new();
    let value = float_value(v, opts, "approximate P(D1)", &mut warnings);
    Ok(Evaluation {
        value,
        term_count: terms,
        warnings,
    })
}

/// Limit of [`p_d2`] at fixed `γ`.
pub fn approx_p_d2(gamma: f64, k: u32, q: u32, opts: &EvalOptions) -> Result<Evaluation> {
    check_gamma(gamma, k, q)?;
    let d = Dims {
        q: q as u64,
        qk: q as u64 * k as u64,
        qr: u64::MAX / 4,
        n: q as u64 * k as u64 + 1,
    };
    let naive = exact::naive_cost(d);
    let qk = d.qk as u128;
    let conv = qk * qk * qk * qk;
    let use_naive = match opts.strategy {
        Strategy::Naive => true,
        Strategy::Convolution => false,
        Strategy::Auto => naive <= conv,
    };
    check_budget(
        if use_naive { naive } else { conv },
        opts.term_budget,
        "approximate P(D2)",
    )?;
    let (v, terms) = if use_naive {
        approx::second_iteration_naive(gamma, k as u64, q as u64)
    } else {
        approx::second_iteration_dp(gamma, k as u64, q as u64)
    };
    let mut warnings = Vec::new();
    let value = float_value(v, opts, "approximate P(D2)", &mut warnings);
    Ok(Evaluation {
        value,
        term_count: terms,
        warnings,
    })
}

/// Approximate access probability at intensity `γ`.
pub fn approx_access_probability(gamma: f64, k: u32, q: u32, opts: &EvalOptions) -> Result<AccessProbability> {
    let d1 = approx_p_d1(gamma, k, q, opts)?;
    let d2 = approx_p_d2(gamma, k, q, opts)?;
    Ok(combine(Engine::Approx, d1, d2))
}

/// Expected message delay in time frames, `M / P`. A zero access
/// probability yields `f64::INFINITY`.
pub fn message_delay(message_packets: u32, access_prob: f64) -> Result<f64> {
    if message_packets == 0 {
        return param("message size must be at least one packet");
    }
    if !(0.0..=1.0).contains(&access_prob) {
        return param(format!("access probability {access_prob} outside [0, 1]"));
    }
    if access_prob == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(message_packets as f64 / access_prob)
}

/// JSON shape of an analytic result; probabilities are decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub engine: Engine,
    #[serde(rename = "R")]
    pub rbs: Option<u32>,
    #[serde(rename = "N")]
    pub mtcds: Option<u32>,
    #[serde(rename = "K")]
    pub repetition: u32,
    #[serde(rename = "Q")]
    pub frames: u32,
    pub gamma: f64,
    pub p_d1: String,
    pub p_d2: String,
    pub total: String,
    pub term_count: u64,
    pub warnings: Vec<String>,
}

impl AnalyticReport {
    pub const DIGITS: u32 = 15;

    /// `size` is `None` for results of the approximation evaluated directly
    /// from `γ`.
    pub fn new(result: &AccessProbability, size: Option<ModelSize>, gamma: f64, k: u32, q: u32) -> Self {
        Self {
            engine: result.engine,
            rbs: size.map(|s| s.rbs),
            mtcds: size.map(|s| s.mtcds),
            repetition: k,
            frames: q,
            gamma,
            p_d1: result.p_d1.to_decimal(Self::DIGITS),
            p_d2: result.p_d2.to_decimal(Self::DIGITS),
            total: result.total.to_decimal(Self::DIGITS),
            term_count: result.term_count,
            warnings: result.warnings.clone(),
        }
    }
}
