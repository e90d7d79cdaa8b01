//! Monte Carlo estimation of data-unit access probability and message delay.
//!
//! Trial `t` of a run seeded `s` draws its map from `rng::derive_seed(s, t)`,
//! and trials are processed in fixed-size blocks whose integer tallies are
//! summed, so a report depends only on `(config, trials, seed, options)` and
//! never on the number of worker threads.

use serde::{Deserialize, Serialize};

use crate::decoder::Decoder;
use crate::error::{param, Error, Result};
use crate::model::{AccessMap, MapSampler, SystemConfig};
use crate::rng;

const BLOCK: u64 = 64;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Which MTCDs a trial contributes samples from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Every MTCD of every trial; MTCDs are exchangeable, so this is
    /// unbiased with `N` times the samples.
    #[default]
    Pooled,
    /// MTCD 0 only; samples are independent across trials.
    Tagged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub estimator: Estimator,
    /// STFs one delay trial may consume before giving up.
    pub stf_cap: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::Pooled,
            stf_cap: 1_000_000,
        }
    }
}

impl SimOptions {
    pub fn tagged() -> Self {
        Self {
            estimator: Estimator::Tagged,
            ..Self::default()
        }
    }
}

/// Result of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: SystemConfig,
    pub trials: u64,
    pub estimator: Estimator,
    /// DU transmissions observed: `trials·N` pooled, `trials` tagged, or
    /// every attempt made in a delay run.
    pub samples: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci95_halfwidth: f64,
    /// Mean message delay in frames, for delay runs.
    pub mean_delay_frames: Option<f64>,
    pub delay_ci95_halfwidth: Option<f64>,
    pub seed: u64,
}

/// Flat CSV record of a [`TrialReport`], in the documented column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct CsvRow {
    #[serde(rename = "R")]
    pub rbs: u32,
    #[serde(rename = "N")]
    pub mtcds: u32,
    #[serde(rename = "K")]
    pub repetition: u32,
    #[serde(rename = "Q")]
    pub frames: u32,
    pub alpha: u32,
    pub beta: u32,
    pub scheme: String,
    pub ic: String,
    pub selection: String,
    pub gamma: f64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci95: f64,
    pub mean_delay: Option<f64>,
    pub seed: u64,
}

impl TrialReport {
    fn from_tally(config: SystemConfig, trials: u64, seed: u64, estimator: Estimator, t: &Tally) -> Self {
        let p_hat = t.successes as f64 / t.samples as f64;
        let delay = (t.delay_samples > 0).then(|| {
            let n = t.delay_samples as f64;
            let mean = t.delay_sum as f64 / n;
            let var = (t.delay_sq_sum as f64 / n - mean * mean).max(0.0);
            (mean, Z95 * (var / n).sqrt())
        });
        Self {
            config,
            trials,
            estimator,
            samples: t.samples,
            successes: t.successes,
            p_hat,
            ci95_halfwidth: ci95_halfwidth(p_hat, t.samples),
            mean_delay_frames: delay.map(|d| d.0),
            delay_ci95_halfwidth: delay.map(|d| d.1),
            seed,
        }
    }

    pub fn csv_row(&self) -> CsvRow {
        let c = &self.config;
        CsvRow {
            rbs: c.rbs,
            mtcds: c.mtcds,
            repetition: c.repetition,
            frames: c.frames,
            alpha: c.iterations,
            beta: c.mai_width,
            scheme: c.scheme.to_string(),
            ic: c.ic.to_string(),
            selection: c.selection.to_string(),
            gamma: c.gamma(),
            trials: self.trials,
            p_hat: self.p_hat,
            ci95: self.ci95_halfwidth,
            mean_delay: self.mean_delay_frames,
            seed: self.seed,
        }
    }
}

/// `1.96·sqrt(p(1-p)/n)`.
pub fn ci95_halfwidth(p_hat: f64, samples: u64) -> f64 {
    if samples == 0 {
        return f64::NAN;
    }
    Z95 * (p_hat * (1.0 - p_hat) / samples as f64).sqrt()
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    samples: u64,
    successes: u64,
    delay_samples: u64,
    delay_sum: u128,
    delay_sq_sum: u128,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.samples += o.samples;
        self.successes += o.successes;
        self.delay_samples += o.delay_samples;
        self.delay_sum += o.delay_sum;
        self.delay_sq_sum += o.delay_sq_sum;
        self
    }
}

/// Scratch state owned by one worker.
struct Worker {
    sampler: MapSampler,
    decoder: Decoder,
    map: AccessMap,
}

impl Worker {
    fn new(config: &SystemConfig) -> Self {
        Self {
            sampler: MapSampler::new(),
            decoder: Decoder::new(),
            map: AccessMap::empty(*config),
        }
    }
}

fn check(config: &SystemConfig, trials: u64) -> Result<()> {
    config.validate()?;
    if trials == 0 {
        return param("trials must be at least 1");
    }
    if config.mtcds == 0 {
        return param("N must be at least 1 to observe any data unit");
    }
    Ok(())
}

fn run_blocks<F>(trials: u64, body: F) -> Result<Tally>
where
    F: Fn(u64, u64) -> Result<Tally> + Send + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let run = |b: u64| body(b * BLOCK, ((b + 1) * BLOCK).min(trials));
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Tally>> = {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Tally>> = (0..blocks).map(run).collect();
    parts.into_iter().try_fold(Tally::default(), |acc, t| Ok(acc.merge(t?)))
}

/// Pooled estimate of the probability that an MTCD delivers its data unit
/// in one STF.
pub fn estimate_access_probability(config: &SystemConfig, trials: u64, seed: u64) -> Result<TrialReport> {
    estimate_access_probability_with(config, trials, seed, &SimOptions::default())
}

pub fn estimate_access_probability_with(
    config: &SystemConfig,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<TrialReport> {
    check(config, trials)?;
    let tally = run_blocks(trials, |lo, hi| {
        let mut w = Worker::new(config);
        let mut t = Tally::default();
        for trial in lo..hi {
            w.sampler.fill(&mut w.map, rng::derive_seed(seed, trial));
            let view = w.decoder.decode(&w.map);
            match opts.estimator {
                Estimator::Pooled => {
                    t.samples += config.mtcds as u64;
                    t.successes += view.recovered_count() as u64;
                }
                Estimator::Tagged => {
                    t.samples += 1;
                    t.successes += (view.recovered_at(0) > 0) as u64;
                }
            }
        }
        Ok(t)
    })?;
    Ok(TrialReport::from_tally(*config, trials, seed, opts.estimator, &tally))
}

/// Message delay in frames: each MTCD sends `M/Q` data units one after
/// another, retrying a failed one in the next STF; every STF costs `Q`
/// frames and is a fresh map with all `N` MTCDs contending.
pub fn estimate_message_delay(config: &SystemConfig, trials: u64, seed: u64) -> Result<TrialReport> {
    estimate_message_delay_with(config, trials, seed, &SimOptions::default())
}

pub fn estimate_message_delay_with(
    config: &SystemConfig,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<TrialReport> {
    check(config, trials)?;
    let units = (config.message_packets / config.frames) as u64;
    let n = config.mtcds as usize;
    let watched = match opts.estimator {
        Estimator::Pooled => n,
        Estimator::Tagged => 1,
    };
    let tally = run_blocks(trials, |lo, hi| {
        let mut w = Worker::new(config);
        let mut t = Tally::default();
        let mut delivered = vec![0u64; watched];
        for trial in lo..hi {
            let trial_seed = rng::derive_seed(seed, trial);
            delivered.iter_mut().for_each(|d| *d = 0);
            let mut pending = watched;
            let mut stf = 0u64;
            while pending > 0 {
                if stf == opts.stf_cap {
                    return Err(Error::Budget(format!(
                        "trial {trial} needed more than {} STFs; access probability too low",
                        opts.stf_cap
                    )));
                }
                stf += 1;
                w.sampler.fill(&mut w.map, rng::derive_seed(trial_seed, stf));
                let view = w.decoder.decode(&w.map);
                for (m, d) in delivered.iter_mut().enumerate() {
                    if *d == units {
                        continue;
                    }
                    t.samples += 1;
                    if view.recovered_at(m as u32) > 0 {
                        t.successes += 1;
                        *d += 1;
                        if *d == units {
                            pending -= 1;
                            let frames = (stf * config.frames as u64) as u128;
                            t.delay_samples += 1;
                            t.delay_sum += frames;
                            t.delay_sq_sum += frames * frames;
                        }
                    }
                }
            }
        }
        Ok(t)
    })?;
    Ok(TrialReport::from_tally(*config, trials, seed, opts.estimator, &tally))
}

/// Estimates every config independently; entry `i` equals a direct call
/// with seed `rng::derive_seed(seed, i)`.
pub fn sweep(configs: &[SystemConfig], trials: u64, seed: u64) -> Result<Vec<TrialReport>> {
    sweep_with(configs, trials, seed, &SimOptions::default())
}

pub fn sweep_with(configs: &[SystemConfig], trials: u64, seed: u64, opts: &SimOptions) -> Result<Vec<TrialReport>> {
    if configs.is_empty() {
        return param("sweep needs at least one config");
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| estimate_access_probability_with(c, trials, rng::derive_seed(seed, i as u64), opts))
        .collect()
}
