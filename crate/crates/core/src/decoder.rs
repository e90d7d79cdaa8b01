//! Set-level oracle for iterative interference cancellation.
//!
//! A cell is decodable when its residual content is a single replica.
//! Iteration 1 decodes the cells that are exclusive from the start. Later
//! iterations cancel replicas already known at the access point: a replica
//! is known once it was decoded or once its MTCD's data unit was recovered
//! (RS), or once a sibling copy of the same packet was decoded (NoRS).
//! A cell yields its one unknown replica if at most `β` known replicas sit
//! next to it. Every decision inside an iteration uses the knowledge as it
//! stood at the end of the previous one, so cell order does not matter.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::model::{AccessMap, IcMode, PacketReplica, Scheme, SystemConfig};

/// Work done by a decoder run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCounters {
    pub memory_writes: u64,
    pub memory_reads: u64,
    pub ic_subtractions: u64,
    pub decode_attempts: u64,
    pub matrices_materialized: u64,
    pub mai_signals_generated: u64,
    pub peak_buffered_signals: u64,
}

impl OperationCounters {
    pub fn merge(&mut self, other: &OperationCounters) {
        self.memory_writes += other.memory_writes;
        self.memory_reads += other.memory_reads;
        self.ic_subtractions += other.ic_subtractions;
        self.decode_attempts += other.decode_attempts;
        self.matrices_materialized += other.matrices_materialized;
        self.mai_signals_generated += other.mai_signals_generated;
        self.peak_buffered_signals = self.peak_buffered_signals.max(other.peak_buffered_signals);
    }
}

/// Per-MTCD verdicts of one STF decode. MTCD ids are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub recovered: Vec<bool>,
    pub recovery_iteration: Vec<Option<u32>>,
    pub exclusive_rb_count_iter1: Vec<u32>,
    pub iterations_run: u32,
    pub counters: OperationCounters,
}

impl DecodeOutcome {
    pub fn recovered_count(&self) -> usize {
        self.recovered.iter().filter(|&&r| r).count()
    }

    pub fn recovered_set(&self) -> Vec<u32> {
        (0..self.recovered.len() as u32)
            .filter(|&m| self.recovered[m as usize])
            .collect()
    }
}

/// Full knowledge at the end of a decode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeState {
    /// Per MTCD, packet indices decoded from a clean cell.
    pub decoded_packets: Vec<Vec<u32>>,
    pub recovered_mtcds: Vec<u32>,
    /// `(cell, mtcd)` pairs whose replica was cancelled to free a cell.
    pub cancelled: Vec<(u32, u32)>,
    pub iteration: u32,
}

/// Erasure threshold: at least `Q` of the `QK` codeword packets.
pub fn rs_recoverable(decoded_count: u32, config: &SystemConfig) -> bool {
    decoded_count >= config.frames
}

/// Whether `mtcd` (0-based) delivered its data unit.
pub fn du_success(outcome: &DecodeOutcome, mtcd: u32) -> Result<bool> {
    match outcome.recovered.get(mtcd as usize) {
        Some(&r) => Ok(r),
        None => param(format!("MTCD {mtcd} unknown; map has {}", outcome.recovered.len())),
    }
}

/// Decodes one STF with the map's own configuration.
pub fn decode_stf(map: &AccessMap) -> DecodeOutcome {
    Decoder::new().decode(map).outcome()
}

/// Decodes and also returns the final [`DecodeState`].
pub fn decode_with_state(map: &AccessMap) -> (DecodeOutcome, DecodeState) {
    let mut dec = Decoder::new();
    dec.trace = Some(Vec::new());
    let view = dec.decode(map);
    let outcome = view.outcome();
    let qk = map.config().packets_per_mtcd();
    let n = map.config().mtcds as usize;
    let mut decoded_packets = vec![Vec::new(); n];
    for slot in 0..n * qk {
        if dec.decoded[slot] {
            decoded_packets[slot / qk].push((slot % qk) as u32);
        }
    }
    let state = DecodeState {
        decoded_packets,
        recovered_mtcds: outcome.recovered_set(),
        cancelled: dec.trace.take().unwrap_or_default(),
        iteration: outcome.iterations_run,
    };
    (outcome, state)
}

/// Reusable decoder; keeps its buffers between maps.
#[derive(Debug, Default)]
pub struct Decoder {
    known: Vec<bool>,
    decoded: Vec<bool>,
    decoded_count: Vec<u32>,
    ids_known: Vec<u32>,
    recovered_at: Vec<u32>,
    exclusive: Vec<u32>,
    fresh: Vec<u32>,
    pending: Vec<PacketReplica>,
    cell_mark: Vec<u32>,
    mark: u32,
    iterations_run: u32,
    attempts: u64,
    trace: Option<Vec<(u32, u32)>>,
}

/// Borrowed result of [`Decoder::decode`].
pub struct DecodeView<'a> {
    dec: &'a Decoder,
    map: &'a AccessMap,
}

impl DecodeView<'_> {
    /// Recovery iteration of `mtcd`, or 0 when not recovered.
    pub fn recovered_at(&self, mtcd: u32) -> u32 {
        self.dec.recovered_at[mtcd as usize]
    }

    pub fn recovered_count(&self) -> usize {
        self.dec.recovered_at.iter().filter(|&&i| i > 0).count()
    }

    pub fn outcome(&self) -> DecodeOutcome {
        let cfg = self.map.config();
        DecodeOutcome {
            recovered: self.dec.recovered_at.iter().map(|&i| i > 0).collect(),
            recovery_iteration: self.dec.recovered_at.iter().map(|&i| (i > 0).then_some(i)).collect(),
            exclusive_rb_count_iter1: self.dec.exclusive.clone(),
            iterations_run: self.dec.iterations_run,
            counters: OperationCounters {
                memory_writes: cfg.cells() as u64,
                memory_reads: self.dec.attempts,
                decode_attempts: self.dec.attempts,
                matrices_materialized: 1,
                peak_buffered_signals: cfg.cells() as u64,
                ..Default::default()
            },
        }
    }
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, cfg: &SystemConfig) {
        let n = cfg.mtcds as usize;
        let slots = n * cfg.packets_per_mtcd();
        for v in [&mut self.known, &mut self.decoded] {
            v.clear();
            v.resize(slots, false);
        }
        for v in [
            &mut self.decoded_count,
            &mut self.ids_known,
            &mut self.recovered_at,
            &mut self.exclusive,
        ] {
            v.clear();
            v.resize(n, 0);
        }
        if self.cell_mark.len() != cfg.cells() {
            self.cell_mark = vec![0; cfg.cells()];
            self.mark = 0;
        }
        self.fresh.clear();
        self.pending.clear();
        self.iterations_run = 0;
        self.attempts = 0;
        if let Some(t) = self.trace.as_mut() {
            t.clear();
        }
    }

    fn learn(&mut self, map: &AccessMap, r: PacketReplica) {
        let slot = map.slot(r.mtcd, r.packet);
        if !self.known[slot] {
            self.known[slot] = true;
            self.fresh.push(slot as u32);
        }
    }

    /// Applies a clean-cell decode and the scheme's recovery rule.
    fn accept(&mut self, map: &AccessMap, r: PacketReplica, iteration: u32) {
        let cfg = *map.config();
        let slot = map.slot(r.mtcd, r.packet);
        if self.decoded[slot] {
            return;
        }
        self.decoded[slot] = true;
        self.decoded_count[r.mtcd as usize] += 1;
        let m = r.mtcd as usize;
        match cfg.scheme {
            Scheme::Rs => {
                self.learn(map, r);
                if self.recovered_at[m] == 0 && rs_recoverable(self.decoded_count[m], &cfg) {
                    self.recovered_at[m] = iteration;
                    for p in 0..cfg.packets_per_mtcd() as u32 {
                        self.learn(map, PacketReplica::new(r.mtcd, p));
                    }
                }
            }
            Scheme::NoRs => {
                let id = r.packet_id(cfg.frames);
                if self.known[slot] {
                    // a sibling copy was already decoded
                    return;
                }
                self.ids_known[m] += 1;
                for copy in 0..cfg.repetition {
                    self.learn(map, PacketReplica::new(r.mtcd, copy * cfg.frames + id));
                }
                if self.recovered_at[m] == 0 && self.ids_known[m] == cfg.frames {
                    self.recovered_at[m] = iteration;
                }
            }
        }
    }

    /// Runs the oracle on `map`.
    pub fn decode<'a>(&'a mut self, map: &'a AccessMap) -> DecodeView<'a> {
        let cfg = *map.config();
        self.reset(&cfg);
        let n = cfg.mtcds as usize;
        let max_iter = if cfg.ic == IcMode::None { 1 } else { cfg.iterations };
        let beta = cfg.mai_width as usize;

        self.iterations_run = 1;
        for cell in 0..map.cell_count() {
            self.attempts += 1;
            if let [only] = map.cell(cell) {
                self.exclusive[only.mtcd as usize] += 1;
                self.pending.push(*only);
            }
        }
        let mut pending = std::mem::take(&mut self.pending);
        for r in pending.drain(..) {
            self.accept(map, r, 1);
        }

        let mut iteration = 1;
        while iteration < max_iter {
            if self.recovered_at.iter().all(|&i| i > 0) || self.fresh.is_empty() {
                break;
            }
            iteration += 1;
            self.iterations_run = iteration;
            self.mark = self.mark.wrapping_add(1);
            if self.mark == 0 {
                self.cell_mark.iter_mut().for_each(|m| *m = 0);
                self.mark = 1;
            }
            let fresh = std::mem::take(&mut self.fresh);
            for &slot in &fresh {
                let cell = map.placements()[slot as usize] as usize;
                if self.cell_mark[cell] == self.mark {
                    continue;
                }
                self.cell_mark[cell] = self.mark;
                self.attempts += 1;
                let entries = map.cell(cell);
                let mut unknown = None;
                let mut unknown_count = 0;
                for r in entries {
                    if !self.known[map.slot(r.mtcd, r.packet)] {
                        unknown_count += 1;
                        unknown = Some(*r);
                    }
                }
                let known = entries.len() - unknown_count;
                if unknown_count == 1 && known <= beta {
                    let target = unknown.expect("one unknown replica");
                    pending.push(target);
                    if let Some(t) = self.trace.as_mut() {
                        for r in entries.iter().filter(|r| r.mtcd != target.mtcd) {
                            t.push((cell as u32, r.mtcd));
                        }
                    }
                }
            }
            self.fresh = fresh;
            self.fresh.clear();
            for r in pending.drain(..) {
                self.accept(map, r, iteration);
            }
        }
        self.pending = pending;
        debug_assert_eq!(self.recovered_at.len(), n);
        DecodeView { dec: self, map }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemConfig;

    fn map_of(config: SystemConfig, placements: &[u32]) -> AccessMap {
        AccessMap::from_placements(config, placements.to_vec()).unwrap()
    }

    #[test]
    fn threshold_rule() {
        let c = SystemConfig::new(10, 3, 2, 2);
        assert!(rs_recoverable(2, &c));
        assert!(!rs_recoverable(1, &c));
        assert!(rs_recoverable(4, &c));
    }

    #[test]
    fn disjoint_users_recover_at_once() {
        let c = SystemConfig::new(8, 4, 1, 2).with_iic(1, 1);
        let map = map_of(c, &[0, 1, 2, 3, 4, 5, 6, 7]);
        let out = decode_stf(&map);
        assert!(out.recovered.iter().all(|&r| r));
        assert!(out.recovery_iteration.iter().all(|&i| i == Some(1)));
        assert_eq!(out.exclusive_rb_count_iter1, vec![2; 4]);
    }

    #[test]
    fn single_user_always_succeeds() {
        let c = SystemConfig::new(3, 1, 2, 1);
        let out = decode_stf(&map_of(c, &[2, 0]));
        assert!(du_success(&out, 0).unwrap());
        assert!(du_success(&out, 1).is_err());
    }

    #[test]
    fn two_users_three_rbs_enumeration() {
        // every map with R=3, Q=K=1, N=2: MTCD 0 succeeds iff it is alone
        let c = SystemConfig::new(3, 2, 1, 1);
        let mut wins = 0;
        for a in 0..3 {
            for b in 0..3 {
                if decode_stf(&map_of(c, &[a, b])).recovered[0] {
                    wins += 1;
                }
            }
        }
        assert_eq!(wins, 6);
    }

    #[test]
    fn beta_limits_cancellation() {
        // Q=1, K=2: MTCD 0 shares cell 0 with two MTCDs and cell 4 with two more
        let c = SystemConfig::new(6, 5, 2, 1);
        let placements = [0, 4, 0, 1, 0, 2, 4, 3, 4, 5];
        let out = decode_stf(&map_of(c, &placements));
        assert_eq!(out.recovered, vec![false, true, true, true, true]);
        let out = decode_stf(&map_of(c.with_iic(2, 2), &placements));
        assert_eq!(out.recovery_iteration[0], Some(2));
    }

    #[test]
    fn nors_siblings_cancel() {
        // Q=1, K=2: MTCD 0 at cells {0,1}, MTCD 1 at {1,2}, MTCD 2 at {2,3}
        let c = SystemConfig::new(4, 3, 2, 1).with_scheme(Scheme::NoRs).with_iic(3, 1);
        let out = decode_stf(&map_of(c, &[0, 1, 1, 2, 2, 3]));
        assert_eq!(out.recovery_iteration, vec![Some(1), Some(2), Some(1)]);
    }

    #[test]
    fn ic_none_runs_one_iteration() {
        let c = SystemConfig::new(3, 2, 2, 1).with_ic(IcMode::None);
        // MTCD 0 at {0,1}, MTCD 1 at {1,2}: RS with Q=1 recovers both at once
        let out = decode_stf(&map_of(c, &[0, 1, 1, 2]));
        assert_eq!(out.iterations_run, 1);
        assert_eq!(out.recovered_count(), 2);
    }

    #[test]
    fn state_records_cancellations() {
        let c = SystemConfig::new(4, 2, 2, 1).with_scheme(Scheme::NoRs);
        // MTCD 1 collides with MTCD 0 in cell 1; MTCD 0 decodes via cell 0
        let (out, state) = decode_with_state(&map_of(c, &[0, 1, 1, 2]));
        assert_eq!(out.recovered, vec![true, true]);
        assert_eq!(state.decoded_packets[0], vec![0]);
        assert_eq!(state.recovered_mtcds, vec![0, 1]);
        assert!(state.cancelled.is_empty());
        let c = SystemConfig::new(4, 3, 2, 1).with_scheme(Scheme::NoRs);
        let (_, state) = decode_with_state(&map_of(c, &[0, 1, 1, 2, 2, 3]));
        assert_eq!(state.cancelled, vec![(1, 0), (2, 2)]);
        assert_eq!(state.iteration, 2);
    }
}
