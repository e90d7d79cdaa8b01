//! Matrix-branching model of the access point.
//!
//! Each iteration holds a set of residual signal matrices. Interference
//! cancellation subtracts MAI signals (aggregates of known replicas) from
//! them, the CRC stage decodes every clean single-replica cell, the RS stage
//! turns decoded packets into retrieved ones, and the retrieved packets seed
//! the next iteration's MAI set. All work is tallied in
//! [`OperationCounters`].
//!
//! Matrices are stored as overlays on the received grid, so a branch that
//! touched three cells costs three entries rather than `QR`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::decoder::{DecodeOutcome, OperationCounters};
use crate::error::{param, Error, Result};
use crate::model::{AccessMap, IcMode, PacketReplica, Scheme, SystemConfig};

/// Default cap on matrices materialised during one run.
pub const DEFAULT_MATRIX_BUDGET: u64 = 1_000_000;

/// A superposition of known replicas from at most `β` MTCDs. The empty
/// signal leaves a matrix unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaiSignal {
    pub constituents: Vec<PacketReplica>,
}

impl MaiSignal {
    pub fn empty() -> Self {
        Self {
            constituents: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.constituents.is_empty()
    }
}

/// Difference between one cell of a matrix and the received grid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CellResidual {
    removed: Vec<PacketReplica>,
    corrupted: bool,
}

/// A residual grid over the received map.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ResidualMatrix {
    /// Cells not listed equal the received grid.
    Sparse(BTreeMap<u32, CellResidual>),
    /// Cells not listed are corrupted.
    CorruptExcept(BTreeMap<u32, CellResidual>),
}

impl ResidualMatrix {
    pub fn received() -> Self {
        ResidualMatrix::Sparse(BTreeMap::new())
    }

    fn overlay(&self) -> &BTreeMap<u32, CellResidual> {
        match self {
            ResidualMatrix::Sparse(o) | ResidualMatrix::CorruptExcept(o) => o,
        }
    }

    fn overlay_mut(&mut self) -> &mut BTreeMap<u32, CellResidual> {
        match self {
            ResidualMatrix::Sparse(o) | ResidualMatrix::CorruptExcept(o) => o,
        }
    }

    pub fn overlay_len(&self) -> usize {
        self.overlay().len()
    }

    /// Residual replicas of `cell`, or `None` if the cell is corrupted.
    pub fn residual(&self, map: &AccessMap, cell: usize) -> Option<Vec<PacketReplica>> {
        let diff = match (self, self.overlay().get(&(cell as u32))) {
            (_, Some(d)) => d,
            (ResidualMatrix::Sparse(_), None) => return Some(map.cell(cell).to_vec()),
            (ResidualMatrix::CorruptExcept(_), None) => return None,
        };
        if diff.corrupted {
            return None;
        }
        Some(
            map.cell(cell)
                .iter()
                .filter(|r| !diff.removed.contains(r))
                .copied()
                .collect(),
        )
    }

    fn holds(&self, map: &AccessMap, cell: usize, r: &PacketReplica) -> bool {
        if map.placement(r.mtcd, r.packet) != cell {
            return false;
        }
        match (self, self.overlay().get(&(cell as u32))) {
            (_, Some(d)) => !d.corrupted && !d.removed.contains(r),
            (ResidualMatrix::Sparse(_), None) => true,
            (ResidualMatrix::CorruptExcept(_), None) => false,
        }
    }

    fn remove(&mut self, cell: usize, r: PacketReplica) {
        let entry = self.overlay_mut().entry(cell as u32).or_default();
        entry.removed.push(r);
        entry.removed.sort_unstable();
    }
}

/// How a matrix came to exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Received,
    /// Input matrix passed through under the empty MAI signal.
    Carried,
    /// All MAI signals applied together (precise IC).
    Combined,
    Signal(MaiSignal),
}

/// One iteration's matrices.
#[derive(Clone, Debug)]
pub struct MatrixSet {
    pub matrices: Vec<ResidualMatrix>,
    pub provenance: Vec<Provenance>,
}

impl MatrixSet {
    pub fn received() -> Self {
        Self {
            matrices: vec![ResidualMatrix::received()],
            provenance: vec![Provenance::Received],
        }
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    fn is_fresh(&self, i: usize) -> bool {
        self.provenance[i] != Provenance::Carried
    }

    fn overlay_entries(&self) -> u64 {
        self.matrices.iter().map(|m| m.overlay_len() as u64).sum()
    }
}

/// Per-iteration sizes, for the cardinality bound
/// `|M(i)| <= |M(i-1)| * |x(i-1)|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: u32,
    pub matrices_in: u64,
    /// MAI signals applied, the empty one included.
    pub mai_signals: u64,
    pub matrices_before_dedup: u64,
    pub matrices_out: u64,
}

/// Result of [`run_generic_iic`].
#[derive(Clone, Debug)]
pub struct GenericRun {
    pub outcome: DecodeOutcome,
    pub iterations: Vec<IterationStats>,
}

/// Applies one round of interference cancellation.
pub fn ic_apply(
    map: &AccessMap,
    input: &MatrixSet,
    mai: &[MaiSignal],
    mode: IcMode,
    counters: &mut OperationCounters,
) -> Result<(MatrixSet, IterationStats)> {
    let cfg = map.config();
    let cells = cfg.cells() as u64;
    let mut stats = IterationStats {
        matrices_in: input.len() as u64,
        mai_signals: mai.len() as u64,
        ..Default::default()
    };
    let mut out = MatrixSet {
        matrices: Vec::new(),
        provenance: Vec::new(),
    };
    let mut seen: HashSet<ResidualMatrix> = HashSet::new();
    let mut push = |out: &mut MatrixSet, m: ResidualMatrix, p: Provenance, fresh: bool| {
        stats.matrices_before_dedup += 1;
        if seen.insert(m.clone()) {
            if fresh {
                counters.matrices_materialized += 1;
            }
            out.matrices.push(m);
            out.provenance.push(p);
        }
    };
    match mode {
        IcMode::None => return param("interference cancellation is disabled"),
        IcMode::Precise => {
            let mut by_cell: BTreeMap<usize, Vec<PacketReplica>> = BTreeMap::new();
            for r in mai.iter().flat_map(|s| &s.constituents) {
                by_cell.entry(map.placement(r.mtcd, r.packet)).or_default().push(*r);
            }
            for list in by_cell.values_mut() {
                list.sort_unstable();
                list.dedup();
            }
            for m in &input.matrices {
                let mut next = m.clone();
                let mut touched = false;
                for (&cell, list) in &by_cell {
                    counters.memory_reads += 1;
                    let present: Vec<PacketReplica> = list.iter().filter(|r| m.holds(map, cell, r)).copied().collect();
                    let width = present.iter().map(|r| r.mtcd).collect::<BTreeSet<_>>().len();
                    if present.is_empty() || width > cfg.mai_width as usize {
                        continue;
                    }
                    for r in present {
                        next.remove(cell, r);
                        counters.ic_subtractions += 1;
                    }
                    counters.memory_writes += 1;
                    touched = true;
                }
                if touched {
                    push(&mut out, next, Provenance::Combined, true);
                } else {
                    push(&mut out, next, Provenance::Carried, false);
                }
            }
        }
        IcMode::ContextAware | IcMode::Blind => {
            for m in &input.matrices {
                for signal in mai {
                    if signal.is_empty() {
                        push(&mut out, m.clone(), Provenance::Carried, false);
                        continue;
                    }
                    counters.memory_reads += cells;
                    let next = if mode == IcMode::ContextAware {
                        let mut next = m.clone();
                        let mut cells_written = BTreeSet::new();
                        for r in &signal.constituents {
                            let cell = map.placement(r.mtcd, r.packet);
                            if m.holds(map, cell, r) {
                                next.remove(cell, *r);
                                counters.ic_subtractions += 1;
                                cells_written.insert(cell);
                            }
                        }
                        counters.memory_writes += cells_written.len() as u64;
                        next
                    } else {
                        counters.ic_subtractions += cells * signal.constituents.len() as u64;
                        counters.memory_writes += cells;
                        blind_subtract(map, m, signal)
                    };
                    push(&mut out, next, Provenance::Signal(signal.clone()), true);
                }
            }
        }
    }
    stats.matrices_out = out.len() as u64;
    Ok((out, stats))
}

/// Unconditional subtraction from every cell: only a cell holding every
/// constituent stays clean.
fn blind_subtract(map: &AccessMap, m: &ResidualMatrix, signal: &MaiSignal) -> ResidualMatrix {
    let first = signal.constituents[0];
    let cell = map.placement(first.mtcd, first.packet);
    let mut overlay = BTreeMap::new();
    if signal.constituents.iter().all(|r| m.holds(map, cell, r)) {
        let mut diff = m.overlay().get(&(cell as u32)).cloned().unwrap_or_default();
        diff.removed.extend(signal.constituents.iter().copied());
        diff.removed.sort_unstable();
        overlay.insert(cell as u32, diff);
    }
    ResidualMatrix::CorruptExcept(overlay)
}

/// CRC stage over the matrices produced this iteration: every clean cell
/// whose residual is a single replica yields that replica.
pub fn dec_crc(map: &AccessMap, set: &MatrixSet, counters: &mut OperationCounters) -> BTreeSet<PacketReplica> {
    let cells = map.config().cells();
    let mut decoded = BTreeSet::new();
    for (i, m) in set.matrices.iter().enumerate() {
        if !set.is_fresh(i) {
            continue;
        }
        counters.decode_attempts += cells as u64;
        counters.memory_reads += cells as u64;
        for (&cell, diff) in m.overlay() {
            if diff.corrupted {
                continue;
            }
            if let Some(res) = m.residual(map, cell as usize) {
                if let [only] = res.as_slice() {
                    decoded.insert(*only);
                }
            }
        }
        if let ResidualMatrix::Sparse(overlay) = m {
            for cell in map.exclusive_cells() {
                if !overlay.contains_key(&(cell as u32)) {
                    decoded.insert(map.cell(cell)[0]);
                }
            }
        }
    }
    decoded
}

/// Packets implied by the decoded set but not in it: the rest of every
/// codeword with at least `Q` decoded packets (RS), or the sibling copies of
/// every decoded packet (NoRS).
pub fn rs_recover(decoded: &BTreeSet<PacketReplica>, config: &SystemConfig) -> BTreeSet<PacketReplica> {
    let q = config.frames;
    let qk = config.packets_per_mtcd() as u32;
    let mut out = BTreeSet::new();
    match config.scheme {
        Scheme::Rs => {
            let mut per: BTreeMap<u32, u32> = BTreeMap::new();
            for r in decoded {
                *per.entry(r.mtcd).or_default() += 1;
            }
            for (&mtcd, &count) in &per {
                if count >= q {
                    out.extend(
                        (0..qk)
                            .map(|p| PacketReplica::new(mtcd, p))
                            .filter(|r| !decoded.contains(r)),
                    );
                }
            }
        }
        Scheme::NoRs => {
            for r in decoded {
                let id = r.packet_id(q);
                out.extend(
                    (0..config.repetition)
                        .map(|c| PacketReplica::new(r.mtcd, c * q + id))
                        .filter(|s| !decoded.contains(s)),
                );
            }
        }
    }
    out
}

/// The empty signal, then every aggregate of one replica from each of
/// `1..=beta` distinct MTCDs in the retrieved set.
pub fn mai_generate(
    retrieved: &BTreeSet<PacketReplica>,
    beta: u32,
    counters: &mut OperationCounters,
    budget: u64,
) -> Result<Vec<MaiSignal>> {
    if beta == 0 {
        return param("beta must be at least 1");
    }
    let mut by_mtcd: BTreeMap<u32, Vec<PacketReplica>> = BTreeMap::new();
    for r in retrieved {
        by_mtcd.entry(r.mtcd).or_default().push(*r);
    }
    let groups: Vec<Vec<PacketReplica>> = by_mtcd.into_values().collect();
    // elementary symmetric sums of group sizes give the signal count
    let mut count = vec![0u128; beta as usize + 1];
    count[0] = 1;
    for g in &groups {
        for j in (1..=beta as usize).rev() {
            count[j] += count[j - 1] * g.len() as u128;
        }
    }
    let total: u128 = count[1..].iter().sum();
    if total > budget as u128 {
        return Err(Error::Budget(format!(
            "{total} MAI signals exceed the budget of {budget}"
        )));
    }
    let mut out = vec![MaiSignal::empty()];
    let mut stack = Vec::new();
    fn walk(
        groups: &[Vec<PacketReplica>],
        from: usize,
        left: u32,
        stack: &mut Vec<PacketReplica>,
        out: &mut Vec<MaiSignal>,
    ) {
        for g in from..groups.len() {
            for r in &groups[g] {
                stack.push(*r);
                out.push(MaiSignal {
                    constituents: stack.clone(),
                });
                if left > 1 {
                    walk(groups, g + 1, left - 1, stack, out);
                }
                stack.pop();
            }
        }
    }
    walk(&groups, 0, beta, &mut stack, &mut out);
    counters.mai_signals_generated += total as u64;
    Ok(out)
}

/// Runs the branching model to termination.
pub fn run_generic_iic(map: &AccessMap) -> Result<GenericRun> {
    run_generic_iic_with_budget(map, DEFAULT_MATRIX_BUDGET)
}

pub fn run_generic_iic_with_budget(map: &AccessMap, budget: u64) -> Result<GenericRun> {
    let cfg = *map.config();
    if cfg.ic == IcMode::None {
        return param("the generic model needs an interference cancellation mode");
    }
    let n = cfg.mtcds as usize;
    let cells = cfg.cells() as u64;
    let mut counters = OperationCounters {
        memory_writes: cells,
        matrices_materialized: 1,
        peak_buffered_signals: cells,
        ..Default::default()
    };
    let mut recovered_at: Vec<Option<u32>> = vec![None; n];
    let mut exclusive = vec![0u32; n];
    for c in map.exclusive_cells() {
        exclusive[map.cell(c)[0].mtcd as usize] += 1;
    }

    let mut matrices = MatrixSet::received();
    let mut decoded: BTreeSet<PacketReplica> = BTreeSet::new();
    let mut retrieved: BTreeSet<PacketReplica> = BTreeSet::new();
    let mut iterations = Vec::new();
    let mut iteration = 1;
    let mut fresh_decodes = dec_crc(map, &matrices, &mut counters);
    loop {
        decoded.extend(fresh_decodes.iter().copied());
        update_recovery(&cfg, &decoded, &mut recovered_at, iteration);
        let implied = rs_recover(&decoded, &cfg);
        let new_retrieved: BTreeSet<PacketReplica> = implied.difference(&retrieved).copied().collect();
        retrieved.extend(new_retrieved.iter().copied());

        let all_done = recovered_at.iter().all(|r| r.is_some());
        if iteration >= cfg.iterations || all_done || new_retrieved.is_empty() {
            break;
        }
        let remaining = budget.saturating_sub(counters.matrices_materialized);
        let mai = mai_generate(&new_retrieved, cfg.mai_width, &mut counters, remaining)?;
        iteration += 1;
        let projected = matrices.len() as u64 * (mai.len() as u64 - 1);
        if cfg.ic != IcMode::Precise && projected > remaining {
            return Err(Error::Budget(format!(
                "iteration {iteration} would materialise {projected} matrices; budget left {remaining}"
            )));
        }
        counters.peak_buffered_signals = counters
            .peak_buffered_signals
            .max(cells + mai.len() as u64 - 1 + matrices.overlay_entries());
        let (next, mut stats) = ic_apply(map, &matrices, &mai, cfg.ic, &mut counters)?;
        if counters.matrices_materialized > budget {
            return Err(Error::Budget(format!(
                "{} matrices materialised, budget {budget}",
                counters.matrices_materialized
            )));
        }
        stats.iteration = iteration;
        iterations.push(stats);
        matrices = next;
        counters.peak_buffered_signals = counters
            .peak_buffered_signals
            .max(cells + mai.len() as u64 - 1 + matrices.overlay_entries());
        fresh_decodes = dec_crc(map, &matrices, &mut counters);
        fresh_decodes.retain(|r| !decoded.contains(r));
    }

    let outcome = DecodeOutcome {
        recovered: recovered_at.iter().map(Option::is_some).collect(),
        recovery_iteration: recovered_at,
        exclusive_rb_count_iter1: exclusive,
        iterations_run: iteration,
        counters,
    };
    Ok(GenericRun { outcome, iterations })
}

fn update_recovery(
    cfg: &SystemConfig,
    decoded: &BTreeSet<PacketReplica>,
    recovered_at: &mut [Option<u32>],
    iteration: u32,
) {
    let mut ids: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for r in decoded {
        let key = match cfg.scheme {
            Scheme::Rs => r.packet,
            Scheme::NoRs => r.packet_id(cfg.frames),
        };
        ids.entry(r.mtcd).or_default().insert(key);
    }
    for (mtcd, set) in ids {
        let slot = &mut recovered_at[mtcd as usize];
        if slot.is_none() && set.len() as u32 >= cfg.frames {
            *slot = Some(iteration);
        }
    }
}

/// A map where MTCDs `1..N` each own `Q` exclusive cells and MTCD 0 has no
/// exclusive cell, each of its packets sharing a cell with one collided
/// replica of another MTCD. The remaining collided replicas are paired
/// across distinct MTCDs. Needs `(K-1)(N-1) >= K` and enough cells.
pub fn exclusive_fixture(config: &SystemConfig) -> Result<AccessMap> {
    let q = config.frames as usize;
    let k = config.repetition as usize;
    let n = config.mtcds as usize;
    let qk = q * k;
    if n < 3 || k < 2 || (k - 1) * (n - 1) < k {
        return param("fixture needs K >= 2, N >= 3 and (K-1)(N-1) >= K");
    }
    let collided_per = q * (k - 1);
    let spare = collided_per * (n - 1) - qk;
    let needed = (n - 1) * q + qk + spare / 2;
    if needed > config.cells() {
        return param(format!("fixture needs {needed} cells, grid has {}", config.cells()));
    }
    let mut placements = vec![0u32; n * qk];
    let mut next_cell = 0u32;
    for m in 1..n {
        for p in 0..q {
            placements[m * qk + p] = next_cell;
            next_cell += 1;
        }
    }
    let mut collided = Vec::with_capacity(collided_per * (n - 1));
    for j in 0..collided_per {
        for m in 1..n {
            collided.push(m * qk + q + j);
        }
    }
    let mut target_cells = Vec::with_capacity(qk);
    for p in 0..qk {
        placements[p] = next_cell;
        placements[collided[p]] = next_cell;
        target_cells.push(next_cell);
        next_cell += 1;
    }
    let rest = &collided[qk..];
    for pair in rest.chunks(2) {
        if let [a, b] = pair {
            placements[*a] = next_cell;
            placements[*b] = next_cell;
            next_cell += 1;
        } else {
            placements[pair[0]] = *target_cells.last().expect("QK >= 1");
        }
    }
    AccessMap::from_placements(*config, placements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::decode_stf;

    fn set(items: &[(u32, u32)]) -> BTreeSet<PacketReplica> {
        items.iter().map(|&(m, p)| PacketReplica::new(m, p)).collect()
    }

    #[test]
    fn empty_signal_is_identity() {
        let map = AccessMap::from_placements(SystemConfig::new(3, 2, 1, 1), vec![0, 0]).unwrap();
        let mut c = OperationCounters::default();
        for mode in [IcMode::Precise, IcMode::ContextAware, IcMode::Blind] {
            let (out, _) = ic_apply(&map, &MatrixSet::received(), &[MaiSignal::empty()], mode, &mut c).unwrap();
            assert_eq!(out.matrices, vec![ResidualMatrix::received()]);
        }
        assert_eq!(c.matrices_materialized, 0);
    }

    #[test]
    fn precise_subtracts_where_present() {
        let cfg = SystemConfig::new(3, 2, 1, 1);
        let map = AccessMap::from_placements(cfg, vec![0, 0]).unwrap();
        let mut c = OperationCounters::default();
        let mai = [
            MaiSignal::empty(),
            MaiSignal {
                constituents: vec![PacketReplica::new(1, 0)],
            },
        ];
        let (out, _) = ic_apply(&map, &MatrixSet::received(), &mai, IcMode::Precise, &mut c).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.matrices[0].residual(&map, 0), Some(vec![PacketReplica::new(0, 0)]));
        assert_eq!(out.matrices[0].residual(&map, 1), Some(vec![]));
        assert_eq!(c.ic_subtractions, 1);
    }

    #[test]
    fn blind_branches_per_signal() {
        let cfg = SystemConfig::new(4, 4, 1, 1);
        let map = AccessMap::from_placements(cfg, vec![0, 0, 1, 2]).unwrap();
        let mut c = OperationCounters::default();
        let mai: Vec<MaiSignal> = (1..4)
            .map(|m| MaiSignal {
                constituents: vec![PacketReplica::new(m, 0)],
            })
            .collect();
        let (out, stats) = ic_apply(&map, &MatrixSet::received(), &mai, IcMode::Blind, &mut c).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(stats.matrices_before_dedup, 3);
        assert_eq!(c.ic_subtractions, 12);
    }

    #[test]
    fn crc_rejects_corrupted_cells() {
        // blind subtraction of MTCD 1 leaves cell 2 (only MTCD 2) corrupted
        let cfg = SystemConfig::new(3, 3, 1, 1);
        let map = AccessMap::from_placements(cfg, vec![0, 0, 2]).unwrap();
        let mut c = OperationCounters::default();
        let mai = [MaiSignal {
            constituents: vec![PacketReplica::new(1, 0)],
        }];
        let (out, _) = ic_apply(&map, &MatrixSet::received(), &mai, IcMode::Blind, &mut c).unwrap();
        assert_eq!(out.matrices[0].residual(&map, 2), None);
        let decoded = dec_crc(&map, &out, &mut c);
        assert_eq!(decoded, set(&[(0, 0)]));
    }

    #[test]
    fn crc_on_received_grid() {
        let cfg = SystemConfig::new(4, 3, 1, 1);
        let map = AccessMap::from_placements(cfg, vec![0, 0, 3]).unwrap();
        let mut c = OperationCounters::default();
        assert_eq!(dec_crc(&map, &MatrixSet::received(), &mut c), set(&[(2, 0)]));
        assert_eq!(c.decode_attempts, 4);
        let empty = AccessMap::from_placements(SystemConfig::new(4, 0, 1, 1), vec![]).unwrap();
        assert!(dec_crc(&empty, &MatrixSet::received(), &mut c).is_empty());
    }

    #[test]
    fn recover_threshold() {
        let cfg = SystemConfig::new(10, 2, 2, 2);
        assert_eq!(rs_recover(&set(&[(0, 0), (0, 3)]), &cfg), set(&[(0, 1), (0, 2)]));
        assert!(rs_recover(&set(&[(0, 0), (1, 3)]), &cfg).is_empty());
        let nors = cfg.with_scheme(Scheme::NoRs);
        assert_eq!(rs_recover(&set(&[(1, 3)]), &nors), set(&[(1, 1)]));
    }

    #[test]
    fn mai_counts() {
        let mut c = OperationCounters::default();
        assert_eq!(
            mai_generate(&BTreeSet::new(), 1, &mut c, 10).unwrap(),
            vec![MaiSignal::empty()]
        );
        let five = set(&[(0, 0), (0, 1), (1, 0), (2, 0), (2, 1)]);
        assert_eq!(mai_generate(&five, 1, &mut c, 10).unwrap().len(), 6);
        // pairs from distinct MTCDs: 2*1 + 2*2 + 1*2 = 8
        assert_eq!(mai_generate(&five, 2, &mut c, 100).unwrap().len(), 1 + 5 + 8);
        assert_eq!(c.mai_signals_generated, 5 + 13);
        assert!(matches!(mai_generate(&five, 2, &mut c, 12), Err(Error::Budget(_))));
    }

    #[test]
    fn single_iteration_materialises_once() {
        let cfg = SystemConfig::new(12, 6, 2, 2).with_iic(1, 1);
        let map = crate::model::generate_access_map(&cfg, 4).unwrap();
        let run = run_generic_iic(&map).unwrap();
        assert_eq!(run.outcome.counters.matrices_materialized, 1);
        assert_eq!(run.outcome.recovered, decode_stf(&map).recovered);
    }

    #[test]
    fn fixture_recovers_everyone() {
        for mode in [IcMode::Precise, IcMode::ContextAware, IcMode::Blind] {
            let cfg = SystemConfig::new(40, 6, 2, 2).with_ic(mode);
            let map = exclusive_fixture(&cfg).unwrap();
            let oracle = decode_stf(&map);
            assert_eq!(oracle.recovery_iteration[0], Some(2));
            let run = run_generic_iic(&map).unwrap();
            assert!(run.outcome.recovered.iter().all(|&r| r), "{mode:?}");
            assert_eq!(run.outcome.counters.mai_signals_generated, 2 * 5);
        }
    }

    #[test]
    fn ic_none_rejected() {
        let cfg = SystemConfig::new(3, 1, 1, 1).with_ic(IcMode::None);
        let map = crate::model::generate_access_map(&cfg, 0).unwrap();
        assert!(run_generic_iic(&map).is_err());
    }
}
