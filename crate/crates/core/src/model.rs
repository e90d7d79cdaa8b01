//! System configuration, packet replicas and super-time-frame access maps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng;

/// Packet protection across the STF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// `(QK, Q)` erasure code: any `Q` received packets recover the data unit.
    #[serde(rename = "RS")]
    Rs,
    /// Plain repetition: every one of the `Q` packets needs a received copy.
    #[serde(rename = "NoRS")]
    NoRs,
}

/// Interference cancellation flavour used by the access point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IcMode {
    None,
    Precise,
    ContextAware,
    Blind,
}

/// How an MTCD chooses its resource blocks within an STF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selection {
    /// `QK` distinct cells drawn uniformly from all `QR` cells.
    #[serde(rename = "UniformSTF")]
    UniformStf,
    /// `K` distinct RBs drawn independently in each of the `Q` frames.
    PerFrame,
}

macro_rules! text_enum {
    ($ty:ty, $($variant:path => $text:literal),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $(if s.eq_ignore_ascii_case($text) { return Ok($variant); })+
                param(format!("unrecognised {} '{s}'", stringify!($ty)))
            }
        }
    };
}

text_enum!(Scheme, Scheme::Rs => "RS", Scheme::NoRs => "NoRS");
text_enum!(
    IcMode,
    IcMode::None => "None",
    IcMode::Precise => "Precise",
    IcMode::ContextAware => "ContextAware",
    IcMode::Blind => "Blind",
);
text_enum!(Selection, Selection::UniformStf => "UniformSTF", Selection::PerFrame => "PerFrame");

/// Protocol and experiment parameters.
///
/// Field names follow their roles: `rbs` is R, `mtcds` is N, `repetition` is
/// K, `frames` is Q, `iterations` is α, `mai_width` is β and
/// `message_packets` is M. The user intensity `N/R` is always derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub rbs: u32,
    pub mtcds: u32,
    pub repetition: u32,
    pub frames: u32,
    pub iterations: u32,
    pub mai_width: u32,
    pub message_packets: u32,
    pub scheme: Scheme,
    pub ic: IcMode,
    pub selection: Selection,
}

impl SystemConfig {
    /// RS scheme, precise IC, two iterations, single-MTCD MAI, uniform
    /// selection, and a one-data-unit message.
    pub fn new(rbs: u32, mtcds: u32, repetition: u32, frames: u32) -> Self {
        Self {
            rbs,
            mtcds,
            repetition,
            frames,
            iterations: 2,
            mai_width: 1,
            message_packets: frames,
            scheme: Scheme::Rs,
            ic: IcMode::Precise,
            selection: Selection::UniformStf,
        }
    }

    pub fn with_iic(mut self, iterations: u32, mai_width: u32) -> Self {
        self.iterations = iterations;
        self.mai_width = mai_width;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_ic(mut self, ic: IcMode) -> Self {
        self.ic = ic;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_message(mut self, packets: u32) -> Self {
        self.message_packets = packets;
        self
    }

    /// Number of cells in the STF grid, `QR`.
    pub fn cells(&self) -> usize {
        self.frames as usize * self.rbs as usize
    }

    /// Codeword length per MTCD, `QK`.
    pub fn packets_per_mtcd(&self) -> usize {
        self.frames as usize * self.repetition as usize
    }

    pub fn gamma(&self) -> f64 {
        derive_gamma(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rbs == 0 || self.repetition == 0 || self.frames == 0 {
            return param("R, K and Q must be positive");
        }
        if self.iterations == 0 || self.mai_width == 0 {
            return param("alpha and beta must be positive");
        }
        if self.message_packets == 0 || !self.message_packets.is_multiple_of(self.frames) {
            return param(format!(
                "message size {} is not a positive multiple of Q={}",
                self.message_packets, self.frames
            ));
        }
        if self.repetition > self.rbs {
            // QK <= QR and, per frame, K <= R
            return param(format!(
                "K={} exceeds R={}: an MTCD cannot pick distinct RBs",
                self.repetition, self.rbs
            ));
        }
        let slots = self.mtcds as u64 * self.packets_per_mtcd() as u64;
        if slots > u32::MAX as u64 || self.cells() > u32::MAX as usize {
            return param("system too large for 32-bit replica indexing");
        }
        Ok(())
    }
}

/// User intensity `N/R`.
pub fn derive_gamma(config: &SystemConfig) -> f64 {
    config.mtcds as f64 / config.rbs as f64
}

/// RBs per frame for a target intensity: `floor(N/γ)`, guarded against
/// representation error so that e.g. `N=100, γ=0.1` gives exactly 1000.
pub fn rbs_for_gamma(mtcds: u32, gamma: f64) -> Result<u32> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return param(format!("gamma must be positive, got {gamma}"));
    }
    let r = (mtcds as f64 / gamma + 1e-9).floor();
    if r < 1.0 || r > u32::MAX as f64 {
        return param(format!("N={mtcds}, gamma={gamma} gives no valid R"));
    }
    Ok(r as u32)
}

/// One transmitted copy: codeword index `packet` (0-based, `< QK`) of MTCD
/// `mtcd` (0-based).
///
/// Under the NoRS scheme the index encodes `(packet_id, copy)` as
/// `copy * Q + packet_id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketReplica {
    pub mtcd: u32,
    pub packet: u32,
}

impl PacketReplica {
    pub fn new(mtcd: u32, packet: u32) -> Self {
        Self { mtcd, packet }
    }

    /// Source packet carried by this replica under NoRS.
    pub fn packet_id(&self, frames: u32) -> u32 {
        self.packet % frames
    }

    pub fn copy(&self, frames: u32) -> u32 {
        self.packet / frames
    }
}

/// Cell position in the STF grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub frame: u32,
    pub rb: u32,
}

/// The `Q × R` occupancy grid of one STF.
///
/// Cells are indexed `frame * R + rb`. Storage is compressed: per-cell
/// replica lists in one flat array, plus the cell of every
/// `(mtcd, packet)` slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessMap {
    config: SystemConfig,
    seed: Option<u64>,
    cell_offsets: Vec<u32>,
    cell_entries: Vec<PacketReplica>,
    placements: Vec<u32>,
}

impl AccessMap {
    /// Builds a map from explicit placements, `placements[m * QK + p]`
    /// being the cell of packet `p` of MTCD `m`.
    pub fn from_placements(config: SystemConfig, placements: Vec<u32>) -> Result<Self> {
        config.validate()?;
        let qk = config.packets_per_mtcd();
        let cells = config.cells();
        if placements.len() != config.mtcds as usize * qk {
            return param(format!(
                "expected {} placements, got {}",
                config.mtcds as usize * qk,
                placements.len()
            ));
        }
        let mut seen = vec![u32::MAX; cells];
        for (m, chunk) in placements.chunks(qk.max(1)).enumerate() {
            let mut per_frame = vec![0u32; config.frames as usize];
            for &c in chunk {
                if c as usize >= cells {
                    return param(format!("cell {c} outside the {cells}-cell grid"));
                }
                if seen[c as usize] == m as u32 {
                    return param(format!("MTCD {} uses cell {c} twice", m + 1));
                }
                seen[c as usize] = m as u32;
                per_frame[(c / config.rbs) as usize] += 1;
            }
            if config.selection == Selection::PerFrame && per_frame.iter().any(|&n| n != config.repetition) {
                return param(format!("MTCD {} does not place exactly K replicas per frame", m + 1));
            }
        }
        let mut map = Self {
            config,
            seed: None,
            cell_offsets: Vec::new(),
            cell_entries: Vec::new(),
            placements,
        };
        map.rebuild_cells();
        Ok(map)
    }

    /// Map with no placements drawn yet; fill it with [`MapSampler::fill`].
    pub fn empty(config: SystemConfig) -> Self {
        Self {
            config,
            seed: None,
            cell_offsets: vec![0; config.cells() + 1],
            cell_entries: Vec::new(),
            placements: Vec::new(),
        }
    }

    /// Counting sort of the placements into per-cell lists, MTCD order
    /// within each cell.
    fn rebuild_cells(&mut self) {
        let cells = self.config.cells();
        let qk = self.config.packets_per_mtcd();
        self.cell_offsets.clear();
        self.cell_offsets.resize(cells + 1, 0);
        for &c in &self.placements {
            self.cell_offsets[c as usize + 1] += 1;
        }
        for i in 0..cells {
            self.cell_offsets[i + 1] += self.cell_offsets[i];
        }
        self.cell_entries.clear();
        self.cell_entries
            .resize(self.placements.len(), PacketReplica::new(0, 0));
        let mut cursor: Vec<u32> = self.cell_offsets[..cells].to_vec();
        for (slot, &c) in self.placements.iter().enumerate() {
            let at = &mut cursor[c as usize];
            self.cell_entries[*at as usize] = PacketReplica::new((slot / qk) as u32, (slot % qk) as u32);
            *at += 1;
        }
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn cell_count(&self) -> usize {
        self.cell_offsets.len() - 1
    }

    /// Replicas launched in cell `cell`, ordered by MTCD.
    pub fn cell(&self, cell: usize) -> &[PacketReplica] {
        let lo = self.cell_offsets[cell] as usize;
        let hi = self.cell_offsets[cell + 1] as usize;
        &self.cell_entries[lo..hi]
    }

    pub fn cell_len(&self, cell: usize) -> usize {
        (self.cell_offsets[cell + 1] - self.cell_offsets[cell]) as usize
    }

    /// Cell holding replica `packet` of `mtcd`.
    pub fn placement(&self, mtcd: u32, packet: u32) -> usize {
        self.placements[self.slot(mtcd, packet)] as usize
    }

    pub fn placements(&self) -> &[u32] {
        &self.placements
    }

    pub(crate) fn slot(&self, mtcd: u32, packet: u32) -> usize {
        mtcd as usize * self.config.packets_per_mtcd() + packet as usize
    }

    pub fn cell_ref(&self, cell: usize) -> CellRef {
        let r = self.config.rbs as usize;
        CellRef {
            frame: (cell / r) as u32,
            rb: (cell % r) as u32,
        }
    }

    pub fn cell_index(&self, at: CellRef) -> usize {
        at.frame as usize * self.config.rbs as usize + at.rb as usize
    }

    /// Cells with exactly one replica.
    pub fn exclusive_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cell_count()).filter(|&c| self.cell_len(c) == 1)
    }

    /// Serialises to the line-oriented text format. Frames, RBs, MTCDs and
    /// packet indices are written 1-based.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let seed = self.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        let mut out = format!(
            "{} {} {} {} {} {} {} {}\n",
            c.frames, c.rbs, c.mtcds, c.repetition, c.frames, c.scheme, c.selection, seed
        );
        for cell in 0..self.cell_count() {
            let entries = self.cell(cell);
            if entries.is_empty() {
                continue;
            }
            let at = self.cell_ref(cell);
            let list: Vec<String> = entries
                .iter()
                .map(|r| format!("{}:{}", r.mtcd + 1, r.packet + 1))
                .collect();
            out.push_str(&format!("{} {} {}\n", at.frame + 1, at.rb + 1, list.join(",")));
        }
        out
    }

    /// Parses the text format. IIC settings are not part of the format and
    /// come from `template` (its R, N, K, Q, scheme and selection are
    /// replaced by the header values).
    pub fn from_text(text: &str, template: SystemConfig) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let bad = |line: usize, msg: String| Error::Parse { line, msg };
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 8 {
            return Err(bad(hline, format!("header needs 8 fields, found {}", f.len())));
        }
        let num = |s: &str| -> Result<u32> { s.parse().map_err(|_| bad(hline, format!("'{s}' is not a count"))) };
        let (q, r, n, k, q2) = (num(f[0])?, num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?);
        if q != q2 {
            return Err(bad(hline, format!("Q fields disagree ({q} vs {q2})")));
        }
        let scheme: Scheme = f[5].parse().map_err(|e: Error| bad(hline, e.to_string()))?;
        let selection: Selection = f[6].parse().map_err(|e: Error| bad(hline, e.to_string()))?;
        let seed = match f[7] {
            "-" => None,
            s => Some(s.parse().map_err(|_| bad(hline, format!("bad seed '{s}'")))?),
        };
        let mut config = template;
        config.rbs = r;
        config.mtcds = n;
        config.repetition = k;
        config.frames = q;
        config.scheme = scheme;
        config.selection = selection;
        if !config.message_packets.is_multiple_of(q) {
            config.message_packets = q;
        }
        config.validate().map_err(|e| bad(hline, e.to_string()))?;
        let qk = config.packets_per_mtcd();
        let mut placements = vec![u32::MAX; n as usize * qk];
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(ln, "expected 'frame rb replicas'".into()));
            }
            let frame: u32 = parts[0].parse().map_err(|_| bad(ln, "bad frame".into()))?;
            let rb: u32 = parts[1].parse().map_err(|_| bad(ln, "bad rb".into()))?;
            if frame == 0 || frame > q || rb == 0 || rb > r {
                return Err(bad(ln, format!("cell ({frame},{rb}) outside grid")));
            }
            let cell = (frame - 1) * r + (rb - 1);
            for item in parts[2].split(',') {
                let (m, p) = item
                    .split_once(':')
                    .ok_or_else(|| bad(ln, format!("replica '{item}' is not mtcd:packet")))?;
                let m: u32 = m.parse().map_err(|_| bad(ln, format!("bad mtcd '{m}'")))?;
                let p: u32 = p.parse().map_err(|_| bad(ln, format!("bad packet '{p}'")))?;
                if m == 0 || m > n || p == 0 || p as usize > qk {
                    return Err(bad(ln, format!("replica {m}:{p} out of range")));
                }
                let slot = (m - 1) as usize * qk + (p - 1) as usize;
                if placements[slot] != u32::MAX {
                    return Err(bad(ln, format!("replica {m}:{p} placed twice")));
                }
                placements[slot] = cell;
            }
        }
        if let Some(slot) = placements.iter().position(|&c| c == u32::MAX) {
            return Err(bad(
                0,
                format!("replica {}:{} never placed", slot / qk + 1, slot % qk + 1),
            ));
        }
        let mut map = Self::from_placements(config, placements).map_err(|e| bad(0, e.to_string()))?;
        map.seed = seed;
        Ok(map)
    }
}

/// Reusable buffers for drawing random access maps.
#[derive(Debug, Default)]
pub struct MapSampler {
    stamps: Vec<u32>,
    generation: u32,
    pool: Vec<u32>,
    order: Vec<u32>,
}

impl MapSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Redraws `map` in place for the given seed. MTCD `m` uses the
    /// substream `rng::stream(seed, m)`, so its placement does not depend on
    /// how many other MTCDs are present.
    pub fn fill(&mut self, map: &mut AccessMap, seed: u64) {
        let c = map.config;
        let qk = c.packets_per_mtcd();
        map.seed = Some(seed);
        map.placements.clear();
        map.placements.resize(c.mtcds as usize * qk, 0);
        let cells = c.cells();
        if self.stamps.len() != cells {
            self.stamps = vec![0; cells];
            self.generation = 0;
        }
        for m in 0..c.mtcds {
            let mut rng = rng::stream(seed, m as u64);
            let out = &mut map.placements[m as usize * qk..(m as usize + 1) * qk];
            match c.selection {
                Selection::UniformStf => self.distinct(&mut rng, cells as u32, out),
                Selection::PerFrame => {
                    let k = c.repetition as usize;
                    self.order.clear();
                    self.order.extend(0..qk as u32);
                    shuffle(&mut rng, &mut self.order);
                    let mut drawn = vec![0u32; k];
                    for f in 0..c.frames as usize {
                        self.distinct(&mut rng, c.rbs, &mut drawn);
                        for (j, &rb) in drawn.iter().enumerate() {
                            let packet = self.order[f * k + j] as usize;
                            out[packet] = f as u32 * c.rbs + rb;
                        }
                    }
                }
            }
        }
        map.rebuild_cells();
    }

    /// Fills `out` with distinct values from `0..range`, in draw order.
    fn distinct(&mut self, rng: &mut rng::Stream, range: u32, out: &mut [u32]) {
        let want = out.len();
        if 2 * want <= range as usize {
            self.generation = self.generation.wrapping_add(1);
            if self.generation == 0 {
                self.stamps.iter_mut().for_each(|s| *s = 0);
                self.generation = 1;
            }
            if self.stamps.len() < range as usize {
                self.stamps.resize(range as usize, 0);
            }
            let mut i = 0;
            while i < want {
                let v = rng.random_range(0..range);
                let s = &mut self.stamps[v as usize];
                if *s != self.generation {
                    *s = self.generation;
                    out[i] = v;
                    i += 1;
                }
            }
        } else {
            self.pool.clear();
            self.pool.extend(0..range);
            for (i, slot) in out.iter_mut().enumerate().take(want) {
                let j = rng.random_range(i as u32..range) as usize;
                self.pool.swap(i, j);
                *slot = self.pool[i];
            }
        }
    }
}

fn shuffle(rng: &mut rng::Stream, v: &mut [u32]) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i as u32) as usize;
        v.swap(i, j);
    }
}

/// Draws a random access map, reproducible from `(config, seed)`.
pub fn generate_access_map(config: &SystemConfig, seed: u64) -> Result<AccessMap> {
    config.validate()?;
    let mut map = AccessMap::empty(*config);
    MapSampler::new().fill(&mut map, seed);
    Ok(map)
}
