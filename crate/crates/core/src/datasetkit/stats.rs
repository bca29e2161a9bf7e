use std::collections::BTreeMap;

use serde::Serialize;

use crate::gmfix::InstrumentId;
use crate::smf::MidiPiece;

/// Exact activity statistics. Times are in scaled microseconds (see
/// [`crate::smf::TempoMap::scaled_micros`]) so the sweep line has no
/// rounding; use the `*_seconds` accessors for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityStats {
    pub ticks_per_quarter: u16,
    pub duration: u128,
    /// Measure of the union of each instrument's sounding notes.
    pub per_instrument: BTreeMap<String, u128>,
    /// Time during which exactly `level` distinct instruments sound.
    pub polyphony: BTreeMap<usize, u128>,
}

fn to_seconds(scaled: u128, tpq: u16) -> f64 {
    scaled as f64 / (f64::from(tpq.max(1)) * 1e6)
}

impl ActivityStats {
    pub fn instrument_seconds(&self) -> BTreeMap<String, f64> {
        self.per_instrument.iter().map(|(k, &v)| (k.clone(), to_seconds(v, self.ticks_per_quarter))).collect()
    }

    pub fn polyphony_seconds(&self) -> BTreeMap<usize, f64> {
        self.polyphony.iter().map(|(&k, &v)| (k, to_seconds(v, self.ticks_per_quarter))).collect()
    }

    pub fn duration_seconds(&self) -> f64 {
        to_seconds(self.duration, self.ticks_per_quarter)
    }

    pub fn report(&self) -> StatsReport {
        StatsReport {
            duration_seconds: self.duration_seconds(),
            instrument_seconds: self.instrument_seconds(),
            polyphony_seconds: self.polyphony_seconds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub duration_seconds: f64,
    pub instrument_seconds: BTreeMap<String, f64>,
    pub polyphony_seconds: BTreeMap<usize, f64>,
}

impl StatsReport {
    /// Adds another piece's figures.
    pub fn accumulate(&mut self, other: &StatsReport) {
        self.duration_seconds += other.duration_seconds;
        for (k, v) in &other.instrument_seconds {
            *self.instrument_seconds.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.polyphony_seconds {
            *self.polyphony_seconds.entry(*k).or_default() += v;
        }
    }

    pub fn empty() -> Self {
        StatsReport { duration_seconds: 0.0, instrument_seconds: BTreeMap::new(), polyphony_seconds: BTreeMap::new() }
    }
}

/// Sweep line over note boundaries. `instruments` is aligned with the
/// piece's tracks; tracks without an instrument are ignored, and tracks
/// sharing an instrument are merged.
pub fn compute_stats(piece: &MidiPiece, instruments: &[Option<InstrumentId>]) -> ActivityStats {
    let map = piece.tempo_map();
    let mut names: Vec<&str> = instruments.iter().flatten().map(|i| i.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();

    // (time, instrument index, +1 onset / -1 offset)
    let mut boundaries: Vec<(u128, usize, i32)> = Vec::new();
    for (track, id) in piece.tracks.iter().zip(instruments) {
        let Some(id) = id else { continue };
        let k = names.binary_search(&id.name.as_str()).unwrap();
        for note in track.notes() {
            let (on, off) = (map.scaled_micros(note.onset), map.scaled_micros(note.offset));
            if on < off {
                boundaries.push((on, k, 1));
                boundaries.push((off, k, -1));
            }
        }
    }
    boundaries.sort_unstable();

    let mut depth = vec![0i32; names.len()];
    let mut per_instrument = vec![0u128; names.len()];
    let mut polyphony: BTreeMap<usize, u128> = BTreeMap::new();
    let mut sounding = 0usize;
    let mut i = 0;
    while i < boundaries.len() {
        let t = boundaries[i].0;
        while i < boundaries.len() && boundaries[i].0 == t {
            let (_, k, delta) = boundaries[i];
            let before = depth[k] > 0;
            depth[k] += delta;
            match (before, depth[k] > 0) {
                (false, true) => sounding += 1,
                (true, false) => sounding -= 1,
                _ => {}
            }
            i += 1;
        }
        if let Some(&(next, _, _)) = boundaries.get(i) {
            let dt = next - t;
            if sounding > 0 {
                *polyphony.entry(sounding).or_default() += dt;
                for (acc, &d) in per_instrument.iter_mut().zip(&depth) {
                    if d > 0 {
                        *acc += dt;
                    }
                }
            }
        }
    }

    ActivityStats {
        ticks_per_quarter: piece.ticks_per_quarter,
        duration: map.scaled_micros(piece.end_tick()),
        per_instrument: names.iter().map(|s| s.to_string()).zip(per_instrument).collect(),
        polyphony,
    }
}

/// Seconds of actual sounding time per instrument.
pub fn activity_time(piece: &MidiPiece, instruments: &[Option<InstrumentId>]) -> BTreeMap<String, f64> {
    compute_stats(piece, instruments).instrument_seconds()
}

/// Seconds spent at each polyphony level (distinct instruments sounding).
pub fn polyphony_histogram(piece: &MidiPiece, instruments: &[Option<InstrumentId>]) -> BTreeMap<usize, f64> {
    compute_stats(piece, instruments).polyphony_seconds()
}
