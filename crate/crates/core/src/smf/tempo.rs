use super::{EventKind, MidiPiece};

/// 120 BPM, the SMF default before any set-tempo event.
pub const DEFAULT_MICROS_PER_QUARTER: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    tick: u64,
    /// Elapsed time at `tick`, in microseconds times ticks-per-quarter.
    scaled_micros: u128,
    micros_per_quarter: u32,
}

/// Piecewise-constant tempo map collected from every track's set-tempo
/// events. Elapsed time is tracked exactly in units of
/// `1 / ticks_per_quarter` microseconds, so interval arithmetic on the
/// scaled values has no rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TempoMap {
    ticks_per_quarter: u16,
    segments: Vec<Segment>,
}

impl TempoMap {
    pub fn from_piece(piece: &MidiPiece) -> Self {
        let mut changes: Vec<(u64, u32)> = piece
            .tracks
            .iter()
            .flat_map(|t| t.events.iter())
            .filter_map(|e| match e.kind {
                EventKind::SetTempo { micros_per_quarter } => Some((e.tick, micros_per_quarter)),
                _ => None,
            })
            .collect();
        // stable: for equal ticks the later event (track order) wins
        changes.sort_by_key(|&(tick, _)| tick);
        Self::from_changes(piece.ticks_per_quarter, &changes)
    }

    /// Builds a map from `(tick, micros_per_quarter)` changes sorted by tick.
    pub fn from_changes(ticks_per_quarter: u16, changes: &[(u64, u32)]) -> Self {
        let mut segments = vec![Segment { tick: 0, scaled_micros: 0, micros_per_quarter: DEFAULT_MICROS_PER_QUARTER }];
        for &(tick, us) in changes {
            let last = *segments.last().unwrap();
            if tick == last.tick {
                segments.last_mut().unwrap().micros_per_quarter = us;
            } else {
                let scaled = last.scaled_micros + u128::from(tick - last.tick) * u128::from(last.micros_per_quarter);
                segments.push(Segment { tick, scaled_micros: scaled, micros_per_quarter: us });
            }
        }
        TempoMap { ticks_per_quarter: ticks_per_quarter.max(1), segments }
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    fn segment(&self, tick: u64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.tick <= tick);
        &self.segments[idx.saturating_sub(1)]
    }

    /// Exact elapsed time at `tick` in microseconds times ticks-per-quarter.
    pub fn scaled_micros(&self, tick: u64) -> u128 {
        let seg = self.segment(tick);
        seg.scaled_micros + u128::from(tick - seg.tick) * u128::from(seg.micros_per_quarter)
    }

    /// Converts a scaled-microsecond quantity to seconds.
    pub fn scaled_to_seconds(&self, scaled: u128) -> f64 {
        scaled as f64 / (f64::from(self.ticks_per_quarter) * 1e6)
    }

    pub fn seconds(&self, tick: u64) -> f64 {
        self.scaled_to_seconds(self.scaled_micros(tick))
    }

    pub fn micros_per_quarter_at(&self, tick: u64) -> u32 {
        self.segment(tick).micros_per_quarter
    }

    pub fn bpm_at(&self, tick: u64) -> f64 {
        60e6 / f64::from(self.micros_per_quarter_at(tick))
    }

    /// Number of ticks spanning `seconds` at the tempo in effect at `tick`.
    pub fn ticks_for_seconds_at(&self, tick: u64, seconds: f64) -> u64 {
        let us = f64::from(self.micros_per_quarter_at(tick));
        (seconds * 1e6 / us * f64::from(self.ticks_per_quarter)).round().max(0.0) as u64
    }

    /// `(tick, micros_per_quarter)` for every segment, starting at tick 0.
    pub fn changes(&self) -> Vec<(u64, u32)> {
        self.segments.iter().map(|s| (s.tick, s.micros_per_quarter)).collect()
    }
}

/// Wall-clock position of `tick`, 120 BPM before the first set-tempo event.
pub fn tick_to_seconds(piece: &MidiPiece, tick: u64) -> f64 {
    TempoMap::from_piece(piece).seconds(tick)
}
