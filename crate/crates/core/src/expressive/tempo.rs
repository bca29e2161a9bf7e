use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tiling::{check_tiling, tile_span};
use super::{AnnotationParams, ExpressiveError};
use crate::smf::{EventKind, MidiPiece, Track};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoInterval {
    pub start_tick: u64,
    pub end_tick: u64,
    pub bpm: f64,
}

impl TempoInterval {
    pub fn micros_per_quarter(&self) -> u32 {
        (60_000_000.0 / self.bpm).round().clamp(1.0, f64::from(0xFF_FFFFu32)) as u32
    }
}

/// Draws one clamped-normal tempo.
pub fn sample_bpm<R: Rng + ?Sized>(params: &AnnotationParams, rng: &mut R) -> f64 {
    let normal = Normal::new(params.tempo_mean, params.tempo_std).expect("validated parameters");
    normal.sample(rng).clamp(params.tempo_clamp[0], params.tempo_clamp[1])
}

/// Tiles the whole piece into tempo intervals with independent tempi.
pub fn plan_tempo_intervals<R: Rng + ?Sized>(
    piece: &MidiPiece,
    params: &AnnotationParams,
    rng: &mut R,
) -> Result<Vec<TempoInterval>, ExpressiveError> {
    params.validate()?;
    let spans = tile_span(0, piece.end_tick(), piece.ticks_per_quarter, params.min_tempo_intervals, true, rng)?;
    Ok(spans
        .into_iter()
        .map(|(start_tick, end_tick)| TempoInterval { start_tick, end_tick, bpm: sample_bpm(params, rng) })
        .collect())
}

/// Replaces the tempo map with one set-tempo event per interval, all in the
/// first track. Note ticks are untouched.
pub fn apply_tempo(piece: &MidiPiece, intervals: &[TempoInterval]) -> Result<MidiPiece, ExpressiveError> {
    if !check_tiling(intervals.iter().map(|i| (i.start_tick, i.end_tick)), 0, piece.end_tick()) {
        return Err(ExpressiveError::NonTilingIntervals("tempo"));
    }
    let mut out = piece.clone();
    for track in &mut out.tracks {
        track.events.retain(|e| !matches!(e.kind, EventKind::SetTempo { .. }));
    }
    if out.tracks.is_empty() {
        out.tracks.push(Track::default());
    }
    for interval in intervals {
        out.tracks[0].insert_before_tick(
            interval.start_tick,
            EventKind::SetTempo { micros_per_quarter: interval.micros_per_quarter() },
        );
    }
    Ok(out)
}
