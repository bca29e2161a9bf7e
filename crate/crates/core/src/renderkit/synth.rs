use std::f64::consts::PI;

use super::{RenderError, Waveform};
use crate::smf::MidiPiece;

pub const DEFAULT_SAMPLE_RATE: u32 = 22_050;
/// Upper bound on partials per note; high notes get fewer (below Nyquist).
pub const MAX_HARMONICS: usize = 16;
const RAMP_SECONDS: f64 = 0.010;
/// Peak level of a velocity-127 note, leaving headroom for polyphony.
const NOTE_GAIN: f64 = 0.25;

/// Equal-tempered frequency with A4 (pitch 69) at 440 Hz.
pub fn note_frequency(pitch: u8) -> f64 {
    440.0 * 2f64.powf((f64::from(pitch) - 69.0) / 12.0)
}

/// Adds one band-limited sawtooth note into `out`.
fn render_note(out: &mut [f32], sample_rate: f64, start: usize, end: usize, pitch: u8, velocity: u8) {
    let end = end.min(out.len());
    if start >= end {
        return;
    }
    let f0 = note_frequency(pitch);
    let harmonics = ((sample_rate / 2.0 / f0).floor() as usize).clamp(1, MAX_HARMONICS);
    let amplitude = NOTE_GAIN * f64::from(velocity) / 127.0 * (2.0 / PI);
    let len = end - start;
    let ramp = ((RAMP_SECONDS * sample_rate).round() as usize).clamp(1, len.div_ceil(2));

    // per-harmonic phasors advanced by complex rotation
    let mut state: Vec<(f64, f64)> = vec![(1.0, 0.0); harmonics];
    let step: Vec<(f64, f64)> = (1..=harmonics)
        .map(|k| {
            let w = 2.0 * PI * f0 * k as f64 / sample_rate;
            (w.cos(), w.sin())
        })
        .collect();
    for (n, slot) in out[start..end].iter_mut().enumerate() {
        let mut saw = 0.0;
        for (k, (z, w)) in state.iter_mut().zip(&step).enumerate() {
            saw += z.1 / (k + 1) as f64;
            *z = (z.0 * w.0 - z.1 * w.1, z.0 * w.1 + z.1 * w.0);
        }
        if n % 1024 == 1023 {
            for z in &mut state {
                let norm = (z.0 * z.0 + z.1 * z.1).sqrt();
                *z = (z.0 / norm, z.1 / norm);
            }
        }
        let env = ((n + 1) as f64 / ramp as f64).min((len - n) as f64 / ramp as f64).min(1.0);
        *slot += (amplitude * env * saw) as f32;
    }
}

/// Renders the notes of the selected tracks (all tracks when `tracks` is
/// `None`) over the piece's full duration.
pub fn test_synthesize(piece: &MidiPiece, tracks: Option<&[usize]>, sample_rate: u32) -> Waveform {
    let map = piece.tempo_map();
    let sr = f64::from(sample_rate);
    let to_sample = |tick: u64| (map.seconds(tick) * sr).round() as usize;
    let mut out = vec![0.0f32; to_sample(piece.end_tick())];
    for (i, track) in piece.tracks.iter().enumerate() {
        if tracks.is_some_and(|sel| !sel.contains(&i)) {
            continue;
        }
        for note in track.notes() {
            render_note(&mut out, sr, to_sample(note.onset), to_sample(note.offset), note.pitch, note.velocity);
        }
    }
    Waveform { sample_rate, samples: out }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mix {
    pub waveform: Waveform,
    pub peak: f32,
}

/// Sample-wise sum, in stem order, zero-padding shorter stems. No
/// normalization or clipping.
pub fn mix_stems(stems: &[&Waveform]) -> Result<Mix, RenderError> {
    let first = stems.first().ok_or(RenderError::NoStems)?;
    let sample_rate = first.sample_rate;
    if let Some(bad) = stems.iter().find(|s| s.sample_rate != sample_rate) {
        return Err(RenderError::SampleRateMismatch { expected: sample_rate, found: bad.sample_rate });
    }
    let len = stems.iter().map(|s| s.samples.len()).max().unwrap_or(0);
    let mut samples = vec![0.0f32; len];
    for stem in stems {
        for (acc, &s) in samples.iter_mut().zip(&stem.samples) {
            *acc += s;
        }
    }
    let peak = samples.iter().fold(0.0f32, |m, &s| m.max(s.abs()));
    Ok(Mix { waveform: Waveform { sample_rate, samples }, peak })
}
