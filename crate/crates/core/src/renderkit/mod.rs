//! Render manifests for external synthesizers, plus a deterministic test
//! synthesizer, stem mixing and WAV I/O.

mod manifest;
mod synth;
mod wav;

pub use manifest::{emit_manifest, ArticulationCue, RenderManifest, StemEntry, StemGroupRules, TrackEntry};
pub use synth::{mix_stems, note_frequency, test_synthesize, Mix, DEFAULT_SAMPLE_RATE, MAX_HARMONICS};
pub use wav::{read_wav, write_wav};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("track {track_index} has notes but no instrument or grouping rule")]
    UngroupableTrack { track_index: usize },
    #[error("stem group rule {0}")]
    InvalidRule(String),
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },
    #[error("nothing to mix")]
    NoStems,
    #[error(transparent)]
    Wav(#[from] hound::Error),
}

/// Mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl Waveform {
    pub fn silence(sample_rate: u32, len: usize) -> Self {
        Waveform { sample_rate, samples: vec![0.0; len] }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|&s| f64::from(s) * f64::from(s)).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}
