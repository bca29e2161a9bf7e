use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{RenderError, Waveform};

/// Writes mono 32-bit float PCM.
pub fn write_wav(path: &Path, wave: &Waveform) -> Result<(), RenderError> {
    let spec =
        WavSpec { channels: 1, sample_rate: wave.sample_rate, bits_per_sample: 32, sample_format: SampleFormat::Float };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in &wave.samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Reads 16/24/32-bit integer or 32-bit float PCM; multichannel files are
/// averaged down to mono.
pub fn read_wav(path: &Path) -> Result<Waveform, RenderError> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let interleaved: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader.samples::<i32>().map(|s| s.map(|v| v as f32 * scale)).collect::<Result<_, _>>()?
        }
    };
    let channels = usize::from(spec.channels.max(1));
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(channels).map(|frame| frame.iter().sum::<f32>() / channels as f32).collect()
    };
    Ok(Waveform { sample_rate: spec.sample_rate, samples })
}
