//! Frame-wise SDR with silence exclusion and median aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reported for frames whose residual is exactly zero.
pub const SDR_CAP_DB: f64 = 100.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference has {reference} samples at {reference_rate} Hz, estimate {estimate} at {estimate_rate} Hz")]
    LengthMismatch { reference: usize, estimate: usize, reference_rate: u32, estimate_rate: u32 },
    #[error("frame length must be positive, got {0} s")]
    NonPositiveFrame(f64),
    #[error("stem {0} is silent in every piece")]
    NoActivePieces(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Compare the estimate as is.
    #[default]
    Plain,
    /// Rescale the estimate by the least-squares gain first.
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub frame_seconds: f64,
    pub silence_threshold_dbfs: f64,
    pub projection: Projection,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { frame_seconds: 1.0, silence_threshold_dbfs: -60.0, projection: Projection::Plain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameSdr {
    Db(f64),
    Silent,
}

impl FrameSdr {
    pub fn db(self) -> Option<f64> {
        match self {
            FrameSdr::Db(v) => Some(v),
            FrameSdr::Silent => None,
        }
    }
}

fn sdr_db(reference: &[f32], estimate: &[f32], projection: Projection) -> f64 {
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum::<f64>();
    let alpha = match projection {
        Projection::Plain => 1.0,
        Projection::Scalar => {
            let ee = dot(estimate, estimate);
            if ee > 0.0 {
                dot(reference, estimate) / ee
            } else {
                0.0
            }
        }
    };
    let signal = dot(reference, reference);
    let residual: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(&s, &e)| {
            let d = f64::from(s) - alpha * f64::from(e);
            d * d
        })
        .sum();
    if residual == 0.0 {
        return SDR_CAP_DB;
    }
    (10.0 * (signal / residual).log10()).min(SDR_CAP_DB)
}

/// SDR of each full, non-overlapping frame; a trailing partial frame is
/// dropped. Frames whose reference RMS is below the threshold are silent.
pub fn frame_sdr(
    reference: &[f32],
    estimate: &[f32],
    sample_rate: u32,
    params: &EvalParams,
) -> Result<Vec<FrameSdr>, EvalError> {
    if !(params.frame_seconds > 0.0 && params.frame_seconds.is_finite()) {
        return Err(EvalError::NonPositiveFrame(params.frame_seconds));
    }
    if reference.len() != estimate.len() {
        return Err(EvalError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
            reference_rate: sample_rate,
            estimate_rate: sample_rate,
        });
    }
    let frame = ((params.frame_seconds * f64::from(sample_rate)).round() as usize).max(1);
    let threshold = 10f64.powf(params.silence_threshold_dbfs / 20.0);
    Ok(reference
        .chunks_exact(frame)
        .zip(estimate.chunks_exact(frame))
        .map(|(s, e)| {
            let rms = (s.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / frame as f64).sqrt();
            if rms < threshold {
                FrameSdr::Silent
            } else {
                FrameSdr::Db(sdr_db(s, e, params.projection))
            }
        })
        .collect())
}

/// Lower median: for an even count the smaller of the two middle values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Median over non-silent frames; `None` when every frame is silent.
pub fn piece_sdr(frames: &[FrameSdr]) -> Option<f64> {
    let values: Vec<f64> = frames.iter().filter_map(|f| f.db()).collect();
    lower_median(&values)
}

/// Median over the pieces in which the stem is not silent.
pub fn corpus_sdr(stem: &str, pieces: &[Option<f64>]) -> Result<f64, EvalError> {
    let values: Vec<f64> = pieces.iter().flatten().copied().collect();
    lower_median(&values).ok_or_else(|| EvalError::NoActivePieces(stem.to_owned()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StemResult {
    pub frames: Vec<FrameSdr>,
    /// `None` when the stem is silent throughout the piece.
    pub median_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdrReport {
    pub params: EvalParams,
    /// piece id -> stem -> result
    pub pieces: BTreeMap<String, BTreeMap<String, StemResult>>,
    /// Per-stem corpus median; stems silent everywhere are omitted.
    pub corpus: BTreeMap<String, f64>,
    pub silent_stems: Vec<String>,
}

/// One reference/estimate pair to score.
pub struct StemPair<'a> {
    pub piece_id: &'a str,
    pub stem: &'a str,
    pub sample_rate: u32,
    pub reference: &'a [f32],
    pub estimate: &'a [f32],
}

/// Scores every pair and aggregates per stem.
pub fn evaluate(pairs: &[StemPair<'_>], params: &EvalParams) -> Result<SdrReport, EvalError> {
    let mut pieces: BTreeMap<String, BTreeMap<String, StemResult>> = BTreeMap::new();
    for p in pairs {
        let frames = frame_sdr(p.reference, p.estimate, p.sample_rate, params)?;
        let median_db = piece_sdr(&frames);
        pieces.entry(p.piece_id.to_owned()).or_default().insert(p.stem.to_owned(), StemResult { frames, median_db });
    }
    let mut per_stem: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for stems in pieces.values() {
        for (stem, r) in stems {
            per_stem.entry(stem).or_default().push(r.median_db);
        }
    }
    let mut corpus = BTreeMap::new();
    let mut silent_stems = Vec::new();
    for (stem, values) in per_stem {
        match corpus_sdr(stem, &values) {
            Ok(v) => {
                corpus.insert(stem.to_owned(), v);
            }
            Err(_) => silent_stems.push(stem.to_owned()),
        }
    }
    Ok(SdrReport { params: *params, pieces, corpus, silent_stems })
}
