//! Random but musically bounded tempo, dynamics and articulation
//! annotation of normalized scores.

mod articulation;
mod dynamics;
mod tempo;
mod tiling;

pub use articulation::{
    active_span, apply_articulations, mirror_velocity_to_cc1, plan_articulations, ArticulationInterval,
    ArticulationRow, ArticulationTable, ArticulationTables, LengthClass, MissingTable,
};
pub use dynamics::{
    apply_dynamics, plan_dynamic_intervals, velocity_at, DynamicInterval, DynamicMark, DynamicsPlan, Transition,
};
pub use tempo::{apply_tempo, plan_tempo_intervals, sample_bpm, TempoInterval};
pub use tiling::{check_tiling, max_intervals, tile_span};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmfix::InstrumentId;
use crate::seed::rng_for;
use crate::smf::MidiPiece;

#[derive(Debug, Error)]
pub enum ExpressiveError {
    #[error("piece spans {quarters} quarter notes, fewer than the {min_intervals} intervals required")]
    PieceTooShort { quarters: u64, min_intervals: usize },
    #[error("{0} intervals do not tile the annotated span")]
    NonTilingIntervals(&'static str),
    #[error("no articulation table for {0}")]
    MissingTable(String),
    #[error("articulation table for {instrument}: {msg}")]
    InvalidTable { instrument: String, msg: String },
    #[error("invalid annotation parameters: {0}")]
    InvalidParams(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationParams {
    pub tempo_mean: f64,
    pub tempo_std: f64,
    /// `[min_bpm, max_bpm]`
    pub tempo_clamp: [f64; 2],
    pub min_tempo_intervals: usize,
    /// Range of the per-piece probability that a dynamic boundary is gradual.
    pub gradual_fraction_range: [f64; 2],
    /// Seconds.
    pub transition_duration_range: [f64; 2],
    pub seed: u64,
}

impl Default for AnnotationParams {
    fn default() -> Self {
        AnnotationParams {
            tempo_mean: 120.0,
            tempo_std: 30.0,
            tempo_clamp: [40.0, 208.0],
            min_tempo_intervals: 3,
            gradual_fraction_range: [0.2, 0.6],
            transition_duration_range: [0.5, 4.0],
            seed: 0,
        }
    }
}

impl AnnotationParams {
    pub fn validate(&self) -> Result<(), ExpressiveError> {
        let fail = |m: &str| Err(ExpressiveError::InvalidParams(m.to_owned()));
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !(self.tempo_mean.is_finite() && self.tempo_mean > 0.0) {
            return fail("tempo_mean must be positive");
        }
        if !(self.tempo_std.is_finite() && self.tempo_std >= 0.0) {
            return fail("tempo_std must be non-negative");
        }
        if !(ordered(self.tempo_clamp) && self.tempo_clamp[0] > 0.0) {
            return fail("tempo_clamp must be an increasing pair of positive tempi");
        }
        if self.min_tempo_intervals < 3 {
            return fail("min_tempo_intervals must be at least 3");
        }
        if !(ordered(self.gradual_fraction_range)
            && self.gradual_fraction_range[0] >= 0.0
            && self.gradual_fraction_range[1] <= 1.0)
        {
            return fail("gradual_fraction_range must lie within [0, 1]");
        }
        if !(ordered(self.transition_duration_range) && self.transition_duration_range[0] >= 0.0) {
            return fail("transition_duration_range must be non-negative and increasing");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationMode {
    /// Leave the normalized score untouched.
    Plain,
    #[default]
    Proposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationPlan {
    pub mode: AnnotationMode,
    pub seed: u64,
    pub params: AnnotationParams,
    pub tempo: Vec<TempoInterval>,
    pub dynamics: Option<DynamicsPlan>,
    pub articulations: Vec<ArticulationInterval>,
}

/// Plans and applies tempo, then dynamics, then articulations (with CC#1
/// mirroring). Each stage draws from its own stream derived from
/// `params.seed`, so the plan is a pure function of its inputs.
pub fn annotate(
    piece: &MidiPiece,
    instruments: &[Option<InstrumentId>],
    tables: &ArticulationTables,
    params: &AnnotationParams,
    mode: AnnotationMode,
    missing: MissingTable,
) -> Result<(MidiPiece, AnnotationPlan), ExpressiveError> {
    params.validate()?;
    let mut plan = AnnotationPlan {
        mode,
        seed: params.seed,
        params: params.clone(),
        tempo: Vec::new(),
        dynamics: None,
        articulations: Vec::new(),
    };
    if mode == AnnotationMode::Plain {
        return Ok((piece.clone(), plan));
    }
    plan.tempo = plan_tempo_intervals(piece, params, &mut rng_for(params.seed, "tempo"))?;
    let out = apply_tempo(piece, &plan.tempo)?;
    let dynamics = plan_dynamic_intervals(&out, params, &mut rng_for(params.seed, "dynamics"))?;
    let out = apply_dynamics(&out, &dynamics.intervals)?;
    plan.dynamics = Some(dynamics);
    plan.articulations =
        plan_articulations(&out, instruments, tables, params, missing, &mut rng_for(params.seed, "articulation"))?;
    let out = apply_articulations(&out, &plan.articulations)?;
    let out = mirror_velocity_to_cc1(&out, instruments, tables);
    Ok((out, plan))
}

#[cfg(test)]
mod tests {
    use super::tempo::tests::melody;
    use super::*;
    use crate::gmfix::Registry;
    use crate::smf::write_smf;

    fn setup() -> (MidiPiece, Vec<Option<InstrumentId>>, ArticulationTables) {
        let reg = Registry::default();
        let piece = melody(480, 64);
        (piece, vec![None, reg.get("cello").cloned()], ArticulationTables::strings(&reg))
    }

    #[test]
    fn defaults_validate() {
        AnnotationParams::default().validate().unwrap();
        let bad = AnnotationParams { min_tempo_intervals: 2, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = AnnotationParams { tempo_clamp: [0.0, 100.0], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = AnnotationParams { gradual_fraction_range: [0.5, 1.5], ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn params_from_toml() {
        let p: AnnotationParams = toml::from_str("tempo_mean = 90.0\nseed = 5\n").unwrap();
        assert_eq!(p.tempo_mean, 90.0);
        assert_eq!(p.tempo_std, 30.0);
        assert_eq!(p.seed, 5);
        assert!(toml::from_str::<AnnotationParams>("tempo_mena = 90.0\n").is_err());
    }

    #[test]
    fn plain_mode_is_identity() {
        let (piece, ids, tables) = setup();
        let (out, plan) =
            annotate(&piece, &ids, &tables, &Default::default(), AnnotationMode::Plain, MissingTable::Error).unwrap();
        assert_eq!(out, piece);
        assert!(plan.tempo.is_empty() && plan.articulations.is_empty() && plan.dynamics.is_none());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (piece, ids, tables) = setup();
        let params = AnnotationParams { seed: 42, ..Default::default() };
        let run = |p: &AnnotationParams| {
            annotate(&piece, &ids, &tables, p, AnnotationMode::Proposed, MissingTable::Error).unwrap()
        };
        let (a, plan_a) = run(&params);
        let (b, plan_b) = run(&params);
        assert_eq!(write_smf(&a).unwrap(), write_smf(&b).unwrap());
        assert_eq!(serde_json::to_string(&plan_a).unwrap(), serde_json::to_string(&plan_b).unwrap());
        let (c, _) = run(&AnnotationParams { seed: 43, ..params });
        assert_ne!(a, c);
    }

    #[test]
    fn annotated_piece_keeps_notes() {
        let (piece, ids, tables) = setup();
        for seed in 0..20 {
            let params = AnnotationParams { seed, ..Default::default() };
            let (out, plan) =
                annotate(&piece, &ids, &tables, &params, AnnotationMode::Proposed, MissingTable::Error).unwrap();
            out.validate().unwrap();
            let strip =
                |p: &MidiPiece| p.tracks[1].notes().iter().map(|n| (n.onset, n.offset, n.pitch)).collect::<Vec<_>>();
            assert_eq!(strip(&out), strip(&piece));
            assert_eq!(out.tempo_map().changes().len(), plan.tempo.len());
            let dyn_plan = plan.dynamics.unwrap();
            // notes outside transition windows map back to their interval's mark
            for n in out.tracks[1].notes() {
                let iv = dyn_plan.intervals.iter().rev().find(|iv| iv.start_tick <= n.onset).unwrap();
                if n.velocity == iv.target_velocity {
                    assert_eq!(DynamicMark::from_velocity(n.velocity), Some(iv.mark));
                }
            }
            let json = serde_json::to_string(&plan.articulations).unwrap();
            let back: Vec<ArticulationInterval> = serde_json::from_str(&json).unwrap();
            assert_eq!(back, plan.articulations);
        }
    }
}
