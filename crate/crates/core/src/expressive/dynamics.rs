use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tiling::{check_tiling, tile_span};
use super::{AnnotationParams, ExpressiveError};
use crate::smf::{EventKind, MidiPiece};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicMark {
    Ppp,
    Pp,
    P,
    Mp,
    Mf,
    F,
    Ff,
    Fff,
}

impl DynamicMark {
    pub const ALL: [DynamicMark; 8] = [Self::Ppp, Self::Pp, Self::P, Self::Mp, Self::Mf, Self::F, Self::Ff, Self::Fff];

    /// Nominal velocity range as printed in notation tables, `[lo, hi]`.
    pub fn nominal_range(self) -> (u8, u8) {
        match self {
            Self::Ppp => (1, 16),
            Self::Pp => (16, 32),
            Self::P => (32, 48),
            Self::Mp => (48, 64),
            Self::Mf => (64, 80),
            Self::F => (80, 96),
            Self::Ff => (96, 112),
            Self::Fff => (112, 127),
        }
    }

    /// Velocities belonging to the mark. Shared endpoints go to the louder
    /// mark, so every range except `fff` excludes its upper bound.
    pub fn velocities(self) -> std::ops::RangeInclusive<u8> {
        let (lo, hi) = self.nominal_range();
        if self == Self::Fff {
            lo..=hi
        } else {
            lo..=hi - 1
        }
    }

    /// Inverse mapping; `None` for velocity 0 (a note-off) or above 127.
    pub fn from_velocity(velocity: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.velocities().contains(&velocity))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ppp => "ppp",
            Self::Pp => "pp",
            Self::P => "p",
            Self::Mp => "mp",
            Self::Mf => "mf",
            Self::F => "f",
            Self::Ff => "ff",
            Self::Fff => "fff",
        }
    }
}

impl fmt::Display for DynamicMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Transition {
    Abrupt,
    /// Linear ramp over a window of `duration_ticks` centred on the boundary.
    Gradual {
        duration_ticks: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicInterval {
    pub start_tick: u64,
    pub end_tick: u64,
    pub mark: DynamicMark,
    pub target_velocity: u8,
    pub transition_in: Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsPlan {
    /// Probability that a boundary is gradual, drawn once per piece.
    pub gradual_share: f64,
    pub intervals: Vec<DynamicInterval>,
}

/// Tiles the piece into dynamic intervals. Transition durations are drawn
/// in seconds and converted with the piece's tempo at the boundary.
pub fn plan_dynamic_intervals<R: Rng + ?Sized>(
    piece: &MidiPiece,
    params: &AnnotationParams,
    rng: &mut R,
) -> Result<DynamicsPlan, ExpressiveError> {
    params.validate()?;
    let spans = tile_span(0, piece.end_tick(), piece.ticks_per_quarter, params.min_tempo_intervals, true, rng)?;
    let [g_lo, g_hi] = params.gradual_fraction_range;
    let gradual_share = if g_lo < g_hi { rng.random_range(g_lo..=g_hi) } else { g_lo };
    let [d_lo, d_hi] = params.transition_duration_range;
    let map = piece.tempo_map();

    let mut intervals: Vec<DynamicInterval> = Vec::with_capacity(spans.len());
    for (i, &(start_tick, end_tick)) in spans.iter().enumerate() {
        let mark = DynamicMark::ALL[rng.random_range(0..DynamicMark::ALL.len())];
        let target_velocity = rng.random_range(mark.velocities());
        let mut transition_in = Transition::Abrupt;
        if i > 0 && rng.random_bool(gradual_share) {
            let seconds = if d_lo < d_hi { rng.random_range(d_lo..=d_hi) } else { d_lo };
            let (prev_start, _) = spans[i - 1];
            let shorter = (start_tick - prev_start).min(end_tick - start_tick);
            let duration_ticks = map.ticks_for_seconds_at(start_tick, seconds).min(shorter / 2);
            if duration_ticks > 0 {
                transition_in = Transition::Gradual { duration_ticks };
            }
        }
        intervals.push(DynamicInterval { start_tick, end_tick, mark, target_velocity, transition_in });
    }
    Ok(DynamicsPlan { gradual_share, intervals })
}

/// Velocity for a note starting at `tick` under a tiling plan.
pub fn velocity_at(intervals: &[DynamicInterval], tick: u64) -> u8 {
    let idx = intervals.partition_point(|iv| iv.start_tick <= tick).saturating_sub(1);
    let current = &intervals[idx];
    // the window around a boundary reaches into the interval on either side
    let ramp = |iv: &DynamicInterval, prev: &DynamicInterval| -> Option<u8> {
        let Transition::Gradual { duration_ticks } = iv.transition_in else { return None };
        let d = duration_ticks as f64;
        let offset = tick as f64 - (iv.start_tick as f64 - d / 2.0);
        if !(0.0..=d).contains(&offset) {
            return None;
        }
        let (a, b) = (f64::from(prev.target_velocity), f64::from(iv.target_velocity));
        Some((a + (b - a) * offset / d).round().clamp(1.0, 127.0) as u8)
    };
    if idx > 0 {
        if let Some(v) = ramp(current, &intervals[idx - 1]) {
            return v;
        }
    }
    if let Some(next) = intervals.get(idx + 1) {
        if let Some(v) = ramp(next, current) {
            return v;
        }
    }
    current.target_velocity
}

/// Sets every note-on velocity from the plan.
pub fn apply_dynamics(piece: &MidiPiece, intervals: &[DynamicInterval]) -> Result<MidiPiece, ExpressiveError> {
    if !check_tiling(intervals.iter().map(|i| (i.start_tick, i.end_tick)), 0, piece.end_tick()) {
        return Err(ExpressiveError::NonTilingIntervals("dynamics"));
    }
    let mut out = piece.clone();
    for track in &mut out.tracks {
        for event in &mut track.events {
            if let EventKind::NoteOn { velocity, .. } = &mut event.kind {
                *velocity = velocity_at(intervals, event.tick);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tempo::tests::melody;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval(start: u64, end: u64, v: u8, transition_in: Transition) -> DynamicInterval {
        DynamicInterval {
            start_tick: start,
            end_tick: end,
            mark: DynamicMark::from_velocity(v).unwrap(),
            target_velocity: v,
            transition_in,
        }
    }

    #[test]
    fn mark_ranges() {
        assert_eq!(DynamicMark::from_velocity(0), None);
        assert_eq!(DynamicMark::from_velocity(1), Some(DynamicMark::Ppp));
        assert_eq!(DynamicMark::from_velocity(16), Some(DynamicMark::Pp));
        assert_eq!(DynamicMark::from_velocity(79), Some(DynamicMark::Mf));
        assert_eq!(DynamicMark::from_velocity(80), Some(DynamicMark::F));
        assert_eq!(DynamicMark::from_velocity(127), Some(DynamicMark::Fff));
        assert_eq!(DynamicMark::from_velocity(128), None);
        let covered: usize = DynamicMark::ALL.iter().map(|m| m.velocities().count()).sum();
        assert_eq!(covered, 127);
    }

    #[test]
    fn midpoint_of_crescendo() {
        let plan = [
            interval(0, 960, 40, Transition::Abrupt),
            interval(960, 1920, 80, Transition::Gradual { duration_ticks: 480 }),
        ];
        assert_eq!(velocity_at(&plan, 960), 60);
        assert_eq!(velocity_at(&plan, 720), 40);
        assert_eq!(velocity_at(&plan, 1200), 80);
        assert_eq!(velocity_at(&plan, 840), 50);
        assert_eq!(velocity_at(&plan, 100), 40);
        assert_eq!(velocity_at(&plan, 1900), 80);
    }

    #[test]
    fn abrupt_plan_is_piecewise_constant() {
        let piece = melody(480, 8);
        let plan = [
            interval(0, 960, 20, Transition::Abrupt),
            interval(960, 2880, 100, Transition::Abrupt),
            interval(2880, 3840, 64, Transition::Abrupt),
        ];
        let out = apply_dynamics(&piece, &plan).unwrap();
        let v: Vec<u8> = out.tracks[1].notes().iter().map(|n| n.velocity).collect();
        assert_eq!(v, vec![20, 20, 100, 100, 100, 100, 64, 64]);
    }

    #[test]
    fn no_gradual_share_means_abrupt() {
        let params = AnnotationParams { gradual_fraction_range: [0.0, 0.0], ..Default::default() };
        for seed in 0..50 {
            let plan =
                plan_dynamic_intervals(&melody(480, 100), &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(plan.intervals.iter().all(|i| i.transition_in == Transition::Abrupt));
        }
    }

    #[test]
    fn targets_lie_in_mark_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen_mf = 0;
        for _ in 0..200 {
            let plan = plan_dynamic_intervals(&melody(96, 64), &AnnotationParams::default(), &mut rng).unwrap();
            for iv in &plan.intervals {
                assert!(iv.mark.velocities().contains(&iv.target_velocity));
                if iv.mark == DynamicMark::Mf {
                    assert!((64..80).contains(&iv.target_velocity));
                    seen_mf += 1;
                }
            }
        }
        assert!(seen_mf > 0);
    }

    proptest! {
        #[test]
        fn ramps_are_monotone_and_bounded(seed: u64, quarters in 3u64..120) {
            let piece = melody(48, quarters);
            let params = AnnotationParams { gradual_fraction_range: [1.0, 1.0], ..Default::default() };
            let plan = plan_dynamic_intervals(&piece, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let ivs = &plan.intervals;
            for w in ivs.windows(2) {
                let Transition::Gradual { duration_ticks: d } = w[1].transition_in else { continue };
                let shorter = (w[0].end_tick - w[0].start_tick).min(w[1].end_tick - w[1].start_tick);
                prop_assert!(d <= shorter / 2);
                let lo = w[1].start_tick - d / 2;
                let ramp: Vec<u8> = (lo..=lo + d).map(|t| velocity_at(ivs, t)).collect();
                let rising = w[1].target_velocity >= w[0].target_velocity;
                let monotone = ramp.windows(2).all(|p| if rising { p[0] <= p[1] } else { p[0] >= p[1] });
                prop_assert!(monotone);
            }
            let out = apply_dynamics(&piece, ivs).unwrap();
            for (a, b) in out.tracks[1].notes().iter().zip(piece.tracks[1].notes()) {
                prop_assert!((1..=127).contains(&a.velocity));
                prop_assert_eq!((a.onset, a.offset, a.pitch), (b.onset, b.offset, b.pitch));
            }
        }
    }
}
