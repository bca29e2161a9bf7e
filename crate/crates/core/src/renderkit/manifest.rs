use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::expressive::AnnotationPlan;
use crate::gmfix::{InstrumentId, Registry};
use crate::smf::MidiPiece;

/// Instruments rendered into a shared stem, e.g. piccolo into flute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StemGroupRules {
    pub merge: BTreeMap<String, String>,
}

impl Default for StemGroupRules {
    fn default() -> Self {
        let merge = [("violin_i", "violin"), ("violin_ii", "violin"), ("piccolo", "flute"), ("english_horn", "oboe")];
        StemGroupRules { merge: merge.iter().map(|&(a, b)| (a.to_owned(), b.to_owned())).collect() }
    }
}

impl StemGroupRules {
    /// Every merge target must be a registry instrument.
    pub fn validate(&self, registry: &Registry) -> Result<(), RenderError> {
        for (from, to) in &self.merge {
            if registry.get(to).is_none() {
                return Err(RenderError::InvalidRule(format!("{from} -> {to}: unknown target instrument")));
            }
        }
        Ok(())
    }

    pub fn stem_for<'a>(&'a self, instrument: &'a str) -> &'a str {
        self.merge.get(instrument).map_or(instrument, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArticulationCue {
    pub tick: u64,
    pub cc32: u8,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrackEntry {
    pub track_index: usize,
    pub instrument: String,
    pub channel: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StemEntry {
    pub stem: String,
    pub path: String,
    pub tracks: Vec<TrackEntry>,
    /// Articulation changes of all contributing tracks, by tick.
    pub articulations: Vec<ArticulationCue>,
}

/// Everything an external renderer needs for one annotated piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderManifest {
    pub piece_id: String,
    pub midi_path: String,
    pub sample_rate: u32,
    pub channel_layout: &'static str,
    pub ticks_per_quarter: u16,
    /// `(tick, microseconds per quarter)`
    pub tempo_map: Vec<(u64, u32)>,
    pub grouping: StemGroupRules,
    pub stems: Vec<StemEntry>,
}

impl RenderManifest {
    pub fn stem_names(&self) -> BTreeSet<&str> {
        self.stems.iter().map(|s| s.stem.as_str()).collect()
    }
}

/// Groups the note-bearing tracks into stems. `instruments` is aligned with
/// the piece's tracks.
pub fn emit_manifest(
    piece_id: &str,
    piece: &MidiPiece,
    instruments: &[Option<InstrumentId>],
    plan: &AnnotationPlan,
    rules: &StemGroupRules,
    sample_rate: u32,
) -> Result<RenderManifest, RenderError> {
    let mut stems: BTreeMap<String, StemEntry> = BTreeMap::new();
    for (track_index, track) in piece.tracks.iter().enumerate() {
        if !track.has_notes() {
            continue;
        }
        let id = instruments
            .get(track_index)
            .and_then(Option::as_ref)
            .ok_or(RenderError::UngroupableTrack { track_index })?;
        let stem = rules.stem_for(&id.name).to_owned();
        let entry = stems.entry(stem.clone()).or_insert_with(|| StemEntry {
            path: format!("stems/{stem}.wav"),
            stem,
            tracks: Vec::new(),
            articulations: Vec::new(),
        });
        entry.tracks.push(TrackEntry { track_index, instrument: id.name.clone(), channel: track.channel_hint() });
        entry.articulations.extend(
            plan.articulations.iter().filter(|a| a.track_index == track_index).map(|a| ArticulationCue {
                tick: a.start_tick,
                cc32: a.cc32_value,
                name: a.articulation.clone(),
            }),
        );
    }
    let mut stems: Vec<StemEntry> = stems.into_values().collect();
    for s in &mut stems {
        s.articulations.sort_by_key(|c| c.tick);
    }
    Ok(RenderManifest {
        piece_id: piece_id.to_owned(),
        midi_path: format!("{piece_id}.mid"),
        sample_rate,
        channel_layout: "mono",
        ticks_per_quarter: piece.ticks_per_quarter,
        tempo_map: piece.tempo_map().changes(),
        grouping: rules.clone(),
        stems,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressive::{AnnotationMode, AnnotationParams, ArticulationInterval};
    use crate::smf::{Event, EventKind, SmfFormat, Track};
    use proptest::prelude::*;

    fn piece(n: usize) -> MidiPiece {
        let tracks = (0..n)
            .map(|i| {
                let ch = i as u8 % 16;
                Track::new(vec![
                    Event::new(0, EventKind::NoteOn { channel: ch, pitch: 60, velocity: 70 }),
                    Event::new(480, EventKind::NoteOff { channel: ch, pitch: 60, velocity: 0 }),
                ])
            })
            .collect();
        MidiPiece { format: SmfFormat::MultiTrack, ticks_per_quarter: 480, tracks }
    }

    fn plan(articulations: Vec<ArticulationInterval>) -> AnnotationPlan {
        AnnotationPlan {
            mode: AnnotationMode::Proposed,
            seed: 0,
            params: AnnotationParams::default(),
            tempo: vec![],
            dynamics: None,
            articulations,
        }
    }

    fn ids(names: &[&str]) -> Vec<Option<InstrumentId>> {
        let reg = Registry::default();
        names.iter().map(|n| reg.get(n).cloned()).collect()
    }

    #[test]
    fn piccolo_joins_flute() {
        let p = piece(3);
        let m = emit_manifest(
            "x",
            &p,
            &ids(&["flute", "piccolo", "cello"]),
            &plan(vec![]),
            &StemGroupRules::default(),
            22_050,
        )
        .unwrap();
        assert_eq!(m.stem_names(), BTreeSet::from(["cello", "flute"]));
        let flute = m.stems.iter().find(|s| s.stem == "flute").unwrap();
        assert_eq!(flute.tracks.iter().map(|t| t.track_index).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(flute.path, "stems/flute.wav");
    }

    #[test]
    fn single_cello_schedule() {
        let p = piece(1);
        let iv = |s, e, cc, name: &str| ArticulationInterval {
            track_index: 0,
            start_tick: s,
            end_tick: e,
            cc32_value: cc,
            articulation: name.into(),
        };
        let pl = plan(vec![iv(0, 240, 1, "Legato"), iv(240, 480, 15, "Short Staccato")]);
        let m = emit_manifest("x", &p, &ids(&["cello"]), &pl, &StemGroupRules::default(), 22_050).unwrap();
        assert_eq!(m.stems.len(), 1);
        assert_eq!(
            m.stems[0].articulations,
            vec![
                ArticulationCue { tick: 0, cc32: 1, name: "Legato".into() },
                ArticulationCue { tick: 240, cc32: 15, name: "Short Staccato".into() }
            ]
        );
    }

    #[test]
    fn unidentified_track_fails() {
        let err =
            emit_manifest("x", &piece(2), &ids(&["cello", "kazoo"]), &plan(vec![]), &StemGroupRules::default(), 22_050)
                .unwrap_err();
        assert!(matches!(err, RenderError::UngroupableTrack { track_index: 1 }));
    }

    #[test]
    fn rules_validate() {
        let reg = Registry::default();
        StemGroupRules::default().validate(&reg).unwrap();
        let bad = StemGroupRules { merge: BTreeMap::from([("a".into(), "kazoo".into())]) };
        assert!(bad.validate(&reg).is_err());
    }

    proptest! {
        #[test]
        fn stem_count_is_distinct_grouped_instruments(
            picks in proptest::collection::vec(0usize..6, 1..12),
            merges in proptest::collection::vec((0usize..6, 0usize..6), 0..4),
        ) {
            const POOL: [&str; 6] = ["violin", "viola", "cello", "flute", "piccolo", "oboe"];
            let names: Vec<&str> = picks.iter().map(|&i| POOL[i]).collect();
            let rules = StemGroupRules {
                merge: merges.iter().map(|&(a, b)| (POOL[a].to_owned(), POOL[b].to_owned())).collect(),
            };
            let m = emit_manifest("x", &piece(names.len()), &ids(&names), &plan(vec![]), &rules, 22_050).unwrap();
            let expected: BTreeSet<&str> = names.iter().map(|n| rules.stem_for(n)).collect();
            prop_assert_eq!(m.stems.len(), expected.len());
            prop_assert_eq!(m.stem_names(), expected);
            // each note-bearing track appears in exactly one stem
            let mut seen: Vec<usize> = m.stems.iter().flat_map(|s| s.tracks.iter().map(|t| t.track_index)).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..names.len()).collect::<Vec<_>>());
        }
    }
}
