use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tiling::{check_tiling, tile_span};
use super::{AnnotationParams, ExpressiveError};
use crate::gmfix::{InstrumentId, Registry};
use crate::smf::{EventKind, MidiPiece, Track, CC_ARTICULATION, CC_MODULATION};

const STRINGS_TABLE: &str = include_str!("../../data/articulations.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthClass {
    Long,
    Short,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulationRow {
    pub name: String,
    pub cc32: u8,
    /// Normalized probability once loaded.
    pub weight: f64,
    pub length: LengthClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArticulationTable {
    pub instrument: String,
    pub rows: Vec<ArticulationRow>,
}

impl ArticulationTable {
    /// Validates the rows and rescales the weights to sum to one.
    pub fn new(instrument: &str, mut rows: Vec<ArticulationRow>) -> Result<Self, ExpressiveError> {
        let bad = |msg: String| ExpressiveError::InvalidTable { instrument: instrument.to_owned(), msg };
        let mut values = BTreeSet::new();
        for row in &rows {
            if !(1..=127).contains(&row.cc32) {
                return Err(bad(format!("CC#32 value {} of {:?} outside 1..=127", row.cc32, row.name)));
            }
            if !values.insert(row.cc32) {
                return Err(bad(format!("CC#32 value {} used twice", row.cc32)));
            }
            if !(row.weight.is_finite() && row.weight >= 0.0) {
                return Err(bad(format!("weight of {:?} must be finite and non-negative", row.name)));
            }
        }
        let total: f64 = rows.iter().map(|r| r.weight).sum();
        if total <= 0.0 {
            return Err(bad("no articulation has a positive weight".into()));
        }
        for row in &mut rows {
            row.weight /= total;
        }
        Ok(ArticulationTable { instrument: instrument.to_owned(), rows })
    }

    pub fn row_for(&self, cc32: u8) -> Option<&ArticulationRow> {
        self.rows.iter().find(|r| r.cc32 == cc32)
    }

    pub fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.rows.iter().map(|r| r.weight)).expect("validated at construction")
    }
}

#[derive(Deserialize)]
struct TableFile {
    #[serde(default)]
    table: Vec<RawTable>,
}

#[derive(Deserialize)]
struct RawTable {
    instrument: String,
    rows: Vec<ArticulationRow>,
}

/// Articulation tables keyed by canonical instrument name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArticulationTables {
    tables: BTreeMap<String, ArticulationTable>,
}

impl ArticulationTables {
    /// Violin, viola, cello and double bass.
    pub fn strings(registry: &Registry) -> Self {
        let mut t = Self::default();
        t.load_toml(STRINGS_TABLE, registry).expect("bundled articulation tables are valid");
        t
    }

    /// Adds every `[[table]]` of `text`; an instrument may appear only once.
    pub fn load_toml(&mut self, text: &str, registry: &Registry) -> Result<(), ExpressiveError> {
        let file: TableFile = toml::from_str(text).map_err(|e| ExpressiveError::Config(e.to_string()))?;
        for raw in file.table {
            if registry.get(&raw.instrument).is_none() {
                return Err(ExpressiveError::InvalidTable {
                    instrument: raw.instrument,
                    msg: "unknown instrument".into(),
                });
            }
            if self.tables.contains_key(&raw.instrument) {
                return Err(ExpressiveError::InvalidTable { instrument: raw.instrument, msg: "defined twice".into() });
            }
            let table = ArticulationTable::new(&raw.instrument, raw.rows)?;
            self.tables.insert(raw.instrument, table);
        }
        Ok(())
    }

    pub fn get(&self, instrument: &str) -> Option<&ArticulationTable> {
        self.tables.get(instrument)
    }

    pub fn instruments(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticulationInterval {
    pub track_index: usize,
    pub start_tick: u64,
    pub end_tick: u64,
    pub cc32_value: u8,
    pub articulation: String,
}

/// What to do with a note-bearing track whose instrument has no table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingTable {
    #[default]
    Error,
    /// Leave the track without articulation changes.
    Skip,
}

/// `[first onset, last offset)` of a track's notes.
pub fn active_span(track: &Track) -> Option<(u64, u64)> {
    let notes = track.notes();
    let start = notes.iter().map(|n| n.onset).min()?;
    let end = notes.iter().map(|n| n.offset).max()?;
    Some((start, end.max(start + 1)))
}

/// Independent articulation tiling for every note-bearing track.
/// `instruments` gives each track's instrument, as from `Registry::identify_all`.
pub fn plan_articulations<R: Rng + ?Sized>(
    piece: &MidiPiece,
    instruments: &[Option<InstrumentId>],
    tables: &ArticulationTables,
    params: &AnnotationParams,
    missing: MissingTable,
    rng: &mut R,
) -> Result<Vec<ArticulationInterval>, ExpressiveError> {
    params.validate()?;
    let mut out = Vec::new();
    for (track_index, track) in piece.tracks.iter().enumerate() {
        let Some(span) = active_span(track) else { continue };
        let table = match instruments.get(track_index).and_then(Option::as_ref) {
            Some(id) => tables.get(&id.name),
            None => None,
        };
        let Some(table) = table else {
            let name = instruments
                .get(track_index)
                .and_then(Option::as_ref)
                .map_or_else(|| format!("track {track_index}"), |i| i.name.clone());
            match missing {
                MissingTable::Error => return Err(ExpressiveError::MissingTable(name)),
                MissingTable::Skip => continue,
            }
        };
        let sampler = table.sampler();
        // short tracks get as many intervals as their quarter grid allows
        for (start_tick, end_tick) in
            tile_span(span.0, span.1, piece.ticks_per_quarter, params.min_tempo_intervals, false, rng)?
        {
            let row = &table.rows[sampler.sample(rng)];
            out.push(ArticulationInterval {
                track_index,
                start_tick,
                end_tick,
                cc32_value: row.cc32,
                articulation: row.name.clone(),
            });
        }
    }
    Ok(out)
}

/// Inserts a CC#32 event at the start of each interval, ahead of any
/// same-tick note-on, on the track's channel.
pub fn apply_articulations(
    piece: &MidiPiece,
    intervals: &[ArticulationInterval],
) -> Result<MidiPiece, ExpressiveError> {
    let mut per_track: BTreeMap<usize, Vec<&ArticulationInterval>> = BTreeMap::new();
    for iv in intervals {
        per_track.entry(iv.track_index).or_default().push(iv);
    }
    let mut out = piece.clone();
    for (&index, ivs) in &per_track {
        let track = out.tracks.get_mut(index).ok_or(ExpressiveError::NonTilingIntervals("articulation"))?;
        let span = active_span(track).ok_or(ExpressiveError::NonTilingIntervals("articulation"))?;
        if !check_tiling(ivs.iter().map(|i| (i.start_tick, i.end_tick)), span.0, span.1) {
            return Err(ExpressiveError::NonTilingIntervals("articulation"));
        }
        let channel = track.channel_hint().unwrap_or(0);
        for iv in ivs {
            track.insert_before_tick(
                iv.start_tick,
                EventKind::ControlChange { channel, controller: CC_ARTICULATION, value: iv.cc32_value },
            );
        }
    }
    Ok(out)
}

/// For note-ons played under a long articulation, sends the note velocity
/// as CC#1 (modulation) just before the note, since the sample library
/// reads long-note dynamics from the modulation wheel.
pub fn mirror_velocity_to_cc1(
    piece: &MidiPiece,
    instruments: &[Option<InstrumentId>],
    tables: &ArticulationTables,
) -> MidiPiece {
    let mut out = piece.clone();
    for (index, track) in out.tracks.iter_mut().enumerate() {
        let Some(table) = instruments.get(index).and_then(Option::as_ref).and_then(|id| tables.get(&id.name)) else {
            continue;
        };
        let mut current: Option<LengthClass> = None;
        let mut events = Vec::with_capacity(track.events.len());
        for event in track.events.drain(..) {
            match event.kind {
                EventKind::ControlChange { controller: CC_ARTICULATION, value, .. } => {
                    current = table.row_for(value).map(|r| r.length);
                }
                EventKind::NoteOn { channel, velocity, .. } if current == Some(LengthClass::Long) => {
                    events.push(crate::smf::Event::new(
                        event.tick,
                        EventKind::ControlChange { channel, controller: CC_MODULATION, value: velocity },
                    ));
                }
                _ => {}
            }
            events.push(event);
        }
        track.events = events;
    }
    out
}
