use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::smf::{Track, PERCUSSION_CHANNEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Strings,
    Woodwinds,
    Brass,
    Percussion,
    Keyboard,
    Vocal,
    Other,
}

/// General MIDI sound assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GmProgram {
    Melodic(u8),
    /// Plays on the percussion channel; the program number is irrelevant.
    Percussion,
}

/// A canonical instrument, ordered by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstrumentId {
    pub name: String,
    pub program: GmProgram,
    pub family: Family,
}

impl InstrumentId {
    pub fn new(name: &str, program: GmProgram, family: Family) -> Self {
        InstrumentId { name: name.to_owned(), program, family }
    }

    pub fn is_percussion(&self) -> bool {
        self.program == GmProgram::Percussion
    }
}

impl fmt::Display for InstrumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for InstrumentId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

pub const UNTUNED_PERCUSSION: &str = "untuned_percussion";

use Family::*;
use GmProgram::{Melodic, Percussion as PercussionChannel};

const ORCHESTRAL: &[(&str, GmProgram, Family)] = &[
    ("violin", Melodic(40), Strings),
    ("viola", Melodic(41), Strings),
    ("cello", Melodic(42), Strings),
    ("contrabass", Melodic(43), Strings),
    ("harp", Melodic(46), Percussion),
    ("timpani", Melodic(47), Percussion),
    ("trumpet", Melodic(56), Brass),
    ("trombone", Melodic(57), Brass),
    ("tuba", Melodic(58), Brass),
    ("french_horn", Melodic(60), Brass),
    ("oboe", Melodic(68), Woodwinds),
    ("english_horn", Melodic(69), Woodwinds),
    ("bassoon", Melodic(70), Woodwinds),
    ("clarinet", Melodic(71), Woodwinds),
    ("piccolo", Melodic(72), Woodwinds),
    ("flute", Melodic(73), Woodwinds),
    (UNTUNED_PERCUSSION, PercussionChannel, Percussion),
];

// Known instruments outside the synthesizable orchestra. Mapping a name to
// one of these identifies the track so that filtering can discard the piece.
const NON_TARGET: &[(&str, GmProgram, Family)] = &[
    ("piano", Melodic(0), Keyboard),
    ("harpsichord", Melodic(6), Keyboard),
    ("celesta", Melodic(8), Keyboard),
    ("glockenspiel", Melodic(9), Other),
    ("xylophone", Melodic(13), Other),
    ("organ", Melodic(19), Keyboard),
    ("accordion", Melodic(21), Keyboard),
    ("guitar", Melodic(24), Other),
    ("string_ensemble", Melodic(48), Strings),
    ("voice", Melodic(52), Vocal),
    ("soprano_saxophone", Melodic(64), Woodwinds),
    ("alto_saxophone", Melodic(65), Woodwinds),
    ("tenor_saxophone", Melodic(66), Woodwinds),
    ("baritone_saxophone", Melodic(67), Woodwinds),
    ("recorder", Melodic(74), Woodwinds),
];

/// Every instrument the toolkit can identify, with a designated target
/// subset (the instruments a corpus piece may contain).
#[derive(Debug, Clone)]
pub struct Registry {
    by_name: BTreeMap<String, InstrumentId>,
    by_program: BTreeMap<GmProgram, InstrumentId>,
    targets: BTreeSet<String>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut by_name = BTreeMap::new();
        let mut by_program = BTreeMap::new();
        for &(name, program, family) in ORCHESTRAL.iter().chain(NON_TARGET) {
            let id = InstrumentId::new(name, program, family);
            by_program.insert(program, id.clone());
            by_name.insert(name.to_owned(), id);
        }
        debug_assert_eq!(by_program.len(), by_name.len(), "GM programs must be unique");
        let targets = ORCHESTRAL.iter().map(|&(n, _, _)| n.to_owned()).collect();
        Registry { by_name, by_program, targets }
    }
}

impl Registry {
    pub fn get(&self, name: &str) -> Option<&InstrumentId> {
        self.by_name.get(name)
    }

    pub fn instruments(&self) -> impl Iterator<Item = &InstrumentId> {
        self.by_name.values()
    }

    /// Names of the default target instruments.
    pub fn default_targets(&self) -> &BTreeSet<String> {
        &self.targets
    }

    pub fn by_program(&self, program: GmProgram) -> Option<&InstrumentId> {
        self.by_program.get(&program)
    }

    /// Identifies the instrument of a GM-fixed track from its channel and
    /// program. Tracks without notes yield `None`.
    pub fn identify(&self, track: &Track) -> Option<InstrumentId> {
        if !track.has_notes() {
            return None;
        }
        if track.channel_hint() == Some(PERCUSSION_CHANNEL) {
            return self.by_program(GmProgram::Percussion).cloned();
        }
        self.by_program(GmProgram::Melodic(track.program()?)).cloned()
    }

    pub fn identify_all(&self, piece: &crate::smf::MidiPiece) -> Vec<Option<InstrumentId>> {
        piece.tracks.iter().map(|t| self.identify(t)).collect()
    }
}
