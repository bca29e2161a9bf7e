//! General MIDI standardization of raw corpus files: instrument naming,
//! program/channel assignment, expressive normalization, corpus filtering
//! and duplicate removal.

mod dictionary;
mod registry;

pub use dictionary::{map_instrument, normalize_name, InstrumentDictionary};
pub use registry::{Family, GmProgram, InstrumentId, Registry, UNTUNED_PERCUSSION};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::smf::{
    EventKind, MidiPiece, SmfError, Track, CC_ARTICULATION, CC_EXPRESSION, CC_MODULATION, DEFAULT_MICROS_PER_QUARTER,
    PERCUSSION_CHANNEL,
};

/// Velocity every note receives during normalization.
pub const NEUTRAL_VELOCITY: u8 = 75;

#[derive(Debug, Error)]
pub enum GmFixError {
    #[error("dictionary: {0}")]
    Dictionary(String),
    #[error("dictionary key {0:?} appears twice after normalization")]
    DuplicateKey(String),
    #[error("unknown instrument {0:?}")]
    UnknownInstrument(String),
    #[error(transparent)]
    Smf(#[from] SmfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnmappedReason {
    EmptyName,
    UnknownName,
    /// The track plays on several channels, so one program cannot describe it.
    MultiChannel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmappedTrack {
    pub track_index: usize,
    pub raw_name: String,
    pub reason: UnmappedReason,
}

#[derive(Debug, Clone)]
pub struct FixOutcome {
    pub piece: MidiPiece,
    /// Instrument per track; `None` for silent or unmapped tracks.
    pub instruments: Vec<Option<InstrumentId>>,
    pub unmapped: Vec<UnmappedTrack>,
}

impl FixOutcome {
    /// Every note-bearing track was identified.
    pub fn is_complete(&self) -> bool {
        self.unmapped.is_empty()
    }
}

fn channels_used(track: &Track) -> BTreeSet<u8> {
    track.events.iter().filter_map(|e| e.kind.channel()).collect()
}

/// Assigns each note-bearing track a canonical instrument from its name (or
/// untuned percussion when it plays on the percussion channel), then gives
/// each distinct instrument its own channel and its GM program.
///
/// Unmapped tracks are left untouched and reported.
pub fn fix_piece(piece: &MidiPiece, dict: &InstrumentDictionary, registry: &Registry) -> FixOutcome {
    let mut instruments = Vec::with_capacity(piece.tracks.len());
    let mut unmapped = Vec::new();
    for (i, track) in piece.tracks.iter().enumerate() {
        if !track.has_notes() {
            instruments.push(None);
            continue;
        }
        let raw_name = track.name();
        let channels = channels_used(track);
        let resolved = if channels.len() > 1 {
            Err(UnmappedReason::MultiChannel)
        } else if channels.contains(&PERCUSSION_CHANNEL) {
            Ok(registry.get(UNTUNED_PERCUSSION).cloned().expect("registry has untuned percussion"))
        } else if normalize_name(&raw_name).is_empty() {
            Err(UnmappedReason::EmptyName)
        } else {
            map_instrument(&raw_name, dict).ok_or(UnmappedReason::UnknownName)
        };
        match resolved {
            Ok(id) => instruments.push(Some(id)),
            Err(reason) => {
                unmapped.push(UnmappedTrack { track_index: i, raw_name, reason });
                instruments.push(None);
            }
        }
    }

    // one channel per distinct instrument, in order of first appearance
    let mut free = (0u8..16).filter(|&c| c != PERCUSSION_CHANNEL).cycle();
    let mut channel_of: HashMap<&str, u8> = HashMap::new();
    for id in instruments.iter().flatten() {
        if !channel_of.contains_key(id.name.as_str()) {
            let ch = if id.is_percussion() { PERCUSSION_CHANNEL } else { free.next().unwrap() };
            channel_of.insert(&id.name, ch);
        }
    }

    let mut fixed = piece.clone();
    for (track, id) in fixed.tracks.iter_mut().zip(&instruments) {
        let Some(id) = id else { continue };
        let channel = channel_of[id.name.as_str()];
        track.events.retain(|e| !matches!(e.kind, EventKind::ProgramChange { .. }));
        for event in &mut track.events {
            event.kind.set_channel(channel);
        }
        if let GmProgram::Melodic(program) = id.program {
            // after leading metas at tick 0, before the first channel message
            let at = track
                .events
                .iter()
                .position(|e| e.tick > 0 || e.kind.channel().is_some() || e.kind == EventKind::EndOfTrack)
                .unwrap_or(track.events.len());
            track.events.insert(at, crate::smf::Event::new(0, EventKind::ProgramChange { channel, program }));
        }
    }
    FixOutcome { piece: fixed, instruments, unmapped }
}

/// Resets expressiveness to a neutral baseline: every note-on gets
/// velocity 75, the tempo map becomes a single 120 BPM event at tick 0 and
/// all modulation, expression and articulation controllers are dropped.
pub fn normalize(piece: &MidiPiece) -> Result<MidiPiece, SmfError> {
    piece.validate()?;
    let mut out = piece.clone();
    for track in &mut out.tracks {
        track.events.retain(|e| match e.kind {
            EventKind::SetTempo { .. } => false,
            EventKind::ControlChange { controller, .. } => {
                !matches!(controller, CC_MODULATION | CC_EXPRESSION | CC_ARTICULATION)
            }
            _ => true,
        });
        for event in &mut track.events {
            if let EventKind::NoteOn { velocity, .. } = &mut event.kind {
                *velocity = NEUTRAL_VELOCITY;
            }
        }
    }
    if out.tracks.is_empty() {
        out.tracks.push(Track::default());
    }
    out.tracks[0]
        .events
        .insert(0, crate::smf::Event::new(0, EventKind::SetTempo { micros_per_quarter: DEFAULT_MICROS_PER_QUARTER }));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    NoInstruments,
    UnidentifiedTrack,
    NonTargetInstrument,
    Monotimbral,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub kept: Vec<(String, MidiPiece)>,
    pub removed: Vec<(String, RemovalReason)>,
}

/// Instrument set of a GM-fixed piece, or the reason it has none usable.
fn instrument_set(piece: &MidiPiece, registry: &Registry) -> Result<BTreeSet<String>, RemovalReason> {
    let mut set = BTreeSet::new();
    for track in piece.tracks.iter().filter(|t| t.has_notes()) {
        match registry.identify(track) {
            Some(id) => {
                set.insert(id.name);
            }
            None => return Err(RemovalReason::UnidentifiedTrack),
        }
    }
    Ok(set)
}

/// Keeps the pieces whose instruments are all in `targets` and that use at
/// least two distinct instruments. Input order is preserved.
pub fn filter_corpus(
    pieces: Vec<(String, MidiPiece)>,
    registry: &Registry,
    targets: &BTreeSet<String>,
) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (id, piece) in pieces {
        let verdict = instrument_set(&piece, registry).and_then(|set| {
            if set.is_empty() {
                Err(RemovalReason::NoInstruments)
            } else if !set.is_subset(targets) {
                Err(RemovalReason::NonTargetInstrument)
            } else if set.len() < 2 {
                Err(RemovalReason::Monotimbral)
            } else {
                Ok(())
            }
        });
        match verdict {
            Ok(()) => kept.push((id, piece)),
            Err(reason) => removed.push((id, reason)),
        }
    }
    FilterOutcome { kept, removed }
}

/// Order- and metadata-invariant content hash: SHA-256 over the sorted
/// multiset of (onset, duration, pitch, instrument) note tuples.
pub fn fingerprint(piece: &MidiPiece, registry: &Registry) -> String {
    let mut tuples: Vec<(u64, u64, u8, String)> = Vec::new();
    for track in &piece.tracks {
        let instrument = match registry.identify(track) {
            Some(id) => id.name,
            None => format!("program:{:?}", track.program()),
        };
        for note in track.notes() {
            tuples.push((note.onset, note.duration(), note.pitch, instrument.clone()));
        }
    }
    tuples.sort();
    let mut hasher = Sha256::new();
    hasher.update(piece.ticks_per_quarter.to_be_bytes());
    for (onset, duration, pitch, instrument) in &tuples {
        hasher.update(onset.to_be_bytes());
        hasher.update(duration.to_be_bytes());
        hasher.update([*pitch]);
        hasher.update(instrument.as_bytes());
        hasher.update([0]);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct DedupeOutcome {
    pub kept: Vec<(String, MidiPiece)>,
    /// (kept_id, removed_id) pairs.
    pub duplicates: Vec<(String, String)>,
}

/// Keeps the first piece of each fingerprint.
pub fn dedupe(pieces: Vec<(String, MidiPiece)>, registry: &Registry) -> DedupeOutcome {
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut kept = Vec::new();
    let mut duplicates = Vec::new();
    for (id, piece) in pieces {
        let fp = fingerprint(&piece, registry);
        match seen.get(&fp) {
            Some(first) => duplicates.push((first.clone(), id)),
            None => {
                seen.insert(fp, id.clone());
                kept.push((id, piece));
            }
        }
    }
    DedupeOutcome { kept, duplicates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smf::{Event, SmfFormat};

    fn part(name: &str, channel: u8, program: u8, notes: &[(u64, u64, u8, u8)]) -> Track {
        let mut t = Track::default();
        if !name.is_empty() {
            t.events.push(Event::new(0, EventKind::track_name(name)));
        }
        t.events.push(Event::new(0, EventKind::ProgramChange { channel, program }));
        let mut evs = Vec::new();
        for &(on, off, pitch, velocity) in notes {
            evs.push(Event::new(on, EventKind::NoteOn { channel, pitch, velocity }));
            evs.push(Event::new(off, EventKind::NoteOff { channel, pitch, velocity: 0 }));
        }
        evs.sort_by_key(|e| e.tick);
        t.events.extend(evs);
        let end = t.end_tick();
        t.events.push(Event::new(end, EventKind::EndOfTrack));
        t
    }

    fn piece(tracks: Vec<Track>) -> MidiPiece {
        MidiPiece { format: SmfFormat::MultiTrack, ticks_per_quarter: 480, tracks }
    }

    fn fixed(names: &[&str]) -> MidiPiece {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        let tracks =
            names.iter().enumerate().map(|(i, n)| part(n, (i % 9) as u8, 0, &[(0, 480, 60 + i as u8, 90)])).collect();
        fix_piece(&piece(tracks), &dict, &reg).piece
    }

    #[test]
    fn fix_assigns_programs_and_channels() {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        let raw = piece(vec![
            Track::new(vec![Event::new(0, EventKind::SetTempo { micros_per_quarter: 600_000 })]),
            part("Violin I", 0, 0, &[(0, 10, 60, 80)]),
            part("Violin II", 0, 0, &[(0, 10, 64, 80)]),
            part("Violoncelle", 0, 0, &[(0, 10, 48, 80)]),
            part("Mystery", 3, 7, &[(0, 10, 50, 80)]),
            part("Bongos", 9, 0, &[(0, 10, 38, 80)]),
        ]);
        let out = fix_piece(&raw, &dict, &reg);
        let names: Vec<_> = out.instruments.iter().map(|i| i.as_ref().map(|i| i.name.as_str())).collect();
        assert_eq!(names, vec![None, Some("violin"), Some("violin"), Some("cello"), None, Some(UNTUNED_PERCUSSION)]);
        assert_eq!(
            out.unmapped,
            vec![UnmappedTrack { track_index: 4, raw_name: "Mystery".into(), reason: UnmappedReason::UnknownName }]
        );
        assert!(!out.is_complete());
        let t = &out.piece.tracks;
        assert_eq!((t[1].program(), t[1].channel_hint()), (Some(40), Some(0)));
        assert_eq!((t[2].program(), t[2].channel_hint()), (Some(40), Some(0)));
        assert_eq!((t[3].program(), t[3].channel_hint()), (Some(42), Some(1)));
        assert_eq!((t[4].program(), t[4].channel_hint()), (Some(7), Some(3)));
        assert_eq!(t[5].channel_hint(), Some(PERCUSSION_CHANNEL));
        // program 7 is not a registry instrument
        assert_eq!(reg.identify_all(&out.piece).iter().flatten().count(), 4);
        out.piece.validate().unwrap();
        // notes untouched
        for (a, b) in raw.tracks.iter().zip(&out.piece.tracks) {
            let strip = |t: &Track| t.notes().iter().map(|n| (n.onset, n.offset, n.pitch)).collect::<Vec<_>>();
            assert_eq!(strip(a), strip(b));
        }
    }

    #[test]
    fn percussion_channel_wins_over_name() {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        let out = fix_piece(&piece(vec![part("Violin", 9, 40, &[(0, 10, 38, 80)])]), &dict, &reg);
        assert_eq!(out.instruments[0].as_ref().unwrap().name, UNTUNED_PERCUSSION);
    }

    #[test]
    fn named_part_on_percussion_channel() {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        let mut raw = piece(vec![part("Viola", 9, 0, &[(0, 10, 60, 80)])]);
        let out = fix_piece(&raw, &dict, &reg);
        assert!(out.instruments[0].as_ref().unwrap().is_percussion());
        raw.tracks[0] = part("Viola", 4, 0, &[(0, 10, 60, 80)]);
        let out = fix_piece(&raw, &dict, &reg);
        assert_eq!(out.piece.tracks[0].channel_hint(), Some(0));
    }

    #[test]
    fn multichannel_track_is_unmapped() {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        let mut t = part("Violin", 0, 40, &[(0, 10, 60, 80)]);
        t.insert_before_tick(5, EventKind::NoteOn { channel: 2, pitch: 70, velocity: 9 });
        let out = fix_piece(&piece(vec![t]), &dict, &reg);
        assert_eq!(out.unmapped[0].reason, UnmappedReason::MultiChannel);
    }

    #[test]
    fn normalize_examples() {
        let mut p = piece(vec![
            Track::new(vec![
                Event::new(0, EventKind::SetTempo { micros_per_quarter: 666_667 }),
                Event::new(960, EventKind::SetTempo { micros_per_quarter: 428_571 }),
            ]),
            part("Violin", 0, 40, &[(0, 480, 60, 30), (480, 960, 62, 75), (960, 1440, 64, 127)]),
        ]);
        p.tracks[1].insert_before_tick(0, EventKind::ControlChange { channel: 0, controller: 1, value: 3 });
        p.tracks[1].insert_before_tick(0, EventKind::ControlChange { channel: 0, controller: 7, value: 100 });
        p.tracks[1].insert_before_tick(0, EventKind::ControlChange { channel: 0, controller: 32, value: 4 });
        let n = normalize(&p).unwrap();
        let vels: Vec<u8> = n.tracks[1].notes().iter().map(|x| x.velocity).collect();
        assert_eq!(vels, vec![75, 75, 75]);
        let tempi: Vec<(u64, u32)> = n.tempo_map().changes();
        assert_eq!(tempi, vec![(0, 500_000)]);
        let tempo_events =
            n.tracks.iter().flat_map(|t| &t.events).filter(|e| matches!(e.kind, EventKind::SetTempo { .. })).count();
        assert_eq!(tempo_events, 1);
        let ccs: Vec<u8> = n.tracks[1]
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::ControlChange { controller, .. } => Some(controller),
                _ => None,
            })
            .collect();
        assert_eq!(ccs, vec![7]);
        assert_eq!(normalize(&n).unwrap(), n);
        let strip = |t: &Track| t.notes().iter().map(|x| (x.onset, x.offset, x.pitch)).collect::<Vec<_>>();
        assert_eq!(strip(&p.tracks[1]), strip(&n.tracks[1]));
    }

    #[test]
    fn normalize_rejects_malformed() {
        let p =
            piece(vec![Track::new(vec![Event::new(5, EventKind::EndOfTrack), Event::new(0, EventKind::EndOfTrack)])]);
        assert!(normalize(&p).is_err());
    }

    #[test]
    fn filter_examples() {
        let reg = Registry::default();
        let targets = reg.default_targets().clone();
        let pieces = vec![
            ("vocal".to_string(), fixed(&["Violin", "Soprano"])),
            ("mono".to_string(), fixed(&["Violin", "Violin II"])),
            ("duo".to_string(), fixed(&["Violin", "Cello"])),
            ("empty".to_string(), piece(vec![Track::default()])),
        ];
        let out = filter_corpus(pieces, &reg, &targets);
        assert_eq!(out.kept.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(), vec!["duo"]);
        assert_eq!(
            out.removed,
            vec![
                ("vocal".to_string(), RemovalReason::NonTargetInstrument),
                ("mono".to_string(), RemovalReason::Monotimbral),
                ("empty".to_string(), RemovalReason::NoInstruments),
            ]
        );
    }

    #[test]
    fn dedupe_examples() {
        let reg = Registry::default();
        let a = fixed(&["Violin", "Cello"]);
        let mut reordered = a.clone();
        reordered.tracks.reverse();
        for t in &mut reordered.tracks {
            t.events.retain(|e| !matches!(e.kind, EventKind::TrackName(_)));
            t.events.insert(0, Event::new(0, EventKind::track_name("renamed")));
        }
        let mut transposed = a.clone();
        for t in &mut transposed.tracks {
            for e in &mut t.events {
                if let EventKind::NoteOn { pitch, .. } | EventKind::NoteOff { pitch, .. } = &mut e.kind {
                    *pitch += 1;
                }
            }
        }
        assert_eq!(fingerprint(&a, &reg), fingerprint(&reordered, &reg));
        assert_ne!(fingerprint(&a, &reg), fingerprint(&transposed, &reg));
        let out = dedupe(
            vec![
                ("a".into(), a.clone()),
                ("a_copy".into(), a),
                ("reordered".into(), reordered),
                ("transposed".into(), transposed),
            ],
            &reg,
        );
        assert_eq!(out.kept.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(), vec!["a", "transposed"]);
        assert_eq!(out.duplicates, vec![("a".into(), "a_copy".into()), ("a".into(), "reordered".into())]);
    }
}
