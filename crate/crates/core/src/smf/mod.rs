//! Standard MIDI File (format 0 and 1) reading and writing.
//!
//! Events are held with absolute tick positions. Parsing folds note-on with
//! velocity 0 into [`EventKind::NoteOff`] and keeps every event it does not
//! interpret (sysex, aftertouch, pitch bend, unknown meta) as an opaque
//! payload, so the writer can reproduce it. The writer always emits a
//! canonical form: no running status and minimal-length delta times.

mod read;
mod tempo;
mod vlq;
mod write;

pub use read::parse_smf;
pub use tempo::{tick_to_seconds, TempoMap, DEFAULT_MICROS_PER_QUARTER};
pub use vlq::{decode_vlq, encode_vlq, VLQ_MAX};
pub use write::write_smf;

use thiserror::Error;

/// General MIDI percussion channel (channel 10, zero-based 9).
pub const PERCUSSION_CHANNEL: u8 = 9;

pub const CC_MODULATION: u8 = 1;
pub const CC_EXPRESSION: u8 = 11;
/// Bank select LSB, used by the target sample library to switch articulations.
pub const CC_ARTICULATION: u8 = 32;

#[derive(Debug, Error)]
pub enum SmfError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("track {track} is truncated")]
    TruncatedTrack { track: usize },
    #[error("variable-length quantity at offset {offset} has no terminating byte within 4 bytes")]
    IllegalVlq { offset: usize },
    #[error("unexpected end of data at offset {offset}")]
    UnexpectedEof { offset: usize },
    #[error("unsupported SMF format {0}")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    UnsupportedDivision,
    #[error("track {track}: data byte {byte:#04x} at offset {offset} without a running status")]
    MissingStatus { track: usize, offset: usize, byte: u8 },
    #[error("track {track}: invalid status byte {byte:#04x} at offset {offset}")]
    InvalidStatus { track: usize, offset: usize, byte: u8 },
    #[error("value {0} does not fit in a variable-length quantity")]
    VlqOverflow(u64),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SmfFormat {
    /// Format 0: one multi-channel track.
    SingleTrack,
    /// Format 1: simultaneous tracks sharing the tempo map.
    MultiTrack,
}

impl SmfFormat {
    pub fn code(self) -> u16 {
        match self {
            SmfFormat::SingleTrack => 0,
            SmfFormat::MultiTrack => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    NoteOn {
        channel: u8,
        pitch: u8,
        velocity: u8,
    },
    NoteOff {
        channel: u8,
        pitch: u8,
        velocity: u8,
    },
    ControlChange {
        channel: u8,
        controller: u8,
        value: u8,
    },
    ProgramChange {
        channel: u8,
        program: u8,
    },
    SetTempo {
        micros_per_quarter: u32,
    },
    /// Raw text bytes; SMF does not mandate an encoding.
    TrackName(Vec<u8>),
    EndOfTrack,
    OtherMeta {
        meta_type: u8,
        data: Vec<u8>,
    },
    /// Any other channel message (status carries the channel) or a sysex
    /// block (status 0xF0/0xF7, data is the payload after the length).
    OtherChannel {
        status: u8,
        data: Vec<u8>,
    },
}

impl EventKind {
    pub fn track_name(name: &str) -> Self {
        EventKind::TrackName(name.as_bytes().to_vec())
    }

    pub fn channel(&self) -> Option<u8> {
        match *self {
            EventKind::NoteOn { channel, .. }
            | EventKind::NoteOff { channel, .. }
            | EventKind::ControlChange { channel, .. }
            | EventKind::ProgramChange { channel, .. } => Some(channel),
            EventKind::OtherChannel { status, .. } if (0x80..0xF0).contains(&status) => Some(status & 0x0F),
            _ => None,
        }
    }

    /// Rewrites the channel of a channel-voice message; no-op otherwise.
    pub fn set_channel(&mut self, new: u8) {
        match self {
            EventKind::NoteOn { channel, .. }
            | EventKind::NoteOff { channel, .. }
            | EventKind::ControlChange { channel, .. }
            | EventKind::ProgramChange { channel, .. } => *channel = new,
            EventKind::OtherChannel { status, .. } if (0x80..0xF0).contains(status) => {
                *status = (*status & 0xF0) | (new & 0x0F);
            }
            _ => {}
        }
    }

    pub fn is_note_on(&self) -> bool {
        matches!(self, EventKind::NoteOn { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn new(tick: u64, kind: EventKind) -> Self {
        Event { tick, kind }
    }
}

/// A sounding note recovered from a note-on/note-off pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Note {
    pub onset: u64,
    pub offset: u64,
    pub channel: u8,
    pub pitch: u8,
    pub velocity: u8,
}

impl Note {
    pub fn duration(&self) -> u64 {
        self.offset - self.onset
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Track {
    pub events: Vec<Event>,
}

impl Track {
    pub fn new(events: Vec<Event>) -> Self {
        Track { events }
    }

    /// Raw bytes of the first track-name meta event.
    pub fn name_bytes(&self) -> Option<&[u8]> {
        self.events.iter().find_map(|e| match &e.kind {
            EventKind::TrackName(bytes) => Some(bytes.as_slice()),
            _ => None,
        })
    }

    /// Track name decoded as UTF-8, falling back to Latin-1 for legacy files.
    /// Empty when the track carries no name.
    pub fn name(&self) -> String {
        self.name_bytes().map(decode_text).unwrap_or_default()
    }

    /// Channel of the first channel message, if any.
    pub fn channel_hint(&self) -> Option<u8> {
        self.events.iter().find_map(|e| e.kind.channel())
    }

    /// Program of the first program change, if any.
    pub fn program(&self) -> Option<u8> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::ProgramChange { program, .. } => Some(program),
            _ => None,
        })
    }

    pub fn end_tick(&self) -> u64 {
        self.events.last().map_or(0, |e| e.tick)
    }

    pub fn has_notes(&self) -> bool {
        self.events.iter().any(|e| e.kind.is_note_on())
    }

    /// Pairs note-ons with note-offs, first-in first-out per channel and
    /// pitch. Notes left sounding at the end of the track end at the track's
    /// last tick; stray note-offs are ignored. Sorted by onset, then pitch.
    pub fn notes(&self) -> Vec<Note> {
        let mut open: std::collections::HashMap<(u8, u8), std::collections::VecDeque<(u64, u8)>> =
            std::collections::HashMap::new();
        let mut notes = Vec::new();
        for event in &self.events {
            match event.kind {
                EventKind::NoteOn { channel, pitch, velocity } => {
                    open.entry((channel, pitch)).or_default().push_back((event.tick, velocity));
                }
                EventKind::NoteOff { channel, pitch, .. } => {
                    if let Some((onset, velocity)) = open.get_mut(&(channel, pitch)).and_then(|q| q.pop_front()) {
                        notes.push(Note { onset, offset: event.tick, channel, pitch, velocity });
                    }
                }
                _ => {}
            }
        }
        let end = self.end_tick();
        for ((channel, pitch), queue) in open {
            for (onset, velocity) in queue {
                notes.push(Note { onset, offset: end, channel, pitch, velocity });
            }
        }
        notes.sort();
        notes
    }

    /// Inserts `kind` at `tick` ahead of any events already at that tick.
    /// An end-of-track marker stays last, moving later if needed.
    pub fn insert_before_tick(&mut self, tick: u64, kind: EventKind) {
        let at = self.events.partition_point(|e| e.tick < tick);
        self.insert_at(at, Event::new(tick, kind));
    }

    /// Inserts `kind` at `tick` after any events already at that tick (but
    /// still ahead of an end-of-track marker).
    pub fn insert_after_tick(&mut self, tick: u64, kind: EventKind) {
        let at = self.events.partition_point(|e| e.tick <= tick);
        self.insert_at(at, Event::new(tick, kind));
    }

    fn insert_at(&mut self, mut at: usize, event: Event) {
        if let Some(last) = self.events.last() {
            if last.kind == EventKind::EndOfTrack && at == self.events.len() {
                at -= 1;
                if event.tick > last.tick {
                    let n = self.events.len();
                    self.events[n - 1].tick = event.tick;
                }
            }
        }
        self.events.insert(at, event);
    }
}

pub(crate) fn decode_text(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_owned(),
        Err(_) => bytes.iter().map(|&b| char::from(b)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MidiPiece {
    pub format: SmfFormat,
    pub ticks_per_quarter: u16,
    pub tracks: Vec<Track>,
}

impl MidiPiece {
    pub fn new(ticks_per_quarter: u16) -> Self {
        MidiPiece { format: SmfFormat::MultiTrack, ticks_per_quarter, tracks: Vec::new() }
    }

    /// Last tick of any track.
    pub fn end_tick(&self) -> u64 {
        self.tracks.iter().map(Track::end_tick).max().unwrap_or(0)
    }

    pub fn tempo_map(&self) -> TempoMap {
        TempoMap::from_piece(self)
    }

    pub fn duration_seconds(&self) -> f64 {
        self.tempo_map().seconds(self.end_tick())
    }

    /// Checks every structural invariant the writer relies on.
    pub fn validate(&self) -> Result<(), SmfError> {
        let fail = |msg: String| Err(SmfError::InvariantViolation(msg));
        if self.ticks_per_quarter == 0 || self.ticks_per_quarter > 0x7FFF {
            return fail(format!("ticks per quarter {} out of range", self.ticks_per_quarter));
        }
        if self.format == SmfFormat::SingleTrack && self.tracks.len() != 1 {
            return fail(format!("format 0 requires one track, found {}", self.tracks.len()));
        }
        if self.tracks.len() > usize::from(u16::MAX) {
            return fail("too many tracks".into());
        }
        for (ti, track) in self.tracks.iter().enumerate() {
            let mut prev = 0u64;
            for (ei, event) in track.events.iter().enumerate() {
                if event.tick < prev {
                    return fail(format!("track {ti}: event {ei} at tick {} precedes tick {prev}", event.tick));
                }
                prev = event.tick;
                if let Err(msg) = check_kind(&event.kind) {
                    return fail(format!("track {ti}: event {ei}: {msg}"));
                }
                if event.kind == EventKind::EndOfTrack && ei + 1 != track.events.len() {
                    return fail(format!("track {ti}: end-of-track is not the last event"));
                }
            }
        }
        Ok(())
    }
}

fn check_kind(kind: &EventKind) -> Result<(), String> {
    let seven = |name: &str, v: u8| if v > 0x7F { Err(format!("{name} {v} exceeds 127")) } else { Ok(()) };
    let chan = |c: u8| if c > 15 { Err(format!("channel {c} exceeds 15")) } else { Ok(()) };
    match *kind {
        EventKind::NoteOn { channel, pitch, velocity } => {
            chan(channel)?;
            seven("pitch", pitch)?;
            seven("velocity", velocity)?;
            if velocity == 0 {
                return Err("note-on with velocity 0 must be a note-off".into());
            }
            Ok(())
        }
        EventKind::NoteOff { channel, pitch, velocity } => {
            chan(channel)?;
            seven("pitch", pitch)?;
            seven("velocity", velocity)
        }
        EventKind::ControlChange { channel, controller, value } => {
            chan(channel)?;
            seven("controller", controller)?;
            seven("value", value)
        }
        EventKind::ProgramChange { channel, program } => {
            chan(channel)?;
            seven("program", program)
        }
        EventKind::SetTempo { micros_per_quarter } => {
            if micros_per_quarter == 0 || micros_per_quarter > 0xFF_FFFF {
                Err(format!("tempo {micros_per_quarter} outside 1..=16777215"))
            } else {
                Ok(())
            }
        }
        EventKind::TrackName(_) | EventKind::EndOfTrack => Ok(()),
        EventKind::OtherMeta { meta_type, ref data } => match meta_type {
            0x03 | 0x2F => Err(format!("meta type {meta_type:#04x} has a dedicated kind")),
            0x51 if data.len() == 3 => Err("3-byte tempo meta must be SetTempo".into()),
            0x80.. => Err(format!("meta type {meta_type:#04x} exceeds 0x7F")),
            _ => Ok(()),
        },
        EventKind::OtherChannel { status, ref data } => match status & 0xF0 {
            0xA0 | 0xB0 | 0xE0 if status < 0xF0 => {
                if status & 0xF0 == 0xB0 {
                    return Err("control change must use ControlChange".into());
                }
                if data.len() != 2 || data.iter().any(|&b| b > 0x7F) {
                    return Err(format!("status {status:#04x} needs two 7-bit data bytes"));
                }
                Ok(())
            }
            0xD0 => {
                if data.len() != 1 || data[0] > 0x7F {
                    return Err(format!("status {status:#04x} needs one 7-bit data byte"));
                }
                Ok(())
            }
            0xF0 if status == 0xF0 || status == 0xF7 => Ok(()),
            _ => Err(format!("status {status:#04x} is not an opaque channel message or sysex")),
        },
    }
}
