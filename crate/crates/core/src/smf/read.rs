use super::vlq::decode_vlq;
use super::{Event, EventKind, MidiPiece, SmfError, SmfFormat, Track};

fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

/// Parses a format 0 or format 1 Standard MIDI File.
///
/// Non-`MTrk` chunks are skipped. Bytes after an end-of-track meta event in
/// a chunk are ignored.
pub fn parse_smf(bytes: &[u8]) -> Result<MidiPiece, SmfError> {
    if bytes.len() < 14 || &bytes[0..4] != b"MThd" {
        return Err(SmfError::MalformedHeader("missing MThd chunk".into()));
    }
    let header_len = be32(&bytes[4..8]) as usize;
    if header_len < 6 || 8 + header_len > bytes.len() {
        return Err(SmfError::MalformedHeader(format!("header length {header_len}")));
    }
    let format = match be16(&bytes[8..10]) {
        0 => SmfFormat::SingleTrack,
        1 => SmfFormat::MultiTrack,
        other => return Err(SmfError::UnsupportedFormat(other)),
    };
    let ntracks = usize::from(be16(&bytes[10..12]));
    let division = be16(&bytes[12..14]);
    if division & 0x8000 != 0 {
        return Err(SmfError::UnsupportedDivision);
    }
    if division == 0 {
        return Err(SmfError::MalformedHeader("zero ticks per quarter".into()));
    }

    let mut pos = 8 + header_len;
    let mut tracks = Vec::with_capacity(ntracks);
    while tracks.len() < ntracks {
        let index = tracks.len();
        if pos + 8 > bytes.len() {
            return Err(SmfError::TruncatedTrack { track: index });
        }
        let id = &bytes[pos..pos + 4];
        let len = be32(&bytes[pos + 4..pos + 8]) as usize;
        let start = pos + 8;
        if len > bytes.len() - start {
            return Err(SmfError::TruncatedTrack { track: index });
        }
        pos = start + len;
        if id != b"MTrk" {
            continue;
        }
        tracks.push(parse_track(&bytes[start..start + len], index)?);
    }
    Ok(MidiPiece { format, ticks_per_quarter: division, tracks })
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    track: usize,
}

impl Cursor<'_> {
    fn byte(&mut self) -> Result<u8, SmfError> {
        let b = *self.data.get(self.pos).ok_or(SmfError::TruncatedTrack { track: self.track })?;
        self.pos += 1;
        Ok(b)
    }

    fn vlq(&mut self) -> Result<u32, SmfError> {
        match decode_vlq(self.data, self.pos) {
            Ok((value, next)) => {
                self.pos = next;
                Ok(value)
            }
            Err(SmfError::UnexpectedEof { .. }) => Err(SmfError::TruncatedTrack { track: self.track }),
            Err(e) => Err(e),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8], SmfError> {
        if n > self.data.len() - self.pos {
            return Err(SmfError::TruncatedTrack { track: self.track });
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
}

fn parse_track(data: &[u8], track: usize) -> Result<Track, SmfError> {
    let mut cur = Cursor { data, pos: 0, track };
    let mut events = Vec::new();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;

    while cur.pos < data.len() {
        tick += u64::from(cur.vlq()?);
        let at = cur.pos;
        let first = cur.byte()?;
        let (status, data1) = if first & 0x80 != 0 {
            (first, None)
        } else {
            match running {
                Some(s) => (s, Some(first)),
                None => return Err(SmfError::MissingStatus { track, offset: at, byte: first }),
            }
        };

        let kind = match status {
            0xFF => {
                let meta_type = cur.byte()?;
                let len = cur.vlq()? as usize;
                let payload = cur.take(len)?;
                match meta_type {
                    0x2F => {
                        events.push(Event::new(tick, EventKind::EndOfTrack));
                        break;
                    }
                    0x03 => EventKind::TrackName(payload.to_vec()),
                    0x51 if len == 3 => EventKind::SetTempo {
                        micros_per_quarter: u32::from_be_bytes([0, payload[0], payload[1], payload[2]]),
                    },
                    _ => EventKind::OtherMeta { meta_type, data: payload.to_vec() },
                }
            }
            0xF0 | 0xF7 => {
                let len = cur.vlq()? as usize;
                EventKind::OtherChannel { status, data: cur.take(len)?.to_vec() }
            }
            0x80..=0xEF => {
                running = Some(status);
                let channel = status & 0x0F;
                let data_byte = |cur: &mut Cursor| -> Result<u8, SmfError> {
                    let offset = cur.pos;
                    let b = cur.byte()?;
                    if b & 0x80 != 0 {
                        return Err(SmfError::InvalidStatus { track, offset, byte: b });
                    }
                    Ok(b)
                };
                let d1 = match data1 {
                    Some(b) => b,
                    None => data_byte(&mut cur)?,
                };
                match status & 0xF0 {
                    0xC0 => EventKind::ProgramChange { channel, program: d1 },
                    0xD0 => EventKind::OtherChannel { status, data: vec![d1] },
                    hi => {
                        let d2 = data_byte(&mut cur)?;
                        match hi {
                            0x80 => EventKind::NoteOff { channel, pitch: d1, velocity: d2 },
                            0x90 if d2 == 0 => EventKind::NoteOff { channel, pitch: d1, velocity: 0 },
                            0x90 => EventKind::NoteOn { channel, pitch: d1, velocity: d2 },
                            0xB0 => EventKind::ControlChange { channel, controller: d1, value: d2 },
                            _ => EventKind::OtherChannel { status, data: vec![d1, d2] },
                        }
                    }
                }
            }
            _ => return Err(SmfError::InvalidStatus { track, offset: at, byte: status }),
        };
        events.push(Event::new(tick, kind));
    }
    Ok(Track { events })
}
