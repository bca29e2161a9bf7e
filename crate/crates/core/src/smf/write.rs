use super::vlq::{encode_vlq, VLQ_MAX};
use super::{EventKind, MidiPiece, SmfError, Track};

/// Serializes `piece` in canonical form: full status byte on every channel
/// message, minimal delta-time encoding and a terminating end-of-track meta
/// event on every track (appended at the track's last tick when missing).
pub fn write_smf(piece: &MidiPiece) -> Result<Vec<u8>, SmfError> {
    piece.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&piece.format.code().to_be_bytes());
    out.extend_from_slice(&(piece.tracks.len() as u16).to_be_bytes());
    out.extend_from_slice(&piece.ticks_per_quarter.to_be_bytes());
    for track in &piece.tracks {
        let body = encode_track(track)?;
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
    }
    Ok(out)
}

fn len_vlq(len: usize, out: &mut Vec<u8>) -> Result<(), SmfError> {
    if len > VLQ_MAX as usize {
        return Err(SmfError::VlqOverflow(len as u64));
    }
    encode_vlq(len as u32, out)
}

fn encode_track(track: &Track) -> Result<Vec<u8>, SmfError> {
    let mut out = Vec::new();
    let mut prev = 0u64;
    let mut terminated = false;
    for event in &track.events {
        let delta = event.tick - prev;
        if delta > u64::from(VLQ_MAX) {
            return Err(SmfError::VlqOverflow(delta));
        }
        encode_vlq(delta as u32, &mut out)?;
        prev = event.tick;
        match &event.kind {
            EventKind::NoteOn { channel, pitch, velocity } => {
                out.extend_from_slice(&[0x90 | channel, *pitch, *velocity]);
            }
            EventKind::NoteOff { channel, pitch, velocity } => {
                out.extend_from_slice(&[0x80 | channel, *pitch, *velocity]);
            }
            EventKind::ControlChange { channel, controller, value } => {
                out.extend_from_slice(&[0xB0 | channel, *controller, *value]);
            }
            EventKind::ProgramChange { channel, program } => {
                out.extend_from_slice(&[0xC0 | channel, *program]);
            }
            EventKind::SetTempo { micros_per_quarter } => {
                let b = micros_per_quarter.to_be_bytes();
                out.extend_from_slice(&[0xFF, 0x51, 0x03, b[1], b[2], b[3]]);
            }
            EventKind::TrackName(text) => {
                out.extend_from_slice(&[0xFF, 0x03]);
                len_vlq(text.len(), &mut out)?;
                out.extend_from_slice(text);
            }
            EventKind::EndOfTrack => {
                out.extend_from_slice(&[0xFF, 0x2F, 0x00]);
                terminated = true;
            }
            EventKind::OtherMeta { meta_type, data } => {
                out.extend_from_slice(&[0xFF, *meta_type]);
                len_vlq(data.len(), &mut out)?;
                out.extend_from_slice(data);
            }
            EventKind::OtherChannel { status, data } => {
                out.push(*status);
                if *status == 0xF0 || *status == 0xF7 {
                    len_vlq(data.len(), &mut out)?;
                }
                out.extend_from_slice(data);
            }
        }
    }
    if !terminated {
        out.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
    }
    Ok(out)
}
