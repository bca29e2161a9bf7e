//! Corpus-level checks of the SMF reader and writer against event lists
//! dumped by an independent reader (mido, see scripts/dump_reference.py).

mod common;

use orchestrakit::smf::{parse_smf, write_smf, EventKind, MidiPiece};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn describe(kind: &EventKind) -> String {
    match kind {
        EventKind::NoteOn { channel, pitch, velocity } => format!("on {channel} {pitch} {velocity}"),
        EventKind::NoteOff { channel, pitch, velocity } => format!("off {channel} {pitch} {velocity}"),
        EventKind::ControlChange { channel, controller, value } => format!("cc {channel} {controller} {value}"),
        EventKind::ProgramChange { channel, program } => format!("program {channel} {program}"),
        EventKind::SetTempo { micros_per_quarter } => format!("tempo {micros_per_quarter}"),
        EventKind::TrackName(bytes) => format!("name {}", hex(bytes)),
        EventKind::EndOfTrack => "eot".into(),
        EventKind::OtherMeta { meta_type, data } => format!("meta {meta_type} {}", hex(data)),
        EventKind::OtherChannel { status: status @ (0xF0 | 0xF7), data } => {
            // mido drops the framing 0xF7 of a complete sysex message
            let payload = data.strip_suffix(&[0xF7]).unwrap_or(data);
            format!("sysex {status} {}", hex(payload))
        }
        EventKind::OtherChannel { status, data } => format!("chan {status} {}", hex(data)),
    }
}

fn dump(piece: &MidiPiece) -> Vec<String> {
    let mut lines = vec![format!("header {} {}", piece.format.code(), piece.ticks_per_quarter)];
    for (i, track) in piece.tracks.iter().enumerate() {
        lines.push(format!("track {i}"));
        for e in &track.events {
            lines.push(format!("{} {}", e.tick, describe(&e.kind)));
        }
    }
    lines
}

#[test]
fn parser_agrees_with_reference_reader() {
    let corpus = common::corpus();
    assert!(corpus.len() >= 50, "corpus has only {} files", corpus.len());
    for (name, bytes) in &corpus {
        let piece = parse_smf(bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        let expected =
            std::fs::read_to_string(common::data_dir().join("reference").join(format!("{name}.txt"))).unwrap();
        let expected: Vec<&str> = expected.lines().collect();
        let got = dump(&piece);
        assert_eq!(got.len(), expected.len(), "{name}: event count differs");
        for (line, (g, e)) in got.iter().zip(&expected).enumerate() {
            assert_eq!(g, e, "{name}: line {line}");
        }
    }
}

#[test]
fn corpus_round_trip_is_exact_and_canonical() {
    for (name, bytes) in common::corpus() {
        let piece = parse_smf(&bytes).unwrap();
        let written = write_smf(&piece).unwrap_or_else(|e| panic!("{name}: {e}"));
        let reparsed = parse_smf(&written).unwrap();
        assert_eq!(reparsed.ticks_per_quarter, piece.ticks_per_quarter, "{name}");
        assert_eq!(reparsed.tracks.len(), piece.tracks.len(), "{name}");
        for (a, b) in piece.tracks.iter().zip(&reparsed.tracks) {
            let strip = |t: &orchestrakit::smf::Track| {
                t.events.iter().filter(|e| e.kind != EventKind::EndOfTrack).cloned().collect::<Vec<_>>()
            };
            assert_eq!(strip(a), strip(b), "{name}: semantic event list changed");
            assert_eq!(a.end_tick(), b.end_tick(), "{name}");
        }
        assert_eq!(write_smf(&reparsed).unwrap(), written, "{name}: writer is not idempotent");
    }
}
