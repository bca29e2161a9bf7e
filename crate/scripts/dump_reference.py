#!/usr/bin/env python3
"""Dump every corpus file's event list with mido, an independent SMF reader.

One text file per MIDI file under crates/core/tests/data/reference/:

    header <format> <ticks_per_quarter>
    track <index>
    <abs_tick> <kind> <args...>

kinds: on/off <ch> <pitch> <vel>, cc <ch> <ctrl> <val>, program <ch> <prog>,
tempo <us>, name <hex>, eot, meta <type> <hex>, chan <status> <hex>,
sysex <status> <hex>.  A note-on with velocity 0 is written as `off`.
"""

import pathlib

import mido

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "tests" / "data"


def vlq_len(data):
    n = 0
    for b in data:
        n += 1
        if b < 0x80:
            return n
    raise ValueError("bad vlq")


def describe(msg):
    if msg.is_meta:
        raw = bytes(msg.bytes())
        mtype = raw[1]
        payload = raw[2 + vlq_len(raw[2:]):]
        if msg.type == "set_tempo":
            return f"tempo {msg.tempo}"
        if msg.type == "track_name":
            return f"name {payload.hex()}"
        if msg.type == "end_of_track":
            return "eot"
        return f"meta {mtype} {payload.hex()}"
    if msg.type == "sysex":
        return f"sysex 240 {bytes(msg.data).hex()}"
    if msg.type == "note_on" and msg.velocity == 0:
        return f"off {msg.channel} {msg.note} 0"
    if msg.type == "note_on":
        return f"on {msg.channel} {msg.note} {msg.velocity}"
    if msg.type == "note_off":
        return f"off {msg.channel} {msg.note} {msg.velocity}"
    if msg.type == "control_change":
        return f"cc {msg.channel} {msg.control} {msg.value}"
    if msg.type == "program_change":
        return f"program {msg.channel} {msg.program}"
    raw = bytes(msg.bytes())
    return f"chan {raw[0]} {raw[1:].hex()}"


def main():
    out_dir = DATA / "reference"
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted((DATA / "corpus").glob("*.mid")):
        mid = mido.MidiFile(path)
        lines = [f"header {mid.type} {mid.ticks_per_beat}"]
        for i, track in enumerate(mid.tracks):
            lines.append(f"track {i}")
            tick = 0
            for msg in track:
                tick += msg.time
                lines.append(f"{tick} {describe(msg)}")
        (out_dir / (path.stem + ".txt")).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
