#!/usr/bin/env python3
"""Assemble the public-domain MIDI test corpus under crates/core/tests/data/corpus.

Sources (all redistributable):
  * music21's MIDI parser test files (BSD licensed test fixtures)
  * Bach chorales and string quartet movements from the music21 corpus
    (public-domain scores), exported to MIDI and re-labelled with orchestral
    instrument names in several languages so the GM-fixing dictionary has
    realistic raw names to work on.

The output is deterministic for a given music21/mido version.
Requires: music21, mido.
"""

import pathlib
import random
import shutil

import mido
import music21
from music21 import corpus

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "crates" / "core" / "tests" / "data" / "corpus"
M21 = pathlib.Path(music21.__file__).parent

# raw track names, one list per ensemble; the list is cycled over parts
ENSEMBLES = [
    ["Violin I", "Violin II", "Viola", "Violoncello", "Contrabass"],
    ["Flute", "Oboe", "Clarinet in Bb", "Bassoon", "Bassoon"],
    ["Trumpet in C", "Horn in F", "Trombone", "Tuba", "Timpani"],
    ["Flauto", "Oboe", "Viola", "Violoncello", "Contrabbasso"],
    ["Soprano", "Violin", "Viola", "Violoncello", "Contrabass"],
    ["Violine 1", "Violine 2", "Bratsche", "Violoncello", "Kontrabass"],
    ["Flûte", "Hautbois", "Clarinette", "Basson", "Cor anglais"],
    ["Violin", "Violin", "Violin", "Violin", "Violin"],
    ["Piccolo", "Flute", "English Horn", "Oboe", "Harp"],
    ["French Horn", "Trumpet", "Clarinet", "Bassoon", "Timpani"],
    ["Violini I", "Violini II", "Viole", "Violoncelli", "Contrabbassi"],
    ["Piano", "Violin", "Viola", "Violoncello", "Contrabass"],
]

QUARTETS = [
    "haydn/opus74no1/movement3",
    "mozart/k155/movement2",
    "mozart/k156/movement3",
    "mozart/k80/movement3",
    "haydn/opus1no1/movement3",
    "mozart/k458/movement3",
    "beethoven/opus18no1/movement3",
]

N_CHORALES = 36


def relabel(path, names, rng, *, scramble_velocity, extra_tempi, break_programs):
    mid = mido.MidiFile(path)
    part_tracks = [t for t in mid.tracks if any(m.type == "note_on" for m in t)]
    for i, track in enumerate(part_tracks):
        name = names[i % len(names)]
        for j, msg in enumerate(track):
            if msg.type == "track_name":
                track[j] = msg.copy(name=name)
            elif msg.type == "note_on" and msg.velocity > 0 and scramble_velocity:
                track[j] = msg.copy(velocity=rng.randint(20, 127))
            elif msg.type == "program_change" and break_programs:
                track[j] = msg.copy(program=0)
        if not any(m.type == "track_name" for m in track):
            track.insert(0, mido.MetaMessage("track_name", name=name, time=0))
    if extra_tempi and mid.tracks:
        conductor = mid.tracks[0]
        # insert a couple of tempo changes at quarter-note positions
        total = max(sum(m.time for m in t) for t in mid.tracks)
        ticks = sorted(rng.sample(range(1, max(2, total // mid.ticks_per_beat)), 2))
        absolute = []
        t = 0
        for m in conductor:
            t += m.time
            absolute.append((t, m))
        for q in ticks:
            absolute.append((q * mid.ticks_per_beat, mido.MetaMessage("set_tempo", tempo=rng.choice([400000, 600000, 750000]))))
        absolute.sort(key=lambda p: (p[1].type == "end_of_track", p[0]))
        if absolute[-1][1].type == "end_of_track":
            absolute[-1] = (max(absolute[-1][0], absolute[-2][0]), absolute[-1][1])
        conductor.clear()
        prev = 0
        for t, m in absolute:
            conductor.append(m.copy(time=t - prev))
            prev = t
    mid.save(path)


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    OUT.mkdir(parents=True)
    rng = random.Random(20240917)

    for src in sorted((M21 / "midi" / "testPrimitive").glob("*.mid")):
        shutil.copy(src, OUT / f"m21_{src.name}")
    for src in sorted((M21 / "omr").glob("*.mid")):
        shutil.copy(src, OUT / f"m21_{src.name}")

    chorales = sorted(str(p) for p in corpus.getComposer("bach") if str(p).endswith(".mxl"))
    for i, path in enumerate(chorales[:N_CHORALES]):
        stem = pathlib.Path(path).stem.replace(".", "_")
        out = OUT / f"chorale_{stem}.mid"
        corpus.parse(path).write("midi", fp=str(out))
        relabel(
            out,
            ENSEMBLES[i % len(ENSEMBLES)],
            rng,
            scramble_velocity=i % 3 == 1,
            extra_tempi=i % 4 == 2,
            break_programs=i % 5 == 3,
        )

    for q in QUARTETS:
        stem = q.replace("/", "_")
        out = OUT / f"quartet_{stem}.mid"
        try:
            corpus.parse(q).write("midi", fp=str(out))
        except music21.Music21Exception as exc:
            print(f"skipping {q}: {exc}")
            continue
        relabel(out, ["Violin I", "Violin II", "Viola", "Violoncello"], rng,
                scramble_velocity=False, extra_tempi=False, break_programs=False)

    # a re-export duplicate: same notes, tracks reversed, names changed
    src = mido.MidiFile(OUT / "chorale_bwv1_6.mid")
    dup = mido.MidiFile(type=1, ticks_per_beat=src.ticks_per_beat)
    dup.tracks.append(src.tracks[0])
    for t in reversed(src.tracks[1:]):
        t = mido.MidiTrack(m.copy(name=m.name.upper()) if m.type == "track_name" else m for m in t)
        dup.tracks.append(t)
    dup.save(OUT / "dup_bwv1_6_reexport.mid")

    print(f"{len(list(OUT.glob('*.mid')))} files written to {OUT}")


if __name__ == "__main__":
    main()
