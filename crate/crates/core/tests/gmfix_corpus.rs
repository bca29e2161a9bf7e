mod common;

use std::collections::BTreeSet;

use orchestrakit::gmfix::{dedupe, filter_corpus, fix_piece, normalize, InstrumentDictionary, Registry};
use orchestrakit::smf::{parse_smf, write_smf, EventKind, MidiPiece};

fn fixed_corpus() -> Vec<(String, MidiPiece)> {
    let reg = Registry::default();
    let dict = InstrumentDictionary::builtin(&reg);
    common::corpus()
        .into_iter()
        .filter(|(stem, _)| !stem.starts_with("m21_test"))
        .map(|(stem, bytes)| {
            let piece = parse_smf(&bytes).unwrap();
            (stem, fix_piece(&piece, &dict, &reg).piece)
        })
        .collect()
}

#[test]
fn relabelled_chorales_are_fully_mapped() {
    let reg = Registry::default();
    let dict = InstrumentDictionary::builtin(&reg);
    let mut checked = 0;
    for (stem, bytes) in common::corpus() {
        if !(stem.starts_with("chorale_") || stem.starts_with("quartet_")) {
            continue;
        }
        let piece = parse_smf(&bytes).unwrap();
        let out = fix_piece(&piece, &dict, &reg);
        assert!(out.is_complete(), "{stem}: {:?}", out.unmapped);
        // the written file reparses to the same identification
        let again = parse_smf(&write_smf(&out.piece).unwrap()).unwrap();
        assert_eq!(reg.identify_all(&again), out.instruments, "{stem}");
        checked += 1;
    }
    assert!(checked >= 40);
}

#[test]
fn normalized_corpus_has_neutral_expression() {
    for (stem, piece) in fixed_corpus() {
        let n = normalize(&piece).unwrap();
        assert_eq!(n.tempo_map().changes(), vec![(0, 500_000)], "{stem}");
        for track in &n.tracks {
            assert!(track.notes().iter().all(|x| x.velocity == 75), "{stem}");
            assert!(!track
                .events
                .iter()
                .any(|e| matches!(e.kind, EventKind::ControlChange { controller: 1 | 11 | 32, .. })));
        }
        assert_eq!(normalize(&n).unwrap(), n, "{stem}");
    }
}

#[test]
fn filter_and_dedupe_corpus() {
    let reg = Registry::default();
    let targets: BTreeSet<String> = reg.default_targets().clone();
    let filtered = filter_corpus(fixed_corpus(), &reg, &targets);
    let kept: BTreeSet<&str> = filtered.kept.iter().map(|(s, _)| s.as_str()).collect();
    let removed: BTreeSet<&str> = filtered.removed.iter().map(|(s, _)| s.as_str()).collect();
    // the all-violin, vocal and piano ensembles are dropped, orchestral ones kept
    assert!(kept.contains("chorale_bwv1_6"));
    assert!(kept.contains("quartet_mozart_k80_movement3"));
    assert!(removed.len() >= 3, "{removed:?}");
    for (stem, piece) in &filtered.kept {
        let names: BTreeSet<_> = reg.identify_all(piece).into_iter().flatten().map(|i| i.name).collect();
        assert!(names.len() >= 2 && names.is_subset(&targets), "{stem}");
    }

    let deduped = dedupe(filtered.kept, &reg);
    assert_eq!(deduped.duplicates, vec![("chorale_bwv1_6".to_string(), "dup_bwv1_6_reexport".to_string())]);
}
