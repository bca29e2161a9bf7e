use std::collections::BTreeMap;

use serde::Deserialize;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::registry::{InstrumentId, Registry};
use super::GmFixError;

const DEFAULT_TABLE: &str = include_str!("../../data/dictionary.toml");

/// Lowercases, folds diacritics, trims and collapses whitespace (control
/// characters such as stray NULs count as whitespace).
pub fn normalize_name(raw: &str) -> String {
    let folded: String = raw
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Deserialize)]
struct DictionaryFile {
    names: BTreeMap<String, String>,
}

/// Raw instrument name to canonical instrument, loaded from an editable
/// TOML table (`[names]` section of `"raw name" = "instrument"` pairs).
#[derive(Debug, Clone)]
pub struct InstrumentDictionary {
    entries: BTreeMap<String, InstrumentId>,
}

impl InstrumentDictionary {
    /// The bundled table of common orchestral names in several languages.
    pub fn builtin(registry: &Registry) -> Self {
        Self::from_toml(DEFAULT_TABLE, registry).expect("bundled dictionary is valid")
    }

    pub fn from_toml(text: &str, registry: &Registry) -> Result<Self, GmFixError> {
        let file: DictionaryFile = toml::from_str(text).map_err(|e| GmFixError::Dictionary(e.to_string()))?;
        let mut dict = InstrumentDictionary { entries: BTreeMap::new() };
        for (raw, target) in file.names {
            dict.insert(&raw, &target, registry)?;
        }
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds an entry. The key must not collide with an existing one after
    /// normalization, and the target must be a registry instrument.
    pub fn insert(&mut self, raw: &str, instrument: &str, registry: &Registry) -> Result<(), GmFixError> {
        let key = normalize_name(raw);
        if key.is_empty() {
            return Err(GmFixError::Dictionary("empty instrument name key".into()));
        }
        let id = registry.get(instrument).ok_or_else(|| GmFixError::UnknownInstrument(instrument.to_owned()))?;
        if self.entries.contains_key(&key) {
            return Err(GmFixError::DuplicateKey(key));
        }
        self.entries.insert(key, id.clone());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &InstrumentId)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Looks up `raw_name` after normalization; `None` means unmapped.
pub fn map_instrument(raw_name: &str, dict: &InstrumentDictionary) -> Option<InstrumentId> {
    dict.entries.get(&normalize_name(raw_name)).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_examples() {
        let reg = Registry::default();
        let dict = InstrumentDictionary::builtin(&reg);
        assert!(dict.len() > 200);
        let violin = map_instrument("Violin I", &dict).unwrap();
        assert_eq!(violin.name, "violin");
        assert_eq!(violin.program, super::super::GmProgram::Melodic(40));
        assert_eq!(map_instrument("", &dict), None);
        assert_eq!(map_instrument("   ", &dict), None);
        assert_eq!(map_instrument("Kazoo", &dict), None);
        assert_eq!(map_instrument("  FLÛTE ", &dict).unwrap().name, "flute");
        assert_eq!(map_instrument("Piano\0", &dict).unwrap().name, "piano");
        assert_eq!(map_instrument("Horn   in F", &dict).unwrap().name, "french_horn");
    }

    #[test]
    fn accented_names_round_trip_through_normalization() {
        let reg = Registry::default();
        let mut dict = InstrumentDictionary::from_toml("[names]\n", &reg).unwrap();
        assert_eq!(map_instrument("Violoncelle", &dict), None);
        dict.insert("Violoncelle", "cello", &reg).unwrap();
        let accented = [
            ("Violoncelle", "cello"),
            ("VIOLONCELLE", "cello"),
            ("Violoncellé", "cello"),
            ("Flöte", "flute"),
            ("Flûte", "flute"),
            ("Hautbois d’amour", "oboe"),
            ("Clarinette en Si♭", "clarinet"),
            ("Trompète", "trumpet"),
            ("Contrebasse", "contrabass"),
        ];
        for (raw, target) in accented {
            if map_instrument(raw, &dict).is_none() {
                dict.insert(raw, target, &reg).unwrap();
            }
            assert_eq!(map_instrument(raw, &dict).unwrap().name, target, "{raw}");
            assert_eq!(map_instrument(&raw.to_uppercase(), &dict).unwrap().name, target, "{raw}");
            let stripped: String = raw.nfd().filter(|c| !is_combining_mark(*c)).collect();
            assert_eq!(map_instrument(&stripped, &dict).unwrap().name, target, "{raw}");
        }
    }

    #[test]
    fn duplicate_keys_after_normalization_rejected() {
        let reg = Registry::default();
        let err = InstrumentDictionary::from_toml("[names]\n\"Flûte\" = \"flute\"\n\"flute\" = \"flute\"\n", &reg)
            .unwrap_err();
        assert!(matches!(err, GmFixError::DuplicateKey(k) if k == "flute"));
    }

    #[test]
    fn unknown_target_rejected() {
        let reg = Registry::default();
        let err = InstrumentDictionary::from_toml("[names]\n\"kazoo\" = \"kazoo\"\n", &reg).unwrap_err();
        assert!(matches!(err, GmFixError::UnknownInstrument(_)));
    }
}
