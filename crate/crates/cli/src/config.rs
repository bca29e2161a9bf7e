use std::path::{Path, PathBuf};

use orchestrakit::datasetkit::SplitRatios;
use orchestrakit::evalkit::EvalParams;
use orchestrakit::expressive::{AnnotationMode, AnnotationParams};
use orchestrakit::renderkit::{StemGroupRules, DEFAULT_SAMPLE_RATE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything a pipeline run depends on. Relative paths are resolved
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Replaces the bundled name dictionary.
    pub dictionary: Option<PathBuf>,
    /// Extra articulation tables, added to the bundled string tables.
    pub articulation_tables: Vec<PathBuf>,
    pub annotate_mode: AnnotationMode,
    /// `seed` is ignored here; each piece gets its own from `master_seed`.
    pub annotation: AnnotationParams,
    pub split_ratios: SplitRatios,
    pub eval: EvalParams,
    pub sample_rate: u32,
    pub grouping: StemGroupRules,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            master_seed: 0,
            input: None,
            output: None,
            dictionary: None,
            articulation_tables: Vec::new(),
            annotate_mode: AnnotationMode::Proposed,
            annotation: AnnotationParams::default(),
            split_ratios: SplitRatios::default(),
            eval: EvalParams::default(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            grouping: StemGroupRules::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.input.as_mut().map(resolve);
        config.output.as_mut().map(resolve);
        config.dictionary.as_mut().map(resolve);
        config.articulation_tables.iter_mut().for_each(resolve);
        Ok(config)
    }

    /// Checks ratios, parameters and that every referenced file exists.
    pub fn validate(&self) -> Result<(), CliError> {
        self.split_ratios.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.annotation.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.eval.frame_seconds.is_nan() || self.eval.frame_seconds <= 0.0 {
            return Err(CliError::Config("eval.frame_seconds must be positive".into()));
        }
        if self.sample_rate == 0 {
            return Err(CliError::Config("sample_rate must be positive".into()));
        }
        for path in self.dictionary.iter().chain(&self.articulation_tables) {
            if !path.is_file() {
                return Err(CliError::Config(format!("{} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// The path-free part of the configuration, with referenced files
    /// identified by content hash, for provenance records.
    pub fn snapshot(&self) -> Result<ConfigSnapshot, CliError> {
        let hash = |p: &PathBuf| -> Result<String, CliError> {
            let bytes = std::fs::read(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
        };
        Ok(ConfigSnapshot {
            master_seed: self.master_seed,
            annotate_mode: self.annotate_mode,
            annotation: AnnotationParams { seed: self.master_seed, ..self.annotation.clone() },
            split_ratios: self.split_ratios,
            eval: self.eval,
            sample_rate: self.sample_rate,
            grouping: self.grouping.clone(),
            dictionary_sha256: self.dictionary.as_ref().map(hash).transpose()?,
            articulation_tables_sha256: self.articulation_tables.iter().map(hash).collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSnapshot {
    pub master_seed: u64,
    pub annotate_mode: AnnotationMode,
    pub annotation: AnnotationParams,
    pub split_ratios: SplitRatios,
    pub eval: EvalParams,
    pub sample_rate: u32,
    pub grouping: StemGroupRules,
    pub dictionary_sha256: Option<String>,
    pub articulation_tables_sha256: Vec<String>,
}
