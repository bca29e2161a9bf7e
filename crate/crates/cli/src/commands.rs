use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use log::{info, warn};
use orchestrakit::datasetkit::{compute_stats, stratified_split, SplitAssignment, StatsReport};
use orchestrakit::evalkit::{evaluate, SdrReport, StemPair};
use orchestrakit::expressive::{
    annotate, AnnotationMode, AnnotationParams, AnnotationPlan, ArticulationTables, MissingTable,
};
use orchestrakit::gmfix::{
    dedupe, filter_corpus, fix_piece, normalize, InstrumentDictionary, Registry, RemovalReason, UnmappedTrack,
};
use orchestrakit::renderkit::{emit_manifest, mix_stems, read_wav, test_synthesize, write_wav, Waveform};
use orchestrakit::seed::{derive_seed, rng_for};
use orchestrakit::smf::MidiPiece;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Cli, Command, EstimateSource};
use crate::config::{ConfigSnapshot, PipelineConfig};
use crate::corpus::{create_dir, list_dirs, list_files, read_midi, write_json, write_midi};
use crate::CliError;

pub const PROVENANCE_FILE: &str = "provenance.json";
const PLAN_SUFFIX: &str = ".plan.json";

/// Shared state for one invocation.
pub struct Context {
    pub config: PipelineConfig,
    pub strict: bool,
    pub registry: Registry,
    pub dictionary: InstrumentDictionary,
    pub tables: ArticulationTables,
    snapshot: ConfigSnapshot,
    pool: rayon::ThreadPool,
}

type Skipped = BTreeMap<String, String>;

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    strict: bool,
    config: &'a ConfigSnapshot,
}

impl Context {
    pub fn new(config: PipelineConfig, strict: bool, jobs: usize) -> Result<Self, CliError> {
        config.validate()?;
        let registry = Registry::default();
        config.grouping.validate(&registry).map_err(|e| CliError::Config(e.to_string()))?;
        let dictionary = match &config.dictionary {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
                InstrumentDictionary::from_toml(&text, &registry)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => InstrumentDictionary::builtin(&registry),
        };
        let mut tables = ArticulationTables::strings(&registry);
        for path in &config.articulation_tables {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            tables.load_toml(&text, &registry).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        let snapshot = config.snapshot()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Processing(anyhow!("thread pool: {e}")))?;
        Ok(Context { config, strict, registry, dictionary, tables, snapshot, pool })
    }

    fn par_map<T: Send, U: Send>(&self, items: Vec<T>, f: impl Fn(T) -> U + Sync + Send) -> Vec<U> {
        self.pool.install(|| items.into_par_iter().map(f).collect())
    }

    /// Separates per-file failures: fatal under `--strict`, otherwise logged
    /// and recorded in `skipped`.
    fn keep_ok<U>(
        &self,
        stage: &str,
        results: Vec<(String, Result<U, String>)>,
        skipped: &mut Skipped,
    ) -> Result<Vec<(String, U)>, CliError> {
        let mut ok = Vec::with_capacity(results.len());
        for (id, r) in results {
            match r {
                Ok(v) => ok.push((id, v)),
                Err(msg) if self.strict => return Err(CliError::Input(format!("{stage} {id}: {msg}"))),
                Err(msg) => {
                    warn!("{stage}: skipping {id}: {msg}");
                    skipped.insert(id, msg);
                }
            }
        }
        Ok(ok)
    }

    fn load_corpus(
        &self,
        stage: &str,
        dir: &Path,
        skipped: &mut Skipped,
    ) -> Result<Vec<(String, MidiPiece)>, CliError> {
        let files = list_files(dir, "mid")?;
        if files.is_empty() {
            warn!("{stage}: no .mid files in {}", dir.display());
        }
        let parsed = self.par_map(files, |(id, path)| (id, read_midi(&path)));
        self.keep_ok(stage, parsed, skipped)
    }

    fn provenance(&self, dir: &Path, command: &str) -> Result<(), CliError> {
        let record = Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            strict: self.strict,
            config: &self.snapshot,
        };
        write_json(&dir.join(PROVENANCE_FILE), &record)
    }

    fn piece_seed(&self, id: &str) -> u64 {
        derive_seed(self.config.master_seed, id)
    }

    /// GM-fixes, filters and deduplicates a raw corpus.
    pub fn fix(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct FixReport {
            kept: Vec<String>,
            unmapped: BTreeMap<String, Vec<UnmappedTrack>>,
            removed: BTreeMap<String, RemovalReason>,
            /// (kept, removed)
            duplicates: Vec<(String, String)>,
            skipped: Skipped,
        }
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("fix", input, &mut skipped)?;
        let outcomes = self.par_map(corpus, |(id, piece)| (id, fix_piece(&piece, &self.dictionary, &self.registry)));
        let mut unmapped = BTreeMap::new();
        let mut complete = Vec::new();
        for (id, outcome) in outcomes {
            if outcome.is_complete() {
                complete.push((id, outcome.piece));
            } else {
                warn!("fix: {id} has {} unmapped track(s)", outcome.unmapped.len());
                unmapped.insert(id, outcome.unmapped);
            }
        }
        let filtered = filter_corpus(complete, &self.registry, self.registry.default_targets());
        let deduped = dedupe(filtered.kept, &self.registry);
        for (id, piece) in &deduped.kept {
            write_midi(&output.join(format!("{id}.mid")), piece)?;
        }
        let report = FixReport {
            kept: deduped.kept.iter().map(|(id, _)| id.clone()).collect(),
            unmapped,
            removed: filtered.removed.into_iter().collect(),
            duplicates: deduped.duplicates,
            skipped,
        };
        info!("fix: kept {} piece(s)", report.kept.len());
        write_json(&output.join("report.json"), &report)?;
        self.provenance(output, "fix")
    }

    /// Neutral velocity and a single 120 BPM tempo.
    pub fn normalize(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("normalize", input, &mut skipped)?;
        let results = self.par_map(corpus, |(id, piece)| (id, normalize(&piece).map_err(|e| e.to_string())));
        let ok = self.keep_ok("normalize", results, &mut skipped)?;
        for (id, piece) in &ok {
            write_midi(&output.join(format!("{id}.mid")), piece)?;
        }
        write_json(&output.join("report.json"), &StageReport::new(&ok, skipped))?;
        self.provenance(output, "normalize")
    }

    /// Writes `<id>.mid` and `<id>.plan.json` for every piece.
    pub fn annotate(&self, input: &Path, output: &Path, mode: AnnotationMode) -> Result<(), CliError> {
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("annotate", input, &mut skipped)?;
        let missing = if self.strict { MissingTable::Error } else { MissingTable::Skip };
        let results = self.par_map(corpus, |(id, piece)| {
            let params = AnnotationParams { seed: self.piece_seed(&id), ..self.config.annotation.clone() };
            let instruments = self.registry.identify_all(&piece);
            let r = annotate(&piece, &instruments, &self.tables, &params, mode, missing).map_err(|e| e.to_string());
            (id, r)
        });
        let ok = self.keep_ok("annotate", results, &mut skipped)?;
        for (id, (piece, plan)) in &ok {
            write_midi(&output.join(format!("{id}.mid")), piece)?;
            write_json(&output.join(format!("{id}{PLAN_SUFFIX}")), plan)?;
        }
        write_json(&output.join("report.json"), &StageReport::new(&ok, skipped))?;
        self.provenance(output, "annotate")
    }

    /// `stats.json` with per-piece figures and corpus totals.
    pub fn stats(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct CorpusStats {
            pieces: BTreeMap<String, StatsReport>,
            corpus: StatsReport,
            skipped: Skipped,
        }
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("stats", input, &mut skipped)?;
        let per_piece = self.par_map(corpus, |(id, piece)| {
            let instruments = self.registry.identify_all(&piece);
            (id, compute_stats(&piece, &instruments).report())
        });
        let mut total = StatsReport::empty();
        for (_, r) in &per_piece {
            total.accumulate(r);
        }
        let report = CorpusStats { pieces: per_piece.into_iter().collect(), corpus: total, skipped };
        write_json(&output.join("stats.json"), &report)?;
        self.provenance(output, "stats")
    }

    /// `split.json`, stratified on the instruments each piece uses.
    pub fn split(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct SplitReport {
            #[serde(flatten)]
            split: SplitAssignment,
            sizes: [usize; 3],
            max_deviation: f64,
            skipped: Skipped,
        }
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("split", input, &mut skipped)?;
        let labels: BTreeMap<String, BTreeSet<String>> = self
            .par_map(corpus, |(id, piece)| {
                let names = self.registry.identify_all(&piece).into_iter().flatten().map(|i| i.name).collect();
                (id, names)
            })
            .into_iter()
            .collect();
        let mut rng = rng_for(self.config.master_seed, "split");
        let split = stratified_split(&labels, self.config.split_ratios, &mut rng)
            .map_err(|e| CliError::Input(format!("split: {e}")))?;
        let report = SplitReport { sizes: split.sizes(), max_deviation: split.max_deviation(), split, skipped };
        write_json(&output.join("split.json"), &report)?;
        self.provenance(output, "split")
    }

    /// One `<id>.json` render manifest per annotated piece.
    pub fn manifest(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("manifest", input, &mut skipped)?;
        let results = self.par_map(corpus, |(id, piece)| {
            let r = self.plan_for(input, &id).and_then(|plan| {
                let instruments = self.registry.identify_all(&piece);
                emit_manifest(&id, &piece, &instruments, &plan, &self.config.grouping, self.config.sample_rate)
                    .map_err(|e| e.to_string())
            });
            (id, r)
        });
        let ok = self.keep_ok("manifest", results, &mut skipped)?;
        for (id, manifest) in &ok {
            write_json(&output.join(format!("{id}.json")), manifest)?;
        }
        write_json(&output.join("report.json"), &StageReport::new(&ok, skipped))?;
        self.provenance(output, "manifest")
    }

    /// The annotation plan stored next to a piece; pieces without one are
    /// treated as unannotated.
    fn plan_for(&self, dir: &Path, id: &str) -> Result<AnnotationPlan, String> {
        let path = dir.join(format!("{id}{PLAN_SUFFIX}"));
        if !path.exists() {
            return Ok(AnnotationPlan {
                mode: AnnotationMode::Plain,
                seed: self.piece_seed(id),
                params: self.config.annotation.clone(),
                tempo: Vec::new(),
                dynamics: None,
                articulations: Vec::new(),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Renders `<id>/stems/<stem>.wav`, `<id>/mixture.wav` and
    /// `<id>/manifest.json` with the built-in sawtooth synthesizer.
    pub fn synth_test(&self, input: &Path, output: &Path) -> Result<(), CliError> {
        create_dir(output)?;
        let mut skipped = Skipped::new();
        let corpus = self.load_corpus("synth-test", input, &mut skipped)?;
        let sr = self.config.sample_rate;
        let results = self.par_map(corpus, |(id, piece)| {
            let r = (|| -> Result<usize, String> {
                let plan = self.plan_for(input, &id)?;
                let instruments = self.registry.identify_all(&piece);
                let manifest = emit_manifest(&id, &piece, &instruments, &plan, &self.config.grouping, sr)
                    .map_err(|e| e.to_string())?;
                let dir = output.join(&id);
                std::fs::create_dir_all(dir.join("stems")).map_err(|e| e.to_string())?;
                let stems: Vec<Waveform> = manifest
                    .stems
                    .iter()
                    .map(|s| {
                        let tracks: Vec<usize> = s.tracks.iter().map(|t| t.track_index).collect();
                        test_synthesize(&piece, Some(&tracks), sr)
                    })
                    .collect();
                for (entry, wave) in manifest.stems.iter().zip(&stems) {
                    write_wav(&dir.join(&entry.path), wave).map_err(|e| e.to_string())?;
                }
                let mix = mix_stems(&stems.iter().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
                if mix.peak > 1.0 {
                    warn!("synth-test: {id} mixture peaks at {:.3}", mix.peak);
                }
                write_wav(&dir.join("mixture.wav"), &mix.waveform).map_err(|e| e.to_string())?;
                write_json(&dir.join("manifest.json"), &manifest).map_err(|e| e.to_string())?;
                Ok(stems.len())
            })();
            (id, r)
        });
        let ok = self.keep_ok("synth-test", results, &mut skipped)?;
        write_json(&output.join("report.json"), &StageReport::new(&ok, skipped))?;
        self.provenance(output, "synth-test")
    }

    /// Scores every reference stem; writes `sdr.json`.
    pub fn eval(
        &self,
        references: &Path,
        estimates: Option<&Path>,
        source: EstimateSource,
        output: &Path,
    ) -> Result<(), CliError> {
        let estimates = match (source, estimates) {
            (EstimateSource::Stems, Some(dir)) => Some(dir),
            (EstimateSource::Stems, None) => {
                return Err(CliError::Input("--estimates is required unless --estimate mixture".into()))
            }
            (EstimateSource::Mixture, _) => None,
        };
        create_dir(output)?;
        let mut jobs = Vec::new();
        for (piece_id, dir) in list_dirs(references)? {
            let stems_dir = dir.join("stems");
            if !stems_dir.is_dir() {
                continue;
            }
            for (stem, path) in list_files(&stems_dir, "wav")? {
                let estimate = match estimates {
                    Some(root) => root.join(&piece_id).join("stems").join(format!("{stem}.wav")),
                    None => dir.join("mixture.wav"),
                };
                jobs.push((piece_id.clone(), stem, path, estimate));
            }
        }
        if jobs.is_empty() {
            return Err(CliError::Input(format!("no reference stems under {}", references.display())));
        }
        let loaded = self.par_map(jobs, |(piece_id, stem, reference, estimate)| {
            let load = |p: &PathBuf| read_wav(p).map_err(|e| format!("{}: {e}", p.display()));
            let r = load(&reference).and_then(|r| load(&estimate).map(|e| (stem, r, e)));
            (piece_id, r)
        });
        let mut pairs = Vec::with_capacity(loaded.len());
        for (piece_id, r) in loaded {
            let (stem, reference, estimate) = r.map_err(CliError::Input)?;
            if reference.sample_rate != estimate.sample_rate {
                return Err(CliError::Input(format!(
                    "{piece_id}/{stem}: sample rates {} and {} differ",
                    reference.sample_rate, estimate.sample_rate
                )));
            }
            pairs.push((piece_id, stem, reference, estimate));
        }
        let views: Vec<StemPair<'_>> = pairs
            .iter()
            .map(|(piece_id, stem, r, e)| StemPair {
                piece_id,
                stem,
                sample_rate: r.sample_rate,
                reference: &r.samples,
                estimate: &e.samples,
            })
            .collect();
        let report: SdrReport =
            evaluate(&views, &self.config.eval).map_err(|e| CliError::Input(format!("eval: {e}")))?;
        write_json(&output.join("sdr.json"), &report)?;
        self.provenance(output, "eval")
    }

    /// fix → normalize → annotate → stats → split → manifest under `output`.
    pub fn pipeline(&self, input: &Path, output: &Path, mode: AnnotationMode) -> Result<(), CliError> {
        create_dir(output)?;
        let stage = |name: &str| output.join(name);
        self.fix(input, &stage("fixed"))?;
        self.normalize(&stage("fixed"), &stage("normalized"))?;
        self.annotate(&stage("normalized"), &stage("annotated"), mode)?;
        self.stats(&stage("annotated"), &stage("stats"))?;
        self.split(&stage("annotated"), &stage("split"))?;
        self.manifest(&stage("annotated"), &stage("manifests"))?;
        self.provenance(output, "pipeline")
    }
}

#[derive(Serialize)]
struct StageReport {
    processed: Vec<String>,
    skipped: Skipped,
}

impl StageReport {
    fn new<T>(ok: &[(String, T)], skipped: Skipped) -> Self {
        StageReport { processed: ok.iter().map(|(id, _)| id.clone()).collect(), skipped }
    }
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(mode) = cli.mode {
        config.annotate_mode = mode.into();
    }
    let mode = config.annotate_mode;
    let ctx = Context::new(config, cli.strict, cli.jobs)?;
    match &cli.command {
        Command::Fix { input, output } => ctx.fix(input, output),
        Command::Normalize { input, output } => ctx.normalize(input, output),
        Command::Annotate { input, output } => ctx.annotate(input, output, mode),
        Command::Stats { input, output } => ctx.stats(input, output),
        Command::Split { input, output } => ctx.split(input, output),
        Command::Manifest { input, output } => ctx.manifest(input, output),
        Command::SynthTest { input, output } => ctx.synth_test(input, output),
        Command::Eval { references, estimates, estimate, output } => {
            ctx.eval(references, estimates.as_deref(), *estimate, output)
        }
        Command::Pipeline { input, output } => {
            let input = input.clone().or_else(|| ctx.config.input.clone());
            let output = output.clone().or_else(|| ctx.config.output.clone());
            let (Some(input), Some(output)) = (input, output) else {
                return Err(CliError::Config("pipeline needs input and output, from flags or the config".into()));
            };
            ctx.pipeline(&input, &output, mode)
        }
    }
}
