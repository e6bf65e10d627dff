//! Batch front end for `rnv-core`.
//!
//! [`run`] parses arguments, resolves the [`RunConfig`] (flag, then the
//! `RNV_CONFIG` environment variable, then built-in defaults), applies flag
//! overrides and dispatches to one subcommand. Every output file is written
//! under `--out-dir`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod run_config;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rnv_core::clustering::{fit_segmenter_with, segment_features};
use rnv_core::conversion::knn_convert_with;
use rnv_core::envelope::{envelope_table, sonority_envelope};
use rnv_core::evaluation::Normalization;
use rnv_core::featureio::read_feature_matrix_or;
use rnv_core::rhythm::build_profile_with;
use rnv_core::{
    convert_pipeline, detect_extrema, knn_index, load_audio, load_model, rate_report, save_model, wer,
    write_feature_matrix, Execution, FeatureMatrix, PipelineOptions, RhythmMode, RhythmProfile, SegmenterModel,
    UnitDatabase, Waveform,
};

pub use run_config::{Paths, RunConfig, CONFIG_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data { path: Option<PathBuf>, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn data(path: impl AsRef<Path>, message: impl fmt::Display) -> Self {
        CliError::Data { path: Some(path.as_ref().to_path_buf()), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data { .. } => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data { path: Some(p), message } => write!(f, "{}: {message}", p.display()),
            CliError::Data { path: None, message } => write!(f, "{message}"),
        }
    }
}

impl From<rnv_core::Error> for CliError {
    fn from(e: rnv_core::Error) -> Self {
        CliError::Data { path: None, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;
type Pairs = Vec<(FeatureMatrix, Waveform)>;

trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for rnv_core::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let msg = e.to_string();
            // Core messages for file errors already carry the path.
            if msg.contains(&path.display().to_string()) {
                CliError::Data { path: None, message: msg }
            } else {
                CliError::data(path, msg)
            }
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "rnv", version, about = "Rhythm and voice conversion on speech feature matrices")]
pub struct Cli {
    /// TOML run configuration (falls back to $RNV_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every output file.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for per-utterance work; 1 runs sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Clustering seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CorpusArgs {
    /// Directory of `<utt>.npy` feature matrices.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Directory of `<utt>.wav` files (defaults to the feature directory).
    #[arg(long)]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a corpus into units and label them Silence / Sonorant / Obstruent.
    TrainSegmenter {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        num_centroids: Option<usize>,
    },
    /// Write typed segments for each feature file.
    Segment {
        #[arg(long)]
        segmenter: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Feature files; defaults to every file in --features.
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Build one speaker's rhythm profile with rate and density tables.
    Analyze {
        #[arg(long)]
        speaker: String,
        #[arg(long, default_value = "")]
        group: String,
        #[arg(long)]
        segmenter: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Rhythm and/or voice conversion of every utterance in --features.
    Convert {
        #[arg(long)]
        source_profile: PathBuf,
        #[arg(long)]
        target_profile: PathBuf,
        /// syllable_global, syllable_fine, urhythmic_global, urhythmic_fine or none.
        #[arg(long, default_value = "none")]
        rhythm: String,
        #[arg(long, value_enum, default_value = "off")]
        voice: Switch,
        /// Target speaker feature directory for voice conversion.
        #[arg(long)]
        target_features: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        segmenter: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Word error rate between tab-separated `id<TAB>text` files.
    Wer {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        keep_case: bool,
        #[arg(long)]
        keep_punct: bool,
    },
    /// Rate and density tables over several speaker profiles.
    Report {
        profiles: Vec<PathBuf>,
        /// Group label per profile, in order.
        #[arg(long)]
        group: Vec<String>,
    },
    /// Dump the sonority envelope and extrema of WAV files.
    Envelope {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
}

/// Parses `argv` (including the program name) and runs it, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

struct Session {
    cfg: RunConfig,
    out_dir: PathBuf,
    exec: Execution,
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.pipeline.segmenter.seed = seed;
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| cfg.paths.out_dir.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out-dir or set paths.out_dir"))?;
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::data(&out_dir, e))?;
    let exec = configure_jobs(cli.jobs)?;
    let mut ctx = Session { cfg, out_dir, exec };
    let started = Instant::now();
    let name = command_name(&cli.command);
    match cli.command {
        Command::TrainSegmenter { corpus, num_centroids } => {
            if let Some(k) = num_centroids {
                ctx.cfg.pipeline.segmenter.num_centroids = k;
            }
            validate(&ctx)?;
            train_segmenter(&ctx, &corpus)
        }
        Command::Segment { segmenter, gamma, inputs, corpus } => {
            if let Some(g) = gamma {
                ctx.cfg.pipeline.segmenter.gamma = g;
            }
            validate(&ctx)?;
            segment(&ctx, segmenter.as_deref(), &inputs, &corpus)
        }
        Command::Analyze { speaker, group, segmenter, corpus } => {
            validate(&ctx)?;
            analyze(&ctx, &speaker, &group, segmenter.as_deref(), &corpus)
        }
        Command::Convert { source_profile, target_profile, rhythm, voice, target_features, k, segmenter, corpus } => {
            if let Some(k) = k {
                ctx.cfg.pipeline.conversion.k = k;
            }
            validate(&ctx)?;
            let rhythm = match rhythm.as_str() {
                "none" => None,
                s => Some(s.parse::<RhythmMode>().map_err(|e| CliError::usage(e.to_string()))?),
            };
            let job = ConvertJob {
                source_profile: &source_profile,
                target_profile: &target_profile,
                rhythm,
                voice: voice == Switch::On,
                target_features: target_features.as_deref(),
                segmenter: segmenter.as_deref(),
            };
            convert(&ctx, &job, &corpus)
        }
        Command::Wer { reference, hyp, keep_case, keep_punct } => {
            let norm = Normalization { casefold: !keep_case, strip_punct: !keep_punct };
            score_wer(&ctx, &reference, &hyp, norm)
        }
        Command::Report { profiles, group } => report(&ctx, &profiles, &group),
        Command::Envelope { inputs, frame_rate } => {
            if let Some(fr) = frame_rate {
                ctx.cfg.pipeline.audio.frame_rate = fr;
            }
            validate(&ctx)?;
            envelope(&ctx, &inputs)
        }
    }?;
    info!("{name} finished in {:.3?}", started.elapsed());
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::TrainSegmenter { .. } => "train-segmenter",
        Command::Segment { .. } => "segment",
        Command::Analyze { .. } => "analyze",
        Command::Convert { .. } => "convert",
        Command::Wer { .. } => "wer",
        Command::Report { .. } => "report",
        Command::Envelope { .. } => "envelope",
    }
}

fn validate(ctx: &Session) -> CliResult<()> {
    ctx.cfg.pipeline.validate().map_err(|e| CliError::usage(e.to_string()))
}

fn configure_jobs(jobs: Option<usize>) -> CliResult<Execution> {
    match jobs {
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                warn!("thread pool already initialised; --jobs {n} ignored");
            }
            #[cfg(not(feature = "parallel"))]
            warn!("built without parallel support; --jobs {n} runs sequentially");
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::default()),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::data(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Sorted `*.npy` files of a directory.
fn list_features(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::data(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::data(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "npy") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(dir, "no .npy feature files"));
    }
    Ok(files)
}

fn feature_dir<'a>(ctx: &'a Session, corpus: &'a CorpusArgs) -> CliResult<&'a Path> {
    corpus
        .features
        .as_deref()
        .or(ctx.cfg.paths.feature_dir.as_deref())
        .ok_or_else(|| CliError::usage("no feature directory: pass --features or set paths.feature_dir"))
}

fn audio_dir<'a>(ctx: &'a Session, corpus: &'a CorpusArgs) -> CliResult<&'a Path> {
    match corpus.audio.as_deref().or(ctx.cfg.paths.audio_dir.as_deref()) {
        Some(dir) => Ok(dir),
        None => feature_dir(ctx, corpus),
    }
}

fn read_features(ctx: &Session, path: &Path) -> CliResult<FeatureMatrix> {
    read_feature_matrix_or(path, ctx.cfg.pipeline.audio.frame_rate).at(path)
}

fn read_wave(ctx: &Session, audio: &Path, features: &Path) -> CliResult<Waveform> {
    let wav = audio.join(format!("{}.wav", stem(features)));
    load_audio(&wav, &ctx.cfg.pipeline.audio).at(&wav)
}

fn load_corpus(ctx: &Session, corpus: &CorpusArgs) -> CliResult<(Vec<PathBuf>, Pairs)> {
    let files = list_features(feature_dir(ctx, corpus)?)?;
    let audio = audio_dir(ctx, corpus)?;
    let pairs = ctx
        .exec
        .map_slice(&files, |f| Ok((read_features(ctx, f)?, read_wave(ctx, audio, f)?)))
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    Ok((files, pairs))
}

fn load_segmenter(ctx: &Session, flag: Option<&Path>) -> CliResult<SegmenterModel> {
    let path = flag
        .or(ctx.cfg.paths.segmenter.as_deref())
        .ok_or_else(|| CliError::usage("no segmenter model: pass --segmenter or set paths.segmenter"))?;
    load_model(path).at(path)
}

fn check_dim(path: &Path, feat: &FeatureMatrix, expected: usize) -> CliResult<()> {
    if feat.dim() != expected {
        return Err(CliError::data(
            path,
            format!("feature dimension {} does not match the model's {expected}", feat.dim()),
        ));
    }
    Ok(())
}

fn train_segmenter(ctx: &Session, corpus: &CorpusArgs) -> CliResult<()> {
    let (files, pairs) = load_corpus(ctx, corpus)?;
    let dim = pairs[0].0.dim();
    for (f, (feat, _)) in files.iter().zip(&pairs) {
        check_dim(f, feat, dim)?;
    }
    let model = fit_segmenter_with(&pairs, &ctx.cfg.pipeline.segmenter, ctx.exec)?;
    let out = ctx.out_dir.join("segmenter.json");
    save_model(&model, &out).at(&out)?;
    info!("segmenter with {} centroids over {} utterances -> {}", model.num_centroids(), files.len(), out.display());
    Ok(())
}

fn segment(ctx: &Session, segmenter: Option<&Path>, inputs: &[PathBuf], corpus: &CorpusArgs) -> CliResult<()> {
    let model = load_segmenter(ctx, segmenter)?;
    let files = if inputs.is_empty() { list_features(feature_dir(ctx, corpus)?)? } else { inputs.to_vec() };
    let gamma = ctx.cfg.pipeline.segmenter.gamma;
    ctx.exec
        .map_slice(&files, |f| {
            let feat = read_features(ctx, f)?;
            check_dim(f, &feat, model.dim())?;
            let seg = segment_features(&feat, &model, gamma).at(f)?;
            let out = ctx.out_dir.join(format!("{}.segments.json", stem(f)));
            let text = serde_json::to_string_pretty(&seg.segments).expect("segments serialize");
            write_text(&out, &text)
        })
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    info!("segmented {} files with gamma {gamma}", files.len());
    Ok(())
}

fn analyze(ctx: &Session, speaker: &str, group: &str, segmenter: Option<&Path>, corpus: &CorpusArgs) -> CliResult<()> {
    let model = load_segmenter(ctx, segmenter)?;
    let (files, pairs) = load_corpus(ctx, corpus)?;
    for (f, (feat, _)) in files.iter().zip(&pairs) {
        check_dim(f, feat, model.dim())?;
    }
    let profile = build_profile_with(speaker, &pairs, &model, &ctx.cfg.pipeline, ctx.exec)?;
    let out = ctx.out_dir.join(format!("{speaker}.profile.json"));
    save_model(&profile, &out).at(&out)?;
    let table = rate_report(std::slice::from_ref(&profile), &[group.to_string()]);
    write_text(&ctx.out_dir.join(format!("{speaker}.rates.tsv")), &table.rates_tsv())?;
    write_text(&ctx.out_dir.join(format!("{speaker}.density.tsv")), &table.density_tsv())?;
    info!(
        "{speaker}: {:.3} syllables/s, {:.3} sonorants/s over {:.1} s of speech",
        profile.syllable_rate, profile.sonorant_rate, profile.speech_time_s
    );
    Ok(())
}

struct ConvertJob<'a> {
    source_profile: &'a Path,
    target_profile: &'a Path,
    rhythm: Option<RhythmMode>,
    voice: bool,
    target_features: Option<&'a Path>,
    segmenter: Option<&'a Path>,
}

fn convert(ctx: &Session, job: &ConvertJob<'_>, corpus: &CorpusArgs) -> CliResult<()> {
    let src: RhythmProfile = load_model(job.source_profile).at(job.source_profile)?;
    let tgt: RhythmProfile = load_model(job.target_profile).at(job.target_profile)?;
    let cfg = &ctx.cfg.pipeline;
    let db: Option<UnitDatabase> = if job.voice {
        let dir = job
            .target_features
            .ok_or_else(|| CliError::usage("--voice on needs --target-features"))?;
        let files = list_features(dir)?;
        let feats = files.iter().map(|f| read_features(ctx, f)).collect::<CliResult<Vec<_>>>()?;
        for (f, m) in files.iter().zip(&feats) {
            check_dim(f, m, feats[0].dim())?;
        }
        Some(knn_index(&feats, cfg.conversion.k).at(dir)?)
    } else {
        None
    };
    let model = match job.rhythm {
        Some(_) => Some(load_segmenter(ctx, job.segmenter)?),
        None => None,
    };
    let files = list_features(feature_dir(ctx, corpus)?)?;
    let audio = audio_dir(ctx, corpus)?;
    ctx.exec
        .map_slice(&files, |f| {
            let started = Instant::now();
            let feat = read_features(ctx, f)?;
            if let Some(db) = &db {
                check_dim(f, &feat, db.dim())?;
            }
            let name = stem(f);
            let features = match &model {
                Some(model) => {
                    check_dim(f, &feat, model.dim())?;
                    let wave = read_wave(ctx, audio, f)?;
                    let options = PipelineOptions { rhythm: job.rhythm, voice: db.as_ref() };
                    let converted = convert_pipeline(&feat, &wave, model, &src, &tgt, options, cfg).at(f)?;
                    if let Some(plan) = &converted.plan {
                        info!("{name}: plan {}", serde_json::to_string(plan).expect("plan serializes"));
                        write_text(&ctx.out_dir.join(format!("{name}.plan.json")), &plan.to_json())?;
                    }
                    converted.features
                }
                None => match &db {
                    Some(db) => knn_convert_with(&feat, db, cfg.conversion.k, cfg.conversion.weighting, Execution::Sequential).at(f)?,
                    None => feat.clone(),
                },
            };
            let out = ctx.out_dir.join(format!("{name}.npy"));
            write_feature_matrix(&features, &out).at(&out)?;
            info!("{name}: {} -> {} frames in {:.3?}", feat.frames(), features.frames(), started.elapsed());
            Ok(())
        })
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    Ok(())
}

/// Parses `id<TAB>text` lines; blank lines are skipped.
pub fn read_transcripts(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, words) = line
            .split_once('\t')
            .ok_or_else(|| CliError::data(path, format!("line {}: expected id<TAB>text", n + 1)))?;
        if out.iter().any(|(seen, _)| seen == id) {
            return Err(CliError::data(path, format!("line {}: duplicate id '{id}'", n + 1)));
        }
        out.push((id.to_string(), words.to_string()));
    }
    Ok(out)
}

fn score_wer(ctx: &Session, reference: &Path, hyp: &Path, norm: Normalization) -> CliResult<()> {
    let refs = read_transcripts(reference)?;
    let hyps = read_transcripts(hyp)?;
    let mut paired = Vec::with_capacity(refs.len());
    for (id, _) in &refs {
        let h = hyps
            .iter()
            .find(|(hid, _)| hid == id)
            .ok_or_else(|| CliError::data(hyp, format!("no hypothesis for id '{id}'")))?;
        paired.push(h.1.clone());
    }
    let ids: Vec<String> = refs.iter().map(|(id, _)| id.clone()).collect();
    let texts: Vec<String> = refs.into_iter().map(|(_, t)| t).collect();
    let report = wer(&texts, &paired, norm).at(reference)?;
    write_text(&ctx.out_dir.join("wer.tsv"), &report.to_tsv(Some(&ids)))?;
    println!(
        "WER {:.2}% (S={} I={} D={} N={})",
        report.wer, report.substitutions, report.insertions, report.deletions, report.ref_words
    );
    Ok(())
}

fn report(ctx: &Session, profiles: &[PathBuf], groups: &[String]) -> CliResult<()> {
    if profiles.is_empty() {
        return Err(CliError::usage("report needs at least one profile"));
    }
    if groups.len() > profiles.len() {
        return Err(CliError::usage("more --group labels than profiles"));
    }
    let loaded = profiles
        .iter()
        .map(|p| load_model::<RhythmProfile>(p).at(p))
        .collect::<CliResult<Vec<_>>>()?;
    let table = rate_report(&loaded, groups);
    write_text(&ctx.out_dir.join("rates.tsv"), &table.rates_tsv())?;
    write_text(&ctx.out_dir.join("density.tsv"), &table.density_tsv())
}

fn envelope(ctx: &Session, inputs: &[PathBuf]) -> CliResult<()> {
    if inputs.is_empty() {
        return Err(CliError::usage("envelope needs at least one WAV file"));
    }
    let cfg = &ctx.cfg.pipeline;
    ctx.exec
        .map_slice(inputs, |wav| {
            let wave = load_audio(wav, &cfg.audio).at(wav)?;
            let env = sonority_envelope(&wave, cfg.audio.frame_rate, &cfg.envelope).at(wav)?;
            let ex = detect_extrema(&env, None, &cfg.peaks);
            info!("{}: {} peaks over {} frames", wav.display(), ex.peaks.len(), env.len());
            write_text(&ctx.out_dir.join(format!("{}.envelope.tsv", stem(wav))), &envelope_table(&env, &ex))
        })
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    Ok(())
}
