//! The `bdi` command line.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 3 when a
//! seed or induced lexicon comes out empty. Results go to standard output,
//! diagnostics to standard error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::embedspace::{EmbeddingSpace, DEFAULT_MAX_VOCAB};
use crate::error::Error;
use crate::eval::{evaluate_map, fit_map, procrustes_fit, EvalResult};
use crate::lexicon::{parse_dictionary_file, seed_identical, seed_numerals, triangulate, Lexicon, PairLexicon};
use crate::retrieval::{translate_topk, Metric, RankFilter, Translation, DEFAULT_K_DENSITY};
use crate::solver::{GpaParams, OrthogonalMap};
use crate::synthkit::{make_synthetic_pair, synthetic_words};
use crate::trainer::{AlignerRegistry, CheckpointDir, Mode, TrainConfig, TrainOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_EMPTY_LEXICON: u8 = 3;

/// File written next to the checkpoints of an `align` run.
pub const MANIFEST_FILE: &str = "manifest.txt";
/// Evaluation lines written by `align --test-dict`.
pub const EVAL_FILE: &str = "eval.tsv";

#[derive(Debug, Parser)]
#[command(name = "bdi", version, about = "Bilingual dictionary induction with Procrustes alignment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap an alignment from a seed lexicon.
    Align(Box<AlignArgs>),
    /// Score a composed map against a test dictionary.
    Evaluate(EvaluateArgs),
    /// Fit on a test dictionary and evaluate on the same dictionary.
    FitTest(FitTestArgs),
    /// Translate words read from standard input.
    Translate(TranslateArgs),
    /// Write a synthetic pair of spaces with a planted map.
    Synth(SynthArgs),
    /// Check planted-map recovery on a synthetic pair.
    SynthCheck(SynthCheckArgs),
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// `key = value` file; flags override it. A run manifest is a valid config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub src_emb: Option<PathBuf>,
    #[arg(long)]
    pub tgt_emb: Option<PathBuf>,
    /// Support-language embeddings for mgpa and mgpa+.
    #[arg(long)]
    pub sup_emb: Option<PathBuf>,
    /// pa, gpa, mgpa or mgpa+.
    #[arg(long)]
    pub mode: Option<String>,
    /// identical, numerals or file:PATH.
    #[arg(long)]
    pub seed: Option<String>,
    /// Seed for the pivot–support pair; defaults to identical.
    #[arg(long)]
    pub sup_seed: Option<String>,
    /// Fresh run directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Evaluate the final map on this dictionary and write eval.tsv.
    #[arg(long)]
    pub test_dict: Option<PathBuf>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub unit_normalize: Option<bool>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    /// Relative GPA improvement cutoff, or `none`.
    #[arg(long)]
    pub gpa_tolerance: Option<String>,
    #[arg(long)]
    pub rank_max: Option<usize>,
    /// both or source.
    #[arg(long)]
    pub rank_filter: Option<String>,
    #[arg(long)]
    pub mutual: Option<bool>,
    #[arg(long)]
    pub union_lexicon: Option<bool>,
    #[arg(long)]
    pub csls_k_density: Option<usize>,
    #[arg(long)]
    pub validation_top: Option<usize>,
    #[arg(long)]
    pub mgpa_epochs: Option<usize>,
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Retrieval used for --test-dict: csls or cosine.
    #[arg(long)]
    pub metric: Option<String>,
    /// Comma-separated k values for --test-dict.
    #[arg(long)]
    pub k: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    #[arg(long)]
    pub src_emb: PathBuf,
    #[arg(long)]
    pub tgt_emb: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_VOCAB)]
    pub max_vocab: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub unit_normalize: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub spaces: SpaceArgs,
    /// Composed source→target transform file.
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub test_dict: PathBuf,
    #[arg(long, default_value = "1,10")]
    pub k: String,
    #[arg(long, default_value = "csls")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct FitTestArgs {
    #[command(flatten)]
    pub spaces: SpaceArgs,
    #[arg(long)]
    pub test_dict: PathBuf,
    /// pa or gpa.
    #[arg(long, default_value = "gpa")]
    pub mode: String,
    #[arg(long, default_value = "1")]
    pub k: String,
    #[arg(long, default_value = "csls")]
    pub metric: String,
    #[arg(long, default_value_t = crate::solver::DEFAULT_INNER_ITERS)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub spaces: SpaceArgs,
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "csls")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving src.vec, tgt.vec, identity.dict and planted.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthCheckArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// An error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EmptyLexicon(_) => EXIT_EMPTY_LEXICON,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Align(a) => cmd_align(&a, stdout),
        Command::Evaluate(a) => cmd_evaluate(&a, stdout),
        Command::FitTest(a) => cmd_fit_test(&a, stdout),
        Command::Translate(a) => cmd_translate(&a, stdin, stdout),
        Command::Synth(a) => cmd_synth(&a, stdout),
        Command::SynthCheck(a) => cmd_synth_check(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::config(format!("write failed: {e}"))
}

/// `key = value` lines; `#` starts a comment line. Keys under `meta.` are
/// informational and ignored when the file is read back as a config.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "mode",
    "seed",
    "sup_seed",
    "src_emb",
    "tgt_emb",
    "sup_emb",
    "test_dict",
    "max_vocab",
    "unit_normalize",
    "patience",
    "max_epochs",
    "inner_iters",
    "gpa_tolerance",
    "rank_max",
    "rank_filter",
    "mutual",
    "union_lexicon",
    "csls_k_density",
    "validation_top",
    "mgpa_epochs",
    "finetune_epochs",
    "rng_seed",
    "metric",
    "k",
];

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('-', "_");
            if key.starts_with("meta.") {
                continue;
            }
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("config line {}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, value.trim().to_owned());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn resolve<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::config(format!("invalid value {raw:?} for {key}"))),
            None => Ok(default),
        }
    }

    fn resolve_opt(&self, flag: Option<&PathBuf>, key: &str) -> Option<PathBuf> {
        flag.cloned().or_else(|| self.get(key).map(PathBuf::from))
    }
}

/// Where a seed lexicon comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSpec {
    Identical,
    Numerals,
    File(PathBuf),
}

impl std::str::FromStr for SeedSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "identical" => Ok(SeedSpec::Identical),
            "numerals" => Ok(SeedSpec::Numerals),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(SeedSpec::File(PathBuf::from(p))),
                _ => Err(CliError::config(format!(
                    "seed must be identical, numerals or file:PATH, got {s:?}"
                ))),
            },
        }
    }
}

impl std::fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedSpec::Identical => f.write_str("identical"),
            SeedSpec::Numerals => f.write_str("numerals"),
            SeedSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl SeedSpec {
    fn build(&self, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> crate::Result<PairLexicon> {
        match self {
            SeedSpec::Identical => seed_identical(src, tgt),
            SeedSpec::Numerals => seed_numerals(src, tgt),
            SeedSpec::File(p) => parse_dictionary_file(p, src, tgt).map(|(lex, cov)| {
                log::info!("seed dictionary coverage {:.4}", cov.fraction());
                lex
            }),
        }
    }
}

fn parse_metric(s: &str, k_density: usize) -> CliResult<Metric> {
    match s {
        "csls" => Ok(Metric::Csls { k_density }),
        "cosine" => Ok(Metric::Cosine),
        other => Err(CliError::config(format!("metric must be csls or cosine, got {other:?}"))),
    }
}

fn parse_ks(s: &str) -> CliResult<Vec<usize>> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::config(format!("invalid k list {s:?}")))?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::config(format!("invalid k list {s:?}")));
    }
    Ok(ks)
}

fn parse_rank_filter(s: &str) -> CliResult<RankFilter> {
    match s {
        "both" => Ok(RankFilter::Both),
        "source" => Ok(RankFilter::SourceOnly),
        other => Err(CliError::config(format!("rank_filter must be both or source, got {other:?}"))),
    }
}

fn parse_tolerance(s: &str) -> CliResult<Option<f64>> {
    if s == "none" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::config(format!("invalid gpa_tolerance {s:?}")))
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Fully resolved `align` job.
#[derive(Debug, Clone)]
pub struct AlignJob {
    pub src_emb: PathBuf,
    pub tgt_emb: PathBuf,
    pub sup_emb: Option<PathBuf>,
    pub seed: SeedSpec,
    pub sup_seed: SeedSpec,
    pub test_dict: Option<PathBuf>,
    pub max_vocab: usize,
    pub unit_normalize: bool,
    pub metric: String,
    pub ks: String,
    pub config: TrainConfig,
}

impl AlignJob {
    pub fn resolve(args: &AlignArgs) -> CliResult<Self> {
        let settings = match &args.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let src_emb = settings
            .resolve_opt(args.src_emb.as_ref(), "src_emb")
            .ok_or_else(|| CliError::config("--src-emb is required"))?;
        let tgt_emb = settings
            .resolve_opt(args.tgt_emb.as_ref(), "tgt_emb")
            .ok_or_else(|| CliError::config("--tgt-emb is required"))?;
        let sup_emb = settings.resolve_opt(args.sup_emb.as_ref(), "sup_emb");
        let test_dict = settings.resolve_opt(args.test_dict.as_ref(), "test_dict");

        let mode_name: String = settings.resolve(args.mode.clone(), "mode", "gpa".to_owned())?;
        let mode: Mode = mode_name.parse().map_err(|e: Error| CliError::config(e.to_string()))?;
        if AlignerRegistry::builtin().get(mode.name()).is_none() {
            return Err(CliError::config(format!("no aligner registered for {mode}")));
        }
        match (mode.spaces_required(), &sup_emb) {
            (3, None) => return Err(CliError::config(format!("--mode {mode} needs --sup-emb"))),
            (2, Some(_)) => return Err(CliError::config(format!("--mode {mode} takes no --sup-emb"))),
            _ => {}
        }

        let seed: SeedSpec = settings.resolve(args.seed.clone(), "seed", "identical".to_owned())?.parse()?;
        let sup_seed: SeedSpec = settings
            .resolve(args.sup_seed.clone(), "sup_seed", "identical".to_owned())?
            .parse()?;
        let defaults = TrainConfig::default();
        let tolerance = settings.resolve(
            args.gpa_tolerance.clone(),
            "gpa_tolerance",
            defaults.gpa_tolerance.map_or("none".to_owned(), |t| t.to_string()),
        )?;
        let rank_filter = settings.resolve(args.rank_filter.clone(), "rank_filter", "both".to_owned())?;
        let config = TrainConfig {
            mode,
            patience: settings.resolve(args.patience, "patience", defaults.patience)?,
            max_epochs: settings.resolve(args.max_epochs, "max_epochs", defaults.max_epochs)?,
            inner_iters: settings.resolve(args.inner_iters, "inner_iters", defaults.inner_iters)?,
            gpa_tolerance: parse_tolerance(&tolerance)?,
            rank_max: settings.resolve(args.rank_max, "rank_max", defaults.rank_max)?,
            rank_filter: parse_rank_filter(&rank_filter)?,
            mutual: settings.resolve(args.mutual, "mutual", defaults.mutual)?,
            union_lexicon: settings.resolve(args.union_lexicon, "union_lexicon", defaults.union_lexicon)?,
            csls_k_density: settings.resolve(args.csls_k_density, "csls_k_density", defaults.csls_k_density)?,
            validation_top: settings.resolve(args.validation_top, "validation_top", defaults.validation_top)?,
            mgpa_epochs: settings.resolve(args.mgpa_epochs, "mgpa_epochs", defaults.mgpa_epochs)?,
            finetune_epochs: settings.resolve(args.finetune_epochs, "finetune_epochs", defaults.finetune_epochs)?,
            rng_seed: settings.resolve(args.rng_seed, "rng_seed", defaults.rng_seed)?,
        };
        config.validate().map_err(|e| CliError::config(e.to_string()))?;

        let metric = settings.resolve(args.metric.clone(), "metric", "csls".to_owned())?;
        parse_metric(&metric, config.csls_k_density)?;
        let ks = settings.resolve(args.k.clone(), "k", "1,10".to_owned())?;
        parse_ks(&ks)?;

        Ok(AlignJob {
            src_emb,
            tgt_emb,
            sup_emb,
            seed,
            sup_seed,
            test_dict,
            max_vocab: settings.resolve(args.max_vocab, "max_vocab", DEFAULT_MAX_VOCAB)?,
            unit_normalize: settings.resolve(args.unit_normalize, "unit_normalize", true)?,
            metric,
            ks,
            config,
        })
    }

    /// The job as `key = value` lines, paths made absolute.
    pub fn to_settings_text(&self) -> String {
        let c = &self.config;
        let seed_text = |s: &SeedSpec| match s {
            SeedSpec::File(p) => SeedSpec::File(absolute(p)).to_string(),
            other => other.to_string(),
        };
        let mut lines: Vec<(&str, String)> = vec![
            ("mode", c.mode.name().to_owned()),
            ("src_emb", absolute(&self.src_emb).display().to_string()),
            ("tgt_emb", absolute(&self.tgt_emb).display().to_string()),
        ];
        if let Some(p) = &self.sup_emb {
            lines.push(("sup_emb", absolute(p).display().to_string()));
        }
        lines.push(("seed", seed_text(&self.seed)));
        lines.push(("sup_seed", seed_text(&self.sup_seed)));
        if let Some(p) = &self.test_dict {
            lines.push(("test_dict", absolute(p).display().to_string()));
        }
        lines.extend([
            ("max_vocab", self.max_vocab.to_string()),
            ("unit_normalize", self.unit_normalize.to_string()),
            ("patience", c.patience.to_string()),
            ("max_epochs", c.max_epochs.to_string()),
            ("inner_iters", c.inner_iters.to_string()),
            ("gpa_tolerance", c.gpa_tolerance.map_or("none".to_owned(), |t| t.to_string())),
            ("rank_max", c.rank_max.to_string()),
            (
                "rank_filter",
                match c.rank_filter {
                    RankFilter::Both => "both",
                    RankFilter::SourceOnly => "source",
                }
                .to_owned(),
            ),
            ("mutual", c.mutual.to_string()),
            ("union_lexicon", c.union_lexicon.to_string()),
            ("csls_k_density", c.csls_k_density.to_string()),
            ("validation_top", c.validation_top.to_string()),
            ("mgpa_epochs", c.mgpa_epochs.to_string()),
            ("finetune_epochs", c.finetune_epochs.to_string()),
            ("rng_seed", c.rng_seed.to_string()),
            ("metric", self.metric.clone()),
            ("k", self.ks.clone()),
        ]);
        let mut out = String::new();
        for (k, v) in lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Everything needed to rerun an `align` job, plus run metadata.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub job: AlignJob,
    pub stage_seconds: Vec<(String, f64)>,
    pub status: String,
    pub best_epoch: Option<usize>,
    pub stop_reason: Option<String>,
    pub phase_boundary: Option<usize>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::from("# bdi align run manifest; rerun with: bdi align --config <this file> --out <new dir>\n");
        out.push_str(&self.job.to_settings_text());
        let _ = writeln!(out, "meta.version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            out,
            "meta.platform = {}-{}",
            std::env::consts::OS,
            std::env::consts::ARCH
        );
        let _ = writeln!(out, "meta.status = {}", self.status);
        if let Some(b) = self.best_epoch {
            let _ = writeln!(out, "meta.best_epoch = {b}");
        }
        if let Some(r) = &self.stop_reason {
            let _ = writeln!(out, "meta.stop_reason = {r}");
        }
        if let Some(p) = self.phase_boundary {
            let _ = writeln!(out, "meta.phase_boundary = {p}");
        }
        for (stage, secs) in &self.stage_seconds {
            let _ = writeln!(out, "meta.seconds.{stage} = {secs:.3}");
        }
        out
    }
}

fn load_space(path: &Path, lang: &str, max_vocab: usize, normalize: bool) -> CliResult<EmbeddingSpace> {
    EmbeddingSpace::load(path, max_vocab, normalize)
        .map(|s| s.with_lang(lang))
        .map_err(|e| CliError::config(e.to_string()))
}

pub fn cmd_align(args: &AlignArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let job = AlignJob::resolve(args)?;
    let mut checkpoints = CheckpointDir::create(&args.out).map_err(|e| CliError::config(e.to_string()))?;
    let mut manifest = RunManifest {
        job: job.clone(),
        stage_seconds: Vec::new(),
        status: "running".into(),
        best_epoch: None,
        stop_reason: None,
        phase_boundary: None,
    };
    let result = align_stages(&job, &mut checkpoints, &mut manifest, stdout);
    manifest.status = match &result {
        Ok(()) => "ok".into(),
        Err(e) => format!("failed (exit {})", e.code),
    };
    let path = args.out.join(MANIFEST_FILE);
    fs::write(&path, manifest.render())
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    result
}

fn align_stages(
    job: &AlignJob,
    checkpoints: &mut CheckpointDir,
    manifest: &mut RunManifest,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let clock = Instant::now();
    let src = load_space(&job.src_emb, "src", job.max_vocab, job.unit_normalize)?;
    let tgt = load_space(&job.tgt_emb, "tgt", job.max_vocab, job.unit_normalize)?;
    let sup = job
        .sup_emb
        .as_ref()
        .map(|p| load_space(p, "sup", job.max_vocab, job.unit_normalize))
        .transpose()?;
    manifest.stage_seconds.push(("load".into(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let pivot_target = job.seed.build(&src, &tgt)?;
    let seed = match &sup {
        None => Lexicon::Pairs(pivot_target),
        Some(sup) => {
            let pivot_support = job.sup_seed.build(&src, sup)?;
            let triples = triangulate(&pivot_target, &pivot_support)?;
            if triples.is_empty() {
                return Err(Error::EmptyLexicon("empty seed: triangulated seed has no triples".into()).into());
            }
            Lexicon::Triples(triples)
        }
    };
    log::info!("seed lexicon: {} entries", seed.len());
    manifest.stage_seconds.push(("seed".into(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let mut spaces = vec![&src, &tgt];
    spaces.extend(sup.as_ref());
    let aligner = AlignerRegistry::builtin()
        .get(job.config.mode.name())
        .ok_or_else(|| CliError::config(format!("unknown mode {}", job.config.mode)))?;
    let outcome: TrainOutcome = aligner.align(&spaces, &seed, &job.config, checkpoints)?;
    checkpoints.write_final(&outcome)?;
    manifest.stage_seconds.push(("train".into(), clock.elapsed().as_secs_f64()));
    manifest.best_epoch = Some(outcome.report.best_epoch);
    manifest.stop_reason = Some(outcome.report.stop_reason.name().to_owned());
    manifest.phase_boundary = outcome.report.phase_boundary;

    let best = outcome.report.best();
    writeln!(
        stdout,
        "best epoch {} of {}: validation {:.6}, dictionary {} ({})",
        best.epoch,
        outcome.report.epochs.len(),
        best.validation,
        best.dict_size,
        outcome.report.stop_reason.name()
    )
    .map_err(io_err)?;

    if let Some(dict) = &job.test_dict {
        let clock = Instant::now();
        let (test, coverage) = parse_dictionary_file(dict, &src, &tgt).map_err(|e| CliError::config(e.to_string()))?;
        let metric = parse_metric(&job.metric, job.config.csls_k_density)?;
        let ks = parse_ks(&job.ks)?;
        let result = evaluate_map(&src, &tgt, &outcome.composed()?, &test, Some(&coverage), &ks, metric)?;
        let lines = result.machine_lines("precision");
        let path = checkpoints.root().join(EVAL_FILE);
        fs::write(&path, &lines).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        write!(stdout, "{}", result.table()).map_err(io_err)?;
        write!(stdout, "{lines}").map_err(io_err)?;
        manifest.stage_seconds.push(("eval".into(), clock.elapsed().as_secs_f64()));
    }
    Ok(())
}

fn load_map(path: &Path, dim: usize) -> CliResult<OrthogonalMap> {
    let map = OrthogonalMap::load(path).map_err(|e| CliError::config(e.to_string()))?;
    if map.dim() != dim {
        return Err(CliError::config(format!(
            "map is {}-dimensional but embeddings are {dim}-dimensional",
            map.dim()
        )));
    }
    Ok(map)
}

fn load_pair(spaces: &SpaceArgs) -> CliResult<(EmbeddingSpace, EmbeddingSpace)> {
    let src = load_space(&spaces.src_emb, "src", spaces.max_vocab, spaces.unit_normalize)?;
    let tgt = load_space(&spaces.tgt_emb, "tgt", spaces.max_vocab, spaces.unit_normalize)?;
    if src.dim() != tgt.dim() {
        return Err(CliError::config("source and target dimensions differ"));
    }
    Ok((src, tgt))
}

fn print_result(stdout: &mut dyn Write, result: &EvalResult, metric_name: &str) -> CliResult<()> {
    write!(stdout, "{}", result.table()).map_err(io_err)?;
    write!(stdout, "{}", result.machine_lines(metric_name)).map_err(io_err)
}

pub fn cmd_evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let ks = parse_ks(&args.k)?;
    let metric = parse_metric(&args.metric, DEFAULT_K_DENSITY)?;
    let (src, tgt) = load_pair(&args.spaces)?;
    let map = load_map(&args.map, src.dim())?;
    let (test, coverage) = parse_dictionary_file(&args.test_dict, &src, &tgt).map_err(|e| CliError::config(e.to_string()))?;
    let result = evaluate_map(&src, &tgt, &map, &test, Some(&coverage), &ks, metric)?;
    print_result(stdout, &result, "precision")
}

pub fn cmd_fit_test(args: &FitTestArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let ks = parse_ks(&args.k)?;
    let metric = parse_metric(&args.metric, DEFAULT_K_DENSITY)?;
    let mode: Mode = args.mode.parse().map_err(|e: Error| CliError::config(e.to_string()))?;
    if !matches!(mode, Mode::Pa | Mode::Gpa) {
        return Err(CliError::config("fit-test supports --mode pa or gpa"));
    }
    let (src, tgt) = load_pair(&args.spaces)?;
    let (test, coverage) = parse_dictionary_file(&args.test_dict, &src, &tgt).map_err(|e| CliError::config(e.to_string()))?;
    let gpa = GpaParams {
        inner_iters: args.inner_iters,
        ..GpaParams::default()
    };
    let result = procrustes_fit(&src, &tgt, &test, Some(&coverage), mode, &gpa, args.rng_seed, &ks, metric)?;
    print_result(stdout, &result, "fit")
}

pub fn cmd_translate(args: &TranslateArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> CliResult<()> {
    let metric = parse_metric(&args.metric, DEFAULT_K_DENSITY)?;
    let (src, tgt) = load_pair(&args.spaces)?;
    let map = load_map(&args.map, src.dim())?;
    let mut words = Vec::new();
    for line in stdin.lines() {
        let line = line.map_err(|e| CliError::config(format!("cannot read standard input: {e}")))?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_owned());
        }
    }
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    for t in translate_topk(&refs, &src, &tgt, &map, args.k, metric)? {
        match t {
            Translation::Oov(w) => writeln!(stdout, "{w}\tOOV"),
            Translation::Ranked { word, candidates } => {
                let cols: Vec<String> = candidates.iter().map(|(c, s)| format!("{c}:{s:.6}")).collect();
                writeln!(stdout, "{word}\t{}", cols.join("\t"))
            }
        }
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.n < 2 || args.dim == 0 {
        return Err(CliError::config("synth needs n >= 2 and dim >= 1"));
    }
    let pair = make_synthetic_pair(args.n, args.dim, args.sigma, args.seed);
    let (src, tgt) = pair.to_spaces()?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::config(format!("cannot create {}: {e}", args.out.display())))?;
    src.save(args.out.join("src.vec"))?;
    tgt.save(args.out.join("tgt.vec"))?;
    pair.planted.save(args.out.join("planted.txt"))?;
    let mut dict = String::new();
    for w in synthetic_words(args.n) {
        let _ = writeln!(dict, "{w} {w}");
    }
    let path = args.out.join("identity.dict");
    fs::write(&path, dict).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    writeln!(stdout, "wrote {} words x {} dims to {}", args.n, args.dim, args.out.display()).map_err(io_err)
}

pub fn cmd_synth_check(args: &SynthCheckArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.n < 2 || args.dim == 0 {
        return Err(CliError::config("synth-check needs n >= 2 and dim >= 1"));
    }
    let pair = make_synthetic_pair(args.n, args.dim, args.sigma, args.seed);
    let (src, tgt) = pair.to_spaces()?;
    let lexicon = PairLexicon::for_spaces(&src, &tgt, (0..args.n).map(|i| (i, i)).collect())?;
    let k_density = DEFAULT_K_DENSITY.min(args.n);
    for mode in [Mode::Pa, Mode::Gpa] {
        let map = fit_map(&src, &tgt, &lexicon, mode, &GpaParams::default(), args.seed)?;
        let err = (map.matrix() - pair.planted.matrix()).norm();
        let fit = evaluate_map(&src, &tgt, &map, &lexicon, None, &[1], Metric::Csls { k_density })?;
        writeln!(stdout, "recovery_error\t{mode}\t{err:.3e}").map_err(io_err)?;
        writeln!(stdout, "fit\t{mode}\t{:.2}", fit.at(1).unwrap_or(0.0)).map_err(io_err)?;
    }
    Ok(())
}
