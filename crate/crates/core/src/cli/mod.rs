//! The `t2ieval` batch command-line interface.
//!
//! Exit codes: 0 on success, 2 on a data or validation error, 64 on a
//! usage error.

pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cmd::compute_cmd;
use crate::error::{Error, Result};
use crate::frechet::FALLBACK_RIDGE;
use crate::io::{load_bundle, load_features, read_tensor, write_stats, Bundle, FeatureSource};
use crate::itm::{self, build_similarity_matrix, contrastive_loss, itm_total, MatchLevel};
use crate::retrieval::{rank_retrieval, DEFAULT_KS};
use crate::stats::{estimate_stats, GaussianStats};
use report::MetricReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "t2ieval",
    version,
    about = "Evaluate text-to-image generators from precomputed embeddings"
)]
struct Cli {
    /// Output path: the statistics file for `stats`, the JSON report for
    /// every other command (stdout when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Report values at full precision instead of 6 decimal places.
    #[arg(long, global = true)]
    precise: bool,

    /// Worker threads for statistics and similarity computation.
    #[arg(long, global = true, env = "T2IEVAL_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate Gaussian statistics of an embedding tensor and cache them.
    Stats(StatsArgs),
    /// Cross Model Distance between generated images, real images and text.
    Cmd(TripleArgs),
    /// Only the image-text consistency term of `cmd`.
    Itdis(TripleArgs),
    /// Fréchet distance between generated and real image features.
    Fid(PairArgs),
    /// Image-text retrieval Recall@1/5/10 over a bundle.
    Retrieval(RetrievalArgs),
    /// Contrastive matching losses over a bundle.
    ItmLoss(ItmLossArgs),
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
    /// L2-normalize each embedding before estimation.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Generated-image embeddings (.grb) or statistics (.stats).
    #[arg(long, value_name = "PATH")]
    fake: PathBuf,
    /// Real-image embeddings (.grb) or statistics (.stats).
    #[arg(long, value_name = "PATH")]
    real: PathBuf,
    /// L2-normalize raw embeddings before estimation.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Args)]
struct TripleArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Text embeddings (.grb) or statistics (.stats).
    #[arg(long, value_name = "PATH")]
    text: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    Sentence,
    Word,
}

impl From<LevelArg> for MatchLevel {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Sentence => MatchLevel::Sentence,
            LevelArg::Word => MatchLevel::Word,
        }
    }
}

#[derive(Debug, Args)]
struct WordArgs {
    /// Attention sharpness over regions.
    #[arg(long, default_value_t = itm::DEFAULT_GAMMA1)]
    gamma1: f64,
    /// Aggregation sharpness over words.
    #[arg(long, default_value_t = itm::DEFAULT_GAMMA2)]
    gamma2: f64,
    /// L2-normalize words and regions before the attention dot products.
    #[arg(long)]
    normalize_attention: bool,
}

impl WordArgs {
    fn params(&self) -> itm::WordRegionParams {
        itm::WordRegionParams {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            normalize_attention: self.normalize_attention,
        }
    }

    fn record(&self, report: &mut MetricReport) {
        report
            .hyper("gamma1", self.gamma1)
            .hyper("gamma2", self.gamma2)
            .hyper("normalize_attention", self.normalize_attention);
    }
}

#[derive(Debug, Args)]
struct RetrievalArgs {
    #[arg(long, value_name = "DIR")]
    bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = LevelArg::Sentence)]
    level: LevelArg,
    #[command(flatten)]
    word: WordArgs,
}

#[derive(Debug, Args)]
struct ItmLossArgs {
    #[arg(long, value_name = "DIR")]
    bundle: PathBuf,
    /// Contrastive temperature.
    #[arg(long, default_value_t = itm::DEFAULT_GAMMA)]
    gamma: f64,
    #[command(flatten)]
    word: WordArgs,
    /// Weight of the sentence-level losses.
    #[arg(long, default_value_t = itm::DEFAULT_LAMBDA1)]
    lambda1: f64,
    /// Weight of the word-level losses.
    #[arg(long, default_value_t = itm::DEFAULT_LAMBDA2)]
    lambda2: f64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };

    if matches!(cli.command, Command::Stats(_)) && cli.out.is_none() {
        eprintln!("error: `stats` requires --out <PATH> for the statistics file");
        return EXIT_USAGE;
    }

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
        {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };

    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            EXIT_DATA
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let report = match &cli.command {
        Command::Stats(args) => run_stats(args, cli.out.as_deref().expect("checked above"))?,
        Command::Cmd(args) => run_cmd(args, "cmd")?,
        Command::Itdis(args) => run_cmd(args, "itdis")?,
        Command::Fid(args) => run_fid(args)?,
        Command::Retrieval(args) => run_retrieval(args)?,
        Command::ItmLoss(args) => run_itm_loss(args)?,
    };
    let report = report.finish(cli.precise, started.elapsed())?;
    let json = report.to_json();
    match (&cli.command, &cli.out) {
        (Command::Stats(_), _) | (_, None) => print!("{json}"),
        (_, Some(path)) => std::fs::write(path, json).map_err(|e| Error::io(path, e))?,
    }
    Ok(())
}

fn resolve_stats(path: &Path, normalize: bool) -> Result<GaussianStats> {
    match load_features(path)? {
        FeatureSource::Embeddings(emb) if normalize => estimate_stats(&emb.l2_normalized()?),
        FeatureSource::Embeddings(emb) => estimate_stats(&emb),
        FeatureSource::Stats(_) if normalize => Err(Error::InvalidParameter(format!(
            "--normalize cannot be applied to precomputed statistics {}",
            path.display()
        ))),
        FeatureSource::Stats(stats) => Ok(stats),
    }
}

fn run_stats(args: &StatsArgs, out: &Path) -> Result<MetricReport> {
    let emb = read_tensor(&args.embeddings)?.to_embedding_matrix()?;
    let emb = if args.normalize {
        emb.l2_normalized()?
    } else {
        emb
    };
    let stats = estimate_stats(&emb)?;
    write_stats(out, &stats)?;
    let mut report = MetricReport::new("stats");
    report
        .input("embeddings", &args.embeddings)
        .input("out", out)
        .count("n", stats.n())
        .count("dim", stats.dim())
        .hyper("normalize", args.normalize);
    Ok(report)
}

fn run_fid(args: &PairArgs) -> Result<MetricReport> {
    let f = resolve_stats(&args.fake, args.normalize)?;
    let r = resolve_stats(&args.real, args.normalize)?;
    let d = crate::frechet::frechet_distance_detailed(&f, &r)?;
    let mut report = MetricReport::new("fid");
    report
        .input("fake", &args.fake)
        .input("real", &args.real)
        .count("fake", f.n())
        .count("real", r.n())
        .count("dim", f.dim())
        .value("dis_fr", d.value)
        .hyper("normalize", args.normalize)
        .hyper("fallback_ridge", FALLBACK_RIDGE);
    report.regularized.insert("dis_fr".into(), d.regularized);
    Ok(report)
}

fn run_cmd(args: &TripleArgs, command: &str) -> Result<MetricReport> {
    let normalize = args.pair.normalize;
    let f = resolve_stats(&args.pair.fake, normalize)?;
    let r = resolve_stats(&args.pair.real, normalize)?;
    let l = resolve_stats(&args.text, normalize)?;
    let cmd = compute_cmd(&f, &r, &l)?;
    let mut report = MetricReport::new(command);
    report
        .input("fake", &args.pair.fake)
        .input("real", &args.pair.real)
        .input("text", &args.text)
        .count("fake", f.n())
        .count("real", r.n())
        .count("text", l.n())
        .count("dim", f.dim())
        .value("itdis", cmd.itdis)
        .hyper("normalize", normalize)
        .hyper("fallback_ridge", FALLBACK_RIDGE);
    report
        .regularized
        .insert("dis_fl".into(), cmd.regularized.dis_fl);
    report
        .regularized
        .insert("dis_rl".into(), cmd.regularized.dis_rl);
    if command == "cmd" {
        report
            .value("dis_fr", cmd.dis_fr)
            .value("dis_fl", cmd.dis_fl)
            .value("dis_rl", cmd.dis_rl)
            .value("cmd", cmd.cmd);
        report
            .regularized
            .insert("dis_fr".into(), cmd.regularized.dis_fr);
    }
    Ok(report)
}

fn bundle_report(command: &str, path: &Path, bundle: &Bundle) -> MetricReport {
    let mut report = MetricReport::new(command);
    let c = &bundle.captions;
    report
        .input("bundle", path)
        .count("m", c.m())
        .count("d", c.dim());
    if let Some(regions) = c.regions() {
        report.count("r", regions[0].rows());
    }
    if let Some(words) = c.words() {
        report
            .count("n_total", words.iter().map(|w| w.rows()).sum::<usize>())
            .count("max_words", c.max_words().unwrap_or(0));
    }
    report
}

fn run_retrieval(args: &RetrievalArgs) -> Result<MetricReport> {
    let bundle = load_bundle(&args.bundle)?;
    let level = MatchLevel::from(args.level);
    if level == MatchLevel::Word {
        bundle.require_word_level()?;
    }
    let scores = build_similarity_matrix(&bundle.captions, level, &args.word.params())?;
    let recall = rank_retrieval(&scores, &DEFAULT_KS)?;
    let mut report = bundle_report("retrieval", &args.bundle, &bundle);
    for r in &recall.recalls {
        report
            .value(&format!("r{}_i2t", r.k), r.image_to_text)
            .value(&format!("r{}_t2i", r.k), r.text_to_image);
    }
    report.hyper(
        "level",
        match level {
            MatchLevel::Sentence => "sentence",
            MatchLevel::Word => "word",
        },
    );
    args.word.record(&mut report);
    Ok(report)
}

fn run_itm_loss(args: &ItmLossArgs) -> Result<MetricReport> {
    let bundle = load_bundle(&args.bundle)?;
    bundle.require_word_level()?;
    let params = args.word.params();
    let sentence = build_similarity_matrix(&bundle.captions, MatchLevel::Sentence, &params)?;
    let word = build_similarity_matrix(&bundle.captions, MatchLevel::Word, &params)?;
    let (l1s, l2s) = contrastive_loss(&sentence, args.gamma)?;
    let (l1w, l2w) = contrastive_loss(&word, args.gamma)?;
    let total = itm_total(l1s, l2s, l1w, l2w, args.lambda1, args.lambda2)?;
    let mut report = bundle_report("itm-loss", &args.bundle, &bundle);
    report
        .value("l1_s", l1s)
        .value("l2_s", l2s)
        .value("l1_w", l1w)
        .value("l2_w", l2w)
        .value("total", total)
        .hyper("gamma", args.gamma)
        .hyper("lambda1", args.lambda1)
        .hyper("lambda2", args.lambda2);
    args.word.record(&mut report);
    Ok(report)
}
