//! Command-line surface for the emoji analytics pipeline.
//!
//! Subcommands: `synth`, `analyze`, `graph`, `features`, `train`, `eval`.
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

mod commands;
mod out;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emojistats::lexicon::NormalizationPolicy;
use emojistats::{Error, Result};

use commands::{
    cmd_analyze, cmd_eval, cmd_features, cmd_graph, cmd_synth, cmd_train, parse_buckets,
    parse_gender_filter, parse_time_window, AnalyzeArgs, CommonArgs, EvalArgs, FeaturesArgs,
    GraphArgs, TrainArgs,
};
use out::OutDir;

#[derive(Parser)]
#[command(
    name = "emojistats",
    version,
    about = "Emoji usage analytics: corpus statistics, co-occurrence communities, and emoji-based gender inference"
)]
struct Cli {
    /// Emoji lexicon TSV (header `#policy ...`, rows `<hex>\t<name>\t<keywords>[\t<group>]`).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,

    /// Sentiment lexicon TSV (`<word>\t<posemo>\t<negemo>`).
    #[arg(long, global = true)]
    sentiment_lexicon: Option<PathBuf>,

    /// Normalization policy override, replacing the lexicon header policy.
    /// Comma-separated flags: fold-skin-tones=<bool>,strip-vs=<bool>,keep-zwj=<bool>;
    /// unspecified flags take their defaults (true).
    #[arg(long, global = true)]
    policy: Option<String>,

    /// Seed for every stochastic choice (splits, Louvain order).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory; created if missing. Every run writes run.json here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus from a JSON config.
    Synth {
        /// SyntheticConfig JSON file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Popularity, CDF, discriminative-emoji, and sentiment reports.
    Analyze {
        /// Input corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// p(Male|e) threshold for tagging male emojis (default: corpus male share).
        #[arg(long)]
        male_threshold: Option<f64>,
        /// Name/group classes compared alongside positive/negative.
        #[arg(long, default_value = "face,heart")]
        groups: String,
        /// Keep only messages with timestamp in [lo, hi); either bound may be empty.
        #[arg(long)]
        time_window: Option<String>,
        /// Rows in top_emojis.csv per gender.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Emoji co-occurrence graph (PMI edges) and Louvain communities.
    Graph {
        #[arg(long)]
        corpus: PathBuf,
        /// Population: F, M, or all.
        #[arg(long, default_value = "all")]
        gender: String,
        /// Neighbors each emoji selects by largest positive PMI.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Louvain resolution.
        #[arg(long, default_value_t = 0.2)]
        resolution: f64,
        #[arg(long)]
        time_window: Option<String>,
    },
    /// Per-user feature matrix for labeled users.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        /// Keep users with at least this many emoji messages.
        #[arg(long, default_value_t = 100)]
        min_emoji_msgs: u64,
        /// Exclusive upper bound on emoji messages.
        #[arg(long)]
        max_emoji_msgs: Option<u64>,
        #[arg(long)]
        time_window: Option<String>,
    },
    /// Train a classifier on a feature matrix (with an internal train/test split).
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// ridge or gbc.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        /// Run k-fold cross-validation over the default grid for the kind.
        #[arg(long)]
        cv: Option<usize>,
    },
    /// Evaluate a model on a held-out id list or on emoji-message-count buckets.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        holdout: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated lo:hi buckets over emoji-message counts, e.g. 80:100,60:80.
        #[arg(long)]
        buckets: Option<String>,
        #[arg(long)]
        time_window: Option<String>,
    },
}

fn parse_policy(s: &str) -> Result<NormalizationPolicy> {
    let mut policy = NormalizationPolicy::default();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Argument(format!("bad policy flag `{part}`")))?;
        let flag = match value {
            "true" => true,
            "false" => false,
            _ => return Err(Error::Argument(format!("bad boolean `{value}` in --policy"))),
        };
        match key {
            "fold-skin-tones" => policy.fold_skin_tones = flag,
            "strip-vs" => policy.strip_variation_selectors = flag,
            "keep-zwj" => policy.keep_zwj_sequences_distinct = flag,
            _ => return Err(Error::Argument(format!("unknown policy flag `{key}`"))),
        }
    }
    Ok(policy)
}

fn run(cli: Cli, out: &mut OutDir) -> Result<()> {
    let common = CommonArgs {
        lexicon: cli.lexicon,
        sentiment_lexicon: cli.sentiment_lexicon,
        policy_override: cli.policy.as_deref().map(parse_policy).transpose()?,
        seed: cli.seed,
    };
    match cli.command {
        Command::Synth { config } => cmd_synth(out, &config),
        Command::Analyze {
            corpus,
            male_threshold,
            groups,
            time_window,
            top,
        } => cmd_analyze(
            out,
            &common,
            &AnalyzeArgs {
                corpus,
                male_threshold,
                groups: groups
                    .split(',')
                    .filter(|g| !g.is_empty())
                    .map(str::to_string)
                    .collect(),
                time_window: time_window.as_deref().map(parse_time_window).transpose()?,
                top,
            },
        ),
        Command::Graph {
            corpus,
            gender,
            k,
            resolution,
            time_window,
        } => cmd_graph(
            out,
            &common,
            &GraphArgs {
                corpus,
                gender: parse_gender_filter(&gender)?,
                k,
                resolution,
                time_window: time_window.as_deref().map(parse_time_window).transpose()?,
            },
        ),
        Command::Features {
            corpus,
            min_emoji_msgs,
            max_emoji_msgs,
            time_window,
        } => cmd_features(
            out,
            &common,
            &FeaturesArgs {
                corpus,
                min_emoji_msgs,
                max_emoji_msgs,
                time_window: time_window.as_deref().map(parse_time_window).transpose()?,
            },
        ),
        Command::Train {
            features,
            manifest,
            kind,
            train_fraction,
            cv,
        } => cmd_train(
            out,
            &common,
            &TrainArgs {
                features,
                manifest,
                kind,
                train_fraction,
                cv,
            },
        ),
        Command::Eval {
            model,
            features,
            manifest,
            holdout,
            corpus,
            buckets,
            time_window,
        } => {
            if let Some(b) = &buckets {
                parse_buckets(b)?;
            }
            cmd_eval(
                out,
                &common,
                &EvalArgs {
                    model,
                    features,
                    manifest,
                    holdout,
                    corpus,
                    buckets,
                    time_window: time_window.as_deref().map(parse_time_window).transpose()?,
                },
            )
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Argument(_) => 2,
        Error::Numerical(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_path = match &cli.out {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --out <DIR> is required");
            return ExitCode::from(2);
        }
    };
    let mut out = match OutDir::create(&out_path) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.cleanup_partial();
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
