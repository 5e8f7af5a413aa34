//! The six pipeline subcommands. Every command echoes its fully-resolved
//! configuration (seed included) into `run.json` and writes flat-file
//! reports; identical configs and seeds produce byte-identical output trees.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use emojistats::corpus::{
    aggregate, filter_by_emoji_msgs, ingest, split, synth::generate_synthetic,
    synth::SyntheticConfig, Corpus, Gender, UserAggregate,
};
use emojistats::features::{feature_matrix, manifest_fingerprint};
use emojistats::lexicon::{EmojiLexicon, NormalizationPolicy, SentimentLexicon};
use emojistats::model::{
    cross_validate, default_gbc_grid, default_ridge_grid, evaluate, load_model,
    majority_baseline, predict, save_model, GbcHyper, Metrics, TrainedModel, TrainerSpec,
};
use emojistats::stats::{
    build_cooccurrence_graph, emoji_msg_fraction, emoji_msg_popularity, empirical_cdf, louvain,
    rank_discriminative, sentiment_usage_stats, top_emojis, EmojiClass, GenderFilter, GenderTag,
    MessageCooccurrence,
};
use emojistats::{Error, Result};

use crate::out::OutDir;
use crate::tables;

#[derive(Serialize)]
struct RunEcho {
    subcommand: &'static str,
    seed: u64,
    policy: Option<NormalizationPolicy>,
    lexicon: Option<String>,
    sentiment_lexicon: Option<String>,
    options: serde_json::Value,
}

pub struct CommonArgs {
    pub lexicon: Option<PathBuf>,
    pub sentiment_lexicon: Option<PathBuf>,
    pub policy_override: Option<NormalizationPolicy>,
    pub seed: u64,
}

impl CommonArgs {
    fn load_lexicon(&self) -> Result<EmojiLexicon> {
        let path = self.lexicon.as_ref().ok_or_else(|| {
            Error::Argument("--lexicon is required for this subcommand".into())
        })?;
        let file = File::open(path)
            .map_err(|e| Error::Data(format!("cannot open lexicon {}: {e}", path.display())))?;
        EmojiLexicon::load(BufReader::new(file), self.policy_override)
    }

    fn load_sentiment(&self) -> Result<SentimentLexicon> {
        let path = self.sentiment_lexicon.as_ref().ok_or_else(|| {
            Error::Argument("--sentiment-lexicon is required for this subcommand".into())
        })?;
        let file = File::open(path).map_err(|e| {
            Error::Data(format!("cannot open sentiment lexicon {}: {e}", path.display()))
        })?;
        SentimentLexicon::load(BufReader::new(file))
    }

    fn path_str(p: &Option<PathBuf>) -> Option<String> {
        p.as_ref().map(|p| p.display().to_string())
    }
}

fn read_corpus(path: &Path, window: Option<(Option<i64>, Option<i64>)>) -> Result<Corpus> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open corpus {}: {e}", path.display())))?;
    let (corpus, report) = ingest(BufReader::new(file))?;
    eprintln!(
        "ingest: {} accepted, {} rejected, {} users",
        report.accepted, report.rejected, report.distinct_users
    );
    for (reason, count) in &report.reject_reasons {
        eprintln!("  rejected {count}: {reason}");
    }
    Ok(match window {
        Some((lo, hi)) => corpus.filter_time_window(lo, hi),
        None => corpus,
    })
}

pub fn parse_time_window(s: &str) -> Result<(Option<i64>, Option<i64>)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Argument(format!("time window `{s}` must be lo:hi")))?;
    let parse = |part: &str, name: &str| -> Result<Option<i64>> {
        if part.is_empty() {
            Ok(None)
        } else {
            part.parse::<i64>()
                .map(Some)
                .map_err(|_| Error::Argument(format!("bad {name} bound `{part}`")))
        }
    };
    Ok((parse(lo, "lower")?, parse(hi, "upper")?))
}

pub fn parse_gender_filter(s: &str) -> Result<GenderFilter> {
    match s {
        "all" => Ok(GenderFilter::All),
        "F" => Ok(GenderFilter::Only(Gender::Female)),
        "M" => Ok(GenderFilter::Only(Gender::Male)),
        other => Err(Error::Argument(format!(
            "gender must be F, M, or all, got `{other}`"
        ))),
    }
}

fn policy_comment(policy: NormalizationPolicy) -> String {
    format!(
        "#policy fold_skin_tones={} strip_vs={} keep_zwj={}\n",
        policy.fold_skin_tones, policy.strip_variation_selectors, policy.keep_zwj_sequences_distinct
    )
}

// ---------------------------------------------------------------------------
// synth

/// The synthetic config is the full seed authority for generation; the
/// global --seed flag plays no part here.
pub fn cmd_synth(out: &mut OutDir, config_path: &Path) -> Result<()> {
    let contents = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Data(format!("cannot read config {}: {e}", config_path.display())))?;
    let config: SyntheticConfig = serde_json::from_str(&contents)?;
    config.validate()?;

    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "synth",
            seed: config.seed,
            policy: None,
            lexicon: None,
            sentiment_lexicon: None,
            options: json!({ "config": config_path.display().to_string(), "resolved": config }),
        },
    )?;
    let jsonl = generate_synthetic(&config)?;
    out.write_string("corpus.jsonl", &jsonl)?;
    println!("sha256(corpus.jsonl) = {:x}", Sha256::digest(jsonl.as_bytes()));
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

pub struct AnalyzeArgs {
    pub corpus: PathBuf,
    pub male_threshold: Option<f64>,
    pub groups: Vec<String>,
    pub time_window: Option<(Option<i64>, Option<i64>)>,
    pub top: usize,
}

pub fn cmd_analyze(out: &mut OutDir, common: &CommonArgs, args: &AnalyzeArgs) -> Result<()> {
    let lexicon = common.load_lexicon()?;
    let sentiment = common.load_sentiment()?;
    let policy = lexicon.policy();

    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "analyze",
            seed: common.seed,
            policy: Some(policy),
            lexicon: CommonArgs::path_str(&common.lexicon),
            sentiment_lexicon: CommonArgs::path_str(&common.sentiment_lexicon),
            options: json!({
                "corpus": args.corpus.display().to_string(),
                "male_threshold": args.male_threshold,
                "groups": args.groups,
                "time_window": args.time_window,
                "top": args.top,
            }),
        },
    )?;

    let corpus = read_corpus(&args.corpus, args.time_window)?;
    let users = aggregate(&corpus, &lexicon);

    // Popularity with z-test.
    let popularity = emoji_msg_popularity(&users)?;
    out.write_json("popularity.json", &json!({ "policy": policy, "stat": popularity }))?;

    // Per-gender CDF of %emoji-msg over users.
    let mut cdf_csv = policy_comment(policy);
    cdf_csv.push_str("gender,x,cdf\n");
    for gender in [Gender::Female, Gender::Male] {
        let values: Vec<f64> = users
            .iter()
            .filter(|u| u.gender == Some(gender) && u.msg_count > 0)
            .map(|u| emoji_msg_fraction(u).expect("msg_count > 0"))
            .collect();
        for (x, f) in empirical_cdf(&values)? {
            cdf_csv.push_str(&format!("{},{x},{f}\n", tables::gender_str(gender)));
        }
    }
    out.write_string("cdf.csv", &cdf_csv)?;

    // Discriminative emoji ranking.
    let rows = rank_discriminative(&users, &lexicon, args.male_threshold)?;
    let mut disc = policy_comment(policy);
    disc.push_str("Rank,MI,Emoji,Hex,p_Male,p_Female,Tag\n");
    for (i, row) in rows.iter().enumerate() {
        disc.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i + 1,
            row.mi,
            row.emoji,
            row.emoji.hex().replace(' ', "_"),
            row.p_male_given_e,
            row.p_female_given_e,
            match row.gender_tag {
                GenderTag::FemaleEmoji => "F",
                GenderTag::MaleEmoji => "M",
            }
        ));
    }
    out.write_string("discriminative.csv", &disc)?;

    // Top emojis per gender.
    let mut top_csv = policy_comment(policy);
    top_csv.push_str("gender,rank,emoji,hex,share\n");
    for gender in [Gender::Female, Gender::Male] {
        let ranked = top_emojis(&users, GenderFilter::Only(gender), args.top)?;
        for (i, (seq, share)) in ranked.iter().enumerate() {
            top_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                tables::gender_str(gender),
                i + 1,
                seq,
                seq.hex().replace(' ', "_"),
                share
            ));
        }
    }
    out.write_string("top_emojis.csv", &top_csv)?;

    // Sentiment and group usage comparison, Bonferroni-adjusted as a batch.
    let labels = lexicon.label_all(&sentiment);
    let mut classes = vec![EmojiClass::Positive, EmojiClass::Negative];
    classes.extend(args.groups.iter().map(|g| EmojiClass::Group(g.clone())));
    let stats = sentiment_usage_stats(&users, &lexicon, &labels, &classes)?;
    out.write_json("sentiment.json", &json!({ "policy": policy, "stats": stats }))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// graph

pub struct GraphArgs {
    pub corpus: PathBuf,
    pub gender: GenderFilter,
    pub k: usize,
    pub resolution: f64,
    pub time_window: Option<(Option<i64>, Option<i64>)>,
}

pub fn cmd_graph(out: &mut OutDir, common: &CommonArgs, args: &GraphArgs) -> Result<()> {
    let lexicon = common.load_lexicon()?;
    let policy = lexicon.policy();
    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "graph",
            seed: common.seed,
            policy: Some(policy),
            lexicon: CommonArgs::path_str(&common.lexicon),
            sentiment_lexicon: None,
            options: json!({
                "corpus": args.corpus.display().to_string(),
                "gender": match args.gender {
                    GenderFilter::All => "all",
                    GenderFilter::Only(Gender::Female) => "F",
                    GenderFilter::Only(Gender::Male) => "M",
                },
                "k": args.k,
                "resolution": args.resolution,
                "time_window": args.time_window,
            }),
        },
    )?;

    let corpus = read_corpus(&args.corpus, args.time_window)?;
    let users = aggregate(&corpus, &lexicon);
    let cooc = MessageCooccurrence::from_aggregates(&users, args.gender);
    let graph = build_cooccurrence_graph(&cooc, args.k)?;

    let mut edges = policy_comment(policy);
    edges.push_str("e1,e2,pmi\n");
    for &(a, b, w) in &graph.edges {
        edges.push_str(&format!(
            "{},{},{w}\n",
            graph.nodes[a as usize], graph.nodes[b as usize]
        ));
    }
    out.write_string("edges.csv", &edges)?;

    let assignment = louvain(&graph, args.resolution, common.seed)?;
    let mut communities = policy_comment(policy);
    communities.push_str(&format!(
        "#modularity={} resolution={} seed={}\n",
        assignment.modularity, assignment.resolution, common.seed
    ));
    communities.push_str("emoji,community\n");
    for (i, seq) in graph.nodes.iter().enumerate() {
        communities.push_str(&format!("{},{}\n", seq, assignment.communities[i]));
    }
    out.write_string("communities.csv", &communities)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// features

pub struct FeaturesArgs {
    pub corpus: PathBuf,
    pub min_emoji_msgs: u64,
    pub max_emoji_msgs: Option<u64>,
    pub time_window: Option<(Option<i64>, Option<i64>)>,
}

pub fn cmd_features(out: &mut OutDir, common: &CommonArgs, args: &FeaturesArgs) -> Result<()> {
    let lexicon = common.load_lexicon()?;
    let sentiment = common.load_sentiment()?;
    let policy = lexicon.policy();
    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "features",
            seed: common.seed,
            policy: Some(policy),
            lexicon: CommonArgs::path_str(&common.lexicon),
            sentiment_lexicon: CommonArgs::path_str(&common.sentiment_lexicon),
            options: json!({
                "corpus": args.corpus.display().to_string(),
                "min_emoji_msgs": args.min_emoji_msgs,
                "max_emoji_msgs": args.max_emoji_msgs,
                "time_window": args.time_window,
            }),
        },
    )?;

    let corpus = read_corpus(&args.corpus, args.time_window)?;
    let users = aggregate(&corpus, &lexicon);
    let labeled: Vec<UserAggregate> = users.into_iter().filter(|u| u.gender.is_some()).collect();
    let kept = filter_by_emoji_msgs(labeled, args.min_emoji_msgs, args.max_emoji_msgs)?;
    if kept.is_empty() {
        return Err(Error::Data(format!(
            "no labeled users with emoji-message count in [{}, {})",
            args.min_emoji_msgs,
            args.max_emoji_msgs.map_or("inf".to_string(), |m| m.to_string())
        )));
    }
    let labels = lexicon.label_all(&sentiment);
    let matrix = feature_matrix(&kept, &lexicon, &labels)?;

    out.write_string("features.csv", &tables::features_csv(&matrix))?;
    out.write_json(
        "manifest.json",
        &tables::Manifest {
            columns: matrix.columns.clone(),
            policy,
            fingerprint: matrix.fingerprint(),
            min_emoji_msgs: args.min_emoji_msgs,
            max_emoji_msgs: args.max_emoji_msgs,
        },
    )?;
    eprintln!("features: {} users x {} columns", matrix.rows.len(), matrix.columns.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

pub struct TrainArgs {
    pub features: PathBuf,
    pub manifest: PathBuf,
    pub kind: String,
    pub train_fraction: f64,
    pub cv: Option<usize>,
}

pub fn cmd_train(out: &mut OutDir, common: &CommonArgs, args: &TrainArgs) -> Result<()> {
    if args.kind != "ridge" && args.kind != "gbc" {
        return Err(Error::Argument(format!(
            "--kind must be ridge or gbc, got `{}`",
            args.kind
        )));
    }
    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "train",
            seed: common.seed,
            policy: None,
            lexicon: None,
            sentiment_lexicon: None,
            options: json!({
                "features": args.features.display().to_string(),
                "manifest": args.manifest.display().to_string(),
                "kind": args.kind,
                "train_fraction": args.train_fraction,
                "cv": args.cv,
            }),
        },
    )?;

    let manifest = tables::load_manifest(&std::fs::read_to_string(&args.manifest)?)?;
    let matrix = tables::parse_features_csv(&std::fs::read_to_string(&args.features)?)?;
    if manifest_fingerprint(&matrix.columns) != manifest.fingerprint {
        return Err(Error::Data(
            "features.csv columns do not match the manifest fingerprint".into(),
        ));
    }

    let indices: Vec<usize> = (0..matrix.rows.len()).collect();
    let (train_idx, test_idx) = split(&indices, args.train_fraction, common.seed)?;
    let take = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            idx.iter().map(|&i| matrix.rows[i].clone()).collect(),
            idx.iter().map(|&i| matrix.labels[i]).collect(),
        )
    };
    let (train_x, train_y) = take(&train_idx);

    let spec = match args.cv {
        Some(folds) => {
            let grid = if args.kind == "ridge" {
                default_ridge_grid()
            } else {
                default_gbc_grid()
            };
            let result = cross_validate(&train_x, &train_y, folds, &grid, common.seed)?;
            out.write_json("cv.json", &result)?;
            eprintln!("cv: chose {:?}", result.chosen);
            result.chosen
        }
        None => {
            if args.kind == "ridge" {
                TrainerSpec::Ridge { lambda: 1.0 }
            } else {
                TrainerSpec::Gbc(GbcHyper::default())
            }
        }
    };

    let model = spec.train(&train_x, &train_y, &manifest.fingerprint, common.seed)?;
    let mut model_bytes = Vec::new();
    save_model(&model, &mut model_bytes)?;
    out.write_bytes("model.json", &model_bytes)?;

    let mut holdout_ids: Vec<String> = test_idx
        .iter()
        .map(|&i| matrix.user_ids[i].clone())
        .collect();
    holdout_ids.sort();
    out.write_json("holdout.json", &json!({ "test_user_ids": holdout_ids }))?;
    eprintln!(
        "train: {} train users, {} held out",
        train_idx.len(),
        test_idx.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

pub struct EvalArgs {
    pub model: PathBuf,
    pub features: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub holdout: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub buckets: Option<String>,
    pub time_window: Option<(Option<i64>, Option<i64>)>,
}

#[derive(Serialize)]
struct EvalReport {
    n_users: usize,
    metrics: Metrics,
    baseline: Metrics,
}

fn metrics_csv(report: &EvalReport) -> String {
    let cell = |v: &Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    let mut out = String::from("Model,Accuracy,Precision_M,Precision_F\n");
    out.push_str(&format!(
        "model,{},{},{}\n",
        report.metrics.accuracy,
        cell(&report.metrics.precision_m),
        cell(&report.metrics.precision_f)
    ));
    out.push_str(&format!(
        "baseline,{},{},{}\n",
        report.baseline.accuracy,
        cell(&report.baseline.precision_m),
        cell(&report.baseline.precision_f)
    ));
    out
}

fn eval_matrix(model: &TrainedModel, x: &[Vec<f64>], truth: &[u8]) -> Result<EvalReport> {
    let (pred, _) = predict(model, x)?;
    Ok(EvalReport {
        n_users: truth.len(),
        metrics: evaluate(&pred, truth)?,
        baseline: majority_baseline(truth)?,
    })
}

pub fn parse_buckets(s: &str) -> Result<Vec<(u64, Option<u64>)>> {
    let mut buckets = Vec::new();
    for part in s.split(',') {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("bucket `{part}` must be lo:hi")))?;
        let lo: u64 = lo
            .parse()
            .map_err(|_| Error::Argument(format!("bad bucket lower bound `{lo}`")))?;
        let hi = if hi.is_empty() {
            None
        } else {
            Some(
                hi.parse::<u64>()
                    .map_err(|_| Error::Argument(format!("bad bucket upper bound `{hi}`")))?,
            )
        };
        buckets.push((lo, hi));
    }
    if buckets.is_empty() {
        return Err(Error::Argument("no buckets given".into()));
    }
    Ok(buckets)
}

pub fn cmd_eval(out: &mut OutDir, common: &CommonArgs, args: &EvalArgs) -> Result<()> {
    let holdout_mode = args.features.is_some() || args.holdout.is_some();
    let bucket_mode = args.corpus.is_some() || args.buckets.is_some();
    if holdout_mode == bucket_mode {
        return Err(Error::Argument(
            "eval needs either --features/--manifest/--holdout or --corpus/--buckets".into(),
        ));
    }

    out.write_json(
        "run.json",
        &RunEcho {
            subcommand: "eval",
            seed: common.seed,
            policy: None,
            lexicon: CommonArgs::path_str(&common.lexicon),
            sentiment_lexicon: CommonArgs::path_str(&common.sentiment_lexicon),
            options: json!({
                "model": args.model.display().to_string(),
                "features": args.features.as_ref().map(|p| p.display().to_string()),
                "manifest": args.manifest.as_ref().map(|p| p.display().to_string()),
                "holdout": args.holdout.as_ref().map(|p| p.display().to_string()),
                "corpus": args.corpus.as_ref().map(|p| p.display().to_string()),
                "buckets": args.buckets,
                "time_window": args.time_window,
            }),
        },
    )?;

    let model = load_model(File::open(&args.model)?)?;

    if holdout_mode {
        let features_path = args.features.as_ref().ok_or_else(|| {
            Error::Argument("--features is required with --holdout".into())
        })?;
        let manifest_path = args.manifest.as_ref().ok_or_else(|| {
            Error::Argument("--manifest is required with --holdout".into())
        })?;
        let holdout_path = args.holdout.as_ref().ok_or_else(|| {
            Error::Argument("--holdout is required with --features".into())
        })?;
        let manifest = tables::load_manifest(&std::fs::read_to_string(manifest_path)?)?;
        if manifest.fingerprint != model.manifest_fingerprint {
            return Err(Error::Data(
                "model manifest fingerprint does not match the given manifest".into(),
            ));
        }
        let matrix = tables::parse_features_csv(&std::fs::read_to_string(features_path)?)?;
        if manifest_fingerprint(&matrix.columns) != manifest.fingerprint {
            return Err(Error::Data(
                "features.csv columns do not match the manifest fingerprint".into(),
            ));
        }
        let holdout: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(holdout_path)?)?;
        let ids: BTreeSet<String> = holdout["test_user_ids"]
            .as_array()
            .ok_or_else(|| Error::Data("holdout file lacks test_user_ids".into()))?
            .iter()
            .filter_map(|v| v.as_str().map(String::from))
            .collect();
        let mut x = Vec::new();
        let mut truth = Vec::new();
        for i in 0..matrix.rows.len() {
            if ids.contains(&matrix.user_ids[i]) {
                x.push(matrix.rows[i].clone());
                truth.push(matrix.labels[i]);
            }
        }
        if x.is_empty() {
            return Err(Error::Data("holdout ids match no row of features.csv".into()));
        }
        let report = eval_matrix(&model, &x, &truth)?;
        out.write_json("metrics.json", &report)?;
        out.write_string("metrics.csv", &metrics_csv(&report))?;
        return Ok(());
    }

    // Bucket mode: rebuild features from the corpus for each bucket.
    let corpus_path = args.corpus.as_ref().ok_or_else(|| {
        Error::Argument("--corpus is required with --buckets".into())
    })?;
    let bucket_spec = args.buckets.as_ref().ok_or_else(|| {
        Error::Argument("--buckets is required with --corpus".into())
    })?;
    let buckets = parse_buckets(bucket_spec)?;
    let lexicon = common.load_lexicon()?;
    let sentiment = common.load_sentiment()?;
    let labels = lexicon.label_all(&sentiment);
    if manifest_fingerprint(&emojistats::features::feature_columns(&lexicon))
        != model.manifest_fingerprint
    {
        return Err(Error::Data(
            "lexicon feature schema does not match the model's manifest fingerprint".into(),
        ));
    }

    let corpus = read_corpus(corpus_path, args.time_window)?;
    let users = aggregate(&corpus, &lexicon);
    let labeled: Vec<UserAggregate> = users.into_iter().filter(|u| u.gender.is_some()).collect();
    for (lo, hi) in buckets {
        let kept = filter_by_emoji_msgs(labeled.clone(), lo, hi)?;
        let suffix = match hi {
            Some(h) => format!("{lo}_{h}"),
            None => format!("{lo}_plus"),
        };
        if kept.is_empty() {
            return Err(Error::Data(format!("bucket [{lo}, {hi:?}) holds no users")));
        }
        let matrix = feature_matrix(&kept, &lexicon, &labels)?;
        let report = eval_matrix(&model, &matrix.rows, &matrix.labels)?;
        out.write_json(&format!("metrics_{suffix}.json"), &report)?;
        out.write_string(&format!("metrics_{suffix}.csv"), &metrics_csv(&report))?;
    }
    Ok(())
}

