//! Unigram text baseline: per-user relative unigram frequencies over the
//! aggregate set of messages, and a linear classifier trained on them for
//! comparing the emoji model against a text-only model.

use std::collections::{BTreeMap, HashMap};

use super::{train_ridge, ModelKind, TrainedModel};
use crate::error::{Error, Result};
use crate::features::manifest_fingerprint;

/// Lowercased alphanumeric runs. Emoji and punctuation act as separators, so
/// emojis never enter the vocabulary (they belong to the emoji model).
fn unigrams(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Builds the unigram frequency matrix: one row per user (aligned with the
/// input order), columns are the sorted vocabulary of tokens appearing in at
/// least `min_df` users. Frequencies are relative to the user's total token
/// count over all their messages.
pub fn unigram_text_features(
    user_messages: &[Vec<String>],
    min_df: usize,
) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    if user_messages.is_empty() {
        return Err(Error::Argument("no users given".into()));
    }
    for (i, msgs) in user_messages.iter().enumerate() {
        if msgs.is_empty() {
            return Err(Error::Argument(format!("user row {i} has no messages")));
        }
    }

    let per_user_counts: Vec<HashMap<String, u64>> = user_messages
        .iter()
        .map(|msgs| {
            let mut counts: HashMap<String, u64> = HashMap::new();
            for msg in msgs {
                for token in unigrams(msg) {
                    *counts.entry(token).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect();

    let mut document_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in &per_user_counts {
        for token in counts.keys() {
            *document_freq.entry(token).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<String> = document_freq
        .iter()
        .filter(|(_, &df)| df >= min_df)
        .map(|(t, _)| t.to_string())
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::Argument(format!(
            "empty vocabulary: no token appears in >= {min_df} users"
        )));
    }

    let rows = per_user_counts
        .iter()
        .map(|counts| {
            let total: u64 = counts.values().sum();
            vocabulary
                .iter()
                .map(|t| {
                    if total == 0 {
                        0.0
                    } else {
                        counts.get(t).copied().unwrap_or(0) as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok((rows, vocabulary))
}

/// Trains the text-only baseline: ridge on unigram frequencies. The model's
/// fingerprint is derived from the vocabulary, so it can only be applied to
/// matrices built with the same vocabulary. Returns the model and the
/// vocabulary it expects.
pub fn train_unigram_baseline(
    user_messages: &[Vec<String>],
    y: &[u8],
    lambda: f64,
    min_df: usize,
    seed: u64,
) -> Result<(TrainedModel, Vec<String>)> {
    let (rows, vocabulary) = unigram_text_features(user_messages, min_df)?;
    let mut model = train_ridge(&rows, y, lambda, &manifest_fingerprint(&vocabulary), seed)?;
    model.kind = ModelKind::UnigramLinear;
    Ok((model, vocabulary))
}
