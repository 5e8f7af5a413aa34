//! The per-user feature schema: 9 frequency features, one preference feature
//! per lexicon entry, and 5 sentiment features (14 + |lexicon| total).
//!
//! Users with no emoji messages get the all-zero vector, so downstream
//! classifiers see "absence" instead of NaNs and low-activity buckets stay
//! representable.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::corpus::UserAggregate;
use crate::error::{Error, Result};
use crate::lexicon::{EmojiLexicon, EmojiSeq, SentimentLabel};

pub const FREQUENCY_DIM: usize = 9;
pub const SENTIMENT_DIM: usize = 5;

/// One user's feature vector, ordered as the column manifest records:
/// frequency block, then one preference entry per lexicon emoji in lexicon
/// order, then the sentiment block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Column names in matrix order.
pub fn feature_columns(lexicon: &EmojiLexicon) -> Vec<String> {
    let mut cols = vec![
        "freq_emoji_msg_pct".to_string(),
        "freq_mean_emojis_per_msg".to_string(),
        "freq_max_emojis_per_msg".to_string(),
        "freq_median_emojis_per_msg".to_string(),
        "freq_emoji_only_pct".to_string(),
        "freq_single_emoji_in_text_pct".to_string(),
        "freq_multi_nonconsecutive_pct".to_string(),
        "freq_multi_consecutive_pct".to_string(),
        "freq_repeating_pct".to_string(),
    ];
    for entry in lexicon.entries() {
        cols.push(format!("pref_{}", entry.sequence.hex().replace(' ', "_")));
    }
    cols.extend(
        [
            "sent_positive_token_share",
            "sent_negative_token_share",
            "sent_msgs_with_positive_pct",
            "sent_msgs_with_negative_pct",
            "sent_msgs_with_both_pct",
        ]
        .map(String::from),
    );
    cols
}

/// SHA-256 fingerprint of a column manifest; models record it so feature
/// matrices and models can only meet when their schemas match.
pub fn manifest_fingerprint(columns: &[String]) -> String {
    let mut hasher = Sha256::new();
    for c in columns {
        hasher.update(c.as_bytes());
        hasher.update(b"\n");
    }
    format!("{:x}", hasher.finalize())
}

fn median_of_sorted(counts: &[u32]) -> f64 {
    let n = counts.len();
    if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] as f64 + counts[n / 2] as f64) / 2.0
    }
}

/// Builds one user's vector. The aggregate must come from the same lexicon;
/// an emoji in the aggregate that the lexicon does not know is a consistency
/// error.
pub fn build_features(
    u: &UserAggregate,
    lexicon: &EmojiLexicon,
    labels: &BTreeMap<EmojiSeq, SentimentLabel>,
) -> Result<FeatureVector> {
    for seq in u.per_emoji_counts.keys() {
        if !lexicon.contains(seq) {
            return Err(Error::Data(format!(
                "aggregate for `{}` contains {} which is not in the lexicon",
                u.user_id,
                seq.hex()
            )));
        }
    }
    let dim = FREQUENCY_DIM + lexicon.len() + SENTIMENT_DIM;
    if u.emoji_msg_count == 0 {
        return Ok(FeatureVector {
            values: vec![0.0; dim],
        });
    }

    let mut values = Vec::with_capacity(dim);
    let emoji_msgs = u.emoji_msg_count as f64;

    // Frequency block.
    values.push(u.emoji_msg_count as f64 / u.msg_count as f64);
    let mut counts: Vec<u32> = u.emoji_msgs.iter().map(|m| m.emoji_count).collect();
    counts.sort_unstable();
    let total_in_emoji_msgs: u64 = counts.iter().map(|&c| c as u64).sum();
    values.push(total_in_emoji_msgs as f64 / emoji_msgs);
    values.push(*counts.last().unwrap() as f64);
    values.push(median_of_sorted(&counts));
    values.push(u.pattern_counts.emoji_only as f64 / emoji_msgs);
    values.push(u.pattern_counts.single_emoji_in_text as f64 / emoji_msgs);
    values.push(u.pattern_counts.multi_nonconsecutive as f64 / emoji_msgs);
    values.push(u.pattern_counts.multi_consecutive as f64 / emoji_msgs);
    values.push(u.pattern_counts.repeating as f64 / emoji_msgs);

    // Preference block, in lexicon order.
    let total_tokens = u.total_emoji_tokens() as f64;
    for entry in lexicon.entries() {
        let count = u.per_emoji_counts.get(&entry.sequence).copied().unwrap_or(0);
        values.push(count as f64 / total_tokens);
    }

    // Sentiment block.
    let mut pos_tokens = 0u64;
    let mut neg_tokens = 0u64;
    for (seq, &c) in &u.per_emoji_counts {
        match labels.get(seq) {
            Some(SentimentLabel::Positive) => pos_tokens += c,
            Some(SentimentLabel::Negative) => neg_tokens += c,
            _ => {}
        }
    }
    let mut msgs_pos = 0u64;
    let mut msgs_neg = 0u64;
    let mut msgs_both = 0u64;
    for msg in &u.emoji_msgs {
        let mut has_pos = false;
        let mut has_neg = false;
        for seq in &msg.distinct {
            match labels.get(seq) {
                Some(SentimentLabel::Positive) => has_pos = true,
                Some(SentimentLabel::Negative) => has_neg = true,
                _ => {}
            }
        }
        if has_pos {
            msgs_pos += 1;
        }
        if has_neg {
            msgs_neg += 1;
        }
        if has_pos && has_neg {
            msgs_both += 1;
        }
    }
    values.push(pos_tokens as f64 / total_tokens);
    values.push(neg_tokens as f64 / total_tokens);
    values.push(msgs_pos as f64 / emoji_msgs);
    values.push(msgs_neg as f64 / emoji_msgs);
    values.push(msgs_both as f64 / emoji_msgs);

    debug_assert_eq!(values.len(), dim);
    Ok(FeatureVector { values })
}

/// Feature matrix over labeled users, rows sorted by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub user_ids: Vec<String>,
    /// 0 = Female, 1 = Male.
    pub labels: Vec<u8>,
    pub rows: Vec<Vec<f64>>,
    pub columns: Vec<String>,
}

impl FeatureMatrix {
    pub fn fingerprint(&self) -> String {
        manifest_fingerprint(&self.columns)
    }
}

/// Builds the matrix for a fully labeled user set; any unlabeled user is an
/// argument error. Row order is deterministic (sorted by user id) and the
/// column order is recorded in `columns`.
pub fn feature_matrix(
    users: &[UserAggregate],
    lexicon: &EmojiLexicon,
    labels: &BTreeMap<EmojiSeq, SentimentLabel>,
) -> Result<FeatureMatrix> {
    let mut order: Vec<&UserAggregate> = users.iter().collect();
    order.sort_by(|a, b| a.user_id.cmp(&b.user_id));

    let mut user_ids = Vec::with_capacity(order.len());
    let mut y = Vec::with_capacity(order.len());
    let mut rows = Vec::with_capacity(order.len());
    for u in order {
        let gender = u.gender.ok_or_else(|| {
            Error::Argument(format!("user `{}` has no gender label", u.user_id))
        })?;
        user_ids.push(u.user_id.clone());
        y.push(match gender {
            crate::corpus::Gender::Female => 0u8,
            crate::corpus::Gender::Male => 1u8,
        });
        rows.push(build_features(u, lexicon, labels)?.values);
    }
    Ok(FeatureMatrix {
        user_ids,
        labels: y,
        rows,
        columns: feature_columns(lexicon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{aggregate, Corpus, Gender, Message};
    use crate::lexicon::{EmojiEntry, NormalizationPolicy, SentimentLexicon};

    fn lex() -> EmojiLexicon {
        let entry = |hex: &str, name: &str| EmojiEntry {
            sequence: EmojiSeq::parse_hex(hex).unwrap(),
            name: name.into(),
            keywords: vec![],
            group: None,
        };
        EmojiLexicon::from_entries(
            [entry("1F602", "face with tears of joy"), entry("1F622", "crying face")],
            NormalizationPolicy::default(),
        )
        .unwrap()
    }

    fn labels(lex: &EmojiLexicon) -> BTreeMap<EmojiSeq, SentimentLabel> {
        let slex =
            SentimentLexicon::from_entries([("joy", 1.0, 0.0), ("crying", 0.0, 1.0)]).unwrap();
        lex.label_all(&slex)
    }

    fn msg(user: &str, text: &str) -> Message {
        Message {
            user_id: user.into(),
            gender: Some(Gender::Female),
            lang: None,
            timestamp: None,
            text: text.into(),
        }
    }

    #[test]
    fn hand_computed_three_message_example() {
        let lex = lex();
        let labels = labels(&lex);
        let corpus = Corpus::from_messages(vec![
            msg("u", "😂"),
            msg("u", "a😂b😢"),
            msg("u", "hi"),
        ]);
        let users = aggregate(&corpus, &lex);
        let v = build_features(&users[0], &lex, &labels).unwrap().values;

        let expected = vec![
            2.0 / 3.0, // %emoji-msg
            1.5,       // mean emojis per emoji message
            2.0,       // max
            1.5,       // median of [1, 2]
            0.5,       // emoji_only: only "😂"
            0.0,       // single emoji in text
            0.5,       // multi nonconsecutive: "a😂b😢"
            0.0,       // multi consecutive
            0.0,       // repeating
            2.0 / 3.0, // pref 😂
            1.0 / 3.0, // pref 😢
            2.0 / 3.0, // positive token share
            1.0 / 3.0, // negative token share
            1.0,       // msgs with positive
            0.5,       // msgs with negative
            0.5,       // msgs with both
        ];
        assert_eq!(v, expected);
    }

    #[test]
    fn zero_emoji_user_gets_all_zero_vector() {
        let lex = lex();
        let labels = labels(&lex);
        let corpus = Corpus::from_messages(vec![msg("u", "hello"), msg("u", "world")]);
        let users = aggregate(&corpus, &lex);
        let v = build_features(&users[0], &lex, &labels).unwrap();
        assert_eq!(v.values, vec![0.0; 16]);
    }

    #[test]
    fn identical_aggregates_give_identical_vectors() {
        let lex = lex();
        let labels = labels(&lex);
        let corpus = Corpus::from_messages(vec![msg("a", "😂 ok"), msg("b", "😂 ok")]);
        let users = aggregate(&corpus, &lex);
        let va = build_features(&users[0], &lex, &labels).unwrap();
        let vb = build_features(&users[1], &lex, &labels).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn unknown_emoji_in_aggregate_is_a_consistency_error() {
        let lex = lex();
        let labels = labels(&lex);
        let mut u = crate::corpus::UserAggregate::new("u", Some(Gender::Female));
        u.msg_count = 1;
        u.emoji_msg_count = 1;
        u.per_emoji_counts
            .insert(EmojiSeq::parse_hex("2764").unwrap(), 1);
        assert!(matches!(build_features(&u, &lex, &labels), Err(Error::Data(_))));
    }

    #[test]
    fn matrix_shape_is_users_by_14_plus_lexicon() {
        let entry = |cp: u32| EmojiEntry {
            sequence: EmojiSeq::new(vec![char::from_u32(cp).unwrap()]),
            name: format!("emoji {cp:X}"),
            keywords: vec![],
            group: None,
        };
        let lex10 =
            EmojiLexicon::from_entries((0..10).map(|i| entry(0x1F600 + i)), NormalizationPolicy::default())
                .unwrap();
        let labels = lex10.label_all(&SentimentLexicon::default());
        let corpus = Corpus::from_messages(vec![msg("a", "😀"), msg("b", "😁"), msg("c", "hi")]);
        let users = aggregate(&corpus, &lex10);
        let matrix = feature_matrix(&users, &lex10, &labels).unwrap();
        assert_eq!(matrix.rows.len(), 3);
        assert_eq!(matrix.columns.len(), 24);
        for row in &matrix.rows {
            assert_eq!(row.len(), 24);
        }
    }

    #[test]
    fn matrix_rejects_unlabeled_users() {
        let lex = lex();
        let labels = labels(&lex);
        let mut m = msg("u", "😂");
        m.gender = None;
        let users = aggregate(&Corpus::from_messages(vec![m]), &lex);
        assert!(feature_matrix(&users, &lex, &labels).is_err());
    }

    #[test]
    fn matrix_row_order_is_input_order_invariant() {
        let lex = lex();
        let labels = labels(&lex);
        let msgs = vec![msg("b", "😂"), msg("a", "😢😂"), msg("c", "plain")];
        let mut reversed = msgs.clone();
        reversed.reverse();
        let m1 = feature_matrix(&aggregate(&Corpus::from_messages(msgs), &lex), &lex, &labels).unwrap();
        let m2 =
            feature_matrix(&aggregate(&Corpus::from_messages(reversed), &lex), &lex, &labels).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.user_ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn preference_simplex_property() {
        use rand::{Rng, SeedableRng};
        let lex = lex();
        let labels = labels(&lex);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let texts = ["😂", "😢", "😂😂", "a😂", "plain", "😂 😢 ok"];
        for _ in 0..100 {
            let n = rng.gen_range(1..10);
            let msgs: Vec<Message> =
                (0..n).map(|_| msg("u", texts[rng.gen_range(0..texts.len())])).collect();
            let users = aggregate(&Corpus::from_messages(msgs), &lex);
            let v = build_features(&users[0], &lex, &labels).unwrap().values;
            let pref_sum: f64 = v[FREQUENCY_DIM..FREQUENCY_DIM + 2].iter().sum();
            assert!(v[FREQUENCY_DIM..FREQUENCY_DIM + 2].iter().all(|&p| p >= 0.0));
            assert!(
                pref_sum == 0.0 || (pref_sum - 1.0).abs() < 1e-12,
                "pref sum {pref_sum}"
            );
            // mean <= max and median <= max whenever defined.
            if users[0].emoji_msg_count > 0 {
                assert!(v[1] <= v[2] + 1e-12);
                assert!(v[3] <= v[2] + 1e-12);
            }
        }
    }

    #[test]
    fn fingerprint_changes_with_schema() {
        let lex = lex();
        let cols = feature_columns(&lex);
        let fp1 = manifest_fingerprint(&cols);
        let mut other = cols.clone();
        other.push("extra".into());
        assert_ne!(fp1, manifest_fingerprint(&other));
        assert_eq!(fp1, manifest_fingerprint(&cols));
    }
}
