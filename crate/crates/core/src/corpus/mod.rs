//! Corpus ingestion and per-user aggregation.
//!
//! Messages arrive as JSONL records. Ingestion is forgiving: invalid lines
//! are counted and skipped rather than aborting the run, and the report says
//! why each line was dropped. Aggregation folds every message through the
//! tokenizer into per-user sufficient statistics; everything downstream
//! (statistics, features, models) reads those aggregates.

pub mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lexicon::{EmojiLexicon, EmojiSeq};
use crate::segment::{classify_patterns, tokenize, Token};

/// Self-reported binary gender label, per the input schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Gender {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Gender {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match String::deserialize(deserializer)?.as_str() {
            "F" => Ok(Gender::Female),
            "M" => Ok(Gender::Male),
            other => Err(D::Error::custom(format!("invalid gender `{other}`"))),
        }
    }
}

/// One raw input record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub user_id: String,
    pub gender: Option<Gender>,
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub timestamp: Option<i64>,
    pub text: String,
}

/// An ingested corpus: the accepted messages, in input order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    messages: Vec<Message>,
}

impl Corpus {
    pub fn from_messages(messages: Vec<Message>) -> Self {
        Corpus { messages }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Keeps messages whose timestamp lies in `[lo, hi)`. Messages without a
    /// timestamp are dropped whenever a bound is active.
    pub fn filter_time_window(&self, lo: Option<i64>, hi: Option<i64>) -> Corpus {
        if lo.is_none() && hi.is_none() {
            return self.clone();
        }
        let messages = self
            .messages
            .iter()
            .filter(|m| match m.timestamp {
                Some(t) => lo.map_or(true, |l| t >= l) && hi.map_or(true, |h| t < h),
                None => false,
            })
            .cloned()
            .collect();
        Corpus { messages }
    }
}

/// What happened during ingestion.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub accepted: u64,
    pub rejected: u64,
    pub distinct_users: u64,
    pub reject_reasons: BTreeMap<String, u64>,
}

/// Reads JSONL records, skipping and counting invalid lines. Fails only on
/// unreadable input or when more than half of the non-empty lines are
/// rejected (which almost always means the wrong file was passed).
pub fn ingest<R: BufRead>(reader: R) -> Result<(Corpus, IngestReport)> {
    let mut report = IngestReport::default();
    let mut messages = Vec::new();
    let mut users: HashMap<String, ()> = HashMap::new();

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_record(trimmed) {
            Ok(msg) => {
                report.accepted += 1;
                users.entry(msg.user_id.clone()).or_insert(());
                messages.push(msg);
            }
            Err(reason) => {
                report.rejected += 1;
                *report.reject_reasons.entry(reason).or_insert(0) += 1;
            }
        }
    }
    report.distinct_users = users.len() as u64;

    let total = report.accepted + report.rejected;
    if total > 0 && report.rejected * 2 > total {
        return Err(Error::Data(format!(
            "{} of {} lines rejected; input does not look like a message corpus",
            report.rejected, total
        )));
    }
    Ok((Corpus { messages }, report))
}

fn parse_record(line: &str) -> std::result::Result<Message, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|_| "invalid json".to_string())?;
    let obj = value.as_object().ok_or("not a json object")?;

    let user_id = match obj.get("user_id") {
        None | Some(serde_json::Value::Null) => return Err("missing user_id".into()),
        Some(serde_json::Value::String(s)) if s.is_empty() => return Err("empty user_id".into()),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err("user_id not a string".into()),
    };
    let text = match obj.get("text") {
        None | Some(serde_json::Value::Null) => return Err("missing text".into()),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err("text not a string".into()),
    };
    let gender = match obj.get("gender") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => match s.as_str() {
            "F" => Some(Gender::Female),
            "M" => Some(Gender::Male),
            _ => return Err("invalid gender".into()),
        },
        Some(_) => return Err("invalid gender".into()),
    };
    let lang = match obj.get("lang") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("invalid lang".into()),
    };
    let timestamp = match obj.get("timestamp") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(v.as_i64().ok_or("invalid timestamp")?),
    };

    Ok(Message {
        user_id,
        gender,
        lang,
        timestamp,
        text,
    })
}

/// Per-flag counters over a user's emoji messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PatternCounts {
    pub emoji_only: u64,
    pub single_emoji_in_text: u64,
    pub multi_nonconsecutive: u64,
    pub multi_consecutive: u64,
    pub repeating: u64,
}

/// Summary of one emoji message: how many emoji tokens it held and which
/// distinct canonical sequences appeared (sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiMsgSummary {
    pub emoji_count: u32,
    pub distinct: Vec<EmojiSeq>,
}

/// Per-user sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAggregate {
    pub user_id: String,
    /// None = unlabeled; such users are kept for corpus-level stats but
    /// excluded from every gendered computation.
    pub gender: Option<Gender>,
    /// Majority language tag over the user's messages (ties break to the
    /// lexicographically smallest tag).
    pub lang: Option<String>,
    pub msg_count: u64,
    pub emoji_msg_count: u64,
    /// Token counts per canonical sequence; values are always >= 1.
    pub per_emoji_counts: BTreeMap<EmojiSeq, u64>,
    pub pattern_counts: PatternCounts,
    /// One summary per emoji message, in message order.
    pub emoji_msgs: Vec<EmojiMsgSummary>,
}

impl UserAggregate {
    pub fn new(user_id: impl Into<String>, gender: Option<Gender>) -> Self {
        UserAggregate {
            user_id: user_id.into(),
            gender,
            lang: None,
            msg_count: 0,
            emoji_msg_count: 0,
            per_emoji_counts: BTreeMap::new(),
            pattern_counts: PatternCounts::default(),
            emoji_msgs: Vec::new(),
        }
    }

    /// Folds one tokenized message into the aggregate.
    pub fn observe(&mut self, tokens: &[Token], text: &str) {
        self.msg_count += 1;
        let flags = classify_patterns(tokens, text);
        if flags.emoji_count == 0 {
            return;
        }
        self.emoji_msg_count += 1;
        if flags.emoji_only {
            self.pattern_counts.emoji_only += 1;
        }
        if flags.single_emoji_in_text {
            self.pattern_counts.single_emoji_in_text += 1;
        }
        if flags.multi_nonconsecutive {
            self.pattern_counts.multi_nonconsecutive += 1;
        }
        if flags.multi_consecutive {
            self.pattern_counts.multi_consecutive += 1;
        }
        if flags.repeating {
            self.pattern_counts.repeating += 1;
        }
        let mut distinct: Vec<EmojiSeq> = Vec::new();
        for t in tokens {
            if let Token::Emoji { seq, .. } = t {
                *self.per_emoji_counts.entry(seq.clone()).or_insert(0) += 1;
                if !distinct.contains(seq) {
                    distinct.push(seq.clone());
                }
            }
        }
        distinct.sort();
        self.emoji_msgs.push(EmojiMsgSummary {
            emoji_count: flags.emoji_count,
            distinct,
        });
    }

    /// True if the user sent at least one emoji token overall.
    pub fn uses(&self, seq: &EmojiSeq) -> bool {
        self.per_emoji_counts.contains_key(seq)
    }

    pub fn total_emoji_tokens(&self) -> u64 {
        self.per_emoji_counts.values().sum()
    }

    /// Count-merge of two shards of the same user. Counters are associative
    /// and commutative; `emoji_msgs` concatenates (multiset semantics), and
    /// gender/lang keep the first non-null value.
    pub fn merge(&mut self, other: UserAggregate) {
        debug_assert_eq!(self.user_id, other.user_id);
        self.gender = self.gender.or(other.gender);
        if self.lang.is_none() {
            self.lang = other.lang;
        }
        self.msg_count += other.msg_count;
        self.emoji_msg_count += other.emoji_msg_count;
        for (seq, n) in other.per_emoji_counts {
            *self.per_emoji_counts.entry(seq).or_insert(0) += n;
        }
        self.pattern_counts.emoji_only += other.pattern_counts.emoji_only;
        self.pattern_counts.single_emoji_in_text += other.pattern_counts.single_emoji_in_text;
        self.pattern_counts.multi_nonconsecutive += other.pattern_counts.multi_nonconsecutive;
        self.pattern_counts.multi_consecutive += other.pattern_counts.multi_consecutive;
        self.pattern_counts.repeating += other.pattern_counts.repeating;
        self.emoji_msgs.extend(other.emoji_msgs);
    }
}

/// Aggregates a corpus into per-user statistics, sorted by user id.
///
/// The first non-null gender seen for a user wins; users with no gender stay
/// in the output flagged unlabeled.
pub fn aggregate(corpus: &Corpus, lexicon: &EmojiLexicon) -> Vec<UserAggregate> {
    struct Accum {
        agg: UserAggregate,
        lang_counts: BTreeMap<String, u64>,
    }
    let mut by_user: HashMap<String, Accum> = HashMap::new();
    for msg in corpus.messages() {
        let acc = by_user.entry(msg.user_id.clone()).or_insert_with(|| Accum {
            agg: UserAggregate::new(msg.user_id.clone(), None),
            lang_counts: BTreeMap::new(),
        });
        if acc.agg.gender.is_none() {
            acc.agg.gender = msg.gender;
        }
        if let Some(lang) = &msg.lang {
            *acc.lang_counts.entry(lang.clone()).or_insert(0) += 1;
        }
        let tokens = tokenize(&msg.text, lexicon);
        acc.agg.observe(&tokens, &msg.text);
    }
    let mut out: Vec<UserAggregate> = by_user
        .into_values()
        .map(|mut acc| {
            acc.agg.lang = acc
                .lang_counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(tag, _)| tag.clone());
            acc.agg
        })
        .collect();
    out.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    out
}

/// Keeps users whose emoji-message count lies in `[min, max)`; no upper
/// bound when `max` is `None`.
pub fn filter_by_emoji_msgs(
    users: Vec<UserAggregate>,
    min_inclusive: u64,
    max_exclusive: Option<u64>,
) -> Result<Vec<UserAggregate>> {
    if let Some(max) = max_exclusive {
        if max <= min_inclusive {
            return Err(Error::Argument(format!(
                "emoji-message bounds inverted: [{min_inclusive}, {max})"
            )));
        }
    }
    Ok(users
        .into_iter()
        .filter(|u| {
            u.emoji_msg_count >= min_inclusive
                && max_exclusive.map_or(true, |max| u.emoji_msg_count < max)
        })
        .collect())
}

/// Seeded random partition into train/test. The train side gets
/// `floor(n * train_fraction)` items; the split is a disjoint, exhaustive
/// partition and is a pure function of (item order, fraction, seed).
pub fn split<T: Clone>(items: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.is_empty() {
        return Err(Error::Argument("cannot split an empty list".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..items.len()).collect();
    indices.shuffle(&mut rng);
    let train_size = (items.len() as f64 * train_fraction).floor() as usize;
    let train = indices[..train_size].iter().map(|&i| items[i].clone()).collect();
    let test = indices[train_size..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{EmojiEntry, NormalizationPolicy};
    use std::io::Cursor;

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

    fn msg(user: &str, gender: Option<Gender>, text: &str) -> Message {
        Message {
            user_id: user.into(),
            gender,
            lang: None,
            timestamp: None,
            text: text.into(),
        }
    }

    #[test]
    fn ingest_counts_accept_and_reject() {
        let input = r#"{"user_id":"u1","gender":"F","lang":"en","timestamp":1,"text":"hi"}
{"user_id":"u2","gender":"M","lang":null,"timestamp":null,"text":"yo"}
{"user_id":"u1","gender":"F","lang":"en","timestamp":2,"text":"again"}
not json at all
"#;
        let (corpus, report) = ingest(Cursor::new(input)).unwrap();
        assert_eq!(report.accepted, 3);
        assert_eq!(report.rejected, 1);
        assert_eq!(report.distinct_users, 2);
        assert_eq!(corpus.len(), 3);
        assert_eq!(report.reject_reasons.get("invalid json"), Some(&1));
    }

    #[test]
    fn ingest_rejects_missing_user_id_with_reason() {
        let input = r#"{"gender":"F","text":"hi"}
{"user_id":"u1","text":"ok"}
"#;
        let (_, report) = ingest(Cursor::new(input)).unwrap();
        assert_eq!(report.rejected, 1);
        assert_eq!(report.reject_reasons.get("missing user_id"), Some(&1));
    }

    #[test]
    fn ingest_keeps_duplicate_lines() {
        let line = r#"{"user_id":"u1","gender":"F","text":"same"}"#;
        let input = format!("{line}\n{line}\n");
        let (corpus, report) = ingest(Cursor::new(input)).unwrap();
        assert_eq!(report.accepted, 2);
        assert_eq!(corpus.len(), 2);
    }

    #[test]
    fn ingest_fails_when_mostly_garbage() {
        let input = "garbage\nmore garbage\n{\"user_id\":\"u1\",\"text\":\"hi\"}\n";
        match ingest(Cursor::new(input)) {
            Err(Error::Data(msg)) => assert!(msg.contains("rejected")),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_bad_gender_value() {
        let input = r#"{"user_id":"u1","gender":"X","text":"hi"}
{"user_id":"u2","text":"ok"}
"#;
        let (_, report) = ingest(Cursor::new(input)).unwrap();
        assert_eq!(report.reject_reasons.get("invalid gender"), Some(&1));
    }

    #[test]
    fn aggregate_hand_count() {
        let corpus = Corpus::from_messages(vec![
            msg("u1", Some(Gender::Female), "hi"),
            msg("u1", Some(Gender::Female), "😂"),
            msg("u1", Some(Gender::Female), "😂😂"),
        ]);
        let users = aggregate(&corpus, &lex());
        assert_eq!(users.len(), 1);
        let u = &users[0];
        assert_eq!(u.msg_count, 3);
        assert_eq!(u.emoji_msg_count, 2);
        let joy = EmojiSeq::parse_hex("1F602").unwrap();
        assert_eq!(u.per_emoji_counts.get(&joy), Some(&3));
        let counts: Vec<u32> = u.emoji_msgs.iter().map(|m| m.emoji_count).collect();
        assert_eq!(counts, vec![1, 2]);
        assert_eq!(u.pattern_counts.emoji_only, 2);
        assert_eq!(u.pattern_counts.repeating, 1);
    }

    #[test]
    fn aggregate_no_emoji_user() {
        let corpus = Corpus::from_messages(vec![msg("u1", Some(Gender::Male), "plain words")]);
        let users = aggregate(&corpus, &lex());
        assert_eq!(users[0].emoji_msg_count, 0);
        assert!(users[0].per_emoji_counts.is_empty());
        assert!(users[0].emoji_msgs.is_empty());
    }

    #[test]
    fn aggregate_is_order_invariant() {
        let a = vec![
            msg("u1", Some(Gender::Female), "😂 hi"),
            msg("u2", Some(Gender::Male), "yo"),
            msg("u1", Some(Gender::Female), "😢"),
            msg("u2", Some(Gender::Male), "😂😂"),
        ];
        let mut b = a.clone();
        b.swap(0, 2);
        b.swap(1, 3);
        let ua = aggregate(&Corpus::from_messages(a), &lex());
        let ub = aggregate(&Corpus::from_messages(b), &lex());
        for (x, y) in ua.iter().zip(&ub) {
            assert_eq!(x.user_id, y.user_id);
            assert_eq!(x.msg_count, y.msg_count);
            assert_eq!(x.per_emoji_counts, y.per_emoji_counts);
            assert_eq!(x.pattern_counts, y.pattern_counts);
        }
    }

    #[test]
    fn aggregate_keeps_unlabeled_users() {
        let corpus = Corpus::from_messages(vec![msg("u1", None, "😂")]);
        let users = aggregate(&corpus, &lex());
        assert_eq!(users[0].gender, None);
        assert_eq!(users[0].emoji_msg_count, 1);
    }

    #[test]
    fn aggregate_majority_lang() {
        let mut m1 = msg("u1", None, "a");
        m1.lang = Some("en".into());
        let mut m2 = msg("u1", None, "b");
        m2.lang = Some("es".into());
        let mut m3 = msg("u1", None, "c");
        m3.lang = Some("en".into());
        let users = aggregate(&Corpus::from_messages(vec![m1, m2, m3]), &lex());
        assert_eq!(users[0].lang.as_deref(), Some("en"));
    }

    #[test]
    fn merge_matches_joint_aggregation() {
        let shard1 = vec![msg("u1", Some(Gender::Female), "😂 hi"), msg("u1", Some(Gender::Female), "ok")];
        let shard2 = vec![msg("u1", Some(Gender::Female), "😂😢")];
        let all: Vec<Message> = shard1.iter().chain(&shard2).cloned().collect();

        let joint = aggregate(&Corpus::from_messages(all), &lex());
        let mut merged = aggregate(&Corpus::from_messages(shard1), &lex())[0].clone();
        merged.merge(aggregate(&Corpus::from_messages(shard2), &lex())[0].clone());

        let j = &joint[0];
        assert_eq!(j.msg_count, merged.msg_count);
        assert_eq!(j.emoji_msg_count, merged.emoji_msg_count);
        assert_eq!(j.per_emoji_counts, merged.per_emoji_counts);
        assert_eq!(j.pattern_counts, merged.pattern_counts);
        let mut a = j.emoji_msgs.clone();
        let mut b = merged.emoji_msgs.clone();
        a.sort_by(|x, y| x.distinct.cmp(&y.distinct).then(x.emoji_count.cmp(&y.emoji_count)));
        b.sort_by(|x, y| x.distinct.cmp(&y.distinct).then(x.emoji_count.cmp(&y.emoji_count)));
        assert_eq!(a, b);
    }

    #[test]
    fn filter_bounds_are_inclusive_exclusive() {
        let mk = |id: &str, n: u64| {
            let mut u = UserAggregate::new(id, Some(Gender::Female));
            u.emoji_msg_count = n;
            u.msg_count = n;
            u
        };
        let users = vec![mk("a", 50), mk("b", 100), mk("c", 120)];
        let kept = filter_by_emoji_msgs(users, 100, None).unwrap();
        let ids: Vec<&str> = kept.iter().map(|u| u.user_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "c"]);

        let users = vec![mk("a", 79), mk("b", 80), mk("c", 99), mk("d", 100)];
        let kept = filter_by_emoji_msgs(users, 80, Some(100)).unwrap();
        let ids: Vec<&str> = kept.iter().map(|u| u.user_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "c"]);

        let users = vec![mk("a", 0)];
        assert!(filter_by_emoji_msgs(users, 1, Some(20)).unwrap().is_empty());
    }

    #[test]
    fn filter_rejects_inverted_bounds() {
        assert!(filter_by_emoji_msgs(vec![], 10, Some(10)).is_err());
        assert!(filter_by_emoji_msgs(vec![], 10, Some(5)).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let items: Vec<u32> = (0..10).collect();
        let (train, test) = split(&items, 0.8, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let (train2, test2) = split(&items, 0.8, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let (train3, _) = split(&items, 0.8, 8).unwrap();
        assert_ne!(train, train3);

        let mut all: Vec<u32> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, items);
    }

    #[test]
    fn split_uses_floor_rule() {
        let items: Vec<u32> = (0..39_372).collect();
        let (train, test) = split(&items, 0.81, 1).unwrap();
        assert_eq!(train.len(), 31_891);
        assert_eq!(test.len(), 7_481);
    }

    #[test]
    fn split_validates_input() {
        let empty: Vec<u32> = vec![];
        assert!(split(&empty, 0.5, 1).is_err());
        assert!(split(&[1, 2, 3], 0.0, 1).is_err());
        assert!(split(&[1, 2, 3], 1.0, 1).is_err());
    }

    #[test]
    fn aggregate_counter_invariants_hold_on_fuzzed_corpora() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        let texts = ["hi", "😂", "😂😂", "a😂b😢", "😂 😂", "x", "😢 ok 😢", ""];
        for _ in 0..200 {
            let n = rng.gen_range(1..30);
            let msgs: Vec<Message> = (0..n)
                .map(|_| {
                    msg(
                        if rng.gen::<bool>() { "u1" } else { "u2" },
                        Some(Gender::Female),
                        texts[rng.gen_range(0..texts.len())],
                    )
                })
                .collect();
            for u in aggregate(&Corpus::from_messages(msgs), &lex()) {
                assert!(u.emoji_msg_count <= u.msg_count);
                assert_eq!(u.emoji_msgs.len() as u64, u.emoji_msg_count);
                let p = &u.pattern_counts;
                for counter in [
                    p.emoji_only,
                    p.single_emoji_in_text,
                    p.multi_nonconsecutive,
                    p.multi_consecutive,
                    p.repeating,
                ] {
                    assert!(counter <= u.emoji_msg_count);
                }
                assert!(p.repeating <= p.multi_consecutive);
                assert!(u.per_emoji_counts.values().all(|&c| c >= 1));
                let tokens_from_msgs: u64 =
                    u.emoji_msgs.iter().map(|m| m.emoji_count as u64).sum();
                assert_eq!(tokens_from_msgs, u.total_emoji_tokens());
            }
        }
    }

    #[test]
    fn time_window_filter() {
        let mut m1 = msg("u1", None, "a");
        m1.timestamp = Some(100);
        let mut m2 = msg("u1", None, "b");
        m2.timestamp = Some(200);
        let m3 = msg("u1", None, "c"); // no timestamp
        let corpus = Corpus::from_messages(vec![m1, m2, m3]);
        assert_eq!(corpus.filter_time_window(Some(100), Some(200)).len(), 1);
        assert_eq!(corpus.filter_time_window(None, None).len(), 3);
        assert_eq!(corpus.filter_time_window(Some(0), None).len(), 2);
    }
}
