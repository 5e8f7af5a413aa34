//! Emoji inventory, sequence normalization, and per-emoji sentiment labels.
//!
//! The lexicon is data: a TSV file declares every emoji sequence the pipeline
//! recognizes, together with its name, keywords, and optional group. Sequences
//! are stored in canonical form under a [`NormalizationPolicy`], and all
//! downstream statistics key on those canonical sequences.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const ZWJ: char = '\u{200D}';
pub const VS16: char = '\u{FE0F}';
pub const KEYCAP: char = '\u{20E3}';
const SKIN_TONES: std::ops::RangeInclusive<char> = '\u{1F3FB}'..='\u{1F3FF}';
const REGIONAL_INDICATORS: std::ops::RangeInclusive<char> = '\u{1F1E6}'..='\u{1F1FF}';

/// Extended_Pictographic ranges from the Unicode emoji data files
/// (consolidated where adjacent ranges share the property).
const EXTENDED_PICTOGRAPHIC: &[(u32, u32)] = &[
    (0x00A9, 0x00A9),
    (0x00AE, 0x00AE),
    (0x203C, 0x203C),
    (0x2049, 0x2049),
    (0x2122, 0x2122),
    (0x2139, 0x2139),
    (0x2194, 0x2199),
    (0x21A9, 0x21AA),
    (0x231A, 0x231B),
    (0x2328, 0x2328),
    (0x2388, 0x2388),
    (0x23CF, 0x23CF),
    (0x23E9, 0x23F3),
    (0x23F8, 0x23FA),
    (0x24C2, 0x24C2),
    (0x25AA, 0x25AB),
    (0x25B6, 0x25B6),
    (0x25C0, 0x25C0),
    (0x25FB, 0x25FE),
    (0x2600, 0x2605),
    (0x2607, 0x2612),
    (0x2614, 0x2685),
    (0x2690, 0x2705),
    (0x2708, 0x2712),
    (0x2714, 0x2714),
    (0x2716, 0x2716),
    (0x271D, 0x271D),
    (0x2721, 0x2721),
    (0x2728, 0x2728),
    (0x2733, 0x2734),
    (0x2744, 0x2744),
    (0x2747, 0x2747),
    (0x274C, 0x274C),
    (0x274E, 0x274E),
    (0x2753, 0x2755),
    (0x2757, 0x2757),
    (0x2763, 0x2767),
    (0x2795, 0x2797),
    (0x27A1, 0x27A1),
    (0x27B0, 0x27B0),
    (0x27BF, 0x27BF),
    (0x2934, 0x2935),
    (0x2B05, 0x2B07),
    (0x2B1B, 0x2B1C),
    (0x2B50, 0x2B50),
    (0x2B55, 0x2B55),
    (0x3030, 0x3030),
    (0x303D, 0x303D),
    (0x3297, 0x3297),
    (0x3299, 0x3299),
    (0x1F000, 0x1F0FF),
    (0x1F10D, 0x1F10F),
    (0x1F12F, 0x1F12F),
    (0x1F16C, 0x1F171),
    (0x1F17E, 0x1F17F),
    (0x1F18E, 0x1F18E),
    (0x1F191, 0x1F19A),
    (0x1F1AD, 0x1F1E5),
    (0x1F201, 0x1F20F),
    (0x1F21A, 0x1F21A),
    (0x1F22F, 0x1F22F),
    (0x1F232, 0x1F23A),
    (0x1F23C, 0x1F23F),
    (0x1F249, 0x1F3FA),
    (0x1F400, 0x1F53D),
    (0x1F546, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F774, 0x1F77F),
    (0x1F7D5, 0x1F7FF),
    (0x1F80C, 0x1F80F),
    (0x1F848, 0x1F84F),
    (0x1F85A, 0x1F85F),
    (0x1F888, 0x1F88F),
    (0x1F8AE, 0x1F8FF),
    (0x1F90C, 0x1F93A),
    (0x1F93C, 0x1F945),
    (0x1F947, 0x1FAFF),
    (0x1FC00, 0x1FFFD),
];

pub fn is_extended_pictographic(c: char) -> bool {
    let cp = c as u32;
    EXTENDED_PICTOGRAPHIC
        .binary_search_by(|&(lo, hi)| {
            if cp < lo {
                std::cmp::Ordering::Greater
            } else if cp > hi {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        })
        .is_ok()
}

pub fn is_skin_tone_modifier(c: char) -> bool {
    SKIN_TONES.contains(&c)
}

pub fn is_regional_indicator(c: char) -> bool {
    REGIONAL_INDICATORS.contains(&c)
}

/// A canonical emoji code-point sequence. Ordering and equality follow the
/// code points, so `BTreeMap` keys and report rows sort deterministically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmojiSeq(Box<[char]>);

impl EmojiSeq {
    pub fn new(chars: Vec<char>) -> Self {
        EmojiSeq(chars.into_boxed_slice())
    }

    pub fn from_str_exact(s: &str) -> Self {
        EmojiSeq(s.chars().collect())
    }

    /// Parses a space-separated hex code-point list, e.g. `"1F469 200D 2764"`.
    pub fn parse_hex(s: &str) -> Result<Self> {
        let mut chars = Vec::new();
        for part in s.split_whitespace() {
            let part = part.trim_start_matches("U+").trim_start_matches("u+");
            let cp = u32::from_str_radix(part, 16)
                .map_err(|_| Error::Argument(format!("bad code point `{part}`")))?;
            let c = char::from_u32(cp)
                .ok_or_else(|| Error::Argument(format!("invalid code point U+{cp:04X}")))?;
            chars.push(c);
        }
        if chars.is_empty() {
            return Err(Error::Argument("empty code-point sequence".into()));
        }
        Ok(EmojiSeq(chars.into_boxed_slice()))
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-separated uppercase hex, the inverse of [`EmojiSeq::parse_hex`].
    pub fn hex(&self) -> String {
        self.0
            .iter()
            .map(|&c| format!("{:04X}", c as u32))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for EmojiSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in self.0.iter() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for EmojiSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EmojiSeq({})", self.hex())
    }
}

impl Serialize for EmojiSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EmojiSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.is_empty() {
            return Err(D::Error::custom("empty emoji sequence"));
        }
        Ok(EmojiSeq::from_str_exact(&s))
    }
}

/// How raw code-point sequences are folded into canonical form.
///
/// The policy is fixed when a lexicon is loaded and is echoed into every
/// report, so results are always attributable to a concrete folding choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub fold_skin_tones: bool,
    pub strip_variation_selectors: bool,
    pub keep_zwj_sequences_distinct: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            fold_skin_tones: true,
            strip_variation_selectors: true,
            keep_zwj_sequences_distinct: true,
        }
    }
}

impl NormalizationPolicy {
    /// True if the policy drops `c` from sequences entirely.
    pub(crate) fn removes(&self, c: char) -> bool {
        (self.strip_variation_selectors && c == VS16)
            || (self.fold_skin_tones && is_skin_tone_modifier(c))
            || (!self.keep_zwj_sequences_distinct && c == ZWJ)
    }
}

/// Canonicalizes a raw code-point sequence: drops U+FE0F when stripping
/// variation selectors, drops U+1F3FB..U+1F3FF when folding skin tones, and
/// drops U+200D when ZWJ sequences are not kept distinct. Never reorders.
/// Idempotent by construction.
pub fn normalize_sequence(raw: &[char], policy: NormalizationPolicy) -> Vec<char> {
    raw.iter().copied().filter(|&c| !policy.removes(c)).collect()
}

/// One emoji in the inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiEntry {
    /// Canonical code-point sequence under the lexicon's policy.
    pub sequence: EmojiSeq,
    pub name: String,
    pub keywords: Vec<String>,
    pub group: Option<String>,
}

impl EmojiEntry {
    /// Lowercased name tokens, split on whitespace and hyphens.
    pub fn name_tokens(&self) -> Vec<String> {
        split_tokens(&self.name)
    }
}

pub(crate) fn split_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| c.is_whitespace() || c == '-')
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

fn is_keycap_sequence(seq: &[char]) -> bool {
    seq.len() == 2 && matches!(seq[0], '0'..='9' | '#' | '*') && seq[1] == KEYCAP
}

fn is_regional_indicator_pair(seq: &[char]) -> bool {
    seq.len() == 2 && seq.iter().all(|&c| is_regional_indicator(c))
}

fn is_emoji_like(seq: &[char]) -> bool {
    seq.iter().any(|&c| is_extended_pictographic(c))
        || is_regional_indicator_pair(seq)
        || is_keycap_sequence(seq)
}

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<char, u32>,
    entry: Option<u32>,
}

/// The emoji inventory: canonical sequences with names, keywords, and groups,
/// plus the prefix trie the tokenizer matches against.
#[derive(Debug)]
pub struct EmojiLexicon {
    entries: Vec<EmojiEntry>,
    rows: Vec<usize>,
    by_seq: HashMap<EmojiSeq, u32>,
    policy: NormalizationPolicy,
    trie: Vec<TrieNode>,
}

impl EmojiLexicon {
    /// Builds a lexicon from already-parsed entries. Sequences are
    /// canonicalized under `policy`; duplicates after canonicalization are
    /// rejected.
    pub fn from_entries<I>(entries: I, policy: NormalizationPolicy) -> Result<Self>
    where
        I: IntoIterator<Item = EmojiEntry>,
    {
        let mut lex = EmojiLexicon {
            entries: Vec::new(),
            rows: Vec::new(),
            by_seq: HashMap::new(),
            policy,
            trie: vec![TrieNode::default()],
        };
        for (i, entry) in entries.into_iter().enumerate() {
            lex.insert(entry, i + 1)?;
        }
        Ok(lex)
    }

    /// Loads the TSV lexicon format: a `#policy` header followed by rows of
    /// `<hex codepoints>\t<name>\t<keywords>[\t<group>]`. When
    /// `override_policy` is given it replaces the header policy, and all
    /// sequences are re-canonicalized under it.
    pub fn load<R: BufRead>(reader: R, override_policy: Option<NormalizationPolicy>) -> Result<Self> {
        let mut header_policy: Option<NormalizationPolicy> = None;
        let mut rows: Vec<(usize, EmojiEntry)> = Vec::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#policy") {
                header_policy = Some(parse_policy_header(rest, line_no)?);
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected >=3 tab-separated fields, got {}", fields.len()),
                });
            }
            let sequence = EmojiSeq::parse_hex(fields[0]).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            let name = fields[1].trim().to_string();
            if name.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "empty name".into(),
                });
            }
            let keywords = fields[2]
                .split(',')
                .map(|k| k.trim().to_lowercase())
                .filter(|k| !k.is_empty())
                .collect();
            let group = fields.get(3).map(|g| g.trim().to_string()).filter(|g| !g.is_empty());
            rows.push((
                line_no,
                EmojiEntry {
                    sequence,
                    name,
                    keywords,
                    group,
                },
            ));
        }

        let policy = override_policy
            .or(header_policy)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "missing `#policy fold_skin_tones=<bool> strip_vs=<bool>` header".into(),
            })?;

        let mut lex = EmojiLexicon {
            entries: Vec::new(),
            rows: Vec::new(),
            by_seq: HashMap::new(),
            policy,
            trie: vec![TrieNode::default()],
        };
        for (line_no, entry) in rows {
            lex.insert(entry, line_no)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, mut entry: EmojiEntry, row: usize) -> Result<()> {
        let canonical = normalize_sequence(entry.sequence.chars(), self.policy);
        if canonical.is_empty() {
            return Err(Error::Parse {
                line: row,
                msg: format!(
                    "sequence {} is empty after normalization",
                    entry.sequence.hex()
                ),
            });
        }
        if !is_emoji_like(&canonical) {
            return Err(Error::Parse {
                line: row,
                msg: format!(
                    "sequence {} is not emoji-like (no Extended_Pictographic code point, \
                     regional-indicator pair, or keycap sequence)",
                    entry.sequence.hex()
                ),
            });
        }
        entry.sequence = EmojiSeq::new(canonical);
        if let Some(&prev) = self.by_seq.get(&entry.sequence) {
            return Err(Error::Conflict(format!(
                "duplicate canonical sequence {}: row {} (`{}`) collides with row {} (`{}`)",
                entry.sequence.hex(),
                self.rows[prev as usize],
                self.entries[prev as usize].name,
                row,
                entry.name,
            )));
        }
        let idx = self.entries.len() as u32;
        self.by_seq.insert(entry.sequence.clone(), idx);
        self.rows.push(row);

        // Extend the trie with the canonical sequence.
        let mut node = 0usize;
        for &c in entry.sequence.chars() {
            let next = match self.trie[node].children.get(&c) {
                Some(&n) => n as usize,
                None => {
                    let n = self.trie.len();
                    self.trie.push(TrieNode::default());
                    self.trie[node].children.insert(c, n as u32);
                    n
                }
            };
            node = next;
        }
        self.trie[node].entry = Some(idx);

        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn policy(&self) -> NormalizationPolicy {
        self.policy
    }

    pub fn entries(&self) -> &[EmojiEntry] {
        &self.entries
    }

    pub fn get(&self, seq: &EmojiSeq) -> Option<&EmojiEntry> {
        self.by_seq.get(seq).map(|&i| &self.entries[i as usize])
    }

    pub fn contains(&self, seq: &EmojiSeq) -> bool {
        self.by_seq.contains_key(seq)
    }

    /// Walks the trie from `node` along `c`; `node` 0 is the root.
    pub(crate) fn trie_step(&self, node: u32, c: char) -> Option<u32> {
        self.trie[node as usize].children.get(&c).copied()
    }

    pub(crate) fn trie_entry(&self, node: u32) -> Option<u32> {
        self.trie[node as usize].entry
    }

    pub(crate) fn entry_at(&self, idx: u32) -> &EmojiEntry {
        &self.entries[idx as usize]
    }

    /// Labels every entry against a sentiment lexicon.
    pub fn label_all(
        &self,
        sentiment: &SentimentLexicon,
    ) -> std::collections::BTreeMap<EmojiSeq, SentimentLabel> {
        self.entries
            .iter()
            .map(|e| (e.sequence.clone(), sentiment_of(e, sentiment)))
            .collect()
    }
}

fn parse_policy_header(rest: &str, line: usize) -> Result<NormalizationPolicy> {
    let mut policy = NormalizationPolicy::default();
    for part in rest.split_whitespace() {
        let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad policy item `{part}`"),
        })?;
        let flag = match value {
            "true" => true,
            "false" => false,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("bad boolean `{value}` for `{key}`"),
                })
            }
        };
        match key {
            "fold_skin_tones" => policy.fold_skin_tones = flag,
            "strip_vs" => policy.strip_variation_selectors = flag,
            "keep_zwj" => policy.keep_zwj_sequences_distinct = flag,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown policy key `{key}`"),
                })
            }
        }
    }
    Ok(policy)
}

/// Word list mapping lowercase tokens to non-negative (posemo, negemo) weights.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    weights: HashMap<String, (f64, f64)>,
}

impl SentimentLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64, f64)>,
        S: Into<String>,
    {
        let mut weights = HashMap::new();
        for (word, pos, neg) in entries {
            let word: String = word.into();
            if !pos.is_finite() || !neg.is_finite() || pos < 0.0 || neg < 0.0 {
                return Err(Error::Argument(format!(
                    "weights for `{word}` must be finite and non-negative"
                )));
            }
            if weights.insert(word.to_lowercase(), (pos, neg)).is_some() {
                return Err(Error::Conflict(format!("duplicate sentiment word `{word}`")));
            }
        }
        Ok(SentimentLexicon { weights })
    }

    /// Loads the TSV format `<word>\t<posemo>\t<negemo>`, one row per word.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut weights = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let word = fields[0].trim().to_lowercase();
            let pos: f64 = fields[1].trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad posemo weight `{}`", fields[1]),
            })?;
            let neg: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad negemo weight `{}`", fields[2]),
            })?;
            if !pos.is_finite() || !neg.is_finite() || pos < 0.0 || neg < 0.0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "weights must be finite and non-negative".into(),
                });
            }
            if weights.insert(word.clone(), (pos, neg)).is_some() {
                return Err(Error::Conflict(format!(
                    "duplicate sentiment word `{word}` at line {line_no}"
                )));
            }
        }
        Ok(SentimentLexicon { weights })
    }

    pub fn get(&self, word: &str) -> Option<(f64, f64)> {
        self.weights.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Sentiment class of one emoji under a sentiment lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neither,
}

/// Scores an entry by summing (posemo, negemo) weights over the lowercased
/// name and keyword tokens: Positive iff posemo > negemo, Negative iff
/// posemo < negemo, Neither on ties. Tokens missing from the lexicon
/// contribute zero.
pub fn sentiment_of(entry: &EmojiEntry, sentiment: &SentimentLexicon) -> SentimentLabel {
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut score = |token: &str| {
        if let Some((p, n)) = sentiment.get(token) {
            pos += p;
            neg += n;
        }
    };
    for token in entry.name_tokens() {
        score(&token);
    }
    for keyword in &entry.keywords {
        for token in split_tokens(keyword) {
            score(&token);
        }
    }
    if pos > neg {
        SentimentLabel::Positive
    } else if pos < neg {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neither
    }
}
