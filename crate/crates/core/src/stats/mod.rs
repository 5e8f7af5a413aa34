//! Gender-difference statistics over user aggregates: usage fractions and
//! CDFs, two-proportion z-tests with Bonferroni correction, per-emoji mutual
//! information and conditional gender probabilities, message-level PMI,
//! co-occurrence graphs, and Louvain community detection.
//!
//! Mutual information and PMI are reported in nats. MI is user-level (does a
//! user use the emoji at all), PMI is message-level (does a message contain
//! both emojis); each follows the probability its formula is defined over.

mod louvain;

pub use louvain::{louvain, modularity, CommunityAssignment};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{Gender, UserAggregate};
use crate::error::{Error, Result};
use crate::lexicon::{split_tokens, EmojiLexicon, EmojiSeq, SentimentLabel};

/// Which users a statistic runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenderFilter {
    /// Every user, labeled or not.
    All,
    Only(Gender),
}

impl GenderFilter {
    fn keeps(self, u: &UserAggregate) -> bool {
        match self {
            GenderFilter::All => true,
            GenderFilter::Only(g) => u.gender == Some(g),
        }
    }
}

/// A female-vs-male comparison row: per-gender values with the counts behind
/// them, plus the z-test and Bonferroni-adjusted p-value.
#[derive(Debug, Clone, Serialize)]
pub struct GenderSplitStat {
    pub name: String,
    pub female_value: f64,
    pub male_value: f64,
    pub female_count: CountPair,
    pub male_count: CountPair,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Numerator/denominator pair backing a proportion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CountPair {
    pub k: u64,
    pub n: u64,
}

/// Fraction of a user's messages containing at least one emoji token.
pub fn emoji_msg_fraction(u: &UserAggregate) -> Result<f64> {
    if u.msg_count == 0 {
        return Err(Error::Argument(format!(
            "user `{}` has no messages; %emoji-msg undefined",
            u.user_id
        )));
    }
    Ok(u.emoji_msg_count as f64 / u.msg_count as f64)
}

/// Empirical CDF steps: sorted unique x with F(x) = fraction of values <= x.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Argument("empirical CDF of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("empirical CDF requires finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        seen += j - i;
        steps.push((x, seen as f64 / n));
        i = j;
    }
    Ok(steps)
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Pooled two-proportion z-test. Returns (z, two-sided p). The two-sided
/// p-value is computed as erfc(|z|/sqrt(2)), which equals 2*(1 - Phi(|z|)).
pub fn two_proportion_ztest(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<(f64, f64)> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Argument("z-test requires n1, n2 > 0".into()));
    }
    if k1 > n1 || k2 > n2 {
        return Err(Error::Argument("z-test requires k <= n".into()));
    }
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    if pooled == 0.0 || pooled == 1.0 {
        return Err(Error::Numerical(
            "degenerate z-test: pooled proportion is 0 or 1".into(),
        ));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (k1 as f64 / n1 as f64 - k2 as f64 / n2 as f64) / se;
    let p = libm::erfc(z.abs() / std::f64::consts::SQRT_2);
    Ok((z, p))
}

/// Bonferroni correction: adjusted_i = min(1, m * p_i), order preserved.
pub fn bonferroni(p_values: &[f64]) -> Result<Vec<f64>> {
    let m = p_values.len() as f64;
    p_values
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Argument(format!("p-value {p} outside [0, 1]")));
            }
            Ok((m * p).min(1.0))
        })
        .collect()
}

fn labeled_gender_counts(users: &[UserAggregate]) -> (u64, u64) {
    let mut female = 0;
    let mut male = 0;
    for u in users {
        match u.gender {
            Some(Gender::Female) => female += 1,
            Some(Gender::Male) => male += 1,
            None => {}
        }
    }
    (female, male)
}

/// User-level mutual information (nats) between usage of `e` (a user uses an
/// emoji iff their token count for it is >= 1) and gender, over labeled users.
///
/// Each term is p(x,y) * ln((n_xy * N) / (n_x * n_y)); the log argument is a
/// ratio of exact integer products, so empirical independence yields exactly
/// zero. Tiny negative rounding residue (|MI| < 1e-15) clamps to 0.
pub fn mutual_information(users: &[UserAggregate], e: &EmojiSeq) -> Result<f64> {
    let (n_f, n_m) = labeled_gender_counts(users);
    if n_f == 0 || n_m == 0 {
        return Err(Error::Argument(
            "mutual information requires at least one user of each gender".into(),
        ));
    }
    let mut n_use_f = 0u64;
    let mut n_use_m = 0u64;
    for u in users {
        if u.uses(e) {
            match u.gender {
                Some(Gender::Female) => n_use_f += 1,
                Some(Gender::Male) => n_use_m += 1,
                None => {}
            }
        }
    }
    let total = n_f + n_m;
    let n_use = n_use_f + n_use_m;
    let n_no = total - n_use;
    let cells = [
        (n_use_f, n_use, n_f),
        (n_use_m, n_use, n_m),
        (n_f - n_use_f, n_no, n_f),
        (n_m - n_use_m, n_no, n_m),
    ];
    let mut mi = 0.0;
    for (n_xy, n_x, n_y) in cells {
        if n_xy == 0 {
            continue; // 0 * ln(0/q) := 0
        }
        let p_xy = n_xy as f64 / total as f64;
        let ratio = (n_xy as f64 * total as f64) / (n_x as f64 * n_y as f64);
        mi += p_xy * ratio.ln();
    }
    if mi < 0.0 && mi > -1e-15 {
        mi = 0.0;
    }
    Ok(mi)
}

/// (p(Male|e), p(Female|e)) among labeled users of `e`. The pair sums to 1
/// exactly because the second component is computed as the complement.
pub fn conditional_gender_prob(users: &[UserAggregate], e: &EmojiSeq) -> Result<(f64, f64)> {
    let mut female = 0u64;
    let mut male = 0u64;
    for u in users {
        if u.uses(e) {
            match u.gender {
                Some(Gender::Female) => female += 1,
                Some(Gender::Male) => male += 1,
                None => {}
            }
        }
    }
    let total = female + male;
    if total == 0 {
        return Err(Error::Argument(format!(
            "no labeled user uses {}; conditional probability undefined",
            e.hex()
        )));
    }
    let p_male = male as f64 / total as f64;
    Ok((p_male, 1.0 - p_male))
}

/// Classification of an emoji as female- or male-associated under the
/// threshold rule p(Male|e) > threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GenderTag {
    FemaleEmoji,
    MaleEmoji,
}

/// One row of the discriminative-emoji ranking.
#[derive(Debug, Clone, Serialize)]
pub struct DiscriminativeEmojiRow {
    pub emoji: EmojiSeq,
    /// Mutual information with gender, in nats.
    pub mi: f64,
    pub p_male_given_e: f64,
    pub p_female_given_e: f64,
    pub gender_tag: GenderTag,
}

/// Ranks every emoji used by at least one labeled user by mutual information
/// with gender (descending; ties break by canonical sequence order). The
/// male threshold defaults to the male share of labeled users.
pub fn rank_discriminative(
    users: &[UserAggregate],
    lexicon: &EmojiLexicon,
    male_threshold: Option<f64>,
) -> Result<Vec<DiscriminativeEmojiRow>> {
    let (n_f, n_m) = labeled_gender_counts(users);
    if n_f == 0 || n_m == 0 {
        return Err(Error::Argument(
            "discriminative ranking requires at least one user of each gender".into(),
        ));
    }
    let threshold = male_threshold.unwrap_or(n_m as f64 / (n_f + n_m) as f64);
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Argument(format!(
            "male threshold must be in (0, 1), got {threshold}"
        )));
    }

    let mut used: BTreeMap<&EmojiSeq, ()> = BTreeMap::new();
    for u in users {
        if u.gender.is_some() {
            for seq in u.per_emoji_counts.keys() {
                used.entry(seq).or_insert(());
            }
        }
    }

    let mut rows = Vec::with_capacity(used.len());
    for seq in used.keys() {
        debug_assert!(
            lexicon.contains(seq),
            "aggregate contains {} missing from the lexicon",
            seq.hex()
        );
        let mi = mutual_information(users, seq)?;
        let (p_male, p_female) = conditional_gender_prob(users, seq)?;
        let gender_tag = if p_male > threshold {
            GenderTag::MaleEmoji
        } else {
            GenderTag::FemaleEmoji
        };
        rows.push(DiscriminativeEmojiRow {
            emoji: (*seq).clone(),
            mi,
            p_male_given_e: p_male,
            p_female_given_e: p_female,
            gender_tag,
        });
    }
    rows.sort_by(|a, b| {
        b.mi
            .partial_cmp(&a.mi)
            .unwrap()
            .then_with(|| a.emoji.cmp(&b.emoji))
    });
    Ok(rows)
}

/// Ranked (emoji, usage share) over the filtered population: share is the
/// emoji's token count divided by all emoji tokens; ties break by sequence.
pub fn top_emojis(
    users: &[UserAggregate],
    filter: GenderFilter,
    n: usize,
) -> Result<Vec<(EmojiSeq, f64)>> {
    let mut counts: BTreeMap<EmojiSeq, u64> = BTreeMap::new();
    let mut total = 0u64;
    for u in users.iter().filter(|u| filter.keeps(u)) {
        for (seq, &c) in &u.per_emoji_counts {
            *counts.entry(seq.clone()).or_insert(0) += c;
            total += c;
        }
    }
    if total == 0 {
        return Err(Error::Argument(
            "no emoji tokens in the filtered population".into(),
        ));
    }
    let mut out: Vec<(EmojiSeq, f64)> = counts
        .into_iter()
        .map(|(seq, c)| (seq, c as f64 / total as f64))
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out.truncate(n);
    Ok(out)
}

/// A class of emojis compared between genders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmojiClass {
    Positive,
    Negative,
    /// Name- and group-driven class: an entry belongs if the lowercased key
    /// appears among its name tokens or group tokens (e.g. "face", "heart").
    Group(String),
}

impl EmojiClass {
    pub fn label(&self) -> String {
        match self {
            EmojiClass::Positive => "positive".into(),
            EmojiClass::Negative => "negative".into(),
            EmojiClass::Group(g) => g.clone(),
        }
    }

    fn contains(
        &self,
        seq: &EmojiSeq,
        lexicon: &EmojiLexicon,
        labels: &BTreeMap<EmojiSeq, SentimentLabel>,
    ) -> bool {
        match self {
            EmojiClass::Positive => labels.get(seq) == Some(&SentimentLabel::Positive),
            EmojiClass::Negative => labels.get(seq) == Some(&SentimentLabel::Negative),
            EmojiClass::Group(key) => {
                let key = key.to_lowercase();
                lexicon.get(seq).is_some_and(|entry| {
                    entry.name_tokens().iter().any(|t| *t == key)
                        || entry
                            .group
                            .as_deref()
                            .is_some_and(|g| split_tokens(g).iter().any(|t| *t == key))
                })
            }
        }
    }
}

/// Per-gender proportions of emoji tokens falling in each class, with
/// z-tests Bonferroni-adjusted over the whole batch. The denominator is
/// always all emoji tokens of the gender, for every class.
///
/// Equal proportions (including the all-in-class case) take the degenerate
/// path z = 0, p = 1 rather than erroring.
pub fn sentiment_usage_stats(
    users: &[UserAggregate],
    lexicon: &EmojiLexicon,
    labels: &BTreeMap<EmojiSeq, SentimentLabel>,
    classes: &[EmojiClass],
) -> Result<Vec<GenderSplitStat>> {
    let mut female_total = 0u64;
    let mut male_total = 0u64;
    let mut female_by_seq: BTreeMap<&EmojiSeq, u64> = BTreeMap::new();
    let mut male_by_seq: BTreeMap<&EmojiSeq, u64> = BTreeMap::new();
    for u in users {
        let (total, by_seq) = match u.gender {
            Some(Gender::Female) => (&mut female_total, &mut female_by_seq),
            Some(Gender::Male) => (&mut male_total, &mut male_by_seq),
            None => continue,
        };
        for (seq, &c) in &u.per_emoji_counts {
            *total += c;
            *by_seq.entry(seq).or_insert(0) += c;
        }
    }
    if female_total == 0 || male_total == 0 {
        return Err(Error::Argument(
            "sentiment comparison requires emoji tokens from both genders".into(),
        ));
    }

    let mut stats = Vec::with_capacity(classes.len());
    let mut raw_ps = Vec::with_capacity(classes.len());
    for class in classes {
        let k_f: u64 = female_by_seq
            .iter()
            .filter(|(seq, _)| class.contains(seq, lexicon, labels))
            .map(|(_, &c)| c)
            .sum();
        let k_m: u64 = male_by_seq
            .iter()
            .filter(|(seq, _)| class.contains(seq, lexicon, labels))
            .map(|(_, &c)| c)
            .sum();
        // Cross-multiplied equality check in exact integers.
        let (z, p_raw) = if (k_f as u128) * (male_total as u128) == (k_m as u128) * (female_total as u128)
        {
            (0.0, 1.0)
        } else {
            two_proportion_ztest(k_f, female_total, k_m, male_total)?
        };
        raw_ps.push(p_raw);
        stats.push(GenderSplitStat {
            name: class.label(),
            female_value: k_f as f64 / female_total as f64,
            male_value: k_m as f64 / male_total as f64,
            female_count: CountPair { k: k_f, n: female_total },
            male_count: CountPair { k: k_m, n: male_total },
            z,
            p_raw,
            p_adjusted: p_raw, // filled below
        });
    }
    let adjusted = bonferroni(&raw_ps)?;
    for (stat, adj) in stats.iter_mut().zip(adjusted) {
        stat.p_adjusted = adj;
    }
    Ok(stats)
}

/// Message-level emoji popularity comparison: the fraction of each gender's
/// messages containing at least one emoji, with a z-test over message counts.
pub fn emoji_msg_popularity(users: &[UserAggregate]) -> Result<GenderSplitStat> {
    let mut k_f = 0u64;
    let mut n_f = 0u64;
    let mut k_m = 0u64;
    let mut n_m = 0u64;
    for u in users {
        match u.gender {
            Some(Gender::Female) => {
                k_f += u.emoji_msg_count;
                n_f += u.msg_count;
            }
            Some(Gender::Male) => {
                k_m += u.emoji_msg_count;
                n_m += u.msg_count;
            }
            None => {}
        }
    }
    if n_f == 0 || n_m == 0 {
        return Err(Error::Data("no gendered users in the corpus".into()));
    }
    let (z, p_raw) = if (k_f as u128) * (n_m as u128) == (k_m as u128) * (n_f as u128) {
        (0.0, 1.0)
    } else {
        two_proportion_ztest(k_f, n_f, k_m, n_m)?
    };
    Ok(GenderSplitStat {
        name: "emoji_msg_fraction".into(),
        female_value: k_f as f64 / n_f as f64,
        male_value: k_m as f64 / n_m as f64,
        female_count: CountPair { k: k_f, n: n_f },
        male_count: CountPair { k: k_m, n: n_m },
        z,
        p_raw,
        p_adjusted: p_raw.min(1.0),
    })
}

/// Message-level indicator counts backing PMI: how many messages exist, how
/// many contain each emoji, and how many contain each unordered pair.
#[derive(Debug, Clone, Default)]
pub struct MessageCooccurrence {
    pub total_messages: u64,
    pub containing: BTreeMap<EmojiSeq, u64>,
    pub pair_counts: BTreeMap<(EmojiSeq, EmojiSeq), u64>,
}

impl MessageCooccurrence {
    /// Builds counts from per-user aggregates restricted by the filter. The
    /// message universe includes non-emoji messages.
    pub fn from_aggregates(users: &[UserAggregate], filter: GenderFilter) -> Self {
        let mut cooc = MessageCooccurrence::default();
        for u in users.iter().filter(|u| filter.keeps(u)) {
            cooc.total_messages += u.msg_count;
            for msg in &u.emoji_msgs {
                for seq in &msg.distinct {
                    *cooc.containing.entry(seq.clone()).or_insert(0) += 1;
                }
                for i in 0..msg.distinct.len() {
                    for j in i + 1..msg.distinct.len() {
                        let key = (msg.distinct[i].clone(), msg.distinct[j].clone());
                        *cooc.pair_counts.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
        cooc
    }

    fn pair_count(&self, e1: &EmojiSeq, e2: &EmojiSeq) -> u64 {
        let key = if e1 <= e2 {
            (e1.clone(), e2.clone())
        } else {
            (e2.clone(), e1.clone())
        };
        self.pair_counts.get(&key).copied().unwrap_or(0)
    }
}

/// Pointwise mutual information (nats) of two emojis' message-level
/// co-occurrence: ln(p12 / (p1 * p2)). Returns negative infinity when the
/// pair never co-occurs; errors when either marginal is zero.
pub fn pmi(cooc: &MessageCooccurrence, e1: &EmojiSeq, e2: &EmojiSeq) -> Result<f64> {
    if e1 == e2 {
        return Err(Error::Argument("PMI of an emoji with itself is undefined".into()));
    }
    let c1 = cooc.containing.get(e1).copied().unwrap_or(0);
    let c2 = cooc.containing.get(e2).copied().unwrap_or(0);
    if c1 == 0 || c2 == 0 {
        return Err(Error::Argument(format!(
            "PMI undefined: {} or {} appears in no message",
            e1.hex(),
            e2.hex()
        )));
    }
    let c12 = cooc.pair_count(e1, e2);
    if c12 == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = cooc.total_messages as f64;
    Ok(((c12 as f64 * n) / (c1 as f64 * c2 as f64)).ln())
}

/// Emoji co-occurrence network: nodes are emojis, and each node selects its
/// top-k neighbors by positive finite PMI; selections union into undirected
/// weighted edges.
#[derive(Debug, Clone)]
pub struct CooccurrenceGraph {
    pub nodes: Vec<EmojiSeq>,
    /// (node index, node index, PMI weight) with the first index smaller.
    pub edges: Vec<(u32, u32, f64)>,
    pub k: usize,
}

/// Builds the co-occurrence graph: per node, the k largest positive finite
/// PMI neighbors (ties by PMI then sequence order); both-way selections
/// collapse into a single undirected edge. Nodes with no positive-PMI
/// neighbor stay isolated.
pub fn build_cooccurrence_graph(cooc: &MessageCooccurrence, k: usize) -> Result<CooccurrenceGraph> {
    if k == 0 {
        return Err(Error::Argument("k must be >= 1".into()));
    }
    let nodes: Vec<EmojiSeq> = cooc.containing.keys().cloned().collect();
    if nodes.len() < 2 {
        return Err(Error::Data(format!(
            "co-occurrence graph needs at least 2 distinct emojis, found {}",
            nodes.len()
        )));
    }
    let index: BTreeMap<&EmojiSeq, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, seq)| (seq, i as u32))
        .collect();

    // Positive finite PMI exists only where a pair co-occurs.
    let mut candidates: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nodes.len()];
    for ((a, b), _) in cooc.pair_counts.iter() {
        let w = pmi(cooc, a, b)?;
        if w.is_finite() && w > 0.0 {
            let ia = index[a];
            let ib = index[b];
            candidates[ia as usize].push((ib, w));
            candidates[ib as usize].push((ia, w));
        }
    }

    let mut edges: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (i, cands) in candidates.iter_mut().enumerate() {
        cands.sort_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap()
                .then_with(|| nodes[x.0 as usize].cmp(&nodes[y.0 as usize]))
        });
        for &(j, w) in cands.iter().take(k) {
            let key = if (i as u32) < j { (i as u32, j) } else { (j, i as u32) };
            edges.insert(key, w);
        }
    }
    Ok(CooccurrenceGraph {
        nodes,
        edges: edges.into_iter().map(|((a, b), w)| (a, b, w)).collect(),
        k,
    })
}
