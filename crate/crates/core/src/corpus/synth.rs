//! Seeded synthetic corpora with planted gender signal.
//!
//! The generator is the test oracle substrate: its ground-truth usage rates
//! and per-gender emoji preference distributions are known by construction,
//! so pipeline outputs can be checked against what was planted. Output is a
//! pure function of the config (seed included) down to the byte.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gender, Message};
use crate::error::{Error, Result};

const WORDS: &[&str] = &[
    "ok", "see", "you", "later", "thanks", "great", "lol", "nice", "good", "morning", "night",
    "love", "miss", "call", "me", "sure", "yes", "no", "maybe", "soon",
];

const LANGS: &[(&str, f64)] = &[("en", 0.6), ("es", 0.25), ("pt", 0.15)];

/// Configuration for [`generate_synthetic`]. Preference maps are keyed by the
/// literal emoji string (canonical form) and must each sum to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub users_per_gender: u32,
    /// Inclusive [lo, hi] range of messages per user.
    pub messages_per_user: (u32, u32),
    /// Probability that a female/male message contains emojis.
    pub female_emoji_rate: f64,
    pub male_emoji_rate: f64,
    pub female_preferences: BTreeMap<String, f64>,
    pub male_preferences: BTreeMap<String, f64>,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.messages_per_user;
        if lo == 0 || hi < lo {
            return Err(Error::Argument(format!(
                "messages_per_user range [{lo}, {hi}] is invalid"
            )));
        }
        for (name, rate) in [
            ("female_emoji_rate", self.female_emoji_rate),
            ("male_emoji_rate", self.male_emoji_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return Err(Error::Argument(format!("{name} {rate} not in [0, 1]")));
            }
        }
        for (name, prefs) in [
            ("female_preferences", &self.female_preferences),
            ("male_preferences", &self.male_preferences),
        ] {
            if prefs.is_empty() {
                return Err(Error::Argument(format!("{name} is empty")));
            }
            let mut sum = 0.0;
            for (emoji, &w) in prefs {
                if emoji.is_empty() {
                    return Err(Error::Argument(format!("{name} has an empty emoji key")));
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Argument(format!(
                        "{name}[{emoji}] weight {w} must be finite and non-negative"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Argument(format!(
                    "{name} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

struct PrefSampler {
    emojis: Vec<String>,
    cumulative: Vec<f64>,
}

impl PrefSampler {
    fn new(prefs: &BTreeMap<String, f64>) -> Self {
        let mut emojis = Vec::with_capacity(prefs.len());
        let mut cumulative = Vec::with_capacity(prefs.len());
        let mut acc = 0.0;
        for (emoji, &w) in prefs {
            acc += w;
            emojis.push(emoji.clone());
            cumulative.push(acc);
        }
        PrefSampler { emojis, cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &str {
        let x: f64 = rng.gen();
        let idx = self
            .cumulative
            .partition_point(|&c| c < x)
            .min(self.emojis.len() - 1);
        &self.emojis[idx]
    }
}

fn sample_lang(rng: &mut ChaCha8Rng) -> String {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for &(lang, w) in LANGS {
        acc += w;
        if x < acc {
            return lang.to_string();
        }
    }
    LANGS.last().unwrap().0.to_string()
}

fn sample_words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<&'static str> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect()
}

fn compose_emoji_message(rng: &mut ChaCha8Rng, sampler: &PrefSampler) -> String {
    let k = match rng.gen::<f64>() {
        x if x < 0.60 => 1,
        x if x < 0.85 => 2,
        x if x < 0.95 => 3,
        _ => 4,
    };
    let emojis: Vec<String> = (0..k).map(|_| sampler.sample(rng).to_string()).collect();
    match rng.gen_range(0..3u8) {
        // Emojis only.
        0 => emojis.concat(),
        // Words first, then a consecutive emoji run.
        1 => {
            let words = sample_words(rng, 1, 4);
            format!("{} {}", words.join(" "), emojis.concat())
        }
        // Emojis interleaved with words.
        _ => {
            let mut out = String::new();
            for (i, e) in emojis.iter().enumerate() {
                if i > 0 || rng.gen::<bool>() {
                    out.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
                }
                out.push_str(e);
            }
            out
        }
    }
}

/// Generates a JSONL corpus from `config`. Byte-identical for identical
/// configs; the timestamp column is a deterministic counter, not wall time.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = String::new();
    let mut timestamp = 1_500_000_000i64;
    let (lo, hi) = config.messages_per_user;

    let genders = [
        (Gender::Female, config.female_emoji_rate, PrefSampler::new(&config.female_preferences)),
        (Gender::Male, config.male_emoji_rate, PrefSampler::new(&config.male_preferences)),
    ];
    for (gender, rate, sampler) in &genders {
        for u in 0..config.users_per_gender {
            let user_id = format!("{}{u:05}", gender.as_str());
            let lang = sample_lang(&mut rng);
            let n_msgs = rng.gen_range(lo..=hi);
            for _ in 0..n_msgs {
                let text = if rng.gen::<f64>() < *rate {
                    compose_emoji_message(&mut rng, sampler)
                } else {
                    sample_words(&mut rng, 2, 6).join(" ")
                };
                let msg = Message {
                    user_id: user_id.clone(),
                    gender: Some(*gender),
                    lang: Some(lang.clone()),
                    timestamp: Some(timestamp),
                    text,
                };
                timestamp += 1;
                out.push_str(&serde_json::to_string(&msg)?);
                out.push('\n');
            }
        }
    }
    Ok(out)
}
