//! Splits message text into emoji and text tokens and classifies per-message
//! emoji usage patterns.
//!
//! Matching is greedy longest-match against the lexicon trie. Candidate
//! windows are normalized on the fly: code points the policy removes (VS16,
//! skin tones, ZWJ when folded) are skipped while walking, so raw text
//! containing presentation selectors or tone modifiers still hits the
//! canonical lexicon entry and the full raw window is consumed.

use std::ops::Range;

use crate::lexicon::{EmojiLexicon, EmojiSeq};

/// One tile of a tokenized message. Token spans are byte ranges into the
/// original text; concatenated in order they reproduce the input exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Text { span: Range<usize> },
    Emoji { seq: EmojiSeq, span: Range<usize> },
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        match self {
            Token::Text { span } => span.clone(),
            Token::Emoji { span, .. } => span.clone(),
        }
    }

    pub fn is_emoji(&self) -> bool {
        matches!(self, Token::Emoji { .. })
    }
}

/// Greedy longest-match tokenization of `text` against `lexicon`.
///
/// Non-matching spans coalesce into single `Text` tokens; every byte of the
/// input is covered by exactly one token.
pub fn tokenize(text: &str, lexicon: &EmojiLexicon) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut text_start: Option<usize> = None;
    let mut i = 0;

    while i < chars.len() {
        if let Some((next, entry_idx)) = match_at(&chars, i, lexicon) {
            if let Some(start) = text_start.take() {
                tokens.push(Token::Text {
                    span: start..chars[i].0,
                });
            }
            let span_start = chars[i].0;
            let span_end = if next < chars.len() { chars[next].0 } else { text.len() };
            tokens.push(Token::Emoji {
                seq: lexicon.entry_at(entry_idx).sequence.clone(),
                span: span_start..span_end,
            });
            i = next;
        } else {
            if text_start.is_none() {
                text_start = Some(chars[i].0);
            }
            i += 1;
        }
    }
    if let Some(start) = text_start {
        tokens.push(Token::Text {
            span: start..text.len(),
        });
    }
    debug_assert!(tokens_tile(&tokens, text.len()), "tokens must tile the input");
    tokens
}

/// Longest lexicon match starting at char index `i`. Returns the char index
/// one past the matched raw window and the matched entry.
fn match_at(chars: &[(usize, char)], i: usize, lexicon: &EmojiLexicon) -> Option<(usize, u32)> {
    let policy = lexicon.policy();
    let mut node = 0u32;
    let mut j = i;
    let mut best: Option<(usize, u32)> = None;
    while j < chars.len() {
        let c = chars[j].1;
        if j > i && policy.removes(c) {
            // The normalized window is unchanged; absorb the removable code
            // point into the current match if we are sitting on an entry.
            j += 1;
            if let Some(entry) = lexicon.trie_entry(node) {
                best = Some((j, entry));
            }
            continue;
        }
        match lexicon.trie_step(node, c) {
            Some(next) => {
                node = next;
                j += 1;
                if let Some(entry) = lexicon.trie_entry(node) {
                    best = Some((j, entry));
                }
            }
            None => break,
        }
    }
    best
}

fn tokens_tile(tokens: &[Token], len: usize) -> bool {
    let mut pos = 0;
    for t in tokens {
        let span = t.span();
        if span.start != pos || span.end < span.start {
            return false;
        }
        pos = span.end;
    }
    pos == len
}

/// Per-message emoji usage pattern flags.
///
/// The flags are independent indicators, not a partition: a message like
/// "a😂😂b😂" is both multi-consecutive and multi-nonconsecutive. Whitespace
/// between two emojis does not break a consecutive run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessagePatternFlags {
    pub emoji_count: u32,
    /// Every text token is whitespace-only and the message has >=1 emoji.
    pub emoji_only: bool,
    /// Exactly one emoji plus some non-whitespace text.
    pub single_emoji_in_text: bool,
    /// Some pair of in-order emojis has non-whitespace text between them.
    pub multi_nonconsecutive: bool,
    /// Some pair of emojis is adjacent (nothing or whitespace between).
    pub multi_consecutive: bool,
    /// Some adjacent pair repeats the same canonical sequence.
    pub repeating: bool,
}

/// Classifies the tokens of one message. `text` must be the string the
/// tokens were produced from.
pub fn classify_patterns(tokens: &[Token], text: &str) -> MessagePatternFlags {
    let mut flags = MessagePatternFlags::default();
    let mut has_nonws_text = false;
    for t in tokens {
        match t {
            Token::Emoji { .. } => flags.emoji_count += 1,
            Token::Text { span } => {
                if !text[span.clone()].chars().all(char::is_whitespace) {
                    has_nonws_text = true;
                }
            }
        }
    }
    if flags.emoji_count == 0 {
        return flags;
    }
    flags.emoji_only = !has_nonws_text;
    flags.single_emoji_in_text = flags.emoji_count == 1 && has_nonws_text;

    // Walk consecutive-in-order emoji pairs; the tokenizer coalesces text,
    // so at most one text token separates them.
    let mut prev: Option<(&EmojiSeq, usize)> = None; // (seq, token index)
    for (idx, t) in tokens.iter().enumerate() {
        if let Token::Emoji { seq, .. } = t {
            if let Some((prev_seq, prev_idx)) = prev {
                let separated = tokens[prev_idx + 1..idx].iter().any(|between| match between {
                    Token::Text { span } => {
                        !text[span.clone()].chars().all(char::is_whitespace)
                    }
                    Token::Emoji { .. } => false,
                });
                if separated {
                    flags.multi_nonconsecutive = true;
                } else {
                    flags.multi_consecutive = true;
                    if prev_seq == seq {
                        flags.repeating = true;
                    }
                }
            }
            prev = Some((seq, idx));
        }
    }
    flags
}
