//! Shared text primitives: canonical Unicode form and the token model.
//!
//! Every component that compares text (lexicon loading, document
//! normalization, matching, featurization, masking) goes through
//! [`canonicalize`] and [`tokenize`] so that all of them agree on what a
//! token is.
//!
//! A token is one of:
//! - a maximal run of letters, digits and combining marks,
//! - a single emoji cluster (base pictograph plus modifiers, variation
//!   selectors and zero-width-joiner continuations, or a flag pair),
//! - the literal mask token `[MASK]`.
//!
//! Everything else (whitespace, punctuation, symbols) separates tokens and
//! is not itself a token.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Replacement token written over masked lexical items.
pub const MASK_TOKEN: &str = "[MASK]";

/// Lowercase plus canonical composition (NFC). Diacritics are kept.
pub fn canonicalize(text: &str) -> String {
    let composed: String = text.nfc().collect();
    composed.to_lowercase().nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// Byte offset of the first byte.
    pub start: usize,
    /// Byte offset one past the last byte.
    pub end: usize,
}

pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x00A9 | 0x00AE | 0x203C | 0x2049 | 0x2122 | 0x2139
        | 0x2194..=0x2199 | 0x21A9..=0x21AA | 0x231A..=0x231B | 0x2328 | 0x23CF
        | 0x23E9..=0x23F3 | 0x23F8..=0x23FA | 0x25AA..=0x25AB | 0x25B6 | 0x25C0
        | 0x25FB..=0x25FE | 0x2600..=0x27BF | 0x2934..=0x2935 | 0x2B05..=0x2B07
        | 0x2B1B..=0x2B1C | 0x2B50 | 0x2B55 | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0x1F000..=0x1FAFF)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

fn is_regional_indicator(c: char) -> bool {
    matches!(c as u32, 0x1F1E6..=0x1F1FF)
}

const ZWJ: char = '\u{200D}';

/// Characters that may continue a word token (and a hashtag or mention).
pub fn is_word_char(c: char) -> bool {
    !is_emoji(c) && (c.is_alphanumeric() || is_combining_mark(c))
}

pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();

    while let Some(&(start, c)) = chars.peek() {
        if c == '[' && text[start..].starts_with(MASK_TOKEN) {
            let end = start + MASK_TOKEN.len();
            while chars.peek().is_some_and(|&(i, _)| i < end) {
                chars.next();
            }
            tokens.push(Token {
                text: &text[start..end],
                start,
                end,
            });
        } else if is_emoji(c) {
            chars.next();
            let mut end = start + c.len_utf8();
            if is_regional_indicator(c) {
                if let Some(&(i, next)) = chars.peek() {
                    if is_regional_indicator(next) {
                        chars.next();
                        end = i + next.len_utf8();
                    }
                }
            }
            loop {
                match chars.peek().copied() {
                    Some((i, m)) if is_emoji_modifier(m) => {
                        chars.next();
                        end = i + m.len_utf8();
                    }
                    Some((_, ZWJ)) => {
                        let mut ahead = chars.clone();
                        ahead.next();
                        match ahead.next() {
                            Some((i, e)) if is_emoji(e) => {
                                chars.next();
                                chars.next();
                                end = i + e.len_utf8();
                            }
                            _ => break,
                        }
                    }
                    _ => break,
                }
            }
            tokens.push(Token {
                text: &text[start..end],
                start,
                end,
            });
        } else if is_word_char(c) {
            let mut end = start;
            while let Some(&(i, w)) = chars.peek() {
                if !is_word_char(w) {
                    break;
                }
                end = i + w.len_utf8();
                chars.next();
            }
            tokens.push(Token {
                text: &text[start..end],
                start,
                end,
            });
        } else {
            chars.next();
        }
    }
    tokens
}

pub fn token_strings(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text.to_owned()).collect()
}

/// Canonical surface of a lexical item or collection term: canonicalized,
/// tokenized and re-joined with single spaces. Empty when the input holds
/// no tokens.
pub fn canonical_surface(text: &str) -> String {
    let canon = canonicalize(text);
    let toks: Vec<&str> = tokenize(&canon).iter().map(|t| t.text).collect();
    toks.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<&str> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn words_and_punctuation() {
        assert_eq!(
            texts("tô indignada e não é pouco!"),
            ["tô", "indignada", "e", "não", "é", "pouco"]
        );
        assert_eq!(texts("bem-vindo, amigo"), ["bem", "vindo", "amigo"]);
        assert_eq!(texts("a_b"), ["a", "b"]);
        assert!(texts("  ...  ").is_empty());
    }

    #[test]
    fn emoji_are_single_tokens() {
        assert_eq!(texts("que alegria😊😊"), ["que", "alegria", "😊", "😊"]);
        assert_eq!(texts("👍🏽 ok"), ["👍🏽", "ok"]);
        assert_eq!(texts("👨\u{200D}👩\u{200D}👧"), ["👨\u{200D}👩\u{200D}👧"]);
        assert_eq!(texts("🇧🇷🇵🇹"), ["🇧🇷", "🇵🇹"]);
        assert_eq!(texts("❤️x"), ["❤️", "x"]);
    }

    #[test]
    fn mask_token_is_atomic() {
        assert_eq!(texts("tô [MASK] e"), ["tô", "[MASK]", "e"]);
        assert_eq!(texts("x[MASK]y"), ["x", "[MASK]", "y"]);
        assert_eq!(texts("[mask]"), ["mask"]);
    }

    #[test]
    fn offsets_slice_back_to_token() {
        let s = "Olá, 😊 mundo";
        for t in tokenize(s) {
            assert_eq!(&s[t.start..t.end], t.text);
        }
    }

    #[test]
    fn canonicalize_composes_and_lowercases() {
        assert_eq!(canonicalize("SA\u{301}BIA"), "sábia");
        assert_ne!(canonicalize("sábia"), canonicalize("sabia"));
        assert_eq!(canonical_surface("  Bem-Vindo "), "bem vindo");
        assert_eq!(canonical_surface("!!"), "");
    }
}
