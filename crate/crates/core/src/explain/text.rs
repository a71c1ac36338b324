//! Tokenization for explanation matching.

use serde::{Deserialize, Serialize};

/// Byte range into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Case-folded text.
    pub text: String,
    pub span: Span,
    /// Index of the sentence the token belongs to.
    pub sentence: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '\u{2019}' | '-' | '_')
}

fn is_sentence_break(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ';' | ':' | '\n')
}

/// Splits `text` into case-folded word tokens. `.` and `,` between digits stay
/// inside a number; other punctuation ends a token, and `. ! ? ; :` or a
/// newline also ends the sentence.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut sentence = 0;
    let mut start: Option<usize> = None;
    let mut pending_break = false;

    let flush = |tokens: &mut Vec<Token>, from: usize, to: usize, sentence: usize| {
        let raw = &text[from..to];
        let trimmed_start = raw.len() - raw.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let inner = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if inner.is_empty() {
            return;
        }
        let s = from + trimmed_start;
        tokens.push(Token { text: inner.to_lowercase().replace('\u{2019}', "'"), span: Span { start: s, end: s + inner.len() }, sentence });
    };

    for (pos, &(idx, c)) in chars.iter().enumerate() {
        let numeric_sep = matches!(c, '.' | ',')
            && pos > 0
            && chars[pos - 1].1.is_ascii_digit()
            && chars.get(pos + 1).is_some_and(|(_, n)| n.is_ascii_digit());
        if is_word_char(c) || numeric_sep {
            if start.is_none() {
                if pending_break {
                    sentence += 1;
                    pending_break = false;
                }
                start = Some(idx);
            }
        } else {
            if let Some(s) = start.take() {
                flush(&mut tokens, s, idx, sentence);
            }
            if is_sentence_break(c) && !tokens.is_empty() {
                pending_break = true;
            }
        }
    }
    if let Some(s) = start {
        flush(&mut tokens, s, text.len(), sentence);
    }
    tokens
}

/// Case-folded, whitespace-normalized form used for keyphrases.
pub fn normalize_phrase(phrase: &str) -> String {
    tokenize(phrase).into_iter().map(|t| t.text).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(words("We averaged the Ratings, then picked 10."), ["we", "averaged", "the", "ratings", "then", "picked", "10"]);
        assert_eq!(words("well-liked items (item_3)"), ["well-liked", "items", "item_3"]);
        assert_eq!(words("didn’t use 3.5 or 1,000"), ["didn't", "use", "3.5", "or", "1,000"]);
        assert_eq!(words("'quoted' -dash-"), ["quoted", "dash"]);
    }

    #[test]
    fn spans_point_into_text() {
        let text = "Not  'Average'!";
        let toks = tokenize(text);
        assert_eq!(toks[1].span.slice(text), "Average");
        assert_eq!(toks[1].text, "average");
    }

    #[test]
    fn sentences() {
        let t = tokenize("I did not average. Average was used; done\nnext");
        let s: Vec<usize> = t.iter().map(|t| t.sentence).collect();
        assert_eq!(s, [0, 0, 0, 0, 1, 1, 1, 2, 3]);
        // a decimal point is not a sentence break
        assert!(tokenize("above 3.5 points").iter().all(|t| t.sentence == 0));
    }

    #[test]
    fn phrase_normalization() {
        assert_eq!(normalize_phrase("  Most   Popular "), "most popular");
    }
}
