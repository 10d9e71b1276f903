//! Tokenization and n-gram windows over mixed-script text.
//!
//! Space-delimited scripts (Latin, Cyrillic, Devanagari, Hangul) tokenize into
//! words; Han and Thai tokenize into single codepoints because neither has a
//! deterministic word boundary without a dictionary.

use crate::langid::script_of;
use crate::language::ScriptClass;

/// How a token attaches to its neighbour when fragments are rendered back to text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joiner {
    Spaced,
    Concatenated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub joiner: Joiner,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizeOptions {
    /// Emit punctuation and symbols as single-codepoint tokens instead of dropping them.
    pub keep_punctuation: bool,
}

/// Pluggable tokenizer; [`ScriptTokenizer`] is the default.
pub trait Tokenizer: Sync {
    fn tokenize(&self, text: &str) -> TokenSequence;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptTokenizer {
    pub options: TokenizeOptions,
}

impl Tokenizer for ScriptTokenizer {
    fn tokenize(&self, text: &str) -> TokenSequence {
        tokenize_with(text, self.options)
    }
}

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.text.trim().is_empty()));
        Self { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// Renders the whole sequence using the joiner policy.
    pub fn render(&self) -> String {
        render(&self.tokens)
    }
}

/// Renders tokens: a space separates neighbours unless both are concatenated.
pub fn render(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            let prev = &tokens[i - 1];
            if prev.joiner == Joiner::Spaced || tok.joiner == Joiner::Spaced {
                out.push(' ');
            }
        }
        out.push_str(&tok.text);
    }
    out
}

pub fn tokenize(text: &str) -> TokenSequence {
    tokenize_with(text, TokenizeOptions::default())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RunKind {
    Word(ScriptClass),
    Digits,
}

fn is_word_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '‐')
}

pub fn tokenize_with(text: &str, options: TokenizeOptions) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut kind: Option<RunKind> = None;

    let flush = |current: &mut String, kind: &mut Option<RunKind>, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            tokens.push(Token {
                text: std::mem::take(current),
                joiner: Joiner::Spaced,
            });
        }
        *kind = None;
    };

    for (i, &c) in chars.iter().enumerate() {
        if c.is_numeric() {
            if kind != Some(RunKind::Digits) {
                flush(&mut current, &mut kind, &mut tokens);
                kind = Some(RunKind::Digits);
            }
            current.push(c);
            continue;
        }
        match script_of(c) {
            Some(script) if script.is_scriptio_continua() => {
                flush(&mut current, &mut kind, &mut tokens);
                tokens.push(Token {
                    text: c.to_string(),
                    joiner: Joiner::Concatenated,
                });
            }
            Some(script) => {
                if kind != Some(RunKind::Word(script)) {
                    flush(&mut current, &mut kind, &mut tokens);
                    kind = Some(RunKind::Word(script));
                }
                current.push(c);
            }
            None => {
                // Apostrophes and hyphens stay inside a word when letters of the same script follow.
                if let Some(RunKind::Word(script)) = kind {
                    if is_word_joiner(c)
                        && chars
                            .get(i + 1)
                            .is_some_and(|&next| script_of(next) == Some(script))
                    {
                        current.push(c);
                        continue;
                    }
                }
                flush(&mut current, &mut kind, &mut tokens);
                if options.keep_punctuation && !c.is_whitespace() && !c.is_control() {
                    tokens.push(Token {
                        text: c.to_string(),
                        joiner: Joiner::Spaced,
                    });
                }
            }
        }
    }
    flush(&mut current, &mut kind, &mut tokens);
    TokenSequence { tokens }
}

/// Overlapping windows of `n` tokens rendered to text.
///
/// A non-empty sequence shorter than `n` yields one fragment holding the whole sequence.
pub fn ngrams(seq: &TokenSequence, n: usize) -> Result<Vec<String>, SegmentError> {
    if n == 0 {
        return Err(SegmentError::ZeroOrder);
    }
    let tokens = seq.tokens();
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    if tokens.len() < n {
        return Ok(vec![render(tokens)]);
    }
    Ok(tokens.windows(n).map(render).collect())
}
