//! Social-media aware tokenization.
//!
//! The rules follow the staged-regex design of the common tweet tokenizers:
//! at each non-space position the stages below are tried in order and the
//! first one that matches wins.
//!
//! 1. ASCII emoticons (`:)`, `;-P`, `<3`, ...)
//! 2. HTML-like tags and ASCII arrows
//! 3. `@mentions` (only when the `@` is not glued to a preceding word character)
//! 4. `#hashtags`
//! 5. email addresses
//! 6. emoji sequences (ZWJ joins, skin tones, variation selectors, flags)
//! 7. words with inner apostrophes or dashes, numbers with separators, plain words
//! 8. ellipses, then any other single non-space character
//!
//! Words carrying a trailing clitic (`n't`, `'s`, `'re`, `'ve`, `'ll`, `'d`, `'m`)
//! are split in two. Runs of four or more identical non-alphanumeric
//! characters are shortened to three before matching.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Emoticon,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    pub lowercased: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        let surface = surface.into();
        let lowercased = simple_lowercase(&surface);
        Token {
            surface,
            kind,
            lowercased,
        }
    }

    /// Tokens that take part in counting and phrase scoring.
    pub fn is_countable(&self) -> bool {
        self.kind != TokenKind::Punct
    }
}

/// Per-character lowercase mapping that keeps one char per char (no
/// contextual rules, no expansions).
pub fn simple_lowercase(s: &str) -> String {
    s.chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect()
}

/// True iff the token is a plain word whose lowercased surface is in the
/// connector set. Hashtags and mentions are never connectors.
pub fn is_connector(tok: &Token, connectors: &HashSet<String>) -> bool {
    match tok.kind {
        TokenKind::Hashtag | TokenKind::Mention => false,
        _ => connectors.contains(&tok.lowercased),
    }
}

struct Stages {
    emoticon: Regex,
    tag: Regex,
    arrow: Regex,
    mention: Regex,
    hashtag: Regex,
    email: Regex,
    emoji: Regex,
    dashed_word: Regex,
    number: Regex,
    word: Regex,
    ellipsis: Regex,
}

fn stages() -> &'static Stages {
    static STAGES: OnceLock<Stages> = OnceLock::new();
    STAGES.get_or_init(|| {
        let re = |p: &str| Regex::new(&format!(r"\A(?:{p})")).expect("tokenizer regex");
        Stages {
            emoticon: re(r"[<>]?[:;=8][\-o\*']?[\)\]\(\[dDpP/:\}\{@\|\\]|[\)\]\(\[dDpP/:\}\{@\|\\][\-o\*']?[:;=8][<>]?|</?3"),
            tag: re(r"<[^>\s]+>"),
            arrow: re(r"-+>|<-+"),
            mention: re(r"@\w+"),
            hashtag: re(r"#+\w(?:[\w'\-]*\w)?"),
            email: re(r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+"),
            emoji: re(
                r"[\x{1F1E6}-\x{1F1FF}]{2}|\p{Extended_Pictographic}\x{FE0F}?[\x{1F3FB}-\x{1F3FF}]?(?:\x{200D}\p{Extended_Pictographic}\x{FE0F}?[\x{1F3FB}-\x{1F3FF}]?)*",
            ),
            dashed_word: re(r"[\w&&[^\d_]](?:[\w&&[^\d_]]|['’\-_])+[\w&&[^\d_]]"),
            number: re(r"[+\-]?\d+(?:[,/.:\-]\d+)+[+\-]?"),
            word: re(r"\w+"),
            ellipsis: re(r"\.{2,}"),
        }
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Collapse runs of 4+ identical non-alphanumeric characters to 3.
fn shorten_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run > 3 && !c.is_alphanumeric() && !c.is_whitespace() {
            continue;
        }
        out.push(c);
    }
    out
}

const CLITICS: [&str; 6] = ["s", "re", "ve", "ll", "d", "m"];

/// Split a trailing clitic off an apostrophe word.
fn push_word(out: &mut Vec<Token>, surface: &str) {
    let chars: Vec<char> = surface.chars().collect();
    let n = chars.len();
    let tail3 = simple_lowercase(&chars[n.saturating_sub(3)..].iter().collect::<String>());
    if n > 3 && (tail3 == "n't" || tail3 == "n’t") {
        out.push(Token::new(chars[..n - 3].iter().collect::<String>(), TokenKind::Word));
        out.push(Token::new(chars[n - 3..].iter().collect::<String>(), TokenKind::Word));
        return;
    }
    if let Some(pos) = surface.rfind(['\'', '’']) {
        let apostrophe_len = surface[pos..].chars().next().map_or(1, char::len_utf8);
        let tail = simple_lowercase(&surface[pos + apostrophe_len..]);
        if pos > 0 && CLITICS.contains(&tail.as_str()) {
            out.push(Token::new(&surface[..pos], TokenKind::Word));
            out.push(Token::new(&surface[pos..], TokenKind::Word));
            return;
        }
    }
    out.push(Token::new(surface, TokenKind::Word));
}

pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_with(text, true)
}

fn tokenize_with(text: &str, fast_path: bool) -> Vec<Token> {
    let st = stages();
    let text = shorten_runs(text);
    let mut out = Vec::new();
    let mut pos = 0;
    let mut prev_char: Option<char> = None;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("non-empty rest");
        if c.is_whitespace() {
            pos += c.len_utf8();
            prev_char = Some(c);
            continue;
        }
        let (len, kind) = match_at(st, rest, prev_char, fast_path);
        let surface = &rest[..len];
        match kind {
            TokenKind::Word if surface.contains(['\'', '’']) => push_word(&mut out, surface),
            _ => out.push(Token::new(surface, kind)),
        }
        pos += len;
        prev_char = surface.chars().last();
    }
    out
}

/// A plain ASCII letter or digit run followed by whitespace or the end of the
/// text. No earlier stage can claim it unless it could open an emoticon
/// ("8)", "D:", "p8").
fn plain_run(rest: &str) -> Option<(usize, TokenKind)> {
    let bytes = rest.as_bytes();
    if matches!(bytes[0], b'8' | b'd' | b'D' | b'p' | b'P') {
        return None;
    }
    let len = bytes.iter().take_while(|b| b.is_ascii_alphanumeric()).count();
    if len == 0 || !rest[len..].chars().next().is_none_or(char::is_whitespace) {
        return None;
    }
    // Mixed letter/digit runs split in the staged path ("covid19").
    if bytes[..len].iter().all(u8::is_ascii_digit) {
        Some((len, TokenKind::Number))
    } else if bytes[..len].iter().all(u8::is_ascii_alphabetic) {
        Some((len, TokenKind::Word))
    } else {
        None
    }
}

fn match_at(st: &Stages, rest: &str, prev_char: Option<char>, fast_path: bool) -> (usize, TokenKind) {
    if let Some(hit) = plain_run(rest).filter(|_| fast_path) {
        return hit;
    }
    if let Some(m) = st.emoticon.find(rest) {
        // An emoticon ending in a word character and glued to a following word
        // is not an emoticon ("note:Dear", "@8ball").
        let last = m.as_str().chars().last().unwrap_or(' ');
        let next = rest[m.end()..].chars().next();
        if !(is_word_char(last) && next.is_some_and(is_word_char)) {
            return (m.end(), TokenKind::Emoticon);
        }
    }
    for re in [&st.tag, &st.arrow] {
        if let Some(m) = re.find(rest) {
            return (m.end(), TokenKind::Punct);
        }
    }
    if !prev_char.is_some_and(is_word_char) {
        if let Some(m) = st.mention.find(rest) {
            return (m.end(), TokenKind::Mention);
        }
    }
    if let Some(m) = st.hashtag.find(rest) {
        return (m.end(), TokenKind::Hashtag);
    }
    if let Some(m) = st.email.find(rest) {
        return (m.end(), TokenKind::Word);
    }
    if let Some(m) = st.emoji.find(rest) {
        return (m.end(), TokenKind::Word);
    }
    if let Some(m) = st.dashed_word.find(rest) {
        return (m.end(), TokenKind::Word);
    }
    if let Some(m) = st.number.find(rest) {
        return (m.end(), TokenKind::Number);
    }
    if let Some(m) = st.word.find(rest) {
        let kind = if m.as_str().chars().all(|c| c.is_numeric()) {
            TokenKind::Number
        } else {
            TokenKind::Word
        };
        return (m.end(), kind);
    }
    if let Some(m) = st.ellipsis.find(rest) {
        return (m.end(), TokenKind::Punct);
    }
    let c = rest.chars().next().expect("non-empty rest");
    (c.len_utf8(), TokenKind::Punct)
}

/// Lowercased surfaces of countable tokens, with `None` marking a
/// punctuation barrier.
pub fn countable_lowercase(tokens: &[Token]) -> Vec<Option<String>> {
    tokens
        .iter()
        .map(|t| t.is_countable().then(|| t.lowercased.clone()))
        .collect()
}
