//! Tweet normalization in two modes.
//!
//! *Lexical* rewriting flattens a tweet into lowercase words: emojis become
//! their literal descriptions, mentions collapse to `atUser`, links become
//! `url`, punctuation and long numbers disappear.
//!
//! *Semantic* rewriting keeps case, punctuation and numerals, replaces each
//! emoji by the message it conveys, numbers mentions `Name1`, `Name2`, ...
//! and deletes links.
//!
//! Neither mode removes stop-words, stems or lemmatizes.

mod emoji;
mod lexicon;
mod tokenize;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use emoji::{contains_known_emoji, is_emoji_char, is_emoji_component, rewrite_emoji};
pub use lexicon::{EmojiGloss, LexiconError, LexiconSet, DELETE};
pub use tokenize::tokenize;

pub(crate) use lexicon::token_core;

/// Placeholder for a run of @mentions in lexical mode.
pub const AT_USER: &str = "atUser";
/// Replacement for hyperlinks in lexical mode.
pub const URL_TOKEN: &str = "url";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    Lexical,
    Semantic,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::Lexical => "lexical",
            NormalizationMode::Semantic => "semantic",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lexical" | "corpus" => Ok(NormalizationMode::Lexical),
            "semantic" | "semantics" => Ok(NormalizationMode::Semantic),
            other => Err(format!("unknown normalization mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub mode: NormalizationMode,
    pub text: String,
    pub tokens: Vec<String>,
}

impl NormalizedText {
    fn new(mode: NormalizationMode, rewritten: &str) -> Self {
        let tokens = tokenize(rewritten, mode);
        let text = rewritten.split_whitespace().collect::<Vec<_>>().join(" ");
        NormalizedText { mode, text, tokens }
    }
}

pub(crate) fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://\S*|(^|[^\p{L}\p{N}_])www\.\S*)").unwrap())
}

fn contraction_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-Za-z]+(?:['’ʼ`][A-Za-z]+)+\b").unwrap())
}

fn mention_run_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(^|[^\w@])@\w+(?:\s+@\w+)*").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(^|[^\w@])@(\w+)").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(^|[^\w#])#+(\w)").unwrap())
}

/// Carries the letter case of `original` over to `replacement`.
fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    match original.chars().next() {
        Some(c) if c.is_uppercase() => {
            let mut chars = replacement.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => replacement.to_string(),
    }
}

pub(crate) fn expand_contractions(text: &str, lex: &LexiconSet) -> String {
    contraction_re()
        .replace_all(text, |caps: &regex::Captures| expand_chain(&caps[0], lex))
        .into_owned()
}

/// Tries each adjacent pair of a run like "user'it’s" left to right, so an
/// unknown pair does not hide a contraction after it.
fn expand_chain(chain: &str, lex: &LexiconSet) -> String {
    let words: Vec<&str> = chain.split(is_apostrophe).collect();
    let marks: Vec<char> = chain.chars().filter(|c| is_apostrophe(*c)).collect();
    let mut out = String::with_capacity(chain.len());
    let mut i = 0;
    while i < words.len() {
        if i + 1 < words.len() {
            let pair = format!("{}{}{}", words[i], marks[i], words[i + 1]);
            if let Some(exp) = lex.contraction(&pair) {
                out.push_str(&match_case(&pair, exp));
                i += 2;
                if i < words.len() {
                    out.push(marks[i - 1]);
                }
                continue;
            }
        }
        out.push_str(words[i]);
        if i < marks.len() {
            out.push(marks[i]);
        }
        i += 1;
    }
    out
}

pub(crate) fn strip_hashtags(text: &str) -> String {
    // run twice so adjacent tags like "#a#b" lose both marks
    let once = hashtag_re().replace_all(text, "$1$2");
    hashtag_re().replace_all(&once, "$1$2").into_owned()
}

fn replace_slang(text: &str, lex: &LexiconSet, mode: NormalizationMode) -> String {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let (lead, core, trail) = token_core(token);
        match lex.slang(mode, core) {
            Some(rep) => {
                let rep = if mode == NormalizationMode::Semantic {
                    match_case(core, rep)
                } else {
                    rep.to_string()
                };
                out.push(format!("{lead}{rep}{trail}"));
            }
            None => out.push(token.to_string()),
        }
    }
    out.join(" ")
}

fn is_ordinal(token: &str) -> Option<&str> {
    let digits_end = token.find(|c: char| !c.is_ascii_digit())?;
    if digits_end == 0 {
        return None;
    }
    match &token[digits_end..] {
        "st" | "nd" | "rd" | "th" => Some(&token[..digits_end]),
        _ => None,
    }
}

/// Longest digit run that survives lexical integer removal.
const MAX_KEPT_DIGITS: usize = 2;

/// Lexical number handling on one punctuation-free lowercase token.
///
/// Ordinals keep their number without the suffix (`30th` -> `30`), letters
/// keep nothing of embedded digits (`covid19` -> `covid`), and standalone
/// numbers are dropped. Numbers of up to two digits are kept both when
/// standalone and when they come from an ordinal, which keeps the rule
/// idempotent.
fn strip_integers(token: &str) -> Option<String> {
    if !token.chars().any(|c| c.is_ascii_digit()) {
        return Some(token.to_string());
    }
    if token.chars().all(|c| c.is_ascii_digit()) {
        return (token.len() <= MAX_KEPT_DIGITS).then(|| token.to_string());
    }
    if let Some(num) = is_ordinal(token) {
        return (num.len() <= MAX_KEPT_DIGITS).then(|| num.to_string());
    }
    let letters: String = token.chars().filter(|c| !c.is_ascii_digit()).collect();
    (!letters.is_empty()).then_some(letters)
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}' | '`')
}

/// Rewrites a tweet with the lexical rule set.
///
/// Rule order: links, emojis (repeat collapse then gloss), contractions,
/// mention runs, hashtag marks, lowercasing, punctuation, slang, integers,
/// slang again for tokens exposed by digit removal.
pub fn normalize_lexical(raw: &str, lex: &LexiconSet) -> NormalizedText {
    let mode = NormalizationMode::Lexical;
    let url_rep = format!("$1 {URL_TOKEN} ");
    let text = url_re().replace_all(raw, url_rep.as_str());
    let text = rewrite_emoji(&text, lex, mode);
    let text = expand_contractions(&text, lex);
    let mention_rep = format!("$1 {AT_USER} ");
    let text = mention_run_re().replace_all(&text, mention_rep.as_str());
    let text = strip_hashtags(&text);

    let lowered: Vec<String> = text
        .split_whitespace()
        .map(|t| if t == AT_USER { t.to_string() } else { t.to_lowercase() })
        .collect();

    let mut depunct = String::new();
    for token in &lowered {
        if token == AT_USER {
            depunct.push_str(AT_USER);
        } else {
            for c in token.chars() {
                if c.is_alphanumeric() {
                    depunct.push(c);
                } else if !is_apostrophe(c) {
                    depunct.push(' ');
                }
            }
        }
        depunct.push(' ');
    }

    let text = replace_slang(&depunct, lex, mode);
    let numbers_stripped: Vec<String> = text.split_whitespace().filter_map(strip_integers).collect();
    let text = replace_slang(&numbers_stripped.join(" "), lex, mode);
    NormalizedText::new(mode, &text)
}

/// Rewrites a tweet with the semantic rule set.
///
/// Rule order: links (deleted), emojis (repeat collapse then gloss),
/// contractions, hashtag marks, numbered mentions, slang. Case, punctuation
/// and numerals are left alone.
pub fn normalize_semantic(raw: &str, lex: &LexiconSet) -> NormalizedText {
    let mode = NormalizationMode::Semantic;
    let text = url_re().replace_all(raw, "$1 ");
    let text = rewrite_emoji(&text, lex, mode);
    let text = expand_contractions(&text, lex);
    let text = strip_hashtags(&text);
    let mut n = 0;
    let text = mention_re().replace_all(&text, |caps: &regex::Captures| {
        n += 1;
        format!("{} Name{n}", &caps[1])
    });
    let text = replace_slang(&text, lex, mode);
    NormalizedText::new(mode, &text)
}

pub fn normalize(raw: &str, mode: NormalizationMode, lex: &LexiconSet) -> NormalizedText {
    match mode {
        NormalizationMode::Lexical => normalize_lexical(raw, lex),
        NormalizationMode::Semantic => normalize_semantic(raw, lex),
    }
}

/// Shared bundled lexicon, loaded on first use.
pub fn bundled_lexicon() -> &'static LexiconSet {
    static LEX: OnceLock<LexiconSet> = OnceLock::new();
    LEX.get_or_init(LexiconSet::bundled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(raw: &str) -> String {
        normalize_lexical(raw, bundled_lexicon()).text
    }

    fn sem(raw: &str) -> String {
        normalize_semantic(raw, bundled_lexicon()).text
    }

    #[test]
    fn contractions_both_modes() {
        assert_eq!(lex("it’s can’t"), "it is cannot");
        assert_eq!(sem("it’s can’t"), "it is cannot");
        assert_eq!(sem("It's fine"), "It is fine");
        assert_eq!(sem("I'm DONE, CAN'T"), "I am DONE, CANNOT");
    }

    #[test]
    fn structural_tokens() {
        assert_eq!(lex("@USER1 @USER2"), "atUser");
        assert_eq!(sem("@USER1 @USER2"), "Name1 Name2");
        assert_eq!(lex("https://host/location"), "url");
        assert_eq!(sem("https://host/location"), "");
        assert_eq!(lex("#word"), "word");
        assert_eq!(sem("#word"), "word");
        assert_eq!(lex("HeLlO"), "hello");
        assert_eq!(sem("HeLlO"), "HeLlO");
    }

    #[test]
    fn mention_runs_and_numbering() {
        assert_eq!(lex("hi @a @b and @c"), "hi atUser and atUser");
        assert_eq!(sem("hi @a @b and @c"), "hi Name1 Name2 and Name3");
        assert_eq!(lex("mail me@example.com"), "mail me example com");
    }

    #[test]
    fn numbers() {
        assert_eq!(lex("30th covid19 2021"), "30 covid");
        assert_eq!(sem("30th covid19 2021"), "30th covid19 2021");
        assert_eq!(lex("100th 7 2021"), "7");
    }

    #[test]
    fn slang_and_misspellings() {
        assert_eq!(lex("vaxxed 2day"), "vaxxed today");
        assert_eq!(sem("vaxxed 2day"), "vaccinated today");
        assert_eq!(sem("Vaxxed!"), "Vaccinated!");
        assert_eq!(lex("i r ded"), "i r ded");
        assert_eq!(sem("i r ded"), "i r ded");
    }

    #[test]
    fn repetition() {
        assert_eq!(lex("💤💤💤 the t!!"), "zzz the t");
        assert_eq!(sem("💤💤💤 the t!!"), "I am asleep! the t!!");
    }

    #[test]
    fn emoji_deleted_without_gloss() {
        assert_eq!(lex("goal ⚽"), "goal");
        assert_eq!(sem("goal ⚽!"), "goal !");
        assert_eq!(sem("launch 🚀"), "launch");
    }

    #[test]
    fn semantic_tokens_split_punctuation() {
        let n = normalize_semantic("💤 the t!!", bundled_lexicon());
        assert_eq!(n.tokens, ["I", "am", "asleep", "!", "the", "t", "!!"]);
    }

    #[test]
    fn lexical_punctuation() {
        assert_eq!(lex("anti-vax, really?!"), "anti vax really");
        assert_eq!(lex("Africa’s"), "africas");
    }

    #[test]
    fn ordinal_detection() {
        assert_eq!(is_ordinal("30th"), Some("30"));
        assert_eq!(is_ordinal("1st"), Some("1"));
        assert_eq!(is_ordinal("th"), None);
        assert_eq!(is_ordinal("30x"), None);
        assert_eq!(strip_integers("u2").as_deref(), Some("u"));
        assert_eq!(strip_integers("2021"), None);
    }

    #[test]
    fn contraction_after_unknown_pair() {
        assert_eq!(sem("@user'it’s"), "Name1'it is");
        assert_eq!(sem("x'can’t"), "x'cannot");
        assert_eq!(sem("it’s’s"), "it is’s");
    }

    #[test]
    fn digit_removal_exposes_slang() {
        assert_eq!(lex("u2"), "you");
    }

    #[test]
    fn mode_parse() {
        assert_eq!(
            "lexical".parse::<NormalizationMode>().unwrap(),
            NormalizationMode::Lexical
        );
        assert_eq!(
            "Semantic".parse::<NormalizationMode>().unwrap(),
            NormalizationMode::Semantic
        );
        assert!("other".parse::<NormalizationMode>().is_err());
    }
}
