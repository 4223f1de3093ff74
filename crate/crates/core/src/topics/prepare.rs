use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::TopicsError;
use crate::normalize::{
    bundled_lexicon, expand_contractions, is_emoji_char, is_emoji_component, strip_hashtags, url_re, LexiconSet,
};

/// Stopword list and lemma exceptions for topic-model token cleanup.
#[derive(Debug, Clone)]
pub struct LdaPreprocessor {
    stopwords: HashSet<String>,
    lemmas: HashMap<String, String>,
}

impl LdaPreprocessor {
    /// `stopwords`: one word per line, `#` comments allowed. `lemmas`: TSV
    /// with header `form lemma`.
    pub fn parse(stopwords: &str, lemmas: &str) -> Result<Self, TopicsError> {
        let stopwords = stopwords
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        let mut map = HashMap::new();
        for (i, line) in lemmas.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            match (f.next(), f.next(), f.next()) {
                (Some(form), Some(lemma), None) if !form.is_empty() && !lemma.is_empty() => {
                    map.insert(form.trim().to_lowercase(), lemma.trim().to_lowercase());
                }
                _ => {
                    return Err(TopicsError::Resource {
                        line: i + 1,
                        reason: format!("expected `form<TAB>lemma`, got {line:?}"),
                    })
                }
            }
        }
        Ok(LdaPreprocessor { stopwords, lemmas: map })
    }

    pub fn load(stopwords: &Path, lemmas: &Path) -> Result<Self, TopicsError> {
        Self::parse(&std::fs::read_to_string(stopwords)?, &std::fs::read_to_string(lemmas)?)
    }

    pub fn bundled() -> Self {
        Self::parse(
            include_str!("../../data/stopwords.txt"),
            include_str!("../../data/lemmas.tsv"),
        )
        .expect("bundled resources parse")
    }

    pub fn is_stopword(&self, w: &str) -> bool {
        self.stopwords.contains(w)
    }

    pub fn lemmatize(&self, word: &str) -> String {
        if let Some(l) = self.lemmas.get(word) {
            return l.clone();
        }
        lemmatize_rules(word)
    }

    /// Cleans one tweet into lemmatized content tokens.
    pub fn prepare(&self, text: &str, lex: &LexiconSet) -> Vec<String> {
        let text = url_re().replace_all(text, "$1 ");
        let text = strip_hashtags(&text);
        let text: String = text
            .chars()
            .map(|c| {
                if is_emoji_char(c) || is_emoji_component(c) {
                    ' '
                } else {
                    c
                }
            })
            .collect();
        let text = expand_contractions(&text, lex);
        let text: String = text
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect::<String>()
            .to_lowercase();
        text.split_whitespace()
            .filter(|w| !self.is_stopword(w))
            .map(|w| self.lemmatize(w))
            .filter(|w| w.chars().count() >= 2 && !self.is_stopword(w))
            .collect()
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Consonant at position `i`; `y` counts as a consonant after a vowel or at
/// the start.
fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        c if is_vowel(c) => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_consonant(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Repairs a stem left by removing `-ing` / `-ed`.
fn repair(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") || (measure(b) == 1 && ends_cvc(b)) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Suffix rules for words without an exception entry.
pub fn lemmatize_rules(word: &str) -> String {
    if !word.is_ascii() || word.len() <= 3 || word.bytes().any(|b| b.is_ascii_digit()) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    for suffix in ["ches", "shes", "xes", "zzes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with('s') && !(word.ends_with("us") || word.ends_with("ss") || word.ends_with("is")) {
        return word[..word.len() - 1].to_string();
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem.as_bytes()) {
            return repair(stem);
        }
    }
    if let Some(stem) = word.strip_suffix("ied") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if !word.ends_with("eed") {
        if let Some(stem) = word.strip_suffix("ed") {
            if stem.len() >= 2 && has_vowel(stem.as_bytes()) {
                return repair(stem);
            }
        }
    }
    word.to_string()
}

/// Runs [`LdaPreprocessor::prepare`] over every text with the bundled
/// contraction table.
pub fn prepare_for_lda<S: AsRef<str>>(texts: &[S], pre: &LdaPreprocessor) -> Vec<Vec<String>> {
    let lex = bundled_lexicon();
    texts.iter().map(|t| pre.prepare(t.as_ref(), lex)).collect()
}
