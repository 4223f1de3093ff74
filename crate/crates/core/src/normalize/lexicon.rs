//! Emoji, slang and contraction rewrite tables.
//!
//! All three files are tab-separated, `#` starts a comment line and blank
//! lines are ignored. Fields are trimmed.
//!
//! ```text
//! emoji:        <emoji codepoints> \t <lexical gloss|DELETE> \t <semantic gloss|DELETE>
//! slang:        <token> \t <lexical replacement> \t <semantic replacement>
//! contractions: <contraction> \t <expansion>
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::NormalizationMode;

pub const DELETE: &str = "DELETE";

const BUNDLED_EMOJI: &str = include_str!("../../data/emoji.tsv");
const BUNDLED_SLANG: &str = include_str!("../../data/slang.tsv");
const BUNDLED_CONTRACTIONS: &str = include_str!("../../data/contractions.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: expected {expected} tab-separated columns, found {found}")]
    Columns {
        file: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file} line {line}: empty key")]
    EmptyKey { file: String, line: usize },
    #[error("{file} line {line}: duplicate key {key:?}")]
    DuplicateKey { file: String, line: usize, key: String },
    #[error("{file}: replacement {replacement:?} for {key:?} contains slang key {inner:?}, rewriting would not be idempotent")]
    ReplacementIsKey {
        file: String,
        key: String,
        replacement: String,
        inner: String,
    },
}

/// Per-mode rendering of one emoji; `None` deletes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiGloss {
    pub lexical: Option<String>,
    pub semantic: Option<String>,
}

impl EmojiGloss {
    pub fn for_mode(&self, mode: NormalizationMode) -> Option<&str> {
        match mode {
            NormalizationMode::Lexical => self.lexical.as_deref(),
            NormalizationMode::Semantic => self.semantic.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    emoji: HashMap<String, EmojiGloss>,
    /// longest emoji key, in chars
    max_emoji_chars: usize,
    slang_lexical: HashMap<String, String>,
    slang_semantic: HashMap<String, String>,
    contractions: HashMap<String, String>,
}

fn rows<'a>(
    file: &'a str,
    content: &'a str,
    expected: usize,
) -> impl Iterator<Item = Result<(usize, Vec<&'a str>), LexiconError>> + 'a {
    content.lines().enumerate().filter_map(move |(i, raw)| {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if cols.len() != expected {
            return Some(Err(LexiconError::Columns {
                file: file.to_string(),
                line,
                expected,
                found: cols.len(),
            }));
        }
        if cols[0].is_empty() {
            return Some(Err(LexiconError::EmptyKey {
                file: file.to_string(),
                line,
            }));
        }
        Some(Ok((line, cols)))
    })
}

fn gloss(field: &str) -> Option<String> {
    if field == DELETE || field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

/// Lowercases and folds typographic apostrophes so `it’s` and `It's` share a key.
pub(crate) fn contraction_key(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '\u{2019}' | '\u{02BC}' | '`' => '\'',
            c => c,
        })
        .collect::<String>()
        .to_lowercase()
}

/// Strips leading and trailing non-alphanumeric characters.
pub(crate) fn token_core(token: &str) -> (&str, &str, &str) {
    let start = token.char_indices().find(|(_, c)| c.is_alphanumeric()).map(|(i, _)| i);
    let Some(start) = start else {
        return (token, "", "");
    };
    let end = token
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(token.len());
    (&token[..start], &token[start..end], &token[end..])
}

impl LexiconSet {
    pub fn parse(emoji: &str, slang: &str, contractions: &str) -> Result<Self, LexiconError> {
        let mut lex = LexiconSet::default();

        for row in rows("emoji", emoji, 3) {
            let (line, cols) = row?;
            let key = cols[0].to_string();
            if lex.emoji.contains_key(&key) {
                return Err(LexiconError::DuplicateKey {
                    file: "emoji".into(),
                    line,
                    key,
                });
            }
            lex.max_emoji_chars = lex.max_emoji_chars.max(key.chars().count());
            lex.emoji.insert(
                key,
                EmojiGloss {
                    lexical: gloss(cols[1]),
                    semantic: gloss(cols[2]),
                },
            );
        }

        for row in rows("slang", slang, 3) {
            let (line, cols) = row?;
            let key = cols[0].to_lowercase();
            if lex.slang_lexical.contains_key(&key) || lex.slang_semantic.contains_key(&key) {
                return Err(LexiconError::DuplicateKey {
                    file: "slang".into(),
                    line,
                    key,
                });
            }
            // identity rows document that a mode leaves the token alone
            if cols[1].to_lowercase() != key {
                lex.slang_lexical.insert(key.clone(), cols[1].to_string());
            }
            if cols[2].to_lowercase() != key {
                lex.slang_semantic.insert(key, cols[2].to_string());
            }
        }

        for row in rows("contractions", contractions, 2) {
            let (line, cols) = row?;
            let key = contraction_key(cols[0]);
            if lex.contractions.contains_key(&key) {
                return Err(LexiconError::DuplicateKey {
                    file: "contractions".into(),
                    line,
                    key,
                });
            }
            lex.contractions.insert(key, cols[1].to_string());
        }

        lex.check_replacements()?;
        Ok(lex)
    }

    /// Rejects replacement text that would itself be rewritten by the slang
    /// pass of the same mode.
    fn check_replacements(&self) -> Result<(), LexiconError> {
        for mode in [NormalizationMode::Lexical, NormalizationMode::Semantic] {
            let slang = self.slang_map(mode);
            let mut replacements: Vec<(&str, &str)> = slang.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            replacements.extend(
                self.emoji
                    .iter()
                    .filter_map(|(k, g)| g.for_mode(mode).map(|v| (k.as_str(), v))),
            );
            replacements.sort();
            for (key, value) in replacements {
                for word in value.split_whitespace() {
                    let (_, core, _) = token_core(word);
                    if slang.contains_key(&core.to_lowercase()) {
                        return Err(LexiconError::ReplacementIsKey {
                            file: "slang".into(),
                            key: key.to_string(),
                            replacement: value.to_string(),
                            inner: core.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn load(emoji_path: &Path, slang_path: &Path, contraction_path: &Path) -> Result<Self, LexiconError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| LexiconError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        Self::parse(&read(emoji_path)?, &read(slang_path)?, &read(contraction_path)?)
    }

    /// The lexicons shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_EMOJI, BUNDLED_SLANG, BUNDLED_CONTRACTIONS).expect("bundled lexicons are valid")
    }

    pub fn bundled_sources() -> [(&'static str, &'static str); 3] {
        [
            ("emoji.tsv", BUNDLED_EMOJI),
            ("slang.tsv", BUNDLED_SLANG),
            ("contractions.tsv", BUNDLED_CONTRACTIONS),
        ]
    }

    pub fn emoji(&self, key: &str) -> Option<&EmojiGloss> {
        self.emoji.get(key)
    }

    pub fn emoji_entry(&self, key: &str) -> Option<(&str, &EmojiGloss)> {
        self.emoji.get_key_value(key).map(|(k, g)| (k.as_str(), g))
    }

    pub fn emoji_keys(&self) -> impl Iterator<Item = &str> {
        self.emoji.keys().map(String::as_str)
    }

    pub fn emoji_len(&self) -> usize {
        self.emoji.len()
    }

    pub fn max_emoji_chars(&self) -> usize {
        self.max_emoji_chars
    }

    pub fn slang_map(&self, mode: NormalizationMode) -> &HashMap<String, String> {
        match mode {
            NormalizationMode::Lexical => &self.slang_lexical,
            NormalizationMode::Semantic => &self.slang_semantic,
        }
    }

    pub fn slang(&self, mode: NormalizationMode, token: &str) -> Option<&str> {
        self.slang_map(mode).get(&token.to_lowercase()).map(String::as_str)
    }

    pub fn contraction(&self, token: &str) -> Option<&str> {
        self.contractions.get(&contraction_key(token)).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emoji_row_with_both_glosses() {
        let lex = LexiconSet::parse("😀 \t grinning face \t I am happy about this!\n", "", "").unwrap();
        let g = lex.emoji("😀").unwrap();
        assert_eq!(g.lexical.as_deref(), Some("grinning face"));
        assert_eq!(g.semantic.as_deref(), Some("I am happy about this!"));
    }

    #[test]
    fn delete_row() {
        let lex = LexiconSet::parse("⚽\tDELETE\tDELETE\n", "", "").unwrap();
        let g = lex.emoji("⚽").unwrap();
        assert_eq!(g.lexical, None);
        assert_eq!(g.semantic, None);
    }

    #[test]
    fn duplicate_emoji_key_named() {
        let err = LexiconSet::parse("😀\ta\tb\n# c\n😀\tc\td\n", "", "").unwrap_err();
        match &err {
            LexiconError::DuplicateKey { line, key, .. } => {
                assert_eq!(*line, 3);
                assert_eq!(key, "😀");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("😀"));
    }

    #[test]
    fn column_count_checked() {
        let err = LexiconSet::parse("😀\tonly two\n", "", "").unwrap_err();
        assert!(matches!(
            err,
            LexiconError::Columns {
                line: 1,
                expected: 3,
                found: 2,
                ..
            }
        ));
        let err = LexiconSet::parse("", "", "it's\tit\tis\n").unwrap_err();
        assert!(matches!(err, LexiconError::Columns { expected: 2, .. }));
    }

    #[test]
    fn empty_key_rejected() {
        let err = LexiconSet::parse("", "\tx\ty\n", "").unwrap_err();
        assert!(matches!(err, LexiconError::EmptyKey { .. }));
    }

    #[test]
    fn replacement_containing_key_rejected() {
        let err = LexiconSet::parse("", "u\tyou\tyou\nidk\tu know\tu know\n", "").unwrap_err();
        assert!(matches!(err, LexiconError::ReplacementIsKey { .. }));
    }

    #[test]
    fn contraction_apostrophes_fold() {
        let lex = LexiconSet::parse("", "", "can't\tcannot\n").unwrap();
        assert_eq!(lex.contraction("can’t"), Some("cannot"));
        assert_eq!(lex.contraction("CAN'T"), Some("cannot"));
    }

    #[test]
    fn slang_modes() {
        let lex = LexiconSet::bundled();
        assert_eq!(lex.slang(NormalizationMode::Lexical, "2day"), Some("today"));
        assert_eq!(lex.slang(NormalizationMode::Semantic, "vaxxed"), Some("vaccinated"));
        assert_eq!(lex.slang(NormalizationMode::Lexical, "vaxxed"), None);
        assert_eq!(lex.slang(NormalizationMode::Lexical, "r"), None);
    }

    #[test]
    fn bundled_covers_reference_emoji() {
        let lex = LexiconSet::bundled();
        for e in ["😀", "🤨", "🙄", "😤", "😰", "🤢", "😎", "💩", "💔", "💤", "💢", "⚽"] {
            assert!(lex.emoji(e).is_some(), "{e}");
        }
        assert_eq!(lex.max_emoji_chars(), 2);
    }

    #[test]
    fn load_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths: Vec<_> = LexiconSet::bundled_sources()
            .iter()
            .map(|(name, body)| {
                let p = dir.path().join(name);
                fs::write(&p, body).unwrap();
                p
            })
            .collect();
        let lex = LexiconSet::load(&paths[0], &paths[1], &paths[2]).unwrap();
        assert_eq!(lex.emoji_len(), LexiconSet::bundled().emoji_len());
        let err = LexiconSet::load(Path::new("/missing"), &paths[1], &paths[2]).unwrap_err();
        assert!(matches!(err, LexiconError::Io { .. }));
    }

    #[test]
    fn core_split() {
        assert_eq!(token_core("(hello!)"), ("(", "hello", "!)"));
        assert_eq!(token_core("!!"), ("!!", "", ""));
        assert_eq!(token_core("t!!"), ("", "t", "!!"));
    }
}
