//! Emoji segmentation, repetition collapse and gloss substitution.

use super::lexicon::LexiconSet;
use super::NormalizationMode;

const ZWJ: char = '\u{200D}';

/// Pictographic code points. Not the full Unicode `Extended_Pictographic`
/// property, but it covers the blocks tweets actually use.
pub fn is_emoji_char(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2300..=0x23FF
        | 0x2B00..=0x2BFF
        | 0x3030 | 0x303D | 0x3297 | 0x3299
    )
}

/// Modifiers that only make sense attached to a preceding emoji.
pub fn is_emoji_component(c: char) -> bool {
    matches!(c as u32,
        0xFE0E | 0xFE0F | 0x200D | 0x20E3
        | 0x1F3FB..=0x1F3FF
        | 0xE0020..=0xE007F
    )
}

fn is_regional_indicator(c: char) -> bool {
    ('\u{1F1E6}'..='\u{1F1FF}').contains(&c)
}

#[derive(Debug, PartialEq, Eq)]
enum Segment<'a> {
    Char(char),
    Emoji { seq: String, key: Option<&'a str> },
}

fn segments<'a>(text: &str, lex: &'a LexiconSet) -> Vec<Segment<'a>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < chars.len() {
        let longest = lex.max_emoji_chars().min(chars.len() - i);
        for len in (1..=longest).rev() {
            let candidate: String = chars[i..i + len].iter().collect();
            if let Some((key, _)) = lex.emoji_entry(&candidate) {
                out.push(Segment::Emoji {
                    seq: candidate,
                    key: Some(key),
                });
                i += len;
                continue 'outer;
            }
        }
        let c = chars[i];
        if is_emoji_char(c) || is_emoji_component(c) {
            let start = i;
            i += 1;
            if is_regional_indicator(c) && i < chars.len() && is_regional_indicator(chars[i]) {
                i += 1;
            }
            while i < chars.len() && is_emoji_component(chars[i]) {
                if chars[i] == ZWJ && i + 1 < chars.len() && is_emoji_char(chars[i + 1]) {
                    i += 2;
                } else {
                    i += 1;
                }
            }
            out.push(Segment::Emoji {
                seq: chars[start..i].iter().collect(),
                key: None,
            });
        } else {
            out.push(Segment::Char(c));
            i += 1;
        }
    }
    out
}

/// Collapses back-to-back repeats of the same emoji (whitespace between
/// repeats is ignored) and replaces each survivor by its gloss for `mode`,
/// padded with spaces. Emojis with no gloss, or no lexicon row at all, are
/// replaced by a space.
pub fn rewrite_emoji(text: &str, lex: &LexiconSet, mode: NormalizationMode) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last: Option<String> = None;
    for seg in segments(text, lex) {
        match seg {
            Segment::Char(c) => {
                if !c.is_whitespace() {
                    last = None;
                }
                out.push(c);
            }
            Segment::Emoji { seq, key } => {
                if last.as_deref() == Some(seq.as_str()) {
                    continue;
                }
                out.push(' ');
                if let Some(g) = key.and_then(|k| lex.emoji(k)).and_then(|g| g.for_mode(mode)) {
                    out.push_str(g);
                    out.push(' ');
                }
                last = Some(seq);
            }
        }
    }
    out
}

/// True when `text` still contains an emoji that has a lexicon entry.
pub fn contains_known_emoji(text: &str, lex: &LexiconSet) -> bool {
    segments(text, lex)
        .iter()
        .any(|s| matches!(s, Segment::Emoji { key: Some(_), .. }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> LexiconSet {
        LexiconSet::bundled()
    }

    #[test]
    fn repeats_collapse() {
        let out = rewrite_emoji("💤💤💤 the t!!", &lex(), NormalizationMode::Lexical);
        assert_eq!(out.split_whitespace().collect::<Vec<_>>(), ["zzz", "the", "t!!"]);
        let out = rewrite_emoji("💤 💤", &lex(), NormalizationMode::Semantic);
        assert_eq!(out.trim(), "I am asleep!");
    }

    #[test]
    fn separated_repeats_are_kept() {
        let out = rewrite_emoji("💤 a 💤", &lex(), NormalizationMode::Lexical);
        assert_eq!(out.split_whitespace().collect::<Vec<_>>(), ["zzz", "a", "zzz"]);
    }

    #[test]
    fn unknown_emoji_deleted() {
        let out = rewrite_emoji("go🚀now", &lex(), NormalizationMode::Semantic);
        assert_eq!(out.split_whitespace().collect::<Vec<_>>(), ["go", "now"]);
    }

    #[test]
    fn longest_match_wins() {
        let lex = LexiconSet::parse("❤\theart\tA.\n❤\u{FE0F}\tred heart\tB.\n", "", "").unwrap();
        let out = rewrite_emoji("❤\u{FE0F}", &lex, NormalizationMode::Lexical);
        assert_eq!(out.trim(), "red heart");
        let out = rewrite_emoji("❤", &lex, NormalizationMode::Lexical);
        assert_eq!(out.trim(), "heart");
    }

    #[test]
    fn zwj_sequence_is_one_unit() {
        let family = "👨\u{200D}👩\u{200D}👧";
        let lex = lex();
        let segs = segments(family, &lex);
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn flags() {
        let lex = lex();
        let segs = segments("🇿🇦🇺🇸", &lex);
        assert_eq!(segs.len(), 2);
        assert!(matches!(segs[0], Segment::Emoji { key: Some(_), .. }));
        assert!(matches!(segs[1], Segment::Emoji { key: None, .. }));
    }
}
