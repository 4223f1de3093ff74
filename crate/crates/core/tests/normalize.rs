use proptest::prelude::*;
use tweetsent_core::normalize::{bundled_lexicon, normalize_lexical, normalize_semantic};

const PIECES: &[&str] = &[
    "vaccine",
    "Vaxxed",
    "2day",
    "u2",
    "it’s",
    "can't",
    "WON'T",
    "@user",
    "@A_b",
    "#Covid19",
    "##x",
    "https://t.co/x1",
    "http://a.b",
    "www.site.org/a?b",
    "30th",
    "2021",
    "1st",
    "!!",
    "?",
    "...",
    ",",
    "'",
    "\"",
    "💤",
    "💤💤",
    "😀",
    "🙄🙄",
    "⚽",
    "🚀",
    "🇿🇦",
    "❤️",
    "❤",
    "\u{fe0f}",
    "Name1",
    "atUser",
    "url",
    "HeLlO",
    "i",
    "r",
    "ded",
    "—",
    "&amp;",
    "ñandú",
    "ÆON",
    "x",
    "  ",
    "\t",
    "\n",
    "-",
    "_",
    "@",
    "#",
];

fn tweet() -> impl Strategy<Value = String> {
    prop::collection::vec((prop::sample::select(PIECES), any::<bool>()), 0..14).prop_map(|parts| {
        let mut s = String::new();
        for (p, space) in parts {
            s.push_str(p);
            if space {
                s.push(' ');
            }
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn lexical_idempotent(s in tweet()) {
        let lex = bundled_lexicon();
        let once = normalize_lexical(&s, lex);
        prop_assert_eq!(normalize_lexical(&once.text, lex), once);
    }

    #[test]
    fn semantic_idempotent(s in tweet()) {
        let lex = bundled_lexicon();
        let once = normalize_semantic(&s, lex);
        prop_assert_eq!(normalize_semantic(&once.text, lex), once);
    }

    #[test]
    fn lexical_output_shape(s in tweet()) {
        let n = normalize_lexical(&s, bundled_lexicon());
        // atUser is the one placeholder allowed an uppercase letter
        let stripped = n.text.replace("atUser", "");
        prop_assert!(!stripped.chars().any(|c| c.is_uppercase() || "!?.,;:'\"#@".contains(c)), "{}", n.text);
        prop_assert_eq!(n.tokens.join(" "), n.text);
    }

    #[test]
    fn semantic_output_shape(s in tweet()) {
        let lex = bundled_lexicon();
        let n = normalize_semantic(&s, lex);
        prop_assert!(!n.text.contains("http"), "{}", n.text);
        for e in ["💤", "😀", "🙄", "❤"] {
            prop_assert!(!n.text.contains(e), "{}", n.text);
        }
        prop_assert!(n.tokens.iter().all(|t| !t.is_empty() && t.trim() == t));
        let joined: String = n.tokens.concat();
        let squashed: String = n.text.split_whitespace().collect();
        prop_assert_eq!(joined, squashed);
    }

    #[test]
    fn deterministic(s in tweet()) {
        let lex = bundled_lexicon();
        prop_assert_eq!(normalize_lexical(&s, lex), normalize_lexical(&s, lex));
        prop_assert_eq!(normalize_semantic(&s, lex), normalize_semantic(&s, lex));
    }
}
