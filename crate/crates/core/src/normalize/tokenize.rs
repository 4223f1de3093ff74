use super::NormalizationMode;

fn is_mark(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Splits rewritten text into tokens.
///
/// Lexical text splits on whitespace only. Semantic text additionally
/// peels leading and trailing punctuation runs off each word; a run stays
/// one token, so `t!!` becomes `t`, `!!`.
pub fn tokenize(text: &str, mode: NormalizationMode) -> Vec<String> {
    let words = text.split_whitespace();
    match mode {
        NormalizationMode::Lexical => words.map(str::to_string).collect(),
        NormalizationMode::Semantic => {
            let mut out = Vec::new();
            for word in words {
                let start = word.find(|c: char| !is_mark(c));
                let Some(start) = start else {
                    out.push(word.to_string());
                    continue;
                };
                let end = word
                    .char_indices()
                    .rev()
                    .find(|(_, c)| !is_mark(*c))
                    .map(|(i, c)| i + c.len_utf8())
                    .unwrap_or(word.len());
                if start > 0 {
                    out.push(word[..start].to_string());
                }
                out.push(word[start..end].to_string());
                if end < word.len() {
                    out.push(word[end..].to_string());
                }
            }
            out
        }
    }
}
