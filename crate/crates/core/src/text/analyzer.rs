use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::porter;

/// Options controlling [`analyze`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub unicode_normalization: bool,
    /// Languages whose tokens are Porter-stemmed.
    pub stem_languages: BTreeSet<String>,
    pub stopword_list: Option<BTreeSet<String>>,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            unicode_normalization: true,
            stem_languages: BTreeSet::from(["en".to_string()]),
            stopword_list: None,
        }
    }
}

impl AnalyzerConfig {
    /// Lowercasing and NFKC only; no stemming, no stopwords.
    pub fn plain() -> Self {
        Self {
            stem_languages: BTreeSet::new(),
            ..Self::default()
        }
    }

    pub fn with_stemming<I, S>(mut self, langs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stem_languages = langs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopword_list = Some(words.into_iter().map(Into::into).collect());
        self
    }
}

/// An analyzed token with the byte span of the source text it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Characters that belong to a token; everything else separates tokens.
fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn normalize(raw: &str, config: &AnalyzerConfig) -> String {
    match (config.unicode_normalization, config.lowercase) {
        (true, true) => raw.nfkc().collect::<String>().to_lowercase().nfkc().collect(),
        (true, false) => raw.nfkc().collect(),
        (false, true) => raw.to_lowercase(),
        (false, false) => raw.to_string(),
    }
}

/// Analyzes `text`, keeping the source byte span of every emitted token.
pub fn analyze_spans(text: &str, lang: &str, config: &AnalyzerConfig) -> Vec<Token> {
    let stem = config.stem_languages.contains(lang);
    let mut tokens = Vec::new();
    let mut emit = |start: usize, end: usize| {
        let normalized = normalize(&text[start..end], config);
        // Normalization can introduce separators (e.g. NFKC of "½"), so split again.
        for piece in normalized.split(|c: char| !is_token_char(c)) {
            if piece.is_empty() {
                continue;
            }
            if let Some(stop) = &config.stopword_list {
                if stop.contains(piece) {
                    continue;
                }
            }
            let text = if stem {
                porter::stem(piece)
            } else {
                piece.to_string()
            };
            tokens.push(Token { text, start, end });
        }
    };

    let mut run_start = None;
    for (i, c) in text.char_indices() {
        match (is_token_char(c), run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                emit(s, i);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        emit(s, text.len());
    }
    tokens
}

/// Tokenizes, normalizes, filters and stems `text` for language `lang`.
pub fn analyze(text: &str, lang: &str, config: &AnalyzerConfig) -> Vec<String> {
    analyze_spans(text, lang, config)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text() {
        assert!(analyze("", "en", &AnalyzerConfig::default()).is_empty());
        assert!(analyze("  ,;  ", "en", &AnalyzerConfig::default()).is_empty());
    }

    #[test]
    fn english_is_stemmed() {
        let config = AnalyzerConfig::default().with_stemming(["en"]);
        assert_eq!(analyze("Running runs", "en", &config), ["run", "run"]);
        // Stemming is keyed by language.
        assert_eq!(analyze("Running runs", "de", &config), ["running", "runs"]);
    }

    #[test]
    fn splits_on_punctuation() {
        let config = AnalyzerConfig::plain();
        assert_eq!(
            analyze("Fußball-Weltmeisterschaft", "de", &config),
            ["fußball", "weltmeisterschaft"]
        );
        assert_eq!(
            analyze("l'équipe, (c'est) vrai!", "fr", &config),
            ["l", "équipe", "c", "est", "vrai"]
        );
    }

    #[test]
    fn nfkc_folds_compatibility_forms() {
        let config = AnalyzerConfig::plain();
        assert_eq!(analyze("ＦＩＦＡ ﬁnal", "en", &config), ["fifa", "final"]);
        // Decomposed é composes.
        assert_eq!(analyze("cafe\u{301}", "fr", &config), ["café"]);
        // Fraction expands into separated digits that share the source span.
        let spans = analyze_spans("x ½", "en", &config);
        assert_eq!(spans.len(), 3);
        assert_eq!((spans[1].start, spans[1].end), (2, 4));
        assert_eq!((spans[2].start, spans[2].end), (2, 4));
    }

    #[test]
    fn flags_can_be_disabled() {
        let config = AnalyzerConfig {
            lowercase: false,
            unicode_normalization: false,
            stem_languages: BTreeSet::new(),
            stopword_list: None,
        };
        assert_eq!(analyze("ＡＢ Cd", "en", &config), ["ＡＢ", "Cd"]);
    }

    #[test]
    fn stopwords_removed_before_stemming() {
        let config = AnalyzerConfig::default().with_stopwords(["the", "on"]);
        assert_eq!(analyze("On the fishing boats", "en", &config), ["fish", "boat"]);
    }

    #[test]
    fn spans_point_into_source() {
        let text = "  Größe und Gewicht";
        let spans = analyze_spans(text, "de", &AnalyzerConfig::plain());
        let raw: Vec<&str> = spans.iter().map(|t| &text[t.start..t.end]).collect();
        assert_eq!(raw, ["Größe", "und", "Gewicht"]);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just(' '),
                Just('-'),
                Just('.'),
                Just('Ä'),
                Just('ß'),
                Just('é'),
                Just('\u{301}'),
                Just('ﬁ'),
                Just('Ｆ'),
                Just('İ'),
                Just('½'),
                Just('Σ'),
                proptest::char::range('a', 'z'),
                proptest::char::range('A', 'Z'),
                proptest::char::range('0', '9'),
            ],
            0..40,
        )
        .prop_map(|cs| cs.into_iter().collect())
    }

    proptest! {
        #[test]
        fn analysis_is_idempotent(text in text_strategy()) {
            for config in [
                AnalyzerConfig::plain(),
                AnalyzerConfig::plain().with_stopwords(["the", "a", "b"]),
                AnalyzerConfig { lowercase: false, ..AnalyzerConfig::plain() },
            ] {
                let once = analyze(&text, "de", &config);
                let twice = analyze(&once.join(" "), "de", &config);
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn analysis_is_deterministic(text in text_strategy()) {
            let config = AnalyzerConfig::default();
            prop_assert_eq!(analyze(&text, "en", &config), analyze(&text, "en", &config));
        }
    }
}
