use std::collections::BTreeSet;
use std::path::Path;

use super::Query;
use crate::error::{Error, Result};

/// Built-in stop-structure list used when no file is supplied.
pub const DEFAULT_STOP_STRUCTURE: &str = include_str!("../../data/stopstructure.txt");

/// Query boilerplate: multi-word phrases and single stop words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopStructure {
    /// Phrases as lowercase word sequences, longest first.
    phrases: Vec<Vec<String>>,
    words: BTreeSet<String>,
}

/// Matching key for a query word: lowercase, surrounding punctuation trimmed.
fn key(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

impl StopStructure {
    /// Parses the line format: one entry per line, `#` starts a comment,
    /// multi-word lines are phrases and single-word lines are stop words.
    pub fn parse(source: &str) -> Self {
        let mut phrases = Vec::new();
        let mut words = BTreeSet::new();
        for line in source.lines() {
            let entry = line.split('#').next().unwrap_or("");
            let parts: Vec<String> = entry.split_whitespace().map(key).filter(|w| !w.is_empty()).collect();
            match parts.len() {
                0 => {}
                1 => {
                    words.insert(parts.into_iter().next().unwrap());
                }
                _ => {
                    if !phrases.contains(&parts) {
                        phrases.push(parts);
                    }
                }
            }
        }
        // Stable: equal-length phrases keep file order.
        phrases.sort_by_key(|p: &Vec<String>| std::cmp::Reverse(p.len()));
        Self { phrases, words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_STOP_STRUCTURE)
    }

    pub fn words(&self) -> &BTreeSet<String> {
        &self.words
    }

    pub fn phrases(&self) -> impl Iterator<Item = &[String]> {
        self.phrases.iter().map(Vec::as_slice)
    }

    fn strip_once<'a>(&self, words: &[&'a str]) -> Vec<&'a str> {
        let keys: Vec<String> = words.iter().map(|w| key(w)).collect();
        let mut kept = Vec::with_capacity(words.len());
        let mut i = 0;
        'scan: while i < words.len() {
            for phrase in &self.phrases {
                let end = i + phrase.len();
                if end <= words.len() && keys[i..end] == phrase[..] {
                    i = end;
                    continue 'scan;
                }
            }
            kept.push(words[i]);
            i += 1;
        }
        kept.into_iter()
            .filter(|w| !self.words.contains(&key(w)))
            .collect()
    }

    /// Removes stop phrases (longest match first) and then stop words from
    /// `text`, repeating until nothing changes. Kept words retain their case.
    pub fn strip_text(&self, text: &str) -> String {
        let mut words: Vec<&str> = text.split_whitespace().collect();
        loop {
            let next = self.strip_once(&words);
            if next.len() == words.len() {
                return next.join(" ");
            }
            words = next;
        }
    }

    /// Returns a copy of `query` with stop structure removed from the title
    /// and description.
    pub fn strip(&self, query: &Query) -> Result<Query> {
        let title = self.strip_text(&query.title);
        let description = query
            .description
            .as_deref()
            .map(|d| self.strip_text(d))
            .filter(|d| !d.is_empty());
        if title.is_empty() && description.is_none() {
            return Err(Error::EmptyQuery {
                id: query.id.clone(),
            });
        }
        Ok(Query {
            id: query.id.clone(),
            lang: query.lang.clone(),
            title,
            description,
        })
    }
}

/// Removes stop structure from a query; see [`StopStructure::strip`].
pub fn strip_stop_structure(query: &Query, stop: &StopStructure) -> Result<Query> {
    stop.strip(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> StopStructure {
        StopStructure::parse(
            "# comment line\nfind documents\nfind information # trailing\nrelevant documents will\n\non\nthe\nand\n",
        )
    }

    #[test]
    fn parses_phrases_and_words() {
        let stop = small();
        assert_eq!(stop.words().len(), 3);
        let phrases: Vec<_> = stop.phrases().collect();
        assert_eq!(phrases.len(), 3);
        assert_eq!(phrases[0].len(), 3);
    }

    #[test]
    fn strips_phrase_then_words() {
        let stop = small();
        assert_eq!(stop.strip_text("Find documents on the soccer World Cup"), "soccer World Cup");
        assert_eq!(stop.strip_text("euthanasia"), "euthanasia");
        assert_eq!(stop.strip_text("Relevant documents will discuss the euro"), "discuss euro");
    }

    #[test]
    fn empty_result_is_an_error() {
        let stop = small();
        let q = Query::new("q1", "en", "Find documents");
        assert!(matches!(stop.strip(&q), Err(Error::EmptyQuery { id }) if id == "q1"));
    }

    #[test]
    fn description_alone_keeps_query_alive() {
        let stop = small();
        let mut q = Query::new("q1", "en", "Find documents");
        q.description = Some("Find documents on the Euro".into());
        let stripped = stop.strip(&q).unwrap();
        assert_eq!(stripped.title, "");
        assert_eq!(stripped.description.as_deref(), Some("Euro"));
        // Input untouched.
        assert_eq!(q.title, "Find documents");
    }

    #[test]
    fn stop_word_removal_can_expose_a_phrase() {
        let stop = small();
        assert_eq!(stop.strip_text("Find the documents about eels"), "about eels");
    }

    #[test]
    fn builtin_list_covers_paper_examples() {
        let stop = StopStructure::builtin();
        for w in ["on", "the", "and"] {
            assert!(stop.words().contains(w));
        }
        assert_eq!(stop.strip_text("Find documents on the soccer World Cup"), "soccer World Cup");
    }

    proptest! {
        #[test]
        fn stripping_is_idempotent(words in proptest::collection::vec(
            prop_oneof![Just("Find"), Just("documents"), Just("the"), Just("on"), Just("and"),
                        Just("information"), Just("relevant"), Just("will"), Just("euro"), Just("Cup,")],
            0..12)) {
            let stop = small();
            let text = words.join(" ");
            let once = stop.strip_text(&text);
            prop_assert_eq!(stop.strip_text(&once), once.clone());
        }
    }
}
