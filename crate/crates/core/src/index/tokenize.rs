use std::collections::HashMap;

use super::porter;

/// Lowercased alphanumeric runs of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Lowercase, split on non-alphanumerics and Porter-stem. Stopwords are kept.
pub fn tokenize_stem(text: &str) -> Vec<String> {
    tokenize(text).map(|t| porter::stem(&t)).collect()
}

/// Tokenizer with a memo of stems, for bulk indexing.
#[derive(Debug, Default)]
pub struct Analyzer {
    stems: HashMap<String, String>,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn analyze(&mut self, text: &str, out: &mut Vec<String>) {
        for token in tokenize(text) {
            if let Some(s) = self.stems.get(&token) {
                out.push(s.clone());
            } else {
                let s = porter::stem(&token);
                self.stems.insert(token, s.clone());
                out.push(s);
            }
        }
    }

    pub fn terms(&mut self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.analyze(text, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_and_lowercases() {
        assert_eq!(tokenize_stem("Running runs"), vec!["run", "run"]);
        assert!(tokenize_stem("").is_empty());
        assert_eq!(tokenize_stem("the THE The"), vec!["the", "the", "the"]);
    }

    #[test]
    fn splits_urls_into_words() {
        assert_eq!(
            tokenize_stem("http://News.example.org/sports-2010"),
            vec!["http", "new", "exampl", "org", "sport", "2010"]
        );
    }

    #[test]
    fn analyzer_matches_free_function() {
        let mut a = Analyzer::new();
        let text = "Connected connections CONNECTING the connector";
        assert_eq!(a.terms(text), tokenize_stem(text));
        assert_eq!(a.terms(text), tokenize_stem(text));
    }
}
