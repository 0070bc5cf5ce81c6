use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, DecodingOptions, GenerationResult, PlannerBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
}

impl ScriptEntry {
    pub fn text(text: impl Into<String>) -> Self {
        ScriptEntry { text: text.into(), token_probs: None }
    }

    pub fn with_probs(text: impl Into<String>, probs: Vec<f64>) -> Self {
        ScriptEntry { text: text.into(), token_probs: Some(probs) }
    }
}

/// Reply used whenever the prompt contains `when`; rules are checked before
/// the sequential script and do not advance its cursor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub when: String,
    #[serde(flatten)]
    pub reply: ScriptEntry,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Texts(Vec<String>),
    Entries(Vec<ScriptEntry>),
    Full {
        replies: Vec<ScriptEntry>,
        #[serde(default)]
        rules: Vec<ScriptRule>,
    },
}

/// Deterministic replay: the n-th call returns the n-th entry, and the last
/// entry once the script runs out.
#[derive(Debug)]
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
    rules: Vec<ScriptRule>,
    state: Mutex<(usize, Vec<String>)>,
}

impl ScriptedBackend {
    /// Panics on an empty script.
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        assert!(!entries.is_empty(), "script must have at least one entry");
        ScriptedBackend { entries, rules: Vec::new(), state: Mutex::new((0, Vec::new())) }
    }

    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(texts.into_iter().map(ScriptEntry::text).collect())
    }

    pub fn with_rules(mut self, rules: Vec<ScriptRule>) -> Self {
        self.rules = rules;
        self
    }

    /// Accepts a JSON array of strings, an array of entries, or
    /// `{"replies": [...], "rules": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: ScriptFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let (entries, rules) = match file {
            ScriptFile::Texts(t) => (t.into_iter().map(ScriptEntry::text).collect(), Vec::new()),
            ScriptFile::Entries(e) => (e, Vec::new()),
            ScriptFile::Full { replies, rules } => (replies, rules),
        };
        if entries.is_empty() {
            return Err("script has no replies".into());
        }
        Ok(Self::new(entries).with_rules(rules))
    }

    pub fn calls(&self) -> usize {
        self.state.lock().unwrap().1.len()
    }

    /// Every prompt received so far, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().unwrap().1.clone()
    }
}

impl PlannerBackend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn generate(&self, prompt: &str, _options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        let mut state = self.state.lock().unwrap();
        state.1.push(prompt.to_string());
        let entry = match self.rules.iter().find(|r| prompt.contains(&r.when)) {
            Some(rule) => &rule.reply,
            None => {
                let e = &self.entries[state.0.min(self.entries.len() - 1)];
                state.0 += 1;
                e
            }
        };
        Ok(GenerationResult {
            text: entry.text.clone(),
            token_probs: entry.token_probs.clone(),
            backend_id: self.id().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{confidence_score, Confidence};

    fn gen(b: &ScriptedBackend, prompt: &str) -> String {
        b.generate(prompt, &DecodingOptions::default()).unwrap().text
    }

    #[test]
    fn replays_in_order_then_repeats_last() {
        let b = ScriptedBackend::from_texts(["first", "second"]);
        assert_eq!(gen(&b, "p"), "first");
        assert_eq!(gen(&b, "p"), "second");
        assert_eq!(gen(&b, "p"), "second");
        assert_eq!(b.calls(), 3);
    }

    #[test]
    fn single_entry_repeats() {
        let b = ScriptedBackend::from_texts(["only"]);
        for _ in 0..3 {
            assert_eq!(gen(&b, "p"), "only");
        }
    }

    #[test]
    fn synthetic_probs_feed_confidence() {
        let b = ScriptedBackend::new(vec![ScriptEntry::with_probs("x", vec![0.5, 0.5])]);
        let r = b.generate("p", &DecodingOptions::default()).unwrap();
        assert_eq!(confidence_score(&r), Confidence::Score(0.5));
    }

    #[test]
    fn rules_take_priority_without_advancing() {
        let b = ScriptedBackend::from_json(
            r#"{"replies": [{"text": "a"}, {"text": "b"}], "rules": [{"when": "hint", "text": "ruled"}]}"#,
        )
        .unwrap();
        assert_eq!(gen(&b, "with hint"), "ruled");
        assert_eq!(gen(&b, "plain"), "a");
        assert_eq!(b.prompts(), vec!["with hint", "plain"]);
        assert!(ScriptedBackend::from_json(r#"["x", "y"]"#).is_ok());
        assert!(ScriptedBackend::from_json("[]").is_err());
    }
}
