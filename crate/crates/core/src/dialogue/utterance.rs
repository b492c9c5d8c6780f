use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
}

/// A tokenized turn. System tokens always carry confidence 1.0; user tokens
/// carry recognition confidences in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    pub words: Vec<String>,
    pub confidences: Vec<f64>,
}

/// Lowercases and splits on whitespace, trimming punctuation but keeping
/// inner apostrophes (`let's`).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                .trim_matches('\'')
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn clamp_confidence(c: f64) -> f64 {
    if c.is_nan() {
        0.0
    } else {
        c.clamp(0.0, 1.0)
    }
}

impl Utterance {
    pub fn system(text: &str) -> Self {
        let words = tokenize(text);
        let confidences = vec![1.0; words.len()];
        Self {
            speaker: Speaker::System,
            text: text.to_string(),
            words,
            confidences,
        }
    }

    /// User turn with one confidence for every token (clamped into [0, 1]).
    pub fn user(text: &str, confidence: f64) -> Self {
        let words = tokenize(text);
        let confidences = vec![clamp_confidence(confidence); words.len()];
        Self {
            speaker: Speaker::User,
            text: text.to_string(),
            words,
            confidences,
        }
    }

    /// User turn with per-token confidences produced by `conf`.
    pub fn user_with(text: &str, mut conf: impl FnMut() -> f64) -> Self {
        let words = tokenize(text);
        let confidences = words.iter().map(|_| clamp_confidence(conf())).collect();
        Self {
            speaker: Speaker::User,
            text: text.to_string(),
            words,
            confidences,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
