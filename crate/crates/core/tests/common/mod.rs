#![allow(dead_code)]

use std::sync::Arc;

use noughts::agent::QNetwork;
use noughts::dialogue::{build_seed_corpus, fit_action_model, Vocabulary};
use noughts::perception::{CellImage, CellLabel, CELL_PIXELS};
use noughts::service::{CellClassifier, Models};

/// Labels by mean ink: none, faint (circle) or dark (cross).
pub struct InkClassifier;

impl CellClassifier for InkClassifier {
    fn classify(&self, image: &CellImage) -> CellLabel {
        match image.mean() {
            m if m < 0.1 => CellLabel::Nothing,
            m if m < 0.5 => CellLabel::Circle,
            _ => CellLabel::Cross,
        }
    }
}

pub fn flat_raster(level: u8) -> Vec<u8> {
    vec![level; CELL_PIXELS]
}

/// Prefers moves (lowest cell first), asking for the user's move and
/// closing over small talk.
pub fn eager_agent() -> QNetwork {
    let mut q = QNetwork::new(5);
    let last = q.network().layers().len() - 1;
    let p = q.network_mut().layers_mut()[last].params.as_mut().unwrap();
    p.weights.fill(0.0);
    for (i, b) in p.bias.values_mut().iter_mut().enumerate() {
        *b = match i {
            0..=8 => 10.0 - i as f64 * 0.1,
            15 => 5.0,
            16 => 4.0,
            9..=11 => 3.0,
            14 => 2.0,
            13 => 1.5,
            12 => 1.0,
            _ => 0.0,
        };
    }
    q
}

pub fn models_with(classifier: Arc<dyn CellClassifier>, agent: QNetwork) -> Arc<Models> {
    let corpus = build_seed_corpus();
    let vocab = Vocabulary::from_corpus(&corpus);
    let actions = fit_action_model(&corpus, &vocab).unwrap();
    Arc::new(Models::new(classifier, agent, vocab, actions))
}

pub fn scripted_models() -> Arc<Models> {
    models_with(Arc::new(InkClassifier), eager_agent())
}
