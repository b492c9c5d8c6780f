//! Cell-level symbol recognition: seed synthesis and shift augmentation, the
//! convolutional classifier, grid splitting and move debouncing.

mod curve;
mod debounce;
mod event;
mod image;
mod model;
pub mod synth;

pub use curve::{train_at_size, SizeRun, Split, DEFAULT_SIZES, SEEDS_PER_CLASS, TEST_IMAGES};
pub use debounce::{DebounceState, DEBOUNCE_WINDOW};
pub use event::GameMoveEvent;
pub use image::{split_grid, CellImage, CellLabel, GridFrame, CELL_PIXELS, CELL_SIDE, FRAME_SIDE};
pub use model::{
    architecture, input_shape, sidecar_path, train_classifier, ClassifierConfig, PerceptionMetadata,
    PerceptionModel, TrainReport,
};
pub use synth::{augment, augmented_dataset, synthesize_seed_set};

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Writes each image as `NNNNN_<label>.pgm` plus a `manifest.csv` of
/// `filename,label` rows.
pub fn export_corpus(dir: &Path, data: &[(CellImage, CellLabel)]) -> Result<(), PerceptionError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = std::io::BufWriter::new(std::fs::File::create(dir.join("manifest.csv"))?);
    writeln!(manifest, "filename,label")?;
    for (i, (img, label)) in data.iter().enumerate() {
        let name = format!("{i:05}_{}.pgm", label.name());
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
        img.write_pgm(&mut f)?;
        writeln!(manifest, "{name},{}", label.name())?;
    }
    Ok(())
}
