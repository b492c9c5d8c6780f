use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{train_classifier, ClassifierConfig, PerceptionModel};
use super::synth::{augmented_dataset, synthesize_seed_set};
use super::{CellImage, CellLabel, PerceptionError};

/// Seed drawings per class.
pub const SEEDS_PER_CLASS: usize = 36;
/// Held-out images per run.
pub const TEST_IMAGES: usize = 1000;
/// Training-set sizes of the default learning curve.
pub const DEFAULT_SIZES: [usize; 5] = [100, 500, 1000, 5000, 10000];

const TRAIN_STREAM: u64 = 0x7261_696e;
const TEST_STREAM: u64 = 0x7465_7374;

/// Seed set, augmented training set and held-out set for one seed.
pub struct Split {
    pub seeds: Vec<(CellImage, CellLabel)>,
    pub train: Vec<(CellImage, CellLabel)>,
    pub test: Vec<(CellImage, CellLabel)>,
}

impl Split {
    /// Training and test images are shifted copies of the same seed
    /// drawings, from independent streams.
    pub fn generate(size: usize, test_size: usize, seed: u64) -> Self {
        let seeds = synthesize_seed_set(seed, SEEDS_PER_CLASS);
        let train = augmented_dataset(&seeds, size, &mut ChaCha8Rng::seed_from_u64(seed ^ TRAIN_STREAM));
        let test = augmented_dataset(
            &seeds,
            test_size,
            &mut ChaCha8Rng::seed_from_u64(seed ^ TEST_STREAM),
        );
        Self { seeds, train, test }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRun {
    pub size: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub seconds: f64,
}

/// Trains on `size` augmented images and scores on [`TEST_IMAGES`] held-out
/// ones.
pub fn train_at_size(
    size: usize,
    config: &ClassifierConfig,
) -> Result<(PerceptionModel, SizeRun), PerceptionError> {
    let split = Split::generate(size, TEST_IMAGES, config.seed);
    let start = std::time::Instant::now();
    let (model, report) = train_classifier(&split.train, config)?;
    let seconds = start.elapsed().as_secs_f64();
    let run = SizeRun {
        size,
        seed: config.seed,
        train_accuracy: report.epoch_accuracy.last().copied().unwrap_or(0.0),
        test_accuracy: model.accuracy(&split.test),
        seconds,
    };
    Ok((model, run))
}
