use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{loss, persist, Gradients, LayerSpec, Network, Tensor};

use super::image::{CellImage, CellLabel, CELL_SIDE};
use super::PerceptionError;

pub const MODEL_TAG: &str = "perception";

/// conv 5x5x8 (same) -> relu -> pool 2/2 -> conv 3x3x16 (valid) -> relu ->
/// pool 3/3 -> 3 class scores over 6*6*16 = 576 features.
pub fn architecture() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv {
            in_channels: 1,
            filters: 8,
            kernel: 5,
            stride: 1,
            padding: 2,
        },
        LayerSpec::Rectifier,
        LayerSpec::MaxPool { size: 2, stride: 2 },
        LayerSpec::Conv {
            in_channels: 8,
            filters: 16,
            kernel: 3,
            stride: 1,
            padding: 0,
        },
        LayerSpec::Rectifier,
        LayerSpec::MaxPool { size: 3, stride: 3 },
        LayerSpec::Affine {
            inputs: 576,
            outputs: 3,
        },
    ]
}

pub fn input_shape() -> Vec<usize> {
    vec![1, CELL_SIDE, CELL_SIDE]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub margin: f64,
    /// L2 penalty on the score-layer weights.
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            learning_rate: 0.02,
            batch_size: 16,
            margin: 1.0,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_accuracy: Vec<f64>,
    pub epoch_loss: Vec<f64>,
}

/// Training metadata written next to a saved model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PerceptionMetadata {
    pub seed: u64,
    pub dataset_size: usize,
    pub final_accuracy: f64,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

/// Convolutional feature extractor with a three-class margin (SVM) head.
#[derive(Clone, Debug, PartialEq)]
pub struct PerceptionModel {
    net: Network,
}

fn to_tensor(image: &CellImage) -> Tensor {
    Tensor::new(input_shape(), image.pixels().to_vec()).expect("cell image has 1600 pixels")
}

impl PerceptionModel {
    pub fn untrained(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(input_shape(), &architecture(), &mut rng).expect("fixed architecture");
        Self { net }
    }

    pub fn from_network(net: Network) -> Result<Self, PerceptionError> {
        let specs: Vec<LayerSpec> = net.layers().iter().map(|l| l.spec).collect();
        if specs != architecture() || net.input_shape() != input_shape().as_slice() {
            return Err(PerceptionError::Model(
                "network does not have the perception architecture".into(),
            ));
        }
        Ok(Self { net })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Class scores in label order (circle, cross, nothing).
    pub fn scores(&self, image: &CellImage) -> [f64; 3] {
        let out = self.net.predict(&to_tensor(image)).expect("fixed architecture");
        [out.values()[0], out.values()[1], out.values()[2]]
    }

    /// Highest-scoring label; ties resolve to circle, then cross, then nothing.
    pub fn classify(&self, image: &CellImage) -> (CellLabel, [f64; 3]) {
        let s = self.scores(image);
        let mut best = 0;
        for i in 1..3 {
            if s[i] > s[best] {
                best = i;
            }
        }
        (CellLabel::ALL[best], s)
    }

    pub fn accuracy(&self, data: &[(CellImage, CellLabel)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data.iter().filter(|(x, y)| self.classify(x).0 == *y).count();
        hits as f64 / data.len() as f64
    }

    pub fn save(&self, path: &Path, meta: &PerceptionMetadata) -> Result<(), PerceptionError> {
        let mut w = BufWriter::new(File::create(path)?);
        persist::write_network(&mut w, MODEL_TAG, &self.net)?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, Option<PerceptionMetadata>), PerceptionError> {
        let mut r = BufReader::new(File::open(path)?);
        let (tag, net) = persist::read_network(&mut r)?;
        if tag != MODEL_TAG {
            return Err(PerceptionError::Model(format!(
                "expected a {MODEL_TAG} model, found {tag:?}"
            )));
        }
        let meta = match std::fs::read_to_string(sidecar_path(path)) {
            Ok(s) => Some(serde_json::from_str(&s)?),
            Err(_) => None,
        };
        Ok((Self::from_network(net)?, meta))
    }
}

pub fn sidecar_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Minibatch SGD on the multiclass hinge loss, with an L2 penalty on the
/// score layer.
pub fn train_classifier(
    dataset: &[(CellImage, CellLabel)],
    config: &ClassifierConfig,
) -> Result<(PerceptionModel, TrainReport), PerceptionError> {
    if dataset.is_empty() {
        return Err(PerceptionError::Input("empty training set".into()));
    }
    for label in CellLabel::ALL {
        if !dataset.iter().any(|(_, y)| *y == label) {
            return Err(PerceptionError::Input(format!(
                "no {} examples in training set",
                label.name()
            )));
        }
    }
    if config.batch_size == 0 || config.learning_rate <= 0.0 {
        return Err(PerceptionError::Input(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = PerceptionModel::untrained(config.seed.wrapping_add(0x5eed));
    let head = model.net.layers().len() - 1;
    let inputs: Vec<Tensor> = dataset.iter().map(|(x, _)| to_tensor(x)).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_for(&model.net);
            for &i in batch {
                let acts = model.net.forward(&inputs[i])?;
                let scores = acts.output();
                let label = dataset[i].1.index();
                if scores.argmax() == label {
                    correct += 1;
                }
                let (l, g) = loss::multiclass_hinge(scores, label, config.margin);
                if !l.is_finite() {
                    return Err(PerceptionError::Diverged { epoch });
                }
                epoch_loss += l;
                let (pg, _) = model.net.backward(&acts, &g)?;
                grads.accumulate(&pg, 1.0)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            if let (Some(g), Some(p)) = (
                grads.layers[head].as_mut(),
                model.net.layers()[head].params.as_ref(),
            ) {
                g.weights.add_scaled(&p.weights, config.l2)?;
            }
            model.net.sgd_step(&grads, config.learning_rate)?;
        }
        let n = dataset.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(PerceptionError::Diverged { epoch });
        }
        report.epoch_loss.push(epoch_loss / n);
        report.epoch_accuracy.push(correct as f64 / n);
        log::debug!(
            "perception epoch {epoch}: loss {:.4} train acc {:.4}",
            epoch_loss / n,
            correct as f64 / n
        );
    }
    Ok((model, report))
}
