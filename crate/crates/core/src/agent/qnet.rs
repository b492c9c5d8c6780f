use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dialogue::{ActionModel, StateVector, Vocabulary, NUM_ACTS, STATE_LEN};
use crate::numerics::{persist, LayerSpec, Network, Tensor};
use crate::perception::sidecar_path;

use super::AgentError;

pub const MODEL_TAG: &str = "qnetwork";
pub const HIDDEN: usize = 60;

/// 57 -> 60 -> relu -> 60 -> relu -> 18.
pub fn q_architecture() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Affine {
            inputs: STATE_LEN,
            outputs: HIDDEN,
        },
        LayerSpec::Rectifier,
        LayerSpec::Affine {
            inputs: HIDDEN,
            outputs: HIDDEN,
        },
        LayerSpec::Rectifier,
        LayerSpec::Affine {
            inputs: HIDDEN,
            outputs: NUM_ACTS,
        },
    ]
}

/// Action values indexed by canonical act order.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    pub(crate) net: Network,
}

pub(crate) fn state_tensor(s: &StateVector) -> Tensor {
    Tensor::new(vec![STATE_LEN], s.as_slice().to_vec()).expect("57 features")
}

/// Everything needed to run a saved agent besides its weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentMetadata {
    /// File name of the vocabulary, relative to the model file.
    pub vocabulary_file: String,
    /// SHA-256 of the vocabulary file contents.
    pub vocabulary_sha256: String,
    pub action_model: ActionModel,
    #[serde(default)]
    pub training_config: Option<serde_json::Value>,
}

pub fn vocabulary_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".vocab");
    PathBuf::from(s)
}

impl QNetwork {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            net: Network::new(vec![STATE_LEN], &q_architecture(), &mut rng).expect("fixed architecture"),
        }
    }

    pub fn from_network(net: Network) -> Result<Self, AgentError> {
        let specs: Vec<LayerSpec> = net.layers().iter().map(|l| l.spec).collect();
        if specs != q_architecture() || net.input_shape() != [STATE_LEN] {
            return Err(AgentError::Model(
                "network does not have the Q-network architecture".into(),
            ));
        }
        Ok(Self { net })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn q_values(&self, s: &StateVector) -> [f64; NUM_ACTS] {
        let out = self.net.predict(&state_tensor(s)).expect("fixed architecture");
        std::array::from_fn(|i| out.values()[i])
    }

    /// Writes the weights, the vocabulary file and a JSON sidecar.
    pub fn save(
        &self,
        path: &Path,
        vocab: &Vocabulary,
        actions: &ActionModel,
        training_config: Option<serde_json::Value>,
    ) -> Result<(), AgentError> {
        let mut w = BufWriter::new(File::create(path)?);
        persist::write_network(&mut w, MODEL_TAG, &self.net)?;
        let vocab_text = vocab.to_text();
        let vpath = vocabulary_path(path);
        std::fs::write(&vpath, &vocab_text)?;
        let meta = AgentMetadata {
            vocabulary_file: vpath
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            vocabulary_sha256: hex::encode(Sha256::digest(vocab_text.as_bytes())),
            action_model: actions.clone(),
            training_config,
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    /// Loads weights plus the matching vocabulary and action model. Fails if
    /// the vocabulary file has changed since the model was saved.
    pub fn load(path: &Path) -> Result<(Self, Vocabulary, AgentMetadata), AgentError> {
        let mut r = BufReader::new(File::open(path)?);
        let (tag, net) = persist::read_network(&mut r)?;
        if tag != MODEL_TAG {
            return Err(AgentError::Model(format!(
                "expected a {MODEL_TAG} model, found {tag:?}"
            )));
        }
        let meta: AgentMetadata = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let vpath = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&meta.vocabulary_file);
        let vocab_text = std::fs::read_to_string(vpath)?;
        if hex::encode(Sha256::digest(vocab_text.as_bytes())) != meta.vocabulary_sha256 {
            return Err(AgentError::Model("vocabulary does not match the model".into()));
        }
        let vocab = Vocabulary::from_text(&vocab_text)?;
        Ok((Self::from_network(net)?, vocab, meta))
    }
}
