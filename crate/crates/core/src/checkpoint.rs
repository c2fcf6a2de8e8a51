//! Model checkpoint files.
//!
//! A checkpoint is a UTF-8 JSON object:
//!
//! ```text
//! {
//!   "format": "qdconv-checkpoint",
//!   "version": 1,
//!   "seed": <u64>,
//!   "config": { ...ModelConfig fields... },
//!   "params": [<f64>, ...]
//! }
//! ```
//!
//! `params` is the flat parameter vector in [`Layout`](crate::model::Layout)
//! order. Floats are written with enough digits to round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, ModelParameters};

pub const FORMAT: &str = "qdconv-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: ModelConfig,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, seed: u64) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            seed,
            config: model.config.clone(),
            params: model.params.values.clone(),
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {:?} version {}",
                self.format, self.version
            )));
        }
        Model::new(
            self.config,
            ModelParameters {
                values: self.params,
            },
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{Preset, Variant};

    #[test]
    fn round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("qdconv-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for v in [Variant::MsffQdconv, Variant::MsffConv] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let model =
                Model::init(ModelConfig::preset(Preset::Mc).with_variant(v), &mut rng).unwrap();
            let path = dir.join(format!("{v}.json"));
            Checkpoint::from_model(&model, 3).write(&path).unwrap();
            let back = Checkpoint::read(&path).unwrap().into_model().unwrap();
            assert_eq!(back, model);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_foreign_format_and_bad_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = Model::init(ModelConfig::preset(Preset::Mc), &mut rng).unwrap();
        let mut ck = Checkpoint::from_model(&model, 1);
        ck.format = "other".into();
        assert!(ck.clone().into_model().is_err());
        ck.format = FORMAT.into();
        ck.params.pop();
        assert!(ck.into_model().is_err());
    }
}
