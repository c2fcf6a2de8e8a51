//! Locations of the bundled MC and RP benchmark files.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::model::Preset;
use crate::text::{load_dataset, Corpus, IdfVariant, LabeledExample, LoadOptions, Separator};

/// Environment variable that overrides the dataset root directory.
pub const DATA_ROOT_ENV: &str = "QDCONV_DATA";

/// `$QDCONV_DATA` if set, otherwise the repository's `data/` directory.
pub fn default_data_root() -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

/// Split files of one dataset. RP has no dev split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPaths {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: PathBuf,
}

impl DatasetPaths {
    pub fn for_preset(preset: Preset, root: &Path) -> Self {
        let name = preset.name();
        DatasetPaths {
            train: root.join(format!("{name}_train_data.txt")),
            dev: (preset == Preset::Mc).then(|| root.join(format!("{name}_dev_data.txt"))),
            test: root.join(format!("{name}_test_data.txt")),
        }
    }
}

/// Load options matching the published files (space separated, trailing
/// "." tokens).
pub fn published_format() -> LoadOptions {
    LoadOptions {
        separator: Separator::Whitespace,
        ..LoadOptions::default()
    }
}

pub struct RawSplits {
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

pub fn load_splits(paths: &DatasetPaths, opts: &LoadOptions) -> Result<RawSplits> {
    Ok(RawSplits {
        train: load_dataset(&paths.train, opts)?,
        dev: match &paths.dev {
            Some(p) => load_dataset(p, opts)?,
            None => Vec::new(),
        },
        test: load_dataset(&paths.test, opts)?,
    })
}

pub fn load_corpus(paths: &DatasetPaths, opts: &LoadOptions, idf: IdfVariant) -> Result<Corpus> {
    let s = load_splits(paths, opts)?;
    Corpus::build(&s.train, &s.dev, &s.test, idf)
}

/// The bundled corpus of a preset with default options.
pub fn preset_corpus(preset: Preset) -> Result<Corpus> {
    load_corpus(
        &DatasetPaths::for_preset(preset, &default_data_root()),
        &published_format(),
        IdfVariant::default(),
    )
}
