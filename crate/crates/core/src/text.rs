//! Dataset loading, vocabulary, TF-IDF vectors and fixed-length indexing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the label is separated from the sentence on each line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separator {
    /// `<label>\t<sentence>`
    #[default]
    Tab,
    /// `<label> <sentence>`: the first whitespace-delimited field is the label.
    Whitespace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub separator: Separator,
    /// Drop tokens made only of punctuation (the sentence-final "." of the
    /// published files).
    pub drop_punctuation: bool,
    pub n_classes: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            separator: Separator::Tab,
            drop_punctuation: true,
            n_classes: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub label: usize,
    pub tokens: Vec<String>,
}

/// Lowercases and splits on whitespace.
pub fn tokenize(sentence: &str, drop_punctuation: bool) -> Vec<String> {
    sentence
        .split_whitespace()
        .filter(|t| !(drop_punctuation && t.chars().all(|c| c.is_ascii_punctuation())))
        .map(str::to_lowercase)
        .collect()
}

/// Parses dataset text; `origin` is only used in error messages.
pub fn parse_dataset(text: &str, origin: &Path, opts: &LoadOptions) -> Result<Vec<LabeledExample>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut examples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (label, sentence) = match opts.separator {
            Separator::Tab => raw
                .split_once('\t')
                .ok_or_else(|| parse_err(line_no, "expected <label><TAB><sentence>".into()))?,
            Separator::Whitespace => {
                let trimmed = raw.trim_start();
                trimmed
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| parse_err(line_no, "expected <label> <sentence>".into()))?
            }
        };
        let label: usize = label.trim().parse().map_err(|_| {
            parse_err(
                line_no,
                format!("label {:?} is not a class id", label.trim()),
            )
        })?;
        if label >= opts.n_classes {
            return Err(parse_err(
                line_no,
                format!("label {label} outside 0..{}", opts.n_classes),
            ));
        }
        let tokens = tokenize(sentence, opts.drop_punctuation);
        if tokens.is_empty() {
            return Err(parse_err(line_no, "sentence has no tokens".into()));
        }
        examples.push(LabeledExample { label, tokens });
    }
    if examples.is_empty() {
        return Err(Error::Dataset(format!(
            "{} contains no examples",
            origin.display()
        )));
    }
    Ok(examples)
}

pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Vec<LabeledExample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path, opts)
}

/// Sorted token → index map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let sorted: BTreeSet<&str> = tokens.into_iter().collect();
        let tokens: Vec<String> = sorted.into_iter().map(str::to_owned).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Result<usize> {
        self.index
            .get(token)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("token {token:?} is not in the vocabulary")))
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Vocabulary over every example of every split given.
pub fn build_vocab<'a>(splits: impl IntoIterator<Item = &'a [LabeledExample]>) -> Vocabulary {
    Vocabulary::from_tokens(
        splits
            .into_iter()
            .flat_map(|s| s.iter())
            .flat_map(|e| e.tokens.iter().map(String::as_str)),
    )
}

/// IDF formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfVariant {
    /// `ln((1 + n) / (1 + df)) + 1`
    #[default]
    SmoothLog,
    /// `n / max(df, 1)`
    RawRatio,
}

/// Document frequencies over a (training) split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub doc_freq: BTreeMap<String, usize>,
    pub idf_variant: IdfVariant,
}

impl CorpusStats {
    pub fn from_examples(examples: &[LabeledExample], idf_variant: IdfVariant) -> Self {
        let mut doc_freq = BTreeMap::new();
        for e in examples {
            let unique: BTreeSet<&String> = e.tokens.iter().collect();
            for t in unique {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
        CorpusStats {
            n_docs: examples.len(),
            doc_freq,
            idf_variant,
        }
    }

    pub fn idf(&self, token: &str) -> f64 {
        let df = self.doc_freq.get(token).copied().unwrap_or(0) as f64;
        let n = self.n_docs as f64;
        match self.idf_variant {
            IdfVariant::SmoothLog => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
            IdfVariant::RawRatio => n / df.max(1.0),
        }
    }
}

/// Raw term counts times IDF, L2-normalized.
pub fn tfidf_vector(
    example: &LabeledExample,
    vocab: &Vocabulary,
    stats: &CorpusStats,
) -> Result<Vec<f64>> {
    let mut v = vec![0.0; vocab.len()];
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &example.tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    for (t, tf) in counts {
        v[vocab.index_of(t)?] = tf as f64 * stats.idf(t);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::DegenerateVector { norm });
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Vocabulary indices padded to length `m`, with a mask marking real tokens.
pub fn pad_and_index(
    example: &LabeledExample,
    vocab: &Vocabulary,
    m: usize,
) -> Result<(Vec<usize>, Vec<bool>)> {
    if example.tokens.is_empty() {
        return Err(Error::Length { len: 0, max: m });
    }
    if example.tokens.len() > m {
        return Err(Error::Length {
            len: example.tokens.len(),
            max: m,
        });
    }
    let mut indices = vec![0; m];
    let mut mask = vec![false; m];
    for (i, t) in example.tokens.iter().enumerate() {
        indices[i] = vocab.index_of(t)?;
        mask[i] = true;
    }
    Ok((indices, mask))
}

/// A model-ready example.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedExample {
    pub label: usize,
    pub indices: Vec<usize>,
    pub mask: Vec<bool>,
    pub tfidf: Vec<f64>,
}

impl EncodedExample {
    pub fn n_tokens(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&i, _)| i)
    }
}

/// Train/dev/test splits encoded against one vocabulary.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub stats: CorpusStats,
    /// Maximum sentence length over all splits.
    pub max_len: usize,
    pub train: Vec<EncodedExample>,
    pub dev: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
}

impl Corpus {
    /// Vocabulary spans every split; document frequencies come from the
    /// training split only.
    pub fn build(
        train: &[LabeledExample],
        dev: &[LabeledExample],
        test: &[LabeledExample],
        idf_variant: IdfVariant,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Dataset("training split is empty".into()));
        }
        let vocab = build_vocab([train, dev, test]);
        let stats = CorpusStats::from_examples(train, idf_variant);
        let max_len = [train, dev, test]
            .iter()
            .flat_map(|s| s.iter())
            .map(|e| e.tokens.len())
            .max()
            .unwrap_or(0);
        let encode = |split: &[LabeledExample]| -> Result<Vec<EncodedExample>> {
            split
                .iter()
                .map(|e| {
                    let (indices, mask) = pad_and_index(e, &vocab, max_len)?;
                    Ok(EncodedExample {
                        label: e.label,
                        indices,
                        mask,
                        tfidf: tfidf_vector(e, &vocab, &stats)?,
                    })
                })
                .collect()
        };
        Ok(Corpus {
            train: encode(train)?,
            dev: encode(dev)?,
            test: encode(test)?,
            vocab,
            stats,
            max_len,
        })
    }
}
