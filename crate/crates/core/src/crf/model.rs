use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashSet;

use super::lattice::{self, Lattice};
use crate::errors::{Error, Result};
use crate::features::{FeatureIndex, FeatureTemplate, FeatureVector, Observation};

/// Offsets of the two weight blocks inside a flat parameter vector.
///
/// Emission weights come first (`f * L + y`), then transitions
/// (`F * L + from * L + to`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    /// Number of labels `L`.
    pub labels: usize,
    /// Number of features `F`.
    pub features: usize,
}

impl ParamLayout {
    /// Total parameter count `F * L + L * L`.
    pub fn len(&self) -> usize {
        self.features * self.labels + self.labels * self.labels
    }

    /// True when there are no parameters.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of emission weight `(feature, label)`.
    #[inline]
    pub fn emission(&self, feature: usize, label: usize) -> usize {
        feature * self.labels + label
    }

    /// Position of transition weight `(from, to)`.
    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> usize {
        self.features * self.labels + from * self.labels + to
    }

    /// Split a flat vector into its emission and transition blocks.
    pub fn split<'a>(&self, params: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        params.split_at(self.features * self.labels)
    }
}

/// Builds the lattice of an encoded sentence from raw weight blocks.
pub(crate) fn lattice_from_weights(
    num_labels: usize,
    emission: &[f64],
    transition: &[f64],
    features: &[Vec<u32>],
) -> Lattice {
    let mut scores = vec![0.0; features.len() * num_labels];
    for (t, active) in features.iter().enumerate() {
        let row = &mut scores[t * num_labels..(t + 1) * num_labels];
        for &f in active {
            let w = &emission[f as usize * num_labels..(f as usize + 1) * num_labels];
            for (s, &w) in row.iter_mut().zip(w) {
                *s += w;
            }
        }
    }
    Lattice::new(num_labels, scores, transition.to_vec())
}

/// A trained linear-chain CRF.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Arc<[String]>,
    index: Arc<FeatureIndex>,
    template: FeatureTemplate,
    emission: Vec<f64>,
    transition: Vec<f64>,
}

impl CrfModel {
    /// Assembles a model, checking label distinctness, dimensions and that
    /// every weight is finite.
    pub fn new(
        labels: Vec<String>,
        index: FeatureIndex,
        template: FeatureTemplate,
        emission: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        Self::from_shared(labels.into(), Arc::new(index), template, emission, transition)
    }

    pub(crate) fn from_shared(
        labels: Arc<[String]>,
        index: Arc<FeatureIndex>,
        template: FeatureTemplate,
        emission: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidModel("no labels".into()));
        }
        {
            let mut seen = HashSet::new();
            for label in labels.iter() {
                if label.is_empty() || label.contains(['\t', '\n']) {
                    return Err(Error::InvalidModel(format!("invalid label {label:?}")));
                }
                if !seen.insert(label.as_str()) {
                    return Err(Error::InvalidModel(format!("duplicate label {label:?}")));
                }
            }
        }
        let l = labels.len();
        if emission.len() != index.len() * l {
            return Err(Error::InvalidModel(format!(
                "expected {} emission weights, got {}",
                index.len() * l,
                emission.len()
            )));
        }
        if transition.len() != l * l {
            return Err(Error::InvalidModel(format!(
                "expected {} transition weights, got {}",
                l * l,
                transition.len()
            )));
        }
        if emission.iter().chain(&transition).any(|w| !w.is_finite()) {
            return Err(Error::InvalidModel("non-finite weight".into()));
        }
        Ok(Self { labels, index, template, emission, transition })
    }

    /// Model with every weight zero.
    pub fn zeros(labels: Vec<String>, index: FeatureIndex, template: FeatureTemplate) -> Result<Self> {
        let l = labels.len();
        let f = index.len();
        Self::new(labels, index, template, vec![0.0; f * l], vec![0.0; l * l])
    }

    /// Label symbols in index order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of a label symbol.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Feature dictionary.
    pub fn feature_index(&self) -> &FeatureIndex {
        &self.index
    }

    /// Feature template the model was trained with.
    pub fn template(&self) -> FeatureTemplate {
        self.template
    }

    /// Parameter layout.
    pub fn layout(&self) -> ParamLayout {
        ParamLayout { labels: self.labels.len(), features: self.index.len() }
    }

    /// Emission weights, `F x L` row-major.
    pub fn emission_weights(&self) -> &[f64] {
        &self.emission
    }

    /// Transition weights, `L x L` row-major by source label.
    pub fn transition_weights(&self) -> &[f64] {
        &self.transition
    }

    /// Emission weight of `(feature, label)`.
    pub fn emission_weight(&self, feature: usize, label: usize) -> f64 {
        self.emission[feature * self.labels.len() + label]
    }

    /// Transition weight from `from` to `to`.
    pub fn transition_weight(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.labels.len() + to]
    }

    /// Flat parameter vector in [`ParamLayout`] order.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.emission.clone();
        p.extend_from_slice(&self.transition);
        p
    }

    /// Same labels, index and template with new weights.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let layout = self.layout();
        if params.len() != layout.len() {
            return Err(Error::InvalidModel(format!(
                "expected {} parameters, got {}",
                layout.len(),
                params.len()
            )));
        }
        let (e, t) = layout.split(params);
        Self::from_shared(
            self.labels.clone(),
            self.index.clone(),
            self.template,
            e.to_vec(),
            t.to_vec(),
        )
    }

    /// Number of emission weights that are exactly zero.
    pub fn zero_emission_weights(&self) -> usize {
        self.emission.iter().filter(|&&w| w == 0.0).count()
    }

    /// Maps feature vectors to retained indices.
    pub fn encode(&self, features: &[FeatureVector]) -> Vec<Vec<u32>> {
        features.iter().map(|fv| self.index.encode(fv)).collect()
    }

    /// Lattice of a sentence given its feature vectors. Unknown features
    /// contribute nothing.
    pub fn score_lattice(&self, features: &[FeatureVector]) -> Lattice {
        self.score_encoded(&self.encode(features))
    }

    /// Lattice of an already encoded sentence.
    pub fn score_encoded(&self, features: &[Vec<u32>]) -> Lattice {
        lattice_from_weights(self.labels.len(), &self.emission, &self.transition, features)
    }

    /// Best label indices and path score.
    pub fn viterbi(&self, features: &[FeatureVector]) -> (Vec<usize>, f64) {
        lattice::viterbi(&self.score_lattice(features))
    }

    /// [`CrfModel::viterbi`] on an encoded sentence.
    pub fn viterbi_encoded(&self, features: &[Vec<u32>]) -> (Vec<usize>, f64) {
        lattice::viterbi(&self.score_encoded(features))
    }

    /// Decodes an observation into label symbols.
    pub fn tag(&self, observation: &Observation) -> Result<Vec<&str>> {
        let features = observation.features(&self.template)?;
        let (path, _) = self.viterbi(&features);
        Ok(path.into_iter().map(|y| self.labels[y].as_str()).collect())
    }
}
