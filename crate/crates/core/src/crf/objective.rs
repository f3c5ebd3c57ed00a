//! Negative log-likelihood of labeled sentences and its gradient.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::lattice::{backward, forward, marginals};
use super::model::{lattice_from_weights, CrfModel, ParamLayout};
use crate::errors::{Error, Result};
use crate::features::{index_observations, FeatureIndex, FeatureTemplate, FeatureVector, Observation};

/// One training sentence: active feature indices per position and gold
/// label indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Retained feature indices active at each position.
    pub features: Vec<Vec<u32>>,
    /// Gold label index at each position.
    pub labels: Vec<u32>,
}

/// Negative log-likelihood of one sentence, adding `E[counts] - gold counts`
/// into `grad`.
pub fn accumulate_instance(layout: ParamLayout, params: &[f64], instance: &Instance, grad: &mut [f64]) -> f64 {
    let l = layout.labels;
    let (emission, transition) = layout.split(params);
    let lattice = lattice_from_weights(l, emission, transition, &instance.features);
    let (alphas, log_z) = forward(&lattice);
    let (betas, _) = backward(&lattice);
    let m = marginals(&lattice, &alphas, &betas, log_z);
    let gold: Vec<usize> = instance.labels.iter().map(|&y| y as usize).collect();
    let gold_score = lattice.path_score(&gold);

    for (t, active) in instance.features.iter().enumerate() {
        let p = m.unary(t);
        for &f in active {
            let row = &mut grad[f as usize * l..(f as usize + 1) * l];
            for (g, &p) in row.iter_mut().zip(p) {
                *g += p;
            }
            row[gold[t]] -= 1.0;
        }
    }
    let offset = layout.features * l;
    for t in 1..gold.len() {
        let block = &mut grad[offset..offset + l * l];
        for (g, &p) in block.iter_mut().zip(m.pairwise(t)) {
            *g += p;
        }
        block[gold[t - 1] * l + gold[t]] -= 1.0;
    }
    log_z - gold_score
}

/// Adds `(l2 / 2) * |w|^2` to the objective and `l2 * w` to the gradient.
pub fn add_l2(params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    let mut penalty = 0.0;
    for (g, &w) in grad.iter_mut().zip(params) {
        *g += l2 * w;
        penalty += w * w;
    }
    0.5 * l2 * penalty
}

/// Encoded training sentences plus the label and feature dictionaries.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    labels: Arc<[String]>,
    index: Arc<FeatureIndex>,
    template: FeatureTemplate,
    instances: Vec<Instance>,
}

impl TrainingSet {
    /// Builds the feature index over `observations` and encodes them.
    ///
    /// `labels` fixes the label order; every gold label must appear in it.
    pub fn build(
        observations: &[Observation],
        gold: &[Vec<String>],
        labels: Vec<String>,
        template: FeatureTemplate,
        min_count: usize,
    ) -> Result<Self> {
        if observations.len() != gold.len() {
            return Err(Error::Alignment {
                sentence: observations.len().min(gold.len()),
                detail: format!("{} observations but {} label sequences", observations.len(), gold.len()),
            });
        }
        let index = index_observations(observations, &template, min_count)?;
        Self::with_index(observations, gold, labels, template, index)
    }

    /// Encodes observations against an existing index.
    pub fn with_index(
        observations: &[Observation],
        gold: &[Vec<String>],
        labels: Vec<String>,
        template: FeatureTemplate,
        index: FeatureIndex,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidModel("no labels".into()));
        }
        let mut instances = Vec::with_capacity(observations.len());
        for (i, (obs, gold)) in observations.iter().zip(gold).enumerate() {
            if obs.len() != gold.len() {
                return Err(Error::Alignment {
                    sentence: i,
                    detail: format!("{} tokens but {} labels", obs.len(), gold.len()),
                });
            }
            let features = obs.features(&template)?.iter().map(|fv| index.encode(fv)).collect();
            instances.push(Instance { features, labels: encode_labels(&labels, gold)? });
        }
        Ok(Self { labels: labels.into(), index: Arc::new(index), template, instances })
    }

    /// Label symbols.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Feature dictionary.
    pub fn feature_index(&self) -> &FeatureIndex {
        &self.index
    }

    /// Feature template.
    pub fn template(&self) -> FeatureTemplate {
        self.template
    }

    /// Encoded sentences.
    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    /// Parameter layout.
    pub fn layout(&self) -> ParamLayout {
        ParamLayout { labels: self.labels.len(), features: self.index.len() }
    }

    /// Model carrying `params`.
    pub fn model(&self, params: &[f64]) -> Result<CrfModel> {
        let layout = self.layout();
        if params.len() != layout.len() {
            return Err(Error::InvalidModel(format!(
                "expected {} parameters, got {}",
                layout.len(),
                params.len()
            )));
        }
        let (e, t) = layout.split(params);
        CrfModel::from_shared(self.labels.clone(), self.index.clone(), self.template, e.to_vec(), t.to_vec())
    }

    /// Summed NLL of the sentences in `range`, accumulating into `grad`.
    pub fn accumulate_range(&self, params: &[f64], range: Range<usize>, grad: &mut [f64]) -> f64 {
        let layout = self.layout();
        self.instances[range]
            .iter()
            .map(|inst| accumulate_instance(layout, params, inst, grad))
            .sum()
    }

    /// Smooth part of the objective, `NLL + (l2 / 2) |w|^2`, in sentence
    /// order. `grad` is overwritten.
    pub fn smooth_objective(&self, params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let nll = self.accumulate_range(params, 0..self.instances.len(), grad);
        nll + add_l2(params, l2, grad)
    }
}

fn encode_labels(labels: &[String], gold: &[String]) -> Result<Vec<u32>> {
    gold.iter()
        .map(|g| {
            labels
                .iter()
                .position(|l| l == g)
                .map(|y| y as u32)
                .ok_or_else(|| Error::UnknownLabel(g.to_owned()))
        })
        .collect()
}

/// Smooth objective `NLL + (l2 / 2) |w|^2` of `model` on a batch of
/// `(features, gold labels)` pairs, with its gradient in
/// [`ParamLayout`] order.
///
/// The full training objective adds `l1 * |w|_1`, which the optimizer
/// handles through orthant projection.
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[(Vec<FeatureVector>, Vec<String>)],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let layout = model.layout();
    let params = model.params();
    let mut grad = vec![0.0; layout.len()];
    let mut scratch = vec![0.0; layout.len()];
    let mut nll = 0.0;
    for (i, (features, gold)) in batch.iter().enumerate() {
        if features.len() != gold.len() {
            return Err(Error::Alignment {
                sentence: i,
                detail: format!("{} positions but {} labels", features.len(), gold.len()),
            });
        }
        let instance = Instance { features: model.encode(features), labels: encode_labels(model.labels(), gold)? };
        scratch.iter_mut().for_each(|g| *g = 0.0);
        nll += accumulate_instance(layout, &params, &instance, &mut scratch);
        for (g, s) in grad.iter_mut().zip(&scratch) {
            *g += s;
        }
    }
    Ok((nll + add_l2(&params, l2, &mut grad), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TemplateId;
    use alloc::string::ToString;

    fn tiny_model(weights: Vec<f64>, transitions: Vec<f64>) -> CrfModel {
        let index = FeatureIndex::from_keys(vec!["f".into()]).unwrap();
        CrfModel::new(
            vec!["0".into(), "1".into()],
            index,
            FeatureTemplate::new(TemplateId::Crf1),
            weights,
            transitions,
        )
        .unwrap()
    }

    fn batch(labels: &[&str]) -> (Vec<FeatureVector>, Vec<String>) {
        (
            labels.iter().map(|_| FeatureVector::from_keys(vec!["f".into()])).collect(),
            labels.iter().map(|l| l.to_string()).collect(),
        )
    }

    #[test]
    fn uniform_model_values() {
        let m = tiny_model(vec![0.0; 2], vec![0.0; 4]);
        let (obj, grad) = nll_and_gradient(&m, &[batch(&["1"])], 0.0).unwrap();
        assert!((obj - libm::log(2.0)).abs() < 1e-15);
        assert!((grad[m.layout().emission(0, 1)] - (0.5 - 1.0)).abs() < 1e-15);
        assert!((grad[m.layout().emission(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicated_sentence_doubles_exactly() {
        let m = tiny_model(vec![0.3, -0.7], vec![0.1, 0.2, -0.4, 0.9]);
        let one = batch(&["1", "0", "0"]);
        let (o1, g1) = nll_and_gradient(&m, &[one.clone()], 0.0).unwrap();
        let (o2, g2) = nll_and_gradient(&m, &[one.clone(), one], 0.0).unwrap();
        assert_eq!(o2, 2.0 * o1);
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(*b, 2.0 * a);
        }
    }

    #[test]
    fn unknown_gold_label() {
        let m = tiny_model(vec![0.0; 2], vec![0.0; 4]);
        assert_eq!(
            nll_and_gradient(&m, &[batch(&["2"])], 0.0),
            Err(Error::UnknownLabel("2".into()))
        );
    }

    #[test]
    fn l2_term() {
        let m = tiny_model(vec![1.0, -2.0], vec![0.0; 4]);
        let (o0, g0) = nll_and_gradient(&m, &[batch(&["0"])], 0.0).unwrap();
        let (o1, g1) = nll_and_gradient(&m, &[batch(&["0"])], 0.5).unwrap();
        assert!((o1 - o0 - 0.25 * 5.0).abs() < 1e-12);
        assert!((g1[1] - g0[1] - 0.5 * -2.0).abs() < 1e-12);
    }
}
