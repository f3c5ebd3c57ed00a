//! Exact inference on a linear-chain lattice, all in log space.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::logsumexp;

/// Per-position emission scores and a shared transition matrix.
///
/// Emission scores are stored row-major by position (`t * L + y`),
/// transitions row-major by source label (`from * L + to`).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    num_labels: usize,
    emission: Vec<f64>,
    transition: Vec<f64>,
}

impl Lattice {
    /// Builds a lattice. Panics when the dimensions are inconsistent.
    pub fn new(num_labels: usize, emission: Vec<f64>, transition: Vec<f64>) -> Self {
        assert!(num_labels > 0, "lattice needs at least one label");
        assert_eq!(emission.len() % num_labels, 0, "emission length is not a multiple of L");
        assert_eq!(transition.len(), num_labels * num_labels, "transition must be L x L");
        Self { num_labels, emission, transition }
    }

    /// Number of labels `L`.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Number of positions.
    pub fn len(&self) -> usize {
        self.emission.len() / self.num_labels
    }

    /// True for a lattice without positions.
    pub fn is_empty(&self) -> bool {
        self.emission.is_empty()
    }

    /// Emission scores at position `t`.
    pub fn emission(&self, t: usize) -> &[f64] {
        &self.emission[t * self.num_labels..(t + 1) * self.num_labels]
    }

    /// Mutable emission scores at position `t`.
    pub fn emission_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.emission[t * self.num_labels..(t + 1) * self.num_labels]
    }

    /// Transition score from `from` to `to`.
    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.num_labels + to]
    }

    /// Score of a complete label path, summed left to right.
    pub fn path_score(&self, labels: &[usize]) -> f64 {
        let mut score = self.emission(0)[labels[0]];
        for t in 1..labels.len() {
            score += self.transition(labels[t - 1], labels[t]);
            score += self.emission(t)[labels[t]];
        }
        score
    }
}

/// Forward variables: `alphas[t * L + y]` is the log-sum of all prefixes
/// ending in `y` at `t`. Returns `(alphas, log_z)`.
pub fn forward(lattice: &Lattice) -> (Vec<f64>, f64) {
    let l = lattice.num_labels;
    let n = lattice.len();
    let mut alphas = vec![0.0; n * l];
    if n == 0 {
        return (alphas, 0.0);
    }
    alphas[..l].copy_from_slice(lattice.emission(0));
    let mut scratch = vec![0.0; l];
    for t in 1..n {
        let (prev, cur) = alphas.split_at_mut(t * l);
        let prev = &prev[(t - 1) * l..];
        let emission = lattice.emission(t);
        for y in 0..l {
            for (a, s) in scratch.iter_mut().enumerate() {
                *s = prev[a] + lattice.transition(a, y);
            }
            cur[y] = emission[y] + logsumexp(&scratch);
        }
    }
    let log_z = logsumexp(&alphas[(n - 1) * l..]);
    (alphas, log_z)
}

/// Backward variables: `betas[t * L + y]` is the log-sum of all suffixes
/// after `t` given label `y` at `t` (excluding the emission at `t`).
/// Returns `(betas, log_z)`.
pub fn backward(lattice: &Lattice) -> (Vec<f64>, f64) {
    let l = lattice.num_labels;
    let n = lattice.len();
    let mut betas = vec![0.0; n * l];
    if n == 0 {
        return (betas, 0.0);
    }
    let mut scratch = vec![0.0; l];
    for t in (0..n - 1).rev() {
        let (cur, next) = betas.split_at_mut((t + 1) * l);
        let cur = &mut cur[t * l..];
        let next = &next[..l];
        let emission = lattice.emission(t + 1);
        for a in 0..l {
            for (b, s) in scratch.iter_mut().enumerate() {
                *s = lattice.transition(a, b) + emission[b] + next[b];
            }
            cur[a] = logsumexp(&scratch);
        }
    }
    for (y, s) in scratch.iter_mut().enumerate() {
        *s = lattice.emission(0)[y] + betas[y];
    }
    (betas, logsumexp(&scratch))
}

/// Posterior marginals of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    num_labels: usize,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl Marginals {
    /// `P(y_t = y)`.
    pub fn unary(&self, t: usize) -> &[f64] {
        &self.unary[t * self.num_labels..(t + 1) * self.num_labels]
    }

    /// `P(y_{t-1} = a, y_t = b)` laid out as `a * L + b`, for `t >= 1`.
    pub fn pairwise(&self, t: usize) -> &[f64] {
        let ll = self.num_labels * self.num_labels;
        &self.pairwise[(t - 1) * ll..t * ll]
    }

    /// Number of positions.
    pub fn len(&self) -> usize {
        self.unary.len() / self.num_labels
    }

    /// True when there are no positions.
    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }
}

/// Unary and pairwise marginals from forward/backward results.
pub fn marginals(lattice: &Lattice, alphas: &[f64], betas: &[f64], log_z: f64) -> Marginals {
    let l = lattice.num_labels;
    let n = lattice.len();
    let unary = alphas
        .iter()
        .zip(betas)
        .map(|(a, b)| libm::exp(a + b - log_z))
        .collect();
    let mut pairwise = vec![0.0; n.saturating_sub(1) * l * l];
    for t in 1..n {
        let emission = lattice.emission(t);
        let block = &mut pairwise[(t - 1) * l * l..t * l * l];
        for a in 0..l {
            let alpha = alphas[(t - 1) * l + a];
            for b in 0..l {
                block[a * l + b] = libm::exp(
                    alpha + lattice.transition(a, b) + emission[b] + betas[t * l + b] - log_z,
                );
            }
        }
    }
    Marginals { num_labels: l, unary, pairwise }
}

/// Highest-scoring label path and its score.
///
/// Ties go to the lower label index, both for the final label and at every
/// backpointer.
pub fn viterbi(lattice: &Lattice) -> (Vec<usize>, f64) {
    let l = lattice.num_labels;
    let n = lattice.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta = lattice.emission(0).to_vec();
    let mut next = vec![0.0; l];
    let mut back = vec![0usize; n * l];
    for t in 1..n {
        let emission = lattice.emission(t);
        for y in 0..l {
            let mut best = 0;
            let mut best_score = delta[0] + lattice.transition(0, y);
            for a in 1..l {
                let s = delta[a] + lattice.transition(a, y);
                if s > best_score {
                    best = a;
                    best_score = s;
                }
            }
            back[t * l + y] = best;
            next[y] = emission[y] + best_score;
        }
        core::mem::swap(&mut delta, &mut next);
    }
    let mut last = 0;
    for y in 1..l {
        if delta[y] > delta[last] {
            last = y;
        }
    }
    let score = delta[last];
    let mut path = vec![0; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t * l + path[t]];
    }
    (path, score)
}
