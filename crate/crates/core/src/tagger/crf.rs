//! Linear-chain inference over a table of emission and transition scores.

use crate::error::{Error, Result};

/// Scores for one sequence: `emissions[i][y]` for label `y` at position
/// `i`, `transitions[a][b]` from label `a` to label `b`, plus scores for
/// starting and stopping in each label.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub emissions: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<f64>>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

impl Potentials {
    pub fn zeros(len: usize, labels: usize) -> Self {
        Potentials {
            emissions: vec![vec![0.0; labels]; len],
            transitions: vec![vec![0.0; labels]; labels],
            start: vec![0.0; labels],
            stop: vec![0.0; labels],
        }
    }

    pub fn len(&self) -> usize {
        self.emissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emissions.is_empty()
    }

    pub fn labels(&self) -> usize {
        self.start.len()
    }

    /// Total score of one label sequence.
    pub fn score(&self, labels: &[usize]) -> f64 {
        let Some((&first, _)) = labels.split_first() else {
            return 0.0;
        };
        let mut total = self.start[first] + self.emissions[0][first];
        for i in 1..labels.len() {
            total += self.transitions[labels[i - 1]][labels[i]] + self.emissions[i][labels[i]];
        }
        total + self.stop[labels[labels.len() - 1]]
    }
}

/// Highest-scoring label sequence.
///
/// Among equal scores the lower label index wins, deciding from the last
/// position backwards.
pub fn viterbi(p: &Potentials) -> Result<Vec<usize>> {
    let n = p.len();
    let l = p.labels();
    if n == 0 {
        return Err(Error::Empty("sequence"));
    }
    if l == 0 {
        return Err(Error::Empty("label set"));
    }
    let mut best: Vec<f64> = (0..l).map(|y| p.start[y] + p.emissions[0][y]).collect();
    let mut back = vec![vec![0usize; l]; n];
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; l];
        for y in 0..l {
            let mut arg = 0;
            let mut top = f64::NEG_INFINITY;
            for (prev, score) in best.iter().enumerate() {
                let s = score + p.transitions[prev][y];
                if s > top {
                    top = s;
                    arg = prev;
                }
            }
            next[y] = top + p.emissions[i][y];
            back[i][y] = arg;
        }
        best = next;
    }
    let mut last = 0;
    let mut top = f64::NEG_INFINITY;
    for (y, score) in best.iter().enumerate() {
        let s = score + p.stop[y];
        if s > top {
            top = s;
            last = y;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[i][path[i]];
    }
    Ok(path)
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn forward(p: &Potentials) -> Vec<Vec<f64>> {
    let n = p.len();
    let l = p.labels();
    let mut alpha = vec![vec![0.0; l]; n];
    for y in 0..l {
        alpha[0][y] = p.start[y] + p.emissions[0][y];
    }
    for i in 1..n {
        for y in 0..l {
            alpha[i][y] =
                log_sum_exp((0..l).map(|prev| alpha[i - 1][prev] + p.transitions[prev][y])) + p.emissions[i][y];
        }
    }
    alpha
}

fn backward(p: &Potentials) -> Vec<Vec<f64>> {
    let n = p.len();
    let l = p.labels();
    let mut beta = vec![vec![0.0; l]; n];
    beta[n - 1].clone_from(&p.stop);
    for i in (0..n - 1).rev() {
        for y in 0..l {
            beta[i][y] =
                log_sum_exp((0..l).map(|next| p.transitions[y][next] + p.emissions[i + 1][next] + beta[i + 1][next]));
        }
    }
    beta
}

/// Log of the summed exponentiated scores of all label sequences.
pub fn log_partition(p: &Potentials) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let alpha = forward(p);
    let last = &alpha[p.len() - 1];
    log_sum_exp(last.iter().zip(&p.stop).map(|(a, s)| a + s))
}

/// Posterior marginals of a sequence.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_partition: f64,
    /// `unary[i][y]`: probability of label `y` at position `i`.
    pub unary: Vec<Vec<f64>>,
    /// `pairwise[i][a][b]`: probability of labels `a`, `b` at positions
    /// `i`, `i + 1`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

pub fn marginals(p: &Potentials) -> Result<Marginals> {
    if p.is_empty() {
        return Err(Error::Empty("sequence"));
    }
    let n = p.len();
    let l = p.labels();
    let alpha = forward(p);
    let beta = backward(p);
    let log_z = log_sum_exp(alpha[n - 1].iter().zip(&p.stop).map(|(a, s)| a + s));
    let unary = (0..n)
        .map(|i| (0..l).map(|y| (alpha[i][y] + beta[i][y] - log_z).exp()).collect())
        .collect();
    let pairwise = (0..n - 1)
        .map(|i| {
            (0..l)
                .map(|a| {
                    (0..l)
                        .map(|b| {
                            (alpha[i][a] + p.transitions[a][b] + p.emissions[i + 1][b] + beta[i + 1][b] - log_z).exp()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(Marginals {
        log_partition: log_z,
        unary,
        pairwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_model_is_all_that_label() {
        let p = Potentials::zeros(4, 1);
        assert_eq!(viterbi(&p).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert!(viterbi(&Potentials::zeros(0, 2)).is_err());
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let p = Potentials::zeros(1, 2);
        assert_eq!(viterbi(&p).unwrap(), vec![0]);
        let mut p = Potentials::zeros(2, 3);
        p.emissions[1] = vec![0.0, 1.0, 1.0];
        assert_eq!(viterbi(&p).unwrap(), vec![0, 1]);
    }

    #[test]
    fn two_labels_zero_weights_partition() {
        let p = Potentials::zeros(1, 2);
        assert!((log_partition(&p) - 2f64.ln()).abs() < 1e-15);
        let p = Potentials::zeros(3, 2);
        assert!((log_partition(&p) - 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn emission_shift_moves_partition_by_constant() {
        let mut p = Potentials::zeros(3, 3);
        for (i, row) in p.emissions.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                *v = ((i * 3 + y) as f64 * 1.7).sin();
            }
        }
        p.transitions[1][2] = 0.7;
        let base = log_partition(&p);
        let before = viterbi(&p).unwrap();
        for v in &mut p.emissions[1] {
            *v += 2.5;
        }
        assert!((log_partition(&p) - base - 2.5).abs() < 1e-12);
        assert_eq!(viterbi(&p).unwrap(), before);
    }

    #[test]
    fn marginals_sum_to_one() {
        let mut p = Potentials::zeros(3, 2);
        p.emissions[0] = vec![0.3, -0.2];
        p.transitions[0][1] = 1.1;
        p.stop[1] = -0.4;
        let m = marginals(&p).unwrap();
        for row in &m.unary {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for pair in &m.pairwise {
            let total: f64 = pair.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
