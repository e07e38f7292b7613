//! Comparator predictors: majority vote, two-coin Dawid-Skene EM and the
//! rank-one spectral meta-learner.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::power_iteration;
use crate::model::{LabelMatrix, Method, PredictionResult};
use crate::numeric::{log_sum_exp, logistic, sign_pos};
use crate::predict::PROB_FLOOR;

fn clamp_prob(q: f64) -> f64 {
    q.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Row-wise majority over all columns; ties go to `+1`.
pub fn majority_vote(labels: &LabelMatrix) -> PredictionResult {
    let cols: Vec<usize> = (1..=labels.p()).collect();
    majority_vote_columns(labels, &cols).expect("all columns are in range")
}

/// Majority vote restricted to the given 1-based columns.
pub fn majority_vote_columns(labels: &LabelMatrix, cols: &[usize]) -> Result<PredictionResult> {
    if cols.is_empty() {
        return Err(Error::InvalidArgument("majority vote needs at least one column".into()));
    }
    labels.check_nodes(cols)?;
    let k = cols.len() as f64;
    let (out, scores): (Vec<i8>, Vec<f64>) = (0..labels.n())
        .into_par_iter()
        .map(|i| {
            let votes: i64 = cols.iter().map(|&s| labels.get(i, s) as i64).sum();
            (if votes >= 0 { 1 } else { -1 }, (votes as f64 + k) / (2.0 * k))
        })
        .unzip();
    Ok(PredictionResult {
        labels: out,
        scores,
        method: Method::Mv,
        flags: Vec::new(),
    })
}

/// Two-coin Dawid-Skene parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DsParams {
    /// `P(f_s = +1 | y = +1)`.
    pub sensitivity: Vec<f64>,
    /// `P(f_s = -1 | y = -1)`.
    pub specificity: Vec<f64>,
    pub pi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsFit {
    pub prediction: PredictionResult,
    pub params: DsParams,
    /// Observed-data log-likelihood after every M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub flipped: bool,
}

impl DsFit {
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.log_likelihood.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

fn ds_m_step(labels: &LabelMatrix, tau: &[f64]) -> DsParams {
    let pos: f64 = tau.iter().sum();
    let neg = tau.len() as f64 - pos;
    let mut sensitivity = Vec::with_capacity(labels.p());
    let mut specificity = Vec::with_capacity(labels.p());
    for s in 1..=labels.p() {
        let col = labels.column(s);
        let (mut a, mut b) = (0.0, 0.0);
        for (&t, &f) in tau.iter().zip(col) {
            if f == 1 {
                a += t;
            } else {
                b += 1.0 - t;
            }
        }
        sensitivity.push(clamp_prob(if pos > 0.0 { a / pos } else { 0.5 }));
        specificity.push(clamp_prob(if neg > 0.0 { b / neg } else { 0.5 }));
    }
    DsParams {
        sensitivity,
        specificity,
        pi: clamp_prob(pos / tau.len() as f64),
    }
}

/// Per-row `(log P(row, y=+1), log P(row, y=-1))`.
fn ds_joint(labels: &LabelMatrix, params: &DsParams) -> Vec<(f64, f64)> {
    let plus: Vec<(f64, f64)> = params.sensitivity.iter().map(|&e| (e.ln(), (1.0 - e).ln())).collect();
    let minus: Vec<(f64, f64)> = params.specificity.iter().map(|&x| ((1.0 - x).ln(), x.ln())).collect();
    (0..labels.n())
        .into_par_iter()
        .map(|i| {
            let (mut a, mut b) = (params.pi.ln(), (1.0 - params.pi).ln());
            for s in 1..=labels.p() {
                if labels.get(i, s) == 1 {
                    a += plus[s - 1].0;
                    b += minus[s - 1].0;
                } else {
                    a += plus[s - 1].1;
                    b += minus[s - 1].1;
                }
            }
            (a, b)
        })
        .collect()
}

/// Classical two-coin Dawid-Skene EM started from the soft majority vote.
pub fn dawid_skene(labels: &LabelMatrix, tol: f64, max_iter: usize) -> Result<DsFit> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let mut tau = majority_vote(labels).scores;
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut params;
    loop {
        iterations += 1;
        params = ds_m_step(labels, &tau);
        let joint = ds_joint(labels, &params);
        let ll: f64 = joint.iter().map(|&(a, b)| log_sum_exp(&[a, b])).sum();
        tau = joint.iter().map(|&(a, b)| logistic(a - b)).collect();
        let prev = history.last().copied();
        history.push(ll);
        if let Some(prev) = prev {
            if (ll - prev).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if iterations >= max_iter {
            break;
        }
    }

    let skill: Vec<f64> = params
        .sensitivity
        .iter()
        .zip(&params.specificity)
        .map(|(e, x)| e + x - 1.0)
        .collect();
    let pos = skill.iter().filter(|&&v| v > 0.0).count();
    let neg = skill.iter().filter(|&&v| v < 0.0).count();
    let flipped = pos < neg || (pos == neg && skill.iter().sum::<f64>() < 0.0);
    if flipped {
        let sens = params.specificity.iter().map(|x| 1.0 - x).collect();
        let spec = params.sensitivity.iter().map(|e| 1.0 - e).collect();
        params = DsParams {
            sensitivity: sens,
            specificity: spec,
            pi: 1.0 - params.pi,
        };
        tau.iter_mut().for_each(|t| *t = 1.0 - *t);
    }

    let joint = ds_joint(labels, &params);
    let mut flags = Vec::new();
    if !converged {
        flags.push(format!("Dawid-Skene EM did not converge in {max_iter} iterations"));
    }
    let prediction = PredictionResult {
        labels: joint.iter().map(|&(a, b)| sign_pos(a - b)).collect(),
        scores: tau,
        method: Method::Ds,
        flags,
    };
    Ok(DsFit {
        prediction,
        params,
        log_likelihood: history,
        iterations,
        converged,
        flipped,
    })
}

const SML_COMPLETION_PASSES: usize = 20;
const SML_TOL: f64 = 1e-10;
const SML_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SmlFit {
    pub prediction: PredictionResult,
    /// Unit-norm weights with positive sum.
    pub weights: Vec<f64>,
}

/// Spectral meta-learner: weights from the leading eigenvector of the
/// column covariance with its diagonal replaced by a rank-one completion.
pub fn sml(labels: &LabelMatrix) -> Result<SmlFit> {
    let p = labels.p();
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "SML needs at least 3 classifiers, got {p}"
        )));
    }
    let n = labels.n() as f64;
    let means: Vec<f64> = (1..=p)
        .map(|s| labels.column(s).iter().map(|&v| v as f64).sum::<f64>() / n)
        .collect();
    let mut cov = vec![0.0; p * p];
    for a in 0..p {
        for b in a..p {
            let (ca, cb) = (labels.column(a + 1), labels.column(b + 1));
            let m: f64 = ca.iter().zip(cb).map(|(&x, &y)| (x * y) as f64).sum::<f64>() / n;
            let c = m - means[a] * means[b];
            cov[a * p + b] = c;
            cov[b * p + a] = c;
        }
    }

    let off_diag_zero = (0..p).all(|a| (0..p).all(|b| a == b || cov[a * p + b].abs() < 1e-12));
    if off_diag_zero {
        let mut pred = majority_vote(labels);
        pred.method = Method::Sml;
        pred.flags
            .push("covariance has no off-diagonal signal; fell back to majority vote".to_owned());
        return Ok(SmlFit {
            prediction: pred,
            weights: vec![1.0 / (p as f64).sqrt(); p],
        });
    }

    let ones = vec![1.0; p];
    let mut lead = power_iteration(&cov, p, &ones, SML_MAX_ITER, SML_TOL);
    for _ in 0..SML_COMPLETION_PASSES {
        for a in 0..p {
            cov[a * p + a] = lead.value * lead.vector[a] * lead.vector[a];
        }
        lead = power_iteration(&cov, p, &lead.vector, SML_MAX_ITER, SML_TOL);
    }
    let mut v = lead.vector;
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }

    let margins: Vec<f64> = (0..labels.n())
        .map(|i| (1..=p).map(|s| v[s - 1] * labels.get(i, s) as f64).sum())
        .collect();
    let lo = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut flags = Vec::new();
    if !lead.converged {
        flags.push("power iteration did not converge".to_owned());
    }
    let prediction = PredictionResult {
        labels: margins.iter().map(|&m| sign_pos(m)).collect(),
        scores: margins
            .iter()
            .map(|&m| if hi > lo { (m - lo) / (hi - lo) } else { 0.5 })
            .collect(),
        method: Method::Sml,
        flags,
    };
    Ok(SmlFit { prediction, weights: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn balanced_truth(rng: &mut ChaCha8Rng, n: usize) -> Vec<i8> {
        (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
    }

    fn noisy(rng: &mut ChaCha8Rng, truth: &[i8], acc: f64) -> Vec<i8> {
        truth
            .iter()
            .map(|&t| if rng.gen::<f64>() < acc { t } else { -t })
            .collect()
    }

    fn matrix(cols: Vec<Vec<i8>>) -> LabelMatrix {
        LabelMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn majority_vote_rows() {
        let labels = LabelMatrix::from_rows(&[vec![1, 1, -1], vec![-1, -1, -1]]).unwrap();
        let mv = majority_vote(&labels);
        assert_eq!(mv.labels, vec![1, -1]);
        assert_eq!(mv.scores, vec![2.0 / 3.0, 0.0]);
        let tie = LabelMatrix::from_rows(&[vec![1, -1]]).unwrap();
        assert_eq!(majority_vote(&tie).labels, vec![1]);
        assert_eq!(majority_vote_columns(&labels, &[3]).unwrap().labels, vec![-1, -1]);
    }

    #[test]
    fn ds_replicated_perfect_classifier() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = balanced_truth(&mut rng, 1000);
        let fit = dawid_skene(&matrix(vec![truth.clone(); 3]), 1e-8, 500).unwrap();
        assert_eq!(fit.prediction.labels, truth);
        for (e, x) in fit.params.sensitivity.iter().zip(&fit.params.specificity) {
            assert!((e - (1.0 - PROB_FLOOR)).abs() < 1e-9);
            assert!((x - (1.0 - PROB_FLOOR)).abs() < 1e-9);
        }
    }

    #[test]
    fn ds_random_classifiers_are_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth = balanced_truth(&mut rng, 4000);
        let cols = (0..5).map(|_| balanced_truth(&mut rng, 4000)).collect();
        let fit = dawid_skene(&matrix(cols), 1e-8, 500).unwrap();
        assert!((fit.prediction.accuracy(&truth) - 0.5).abs() < 0.05);
        assert!(fit.is_monotone(1e-10));
    }

    #[test]
    fn ds_single_classifier_is_copied() {
        // label matrices need two columns; a duplicate adds no information
        let col = vec![1, -1, -1, 1, 1, -1, 1];
        let fit = dawid_skene(&matrix(vec![col.clone(), col.clone()]), 1e-8, 500).unwrap();
        assert_eq!(fit.prediction.labels, col);
    }

    #[test]
    fn ds_estimates_asymmetric_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = balanced_truth(&mut rng, 20_000);
        let rates = [(0.9, 0.7), (0.8, 0.85), (0.65, 0.9), (0.75, 0.75)];
        let cols = rates
            .iter()
            .map(|&(se, sp)| {
                truth
                    .iter()
                    .map(|&t| {
                        let right = rng.gen::<f64>() < if t == 1 { se } else { sp };
                        if right {
                            t
                        } else {
                            -t
                        }
                    })
                    .collect()
            })
            .collect();
        let fit = dawid_skene(&matrix(cols), 1e-10, 2000).unwrap();
        assert!(fit.is_monotone(1e-10));
        for (s, &(se, sp)) in rates.iter().enumerate() {
            assert!((fit.params.sensitivity[s] - se).abs() < 0.03);
            assert!((fit.params.specificity[s] - sp).abs() < 0.03);
        }
    }

    #[test]
    fn ds_flips_to_majority_skilled_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = balanced_truth(&mut rng, 3000);
        let cols = [0.85, 0.8, 0.75].iter().map(|&a| noisy(&mut rng, &truth, a)).collect();
        let fit = dawid_skene(&matrix(cols), 1e-8, 500).unwrap();
        assert!(fit.prediction.accuracy(&truth) > 0.85);
    }

    #[test]
    fn sml_orders_weights_by_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = balanced_truth(&mut rng, 20_000);
        let acc = [0.9, 0.8, 0.6];
        let cols = acc.iter().map(|&a| noisy(&mut rng, &truth, a)).collect();
        let fit = sml(&matrix(cols)).unwrap();
        let v = &fit.weights;
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0, "{v:?}");
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);

        // population covariance of conditionally independent classifiers on a
        // balanced label is r r^T off the diagonal with r_s = 2 a_s - 1
        let r: Vec<f64> = acc.iter().map(|a| 2.0 * a - 1.0).collect();
        let pop = DMatrix::from_fn(3, 3, |i, j| r[i] * r[j]);
        let eig = SymmetricEigen::new(pop);
        let top = eig.eigenvalues.imax();
        let mut u: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        if u.iter().sum::<f64>() < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
        for (a, b) in v.iter().zip(&u) {
            assert!((a - b).abs() < 0.06, "{v:?} vs {u:?}");
        }
    }

    #[test]
    fn sml_duplicated_columns_get_equal_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let truth = balanced_truth(&mut rng, 2000);
        let col = noisy(&mut rng, &truth, 0.8);
        let fit = sml(&matrix(vec![col.clone(), col.clone(), col])).unwrap();
        assert!((fit.weights[0] - fit.weights[1]).abs() < 1e-6);
        assert!((fit.weights[1] - fit.weights[2]).abs() < 1e-6);
    }

    #[test]
    fn sml_random_columns_are_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let truth = balanced_truth(&mut rng, 4000);
        let cols = (0..5).map(|_| balanced_truth(&mut rng, 4000)).collect();
        let fit = sml(&matrix(cols)).unwrap();
        assert!((fit.prediction.accuracy(&truth) - 0.5).abs() < 0.05);
    }

    #[test]
    fn sml_degenerate_input_falls_back() {
        // constant columns have zero covariance
        let labels = matrix(vec![vec![1; 6], vec![-1; 6], vec![1; 6]]);
        let fit = sml(&labels).unwrap();
        assert_eq!(fit.prediction.flags.len(), 1);
        assert_eq!(fit.prediction.labels, majority_vote(&labels).labels);
        assert!(sml(&matrix(vec![vec![1, -1], vec![1, 1]])).is_err());
    }

    #[test]
    fn row_order_only_permutes_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth = balanced_truth(&mut rng, 500);
        let cols: Vec<Vec<i8>> = [0.8, 0.7, 0.9, 0.6]
            .iter()
            .map(|&a| noisy(&mut rng, &truth, a))
            .collect();
        let rev: Vec<Vec<i8>> = cols.iter().map(|c| c.iter().rev().copied().collect()).collect();
        let (a, b) = (matrix(cols), matrix(rev));
        let back = |mut v: Vec<i8>| {
            v.reverse();
            v
        };
        assert_eq!(majority_vote(&a).labels, back(majority_vote(&b).labels));
        assert_eq!(
            sml(&a).unwrap().prediction.labels,
            back(sml(&b).unwrap().prediction.labels)
        );
        assert_eq!(
            dawid_skene(&a, 1e-8, 500).unwrap().prediction.labels,
            back(dawid_skene(&b, 1e-8, 500).unwrap().prediction.labels)
        );
    }
}
