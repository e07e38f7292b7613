//! Label prediction from a pruned expert set: EM-estimated Bayes classifier
//! and the augmented majority vote.
//!
//! The hidden label is a two-class mixture in which expert `s` agrees with
//! it with probability `ψ_s` and the positive class has prior `π`. EM
//! alternates the posterior `τ_i = σ(2(θ_0 + Σ_s θ_0s f_s))` with the closed
//! form updates `ψ_s = ½ + (1/n) Σ_i (τ_i − ½) f_s`, `π = mean τ`, where
//! `θ_0s = ½ logit ψ_s` and `θ_0 = ½ logit π`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{sign_partition, SignMatrix};
use crate::error::{Error, Result};
use crate::model::{ExpertReport, LabelMatrix, Method, PredictionResult};
use crate::numeric::{half_logit, logistic, sign_pos};

/// Bounds applied to `ψ` and `π` after every M-step.
pub const PROB_FLOOR: f64 = 1e-6;

fn clamp_prob(q: f64) -> f64 {
    q.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Posterior probability that the hidden label is `+1`.
pub fn posterior(theta0: f64, theta0s: &[f64], row: &[i8]) -> f64 {
    logistic(2.0 * logit(theta0, theta0s, row))
}

fn logit(theta0: f64, theta0s: &[f64], row: &[i8]) -> f64 {
    theta0 + theta0s.iter().zip(row).map(|(w, &f)| w * f as f64).sum::<f64>()
}

/// Starting point for EM.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPolicy {
    /// `τ_i` = fraction of positive expert votes in row `i`, then an M-step.
    SoftMajority,
    /// `τ_i` drawn uniformly on `(0, 1)` from the given seed, then an M-step.
    Random { seed: u64 },
    /// Start from explicit weights: `(θ_0, θ_0s per expert)`.
    Weights { theta0: f64, theta0s: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub init: InitPolicy,
    /// Relative change of the bound below which EM stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            init: InitPolicy::SoftMajority,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub tau: Vec<f64>,
    /// One per expert, in the order the experts were given.
    pub psi: Vec<f64>,
    pub pi: f64,
    /// Expected complete-data log-likelihood at `(tau, psi, pi)`.
    pub expected_complete: f64,
    /// `expected_complete` plus the entropy of `tau`; never decreases.
    pub lower_bound: f64,
    pub iteration: usize,
    /// `lower_bound` after every M-step.
    pub bound_history: Vec<f64>,
    pub converged: bool,
}

impl EmState {
    /// Whether the bound history never drops by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.bound_history.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub report: ExpertReport,
    pub state: EmState,
    /// Whether the final labels were flipped to make most experts positive.
    pub flipped: bool,
    pub flags: Vec<String>,
}

fn m_step(cols: &[&[i8]], tau: &[f64]) -> (Vec<f64>, f64) {
    let n = tau.len() as f64;
    let psi = cols
        .iter()
        .map(|col| {
            let s: f64 = tau.iter().zip(col.iter()).map(|(t, &f)| (t - 0.5) * f as f64).sum();
            clamp_prob(0.5 + s / n)
        })
        .collect();
    let pi = clamp_prob(tau.iter().sum::<f64>() / n);
    (psi, pi)
}

fn e_step(cols: &[&[i8]], psi: &[f64], pi: f64, n: usize) -> Vec<f64> {
    let w: Vec<f64> = psi.iter().map(|&q| half_logit(q)).collect();
    let t0 = half_logit(pi);
    (0..n)
        .map(|i| {
            let z = t0 + cols.iter().zip(&w).map(|(c, w)| w * c[i] as f64).sum::<f64>();
            logistic(2.0 * z)
        })
        .collect()
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn expected_complete(cols: &[&[i8]], tau: &[f64], psi: &[f64], pi: f64) -> f64 {
    let mut total = 0.0;
    for (col, &q) in cols.iter().zip(psi) {
        let (lq, lr) = (q.ln(), (1.0 - q).ln());
        for (&t, &f) in tau.iter().zip(col.iter()) {
            let agree = if f == 1 { t } else { 1.0 - t };
            total += agree * lq + (1.0 - agree) * lr;
        }
    }
    let (lp, lm) = (pi.ln(), (1.0 - pi).ln());
    total + tau.iter().map(|&t| t * lp + (1.0 - t) * lm).sum::<f64>()
}

fn entropy(tau: &[f64]) -> f64 {
    -tau.iter().map(|&t| xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)).sum::<f64>()
}

/// Fit `(π, ψ_s)` on the given expert columns (1-based ids).
pub fn em_fit(labels: &LabelMatrix, experts: &[usize], cfg: &EmConfig) -> Result<EmFit> {
    if experts.is_empty() {
        return Err(Error::InvalidArgument("EM needs at least one expert".into()));
    }
    labels.check_nodes(experts)?;
    let cols: Vec<&[i8]> = experts.iter().map(|&s| labels.column(s)).collect();
    let n = labels.n();

    let mut tau: Vec<f64> = match &cfg.init {
        InitPolicy::SoftMajority => (0..n)
            .map(|i| cols.iter().filter(|c| c[i] == 1).count() as f64 / cols.len() as f64)
            .collect(),
        InitPolicy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| rng.gen::<f64>()).collect()
        }
        InitPolicy::Weights { theta0, theta0s } => {
            if theta0s.len() != experts.len() {
                return Err(Error::Dimension {
                    expected: experts.len(),
                    found: theta0s.len(),
                });
            }
            (0..n)
                .map(|i| {
                    let row: Vec<i8> = cols.iter().map(|c| c[i]).collect();
                    posterior(*theta0, theta0s, &row)
                })
                .collect()
        }
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iteration = 0;
    let (mut psi, mut pi);
    let mut complete;
    loop {
        iteration += 1;
        (psi, pi) = m_step(&cols, &tau);
        complete = expected_complete(&cols, &tau, &psi, pi);
        let bound = complete + entropy(&tau);
        let prev = history.last().copied();
        history.push(bound);
        tau = e_step(&cols, &psi, pi, n);
        if let Some(prev) = prev {
            if (bound - prev).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if iteration >= cfg.max_iter {
            break;
        }
    }

    let mut flags = Vec::new();
    if !converged {
        flags.push(format!("EM did not converge in {} iterations", cfg.max_iter));
    }
    let weights: Vec<f64> = psi.iter().map(|&q| half_logit(q)).collect();
    let pos = weights.iter().filter(|&&w| w > 0.0).count();
    let neg = weights.iter().filter(|&&w| w < 0.0).count();
    let flipped = pos < neg || (pos == neg && weights.iter().sum::<f64>() < 0.0);
    if flipped {
        psi.iter_mut().for_each(|q| *q = 1.0 - *q);
        pi = 1.0 - pi;
        tau.iter_mut().for_each(|t| *t = 1.0 - *t);
    }
    if pos == neg && pos > 0 {
        flags.push("as many negative as positive experts; orientation chosen by total weight".to_owned());
    }

    let psi_map: BTreeMap<usize, f64> = experts.iter().copied().zip(psi.iter().copied()).collect();
    let report = ExpertReport::from_estimates(psi_map, pi);
    let state = EmState {
        tau,
        psi,
        pi,
        expected_complete: complete,
        lower_bound: *history.last().expect("at least one iteration"),
        iteration,
        bound_history: history,
        converged,
    };
    Ok(EmFit {
        report,
        state,
        flipped,
        flags,
    })
}

/// `sign(θ_0 + Σ_s θ_0s f_s)` with `sign(0) = +1`; the score is the posterior.
pub fn bayes_classify(report: &ExpertReport, labels: &LabelMatrix) -> Result<PredictionResult> {
    let experts: Vec<usize> = report.theta0s_hat.keys().copied().collect();
    if experts.is_empty() {
        return Err(Error::InvalidArgument("report has no experts".into()));
    }
    labels.check_nodes(&experts)?;
    let weights: Vec<f64> = report.theta0s_hat.values().copied().collect();
    let cols: Vec<&[i8]> = experts.iter().map(|&s| labels.column(s)).collect();
    let mut out_labels = Vec::with_capacity(labels.n());
    let mut scores = Vec::with_capacity(labels.n());
    let mut row = vec![0i8; cols.len()];
    for i in 0..labels.n() {
        for (r, c) in row.iter_mut().zip(&cols) {
            *r = c[i];
        }
        let z = logit(report.theta0_hat, &weights, &row);
        out_labels.push(sign_pos(z));
        scores.push(logistic(2.0 * z));
    }
    Ok(PredictionResult {
        labels: out_labels,
        scores,
        method: Method::Bayes,
        flags: Vec::new(),
    })
}

/// Majority vote on expert columns after negating the smaller sign group.
#[derive(Clone, Debug, PartialEq)]
pub struct AmvResult {
    pub prediction: PredictionResult,
    pub positive_group: Vec<usize>,
    pub negative_group: Vec<usize>,
}

/// `sizes` gives `|N̂_s|` per expert and only matters when the two groups
/// have equal size: the group holding the expert with the largest
/// neighborhood (smallest id among equals) is then taken as positive.
pub fn augmented_majority_vote(
    labels: &LabelMatrix,
    signs: &SignMatrix,
    sizes: &BTreeMap<usize, usize>,
) -> Result<AmvResult> {
    let experts = signs.nodes();
    if experts.is_empty() {
        return Err(Error::InvalidArgument("AMV needs at least one expert".into()));
    }
    labels.check_nodes(experts)?;
    let (a, b) = sign_partition(signs)?;
    let mut flags = Vec::new();
    let (positive, negative) = if a.len() != b.len() {
        if a.len() > b.len() {
            (a, b)
        } else {
            (b, a)
        }
    } else {
        let anchor = experts
            .iter()
            .copied()
            .max_by(|&s, &t| {
                let (ss, st) = (sizes.get(&s).copied().unwrap_or(0), sizes.get(&t).copied().unwrap_or(0));
                ss.cmp(&st).then(t.cmp(&s))
            })
            .expect("nonempty");
        flags.push(format!(
            "sign groups of equal size; group with expert {anchor} taken as positive"
        ));
        if a.contains(&anchor) {
            (a, b)
        } else {
            (b, a)
        }
    };

    let cols: Vec<(&[i8], i8)> = experts
        .iter()
        .map(|&s| (labels.column(s), if negative.contains(&s) { -1 } else { 1 }))
        .collect();
    let k = cols.len() as f64;
    let mut out_labels = Vec::with_capacity(labels.n());
    let mut scores = Vec::with_capacity(labels.n());
    for i in 0..labels.n() {
        let votes: i64 = cols.iter().map(|(c, g)| (c[i] * g) as i64).sum();
        out_labels.push(if votes >= 0 { 1 } else { -1 });
        scores.push((votes as f64 + k) / (2.0 * k));
    }
    Ok(AmvResult {
        prediction: PredictionResult {
            labels: out_labels,
            scores,
            method: Method::Amv,
            flags,
        },
        positive_group: positive,
        negative_group: negative,
    })
}
