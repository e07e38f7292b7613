//! Exact brute-force probabilities for small pairwise binary models.
//!
//! Every configuration is enumerated, so this is only usable for a couple of
//! dozen nodes. It serves as ground truth for the closed-form approximation,
//! the Gibbs sampler and the Fisher-information diagnostics.
//!
//! A configuration is stored as a bitmask: bit `k` set means node
//! `first_node + k` takes the value `+1`.

use crate::error::{Error, Result};
use crate::model::IsingModelSpec;
use crate::numeric::log_sum_exp;

/// Default cap on the number of enumerated nodes (2^24 states).
pub const DEFAULT_NODE_CAP: usize = 24;

/// Exact joint law of a pairwise binary model, held in log space.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    first_node: usize,
    nodes: usize,
    log_pmf: Vec<f64>,
    log_partition: f64,
}

/// Neumaier-compensated sum in iteration order.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[inline]
fn spin(state: usize, k: usize) -> f64 {
    if state >> k & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl ExactDistribution {
    /// Enumerate the model `exp{ sum_k h_k y_k + sum w_{st} y_s y_t }` over
    /// nodes `first_node..first_node + nodes`. Fields and pairs use node ids.
    pub fn from_pairwise(
        first_node: usize,
        nodes: usize,
        fields: &[(usize, f64)],
        pairs: &[(usize, usize, f64)],
        cap: usize,
    ) -> Result<Self> {
        if nodes > cap || nodes >= usize::BITS as usize {
            return Err(Error::TooLarge { nodes, cap });
        }
        let local = |s: usize| -> Result<usize> {
            if s < first_node || s >= first_node + nodes {
                Err(Error::Structure(format!(
                    "node {s} outside {first_node}..{}",
                    first_node + nodes
                )))
            } else {
                Ok(s - first_node)
            }
        };
        let fields: Vec<(usize, f64)> = fields.iter().map(|&(s, h)| Ok((local(s)?, h))).collect::<Result<_>>()?;
        let pairs: Vec<(usize, usize, f64)> = pairs
            .iter()
            .map(|&(s, t, w)| Ok((local(s)?, local(t)?, w)))
            .collect::<Result<_>>()?;

        let energy: Vec<f64> = (0..1usize << nodes)
            .map(|state| {
                let f: f64 = fields.iter().map(|&(k, h)| h * spin(state, k)).sum();
                let e: f64 = pairs.iter().map(|&(a, b, w)| w * spin(state, a) * spin(state, b)).sum();
                f + e
            })
            .collect();
        let log_partition = log_sum_exp(&energy);
        let log_pmf = energy.into_iter().map(|e| e - log_partition).collect();
        Ok(ExactDistribution {
            first_node,
            nodes,
            log_pmf,
            log_partition,
        })
    }

    pub fn first_node(&self) -> usize {
        self.first_node
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn contains_hidden_node(&self) -> bool {
        self.first_node == 0
    }

    /// Log of the normalizer of the unnormalized weights.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.log_pmf[state].exp()
    }

    /// Probability of a configuration given as spins for nodes in order.
    pub fn prob_of(&self, spins: &[i8]) -> Result<f64> {
        Ok(self.prob(self.encode(spins)?))
    }

    pub fn encode(&self, spins: &[i8]) -> Result<usize> {
        if spins.len() != self.nodes {
            return Err(Error::Dimension {
                expected: self.nodes,
                found: spins.len(),
            });
        }
        let mut state = 0;
        for (k, &v) in spins.iter().enumerate() {
            match v {
                1 => state |= 1 << k,
                -1 => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "spin {v} for node {} is not -1 or 1",
                        self.first_node + k
                    )))
                }
            }
        }
        Ok(state)
    }

    /// Total probability mass, `1` up to rounding.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.log_pmf.iter().map(|l| l.exp()))
    }

    /// Call `f(spins, prob)` for every configuration in index order. `spins`
    /// holds `+-1.0` for nodes `first_node..`.
    pub fn for_each_state(&self, mut f: impl FnMut(&[f64], f64)) {
        let mut spins = vec![0.0; self.nodes];
        for (state, lp) in self.log_pmf.iter().enumerate() {
            for (k, x) in spins.iter_mut().enumerate() {
                *x = spin(state, k);
            }
            f(&spins, lp.exp());
        }
    }

    /// Expectation of `g` under this distribution, with a fixed-order
    /// compensated reduction.
    pub fn expectation(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut terms = Vec::with_capacity(self.log_pmf.len());
        self.for_each_state(|y, pr| terms.push(pr * g(y)));
        compensated_sum(terms.into_iter())
    }

    fn local(&self, node: usize) -> Result<usize> {
        if node < self.first_node || node >= self.first_node + self.nodes {
            Err(Error::InvalidArgument(format!(
                "node {node} not in {}..{}",
                self.first_node,
                self.first_node + self.nodes
            )))
        } else {
            Ok(node - self.first_node)
        }
    }
}

/// Exact distribution of a model over nodes `0..=p`.
pub fn enumerate(spec: &IsingModelSpec) -> Result<ExactDistribution> {
    enumerate_with_cap(spec, DEFAULT_NODE_CAP)
}

pub fn enumerate_with_cap(spec: &IsingModelSpec, cap: usize) -> Result<ExactDistribution> {
    let pairs: Vec<_> = spec.edges().collect();
    ExactDistribution::from_pairwise(0, spec.p() + 1, &[(0, spec.theta0())], &pairs, cap)
}

/// `E[y_r y_t]`.
pub fn pair_moment(dist: &ExactDistribution, r: usize, t: usize) -> Result<f64> {
    if r == t {
        return Err(Error::InvalidArgument(format!(
            "pair moment needs distinct nodes, got {r} twice"
        )));
    }
    let (a, b) = (dist.local(r)?, dist.local(t)?);
    let terms = dist.log_pmf.iter().enumerate().map(|(state, lp)| {
        let agree = (state >> a & 1) == (state >> b & 1);
        if agree {
            lp.exp()
        } else {
            -lp.exp()
        }
    });
    Ok(compensated_sum(terms))
}

/// Sum out node 0, leaving the law of the observed nodes `1..=p`.
pub fn marginalize_out_node0(dist: &ExactDistribution) -> Result<ExactDistribution> {
    if !dist.contains_hidden_node() {
        return Err(Error::InvalidArgument(
            "distribution has no hidden node to marginalize".into(),
        ));
    }
    let half = dist.log_pmf.len() / 2;
    let log_pmf = (0..half)
        .map(|y| log_sum_exp(&[dist.log_pmf[y << 1], dist.log_pmf[y << 1 | 1]]))
        .collect();
    Ok(ExactDistribution {
        first_node: 1,
        nodes: dist.nodes - 1,
        log_pmf,
        log_partition: dist.log_partition,
    })
}

/// `½ log[P(y_s = +1 | rest) / P(y_s = -1 | rest)]` in the law of the observed
/// nodes. `others` gives spins for nodes `1..=p` in order; the entry at `s`
/// is ignored and may be `0`.
pub fn conditional_logit(dist: &ExactDistribution, s: usize, others: &[i8]) -> Result<f64> {
    let observed = if dist.contains_hidden_node() {
        marginalize_out_node0(dist)?
    } else {
        dist.clone()
    };
    let k = observed.local(s)?;
    if others.len() != observed.nodes {
        return Err(Error::Dimension {
            expected: observed.nodes,
            found: others.len(),
        });
    }
    let mut state = 0usize;
    for (j, &v) in others.iter().enumerate() {
        if j == k {
            continue;
        }
        match v {
            1 => state |= 1 << j,
            -1 => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "assignment for node {} missing or not +-1",
                    j + 1
                )))
            }
        }
    }
    let plus = observed.log_pmf[state | 1 << k];
    let minus = observed.log_pmf[state & !(1 << k)];
    Ok(0.5 * (plus - minus))
}

/// `KL(p || q) = sum p log(p / q)`.
pub fn kl_divergence(p: &ExactDistribution, q: &ExactDistribution) -> Result<f64> {
    if p.nodes != q.nodes || p.first_node != q.first_node {
        return Err(Error::Dimension {
            expected: p.nodes,
            found: q.nodes,
        });
    }
    let terms = p.log_pmf.iter().zip(&q.log_pmf).map(|(lp, lq)| lp.exp() * (lp - lq));
    Ok(compensated_sum(terms).max(0.0))
}
