//! Closed-form pairwise approximation of the observed classifiers' law once
//! the hidden node is summed out.
//!
//! Summing out node 0 couples every pair of experts. The approximation keeps
//! all non-expert weights and replaces each expert pair `{s, t}` by
//!
//! ```text
//! w_st = ½ log[(e^{a1} + e^{-a1} + e^{a2} + e^{-a2}) / (e^{a3} + e^{-a3} + e^{a4} + e^{-a4})]
//! a1 = θ0s + θ0t + θ0,  a2 = θ0s + θ0t - θ0,  a3 = θ0s - θ0t + θ0,  a4 = θ0s - θ0t - θ0
//! ```
//!
//! which is exactly the weight reproducing the true pair marginal of `(f_s, f_t)`.
//! Its sign is the sign of `θ0s · θ0t`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, rayleigh};
use crate::model::{validate_model, IsingModelSpec, NeighborhoodMap, Property};
use crate::numeric::log_sum_exp;
use crate::oracle::ExactDistribution;

/// Approximate edge weight between two experts with hidden-node weights
/// `theta_0s`, `theta_0t` and external field `theta_0`.
pub fn theta_tilde_pair(theta_0s: f64, theta_0t: f64, theta_0: f64) -> f64 {
    let a1 = theta_0s + theta_0t + theta_0;
    let a2 = theta_0s + theta_0t - theta_0;
    let a3 = theta_0s - theta_0t + theta_0;
    let a4 = theta_0s - theta_0t - theta_0;
    let num = log_sum_exp(&[a1, -a1, a2, -a2]);
    let den = log_sum_exp(&[a3, -a3, a4, -a4]);
    0.5 * (num - den)
}

/// Pairwise model over the observed nodes `1..=p` with no external field.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxModel {
    p: usize,
    weights: BTreeMap<(usize, usize), f64>,
}

impl ApproxModel {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn weight(&self, s: usize, t: usize) -> f64 {
        self.weights.get(&(s.min(t), s.max(t))).copied().unwrap_or(0.0)
    }

    /// Nonzero weights as `(s, t, w)` with `s < t`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(s, t), &w)| (s, t, w))
    }

    /// The induced neighborhoods (nonzero pattern) with their weights.
    pub fn neighborhoods(&self) -> NeighborhoodMap {
        let mut map = NeighborhoodMap::new(self.p);
        for (s, t, w) in self.edges() {
            map.insert_symmetric(s, t, w)
                .expect("approximation weights are nonzero and in range");
        }
        map
    }

    /// The model as a graph with no hidden-node edges, for TSV output.
    pub fn to_spec(&self) -> IsingModelSpec {
        IsingModelSpec::new(self.p, 0.0, self.edges()).expect("approximation is well-formed")
    }

    /// Exact law of the approximating model over nodes `1..=p`.
    pub fn exact_distribution(&self, cap: usize) -> Result<ExactDistribution> {
        let pairs: Vec<_> = self.edges().collect();
        ExactDistribution::from_pairwise(1, self.p, &[], &pairs, cap)
    }
}

/// Replace every expert pair's weight by [`theta_tilde_pair`] and keep the rest.
///
/// Requires the expert set to be exactly the neighborhood of node 0 with no
/// expert-expert edges; the degree-margin property is not needed here.
pub fn approximate(spec: &IsingModelSpec) -> Result<ApproxModel> {
    let violations: Vec<_> = validate_model(spec)
        .into_iter()
        .filter(|v| v.property != Property::G1)
        .collect();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    let mut weights: BTreeMap<(usize, usize), f64> = spec
        .edges()
        .filter(|&(s, _, _)| s != 0)
        .map(|(s, t, w)| ((s, t), w))
        .collect();
    let experts: Vec<usize> = spec.expert_set().iter().copied().collect();
    for (i, &s) in experts.iter().enumerate() {
        for &t in &experts[i + 1..] {
            let w = theta_tilde_pair(spec.weight(0, s), spec.weight(0, t), spec.theta0());
            weights.insert((s, t), w);
        }
    }
    Ok(ApproxModel { p: spec.p(), weights })
}

/// Symmetric `{-1, 0, +1}` matrix over a set of nodes, zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    nodes: Vec<usize>,
    signs: Vec<i8>,
}

impl SignMatrix {
    /// `signs` is row-major over `nodes`.
    pub fn new(nodes: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let k = nodes.len();
        if signs.len() != k * k {
            return Err(Error::Dimension {
                expected: k * k,
                found: signs.len(),
            });
        }
        for i in 0..k {
            if signs[i * k + i] != 0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at node {}", nodes[i])));
            }
            for j in 0..k {
                let v = signs[i * k + j];
                if !(-1..=1).contains(&v) {
                    return Err(Error::InvalidArgument(format!("sign entry {v} not in {{-1,0,1}}")));
                }
                if v != signs[j * k + i] {
                    return Err(Error::InvalidArgument(format!(
                        "sign matrix not symmetric at ({}, {})",
                        nodes[i], nodes[j]
                    )));
                }
            }
        }
        Ok(SignMatrix { nodes, signs })
    }

    /// Build from a pair function; only `s < t` pairs are queried.
    pub fn from_fn(nodes: Vec<usize>, mut sign: impl FnMut(usize, usize) -> i8) -> Self {
        let k = nodes.len();
        let mut signs = vec![0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let v = sign(nodes[i], nodes[j]).signum();
                signs[i * k + j] = v;
                signs[j * k + i] = v;
            }
        }
        SignMatrix { nodes, signs }
    }

    /// Signs of estimated weights among `nodes`; absent pairs are 0.
    pub fn from_neighborhoods(nodes: Vec<usize>, nbhd: &NeighborhoodMap) -> Self {
        Self::from_fn(nodes, |s, t| match nbhd.weight(s, t).or_else(|| nbhd.weight(t, s)) {
            Some(w) if w > 0.0 => 1,
            Some(w) if w < 0.0 => -1,
            _ => 0,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.signs[i * self.nodes.len() + j]
    }
}

const PARTITION_MAX_ITER: usize = 1000;
const PARTITION_TOL: f64 = 1e-10;
const PARTITION_ZERO: f64 = 1e-12;

/// Split nodes into two groups by the sign pattern of the leading
/// eigenvector of the sign matrix.
///
/// Power iteration starts from all-ones; if that start was orthogonal to the
/// leading eigenvector (detected by an alternating `+-1` restart reaching a
/// strictly larger Rayleigh quotient) the restart wins. The vector is
/// oriented so the first node is nonnegative; entries below `1e-12` in
/// magnitude go to the first group. A consistent two-colorable matrix is
/// split exactly along its coloring.
pub fn sign_partition(signs: &SignMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = signs.nodes.len();
    if k == 0 {
        return Err(Error::InvalidArgument("cannot partition an empty node set".into()));
    }
    let a: Vec<f64> = signs.signs.iter().map(|&v| v as f64).collect();
    let ones = vec![1.0; k];
    let mut lead = power_iteration(&a, k, &ones, PARTITION_MAX_ITER, PARTITION_TOL);
    if k > 1 {
        let alternating: Vec<f64> = (0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let restart = power_iteration(&a, k, &alternating, PARTITION_MAX_ITER, PARTITION_TOL);
        if restart.value > lead.value + 1e-9 {
            lead = restart;
        }
    }
    let mut v = lead.vector;
    if let Some(first) = v.iter().copied().find(|x| x.abs() >= PARTITION_ZERO) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    debug_assert!((rayleigh(&a, k, &v) - lead.value).abs() < 1e-6);
    let mut group_a = Vec::new();
    let mut group_b = Vec::new();
    for (&node, &x) in signs.nodes.iter().zip(&v) {
        if x.abs() < PARTITION_ZERO || x > 0.0 {
            group_a.push(node);
        } else {
            group_b.push(node);
        }
    }
    Ok((group_a, group_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::five_expert_graph;
    use crate::model::NeighborhoodMap;

    const HAND_VALUE: f64 = 0.662_501_373_678_932_2;

    #[test]
    fn pair_weight_hand_values() {
        // ½ log((2e^2 + 2e^-2) / 4) = ½ log cosh 2
        let hand = 0.5 * ((f64::exp(2.0) + f64::exp(-2.0)) / 2.0).ln();
        assert!((theta_tilde_pair(1.0, 1.0, 0.0) - hand).abs() < 1e-14);
        assert!((hand - HAND_VALUE).abs() < 1e-14);
        assert!((theta_tilde_pair(1.0, -1.0, 0.0) + HAND_VALUE).abs() < 1e-14);
    }

    #[test]
    fn zero_hidden_weight_gives_zero() {
        for &x in &[-2.0, 0.1, 3.0] {
            for &t0 in &[-1.0, 0.0, 0.7] {
                assert_eq!(theta_tilde_pair(x, 0.0, t0), 0.0);
            }
        }
    }

    #[test]
    fn pair_weight_is_finite_for_large_inputs() {
        let w = theta_tilde_pair(30.0, 30.0, 30.0);
        assert!(w.is_finite() && w > 0.0);
        let w = theta_tilde_pair(30.0, -30.0, -30.0);
        assert!(w.is_finite() && w < 0.0);
    }

    #[test]
    fn reference_graph_neighborhood_of_expert_one() {
        let model = approximate(&five_expert_graph()).unwrap();
        let nb = model.neighborhoods();
        assert_eq!(
            nb.neighbor_set(1).into_iter().collect::<Vec<_>>(),
            vec![2, 3, 4, 5, 6, 7]
        );
        // non-experts keep their neighborhoods
        assert_eq!(nb.neighbor_set(8).into_iter().collect::<Vec<_>>(), vec![2, 3, 5]);
    }

    #[test]
    fn single_expert_adds_no_edges() {
        let spec = IsingModelSpec::new(3, 0.2, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, -0.25)]).unwrap();
        let model = approximate(&spec).unwrap();
        let edges: Vec<_> = model.edges().collect();
        assert_eq!(edges, vec![(1, 2, 0.5), (2, 3, -0.25)]);
    }

    #[test]
    fn expert_pair_signs_follow_hidden_weights() {
        let spec = five_expert_graph();
        let model = approximate(&spec).unwrap();
        for s in 1..=5 {
            for t in s + 1..=5 {
                let expected = (spec.weight(0, s) * spec.weight(0, t)).signum();
                assert_eq!(model.weight(s, t).signum(), expected);
            }
        }
    }

    #[test]
    fn approximation_rejects_expert_edges() {
        let spec = IsingModelSpec::new(3, 0.0, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 0.3)]).unwrap();
        assert!(matches!(approximate(&spec), Err(Error::InvalidModel(_))));
    }

    /// True pair marginal of two experts matches tanh of the approximate weight.
    #[test]
    fn pair_weight_reproduces_expert_pair_marginal() {
        use crate::oracle::{enumerate, marginalize_out_node0, pair_moment};
        let spec = IsingModelSpec::new(
            5,
            -0.4,
            [(0, 1, 1.2), (0, 2, -0.6), (0, 3, 0.9), (1, 4, 0.5), (3, 5, -1.0)],
        )
        .unwrap();
        let marginal = marginalize_out_node0(&enumerate(&spec).unwrap()).unwrap();
        let model = approximate(&spec).unwrap();
        for (s, t) in [(1, 2), (1, 3), (2, 3)] {
            let truth = pair_moment(&marginal, s, t).unwrap();
            assert!((truth - model.weight(s, t).tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_of_consistent_signs() {
        let m = SignMatrix::from_fn(vec![1, 2, 3], |s, t| match (s, t) {
            (1, 2) => 1,
            _ => -1,
        });
        assert_eq!(sign_partition(&m).unwrap(), (vec![1, 2], vec![3]));
    }

    #[test]
    fn partition_all_positive_is_one_group() {
        let m = SignMatrix::from_fn(vec![3, 5, 9, 11], |_, _| 1);
        assert_eq!(sign_partition(&m).unwrap(), (vec![3, 5, 9, 11], vec![]));
    }

    #[test]
    fn partition_two_nodes_negative() {
        let m = SignMatrix::from_fn(vec![1, 2], |_, _| -1);
        assert_eq!(sign_partition(&m).unwrap(), (vec![1], vec![2]));
    }

    #[test]
    fn partition_recovers_random_colorings() {
        let colors = [1i8, -1, -1, 1, 1, -1, 1, 1];
        let nodes: Vec<usize> = (1..=colors.len()).collect();
        let m = SignMatrix::from_fn(nodes, |s, t| colors[s - 1] * colors[t - 1]);
        let (a, b) = sign_partition(&m).unwrap();
        assert_eq!(a, vec![1, 4, 5, 7, 8]);
        assert_eq!(b, vec![2, 3, 6]);
    }

    #[test]
    fn partition_rejects_empty_and_bad_matrices() {
        assert!(sign_partition(&SignMatrix::from_fn(vec![], |_, _| 1)).is_err());
        assert!(SignMatrix::new(vec![1, 2], vec![0, 1, -1, 0]).is_err());
        assert!(SignMatrix::new(vec![1, 2], vec![1, 1, 1, 0]).is_err());
    }

    #[test]
    fn sign_matrix_from_neighborhoods() {
        let mut nb = NeighborhoodMap::new(4);
        nb.insert_symmetric(1, 2, 0.4).unwrap();
        nb.insert_symmetric(1, 3, -0.2).unwrap();
        let m = SignMatrix::from_neighborhoods(vec![1, 2, 3], &nb);
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(0, 2), -1);
        assert_eq!(m.get(1, 2), 0);
    }

    #[test]
    fn sign_law_on_random_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let b: f64 = rng.gen_range(-3.0..3.0);
            let c: f64 = rng.gen_range(-3.0..3.0);
            if a == 0.0 || b == 0.0 {
                continue;
            }
            let w = theta_tilde_pair(a, b, c);
            assert!(w != 0.0);
            assert_eq!(w.signum(), (a * b).signum());
        }
    }

    #[test]
    fn strength_is_monotone_in_hidden_weight() {
        let mut prev = f64::NEG_INFINITY;
        for i in -30..=30 {
            let x = i as f64 * 0.1;
            let w = theta_tilde_pair(x, 1.0, 0.0);
            assert!(w >= prev, "decrease at {x}");
            prev = w;
        }
    }
}
