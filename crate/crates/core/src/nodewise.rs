//! Nodewise ℓ1-regularized logistic regression.
//!
//! For a response classifier `s` and the remaining classifiers `t != s` the
//! estimator minimizes
//!
//! ```text
//! (1/n) Σ_i log(e^{m_i} + e^{-m_i}) - Σ_t θ_t μ_st + λ ‖θ‖₁,   m_i = Σ_t θ_t f_t^(i)
//! ```
//!
//! with `μ_st = (1/n) Σ_i f_s^(i) f_t^(i)`. The population minimizer is the
//! approximating pairwise weight itself (not twice it), so `θ̂_st` estimates
//! it directly.
//!
//! The solver is a proximal Newton method on a working set (nonzero
//! coordinates plus those violating the optimality conditions). Each step
//! solves the local quadratic lasso by coordinate descent and backtracks on
//! the true objective; a plain majorizer pass is the fallback when the line
//! search stalls. Soft-thresholding yields exact zeros.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::approx::approximate;
use crate::error::{Error, Result};
use crate::model::{IsingModelSpec, LabelMatrix, NeighborhoodMap};
use crate::numeric::log_two_cosh;
use crate::oracle::DEFAULT_NODE_CAP;

/// `sqrt(log p / n)`.
pub fn default_lambda(n: usize, p: usize) -> f64 {
    ((p as f64).ln() / n as f64).sqrt()
}

/// One nodewise regression problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoLogisticProblem {
    response: usize,
    features: Vec<usize>,
    n: usize,
    // column-major n x features.len(), entries +-1
    design: Vec<f64>,
    mu: Vec<f64>,
    lambda: f64,
}

impl LassoLogisticProblem {
    /// Regress classifier `s` on all the other columns of `labels`.
    pub fn new(labels: &LabelMatrix, s: usize, lambda: f64) -> Result<Self> {
        labels.check_nodes(&[s])?;
        let features: Vec<usize> = (1..=labels.p()).filter(|&t| t != s).collect();
        let columns: Vec<&[i8]> = features.iter().map(|&t| labels.column(t)).collect();
        Self::build(s, features, labels.column(s), &columns, lambda)
    }

    /// Build from raw columns; features are numbered `1..=columns.len()`.
    pub fn from_columns(response: &[i8], columns: &[Vec<i8>], lambda: f64) -> Result<Self> {
        let refs: Vec<&[i8]> = columns.iter().map(Vec::as_slice).collect();
        Self::build(0, (1..=columns.len()).collect(), response, &refs, lambda)
    }

    fn build(response: usize, features: Vec<usize>, y: &[i8], columns: &[&[i8]], lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty response".into()));
        }
        let mut design = Vec::with_capacity(n * columns.len());
        let mut mu = Vec::with_capacity(columns.len());
        for col in columns {
            if col.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: col.len(),
                });
            }
            let mut acc = 0i64;
            for (&a, &b) in col.iter().zip(y) {
                if a.abs() != 1 || b.abs() != 1 {
                    return Err(Error::Labels("design entries must be -1 or 1".into()));
                }
                design.push(a as f64);
                acc += (a * b) as i64;
            }
            mu.push(acc as f64 / n as f64);
        }
        Ok(LassoLogisticProblem {
            response,
            features,
            n,
            design,
            mu,
            lambda,
        })
    }

    pub fn response(&self) -> usize {
        self.response
    }

    /// Node ids of the coefficients, in order.
    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Empirical cross-moments `μ_st`, one per feature.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(LassoLogisticProblem { lambda, ..self.clone() })
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.design[j * self.n..(j + 1) * self.n]
    }

    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (j, &w) in theta.iter().enumerate() {
            if w != 0.0 {
                for (mi, x) in m.iter_mut().zip(self.column(j)) {
                    *mi += w * x;
                }
            }
        }
        m
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        if theta.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("theta must be finite".into()));
        }
        Ok(())
    }

    fn smooth_from_margins(&self, theta: &[f64], m: &[f64]) -> f64 {
        let loss = m.iter().map(|&x| log_two_cosh(x)).sum::<f64>() / self.n as f64;
        let linear: f64 = theta.iter().zip(&self.mu).map(|(a, b)| a * b).sum();
        loss - linear
    }

    fn gradient_from_margins(&self, m: &[f64]) -> Vec<f64> {
        let t: Vec<f64> = m.iter().map(|x| x.tanh()).collect();
        (0..self.dim())
            .map(|j| {
                let dot: f64 = t.iter().zip(self.column(j)).map(|(a, b)| a * b).sum();
                dot / self.n as f64 - self.mu[j]
            })
            .collect()
    }
}

/// Penalized objective at `theta`.
pub fn objective(theta: &[f64], problem: &LassoLogisticProblem) -> Result<f64> {
    problem.check_dim(theta)?;
    let m = problem.margins(theta);
    let l1: f64 = theta.iter().map(|w| w.abs()).sum();
    Ok(problem.smooth_from_margins(theta, &m) + problem.lambda * l1)
}

/// Gradient of the smooth (unpenalized) part at `theta`.
pub fn smooth_gradient(theta: &[f64], problem: &LassoLogisticProblem) -> Result<Vec<f64>> {
    problem.check_dim(theta)?;
    Ok(problem.gradient_from_margins(&problem.margins(theta)))
}

/// Largest violation of the ℓ1 optimality conditions.
pub fn kkt_residual(theta: &[f64], gradient: &[f64], lambda: f64) -> f64 {
    theta
        .iter()
        .zip(gradient)
        .map(|(&w, &g)| {
            if w == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * w.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoLogisticSolution {
    /// Coefficients in the order of [`LassoLogisticProblem::features`].
    pub theta_hat: Vec<f64>,
    pub objective_value: f64,
    pub kkt_residual: f64,
    /// Outer (Newton) iterations performed.
    pub iterations: usize,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimize the penalized objective to KKT residual `opts.tol`.
pub fn solve(problem: &LassoLogisticProblem, opts: SolverOptions) -> Result<LassoLogisticSolution> {
    let d = problem.dim();
    let n = problem.n as f64;
    let lambda = problem.lambda;
    let mut theta = vec![0.0; d];
    let mut m = vec![0.0; problem.n];
    let mut grad = problem.gradient_from_margins(&m);
    let mut residual = kkt_residual(&theta, &grad, lambda);
    let mut value = problem.smooth_from_margins(&theta, &m);
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let work: Vec<usize> = (0..d).filter(|&j| theta[j] != 0.0 || grad[j].abs() > lambda).collect();
        let k = work.len();

        // local quadratic model on the working set
        let curv: Vec<f64> = m.iter().map(|x| 1.0 - x.tanh().powi(2)).collect();
        let mut hess = vec![0.0; k * k];
        for a in 0..k {
            let xa = problem.column(work[a]);
            for b in a..k {
                let xb = problem.column(work[b]);
                let h: f64 = curv.iter().zip(xa).zip(xb).map(|((c, u), v)| c * u * v).sum::<f64>() / n;
                hess[a * k + b] = h;
                hess[b * k + a] = h;
            }
            hess[a * k + a] += 1e-12;
        }
        let g: Vec<f64> = work.iter().map(|&j| grad[j]).collect();
        let base: Vec<f64> = work.iter().map(|&j| theta[j]).collect();
        let target = quadratic_lasso(&hess, &g, &base, lambda);
        let step: Vec<f64> = target.iter().zip(&base).map(|(a, b)| a - b).collect();

        // predicted decrease of the penalized model
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let decrease = g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>() + lambda * (l1(&target) - l1(&base));
        let old_total = value + lambda * l1(&base);

        let mut dm = vec![0.0; problem.n];
        for (&j, &s) in work.iter().zip(&step) {
            if s != 0.0 {
                for (v, x) in dm.iter_mut().zip(problem.column(j)) {
                    *v += s * x;
                }
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial_m: Vec<f64> = m.iter().zip(&dm).map(|(a, b)| a + t * b).collect();
            let trial: Vec<f64> = base.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let mut full = theta.clone();
            for (&j, &w) in work.iter().zip(&trial) {
                full[j] = w;
            }
            let smooth = problem.smooth_from_margins(&full, &trial_m);
            if smooth + lambda * l1(&trial) <= old_total + 1e-4 * t * decrease.min(0.0) {
                theta = full;
                m = trial_m;
                value = smooth;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            value = coordinate_pass(problem, &mut theta, &mut m);
        }
        grad = problem.gradient_from_margins(&m);
        residual = kkt_residual(&theta, &grad, lambda);
    }

    let l1: f64 = theta.iter().map(|w| w.abs()).sum();
    let solution = LassoLogisticSolution {
        objective_value: value + lambda * l1,
        theta_hat: theta,
        kkt_residual: residual,
        iterations,
    };
    if residual > opts.tol {
        return Err(Error::NonConvergence {
            node: None,
            solution: Box::new(solution),
        });
    }
    Ok(solution)
}

/// Minimize `g·(x - x0) + ½ (x - x0)ᵀ H (x - x0) + λ‖x‖₁` by cyclic
/// coordinate descent; `H` is row-major and positive definite.
fn quadratic_lasso(hess: &[f64], g: &[f64], x0: &[f64], lambda: f64) -> Vec<f64> {
    let k = g.len();
    let mut x = x0.to_vec();
    // r = g + H (x - x0)
    let mut r = g.to_vec();
    for _ in 0..10_000 {
        let mut biggest = 0.0f64;
        for j in 0..k {
            let hjj = hess[j * k + j];
            let z = hjj * x[j] - r[j];
            let new = soft_threshold(z, lambda) / hjj;
            let delta = new - x[j];
            if delta != 0.0 {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri += hess[i * k + j] * delta;
                }
                x[j] = new;
                biggest = biggest.max(delta.abs());
            }
        }
        if biggest < 1e-13 {
            break;
        }
    }
    x
}

/// One cyclic pass of unit-curvature majorizer steps. Never increases the
/// objective. Returns the new smooth value.
#[allow(clippy::needless_range_loop)]
fn coordinate_pass(problem: &LassoLogisticProblem, theta: &mut [f64], m: &mut [f64]) -> f64 {
    let n = problem.n as f64;
    for j in 0..problem.dim() {
        let x = problem.column(j);
        let g = m.iter().zip(x).map(|(a, b)| a.tanh() * b).sum::<f64>() / n - problem.mu[j];
        let new = soft_threshold(theta[j] - g, problem.lambda);
        let delta = new - theta[j];
        if delta != 0.0 {
            for (mi, xi) in m.iter_mut().zip(x) {
                *mi += delta * xi;
            }
            theta[j] = new;
        }
    }
    problem.smooth_from_margins(theta, m)
}

/// How to reconcile the two directed estimates of an edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Symmetrize {
    /// Keep an edge found from either endpoint.
    #[default]
    Or,
    /// Keep an edge only when found from both endpoints.
    And,
}

impl std::str::FromStr for Symmetrize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "or" => Ok(Symmetrize::Or),
            "and" => Ok(Symmetrize::And),
            other => Err(Error::InvalidArgument(format!("unknown symmetrization rule '{other}'"))),
        }
    }
}

/// Per-node solutions, in node order `1..=p`.
pub fn nodewise_solutions(
    labels: &LabelMatrix,
    lambda: f64,
    opts: SolverOptions,
) -> Result<Vec<(LassoLogisticProblem, LassoLogisticSolution)>> {
    if labels.n() < 2 {
        return Err(Error::InvalidArgument("need at least two instances".into()));
    }
    (1..=labels.p())
        .into_par_iter()
        .map(|s| {
            let problem = LassoLogisticProblem::new(labels, s, lambda)?;
            let sol = solve(&problem, opts).map_err(|e| e.at_node(s))?;
            Ok((problem, sol))
        })
        .collect()
}

/// Combine directed estimates into a symmetric neighborhood map. Weights of
/// kept edges are the average of the available nonzero estimates.
pub fn symmetrize(p: usize, directed: &[BTreeMap<usize, f64>], rule: Symmetrize) -> Result<NeighborhoodMap> {
    let mut map = NeighborhoodMap::new(p);
    for s in 1..=p {
        for t in s + 1..=p {
            let a = directed[s - 1].get(&t).copied();
            let b = directed[t - 1].get(&s).copied();
            let w = match (a, b, rule) {
                (Some(x), Some(y), _) => Some(0.5 * (x + y)),
                (Some(x), None, Symmetrize::Or) | (None, Some(x), Symmetrize::Or) => Some(x),
                _ => None,
            };
            if let Some(w) = w.filter(|w| *w != 0.0) {
                map.insert_symmetric(s, t, w)?;
            }
        }
    }
    Ok(map)
}

/// Estimate every classifier's neighborhood and reconcile the directions.
pub fn neighborhoods(labels: &LabelMatrix, lambda: f64, rule: Symmetrize) -> Result<NeighborhoodMap> {
    neighborhoods_with(labels, lambda, rule, SolverOptions::default())
}

pub fn neighborhoods_with(
    labels: &LabelMatrix,
    lambda: f64,
    rule: Symmetrize,
    opts: SolverOptions,
) -> Result<NeighborhoodMap> {
    let directed: Vec<BTreeMap<usize, f64>> = nodewise_solutions(labels, lambda, opts)?
        .into_iter()
        .map(|(problem, sol)| {
            problem
                .features()
                .iter()
                .zip(&sol.theta_hat)
                .filter(|(_, w)| **w != 0.0)
                .map(|(&t, &w)| (t, w))
                .collect()
        })
        .collect();
    symmetrize(labels.p(), &directed, rule)
}

/// Exact Fisher-information diagnostics of one node under the approximating model.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherDiagnostics {
    pub node: usize,
    /// True neighborhood of the node under the approximation.
    pub neighborhood: Vec<usize>,
    /// Smallest eigenvalue of the information restricted to the neighborhood
    /// (`+inf` when the neighborhood is empty).
    pub lambda_min: f64,
    /// Largest eigenvalue of `E[f f^T]` over the other nodes.
    pub lambda_max_second_moment: f64,
    /// `‖I_{N^c N} I_{NN}^{-1}‖_∞`.
    pub irrepresentability: f64,
    /// `1 - irrepresentability`; nonpositive values are flagged.
    pub alpha: f64,
    pub flags: Vec<String>,
}

/// Compute [`FisherDiagnostics`] by exact enumeration of the approximation.
pub fn fisher_diagnostics(spec: &IsingModelSpec, s: usize) -> Result<FisherDiagnostics> {
    fisher_diagnostics_with_cap(spec, s, DEFAULT_NODE_CAP)
}

pub fn fisher_diagnostics_with_cap(spec: &IsingModelSpec, s: usize, cap: usize) -> Result<FisherDiagnostics> {
    let p = spec.p();
    if s == 0 || s > p {
        return Err(Error::InvalidArgument(format!("node {s} not in 1..={p}")));
    }
    let model = approximate(spec)?;
    let dist = model.exact_distribution(cap)?;
    let others: Vec<usize> = (1..=p).filter(|&t| t != s).collect();
    let weights: Vec<f64> = others.iter().map(|&t| model.weight(s, t)).collect();
    let k = others.len();

    let mut info = DMatrix::<f64>::zeros(k, k);
    let mut second = DMatrix::<f64>::zeros(k, k);
    let mut row = vec![0.0; k];
    dist.for_each_state(|y, pr| {
        for (r, &t) in row.iter_mut().zip(&others) {
            *r = y[t - 1];
        }
        let eta: f64 = row.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let h = 1.0 / eta.cosh().powi(2);
        for a in 0..k {
            for b in 0..k {
                let yy = pr * row[a] * row[b];
                info[(a, b)] += h * yy;
                second[(a, b)] += yy;
            }
        }
    });

    let inside: Vec<usize> = (0..k).filter(|&a| weights[a] != 0.0).collect();
    let outside: Vec<usize> = (0..k).filter(|&a| weights[a] == 0.0).collect();
    let lambda_max_second_moment = if k == 0 {
        0.0
    } else {
        SymmetricEigen::new(second).eigenvalues.max()
    };
    let mut flags = Vec::new();

    let (lambda_min, irrepresentability) = if inside.is_empty() {
        flags.push("empty neighborhood: lambda_min reported as +inf".to_owned());
        (f64::INFINITY, 0.0)
    } else {
        let inn = info.select_rows(&inside).select_columns(&inside);
        let lambda_min = SymmetricEigen::new(inn.clone()).eigenvalues.min();
        let irr = if outside.is_empty() {
            0.0
        } else {
            match inn.try_inverse() {
                Some(inv) => {
                    let cross = info.select_rows(&outside).select_columns(&inside) * inv;
                    cross
                        .row_iter()
                        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                        .fold(0.0, f64::max)
                }
                None => {
                    flags.push("restricted information is singular".to_owned());
                    f64::INFINITY
                }
            }
        };
        (lambda_min, irr)
    };
    let alpha = 1.0 - irrepresentability;
    if alpha <= 0.0 {
        flags.push(format!("irrepresentability fails: alpha = {alpha}"));
    }
    Ok(FisherDiagnostics {
        node: s,
        neighborhood: inside.iter().map(|&a| others[a]).collect(),
        lambda_min,
        lambda_max_second_moment,
        irrepresentability,
        alpha,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::five_expert_graph;
    use crate::gibbs::{sample_unchecked, GibbsConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_columns(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<i8>, Vec<Vec<i8>>) {
        let y: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let cols = (0..d)
            .map(|j| {
                y.iter()
                    .map(|&v| if rng.gen::<f64>() < 0.5 + 0.1 * j as f64 { v } else { -v })
                    .collect()
            })
            .collect();
        (y, cols)
    }

    /// Straight-loop evaluation written independently of the solver code.
    fn naive_objective(theta: &[f64], y: &[i8], cols: &[Vec<i8>], lambda: f64) -> f64 {
        let n = y.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut m = 0.0;
            for (j, c) in cols.iter().enumerate() {
                m += theta[j] * c[i] as f64;
            }
            total += (m.exp() + (-m).exp()).ln();
        }
        let mut linear = 0.0;
        for (j, c) in cols.iter().enumerate() {
            let mu: f64 = (0..n).map(|i| (y[i] * c[i]) as f64).sum::<f64>() / n as f64;
            linear += theta[j] * mu;
        }
        total / n as f64 - linear + lambda * theta.iter().map(|w| w.abs()).sum::<f64>()
    }

    #[test]
    fn objective_at_origin_is_log_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, cols) = random_columns(&mut rng, 30, 4);
        let prob = LassoLogisticProblem::from_columns(&y, &cols, 0.3).unwrap();
        assert!((objective(&[0.0; 4], &prob).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(objective(&[0.0; 3], &prob).is_err());
    }

    #[test]
    fn perfect_agreement_objective_decreases() {
        let y = vec![1, -1, 1, 1, -1];
        let prob = LassoLogisticProblem::from_columns(&y, std::slice::from_ref(&y), 0.0).unwrap();
        let f: Vec<f64> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&w| objective(&[w], &prob).unwrap())
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2]);
    }

    #[test]
    fn objective_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (y, cols) = random_columns(&mut rng, 25, 5);
            let lambda = rng.gen_range(0.0..0.5);
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let prob = LassoLogisticProblem::from_columns(&y, &cols, lambda).unwrap();
            let a = objective(&theta, &prob).unwrap();
            let b = naive_objective(&theta, &y, &cols, lambda);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (y, cols) = random_columns(&mut rng, 40, 4);
            let prob = LassoLogisticProblem::from_columns(&y, &cols, 0.0).unwrap();
            let theta: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let g = smooth_gradient(&theta, &prob).unwrap();
            for j in 0..4 {
                let h = 1e-5;
                let mut up = theta.clone();
                up[j] += h;
                let mut down = theta.clone();
                down[j] -= h;
                let fd = (objective(&up, &prob).unwrap() - objective(&down, &prob).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn large_lambda_gives_exact_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (y, cols) = random_columns(&mut rng, 50, 4);
        let prob = LassoLogisticProblem::from_columns(&y, &cols, 0.0).unwrap();
        let max_mu = prob.mu().iter().map(|m| m.abs()).fold(0.0, f64::max);
        let sol = solve(&prob.with_lambda(max_mu).unwrap(), SolverOptions::default()).unwrap();
        assert_eq!(sol.theta_hat, vec![0.0; 4]);
        assert_eq!(sol.iterations, 0);
        assert!((sol.objective_value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn solution_satisfies_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lambda in [0.005, 0.02, 0.1, 0.3] {
            let (y, cols) = random_columns(&mut rng, 60, 5);
            let prob = LassoLogisticProblem::from_columns(&y, &cols, lambda).unwrap();
            let sol = solve(&prob, SolverOptions::default()).unwrap();
            let g = smooth_gradient(&sol.theta_hat, &prob).unwrap();
            assert!(kkt_residual(&sol.theta_hat, &g, lambda) <= 1e-6);
            assert!((objective(&sol.theta_hat, &prob).unwrap() - sol.objective_value).abs() < 1e-12);
        }
    }

    #[test]
    fn population_minimizer_is_the_pair_weight() {
        // two observed nodes joined by weight 0.5 and no hidden coupling
        let spec = IsingModelSpec::new(2, 0.0, [(1, 2, 0.5)]).unwrap();
        let mut cfg = GibbsConfig::new(20_000, 77);
        cfg.burn_in_sweeps = 100;
        let labels = sample_unchecked(&spec, &cfg).unwrap();
        let prob = LassoLogisticProblem::new(&labels, 1, default_lambda(20_000, 2)).unwrap();
        let sol = solve(&prob, SolverOptions::default()).unwrap();
        assert!((sol.theta_hat[0] - 0.5).abs() < 0.1, "{}", sol.theta_hat[0]);
    }

    #[test]
    fn independent_columns_have_empty_neighborhoods() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cols: Vec<Vec<i8>> = (0..2)
            .map(|_| (0..400).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let labels = LabelMatrix::from_columns(cols).unwrap();
        let nb = neighborhoods(&labels, 0.2, Symmetrize::Or).unwrap();
        assert_eq!(nb.size(1) + nb.size(2), 0);
    }

    #[test]
    fn and_is_a_subset_of_or() {
        let directed = vec![
            BTreeMap::from([(2, 0.4), (3, -0.2)]),
            BTreeMap::from([(1, 0.6)]),
            BTreeMap::new(),
        ];
        let or = symmetrize(3, &directed, Symmetrize::Or).unwrap();
        let and = symmetrize(3, &directed, Symmetrize::And).unwrap();
        assert!((or.weight(1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(or.weight(1, 3), Some(-0.2));
        assert_eq!(and.weight(1, 3), None);
        assert_eq!(and.neighbor_set(1), [2].into());
    }

    #[test]
    fn column_order_only_permutes_the_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (y, cols) = random_columns(&mut rng, 80, 4);
        let prob = LassoLogisticProblem::from_columns(&y, &cols, 0.05).unwrap();
        let rev: Vec<Vec<i8>> = cols.iter().rev().cloned().collect();
        let prob_rev = LassoLogisticProblem::from_columns(&y, &rev, 0.05).unwrap();
        let a = solve(&prob, SolverOptions::default()).unwrap();
        let b = solve(&prob_rev, SolverOptions::default()).unwrap();
        for j in 0..4 {
            assert!((a.theta_hat[j] - b.theta_hat[3 - j]).abs() < 1e-5);
            assert_eq!(a.theta_hat[j] == 0.0, b.theta_hat[3 - j] == 0.0);
        }
        assert_eq!(a, solve(&prob, SolverOptions::default()).unwrap());
    }

    #[test]
    fn doubling_lambda_never_grows_support() {
        let labels = sample_unchecked(&five_expert_graph(), &GibbsConfig::new(800, 9)).unwrap();
        for s in [1, 6, 8] {
            let mut prev = usize::MAX;
            let mut lambda = 0.005;
            while lambda < 1.0 {
                let prob = LassoLogisticProblem::new(&labels, s, lambda).unwrap();
                let sol = solve(&prob, SolverOptions::default()).unwrap();
                let nnz = sol.theta_hat.iter().filter(|w| **w != 0.0).count();
                assert!(nnz <= prev, "node {s}, lambda {lambda}: {nnz} > {prev}");
                prev = nnz;
                lambda *= 2.0;
            }
        }
    }

    #[test]
    fn nonconvergence_reports_best_iterate() {
        let labels = sample_unchecked(&five_expert_graph(), &GibbsConfig::new(300, 10)).unwrap();
        let prob = LassoLogisticProblem::new(&labels, 1, 0.01).unwrap();
        let err = solve(
            &prob,
            SolverOptions {
                tol: 1e-14,
                max_iter: 2,
            },
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { solution, .. } => {
                assert_eq!(solution.iterations, 2);
                assert!(solution.kkt_residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fisher_zero_model_is_degenerate() {
        let spec = IsingModelSpec::new(2, 0.0, []).unwrap();
        let d = fisher_diagnostics(&spec, 1).unwrap();
        assert!(d.neighborhood.is_empty());
        assert_eq!(d.lambda_min, f64::INFINITY);
        assert!(!d.flags.is_empty());
    }

    #[test]
    fn fisher_single_edge_matches_finite_difference_hessian() {
        let w = 0.5;
        let spec = IsingModelSpec::new(2, 0.0, [(1, 2, w)]).unwrap();
        let d = fisher_diagnostics(&spec, 1).unwrap();
        assert_eq!(d.neighborhood, vec![2]);
        // expected conditional log-likelihood of f1 given f2 under the model
        let dist = crate::approx::approximate(&spec)
            .unwrap()
            .exact_distribution(24)
            .unwrap();
        let ell = |theta: f64| {
            dist.expectation(|y| {
                let x = 2.0 * y[0] * theta * y[1];
                x - (1.0 + x.exp()).ln()
            })
        };
        let h = 1e-4;
        let hess = (ell(w + h) - 2.0 * ell(w) + ell(w - h)) / (h * h);
        assert!((d.lambda_min + hess).abs() < 1e-6, "{} vs {}", d.lambda_min, -hess);
        assert!((d.lambda_min - 1.0 / w.cosh().powi(2)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn objective_is_convex(
            seed in 0u64..1000,
            t in 0.01f64..0.99,
            a in prop::collection::vec(-3.0f64..3.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (y, cols) = random_columns(&mut rng, 20, 3);
            let prob = LassoLogisticProblem::from_columns(&y, &cols, 0.1).unwrap();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, z)| t * x + (1.0 - t) * z).collect();
            let lhs = objective(&mid, &prob).unwrap();
            let rhs = t * objective(&a, &prob).unwrap() + (1.0 - t) * objective(&b, &prob).unwrap();
            prop_assert!(lhs <= rhs + 1e-10);
        }
    }
}
