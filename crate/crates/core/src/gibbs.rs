//! Single-site Gibbs sampling of `(f_0, f_1, ..., f_p)`.
//!
//! The chain starts from all `+1`, runs `burn_in_sweeps` full sweeps, then
//! records one configuration every `thin_site_updates` single-site updates.
//! Node 0 becomes the truth column and nodes `1..=p` the label columns.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`; chain `c` of a multi-chain run uses stream `c` of
//! that generator, so output is reproducible across platforms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate_model, IsingModelSpec, LabelMatrix};
use crate::numeric::logistic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Nodes `0..=p` in index order every sweep.
    #[default]
    Fixed,
    /// A fresh uniform permutation of `0..=p` every sweep.
    RandomPermutation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsConfig {
    pub burn_in_sweeps: usize,
    /// Single-site updates between recorded samples; `None` means `2(p+1)`.
    pub thin_site_updates: Option<usize>,
    pub n_samples: usize,
    pub seed: u64,
    pub update_order: UpdateOrder,
}

impl GibbsConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        GibbsConfig {
            burn_in_sweeps: 1000,
            thin_site_updates: None,
            n_samples,
            seed,
            update_order: UpdateOrder::Fixed,
        }
    }

    fn thinning(&self, p: usize) -> usize {
        self.thin_site_updates.unwrap_or(2 * (p + 1))
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if self.thin_site_updates == Some(0) {
            return Err(Error::InvalidArgument("thin_site_updates must be at least 1".into()));
        }
        Ok(())
    }
}

/// Raw chain output: one row of `p + 1` spins per recorded sample, node 0 first.
fn run_chain(spec: &IsingModelSpec, cfg: &GibbsConfig, n_samples: usize, stream: u64) -> Vec<Vec<i8>> {
    let p = spec.p();
    let adj = spec.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut state = vec![1i8; p + 1];
    let mut order: Vec<usize> = (0..=p).collect();
    let thin = cfg.thinning(p);

    let update = |s: usize, state: &mut [i8], rng: &mut ChaCha8Rng| {
        let mut field: f64 = adj[s].iter().map(|&(t, w)| w * state[t] as f64).sum();
        if s == 0 {
            field += spec.theta0();
        }
        let plus = logistic(2.0 * field);
        state[s] = if rng.gen::<f64>() < plus { 1 } else { -1 };
    };

    let next_sweep = |order: &mut Vec<usize>, rng: &mut ChaCha8Rng| {
        if cfg.update_order == UpdateOrder::RandomPermutation {
            order.shuffle(rng);
        }
    };

    for _ in 0..cfg.burn_in_sweeps {
        next_sweep(&mut order, &mut rng);
        for &node in &order {
            update(node, &mut state, &mut rng);
        }
    }

    let mut out = Vec::with_capacity(n_samples);
    let mut pos = p + 1;
    let mut since = 0;
    while out.len() < n_samples {
        if pos > p {
            next_sweep(&mut order, &mut rng);
            pos = 0;
        }
        update(order[pos], &mut state, &mut rng);
        pos += 1;
        since += 1;
        if since == thin {
            out.push(state.clone());
            since = 0;
        }
    }
    out
}

fn to_label_matrix(rows: Vec<Vec<i8>>, p: usize) -> Result<LabelMatrix> {
    let n = rows.len();
    let mut columns = vec![Vec::with_capacity(n); p];
    let mut truth = Vec::with_capacity(n);
    for row in rows {
        truth.push(row[0]);
        for (s, col) in columns.iter_mut().enumerate() {
            col.push(row[s + 1]);
        }
    }
    LabelMatrix::from_columns(columns)?.with_truth(truth)
}

fn check_spec(spec: &IsingModelSpec) -> Result<()> {
    let v = validate_model(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidModel(v))
    }
}

/// Draw `cfg.n_samples` rows from one chain. Requires a valid model with `p >= 2`.
pub fn sample(spec: &IsingModelSpec, cfg: &GibbsConfig) -> Result<LabelMatrix> {
    check_spec(spec)?;
    sample_unchecked(spec, cfg)
}

/// Like [`sample`] but skips the G1-G3 check, for arbitrary test models.
pub fn sample_unchecked(spec: &IsingModelSpec, cfg: &GibbsConfig) -> Result<LabelMatrix> {
    cfg.validate()?;
    let rows = run_chain(spec, cfg, cfg.n_samples, 0);
    to_label_matrix(rows, spec.p())
}

/// Split `cfg.n_samples` over `chains` independent chains (streams `0..chains`),
/// run them in parallel and concatenate in chain order.
pub fn sample_chains(spec: &IsingModelSpec, cfg: &GibbsConfig, chains: usize) -> Result<LabelMatrix> {
    check_spec(spec)?;
    cfg.validate()?;
    if chains == 0 {
        return Err(Error::InvalidArgument("need at least one chain".into()));
    }
    let base = cfg.n_samples / chains;
    let extra = cfg.n_samples % chains;
    let rows: Vec<Vec<i8>> = (0..chains)
        .into_par_iter()
        .map(|c| run_chain(spec, cfg, base + usize::from(c < extra), c as u64))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    to_label_matrix(rows, spec.p())
}

/// Raw rows including node 0, for distribution checks on tiny models.
pub fn sample_rows(spec: &IsingModelSpec, cfg: &GibbsConfig) -> Result<Vec<Vec<i8>>> {
    cfg.validate()?;
    Ok(run_chain(spec, cfg, cfg.n_samples, 0))
}
