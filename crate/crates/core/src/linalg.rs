//! Dense symmetric power iteration.

/// Leading eigenpair found by [`power_iteration`].
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn mat_vec(a: &[f64], k: usize, x: &[f64], shift: f64, out: &mut [f64]) {
    for i in 0..k {
        let row = &a[i * k..(i + 1) * k];
        out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift * x[i];
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Eigenvector of the largest (algebraic) eigenvalue of the symmetric
/// row-major `k x k` matrix `a`, starting from `start`.
///
/// The iteration runs on `a + c I` with `c` the largest absolute row sum, so
/// every shifted eigenvalue is nonnegative and the algebraically largest one
/// dominates. Stops when successive unit vectors differ by less than `tol` in
/// max norm.
pub fn power_iteration(a: &[f64], k: usize, start: &[f64], max_iter: usize, tol: f64) -> EigenPair {
    assert_eq!(a.len(), k * k);
    assert_eq!(start.len(), k);
    let shift = (0..k)
        .map(|i| a[i * k..(i + 1) * k].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut x = start.to_vec();
    normalize(&mut x);
    let mut next = vec![0.0; k];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        mat_vec(a, k, &x, shift, &mut next);
        if normalize(&mut next) == 0.0 {
            break;
        }
        let delta = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            converged = true;
            break;
        }
    }
    let value = rayleigh(a, k, &x);
    EigenPair {
        value,
        vector: x,
        iterations,
        converged,
    }
}

/// `x^T A x / x^T x`.
pub fn rayleigh(a: &[f64], k: usize, x: &[f64]) -> f64 {
    let mut ax = vec![0.0; k];
    mat_vec(a, k, x, 0.0, &mut ax);
    let num: f64 = ax.iter().zip(x).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
