//! Inverse power iteration with Rayleigh-quotient shifts for the
//! smallest-magnitude eigenpair of a symmetric matrix.
//!
//! Plain Rayleigh-quotient iteration converges (cubically, for symmetric
//! matrices) to whichever eigenpair is nearest its starting shift, which for
//! a random start is usually not the smallest one. The default start
//! therefore runs zero-shift block inverse iteration with Rayleigh-Ritz
//! extraction until the smallest Ritz pair is isolated from its neighbours
//! by its own residual, and only then hands over to Rayleigh shifts.

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmin, KernelMethod, SpectralResult};
use crate::error::{PadError, Result};

const BLOCK: usize = 4;
/// Hand over to Rayleigh shifts once the Ritz residual is below this
/// fraction of the distance to the next Ritz value.
const ISOLATION: f64 = 0.25;
const SYMMETRY_TOL: f64 = 1e-12;

/// How the iteration picks its first shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IpmStart {
    /// Zero-shift block inverse iteration, then Rayleigh shifts.
    Subspace,
    /// Rayleigh quotient of the random start vector as the first shift.
    Rayleigh,
    /// A caller-supplied first shift, e.g. a prior estimate of the
    /// smallest eigenvalue.
    Shift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    /// Stop when `‖Au - σu‖₂ <= tol * max(1, ‖A‖_F)`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub start: IpmStart,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, seed: 0, start: IpmStart::Subspace }
    }
}

/// Smallest-|λ| eigenpair of the symmetric matrix `a`. `value` holds λ.
pub fn ipm_smallest(a: &DMatrix<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralResult> {
    ipm_smallest_with(a, &IpmOptions { tol, max_iter, seed, ..Default::default() })
}

pub fn ipm_smallest_with(a: &DMatrix<f64>, opts: &IpmOptions) -> Result<SpectralResult> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(PadError::InvalidShape(format!(
            "IPM needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(PadError::param("tol", "must be positive"));
    }
    let fro = a.norm();
    if (a - a.transpose()).norm() > SYMMETRY_TOL * fro.max(f64::MIN_POSITIVE) {
        return Err(PadError::InvalidShape("IPM needs a symmetric matrix".into()));
    }
    let scale = fro.max(1.0);
    let threshold = opts.tol * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut iterations = 0;
    let (mut u, mut sigma) = match opts.start {
        IpmStart::Subspace => {
            let block = BLOCK.min(n);
            let q0 = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
            match block_warm_up(a, q0, scale, threshold, opts.max_iter, &mut iterations)? {
                WarmUp::Converged(u, lambda) => return Ok(finish(u, lambda, iterations)),
                WarmUp::Isolated(u, theta) => (u, theta),
            }
        }
        IpmStart::Rayleigh => {
            let u = random_unit(n, &mut rng);
            let s = rayleigh(a, &u);
            (u, s)
        }
        IpmStart::Shift(s) => (random_unit(n, &mut rng), s),
    };

    let mut residual = residual_norm(a, &u, rayleigh(a, &u));
    if residual <= threshold {
        let lambda = rayleigh(a, &u);
        return Ok(finish(u, lambda, iterations));
    }
    while iterations < opts.max_iter {
        let v = shifted_solve(a, sigma, scale, &DMatrix::from_column_slice(n, 1, u.as_slice()))?;
        u = DVector::from_column_slice(v.as_slice());
        let norm = u.norm();
        u /= norm;
        sigma = rayleigh(a, &u);
        iterations += 1;
        residual = residual_norm(a, &u, sigma);
        if residual <= threshold {
            return Ok(finish(u, sigma, iterations));
        }
    }
    Err(PadError::NoConvergence { iterations, residual })
}

enum WarmUp {
    Converged(DVector<f64>, f64),
    Isolated(DVector<f64>, f64),
}

fn block_warm_up(
    a: &DMatrix<f64>,
    q0: DMatrix<f64>,
    scale: f64,
    threshold: f64,
    max_iter: usize,
    iterations: &mut usize,
) -> Result<WarmUp> {
    let lu = factor_shifted(a, 0.0, scale)?;
    let mut q = q0.qr().q();
    let mut last = None;
    while *iterations < max_iter {
        let mut v = q.clone();
        if !lu.solve_mut(&mut v) || v.iter().any(|x| !x.is_finite()) {
            return Err(PadError::SpectralBackend("zero-shift solve failed".into()));
        }
        q = v.qr().q();
        *iterations += 1;

        let aq = a * &q;
        let mut t = q.tr_mul(&aq);
        t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(t, f64::EPSILON, 1000)
            .ok_or_else(|| PadError::SpectralBackend("Ritz eigenproblem did not converge".into()))?;
        let idx = argmin(eig.eigenvalues.iter().map(|l| l.abs()));
        let theta = eig.eigenvalues[idx];
        let u = (&q * eig.eigenvectors.column(idx)).normalize();
        let residual = residual_norm(a, &u, theta);
        if residual <= threshold {
            return Ok(WarmUp::Converged(u, theta));
        }
        let gap = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != idx)
            .map(|(_, &l)| (l - theta).abs())
            .fold(f64::INFINITY, f64::min);
        if residual < ISOLATION * gap {
            return Ok(WarmUp::Isolated(u, theta));
        }
        last = Some((u, theta));
    }
    let (u, theta) = last.expect("at least one sweep when max_iter > 0");
    Ok(WarmUp::Isolated(u, theta))
}

fn finish(mut u: DVector<f64>, lambda: f64, iterations: usize) -> SpectralResult {
    u.normalize_mut();
    SpectralResult { vector: u, value: lambda, iterations, method: KernelMethod::Ipm, degraded: false }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

fn rayleigh(a: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    u.dot(&(a * u))
}

fn residual_norm(a: &DMatrix<f64>, u: &DVector<f64>, sigma: f64) -> f64 {
    (a * u - u * sigma).norm()
}

/// LU of `A - shift I`. An exactly singular factorization is retried once
/// with the shift moved by `1e-10 (|shift| + max(1, ‖A‖_F))`.
fn factor_shifted(a: &DMatrix<f64>, shift: f64, scale: f64) -> Result<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let lu = (a - &id * shift).lu();
    if lu.is_invertible() {
        return Ok(lu);
    }
    let moved = shift + 1e-10 * (shift.abs() + scale);
    let lu = (a - &id * moved).lu();
    if lu.is_invertible() {
        Ok(lu)
    } else {
        Err(PadError::SpectralBackend(format!("A - σI singular at σ={shift:e} after regularization")))
    }
}

fn shifted_solve(a: &DMatrix<f64>, shift: f64, scale: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = factor_shifted(a, shift, scale)?;
    let mut v = rhs.clone();
    if lu.solve_mut(&mut v) && v.iter().all(|x| x.is_finite()) && v.norm() > 0.0 {
        return Ok(v);
    }
    // Overflow on a numerically exact shift: move the shift and retry once.
    let moved = shift + 1e-10 * (shift.abs() + scale);
    let lu = factor_shifted(a, moved, scale)?;
    let mut v = rhs.clone();
    if lu.solve_mut(&mut v) && v.iter().all(|x| x.is_finite()) && v.norm() > 0.0 {
        Ok(v)
    } else {
        Err(PadError::SpectralBackend(format!("shifted solve failed at σ={shift:e}")))
    }
}
