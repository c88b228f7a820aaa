//! Spectral kernels behind the detector: epsilon-rank, the Gram product,
//! approximate left-kernel vectors of a trajectory matrix, and rank-r
//! projectors onto its dominant left singular subspace.

mod ipm;
mod projector;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{PadError, Result};
use crate::series::{step_threshold, TrajectoryMatrix};

pub use ipm::{ipm_smallest, ipm_smallest_with, IpmOptions, IpmStart};
pub use projector::{projector_from_rank, Projector, RankProjection};

/// Backend used to extract the kernel vector `p`.
/// Serialized under the same names the command line accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelMethod {
    /// Inverse power iteration with Rayleigh shifts on `H Hᵀ`.
    Ipm,
    /// Dense symmetric eigendecomposition of `H Hᵀ`.
    SymmetricEig,
    /// Full SVD of `H Hᵀ`.
    SvdGram,
    /// SVD of `H` itself.
    SvdDirect,
}

impl KernelMethod {
    pub const ALL: [KernelMethod; 4] = [
        KernelMethod::Ipm,
        KernelMethod::SymmetricEig,
        KernelMethod::SvdGram,
        KernelMethod::SvdDirect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelMethod::Ipm => "ipm",
            KernelMethod::SymmetricEig => "eigh",
            KernelMethod::SvdGram => "svd-gram",
            KernelMethod::SvdDirect => "svd",
        }
    }

    /// Whether the backend works on the Gram matrix rather than on `H`.
    pub fn uses_gram(self) -> bool {
        !matches!(self, KernelMethod::SvdDirect)
    }
}

impl fmt::Display for KernelMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelMethod {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ipm" => Ok(KernelMethod::Ipm),
            "eigh" | "symmetric-eig" | "eig" => Ok(KernelMethod::SymmetricEig),
            "svd-gram" | "svd_gram" | "svd(hh*)" => Ok(KernelMethod::SvdGram),
            "svd" | "svd-direct" | "svd_direct" | "svd(h)" => Ok(KernelMethod::SvdDirect),
            other => Err(PadError::param(
                "method",
                format!("unknown method {other:?} (expected ipm, eigh, svd-gram or svd)"),
            )),
        }
    }
}

impl Serialize for KernelMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for KernelMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A unit vector together with the spectral quantity it was extracted for.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub vector: DVector<f64>,
    /// For [`kernel_vector`] this is the achieved residual `‖Hᵀp‖₂`; for
    /// [`ipm_smallest`] it is the eigenvalue estimate.
    pub value: f64,
    pub iterations: usize,
    pub method: KernelMethod,
    /// Set by [`kernel_vector`] when `value` exceeds the requested `nu`.
    pub degraded: bool,
}

/// Parameters shared by all kernel backends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Residual tolerance on `‖Hᵀp‖₂`; results above it are marked degraded.
    pub nu: f64,
    /// Relative residual tolerance for the IPM path.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub ipm_start: IpmStart,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            nu: f64::INFINITY,
            tol: 1e-10,
            max_iter: 200,
            seed: 0,
            ipm_start: IpmStart::Subspace,
        }
    }
}

/// `rk_delta`: number of singular values strictly above `delta`.
pub fn epsilon_rank(singular_values: &[f64], delta: f64) -> Result<usize> {
    if singular_values.windows(2).any(|w| w[0] < w[1]) {
        return Err(PadError::UnsortedInput("singular values must be nonincreasing"));
    }
    Ok(singular_values
        .iter()
        .map(|&s| usize::from(step_threshold(s, delta)))
        .sum())
}

/// `H Hᵀ`, symmetrized so the result is exactly symmetric.
pub fn gram(h: &TrajectoryMatrix) -> DMatrix<f64> {
    let data = h.data();
    let mut g = data * data.transpose();
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = avg;
            g[(j, i)] = avg;
        }
    }
    g
}

/// Unit vector approximately minimizing `‖Hᵀp‖₂`.
///
/// `value` on the result is the achieved residual `‖Hᵀp‖₂`, computed
/// directly from `H` for every backend. The sign is fixed so that the
/// largest-magnitude entry of `p` is positive.
pub fn kernel_vector(
    h: &TrajectoryMatrix,
    method: KernelMethod,
    opts: &KernelOptions,
) -> Result<SpectralResult> {
    if opts.nu.is_nan() || opts.nu <= 0.0 {
        return Err(PadError::param("nu", "must be positive"));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(PadError::param("tol", "must be positive"));
    }
    let (mut p, iterations) = match method {
        KernelMethod::Ipm => {
            let g = gram(h);
            let ipm_opts = IpmOptions {
                tol: opts.tol,
                max_iter: opts.max_iter,
                seed: opts.seed,
                start: opts.ipm_start,
            };
            let r = ipm_smallest_with(&g, &ipm_opts)?;
            (r.vector, r.iterations)
        }
        KernelMethod::SymmetricEig => {
            let g = gram(h);
            (smallest_eigenvector(g)?, 1)
        }
        KernelMethod::SvdGram => {
            let g = gram(h);
            (smallest_left_singular_vector(g)?, 1)
        }
        KernelMethod::SvdDirect => (smallest_left_singular_vector(padded(h.data()))?, 1),
    };
    if p.iter().any(|v| !v.is_finite()) {
        return Err(PadError::SpectralBackend(format!("{method} produced a non-finite kernel vector")));
    }
    normalize_sign(&mut p);
    let value = h.data().tr_mul(&p).norm();
    if !value.is_finite() {
        return Err(PadError::SpectralBackend(format!(
            "residual of the {method} kernel vector overflows; rescale the input"
        )));
    }
    Ok(SpectralResult { vector: p, value, iterations, method, degraded: value > opts.nu })
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let Some((idx, _)) = v
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, m)) if x.abs() <= m => best,
            _ => Some((i, x.abs())),
        })
    else {
        return;
    };
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Zero-pads a wide-or-tall matrix to at least as many columns as rows, so
/// its SVD carries a full set of left singular vectors. Zero columns leave
/// `H Hᵀ` and the left singular vectors unchanged.
pub(crate) fn padded(h: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = h.shape();
    if cols >= rows {
        return h.clone();
    }
    let mut out = DMatrix::zeros(rows, rows);
    out.view_mut((0, 0), (rows, cols)).copy_from(h);
    out
}

fn svd_iteration_cap(m: &DMatrix<f64>) -> usize {
    100 * m.nrows().max(m.ncols()).max(10)
}

/// SVD with singular values sorted descending.
pub(crate) fn try_svd(m: DMatrix<f64>, compute_u: bool, compute_v: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let cap = svd_iteration_cap(&m);
    SVD::try_new(m, compute_u, compute_v, f64::EPSILON, cap)
        .ok_or_else(|| PadError::SpectralBackend("SVD did not converge".into()))
}

fn smallest_left_singular_vector(m: DMatrix<f64>) -> Result<DVector<f64>> {
    let svd = try_svd(m, true, false)?;
    let u = svd.u.as_ref().expect("u requested");
    let idx = argmin(svd.singular_values.iter().copied());
    Ok(u.column(idx).normalize())
}

fn smallest_eigenvector(g: DMatrix<f64>) -> Result<DVector<f64>> {
    let cap = svd_iteration_cap(&g);
    let eig = SymmetricEigen::try_new(g, f64::EPSILON, cap)
        .ok_or_else(|| PadError::SpectralBackend("symmetric eigendecomposition did not converge".into()))?;
    let idx = argmin(eig.eigenvalues.iter().copied());
    Ok(eig.eigenvectors.column(idx).normalize())
}

pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{build_trajectory, TimeSeries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn overflowing_input_is_a_backend_error() {
        let v: Vec<f64> = (0..200).map(|t| if t % 7 == 0 { 1e200 } else { 1.0 }).collect();
        let h = build_trajectory(&TimeSeries::new(v).unwrap(), 10, 150).unwrap();
        for m in KernelMethod::ALL {
            let e = kernel_vector(&h, m, &KernelOptions::default()).unwrap_err();
            assert!(e.is_numerical(), "{m}: {e}");
        }
    }

    #[test]
    fn serde_uses_cli_names() {
        for m in KernelMethod::ALL {
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
            assert_eq!(serde_json::from_str::<KernelMethod>(&json).unwrap(), m);
        }
        assert_eq!(serde_json::from_str::<KernelMethod>("\"svd-direct\"").unwrap(), KernelMethod::SvdDirect);
        assert!(serde_json::from_str::<KernelMethod>("\"lu\"").is_err());
    }

    fn random_hankel(lag: usize, train_len: usize, seed: u64) -> TrajectoryMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..train_len).map(|_| StandardNormal.sample(&mut rng)).collect();
        build_trajectory(&TimeSeries::new(v).unwrap(), lag, train_len).unwrap()
    }

    #[test]
    fn epsilon_rank_examples() {
        assert_eq!(epsilon_rank(&[3.0, 2.0, 1.0], 1.5).unwrap(), 2);
        assert_eq!(epsilon_rank(&[1.0, 1.0, 1.0], 1.0).unwrap(), 0);
        let n = 7;
        let sv = DMatrix::<f64>::identity(n, n).singular_values();
        assert_eq!(epsilon_rank(sv.as_slice(), 0.5).unwrap(), n);
        assert!(matches!(epsilon_rank(&[1.0, 2.0], 0.5), Err(PadError::UnsortedInput(_))));
    }

    #[test]
    fn gram_examples() {
        let id = TrajectoryMatrix::from_matrix(DMatrix::identity(2, 2)).unwrap();
        assert_eq!(gram(&id), DMatrix::identity(2, 2));
        let h = TrajectoryMatrix::from_matrix(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(gram(&h), DMatrix::from_row_slice(2, 2, &[14.0, 20.0, 20.0, 29.0]));
        let c = build_trajectory(&TimeSeries::new(vec![1.5; 6]).unwrap(), 3, 6).unwrap();
        let sv = gram(&c).singular_values();
        assert!(sv[1] < 1e-12 * sv[0]);
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let g = gram(&random_hankel(17, 90, 3));
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn method_names_round_trip() {
        for m in KernelMethod::ALL {
            assert_eq!(m.as_str().parse::<KernelMethod>().unwrap(), m);
        }
        assert!("qr".parse::<KernelMethod>().is_err());
    }

    #[test]
    fn exact_left_null_vector_is_recovered() {
        // x_{t+2} = x_{t+1} - x_t: row 3 = row 2 - row 1, so (1, -1, 1)/√3 spans ker(Hᵀ).
        let mut x = vec![0.3, 1.7];
        while x.len() < 40 {
            let n = x.len();
            x.push(x[n - 1] - x[n - 2]);
        }
        let h = build_trajectory(&TimeSeries::new(x).unwrap(), 3, 40).unwrap();
        let sigma_1 = h.data().singular_values()[0];
        for m in KernelMethod::ALL {
            let r = kernel_vector(&h, m, &KernelOptions::default()).unwrap();
            assert!(r.value <= 1e-10 * sigma_1, "{m}: residual {}", r.value);
            let expected = DVector::from_vec(vec![1.0, -1.0, 1.0]).normalize();
            assert!((r.vector.dot(&expected).abs() - 1.0).abs() < 1e-10, "{m}");
            assert!((r.vector.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn methods_agree_on_gapped_spectrum() {
        let h = random_hankel(30, 229, 11);
        let sv = h.data().singular_values();
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sorted[28] - sorted[29] > 1e-6 * sorted[0]);
        let results: Vec<_> = KernelMethod::ALL
            .iter()
            .map(|&m| kernel_vector(&h, m, &KernelOptions::default()).unwrap())
            .collect();
        for a in &results {
            for b in &results {
                assert!(a.vector.dot(&b.vector).abs() >= 1.0 - 1e-6, "{} vs {}", a.method, b.method);
            }
        }
        for r in &results {
            if matches!(r.method, KernelMethod::SvdDirect | KernelMethod::SymmetricEig) {
                assert!((r.value - sorted[29]).abs() <= 1e-8 * sorted[0]);
            }
        }
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let h = random_hankel(12, 80, 5);
        for m in KernelMethod::ALL {
            let p = kernel_vector(&h, m, &KernelOptions::default()).unwrap().vector;
            let (idx, _) = p.iamax_full();
            assert!(p[idx] > 0.0);
        }
    }

    #[test]
    fn degraded_flag_follows_nu() {
        let h = random_hankel(8, 60, 2);
        let loose = kernel_vector(&h, KernelMethod::SvdDirect, &KernelOptions::default()).unwrap();
        assert!(!loose.degraded);
        let tight = KernelOptions { nu: loose.value * 0.5, ..Default::default() };
        let r = kernel_vector(&h, KernelMethod::SvdDirect, &tight).unwrap();
        assert!(r.degraded);
        assert_eq!(r.vector, loose.vector);
    }

    #[test]
    fn tall_trajectory_has_kernel() {
        // M < L: ker(Hᵀ) has dimension at least L - M.
        let h = random_hankel(10, 14, 9);
        assert!(h.columns() < h.lag());
        for m in KernelMethod::ALL {
            let r = kernel_vector(&h, m, &KernelOptions::default()).unwrap();
            assert!(r.value < 1e-6, "{m}: {}", r.value);
        }
    }

    #[test]
    fn exact_kernel_satisfies_any_nu() {
        let h = build_trajectory(&TimeSeries::new(vec![2.0; 20]).unwrap(), 4, 20).unwrap();
        let q = DVector::from_vec(vec![1.0, -1.0, 0.0, 0.0]).normalize();
        let residual = h.data().tr_mul(&q).norm();
        assert_eq!(residual, 0.0);
        for nu in [1e-300, 1e-12, 1.0] {
            assert!(residual <= nu);
        }
    }
}
