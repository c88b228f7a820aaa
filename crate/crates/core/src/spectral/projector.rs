use nalgebra::{DMatrix, DVector};

use super::{epsilon_rank, padded, try_svd};
use crate::error::{PadError, Result};
use crate::series::TrajectoryMatrix;

/// Orthogonal projector `P = U_r U_rᵀ` onto the leading `r` left singular
/// vectors of a trajectory matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

impl Projector {
    /// `‖P² - P‖_F`.
    pub fn idempotence_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).norm()
    }

    /// `‖P - Pᵀ‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).norm()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `‖P x - x‖₂`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.matrix * x - x).norm()
    }
}

/// A rank-r projector together with the quantities of the projector bound.
#[derive(Debug, Clone)]
pub struct RankProjection {
    pub projector: Projector,
    pub eps: f64,
    /// Singular values of `H`, nonincreasing.
    pub singular_values: Vec<f64>,
    /// `sqrt(r (min(L, M) - r))`.
    pub s_r: f64,
    /// `min(L, M)`.
    pub min_dim: usize,
}

impl RankProjection {
    pub fn rank(&self) -> usize {
        self.projector.rank
    }

    /// The bound factor `s_r / sqrt(r)` on `‖H - PH‖_F / eps`.
    pub fn bound_factor(&self) -> f64 {
        self.s_r / (self.rank() as f64).sqrt()
    }
}

/// Builds `P = U_r U_rᵀ` with `r = rk_eps(H)`.
///
/// The bound `‖H - PH‖_F <= (s_r/√r) eps` holds for every `eps` with
/// `σ_r >= eps > σ_{r+1}`, which is how `r` is chosen here; only `eps > 0`
/// and `eps < σ_1` are validated. When `r = L` the projector is the exact
/// identity.
pub fn projector_from_rank(h: &TrajectoryMatrix, eps: f64) -> Result<RankProjection> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PadError::param("eps", "must be positive and finite"));
    }
    let lag = h.lag();
    let min_dim = lag.min(h.columns());
    let svd = try_svd(padded(h.data()), true, false)?;
    let singular_values: Vec<f64> = svd.singular_values.iter().take(min_dim).copied().collect();
    let rank = epsilon_rank(&singular_values, eps)?;
    if rank == 0 {
        return Err(PadError::DegenerateRank { eps, sigma_1: singular_values[0] });
    }
    let matrix = if rank == lag {
        DMatrix::identity(lag, lag)
    } else {
        let u = svd.u.as_ref().expect("u requested");
        let ur = u.columns(0, rank);
        let mut p = ur * ur.transpose();
        let n = p.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = avg;
                p[(j, i)] = avg;
            }
        }
        p
    };
    let s_r = ((rank * (min_dim - rank)) as f64).sqrt();
    Ok(RankProjection { projector: Projector { matrix, rank }, eps, singular_values, s_r, min_dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{build_trajectory, TimeSeries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identity_is_full_rank() {
        let h = TrajectoryMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let rp = projector_from_rank(&h, 0.5).unwrap();
        assert_eq!(rp.rank(), 3);
        assert_eq!(rp.projector.matrix, DMatrix::identity(3, 3));
        assert_eq!(rp.s_r, 0.0);
    }

    #[test]
    fn rank_one_constant_series() {
        let h = build_trajectory(&TimeSeries::new(vec![1.0; 4]).unwrap(), 2, 4).unwrap();
        let sigma_1 = h.data().singular_values()[0];
        let rp = projector_from_rank(&h, 0.5 * sigma_1).unwrap();
        assert_eq!(rp.rank(), 1);
        let u1 = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let expected = &u1 * u1.transpose();
        assert!((&rp.projector.matrix - expected).norm() < 1e-12);
        assert!((rp.s_r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rank() {
        let h = TrajectoryMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(projector_from_rank(&h, 1.0), Err(PadError::DegenerateRank { .. })));
        assert!(matches!(projector_from_rank(&h, 0.0), Err(PadError::InvalidParameter { .. })));
    }

    #[test]
    fn matrix_bound_against_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x: Vec<f64> = (0..99).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = build_trajectory(&TimeSeries::new(x).unwrap(), 20, 99).unwrap();
        assert_eq!(h.columns(), 80);
        let sv = h.data().singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let eps = 0.5 * (s[4] + s[5]);
        let rp = projector_from_rank(&h, eps).unwrap();
        assert_eq!(rp.rank(), 5);
        let defect = (h.data() - &rp.projector.matrix * h.data()).norm();
        // Oracle: the discarded energy is exactly the tail of the spectrum.
        let tail: f64 = s[5..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((defect - tail).abs() < 1e-9 * s[0]);
        assert!(defect <= rp.s_r / 5f64.sqrt() * eps);
        assert!(rp.projector.idempotence_defect() <= 1e-10 * rp.projector.matrix.norm());
        assert!(rp.projector.symmetry_defect() <= 1e-12);
        assert!((rp.projector.trace() - 5.0).abs() < 1e-8);
    }
}
