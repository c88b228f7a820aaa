//! Numerical certificates for the projector bound
//! `‖P x_L(t) - x_L(t)‖ <= K_L(t) eps` with `K_L(t) = (s_r/√r) ‖c(t)‖`,
//! where `c(t)` is the minimum-norm least-squares solution of `H c = x_L(t)`.

use std::ops::RangeInclusive;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{PadError, Result};
use crate::series::{build_trajectory, lag_vector, TimeSeries};
use crate::spectral::{projector_from_rank, try_svd};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub t: usize,
    pub r: usize,
    pub s_r: f64,
    pub eps: f64,
    /// `‖c(t)‖₂`.
    pub c_norm: f64,
    /// `K_L(t) = (s_r/√r) ‖c(t)‖`.
    #[serde(rename = "K_L_t")]
    pub k_l_t: f64,
    /// Supremum of `K_L(t)` over the certified range.
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    /// `‖P x_L(t) - x_L(t)‖₂`.
    pub lhs: f64,
    /// `K_L(t) eps`.
    pub rhs: f64,
    /// `‖H c(t) - x_L(t)‖₂`, zero in exact arithmetic.
    pub ls_residual: f64,
    pub x_norm: f64,
}

impl BoundCertificate {
    /// `lhs <= rhs (1 + 1e-8)`, widened by the least-squares residual and a
    /// rounding term in `‖x‖`.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-8) + self.ls_residual + 1e-12 * self.x_norm
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub certificates: Vec<BoundCertificate>,
    pub r: usize,
    pub s_r: f64,
    pub eps: f64,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    /// Column count `M` of the trajectory matrix.
    pub columns: usize,
    /// `nu(eps) = √M K_hat eps`.
    pub nu_eps: f64,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.certificates.iter().all(BoundCertificate::holds)
    }
}

/// Certifies the bound for every in-sample lag vector `x_L(t)`, `t ∈ t_range ⊆ [L, S]`.
pub fn certify_bound(
    series: &TimeSeries,
    lag: usize,
    train_len: usize,
    eps: f64,
    t_range: RangeInclusive<usize>,
) -> Result<BoundReport> {
    let h = build_trajectory(series, lag, train_len)?;
    if t_range.is_empty() || *t_range.start() < lag || *t_range.end() > train_len {
        return Err(PadError::InvalidShape(format!(
            "t range {:?} must lie within [L, S] = [{lag}, {train_len}]",
            t_range
        )));
    }
    let rp = projector_from_rank(&h, eps)?;
    let r = rp.rank();
    let factor = rp.bound_factor();

    let svd = try_svd(h.data().clone(), true, true)?;
    let sigma_1 = rp.singular_values[0];
    let cutoff = sigma_1 * lag.max(h.columns()) as f64 * f64::EPSILON;

    let mut certificates = Vec::with_capacity(t_range.clone().count());
    for t in t_range {
        let x: DVector<f64> = lag_vector(series, lag, t)?.entries;
        let c = svd
            .solve(&x, cutoff)
            .map_err(|e| PadError::SpectralBackend(e.to_string()))?;
        let c_norm = c.norm();
        let k_l_t = factor * c_norm;
        certificates.push(BoundCertificate {
            t,
            r,
            s_r: rp.s_r,
            eps,
            c_norm,
            k_l_t,
            k_hat: 0.0,
            lhs: rp.projector.residual(&x),
            rhs: k_l_t * eps,
            ls_residual: (h.data() * &c - &x).norm(),
            x_norm: x.norm(),
        });
    }
    let k_hat = certificates.iter().map(|c| c.k_l_t).fold(0.0, f64::max);
    for c in &mut certificates {
        c.k_hat = k_hat;
    }
    let columns = h.columns();
    Ok(BoundReport {
        certificates,
        r,
        s_r: rp.s_r,
        eps,
        k_hat,
        columns,
        nu_eps: (columns as f64).sqrt() * k_hat * eps,
    })
}
