//! Zero-forcing and SLNR reference precoders with column power allocation.

use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, chol_solve, thin_svd, CMatrix, LinalgError};
use crate::precoder::Precoder;

const RANK_TOL: f64 = 1e-12;

/// Nonnegative column weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    /// Normalizes `kappa` to sum one.
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::InvalidWeights("empty allocation".into()));
        }
        if let Some(j) = kappa.iter().position(|&k| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidWeights(format!("kappa[{j}] = {} is not a nonnegative number", kappa[j])));
        }
        let total: f64 = kappa.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("allocation sums to zero".into()));
        }
        Ok(Self(kappa.into_iter().map(|k| k / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Weights that give column `j` of `p0 diag(sqrt(kappa))` the fraction
    /// `shares[j]` of the total (pre-scaling) power.
    pub fn from_power_shares(p0: &Precoder, shares: &[f64]) -> Result<Self> {
        if shares.len() != p0.m_ue() {
            return Err(Error::DimensionMismatch(format!(
                "{} shares for {} columns",
                shares.len(),
                p0.m_ue()
            )));
        }
        let norms = p0.column_power();
        if let Some(j) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::ZeroColumn(j));
        }
        Self::new(shares.iter().zip(&norms).map(|(s, n)| s / n).collect())
    }

    pub fn kappa(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn rank_deficient(e: LinalgError) -> Error {
    match e {
        LinalgError::NotPositiveDefinite { .. } | LinalgError::Singular { .. } | LinalgError::RankDeficient => {
            Error::RankDeficient
        }
        other => Error::Linalg(other),
    }
}

/// `P = H (H* H)^-1`, so that `H* P = I`.
pub fn zero_forcing(h: &CMatrix) -> Result<Precoder> {
    let gram = adjoint_mul(h, h)?;
    let x = chol_solve(&gram, &CMatrix::identity(h.cols())).map_err(rank_deficient)?;
    Ok(Precoder::new(h.matmul(&x)?))
}

/// Column `k` maximizes the SLNR of user `k`: `(omega_k^2 I + H H*)^-1 h_k`,
/// evaluated through the thin SVD of `H`.
pub fn slnr_precoder(h: &CMatrix, omega: &[f64]) -> Result<Precoder> {
    let m = h.cols();
    if omega.len() != m {
        return Err(Error::DimensionMismatch(format!("{} noise levels for {m} users", omega.len())));
    }
    let svd = thin_svd(h, RANK_TOL)?;
    if !svd.is_full_rank() {
        return Err(Error::RankDeficient);
    }
    // W_kj = sigma_j V_kj / (omega_k^2 + sigma_j^2), P = U W*
    let w = CMatrix::from_fn(m, m, |k, j| {
        let s = svd.sigma[j];
        svd.v[(k, j)] * (s / (omega[k] * omega[k] + s * s))
    });
    Ok(Precoder::new(svd.u.matmul(&w.conj_transpose())?))
}

/// `P0 diag(sqrt(kappa))`, scaled so the worst per-antenna constraint is tight.
pub fn allocate_power(p0: &Precoder, kappa: &PowerAllocation, beta: &[f64]) -> Result<Precoder> {
    if kappa.len() != p0.m_ue() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} columns", kappa.len(), p0.m_ue())));
    }
    let sqrt_k: Vec<f64> = kappa.kappa().iter().map(|k| k.sqrt()).collect();
    global_scale(&Precoder::new(p0.matrix().scale_cols(&sqrt_k)), beta)
}

/// Equalizes column norms: `kappa_j ∝ 1 / ||p0_j||^2`.
pub fn uniform_kappa(p0: &Precoder) -> Result<PowerAllocation> {
    PowerAllocation::from_power_shares(p0, &vec![1.0; p0.m_ue()])
}

#[derive(Debug, Clone)]
pub struct WaterFilling {
    pub allocation: PowerAllocation,
    /// Unnormalized weights meeting `sum_j c_j kappa_j = budget`.
    pub raw_kappa: Vec<f64>,
    pub water_level: f64,
    pub budget_used: f64,
}

const NU_LO: f64 = 1e-12;
const NU_HI: f64 = 1e12;
const BISECTION_ITERS: usize = 200;
const BISECTION_TOL: f64 = 1e-12;

/// Throughput-optimal column powers for a zero-forcing precoder under the
/// Frobenius budget `sum_j ||p_j||^2 kappa_j = budget`.
pub fn water_fill_kappa(p_zf: &Precoder, omega: &[f64], budget: f64) -> Result<WaterFilling> {
    let c = p_zf.column_power();
    if omega.len() != c.len() {
        return Err(Error::DimensionMismatch(format!("{} noise levels for {} columns", omega.len(), c.len())));
    }
    if let Some(j) = c.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidWeights(format!("budget {budget} is not positive")));
    }
    let noise: Vec<f64> = omega.iter().map(|w| w * w).collect();
    let fill = |nu: f64| -> Vec<f64> {
        c.iter().zip(&noise).map(|(cj, n)| (1.0 / (nu * cj) - n).max(0.0)).collect()
    };
    let used = |kappa: &[f64]| -> f64 { kappa.iter().zip(&c).map(|(k, cj)| k * cj).sum() };

    // used(fill(nu)) decreases in nu; bisect in log space
    let (mut lo, mut hi) = (NU_LO.ln(), NU_HI.ln());
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if used(&fill(mid.exp())) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < BISECTION_TOL {
            break;
        }
    }
    let nu = (0.5 * (lo + hi)).exp();
    let raw_kappa = fill(nu);
    let budget_used = used(&raw_kappa);
    Ok(WaterFilling { allocation: PowerAllocation::new(raw_kappa.clone())?, raw_kappa, water_level: nu, budget_used })
}

/// `min_i sqrt(beta_i) / ||e_i* P0|| * P0`.
pub fn global_scale(p0: &Precoder, beta: &[f64]) -> Result<Precoder> {
    if beta.len() != p0.m_tx() {
        return Err(Error::DimensionMismatch(format!("{} limits for {} antennas", beta.len(), p0.m_tx())));
    }
    let s = p0
        .row_power()
        .iter()
        .zip(beta)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, b)| (b / r).sqrt())
        .fold(f64::INFINITY, f64::min);
    if !s.is_finite() {
        return Err(Error::ZeroPrecoder);
    }
    Ok(p0.scaled(s))
}
