//! Parametric Pareto-optimal precoders `P(lambda, mu)` and the row-power
//! refinement of `mu`.

mod refine;
mod surface;

pub use refine::{refine_fixed_updates, refine_mu, RefineConfig, RefineOutcome, RefineTrace};
pub use surface::{
    iteration_stats, linear_fit, sample_surface, IterationStat, LinearFit, PointStatus, SurfacePoint,
};

use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, dot, lu_solve, Cholesky, CMatrix, LinalgError, C64};
use crate::precoder::Precoder;

/// `z_jj` above this value means the targeted SINR exceeds ~1e8, beyond what
/// `z / (1 - z)` resolves in double precision.
pub const INSTABILITY_THRESHOLD: f64 = 1.0 - 1e-8;
/// Diagnostic flag level for `z_jj`, well below the hard guard.
pub const NEAR_UNIT_THRESHOLD: f64 = 1.0 - 1e-6;

/// User weights `lambda` and antenna weights `mu`, each normalized to sum one.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeWeights {
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

fn normalized(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidWeights(format!("{name} is empty")));
    }
    if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidWeights(format!("{name}[{i}] = {} is not positive", v[i])));
    }
    let total: f64 = v.iter().sum();
    Ok(v.iter().map(|x| x / total).collect())
}

impl LagrangeWeights {
    pub fn new(lambda: &[f64], mu: &[f64]) -> Result<Self> {
        Ok(Self { lambda: normalized("lambda", lambda)?, mu: normalized("mu", mu)? })
    }

    /// `mu_i = 1 / m_tx`.
    pub fn uniform_mu(lambda: &[f64], m_tx: usize) -> Result<Self> {
        Self::new(lambda, &vec![1.0; m_tx])
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    fn check(&self, c: &ChannelInstance) -> Result<()> {
        if self.lambda.len() != c.m_ue() || self.mu.len() != c.m_tx() {
            return Err(Error::DimensionMismatch(format!(
                "weights for {}x{}, channel is {}x{}",
                self.mu.len(),
                self.lambda.len(),
                c.m_tx(),
                c.m_ue()
            )));
        }
        Ok(())
    }
}

/// Diagonal of `Z` (equivalently `gamma_j / (1 + gamma_j)`) and the users
/// whose entry is close enough to one to lose precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiCondition {
    pub z_diag: Vec<f64>,
    pub near_unit: Vec<bool>,
}

impl PsiCondition {
    fn new(z_diag: Vec<f64>) -> Self {
        let near_unit = z_diag.iter().map(|&z| z > NEAR_UNIT_THRESHOLD).collect();
        Self { z_diag, near_unit }
    }

    pub fn any_near_unit(&self) -> bool {
        self.near_unit.iter().any(|&f| f)
    }
}

#[derive(Debug, Clone)]
pub struct ParametricResult {
    pub p: Precoder,
    /// SINR targeted (and achieved) by each user.
    pub gamma: Vec<f64>,
    /// Column powers `||p_j||^2`.
    pub kappa: Vec<f64>,
    pub psi_condition: PsiCondition,
}

fn guard(z_diag: &[f64]) -> Result<()> {
    for (user, &z) in z_diag.iter().enumerate() {
        if z > INSTABILITY_THRESHOLD {
            return Err(Error::InstabilityGuard { user, z });
        }
    }
    Ok(())
}

/// Solves `A kappa = rhs` for the column powers and rejects non-positive ones.
fn solve_kappa(a: CMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = CMatrix::from_fn(rhs.len(), 1, |i, _| C64::new(rhs[i], 0.0));
    let x = lu_solve(&a, &b).map_err(|e| match e {
        LinalgError::Singular { .. } => Error::InfeasibleWeights("power system is singular".into()),
        other => Error::Linalg(other),
    })?;
    let kappa: Vec<f64> = x.column(0).iter().map(|z| z.re).collect();
    if let Some(j) = kappa.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::InfeasibleWeights(format!("kappa[{j}] = {}", kappa[j])));
    }
    Ok(kappa)
}

/// `P(lambda, mu)` in `O(m_tx m_ue^2)` through the `m_ue x m_ue` matrices
/// `C = Ĥ* Ĥ` and `Z = C - C (I + C)^-1 C`, with
/// `Ĥ = diag(sqrt(beta / mu)) H diag(sqrt(lambda) / omega)`.
pub fn parametric_precoder(c: &ChannelInstance, w: &LagrangeWeights) -> Result<ParametricResult> {
    w.check(c)?;
    let (m_tx, m_ue) = (c.m_tx(), c.m_ue());
    let d: Vec<f64> = c.beta().iter().zip(w.mu()).map(|(b, m)| (b / m).sqrt()).collect();
    let e: Vec<f64> = w.lambda().iter().zip(c.omega()).map(|(l, o)| l.sqrt() / o).collect();
    let h_hat = c.h().scale_rows(&d).scale_cols(&e);

    let cm = adjoint_mul(&h_hat, &h_hat)?;
    let ipc = CMatrix::identity(m_ue).add(&cm)?;
    // Y = (I + C)^-1 gives I - (I + C)^-1 C = Y and Z = C - C (I + C)^-1 C = C Y
    // without subtracting nearly equal matrices at high SINR.
    let y = Cholesky::factor(&ipc)?.solve(&CMatrix::identity(m_ue))?;
    let q = h_hat.matmul(&y)?.scale_rows(&d);
    let mut z = cm.matmul(&y)?;
    for i in 0..m_ue {
        z[(i, i)] = C64::new(z[(i, i)].re, 0.0);
        for j in i + 1..m_ue {
            let s = 0.5 * (z[(i, j)] + z[(j, i)].conj());
            z[(i, j)] = s;
            z[(j, i)] = s.conj();
        }
    }

    let z_diag: Vec<f64> = (0..m_ue).map(|j| z[(j, j)].re).collect();
    guard(&z_diag)?;
    // 1 - z_jj = y_jj
    let gamma: Vec<f64> = (0..m_ue).map(|j| z_diag[j] / y[(j, j)].re).collect();
    let nrm = q.column_norms_sqr();
    if let Some(j) = nrm.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroColumn(j));
    }

    // Row k is the SINR_k = gamma_k balance, scaled by lambda_k / omega_k^2.
    let a = CMatrix::from_fn(m_ue, m_ue, |k, j| {
        let v = z[(k, j)].norm_sqr() / nrm[j];
        C64::new(if k == j { v } else { -gamma[k] * v }, 0.0)
    });
    let rhs: Vec<f64> = gamma.iter().zip(w.lambda()).map(|(g, l)| g * l).collect();
    let kappa = solve_kappa(a, &rhs)?;

    let col_scale: Vec<f64> = kappa.iter().zip(&nrm).map(|(k, n)| (k / n).sqrt()).collect();
    let p = q.scale_cols(&col_scale);
    debug_assert_eq!(p.shape(), (m_tx, m_ue));
    Ok(ParametricResult { p: Precoder::new(p), gamma, kappa, psi_condition: PsiCondition::new(z_diag) })
}

/// Same result as [`parametric_precoder`], formed from the explicit
/// `m_tx x m_tx` matrix `Psi = diag(mu / beta) + sum_k (lambda_k / omega_k^2) h_k h_k*`.
/// Cubic in `m_tx`; meant as a reference.
pub fn direct_precoder(c: &ChannelInstance, w: &LagrangeWeights) -> Result<ParametricResult> {
    w.check(c)?;
    let (m_tx, m_ue) = (c.m_tx(), c.m_ue());
    let h = c.h();
    let noise: Vec<f64> = c.omega().iter().map(|o| o * o).collect();
    let weight: Vec<f64> = w.lambda().iter().zip(&noise).map(|(l, n)| l / n).collect();
    let psi_minus = |skip: Option<usize>| -> CMatrix {
        CMatrix::from_fn(m_tx, m_tx, |r, s| {
            let mut v = C64::new(0.0, 0.0);
            if r == s {
                v += w.mu()[r] / c.beta()[r];
            }
            for k in 0..m_ue {
                if Some(k) != skip {
                    v += h[(r, k)] * h[(s, k)].conj() * weight[k];
                }
            }
            v
        })
    };

    let psi = psi_minus(None);
    let dirs = lu_solve(&psi, h)?;
    let mut p_hat = dirs.clone();
    for j in 0..m_ue {
        let col = dirs.column(j);
        let n = crate::linalg::norm2(&col);
        if n == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let unit: Vec<C64> = col.iter().map(|z| z / n).collect();
        p_hat.set_column(j, &unit);
    }

    let mut gamma = Vec::with_capacity(m_ue);
    for (j, w) in weight.iter().enumerate() {
        let hj = h.column(j);
        let rhs = CMatrix::from_columns(std::slice::from_ref(&hj));
        let y = lu_solve(&psi_minus(Some(j)), &rhs)?;
        gamma.push(w * dot(&hj, &y.column(0)).re);
    }
    let z_diag: Vec<f64> = gamma.iter().map(|g| g / (1.0 + g)).collect();
    guard(&z_diag)?;

    let g = adjoint_mul(h, &p_hat)?;
    let a = CMatrix::from_fn(m_ue, m_ue, |k, j| {
        let v = g[(k, j)].norm_sqr();
        C64::new(if k == j { v } else { -gamma[k] * v }, 0.0)
    });
    let rhs: Vec<f64> = gamma.iter().zip(&noise).map(|(g, n)| g * n).collect();
    let kappa = solve_kappa(a, &rhs)?;
    let sqrt_k: Vec<f64> = kappa.iter().map(|k| k.sqrt()).collect();
    Ok(ParametricResult {
        p: Precoder::new(p_hat.scale_cols(&sqrt_k)),
        gamma,
        kappa,
        psi_condition: PsiCondition::new(z_diag),
    })
}
