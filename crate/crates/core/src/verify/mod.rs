//! Local optimality checks: SINR gradients, joint-improvement search, the
//! full-power condition, the unit-eigenvalue test and Kruskal rank.

mod kruskal;

pub use kruskal::{identity_augmented_full_krank, kruskal_rank, KruskalRank, DEFAULT_KRUSKAL_LIMIT};

use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, min_norm_solve, CMatrix, LinalgError, C64};
use crate::metrics::{link_metrics, LinkMetrics};
use crate::precoder::Precoder;

pub const DEFAULT_SLACK_TOL: f64 = 1e-6;
pub const MAX_HALVINGS: u32 = 40;

/// Gradients of every user's SINR with respect to `P`, in the convention
/// `dRe + i dIm`: `grad_k = h_k d_k^T`, so a step `dP` changes `SINR_k` by
/// `Re <dP, grad_k>_F` to first order.
#[derive(Debug, Clone)]
pub struct GradientSet {
    /// Row `k` is `d_k^T`.
    pub d: CMatrix,
    /// `F_kk = 1`, `F_kj = -S_k / W_k`.
    pub f: CMatrix,
    h: CMatrix,
}

impl GradientSet {
    pub fn m_ue(&self) -> usize {
        self.d.rows()
    }

    pub fn d_k(&self, k: usize) -> Vec<C64> {
        self.d.row(k).to_vec()
    }

    /// `h_k d_k^T` (`m_tx x m_ue`).
    pub fn gradient(&self, k: usize) -> CMatrix {
        let hk = self.h.column(k);
        let dk = self.d.row(k);
        CMatrix::from_fn(hk.len(), dk.len(), |i, j| hk[i] * dk[j])
    }
}

pub fn sinr_gradient(c: &ChannelInstance, p: &Precoder) -> Result<GradientSet> {
    let m = link_metrics(c, p)?;
    Ok(gradient_from_metrics(c.h(), &m))
}

fn gradient_from_metrics(h: &CMatrix, m: &LinkMetrics) -> GradientSet {
    let n = m.m_ue();
    let f = CMatrix::from_fn(n, n, |k, j| {
        C64::new(if k == j { 1.0 } else { -m.signal[k] / m.denom[k] }, 0.0)
    });
    // D = 2 diag(1 / W) (G o F)
    let d = CMatrix::from_fn(n, n, |k, j| m.g[(k, j)] * f[(k, j)] * (2.0 / m.denom[k]));
    GradientSet { d, f, h: h.clone() }
}

/// Central differences of `SINR_k` over the real and imaginary part of
/// every entry of `P`, returned as `dRe + i dIm`.
pub fn fd_gradient(c: &ChannelInstance, p: &Precoder, k: usize, step: f64) -> Result<CMatrix> {
    if !(step > 0.0) {
        return Err(Error::InvalidPrecoder(format!("finite-difference step {step} must be positive")));
    }
    if k >= c.m_ue() {
        return Err(Error::DimensionMismatch(format!("user {k} of {}", c.m_ue())));
    }
    let base = p.matrix();
    let eval = |i: usize, j: usize, dz: C64| -> Result<f64> {
        let mut q = base.clone();
        q[(i, j)] += dz;
        Ok(link_metrics(c, &Precoder::new(q))?.sinr[k])
    };
    let mut grad = CMatrix::zeros(base.rows(), base.cols());
    for i in 0..base.rows() {
        for j in 0..base.cols() {
            let re = (eval(i, j, C64::new(step, 0.0))? - eval(i, j, C64::new(-step, 0.0))?) / (2.0 * step);
            let im = (eval(i, j, C64::new(0.0, step))? - eval(i, j, C64::new(0.0, -step))?) / (2.0 * step);
            grad[(i, j)] = C64::new(re, im);
        }
    }
    Ok(grad)
}

/// `Re <a, b>_F = Re sum_ij a_ij conj(b_ij)`.
pub fn frobenius_inner_re(a: &CMatrix, b: &CMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Direction that raises every SINR at unit rate while lowering the power of
/// every fully loaded antenna at unit rate.
#[derive(Debug, Clone)]
pub struct ImprovementCertificate {
    pub slack_rows: Vec<usize>,
    pub tight_rows: Vec<usize>,
    pub delta_p: Option<Precoder>,
    /// `max |Y* vec(dP) - b|`.
    pub residual: f64,
}

/// Solves the minimum-norm system whose unknown is `vec(dP)` (row-major) and
/// whose columns are `h_k ⊗ d_k` for every user (right side `1`) and
/// `e_i ⊗ P^T e_i` for every tight antenna (right side `-1`).
pub fn improvement_direction(c: &ChannelInstance, p: &Precoder, tol: f64) -> Result<ImprovementCertificate> {
    let m = link_metrics(c, p)?;
    let (m_tx, m_ue) = (c.m_tx(), c.m_ue());
    let power = p.row_power();
    let (slack_rows, tight_rows): (Vec<usize>, Vec<usize>) =
        (0..m_tx).partition(|&i| power[i] < c.beta()[i] * (1.0 - tol));
    if slack_rows.is_empty() {
        return Err(Error::NoSlackRow);
    }
    let grads = gradient_from_metrics(c.h(), &m);
    let n_eq = m_ue + tight_rows.len();
    let mut y = CMatrix::zeros(m_tx * m_ue, n_eq);
    for k in 0..m_ue {
        let g = grads.gradient(k);
        for (idx, v) in g.data().iter().enumerate() {
            y[(idx, k)] = *v;
        }
    }
    for (col, &i) in tight_rows.iter().enumerate() {
        for j in 0..m_ue {
            y[(i * m_ue + j, m_ue + col)] = p.matrix()[(i, j)];
        }
    }
    let mut b = vec![C64::new(1.0, 0.0); m_ue];
    b.extend(std::iter::repeat_n(C64::new(-1.0, 0.0), tight_rows.len()));

    let x = min_norm_solve(&y, &b).map_err(|e| match e {
        LinalgError::RankDeficient | LinalgError::NotPositiveDefinite { .. } => Error::RankDeficient,
        other => Error::Linalg(other),
    })?;
    let yx = y.conj_transpose().mul_vec(&x)?;
    let residual = yx.iter().zip(&b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let dp = CMatrix::try_new(m_tx, m_ue, x)?;
    Ok(ImprovementCertificate { slack_rows, tight_rows, delta_p: Some(Precoder::new(dp)), residual })
}

#[derive(Debug, Clone)]
pub struct LineImprovement {
    pub p: Precoder,
    pub sinr: Vec<f64>,
    pub step: f64,
}

/// Tries `P + eps dP` for `eps = 1, 1/2, ..., 2^-40` and returns the first
/// feasible point where every `SINR_k` exceeds `(1 + upsilon)` times its
/// current value (strictly larger when `upsilon = 0`).
pub fn line_improve(
    c: &ChannelInstance,
    p: &Precoder,
    cert: &ImprovementCertificate,
    upsilon: f64,
) -> Result<Option<LineImprovement>> {
    let dp = match &cert.delta_p {
        Some(dp) if dp.matrix().max_abs() > 0.0 => dp,
        _ => return Ok(None),
    };
    let before = link_metrics(c, p)?.sinr;
    let target: Vec<f64> = before.iter().map(|s| s * (1.0 + upsilon)).collect();
    for t in 0..=MAX_HALVINGS {
        let eps = 0.5f64.powi(t as i32);
        let q = Precoder::new(p.matrix().add(&dp.matrix().scale(eps))?);
        if !q.row_power().iter().zip(c.beta()).all(|(r, b)| r <= b) {
            continue;
        }
        let sinr = link_metrics(c, &q)?.sinr;
        if sinr.iter().zip(&target).all(|(s, t)| s > t) {
            return Ok(Some(LineImprovement { p: q, sinr, step: eps }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullPowerCondition {
    /// `S_k L_k / W_k^2`.
    pub values: Vec<f64>,
    /// `1 / (m_ue - 1)`.
    pub threshold: f64,
    /// `true` if some user reaches the threshold, i.e. a Pareto-optimal
    /// point with an unused antenna is not ruled out.
    pub flag: bool,
}

pub fn full_power_condition(m: &LinkMetrics) -> FullPowerCondition {
    let n = m.m_ue();
    let threshold = if n >= 2 { 1.0 / (n - 1) as f64 } else { f64::INFINITY };
    let values: Vec<f64> = (0..n).map(|k| m.signal[k] * m.leakage[k] / (m.denom[k] * m.denom[k])).collect();
    let flag = values.iter().any(|&v| v >= threshold);
    FullPowerCondition { values, threshold, flag }
}

#[derive(Debug, Clone)]
pub struct UnitEigenvalue {
    pub v: Vec<C64>,
    pub eigenvalues: Vec<C64>,
    pub min_distance: f64,
}

/// Eigenvalues of `G diag(v)` with `v_k = 1 / ((1 + W_k / S_k) g_kk)` and
/// their smallest distance to `1`.
pub fn unit_eigenvalue_check(c: &ChannelInstance, p: &Precoder) -> Result<UnitEigenvalue> {
    let m = link_metrics(c, p)?;
    if let Some(k) = m.signal.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroSignal(k));
    }
    let n = m.m_ue();
    let v: Vec<C64> = (0..n).map(|k| 1.0 / ((1.0 + m.denom[k] / m.signal[k]) * m.g[(k, k)])).collect();
    let gv = CMatrix::from_fn(n, n, |r, s| m.g[(r, s)] * v[s]);
    let eig = eigenvalues(&gv)?;
    let min_distance = eig.iter().map(|z| (z - 1.0).norm()).fold(f64::INFINITY, f64::min);
    Ok(UnitEigenvalue { v, eigenvalues: eig, min_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{global_scale, zero_forcing};
    use crate::channel::{gen_gaussian, toy_channel};

    fn random_pair(seed: u64) -> (ChannelInstance, Precoder) {
        let h = gen_gaussian(5, 3, seed);
        let c = ChannelInstance::new(h, vec![0.7, 1.0, 1.3], vec![1.0; 5]).unwrap();
        (c, Precoder::new(gen_gaussian(5, 3, seed + 500).scale(0.4)))
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        for seed in 0..5 {
            let (c, p) = random_pair(seed);
            let g = sinr_gradient(&c, &p).unwrap();
            for k in 0..3 {
                let a = g.gradient(k);
                let fd = fd_gradient(&c, &p, k, 1e-6).unwrap();
                let err = a.sub(&fd).unwrap().frobenius_norm() / fd.frobenius_norm();
                assert!(err < 1e-6, "seed {seed} user {k}: {err}");
            }
        }
    }

    #[test]
    fn block_form_matches_rows() {
        let (c, p) = random_pair(3);
        let g = sinr_gradient(&c, &p).unwrap();
        let m = link_metrics(&c, &p).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let want = if k == j {
                    2.0 * m.g[(k, k)] / m.denom[k]
                } else {
                    -2.0 * m.g[(k, j)] * m.signal[k] / (m.denom[k] * m.denom[k])
                };
                assert!((g.d[(k, j)] - want).norm() <= 1e-15 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn differences_are_exact_on_quadratics() {
        // single user with no interference: SINR = |h* p|^2 / omega^2
        let h = CMatrix::from_real(3, 1, &[0.5, -1.0, 2.0]).unwrap();
        let c = ChannelInstance::new(h.clone(), vec![1.0], vec![1.0; 3]).unwrap();
        let p = Precoder::new(CMatrix::from_real(3, 1, &[0.3, 0.1, -0.2]).unwrap());
        let fd = fd_gradient(&c, &p, 0, 1e-3).unwrap();
        let g = sinr_gradient(&c, &p).unwrap().gradient(0);
        assert!(fd.sub(&g).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn gradient_steps_ascend() {
        for seed in 0..10 {
            let (c, p) = random_pair(seed);
            let before = link_metrics(&c, &p).unwrap().sinr;
            let g = sinr_gradient(&c, &p).unwrap();
            for k in 0..3 {
                let q = Precoder::new(p.matrix().add(&g.gradient(k).scale(1e-6)).unwrap());
                assert!(link_metrics(&c, &q).unwrap().sinr[k] > before[k]);
            }
        }
    }

    #[test]
    fn zero_forcing_point_has_diagonal_gradients() {
        let c = toy_channel();
        let p = zero_forcing(c.h()).unwrap();
        let g = sinr_gradient(&c, &p).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                if j != k {
                    assert!(g.d[(k, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn improvement_on_scaled_zero_forcing() {
        let h = gen_gaussian(8, 3, 1);
        let c = ChannelInstance::new(h, vec![1.0; 3], vec![1.0; 8]).unwrap();
        let p = global_scale(&zero_forcing(c.h()).unwrap(), c.beta()).unwrap();
        let cert = improvement_direction(&c, &p, DEFAULT_SLACK_TOL).unwrap();
        assert_eq!(cert.tight_rows.len(), 1);
        assert!(cert.residual <= 1e-8);
        let before = link_metrics(&c, &p).unwrap().sinr;
        let imp = line_improve(&c, &p, &cert, 0.0).unwrap().expect("improvable");
        assert!(imp.sinr.iter().zip(&before).all(|(a, b)| a > b));
        assert!(imp.p.row_power().iter().all(|&r| r <= 1.0));
    }

    #[test]
    fn all_rows_tight_has_no_direction() {
        let h = gen_gaussian(4, 2, 2);
        let c = ChannelInstance::new(h, vec![1.0; 2], vec![1.0; 4]).unwrap();
        let p = Precoder::new(CMatrix::from_real(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.6, 0.8, 0.8, -0.6]).unwrap());
        assert!(matches!(improvement_direction(&c, &p, DEFAULT_SLACK_TOL), Err(Error::NoSlackRow)));
    }

    #[test]
    fn silent_user_is_degenerate() {
        let h = gen_gaussian(6, 2, 4);
        let c = ChannelInstance::new(h, vec![1.0; 2], vec![1.0; 6]).unwrap();
        let mut p = zero_forcing(c.h()).unwrap().into_matrix().scale(0.1);
        p.set_column(1, &[C64::new(0.0, 0.0); 6]);
        let p = Precoder::new(p);
        match improvement_direction(&c, &p, DEFAULT_SLACK_TOL) {
            Err(Error::RankDeficient) => {}
            Ok(cert) => assert!(line_improve(&c, &p, &cert, 0.0).unwrap().is_none()),
            Err(e) => panic!("{e}"),
        }
        assert!(matches!(unit_eigenvalue_check(&c, &p), Err(Error::ZeroSignal(1))));
    }

    #[test]
    fn zero_direction_gives_nothing() {
        let c = toy_channel();
        let p = Precoder::new(c.h().scale(0.1));
        let cert = ImprovementCertificate {
            slack_rows: vec![0],
            tight_rows: vec![],
            delta_p: Some(Precoder::new(CMatrix::zeros(8, 3))),
            residual: 0.0,
        };
        assert!(line_improve(&c, &p, &cert, 0.0).unwrap().is_none());
    }

    #[test]
    fn diagonal_g_conditions() {
        let h = CMatrix::from_real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let c = ChannelInstance::new(h.clone(), vec![0.5, 1.0], vec![1.0; 3]).unwrap();
        let p = Precoder::new(h.scale_cols(&[3.0, 2.0]));
        let m = link_metrics(&c, &p).unwrap();
        let fp = full_power_condition(&m);
        assert_eq!(fp.values, vec![0.0, 0.0]);
        assert!(!fp.flag);
        let u = unit_eigenvalue_check(&c, &p).unwrap();
        // S / (S + W) = 36 / 37 and 4 / 5
        let mut re: Vec<f64> = u.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] - 0.8).abs() < 1e-12 && (re[1] - 36.0 / 37.0).abs() < 1e-12);
        assert!((u.min_distance - 1.0 / 37.0).abs() < 1e-12);
    }
}
