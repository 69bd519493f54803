use rayon::prelude::*;

use crate::channel::ChannelInstance;
use crate::metrics::{link_metrics, mean_db};
use crate::random::{gaussian_matrix, stream_rng, uniform_simplex};

use super::refine::{refine_mu, RefineConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Converged,
    NotConverged,
    Failed(String),
}

impl PointStatus {
    pub fn label(&self) -> &str {
        match self {
            PointStatus::Converged => "ok",
            PointStatus::NotConverged => "no-convergence",
            PointStatus::Failed(_) => "failed",
        }
    }

    pub fn is_ok(&self) -> bool {
        !matches!(self, PointStatus::Failed(_))
    }
}

/// One refined point of the achievable SINR region. Failed points keep
/// their `lambda` and carry NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub index: usize,
    pub lambda: Vec<f64>,
    pub sinr: Vec<f64>,
    pub mean_db: f64,
    pub iterations: usize,
    pub status: PointStatus,
    pub min_alpha: f64,
    pub max_alpha: f64,
}

/// Refines `n` weight vectors drawn uniformly from `[0, 1]^m_ue` and
/// normalized. Point `i` depends only on `(seed, i)`.
pub fn sample_surface(c: &ChannelInstance, n: usize, seed: u64, cfg: &RefineConfig) -> Vec<SurfacePoint> {
    (0..n)
        .into_par_iter()
        .map(|index| {
            let lambda = uniform_simplex(c.m_ue(), &mut stream_rng(seed, index as u64));
            evaluate_point(c, index, lambda, cfg)
        })
        .collect()
}

pub(crate) fn evaluate_point(c: &ChannelInstance, index: usize, lambda: Vec<f64>, cfg: &RefineConfig) -> SurfacePoint {
    let failed = |lambda: Vec<f64>, msg: String| SurfacePoint {
        index,
        sinr: vec![f64::NAN; c.m_ue()],
        lambda,
        mean_db: f64::NAN,
        iterations: 0,
        status: PointStatus::Failed(msg),
        min_alpha: f64::NAN,
        max_alpha: f64::NAN,
    };
    let out = match refine_mu(c, &lambda, cfg) {
        Ok(out) => out,
        Err(e) => return failed(lambda, e.to_string()),
    };
    let m = match link_metrics(c, &out.precoder) {
        Ok(m) => m,
        Err(e) => return failed(lambda, e.to_string()),
    };
    let (min_alpha, max_alpha) = out.trace.alpha_range();
    SurfacePoint {
        index,
        lambda,
        mean_db: mean_db(&m.sinr),
        sinr: m.sinr,
        iterations: out.trace.iterations,
        status: if out.trace.converged { PointStatus::Converged } else { PointStatus::NotConverged },
        min_alpha,
        max_alpha,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStat {
    pub m_tx: usize,
    pub m_ue: usize,
    pub delta: f64,
    pub trials: usize,
    pub mean: f64,
    pub stddev: f64,
    /// Trials that hit `max_iter`; their count enters the statistics as is.
    pub not_converged: usize,
    /// Trials that raised an error; excluded from the statistics.
    pub failed: usize,
}

fn size_key(seed: u64, m_tx: usize, m_ue: usize) -> u64 {
    seed ^ ((m_tx as u64) << 32 | m_ue as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Refinement iteration counts on i.i.d. Gaussian channels with unit noise
/// and unit power limits, random simplex `lambda`. Trial `t` of a given size
/// uses the same channel and weights for every `delta`.
pub fn iteration_stats(sizes: &[(usize, usize)], deltas: &[f64], trials: usize, seed: u64) -> Vec<IterationStat> {
    let mut table = Vec::with_capacity(sizes.len() * deltas.len());
    for &(m_tx, m_ue) in sizes {
        let key = size_key(seed, m_tx, m_ue);
        let counts: Vec<Vec<Option<(usize, bool)>>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(key, t as u64);
                let h = gaussian_matrix(m_tx, m_ue, &mut rng);
                let lambda = uniform_simplex(m_ue, &mut rng);
                let c = match ChannelInstance::new(h, vec![1.0; m_ue], vec![1.0; m_tx]) {
                    Ok(c) => c,
                    Err(_) => return vec![None; deltas.len()],
                };
                deltas
                    .iter()
                    .map(|&delta| {
                        refine_mu(&c, &lambda, &RefineConfig::with_delta(delta))
                            .ok()
                            .map(|o| (o.trace.iterations, o.trace.converged))
                    })
                    .collect()
            })
            .collect();
        for (di, &delta) in deltas.iter().enumerate() {
            let ok: Vec<f64> = counts.iter().filter_map(|row| row[di]).map(|(n, _)| n as f64).collect();
            let not_converged = counts.iter().filter(|row| matches!(row[di], Some((_, false)))).count();
            let n = ok.len() as f64;
            let mean = ok.iter().sum::<f64>() / n;
            let var = ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            table.push(IterationStat {
                m_tx,
                m_ue,
                delta,
                trials,
                mean,
                stddev: var.sqrt(),
                not_converged,
                failed: trials - ok.len(),
            });
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation coefficient.
    pub correlation: f64,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Some(LinearFit { slope, intercept: my - slope * mx, correlation })
}
