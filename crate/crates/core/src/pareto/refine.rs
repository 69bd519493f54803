use crate::baselines::global_scale;
use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::precoder::Precoder;

use super::{parametric_precoder, LagrangeWeights, ParametricResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Exit once every `alpha_i` lies in `(1 - delta, 1 / (1 - delta))`.
    pub delta: f64,
    /// Cap on the number of `mu` updates.
    pub max_iter: usize,
    /// Floor applied to `mu_i` after each update.
    pub mu_min: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { delta: 1e-4, max_iter: 200, mu_min: 1e-12 }
    }
}

impl RefineConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self { delta, ..Self::default() }
    }

    pub fn validate(&self, m_tx: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidWeights(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= 1.0 / m_tx as f64) {
            return Err(Error::InvalidWeights(format!("mu_min = {} must lie in (0, 1/m_tx]", self.mu_min)));
        }
        Ok(())
    }

    fn in_window(&self, alpha: &[f64]) -> bool {
        let lo = 1.0 - self.delta;
        let hi = 1.0 / lo;
        alpha.iter().all(|&a| a > lo && a < hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineTrace {
    /// Number of `mu` updates performed (parametric evaluations minus one).
    pub iterations: usize,
    /// Per-row rates `||e_i* P|| / sqrt(beta_i)` at every evaluation.
    pub alpha_history: Vec<Vec<f64>>,
    pub converged: bool,
    pub final_mu: Vec<f64>,
}

impl RefineTrace {
    pub fn last_alpha(&self) -> &[f64] {
        self.alpha_history.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        let a = self.last_alpha();
        let min = a.iter().copied().fold(f64::INFINITY, f64::min);
        let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    /// Feasible precoder, scaled so its most loaded antenna is exactly at its limit.
    pub precoder: Precoder,
    /// Last parametric evaluation before the final scaling.
    pub parametric: ParametricResult,
    pub trace: RefineTrace,
}

/// Adjusts `mu` until every antenna runs at (nearly) full power.
///
/// Starts from `mu_i = 1/m_tx` and updates `mu_i <- mu_i alpha_i / sum(mu alpha)`.
/// Hitting `max_iter` is not an error: the outcome carries `converged = false`
/// and a feasible precoder.
pub fn refine_mu(c: &ChannelInstance, lambda: &[f64], cfg: &RefineConfig) -> Result<RefineOutcome> {
    run(c, lambda, cfg, None)
}

/// Performs exactly `updates` `mu` updates (stopping early only on error)
/// and scales the last precoder to feasibility.
pub fn refine_fixed_updates(
    c: &ChannelInstance,
    lambda: &[f64],
    updates: usize,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    run(c, lambda, cfg, Some(updates))
}

fn run(c: &ChannelInstance, lambda: &[f64], cfg: &RefineConfig, fixed: Option<usize>) -> Result<RefineOutcome> {
    cfg.validate(c.m_tx())?;
    let m_tx = c.m_tx();
    let mut mu = vec![1.0 / m_tx as f64; m_tx];
    let mut history = Vec::new();
    let mut updates = 0;
    let (last, converged) = loop {
        let r = parametric_precoder(c, &LagrangeWeights::new(lambda, &mu)?)?;
        let alpha: Vec<f64> = r.p.row_power().iter().zip(c.beta()).map(|(p, b)| (p / b).sqrt()).collect();
        let inside = cfg.in_window(&alpha);
        let done = match fixed {
            Some(n) => updates >= n,
            None => inside || updates >= cfg.max_iter,
        };
        if done {
            history.push(alpha);
            break (r, inside);
        }
        for (m, a) in mu.iter_mut().zip(&alpha) {
            *m *= a;
        }
        normalize(&mut mu);
        for m in mu.iter_mut() {
            *m = m.max(cfg.mu_min);
        }
        normalize(&mut mu);
        history.push(alpha);
        updates += 1;
    };

    let precoder = global_scale(&last.p, c.beta())?;
    Ok(RefineOutcome {
        precoder,
        parametric: last,
        trace: RefineTrace { iterations: updates, alpha_history: history, converged, final_mu: mu },
    })
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_gaussian, toy_channel};
    use crate::random::{stream_rng, uniform_simplex};

    #[test]
    fn config_validation() {
        assert!(RefineConfig::with_delta(0.0).validate(8).is_err());
        assert!(RefineConfig::with_delta(1.0).validate(8).is_err());
        let cfg = RefineConfig { mu_min: 0.5, ..RefineConfig::default() };
        assert!(cfg.validate(8).is_err());
        assert!(RefineConfig::default().validate(8).is_ok());
    }

    #[test]
    fn zero_updates_is_one_evaluation() {
        let c = toy_channel();
        let out = refine_fixed_updates(&c, &[0.3, 0.3, 0.4], 0, &RefineConfig::default()).unwrap();
        assert_eq!(out.trace.iterations, 0);
        assert_eq!(out.trace.alpha_history.len(), 1);
        assert_eq!(out.trace.final_mu, vec![0.125; 8]);
    }

    #[test]
    fn converged_rows_are_near_full_power() {
        let cfg = RefineConfig::with_delta(1e-4);
        for seed in 0..20 {
            let h = gen_gaussian(8, 3, seed);
            let c = ChannelInstance::new(h, vec![1.0; 3], vec![1.0; 8]).unwrap();
            let lambda = uniform_simplex(3, &mut stream_rng(seed, 1));
            let out = refine_mu(&c, &lambda, &cfg).unwrap();
            assert!(out.trace.converged);
            assert!(out.trace.iterations <= cfg.max_iter);
            let (lo, hi) = out.trace.alpha_range();
            assert!(lo > 1.0 - cfg.delta && hi < 1.0 / (1.0 - cfg.delta));
            for r in out.precoder.row_power() {
                assert!(r <= 1.0 + 1e-12 && r >= (1.0 - cfg.delta).powi(4));
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported_not_raised() {
        let c = toy_channel();
        let cfg = RefineConfig { delta: 1e-12, max_iter: 2, mu_min: 1e-12 };
        let out = refine_mu(&c, &[0.2, 0.3, 0.5], &cfg).unwrap();
        assert!(!out.trace.converged);
        assert_eq!(out.trace.iterations, 2);
        let max = out.precoder.row_power().into_iter().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }
}
