//! Per-user link quality for a (channel, precoder) pair.

use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, CMatrix};
use crate::precoder::Precoder;

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LinkMetrics {
    /// `G = H* P`; row `k` is what user `k` receives.
    pub g: CMatrix,
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
    pub leakage: Vec<f64>,
    pub noise: Vec<f64>,
    /// `interference + noise`
    pub denom: Vec<f64>,
    pub sinr: Vec<f64>,
    pub slnr: Vec<f64>,
}

pub fn link_metrics(c: &ChannelInstance, p: &Precoder) -> Result<LinkMetrics> {
    if p.m_tx() != c.m_tx() || p.m_ue() != c.m_ue() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{}, precoder is {}x{}",
            c.m_tx(),
            c.m_ue(),
            p.m_tx(),
            p.m_ue()
        )));
    }
    let g = adjoint_mul(c.h(), p.matrix())?;
    Ok(metrics_from_g(g, c.omega()))
}

pub(crate) fn metrics_from_g(g: CMatrix, omega: &[f64]) -> LinkMetrics {
    let n = g.rows();
    let mut signal = vec![0.0; n];
    let mut row_off = vec![0.0; n];
    let mut col_off = vec![0.0; n];
    for k in 0..n {
        for j in 0..n {
            let e = g[(k, j)].norm_sqr();
            if k == j {
                signal[k] = e;
            } else {
                row_off[k] += e;
                col_off[j] += e;
            }
        }
    }
    let noise: Vec<f64> = omega.iter().map(|w| w * w).collect();
    let denom: Vec<f64> = row_off.iter().zip(&noise).map(|(i, n)| i + n).collect();
    let sinr = signal.iter().zip(&denom).map(|(s, w)| s / w).collect();
    let slnr = (0..n).map(|k| signal[k] / (col_off[k] + noise[k])).collect();
    LinkMetrics { g, signal, interference: row_off, leakage: col_off, noise, denom, sinr, slnr }
}

impl LinkMetrics {
    pub fn m_ue(&self) -> usize {
        self.sinr.len()
    }

    pub fn throughput(&self) -> f64 {
        throughput(&self.sinr)
    }

    pub fn per_user_db(&self) -> Vec<f64> {
        per_user_db(&self.sinr)
    }

    pub fn mean_db(&self) -> f64 {
        mean_db(&self.sinr)
    }
}

/// `sum_k ln(1 + sinr_k)`.
pub fn throughput(sinr: &[f64]) -> f64 {
    sinr.iter().map(|s| s.ln_1p()).sum()
}

/// `10 log10(1 + sinr_k)`.
pub fn per_user_db(sinr: &[f64]) -> Vec<f64> {
    sinr.iter().map(|s| 10.0 * (1.0 + s).log10()).collect()
}

pub fn mean_db(sinr: &[f64]) -> f64 {
    if sinr.is_empty() {
        return 0.0;
    }
    per_user_db(sinr).iter().sum::<f64>() / sinr.len() as f64
}

pub fn row_power(p: &Precoder) -> Vec<f64> {
    p.row_power()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `beta_i - row_power_i`; negative entries are violations.
    pub slack: Vec<f64>,
}

/// Every row power must satisfy `power_i <= beta_i (1 + tol)`.
pub fn check_feasible(p: &Precoder, beta: &[f64], tol: f64) -> Feasibility {
    let power = p.row_power();
    let slack: Vec<f64> = beta.iter().zip(&power).map(|(b, r)| b - r).collect();
    let feasible = power.len() == beta.len() && power.iter().zip(beta).all(|(r, b)| *r <= b * (1.0 + tol));
    Feasibility { feasible, slack }
}

/// Mean and minimum of `test.sinr_k / reference.sinr_k`.
pub fn gains(test: &LinkMetrics, reference: &LinkMetrics) -> Result<(f64, f64)> {
    gains_from_sinr(&test.sinr, &reference.sinr)
}

pub fn gains_from_sinr(test: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if test.len() != reference.len() || test.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} test users vs {} reference users",
            test.len(),
            reference.len()
        )));
    }
    if let Some(k) = reference.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::ZeroReferenceSinr(k));
    }
    let ratios: Vec<f64> = test.iter().zip(reference).map(|(t, r)| t / r).collect();
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((avg, min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_gaussian, toy_channel, ChannelInstance};
    use crate::linalg::C64;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn diagonal_g_has_no_interference() {
        // orthonormal columns of H, P = 2 H
        let h = CMatrix::from_real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let c = ChannelInstance::new(h.clone(), vec![0.5, 2.0], vec![1.0; 3]).unwrap();
        let m = link_metrics(&c, &Precoder::new(h.scale(2.0))).unwrap();
        assert_eq!(m.interference, vec![0.0, 0.0]);
        assert_eq!(m.leakage, vec![0.0, 0.0]);
        assert!(close(m.sinr[0], 4.0 / 0.25, 1e-14));
        assert!(close(m.sinr[1], 4.0 / 4.0, 1e-14));
    }

    #[test]
    fn zero_precoder_gives_zero_ratios() {
        let c = toy_channel();
        let m = link_metrics(&c, &Precoder::new(CMatrix::zeros(8, 3))).unwrap();
        assert!(m.sinr.iter().chain(&m.slnr).all(|&x| x == 0.0));
        assert_eq!(m.throughput(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let c = toy_channel();
        assert!(link_metrics(&c, &Precoder::new(CMatrix::zeros(8, 2))).is_err());
    }

    #[test]
    fn interference_and_leakage_totals_agree() {
        for seed in 0..100 {
            let h = gen_gaussian(6, 4, seed);
            let p = gen_gaussian(6, 4, seed + 1000);
            let c = ChannelInstance::new(h, vec![1.0; 4], vec![1.0; 6]).unwrap();
            let m = link_metrics(&c, &Precoder::new(p)).unwrap();
            let si: f64 = m.interference.iter().sum();
            let sl: f64 = m.leakage.iter().sum();
            assert!((si - sl).abs() <= 1e-12 * si.max(1.0));
            for k in 0..4 {
                assert!(close(m.sinr[k], m.signal[k] / m.denom[k], 1e-15 * m.sinr[k].max(1.0)));
                assert!(close(m.denom[k], m.interference[k] + 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn display_quantities() {
        assert!(close(mean_db(&[2.8878, 1.8063, 3.2814]), 5.5647, 1e-3));
        assert!(close(mean_db(&[4.1696, 4.1328, 4.6920]), 7.2636, 1e-3));
        assert_eq!(throughput(&[0.0, 0.0]), 0.0);
        let db = per_user_db(&[9.0]);
        assert!(close(db[0], 10.0, 1e-12));
    }

    #[test]
    fn throughput_is_monotone() {
        let base = [0.5, 1.0, 3.0];
        let t0 = throughput(&base);
        for k in 0..3 {
            let mut up = base;
            up[k] += 1e-6;
            assert!(throughput(&up) > t0);
        }
    }

    #[test]
    fn feasibility() {
        let mut p = CMatrix::zeros(3, 2);
        p[(1, 0)] = C64::new(1.0, 0.0);
        let p = Precoder::new(p);
        assert_eq!(row_power(&p), vec![0.0, 1.0, 0.0]);
        assert!(check_feasible(&p, &[1.0; 3], 0.0).feasible);
        let f = check_feasible(&p.scaled(1.001), &[1.0; 3], 1e-4);
        assert!(!f.feasible);
        assert!(f.slack[1] < 0.0);
    }

    #[test]
    fn gain_statistics() {
        let (avg, min) = gains_from_sinr(&[1.0, 4.0, 9.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(close(avg, 2.0, 1e-15) && close(min, 1.0, 1e-15));
        let (avg, min) = gains_from_sinr(&[2.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!((avg, min), (2.0, 2.0));
        assert!(matches!(gains_from_sinr(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::ZeroReferenceSinr(1))));
        let c = toy_channel();
        let m = link_metrics(&c, &Precoder::new(c.h().clone())).unwrap();
        assert_eq!(gains(&m, &m).unwrap(), (1.0, 1.0));
    }
}
