//! Channel instances `(H, omega, beta)` and the generators used by the
//! experiments.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, CMatrix};
use crate::random::{gaussian_matrix, stream_rng};

/// Singular values below this fraction of the largest are treated as zero
/// when extracting orthonormal bases.
pub const SVD_TOL: f64 = 1e-10;

/// Channel matrix `H` (`m_tx x m_ue`), per-user noise standard deviations
/// `omega` and per-antenna power limits `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    h: CMatrix,
    omega: Vec<f64>,
    beta: Vec<f64>,
}

impl ChannelInstance {
    pub fn new(h: CMatrix, omega: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let (m_tx, m_ue) = h.shape();
        if m_tx <= m_ue {
            return Err(Error::InvalidChannel(format!(
                "need more transmit antennas than users, got {m_tx}x{m_ue}"
            )));
        }
        if omega.len() != m_ue {
            return Err(Error::InvalidChannel(format!("omega has {} entries, expected {m_ue}", omega.len())));
        }
        if beta.len() != m_tx {
            return Err(Error::InvalidChannel(format!("beta has {} entries, expected {m_tx}", beta.len())));
        }
        if let Some(k) = omega.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidChannel(format!("omega[{k}] = {} is not positive", omega[k])));
        }
        if let Some(i) = beta.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidChannel(format!("beta[{i}] = {} is not positive", beta[i])));
        }
        Ok(Self { h, omega, beta })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn m_tx(&self) -> usize {
        self.h.rows()
    }

    pub fn m_ue(&self) -> usize {
        self.h.cols()
    }

    pub fn with_omega(&self, omega: Vec<f64>) -> Result<Self> {
        Self::new(self.h.clone(), omega, self.beta.clone())
    }

    pub fn with_beta(&self, beta: Vec<f64>) -> Result<Self> {
        Self::new(self.h.clone(), self.omega.clone(), beta)
    }
}

/// Singular value profile `k -> sigma_k` for synthetic channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayLaw {
    Flat,
    Inverse,
    InverseSquare,
}

impl DecayLaw {
    /// `sigma_k` for 1-based `k`.
    pub fn sigma(self, k: usize) -> f64 {
        let k = k as f64;
        match self {
            DecayLaw::Flat => 1.0,
            DecayLaw::Inverse => 1.0 / k,
            DecayLaw::InverseSquare => 1.0 / (k * k),
        }
    }

    pub fn profile(self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.sigma(k)).collect()
    }
}

impl FromStr for DecayLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "flat" | "1" => Ok(DecayLaw::Flat),
            "inverse" | "1/k" => Ok(DecayLaw::Inverse),
            "inverse-square" | "inversesquare" | "1/k2" | "1/k^2" => Ok(DecayLaw::InverseSquare),
            other => Err(format!("unknown decay law '{other}' (flat, inverse, inverse-square)")),
        }
    }
}

impl fmt::Display for DecayLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayLaw::Flat => "flat",
            DecayLaw::Inverse => "inverse",
            DecayLaw::InverseSquare => "inverse-square",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMode {
    /// `beta_i = 1`
    UnitPerAntenna,
    /// `beta_i = 1 / m_tx`, so the Frobenius budget is one.
    UnitTotal,
}

impl FromStr for BetaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "unit-per-antenna" | "per-antenna" => Ok(BetaMode::UnitPerAntenna),
            "unit-total" | "total" => Ok(BetaMode::UnitTotal),
            other => Err(format!("unknown beta mode '{other}' (unit-per-antenna, unit-total)")),
        }
    }
}

pub fn default_beta(m_tx: usize, mode: BetaMode) -> Vec<f64> {
    match mode {
        BetaMode::UnitPerAntenna => vec![1.0; m_tx],
        BetaMode::UnitTotal => vec![1.0 / m_tx as f64; m_tx],
    }
}

/// I.i.d. complex Gaussian channel.
pub fn gen_gaussian(m_tx: usize, m_ue: usize, seed: u64) -> CMatrix {
    gaussian_matrix(m_tx, m_ue, &mut stream_rng(seed, 0))
}

/// `H = U diag(sigma) V*` with random orthonormal `U` (`m_tx x m_ue`) and
/// unitary `V`, both taken from SVDs of seeded Gaussian matrices.
pub fn gen_svd_decay(m_tx: usize, m_ue: usize, law: DecayLaw, seed: u64) -> Result<CMatrix> {
    if m_tx < m_ue {
        return Err(Error::InvalidChannel(format!("need m_tx >= m_ue, got {m_tx}x{m_ue}")));
    }
    let mut rng = stream_rng(seed, 0);
    let a = gaussian_matrix(m_tx, m_ue, &mut rng);
    let b = gaussian_matrix(m_ue, m_ue, &mut rng);
    let u = thin_svd(&a, SVD_TOL)?.u;
    let v = thin_svd(&b, SVD_TOL)?.v;
    let sigma = law.profile(m_ue);
    Ok(u.scale_cols(&sigma).matmul(&v.conj_transpose())?)
}

const TOY_H: [f64; 24] = [
    -0.4, -0.2, 0.0, //
    -0.4, 0.9, 1.2, //
    -0.2, 0.1, -0.2, //
    0.7, -0.8, -0.5, //
    0.0, -0.2, -0.2, //
    0.6, -0.5, 0.6, //
    -0.4, 1.2, -0.1, //
    -1.2, -0.4, -0.8,
];

/// The 8x3 real toy channel with unit noise and unit power limits.
pub fn toy_channel() -> ChannelInstance {
    let h = CMatrix::from_real(8, 3, &TOY_H).expect("static toy channel");
    ChannelInstance::new(h, vec![1.0; 3], vec![1.0; 8]).expect("static toy channel")
}

/// `omega_k = chi * ||H||_F / m_ue` for every user.
pub fn noise_from_chi(h: &CMatrix, chi: f64) -> Vec<f64> {
    let w = chi * h.frobenius_norm() / h.cols() as f64;
    vec![w; h.cols()]
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelFile {
    m_tx: usize,
    m_ue: usize,
    h_real: Vec<Vec<f64>>,
    h_imag: Vec<Vec<f64>>,
    omega: Vec<f64>,
    beta: Vec<f64>,
}

impl ChannelInstance {
    pub fn to_json(&self) -> String {
        let file = ChannelFile {
            m_tx: self.m_tx(),
            m_ue: self.m_ue(),
            h_real: self.h.real_parts(),
            h_imag: self.h.imag_parts(),
            omega: self.omega.clone(),
            beta: self.beta.clone(),
        };
        serde_json::to_string_pretty(&file).expect("channel serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: ChannelFile =
            serde_json::from_str(text).map_err(|source| Error::Json { path: origin.to_string(), source })?;
        if file.h_real.len() != file.m_tx || file.h_imag.len() != file.m_tx {
            return Err(Error::InvalidChannel(format!(
                "h has {}/{} rows, header says m_tx = {}",
                file.h_real.len(),
                file.h_imag.len(),
                file.m_tx
            )));
        }
        let h = CMatrix::from_parts(&file.h_real, &file.h_imag)
            .map_err(|e| Error::InvalidChannel(e.to_string()))?;
        if h.cols() != file.m_ue {
            return Err(Error::InvalidChannel(format!(
                "h has {} columns, header says m_ue = {}",
                h.cols(),
                file.m_ue
            )));
        }
        Self::new(h, file.omega, file.beta)
    }
}

pub fn save_channel(c: &ChannelInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, c.to_json()).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelInstance> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    ChannelInstance::from_json(&text, &path.display().to_string())
}
