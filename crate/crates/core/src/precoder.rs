use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Precoding matrix `P` (`m_tx x m_ue`): column `j` is the beam of user `j`,
/// row `i` feeds antenna `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder(CMatrix);

impl Precoder {
    pub fn new(p: CMatrix) -> Self {
        Self(p)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn m_tx(&self) -> usize {
        self.0.rows()
    }

    pub fn m_ue(&self) -> usize {
        self.0.cols()
    }

    /// `||e_i* P||_2^2` per antenna.
    pub fn row_power(&self) -> Vec<f64> {
        self.0.row_norms_sqr()
    }

    pub fn column_power(&self) -> Vec<f64> {
        self.0.column_norms_sqr()
    }

    pub fn total_power(&self) -> f64 {
        self.0.frobenius_norm().powi(2)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn to_json(&self) -> String {
        let file = PrecoderFile {
            m_tx: self.m_tx(),
            m_ue: self.m_ue(),
            p_real: self.0.real_parts(),
            p_imag: self.0.imag_parts(),
        };
        serde_json::to_string_pretty(&file).expect("precoder serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: PrecoderFile =
            serde_json::from_str(text).map_err(|source| Error::Json { path: origin.to_string(), source })?;
        let p = CMatrix::from_parts(&file.p_real, &file.p_imag)
            .map_err(|e| Error::InvalidPrecoder(e.to_string()))?;
        if p.shape() != (file.m_tx, file.m_ue) {
            return Err(Error::InvalidPrecoder(format!(
                "matrix is {}x{}, header says {}x{}",
                p.rows(),
                p.cols(),
                file.m_tx,
                file.m_ue
            )));
        }
        Ok(Self(p))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PrecoderFile {
    m_tx: usize,
    m_ue: usize,
    p_real: Vec<Vec<f64>>,
    p_imag: Vec<Vec<f64>>,
}

pub fn save_precoder(p: &Precoder, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, p.to_json()).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_precoder(path: impl AsRef<Path>) -> Result<Precoder> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    Precoder::from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p = Precoder::new(crate::channel::gen_gaussian(5, 2, 9));
        let back = Precoder::from_json(&p.to_json(), "mem").unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = r#"{"m_tx":3,"m_ue":1,"p_real":[[1],[2]],"p_imag":[[0],[0]]}"#;
        assert!(matches!(Precoder::from_json(text, "x"), Err(Error::InvalidPrecoder(_))));
    }
}
