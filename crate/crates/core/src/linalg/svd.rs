use super::{adjoint_mul, dot, herm_eig, norm2, C64, CMatrix, LinalgError, Result};

/// Thin SVD `h = U diag(sigma) V*` of a tall matrix.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: CMatrix,
    /// Descending.
    pub sigma: Vec<f64>,
    pub v: CMatrix,
    /// `true` where `sigma[k] <= tol * sigma[0]` and the column of `u` was
    /// completed by Gram-Schmidt instead of `h v_k / sigma_k`.
    pub deficient: Vec<bool>,
}

impl ThinSvd {
    pub fn is_full_rank(&self) -> bool {
        !self.deficient.iter().any(|&d| d)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let us = self.u.scale_cols(&self.sigma);
        us.matmul(&self.v.conj_transpose()).expect("consistent SVD factors")
    }
}

/// Thin SVD through the Gram matrix `h* h`.
pub fn thin_svd(h: &CMatrix, tol: f64) -> Result<ThinSvd> {
    let (m, n) = h.shape();
    if m < n {
        return Err(LinalgError::DimensionMismatch(format!("thin SVD needs rows >= cols, got {m}x{n}")));
    }
    let gram = adjoint_mul(h, h)?;
    let eig = herm_eig(&gram)?;
    let order: Vec<usize> = (0..n).rev().collect();
    let sigma: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0).sqrt()).collect();
    let v = eig.eigenvectors.select_columns(&order);
    let smax = sigma.first().copied().unwrap_or(0.0);

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut deficient = vec![false; n];
    for k in 0..n {
        if sigma[k] > tol * smax && sigma[k] > 0.0 {
            let hv = h.mul_vec(&v.column(k))?;
            u_cols.push(hv.into_iter().map(|z| z / sigma[k]).collect());
        } else {
            deficient[k] = true;
            u_cols.push(complete_basis(&u_cols, m));
        }
    }
    Ok(ThinSvd { u: CMatrix::from_columns(&u_cols), sigma, v, deficient })
}

/// Unit vector orthogonal to `basis`, taken from the canonical vector with
/// the largest residual.
fn complete_basis(basis: &[Vec<C64>], m: usize) -> Vec<C64> {
    let mut best: Option<(f64, Vec<C64>)> = None;
    for i in 0..m {
        let mut x = vec![C64::new(0.0, 0.0); m];
        x[i] = C64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in basis {
                let proj = dot(b, &x);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= proj * bi;
                }
            }
        }
        let nrm = norm2(&x);
        if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
            best = Some((nrm, x));
        }
    }
    let (nrm, x) = best.expect("m >= 1");
    x.into_iter().map(|z| z / nrm).collect()
}
