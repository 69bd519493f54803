use super::{adjoint_mul, C64, CMatrix, LinalgError, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const CHOL_PIVOT_TOL: f64 = 1e-14;
const LU_PIVOT_TOL: f64 = 1e-14;

/// Lower Cholesky factor `L` with `a = L L*`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "Cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let scale = a.frobenius_norm();
        let defect = a.hermitian_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(LinalgError::NotHermitian { asymmetry: defect });
        }
        let n = a.rows();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > CHOL_PIVOT_TOL * scale) {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in j + 1..n {
                // lower triangle taken from the conjugate of the upper one
                let mut s = a[(j, i)].conj();
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor_l(&self) -> &CMatrix {
        &self.l
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.l.rows();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut x = b.clone();
        for c in 0..b.cols() {
            // L y = b
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)].re;
            }
            // L* x = y
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.l[(k, i)].conj() * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)].re;
            }
        }
        Ok(x)
    }
}

/// Solves `a x = b` for Hermitian positive definite `a`.
pub fn chol_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Cholesky::factor(a)?.solve(b)
}

/// Partial-pivoted LU factorization `P a = L U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = LU_PIVOT_TOL * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best >= threshold) || best == 0.0 {
                return Err(LinalgError::Singular { index: k, pivot: best });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn determinant(&self) -> C64 {
        let n = self.lu.rows();
        let mut det = C64::new(if self.swaps.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0);
        for i in 0..n {
            det *= self.lu[(i, i)];
        }
        det
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut x = CMatrix::from_fn(n, b.cols(), |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves a square system with partial-pivoted LU.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Lu::factor(a)?.solve(b)
}

/// Minimum-norm solution of `y* x = b` for tall, full-column-rank `y`:
/// `x = y (y* y)^{-1} b`.
pub fn min_norm_solve(y: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if y.rows() < y.cols() || b.len() != y.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "min-norm solve with {}x{} matrix and rhs of length {}",
            y.rows(),
            y.cols(),
            b.len()
        )));
    }
    let gram = adjoint_mul(y, y)?;
    let rhs = CMatrix::from_fn(b.len(), 1, |i, _| b[i]);
    let coef = chol_solve(&gram, &rhs).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { .. } => LinalgError::RankDeficient,
        other => other,
    })?;
    y.mul_vec(&coef.column(0))
}

/// Numerical rank by Gaussian elimination with complete pivoting; pivots
/// below `tol * max|a_ij|` count as zero.
pub fn numeric_rank(a: &CMatrix, tol: f64) -> usize {
    let threshold = tol * a.max_abs();
    if a.max_abs() == 0.0 {
        return 0;
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut rank = 0;
    for k in 0..m.min(n) {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for i in k..m {
            for j in k..n {
                let v = w[(i, j)].norm();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= threshold {
            break;
        }
        for j in 0..n {
            let tmp = w[(k, j)];
            w[(k, j)] = w[(pi, j)];
            w[(pi, j)] = tmp;
        }
        for i in 0..m {
            let tmp = w[(i, k)];
            w[(i, k)] = w[(i, pj)];
            w[(i, pj)] = tmp;
        }
        let pivot = w[(k, k)];
        for i in k + 1..m {
            let f = w[(i, k)] / pivot;
            for j in k..n {
                let u = w[(k, j)];
                w[(i, j)] -= f * u;
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rand_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMatrix::from_fn(rows, cols, |_, _| {
            let re = next();
            c(re, next())
        })
    }

    fn spd(n: usize, seed: u64) -> CMatrix {
        let a = rand_matrix(n, n, seed);
        let g = adjoint_mul(&a, &a).unwrap();
        g.add(&CMatrix::identity(n).scale(0.5)).unwrap()
    }

    #[test]
    fn chol_identity_and_diag() {
        let b = rand_matrix(3, 2, 1);
        let x = chol_solve(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
        let a = CMatrix::from_diag(&[2.0, 4.0]);
        let rhs = CMatrix::from_real(2, 1, &[2.0, 4.0]).unwrap();
        let x = chol_solve(&a, &rhs).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chol_against_lu_oracle() {
        for seed in 0..10 {
            let a = spd(8, seed);
            let b = rand_matrix(8, 3, seed + 100);
            let x = chol_solve(&a, &b).unwrap();
            let y = lu_solve(&a, &b).unwrap();
            let rel = x.sub(&y).unwrap().frobenius_norm() / y.frobenius_norm();
            assert!(rel <= 1e-10, "seed {seed}: {rel:e}");
        }
    }

    #[test]
    fn chol_rejects_indefinite_and_asymmetric() {
        let a = CMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            chol_solve(&a, &CMatrix::identity(2)),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
        let b = CMatrix::from_real(2, 2, &[1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(Cholesky::factor(&b), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn lu_residual_and_singular() {
        let a = rand_matrix(8, 8, 5);
        let b = rand_matrix(8, 2, 6);
        let x = lu_solve(&a, &b).unwrap();
        let r = matmul(&a, &x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(r <= 1e-10 * b.frobenius_norm());
        let sing = CMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_solve(&sing, &CMatrix::from_real(2, 1, &[1.0, 1.0]).unwrap()), Err(LinalgError::Singular { .. })));
        let d = CMatrix::from_diag(&[2.0, 4.0]);
        let x = lu_solve(&d, &CMatrix::from_real(2, 1, &[2.0, 4.0]).unwrap()).unwrap();
        assert_eq!(x.column(0), vec![c(1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn lu_determinant_of_diag() {
        let d = CMatrix::from_diag(&[2.0, -3.0, 0.5]);
        assert!((Lu::factor(&d).unwrap().determinant() - c(-3.0, 0.0)).norm() < 1e-15);
        let p = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((Lu::factor(&p).unwrap().determinant() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn min_norm_trivial_cases() {
        let e1 = CMatrix::from_real(3, 1, &[1.0, 0.0, 0.0]).unwrap();
        let x = min_norm_solve(&e1, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let cols = CMatrix::identity(4).select_columns(&[1, 3]);
        let x = min_norm_solve(&cols, &[c(2.0, 1.0), c(-1.0, 0.5)]).unwrap();
        assert_eq!(x, vec![c(0.0, 0.0), c(2.0, 1.0), c(0.0, 0.0), c(-1.0, 0.5)]);
    }

    /// Modified Gram-Schmidt `y = Q R`, then `x = Q R^{-*} b`.
    fn qr_min_norm(y: &CMatrix, b: &[C64]) -> Vec<C64> {
        let (m, n) = y.shape();
        let mut q: Vec<Vec<C64>> = (0..n).map(|j| y.column(j)).collect();
        let mut r = vec![vec![c(0.0, 0.0); n]; n];
        for j in 0..n {
            for i in 0..j {
                let proj = crate::linalg::dot(&q[i], &q[j]);
                r[i][j] = proj;
                let qi = q[i].clone();
                for (a, b) in q[j].iter_mut().zip(&qi) {
                    *a -= proj * b;
                }
            }
            let nrm = crate::linalg::norm2(&q[j]);
            r[j][j] = c(nrm, 0.0);
            for a in q[j].iter_mut() {
                *a /= nrm;
            }
        }
        // R* z = b (lower triangular)
        let mut z = vec![c(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= r[k][i].conj() * z[k];
            }
            z[i] = s / r[i][i].conj();
        }
        (0..m).map(|row| (0..n).fold(c(0.0, 0.0), |acc, j| acc + q[j][row] * z[j])).collect()
    }

    #[test]
    fn min_norm_against_gram_schmidt_oracle() {
        let y = rand_matrix(24, 10, 77);
        let b: Vec<C64> = rand_matrix(10, 1, 78).column(0);
        let x = min_norm_solve(&y, &b).unwrap();
        let oracle = qr_min_norm(&y, &b);
        let diff: f64 = x.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-8 * crate::linalg::norm2(&oracle));
        let resid = y.conj_transpose().mul_vec(&x).unwrap();
        let err: f64 = resid.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * crate::linalg::norm2(&b));
    }

    #[test]
    fn min_norm_rank_deficient() {
        let y = CMatrix::from_real(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(min_norm_solve(&y, &[c(1.0, 0.0), c(1.0, 0.0)]), Err(LinalgError::RankDeficient));
    }

    #[test]
    fn numeric_rank_cases() {
        assert_eq!(numeric_rank(&CMatrix::identity(3), 1e-10), 3);
        assert_eq!(numeric_rank(&CMatrix::zeros(3, 4), 1e-10), 0);
        let u = rand_matrix(5, 1, 9);
        let v = rand_matrix(4, 1, 10);
        let outer = matmul(&u, &v.conj_transpose()).unwrap();
        assert_eq!(numeric_rank(&outer, 1e-10), 1);
    }
}
