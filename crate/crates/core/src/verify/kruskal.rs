use crate::linalg::{numeric_rank, CMatrix};

pub const DEFAULT_KRUSKAL_LIMIT: u64 = 1_000_000;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KruskalRank {
    Exact(usize),
    /// Enumerating the column subsets would exceed the limit.
    Undetermined,
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn all_subsets_independent(a: &CMatrix, k: usize) -> bool {
    let n = a.cols();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if numeric_rank(&a.select_columns(&idx), RANK_TOL) < k {
            return false;
        }
        if !next_combination(&mut idx, n) {
            return true;
        }
    }
}

/// Largest `k` such that every set of `k` columns of `a` is linearly
/// independent, searched from the largest candidate down.
pub fn kruskal_rank(a: &CMatrix, limit: u64) -> KruskalRank {
    let n = a.cols();
    let mut k = a.rows().min(n);
    while k > 0 {
        if binomial(n, k) > limit {
            return KruskalRank::Undetermined;
        }
        if all_subsets_independent(a, k) {
            return KruskalRank::Exact(k);
        }
        k -= 1;
    }
    KruskalRank::Exact(0)
}

/// Whether `[H | I]` has full Kruskal rank `m_tx`; `None` when undetermined.
pub fn identity_augmented_full_krank(h: &CMatrix, limit: u64) -> Option<bool> {
    let aug = h.hstack(&CMatrix::identity(h.rows())).expect("same row count");
    match kruskal_rank(&aug, limit) {
        KruskalRank::Exact(k) => Some(k == h.rows()),
        KruskalRank::Undetermined => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_gaussian, toy_channel};
    use crate::linalg::Lu;

    #[test]
    fn combinations_enumerate_binomial_count() {
        let mut idx = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut idx, 6) {
            count += 1;
        }
        assert_eq!(count, binomial(6, 3));
        assert_eq!(binomial(11, 8), 165);
    }

    #[test]
    fn toy_channel_with_identity() {
        // The toy channel has exact zeros at (0, 2) and (4, 0), so three of
        // the 165 square 8-column submatrices of [H | I] are singular.
        let h = toy_channel().h().clone();
        let aug = h.hstack(&CMatrix::identity(8)).unwrap();
        let mut idx: Vec<usize> = (0..8).collect();
        let mut singular = 0;
        loop {
            let det = Lu::factor(&aug.select_columns(&idx)).map(|lu| lu.determinant().norm()).unwrap_or(0.0);
            if det < 1e-12 {
                singular += 1;
            }
            if !next_combination(&mut idx, 11) {
                break;
            }
        }
        assert_eq!(singular, 3);
        assert_eq!(kruskal_rank(&aug, DEFAULT_KRUSKAL_LIMIT), KruskalRank::Exact(7));
        assert_eq!(identity_augmented_full_krank(&h, DEFAULT_KRUSKAL_LIMIT), Some(false));
    }

    #[test]
    fn repeated_column_lowers_rank() {
        let h = gen_gaussian(4, 3, 1);
        let dup = h.hstack(&h.select_columns(&[0])).unwrap();
        assert_eq!(kruskal_rank(&h, DEFAULT_KRUSKAL_LIMIT), KruskalRank::Exact(3));
        assert_eq!(kruskal_rank(&dup, DEFAULT_KRUSKAL_LIMIT), KruskalRank::Exact(1));
    }

    #[test]
    fn zero_row_breaks_identity_augmentation() {
        let dense = gen_gaussian(3, 2, 7);
        assert_eq!(identity_augmented_full_krank(&dense, DEFAULT_KRUSKAL_LIMIT), Some(true));
        let mut holed = dense.clone();
        for j in 0..2 {
            holed[(1, j)] = crate::linalg::C64::new(0.0, 0.0);
        }
        assert_eq!(identity_augmented_full_krank(&holed, DEFAULT_KRUSKAL_LIMIT), Some(false));
    }

    #[test]
    fn limit_makes_result_undetermined() {
        assert_eq!(kruskal_rank(&gen_gaussian(8, 12, 0), 10), KruskalRank::Undetermined);
    }
}
