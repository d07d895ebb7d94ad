//! Small dense least squares by Householder QR with column pivoting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest pivot count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    /// Ratio of the largest to the smallest pivot of R.
    pub condition_hint: f64,
}

/// Solves `min ‖A x − b‖` for a tall matrix of full column rank. Rank
/// deficiency is reported with the columns that fell below tolerance.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution> {
    let (m, n) = a.shape();
    assert!(m >= n && b.len() == m, "lstsq needs a tall system with matching rhs");
    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // Pivot: remaining column with the largest trailing norm.
        let (best, _) = (k..n)
            .map(|j| (j, r.view((k, j), (m - k, 1)).norm_squared()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best != k {
            r.swap_columns(k, best);
            perm.swap(k, best);
        }

        let alpha = {
            let col = r.view((k, k), (m - k, 1));
            let norm = col.norm();
            if r[(k, k)] > 0.0 {
                -norm
            } else {
                norm
            }
        };
        if alpha == 0.0 {
            continue;
        }
        let mut v = r.view((k, k), (m - k, 1)).clone_owned();
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot = v.dot(&r.view((k, j), (m - k, 1)));
            let f = 2.0 * dot / vnorm2;
            let mut col = r.view_mut((k, j), (m - k, 1));
            col -= &v * f;
        }
        let dot = v.dot(&qtb.rows(k, m - k));
        let f = 2.0 * dot / vnorm2;
        let mut tail = qtb.rows_mut(k, m - k);
        tail -= &v * f;
    }

    let pivots: Vec<f64> = (0..n).map(|k| r[(k, k)].abs()).collect();
    let largest = pivots[0];
    let deficient: Vec<usize> = (0..n)
        .filter(|&k| !(pivots[k] > RANK_TOLERANCE * largest))
        .map(|k| perm[k])
        .collect();
    if !deficient.is_empty() {
        let mut columns = deficient;
        columns.sort_unstable();
        return Err(Error::RankDeficient { columns });
    }

    let mut z = DVector::zeros(n);
    for k in (0..n).rev() {
        let mut s = qtb[k];
        for j in k + 1..n {
            s -= r[(k, j)] * z[j];
        }
        z[k] = s / r[(k, k)];
    }
    let mut x = DVector::zeros(n);
    for (k, &col) in perm.iter().enumerate() {
        x[col] = z[k];
    }
    let smallest = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LstsqSolution {
        x,
        condition_hint: largest / smallest,
    })
}
