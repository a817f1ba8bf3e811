//! Tiny dense linear algebra for the fixed-size systems in the geometry kernel
//! and the least-squares fits. Matrices are stored in `[[f64; N]; N]` with only
//! the leading `n x n` block in use.

/// Gauss-Jordan inverse with partial pivoting. Returns `None` when a pivot
/// vanishes exactly.
pub(crate) fn invert<const N: usize>(a: &[[f64; N]; N], n: usize) -> Option<[[f64; N]; N]> {
    debug_assert!(n <= N);
    let mut m = *a;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

pub(crate) fn norm1<const N: usize>(a: &[[f64; N]; N], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with the 1-norm condition estimate `|A| |A^-1|`.
pub(crate) fn invert_with_cond<const N: usize>(
    a: &[[f64; N]; N],
    n: usize,
) -> (Option<[[f64; N]; N]>, f64) {
    match invert(a, n) {
        Some(inv) => {
            let cond = norm1(a, n) * norm1(&inv, n);
            (Some(inv), if cond.is_finite() { cond } else { f64::INFINITY })
        }
        None => (None, f64::INFINITY),
    }
}

pub(crate) fn mat_vec<const N: usize>(a: &[[f64; N]; N], x: &[f64; N], n: usize) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..n {
        y[i] = (0..n).map(|j| a[i][j] * x[j]).sum();
    }
    y
}

/// Determinant of a dynamically sized square matrix by partial-pivot elimination.
pub(crate) fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..n {
            let f = a[r][col] / p;
            if f != 0.0 {
                for j in col..n {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = [[4.0, 7.0, 0.0], [2.0, 6.0, 0.0], [0.0, 0.0, 1.0]];
        let inv = invert(&a, 2).unwrap();
        assert!((inv[0][0] - 0.6).abs() < 1e-12);
        assert!((inv[0][1] + 0.7).abs() < 1e-12);
        assert!((inv[1][0] + 0.2).abs() < 1e-12);
        assert!((inv[1][1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        let (inv, cond) = invert_with_cond(&a, 2);
        assert!(inv.is_none() || cond > 1e15);
    }

    #[test]
    fn determinant_matches_hand_value() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        assert!((determinant(a) - 18.0).abs() < 1e-12);
    }
}
