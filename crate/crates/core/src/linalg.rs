//! Dense LU factorization with partial pivoting.

/// A pivot fell below the singularity threshold while eliminating `column`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
    pub pivot: f64,
}

/// Pivots smaller than this fraction of the largest matrix entry count as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `PA = LU` of a row-major square matrix, stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, SingularPivot> {
        assert_eq!(a.len(), n * n, "matrix must be {n}x{n}");
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = PIVOT_TOLERANCE * scale;
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            let (p, best) =
                (col..n)
                    .map(|r| (r, a[r * n + col].abs()))
                    .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best.is_nan() || best <= threshold {
                return Err(SingularPivot {
                    column: col,
                    pivot: a[p * n + col],
                });
            }
            if p != col {
                for c in 0..n {
                    a.swap(col * n + c, p * n + c);
                }
                perm.swap(col, p);
            }
            let pivot = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / pivot;
                a[r * n + col] = f;
                if f == 0.0 {
                    continue;
                }
                for c in col + 1..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * y[c]).sum();
            y[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * y[c]).sum();
            y[r] = (y[r] - s) / self.lu[r * n + r];
        }
        y
    }
}

/// Solves `A x = b` for a row-major `n×n` matrix.
pub fn solve(a: Vec<f64>, b: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let n = b.len();
    Ok(Lu::factor(a, n)?.solve(b))
}

/// `A x` for a row-major square matrix.
pub fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|r| (0..n).map(|c| a[r * n + c] * x[c]).sum()).collect()
}
