//! Periodic (cyclic) tridiagonal systems.
//!
//! Row `i` reads `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]` with
//! indices taken modulo `n`. For `n ≥ 3` the system is solved with the
//! Sherman–Morrison correction of a Thomas sweep; `n = 2` is solved directly.

use crate::error::{Error, Result};

/// Relative pivot magnitude below which the system is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 {
            return Err(Error::invalid("cells", format!("cyclic system needs n >= 2, got {n}")));
        }
        if lower.len() != n || upper.len() != n || rhs.len() != n {
            return Err(Error::invalid("system", "band lengths differ"));
        }
        Ok(Self { lower, diag, upper, rhs })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let prev = x[(i + n - 1) % n];
                let next = x[(i + 1) % n];
                self.lower[i] * prev + self.diag[i] * x[i] + self.upper[i] * next
            })
            .collect()
    }

    /// Dense row-major copy of the matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] += self.diag[i];
            a[i][(i + n - 1) % n] += self.lower[i];
            a[i][(i + 1) % n] += self.upper[i];
        }
        a
    }

    /// Infinity norm of the matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| self.row_scale(i))
            .fold(0.0, f64::max)
    }

    /// Whether every row satisfies `|diag| > |lower| + |upper|`.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        (0..self.len()).all(|i| self.diag[i].abs() > self.lower[i].abs() + self.upper[i].abs())
    }

    fn row_scale(&self, i: usize) -> f64 {
        self.lower[i].abs() + self.diag[i].abs() + self.upper[i].abs()
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n == 2 {
            return self.solve_two();
        }
        let (a, b, c) = (&self.lower, &self.diag, &self.upper);
        // Corner entries A[0][n-1] and A[n-1][0].
        let beta = a[0];
        let alpha = c[n - 1];
        let gamma = -b[0];
        if gamma.abs() < PIVOT_TOLERANCE * self.row_scale(0) || gamma == 0.0 {
            return Err(Error::SingularSystem { row: 0, pivot: b[0] });
        }

        let mut bb = b.clone();
        bb[0] = b[0] - gamma;
        bb[n - 1] = b[n - 1] - alpha * beta / gamma;

        let sweep = ThomasSweep::factor(&a[1..], &bb, &c[..n - 1], |i| self.row_scale(i))?;
        let x = sweep.solve(&self.rhs);
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = sweep.solve(&u);

        let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
        if denom.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularSystem { row: n - 1, pivot: denom });
        }
        let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }

    fn solve_two(&self) -> Result<Vec<f64>> {
        let a00 = self.diag[0];
        let a01 = self.lower[0] + self.upper[0];
        let a10 = self.lower[1] + self.upper[1];
        let a11 = self.diag[1];
        let det = a00 * a11 - a01 * a10;
        let scale = (a00 * a11).abs().max((a01 * a10).abs());
        if det.abs() <= PIVOT_TOLERANCE * scale || det == 0.0 {
            return Err(Error::SingularSystem { row: 1, pivot: det });
        }
        let (r0, r1) = (self.rhs[0], self.rhs[1]);
        Ok(vec![(a11 * r0 - a01 * r1) / det, (a00 * r1 - a10 * r0) / det])
    }
}

/// LU factors of a plain (non-periodic) tridiagonal matrix.
struct ThomasSweep<'a> {
    sub: &'a [f64],
    pivots: Vec<f64>,
    gam: Vec<f64>,
}

impl<'a> ThomasSweep<'a> {
    /// `sub` has length `n - 1` (entries below the diagonal), `sup` likewise above.
    fn factor(
        sub: &'a [f64],
        diag: &[f64],
        sup: &[f64],
        row_scale: impl Fn(usize) -> f64,
    ) -> Result<Self> {
        let n = diag.len();
        let mut pivots = vec![0.0; n];
        let mut gam = vec![0.0; n];
        pivots[0] = diag[0];
        for j in 0..n {
            if j > 0 {
                gam[j] = sup[j - 1] / pivots[j - 1];
                pivots[j] = diag[j] - sub[j - 1] * gam[j];
            }
            if pivots[j].abs() < PIVOT_TOLERANCE * row_scale(j) || pivots[j] == 0.0 {
                return Err(Error::SingularSystem { row: j, pivot: pivots[j] });
            }
        }
        Ok(Self { sub, pivots, gam })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0] / self.pivots[0];
        for j in 1..n {
            x[j] = (rhs[j] - self.sub[j - 1] * x[j - 1]) / self.pivots[j];
        }
        for j in (0..n - 1).rev() {
            x[j] -= self.gam[j + 1] * x[j + 1];
        }
        x
    }
}
