//! Lawson-Hanson active-set non-negative least squares.
//!
//! Solves `min ‖A x - b‖₂  s.t.  x ≥ 0` for a dense `m × k` design. The
//! passive-set subproblems are solved with Householder QR; when the passive
//! columns are numerically dependent the minimum-norm solution is used and
//! the result is flagged.

use crate::error::{LvError, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(LvError::Precondition("design matrix must be nonempty".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LvError::Precondition("design rows have unequal lengths".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j]))
            .collect()
    }

    /// `Aᵀ r`
    pub fn tr_mul_vec(&self, r: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self.get(i, j) * r[i]))
            .collect()
    }

    fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution<T> {
    pub x: Vec<T>,
    /// `‖A x - b‖₂` at the solution.
    pub residual_norm: T,
    /// Set when some passive-set subproblem was rank deficient.
    pub rank_deficient: bool,
    pub iterations: usize,
}

/// Solves the NNLS problem for `design` (`m × k`, `m ≥ k`) and `targets`.
pub fn nnls_solve<T: Real>(design: &Matrix<T>, targets: &[T]) -> Result<NnlsSolution<T>> {
    let (m, k) = (design.rows(), design.cols());
    if targets.len() != m {
        return Err(LvError::Precondition(format!("{} targets for {m} design rows", targets.len())));
    }
    if m < k {
        return Err(LvError::Precondition(format!("need at least {k} rows, got {m}")));
    }
    if design.data.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(LvError::Precondition("design and targets must be finite".into()));
    }

    let scale = design.max_abs().max(T::one());
    let tol = T::lit(10.0) * T::epsilon() * scale * scale * T::from_usize(m.max(k)).unwrap()
        * targets.iter().fold(T::one(), |a, b| a.max(b.abs()));
    let max_iter = 3 * k.max(1) + 10;

    let mut x = vec![T::zero(); k];
    let mut passive = vec![false; k];
    let mut rank_deficient = false;
    let mut iterations = 0;

    let gradient = |x: &[T]| {
        let fitted = design.mul_vec(x);
        let resid: Vec<T> = targets.iter().zip(&fitted).map(|(b, f)| *b - *f).collect();
        design.tr_mul_vec(&resid)
    };

    let mut rejected = vec![false; k];
    loop {
        let w = gradient(&x);
        let candidate = (0..k)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let Some(entering) = candidate else { break };
        iterations += 1;
        if iterations > max_iter {
            break;
        }
        passive[entering] = true;

        let mut first_solve = true;
        loop {
            let (s, deficient) = passive_solve(design, targets, &passive);
            rank_deficient |= deficient;
            if first_solve && s[entering] <= T::zero() {
                // Entering column cannot improve the fit; try the next one.
                passive[entering] = false;
                rejected[entering] = true;
                break;
            }
            first_solve = false;
            if (0..k).filter(|&j| passive[j]).all(|j| s[j] > T::zero()) {
                x = s;
                rejected.iter_mut().for_each(|r| *r = false);
                break;
            }
            // Step from x toward s until the first passive coordinate hits zero.
            let step = (0..k)
                .filter(|&j| passive[j] && s[j] <= T::zero())
                .map(|j| x[j] / (x[j] - s[j]))
                .fold(T::one(), T::min);
            for j in 0..k {
                x[j] = x[j] + step * (s[j] - x[j]);
                if passive[j] && x[j] <= tol {
                    x[j] = T::zero();
                    passive[j] = false;
                }
            }
            rejected.iter_mut().for_each(|r| *r = false);
        }
    }

    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let fitted = design.mul_vec(&x);
    let residual_norm = targets
        .iter()
        .zip(&fitted)
        .fold(T::zero(), |acc, (b, f)| acc + (*b - *f) * (*b - *f))
        .sqrt();
    Ok(NnlsSolution { x, residual_norm, rank_deficient, iterations })
}

/// Unconstrained least squares restricted to the passive columns; the
/// remaining coordinates are zero.
fn passive_solve<T: Real>(design: &Matrix<T>, targets: &[T], passive: &[bool]) -> (Vec<T>, bool) {
    let cols: Vec<usize> = (0..design.cols()).filter(|&j| passive[j]).collect();
    let sub: Vec<Vec<T>> = cols.iter().map(|&j| design.column(j)).collect();
    let (coef, deficient) = least_squares(&sub, targets);
    let mut full = vec![T::zero(); design.cols()];
    for (c, &j) in coef.into_iter().zip(&cols) {
        full[j] = c;
    }
    (full, deficient)
}

/// Least squares on column-major data via Householder QR. Falls back to the
/// minimum-norm solution when `R` has a negligible diagonal entry.
pub(crate) fn least_squares<T: Real>(columns: &[Vec<T>], b: &[T]) -> (Vec<T>, bool) {
    let n = columns.len();
    let m = b.len();
    let mut a: Vec<Vec<T>> = columns.to_vec();
    let mut rhs = b.to_vec();

    for j in 0..n {
        let norm = (j..m).fold(T::zero(), |acc, i| acc + a[j][i] * a[j][i]).sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[j][j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (j..m).map(|i| a[j][i]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        if vnorm2 == T::zero() {
            continue;
        }
        let reflect = |col: &mut [T]| {
            let dot = v.iter().zip(&col[j..]).fold(T::zero(), |acc, (vi, ci)| acc + *vi * *ci);
            let f = T::two() * dot / vnorm2;
            for (ci, vi) in col[j..].iter_mut().zip(&v) {
                *ci = *ci - f * *vi;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(col);
        }
        reflect(&mut rhs);
    }

    let diag_max = (0..n).fold(T::zero(), |mx, j| mx.max(a[j][j].abs()));
    let cutoff = diag_max * T::epsilon() * T::from_usize(m.max(n).max(1)).unwrap() * T::lit(10.0);
    if diag_max == T::zero() || (0..n).any(|j| a[j][j].abs() <= cutoff) {
        return (minimum_norm(columns, b), true);
    }

    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = ((i + 1)..n).fold(rhs[i], |acc, j| acc - a[j][i] * x[j]);
        x[i] = s / a[i][i];
    }
    (x, false)
}

/// Minimum-norm least squares via the eigendecomposition of the Gram matrix.
fn minimum_norm<T: Real>(columns: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = columns.len();
    let dot = |u: &[T], v: &[T]| u.iter().zip(v).fold(T::zero(), |acc, (x, y)| acc + *x * *y);
    let mut gram: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| dot(&columns[i], &columns[j])).collect()).collect();
    let atb: Vec<T> = columns.iter().map(|c| dot(c, b)).collect();
    let (values, vectors) = jacobi_eigen(&mut gram);
    let top = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cutoff = top * T::epsilon() * T::from_usize(n.max(1) * 100).unwrap();
    let mut x = vec![T::zero(); n];
    for (k, &ev) in values.iter().enumerate() {
        if ev.abs() <= cutoff {
            continue;
        }
        let proj = (0..n).fold(T::zero(), |acc, i| acc + vectors[i][k] * atb[i]) / ev;
        for i in 0..n {
            x[i] = x[i] + proj * vectors[i][k];
        }
    }
    x
}

/// Cyclic Jacobi eigenvalue iteration for a small symmetric matrix.
/// Returns eigenvalues and eigenvectors stored as columns.
fn jacobi_eigen<T: Real>(a: &mut [Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut v: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    for _sweep in 0..100 {
        let off = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a[i][j] * a[i][j]);
        if off <= T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(rows: &[Vec<f64>], b: &[f64]) -> NnlsSolution<f64> {
        nnls_solve(&Matrix::from_rows(rows).unwrap(), b).unwrap()
    }

    fn kkt_residual(rows: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
        let a = Matrix::from_rows(rows).unwrap();
        let fitted = a.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&fitted).map(|(b, f)| b - f).collect();
        let w = a.tr_mul_vec(&r);
        x.iter()
            .zip(&w)
            .map(|(&xj, &wj)| if xj > 0.0 { wj.abs() } else { wj.max(0.0) })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_clips_negative_component() {
        let sol = solve(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[3.0, -2.0]);
        assert_eq!(sol.x, vec![3.0, 0.0]);
        assert!(!sol.rank_deficient);
    }

    #[test]
    fn consistent_system_is_solved_exactly() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let sol = solve(&rows, &[1.0, 1.0, 2.0]);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    fn all_nonpositive_correlation_gives_zero() {
        let sol = solve(&[vec![1.0, 2.0], vec![1.0, 1.0]], &[-1.0, -3.0]);
        assert_eq!(sol.x, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicate_columns_flag_rank_deficiency() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let sol = solve(&rows, &[2.0, 4.0, 6.0]);
        assert!(sol.residual_norm < 1e-9, "{sol:?}");
        assert!(sol.x.iter().all(|v| *v >= 0.0));
        assert!(kkt_residual(&rows, &[2.0, 4.0, 6.0], &sol.x) < 1e-9);
    }

    #[test]
    fn three_variable_kkt() {
        let rows = vec![
            vec![1.0, 0.5, -0.3],
            vec![0.2, 1.0, 0.7],
            vec![0.9, -0.4, 1.0],
            vec![0.3, 0.3, 0.3],
            vec![-0.5, 0.8, 0.1],
        ];
        let b = [1.0, -0.5, 0.7, 0.2, -1.0];
        let sol = solve(&rows, &b);
        assert!(sol.x.iter().all(|v| *v >= 0.0));
        assert!(kkt_residual(&rows, &b, &sol.x) < 1e-10);
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(nnls_solve(&a, &[1.0]).is_err());
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(nnls_solve(&a, &[1.0]).is_err());
        assert!(Matrix::<f64>::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(nnls_solve(&a, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn minimum_norm_of_rank_one_gram() {
        let cols = vec![vec![1.0_f64, 1.0], vec![1.0, 1.0]];
        let (x, deficient) = least_squares(&cols, &[2.0, 2.0]);
        assert!(deficient);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
