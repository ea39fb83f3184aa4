//! Dense linear algebra over a [`Field`] with a fully deterministic
//! elimination order.
//!
//! Pivots are always chosen as the *first* admissible row, never by
//! magnitude, so results are reproducible across runs, platforms, and
//! thread counts.  In numeric mode a pivot candidate whose magnitude falls
//! in the ambiguous band `(tol, 10·tol]` (relative to the matrix scale)
//! aborts with [`LinalgError::AmbiguousPivot`] instead of silently choosing
//! a side; callers surface this as a defective-numerics condition.

use crate::scalar::Field;
use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("elimination pivot in column {col} lies in the ambiguous band ({low:e}, {high:e}]")]
    AmbiguousPivot { col: usize, low: f64, high: f64 },
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<F>,
}

impl<F: Field> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = F::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut F {
        &mut self.data[i * self.cols + j]
    }

    pub fn mat_vec(&self, x: &[F]) -> Vec<F> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for j in 0..self.cols {
                    if !x[j].is_zero() {
                        acc = acc + self.at(i, j).clone() * x[j].clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn mul(&self, other: &Mat<F>) -> Mat<F> {
        debug_assert_eq!(self.cols, other.rows);
        let mut out: Mat<F> = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        *out.at_mut(i, j) = out.at(i, j).clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(F::abs_f64).fold(0.0, f64::max)
    }

    fn threshold(&self, tol: f64) -> f64 {
        if F::EXACT {
            0.0
        } else {
            tol * self.max_abs().max(1.0)
        }
    }

    /// Reduced row echelon form with the deterministic first-row pivot rule.
    /// Returns the reduced matrix and the pivot column of each pivot row.
    pub fn rref(&self, tol: f64) -> Result<(Mat<F>, Vec<usize>), LinalgError> {
        let t0 = self.threshold(tol);
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            if !F::EXACT {
                // refuse to decide on entries in the ambiguous band
                let band = (r..m.rows).any(|i| {
                    let a = m.at(i, c).abs_f64();
                    a > t0 && a <= 10.0 * t0
                });
                if band {
                    return Err(LinalgError::AmbiguousPivot {
                        col: c,
                        low: t0,
                        high: 10.0 * t0,
                    });
                }
            }
            let pivot_row = (r..m.rows).find(|&i| m.at(i, c).abs_f64() > t0 || (F::EXACT && !m.at(i, c).is_zero()));
            let Some(p) = pivot_row else { continue };
            if p != r {
                for j in 0..m.cols {
                    let a = m.at(r, j).clone();
                    let b = m.at(p, j).clone();
                    *m.at_mut(r, j) = b;
                    *m.at_mut(p, j) = a;
                }
            }
            let inv = m.at(r, c).inv();
            for j in 0..m.cols {
                *m.at_mut(r, j) = m.at(r, j).clone() * inv.clone();
            }
            *m.at_mut(r, c) = F::one();
            for i in 0..m.rows {
                if i == r || m.at(i, c).is_zero() {
                    continue;
                }
                let factor = m.at(i, c).clone();
                for j in 0..m.cols {
                    let delta = factor.clone() * m.at(r, j).clone();
                    *m.at_mut(i, j) = m.at(i, j).clone() - delta;
                }
                *m.at_mut(i, c) = F::zero();
            }
            pivots.push(c);
            r += 1;
        }
        Ok((m, pivots))
    }

    /// Basis of the right nullspace, one vector per free column, in
    /// ascending free-column order (the deterministic completion used for
    /// Jordan chains).
    pub fn nullspace(&self, tol: f64) -> Result<Vec<Vec<F>>, LinalgError> {
        let (m, pivots) = self.rref(tol)?;
        let mut is_pivot = vec![usize::MAX; m.cols];
        for (row, &col) in pivots.iter().enumerate() {
            is_pivot[col] = row;
        }
        let mut basis = Vec::new();
        for f in 0..m.cols {
            if is_pivot[f] != usize::MAX {
                continue;
            }
            let mut v = vec![F::zero(); m.cols];
            v[f] = F::one();
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = -m.at(row, f).clone();
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// Inverse, or `None` when singular.
    pub fn inverse(&self, tol: f64) -> Result<Option<Mat<F>>, LinalgError> {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                *aug.at_mut(i, j) = self.at(i, j).clone();
            }
            *aug.at_mut(i, n + i) = F::one();
        }
        let (red, pivots) = aug.rref(tol)?;
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return Ok(None);
        }
        let mut inv = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                *inv.at_mut(i, j) = red.at(i, n + j).clone();
            }
        }
        Ok(Some(inv))
    }
}

/// Characteristic polynomial `det(x·I − M)` of an exact square matrix via
/// the trace recursion (Faddeev–LeVerrier).  Coefficients are returned in
/// ascending degree order; the leading coefficient is 1.
pub fn charpoly(m: &Mat<BigRational>) -> Vec<BigRational> {
    debug_assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut coeffs = vec![<BigRational as Field>::zero(); n + 1];
    coeffs[n] = <BigRational as Field>::one();
    let mut aux = Mat::<BigRational>::identity(n);
    for k in 1..=n {
        aux = m.mul(&aux);
        let mut trace = <BigRational as Field>::zero();
        for i in 0..n {
            trace = trace + aux.at(i, i).clone();
        }
        let c = -trace / BigRational::from_integer(BigInt::from(k));
        for i in 0..n {
            *aux.at_mut(i, i) = aux.at(i, i).clone() + c.clone();
        }
        coeffs[n - k] = c;
    }
    coeffs
}

/// An incrementally maintained row-echelon accumulator used for
/// deterministic independence tests (Jordan chain selection, basis
/// completion).
pub struct EchelonAccumulator<F> {
    cols: usize,
    tol: f64,
    scale: f64,
    rows: Vec<Vec<F>>,
    lead: Vec<usize>,
}

impl<F: Field> EchelonAccumulator<F> {
    pub fn new(cols: usize, tol: f64) -> Self {
        EchelonAccumulator {
            cols,
            tol,
            scale: 1.0,
            rows: Vec::new(),
            lead: Vec::new(),
        }
    }

    fn threshold(&self) -> f64 {
        if F::EXACT {
            0.0
        } else {
            self.tol * self.scale
        }
    }

    /// Reduce `v` against the accumulated rows; returns the residual.
    pub fn reduce(&self, v: &[F]) -> Vec<F> {
        let mut w = v.to_vec();
        for (row, &lead) in self.rows.iter().zip(&self.lead) {
            let c = w[lead].clone();
            if c.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let delta = c.clone() * row[j].clone();
                w[j] = w[j].clone() - delta;
            }
            w[lead] = F::zero();
        }
        w
    }

    /// True when `v` is independent of the accumulated rows; if so, the
    /// reduced residual is normalized and added.
    pub fn insert_if_independent(&mut self, v: &[F]) -> Result<bool, LinalgError> {
        self.scale = self.scale.max(v.iter().map(F::abs_f64).fold(0.0, f64::max));
        let w = self.reduce(v);
        let t0 = self.threshold();
        if !F::EXACT {
            // any residual entry in the ambiguous band means the dependence
            // decision cannot be trusted
            let band = w.iter().any(|x| {
                let a = x.abs_f64();
                a > t0 && a <= 10.0 * t0
            });
            if band {
                return Err(LinalgError::AmbiguousPivot {
                    col: 0,
                    low: t0,
                    high: 10.0 * t0,
                });
            }
        }
        let lead = w
            .iter()
            .position(|x| x.abs_f64() > t0 || (F::EXACT && !x.is_zero()));
        let Some(lead) = lead else {
            return Ok(false);
        };
        let inv = w[lead].inv();
        let mut row: Vec<F> = w.into_iter().map(|x| x * inv.clone()).collect();
        row[lead] = F::one();
        self.rows.push(row);
        self.lead.push(lead);
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn rref_is_deterministic_and_exact() {
        let m = Mat::from_rows(vec![
            vec![q(0, 1), q(1, 2), q(1, 1)],
            vec![q(1, 3), q(1, 1), q(0, 1)],
            vec![q(1, 3), q(3, 2), q(1, 1)],
        ]);
        let (r1, p1) = m.rref(1e-9).unwrap();
        let (r2, p2) = m.rref(1e-9).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(p1, p2);
        assert_eq!(p1.len(), 2);
    }

    #[test]
    fn nullspace_uses_free_column_convention() {
        // x + y + z = 0 → free columns y,z → basis (-1,1,0), (-1,0,1)
        let m = Mat::from_rows(vec![vec![q(1, 1), q(1, 1), q(1, 1)]]);
        let ns = m.nullspace(1e-9).unwrap();
        assert_eq!(
            ns,
            vec![
                vec![q(-1, 1), q(1, 1), q(0, 1)],
                vec![q(-1, 1), q(0, 1), q(1, 1)],
            ]
        );
    }

    #[test]
    fn inverse_round_trips() {
        let m = Mat::from_rows(vec![
            vec![q(2, 1), q(1, 1)],
            vec![q(1, 1), q(1, 1)],
        ]);
        let inv = m.inverse(1e-9).unwrap().unwrap();
        assert_eq!(m.mul(&inv), Mat::identity(2));
        let sing = Mat::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]);
        assert!(sing.inverse(1e-9).unwrap().is_none());
    }

    #[test]
    fn charpoly_matches_known_matrix() {
        // ((−2,3),(4,−3))ᵀ has eigenvalues 1 and −6:
        // charpoly = x² + 5x − 6
        let m = Mat::from_rows(vec![vec![q(-2, 1), q(4, 1)], vec![q(3, 1), q(-3, 1)]]);
        let cp = charpoly(&m);
        assert_eq!(cp, vec![q(-6, 1), q(5, 1), q(1, 1)]);
    }

    #[test]
    fn numeric_ambiguous_band_is_an_error() {
        let c = |v: f64| Complex64::new(v, 0.0);
        let m = Mat::from_rows(vec![vec![c(5e-9), c(1.0)], vec![c(0.0), c(1.0)]]);
        // scale 1.0, tol 1e-9 → band (1e-9, 1e-8]; the 5e-9 entry is ambiguous
        assert!(matches!(
            m.rref(1e-9),
            Err(LinalgError::AmbiguousPivot { .. })
        ));
    }

    #[test]
    fn echelon_accumulator_detects_dependence() {
        let mut acc = EchelonAccumulator::<BigRational>::new(3, 1e-9);
        assert!(acc.insert_if_independent(&[q(1, 1), q(1, 1), q(1, 1)]).unwrap());
        assert!(acc.insert_if_independent(&[q(1, 1), q(0, 1), q(0, 1)]).unwrap());
        assert!(!acc.insert_if_independent(&[q(2, 1), q(1, 1), q(1, 1)]).unwrap());
        assert_eq!(acc.rows.len(), 2);
    }
}
