//! Sparse polynomials in the Jordan forms `u_1..u_s` and the
//! degree-antialphabetical monomial order.
//!
//! Monomials `u^α` are keyed by multi-indices.  The total order compares
//! total degree first and, within a degree, compares exponent tuples
//! lexicographically *from the last variable backwards*:
//!
//! ```text
//! 1 < u1 < u2 < … < us < u1² < u1u2 < u2² < …
//! ```
//!
//! This is the order that makes the transition operator triangular, so it
//! underpins every matrix and reduction routine in the crate.

use crate::scalar::Field;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UPolyError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Exponent vector of a monomial `u^α = u1^{α₁}···us^{αₛ}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit index `δ_k` (0-based position `k`).
    pub fn delta(dim: usize, k: usize) -> Self {
        let mut v = vec![0; dim];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Indices with nonzero exponent (0-based).
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| self.0[k] > 0).collect()
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        let mut v = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(&other.0) {
            v.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for (k, &a) in self.0.iter().enumerate() {
            if a == 1 {
                parts.push(format!("u{}", k + 1));
            } else if a > 1 {
                parts.push(format!("u{}^{}", k + 1, a));
            }
        }
        if parts.is_empty() {
            "1".to_owned()
        } else {
            parts.join("*")
        }
    }
}

/// Compare two multi-indices in the degree-antialphabetical order,
/// checking dimensions.
pub fn order_compare(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering, UPolyError> {
    if a.dim() != b.dim() {
        return Err(UPolyError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.cmp(b))
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.dim(), other.dim());
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {
                for (a, b) in self.0.iter().rev().zip(other.0.iter().rev()) {
                    match a.cmp(b) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            }
            ord => ord,
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", body.join(","))
    }
}

/// Enumerate every multi-index of dimension `dim` with total degree at most
/// `max_degree`, sorted ascending in the monomial order.
pub fn indices_up_to_degree(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fn rec(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, left: u32) {
        if pos == current.len() {
            out.push(MultiIndex(current.clone()));
            return;
        }
        for a in 0..=left {
            current[pos] = a;
            rec(out, current, pos + 1, left - a);
        }
        current[pos] = 0;
    }
    rec(&mut out, &mut current, 0, max_degree);
    out.sort();
    out
}

/// Sparse polynomial in `u_1..u_s` with coefficients in `F`.
///
/// Zero coefficients are never stored; the term map is ordered by the
/// monomial order, so iteration is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct UPolynomial<F> {
    dim: usize,
    terms: BTreeMap<MultiIndex, F>,
}

impl<F: Field> UPolynomial<F> {
    pub fn zero(dim: usize) -> Self {
        UPolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: F) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, F::one())
    }

    pub fn monomial(alpha: MultiIndex, c: F) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// The degree-one polynomial `u_{k+1}` (0-based `k`).
    pub fn variable(dim: usize, k: usize) -> Self {
        Self::monomial(MultiIndex::delta(dim, k), F::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> F {
        self.terms.get(alpha).cloned().unwrap_or_else(F::zero)
    }

    /// Largest monomial in the order, with its coefficient.
    pub fn leading(&self) -> Option<(&MultiIndex, &F)> {
        self.terms.iter().next_back()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &F)> {
        self.terms.iter()
    }

    /// Add `c·u^α`, dropping the entry if the result is an exact zero.
    pub fn add_term(&mut self, alpha: MultiIndex, c: F) {
        debug_assert_eq!(alpha.dim(), self.dim);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(alpha) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn remove_term(&mut self, alpha: &MultiIndex) -> Option<F> {
        self.terms.remove(alpha)
    }

    pub fn add_assign(&mut self, other: &UPolynomial<F>) {
        for (a, c) in &other.terms {
            self.add_term(a.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &UPolynomial<F>) {
        for (a, c) in &other.terms {
            self.add_term(a.clone(), -c.clone());
        }
    }

    pub fn add(&self, other: &UPolynomial<F>) -> UPolynomial<F> {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &UPolynomial<F>) -> UPolynomial<F> {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> UPolynomial<F> {
        let mut out = UPolynomial::zero(self.dim);
        for (a, c) in &self.terms {
            out.terms.insert(a.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &F) -> UPolynomial<F> {
        if c.is_zero() {
            return UPolynomial::zero(self.dim);
        }
        let mut out = UPolynomial::zero(self.dim);
        for (a, v) in &self.terms {
            out.add_term(a.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &UPolynomial<F>) -> UPolynomial<F> {
        let mut out = UPolynomial::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Drop coefficients whose magnitude is at most `tol` (numeric mode
    /// cleanup; exact polynomials are unchanged up to stored exact zeros).
    pub fn drop_negligible(&mut self, tol: f64) {
        if F::EXACT {
            return;
        }
        self.terms.retain(|_, c| !c.negligible(tol));
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(F::abs_f64).fold(0.0, f64::max)
    }

    /// Evaluate at given values of `u_1..u_s`.
    pub fn evaluate_at(&self, u_values: &[F]) -> F {
        debug_assert_eq!(u_values.len(), self.dim);
        let mut acc = F::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (k, &a) in alpha.0.iter().enumerate() {
                for _ in 0..a {
                    term = term * u_values[k].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Substitute each variable by a linear form: variable `k` is replaced
    /// by `Σ_j subst[k][j]·y_j`, expanding the result in the new variables.
    pub fn substitute_linear(&self, subst: &[Vec<F>]) -> UPolynomial<F> {
        debug_assert_eq!(subst.len(), self.dim);
        let out_dim = subst.first().map_or(self.dim, Vec::len);
        // lazily extended powers of each substituted linear form
        let mut powers: Vec<Vec<UPolynomial<F>>> = subst
            .iter()
            .map(|row| {
                let mut linear = UPolynomial::zero(out_dim);
                for (j, c) in row.iter().enumerate() {
                    linear.add_term(MultiIndex::delta(out_dim, j), c.clone());
                }
                vec![UPolynomial::one(out_dim), linear]
            })
            .collect();
        let mut out = UPolynomial::zero(out_dim);
        for (alpha, c) in &self.terms {
            let mut term = UPolynomial::constant(out_dim, c.clone());
            for (k, &a) in alpha.0.iter().enumerate() {
                while powers[k].len() <= a as usize {
                    let next = powers[k].last().unwrap().mul(&powers[k][1]);
                    powers[k].push(next);
                }
                if a > 0 {
                    term = term.mul(&powers[k][a as usize]);
                }
            }
            out.add_assign(&term);
        }
        out
    }

    /// Render with terms in descending monomial order, e.g.
    /// `u2^2 + 7/4*u2 - 1/27*u1`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_owned();
        }
        let mut out = String::new();
        for (i, (alpha, c)) in self.terms.iter().rev().enumerate() {
            let coeff = c.render();
            let (sign, magnitude) = if let Some(stripped) = coeff.strip_prefix('-') {
                ("-", stripped.to_owned())
            } else {
                ("+", coeff)
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
            let mono = alpha.render();
            if alpha.is_zero() {
                out.push_str(&magnitude);
            } else if magnitude == "1" {
                out.push_str(&mono);
            } else {
                out.push_str(&magnitude);
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

/// Evaluate a polynomial in the forms `u_k` at a state given in measuring
/// coordinates: `u_k(x)` is computed from the form rows first.
pub fn evaluate<F: Field>(f: &UPolynomial<F>, coords: &[F], u_forms: &[Vec<F>]) -> F {
    let u_values: Vec<F> = u_forms
        .iter()
        .map(|row| {
            let mut acc = F::zero();
            for (c, x) in row.iter().zip(coords) {
                acc = acc + c.clone() * x.clone();
            }
            acc
        })
        .collect();
    f.evaluate_at(&u_values)
}

/// Rewrite a polynomial between the coordinate-monomial and form-monomial
/// representations: `rows[k]` is the expansion of old variable `k` in the
/// new variables.
pub fn change_basis<F: Field>(f: &UPolynomial<F>, rows: &[Vec<F>]) -> UPolynomial<F> {
    f.substitute_linear(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn order_matches_reference_chain() {
        // 1 < u1 < u2 < u3 < u1² < u1u2 < u2² < u1u3 < u2u3 < u3²
        let chain = [
            mi(&[0, 0, 0]),
            mi(&[1, 0, 0]),
            mi(&[0, 1, 0]),
            mi(&[0, 0, 1]),
            mi(&[2, 0, 0]),
            mi(&[1, 1, 0]),
            mi(&[0, 2, 0]),
            mi(&[1, 0, 1]),
            mi(&[0, 1, 1]),
            mi(&[0, 0, 2]),
        ];
        for w in chain.windows(2) {
            assert_eq!(order_compare(&w[0], &w[1]).unwrap(), Ordering::Less);
        }
        assert!(order_compare(&mi(&[1, 0]), &mi(&[1, 0, 0])).is_err());
    }

    #[test]
    fn enumeration_is_sorted_and_complete() {
        let all = indices_up_to_degree(2, 3);
        assert_eq!(all.len(), 10);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0], mi(&[0, 0]));
        assert_eq!(all[9], mi(&[0, 3]));
    }

    #[test]
    fn arithmetic_keeps_no_zero_terms() {
        let mut p = UPolynomial::monomial(mi(&[1, 1]), q(1, 2));
        p.add_term(mi(&[0, 2]), q(3, 1));
        let minus = p.neg();
        let sum = p.add(&minus);
        assert!(sum.is_zero());
        assert_eq!(p.mul(&UPolynomial::one(2)), p);
    }

    #[test]
    fn multiplication_expands_products() {
        // (u1 + 1)(u1 + 2) = u1² + 3u1 + 2
        let a = UPolynomial::variable(2, 0).add(&UPolynomial::constant(2, q(1, 1)));
        let b = UPolynomial::variable(2, 0).add(&UPolynomial::constant(2, q(2, 1)));
        let p = a.mul(&b);
        assert_eq!(p.coeff(&mi(&[2, 0])), q(1, 1));
        assert_eq!(p.coeff(&mi(&[1, 0])), q(3, 1));
        assert_eq!(p.coeff(&mi(&[0, 0])), q(2, 1));
    }

    #[test]
    fn evaluate_uses_form_rows() {
        // u1 = x+y, u2 = y; f = u1·u2 at (x,y) = (2,3) → 5·3 = 15
        let f = UPolynomial::monomial(mi(&[1, 1]), q(1, 1));
        let forms = vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]];
        let v = evaluate(&f, &[q(2, 1), q(3, 1)], &forms);
        assert_eq!(v, q(15, 1));
    }

    #[test]
    fn substitution_round_trips_basis_change() {
        // x = u1 - u2, y = u2  ⟺  u1 = x+y, u2 = y
        let f_coords = {
            // f(x,y) = x² + 2y
            let mut p = UPolynomial::monomial(mi(&[2, 0]), q(1, 1));
            p.add_term(mi(&[0, 1]), q(2, 1));
            p
        };
        let to_u = vec![vec![q(1, 1), q(-1, 1)], vec![q(0, 1), q(1, 1)]];
        let back = vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]];
        let in_u = change_basis(&f_coords, &to_u);
        assert_eq!(change_basis(&in_u, &back), f_coords);
    }

    #[test]
    fn renders_descending_with_signs() {
        let mut p = UPolynomial::monomial(mi(&[0, 2]), q(1, 1));
        p.add_term(mi(&[0, 1]), q(7, 4));
        p.add_term(mi(&[1, 0]), q(-1, 27));
        assert_eq!(p.render(), "u2^2 + 7/4*u2 - 1/27*u1");
        assert_eq!(UPolynomial::<BigRational>::zero(2).render(), "0");
    }
}
