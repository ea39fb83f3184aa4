//! Scalar parsing and the two coefficient fields used by every other module.
//!
//! Input numbers are parsed into [`Scalar`]: integers and `p/q` literals
//! become exact rationals, decimal literals become floats.  Computations then
//! run over one of two [`Field`] implementations:
//!
//! * `BigRational` — exact arithmetic; every tolerance argument is ignored
//!   and zero tests are literal.
//! * `Complex64` — double precision; zero tests and comparisons take an
//!   explicit absolute tolerance chosen by the caller.
//!
//! Concentrating the tolerance policy here lets the algebraic code (Jordan
//! chains, operator reduction, moment iteration) be written once and behave
//! identically in both modes.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

/// Errors produced while parsing or converting scalar values.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("float value `{0}` cannot be used in exact mode")]
    FloatInExactMode(String),
}

/// A parsed input value: an exact rational or a double float.
///
/// The variant records how the value was written, which in turn decides
/// whether exact analysis is available for a process description.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Float(f64),
}

/// Parse a scalar literal.
///
/// `"-3"` and `"7/2"` become exact rationals; `"0.55"` (or any literal with
/// a decimal point or exponent) becomes a float.  Non-finite floats and zero
/// denominators are rejected.
pub fn parse_scalar(text: &str) -> Result<Scalar, ScalarError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ScalarError::Malformed(text.to_owned()));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ScalarError::Malformed(text.to_owned()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ScalarError::Malformed(text.to_owned()))?;
        if d.is_zero() {
            return Err(ScalarError::ZeroDenominator(text.to_owned()));
        }
        return Ok(Scalar::Rational(BigRational::new(n, d)));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(Scalar::Rational(BigRational::from_integer(n)));
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Scalar::Float(v)),
        _ => Err(ScalarError::Malformed(text.to_owned())),
    }
}

impl Scalar {
    pub fn from_int(n: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => Zero::is_zero(r),
            Scalar::Float(v) => *v == 0.0,
        }
    }

    /// Render in the same syntax accepted by [`parse_scalar`].
    pub fn render(&self) -> String {
        match self {
            Scalar::Rational(r) => r.to_string(),
            Scalar::Float(v) => {
                let s = v.to_string();
                // keep float-ness visible so the value round-trips as a float
                if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
                    s
                } else {
                    format!("{s}.0")
                }
            }
        }
    }

    fn binop(
        &self,
        rhs: &Scalar,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        float: impl Fn(f64, f64) -> f64,
    ) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(exact(a, b)),
            _ => Scalar::Float(float(self.to_f64(), rhs.to_f64())),
        }
    }

    pub fn add(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a * b, |a, b| a * b)
    }

    pub fn div(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(self.binop(rhs, |a, b| a / b, |a, b| a / b))
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r.clone()),
            Scalar::Float(v) => Scalar::Float(-v),
        }
    }

    /// Equality with a tolerance: exact when both sides are rational,
    /// otherwise absolute-difference within `tol`.
    pub fn eq_with(&self, rhs: &Scalar, tol: f64) -> bool {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            _ => (self.to_f64() - rhs.to_f64()).abs() <= tol,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// The coefficient field abstraction.
///
/// Exactly two implementations exist: `BigRational` (exact) and `Complex64`
/// (numeric).  Methods taking `tol` treat it as an absolute threshold; exact
/// implementations ignore it entirely, so tolerance handling never leaks into
/// exact results.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and tolerances are ignored.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    /// Convert a parsed scalar; the exact field rejects floats.
    fn from_scalar(s: &Scalar) -> Result<Self, ScalarError>;

    fn is_zero(&self) -> bool;
    /// Zero test under an absolute tolerance (exact fields: literal zero).
    fn negligible(&self, tol: f64) -> bool;
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    fn to_c64(&self) -> Complex64;
    fn re_f64(&self) -> f64;
    fn im_f64(&self) -> f64;
    fn abs_f64(&self) -> f64;
    fn is_real(&self, tol: f64) -> bool;
    /// Round-trip to the underlying exact rational, if there is one.
    fn to_rational(&self) -> Option<BigRational>;

    /// Compare real parts, collapsing differences within `tol` to `Equal`
    /// in numeric mode.
    fn re_cmp(&self, other: &Self, tol: f64) -> Ordering;
    /// Deterministic total order used to sort spectra and normalize output.
    fn sort_cmp(&self, other: &Self) -> Ordering;

    /// Multiplicative inverse; the caller guarantees the value is nonzero.
    fn inv(&self) -> Self;
    /// Render for reports: `"p/q"` in exact mode, `"a+bi"` in numeric mode.
    fn render(&self) -> String;

    /// Apply the operator product `Π_{k=1}^{n-1} (Id + M/(k+τ₁-1))` to a
    /// coefficient vector, where `M` is given by sparse columns
    /// (`cols[j]` lists `(row, value)` entries of column `j`).
    ///
    /// The default implementation iterates in field arithmetic.  The exact
    /// field overrides it with a cleared-denominator integer iteration that
    /// defers all gcd reduction to a single pass at the end, which is what
    /// makes large-horizon exact moments affordable.
    fn gamma_phi_iterate(
        cols: &[Vec<(usize, Self)>],
        init: &[Self],
        tau1: &Self,
        n: u64,
    ) -> Vec<Self> {
        let mut y: Vec<Self> = init.to_vec();
        let mut step: Vec<Self> = vec![Self::zero(); y.len()];
        for k in 1..n {
            let divisor = Self::from_int(k as i64 - 1) + tau1.clone();
            let dinv = divisor.inv();
            for slot in step.iter_mut() {
                *slot = Self::zero();
            }
            for (j, col) in cols.iter().enumerate() {
                if y[j].is_zero() {
                    continue;
                }
                for (i, v) in col {
                    step[*i] = step[*i].clone() + v.clone() * y[j].clone();
                }
            }
            for i in 0..y.len() {
                if !step[i].is_zero() {
                    y[i] = y[i].clone() + step[i].clone() * dinv.clone();
                }
            }
        }
        y
    }
}

impl Field for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }

    fn one() -> Self {
        <BigRational as One>::one()
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_scalar(s: &Scalar) -> Result<Self, ScalarError> {
        match s {
            Scalar::Rational(r) => Ok(r.clone()),
            Scalar::Float(v) => Err(ScalarError::FloatInExactMode(v.to_string())),
        }
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn negligible(&self, _tol: f64) -> bool {
        Zero::is_zero(self)
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn re_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn im_f64(&self) -> f64 {
        0.0
    }

    fn abs_f64(&self) -> f64 {
        self.re_f64().abs()
    }

    fn is_real(&self, _tol: f64) -> bool {
        true
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn re_cmp(&self, other: &Self, _tol: f64) -> Ordering {
        self.cmp(other)
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn inv(&self) -> Self {
        <BigRational as One>::one() / self.clone()
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn gamma_phi_iterate(
        cols: &[Vec<(usize, Self)>],
        init: &[Self],
        tau1: &Self,
        n: u64,
    ) -> Vec<Self> {
        // Clear all denominators once, iterate over integers, reduce at the
        // end.  State: y_int / den with a shared denominator.
        let mut mat_den = BigInt::one();
        for col in cols {
            for (_, v) in col {
                mat_den = mat_den.lcm(v.denom());
            }
        }
        let mut den = BigInt::one();
        for v in init {
            den = den.lcm(v.denom());
        }
        let int_cols: Vec<Vec<(usize, BigInt)>> = cols
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(i, v)| (*i, v.numer() * (&mat_den / v.denom())))
                    .collect()
            })
            .collect();
        let mut y: Vec<BigInt> = init.iter().map(|v| v.numer() * (&den / v.denom())).collect();
        let p = tau1.numer().clone();
        let q = tau1.denom().clone();
        let mut step: Vec<BigInt> = vec![BigInt::zero(); y.len()];
        for k in 1..n {
            // divisor k-1+τ₁ = ((k-1)q+p)/q; scale the state by
            // a = mat_den·((k-1)q+p) and the matrix action by q.
            let a = &mat_den * (BigInt::from(k - 1) * &q + &p);
            for slot in step.iter_mut() {
                slot.set_zero();
            }
            for (j, col) in int_cols.iter().enumerate() {
                if y[j].is_zero() {
                    continue;
                }
                for (i, v) in col {
                    step[*i] += v * &y[j];
                }
            }
            for i in 0..y.len() {
                y[i] = &y[i] * &a + &step[i] * &q;
            }
            den *= &a;
        }
        y.into_iter()
            .map(|num| BigRational::new(num, den.clone()))
            .collect()
    }
}

impl Field for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn from_scalar(s: &Scalar) -> Result<Self, ScalarError> {
        Ok(Complex64::new(s.to_f64(), 0.0))
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn negligible(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol * (1.0 + self.norm().max(other.norm()))
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn re_f64(&self) -> f64 {
        self.re
    }

    fn im_f64(&self) -> f64 {
        self.im
    }

    fn abs_f64(&self) -> f64 {
        self.norm()
    }

    fn is_real(&self, tol: f64) -> bool {
        self.im.abs() <= tol
    }

    fn to_rational(&self) -> Option<BigRational> {
        None
    }

    fn re_cmp(&self, other: &Self, tol: f64) -> Ordering {
        if (self.re - other.re).abs() <= tol {
            Ordering::Equal
        } else {
            self.re.total_cmp(&other.re)
        }
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.re
            .total_cmp(&other.re)
            .then(self.im.total_cmp(&other.im))
    }

    fn inv(&self) -> Self {
        Complex64::new(1.0, 0.0) / self
    }

    fn render(&self) -> String {
        if self.im == 0.0 {
            format!("{}", self.re)
        } else if self.im < 0.0 {
            format!("{}-{}i", self.re, -self.im)
        } else {
            format!("{}+{}i", self.re, self.im)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions_exactly() {
        assert_eq!(parse_scalar("-3").unwrap(), Scalar::from_int(-3));
        assert_eq!(parse_scalar("7/2").unwrap(), Scalar::from_ratio(7, 2));
        assert_eq!(parse_scalar(" 9 / 20 ").unwrap(), Scalar::from_ratio(9, 20));
        // negative denominators normalize
        assert_eq!(parse_scalar("1/-2").unwrap(), Scalar::from_ratio(-1, 2));
    }

    #[test]
    fn parses_decimals_as_floats() {
        assert_eq!(parse_scalar("0.55").unwrap(), Scalar::Float(0.55));
        assert_eq!(parse_scalar("-1.25e2").unwrap(), Scalar::Float(-125.0));
        assert!(parse_scalar("0.55").unwrap().as_rational().is_none());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            parse_scalar("1/0"),
            Err(ScalarError::ZeroDenominator(_))
        ));
        assert!(matches!(parse_scalar(""), Err(ScalarError::Malformed(_))));
        assert!(matches!(parse_scalar("abc"), Err(ScalarError::Malformed(_))));
        assert!(matches!(parse_scalar("inf"), Err(ScalarError::Malformed(_))));
        assert!(matches!(parse_scalar("NaN"), Err(ScalarError::Malformed(_))));
    }

    #[test]
    fn scalar_arithmetic_promotes_to_float() {
        let r = Scalar::from_ratio(1, 2);
        let f = Scalar::Float(0.25);
        assert_eq!(r.add(&r), Scalar::from_int(1));
        assert!(matches!(r.add(&f), Scalar::Float(_)));
        assert_eq!(r.div(&Scalar::from_int(2)).unwrap(), Scalar::from_ratio(1, 4));
        assert!(r.div(&Scalar::from_int(0)).is_err());
    }

    #[test]
    fn exact_field_rejects_floats() {
        let f = Scalar::Float(0.5);
        assert!(BigRational::from_scalar(&f).is_err());
        assert_eq!(Complex64::from_scalar(&f).unwrap(), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn renders_round_trip() {
        for text in ["3/4", "-11/400", "5", "0.55"] {
            let s = parse_scalar(text).unwrap();
            assert_eq!(parse_scalar(&s.render()).unwrap(), s);
        }
    }

    #[test]
    fn gamma_iteration_exact_matches_generic() {
        // 2x2 nilpotent-ish matrix, τ₁ = 3/2, n = 25: the cleared-denominator
        // override must agree with the straightforward field iteration.
        let cols: Vec<Vec<(usize, BigRational)>> = vec![
            vec![(0, BigRational::from_ratio(1, 3)), (1, BigRational::from_ratio(-2, 5))],
            vec![(0, BigRational::from_ratio(7, 2))],
        ];
        let init = vec![BigRational::from_ratio(1, 4), BigRational::from_int(2)];
        let tau1 = BigRational::from_ratio(3, 2);
        let fast = <BigRational as Field>::gamma_phi_iterate(&cols, &init, &tau1, 25);

        // generic path, forced by re-implementing the default loop inline
        let mut slow = init.clone();
        for k in 1..25u64 {
            let d = BigRational::from_int(k as i64 - 1) + tau1.clone();
            let mut step = vec![<BigRational as Field>::zero(); 2];
            for (j, col) in cols.iter().enumerate() {
                for (i, v) in col {
                    step[*i] = step[*i].clone() + v.clone() * slow[j].clone();
                }
            }
            for i in 0..2 {
                slow[i] = slow[i].clone() + step[i].clone() / d.clone();
            }
        }
        assert_eq!(fast, slow);
    }
}
