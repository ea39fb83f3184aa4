//! Moments: exact finite-time expectations, Γ-quotient evaluation,
//! asymptotic leading terms, and closed-form moments of the limit
//! variables of large processes.
//!
//! The conditional one-step expectation gives `E f(X_{n+1}) = (I +
//! Φ/(n+τ₁-1)) E f(X_n)`, hence `E f(X_n) = γ_{τ₁,n}(Φ) f (X₁)` with the
//! polynomial `γ_{τ₁,n}(z) = Π_{k=1}^{n-1} (1 + z/(k+τ₁-1))`.  Everything
//! here is a corollary: iterate the triangular matrix of `Φ` for exact
//! finite-time moments, evaluate `γ` at brackets for eigen-polynomials,
//! and read leading asymptotics off the reduced table.

use crate::analysis::Analysis;
use crate::operator::{PhiMatrix, ReducedTable};
use crate::scalar::Field;
use crate::spectral::{classify_power, SpectralData};
use crate::upoly::{MultiIndex, UPolynomial};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("the horizon must be at least 1")]
    InvalidHorizon,
    #[error("power {0} lies outside the frozen coefficient space")]
    PowerOutsideSegment(String),
    #[error("power {0} mixes small and large eigenvalues; no single asymptotic regime applies")]
    MixedPower(String),
    #[error("the process is small; limit W variables are not defined")]
    SmallProcess,
    #[error("power touches index {k}, which is not a designated W index")]
    SupportViolation { k: usize },
}

// --- Γ machinery -----------------------------------------------------

/// Log-Γ on the principal branch (up to harmless multiples of 2πi),
/// Lanczos approximation with reflection for `Re z < 1/2`.
pub fn lgamma_complex(z: Complex64) -> Complex64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    let pi = std::f64::consts::PI;
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        let s = (z * pi).sin();
        return Complex64::new(pi, 0.0).ln() - s.ln() - lgamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(C[0], 0.0);
    for (i, &c) in C.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + (G + 0.5);
    0.5 * (2.0 * pi).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Stable complex `ln(1+w)`.
fn ln1p_complex(w: Complex64) -> Complex64 {
    if w.norm() > 0.25 {
        (Complex64::new(1.0, 0.0) + w).ln()
    } else {
        let (u, v) = (w.re, w.im);
        Complex64::new(0.5 * (2.0 * u + u * u + v * v).ln_1p(), v.atan2(1.0 + u))
    }
}

/// `lnΓ(x+z) - lnΓ(x)` for large real `x`, without the cancellation of two
/// huge log-Γ values: the Lanczos formula is differenced term by term, so
/// the result carries full relative precision even when `lnΓ(x) ≈ 10⁷`.
fn lgamma_diff_large(x: f64, z: Complex64) -> Complex64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    let t2 = Complex64::new(x + G - 0.5, 0.0);
    let t1 = t2 + z;
    // series S(w) = C₀ + Σ Cᵢ/(w-1+i) and the cancellation-free difference
    let mut s2 = Complex64::new(C[0], 0.0);
    let mut dnum = Complex64::new(0.0, 0.0);
    for (i, &c) in C.iter().enumerate().skip(1) {
        let a2 = Complex64::new(x - 1.0 + i as f64, 0.0);
        let a1 = a2 + z;
        s2 += c / a2;
        dnum -= c * z / (a1 * a2);
    }
    (x - 0.5) * ln1p_complex(z / t2) + z * t1.ln() - z + ln1p_complex(dnum / s2)
}

/// Literal product `Π_{k=1}^{n-1} (1 + z/(k+τ₁-1))`.
pub fn gamma_product_reference(tau1: f64, n: u64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 1..n {
        acc *= Complex64::new(1.0, 0.0) + z / (k as f64 + tau1 - 1.0);
    }
    acc
}

/// `γ_{τ₁,n}(z)`: literal product for moderate `n`, Γ-quotient via log-Γ
/// for large `n`, with the convention `1/Γ(w) = 0` at nonpositive integer
/// `w = τ₁+z` (a vanishing factor) whenever the product actually contains
/// that factor.
pub fn gamma_eval(tau1: f64, n: u64, z: Complex64) -> Complex64 {
    assert!(n >= 1, "horizon must be at least 1");
    if n == 1 || z == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let t = z + tau1;
    if t.re <= 0.5 {
        let m = (-t.re).round();
        if m >= 0.0 {
            let d = (t - Complex64::new(-m, 0.0)).norm();
            if d <= 1e-9 {
                // τ₁+z = -m exactly: factor k = m+1 vanishes iff m ≤ n-2
                return if m as u64 <= n - 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    gamma_product_reference(tau1, n, z)
                };
            }
            if d < 1e-7 {
                // too close to a pole for the log-Γ route
                return gamma_product_reference(tau1, n, z);
            }
        }
    }
    if n < 64 {
        return gamma_product_reference(tau1, n, z);
    }
    let x = tau1 + n as f64 - 1.0;
    let head = lgamma_complex(Complex64::new(tau1, 0.0)) - lgamma_complex(t);
    let tail = if x + z.re >= 32.0 {
        lgamma_diff_large(x, z)
    } else {
        lgamma_complex(t + (n as f64 - 1.0)) - lgamma_complex(Complex64::new(x, 0.0))
    };
    (head + tail).exp()
}

/// Exact rational `γ_{τ₁,n}(z)`: one cleared-denominator integer product,
/// reduced once.
pub fn gamma_eval_exact(tau1: &BigRational, z: &BigRational, n: u64) -> BigRational {
    assert!(n >= 1, "horizon must be at least 1");
    let qb = tau1.denom() * z.denom();
    let pb = tau1.numer() * z.denom();
    let aq = z.numer() * tau1.denom();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for k in 1..n {
        let base = BigInt::from(k - 1) * &qb + &pb;
        num *= &base + &aq;
        if num.is_zero() {
            return BigRational::new(BigInt::zero(), BigInt::one());
        }
        den *= base;
    }
    BigRational::new(num, den)
}

/// `Γ(τ₁)/Γ(τ₁+z)` with the convention that it vanishes when `τ₁+z` is a
/// nonpositive integer.
pub fn gamma_ratio(tau1: f64, z: Complex64) -> Complex64 {
    let t = z + tau1;
    if t.im.abs() <= 1e-9 && t.re <= 0.5 {
        let m = (-t.re).round();
        if m >= 0.0 && (t - Complex64::new(-m, 0.0)).norm() <= 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
    }
    (lgamma_complex(Complex64::new(tau1, 0.0)) - lgamma_complex(t)).exp()
}

// --- exact finite-time moments ---------------------------------------

/// Values of the basis monomials at the initial state.
fn monomial_values<F: Field>(x: &[F], basis: &[MultiIndex]) -> Vec<F> {
    let s = x.len();
    let mut maxdeg = vec![0u32; s];
    for b in basis {
        for j in 0..s {
            maxdeg[j] = maxdeg[j].max(b.0[j]);
        }
    }
    let pows: Vec<Vec<F>> = (0..s)
        .map(|j| {
            let mut v = vec![F::one()];
            for _ in 0..maxdeg[j] {
                let next = v.last().unwrap().clone() * x[j].clone();
                v.push(next);
            }
            v
        })
        .collect();
    basis
        .iter()
        .map(|b| {
            let mut acc = F::one();
            for j in 0..s {
                if b.0[j] > 0 {
                    acc = acc * pows[j][b.0[j] as usize].clone();
                }
            }
            acc
        })
        .collect()
}

/// `E f(X_n)` by iterating `g ← g + Φ(g)/(k+τ₁-1)` for `k = 1..n-1` in the
/// frozen coefficient space, then evaluating at the initial state.  Exact
/// in exact mode.
pub fn exact_moment<F: Field>(
    an: &Analysis<F>,
    phi: &PhiMatrix<F>,
    f: &UPolynomial<F>,
    n: u64,
) -> Result<F, MomentError> {
    if n == 0 {
        return Err(MomentError::InvalidHorizon);
    }
    let mut init = vec![F::zero(); phi.len()];
    for (key, val) in f.iter() {
        let i = phi
            .position(key)
            .ok_or_else(|| MomentError::PowerOutsideSegment(key.render()))?;
        init[i] = val.clone();
    }
    let y = F::gamma_phi_iterate(&phi.cols, &init, &an.proc.tau1, n);
    let vals = monomial_values(&an.x1_u, &phi.basis);
    let mut acc = F::zero();
    for (yi, vi) in y.iter().zip(&vals) {
        if !yi.is_zero() {
            acc = acc + yi.clone() * vi.clone();
        }
    }
    Ok(acc)
}

/// Convenience: `E u^α(X_n)` on the segment of the table.
pub fn exact_power_moment<F: Field>(
    an: &Analysis<F>,
    phi: &PhiMatrix<F>,
    alpha: &MultiIndex,
    n: u64,
) -> Result<F, MomentError> {
    exact_moment(an, phi, &UPolynomial::monomial(alpha.clone(), F::one()), n)
}

// --- asymptotic terms -------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Small power: only the bound `O(n^{|α|/2} log^ν n)` is asserted; the
    /// leading coefficient may vanish.
    SmallBound,
    /// Large power: `E u^α(X_n) ~ c·n^{⟨α,λ⟩} log^ν n`.
    LargeLeading,
    /// Large semisimple power: additionally `ν = 0` and the reduced moment
    /// `E Q_α(X_n) = γ_{τ₁,n}(⟨α,λ⟩)·Q_α(X₁)` holds exactly.
    SemisimpleLargeExact,
}

/// The constant in front of the leading term, kept in factored form: an
/// algebraic part (exact in exact mode) times a Γ-quotient.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticConstant<F> {
    /// `(Φ-⟨α,λ⟩)^ν(Q_α)(X₁)/ν!`.
    pub algebraic_factor: F,
    /// `Γ(τ₁)/Γ(τ₁+⟨α,λ⟩)`.
    pub gamma_factor: Complex64,
    /// Their product.
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticTerm<F> {
    pub alpha: MultiIndex,
    /// Growth exponent: `⟨α,λ⟩` for large powers, `|α|/2` for the small
    /// bound.
    pub exponent: F,
    /// Power of `log n`.
    pub log_power: u32,
    /// Leading constant; absent for the small-power bound.
    pub constant: Option<AsymptoticConstant<F>>,
    pub regime: Regime,
}

fn p_table_step<F: Field>(
    table: &ReducedTable<F>,
    h: &BTreeMap<usize, F>,
) -> BTreeMap<usize, F> {
    let mut next: BTreeMap<usize, F> = BTreeMap::new();
    for (j, c) in h {
        for (b, pv) in &table.p[*j] {
            let add = pv.clone() * c.clone();
            let slot = next.entry(*b).or_insert_with(F::zero);
            *slot = slot.clone() + add;
        }
    }
    next.retain(|_, v| !v.is_zero() && !v.negligible(table.tol));
    next
}

/// Leading asymptotic term of `E u^α(X_n)`.
pub fn asymptotic_moment<F: Field>(
    an: &Analysis<F>,
    table: &ReducedTable<F>,
    alpha: &MultiIndex,
) -> Result<AsymptoticTerm<F>, MomentError> {
    let i = table
        .position(alpha)
        .ok_or_else(|| MomentError::PowerOutsideSegment(alpha.render()))?;
    let pc = classify_power(alpha, &an.sd);
    if pc.large {
        let z = an.bracket(alpha);
        let nu = table.nilpotence_index(i);
        // (Φ-z)^ν Q_α in Q-coordinates, then value at X₁
        let mut coords: BTreeMap<usize, F> = BTreeMap::new();
        coords.insert(i, F::one());
        for _ in 0..nu {
            coords = p_table_step(table, &coords);
        }
        let mut val = F::zero();
        for (j, c) in &coords {
            val = val + c.clone() * table.q_polys[*j].evaluate_at(&an.x1_u);
        }
        let mut fact = F::one();
        for t in 1..=nu {
            fact = fact * F::from_int(t as i64);
        }
        let alg = val / fact;
        let gamma_factor = gamma_ratio(an.proc.tau1.re_f64(), z.to_c64());
        let value = gamma_factor * alg.to_c64();
        let regime = if pc.semisimple && nu == 0 {
            Regime::SemisimpleLargeExact
        } else {
            Regime::LargeLeading
        };
        Ok(AsymptoticTerm {
            alpha: alpha.clone(),
            exponent: z,
            log_power: nu,
            constant: Some(AsymptoticConstant {
                algebraic_factor: alg,
                gamma_factor,
                value,
            }),
            regime,
        })
    } else if pc.small {
        let mut log_power = table.nilpotence_index(i);
        for (j, _) in &table.q[i] {
            log_power = log_power.max(table.nilpotence_index(*j));
        }
        Ok(AsymptoticTerm {
            alpha: alpha.clone(),
            exponent: F::from_ratio(alpha.degree() as i64, 2),
            log_power,
            constant: None,
            regime: Regime::SmallBound,
        })
    } else {
        Err(MomentError::MixedPower(alpha.render()))
    }
}

/// Drift of the expected state: projection onto the fixed subspace and the
/// error exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorAsymptote<F> {
    /// `Π₁(X₁) = Σ_{λ_k=1} u_k(X₁)·v_k`.
    pub projection: Vec<F>,
    /// Per-step drift `Π₁(X₁)/τ₁`: `E X_n = n·drift + O(n^τ)`.
    pub drift: Vec<F>,
    /// `τ = max({Re λ : λ ≠ 1} ∪ {0})`.
    pub error_exponent: f64,
}

pub fn expected_vector_asymptote<F: Field>(an: &Analysis<F>) -> VectorAsymptote<F> {
    let s = an.dim();
    let one = F::one();
    let mut projection = vec![F::zero(); s];
    for k in 0..s {
        if an.sd.lambda[k].approx_eq(&one, an.tol) {
            for i in 0..s {
                projection[i] =
                    projection[i].clone() + an.x1_u[k].clone() * an.sd.v[k][i].clone();
            }
        }
    }
    let tau1_inv = an.proc.tau1.clone().inv();
    let drift: Vec<F> = projection
        .iter()
        .map(|p| p.clone() * tau1_inv.clone())
        .collect();
    let error_exponent = an
        .sd
        .lambda
        .iter()
        .filter(|l| !l.approx_eq(&one, an.tol))
        .map(F::re_f64)
        .fold(0.0f64, f64::max);
    VectorAsymptote {
        projection,
        drift,
        error_exponent,
    }
}

// --- limit W moments --------------------------------------------------

/// Indices whose forms carry the limit variables `W_k`: the first index of
/// every principal block, excluding the fixed form `u_1`.
pub fn designated_w_indices<F: Field>(sd: &SpectralData<F>) -> Vec<usize> {
    sd.blocks
        .iter()
        .filter(|b| b.principal)
        .map(|b| b.first)
        .filter(|&k| k != 0)
        .collect()
}

/// Closed-form joint moment of the limit variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitMoment<F> {
    pub alpha: MultiIndex,
    /// `⟨α,λ⟩`.
    pub bracket: F,
    /// `Q_α(X₁)` (exact in exact mode).
    pub q_at_x1: F,
    /// `Γ(τ₁)/Γ(τ₁+⟨α,λ⟩)`.
    pub gamma_factor: Complex64,
    /// `E Π_k W_k^{α_k}`.
    pub value: Complex64,
}

/// `E(Π_k W_k^{α_k}) = Γ(τ₁)/Γ(τ₁+⟨α,λ⟩)·Q_α(X₁)` for powers supported on
/// designated indices of a large process.
pub fn limit_w_moment<F: Field>(
    an: &Analysis<F>,
    table: &ReducedTable<F>,
    alpha: &MultiIndex,
) -> Result<LimitMoment<F>, MomentError> {
    if an.cls.small {
        return Err(MomentError::SmallProcess);
    }
    let designated = designated_w_indices(&an.sd);
    for k in alpha.support() {
        if !designated.contains(&k) {
            return Err(MomentError::SupportViolation { k });
        }
    }
    let i = table
        .position(alpha)
        .ok_or_else(|| MomentError::PowerOutsideSegment(alpha.render()))?;
    let bracket = an.bracket(alpha);
    let q_at_x1 = table.q_polys[i].evaluate_at(&an.x1_u);
    let gamma_factor = gamma_ratio(an.proc.tau1.re_f64(), bracket.to_c64());
    let value = gamma_factor * q_at_x1.to_c64();
    Ok(LimitMoment {
        alpha: alpha.clone(),
        bracket,
        q_at_x1,
        gamma_factor,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_phi_matrix, build_reduced_table, DEFAULT_BASIS_CAP};
    use crate::process::ProcessSpec;
    use crate::scalar::Scalar;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn triangular() -> Analysis<BigRational> {
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![Scalar::from_ratio(1, 4), Scalar::from_ratio(3, 4)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap()
    }

    #[test]
    fn gamma_product_basics() {
        // hand product (3/2)(4/3) = 2 at τ₁=2, n=3, z=1
        let g = gamma_eval(2.0, 3, Complex64::new(1.0, 0.0));
        assert!((g - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert_eq!(gamma_eval(2.0, 1, Complex64::new(0.7, 0.3)), Complex64::new(1.0, 0.0));
        assert_eq!(gamma_eval(5.0, 100, Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let ge = gamma_eval_exact(&q(2, 1), &q(1, 1), 3);
        assert_eq!(ge, q(2, 1));
    }

    #[test]
    fn gamma_quotient_matches_product_at_reference_points() {
        // frozen high-precision reference values
        let g1 = gamma_eval(2.0, 1000, Complex64::new(0.75, 0.0));
        assert!((g1.re - 110.63735370774220).abs() / 110.6 < 1e-10, "{g1}");
        assert!(g1.im.abs() < 1e-10);
        let g2 = gamma_eval(2.0, 1_000_000, Complex64::new(0.75, 0.0));
        assert!((g2.re - 19661.5239864048840).abs() / 19661.0 < 1e-10, "{g2}");
        let g3 = gamma_eval(1.5, 1000, Complex64::new(0.3, 1.2));
        let expect = Complex64::new(0.410124977254116825, 12.2036705608663318);
        assert!((g3 - expect).norm() / expect.norm() < 1e-10, "{g3}");
        // product and quotient agree near the switch threshold
        for n in [63u64, 64, 65, 200] {
            let a = gamma_product_reference(1.5, n, Complex64::new(-1.9, 0.4));
            let b = gamma_eval(1.5, n, Complex64::new(-1.9, 0.4));
            assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()), "n={n} {a} {b}");
        }
    }

    #[test]
    fn gamma_pole_convention() {
        // τ₁+z = -3: vanishing factor present iff n-1 ≥ 4
        let z = Complex64::new(-5.0, 0.0);
        assert_eq!(gamma_eval(2.0, 10, z), Complex64::new(0.0, 0.0));
        assert_eq!(gamma_eval(2.0, 200, z), Complex64::new(0.0, 0.0));
        // n = 3: product (1-5/2)(1-5/3) = 1, no vanishing factor yet
        let g = gamma_eval(2.0, 3, z);
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(gamma_ratio(2.0, z), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lgamma_reference_values() {
        let l5 = lgamma_complex(Complex64::new(5.0, 0.0));
        assert!((l5.re - 3.1780538303479456).abs() < 1e-12 && l5.im.abs() < 1e-12);
        let lh = lgamma_complex(Complex64::new(0.5, 0.0));
        assert!((lh.re - 0.5723649429247001).abs() < 1e-12);
        let g1i = lgamma_complex(Complex64::new(1.0, 1.0)).exp();
        let expect = Complex64::new(0.4980156681183560, -0.1549498283018107);
        assert!((g1i - expect).norm() < 1e-12, "{g1i}");
    }

    #[test]
    fn exact_moment_of_u1_is_deterministic() {
        let an = triangular();
        let phi = build_phi_matrix(&an, &MultiIndex(vec![1, 0]), DEFAULT_BASIS_CAP).unwrap();
        for n in [1u64, 2, 5, 37, 120] {
            let m = exact_power_moment(&an, &phi, &MultiIndex(vec![1, 0]), n).unwrap();
            assert_eq!(m, q(n as i64, 1) + q(2, 1) - q(1, 1));
        }
    }

    #[test]
    fn eigen_reduced_moments_follow_gamma() {
        let an = triangular();
        let table = build_reduced_table(&an, &MultiIndex(vec![0, 3]), DEFAULT_BASIS_CAP).unwrap();
        for p in 1..=3u32 {
            let alpha = MultiIndex(vec![0, p]);
            let qp = table.q_poly(&alpha).unwrap();
            let z = an.bracket(&alpha);
            let qx1 = qp.evaluate_at(&an.x1_u);
            for n in [1u64, 2, 7, 50] {
                let m = exact_moment(&an, &table.phi, qp, n).unwrap();
                let expect = gamma_eval_exact(&an.proc.tau1, &z, n) * qx1.clone();
                assert_eq!(m, expect, "p={p}, n={n}");
            }
        }
    }

    #[test]
    fn asymptotic_terms_by_regime() {
        let an = triangular();
        let table = build_reduced_table(&an, &MultiIndex(vec![2, 2]), DEFAULT_BASIS_CAP).unwrap();
        // u2² is a semisimple large power: z = 3/2, c = Γ(2)/Γ(7/2)·(7/4)
        let t = asymptotic_moment(&an, &table, &MultiIndex(vec![0, 2])).unwrap();
        assert_eq!(t.regime, Regime::SemisimpleLargeExact);
        assert_eq!(t.exponent, q(3, 2));
        assert_eq!(t.log_power, 0);
        let c = t.constant.unwrap();
        assert_eq!(c.algebraic_factor, q(7, 4));
        assert!((c.value.re - 0.5265769446445725).abs() < 1e-12, "{}", c.value);
        // u1u2 is large (both roots exceed 1/2 here)
        let t12 = asymptotic_moment(&an, &table, &MultiIndex(vec![1, 1])).unwrap();
        assert_eq!(t12.regime, Regime::SemisimpleLargeExact);
        assert_eq!(t12.exponent, q(7, 4));
    }

    #[test]
    fn small_powers_report_bounds() {
        // tree urn: λ₂ = -6, small process, u2-powers are small powers
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(-2), Scalar::from_int(3)],
                vec![Scalar::from_int(4), Scalar::from_int(-3)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(2), Scalar::from_int(0)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        let table = build_reduced_table(&an, &MultiIndex(vec![0, 2]), DEFAULT_BASIS_CAP).unwrap();
        let t = asymptotic_moment(&an, &table, &MultiIndex(vec![0, 2])).unwrap();
        assert_eq!(t.regime, Regime::SmallBound);
        assert_eq!(t.exponent, q(1, 1));
        assert!(t.constant.is_none());
        // mixed powers are refused
        let err = asymptotic_moment(&an, &table, &MultiIndex(vec![1, 1])).unwrap_err();
        assert!(matches!(err, MomentError::MixedPower(_)));
    }

    #[test]
    fn limit_w_moments_match_frozen_references() {
        let an = triangular();
        let table = build_reduced_table(&an, &MultiIndex(vec![0, 2]), DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(designated_w_indices(&an.sd), vec![1]);
        let m1 = limit_w_moment(&an, &table, &MultiIndex(vec![0, 1])).unwrap();
        assert_eq!(m1.q_at_x1, q(1, 1));
        assert!((m1.value.re - 0.6217515726462956).abs() < 1e-12, "{}", m1.value);
        let m2 = limit_w_moment(&an, &table, &MultiIndex(vec![0, 2])).unwrap();
        assert_eq!(m2.q_at_x1, q(7, 4));
        assert!((m2.value.re - 0.5265769446445725).abs() < 1e-12, "{}", m2.value);
        // u1 powers are not W moments
        let err = limit_w_moment(&an, &table, &MultiIndex(vec![1, 0])).unwrap_err();
        assert!(matches!(err, MomentError::SupportViolation { k: 0 }));
    }

    #[test]
    fn small_process_has_no_w() {
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(-2), Scalar::from_int(3)],
                vec![Scalar::from_int(4), Scalar::from_int(-3)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(2), Scalar::from_int(0)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        let table = build_reduced_table(&an, &MultiIndex(vec![0, 1]), DEFAULT_BASIS_CAP).unwrap();
        let err = limit_w_moment(&an, &table, &MultiIndex(vec![0, 1])).unwrap_err();
        assert!(matches!(err, MomentError::SmallProcess));
    }

    #[test]
    fn drift_follows_the_fixed_projection() {
        // identity urn: drift X1/τ₁, error exponent 0
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![Scalar::from_int(0), Scalar::from_int(1)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        let va = expected_vector_asymptote(&an);
        assert_eq!(va.projection, vec![q(1, 1), q(1, 1)]);
        assert_eq!(va.drift, vec![q(1, 2), q(1, 2)]);
        assert_eq!(va.error_exponent, 0.0);
        // triangular: projection is τ₁·v1 with v1 = (1,0)-ish dual
        let an2 = triangular();
        let va2 = expected_vector_asymptote(&an2);
        assert_eq!(va2.error_exponent, 0.75);
        // u1 of the drift must be 1 (balance adds one per step)
        let u1_of_drift = va2.drift[0].clone() + va2.drift[1].clone();
        assert_eq!(u1_of_drift, q(1, 1));
    }
}
