//! The transition operator on polynomials of the Jordan forms, and the
//! reduced polynomials obtained by diagonalizing it block by block.
//!
//! For a balanced process the conditional one-step expectation of `f` is
//! `f + Φ(f)/(n+τ₁-1)` where `Φ(f) = Σ_k l_k·(f(·+w_k) - f)`.  `Φ` maps
//! each initial segment `S_α = span{u^β : β ≤ α}` (monomial order from
//! [`crate::upoly`]) into itself; on the diagonal it multiplies `u^β` by
//! `⟨β,λ⟩ = Σ_k β_k λ_k`.  Its degree-preserving part is the derivation
//! `Φ_∂ = Σ_k (λ_k u_k + ε_k u_{k-1}) ∂_k`.
//!
//! The reduced polynomial `Q_α = u^α - Σ_{β<α} q_{α,β} Q_β` is the unique
//! monic element of `S_α` whose image under `Φ - ⟨α,λ⟩` lies in the span of
//! the `Q_β` with the *same* bracket (the resonant positions); on
//! non-resonant positions the coefficient is divided away.  The table of
//! `q` (change of basis), `p` (residual nilpotent action) and `r` (raw
//! image coordinates) drives every moment computation downstream.

use crate::analysis::Analysis;
use crate::scalar::Field;
use crate::upoly::{indices_up_to_degree, MultiIndex, UPolynomial};
use num_bigint::BigInt;
use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;
use thiserror::Error;

/// Default ceiling on the size of the monomial basis of `S_α`.
pub const DEFAULT_BASIS_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("the initial segment below {alpha} has {size} monomials, above the cap {cap}")]
    BasisTooLarge {
        alpha: String,
        size: usize,
        cap: usize,
    },
    #[error(
        "brackets of {a} and {b} differ by {gap:.3e}, too close to call at tolerance {tol:.3e}"
    )]
    ResonanceAmbiguity {
        a: String,
        b: String,
        gap: f64,
        tol: f64,
    },
    #[error("image of {gamma} leaves its initial segment at {term} (coefficient {value})")]
    TriangularityViolation {
        gamma: String,
        term: String,
        value: String,
    },
    #[error("internal operator invariant failed: {0}")]
    Internal(String),
}

/// `Φ(u^γ)`, expanded in the Jordan-form monomial basis.
///
/// Every term of the result is ≤ γ in the monomial order; the coefficient
/// at `u^γ` itself is `⟨γ,λ⟩`.  In numeric mode, stray terms above γ are
/// dropped when negligible and reported as
/// [`OperatorError::TriangularityViolation`] otherwise.
pub fn phi_monomial<F: Field>(
    an: &Analysis<F>,
    gamma: &MultiIndex,
) -> Result<UPolynomial<F>, OperatorError> {
    let s = an.dim();
    if gamma.dim() != s {
        return Err(OperatorError::Internal(format!(
            "power {gamma} has dimension {} in a {s}-color process",
            gamma.dim()
        )));
    }
    let mut total = UPolynomial::zero(s);
    for k in 0..s {
        // Π_j (u_j + u_j(w_k))^{γ_j}, the composition of u^γ with a step
        let mut prod = UPolynomial::one(s);
        for j in 0..s {
            let e = gamma.0[j];
            if e == 0 {
                continue;
            }
            let c = an.uw[j][k].clone();
            let mut cpow: Vec<F> = Vec::with_capacity(e as usize + 1);
            cpow.push(F::one());
            for _ in 0..e {
                let next = cpow.last().unwrap().clone() * c.clone();
                cpow.push(next);
            }
            let mut factor = UPolynomial::zero(s);
            let mut binom = F::one();
            for m in 0..=e {
                let mut idx = vec![0u32; s];
                idx[j] = m;
                factor.add_term(MultiIndex(idx), binom.clone() * cpow[(e - m) as usize].clone());
                if m < e {
                    binom = binom * F::from_int((e - m) as i64) / F::from_int((m + 1) as i64);
                }
            }
            prod = prod.mul(&factor);
        }
        // the top term of the difference cancels identically
        prod.remove_term(gamma);
        // multiply by l_k written in the Jordan basis
        let mut lk = UPolynomial::zero(s);
        for j in 0..s {
            lk.add_term(MultiIndex::delta(s, j), an.l_in_u[k][j].clone());
        }
        total.add_assign(&prod.mul(&lk));
    }

    // triangularity: nothing above γ may survive
    let mut offenders: Vec<MultiIndex> = Vec::new();
    for (key, val) in total.iter() {
        if key > gamma {
            if F::EXACT || !val.negligible(an.tol * (1.0 + total.max_abs())) {
                return Err(OperatorError::TriangularityViolation {
                    gamma: gamma.render(),
                    term: key.render(),
                    value: val.render(),
                });
            }
            offenders.push(key.clone());
        }
    }
    for key in offenders {
        total.remove_term(&key);
    }
    Ok(total)
}

/// `Φ(f)` for a general polynomial.
pub fn phi_apply<F: Field>(
    an: &Analysis<F>,
    f: &UPolynomial<F>,
) -> Result<UPolynomial<F>, OperatorError> {
    let mut out = UPolynomial::zero(f.dim());
    for (gamma, g) in f.iter() {
        let img = phi_monomial(an, gamma)?;
        out.add_assign(&img.scale(g));
    }
    Ok(out)
}

/// The degree-preserving derivation part `Φ_∂`; on `u^γ` it gives
/// `⟨γ,λ⟩ u^γ + Σ_k ε_k γ_k u^{γ-δ_k+δ_{k-1}}`.
pub fn phi_partial_apply<F: Field>(an: &Analysis<F>, f: &UPolynomial<F>) -> UPolynomial<F> {
    let s = f.dim();
    let mut out = UPolynomial::zero(s);
    for (gamma, g) in f.iter() {
        out.add_term(gamma.clone(), an.bracket(gamma) * g.clone());
        for k in 0..s {
            if an.sd.eps[k] && gamma.0[k] >= 1 {
                let mut idx = gamma.0.clone();
                idx[k] -= 1;
                idx[k - 1] += 1;
                out.add_term(MultiIndex(idx), F::from_int(gamma.0[k] as i64) * g.clone());
            }
        }
    }
    out
}

/// `Φ` restricted to an initial segment `S_α`, as a sparse column-major
/// triangular matrix over the ascending monomial basis.
#[derive(Clone, Debug)]
pub struct PhiMatrix<F: Field> {
    pub alpha: MultiIndex,
    /// Ascending monomial basis of `S_α`.
    pub basis: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    /// `cols[j]` lists `(i, Φ(u^{β_j})_i)` with `i ≤ j`, ascending in `i`.
    pub cols: Vec<Vec<(usize, F)>>,
    /// Diagonal entries `⟨β,λ⟩`, snapped exactly onto the brackets.
    pub diag: Vec<F>,
}

impl<F: Field> PhiMatrix<F> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn position(&self, beta: &MultiIndex) -> Option<usize> {
        self.index.get(beta).copied()
    }
}

fn segment_basis<F: Field>(
    an: &Analysis<F>,
    alpha: &MultiIndex,
    cap: usize,
) -> Result<Vec<MultiIndex>, OperatorError> {
    let all = indices_up_to_degree(an.dim(), alpha.degree());
    let basis: Vec<MultiIndex> = all.into_iter().filter(|b| b <= alpha).collect();
    if basis.len() > cap {
        return Err(OperatorError::BasisTooLarge {
            alpha: alpha.render(),
            size: basis.len(),
            cap,
        });
    }
    Ok(basis)
}

/// Build the matrix of `Φ` on `S_α`.  `cap` bounds the basis size
/// ([`DEFAULT_BASIS_CAP`] is a sensible default).
pub fn build_phi_matrix<F: Field>(
    an: &Analysis<F>,
    alpha: &MultiIndex,
    cap: usize,
) -> Result<PhiMatrix<F>, OperatorError> {
    let basis = segment_basis(an, alpha, cap)?;
    let index: HashMap<MultiIndex, usize> =
        basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
    let mut cols = Vec::with_capacity(basis.len());
    let mut diag = Vec::with_capacity(basis.len());
    for (j, beta) in basis.iter().enumerate() {
        let img = phi_monomial(an, beta)?;
        let bracket = an.bracket(beta);
        let mut col: Vec<(usize, F)> = Vec::with_capacity(img.len());
        for (key, val) in img.iter() {
            let i = *index.get(key).ok_or_else(|| {
                OperatorError::Internal(format!(
                    "image term {key} of {beta} missing from the segment basis"
                ))
            })?;
            if i != j {
                col.push((i, val.clone()));
            }
        }
        // the diagonal must be the bracket; snap the computed value onto it
        let computed = img.coeff(beta);
        let diff = computed.clone() - bracket.clone();
        if !diff.is_zero() && !diff.negligible(10.0 * an.tol * (1.0 + bracket.abs_f64())) {
            return Err(OperatorError::Internal(format!(
                "diagonal entry at {beta} is {} instead of the bracket {}",
                computed.render(),
                bracket.render()
            )));
        }
        if !bracket.is_zero() {
            col.push((j, bracket.clone()));
        }
        col.sort_by_key(|(i, _)| *i);
        cols.push(col);
        diag.push(bracket);
    }
    Ok(PhiMatrix {
        alpha: alpha.clone(),
        basis,
        index,
        cols,
        diag,
    })
}

/// Reduced polynomials `Q_β` for every `β ≤ α`, with the coefficient
/// tables of the reduction.
#[derive(Debug)]
pub struct ReducedTable<F: Field> {
    /// The matrix of `Φ` the table was built from.
    pub phi: PhiMatrix<F>,
    /// `q[i]`: sparse row `(j, q_{β_i,β_j})`, `j < i`, the change of basis
    /// `u^{β_i} = Q_{β_i} + Σ_j q_{β_i,β_j} Q_{β_j}`.
    pub q: Vec<Vec<(usize, F)>>,
    /// `p[i]`: sparse row of `(Φ - ⟨β_i,λ⟩) Q_{β_i} = Σ_j p_{i,j} Q_{β_j}`;
    /// only resonant positions (equal brackets) can appear.
    pub p: Vec<Vec<(usize, F)>>,
    /// `r[i]`: sparse row of `(Φ - ⟨β_i,λ⟩) u^{β_i}` in the `Q` basis.
    pub r: Vec<Vec<(usize, F)>>,
    /// Materialized `Q_{β_i}` polynomials.
    pub q_polys: Vec<UPolynomial<F>>,
    nu: Vec<OnceLock<u32>>,
    pub tol: f64,
}

impl<F: Field> ReducedTable<F> {
    pub fn basis(&self) -> &[MultiIndex] {
        &self.phi.basis
    }

    pub fn position(&self, beta: &MultiIndex) -> Option<usize> {
        self.phi.position(beta)
    }

    pub fn q_poly(&self, beta: &MultiIndex) -> Option<&UPolynomial<F>> {
        self.position(beta).map(|i| &self.q_polys[i])
    }

    /// Smallest `m` with `(Φ - ⟨β_i,λ⟩)^{m+1} Q_{β_i} = 0`, computed by
    /// iterating the residual table.
    pub fn nilpotence_index(&self, i: usize) -> u32 {
        *self.nu[i].get_or_init(|| {
            let mut h: BTreeMap<usize, F> = BTreeMap::new();
            h.insert(i, F::one());
            let mut nu = 0u32;
            loop {
                let mut next: BTreeMap<usize, F> = BTreeMap::new();
                for (j, c) in &h {
                    for (b, pv) in &self.p[*j] {
                        let add = pv.clone() * c.clone();
                        let slot = next.entry(*b).or_insert_with(F::zero);
                        *slot = slot.clone() + add;
                    }
                }
                next.retain(|_, v| !v.is_zero() && !v.negligible(self.tol));
                if next.is_empty() {
                    break;
                }
                h = next;
                nu += 1;
                if nu as usize > self.q_polys.len() {
                    panic!("nilpotent iteration failed to terminate");
                }
            }
            nu
        })
    }
}

/// Build the reduced table on `S_α` by induction along the monomial order.
pub fn build_reduced_table<F: Field>(
    an: &Analysis<F>,
    alpha: &MultiIndex,
    cap: usize,
) -> Result<ReducedTable<F>, OperatorError> {
    let phi = build_phi_matrix(an, alpha, cap)?;
    let n = phi.len();
    let s = an.dim();
    let mut q_rows: Vec<Vec<(usize, F)>> = Vec::with_capacity(n);
    let mut p_rows: Vec<Vec<(usize, F)>> = Vec::with_capacity(n);
    let mut r_rows: Vec<Vec<(usize, F)>> = Vec::with_capacity(n);
    let mut q_polys: Vec<UPolynomial<F>> = Vec::with_capacity(n);

    for i in 0..n {
        let beta = &phi.basis[i];
        let z = phi.diag[i].clone();

        // g = (Φ - z)(u^β) as a polynomial, from the matrix column
        let mut g = UPolynomial::zero(s);
        for (row, val) in &phi.cols[i] {
            if *row == i {
                continue; // z·u^β cancels the snapped diagonal exactly
            }
            g.add_term(phi.basis[*row].clone(), val.clone());
        }

        // expand g in the Q basis by greedy elimination of top terms
        let mut r_map: BTreeMap<usize, F> = BTreeMap::new();
        while let Some((top, c)) = g.leading() {
            let j = phi.position(top).ok_or_else(|| {
                OperatorError::Internal(format!("term {top} escaped the segment basis"))
            })?;
            if j >= i {
                return Err(OperatorError::Internal(format!(
                    "expansion of the image of {beta} reached {top}, not below it"
                )));
            }
            let c = c.clone();
            g.sub_assign(&q_polys[j].scale(&c));
            g.remove_term(&phi.basis[j]); // the top term cancels identically
            r_map.insert(j, c);
        }

        // split into the divided part q and the resonant residual p;
        // in numeric mode, coefficients below the tolerance scale are
        // basis-residual noise on structural zeros and are scrubbed
        let noise_floor = an.tol * r_map.values().map(F::abs_f64).fold(1.0, f64::max);
        let mut q_map: BTreeMap<usize, F> = BTreeMap::new();
        let mut p_map: BTreeMap<usize, F> = BTreeMap::new();
        for j in (0..i).rev() {
            let mut acc = r_map.get(&j).cloned().unwrap_or_else(F::zero);
            for (&c_idx, qv) in q_map.iter() {
                // only c with j < c_idx < i contribute p_{c,j}
                if c_idx <= j {
                    continue;
                }
                if let Some(pv) = p_rows[c_idx].iter().find(|(b, _)| *b == j) {
                    acc = acc - qv.clone() * pv.1.clone();
                }
            }
            if acc.is_zero() || (!F::EXACT && acc.negligible(noise_floor)) {
                continue;
            }
            let gap = phi.diag[j].clone() - z.clone();
            let scale = 1.0f64
                .max(phi.diag[j].abs_f64())
                .max(z.abs_f64());
            let resonant = if F::EXACT {
                gap.is_zero()
            } else if gap.negligible(an.tol * scale) {
                true
            } else if gap.negligible(10.0 * an.tol * scale) {
                return Err(OperatorError::ResonanceAmbiguity {
                    a: phi.basis[j].render(),
                    b: beta.render(),
                    gap: gap.abs_f64(),
                    tol: an.tol * scale,
                });
            } else {
                false
            };
            if resonant {
                p_map.insert(j, acc);
            } else {
                q_map.insert(j, acc / gap);
            }
        }

        // Q_β = u^β - Σ_j q_{β,j} Q_j
        let mut qp = UPolynomial::monomial(beta.clone(), F::one());
        for (&j, qv) in q_map.iter() {
            qp.sub_assign(&q_polys[j].scale(qv));
        }
        if !F::EXACT {
            // scrub accumulation noise well below the tolerance scale
            qp.drop_negligible(an.tol * 1e-4 * (1.0 + qp.max_abs()));
        }

        q_rows.push(q_map.into_iter().collect());
        p_rows.push(p_map.into_iter().collect());
        r_rows.push(
            r_map
                .into_iter()
                .filter(|(_, v)| F::EXACT || !v.negligible(noise_floor))
                .collect(),
        );
        q_polys.push(qp);
    }

    let nu = (0..n).map(|_| OnceLock::new()).collect();
    Ok(ReducedTable {
        phi,
        q: q_rows,
        p: p_rows,
        r: r_rows,
        q_polys,
        nu,
        tol: an.tol,
    })
}

/// Stirling numbers of the second kind `S(n,k)`.
pub fn stirling_second(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    // S(n,k) over rows of the triangle
    let mut row: Vec<BigInt> = vec![BigInt::from(1)]; // S(0,0)
    for m in 1..=n {
        let mut next: Vec<BigInt> = Vec::with_capacity(m as usize + 1);
        next.push(BigInt::from(0)); // S(m,0)
        for j in 1..=m {
            let below = if (j as usize) < row.len() {
                &row[j as usize] * BigInt::from(j)
            } else {
                BigInt::from(0)
            };
            let left = if (j as usize - 1) < row.len() {
                row[j as usize - 1].clone()
            } else {
                BigInt::from(0)
            };
            next.push(below + left);
        }
        row = next;
    }
    row[k as usize].clone()
}
