//! Spectrum of the replacement endomorphism and deterministic Jordan bases
//! of linear forms.
//!
//! The replacement endomorphism `A = Σ_k l_k ⊗ w_k` acts on states; its
//! transpose acts on linear forms by `u ∘ A`, and in measuring coordinates
//! that action is simply `u ↦ W·u` where the rows of `W` are the compiled
//! increments.  All spectral work happens on that covector action.
//!
//! A Jordan basis of forms `u_1..u_s` satisfies `u_k∘A = λ_k u_k + ε_k
//! u_{k-1}` with `ε_k ∈ {0,1}`, `u_1 = Σ_k l_k` forced (balance makes it a
//! fixed form), eigenvalues ordered with 1 first and the rest by descending
//! real part (ties by ascending imaginary part).  Within one eigenvalue,
//! chains are listed longest first.  All selections use a first-candidate
//! rule over deterministically ordered nullspace bases, so the output is
//! reproducible; callers can override individual forms with pins, which are
//! re-validated against the chain relations.
//!
//! Exact rational spectra are extracted from the characteristic polynomial
//! by verifying numerically-hinted rational candidates with exact division;
//! if any root resists, the caller falls back to numeric mode (dense Schur
//! eigenvalues, tolerance clustering with an explicit ambiguity band).

use crate::linalg::{charpoly, EchelonAccumulator, LinalgError, Mat};
use crate::process::CompiledProcess;
use crate::scalar::Field;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("the spectrum is not rational; exact analysis is unavailable ({0})")]
    IrrationalSpectrum(String),
    #[error("eigenvalue clusters are ambiguous at the working tolerance: {0}")]
    ClusterAmbiguity(String),
    #[error("numeric rank decisions are ambiguous at the working tolerance: {0}")]
    DefectiveNumerics(String),
    #[error("pinned form {k}: {detail}")]
    PinViolation { k: usize, detail: String },
    #[error("internal spectral invariant failed: {0}")]
    Internal(String),
}

impl From<LinalgError> for SpectralError {
    fn from(e: LinalgError) -> Self {
        SpectralError::DefectiveNumerics(e.to_string())
    }
}

/// One distinct eigenvalue with its algebraic multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRoot<F> {
    pub value: F,
    pub multiplicity: usize,
}

/// The distinct eigenvalues of the replacement endomorphism, ordered with
/// 1 first, then by descending real part and ascending imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<F> {
    pub roots: Vec<SpectralRoot<F>>,
}

/// Matrix of the replacement endomorphism acting on states in measuring
/// coordinates (the transpose of the compiled increment matrix).
pub fn build_replacement_endomorphism<F: Field>(proc: &CompiledProcess<F>) -> Vec<Vec<F>> {
    let s = proc.dim;
    (0..s)
        .map(|i| (0..s).map(|j| proc.w[j][i].clone()).collect())
        .collect()
}

/// Action of the transposed endomorphism on a form given by coefficients in
/// measuring coordinates: `(u∘A)` evaluated as `k ↦ u(w_k)`.
pub fn covector_action<F: Field>(proc: &CompiledProcess<F>, u: &[F]) -> Vec<F> {
    proc.w
        .iter()
        .map(|row| {
            let mut acc = F::zero();
            for (a, b) in row.iter().zip(u) {
                acc = acc + a.clone() * b.clone();
            }
            acc
        })
        .collect()
}

fn covector_matrix<F: Field>(proc: &CompiledProcess<F>) -> Mat<F> {
    Mat::from_rows(proc.w.clone())
}

fn numeric_eigen_hints(w_re: &[Vec<f64>]) -> Result<Vec<Complex64>, SpectralError> {
    let s = w_re.len();
    let flat: Vec<f64> = w_re.iter().flatten().copied().collect();
    let m = DMatrix::from_row_slice(s, s, &flat);
    let max_niter = 200 * s.max(4);
    let schur_eig = |mat: DMatrix<f64>| -> Option<Vec<Complex64>> {
        mat.try_schur(f64::EPSILON, max_niter)
            .map(|sch| sch.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)).collect())
    };
    let mut eig = schur_eig(m.clone());
    // The Francis iteration can cycle without converging on highly symmetric
    // inputs (permutation-style replacement rules are the classic case).  A
    // fixed orthogonal similarity breaks the symmetry without moving the
    // spectrum, so retry under a few deterministic rotations.
    let mut salt = 0x9E37_79B9_7F4A_7C15u64;
    for _ in 0..4 {
        if eig.is_some() {
            break;
        }
        let mut state = salt;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let q = DMatrix::from_fn(s, s, |_, _| next()).qr().q();
        eig = schur_eig(q.transpose() * &m * &q);
        salt = salt.wrapping_mul(0xD129_1E64_3E58_31ADu64).wrapping_add(1);
    }
    let mut out = eig.ok_or_else(|| {
        SpectralError::DefectiveNumerics("the eigenvalue iteration did not converge".into())
    })?;
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

fn eval_poly(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = <BigRational as Field>::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x.clone() + c.clone();
    }
    acc
}

/// Divide by `(x - r)`; the caller guarantees `r` is a root.
fn deflate(coeffs: &[BigRational], r: &BigRational) -> Vec<BigRational> {
    let n = coeffs.len() - 1;
    let mut q = vec![<BigRational as Field>::zero(); n];
    q[n - 1] = coeffs[n].clone();
    for i in (0..n - 1).rev() {
        q[i] = coeffs[i + 1].clone() + r.clone() * q[i + 1].clone();
    }
    debug_assert!(Zero::is_zero(&(coeffs[0].clone() + r.clone() * q[0].clone())));
    q
}

/// Rational approximations of `x` by continued fractions, denominators up
/// to `max_den`, tightest last.
fn continued_fraction_candidates(x: f64, max_den: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h0, mut h1): (i128, i128) = (1, x.floor() as i128);
    let (mut k0, mut k1): (i128, i128) = (0, 1);
    let mut frac = x - x.floor();
    out.push(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
    for _ in 0..40 {
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as i128 || h2.abs() > i128::from(i64::MAX) {
            break;
        }
        out.push(BigRational::new(BigInt::from(h2), BigInt::from(k2)));
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
    }
    out
}

/// Exact spectrum of a process whose compiled data is rational.  Fails with
/// [`SpectralError::IrrationalSpectrum`] when the characteristic polynomial
/// has a non-rational root.
pub fn compute_spectrum_exact(
    proc: &CompiledProcess<BigRational>,
) -> Result<Spectrum<BigRational>, SpectralError> {
    let b = covector_matrix(proc);
    let mut poly = charpoly(&b);
    let one = <BigRational as Field>::one();

    // candidate rational roots: 1 and 0 always, plus rationalizations of
    // the numeric eigenvalues
    let w_re: Vec<Vec<f64>> = proc
        .w
        .iter()
        .map(|row| row.iter().map(Field::re_f64).collect())
        .collect();
    let mut candidates: Vec<BigRational> = vec![one.clone(), <BigRational as Field>::zero()];
    for hint in numeric_eigen_hints(&w_re)? {
        if hint.im.abs() > 1e-7 {
            continue;
        }
        for den in [
            1i64, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 16, 20, 24, 25, 30, 36, 40, 48, 60, 64, 100,
            120, 400, 800, 1000,
        ] {
            let num = (hint.re * den as f64).round();
            if num.abs() < 1e15 {
                candidates.push(BigRational::new(
                    BigInt::from(num as i64),
                    BigInt::from(den),
                ));
            }
        }
        candidates.extend(continued_fraction_candidates(hint.re, 1_000_000_000));
    }
    candidates.sort();
    candidates.dedup();

    let mut roots: Vec<SpectralRoot<BigRational>> = Vec::new();
    for cand in candidates {
        let mut mult = 0;
        while poly.len() > 1 && Zero::is_zero(&eval_poly(&poly, &cand)) {
            poly = deflate(&poly, &cand);
            mult += 1;
        }
        if mult > 0 {
            roots.push(SpectralRoot {
                value: cand,
                multiplicity: mult,
            });
        }
        if poly.len() == 1 {
            break;
        }
    }
    if poly.len() > 1 {
        return Err(SpectralError::IrrationalSpectrum(format!(
            "a degree-{} factor of the characteristic polynomial has no rational root",
            poly.len() - 1
        )));
    }
    if !roots.iter().any(|r| r.value == one) {
        return Err(SpectralError::Internal(
            "balanced process without eigenvalue 1".into(),
        ));
    }
    roots.sort_by(|a, b| {
        let a1 = a.value == one;
        let b1 = b.value == one;
        b1.cmp(&a1).then_with(|| b.value.cmp(&a.value))
    });
    Ok(Spectrum { roots })
}

/// Numeric spectrum: dense eigenvalues, single-linkage clustering with
/// radius `tol`, centroid representatives, and a snap of the cluster
/// nearest to 1 onto exactly 1.
pub fn compute_spectrum_numeric(
    proc: &CompiledProcess<Complex64>,
    tol: f64,
) -> Result<Spectrum<Complex64>, SpectralError> {
    let w_re: Vec<Vec<f64>> = proc
        .w
        .iter()
        .map(|row| row.iter().map(|z| z.re).collect())
        .collect();
    let eigs = numeric_eigen_hints(&w_re)?;
    let n = eigs.len();

    // single-linkage clustering with radius tol
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut cluster_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if cluster_of[r] == usize::MAX {
            cluster_of[r] = clusters.len();
            clusters.push((Complex64::new(0.0, 0.0), 0));
        }
        let c = cluster_of[r];
        clusters[c].0 += eigs[i];
        clusters[c].1 += 1;
    }
    for c in clusters.iter_mut() {
        c.0 /= c.1 as f64;
    }

    // ambiguity: distinct clusters whose representatives are suspiciously close
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let d = (clusters[i].0 - clusters[j].0).norm();
            if d <= 10.0 * tol {
                return Err(SpectralError::ClusterAmbiguity(format!(
                    "representatives {} and {} are {d:.3e} apart (tolerance {tol:.3e})",
                    clusters[i].0, clusters[j].0
                )));
            }
        }
    }

    // snap the cluster nearest to 1 (balance guarantees the root exists)
    let one = Complex64::new(1.0, 0.0);
    let (nearest, dist) = clusters
        .iter()
        .enumerate()
        .map(|(i, (z, _))| (i, (z - one).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| SpectralError::Internal("empty spectrum".into()))?;
    if dist > 1e-6 {
        return Err(SpectralError::DefectiveNumerics(format!(
            "no eigenvalue within 1e-6 of 1 (closest is {} at distance {dist:.3e}); is the process balanced?",
            clusters[nearest].0
        )));
    }
    clusters[nearest].0 = one;
    // snap near-real representatives onto the real axis
    for (z, _) in clusters.iter_mut() {
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }

    clusters.sort_by(|a, b| {
        let a1 = a.0 == one;
        let b1 = b.0 == one;
        b1.cmp(&a1)
            .then_with(|| b.0.re.total_cmp(&a.0.re))
            .then_with(|| a.0.im.total_cmp(&b.0.im))
    });
    Ok(Spectrum {
        roots: clusters
            .into_iter()
            .map(|(value, multiplicity)| SpectralRoot {
                value,
                multiplicity,
            })
            .collect(),
    })
}

/// One Jordan chain of the transposed endomorphism: basis positions
/// `first..=last` (0-based, inclusive) share the eigenvalue of the block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonogenicBlock {
    pub first: usize,
    pub last: usize,
    /// Marked when the block eigenvalue attains the second-largest real
    /// part and the block has maximal size among those.
    pub principal: bool,
}

impl MonogenicBlock {
    pub fn size(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn contains(&self, k: usize) -> bool {
        self.first <= k && k <= self.last
    }
}

/// A user-supplied replacement for one Jordan form.
#[derive(Clone, Debug, PartialEq)]
pub struct PinnedForm<F> {
    /// 0-based position in the Jordan basis.
    pub index: usize,
    /// Coefficients in measuring coordinates.
    pub coords: Vec<F>,
}

/// A Jordan basis of forms together with everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<F: Field> {
    pub dim: usize,
    /// Eigenvalue attached to each basis form.
    pub lambda: Vec<F>,
    /// `eps[k]` is true when `u_k∘A = λ_k u_k + u_{k-1}` (a dependent form).
    pub eps: Vec<bool>,
    /// Form coefficients in measuring coordinates; `u[0]` is all ones.
    pub u: Vec<Vec<F>>,
    /// Dual basis vectors in measuring coordinates: `u_k(v_l) = δ_{kl}`.
    pub v: Vec<Vec<F>>,
    /// Jordan blocks in basis order.
    pub blocks: Vec<MonogenicBlock>,
    /// Second-largest real part: 1 when 1 is a multiple eigenvalue, `None`
    /// for one-dimensional processes.
    pub sigma2: Option<F>,
    /// Algebraic multiplicity of the eigenvalue 1.
    pub one_multiplicity: usize,
    /// Tolerance the basis was computed with (0 is fine in exact mode).
    pub tol: f64,
}

impl<F: Field> SpectralData<F> {
    /// Value of the `k`-th form at a state given in measuring coordinates.
    pub fn form_value(&self, k: usize, coords: &[F]) -> F {
        let mut acc = F::zero();
        for (c, x) in self.u[k].iter().zip(coords) {
            acc = acc + c.clone() * x.clone();
        }
        acc
    }

    /// Index of the block containing basis position `k`.
    pub fn block_of(&self, k: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(k))
            .expect("basis position outside every block")
    }
}

fn sub_diag<F: Field>(m: &Mat<F>, lambda: &F) -> Mat<F> {
    let mut out = m.clone();
    for i in 0..m.rows {
        *out.at_mut(i, i) = out.at(i, i).clone() - lambda.clone();
    }
    out
}

/// Build the deterministic Jordan basis of forms, then apply pins.
pub fn build_jordan_basis<F: Field>(
    proc: &CompiledProcess<F>,
    spectrum: &Spectrum<F>,
    pins: &[PinnedForm<F>],
    tol: f64,
) -> Result<SpectralData<F>, SpectralError> {
    let s = proc.dim;
    let b = covector_matrix(proc);
    let ones = vec![F::one(); s];
    let one = F::one();

    let mut lambda: Vec<F> = Vec::with_capacity(s);
    let mut eps: Vec<bool> = Vec::with_capacity(s);
    let mut u: Vec<Vec<F>> = Vec::with_capacity(s);
    let mut blocks: Vec<MonogenicBlock> = Vec::new();

    for root in &spectrum.roots {
        let is_unit = root.value.approx_eq(&one, tol);
        let m = sub_diag(&b, &root.value);

        // nested nullspaces of (B-λ)^p until the multiplicity is reached
        let mut power = Mat::<F>::identity(s);
        let mut dims: Vec<usize> = vec![0];
        let mut nullspaces: Vec<Vec<Vec<F>>> = Vec::new();
        loop {
            power = power.mul(&m);
            let ns = power.nullspace(tol)?;
            if ns.len() <= *dims.last().unwrap() || ns.len() > root.multiplicity {
                let msg = format!(
                    "generalized eigenspace dimensions for eigenvalue {} are inconsistent with multiplicity {} (got {})",
                    root.value.render(),
                    root.multiplicity,
                    ns.len()
                );
                return Err(if F::EXACT {
                    SpectralError::Internal(msg)
                } else {
                    SpectralError::DefectiveNumerics(msg)
                });
            }
            dims.push(ns.len());
            nullspaces.push(ns);
            if *dims.last().unwrap() == root.multiplicity {
                break;
            }
            if dims.len() > s + 1 {
                return Err(SpectralError::Internal(
                    "generalized eigenspace chain exceeded the dimension".into(),
                ));
            }
        }
        let pmax = nullspaces.len();

        if is_unit && pmax != 1 {
            let msg = "the eigenvalue 1 of a balanced process must be semisimple".to_owned();
            return Err(if F::EXACT {
                SpectralError::Internal(msg)
            } else {
                SpectralError::DefectiveNumerics(msg)
            });
        }

        // chains, tallest height first
        let mut chains: Vec<Vec<Vec<F>>> = Vec::new();
        if is_unit {
            // u1 = Σ l_k comes first, completed from the eigenspace basis
            let acted = b.mat_vec(&ones);
            let fixed = acted.iter().zip(&ones).all(|(a, o)| {
                let d = a.clone() - o.clone();
                if F::EXACT {
                    d.is_zero()
                } else {
                    d.negligible(50.0 * tol)
                }
            });
            if !fixed {
                return Err(SpectralError::Internal(
                    "the all-ones form is not fixed; the process is not balanced".into(),
                ));
            }
            let mut acc = EchelonAccumulator::<F>::new(s, tol);
            acc.insert_if_independent(&ones)?;
            chains.push(vec![ones.clone()]);
            for cand in &nullspaces[0] {
                if chains.len() == root.multiplicity {
                    break;
                }
                if acc.insert_if_independent(cand)? {
                    chains.push(vec![cand.clone()]);
                }
            }
            if chains.len() != root.multiplicity {
                return Err(SpectralError::Internal(
                    "could not complete the fixed-form eigenspace".into(),
                ));
            }
        } else {
            for height in (1..=pmax).rev() {
                let wanted = dims[height] - dims[height - 1];
                let mut new_needed = wanted.saturating_sub(chains.len());
                if new_needed == 0 {
                    continue;
                }
                // independence modulo ker (B-λ)^{h-1} plus the height-h
                // members of taller chains
                let mut acc = EchelonAccumulator::<F>::new(s, tol);
                if height >= 2 {
                    for v in &nullspaces[height - 2] {
                        acc.insert_if_independent(v)?;
                    }
                }
                for chain in &chains {
                    acc.insert_if_independent(&chain[height - 1])?;
                }
                for cand in &nullspaces[height - 1] {
                    if new_needed == 0 {
                        break;
                    }
                    if acc.insert_if_independent(cand)? {
                        // build the chain bottom-first from this top
                        let mut members = vec![cand.clone()];
                        for _ in 1..height {
                            let next = m.mat_vec(members.last().unwrap());
                            members.push(next);
                        }
                        members.reverse();
                        chains.push(members);
                        new_needed -= 1;
                    }
                }
                if new_needed > 0 {
                    let msg = format!(
                        "could not find {new_needed} more chain top(s) at height {height} for eigenvalue {}",
                        root.value.render()
                    );
                    return Err(if F::EXACT {
                        SpectralError::Internal(msg)
                    } else {
                        SpectralError::DefectiveNumerics(msg)
                    });
                }
            }
            // longest chains first; stable sort keeps discovery order on ties
            chains.sort_by(|a, b| b.len().cmp(&a.len()));
        }

        for chain in chains {
            let first = u.len();
            for (i, form) in chain.into_iter().enumerate() {
                lambda.push(root.value.clone());
                eps.push(i > 0);
                u.push(form);
            }
            blocks.push(MonogenicBlock {
                first,
                last: u.len() - 1,
                principal: false,
            });
        }
    }

    if u.len() != s {
        return Err(SpectralError::Internal(format!(
            "Jordan basis has {} forms, expected {s}",
            u.len()
        )));
    }

    // apply pins, then re-validate everything
    for pin in pins {
        let k = pin.index;
        if k >= s {
            return Err(SpectralError::PinViolation {
                k: k + 1,
                detail: format!("index out of range 1..={s}"),
            });
        }
        if pin.coords.len() != s {
            return Err(SpectralError::PinViolation {
                k: k + 1,
                detail: format!("expected {s} coefficients, got {}", pin.coords.len()),
            });
        }
        if k == 0 {
            let is_ones = pin
                .coords
                .iter()
                .all(|c| c.approx_eq(&one, tol));
            if !is_ones {
                return Err(SpectralError::PinViolation {
                    k: 1,
                    detail: "the first form is fixed to the sum of the measuring forms".into(),
                });
            }
            continue;
        }
        u[k] = pin.coords.clone();
    }

    // relation check: u_k∘A = λ_k u_k + ε_k u_{k-1}
    let scale = u
        .iter()
        .flat_map(|row| row.iter().map(F::abs_f64))
        .fold(1.0f64, f64::max);
    let check_tol = 50.0 * tol * scale;
    for k in 0..s {
        let acted = covector_action(proc, &u[k]);
        for j in 0..s {
            let mut expect = lambda[k].clone() * u[k][j].clone();
            if eps[k] {
                expect = expect + u[k - 1][j].clone();
            }
            let diff = acted[j].clone() - expect;
            let ok = if F::EXACT {
                diff.is_zero()
            } else {
                diff.negligible(check_tol)
            };
            if !ok {
                let detail = format!(
                    "form {} does not satisfy its chain relation (residual {} at coordinate {})",
                    k + 1,
                    diff.render(),
                    j + 1
                );
                return Err(if pins.is_empty() {
                    SpectralError::Internal(detail)
                } else {
                    SpectralError::PinViolation { k: k + 1, detail }
                });
            }
        }
    }

    // dual basis
    let umat = Mat::from_rows(u.clone());
    let uinv = match umat.inverse(tol)? {
        Some(inv) => inv,
        None => {
            let detail = "the Jordan forms are not linearly independent".to_owned();
            return Err(if pins.is_empty() {
                SpectralError::Internal(detail)
            } else {
                SpectralError::PinViolation { k: 0, detail }
            });
        }
    };
    let v: Vec<Vec<F>> = (0..s)
        .map(|l| (0..s).map(|j| uinv.at(j, l).clone()).collect())
        .collect();

    // multiplicity of 1 and σ₂
    let one_multiplicity = spectrum
        .roots
        .iter()
        .find(|r| r.value.approx_eq(&one, tol))
        .map_or(0, |r| r.multiplicity);
    // σ₂ is the largest real part among eigenvalues ≠ 1 (a real number),
    // or 1 itself when 1 is multiple, or absent in dimension one
    let sigma2: Option<F> = if one_multiplicity > 1 {
        Some(one.clone())
    } else if F::EXACT {
        spectrum
            .roots
            .iter()
            .filter(|r| r.value != one)
            .map(|r| r.value.clone())
            .max_by(|a, b| a.sort_cmp(b))
    } else {
        spectrum
            .roots
            .iter()
            .skip(1)
            .map(|r| r.value.re_f64())
            .max_by(f64::total_cmp)
            .map(|re| F::from_scalar(&crate::scalar::Scalar::Float(re)).expect("float scalar"))
    };

    // principal blocks: eigenvalue real part equals σ₂, maximal size
    let mut blocks = blocks;
    if let Some(s2) = &sigma2 {
        let at_sigma: Vec<usize> = blocks
            .iter()
            .enumerate()
            .filter(|(_, blk)| {
                let lam = &lambda[blk.first];
                if one_multiplicity > 1 {
                    lam.approx_eq(&one, tol)
                } else {
                    !lam.approx_eq(&one, tol) && lam.re_cmp(s2, tol) == Ordering::Equal
                }
            })
            .map(|(i, _)| i)
            .collect();
        let max_size = at_sigma.iter().map(|&i| blocks[i].size()).max().unwrap_or(0);
        for &i in &at_sigma {
            if blocks[i].size() == max_size {
                blocks[i].principal = true;
            }
        }
    }

    Ok(SpectralData {
        dim: s,
        lambda,
        eps,
        u,
        v,
        blocks,
        sigma2,
        one_multiplicity,
        tol,
    })
}

/// Whether the process is small or large, and how its principal part is
/// organised.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification<F> {
    /// 1 is a simple eigenvalue and every other real part is ≤ 1/2.
    pub small: bool,
    pub one_multiplicity: usize,
    pub sigma2: Option<F>,
    /// All Jordan blocks have size 1.
    pub semisimple: bool,
    /// All principal blocks have size 1.
    pub principally_semisimple: bool,
    /// Common principal block size minus one (0 when principally
    /// semisimple); drives the power of `log n` in second-order terms.
    pub nu: u32,
    /// Indices of principal blocks in [`SpectralData::blocks`].
    pub principal_blocks: Vec<usize>,
}

/// Classify a process from its spectral data.
pub fn classify_process<F: Field>(sd: &SpectralData<F>) -> Classification<F> {
    let half = F::from_ratio(1, 2);
    let small = sd.one_multiplicity == 1
        && match &sd.sigma2 {
            None => true,
            Some(s2) => s2.re_cmp(&half, sd.tol) != Ordering::Greater,
        };
    let semisimple = sd.eps.iter().all(|&e| !e);
    let principal_blocks: Vec<usize> = sd
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.principal)
        .map(|(i, _)| i)
        .collect();
    let nu = principal_blocks
        .iter()
        .map(|&i| sd.blocks[i].size() as u32 - 1)
        .max()
        .unwrap_or(0);
    Classification {
        small,
        one_multiplicity: sd.one_multiplicity,
        sigma2: sd.sigma2.clone(),
        semisimple,
        principally_semisimple: nu == 0,
        nu,
        principal_blocks,
    }
}

/// How a monomial `u^α` sits relative to the spectrum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerClass {
    /// Every supported index has `Re λ_k > 1/2`.
    pub large: bool,
    /// Every supported index has `Re λ_k ≤ 1/2`.
    pub small: bool,
    /// Every supported form is an eigenform.
    pub semisimple: bool,
    /// The support lies inside a single Jordan block.
    pub monogenic_block: Option<usize>,
}

/// Classify a power `u^α`.
pub fn classify_power<F: Field>(
    alpha: &crate::upoly::MultiIndex,
    sd: &SpectralData<F>,
) -> PowerClass {
    let half = F::from_ratio(1, 2);
    let support = alpha.support();
    let gt_half = |k: usize| sd.lambda[k].re_cmp(&half, sd.tol) == Ordering::Greater;
    let large = support.iter().all(|&k| gt_half(k));
    let small = support.iter().all(|&k| !gt_half(k));
    let semisimple = support.iter().all(|&k| !sd.eps[k]);
    let monogenic_block = sd
        .blocks
        .iter()
        .position(|b| support.iter().all(|&k| b.contains(k)))
        .filter(|_| !support.is_empty());
    PowerClass {
        large,
        small,
        semisimple,
        monogenic_block,
    }
}

/// Convenience used by tests and reports: exact rational made from numeric
/// hints is meaningless, so expose the real part of σ₂ directly.
pub fn sigma2_re<F: Field>(sd: &SpectralData<F>) -> Option<f64> {
    sd.sigma2.as_ref().map(F::re_f64)
}
