//! One-stop bundle of everything the polynomial pipeline needs: the
//! compiled process, its Jordan basis of forms, the classification, and
//! frequently used evaluation tables (forms at increments, measuring forms
//! in the Jordan basis, forms at the initial state).

use crate::process::{compile, CompiledProcess, ProcessError, ProcessSpec};
use crate::scalar::Field;
use crate::spectral::{
    build_jordan_basis, classify_process, compute_spectrum_exact, compute_spectrum_numeric,
    Classification, PinnedForm, SpectralData, SpectralError,
};
use crate::upoly::MultiIndex;
use num_complex::Complex64;
use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Compiled process plus spectral data plus derived tables.
#[derive(Clone, Debug)]
pub struct Analysis<F: Field> {
    pub proc: CompiledProcess<F>,
    pub sd: SpectralData<F>,
    pub cls: Classification<F>,
    /// `uw[j][k]` = value of form `u_j` at increment `w_k`.
    pub uw: Vec<Vec<F>>,
    /// `l_in_u[k][j]` = coefficient of `u_j` in the measuring form `l_k`.
    pub l_in_u: Vec<Vec<F>>,
    /// `x1_u[j]` = value of form `u_j` at the initial state.
    pub x1_u: Vec<F>,
    pub tol: f64,
}

impl<F: Field> Analysis<F> {
    pub fn from_parts(proc: CompiledProcess<F>, sd: SpectralData<F>, tol: f64) -> Self {
        let s = proc.dim;
        let dot = |a: &[F], b: &[F]| {
            let mut acc = F::zero();
            for (x, y) in a.iter().zip(b) {
                acc = acc + x.clone() * y.clone();
            }
            acc
        };
        let uw: Vec<Vec<F>> = (0..s)
            .map(|j| (0..s).map(|k| dot(&sd.u[j], &proc.w[k])).collect())
            .collect();
        // a form f expands as Σ_j f(v_j)·u_j; for l_k that value is the
        // k-th coordinate of the dual vector v_j
        let l_in_u: Vec<Vec<F>> = (0..s)
            .map(|k| (0..s).map(|j| sd.v[j][k].clone()).collect())
            .collect();
        let x1_u: Vec<F> = (0..s).map(|j| dot(&sd.u[j], &proc.x1)).collect();
        let cls = classify_process(&sd);
        Analysis {
            proc,
            sd,
            cls,
            uw,
            l_in_u,
            x1_u,
            tol,
        }
    }

    /// Linear combination `Σ_k α_k λ_k` of eigenvalues along a power.
    pub fn bracket(&self, alpha: &MultiIndex) -> F {
        let mut acc = F::zero();
        for (k, &a) in alpha.0.iter().enumerate() {
            if a > 0 {
                acc = acc + self.sd.lambda[k].clone() * F::from_int(a as i64);
            }
        }
        acc
    }

    pub fn dim(&self) -> usize {
        self.proc.dim
    }

    pub fn tau1(&self) -> F {
        self.proc.tau1.clone()
    }
}

impl Analysis<BigRational> {
    /// Full exact pipeline: compile, exact spectrum, Jordan basis, tables.
    pub fn exact(
        spec: &ProcessSpec,
        pins: &[PinnedForm<BigRational>],
        tol: f64,
    ) -> Result<Self, AnalysisError> {
        let proc = compile::<BigRational>(spec, tol)?;
        let spectrum = compute_spectrum_exact(&proc)?;
        let sd = build_jordan_basis(&proc, &spectrum, pins, tol)?;
        Ok(Self::from_parts(proc, sd, tol))
    }
}

impl Analysis<Complex64> {
    /// Full numeric pipeline: compile, clustered spectrum, Jordan basis.
    pub fn numeric(
        spec: &ProcessSpec,
        pins: &[PinnedForm<Complex64>],
        tol: f64,
    ) -> Result<Self, AnalysisError> {
        let proc = compile::<Complex64>(spec, tol)?;
        let spectrum = compute_spectrum_numeric(&proc, tol)?;
        let sd = build_jordan_basis(&proc, &spectrum, pins, tol)?;
        Ok(Self::from_parts(proc, sd, tol))
    }
}
