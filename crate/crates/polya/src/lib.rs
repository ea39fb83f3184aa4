//! Algebraic analysis of balanced Pólya processes.
//!
//! A balanced Pólya process is a Markov chain on a real vector space: at each
//! step one of `s` colors is drawn with probability proportional to a linear
//! form `l_k` of the current state, and the corresponding increment vector
//! `w_k` is added.  Balance means every increment has total measure one, so
//! the total size grows deterministically.
//!
//! The crate implements the full algebraic pipeline around the replacement
//! endomorphism `A = Σ_k l_k ⊗ w_k`:
//!
//! * [`process`] — parsing, validation (balance, initialization, tenability)
//!   and canonicalization of process descriptions;
//! * [`spectral`] — spectrum of `A`, deterministic Jordan bases of linear
//!   forms, process and power classification;
//! * [`upoly`] — sparse polynomials in the Jordan forms `u_1..u_s` under the
//!   degree-antialphabetical monomial order;
//! * [`operator`] — the transition operator `Φ` on polynomials, its
//!   triangular matrix on initial segments, and the reduced polynomials
//!   `Q_α` with their coefficient tables;
//! * [`cones`] — the support cone `Σ`, its dual generators, and the
//!   polyhedra `A_α` controlling coefficient supports;
//! * [`moments`] — exact finite-time moments via `γ_{τ₁,n}(Φ)`, asymptotic
//!   moment terms, and closed-form joint moments of the limit variables
//!   `W_k`;
//! * [`simulate`] — reproducible Monte Carlo simulation and moment
//!   estimation used to cross-check the algebra.
//!
//! All algebraic layers are generic over [`scalar::Field`], instantiated
//! either with exact rationals or with double-precision complex numbers.

pub mod analysis;
pub mod cones;
mod linalg;
pub mod moments;
pub mod operator;
pub mod process;
pub mod scalar;
pub mod simulate;
pub mod spectral;
pub mod upoly;

pub use analysis::Analysis;
