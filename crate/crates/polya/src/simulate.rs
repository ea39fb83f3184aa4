//! Seeded Monte Carlo engine: trajectories of the process, streaming
//! estimation of `E u^α(X_n)`, and empirical moments of the rescaled limit
//! variables `Ŵ_k = u_k(X_N)/N^{λ_k}`.
//!
//! Determinism contract: identical `(seed, config, process)` produce
//! bit-identical estimates regardless of thread count.  Each trial draws
//! from its own counter-derived RNG stream and aggregation is a reduction
//! in trial-index order.

use crate::analysis::Analysis;
use crate::scalar::Field;
use crate::upoly::MultiIndex;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("propensity of color {color} went negative at step {step} of trial {trial}")]
    NegativePropensity { trial: u64, step: u64, color: usize },
    #[error("the process is small; limit W variables are not defined")]
    SmallProcess,
    #[error("estimand references color index {0}, which is out of range")]
    IndexOutOfRange(usize),
    #[error("thread pool construction failed: {0}")]
    Pool(String),
}

/// A quantity estimated across trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Estimand {
    /// `E u^α(X_n)` (power of the eigenform coordinates of the final state).
    UMoment(MultiIndex),
    /// `E Π_i Ŵ_{k_i}` over a list of 0-based form indices with repetition,
    /// where `Ŵ_k = u_k(X_N)/N^{λ_k}`.
    WProduct(Vec<usize>),
}

impl Estimand {
    /// Render in the CLI's `u:…`/`w:…` syntax (`w` indices 1-based).
    pub fn render(&self) -> String {
        match self {
            Estimand::UMoment(alpha) => {
                let parts: Vec<String> = alpha.0.iter().map(|e| e.to_string()).collect();
                format!("u:{}", parts.join(","))
            }
            Estimand::WProduct(idx) => {
                let parts: Vec<String> = idx.iter().map(|k| (k + 1).to_string()).collect();
                format!("w:{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Final time `n`: the trajectory starts at `X₁` and performs `n-1` draws.
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 picks the library default.
    pub threads: usize,
    pub estimands: Vec<Estimand>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimandStats {
    pub estimand: Estimand,
    pub mean: Complex64,
    /// Sample standard deviation / √trials; `None` with a single trial.
    pub se: Option<f64>,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// All propensities kept as scaled integers; the balance identity is
    /// exact along every trajectory.
    ScaledInteger,
    /// Double-precision propensities (used when the data are not rational
    /// or do not fit the integer representation).
    Float,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub stats: Vec<EstimandStats>,
    pub engine: Engine,
    pub horizon: u64,
    pub seed: u64,
}

/// Final state of a single trajectory, in measuring coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    /// `coords[j] = scaled[j]/denom` exactly.
    Exact { scaled: Vec<i128>, denom: i128 },
    Float(Vec<f64>),
}

impl FinalState {
    pub fn coords(&self) -> Vec<f64> {
        match self {
            FinalState::Exact { scaled, denom } => {
                let d = *denom as f64;
                scaled.iter().map(|&v| v as f64 / d).collect()
            }
            FinalState::Float(x) => x.clone(),
        }
    }
}

// --- engines ----------------------------------------------------------

struct IntPlan {
    init: Vec<i128>,
    moves: Vec<Vec<i128>>,
    /// Common denominator: state entry `j` is `denom·l_j(X_n)`.
    denom: i128,
}

struct FloatPlan {
    init: Vec<f64>,
    moves: Vec<Vec<f64>>,
}

enum Plan {
    Int(IntPlan),
    Float(FloatPlan),
}

impl Plan {
    fn engine(&self) -> Engine {
        match self {
            Plan::Int(_) => Engine::ScaledInteger,
            Plan::Float(_) => Engine::Float,
        }
    }
}

fn to_i128(r: &BigInt) -> Option<i128> {
    r.to_i128()
}

/// Try to scale all process data to integers over one common denominator.
fn build_int_plan<F: Field>(an: &Analysis<F>) -> Option<IntPlan> {
    let s = an.dim();
    let mut denom = BigInt::one();
    let mut rats = Vec::with_capacity(s * (s + 1));
    for j in 0..s {
        rats.push(an.proc.x1[j].to_rational()?);
    }
    for k in 0..s {
        for j in 0..s {
            rats.push(an.proc.w[k][j].to_rational()?);
        }
    }
    for r in &rats {
        denom = denom.lcm(r.denom());
    }
    let scale = |r: &num_rational::BigRational| -> Option<i128> {
        to_i128(&(r.numer() * (&denom / r.denom())))
    };
    let mut init = Vec::with_capacity(s);
    for r in &rats[..s] {
        init.push(scale(r)?);
    }
    let mut moves = Vec::with_capacity(s);
    for k in 0..s {
        let mut row = Vec::with_capacity(s);
        for j in 0..s {
            row.push(scale(&rats[s + k * s + j])?);
        }
        moves.push(row);
    }
    let denom = to_i128(&denom)?;
    // keep totals comfortably inside i128 at any realistic horizon
    if denom > i128::MAX / (1 << 40) {
        return None;
    }
    Some(IntPlan { init, moves, denom })
}

fn build_float_plan<F: Field>(an: &Analysis<F>) -> FloatPlan {
    let s = an.dim();
    FloatPlan {
        init: (0..s).map(|j| an.proc.x1[j].re_f64()).collect(),
        moves: (0..s)
            .map(|k| (0..s).map(|j| an.proc.w[k][j].re_f64()).collect())
            .collect(),
    }
}

fn build_plan<F: Field>(an: &Analysis<F>) -> Plan {
    if F::EXACT {
        if let Some(p) = build_int_plan(an) {
            return Plan::Int(p);
        }
    }
    Plan::Float(build_float_plan(an))
}

fn run_int(
    plan: &IntPlan,
    n: u64,
    rng: &mut impl RngCore,
) -> Result<Vec<i128>, (u64, usize)> {
    let s = plan.init.len();
    let mut x = plan.init.clone();
    let mut total: i128 = x.iter().sum();
    for step in 1..n {
        for (k, &v) in x.iter().enumerate() {
            if v < 0 {
                return Err((step, k));
            }
        }
        let draw = rng.gen_range(0..total);
        let mut acc = 0i128;
        let mut chosen = s - 1;
        for (k, &v) in x.iter().enumerate() {
            acc += v;
            if draw < acc {
                chosen = k;
                break;
            }
        }
        for j in 0..s {
            x[j] += plan.moves[chosen][j];
        }
        total += plan.denom;
    }
    Ok(x)
}

fn run_float(
    plan: &FloatPlan,
    n: u64,
    rng: &mut impl RngCore,
) -> Result<Vec<f64>, (u64, usize)> {
    let s = plan.init.len();
    let mut x = plan.init.clone();
    let mut total: f64 = x.iter().sum();
    for step in 1..n {
        for (k, &v) in x.iter().enumerate() {
            if v < -1e-9 * total.abs() {
                return Err((step, k));
            }
        }
        let draw = rng.gen_range(0.0..total);
        let mut acc = 0f64;
        let mut chosen = s - 1;
        for (k, &v) in x.iter().enumerate() {
            acc += v.max(0.0);
            if draw < acc {
                chosen = k;
                break;
            }
        }
        for j in 0..s {
            x[j] += plan.moves[chosen][j];
        }
        total += 1.0;
    }
    Ok(x)
}

// --- RNG streams --------------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn expand_seed(seed: u64) -> [u8; 32] {
    let mut s = seed;
    let mut out = [0u8; 32];
    for i in 0..4 {
        out[i * 8..(i + 1) * 8].copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    out
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(expand_seed(seed));
    rng.set_stream(trial + 1);
    rng
}

/// Run one trajectory to time `n` with the supplied RNG.
pub fn simulate_trajectory<F: Field>(
    an: &Analysis<F>,
    n: u64,
    rng: &mut impl RngCore,
) -> Result<FinalState, SimError> {
    if n < 1 {
        return Err(SimError::InvalidConfig("horizon must be ≥ 1".into()));
    }
    match build_plan(an) {
        Plan::Int(p) => match run_int(&p, n, rng) {
            Ok(scaled) => Ok(FinalState::Exact {
                scaled,
                denom: p.denom,
            }),
            Err((step, color)) => Err(SimError::NegativePropensity {
                trial: 0,
                step,
                color,
            }),
        },
        Plan::Float(p) => match run_float(&p, n, rng) {
            Ok(x) => Ok(FinalState::Float(x)),
            Err((step, color)) => Err(SimError::NegativePropensity {
                trial: 0,
                step,
                color,
            }),
        },
    }
}

fn cpow(base: Complex64, mut e: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// Estimate the configured quantities by independent trials.
pub fn estimate<F: Field>(an: &Analysis<F>, cfg: &SimConfig) -> Result<SimReport, SimError> {
    let s = an.dim();
    if cfg.horizon < 1 {
        return Err(SimError::InvalidConfig("horizon must be ≥ 1".into()));
    }
    if cfg.trials < 1 {
        return Err(SimError::InvalidConfig("trials must be ≥ 1".into()));
    }
    if cfg.estimands.is_empty() {
        return Err(SimError::InvalidConfig("no estimands requested".into()));
    }
    let mut any_w = false;
    for e in &cfg.estimands {
        match e {
            Estimand::UMoment(a) => {
                if a.dim() != s {
                    return Err(SimError::InvalidConfig(format!(
                        "power {} has dimension {}, process has {}",
                        a.render(),
                        a.dim(),
                        s
                    )));
                }
            }
            Estimand::WProduct(idx) => {
                any_w = true;
                for &k in idx {
                    if k >= s {
                        return Err(SimError::IndexOutOfRange(k));
                    }
                }
            }
        }
    }
    if any_w && an.cls.small {
        return Err(SimError::SmallProcess);
    }

    let plan = build_plan(an);
    let engine = plan.engine();
    let u_c64: Vec<Vec<Complex64>> = an
        .sd
        .u
        .iter()
        .map(|row| row.iter().map(Field::to_c64).collect())
        .collect();
    // Ŵ rescaling factors N^{-λ_k}
    let ln_n = (cfg.horizon as f64).ln();
    let w_scale: Vec<Complex64> = an
        .sd
        .lambda
        .iter()
        .map(|l| (-l.to_c64() * ln_n).exp())
        .collect();
    let estimands = cfg.estimands.clone();

    let eval_trial = |trial: u64| -> Result<Vec<Complex64>, SimError> {
        let mut rng = trial_rng(cfg.seed, trial);
        let coords: Vec<f64> = match &plan {
            Plan::Int(p) => match run_int(p, cfg.horizon, &mut rng) {
                Ok(xs) => {
                    let d = p.denom as f64;
                    xs.iter().map(|&v| v as f64 / d).collect()
                }
                Err((step, color)) => {
                    return Err(SimError::NegativePropensity { trial, step, color })
                }
            },
            Plan::Float(p) => match run_float(p, cfg.horizon, &mut rng) {
                Ok(xs) => xs,
                Err((step, color)) => {
                    return Err(SimError::NegativePropensity { trial, step, color })
                }
            },
        };
        let u_vals: Vec<Complex64> = (0..s)
            .map(|k| {
                coords
                    .iter()
                    .zip(&u_c64[k])
                    .map(|(&xj, uj)| uj * xj)
                    .sum()
            })
            .collect();
        let values = estimands
            .iter()
            .map(|e| match e {
                Estimand::UMoment(alpha) => {
                    let mut acc = Complex64::new(1.0, 0.0);
                    for (k, &p) in alpha.0.iter().enumerate() {
                        if p > 0 {
                            acc *= cpow(u_vals[k], p);
                        }
                    }
                    acc
                }
                Estimand::WProduct(idx) => {
                    let mut acc = Complex64::new(1.0, 0.0);
                    for &k in idx {
                        acc *= u_vals[k] * w_scale[k];
                    }
                    acc
                }
            })
            .collect();
        Ok(values)
    };

    let results: Vec<Result<Vec<Complex64>, SimError>> = if cfg.threads == 1 {
        (0..cfg.trials).map(eval_trial).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        pool.install(|| (0..cfg.trials).into_par_iter().map(eval_trial).collect())
    };
    // deterministic error selection: first failing trial in trial order
    let mut samples: Vec<Vec<Complex64>> = Vec::with_capacity(cfg.trials as usize);
    for r in results {
        samples.push(r?);
    }

    let m = estimands.len();
    let nt = cfg.trials as f64;
    let mut stats = Vec::with_capacity(m);
    for (i, e) in estimands.iter().enumerate() {
        let mut sum = Complex64::new(0.0, 0.0);
        for row in &samples {
            sum += row[i];
        }
        let mean = sum / nt;
        let se = if cfg.trials > 1 {
            let mut ss = 0.0;
            for row in &samples {
                ss += (row[i] - mean).norm_sqr();
            }
            Some((ss / (nt - 1.0) / nt).sqrt())
        } else {
            None
        };
        stats.push(EstimandStats {
            estimand: e.clone(),
            mean,
            se,
            trials: cfg.trials,
        });
    }
    Ok(SimReport {
        stats,
        engine,
        horizon: cfg.horizon,
        seed: cfg.seed,
    })
}

/// Estimate `E u^α(X_n)` quantities (no W estimands).
pub fn estimate_moments<F: Field>(
    an: &Analysis<F>,
    cfg: &SimConfig,
) -> Result<SimReport, SimError> {
    for e in &cfg.estimands {
        if matches!(e, Estimand::WProduct(_)) {
            return Err(SimError::InvalidConfig(
                "W estimand passed to the plain moment estimator".into(),
            ));
        }
    }
    estimate(an, cfg)
}

/// Estimate moments of the rescaled limit variables of a large process.
pub fn estimate_w<F: Field>(an: &Analysis<F>, cfg: &SimConfig) -> Result<SimReport, SimError> {
    if an.cls.small {
        return Err(SimError::SmallProcess);
    }
    estimate(an, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessSpec;
    use crate::scalar::Scalar;
    use num_rational::BigRational;

    fn triangular(ell_num: i64, ell_den: i64) -> Analysis<BigRational> {
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![
                    Scalar::from_ratio(ell_den - ell_num, ell_den),
                    Scalar::from_ratio(ell_num, ell_den),
                ],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap()
    }

    #[test]
    fn balance_holds_exactly_along_trajectories() {
        let an = triangular(3, 4);
        let mut rng = trial_rng(7, 0);
        let n = 500u64;
        match simulate_trajectory(&an, n, &mut rng).unwrap() {
            FinalState::Exact { scaled, denom } => {
                let total: i128 = scaled.iter().sum();
                // Σ l_k(X_n) = n + τ₁ - 1 = n + 1
                assert_eq!(total, denom * (n as i128 + 1));
                assert_eq!(denom, 4);
            }
            FinalState::Float(_) => panic!("expected the integer engine"),
        }
    }

    #[test]
    fn fixed_form_estimand_has_zero_variance() {
        let an = triangular(3, 4);
        let cfg = SimConfig {
            horizon: 200,
            trials: 16,
            seed: 1,
            threads: 1,
            estimands: vec![Estimand::UMoment(MultiIndex(vec![1, 0]))],
        };
        let rep = estimate(&an, &cfg).unwrap();
        assert_eq!(rep.engine, Engine::ScaledInteger);
        let st = &rep.stats[0];
        assert!((st.mean.re - 201.0).abs() < 1e-9 && st.mean.im.abs() < 1e-15);
        assert_eq!(st.se, Some(0.0));
    }

    #[test]
    fn identical_seeds_reproduce_across_thread_counts() {
        let an = triangular(3, 4);
        let base = SimConfig {
            horizon: 300,
            trials: 64,
            seed: 42,
            threads: 1,
            estimands: vec![
                Estimand::UMoment(MultiIndex(vec![0, 1])),
                Estimand::WProduct(vec![1, 1]),
            ],
        };
        let r1 = estimate(&an, &base).unwrap();
        let mut c2 = base.clone();
        c2.threads = 4;
        let r2 = estimate(&an, &c2).unwrap();
        let mut c3 = base.clone();
        c3.threads = 0;
        let r3 = estimate(&an, &c3).unwrap();
        for (a, b) in r1.stats.iter().zip(&r2.stats) {
            assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
            assert_eq!(a.mean.im.to_bits(), b.mean.im.to_bits());
            assert_eq!(a.se.map(f64::to_bits), b.se.map(f64::to_bits));
        }
        for (a, b) in r1.stats.iter().zip(&r3.stats) {
            assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
        }
        let mut c4 = base.clone();
        c4.seed = 43;
        let r4 = estimate(&an, &c4).unwrap();
        assert_ne!(
            r1.stats[0].mean.re.to_bits(),
            r4.stats[0].mean.re.to_bits()
        );
    }

    #[test]
    fn degenerate_urn_is_deterministic() {
        // second color always adds to the first: state evolves deterministically
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![Scalar::from_int(1), Scalar::from_int(0)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        for t in 0..4 {
            let mut rng = trial_rng(9, t);
            let fs = simulate_trajectory(&an, 50, &mut rng).unwrap();
            assert_eq!(fs.coords(), vec![50.0, 1.0]);
        }
        // λ₂ = 0 makes the process small: W estimands are refused
        let cfg = SimConfig {
            horizon: 10,
            trials: 2,
            seed: 0,
            threads: 1,
            estimands: vec![Estimand::WProduct(vec![1])],
        };
        assert!(matches!(estimate(&an, &cfg), Err(SimError::SmallProcess)));
    }

    #[test]
    fn tenability_breach_is_reported() {
        // negative off-diagonal entries drive a propensity below zero
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(2), Scalar::from_int(-1)],
                vec![Scalar::from_int(-1), Scalar::from_int(2)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        let cfg = SimConfig {
            horizon: 50,
            trials: 8,
            seed: 3,
            threads: 1,
            estimands: vec![Estimand::UMoment(MultiIndex(vec![0, 1]))],
        };
        match estimate(&an, &cfg) {
            Err(SimError::NegativePropensity { step, .. }) => assert!(step >= 2),
            other => panic!("expected a propensity breach, got {other:?}"),
        }
    }

    #[test]
    fn w_estimates_track_the_closed_form() {
        // ℓ = 3/4 triangular urn: E Ŵ ≈ 1/Γ(2+3/4)·Q(X₁); deterministic
        // given the seed, verified against the frozen closed-form value
        let an = triangular(3, 4);
        let cfg = SimConfig {
            horizon: 4000,
            trials: 400,
            seed: 2024,
            threads: 0,
            estimands: vec![
                Estimand::WProduct(vec![1]),
                Estimand::WProduct(vec![1, 1]),
            ],
        };
        let rep = estimate_w(&an, &cfg).unwrap();
        let m1 = &rep.stats[0];
        let m2 = &rep.stats[1];
        assert!(
            (m1.mean.re - 0.6217515726462956).abs() < 4.0 * m1.se.unwrap() + 0.01,
            "mean {} se {:?}",
            m1.mean,
            m1.se
        );
        assert!(
            (m2.mean.re - 0.5265769446445725).abs() < 4.0 * m2.se.unwrap() + 0.02,
            "mean {} se {:?}",
            m2.mean,
            m2.se
        );
    }

    #[test]
    fn float_engine_agrees_with_integer_engine_statistically() {
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![Scalar::Float(0.25), Scalar::Float(0.75)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        let an = Analysis::<Complex64>::numeric(&spec, &[], 1e-9).unwrap();
        let cfg = SimConfig {
            horizon: 500,
            trials: 200,
            seed: 11,
            threads: 1,
            estimands: vec![Estimand::UMoment(MultiIndex(vec![0, 1]))],
        };
        let rep = estimate(&an, &cfg).unwrap();
        assert_eq!(rep.engine, Engine::Float);
        // E u₂(X_n) = γ(n)·u₂(X₁) with z = 3/4 ⇒ ≈ 105.4 at n = 500
        let expect = crate::moments::gamma_eval(2.0, 500, Complex64::new(0.75, 0.0));
        let st = &rep.stats[0];
        assert!(
            (st.mean.re - expect.re).abs() < 4.0 * st.se.unwrap() + 0.5,
            "mean {} expect {}",
            st.mean,
            expect
        );
    }
}
