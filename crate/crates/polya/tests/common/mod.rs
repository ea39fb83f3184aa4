//! Shared process builders for the integration suites.  Each builder
//! returns a plain spec; tests compile it into an exact or numeric
//! analysis as needed.

#![allow(dead_code)]

use num_complex::Complex64;
use num_rational::BigRational;
use polya::analysis::Analysis;
use polya::process::ProcessSpec;
use polya::scalar::{Field, Scalar};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::from_ratio(n, d)
}

pub fn exact(spec: &ProcessSpec) -> Analysis<BigRational> {
    Analysis::<BigRational>::exact(spec, &[], 1e-9).expect("exact analysis")
}

pub fn numeric(spec: &ProcessSpec) -> Analysis<Complex64> {
    Analysis::<Complex64>::numeric(spec, &[], 1e-9).expect("numeric analysis")
}

/// Identity replacement in two colors: the classical exchangeable urn.
pub fn polya_id() -> ProcessSpec {
    ProcessSpec {
        dim: 2,
        increments: vec![
            vec![Scalar::from_int(1), Scalar::from_int(0)],
            vec![Scalar::from_int(0), Scalar::from_int(1)],
        ],
        forms: None,
        initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
    }
}

/// General two-color urn with increment rows `(1-a, a)` and `(b, 1-b)`.
pub fn general2(a: (i64, i64), b: (i64, i64)) -> ProcessSpec {
    let (an, ad) = a;
    let (bn, bd) = b;
    ProcessSpec {
        dim: 2,
        increments: vec![
            vec![Scalar::from_ratio(ad - an, ad), Scalar::from_ratio(an, ad)],
            vec![Scalar::from_ratio(bn, bd), Scalar::from_ratio(bd - bn, bd)],
        ],
        forms: None,
        initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
    }
}

/// Triangular two-color urn with rows `(1, 0)` and `(1-l, l)`, `l = num/den`.
pub fn triangular(num: i64, den: i64) -> ProcessSpec {
    ProcessSpec {
        dim: 2,
        increments: vec![
            vec![Scalar::from_int(1), Scalar::from_int(0)],
            vec![
                Scalar::from_ratio(den - num, den),
                Scalar::from_ratio(num, den),
            ],
        ],
        forms: None,
        initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
    }
}

/// Fringe process of 2-3 search trees: rows `(-2, 3)` and `(4, -3)`.
pub fn two_three_tree() -> ProcessSpec {
    ProcessSpec {
        dim: 2,
        increments: vec![
            vec![Scalar::from_int(-2), Scalar::from_int(3)],
            vec![Scalar::from_int(4), Scalar::from_int(-3)],
        ],
        forms: None,
        initial: vec![Scalar::from_int(2), Scalar::from_int(0)],
    }
}

/// Three colors with one defective eigenvalue 3/4 (Jordan chain of length 2).
pub fn jordan3() -> ProcessSpec {
    ProcessSpec {
        dim: 3,
        increments: vec![
            vec![
                Scalar::from_int(1),
                Scalar::from_int(0),
                Scalar::from_int(0),
            ],
            vec![
                Scalar::from_ratio(1, 4),
                Scalar::from_ratio(3, 4),
                Scalar::from_int(0),
            ],
            vec![
                Scalar::from_int(0),
                Scalar::from_ratio(1, 4),
                Scalar::from_ratio(3, 4),
            ],
        ],
        forms: None,
        initial: vec![
            Scalar::from_int(1),
            Scalar::from_int(1),
            Scalar::from_int(1),
        ],
    }
}

/// Four colors, eigenvalue 3/4 with a Jordan chain of length 3.
pub fn jordan4() -> ProcessSpec {
    let z = Scalar::from_int(0);
    ProcessSpec {
        dim: 4,
        increments: vec![
            vec![Scalar::from_int(1), z.clone(), z.clone(), z.clone()],
            vec![
                Scalar::from_ratio(1, 4),
                Scalar::from_ratio(3, 4),
                z.clone(),
                z.clone(),
            ],
            vec![
                z.clone(),
                Scalar::from_ratio(1, 4),
                Scalar::from_ratio(3, 4),
                z.clone(),
            ],
            vec![
                z.clone(),
                z.clone(),
                Scalar::from_ratio(1, 4),
                Scalar::from_ratio(3, 4),
            ],
        ],
        forms: None,
        initial: vec![
            Scalar::from_int(1),
            Scalar::from_int(1),
            Scalar::from_int(1),
            Scalar::from_int(1),
        ],
    }
}

/// Cyclic urn in `s` colors: drawing color `k` adds one ball of color `k+1`.
pub fn cyclic(s: usize) -> ProcessSpec {
    let increments = (0..s)
        .map(|k| {
            (0..s)
                .map(|j| Scalar::from_int(if j == (k + 1) % s { 1 } else { 0 }))
                .collect()
        })
        .collect();
    let initial = (0..s)
        .map(|j| Scalar::from_int(if j == 0 { 1 } else { 0 }))
        .collect();
    ProcessSpec {
        dim: s,
        increments,
        forms: None,
        initial,
    }
}

/// Congruence process of binary search trees modulo `s`: drawing color `k`
/// removes it and adds two balls of color `k+1`.
pub fn bst_congruence(s: usize) -> ProcessSpec {
    let increments = (0..s)
        .map(|k| {
            (0..s)
                .map(|j| {
                    let mut v = 0i64;
                    if j == k {
                        v -= 1;
                    }
                    if j == (k + 1) % s {
                        v += 2;
                    }
                    Scalar::from_int(v)
                })
                .collect()
        })
        .collect();
    let initial = (0..s)
        .map(|j| Scalar::from_int(if j == 0 { 1 } else { 0 }))
        .collect();
    ProcessSpec {
        dim: s,
        increments,
        forms: None,
        initial,
    }
}

/// `Π_{i=0}^{p-1} (u_k + i·step)` in dimension `dim` (rising-factorial-style
/// product along one coordinate).
pub fn rising_product<F: Field>(
    dim: usize,
    k: usize,
    p: u32,
    step: &F,
) -> polya::upoly::UPolynomial<F> {
    let mut acc = polya::upoly::UPolynomial::one(dim);
    for i in 0..p {
        let mut factor = polya::upoly::UPolynomial::variable(dim, k);
        let shift = step.clone() * F::from_int(i as i64);
        if !shift.is_zero() {
            factor.add_term(polya::upoly::MultiIndex::zero(dim), shift);
        }
        acc = acc.mul(&factor);
    }
    acc
}
