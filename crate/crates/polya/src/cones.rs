//! Lattice-cone geometry underlying the support of reduced polynomials:
//! the cone `Σ` with its facet description and extreme rays, the
//! descent polyhedra `A_α` generated by Jordan-chain moves, and the
//! refined support check for the coefficient tables.
//!
//! All arithmetic is exact.

use crate::operator::ReducedTable;
use crate::scalar::Field;
use crate::spectral::SpectralData;
use crate::upoly::MultiIndex;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

/// Maximum dimension for the facet enumeration (`2^s - 2` inequalities).
pub const MAX_CONE_DIM: usize = 24;

/// Facet normals of `Σ`: for every proper nonempty subset `I` of the
/// coordinates, the functional `x ↦ Σ_i x_i + Σ_{i∈I} x_i` (coefficient 2
/// on `I`, 1 elsewhere).  In dimension 1 the cone degenerates to `{0}`.
pub fn sigma_facet_normals(s: usize) -> Vec<Vec<BigRational>> {
    assert!(s >= 1 && s <= MAX_CONE_DIM, "dimension out of range");
    let one = BigRational::from_int(1);
    let two = BigRational::from_int(2);
    let mut out = Vec::new();
    if s == 1 {
        // x = 0 expressed as the pair of inequalities ±x ≥ 0
        out.push(vec![one.clone()]);
        out.push(vec![-one]);
        return out;
    }
    for mask in 1..(1u32 << s) - 1 {
        let row: Vec<BigRational> = (0..s)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    two.clone()
                } else {
                    one.clone()
                }
            })
            .collect();
        out.push(row);
    }
    out
}

/// Membership in `Σ`: every facet functional is nonnegative.
pub fn sigma_contains(x: &[BigRational]) -> bool {
    let s = x.len();
    assert!(s >= 1 && s <= MAX_CONE_DIM, "dimension out of range");
    if s == 1 {
        return Zero::is_zero(&x[0]);
    }
    let total: BigRational = x.iter().sum();
    for mask in 1..(1u32 << s) - 1 {
        let mut v = total.clone();
        for (i, xi) in x.iter().enumerate() {
            if mask & (1 << i) != 0 {
                v += xi;
            }
        }
        if v.is_negative() {
            return false;
        }
    }
    true
}

/// Extreme rays of `Σ`: the `s(s-1)` vectors `2e_i - e_j`, `i ≠ j` (empty
/// in dimension 1).
pub fn sigma_extreme_rays(s: usize) -> Vec<Vec<BigRational>> {
    assert!(s >= 1 && s <= MAX_CONE_DIM, "dimension out of range");
    let mut out = Vec::new();
    for i in 0..s {
        for j in 0..s {
            if i == j {
                continue;
            }
            let mut r = vec![<BigRational as Zero>::zero(); s];
            r[i] = BigRational::from_int(2);
            r[j] = BigRational::from_int(-1);
            out.push(r);
        }
    }
    out
}

/// The descent polyhedron of a power: all exponents reachable from `α` by
/// moves `-δ_k + δ_{k-1}` along Jordan-chain positions active in `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AAlphaSet {
    pub alpha: MultiIndex,
    /// Members in increasing monomial order; always contains `alpha`.
    pub members: Vec<MultiIndex>,
}

impl AAlphaSet {
    pub fn contains(&self, beta: &MultiIndex) -> bool {
        self.members.binary_search(beta).is_ok()
    }
}

/// Enumerate `A_α` by closure under the chain moves.  The set of active
/// positions is frozen from `α` itself: `k` qualifies when `α_k ≥ 1` and
/// `u_k` is not the first form of its monogenic block.
pub fn a_alpha_enumerate<F: Field>(alpha: &MultiIndex, sd: &SpectralData<F>) -> AAlphaSet {
    let s = alpha.dim();
    assert_eq!(s, sd.lambda.len(), "dimension mismatch");
    let active: Vec<usize> = (0..s).filter(|&k| alpha.0[k] >= 1 && sd.eps[k]).collect();
    let mut seen: BTreeSet<MultiIndex> = BTreeSet::new();
    let mut queue = vec![alpha.clone()];
    seen.insert(alpha.clone());
    while let Some(cur) = queue.pop() {
        for &k in &active {
            if cur.0[k] >= 1 {
                let mut next = cur.clone();
                next.0[k] -= 1;
                next.0[k - 1] += 1;
                if seen.insert(next.clone()) {
                    queue.push(next);
                }
            }
        }
    }
    AAlphaSet {
        alpha: alpha.clone(),
        members: seen.into_iter().collect(),
    }
}

/// Integer difference of exponent vectors as exact rationals.
fn diff_vec(a: &MultiIndex, b: &MultiIndex) -> Vec<BigRational> {
    a.0.iter()
        .zip(&b.0)
        .map(|(&x, &y)| BigRational::from_int(x as i64 - y as i64))
        .collect()
}

/// Check the refined support property of a coefficient table: whenever
/// `q_{α,β} ≠ 0`, some member `α′` of `A_α` satisfies `α′ - β ∈ Σ`.
/// Returns the offending `(α, β)` pairs (empty when the property holds).
pub fn refined_support_offenders<F: Field>(
    table: &ReducedTable<F>,
    sd: &SpectralData<F>,
) -> Vec<(MultiIndex, MultiIndex)> {
    let basis = table.basis();
    let mut offenders = Vec::new();
    for (i, alpha) in basis.iter().enumerate() {
        if table.q[i].is_empty() {
            continue;
        }
        let aset = a_alpha_enumerate(alpha, sd);
        for (j, c) in &table.q[i] {
            if c.is_zero() {
                continue;
            }
            let beta = &basis[*j];
            let ok = aset
                .members
                .iter()
                .any(|ap| sigma_contains(&diff_vec(ap, beta)));
            if !ok {
                offenders.push((alpha.clone(), beta.clone()));
            }
        }
    }
    offenders
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Analysis;
    use crate::operator::{build_reduced_table, DEFAULT_BASIS_CAP};
    use crate::process::ProcessSpec;
    use crate::scalar::Scalar;

    fn q(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    #[test]
    fn facets_and_rays_in_dimension_three() {
        let normals = sigma_facet_normals(3);
        assert_eq!(normals.len(), 6);
        let rays = sigma_extreme_rays(3);
        assert_eq!(rays.len(), 6);
        for r in &rays {
            assert!(sigma_contains(r), "ray {r:?} must lie in the cone");
            // extreme rays saturate at least one facet
            let tight = normals.iter().any(|nv| {
                let dot: BigRational = nv.iter().zip(r).map(|(a, b)| a * b).sum();
                Zero::is_zero(&dot)
            });
            assert!(tight, "ray {r:?} saturates no facet");
        }
        assert!(sigma_contains(&[q(1), q(0), q(0)]));
        assert!(!sigma_contains(&[q(-1), q(0), q(0)]));
        assert!(!sigma_contains(&[q(3), q(-2), q(0)]));
        assert!(sigma_contains(&[q(0), q(0), q(0)]));
    }

    #[test]
    fn dimension_one_cone_is_the_origin() {
        assert!(sigma_contains(&[q(0)]));
        assert!(!sigma_contains(&[q(1)]));
        assert!(!sigma_contains(&[q(-1)]));
        assert!(sigma_extreme_rays(1).is_empty());
    }

    fn jordan3() -> Analysis<BigRational> {
        let spec = ProcessSpec {
            dim: 3,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0), Scalar::from_int(0)],
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
            initial: vec![Scalar::from_int(1), Scalar::from_int(1), Scalar::from_int(1)],
        };
        Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap()
    }

    #[test]
    fn semisimple_powers_have_singleton_polyhedra() {
        let spec = ProcessSpec {
            dim: 2,
            increments: vec![
                vec![Scalar::from_int(1), Scalar::from_int(0)],
                vec![Scalar::from_ratio(1, 4), Scalar::from_ratio(3, 4)],
            ],
            forms: None,
            initial: vec![Scalar::from_int(1), Scalar::from_int(1)],
        };
        let an = Analysis::<BigRational>::exact(&spec, &[], 1e-9).unwrap();
        let aset = a_alpha_enumerate(&MultiIndex(vec![1, 2]), &an.sd);
        assert_eq!(aset.members, vec![MultiIndex(vec![1, 2])]);
    }

    #[test]
    fn chain_moves_generate_the_polyhedron() {
        let an = jordan3();
        assert_eq!(an.sd.eps, vec![false, false, true]);
        let aset = a_alpha_enumerate(&MultiIndex(vec![0, 0, 2]), &an.sd);
        assert_eq!(
            aset.members,
            vec![
                MultiIndex(vec![0, 2, 0]),
                MultiIndex(vec![0, 1, 1]),
                MultiIndex(vec![0, 0, 2]),
            ]
        );
        assert!(aset.contains(&MultiIndex(vec![0, 1, 1])));
        assert!(!aset.contains(&MultiIndex(vec![1, 0, 1])));
        // the bracket is constant across the polyhedron
        let z = an.bracket(&MultiIndex(vec![0, 0, 2]));
        for m in &aset.members {
            assert_eq!(an.bracket(m), z);
        }
    }

    #[test]
    fn coefficient_tables_satisfy_refined_support() {
        let an = jordan3();
        let table =
            build_reduced_table(&an, &MultiIndex(vec![0, 0, 3]), DEFAULT_BASIS_CAP).unwrap();
        assert!(refined_support_offenders(&table, &an.sd).is_empty());
    }
}
