//! Geometry of the support cone and the descent polyhedra, cross-checked
//! against an independent exact linear-programming feasibility oracle.

mod common;

use common::*;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use polya::cones::{
    a_alpha_enumerate, sigma_contains, sigma_extreme_rays, sigma_facet_normals,
};
use polya::scalar::Field;
use polya::upoly::MultiIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Exact Phase-I simplex with Bland's rule: decides whether `b` is a
/// nonnegative combination of the columns of `a` (all data rational).
fn nonneg_combination_exists(a: &[Vec<BigRational>], b: &[BigRational]) -> bool {
    let rows = b.len();
    let cols = a.first().map_or(0, Vec::len);
    let zero = BigRational::from_int(0);
    let one = BigRational::from_int(1);

    // tableau over [ray columns | artificial columns | rhs], rhs ≥ 0
    let width = cols + rows + 1;
    let mut tab: Vec<Vec<BigRational>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let flip = b[i].is_negative();
        let mut row = Vec::with_capacity(width);
        for j in 0..cols {
            let v = a[i][j].clone();
            row.push(if flip { -v } else { v });
        }
        for k in 0..rows {
            row.push(if k == i { one.clone() } else { zero.clone() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        tab.push(row);
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // reduced costs for "minimize the sum of artificials"
    let mut obj = vec![zero.clone(); width];
    for j in 0..width {
        let mut acc = zero.clone();
        for row in &tab {
            acc += &row[j];
        }
        let direct = if (cols..cols + rows).contains(&j) {
            one.clone()
        } else {
            zero.clone()
        };
        obj[j] = direct - acc;
    }

    loop {
        // Bland: entering column = lowest index with negative reduced cost
        let Some(enter) = (0..cols + rows).find(|&j| obj[j].is_negative()) else {
            break;
        };
        // ratio test; ties broken by lowest basis index (Bland)
        let mut leave: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for i in 0..rows {
            if tab[i][enter].is_positive() {
                let ratio = &tab[i][width - 1] / &tab[i][enter];
                let better = match &best {
                    None => true,
                    Some(r) => {
                        ratio < *r || (ratio == *r && basis[i] < basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let leave = leave.expect("phase-I objective is bounded");
        let pivot = tab[leave][enter].clone();
        for v in tab[leave].iter_mut() {
            *v /= &pivot;
        }
        for i in 0..rows {
            if i != leave && !Zero::is_zero(&tab[i][enter]) {
                let f = tab[i][enter].clone();
                for j in 0..width {
                    let d = &f * &tab[leave][j];
                    tab[i][j] -= d;
                }
            }
        }
        if !Zero::is_zero(&obj[enter]) {
            let f = obj[enter].clone();
            for j in 0..width {
                let d = &f * &tab[leave][j];
                obj[j] -= d;
            }
        }
        basis[leave] = enter;
    }

    // feasible iff every artificial contributes zero to the optimum
    let mut value = zero.clone();
    for i in 0..rows {
        if basis[i] >= cols {
            value += &tab[i][width - 1];
        }
    }
    Zero::is_zero(&value)
}

/// Columns of the generator matrix for the cone in dimension `s`.
fn ray_columns(s: usize) -> Vec<Vec<BigRational>> {
    let rays = sigma_extreme_rays(s);
    (0..s)
        .map(|i| rays.iter().map(|r| r[i].clone()).collect())
        .collect()
}

#[test]
fn oracle_agrees_with_itself_on_hand_points() {
    let cols = ray_columns(2);
    // 2e1 - e2 is a generator; e1 + e2 is inside; -e1 is outside
    assert!(nonneg_combination_exists(&cols, &[q(2, 1), q(-1, 1)]));
    assert!(nonneg_combination_exists(&cols, &[q(1, 1), q(1, 1)]));
    assert!(!nonneg_combination_exists(&cols, &[q(-1, 1), q(0, 1)]));
    assert!(nonneg_combination_exists(&cols, &[q(0, 1), q(0, 1)]));
}

#[test]
fn generators_pass_the_face_test_in_all_dimensions() {
    for s in 2..=4 {
        for ray in sigma_extreme_rays(s) {
            assert!(
                sigma_contains(&ray),
                "generator {ray:?} rejected in dimension {s}"
            );
        }
        assert_eq!(
            sigma_facet_normals(s).len(),
            (1usize << s) - 2,
            "facet count in dimension {s}"
        );
    }
}

#[test]
fn face_test_matches_the_feasibility_oracle_on_random_points() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for s in 2..=3 {
        let cols = ray_columns(s);
        let mut inside = 0usize;
        for trial in 0..500 {
            let x: Vec<BigRational> = if trial % 3 == 0 {
                // nonnegative combination of generators: a known member
                let rays = sigma_extreme_rays(s);
                let mut acc = vec![q(0, 1); s];
                for r in &rays {
                    let c = q(rng.gen_range(0..5), rng.gen_range(1..4));
                    for i in 0..s {
                        acc[i] += &c * &r[i];
                    }
                }
                acc
            } else {
                (0..s)
                    .map(|_| q(rng.gen_range(-6..=6), rng.gen_range(1..=6)))
                    .collect()
            };
            let by_faces = sigma_contains(&x);
            let by_generators = nonneg_combination_exists(&cols, &x);
            assert_eq!(
                by_faces, by_generators,
                "disagreement at {x:?} in dimension {s}"
            );
            if by_faces {
                inside += 1;
            }
        }
        assert!(
            inside > 100 && inside < 450,
            "sample is degenerate in dimension {s}: {inside} inside"
        );
    }
}

#[test]
fn one_dimensional_cone_degenerates_to_the_origin() {
    assert!(sigma_contains(&[q(0, 1)]));
    assert!(!sigma_contains(&[q(1, 2)]));
    assert!(!sigma_contains(&[q(-1, 2)]));
}

#[test]
fn descent_sets_are_singletons_without_chains() {
    // fully diagonalizable fixtures: no chain moves are available
    for (name, an) in [
        ("triangular-3/4", exact(&triangular(3, 4))),
        ("two-three-tree", exact(&two_three_tree())),
        ("general2", exact(&general2((1, 3), (1, 3)))),
    ] {
        assert!(an.sd.eps.iter().all(|&e| !e), "{name} must have no chains");
        for alpha in [
            MultiIndex(vec![0, 2]),
            MultiIndex(vec![1, 1]),
            MultiIndex(vec![3, 1]),
        ] {
            let aset = a_alpha_enumerate(&alpha, &an.sd);
            assert_eq!(aset.members, vec![alpha.clone()], "{name}: {alpha}");
        }
    }
}

#[test]
fn descent_moves_preserve_the_eigenvalue_combination() {
    for (name, an) in [("jordan3", exact(&jordan3())), ("jordan4", exact(&jordan4()))] {
        let s = an.dim();
        let mut idx = vec![0u32; s];
        idx[s - 1] = 2;
        idx[s - 2] = 1;
        let alpha = MultiIndex(idx);
        let aset = a_alpha_enumerate(&alpha, &an.sd);
        assert!(
            aset.members.len() > 1,
            "{name}: chain moves must produce new exponents"
        );
        assert!(aset.contains(&alpha), "{name}: the set contains its root");
        let z = an.bracket(&alpha);
        for m in &aset.members {
            assert_eq!(
                an.bracket(m),
                z,
                "{name}: member {m} changed the eigenvalue combination"
            );
            assert_eq!(m.degree(), alpha.degree(), "{name}: degree must be constant");
        }
    }
}

#[test]
fn descent_set_size_matches_the_chain_combinatorics() {
    // moving p units down a single free position yields p+1 exponents
    let an = exact(&jordan4());
    for p in 1..=3u32 {
        let mut idx = vec![0u32; 4];
        idx[2] = p;
        let aset = a_alpha_enumerate(&MultiIndex(idx), &an.sd);
        assert_eq!(aset.members.len(), (p + 1) as usize, "single chain, power {p}");
    }
    // two stacked free positions: (0,0,1,1) reaches every redistribution
    // of degree 2 over the chain that the moves allow
    let aset = a_alpha_enumerate(&MultiIndex(vec![0, 0, 1, 1]), &an.sd);
    assert_eq!(
        aset.members,
        vec![
            MultiIndex(vec![0, 2, 0, 0]),
            MultiIndex(vec![0, 1, 1, 0]),
            MultiIndex(vec![0, 0, 2, 0]),
            MultiIndex(vec![0, 1, 0, 1]),
            MultiIndex(vec![0, 0, 1, 1]),
        ]
    );
}
