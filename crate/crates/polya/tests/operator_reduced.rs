//! Structural properties of the reduced polynomials `Q_α` and their
//! coefficient tables, checked exhaustively over all powers of degree ≤ 4
//! on two- and three-color exact fixtures.

mod common;

use common::*;
use num_rational::BigRational;
use polya::analysis::Analysis;
use polya::cones::refined_support_offenders;
use polya::operator::{build_reduced_table, phi_apply, ReducedTable, DEFAULT_BASIS_CAP};
use polya::scalar::Field;
use polya::upoly::{MultiIndex, UPolynomial};

/// Anchor whose initial segment is exactly all powers of degree ≤ `d`.
fn full_degree_anchor(dim: usize, d: u32) -> MultiIndex {
    let mut idx = vec![0u32; dim];
    idx[dim - 1] = d;
    MultiIndex(idx)
}

fn degree4_table(an: &Analysis<BigRational>) -> ReducedTable<BigRational> {
    build_reduced_table(an, &full_degree_anchor(an.dim(), 4), DEFAULT_BASIS_CAP)
        .expect("table on the degree-4 segment")
}

fn suite_fixtures() -> Vec<(&'static str, Analysis<BigRational>)> {
    vec![
        ("triangular-3/4", exact(&triangular(3, 4))),
        ("two-three-tree", exact(&two_three_tree())),
        ("jordan3", exact(&jordan3())),
        ("general2-1/4-1/5", exact(&general2((1, 4), (1, 5)))),
    ]
}

/// `(Φ - z)f`, exact.
fn shift_apply(
    an: &Analysis<BigRational>,
    f: &UPolynomial<BigRational>,
    z: &BigRational,
) -> UPolynomial<BigRational> {
    phi_apply(an, f).expect("operator application").sub(&f.scale(z))
}

#[test]
fn constant_and_linear_reductions_are_the_monomials_themselves() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        let s = an.dim();
        let one = table
            .q_poly(&MultiIndex::zero(s))
            .expect("constant row present");
        assert_eq!(
            one,
            &UPolynomial::one(s),
            "{name}: the degree-0 reduction must be the constant 1"
        );
        for k in 0..s {
            let qk = table
                .q_poly(&MultiIndex::delta(s, k))
                .expect("linear row present");
            assert_eq!(
                qk,
                &UPolynomial::variable(s, k),
                "{name}: the reduction of a single form must be that form"
            );
        }
    }
}

#[test]
fn reduced_family_is_unitriangular_hence_a_basis_of_every_segment() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        for (i, beta) in table.basis().iter().enumerate() {
            let (lead, coeff) = table.q_polys[i].leading().expect("nonzero row");
            assert_eq!(lead, beta, "{name}: row {beta} must lead with its own power");
            assert_eq!(
                coeff,
                &BigRational::from_int(1),
                "{name}: leading coefficient of row {beta} must be 1"
            );
            for (term, _) in table.q_polys[i].iter() {
                assert!(term <= beta, "{name}: row {beta} contains a higher term {term}");
            }
        }
    }
}

#[test]
fn equal_bracket_rows_span_the_generalized_eigenspace() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        let n = table.basis().len();
        // positions grouped by their eigenvalue combination
        let mut classes: Vec<(BigRational, Vec<usize>)> = Vec::new();
        for i in 0..n {
            let z = table.phi.diag[i].clone();
            match classes.iter_mut().find(|(w, _)| *w == z) {
                Some((_, v)) => v.push(i),
                None => classes.push((z, vec![i])),
            }
        }
        // the class sizes exhaust the segment: together with unitriangularity
        // this makes each class a basis of its generalized eigenspace
        let total: usize = classes.iter().map(|(_, v)| v.len()).sum();
        assert_eq!(total, n, "{name}: classes must partition the segment");
        for (z, members) in &classes {
            let m = members.len();
            for &i in members {
                let mut g = table.q_polys[i].clone();
                for _ in 0..m {
                    if g.is_zero() {
                        break;
                    }
                    g = shift_apply(&an, &g, z);
                }
                assert!(
                    g.is_zero(),
                    "{name}: row {} escapes its generalized eigenspace for {z}",
                    table.basis()[i]
                );
            }
        }
        // negative control: a row is never annihilated by a different class
        let (z0, c0) = &classes[0];
        if let Some((z1, _)) = classes.iter().find(|(w, _)| w != z0) {
            let mut g = table.q_polys[c0[0]].clone();
            for _ in 0..n {
                g = shift_apply(&an, &g, z1);
            }
            assert!(
                !g.is_zero(),
                "{name}: a row was annihilated by a foreign eigenvalue"
            );
        }
    }
}

#[test]
fn monomials_reconstruct_from_reductions_with_off_bracket_coefficients() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        for (i, beta) in table.basis().iter().enumerate() {
            let mut rhs = table.q_polys[i].clone();
            for (j, c) in &table.q[i] {
                assert!(*j < i, "{name}: expansion of {beta} must use earlier rows");
                assert_ne!(
                    table.phi.diag[*j], table.phi.diag[i],
                    "{name}: expansion coefficient of {beta} at {} sits on an equal \
                     eigenvalue combination",
                    table.basis()[*j]
                );
                rhs.add_assign(&table.q_polys[*j].scale(c));
            }
            let mono = UPolynomial::monomial(beta.clone(), BigRational::from_int(1));
            assert_eq!(
                rhs, mono,
                "{name}: reconstruction of the monomial {beta} failed"
            );
        }
    }
}

#[test]
fn operator_action_stays_inside_the_equal_bracket_span() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        for (i, beta) in table.basis().iter().enumerate() {
            let z = &table.phi.diag[i];
            let lhs = shift_apply(&an, &table.q_polys[i], z);
            let mut rhs = UPolynomial::zero(an.dim());
            for (j, c) in &table.p[i] {
                assert!(*j < i, "{name}: image of {beta} must use earlier rows");
                assert_eq!(
                    table.phi.diag[*j], table.phi.diag[i],
                    "{name}: image of {beta} leaks onto a different eigenvalue \
                     combination at {}",
                    table.basis()[*j]
                );
                rhs.add_assign(&table.q_polys[*j].scale(c));
            }
            assert_eq!(
                lhs, rhs,
                "{name}: shifted operator image of row {beta} must match its \
                 recorded expansion"
            );
        }
    }
}

#[test]
fn coefficient_support_obeys_the_cone_constraint() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        let offenders = refined_support_offenders(&table, &an.sd);
        assert!(
            offenders.is_empty(),
            "{name}: unexpected coefficient support at {offenders:?}"
        );
    }
}

#[test]
fn recorded_nilpotence_indices_are_sharp() {
    for (name, an) in suite_fixtures() {
        let table = degree4_table(&an);
        for (i, beta) in table.basis().iter().enumerate() {
            let nu = table.nilpotence_index(i);
            let z = &table.phi.diag[i];
            let mut g = table.q_polys[i].clone();
            for _ in 0..nu {
                g = shift_apply(&an, &g, z);
            }
            assert!(
                !g.is_zero(),
                "{name}: row {beta} vanished before its recorded index {nu}"
            );
            g = shift_apply(&an, &g, z);
            assert!(
                g.is_zero(),
                "{name}: row {beta} survived past its recorded index {nu}"
            );
        }
    }
}

#[test]
fn nilpotence_equals_the_depth_weighted_exponent_sum_on_chain_powers() {
    // one defective eigenvalue whose forms make a chain: the index of a
    // power supported inside the chain is Σ (depth of form) · exponent
    let an3 = exact(&jordan3());
    let t3 = degree4_table(&an3);
    for (i, beta) in t3.basis().iter().enumerate() {
        let inside_chain = beta.support().iter().all(|&k| k == 1 || k == 2);
        let pure_root = beta.support().iter().all(|&k| k == 0);
        if inside_chain {
            assert_eq!(
                t3.nilpotence_index(i),
                beta.0[2],
                "chain power {beta}: index must weight the depth-1 form once"
            );
        } else if pure_root {
            assert_eq!(t3.nilpotence_index(i), 0, "power {beta} of the drift form");
        }
    }

    let an4 = exact(&jordan4());
    let t4 = build_reduced_table(&an4, &full_degree_anchor(4, 3), DEFAULT_BASIS_CAP)
        .expect("degree-3 table in four colors");
    for (i, beta) in t4.basis().iter().enumerate() {
        let inside_chain = beta.support().iter().all(|&k| (1..=3).contains(&k));
        if inside_chain {
            assert_eq!(
                t4.nilpotence_index(i),
                beta.0[2] + 2 * beta.0[3],
                "chain power {beta}: index must weight forms by their depth"
            );
        }
    }
}
