//! Property tests across modules, checked against small independent oracles.

use std::collections::HashSet;

use ghostcheck_core::exact::{LaurentPoly, Rational};
use ghostcheck_core::factory::{
    dim_stratum, expected_dim_moduli, random_instance, random_invertible, random_stratum,
};
use ghostcheck_core::localmodel::{
    expand_ghost, ghost_poly, random_admissible_ghost_seeded, verify_residue_theorem,
};
use ghostcheck_core::obstruction::{
    corollary_check, kernel_to_witness_d, theorem_check, AttachmentColumn, CorollaryVerdict,
    ObstructionProblem,
};
use ghostcheck_core::report::{ComponentInput, LocalModelSection, NamedComponent, ProblemFile};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook Gaussian elimination over `BigRational`, rows as given.
fn oracle_rank(rows: Vec<Vec<BigRational>>) -> usize {
    let mut a = rows;
    let width = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let f = &row[col] / &pivot[col];
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn big(x: &Rational) -> BigRational {
    x.as_big().clone()
}

fn oracle_subset_holds(p: &ObstructionProblem, d: &[usize]) -> bool {
    let cols = p.columns();
    let v = d
        .iter()
        .map(|&i| cols[i].deriv.iter().map(big).collect())
        .collect();
    let e = d
        .iter()
        .map(|&i| cols[i].delta.iter().map(big).collect())
        .collect();
    oracle_rank(v) + oracle_rank(e) <= d.len()
}

/// Kronecker columns built directly from the definition.
fn oracle_obstruction_rank(p: &ObstructionProblem) -> usize {
    let rows = p
        .columns()
        .iter()
        .map(|c| {
            c.delta
                .iter()
                .flat_map(|e| c.deriv.iter().map(move |v| big(e) * big(v)))
                .collect()
        })
        .collect();
    oracle_rank(rows)
}

fn problem_strategy(max_n: usize) -> impl Strategy<Value = ObstructionProblem> {
    (any::<u64>(), 1usize..=4, 1usize..=4, 1..=max_n, 1i64..=3)
        .prop_map(|(seed, g, n_amb, n, bound)| random_instance(seed, g, n_amb, n, bound))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn theorem_matches_oracle_rank(p in problem_strategy(7)) {
        let th = theorem_check(&p);
        prop_assert_eq!(th.rank, oracle_obstruction_rank(&p));
        prop_assert!(th.rank <= p.len().min(p.genus() * p.ambient_dim()));
        prop_assert_eq!(th.obstructed(), th.rank == p.len());
    }

    #[test]
    fn subset_search_matches_enumeration(p in problem_strategy(6)) {
        let n = p.len();
        let mut passing: Vec<Vec<usize>> = (1u32..(1 << n))
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|d| oracle_subset_holds(&p, d))
            .collect();
        passing.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let got = corollary_check(&p).unwrap();
        match passing.first() {
            None => prop_assert_eq!(got, CorollaryVerdict::NotEventuallySmoothable),
            Some(d) => prop_assert_eq!(got, CorollaryVerdict::Inconclusive { witness_d: d.clone() }),
        }
    }

    #[test]
    fn soundness_and_witness_derivation(p in problem_strategy(8)) {
        let th = theorem_check(&p);
        let cor = corollary_check(&p).unwrap();
        if cor.obstructed() {
            prop_assert!(th.obstructed());
        }
        if let Some(w) = th.kernel_witness() {
            let d = kernel_to_witness_d(&p, w).unwrap();
            prop_assert!(oracle_subset_holds(&p, &d));
            prop_assert!(!cor.obstructed());
        }
    }

    #[test]
    fn rescaling_changes_nothing(p in problem_strategy(7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scale = || loop {
            let k: i64 = rng.gen_range(-4..=4);
            if k != 0 {
                break Rational::new(k, rng.gen_range(1i64..=3)).unwrap();
            }
        };
        let cols: Vec<AttachmentColumn> = p.columns().iter().map(|c| {
            let (s, t) = (scale(), scale());
            AttachmentColumn {
                delta: c.delta.iter().map(|x| x * &s).collect(),
                deriv: c.deriv.iter().map(|x| x * &t).collect(),
            }
        }).collect();
        let q = ObstructionProblem::new(p.genus(), p.ambient_dim(), cols).unwrap();
        let (a, b) = (theorem_check(&p), theorem_check(&q));
        prop_assert_eq!(a.rank, b.rank);
        if let (Some(wa), Some(wb)) = (a.kernel_witness(), b.kernel_witness()) {
            prop_assert_eq!(kernel_to_witness_d(&p, wa).unwrap(), kernel_to_witness_d(&q, wb).unwrap());
        }
        prop_assert_eq!(corollary_check(&p).unwrap(), corollary_check(&q).unwrap());
    }

    #[test]
    fn change_of_basis_changes_nothing(p in problem_strategy(7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_invertible(&mut rng, p.genus(), 3);
        let b = random_invertible(&mut rng, p.ambient_dim(), 3);
        let cols = p.columns().iter().map(|c| AttachmentColumn {
            delta: a.mul_vec(&c.delta).unwrap(),
            deriv: b.mul_vec(&c.deriv).unwrap(),
        }).collect();
        let q = ObstructionProblem::new(p.genus(), p.ambient_dim(), cols).unwrap();
        prop_assert_eq!(theorem_check(&p).obstructed(), theorem_check(&q).obstructed());
        prop_assert_eq!(corollary_check(&p).unwrap(), corollary_check(&q).unwrap());
    }

    #[test]
    fn stratum_identity(seed in any::<u64>()) {
        let s = random_stratum(seed);
        let want = expected_dim_moduli(s.ambient_dim, s.g, s.d) + s.ambient_dim * s.h - s.n;
        prop_assert_eq!(dim_stratum(&s).unwrap(), want);
    }
}

fn restrictions(
    e: &ghostcheck_core::localmodel::GhostExpansion,
    l: u32,
) -> Vec<(u32, Vec<LaurentPoly>)> {
    e.level(l)
        .unwrap()
        .components
        .iter()
        .map(|c| (c.j, c.restriction.clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn multiplying_by_t_shifts_levels(seed in any::<u64>(), n in 1usize..=3, m in 2u32..=5) {
        let g = random_admissible_ghost_seeded(seed, n);
        let t = ghost_poly("t").unwrap();
        let tg: Vec<LaurentPoly> = g.iter().map(|p| p * &t).collect();
        let (e, f) = (expand_ghost(&g, m).unwrap(), expand_ghost(&tg, m).unwrap());
        for l in 1..m {
            // components of level l + 1 are the components of level l beyond E_l
            let shifted = restrictions(&f, l + 1);
            let base: Vec<_> = restrictions(&e, l).into_iter().filter(|(j, _)| *j > l).collect();
            prop_assert_eq!(shifted, base);
            prop_assert_eq!(&f.constants[l as usize], &e.constants[l as usize - 1]);
        }
    }

    #[test]
    fn expansion_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..=3, m in 1u32..=5, c in -6i64..=6) {
        let (g1, g2) = (random_admissible_ghost_seeded(s1, n), random_admissible_ghost_seeded(s2, n));
        let c = Rational::from(c);
        let combo: Vec<LaurentPoly> = g1.iter().zip(&g2).map(|(a, b)| &a.scale(&c) + b).collect();
        let (e1, e2, e) = (expand_ghost(&g1, m).unwrap(), expand_ghost(&g2, m).unwrap(), expand_ghost(&combo, m).unwrap());
        for l in 1..=m {
            let (r1, r2, r) = (restrictions(&e1, l), restrictions(&e2, l), restrictions(&e, l));
            for ((a, b), c_) in r1.iter().zip(&r2).zip(&r) {
                for ((pa, pb), pc) in a.1.iter().zip(&b.1).zip(&c_.1) {
                    prop_assert_eq!(&(&pa.scale(&c) + pb), pc);
                }
            }
        }
        let lin: Vec<Vec<Rational>> = e1.residues().iter().zip(e2.residues()).map(|(a, b)| {
            a.iter().zip(&b).map(|(x, y)| x * &c + y).collect()
        }).collect();
        prop_assert_eq!(lin, e.residues());
        prop_assert!(verify_residue_theorem(&combo, m).unwrap().passed());
    }
}

fn random_file(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=3);
    let components = (0..count)
        .map(|i| {
            let p = random_instance(
                rng.gen(),
                rng.gen_range(1..=4),
                rng.gen_range(1..=4),
                rng.gen_range(1..=6),
                9,
            );
            // exercise non-integer entries too
            let cols = p
                .columns()
                .iter()
                .map(|c| AttachmentColumn {
                    delta: c
                        .delta
                        .iter()
                        .map(|x| x / &Rational::from(rng.gen_range(1i64..=7)))
                        .collect(),
                    deriv: c.deriv.clone(),
                })
                .collect();
            NamedComponent {
                name: (i % 2 == 1).then(|| format!("ghost {i}")),
                input: ComponentInput::Raw(
                    ObstructionProblem::new(p.genus(), p.ambient_dim(), cols).unwrap(),
                ),
            }
        })
        .collect();
    let localmodel = rng.gen_bool(0.5).then(|| LocalModelSection {
        m: rng.gen_range(1..=5),
        g: random_admissible_ghost_seeded(rng.gen(), rng.gen_range(1..=3)),
    });
    ProblemFile {
        version: 1,
        components,
        localmodel,
    }
}

#[test]
fn problem_files_round_trip() {
    let mut seen = HashSet::new();
    for seed in 0..200 {
        let f = random_file(seed);
        let json = f.to_json();
        let back = ProblemFile::parse(&json).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{json}"));
        assert_eq!(back, f, "seed {seed}");
        assert_eq!(back.to_json(), json);
        seen.insert(json);
    }
    assert_eq!(seen.len(), 200);
}

#[test]
fn oracle_sanity() {
    let r = |v: &[i64]| {
        v.iter()
            .map(|&x| BigRational::from_integer(BigInt::from(x)))
            .collect::<Vec<_>>()
    };
    assert_eq!(oracle_rank(vec![r(&[1, 2]), r(&[2, 4])]), 1);
    assert_eq!(oracle_rank(vec![r(&[0, 1]), r(&[1, 0]), r(&[1, 1])]), 2);
}

/// Germs `G_i = x * v_i` at each attachment point reproduce the derivative
/// vectors through residues, so the leading-term values rebuild the problem.
#[test]
fn sigma_values_rebuild_the_obstruction_problem() {
    use ghostcheck_core::factory::{build_fan_instance, ModelKind};
    use ghostcheck_core::localmodel::{sigma_values, PhiConvention};
    let inst = build_fan_instance(3, 2, ModelKind::NodalRational).unwrap();
    let prob = inst.problem().unwrap();
    let x = ghost_poly("x").unwrap();
    for m in 1..=4 {
        let conv = PhiConvention::new(m).unwrap();
        let residues: Vec<Vec<Rational>> = prob
            .columns()
            .iter()
            .map(|c| {
                let g: Vec<LaurentPoly> = c.deriv.iter().map(|v| x.scale(v)).collect();
                expand_ghost(&g, m).unwrap().residues().pop().unwrap()
            })
            .collect();
        let sigma = sigma_values(m, &residues, &conv).unwrap();
        let cols = prob
            .columns()
            .iter()
            .zip(&sigma)
            .map(|(c, s)| AttachmentColumn {
                delta: c.delta.iter().map(|e| e * &s.tangent_coeff).collect(),
                deriv: s.deriv.clone(),
            })
            .collect();
        let rebuilt = ObstructionProblem::new(prob.genus(), prob.ambient_dim(), cols).unwrap();
        assert_eq!(rebuilt, prob);
        assert_eq!(theorem_check(&rebuilt), theorem_check(&prob));
    }
}
