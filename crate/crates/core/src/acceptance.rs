//! The acceptance suite: nine end-to-end criteria with time limits.
//!
//! Every engine the criteria exercise is reached through [`Engines`], so a
//! deliberately broken implementation can be substituted to confirm that the
//! corresponding criterion notices.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{AttachmentPoint, GhostCurveModel, NodalRationalModel};
use crate::exact::{LaurentPoly, QMatrix, Rational};
use crate::factory::{
    build_fan_instance, dim_moduli, dim_stratum, expected_dim_moduli, random_instance,
    random_invertible, random_stratum, FactoryError, ModelKind, StratumSpec,
};
use crate::localmodel::{
    expand_ghost, random_admissible_ghost, verify_chart_relations, verify_residue_theorem_with,
    GhostExpansion, LocalModelError, PhiConvention, MAX_CHART_M,
};
use crate::obstruction::{
    corollary_check, kernel_to_witness_d, subset_ranks, theorem_check, AttachmentColumn,
    CorollaryVerdict, ObstructionError, ObstructionProblem, TheoremCheck,
};

type ExpandFn = fn(&[LaurentPoly], u32) -> Result<GhostExpansion, LocalModelError>;

/// The engines under test.
#[derive(Clone, Copy)]
pub struct Engines {
    pub theorem: fn(&ObstructionProblem) -> TheoremCheck,
    pub corollary: fn(&ObstructionProblem) -> Result<CorollaryVerdict, ObstructionError>,
    pub expand: ExpandFn,
    pub dim_stratum: fn(&StratumSpec) -> Result<i64, FactoryError>,
}

impl Default for Engines {
    fn default() -> Self {
        Engines {
            theorem: theorem_check,
            corollary: corollary_check,
            expand: expand_ghost,
            dim_stratum,
        }
    }
}

impl Engines {
    /// Real engines except the expansion, whose residues have their sign flipped.
    pub fn with_flipped_residues() -> Self {
        fn flipped(g: &[LaurentPoly], m: u32) -> Result<GhostExpansion, LocalModelError> {
            let mut e = expand_ghost(g, m)?;
            for level in &mut e.levels {
                for c in &mut level.components {
                    for r in &mut c.residue {
                        *r = -r.clone();
                    }
                }
            }
            Ok(e)
        }
        Engines {
            expand: flipped,
            ..Engines::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub correct: bool,
    pub elapsed: Duration,
    pub limit: Duration,
    pub detail: String,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.correct && self.elapsed <= self.limit
    }

    /// One line without timings, stable across runs.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("[{status}] {}. {}: {}", self.id, self.name, self.detail);
        if self.correct && !self.passed() {
            s.push_str(&format!(
                " (exceeded the {} s limit)",
                self.limit.as_secs_f64()
            ));
        }
        s
    }

    pub fn line_with_time(&self) -> String {
        format!(
            "{} [{:.3} s / {} s]",
            self.line(),
            self.elapsed.as_secs_f64(),
            self.limit.as_secs_f64()
        )
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

pub const CRITERIA: [(u8, &str, u64); 9] = [
    (
        1,
        "fan of lines, N = 3, h = 4: theorem fires, subset test does not",
        1,
    ),
    (
        2,
        "fan of lines over N in 2..4, h in 2..5, both curve models",
        5,
    ),
    (
        3,
        "support of a kernel vector meets the subset inequality",
        10,
    ),
    (4, "subset test firing implies theorem firing", 30),
    (5, "residue formula on the resolved chain", 10),
    (6, "chart relations of the resolved surface", 1),
    (7, "dimension formulas", 1),
    (8, "invariance under rescaling and change of basis", 30),
    (
        9,
        "single attachment point: fires iff the derivative is nonzero",
        1,
    ),
];

pub fn run_criterion(id: u8, engines: &Engines) -> CriterionResult {
    let (_, name, secs) = CRITERIA
        .iter()
        .copied()
        .find(|c| c.0 == id)
        .unwrap_or_else(|| panic!("no criterion {id}"));
    let start = Instant::now();
    let outcome = match id {
        1 => fan_n3_h4(engines),
        2 => fan_grid(engines),
        3 => kernel_support(engines),
        4 => soundness(engines),
        5 => residues(engines),
        6 => charts(),
        7 => dimensions(engines),
        8 => invariance(engines),
        9 => single_point(engines),
        _ => unreachable!(),
    };
    let elapsed = start.elapsed();
    let (correct, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CriterionResult {
        id,
        name,
        correct,
        elapsed,
        limit: Duration::from_secs(secs),
        detail,
    }
}

pub fn run_all(engines: &Engines) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.0, engines))
        .collect()
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fan_n3_h4(e: &Engines) -> Outcome {
    let inst = build_fan_instance(3, 4, ModelKind::Hyperelliptic).map_err(|x| x.to_string())?;
    let prob = inst.problem().map_err(|x| x.to_string())?;
    let m = prob.obstruction_matrix();
    ensure(m.rows() == 12 && m.cols() == 12, || {
        format!("matrix is {}x{}", m.rows(), m.cols())
    })?;
    let th = (e.theorem)(&prob);
    ensure(th.rank == 12 && th.obstructed(), || {
        format!("rank {} of 12", th.rank)
    })?;
    let cor = (e.corollary)(&prob).map_err(|x| x.to_string())?;
    let Some(d) = cor.witness() else {
        return Err("subset test fired".into());
    };
    let r = subset_ranks(&prob, d).map_err(|x| x.to_string())?;
    ensure(r.holds(), || {
        format!("returned D = {d:?} fails the inequality")
    })?;
    let all: Vec<usize> = (0..12).collect();
    let full = subset_ranks(&prob, &all).map_err(|x| x.to_string())?;
    ensure(
        full.holds() && full.deriv_rank == 3 && full.delta_rank == 4,
        || {
            format!(
                "full set has ranks {} + {}",
                full.deriv_rank, full.delta_rank
            )
        },
    )?;
    Ok(format!(
        "rank 12/12; minimal D has {} points; all 12 points give 3 + 4 <= 12",
        d.len()
    ))
}

fn fan_grid(e: &Engines) -> Outcome {
    let mut count = 0;
    for kind in [ModelKind::Hyperelliptic, ModelKind::NodalRational] {
        for n in 2..=4 {
            for h in 2..=5 {
                let prob = build_fan_instance(n, h, kind)
                    .and_then(|i| Ok(i.problem()?))
                    .map_err(|x| format!("{} N={n} h={h}: {x}", kind.name()))?;
                let th = (e.theorem)(&prob);
                ensure(th.obstructed(), || {
                    format!("{} N={n} h={h}: rank {} of {}", kind.name(), th.rank, n * h)
                })?;
                let cor = (e.corollary)(&prob).map_err(|x| x.to_string())?;
                let Some(d) = cor.witness() else {
                    return Err(format!("{} N={n} h={h}: subset test fired", kind.name()));
                };
                let ok = subset_ranks(&prob, d).map_err(|x| x.to_string())?.holds();
                ensure(ok, || {
                    format!("{} N={n} h={h}: D fails the inequality", kind.name())
                })?;
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} instances: theorem fires, subset test inconclusive"
    ))
}

/// Rank of selected columns, computed with plain rational elimination.
fn oracle_rank(cols: &[&Vec<Rational>], dim: usize) -> usize {
    let owned: Vec<Vec<Rational>> = cols.iter().map(|c| (*c).clone()).collect();
    QMatrix::from_columns(dim, &owned)
        .expect("consistent lengths")
        .rank_rational()
}

/// All passing subsets as bitmasks, ordered by (size, lexicographic).
fn oracle_passing(prob: &ObstructionProblem) -> Vec<Vec<usize>> {
    let n = prob.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let d: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let cols = prob.columns();
        let v: Vec<&Vec<Rational>> = d.iter().map(|&i| &cols[i].deriv).collect();
        let ev: Vec<&Vec<Rational>> = d.iter().map(|&i| &cols[i].delta).collect();
        if oracle_rank(&v, prob.ambient_dim()) + oracle_rank(&ev, prob.genus()) <= d.len() {
            out.push(d);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Seeded instances with a nontrivial kernel, `g, N <= 4`, `n <= 6`.
pub fn kernel_instances(count: usize, seed: u64) -> Vec<ObstructionProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = rng.gen_range(1..=4);
        let n_amb = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=6);
        let bound = rng.gen_range(1..=3);
        let p = random_instance(rng.gen(), g, n_amb, n, bound);
        if p.obstruction_matrix().rank() < n {
            out.push(p);
        }
    }
    out
}

fn kernel_support(e: &Engines) -> Outcome {
    let instances = kernel_instances(1000, 0xacce_0003);
    for (k, prob) in instances.iter().enumerate() {
        let th = (e.theorem)(prob);
        let Some(w) = th.kernel_witness() else {
            return Err(format!(
                "instance {k}: no kernel witness for a rank-deficient matrix"
            ));
        };
        let d = kernel_to_witness_d(prob, w).map_err(|x| format!("instance {k}: {x}"))?;
        let passing = oracle_passing(prob);
        ensure(passing.contains(&d), || {
            format!("instance {k}: support {d:?} fails the inequality")
        })?;
        let cor = (e.corollary)(prob).map_err(|x| x.to_string())?;
        ensure(cor.witness() == passing.first().map(Vec::as_slice), || {
            format!("instance {k}: subset search disagrees with enumeration")
        })?;
    }
    Ok(format!(
        "{} instances, every kernel support passes",
        instances.len()
    ))
}

fn soundness(e: &Engines) -> Outcome {
    let mut instances = kernel_instances(1000, 0xacce_0003);
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    for _ in 0..200 {
        let g = rng.gen_range(1..=4);
        let n_amb = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=12);
        instances.push(random_instance(rng.gen(), g, n_amb, n, 3));
    }
    let mut fired = 0;
    for (k, prob) in instances.iter().enumerate() {
        let cor = (e.corollary)(prob).map_err(|x| x.to_string())?;
        if cor.obstructed() {
            fired += 1;
            ensure((e.theorem)(prob).obstructed(), || {
                format!("instance {k}: subset test fires but theorem does not")
            })?;
        }
    }
    Ok(format!(
        "{} instances, {fired} with the subset test firing, all confirmed",
        instances.len()
    ))
}

fn residues(e: &Engines) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0005);
    let mut count = 0;
    for m in 1..=5 {
        for _ in 0..20 {
            let n = rng.gen_range(1..=3);
            let g = random_admissible_ghost(&mut rng, n);
            let r =
                verify_residue_theorem_with(&g, m, e.expand).map_err(|x| format!("m={m}: {x}"))?;
            if !r.failures.is_empty() {
                let shown: Vec<String> = g.iter().map(ToString::to_string).collect();
                return Err(format!(
                    "m={m}, G=({}): {}",
                    shown.join(", "),
                    r.failures[0]
                ));
            }
            count += 1;
        }
    }
    Ok(format!(
        "{count} germs: simple poles only at p_l, residues equal the effective derivative"
    ))
}

fn charts() -> Outcome {
    let mut checks = 0;
    for m in 1..=MAX_CHART_M {
        for r in [
            verify_chart_relations(m).map_err(|x| x.to_string())?,
            PhiConvention::new(m)
                .and_then(|p| p.verify())
                .map_err(|x| x.to_string())?,
        ] {
            if let Some(f) = r.failures().next() {
                return Err(format!("m={m}: {}", f.name));
            }
            checks += r.checks.len();
        }
    }
    Ok(format!("m = 1..{MAX_CHART_M}: {checks} identities hold"))
}

type StratumFixture = (i64, i64, &'static [(i64, i64)], i64, i64);

/// `(N, h, parts, dim M, dim stratum)`, evaluated by hand from the closed
/// formulas.
const STRATUM_FIXTURES: [StratumFixture; 10] = [
    (3, 4, &[(0, 1); 12], 48, 48),
    (2, 2, &[(0, 1); 4], 13, 13),
    (3, 2, &[(0, 5)], 20, 25),
    (4, 1, &[(2, 6)], 28, 31),
    (2, 3, &[(1, 2), (0, 3)], 18, 22),
    (5, 2, &[(0, 1), (1, 4), (0, 2)], 38, 45),
    (1, 1, &[(0, 1), (0, 1)], 4, 3),
    (3, 3, &[(0, 1); 6], 24, 27),
    (6, 1, &[(1, 3), (2, 5)], 47, 51),
    (2, 5, &[(0, 1); 10], 34, 34),
];

fn dimensions(e: &Engines) -> Outcome {
    for &(n, h, parts, dm, ds) in &STRATUM_FIXTURES {
        let spec = StratumSpec::from_parts(n, h, parts.to_vec());
        let got_m = expected_dim_moduli(n, spec.g, spec.d);
        let got_s = (e.dim_stratum)(&spec).map_err(|x| x.to_string())?;
        ensure(got_m == dm && got_s == ds, || {
            format!("N={n} h={h} parts={parts:?}: got ({got_m}, {got_s}), expected ({dm}, {ds})")
        })?;
    }
    for (a, b, c, want) in [(3, 4, 12, 48), (3, 1, 2, 8), (3, 1, 1, 4)] {
        let got = dim_moduli(a, b, c).map_err(|x| x.to_string())?;
        ensure(got == want, || {
            format!("dim M({a},{b},{c}) = {got}, expected {want}")
        })?;
    }
    for seed in 0..500 {
        let spec = random_stratum(seed);
        let got = (e.dim_stratum)(&spec).map_err(|x| format!("seed {seed}: {x}"))?;
        let (n, g, d) = (spec.ambient_dim, spec.g, spec.d);
        let want = (n - 3) * (1 - g) + d * (n + 1) + n * spec.h - spec.n;
        ensure(got == want, || {
            format!("seed {seed}: {got} != dim M + Nh - n = {want}")
        })?;
    }
    Ok(format!(
        "{} fixtures and 500 random strata agree",
        STRATUM_FIXTURES.len() + 3
    ))
}

fn nonzero_rational(rng: &mut ChaCha8Rng) -> Rational {
    let mut num = 0;
    while num == 0 {
        num = rng.gen_range(-5i64..=5);
    }
    Rational::new(num, rng.gen_range(1i64..=4)).expect("positive denominator")
}

fn transform(prob: &ObstructionProblem, rng: &mut ChaCha8Rng) -> ObstructionProblem {
    let a = random_invertible(rng, prob.genus(), 2);
    let b = random_invertible(rng, prob.ambient_dim(), 2);
    let cols = prob
        .columns()
        .iter()
        .map(|c| {
            let (s, t) = (nonzero_rational(rng), nonzero_rational(rng));
            let delta = a
                .mul_vec(&c.delta)
                .expect("square")
                .into_iter()
                .map(|x| x * &s)
                .collect();
            let deriv = b
                .mul_vec(&c.deriv)
                .expect("square")
                .into_iter()
                .map(|x| x * &t)
                .collect();
            AttachmentColumn { delta, deriv }
        })
        .collect();
    ObstructionProblem::new(prob.genus(), prob.ambient_dim(), cols).expect("same shape")
}

fn invariance(e: &Engines) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0008);
    for k in 0..500 {
        let g = rng.gen_range(1..=3);
        let n_amb = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=8);
        let prob = random_instance(rng.gen(), g, n_amb, n, 2);
        let moved = transform(&prob, &mut rng);
        let (t0, t1) = ((e.theorem)(&prob), (e.theorem)(&moved));
        ensure(
            t0.rank == t1.rank && t0.obstructed() == t1.obstructed(),
            || format!("instance {k}: theorem rank {} became {}", t0.rank, t1.rank),
        )?;
        if let (Some(w0), Some(w1)) = (t0.kernel_witness(), t1.kernel_witness()) {
            let d0 = kernel_to_witness_d(&prob, w0).map_err(|x| x.to_string())?;
            let d1 = kernel_to_witness_d(&moved, w1).map_err(|x| x.to_string())?;
            ensure(d0 == d1, || {
                format!("instance {k}: kernel support {d0:?} became {d1:?}")
            })?;
        }
        let (c0, c1) = (
            (e.corollary)(&prob).map_err(|x| x.to_string())?,
            (e.corollary)(&moved).map_err(|x| x.to_string())?,
        );
        ensure(c0 == c1, || {
            format!("instance {k}: subset verdict {c0:?} became {c1:?}")
        })?;
    }
    Ok("500 instances: verdicts and witness sets unchanged".into())
}

fn single_point(e: &Engines) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0009);
    let mut fired = 0;
    for k in 0..100 {
        let genus = rng.gen_range(1..=4usize);
        let (model, point) = if k % 2 == 0 || genus == 1 {
            let nodes: Vec<(Rational, Rational)> = (1..=genus as i64)
                .map(|j| (Rational::from(-(2 * j - 1)), Rational::from(-2 * j)))
                .collect();
            let model = GhostCurveModel::NodalRational(
                NodalRationalModel::new(genus, nodes).map_err(|x| x.to_string())?,
            );
            let p =
                Rational::new(rng.gen_range(1i64..=50), rng.gen_range(1i64..=5)).expect("positive");
            (model, AttachmentPoint::Line { p })
        } else {
            let inst = build_fan_instance(2, genus, ModelKind::Hyperelliptic)
                .map_err(|x| x.to_string())?;
            let i = rng.gen_range(0..inst.attachments.len());
            (inst.curve_model, inst.attachments[i].clone())
        };
        let n_amb = rng.gen_range(1..=4usize);
        let deriv: Vec<Rational> = if rng.gen_bool(0.5) {
            vec![Rational::zero(); n_amb]
        } else {
            let mut v: Vec<Rational> = (0..n_amb)
                .map(|_| Rational::from(rng.gen_range(-3i64..=3)))
                .collect();
            v[rng.gen_range(0..n_amb)] = nonzero_rational(&mut rng);
            v
        };
        let nonzero = deriv.iter().any(|x| !x.is_zero());
        let prob = ObstructionProblem::from_model(&model, &[point], vec![deriv])
            .map_err(|x| x.to_string())?;
        ensure(prob.columns()[0].delta.iter().any(|x| !x.is_zero()), || {
            format!("case {k}: zero covector")
        })?;
        let th = (e.theorem)(&prob).obstructed();
        let cor = (e.corollary)(&prob)
            .map_err(|x| x.to_string())?
            .obstructed();
        ensure(th == nonzero && cor == nonzero, || {
            format!("case {k}: derivative nonzero = {nonzero}, theorem fires = {th}, subset test fires = {cor}")
        })?;
        fired += usize::from(nonzero);
    }
    Ok(format!(
        "100 cases ({fired} with nonzero derivative) behave as expected"
    ))
}
