//! Acceptance gate. Prints one line per criterion and exits non-zero if any
//! criterion fails. All value comparisons are exact (tolerance 0).

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{brute_opt, ex1, fixture, matrix_product_point, random_lp, vertex_oracle, OracleResult};
use pvcsp::arith::{int, ExtRat, Rat};
use pvcsp::decomp::{decompose, verify_decomposition};
use pvcsp::distsim::{build_network, simulate};
use pvcsp::gen::{self, FixtureRng, GenConfig};
use pvcsp::lpcore::{solve_lp, verify_certificate, verify_point, LinearProgram, LpOutcome, Relation, Sense};
use pvcsp::model::{has_no_repetitions, k_fold_twist, Role, Signature, ValuedStructure};
use pvcsp::morph::{
    blp_power_consistency, frac_hom, sym_frac_polymorphism, verify_frac_hom, Direction, MapDistribution,
    PowerCheckStatus, DEFAULT_MAP_BUDGET, DEFAULT_POWER_BUDGET,
};
use pvcsp::relax::{build_relaxation, decide, opt_relaxation, Flavor, Method, Verdict};
use pvcsp::wl::{equiv1, refine, FactorGraph};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn finite(v: &ExtRat) -> Option<Rat> {
    match v {
        ExtRat::Finite(r) => Some(r.clone()),
        ExtRat::PosInf => None,
    }
}

/// Small random sizes: |I| ≤ 3, |A| ≤ 3, arities ≤ 2.
fn small_case(rng: &mut FixtureRng, connected: bool) -> Result<(ValuedStructure, ValuedStructure), String> {
    let cfg = GenConfig {
        symbols: rng.gen_range(1..=2),
        max_arity: rng.gen_range(1..=2),
        template_size: rng.gen_range(1..=3),
        variables: rng.gen_range(1..=3),
        constraints: rng.gen_range(0..=4),
        inf_percent: 15,
    };
    let cfg = if connected {
        GenConfig { max_arity: 2, ..cfg }
    } else {
        cfg
    };
    ok(gen::random_case(rng, &cfg, connected))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (a, b, i) = ex1();
    let three = ExtRat::from_int(3);
    let two = ExtRat::from_int(2);
    ensure!(brute_opt(&i, &a) == three, "Opt(I,A) = {}", brute_opt(&i, &a));
    ensure!(brute_opt(&i, &b) == three, "Opt(I,B) = {}", brute_opt(&i, &b));
    let model_a = ok(pvcsp::model::opt(&i, &a))?.0;
    ensure!(model_a == three, "model::opt(I,A) = {model_a}");
    let blp = ok(opt_relaxation(&i, &a, Flavor::Blp))?.0;
    let sa1 = ok(opt_relaxation(&i, &a, Flavor::Sa1))?.0;
    ensure!(blp == two, "Opt^BLP(I,A) = {blp}");
    ensure!(sa1 == three, "Opt^SA1(I,A) = {sa1}");
    let tau = int(2);
    let by_blp = ok(decide(&a, &b, &i, &tau, Method::Blp))?;
    let by_sa1 = ok(decide(&a, &b, &i, &tau, Method::Sa1))?;
    ensure!(by_blp == Verdict::Yes, "decide blp = {by_blp}");
    ensure!(by_sa1 == Verdict::No, "decide sa1 = {by_sa1}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("Opt(A)=3 Opt(B)=3 BLP=2 SA1=3, tau=2: blp Yes / sa1 No, {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = gen::rng(2);
    let (mut total, mut rep_free) = (0, 0);
    while total < 500 {
        let (i, a) = small_case(&mut rng, false)?;
        let blp = ok(opt_relaxation(&i, &a, Flavor::Blp))?.0;
        let sa1 = ok(opt_relaxation(&i, &a, Flavor::Sa1))?.0;
        let oracle = brute_opt(&i, &a);
        ensure!(blp <= sa1 && sa1 <= oracle, "case {total}: BLP {blp}, SA1 {sa1}, Opt {oracle}");
        if ok(has_no_repetitions(&i))? {
            rep_free += 1;
            ensure!(blp == sa1, "repetition-free case {total}: BLP {blp} != SA1 {sa1}");
        }
        total += 1;
    }
    let elapsed = start.elapsed();
    ensure!(rep_free > 0, "no repetition-free cases sampled");
    ensure!(elapsed <= Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("{total} cases, {rep_free} repetition-free, {elapsed:?}"))
}

/// Symmetric fixtures with nontrivial classes: cycles, disjoint copies and
/// twists of random connected instances.
fn symmetric_fixtures(rng: &mut FixtureRng) -> Result<Vec<ValuedStructure>, String> {
    let sig = ok(Signature::new(vec![("R0".into(), 2), ("R1".into(), 1)]))?;
    let mut out = Vec::new();
    for len in 2..=6 {
        out.push(ok(gen::cycle_instance(&sig, 0, len))?);
    }
    for _ in 0..10 {
        let n = rng.gen_range(2..=3);
        let extra = rng.gen_range(0..=2);
        let i = ok(gen::random_connected_instance(rng, "I", &sig, n, extra))?;
        out.push(ok(i.disjoint_union(&i))?);
        let k = rng.gen_range(2..=3);
        out.push(ok(k_fold_twist(&i, k))?.scaled);
    }
    Ok(out)
}

fn criterion_3() -> Outcome {
    let mut rng = gen::rng(3);
    let mut cases: Vec<(ValuedStructure, ValuedStructure)> = Vec::new();
    for i in symmetric_fixtures(&mut rng)? {
        for _ in 0..2 {
            let size = rng.gen_range(2..=3);
            let a = ok(gen::random_template(&mut rng, "A", i.signature(), size, 10))?;
            cases.push((i.clone(), a));
        }
    }
    while cases.len() < 220 {
        cases.push(small_case(&mut rng, false)?);
    }
    let mut nontrivial = 0;
    for (n, (i, a)) in cases.iter().enumerate() {
        let sa1 = ok(opt_relaxation(i, a, Flavor::Sa1))?.0;
        let (red, _, prog) = ok(opt_relaxation(i, a, Flavor::Sa1Reduced))?;
        ensure!(red == sa1, "case {n}: reduced {red} != SA1 {sa1}");
        let classes = prog.classes.as_ref().expect("reduced program has classes");
        if classes.var_sizes.iter().any(|&s| s > 1) {
            nontrivial += 1;
        }
    }
    ensure!(nontrivial >= 20, "only {nontrivial} cases with nontrivial classes");
    Ok(format!("{} cases, {nontrivial} with nontrivial classes", cases.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = gen::rng(4);
    // Odd cycles against templates rewarding disagreement have
    // half-integral optima; the rest is random.
    let mut seeded = vec![(fixture("c3.vcsp"), fixture("neq_cost.vcsp"))];
    let sig = fixture("neq_cost.vcsp").signature().clone();
    for len in [3, 5] {
        for _ in 0..10 {
            let a = ok(gen::random_template(&mut rng, "A", &sig, 2, 0))?;
            seeded.push((ok(gen::cycle_instance(&sig, 0, len))?, a));
        }
    }
    let (mut feasible, mut fractional, mut tries) = (0, 0, 0);
    while feasible < 200 {
        tries += 1;
        ensure!(tries < 5000, "too few feasible cases");
        let (i, a) = match seeded.pop() {
            Some(case) => case,
            None => small_case(&mut rng, false)?,
        };
        let sa1 = ok(opt_relaxation(&i, &a, Flavor::Sa1))?.0;
        if sa1.is_inf() {
            continue;
        }
        feasible += 1;
        let d = ok(decompose(&i, &a))?;
        if d.m > 1 {
            fractional += 1;
        }
        let report = ok(verify_decomposition(&i, &a, &d))?;
        ensure!(
            report.passed(),
            "case {feasible}: {} fails",
            report.first_failure().unwrap_or("?")
        );
        ensure!(report.val_y2 == sa1, "case {feasible}: Val(Y2,A,h) {} != {sa1}", report.val_y2);
        let prog = ok(build_relaxation(&i, &a, Flavor::Sa1))?;
        let point = matrix_product_point(&i, &a, &d, &prog)
            .ok_or_else(|| format!("case {feasible}: product puts mass on an eliminated tuple"))?;
        ensure!(ok(verify_point(&prog.lp, &point))?, "case {feasible}: product point infeasible");
        let value = ExtRat::Finite(prog.lp.objective_value(&point));
        ensure!(value == sa1, "case {feasible}: product objective {value} != {sa1}");
    }
    ensure!(fractional > 0, "no fractional SA1 optimum sampled");
    Ok(format!("{feasible} feasible cases ({fractional} with m > 1), all clauses and products exact"))
}

fn criterion_5() -> Outcome {
    let (a, b, _) = ex1();
    let fwd = ok(frac_hom(&a, &b, DEFAULT_MAP_BUDGET))?;
    let mu = fwd.distribution().ok_or("frac_hom(A,B) found no distribution")?;
    ensure!(
        *mu == MapDistribution::identity(Direction::FractionalHom, 2),
        "frac_hom(A,B) is not the identity point mass"
    );
    let back = ok(frac_hom(&b, &a, DEFAULT_MAP_BUDGET))?;
    let cx = back.counterexample().ok_or("frac_hom(B,A) returned a distribution")?;
    let (oa, ob) = (brute_opt(&cx.instance, &a), brute_opt(&cx.instance, &b));
    ensure!(oa > ob, "EX1 counterexample: Opt(I*,A) {oa} <= Opt(I*,B) {ob}");

    let mut rng = gen::rng(5);
    let (mut dists, mut cxs) = (0, 0);
    for n in 0..120 {
        let arity = rng.gen_range(1..=2);
        let sig = ok(gen::random_signature(&mut rng, 1, arity))?;
        let sa = rng.gen_range(1..=2);
        let sb = rng.gen_range(1..=3);
        let ta = ok(gen::random_template(&mut rng, "A", &sig, sa, 10))?;
        let tb = ok(gen::random_template(&mut rng, "B", &sig, sb, 10))?;
        match ok(frac_hom(&ta, &tb, DEFAULT_MAP_BUDGET))? {
            outcome if outcome.distribution().is_some() => {
                let mu = outcome.distribution().unwrap();
                ensure!(ok(verify_frac_hom(&ta, &tb, mu))?, "pair {n}: distribution fails verification");
                dists += 1;
            }
            outcome => {
                let cx = outcome.counterexample().unwrap();
                let (oa, ob) = (brute_opt(&cx.instance, &ta), brute_opt(&cx.instance, &tb));
                ensure!(ob > oa, "pair {n}: counterexample gap not confirmed ({oa} vs {ob})");
                ensure!(
                    cx.opt_source == oa && cx.opt_target == ob,
                    "pair {n}: reported optima differ from the oracle"
                );
                cxs += 1;
            }
        }
    }
    Ok(format!(
        "EX1 identity / counterexample ({oa} > {ob}); 120 random pairs: {dists} distributions, {cxs} counterexamples"
    ))
}

fn criterion_6() -> Outcome {
    let (a, b, i) = ex1();
    let m1 = ok(sym_frac_polymorphism(&a, &b, 1, DEFAULT_POWER_BUDGET))?;
    ensure!(m1.result.distribution().is_some(), "m=1 found no symmetric polymorphism");
    let m2 = ok(sym_frac_polymorphism(&a, &b, 2, DEFAULT_POWER_BUDGET))?;
    let cx = m2.result.counterexample().ok_or("m=2 unexpectedly succeeded")?;
    let (src, tgt) = (brute_opt(&cx.instance, &m2.power.structure), brute_opt(&cx.instance, &b));
    ensure!(tgt > src, "m=2 counterexample not confirmed ({src} vs {tgt})");
    let report = ok(blp_power_consistency(&i, &a, DEFAULT_POWER_BUDGET))?;
    ensure!(report.m_star == 2, "m* = {}", report.m_star);
    ensure!(report.blp == ExtRat::from_int(2), "BLP = {}", report.blp);
    let at2 = report.per_m.iter().find(|(m, _)| *m == 2).map(|(_, v)| v.clone());
    ensure!(at2 == Some(ExtRat::from_int(2)), "Opt(I, LP^2(A)) = {at2:?}");
    ensure!(report.status == PowerCheckStatus::Consistent, "status {:?}", report.status);
    Ok(format!("m=1 ok, m=2 refuted ({tgt} > {src}), m*=2 with Opt(I,LP^2(A)) = BLP = 2"))
}

fn taus_around(v: &ExtRat) -> Vec<Rat> {
    match finite(v) {
        Some(s) => vec![&s - Rat::one(), s.clone(), s + Rat::one()],
        None => vec![int(0), int(10), int(1000)],
    }
}

fn criterion_7() -> Outcome {
    let mut rng = gen::rng(7);
    let mut max_ratio = Rat::zero();
    let mut runs = 0;
    for n in 0..100 {
        let cfg = GenConfig {
            symbols: rng.gen_range(1..=2),
            max_arity: 2,
            template_size: rng.gen_range(2..=3),
            variables: rng.gen_range(1..=4),
            constraints: rng.gen_range(0..=3),
            inf_percent: 10,
        };
        let (i, a) = ok(gen::random_case(&mut rng, &cfg, true))?;
        let b = a.clone();
        let sa1 = ok(opt_relaxation(&i, &a, Flavor::Sa1))?.0;
        let g = ok(FactorGraph::new(&i))?;
        let colors = refine(&g).colors;
        let bound = g.num_vertices();
        for tau in taus_around(&sa1) {
            let mut net = ok(build_network(&i, &a, &b, &tau, n % 4 == 3))?;
            let out = ok(net.run()).map_err(|e| format!("instance {n}: {e}"))?;
            runs += 1;
            let expected = Verdict::from_bound(&sa1, &tau);
            ensure!(out.verdict == expected, "instance {n}, tau {tau}: {} vs {expected}", out.verdict);
            ensure!(
                net.agents.iter().all(|ag| ag.verdict == Some(expected)),
                "instance {n}: agents disagree"
            );
            ensure!(out.rounds <= 3 * bound, "instance {n}: {} rounds > 3*{bound}", out.rounds);
            max_ratio = max_ratio.max(int(out.rounds as i64) / int(bound as i64));
            let mut by_agent: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
            for rec in &out.trace {
                by_agent.entry(rec.agent).or_default().push(&rec.state);
            }
            for x in 0..bound {
                for y in x + 1..bound {
                    if colors[x] == colors[y] {
                        ensure!(by_agent[&x] == by_agent[&y], "instance {n}: agents {x},{y} diverge");
                    }
                }
            }
        }
    }
    Ok(format!(
        "100 instances, {runs} runs; verdicts, agreement, traces and programs match; max rounds/(|I|+|C_I|) = {max_ratio}"
    ))
}

/// Uniform structure: `R(v, σ(v))` and `S(v, π(v))` with unit weights.
fn two_permutations(sig: &Signature, sigma: &[usize], pi: &[usize]) -> Result<ValuedStructure, String> {
    let n = sigma.len();
    let mut s = ok(ValuedStructure::new(
        "P",
        Role::Instance,
        sig.clone(),
        (0..n).map(|v| format!("v{v}")).collect(),
    ))?;
    for v in 0..n {
        ok(s.add(0, vec![v, sigma[v]], &ExtRat::from_int(1)))?;
        ok(s.add(1, vec![v, pi[v]], &ExtRat::from_int(1)))?;
    }
    Ok(s)
}

fn derangement(rng: &mut FixtureRng, n: usize) -> Vec<usize> {
    loop {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        if p.iter().enumerate().all(|(i, &x)| i != x) {
            return p;
        }
    }
}

fn curated_pairs(rng: &mut FixtureRng) -> Result<Vec<(String, ValuedStructure, ValuedStructure)>, String> {
    let mut pairs = Vec::new();
    // Weakly congruent connected I, J of sizes a, b: the twists I^(bt) and
    // J^(at) share a universe size and both double every degree.
    let cyc_sig = ok(Signature::new(vec![("R".into(), 2), ("U".into(), 1)]))?;
    let variants: Vec<(&str, Box<dyn Fn(usize) -> Result<ValuedStructure, String>>)> = vec![
        ("cycle", Box::new(|len| ok(gen::cycle_instance(&cyc_sig, 0, len)))),
        (
            "weighted cycle",
            Box::new(|len| ok(ok(gen::cycle_instance(&cyc_sig, 0, len))?.scaled(&int(2)))),
        ),
        (
            "cycle with unary",
            Box::new(|len| {
                let mut c = ok(gen::cycle_instance(&cyc_sig, 0, len))?;
                for v in 0..len {
                    ok(c.add(1, vec![v], &ExtRat::Finite(Rat::new(1.into(), 2.into()))))?;
                }
                Ok(c)
            }),
        ),
    ];
    for (name, build) in &variants {
        for (a, b, t) in [(2usize, 3usize, 2usize), (2, 3, 3), (2, 4, 2)] {
            let (ka, kb) = (b * t, a * t);
            let i = ok(k_fold_twist(&build(a)?, ka))?.scaled;
            let j = ok(k_fold_twist(&build(b)?, kb))?.scaled;
            pairs.push((format!("{name} {a}^({ka}) vs {b}^({kb})"), i, j));
        }
    }
    let perm_sig = ok(Signature::new(vec![("R".into(), 2), ("S".into(), 2)]))?;
    let mut perm_pairs = 0;
    let mut tries = 0;
    while perm_pairs < 12 && tries < 2000 {
        tries += 1;
        let n = rng.gen_range(3..=6);
        let i = two_permutations(&perm_sig, &derangement(rng, n), &derangement(rng, n))?;
        let j = two_permutations(&perm_sig, &derangement(rng, n), &derangement(rng, n))?;
        let connected = |s: &ValuedStructure| FactorGraph::new(s).map(|g| g.is_connected());
        if i != j && ok(connected(&i))? && ok(connected(&j))? {
            pairs.push((format!("two permutations on {n}"), i, j));
            perm_pairs += 1;
        }
    }
    Ok(pairs)
}

fn criterion_8() -> Outcome {
    let mut rng = gen::rng(8);
    let pairs = curated_pairs(&mut rng)?;
    ensure!(pairs.len() >= 20, "only {} curated pairs", pairs.len());
    let mut runs = 0;
    for (name, i, j) in &pairs {
        ensure!(i != j, "{name}: identical structures");
        ensure!(ok(equiv1(i, j))?, "{name}: not equiv1");
        for _ in 0..2 {
            let a = ok(gen::random_template(&mut rng, "A", i.signature(), 2, 10))?;
            let vi = ok(opt_relaxation(i, &a, Flavor::Sa1Reduced))?.0;
            let vj = ok(opt_relaxation(j, &a, Flavor::Sa1Reduced))?.0;
            let mut taus = taus_around(&vi);
            taus.extend(taus_around(&vj));
            taus.sort();
            taus.dedup();
            let digest_mode = i.size() > 8;
            for tau in taus {
                let oi = ok(simulate(i, &a, &a, &tau, digest_mode)).map_err(|e| format!("{name}: {e}"))?;
                let oj = ok(simulate(j, &a, &a, &tau, digest_mode)).map_err(|e| format!("{name}: {e}"))?;
                ensure!(oi.verdict == oj.verdict, "{name}, tau {tau}: {} vs {}", oi.verdict, oj.verdict);
                runs += 2;
            }
        }
    }
    Ok(format!("{} equiv1 pairs, {runs} runs, identical verdicts", pairs.len()))
}

fn criterion_9() -> Outcome {
    let mut rng = gen::rng(9);
    let mut cases = 0;
    for n in 0..54 {
        let size = 2 + n % 3;
        let k = 1 + (n / 3) % 3;
        let symbols = rng.gen_range(1..=2);
        let sig = ok(gen::random_signature(&mut rng, symbols, 2))?;
        let extra = rng.gen_range(0..=2);
        let i = ok(gen::random_connected_instance(&mut rng, "I", &sig, size, extra))?;
        let tw = ok(k_fold_twist(&i, k))?;
        ensure!(
            ok(pvcsp::morph::verify_dual_frac_hom(&i, &tw.unscaled, &tw.embedding))?,
            "case {n}: embedding fails"
        );
        ensure!(
            ok(pvcsp::morph::verify_dual_frac_hom(&tw.unscaled, &i, &tw.projection))?,
            "case {n}: projection fails"
        );
        let c_size = if size * k <= 6 { 3 } else { 2 };
        let c = ok(gen::random_template(&mut rng, "C", &sig, c_size, 10))?;
        let base = brute_opt(&i, &c);
        let twisted = brute_opt(&tw.scaled, &c);
        let expected = base.scale(&int(2 * k as i64));
        ensure!(twisted == expected, "case {n}: Opt(I_k,C) {twisted} != 2k*Opt(I,C) {expected}");
        ensure!(ok(FactorGraph::new(&tw.scaled))?.is_connected(), "case {n}: twist disconnected");
        cases += 1;
    }
    Ok(format!("{cases} twists (|I| in 2..=4, k in 1..=3), scaling law and both witnesses exact"))
}

fn cycling_fixtures() -> Vec<(&'static str, LinearProgram)> {
    let r = |n: i64, d: i64| Rat::new(n.into(), d.into());
    let mut beale = LinearProgram::new(Sense::Min);
    for j in 0..4 {
        beale.add_var(format!("x{}", j + 4), true).unwrap();
    }
    beale
        .add_row(vec![(0, r(1, 4)), (1, int(-8)), (2, int(-1)), (3, int(9))], Relation::Le, int(0))
        .unwrap();
    beale
        .add_row(vec![(0, r(1, 2)), (1, int(-12)), (2, r(-1, 2)), (3, int(3))], Relation::Le, int(0))
        .unwrap();
    beale.add_row(vec![(2, int(1))], Relation::Le, int(1)).unwrap();
    beale
        .set_objective(vec![(0, r(-3, 4)), (1, int(20)), (2, r(-1, 2)), (3, int(6))])
        .unwrap();

    let mut kuhn = LinearProgram::new(Sense::Min);
    for j in 0..4 {
        kuhn.add_var(format!("x{}", j + 1), true).unwrap();
    }
    kuhn.add_row(vec![(0, int(-2)), (1, int(-9)), (2, int(1)), (3, int(9))], Relation::Le, int(0))
        .unwrap();
    kuhn.add_row(vec![(0, r(1, 3)), (1, int(1)), (2, r(-1, 3)), (3, int(-2))], Relation::Le, int(0))
        .unwrap();
    kuhn.add_row(vec![(0, int(2)), (1, int(3)), (2, int(-1)), (3, int(-12))], Relation::Le, int(2))
        .unwrap();
    kuhn.set_objective(vec![(0, int(-2)), (1, int(-3)), (2, int(1)), (3, int(12))])
        .unwrap();
    vec![("Beale", beale), ("Kuhn", kuhn)]
}

fn check_lp(name: &str, lp: &LinearProgram) -> Result<&'static str, String> {
    let oracle = vertex_oracle(lp);
    match (solve_lp(lp), oracle) {
        (LpOutcome::Optimal { value, point }, OracleResult::Optimal(expected)) => {
            ensure!(value == expected, "{name}: value {value} != oracle {expected}");
            ensure!(ok(verify_point(lp, &point))?, "{name}: optimal point infeasible");
            ensure!(lp.objective_value(&point) == value, "{name}: point objective differs");
            Ok("optimal")
        }
        (LpOutcome::Infeasible(cert), OracleResult::Infeasible) => {
            ensure!(ok(verify_certificate(lp, &cert))?, "{name}: certificate fails");
            Ok("infeasible")
        }
        (LpOutcome::Unbounded, OracleResult::Unbounded) => Ok("unbounded"),
        (got, want) => Err(format!("{name}: solver {got:?} vs oracle {want:?}")),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = gen::rng(10);
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for n in 0..500 {
        let lp = random_lp(&mut rng);
        *tally.entry(check_lp(&format!("program {n}"), &lp)?).or_default() += 1;
    }
    let mut cyc = Vec::new();
    for (name, lp) in cycling_fixtures() {
        cyc.push(format!("{name} {}", check_lp(name, &lp)?));
    }
    Ok(format!("500 programs {tally:?}; {}", cyc.join(", ")))
}

fn run(name: &str, f: fn() -> Outcome) -> (String, Outcome, Duration) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    (name.to_string(), outcome, start.elapsed())
}

fn main() {
    let _ = fixture("ex1_A.vcsp");
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 separation example", criterion_1),
        ("2 relaxation chain", criterion_2),
        ("3 reduced program", criterion_3),
        ("4 decomposition", criterion_4),
        ("5 fractional homomorphisms", criterion_5),
        ("6 symmetric polymorphisms", criterion_6),
        ("7 distributed simulator", criterion_7),
        ("8 equiv1 blindness", criterion_8),
        ("9 twist law", criterion_9),
        ("10 LP oracle", criterion_10),
    ];
    // The timed example runs alone; the rest run concurrently.
    let mut results = vec![run(criteria[0].0, criteria[0].1)];
    let rest: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria[1..]
            .iter()
            .map(|&(name, f)| s.spawn(move || run(name, f)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    results.extend(rest);
    let mut failed = 0;
    for (name, outcome, elapsed) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  criterion {name}: {reason} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
