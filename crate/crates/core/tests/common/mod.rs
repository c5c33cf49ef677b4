#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use pvcsp::arith::{int, ExtRat, Rat};
use pvcsp::decomp::Decomposition;
use pvcsp::gen::FixtureRng;
use pvcsp::lpcore::{LinearProgram, Relation, Sense};
use pvcsp::model::{constraints, parse_structure, tuples, ValuedStructure};
use pvcsp::relax::RelaxationProgram;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> ValuedStructure {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    parse_structure(&text).expect("fixture parses")
}

/// (A, B, I) of the separation example.
pub fn ex1() -> (ValuedStructure, ValuedStructure, ValuedStructure) {
    (fixture("ex1_A.vcsp"), fixture("ex1_B.vcsp"), fixture("ex1_I.vcsp"))
}

/// Brute-force optimum written against the raw value tables only.
pub fn brute_opt(instance: &ValuedStructure, template: &ValuedStructure) -> ExtRat {
    let n = instance.size();
    let entries = instance.nonzero_entries();
    let mut best = ExtRat::PosInf;
    for h in tuples(template.size(), n) {
        let mut total = ExtRat::zero();
        for (sym, tuple, w) in &entries {
            let image: Vec<usize> = tuple.iter().map(|&v| h[v]).collect();
            let cost = template.value(*sym, &image);
            let ExtRat::Finite(w) = w else { unreachable!("instances are finite") };
            total = total + cost.scale(w);
        }
        if total < best {
            best = total;
        }
    }
    best
}

type Q = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Optimal(Rat),
    Infeasible,
    Unbounded,
}

fn to_q(r: &Rat) -> Q {
    let n: i128 = r.numer().try_into().expect("small numerator");
    let d: i128 = r.denom().try_into().expect("small denominator");
    Q::new(n, d)
}

pub fn q_to_rat(q: &Q) -> Rat {
    Rat::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

/// Reduced row echelon form of an augmented system `[a | b]` with `n`
/// unknowns. Returns the reduced rows and pivot columns, or `None` when the
/// system is inconsistent.
fn rref(mut rows: Vec<Vec<Q>>, n: usize) -> Option<(Vec<Vec<Q>>, Vec<usize>)> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, p);
        let lead = rows[r][col];
        rows[r].iter_mut().for_each(|x| *x /= lead);
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col];
                for c in col..=n {
                    let d = f * rows[r][c];
                    rows[i][c] -= d;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    rows.truncate(r);
    Some((rows, pivots))
}

/// Unique solution of the system, if any.
fn unique_solution(rows: Vec<Vec<Q>>, n: usize) -> Option<Vec<Q>> {
    let (rows, pivots) = rref(rows, n)?;
    if pivots.len() != n {
        return None;
    }
    Some(rows.iter().map(|r| r[n]).collect())
}

/// Spanning vector of a one-dimensional null space, if it is one-dimensional.
fn kernel_line(rows: Vec<Vec<Q>>, n: usize) -> Option<Vec<Q>> {
    let (rows, pivots) = rref(rows, n)?;
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|j| !pivots.contains(j)).expect("one free column");
    let mut d = vec![Q::zero(); n];
    d[free] = Q::one();
    for (row, &p) in rows.iter().zip(&pivots) {
        d[p] = -row[free];
    }
    Some(d)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Vertex/extreme-ray enumeration for programs whose variables are all
/// non-negative (so the feasible region is pointed).
pub fn vertex_oracle(lp: &LinearProgram) -> OracleResult {
    let n = lp.vars().len();
    assert!(lp.vars().iter().all(|v| v.nonneg), "oracle needs non-negative variables");
    // Constraints as (a, rel, b), bounds included as x_j >= 0.
    let mut cons: Vec<(Vec<Q>, Relation, Q)> = lp
        .rows()
        .iter()
        .map(|r| {
            let mut a = vec![Q::zero(); n];
            for (j, c) in &r.coeffs {
                a[*j] = to_q(c);
            }
            (a, r.relation, to_q(&r.rhs))
        })
        .collect();
    for j in 0..n {
        let mut a = vec![Q::zero(); n];
        a[j] = Q::one();
        cons.push((a, Relation::Ge, Q::zero()));
    }
    let mut c = vec![Q::zero(); n];
    for (j, v) in lp.objective() {
        c[*j] = to_q(v);
    }
    if lp.sense() == Sense::Max {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    let dot = |a: &[Q], x: &[Q]| -> Q { a.iter().zip(x).map(|(p, q)| p * q).sum() };
    let holds = |a: &[Q], rel: Relation, b: Q, x: &[Q]| {
        let lhs = dot(a, x);
        match rel {
            Relation::Le => lhs <= b,
            Relation::Eq => lhs == b,
            Relation::Ge => lhs >= b,
        }
    };
    let eqs: Vec<usize> = (0..cons.len()).filter(|&i| cons[i].1 == Relation::Eq).collect();
    let ineqs: Vec<usize> = (0..cons.len()).filter(|&i| cons[i].1 != Relation::Eq).collect();
    let system = |s: &[usize], homogeneous: bool| -> Vec<Vec<Q>> {
        eqs.iter()
            .chain(s.iter().map(|k| &ineqs[*k]))
            .map(|&i| {
                let mut row = cons[i].0.clone();
                row.push(if homogeneous { Q::zero() } else { cons[i].2 });
                row
            })
            .collect()
    };

    // Vertices: feasible points with an active set of rank n.
    let mut best: Option<Q> = None;
    for k in 0..=n.min(ineqs.len()) {
        for s in subsets(ineqs.len(), k) {
            let Some(x) = unique_solution(system(&s, false), n) else { continue };
            if cons.iter().all(|(a, rel, b)| holds(a, *rel, *b, &x)) {
                let v = dot(&c, &x);
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
    }
    let Some(best) = best else {
        return OracleResult::Infeasible;
    };
    // Unbounded iff an extreme ray of the recession cone improves.
    for k in 0..n.min(ineqs.len() + 1) {
        for s in subsets(ineqs.len(), k) {
            let Some(d) = kernel_line(system(&s, true), n) else { continue };
            for sign in [Q::one(), -Q::one()] {
                let d: Vec<Q> = d.iter().map(|x| x * sign).collect();
                let in_cone = cons.iter().all(|(a, rel, _)| holds(a, *rel, Q::zero(), &d));
                if in_cone && dot(&c, &d) < Q::zero() {
                    return OracleResult::Unbounded;
                }
            }
        }
    }
    let best = if lp.sense() == Sense::Max { -best } else { best };
    OracleResult::Optimal(q_to_rat(&best))
}

/// Random program with small integer data and non-negative variables.
pub fn random_lp(rng: &mut FixtureRng) -> LinearProgram {
    let sense = if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max };
    let mut lp = LinearProgram::new(sense);
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=8);
    for j in 0..n {
        lp.add_var(format!("x{j}"), true).unwrap();
    }
    for _ in 0..m {
        let mut coeffs: Vec<(usize, Rat)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, int(rng.gen_range(-3..=3))));
            }
        }
        let rel = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add_row(coeffs, rel, int(rng.gen_range(-3..=6))).unwrap();
    }
    if rng.gen_bool(0.5) {
        lp.add_row((0..n).map(|j| (j, int(1))), Relation::Le, int(6)).unwrap();
    }
    let obj: Vec<(usize, Rat)> = (0..n).map(|j| (j, int(rng.gen_range(-3..=3)))).collect();
    lp.set_objective(obj).unwrap();
    lp
}

/// Multiplies the matrices of `I →_df Y₁`, `Y₁ ≡₁ Y₂` (identity on the
/// shared universe and on constraint copies) and `h: Y₂ → A`, giving
/// `p_v(a)` and `p_C(ā)` in the column layout of the full SA¹ program.
/// `None` when mass lands on an eliminated tuple.
pub fn matrix_product_point(
    instance: &ValuedStructure,
    template: &ValuedStructure,
    d: &Decomposition,
    prog: &RelaxationProgram,
) -> Option<Vec<Rat>> {
    let n = instance.size();
    let na = template.size();
    let m = d.m;
    // I × Y₁: row v has 1/m on every copy (k, v).
    let share = Rat::one() / int(m as i64);
    let i_y1 = |v: usize, u: usize| if u % n == v { share.clone() } else { Rat::zero() };
    // Y₂ × A: the assignment h.
    let y2_a = |u: usize, a: usize| if d.h[u] == a { Rat::one() } else { Rat::zero() };
    let mut point = vec![Rat::zero(); prog.lp.vars().len()];
    for v in 0..n {
        for a in 0..na {
            let p = (0..m * n).fold(Rat::zero(), |acc, u| acc + i_y1(v, u) * y2_a(u, a));
            point[prog.var_col(v, a)] = p;
        }
    }
    let cs = constraints(instance).ok()?;
    for (ci, c) in cs.iter().enumerate() {
        // Constraint copy k of Y₁ corresponds to copy k of Y₂, whose tuple
        // is ((ρ_i(k), v_i))_i; h maps it into A^r.
        for k in 0..m {
            let image: Vec<usize> = c
                .vars
                .iter()
                .enumerate()
                .map(|(i, &v)| d.h[d.rho[ci][i][k] * n + v])
                .collect();
            {
                let j = prog.con_col(ci, &image)?;
                point[j] += &share
            }
        }
    }
    Some(point)
}

pub fn is_nonneg_integer(r: &Rat) -> bool {
    r.is_integer() && !r.is_negative()
}
