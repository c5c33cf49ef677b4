//! Fractional and dual fractional homomorphisms, the power structure
//! `LP^m(A)` and symmetric fractional polymorphisms.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{fmt_rat, int, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::lpcore::{solve_lp, LinearProgram, LpOutcome, Relation, Sense};
use crate::model::{
    constraints, opt_with_budget, tuple_count, tuples, Role, ValuedStructure,
    DEFAULT_OPT_BUDGET,
};
use crate::relax::{opt_relaxation, Flavor};

/// Cap on `|B|^|A|` (or `|J|^|I|`) map tables.
pub const DEFAULT_MAP_BUDGET: u128 = 1 << 20;
/// Cap on the universe size of `LP^m(A)`.
pub const DEFAULT_POWER_BUDGET: u128 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    FractionalHom,
    DualFractionalHom,
}

/// Probability distribution over maps `source -> target`, each map a table
/// of target indices. Support entries are distinct and sorted by table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDistribution {
    direction: Direction,
    source_size: usize,
    target_size: usize,
    support: Vec<(Vec<usize>, Rat)>,
}

impl MapDistribution {
    /// Validates tables and probabilities; repeated tables are merged.
    pub fn new(
        direction: Direction,
        source_size: usize,
        target_size: usize,
        support: Vec<(Vec<usize>, Rat)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, Rat> = BTreeMap::new();
        for (f, p) in support {
            if f.len() != source_size {
                return Err(Error::MalformedDistribution(format!(
                    "map has {} entries, source has {source_size} elements",
                    f.len()
                )));
            }
            if let Some(bad) = f.iter().find(|&&b| b >= target_size) {
                return Err(Error::MalformedDistribution(format!(
                    "image {bad} outside a target of size {target_size}"
                )));
            }
            if !p.is_positive() {
                return Err(Error::MalformedDistribution(format!(
                    "probability {} is not positive",
                    fmt_rat(&p)
                )));
            }
            *merged.entry(f).or_insert_with(Rat::zero) += p;
        }
        let total: Rat = merged.values().fold(Rat::zero(), |a, p| a + p);
        if !total.is_one() {
            return Err(Error::MalformedDistribution(format!(
                "probabilities sum to {}",
                fmt_rat(&total)
            )));
        }
        Ok(MapDistribution {
            direction,
            source_size,
            target_size,
            support: merged.into_iter().collect(),
        })
    }

    /// Like [`MapDistribution::new`] but accepts any positive total mass.
    pub fn new_unnormalized(
        direction: Direction,
        source_size: usize,
        target_size: usize,
        support: Vec<(Vec<usize>, Rat)>,
    ) -> Result<Self> {
        let total: Rat = support.iter().fold(Rat::zero(), |a, (_, p)| a + p);
        if !total.is_positive() {
            return Err(Error::MalformedDistribution("empty support".into()));
        }
        let scaled = support.iter().map(|(f, p)| (f.clone(), p / &total)).collect();
        let mut d = Self::new(direction, source_size, target_size, scaled)?;
        for (_, p) in d.support.iter_mut() {
            *p *= &total;
        }
        Ok(d)
    }

    pub fn total(&self) -> Rat {
        self.support.iter().fold(Rat::zero(), |a, (_, p)| a + p)
    }

    pub fn point_mass(direction: Direction, table: Vec<usize>, target_size: usize) -> Self {
        MapDistribution {
            direction,
            source_size: table.len(),
            target_size,
            support: vec![(table, Rat::one())],
        }
    }

    pub fn identity(direction: Direction, size: usize) -> Self {
        Self::point_mass(direction, (0..size).collect(), size)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn support(&self) -> &[(Vec<usize>, Rat)] {
        &self.support
    }

    /// `[{"map": {source: target}, "probability": "p/q"}, ...]`.
    pub fn to_json(&self, source: &[String], target: &[String]) -> Value {
        Value::Array(
            self.support
                .iter()
                .map(|(f, p)| {
                    let map: serde_json::Map<String, Value> = f
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| (source[i].clone(), Value::String(target[b].clone())))
                        .collect();
                    json!({"map": map, "probability": fmt_rat(p)})
                })
                .collect(),
        )
    }
}

fn all_maps(source: usize, target: usize, budget: u128, what: &str) -> Result<impl Iterator<Item = Vec<usize>>> {
    let needed = tuple_count(target, source);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what: what.to_string(),
            needed,
            budget,
        });
    }
    Ok(tuples(target, source))
}

fn image(f: &[usize], t: &[usize]) -> Vec<usize> {
    t.iter().map(|&x| f[x]).collect()
}

/// `Σ_f μ(f) R^B(f(ā)) ≤ R^A(ā)` for every symbol and tuple.
pub fn verify_frac_hom(a: &ValuedStructure, b: &ValuedStructure, mu: &MapDistribution) -> Result<bool> {
    a.ensure_similar(b)?;
    if mu.source_size != a.size() || mu.target_size != b.size() {
        return Err(Error::MalformedDistribution(format!(
            "maps {} -> {} do not fit templates of sizes {} and {}",
            mu.source_size,
            mu.target_size,
            a.size(),
            b.size()
        )));
    }
    for sym in 0..a.signature().len() {
        let tb = b.table(sym);
        for t in tuples(a.size(), a.signature().arity(sym)) {
            let rhs = a.value(sym, &t);
            if rhs.is_inf() {
                continue;
            }
            let lhs: ExtRat = mu
                .support
                .iter()
                .map(|(f, p)| tb.get(&image(f, &t)).scale(p))
                .sum::<ExtRat>();
            if lhs > rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Instance on the universe of `A` separating the optima over `A` and `B`.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub instance: ValuedStructure,
    /// `Opt(I*, A)`.
    pub opt_source: ExtRat,
    /// `Opt(I*, B)`, strictly larger.
    pub opt_target: ExtRat,
    /// Whether weights were lifted by `ε` to make maps with infinite
    /// cost visible.
    pub perturbed: bool,
}

#[derive(Clone, Debug)]
pub enum FracHomOutcome {
    /// `normalized` is false when the rescaled distribution failed
    /// re-verification and the raw LP solution is returned instead.
    Distribution { mu: MapDistribution, normalized: bool },
    Counterexample(Counterexample),
}

impl FracHomOutcome {
    pub fn distribution(&self) -> Option<&MapDistribution> {
        match self {
            FracHomOutcome::Distribution { mu, .. } => Some(mu),
            FracHomOutcome::Counterexample(_) => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            FracHomOutcome::Counterexample(c) => Some(c),
            FracHomOutcome::Distribution { .. } => None,
        }
    }
}

/// Searches for a fractional homomorphism `A →_f B`; on failure extracts an
/// instance `I*` with `Opt(I*, B) > Opt(I*, A)` from the Farkas certificate.
///
/// If some single map already satisfies the inequalities, the point mass on
/// the lexicographically least such map is returned without solving an LP.
pub fn frac_hom(a: &ValuedStructure, b: &ValuedStructure, budget: u128) -> Result<FracHomOutcome> {
    a.ensure_similar(b)?;
    for f in all_maps(a.size(), b.size(), budget, "maps B^A")? {
        let mu = MapDistribution::point_mass(Direction::FractionalHom, f, b.size());
        if verify_frac_hom(a, b, &mu)? {
            return Ok(FracHomOutcome::Distribution {
                mu,
                normalized: true,
            });
        }
    }
    let rows: Vec<(usize, Vec<usize>, Rat)> = (0..a.signature().len())
        .flat_map(|sym| {
            tuples(a.size(), a.signature().arity(sym)).filter_map(move |t| match a.value(sym, &t) {
                ExtRat::Finite(c) => Some((sym, t, c)),
                ExtRat::PosInf => None,
            })
        })
        .collect();
    let tables: Vec<_> = (0..b.signature().len()).map(|sym| b.table(sym)).collect();
    let mut finite_maps: Vec<Vec<usize>> = Vec::new();
    let mut columns: Vec<Vec<Rat>> = Vec::new();
    let mut some_infinite = false;
    for f in all_maps(a.size(), b.size(), budget, "maps B^A")? {
        let col: Option<Vec<Rat>> = rows
            .iter()
            .map(|(sym, t, _)| tables[*sym].get(&image(&f, t)).finite().cloned())
            .collect();
        match col {
            Some(col) => {
                finite_maps.push(f);
                columns.push(col);
            }
            None => some_infinite = true,
        }
    }
    let mut lp = LinearProgram::new(Sense::Min);
    for (k, f) in finite_maps.iter().enumerate() {
        let name: Vec<String> = f.iter().map(usize::to_string).collect();
        lp.add_var(format!("mu{k}:{}", name.join(".")), true)?;
    }
    for (i, (_, _, rhs)) in rows.iter().enumerate() {
        lp.add_row(
            columns.iter().enumerate().map(|(k, col)| (k, col[i].clone())),
            Relation::Le,
            rhs.clone(),
        )?;
    }
    lp.add_row((0..finite_maps.len()).map(|k| (k, Rat::one())), Relation::Ge, Rat::one())?;
    lp.set_objective((0..finite_maps.len()).map(|k| (k, Rat::one())))?;

    match solve_lp(&lp) {
        LpOutcome::Optimal { point, .. } => {
            let support: Vec<(Vec<usize>, Rat)> = finite_maps
                .into_iter()
                .zip(point)
                .filter(|(_, p)| p.is_positive())
                .collect();
            let total: Rat = support.iter().fold(Rat::zero(), |acc, (_, p)| acc + p);
            let scaled: Vec<(Vec<usize>, Rat)> =
                support.iter().map(|(f, p)| (f.clone(), p / &total)).collect();
            let mu = MapDistribution::new(Direction::FractionalHom, a.size(), b.size(), scaled)?;
            if verify_frac_hom(a, b, &mu)? {
                Ok(FracHomOutcome::Distribution {
                    mu,
                    normalized: true,
                })
            } else {
                let raw = MapDistribution::new_unnormalized(
                    Direction::FractionalHom,
                    a.size(),
                    b.size(),
                    support,
                )?;
                Ok(FracHomOutcome::Distribution {
                    mu: raw,
                    normalized: false,
                })
            }
        }
        LpOutcome::Unbounded => Err(Error::Internal("fractional homomorphism LP unbounded".into())),
        LpOutcome::Infeasible(cert) => {
            let m = rows.len();
            let x: Vec<Rat> = cert[..m].iter().map(|l| -l).collect();
            let lambda0 = cert[m].clone();
            let mut weights = x.clone();
            if some_infinite {
                let value_a = x.iter().zip(&rows).fold(Rat::zero(), |acc, (xi, r)| acc + xi * &r.2);
                let gap = &lambda0 - &value_a;
                let s_a = rows.iter().fold(Rat::zero(), |acc, r| acc + &r.2);
                let worst = columns
                    .iter()
                    .map(|col| &s_a - col.iter().fold(Rat::zero(), |acc, c| acc + c))
                    .fold(Rat::zero(), |acc, d| if d > acc { d } else { acc });
                let eps = gap / (int(2) * (Rat::one() + worst));
                for w in weights.iter_mut() {
                    *w += &eps;
                }
            }
            let mut instance = ValuedStructure::new(
                format!("{}_vs_{}", a.name(), b.name()),
                Role::Instance,
                a.signature().clone(),
                a.universe().to_vec(),
            )?;
            for ((sym, t, _), w) in rows.iter().zip(&weights) {
                if w.is_positive() {
                    instance.set(*sym, t.clone(), ExtRat::Finite(w.clone()))?;
                }
            }
            let opt_source = opt_with_budget(&instance, a, DEFAULT_OPT_BUDGET.max(budget))?.0;
            let opt_target = opt_with_budget(&instance, b, DEFAULT_OPT_BUDGET.max(budget))?.0;
            if opt_target <= opt_source {
                return Err(Error::Internal(format!(
                    "extracted instance shows no gap: Opt over B = {opt_target}, over A = {opt_source}"
                )));
            }
            Ok(FracHomOutcome::Counterexample(Counterexample {
                instance,
                opt_source,
                opt_target,
                perturbed: some_infinite,
            }))
        }
    }
}

/// For each symbol and target tuple `u`, `Σ_f η(f) Σ_{v : f(v) = u} R^I(v)`.
fn pushed_weights(
    i: &ValuedStructure,
    eta: &[(Vec<usize>, Rat)],
) -> Result<BTreeMap<(usize, Vec<usize>), Rat>> {
    let cs = constraints(i)?;
    let mut out: BTreeMap<(usize, Vec<usize>), Rat> = BTreeMap::new();
    for (f, p) in eta {
        for c in &cs {
            *out.entry((c.symbol, image(f, &c.vars))).or_insert_with(Rat::zero) += p * &c.weight;
        }
    }
    Ok(out)
}

/// `R^J(u) ≥ Σ_f η(f) Σ_{v : f(v) = u} R^I(v)` for every symbol and `u`.
pub fn verify_dual_frac_hom(i: &ValuedStructure, j: &ValuedStructure, eta: &MapDistribution) -> Result<bool> {
    i.ensure_similar(j)?;
    j.ensure_instance()?;
    if eta.source_size != i.size() || eta.target_size != j.size() {
        return Err(Error::MalformedDistribution(format!(
            "maps {} -> {} do not fit instances of sizes {} and {}",
            eta.source_size,
            eta.target_size,
            i.size(),
            j.size()
        )));
    }
    Ok(pushed_weights(i, &eta.support)?
        .into_iter()
        .all(|((sym, u), w)| ExtRat::Finite(w) <= j.value(sym, &u)))
}

/// LP search for a dual fractional homomorphism `I →_df J`.
pub fn dual_frac_hom(i: &ValuedStructure, j: &ValuedStructure, budget: u128) -> Result<Option<MapDistribution>> {
    i.ensure_similar(j)?;
    j.ensure_instance()?;
    let maps: Vec<Vec<usize>> = all_maps(i.size(), j.size(), budget, "maps J^I")?.collect();
    let cs = constraints(i)?;
    let mut rows: BTreeMap<(usize, Vec<usize>), Vec<(usize, Rat)>> = BTreeMap::new();
    for (k, f) in maps.iter().enumerate() {
        for c in &cs {
            rows.entry((c.symbol, image(f, &c.vars)))
                .or_default()
                .push((k, c.weight.clone()));
        }
    }
    let mut lp = LinearProgram::new(Sense::Min);
    for (k, f) in maps.iter().enumerate() {
        let name: Vec<String> = f.iter().map(usize::to_string).collect();
        lp.add_var(format!("eta{k}:{}", name.join(".")), true)?;
    }
    for ((sym, u), coeffs) in rows {
        let rhs = j
            .value(sym, &u)
            .finite()
            .cloned()
            .ok_or_else(|| Error::Internal("instance weight is infinite".into()))?;
        lp.add_row(coeffs, Relation::Le, rhs)?;
    }
    lp.add_row((0..maps.len()).map(|k| (k, Rat::one())), Relation::Eq, Rat::one())?;
    match solve_lp(&lp) {
        LpOutcome::Optimal { point, .. } => {
            let support = maps
                .into_iter()
                .zip(point)
                .filter(|(_, p)| p.is_positive())
                .collect();
            Ok(Some(MapDistribution::new(
                Direction::DualFractionalHom,
                i.size(),
                j.size(),
                support,
            )?))
        }
        LpOutcome::Infeasible(_) => Ok(None),
        LpOutcome::Unbounded => Err(Error::Internal("dual fractional homomorphism LP unbounded".into())),
    }
}

/// `LP^m(A)`: universe of size-`m` multisets over `A`, stored as sorted
/// index vectors in lexicographic order.
#[derive(Clone, Debug)]
pub struct PowerStructure {
    pub structure: ValuedStructure,
    pub m: usize,
    pub multisets: Vec<Vec<usize>>,
}

fn multisets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, m: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            cur.push(a);
            go(n, m, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, m, 0, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Distinct permutations of a sorted vector, in lexicographic order.
fn arrangements(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).expect("exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn power_lp(a: &ValuedStructure, m: usize, budget: u128) -> Result<PowerStructure> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let size = binomial((a.size() + m - 1) as u128, m as u128);
    if size > budget {
        return Err(Error::BudgetExceeded {
            what: format!("universe of LP^{m}"),
            needed: size,
            budget,
        });
    }
    let sets = multisets(a.size(), m);
    let names: Vec<String> = sets
        .iter()
        .map(|s| s.iter().map(|&x| a.universe()[x].as_str()).collect::<Vec<_>>().join("+"))
        .collect();
    let mut p = ValuedStructure::template_with_default(
        format!("LP{m}_{}", a.name()),
        a.signature().clone(),
        names,
        ExtRat::PosInf,
    )?;
    let arr: Vec<Vec<Vec<usize>>> = sets.iter().map(|s| arrangements(s)).collect();
    let scale = Rat::one() / int(m as i64);
    for sym in 0..a.signature().len() {
        let r = a.signature().arity(sym);
        let table = a.table(sym);
        for st in tuples(sets.len(), r) {
            let mut best = ExtRat::PosInf;
            let mut choice = vec![0usize; r];
            'outer: loop {
                let mut total = ExtRat::zero();
                for j in 0..m {
                    let column: Vec<usize> = (0..r)
                        .map(|i| if i == 0 { sets[st[0]][j] } else { arr[st[i]][choice[i]][j] })
                        .collect();
                    total = total + table.get(&column).clone();
                }
                if total < best {
                    best = total;
                }
                let mut i = r;
                loop {
                    if i <= 1 {
                        break 'outer;
                    }
                    i -= 1;
                    choice[i] += 1;
                    if choice[i] < arr[st[i]].len() {
                        break;
                    }
                    choice[i] = 0;
                }
            }
            p.set(sym, st, best.scale(&scale))?;
        }
    }
    Ok(PowerStructure {
        structure: p,
        m,
        multisets: sets,
    })
}

impl PowerStructure {
    /// The `m`-ary operation on `A` induced by a map from multisets.
    pub fn expand(&self, f: &[usize], base_size: usize) -> Vec<usize> {
        tuples(base_size, self.m)
            .map(|t| {
                let mut s = t.clone();
                s.sort_unstable();
                f[self.multisets.binary_search(&s).expect("multiset present")]
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SymPolyOutcome {
    pub power: PowerStructure,
    pub result: FracHomOutcome,
    /// For a counterexample `I*`: `(Opt(I*, LP^m(A)), Opt^BLP(I*, A))`.
    pub chain: Option<(ExtRat, ExtRat)>,
}

/// `LP^m(A) →_f B`, i.e. an `m`-ary symmetric fractional polymorphism.
pub fn sym_frac_polymorphism(
    a: &ValuedStructure,
    b: &ValuedStructure,
    m: usize,
    budget: u128,
) -> Result<SymPolyOutcome> {
    a.ensure_similar(b)?;
    let power = power_lp(a, m, DEFAULT_POWER_BUDGET)?;
    let result = frac_hom(&power.structure, b, budget)?;
    let chain = match &result {
        FracHomOutcome::Counterexample(c) => {
            let blp = opt_relaxation(&c.instance, a, Flavor::Blp)?.0;
            if c.opt_target <= c.opt_source || c.opt_source < blp {
                return Err(Error::Internal("symmetric polymorphism chain violated".into()));
            }
            Some((c.opt_source.clone(), blp))
        }
        FracHomOutcome::Distribution { .. } => None,
    };
    Ok(SymPolyOutcome { power, result, chain })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerCheckStatus {
    Consistent,
    Inconsistent,
    /// The power structure for `m*` exceeded the budget.
    Skipped,
}

#[derive(Clone, Debug)]
pub struct PowerReport {
    pub blp: ExtRat,
    pub m_star: usize,
    /// `Opt(I, LP^m(A))` for the tested `m`.
    pub per_m: Vec<(usize, ExtRat)>,
    pub status: PowerCheckStatus,
}

/// Least common multiple of the denominators of a point.
pub fn common_denominator(point: &[Rat]) -> usize {
    let l = point
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, x| acc.lcm(x.denom()));
    usize::try_from(l).unwrap_or(usize::MAX)
}

/// Checks `Opt(I, LP^m(A)) ≥ Opt^BLP(I, A)` for `m ≤ m*` and equality at
/// `m*`, the common denominator of an optimal BLP point.
pub fn blp_power_consistency(i: &ValuedStructure, a: &ValuedStructure, budget: u128) -> Result<PowerReport> {
    let (blp, point, _) = opt_relaxation(i, a, Flavor::Blp)?;
    let m_star = point.as_deref().map_or(1, common_denominator);
    let mut per_m = Vec::new();
    let mut status = PowerCheckStatus::Consistent;
    for m in 1..=m_star {
        let power = match power_lp(a, m, DEFAULT_POWER_BUDGET) {
            Ok(p) => p,
            Err(Error::BudgetExceeded { .. }) => {
                status = PowerCheckStatus::Skipped;
                break;
            }
            Err(e) => return Err(e),
        };
        let value = match opt_with_budget(i, &power.structure, budget) {
            Ok((v, _)) => v,
            Err(Error::BudgetExceeded { .. }) => {
                status = PowerCheckStatus::Skipped;
                break;
            }
            Err(e) => return Err(e),
        };
        let ok = if m == m_star { value == blp } else { value >= blp };
        if !ok {
            status = PowerCheckStatus::Inconsistent;
        }
        per_m.push((m, value));
    }
    Ok(PowerReport {
        blp,
        m_star,
        per_m,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::model::{opt, parse_structure};

    const A: &str = "signature\n R 2\ntemplate A\n universe 0 1\n R (0,0) 3\n R (0,1) 2\n R (1,0) 2\n R (1,1) 3\n";
    const B: &str = "signature\n R 2\ntemplate B\n universe 0 1\n R (0,0) 3\n R (0,1) 0\n R (1,0) 0\n R (1,1) 3\n";
    const I: &str = "signature\n R 2\ninstance I\n universe v\n R (v,v) 1\n";

    fn s(t: &str) -> ValuedStructure {
        parse_structure(t).unwrap()
    }

    #[test]
    fn identity_is_a_fractional_homomorphism() {
        let out = frac_hom(&s(A), &s(B), DEFAULT_MAP_BUDGET).unwrap();
        let mu = out.distribution().unwrap();
        assert_eq!(mu, &MapDistribution::identity(Direction::FractionalHom, 2));
        let same = frac_hom(&s(A), &s(A), DEFAULT_MAP_BUDGET).unwrap();
        assert!(verify_frac_hom(&s(A), &s(A), same.distribution().unwrap()).unwrap());
    }

    #[test]
    fn reversed_pair_yields_a_counterexample() {
        let out = frac_hom(&s(B), &s(A), DEFAULT_MAP_BUDGET).unwrap();
        let c = out.counterexample().unwrap();
        assert!(c.opt_target > c.opt_source);
        assert_eq!(opt(&c.instance, &s(B)).unwrap().0, c.opt_source);
    }

    #[test]
    fn constant_map_is_rejected() {
        let mu = MapDistribution::point_mass(Direction::FractionalHom, vec![0, 0], 2);
        assert!(!verify_frac_hom(&s(A), &s(B), &mu).unwrap());
        let e = s("signature\ntemplate E\n universe 0\n");
        let mu = MapDistribution::identity(Direction::FractionalHom, 1);
        assert!(verify_frac_hom(&e, &e, &mu).unwrap());
    }

    #[test]
    fn infinite_costs_trigger_perturbation() {
        // No map from A can avoid the infinite diagonal of C on R(x,x).
        let a = s("signature\n R 2\ntemplate A\n universe 0 1\n R (0,0) 0\n R (1,1) 0\n default R inf\n");
        let c = s("signature\n R 2\ntemplate C\n universe 0\n R (0,0) inf\n");
        let out = frac_hom(&a, &c, DEFAULT_MAP_BUDGET).unwrap();
        let cex = out.counterexample().unwrap();
        assert!(cex.perturbed);
        assert_eq!(cex.opt_target, ExtRat::PosInf);
    }

    #[test]
    fn distributions_validate() {
        assert!(MapDistribution::new(Direction::FractionalHom, 1, 1, vec![(vec![0], rat(1, 2))]).is_err());
        assert!(MapDistribution::new(Direction::FractionalHom, 1, 1, vec![(vec![1], Rat::one())]).is_err());
        assert!(MapDistribution::new(Direction::FractionalHom, 2, 1, vec![(vec![0], Rat::one())]).is_err());
        let d = MapDistribution::new(
            Direction::FractionalHom,
            1,
            2,
            vec![(vec![1], rat(1, 2)), (vec![0], rat(1, 4)), (vec![1], rat(1, 4))],
        )
        .unwrap();
        assert_eq!(d.support(), &[(vec![0], rat(1, 4)), (vec![1], rat(3, 4))]);
    }

    #[test]
    fn dual_fractional_homomorphisms() {
        let i = s(I);
        let id = MapDistribution::identity(Direction::DualFractionalHom, 1);
        assert!(verify_dual_frac_hom(&i, &i, &id).unwrap());
        let heavy = s("signature\n R 2\ninstance H\n universe v\n R (v,v) 2\n");
        assert!(dual_frac_hom(&heavy, &i, DEFAULT_MAP_BUDGET).unwrap().is_none());
        let eta = dual_frac_hom(&i, &heavy, DEFAULT_MAP_BUDGET).unwrap().unwrap();
        assert!(verify_dual_frac_hom(&i, &heavy, &eta).unwrap());
    }

    #[test]
    fn power_structure_values() {
        let a = s(A);
        let p1 = power_lp(&a, 1, DEFAULT_POWER_BUDGET).unwrap();
        assert_eq!(p1.structure.table(0).values(), a.table(0).values());
        let p2 = power_lp(&a, 2, DEFAULT_POWER_BUDGET).unwrap();
        assert_eq!(p2.structure.size(), 3);
        let mixed = p2.multisets.binary_search(&vec![0, 1]).unwrap();
        let zeros = p2.multisets.binary_search(&vec![0, 0]).unwrap();
        assert_eq!(p2.structure.value(0, &[mixed, mixed]), ExtRat::from_int(2));
        assert_eq!(p2.structure.value(0, &[zeros, zeros]), ExtRat::from_int(3));
        assert_eq!(p2.structure.universe()[mixed], "0+1");
        assert!(power_lp(&a, 20, DEFAULT_POWER_BUDGET).is_err());
    }

    #[test]
    fn arrangements_are_distinct_permutations() {
        assert_eq!(arrangements(&[0, 0, 1]), vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(arrangements(&[]), vec![Vec::<usize>::new()]);
        assert_eq!(multisets(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn symmetric_polymorphisms_of_ex1() {
        let (a, b) = (s(A), s(B));
        let one = sym_frac_polymorphism(&a, &b, 1, DEFAULT_MAP_BUDGET).unwrap();
        assert_eq!(
            one.result.distribution().unwrap(),
            &MapDistribution::identity(Direction::FractionalHom, 2)
        );
        let two = sym_frac_polymorphism(&a, &b, 2, DEFAULT_MAP_BUDGET).unwrap();
        let c = two.result.counterexample().unwrap();
        assert!(c.opt_target > c.opt_source);
        assert_eq!(c.instance.universe(), two.power.structure.universe());
        let (lp_val, blp) = two.chain.unwrap();
        assert!(lp_val >= blp);
    }

    #[test]
    fn blp_power_consistency_on_ex1() {
        let r = blp_power_consistency(&s(I), &s(A), DEFAULT_OPT_BUDGET).unwrap();
        assert_eq!(r.m_star, 2);
        assert_eq!(r.blp, ExtRat::from_int(2));
        assert_eq!(r.per_m, vec![(1, ExtRat::from_int(3)), (2, ExtRat::from_int(2))]);
        assert_eq!(r.status, PowerCheckStatus::Consistent);
    }
}
