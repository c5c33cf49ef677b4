//! BLP, SA¹ and the reduced program SA¹_≡, plus the LP decision rule.
//!
//! All three programs are assembled from per-class pieces: a normalization
//! row per variable class and, per constraint class, its marginal rows, its
//! surviving tuple variables and its unit objective terms. BLP and SA¹ use
//! singleton classes. The distributed simulator rebuilds the reduced program
//! from the same pieces, keyed by anonymous identifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::arith::{fmt_rat, int, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::lpcore::{solve_lp, LinearProgram, LpOutcome, Relation, Sense};
use crate::model::{constraints, opt, tuples, Constraint, ValuedStructure};
use crate::wl::{refine, FactorGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Blp,
    Sa1,
    Sa1Reduced,
}

impl Flavor {
    fn eliminates_repetitions(self) -> bool {
        !matches!(self, Flavor::Blp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Blp => "blp",
            Flavor::Sa1 => "sa1",
            Flavor::Sa1Reduced => "sa1-reduced",
        }
    }
}

/// A logical variable: `p_[v](a)` or `p_[R(v)](ā)` for a class key `K`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassVar<K> {
    Var { class: K, value: usize },
    Con { class: K, tuple: Vec<usize> },
}

impl<K> ClassVar<K> {
    pub fn map_class<L>(&self, f: impl Fn(&K) -> L) -> ClassVar<L> {
        match self {
            ClassVar::Var { class, value } => ClassVar::Var {
                class: f(class),
                value: *value,
            },
            ClassVar::Con { class, tuple } => ClassVar::Con {
                class: f(class),
                tuple: tuple.clone(),
            },
        }
    }
}

/// A row over logical variables, coefficients sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassRow<K> {
    pub coeffs: Vec<(ClassVar<K>, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl<K: Ord + Clone> ClassRow<K> {
    fn new(coeffs: Vec<(ClassVar<K>, Rat)>, relation: Relation, rhs: Rat) -> Self {
        let mut merged: BTreeMap<ClassVar<K>, Rat> = BTreeMap::new();
        for (v, a) in coeffs {
            *merged.entry(v).or_insert_with(Rat::zero) += a;
        }
        ClassRow {
            coeffs: merged.into_iter().filter(|(_, a)| !a.is_zero()).collect(),
            relation,
            rhs,
        }
    }

    pub fn map_class<L: Ord + Clone>(&self, f: impl Fn(&K) -> L) -> ClassRow<L> {
        ClassRow::new(
            self.coeffs.iter().map(|(v, a)| (v.map_class(&f), a.clone())).collect(),
            self.relation,
            self.rhs.clone(),
        )
    }
}

/// `Σ_a p_[v](a) = 1`.
pub fn normalization_row<K: Ord + Clone>(class: K, template_size: usize) -> ClassRow<K> {
    ClassRow::new(
        (0..template_size)
            .map(|a| {
                (
                    ClassVar::Var {
                        class: class.clone(),
                        value: a,
                    },
                    Rat::one(),
                )
            })
            .collect(),
        Relation::Eq,
        Rat::one(),
    )
}

/// What one constraint contributes, as seen from its own position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintFacts<K> {
    /// Surviving tuple variables, in tuple order.
    pub vars: Vec<ClassVar<K>>,
    /// Marginal rows, one per (position, value).
    pub rows: Vec<ClassRow<K>>,
    /// `weight · R^A(ā)` per surviving tuple with a nonzero product.
    pub objective: Vec<(ClassVar<K>, Rat)>,
}

/// Local program pieces of a constraint `R(v̄)` of class `class` with weight
/// `weight`. `position_classes[i]` is the class of `v̄[i]`, and
/// `pattern[i] = pattern[j]` iff `v̄[i] = v̄[j]`.
pub fn constraint_facts<K: Ord + Clone>(
    class: &K,
    symbol: usize,
    weight: &Rat,
    position_classes: &[K],
    pattern: &[usize],
    template: &ValuedStructure,
    flavor: Flavor,
) -> ConstraintFacts<K> {
    let arity = position_classes.len();
    let n = template.size();
    let mut vars = Vec::new();
    let mut objective = Vec::new();
    let mut surviving: Vec<Vec<usize>> = Vec::new();
    for t in tuples(n, arity) {
        let cost = template.value(symbol, &t);
        let ExtRat::Finite(cost) = cost else {
            continue;
        };
        if flavor.eliminates_repetitions()
            && (0..arity).any(|i| (0..arity).any(|j| pattern[i] == pattern[j] && t[i] != t[j]))
        {
            continue;
        }
        let var = ClassVar::Con {
            class: class.clone(),
            tuple: t.clone(),
        };
        let unit = weight * &cost;
        if !unit.is_zero() {
            objective.push((var.clone(), unit));
        }
        vars.push(var);
        surviving.push(t);
    }
    let mut rows = Vec::with_capacity(arity * n);
    for i in 0..arity {
        for a in 0..n {
            let mut coeffs: Vec<(ClassVar<K>, Rat)> = surviving
                .iter()
                .filter(|t| t[i] == a)
                .map(|t| {
                    (
                        ClassVar::Con {
                            class: class.clone(),
                            tuple: t.clone(),
                        },
                        Rat::one(),
                    )
                })
                .collect();
            coeffs.push((
                ClassVar::Var {
                    class: position_classes[i].clone(),
                    value: a,
                },
                -Rat::one(),
            ));
            rows.push(ClassRow::new(coeffs, Relation::Eq, Rat::zero()));
        }
    }
    ConstraintFacts {
        vars,
        rows,
        objective,
    }
}

/// Everything needed to assemble a program over classes `0..`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramParts {
    pub flavor: Flavor,
    pub template_size: usize,
    pub var_classes: usize,
    /// Per constraint class: its coefficient `k` and its pieces.
    pub con_classes: Vec<(usize, ConstraintFacts<usize>)>,
}

/// Iterated-degree classes behind a reduced program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classes {
    /// Class of each variable of `I`.
    pub var_class: Vec<usize>,
    /// Class of each constraint, in `constraints(I)` order.
    pub con_class: Vec<usize>,
    pub var_encodings: Vec<String>,
    pub con_encodings: Vec<String>,
    pub var_sizes: Vec<usize>,
    /// `k_[R(v)]`: number of constraints per constraint class.
    pub k: Vec<usize>,
    /// Least member of each class.
    pub var_reps: Vec<usize>,
    pub con_reps: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RelaxationProgram {
    pub flavor: Flavor,
    pub lp: LinearProgram,
    /// Constraints of `I` (BLP, SA¹) or class representatives (reduced).
    pub constraints: Vec<Constraint>,
    pub classes: Option<Classes>,
    var_cols: Vec<Vec<usize>>,
    con_cols: Vec<BTreeMap<Vec<usize>, usize>>,
}

fn var_name(flavor: Flavor, v: &ClassVar<usize>) -> String {
    let (x, c) = match flavor {
        Flavor::Sa1Reduced => ('X', 'C'),
        _ => ('x', 'c'),
    };
    match v {
        ClassVar::Var { class, value } => format!("{x}{class}:{value}"),
        ClassVar::Con { class, tuple } => {
            let t: Vec<String> = tuple.iter().map(usize::to_string).collect();
            format!("{c}{class}:{}", t.join("."))
        }
    }
}

/// Builds the program from its parts. Variables follow [`ClassVar`] order
/// and rows are the sorted, duplicate-free union of all pieces.
pub fn assemble(parts: &ProgramParts) -> Result<(LinearProgram, Vec<Vec<usize>>, Vec<BTreeMap<Vec<usize>, usize>>)> {
    let mut keys: BTreeSet<ClassVar<usize>> = BTreeSet::new();
    for class in 0..parts.var_classes {
        for value in 0..parts.template_size {
            keys.insert(ClassVar::Var { class, value });
        }
    }
    let mut rows: BTreeSet<ClassRow<usize>> = (0..parts.var_classes)
        .map(|c| normalization_row(c, parts.template_size))
        .collect();
    let mut objective: BTreeMap<ClassVar<usize>, Rat> = BTreeMap::new();
    for (k, facts) in &parts.con_classes {
        keys.extend(facts.vars.iter().cloned());
        rows.extend(facts.rows.iter().cloned());
        for (v, unit) in &facts.objective {
            *objective.entry(v.clone()).or_insert_with(Rat::zero) += int(*k as i64) * unit;
        }
    }
    let mut lp = LinearProgram::new(Sense::Min);
    let mut index: BTreeMap<ClassVar<usize>, usize> = BTreeMap::new();
    let mut var_cols = vec![Vec::with_capacity(parts.template_size); parts.var_classes];
    let mut con_cols = vec![BTreeMap::new(); parts.con_classes.len()];
    for key in &keys {
        let j = lp.add_var(var_name(parts.flavor, key), true)?;
        match key {
            ClassVar::Var { class, .. } => var_cols[*class].push(j),
            ClassVar::Con { class, tuple } => {
                con_cols
                    .get_mut(*class)
                    .ok_or_else(|| Error::Internal(format!("constraint class {class} out of range")))?
                    .insert(tuple.clone(), j);
            }
        }
        index.insert(key.clone(), j);
    }
    let col = |v: &ClassVar<usize>| -> Result<usize> {
        index
            .get(v)
            .copied()
            .ok_or_else(|| Error::Internal(format!("row mentions unknown variable {v:?}")))
    };
    for row in &rows {
        let coeffs = row
            .coeffs
            .iter()
            .map(|(v, a)| Ok((col(v)?, a.clone())))
            .collect::<Result<Vec<_>>>()?;
        lp.add_row(coeffs, row.relation, row.rhs.clone())?;
    }
    let obj = objective
        .iter()
        .map(|(v, a)| Ok((col(v)?, a.clone())))
        .collect::<Result<Vec<_>>>()?;
    lp.set_objective(obj)?;
    Ok((lp, var_cols, con_cols))
}

fn pattern_of(c: &Constraint) -> Vec<usize> {
    c.vars
        .iter()
        .map(|v| c.vars.iter().position(|w| w == v).expect("present"))
        .collect()
}

/// BLP or SA¹ of `(I, A)`.
pub fn build_relaxation(
    instance: &ValuedStructure,
    template: &ValuedStructure,
    flavor: Flavor,
) -> Result<RelaxationProgram> {
    if flavor == Flavor::Sa1Reduced {
        return build_reduced(instance, template);
    }
    instance.ensure_similar(template)?;
    let cs = constraints(instance)?;
    let con_classes = cs
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let facts = constraint_facts(
                &ci,
                c.symbol,
                &c.weight,
                &c.vars,
                &pattern_of(c),
                template,
                flavor,
            );
            (1, facts)
        })
        .collect();
    let parts = ProgramParts {
        flavor,
        template_size: template.size(),
        var_classes: instance.size(),
        con_classes,
    };
    let (lp, var_cols, con_cols) = assemble(&parts)?;
    Ok(RelaxationProgram {
        flavor,
        lp,
        constraints: cs,
        classes: None,
        var_cols,
        con_cols,
    })
}

/// Iterated-degree classes of an instance, numbered in canonical order.
pub fn classes_of(instance: &ValuedStructure) -> Result<Classes> {
    let g = FactorGraph::new(instance)?;
    let p = refine(&g);
    let n = instance.size();
    let var_colors: BTreeSet<usize> = p.colors[..n].iter().copied().collect();
    let con_colors: BTreeSet<usize> = p.colors[n..].iter().copied().collect();
    let var_rank: BTreeMap<usize, usize> = var_colors.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let con_rank: BTreeMap<usize, usize> = con_colors.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let var_class: Vec<usize> = p.colors[..n].iter().map(|c| var_rank[c]).collect();
    let con_class: Vec<usize> = p.colors[n..].iter().map(|c| con_rank[c]).collect();
    let mut var_sizes = vec![0; var_colors.len()];
    let mut var_reps = vec![usize::MAX; var_colors.len()];
    for (v, &c) in var_class.iter().enumerate() {
        var_sizes[c] += 1;
        var_reps[c] = var_reps[c].min(v);
    }
    let mut k = vec![0; con_colors.len()];
    let mut con_reps = vec![usize::MAX; con_colors.len()];
    for (ci, &c) in con_class.iter().enumerate() {
        k[c] += 1;
        con_reps[c] = con_reps[c].min(ci);
    }
    Ok(Classes {
        var_class,
        con_class,
        var_encodings: var_colors.iter().map(|&c| p.encodings[c].clone()).collect(),
        con_encodings: con_colors.iter().map(|&c| p.encodings[c].clone()).collect(),
        var_sizes,
        k,
        var_reps,
        con_reps,
    })
}

/// SA¹_≡: one variable per class, rows instantiated on class representatives
/// and deduplicated, objective weighted by class sizes.
pub fn build_reduced(instance: &ValuedStructure, template: &ValuedStructure) -> Result<RelaxationProgram> {
    instance.ensure_similar(template)?;
    let cs = constraints(instance)?;
    let classes = classes_of(instance)?;
    let con_classes = classes
        .con_reps
        .iter()
        .enumerate()
        .map(|(class, &ci)| {
            let c = &cs[ci];
            let position_classes: Vec<usize> = c.vars.iter().map(|&v| classes.var_class[v]).collect();
            let facts = constraint_facts(
                &class,
                c.symbol,
                &c.weight,
                &position_classes,
                &pattern_of(c),
                template,
                Flavor::Sa1Reduced,
            );
            (classes.k[class], facts)
        })
        .collect();
    let parts = ProgramParts {
        flavor: Flavor::Sa1Reduced,
        template_size: template.size(),
        var_classes: classes.var_sizes.len(),
        con_classes,
    };
    let (lp, var_cols, con_cols) = assemble(&parts)?;
    Ok(RelaxationProgram {
        flavor: Flavor::Sa1Reduced,
        lp,
        constraints: classes.con_reps.iter().map(|&ci| cs[ci].clone()).collect(),
        classes: Some(classes),
        var_cols,
        con_cols,
    })
}

impl RelaxationProgram {
    /// Column of `p_v(a)` (`v` a variable, or a variable class when reduced).
    pub fn var_col(&self, v: usize, a: usize) -> usize {
        self.var_cols[v][a]
    }

    /// Column of `p_c(ā)`, `None` when eliminated.
    pub fn con_col(&self, c: usize, tuple: &[usize]) -> Option<usize> {
        self.con_cols[c].get(tuple).copied()
    }

    pub fn p_var(&self, point: &[Rat], v: usize, a: usize) -> Rat {
        point[self.var_col(v, a)].clone()
    }

    /// Eliminated variables read as 0.
    pub fn p_con(&self, point: &[Rat], c: usize, tuple: &[usize]) -> Rat {
        self.con_col(c, tuple)
            .map_or_else(Rat::zero, |j| point[j].clone())
    }

    pub fn num_var_blocks(&self) -> usize {
        self.var_cols.len()
    }

    pub fn num_con_blocks(&self) -> usize {
        self.con_cols.len()
    }

    /// Surviving tuples of a constraint block.
    pub fn surviving(&self, c: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.con_cols[c].keys()
    }

    /// Optimum (`inf` when infeasible) and an optimal point.
    pub fn solve(&self) -> Result<(ExtRat, Option<Vec<Rat>>)> {
        match solve_lp(&self.lp) {
            LpOutcome::Optimal { value, point } => Ok((ExtRat::Finite(value), Some(point))),
            LpOutcome::Infeasible(_) => Ok((ExtRat::PosInf, None)),
            LpOutcome::Unbounded => Err(Error::Internal(format!(
                "{} relaxation reported unbounded",
                self.flavor.name()
            ))),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "flavor": self.flavor.name(),
            "program": self.lp.to_json(),
        });
        if let Some(c) = &self.classes {
            out["classes"] = json!({
                "variable_classes": c.var_sizes.len(),
                "constraint_classes": c.k.len(),
                "variable_class_of": c.var_class,
                "constraint_class_of": c.con_class,
                "k": c.k,
            });
        }
        out
    }

    pub fn point_json(&self, point: &[Rat]) -> Value {
        let map: serde_json::Map<String, Value> = self
            .lp
            .vars()
            .iter()
            .zip(point)
            .map(|(v, x)| (v.name.clone(), Value::String(fmt_rat(x))))
            .collect();
        Value::Object(map)
    }
}

/// `Opt^L(I, A)` with an optimal point when feasible.
pub fn opt_relaxation(
    instance: &ValuedStructure,
    template: &ValuedStructure,
    flavor: Flavor,
) -> Result<(ExtRat, Option<Vec<Rat>>, RelaxationProgram)> {
    let prog = build_relaxation(instance, template, flavor)?;
    let (value, point) = prog.solve()?;
    Ok((value, point, prog))
}

/// Averages a point of the full SA¹ program over classes, giving a point
/// of the reduced program.
pub fn average_to_reduced(
    full: &RelaxationProgram,
    point: &[Rat],
    reduced: &RelaxationProgram,
) -> Result<Vec<Rat>> {
    let classes = reduced
        .classes
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("not a reduced program".into()))?;
    let mut out = vec![Rat::zero(); reduced.lp.vars().len()];
    for (v, &c) in classes.var_class.iter().enumerate() {
        let share = Rat::one() / int(classes.var_sizes[c] as i64);
        for (a, &j) in reduced.var_cols[c].iter().enumerate() {
            out[j] += full.p_var(point, v, a) * &share;
        }
    }
    for (ci, &c) in classes.con_class.iter().enumerate() {
        let share = Rat::one() / int(classes.k[c] as i64);
        for (t, &j) in &reduced.con_cols[c] {
            out[j] += full.p_con(point, ci, t) * &share;
        }
    }
    Ok(out)
}

/// Copies a reduced point onto every class member.
pub fn lift_reduced(
    reduced: &RelaxationProgram,
    point: &[Rat],
    full: &RelaxationProgram,
) -> Result<Vec<Rat>> {
    let classes = reduced
        .classes
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("not a reduced program".into()))?;
    let mut out = vec![Rat::zero(); full.lp.vars().len()];
    for (v, &c) in classes.var_class.iter().enumerate() {
        for (a, &j) in full.var_cols[v].iter().enumerate() {
            out[j] = reduced.p_var(point, c, a);
        }
    }
    for (ci, &c) in classes.con_class.iter().enumerate() {
        for (t, &j) in &full.con_cols[ci] {
            out[j] = reduced.p_con(point, c, t);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Blp,
    Sa1,
    Sa1Reduced,
    Oracle,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blp" => Ok(Method::Blp),
            "sa1" => Ok(Method::Sa1),
            "sa1-reduced" => Ok(Method::Sa1Reduced),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown method {other}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Blp => "blp",
            Method::Sa1 => "sa1",
            Method::Sa1Reduced => "sa1-reduced",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "Yes",
            Verdict::No => "No",
        })
    }
}

impl Verdict {
    pub fn from_bound(value: &ExtRat, tau: &Rat) -> Verdict {
        if *value <= ExtRat::Finite(tau.clone()) {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

/// The optimum a method compares against the threshold.
pub fn method_optimum(instance: &ValuedStructure, template: &ValuedStructure, method: Method) -> Result<ExtRat> {
    match method {
        Method::Oracle => Ok(opt(instance, template)?.0),
        Method::Blp => Ok(opt_relaxation(instance, template, Flavor::Blp)?.0),
        Method::Sa1 => Ok(opt_relaxation(instance, template, Flavor::Sa1)?.0),
        Method::Sa1Reduced => Ok(opt_relaxation(instance, template, Flavor::Sa1Reduced)?.0),
    }
}

/// Yes iff the chosen optimum over `A` is at most `τ`.
pub fn decide(
    a: &ValuedStructure,
    b: &ValuedStructure,
    instance: &ValuedStructure,
    tau: &Rat,
    method: Method,
) -> Result<Verdict> {
    a.ensure_similar(b)?;
    Ok(Verdict::from_bound(&method_optimum(instance, a, method)?, tau))
}
