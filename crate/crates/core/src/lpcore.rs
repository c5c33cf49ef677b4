//! Exact rational linear programming: two-phase simplex with Bland's rule,
//! optimal points and Farkas infeasibility certificates.
//!
//! Certificate convention: for an infeasible program with rows
//! `a_i · x (≤ | = | ≥) b_i`, the multipliers `λ` satisfy `λ_i ≤ 0` on `≤`
//! rows, `λ_i ≥ 0` on `≥` rows, `Σ_i λ_i a_ij ≤ 0` for every non-negative
//! variable, `= 0` for every free variable, and `Σ_i λ_i b_i > 0`. Any
//! feasible `x` would give `0 ≥ Σ_i λ_i a_i·x ≥ Σ_i λ_i b_i > 0`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{fmt_rat, Rat};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub nonneg: bool,
}

/// Sparse row, entries sorted by variable index with no zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl Row {
    pub fn dot(&self, point: &[Rat]) -> Rat {
        self.coeffs
            .iter()
            .fold(Rat::zero(), |acc, (j, a)| acc + a * &point[*j])
    }
}

fn normalize(coeffs: impl IntoIterator<Item = (usize, Rat)>) -> Vec<(usize, Rat)> {
    let mut merged: BTreeMap<usize, Rat> = BTreeMap::new();
    for (j, a) in coeffs {
        *merged.entry(j).or_insert_with(Rat::zero) += a;
    }
    merged.into_iter().filter(|(_, a)| !a.is_zero()).collect()
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
    rows: Vec<Row>,
    sense: Sense,
    objective: Vec<(usize, Rat)>,
}

impl PartialEq for LinearProgram {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
            && self.rows == other.rows
            && self.sense == other.sense
            && self.objective == other.objective
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            vars: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            sense,
            objective: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, nonneg: bool) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::MalformedProgram(format!("duplicate variable {name}")));
        }
        let j = self.vars.len();
        self.index.insert(name.clone(), j);
        self.vars.push(Variable { name, nonneg });
        Ok(j)
    }

    fn check_indices(&self, coeffs: &[(usize, Rat)]) -> Result<()> {
        match coeffs.iter().find(|(j, _)| *j >= self.vars.len()) {
            Some((j, _)) => Err(Error::MalformedProgram(format!("no variable with index {j}"))),
            None => Ok(()),
        }
    }

    pub fn add_row(
        &mut self,
        coeffs: impl IntoIterator<Item = (usize, Rat)>,
        relation: Relation,
        rhs: Rat,
    ) -> Result<usize> {
        let coeffs = normalize(coeffs);
        self.check_indices(&coeffs)?;
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, coeffs: impl IntoIterator<Item = (usize, Rat)>) -> Result<()> {
        let coeffs = normalize(coeffs);
        self.check_indices(&coeffs)?;
        self.objective = coeffs;
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[(usize, Rat)] {
        &self.objective
    }

    pub fn objective_value(&self, point: &[Rat]) -> Rat {
        self.objective
            .iter()
            .fold(Rat::zero(), |acc, (j, c)| acc + c * &point[*j])
    }

    fn linear_text(&self, coeffs: &[(usize, Rat)]) -> String {
        if coeffs.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (j, a)) in coeffs.iter().enumerate() {
            let name = &self.vars[*j].name;
            if k == 0 {
                if a.is_negative() {
                    out.push_str("- ");
                }
            } else {
                out.push_str(if a.is_negative() { " - " } else { " + " });
            }
            let _ = write!(out, "{} {name}", fmt_rat(&a.abs()));
        }
        out
    }

    /// Plain inequality form, one statement per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Min => "minimize",
            Sense::Max => "maximize",
        };
        let _ = writeln!(out, "{sense} {}", self.linear_text(&self.objective));
        out.push_str("subject to\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "  c{i}: {} {} {}",
                self.linear_text(&row.coeffs),
                row.relation.symbol(),
                fmt_rat(&row.rhs)
            );
        }
        let (nonneg, free): (Vec<&Variable>, Vec<&Variable>) =
            self.vars.iter().partition(|v| v.nonneg);
        if !nonneg.is_empty() {
            let names: Vec<&str> = nonneg.iter().map(|v| v.name.as_str()).collect();
            let _ = writeln!(out, "nonneg {}", names.join(" "));
        }
        if !free.is_empty() {
            let names: Vec<&str> = free.iter().map(|v| v.name.as_str()).collect();
            let _ = writeln!(out, "free {}", names.join(" "));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let lin = |coeffs: &[(usize, Rat)]| -> Value {
            Value::Array(
                coeffs
                    .iter()
                    .map(|(j, a)| json!([self.vars[*j].name, fmt_rat(a)]))
                    .collect(),
            )
        };
        json!({
            "sense": match self.sense { Sense::Min => "min", Sense::Max => "max" },
            "variables": self.vars.iter().map(|v| json!({"name": v.name, "nonneg": v.nonneg})).collect::<Vec<_>>(),
            "objective": lin(&self.objective),
            "rows": self.rows.iter().map(|r| json!({
                "coeffs": lin(&r.coeffs),
                "relation": r.relation.symbol(),
                "rhs": fmt_rat(&r.rhs),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rat, point: Vec<Rat> },
    Infeasible(Vec<Rat>),
    Unbounded,
}

struct Tableau {
    /// Rows of `B⁻¹[A | b]`.
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    /// Reduced costs, last entry is minus the current objective.
    cost: Vec<Rat>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x /= &p;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.ncols).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |row: &mut Vec<Rat>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost);
        self.basis[r] = c;
    }

    /// Bland's rule. Returns false when unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.ncols).find(|&j| allowed[j] && self.cost[j].is_negative());
            let Some(c) = entering else {
                return true;
            };
            let mut best: Option<(usize, Rat)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / &row[c];
                let better = match &best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        self.rows.remove(r);
        self.basis.remove(r);
    }
}

/// Solves the program exactly. Deterministic: the same program yields the
/// same outcome and point.
pub fn solve_lp(lp: &LinearProgram) -> LpOutcome {
    let m = lp.rows.len();
    // Structural columns: one per non-negative variable, two per free one.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.vars.len());
    let mut ncols = 0;
    for v in &lp.vars {
        if v.nonneg {
            col_of.push((ncols, None));
            ncols += 1;
        } else {
            col_of.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let mut slack_of: Vec<Option<(usize, Rat)>> = Vec::with_capacity(m);
    for row in &lp.rows {
        match row.relation {
            Relation::Eq => slack_of.push(None),
            Relation::Le => {
                slack_of.push(Some((ncols, Rat::from_integer(1.into()))));
                ncols += 1;
            }
            Relation::Ge => {
                slack_of.push(Some((ncols, Rat::from_integer((-1).into()))));
                ncols += 1;
            }
        }
    }
    let first_artificial = ncols;
    ncols += m;

    let one = Rat::from_integer(1.into());
    let mut signs = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let sign = if row.rhs.is_negative() { -one.clone() } else { one.clone() };
        let mut t = vec![Rat::zero(); ncols + 1];
        for (j, a) in &row.coeffs {
            let (p, q) = col_of[*j];
            t[p] = &sign * a;
            if let Some(q) = q {
                t[q] = -(&sign * a);
            }
        }
        if let Some((s, a)) = &slack_of[i] {
            t[*s] = &sign * a;
        }
        t[first_artificial + i] = one.clone();
        t[ncols] = &sign * &row.rhs;
        signs.push(sign);
        rows.push(t);
    }
    let mut cost = vec![Rat::zero(); ncols + 1];
    for j in first_artificial..ncols {
        cost[j] = one.clone();
    }
    for row in &rows {
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                cost[j] -= x;
            }
        }
    }
    let mut tab = Tableau {
        rows,
        basis: (first_artificial..ncols).collect(),
        cost,
        ncols,
    };
    let all = vec![true; ncols];
    let bounded = tab.optimize(&all);
    debug_assert!(bounded, "phase one is bounded below by zero");

    if tab.cost[ncols].is_negative() {
        // Phase-one dual y_i = 1 - (reduced cost of artificial i).
        let cert = (0..m)
            .map(|i| &signs[i] * (&one - &tab.cost[first_artificial + i]))
            .collect();
        return LpOutcome::Infeasible(cert);
    }

    // Drive zero-level artificials out of the basis or drop redundant rows.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= first_artificial {
            match (0..first_artificial).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(c) => {
                    tab.pivot(r, c);
                    r += 1;
                }
                None => tab.remove_row(r),
            }
        } else {
            r += 1;
        }
    }

    let mut c = vec![Rat::zero(); ncols + 1];
    for (j, a) in &lp.objective {
        let a = match lp.sense {
            Sense::Min => a.clone(),
            Sense::Max => -a.clone(),
        };
        let (p, q) = col_of[*j];
        if let Some(q) = q {
            c[q] = -a.clone();
        }
        c[p] = a;
    }
    let mut cost = c.clone();
    for (r, row) in tab.rows.iter().enumerate() {
        let cb = &c[tab.basis[r]];
        if cb.is_zero() {
            continue;
        }
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                cost[j] -= cb * x;
            }
        }
    }
    tab.cost = cost;
    let allowed: Vec<bool> = (0..ncols).map(|j| j < first_artificial).collect();
    if !tab.optimize(&allowed) {
        return LpOutcome::Unbounded;
    }

    let mut col_value = vec![Rat::zero(); first_artificial];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < first_artificial {
            col_value[b] = tab.rows[r][ncols].clone();
        }
    }
    let point: Vec<Rat> = col_of
        .iter()
        .map(|&(p, q)| match q {
            None => col_value[p].clone(),
            Some(q) => &col_value[p] - &col_value[q],
        })
        .collect();
    LpOutcome::Optimal {
        value: lp.objective_value(&point),
        point,
    }
}

/// Exact feasibility check of a point.
pub fn verify_point(lp: &LinearProgram, point: &[Rat]) -> Result<bool> {
    if point.len() != lp.vars.len() {
        return Err(Error::DimensionMismatch {
            expected: lp.vars.len(),
            found: point.len(),
        });
    }
    if lp
        .vars
        .iter()
        .zip(point)
        .any(|(v, x)| v.nonneg && x.is_negative())
    {
        return Ok(false);
    }
    Ok(lp.rows.iter().all(|row| {
        let lhs = row.dot(point);
        match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Eq => lhs == row.rhs,
            Relation::Ge => lhs >= row.rhs,
        }
    }))
}

/// Exact check of a Farkas certificate (see the module docs for the sign
/// convention).
pub fn verify_certificate(lp: &LinearProgram, cert: &[Rat]) -> Result<bool> {
    if cert.len() != lp.rows.len() {
        return Err(Error::DimensionMismatch {
            expected: lp.rows.len(),
            found: cert.len(),
        });
    }
    for (row, l) in lp.rows.iter().zip(cert) {
        let ok = match row.relation {
            Relation::Le => !l.is_positive(),
            Relation::Ge => !l.is_negative(),
            Relation::Eq => true,
        };
        if !ok {
            return Ok(false);
        }
    }
    let mut combo = vec![Rat::zero(); lp.vars.len()];
    let mut rhs = Rat::zero();
    for (row, l) in lp.rows.iter().zip(cert) {
        if l.is_zero() {
            continue;
        }
        for (j, a) in &row.coeffs {
            combo[*j] += l * a;
        }
        rhs += l * &row.rhs;
    }
    let columns_ok = lp.vars.iter().zip(&combo).all(|(v, s)| {
        if v.nonneg {
            !s.is_positive()
        } else {
            s.is_zero()
        }
    });
    Ok(columns_ok && rhs.is_positive())
}
