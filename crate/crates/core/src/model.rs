//! Valued signatures and structures, the line-oriented file format, and the
//! brute-force `Val` / `Opt` oracle.
//!
//! A structure plays one of two roles. Templates carry arbitrary costs in
//! `Q ∪ {∞}`; instances carry non-negative finite weights, and their
//! positive-weight tuples are the constraints.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Signed;

use crate::arith::{fmt_rat, ExtRat, Rat};
use crate::error::{Error, Result};

mod generators;

pub use generators::{
    k_fold_twist, maxcsp_encode, maxcsp_instance, CrispStructure, Twist,
};

/// Default cap on the number of assignments `opt` will enumerate.
pub const DEFAULT_OPT_BUDGET: u128 = 10_000_000;

const KEYWORDS: [&str; 6] = [
    "signature",
    "template",
    "instance",
    "universe",
    "default",
    "threshold",
];

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#'))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, arity) in &symbols {
            if !valid_name(name) || KEYWORDS.contains(&name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "invalid symbol name `{name}`"
                )));
            }
            if *arity == 0 {
                return Err(Error::InvalidParameter(format!("symbol {name} has arity 0")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidParameter(format!("duplicate symbol {name}")));
            }
        }
        Ok(Signature { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn name(&self, sym: usize) -> &str {
        &self.symbols[sym].0
    }

    pub fn arity(&self, sym: usize) -> usize {
        self.symbols[sym].1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|(n, _)| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.1).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Template,
    Instance,
}

impl Role {
    fn keyword(self) -> &'static str {
        match self {
            Role::Template => "template",
            Role::Instance => "instance",
        }
    }
}

/// One valued relation, stored sparsely with an optional default.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    entries: BTreeMap<Vec<usize>, ExtRat>,
    default: Option<ExtRat>,
}

impl Relation {
    fn new() -> Self {
        Relation {
            entries: BTreeMap::new(),
            default: None,
        }
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, ExtRat> {
        &self.entries
    }

    pub fn default_value(&self) -> Option<&ExtRat> {
        self.default.as_ref()
    }
}

/// Number of tuples of length `arity` over `n` elements, saturating.
pub fn tuple_count(n: usize, arity: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..arity {
        total = total.saturating_mul(n as u128);
    }
    total
}

/// All tuples of length `arity` over `0..n`, in lexicographic order.
pub fn tuples(n: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if n == 0 && arity > 0 {
        0
    } else {
        tuple_count(n, arity) as usize
    };
    (0..total).map(move |mut idx| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = idx % n;
            idx /= n;
        }
        t
    })
}

/// Mixed-radix position of `tuple` in the lexicographic enumeration.
pub fn tuple_index(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * n + x)
}

/// Dense lookup table for one relation of a structure.
#[derive(Clone, Debug)]
pub struct DenseTable {
    n: usize,
    values: Vec<ExtRat>,
}

impl DenseTable {
    pub fn get(&self, tuple: &[usize]) -> &ExtRat {
        &self.values[tuple_index(tuple, self.n)]
    }

    pub fn values(&self) -> &[ExtRat] {
        &self.values
    }
}

#[derive(Clone, Debug)]
pub struct ValuedStructure {
    name: String,
    role: Role,
    signature: Signature,
    universe: Vec<String>,
    index: HashMap<String, usize>,
    relations: Vec<Relation>,
}

impl PartialEq for ValuedStructure {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.role == other.role
            && self.signature == other.signature
            && self.universe == other.universe
            && self.relations == other.relations
    }
}

impl Eq for ValuedStructure {}

impl ValuedStructure {
    pub fn new(
        name: impl Into<String>,
        role: Role,
        signature: Signature,
        universe: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(Error::InvalidParameter(format!("invalid structure name `{name}`")));
        }
        let mut index = HashMap::with_capacity(universe.len());
        for (i, e) in universe.iter().enumerate() {
            if !valid_name(e) {
                return Err(Error::InvalidParameter(format!("invalid element name `{e}`")));
            }
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate element `{e}`")));
            }
        }
        let relations = (0..signature.len()).map(|_| Relation::new()).collect();
        Ok(ValuedStructure {
            name,
            role,
            signature,
            universe,
            index,
            relations,
        })
    }

    /// Template whose every relation defaults to `default`.
    pub fn template_with_default(
        name: impl Into<String>,
        signature: Signature,
        universe: Vec<String>,
        default: ExtRat,
    ) -> Result<Self> {
        let mut s = Self::new(name, Role::Template, signature, universe)?;
        for r in &mut s.relations {
            r.default = Some(default.clone());
        }
        Ok(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_instance(&self) -> bool {
        self.role == Role::Instance
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn relation(&self, sym: usize) -> &Relation {
        &self.relations[sym]
    }

    pub fn similar(&self, other: &ValuedStructure) -> bool {
        self.signature == other.signature
    }

    pub fn ensure_similar(&self, other: &ValuedStructure) -> Result<()> {
        if self.similar(other) {
            Ok(())
        } else {
            Err(Error::SignatureMismatch)
        }
    }

    pub fn ensure_instance(&self) -> Result<()> {
        if self.is_instance() {
            Ok(())
        } else {
            Err(Error::RoleViolation(format!(
                "{} is a template, an instance is required",
                self.name
            )))
        }
    }

    fn check_value(&self, value: &ExtRat) -> Result<()> {
        if self.is_instance() && (value.is_inf() || value.is_negative()) {
            return Err(Error::RoleViolation(format!(
                "instance {} has weight {value}; weights must be finite and non-negative",
                self.name
            )));
        }
        Ok(())
    }

    fn check_tuple(&self, sym: usize, tuple: &[usize]) -> Result<()> {
        let arity = self.signature.arity(sym);
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: self.signature.name(sym).to_string(),
                expected: arity,
                found: tuple.len(),
            });
        }
        if let Some(&bad) = tuple.iter().find(|&&x| x >= self.size()) {
            return Err(Error::UnknownElement(format!("#{bad}")));
        }
        Ok(())
    }

    /// Sets `R(tuple) = value`, replacing any previous entry.
    pub fn set(&mut self, sym: usize, tuple: Vec<usize>, value: ExtRat) -> Result<()> {
        self.check_tuple(sym, &tuple)?;
        self.check_value(&value)?;
        self.relations[sym].entries.insert(tuple, value);
        Ok(())
    }

    /// Adds `weight` to the current value of `R(tuple)`.
    pub fn add(&mut self, sym: usize, tuple: Vec<usize>, weight: &ExtRat) -> Result<()> {
        let current = self.value(sym, &tuple);
        self.set(sym, tuple, current + weight.clone())
    }

    pub fn set_default(&mut self, sym: usize, value: ExtRat) -> Result<()> {
        self.check_value(&value)?;
        self.relations[sym].default = Some(value);
        Ok(())
    }

    /// `R(tuple)`; instances read missing tuples as 0.
    pub fn value(&self, sym: usize, tuple: &[usize]) -> ExtRat {
        let rel = &self.relations[sym];
        match rel.entries.get(tuple) {
            Some(v) => v.clone(),
            None => match &rel.default {
                Some(d) => d.clone(),
                None => {
                    debug_assert!(self.is_instance(), "incomplete template relation");
                    ExtRat::zero()
                }
            },
        }
    }

    pub fn table(&self, sym: usize) -> DenseTable {
        let n = self.size();
        let values = tuples(n, self.signature.arity(sym))
            .map(|t| self.value(sym, &t))
            .collect();
        DenseTable { n, values }
    }

    /// Checks that each template relation is total.
    pub fn validate(&self) -> Result<()> {
        if self.is_instance() {
            return Ok(());
        }
        for (sym, rel) in self.relations.iter().enumerate() {
            let needed = tuple_count(self.size(), self.signature.arity(sym));
            if rel.default.is_none() && (rel.entries.len() as u128) < needed {
                return Err(Error::InvalidParameter(format!(
                    "template {} leaves relation {} partially undefined (no default)",
                    self.name,
                    self.signature.name(sym)
                )));
            }
        }
        Ok(())
    }

    /// Every `(symbol, tuple, value)` whose value differs from zero, in
    /// signature order then lexicographic tuple order.
    pub fn nonzero_entries(&self) -> Vec<(usize, Vec<usize>, ExtRat)> {
        let mut out = Vec::new();
        for (sym, rel) in self.relations.iter().enumerate() {
            let default_nonzero = rel.default.as_ref().is_some_and(|d| !d.is_zero());
            if default_nonzero {
                for t in tuples(self.size(), self.signature.arity(sym)) {
                    let v = self.value(sym, &t);
                    if !v.is_zero() {
                        out.push((sym, t, v));
                    }
                }
            } else {
                out.extend(
                    rel.entries
                        .iter()
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(t, v)| (sym, t.clone(), v.clone())),
                );
            }
        }
        out
    }

    /// Same structure with every weight multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: &Rat) -> Result<ValuedStructure> {
        if factor.is_negative() {
            return Err(Error::InvalidParameter("negative scaling factor".into()));
        }
        let mut out = self.clone();
        for rel in &mut out.relations {
            for v in rel.entries.values_mut() {
                *v = v.scale(factor);
            }
            if let Some(d) = rel.default.as_mut() {
                *d = d.scale(factor);
            }
        }
        Ok(out)
    }

    /// Same structure with elements renamed through `perm` (old index to
    /// new index) and names taken from `names` in the new order.
    pub fn permuted(&self, perm: &[usize], names: Vec<String>) -> Result<ValuedStructure> {
        let mut out = ValuedStructure::new(
            self.name.clone(),
            self.role,
            self.signature.clone(),
            names,
        )?;
        for (sym, rel) in self.relations.iter().enumerate() {
            out.relations[sym].default = rel.default.clone();
            for (t, v) in &rel.entries {
                let mapped: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
                out.relations[sym].entries.insert(mapped, v.clone());
            }
        }
        Ok(out)
    }

    /// Disjoint union of two instances; elements are prefixed `l.` and `r.`.
    pub fn disjoint_union(&self, other: &ValuedStructure) -> Result<ValuedStructure> {
        self.ensure_similar(other)?;
        self.ensure_instance()?;
        other.ensure_instance()?;
        let universe = self
            .universe
            .iter()
            .map(|e| format!("l.{e}"))
            .chain(other.universe.iter().map(|e| format!("r.{e}")))
            .collect();
        let mut out = ValuedStructure::new(
            format!("{}+{}", self.name, other.name),
            Role::Instance,
            self.signature.clone(),
            universe,
        )?;
        let offset = self.size();
        for (sym, t, v) in self.nonzero_entries() {
            out.set(sym, t, v)?;
        }
        for (sym, t, v) in other.nonzero_entries() {
            out.set(sym, t.iter().map(|x| x + offset).collect(), v)?;
        }
        Ok(out)
    }

    /// Canonical text form. Tuples are written in lexicographic order of
    /// element indices; `threshold` is emitted for instances only.
    pub fn to_text(&self, threshold: Option<&Rat>) -> String {
        let mut out = String::from("signature\n");
        for (name, arity) in self.signature.iter() {
            let _ = writeln!(out, "  {name} {arity}");
        }
        let _ = writeln!(out, "{} {}", self.role.keyword(), self.name);
        out.push_str("  universe");
        for e in &self.universe {
            out.push(' ');
            out.push_str(e);
        }
        out.push('\n');
        for (sym, rel) in self.relations.iter().enumerate() {
            let name = self.signature.name(sym);
            for (t, v) in &rel.entries {
                let elems: Vec<&str> = t.iter().map(|&x| self.universe[x].as_str()).collect();
                let _ = writeln!(out, "  {name} ({}) {v}", elems.join(","));
            }
        }
        for (sym, rel) in self.relations.iter().enumerate() {
            if let Some(d) = &rel.default {
                if !(self.is_instance() && d.is_zero()) {
                    let _ = writeln!(out, "  default {} {d}", self.signature.name(sym));
                }
            }
        }
        if let (Some(tau), Role::Instance) = (threshold, self.role) {
            let _ = writeln!(out, "  threshold {}", fmt_rat(tau));
        }
        out
    }
}

/// A parsed structure file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureFile {
    pub structure: ValuedStructure,
    pub threshold: Option<Rat>,
}

impl StructureFile {
    pub fn to_text(&self) -> String {
        self.structure.to_text(self.threshold.as_ref())
    }
}

/// An instance together with an optional finite threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub structure: ValuedStructure,
    pub threshold: Option<Rat>,
}

impl Instance {
    pub fn new(structure: ValuedStructure, threshold: Option<Rat>) -> Result<Self> {
        structure.ensure_instance()?;
        Ok(Instance {
            structure,
            threshold,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn with_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { msg, .. } => Error::Parse { line, msg },
        Error::InvalidParameter(msg) => Error::Parse { line, msg },
        other => other,
    })
}

/// Parses one structure file.
pub fn parse(text: &str) -> Result<StructureFile> {
    enum State {
        Start,
        Signature,
        Body,
    }
    let mut state = State::Start;
    let mut symbols: Vec<(String, usize)> = Vec::new();
    let mut header: Option<(usize, Role, String)> = None;
    let mut structure: Option<ValuedStructure> = None;
    let mut threshold: Option<Rat> = None;
    let mut seen_defaults = BTreeSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let first = words.next().unwrap_or_default();
        match state {
            State::Start => {
                if line != "signature" {
                    return Err(Error::parse(line_no, "expected `signature`"));
                }
                state = State::Signature;
            }
            State::Signature => {
                if first == "template" || first == "instance" {
                    let role = if first == "template" {
                        Role::Template
                    } else {
                        Role::Instance
                    };
                    let name = words
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "missing structure name"))?;
                    if words.next().is_some() {
                        return Err(Error::parse(line_no, "trailing tokens after structure name"));
                    }
                    header = Some((line_no, role, name.to_string()));
                    state = State::Body;
                    continue;
                }
                let arity = words
                    .next()
                    .ok_or_else(|| Error::parse(line_no, "expected `<symbol> <arity>`"))?;
                if words.next().is_some() {
                    return Err(Error::parse(line_no, "trailing tokens in signature line"));
                }
                let arity: usize = arity
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid arity `{arity}`")))?;
                symbols.push((first.to_string(), arity));
            }
            State::Body => {
                if first == "universe" {
                    if structure.is_some() {
                        return Err(Error::parse(line_no, "duplicate universe line"));
                    }
                    let (hline, role, name) = header.clone().expect("header precedes body");
                    let signature = with_line(hline, Signature::new(symbols.clone()))?;
                    let universe = words.map(str::to_string).collect();
                    structure = Some(with_line(
                        line_no,
                        ValuedStructure::new(name, role, signature, universe),
                    )?);
                    continue;
                }
                let s = structure
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, "`universe` must come first"))?;
                match first {
                    "threshold" => {
                        let v = words
                            .next()
                            .ok_or_else(|| Error::parse(line_no, "missing threshold value"))?;
                        if words.next().is_some() {
                            return Err(Error::parse(line_no, "trailing tokens after threshold"));
                        }
                        if !s.is_instance() {
                            return Err(Error::RoleViolation(
                                "threshold is only allowed in instances".into(),
                            ));
                        }
                        if threshold.is_some() {
                            return Err(Error::parse(line_no, "duplicate threshold"));
                        }
                        match with_line(line_no, v.parse::<ExtRat>())? {
                            ExtRat::Finite(r) => threshold = Some(r),
                            ExtRat::PosInf => {
                                return Err(Error::parse(line_no, "threshold must be finite"))
                            }
                        }
                    }
                    "default" => {
                        let (sym_name, v) = match (words.next(), words.next(), words.next()) {
                            (Some(a), Some(b), None) => (a, b),
                            _ => return Err(Error::parse(line_no, "expected `default <symbol> <value>`")),
                        };
                        let sym = s
                            .signature
                            .index_of(sym_name)
                            .ok_or_else(|| Error::UnknownSymbol(sym_name.to_string()))?;
                        if !seen_defaults.insert(sym) {
                            return Err(Error::parse(line_no, "duplicate default"));
                        }
                        let v: ExtRat = with_line(line_no, v.parse())?;
                        s.set_default(sym, v)?;
                    }
                    _ => {
                        let sym = s
                            .signature
                            .index_of(first)
                            .ok_or_else(|| Error::UnknownSymbol(first.to_string()))?;
                        let rest = line[first.len()..].trim_start();
                        let rest = rest
                            .strip_prefix('(')
                            .ok_or_else(|| Error::parse(line_no, "expected `(` after symbol"))?;
                        let (inner, after) = rest
                            .split_once(')')
                            .ok_or_else(|| Error::parse(line_no, "unterminated tuple"))?;
                        let mut tuple = Vec::new();
                        for e in inner.split(',') {
                            let e = e.trim();
                            let idx = s
                                .element(e)
                                .ok_or_else(|| Error::UnknownElement(e.to_string()))?;
                            tuple.push(idx);
                        }
                        let mut vals = after.split_whitespace();
                        let v = match (vals.next(), vals.next()) {
                            (Some(v), None) => v,
                            _ => return Err(Error::parse(line_no, "expected one value after tuple")),
                        };
                        let v: ExtRat = with_line(line_no, v.parse())?;
                        s.check_tuple(sym, &tuple)?;
                        if s.relations[sym].entries.contains_key(&tuple) {
                            return Err(Error::parse(line_no, "duplicate tuple"));
                        }
                        s.set(sym, tuple, v)?;
                    }
                }
            }
        }
    }
    let structure = match (state, structure) {
        (State::Body, Some(s)) => s,
        _ => return Err(Error::parse(text.lines().count(), "missing structure body")),
    };
    let hline = header.map(|h| h.0).unwrap_or(0);
    with_line(hline, structure.validate())?;
    Ok(StructureFile {
        structure,
        threshold,
    })
}

pub fn parse_structure(text: &str) -> Result<ValuedStructure> {
    parse(text).map(|f| f.structure)
}

/// A constraint `R(v)` of an instance with its positive weight.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub symbol: usize,
    pub vars: Vec<usize>,
    pub weight: Rat,
}

impl Constraint {
    pub fn has_repetition(&self) -> bool {
        let set: BTreeSet<_> = self.vars.iter().collect();
        set.len() < self.vars.len()
    }

    /// 1-based positions at which `var` occurs.
    pub fn positions_of(&self, var: usize) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == var)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// The constraint set `C_I`: every tuple with positive weight.
pub fn constraints(instance: &ValuedStructure) -> Result<Vec<Constraint>> {
    instance.ensure_instance()?;
    Ok(instance
        .nonzero_entries()
        .into_iter()
        .filter_map(|(symbol, vars, w)| match w {
            ExtRat::Finite(weight) if weight.is_positive() => Some(Constraint {
                symbol,
                vars,
                weight,
            }),
            _ => None,
        })
        .collect())
}

/// `Val(I, A, h) = Σ R^I(v) · R^A(h(v))`.
pub fn val(instance: &ValuedStructure, template: &ValuedStructure, h: &[usize]) -> Result<ExtRat> {
    instance.ensure_similar(template)?;
    if h.len() != instance.size() {
        return Err(Error::DimensionMismatch {
            expected: instance.size(),
            found: h.len(),
        });
    }
    if let Some(&bad) = h.iter().find(|&&a| a >= template.size()) {
        return Err(Error::UnknownElement(format!("#{bad}")));
    }
    let mut total = ExtRat::zero();
    for c in constraints(instance)? {
        let image: Vec<usize> = c.vars.iter().map(|&v| h[v]).collect();
        total = total + template.value(c.symbol, &image).scale(&c.weight);
    }
    Ok(total)
}

/// `Opt(I, A)` by exhaustive enumeration with the default budget.
pub fn opt(instance: &ValuedStructure, template: &ValuedStructure) -> Result<(ExtRat, Vec<usize>)> {
    opt_with_budget(instance, template, DEFAULT_OPT_BUDGET)
}

/// Exhaustive minimum of `Val` over all `|A|^|I|` assignments. The witness
/// is the lexicographically least minimizer. With no assignments at all
/// (empty template universe, non-empty instance) the optimum is `inf`.
pub fn opt_with_budget(
    instance: &ValuedStructure,
    template: &ValuedStructure,
    budget: u128,
) -> Result<(ExtRat, Vec<usize>)> {
    instance.ensure_similar(template)?;
    let cs = constraints(instance)?;
    let n = instance.size();
    let k = template.size();
    let needed = tuple_count(k, n);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what: "assignment enumeration".into(),
            needed,
            budget,
        });
    }
    let tables: Vec<DenseTable> = (0..template.signature().len())
        .map(|s| template.table(s))
        .collect();
    let mut best: Option<(ExtRat, Vec<usize>)> = None;
    for h in tuples(k, n) {
        let mut total = ExtRat::zero();
        for c in &cs {
            let idx = c.vars.iter().fold(0, |acc, &v| acc * k + h[v]);
            total = total + tables[c.symbol].values[idx].scale(&c.weight);
            if total.is_inf() {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, h));
        }
    }
    Ok(best.unwrap_or_else(|| (ExtRat::PosInf, Vec::new())))
}

/// True iff every positive-weight tuple of `instance` is repetition-free.
pub fn has_no_repetitions(instance: &ValuedStructure) -> Result<bool> {
    Ok(constraints(instance)?.iter().all(|c| !c.has_repetition()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    pub(crate) const EX1_A: &str = "\
signature
  R 2
template A
  universe 0 1
  R (0,0) 3
  R (0,1) 2
  R (1,0) 2
  R (1,1) 3
";

    const EX1_B: &str = "\
signature
  R 2
template B
  universe 0 1
  R (0,0) 3
  R (0,1) 0
  R (1,0) 0
  R (1,1) 3
";

    const EX1_I: &str = "\
signature
  R 2
instance I
  universe v
  R (v,v) 1
";

    #[test]
    fn parses_ex1_template() {
        let a = parse_structure(EX1_A).unwrap();
        assert_eq!(a.value(0, &[0, 1]), ExtRat::from_int(2));
        assert_eq!(a.value(0, &[1, 1]), ExtRat::from_int(3));
        assert_eq!(a.role(), Role::Template);
    }

    #[test]
    fn serialize_parse_round_trip() {
        for text in [EX1_A, EX1_B, EX1_I] {
            let s = parse(text).unwrap();
            assert_eq!(s.to_text(), text);
            assert_eq!(parse(&s.to_text()).unwrap(), s);
        }
    }

    #[test]
    fn negative_instance_weight_is_a_role_violation() {
        let text = "signature\n R 2\ninstance I\n universe v\n R (v,v) -1\n";
        assert!(matches!(parse(text), Err(Error::RoleViolation(_))));
        let text = "signature\n R 2\ninstance I\n universe v\n R (v,v) inf\n";
        assert!(matches!(parse(text), Err(Error::RoleViolation(_))));
    }

    #[test]
    fn parse_errors() {
        let cases = [
            ("", "missing"),
            ("signature\n R 2\ntemplate A\n universe 0\n", "partially"),
            ("signature\n R 2\ninstance I\n universe v\n R (v) 1\n", "arity"),
            ("signature\n R 2\ninstance I\n universe v\n S (v,v) 1\n", "symbol"),
            ("signature\n R 2\ninstance I\n universe v\n R (v,w) 1\n", "element"),
            ("signature\n R 0\ninstance I\n universe v\n", "arity 0"),
            ("signature\n R 1\ninstance I\n R (v) 1\n", "universe"),
            ("signature\n R 1\ninstance I\n universe v\n R (v) 1\n R (v) 2\n", "duplicate"),
            ("signature\n R 1\ntemplate A\n universe v\n default R 1\n threshold 1\n", "threshold"),
            ("signature\n R 1\ninstance I\n universe v v\n", "duplicate element"),
        ];
        for (text, what) in cases {
            assert!(parse(text).is_err(), "{what}: accepted {text:?}");
        }
        assert!(matches!(
            parse("signature\n R 2\ninstance I\n universe v\n R (v) 1\n"),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse("signature\n R 2\ninstance I\n universe v\n S (v,v) 1\n"),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn defaults_and_threshold() {
        let text = "\
signature
  R 2
  U 1
template C
  universe a b
  R (a,b) 1/2
  U (a) -1
  default R inf
  default U 0
";
        let f = parse(text).unwrap();
        assert_eq!(f.to_text(), text);
        let c = f.structure;
        assert_eq!(c.value(0, &[1, 1]), ExtRat::PosInf);
        assert_eq!(c.value(0, &[0, 1]), "1/2".parse().unwrap());
        let inst = "signature\n  R 1\ninstance I\n  universe x\n  threshold -3/2\n";
        let f = parse(inst).unwrap();
        assert_eq!(f.threshold, Some(rat(-3, 2)));
        assert_eq!(f.to_text(), inst);
    }

    #[test]
    fn constraint_sets() {
        let i = parse_structure(EX1_I).unwrap();
        let cs = constraints(&i).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].vars, vec![0, 0]);
        assert_eq!(cs[0].weight, int(1));

        let zero = parse_structure("signature\n R 2\ninstance Z\n universe u v\n R (u,v) 0\n").unwrap();
        assert!(constraints(&zero).unwrap().is_empty());

        let half =
            parse_structure("signature\n R 2\ninstance H\n universe u v\n R (u,v) 1/2\n R (v,u) 0\n")
                .unwrap();
        let cs = constraints(&half).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].weight, rat(1, 2));

        let a = parse_structure(EX1_A).unwrap();
        assert!(matches!(constraints(&a), Err(Error::RoleViolation(_))));
    }

    #[test]
    fn values_and_optima_on_ex1() {
        let a = parse_structure(EX1_A).unwrap();
        let b = parse_structure(EX1_B).unwrap();
        let i = parse_structure(EX1_I).unwrap();
        assert_eq!(val(&i, &a, &[0]).unwrap(), ExtRat::from_int(3));
        assert_eq!(val(&i, &b, &[1]).unwrap(), ExtRat::from_int(3));
        assert_eq!(opt(&i, &a).unwrap().0, ExtRat::from_int(3));
        assert_eq!(opt(&i, &b).unwrap(), (ExtRat::from_int(3), vec![0]));
    }

    #[test]
    fn empty_instances_have_value_zero() {
        let a = parse_structure(EX1_A).unwrap();
        let empty = parse_structure("signature\n R 2\ninstance E\n universe x y\n").unwrap();
        assert_eq!(val(&empty, &a, &[1, 0]).unwrap(), ExtRat::zero());
        assert_eq!(opt(&empty, &a).unwrap(), (ExtRat::zero(), vec![0, 0]));
        let none = parse_structure("signature\ninstance E\n universe x\n").unwrap();
        let t = parse_structure("signature\ntemplate T\n universe p\n").unwrap();
        assert_eq!(opt(&none, &t).unwrap().0, ExtRat::zero());
    }

    #[test]
    fn signature_mismatch_and_budget() {
        let a = parse_structure(EX1_A).unwrap();
        let other = parse_structure("signature\n S 2\ninstance I\n universe v\n").unwrap();
        assert_eq!(val(&other, &a, &[0]), Err(Error::SignatureMismatch));
        let i = parse_structure("signature\n R 2\ninstance I\n universe a b c d\n").unwrap();
        assert!(matches!(
            opt_with_budget(&i, &a, 15),
            Err(Error::BudgetExceeded { needed: 16, .. })
        ));
    }

    #[test]
    fn tuple_enumeration_is_lexicographic() {
        let all: Vec<_> = tuples(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(tuples(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(tuples(0, 2).count(), 0);
        for (i, t) in tuples(3, 3).enumerate() {
            assert_eq!(tuple_index(&t, 3), i);
        }
    }
}
