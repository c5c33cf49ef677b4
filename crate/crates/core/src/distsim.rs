//! Deterministic simulator of the anonymous synchronous network deciding a
//! PVCSP instance with the reduced SA¹ program.
//!
//! One agent sits on every factor-graph vertex. With `N = |I| + |C_I|` the
//! schedule is:
//!
//! * rounds `0..N`: color refinement, each agent sending its current color;
//! * round `N`: agents adopt their color as identifier, exchange it and
//!   derive local facts (rows, tuple variables, objective terms, edge counts);
//! * rounds `N+1..=2N`: flooding of all known facts;
//! * end of round `2N`: every agent rebuilds the reduced program, solves it
//!   and halts with a verdict.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{fmt_rat, int, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::lpcore::{solve_lp, LpOutcome};
use crate::model::ValuedStructure;
use crate::relax::{
    assemble, build_reduced, constraint_facts, ClassRow, ClassVar, ConstraintFacts,
    Flavor, ProgramParts, Verdict,
};
use crate::wl::{dag_encodings, digest, ColorDag, EdgeLabel, FactorGraph, VertexKind};

pub type Id = Arc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Refining,
    Identified,
    ExchangingFragments,
    Solving,
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Color {
    Dag(ColorDag),
    Digest(String),
}

impl Color {
    fn text(&self) -> String {
        match self {
            Color::Dag(d) => d.encode(),
            Color::Digest(h) => h.clone(),
        }
    }
}

/// Content-addressed piece of the reduced program.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    VarClass(Id),
    ConClass(Id),
    Row { owner: Id, row: ClassRow<Id> },
    TupleVar(ClassVar<Id>),
    Objective { var: ClassVar<Id>, unit: Rat },
    /// A member of variable class `var` has `count` edges labelled `label`
    /// into constraint class `con`.
    Ratio { var: Id, con: Id, label: EdgeLabel, count: usize },
}

#[derive(Clone, Debug)]
enum Message {
    Color(Color),
    Id(Id),
    Facts(Arc<BTreeSet<Fact>>),
}

impl Message {
    fn text(&self) -> String {
        match self {
            Message::Color(c) => c.text(),
            Message::Id(id) => id.to_string(),
            Message::Facts(fs) => format!("{fs:?}"),
        }
    }
}

/// What an agent knows about itself at start.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalLabel {
    Variable,
    Constraint { symbol: usize, weight: Rat },
}

#[derive(Clone, Debug)]
pub struct AgentState {
    pub phase: Phase,
    pub color: Color,
    pub id: Option<Id>,
    pub facts: BTreeSet<Fact>,
    pub verdict: Option<Verdict>,
    pub value: Option<ExtRat>,
    pub parts: Option<ProgramParts>,
    label: String,
    local: LocalLabel,
    /// Identifiers of neighbours, per incident edge label.
    neighbours: Vec<(EdgeLabel, Id)>,
    var_ids: Vec<Id>,
    con_ids: Vec<Id>,
}

impl AgentState {
    fn state_digest(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{:?}|{}|{:?}|{:?}|{:?}",
            self.phase,
            self.color.text(),
            self.id,
            self.facts,
            self.verdict
        );
        digest(&s)
    }
}

/// Knowledge installed in every agent.
#[derive(Clone, Debug)]
pub struct Globals {
    pub template_a: ValuedStructure,
    pub template_b: ValuedStructure,
    pub tau: Rat,
    pub num_vars: usize,
    pub num_cons: usize,
    pub digest_mode: bool,
}

impl Globals {
    pub fn schedule_bound(&self) -> usize {
        self.num_vars + self.num_cons
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub round: usize,
    pub agent: usize,
    pub phase: Phase,
    /// SHA-256 of the agent's color after the round.
    pub color: String,
    /// SHA-256 of the message the agent sent in the round.
    pub sent: String,
    pub facts: usize,
    pub verdict: Option<String>,
    /// SHA-256 of the complete agent state after the round.
    pub state: String,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub globals: Globals,
    graph: FactorGraph,
    instance: ValuedStructure,
    pub agents: Vec<AgentState>,
    round: usize,
    pub trace: Vec<TraceRecord>,
    solved: HashMap<String, ExtRat>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub value: ExtRat,
    pub rounds: usize,
    pub trace: Vec<TraceRecord>,
}

fn merkle(label: &str, children: &[(EdgeLabel, String)]) -> String {
    let mut s = format!("{}:{label}[", label.len());
    for (k, (l, c)) in children.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let l: Vec<String> = l.iter().map(usize::to_string).collect();
        let _ = write!(s, "{}@{c}", l.join("."));
    }
    s.push(']');
    digest(&s)
}

pub fn build_network(
    instance: &ValuedStructure,
    a: &ValuedStructure,
    b: &ValuedStructure,
    tau: &Rat,
    digest_mode: bool,
) -> Result<Network> {
    instance.ensure_instance()?;
    instance.ensure_similar(a)?;
    a.ensure_similar(b)?;
    let graph = FactorGraph::new(instance)?;
    if graph.num_vertices() == 0 {
        return Err(Error::InvalidParameter("instance has no variables".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let agents = (0..graph.num_vertices())
        .map(|x| {
            let label = graph.label(x).to_string();
            let local = match graph.kind(x) {
                VertexKind::Variable(_) => LocalLabel::Variable,
                VertexKind::Constraint(c) => {
                    let con = &graph.constraints()[c];
                    LocalLabel::Constraint {
                        symbol: con.symbol,
                        weight: con.weight.clone(),
                    }
                }
            };
            let leaf = ColorDag::leaf(&label);
            let color = if digest_mode {
                Color::Digest(digest(&leaf.encode()))
            } else {
                Color::Dag(leaf)
            };
            AgentState {
                phase: Phase::Refining,
                color,
                id: None,
                facts: BTreeSet::new(),
                verdict: None,
                value: None,
                parts: None,
                label,
                local,
                neighbours: Vec::new(),
                var_ids: Vec::new(),
                con_ids: Vec::new(),
            }
        })
        .collect();
    Ok(Network {
        globals: Globals {
            template_a: a.clone(),
            template_b: b.clone(),
            tau: tau.clone(),
            num_vars: graph.num_variables(),
            num_cons: graph.num_constraints(),
            digest_mode,
        },
        graph,
        instance: instance.clone(),
        agents,
        round: 0,
        trace: Vec::new(),
        solved: HashMap::new(),
    })
}

impl Network {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_channels(&self) -> usize {
        self.graph.num_edges()
    }

    /// Channel labels incident to an agent, sorted.
    pub fn channel_labels(&self, agent: usize) -> Vec<EdgeLabel> {
        let mut ls: Vec<EdgeLabel> = self.graph.neighbors(agent).iter().map(|(_, s)| s.clone()).collect();
        ls.sort();
        ls
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Index of the final round.
    pub fn last_round(&self) -> usize {
        2 * self.globals.schedule_bound()
    }

    pub fn is_finished(&self) -> bool {
        self.round > self.last_round()
    }

    fn outgoing(&self, agent: &AgentState, round: usize) -> Result<Message> {
        let n = self.globals.schedule_bound();
        Ok(if round < n {
            Message::Color(agent.color.clone())
        } else if round == n {
            Message::Id(agent.id.clone().ok_or_else(|| Error::ProtocolViolation("no identifier".into()))?)
        } else {
            Message::Facts(Arc::new(agent.facts.clone()))
        })
    }

    /// Runs one synchronous round: all messages are computed from the
    /// previous states, then every agent transitions.
    pub fn step(&mut self) -> Result<()> {
        let round = self.round;
        if self.is_finished() {
            return Err(Error::ScheduleExceeded {
                round,
                limit: self.last_round(),
            });
        }
        let n = self.globals.schedule_bound();
        if round == n {
            for agent in &mut self.agents {
                let text = agent.color.text();
                agent.id = Some(Arc::from(text.as_str()));
                agent.phase = Phase::Identified;
            }
        }
        let outbox: Vec<Message> = self
            .agents
            .iter()
            .map(|a| self.outgoing(a, round))
            .collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(self.agents.len());
        for x in 0..self.agents.len() {
            let inbox: Vec<(EdgeLabel, &Message)> = self
                .graph
                .neighbors(x)
                .iter()
                .map(|(y, s)| (s.clone(), &outbox[*y]))
                .collect();
            let mut agent = self.agents[x].clone();
            self.transition(&mut agent, round, &inbox)?;
            next.push(agent);
        }
        self.agents = next;
        for (x, agent) in self.agents.iter().enumerate() {
            self.trace.push(TraceRecord {
                round,
                agent: x,
                phase: agent.phase,
                color: digest(&agent.color.text()),
                sent: digest(&outbox[x].text()),
                facts: agent.facts.len(),
                verdict: agent.verdict.map(|v| v.to_string()),
                state: agent.state_digest(),
            });
        }
        self.round += 1;
        Ok(())
    }

    fn transition(&mut self, agent: &mut AgentState, round: usize, inbox: &[(EdgeLabel, &Message)]) -> Result<()> {
        let n = self.globals.schedule_bound();
        if round < n {
            agent.color = match &agent.color {
                Color::Dag(_) => {
                    let dags: Vec<(&EdgeLabel, &ColorDag)> = inbox
                        .iter()
                        .map(|(s, m)| match m {
                            Message::Color(Color::Dag(d)) => Ok((s, d)),
                            _ => Err(Error::ProtocolViolation("expected a color DAG".into())),
                        })
                        .collect::<Result<_>>()?;
                    Color::Dag(ColorDag::extend(&agent.label, round, &dags))
                }
                Color::Digest(_) => {
                    let mut children: Vec<(EdgeLabel, String)> = inbox
                        .iter()
                        .map(|(s, m)| match m {
                            Message::Color(Color::Digest(h)) => Ok((s.clone(), h.clone())),
                            _ => Err(Error::ProtocolViolation("expected a color digest".into())),
                        })
                        .collect::<Result<_>>()?;
                    children.sort();
                    Color::Digest(merkle(&agent.label, &children))
                }
            };
            return Ok(());
        }
        if round == n {
            let mut neighbours: Vec<(EdgeLabel, Id)> = inbox
                .iter()
                .map(|(s, m)| match m {
                    Message::Id(id) => Ok((s.clone(), id.clone())),
                    _ => Err(Error::ProtocolViolation("expected an identifier".into())),
                })
                .collect::<Result<_>>()?;
            neighbours.sort();
            agent.neighbours = neighbours;
            agent.facts = self.local_facts(agent)?;
            agent.phase = Phase::ExchangingFragments;
        } else {
            for (_, m) in inbox {
                match m {
                    Message::Facts(fs) => agent.facts.extend(fs.iter().cloned()),
                    _ => return Err(Error::ProtocolViolation("expected facts".into())),
                }
            }
        }
        if round == self.last_round() {
            agent.phase = Phase::Solving;
            self.solve(agent)?;
            agent.phase = Phase::Halted;
        }
        Ok(())
    }

    fn local_facts(&self, agent: &AgentState) -> Result<BTreeSet<Fact>> {
        let id = agent.id.clone().ok_or_else(|| Error::ProtocolViolation("no identifier".into()))?;
        let mut facts = BTreeSet::new();
        match &agent.local {
            LocalLabel::Variable => {
                facts.insert(Fact::VarClass(id.clone()));
                let mut counts: BTreeMap<(Id, EdgeLabel), usize> = BTreeMap::new();
                for (s, c) in &agent.neighbours {
                    *counts.entry((c.clone(), s.clone())).or_insert(0) += 1;
                }
                for ((con, label), count) in counts {
                    facts.insert(Fact::Ratio {
                        var: id.clone(),
                        con,
                        label,
                        count,
                    });
                }
            }
            LocalLabel::Constraint { symbol, weight } => {
                facts.insert(Fact::ConClass(id.clone()));
                let arity = self.globals.template_a.signature().arity(*symbol);
                let mut position_classes: Vec<Option<Id>> = vec![None; arity];
                let mut pattern = vec![usize::MAX; arity];
                for (s, v) in &agent.neighbours {
                    let first = s[0] - 1;
                    for &pos in s {
                        position_classes[pos - 1] = Some(v.clone());
                        pattern[pos - 1] = first;
                    }
                }
                let position_classes: Vec<Id> = position_classes
                    .into_iter()
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::ProtocolViolation("a position has no variable".into()))?;
                let ConstraintFacts { vars, rows, objective } = constraint_facts(
                    &id,
                    *symbol,
                    weight,
                    &position_classes,
                    &pattern,
                    &self.globals.template_a,
                    Flavor::Sa1Reduced,
                );
                facts.extend(vars.into_iter().map(Fact::TupleVar));
                facts.extend(rows.into_iter().map(|row| Fact::Row {
                    owner: id.clone(),
                    row,
                }));
                facts.extend(objective.into_iter().map(|(var, unit)| Fact::Objective { var, unit }));
            }
        }
        Ok(facts)
    }

    fn solve(&mut self, agent: &mut AgentState) -> Result<()> {
        let (parts, var_ids, con_ids) = parts_from_facts(
            &agent.facts,
            self.globals.template_a.size(),
            self.globals.num_vars,
            self.globals.num_cons,
        )?;
        let (lp, _, _) = assemble(&parts)?;
        let key = lp.to_text();
        let value = match self.solved.get(&key) {
            Some(v) => v.clone(),
            None => {
                let v = match solve_lp(&lp) {
                    LpOutcome::Optimal { value, .. } => ExtRat::Finite(value),
                    LpOutcome::Infeasible(_) => ExtRat::PosInf,
                    LpOutcome::Unbounded => {
                        return Err(Error::ProtocolViolation("reduced program unbounded".into()))
                    }
                };
                self.solved.insert(key, v.clone());
                v
            }
        };
        agent.verdict = Some(Verdict::from_bound(&value, &self.globals.tau));
        agent.value = Some(value);
        agent.parts = Some(parts);
        agent.var_ids = var_ids;
        agent.con_ids = con_ids;
        Ok(())
    }

    /// Runs all remaining rounds and cross-checks the result.
    pub fn run(&mut self) -> Result<RunOutcome> {
        while !self.is_finished() {
            self.step()?;
        }
        self.cross_check()?;
        let first = &self.agents[0];
        Ok(RunOutcome {
            verdict: first.verdict.expect("halted agents have verdicts"),
            value: first.value.clone().expect("halted agents have values"),
            rounds: self.round,
            trace: self.trace.clone(),
        })
    }

    /// Agreement, identifier injectivity and equality of every agent's
    /// program with the centralized reduced program up to class renaming.
    fn cross_check(&self) -> Result<()> {
        let verdicts: BTreeSet<String> = self
            .agents
            .iter()
            .map(|a| format!("{:?}", a.verdict))
            .collect();
        if verdicts.len() != 1 || self.agents[0].verdict.is_none() {
            return Err(Error::ProtocolViolation(format!("agents disagree: {verdicts:?}")));
        }
        let n = self.globals.schedule_bound();
        let dags = dag_encodings(&self.graph, n);
        let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
        for (agent, dag) in self.agents.iter().zip(&dags) {
            let id = agent.id.as_deref().expect("identified");
            if let Some(prev) = by_id.insert(id, dag) {
                if prev != dag.as_str() {
                    return Err(Error::ProtocolViolation(format!("identifier collision on {}", digest(id))));
                }
            }
        }
        let distinct_dags: BTreeSet<&str> = by_id.values().copied().collect();
        if distinct_dags.len() != by_id.len() {
            return Err(Error::ProtocolViolation("two identifiers for one color".into()));
        }

        let central = build_reduced(&self.instance, &self.globals.template_a)?;
        let classes = central.classes.as_ref().expect("reduced program has classes");
        let nv = self.graph.num_variables();
        let mut checked: Option<&ProgramParts> = None;
        for agent in &self.agents {
            let parts = agent.parts.as_ref().expect("halted agents have programs");
            if checked == Some(parts) {
                continue;
            }
            let mut var_map = vec![usize::MAX; agent.var_ids.len()];
            let mut con_map = vec![usize::MAX; agent.con_ids.len()];
            for (x, other) in self.agents.iter().enumerate() {
                let id = other.id.as_ref().expect("identified");
                let (ids, map, class) = if x < nv {
                    (&agent.var_ids, &mut var_map, classes.var_class[x])
                } else {
                    (&agent.con_ids, &mut con_map, classes.con_class[x - nv])
                };
                let i = ids
                    .binary_search(id)
                    .map_err(|_| Error::ProtocolViolation("agent misses a class".into()))?;
                if map[i] != usize::MAX && map[i] != class {
                    return Err(Error::ProtocolViolation("identifier spans two classes".into()));
                }
                map[i] = class;
            }
            let renamed = rename_parts(parts, &var_map, &con_map)?;
            if assemble(&renamed)?.0 != central.lp {
                return Err(Error::ProtocolViolation(
                    "reconstructed program differs from the centralized one".into(),
                ));
            }
            checked = Some(parts);
        }
        Ok(())
    }

    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace records serialize") + "\n")
            .collect()
    }
}

fn rename_parts(parts: &ProgramParts, var_map: &[usize], con_map: &[usize]) -> Result<ProgramParts> {
    let bijective = |m: &[usize]| {
        let s: BTreeSet<usize> = m.iter().copied().collect();
        s.len() == m.len() && s.iter().all(|&c| c < m.len())
    };
    if !bijective(var_map) || !bijective(con_map) {
        return Err(Error::ProtocolViolation("class renaming is not a bijection".into()));
    }
    let f = |v: &ClassVar<usize>| match v {
        ClassVar::Var { class, value } => ClassVar::Var {
            class: var_map[*class],
            value: *value,
        },
        ClassVar::Con { class, tuple } => ClassVar::Con {
            class: con_map[*class],
            tuple: tuple.clone(),
        },
    };
    let mut con_classes = vec![None; parts.con_classes.len()];
    for (c, (k, facts)) in parts.con_classes.iter().enumerate() {
        let renamed = ConstraintFacts {
            vars: facts.vars.iter().map(f).collect(),
            rows: facts
                .rows
                .iter()
                .map(|r| ClassRow {
                    coeffs: r.coeffs.iter().map(|(v, a)| (f(v), a.clone())).collect(),
                    relation: r.relation,
                    rhs: r.rhs.clone(),
                })
                .collect(),
            objective: facts.objective.iter().map(|(v, a)| (f(v), a.clone())).collect(),
        };
        con_classes[con_map[c]] = Some((*k, renamed));
    }
    Ok(ProgramParts {
        flavor: parts.flavor,
        template_size: parts.template_size,
        var_classes: parts.var_classes,
        con_classes: con_classes.into_iter().map(|c| c.expect("bijective")).collect(),
    })
}

/// Class coefficients from ratio facts: a spanning tree of the class graph
/// fixes every class size relative to the least identifier, and the sum of
/// constraint-class sizes is scaled to `|C_I|`.
fn coefficients(
    facts: &BTreeSet<Fact>,
    var_ids: &[Id],
    con_ids: &[Id],
    num_vars: usize,
    num_cons: usize,
) -> Result<Vec<usize>> {
    if con_ids.is_empty() {
        return Ok(Vec::new());
    }
    // Nodes: variable classes then constraint classes. An edge (X, C, n)
    // states |C| = n·|X| for one edge label.
    let nv = var_ids.len();
    let node_of = |id: &Id, var: bool| -> Result<usize> {
        let (ids, off) = if var { (var_ids, 0) } else { (con_ids, nv) };
        ids.binary_search(id)
            .map(|i| i + off)
            .map_err(|_| Error::ProtocolViolation("ratio fact names an unknown class".into()))
    };
    let mut adj: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); nv + con_ids.len()];
    for fact in facts {
        if let Fact::Ratio { var, con, count, .. } = fact {
            let x = node_of(var, true)?;
            let c = node_of(con, false)?;
            let n = int(*count as i64);
            adj[c].push((x, Rat::one() / &n));
            adj[x].push((c, n));
        }
    }
    for list in adj.iter_mut() {
        list.sort();
    }
    // Root: the least identifier over all classes.
    let root = (0..adj.len())
        .min_by(|&a, &b| {
            let id = |i: usize| if i < nv { &var_ids[i] } else { &con_ids[i - nv] };
            id(a).cmp(id(b))
        })
        .expect("at least one class");
    let mut size: Vec<Option<Rat>> = vec![None; adj.len()];
    size[root] = Some(Rat::one());
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let su = size[u].clone().expect("visited");
        for (w, factor) in &adj[u] {
            let sw = &su * factor;
            match &size[*w] {
                None => {
                    size[*w] = Some(sw);
                    queue.push_back(*w);
                }
                Some(existing) if *existing != sw => {
                    return Err(Error::ProtocolViolation("inconsistent class ratios".into()));
                }
                Some(_) => {}
            }
        }
    }
    let size: Vec<Rat> = size
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| Error::ProtocolViolation("ratio graph is disconnected".into()))?;
    let con_total = size[nv..].iter().fold(Rat::zero(), |a, s| a + s);
    let scale = int(num_cons as i64) / con_total;
    let var_total = size[..nv].iter().fold(Rat::zero(), |a, s| a + s) * &scale;
    if var_total != int(num_vars as i64) {
        return Err(Error::ProtocolViolation(format!(
            "variable classes add up to {}, expected {num_vars}",
            fmt_rat(&var_total)
        )));
    }
    size[nv..]
        .iter()
        .map(|s| {
            let k = s * &scale;
            if !k.is_integer() || !k.is_positive() {
                return Err(Error::ProtocolViolation(format!("coefficient {} is not a positive integer", fmt_rat(&k))));
            }
            usize::try_from(k.to_integer()).map_err(|_| Error::ProtocolViolation("coefficient overflow".into()))
        })
        .collect()
}

/// Rebuilds the reduced program from a complete fact set.
pub fn parts_from_facts(
    facts: &BTreeSet<Fact>,
    template_size: usize,
    num_vars: usize,
    num_cons: usize,
) -> Result<(ProgramParts, Vec<Id>, Vec<Id>)> {
    let mut var_ids: Vec<Id> = Vec::new();
    let mut con_ids: Vec<Id> = Vec::new();
    for f in facts {
        match f {
            Fact::VarClass(id) => var_ids.push(id.clone()),
            Fact::ConClass(id) => con_ids.push(id.clone()),
            _ => {}
        }
    }
    var_ids.sort();
    con_ids.sort();
    let k = coefficients(facts, &var_ids, &con_ids, num_vars, num_cons)?;
    let index = |id: &Id, ids: &[Id]| -> Result<usize> {
        ids.binary_search(id)
            .map_err(|_| Error::ProtocolViolation("fact names an unknown class".into()))
    };
    let map_var = |v: &ClassVar<Id>| -> Result<ClassVar<usize>> {
        Ok(match v {
            ClassVar::Var { class, value } => ClassVar::Var {
                class: index(class, &var_ids)?,
                value: *value,
            },
            ClassVar::Con { class, tuple } => ClassVar::Con {
                class: index(class, &con_ids)?,
                tuple: tuple.clone(),
            },
        })
    };
    let mut con_classes: Vec<(usize, ConstraintFacts<usize>)> = k
        .iter()
        .map(|&k| {
            (
                k,
                ConstraintFacts {
                    vars: Vec::new(),
                    rows: Vec::new(),
                    objective: Vec::new(),
                },
            )
        })
        .collect();
    for f in facts {
        match f {
            Fact::TupleVar(v) => {
                let v = map_var(v)?;
                let ClassVar::Con { class, .. } = v else {
                    return Err(Error::ProtocolViolation("tuple variable of a variable class".into()));
                };
                con_classes[class].1.vars.push(v);
            }
            Fact::Row { owner, row } => {
                let c = index(owner, &con_ids)?;
                let coeffs = row
                    .coeffs
                    .iter()
                    .map(|(v, a)| Ok((map_var(v)?, a.clone())))
                    .collect::<Result<Vec<_>>>()?;
                con_classes[c].1.rows.push(ClassRow {
                    coeffs,
                    relation: row.relation,
                    rhs: row.rhs.clone(),
                });
            }
            Fact::Objective { var, unit } => {
                let v = map_var(var)?;
                let ClassVar::Con { class, .. } = v else {
                    return Err(Error::ProtocolViolation("objective on a variable class".into()));
                };
                con_classes[class].1.objective.push((v, unit.clone()));
            }
            _ => {}
        }
    }
    Ok((
        ProgramParts {
            flavor: Flavor::Sa1Reduced,
            template_size,
            var_classes: var_ids.len(),
            con_classes,
        },
        var_ids,
        con_ids,
    ))
}

/// Builds and runs the network in one call.
pub fn simulate(
    instance: &ValuedStructure,
    a: &ValuedStructure,
    b: &ValuedStructure,
    tau: &Rat,
    digest_mode: bool,
) -> Result<RunOutcome> {
    build_network(instance, a, b, tau, digest_mode)?.run()
}
