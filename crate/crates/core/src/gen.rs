//! Seeded random fixtures for property suites and the `gen` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{rat, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::model::{tuples, Role, Signature, ValuedStructure};

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub symbols: usize,
    pub max_arity: usize,
    pub template_size: usize,
    pub variables: usize,
    pub constraints: usize,
    /// Probability (in percent) of an infinite template entry.
    pub inf_percent: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            symbols: 2,
            max_arity: 2,
            template_size: 2,
            variables: 3,
            constraints: 3,
            inf_percent: 10,
        }
    }
}

const TEMPLATE_VALUES: [(i64, i64); 7] = [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (5, 1)];
const WEIGHTS: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (3, 1)];

fn pick(rng: &mut FixtureRng, table: &[(i64, i64)]) -> Rat {
    let (n, d) = table[rng.gen_range(0..table.len())];
    rat(n, d)
}

/// Symbols `R0, R1, ...`; the first has arity `max_arity` so that
/// connected instances can always be built.
pub fn random_signature(rng: &mut FixtureRng, symbols: usize, max_arity: usize) -> Result<Signature> {
    if symbols == 0 || max_arity == 0 {
        return Err(Error::InvalidParameter("signature needs a symbol of positive arity".into()));
    }
    Signature::new(
        (0..symbols)
            .map(|s| {
                let ar = if s == 0 { max_arity } else { rng.gen_range(1..=max_arity) };
                (format!("R{s}"), ar)
            })
            .collect(),
    )
}

/// Fully enumerated template with small non-negative rationals and
/// occasional `inf` entries.
pub fn random_template(
    rng: &mut FixtureRng,
    name: &str,
    signature: &Signature,
    size: usize,
    inf_percent: u32,
) -> Result<ValuedStructure> {
    if size == 0 {
        return Err(Error::InvalidParameter("template universe must be non-empty".into()));
    }
    let mut t = ValuedStructure::new(
        name,
        Role::Template,
        signature.clone(),
        (0..size).map(|a| a.to_string()).collect(),
    )?;
    for (sym, (_, arity)) in signature.iter().enumerate() {
        for tuple in tuples(size, arity) {
            let v = if rng.gen_range(0..100) < inf_percent {
                ExtRat::PosInf
            } else {
                ExtRat::Finite(pick(rng, &TEMPLATE_VALUES))
            };
            t.set(sym, tuple, v)?;
        }
    }
    Ok(t)
}

fn random_tuple(rng: &mut FixtureRng, arity: usize, n: usize) -> Vec<usize> {
    (0..arity).map(|_| rng.gen_range(0..n)).collect()
}

/// Instance with `constraints` random weighted tuples (tuples drawn twice
/// accumulate).
pub fn random_instance(
    rng: &mut FixtureRng,
    name: &str,
    signature: &Signature,
    variables: usize,
    constraints: usize,
) -> Result<ValuedStructure> {
    let mut inst = ValuedStructure::new(
        name,
        Role::Instance,
        signature.clone(),
        (0..variables).map(|v| format!("v{v}")).collect(),
    )?;
    if variables == 0 {
        return Ok(inst);
    }
    for _ in 0..constraints {
        let sym = rng.gen_range(0..signature.len());
        let tuple = random_tuple(rng, signature.arity(sym), variables);
        inst.add(sym, tuple, &ExtRat::Finite(pick(rng, &WEIGHTS)))?;
    }
    Ok(inst)
}

/// Connected instance: a random spanning tree of binary-or-wider
/// constraints on symbol 0, then `extra` random constraints.
pub fn random_connected_instance(
    rng: &mut FixtureRng,
    name: &str,
    signature: &Signature,
    variables: usize,
    extra: usize,
) -> Result<ValuedStructure> {
    if variables == 0 {
        return Err(Error::InvalidParameter("connected instance needs a variable".into()));
    }
    let arity = signature.arity(0);
    if variables > 1 && arity < 2 {
        return Err(Error::InvalidParameter("symbol R0 must be at least binary".into()));
    }
    let mut inst = random_instance(rng, name, signature, variables, 0)?;
    let mut order: Vec<usize> = (0..variables).collect();
    order.shuffle(rng);
    for i in 1..variables {
        let parent = order[rng.gen_range(0..i)];
        let mut tuple = random_tuple(rng, arity, variables);
        let (p, q) = (rng.gen_range(0..arity), rng.gen_range(0..arity - 1));
        let q = if q >= p { q + 1 } else { q };
        tuple[p] = parent;
        tuple[q] = order[i];
        inst.add(0, tuple, &ExtRat::Finite(pick(rng, &WEIGHTS)))?;
    }
    if variables == 1 {
        let tuple = vec![0; arity];
        inst.add(0, tuple, &ExtRat::Finite(pick(rng, &WEIGHTS)))?;
    }
    for _ in 0..extra {
        let sym = rng.gen_range(0..signature.len());
        let tuple = random_tuple(rng, signature.arity(sym), variables);
        inst.add(sym, tuple, &ExtRat::Finite(pick(rng, &WEIGHTS)))?;
    }
    Ok(inst)
}

/// Directed cycle `v0 -> v1 -> ... -> v0` on a binary symbol with unit
/// weights: every variable and every constraint is in a single class.
pub fn cycle_instance(signature: &Signature, symbol: usize, length: usize) -> Result<ValuedStructure> {
    if signature.arity(symbol) != 2 || length == 0 {
        return Err(Error::InvalidParameter("cycle needs a binary symbol and a positive length".into()));
    }
    let mut inst = ValuedStructure::new(
        format!("C{length}"),
        Role::Instance,
        signature.clone(),
        (0..length).map(|v| format!("v{v}")).collect(),
    )?;
    for v in 0..length {
        inst.add(symbol, vec![v, (v + 1) % length], &ExtRat::from_int(1))?;
    }
    Ok(inst)
}

/// Random instance, template and threshold sampled from `config`.
pub fn random_case(
    rng: &mut FixtureRng,
    config: &GenConfig,
    connected: bool,
) -> Result<(ValuedStructure, ValuedStructure)> {
    let sig = random_signature(rng, config.symbols, config.max_arity)?;
    let inst = if connected {
        random_connected_instance(rng, "I", &sig, config.variables, config.constraints)?
    } else {
        random_instance(rng, "I", &sig, config.variables, config.constraints)?
    };
    let template = random_template(rng, "A", &sig, config.template_size, config.inf_percent)?;
    Ok((inst, template))
}
