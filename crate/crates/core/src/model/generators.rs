//! Structure generators: the MaxCSP approximation encoding and the k-fold
//! twist used to compare weakly congruent instances.

use std::collections::BTreeSet;

use num_traits::{One, Signed};

use super::{constraints, Role, Signature, ValuedStructure};
use crate::arith::{int, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::morph::{Direction, MapDistribution};
use crate::wl::FactorGraph;

/// A relational (non-valued) structure given by membership lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrispStructure {
    pub name: String,
    pub signature: Signature,
    pub universe: Vec<String>,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
}

impl CrispStructure {
    /// Reads a `{0, ∞}`-style template: a tuple is a member iff its cost is 0.
    pub fn from_zero_cost(template: &ValuedStructure) -> Self {
        Self::collect(template, |v| v.is_zero())
    }

    /// Reads a crisp instance: a tuple is a member iff its weight is positive.
    pub fn from_support(instance: &ValuedStructure) -> Self {
        Self::collect(instance, |v| v.is_positive())
    }

    fn collect(s: &ValuedStructure, member: impl Fn(&ExtRat) -> bool) -> Self {
        let relations = (0..s.signature().len())
            .map(|sym| {
                super::tuples(s.size(), s.signature().arity(sym))
                    .filter(|t| member(&s.value(sym, t)))
                    .collect()
            })
            .collect();
        CrispStructure {
            name: s.name().to_string(),
            signature: s.signature().clone(),
            universe: s.universe().to_vec(),
            relations,
        }
    }

    pub fn constraint_count(&self) -> usize {
        self.relations.iter().map(BTreeSet::len).sum()
    }

    /// Number of member tuples of `self` (read as an instance) that `h` maps
    /// into `template`.
    pub fn satisfied_by(&self, template: &CrispStructure, h: &[usize]) -> usize {
        self.relations
            .iter()
            .enumerate()
            .map(|(sym, rel)| {
                rel.iter()
                    .filter(|t| {
                        let image: Vec<usize> = t.iter().map(|&v| h[v]).collect();
                        template.relations[sym].contains(&image)
                    })
                    .count()
            })
            .sum()
    }
}

fn check_unit_interval(name: &str, x: &Rat) -> Result<()> {
    if x.is_positive() && *x <= Rat::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0,1], got {x}")))
    }
}

/// The template pair `(A', B')` for `c`-approximating MaxCSP over `template`:
/// members cost `-1` in `A'`, everything else 0, and `B' = (1/c)·A'`.
pub fn maxcsp_encode(
    template: &CrispStructure,
    c: &Rat,
) -> Result<(ValuedStructure, ValuedStructure)> {
    check_unit_interval("c", c)?;
    let build = |name: String, member_cost: Rat| -> Result<ValuedStructure> {
        let mut s = ValuedStructure::template_with_default(
            name,
            template.signature.clone(),
            template.universe.clone(),
            ExtRat::zero(),
        )?;
        for (sym, rel) in template.relations.iter().enumerate() {
            for t in rel {
                s.set(sym, t.clone(), ExtRat::Finite(member_cost.clone()))?;
            }
        }
        Ok(s)
    };
    let a = build(format!("{}_A", template.name), -Rat::one())?;
    let b = build(format!("{}_B", template.name), -(Rat::one() / c))?;
    Ok((a, b))
}

/// The 0-1 valued instance `(I', -β·m)` for a crisp instance with `m`
/// constraints.
pub fn maxcsp_instance(instance: &CrispStructure, beta: &Rat) -> Result<super::Instance> {
    check_unit_interval("beta", beta)?;
    let mut s = ValuedStructure::new(
        format!("{}'", instance.name),
        Role::Instance,
        instance.signature.clone(),
        instance.universe.clone(),
    )?;
    for (sym, rel) in instance.relations.iter().enumerate() {
        for t in rel {
            s.set(sym, t.clone(), ExtRat::one())?;
        }
    }
    let m = int(instance.constraint_count() as i64);
    super::Instance::new(s, Some(-(beta * m)))
}

/// Output of [`k_fold_twist`].
#[derive(Clone, Debug)]
pub struct Twist {
    pub k: usize,
    /// Weights solving the dual-fractional-homomorphism system with equality.
    pub unscaled: ValuedStructure,
    /// `unscaled` with every weight multiplied by `2k`.
    pub scaled: ValuedStructure,
    /// Uniform distribution over the `2k` maps `I -> unscaled`.
    pub embedding: MapDistribution,
    /// Point mass on the projection `unscaled -> I`.
    pub projection: MapDistribution,
}

/// Builds the k-fold twist of a connected instance over universe
/// `{0..k-1} × I`. The maps are `f_j(v_i) = (j, v_i)` and
/// `f'_j(v_i) = (i + j mod k, v_i)`; each tuple of the twist receives
/// `Σ_f Σ_{v : f(v) = u} R^I(v)`, divided by `2k` in the unscaled version.
pub fn k_fold_twist(instance: &ValuedStructure, k: usize) -> Result<Twist> {
    instance.ensure_instance()?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let n = instance.size();
    if n < 2 {
        return Err(Error::TooSmall(format!("|I| = {n}, need at least 2")));
    }
    if !FactorGraph::new(instance)?.is_connected() {
        return Err(Error::Disconnected);
    }
    let universe: Vec<String> = (0..k)
        .flat_map(|j| instance.universe().iter().map(move |v| format!("{j}:{v}")))
        .collect();
    let node = |j: usize, i: usize| j * n + i;
    let maps: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..n).map(|i| node(j, i)).collect())
        .chain((0..k).map(|j| (0..n).map(|i| node((i + j) % k, i)).collect()))
        .collect();

    let mut scaled = ValuedStructure::new(
        format!("{}^{k}", instance.name()),
        Role::Instance,
        instance.signature().clone(),
        universe,
    )?;
    let cs = constraints(instance)?;
    for f in &maps {
        for c in &cs {
            let image: Vec<usize> = c.vars.iter().map(|&v| f[v]).collect();
            scaled.add(c.symbol, image, &ExtRat::Finite(c.weight.clone()))?;
        }
    }
    let two_k = int(2 * k as i64);
    let mut unscaled = scaled.scaled(&(Rat::one() / &two_k))?;
    unscaled.set_name(format!("{}'^{k}", instance.name()));

    let prob = Rat::one() / &two_k;
    let embedding = MapDistribution::new(
        Direction::DualFractionalHom,
        n,
        k * n,
        maps.iter().map(|f| (f.clone(), prob.clone())).collect(),
    )?;
    let projection = MapDistribution::point_mass(
        Direction::DualFractionalHom,
        (0..k * n).map(|u| u % n).collect(),
        n,
    );
    Ok(Twist {
        k,
        unscaled,
        scaled,
        embedding,
        projection,
    })
}
