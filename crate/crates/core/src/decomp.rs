//! Decomposition of an SA¹ solution: `I →_df Y₁ ≡₁ Y₂` together with an
//! assignment `h: Y₂ → A` whose value equals `Opt^SA¹(I, A)`.

use num_traits::One;
use serde_json::{json, Value};

use crate::arith::{int, ExtRat, Rat};
use crate::error::{Error, Result};
use crate::model::{constraints, tuples, val, Constraint, Role, ValuedStructure};
use crate::morph::{common_denominator, verify_dual_frac_hom, Direction, MapDistribution};
use crate::relax::{opt_relaxation, Flavor};
use crate::wl::equiv1;

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub m: usize,
    pub y1: ValuedStructure,
    pub y2: ValuedStructure,
    /// Assignment `Y₂ → A`, indexed like the universe of `Y₂`.
    pub h: Vec<usize>,
    /// Per constraint of `I`, per position, a permutation of `0..m`.
    pub rho: Vec<Vec<Vec<usize>>>,
    /// Per variable of `I`, the tuple `p_v ∈ A^m`.
    pub p: Vec<Vec<usize>>,
    /// Per constraint of `I`, the `m × r` matrix `Q`.
    pub q: Vec<Vec<Vec<usize>>>,
    /// Uniform distribution over `f_k(v) = (k, v)`.
    pub witness: MapDistribution,
    /// `Opt^SA¹(I, A)`; `inf` means the trivial decomposition was used.
    pub sa1: ExtRat,
    pub constraints: Vec<Constraint>,
}

/// Stable occurrence matching: position `k` of `column` is sent to the index
/// of the same occurrence of `column[k]` in `target`.
fn match_occurrences(column: &[usize], target: &[usize]) -> Result<Vec<usize>> {
    let mut rho = Vec::with_capacity(column.len());
    for (k, a) in column.iter().enumerate() {
        let nth = column[..k].iter().filter(|&b| b == a).count();
        let idx = target
            .iter()
            .enumerate()
            .filter(|(_, b)| *b == a)
            .nth(nth)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Internal("column multiset differs from p_v".into()))?;
        rho.push(idx);
    }
    Ok(rho)
}

fn scaled_count(p: &Rat, m: usize) -> Result<usize> {
    let x = p * int(m as i64);
    if !x.is_integer() {
        return Err(Error::Internal(format!("m·p = {x} is not an integer")));
    }
    usize::try_from(x.to_integer()).map_err(|_| Error::Internal("negative mass in SA¹ point".into()))
}

pub fn decompose(instance: &ValuedStructure, template: &ValuedStructure) -> Result<Decomposition> {
    instance.ensure_similar(template)?;
    let cs = constraints(instance)?;
    let (sa1, point, prog) = opt_relaxation(instance, template, Flavor::Sa1)?;
    let n = instance.size();
    let Some(point) = point else {
        return Ok(Decomposition {
            m: 1,
            y1: instance.clone(),
            y2: instance.clone(),
            h: vec![0; n],
            rho: cs.iter().map(|c| vec![vec![0]; c.vars.len()]).collect(),
            p: vec![vec![0]; n],
            q: Vec::new(),
            witness: MapDistribution::identity(Direction::DualFractionalHom, n),
            sa1,
            constraints: cs,
        });
    };
    let m = common_denominator(&point);
    let na = template.size();

    let p: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut t = Vec::with_capacity(m);
            for a in 0..na {
                t.extend(std::iter::repeat_n(a, scaled_count(&prog.p_var(&point, v, a), m)?));
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let universe: Vec<String> = (0..m)
        .flat_map(|k| instance.universe().iter().map(move |v| format!("{k}:{v}")))
        .collect();
    let node = |k: usize, v: usize| k * n + v;
    let mut y1 = ValuedStructure::new(
        format!("{}_Y1", instance.name()),
        Role::Instance,
        instance.signature().clone(),
        universe.clone(),
    )?;
    let mut y2 = ValuedStructure::new(
        format!("{}_Y2", instance.name()),
        Role::Instance,
        instance.signature().clone(),
        universe,
    )?;
    let share = Rat::one() / int(m as i64);
    let mut rho = Vec::with_capacity(cs.len());
    let mut qs = Vec::with_capacity(cs.len());
    for (ci, c) in cs.iter().enumerate() {
        let r = c.vars.len();
        let w = ExtRat::Finite(&c.weight * &share);
        let mut q: Vec<Vec<usize>> = Vec::with_capacity(m);
        for t in tuples(na, r) {
            let copies = scaled_count(&prog.p_con(&point, ci, &t), m)?;
            q.extend(std::iter::repeat_n(t, copies));
        }
        if q.len() != m {
            return Err(Error::Internal(format!("Q has {} rows, expected {m}", q.len())));
        }
        let perms: Vec<Vec<usize>> = (0..r)
            .map(|i| {
                let column: Vec<usize> = q.iter().map(|row| row[i]).collect();
                match_occurrences(&column, &p[c.vars[i]])
            })
            .collect::<Result<_>>()?;
        for k in 0..m {
            let t1: Vec<usize> = c.vars.iter().map(|&v| node(k, v)).collect();
            let t2: Vec<usize> = (0..r).map(|i| node(perms[i][k], c.vars[i])).collect();
            for (y, t) in [(&mut y1, t1), (&mut y2, t2)] {
                if !y.value(c.symbol, &t).is_zero() {
                    return Err(Error::Internal(format!(
                        "tuple collision while building {}",
                        y.name()
                    )));
                }
                y.set(c.symbol, t, w.clone())?;
            }
        }
        rho.push(perms);
        qs.push(q);
    }
    let h = (0..m * n).map(|u| p[u % n][u / n]).collect();
    let witness = MapDistribution::new(
        Direction::DualFractionalHom,
        n,
        m * n,
        (0..m)
            .map(|k| ((0..n).map(|v| node(k, v)).collect(), share.clone()))
            .collect(),
    )?;
    Ok(Decomposition {
        m,
        y1,
        y2,
        h,
        rho,
        p,
        q: qs,
        witness,
        sa1,
        constraints: cs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompReport {
    /// `I →_df Y₁` via the stored witness.
    pub dual_hom: bool,
    /// `Y₁ ≡₁ Y₂`.
    pub equivalent: bool,
    /// `Val(Y₂, A, h) = Opt^SA¹(I, A)`, vacuous when SA¹ is infeasible.
    pub value: bool,
    pub val_y2: ExtRat,
    pub sa1: ExtRat,
}

impl DecompReport {
    pub fn passed(&self) -> bool {
        self.dual_hom && self.equivalent && self.value
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.dual_hom {
            Some("dual fractional homomorphism I -> Y1")
        } else if !self.equivalent {
            Some("Y1 equiv1 Y2")
        } else if !self.value {
            Some("Val(Y2, A, h) = Opt^SA1(I, A)")
        } else {
            None
        }
    }
}

pub fn verify_decomposition(
    instance: &ValuedStructure,
    template: &ValuedStructure,
    d: &Decomposition,
) -> Result<DecompReport> {
    let dual_hom = verify_dual_frac_hom(instance, &d.y1, &d.witness)?;
    let equivalent = equiv1(&d.y1, &d.y2)?;
    let sa1 = opt_relaxation(instance, template, Flavor::Sa1)?.0;
    let val_y2 = val(&d.y2, template, &d.h)?;
    let value = sa1.is_inf() || val_y2 == sa1;
    Ok(DecompReport {
        dual_hom,
        equivalent,
        value,
        val_y2,
        sa1,
    })
}

impl Decomposition {
    /// `m`, the permutations, `p_v` and `h` keyed by element names.
    pub fn to_json(&self, instance: &ValuedStructure, template: &ValuedStructure) -> Value {
        let names = |t: &[usize]| -> Vec<&str> { t.iter().map(|&a| template.universe()[a].as_str()).collect() };
        json!({
            "m": self.m,
            "sa1": self.sa1.to_string(),
            "p": instance.universe().iter().zip(&self.p)
                .map(|(v, t)| (v.clone(), json!(names(t))))
                .collect::<serde_json::Map<_, _>>(),
            "rho": self.constraints.iter().zip(&self.rho).map(|(c, perms)| json!({
                "symbol": instance.signature().name(c.symbol),
                "vars": c.vars.iter().map(|&v| instance.universe()[v].clone()).collect::<Vec<_>>(),
                "permutations": perms,
            })).collect::<Vec<_>>(),
            "h": self.y2.universe().iter().zip(&self.h)
                .map(|(u, &a)| (u.clone(), json!(template.universe()[a])))
                .collect::<serde_json::Map<_, _>>(),
        })
    }
}
