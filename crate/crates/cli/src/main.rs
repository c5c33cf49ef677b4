use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pvcsp::arith::{fmt_rat, parse_rat, Rat};
use pvcsp::decomp::{decompose, verify_decomposition};
use pvcsp::distsim::build_network;
use pvcsp::gen::{self, GenConfig};
use pvcsp::model::{
    k_fold_twist, maxcsp_encode, maxcsp_instance, opt_with_budget, parse, CrispStructure, StructureFile,
    ValuedStructure, DEFAULT_OPT_BUDGET,
};
use pvcsp::morph::{
    blp_power_consistency, dual_frac_hom, frac_hom, power_lp, sym_frac_polymorphism, FracHomOutcome,
    MapDistribution, PowerCheckStatus, DEFAULT_MAP_BUDGET, DEFAULT_POWER_BUDGET,
};
use pvcsp::relax::{method_optimum, opt_relaxation, Flavor, Method, Verdict};
use pvcsp::wl::{equiv1, refine, weak_congruent, FactorGraph, VertexKind};

#[derive(Parser, Debug)]
#[command(name = "pvcsp", version, about = "Promise valued CSP workbench with exact rational arithmetic")]
struct Cli {
    /// Emit JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,

    /// Enumeration budget (maps, assignments or power-universe size,
    /// depending on the command).
    #[arg(long, global = true)]
    budget: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Instance,
    Template,
    Connected,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact optimum Opt(I, A) by exhaustive enumeration.
    Opt { instance: PathBuf, template: PathBuf },
    /// Optimum of the basic LP relaxation.
    Blp { instance: PathBuf, template: PathBuf },
    /// Optimum of the SA1 relaxation.
    Sa1 { instance: PathBuf, template: PathBuf },
    /// Optimum of the reduced SA1 program over iterated-degree classes.
    #[command(name = "sa1-reduced")]
    Sa1Reduced { instance: PathBuf, template: PathBuf },
    /// Decide PVCSP(A, B) on (I, tau).
    Decide {
        a: PathBuf,
        b: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long, default_value = "sa1")]
        method: Method,
    },
    /// Stable color refinement partition of the factor graph.
    Wl { instance: PathBuf },
    /// Whether two instances have equal multisets of iterated degrees.
    Equiv { left: PathBuf, right: PathBuf },
    /// Whether two instances are weakly congruent.
    #[command(name = "weak-congruent")]
    WeakCongruent { left: PathBuf, right: PathBuf },
    /// Run the anonymous-network protocol on the factor graph of I.
    Simulate {
        a: PathBuf,
        b: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        tau: Option<String>,
        /// Write a JSON-lines trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Exchange fixed-size digests instead of full colors.
        #[arg(long)]
        digest: bool,
    },
    /// Fractional homomorphism A -> B, or a separating instance.
    Frachom { a: PathBuf, b: PathBuf },
    /// Dual fractional homomorphism I -> J.
    Dualfrachom { left: PathBuf, right: PathBuf },
    /// The power structure LP^m(A).
    Power {
        template: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
    /// m-ary symmetric fractional polymorphism of (A, B).
    Sympoly {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
    /// Compare Opt(I, LP^m(A)) with the BLP optimum for m up to m*.
    #[command(name = "blp-power-check")]
    BlpPowerCheck { instance: PathBuf, template: PathBuf },
    /// Decompose an optimal SA1 solution and verify the three clauses.
    Decompose { instance: PathBuf, template: PathBuf },
    /// The k-fold twist I^(k) of a connected instance.
    Twist {
        instance: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Encode c-approximation of MaxCSP over a crisp template; with an
    /// instance, also emit the instance and its threshold.
    #[command(name = "maxcsp-encode")]
    MaxcspEncode {
        template: PathBuf,
        instance: Option<PathBuf>,
        #[arg(long, default_value = "1")]
        c: String,
        #[arg(long, default_value = "1")]
        beta: String,
    },
    /// Generate a random fixture.
    Gen {
        #[arg(long, value_enum, default_value = "instance")]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 3)]
        constraints: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        #[arg(long, default_value_t = 1)]
        symbols: usize,
    },
}

enum Failure {
    Domain(String),
    Usage(String),
}

impl From<pvcsp::Error> for Failure {
    fn from(e: pvcsp::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<StructureFile> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn structure(path: &Path) -> CliResult<ValuedStructure> {
    Ok(read(path)?.structure)
}

fn threshold(tau: &Option<String>, file: &StructureFile) -> CliResult<Rat> {
    match (tau, &file.threshold) {
        (Some(t), _) => parse_rat(t).map_err(|e| Failure::Usage(format!("--tau: {e}"))),
        (None, Some(t)) => Ok(t.clone()),
        (None, None) => Err(Failure::Usage("no threshold: pass --tau or add a threshold line".into())),
    }
}

fn rational(flag: &str, text: &str) -> CliResult<Rat> {
    parse_rat(text).map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

/// Output of a command: plain text and its JSON form.
struct Output {
    text: String,
    json: Value,
}

fn out(text: impl Into<String>, json: Value) -> Output {
    Output {
        text: text.into(),
        json,
    }
}

fn relaxation(instance: &Path, template: &Path, flavor: Flavor) -> CliResult<Output> {
    let (i, a) = (structure(instance)?, structure(template)?);
    let (value, point, prog) = opt_relaxation(&i, &a, flavor)?;
    let mut j = prog.to_json();
    j["value"] = json!(value.to_string());
    j["point"] = point.map_or(Value::Null, |p| prog.point_json(&p));
    Ok(out(value.to_string(), j))
}

fn frac_hom_json(outcome: &FracHomOutcome, a: &ValuedStructure, b: &ValuedStructure) -> (String, Value) {
    match outcome {
        FracHomOutcome::Distribution { mu, normalized } => (
            format_distribution(mu, a.universe(), b.universe()),
            json!({
                "found": true,
                "normalized": normalized,
                "distribution": mu.to_json(a.universe(), b.universe()),
            }),
        ),
        FracHomOutcome::Counterexample(c) => (
            format!(
                "none\ncounterexample: Opt(I*, source) = {}, Opt(I*, target) = {}\n{}",
                c.opt_source,
                c.opt_target,
                c.instance.to_text(None).trim_end()
            ),
            json!({
                "found": false,
                "counterexample": {
                    "instance": c.instance.to_text(None),
                    "opt_source": c.opt_source.to_string(),
                    "opt_target": c.opt_target.to_string(),
                    "perturbed": c.perturbed,
                },
            }),
        ),
    }
}

fn format_distribution(mu: &MapDistribution, source: &[String], target: &[String]) -> String {
    mu.support()
        .iter()
        .map(|(f, p)| {
            let map: Vec<String> = f
                .iter()
                .enumerate()
                .map(|(i, &b)| format!("{}->{}", source[i], target[b]))
                .collect();
            format!("{} {}", fmt_rat(p), map.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: &Cli) -> CliResult<Output> {
    let map_budget = cli.budget.unwrap_or(DEFAULT_MAP_BUDGET);
    match &cli.command {
        Command::Opt { instance, template } => {
            let (i, a) = (structure(instance)?, structure(template)?);
            let (value, h) = opt_with_budget(&i, &a, cli.budget.unwrap_or(DEFAULT_OPT_BUDGET))?;
            let assignment: serde_json::Map<String, Value> = i
                .universe()
                .iter()
                .zip(&h)
                .map(|(v, &x)| (v.clone(), json!(a.universe()[x])))
                .collect();
            Ok(out(value.to_string(), json!({"value": value.to_string(), "assignment": assignment})))
        }
        Command::Blp { instance, template } => relaxation(instance, template, Flavor::Blp),
        Command::Sa1 { instance, template } => relaxation(instance, template, Flavor::Sa1),
        Command::Sa1Reduced { instance, template } => relaxation(instance, template, Flavor::Sa1Reduced),
        Command::Decide {
            a,
            b,
            instance,
            tau,
            method,
        } => {
            let file = read(instance)?;
            let tau = threshold(tau, &file)?;
            let (ta, tb) = (structure(a)?, structure(b)?);
            ta.ensure_similar(&tb)?;
            let value = method_optimum(&file.structure, &ta, *method)?;
            let verdict = Verdict::from_bound(&value, &tau);
            Ok(out(
                verdict.to_string(),
                json!({
                    "verdict": verdict.to_string(),
                    "method": method.to_string(),
                    "tau": fmt_rat(&tau),
                    "value": value.to_string(),
                }),
            ))
        }
        Command::Wl { instance } => {
            let i = structure(instance)?;
            let g = FactorGraph::new(&i)?;
            let p = refine(&g);
            let names: Vec<String> = (0..g.num_vertices())
                .map(|x| match g.kind(x) {
                    VertexKind::Variable(v) => i.universe()[v].clone(),
                    VertexKind::Constraint(c) => {
                        let con = &g.constraints()[c];
                        let vars: Vec<&str> = con.vars.iter().map(|&v| i.universe()[v].as_str()).collect();
                        format!("{}({})", i.signature().name(con.symbol), vars.join(","))
                    }
                })
                .collect();
            let colors: serde_json::Map<String, Value> =
                names.iter().zip(&p.colors).map(|(n, &c)| (n.clone(), json!(c))).collect();
            let digests = p.digests();
            let text = names
                .iter()
                .zip(&p.colors)
                .map(|(n, c)| format!("{n} {c}"))
                .chain(std::iter::once(format!("rounds {}", p.rounds)))
                .collect::<Vec<_>>()
                .join("\n");
            Ok(out(
                text,
                json!({"colors": colors, "digests": digests, "rounds": p.rounds}),
            ))
        }
        Command::Equiv { left, right } => {
            let r = equiv1(&structure(left)?, &structure(right)?)?;
            Ok(out(r.to_string(), json!({"equivalent": r})))
        }
        Command::WeakCongruent { left, right } => {
            let r = weak_congruent(&structure(left)?, &structure(right)?)?;
            Ok(out(r.to_string(), json!({"weakly_congruent": r})))
        }
        Command::Simulate {
            a,
            b,
            instance,
            tau,
            trace,
            digest,
        } => {
            let file = read(instance)?;
            let tau = threshold(tau, &file)?;
            let mut net = build_network(&file.structure, &structure(a)?, &structure(b)?, &tau, *digest)?;
            let agents = net.num_agents();
            let result = net.run()?;
            if let Some(path) = trace {
                fs::write(path, net.trace_jsonl())
                    .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
            }
            Ok(out(
                format!("{}\nrounds {}", result.verdict, result.rounds),
                json!({
                    "verdict": result.verdict.to_string(),
                    "value": result.value.to_string(),
                    "rounds": result.rounds,
                    "agents": agents,
                    "tau": fmt_rat(&tau),
                }),
            ))
        }
        Command::Frachom { a, b } => {
            let (ta, tb) = (structure(a)?, structure(b)?);
            let outcome = frac_hom(&ta, &tb, map_budget)?;
            let (text, j) = frac_hom_json(&outcome, &ta, &tb);
            Ok(out(text, j))
        }
        Command::Dualfrachom { left, right } => {
            let (i, j) = (structure(left)?, structure(right)?);
            match dual_frac_hom(&i, &j, map_budget)? {
                Some(eta) => Ok(out(
                    format_distribution(&eta, i.universe(), j.universe()),
                    json!({"found": true, "distribution": eta.to_json(i.universe(), j.universe())}),
                )),
                None => Ok(out("none", json!({"found": false}))),
            }
        }
        Command::Power { template, m } => {
            let a = structure(template)?;
            let p = power_lp(&a, *m, cli.budget.unwrap_or(DEFAULT_POWER_BUDGET))?;
            let text = p.structure.to_text(None);
            Ok(out(text.trim_end(), json!({"m": p.m, "structure": text})))
        }
        Command::Sympoly { a, b, m } => {
            let (ta, tb) = (structure(a)?, structure(b)?);
            let r = sym_frac_polymorphism(&ta, &tb, *m, map_budget)?;
            let (text, mut j) = frac_hom_json(&r.result, &r.power.structure, &tb);
            j["m"] = json!(m);
            if let Some((lp_m, blp)) = &r.chain {
                j["chain"] = json!({"opt_power": lp_m.to_string(), "opt_blp": blp.to_string()});
            }
            Ok(out(text, j))
        }
        Command::BlpPowerCheck { instance, template } => {
            let (i, a) = (structure(instance)?, structure(template)?);
            let r = blp_power_consistency(&i, &a, cli.budget.unwrap_or(DEFAULT_POWER_BUDGET))?;
            let status = match r.status {
                PowerCheckStatus::Consistent => "consistent",
                PowerCheckStatus::Inconsistent => "inconsistent",
                PowerCheckStatus::Skipped => "skipped",
            };
            let per_m: Vec<Value> = r
                .per_m
                .iter()
                .map(|(m, v)| json!({"m": m, "opt": v.to_string()}))
                .collect();
            let mut text = format!("blp {}\nm* {}", r.blp, r.m_star);
            for (m, v) in &r.per_m {
                text.push_str(&format!("\nm={m} {v}"));
            }
            text.push_str(&format!("\n{status}"));
            Ok(out(
                text,
                json!({"blp": r.blp.to_string(), "m_star": r.m_star, "per_m": per_m, "status": status}),
            ))
        }
        Command::Decompose { instance, template } => {
            let (i, a) = (structure(instance)?, structure(template)?);
            let d = decompose(&i, &a)?;
            let report = verify_decomposition(&i, &a, &d)?;
            let mut j = d.to_json(&i, &a);
            j["verification"] = json!({
                "dual_hom": report.dual_hom,
                "equivalent": report.equivalent,
                "value": report.value,
                "val_y2": report.val_y2.to_string(),
                "passed": report.passed(),
            });
            j["y1"] = json!(d.y1.to_text(None));
            j["y2"] = json!(d.y2.to_text(None));
            let text = format!(
                "m {}\nsa1 {}\nval(Y2, A, h) {}\n{}",
                d.m,
                d.sa1,
                report.val_y2,
                match report.first_failure() {
                    None => "verified".to_string(),
                    Some(f) => format!("failed: {f}"),
                }
            );
            Ok(out(text, j))
        }
        Command::Twist { instance, k } => {
            let i = structure(instance)?;
            let t = k_fold_twist(&i, *k)?;
            let text = t.scaled.to_text(None);
            Ok(out(
                text.trim_end(),
                json!({
                    "k": t.k,
                    "scaled": text,
                    "unscaled": t.unscaled.to_text(None),
                    "embedding": t.embedding.to_json(i.universe(), t.unscaled.universe()),
                    "projection": t.projection.to_json(t.unscaled.universe(), i.universe()),
                }),
            ))
        }
        Command::MaxcspEncode {
            template,
            instance,
            c,
            beta,
        } => {
            let t = CrispStructure::from_zero_cost(&structure(template)?);
            let (a1, b1) = maxcsp_encode(&t, &rational("c", c)?)?;
            let mut j = json!({"a": a1.to_text(None), "b": b1.to_text(None)});
            let mut text = format!("{}\n{}", a1.to_text(None), b1.to_text(None));
            if let Some(path) = instance {
                let ci = CrispStructure::from_support(&structure(path)?);
                let inst = maxcsp_instance(&ci, &rational("beta", beta)?)?;
                let itext = inst.structure.to_text(inst.threshold.as_ref());
                text.push('\n');
                text.push_str(&itext);
                j["instance"] = json!(itext);
            }
            Ok(out(text.trim_end(), j))
        }
        Command::Gen {
            kind,
            seed,
            size,
            constraints,
            max_arity,
            symbols,
        } => {
            let mut rng = gen::rng(*seed);
            let cfg = GenConfig {
                symbols: *symbols,
                max_arity: *max_arity,
                ..GenConfig::default()
            };
            let sig = gen::random_signature(&mut rng, cfg.symbols, cfg.max_arity)?;
            let s = match kind {
                GenKind::Instance => gen::random_instance(&mut rng, "I", &sig, *size, *constraints)?,
                GenKind::Connected => gen::random_connected_instance(&mut rng, "I", &sig, *size, *constraints)?,
                GenKind::Template => gen::random_template(&mut rng, "A", &sig, *size, cfg.inf_percent)?,
            };
            let text = s.to_text(None);
            Ok(out(text.trim_end(), json!({"structure": text})))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            let body = if cli.json {
                serde_json::to_string_pretty(&o.json).expect("json values serialize")
            } else {
                o.text
            };
            // A closed pipe is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

