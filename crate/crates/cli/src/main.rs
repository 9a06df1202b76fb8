//! `mgg`: run derivations, sequence analyses and condition transformations
//! over a grammar document.
//!
//! Exit status: 0 when the command succeeds or the property holds, 1 when the
//! property fails, 2 on input errors.

mod dot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mgg_core::conditions::{
    check_condition, compile, delocalize, post_to_pre, pre_to_post, satisfies, satisfies_at,
    Anchor, CompileOptions, Condition, Stage,
};
use mgg_core::multigraph::{check_mc, decode, encode, lift_rule, xi_expand};
use mgg_core::sequence::first_execution;
use mgg_core::{find_matches, g_congruent, tot, GrammarDocument, Production};

use report::{Item, Report};

#[derive(Parser)]
#[command(name = "mgg", version, about = "Boolean-matrix graph rewriting")]
struct Cli {
    /// Grammar document (TOML).
    #[arg(short, long)]
    doc: PathBuf,

    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,

    /// Node budget for closure when no host graph is given.
    #[arg(long, global = true)]
    budget: Option<usize>,

    /// Largest number of branches a condition may expand to.
    #[arg(long, global = true, default_value_t = 4096)]
    branch_cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Pre,
    Post,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a rule to a graph at one of its matches.
    Apply {
        rule: String,
        graph: String,
        /// Index of the match to use.
        #[arg(long = "match", default_value_t = 0)]
        index: usize,
        /// Remove edges that would dangle before applying.
        #[arg(long)]
        epsilon: bool,
    },
    /// Apply a sequence to a graph.
    Derive { sequence: String, graph: String },
    /// Coherence, compatibility, minimal and negative initial digraphs.
    CheckSeq { sequence: String },
    /// Whether a sequence and a reordering of its rules are G-congruent.
    Congruence { first: String, second: String },
    /// Evaluate a constraint or application condition on a graph.
    Satisfies {
        graph: String,
        condition: String,
        /// For application conditions, evaluate at this match only.
        #[arg(long = "match")]
        index: Option<usize>,
    },
    /// Compile an application condition into sequences.
    CompileAc {
        condition: String,
        rule: Option<String>,
        #[arg(long)]
        host: String,
    },
    /// Turn a precondition into the equivalent postcondition.
    #[command(name = "pre2post")]
    PreToPost {
        condition: String,
        rule: Option<String>,
    },
    /// Turn a postcondition into the equivalent precondition.
    #[command(name = "post2pre")]
    PostToPre {
        condition: String,
        rule: Option<String>,
    },
    /// Attach a graph constraint to a rule of a sequence.
    Delocalize {
        condition: String,
        sequence: String,
        /// Rule to attach to (application order, from 0).
        #[arg(long)]
        to: usize,
        /// State the constraint holds in; defaults to the state before the rule.
        #[arg(long)]
        state: Option<usize>,
        #[arg(long, value_enum, default_value = "pre")]
        stage: StageArg,
    },
    /// Multidigraph encoding.
    #[command(subcommand)]
    Multi(MultiCommand),
    /// Print a graph in Graphviz format.
    ExportDot { graph: String },
    /// Print the document in normal form.
    Format,
}

#[derive(Subcommand)]
enum MultiCommand {
    /// Encode a multidigraph as a simple digraph.
    Encode { multigraph: String },
    /// Decode a simple digraph; fails if it violates the multidigraph constraint.
    Decode { graph: String },
    /// Apply a multidigraph rule, expanding node deletion as needed.
    Apply {
        rule: String,
        multigraph: String,
        #[arg(long = "match", default_value_t = 0)]
        index: usize,
        /// Fold the edge-removal rule into the multinode-removal rule.
        #[arg(long)]
        fused: bool,
    },
}

struct Outcome {
    report: Report,
    holds: bool,
    /// Raw output printed instead of the report in text mode.
    raw: Option<String>,
}

impl Outcome {
    fn ok(report: Report) -> Outcome {
        Outcome::holds(report, true)
    }

    fn holds(report: Report, holds: bool) -> Outcome {
        Outcome {
            report,
            holds,
            raw: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                let mut v = out.report.to_json();
                if let (Some(raw), Some(map)) = (&out.raw, v.as_object_mut()) {
                    map.insert("output".into(), serde_json::Value::String(raw.clone()));
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else if let Some(raw) = &out.raw {
                print!("{raw}");
            } else {
                print!("{}", out.report.render_text());
            }
            if out.holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn options(cli: &Cli) -> CompileOptions {
    CompileOptions {
        branch_cap: cli.branch_cap,
        budget: cli.budget,
    }
}

/// The condition attached to `rule`: constraints become preconditions (or
/// postconditions for `post`); attached conditions must name the same rule.
fn attach(doc: &GrammarDocument, name: &str, rule: Option<&str>, post: bool) -> Result<Condition> {
    let c = doc.condition(name)?;
    let Some(rule) = rule else {
        return Ok(c.clone());
    };
    let p = doc.rule(rule)?;
    match &c.anchor {
        Anchor::None if post => Ok(Condition::post(p, c.diagram.clone(), c.formula.clone())?),
        Anchor::None => Ok(Condition::pre(p, c.diagram.clone(), c.formula.clone())?),
        Anchor::Pre(q) | Anchor::Post(q) if q == p => Ok(c.clone()),
        _ => bail!("condition {name} belongs to another rule"),
    }
}

/// `order[k]`: position in `from` of the `k`-th rule of `to`, matching
/// repeated names in order of occurrence.
fn reordering(from: &[String], to: &[String]) -> Option<Vec<usize>> {
    if from.len() != to.len() {
        return None;
    }
    let mut used = vec![false; from.len()];
    to.iter()
        .map(|name| {
            let i = (0..from.len()).find(|&i| !used[i] && from[i] == *name)?;
            used[i] = true;
            Some(i)
        })
        .collect()
}

fn run(cli: &Cli) -> Result<Outcome> {
    let doc = GrammarDocument::load(&cli.doc)?;
    let mut r = Report::new();
    match &cli.command {
        Command::Apply {
            rule,
            graph,
            index,
            epsilon,
        } => {
            let p = doc.rule(rule)?;
            let g = doc.graph(graph)?;
            let matches = find_matches(p, g);
            r.text("rule", rule)
                .text("graph", graph)
                .count("matches", matches.len());
            let Some(m) = matches.get(*index) else {
                r.flag("applied", false);
                return Ok(Outcome::holds(r, false));
            };
            r.list(
                "match",
                m.node_map().iter().map(|(a, b)| format!("{a}={b}")),
            );
            let step = if *epsilon {
                p.apply_with_epsilon(g, m)
            } else {
                p.apply(g, m)
            };
            match step {
                Ok(step) => {
                    r.flag("applied", true);
                    if !step.epsilon.is_empty() {
                        r.push(
                            "epsilon",
                            Item::Entries(step.epsilon.iter().map(report::production).collect()),
                        );
                    }
                    r.graph("result", &step.after);
                    Ok(Outcome::ok(r))
                }
                Err(e) => {
                    r.flag("applied", false).text("reason", e);
                    Ok(Outcome::holds(r, false))
                }
            }
        }
        Command::Derive { sequence, graph } => {
            let s = doc.sequence(sequence)?;
            let g = doc.graph(graph)?;
            r.text("sequence", &s);
            match first_execution(&s, g) {
                Some(exec) => {
                    r.flag("applicable", true);
                    r.list(
                        "assignment",
                        exec.assignment.iter().map(|(a, b)| format!("{a}={b}")),
                    );
                    r.graph("result", exec.result().unwrap_or(g));
                    Ok(Outcome::ok(r))
                }
                None => {
                    r.flag("applicable", false);
                    Ok(Outcome::holds(r, false))
                }
            }
        }
        Command::CheckSeq { sequence } => {
            let s = doc.sequence(sequence)?;
            let a = s.analyze();
            r.text("sequence", &s)
                .flag("coherent", a.coherent)
                .flag("compatible", a.compatible)
                .graph("MID", &a.mid.compact())
                .list("NID", report::edges(&a.nid.edge_list()))
                .list(
                    "conflicts",
                    a.conflicts
                        .iter()
                        .map(|c| format!("{:?} {} at rule {}", c.kind, c.element, c.rule)),
                );
            Ok(Outcome::holds(r, a.applicable()))
        }
        Command::Congruence { first, second } => {
            // the second sequence is read as a reordering of the first one's
            // rules, so both share the first sequence's identifications
            let s1 = doc.sequence(first)?;
            let order = reordering(&doc.sequences[first].rules, &doc.sequences[second].rules)
                .ok_or_else(|| anyhow!("{second} does not reorder the rules of {first}"))?;
            let s2 = s1.permuted(&order)?;
            r.text("first", &s1).text("second", &s2);
            let c = g_congruent(&s1, &s2)?;
            r.flag("congruent", c.congruent)
                .graph("delta MID", &c.delta_mid.compact())
                .list("delta NID", report::edges(&c.delta_nid.edge_list()));
            Ok(Outcome::holds(r, c.congruent))
        }
        Command::Satisfies {
            graph,
            condition,
            index,
        } => {
            let g = doc.graph(graph)?;
            let c = doc.condition(condition)?;
            let holds = match (index, c.production()) {
                (None, _) => satisfies(g, c)?,
                (Some(k), Some(p)) => {
                    let matches = find_matches(p, g);
                    let m = matches
                        .get(*k)
                        .ok_or_else(|| anyhow!("rule {} has no match {k}", p.name()))?;
                    r.list(
                        "match",
                        m.node_map().iter().map(|(a, b)| format!("{a}={b}")),
                    );
                    satisfies_at(g, c, m.node_map())?
                }
                (Some(_), None) => bail!("--match needs an application condition"),
            };
            r.text("condition", condition)
                .text("graph", graph)
                .flag("satisfied", holds);
            Ok(Outcome::holds(r, holds))
        }
        Command::CompileAc {
            condition,
            rule,
            host,
        } => {
            let c = attach(&doc, condition, rule.as_deref(), false)?;
            let g = doc.graph(host)?;
            let branches = compile(&c, Some(g), &options(cli))?;
            let check = check_condition(&c, g, &options(cli))?;
            r.text("condition", condition)
                .count("sequences", branches.len());
            r.push(
                "branches",
                Item::Entries(
                    branches
                        .iter()
                        .map(|b| {
                            let mut e = Report::new();
                            e.text("sequence", &b.sequence)
                                .list("literals", b.literals.iter().map(|a| a.to_string()));
                            e
                        })
                        .collect(),
                ),
            );
            r.flag("consistent", check.consistent)
                .flag("coherent", check.coherent)
                .flag("compatible", check.compatible);
            Ok(Outcome::ok(r))
        }
        Command::PreToPost { condition, rule } => {
            let c = attach(&doc, condition, rule.as_deref(), false)?;
            r.section("postcondition", report::condition(&pre_to_post(&c)?));
            Ok(Outcome::ok(r))
        }
        Command::PostToPre { condition, rule } => {
            let c = attach(&doc, condition, rule.as_deref(), true)?;
            r.section("precondition", report::condition(&post_to_pre(&c)?));
            Ok(Outcome::ok(r))
        }
        Command::Delocalize {
            condition,
            sequence,
            to,
            state,
            stage,
        } => {
            let gc = doc.condition(condition)?;
            let rules: Vec<Production> = doc.sequence_rules(sequence)?;
            let stage = match stage {
                StageArg::Pre => Stage::Pre,
                StageArg::Post => Stage::Post,
            };
            let ac = delocalize(gc, &rules, state.unwrap_or(*to), *to, stage)?;
            r.section("condition", report::condition(&ac));
            Ok(Outcome::ok(r))
        }
        Command::Multi(MultiCommand::Encode { multigraph }) => {
            let g = encode(doc.multigraph(multigraph)?)?;
            r.graph("encoded", &g);
            Ok(Outcome::ok(r))
        }
        Command::Multi(MultiCommand::Decode { graph }) => {
            let g = doc.graph(graph)?;
            let mc = check_mc(g)?;
            r.flag("gc0", mc.gc0)
                .flag("gc1", mc.gc1)
                .list("violations", mc.violations.iter().map(|v| v.to_string()));
            if !mc.holds() {
                return Ok(Outcome::holds(r, false));
            }
            r.section("multigraph", report::multigraph(&decode(g)?));
            Ok(Outcome::ok(r))
        }
        Command::Multi(MultiCommand::Apply {
            rule,
            multigraph,
            index,
            fused,
        }) => {
            let lifted = lift_rule(doc.multirule(rule)?)?;
            let host = encode(doc.multigraph(multigraph)?)?;
            let p = &lifted.production;
            let matches = tot(p.lhs(), &host);
            r.count("matches", matches.len());
            let Some(m) = matches.get(*index) else {
                r.flag("applied", false);
                return Ok(Outcome::holds(r, false));
            };
            let x = xi_expand(p, &host, m, *fused)?;
            r.text("chain", &x.sequence);
            match x.apply(&host) {
                Ok(after) => {
                    r.flag("applied", true)
                        .section("result", report::multigraph(&decode(&after)?));
                    Ok(Outcome::ok(r))
                }
                Err(e) => {
                    r.flag("applied", false).text("reason", e);
                    Ok(Outcome::holds(r, false))
                }
            }
        }
        Command::ExportDot { graph } => {
            let (g, name) = match doc.graph(graph) {
                Ok(g) => (g.clone(), graph),
                Err(_) => (
                    encode(
                        doc.multigraph(graph)
                            .context(format!("no graph or multigraph named {graph}"))?,
                    )?,
                    graph,
                ),
            };
            let out = dot::to_dot(name, &g);
            r.text("graph", graph);
            Ok(Outcome {
                report: r,
                holds: true,
                raw: Some(out),
            })
        }
        Command::Format => Ok(Outcome {
            report: r,
            holds: true,
            raw: Some(doc.to_toml()),
        }),
    }
}
