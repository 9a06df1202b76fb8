//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. All sampling is seeded; counts are fixed below.

#[path = "acceptance/gen.rs"]
mod gen;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gen::{build, condition, parts, rebuild, Gen, Nodes, Op, Place};
use mgg_core::conditions::{closure, compile, decompose, match_op, nac, Condition, Diagram};
use mgg_core::multigraph::{check_mc, xi_expand};
use mgg_core::{
    adapted_fixpoint, applicable, decode, delocalize, encode, find_matches, lift_rule, post_to_pre,
    pre_to_post, satisfies, satisfies_at, tot, BoolMatrix, BoolVector, CompileOptions, ElemId,
    Formula, GrammarDocument, NodeMap, Production, Stage, TypeSet, TypedGraph, Universe,
};

const RULES: usize = 200;
const MATCH_PAIRS: usize = 1000;
const NORM_PAIRS: usize = 1000;
const SEQUENCES: usize = 300;
const PAIRS_PER_OPERATOR: usize = 200;
const NAC_CONDITIONS: usize = 100;
const ROUND_TRIPS: usize = 200;
const DELOCALIZATIONS: usize = 100;
const MULTIGRAPHS: usize = 200;
const XI_DERIVATIONS: usize = 200;

type Verdict = Result<String, String>;

fn id(s: &str) -> ElemId {
    ElemId::new(s)
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn plant() -> GrammarDocument {
    GrammarDocument::load(&corpus("plant.toml")).expect("plant corpus")
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn with_edge(g: &TypedGraph, a: &str, b: &str) -> TypedGraph {
    let (nodes, mut edges) = parts(g);
    edges.push((a.into(), b.into()));
    rebuild(&nodes, &edges)
}

fn rule_algebra() -> Verdict {
    let mut g = Gen::new(1);
    for k in 0..RULES {
        let pool = g.nodes("", 1, 6);
        let p = g.rule("p", &pool);
        let u = p.universe();
        let (l, r) = (p.lhs(), p.rhs());
        let (e, rr) = (&p.erase().edges, &p.restock().edges);
        for a in u.ids() {
            for b in u.ids() {
                let (in_l, in_r) = (l.has_edge(a, b), r.has_edge(a, b));
                ensure(e.get_ids(a, b) == (in_l && !in_r), || {
                    format!("rule {k}: e({a},{b})")
                })?;
                ensure(rr.get_ids(a, b) == (in_r && !in_l), || {
                    format!("rule {k}: r({a},{b})")
                })?;
            }
            let (in_l, in_r) = (l.has_node(a), r.has_node(a));
            ensure(p.erase().nodes.get_id(a) == (in_l && !in_r), || {
                format!("rule {k}: e({a})")
            })?;
            ensure(p.restock().nodes.get_id(a) == (in_r && !in_l), || {
                format!("rule {k}: r({a})")
            })?;
        }
        let rebuilt = rr.or(&e.not().and(l.edges()).unwrap()).unwrap();
        ensure(&rebuilt == r.edges(), || format!("rule {k}: R != r | !e L"))?;
        let nodes = p
            .restock()
            .nodes
            .or(&p.erase().nodes.not().and(l.nodes()).unwrap())
            .unwrap();
        ensure(&nodes == r.nodes(), || {
            format!("rule {k}: node vector R != r | !e L")
        })?;
        ensure(e.and(rr).unwrap().is_zero(), || {
            format!("rule {k}: e & r != 0")
        })?;
        ensure(&e.not().and(rr).unwrap() == rr, || {
            format!("rule {k}: !e & r != r")
        })?;
    }
    Ok(format!("{RULES} rules bit-exact"))
}

/// Injective, type-preserving maps of `L` carrying its edges, with no
/// nihilation edge between matched nodes present in the host.
fn match_oracle(p: &Production, host: &TypedGraph) -> BTreeSet<NodeMap> {
    let ln = p.lhs().node_ids();
    let hn = host.node_ids();
    let k: Vec<_> = p
        .nihil()
        .edge_list()
        .into_iter()
        .filter(|(a, b)| ln.contains(a) && ln.contains(b))
        .collect();
    let mut out = BTreeSet::new();
    let mut assign = vec![0usize; ln.len()];
    fn go(
        i: usize,
        assign: &mut Vec<usize>,
        ln: &[ElemId],
        hn: &[ElemId],
        visit: &mut dyn FnMut(&NodeMap),
    ) {
        if i == ln.len() {
            let m = ln
                .iter()
                .zip(assign.iter())
                .map(|(a, h)| (a.clone(), hn[*h].clone()))
                .collect();
            visit(&m);
            return;
        }
        for h in 0..hn.len() {
            if !assign[..i].contains(&h) {
                assign[i] = h;
                go(i + 1, assign, ln, hn, visit);
            }
        }
    }
    go(0, &mut assign, &ln, &hn, &mut |m| {
        let typed = ln
            .iter()
            .all(|n| p.lhs().types_of(n) == host.types_of(&m[n]));
        let edges = p
            .lhs()
            .edge_list()
            .iter()
            .all(|(a, b)| host.has_edge(&m[a], &m[b]));
        let clear = k.iter().all(|(a, b)| !host.has_edge(&m[a], &m[b]));
        if typed && edges && clear {
            out.insert(m.clone());
        }
    });
    out
}

fn nihilation() -> Verdict {
    let doc = plant();
    let consume = doc.rule("consume").unwrap();
    let host = doc.graph("plant").unwrap();
    ensure(consume.nihil().has_edge(&id("m"), &id("m")), || {
        "K lacks the machine self-loop".into()
    })?;
    ensure(!find_matches(consume, host).is_empty(), || {
        "no match on the idle plant".into()
    })?;
    let busy = with_edge(host, "m", "m");
    ensure(find_matches(consume, &busy).is_empty(), || {
        "matched a busy machine".into()
    })?;

    let mut g = Gen::new(2);
    let mut matches = 0;
    for k in 0..MATCH_PAIRS {
        let pool = g.nodes("", 1, 4);
        let p = g.rule("p", &pool);
        let host = g.graph("h", 1, 6, 0.3);
        let found: BTreeSet<NodeMap> = find_matches(&p, &host)
            .iter()
            .map(|m| m.node_map().clone())
            .collect();
        for m in &found {
            for (a, b) in p.nihil().edge_list() {
                if let (Some(x), Some(y)) = (m.get(&a), m.get(&b)) {
                    ensure(!host.has_edge(x, y), || {
                        format!("pair {k}: K-edge ({a},{b}) matched")
                    })?;
                }
            }
        }
        ensure(found == match_oracle(&p, &host), || {
            format!("pair {k}: matches differ from the oracle")
        })?;
        matches += found.len();
    }
    Ok(format!(
        "busy machine rejected; {MATCH_PAIRS} pairs, {matches} matches, no K-edge hit"
    ))
}

fn compatibility() -> Verdict {
    let doc = plant();
    ensure(doc.graph("plant").unwrap().compatible(), || {
        "plant graph not compatible".into()
    })?;
    let mut g = Gen::new(3);
    let mut yes = 0;
    for k in 0..NORM_PAIRS {
        let n = g.range(1, 8);
        let u = Universe::new((0..n).map(|i| id(&format!("v{i}"))).collect()).unwrap();
        let mut m = BoolMatrix::zeros(&u);
        let mut v = BoolVector::zeros(&u);
        let mut dangling = Vec::new();
        for i in 0..n {
            v.set(i, g.coin(0.8));
        }
        for i in 0..n {
            for j in 0..n {
                if g.coin(0.15) {
                    m.set(i, j, true);
                    if !(v.get(i) && v.get(j)) {
                        dangling.push((u.ids()[i].clone(), u.ids()[j].clone()));
                    }
                }
            }
        }
        let typing = u
            .ids()
            .iter()
            .map(|i| (i.clone(), TypeSet::single("T")))
            .collect();
        let graph = TypedGraph::new(m, v, typing).unwrap();
        ensure(graph.compatible() == dangling.is_empty(), || {
            format!("pair {k}: compatible disagrees")
        })?;
        ensure(graph.dangling_edges() == dangling, || {
            format!("pair {k}: dangling edges differ")
        })?;
        yes += usize::from(dangling.is_empty());
    }
    Ok(format!(
        "plant compatible; {NORM_PAIRS} pairs agree ({yes} compatible)"
    ))
}

fn identity_pins(g: &TypedGraph) -> NodeMap {
    g.node_ids().into_iter().map(|n| (n.clone(), n)).collect()
}

fn runs_at_identity(s: &mgg_core::CompletedSequence, host: &TypedGraph) -> bool {
    applicable(&s.clone().with_pins(identity_pins(host)), host)
}

fn sequence_oracle() -> Verdict {
    let mut g = Gen::new(4);
    let (mut good, mut perturbed) = (0, 0);
    for k in 0..SEQUENCES {
        let s = g.sequence(5);
        let report = s.analyze();
        let mid = report.mid.compact();
        let predicted = report.coherent && report.compatible;
        ensure(runs_at_identity(&s, &mid) == predicted, || {
            format!("sequence {k} ({s}): analysis says {predicted}")
        })?;
        if !predicted {
            continue;
        }
        good += 1;
        let (nodes, edges) = parts(&mid);
        for drop in &edges {
            let rest: Vec<_> = edges.iter().filter(|e| *e != drop).cloned().collect();
            ensure(!runs_at_identity(&s, &rebuild(&nodes, &rest)), || {
                format!("sequence {k}: MID edge {drop:?} is not needed")
            })?;
            perturbed += 1;
        }
        for (n, _) in &nodes {
            let keep: Vec<_> = nodes.iter().filter(|(x, _)| x != n).cloned().collect();
            let rest: Vec<_> = edges
                .iter()
                .filter(|(a, b)| a != n && b != n)
                .cloned()
                .collect();
            ensure(!runs_at_identity(&s, &rebuild(&keep, &rest)), || {
                format!("sequence {k}: MID node {n} is not needed")
            })?;
            perturbed += 1;
        }
        for (a, b) in report.nid.edge_list() {
            if !mid.has_node(&a) || !mid.has_node(&b) {
                continue;
            }
            let more = with_edge(&mid, a.as_str(), b.as_str());
            ensure(!runs_at_identity(&s, &more), || {
                format!("sequence {k}: NID edge ({a},{b}) is harmless")
            })?;
            perturbed += 1;
        }
    }
    Ok(format!(
        "{SEQUENCES} sequences agree ({good} applicable), {perturbed} perturbations rejected"
    ))
}

fn any_applicable(c: &Condition, host: &TypedGraph, opts: &CompileOptions) -> Result<bool, String> {
    let branches = compile(c, Some(host), opts).map_err(|e| e.to_string())?;
    Ok(branches.iter().any(|b| applicable(&b.sequence, host)))
}

/// The four branches must pick, per replica, either the negated `A0` or `A1`.
fn busy_branches() -> Result<(), String> {
    let doc = plant();
    let busy = doc.condition("busy").unwrap();
    let host = doc.graph("two_cells").unwrap();
    let branches =
        compile(busy, Some(host), &CompileOptions::default()).map_err(|e| e.to_string())?;
    ensure(branches.len() == 4, || {
        format!("busy compiles to {} sequences", branches.len())
    })?;
    let mut shapes = BTreeSet::new();
    for b in &branches {
        let mut picks = BTreeSet::new();
        for name in b.sequence.names() {
            if name == "consume" {
                continue;
            }
            let (negated, rest) = match (name.strip_prefix("id~_A0"), name.strip_prefix("id_A1")) {
                (Some(r), _) => (true, r),
                (_, Some(r)) => (false, r),
                _ => return Err(format!("unexpected rule {name}")),
            };
            let replica = rest
                .split('#')
                .nth(1)
                .and_then(|r| r.chars().next())
                .ok_or("no replica")?;
            picks.insert((replica, negated));
        }
        ensure(b.sequence.names().first() == Some(&"consume"), || {
            "consume must run first".into()
        })?;
        shapes.insert(picks);
    }
    let mut want = BTreeSet::new();
    for x in [true, false] {
        for y in [true, false] {
            want.insert(BTreeSet::from([('1', x), ('2', y)]));
        }
    }
    ensure(shapes == want, || format!("branch shapes {shapes:?}"))
}

fn compilation() -> Verdict {
    busy_branches()?;
    let opts = CompileOptions::default();
    let mut g = Gen::new(5);
    let mut tally = Vec::new();
    for op in [Op::Match, Op::Closure, Op::Decompose, Op::Nac] {
        let mut held = 0;
        for k in 0..PAIRS_PER_OPERATOR {
            let place = *g.pick(&[Place::Free, Place::Pre, Place::Post]);
            let c = condition(&mut g, op, place);
            let host = g.graph("h", 1, 4, 0.4);
            let want = satisfies(&host, &c).map_err(|e| e.to_string())?;
            let fail = |what: &str| {
                format!(
                    "{op:?} pair {k}: {what} disagrees (satisfies = {want}) on {}",
                    c.formula
                )
            };
            let transformed = match op {
                Op::Match => None,
                Op::Closure => Some(closure(&c, Some(&host), &opts)),
                Op::Decompose => Some(decompose(&c)),
                Op::Nac => Some(nac(&c, Some(&host), &opts)),
            };
            if let Some(t) = transformed {
                let t = t.map_err(|e| format!("{op:?} pair {k}: {e}"))?;
                ensure(
                    satisfies(&host, &t).map_err(|e| e.to_string())? == want,
                    || fail("transformed condition"),
                )?;
            } else {
                let got = match match_op(&c) {
                    Ok(s) => applicable(&s, &host),
                    // a contradictory match condition compiles to no sequence
                    Err(_) => !compile(&c, None, &opts)
                        .map_err(|e| e.to_string())?
                        .is_empty(),
                };
                ensure(got == want, || fail("match sequence"))?;
            }
            ensure(any_applicable(&c, &host, &opts)? == want, || {
                fail("compiled set")
            })?;
            held += usize::from(want);
        }
        tally.push(format!("{op:?} {held}/{PAIRS_PER_OPERATOR}"));
    }
    Ok(format!(
        "busy on two_cells gives 4 sequences; equivalence holds ({} satisfied)",
        tally.join(", ")
    ))
}

fn commutation() -> Verdict {
    let opts = CompileOptions::default();
    let mut g = Gen::new(6);
    for k in 0..NAC_CONDITIONS {
        let place = *g.pick(&[Place::Free, Place::Pre, Place::Post]);
        let c = condition(&mut g, Op::Nac, place);
        let host = g.graph("h", 1, 4, 0.4);
        let err = |e: mgg_core::Error| format!("condition {k}: {e}");
        let a = closure(&decompose(&c).map_err(err)?, Some(&host), &opts).map_err(err)?;
        let b = decompose(&closure(&c, Some(&host), &opts).map_err(err)?).map_err(err)?;
        ensure(a.canonical() == b.canonical(), || {
            format!(
                "condition {k}: {} vs {}",
                a.canonical().formula,
                b.canonical().formula
            )
        })?;
    }
    Ok(format!("{NAC_CONDITIONS} conditions commute"))
}

fn reverse_rule() -> Production {
    let l = build(
        &[("1".into(), "T"), ("2".into(), "T")],
        &[("1".into(), "2".into()), ("1".into(), "1".into())],
    );
    let r = build(
        &[("1".into(), "T"), ("2".into(), "T")],
        &[("2".into(), "1".into())],
    );
    Production::from_static("rev", &l, &r, &NodeMap::new()).unwrap()
}

fn edge_set(xs: &[(&str, &str)]) -> BTreeSet<(ElemId, ElemId)> {
    xs.iter().map(|(a, b)| (id(a), id(b))).collect()
}

fn loop_example() -> Result<(), String> {
    let a = build(
        &[("1".into(), "T"), ("2".into(), "T"), ("3".into(), "T")],
        &[
            ("1".into(), "2".into()),
            ("1".into(), "1".into()),
            ("3".into(), "2".into()),
        ],
    );
    let d = Diagram::new()
        .with_graph("A", &a)
        .with_morphism("L", "A", [("1", "1"), ("2", "2")]);
    let pre = Condition::pre(&reverse_rule(), d, Formula::parse("exists A . A").unwrap()).unwrap();
    let post = pre_to_post(&pre).map_err(|e| e.to_string())?;
    let v = &post.diagram.vars["A"];
    ensure(v.certain == edge_set(&[("2", "1"), ("3", "2")]), || {
        format!("moved example post certainty {:?}", v.certain)
    })?;
    ensure(v.nihil == edge_set(&[("1", "2"), ("1", "1")]), || {
        format!("moved example post nihil {:?}", v.nihil)
    })?;
    let back = post_to_pre(&post).map_err(|e| e.to_string())?;
    let v = &back.diagram.vars["A"];
    ensure(
        v.certain == edge_set(&[("1", "2"), ("1", "1"), ("3", "2")]),
        || "adapted example certainty".into(),
    )?;
    ensure(v.nihil == edge_set(&[("2", "1")]), || {
        "adapted example lacks (2,1)".into()
    })
}

fn round_trip() -> Verdict {
    loop_example()?;
    let mut g = Gen::new(7);
    let (mut checked, mut tries) = (0, 0);
    while checked < ROUND_TRIPS {
        tries += 1;
        ensure(tries < 50 * ROUND_TRIPS, || {
            format!("only {checked} consistent pairs found")
        })?;
        let op = *g.pick(&[Op::Match, Op::Nac, Op::Closure]);
        let c = condition(&mut g, op, Place::Pre);
        let host = g.graph("h", 2, 4, 0.35);
        let p = c.production().unwrap().clone();
        let witness = find_matches(&p, &host)
            .iter()
            .any(|m| satisfies_at(&host, &c, m.node_map()).unwrap_or(false));
        if !witness {
            continue;
        }
        let err = |e: mgg_core::Error| format!("pair {checked}: {e}");
        let adapted = adapted_fixpoint(&c).map_err(err)?;
        let again = adapted_fixpoint(&adapted).map_err(err)?;
        ensure(again.canonical() == adapted.canonical(), || {
            format!(
                "pair {checked}: {} became {}",
                adapted.formula, again.formula
            )
        })?;
        checked += 1;
    }
    Ok(format!(
        "loop example reproduced; {ROUND_TRIPS} consistent pairs are fixpoints ({tries} drawn)"
    ))
}

/// States of a two-rule derivation from `g0`, one per pair of matches.
fn derivations(rules: &[Production], g0: &TypedGraph) -> Vec<(Vec<TypedGraph>, Vec<NodeMap>)> {
    let mut out = Vec::new();
    for m0 in find_matches(&rules[0], g0) {
        let Ok(step0) = rules[0].apply(g0, &m0) else {
            continue;
        };
        let g1 = step0.after;
        for m1 in find_matches(&rules[1], &g1) {
            let Ok(step1) = rules[1].apply(&g1, &m1) else {
                continue;
            };
            out.push((
                vec![g0.clone(), g1.clone(), step1.after],
                vec![m0.node_map().clone(), m1.node_map().clone()],
            ));
        }
    }
    out
}

fn delocalization() -> Verdict {
    let mut g = Gen::new(8);
    let (mut instances, mut checks, mut tries) = (0, 0, 0);
    while instances < DELOCALIZATIONS {
        tries += 1;
        ensure(tries < 50 * DELOCALIZATIONS, || {
            format!("only {instances} instances with a derivation")
        })?;
        let op = *g.pick(&[Op::Match, Op::Nac, Op::Closure, Op::Decompose]);
        let gc = condition(&mut g, op, Place::Free);
        let pool: Nodes = vec![("1".into(), g.ty()), ("2".into(), g.ty())];
        let rules = vec![g.rule("p0", &pool), g.rule("p1", &pool)];
        let host = g.graph("h", 2, 4, 0.35);
        let runs = derivations(&rules, &host);
        if runs.is_empty() {
            continue;
        }
        for state in 0..=2usize {
            for (rule, stage) in [(state, Stage::Pre), (state, Stage::Post)]
                .into_iter()
                .chain(
                    state
                        .checked_sub(1)
                        .map(|r| [(r, Stage::Pre), (r, Stage::Post)])
                        .into_iter()
                        .flatten(),
                )
            {
                if rule > 1 {
                    continue;
                }
                let ac = delocalize(&gc, &rules, state, rule, stage)
                    .map_err(|e| format!("instance {instances} state {state} rule {rule}: {e}"))?;
                for (graphs, matches) in &runs {
                    let want = satisfies(&graphs[state], &gc).map_err(|e| e.to_string())?;
                    let got = satisfies_at(&graphs[rule], &ac, &matches[rule])
                        .map_err(|e| e.to_string())?;
                    ensure(got == want, || {
                        format!(
                            "instance {instances}: state {state}, {stage:?} of rule {rule} on {}",
                            gc.formula
                        )
                    })?;
                    checks += 1;
                }
            }
        }
        instances += 1;
    }
    Ok(format!(
        "{DELOCALIZATIONS} instances, {checks} evaluations agree"
    ))
}

/// Rows of 0/1 over `ids` as a set of edges.
fn printed(ids: &[&str], rows: &[&str]) -> BTreeSet<(ElemId, ElemId)> {
    let mut out = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, bit) in row.split_whitespace().enumerate() {
            if bit == "1" {
                out.insert((id(ids[i]), id(ids[j])));
            }
        }
    }
    out
}

fn lifted_matrices() -> Result<(), String> {
    let doc = GrammarDocument::load(&corpus("multigraph.toml")).map_err(|e| e.to_string())?;
    let lifted = lift_rule(doc.multirule("drop").unwrap()).map_err(|e| e.to_string())?;
    let p = &lifted.production;
    let full = ["1", "2", "3", "a1", "a2", "d"];
    let kept = ["1", "2", "3", "a2", "d"];
    let l = printed(
        &full,
        &[
            "0 0 0 1 1 1",
            "0 0 0 0 0 0",
            "0 0 0 0 0 0",
            "0 0 1 0 0 0",
            "0 0 1 0 0 0",
            "0 1 0 0 0 0",
        ],
    );
    let r = printed(
        &kept,
        &[
            "0 0 0 1 1",
            "0 0 0 0 0",
            "0 0 0 0 0",
            "0 0 1 0 0",
            "0 1 0 0 0",
        ],
    );
    let k = printed(
        &full,
        &[
            "0 0 0 0 0 0",
            "0 0 0 1 0 0",
            "0 0 0 1 0 0",
            "1 1 0 1 1 1",
            "0 0 0 1 0 0",
            "0 0 0 1 0 0",
        ],
    );
    let e = printed(
        &full,
        &[
            "0 0 0 1 0 0",
            "0 0 0 0 0 0",
            "0 0 0 0 0 0",
            "0 0 1 0 0 0",
            "0 0 0 0 0 0",
            "0 0 0 0 0 0",
        ],
    );
    let set = |g: &TypedGraph| g.edge_list().into_iter().collect::<BTreeSet<_>>();
    let ids = |xs: &[&str]| xs.iter().map(|x| id(x)).collect::<BTreeSet<_>>();
    ensure(
        p.lhs().node_ids().into_iter().collect::<BTreeSet<_>>() == ids(&full),
        || "L nodes".into(),
    )?;
    ensure(
        p.rhs().node_ids().into_iter().collect::<BTreeSet<_>>() == ids(&kept),
        || "R nodes".into(),
    )?;
    ensure(set(p.lhs()) == l, || "L differs".into())?;
    ensure(set(p.rhs()) == r, || "R differs".into())?;
    ensure(set(p.nihil()) == k, || {
        format!("K differs: {:?}", p.nihil().edge_list())
    })?;
    ensure(
        p.erase()
            .edges
            .entries()
            .into_iter()
            .collect::<BTreeSet<_>>()
            == e,
        || "e differs".into(),
    )
}

fn multidigraphs() -> Verdict {
    lifted_matrices()?;
    let mut g = Gen::new(9);
    for k in 0..MULTIGRAPHS {
        let m = g.multigraph(4, 6);
        let enc = encode(&m).map_err(|e| e.to_string())?;
        ensure(check_mc(&enc).map_err(|e| e.to_string())?.holds(), || {
            format!("multigraph {k}: encoding breaks MC")
        })?;
        let back = decode(&enc).map_err(|e| format!("multigraph {k}: {e}"))?;
        ensure(back.is_isomorphic(&m), || {
            format!("multigraph {k}: decode(encode) differs")
        })?;
    }
    let (mut done, mut tries, mut deleting) = (0, 0, 0);
    while done < XI_DERIVATIONS {
        tries += 1;
        ensure(tries < 50 * XI_DERIVATIONS, || {
            format!("only {done} derivations")
        })?;
        let host_m = g.multigraph(4, 5);
        let rule = g.multirule(&host_m);
        let Ok(lifted) = lift_rule(&rule) else {
            continue;
        };
        let p = &lifted.production;
        let host = encode(&host_m).unwrap();
        let ms = tot(p.lhs(), &host);
        if ms.is_empty() {
            continue;
        }
        let m = g.pick(&ms).clone();
        let fused = g.coin(0.5);
        let xi = xi_expand(p, &host, &m, fused).map_err(|e| format!("derivation {done}: {e}"))?;
        let Ok(after) = xi.apply(&host) else { continue };
        let report = check_mc(&after).map_err(|e| e.to_string())?;
        ensure(report.holds(), || {
            format!("derivation {done}: {}", rule.name)
        })?;
        deleting += usize::from(!p.deleted_nodes().is_empty());
        done += 1;
    }
    Ok(format!(
        "matrices bit-exact; {MULTIGRAPHS} round trips; {XI_DERIVATIONS} derivations keep MC ({deleting} delete nodes, {tries} drawn)"
    ))
}

fn mgg(doc: &Path, args: &str) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mgg"))
        .arg("-d")
        .arg(doc)
        .args(args.split_whitespace())
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn cli() -> Verdict {
    let dir = std::env::temp_dir().join(format!("mgg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    for name in ["plant.toml", "multigraph.toml"] {
        let original = GrammarDocument::load(&corpus(name)).map_err(|e| e.to_string())?;
        let (code, first) = mgg(&corpus(name), "format");
        ensure(code == 0, || format!("format {name} exits {code}"))?;
        let parsed = GrammarDocument::parse(&first).map_err(|e| e.to_string())?;
        ensure(parsed.to_toml() == original.to_toml(), || {
            format!("{name} changes in a round trip")
        })?;
        let path = dir.join(name);
        std::fs::write(&path, &first).map_err(|e| e.to_string())?;
        ensure(mgg(&path, "format").1 == first, || {
            format!("{name} format is not idempotent")
        })?;
    }
    let plant = corpus("plant.toml");
    let multi = corpus("multigraph.toml");
    let cases: &[(&Path, &str, i32)] = &[
        (&plant, "apply consume plant", 0),
        (&plant, "apply consume idle_machine", 1),
        (&plant, "apply nope plant", 2),
        (&plant, "derive work plant", 0),
        (&plant, "derive twice plant", 1),
        (&plant, "derive work nowhere", 2),
        (&plant, "check-seq work", 0),
        (&plant, "check-seq twice", 1),
        (&plant, "check-seq nope", 2),
        (&plant, "congruence work work", 0),
        (&plant, "congruence work rest_first", 1),
        (&plant, "congruence work twice", 2),
        (&plant, "satisfies plant output", 0),
        (&plant, "satisfies idle_machine output", 1),
        (&plant, "satisfies plant nope", 2),
        (&plant, "compile-ac busy --host two_cells", 0),
        (&plant, "compile-ac busy release --host two_cells", 2),
        (&plant, "pre2post feeds", 0),
        (&plant, "pre2post busy", 2),
        (&plant, "post2pre busy", 0),
        (&plant, "post2pre nope", 2),
        (&plant, "delocalize output work --to 1", 0),
        (&plant, "delocalize output work --to 1 --state 0", 2),
        (&plant, "export-dot plant", 0),
        (&plant, "export-dot nope", 2),
        (&plant, "format", 0),
        (&multi, "multi encode fork", 0),
        (&multi, "multi encode nope", 2),
        (&multi, "multi decode fork_encoded", 0),
        (&multi, "multi decode loose_end", 1),
        (&multi, "multi apply drop fork", 0),
        (&multi, "multi apply drop fork --match 9", 1),
        (&multi, "multi apply nope fork", 2),
        (&plant, "no-such-command", 2),
    ];
    for (doc, args, want) in cases {
        let (code, _) = mgg(doc, args);
        ensure(code == *want, || {
            format!("mgg {args} exits {code}, expected {want}")
        })?;
    }
    let (code, _) = mgg(&corpus("missing.toml"), "format");
    ensure(code == 2, || format!("missing document exits {code}"))?;
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!(
        "corpus round-trips; {} exit codes match",
        cases.len() + 1
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("rule algebra", rule_algebra),
        ("nihilation", nihilation),
        ("compatibility", compatibility),
        ("sequence oracle", sequence_oracle),
        ("compilation", compilation),
        ("operator commutation", commutation),
        ("pre/post round trip", round_trip),
        ("delocalization", delocalization),
        ("multidigraphs", multidigraphs),
        ("cli", cli),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!(
                "criterion {:>2} {name}: pass ({detail}) [{secs:.1}s]",
                i + 1
            ),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
