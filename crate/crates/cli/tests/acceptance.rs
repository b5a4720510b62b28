//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mddlog_core::driver::{
    brute_contains, contain, contain_with, ContainOptions, EmptinessPath, Verdict,
};
use mddlog_core::emptiness::{build_templates, check_empty, check_empty_via_templates, ZeroType};
use mddlog_core::eval::{
    cq_holds, ddlog_holds, ddlog_holds_on, enum_instances, enum_instances_where, find_hom, Cq,
    EvalOptions, Structure,
};
use mddlog_core::ir::{is_semi_simple, is_simple};
use mddlog_core::mmsnp::{eval_mmsnp, mddlog_to_mmsnp, mmsnp_to_mddlog, MmsnpSentence};
use mddlog_core::simplify::{instance_from_consolidated, instance_to_consolidated, simplify_pair};
use mddlog_core::textio::{
    parse_disjointness, parse_instance, parse_mmsnp, parse_program, parse_tiling, render_program,
};
use mddlog_core::tilegen::{
    flip_second_bit, gen_canonical_grid, gen_lower_bound, tree_node, QueryMode,
};
use mddlog_core::{Atom, DisjointnessSet, Fact, Instance, Program, Rule, Schema};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn mddlog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mddlog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn program(text: &str) -> Program {
    parse_program(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn single_binary() -> Schema {
    Schema::from_pairs([("r", 2)]).unwrap()
}

fn satisfies(i: &Instance, d: &DisjointnessSet) -> bool {
    d.rules
        .iter()
        .all(|r| !cq_holds(&Cq::boolean(r.body.clone()), i))
}

fn c1_example1() -> Outcome {
    let started = Instant::now();
    let (l, r) = (
        corpus("example1_left.mddlog"),
        corpus("example1_right.mddlog"),
    );
    let check = mddlog(&["check", "--left", path(&l), "--right", path(&r)]);
    ensure!(
        check.status.code() == Some(1),
        "check exited with {:?}",
        check.status.code()
    );
    ensure!(
        stdout(&check).trim() == "NOT_CONTAINED",
        "check printed {}",
        stdout(&check)
    );

    let dir = tempfile::tempdir().unwrap();
    let brute = mddlog(&[
        "brute",
        "--left",
        path(&l),
        "--right",
        path(&r),
        "--max-size",
        "1",
        "--json",
        "--evidence",
        path(dir.path()),
    ]);
    ensure!(
        brute.status.code() == Some(1),
        "brute exited with {:?}",
        brute.status.code()
    );
    let witness =
        parse_instance(&std::fs::read_to_string(dir.path().join("counterexample.facts")).unwrap())
            .map_err(|e| e.to_string())?;
    let expected = parse_instance("r(a,a). A(a).").unwrap();
    let facts: Vec<&Fact> = witness.facts().collect();
    ensure!(
        facts.len() == 2
            && find_hom(&witness, &expected).is_some()
            && find_hom(&expected, &witness).is_some(),
        "witness {facts:?}"
    );
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "NOT_CONTAINED; witness {{r(a,a), A(a)}} up to renaming; {} ms",
        elapsed.as_millis()
    ))
}

fn c2_tree_witness_absence() -> Outcome {
    let (l, r) = (
        corpus("example1_left.mddlog"),
        corpus("example1_right.mddlog"),
    );
    let brute = mddlog(&[
        "brute",
        "--left",
        path(&l),
        "--right",
        path(&r),
        "--max-size",
        "3",
        "--min-girth",
        "inf",
    ]);
    ensure!(
        brute.status.code() == Some(0),
        "brute exited with {:?}",
        brute.status.code()
    );
    ensure!(
        stdout(&brute).trim() == "CONTAINED",
        "brute printed {}",
        stdout(&brute)
    );
    Ok("no acyclic counterexample with at most 3 elements".into())
}

/// A random sentence over `r/2` with at most two second-order variables
/// and at most three clauses.
fn random_sentence(rng: &mut ChaCha8Rng) -> MmsnpSentence {
    let so: Vec<&str> = ["P", "Q"][..rng.gen_range(1..=2)].to_vec();
    let mut alphas_pool = vec!["r(x,y)".to_string(), "r(y,x)".into(), "r(x,x)".into()];
    let mut betas_pool = Vec::new();
    for s in &so {
        for v in ["x", "y"] {
            alphas_pool.push(format!("{s}({v})"));
            betas_pool.push(format!("{s}({v})"));
        }
    }
    let mut text = format!("@edb r/2.\nexists {} . forall x y .\n", so.join(" "));
    for _ in 0..rng.gen_range(1..=3) {
        let na = rng.gen_range(0..=3);
        let nb = rng.gen_range(0..=2);
        let alphas: Vec<String> = alphas_pool.choose_multiple(rng, na).cloned().collect();
        let betas: Vec<String> = betas_pool.choose_multiple(rng, nb).cloned().collect();
        let lhs = if alphas.is_empty() {
            "true".to_string()
        } else {
            alphas.join(" & ")
        };
        let rhs = if betas.is_empty() {
            "false".to_string()
        } else {
            betas.join(" | ")
        };
        text.push_str(&format!("  {lhs} -> {rhs} ;\n"));
    }
    parse_mmsnp(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn sweep_sentences() -> Vec<MmsnpSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut out =
        vec![parse_mmsnp(&std::fs::read_to_string(corpus("three_col.mmsnp")).unwrap()).unwrap()];
    out.extend((0..10).map(|_| random_sentence(&mut rng)));
    out
}

fn c3_complement_sweep() -> Outcome {
    let instances = enum_instances(&single_binary(), 3, 0).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for phi in sweep_sentences() {
        let p = mmsnp_to_mddlog(&phi).map_err(|e| e.to_string())?;
        for i in &instances {
            let holds = eval_mmsnp(&phi, i).map_err(|e| e.to_string())?;
            let complement = ddlog_holds(&p, i).map_err(|e| e.to_string())?;
            ensure!(holds != complement, "agreement on {i:?} for {phi:?}");
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} cases, 11 sentences x {} instances, 100% complementary",
        instances.len()
    ))
}

fn c4_round_trip() -> Outcome {
    let instances = enum_instances(&single_binary(), 3, 0).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for phi in sweep_sentences() {
        let psi = mddlog_to_mmsnp(&mmsnp_to_mddlog(&phi).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for i in &instances {
            let a = eval_mmsnp(&phi, i).map_err(|e| e.to_string())?;
            let b = eval_mmsnp(&psi, i).map_err(|e| e.to_string())?;
            ensure!(a == b, "round trip changes truth on {i:?}");
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, 100% agreement"))
}

/// Boolean pairs with at most three rules and three variables per rule.
fn simplification_corpus() -> Vec<(Program, Program)> {
    let example1_boolean = "A1(X) | A2(X) :- A(X).\n\
         goal() :- A1(X), r(X,Y), A1(Y).\n\
         goal() :- A2(X), r(X,Y), A2(Y).\n@edb B/1.";
    let pairs = [
        ("goal() :- r(X,Y), r(Y,Z), r(Z,X).", "goal() :- r(X,X)."),
        ("goal() :- r(X,X).", "goal() :- r(X,Y), r(Y,Z), r(Z,X)."),
        (example1_boolean, "goal() :- B(X).\n@edb A/1, r/2."),
        ("goal() :- r(X,Y), r(Y,X).", "goal() :- r(X,Y)."),
        ("goal() :- r(X,Y).", "goal() :- r(X,Y), r(Y,X)."),
        (
            "goal() :- A(X), r(X,Y), B(Y).",
            "goal() :- r(X,Y), B(Y).\n@edb A/1.",
        ),
        (
            "goal() :- r(X,Y), B(Y).\n@edb A/1.",
            "goal() :- A(X), r(X,Y), B(Y).",
        ),
        (
            "U(X) | V(X) :- A(X).\ngoal() :- U(X), r(X,Y), U(Y).\ngoal() :- V(X), r(X,Y), V(Y).",
            "goal() :- r(X,Y), r(Y,Z), r(Z,X).",
        ),
        ("goal() :- A(X), B(X).", "goal() :- A(X).\n@edb B/1."),
        (
            "goal() :- r(X,Y), A(Y).",
            "U(X) :- A(X).\ngoal() :- r(X,Y), U(Y).",
        ),
        ("goal() :- r(X,Y), r(Y,Z).", "goal() :- r(X,Y), r(Z,Y)."),
    ];
    pairs
        .iter()
        .map(|(a, b)| (program(a), program(b)))
        .collect()
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn c5_simplification_fidelity() -> Outcome {
    let mut transferred = 0;
    let mut counterexamples = (0, 0);
    let corpus = simplification_corpus();
    for (p1, p2) in &corpus {
        let s = simplify_pair(p1, p2).map_err(|e| e.to_string())?;
        ensure!(
            is_simple(&s.p1) && is_simple(&s.p2),
            "simplified pair is not simple"
        );

        // size ceilings: (r * 2^s)^4 symbols, (r * v! * w)^2 rules, rule size and variable width kept
        let m = mddlog_core::ir::Metrics::of_rules(p1.rules.iter().chain(p2.rules.iter()));
        let r = p1.rules.len() + p2.rules.len();
        let ceiling = (r * factorial(m.variable_width) * m.atom_width).pow(2);
        let quartic = (r as u128)
            .checked_mul(1u128.checked_shl(m.rule_size as u32).unwrap_or(u128::MAX))
            .and_then(|x| x.checked_pow(4))
            .unwrap_or(u128::MAX);
        for q in [&s.p1, &s.p2] {
            let qm = q.metrics();
            ensure!(
                (qm.size as u128) <= quartic,
                "size {} above (r * 2^s)^4",
                qm.size
            );
            ensure!(
                q.rules.len() <= ceiling,
                "{} rules above the ceiling {ceiling}",
                q.rules.len()
            );
            ensure!(
                qm.rule_size <= m.rule_size,
                "rule size grew from {} to {}",
                m.rule_size,
                qm.rule_size
            );
            ensure!(
                qm.variable_width <= m.variable_width,
                "variable width grew from {} to {}",
                m.variable_width,
                qm.variable_width
            );
        }

        let original = brute_contains(p1, p2, 3, 0).map_err(|e| e.to_string())?;
        if let mddlog_core::driver::OracleResult::Counterexample(c) = &original {
            counterexamples.0 += 1;
            let j = instance_to_consolidated(&c.instance, &s.map);
            ensure!(
                ddlog_holds(&s.p1, &j).unwrap() && !ddlog_holds(&s.p2, &j).unwrap(),
                "non-containment did not transfer forward on {:?}",
                c.instance
            );
            transferred += 1;
        }
        let simplified = brute_contains(&s.p1, &s.p2, 3, s.w).map_err(|e| e.to_string())?;
        if let mddlog_core::driver::OracleResult::Counterexample(c) = &simplified {
            counterexamples.1 += 1;
            let i = instance_from_consolidated(&c.instance, &s.map).map_err(|e| e.to_string())?;
            ensure!(
                ddlog_holds(p1, &i).unwrap() && !ddlog_holds(p2, &i).unwrap(),
                "high-girth non-containment did not transfer back from {:?}",
                c.instance
            );
            transferred += 1;
        }
    }
    Ok(format!(
        "{} pairs; {} original and {} high-girth simplified counterexamples, all {transferred} transferred",
        corpus.len(),
        counterexamples.0,
        counterexamples.1
    ))
}

/// A random semi-simple system over `r/2` with constraint relations among
/// `P`, `Q` and IDB relations `U`, `V`.
fn random_system(rng: &mut ChaCha8Rng) -> (Program, DisjointnessSet) {
    let dvars: Vec<&str> = ["P", "Q"][..rng.gen_range(1..=2)].to_vec();
    let d = parse_disjointness("false :- P(X), Q(X).").unwrap();
    let idbs = ["U", "V"];
    let mut rules = Vec::new();
    let nrules = rng.gen_range(2..=4);
    while rules.len() < nrules {
        let with_edge = rng.gen_bool(0.6);
        let vars: Vec<&str> = if with_edge { vec!["X", "Y"] } else { vec!["X"] };
        let mut body = Vec::new();
        if with_edge {
            body.push(Atom::vars("r", &["X", "Y"]));
        }
        let pool: Vec<&str> = dvars.iter().chain(idbs.iter()).copied().collect();
        for _ in 0..rng.gen_range(0..=2) {
            let rel = pool.choose(rng).unwrap();
            let v = vars.choose(rng).unwrap();
            body.push(Atom::vars(*rel, &[v]));
        }
        if body.is_empty() {
            continue;
        }
        let head = match rng.gen_range(0..10) {
            0..=3 => vec![Atom::nullary("goal")],
            4 => Vec::new(),
            _ => {
                let k = rng.gen_range(1..=2);
                idbs.choose_multiple(rng, k)
                    .map(|rel| Atom::vars(*rel, &[vars.choose(rng).unwrap()]))
                    .collect()
            }
        };
        rules.push(Rule::new(head, body));
    }
    if !rules.iter().any(|r| r.head.iter().any(|a| a.rel == "goal")) {
        rules.push(Rule::new(
            vec![Atom::nullary("goal")],
            vec![
                Atom::vars("r", &["X", "Y"]),
                Atom::vars(*idbs.choose(rng).unwrap(), &["Y"]),
            ],
        ));
    }
    for rel in idbs {
        let used = rules.iter().any(|r| r.body.iter().any(|a| a.rel == rel));
        let derived = rules.iter().any(|r| r.head.iter().any(|a| a.rel == rel));
        if used && !derived {
            let guard = *dvars.choose(rng).unwrap();
            rules.push(Rule::new(
                vec![Atom::vars(rel, &["X"])],
                vec![Atom::vars(guard, &["X"])],
            ));
        }
    }
    let schema = Schema::from_pairs([("r", 2), ("P", 1), ("Q", 1)]).unwrap();
    let mut p = Program::new(rules, "goal", 0, &schema).unwrap();
    p.dedup();
    (p, d)
}

fn emptiness_systems() -> Vec<(Program, DisjointnessSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    (0..24).map(|_| random_system(&mut rng)).collect()
}

fn c6_emptiness() -> Outcome {
    let opts = EvalOptions::default();
    let (mut empty, mut nonempty) = (0, 0);
    for (p, d) in emptiness_systems() {
        ensure!(
            is_semi_simple(&p, &d),
            "generated system is not semi-simple: {p:?}"
        );
        let decided = check_empty(&p, &d, &opts).map_err(|e| e.to_string())?.empty;
        let keep = |i: &Instance| satisfies(i, &d);
        let instances =
            enum_instances_where(&p.edb_schema(), 3, 0, &keep).map_err(|e| e.to_string())?;
        let mut brute_empty = true;
        for i in &instances {
            if ddlog_holds(&p, i).map_err(|e| e.to_string())? {
                brute_empty = false;
                break;
            }
        }
        ensure!(
            decided == brute_empty,
            "check_empty says {decided}, brute force {brute_empty} for {p:?}"
        );
        if decided {
            empty += 1;
        } else {
            nonempty += 1;
        }
    }
    Ok(format!(
        "24 systems ({empty} empty, {nonempty} non-empty), 100% agreement"
    ))
}

fn c7_templates() -> Outcome {
    let opts = EvalOptions::default();
    let mut pointwise = 0;
    for (p, d) in emptiness_systems() {
        let a = check_empty(&p, &d, &opts).map_err(|e| e.to_string())?.empty;
        let b = check_empty_via_templates(&p, &d).map_err(|e| e.to_string())?;
        ensure!(a == b, "K_theta says {a}, templates say {b} for {p:?}");
        let templates = build_templates(&p, &d, &ZeroType::default()).map_err(|e| e.to_string())?;
        let keep = |i: &Instance| satisfies(i, &d);
        for i in enum_instances_where(&p.edb_schema(), 2, 0, &keep).map_err(|e| e.to_string())? {
            let falsified = !ddlog_holds(&p, &i).map_err(|e| e.to_string())?;
            let maps = templates.iter().any(|t| find_hom(&i, t).is_some());
            ensure!(
                falsified == maps,
                "pointwise claim fails on {i:?} for {p:?}"
            );
            pointwise += 1;
        }
    }
    Ok(format!(
        "24 systems agree; pointwise claim holds on {pointwise} instances"
    ))
}

fn bridge_pairs() -> Vec<(Program, Program)> {
    let three = mmsnp_to_mddlog(
        &parse_mmsnp(&std::fs::read_to_string(corpus("three_col.mmsnp")).unwrap()).unwrap(),
    )
    .unwrap();
    let two = mmsnp_to_mddlog(
        &parse_mmsnp(&std::fs::read_to_string(corpus("two_col.mmsnp")).unwrap()).unwrap(),
    )
    .unwrap();
    let example1 = (
        program(&std::fs::read_to_string(corpus("example1_left.mddlog")).unwrap()),
        program(&std::fs::read_to_string(corpus("example1_right.mddlog")).unwrap()),
    );
    let mut out = vec![
        example1.clone(),
        (example1.1.clone(), example1.1.clone()),
        (three.clone(), two.clone()),
        (two, three),
    ];
    let texts = [
        ("goal(X) :- r(X,a).", "goal(X) :- r(X,Y)."),
        ("goal(X) :- r(X,Y).", "goal(X) :- r(X,a)."),
        ("goal() :- A(X), B(X).", "goal() :- A(X).\n@edb B/1."),
        ("goal() :- A(X).\n@edb B/1.", "goal() :- A(X), B(X)."),
        ("goal(X) :- r(X,b), A(b).", "goal(X) :- A(b), r(X,Y)."),
        ("goal(a) :- B(X).", "goal(X) :- B(X)."),
        (
            "U(X) | V(X) :- A(X).\ngoal() :- U(X).\ngoal() :- V(X).",
            "goal() :- A(X).",
        ),
        (
            "goal() :- A(X).",
            "U(X) | V(X) :- A(X).\ngoal() :- U(X).\ngoal() :- V(X).",
        ),
        ("goal() :- r(X,X).", "goal() :- r(X,Y), r(Y,Z), r(Z,X)."),
        ("goal() :- r(X,Y), r(Y,Z), r(Z,X).", "goal() :- r(X,X)."),
        ("goal(X) :- r(a,X).", "goal(X) :- r(b,X)."),
        ("goal(X) :- A(X), r(X,a).", "goal(X) :- A(X).\n@edb r/2."),
    ];
    out.extend(texts.iter().map(|(a, b)| (program(a), program(b))));
    out
}

fn c8_reduction_bridges() -> Outcome {
    let (mut yes, mut no) = (0, 0);
    let pairs = bridge_pairs();
    for (p1, p2) in &pairs {
        let constants: BTreeSet<String> = p1.constants().union(&p2.constants()).cloned().collect();
        ensure!(
            p1.arity <= 1 && constants.len() <= 2,
            "pair outside the criterion's scope"
        );
        let decided = contain(p1, p2)
            .map_err(|e| format!("{e} on\n{}---\n{}", render_program(p1), render_program(p2)))?
            .verdict;
        let brute = brute_contains(p1, p2, 3, 0).map_err(|e| e.to_string())?;
        let expected = if brute.is_contained() {
            Verdict::Contained
        } else {
            Verdict::NotContained
        };
        ensure!(
            decided == expected,
            "contain says {decided:?}, brute force {brute:?} for {p1:?} / {p2:?}"
        );
        if decided == Verdict::Contained {
            yes += 1;
        } else {
            no += 1;
        }
    }
    ensure!(yes > 0 && no > 0, "corpus must exercise both verdicts");
    Ok(format!(
        "{} pairs ({yes} contained, {no} not contained), 100% agreement",
        pairs.len()
    ))
}

fn c9_tiling() -> Outcome {
    let opts = EvalOptions {
        max_ground_clauses: 10_000_000,
    };
    let load = |name: &str| parse_tiling(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap();
    let limit = Duration::from_secs(300);
    let mut report = Vec::new();
    for mode in [QueryMode::Ucq, QueryMode::Cq] {
        let started = Instant::now();
        let (p, w) = load("trivial.tiling");
        let (prog, q) = gen_lower_bound(&p, &w, mode).map_err(|e| e.to_string())?;
        let grid = gen_canonical_grid(&p, &w, mode).map_err(|e| e.to_string())?;
        let s = Structure::of(&grid);
        ensure!(
            !mddlog_core::eval::ucq_holds(&q, &grid),
            "(a) q holds on the canonical grid"
        );
        ensure!(
            !ddlog_holds_on(&prog, &s, &opts).map_err(|e| e.to_string())?,
            "(a) program holds"
        );
        ensure!(
            started.elapsed() < limit,
            "(a) took {:?}",
            started.elapsed()
        );

        let started = Instant::now();
        let (p, w) = load("untileable.tiling");
        let (prog, q) = gen_lower_bound(&p, &w, mode).map_err(|e| e.to_string())?;
        ensure!(
            ddlog_holds_on(&prog, &s, &opts).map_err(|e| e.to_string())?,
            "(b) program fails"
        );
        ensure!(!mddlog_core::eval::ucq_holds(&q, &grid), "(b) q holds");
        ensure!(
            started.elapsed() < limit,
            "(b) took {:?}",
            started.elapsed()
        );

        let started = Instant::now();
        let corrupted =
            flip_second_bit(&grid, &tree_node("g1_1", "01"), mode).map_err(|e| e.to_string())?;
        ensure!(
            mddlog_core::eval::ucq_holds(&q, &corrupted),
            "(c) q misses the corrupted bit"
        );
        ensure!(
            started.elapsed() < limit,
            "(c) took {:?}",
            started.elapsed()
        );
        report.push(format!("{} mode on {} facts", mode.as_str(), grid.len()));
    }
    Ok(format!("(a), (b), (c) hold in {}", report.join(" and ")))
}

fn random_program(rng: &mut ChaCha8Rng) -> Program {
    let vars = ["X", "Y", "Z"];
    let edb = [("r", 2), ("A", 1)];
    let idb = ["U", "V"];
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let mut body = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            if rng.gen_bool(0.7) {
                let (rel, k) = edb.choose(rng).unwrap();
                let args: Vec<&str> = (0..*k).map(|_| *vars.choose(rng).unwrap()).collect();
                body.push(Atom::vars(*rel, &args));
            } else {
                body.push(Atom::vars(
                    *idb.choose(rng).unwrap(),
                    &[vars.choose(rng).unwrap()],
                ));
            }
        }
        let bound: Vec<String> = body
            .iter()
            .flat_map(|a| a.var_names().map(String::from))
            .collect();
        let head = if rng.gen_bool(0.4) {
            vec![Atom::nullary("goal")]
        } else {
            (0..rng.gen_range(1..=2))
                .map(|_| {
                    Atom::vars(
                        *idb.choose(rng).unwrap(),
                        &[bound.choose(rng).unwrap().as_str()],
                    )
                })
                .collect()
        };
        rules.push(Rule::new(head, body));
    }
    let schema = Schema::from_pairs(edb).unwrap();
    Program::new(rules, "goal", 0, &schema).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, domain: usize, facts: usize) -> Instance {
    let schema = Schema::from_pairs([("r", 2), ("A", 1)]).unwrap();
    let mut i = Instance::new(schema);
    for _ in 0..facts {
        let e = |rng: &mut ChaCha8Rng| format!("e{}", rng.gen_range(0..domain));
        let f = if rng.gen_bool(0.7) {
            Fact::new("r", [e(rng), e(rng)])
        } else {
            Fact::new("A", [e(rng)])
        };
        i.insert(f).unwrap();
    }
    i
}

fn c10_homomorphisms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut fired = 0;
    for _ in 0..200 {
        let p = random_program(&mut rng);
        let n = rng.gen_range(1..=6);
        let i = random_instance(&mut rng, 4, n);
        let target = rng.gen_range(1..=4);
        let image: std::collections::BTreeMap<String, String> = i
            .adom()
            .into_iter()
            .map(|e| (e, format!("f{}", rng.gen_range(0..target))))
            .collect();
        let mut j = i.rename(|e| image[e].clone());
        let n = rng.gen_range(0..=3);
        let extra = random_instance(&mut rng, target, n).rename(|e| e.replacen('e', "f", 1));
        for f in extra.facts() {
            j.insert(f.clone()).unwrap();
        }
        if ddlog_holds(&p, &i).map_err(|e| e.to_string())? {
            fired += 1;
            ensure!(
                ddlog_holds(&p, &j).map_err(|e| e.to_string())?,
                "not preserved: {p:?} {i:?} -> {j:?}"
            );
        }
    }
    Ok(format!(
        "200 triples, {fired} with the program true on the source, 0 violations"
    ))
}

/// Verdict records of the corpus runs, with timing left out.
fn verdict_records() -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("evidence");
    let (l, r) = (
        corpus("example1_left.mddlog"),
        corpus("example1_right.mddlog"),
    );
    let (three, two) = (corpus("three_col.mmsnp"), corpus("two_col.mmsnp"));
    let runs: Vec<Vec<&str>> = vec![
        vec!["check", "--left", path(&l), "--right", path(&r)],
        vec!["check", "--left", path(&l), "--right", path(&l)],
        vec![
            "check",
            "--left",
            path(&l),
            "--right",
            path(&r),
            "--path",
            "reduction",
        ],
        vec![
            "check",
            "--mmsnp",
            "--left",
            path(&two),
            "--right",
            path(&three),
        ],
        vec![
            "check",
            "--mmsnp",
            "--left",
            path(&three),
            "--right",
            path(&two),
        ],
        vec![
            "brute",
            "--left",
            path(&l),
            "--right",
            path(&r),
            "--max-size",
            "2",
        ],
        vec![
            "brute",
            "--left",
            path(&l),
            "--right",
            path(&r),
            "--max-size",
            "3",
            "--min-girth",
            "inf",
        ],
    ];
    let mut out = Vec::new();
    for run in runs {
        let mut args = run.clone();
        args.extend(["--json", "--no-timing", "--evidence", path(&ev)]);
        let o = mddlog(&args);
        assert!(
            matches!(o.status.code(), Some(0 | 1)),
            "{run:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let record = String::from_utf8_lossy(&o.stdout).replace(path(dir.path()), "<tmp>");
        out.extend(record.into_bytes());
    }
    out
}

fn c11_determinism() -> Outcome {
    let first = verdict_records();
    let second = verdict_records();
    ensure!(first == second, "verdict records differ between runs");
    let extra = {
        let (p1, p2) = simplification_corpus().swap_remove(2);
        let a = contain_with(
            &p1,
            &p2,
            &ContainOptions {
                path: EmptinessPath::Templates,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let b = contain_with(
            &p1,
            &p2,
            &ContainOptions {
                path: EmptinessPath::Templates,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        a.stages == b.stages && a.verdict == b.verdict
    };
    ensure!(extra, "library decisions differ between runs");
    Ok(format!(
        "7 verdict records, {} bytes, byte-identical across two runs",
        first.len()
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome, u64)> = vec![
        ("1 Example 1 reproduction", c1_example1, 1),
        ("2 tree-witness absence", c2_tree_witness_absence, 60),
        ("3 MMSNP complement sweep", c3_complement_sweep, 300),
        ("4 MMSNP round trip", c4_round_trip, 300),
        ("5 simplification fidelity", c5_simplification_fidelity, 600),
        ("6 emptiness correctness", c6_emptiness, 600),
        ("7 template cross-check", c7_templates, 600),
        ("8 reduction bridges", c8_reduction_bridges, 900),
        ("9 tiling generator semantics", c9_tiling, 900),
        ("10 homomorphism preservation", c10_homomorphisms, 120),
        ("11 determinism", c11_determinism, 600),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        let result = match result {
            Ok(_) if secs > limit as f64 => Err(format!("exceeded {limit} s")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
