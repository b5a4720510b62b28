//! Generators for the tiling-based hard instances: the program, the
//! counting-defect query and the canonical grid instance.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::{Cq, Ucq};
use crate::ir::{Atom, Fact, Instance, Program, Rule, Schema};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingProblem {
    pub tiles: Vec<String>,
    pub horizontal: BTreeSet<(String, String)>,
    pub vertical: BTreeSet<(String, String)>,
}

impl TilingProblem {
    pub fn new(
        tiles: Vec<String>,
        horizontal: BTreeSet<(String, String)>,
        vertical: BTreeSet<(String, String)>,
    ) -> Result<Self> {
        let known: BTreeSet<&String> = tiles.iter().collect();
        if known.len() != tiles.len() || tiles.is_empty() {
            return Err(Error::invalid("tile names must be distinct and nonempty"));
        }
        for (a, b) in horizontal.iter().chain(vertical.iter()) {
            if !known.contains(a) || !known.contains(b) {
                return Err(Error::invalid(format!(
                    "undeclared tile in pair ({a}, {b})"
                )));
            }
        }
        Ok(TilingProblem {
            tiles,
            horizontal,
            vertical,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingInput {
    pub word: Vec<String>,
}

impl TilingInput {
    pub fn new(p: &TilingProblem, word: Vec<String>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::invalid("the input word must be nonempty"));
        }
        if let Some(t) = word.iter().find(|t| !p.tiles.contains(t)) {
            return Err(Error::invalid(format!(
                "undeclared tile {t} in the input word"
            )));
        }
        Ok(TilingInput { word })
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn m(&self) -> usize {
        self.word.len() + 1
    }
}

/// Goal relation of the rendered query program.
pub const QUERY_GOAL: &str = "query$goal";

/// Largest word length accepted by [`gen_lower_bound`].
pub const MAX_LOWER_BOUND_N: usize = 2;

/// Which form of the counting-defect query to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryMode {
    /// Two CQs over the leaf labels `B1`, `nB1`, `B2`, `nB2`.
    Ucq,
    /// A single CQ over bit gadgets (`jump1`, `jump2`) with four-step self loops.
    Cq,
}

impl QueryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::Ucq => "ucq",
            QueryMode::Cq => "cq",
        }
    }
}

impl std::str::FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ucq" => Ok(QueryMode::Ucq),
            "cq" => Ok(QueryMode::Cq),
            _ => Err(Error::invalid(format!(
                "unknown query mode {s}, expected ucq or cq"
            ))),
        }
    }
}

fn atom(rel: impl Into<String>, vars: &[&str]) -> Atom {
    Atom::vars(rel, vars)
}

fn rule(head: Vec<Atom>, body: Vec<Atom>) -> Rule {
    Rule::new(head, body)
}

/// EDB schema of the generated program and query.
pub fn edb_schema(mode: QueryMode) -> Schema {
    let pairs: &[(&str, usize)] = match mode {
        QueryMode::Ucq => &[
            ("r", 2),
            ("jump", 2),
            ("B1", 1),
            ("B2", 1),
            ("nB1", 1),
            ("nB2", 1),
        ],
        QueryMode::Cq => &[("r", 2), ("jump", 2), ("jump1", 2), ("jump2", 2)],
    };
    Schema::from_pairs(pairs.iter().copied()).expect("distinct names")
}

/// Relation marking leaves whose counter `counter` (1 or 2) has bit `bit`.
fn bit_rel(mode: QueryMode, counter: usize, bit: bool) -> String {
    match (mode, bit) {
        (QueryMode::Ucq, true) => format!("B{counter}"),
        (QueryMode::Ucq, false) => format!("nB{counter}"),
        (QueryMode::Cq, true) => format!("one{counter}"),
        (QueryMode::Cq, false) => format!("zero{counter}"),
    }
}

fn lev_g(i: usize) -> String {
    format!("levG_{i}")
}

fn lev_l(lang: usize, i: usize) -> String {
    format!("levH{lang}_{i}")
}

/// Rules for nodes whose left and right subtrees satisfy `left_rel` and `right_rel`.
fn branch(head: &str, left_rel: &str, right_rel: &str) -> Rule {
    rule(
        vec![atom(head, &["X"])],
        vec![
            atom("r", &["X", "Y1"]),
            atom(left_rel, &["Y1"]),
            atom("left", &["Y1"]),
            atom("r", &["X", "Y2"]),
            atom(right_rel, &["Y2"]),
            atom("right", &["Y2"]),
        ],
    )
}

fn leaf(head: &str, mode: QueryMode, b1: bool, b2: bool) -> Rule {
    rule(
        vec![atom(head, &["X"])],
        vec![
            atom(bit_rel(mode, 1, b1), &["X"]),
            atom(bit_rel(mode, 2, b2), &["X"]),
            atom("lrok", &["X"]),
        ],
    )
}

/// Rules verifying counting trees: navigation gadgets, level relations for
/// identical counters (`levG_i`) and for incremented counters (`levH{l}_i`,
/// where `l` names the leaf-word language), and the activity markers.
fn tree_rules(m: usize, mode: QueryMode) -> Vec<Rule> {
    let mut rules = vec![
        rule(
            vec![atom("left", &["X"])],
            vec![
                atom("r", &["X", "Y"]),
                atom("r", &["Y", "Z"]),
                atom("jump", &["X", "Z"]),
            ],
        ),
        rule(
            vec![atom("right", &["X"])],
            vec![atom("r", &["X", "Y"]), atom("jump", &["X", "Y"])],
        ),
        rule(vec![atom("lrok", &["X"])], vec![atom("left", &["X"])]),
        rule(vec![atom("lrok", &["X"])], vec![atom("right", &["X"])]),
    ];
    if mode == QueryMode::Cq {
        for c in 1..=2 {
            let jump = format!("jump{c}");
            let chain = || {
                vec![
                    atom("r", &["X", "X1"]),
                    atom("r", &["X1", "X2"]),
                    atom("r", &["X2", "X3"]),
                    atom("r", &["X3", "X4"]),
                ]
            };
            for (bit, targets) in [(true, ["X1", "X4"]), (false, ["X2", "X3"])] {
                let mut body = chain();
                body.extend(targets.iter().map(|t| atom(jump.clone(), &["X", t])));
                rules.push(rule(vec![atom(bit_rel(mode, c, bit), &["X"])], body));
            }
        }
    }

    rules.push(leaf(&lev_g(m), mode, true, true));
    rules.push(leaf(&lev_g(m), mode, false, false));
    for i in (0..m).rev() {
        rules.push(branch(&lev_g(i), &lev_g(i + 1), &lev_g(i + 1)));
    }

    // L1 = (0,1)*, L2 = (0,1)*(1,0)((0,0)+(1,1))*, L3 = ((0,0)+(1,1))*
    rules.push(leaf(&lev_l(1, m), mode, false, true));
    rules.push(leaf(&lev_l(2, m), mode, true, false));
    rules.push(leaf(&lev_l(3, m), mode, true, true));
    rules.push(leaf(&lev_l(3, m), mode, false, false));
    for i in (1..m).rev() {
        for (l1, l2, l3) in [(1, 1, 1), (1, 2, 2), (2, 3, 2), (3, 3, 3)] {
            rules.push(branch(&lev_l(l3, i), &lev_l(l1, i + 1), &lev_l(l2, i + 1)));
        }
    }

    rules.push(match mode {
        QueryMode::Ucq => rule(
            vec![atom("gactive", &["X"])],
            vec![
                atom(lev_g(0), &["X"]),
                atom("r", &["X", "Y"]),
                atom(lev_g(0), &["Y"]),
                atom("r", &["Y", "X"]),
            ],
        ),
        QueryMode::Cq => rule(
            vec![atom("gactive", &["X"])],
            vec![
                atom(lev_g(0), &["X"]),
                atom("r", &["X", "Y1"]),
                atom(lev_g(0), &["Y1"]),
                atom("r", &["Y1", "Y2"]),
                atom(lev_g(0), &["Y2"]),
                atom("r", &["Y2", "Y3"]),
                atom(lev_g(0), &["Y3"]),
                atom("r", &["Y3", "X"]),
            ],
        ),
    });
    // horizontal half on the left of the root, vertical half on the right
    rules.push(branch("hactive", &lev_l(2, 1), &lev_l(3, 1)));
    rules.push(branch("vactive", &lev_l(3, 1), &lev_l(2, 1)));
    rules
}

/// Leaf labels of the counter value `(x, y)`: horizontal bits first, least
/// significant bit leftmost.
fn counter_bits(x: usize, y: usize, half: usize) -> Vec<bool> {
    (0..2 * half)
        .map(|k| {
            if k < half {
                x >> k & 1 == 1
            } else {
                y >> (k - half) & 1 == 1
            }
        })
        .collect()
}

fn pattern_rel(level: usize, bits: &[bool]) -> String {
    let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
    format!("pat{level}_{s}")
}

/// Rules deriving `pat{level}_{bits}` for nodes whose subtree leaves carry
/// exactly the first-counter bits `bits`.
fn pattern_rules(
    level: usize,
    bits: &[bool],
    mode: QueryMode,
    seen: &mut BTreeSet<String>,
    out: &mut Vec<Rule>,
) {
    let head = pattern_rel(level, bits);
    if !seen.insert(head.clone()) {
        return;
    }
    if bits.len() == 1 {
        out.push(rule(
            vec![atom(head, &["X"])],
            vec![atom(bit_rel(mode, 1, bits[0]), &["X"])],
        ));
        return;
    }
    let (l, r) = bits.split_at(bits.len() / 2);
    pattern_rules(level + 1, l, mode, seen, out);
    pattern_rules(level + 1, r, mode, seen, out);
    out.push(branch(
        &head,
        &pattern_rel(level + 1, l),
        &pattern_rel(level + 1, r),
    ));
}

/// Builds the Boolean program and the counting-defect query for `p` and `w`.
pub fn gen_lower_bound(
    p: &TilingProblem,
    w: &TilingInput,
    mode: QueryMode,
) -> Result<(Program, Ucq)> {
    let n = w.n();
    if n > MAX_LOWER_BOUND_N {
        return Err(Error::limit(
            "tilegen",
            "input word length",
            n as u64,
            MAX_LOWER_BOUND_N as u64,
        ));
    }
    let m = w.m();
    let half = 1usize << n;
    let mut rules = tree_rules(m, mode);

    let mut seen = BTreeSet::new();
    for j in 0..n {
        pattern_rules(0, &counter_bits(j, 0, half), mode, &mut seen, &mut rules);
        rules.push(rule(
            vec![atom(format!("pos_{j}_0"), &["X"])],
            vec![
                atom("gactive", &["X"]),
                atom(pattern_rel(0, &counter_bits(j, 0, half)), &["X"]),
            ],
        ));
    }

    let reserved: BTreeSet<String> = rules
        .iter()
        .flat_map(|r| r.head.iter().chain(r.body.iter()).map(|a| a.rel.clone()))
        .chain(edb_schema(mode).names().map(String::from))
        .chain(["goal".to_string()])
        .collect();
    if let Some(t) = p.tiles.iter().find(|t| reserved.contains(*t)) {
        return Err(Error::invalid(format!(
            "tile name {t} clashes with a generated relation"
        )));
    }

    rules.push(rule(
        p.tiles.iter().map(|t| atom(t.clone(), &["X"])).collect(),
        vec![atom("gactive", &["X"])],
    ));
    for (matching, step) in [(&p.horizontal, "hactive"), (&p.vertical, "vactive")] {
        for ti in &p.tiles {
            for tj in &p.tiles {
                if matching.contains(&(ti.clone(), tj.clone())) {
                    continue;
                }
                rules.push(rule(
                    vec![Atom::nullary("goal")],
                    vec![
                        atom(ti.clone(), &["X"]),
                        atom("gactive", &["X"]),
                        atom("r", &["X", "Y"]),
                        atom(step, &["Y"]),
                        atom("r", &["Y", "Z"]),
                        atom(tj.clone(), &["Z"]),
                        atom("gactive", &["Z"]),
                    ],
                ));
            }
        }
    }
    for (j, wj) in w.word.iter().enumerate() {
        for t in p.tiles.iter().filter(|t| *t != wj) {
            rules.push(rule(
                vec![Atom::nullary("goal")],
                vec![atom(format!("pos_{j}_0"), &["X"]), atom(t.clone(), &["X"])],
            ));
        }
    }
    let program = Program::new(rules, "goal", 0, &edb_schema(mode))?;
    Ok((program, gen_query(m, mode)))
}

fn var(prefix: &str, i: usize, j: usize) -> String {
    format!("{prefix}{i}_{j}")
}

/// `q_m(X{m}, Y{m})`: leaves at the same position of trees with `r`-linked roots.
pub fn aligned_leaves(m: usize) -> Vec<Atom> {
    let r = |a: &str, b: &str| atom("r", &[a, b]);
    let mut body = vec![r("X0", "Y0")];
    for i in 1..=m {
        let (xp, x) = (format!("X{}", i - 1), format!("X{i}"));
        let (yp, y) = (format!("Y{}", i - 1), format!("Y{i}"));
        body.push(r(&xp, &x));
        body.push(r(&yp, &y));
        body.push(atom("jump", &[&x, &var("Z", i, i + 2)]));
        body.push(atom("jump", &[&y, &var("ZP", i, i + 3)]));
        for k in 0..=i + 1 {
            body.push(r(&var("Z", i, k), &var("Z", i, k + 1)));
        }
        body.push(r(&var("Z", i, 0), &var("ZP", i, 1)));
        for k in 1..=i + 2 {
            body.push(r(&var("ZP", i, k), &var("ZP", i, k + 1)));
        }
    }
    body
}

fn gen_query(m: usize, mode: QueryMode) -> Ucq {
    let (xm, ym) = (format!("X{m}"), format!("Y{m}"));
    match mode {
        QueryMode::Ucq => {
            let disjunct = |b1: &str, b2: &str| {
                let mut body = aligned_leaves(m);
                body.push(atom(b1, &[&xm]));
                body.push(atom(b2, &[&ym]));
                Cq::boolean(body)
            };
            Ucq {
                disjuncts: vec![disjunct("B1", "nB2"), disjunct("nB1", "B2")],
            }
        }
        QueryMode::Cq => {
            let mut body = aligned_leaves(m);
            body.push(atom("jump1", &[&xm, &format!("W{}", m + 2)]));
            body.push(atom("jump2", &[&ym, &format!("WP{}", m + 5)]));
            for k in 0..=m + 1 {
                body.push(atom("r", &[&format!("W{k}"), &format!("W{}", k + 1)]));
            }
            body.push(atom("r", &["W0", "WP1"]));
            for k in 1..=m + 4 {
                body.push(atom("r", &[&format!("WP{k}"), &format!("WP{}", k + 1)]));
            }
            Ucq {
                disjuncts: vec![Cq::boolean(body)],
            }
        }
    }
}

/// Renders `q` as a Boolean program with one `query$goal` rule per disjunct.
pub fn query_program(q: &Ucq, mode: QueryMode) -> Result<Program> {
    let rules = q
        .disjuncts
        .iter()
        .map(|d| rule(vec![Atom::nullary(QUERY_GOAL)], d.body.clone()))
        .collect();
    Program::new(rules, QUERY_GOAL, 0, &edb_schema(mode))
}

/// Name of the tree node reached from `root` along `path` (`0` left, `1` right).
pub fn tree_node(root: &str, path: &str) -> String {
    if path.is_empty() {
        root.to_string()
    } else {
        format!("{root}_t{path}")
    }
}

pub fn grid_node(x: usize, y: usize) -> String {
    format!("g{x}_{y}")
}

/// Self step nodes of the grid node at `(x, y)`, in loop order.
pub fn self_step_nodes(x: usize, y: usize, mode: QueryMode) -> Vec<String> {
    match mode {
        QueryMode::Ucq => vec![format!("s{x}_{y}")],
        QueryMode::Cq => (1..=3).map(|k| format!("s{x}_{y}_{k}")).collect(),
    }
}

/// A counting tree root together with its two counter values.
struct Root {
    name: String,
    first: (usize, usize),
    second: (usize, usize),
}

/// The full grid for `w` with counting trees and no counting defect.
pub fn gen_canonical_grid(
    _p: &TilingProblem,
    w: &TilingInput,
    mode: QueryMode,
) -> Result<Instance> {
    if w.n() != 1 {
        return Err(Error::invalid(format!(
            "canonical grids are generated for words of length 1 only, got {}",
            w.n()
        )));
    }
    let m = w.m();
    let half = 1usize << w.n();
    let side = 1usize << half;
    let mut facts = Vec::new();
    let mut roots = Vec::new();
    let r = |a: &str, b: &str| Fact::new("r", [a, b]);
    for x in 0..side {
        for y in 0..side {
            let g = grid_node(x, y);
            roots.push(Root {
                name: g.clone(),
                first: (x, y),
                second: (x, y),
            });
            let loop_nodes = self_step_nodes(x, y, mode);
            let mut prev = g.clone();
            for s in &loop_nodes {
                facts.push(r(&prev, s));
                roots.push(Root {
                    name: s.clone(),
                    first: (x, y),
                    second: (x, y),
                });
                prev = s.clone();
            }
            facts.push(r(&prev, &g));
            if x + 1 < side {
                let h = format!("h{x}_{y}");
                facts.push(r(&g, &h));
                facts.push(r(&h, &grid_node(x + 1, y)));
                roots.push(Root {
                    name: h,
                    first: (x + 1, y),
                    second: (x, y),
                });
            }
            if y + 1 < side {
                let v = format!("v{x}_{y}");
                facts.push(r(&g, &v));
                facts.push(r(&v, &grid_node(x, y + 1)));
                roots.push(Root {
                    name: v,
                    first: (x, y + 1),
                    second: (x, y),
                });
            }
        }
    }
    for root in &roots {
        let first = counter_bits(root.first.0, root.first.1, half);
        let second = counter_bits(root.second.0, root.second.1, half);
        let mut stack = vec![String::new()];
        while let Some(path) = stack.pop() {
            let node = tree_node(&root.name, &path);
            if let Some(dir) = path.chars().last() {
                let g1 = format!("{node}_n1");
                facts.push(r(&node, &g1));
                if dir == '0' {
                    let g2 = format!("{node}_n2");
                    facts.push(r(&g1, &g2));
                    facts.push(Fact::new("jump", [node.as_str(), g2.as_str()]));
                } else {
                    facts.push(Fact::new("jump", [node.as_str(), g1.as_str()]));
                }
            }
            if path.len() == m {
                let k = usize::from_str_radix(&path, 2).expect("binary path");
                facts.extend(bit_facts(&node, 1, first[k], mode));
                facts.extend(bit_facts(&node, 2, second[k], mode));
                continue;
            }
            for d in ['1', '0'] {
                let child = format!("{path}{d}");
                facts.push(r(&node, &tree_node(&root.name, &child)));
                stack.push(child);
            }
        }
    }
    Instance::from_facts(&edb_schema(mode), facts)
}

fn bit_facts(leaf: &str, counter: usize, bit: bool, mode: QueryMode) -> Vec<Fact> {
    match mode {
        QueryMode::Ucq => vec![Fact::new(bit_rel(mode, counter, bit), [leaf])],
        QueryMode::Cq => {
            let chain: Vec<String> = (1..=4).map(|k| format!("{leaf}_b{counter}_{k}")).collect();
            let mut out = vec![Fact::new("r", [leaf, chain[0].as_str()])];
            for k in 0..3 {
                out.push(Fact::new("r", [chain[k].as_str(), chain[k + 1].as_str()]));
            }
            let targets = if bit { [0, 3] } else { [1, 2] };
            for t in targets {
                out.push(Fact::new(
                    format!("jump{counter}"),
                    [leaf, chain[t].as_str()],
                ));
            }
            out
        }
    }
}

/// Flips the second-counter bit stored at `leaf`.
pub fn flip_second_bit(i: &Instance, leaf: &str, mode: QueryMode) -> Result<Instance> {
    let set = |b: bool| bit_facts(leaf, 2, b, mode);
    let (old, new) = if set(true).iter().all(|f| i.contains(f)) {
        (set(true), set(false))
    } else if set(false).iter().all(|f| i.contains(f)) {
        (set(false), set(true))
    } else {
        return Err(Error::invalid(format!(
            "{leaf} is not a leaf of a counting tree"
        )));
    };
    let mut out = i.clone();
    out.retain(|f| !old.contains(f) || f.rel == "r");
    for f in new {
        out.insert(f)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ddlog_holds, ucq_holds};
    use crate::ir::validate_program;
    use crate::textio::parse_program;

    fn pairs(ps: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        ps.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn problem(
        tiles: &[&str],
        h: &[(&str, &str)],
        v: &[(&str, &str)],
        word: &[&str],
    ) -> (TilingProblem, TilingInput) {
        let p = TilingProblem::new(
            tiles.iter().map(|t| t.to_string()).collect(),
            pairs(h),
            pairs(v),
        )
        .unwrap();
        let w = TilingInput::new(&p, word.iter().map(|t| t.to_string()).collect()).unwrap();
        (p, w)
    }

    fn trivial() -> (TilingProblem, TilingInput) {
        problem(&["T1"], &[("T1", "T1")], &[("T1", "T1")], &["T1"])
    }

    fn untileable() -> (TilingProblem, TilingInput) {
        problem(&["T1"], &[], &[("T1", "T1")], &["T1"])
    }

    fn has_rule(p: &Program, text: &str) -> bool {
        let r = parse_program(text).unwrap().rules.remove(0);
        p.rules.contains(&r)
    }

    #[test]
    fn displayed_rules_appear() {
        let (p, w) = trivial();
        let (prog, _) = gen_lower_bound(&p, &w, QueryMode::Ucq).unwrap();
        assert!(has_rule(
            &prog,
            "gactive(X) :- levG_0(X), r(X,Y), levG_0(Y), r(Y,X)."
        ));
        assert!(has_rule(&prog, "T1(X) :- gactive(X)."));
        assert!(has_rule(&prog, "left(X) :- r(X,Y), r(Y,Z), jump(X,Z)."));
        assert!(has_rule(&prog, "right(X) :- r(X,Y), jump(X,Y)."));
        for mode in [QueryMode::Ucq, QueryMode::Cq] {
            let (prog, _) = gen_lower_bound(&p, &w, mode).unwrap();
            let report = validate_program(&prog);
            assert!(report.ok && report.monadic, "{:?}", report.violations);
            assert!(prog.is_boolean());
        }
    }

    #[test]
    fn defect_rules_follow_the_matching_relations() {
        let (p, w) = problem(
            &["A", "B"],
            &[("A", "B"), ("B", "A")],
            &[("A", "A"), ("B", "B")],
            &["B"],
        );
        let (prog, _) = gen_lower_bound(&p, &w, QueryMode::Ucq).unwrap();
        let goal_rules: Vec<&Rule> = prog.goal_rules().collect();
        // two horizontal defects, two vertical defects, one initial-condition defect
        assert_eq!(goal_rules.len(), 5);
        assert!(has_rule(&prog, "goal() :- pos_0_0(X), A(X)."));
        assert!(has_rule(
            &prog,
            "goal() :- A(X), gactive(X), r(X,Y), hactive(Y), r(Y,Z), A(Z), gactive(Z)."
        ));
        assert!(has_rule(&prog, "A(X) | B(X) :- gactive(X)."));
    }

    #[test]
    fn query_shape() {
        let (p, w) = trivial();
        let (_, q) = gen_lower_bound(&p, &w, QueryMode::Ucq).unwrap();
        assert_eq!(q.disjuncts.len(), 2);
        let ends: Vec<(bool, bool)> = q
            .disjuncts
            .iter()
            .map(|d| {
                (
                    d.body.contains(&atom("B1", &["X2"])),
                    d.body.contains(&atom("nB2", &["Y2"])),
                )
            })
            .collect();
        assert_eq!(ends, vec![(true, true), (false, false)]);
        assert!(q.disjuncts[1].body.contains(&atom("nB1", &["X2"])));
        assert!(q.disjuncts[1].body.contains(&atom("B2", &["Y2"])));

        // q_1 at m = 2: jump atoms and r-paths of lengths 3 and 4 from Z1_0
        let body = aligned_leaves(2);
        assert!(body.contains(&atom("jump", &["X1", "Z1_3"])));
        assert!(body.contains(&atom("jump", &["Y1", "ZP1_4"])));
        let succ = |v: &str| -> Vec<String> {
            body.iter()
                .filter(|a| {
                    a.rel == "r" && a.args[0].name() == v && a.args[1].name().contains("1_")
                })
                .map(|a| a.args[1].name().to_string())
                .collect()
        };
        let mut frontier = vec!["Z1_0".to_string()];
        let mut reached = Vec::new();
        for _ in 0..4 {
            frontier = frontier.iter().flat_map(|v| succ(v)).collect();
            reached.push(frontier.clone());
        }
        assert!(reached[2].contains(&"Z1_3".to_string()));
        assert!(reached[3].contains(&"ZP1_4".to_string()));

        let (_, q) = gen_lower_bound(&p, &w, QueryMode::Cq).unwrap();
        assert_eq!(q.disjuncts.len(), 1);
        let rendered = query_program(&q, QueryMode::Cq).unwrap();
        assert_eq!(rendered.goal, QUERY_GOAL);
        assert_eq!(rendered.rules.len(), 1);
    }

    #[test]
    fn word_length_guard() {
        let (p, _) = trivial();
        let w = TilingInput::new(&p, vec!["T1".into(); 3]).unwrap();
        assert!(gen_lower_bound(&p, &w, QueryMode::Ucq).is_err());
        let w = TilingInput::new(&p, vec!["T1".into(); 2]).unwrap();
        assert!(gen_lower_bound(&p, &w, QueryMode::Ucq).is_ok());
        assert!(gen_canonical_grid(&p, &w, QueryMode::Ucq).is_err());
        let clash = TilingProblem::new(vec!["r".into()], BTreeSet::new(), BTreeSet::new()).unwrap();
        let w = TilingInput::new(&clash, vec!["r".into()]).unwrap();
        assert!(gen_lower_bound(&clash, &w, QueryMode::Ucq).is_err());
    }

    fn leaf_bits(i: &Instance, root: &str, rel: &str) -> Vec<bool> {
        ["00", "01", "10", "11"]
            .iter()
            .map(|p| i.contains(&Fact::new(rel, [tree_node(root, p)])))
            .collect()
    }

    #[test]
    fn grid_layout() {
        let (p, w) = trivial();
        let i = gen_canonical_grid(&p, &w, QueryMode::Ucq).unwrap();
        let grid: Vec<String> = i
            .adom()
            .into_iter()
            .filter(|c| c.starts_with('g') && !c.contains("_t"))
            .collect();
        assert_eq!(grid.len(), 16);
        // node (0,0): all first-counter bits zero
        assert_eq!(leaf_bits(&i, &grid_node(0, 0), "nB1"), vec![true; 4]);
        // node (1,2): horizontal bits 1,0 then vertical bits 0,1
        assert_eq!(
            leaf_bits(&i, &grid_node(1, 2), "B1"),
            vec![true, false, false, true]
        );
        // horizontal step from (0,2) to (1,2) carries (0,2) in its second counter
        assert_eq!(leaf_bits(&i, "h0_2", "B1"), vec![true, false, false, true]);
        assert_eq!(leaf_bits(&i, "h0_2", "B2"), vec![false, false, false, true]);
        // self step nodes carry identical counters
        for x in 0..4 {
            for y in 0..4 {
                for s in self_step_nodes(x, y, QueryMode::Ucq) {
                    assert_eq!(leaf_bits(&i, &s, "B1"), leaf_bits(&i, &s, "B2"));
                    assert_eq!(
                        leaf_bits(&i, &s, "B1"),
                        leaf_bits(&i, &grid_node(x, y), "B1")
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_grid_has_no_counting_defect() {
        let (p, w) = trivial();
        for mode in [QueryMode::Ucq, QueryMode::Cq] {
            let (_, q) = gen_lower_bound(&p, &w, mode).unwrap();
            let i = gen_canonical_grid(&p, &w, mode).unwrap();
            assert!(!ucq_holds(&q, &i), "{mode:?}");
            for (root, path) in [
                ("g0_0", "00"),
                ("g2_1", "11"),
                ("h1_3", "01"),
                ("v3_0", "10"),
            ] {
                let j = flip_second_bit(&i, &tree_node(root, path), mode).unwrap();
                assert!(ucq_holds(&q, &j), "{mode:?} {root} {path}");
            }
        }
    }

    #[test]
    fn tiling_correspondence_on_the_canonical_grid() {
        for mode in [QueryMode::Ucq, QueryMode::Cq] {
            let (p, w) = trivial();
            let (prog, _) = gen_lower_bound(&p, &w, mode).unwrap();
            let i = gen_canonical_grid(&p, &w, mode).unwrap();
            assert!(!ddlog_holds(&prog, &i).unwrap());

            let (p, w) = untileable();
            let (prog, _) = gen_lower_bound(&p, &w, mode).unwrap();
            assert!(ddlog_holds(&prog, &i).unwrap());
        }
        // checkerboard: tileable from either corner colour, but not with
        // only one horizontal pair allowed
        let i = {
            let (p, w) = trivial();
            gen_canonical_grid(&p, &w, QueryMode::Ucq).unwrap()
        };
        let alt = [("A", "B"), ("B", "A")];
        for (h, word, expected) in [
            (&alt[..], "A", false),
            (&alt[..], "B", false),
            (&alt[..1], "A", true),
        ] {
            let (p, w) = problem(&["A", "B"], h, &alt, &[word]);
            let (prog, _) = gen_lower_bound(&p, &w, QueryMode::Ucq).unwrap();
            assert_eq!(ddlog_holds(&prog, &i).unwrap(), expected, "{h:?} {word}");
        }
    }
}
