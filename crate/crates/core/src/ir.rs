//! Schemas, terms, atoms, rules, programs and instances, plus the structural
//! checks (validity, simplicity) and the canonical form used to name and
//! deduplicate rule bodies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Schema {
    relations: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut s = Schema::new();
        for (name, arity) in pairs {
            s.insert(name, arity)?;
        }
        Ok(s)
    }

    /// Adds a relation; re-adding with the same arity is a no-op.
    pub fn insert(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        match self.relations.get(&name) {
            Some(&a) if a != arity => Err(Error::Arity {
                relation: name,
                expected: a,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(name, arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Union of two schemas; fails when a shared name has different arities.
    pub fn merge(&self, other: &Schema) -> Result<Schema> {
        let mut out = self.clone();
        for (n, a) in other.iter() {
            out.insert(n, a)?;
        }
        Ok(out)
    }

    pub fn restrict<'a>(&self, keep: impl Fn(&str) -> bool + 'a) -> Schema {
        Schema {
            relations: self
                .relations
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, &v)| (k.clone(), v))
                .collect(),
        }
    }

    pub fn remove(&mut self, name: &str) {
        self.relations.remove(name);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn cst(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub rel: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(rel: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            rel: rel.into(),
            args,
        }
    }

    /// Atom whose arguments are all variables.
    pub fn vars(rel: impl Into<String>, names: &[&str]) -> Self {
        Atom::new(rel, names.iter().map(|n| Term::var(*n)).collect())
    }

    pub fn nullary(rel: impl Into<String>) -> Self {
        Atom::new(rel, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| t.as_var())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn substitute(&self, f: &impl Fn(&Term) -> Term) -> Atom {
        Atom::new(self.rel.clone(), self.args.iter().map(f).collect())
    }

    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Atom {
        self.substitute(&|t| match t {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            c => c.clone(),
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// `head[0] | ... | head[m-1] :- body`. An empty head stands for falsity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Vec<Atom>,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Vec<Atom>, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    /// Body variables in order of first occurrence.
    pub fn body_vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in &self.body {
            for v in a.var_names() {
                if seen.insert(v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    /// All variables of the rule (head variables should be a subset of body ones).
    pub fn vars(&self) -> BTreeSet<String> {
        self.body
            .iter()
            .chain(self.head.iter())
            .flat_map(|a| a.var_names().map(str::to_string))
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.body
            .iter()
            .chain(self.head.iter())
            .flat_map(|a| a.args.iter())
            .filter(|t| !t.is_var())
            .map(|t| t.name().to_string())
            .collect()
    }

    /// Symbol count with every name counted as one symbol.
    pub fn size(&self) -> usize {
        self.head
            .iter()
            .chain(self.body.iter())
            .map(|a| 1 + a.arity())
            .sum()
    }

    pub fn substitute(&self, f: &impl Fn(&Term) -> Term) -> Rule {
        Rule::new(
            self.head.iter().map(|a| a.substitute(f)).collect(),
            self.body.iter().map(|a| a.substitute(f)).collect(),
        )
    }

    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Rule {
        Rule::new(
            self.head.iter().map(|a| a.rename_vars(map)).collect(),
            self.body.iter().map(|a| a.rename_vars(map)).collect(),
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.head.is_empty() {
            f.write_str("false")?;
        }
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(" :- ")?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}

/// A disjunctive Datalog program with a designated goal relation.
///
/// The schema covers every relation of the program, including EDB
/// relations that no rule mentions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub schema: Schema,
    pub rules: Vec<Rule>,
    pub goal: String,
    pub arity: usize,
}

impl Program {
    /// Builds a program, inferring arities from the rules and `extra`.
    pub fn new(
        rules: Vec<Rule>,
        goal: impl Into<String>,
        arity: usize,
        extra: &Schema,
    ) -> Result<Program> {
        let goal = goal.into();
        let mut schema = extra.clone();
        schema.insert(goal.clone(), arity)?;
        for r in &rules {
            for a in r.head.iter().chain(r.body.iter()) {
                schema.insert(a.rel.clone(), a.arity())?;
            }
        }
        Ok(Program {
            schema,
            rules,
            goal,
            arity,
        })
    }

    /// Head relations plus the goal relation.
    pub fn idb(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self
            .rules
            .iter()
            .flat_map(|r| r.head.iter().map(|a| a.rel.clone()))
            .collect();
        s.insert(self.goal.clone());
        s
    }

    pub fn edb(&self) -> BTreeSet<String> {
        let idb = self.idb();
        self.schema
            .names()
            .filter(|n| !idb.contains(*n))
            .map(str::to_string)
            .collect()
    }

    pub fn edb_schema(&self) -> Schema {
        let idb = self.idb();
        self.schema.restrict(|n| !idb.contains(n))
    }

    pub fn idb_schema(&self) -> Schema {
        let idb = self.idb();
        self.schema.restrict(|n| idb.contains(n))
    }

    pub fn is_boolean(&self) -> bool {
        self.arity == 0
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.rules.iter().flat_map(|r| r.constants()).collect()
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::of_rules(&self.rules)
    }

    /// Removes rules that coincide up to variable renaming and atom order,
    /// keeping the first occurrence. Rule order is otherwise preserved.
    pub fn dedup(&mut self) {
        let mut seen = BTreeSet::new();
        self.rules.retain(|r| seen.insert(canonical_rule(r)));
    }

    /// Deduplicates and sorts rules by canonical form, for reproducible output.
    pub fn normalize(&mut self) {
        let mut keyed: BTreeMap<String, Rule> = BTreeMap::new();
        for r in self.rules.drain(..) {
            keyed.entry(canonical_rule(&r)).or_insert(r);
        }
        self.rules = keyed.into_values().collect();
    }

    pub fn goal_rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules
            .iter()
            .filter(move |r| r.head.iter().any(|a| a.rel == self.goal))
    }
}

/// Size measures of a rule set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub size: usize,
    pub rule_size: usize,
    pub atom_width: usize,
    pub variable_width: usize,
}

impl Metrics {
    pub fn of_rules<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> Metrics {
        let mut m = Metrics::default();
        for r in rules {
            let s = r.size();
            m.size += s;
            m.rule_size = m.rule_size.max(s);
            m.atom_width = m.atom_width.max(r.body.len());
            m.variable_width = m.variable_width.max(r.vars().len());
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    /// True when all non-goal IDB relations are at most unary.
    pub monadic: bool,
    pub violations: Vec<String>,
    pub metrics: Metrics,
}

pub fn validate_program(p: &Program) -> ValidationReport {
    let mut violations = Vec::new();
    let mut monadic = true;
    match p.schema.arity(&p.goal) {
        Some(a) if a != p.arity => violations.push(format!(
            "goal relation {} has arity {a}, program arity is {}",
            p.goal, p.arity
        )),
        None => violations.push(format!("goal relation {} missing from schema", p.goal)),
        _ => {}
    }
    for (i, r) in p.rules.iter().enumerate() {
        if r.body.is_empty() {
            violations.push(format!("rule {i}: empty body"));
        }
        for a in r.head.iter().chain(r.body.iter()) {
            if p.schema.arity(&a.rel) != Some(a.arity()) {
                violations.push(format!("rule {i}: atom {a} does not match the schema"));
            }
        }
        let body_vars: BTreeSet<&str> = r.body.iter().flat_map(|a| a.var_names()).collect();
        for a in &r.head {
            for v in a.var_names() {
                if !body_vars.contains(v) {
                    violations.push(format!("rule {i}: head variable {v} not in body"));
                }
            }
        }
        if r.body.iter().any(|a| a.rel == p.goal) {
            violations.push(format!("rule {i}: goal relation occurs in a body"));
        }
        if r.head.iter().any(|a| a.rel == p.goal) && r.head.len() > 1 {
            violations.push(format!("rule {i}: goal relation in a disjunctive head"));
        }
    }
    for rel in p.idb() {
        if rel != p.goal && p.schema.arity(&rel).unwrap_or(0) > 1 {
            monadic = false;
            violations.push(format!("IDB relation {rel} has arity above one"));
        }
    }
    ValidationReport {
        ok: violations.is_empty(),
        monadic,
        violations,
        metrics: p.metrics(),
    }
}

/// Disjointness constraints: empty-headed rules over at most unary relations,
/// all atoms of a rule sharing one variable (or all nullary).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DisjointnessSet {
    pub rules: Vec<Rule>,
}

impl DisjointnessSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        for r in &rules {
            if !r.head.is_empty() {
                return Err(Error::invalid(format!("disjointness rule with head: {r}")));
            }
            let arities: BTreeSet<usize> = r.body.iter().map(|a| a.arity()).collect();
            if arities.len() != 1 || *arities.iter().next().unwrap() > 1 {
                return Err(Error::invalid(format!(
                    "disjointness rule must use relations of one arity, at most unary: {r}"
                )));
            }
            if r.vars().len() > 1 || !r.constants().is_empty() {
                return Err(Error::invalid(format!(
                    "disjointness rule must range over one variable: {r}"
                )));
            }
        }
        Ok(DisjointnessSet { rules })
    }

    /// The relations mentioned by some constraint.
    pub fn relations(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .flat_map(|r| r.body.iter().map(|a| a.rel.clone()))
            .collect()
    }

    pub fn schema(&self) -> Schema {
        let mut s = Schema::new();
        for r in &self.rules {
            for a in &r.body {
                // arity consistency is checked on construction of the rules
                let _ = s.insert(a.rel.clone(), a.arity());
            }
        }
        s
    }

    /// Relation sets that may not co-occur on one element (unary) or globally (nullary).
    pub fn forbidden_sets(&self, arity: usize) -> Vec<BTreeSet<String>> {
        self.rules
            .iter()
            .filter(|r| r.body.first().map(|a| a.arity()) == Some(arity))
            .map(|r| r.body.iter().map(|a| a.rel.clone()).collect())
            .collect()
    }
}

fn rule_is_simple(r: &Rule, edb: &impl Fn(&str) -> bool) -> bool {
    let edb_atoms: Vec<&Atom> = r.body.iter().filter(|a| edb(&a.rel)).collect();
    let vars = r.vars();
    match edb_atoms.as_slice() {
        [] => vars.len() <= 1,
        [a] => {
            let mut seen = BTreeSet::new();
            for t in &a.args {
                match t {
                    Term::Var(v) => {
                        if !seen.insert(v.clone()) {
                            return false;
                        }
                    }
                    Term::Const(_) => return false,
                }
            }
            seen == vars
        }
        _ => false,
    }
}

pub fn is_simple(p: &Program) -> bool {
    let edb = p.edb();
    p.rules
        .iter()
        .all(|r| rule_is_simple(r, &|n| edb.contains(n)))
}

/// Simple after treating the relations of `d` as IDB relations.
pub fn is_semi_simple(p: &Program, d: &DisjointnessSet) -> bool {
    let edb = p.edb();
    let dr = d.relations();
    p.rules
        .iter()
        .all(|r| rule_is_simple(r, &|n| edb.contains(n) && !dr.contains(n)))
}

/// Canonical form of a conjunction of atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalCq {
    /// Serialization shared by exactly the bodies that are equal up to
    /// variable renaming and atom reordering.
    pub key: String,
    /// Original variable names, in canonical position order.
    pub order: Vec<String>,
    /// The atoms with variable `order[i]` renamed to `V{i}`, sorted, deduplicated.
    pub atoms: Vec<Atom>,
}

/// Most variables accepted by [`canonical_cq`].
pub const CANONICAL_MAX_VARS: usize = 12;

pub fn canonical_cq(body: &[Atom]) -> Result<CanonicalCq> {
    let nvars = body
        .iter()
        .flat_map(|a| a.var_names())
        .collect::<BTreeSet<_>>()
        .len();
    if nvars > CANONICAL_MAX_VARS {
        return Err(Error::limit(
            "canonical_cq",
            "variables",
            nvars as u64,
            CANONICAL_MAX_VARS as u64,
        ));
    }
    Ok(canonicalize(body))
}

/// Canonical key of a rule: the body and the head are labelled jointly.
pub fn canonical_rule(r: &Rule) -> String {
    let mut atoms = r.body.clone();
    atoms.extend(
        r.head
            .iter()
            .map(|a| Atom::new(format!("=>{}", a.rel), a.args.clone())),
    );
    canonicalize(&atoms).key
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum ArgSig {
    Var(u32),
    Const(String),
}

#[derive(Clone, Copy)]
enum Slot<'a> {
    Var(usize),
    Const(&'a str),
}

struct Labeller<'a> {
    atoms: Vec<(&'a str, Vec<Slot<'a>>)>,
    occ: Vec<Vec<(usize, usize)>>,
    atom_set: BTreeSet<(&'a str, Vec<ArgKey<'a>>)>,
    best: Option<(String, Vec<u32>)>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ArgKey<'a> {
    Var(usize),
    Const(&'a str),
}

/// Individualization-refinement canonical labelling: colour refinement on
/// the variable/atom incidence structure, branching on the first
/// non-singleton cell, minimum rendering over all leaves.
fn canonicalize(body: &[Atom]) -> CanonicalCq {
    let mut names: Vec<&str> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut atoms = Vec::new();
    for a in body {
        let slots: Vec<Slot> = a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => {
                    let i = *index.entry(v.as_str()).or_insert_with(|| {
                        names.push(v.as_str());
                        names.len() - 1
                    });
                    Slot::Var(i)
                }
                Term::Const(c) => Slot::Const(c.as_str()),
            })
            .collect();
        atoms.push((a.rel.as_str(), slots));
    }
    let n = names.len();
    let mut occ = vec![Vec::new(); n];
    for (ai, (_, slots)) in atoms.iter().enumerate() {
        for (pos, s) in slots.iter().enumerate() {
            if let Slot::Var(v) = s {
                occ[*v].push((ai, pos));
            }
        }
    }
    let atom_set = atoms
        .iter()
        .map(|(r, slots)| (*r, slots.iter().map(slot_key).collect()))
        .collect();
    let mut lab = Labeller {
        atoms,
        occ,
        atom_set,
        best: None,
    };
    let colors = lab.refine(vec![0; n]);
    lab.search(colors);
    let (key, colors) = lab.best.expect("search visits at least one leaf");
    let mut order = vec![String::new(); n];
    for (v, &c) in colors.iter().enumerate() {
        order[c as usize] = names[v].to_string();
    }
    let rename: BTreeMap<String, String> = order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), format!("V{i}")))
        .collect();
    let canon: BTreeSet<Atom> = body.iter().map(|a| a.rename_vars(&rename)).collect();
    CanonicalCq {
        key,
        order,
        atoms: canon.into_iter().collect(),
    }
}

fn slot_key<'a>(s: &Slot<'a>) -> ArgKey<'a> {
    match s {
        Slot::Var(v) => ArgKey::Var(*v),
        Slot::Const(c) => ArgKey::Const(c),
    }
}

impl<'a> Labeller<'a> {
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        let mut ncells = count_cells(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(&str, usize, Vec<ArgSig>)>)> = (0..n)
                .map(|v| {
                    let mut occs: Vec<_> = self.occ[v]
                        .iter()
                        .map(|&(ai, pos)| {
                            let (rel, slots) = &self.atoms[ai];
                            let args = slots
                                .iter()
                                .map(|s| match s {
                                    Slot::Var(u) => ArgSig::Var(colors[*u]),
                                    Slot::Const(c) => ArgSig::Const(c.to_string()),
                                })
                                .collect();
                            (*rel, pos, args)
                        })
                        .collect();
                    occs.sort();
                    (colors[v], occs)
                })
                .collect();
            let mut distinct: Vec<&_> = sigs.iter().collect();
            distinct.sort();
            distinct.dedup();
            let new: Vec<u32> = sigs
                .iter()
                .map(|s| distinct.binary_search(&s).unwrap() as u32)
                .collect();
            let nc = distinct.len();
            colors = new;
            if nc == ncells {
                return colors;
            }
            ncells = nc;
        }
    }

    fn search(&mut self, colors: Vec<u32>) {
        let n = colors.len();
        if count_cells(&colors) == n {
            let key = self.render(&colors);
            if self.best.as_ref().is_none_or(|(b, _)| key < *b) {
                self.best = Some((key, colors));
            }
            return;
        }
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let target = (0..n).find(|&c| counts[c] > 1).unwrap() as u32;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if tried.iter().any(|&u| self.swap_is_automorphism(u, v)) {
                continue;
            }
            tried.push(v);
            let ind: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| {
                    if c == target && u != v {
                        2 * c + 1
                    } else {
                        2 * c
                    }
                })
                .collect();
            let refined = self.refine(ind);
            self.search(refined);
        }
    }

    fn swap_is_automorphism(&self, u: usize, v: usize) -> bool {
        let sw = |x: usize| {
            if x == u {
                v
            } else if x == v {
                u
            } else {
                x
            }
        };
        self.atoms.iter().all(|(r, slots)| {
            let img: Vec<ArgKey> = slots
                .iter()
                .map(|s| match s {
                    Slot::Var(x) => ArgKey::Var(sw(*x)),
                    Slot::Const(c) => ArgKey::Const(c),
                })
                .collect();
            self.atom_set.contains(&(*r, img))
        })
    }

    fn render(&self, colors: &[u32]) -> String {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(rel, slots)| {
                let args: Vec<String> = slots
                    .iter()
                    .map(|s| match s {
                        Slot::Var(v) => format!("V{}", colors[*v]),
                        Slot::Const(c) => format!("'{c}"),
                    })
                    .collect();
                format!("{rel}({})", args.join(","))
            })
            .collect();
        parts.sort();
        parts.dedup();
        parts.join(",")
    }
}

fn count_cells(colors: &[u32]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

/// A ground fact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub rel: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new<S: Into<String>>(rel: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        Fact {
            rel: rel.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.rel.clone(),
            self.args.iter().map(|a| Term::cst(a.clone())).collect(),
        )
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.rel, self.args.join(","))
    }
}

/// A finite set of facts over a schema.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Instance {
    pub schema: Schema,
    facts: BTreeSet<Fact>,
}

impl Instance {
    pub fn new(schema: Schema) -> Self {
        Instance {
            schema,
            facts: BTreeSet::new(),
        }
    }

    /// Builds an instance whose schema is inferred from `facts` and `extra`.
    pub fn from_facts(extra: &Schema, facts: impl IntoIterator<Item = Fact>) -> Result<Self> {
        let mut i = Instance::new(extra.clone());
        for f in facts {
            i.schema.insert(f.rel.clone(), f.args.len())?;
            i.facts.insert(f);
        }
        Ok(i)
    }

    pub fn insert(&mut self, f: Fact) -> Result<bool> {
        self.schema.insert(f.rel.clone(), f.args.len())?;
        Ok(self.facts.insert(f))
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.facts.contains(f)
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn fact_set(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Active domain: constants occurring in some fact.
    pub fn adom(&self) -> BTreeSet<String> {
        self.facts
            .iter()
            .flat_map(|f| f.args.iter().cloned())
            .collect()
    }

    pub fn retain(&mut self, keep: impl FnMut(&Fact) -> bool) {
        self.facts.retain(keep);
    }

    pub fn rename(&self, f: impl Fn(&str) -> String) -> Instance {
        Instance {
            schema: self.schema.clone(),
            facts: self
                .facts
                .iter()
                .map(|x| Fact::new(x.rel.clone(), x.args.iter().map(|a| f(a))))
                .collect(),
        }
    }
}
