//! Semantics: conjunctive queries, certain answers of disjunctive programs,
//! homomorphisms, girth and exhaustive enumeration of small instances.

pub mod join;
pub mod sat;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ir::{Atom, Fact, Instance, Program, Schema, Term};
use join::{Matcher, QAtom, QTerm, Rel};
use sat::{Lit, Solver};

/// Guards for the grounding-based evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub max_ground_clauses: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_ground_clauses: 10_000_000,
        }
    }
}

/// An instance whose relations in `full` hold on every tuple over `domain`.
/// The domain always contains the active domain of `instance`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub instance: Instance,
    pub domain: BTreeSet<String>,
    pub full: Schema,
}

impl Structure {
    pub fn of(i: &Instance) -> Structure {
        Structure {
            domain: i.adom(),
            instance: i.clone(),
            full: Schema::new(),
        }
    }

    pub fn with_full(instance: Instance, domain: BTreeSet<String>, full: Schema) -> Structure {
        let mut domain = domain;
        domain.extend(instance.adom());
        Structure {
            instance,
            domain,
            full,
        }
    }

    /// Number of facts the full relations would contribute.
    pub fn full_fact_count(&self) -> u64 {
        let n = self.domain.len() as u64;
        self.full
            .iter()
            .map(|(_, a)| n.saturating_pow(a as u32))
            .fold(0u64, |x, y| x.saturating_add(y))
    }

    /// Writes out every tuple of the full relations.
    pub fn materialize(&self, max_facts: u64) -> Result<Instance> {
        let extra = self.full_fact_count();
        if extra > max_facts {
            return Err(Error::limit("materialize", "facts", extra, max_facts));
        }
        let mut out = self.instance.clone();
        let dom: Vec<&String> = self.domain.iter().collect();
        for (rel, arity) in self.full.iter() {
            let mut idx = vec![0usize; arity];
            loop {
                if arity == 0 || !dom.is_empty() {
                    out.insert(Fact::new(rel, idx.iter().map(|&i| dom[i].clone())))?;
                }
                if !advance(&mut idx, dom.len()) {
                    break;
                }
            }
        }
        Ok(out)
    }
}

/// Odometer increment; false once all tuples have been visited.
fn advance(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.ids.get(s) {
            return i;
        }
        let i = self.names.len() as u32;
        self.ids.insert(s.to_string(), i);
        self.names.push(s.to_string());
        i
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    fn name(&self, i: u32) -> &str {
        &self.names[i as usize]
    }
}

struct Db {
    consts: Interner,
    rels: HashMap<String, Rel>,
    domain: Vec<u32>,
    domain_set: HashSet<u32>,
}

impl Db {
    fn new(s: &Structure) -> Db {
        let mut consts = Interner::default();
        let domain: Vec<u32> = s.domain.iter().map(|d| consts.intern(d)).collect();
        let mut rels: HashMap<String, Rel> = HashMap::new();
        for (name, arity) in s.full.iter() {
            rels.insert(name.to_string(), Rel::full(arity));
        }
        for f in s.instance.facts() {
            let t: Vec<u32> = f.args.iter().map(|a| consts.intern(a)).collect();
            let r = rels
                .entry(f.rel.clone())
                .or_insert_with(|| Rel::new(f.args.len()));
            if !r.full {
                r.insert(t);
            }
        }
        let domain_set = domain.iter().copied().collect();
        Db {
            consts,
            rels,
            domain,
            domain_set,
        }
    }

    fn qterm(&mut self, t: &Term, vars: &mut BTreeMap<String, usize>) -> QTerm {
        match t {
            Term::Var(v) => {
                let n = vars.len();
                QTerm::Var(*vars.entry(v.clone()).or_insert(n))
            }
            Term::Const(c) => QTerm::Const(self.consts.intern(c)),
        }
    }
}

static EMPTY_REL: std::sync::OnceLock<Rel> = std::sync::OnceLock::new();

fn empty_rel() -> &'static Rel {
    EMPTY_REL.get_or_init(|| Rel::new(0))
}

/// A conjunctive query with answer variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cq {
    pub answer: Vec<String>,
    pub body: Vec<Atom>,
}

impl Cq {
    pub fn boolean(body: Vec<Atom>) -> Cq {
        Cq {
            answer: Vec::new(),
            body,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ucq {
    pub disjuncts: Vec<Cq>,
}

fn cq_matches(q: &Cq, s: &Structure, stop_after_first: bool) -> BTreeSet<Vec<String>> {
    let mut db = Db::new(s);
    let mut vars = BTreeMap::new();
    let compiled: Vec<(String, Vec<QTerm>)> = q
        .body
        .iter()
        .map(|a| {
            (
                a.rel.clone(),
                a.args.iter().map(|t| db.qterm(t, &mut vars)).collect(),
            )
        })
        .collect();
    let full_dom = Rel::full(1);
    let mut atoms: Vec<QAtom> = compiled
        .iter()
        .map(|(r, args)| QAtom {
            rel: db.rels.get(r).unwrap_or(empty_rel()),
            args: args.clone(),
        })
        .collect();
    let mut answer_idx = Vec::new();
    for v in &q.answer {
        let n = vars.len();
        let i = *vars.entry(v.clone()).or_insert(n);
        answer_idx.push(i);
    }
    // answer variables missing from the body range over the whole domain
    let in_body: HashSet<usize> = compiled
        .iter()
        .flat_map(|(_, a)| a.iter())
        .filter_map(|t| match t {
            QTerm::Var(v) => Some(*v),
            _ => None,
        })
        .collect();
    for &i in &answer_idx {
        if !in_body.contains(&i) {
            atoms.push(QAtom {
                rel: &full_dom,
                args: vec![QTerm::Var(i)],
            });
        }
    }
    let m = Matcher {
        atoms,
        domain: &db.domain,
        domain_set: &db.domain_set,
        admissible: None,
    };
    let mut out = BTreeSet::new();
    let mut binding = vec![None; vars.len()];
    m.run(&mut binding, &mut |b| {
        out.insert(
            answer_idx
                .iter()
                .map(|&i| db.consts.name(b[i].unwrap()).to_string())
                .collect(),
        );
        !stop_after_first
    });
    out
}

/// All answer tuples of `q` on `i`.
pub fn eval_cq(q: &Cq, i: &Instance) -> BTreeSet<Vec<String>> {
    cq_matches(q, &Structure::of(i), false)
}

/// Whether the body of `q` has a match in `i` (answer variables ignored).
pub fn cq_holds(q: &Cq, i: &Instance) -> bool {
    let b = Cq::boolean(q.body.clone());
    !cq_matches(&b, &Structure::of(i), true).is_empty()
}

pub fn eval_ucq(q: &Ucq, i: &Instance) -> BTreeSet<Vec<String>> {
    q.disjuncts.iter().flat_map(|d| eval_cq(d, i)).collect()
}

pub fn ucq_holds(q: &Ucq, i: &Instance) -> bool {
    q.disjuncts.iter().any(|d| cq_holds(d, i))
}

struct CompiledRule {
    nvars: usize,
    body: Vec<(String, Vec<QTerm>)>,
    head: Vec<(String, Vec<QTerm>)>,
}

/// Ground program restricted to atoms that some derivation can produce.
struct Grounding {
    idb_ids: Interner,
    atom_ids: HashMap<(u32, Vec<u32>), u32>,
    clauses: Vec<Vec<Lit>>,
    possible: HashMap<String, Rel>,
}

fn ground(p: &Program, db: &mut Db, opts: &EvalOptions) -> Result<Grounding> {
    let idb = p.idb();
    for r in &p.rules {
        let body_vars: BTreeSet<&str> = r.body.iter().flat_map(|a| a.var_names()).collect();
        if let Some(a) = r
            .head
            .iter()
            .find(|a| a.var_names().any(|v| !body_vars.contains(v)))
        {
            return Err(Error::invalid(format!(
                "head atom {a} has a variable outside the body"
            )));
        }
    }
    let compiled: Vec<CompiledRule> = p
        .rules
        .iter()
        .map(|r| {
            let mut vars = BTreeMap::new();
            let body = r
                .body
                .iter()
                .map(|a| {
                    (
                        a.rel.clone(),
                        a.args.iter().map(|t| db.qterm(t, &mut vars)).collect(),
                    )
                })
                .collect();
            let head = r
                .head
                .iter()
                .map(|a| {
                    (
                        a.rel.clone(),
                        a.args.iter().map(|t| db.qterm(t, &mut vars)).collect(),
                    )
                })
                .collect();
            CompiledRule {
                nvars: vars.len(),
                body,
                head,
            }
        })
        .collect();
    let mut possible: HashMap<String, Rel> = idb
        .iter()
        .map(|r| (r.clone(), Rel::new(p.schema.arity(r).unwrap_or(0))))
        .collect();
    let resolve = |t: &QTerm, b: &[Option<u32>]| match t {
        QTerm::Const(c) => *c,
        QTerm::Var(v) => b[*v].expect("head variables are bound by the body"),
    };
    // over-approximate the derivable IDB atoms
    loop {
        let mut new: Vec<(String, Vec<u32>)> = Vec::new();
        for cr in &compiled {
            let atoms: Vec<QAtom> = cr
                .body
                .iter()
                .map(|(r, args)| QAtom {
                    rel: if idb.contains(r) {
                        &possible[r]
                    } else {
                        db.rels.get(r).unwrap_or(empty_rel())
                    },
                    args: args.clone(),
                })
                .collect();
            let m = Matcher {
                atoms,
                domain: &db.domain,
                domain_set: &db.domain_set,
                admissible: None,
            };
            let mut binding = vec![None; cr.nvars];
            m.run(&mut binding, &mut |b| {
                for (r, args) in &cr.head {
                    let t: Vec<u32> = args.iter().map(|x| resolve(x, b)).collect();
                    if !possible[r].contains(&t, &db.domain_set) {
                        new.push((r.clone(), t));
                    }
                }
                true
            });
        }
        if new.is_empty() {
            break;
        }
        for (r, t) in new {
            possible.get_mut(&r).unwrap().insert(t);
        }
    }
    let mut g = Grounding {
        idb_ids: Interner::default(),
        atom_ids: HashMap::new(),
        clauses: Vec::new(),
        possible,
    };
    let mut next_var = 0u32;
    let limit = opts.max_ground_clauses;
    let mut over = false;
    for cr in &compiled {
        let atoms: Vec<QAtom> = cr
            .body
            .iter()
            .map(|(r, args)| QAtom {
                rel: if idb.contains(r) {
                    &g.possible[r]
                } else {
                    db.rels.get(r).unwrap_or(empty_rel())
                },
                args: args.clone(),
            })
            .collect();
        let m = Matcher {
            atoms,
            domain: &db.domain,
            domain_set: &db.domain_set,
            admissible: None,
        };
        let mut binding = vec![None; cr.nvars];
        let mut out: Vec<Vec<Lit>> = Vec::new();
        let idb_ids = &mut g.idb_ids;
        let atom_ids = &mut g.atom_ids;
        let total = g.clauses.len() as u64;
        let mut lit_of = |r: &str, t: Vec<u32>| -> u32 {
            let rid = idb_ids.intern(r);
            *atom_ids.entry((rid, t)).or_insert_with(|| {
                next_var += 1;
                next_var - 1
            })
        };
        m.run(&mut binding, &mut |b| {
            let mut c = Vec::with_capacity(cr.body.len() + cr.head.len());
            for (r, args) in &cr.body {
                if idb.contains(r) {
                    let t: Vec<u32> = args.iter().map(|x| resolve(x, b)).collect();
                    c.push(Lit::neg(lit_of(r, t)));
                }
            }
            for (r, args) in &cr.head {
                let t: Vec<u32> = args.iter().map(|x| resolve(x, b)).collect();
                c.push(Lit::pos(lit_of(r, t)));
            }
            out.push(c);
            if total + out.len() as u64 > limit {
                over = true;
                return false;
            }
            true
        });
        if over {
            return Err(Error::limit(
                "grounding",
                "ground clauses",
                total + out.len() as u64,
                limit,
            ));
        }
        g.clauses.extend(out);
    }
    Ok(g)
}

/// Certain answers of `p` on a structure: tuples over the structure's
/// domain that are in the goal relation of every model extending it.
pub fn ddlog_answers_on(
    p: &Program,
    s: &Structure,
    opts: &EvalOptions,
) -> Result<BTreeSet<Vec<String>>> {
    let mut db = Db::new(s);
    let g = ground(p, &mut db, opts)?;
    let mut solver = Solver::new();
    for c in &g.clauses {
        solver.add_clause(c);
    }
    let answer_dom: Vec<u32> = s.domain.iter().map(|d| db.consts.get(d).unwrap()).collect();
    let mut answers = BTreeSet::new();
    let name =
        |t: &[u32]| -> Vec<String> { t.iter().map(|&c| db.consts.name(c).to_string()).collect() };
    if !solver.solve(&[]) {
        // no model extends the structure: every tuple is certain
        let mut idx = vec![0usize; p.arity];
        if p.arity == 0 || !answer_dom.is_empty() {
            loop {
                let t: Vec<u32> = idx.iter().map(|&i| answer_dom[i]).collect();
                answers.insert(name(&t));
                if !advance(&mut idx, answer_dom.len()) {
                    break;
                }
            }
        }
        return Ok(answers);
    }
    let Some(goal_id) = g.idb_ids.get(&p.goal) else {
        return Ok(answers);
    };
    let dom_set: HashSet<u32> = answer_dom.iter().copied().collect();
    let mut cands: Vec<(Vec<u32>, u32)> = g
        .atom_ids
        .iter()
        .filter(|((r, t), _)| *r == goal_id && t.iter().all(|c| dom_set.contains(c)))
        .map(|((_, t), &v)| (t.clone(), v))
        .collect();
    cands.sort();
    let mut refuted: HashSet<u32> = cands
        .iter()
        .filter(|(_, v)| !solver.model_value(*v))
        .map(|(_, v)| *v)
        .collect();
    for (t, v) in &cands {
        if refuted.contains(v) {
            continue;
        }
        if solver.solve(&[Lit::neg(*v)]) {
            for (_, w) in &cands {
                if !solver.model_value(*w) {
                    refuted.insert(*w);
                }
            }
        } else {
            answers.insert(name(t));
        }
    }
    Ok(answers)
}

pub fn ddlog_answers(p: &Program, i: &Instance) -> Result<BTreeSet<Vec<String>>> {
    ddlog_answers_on(p, &Structure::of(i), &EvalOptions::default())
}

/// For Boolean programs: whether `goal()` is a certain answer.
pub fn ddlog_holds(p: &Program, i: &Instance) -> Result<bool> {
    Ok(!ddlog_answers(p, i)?.is_empty())
}

pub fn ddlog_holds_on(p: &Program, s: &Structure, opts: &EvalOptions) -> Result<bool> {
    Ok(!ddlog_answers_on(p, s, opts)?.is_empty())
}

/// A map between active domains preserving every fact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    pub mapping: BTreeMap<String, String>,
}

impl Homomorphism {
    pub fn is_valid(&self, from: &Instance, to: &Instance) -> bool {
        from.facts().all(|f| {
            let img = Fact::new(
                f.rel.clone(),
                f.args
                    .iter()
                    .map(|a| self.mapping.get(a).cloned().unwrap_or_default()),
            );
            to.contains(&img)
        })
    }
}

/// Some homomorphism from `from` to `to`, if there is one.
pub fn find_hom(from: &Instance, to: &Instance) -> Option<Homomorphism> {
    for f in from.facts().filter(|f| f.args.is_empty()) {
        if !to.contains(f) {
            return None;
        }
    }
    let target = Structure::of(to);
    let mut db = Db::new(&target);
    let mut vars: BTreeMap<String, usize> = BTreeMap::new();
    let compiled: Vec<(String, Vec<QTerm>)> = from
        .facts()
        .filter(|f| !f.args.is_empty())
        .map(|f| {
            let args = f
                .args
                .iter()
                .map(|a| db.qterm(&Term::Var(a.clone()), &mut vars))
                .collect();
            (f.rel.clone(), args)
        })
        .collect();
    // relational profile: (relation, position) pairs an element occurs at
    let mut src_prof: Vec<BTreeSet<(String, usize)>> = vec![BTreeSet::new(); vars.len()];
    for (r, args) in &compiled {
        for (p, t) in args.iter().enumerate() {
            if let QTerm::Var(v) = t {
                src_prof[*v].insert((r.clone(), p));
            }
        }
    }
    let mut tgt_prof: HashMap<u32, BTreeSet<(String, usize)>> = HashMap::new();
    for f in to.facts() {
        for (p, a) in f.args.iter().enumerate() {
            let id = db.consts.get(a).unwrap();
            tgt_prof.entry(id).or_default().insert((f.rel.clone(), p));
        }
    }
    let adm = |v: usize, x: u32| {
        tgt_prof
            .get(&x)
            .map_or(src_prof[v].is_empty(), |tp| src_prof[v].is_subset(tp))
    };
    let atoms: Vec<QAtom> = compiled
        .iter()
        .map(|(r, args)| QAtom {
            rel: db.rels.get(r).unwrap_or(empty_rel()),
            args: args.clone(),
        })
        .collect();
    let m = Matcher {
        atoms,
        domain: &db.domain,
        domain_set: &db.domain_set,
        admissible: Some(&adm),
    };
    let mut binding = vec![None; vars.len()];
    let mut found = None;
    m.run(&mut binding, &mut |b| {
        found = Some(b.to_vec());
        false
    });
    let b = found?;
    Some(Homomorphism {
        mapping: vars
            .iter()
            .map(|(name, &i)| (name.clone(), db.consts.name(b[i].unwrap()).to_string()))
            .collect(),
    })
}

/// Length of the shortest cycle; `None` stands for infinite girth.
///
/// A cycle is a sequence of distinct facts, each entered and left at two
/// different argument positions, where the element left from one fact is
/// the element entered in the next. A fact with a repeated element is a
/// cycle of length one.
pub fn girth(i: &Instance) -> Option<usize> {
    let facts: Vec<&Fact> = i.facts().filter(|f| f.args.len() >= 2).collect();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    for f in &facts {
        for a in &f.args {
            let n = ids.len();
            ids.entry(a.as_str()).or_insert(n);
        }
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ids.len()];
    for (fi, f) in facts.iter().enumerate() {
        for (p, a) in f.args.iter().enumerate() {
            for (q, b) in f.args.iter().enumerate() {
                if p != q && a != b {
                    adj[ids[a.as_str()]].push((fi, ids[b.as_str()]));
                }
            }
        }
    }
    let mut best: Option<usize> = None;
    for f in &facts {
        let mut seen = BTreeSet::new();
        for a in &f.args {
            if !seen.insert(a) {
                return Some(1);
            }
        }
    }
    for (fi, f) in facts.iter().enumerate() {
        for p in 0..f.args.len() {
            for q in p + 1..f.args.len() {
                let s = ids[f.args[q].as_str()];
                let t = ids[f.args[p].as_str()];
                let limit = best.map_or(usize::MAX, |b| b - 1);
                if let Some(d) = bfs(&adj, s, t, fi, limit) {
                    let len = d + 1;
                    if best.is_none_or(|b| len < b) {
                        best = Some(len);
                    }
                }
            }
        }
        if best == Some(2) {
            break;
        }
    }
    best
}

/// Fewest facts on a path from `s` to `t` avoiding fact `skip`.
fn bfs(
    adj: &[Vec<(usize, usize)>],
    s: usize,
    t: usize,
    skip: usize,
    limit: usize,
) -> Option<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            return Some(dist[u]);
        }
        if dist[u] >= limit {
            continue;
        }
        for &(f, v) in &adj[u] {
            if f != skip && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    None
}

/// True when the girth exceeds `k`; infinite girth exceeds everything.
pub fn girth_exceeds(i: &Instance, k: usize) -> bool {
    k == 0 || girth(i).is_none_or(|g| g > k)
}

/// Girth bound meaning "trees only".
pub const GIRTH_INFINITE: usize = usize::MAX;

/// Largest domain [`enum_instances`] accepts.
pub const ENUM_MAX_DOMAIN: usize = 4;

const ENUM_MAX_NODES: u64 = 50_000_000;

/// All instances over the schema with domain `c1..cn`, `n <= max_domain`,
/// girth above `min_girth_exclusive`, one representative per isomorphism
/// class. Order is deterministic.
pub fn enum_instances(
    schema: &Schema,
    max_domain: usize,
    min_girth_exclusive: usize,
) -> Result<Vec<Instance>> {
    enum_instances_where(schema, max_domain, min_girth_exclusive, &|_| true)
}

/// Like [`enum_instances`], additionally requiring `keep`, which must be
/// closed under taking subsets (it is used to prune the search).
pub fn enum_instances_where(
    schema: &Schema,
    max_domain: usize,
    min_girth_exclusive: usize,
    keep: &dyn Fn(&Instance) -> bool,
) -> Result<Vec<Instance>> {
    if max_domain > ENUM_MAX_DOMAIN {
        return Err(Error::limit(
            "enum_instances",
            "domain size",
            max_domain as u64,
            ENUM_MAX_DOMAIN as u64,
        ));
    }
    let rels: Vec<(&str, usize)> = schema.iter().collect();
    let mut out = Vec::new();
    let mut nodes = 0u64;
    for n in 0..=max_domain {
        let consts: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
        let mut cands: Vec<(usize, Vec<usize>)> = Vec::new();
        for (ri, &(_, arity)) in rels.iter().enumerate() {
            let mut idx = vec![0usize; arity];
            if arity > 0 && n == 0 {
                continue;
            }
            loop {
                cands.push((ri, idx.clone()));
                if !advance(&mut idx, n) {
                    break;
                }
            }
        }
        let perms = permutations(n);
        let mut seen: BTreeSet<Vec<(usize, Vec<usize>)>> = BTreeSet::new();
        let mut chosen: Vec<usize> = Vec::new();
        let mut ctx = EnumCtx {
            rels: &rels,
            schema,
            consts: &consts,
            cands: &cands,
            perms: &perms,
            girth_k: min_girth_exclusive,
            keep,
            seen: &mut seen,
            out: &mut out,
            nodes: &mut nodes,
            n,
        };
        ctx.rec(0, &mut chosen)?;
    }
    Ok(out)
}

struct EnumCtx<'a> {
    rels: &'a [(&'a str, usize)],
    schema: &'a Schema,
    consts: &'a [String],
    cands: &'a [(usize, Vec<usize>)],
    perms: &'a [Vec<usize>],
    girth_k: usize,
    keep: &'a dyn Fn(&Instance) -> bool,
    seen: &'a mut BTreeSet<Vec<(usize, Vec<usize>)>>,
    out: &'a mut Vec<Instance>,
    nodes: &'a mut u64,
    n: usize,
}

impl EnumCtx<'_> {
    fn build(&self, chosen: &[usize]) -> Instance {
        let mut i = Instance::new(self.schema.clone());
        for &c in chosen {
            let (ri, args) = &self.cands[c];
            i.insert(Fact::new(
                self.rels[*ri].0,
                args.iter().map(|&a| self.consts[a].clone()),
            ))
            .expect("facts follow the schema");
        }
        i
    }

    fn rec(&mut self, k: usize, chosen: &mut Vec<usize>) -> Result<()> {
        *self.nodes += 1;
        if *self.nodes > ENUM_MAX_NODES {
            return Err(Error::limit(
                "enum_instances",
                "search nodes",
                *self.nodes,
                ENUM_MAX_NODES,
            ));
        }
        if k == self.cands.len() {
            let mut used = vec![false; self.n];
            for &c in chosen.iter() {
                for &a in &self.cands[c].1 {
                    used[a] = true;
                }
            }
            if used.iter().any(|u| !u) {
                return Ok(());
            }
            let key = self
                .perms
                .iter()
                .map(|p| {
                    let mut v: Vec<(usize, Vec<usize>)> = chosen
                        .iter()
                        .map(|&c| {
                            let (ri, args) = &self.cands[c];
                            (*ri, args.iter().map(|&a| p[a]).collect())
                        })
                        .collect();
                    v.sort();
                    v
                })
                .min()
                .unwrap_or_default();
            if self.seen.insert(key) {
                self.out.push(self.build(chosen));
            }
            return Ok(());
        }
        self.rec(k + 1, chosen)?;
        chosen.push(k);
        let inst = self.build(chosen);
        if girth_exceeds(&inst, self.girth_k) && (self.keep)(&inst) {
            self.rec(k + 1, chosen)?;
        }
        chosen.pop();
        Ok(())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::{parse_instance, parse_program};

    fn inst(s: &str) -> Instance {
        parse_instance(s).unwrap()
    }

    fn tuple(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cq_examples() {
        let q = Cq {
            answer: vec!["X".into()],
            body: vec![Atom::vars("r", &["X", "Y"])],
        };
        let got = eval_cq(&q, &inst("r(a,b)."));
        assert_eq!(got, BTreeSet::from([tuple(&["a"])]));
        let b = Cq::boolean(vec![
            Atom::vars("r", &["X", "Y"]),
            Atom::vars("r", &["Y", "X"]),
        ]);
        assert!(!cq_holds(&b, &inst("r(a,b).")));
        assert!(cq_holds(&b, &inst("r(a,b). r(b,a).")));
        let u = Ucq {
            disjuncts: vec![
                Cq::boolean(vec![Atom::vars("A", &["X"])]),
                Cq::boolean(vec![Atom::vars("B", &["X"])]),
            ],
        };
        assert!(ucq_holds(&u, &inst("B(c).")));
    }

    fn example1() -> (Program, Program) {
        let p1 = parse_program(
            "A1(X) | A2(X) :- A(X).\n\
             goal(X) :- A1(X), r(X,Y), A1(Y).\n\
             goal(X) :- A2(X), r(X,Y), A2(Y).\n\
             @edb B/1.",
        )
        .unwrap();
        let p2 = parse_program("goal(X) :- B(X).\n@edb A/1, r/2.").unwrap();
        (p1, p2)
    }

    #[test]
    fn example_one_answers() {
        let (p1, p2) = example1();
        let i = inst("r(a,a). A(a).");
        assert_eq!(
            ddlog_answers(&p1, &i).unwrap(),
            BTreeSet::from([tuple(&["a"])])
        );
        assert!(ddlog_answers(&p2, &i).unwrap().is_empty());
    }

    #[test]
    fn empty_instance_has_no_answers() {
        let (p1, _) = example1();
        assert!(ddlog_answers(&p1, &Instance::default()).unwrap().is_empty());
        let b = parse_program("goal() :- r(X,Y).").unwrap();
        assert!(!ddlog_holds(&b, &Instance::default()).unwrap());
    }

    #[test]
    fn inconsistent_instance_makes_everything_certain() {
        let p = parse_program("goal(X) :- B(X).\nfalse :- A(X).").unwrap();
        let got = ddlog_answers(&p, &inst("A(a). r(a,b).")).unwrap();
        assert_eq!(got, BTreeSet::from([tuple(&["a"]), tuple(&["b"])]));
    }

    #[test]
    fn clause_budget_is_enforced() {
        let p = parse_program("goal() :- r(X,Y), r(Y,Z).").unwrap();
        let i = inst("r(a,b). r(b,c). r(c,a).");
        let e = ddlog_answers_on(
            &p,
            &Structure::of(&i),
            &EvalOptions {
                max_ground_clauses: 2,
            },
        );
        assert!(matches!(e, Err(Error::Limit { .. })));
    }

    #[test]
    fn girth_examples() {
        assert_eq!(girth(&inst("r(a,a).")), Some(1));
        assert_eq!(girth(&inst("r(a,b). r(b,a).")), Some(2));
        assert_eq!(girth(&inst("r(a,b). r(a,c).")), None);
        assert_eq!(girth(&inst("r(a,b). s(a,b).")), Some(2));
        assert_eq!(girth(&inst("r(a,b). r(b,c). r(c,a).")), Some(3));
        assert_eq!(girth(&inst("A(a). B(a). P().")), None);
        assert_eq!(girth(&inst("t(a,b,c). r(c,d). r(d,a).")), Some(3));
    }

    #[test]
    fn hom_examples() {
        let h = find_hom(&inst("r(a,b)."), &inst("r(c,c).")).unwrap();
        assert_eq!(h.mapping["a"], "c");
        assert_eq!(h.mapping["b"], "c");
        assert!(find_hom(&inst("r(a,a)."), &inst("r(c,d).")).is_none());
        assert!(find_hom(&inst("P()."), &inst("r(c,d).")).is_none());
        let tri = inst("r(a,b). r(b,c). r(c,a).");
        let k3 = inst("r(x,y). r(y,x). r(x,z). r(z,x). r(y,z). r(z,y).");
        let h = find_hom(&tri, &k3).unwrap();
        assert!(h.is_valid(&tri, &k3));
    }

    #[test]
    fn enumeration_examples() {
        let a = Schema::from_pairs([("A", 1)]).unwrap();
        let got = enum_instances(&a, 1, 0).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got[0].is_empty());
        let r = Schema::from_pairs([("r", 2)]).unwrap();
        let got = enum_instances(&r, 1, 0).unwrap();
        assert_eq!(got.len(), 2);
        let got = enum_instances(&r, 2, 1).unwrap();
        assert!(got
            .iter()
            .all(|i| i.facts().all(|f| f.args[0] != f.args[1])));
        // up to isomorphism, {r} over exactly two elements without loops:
        // one edge, two opposite edges
        assert_eq!(got.iter().filter(|i| i.adom().len() == 2).count(), 2);
    }

    #[test]
    fn enumeration_counts_digraphs() {
        // unlabelled digraphs with loops allowed: 1, 2, 10 on 0, 1, 2 vertices
        // (counting graphs on exactly n vertices without isolated ones: 1, 1, 8)
        let r = Schema::from_pairs([("r", 2)]).unwrap();
        let got = enum_instances(&r, 2, 0).unwrap();
        assert_eq!(got.len(), 1 + 1 + 8);
    }
}
