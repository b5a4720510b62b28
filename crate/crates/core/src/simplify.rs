//! Turning a pair of Boolean programs into simple programs: closure under
//! variable identification, splitting rule bodies into biconnected pieces,
//! and replacing the EDB part of every rule by one consolidated relation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::eval::{eval_cq, Cq};
use crate::ir::{
    canonical_cq, canonical_rule, Atom, Fact, Instance, Metrics, Program, Rule, Schema, Term,
};

/// Generator of relation names that avoid a set of taken names.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    taken: BTreeSet<String>,
    next: usize,
}

impl Fresh {
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        Fresh {
            taken: names.into_iter().map(str::to_string).collect(),
            next: 0,
        }
    }

    pub fn name(&mut self, prefix: &str) -> String {
        loop {
            self.next += 1;
            let n = format!("{prefix}{}", self.next);
            if self.taken.insert(n.clone()) {
                return n;
            }
        }
    }
}

/// Most variables in a rule for which all identifications are generated.
pub const IDENTIFICATION_MAX_VARS: usize = 8;

/// Adds every rule obtained from a rule of `p` by identifying variables.
pub fn close_under_identification(p: &Program) -> Result<Program> {
    let mut rules = Vec::new();
    for r in &p.rules {
        let vars: Vec<String> = r.vars().into_iter().collect();
        if vars.len() > IDENTIFICATION_MAX_VARS {
            return Err(Error::limit(
                "close_under_identification",
                "rule variables",
                vars.len() as u64,
                IDENTIFICATION_MAX_VARS as u64,
            ));
        }
        for blocks in set_partitions(vars.len()) {
            let mut rep: Vec<Option<usize>> = vec![None; vars.len()];
            let map: BTreeMap<String, String> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let b = blocks[i];
                    let first = *rep[b].get_or_insert(i);
                    (v.clone(), vars[first].clone())
                })
                .collect();
            rules.push(r.rename_vars(&map));
        }
    }
    let mut out = Program { rules, ..p.clone() };
    out.dedup();
    Ok(out)
}

/// Restricted growth strings: `a[i]` is the block of element `i`.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur[i] = b;
            rec(i + 1, if b == max { max + 1 } else { max }, cur, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    rec(1, 1, &mut cur, &mut out);
    out
}

pub fn biconnect(p: &Program) -> Program {
    let mut fresh = Fresh::avoiding(p.schema.names());
    biconnect_with(p, &mut fresh)
}

/// Splits rules until every body is biconnected on its EDB atoms and
/// reflexive EDB atoms occur alone.
pub fn biconnect_with(p: &Program, fresh: &mut Fresh) -> Program {
    let edb = p.edb();
    let mut queue: VecDeque<Rule> = p.rules.iter().cloned().collect();
    let mut out = Vec::new();
    let mut extra = Schema::new();
    // fragments split off identically share their link relation
    let mut links: BTreeMap<String, String> = BTreeMap::new();
    while let Some(r) = queue.pop_front() {
        match split(&r, &edb, &p.goal) {
            Some((arity, r1, r2)) => {
                let key = canonical_rule(&r1);
                let q = match links.get(&key) {
                    Some(q) => q.clone(),
                    None => {
                        let q = fresh.name("gen$q");
                        extra.insert(q.clone(), arity).expect("fresh names are new");
                        links.insert(key, q.clone());
                        queue.push_back(name_link(&r1, &q));
                        q
                    }
                };
                queue.push_back(name_link(&r2, &q));
            }
            None => out.push(r),
        }
    }
    let mut prog = Program {
        schema: p.schema.merge(&extra).expect("fresh names are new"),
        rules: out,
        goal: p.goal.clone(),
        arity: p.arity,
    };
    prog.dedup();
    prog
}

/// Placeholder for the link relation of a split; not a valid identifier.
const LINK: &str = "#link";

fn name_link(r: &Rule, q: &str) -> Rule {
    let re = |a: &Atom| {
        if a.rel == LINK {
            Atom::new(q, a.args.clone())
        } else {
            a.clone()
        }
    };
    Rule::new(
        r.head.iter().map(re).collect(),
        r.body.iter().map(re).collect(),
    )
}

struct Parts<'a> {
    /// Atoms assigned to the first fragment only.
    first: Vec<&'a Atom>,
    /// Atoms assigned to the second fragment only.
    second: Vec<&'a Atom>,
    /// Atoms copied into both fragments.
    shared: Vec<&'a Atom>,
}

/// One splitting step; returns the arity of the link relation and the two
/// rules, which use [`LINK`] for it.
fn split(r: &Rule, edb: &BTreeSet<String>, goal: &str) -> Option<(usize, Rule, Rule)> {
    let mut body: Vec<&Atom> = Vec::new();
    for a in &r.body {
        if !body.contains(&a) {
            body.push(a);
        }
    }
    let is_edb = |a: &Atom| edb.contains(&a.rel);
    let goal_vars: BTreeSet<&str> = r
        .head
        .iter()
        .filter(|a| a.rel == goal)
        .flat_map(|a| a.var_names())
        .collect();

    // (b) variable-disjoint parts
    let comps = components(&body, &is_edb, None);
    if comps.len() >= 2 {
        let pick = comps
            .iter()
            .position(|c| c.vars.iter().all(|v| !goal_vars.contains(v.as_str())))
            .unwrap_or(0);
        let first_vars = &comps[pick].vars;
        let first_nullary = &comps[pick].nullary;
        let mut parts = Parts {
            first: Vec::new(),
            second: Vec::new(),
            shared: Vec::new(),
        };
        for (i, a) in body.iter().enumerate() {
            let vars: Vec<&str> = a.var_names().collect();
            if vars.is_empty() {
                if is_edb(a) {
                    if first_nullary.contains(&i) {
                        parts.first.push(a);
                    } else {
                        parts.second.push(a);
                    }
                } else {
                    parts.shared.push(a);
                }
            } else if first_vars.contains(vars[0]) {
                parts.first.push(a);
            } else {
                parts.second.push(a);
            }
        }
        let link = Atom::nullary(LINK);
        let (r1, r2) = assemble(r, goal, parts, link, &|v| first_vars.contains(v), &|_| {
            false
        });
        return Some((0, r1, r2));
    }

    // (c) reflexive EDB atoms next to other EDB atoms
    let edb_count = body.iter().filter(|a| is_edb(a)).count();
    if edb_count >= 2 {
        if let Some(refl) = body.iter().find(|a| is_edb(a) && is_reflexive(a)) {
            let x = refl.args[0].clone();
            let r1 = Rule::new(
                vec![Atom::new(LINK, vec![x.clone()])],
                vec![(*refl).clone()],
            );
            let mut b2 = vec![Atom::new(LINK, vec![x])];
            b2.extend(body.iter().filter(|a| **a != *refl).map(|a| (*a).clone()));
            let r2 = Rule::new(r.head.clone(), b2);
            return Some((1, r1, r2));
        }
    }

    // (a) cut variables of the EDB variable graph
    let all_vars: Vec<String> = {
        let mut seen = BTreeSet::new();
        body.iter()
            .filter(|a| is_edb(a))
            .flat_map(|a| a.var_names())
            .filter(|v| seen.insert(*v))
            .map(str::to_string)
            .collect()
    };
    for x in &all_vars {
        let comps = components(&body, &is_edb, Some(x.as_str()));
        let var_comps: Vec<&Component> = comps.iter().filter(|c| !c.vars.is_empty()).collect();
        if var_comps.len() < 2 {
            continue;
        }
        let pick = var_comps
            .iter()
            .position(|c| c.vars.iter().all(|v| !goal_vars.contains(v.as_str())))
            .unwrap_or(0);
        let first_vars = &var_comps[pick].vars;
        let mut parts = Parts {
            first: Vec::new(),
            second: Vec::new(),
            shared: Vec::new(),
        };
        for a in &body {
            match a.var_names().find(|v| *v != x) {
                None => parts.shared.push(a),
                Some(v) if first_vars.contains(v) => parts.first.push(a),
                Some(_) => parts.second.push(a),
            }
        }
        let link = Atom::new(LINK, vec![Term::Var(x.clone())]);
        let (r1, r2) = assemble(r, goal, parts, link, &|v| first_vars.contains(v), &|v| {
            v == x
        });
        return Some((1, r1, r2));
    }
    None
}

fn is_reflexive(a: &Atom) -> bool {
    a.arity() >= 1 && a.args.iter().all(|t| t.is_var() && *t == a.args[0])
}

/// `p1 | link :- first, shared` and `p2 :- link, second, shared`; head atoms
/// go where their variables are, nullary and shared-variable ones to both,
/// the goal only to the second rule.
fn assemble(
    r: &Rule,
    goal: &str,
    parts: Parts,
    link: Atom,
    in_first: &dyn Fn(&str) -> bool,
    is_shared: &dyn Fn(&str) -> bool,
) -> (Rule, Rule) {
    let mut h1 = Vec::new();
    let mut h2 = Vec::new();
    for a in &r.head {
        if a.rel == goal {
            h2.push(a.clone());
            continue;
        }
        let vars: Vec<&str> = a.var_names().collect();
        if vars.iter().all(|v| is_shared(v)) {
            h1.push(a.clone());
            h2.push(a.clone());
        } else if vars.iter().any(|v| !is_shared(v) && in_first(v)) {
            h1.push(a.clone());
        } else {
            h2.push(a.clone());
        }
    }
    h1.push(link.clone());
    let mut b1: Vec<Atom> = parts.first.iter().map(|a| (*a).clone()).collect();
    b1.extend(parts.shared.iter().map(|a| (*a).clone()));
    let mut b2 = vec![link];
    b2.extend(parts.second.iter().map(|a| (*a).clone()));
    b2.extend(parts.shared.iter().map(|a| (*a).clone()));
    (Rule::new(h1, b1), Rule::new(h2, b2))
}

struct Component {
    vars: BTreeSet<String>,
    /// Indices of nullary EDB atoms forming this component.
    nullary: BTreeSet<usize>,
}

/// Connected components of the body variables (joined by EDB atoms, with
/// `removed` deleted), plus one component per nullary EDB atom. Variables
/// occurring only in IDB atoms are components of their own.
fn components(
    body: &[&Atom],
    is_edb: &dyn Fn(&Atom) -> bool,
    removed: Option<&str>,
) -> Vec<Component> {
    let mut order: Vec<String> = Vec::new();
    for a in body {
        for v in a.var_names() {
            if Some(v) != removed && !order.iter().any(|o| o == v) {
                order.push(v.to_string());
            }
        }
    }
    let idx = |v: &str| order.iter().position(|o| o == v).unwrap();
    let mut parent: Vec<usize> = (0..order.len()).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in body.iter().filter(|a| is_edb(a)) {
        let vs: Vec<usize> = a
            .var_names()
            .filter(|v| Some(*v) != removed)
            .map(idx)
            .collect();
        for w in vs.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[x] = y;
        }
    }
    let mut groups: Vec<(usize, Component)> = Vec::new();
    for i in 0..order.len() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, c)) => {
                c.vars.insert(order[i].clone());
            }
            None => groups.push((
                root,
                Component {
                    vars: BTreeSet::from([order[i].clone()]),
                    nullary: BTreeSet::new(),
                },
            )),
        }
    }
    let mut out: Vec<Component> = groups.into_iter().map(|(_, c)| c).collect();
    if removed.is_none() {
        for (i, a) in body.iter().enumerate() {
            if a.args.is_empty() && is_edb(a) {
                out.push(Component {
                    vars: BTreeSet::new(),
                    nullary: BTreeSet::from([i]),
                });
            }
        }
    }
    out
}

/// A consolidated relation and the conjunction it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Consolidated {
    pub relation: String,
    pub arity: usize,
    /// EDB atoms over the variables `V0..V{arity-1}`.
    pub cq: Vec<Atom>,
}

impl Consolidated {
    pub fn vars(&self) -> Vec<String> {
        (0..self.arity).map(|i| format!("V{i}")).collect()
    }
}

/// Canonical key of an EDB conjunction to its consolidated relation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConsolidationMap {
    pub entries: BTreeMap<String, Consolidated>,
    /// The EDB schema the conjunctions are written over.
    pub source: Schema,
}

impl ConsolidationMap {
    pub fn schema(&self) -> Schema {
        Schema::from_pairs(self.entries.values().map(|e| (e.relation.clone(), e.arity)))
            .expect("consolidated relations are distinct")
    }

    pub fn by_relation(&self, rel: &str) -> Option<&Consolidated> {
        self.entries.values().find(|e| e.relation == rel)
    }
}

fn edb_part<'a>(r: &'a Rule, edb: &BTreeSet<String>) -> (Vec<&'a Atom>, Vec<&'a Atom>) {
    let mut e: Vec<&Atom> = Vec::new();
    let mut rest = Vec::new();
    for a in &r.body {
        if edb.contains(&a.rel) {
            if !e.contains(&a) {
                e.push(a);
            }
        } else {
            rest.push(a);
        }
    }
    (e, rest)
}

pub fn consolidate(p1: &Program, p2: &Program) -> Result<(Program, Program, ConsolidationMap)> {
    let mut fresh = Fresh::avoiding(p1.schema.names().chain(p2.schema.names()));
    consolidate_with(p1, p2, &mut fresh)
}

/// Replaces the EDB part of every rule by one atom over a relation
/// standing for an EDB conjunction, adding a rule for every injective
/// homomorphism from a rule's EDB part into a stored conjunction.
pub fn consolidate_with(
    p1: &Program,
    p2: &Program,
    fresh: &mut Fresh,
) -> Result<(Program, Program, ConsolidationMap)> {
    let edb: BTreeSet<String> = p1.edb().union(&p2.edb()).cloned().collect();
    let source = p1.edb_schema().merge(&p2.edb_schema())?;
    let mut keyed: BTreeMap<String, Vec<Atom>> = BTreeMap::new();
    for r in p1.rules.iter().chain(p2.rules.iter()) {
        let (e, _) = edb_part(r, &edb);
        if e.is_empty() {
            continue;
        }
        let owned: Vec<Atom> = e.into_iter().cloned().collect();
        let c = canonical_cq(&owned)?;
        keyed.entry(c.key).or_insert(c.atoms);
    }
    let mut map = ConsolidationMap {
        entries: BTreeMap::new(),
        source,
    };
    for (key, atoms) in keyed {
        let arity = atoms
            .iter()
            .flat_map(|a| a.var_names())
            .collect::<BTreeSet<_>>()
            .len();
        map.entries.insert(
            key,
            Consolidated {
                relation: fresh.name("edb$q"),
                arity,
                cq: atoms,
            },
        );
    }
    let convert = |p: &Program| -> Result<Program> {
        let mut rules = Vec::new();
        for r in &p.rules {
            let (e, rest) = edb_part(r, &edb);
            if e.is_empty() {
                rules.push(r.clone());
                continue;
            }
            let rule_vars = r.vars();
            for entry in map.entries.values() {
                for h in injective_homs(&e, &entry.cq) {
                    let inverse: BTreeMap<&str, &str> =
                        h.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect();
                    let mut taken = rule_vars.clone();
                    let args = entry
                        .vars()
                        .iter()
                        .map(|v| match inverse.get(v.as_str()) {
                            Some(x) => Term::var(*x),
                            None => {
                                let mut n = format!("U{}", &v[1..]);
                                while taken.contains(&n) {
                                    n.push('\'');
                                }
                                taken.insert(n.clone());
                                Term::Var(n)
                            }
                        })
                        .collect();
                    let mut body = vec![Atom::new(entry.relation.clone(), args)];
                    body.extend(rest.iter().map(|a| (*a).clone()));
                    rules.push(Rule::new(r.head.clone(), body));
                }
            }
        }
        let schema = p.idb_schema().merge(&map.schema())?;
        let mut out = Program::new(rules, p.goal.clone(), p.arity, &schema)?;
        out.normalize();
        Ok(out)
    };
    let s1 = convert(p1)?;
    let s2 = convert(p2)?;
    Ok((s1, s2, map))
}

/// Injective maps from the variables of `from` to those of `to` sending
/// every atom of `from` to an atom of `to`.
fn injective_homs(from: &[&Atom], to: &[Atom]) -> Vec<BTreeMap<String, String>> {
    fn rec(
        k: usize,
        from: &[&Atom],
        to: &[Atom],
        h: &mut BTreeMap<String, String>,
        used: &mut BTreeSet<String>,
        out: &mut Vec<BTreeMap<String, String>>,
    ) {
        if k == from.len() {
            out.push(h.clone());
            return;
        }
        let a = from[k];
        for b in to
            .iter()
            .filter(|b| b.rel == a.rel && b.arity() == a.arity())
        {
            let mut added = Vec::new();
            let mut ok = true;
            for (s, t) in a.args.iter().zip(b.args.iter()) {
                match (s, t) {
                    (Term::Var(x), Term::Var(y)) => match h.get(x) {
                        Some(z) if z != y => ok = false,
                        Some(_) => {}
                        None => {
                            if used.contains(y) {
                                ok = false;
                            } else {
                                h.insert(x.clone(), y.clone());
                                used.insert(y.clone());
                                added.push(x.clone());
                            }
                        }
                    },
                    (Term::Const(c), Term::Const(d)) if c == d => {}
                    _ => ok = false,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                rec(k + 1, from, to, h, used, out);
            }
            for x in added {
                let y = h.remove(&x).unwrap();
                used.remove(&y);
            }
        }
    }
    let mut out = Vec::new();
    rec(
        0,
        from,
        to,
        &mut BTreeMap::new(),
        &mut BTreeSet::new(),
        &mut out,
    );
    out.sort();
    out.dedup();
    out
}

/// Output of [`simplify_pair`].
#[derive(Clone, Debug)]
pub struct SimplifiedPair {
    pub p1: Program,
    pub p2: Program,
    pub map: ConsolidationMap,
    /// Atom width of the input pair: the girth bound under which
    /// non-containment transfers back.
    pub w: usize,
}

/// EDB schema shared by two programs; a relation may not be IDB in one
/// program and EDB in the other.
pub fn joint_edb_schema(p1: &Program, p2: &Program) -> Result<Schema> {
    let (i1, i2) = (p1.idb(), p2.idb());
    if let Some(r) = p1
        .edb()
        .intersection(&i2)
        .chain(p2.edb().intersection(&i1))
        .next()
    {
        return Err(Error::invalid(format!(
            "relation {r} is intensional in one program and extensional in the other"
        )));
    }
    p1.edb_schema().merge(&p2.edb_schema())
}

/// Gives both programs the union of their EDB schemas.
pub fn align_schemas(p1: &Program, p2: &Program) -> Result<(Program, Program)> {
    let edb = joint_edb_schema(p1, p2)?;
    let mut a = p1.clone();
    let mut b = p2.clone();
    a.schema = a.schema.merge(&edb)?;
    b.schema = b.schema.merge(&edb)?;
    Ok((a, b))
}

/// Jointly simplifies two Boolean programs over a common EDB schema.
pub fn simplify_pair(p1: &Program, p2: &Program) -> Result<SimplifiedPair> {
    if !p1.is_boolean() || !p2.is_boolean() {
        return Err(Error::invalid("simplification expects Boolean programs"));
    }
    let (p1, p2) = align_schemas(p1, p2)?;
    let w = Metrics::of_rules(p1.rules.iter().chain(p2.rules.iter())).atom_width;
    let mut fresh = Fresh::avoiding(p1.schema.names().chain(p2.schema.names()));
    let c1 = close_under_identification(&p1).map_err(|e| e.in_stage("simplify"))?;
    let c2 = close_under_identification(&p2).map_err(|e| e.in_stage("simplify"))?;
    let b1 = biconnect_with(&c1, &mut fresh);
    let b2 = biconnect_with(&c2, &mut fresh);
    let (s1, s2, map) = consolidate_with(&b1, &b2, &mut fresh)?;
    Ok(SimplifiedPair {
        p1: s1,
        p2: s2,
        map,
        w,
    })
}

/// From an instance over the original EDB schema to one over the
/// consolidated relations: `R_q(a)` for every match `a` of `q`.
pub fn instance_to_consolidated(i: &Instance, map: &ConsolidationMap) -> Instance {
    let mut out = Instance::new(map.schema());
    for e in map.entries.values() {
        let q = Cq {
            answer: e.vars(),
            body: e.cq.clone(),
        };
        for t in eval_cq(&q, i) {
            out.insert(Fact::new(e.relation.clone(), t))
                .expect("consolidated facts follow the schema");
        }
    }
    out
}

/// From an instance over the consolidated relations back to the original
/// EDB schema, unfolding every `R_q(a)` into the atoms of `q`.
pub fn instance_from_consolidated(j: &Instance, map: &ConsolidationMap) -> Result<Instance> {
    let mut out = Instance::new(map.source.clone());
    for f in j.facts() {
        let e = map
            .by_relation(&f.rel)
            .ok_or_else(|| Error::invalid(format!("{} is not a consolidated relation", f.rel)))?;
        for a in &e.cq {
            let args = a.args.iter().map(|t| match t {
                Term::Var(v) => {
                    f.args[v[1..].parse::<usize>().expect("canonical variable")].clone()
                }
                Term::Const(c) => c.clone(),
            });
            out.insert(Fact::new(a.rel.clone(), args))?;
        }
    }
    Ok(out)
}
