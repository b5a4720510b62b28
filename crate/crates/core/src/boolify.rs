//! From programs of any arity with constants to Boolean constant-free
//! programs: answer variables are fixed to constants, then constants are
//! replaced by marker relations `cst$a`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ir::{Atom, Fact, Instance, Program, Rule, Schema, Term};

pub const FRESH_PREFIX: &str = "fresh$";
pub const CONSTANT_PREFIX: &str = "cst$";

/// IDB relation holding the active domain, used when an answer constant
/// does not occur in the body.
pub const DOMAIN_REL: &str = "adom$";

/// Most rules a single rule may expand into during constant elimination.
pub const MAX_EXPANSIONS: u64 = 1_000_000;

/// Most branches generated when answer variables are fixed.
pub const MAX_BRANCHES: u64 = 1_000_000;

/// Constants fixed for the answer variables of one branch.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConstantTuple {
    pub constants: Vec<String>,
}

pub fn marker(constant: &str) -> String {
    format!("{CONSTANT_PREFIX}{constant}")
}

/// Program constants of both programs plus `fresh$1..fresh$k`, sorted.
pub fn answer_constants(p1: &Program, p2: &Program) -> Vec<String> {
    let mut c: BTreeSet<String> = p1.constants();
    c.extend(p2.constants());
    for i in 1..=p1.arity {
        c.insert(format!("{FRESH_PREFIX}{i}"));
    }
    c.into_iter().collect()
}

/// All tuples over `constants` of length `k`, in lexicographic order.
pub fn constant_tuples(
    constants: &[String],
    k: usize,
) -> Result<impl Iterator<Item = ConstantTuple> + '_> {
    let total = (constants.len() as u64)
        .checked_pow(k as u32)
        .unwrap_or(u64::MAX);
    if total > MAX_BRANCHES {
        return Err(Error::limit(
            "strip_answer_vars",
            "branches",
            total,
            MAX_BRANCHES,
        ));
    }
    Ok((0..total).map(move |mut n| {
        let mut t = vec![String::new(); k];
        for slot in t.iter_mut().rev() {
            *slot = constants[(n % constants.len() as u64) as usize].clone();
            n /= constants.len() as u64;
        }
        ConstantTuple { constants: t }
    }))
}

/// The Boolean program deciding whether `a` is an answer of `p`.
pub fn fix_answer(p: &Program, a: &ConstantTuple) -> Result<Program> {
    if a.constants.len() != p.arity {
        return Err(Error::Arity {
            relation: p.goal.clone(),
            expected: p.arity,
            found: a.constants.len(),
        });
    }
    if p.schema.contains(DOMAIN_REL) {
        return Err(Error::invalid(format!(
            "relation name {DOMAIN_REL} is reserved"
        )));
    }
    let edb = p.edb();
    let domain_rules: Vec<Rule> = p
        .edb_schema()
        .iter()
        .flat_map(|(rel, k)| {
            (0..k).map(move |pos| {
                let args = (0..k)
                    .map(|j| {
                        Term::var(if j == pos {
                            "X".to_string()
                        } else {
                            format!("Y{j}")
                        })
                    })
                    .collect();
                Rule::new(
                    vec![Atom::vars(DOMAIN_REL, &["X"])],
                    vec![Atom::new(rel, args)],
                )
            })
        })
        .collect();
    let mut uses_domain = false;
    let mut rules = Vec::new();
    'rules: for r in &p.rules {
        let Some(head) = r.head.iter().find(|h| h.rel == p.goal) else {
            rules.push(r.clone());
            continue;
        };
        let mut sub: BTreeMap<&str, &str> = BTreeMap::new();
        for (t, c) in head.args.iter().zip(&a.constants) {
            match t {
                Term::Const(d) if d != c => continue 'rules,
                Term::Const(_) => {}
                Term::Var(x) => match sub.insert(x, c) {
                    Some(prev) if prev != c => continue 'rules,
                    _ => {}
                },
            }
        }
        let mut body: Vec<Atom> = r
            .body
            .iter()
            .map(|b| {
                b.substitute(&|t| match t {
                    Term::Var(x) => sub.get(x.as_str()).map_or(t.clone(), |c| Term::cst(*c)),
                    _ => t.clone(),
                })
            })
            .collect();
        // answers range over the active domain
        let unbound: BTreeSet<&String> = a
            .constants
            .iter()
            .filter(|c| !c.starts_with(FRESH_PREFIX))
            .filter(|c| {
                let t = Term::cst(c.as_str());
                !body
                    .iter()
                    .any(|b| edb.contains(&b.rel) && b.args.contains(&t))
            })
            .collect();
        if !unbound.is_empty() {
            if domain_rules.is_empty() {
                continue;
            }
            uses_domain = true;
            body.extend(
                unbound
                    .into_iter()
                    .map(|c| Atom::new(DOMAIN_REL, vec![Term::cst(c.as_str())])),
            );
        }
        rules.push(Rule::new(vec![Atom::nullary(p.goal.clone())], body));
    }
    if uses_domain {
        rules.extend(domain_rules);
    }
    let mut schema = p.schema.clone();
    schema.remove(&p.goal);
    Program::new(rules, p.goal.clone(), 0, &schema)
}

/// One Boolean pair per tuple of answer constants; `p1` is contained in
/// `p2` iff every pair is.
pub fn strip_answer_vars(
    p1: &Program,
    p2: &Program,
) -> Result<Vec<(ConstantTuple, Program, Program)>> {
    if p1.arity != p2.arity {
        return Err(Error::Arity {
            relation: p2.goal.clone(),
            expected: p1.arity,
            found: p2.arity,
        });
    }
    let c = answer_constants(p1, p2);
    let out = constant_tuples(&c, p1.arity)?
        .map(|a| Ok((a.clone(), fix_answer(p1, &a)?, fix_answer(p2, &a)?)))
        .collect();
    out
}

/// Replaces constants by elements marked with `cst$a`; containment is
/// preserved in both directions.
pub fn eliminate_constants(p1: &Program, p2: &Program) -> Result<(Program, Program)> {
    if !p1.is_boolean() || !p2.is_boolean() {
        return Err(Error::invalid(
            "constant elimination expects Boolean programs",
        ));
    }
    let mut constants: BTreeSet<String> = p1.constants();
    constants.extend(p2.constants());
    let constants: Vec<String> = constants.into_iter().collect();
    let mut markers = Schema::new();
    for c in &constants {
        let m = marker(c);
        if p1.schema.contains(&m) || p2.schema.contains(&m) {
            return Err(Error::invalid(format!("relation name {m} is reserved")));
        }
        markers.insert(m, 1)?;
    }
    let convert = |p: &Program| -> Result<Program> {
        let mut rules = Vec::new();
        for r in &p.rules {
            expand_rule(r, &constants, &mut rules)?;
        }
        Ok(Program {
            schema: p.schema.merge(&markers)?,
            rules,
            goal: p.goal.clone(),
            arity: 0,
        })
    };
    let q1 = convert(p1)?;
    let mut q2 = convert(p2)?;
    for (i, a) in constants.iter().enumerate() {
        for b in &constants[i + 1..] {
            q2.rules.push(Rule::new(
                vec![Atom::nullary(q2.goal.clone())],
                vec![Atom::vars(marker(a), &["X"]), Atom::vars(marker(b), &["X"])],
            ));
        }
    }
    Ok((q1, q2))
}

/// Occurrence-wise expansion of one rule over all partial maps from its
/// terms to constants (constants themselves always mapped).
fn expand_rule(r: &Rule, constants: &[String], out: &mut Vec<Rule>) -> Result<()> {
    let own_consts: Vec<String> = r.constants().into_iter().collect();
    let vars: Vec<String> = r.vars().into_iter().collect();
    if own_consts.is_empty() && constants.is_empty() {
        out.push(r.clone());
        return Ok(());
    }
    let choices = (constants.len() as u64 + 1)
        .checked_pow(vars.len() as u32)
        .unwrap_or(u64::MAX);
    if choices > MAX_EXPANSIONS {
        return Err(Error::limit(
            "eliminate_constants",
            "term maps",
            choices,
            MAX_EXPANSIONS,
        ));
    }
    let mut taken: BTreeSet<String> = vars.iter().cloned().collect();
    let mut fresh = |base: String| {
        let mut n = base;
        while taken.contains(&n) {
            n.push('\'');
        }
        taken.insert(n.clone());
        n
    };
    // occurrence variables, allocated once per term so names are stable
    let mut occ_names: BTreeMap<Term, Vec<String>> = BTreeMap::new();
    let body_count = |t: &Term| {
        r.body
            .iter()
            .flat_map(|a| &a.args)
            .filter(|u| *u == t)
            .count()
    };
    let terms: Vec<Term> = vars
        .iter()
        .map(|v| Term::var(v.clone()))
        .chain(own_consts.iter().map(|c| Term::cst(c.clone())))
        .collect();
    for (ti, t) in terms.iter().enumerate() {
        let n = body_count(t).max(1);
        let names = (1..=n)
            .map(|j| match t {
                Term::Var(_) => fresh(format!("X_{}_{j}", ti + 1)),
                Term::Const(c) => fresh(format!("C_{}_{j}", sanitize(c))),
            })
            .collect();
        occ_names.insert(t.clone(), names);
    }

    let mut produced: u64 = 0;
    let mut idx = vec![0usize; vars.len()];
    loop {
        // idx[i] == 0: variable unmapped, otherwise mapped to constants[idx[i]-1]
        let mut delta: BTreeMap<Term, &str> = BTreeMap::new();
        for (v, &k) in vars.iter().zip(&idx) {
            if k > 0 {
                delta.insert(Term::var(v.clone()), &constants[k - 1]);
            }
        }
        for c in &own_consts {
            delta.insert(Term::cst(c.clone()), c);
        }
        let mut body = Vec::new();
        let mut counters: BTreeMap<&Term, usize> = BTreeMap::new();
        for a in &r.body {
            let args = a
                .args
                .iter()
                .map(|t| {
                    if delta.contains_key(t) {
                        let k = counters.entry(t).or_insert(0);
                        *k += 1;
                        Term::var(occ_names[t][*k - 1].clone())
                    } else {
                        t.clone()
                    }
                })
                .collect();
            body.push(Atom::new(a.rel.clone(), args));
        }
        let mut guards = Vec::new();
        for (t, c) in &delta {
            let used = counters.get(t).copied().unwrap_or(0).max(1);
            for name in &occ_names[t][..used] {
                guards.push(Atom::new(marker(c), vec![Term::var(name.clone())]));
            }
        }
        body.extend(guards);
        // head occurrences of mapped terms choose among that term's variables
        let head_slots: Vec<(usize, usize, usize)> = r
            .head
            .iter()
            .enumerate()
            .flat_map(|(hi, a)| a.args.iter().enumerate().map(move |(ai, t)| (hi, ai, t)))
            .filter(|(_, _, t)| delta.contains_key(t))
            .map(|(hi, ai, t)| (hi, ai, counters.get(t).copied().unwrap_or(0).max(1)))
            .collect();
        let mut pick = vec![0usize; head_slots.len()];
        loop {
            let mut head = r.head.clone();
            for ((hi, ai, _), &k) in head_slots.iter().zip(&pick) {
                let t = &r.head[*hi].args[*ai];
                head[*hi].args[*ai] = Term::var(occ_names[t][k].clone());
            }
            out.push(Rule::new(head, body.clone()));
            produced += 1;
            if produced > MAX_EXPANSIONS {
                return Err(Error::limit(
                    "eliminate_constants",
                    "rules",
                    produced,
                    MAX_EXPANSIONS,
                ));
            }
            if !next_pick(&mut pick, &head_slots) {
                break;
            }
        }
        if !next_index(&mut idx, constants.len() + 1) {
            break;
        }
    }
    Ok(())
}

fn next_pick(pick: &mut [usize], slots: &[(usize, usize, usize)]) -> bool {
    for (p, s) in pick.iter_mut().zip(slots).rev() {
        *p += 1;
        if *p < s.2 {
            return true;
        }
        *p = 0;
    }
    false
}

fn next_index(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn sanitize(c: &str) -> String {
    c.chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                ch
            } else {
                '_'
            }
        })
        .collect()
}

/// Instance over the marked schema: the original facts plus `cst$a(a)`.
pub fn mark_constants(i: &Instance, constants: &[String]) -> Instance {
    let mut out = i.clone();
    for c in constants {
        let _ = out.insert(Fact::new(marker(c), [c.clone()]));
    }
    out
}

/// Inverse bridge: every element carrying a marker is renamed to its
/// (smallest) constant; marker facts are dropped.
pub fn quotient_constants(j: &Instance, source: &Schema) -> Instance {
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    for f in j.facts() {
        if let Some(c) = f.rel.strip_prefix(CONSTANT_PREFIX) {
            if f.args.len() == 1 {
                let e = rename
                    .entry(f.args[0].clone())
                    .or_insert_with(|| c.to_string());
                if c < e.as_str() {
                    *e = c.to_string();
                }
            }
        }
    }
    let mut out = Instance::new(source.clone());
    for f in j.facts() {
        if f.rel.starts_with(CONSTANT_PREFIX) && !source.contains(&f.rel) {
            continue;
        }
        let args: Vec<String> = f
            .args
            .iter()
            .map(|a| rename.get(a).cloned().unwrap_or_else(|| a.clone()))
            .collect();
        let _ = out.insert(Fact::new(f.rel.clone(), args));
    }
    out
}
