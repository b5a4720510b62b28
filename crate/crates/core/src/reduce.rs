//! From containment of simple programs to emptiness relative to
//! disjointness constraints.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ir::{is_simple, Atom, DisjointnessSet, Program, Rule, Schema, Term};

/// Prefix marking the complement of an IDB relation of the right-hand program.
pub const NEG_PREFIX: &str = "neg$";

/// Prefix given to the IDB relations of the right-hand program when they
/// collide with those of the left-hand one.
pub const RENAME_PREFIX: &str = "p2$";

/// Most annotated rules generated before giving up.
pub const MAX_ANNOTATIONS: u64 = 1 << 20;

pub fn negated(rel: &str) -> String {
    format!("{NEG_PREFIX}{rel}")
}

/// The extended EDB schema: original EDB relations, the IDB relations of
/// the right-hand program and their complements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSchema {
    pub base: Schema,
    pub idb2: Schema,
    pub idb2_mirror: BTreeMap<String, String>,
}

impl AnnotatedSchema {
    pub fn new(base: Schema, idb2: Schema) -> Result<Self> {
        let idb2_mirror: BTreeMap<String, String> =
            idb2.names().map(|n| (n.to_string(), negated(n))).collect();
        for n in idb2_mirror.values() {
            if base.contains(n) || idb2.contains(n) {
                return Err(Error::invalid(format!("relation name {n} is reserved")));
            }
        }
        Ok(AnnotatedSchema {
            base,
            idb2,
            idb2_mirror,
        })
    }

    pub fn schema(&self) -> Schema {
        let mut s = self
            .base
            .merge(&self.idb2)
            .expect("disjoint by construction");
        for (p, n) in &self.idb2_mirror {
            s.insert(n.clone(), self.idb2.arity(p).unwrap())
                .expect("fresh names");
        }
        s
    }

    pub fn disjointness(&self) -> DisjointnessSet {
        let rules = self
            .idb2
            .iter()
            .map(|(p, k)| {
                let args: Vec<Term> = (0..k).map(|_| Term::var("X")).collect();
                Rule::new(
                    Vec::new(),
                    vec![
                        Atom::new(p, args.clone()),
                        Atom::new(self.idb2_mirror[p].clone(), args),
                    ],
                )
            })
            .collect();
        DisjointnessSet::new(rules).expect("well-formed constraints")
    }
}

/// Renames the IDB relations of `p2` when they collide with those of `p1`.
pub fn separate_idbs(p1: &Program, p2: &Program) -> Program {
    let i1 = p1.idb();
    let i2 = p2.idb();
    if i1.is_disjoint(&i2) {
        return p2.clone();
    }
    let taken: BTreeSet<&str> = p1.schema.names().chain(p2.schema.names()).collect();
    let rename: BTreeMap<String, String> = i2
        .iter()
        .map(|n| {
            let mut m = format!("{RENAME_PREFIX}{n}");
            while taken.contains(m.as_str()) {
                m.insert_str(0, RENAME_PREFIX);
            }
            (n.clone(), m)
        })
        .collect();
    let re = |a: &Atom| Atom::new(rename.get(&a.rel).unwrap_or(&a.rel).clone(), a.args.clone());
    let mut schema = Schema::new();
    for (n, k) in p2.schema.iter() {
        schema
            .insert(rename.get(n).map_or(n, String::as_str), k)
            .expect("renaming is injective");
    }
    Program {
        schema,
        rules: p2
            .rules
            .iter()
            .map(|r| {
                Rule::new(
                    r.head.iter().map(re).collect(),
                    r.body.iter().map(re).collect(),
                )
            })
            .collect(),
        goal: rename[&p2.goal].clone(),
        arity: p2.arity,
    }
}

/// Number of annotated rules [`to_emptiness`] generates before removal.
pub fn annotation_count(p1: &Program, p2: &Program) -> u64 {
    let p2 = separate_idbs(p1, p2);
    let idb2 = p2.idb_schema();
    let unary = idb2.iter().filter(|(_, k)| *k == 1).count() as u64;
    let nullary = idb2
        .iter()
        .filter(|(n, k)| *k == 0 && *n != p2.goal)
        .count() as u64;
    p1.rules
        .iter()
        .map(|r| {
            let slots = unary * r.vars().len() as u64 + nullary;
            1u64.checked_shl(slots as u32)
                .filter(|_| slots < 63)
                .unwrap_or(u64::MAX)
        })
        .fold(0u64, u64::saturating_add)
}

/// Builds a program that is empty relative to the returned disjointness
/// constraints exactly when `p1` is contained in `p2`.
pub fn to_emptiness(p1: &Program, p2: &Program) -> Result<(Program, DisjointnessSet)> {
    if !is_simple(p1) || !is_simple(p2) {
        return Err(Error::invalid(
            "reduction to emptiness expects simple programs",
        ));
    }
    if !p1.is_boolean() || !p2.is_boolean() {
        return Err(Error::invalid(
            "reduction to emptiness expects Boolean programs",
        ));
    }
    let p2 = separate_idbs(p1, p2);
    let edb = p1.edb_schema().merge(&p2.edb_schema())?;
    let ann = AnnotatedSchema::new(edb, p2.idb_schema())?;
    let unary: Vec<&str> = ann
        .idb2
        .iter()
        .filter(|(_, k)| *k == 1)
        .map(|(n, _)| n)
        .collect();
    let nullary: Vec<&str> = ann
        .idb2
        .iter()
        .filter(|(n, k)| *k == 0 && *n != p2.goal)
        .map(|(n, _)| n)
        .collect();

    let mut rules = Vec::new();
    let mut generated: u64 = 0;
    for r in &p1.rules {
        let vars: Vec<String> = r.vars().into_iter().collect();
        let mut slots: Vec<(&str, Vec<Term>)> = Vec::new();
        for x in &vars {
            for p in &unary {
                slots.push((p, vec![Term::var(x.clone())]));
            }
        }
        for p in &nullary {
            slots.push((p, Vec::new()));
        }
        let count = 1u64.checked_shl(slots.len() as u32).unwrap_or(u64::MAX);
        generated = generated.saturating_add(count);
        if slots.len() >= 63 || generated > MAX_ANNOTATIONS {
            return Err(Error::limit(
                "reduce",
                "annotated rules",
                generated,
                MAX_ANNOTATIONS,
            ));
        }
        for mask in 0..count {
            let mut body = r.body.clone();
            for (i, (p, args)) in slots.iter().enumerate() {
                let rel = if mask >> i & 1 == 1 {
                    negated(p)
                } else {
                    p.to_string()
                };
                body.push(Atom::new(rel, args.clone()));
            }
            body.push(Atom::nullary(negated(&p2.goal)));
            let annotated = Rule::new(r.head.clone(), body);
            if !p2.rules.iter().any(|r2| refuted_by(r2, &annotated)) {
                rules.push(annotated);
            }
        }
    }
    prune_undefined(&mut rules, &p1.idb());
    let schema = ann.schema().merge(&p1.idb_schema())?;
    let mut p = Program::new(rules, p1.goal.clone(), 0, &schema)?;
    p.normalize();
    Ok((p, ann.disjointness()))
}

/// Drops rules whose body uses an IDB relation of `idb` that no remaining
/// rule derives; such rules never fire.
fn prune_undefined(rules: &mut Vec<Rule>, idb: &BTreeSet<String>) {
    loop {
        let derived: BTreeSet<&str> = rules
            .iter()
            .flat_map(|r| r.head.iter().map(|a| a.rel.as_str()))
            .collect();
        let dead: Vec<bool> = rules
            .iter()
            .map(|r| {
                r.body
                    .iter()
                    .any(|a| idb.contains(&a.rel) && !derived.contains(a.rel.as_str()))
            })
            .collect();
        if !dead.contains(&true) {
            return;
        }
        let mut it = dead.into_iter();
        rules.retain(|_| !it.next().unwrap());
    }
}

/// Whether some substitution maps the body of `r2` into the body of
/// `annotated` with every head disjunct of `r2` negated there.
fn refuted_by(r2: &Rule, annotated: &Rule) -> bool {
    let body: BTreeSet<&Atom> = annotated.body.iter().collect();
    let mut goals: Vec<Atom> = r2.body.clone();
    goals.extend(
        r2.head
            .iter()
            .map(|h| Atom::new(negated(&h.rel), h.args.clone())),
    );
    embeds(&goals, 0, &mut BTreeMap::new(), &body)
}

fn embeds(
    goals: &[Atom],
    k: usize,
    sigma: &mut BTreeMap<String, String>,
    target: &BTreeSet<&Atom>,
) -> bool {
    if k == goals.len() {
        return true;
    }
    let g = &goals[k];
    for t in target
        .iter()
        .filter(|t| t.rel == g.rel && t.arity() == g.arity())
    {
        let mut added = Vec::new();
        let mut ok = true;
        for (s, u) in g.args.iter().zip(t.args.iter()) {
            match (s, u) {
                (Term::Var(x), Term::Var(y)) => match sigma.get(x) {
                    Some(z) if z != y => ok = false,
                    Some(_) => {}
                    None => {
                        sigma.insert(x.clone(), y.clone());
                        added.push(x.clone());
                    }
                },
                (Term::Const(c), Term::Const(d)) if c == d => {}
                _ => ok = false,
            }
            if !ok {
                break;
            }
        }
        if ok && embeds(goals, k + 1, sigma, target) {
            return true;
        }
        for x in added {
            sigma.remove(&x);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{canonical_rule, is_semi_simple};
    use crate::textio::parse_program;

    fn keys(p: &Program) -> BTreeSet<String> {
        p.rules.iter().map(canonical_rule).collect()
    }

    #[test]
    fn single_rule_survives() {
        let p1 = parse_program("@goal goal1.\ngoal1() :- E(X).\n@edb B/1.").unwrap();
        let p2 = parse_program("@goal goal2.\ngoal2() :- B(X).\n@edb E/1.").unwrap();
        let (p, d) = to_emptiness(&p1, &p2).unwrap();
        let expected = parse_program("@goal goal1.\ngoal1() :- E(X), neg$goal2().").unwrap();
        assert_eq!(keys(&p), keys(&expected));
        assert_eq!(d.rules.len(), 1);
        assert_eq!(d.rules[0].to_string(), "false :- goal2(), neg$goal2().");
        assert!(is_semi_simple(&p, &d));
    }

    #[test]
    fn identical_rule_is_removed() {
        let p1 = parse_program("@goal goal1.\ngoal1() :- B(X).").unwrap();
        let p2 = parse_program("@goal goal2.\ngoal2() :- B(X).").unwrap();
        let (p, _) = to_emptiness(&p1, &p2).unwrap();
        assert!(p.rules.is_empty());
    }

    #[test]
    fn unary_annotations() {
        let p1 = parse_program("@goal goal1.\ngoal1() :- A(X).").unwrap();
        let p2 = parse_program(
            "@goal goal2.\n\
             P(X) :- B(X).\n\
             goal2() :- P(X), C(X).\n@edb A/1.",
        )
        .unwrap();
        let (p, d) = to_emptiness(&p1, &p2).unwrap();
        assert_eq!(p.rules.len(), 2);
        assert_eq!(d.rules.len(), 2);
        assert!(is_semi_simple(&p, &d));
    }

    #[test]
    fn removal_needs_negated_heads() {
        let p1 = parse_program("@goal goal1.\ngoal1() :- A(X).").unwrap();
        let p2 = parse_program("@goal goal2.\nP(X) :- A(X).\ngoal2() :- P(X), B(X).").unwrap();
        let (p, _) = to_emptiness(&p1, &p2).unwrap();
        // only annotations with P(X) survive: neg$P(X) contradicts P(X) :- A(X)
        assert_eq!(p.rules.len(), 1);
        assert!(p.rules[0].body.contains(&Atom::vars("P", &["X"])));
    }

    #[test]
    fn colliding_idbs_are_renamed() {
        let p1 = parse_program("goal() :- A(X).").unwrap();
        let p2 = parse_program("goal() :- B(X).\n@edb A/1.").unwrap();
        let (p, d) = to_emptiness(&p1, &p2).unwrap();
        assert!(p.schema.contains("p2$goal") && p.schema.contains("neg$p2$goal"));
        assert_eq!(p.goal, "goal");
        assert!(d.relations().contains("p2$goal"));
    }

    #[test]
    fn rules_over_underived_idbs_are_dropped() {
        let p1 =
            parse_program("@goal goal1.\nQ() :- B(X).\ngoal1() :- A(X), Q().\ngoal1() :- C(X).")
                .unwrap();
        let p2 = parse_program("@goal goal2.\ngoal2() :- B(X).\n@edb A/1, C/1.").unwrap();
        let (p, d) = to_emptiness(&p1, &p2).unwrap();
        assert_eq!(p.rules.len(), 1);
        assert!(p.rules[0].body.iter().any(|a| a.rel == "C"));
        assert!(is_semi_simple(&p, &d));
    }

    #[test]
    fn rejects_non_simple() {
        let p1 = parse_program("goal() :- r(X,Y), r(Y,Z).").unwrap();
        assert!(to_emptiness(&p1, &p1).is_err());
    }
}
