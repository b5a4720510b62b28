//! MMSNP sentences: direct evaluation and the translations to and from
//! Boolean monadic disjunctive programs, which define the complement.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ir::{Atom, Instance, Program, Rule, Schema, Term};

/// `alpha_1 & ... & alpha_n -> beta_1 | ... | beta_m`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub alphas: Vec<Atom>,
    pub betas: Vec<Atom>,
}

/// `exists X.. forall x.. clause ; clause ; ...` over the relations in `schema`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmsnpSentence {
    pub so_vars: Vec<String>,
    pub fo_vars: Vec<String>,
    pub clauses: Vec<Clause>,
    pub schema: Schema,
}

impl MmsnpSentence {
    pub fn validate(&self) -> Result<()> {
        let so: BTreeSet<&str> = self.so_vars.iter().map(String::as_str).collect();
        let fo: BTreeSet<&str> = self.fo_vars.iter().map(String::as_str).collect();
        for c in &self.clauses {
            for a in c.alphas.iter().chain(c.betas.iter()) {
                for t in &a.args {
                    if !t.is_var() || !fo.contains(t.name()) {
                        return Err(Error::invalid(format!("undeclared variable {t} in {a}")));
                    }
                }
                if so.contains(a.rel.as_str()) {
                    if a.arity() != 1 {
                        return Err(Error::invalid(format!(
                            "{a}: second-order variables are unary"
                        )));
                    }
                } else if self.schema.arity(&a.rel) != Some(a.arity()) {
                    return Err(Error::invalid(format!("{a} does not match the schema")));
                }
            }
            if let Some(b) = c.betas.iter().find(|b| !so.contains(b.rel.as_str())) {
                return Err(Error::invalid(format!(
                    "{b}: only second-order variables may occur on the right"
                )));
            }
        }
        Ok(())
    }
}

/// Largest active domain accepted by [`eval_mmsnp`].
pub const MMSNP_MAX_DOMAIN: usize = 12;

/// Truth of the sentence on `i`, by backtracking over second-order
/// assignments with early clause checking.
pub fn eval_mmsnp(phi: &MmsnpSentence, i: &Instance) -> Result<bool> {
    phi.validate()?;
    let adom: Vec<String> = i.adom().into_iter().collect();
    if adom.len() > MMSNP_MAX_DOMAIN {
        return Err(Error::limit(
            "eval_mmsnp",
            "active domain",
            adom.len() as u64,
            MMSNP_MAX_DOMAIN as u64,
        ));
    }
    if adom.is_empty() && !phi.fo_vars.is_empty() {
        return Ok(true);
    }
    let so: BTreeMap<&str, usize> = phi
        .so_vars
        .iter()
        .enumerate()
        .map(|(k, v)| (v.as_str(), k))
        .collect();
    let n = adom.len();
    let slot = |x: usize, e: usize| x * n + e;
    // Ground clauses as (literals that must hold for the premise, conclusions).
    let mut ground: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for c in &phi.clauses {
        let vars: Vec<&str> = c
            .alphas
            .iter()
            .chain(c.betas.iter())
            .flat_map(|a| a.var_names())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut idx = vec![0usize; vars.len()];
        if !vars.is_empty() && n == 0 {
            continue;
        }
        loop {
            let val = |t: &Term| -> usize {
                let k = vars.iter().position(|v| *v == t.name()).unwrap();
                idx[k]
            };
            let mut premise = Vec::new();
            let mut edb_ok = true;
            for a in &c.alphas {
                if let Some(&x) = so.get(a.rel.as_str()) {
                    premise.push(slot(x, val(&a.args[0])));
                } else {
                    let f = crate::ir::Fact::new(
                        a.rel.clone(),
                        a.args.iter().map(|t| adom[val(t)].clone()),
                    );
                    if !i.contains(&f) {
                        edb_ok = false;
                        break;
                    }
                }
            }
            if edb_ok {
                let concl = c
                    .betas
                    .iter()
                    .map(|b| slot(so[b.rel.as_str()], val(&b.args[0])))
                    .collect();
                ground.push((premise, concl));
            }
            let mut carry = true;
            for d in idx.iter_mut().rev() {
                *d += 1;
                if *d < n {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
    }
    let nslots = phi.so_vars.len() * n;
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); nslots];
    for (gi, (p, c)) in ground.iter().enumerate() {
        let last = p.iter().chain(c.iter()).copied().max();
        match last {
            None => return Ok(false),
            Some(s) => watch[s].push(gi),
        }
    }
    let mut assign: Vec<bool> = vec![false; nslots];
    Ok(search(0, &mut assign, &ground, &watch))
}

/// Assigns slots in order; a ground clause is checked once its last slot is set.
fn search(
    k: usize,
    assign: &mut Vec<bool>,
    ground: &[(Vec<usize>, Vec<usize>)],
    watch: &[Vec<usize>],
) -> bool {
    if k == assign.len() {
        return true;
    }
    for v in [false, true] {
        assign[k] = v;
        let ok = watch[k].iter().all(|&gi| {
            let (p, c) = &ground[gi];
            !p.iter().all(|&s| assign[s]) || c.iter().any(|&s| assign[s])
        });
        if ok && search(k + 1, assign, ground, watch) {
            return true;
        }
    }
    false
}

/// Names of the IDB relations standing for the second-order variables.
pub fn so_relation_names(phi: &MmsnpSentence) -> BTreeMap<String, (String, String)> {
    phi.so_vars
        .iter()
        .map(|x| {
            let base = if phi.schema.contains(x) || x == "goal" {
                format!("gen${x}")
            } else {
                x.clone()
            };
            let neg = format!("neg${base}");
            (x.clone(), (base, neg))
        })
        .collect()
}

fn var_names(fo: &[String]) -> BTreeMap<String, String> {
    let upper: Vec<String> = fo
        .iter()
        .map(|v| {
            let mut cs = v.chars();
            match cs.next() {
                Some(c) if c.is_ascii_uppercase() || c == '_' => v.clone(),
                Some(c) => c.to_ascii_uppercase().to_string() + cs.as_str(),
                None => v.clone(),
            }
        })
        .collect();
    let distinct: BTreeSet<&String> = upper.iter().collect();
    if distinct.len() == upper.len() {
        fo.iter().cloned().zip(upper).collect()
    } else {
        fo.iter()
            .enumerate()
            .map(|(k, v)| (v.clone(), format!("V{k}")))
            .collect()
    }
}

/// Boolean program whose goal is certain exactly on the instances where
/// the sentence is false. Guessing rules `X(v) | neg$X(v) :- R(..v..)` are
/// emitted once per second-order variable, relation and argument position.
pub fn mmsnp_to_mddlog(phi: &MmsnpSentence) -> Result<Program> {
    mmsnp_to_mddlog_over(phi, &phi.schema)
}

/// As [`mmsnp_to_mddlog`], guessing over every relation of `schema`
/// (which must include the sentence's relations).
pub fn mmsnp_to_mddlog_over(phi: &MmsnpSentence, schema: &Schema) -> Result<Program> {
    phi.validate()?;
    let schema = schema.merge(&phi.schema)?;
    let names = so_relation_names(phi);
    for (base, neg) in names.values() {
        if schema.contains(base) || schema.contains(neg) {
            return Err(Error::invalid(format!("relation name clash on {base}")));
        }
    }
    let vmap = var_names(&phi.fo_vars);
    let mut rules = Vec::new();
    for x in &phi.so_vars {
        let (pos, neg) = &names[x];
        for (rel, arity) in schema.iter() {
            let args: Vec<Term> = (0..arity)
                .map(|k| Term::var(format!("X{}", k + 1)))
                .collect();
            for k in 0..arity {
                rules.push(Rule::new(
                    vec![
                        Atom::new(pos.clone(), vec![args[k].clone()]),
                        Atom::new(neg.clone(), vec![args[k].clone()]),
                    ],
                    vec![Atom::new(rel, args.clone())],
                ));
            }
        }
    }
    let domain_guards: Vec<Atom> = schema
        .iter()
        .filter(|(_, a)| *a > 0)
        .map(|(rel, arity)| {
            Atom::new(
                rel,
                (0..arity)
                    .map(|k| Term::var(format!("X{}", k + 1)))
                    .collect(),
            )
        })
        .collect();
    for c in &phi.clauses {
        let rename = |a: &Atom, rel: &str| {
            Atom::new(
                rel,
                a.args
                    .iter()
                    .map(|t| Term::var(vmap[t.name()].clone()))
                    .collect(),
            )
        };
        let mut body: Vec<Atom> = c
            .alphas
            .iter()
            .map(|a| match names.get(&a.rel) {
                Some((pos, _)) => rename(a, pos),
                None => rename(a, &a.rel),
            })
            .collect();
        body.extend(c.betas.iter().map(|b| rename(b, &names[&b.rel].1)));
        if body.is_empty() {
            // true -> false: false on every instance with a nonempty domain
            if phi.fo_vars.is_empty() {
                return Err(Error::invalid(
                    "the clause `true -> false` without quantified variables is not expressible",
                ));
            }
            for g in &domain_guards {
                rules.push(Rule::new(vec![Atom::nullary("goal")], vec![g.clone()]));
            }
            continue;
        }
        rules.push(Rule::new(vec![Atom::nullary("goal")], body));
    }
    Program::new(rules, "goal", 0, &schema)
}

/// Sentence that is true exactly when the Boolean program `p` does not
/// derive its goal. Nullary IDB relations `P` become second-order
/// variables `X_P`, read as "all elements" in heads and "some element" in bodies.
pub fn mddlog_to_mmsnp(p: &Program) -> Result<MmsnpSentence> {
    if !p.is_boolean() {
        return Err(Error::invalid("only Boolean programs translate to MMSNP"));
    }
    let report = crate::ir::validate_program(p);
    if !report.ok {
        return Err(Error::invalid(format!(
            "not a monadic disjunctive program: {}",
            report.violations.join("; ")
        )));
    }
    if !p.constants().is_empty() {
        return Err(Error::invalid(
            "programs with constants have no MMSNP counterpart",
        ));
    }
    let edb = p.edb_schema();
    if let Some((r, _)) = edb.iter().find(|(_, a)| *a == 0) {
        return Err(Error::invalid(format!(
            "nullary EDB relation {r} has no MMSNP counterpart"
        )));
    }
    let idb = p.idb_schema();
    let mut so_name: BTreeMap<String, String> = BTreeMap::new();
    let mut taken: BTreeSet<String> = p.schema.names().map(str::to_string).collect();
    for (rel, arity) in idb.iter() {
        if rel == p.goal {
            continue;
        }
        let name = if arity == 0 {
            let mut n = format!("X_{rel}");
            while taken.contains(&n) {
                n.push('\'');
            }
            taken.insert(n.clone());
            n
        } else {
            rel.to_string()
        };
        so_name.insert(rel.to_string(), name);
    }
    let mut fo_vars: BTreeSet<String> = BTreeSet::new();
    let mut fresh = 0usize;
    let mut clauses = Vec::new();
    for r in &p.rules {
        let mut conv = |a: &Atom, fo_vars: &mut BTreeSet<String>| -> Atom {
            match so_name.get(&a.rel) {
                Some(x) if a.args.is_empty() => {
                    fresh += 1;
                    let z = format!("Z{fresh}");
                    fo_vars.insert(z.clone());
                    Atom::new(x.clone(), vec![Term::var(z)])
                }
                Some(x) => Atom::new(x.clone(), a.args.clone()),
                None => a.clone(),
            }
        };
        for v in r.vars() {
            fo_vars.insert(v);
        }
        let alphas = r.body.iter().map(|a| conv(a, &mut fo_vars)).collect();
        let betas = if r.head.iter().any(|a| a.rel == p.goal) {
            Vec::new()
        } else {
            r.head.iter().map(|a| conv(a, &mut fo_vars)).collect()
        };
        clauses.push(Clause { alphas, betas });
    }
    let mut so_vars: Vec<String> = so_name.into_values().collect();
    so_vars.sort();
    let mut fo: Vec<String> = fo_vars.into_iter().collect();
    if fo.is_empty() {
        fo.push("X".into());
    }
    let s = MmsnpSentence {
        so_vars,
        fo_vars: fo,
        clauses,
        schema: edb,
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ddlog_holds;
    use crate::textio::{parse_instance, parse_mmsnp};

    const THREE_COL: &str = "exists R G B . forall x y .
        true -> R(x) | G(x) | B(x) ;
        R(x) & r(x,y) & R(y) -> false ;
        G(x) & r(x,y) & G(y) -> false ;
        B(x) & r(x,y) & B(y) -> false ;";

    fn k(n: usize) -> Instance {
        let mut s = String::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    s += &format!("r(v{a},v{b}). ");
                }
            }
        }
        parse_instance(&s).unwrap()
    }

    #[test]
    fn three_colourability() {
        let phi = parse_mmsnp(THREE_COL).unwrap();
        assert_eq!(phi.clauses.len(), 4);
        let tri = parse_instance("r(a,b). r(b,c). r(c,a).").unwrap();
        assert!(eval_mmsnp(&phi, &tri).unwrap());
        assert!(!eval_mmsnp(&phi, &k(4)).unwrap());
        let p = mmsnp_to_mddlog(&phi).unwrap();
        assert_eq!(p.rules.len(), 10);
        assert!(!ddlog_holds(&p, &tri).unwrap());
        assert!(ddlog_holds(&p, &k(4)).unwrap());
    }

    #[test]
    fn vacuous_and_contradictory_clauses() {
        let phi = parse_mmsnp("forall x . true -> false ;").unwrap();
        assert!(eval_mmsnp(&phi, &Instance::default()).unwrap());
        assert!(!eval_mmsnp(&phi, &parse_instance("r(a,b).").unwrap()).unwrap());
        let p = mmsnp_to_mddlog(&parse_mmsnp("@edb r/2.\nforall x . true -> false ;").unwrap())
            .unwrap();
        assert!(ddlog_holds(&p, &parse_instance("r(a,b).").unwrap()).unwrap());
        assert!(!ddlog_holds(&p, &Instance::default()).unwrap());
    }

    #[test]
    fn zero_clauses_never_derive_goal() {
        let phi = parse_mmsnp("@edb r/2.\nexists X . forall x .").unwrap();
        let p = mmsnp_to_mddlog(&phi).unwrap();
        assert!(p.goal_rules().next().is_none());
        assert!(!ddlog_holds(&p, &k(3)).unwrap());
    }

    #[test]
    fn program_to_sentence() {
        let p = crate::textio::parse_program("goal() :- A(X).").unwrap();
        let phi = mddlog_to_mmsnp(&p).unwrap();
        assert!(eval_mmsnp(&phi, &parse_instance("B(a).\n@edb A/1.").unwrap()).unwrap());
        assert!(!eval_mmsnp(&phi, &parse_instance("A(a).").unwrap()).unwrap());
    }
}
