//! Emptiness of semi-simple programs relative to disjointness constraints,
//! decided on the canonical structures `K_θ`, with the template
//! characterization as an independent second procedure.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::{ddlog_holds_on, find_hom, EvalOptions, Structure};
use crate::ir::{
    is_semi_simple, is_simple, DisjointnessSet, Fact, Instance, Program, Rule, Schema,
};

/// Largest number of elements of a `K_θ` or a template.
pub const MAX_ELEMENTS: usize = 1 << 14;

/// Largest number of facts written out when a `K_θ` is materialized.
pub const MAX_MATERIALIZED_FACTS: u64 = 10_000_000;

/// Nullary constraint relations true in an instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ZeroType {
    pub nullary_relations: BTreeSet<String>,
}

/// Unary constraint relations true at one element.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct OneType {
    pub unary_relations: BTreeSet<String>,
}

/// Unary and nullary relations of a program, closed under its rules with
/// at most one variable and no extensional atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SigmaType {
    pub members: BTreeSet<String>,
}

fn relations_of_arity(s: &Schema, k: usize) -> Vec<String> {
    s.iter()
        .filter(|(_, a)| *a == k)
        .map(|(n, _)| n.to_string())
        .collect()
}

/// Subsets of `rels` containing no forbidden set, in mask order.
fn avoiding_subsets(
    rels: &[String],
    forbidden: &[BTreeSet<String>],
) -> Result<Vec<BTreeSet<String>>> {
    if rels.len() > 40 {
        return Err(Error::limit(
            "emptiness",
            "constraint relations",
            rels.len() as u64,
            40,
        ));
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << rels.len()) {
        let set: BTreeSet<String> = rels
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, r)| r.clone())
            .collect();
        if forbidden.iter().all(|f| !f.is_subset(&set)) {
            out.push(set);
            if out.len() > MAX_ELEMENTS {
                return Err(Error::limit(
                    "emptiness",
                    "types",
                    out.len() as u64,
                    MAX_ELEMENTS as u64,
                ));
            }
        }
    }
    Ok(out)
}

pub fn zero_types(d: &DisjointnessSet) -> Result<Vec<ZeroType>> {
    let rels = relations_of_arity(&d.schema(), 0);
    Ok(avoiding_subsets(&rels, &d.forbidden_sets(0))?
        .into_iter()
        .map(|nullary_relations| ZeroType { nullary_relations })
        .collect())
}

/// Zero-types not strictly contained in another zero-type.
pub fn maximal_zero_types(d: &DisjointnessSet) -> Result<Vec<ZeroType>> {
    let all = zero_types(d)?;
    Ok(all
        .iter()
        .filter(|t| {
            !all.iter().any(|u| {
                u.nullary_relations.len() > t.nullary_relations.len()
                    && t.nullary_relations.is_subset(&u.nullary_relations)
            })
        })
        .cloned()
        .collect())
}

pub fn one_types(d: &DisjointnessSet) -> Result<Vec<OneType>> {
    let rels = relations_of_arity(&d.schema(), 1);
    Ok(avoiding_subsets(&rels, &d.forbidden_sets(1))?
        .into_iter()
        .map(|unary_relations| OneType { unary_relations })
        .collect())
}

/// `K_θ` over `schema`: one element `t{i}` per one-type, each carrying its
/// unary constraint relations, the nullary relations of `θ`, and every other
/// relation of `schema` holding on all tuples.
pub fn build_k_theta(schema: &Schema, d: &DisjointnessSet, theta: &ZeroType) -> Result<Structure> {
    let ds = d.schema();
    let full_schema = schema.merge(&ds)?;
    let mut inst = Instance::new(full_schema.clone());
    let types = one_types(d)?;
    let mut domain = BTreeSet::new();
    for (i, t) in types.iter().enumerate() {
        let e = format!("t{i}");
        for p in &t.unary_relations {
            inst.insert(Fact::new(p.clone(), [e.clone()]))?;
        }
        domain.insert(e);
    }
    for p in &theta.nullary_relations {
        inst.insert(Fact::new(p.clone(), Vec::<String>::new()))?;
    }
    let full = full_schema.restrict(|n| !ds.contains(n));
    Ok(Structure::with_full(inst, domain, full))
}

/// Result of an emptiness check.
#[derive(Clone, Debug)]
pub struct Emptiness {
    pub empty: bool,
    /// A zero-type whose `K_θ` satisfies the program, when not empty.
    pub witness: Option<(ZeroType, Structure)>,
}

fn check_pre(p: &Program, d: &DisjointnessSet) -> Result<()> {
    if !p.is_boolean() {
        return Err(Error::invalid("emptiness expects a Boolean program"));
    }
    if !is_semi_simple(p, d) {
        return Err(Error::invalid(
            "emptiness expects a program that is semi-simple with respect to the constraints",
        ));
    }
    Ok(())
}

/// Whether no instance satisfying `d` makes `p` true.
pub fn check_empty(p: &Program, d: &DisjointnessSet, opts: &EvalOptions) -> Result<Emptiness> {
    check_pre(p, d)?;
    let schema = p.edb_schema();
    for theta in maximal_zero_types(d)? {
        let k = build_k_theta(&schema, d, &theta)?;
        if ddlog_holds_on(p, &k, opts).map_err(|e| e.in_stage("emptiness"))? {
            return Ok(Emptiness {
                empty: false,
                witness: Some((theta, k)),
            });
        }
    }
    Ok(Emptiness {
        empty: true,
        witness: None,
    })
}

/// A rule read pointwise over types: unary relations are bits of an
/// element's mask, nullary relations bits of the nullary part.
struct TypeRule {
    body_unary: Vec<(usize, u64)>,
    body_nullary: u64,
    /// The body has an atom outside `edb` that never holds pointwise.
    blocked: bool,
    head_unary: Vec<(usize, u64)>,
    head_nullary: u64,
}

impl TypeRule {
    /// Compiles `r` with its variables read from the positions of `vars`.
    fn compile(r: &Rule, edb: &BTreeSet<String>, vars: &[&str], bits: &TypeBits) -> TypeRule {
        let mut t = TypeRule {
            body_unary: Vec::new(),
            body_nullary: 0,
            blocked: false,
            head_unary: Vec::new(),
            head_nullary: 0,
        };
        for a in r.body.iter().filter(|a| !edb.contains(&a.rel)) {
            match bits.locate(a, vars) {
                Some(Located::Unary(i, b)) => t.body_unary.push((i, b)),
                Some(Located::Nullary(b)) => t.body_nullary |= b,
                None => t.blocked = true,
            }
        }
        for a in &r.head {
            match bits.locate(a, vars) {
                Some(Located::Unary(i, b)) => t.head_unary.push((i, b)),
                Some(Located::Nullary(b)) => t.head_nullary |= b,
                None => {}
            }
        }
        t
    }

    fn holds(&self, assign: &[u64], delta: u64) -> bool {
        let body = !self.blocked
            && self.body_nullary & !delta == 0
            && self.body_unary.iter().all(|&(i, b)| assign[i] & b != 0);
        !body
            || self.head_nullary & delta != 0
            || self.head_unary.iter().any(|&(i, b)| assign[i] & b != 0)
    }
}

enum Located {
    Unary(usize, u64),
    Nullary(u64),
}

/// Bit positions of the unary and nullary relations read off types.
struct TypeBits {
    unary: Vec<String>,
    nullary: Vec<String>,
}

impl TypeBits {
    fn locate(&self, a: &crate::ir::Atom, vars: &[&str]) -> Option<Located> {
        match a.args.as_slice() {
            [] => self
                .nullary
                .iter()
                .position(|n| *n == a.rel)
                .map(|i| Located::Nullary(1 << i)),
            [x] => {
                let v = x.as_var()?;
                let i = vars.iter().position(|w| *w == v)?;
                let b = self.unary.iter().position(|n| *n == a.rel)?;
                Some(Located::Unary(i, 1 << b))
            }
            _ => None,
        }
    }

    fn unary_set(&self, mask: u64) -> impl Iterator<Item = &String> {
        self.unary
            .iter()
            .enumerate()
            .filter(move |(i, _)| mask >> i & 1 == 1)
            .map(|(_, r)| r)
    }

    fn nullary_set(&self, mask: u64) -> BTreeSet<String> {
        self.nullary
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, r)| r.clone())
            .collect()
    }
}

/// A template before it is written out: the nullary part and the facts
/// as `[relation, element masks..]`, sorted.
struct CompactTemplate {
    delta: u64,
    facts: Vec<Vec<u32>>,
}

impl CompactTemplate {
    fn is_subset(&self, other: &CompactTemplate) -> bool {
        if self.facts.len() > other.facts.len() {
            return false;
        }
        let mut it = other.facts.iter();
        self.facts.iter().all(|f| it.any(|g| g == f))
    }
}

/// The templates as built by [`templates_by_delta`], before materialization.
struct Templates {
    bits: TypeBits,
    /// Relations indexed by the first entry of a compact fact.
    rels: Vec<String>,
    schema: Schema,
    items: Vec<CompactTemplate>,
}

impl Templates {
    fn materialize(&self, t: &CompactTemplate) -> Result<(BTreeSet<String>, Instance)> {
        let mut inst = Instance::new(self.schema.clone());
        for f in &t.facts {
            let args: Vec<String> = f[1..].iter().map(|m| format!("s{m}")).collect();
            inst.insert(Fact::new(self.rels[f[0] as usize].clone(), args))?;
        }
        Ok((self.bits.nullary_set(t.delta), inst))
    }
}

fn compact_templates(p: &Program, d: &DisjointnessSet, theta: &ZeroType) -> Result<Templates> {
    let ds = d.schema();
    let dset: BTreeSet<String> = ds.names().map(str::to_string).collect();
    // relations read pointwise: IDB relations and constraint relations
    let sigma: BTreeSet<String> = p.idb().into_iter().chain(dset.iter().cloned()).collect();
    let edb: BTreeSet<String> = p.edb().difference(&dset).cloned().collect();
    let schema = p.schema.merge(&ds)?;
    let bits = TypeBits {
        unary: schema
            .iter()
            .filter(|(n, k)| *k == 1 && sigma.contains(*n))
            .map(|(n, _)| n.to_string())
            .collect(),
        nullary: schema
            .iter()
            .filter(|(n, k)| *k == 0 && sigma.contains(*n) && *n != p.goal)
            .map(|(n, _)| n.to_string())
            .collect(),
    };
    if bits.unary.len() > 14 || bits.nullary.len() > 20 {
        return Err(Error::limit(
            "templates",
            "type relations",
            (bits.unary.len() + bits.nullary.len()) as u64,
            34,
        ));
    }
    let nullary_d: u64 = bits
        .nullary
        .iter()
        .enumerate()
        .filter(|(_, n)| dset.contains(*n))
        .fold(0, |m, (i, _)| m | 1 << i);
    let theta_mask: u64 = bits
        .nullary
        .iter()
        .enumerate()
        .filter(|(_, n)| theta.nullary_relations.contains(*n))
        .fold(0, |m, (i, _)| m | 1 << i);
    let closed_rules: Vec<TypeRule> = p
        .rules
        .iter()
        .filter(|r| r.body.iter().all(|a| !edb.contains(&a.rel)))
        .filter_map(|r| {
            let vars: Vec<String> = r.vars().into_iter().collect();
            (vars.len() <= 1).then(|| {
                let vs: Vec<&str> = vars.iter().map(String::as_str).collect();
                TypeRule::compile(r, &edb, &vs, &bits)
            })
        })
        .collect();
    let rels: Vec<String> = edb.iter().chain(dset.iter()).cloned().collect();
    let edb_rules: Vec<(usize, Vec<TypeRule>)> = edb
        .iter()
        .map(|rel| {
            let rules = p
                .rules
                .iter()
                .filter_map(|r| {
                    let a = r.body.iter().find(|a| &a.rel == rel)?;
                    let vars: Vec<&str> = a.args.iter().map(|t| t.name()).collect();
                    Some(TypeRule::compile(r, &edb, &vars, &bits))
                })
                .collect();
            (schema.arity(rel).unwrap(), rules)
        })
        .collect();
    let dset_index = |n: &str| (edb.len() + dset.iter().position(|m| m == n).unwrap()) as u32;

    let mut items = Vec::new();
    for delta in 0u64..(1u64 << bits.nullary.len()) {
        if delta & nullary_d != theta_mask || !closed_rules.iter().all(|r| r.holds(&[0], delta)) {
            continue;
        }
        let types: Vec<u64> = (0u64..(1u64 << bits.unary.len()))
            .filter(|&t| closed_rules.iter().all(|r| r.holds(&[t], delta)))
            .collect();
        if types.len() > MAX_ELEMENTS {
            return Err(Error::limit(
                "templates",
                "elements",
                types.len() as u64,
                MAX_ELEMENTS as u64,
            ));
        }
        let mut facts: Vec<Vec<u32>> = Vec::new();
        for &t in &types {
            for m in bits.unary_set(t).filter(|m| dset.contains(*m)) {
                facts.push(vec![dset_index(m), t as u32]);
            }
        }
        for m in bits.nullary_set(delta & nullary_d) {
            facts.push(vec![dset_index(&m)]);
        }
        for (ri, (k, rules)) in edb_rules.iter().enumerate() {
            let live: Vec<&TypeRule> = rules
                .iter()
                .filter(|r| {
                    !r.blocked && r.body_nullary & !delta == 0 && r.head_nullary & delta == 0
                })
                .collect();
            if *k > 0 && types.is_empty() {
                continue;
            }
            let mut idx = vec![0usize; *k];
            let mut assign = vec![0u64; *k];
            loop {
                for (a, &i) in assign.iter_mut().zip(&idx) {
                    *a = types[i];
                }
                if live.iter().all(|r| r.holds(&assign, delta)) {
                    let mut f = Vec::with_capacity(k + 1);
                    f.push(ri as u32);
                    f.extend(assign.iter().map(|&a| a as u32));
                    facts.push(f);
                }
                if !advance(&mut idx, types.len()) {
                    break;
                }
            }
        }
        facts.sort_unstable();
        items.push(CompactTemplate { delta, facts });
    }
    Ok(Templates {
        bits,
        rels,
        schema: schema.restrict(|n| edb.contains(n) || dset.contains(n)),
        items,
    })
}

/// The templates `T_δ` for the zero-type `θ`: an instance satisfying the
/// constraints with zero-type `θ` falsifies `p` iff it maps into one of them.
pub fn build_templates(
    p: &Program,
    d: &DisjointnessSet,
    theta: &ZeroType,
) -> Result<Vec<Instance>> {
    check_pre(p, d)?;
    Ok(templates_by_delta(p, d, theta)?
        .into_iter()
        .map(|(_, t)| t)
        .collect())
}

/// Templates paired with their nullary part `δ`. Elements are named
/// `s{m}` after the bit mask `m` of their unary part, so templates for
/// different `δ` share names.
fn templates_by_delta(
    p: &Program,
    d: &DisjointnessSet,
    theta: &ZeroType,
) -> Result<Vec<(BTreeSet<String>, Instance)>> {
    let ts = compact_templates(p, d, theta)?;
    ts.items.iter().map(|t| ts.materialize(t)).collect()
}

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

/// Outcome of [`simple_containment`].
#[derive(Clone, Debug)]
pub struct TemplateDecision {
    pub contained: bool,
    /// The nullary part and the template on which the left program holds.
    pub witness: Option<(BTreeSet<String>, Instance)>,
    pub templates_checked: usize,
}

/// Containment of simple Boolean programs over a common EDB schema,
/// decided on the templates of the right-hand program: `p1` is contained
/// in `p2` iff `p1` is false on every template.
///
/// This is emptiness of [`crate::reduce::to_emptiness`] without writing
/// out the annotated rules: since `p2` is simple, an annotated rule
/// survives exactly when the types on its variables are pointwise
/// consistent with `p2`, which is what the template relations record.
/// Only templates maximal under inclusion are evaluated.
pub fn simple_containment(
    p1: &Program,
    p2: &Program,
    opts: &EvalOptions,
) -> Result<TemplateDecision> {
    if !is_simple(p1) || !is_simple(p2) || !p1.is_boolean() || !p2.is_boolean() {
        return Err(Error::invalid(
            "template containment expects simple Boolean programs",
        ));
    }
    let mut p2 = p2.clone();
    p2.schema = p2.schema.merge(&p1.edb_schema())?;
    let ts = compact_templates(&p2, &DisjointnessSet::default(), &ZeroType::default())?;
    // larger first, so a template is dominated iff a kept one contains it
    let mut order: Vec<usize> = (0..ts.items.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(ts.items[i].facts.len()));
    let mut maximal: Vec<usize> = Vec::new();
    for i in order {
        if !maximal.iter().any(|&j| ts.items[i].is_subset(&ts.items[j])) {
            maximal.push(i);
        }
    }
    maximal.sort_unstable();
    for (n, &i) in maximal.iter().enumerate() {
        let (delta, t) = ts.materialize(&ts.items[i])?;
        if ddlog_holds_on(p1, &Structure::of(&t), opts).map_err(|e| e.in_stage("emptiness"))? {
            return Ok(TemplateDecision {
                contained: false,
                witness: Some((delta, t)),
                templates_checked: n + 1,
            });
        }
    }
    Ok(TemplateDecision {
        contained: true,
        witness: None,
        templates_checked: maximal.len(),
    })
}

/// Emptiness decided through templates: every `K_θ` must map into a
/// template for `θ`.
pub fn check_empty_via_templates(p: &Program, d: &DisjointnessSet) -> Result<bool> {
    check_pre(p, d)?;
    let schema = p.edb_schema();
    for theta in zero_types(d)? {
        let k = build_k_theta(&schema, d, &theta)?.materialize(MAX_MATERIALIZED_FACTS)?;
        let templates = build_templates(p, d, &theta)?;
        if !templates.iter().any(|t| find_hom(&k, t).is_some()) {
            return Ok(false);
        }
    }
    Ok(true)
}
