use std::collections::BTreeSet;

use proptest::prelude::*;

use mddlog_core::eval::{find_hom, girth};
use mddlog_core::ir::{canonical_cq, canonical_rule};
use mddlog_core::textio::{parse_instance, parse_program, render_instance, render_program};
use mddlog_core::{Atom, Fact, Instance, Program, Rule, Schema, Term};

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (0..4usize, 0..4usize).prop_map(|(a, b)| Atom::vars("r", &[VARS[a], VARS[b]])),
        (0..4usize).prop_map(|a| Atom::vars("A", &[VARS[a]])),
    ]
}

fn body() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec(atom(), 1..6)
}

/// A permutation of the variable names and an order of the atoms.
fn relabel(body: &[Atom], perm: &[usize], order: &[usize]) -> Vec<Atom> {
    let rename = |t: &Term| match t {
        Term::Var(v) => Term::var(VARS[perm[VARS.iter().position(|w| w == v).unwrap()]]),
        c => c.clone(),
    };
    let renamed: Vec<Atom> = body
        .iter()
        .map(|a| Atom::new(a.rel.clone(), a.args.iter().map(rename).collect()))
        .collect();
    let mut idx: Vec<usize> = (0..renamed.len()).collect();
    idx.sort_by_key(|&i| order.get(i).copied().unwrap_or(i));
    idx.into_iter().map(|i| renamed[i].clone()).collect()
}

fn frozen(body: &[Atom]) -> Instance {
    let mut i = Instance::new(Schema::from_pairs([("r", 2), ("A", 1)]).unwrap());
    for a in body {
        i.insert(Fact::new(
            a.rel.clone(),
            a.args.iter().map(|t| t.name().to_lowercase()),
        ))
        .unwrap();
    }
    i
}

fn program() -> impl Strategy<Value = Program> {
    let rule = (body(), prop::collection::vec(0..3usize, 0..3)).prop_map(|(body, heads)| {
        let vars: Vec<String> = body
            .iter()
            .flat_map(|a| a.var_names().map(String::from))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        // the goal is never part of a disjunction
        let heads: Vec<usize> = if heads.contains(&0) { vec![0] } else { heads };
        let head = heads
            .into_iter()
            .map(|h| match h {
                0 => Atom::nullary("goal"),
                1 => Atom::vars("P", &[vars[0].as_str()]),
                _ => Atom::vars("Q", &[vars[vars.len() - 1].as_str()]),
            })
            .collect();
        Rule::new(head, body)
    });
    prop::collection::vec(rule, 1..5).prop_map(|rules| {
        let schema = Schema::from_pairs([("r", 2), ("A", 1)]).unwrap();
        Program::new(rules, "goal", 0, &schema).unwrap()
    })
}

proptest! {
    #[test]
    fn canonical_key_ignores_names_and_order(
        b in body(),
        perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        order in prop::collection::vec(0..100usize, 6),
    ) {
        let c = canonical_cq(&b).unwrap();
        let d = canonical_cq(&relabel(&b, &perm, &order)).unwrap();
        prop_assert_eq!(c.key, d.key);
    }

    #[test]
    fn equal_keys_mean_isomorphic_bodies(b1 in body(), b2 in body()) {
        let same = canonical_cq(&b1).unwrap().key == canonical_cq(&b2).unwrap().key;
        let (i1, i2) = (frozen(&b1), frozen(&b2));
        let iso = i1.len() == i2.len()
            && i1.adom().len() == i2.adom().len()
            && find_hom(&i1, &i2).is_some()
            && find_hom(&i2, &i1).is_some();
        // only this direction is checked: mutual homomorphisms need not be bijective
        if same {
            prop_assert!(iso);
        }
    }

    #[test]
    fn programs_round_trip_through_text(p in program()) {
        let q = parse_program(&render_program(&p)).unwrap();
        let keys = |p: &Program| p.rules.iter().map(canonical_rule).collect::<BTreeSet<_>>();
        prop_assert_eq!(keys(&p), keys(&q));
        prop_assert_eq!(p.goal, q.goal);
    }

    #[test]
    fn instances_round_trip_through_text(b in body()) {
        let i = frozen(&b);
        let j = parse_instance(&render_instance(&i)).unwrap();
        prop_assert_eq!(i.fact_set(), j.fact_set());
    }

    #[test]
    fn subinstances_have_no_smaller_girth(b in body(), keep in prop::collection::vec(any::<bool>(), 6)) {
        let i = frozen(&b);
        let kept: Vec<Atom> = b.iter().zip(keep.iter().chain(std::iter::repeat(&true))).filter(|(_, k)| **k).map(|(a, _)| a.clone()).collect();
        let j = frozen(&kept);
        let g = |i: &Instance| girth(i).unwrap_or(usize::MAX);
        prop_assert!(g(&j) >= g(&i));
    }
}
