//! End-to-end containment: answer variables and constants are compiled
//! away, the Boolean pair is simplified and reduced to relativized
//! emptiness. A brute-force oracle over small instances sits alongside.

use std::collections::{BTreeMap, BTreeSet};

use crate::boolify::{
    answer_constants, constant_tuples, eliminate_constants, fix_answer, quotient_constants,
    ConstantTuple,
};
use crate::emptiness::{check_empty, simple_containment, ZeroType};
use crate::error::{Error, Result};
use crate::eval::{ddlog_answers, ddlog_answers_on, enum_instances, EvalOptions, Structure};
use crate::ir::{Instance, Program, Schema};
use crate::mmsnp::{mmsnp_to_mddlog_over, MmsnpSentence};
use crate::reduce::{annotation_count, to_emptiness};
use crate::simplify::{align_schemas, instance_from_consolidated, joint_edb_schema, simplify_pair};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Contained,
    NotContained,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Contained => "CONTAINED",
            Verdict::NotContained => "NOT_CONTAINED",
        }
    }
}

/// An instance with a tuple answered by the left program only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub instance: Instance,
    pub tuple: Vec<String>,
}

/// Why a pair is not contained.
#[derive(Clone, Debug)]
pub struct Evidence {
    pub branch: ConstantTuple,
    /// The zero-type of `K_θ`, or the nullary part `δ` of a template.
    pub theta: ZeroType,
    /// `K_θ`, or the template of the right program on which the left one holds.
    pub k_theta: Structure,
    /// Present when unfolding `K_θ` back to the original schema happened
    /// to yield a counterexample that was checked directly.
    pub counterexample: Option<Counterexample>,
}

/// Sizes recorded after a stage for one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageMetrics {
    pub stage: &'static str,
    pub branch: usize,
    pub quantities: BTreeMap<&'static str, u64>,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub evidence: Option<Evidence>,
    pub stages: Vec<StageMetrics>,
}

/// How emptiness of a simplified pair is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmptinessPath {
    /// Reduction when it stays small, templates otherwise.
    Auto,
    /// Annotated program and disjointness constraints, checked on `K_θ`.
    Reduction,
    /// Left program evaluated on the templates of the right program.
    Templates,
}

#[derive(Clone, Copy, Debug)]
pub struct ContainOptions {
    pub eval: EvalOptions,
    pub path: EmptinessPath,
    /// Largest witness (in facts) unfolded when looking for a checked counterexample.
    pub certify_max_facts: u64,
}

impl Default for ContainOptions {
    fn default() -> Self {
        ContainOptions {
            eval: EvalOptions::default(),
            path: EmptinessPath::Auto,
            certify_max_facts: 20_000,
        }
    }
}

/// Largest reduction the automatic path writes out.
pub const AUTO_MAX_ANNOTATIONS: u64 = 2_000;

pub fn contain(p1: &Program, p2: &Program) -> Result<Decision> {
    contain_with(p1, p2, &ContainOptions::default())
}

/// Decides whether every answer of `p1` is an answer of `p2` on every instance.
pub fn contain_with(p1: &Program, p2: &Program, opts: &ContainOptions) -> Result<Decision> {
    if p1.arity != p2.arity {
        return Err(Error::Arity {
            relation: p2.goal.clone(),
            expected: p1.arity,
            found: p2.arity,
        });
    }
    let source = joint_edb_schema(p1, p2)?;
    let (p1, p2) = align_schemas(p1, p2)?;
    let constants = answer_constants(&p1, &p2);
    let mut stages = Vec::new();
    for (bi, a) in constant_tuples(&constants, p1.arity)?.enumerate() {
        let b1 = fix_answer(&p1, &a)?;
        let b2 = fix_answer(&p2, &a)?;
        let (c1, c2) = eliminate_constants(&b1, &b2)?;
        stages.push(metrics(
            "eliminate_constants",
            bi,
            &[
                ("left_rules", c1.rules.len() as u64),
                ("right_rules", c2.rules.len() as u64),
                ("left_size", c1.metrics().size as u64),
                ("right_size", c2.metrics().size as u64),
            ],
        ));
        let s = simplify_pair(&c1, &c2)?;
        stages.push(metrics(
            "simplify",
            bi,
            &[
                ("left_rules", s.p1.rules.len() as u64),
                ("right_rules", s.p2.rules.len() as u64),
                ("consolidated_relations", s.map.entries.len() as u64),
                ("girth_bound", s.w as u64),
            ],
        ));
        let annotations = annotation_count(&s.p1, &s.p2);
        let use_reduction = match opts.path {
            EmptinessPath::Reduction => true,
            EmptinessPath::Templates => false,
            EmptinessPath::Auto => annotations <= AUTO_MAX_ANNOTATIONS,
        };
        let witness = if use_reduction {
            let (pi, d) = to_emptiness(&s.p1, &s.p2).map_err(|e| e.in_stage("reduce"))?;
            stages.push(metrics(
                "reduce",
                bi,
                &[
                    ("rules", pi.rules.len() as u64),
                    ("constraints", d.rules.len() as u64),
                    ("relations", pi.schema.len() as u64),
                ],
            ));
            let e = check_empty(&pi, &d, &opts.eval)?;
            stages.push(metrics("emptiness", bi, &[("empty", e.empty as u64)]));
            e.witness
        } else {
            let t = simple_containment(&s.p1, &s.p2, &opts.eval)?;
            stages.push(metrics(
                "templates",
                bi,
                &[
                    ("annotations_avoided", annotations),
                    ("templates_checked", t.templates_checked as u64),
                    ("empty", t.contained as u64),
                ],
            ));
            t.witness.map(|(delta, inst)| {
                (
                    ZeroType {
                        nullary_relations: delta,
                    },
                    Structure::of(&inst),
                )
            })
        };
        if let Some((theta, k)) = witness {
            let counterexample = certify(&p1, &p2, &a, &k, &s.map, &source, opts);
            return Ok(Decision {
                verdict: Verdict::NotContained,
                evidence: Some(Evidence {
                    branch: a,
                    theta,
                    k_theta: k,
                    counterexample,
                }),
                stages,
            });
        }
    }
    Ok(Decision {
        verdict: Verdict::Contained,
        evidence: None,
        stages,
    })
}

fn metrics(stage: &'static str, branch: usize, q: &[(&'static str, u64)]) -> StageMetrics {
    StageMetrics {
        stage,
        branch,
        quantities: q.iter().copied().collect(),
    }
}

/// Unfolds `K_θ` to the original schema and checks it directly.
fn certify(
    p1: &Program,
    p2: &Program,
    a: &ConstantTuple,
    k: &Structure,
    map: &crate::simplify::ConsolidationMap,
    source: &Schema,
    opts: &ContainOptions,
) -> Option<Counterexample> {
    let consolidated = map.schema();
    let restricted = Structure::with_full(
        {
            let mut i = Instance::new(consolidated.clone());
            for f in k.instance.facts().filter(|f| consolidated.contains(&f.rel)) {
                i.insert(f.clone()).ok()?;
            }
            i
        },
        k.domain.clone(),
        k.full.restrict(|n| consolidated.contains(n)),
    );
    let j = restricted.materialize(opts.certify_max_facts).ok()?;
    let unfolded = instance_from_consolidated(&j, map).ok()?;
    let mut i = quotient_constants(&unfolded, source);
    let holds = |p: &Program, i: &Instance| -> Option<bool> {
        let s = Structure::of(i);
        Some(
            ddlog_answers_on(p, &s, &opts.eval)
                .ok()?
                .contains(&a.constants),
        )
    };
    if !holds(p1, &i)? {
        return None;
    }
    // drop facts the left program does not need; the right one may then fail
    if i.len() <= CERTIFY_MAX_SHRINK {
        let facts: Vec<_> = i.facts().cloned().collect();
        for f in facts {
            let mut smaller = i.clone();
            smaller.retain(|g| *g != f);
            if holds(p1, &smaller)? {
                i = smaller;
            }
        }
    }
    (!holds(p2, &i)?).then(|| Counterexample {
        instance: i,
        tuple: a.constants.clone(),
    })
}

/// Largest unfolded witness that is shrunk fact by fact.
const CERTIFY_MAX_SHRINK: usize = 400;

/// Result of the brute-force search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    NoCounterexampleUpTo(usize),
    Counterexample(Counterexample),
}

impl OracleResult {
    pub fn is_contained(&self) -> bool {
        matches!(self, OracleResult::NoCounterexampleUpTo(_))
    }
}

/// Largest domain the brute-force oracle enumerates.
pub const BRUTE_MAX_DOMAIN: usize = 3;

/// Searches all instances over at most `max_domain` elements whose girth
/// exceeds `min_girth_exclusive` for a tuple answered by `p1` but not `p2`.
/// Elements may also be named by program constants.
pub fn brute_contains(
    p1: &Program,
    p2: &Program,
    max_domain: usize,
    min_girth_exclusive: usize,
) -> Result<OracleResult> {
    if max_domain > BRUTE_MAX_DOMAIN {
        return Err(Error::limit(
            "brute_contains",
            "domain size",
            max_domain as u64,
            BRUTE_MAX_DOMAIN as u64,
        ));
    }
    if p1.arity != p2.arity {
        return Err(Error::Arity {
            relation: p2.goal.clone(),
            expected: p1.arity,
            found: p2.arity,
        });
    }
    let schema = joint_edb_schema(p1, p2)?;
    let mut constants: BTreeSet<String> = p1.constants();
    constants.extend(p2.constants());
    let constants: Vec<String> = constants.into_iter().collect();
    for i in enum_instances(&schema, max_domain, min_girth_exclusive)? {
        for named in constant_namings(&i, &constants) {
            let a1 = ddlog_answers(p1, &named)?;
            if a1.is_empty() {
                continue;
            }
            let a2 = ddlog_answers(p2, &named)?;
            if let Some(t) = a1.difference(&a2).next() {
                return Ok(OracleResult::Counterexample(Counterexample {
                    instance: named,
                    tuple: t.clone(),
                }));
            }
        }
    }
    Ok(OracleResult::NoCounterexampleUpTo(max_domain))
}

/// The instance under every partial injective renaming of its elements to
/// `constants`; the identity comes first.
fn constant_namings(i: &Instance, constants: &[String]) -> Vec<Instance> {
    let elems: Vec<String> = i.adom().into_iter().collect();
    let mut out = Vec::new();
    let mut assign: Vec<Option<usize>> = vec![None; elems.len()];
    fn rec(
        k: usize,
        elems: &[String],
        constants: &[String],
        assign: &mut Vec<Option<usize>>,
        i: &Instance,
        out: &mut Vec<Instance>,
    ) {
        if k == elems.len() {
            let map: BTreeMap<&str, String> = elems
                .iter()
                .zip(assign.iter())
                .map(|(e, a)| {
                    let name = match a {
                        Some(c) => constants[*c].clone(),
                        None => {
                            let mut n = e.clone();
                            while constants.contains(&n) {
                                n.push('\'');
                            }
                            n
                        }
                    };
                    (e.as_str(), name)
                })
                .collect();
            out.push(i.rename(|e| map[e].clone()));
            return;
        }
        assign[k] = None;
        rec(k + 1, elems, constants, assign, i, out);
        for c in 0..constants.len() {
            if !assign[..k].contains(&Some(c)) {
                assign[k] = Some(c);
                rec(k + 1, elems, constants, assign, i, out);
            }
        }
        assign[k] = None;
    }
    rec(0, &elems, constants, &mut assign, i, &mut out);
    out
}

/// Whether `phi1` implies `phi2`, decided through the complement programs.
pub fn contain_mmsnp(phi1: &MmsnpSentence, phi2: &MmsnpSentence) -> Result<Decision> {
    contain_mmsnp_with(phi1, phi2, &ContainOptions::default())
}

pub fn contain_mmsnp_with(
    phi1: &MmsnpSentence,
    phi2: &MmsnpSentence,
    opts: &ContainOptions,
) -> Result<Decision> {
    let schema = phi1.schema.merge(&phi2.schema)?;
    let c1 = mmsnp_to_mddlog_over(phi1, &schema)?;
    let c2 = mmsnp_to_mddlog_over(phi2, &schema)?;
    contain_with(&c2, &c1, opts)
}
