//! Backtracking conjunctive matching over interned relations.

use std::collections::{HashMap, HashSet};

/// Interned relation contents. A `full` relation holds every tuple over the
/// domain it is matched against and stores nothing.
#[derive(Clone, Debug, Default)]
pub struct Rel {
    pub arity: usize,
    pub full: bool,
    tuples: Vec<Vec<u32>>,
    set: HashSet<Vec<u32>>,
    index: HashMap<(usize, u32), Vec<u32>>,
}

impl Rel {
    pub fn new(arity: usize) -> Self {
        Rel {
            arity,
            ..Default::default()
        }
    }

    pub fn full(arity: usize) -> Self {
        Rel {
            arity,
            full: true,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, t: Vec<u32>) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let idx = self.tuples.len() as u32;
        for (p, &v) in t.iter().enumerate() {
            self.index.entry((p, v)).or_default().push(idx);
        }
        self.set.insert(t.clone());
        self.tuples.push(t);
        true
    }

    pub fn contains(&self, t: &[u32], domain: &HashSet<u32>) -> bool {
        if self.full {
            t.iter().all(|v| domain.contains(v))
        } else {
            self.set.contains(t)
        }
    }

    pub fn tuples(&self) -> &[Vec<u32>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QTerm {
    Var(usize),
    Const(u32),
}

pub struct QAtom<'a> {
    pub rel: &'a Rel,
    pub args: Vec<QTerm>,
}

pub struct Matcher<'a, 'f> {
    pub atoms: Vec<QAtom<'a>>,
    pub domain: &'a [u32],
    pub domain_set: &'a HashSet<u32>,
    /// Extra admissibility test for binding a variable to a value.
    pub admissible: Option<&'f dyn Fn(usize, u32) -> bool>,
}

impl<'a, 'f> Matcher<'a, 'f> {
    /// Calls `f` on every extension of `binding` satisfying all atoms.
    /// Stops early and returns false as soon as `f` returns false.
    pub fn run(
        &self,
        binding: &mut [Option<u32>],
        f: &mut dyn FnMut(&[Option<u32>]) -> bool,
    ) -> bool {
        let mut done = vec![false; self.atoms.len()];
        self.rec(&mut done, binding, f)
    }

    fn cost(&self, a: &QAtom, binding: &[Option<u32>]) -> (u8, usize) {
        let bound = |t: &QTerm| match t {
            QTerm::Const(c) => Some(*c),
            QTerm::Var(v) => binding[*v],
        };
        if a.args.iter().all(|t| bound(t).is_some()) {
            return (0, 0);
        }
        if a.rel.full {
            let free: HashSet<usize> = a
                .args
                .iter()
                .filter_map(|t| match t {
                    QTerm::Var(v) if binding[*v].is_none() => Some(*v),
                    _ => None,
                })
                .collect();
            let n = self.domain.len().max(1);
            let c = n.saturating_pow(free.len() as u32);
            return (2, c);
        }
        let mut best = a.rel.len();
        for (p, t) in a.args.iter().enumerate() {
            if let Some(v) = bound(t) {
                best = best.min(a.rel.index.get(&(p, v)).map_or(0, |l| l.len()));
            }
        }
        (1, best)
    }

    fn rec(
        &self,
        done: &mut Vec<bool>,
        binding: &mut [Option<u32>],
        f: &mut dyn FnMut(&[Option<u32>]) -> bool,
    ) -> bool {
        let mut pick: Option<(usize, (u8, usize))> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            if done[i] {
                continue;
            }
            let c = self.cost(a, binding);
            let better = match pick {
                None => true,
                Some((_, pc)) => (c.1, c.0) < (pc.1, pc.0),
            };
            if better {
                pick = Some((i, c));
            }
        }
        let Some((ai, _)) = pick else {
            return f(binding);
        };
        let atom = &self.atoms[ai];
        done[ai] = true;
        let cont = if atom.rel.full {
            let free: Vec<usize> = {
                let mut v: Vec<usize> = atom
                    .args
                    .iter()
                    .filter_map(|t| match t {
                        QTerm::Var(v) if binding[*v].is_none() => Some(*v),
                        _ => None,
                    })
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let fixed_ok = atom.args.iter().all(|t| match t {
                QTerm::Const(c) => self.domain_set.contains(c),
                QTerm::Var(v) => binding[*v].is_none_or(|x| self.domain_set.contains(&x)),
            });
            if fixed_ok {
                self.enum_free(&free, 0, done, binding, f)
            } else {
                true
            }
        } else {
            self.match_rel(atom, done, binding, f)
        };
        done[ai] = false;
        cont
    }

    fn enum_free(
        &self,
        free: &[usize],
        k: usize,
        done: &mut Vec<bool>,
        binding: &mut [Option<u32>],
        f: &mut dyn FnMut(&[Option<u32>]) -> bool,
    ) -> bool {
        if k == free.len() {
            return self.rec(done, binding, f);
        }
        let v = free[k];
        for &d in self.domain {
            if let Some(adm) = self.admissible {
                if !adm(v, d) {
                    continue;
                }
            }
            binding[v] = Some(d);
            let cont = self.enum_free(free, k + 1, done, binding, f);
            binding[v] = None;
            if !cont {
                return false;
            }
        }
        true
    }

    fn match_rel(
        &self,
        atom: &QAtom,
        done: &mut Vec<bool>,
        binding: &mut [Option<u32>],
        f: &mut dyn FnMut(&[Option<u32>]) -> bool,
    ) -> bool {
        let bound = |t: &QTerm, b: &[Option<u32>]| match t {
            QTerm::Const(c) => Some(*c),
            QTerm::Var(v) => b[*v],
        };
        let mut cands: Option<&Vec<u32>> = None;
        let empty = Vec::new();
        for (p, t) in atom.args.iter().enumerate() {
            if let Some(v) = bound(t, binding) {
                let l = atom.rel.index.get(&(p, v)).unwrap_or(&empty);
                if cands.is_none_or(|c| l.len() < c.len()) {
                    cands = Some(l);
                }
            }
        }
        let all: Vec<u32>;
        let cands = match cands {
            Some(c) => c,
            None => {
                all = (0..atom.rel.tuples.len() as u32).collect();
                &all
            }
        };
        let mut newly: Vec<usize> = Vec::with_capacity(atom.args.len());
        for &ti in cands {
            let tuple = &atom.rel.tuples[ti as usize];
            let mut ok = true;
            for (t, &val) in atom.args.iter().zip(tuple.iter()) {
                match t {
                    QTerm::Const(c) => {
                        if *c != val {
                            ok = false;
                            break;
                        }
                    }
                    QTerm::Var(v) => match binding[*v] {
                        Some(x) => {
                            if x != val {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            if let Some(adm) = self.admissible {
                                if !adm(*v, val) {
                                    ok = false;
                                    break;
                                }
                            }
                            binding[*v] = Some(val);
                            newly.push(*v);
                        }
                    },
                }
            }
            let cont = if ok { self.rec(done, binding, f) } else { true };
            for v in newly.drain(..) {
                binding[v] = None;
            }
            if !cont {
                return false;
            }
        }
        true
    }
}
