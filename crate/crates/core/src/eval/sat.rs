//! Small CDCL solver: two watched literals, first-UIP learning, VSIDS
//! branching with phase saving, Luby restarts, solving under assumptions.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(v: u32) -> Lit {
        Lit(v << 1)
    }

    pub fn neg(v: u32) -> Lit {
        Lit((v << 1) | 1)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

const NO_REASON: u32 = u32::MAX;
const UNDEF: u8 = 2;

struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl VarHeap {
    fn new() -> Self {
        VarHeap {
            heap: Vec::new(),
            pos: Vec::new(),
        }
    }

    fn grow(&mut self, n: usize) {
        self.pos.resize(n, ABSENT);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != ABSENT
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[c];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    assign: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    pub conflicts: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::new(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assign.len()
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assign.len() as u32;
        self.assign.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assign.len());
        self.heap.insert(v, &self.activity);
        v
    }

    fn ensure_vars(&mut self, v: u32) {
        while self.num_vars() <= v as usize {
            self.new_var();
        }
    }

    fn value(&self, l: Lit) -> u8 {
        let a = self.assign[l.var() as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (l.is_neg() as u8)
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        self.assign[v] = (!l.is_neg()) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause. Must be called at decision level zero (between solves).
    pub fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        self.backtrack(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        for w in c.windows(2) {
            if w[0].var() == w[1].var() {
                return;
            }
        }
        for &l in &c {
            self.ensure_vars(l.var());
        }
        if c.iter().any(|&l| self.value(l) == 1) {
            return;
        }
        c.retain(|&l| self.value(l) != 0);
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let idx = self.clauses.len() as u32;
                self.watches[c[0].idx()].push(idx);
                self.watches[c[1].idx()].push(idx);
                self.clauses.push(c);
            }
        }
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let c = &mut self.clauses[ci as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let fv = {
                    let a = self.assign[first.var() as usize];
                    if a == UNDEF {
                        UNDEF
                    } else {
                        a ^ (first.is_neg() as u8)
                    }
                };
                if fv == 1 {
                    keep.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    let a = self.assign[l.var() as usize];
                    let lv = if a == UNDEF {
                        UNDEF
                    } else {
                        a ^ (l.is_neg() as u8)
                    };
                    if lv != 0 {
                        c.swap(1, k);
                        let nw = c[1];
                        self.watches[nw.idx()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                keep.push(ci);
                if fv == 0 {
                    conflict = Some(ci);
                    keep.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, ci);
            }
            let slot = &mut self.watches[false_lit.idx()];
            keep.append(slot);
            *slot = keep;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let dl = self.decision_level();
        loop {
            let start = if p.is_none() { 0 } else { 1 };
            let clause = self.clauses[confl as usize].clone();
            for &q in &clause[start..] {
                let v = q.var();
                if !self.seen[v as usize] && self.level[v as usize] > 0 {
                    self.bump(v);
                    self.seen[v as usize] = true;
                    if self.level[v as usize] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize];
        }
        learnt[0] = !p.unwrap();
        let mut bt = 0;
        let mut max_i = 1;
        for (i, l) in learnt.iter().enumerate().skip(1) {
            let lv = self.level[l.var() as usize];
            if lv > bt {
                bt = lv;
                max_i = i;
            }
        }
        if learnt.len() > 1 {
            learnt.swap(1, max_i);
        }
        for l in &learnt {
            self.seen[l.var() as usize] = false;
        }
        (learnt, bt)
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.phase[v as usize] = !self.trail[i].is_neg();
            self.assign[v as usize] = UNDEF;
            self.reason[v as usize] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    /// Satisfiability of the clause set together with the assumed literals.
    /// Learned clauses are kept across calls.
    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        for &a in assumptions {
            self.ensure_vars(a.var());
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.ok = false;
            return false;
        }
        let mut restart_no = 0u32;
        let mut budget = 100 * luby(restart_no);
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return false;
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let idx = self.clauses.len() as u32;
                    self.watches[learnt[0].idx()].push(idx);
                    self.watches[learnt[1].idx()].push(idx);
                    let first = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(first, idx);
                }
                self.var_inc /= 0.95;
                continue;
            }
            if since_restart >= budget {
                since_restart = 0;
                restart_no += 1;
                budget = 100 * luby(restart_no);
                self.backtrack(0);
                continue;
            }
            let dl = self.decision_level() as usize;
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.value(a) {
                    1 => self.trail_lim.push(self.trail.len()),
                    0 => {
                        self.backtrack(0);
                        return false;
                    }
                    _ => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, NO_REASON);
                    }
                }
                continue;
            }
            let mut next = None;
            while let Some(v) = self.heap.pop(&self.activity) {
                if self.assign[v as usize] == UNDEF {
                    next = Some(v);
                    break;
                }
            }
            match next {
                None => {
                    self.model = self.assign.iter().map(|&a| a == 1).collect();
                    self.backtrack(0);
                    return true;
                }
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    let l = if self.phase[v as usize] {
                        Lit::pos(v)
                    } else {
                        Lit::neg(v)
                    };
                    self.enqueue(l, NO_REASON);
                }
            }
        }
    }

    /// Value of a variable in the model found by the last successful solve.
    pub fn model_value(&self, v: u32) -> bool {
        self.model.get(v as usize).copied().unwrap_or(false)
    }
}

fn luby(i: u32) -> u64 {
    // position i (0-based) of the sequence 1 1 2 1 1 2 4 ...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut i = i as u64;
    while size - 1 != i {
        size = (size - 1) / 2;
        seq -= 1;
        i %= size;
    }
    1u64 << seq
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(nvars: u32, clauses: &[Vec<Lit>]) -> bool {
        (0u32..1 << nvars).any(|m| {
            clauses
                .iter()
                .all(|c| c.iter().any(|l| ((m >> l.var()) & 1 == 1) != l.is_neg()))
        })
    }

    #[test]
    fn luby_prefix() {
        let got: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        let mut s = Solver::new();
        let x = |p: u32, h: u32| p * 2 + h;
        for p in 0..3 {
            s.add_clause(&[Lit::pos(x(p, 0)), Lit::pos(x(p, 1))]);
        }
        for h in 0..2 {
            for p in 0..3 {
                for q in p + 1..3 {
                    s.add_clause(&[Lit::neg(x(p, h)), Lit::neg(x(q, h))]);
                }
            }
        }
        assert!(!s.solve(&[]));
    }

    #[test]
    fn assumptions_do_not_poison_later_calls() {
        let mut s = Solver::new();
        s.add_clause(&[Lit::pos(0), Lit::pos(1)]);
        assert!(!s.solve(&[Lit::neg(0), Lit::neg(1)]));
        assert!(s.solve(&[Lit::neg(0)]));
        assert!(s.model_value(1));
        assert!(s.solve(&[]));
    }

    #[test]
    fn random_3sat_agrees_with_truth_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..400 {
            let n = rng.gen_range(1..=9u32);
            let m = rng.gen_range(1..=40);
            let clauses: Vec<Vec<Lit>> = (0..m)
                .map(|_| {
                    (0..rng.gen_range(1..=3))
                        .map(|_| {
                            let v = rng.gen_range(0..n);
                            if rng.gen() {
                                Lit::pos(v)
                            } else {
                                Lit::neg(v)
                            }
                        })
                        .collect()
                })
                .collect();
            let mut s = Solver::new();
            for c in &clauses {
                s.add_clause(c);
            }
            let expected = brute(n, &clauses);
            let got = s.solve(&[]);
            assert_eq!(got, expected, "{clauses:?}");
            if got {
                for c in &clauses {
                    assert!(c.iter().any(|l| s.model_value(l.var()) != l.is_neg()));
                }
            }
            let a = Lit::neg(rng.gen_range(0..n));
            let mut with = clauses.clone();
            with.push(vec![a]);
            assert_eq!(s.solve(&[a]), brute(n, &with));
        }
    }
}
