//! Shared backtracking search over boolean fact variables, used by the
//! datalog and MSNP evaluators. Clauses have the implication shape
//! "all body variables true -> some head variable true"; an empty head is a
//! constraint, an empty body an unconditional disjunction.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Clause {
    pub body: Vec<usize>,
    pub head: Vec<usize>,
}

pub(crate) struct Search<'a> {
    clauses: &'a [Clause],
    watch: Vec<Vec<usize>>,
    assign: Vec<Option<bool>>,
    /// Decisions and propagated assignments, for backtracking.
    trail: Vec<usize>,
    nodes: u64,
    bound: u64,
}

pub(crate) enum SearchOutcome {
    Sat,
    Unsat,
    BoundExceeded,
}

impl<'a> Search<'a> {
    /// `fixed` pins variables before the search starts.
    pub fn new(
        clauses: &'a [Clause],
        n_vars: usize,
        fixed: &[(usize, bool)],
        bound: u64,
    ) -> Self {
        let mut watch: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
        for (ci, c) in clauses.iter().enumerate() {
            for &v in c.body.iter().chain(c.head.iter()) {
                watch[v].push(ci);
            }
        }
        let mut assign = vec![None; n_vars];
        for &(v, val) in fixed {
            assign[v] = Some(val);
        }
        Search { clauses, watch, assign, trail: Vec::new(), nodes: 0, bound }
    }

    /// Examines one clause: detects satisfaction, conflict, or a unit literal
    /// to force. Returns false on conflict.
    fn examine(&mut self, ci: usize) -> bool {
        let c = &self.clauses[ci];
        let mut unit: Option<(usize, bool)> = None;
        let mut open = 0usize;
        for &b in &c.body {
            match self.assign[b] {
                Some(false) => return true,
                Some(true) => {}
                None => {
                    open += 1;
                    unit = Some((b, false));
                }
            }
        }
        for &h in &c.head {
            match self.assign[h] {
                Some(true) => return true,
                Some(false) => {}
                None => {
                    open += 1;
                    unit = Some((h, true));
                }
            }
        }
        match open {
            0 => false,
            1 => {
                let (v, val) = unit.expect("one open literal");
                self.assign[v] = Some(val);
                self.trail.push(v);
                true
            }
            _ => true,
        }
    }

    /// Unit propagation over everything assigned since `from` on the trail.
    fn propagate(&mut self, mut from: usize) -> bool {
        while from < self.trail.len() {
            let v = self.trail[from];
            from += 1;
            for wi in 0..self.watch[v].len() {
                let ci = self.watch[v][wi];
                if !self.examine(ci) {
                    return false;
                }
            }
        }
        true
    }

    fn unwind(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("non-empty trail");
            self.assign[v] = None;
        }
    }

    pub fn run(&mut self) -> SearchOutcome {
        // Pinned variables and unit clauses seed the first propagation.
        for ci in 0..self.clauses.len() {
            if !self.examine(ci) {
                return SearchOutcome::Unsat;
            }
        }
        if !self.propagate(0) {
            return SearchOutcome::Unsat;
        }
        self.dfs(0)
    }

    fn dfs(&mut self, next: usize) -> SearchOutcome {
        self.nodes += 1;
        if self.nodes > self.bound {
            return SearchOutcome::BoundExceeded;
        }
        let mut idx = next;
        while idx < self.assign.len() && self.assign[idx].is_some() {
            idx += 1;
        }
        if idx == self.assign.len() {
            return SearchOutcome::Sat;
        }
        for value in [false, true] {
            let mark = self.trail.len();
            self.assign[idx] = Some(value);
            self.trail.push(idx);
            if self.propagate(mark) {
                match self.dfs(idx + 1) {
                    SearchOutcome::Sat => return SearchOutcome::Sat,
                    SearchOutcome::BoundExceeded => return SearchOutcome::BoundExceeded,
                    SearchOutcome::Unsat => {}
                }
            }
            self.unwind(mark);
        }
        SearchOutcome::Unsat
    }
}
