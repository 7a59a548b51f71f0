//! CNF, Tseitin encoding, and a complete DPLL decision procedure.
//!
//! The solver does unit propagation over two watched literals with
//! chronological backtracking, pure-literal elimination as preprocessing,
//! and a fixed branching order (lowest unassigned variable, true first) so
//! runs are deterministic. No clause learning: the robustness queries this
//! engine serves are small, and a solver simple enough to audit is worth
//! more here than raw speed. Every SAT answer is re-checked against the
//! original clauses before it is returned.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::circuit::{Circuit, Gate};
use crate::{Error, Result};

/// Clause database over variables `1..=num_vars`; literals are nonzero
/// signed integers in the usual DIMACS convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    empty_clause: bool,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            clauses: Vec::new(),
            empty_clause: false,
        }
    }

    /// Add a clause. An empty clause flags the formula as trivially
    /// unsatisfiable rather than being stored.
    pub fn add_clause(&mut self, lits: Vec<i32>) -> Result<()> {
        if lits.is_empty() {
            self.empty_clause = true;
            return Ok(());
        }
        for &lit in &lits {
            if lit == 0 || lit.unsigned_abs() as usize > self.num_vars {
                return Err(Error::Invalid {
                    what: "clause",
                    detail: format!("literal {lit} outside declared variables"),
                });
            }
        }
        self.clauses.push(lits);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn has_empty_clause(&self) -> bool {
        self.empty_clause
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut lits: Vec<i32> = Vec::new();
        let mut cnf = Cnf::new(0);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let mut parts = rest.split_whitespace();
                if parts.next() != Some("cnf") {
                    return Err(Error::Parse("expected `p cnf <vars> <clauses>`".into()));
                }
                let vars = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse("bad variable count".into()))?;
                let count = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse("bad clause count".into()))?;
                header = Some((vars, count));
                cnf = Cnf::new(vars);
                continue;
            }
            if header.is_none() {
                return Err(Error::Parse("clause before the problem line".into()));
            }
            for token in line.split_whitespace() {
                let lit: i32 = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad literal {token:?}")))?;
                if lit == 0 {
                    cnf.add_clause(std::mem::take(&mut lits))?;
                } else {
                    lits.push(lit);
                }
            }
        }
        if !lits.is_empty() {
            return Err(Error::Parse("unterminated final clause".into()));
        }
        let (_, declared) = header.ok_or_else(|| Error::Parse("missing problem line".into()))?;
        if cnf.clauses.len() != declared {
            return Err(Error::Parse(format!(
                "header declares {declared} clauses, found {}",
                cnf.clauses.len()
            )));
        }
        Ok(cnf)
    }
}

/// Tseitin encoding of a circuit together with the variable map back into
/// circuit land.
#[derive(Debug, Clone)]
pub struct CnfEncoding {
    pub cnf: Cnf,
    /// DIMACS variable per circuit input, in input order.
    pub input_vars: Vec<i32>,
    /// DIMACS variable per gate (var gates alias their input variable).
    pub gate_vars: Vec<i32>,
    pub output_var: i32,
}

impl CnfEncoding {
    /// Project a solver model onto the circuit inputs (true ↦ +1 side).
    pub fn inputs_from_model(&self, model: &[bool]) -> Vec<bool> {
        self.input_vars
            .iter()
            .map(|&v| model[(v - 1) as usize])
            .collect()
    }
}

/// Equisatisfiable CNF with one auxiliary variable per gate and a unit
/// clause asserting the output, so models project exactly onto the
/// circuit's satisfying inputs.
pub fn tseitin(circuit: &Circuit) -> Result<CnfEncoding> {
    circuit.validate()?;
    let n_inputs = circuit.inputs().len();
    let input_vars: Vec<i32> = (1..=n_inputs as i32).collect();
    let mut next_var = n_inputs as i32;
    let mut gate_vars = Vec::with_capacity(circuit.gates().len());
    // First pass: allocate variables (var gates alias inputs).
    for gate in circuit.gates() {
        let v = match gate {
            Gate::Var(i) => input_vars[*i],
            _ => {
                next_var += 1;
                next_var
            }
        };
        gate_vars.push(v);
    }
    let mut cnf = Cnf::new(next_var as usize);
    for (idx, gate) in circuit.gates().iter().enumerate() {
        let v = gate_vars[idx];
        match gate {
            Gate::Var(_) => {}
            Gate::Const(c) => {
                cnf.add_clause(vec![if *c { v } else { -v }])?;
            }
            Gate::Not(a) => {
                let a = gate_vars[*a];
                cnf.add_clause(vec![v, a])?;
                cnf.add_clause(vec![-v, -a])?;
            }
            Gate::And(ins) => {
                let mut long = Vec::with_capacity(ins.len() + 1);
                for &i in ins {
                    let a = gate_vars[i];
                    cnf.add_clause(vec![-v, a])?;
                    long.push(-a);
                }
                long.push(v);
                cnf.add_clause(long)?;
            }
            Gate::Or(ins) => {
                let mut long = Vec::with_capacity(ins.len() + 1);
                for &i in ins {
                    let a = gate_vars[i];
                    cnf.add_clause(vec![v, -a])?;
                    long.push(a);
                }
                long.push(-v);
                cnf.add_clause(long)?;
            }
        }
    }
    let output_var = gate_vars[circuit.output()];
    cnf.add_clause(vec![output_var])?;
    Ok(CnfEncoding {
        cnf,
        input_vars,
        gate_vars,
        output_var,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SatOutcome {
    /// Model indexed by variable (position `v-1` holds variable `v`).
    Sat(Vec<bool>),
    Unsat,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub timeout: Option<Duration>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            timeout: Some(Duration::from_secs(60)),
        }
    }
}

pub fn solve(cnf: &Cnf) -> SatOutcome {
    solve_with_config(cnf, &SolveConfig::default())
}

pub fn solve_with_config(cnf: &Cnf, config: &SolveConfig) -> SatOutcome {
    if cnf.has_empty_clause() {
        return SatOutcome::Unsat;
    }
    let outcome = Solver::new(cnf, config).run();
    if let SatOutcome::Sat(model) = &outcome {
        debug_assert_eq!(model.len(), cnf.num_vars());
        // A model that fails the original clauses is a solver bug; refuse
        // to return it.
        for clause in cnf.clauses() {
            let ok = clause
                .iter()
                .any(|&lit| model[(lit.unsigned_abs() - 1) as usize] == (lit > 0));
            assert!(ok, "solver produced a non-model");
        }
    }
    outcome
}

fn code(lit: i32) -> usize {
    ((lit.unsigned_abs() - 1) as usize) * 2 + usize::from(lit < 0)
}

struct DecisionFrame {
    var: usize, // 0-based
    trail_pos: usize,
    flipped: bool,
}

struct Solver {
    /// Working clause DB: deduplicated, tautologies and pure-satisfied
    /// clauses dropped. Watched literals sit at positions 0 and 1.
    db: Vec<Vec<i32>>,
    watches: Vec<Vec<usize>>,
    assignment: Vec<Option<bool>>,
    trail: Vec<i32>,
    qhead: usize,
    decisions: Vec<DecisionFrame>,
    initial_units: Vec<i32>,
    conflict_at_init: bool,
    deadline: Option<Instant>,
    steps: u32,
}

impl Solver {
    fn new(cnf: &Cnf, config: &SolveConfig) -> Self {
        let num_vars = cnf.num_vars();
        // Dedup literals; drop tautologies.
        let mut db: Vec<Vec<i32>> = Vec::with_capacity(cnf.clauses().len());
        for clause in cnf.clauses() {
            let mut lits = clause.clone();
            lits.sort_unstable_by_key(|l| (l.unsigned_abs(), *l < 0));
            lits.dedup();
            let tautology = lits.windows(2).any(|w| w[0] == -w[1]);
            if !tautology {
                db.push(lits);
            }
        }

        // Pure-literal elimination to fixpoint: a variable appearing with a
        // single polarity is forced and its clauses dropped.
        let mut active = vec![true; db.len()];
        let mut forced: Vec<i32> = Vec::new();
        let mut forced_mask = vec![false; num_vars];
        loop {
            let mut occurs = vec![[false; 2]; num_vars];
            for (ci, clause) in db.iter().enumerate() {
                if active[ci] {
                    for &lit in clause {
                        occurs[(lit.unsigned_abs() - 1) as usize][usize::from(lit < 0)] = true;
                    }
                }
            }
            let mut pures = Vec::new();
            for v in 0..num_vars {
                if forced_mask[v] {
                    continue;
                }
                match occurs[v] {
                    [true, false] => pures.push((v as i32) + 1),
                    [false, true] => pures.push(-((v as i32) + 1)),
                    _ => {}
                }
            }
            if pures.is_empty() {
                break;
            }
            for &lit in &pures {
                forced_mask[(lit.unsigned_abs() - 1) as usize] = true;
                forced.push(lit);
            }
            for (ci, clause) in db.iter().enumerate() {
                if active[ci] && clause.iter().any(|l| pures.contains(l)) {
                    active[ci] = false;
                }
            }
        }
        let db: Vec<Vec<i32>> = db
            .into_iter()
            .zip(active)
            .filter_map(|(c, keep)| keep.then_some(c))
            .collect();

        let mut watches = vec![Vec::new(); num_vars * 2];
        let mut initial_units = forced;
        for (ci, clause) in db.iter().enumerate() {
            if clause.len() == 1 {
                initial_units.push(clause[0]);
            } else {
                watches[code(clause[0])].push(ci);
                watches[code(clause[1])].push(ci);
            }
        }

        Solver {
            db,
            watches,
            assignment: vec![None; num_vars],
            trail: Vec::new(),
            qhead: 0,
            decisions: Vec::new(),
            initial_units,
            conflict_at_init: false,
            deadline: config.timeout.map(|t| Instant::now() + t),
            steps: 0,
        }
    }

    fn value(&self, lit: i32) -> Option<bool> {
        self.assignment[(lit.unsigned_abs() - 1) as usize].map(|v| v == (lit > 0))
    }

    fn assign(&mut self, lit: i32) {
        self.assignment[(lit.unsigned_abs() - 1) as usize] = Some(lit > 0);
        self.trail.push(lit);
    }

    fn run(mut self) -> SatOutcome {
        let units = std::mem::take(&mut self.initial_units);
        for lit in units {
            match self.value(lit) {
                Some(false) => self.conflict_at_init = true,
                Some(true) => {}
                None => self.assign(lit),
            }
        }
        if self.conflict_at_init {
            return SatOutcome::Unsat;
        }
        loop {
            self.steps = self.steps.wrapping_add(1);
            if self.steps % 1024 == 0 {
                if let Some(deadline) = self.deadline {
                    if Instant::now() > deadline {
                        return SatOutcome::Timeout;
                    }
                }
            }
            if self.propagate().is_some() {
                if !self.backtrack() {
                    return SatOutcome::Unsat;
                }
                continue;
            }
            // Branch on the lowest unassigned variable, true first.
            match self.assignment.iter().position(Option::is_none) {
                None => {
                    let model = self
                        .assignment
                        .iter()
                        .map(|v| v.expect("complete assignment"))
                        .collect();
                    return SatOutcome::Sat(model);
                }
                Some(var) => {
                    self.decisions.push(DecisionFrame {
                        var,
                        trail_pos: self.trail.len(),
                        flipped: false,
                    });
                    self.assign((var as i32) + 1);
                }
            }
        }
    }

    /// Unit propagation over watched literals; returns a conflicting clause.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let lit = self.trail[self.qhead];
            self.qhead += 1;
            let falsified = -lit;
            let watch_code = code(falsified);
            let mut i = 0;
            while i < self.watches[watch_code].len() {
                let ci = self.watches[watch_code][i];
                // Normalize: the falsified watch sits at position 1.
                if self.db[ci][0] == falsified {
                    self.db[ci].swap(0, 1);
                }
                let other = self.db[ci][0];
                if self.value(other) == Some(true) {
                    i += 1;
                    continue;
                }
                // Look for a replacement watch.
                let replacement = (2..self.db[ci].len())
                    .find(|&j| self.value(self.db[ci][j]) != Some(false));
                match replacement {
                    Some(j) => {
                        self.db[ci].swap(1, j);
                        let new_watch = self.db[ci][1];
                        self.watches[code(new_watch)].push(ci);
                        self.watches[watch_code].swap_remove(i);
                    }
                    None => match self.value(other) {
                        Some(false) => return Some(ci),
                        None => {
                            self.assign(other);
                            i += 1;
                        }
                        Some(true) => unreachable!("handled above"),
                    },
                }
            }
        }
        None
    }

    /// Chronological backtracking: rewind to the deepest decision whose
    /// second polarity is untried and flip it.
    fn backtrack(&mut self) -> bool {
        while let Some(frame) = self.decisions.pop() {
            while self.trail.len() > frame.trail_pos {
                let lit = self.trail.pop().unwrap();
                self.assignment[(lit.unsigned_abs() - 1) as usize] = None;
            }
            self.qhead = self.trail.len();
            if !frame.flipped {
                let var = frame.var;
                self.decisions.push(DecisionFrame {
                    var,
                    trail_pos: self.trail.len(),
                    flipped: true,
                });
                self.assign(-((var as i32) + 1));
                return true;
            }
        }
        false
    }
}
