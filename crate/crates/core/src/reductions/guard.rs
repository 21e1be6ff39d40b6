use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{Action, Machine, MachineError};
use crate::complexity::{find_short_program, ComplexityOracle};

/// Interleaving of simulation and search steps, restarted with a search
/// turn for every output bit. A search step checks one length `m`; the
/// oracle reads it needs are not counted as steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSchedule {
    pub sim_steps: u32,
    pub search_steps: u32,
    /// Largest `m` the search will check.
    pub search_limit: u64,
}

impl Default for GuardSchedule {
    fn default() -> Self {
        Self { sim_steps: 1, search_steps: 1, search_limit: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCheck {
    /// Output bit being computed when the check ran.
    pub n: u64,
    pub m: u64,
    /// Length of the program found, if one was within `α′·m`.
    pub found: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardLog {
    pub checks: Vec<SearchCheck>,
    /// Per output bit: `None` if the simulated machine's bit was used,
    /// `Some(m)` if a short program for `S[0..m−1]` forced a 0.
    pub decisions: Vec<Option<u64>>,
}

impl GuardLog {
    /// First output bit forced to 0.
    pub fn first_zero(&self) -> Option<u64> {
        self.decisions.iter().position(Option::is_some).map(|k| k as u64)
    }

    /// First output bit computed when a check succeeded.
    pub fn first_success(&self) -> Option<&SearchCheck> {
        self.checks.iter().find(|c| c.found.is_some())
    }

    /// Largest `m` checked.
    pub fn cutoff(&self) -> u64 {
        self.checks.last().map_or(0, |c| c.m)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,m,found_len\n");
        for c in &self.checks {
            let f = c.found.map(|x| x.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{f}\n", c.n, c.m));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Inner,
    Fetch,
}

/// Simulates a machine while searching for short programs of longer
/// prefixes of the oracle. Output bit `n` is 0 once a program of at most
/// `⌊α′·m⌋` bits is known for some `S[0..m−1]` with `m > n`; otherwise it
/// is the simulated machine's bit `n`.
pub struct Guard {
    inner: Box<dyn Machine>,
    alpha_prime: Rational64,
    oracle: ComplexityOracle,
    schedule: GuardSchedule,
    pending: Option<Pending>,
    inner_answer: Option<bool>,
    inner_out: u64,
    n: u64,
    prefix: Vec<bool>,
    next_m: u64,
    positive: Option<u64>,
    searching: bool,
    turn_left: u32,
    log: GuardLog,
}

impl Guard {
    pub fn new(inner: Box<dyn Machine>, alpha_prime: Rational64, oracle: ComplexityOracle, schedule: GuardSchedule) -> Self {
        Self {
            inner,
            alpha_prime,
            oracle,
            schedule,
            pending: None,
            inner_answer: None,
            inner_out: 0,
            n: 0,
            prefix: Vec::new(),
            next_m: 1,
            positive: None,
            searching: schedule.search_steps > 0,
            turn_left: if schedule.search_steps > 0 { schedule.search_steps } else { schedule.sim_steps.max(1) },
            log: GuardLog::default(),
        }
    }

    pub fn log(&self) -> &GuardLog {
        &self.log
    }

    fn end_turn_step(&mut self) {
        self.turn_left = self.turn_left.saturating_sub(1);
        if self.turn_left == 0 {
            self.searching = !self.searching && self.schedule.search_steps > 0;
            self.turn_left = if self.searching { self.schedule.search_steps } else { self.schedule.sim_steps.max(1) };
        }
    }

    fn short_program(&self, m: u64) -> Option<u64> {
        let cap = (self.alpha_prime * m as i64).floor().to_integer().to_u64().unwrap_or(0);
        let w = &self.prefix[..m as usize];
        match self.oracle {
            ComplexityOracle::ExactToyMachine(c) => {
                find_short_program(w, cap, c.budget).program().map(|p| p.encoded_len())
            }
            ComplexityOracle::DictionaryProxy(_) => {
                let e = self.oracle.complexity(w);
                (e.bits <= cap).then_some(e.bits)
            }
        }
    }

    fn emit(&mut self, x: bool, forced: Option<u64>) -> Action {
        self.log.decisions.push(forced);
        self.n += 1;
        // each output bit starts its own race, search side first
        self.searching = self.schedule.search_steps > 0;
        self.turn_left = if self.searching { self.schedule.search_steps } else { self.schedule.sim_steps.max(1) };
        Action::Output(x)
    }
}

impl Machine for Guard {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        if let Some(x) = answer {
            match self.pending.take() {
                Some(Pending::Inner) => self.inner_answer = Some(x),
                Some(Pending::Fetch) => self.prefix.push(x),
                None => return Err(MachineError::Fault("answer without a query".into())),
            }
        }
        if let Some(m) = self.positive.filter(|&m| m > self.n) {
            return Ok(self.emit(false, Some(m)));
        }
        self.next_m = self.next_m.max(self.n + 1);
        let search_live = self.next_m <= self.schedule.search_limit;
        if self.searching && search_live {
            let m = self.next_m;
            if (self.prefix.len() as u64) < m {
                self.pending = Some(Pending::Fetch);
                return Ok(Action::Query(self.prefix.len() as u64));
            }
            let found = self.short_program(m);
            self.log.checks.push(SearchCheck { n: self.n, m, found });
            self.next_m += 1;
            if found.is_some() {
                self.positive = Some(m);
            }
            self.end_turn_step();
            return Ok(Action::Work);
        }
        let act = self
            .inner
            .step(self.inner_answer.take())
            .map_err(|e| MachineError::Layer { layer: "simulated", source: Box::new(e) })?;
        self.end_turn_step();
        Ok(match act {
            Action::Query(p) => {
                self.pending = Some(Pending::Inner);
                Action::Query(p)
            }
            Action::Output(x) => {
                let j = self.inner_out;
                self.inner_out += 1;
                if j == self.n {
                    self.emit(x, None)
                } else {
                    Action::Work
                }
            }
            Action::Work => Action::Work,
        })
    }
}
