//! Exact shortest-program search for the toy machine.
//!
//! A program producing `w` is a tiling of `w` by instruction outputs, so the
//! minimum program length is a shortest path over positions `0..=|w|`. For
//! each start position and target length only the cheapest instruction of
//! each opcode matters; for copy and repeat that is the one with the
//! smallest offset / distance that reaches the target, since field costs are
//! monotone in those values.

use super::gamma::gamma0_len;
use super::toy::{literal_program_len, Instruction, ToyProgram};

/// Result of a bounded search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    /// A shortest program of length at most the cap.
    Found(ToyProgram),
    /// The search completed and no program of length at most the cap exists.
    NotFound,
    /// The step budget ran out before the search completed. `best` is the
    /// shortest program seen so far, if any was within the cap.
    BudgetExhausted { best: Option<ToyProgram> },
}

impl SearchOutcome {
    pub fn program(&self) -> Option<&ToyProgram> {
        match self {
            SearchOutcome::Found(p) => Some(p),
            SearchOutcome::BudgetExhausted { best } => best.as_ref(),
            SearchOutcome::NotFound => None,
        }
    }
}

#[derive(Clone, Copy)]
enum Edge {
    Literal,
    Run,
    Copy(u64),
    Repeat(u64),
}

/// Finds a shortest program of length `<= max_len` that prints `w` with
/// copy source `context`. `budget` bounds the number of table cells and
/// relaxations evaluated.
pub fn shortest_program(w: &[bool], context: &[bool], max_len: u64, budget: u64) -> SearchOutcome {
    let n = w.len();
    let m = context.len();
    let mut steps: u64 = 0;
    macro_rules! tick {
        ($k:expr) => {
            steps = steps.saturating_add($k as u64);
            if steps > budget {
                return SearchOutcome::BudgetExhausted { best: None };
            }
        };
    }

    if max_len == 0 {
        return SearchOutcome::NotFound;
    }

    // run_len[i]: length of the constant run starting at i
    let mut run_len = vec![0usize; n + 1];
    for i in (0..n).rev() {
        run_len[i] = if i + 1 < n && w[i + 1] == w[i] { run_len[i + 1] + 1 } else { 1 };
    }

    // rep[d][i]: longest l with w[i+t] == w[i+t-d] for t < l (overlap allowed)
    tick!(n * n);
    let mut rep = vec![Vec::<u32>::new(); n + 1];
    for d in 1..n {
        let mut row = vec![0u32; n + 1];
        for i in (d..n).rev() {
            row[i] = if w[i] == w[i - d] { row[i + 1] + 1 } else { 0 };
        }
        rep[d] = row;
    }

    // cp[o][i]: longest l with w[i+t] == context[o+t]
    tick!(n * m);
    let mut cp = vec![Vec::<u32>::new(); m];
    for o in (0..m).rev() {
        let mut row = vec![0u32; n + 1];
        for i in (0..n).rev() {
            if w[i] == context[o] {
                let next = if o + 1 < m { cp[o + 1][i + 1] } else { 0 };
                row[i] = next + 1;
            }
        }
        cp[o] = row;
    }

    // dist[j]: cheapest instruction sequence (without the stop bit) for w[..j]
    const INF: u64 = u64::MAX;
    let limit = max_len - 1;
    let mut dist = vec![INF; n + 1];
    let mut back: Vec<(usize, Edge)> = vec![(0, Edge::Literal); n + 1];
    dist[0] = 0;

    for i in 0..n {
        let base = dist[i];
        if base == INF || base > limit {
            continue;
        }
        let mut relax = |j: usize, cost: u64, e: Edge, dist: &mut Vec<u64>| {
            let c = base + cost;
            if c <= limit && c < dist[j] {
                dist[j] = c;
                back[j] = (i, e);
            }
        };

        for l in 1..=n - i {
            let c = 3 + gamma0_len(l as u64) + l as u64;
            if base + c > limit {
                break;
            }
            tick!(1);
            relax(i + l, c, Edge::Literal, &mut dist);
        }

        for l in 1..=run_len[i] {
            tick!(1);
            relax(i + l, 4 + gamma0_len(l as u64), Edge::Run, &mut dist);
        }

        let mut reach = 0usize;
        for (d, row) in rep.iter().enumerate().take(i + 1).skip(1) {
            tick!(1);
            let r = row[i] as usize;
            if r > reach {
                let fixed = 3 + gamma0_len(d as u64 - 1);
                for l in reach + 1..=r {
                    tick!(1);
                    relax(i + l, fixed + gamma0_len(l as u64), Edge::Repeat(d as u64), &mut dist);
                }
                reach = r;
                if reach == n - i {
                    break;
                }
            }
        }

        let mut reach = 0usize;
        for (o, row) in cp.iter().enumerate() {
            tick!(1);
            let r = row[i] as usize;
            if r > reach {
                let fixed = 3 + gamma0_len(o as u64);
                for l in reach + 1..=r {
                    tick!(1);
                    relax(i + l, fixed + gamma0_len(l as u64), Edge::Copy(o as u64), &mut dist);
                }
                reach = r;
                if reach == n - i {
                    break;
                }
            }
        }
    }

    if dist[n] == INF {
        return SearchOutcome::NotFound;
    }
    let mut instructions = Vec::new();
    let mut j = n;
    while j > 0 {
        let (i, e) = back[j];
        let len = (j - i) as u64;
        instructions.push(match e {
            Edge::Literal => Instruction::Literal(w[i..j].to_vec()),
            Edge::Run => Instruction::Run { bit: w[i], len },
            Edge::Copy(offset) => Instruction::Copy { offset, len },
            Edge::Repeat(dist) => Instruction::Repeat { dist, len },
        });
        j = i;
    }
    instructions.reverse();
    let p = ToyProgram::new(instructions);
    debug_assert_eq!(p.encoded_len(), dist[n] + 1);
    SearchOutcome::Found(p)
}

/// Exact toy-machine complexity of `w` given `context`: the shortest program
/// length when one of at most `max_len` bits is found, else the literal
/// program length flagged as unconfirmed.
pub fn exact_complexity(w: &[bool], context: &[bool], max_len: u64, budget: u64) -> (u64, bool) {
    let literal = literal_program_len(w.len() as u64);
    match shortest_program(w, context, max_len, budget) {
        SearchOutcome::Found(p) => (p.encoded_len().min(literal), true),
        SearchOutcome::NotFound => (literal, literal <= max_len),
        SearchOutcome::BudgetExhausted { .. } => (literal, false),
    }
}
