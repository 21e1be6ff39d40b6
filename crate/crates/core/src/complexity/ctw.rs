//! Binary context-tree weighting with Krichevsky–Trofimov leaf estimators.
//!
//! The tree is stored in a flat arena; missing nodes behave as fresh nodes
//! (uniform prediction), so only visited paths are materialized. A
//! single-level checkpoint lets callers measure the cost of a string and
//! roll the model back afterwards.

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    child: [u32; 2],
    counts: [u32; 2],
    log_beta: f64,
}

impl Node {
    #[inline]
    fn kt_zero(&self) -> f64 {
        let [a, b] = self.counts;
        (a as f64 + 0.5) / (a as f64 + b as f64 + 1.0)
    }
}

#[derive(Debug, Clone)]
struct Checkpoint {
    nodes: usize,
    history: u64,
    seen: u64,
    journal: Vec<(u32, Node)>,
}

#[derive(Debug, Clone)]
pub struct CtwModel {
    depth: usize,
    nodes: Vec<Node>,
    history: u64,
    seen: u64,
    checkpoint: Option<Checkpoint>,
    path: Vec<u32>,
    pw: Vec<f64>,
}

pub const DEFAULT_DEPTH: usize = 20;
pub const MAX_DEPTH: usize = 48;

/// Converts a probability of `0` into the coder's 16-bit scale.
#[inline]
pub fn quantize(p0: f64) -> u16 {
    (p0 * 65536.0).round().clamp(1.0, 65535.0) as u16
}

impl CtwModel {
    pub fn new(depth: usize) -> Self {
        assert!(depth <= MAX_DEPTH, "context depth {depth} exceeds {MAX_DEPTH}");
        Self {
            depth,
            nodes: vec![Node::default()],
            history: 0,
            seen: 0,
            checkpoint: None,
            path: Vec::with_capacity(depth + 1),
            pw: vec![0.0; depth + 1],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn bits_seen(&self) -> u64 {
        self.seen
    }

    #[inline]
    fn context_bit(&self, d: usize) -> usize {
        ((self.history >> d) & 1) as usize
    }

    /// Weighted probability that the next bit is `0`.
    pub fn predict_zero(&self) -> f64 {
        let mut path = [0u32; MAX_DEPTH + 1];
        let mut len = 1;
        let mut cur = 0u32;
        for d in 0..self.depth {
            let next = self.nodes[cur as usize].child[self.context_bit(d)];
            if next == 0 {
                break;
            }
            path[len] = next;
            len += 1;
            cur = next;
        }
        let mut p = 0.5;
        let deepest = len - 1;
        for k in (0..len).rev() {
            let node = &self.nodes[path[k] as usize];
            let pe = node.kt_zero();
            p = if k == self.depth {
                pe
            } else if k == deepest {
                // children are fresh, so they predict 1/2
                let w = sigmoid(node.log_beta);
                w * pe + (1.0 - w) * 0.5
            } else {
                let w = sigmoid(node.log_beta);
                w * pe + (1.0 - w) * p
            };
        }
        p
    }

    pub fn quantized_zero(&self) -> u16 {
        quantize(self.predict_zero())
    }

    fn touch(&mut self, idx: u32) {
        if let Some(cp) = self.checkpoint.as_mut() {
            if (idx as usize) < cp.nodes {
                cp.journal.push((idx, self.nodes[idx as usize]));
            }
        }
    }

    /// Feeds one bit, updating counts and weights along the context path.
    pub fn update(&mut self, bit: bool) {
        self.path.clear();
        self.path.push(0);
        let mut cur = 0u32;
        for d in 0..self.depth {
            let c = self.context_bit(d);
            let mut next = self.nodes[cur as usize].child[c];
            if next == 0 {
                next = self.nodes.len() as u32;
                self.nodes.push(Node::default());
                self.touch(cur);
                self.nodes[cur as usize].child[c] = next;
            }
            self.path.push(next);
            cur = next;
        }

        let x = bit as usize;
        let mut p_child = 0.0;
        for k in (0..=self.depth).rev() {
            let idx = self.path[k];
            self.touch(idx);
            let node = &mut self.nodes[idx as usize];
            let pe0 = node.kt_zero();
            let pe_x = if bit { 1.0 - pe0 } else { pe0 };
            let pw0 = if k == self.depth {
                pe0
            } else {
                let w = sigmoid(node.log_beta);
                let pw0 = w * pe0 + (1.0 - w) * p_child;
                let pc_x = if bit { 1.0 - p_child } else { p_child };
                node.log_beta += pe_x.ln() - pc_x.ln();
                pw0
            };
            node.counts[x] += 1;
            self.pw[k] = pw0;
            p_child = pw0;
        }
        self.history = (self.history << 1) | x as u64;
        self.seen += 1;
    }

    /// Starts recording changes. Replaces any earlier checkpoint.
    pub fn checkpoint(&mut self) {
        self.checkpoint = Some(Checkpoint {
            nodes: self.nodes.len(),
            history: self.history,
            seen: self.seen,
            journal: Vec::new(),
        });
    }

    /// Restores the state saved by the last `checkpoint`.
    pub fn rollback(&mut self) {
        let Some(cp) = self.checkpoint.take() else { return };
        for (idx, node) in cp.journal.into_iter().rev() {
            self.nodes[idx as usize] = node;
        }
        self.nodes.truncate(cp.nodes);
        self.history = cp.history;
        self.seen = cp.seen;
    }

    /// Keeps all changes since the last checkpoint.
    pub fn commit(&mut self) {
        self.checkpoint = None;
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
