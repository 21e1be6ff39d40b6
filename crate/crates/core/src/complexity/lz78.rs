//! Incremental-parsing (LZ78) coder over bits.
//!
//! Each phrase is a pointer to an existing dictionary node, written in
//! `ceil_log2(dict_size)` bits, followed by one extension bit that creates a
//! new node. When the input ends inside the dictionary the last phrase is a
//! bare pointer; the decoder knows the output length and so knows when that
//! happens.

use super::gamma::{ceil_log2, write_uint, BitReadError, BitReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LzError {
    #[error(transparent)]
    Read(#[from] BitReadError),
    #[error("pointer {0} outside dictionary")]
    BadPointer(u64),
    #[error("phrase of {depth} bits exceeds the {remaining} bits still expected")]
    Overrun { depth: u32, remaining: u64 },
    #[error("phrase extends node {0} with an existing child")]
    DuplicateChild(u64),
    #[error("{0} trailing bits after the last phrase")]
    Trailing(usize),
}

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    child: [u32; 2],
    parent: u32,
    depth: u32,
    bit: bool,
}

#[derive(Debug, Clone)]
struct Checkpoint {
    nodes: usize,
    links: Vec<(u32, usize)>,
}

#[derive(Debug, Clone)]
pub struct Lz78Dict {
    nodes: Vec<Node>,
    checkpoint: Option<Checkpoint>,
}

impl Default for Lz78Dict {
    fn default() -> Self {
        Self::new()
    }
}

impl Lz78Dict {
    pub fn new() -> Self {
        Self { nodes: vec![Node::default()], checkpoint: None }
    }

    /// Number of nodes including the root.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pointer_width(&self) -> u32 {
        ceil_log2(self.nodes.len() as u64)
    }

    fn child(&self, node: u32, bit: bool) -> u32 {
        self.nodes[node as usize].child[bit as usize]
    }

    fn add_child(&mut self, parent: u32, bit: bool) -> u32 {
        let idx = self.nodes.len() as u32;
        let depth = self.nodes[parent as usize].depth + 1;
        self.nodes.push(Node { child: [0, 0], parent, depth, bit });
        if let Some(cp) = self.checkpoint.as_mut() {
            if (parent as usize) < cp.nodes {
                cp.links.push((parent, bit as usize));
            }
        }
        self.nodes[parent as usize].child[bit as usize] = idx;
        idx
    }

    fn phrase(&self, mut node: u32) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.nodes[node as usize].depth as usize);
        while node != 0 {
            let n = &self.nodes[node as usize];
            out.push(n.bit);
            node = n.parent;
        }
        out.reverse();
        out
    }

    pub fn checkpoint(&mut self) {
        self.checkpoint = Some(Checkpoint { nodes: self.nodes.len(), links: Vec::new() });
    }

    pub fn rollback(&mut self) {
        let Some(cp) = self.checkpoint.take() else { return };
        for (parent, bit) in cp.links {
            self.nodes[parent as usize].child[bit] = 0;
        }
        self.nodes.truncate(cp.nodes);
    }

    pub fn commit(&mut self) {
        self.checkpoint = None;
    }

    /// Parses `w` from the root, growing the dictionary, without producing
    /// output.
    pub fn absorb(&mut self, w: &[bool]) {
        let mut p = Lz78Parser::new();
        for &b in w {
            p.push(self, b, None);
        }
    }

    /// Encodes `w`, growing the dictionary.
    pub fn encode(&mut self, w: &[bool]) -> Vec<bool> {
        let mut out = Vec::new();
        let mut p = Lz78Parser::new();
        for &b in w {
            p.push(self, b, Some(&mut out));
        }
        p.finish(self, Some(&mut out));
        out
    }

    /// Decodes exactly `n` bits from `code`, growing the dictionary. The
    /// whole of `code` must be consumed.
    pub fn decode(&mut self, code: &[bool], n: u64) -> Result<Vec<bool>, LzError> {
        let mut r = BitReader::new(code);
        let mut out = Vec::with_capacity(n as usize);
        while (out.len() as u64) < n {
            let remaining = n - out.len() as u64;
            let ptr = r.read_uint(self.pointer_width())?;
            if ptr >= self.nodes.len() as u64 {
                return Err(LzError::BadPointer(ptr));
            }
            let depth = self.nodes[ptr as usize].depth;
            if depth as u64 > remaining {
                return Err(LzError::Overrun { depth, remaining });
            }
            out.extend(self.phrase(ptr as u32));
            if depth as u64 == remaining {
                break;
            }
            let bit = r.read_bit()?;
            if self.child(ptr as u32, bit) != 0 {
                return Err(LzError::DuplicateChild(ptr));
            }
            self.add_child(ptr as u32, bit);
            out.push(bit);
        }
        if !r.is_empty() {
            return Err(LzError::Trailing(r.remaining()));
        }
        Ok(out)
    }
}

/// Streaming parse state: the current match node plus the running code
/// length of completed phrases.
#[derive(Debug, Clone, Default)]
pub struct Lz78Parser {
    node: u32,
    emitted: u64,
}

impl Lz78Parser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, dict: &mut Lz78Dict, bit: bool, out: Option<&mut Vec<bool>>) {
        let next = dict.child(self.node, bit);
        if next != 0 {
            self.node = next;
            return;
        }
        let width = dict.pointer_width();
        if let Some(out) = out {
            write_uint(out, self.node as u64, width);
            out.push(bit);
        }
        self.emitted += width as u64 + 1;
        dict.add_child(self.node, bit);
        self.node = 0;
    }

    /// Code length if the input ended now.
    pub fn prefix_cost(&self, dict: &Lz78Dict) -> u64 {
        self.emitted + if self.node != 0 { dict.pointer_width() as u64 } else { 0 }
    }

    pub fn finish(self, dict: &Lz78Dict, out: Option<&mut Vec<bool>>) -> u64 {
        if self.node != 0 {
            if let Some(out) = out {
                write_uint(out, self.node as u64, dict.pointer_width());
            }
        }
        self.prefix_cost(dict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn hand_parse() {
        // phrases: 0 | 1 | 00 | 01 | 0(final, pointer only)
        let w = bits("0100010");
        let code = Lz78Dict::new().encode(&w);
        // widths: dict sizes 1,2,3,4,5 -> 0,1,2,2,3 bits
        // (0)0 (0)1 (01)0 (01)1 (001)
        assert_eq!(code, bits("0_01_010_011_001".replace('_', "").as_str()));
        assert_eq!(Lz78Dict::new().decode(&code, 7).unwrap(), w);
    }

    #[test]
    fn rejects_malformed() {
        let mut d = Lz78Dict::new();
        assert!(matches!(d.decode(&bits("1"), 1), Ok(v) if v == bits("1")));
        assert!(matches!(Lz78Dict::new().decode(&bits("10"), 1), Err(LzError::Trailing(1))));
        assert!(matches!(Lz78Dict::new().decode(&bits(""), 1), Err(LzError::Read(_))));
        // pointer 2 names "00" but only 1 bit remains
        let mut d = Lz78Dict::new();
        d.absorb(&bits("000"));
        assert!(matches!(d.decode(&bits("10"), 1), Err(LzError::Overrun { .. })));
        assert!(matches!(Lz78Dict::new().decode(&bits("00111"), 5), Err(LzError::BadPointer(3))));
        assert!(matches!(Lz78Dict::new().decode(&bits("0000"), 3), Err(LzError::DuplicateChild(0))));
    }

    #[test]
    fn rollback_restores_dictionary() {
        let mut d = Lz78Dict::new();
        d.absorb(&bits("0110100110010110"));
        let snapshot = d.clone();
        d.checkpoint();
        let code = d.encode(&bits("111111000000101"));
        d.rollback();
        assert_eq!(d.len(), snapshot.len());
        let mut e = snapshot.clone();
        assert_eq!(d.encode(&bits("111111000000101")), e.encode(&bits("111111000000101")));
        assert_eq!(d.len(), e.len());
        let _ = code;
    }

    proptest! {
        #[test]
        fn roundtrip_with_priming(ctx in prop::collection::vec(any::<bool>(), 0..300),
                                  w in prop::collection::vec(any::<bool>(), 0..300)) {
            let mut enc = Lz78Dict::new();
            enc.absorb(&ctx);
            let mut meter = enc.clone();
            let code = enc.encode(&w);
            let mut p = Lz78Parser::new();
            for &b in &w {
                p.push(&mut meter, b, None);
            }
            prop_assert_eq!(p.prefix_cost(&meter), code.len() as u64);
            let mut dec = Lz78Dict::new();
            dec.absorb(&ctx);
            prop_assert_eq!(dec.decode(&code, w.len() as u64).unwrap(), w);
        }
    }
}
