use std::collections::BTreeMap;

use thiserror::Error;

use super::BitString;
use crate::bitio::BitSource;

/// Widest lookup node the builder will materialize (2^24 slots).
pub const MAX_NODE_WIDTH: u32 = 24;

/// Slot contents of a lookup node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// No codeword starts with these bits.
    Fail,
    /// A complete match: entry index and how many of the node's bits the
    /// codeword actually uses.
    Leaf { entry: u32, consumed: u32 },
    /// A proper prefix of longer codewords; consume the node width and
    /// continue at the child node.
    Descend(u32),
}

/// One multi-bit lookup stage.
#[derive(Debug, Clone)]
pub struct Node {
    pub width: u32,
    pub slots: Vec<Outcome>,
    /// Entries completing at this node, shortest codeword first.
    pub leaves: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("step size {0} outside 1..=16")]
    InvalidStep(u32),
    #[error("map has no entries")]
    Empty,
    #[error("lookup node needs {0} bits, more than the supported {MAX_NODE_WIDTH}")]
    TooWide(u32),
}

/// No codeword matched at `position` (or the stream ended inside one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoMatch {
    pub position: u64,
}

/// Hybrid variable-length-code decoder.
///
/// Each node reads `max(step, shortest remaining codeword)` bits. Codewords
/// shorter than the node width fill every slot they prefix; the bits beyond
/// the codeword are only peeked, never consumed. Slots that are proper
/// prefixes of longer codewords descend to a child node.
#[derive(Debug, Clone)]
pub struct DecisionDag {
    nodes: Vec<Node>,
    step: u32,
    max_len: u32,
}

struct Pending {
    entry: u32,
    value: u64,
    len: u32,
}

impl DecisionDag {
    /// Builds the decoder. `codes` must already be prefix free.
    pub fn build(codes: &[BitString], step: u32) -> Result<Self, DagError> {
        if !(1..=16).contains(&step) {
            return Err(DagError::InvalidStep(step));
        }
        if codes.is_empty() {
            return Err(DagError::Empty);
        }
        let pending = codes
            .iter()
            .enumerate()
            .map(|(i, c)| Pending { entry: i as u32, value: c.value(), len: c.len() })
            .collect();
        let mut dag =
            DecisionDag { nodes: Vec::new(), step, max_len: codes.iter().map(|c| c.len()).max().unwrap_or(0) };
        dag.build_node(pending)?;
        Ok(dag)
    }

    fn build_node(&mut self, items: Vec<Pending>) -> Result<u32, DagError> {
        let shortest = items.iter().map(|p| p.len).min().unwrap_or(1);
        let width = self.step.max(shortest);
        if width > MAX_NODE_WIDTH {
            return Err(DagError::TooWide(width));
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { width, slots: vec![Outcome::Fail; 1usize << width], leaves: Vec::new() });

        let mut leaves = Vec::new();
        let mut groups: BTreeMap<u64, Vec<Pending>> = BTreeMap::new();
        for p in items {
            if p.len <= width {
                let spread = width - p.len;
                let base = (p.value << spread) as usize;
                let slots = &mut self.nodes[id as usize].slots;
                for s in &mut slots[base..base + (1usize << spread)] {
                    debug_assert_eq!(*s, Outcome::Fail, "codes are not prefix free");
                    *s = Outcome::Leaf { entry: p.entry, consumed: p.len };
                }
                leaves.push((p.len, p.entry));
            } else {
                let rest = p.len - width;
                let head = p.value >> rest;
                let tail = p.value & ((1u64 << rest) - 1);
                groups.entry(head).or_default().push(Pending { entry: p.entry, value: tail, len: rest });
            }
        }
        leaves.sort_unstable();
        self.nodes[id as usize].leaves = leaves.into_iter().map(|(_, e)| e).collect();
        for (head, group) in groups {
            let child = self.build_node(group)?;
            self.nodes[id as usize].slots[head as usize] = Outcome::Descend(child);
        }
        Ok(id)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn max_codeword_len(&self) -> u32 {
        self.max_len
    }

    pub fn slot_count(&self) -> usize {
        self.nodes.iter().map(|n| n.slots.len()).sum()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> u32 {
        fn walk(dag: &DecisionDag, node: u32) -> u32 {
            1 + dag.nodes[node as usize]
                .slots
                .iter()
                .filter_map(|s| match s {
                    Outcome::Descend(c) => Some(walk(dag, *c)),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
        }
        walk(self, 0)
    }

    /// Decodes one codeword, consuming exactly its bits on success. Returns
    /// the entry index and the codeword length.
    #[inline]
    pub fn decode<S: BitSource + ?Sized>(&self, src: &mut S) -> Result<(u32, u32), NoMatch> {
        let start = src.position();
        let mut node = &self.nodes[0];
        let mut total = 0u32;
        loop {
            let peek = src.peek_raw(node.width).map_err(|_| NoMatch { position: start })?;
            match node.slots[peek.value as usize] {
                Outcome::Leaf { entry, consumed } if consumed <= peek.available => {
                    src.skip(consumed as u64).map_err(|_| NoMatch { position: start })?;
                    return Ok((entry, total + consumed));
                }
                Outcome::Descend(child) if peek.available == node.width => {
                    src.skip(node.width as u64).map_err(|_| NoMatch { position: start })?;
                    total += node.width;
                    node = &self.nodes[child as usize];
                }
                _ => return Err(NoMatch { position: start }),
            }
        }
    }
}
