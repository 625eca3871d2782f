use super::BitString;

/// Two codewords where the first is a prefix of (or equal to) the second or
/// vice versa. Indices are declaration positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixViolation {
    pub first: (usize, BitString),
    pub second: (usize, BitString),
}

#[derive(Default)]
struct TrieNode {
    children: [Option<u32>; 2],
    terminal: Option<usize>,
    min_below: usize,
}

/// Checks that no codeword is a prefix of another.
///
/// The reported pair is the earliest in declaration order: the smallest
/// second index `j` that conflicts with any earlier entry, paired with the
/// smallest such earlier index.
pub fn verify_prefix_free(codes: &[BitString]) -> Result<(), PrefixViolation> {
    let mut nodes: Vec<TrieNode> = vec![TrieNode { min_below: usize::MAX, ..Default::default() }];
    for (j, code) in codes.iter().enumerate() {
        let mut conflict = usize::MAX;
        let mut node = 0usize;
        let mut path = Vec::with_capacity(code.len() as usize + 1);
        path.push(0usize);
        for i in 0..code.len() {
            if let Some(t) = nodes[node].terminal {
                conflict = conflict.min(t);
            }
            let b = code.bit(i) as usize;
            node = match nodes[node].children[b] {
                Some(c) => c as usize,
                None => {
                    nodes.push(TrieNode { min_below: usize::MAX, ..Default::default() });
                    let id = nodes.len() - 1;
                    nodes[node].children[b] = Some(id as u32);
                    id
                }
            };
            path.push(node);
        }
        // codewords ending at or below this node have `code` as a prefix
        conflict = conflict.min(nodes[node].min_below);
        if conflict != usize::MAX {
            return Err(PrefixViolation { first: (conflict, codes[conflict]), second: (j, *code) });
        }
        nodes[node].terminal = Some(j);
        for &n in &path {
            nodes[n].min_below = nodes[n].min_below.min(j);
        }
    }
    Ok(())
}
