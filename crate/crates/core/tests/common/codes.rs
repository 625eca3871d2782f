//! Random prefix-free codes and the reference implementations the VLC
//! machinery is compared against.

use bitsyn::vlcmap::BitString;
use rand::seq::SliceRandom;
use rand::Rng;

pub const MAX_LEN: u32 = 24;

/// A random prefix-free code with up to `max_entries` codewords no longer
/// than [`MAX_LEN`] bits. Grown by splitting leaves of a binary tree, with a
/// bias towards the most recent leaf so that long codewords are common; some
/// leaves are then dropped so that not every bit pattern decodes.
pub fn random_code<R: Rng>(rng: &mut R, max_entries: usize) -> Vec<BitString> {
    let n = rng.gen_range(2..=max_entries);
    let min_len = usize::BITS - (n - 1).leading_zeros();
    let lmax = rng.gen_range(min_len.max(1)..=MAX_LEN);
    let mut leaves: Vec<(u64, u32)> = vec![(0, 1), (1, 1)];
    while leaves.len() < n {
        let i = if rng.gen_bool(0.3) { leaves.len() - 1 } else { rng.gen_range(0..leaves.len()) };
        let (v, l) = leaves[i];
        if l >= lmax {
            continue;
        }
        leaves[i] = (v << 1, l + 1);
        leaves.push((v << 1 | 1, l + 1));
    }
    if rng.gen_bool(0.5) {
        let drop = rng.gen_range(0..=leaves.len() / 10);
        for _ in 0..drop {
            if leaves.len() > 2 {
                let i = rng.gen_range(0..leaves.len());
                leaves.swap_remove(i);
            }
        }
    }
    leaves.shuffle(rng);
    leaves.into_iter().map(|(v, l)| BitString::new(v, l).expect("valid codeword")).collect()
}

/// Plain bit-at-a-time binary trie.
pub struct TreeDecoder {
    children: Vec<[u32; 2]>,
    entry: Vec<Option<u32>>,
}

impl TreeDecoder {
    pub fn new(codes: &[BitString]) -> Self {
        let mut t = TreeDecoder { children: vec![[0, 0]], entry: vec![None] };
        for (k, c) in codes.iter().enumerate() {
            let mut node = 0usize;
            for i in (0..c.len()).rev() {
                let b = (c.value() >> i & 1) as usize;
                if t.children[node][b] == 0 {
                    t.children.push([0, 0]);
                    t.entry.push(None);
                    t.children[node][b] = (t.children.len() - 1) as u32;
                }
                node = t.children[node][b] as usize;
            }
            t.entry[node] = Some(k as u32);
        }
        t
    }

    /// Decodes at bit `start` of `data`, seeing only bits before `end`.
    /// Returns the entry index and codeword length.
    pub fn decode(&self, data: &[u8], start: u64, end: u64) -> Option<(u32, u32)> {
        let mut node = 0usize;
        let mut i = start;
        loop {
            if let Some(e) = self.entry[node] {
                return Some((e, (i - start) as u32));
            }
            if i == end {
                return None;
            }
            let b = (data[(i / 8) as usize] >> (7 - i % 8) & 1) as usize;
            match self.children[node][b] {
                0 => return None,
                c => node = c as usize,
            }
            i += 1;
        }
    }
}

fn is_prefix(a: &BitString, b: &BitString) -> bool {
    a.len() <= b.len() && b.value() >> (b.len() - a.len()) == a.value()
}

/// Every conflicting pair `(i, j)`, `i < j`, by comparing all pairs.
pub fn brute_force_violations(codes: &[BitString]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..codes.len() {
        for i in 0..j {
            if is_prefix(&codes[i], &codes[j]) || is_prefix(&codes[j], &codes[i]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Inserts one codeword that is a proper prefix or a proper extension of an
/// existing one. Returns the new code and the inserted index.
pub fn inject_prefix<R: Rng>(rng: &mut R, codes: &[BitString]) -> (Vec<BitString>, usize) {
    let c = codes[rng.gen_range(0..codes.len())];
    let shorten = c.len() == MAX_LEN || (c.len() > 1 && rng.gen_bool(0.5));
    let w = if shorten {
        let l = rng.gen_range(1..c.len());
        BitString::new(c.value() >> (c.len() - l), l)
    } else {
        let extra = rng.gen_range(1..=(MAX_LEN - c.len()).min(4));
        BitString::new(c.value() << extra | rng.gen_range(0..1u64 << extra), c.len() + extra)
    }
    .expect("valid codeword");
    let mut out = codes.to_vec();
    let at = rng.gen_range(0..=out.len());
    out.insert(at, w);
    (out, at)
}
