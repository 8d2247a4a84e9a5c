// SPDX-License-Identifier: MIT
//! Small deterministic helpers shared across modules.

use alloc::vec::Vec;

/// Iterator over k-subsets of `items` in lexicographic order.
/// `items` must be sorted if lexicographic order of values is required.
pub(crate) struct Combinations<'a> {
    items: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Combinations<'a> {
    pub(crate) fn new(items: &'a [usize], k: usize) -> Self {
        let done = k > items.len();
        Combinations {
            items,
            idx: (0..k).collect(),
            done,
        }
    }
}

impl<'a> Iterator for Combinations<'a> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out: Vec<usize> = self.idx.iter().map(|&i| self.items[i]).collect();
        // advance the rightmost index that can still move
        let k = self.idx.len();
        let n = self.items.len();
        if k == 0 {
            self.done = true;
            return Some(out);
        }
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] + 1 <= n - (k - i) {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// splitmix64; used to derive independent RNG streams from one master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
