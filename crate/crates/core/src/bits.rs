//! Fixed-size bitsets and a dense adjacency bit matrix for hot loops.

use crate::graphcore::Graph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_iter_len(len: usize, items: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn full(len: usize) -> Self {
        let mut s = BitSet::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn intersect_with(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a &= *b;
        }
    }

    pub fn union_with(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a |= *b;
        }
    }

    pub fn difference_with(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a &= !*b;
        }
    }

    /// |self ∩ other| without allocating.
    pub fn and_count(&self, other: &[u64]) -> usize {
        and_count(&self.words, other)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

#[inline]
pub fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// Row-major n×n adjacency bit matrix.
#[derive(Debug, Clone)]
pub struct BitMatrix {
    n: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let stride = n.div_ceil(64);
        BitMatrix { n, stride, data: vec![0; n * stride] }
    }

    pub fn from_graph(g: &Graph) -> Self {
        let mut m = BitMatrix::new(g.n());
        for u in 0..g.n() {
            for &v in g.neighbors(u) {
                m.set(u, v);
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize) {
        self.data[u * self.stride + (v >> 6)] |= 1u64 << (v & 63);
    }

    #[inline]
    pub fn unset(&mut self, u: usize, v: usize) {
        self.data[u * self.stride + (v >> 6)] &= !(1u64 << (v & 63));
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        (self.data[u * self.stride + (v >> 6)] >> (v & 63)) & 1 == 1
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.data[u * self.stride..(u + 1) * self.stride]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_roundtrip() {
        let s = BitSet::from_iter_len(130, [0, 5, 64, 129]);
        assert_eq!(s.to_vec(), vec![0, 5, 64, 129]);
        assert_eq!(s.count(), 4);
        assert!(s.contains(64) && !s.contains(63));
        let t = BitSet::from_iter_len(130, [5, 129, 7]);
        assert_eq!(s.and_count(t.words()), 2);
    }

    #[test]
    fn difference_and_union() {
        let mut s = BitSet::full(70);
        let t = BitSet::from_iter_len(70, 0..69);
        s.difference_with(t.words());
        assert_eq!(s.to_vec(), vec![69]);
        s.union_with(BitSet::from_iter_len(70, [1]).words());
        assert_eq!(s.to_vec(), vec![1, 69]);
    }
}
