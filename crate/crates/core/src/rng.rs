//! Counter-based, splittable random streams.
//!
//! A stream is identified by `(seed, id)`. Its output is the ChaCha8 keystream
//! for that key and stream number, so the value drawn at a given word position
//! is a pure function of `(seed, id, counter)`. Child streams are derived by
//! hashing keys into a fresh stream id, which lets parallel workers draw from
//! independent streams without coordination.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(id);
        Self { seed, id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Child stream keyed by `key`. Independent of how much of `self` has been consumed.
    pub fn split(&self, key: u64) -> Self {
        Self::new(self.seed, mix(self.id ^ mix(key.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    /// Child stream keyed by a tuple of integers, e.g. (grid point, trial).
    pub fn split_many(&self, keys: &[u64]) -> Self {
        let mut id = self.id;
        for &k in keys {
            id = mix(id ^ mix(k.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        Self::new(self.seed, id)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_values() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 4);
        let mut c = RngStream::new(8, 3);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
    }

    #[test]
    fn split_ignores_parent_position() {
        let root = RngStream::new(1, 0);
        let mut used = root.clone();
        let _: f64 = used.gen();
        let mut a = root.split(5);
        let mut b = used.split(5);
        assert_eq!(a.next_u64(), b.next_u64());
        assert_ne!(root.split(5).next_u64(), root.split(6).next_u64());
        assert_ne!(
            root.split_many(&[1, 2]).next_u64(),
            root.split_many(&[2, 1]).next_u64()
        );
    }

    #[test]
    fn counter_advances() {
        let mut s = RngStream::new(0, 0);
        assert_eq!(s.counter(), 0);
        s.next_u64();
        assert_eq!(s.counter(), 2);
    }
}
