//! Seeded randomness: splittable ChaCha streams and an exhaustive enumerator.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A source of uniform choices that can hand out independent child streams.
pub trait Randomness {
    /// Uniform integer in `[0, bound)`; `bound ≥ 1`.
    fn below(&mut self, bound: u64) -> u64;

    /// A child stream determined by this stream's key and `index` only.
    fn child(&mut self, index: u64) -> Box<dyn Randomness + '_>;
}

/// Counter-based stream: draws come from ChaCha8 keyed by a 256-bit key, children derive
/// their keys from `(key, index)` without consuming the parent's draws.
pub struct SeededStream {
    key: [u8; 32],
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut key);
        Self::from_key(key)
    }

    fn from_key(key: [u8; 32]) -> Self {
        SeededStream { key, rng: ChaCha8Rng::from_seed(key) }
    }

    fn derive(&self, index: u64) -> SeededStream {
        let mut deriver = ChaCha8Rng::from_seed(self.key);
        // Stream 0 carries the parent's own draws; children live on streams 1, 2, …
        deriver.set_stream(index.wrapping_add(1));
        let mut key = [0u8; 32];
        deriver.fill_bytes(&mut key);
        Self::from_key(key)
    }
}

impl Randomness for SeededStream {
    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound >= 1, "empty range");
        self.rng.gen_range(0..bound)
    }

    fn child(&mut self, index: u64) -> Box<dyn Randomness + '_> {
        Box::new(self.derive(index))
    }
}

/// The seed of trial `k` under `master`; disjoint trials get independent streams.
pub fn trial_seed(master: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.next_u64()
}

/// Walks every outcome of a sampler's draws, depth first, as a mixed-radix odometer.
///
/// Bounds may depend on earlier outcomes; each completed walk has probability
/// `1 / Π bounds`.
pub struct Enumerator {
    path: Vec<(u64, u64)>,
    pos: usize,
}

struct Borrowed<'a>(&'a mut Enumerator);

impl Randomness for Borrowed<'_> {
    fn below(&mut self, bound: u64) -> u64 {
        self.0.below(bound)
    }
    fn child(&mut self, _index: u64) -> Box<dyn Randomness + '_> {
        Box::new(Borrowed(self.0))
    }
}

impl Randomness for Enumerator {
    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound >= 1, "empty range");
        let v = if self.pos < self.path.len() {
            let (v, b) = self.path[self.pos];
            assert_eq!(b, bound, "draw bounds must depend only on earlier outcomes");
            v
        } else {
            self.path.push((0, bound));
            0
        };
        self.pos += 1;
        v
    }

    fn child(&mut self, _index: u64) -> Box<dyn Randomness + '_> {
        Box::new(Borrowed(self))
    }
}

impl Enumerator {
    /// Runs `body` once per outcome, passing the outcome's probability denominator.
    /// Fails once more than `cap` outcomes would be visited.
    pub fn for_each<T>(
        cap: u64,
        mut body: impl FnMut(&mut dyn Randomness) -> T,
        mut visit: impl FnMut(T, u128),
    ) -> Result<u64> {
        let mut e = Enumerator { path: Vec::new(), pos: 0 };
        let mut visited = 0u64;
        loop {
            e.pos = 0;
            let out = body(&mut e);
            e.path.truncate(e.pos);
            visited += 1;
            if visited > cap {
                return Err(Error::Cap(format!("randomness space exceeds {cap} outcomes")));
            }
            let den = e.path.iter().try_fold(1u128, |acc, &(_, b)| acc.checked_mul(b as u128));
            let den = den.ok_or_else(|| Error::Cap("outcome probability below 2^-128".into()))?;
            visit(out, den);
            // Advance the odometer from the last position.
            while let Some(&(v, b)) = e.path.last() {
                if v + 1 < b {
                    e.path.last_mut().unwrap().0 += 1;
                    break;
                }
                e.path.pop();
            }
            if e.path.is_empty() {
                return Ok(visited);
            }
        }
    }
}

/// Exact sum of `count / den` terms, grouped by denominator.
#[derive(Clone, Debug, Default)]
pub struct ExactMass {
    parts: BTreeMap<u128, u64>,
}

impl ExactMass {
    pub fn add(&mut self, den: u128) {
        *self.parts.entry(den).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &ExactMass) {
        for (&d, &c) in &other.parts {
            *self.parts.entry(d).or_insert(0) += c;
        }
    }

    pub fn value(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (&d, &c) in &self.parts {
            acc += BigRational::new(BigInt::from(c), BigInt::from(d));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_children_independent_of_parent_draws() {
        let mut a = SeededStream::new(7);
        let mut b = SeededStream::new(7);
        let xs: Vec<u64> = (0..20).map(|_| a.below(1000)).collect();
        let ys: Vec<u64> = (0..20).map(|_| b.below(1000)).collect();
        assert_eq!(xs, ys);
        let c1: Vec<u64> = {
            let mut c = a.child(3);
            (0..10).map(|_| c.below(1 << 40)).collect()
        };
        let mut fresh = SeededStream::new(7);
        let c2: Vec<u64> = {
            let mut c = fresh.child(3);
            (0..10).map(|_| c.below(1 << 40)).collect()
        };
        assert_eq!(c1, c2);
        let other: Vec<u64> = {
            let mut c = fresh.child(4);
            (0..10).map(|_| c.below(1 << 40)).collect()
        };
        assert_ne!(c1, other);
    }

    #[test]
    fn trial_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|k| trial_seed(1, k)).collect();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn enumerator_visits_every_outcome_once() {
        let mut seen = Vec::new();
        let n = Enumerator::for_each(
            100,
            |r| {
                let a = r.below(2);
                // The second bound depends on the first outcome.
                let b = r.below(if a == 0 { 3 } else { 1 });
                (a, b)
            },
            |o, den| seen.push((o, den)),
        )
        .unwrap();
        assert_eq!(n, 4);
        assert_eq!(seen, vec![((0, 0), 6), ((0, 1), 6), ((0, 2), 6), ((1, 0), 2)]);
        let mut m = ExactMass::default();
        for (_, d) in &seen {
            m.add(*d);
        }
        assert_eq!(m.value(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn enumerator_respects_cap() {
        let r = Enumerator::for_each(10, |r| r.below(16), |_, _| {});
        assert!(matches!(r, Err(Error::Cap(_))));
    }
}
