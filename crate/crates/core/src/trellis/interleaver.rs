use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Fixed permutation with `out[i] = in[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn random(len: usize, seed: u64) -> Self {
        Self::random_with(len, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn random_with<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(rng);
        Self::from_permutation(perm).expect("shuffle yields a permutation")
    }

    pub fn identity(len: usize) -> Self {
        Self::from_permutation((0..len).collect()).expect("identity is a permutation")
    }

    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            if p >= perm.len() || inverse[p] != usize::MAX {
                return Err(Error::InvalidSpan(format!("not a permutation: entry {p} at {i}")));
            }
            inverse[p] = i;
        }
        Ok(Self { perm, inverse })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, s: &[T]) -> Result<Vec<T>> {
        self.check(s.len())?;
        Ok(self.perm.iter().map(|&p| s[p]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, s: &[T]) -> Result<Vec<T>> {
        self.check(s.len())?;
        Ok(self.inverse.iter().map(|&p| s[p]).collect())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len == self.perm.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.perm.len(),
                actual: len,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let il = Interleaver::random(4100, 9);
        let s: Vec<u32> = (0..4100).map(|i| i * 3 + 1).collect();
        let t = il.interleave(&s).unwrap();
        assert_ne!(t, s);
        assert_eq!(il.deinterleave(&t).unwrap(), s);
        assert_eq!(il.interleave(&il.deinterleave(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn identity_and_seeding() {
        let s = [5, 4, 3];
        assert_eq!(Interleaver::identity(3).interleave(&s).unwrap(), s);
        assert_eq!(Interleaver::random(64, 3), Interleaver::random(64, 3));
        assert_ne!(Interleaver::random(64, 3), Interleaver::random(64, 4));
        assert!(Interleaver::identity(3).interleave(&[1, 2]).is_err());
        assert!(Interleaver::from_permutation(vec![0, 0]).is_err());
    }
}
