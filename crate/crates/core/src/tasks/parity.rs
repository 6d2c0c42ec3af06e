//! Random bit strings labelled with their parity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParitySample {
    pub bits: Vec<u8>,
    pub parity: u8,
}

impl ParitySample {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("parity bits must be 0 or 1".into()));
        }
        let parity = parity_of(&bits);
        Ok(Self { bits, parity })
    }
}

pub fn parity_of(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, &b| acc ^ b)
}

/// `count` uniform strings of length `length`; sample `i` uses stream `i` of the seed.
pub fn gen_parity(length: usize, count: usize, seed: u64) -> Result<Vec<ParitySample>> {
    if length < 2 {
        return Err(Error::InvalidArgument(format!("parity length must be at least 2, got {length}")));
    }
    Ok((0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let bits: Vec<u8> = (0..length).map(|_| rng.random_range(0..2u8)).collect();
            let parity = parity_of(&bits);
            ParitySample { bits, parity }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_labels() {
        assert_eq!(ParitySample::new(vec![1, 0, 1]).unwrap().parity, 0);
        assert_eq!(ParitySample::new(vec![1, 1, 1]).unwrap().parity, 1);
        assert!(ParitySample::new(vec![2]).is_err());
    }

    #[test]
    fn generation_is_deterministic_and_labelled() {
        let a = gen_parity(20, 50, 7).unwrap();
        assert_eq!(a, gen_parity(20, 50, 7).unwrap());
        assert_ne!(a, gen_parity(20, 50, 8).unwrap());
        for s in &a {
            assert_eq!(s.bits.len(), 20);
            assert_eq!(s.parity as usize, s.bits.iter().filter(|&&b| b == 1).count() % 2);
        }
        assert!(gen_parity(1, 1, 0).is_err());
    }
}
