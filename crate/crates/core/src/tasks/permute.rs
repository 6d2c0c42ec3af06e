//! Fixed permutations of the bit representation.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sudoku::SudokuSample;
use crate::error::{Error, Result};

/// Bit `i` of an original vector moves to position `map[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for (i, &j) in map.iter().enumerate() {
            if j >= map.len() || seen[j] {
                return Err(Error::InvalidArgument(format!("not a bijection: entry {i} maps to {j}")));
            }
            seen[j] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(len: usize) -> Self {
        Self { map: (0..len).collect() }
    }

    pub fn random(len: usize, seed: u64) -> Self {
        let mut map: Vec<usize> = (0..len).collect();
        map.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    pub fn apply<T: Clone>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.map.len() {
            return Err(Error::Dimension(format!("permutation of {} applied to {} entries", self.map.len(), x.len())));
        }
        let mut out = x.to_vec();
        for (i, v) in x.iter().enumerate() {
            out[self.map[i]] = v.clone();
        }
        Ok(out)
    }

    /// One `i j` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.map.iter().enumerate() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse { line: n + 1, msg: format!("expected `<from> <to>`, got `{line}`") };
            let mut it = line.split_whitespace().map(|t| t.parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => pairs.push((i, j)),
                _ => return Err(bad()),
            }
        }
        let mut map = vec![usize::MAX; pairs.len()];
        for (i, j) in pairs {
            if i >= map.len() || map[i] != usize::MAX {
                return Err(Error::InvalidArgument(format!("permutation source {i} missing or repeated")));
            }
            map[i] = j;
        }
        Self::new(map)
    }
}

/// Maps puzzle bits, mask and solution bits through the same permutation.
pub fn permute_dataset(data: &[SudokuSample], perm: &Permutation) -> Result<Vec<SudokuSample>> {
    data.iter()
        .map(|s| {
            Ok(SudokuSample {
                size: s.size,
                puzzle: perm.apply(&s.puzzle)?,
                mask: perm.apply(&s.mask)?,
                solution: perm.apply(&s.solution)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::sudoku::gen_sudoku;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0]).is_ok());
    }

    #[test]
    fn identity_and_inverse() {
        let data = gen_sudoku(4, 3, 1).unwrap();
        assert_eq!(permute_dataset(&data, &Permutation::identity(64)).unwrap(), data);
        let p = Permutation::random(64, 9);
        let there = permute_dataset(&data, &p).unwrap();
        assert_ne!(there, data);
        assert_eq!(permute_dataset(&there, &p.inverse()).unwrap(), data);
    }

    #[test]
    fn text_round_trip() {
        let p = Permutation::random(10, 2);
        assert_eq!(Permutation::from_text(&p.to_text()).unwrap(), p);
        assert!(Permutation::from_text("0 1\n0 0\n").is_err());
    }
}
