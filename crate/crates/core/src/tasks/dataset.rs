//! Line-based dataset files.
//!
//! The first line is a header of `key=value` fields starting with
//! `# satnet-dataset v1`. Each following line is one record of 0/1 strings:
//! `<bits> <parity>` for parity, `<puzzle> <mask> <solution>` for Sudoku.

use std::fmt::Write as _;

use super::parity::{parity_of, ParitySample};
use super::sudoku::SudokuSample;
use crate::error::{Error, Result};

pub const MAGIC: &str = "# satnet-dataset v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dataset {
    Parity { length: usize, seed: u64, samples: Vec<ParitySample> },
    /// `permuted` records the seed of a bit permutation applied after generation.
    Sudoku { size: usize, seed: u64, permuted: Option<u64>, samples: Vec<SudokuSample> },
}

fn bits_str(bits: impl IntoIterator<Item = bool>) -> String {
    bits.into_iter().map(|b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(tok: &str, len: usize, line: usize) -> Result<Vec<u8>> {
    if tok.len() != len {
        return Err(Error::Parse { line, msg: format!("expected {len} bits, got {}", tok.len()) });
    }
    tok.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(Error::Parse { line, msg: format!("bad bit character `{}`", b as char) }),
        })
        .collect()
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Self::Parity { samples, .. } => samples.len(),
            Self::Sudoku { samples, .. } => samples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> &'static str {
        match self {
            Self::Parity { .. } => "parity",
            Self::Sudoku { .. } => "sudoku",
        }
    }

    /// First `n` records and the rest.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        match self {
            Self::Parity { length, seed, samples } => {
                let n = n.min(samples.len());
                (
                    Self::Parity { length: *length, seed: *seed, samples: samples[..n].to_vec() },
                    Self::Parity { length: *length, seed: *seed, samples: samples[n..].to_vec() },
                )
            }
            Self::Sudoku { size, seed, permuted, samples } => {
                let n = n.min(samples.len());
                (
                    Self::Sudoku { size: *size, seed: *seed, permuted: *permuted, samples: samples[..n].to_vec() },
                    Self::Sudoku { size: *size, seed: *seed, permuted: *permuted, samples: samples[n..].to_vec() },
                )
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Self::Parity { length, seed, samples } => {
                let _ = writeln!(out, "{MAGIC} task=parity length={length} seed={seed} count={}", samples.len());
                for s in samples {
                    let _ = writeln!(out, "{} {}", bits_str(s.bits.iter().map(|&b| b == 1)), s.parity);
                }
            }
            Self::Sudoku { size, seed, permuted, samples } => {
                let perm = permuted.map(|p| format!(" permutation={p}")).unwrap_or_default();
                let _ = writeln!(out, "{MAGIC} task=sudoku size={size} seed={seed} count={}{perm}", samples.len());
                for s in samples {
                    let _ = writeln!(
                        out,
                        "{} {} {}",
                        bits_str(s.puzzle.iter().map(|&b| b == 1)),
                        bits_str(s.mask.iter().copied()),
                        bits_str(s.solution.iter().map(|&b| b == 1))
                    );
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty dataset file".into() })?;
        let fields = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("header must start with `{MAGIC}`") })?;
        let get = |key: &str| -> Result<Option<u64>> {
            fields
                .split_whitespace()
                .filter_map(|f| f.split_once('='))
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.parse::<u64>().map_err(|e| Error::Parse { line: 1, msg: format!("{key}: {e}") }))
                .transpose()
        };
        let need = |key: &str| get(key)?.ok_or_else(|| Error::Parse { line: 1, msg: format!("header lacks `{key}`") });
        let task = fields
            .split_whitespace()
            .find_map(|f| f.strip_prefix("task="))
            .ok_or(Error::Parse { line: 1, msg: "header lacks `task`".into() })?;
        let seed = need("seed")?;
        let count = need("count")? as usize;

        let data = match task {
            "parity" => {
                let length = need("length")? as usize;
                let mut samples = Vec::with_capacity(count);
                for (n, line) in lines {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    let [bits, parity] = toks[..] else {
                        return Err(Error::Parse { line: n + 1, msg: "expected `<bits> <parity>`".into() });
                    };
                    let bits = parse_bits(bits, length, n + 1)?;
                    let parity = parse_bits(parity, 1, n + 1)?[0];
                    if parity != parity_of(&bits) {
                        return Err(Error::Parse { line: n + 1, msg: "parity label disagrees with bits".into() });
                    }
                    samples.push(ParitySample { bits, parity });
                }
                Self::Parity { length, seed, samples }
            }
            "sudoku" => {
                let size = need("size")? as usize;
                let nbits = size * size * size;
                let mut samples = Vec::with_capacity(count);
                for (n, line) in lines {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    let [puzzle, mask, solution] = toks[..] else {
                        return Err(Error::Parse { line: n + 1, msg: "expected `<puzzle> <mask> <solution>`".into() });
                    };
                    samples.push(SudokuSample {
                        size,
                        puzzle: parse_bits(puzzle, nbits, n + 1)?,
                        mask: parse_bits(mask, nbits, n + 1)?.into_iter().map(|b| b == 1).collect(),
                        solution: parse_bits(solution, nbits, n + 1)?,
                    });
                }
                Self::Sudoku { size, seed, permuted: get("permutation")?, samples }
            }
            other => return Err(Error::Parse { line: 1, msg: format!("unknown task `{other}`") }),
        };
        if data.len() != count {
            return Err(Error::Parse { line: 0, msg: format!("header declares {count} records, found {}", data.len()) });
        }
        Ok(data)
    }
}
