//! Sudoku boards, a uniqueness-preserving puzzle generator, and the one-hot
//! bit encoding (cell `(r, c)` holding digit `d` sets bit `(r·B + c)·B + d - 1`).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layer::Sample;

/// A `B×B` board in row-major order; 0 marks an empty cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Board {
    size: usize,
    cells: Vec<u8>,
}

fn box_size(size: usize) -> Result<usize> {
    match size {
        4 => Ok(2),
        9 => Ok(3),
        _ => Err(Error::InvalidArgument(format!("board size must be 4 or 9, got {size}"))),
    }
}

impl Board {
    pub fn empty(size: usize) -> Result<Self> {
        box_size(size)?;
        Ok(Self { size, cells: vec![0; size * size] })
    }

    pub fn from_cells(size: usize, cells: Vec<u8>) -> Result<Self> {
        box_size(size)?;
        if cells.len() != size * size {
            return Err(Error::Dimension(format!("{} cells for a {size}x{size} board", cells.len())));
        }
        if let Some(&d) = cells.iter().find(|&&d| d as usize > size) {
            return Err(Error::InvalidArgument(format!("digit {d} on a {size}x{size} board")));
        }
        Ok(Self { size, cells })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.size + c]
    }

    pub fn set(&mut self, r: usize, c: usize, d: u8) {
        self.cells[r * self.size + c] = d;
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().filter(|&&d| d != 0).count()
    }

    /// No digit repeats in any row, column or box (empty cells ignored).
    pub fn is_consistent(&self) -> bool {
        let b = self.size;
        let bs = box_size(b).expect("validated size");
        let unit_ok = |cells: &mut dyn Iterator<Item = u8>| {
            let mut seen = 0u32;
            for d in cells.filter(|&d| d != 0) {
                if seen & (1 << d) != 0 {
                    return false;
                }
                seen |= 1 << d;
            }
            true
        };
        (0..b).all(|i| {
            let (br, bc) = (i / bs * bs, i % bs * bs);
            unit_ok(&mut (0..b).map(|c| self.get(i, c)))
                && unit_ok(&mut (0..b).map(|r| self.get(r, i)))
                && unit_ok(&mut (0..b).map(|j| self.get(br + j / bs, bc + j % bs)))
        })
    }

    /// Completely filled and consistent.
    pub fn is_solved(&self) -> bool {
        self.filled() == self.cells.len() && self.is_consistent()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.size {
            for c in 0..self.size {
                let d = self.get(r, c);
                out.push(if d == 0 { '.' } else { char::from(b'0' + d) });
            }
            out.push('\n');
        }
        out
    }
}

/// Candidate bitmasks for backtracking: bit `d` set when digit `d` is free.
struct Grid {
    size: usize,
    bs: usize,
    cells: Vec<u8>,
    rows: Vec<u32>,
    cols: Vec<u32>,
    boxes: Vec<u32>,
}

impl Grid {
    fn new(board: &Board) -> Option<Self> {
        let size = board.size;
        let bs = box_size(size).ok()?;
        let mut g = Self { size, bs, cells: vec![0; size * size], rows: vec![0; size], cols: vec![0; size], boxes: vec![0; size] };
        for (i, &d) in board.cells.iter().enumerate() {
            if d != 0 {
                if g.used(i) & (1 << d) != 0 {
                    return None;
                }
                g.place(i, d);
            }
        }
        Some(g)
    }

    fn box_of(&self, i: usize) -> usize {
        let (r, c) = (i / self.size, i % self.size);
        r / self.bs * self.bs + c / self.bs
    }

    fn used(&self, i: usize) -> u32 {
        self.rows[i / self.size] | self.cols[i % self.size] | self.boxes[self.box_of(i)]
    }

    fn place(&mut self, i: usize, d: u8) {
        let bit = 1 << d;
        let b = self.box_of(i);
        self.rows[i / self.size] |= bit;
        self.cols[i % self.size] |= bit;
        self.boxes[b] |= bit;
        self.cells[i] = d;
    }

    fn clear(&mut self, i: usize) {
        let bit = !(1u32 << self.cells[i]);
        let b = self.box_of(i);
        self.rows[i / self.size] &= bit;
        self.cols[i % self.size] &= bit;
        self.boxes[b] &= bit;
        self.cells[i] = 0;
    }

    fn free(&self, i: usize) -> u32 {
        let all = ((1u32 << (self.size + 1)) - 1) & !1;
        all & !self.used(i)
    }

    /// Empty cell with fewest candidates, or `None` when full.
    fn pick(&self) -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for i in (0..self.cells.len()).filter(|&i| self.cells[i] == 0) {
            let free = self.free(i);
            if best.is_none_or(|(_, f)| free.count_ones() < f.count_ones()) {
                best = Some((i, free));
                if free.count_ones() <= 1 {
                    break;
                }
            }
        }
        best
    }

    fn count(&mut self, limit: usize, found: &mut usize) {
        let Some((i, free)) = self.pick() else {
            *found += 1;
            return;
        };
        for d in 1..=self.size as u8 {
            if free & (1 << d) != 0 {
                self.place(i, d);
                self.count(limit, found);
                self.clear(i);
                if *found >= limit {
                    return;
                }
            }
        }
    }

    fn fill_random<R: Rng>(&mut self, rng: &mut R) -> bool {
        let Some((i, free)) = self.pick() else {
            return true;
        };
        let mut digits: Vec<u8> = (1..=self.size as u8).filter(|d| free & (1 << d) != 0).collect();
        digits.shuffle(rng);
        for d in digits {
            self.place(i, d);
            if self.fill_random(rng) {
                return true;
            }
            self.clear(i);
        }
        false
    }
}

/// Number of completions of `board`, stopping once `limit` are found.
pub fn count_solutions(board: &Board, limit: usize) -> usize {
    let Some(mut g) = Grid::new(board) else {
        return 0;
    };
    let mut found = 0;
    g.count(limit, &mut found);
    found
}

/// Some completion of `board`, if one exists.
pub fn solve(board: &Board) -> Option<Board> {
    let mut g = Grid::new(board)?;
    // the deterministic first branch is fine here; order only matters for generation
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    g.fill_random(&mut rng).then(|| Board { size: board.size, cells: g.cells })
}

pub fn random_solution<R: Rng>(size: usize, rng: &mut R) -> Result<Board> {
    let mut g = Grid::new(&Board::empty(size)?).expect("empty board is consistent");
    assert!(g.fill_random(rng), "an empty board always has a completion");
    Ok(Board { size, cells: g.cells })
}

/// Inclusive range of givens targeted by the generator.
pub fn givens_range(size: usize) -> Result<(usize, usize)> {
    match size {
        4 => Ok((6, 10)),
        9 => Ok((30, 42)),
        _ => Err(Error::InvalidArgument(format!("board size must be 4 or 9, got {size}"))),
    }
}

/// Removes cells from `solution` in random order, keeping the puzzle uniquely
/// solvable, until `target` givens remain or no cell can be removed.
pub fn dig<R: Rng>(solution: &Board, target: usize, rng: &mut R) -> Board {
    let mut puzzle = solution.clone();
    let mut order: Vec<usize> = (0..puzzle.cells.len()).collect();
    order.shuffle(rng);
    for i in order {
        if puzzle.filled() <= target {
            break;
        }
        let d = puzzle.cells[i];
        puzzle.cells[i] = 0;
        if count_solutions(&puzzle, 2) != 1 {
            puzzle.cells[i] = d;
        }
    }
    puzzle
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SudokuSample {
    pub size: usize,
    /// Bits of the puzzle; cells without a given are all zero.
    pub puzzle: Vec<u8>,
    /// `mask[j]` is true when bit `j` belongs to a given cell.
    pub mask: Vec<bool>,
    pub solution: Vec<u8>,
}

impl SudokuSample {
    pub fn from_boards(puzzle: &Board, solution: &Board) -> Self {
        let b = puzzle.size;
        let mask = (0..b * b * b).map(|j| puzzle.cells[j / b] != 0).collect();
        Self { size: b, puzzle: encode_board(puzzle), mask, solution: encode_board(solution) }
    }

    pub fn num_bits(&self) -> usize {
        self.puzzle.len()
    }

    /// Layer input: given bits are known, every other bit is supervised.
    pub fn to_sample(&self) -> Sample {
        let z: Vec<f64> = self.puzzle.iter().map(|&b| b as f64).collect();
        let y: Vec<f64> = self.solution.iter().map(|&b| b as f64).collect();
        Sample::from_mask(&z, &self.mask, Some(&y))
    }
}

pub fn encode_board(board: &Board) -> Vec<u8> {
    let b = board.size;
    let mut bits = vec![0u8; b * b * b];
    for (cell, &d) in board.cells.iter().enumerate() {
        if d != 0 {
            bits[cell * b + d as usize - 1] = 1;
        }
    }
    bits
}

/// Per-cell argmax over `B` bits; a cell whose bits are all below 0.5 is left empty.
pub fn decode_bits(size: usize, bits: &[f64]) -> Result<Board> {
    box_size(size)?;
    if bits.len() != size * size * size {
        return Err(Error::Dimension(format!("{} bits for a {size}x{size} board", bits.len())));
    }
    let cells = bits
        .chunks(size)
        .map(|cell| {
            let (d, &p) = cell
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, (d, p)| if *p > *best.1 { (d, p) } else { best });
            if p >= 0.5 {
                d as u8 + 1
            } else {
                0
            }
        })
        .collect();
    Board::from_cells(size, cells)
}

/// Generates one puzzle from an already-positioned rng.
pub fn gen_puzzle<R: Rng>(size: usize, rng: &mut R) -> Result<(Board, Board)> {
    let (lo, hi) = givens_range(size)?;
    loop {
        let solution = random_solution(size, rng)?;
        let target = rng.random_range(lo..=hi);
        let puzzle = dig(&solution, target, rng);
        // a board that cannot be dug down far enough is redrawn
        if puzzle.filled() <= hi {
            return Ok((puzzle, solution));
        }
    }
}

/// `count` unique-solution puzzles; sample `i` draws from stream `i` of the
/// seed, so output does not depend on the thread count.
pub fn gen_sudoku(size: usize, count: usize, seed: u64) -> Result<Vec<SudokuSample>> {
    box_size(size)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (puzzle, solution) = gen_puzzle(size, &mut rng)?;
            Ok(SudokuSample::from_boards(&puzzle, &solution))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_arithmetic() {
        let mut b = Board::empty(4).unwrap();
        b.set(0, 0, 3);
        let bits = encode_board(&b);
        assert_eq!(bits.iter().position(|&x| x == 1), Some(2));
        assert_eq!(bits.iter().filter(|&&x| x == 1).count(), 1);

        let empty = SudokuSample::from_boards(&Board::empty(4).unwrap(), &Board::empty(4).unwrap());
        assert!(empty.puzzle.iter().all(|&x| x == 0));
        assert!(empty.mask.iter().all(|&m| !m));
    }

    #[test]
    fn validator_catches_repeats() {
        let mut b = Board::empty(4).unwrap();
        b.set(0, 0, 1);
        b.set(1, 1, 1);
        assert!(!b.is_consistent());
        b.set(1, 1, 2);
        assert!(b.is_consistent());
        assert!(!b.is_solved());
    }

    #[test]
    fn generated_puzzles_are_unique_and_in_range() {
        for size in [4, 9] {
            let data = gen_sudoku(size, 6, 3).unwrap();
            let (lo, hi) = givens_range(size).unwrap();
            for s in &data {
                let sol = decode_bits(size, &s.solution.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
                assert!(sol.is_solved());
                let puzzle = decode_bits(size, &s.puzzle.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
                assert!((lo..=hi).contains(&puzzle.filled()));
                assert_eq!(count_solutions(&puzzle, 3), 1);
                assert_eq!(solve(&puzzle).unwrap(), sol);
            }
            assert_eq!(data, gen_sudoku(size, 6, 3).unwrap());
        }
    }

    #[test]
    fn decode_rejects_bad_length() {
        assert!(decode_bits(4, &[0.0; 63]).is_err());
        assert!(Board::empty(5).is_err());
    }
}
