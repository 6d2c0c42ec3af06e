//! Datasets: parity strings, Sudoku puzzles, and bit permutations.

pub mod dataset;
pub mod parity;
pub mod permute;
pub mod sudoku;

pub use dataset::Dataset;
pub use parity::{gen_parity, parity_of, ParitySample};
pub use permute::{permute_dataset, Permutation};
pub use sudoku::{count_solutions, decode_bits, encode_board, gen_sudoku, Board, SudokuSample};
