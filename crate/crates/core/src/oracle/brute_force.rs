use crate::cnf::CnfInstance;
use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_VARS: usize = 22;

/// Exhaustive MAXSAT: returns the optimal satisfied-clause count and the
/// optimal assignment with the lowest binary value (variable `i` is bit `i`).
pub fn brute_force_maxsat(cnf: &CnfInstance) -> Result<(usize, Vec<bool>)> {
    let n = cnf.num_vars();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::SizeLimit(format!("{n} variables exceeds {MAX_BRUTE_FORCE_VARS}")));
    }
    let masks: Vec<(u32, u32)> = cnf
        .clauses()
        .iter()
        .map(|clause| {
            clause.iter().enumerate().fold((0u32, 0u32), |(pos, neg), (i, &s)| match s {
                1 => (pos | 1 << i, neg),
                -1 => (pos, neg | 1 << i),
                _ => (pos, neg),
            })
        })
        .collect();

    let mut best = (0usize, 0u32);
    let mut first = true;
    for a in 0u32..(1u32 << n) {
        let sat = masks.iter().filter(|&&(pos, neg)| a & pos != 0 || !a & neg != 0).count();
        if first || sat > best.0 {
            best = (sat, a);
            first = false;
        }
    }
    Ok((best.0, (0..n).map(|i| best.1 >> i & 1 == 1).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contradictory_units() {
        let cnf = CnfInstance::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert_eq!(brute_force_maxsat(&cnf).unwrap(), (1, vec![false]));
    }

    #[test]
    fn empty_formula() {
        let cnf = CnfInstance::new(3, vec![]).unwrap();
        assert_eq!(brute_force_maxsat(&cnf).unwrap(), (0, vec![false; 3]));
    }

    #[test]
    fn size_limit() {
        let cnf = CnfInstance::new(23, vec![]).unwrap();
        assert!(matches!(brute_force_maxsat(&cnf), Err(Error::SizeLimit(_))));
    }
}
