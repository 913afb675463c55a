//! Pinned function corpus for property sweeps: every power permutation and a
//! fixed set of seeded random permutations for each width, plus the toy brick.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boolean_space::{FieldBasis, FieldSpec};
use crate::toy_cipher::{toy_basis, toy_brick};
use crate::vbf::Vbf;

pub const CORPUS_SEED: u64 = 0x5eed_c0de;
pub const RANDOM_PER_WIDTH: usize = 50;
pub const CORPUS_WIDTHS: std::ops::RangeInclusive<usize> = 3..=6;

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub f: Vbf,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exponents `1 ≤ d < 2^m - 1` with `gcd(d, 2^m - 1) = 1`.
pub fn permutation_exponents(m: usize) -> Vec<u64> {
    let order = (1u64 << m) - 1;
    (1..order).filter(|&d| gcd(d, order) == 1).collect()
}

/// Every power permutation of `F_{2^m}` over the standard modulus, in the
/// ascending basis.
pub fn power_permutations(m: usize) -> Vec<(u64, Vbf)> {
    let fs = FieldSpec::standard(m).expect("standard modulus");
    let basis = FieldBasis::ascending(m);
    permutation_exponents(m)
        .into_iter()
        .map(|d| (d, Vbf::from_power(d, &fs, &basis).expect("widths match")))
        .collect()
}

pub fn random_permutations(m: usize, count: usize) -> Vec<Vbf> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ m as u64);
    (0..count)
        .map(|_| Vbf::random_permutation(m, &mut rng))
        .collect()
}

/// Corpus entries of width `m`.
pub fn corpus_for(m: usize) -> Vec<Entry> {
    let mut out: Vec<Entry> = power_permutations(m)
        .into_iter()
        .map(|(d, f)| Entry {
            name: format!("x^{d} (m={m})"),
            f,
        })
        .collect();
    if m == 3 {
        out.push(Entry {
            name: "toy brick".into(),
            f: toy_brick(&toy_basis()),
        });
    }
    out.extend(
        random_permutations(m, RANDOM_PER_WIDTH)
            .into_iter()
            .enumerate()
            .map(|(i, f)| Entry {
                name: format!("random #{i} (m={m})"),
                f,
            }),
    );
    out
}

pub fn corpus() -> Vec<Entry> {
    CORPUS_WIDTHS.flat_map(corpus_for).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_are_pinned() {
        assert_eq!(permutation_exponents(3), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(permutation_exponents(6).len(), 36);
        assert_eq!(corpus_for(3).len(), 6 + 1 + RANDOM_PER_WIDTH);
        assert_eq!(corpus().len(), 6 + 1 + 8 + 30 + 36 + 4 * RANDOM_PER_WIDTH);
        assert!(corpus().iter().all(|e| e.f.is_permutation()));
    }

    #[test]
    fn random_part_is_deterministic() {
        let a = random_permutations(5, 3);
        let b = random_permutations(5, 3);
        assert_eq!(a[0].table(), b[0].table());
        assert_ne!(a[0].table(), a[1].table());
    }
}
