//! Global deduction for ciphers affine with respect to a known hidden sum.
//!
//! If `φ ∈ AGL(V, □)` then in `□`-coordinates `[φ(v)] = [v]·M + [t]`. Seven
//! chosen plaintexts (`0` and the basis vectors) determine `t` and the rows of
//! `M`; after that both directions are computable without the key.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::boolean_space::{BinMatrix, BinVec, SpaceError};
use crate::hidden_sum::CoordinateMap;
use crate::toy_cipher::{Direction, Oracle, Query};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("oracle width {oracle} does not match the hidden sum width {sum}")]
    WidthMismatch { oracle: usize, sum: usize },
    #[error("oracle direction is {found:?}, expected {expected:?}")]
    WrongDirection {
        expected: Direction,
        found: Direction,
    },
    #[error("oracle is not affine for this hidden sum: φ({input:#x}) = {observed:#x}, predicted {predicted:#x}")]
    ConsistencyFailure {
        input: u64,
        observed: u64,
        predicted: u64,
    },
    #[error("encryption and decryption oracles disagree: M·M⁻¹ is not the identity")]
    InverseMismatch,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub type Result<T, E = AttackError> = std::result::Result<T, E>;

/// How many extra plaintexts are audited after reconstruction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SpotChecks {
    None,
    Random { count: usize, seed: u64 },
    Exhaustive,
}

impl Default for SpotChecks {
    fn default() -> Self {
        SpotChecks::Random { count: 3, seed: 0 }
    }
}

/// `[φ(v)] = [v]·M + t` in coordinates of a `□`-basis.
#[derive(Clone, Debug)]
pub struct AffineRepr {
    coords: CoordinateMap,
    m: BinMatrix,
    m_inv: BinMatrix,
    t: BinVec,
}

impl AffineRepr {
    pub fn new(coords: CoordinateMap, m: BinMatrix, t: BinVec) -> Result<Self> {
        let m_inv = m.inverse()?;
        Ok(Self {
            coords,
            m,
            m_inv,
            t,
        })
    }

    pub fn matrix(&self) -> &BinMatrix {
        &self.m
    }

    pub fn matrix_inverse(&self) -> &BinMatrix {
        &self.m_inv
    }

    /// `t` in coordinates.
    pub fn translation(&self) -> BinVec {
        self.t
    }

    pub fn coordinates(&self) -> &CoordinateMap {
        &self.coords
    }

    pub fn width(&self) -> usize {
        self.m.dim()
    }

    pub fn apply_bits(&self, v: u64) -> u64 {
        let c = self.m.apply_bits(self.coords.coords_bits(v)) ^ self.t.bits();
        self.coords.element_bits(c)
    }

    pub fn apply_inverse_bits(&self, w: u64) -> u64 {
        let c = self
            .m_inv
            .apply_bits(self.coords.coords_bits(w) ^ self.t.bits());
        self.coords.element_bits(c)
    }

    /// Same representation with one matrix entry flipped.
    pub fn with_flipped_bit(&self, row: usize, col: usize) -> Result<Self> {
        let mut rows = self.m.row_bits().to_vec();
        rows[row] ^= 1 << col;
        Self::new(
            self.coords.clone(),
            BinMatrix::from_row_bits(self.width(), rows)?,
            self.t,
        )
    }
}

pub fn apply_repr(repr: &AffineRepr, v: BinVec) -> Result<BinVec> {
    check_width(v.width(), repr.width())?;
    Ok(BinVec::from_bits(repr.apply_bits(v.bits()), repr.width()))
}

pub fn apply_repr_inverse(repr: &AffineRepr, w: BinVec) -> Result<BinVec> {
    check_width(w.width(), repr.width())?;
    Ok(BinVec::from_bits(
        repr.apply_inverse_bits(w.bits()),
        repr.width(),
    ))
}

fn check_width(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(SpaceError::WidthMismatch { expected, found }.into());
    }
    Ok(())
}

/// Attack-phase traffic only; audit queries are reported separately.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AttackTranscript {
    pub queries: Vec<Query>,
    pub encryption_count: usize,
    pub decryption_count: usize,
    pub audit_count: usize,
}

fn check_oracle(oracle: &Oracle<'_>, expected: Direction, coords: &CoordinateMap) -> Result<()> {
    if oracle.direction() != expected {
        return Err(AttackError::WrongDirection {
            expected,
            found: oracle.direction(),
        });
    }
    if oracle.width() != coords.width() {
        return Err(AttackError::WidthMismatch {
            oracle: oracle.width(),
            sum: coords.width(),
        });
    }
    Ok(())
}

/// Rows `[f(b_i)] + [f(0)]` and `[f(0)]` from `d + 1` attack queries.
fn linear_part(oracle: &mut Oracle<'_>, coords: &CoordinateMap) -> Result<(BinMatrix, u64)> {
    let d = coords.width();
    let t = coords.coords_bits(oracle.query(0));
    let rows = coords
        .basis()
        .iter()
        .map(|b| coords.coords_bits(oracle.query(b.bits())) ^ t)
        .collect();
    Ok((BinMatrix::from_row_bits(d, rows)?, t))
}

/// Chosen-plaintext reconstruction: exactly `d + 1` encryption queries, then
/// spot checks through the oracle's audit counter.
pub fn reconstruct_cp(
    enc: &mut Oracle<'_>,
    coords: &CoordinateMap,
    spot_checks: SpotChecks,
) -> Result<(AffineRepr, AttackTranscript)> {
    check_oracle(enc, Direction::Encrypt, coords)?;
    let (m, t) = linear_part(enc, coords)?;
    let d = coords.width();
    // a singular M means the oracle is not a permutation affine for □
    let repr = AffineRepr::new(coords.clone(), m, BinVec::from_bits(t, d))?;
    let q = 1u64 << d;
    let samples: Vec<u64> = match spot_checks {
        SpotChecks::None => Vec::new(),
        SpotChecks::Exhaustive => (0..q).collect(),
        SpotChecks::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| rng.gen_range(0..q)).collect()
        }
    };
    for x in samples {
        let observed = enc.audit_query(x);
        let predicted = repr.apply_bits(x);
        if observed != predicted {
            return Err(AttackError::ConsistencyFailure {
                input: x,
                observed,
                predicted,
            });
        }
    }
    let transcript = transcript(&[&*enc]);
    Ok((repr, transcript))
}

fn transcript(oracles: &[&Oracle<'_>]) -> AttackTranscript {
    let mut queries = Vec::new();
    let mut encryption_count = 0;
    let mut decryption_count = 0;
    let mut audit_count = 0;
    for o in oracles {
        queries.extend(o.log().iter().filter(|q| !q.audit).copied());
        audit_count += o.audit_queries();
        match o.direction() {
            Direction::Encrypt => encryption_count += o.attack_queries(),
            Direction::Decrypt => decryption_count += o.attack_queries(),
        }
    }
    AttackTranscript {
        queries,
        encryption_count,
        decryption_count,
        audit_count,
    }
}

/// Chosen-plaintext/chosen-ciphertext variant: `M` from `d + 1` encryptions,
/// `M⁻¹` from `d + 1` decryptions, cross-checked.
pub fn reconstruct_cpcc(
    enc: &mut Oracle<'_>,
    dec: &mut Oracle<'_>,
    coords: &CoordinateMap,
) -> Result<(AffineRepr, AttackTranscript)> {
    check_oracle(enc, Direction::Encrypt, coords)?;
    check_oracle(dec, Direction::Decrypt, coords)?;
    let (m, t) = linear_part(enc, coords)?;
    let (m_inv, _) = linear_part(dec, coords)?;
    match m.mul(&m_inv) {
        Ok(p) if p.is_identity() => {}
        _ => return Err(AttackError::InverseMismatch),
    }
    let repr = AffineRepr {
        coords: coords.clone(),
        m,
        m_inv,
        t: BinVec::from_bits(t, coords.width()),
    };
    Ok((repr, transcript(&[&*enc, &*dec])))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct DeductionReport {
    pub verified_blocks: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<u64>,
    /// Attack-phase queries on the oracle, excluding verification.
    pub attack_queries: usize,
    pub audit_queries: usize,
}

/// Compares the reconstruction with the oracle on every block; these
/// comparisons go through the audit counter.
pub fn verify_global_deduction(repr: &AffineRepr, enc: &mut Oracle<'_>) -> DeductionReport {
    let q = 1u64 << repr.width();
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for x in 0..q {
        let expected = match enc.direction() {
            Direction::Encrypt => repr.apply_bits(x),
            Direction::Decrypt => repr.apply_inverse_bits(x),
        };
        if enc.audit_query(x) != expected {
            mismatches += 1;
            first_mismatch.get_or_insert(x);
        }
    }
    DeductionReport {
        verified_blocks: q as usize,
        mismatches,
        first_mismatch,
        attack_queries: enc.attack_queries(),
        audit_queries: enc.audit_queries(),
    }
}

/// Structured attack output.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AttackReport {
    #[serde(rename = "M")]
    pub m: Vec<String>,
    #[serde(rename = "M_inv")]
    pub m_inv: Vec<String>,
    pub t: String,
    pub enc_queries: usize,
    pub dec_queries: usize,
    pub verified_blocks: usize,
    pub mismatches: usize,
    pub passed: bool,
}

impl AttackReport {
    pub fn new(repr: &AffineRepr, transcript: &AttackTranscript, check: &DeductionReport) -> Self {
        let rows = |m: &BinMatrix| (0..m.dim()).map(|i| m.row(i).to_string()).collect();
        Self {
            m: rows(repr.matrix()),
            m_inv: rows(repr.matrix_inverse()),
            t: repr.translation().to_string(),
            enc_queries: transcript.encryption_count,
            dec_queries: transcript.decryption_count,
            verified_blocks: check.verified_blocks,
            mismatches: check.mismatches,
            passed: check.mismatches == 0,
        }
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M")?;
        for r in &self.m {
            writeln!(f, "  {r}")?;
        }
        writeln!(f, "t                {}", self.t)?;
        writeln!(f, "enc_queries      {}", self.enc_queries)?;
        writeln!(f, "dec_queries      {}", self.dec_queries)?;
        writeln!(f, "verified_blocks  {}", self.verified_blocks)?;
        writeln!(f, "mismatches       {}", self.mismatches)?;
        write!(
            f,
            "verdict          {}",
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hidden_sum::{toy_sum, HiddenSum};
    use crate::toy_cipher::{builtin_toy_spec, PermutationSchedule};
    use std::sync::Arc;

    fn toy_coords() -> CoordinateMap {
        CoordinateMap::standard(toy_sum()).unwrap()
    }

    #[test]
    fn identity_oracle() {
        let coords = toy_coords();
        let mut enc = Oracle::from_fn(Direction::Encrypt, 6, |x| x);
        let (repr, tr) = reconstruct_cp(&mut enc, &coords, SpotChecks::Exhaustive).unwrap();
        assert!(repr.matrix().is_identity());
        assert!(repr.translation().is_zero());
        assert_eq!(tr.encryption_count, 7);
        assert_eq!(tr.audit_count, 64);
        let mut dec = Oracle::from_fn(Direction::Decrypt, 6, |x| x);
        let mut enc = Oracle::from_fn(Direction::Encrypt, 6, |x| x);
        let (repr, tr) = reconstruct_cpcc(&mut enc, &mut dec, &coords).unwrap();
        assert!(repr.matrix_inverse().is_identity());
        assert_eq!((tr.encryption_count, tr.decryption_count), (7, 7));
        let r = verify_global_deduction(&repr, &mut enc);
        assert_eq!(r.mismatches, 0);
        for v in BinVec::all(6) {
            assert_eq!(apply_repr(&repr, v).unwrap(), v);
        }
    }

    #[test]
    fn xor_translation_oracle() {
        let coords = toy_coords();
        let mut enc = Oracle::from_fn(Direction::Encrypt, 6, |x| x ^ 1);
        let (repr, _) = reconstruct_cp(&mut enc, &coords, SpotChecks::Exhaustive).unwrap();
        // t = [e1'] = e1'; M = κ_{e1} on the first brick in coordinates
        assert_eq!(repr.translation().bits(), 1);
        assert_eq!(repr.matrix().row_bits(), &[1, 2, 0b110, 8, 16, 32]);
        for x in 0..64 {
            assert_eq!(repr.apply_bits(x), x ^ 1);
            assert_eq!(repr.apply_inverse_bits(x ^ 1), x);
        }
    }

    #[test]
    fn toy_cipher_attack() {
        let coords = toy_coords();
        for rounds in [1, 5, 20, 100] {
            let spec = builtin_toy_spec().with_rounds(rounds).unwrap();
            for key in [0u64, 0b101100, 63] {
                let mut enc = Oracle::encrypt(&spec, key);
                let (repr, tr) = reconstruct_cp(&mut enc, &coords, SpotChecks::default()).unwrap();
                assert_eq!(tr.encryption_count, 7);
                assert_eq!(tr.decryption_count, 0);
                assert_eq!(tr.queries.len(), 7);
                let r = verify_global_deduction(&repr, &mut enc);
                assert_eq!(r.mismatches, 0);
                assert_eq!(r.attack_queries, 7);
                for x in 0..64 {
                    assert_eq!(repr.apply_bits(x), spec.encrypt_bits(key, x));
                    assert_eq!(repr.apply_inverse_bits(x), spec.decrypt_bits(key, x));
                }
            }
        }
    }

    #[test]
    fn schedule_independence() {
        let coords = toy_coords();
        let spec = builtin_toy_spec()
            .with_schedule(Arc::new(PermutationSchedule::new(6, 20, 99)))
            .unwrap();
        let mut enc = Oracle::encrypt(&spec, 17);
        let (repr, tr) = reconstruct_cp(&mut enc, &coords, SpotChecks::default()).unwrap();
        assert_eq!(tr.encryption_count, 7);
        assert_eq!(verify_global_deduction(&repr, &mut enc).mismatches, 0);
    }

    #[test]
    fn cpcc_attack_and_mismatch() {
        let coords = toy_coords();
        let spec = builtin_toy_spec();
        let mut enc = Oracle::encrypt(&spec, 21);
        let mut dec = Oracle::decrypt(&spec, 21);
        let (repr, tr) = reconstruct_cpcc(&mut enc, &mut dec, &coords).unwrap();
        assert!(repr
            .matrix()
            .mul(repr.matrix_inverse())
            .unwrap()
            .is_identity());
        assert_eq!((tr.encryption_count, tr.decryption_count), (7, 7));
        assert_eq!(tr.queries.len(), 14);

        let mut enc = Oracle::encrypt(&spec, 21);
        let mut dec = Oracle::decrypt(&spec, 22);
        assert_eq!(
            reconstruct_cpcc(&mut enc, &mut dec, &coords).unwrap_err(),
            AttackError::InverseMismatch
        );
    }

    #[test]
    fn non_affine_oracle_detected() {
        let coords = toy_coords();
        let spec = builtin_toy_spec();
        // encryption is affine for ∘' but not for XOR
        let xor = CoordinateMap::standard(HiddenSum::xor(6)).unwrap();
        let mut enc = Oracle::encrypt(&spec, 5);
        assert!(matches!(
            reconstruct_cp(&mut enc, &xor, SpotChecks::Exhaustive),
            Err(AttackError::ConsistencyFailure { .. })
        ));
        let mut enc = Oracle::encrypt(&spec, 5);
        assert!(matches!(
            reconstruct_cp(&mut enc, &coords, SpotChecks::None),
            Ok((_, AttackTranscript { audit_count: 0, .. }))
        ));
        let mut dec = Oracle::decrypt(&spec, 5);
        assert!(matches!(
            reconstruct_cp(&mut dec, &coords, SpotChecks::None),
            Err(AttackError::WrongDirection { .. })
        ));
    }

    #[test]
    fn corrupted_repr_mismatches() {
        let coords = toy_coords();
        let spec = builtin_toy_spec();
        let mut enc = Oracle::encrypt(&spec, 40);
        let (repr, _) = reconstruct_cp(&mut enc, &coords, SpotChecks::None).unwrap();
        let mut flipped = None;
        'search: for r in 0..6 {
            for c in 0..6 {
                if let Ok(f) = repr.with_flipped_bit(r, c) {
                    flipped = Some(f);
                    break 'search;
                }
            }
        }
        let report = verify_global_deduction(&flipped.unwrap(), &mut enc);
        assert!(report.mismatches >= 1);
        assert_eq!(report.attack_queries, 7);
        assert_eq!(report.audit_queries, 64);
    }

    #[test]
    fn report_serializes() {
        let coords = toy_coords();
        let spec = builtin_toy_spec();
        let mut enc = Oracle::encrypt(&spec, 1);
        let (repr, tr) = reconstruct_cp(&mut enc, &coords, SpotChecks::default()).unwrap();
        let check = verify_global_deduction(&repr, &mut enc);
        let report = AttackReport::new(&repr, &tr, &check);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["enc_queries"], 7);
        assert_eq!(json["mismatches"], 0);
        assert_eq!(json["M"].as_array().unwrap().len(), 6);
        assert!(report.to_string().ends_with("PASS"));
    }
}
