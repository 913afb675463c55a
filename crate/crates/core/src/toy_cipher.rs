//! Translation-based block ciphers built from bricklayer S-boxes, an invertible
//! mixing layer and XOR round keys, plus the 6-bit toy instance.
//!
//! A round maps `x ↦ λ(γ(x)) + k_h`: bricks first, then the mixing layer as
//! `x·λ`, then the round key. Brick `i` acts on coordinates `i·m .. (i+1)·m`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_space::{BinMatrix, BinVec, FieldBasis, FieldSpec, SpaceError};
use crate::hidden_sum::{agl_membership, toy_sum, AffineMap, HiddenSumError};
use crate::vbf::{Vbf, VbfError};

pub const DEFAULT_ROUNDS: usize = 20;
pub const MAX_ROUNDS: usize = 1000;

/// Widest block for which the key-schedule surjectivity check is exhaustive.
pub const SURJECTIVITY_CHECK_WIDTH: usize = 8;

/// Rows of the toy mixing layer, coordinate 1 first.
pub const TOY_LAMBDA_ROWS: [&str; 6] = ["011010", "010000", "111010", "010111", "000010", "010110"];

/// The toy field modulus `x^3 + x + 1`.
pub const TOY_MODULUS: &str = "1011";

/// Coefficients of `α^5x^6 + αx^5 + α^2x^4 + α^5x^3 + αx^2 + αx`, constant
/// term first, with `α = x` in ascending encoding.
pub const TOY_BRICK_COEFFS: [u64; 7] = [0, 0b010, 0b010, 0b111, 0b100, 0b010, 0b111];

#[derive(Debug, Error)]
pub enum CipherError {
    #[error("a cipher needs at least one brick")]
    NoBricks,
    #[error("brick {index} is not a permutation of (F_2)^{width}")]
    BrickNotPermutation { index: usize, width: usize },
    #[error("brick {index} maps 0 to {image:#x}")]
    BrickMovesZero { index: usize, image: u64 },
    #[error("brick {index} has width {found}, expected {expected}")]
    BrickWidth {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("mixing layer is {found}x{found}, block width is {expected}")]
    MixingSize { expected: usize, found: usize },
    #[error("round count {0} outside 1..={MAX_ROUNDS}")]
    Rounds(usize),
    #[error("key schedule is not surjective for any round")]
    ScheduleNotSurjective,
    #[error("cipher config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Vbf(#[from] VbfError),
    #[error(transparent)]
    HiddenSum(#[from] HiddenSumError),
}

pub type Result<T, E = CipherError> = std::result::Result<T, E>;

/// Maps a session key and a round index `h ≥ 1` to a round key.
pub trait KeySchedule: Send + Sync {
    fn round_key(&self, key: u64, round: usize) -> u64;

    fn name(&self) -> &str;
}

/// Round key `h` is the session key rotated by `h` positions.
#[derive(Clone, Copy, Debug)]
pub struct RotateSchedule {
    width: usize,
}

impl RotateSchedule {
    pub fn new(width: usize) -> Self {
        Self { width }
    }
}

impl KeySchedule for RotateSchedule {
    fn round_key(&self, key: u64, round: usize) -> u64 {
        BinVec::from_bits(key, self.width).rotate(round).bits()
    }

    fn name(&self) -> &str {
        "rotate"
    }
}

pub fn default_key_schedule(key: BinVec, round: usize) -> BinVec {
    key.rotate(round)
}

/// An independent seeded random permutation of the key space per round.
#[derive(Clone, Debug)]
pub struct PermutationSchedule {
    seed: u64,
    perms: Vec<Vec<u64>>,
}

impl PermutationSchedule {
    /// Rounds beyond `rounds` reuse the permutations cyclically.
    pub fn new(width: usize, rounds: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms = (0..rounds.max(1))
            .map(|_| {
                let mut p: Vec<u64> = (0..1u64 << width).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        Self { seed, perms }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl KeySchedule for PermutationSchedule {
    fn round_key(&self, key: u64, round: usize) -> u64 {
        let p = &self.perms[(round.max(1) - 1) % self.perms.len()];
        p[key as usize]
    }

    fn name(&self) -> &str {
        "permutation"
    }
}

#[derive(Clone)]
pub struct CipherSpec {
    m: usize,
    bricks: Vec<Vbf>,
    brick_inverses: Vec<Vec<u64>>,
    mixing: BinMatrix,
    mixing_inverse: BinMatrix,
    rounds: usize,
    schedule: Arc<dyn KeySchedule>,
}

impl fmt::Debug for CipherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CipherSpec")
            .field("m", &self.m)
            .field("n", &self.bricks.len())
            .field("rounds", &self.rounds)
            .field("schedule", &self.schedule.name())
            .finish()
    }
}

impl CipherSpec {
    pub fn new(
        bricks: Vec<Vbf>,
        mixing: BinMatrix,
        rounds: usize,
        schedule: Arc<dyn KeySchedule>,
    ) -> Result<Self> {
        let m = bricks.first().ok_or(CipherError::NoBricks)?.input_width();
        let mut brick_inverses = Vec::with_capacity(bricks.len());
        for (index, b) in bricks.iter().enumerate() {
            if b.input_width() != m || b.output_width() != m {
                return Err(CipherError::BrickWidth {
                    index,
                    expected: m,
                    found: b.input_width().max(b.output_width()),
                });
            }
            if !b.is_permutation() {
                return Err(CipherError::BrickNotPermutation { index, width: m });
            }
            if b.eval(0) != 0 {
                return Err(CipherError::BrickMovesZero {
                    index,
                    image: b.eval(0),
                });
            }
            let mut inv = vec![0u64; 1 << m];
            for (x, &y) in b.table().iter().enumerate() {
                inv[y as usize] = x as u64;
            }
            brick_inverses.push(inv);
        }
        let d = m * bricks.len();
        if mixing.dim() != d {
            return Err(CipherError::MixingSize {
                expected: d,
                found: mixing.dim(),
            });
        }
        let mixing_inverse = mixing.inverse()?;
        if !(1..=MAX_ROUNDS).contains(&rounds) {
            return Err(CipherError::Rounds(rounds));
        }
        if d <= SURJECTIVITY_CHECK_WIDTH {
            let q = 1u64 << d;
            let surjective_round = (1..=rounds).any(|h| {
                let mut hit = vec![false; q as usize];
                (0..q).for_each(|k| hit[(schedule.round_key(k, h) & (q - 1)) as usize] = true);
                hit.iter().all(|&b| b)
            });
            if !surjective_round {
                return Err(CipherError::ScheduleNotSurjective);
            }
        }
        Ok(Self {
            m,
            bricks,
            brick_inverses,
            mixing,
            mixing_inverse,
            rounds,
            schedule,
        })
    }

    /// Same cipher with the rotation schedule.
    pub fn with_default_schedule(
        bricks: Vec<Vbf>,
        mixing: BinMatrix,
        rounds: usize,
    ) -> Result<Self> {
        let d = bricks.first().map_or(0, |b| b.input_width()) * bricks.len();
        Self::new(bricks, mixing, rounds, Arc::new(RotateSchedule::new(d)))
    }

    pub fn with_rounds(&self, rounds: usize) -> Result<Self> {
        Self::new(
            self.bricks.clone(),
            self.mixing.clone(),
            rounds,
            self.schedule.clone(),
        )
    }

    pub fn with_schedule(&self, schedule: Arc<dyn KeySchedule>) -> Result<Self> {
        Self::new(
            self.bricks.clone(),
            self.mixing.clone(),
            self.rounds,
            schedule,
        )
    }

    pub fn with_mixing(&self, mixing: BinMatrix) -> Result<Self> {
        Self::new(
            self.bricks.clone(),
            mixing,
            self.rounds,
            self.schedule.clone(),
        )
    }

    pub fn with_bricks(&self, bricks: Vec<Vbf>) -> Result<Self> {
        Self::new(
            bricks,
            self.mixing.clone(),
            self.rounds,
            self.schedule.clone(),
        )
    }

    pub fn brick_width(&self) -> usize {
        self.m
    }

    pub fn brick_count(&self) -> usize {
        self.bricks.len()
    }

    pub fn width(&self) -> usize {
        self.m * self.bricks.len()
    }

    pub fn bricks(&self) -> &[Vbf] {
        &self.bricks
    }

    pub fn mixing(&self) -> &BinMatrix {
        &self.mixing
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn schedule(&self) -> &dyn KeySchedule {
        self.schedule.as_ref()
    }

    pub fn round_key(&self, key: u64, round: usize) -> u64 {
        self.schedule.round_key(key, round) & self.mask()
    }

    fn mask(&self) -> u64 {
        if self.width() == 64 {
            u64::MAX
        } else {
            (1u64 << self.width()) - 1
        }
    }

    fn bricklayer<'s>(&'s self, x: u64, tables: impl Fn(usize) -> &'s [u64]) -> u64 {
        let low = (1u64 << self.m) - 1;
        (0..self.bricks.len()).fold(0, |acc, i| {
            let shift = i * self.m;
            acc | tables(i)[((x >> shift) & low) as usize] << shift
        })
    }

    pub fn gamma_bits(&self, x: u64) -> u64 {
        self.bricklayer(x, |i| self.bricks[i].table())
    }

    pub fn gamma_inverse_bits(&self, x: u64) -> u64 {
        self.bricklayer(x, |i| &self.brick_inverses[i])
    }

    pub fn lambda_bits(&self, x: u64) -> u64 {
        self.mixing.apply_bits(x)
    }

    pub fn round_bits(&self, x: u64, round_key: u64) -> u64 {
        self.lambda_bits(self.gamma_bits(x)) ^ round_key
    }

    pub fn round_inverse_bits(&self, y: u64, round_key: u64) -> u64 {
        self.gamma_inverse_bits(self.mixing_inverse.apply_bits(y ^ round_key))
    }

    pub fn encrypt_bits(&self, key: u64, x: u64) -> u64 {
        (1..=self.rounds).fold(x, |s, h| self.round_bits(s, self.round_key(key, h)))
    }

    pub fn decrypt_bits(&self, key: u64, y: u64) -> u64 {
        (1..=self.rounds)
            .rev()
            .fold(y, |s, h| self.round_inverse_bits(s, self.round_key(key, h)))
    }

    /// Full encryption table for one key.
    pub fn encryption_table(&self, key: u64) -> Vec<u64> {
        (0..1u64 << self.width())
            .map(|x| self.encrypt_bits(key, x))
            .collect()
    }

    /// Table of the keyless round `λγ`.
    pub fn lambda_gamma_table(&self) -> Vec<u64> {
        (0..1u64 << self.width())
            .map(|x| self.lambda_bits(self.gamma_bits(x)))
            .collect()
    }

    fn check(&self, v: BinVec) -> Result<()> {
        if v.width() != self.width() {
            return Err(SpaceError::WidthMismatch {
                expected: self.width(),
                found: v.width(),
            }
            .into());
        }
        Ok(())
    }
}

pub fn gamma_apply(spec: &CipherSpec, x: BinVec) -> Result<BinVec> {
    spec.check(x)?;
    Ok(BinVec::from_bits(spec.gamma_bits(x.bits()), spec.width()))
}

pub fn lambda_apply(spec: &CipherSpec, x: BinVec) -> Result<BinVec> {
    spec.check(x)?;
    Ok(BinVec::from_bits(spec.lambda_bits(x.bits()), spec.width()))
}

pub fn encrypt(spec: &CipherSpec, key: BinVec, x: BinVec) -> Result<BinVec> {
    spec.check(key)?;
    spec.check(x)?;
    Ok(BinVec::from_bits(
        spec.encrypt_bits(key.bits(), x.bits()),
        spec.width(),
    ))
}

pub fn decrypt(spec: &CipherSpec, key: BinVec, y: BinVec) -> Result<BinVec> {
    spec.check(key)?;
    spec.check(y)?;
    Ok(BinVec::from_bits(
        spec.decrypt_bits(key.bits(), y.bits()),
        spec.width(),
    ))
}

pub fn toy_field() -> FieldSpec {
    FieldSpec::from_binary_str(TOY_MODULUS).expect("constant modulus is irreducible")
}

/// The toy S-box in coordinates given by `basis`.
pub fn toy_brick(basis: &FieldBasis) -> Vbf {
    Vbf::from_univariate(&TOY_BRICK_COEFFS, &toy_field(), basis).expect("widths match")
}

pub fn toy_mixing() -> BinMatrix {
    BinMatrix::parse_text(&TOY_LAMBDA_ROWS.join("\n")).expect("constant matrix")
}

/// How the mixing matrix acts on a row of coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingConvention {
    /// `x ↦ x·λ`
    RowVector,
    /// `x ↦ λ·x`, i.e. `x·λ^T`
    ColumnVector,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Calibration {
    pub basis: BinMatrix,
    pub convention: MixingConvention,
}

/// Every (field basis, mixing convention) pair for which `λγ` and all XOR
/// translations lie in `AGL(V, ∘')`, searched over all invertible 3×3 bases.
pub fn calibrate_basis() -> Vec<Calibration> {
    let hs = toy_sum();
    let translations_ok = (0..6).all(|i| {
        agl_membership(&AffineMap::translation_by(BinVec::unit(i, 6)).table(), &hs)
            .expect("translations are bijective")
    });
    if !translations_ok {
        return Vec::new();
    }
    let lambda = toy_mixing();
    let mut out = Vec::new();
    for basis in BinMatrix::all_invertible(3) {
        let fb = FieldBasis::new(basis.clone()).expect("basis is invertible");
        let brick = toy_brick(&fb);
        for (convention, mixing) in [
            (MixingConvention::RowVector, lambda.clone()),
            (MixingConvention::ColumnVector, lambda.transpose()),
        ] {
            let spec =
                CipherSpec::with_default_schedule(vec![brick.clone(), brick.clone()], mixing, 1)
                    .expect("toy constants are valid");
            if agl_membership(&spec.lambda_gamma_table(), &hs).expect("round is bijective") {
                out.push(Calibration {
                    basis: basis.clone(),
                    convention,
                });
            }
        }
    }
    out
}

/// The pinned calibration: ascending polynomial basis, `x·λ`.
pub fn toy_basis() -> FieldBasis {
    FieldBasis::ascending(3)
}

/// The toy cipher: two copies of the toy brick, the toy mixing layer, the
/// rotation schedule and `DEFAULT_ROUNDS` rounds.
pub fn builtin_toy_spec() -> CipherSpec {
    let brick = toy_brick(&toy_basis());
    CipherSpec::with_default_schedule(vec![brick.clone(), brick], toy_mixing(), DEFAULT_ROUNDS)
        .expect("toy constants are valid")
}

/// Closed-form `∘`-coordinates on a toy brick: `λ1 = x1`, `λ3 = x3`,
/// `λ2 = λ1λ3 + x2`.
pub fn toy_brick_coordinates(x: u64) -> u64 {
    let (x1, x2, x3) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
    x1 | ((x1 & x3) ^ x2) << 1 | x3 << 2
}

/// Closed-form `∘'`-coordinates on the two-brick block.
pub fn toy_coordinates(x: u64) -> u64 {
    toy_brick_coordinates(x & 7) | toy_brick_coordinates(x >> 3) << 3
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Encrypt,
    Decrypt,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Query {
    pub direction: Direction,
    pub input: u64,
    pub output: u64,
    /// Verification traffic, metered separately from the attack.
    pub audit: bool,
}

/// Black-box access to a permutation of `V`, with metered queries.
pub struct Oracle<'a> {
    direction: Direction,
    width: usize,
    f: Box<dyn Fn(u64) -> u64 + 'a>,
    attack_queries: usize,
    audit_queries: usize,
    log: Vec<Query>,
}

impl fmt::Debug for Oracle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("direction", &self.direction)
            .field("width", &self.width)
            .field("attack_queries", &self.attack_queries)
            .field("audit_queries", &self.audit_queries)
            .finish()
    }
}

impl<'a> Oracle<'a> {
    pub fn from_fn(direction: Direction, width: usize, f: impl Fn(u64) -> u64 + 'a) -> Self {
        Self {
            direction,
            width,
            f: Box::new(f),
            attack_queries: 0,
            audit_queries: 0,
            log: Vec::new(),
        }
    }

    pub fn encrypt(spec: &'a CipherSpec, key: u64) -> Self {
        Self::from_fn(Direction::Encrypt, spec.width(), move |x| {
            spec.encrypt_bits(key, x)
        })
    }

    pub fn decrypt(spec: &'a CipherSpec, key: u64) -> Self {
        Self::from_fn(Direction::Decrypt, spec.width(), move |y| {
            spec.decrypt_bits(key, y)
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// An attack query.
    pub fn query(&mut self, x: u64) -> u64 {
        self.call(x, false)
    }

    /// A verification query; does not count towards the attack cost.
    pub fn audit_query(&mut self, x: u64) -> u64 {
        self.call(x, true)
    }

    fn call(&mut self, x: u64, audit: bool) -> u64 {
        let output = (self.f)(x);
        if audit {
            self.audit_queries += 1;
        } else {
            self.attack_queries += 1;
        }
        self.log.push(Query {
            direction: self.direction,
            input: x,
            output,
            audit,
        });
        output
    }

    pub fn attack_queries(&self) -> usize {
        self.attack_queries
    }

    pub fn audit_queries(&self) -> usize {
        self.audit_queries
    }

    pub fn log(&self) -> &[Query] {
        &self.log
    }
}

/// Cipher config document. Brick and mixing references are either
/// `"builtin:toy"` or a path relative to the config file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CipherConfig {
    pub bricks: Vec<String>,
    pub mixing: String,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub schedule: ScheduleKind,
    /// Seed of the `custom` schedule.
    #[serde(default)]
    pub seed: u64,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Rotate,
    /// Seeded per-round random permutation of the key space.
    Custom,
}

const BUILTIN_TOY: &str = "builtin:toy";

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CipherError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl CipherConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CipherError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<CipherSpec> {
        let cfg = Self::from_json(&read(path)?)?;
        cfg.build(path.parent().unwrap_or(Path::new(".")))
    }

    /// Resolves references against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<CipherSpec> {
        let bricks = self
            .bricks
            .iter()
            .map(|r| {
                if r == BUILTIN_TOY {
                    Ok(toy_brick(&toy_basis()))
                } else {
                    Ok(Vbf::parse_sbox_text(&read(&base_dir.join(r))?)?)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mixing = if self.mixing == BUILTIN_TOY {
            toy_mixing()
        } else {
            BinMatrix::parse_text(&read(&base_dir.join(&self.mixing))?)?
        };
        let d = bricks.first().map_or(0, |b| b.input_width()) * bricks.len();
        let schedule: Arc<dyn KeySchedule> = match self.schedule {
            ScheduleKind::Rotate => Arc::new(RotateSchedule::new(d)),
            ScheduleKind::Custom => Arc::new(PermutationSchedule::new(d, self.rounds, self.seed)),
        };
        CipherSpec::new(bricks, mixing, self.rounds, schedule)
    }
}
