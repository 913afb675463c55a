//! Exact arithmetic over `F_2`: fixed-width bit vectors, square bit matrices
//! in row-vector convention (`x·M`), affine maps, and `GF(2^m)` elements.
//!
//! Vectors store coordinate `i` in bit `i` of a `u64`. Field elements are
//! plain `u64` values in ascending encoding: bit `i` is the coefficient of
//! `α^i`. A basis matrix bridges the two worlds: `field_to_vec(a) = a·B`.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

/// Largest vector width representable by [`BinVec`].
pub const MAX_WIDTH: usize = 64;

/// Largest supported extension degree. Products of two elements must fit in
/// a `u64` before reduction.
pub const MAX_FIELD_DEGREE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("value {value:#x} does not fit in {width} bits")]
    OutOfRange { value: u64, width: usize },
    #[error("width {0} is not supported (1..={MAX_WIDTH})")]
    BadWidth(usize),
    #[error("singular {dim}x{dim} matrix (rank {rank})")]
    Singular { dim: usize, rank: usize },
    #[error("modulus {modulus:#b} is not irreducible (divisible by {factor:#b})")]
    Reducible { modulus: u64, factor: u64 },
    #[error("modulus {modulus:#b} does not have degree {m}")]
    DegreeMismatch { modulus: u64, m: usize },
    #[error("extension degree {0} is not supported (1..={MAX_FIELD_DEGREE})")]
    BadDegree(usize),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = SpaceError> = std::result::Result<T, E>;

fn mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> SpaceError {
    SpaceError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// An element of `V = (F_2)^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinVec {
    bits: u64,
    width: u8,
}

impl BinVec {
    pub fn new(bits: u64, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(SpaceError::BadWidth(width));
        }
        if bits & !mask(width) != 0 {
            return Err(SpaceError::OutOfRange { value: bits, width });
        }
        Ok(Self {
            bits,
            width: width as u8,
        })
    }

    /// Builds a vector from an integer already known to fit; panics otherwise.
    pub fn from_bits(bits: u64, width: usize) -> Self {
        Self::new(bits, width).expect("bits must fit in width")
    }

    pub fn zero(width: usize) -> Self {
        Self::from_bits(0, width)
    }

    /// The standard basis vector `e_{i+1}` (coordinate `i` set).
    pub fn unit(i: usize, width: usize) -> Self {
        assert!(i < width, "unit index {i} out of range for width {width}");
        Self::from_bits(1 << i, width)
    }

    pub fn from_coords(coords: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &c) in coords.iter().enumerate() {
            match c {
                0 => {}
                1 => bits |= 1 << i,
                _ => return Err(parse_err(1, i + 1, format!("coordinate {c} is not a bit"))),
            }
        }
        Self::new(bits, coords.len())
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn width(self) -> usize {
        self.width as usize
    }

    #[inline]
    pub fn get(self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    fn check_width(self, other: Self) -> Result<()> {
        if self.width != other.width {
            return Err(SpaceError::WidthMismatch {
                expected: self.width(),
                found: other.width(),
            });
        }
        Ok(())
    }

    pub fn checked_xor(self, other: Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(Self {
            bits: self.bits ^ other.bits,
            width: self.width,
        })
    }

    /// Standard inner product `<x, y>` over `F_2`.
    pub fn dot(self, other: Self) -> bool {
        assert_eq!(
            self.width, other.width,
            "dot of vectors with different widths"
        );
        (self.bits & other.bits).count_ones() & 1 == 1
    }

    /// Cyclic rotation towards higher coordinates: `e_1` rotated by 1 is `e_2`.
    pub fn rotate(self, k: usize) -> Self {
        let w = self.width();
        let k = k % w;
        if k == 0 {
            return self;
        }
        let bits = ((self.bits << k) | (self.bits >> (w - k))) & mask(w);
        Self::from_bits(bits, w)
    }

    /// `(self, other)` with `self` occupying the low coordinates.
    pub fn concat(self, other: Self) -> Result<Self> {
        let w = self.width() + other.width();
        Self::new(self.bits | (other.bits << self.width()), w)
    }

    /// Coordinates `start..start + width` as a new vector.
    pub fn slice(self, start: usize, width: usize) -> Self {
        assert!(start + width <= self.width());
        Self::from_bits((self.bits >> start) & mask(width), width)
    }

    /// Lowercase hex of the integer value, zero-padded to `ceil(width / 4)` digits.
    pub fn to_hex(self) -> String {
        let digits = self.width().div_ceil(4);
        format!("{:0digits$x}", self.bits)
    }

    pub fn from_hex(s: &str, width: usize) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix("0x").unwrap_or(t);
        let bits = u64::from_str_radix(t, 16)
            .map_err(|e| parse_err(1, 1, format!("invalid hex {s:?}: {e}")))?;
        Self::new(bits, width)
    }

    /// Iterates over all `2^width` vectors in integer order.
    pub fn all(width: usize) -> impl Iterator<Item = BinVec> {
        assert!(width < 64, "exhaustive iteration over 2^{width} vectors");
        (0..1u64 << width).map(move |b| BinVec::from_bits(b, width))
    }
}

/// Serialized as its hex form.
impl serde::Serialize for BinVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl BitXor for BinVec {
    type Output = BinVec;

    fn bitxor(self, rhs: Self) -> Self::Output {
        self.checked_xor(rhs)
            .expect("XOR of vectors with different widths")
    }
}

/// Coordinate 0 first, one '0'/'1' character per coordinate.
impl fmt::Display for BinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinVec({self})")
    }
}

impl FromStr for BinVec {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let coords = s
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(parse_err(1, i + 1, format!("unexpected character {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if coords.is_empty() {
            return Err(parse_err(1, 1, "empty bit string"));
        }
        Self::from_coords(&coords)
    }
}

/// A square `d×d` matrix over `F_2`, rows stored as bit masks.
///
/// Vectors multiply from the left: `x·M` is the XOR of the rows selected by
/// the set coordinates of `x`.
pub struct BinMatrix {
    dim: usize,
    rows: Vec<u64>,
    // Ok(inverse rows) or Err(rank)
    inverse: OnceLock<std::result::Result<Vec<u64>, usize>>,
}

impl Clone for BinMatrix {
    fn clone(&self) -> Self {
        let inverse = OnceLock::new();
        if let Some(v) = self.inverse.get() {
            let _ = inverse.set(v.clone());
        }
        Self {
            dim: self.dim,
            rows: self.rows.clone(),
            inverse,
        }
    }
}

impl PartialEq for BinMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.rows == other.rows
    }
}

impl Eq for BinMatrix {}

impl std::hash::Hash for BinMatrix {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.rows.hash(state);
    }
}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.dim).map(|i| self.row(i).to_string()))
            .finish()
    }
}

impl BinMatrix {
    pub fn from_row_bits(dim: usize, rows: Vec<u64>) -> Result<Self> {
        if dim == 0 || dim > MAX_WIDTH {
            return Err(SpaceError::BadWidth(dim));
        }
        if rows.len() != dim {
            return Err(SpaceError::WidthMismatch {
                expected: dim,
                found: rows.len(),
            });
        }
        if let Some(&r) = rows.iter().find(|&&r| r & !mask(dim) != 0) {
            return Err(SpaceError::OutOfRange {
                value: r,
                width: dim,
            });
        }
        Ok(Self {
            dim,
            rows,
            inverse: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[BinVec]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.width() != dim {
                return Err(SpaceError::WidthMismatch {
                    expected: dim,
                    found: r.width(),
                });
            }
        }
        Self::from_row_bits(dim, rows.iter().map(|r| r.bits()).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_row_bits(dim, (0..dim).map(|i| 1u64 << i).collect())
            .expect("identity dimension in range")
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_row_bits(dim, vec![0; dim]).expect("zero dimension in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> BinVec {
        BinVec::from_bits(self.rows[i], self.dim)
    }

    pub fn row_bits(&self) -> &[u64] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.rows[i] >> j) & 1 == 1
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| r == 1 << i)
    }

    /// `x·M` on raw bits; `x` must fit in `dim` bits.
    #[inline]
    pub fn apply_bits(&self, x: u64) -> u64 {
        let mut acc = 0;
        let mut rest = x;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            acc ^= self.rows[i];
            rest &= rest - 1;
        }
        acc
    }

    pub fn apply(&self, x: BinVec) -> Result<BinVec> {
        if x.width() != self.dim {
            return Err(SpaceError::WidthMismatch {
                expected: self.dim,
                found: x.width(),
            });
        }
        Ok(BinVec::from_bits(self.apply_bits(x.bits()), self.dim))
    }

    /// Matrix product `self·other`; as maps on row vectors, `self` acts first.
    pub fn mul(&self, other: &BinMatrix) -> Result<BinMatrix> {
        if self.dim != other.dim {
            return Err(SpaceError::WidthMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let rows = self.rows.iter().map(|&r| other.apply_bits(r)).collect();
        BinMatrix::from_row_bits(self.dim, rows)
    }

    pub fn transpose(&self) -> BinMatrix {
        let rows = (0..self.dim)
            .map(|j| {
                (0..self.dim)
                    .filter(|&i| self.get(i, j))
                    .fold(0u64, |acc, i| acc | 1 << i)
            })
            .collect();
        BinMatrix::from_row_bits(self.dim, rows).expect("same dimension")
    }

    fn eliminate(&self) -> std::result::Result<Vec<u64>, usize> {
        let d = self.dim;
        let mut a = self.rows.clone();
        let mut inv: Vec<u64> = (0..d).map(|i| 1u64 << i).collect();
        let mut rank = 0;
        for col in 0..d {
            let Some(p) = (rank..d).find(|&r| (a[r] >> col) & 1 == 1) else {
                continue;
            };
            a.swap(rank, p);
            inv.swap(rank, p);
            for r in 0..d {
                if r != rank && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[rank];
                    inv[r] ^= inv[rank];
                }
            }
            rank += 1;
        }
        if rank == d {
            Ok(inv)
        } else {
            Err(rank)
        }
    }

    fn elimination(&self) -> &std::result::Result<Vec<u64>, usize> {
        self.inverse.get_or_init(|| self.eliminate())
    }

    pub fn rank(&self) -> usize {
        match self.elimination() {
            Ok(_) => self.dim,
            Err(r) => *r,
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.elimination().is_ok()
    }

    /// Gauss-Jordan inverse; the elimination result is cached.
    pub fn inverse(&self) -> Result<BinMatrix> {
        match self.elimination() {
            Ok(rows) => BinMatrix::from_row_bits(self.dim, rows.clone()),
            Err(rank) => Err(SpaceError::Singular {
                dim: self.dim,
                rank: *rank,
            }),
        }
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> BinMatrix {
        let rows = (0..dim).map(|_| rng.gen::<u64>() & mask(dim)).collect();
        BinMatrix::from_row_bits(dim, rows).expect("masked rows fit")
    }

    pub fn random_invertible<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> BinMatrix {
        loop {
            let m = Self::random(dim, rng);
            if m.is_invertible() {
                return m;
            }
        }
    }

    /// All invertible `dim×dim` matrices in increasing row-bits order.
    pub fn all_invertible(dim: usize) -> Vec<BinMatrix> {
        assert!(
            dim * dim < 32,
            "exhaustive enumeration of {dim}x{dim} matrices"
        );
        (0..1u64 << (dim * dim))
            .map(|code| {
                let rows = (0..dim).map(|i| (code >> (i * dim)) & mask(dim)).collect();
                BinMatrix::from_row_bits(dim, rows).expect("masked rows fit")
            })
            .filter(BinMatrix::is_invertible)
            .collect()
    }

    /// Parses one row per line of '0'/'1' characters. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse_text(text: &str) -> Result<BinMatrix> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: BinVec = t.parse().map_err(|e| match e {
                SpaceError::Parse {
                    column, message, ..
                } => parse_err(lineno + 1, column, message),
                other => other,
            })?;
            rows.push((lineno + 1, v));
        }
        let dim = rows.len();
        if dim == 0 {
            return Err(parse_err(1, 1, "no matrix rows"));
        }
        for (line, r) in &rows {
            if r.width() != dim {
                return Err(parse_err(
                    *line,
                    1,
                    format!("row has {} columns, expected {dim}", r.width()),
                ));
            }
        }
        let rows: Vec<BinVec> = rows.into_iter().map(|(_, r)| r).collect();
        BinMatrix::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.dim {
            s.push_str(&self.row(i).to_string());
            s.push('\n');
        }
        s
    }
}

/// `x·M` with `result[j] = XOR_i x[i]·M[i][j]`.
pub fn mat_vec_mul(x: BinVec, m: &BinMatrix) -> Result<BinVec> {
    m.apply(x)
}

pub fn mat_inverse(m: &BinMatrix) -> Result<BinMatrix> {
    m.inverse()
}

/// `x ↦ x·matrix + translation` with an invertible matrix; an element of `AGL(V, +)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineMap {
    matrix: BinMatrix,
    translation: BinVec,
}

impl AffineMap {
    pub fn new(matrix: BinMatrix, translation: BinVec) -> Result<Self> {
        if translation.width() != matrix.dim() {
            return Err(SpaceError::WidthMismatch {
                expected: matrix.dim(),
                found: translation.width(),
            });
        }
        if !matrix.is_invertible() {
            return Err(SpaceError::Singular {
                dim: matrix.dim(),
                rank: matrix.rank(),
            });
        }
        Ok(Self {
            matrix,
            translation,
        })
    }

    pub fn identity(width: usize) -> Self {
        Self {
            matrix: BinMatrix::identity(width),
            translation: BinVec::zero(width),
        }
    }

    pub fn translation_by(v: BinVec) -> Self {
        Self {
            matrix: BinMatrix::identity(v.width()),
            translation: v,
        }
    }

    pub fn linear(matrix: BinMatrix) -> Result<Self> {
        let w = matrix.dim();
        Self::new(matrix, BinVec::zero(w))
    }

    pub fn matrix(&self) -> &BinMatrix {
        &self.matrix
    }

    pub fn translation(&self) -> BinVec {
        self.translation
    }

    pub fn width(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn apply_bits(&self, x: u64) -> u64 {
        self.matrix.apply_bits(x) ^ self.translation.bits()
    }

    pub fn apply(&self, x: BinVec) -> Result<BinVec> {
        Ok(self.matrix.apply(x)? ^ self.translation)
    }

    /// `self ∘ inner`: apply `inner`, then `self`.
    pub fn after(&self, inner: &AffineMap) -> Result<AffineMap> {
        let matrix = inner.matrix.mul(&self.matrix)?;
        let translation = self.apply(inner.translation)?;
        Ok(AffineMap {
            matrix,
            translation,
        })
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self
            .matrix
            .inverse()
            .expect("AffineMap matrix is invertible");
        let translation = BinVec::from_bits(inv.apply_bits(self.translation.bits()), self.width());
        AffineMap {
            matrix: inv,
            translation,
        }
    }

    pub fn is_translation(&self) -> bool {
        self.matrix.is_identity()
    }

    /// Lookup table of the map over all `2^width` inputs.
    pub fn table(&self) -> Vec<u64> {
        (0..1u64 << self.width())
            .map(|x| self.apply_bits(x))
            .collect()
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> AffineMap {
        let matrix = BinMatrix::random_invertible(width, rng);
        let translation = BinVec::from_bits(rng.gen::<u64>() & mask(width), width);
        AffineMap {
            matrix,
            translation,
        }
    }
}

/// An affine map whose linear part may be singular, `x ↦ x·matrix + translation`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineFn {
    pub matrix: BinMatrix,
    pub translation: BinVec,
}

impl AffineFn {
    pub fn zero(width: usize) -> Self {
        Self {
            matrix: BinMatrix::zero(width),
            translation: BinVec::zero(width),
        }
    }

    #[inline]
    pub fn apply_bits(&self, x: u64) -> u64 {
        self.matrix.apply_bits(x) ^ self.translation.bits()
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> AffineFn {
        Self {
            matrix: BinMatrix::random(width, rng),
            translation: BinVec::from_bits(rng.gen::<u64>() & mask(width), width),
        }
    }
}

impl From<AffineMap> for AffineFn {
    fn from(a: AffineMap) -> Self {
        Self {
            matrix: a.matrix,
            translation: a.translation,
        }
    }
}

/// A linear subspace of `(F_2)^width`, kept as a fully reduced echelon basis
/// (pivot = highest set bit) so that equal subspaces compare equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    width: usize,
    basis: Vec<u64>,
}

impl Subspace {
    pub fn trivial(width: usize) -> Self {
        Self {
            width,
            basis: Vec::new(),
        }
    }

    pub fn full(width: usize) -> Self {
        Self::span(width, (0..width).map(|i| 1u64 << i))
    }

    pub fn span(width: usize, vectors: impl IntoIterator<Item = u64>) -> Self {
        let mut s = Self::trivial(width);
        for v in vectors {
            s.insert(v);
        }
        s
    }

    /// Adds `v` to the spanning set; returns false if it was already contained.
    pub fn insert(&mut self, v: u64) -> bool {
        let r = self.reduce(v);
        if r == 0 {
            return false;
        }
        let pivot = 63 - r.leading_zeros();
        for b in &mut self.basis {
            if (*b >> pivot) & 1 == 1 {
                *b ^= r;
            }
        }
        self.basis.push(r);
        self.basis.sort_unstable_by(|a, b| b.cmp(a));
        true
    }

    /// Canonical representative of `v + self`.
    pub fn reduce(&self, mut v: u64) -> u64 {
        for &b in &self.basis {
            let pivot = 63 - b.leading_zeros();
            if (v >> pivot) & 1 == 1 {
                v ^= b;
            }
        }
        v
    }

    pub fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn size(&self) -> u64 {
        1 << self.dim()
    }

    pub fn basis(&self) -> Vec<BinVec> {
        self.basis
            .iter()
            .map(|&b| BinVec::from_bits(b, self.width))
            .collect()
    }

    pub fn basis_bits(&self) -> &[u64] {
        &self.basis
    }

    pub fn elements(&self) -> Vec<u64> {
        let mut out = vec![0u64];
        for &b in &self.basis {
            let more: Vec<u64> = out.iter().map(|&x| x ^ b).collect();
            out.extend(more);
        }
        out.sort_unstable();
        out
    }

    /// `{w : <w, v> = 0 for all v in self}`.
    pub fn perp(&self) -> Subspace {
        assert!(self.width < 32, "perp enumerates 2^{} vectors", self.width);
        Subspace::span(
            self.width,
            (0..1u64 << self.width)
                .filter(|&w| self.basis.iter().all(|&b| (w & b).count_ones() % 2 == 0)),
        )
    }
}

/// `base + linear`, with `base` reduced modulo `linear`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineSubspace {
    base: u64,
    linear: Subspace,
}

impl AffineSubspace {
    pub fn new(base: BinVec, linear: Subspace) -> Self {
        assert_eq!(base.width(), linear.width());
        Self {
            base: linear.reduce(base.bits()),
            linear,
        }
    }

    pub fn base(&self) -> BinVec {
        BinVec::from_bits(self.base, self.linear.width())
    }

    pub fn linear(&self) -> &Subspace {
        &self.linear
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.linear.reduce(v) == self.base
    }
}

fn degree(p: u64) -> Option<usize> {
    (p != 0).then(|| 63 - p.leading_zeros() as usize)
}

fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = degree(b).expect("nonzero divisor");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// `GF(2^m)` as `F_2[x] / (modulus)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldSpec {
    m: usize,
    modulus: u64,
}

impl FieldSpec {
    /// Verifies irreducibility by trial division over every polynomial of
    /// degree `1..=m/2`.
    pub fn new(m: usize, modulus: u64) -> Result<Self> {
        if m == 0 || m > MAX_FIELD_DEGREE {
            return Err(SpaceError::BadDegree(m));
        }
        if degree(modulus) != Some(m) {
            return Err(SpaceError::DegreeMismatch { modulus, m });
        }
        for deg in 1..=m / 2 {
            for low in 0..1u64 << deg {
                let factor = (1u64 << deg) | low;
                if poly_rem(modulus, factor) == 0 {
                    return Err(SpaceError::Reducible { modulus, factor });
                }
            }
        }
        Ok(Self { m, modulus })
    }

    /// Parses a binary literal such as `"1011"` for `x^3 + x + 1`.
    pub fn from_binary_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix("0b").unwrap_or(t);
        let modulus = u64::from_str_radix(t, 2)
            .map_err(|e| parse_err(1, 1, format!("invalid modulus {s:?}: {e}")))?;
        let m = degree(modulus).ok_or_else(|| parse_err(1, 1, "zero modulus"))?;
        Self::new(m, modulus)
    }

    /// A fixed irreducible modulus for each `m` in `2..=16`. `m = 3` and
    /// `m = 6` use `x^3+x+1` and `x^6+x^4+x^3+x+1`.
    pub fn standard(m: usize) -> Result<Self> {
        let modulus = match m {
            2 => 0b111,
            3 => 0b1011,
            4 => 0b1_0011,
            5 => 0b10_0101,
            6 => 0b101_1011,
            7 => 0b1000_0011,
            8 => 0b1_0001_1011,
            9 => 0b10_0001_0001,
            10 => 0b100_0000_1001,
            11 => 0b1000_0000_0101,
            12 => 0b1_0000_0101_0011,
            13 => 0b10_0000_0001_1011,
            14 => 0b100_0100_0100_0011,
            15 => 0b1000_0000_0000_0011,
            16 => 0b1_0001_0000_0000_1011,
            _ => return Err(SpaceError::BadDegree(m)),
        };
        Self::new(m, modulus)
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1 << self.m
    }

    pub fn modulus_string(&self) -> String {
        format!("{:b}", self.modulus)
    }

    pub fn contains(&self, a: u64) -> bool {
        a < self.order()
    }

    /// The class of `x`, written `α` elsewhere.
    pub fn generator(&self) -> u64 {
        if self.m == 1 {
            poly_rem(0b10, self.modulus)
        } else {
            0b10
        }
    }

    /// Carry-less product reduced by the modulus. Inputs must be reduced.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        let mut prod = 0u64;
        let mut rest = b;
        while rest != 0 {
            let i = rest.trailing_zeros();
            prod ^= a << i;
            rest &= rest - 1;
        }
        let m = self.m;
        for i in (m..2 * m - 1).rev() {
            if (prod >> i) & 1 == 1 {
                prod ^= self.modulus << (i - m);
            }
        }
        prod
    }

    /// Square-and-multiply; `pow(a, 0) = 1` for every `a`, including 0.
    pub fn pow(&self, a: u64, mut k: u64) -> u64 {
        let mut base = a;
        let mut acc = 1;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, with `0 ↦ 0`.
    pub fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.order() - 2)
    }

    fn check(&self, a: u64) -> Result<()> {
        if !self.contains(a) {
            return Err(SpaceError::OutOfRange {
                value: a,
                width: self.m,
            });
        }
        Ok(())
    }
}

pub fn gf_mul(a: u64, b: u64, fs: &FieldSpec) -> Result<u64> {
    fs.check(a)?;
    fs.check(b)?;
    Ok(fs.mul(a, b))
}

pub fn gf_pow(a: u64, k: u64, fs: &FieldSpec) -> Result<u64> {
    fs.check(a)?;
    Ok(fs.pow(a, k))
}

/// The bijection between field elements and coordinate vectors induced by an
/// invertible basis matrix `B`: `vec = a·B`, `a = vec·B⁻¹`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldBasis {
    to_vec: BinMatrix,
    to_field: BinMatrix,
}

impl FieldBasis {
    pub fn new(basis: BinMatrix) -> Result<Self> {
        let to_field = basis.inverse()?;
        Ok(Self {
            to_vec: basis,
            to_field,
        })
    }

    /// Bit `i` of a field element maps to coordinate `i`.
    pub fn ascending(m: usize) -> Self {
        Self::new(BinMatrix::identity(m)).expect("identity is invertible")
    }

    pub fn matrix(&self) -> &BinMatrix {
        &self.to_vec
    }

    pub fn width(&self) -> usize {
        self.to_vec.dim()
    }

    #[inline]
    pub fn to_vec_bits(&self, a: u64) -> u64 {
        self.to_vec.apply_bits(a)
    }

    #[inline]
    pub fn to_field_bits(&self, v: u64) -> u64 {
        self.to_field.apply_bits(v)
    }

    pub fn to_vec(&self, a: u64) -> Result<BinVec> {
        self.to_vec.apply(BinVec::new(a, self.width())?)
    }

    pub fn to_field(&self, v: BinVec) -> Result<u64> {
        Ok(self.to_field.apply(v)?.bits())
    }
}

pub fn field_to_vec(a: u64, basis: &BinMatrix) -> Result<BinVec> {
    FieldBasis::new(basis.clone())?.to_vec(a)
}

pub fn vec_to_field(v: BinVec, basis: &BinMatrix) -> Result<u64> {
    FieldBasis::new(basis.clone())?.to_field(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf8() -> FieldSpec {
        FieldSpec::new(3, 0b1011).unwrap()
    }

    fn gf64() -> FieldSpec {
        FieldSpec::new(6, 0b101_1011).unwrap()
    }

    // Schoolbook reference: multiply by repeated shift-and-reduce.
    fn slow_mul(a: u64, b: u64, fs: &FieldSpec) -> u64 {
        let m = fs.degree();
        let mut acc = 0;
        let mut shifted = a;
        for i in 0..m {
            if (b >> i) & 1 == 1 {
                acc ^= shifted;
            }
            shifted <<= 1;
            if (shifted >> m) & 1 == 1 {
                shifted ^= fs.modulus();
            }
        }
        acc
    }

    #[test]
    fn gf_mul_examples() {
        let fs = gf8();
        // α·α² = α³ = α + 1
        assert_eq!(gf_mul(0b010, 0b100, &fs).unwrap(), 0b011);
        for a in 0..8 {
            assert_eq!(gf_mul(a, 1, &fs).unwrap(), a);
        }
        let fs = gf64();
        let e5 = fs.pow(2, 5);
        assert_eq!(gf_mul(2, e5, &fs).unwrap(), 0b011011);
        assert!(matches!(
            gf_mul(8, 1, &gf8()),
            Err(SpaceError::OutOfRange { .. })
        ));
    }

    #[test]
    fn gf_pow_examples() {
        let fs = gf8();
        assert_eq!(gf_pow(0, 6, &fs).unwrap(), 0);
        assert_eq!(gf_pow(0, 0, &fs).unwrap(), 1);
        for a in 0..8 {
            assert_eq!(gf_pow(a, 1, &fs).unwrap(), a);
        }
        // α^5 by repeated multiplication
        let mut acc = 1;
        for _ in 0..5 {
            acc = slow_mul(acc, 0b010, &fs);
        }
        assert_eq!(acc, 0b111);
        assert_eq!(gf_pow(0b010, 5, &fs).unwrap(), acc);
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for m in 2..=6 {
            let fs = FieldSpec::standard(m).unwrap();
            let q = fs.order();
            for a in 0..q {
                for b in 0..q {
                    let ab = fs.mul(a, b);
                    assert_eq!(ab, fs.mul(b, a));
                    assert_eq!(ab, slow_mul(a, b, &fs));
                    for c in 0..q {
                        assert_eq!(fs.mul(ab, c), fs.mul(a, fs.mul(b, c)));
                        assert_eq!(fs.mul(a, b ^ c), ab ^ fs.mul(a, c));
                    }
                }
                if a != 0 {
                    assert_eq!(fs.mul(a, fs.inv(a)), 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn field_axioms_random_large(m in 7usize..=16, a: u64, b: u64, c: u64) {
            let fs = FieldSpec::standard(m).unwrap();
            let (a, b, c) = (a % fs.order(), b % fs.order(), c % fs.order());
            prop_assert_eq!(fs.mul(a, b), fs.mul(b, a));
            prop_assert_eq!(fs.mul(fs.mul(a, b), c), fs.mul(a, fs.mul(b, c)));
            prop_assert_eq!(fs.mul(a, b ^ c), fs.mul(a, b) ^ fs.mul(a, c));
            prop_assert_eq!(fs.mul(a, b), slow_mul(a, b, &fs));
        }

        #[test]
        fn inverse_roundtrip(seed: u64, d in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = BinMatrix::random_invertible(d, &mut rng);
            let inv = m.inverse().unwrap();
            prop_assert!(m.mul(&inv).unwrap().is_identity());
            for x in BinVec::all(d) {
                prop_assert_eq!(mat_vec_mul(mat_vec_mul(x, &m).unwrap(), &inv).unwrap(), x);
            }
        }
    }

    #[test]
    fn standard_moduli_are_irreducible() {
        for m in 2..=16 {
            FieldSpec::standard(m).unwrap();
        }
        // x^6+x^4+x^3+x+1 has a primitive root class: ord(x) = 63
        let fs = gf64();
        let ord = (1..64).find(|&k| fs.pow(2, k) == 1).unwrap();
        assert_eq!(ord, 63);
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^4 + 1 = (x + 1)^4
        assert!(matches!(
            FieldSpec::new(4, 0b10001),
            Err(SpaceError::Reducible { factor: 0b11, .. })
        ));
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        assert!(matches!(
            FieldSpec::new(4, 0b10101),
            Err(SpaceError::Reducible { factor: 0b111, .. })
        ));
        assert!(FieldSpec::new(3, 0b1011).is_ok());
        assert_eq!(FieldSpec::from_binary_str("1011").unwrap(), gf8());
        assert!(FieldSpec::new(3, 0b10011).is_err());
    }

    fn tau_matrix(i: usize) -> BinMatrix {
        let text = ["100\n010\n011\n", "100\n010\n001\n", "110\n010\n001\n"][i];
        BinMatrix::parse_text(text).unwrap()
    }

    #[test]
    fn mat_vec_mul_examples() {
        let id = BinMatrix::identity(3);
        for x in BinVec::all(3) {
            assert_eq!(mat_vec_mul(x, &id).unwrap(), x);
        }
        let t1 = tau_matrix(0);
        let e1: BinVec = "100".parse().unwrap();
        let e3: BinVec = "001".parse().unwrap();
        assert_eq!(mat_vec_mul(e1, &t1).unwrap().to_string(), "100");
        assert_eq!(mat_vec_mul(e3, &t1).unwrap().to_string(), "011");
        assert!(mat_vec_mul(BinVec::zero(4), &t1).is_err());
    }

    #[test]
    fn mat_inverse_examples() {
        assert!(mat_inverse(&BinMatrix::identity(5)).unwrap().is_identity());
        let t3 = tau_matrix(2);
        assert!(t3.mul(&t3).unwrap().is_identity());
        assert_eq!(mat_inverse(&t3).unwrap(), t3);

        let lambda =
            BinMatrix::parse_text("011010\n010000\n111010\n010111\n000010\n010110\n").unwrap();
        let inv = mat_inverse(&lambda).unwrap();
        assert!(lambda.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&lambda).unwrap().is_identity());

        let singular = BinMatrix::parse_text("110\n011\n101\n").unwrap();
        assert_eq!(
            mat_inverse(&singular),
            Err(SpaceError::Singular { dim: 3, rank: 2 })
        );
        assert_eq!(singular.rank(), 2);
    }

    #[test]
    fn field_vec_bridge() {
        let fs = gf8();
        let id = BinMatrix::identity(3);
        assert_eq!(
            field_to_vec(fs.generator(), &id).unwrap().to_string(),
            "010"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b = BinMatrix::random_invertible(3, &mut rng);
            assert!(field_to_vec(0, &b).unwrap().is_zero());
            let fb = FieldBasis::new(b).unwrap();
            for a in 0..8 {
                assert_eq!(fb.to_field(fb.to_vec(a).unwrap()).unwrap(), a);
            }
        }
        let singular = BinMatrix::zero(3);
        assert!(field_to_vec(1, &singular).is_err());
    }

    #[test]
    fn binvec_basics() {
        let v: BinVec = "100000".parse().unwrap();
        assert_eq!(v, BinVec::unit(0, 6));
        assert_eq!(v.rotate(1), BinVec::unit(1, 6));
        assert_eq!(v.rotate(6), v);
        assert_eq!(v.to_hex(), "01");
        assert_eq!(BinVec::from_hex("3f", 6).unwrap().weight(), 6);
        assert!(BinVec::from_hex("40", 6).is_err());
        assert!((v ^ v).is_zero());
        assert!(v.checked_xor(BinVec::zero(5)).is_err());
        let a: BinVec = "101".parse().unwrap();
        let b: BinVec = "011".parse().unwrap();
        assert_eq!(a.concat(b).unwrap().to_string(), "101011");
        assert_eq!(a.concat(b).unwrap().slice(3, 3), b);
        assert!("10x".parse::<BinVec>().is_err());
    }

    #[test]
    fn affine_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = AffineMap::random(4, &mut rng);
            let g = AffineMap::random(4, &mut rng);
            let fg = f.after(&g).unwrap();
            for x in 0..16 {
                assert_eq!(fg.apply_bits(x), f.apply_bits(g.apply_bits(x)));
                assert_eq!(f.inverse().apply_bits(f.apply_bits(x)), x);
            }
        }
        assert!(AffineMap::new(BinMatrix::zero(3), BinVec::zero(3)).is_err());
    }

    #[test]
    fn matrix_text_parse_errors() {
        let err = BinMatrix::parse_text("10\n1x\n").unwrap_err();
        assert!(matches!(
            err,
            SpaceError::Parse {
                line: 2,
                column: 2,
                ..
            }
        ));
        let err = BinMatrix::parse_text("10\n101\n").unwrap_err();
        assert!(matches!(err, SpaceError::Parse { line: 2, .. }));
    }

    #[test]
    fn subspace_canonical() {
        let a = Subspace::span(4, [0b0011, 0b0110]);
        let b = Subspace::span(4, [0b0101, 0b0011, 0b0110]);
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.elements(), vec![0, 0b0011, 0b0101, 0b0110]);
        let p = a.perp();
        assert_eq!(p.dim(), 2);
        assert!(p.contains(0b0111) && p.contains(0b1000));
        assert_eq!(p.perp(), a);
        let h1 = AffineSubspace::new(BinVec::from_bits(0b1000, 4), a.clone());
        let h2 = AffineSubspace::new(BinVec::from_bits(0b1011, 4), a);
        assert_eq!(h1, h2);
        assert!(h1.contains(0b1101));
    }

    #[test]
    fn invertible_count_gl3() {
        assert_eq!(BinMatrix::all_invertible(3).len(), 168);
    }
}
