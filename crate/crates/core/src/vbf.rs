//! Vectorial Boolean functions as exhaustive lookup tables, with the
//! differential properties used to screen S-boxes for hidden-sum trapdoors:
//! differential uniformity, APN, weakly-APN, crooked, anti-crooked (AC),
//! the `n̂` measure and its component spaces `V_a`, affine hulls of derivative
//! images, and EA transforms.
//!
//! Derivatives are taken with respect to a [`GroupOp`]. The default is
//! [`Xor`]; a [`HiddenSum`](crate::hidden_sum::HiddenSum) plugs in the same way.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_space::{
    AffineFn, AffineMap, AffineSubspace, BinMatrix, BinVec, FieldBasis, FieldSpec, SpaceError,
    Subspace,
};

/// Default cap on the input width of a lookup table.
pub const DEFAULT_MAX_INPUT_WIDTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VbfError {
    #[error("input width {m} exceeds the table limit {limit}")]
    TooWide { m: usize, limit: usize },
    #[error("table has {found} entries, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("table entry {index} = {value:#x} does not fit in {n} output bits")]
    EntryOutOfRange { index: usize, value: u64, n: usize },
    #[error("derivative direction must be nonzero")]
    ZeroDirection,
    #[error("function is not a permutation")]
    NotPermutation,
    #[error("function is {m}->{n}; this property needs m = n")]
    NotSquare { m: usize, n: usize },
    #[error("group operation has width {found}, function has width {expected}")]
    SumWidth { expected: usize, found: usize },
    #[error("set is empty")]
    EmptySet,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid function spec: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub type Result<T, E = VbfError> = std::result::Result<T, E>;

/// An abelian group operation on raw bit vectors.
pub trait GroupOp {
    /// `None` for operations defined at every width (XOR).
    fn width(&self) -> Option<usize>;
    fn op(&self, x: u64, y: u64) -> u64;
    fn neg(&self, x: u64) -> u64;
}

/// The standard sum of `(F_2)^d`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Xor;

impl GroupOp for Xor {
    fn width(&self) -> Option<usize> {
        None
    }

    #[inline]
    fn op(&self, x: u64, y: u64) -> u64 {
        x ^ y
    }

    #[inline]
    fn neg(&self, x: u64) -> u64 {
        x
    }
}

/// A function `(F_2)^m -> (F_2)^n` stored as its full table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Vbf {
    m: usize,
    n: usize,
    table: Vec<u64>,
    permutation: bool,
}

impl fmt::Debug for Vbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vbf(m={}, n={}, {:?})", self.m, self.n, self.table)
    }
}

impl Vbf {
    pub fn from_table(m: usize, n: usize, table: Vec<u64>) -> Result<Self> {
        Self::from_table_with_limit(m, n, table, DEFAULT_MAX_INPUT_WIDTH)
    }

    pub fn from_table_with_limit(
        m: usize,
        n: usize,
        table: Vec<u64>,
        limit: usize,
    ) -> Result<Self> {
        if m == 0 || m > limit {
            return Err(VbfError::TooWide { m, limit });
        }
        if n == 0 || n > 63 {
            return Err(SpaceError::BadWidth(n).into());
        }
        if table.len() != 1 << m {
            return Err(VbfError::TableLength {
                expected: 1 << m,
                found: table.len(),
            });
        }
        if let Some((index, &value)) = table.iter().enumerate().find(|(_, &v)| v >> n != 0) {
            return Err(VbfError::EntryOutOfRange { index, value, n });
        }
        let permutation = m == n && {
            let mut seen = vec![false; 1 << n];
            table
                .iter()
                .all(|&y| !std::mem::replace(&mut seen[y as usize], true))
        };
        Ok(Self {
            m,
            n,
            table,
            permutation,
        })
    }

    pub fn from_fn(m: usize, n: usize, f: impl Fn(u64) -> u64) -> Result<Self> {
        Self::from_table(m, n, (0..1u64 << m).map(f).collect())
    }

    pub fn identity(m: usize) -> Self {
        Self::from_fn(m, m, |x| x).expect("identity fits")
    }

    /// `x ↦ x^d` over `GF(2^m)`, read through `basis`.
    pub fn from_power(d: u64, fs: &FieldSpec, basis: &FieldBasis) -> Result<Self> {
        let m = fs.degree();
        check_basis(fs, basis)?;
        Self::from_fn(m, m, |v| {
            basis.to_vec_bits(fs.pow(basis.to_field_bits(v), d))
        })
    }

    /// Horner evaluation of `Σ coeffs[i]·x^i` over `GF(2^m)`.
    pub fn from_univariate(coeffs: &[u64], fs: &FieldSpec, basis: &FieldBasis) -> Result<Self> {
        let m = fs.degree();
        check_basis(fs, basis)?;
        if let Some(&c) = coeffs.iter().find(|&&c| !fs.contains(c)) {
            return Err(SpaceError::OutOfRange { value: c, width: m }.into());
        }
        Self::from_fn(m, m, |v| {
            let x = basis.to_field_bits(v);
            let y = coeffs.iter().rev().fold(0, |acc, &c| fs.mul(acc, x) ^ c);
            basis.to_vec_bits(y)
        })
    }

    pub fn random_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut table: Vec<u64> = (0..1u64 << m).collect();
        table.shuffle(rng);
        Self::from_table(m, m, table).expect("shuffled identity is a table")
    }

    pub fn input_width(&self) -> usize {
        self.m
    }

    pub fn output_width(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn is_permutation(&self) -> bool {
        self.permutation
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }

    pub fn eval_vec(&self, x: BinVec) -> Result<BinVec> {
        if x.width() != self.m {
            return Err(SpaceError::WidthMismatch {
                expected: self.m,
                found: x.width(),
            }
            .into());
        }
        Ok(BinVec::from_bits(self.eval(x.bits()), self.n))
    }

    fn require_square(&self) -> Result<()> {
        if self.m != self.n {
            return Err(VbfError::NotSquare {
                m: self.m,
                n: self.n,
            });
        }
        Ok(())
    }

    fn require_permutation(&self) -> Result<()> {
        self.require_square()?;
        if !self.permutation {
            return Err(VbfError::NotPermutation);
        }
        Ok(())
    }

    fn check_sum(&self, sum: &dyn GroupOp) -> Result<()> {
        if let Some(w) = sum.width() {
            self.require_square()?;
            if w != self.m {
                return Err(VbfError::SumWidth {
                    expected: self.m,
                    found: w,
                });
            }
        }
        Ok(())
    }

    fn check_direction(&self, a: BinVec) -> Result<()> {
        if a.width() != self.m {
            return Err(SpaceError::WidthMismatch {
                expected: self.m,
                found: a.width(),
            }
            .into());
        }
        if a.is_zero() {
            return Err(VbfError::ZeroDirection);
        }
        Ok(())
    }

    /// Header `m=<m> n=<n>` followed by the table in hex, 16 values per line.
    pub fn to_sbox_text(&self) -> String {
        let digits = self.n.div_ceil(4);
        let mut s = format!("m={} n={}\n", self.m, self.n);
        for chunk in self.table.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|v| format!("{v:0digits$x}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the S-box text format: a `m=<int> n=<int>` header, then `2^m`
    /// hex values in input order separated by whitespace or commas. `#`
    /// starts a comment.
    pub fn parse_sbox_text(text: &str) -> Result<Self> {
        let perr = |line: usize, column: usize, message: String| VbfError::Parse {
            line,
            column,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(1, 1, "missing header".into()))?;
        let mut m = None;
        let mut n = None;
        for field in header.split_whitespace() {
            let column = header.find(field).unwrap_or(0) + 1;
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| perr(hline, column, format!("expected key=value, got {field:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| perr(hline, column, format!("invalid integer in {field:?}")))?;
            match key {
                "m" => m = Some(value),
                "n" => n = Some(value),
                _ => return Err(perr(hline, column, format!("unknown header key {key:?}"))),
            }
        }
        let m = m.ok_or_else(|| perr(hline, 1, "header lacks m".into()))?;
        let n = n.ok_or_else(|| perr(hline, 1, "header lacks n".into()))?;
        if m == 0 || m > DEFAULT_MAX_INPUT_WIDTH {
            return Err(VbfError::TooWide {
                m,
                limit: DEFAULT_MAX_INPUT_WIDTH,
            });
        }
        let mut table = Vec::with_capacity(1 << m);
        for (lineno, line) in lines {
            let mut offset = 0;
            for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
                let column = offset + 1;
                offset += tok.len() + 1;
                if tok.is_empty() {
                    continue;
                }
                let t = tok.strip_prefix("0x").unwrap_or(tok);
                let v = u64::from_str_radix(t, 16)
                    .map_err(|_| perr(lineno, column, format!("invalid hex value {tok:?}")))?;
                if n < 64 && v >> n != 0 {
                    return Err(perr(
                        lineno,
                        column,
                        format!("value {tok} exceeds {n} bits"),
                    ));
                }
                if table.len() == 1 << m {
                    return Err(perr(lineno, column, format!("more than {} values", 1 << m)));
                }
                table.push(v);
            }
        }
        if table.len() != 1 << m {
            return Err(VbfError::TableLength {
                expected: 1 << m,
                found: table.len(),
            });
        }
        Self::from_table(m, n, table)
    }
}

fn check_basis(fs: &FieldSpec, basis: &FieldBasis) -> Result<()> {
    if basis.width() != fs.degree() {
        return Err(SpaceError::WidthMismatch {
            expected: fs.degree(),
            found: basis.width(),
        }
        .into());
    }
    Ok(())
}

pub fn from_power(d: u64, fs: &FieldSpec, basis: &FieldBasis) -> Result<Vbf> {
    Vbf::from_power(d, fs, basis)
}

pub fn from_univariate(coeffs: &[u64], fs: &FieldSpec, basis: &FieldBasis) -> Result<Vbf> {
    Vbf::from_univariate(coeffs, fs, basis)
}

/// `Im(D_a f)` for one direction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DerivativeImage {
    pub direction: BinVec,
    image: Vec<u64>,
    width: usize,
}

impl DerivativeImage {
    pub fn size(&self) -> usize {
        self.image.len()
    }

    /// Sorted ascending.
    pub fn elements(&self) -> Vec<BinVec> {
        self.image
            .iter()
            .map(|&b| BinVec::from_bits(b, self.width))
            .collect()
    }

    pub fn bits(&self) -> &[u64] {
        &self.image
    }
}

fn image_bits(f: &Vbf, a: u64, sum: &dyn GroupOp) -> Vec<u64> {
    let mut seen = vec![false; 1 << f.n];
    for x in 0..1u64 << f.m {
        let d = sum.op(f.eval(sum.op(x, a)), sum.neg(f.eval(x)));
        seen[d as usize] = true;
    }
    seen.iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| i as u64)
        .collect()
}

/// `{ f(x □ a) ⊟ f(x) : x ∈ V }`.
pub fn derivative_image(f: &Vbf, a: BinVec, sum: &dyn GroupOp) -> Result<DerivativeImage> {
    f.check_direction(a)?;
    f.check_sum(sum)?;
    Ok(DerivativeImage {
        direction: a,
        image: image_bits(f, a.bits(), sum),
        width: f.n,
    })
}

/// Differential uniformity with a witness `(a, b)` attaining it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffSpectrum {
    pub delta: u64,
    pub witness: (BinVec, BinVec),
    /// `counts[a][b] = δ_f(a, b)`, when retained.
    pub counts: Option<Vec<Vec<u32>>>,
}

pub fn diff_spectrum(f: &Vbf, retain_counts: bool) -> DiffSpectrum {
    let size_in = 1usize << f.m;
    let size_out = 1usize << f.n;
    let mut best = (0u32, 1u64, 0u64);
    let mut counts = retain_counts.then(|| vec![vec![0u32; size_out]; size_in]);
    let mut row = vec![0u32; size_out];
    for a in 1..size_in as u64 {
        row.iter_mut().for_each(|c| *c = 0);
        for x in 0..size_in as u64 {
            row[(f.eval(x ^ a) ^ f.eval(x)) as usize] += 1;
        }
        for (b, &c) in row.iter().enumerate() {
            if c > best.0 {
                best = (c, a, b as u64);
            }
        }
        if let Some(t) = counts.as_mut() {
            t[a as usize].copy_from_slice(&row);
        }
    }
    if let Some(t) = counts.as_mut() {
        t[0][f.eval(0) as usize ^ f.eval(0) as usize] = size_in as u32;
    }
    DiffSpectrum {
        delta: best.0 as u64,
        witness: (
            BinVec::from_bits(best.1, f.m),
            BinVec::from_bits(best.2, f.n),
        ),
        counts,
    }
}

pub fn diff_uniformity(f: &Vbf) -> DiffSpectrum {
    diff_spectrum(f, false)
}

pub fn is_apn(f: &Vbf) -> Result<bool> {
    f.require_square()?;
    Ok(diff_uniformity(f).delta == 2)
}

/// Every nonzero direction has `|Im(D_a f)| > 2^{m-1} / 2`.
pub fn is_weakly_apn(f: &Vbf) -> Result<bool> {
    f.require_square()?;
    let q = 1u64 << f.m;
    Ok((1..q).all(|a| 4 * image_bits(f, a, &Xor).len() as u64 > q))
}

fn is_coset_bits(set: &[u64], width: usize, sum: &dyn GroupOp) -> bool {
    let Some(&s0) = set.iter().min() else {
        return false;
    };
    let shift = sum.neg(s0);
    let mut member = vec![false; 1 << width];
    let translated: Vec<u64> = set.iter().map(|&s| sum.op(s, shift)).collect();
    for &t in &translated {
        member[t as usize] = true;
    }
    if !member[0] || !translated.len().is_power_of_two() {
        return false;
    }
    translated
        .iter()
        .all(|&x| translated.iter().all(|&y| member[sum.op(x, y) as usize]))
}

/// True iff `S ⊟ s0` is closed under the sum and contains 0, where `s0` is
/// the smallest element of `S`.
pub fn is_coset(set: &[BinVec], sum: &dyn GroupOp) -> Result<bool> {
    let first = set.first().ok_or(VbfError::EmptySet)?;
    let width = first.width();
    if let Some(w) = sum.width() {
        if w != width {
            return Err(VbfError::SumWidth {
                expected: width,
                found: w,
            });
        }
    }
    let mut bits = Vec::with_capacity(set.len());
    for v in set {
        if v.width() != width {
            return Err(SpaceError::WidthMismatch {
                expected: width,
                found: v.width(),
            }
            .into());
        }
        bits.push(v.bits());
    }
    bits.sort_unstable();
    bits.dedup();
    Ok(is_coset_bits(&bits, width, sum))
}

/// The smallest XOR-coset containing `S`: its smallest element plus the span
/// of all differences.
pub fn affine_hull(set: &[BinVec]) -> Result<AffineSubspace> {
    let base = *set.iter().min().ok_or(VbfError::EmptySet)?;
    let mut span = Subspace::trivial(base.width());
    for v in set {
        span.insert(v.checked_xor(base)?.bits());
    }
    Ok(AffineSubspace::new(base, span))
}

/// Outcome of a property that quantifies over all nonzero directions.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// A direction that breaks the property, when it fails.
    pub witness: Option<BinVec>,
}

/// Per nonzero direction, whether `Im(D_a(f, □))` is a `□`-coset. Defined for
/// any `m = n` function; carries no AC label.
pub fn coset_profile(f: &Vbf, sum: &dyn GroupOp) -> Result<Vec<(BinVec, bool)>> {
    f.require_square()?;
    f.check_sum(sum)?;
    Ok((1..1u64 << f.m)
        .map(|a| {
            let img = image_bits(f, a, sum);
            (BinVec::from_bits(a, f.m), is_coset_bits(&img, f.n, sum))
        })
        .collect())
}

/// AC: no nonzero direction has a coset image. The witness is the first
/// direction whose image is a coset.
pub fn is_anti_crooked(f: &Vbf, sum: &dyn GroupOp) -> Result<Verdict> {
    f.require_permutation()?;
    f.check_sum(sum)?;
    for a in 1..1u64 << f.m {
        if is_coset_bits(&image_bits(f, a, sum), f.n, sum) {
            return Ok(Verdict {
                holds: false,
                witness: Some(BinVec::from_bits(a, f.m)),
            });
        }
    }
    Ok(Verdict {
        holds: true,
        witness: None,
    })
}

/// Crooked: every nonzero direction has a coset image. The witness is the
/// first direction whose image is not one.
pub fn is_crooked(f: &Vbf, sum: &dyn GroupOp) -> Result<Verdict> {
    f.require_permutation()?;
    f.check_sum(sum)?;
    for a in 1..1u64 << f.m {
        if !is_coset_bits(&image_bits(f, a, sum), f.n, sum) {
            return Ok(Verdict {
                holds: false,
                witness: Some(BinVec::from_bits(a, f.m)),
            });
        }
    }
    Ok(Verdict {
        holds: true,
        witness: None,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerClass {
    Crooked,
    AntiCrooked,
}

/// Classifies `x^d` from the single direction `a = 1`: for power maps the
/// coset property of `Im(D_a f)` does not depend on `a`.
pub fn power_ac_dichotomy(d: u64, fs: &FieldSpec, basis: &FieldBasis) -> Result<PowerClass> {
    let f = Vbf::from_power(d, fs, basis)?;
    let one = basis.to_vec_bits(1);
    let img = image_bits(&f, one, &Xor);
    Ok(if is_coset_bits(&img, f.n, &Xor) {
        PowerClass::Crooked
    } else {
        PowerClass::AntiCrooked
    })
}

/// `V_a = { v : x ↦ <D_a f(x), v> is constant }`.
pub fn component_space(f: &Vbf, a: BinVec) -> Result<Subspace> {
    f.check_direction(a)?;
    let a = a.bits();
    let derivative: Vec<u64> = (0..1u64 << f.m)
        .map(|x| f.eval(x ^ a) ^ f.eval(x))
        .collect();
    let parity = |w: u64, v: u64| (w & v).count_ones() & 1;
    Ok(Subspace::span(
        f.n,
        (1..1u64 << f.n).filter(|&v| {
            let c = parity(derivative[0], v);
            derivative.iter().all(|&w| parity(w, v) == c)
        }),
    ))
}

/// `n̂(f) = 2^t - 1` with `t` the largest `dim V_a` over nonzero `a`.
pub fn n_hat(f: &Vbf) -> u64 {
    let t = (1..1u64 << f.m)
        .map(|a| {
            component_space(f, BinVec::from_bits(a, f.m))
                .expect("nonzero direction")
                .dim()
        })
        .max()
        .unwrap_or(0);
    (1u64 << t) - 1
}

/// `x ↦ outer(f(inner(x))) + extra(x)`.
pub fn ea_transform(
    f: &Vbf,
    outer: &AffineMap,
    inner: &AffineMap,
    extra: &AffineFn,
) -> Result<Vbf> {
    f.require_square()?;
    for w in [outer.width(), inner.width(), extra.matrix.dim()] {
        if w != f.m {
            return Err(SpaceError::WidthMismatch {
                expected: f.m,
                found: w,
            }
            .into());
        }
    }
    Vbf::from_fn(f.m, f.n, |x| {
        outer.apply_bits(f.eval(inner.apply_bits(x))) ^ extra.apply_bits(x)
    })
}

pub fn inverse_vbf(f: &Vbf) -> Result<Vbf> {
    f.require_permutation()?;
    let mut inv = vec![0u64; f.table.len()];
    for (x, &y) in f.table.iter().enumerate() {
        inv[y as usize] = x as u64;
    }
    Vbf::from_table(f.m, f.n, inv)
}

/// Structured property report for one function.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AnalysisReport {
    pub m: usize,
    pub n: usize,
    pub permutation: bool,
    pub delta: u64,
    pub apn: Option<bool>,
    pub weakly_apn: Option<bool>,
    pub crooked: Option<bool>,
    pub anti_crooked: Option<bool>,
    /// No derivative image is a coset; reported for every square function,
    /// including non-permutations where the AC label is undefined.
    pub no_coset_image: Option<bool>,
    pub n_hat: u64,
    pub witnesses: Witnesses,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Witnesses {
    /// `(a, b)` attaining the differential uniformity.
    pub delta: (BinVec, BinVec),
    /// A direction whose derivative image is a coset (breaks AC).
    pub coset_direction: Option<BinVec>,
    /// A direction whose derivative image is not a coset (breaks crookedness).
    pub non_coset_direction: Option<BinVec>,
}

pub fn analyze(f: &Vbf) -> AnalysisReport {
    let spectrum = diff_uniformity(f);
    let square = f.m == f.n;
    let (crooked, anti_crooked, coset_direction, non_coset_direction) = if square {
        let profile = coset_profile(f, &Xor).expect("square function");
        let coset = profile.iter().find(|(_, c)| *c).map(|(a, _)| *a);
        let non_coset = profile.iter().find(|(_, c)| !*c).map(|(a, _)| *a);
        if f.permutation {
            (
                Some(non_coset.is_none()),
                Some(coset.is_none()),
                coset,
                non_coset,
            )
        } else {
            (None, None, coset, non_coset)
        }
    } else {
        (None, None, None, None)
    };
    AnalysisReport {
        m: f.m,
        n: f.n,
        permutation: f.permutation,
        delta: spectrum.delta,
        apn: square.then_some(spectrum.delta == 2),
        weakly_apn: square.then(|| is_weakly_apn(f).expect("square function")),
        crooked,
        anti_crooked,
        no_coset_image: square.then(|| coset_direction.is_none()),
        n_hat: n_hat(f),
        witnesses: Witnesses {
            delta: spectrum.witness,
            coset_direction,
            non_coset_direction,
        },
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<bool>| match v {
            Some(b) => b.to_string(),
            None => "n/a".to_string(),
        };
        let hex = |v: Option<BinVec>| v.map_or_else(|| "-".to_string(), |v| v.to_hex());
        writeln!(
            f,
            "m = {}, n = {}, permutation = {}",
            self.m, self.n, self.permutation
        )?;
        writeln!(
            f,
            "delta        {} (a = {}, b = {})",
            self.delta,
            self.witnesses.delta.0.to_hex(),
            self.witnesses.delta.1.to_hex()
        )?;
        writeln!(f, "apn          {}", opt(self.apn))?;
        writeln!(f, "weakly_apn   {}", opt(self.weakly_apn))?;
        writeln!(
            f,
            "crooked      {} (non-coset direction: {})",
            opt(self.crooked),
            hex(self.witnesses.non_coset_direction)
        )?;
        writeln!(
            f,
            "anti_crooked {} (coset direction: {})",
            opt(self.anti_crooked),
            hex(self.witnesses.coset_direction)
        )?;
        writeln!(f, "no_coset_img {}", opt(self.no_coset_image))?;
        write!(f, "n_hat        {}", self.n_hat)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct FieldConfig {
    pub m: usize,
    /// Binary literal, e.g. `"1011"` for `x^3 + x + 1`.
    pub modulus: String,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Power,
    Univariate,
}

/// `{ "field": {"m", "modulus"}, "kind": "power"|"univariate", "exponent"|"coeffs" }`.
///
/// `coeffs` are field elements by ascending degree. `basis` optionally lists
/// the rows of the field-to-coordinate matrix as '0'/'1' strings.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub field: FieldConfig,
    pub kind: FunctionKind,
    #[serde(default)]
    pub exponent: Option<u64>,
    #[serde(default)]
    pub coeffs: Option<Vec<u64>>,
    #[serde(default)]
    pub basis: Option<Vec<String>>,
}

impl FunctionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| VbfError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn build(&self) -> Result<Vbf> {
        let fs = FieldSpec::from_binary_str(&self.field.modulus)?;
        if fs.degree() != self.field.m {
            return Err(VbfError::Config(format!(
                "modulus {} has degree {}, field.m is {}",
                self.field.modulus,
                fs.degree(),
                self.field.m
            )));
        }
        let basis = match &self.basis {
            None => FieldBasis::ascending(fs.degree()),
            Some(rows) => FieldBasis::new(BinMatrix::parse_text(&rows.join("\n"))?)?,
        };
        match self.kind {
            FunctionKind::Power => {
                let d = self
                    .exponent
                    .ok_or_else(|| VbfError::Config("power spec needs \"exponent\"".into()))?;
                Vbf::from_power(d, &fs, &basis)
            }
            FunctionKind::Univariate => {
                let coeffs = self
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| VbfError::Config("univariate spec needs \"coeffs\"".into()))?;
                Vbf::from_univariate(coeffs, &fs, &basis)
            }
        }
    }
}

/// Histogram of derivative image sizes, keyed by size.
pub fn image_size_histogram(f: &Vbf) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for a in 1..1u64 << f.m {
        *h.entry(image_bits(f, a, &Xor).len()).or_insert(0) += 1;
    }
    h
}
