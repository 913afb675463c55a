//! Hidden sums induced by elementary abelian regular subgroups of `AGL(V, +)`.
//!
//! A regular group `T = {σ_y}` is stored as its full element table indexed by
//! image of zero, so `x □ y = σ_y(x)`. Every `σ_y` is affine for XOR:
//! `σ_y(x) = x·κ_y + y`. On top of that this module provides the ring product
//! `xy = x + y + (x □ y)`, the subgroup `U`, `AGL(V, □)` membership for
//! arbitrary permutations, coordinates with respect to a `□`-basis, and an
//! exhaustive search for product hidden sums compatible with a set of round
//! generators.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use crate::boolean_space::AffineMap;
use crate::boolean_space::{BinMatrix, BinVec, SpaceError, Subspace};
use crate::vbf::GroupOp;

/// Widest space for which full operation tables are materialized.
pub const MAX_HIDDEN_WIDTH: usize = 10;

/// Widest brick the subgroup enumeration accepts.
pub const MAX_SEARCH_BRICK_WIDTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HiddenSumError {
    #[error("no generators given")]
    NoGenerators,
    #[error("generators {first} and {second} do not commute")]
    NotAbelian { first: usize, second: usize },
    #[error("not regular: orbit of 0 has {orbit} points, group has {order} elements, expected {expected}")]
    NotRegular {
        orbit: usize,
        order: usize,
        expected: usize,
    },
    #[error("closure exceeded {cap} elements")]
    ClosureOverflow { cap: usize },
    #[error("element {0} has order greater than 2; only elementary abelian sums are supported")]
    NotElementary(BinVec),
    #[error("width {width} exceeds the limit {limit}")]
    TooWide { width: usize, limit: usize },
    #[error("permutation table is not a bijection of the 2^{width} vectors")]
    NotBijective { width: usize },
    #[error("basis vectors are not independent for the hidden sum")]
    DependentBasis,
    #[error("basis has {found} vectors, expected {expected}")]
    BasisSize { expected: usize, found: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub type Result<T, E = HiddenSumError> = std::result::Result<T, E>;

/// An abelian regular permutation group on `V`, elements indexed by the image of 0.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegularGroup {
    width: usize,
    generators: Vec<AffineMap>,
    elements: Vec<AffineMap>,
}

impl RegularGroup {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn generators(&self) -> &[AffineMap] {
        &self.generators
    }

    pub fn elements(&self) -> &[AffineMap] {
        &self.elements
    }

    /// The unique element mapping 0 to `y`.
    pub fn element(&self, y: u64) -> &AffineMap {
        &self.elements[y as usize]
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Breadth-first closure of `generators` under composition, then checks that
/// the result is abelian and regular.
pub fn build_group(generators: &[AffineMap]) -> Result<RegularGroup> {
    let first = generators.first().ok_or(HiddenSumError::NoGenerators)?;
    let width = first.width();
    if width > MAX_HIDDEN_WIDTH {
        return Err(HiddenSumError::TooWide {
            width,
            limit: MAX_HIDDEN_WIDTH,
        });
    }
    for g in generators {
        if g.width() != width {
            return Err(SpaceError::WidthMismatch {
                expected: width,
                found: g.width(),
            }
            .into());
        }
    }
    for (i, a) in generators.iter().enumerate() {
        for (j, b) in generators.iter().enumerate().skip(i + 1) {
            if a.after(b)? != b.after(a)? {
                return Err(HiddenSumError::NotAbelian {
                    first: i,
                    second: j,
                });
            }
        }
    }

    let cap = 1usize << width;
    let identity = AffineMap::identity(width);
    let key = |e: &AffineMap| (e.matrix().row_bits().to_vec(), e.translation().bits());
    let mut seen = HashSet::from([key(&identity)]);
    let mut found = vec![identity.clone()];
    let mut queue = VecDeque::from([identity]);
    while let Some(e) = queue.pop_front() {
        for g in generators {
            let next = g.after(&e)?;
            if seen.insert(key(&next)) {
                if found.len() == cap {
                    return Err(HiddenSumError::ClosureOverflow { cap });
                }
                found.push(next.clone());
                queue.push_back(next);
            }
        }
    }

    let mut slots: Vec<Option<AffineMap>> = vec![None; cap];
    let mut orbit = 0;
    for e in &found {
        let slot = &mut slots[e.translation().bits() as usize];
        if slot.is_none() {
            orbit += 1;
            *slot = Some(e.clone());
        }
    }
    if orbit != cap || found.len() != cap {
        return Err(HiddenSumError::NotRegular {
            orbit,
            order: found.len(),
            expected: cap,
        });
    }
    Ok(RegularGroup {
        width,
        generators: generators.to_vec(),
        elements: slots
            .into_iter()
            .map(|s| s.expect("orbit is full"))
            .collect(),
    })
}

/// `(V, □)` with `x □ y = σ_y(x)`, materialized as a full table.
#[derive(Clone, PartialEq, Eq)]
pub struct HiddenSum {
    group: RegularGroup,
    table: Vec<u64>,
}

impl fmt::Debug for HiddenSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HiddenSum")
            .field("width", &self.group.width)
            .field("generators", &self.group.generators)
            .finish()
    }
}

impl HiddenSum {
    /// Fails with `NotElementary` if some element is not an involution.
    pub fn new(group: RegularGroup) -> Result<Self> {
        let hs = Self::from_group_unchecked(group);
        for x in 0..1u64 << hs.width() {
            if hs.op_bits(x, x) != 0 {
                return Err(HiddenSumError::NotElementary(BinVec::from_bits(
                    x,
                    hs.width(),
                )));
            }
        }
        Ok(hs)
    }

    pub(crate) fn from_group_unchecked(group: RegularGroup) -> Self {
        let size = 1usize << group.width;
        let mut table = vec![0u64; size * size];
        for (y, e) in group.elements.iter().enumerate() {
            for x in 0..size {
                table[x * size + y] = e.apply_bits(x as u64);
            }
        }
        Self { group, table }
    }

    pub fn from_generators(generators: &[AffineMap]) -> Result<Self> {
        Self::new(build_group(generators)?)
    }

    /// `T_+`: the translation group, whose sum is XOR.
    pub fn xor(width: usize) -> Self {
        let gens: Vec<AffineMap> = (0..width)
            .map(|i| AffineMap::translation_by(BinVec::unit(i, width)))
            .collect();
        Self::from_generators(&gens).expect("translations form a regular group")
    }

    pub fn width(&self) -> usize {
        self.group.width
    }

    pub fn group(&self) -> &RegularGroup {
        &self.group
    }

    #[inline]
    pub fn op_bits(&self, x: u64, y: u64) -> u64 {
        self.table[((x as usize) << self.group.width) + y as usize]
    }

    pub fn op(&self, x: BinVec, y: BinVec) -> Result<BinVec> {
        self.check(x)?;
        self.check(y)?;
        Ok(BinVec::from_bits(
            self.op_bits(x.bits(), y.bits()),
            self.width(),
        ))
    }

    pub fn neg_bits(&self, x: u64) -> u64 {
        // σ_x^{-1} maps x back to 0; its image of 0 is ⊟x.
        self.group.element(x).inverse().translation().bits()
    }

    pub fn neg(&self, x: BinVec) -> Result<BinVec> {
        self.check(x)?;
        Ok(BinVec::from_bits(self.neg_bits(x.bits()), self.width()))
    }

    /// Linear part of `σ_y`.
    pub fn kappa(&self, y: BinVec) -> Result<&BinMatrix> {
        self.check(y)?;
        Ok(self.group.element(y.bits()).matrix())
    }

    /// `xy = x + y + (x □ y)`.
    #[inline]
    pub fn ring_bits(&self, x: u64, y: u64) -> u64 {
        x ^ y ^ self.op_bits(x, y)
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

    fn size(&self) -> u64 {
        1 << self.width()
    }
}

impl GroupOp for HiddenSum {
    fn width(&self) -> Option<usize> {
        Some(self.group.width)
    }

    #[inline]
    fn op(&self, x: u64, y: u64) -> u64 {
        self.op_bits(x, y)
    }

    fn neg(&self, x: u64) -> u64 {
        self.neg_bits(x)
    }
}

pub fn hidden_op(hs: &HiddenSum, x: BinVec, y: BinVec) -> Result<BinVec> {
    hs.op(x, y)
}

pub fn hidden_neg(hs: &HiddenSum, x: BinVec) -> Result<BinVec> {
    hs.neg(x)
}

pub fn kappa(hs: &HiddenSum, y: BinVec) -> Result<BinMatrix> {
    hs.kappa(y).cloned()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct KappaCheck {
    /// `κ_{x□y} = κ_y κ_x` for every pair.
    pub homomorphism: bool,
    /// `κ_{⊟y} = κ_y^{-1}` for every `y`.
    pub inverse_law: bool,
    /// First pair violating the homomorphism law.
    pub witness: Option<(BinVec, BinVec)>,
}

impl KappaCheck {
    pub fn holds(&self) -> bool {
        self.homomorphism && self.inverse_law
    }
}

/// Exhaustive check of the `κ` homomorphism and its inverse law. In row
/// convention, `κ_y κ_x` as maps is the matrix product `K_x · K_y`.
pub fn check_kappa_homomorphism(hs: &HiddenSum) -> KappaCheck {
    let w = hs.width();
    let k = |y: u64| hs.group.element(y).matrix();
    let mut witness = None;
    'outer: for x in 0..hs.size() {
        for y in 0..hs.size() {
            let lhs = k(hs.op_bits(x, y));
            let rhs = k(x).mul(k(y)).expect("same width");
            if *lhs != rhs {
                witness = Some((BinVec::from_bits(x, w), BinVec::from_bits(y, w)));
                break 'outer;
            }
        }
    }
    let inverse_law = (0..hs.size()).all(|y| match k(y).inverse() {
        Ok(inv) => *k(hs.neg_bits(y)) == inv,
        Err(_) => false,
    });
    KappaCheck {
        homomorphism: witness.is_none(),
        inverse_law,
        witness,
    }
}

/// Smallest `k` with `κ_x^k = I` for every `x`.
pub fn kappa_exponent(hs: &HiddenSum) -> usize {
    let w = hs.width();
    (0..hs.size())
        .map(|x| {
            let k = hs.group.element(x).matrix();
            let mut acc = k.clone();
            let mut e = 1;
            while !acc.is_identity() {
                acc = acc.mul(k).expect("same width");
                e += 1;
                assert!(e <= 1 << (w * w), "κ is not of finite order");
            }
            e
        })
        .max()
        .unwrap_or(1)
}

/// `U = { y : x □ y = x + y for all x }`, the `y` whose `σ_y` is a translation.
pub fn compute_u(hs: &HiddenSum) -> Subspace {
    Subspace::span(
        hs.width(),
        (0..hs.size()).filter(|&y| hs.group.element(y).is_translation()),
    )
}

pub fn ring_product(hs: &HiddenSum, x: BinVec, y: BinVec) -> Result<BinVec> {
    hs.check(x)?;
    hs.check(y)?;
    Ok(BinVec::from_bits(
        hs.ring_bits(x.bits(), y.bits()),
        hs.width(),
    ))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct RingReport {
    pub commutative: bool,
    pub associative: bool,
    pub distributive: bool,
    pub nilpotent: bool,
    /// Smallest `k` with `V^k = {0}`, where `V^{k+1}` is the additive span of
    /// `V^k · V`.
    pub nilpotency_index: Option<usize>,
}

impl RingReport {
    pub fn holds(&self) -> bool {
        self.commutative && self.associative && self.distributive && self.nilpotent
    }
}

pub fn check_ring_axioms(hs: &HiddenSum) -> RingReport {
    let q = hs.size();
    let mul = |x, y| hs.ring_bits(x, y);
    let commutative = (0..q).all(|x| (0..q).all(|y| mul(x, y) == mul(y, x)));
    let mut associative = true;
    let mut distributive = true;
    'outer: for x in 0..q {
        for y in 0..q {
            let xy = mul(x, y);
            for z in 0..q {
                if mul(xy, z) != mul(x, mul(y, z)) {
                    associative = false;
                }
                if mul(x, y ^ z) != xy ^ mul(x, z) {
                    distributive = false;
                }
                if !associative && !distributive {
                    break 'outer;
                }
            }
        }
    }

    let mut power = Subspace::full(hs.width());
    let mut index = 1;
    let mut nilpotency_index = None;
    while index <= hs.width() + 1 {
        if power.dim() == 0 {
            nilpotency_index = Some(index);
            break;
        }
        let elems = power.elements();
        let next = Subspace::span(
            hs.width(),
            elems.iter().flat_map(|&p| (0..q).map(move |v| mul(p, v))),
        );
        if next == power {
            break;
        }
        power = next;
        index += 1;
    }
    RingReport {
        commutative,
        associative,
        distributive,
        nilpotent: nilpotency_index.is_some(),
        nilpotency_index,
    }
}

/// `uV = { u·v : v ∈ V }` is closed under both `+` and `□`.
pub fn check_uv_subgroup(hs: &HiddenSum, u: BinVec) -> Result<bool> {
    hs.check(u)?;
    let mut member = vec![false; hs.size() as usize];
    let set: Vec<u64> = (0..hs.size()).map(|v| hs.ring_bits(u.bits(), v)).collect();
    for &s in &set {
        member[s as usize] = true;
    }
    Ok(set.iter().all(|&a| {
        set.iter()
            .all(|&b| member[(a ^ b) as usize] && member[hs.op_bits(a, b) as usize])
    }))
}

fn check_bijective(g: &[u64], width: usize) -> Result<()> {
    let mut seen = vec![false; 1 << width];
    let ok = g.len() == 1 << width
        && g.iter()
            .all(|&y| (y as usize) < seen.len() && !std::mem::replace(&mut seen[y as usize], true));
    if !ok {
        return Err(HiddenSumError::NotBijective { width });
    }
    Ok(())
}

/// True iff `g ∈ AGL(V, □)`: `x ↦ g(x) ⊟ g(0)` is a `□`-homomorphism,
/// checked on all `2^{2d}` pairs.
pub fn agl_membership(g: &[u64], hs: &HiddenSum) -> Result<bool> {
    check_bijective(g, hs.width())?;
    let shift = hs.neg_bits(g[0]);
    let h: Vec<u64> = g.iter().map(|&gx| hs.op_bits(gx, shift)).collect();
    let q = hs.size();
    Ok((0..q).all(|x| {
        (0..q).all(|y| h[hs.op_bits(x, y) as usize] == hs.op_bits(h[x as usize], h[y as usize]))
    }))
}

fn embed(map: &AffineMap, offset: usize, total: usize) -> AffineMap {
    let w = map.width();
    let rows = (0..total)
        .map(|i| {
            if i >= offset && i < offset + w {
                map.matrix().row_bits()[i - offset] << offset
            } else {
                1u64 << i
            }
        })
        .collect();
    let matrix = BinMatrix::from_row_bits(total, rows).expect("block-diagonal rows fit");
    let translation = BinVec::from_bits(map.translation().bits() << offset, total);
    AffineMap::new(matrix, translation).expect("block-diagonal embedding is invertible")
}

/// Brick-parallel sum on the concatenated space; part `i` acts on the
/// coordinates following those of parts `0..i`.
pub fn product_sum(parts: &[HiddenSum]) -> Result<HiddenSum> {
    let total: usize = parts.iter().map(HiddenSum::width).sum();
    if parts.is_empty() {
        return Err(HiddenSumError::NoGenerators);
    }
    if total > MAX_HIDDEN_WIDTH {
        return Err(HiddenSumError::TooWide {
            width: total,
            limit: MAX_HIDDEN_WIDTH,
        });
    }
    let mut gens = Vec::new();
    let mut offset = 0;
    for p in parts {
        gens.extend(p.group.generators.iter().map(|g| embed(g, offset, total)));
        offset += p.width();
    }
    HiddenSum::from_generators(&gens)
}

/// Coordinates with respect to a `□`-basis: `x = ⊙_i (c_i · b_i)`.
#[derive(Clone, Debug)]
pub struct CoordinateMap {
    hs: HiddenSum,
    basis: Vec<BinVec>,
    to_coords: Vec<u64>,
    to_element: Vec<u64>,
}

impl CoordinateMap {
    /// Generates the span element by element; fails unless the `2^d`
    /// combinations are pairwise distinct.
    pub fn new(hs: HiddenSum, basis: Vec<BinVec>) -> Result<Self> {
        let d = hs.width();
        if basis.len() != d {
            return Err(HiddenSumError::BasisSize {
                expected: d,
                found: basis.len(),
            });
        }
        for b in &basis {
            hs.check(*b)?;
        }
        let q = 1usize << d;
        let mut to_element = vec![0u64; q];
        let mut to_coords = vec![u64::MAX; q];
        to_coords[0] = 0;
        for c in 1..q {
            let low = c.trailing_zeros() as usize;
            let x = hs.op_bits(to_element[c & (c - 1)], basis[low].bits());
            if to_coords[x as usize] != u64::MAX {
                return Err(HiddenSumError::DependentBasis);
            }
            to_element[c] = x;
            to_coords[x as usize] = c as u64;
        }
        Ok(Self {
            hs,
            basis,
            to_coords,
            to_element,
        })
    }

    /// The standard vectors `e_1, …, e_d` as a `□`-basis.
    pub fn standard(hs: HiddenSum) -> Result<Self> {
        let d = hs.width();
        Self::new(hs, (0..d).map(|i| BinVec::unit(i, d)).collect())
    }

    pub fn hidden_sum(&self) -> &HiddenSum {
        &self.hs
    }

    pub fn basis(&self) -> &[BinVec] {
        &self.basis
    }

    pub fn width(&self) -> usize {
        self.hs.width()
    }

    #[inline]
    pub fn coords_bits(&self, x: u64) -> u64 {
        self.to_coords[x as usize]
    }

    #[inline]
    pub fn element_bits(&self, c: u64) -> u64 {
        self.to_element[c as usize]
    }

    pub fn coordinates(&self, x: BinVec) -> Result<BinVec> {
        self.hs.check(x)?;
        Ok(BinVec::from_bits(self.coords_bits(x.bits()), self.width()))
    }

    pub fn element(&self, c: BinVec) -> Result<BinVec> {
        self.hs.check(c)?;
        Ok(BinVec::from_bits(self.element_bits(c.bits()), self.width()))
    }
}

pub fn coordinates(hs: &HiddenSum, basis: &[BinVec], x: BinVec) -> Result<BinVec> {
    CoordinateMap::new(hs.clone(), basis.to_vec())?.coordinates(x)
}

fn involution_matrices(width: usize) -> Vec<BinMatrix> {
    let mask = (1u64 << width) - 1;
    (0..1u64 << (width * width))
        .filter_map(|code| {
            let rows = (0..width).map(|i| (code >> (i * width)) & mask).collect();
            let m = BinMatrix::from_row_bits(width, rows).ok()?;
            m.mul(&m).ok()?.is_identity().then_some(m)
        })
        .collect()
}

/// Every elementary abelian regular subgroup of `AGL((F_2)^width, +)`.
///
/// Groups are grown by always adding the element that sends 0 to the smallest
/// vector outside the current orbit, so each subgroup is produced once and
/// the order is deterministic.
pub fn regular_subgroups(width: usize) -> Result<Vec<HiddenSum>> {
    if width == 0 || width > MAX_SEARCH_BRICK_WIDTH {
        return Err(HiddenSumError::TooWide {
            width,
            limit: MAX_SEARCH_BRICK_WIDTH,
        });
    }
    let involutions = involution_matrices(width);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let identity = AffineMap::identity(width);
    let mut elems = HashMap::from([(0u64, identity)]);
    grow(
        width,
        &involutions,
        &mut Vec::new(),
        &mut elems,
        &mut out,
        &mut seen,
    )?;
    Ok(out)
}

fn grow(
    width: usize,
    involutions: &[BinMatrix],
    gens: &mut Vec<AffineMap>,
    elems: &mut HashMap<u64, AffineMap>,
    out: &mut Vec<HiddenSum>,
    seen: &mut HashSet<Vec<u64>>,
) -> Result<()> {
    let q = 1u64 << width;
    let Some(v) = (0..q).find(|v| !elems.contains_key(v)) else {
        let hs = HiddenSum::from_generators(gens)?;
        if seen.insert(hs.table.clone()) {
            out.push(hs);
        }
        return Ok(());
    };
    let vv = BinVec::from_bits(v, width);
    for m in involutions {
        if m.apply_bits(v) != v {
            continue;
        }
        let sigma = AffineMap::new(m.clone(), vv)?;
        let commutes = gens
            .iter()
            .all(|g| g.after(&sigma).ok() == sigma.after(g).ok());
        if !commutes {
            continue;
        }
        let shifted: Vec<(u64, AffineMap)> = elems
            .values()
            .map(|e| {
                let s = sigma.after(e).expect("same width");
                (s.translation().bits(), s)
            })
            .collect();
        if shifted.iter().any(|(img, _)| elems.contains_key(img)) {
            continue;
        }
        let mut next = elems.clone();
        next.extend(shifted);
        gens.push(sigma);
        grow(width, involutions, gens, &mut next, out, seen)?;
        gens.pop();
    }
    Ok(())
}

/// Every product sum `□_1 × … × □_n` (one elementary abelian regular
/// subgroup per brick) for which all XOR translations and every supplied
/// round generator lie in `AGL(V, □)`.
///
/// Translations act brick-locally, so they are screened per brick before the
/// full product check of the round generators.
pub fn find_hidden_sums(
    round_generators: &[Vec<u64>],
    brick_widths: &[usize],
) -> Result<Vec<HiddenSum>> {
    if brick_widths.is_empty() {
        return Err(HiddenSumError::NoGenerators);
    }
    if let Some(&w) = brick_widths
        .iter()
        .find(|&&w| w == 0 || w > MAX_SEARCH_BRICK_WIDTH)
    {
        return Err(HiddenSumError::TooWide {
            width: w,
            limit: MAX_SEARCH_BRICK_WIDTH,
        });
    }
    let total: usize = brick_widths.iter().sum();
    if total > MAX_HIDDEN_WIDTH {
        return Err(HiddenSumError::TooWide {
            width: total,
            limit: MAX_HIDDEN_WIDTH,
        });
    }
    for g in round_generators {
        check_bijective(g, total)?;
    }

    let mut per_width: HashMap<usize, Vec<HiddenSum>> = HashMap::new();
    for &w in brick_widths {
        if per_width.contains_key(&w) {
            continue;
        }
        let mut candidates = Vec::new();
        for hs in regular_subgroups(w)? {
            let mut ok = true;
            for i in 0..w {
                let t = AffineMap::translation_by(BinVec::unit(i, w)).table();
                if !agl_membership(&t, &hs)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                candidates.push(hs);
            }
        }
        per_width.insert(w, candidates);
    }

    let lists: Vec<&Vec<HiddenSum>> = brick_widths.iter().map(|w| &per_width[w]).collect();
    let mut out = Vec::new();
    let mut index = vec![0usize; lists.len()];
    if lists.iter().any(|l| l.is_empty()) {
        return Ok(out);
    }
    loop {
        let parts: Vec<HiddenSum> = index
            .iter()
            .zip(&lists)
            .map(|(&i, l)| l[i].clone())
            .collect();
        let candidate = product_sum(&parts)?;
        let mut ok = true;
        for g in round_generators {
            if !agl_membership(g, &candidate)? {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(candidate);
        }
        // odometer, last brick fastest
        let mut pos = lists.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < lists[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
}

/// Group spec text: the width `d` on the first line, then one generator per
/// line as `<d·d matrix bits, row 0 first>|<d translation bits>`.
pub fn parse_group_spec(text: &str) -> Result<Vec<AffineMap>> {
    let perr = |line: usize, column: usize, message: String| HiddenSumError::Parse {
        line,
        column,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (dline, dtext) = lines
        .next()
        .ok_or_else(|| perr(1, 1, "missing width".into()))?;
    let d: usize = dtext
        .parse()
        .map_err(|_| perr(dline, 1, format!("invalid width {dtext:?}")))?;
    if d == 0 || d > MAX_HIDDEN_WIDTH {
        return Err(perr(
            dline,
            1,
            format!("width {d} outside 1..={MAX_HIDDEN_WIDTH}"),
        ));
    }
    let mut gens = Vec::new();
    for (lineno, line) in lines {
        let (mtext, ttext) = line
            .split_once('|')
            .ok_or_else(|| perr(lineno, 1, "expected <matrix>|<translation>".into()))?;
        let mtext = mtext.trim();
        let ttext = ttext.trim();
        if mtext.len() != d * d {
            return Err(perr(
                lineno,
                1,
                format!("matrix has {} bits, expected {}", mtext.len(), d * d),
            ));
        }
        if let Some(pos) = line.find(|c: char| !matches!(c, '0' | '1' | '|' | ' ' | '\t')) {
            return Err(perr(lineno, pos + 1, "expected '0' or '1'".into()));
        }
        let rows: Vec<BinVec> = (0..d)
            .map(|i| mtext[i * d..(i + 1) * d].parse())
            .collect::<std::result::Result<_, _>>()?;
        let translation: BinVec = ttext.parse().map_err(|_| {
            perr(
                lineno,
                mtext.len() + 2,
                format!("invalid translation {ttext:?}"),
            )
        })?;
        if translation.width() != d {
            return Err(perr(
                lineno,
                mtext.len() + 2,
                format!("translation has {} bits, expected {d}", translation.width()),
            ));
        }
        let matrix = BinMatrix::from_rows(&rows)?;
        let map =
            AffineMap::new(matrix, translation).map_err(|e| perr(lineno, 1, e.to_string()))?;
        gens.push(map);
    }
    if gens.is_empty() {
        return Err(HiddenSumError::NoGenerators);
    }
    Ok(gens)
}

pub fn format_group_spec(gens: &[AffineMap]) -> String {
    let d = gens.first().map_or(0, AffineMap::width);
    let mut s = format!("{d}\n");
    for g in gens {
        for i in 0..d {
            s.push_str(&g.matrix().row(i).to_string());
        }
        s.push('|');
        s.push_str(&g.translation().to_string());
        s.push('\n');
    }
    s
}

/// Matrix rows (row 0 first) of the three generators `τ_i(x) = x·A_i + e_i`
/// of the toy brick sum.
pub const TOY_TAU_MATRICES: [&str; 3] = ["100\n010\n011", "100\n010\n001", "110\n010\n001"];

pub fn toy_generators() -> Vec<AffineMap> {
    TOY_TAU_MATRICES
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let matrix = BinMatrix::parse_text(m).expect("constant matrix");
            AffineMap::new(matrix, BinVec::unit(i, 3)).expect("constant matrix is invertible")
        })
        .collect()
}

/// The toy sum `∘` on `(F_2)^3`.
pub fn toy_brick_sum() -> HiddenSum {
    HiddenSum::from_generators(&toy_generators())
        .expect("toy generators form an elementary abelian regular group")
}

/// `∘' = ∘ × ∘` on `(F_2)^6`.
pub fn toy_sum() -> HiddenSum {
    product_sum(&[toy_brick_sum(), toy_brick_sum()]).expect("widths fit")
}

/// Verification report for a set of generators.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct HiddenSumReport {
    pub width: usize,
    pub abelian: bool,
    pub regular: bool,
    pub elementary: bool,
    pub error: Option<String>,
    pub kappa_homomorphism: Option<bool>,
    pub kappa_inverse: Option<bool>,
    #[serde(rename = "U_basis")]
    pub u_basis: Vec<String>,
    pub ring_axioms: Option<RingReport>,
    pub nilpotency_index: Option<usize>,
    pub uv_subgroups: Option<bool>,
}

impl HiddenSumReport {
    pub fn passed(&self) -> bool {
        self.abelian
            && self.regular
            && self.elementary
            && self.kappa_homomorphism == Some(true)
            && self.kappa_inverse == Some(true)
            && !self.u_basis.is_empty()
            && self.ring_axioms.is_some_and(|r| r.holds())
            && self.uv_subgroups == Some(true)
    }
}

pub fn verify_generators(gens: &[AffineMap]) -> HiddenSumReport {
    let width = gens.first().map_or(0, AffineMap::width);
    let mut report = HiddenSumReport {
        width,
        abelian: false,
        regular: false,
        elementary: false,
        error: None,
        kappa_homomorphism: None,
        kappa_inverse: None,
        u_basis: Vec::new(),
        ring_axioms: None,
        nilpotency_index: None,
        uv_subgroups: None,
    };
    let group = match build_group(gens) {
        Ok(g) => g,
        Err(e) => {
            report.abelian = !matches!(e, HiddenSumError::NotAbelian { .. });
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.abelian = true;
    report.regular = true;
    let hs = match HiddenSum::new(group) {
        Ok(hs) => hs,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.elementary = true;
    let kc = check_kappa_homomorphism(&hs);
    report.kappa_homomorphism = Some(kc.homomorphism);
    report.kappa_inverse = Some(kc.inverse_law);
    report.u_basis = compute_u(&hs)
        .basis()
        .iter()
        .map(|b| b.to_string())
        .collect();
    let ring = check_ring_axioms(&hs);
    report.nilpotency_index = ring.nilpotency_index;
    report.ring_axioms = Some(ring);
    report.uv_subgroups =
        Some(BinVec::all(width).all(|u| check_uv_subgroup(&hs, u).expect("same width")));
    report
}

impl fmt::Display for HiddenSumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<bool>| v.map_or("n/a".to_string(), |b| b.to_string());
        writeln!(f, "width              {}", self.width)?;
        writeln!(f, "abelian            {}", self.abelian)?;
        writeln!(f, "regular            {}", self.regular)?;
        writeln!(f, "elementary         {}", self.elementary)?;
        if let Some(e) = &self.error {
            writeln!(f, "error              {e}")?;
        }
        writeln!(f, "kappa_homomorphism {}", opt(self.kappa_homomorphism))?;
        writeln!(f, "kappa_inverse      {}", opt(self.kappa_inverse))?;
        writeln!(f, "U_basis            [{}]", self.u_basis.join(", "))?;
        writeln!(
            f,
            "ring_axioms        {}",
            opt(self.ring_axioms.map(|r| r.holds()))
        )?;
        writeln!(
            f,
            "nilpotency_index   {}",
            self.nilpotency_index
                .map_or("n/a".to_string(), |i| i.to_string())
        )?;
        write!(f, "uV_subgroups       {}", opt(self.uv_subgroups))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vbf::Xor;

    fn tau(i: usize) -> AffineMap {
        toy_generators()[i].clone()
    }

    fn toy() -> HiddenSum {
        toy_brick_sum()
    }

    fn v(s: &str) -> BinVec {
        s.parse().unwrap()
    }

    #[test]
    fn build_group_examples() {
        let plus = HiddenSum::xor(4);
        for x in 0..16 {
            for y in 0..16 {
                assert_eq!(plus.op_bits(x, y), x ^ y);
            }
        }
        let t = build_group(&[tau(0), tau(1), tau(2)]).unwrap();
        assert_eq!(t.order(), 8);
        for (y, e) in t.elements().iter().enumerate() {
            assert_eq!(e.translation().bits(), y as u64);
        }
        assert!(HiddenSum::new(t).is_ok());
        assert_eq!(
            build_group(&[tau(0)]),
            Err(HiddenSumError::NotRegular {
                orbit: 2,
                order: 2,
                expected: 8
            })
        );
        assert_eq!(build_group(&[]), Err(HiddenSumError::NoGenerators));
    }

    #[test]
    fn build_group_rejects_nonabelian() {
        let swap = AffineMap::linear(BinMatrix::parse_text("010\n100\n001").unwrap()).unwrap();
        let t = AffineMap::translation_by(v("100"));
        assert_eq!(
            build_group(&[t, swap]),
            Err(HiddenSumError::NotAbelian {
                first: 0,
                second: 1
            })
        );
    }

    #[test]
    fn build_group_overflow_and_order_four() {
        // x ↦ x·A + e1 with A of order 2 but not fixing e1: an element of order 4
        let a = BinMatrix::parse_text("110\n010\n001").unwrap();
        let g = AffineMap::new(a, v("010")).unwrap();
        let h = AffineMap::translation_by(v("001"));
        match HiddenSum::from_generators(&[g, h]) {
            Err(HiddenSumError::NotElementary(_)) | Err(HiddenSumError::NotRegular { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        // translations plus a linear map generate more than 2^d elements
        let lin = AffineMap::linear(BinMatrix::parse_text("110\n010\n001").unwrap()).unwrap();
        let gens = vec![lin];
        let gens: Vec<AffineMap> = gens
            .into_iter()
            .chain((0..3).map(|i| AffineMap::translation_by(BinVec::unit(i, 3))))
            .collect();
        // the linear map does not commute with every translation
        assert!(matches!(
            build_group(&gens),
            Err(HiddenSumError::NotAbelian { .. })
        ));
    }

    #[test]
    fn order_four_element_rejected() {
        // Z4 × Z2 acting regularly on F_2^3 inside AGL: x ↦ x·A + e1 where
        // A = I + E_{1,2} (maps e1 to e1 + e2), generator has order 4
        let a = BinMatrix::parse_text("110\n010\n001").unwrap();
        let g = AffineMap::new(a, v("100")).unwrap();
        let h = AffineMap::translation_by(v("001"));
        let group = build_group(&[g, h]).unwrap();
        assert!(matches!(
            HiddenSum::new(group),
            Err(HiddenSumError::NotElementary(_))
        ));
    }

    #[test]
    fn hidden_op_examples() {
        let hs = toy();
        for y in BinVec::all(3) {
            assert_eq!(hs.op(BinVec::zero(3), y).unwrap(), y);
            assert_eq!(hs.op(y, BinVec::zero(3)).unwrap(), y);
            assert_eq!(hs.op(y, y).unwrap(), BinVec::zero(3));
            assert_eq!(hs.op(y, hs.neg(y).unwrap()).unwrap(), BinVec::zero(3));
        }
        assert_eq!(hs.op(v("100"), v("001")).unwrap(), v("111"));
        // closed forms of τ_i
        for x in 0..8u64 {
            let (x1, x2, x3) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
            let pack = |a: u64, b: u64, c: u64| a | b << 1 | c << 2;
            assert_eq!(hs.op_bits(x, 1), pack(x1 ^ 1, x2 ^ x3, x3));
            assert_eq!(hs.op_bits(x, 2), pack(x1, x2 ^ 1, x3));
            assert_eq!(hs.op_bits(x, 4), pack(x1, x1 ^ x2, x3 ^ 1));
        }
    }

    #[test]
    fn group_axioms_exhaustive() {
        for hs in [
            toy(),
            HiddenSum::xor(5),
            product_sum(&[toy(), toy()]).unwrap(),
        ] {
            let q = 1u64 << hs.width();
            for x in 0..q {
                for y in 0..q {
                    assert_eq!(hs.op_bits(x, y), hs.op_bits(y, x));
                    for z in 0..q.min(16) {
                        assert_eq!(
                            hs.op_bits(hs.op_bits(x, y), z),
                            hs.op_bits(x, hs.op_bits(y, z))
                        );
                    }
                    // σ_y(x) = x·κ_y + y
                    let k = hs.kappa(BinVec::from_bits(y, hs.width())).unwrap();
                    assert_eq!(hs.op_bits(x, y), k.apply_bits(x) ^ y);
                }
            }
        }
    }

    #[test]
    fn kappa_examples() {
        let hs = toy();
        assert!(hs.kappa(v("000")).unwrap().is_identity());
        assert!(hs.kappa(v("010")).unwrap().is_identity());
        assert_eq!(hs.kappa(v("100")).unwrap(), tau(0).matrix());
        assert_eq!(kappa(&hs, v("001")).unwrap(), *tau(2).matrix());
    }

    #[test]
    fn kappa_homomorphism_checks() {
        assert!(check_kappa_homomorphism(&HiddenSum::xor(3)).holds());
        let hs = toy();
        let kc = check_kappa_homomorphism(&hs);
        assert!(kc.holds());
        assert_eq!(kappa_exponent(&hs), 2);

        // swap two elements' matrices: the table no longer describes a group
        let mut group = hs.group().clone();
        let m1 = group.elements[1].matrix().clone();
        let m4 = group.elements[4].matrix().clone();
        group.elements[1] = AffineMap::new(m4, BinVec::from_bits(1, 3)).unwrap();
        group.elements[4] = AffineMap::new(m1, BinVec::from_bits(4, 3)).unwrap();
        let corrupted = HiddenSum::from_group_unchecked(group);
        let kc = check_kappa_homomorphism(&corrupted);
        assert!(!kc.homomorphism);
        assert!(kc.witness.is_some());
    }

    #[test]
    fn u_examples() {
        assert_eq!(compute_u(&HiddenSum::xor(4)).dim(), 4);
        let u = compute_u(&toy());
        assert!(u.contains(0b010));
        assert_eq!(u.elements(), vec![0, 0b010]);
        let u6 = compute_u(&product_sum(&[toy(), toy()]).unwrap());
        assert_eq!(u6.elements(), vec![0, 0b000010, 0b010000, 0b010010]);
    }

    #[test]
    fn ring_examples() {
        let hs = toy();
        for x in BinVec::all(3) {
            assert!(ring_product(&hs, x, BinVec::zero(3)).unwrap().is_zero());
        }
        assert_eq!(ring_product(&hs, v("100"), v("001")).unwrap(), v("010"));
        let r = check_ring_axioms(&hs);
        assert!(r.holds());
        assert_eq!(r.nilpotency_index, Some(3));
        let r = check_ring_axioms(&HiddenSum::xor(3));
        assert!(r.holds());
        assert_eq!(r.nilpotency_index, Some(2));
    }

    #[test]
    fn uv_examples() {
        let hs = toy();
        assert!(check_uv_subgroup(&hs, BinVec::zero(3)).unwrap());
        assert!(check_uv_subgroup(&hs, v("100")).unwrap());
        for hs in regular_subgroups(3).unwrap() {
            for u in BinVec::all(3) {
                assert!(check_uv_subgroup(&hs, u).unwrap());
            }
        }
    }

    #[test]
    fn agl_membership_examples() {
        let hs = toy();
        let id: Vec<u64> = (0..8).collect();
        assert!(agl_membership(&id, &hs).unwrap());
        // every σ_y is □-affine (it is a □-translation)
        for y in 0..8 {
            assert!(agl_membership(&hs.group().element(y).table(), &hs).unwrap());
        }
        let p = product_sum(&[toy(), toy()]).unwrap();
        for i in 0..6 {
            let t = AffineMap::translation_by(BinVec::unit(i, 6)).table();
            assert!(agl_membership(&t, &p).unwrap());
        }
        assert!(matches!(
            agl_membership(&[0, 0, 1, 2, 3, 4, 5, 6], &hs),
            Err(HiddenSumError::NotBijective { .. })
        ));
        // a generic permutation is not affine for the toy sum
        assert!(!agl_membership(&[0, 1, 2, 3, 4, 5, 7, 6], &hs).unwrap());
    }

    #[test]
    fn product_sum_examples() {
        let p = product_sum(&[HiddenSum::xor(2), HiddenSum::xor(3)]).unwrap();
        assert_eq!(p.width(), 5);
        for x in 0..32 {
            for y in 0..32 {
                assert_eq!(p.op_bits(x, y), x ^ y);
            }
        }
        let p = product_sum(&[toy(), toy()]).unwrap();
        let t = toy();
        for x in 0..64u64 {
            for y in 0..64u64 {
                let lo = t.op_bits(x & 7, y & 7);
                let hi = t.op_bits(x >> 3, y >> 3);
                assert_eq!(p.op_bits(x, y), lo | hi << 3);
            }
        }
    }

    #[test]
    fn coordinates_examples() {
        let cm = CoordinateMap::standard(toy()).unwrap();
        assert_eq!(cm.coordinates(v("000")).unwrap(), v("000"));
        assert_eq!(cm.coordinates(v("101")).unwrap(), v("111"));
        assert_eq!(cm.coordinates(v("010")).unwrap(), v("010"));
        let hs = toy();
        for x in 0..8 {
            for y in 0..8 {
                assert_eq!(
                    cm.coords_bits(hs.op_bits(x, y)),
                    cm.coords_bits(x) ^ cm.coords_bits(y)
                );
            }
            assert_eq!(cm.element_bits(cm.coords_bits(x)), x);
        }
        assert_eq!(
            CoordinateMap::new(toy(), vec![v("100"), v("100"), v("001")]).unwrap_err(),
            HiddenSumError::DependentBasis
        );
        assert!(matches!(
            CoordinateMap::new(toy(), vec![v("100")]),
            Err(HiddenSumError::BasisSize { .. })
        ));
        assert_eq!(
            coordinates(&toy(), &[v("100"), v("010"), v("001")], v("101")).unwrap(),
            v("111")
        );
    }

    #[test]
    fn regular_subgroup_enumeration() {
        let subs = regular_subgroups(3).unwrap();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().any(|s| *s == HiddenSum::xor(3)));
        assert!(subs.iter().any(|s| *s == toy()));
        for s in &subs {
            assert!(check_kappa_homomorphism(s).holds());
            assert!(compute_u(s).dim() >= 1);
            assert!(check_ring_axioms(s).holds());
        }
        assert_eq!(regular_subgroups(1).unwrap().len(), 1);
        assert!(regular_subgroups(5).is_err());
    }

    #[test]
    fn find_hidden_sums_identity_generator() {
        let id: Vec<u64> = (0..64).collect();
        let all = find_hidden_sums(&[id], &[3, 3]).unwrap();
        // every product of translation-compatible brick sums qualifies
        let per_brick = regular_subgroups(3)
            .unwrap()
            .into_iter()
            .filter(|hs| {
                (0..3).all(|i| {
                    agl_membership(&AffineMap::translation_by(BinVec::unit(i, 3)).table(), hs)
                        .unwrap()
                })
            })
            .count();
        assert_eq!(all.len(), per_brick * per_brick);
        assert_eq!(
            find_hidden_sums(&[], &[5]).unwrap_err(),
            HiddenSumError::TooWide { width: 5, limit: 4 }
        );
    }

    #[test]
    fn group_spec_roundtrip() {
        let gens = vec![tau(0), tau(1), tau(2)];
        let text = format_group_spec(&gens);
        assert_eq!(text, "3\n100010011|100\n100010001|010\n110010001|001\n");
        assert_eq!(parse_group_spec(&text).unwrap(), gens);
        assert!(matches!(
            parse_group_spec("3\n10001001|100\n"),
            Err(HiddenSumError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_group_spec("3\n100010011|1x0\n"),
            Err(HiddenSumError::Parse {
                line: 2,
                column: 12,
                ..
            })
        ));
    }

    #[test]
    fn report_on_toy_sum() {
        let r = verify_generators(&[tau(0), tau(1), tau(2)]);
        assert!(r.passed());
        assert_eq!(r.u_basis, vec!["010".to_string()]);
        assert_eq!(r.nilpotency_index, Some(3));
        let r = verify_generators(&[tau(0)]);
        assert!(!r.passed() && r.abelian && !r.regular);
    }

    #[test]
    fn derivative_under_hidden_sum() {
        // σ_y are □-translations, hence crooked for □: images are singletons
        let hs = toy();
        let f = crate::vbf::Vbf::from_table(3, 3, hs.group().element(5).table()).unwrap();
        let v = crate::vbf::is_anti_crooked(&f, &hs).unwrap();
        assert!(!v.holds);
        let v = crate::vbf::is_crooked(&f, &hs).unwrap();
        assert!(v.holds);
        // the same map is affine for XOR too, so crooked there as well
        assert!(crate::vbf::is_crooked(&f, &Xor).unwrap().holds);
    }
}
