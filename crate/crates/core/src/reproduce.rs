//! End-to-end checks of every headline property, one result per criterion.
//!
//! A check either passes, fails, or is a known deviation: a claim that is
//! false as stated, where the computed counterexample matches the documented
//! one. A deviation whose counterexample disappears is reported as a failure.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boolean_space::{AffineFn, AffineMap, BinMatrix, BinVec, FieldBasis, FieldSpec};
use crate::corpus::{corpus, corpus_for, power_permutations, CORPUS_WIDTHS};
use crate::hidden_sum::{
    agl_membership, find_hidden_sums, toy_brick_sum, toy_generators, toy_sum, verify_generators,
    CoordinateMap,
};
use crate::toy_cipher::{
    builtin_toy_spec, toy_basis, toy_brick, toy_brick_coordinates, toy_field, CipherSpec,
    KeySchedule, Oracle, PermutationSchedule, RotateSchedule,
};
use crate::trapdoor::{reconstruct_cp, reconstruct_cpcc, verify_global_deduction, SpotChecks};
use crate::vbf::{
    affine_hull, component_space, coset_profile, derivative_image, diff_uniformity, ea_transform,
    is_anti_crooked, is_apn, is_crooked, is_weakly_apn, power_ac_dichotomy, PowerClass, Vbf, Xor,
};

pub const CRITERIA: usize = 14;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The claim is false as stated; the documented counterexample was reproduced.
    KnownDeviation,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::KnownDeviation => "XFAIL",
        }
    }

    /// Whether the run may still exit successfully.
    pub fn acceptable(self) -> bool {
        self != Outcome::Fail
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CheckResult {
    pub id: usize,
    pub title: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<5} {:>2}  {} — {}",
            self.outcome.label(),
            self.id,
            self.title,
            self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    /// Round counts used by the cipher and attack checks.
    pub rounds: Vec<usize>,
    /// Replaces the toy mixing layer (fault injection).
    pub mixing: Option<BinMatrix>,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rounds: vec![1, 20, 100],
            mixing: None,
            seed: 2024,
        }
    }
}

impl Options {
    fn cipher(&self, rounds: usize) -> Result<CipherSpec, String> {
        let spec = builtin_toy_spec();
        let spec = match &self.mixing {
            Some(m) => spec.with_mixing(m.clone()).map_err(|e| e.to_string())?,
            None => spec,
        };
        spec.with_rounds(rounds).map_err(|e| e.to_string())
    }
}

fn result(id: usize, title: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult {
        id,
        title,
        outcome: if pass { Outcome::Pass } else { Outcome::Fail },
        detail,
    }
}

fn field(m: usize) -> (FieldSpec, FieldBasis) {
    (
        FieldSpec::standard(m).expect("standard modulus"),
        FieldBasis::ascending(m),
    )
}

fn power(d: u64, m: usize) -> Vbf {
    let (fs, b) = field(m);
    Vbf::from_power(d, &fs, &b).expect("widths match")
}

pub fn check_1() -> CheckResult {
    let s = diff_uniformity(&toy_brick(&toy_basis()));
    result(
        1,
        "toy brick is 4-differentially uniform",
        s.delta == 4,
        format!("delta = {}", s.delta),
    )
}

pub fn check_2() -> CheckResult {
    let f = toy_brick(&toy_basis());
    let fs = toy_field();
    let dir = |a: u64| BinVec::from_bits(toy_basis().to_vec_bits(a), 3);
    let image_of = |a| derivative_image(&f, dir(a), &Xor).expect("valid direction");
    let is_coset = |a| coset_profile(&f, &Xor).expect("square")[(dir(a).bits() - 1) as usize].1;
    let alpha = fs.generator();
    let alpha2 = fs.pow(alpha, 2);
    let dim1: Vec<u64> = (1..8)
        .filter(|&a| image_of(a).size() == 2 && is_coset(a))
        .collect();
    let not_ac = !is_anti_crooked(&f, &Xor).expect("permutation").holds;
    let named = image_of(alpha2);
    result(
        2,
        "toy brick is not anti-crooked (dimension-1 coset image)",
        not_ac && dim1.contains(&alpha),
        format!(
            "directions with a 2-element coset image: {}; Im(D_{{α²}}) has {} elements, coset = {}",
            dim1.iter()
                .map(|a| format!("{a:#05b}"))
                .collect::<Vec<_>>()
                .join(", "),
            named.size(),
            is_coset(alpha2)
        ),
    )
}

pub fn check_3() -> CheckResult {
    let (fs, basis) = field(6);
    let f49 = power(49, 6);
    let profile = coset_profile(&f49, &Xor).expect("square");
    let all_non_coset = profile.len() == 63 && profile.iter().all(|(_, c)| !c);
    let f5 = power(5, 6);
    let f5_not_ac = !is_anti_crooked(&f5, &Xor).expect("permutation").holds;
    let e6 = BinVec::from_bits(basis.to_vec_bits(fs.pow(fs.generator(), 6)), 6);
    let img = derivative_image(&f5, e6, &Xor).expect("valid direction");
    let hull = affine_hull(&img.elements()).expect("nonempty");
    let coset16 = img.size() == 16 && hull.dim() == 4;
    result(
        3,
        "x^49 over F_64 has no coset image; x^5 has Im(D_{e^6}) of dimension 4",
        all_non_coset && f5_not_ac && coset16,
        format!(
            "x^49: {} of 63 directions non-coset; x^5 not AC: {f5_not_ac}; |Im(D_{{e^6}} x^5)| = {}, hull dim {}",
            profile.iter().filter(|(_, c)| !c).count(),
            img.size(),
            hull.dim()
        ),
    )
}

pub fn check_4() -> CheckResult {
    let mut ac_widths = Vec::new();
    let mut other = Vec::new();
    for m in 3..=8 {
        let f = power((1 << m) - 2, m);
        if is_anti_crooked(&f, &Xor).expect("permutation").holds {
            ac_widths.push(m);
        } else {
            other.push((m, is_crooked(&f, &Xor).expect("permutation").holds));
        }
    }
    let detail = format!(
        "AC for m = {:?}; not AC for m = {:?}",
        ac_widths,
        other.iter().map(|(m, _)| *m).collect::<Vec<_>>()
    );
    let outcome = if other.is_empty() {
        Outcome::Pass
    } else if other == [(3, true)] {
        // x^6 = (x^3)^2 on F_8 lies in the Gold class, hence crooked
        Outcome::KnownDeviation
    } else {
        Outcome::Fail
    };
    CheckResult {
        id: 4,
        title: "x^(2^m-2) is anti-crooked for m = 3..8",
        outcome,
        detail: if outcome == Outcome::KnownDeviation {
            format!("{detail}; x^6 = (x^3)^2 is crooked on F_8")
        } else {
            detail
        },
    }
}

pub fn check_5() -> CheckResult {
    let mut failures = Vec::new();
    let mut checked = 0;
    for m in [3usize, 5] {
        for k in 1..m {
            if gcd(k, m) != 1 {
                continue;
            }
            let d = (1u64 << k) + 1;
            let f = power(d, m);
            checked += 1;
            let ok = is_apn(&f).unwrap_or(false)
                && f.is_permutation()
                && is_crooked(&f, &Xor).map(|v| v.holds).unwrap_or(false);
            if !ok {
                failures.push(format!("x^{d} (m={m})"));
            }
        }
    }
    result(
        5,
        "Gold exponents are crooked and APN for m = 3, 5",
        failures.is_empty(),
        format!("{checked} exponents checked; failures: {failures:?}"),
    )
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn check_6() -> CheckResult {
    let mut total = 0;
    let mut disagreements = Vec::new();
    for m in 2..=6 {
        let (fs, basis) = field(m);
        for (d, f) in power_permutations(m) {
            total += 1;
            let profile = coset_profile(&f, &Xor).expect("square");
            let exhaustive = if profile.iter().all(|(_, c)| *c) {
                Some(PowerClass::Crooked)
            } else if profile.iter().all(|(_, c)| !c) {
                Some(PowerClass::AntiCrooked)
            } else {
                None
            };
            let fast = power_ac_dichotomy(d, &fs, &basis).ok();
            if exhaustive.is_none() || exhaustive != fast {
                disagreements.push(format!("x^{d} (m={m})"));
            }
        }
    }
    result(
        6,
        "single-direction dichotomy matches exhaustive classification (m ≤ 6)",
        disagreements.is_empty(),
        format!("{total} power permutations; disagreements: {disagreements:?}"),
    )
}

pub fn check_7() -> CheckResult {
    let mut candidates = 0;
    let mut failures = Vec::new();
    for e in corpus() {
        if is_weakly_apn(&e.f).unwrap_or(false) && !is_apn(&e.f).unwrap_or(true) {
            candidates += 1;
            let profile = coset_profile(&e.f, &Xor).expect("square");
            if profile.iter().all(|(_, c)| *c) {
                failures.push(e.name);
            }
        }
    }
    result(
        7,
        "weakly-APN, non-APN functions have a non-coset derivative image",
        failures.is_empty() && candidates > 0,
        format!("{candidates} weakly-APN non-APN corpus functions; violations: {failures:?}"),
    )
}

pub fn check_8() -> CheckResult {
    let mut pairs = 0;
    let mut failures = Vec::new();
    for e in corpus() {
        let f = &e.f;
        let m = f.input_width();
        for a in 1..1u64 << m {
            pairs += 1;
            let dir = BinVec::from_bits(a, m);
            let img = derivative_image(f, dir, &Xor).expect("valid direction");
            let hull = affine_hull(&img.elements()).expect("nonempty");
            let perp = component_space(f, dir).expect("nonzero direction").perp();
            let base = f.eval(a) ^ f.eval(0);
            if *hull.linear() != perp || !hull.contains(base) {
                failures.push(format!("{} a={a:#x}", e.name));
            }
        }
    }
    result(
        8,
        "hull(Im D_a f) = D_a f(0) + V_a^⊥ on the corpus",
        failures.is_empty(),
        format!("{pairs} (f, a) pairs; violations: {}", failures.len()),
    )
}

fn ac_profile(f: &Vbf) -> bool {
    coset_profile(f, &Xor)
        .expect("square")
        .iter()
        .all(|(_, c)| !c)
}

pub fn check_9(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flips = Vec::new();
    let mut ac_bases = 0;
    let mut transforms = 0;
    for m in CORPUS_WIDTHS {
        let base = corpus_for(m);
        for i in 0..100 {
            let f = &base[i % base.len()].f;
            let outer = AffineMap::random(m, &mut rng);
            let inner = AffineMap::random(m, &mut rng);
            let extra = AffineFn::random(m, &mut rng);
            let g = ea_transform(f, &outer, &inner, &extra).expect("widths match");
            let before = ac_profile(f);
            ac_bases += before as usize;
            transforms += 1;
            if before != ac_profile(&g) {
                flips.push(format!("{} #{i}", base[i % base.len()].name));
            }
        }
    }
    result(
        9,
        "EA transforms preserve the AC verdict (m = 3..6)",
        flips.is_empty(),
        format!("{transforms} transforms ({ac_bases} of AC functions); verdict changes: {flips:?}"),
    )
}

pub fn check_10() -> CheckResult {
    let report = verify_generators(&toy_generators());
    let hs = toy_brick_sum();
    let u = crate::hidden_sum::compute_u(&hs);
    let ok = report.passed()
        && hs.group().order() == 8
        && u.contains(0b010)
        && u.size() >= 2
        && report.nilpotency_index == Some(3);
    result(
        10,
        "toy generators give an elementary abelian regular group with the expected structure",
        ok,
        format!(
            "order {}, kappa hom {:?}, inverse law {:?}, U = {:?}, ring {:?}, nilpotency {:?}, uV {:?}",
            hs.group().order(),
            report.kappa_homomorphism,
            report.kappa_inverse,
            u.elements(),
            report.ring_axioms.map(|r| r.holds()),
            report.nilpotency_index,
            report.uv_subgroups
        ),
    )
}

pub fn check_11() -> CheckResult {
    let brick = CoordinateMap::standard(toy_brick_sum()).expect("standard basis");
    let closed_form = (0..8).all(|x| toy_brick_coordinates(x) == brick.coords_bits(x));
    let hs = toy_sum();
    let cm = CoordinateMap::standard(hs.clone()).expect("standard basis");
    let mut seen = [false; 64];
    (0..64).for_each(|x| seen[cm.coords_bits(x) as usize] = true);
    let iso = seen.iter().all(|&s| s)
        && (0..64).all(|x| {
            (0..64)
                .all(|y| cm.coords_bits(hs.op_bits(x, y)) == cm.coords_bits(x) ^ cm.coords_bits(y))
        });
    result(
        11,
        "closed-form coordinates and coordinate isomorphism",
        closed_form && iso,
        format!("closed form on 8 elements: {closed_form}; isomorphism on 64 elements: {iso}"),
    )
}

pub fn check_12(opts: &Options) -> CheckResult {
    let hs = toy_sum();
    let base = match opts.cipher(1) {
        Ok(s) => s,
        Err(e) => {
            return result(
                12,
                "round generators are affine for the hidden sum",
                false,
                e,
            )
        }
    };
    let lg = agl_membership(&base.lambda_gamma_table(), &hs).unwrap_or(false);
    let translations = (0..6).all(|i| {
        agl_membership(&AffineMap::translation_by(BinVec::unit(i, 6)).table(), &hs).unwrap_or(false)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let keys: Vec<u64> = (0..10).map(|_| rng.gen_range(0..64)).collect();
    let mut bad = Vec::new();
    for &l in &opts.rounds {
        let spec = match opts.cipher(l) {
            Ok(s) => s,
            Err(e) => {
                return result(
                    12,
                    "round generators are affine for the hidden sum",
                    false,
                    e,
                )
            }
        };
        for &k in &keys {
            if !agl_membership(&spec.encryption_table(k), &hs).unwrap_or(false) {
                bad.push((l, k));
            }
        }
    }
    result(
        12,
        "λγ, the XOR translations and every φ_k lie in AGL(V, ∘')",
        lg && translations && bad.is_empty(),
        format!(
            "λγ: {lg}; translations: {translations}; {} keys × rounds {:?}, non-members: {bad:?}",
            keys.len(),
            opts.rounds
        ),
    )
}

pub fn check_13(opts: &Options) -> CheckResult {
    let title = "7-query attack reconstructs every key, round count and schedule";
    let coords = CoordinateMap::standard(toy_sum()).expect("standard basis");
    let mut runs = 0;
    let mut problems = Vec::new();
    for &l in &opts.rounds {
        let spec = match opts.cipher(l) {
            Ok(s) => s,
            Err(e) => return result(13, title, false, e),
        };
        let schedules: [Arc<dyn KeySchedule>; 2] = [
            Arc::new(RotateSchedule::new(6)),
            Arc::new(PermutationSchedule::new(6, l, opts.seed)),
        ];
        for schedule in schedules {
            let name = schedule.name().to_string();
            let spec = spec.with_schedule(schedule).expect("surjective schedule");
            for key in 0..64 {
                runs += 1;
                let mut enc = Oracle::encrypt(&spec, key);
                match reconstruct_cp(&mut enc, &coords, SpotChecks::default()) {
                    Ok((repr, tr)) => {
                        let check = verify_global_deduction(&repr, &mut enc);
                        if tr.encryption_count != 7
                            || tr.decryption_count != 0
                            || check.mismatches != 0
                        {
                            problems.push(format!(
                                "l={l} {name} k={key:#04x}: {} queries, {} mismatches",
                                tr.encryption_count, check.mismatches
                            ));
                        }
                    }
                    Err(e) => problems.push(format!("l={l} {name} k={key:#04x}: {e}")),
                }
            }
        }
        let key = (l as u64 * 37) % 64;
        let mut enc = Oracle::encrypt(&spec, key);
        let mut dec = Oracle::decrypt(&spec, key);
        match reconstruct_cpcc(&mut enc, &mut dec, &coords) {
            Ok((repr, tr)) => {
                let id = repr
                    .matrix()
                    .mul(repr.matrix_inverse())
                    .is_ok_and(|p| p.is_identity());
                if (tr.encryption_count, tr.decryption_count) != (7, 7) || !id {
                    problems.push(format!(
                        "cpcc l={l}: {}+{} queries",
                        tr.encryption_count, tr.decryption_count
                    ));
                }
            }
            Err(e) => problems.push(format!("cpcc l={l}: {e}")),
        }
    }
    let shown: Vec<&String> = problems.iter().take(3).collect();
    result(
        13,
        title,
        problems.is_empty(),
        format!(
            "{runs} cp attacks at 7 encryptions, cpcc at 7+7, rounds {:?}; problems: {} {shown:?}",
            opts.rounds,
            problems.len()
        ),
    )
}

pub fn check_14(opts: &Options) -> CheckResult {
    let title = "inversion bricks admit no hidden sum; the toy bricks admit ∘'";
    let spec = match opts.cipher(1) {
        Ok(s) => s,
        Err(e) => return result(14, title, false, e),
    };
    let found = find_hidden_sums(&[spec.lambda_gamma_table()], &[3, 3]);
    let inversion = Vbf::from_power(6, &toy_field(), &toy_basis()).expect("widths match");
    let patched = spec
        .with_bricks(vec![inversion.clone(), inversion])
        .expect("inversion fixes 0");
    let patched_found = find_hidden_sums(&[patched.lambda_gamma_table()], &[3, 3]);
    let (ok, detail) = match (found, patched_found) {
        (Ok(found), Ok(patched_found)) => {
            let toy = toy_sum();
            (
                patched_found.is_empty() && found.contains(&toy),
                format!(
                    "x^6 bricks: {} sums; toy bricks: {} sum(s), contains ∘': {}",
                    patched_found.len(),
                    found.len(),
                    found.contains(&toy)
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
    };
    result(14, title, ok, detail)
}

/// Runs criteria `ids` (all when empty) in order.
pub fn run(opts: &Options, ids: &[usize]) -> Vec<CheckResult> {
    let wanted = |i: usize| ids.is_empty() || ids.contains(&i);
    let mut out = Vec::new();
    for id in 1..=CRITERIA {
        if !wanted(id) {
            continue;
        }
        out.push(match id {
            1 => check_1(),
            2 => check_2(),
            3 => check_3(),
            4 => check_4(),
            5 => check_5(),
            6 => check_6(),
            7 => check_7(),
            8 => check_8(),
            9 => check_9(opts.seed),
            10 => check_10(),
            11 => check_11(),
            12 => check_12(opts),
            13 => check_13(opts),
            _ => check_14(opts),
        });
    }
    out
}

pub fn all_acceptable(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.outcome.acceptable())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass() {
        for r in run(&Options::default(), &[1, 2, 3, 5, 10, 11]) {
            assert_eq!(r.outcome, Outcome::Pass, "{r}");
        }
    }

    #[test]
    fn inversion_check_flags_f8() {
        let r = check_4();
        assert_eq!(r.outcome, Outcome::KnownDeviation, "{r}");
        assert!(r.detail.contains("m = [3]"));
    }

    #[test]
    fn corrupted_mixing_fails_hidden_sum_checks() {
        let mut rows = crate::toy_cipher::toy_mixing().row_bits().to_vec();
        rows[0] ^= 1 << 5;
        let corrupted = BinMatrix::from_row_bits(6, rows).unwrap();
        assert!(corrupted.is_invertible());
        let opts = Options {
            rounds: vec![3],
            mixing: Some(corrupted),
            ..Options::default()
        };
        for r in run(&opts, &[12, 13, 14]) {
            assert_eq!(r.outcome, Outcome::Fail, "{r}");
        }
    }

    #[test]
    fn result_line_format() {
        let r = check_1();
        assert_eq!(
            r.to_string(),
            "PASS   1  toy brick is 4-differentially uniform — delta = 4"
        );
    }
}
