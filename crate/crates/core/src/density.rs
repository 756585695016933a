//! Densities of smooth hypersurface sections containing `Z`: the exact
//! truncated density by enumeration and by fiber counting, the closed-form
//! product, zeta-product predictions, sampling, tail bounds and a finder.

use std::collections::HashSet;
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, ClosedPoint, SchemeDesc, StratumTable};
use crate::gf::{Elem, FieldTower};
use crate::linalg::{self, Echelon, EvalMap, Insert, PrimeField, SievePoint, TargetKind};
use crate::mpoly::HomogeneousPolynomial;

/// Default cap, in bits of `log2 #I_d`, for exhaustive enumeration.
pub const DEFAULT_EXHAUSTIVE_CAP: u32 = 22;

/// Beyond this many blocks, fiber counting needs a surjective map.
const MAX_IE_BLOCKS: usize = 20;

/// The allowed values `T` of `f|_Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalConditionSet {
    Full,
    /// `T = {0}`.
    Zero,
    /// Nonzero at every point of `Y`.
    NonzeroPerComponent,
    /// One κ(Y_i) value per point of `Y`, in the order of `Y`.
    Explicit(Vec<Vec<Elem>>),
}

impl LocalConditionSet {
    pub fn name(&self) -> &'static str {
        match self {
            LocalConditionSet::Full => "full",
            LocalConditionSet::Zero => "zero",
            LocalConditionSet::NonzeroPerComponent => "nonzero-per-component",
            LocalConditionSet::Explicit(_) => "explicit",
        }
    }

    /// Checks shapes against `Y` and drops duplicate explicit vectors.
    pub fn validate(self, tower: &FieldTower, y: &[ClosedPoint]) -> Result<LocalConditionSet> {
        match self {
            LocalConditionSet::Explicit(vs) => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for v in vs {
                    if v.len() != y.len() {
                        return Err(Error::BadConditions(format!(
                            "vector has {} entries, Y has {} points",
                            v.len(),
                            y.len()
                        )));
                    }
                    for (x, pt) in v.iter().zip(y) {
                        if x.0 >= tower.level(pt.degree)?.order() {
                            return Err(Error::BadConditions(format!("value {} is outside κ of {pt}", x.0)));
                        }
                    }
                    if seen.insert(v.clone()) {
                        out.push(v);
                    }
                }
                if out.is_empty() {
                    return Err(Error::BadConditions("explicit T is empty".into()));
                }
                Ok(LocalConditionSet::Explicit(out))
            }
            other => Ok(other),
        }
    }

    /// `#T`.
    pub fn cardinality(&self, q: u64, y: &[ClosedPoint]) -> BigUint {
        let kappa = |pt: &ClosedPoint| BigUint::from(q).pow(pt.degree as u32);
        match self {
            LocalConditionSet::Full => y.iter().map(kappa).product(),
            LocalConditionSet::Zero => BigUint::one(),
            LocalConditionSet::NonzeroPerComponent => y.iter().map(|pt| kappa(pt) - 1u32).product(),
            LocalConditionSet::Explicit(vs) => BigUint::from(vs.len()),
        }
    }
}

/// The data of one sieve problem: `U = X − Y` smooth of dimension `m`, `Z`
/// given by generators (an empty list is the empty subscheme), a reduced `Y`
/// disjoint from `Z`, and the allowed restrictions `T`.
#[derive(Clone, Debug)]
pub struct Instance<'a> {
    pub tower: &'a FieldTower,
    pub u: SchemeDesc,
    pub z: Vec<HomogeneousPolynomial>,
    pub y: Vec<ClosedPoint>,
    pub t: LocalConditionSet,
    pub budget: u64,
}

impl<'a> Instance<'a> {
    pub fn new(
        tower: &'a FieldTower,
        x: SchemeDesc,
        z: Vec<HomogeneousPolynomial>,
        y: Vec<ClosedPoint>,
        t: LocalConditionSet,
    ) -> Result<Instance<'a>> {
        for g in &z {
            if g.n() != x.n {
                return Err(Error::CoordinateCount { expected: x.n + 1, got: g.n() + 1 });
            }
        }
        x.dim()?;
        linalg::check_y_disjoint(tower, &z, &y)?;
        let t = t.validate(tower, &y)?;
        let u = x.with_excluded(&y);
        Ok(Instance { tower, u, z, y, t, budget: geom::DEFAULT_POINT_BUDGET })
    }

    pub fn with_budget(mut self, budget: u64) -> Instance<'a> {
        self.budget = budget;
        self
    }

    pub fn m(&self) -> usize {
        self.u.dim().expect("checked at construction")
    }

    pub fn q(&self) -> u64 {
        self.tower.q()
    }

    pub fn stratify(&self, bound: usize) -> Result<StratumTable> {
        geom::stratify(self.tower, &self.z, &self.u, bound, self.budget)
    }

    /// Closed points of `U` of degree `< r`, with tangent spaces and `e`.
    pub fn sieve_points(&self, r: usize) -> Result<Vec<SievePoint>> {
        let pts = geom::closed_points(self.tower, &self.u, r, self.budget)?;
        linalg::sieve_points(self.tower, &self.u, &self.z, &pts)
    }

    pub fn slice(&self, d: usize) -> Arc<linalg::IdealSlice> {
        Arc::new(linalg::ideal_slice(&self.z, self.u.n, d, self.tower.base()))
    }

    /// `f ↦ (f|_Y, jets at all points of U of degree < r)` on `I_d`.
    pub fn eval_map(&self, d: usize, r: usize) -> Result<EvalMap> {
        let pts = self.sieve_points(r)?;
        linalg::eval_map(self.tower, self.slice(d), &self.y, &pts, &self.z)
    }
}

/// Which branch of the dichotomy applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoremCase {
    /// Positive density given by the zeta product.
    One,
    /// Density zero.
    Two,
}

impl fmt::Display for TheoremCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremCase::One => "i",
            TheoremCase::Two => "ii",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseEvidence {
    pub case: TheoremCase,
    /// `(e, e + dim V_e)` maximizing over nonempty strata with `e < m`.
    pub max_stratum: Option<(usize, usize)>,
    pub v_m_nonempty: bool,
    /// Whether a dimension estimate (rather than an override) was used.
    pub heuristic: bool,
    pub reason: String,
}

/// Case (ii) iff `max_{e<m} (e + dim V_e) ≥ m` or some point has `e = m`.
pub fn classify_theorem_case(strata: &StratumTable) -> CaseEvidence {
    let m = strata.m;
    let mut max_stratum: Option<(usize, usize)> = None;
    let mut heuristic = false;
    for e in 0..m {
        if let Some(dim) = strata.dims[e] {
            heuristic |= !strata.overridden[e];
            if max_stratum.is_none_or(|(_, v)| e + dim > v) {
                max_stratum = Some((e, e + dim));
            }
        }
    }
    let v_m_nonempty = strata.v_m_nonempty();
    let (case, reason) = if v_m_nonempty {
        (TheoremCase::Two, format!("V_{m} is nonempty"))
    } else if let Some((e, v)) = max_stratum.filter(|&(_, v)| v >= m) {
        (TheoremCase::Two, format!("e + dim V_e = {v} ≥ m = {m} at e = {e}"))
    } else {
        let what = match max_stratum {
            Some((e, v)) => format!("max e + dim V_e = {v} < m = {m} (at e = {e})"),
            None => "V is empty".to_string(),
        };
        (TheoremCase::One, what)
    };
    CaseEvidence { case, max_stratum, v_m_nonempty, heuristic, reason }
}

fn one_minus_q_pow(q: u64, exp: usize) -> BigRational {
    let big = BigInt::from(q).pow(exp as u32);
    BigRational::new(&big - 1, big)
}

fn prefactor(q: u64, y: &[ClosedPoint], t: &LocalConditionSet) -> BigRational {
    let h0 = BigInt::from(q).pow(y.iter().map(|p| p.degree as u32).sum::<u32>());
    BigRational::new(BigInt::from(t.cardinality(q, y)), h0)
}

/// The closed-form truncated density: `#T/#H^0(Y)` times
/// `(1 − q^{−(m+1)deg P})` off `V` and `(1 − q^{−(m−e)deg P})` on `V_e`,
/// over points of degree `< r`.
pub fn truncated_density_formula(
    strata: &StratumTable,
    y: &[ClosedPoint],
    t: &LocalConditionSet,
    r: usize,
) -> Result<BigRational> {
    if strata.bound + 1 < r {
        return Err(Error::HorizonTooSmall { horizon: strata.bound, r: r - 1 });
    }
    let m = strata.m;
    let mut acc = prefactor(strata.q, y, t);
    for (p, e) in strata.points_below(r) {
        let rank = match e {
            None => m + 1,
            Some(e) => m - e,
        };
        acc *= one_minus_q_pow(strata.q, rank * p.degree);
    }
    Ok(acc)
}

/// How the exact truncated density was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMode {
    /// Enumerate all of `I_d` when `log2 #I_d ≤ cap_bits`.
    Exhaustive { cap_bits: u32 },
    /// `#ker φ_d × #(allowed ∩ im φ_d)`.
    FiberCount,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDensity {
    pub d: usize,
    pub r: usize,
    pub hits: BigUint,
    pub total: BigUint,
    pub value: BigRational,
    pub surjective: bool,
    pub exhaustive: bool,
}

/// `F_p` image vectors of the columns and what counts as a hit.
struct Sieve {
    p: u32,
    columns: Vec<Vec<u32>>,
    y_blocks: Vec<(usize, usize)>,
    jet_blocks: Vec<(usize, usize)>,
    t: TMembership,
}

enum TMembership {
    Full,
    Zero,
    Nonzero,
    Explicit(HashSet<Vec<u32>>),
}

/// The `F_p` digits of an explicit `T` vector, laid out like the Y rows.
fn explicit_digits(tower: &FieldTower, y: &[ClosedPoint], v: &[Elem]) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for (pt, x) in y.iter().zip(v) {
        out.extend(tower.level(pt.degree)?.coeffs(*x));
    }
    Ok(out)
}

impl Sieve {
    fn new(inst: &Instance, map: &EvalMap) -> Result<Sieve> {
        let mut y_blocks = Vec::new();
        let mut jet_blocks = Vec::new();
        for b in &map.blocks {
            match b.kind {
                TargetKind::YPoint => y_blocks.push((b.offset, b.rows)),
                TargetKind::Jet { .. } => jet_blocks.push((b.offset, b.rows)),
            }
        }
        let t = match &inst.t {
            LocalConditionSet::Full => TMembership::Full,
            LocalConditionSet::Zero => TMembership::Zero,
            LocalConditionSet::NonzeroPerComponent => TMembership::Nonzero,
            LocalConditionSet::Explicit(vs) => TMembership::Explicit(
                vs.iter().map(|v| explicit_digits(inst.tower, &inst.y, v)).collect::<Result<_>>()?,
            ),
        };
        let columns = (0..map.domain_dim()).map(|j| map.column(j).into_iter().map(|e| e.0).collect()).collect();
        Ok(Sieve { p: map.p, columns, y_blocks, jet_blocks, t })
    }

    fn n(&self) -> usize {
        self.columns.len()
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(
            self.y_blocks.iter().chain(&self.jet_blocks).map(|(o, r)| o + r).max().unwrap_or(0),
            |c| c.len(),
        )
    }

    #[inline]
    fn add_into(&self, v: &mut [u32], col: usize, times: u32) {
        let c = &self.columns[col];
        if self.p == 2 {
            if times & 1 == 1 {
                for (x, &y) in v.iter_mut().zip(c) {
                    *x ^= y;
                }
            }
        } else {
            let p = self.p as u64;
            for (x, &y) in v.iter_mut().zip(c) {
                *x = ((*x as u64 + y as u64 * times as u64) % p) as u32;
            }
        }
    }

    fn accepts(&self, v: &[u32]) -> bool {
        let nonzero = |&(o, r): &(usize, usize)| v[o..o + r].iter().any(|&x| x != 0);
        if !self.jet_blocks.iter().all(nonzero) {
            return false;
        }
        match &self.t {
            TMembership::Full => true,
            TMembership::Zero => self.y_blocks.iter().all(|b| !nonzero(b)),
            TMembership::Nonzero => self.y_blocks.iter().all(nonzero),
            TMembership::Explicit(set) => {
                let end = self.y_blocks.last().map_or(0, |(o, r)| o + r);
                set.contains(&v[..end])
            }
        }
    }

    fn image(&self, digits: &[u32]) -> Vec<u32> {
        let mut v = vec![0u32; self.rows()];
        for (j, &x) in digits.iter().enumerate() {
            if x != 0 {
                self.add_into(&mut v, j, x);
            }
        }
        v
    }

    fn bits(&self) -> f64 {
        self.n() as f64 * (self.p as f64).log2()
    }

    /// Hits among all `p^N` coefficient vectors, split by the top digits.
    fn count_exhaustive(&self) -> u128 {
        let n = self.n();
        let p = self.p as u64;
        let mut top = 0;
        while top < n && p.pow(top as u32) < 1024 {
            top += 1;
        }
        let low = n - top;
        (0..p.pow(top as u32))
            .into_par_iter()
            .map(|chunk| {
                let mut digits = vec![0u32; n];
                let mut rest = chunk;
                for d in digits[low..].iter_mut() {
                    *d = (rest % p) as u32;
                    rest /= p;
                }
                let mut v = self.image(&digits);
                let mut hits = 0u128;
                let mut odo = vec![0u32; low];
                loop {
                    hits += self.accepts(&v) as u128;
                    let mut i = 0;
                    loop {
                        if i == low {
                            return hits;
                        }
                        self.add_into(&mut v, i, 1);
                        odo[i] += 1;
                        if odo[i] == self.p {
                            odo[i] = 0;
                            i += 1;
                        } else {
                            break;
                        }
                    }
                }
            })
            .sum()
    }

    /// First accepted coefficient vector in odometer order (digit 0 fastest),
    /// examining at most `limit` candidates.
    fn first_hit(&self, limit: u128) -> Option<Vec<u32>> {
        let n = self.n();
        let mut digits = vec![0u32; n];
        let mut v = vec![0u32; self.rows()];
        let mut seen = 0u128;
        loop {
            if self.accepts(&v) {
                return Some(digits);
            }
            seen += 1;
            if seen >= limit {
                return None;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return None;
                }
                self.add_into(&mut v, i, 1);
                digits[i] += 1;
                if digits[i] == self.p {
                    digits[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }
}

fn block_rows(map: &EvalMap, offset: usize, rows: usize, rhs: Option<&[u32]>) -> Vec<Vec<Elem>> {
    (offset..offset + rows)
        .map(|i| {
            let mut row = map.matrix.row(i).to_vec();
            if let Some(rhs) = rhs {
                row.push(Elem(rhs[i - offset]));
            }
            row
        })
        .collect()
}

/// `Σ_S (−1)^{|S|} p^{N − rank}` over subsets `S` of `blocks`, starting
/// from the rows already in `start`.
fn inclusion_exclusion(field: &PrimeField, n: usize, start: &Echelon, blocks: &[Vec<Vec<Elem>>]) -> BigInt {
    fn go(field: &PrimeField, n: usize, ech: &Echelon, blocks: &[Vec<Vec<Elem>>], negative: bool) -> BigInt {
        let Some((first, rest)) = blocks.split_first() else {
            let term = BigInt::from(field.p).pow((n - ech.rank()) as u32);
            return if negative { -term } else { term };
        };
        let include = || {
            let mut e2 = ech.clone();
            for row in first {
                if e2.insert(field, row.clone()) == Insert::Inconsistent {
                    return BigInt::zero();
                }
            }
            go(field, n, &e2, rest, !negative)
        };
        if blocks.len() > 8 {
            let (a, b) = rayon::join(|| go(field, n, ech, rest, negative), include);
            a + b
        } else {
            go(field, n, ech, rest, negative) + include()
        }
    }
    go(field, n, start, blocks, false)
}

/// Number of coefficient vectors (over `F_p`) whose image is accepted.
fn count_fibers(inst: &Instance, map: &EvalMap) -> Result<BigUint> {
    let field = map.field();
    let n = map.domain_dim();
    let p = BigUint::from(map.p);
    let y_blocks: Vec<_> = map.blocks.iter().filter(|b| b.kind == TargetKind::YPoint).collect();
    let jet_blocks: Vec<_> = map.blocks.iter().filter(|b| b.kind != TargetKind::YPoint).collect();
    let mut ie_blocks = jet_blocks.len();
    if inst.t == LocalConditionSet::NonzeroPerComponent {
        ie_blocks += y_blocks.len();
    }
    if ie_blocks > MAX_IE_BLOCKS {
        if !map.is_surjective() {
            return Err(Error::Invalid(format!(
                "fiber counting over {ie_blocks} blocks needs a surjective evaluation map"
            )));
        }
        // image is the full product of the targets
        let mut count = p.pow(map.kernel_dim() as u32) * inst.t.cardinality(inst.q(), &inst.y);
        for b in &jet_blocks {
            count *= p.pow(b.h0_dim as u32) - 1u32;
        }
        return Ok(count);
    }
    let jets: Vec<Vec<Vec<Elem>>> = jet_blocks.iter().map(|b| block_rows(map, b.offset, b.rows, None)).collect();
    let total: BigInt = match &inst.t {
        LocalConditionSet::Full => inclusion_exclusion(&field, n, &Echelon::new(n, false), &jets),
        LocalConditionSet::Zero => {
            let mut start = Echelon::new(n, false);
            for b in &y_blocks {
                for row in block_rows(map, b.offset, b.rows, None) {
                    start.insert(&field, row);
                }
            }
            inclusion_exclusion(&field, n, &start, &jets)
        }
        LocalConditionSet::NonzeroPerComponent => {
            let mut all: Vec<Vec<Vec<Elem>>> =
                y_blocks.iter().map(|b| block_rows(map, b.offset, b.rows, None)).collect();
            all.extend(jets);
            inclusion_exclusion(&field, n, &Echelon::new(n, false), &all)
        }
        LocalConditionSet::Explicit(vs) => {
            let aug = |rows: Vec<Vec<Elem>>| -> Vec<Vec<Elem>> {
                rows.into_iter()
                    .map(|mut r| {
                        r.push(Elem::ZERO);
                        r
                    })
                    .collect()
            };
            let jets_aug: Vec<Vec<Vec<Elem>>> = jets.into_iter().map(aug).collect();
            let mut sum = BigInt::zero();
            for v in vs {
                let digits = explicit_digits(inst.tower, &inst.y, v)?;
                let mut start = Echelon::new(n, true);
                let mut consistent = true;
                for b in &y_blocks {
                    let rhs = &digits[b.offset..b.offset + b.rows];
                    for row in block_rows(map, b.offset, b.rows, Some(rhs)) {
                        if start.insert(&field, row) == Insert::Inconsistent {
                            consistent = false;
                        }
                    }
                }
                if consistent {
                    sum += inclusion_exclusion(&field, n, &start, &jets_aug);
                }
            }
            sum
        }
    };
    total.to_biguint().ok_or_else(|| Error::Invalid("negative fiber count".into()))
}

/// `#(P_r ∩ I_d)/#I_d` computed exactly.
pub fn truncated_density_exact(inst: &Instance, d: usize, r: usize, mode: ExactMode) -> Result<ExactDensity> {
    let map = inst.eval_map(d, r)?;
    exact_from_map(inst, &map, r, mode)
}

pub fn exact_from_map(inst: &Instance, map: &EvalMap, r: usize, mode: ExactMode) -> Result<ExactDensity> {
    let total = BigUint::from(map.p).pow(map.domain_dim() as u32);
    let (hits, exhaustive) = match mode {
        ExactMode::Exhaustive { cap_bits } => {
            let sieve = Sieve::new(inst, map)?;
            if sieve.bits() > cap_bits as f64 {
                return Err(Error::CapExceeded { bits: sieve.bits(), cap: cap_bits });
            }
            (BigUint::from(sieve.count_exhaustive()), true)
        }
        ExactMode::FiberCount => (count_fibers(inst, map)?, false),
    };
    let value = BigRational::new(BigInt::from(hits.clone()), BigInt::from(total.clone()));
    Ok(ExactDensity { d: map.d, r, hits, total, value, surjective: map.is_surjective(), exhaustive })
}

/// Prediction from zeta partial products, bracketed by two cutoffs.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub evidence: CaseEvidence,
    pub cutoff: usize,
    /// With closed points of degree `< cutoff`.
    pub value: BigRational,
    /// With closed points of degree `≤ cutoff`.
    pub next: BigRational,
}

/// `(#T/#H^0(Y)) · ζ_V(m+1) / (ζ_U(m+1) ∏_{e<m} ζ_{V_e}(m−e))`, each zeta
/// replaced by its Euler product over points of degree `< cutoff`. Zero in
/// case (ii).
pub fn predicted_density(
    strata: &StratumTable,
    y: &[ClosedPoint],
    t: &LocalConditionSet,
    cutoff: usize,
) -> Result<Prediction> {
    let evidence = classify_theorem_case(strata);
    if evidence.case == TheoremCase::Two {
        return Ok(Prediction { evidence, cutoff, value: BigRational::zero(), next: BigRational::zero() });
    }
    if strata.bound < cutoff {
        return Err(Error::HorizonTooSmall { horizon: strata.bound, r: cutoff });
    }
    let m = strata.m as u32;
    let at = |r: usize| {
        let degs = |f: &dyn Fn(&Option<usize>) -> bool| -> Vec<usize> {
            strata.points.iter().filter(|(_, e)| f(e)).map(|(p, _)| p.degree).collect()
        };
        let zeta_u = geom::zeta_from_points(strata.q, m + 1, degs(&|_| true), r);
        let zeta_v = geom::zeta_from_points(strata.q, m + 1, degs(&|e| e.is_some()), r);
        let mut denom = zeta_u;
        for e in 0..strata.m {
            denom *= geom::zeta_from_points(strata.q, m - e as u32, degs(&|x| *x == Some(e)), r);
        }
        prefactor(strata.q, y, t) * zeta_v / denom
    };
    Ok(Prediction { evidence, cutoff, value: at(cutoff), next: at(cutoff + 1) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleEstimate {
    pub d: usize,
    pub trials: u64,
    pub hits: u64,
    pub seed: u64,
    /// Smoothness was checked at points of degree `≤ horizon` only.
    pub horizon: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SampleEstimate {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let phat = hits as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let center = (phat + Z * Z / (2.0 * n)) / denom;
    let half = Z * (phat * (1.0 - phat) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn trial_rng(seed: u64, d: usize, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(d as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Uniform samples from `I_d`; a hit has `f|_Y ∈ T` and is smooth at every
/// closed point of `U` of degree `≤ horizon`.
pub fn sampled_density(inst: &Instance, d: usize, horizon: usize, trials: u64, seed: u64) -> Result<SampleEstimate> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let map = inst.eval_map(d, horizon + 1)?;
    sampled_from_map(inst, &map, horizon, trials, seed)
}

pub fn sampled_from_map(inst: &Instance, map: &EvalMap, horizon: usize, trials: u64, seed: u64) -> Result<SampleEstimate> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let sieve = Sieve::new(inst, map)?;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, map.d, trial);
            let digits: Vec<u32> = (0..sieve.n()).map(|_| rng.gen_range(0..sieve.p)).collect();
            sieve.accepts(&sieve.image(&digits)) as u64
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(hits, trials);
    Ok(SampleEstimate { d: map.d, trials, hits, seed, horizon, ci_low, ci_high })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailBound {
    pub r: usize,
    pub d: usize,
    pub c: usize,
    /// `⌊(d − c)/(m + 1)⌋`, the top of the medium range.
    pub medium_top: usize,
    /// Last degree actually summed (`min(horizon, medium_top)`).
    pub summed_to: usize,
    pub value: BigRational,
    /// Geometric continuation of the last observed terms up to `medium_top`.
    pub extrapolation: f64,
}

/// `Σ_{g=r}^{min(G, ⌊(d−c)/(m+1)⌋)} [Σ_e #V_e(F_{q^g}) q^{−(m−e)g} + #(U−V)(F_{q^g}) q^{−(m+1)g}]`
/// from observed counts, `G` being the stratification horizon.
pub fn tail_bound(strata: &StratumTable, r: usize, d: usize, c: usize) -> Result<TailBound> {
    let m = strata.m;
    let medium_top = d.saturating_sub(c) / (m + 1);
    let empty = |value| TailBound { r, d, c, medium_top, summed_to: 0, value, extrapolation: 0.0 };
    if r > medium_top || d < c {
        return Ok(empty(BigRational::zero()));
    }
    if strata.bound < r {
        return Err(Error::HorizonTooSmall { horizon: strata.bound, r });
    }
    let q = BigInt::from(strata.q);
    let summed_to = strata.bound.min(medium_top);
    let mut terms = Vec::new();
    for g in r..=summed_to {
        let mut term = BigRational::new(BigInt::from(strata.off_v_counts[g - 1]), q.pow(((m + 1) * g) as u32));
        for (e, counts) in strata.stratum_counts.iter().enumerate() {
            term += BigRational::new(BigInt::from(counts[g - 1]), q.pow(((m - e) * g) as u32));
        }
        terms.push(term);
    }
    let value = terms.iter().fold(BigRational::zero(), |a, t| a + t);
    let mut extrapolation = 0.0;
    if medium_top > summed_to && terms.len() >= 2 {
        let last = terms[terms.len() - 1].to_f64().unwrap_or(0.0);
        let prev = terms[terms.len() - 2].to_f64().unwrap_or(0.0);
        let ratio = if prev > 0.0 { last / prev } else { 0.0 };
        let steps = (medium_top - summed_to) as i32;
        extrapolation = if ratio < 1.0 {
            last * ratio * (1.0 - ratio.powi(steps)) / (1.0 - ratio)
        } else {
            last * steps as f64 * ratio.powi(steps)
        };
    }
    Ok(TailBound { r, d, c, medium_top, summed_to, value, extrapolation })
}

/// A degree horizon beyond which no singular point of `H_f ∩ U` can hide,
/// when one is known: for `U` open in `P^1`, multiple roots have degree
/// `≤ d/2`; for `U` open in `P^2`, singular points of a reduced curve lie on
/// `V(f, ∂_i f)` with `f ∤ ∂_i f`, at most `d(d−1)` geometric points, and a
/// non-reduced curve is singular along a component with low-degree points.
pub fn bezout_horizon(u: &SchemeDesc, d: usize) -> Option<usize> {
    if !u.closed_eqs.is_empty() || !u.removed_eqs.is_empty() {
        return None;
    }
    match u.n {
        1 => Some((d / 2).max(1)),
        2 => Some((d * d.saturating_sub(1)).max(1)),
        _ => None,
    }
}

/// How `find_smooth` walks through `I_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOrder {
    /// Coefficient vectors in odometer order, at most `2^cap_bits` of them.
    Lex { cap_bits: u32 },
    Random { seed: u64, tries: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `f(P) ≠ 0`.
    Value(Elem),
    /// `df(t_index) ≠ 0` on the tangent basis at `P`.
    Tangent { index: usize, value: Elem },
    /// `f|_Y` at a point of `Y`.
    YValue(Elem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub horizon: usize,
    pub checks: Vec<(ClosedPoint, Witness)>,
}

#[derive(Clone, Debug)]
pub struct Found {
    pub d: usize,
    pub f: HomogeneousPolynomial,
    pub certificate: Certificate,
}

#[derive(Clone, Debug)]
pub enum FindOutcome {
    Found(Box<Found>),
    NotFound { tried: Vec<(usize, String)> },
}

fn digits_to_form(inst: &Instance, map: &EvalMap, digits: &[u32]) -> HomogeneousPolynomial {
    let base = inst.tower.base();
    let a = inst.tower.a();
    let coeffs: Vec<Elem> = digits.chunks(a).map(|c| base.from_coeffs(c)).collect();
    map.slice.combine(&coeffs, base)
}

/// Rechecks `f` point by point without the evaluation map.
pub fn certify(inst: &Instance, f: &HomogeneousPolynomial, horizon: usize) -> Result<Option<Certificate>> {
    let values: Vec<Elem> =
        inst.y.iter().map(|pt| f.twist_restrict(inst.tower, pt.degree, &pt.coords)).collect::<Result<_>>()?;
    let allowed = match &inst.t {
        LocalConditionSet::Full => true,
        LocalConditionSet::Zero => values.iter().all(|v| v.is_zero()),
        LocalConditionSet::NonzeroPerComponent => values.iter().all(|v| !v.is_zero()),
        LocalConditionSet::Explicit(vs) => vs.contains(&values),
    };
    if !allowed {
        return Ok(None);
    }
    let mut checks: Vec<(ClosedPoint, Witness)> =
        inst.y.iter().cloned().zip(values.into_iter().map(Witness::YValue)).collect();
    for sp in inst.sieve_points(horizon + 1)? {
        let jet = geom::jet(inst.tower, f, &sp.point, &sp.tangent)?;
        let witness = match jet.iter().position(|x| !x.is_zero()) {
            None => return Ok(None),
            Some(0) => Witness::Value(jet[0]),
            Some(i) => Witness::Tangent { index: i - 1, value: jet[i] },
        };
        checks.push((sp.point, witness));
    }
    Ok(Some(Certificate { horizon, checks }))
}

/// First `f ∈ I_d` (lowest `d` first) with `f|_Y ∈ T` that is smooth at every
/// closed point of `U` of degree `≤ horizon`.
pub fn find_smooth(
    inst: &Instance,
    degrees: RangeInclusive<usize>,
    horizon: usize,
    order: SearchOrder,
) -> Result<FindOutcome> {
    let pts = inst.sieve_points(horizon + 1)?;
    let mut tried = Vec::new();
    for d in degrees {
        let map = linalg::eval_map(inst.tower, inst.slice(d), &inst.y, &pts, &inst.z)?;
        if let Some(b) = map.blocks.iter().find(|b| b.kind != TargetKind::YPoint && b.h0_dim == 0) {
            tried.push((d, format!("every element of I_d is singular at {}", b.point)));
            continue;
        }
        let sieve = Sieve::new(inst, &map)?;
        let hit = match order {
            SearchOrder::Lex { cap_bits } => {
                let limit = if sieve.bits() > 120.0 { 1u128 << cap_bits.min(120) } else {
                    (BigUint::from(sieve.p).pow(sieve.n() as u32)).to_u128().unwrap().min(1u128 << cap_bits.min(120))
                };
                sieve.first_hit(limit)
            }
            SearchOrder::Random { seed, tries } => (0..tries).find_map(|trial| {
                let mut rng = trial_rng(seed, d, trial);
                let digits: Vec<u32> = (0..sieve.n()).map(|_| rng.gen_range(0..sieve.p)).collect();
                sieve.accepts(&sieve.image(&digits)).then_some(digits)
            }),
        };
        match hit {
            Some(digits) => {
                let f = digits_to_form(inst, &map, &digits);
                let certificate = certify(inst, &f, horizon)?
                    .ok_or_else(|| Error::Invalid("candidate failed independent recheck".into()))?;
                return Ok(FindOutcome::Found(Box::new(Found { d, f, certificate })));
            }
            None => tried.push((d, "no candidate passed within the search budget".into())),
        }
    }
    Ok(FindOutcome::NotFound { tried })
}

/// Exact or sampled density at one degree, in the fixed CSV layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub d: usize,
    pub mode: String,
    pub trials: Option<u64>,
    pub hits: BigUint,
    pub fraction_num: Option<BigUint>,
    pub fraction_den: Option<BigUint>,
    pub fraction_float: f64,
    pub ci: Option<(f64, f64)>,
    pub truncated_formula: Option<BigRational>,
    pub prediction: Option<BigRational>,
    pub tail_bound: Option<BigRational>,
    pub case: TheoremCase,
    pub horizon: usize,
    pub seed: Option<u64>,
}

pub const CSV_HEADER: &str = "d,mode,trials,hits,fraction_num,fraction_den,fraction_float,ci_low,ci_high,truncated_formula,prediction,tail_bound,case,horizon_B,seed";

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or(String::new(), |v| v.to_string())
}

impl DensityRow {
    pub fn from_exact(x: &ExactDensity, case: TheoremCase) -> DensityRow {
        DensityRow {
            d: x.d,
            mode: if x.exhaustive { "exhaustive".into() } else { "fiber-count".into() },
            trials: None,
            hits: x.hits.clone(),
            fraction_num: Some(x.hits.clone()),
            fraction_den: Some(x.total.clone()),
            fraction_float: x.value.to_f64().unwrap_or(f64::NAN),
            ci: None,
            truncated_formula: None,
            prediction: None,
            tail_bound: None,
            case,
            horizon: x.r.saturating_sub(1),
            seed: None,
        }
    }

    pub fn from_sample(s: &SampleEstimate, case: TheoremCase) -> DensityRow {
        DensityRow {
            d: s.d,
            mode: "sampled".into(),
            trials: Some(s.trials),
            hits: BigUint::from(s.hits),
            fraction_num: None,
            fraction_den: None,
            fraction_float: s.fraction(),
            ci: Some((s.ci_low, s.ci_high)),
            truncated_formula: None,
            prediction: None,
            tail_bound: None,
            case,
            horizon: s.horizon,
            seed: Some(s.seed),
        }
    }

    pub fn to_csv(&self) -> String {
        let (lo, hi) = self.ci.map_or((String::new(), String::new()), |(a, b)| (format!("{a:.6}"), format!("{b:.6}")));
        [
            self.d.to_string(),
            self.mode.clone(),
            opt(&self.trials),
            self.hits.to_string(),
            opt(&self.fraction_num),
            opt(&self.fraction_den),
            format!("{:.6}", self.fraction_float),
            lo,
            hi,
            opt(&self.truncated_formula),
            opt(&self.prediction),
            opt(&self.tail_bound),
            self.case.to_string(),
            self.horizon.to_string(),
            opt(&self.seed),
        ]
        .join(",")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    pub notes: Vec<String>,
}

impl DensityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let frac = match (&r.fraction_num, &r.fraction_den) {
                (Some(n), Some(d)) => format!("{n}/{d}"),
                _ => format!("{}/{}", r.hits, opt(&r.trials)),
            };
            out.push_str(&format!(
                "d={} {} fraction={} ({:.6}) case={} horizon={}",
                r.d, r.mode, frac, r.fraction_float, r.case, r.horizon
            ));
            if let Some((lo, hi)) = r.ci {
                out.push_str(&format!(" ci95=[{lo:.4}, {hi:.4}]"));
            }
            if let Some(p) = &r.prediction {
                out.push_str(&format!(" prediction={p}"));
            }
            if let Some(t) = &r.tail_bound {
                out.push_str(&format!(" tail={t}"));
            }
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// `|a − b|` as a rational.
pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::parse_form;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn forms(t: &FieldTower, n: usize, src: &[&str]) -> Vec<HomogeneousPolynomial> {
        src.iter().map(|s| parse_form(s, n, t.base()).unwrap()).collect()
    }

    fn point(t: &FieldTower, c: &[u32]) -> ClosedPoint {
        ClosedPoint::from_coords(t, 1, &c.iter().map(|&x| Elem(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn line_over_f2_at_degree_six() {
        let t = FieldTower::new(2, 1, 6).unwrap();
        let inst = Instance::new(&t, SchemeDesc::projective(1), vec![], vec![], LocalConditionSet::Full).unwrap();
        let x = truncated_density_exact(&inst, 6, 2, ExactMode::Exhaustive { cap_bits: 22 }).unwrap();
        assert_eq!(x.hits, BigUint::from(54u32));
        assert_eq!(x.total, BigUint::from(128u32));
        let st = inst.stratify(3).unwrap();
        assert_eq!(truncated_density_formula(&st, &[], &inst.t, 2).unwrap(), q(27, 64));
        assert_eq!(x.value, q(27, 64));
        let fiber = truncated_density_exact(&inst, 6, 2, ExactMode::FiberCount).unwrap();
        assert_eq!(fiber.value, x.value);
        assert_eq!(truncated_density_exact(&inst, 6, 1, ExactMode::FiberCount).unwrap().value, q(1, 1));
    }

    #[test]
    fn y_prefactor_and_zero_condition() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let y = vec![point(&t, &[1, 1])];
        let nz = Instance::new(&t, SchemeDesc::projective(1), vec![], y.clone(), LocalConditionSet::NonzeroPerComponent)
            .unwrap();
        let st = nz.stratify(2).unwrap();
        assert_eq!(truncated_density_formula(&st, &y, &nz.t, 2).unwrap(), q(1, 2) * q(3, 4) * q(3, 4));
        let zero = Instance::new(&t, SchemeDesc::projective(1), vec![], y.clone(), LocalConditionSet::Zero).unwrap();
        assert_eq!(truncated_density_exact(&zero, 3, 1, ExactMode::FiberCount).unwrap().value, q(1, 2));
        let bad = Instance::new(&t, SchemeDesc::projective(1), forms(&t, 1, &["x0 + x1"]), y, LocalConditionSet::Full);
        assert!(matches!(bad, Err(Error::YMeetsZ(_))));
    }

    #[test]
    fn classification_examples() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let empty = Instance::new(&t, SchemeDesc::projective(2), vec![], vec![], LocalConditionSet::Full).unwrap();
        assert_eq!(classify_theorem_case(&empty.stratify(2).unwrap()).case, TheoremCase::One);
        let fat = Instance::new(&t, SchemeDesc::projective(2), forms(&t, 2, &["x1^2", "x1*x2", "x2^2"]), vec![], LocalConditionSet::Full)
            .unwrap();
        let ev = classify_theorem_case(&fat.stratify(2).unwrap());
        assert_eq!(ev.case, TheoremCase::Two);
        assert!(ev.v_m_nonempty);
        let lines3 = Instance::new(&t, SchemeDesc::projective(3), forms(&t, 3, &["x2", "x1*x3"]), vec![], LocalConditionSet::Full)
            .unwrap();
        let ev = classify_theorem_case(&lines3.stratify(3).unwrap());
        assert_eq!(ev.case, TheoremCase::One);
        assert_eq!(ev.max_stratum.map(|s| s.1), Some(2));
    }

    #[test]
    fn prediction_for_projective_line_and_plane() {
        let t = FieldTower::new(2, 1, 8).unwrap();
        for (n, target, bound) in [(1usize, q(3, 8), 8usize), (2, q(21, 64), 5)] {
            let inst = Instance::new(&t, SchemeDesc::projective(n), vec![], vec![], LocalConditionSet::Full).unwrap();
            let st = inst.stratify(bound).unwrap();
            let pr = predicted_density(&st, &[], &inst.t, bound).unwrap();
            assert!(pr.next <= pr.value && pr.next > target);
            assert_eq!(pr.value, truncated_density_formula(&st, &[], &inst.t, bound).unwrap());
            assert!((pr.next.to_f64().unwrap() - target.to_f64().unwrap()).abs() < 0.01);
        }
    }

    #[test]
    fn tail_bound_examples() {
        let t = FieldTower::new(2, 1, 6).unwrap();
        let inst = Instance::new(&t, SchemeDesc::projective(1), vec![], vec![], LocalConditionSet::Full).unwrap();
        let st = inst.stratify(5).unwrap();
        let tb = tail_bound(&st, 2, 10, 0).unwrap();
        let expected = (2..=5).fold(q(0, 1), |acc, g| acc + q((1 << g) + 1, 1 << (2 * g)));
        assert_eq!(tb.value, expected);
        assert!(tail_bound(&st, 4, 6, 0).unwrap().value.is_zero());
        let short = inst.stratify(1).unwrap();
        assert!(matches!(tail_bound(&short, 2, 10, 0), Err(Error::HorizonTooSmall { .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_rejects_zero_trials() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let inst = Instance::new(&t, SchemeDesc::projective(1), vec![], vec![], LocalConditionSet::Full).unwrap();
        assert_eq!(sampled_density(&inst, 6, 2, 0, 1), Err(Error::NoTrials));
        let a = sampled_density(&inst, 6, 2, 500, 9).unwrap();
        let b = sampled_density(&inst, 6, 2, 500, 9).unwrap();
        assert_eq!(a, b);
        let (lo, hi) = wilson_interval(0, 10);
        assert!(lo == 0.0 && hi > 0.2);
    }

    #[test]
    fn finder_examples() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let inst = Instance::new(&t, SchemeDesc::projective(1), vec![], vec![], LocalConditionSet::Full).unwrap();
        let FindOutcome::Found(found) = find_smooth(&inst, 2..=2, 2, SearchOrder::Lex { cap_bits: 20 }).unwrap() else {
            panic!("no smooth quadric found");
        };
        assert_eq!(found.certificate.checks.len(), 4);
        let line = Instance::new(&t, SchemeDesc::projective(2), forms(&t, 2, &["x0"]), vec![], LocalConditionSet::Full)
            .unwrap();
        let FindOutcome::Found(found) = find_smooth(&line, 1..=3, 2, SearchOrder::Lex { cap_bits: 20 }).unwrap() else {
            panic!("the line itself is smooth");
        };
        assert_eq!(found.d, 1);
        assert_eq!(found.f, forms(&t, 2, &["x0"])[0]);
        let fat = Instance::new(&t, SchemeDesc::projective(2), forms(&t, 2, &["x1^2", "x1*x2", "x2^2"]), vec![], LocalConditionSet::Full)
            .unwrap();
        assert!(matches!(find_smooth(&fat, 2..=4, 1, SearchOrder::Lex { cap_bits: 16 }).unwrap(), FindOutcome::NotFound { .. }));
    }

    #[test]
    fn csv_layout() {
        let row = DensityRow::from_exact(
            &ExactDensity {
                d: 6,
                r: 2,
                hits: 54u32.into(),
                total: 128u32.into(),
                value: q(27, 64),
                surjective: true,
                exhaustive: true,
            },
            TheoremCase::One,
        );
        let report = DensityReport { rows: vec![row], notes: vec![] };
        let csv = report.to_csv();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line, "6,exhaustive,,54,54,128,0.421875,,,,,,i,1,");
        assert_eq!(csv.lines().next().unwrap().split(',').count(), line.split(',').count());
    }
}
