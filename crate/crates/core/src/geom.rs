//! Quasi-projective schemes given by equations, their closed points, tangent
//! spaces, embedding dimensions, strata, zeta partial products and the
//! normal-crossings bound.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf::{Elem, FieldTower, Level};
use crate::linalg::{Echelon, Matrix};
use crate::mpoly::{elem_text, power_table, HomogeneousPolynomial};

/// Largest `q^{k(n+1)}` a single enumeration sweep accepts by default.
pub const DEFAULT_POINT_BUDGET: u64 = 1 << 26;

/// `V(closed_eqs) ∖ (V(removed_eqs) ∪ excluded)` inside `P^n`.
#[derive(Clone, Debug, Default)]
pub struct SchemeDesc {
    pub n: usize,
    pub closed_eqs: Vec<HomogeneousPolynomial>,
    /// Empty means nothing is removed.
    pub removed_eqs: Vec<HomogeneousPolynomial>,
    /// Closed points taken out as well (used to remove a reduced `Y`).
    pub excluded: Vec<ClosedPoint>,
    pub expected_dim: Option<usize>,
}

impl SchemeDesc {
    pub fn projective(n: usize) -> SchemeDesc {
        SchemeDesc { n, ..Default::default() }
    }

    pub fn new(
        n: usize,
        closed_eqs: Vec<HomogeneousPolynomial>,
        removed_eqs: Vec<HomogeneousPolynomial>,
        expected_dim: Option<usize>,
    ) -> Result<SchemeDesc> {
        for f in closed_eqs.iter().chain(&removed_eqs) {
            if f.n() != n {
                return Err(Error::CoordinateCount { expected: n + 1, got: f.n() + 1 });
            }
        }
        Ok(SchemeDesc { n, closed_eqs, removed_eqs, excluded: Vec::new(), expected_dim })
    }

    pub fn with_excluded(mut self, points: &[ClosedPoint]) -> SchemeDesc {
        self.excluded.extend_from_slice(points);
        self
    }

    /// `m`; `P^n` minus anything has dimension `n` when no equations are given.
    pub fn dim(&self) -> Result<usize> {
        match (self.expected_dim, self.closed_eqs.is_empty()) {
            (Some(m), _) => Ok(m),
            (None, true) => Ok(self.n),
            (None, false) => Err(Error::MissingDimension),
        }
    }
}

/// A Frobenius orbit, stored as its lexicographically least member whose
/// first nonzero coordinate is 1. Coordinates live at level `degree`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosedPoint {
    pub degree: usize,
    pub chart: usize,
    pub coords: Vec<Elem>,
}

impl fmt::Display for ClosedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords.iter().map(|x| x.0.to_string()).collect();
        write!(f, "({})@{}", c.join(":"), self.degree)
    }
}

impl ClosedPoint {
    /// Normalizes arbitrary coordinates at level `k` into the canonical
    /// representative of their orbit.
    pub fn from_coords(tower: &FieldTower, k: usize, coords: &[Elem]) -> Result<ClosedPoint> {
        let level = tower.level(k)?;
        let chart = coords.iter().position(|c| !c.is_zero()).ok_or(Error::NoInvertibleCoordinate)?;
        let inv = level.inv(coords[chart]);
        let scaled: Vec<Elem> = coords.iter().map(|&c| level.mul(c, inv)).collect();
        let degree = orbit(level, &scaled).len();
        let mut down = Vec::with_capacity(scaled.len());
        for &c in &scaled {
            down.push(tower.descend(c, k, degree)?.expect("coordinates lie in the field of definition"));
        }
        let rep = orbit(tower.level(degree)?, &down).into_iter().min().unwrap();
        Ok(ClosedPoint { degree, chart, coords: rep })
    }

    /// All `deg P` conjugates at level `k` (a multiple of the degree).
    pub fn conjugates_at(&self, tower: &FieldTower, k: usize) -> Result<Vec<Vec<Elem>>> {
        let lifted: Vec<Elem> = self.coords.iter().map(|&c| tower.embed(c, self.degree, k)).collect::<Result<_>>()?;
        Ok(orbit(tower.level(k)?, &lifted))
    }

    /// Coordinates rendered over the level generator `t`.
    pub fn to_text(&self, tower: &FieldTower) -> String {
        match tower.level(self.degree) {
            Ok(level) => {
                let c: Vec<String> = self.coords.iter().map(|&x| elem_text(level, x)).collect();
                c.join(":")
            }
            Err(_) => self.to_string(),
        }
    }
}

fn orbit(level: &Level, pt: &[Elem]) -> Vec<Vec<Elem>> {
    let mut out = vec![pt.to_vec()];
    loop {
        let next: Vec<Elem> = out.last().unwrap().iter().map(|&x| level.frobenius(x)).collect();
        if next == out[0] {
            return out;
        }
        out.push(next);
    }
}

/// A form with coefficients already lifted to one level.
struct LiftedForm {
    terms: Vec<(Vec<u32>, Elem)>,
}

impl LiftedForm {
    fn new(tower: &FieldTower, f: &HomogeneousPolynomial, k: usize) -> Result<LiftedForm> {
        let terms = f.terms().map(|(e, c)| Ok((e.to_vec(), tower.embed(c, 1, k)?))).collect::<Result<_>>()?;
        Ok(LiftedForm { terms })
    }

    fn eval(&self, level: &Level, pt: &[Elem]) -> Elem {
        let mut acc = Elem::ZERO;
        for (e, c) in &self.terms {
            let mut term = *c;
            for (&x, &ev) in pt.iter().zip(e) {
                if ev > 0 {
                    term = level.mul(term, level.pow(x, ev as u64));
                }
            }
            acc = level.add(acc, term);
        }
        acc
    }
}

struct Membership<'a> {
    level: &'a Level,
    closed: Vec<LiftedForm>,
    removed: Vec<LiftedForm>,
    excluded: HashSet<Vec<Elem>>,
}

impl<'a> Membership<'a> {
    fn new(tower: &'a FieldTower, scheme: &SchemeDesc, k: usize) -> Result<Membership<'a>> {
        let level = tower.level(k)?;
        let lift = |fs: &[HomogeneousPolynomial]| -> Result<Vec<LiftedForm>> {
            fs.iter().map(|f| LiftedForm::new(tower, f, k)).collect()
        };
        let mut excluded = HashSet::new();
        for p in &scheme.excluded {
            if k.is_multiple_of(p.degree) {
                excluded.extend(p.conjugates_at(tower, k)?);
            }
        }
        Ok(Membership { level, closed: lift(&scheme.closed_eqs)?, removed: lift(&scheme.removed_eqs)?, excluded })
    }

    fn contains(&self, pt: &[Elem]) -> bool {
        self.closed.iter().all(|f| f.eval(self.level, pt).is_zero())
            && (self.removed.is_empty() || self.removed.iter().any(|f| !f.eval(self.level, pt).is_zero()))
            && !self.excluded.contains(pt)
    }
}

fn check_budget(tower: &FieldTower, n: usize, k: usize, budget: u64) -> Result<()> {
    let size = (tower.q() as u128).checked_pow((k * (n + 1)) as u32).unwrap_or(u128::MAX);
    if size > budget as u128 {
        return Err(Error::BudgetExceeded { level: k, size, budget });
    }
    tower.level(k)?;
    Ok(())
}

/// Normalized points of the scheme over `F_{q^k}`, sorted by chart then
/// coordinates.
pub fn rational_points(tower: &FieldTower, scheme: &SchemeDesc, k: usize, budget: u64) -> Result<Vec<Vec<Elem>>> {
    check_budget(tower, scheme.n, k, budget)?;
    let member = Membership::new(tower, scheme, k)?;
    let order = member.level.order() as u64;
    let n = scheme.n;
    let mut out = Vec::new();
    for chart in 0..=n {
        let free = n - chart;
        let total = order.pow(free as u32);
        let found: Vec<Vec<Elem>> = (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let mut pt = vec![Elem::ZERO; n + 1];
                pt[chart] = Elem::ONE;
                let mut rest = idx;
                for i in (chart + 1..=n).rev() {
                    pt[i] = Elem((rest % order) as u32);
                    rest /= order;
                }
                member.contains(&pt).then_some(pt)
            })
            .collect();
        out.extend(found);
    }
    Ok(out)
}

/// `#X(F_{q^k})`.
pub fn rational_count(tower: &FieldTower, scheme: &SchemeDesc, k: usize, budget: u64) -> Result<u64> {
    Ok(rational_points(tower, scheme, k, budget)?.len() as u64)
}

/// Closed points of degree `< r`, one per orbit, sorted by degree, chart, coordinates.
pub fn closed_points(tower: &FieldTower, scheme: &SchemeDesc, r: usize, budget: u64) -> Result<Vec<ClosedPoint>> {
    let mut out = Vec::new();
    for k in 1..r {
        let level = tower.level(k)?;
        let pts = rational_points(tower, scheme, k, budget)?;
        let found: Vec<ClosedPoint> = pts
            .into_par_iter()
            .filter_map(|pt| {
                let orb = orbit(level, &pt);
                (orb.len() == k && orb.iter().all(|o| *o >= pt))
                    .then(|| ClosedPoint { degree: k, chart: pt.iter().position(|c| !c.is_zero()).unwrap(), coords: pt })
            })
            .collect();
        out.extend(found);
    }
    Ok(out)
}

/// Whether `p` lies on the zero set of `gens`. An empty list is the unit
/// ideal, whose zero set is empty.
pub fn on_zero_set(tower: &FieldTower, gens: &[HomogeneousPolynomial], p: &ClosedPoint) -> Result<bool> {
    if gens.is_empty() {
        return Ok(false);
    }
    for g in gens {
        if !g.evaluate(tower, p.degree, &p.coords)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn contains(tower: &FieldTower, scheme: &SchemeDesc, p: &ClosedPoint) -> Result<bool> {
    let member = Membership::new(tower, scheme, p.degree)?;
    Ok(member.contains(&p.coords))
}

/// Value and full gradient `(∂f/∂x_0, …, ∂f/∂x_n)` at `p`.
pub fn gradient(tower: &FieldTower, f: &HomogeneousPolynomial, p: &ClosedPoint) -> Result<(Elem, Vec<Elem>)> {
    let k = p.degree;
    let level = tower.level(k)?;
    let n = f.n();
    if p.coords.len() != n + 1 {
        return Err(Error::CoordinateCount { expected: n + 1, got: p.coords.len() });
    }
    let powers = power_table(level, &p.coords, f.degree());
    let mut value = Elem::ZERO;
    let mut grad = vec![Elem::ZERO; n + 1];
    for (e, c) in f.terms() {
        let c = tower.embed(c, 1, k)?;
        let mut full = c;
        for (v, &ev) in e.iter().enumerate() {
            full = level.mul(full, powers[v][ev as usize]);
        }
        value = level.add(value, full);
        for i in 0..=n {
            let factor = level.from_int(e[i] as i64);
            if factor.is_zero() {
                continue;
            }
            let mut term = level.mul(c, factor);
            for (v, &ev) in e.iter().enumerate() {
                let ev = if v == i { ev - 1 } else { ev };
                term = level.mul(term, powers[v][ev as usize]);
            }
            grad[i] = level.add(grad[i], term);
        }
    }
    Ok((value, grad))
}

/// `T_P U` in the affine chart of `P`, as vectors of length `n + 1` with a
/// zero in the chart coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangentSpace {
    pub chart: usize,
    pub basis: Vec<Vec<Elem>>,
}

impl TangentSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Kernel of the chart Jacobian of `U`'s closed equations at `P`; its rank
/// must be `n - m`.
pub fn tangent_space(tower: &FieldTower, u: &SchemeDesc, p: &ClosedPoint) -> Result<TangentSpace> {
    let m = u.dim()?;
    let n = u.n;
    let level = tower.level(p.degree)?;
    let chart = p.chart;
    let affine: Vec<usize> = (0..=n).filter(|&i| i != chart).collect();
    let mut rows = Vec::with_capacity(u.closed_eqs.len());
    for f in &u.closed_eqs {
        let (_, g) = gradient(tower, f, p)?;
        rows.push(affine.iter().map(|&i| g[i]).collect::<Vec<_>>());
    }
    let jac = Matrix::from_rows(&rows, n);
    let kernel = jac.kernel(level);
    let rank = n - kernel.len();
    if m > n || rank != n - m {
        return Err(Error::NotSmooth { point: p.to_string(), m, rank, expected: n.saturating_sub(m) });
    }
    let basis = kernel
        .into_iter()
        .map(|v| {
            let mut full = vec![Elem::ZERO; n + 1];
            for (&i, x) in affine.iter().zip(v) {
                full[i] = x;
            }
            full
        })
        .collect();
    Ok(TangentSpace { chart, basis })
}

fn dot(level: &Level, a: &[Elem], b: &[Elem]) -> Elem {
    a.iter().zip(b).fold(Elem::ZERO, |acc, (&x, &y)| level.add(acc, level.mul(x, y)))
}

/// `(f(P), ⟨∇f(P), t_1⟩, …, ⟨∇f(P), t_m⟩)` for the tangent basis `t_l`.
/// The representative has `x_chart = 1`, so no untwisting factor appears.
pub fn jet(tower: &FieldTower, f: &HomogeneousPolynomial, p: &ClosedPoint, tangent: &TangentSpace) -> Result<Vec<Elem>> {
    let level = tower.level(p.degree)?;
    let (value, grad) = gradient(tower, f, p)?;
    let mut out = Vec::with_capacity(1 + tangent.dim());
    out.push(value);
    out.extend(tangent.basis.iter().map(|t| dot(level, &grad, t)));
    Ok(out)
}

/// False iff `f(P) = 0` and `df` vanishes on `T_P U`.
pub fn is_smooth_at(tower: &FieldTower, f: &HomogeneousPolynomial, u: &SchemeDesc, p: &ClosedPoint) -> Result<bool> {
    let tangent = tangent_space(tower, u, p)?;
    Ok(jet(tower, f, p, &tangent)?.iter().any(|x| !x.is_zero()))
}

/// Method A: `m` minus the rank of the generators' gradients restricted to `T_P U`.
pub fn embedding_dimension(tower: &FieldTower, z: &[HomogeneousPolynomial], u: &SchemeDesc, p: &ClosedPoint) -> Result<usize> {
    let tangent = tangent_space(tower, u, p)?;
    if !on_zero_set(tower, z, p)? {
        return Err(Error::NotOnV(p.to_string()));
    }
    embedding_dimension_with(tower, z, p, &tangent)
}

/// Method A with a precomputed tangent space; `P` must lie on `Z`.
pub fn embedding_dimension_with(
    tower: &FieldTower,
    z: &[HomogeneousPolynomial],
    p: &ClosedPoint,
    tangent: &TangentSpace,
) -> Result<usize> {
    let level = tower.level(p.degree)?;
    let m = tangent.dim();
    let mut rows = Vec::with_capacity(z.len());
    for g in z {
        let (_, grad) = gradient(tower, g, p)?;
        rows.push(tangent.basis.iter().map(|t| dot(level, &grad, t)).collect::<Vec<_>>());
    }
    Ok(m - Matrix::from_rows(&rows, m).rank(level))
}

/// Method B: `dim m/(I_Z + m²)` from the κ(P)-span of the jets of a degree
/// slice of the ideal (value coordinates included, which vanish on `V`).
pub fn embedding_dimension_jets(
    tower: &FieldTower,
    z: &[HomogeneousPolynomial],
    u: &SchemeDesc,
    p: &ClosedPoint,
) -> Result<usize> {
    let tangent = tangent_space(tower, u, p)?;
    if !on_zero_set(tower, z, p)? {
        return Err(Error::NotOnV(p.to_string()));
    }
    let level = tower.level(p.degree)?;
    let m = tangent.dim();
    let maxdeg = z.iter().map(|g| g.degree()).max().unwrap_or(0);
    let slice = crate::linalg::ideal_slice(z, u.n, maxdeg + 1, tower.base());
    let mut ech = Echelon::new(1 + m, false);
    for b in &slice.basis {
        ech.insert(level, jet(tower, b, p, &tangent)?);
    }
    Ok(m - ech.rank())
}

/// Closed points of `U` up to a degree bound, split by embedding dimension of `V`.
#[derive(Clone, Debug)]
pub struct StratumTable {
    pub m: usize,
    pub q: u64,
    pub bound: usize,
    /// Every closed point of `U` of degree `≤ bound`; `Some(e)` on `V`.
    pub points: Vec<(ClosedPoint, Option<usize>)>,
    /// `#V_e(F_{q^g})` at index `[e][g - 1]`.
    pub stratum_counts: Vec<Vec<u64>>,
    /// `#(U - V)(F_{q^g})` at index `g - 1`.
    pub off_v_counts: Vec<u64>,
    /// Estimated `dim V_e`, `None` for strata with no enumerated point.
    pub dims: Vec<Option<usize>>,
    pub overridden: Vec<bool>,
}

fn rational_from_closed(closed_by_degree: &[u64]) -> Vec<u64> {
    (1..=closed_by_degree.len())
        .map(|g| (1..=g).filter(|k| g % k == 0).map(|k| k as u64 * closed_by_degree[k - 1]).sum())
        .collect()
}

/// Heuristic: `round(log_{q^G} N_G)` at the largest `G` with `N_G > 0`, clamped to `[0, m]`.
pub fn dim_estimate(q: u64, counts: &[u64], m: usize) -> Option<usize> {
    let (g, &n) = counts.iter().enumerate().rev().find(|(_, &c)| c > 0)?;
    let est = (n as f64).ln() / ((g + 1) as f64 * (q as f64).ln());
    Some((est.round().max(0.0) as usize).min(m))
}

impl StratumTable {
    pub fn v_m_nonempty(&self) -> bool {
        self.points.iter().any(|(_, e)| *e == Some(self.m))
    }

    pub fn set_dim(&mut self, e: usize, dim: usize) {
        if e < self.dims.len() {
            self.dims[e] = Some(dim);
            self.overridden[e] = true;
        }
    }

    /// Points of degree `< r` with their `e`-values.
    pub fn points_below(&self, r: usize) -> impl Iterator<Item = &(ClosedPoint, Option<usize>)> {
        self.points.iter().filter(move |(p, _)| p.degree < r)
    }

    /// Closed-point count of `V_e` in degree `g`.
    pub fn closed_count(&self, e: usize, g: usize) -> u64 {
        self.points.iter().filter(|(p, pe)| *pe == Some(e) && p.degree == g).count() as u64
    }
}

pub fn stratify(
    tower: &FieldTower,
    z: &[HomogeneousPolynomial],
    u: &SchemeDesc,
    bound: usize,
    budget: u64,
) -> Result<StratumTable> {
    let m = u.dim()?;
    let pts = closed_points(tower, u, bound + 1, budget)?;
    let points: Vec<(ClosedPoint, Option<usize>)> = pts
        .into_par_iter()
        .map(|p| {
            let e = if on_zero_set(tower, z, &p)? { Some(embedding_dimension(tower, z, u, &p)?) } else { None };
            Ok((p, e))
        })
        .collect::<Result<_>>()?;
    let mut closed = vec![vec![0u64; bound]; m + 1];
    let mut off = vec![0u64; bound];
    for (p, e) in &points {
        match e {
            Some(e) => closed[*e][p.degree - 1] += 1,
            None => off[p.degree - 1] += 1,
        }
    }
    let stratum_counts: Vec<Vec<u64>> = closed.iter().map(|c| rational_from_closed(c)).collect();
    let dims = stratum_counts.iter().map(|c| dim_estimate(tower.q(), c, m)).collect();
    Ok(StratumTable {
        m,
        q: tower.q(),
        bound,
        points,
        stratum_counts,
        off_v_counts: rational_from_closed(&off),
        dims,
        overridden: vec![false; m + 1],
    })
}

fn mobius(n: u64) -> i64 {
    let mut n = n;
    let mut result = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            result = -result;
        }
        d += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Closed-point counts per degree from rational-point counts `N_1..N_R`.
pub fn closed_counts_from_rational(rational: &[u64]) -> Result<Vec<u64>> {
    (1..=rational.len())
        .map(|k| {
            let s: i128 = (1..=k)
                .filter(|j| k % j == 0)
                .map(|j| mobius((k / j) as u64) as i128 * rational[j - 1] as i128)
                .sum();
            if s < 0 || s % k as i128 != 0 {
                return Err(Error::Invalid(format!("point counts are not consistent at degree {k}")));
            }
            Ok((s / k as i128) as u64)
        })
        .collect()
}

fn euler_factor(q: u64, s: u32, degree: usize) -> BigRational {
    // (1 - q^{-s·deg})^{-1} = Q / (Q - 1) with Q = q^{s·deg}
    let big_q = BigInt::from(q).pow(s * degree as u32);
    BigRational::new(big_q.clone(), big_q - 1)
}

/// `∏ (1 - q^{-s·deg P})^{-1}` over the given degrees below `r`.
pub fn zeta_from_points(q: u64, s: u32, degrees: impl IntoIterator<Item = usize>, r: usize) -> BigRational {
    degrees
        .into_iter()
        .filter(|&d| d < r)
        .fold(BigRational::one(), |acc, d| acc * euler_factor(q, s, d))
}

/// `∏_{g<r} (1 - q^{-sg})^{-c_g}` with `c_g` obtained by Möbius inversion.
pub fn zeta_from_counts(q: u64, s: u32, rational: &[u64], r: usize) -> Result<BigRational> {
    let closed = closed_counts_from_rational(rational)?;
    let mut acc = BigRational::one();
    for (i, &c) in closed.iter().enumerate().take(r.saturating_sub(1)) {
        let f = euler_factor(q, s, i + 1);
        for _ in 0..c {
            acc *= &f;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct ZetaData {
    pub q: u64,
    pub s: u32,
    pub r: usize,
    /// `N_g` for `g = 1..r-1`.
    pub rational_counts: Vec<u64>,
    /// Closed points per degree, counted from the orbit enumeration.
    pub closed_counts: Vec<u64>,
    pub value: BigRational,
    /// The same product computed from `rational_counts`.
    pub value_from_counts: BigRational,
}

impl ZetaData {
    /// The Euler product has a pole at `s = dim` and diverges below it.
    pub fn at_or_below_pole(&self, dim: usize) -> bool {
        (self.s as usize) <= dim
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn zeta_partial(tower: &FieldTower, scheme: &SchemeDesc, s: u32, r: usize, budget: u64) -> Result<ZetaData> {
    if s == 0 {
        return Err(Error::Invalid("zeta argument s must be at least 1".into()));
    }
    let pts = closed_points(tower, scheme, r, budget)?;
    let mut closed_counts = vec![0u64; r.saturating_sub(1)];
    for p in &pts {
        closed_counts[p.degree - 1] += 1;
    }
    let rational_counts: Vec<u64> =
        (1..r).map(|k| rational_count(tower, scheme, k, budget)).collect::<Result<_>>()?;
    Ok(ZetaData {
        q: tower.q(),
        s,
        r,
        value: zeta_from_points(tower.q(), s, pts.iter().map(|p| p.degree), r),
        value_from_counts: zeta_from_counts(tower.q(), s, &rational_counts, r)?,
        rational_counts,
        closed_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SncRow {
    pub point: ClosedPoint,
    /// Number of components through the point.
    pub k: usize,
    pub e: usize,
    /// `l + k - 1`.
    pub bound: usize,
    pub ok: bool,
    /// `k ≤ l + 1`: a `k`-fold intersection of codimension `k - 1` in `V` must exist.
    pub codim_ok: bool,
}

#[derive(Clone, Debug)]
pub struct SncReport {
    pub l: usize,
    pub rows: Vec<SncRow>,
}

impl SncReport {
    pub fn bound_violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok).count()
    }

    pub fn codim_violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.codim_ok).count()
    }

    pub fn passed(&self) -> bool {
        self.bound_violations() == 0
    }
}

/// Checks `e_V(P) ≤ l + k(P) - 1` on every closed point of `V = Z ∩ U` of
/// degree `≤ bound`, where `Z` is given by `z` and its components by `components`.
pub fn snc_bound_check(
    tower: &FieldTower,
    z: &[HomogeneousPolynomial],
    components: &[Vec<HomogeneousPolynomial>],
    l: usize,
    u: &SchemeDesc,
    bound: usize,
    budget: u64,
) -> Result<SncReport> {
    let table = stratify(tower, z, u, bound, budget)?;
    let rows = table
        .points
        .par_iter()
        .filter_map(|(p, e)| e.map(|e| (p, e)))
        .map(|(p, e)| {
            let mut k = 0;
            for comp in components {
                if on_zero_set(tower, comp, p)? {
                    k += 1;
                }
            }
            let bound = (l + k).saturating_sub(1);
            Ok(SncRow { point: p.clone(), k, e, bound, ok: e <= bound, codim_ok: k <= l + 1 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SncReport { l, rows })
}
