//! Exact linear algebra over finite fields, degree slices of ideals, the
//! stabilization constant, jet spaces and evaluation maps.

use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, ClosedPoint, SchemeDesc, TangentSpace};
use crate::gf::{Elem, FieldTower, Level};
use crate::mpoly::{HomogeneousPolynomial, MonomialBasis};

/// The operations row reduction needs.
pub trait Field: Sync {
    fn add(&self, a: Elem, b: Elem) -> Elem;
    fn sub(&self, a: Elem, b: Elem) -> Elem;
    fn mul(&self, a: Elem, b: Elem) -> Elem;
    fn inv(&self, a: Elem) -> Elem;
}

impl Field for Level {
    fn add(&self, a: Elem, b: Elem) -> Elem {
        Level::add(self, a, b)
    }
    fn sub(&self, a: Elem, b: Elem) -> Elem {
        Level::sub(self, a, b)
    }
    fn mul(&self, a: Elem, b: Elem) -> Elem {
        Level::mul(self, a, b)
    }
    fn inv(&self, a: Elem) -> Elem {
        Level::inv(self, a)
    }
}

/// `F_p` with elements stored as residues `0..p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    pub p: u32,
}

impl Field for PrimeField {
    fn add(&self, a: Elem, b: Elem) -> Elem {
        Elem(((a.0 as u64 + b.0 as u64) % self.p as u64) as u32)
    }
    fn sub(&self, a: Elem, b: Elem) -> Elem {
        Elem(((a.0 as u64 + self.p as u64 - b.0 as u64) % self.p as u64) as u32)
    }
    fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem((a.0 as u64 * b.0 as u64 % self.p as u64) as u32)
    }
    fn inv(&self, a: Elem) -> Elem {
        assert!(!a.is_zero(), "inverse of zero");
        Elem(crate::gf::fp_poly::inv_mod(a.0, self.p))
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

/// Reduced row echelon form with its rank and pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub reduced: Matrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![Elem::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Elem::ONE);
        }
        m
    }

    /// Builds from rows of equal length; `cols` fixes the width when there are no rows.
    pub fn from_rows(rows: &[Vec<Elem>], cols: usize) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn rref<F: Field>(&self, f: &F) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = f.inv(m.get(r, c));
            for j in c..m.cols {
                let v = f.mul(m.get(r, j), inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { reduced: m, rank: r, pivots }
    }

    pub fn rank<F: Field>(&self, f: &F) -> usize {
        self.rref(f).rank
    }

    /// Basis of `{x : M x = 0}`, one vector per free column.
    pub fn kernel<F: Field>(&self, f: &F) -> Vec<Vec<Elem>> {
        let Rref { reduced, pivots, .. } = self.rref(f);
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![Elem::ZERO; self.cols];
                v[free] = Elem::ONE;
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = f.sub(Elem::ZERO, reduced.get(i, free));
                }
                v
            })
            .collect()
    }

    pub fn mul_vec<F: Field>(&self, f: &F, x: &[Elem]) -> Vec<Elem> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(Elem::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b))))
            .collect()
    }
}

/// Outcome of adding a row to an [`Echelon`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insert {
    Independent,
    Dependent,
    /// Only for augmented systems: the row reduces to `0 = nonzero`.
    Inconsistent,
}

/// Incrementally built echelon basis. Rows are kept with pivot entry 1 and
/// zeros at the pivots of earlier rows. With `augmented`, the last column is
/// a right-hand side and never holds a pivot.
#[derive(Clone, Debug)]
pub struct Echelon {
    width: usize,
    augmented: bool,
    rows: Vec<(usize, Vec<Elem>)>,
}

impl Echelon {
    pub fn new(cols: usize, augmented: bool) -> Echelon {
        Echelon { width: cols + augmented as usize, augmented, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce<F: Field>(&self, f: &F, v: &mut [Elem]) {
        debug_assert_eq!(v.len(), self.width);
        for (pc, row) in &self.rows {
            let c = v[*pc];
            if c.is_zero() {
                continue;
            }
            for (x, &r) in v.iter_mut().zip(row).skip(*pc) {
                *x = f.sub(*x, f.mul(c, r));
            }
        }
    }

    pub fn insert<F: Field>(&mut self, f: &F, mut v: Vec<Elem>) -> Insert {
        self.reduce(f, &mut v);
        let limit = self.width - self.augmented as usize;
        match v[..limit].iter().position(|x| !x.is_zero()) {
            Some(pc) => {
                let inv = f.inv(v[pc]);
                for x in v.iter_mut().skip(pc) {
                    *x = f.mul(*x, inv);
                }
                self.rows.push((pc, v));
                Insert::Independent
            }
            None if self.augmented && !v[limit].is_zero() => Insert::Inconsistent,
            None => Insert::Dependent,
        }
    }
}

/// Where a basis element of an ideal slice came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// Index into the generator list; `None` when the ideal is the unit ideal.
    pub generator: Option<usize>,
    /// Exponents of the monomial multiplier.
    pub multiplier: Vec<u32>,
}

/// A basis of `I_d`, the degree-`d` part of the ideal generated by a list of forms.
#[derive(Clone, Debug)]
pub struct IdealSlice {
    pub n: usize,
    pub d: usize,
    pub basis: Vec<HomogeneousPolynomial>,
    pub provenance: Vec<Provenance>,
}

impl IdealSlice {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `Σ c_i b_i` for coefficients over `F_q`.
    pub fn combine(&self, coeffs: &[Elem], base: &Level) -> HomogeneousPolynomial {
        let mut f = HomogeneousPolynomial::zero(self.n, self.d);
        for (b, &c) in self.basis.iter().zip(coeffs) {
            if !c.is_zero() {
                f = f.add(&b.scale(c, base), base).expect("slice elements share a degree");
            }
        }
        f
    }
}

/// Spans `Σ_i S_{d - deg g_i}·g_i` greedily, keeping independent monomial
/// multiples in generator-then-monomial order. An empty generator list is the
/// unit ideal (the empty subscheme), so the slice is all of `S_d`.
pub fn ideal_slice(gens: &[HomogeneousPolynomial], n: usize, d: usize, base: &Level) -> IdealSlice {
    let target = MonomialBasis::new(n, d);
    if gens.is_empty() {
        let basis = target
            .iter()
            .map(|e| HomogeneousPolynomial::monomial(n, e, Elem::ONE).unwrap())
            .collect();
        let provenance = target.iter().map(|e| Provenance { generator: None, multiplier: e.to_vec() }).collect();
        return IdealSlice { n, d, basis, provenance };
    }
    let mut ech = Echelon::new(target.len(), false);
    let mut basis = Vec::new();
    let mut provenance = Vec::new();
    for (gi, g) in gens.iter().enumerate() {
        if g.degree() > d || g.is_zero() {
            continue;
        }
        let mult = MonomialBasis::new(n, d - g.degree());
        for e in mult.iter() {
            let prod = HomogeneousPolynomial::monomial(n, e, Elem::ONE).unwrap().mul(g, base);
            if ech.insert(base, prod.coeffs().to_vec()) == Insert::Independent {
                basis.push(prod);
                provenance.push(Provenance { generator: Some(gi), multiplier: e.to_vec() });
            }
            if ech.rank() == target.len() {
                break;
            }
        }
    }
    IdealSlice { n, d, basis, provenance }
}

/// `dim_{F_q} S_1·I_d`, the span of all `x_i·b` for basis elements `b`.
pub fn linear_multiples_dim(slice: &IdealSlice, base: &Level) -> usize {
    let n = slice.n;
    let width = MonomialBasis::new(n, slice.d + 1).len();
    let mut ech = Echelon::new(width, false);
    for b in &slice.basis {
        for i in 0..=n {
            let mut e = vec![0u32; n + 1];
            e[i] = 1;
            let prod = HomogeneousPolynomial::monomial(n, &e, Elem::ONE).unwrap().mul(b, base);
            ech.insert(base, prod.coeffs().to_vec());
        }
    }
    ech.rank()
}

/// Dimension table behind the stabilization constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilization {
    pub c: usize,
    /// `(d, dim I_d, dim S_1·I_{d-1})` for `d = 0..=d_max`; the last entry is 0 at `d = 0`.
    pub table: Vec<(usize, usize, usize)>,
}

/// Least `c` with `S_1·I_d = I_{d+1}` for every `c ≤ d < d_max`.
pub fn stabilization_c(gens: &[HomogeneousPolynomial], n: usize, d_max: usize, base: &Level) -> Result<Stabilization> {
    let maxdeg = gens.iter().map(|g| g.degree()).max().unwrap_or(0);
    if d_max < maxdeg + 1 {
        return Err(Error::WindowTooSmall(d_max));
    }
    let slices: Vec<IdealSlice> = (0..=d_max).into_par_iter().map(|d| ideal_slice(gens, n, d, base)).collect();
    let multiples: Vec<usize> = slices.par_iter().map(|s| linear_multiples_dim(s, base)).collect();
    let mut table = vec![(0, slices[0].dim(), 0)];
    for d in 1..=d_max {
        table.push((d, slices[d].dim(), multiples[d - 1]));
    }
    let mut c = d_max;
    while c > 0 && table[c].1 == table[c].2 {
        c -= 1;
    }
    // the window only certifies degrees below d_max
    if c == d_max {
        return Err(Error::WindowTooSmall(d_max));
    }
    Ok(Stabilization { c, table })
}

/// `q^(deg·rank)`.
pub fn jet_cardinality(q: u64, degree: usize, rank: usize) -> BigUint {
    BigUint::from(q).pow((degree * rank) as u32)
}

/// First-order jets at a closed point of `U`, and the subspace cut out by `Z`.
#[derive(Clone, Debug)]
pub struct JetSpace {
    pub point: ClosedPoint,
    pub tangent: TangentSpace,
    pub m: usize,
    /// `None` when `P ∉ V`.
    pub e: Option<usize>,
    /// κ(P)-basis (reduced echelon rows) of `I_Z·O_C` inside κ(P)^{1+m}.
    pub z_subspace: Vec<Vec<Elem>>,
    pub cardinality: BigUint,
}

impl JetSpace {
    /// Closed form: `q^{(m+1)deg P}` off `V`, `q^{(m-e)deg P}` on `V`.
    pub fn expected_cardinality(&self, q: u64) -> BigUint {
        let rank = match self.e {
            None => self.m + 1,
            Some(e) => self.m - e,
        };
        jet_cardinality(q, self.point.degree, rank)
    }
}

/// Builds the jet space at `P` and checks its size against the closed form,
/// failing with [`Error::NonSaturated`] on mismatch.
pub fn jet_space(tower: &FieldTower, u: &SchemeDesc, z: &[HomogeneousPolynomial], p: &ClosedPoint) -> Result<JetSpace> {
    let tangent = geom::tangent_space(tower, u, p)?;
    let m = tangent.dim();
    let level = tower.level(p.degree)?;
    let on_v = geom::on_zero_set(tower, z, p)?;
    let e = if on_v { Some(geom::embedding_dimension_with(tower, z, p, &tangent)?) } else { None };
    let maxdeg = z.iter().map(|g| g.degree()).max().unwrap_or(0);
    let slice = ideal_slice(z, u.n, maxdeg + 1, tower.base());
    let mut ech = Echelon::new(1 + m, false);
    for b in &slice.basis {
        let jet = geom::jet(tower, b, p, &tangent)?;
        ech.insert(level, jet);
        if ech.rank() == 1 + m {
            break;
        }
    }
    let rank = ech.rank();
    let js = JetSpace {
        point: p.clone(),
        m,
        e,
        z_subspace: ech.rows.into_iter().map(|(_, r)| r).collect(),
        cardinality: jet_cardinality(tower.q(), p.degree, rank),
        tangent,
    };
    let expected = js.expected_cardinality(tower.q());
    if js.cardinality != expected {
        return Err(Error::NonSaturated {
            point: p.to_string(),
            observed: js.cardinality.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(js)
}

/// What one block of rows in an evaluation map measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// `f|_Y` at a reduced point of `Y`.
    YPoint,
    /// First-order jet at a point of `U`; `e` is set on `V`.
    Jet { e: Option<usize> },
}

#[derive(Clone, Debug)]
pub struct TargetBlock {
    pub kind: TargetKind,
    pub point: ClosedPoint,
    /// First row of the block in the expanded matrix.
    pub offset: usize,
    /// Number of `F_p` rows.
    pub rows: usize,
    /// `F_p`-dimension of the block's `H^0` (what surjectivity must reach).
    pub h0_dim: usize,
}

/// `f ↦ (f|_Y, (jet_P f)_P)` on `I_d`, written over `F_p`. Column `i·a + s`
/// is the image of `t^s·b_i`; each κ(P) coordinate contributes `a·deg P`
/// rows (its `F_p` digits).
#[derive(Clone, Debug)]
pub struct EvalMap {
    pub d: usize,
    pub p: u32,
    pub slice: Arc<IdealSlice>,
    pub blocks: Vec<TargetBlock>,
    pub matrix: Matrix,
    pub rank: usize,
}

impl EvalMap {
    /// Sum of the `F_p`-dimensions of all targets.
    pub fn target_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.h0_dim).sum()
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn kernel_dim(&self) -> usize {
        self.domain_dim() - self.rank
    }

    pub fn is_surjective(&self) -> bool {
        self.rank == self.target_dim()
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { p: self.p }
    }

    /// Column `j` as a dense `F_p` vector.
    pub fn column(&self, j: usize) -> Vec<Elem> {
        (0..self.matrix.rows()).map(|i| self.matrix.get(i, j)).collect()
    }
}

/// Point data the evaluation map needs, computed once per point.
#[derive(Clone, Debug)]
pub struct SievePoint {
    pub point: ClosedPoint,
    pub tangent: TangentSpace,
    pub e: Option<usize>,
}

/// Tangent spaces and `e`-values for a list of points of `U`.
pub fn sieve_points(
    tower: &FieldTower,
    u: &SchemeDesc,
    z: &[HomogeneousPolynomial],
    points: &[ClosedPoint],
) -> Result<Vec<SievePoint>> {
    points
        .par_iter()
        .map(|p| {
            let tangent = geom::tangent_space(tower, u, p)?;
            let e = if geom::on_zero_set(tower, z, p)? {
                Some(geom::embedding_dimension_with(tower, z, p, &tangent)?)
            } else {
                None
            };
            Ok(SievePoint { point: p.clone(), tangent, e })
        })
        .collect()
}

/// Fails with [`Error::YMeetsZ`] if some point of `Y` lies on `Z`.
pub fn check_y_disjoint(tower: &FieldTower, z: &[HomogeneousPolynomial], y: &[ClosedPoint]) -> Result<()> {
    for pt in y {
        if geom::on_zero_set(tower, z, pt)? {
            return Err(Error::YMeetsZ(pt.to_string()));
        }
    }
    Ok(())
}

pub fn eval_map(
    tower: &FieldTower,
    slice: Arc<IdealSlice>,
    y: &[ClosedPoint],
    points: &[SievePoint],
    z: &[HomogeneousPolynomial],
) -> Result<EvalMap> {
    check_y_disjoint(tower, z, y)?;
    let a = tower.a();
    let p = tower.p();
    let cols = slice.dim() * a;
    let base = tower.base();
    let t_powers: Vec<Elem> = (0..a).map(|s| base.pow(base.generator(), s as u64)).collect();

    // per-target blocks of κ(P)-coordinates for each basis element
    struct Raw {
        kind: TargetKind,
        point: ClosedPoint,
        h0: usize,
        values: Vec<Vec<Elem>>,
    }
    let mut work: Vec<Raw> = Vec::new();
    for pt in y {
        let values = slice
            .basis
            .iter()
            .map(|b| Ok(vec![b.twist_restrict(tower, pt.degree, &pt.coords)?]))
            .collect::<Result<Vec<_>>>()?;
        work.push(Raw { kind: TargetKind::YPoint, point: pt.clone(), h0: a * pt.degree, values });
    }
    let jets: Vec<Raw> = points
        .par_iter()
        .map(|sp| {
            let m = sp.tangent.dim();
            let values = slice
                .basis
                .iter()
                .map(|b| geom::jet(tower, b, &sp.point, &sp.tangent))
                .collect::<Result<Vec<_>>>()?;
            let h0 = match sp.e {
                None => (m + 1) * a * sp.point.degree,
                Some(e) => (m - e) * a * sp.point.degree,
            };
            Ok(Raw { kind: TargetKind::Jet { e: sp.e }, point: sp.point.clone(), h0, values })
        })
        .collect::<Result<Vec<_>>>()?;
    work.extend(jets);

    let mut blocks = Vec::with_capacity(work.len());
    let mut offset = 0;
    let mut rows_data: Vec<Vec<Elem>> = Vec::new();
    for raw in work {
        let level = tower.level(raw.point.degree)?;
        let coords = raw.values.first().map_or(0, |v| v.len());
        let width = raw.point.degree * a;
        let mut block_rows = vec![vec![Elem::ZERO; cols]; coords * width];
        let gens: Vec<Elem> = t_powers.iter().map(|&t| tower.embed(t, 1, raw.point.degree)).collect::<Result<_>>()?;
        for (i, vals) in raw.values.iter().enumerate() {
            for (s, &g) in gens.iter().enumerate() {
                for (ci, &v) in vals.iter().enumerate() {
                    let digits = level.coeffs(level.mul(g, v));
                    for (di, &dv) in digits.iter().enumerate() {
                        block_rows[ci * width + di][i * a + s] = Elem(dv);
                    }
                }
            }
        }
        let rows = block_rows.len();
        blocks.push(TargetBlock { kind: raw.kind, point: raw.point, offset, rows, h0_dim: raw.h0 });
        offset += rows;
        rows_data.extend(block_rows);
    }
    let matrix = Matrix::from_rows(&rows_data, cols);
    let rank = matrix.rank(&PrimeField { p });
    Ok(EvalMap { d: slice.d, p, slice, blocks, matrix, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::parse_form;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: u32) -> Matrix {
        let data: Vec<Vec<Elem>> = (0..rows).map(|_| (0..cols).map(|_| Elem(rng.gen_range(0..p))).collect()).collect();
        Matrix::from_rows(&data, cols)
    }

    #[test]
    fn rref_identity_and_zero() {
        let f = PrimeField { p: 5 };
        let id = Matrix::identity(4);
        let r = id.rref(&f);
        assert_eq!(r.reduced, id);
        assert_eq!(r.rank, 4);
        assert!(id.kernel(&f).is_empty());
        let z = Matrix::zeros(3, 4);
        assert_eq!(z.rank(&f), 0);
        assert_eq!(z.kernel(&f).len(), 4);
    }

    #[test]
    fn rank_equals_transpose_rank() {
        let f = PrimeField { p: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 20, 30, 2);
            assert_eq!(m.rank(&f), m.transpose().rank(&f));
        }
    }

    #[test]
    fn kernel_over_extension_level() {
        let t = FieldTower::new(3, 2, 1).unwrap();
        let lvl = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<Vec<Elem>> = (0..3).map(|_| (0..6).map(|_| Elem(rng.gen_range(0..9))).collect()).collect();
        let m = Matrix::from_rows(&data, 6);
        let ker = m.kernel(lvl);
        assert_eq!(ker.len() + m.rank(lvl), 6);
        for v in ker {
            assert!(m.mul_vec(lvl, &v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn echelon_matches_rref() {
        let f = PrimeField { p: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 12, 8, 3);
        let mut ech = Echelon::new(8, false);
        for i in 0..12 {
            ech.insert(&f, m.row(i).to_vec());
        }
        assert_eq!(ech.rank(), m.rank(&f));
        let mut aug = Echelon::new(1, true);
        assert_eq!(aug.insert(&f, vec![Elem(1), Elem(2)]), Insert::Independent);
        assert_eq!(aug.insert(&f, vec![Elem(2), Elem(1)]), Insert::Dependent);
        assert_eq!(aug.insert(&f, vec![Elem(1), Elem(0)]), Insert::Inconsistent);
    }

    #[test]
    fn ideal_slice_examples() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let base = t.base();
        let line = [parse_form("x0", 1, base).unwrap()];
        let s = ideal_slice(&line, 1, 2, base);
        assert_eq!(s.dim(), 2);
        assert_eq!(ideal_slice(&[], 3, 4, base).dim(), 35);
        let fat: Vec<_> = ["x1^2", "x1*x2", "x2^2"].iter().map(|g| parse_form(g, 2, base).unwrap()).collect();
        assert_eq!(ideal_slice(&fat, 2, 3, base).dim(), 7);
        assert_eq!(ideal_slice(&fat, 2, 1, base).dim(), 0);
    }

    #[test]
    fn fat_point_slice_is_the_jet_kernel() {
        // f ∈ I_3 iff f and its first partials vanish at (1:0:0)
        let t = FieldTower::new(2, 1, 1).unwrap();
        let base = t.base();
        let fat: Vec<_> = ["x1^2", "x1*x2", "x2^2"].iter().map(|g| parse_form(g, 2, base).unwrap()).collect();
        let basis = MonomialBasis::new(2, 3);
        let constrained: Vec<Vec<Elem>> = basis
            .iter()
            .map(|e| {
                // value, ∂/∂x1, ∂/∂x2 at (1,0,0) for each monomial
                let value = (e[1] == 0 && e[2] == 0) as u32;
                let d1 = (e[1] == 1 && e[2] == 0) as u32;
                let d2 = (e[1] == 0 && e[2] == 1) as u32;
                vec![Elem(value), Elem(d1), Elem(d2)]
            })
            .collect();
        let m = Matrix::from_rows(&constrained, 3).transpose();
        assert_eq!(m.kernel(base).len(), ideal_slice(&fat, 2, 3, base).dim());
    }

    #[test]
    fn stabilization_examples() {
        let t = FieldTower::new(2, 1, 1).unwrap();
        let base = t.base();
        assert_eq!(stabilization_c(&[], 2, 5, base).unwrap().c, 0);
        let line = [parse_form("x0", 1, base).unwrap()];
        assert_eq!(stabilization_c(&line, 1, 6, base).unwrap().c, 1);
        let fat: Vec<_> = ["x1^2", "x1*x2", "x2^2"].iter().map(|g| parse_form(g, 2, base).unwrap()).collect();
        let st = stabilization_c(&fat, 2, 8, base).unwrap();
        assert_eq!(st.c, 2);
        for &(d, dim, mult) in &st.table[1..] {
            assert!(dim >= mult, "d={d}");
            if d > st.c {
                assert_eq!(dim, mult);
            }
        }
        assert!(matches!(stabilization_c(&fat, 2, 2, base), Err(Error::WindowTooSmall(2))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rank_nullity(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
            let f = PrimeField { p: 3 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, rows, cols, 3);
            let ker = m.kernel(&f);
            prop_assert_eq!(ker.len() + m.rank(&f), cols);
            for v in ker {
                prop_assert!(m.mul_vec(&f, &v).iter().all(|x| x.is_zero()));
            }
        }

        #[test]
        fn slice_dims_grow(seed in any::<u64>()) {
            let t = FieldTower::new(3, 1, 1).unwrap();
            let base = t.base();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gens: Vec<HomogeneousPolynomial> = (0..2).map(|_| {
                let d = rng.gen_range(1..3);
                let b = MonomialBasis::new(2, d);
                let c = (0..b.len()).map(|_| Elem(rng.gen_range(0..3))).collect();
                HomogeneousPolynomial::from_coeffs(b, c).unwrap()
            }).collect();
            let st = stabilization_c(&gens, 2, 5, base).unwrap();
            for w in st.table.windows(2).skip(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            for &(_, dim, mult) in &st.table {
                prop_assert!(dim >= mult);
            }
        }
    }
}
