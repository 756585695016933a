//! Polynomials over `F_q`: dense homogeneous forms indexed by a graded-lex
//! monomial basis, sparse affine polynomials, and the text syntax used in
//! experiment files.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::{Elem, FieldTower, Level};

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All monomials of degree exactly `d` in `x_0..x_n`, in descending
/// lexicographic order of exponent vectors (`x_0^d` has rank 0).
#[derive(Debug)]
pub struct MonomialBasis {
    n: usize,
    d: usize,
    monomials: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(n: usize, d: usize) -> Arc<MonomialBasis> {
        let mut monomials = Vec::with_capacity(binomial((n + d) as u64, n as u64) as usize);
        let mut cur = vec![0u32; n + 1];
        fn fill(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(cur.clone());
                return;
            }
            for e in (0..=left).rev() {
                cur[pos] = e;
                fill(pos + 1, left - e, cur, out);
            }
        }
        fill(0, d as u32, &mut cur, &mut monomials);
        Arc::new(MonomialBasis { n, d, monomials })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, rank: usize) -> &[u32] {
        &self.monomials[rank]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.monomials.iter().map(|m| m.as_slice())
    }

    /// Position of `exps` in the basis, via the combinatorial number system.
    pub fn rank(&self, exps: &[u32]) -> usize {
        debug_assert_eq!(exps.len(), self.n + 1);
        let mut remaining = self.d as u64;
        let mut rank = 0u64;
        for (i, &e) in exps.iter().enumerate().take(self.n) {
            let e = e as u64;
            if remaining > e {
                let vars_after = (self.n - i) as u64;
                rank += binomial(remaining - e - 1 + vars_after, vars_after);
            }
            remaining -= e;
        }
        rank as usize
    }
}

/// A degree-`d` form in `x_0..x_n` with coefficients in `F_q` (level 1).
#[derive(Clone)]
pub struct HomogeneousPolynomial {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<Elem>,
}

impl PartialEq for HomogeneousPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.basis.n == other.basis.n && self.basis.d == other.basis.d && self.coeffs == other.coeffs
    }
}

impl Eq for HomogeneousPolynomial {}

impl fmt::Debug for HomogeneousPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HomogeneousPolynomial(n={}, d={}, ", self.basis.n, self.basis.d)?;
        let terms: Vec<String> = self
            .terms()
            .map(|(e, c)| format!("{}*{}", c.0, monomial_text(e)))
            .collect();
        write!(f, "{})", if terms.is_empty() { "0".into() } else { terms.join(" + ") })
    }
}

fn monomial_text(exps: &[u32]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("x{i}") } else { format!("x{i}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Renders a field element as an integer when it lies in `F_p`, otherwise as
/// a polynomial in the level generator `t`.
pub fn elem_text(level: &Level, c: Elem) -> String {
    if c.0 < level.p() {
        return c.0.to_string();
    }
    let parts: Vec<String> = level
        .coeffs(c)
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &d)| d != 0)
        .map(|(i, &d)| match (i, d) {
            (0, _) => d.to_string(),
            (1, 1) => "t".into(),
            (1, _) => format!("{d}*t"),
            (_, 1) => format!("t^{i}"),
            _ => format!("{d}*t^{i}"),
        })
        .collect();
    format!("({})", parts.join("+"))
}

impl HomogeneousPolynomial {
    pub fn zero(n: usize, d: usize) -> HomogeneousPolynomial {
        let basis = MonomialBasis::new(n, d);
        let coeffs = vec![Elem::ZERO; basis.len()];
        HomogeneousPolynomial { basis, coeffs }
    }

    pub fn from_coeffs(basis: Arc<MonomialBasis>, coeffs: Vec<Elem>) -> Result<HomogeneousPolynomial> {
        if coeffs.len() != basis.len() {
            return Err(Error::Invalid(format!(
                "coefficient vector of length {} for a basis of size {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(HomogeneousPolynomial { basis, coeffs })
    }

    pub fn monomial(n: usize, exps: &[u32], c: Elem) -> Result<HomogeneousPolynomial> {
        if exps.len() != n + 1 {
            return Err(Error::CoordinateCount { expected: n + 1, got: exps.len() });
        }
        let d = exps.iter().sum::<u32>() as usize;
        let mut f = HomogeneousPolynomial::zero(n, d);
        let r = f.basis.rank(exps);
        f.coeffs[r] = c;
        Ok(f)
    }

    /// Collects `(exponents, coefficient)` terms; all must share one degree.
    /// An empty term list gives the zero form of degree 0.
    pub fn from_terms(n: usize, terms: &[(Vec<u32>, Elem)], base: &Level) -> Result<HomogeneousPolynomial> {
        let mut degree = None;
        for (e, c) in terms {
            if e.len() != n + 1 {
                return Err(Error::CoordinateCount { expected: n + 1, got: e.len() });
            }
            if c.is_zero() {
                continue;
            }
            let d: u32 = e.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::NotHomogeneous(format!(
                        "terms of degree {d0} and {d}: {} vs {}",
                        monomial_text(&terms.iter().find(|t| t.0.iter().sum::<u32>() == d0).unwrap().0),
                        monomial_text(e)
                    )))
                }
                _ => {}
            }
        }
        let mut f = HomogeneousPolynomial::zero(n, degree.unwrap_or(0) as usize);
        for (e, c) in terms {
            if c.is_zero() {
                continue;
            }
            let r = f.basis.rank(e);
            f.coeffs[r] = base.add(f.coeffs[r], *c);
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn degree(&self) -> usize {
        self.basis.d
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Nonzero terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Elem)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, &c)| (self.basis.monomial(i), c))
    }

    pub fn add(&self, other: &HomogeneousPolynomial, base: &Level) -> Result<HomogeneousPolynomial> {
        if self.n() != other.n() || self.degree() != other.degree() {
            return Err(Error::NotHomogeneous(format!(
                "sum of forms of degree {} and {}",
                self.degree(),
                other.degree()
            )));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| base.add(a, b)).collect();
        Ok(HomogeneousPolynomial { basis: self.basis.clone(), coeffs })
    }

    pub fn scale(&self, c: Elem, base: &Level) -> HomogeneousPolynomial {
        let coeffs = self.coeffs.iter().map(|&a| base.mul(a, c)).collect();
        HomogeneousPolynomial { basis: self.basis.clone(), coeffs }
    }

    pub fn mul(&self, other: &HomogeneousPolynomial, base: &Level) -> HomogeneousPolynomial {
        let n = self.n();
        let mut out = HomogeneousPolynomial::zero(n, self.degree() + other.degree());
        let mut e = vec![0u32; n + 1];
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                for i in 0..=n {
                    e[i] = ea[i] + eb[i];
                }
                let r = out.basis.rank(&e);
                out.coeffs[r] = base.add(out.coeffs[r], base.mul(ca, cb));
            }
        }
        out
    }

    /// Formal `∂f/∂x_i`; exponents divisible by `p` annihilate their term.
    pub fn partial(&self, i: usize, base: &Level) -> Result<HomogeneousPolynomial> {
        let n = self.n();
        if i > n {
            return Err(Error::IndexOutOfRange { index: i, vars: n + 1 });
        }
        if self.degree() == 0 {
            return Ok(HomogeneousPolynomial::zero(n, 0));
        }
        let mut out = HomogeneousPolynomial::zero(n, self.degree() - 1);
        let mut e = vec![0u32; n + 1];
        for (ea, c) in self.terms() {
            if ea[i] == 0 {
                continue;
            }
            let factor = base.from_int(ea[i] as i64);
            if factor.is_zero() {
                continue;
            }
            e.copy_from_slice(ea);
            e[i] -= 1;
            let r = out.basis.rank(&e);
            out.coeffs[r] = base.add(out.coeffs[r], base.mul(c, factor));
        }
        Ok(out)
    }

    /// Value at a point with coordinates in level `k`.
    pub fn evaluate(&self, tower: &FieldTower, k: usize, point: &[Elem]) -> Result<Elem> {
        if point.len() != self.n() + 1 {
            return Err(Error::CoordinateCount { expected: self.n() + 1, got: point.len() });
        }
        let level = tower.level(k)?;
        let powers = power_table(level, point, self.degree());
        let mut acc = Elem::ZERO;
        for (e, c) in self.terms() {
            let mut term = tower.embed(c, 1, k)?;
            for (v, &ev) in e.iter().enumerate() {
                if ev > 0 {
                    term = level.mul(term, powers[v][ev as usize]);
                }
            }
            acc = level.add(acc, term);
        }
        Ok(acc)
    }

    /// Substitutes `x_j = 1`. The result has variables `x_i`, `i ≠ j`, in
    /// their original order.
    pub fn dehomogenize(&self, j: usize, base: &Level) -> Result<AffinePolynomial> {
        let n = self.n();
        if j > n {
            return Err(Error::IndexOutOfRange { index: j, vars: n + 1 });
        }
        let terms: Vec<(Vec<u32>, Elem)> = self
            .terms()
            .map(|(e, c)| {
                let exps = e.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect();
                (exps, c)
            })
            .collect();
        AffinePolynomial::from_terms(n, terms, base)
    }

    /// `x_j(P)^{-d}·f(P)` for the smallest `j` with `x_j(P) ≠ 0`: the value of
    /// the untwisted restriction at the component through `P`. Independent of
    /// the projective representative of `P`.
    pub fn twist_restrict(&self, tower: &FieldTower, k: usize, point: &[Elem]) -> Result<Elem> {
        let level = tower.level(k)?;
        let xj = point.iter().copied().find(|c| !c.is_zero()).ok_or(Error::NoInvertibleCoordinate)?;
        let value = self.evaluate(tower, k, point)?;
        let scale = level.inv(level.pow(xj, self.degree() as u64));
        Ok(level.mul(value, scale))
    }

    /// Text form in the experiment-file syntax (coefficients outside `F_p`
    /// are shown as polynomials in the generator `t` of `F_q`).
    pub fn to_text(&self, base: &Level) -> String {
        let terms: Vec<String> = self
            .terms()
            .map(|(e, c)| {
                let m = monomial_text(e);
                match (c.0, m.as_str()) {
                    (1, _) => m,
                    (_, "1") => elem_text(base, c),
                    _ => format!("{}*{}", elem_text(base, c), m),
                }
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

pub(crate) fn power_table(level: &Level, point: &[Elem], d: usize) -> Vec<Vec<Elem>> {
    point
        .iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(d + 1);
            let mut cur = Elem::ONE;
            for _ in 0..=d {
                row.push(cur);
                cur = level.mul(cur, x);
            }
            row
        })
        .collect()
}

/// A sparse polynomial in `nvars` affine variables over `F_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePolynomial {
    nvars: usize,
    /// Sorted by exponent vector, no duplicates, no zero coefficients.
    terms: Vec<(Vec<u32>, Elem)>,
}

impl AffinePolynomial {
    pub fn from_terms(nvars: usize, terms: Vec<(Vec<u32>, Elem)>, base: &Level) -> Result<AffinePolynomial> {
        let mut acc: BTreeMap<Vec<u32>, Elem> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::CoordinateCount { expected: nvars, got: e.len() });
            }
            let slot = acc.entry(e).or_insert(Elem::ZERO);
            *slot = base.add(*slot, c);
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(AffinePolynomial { nvars, terms })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, Elem)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max()
    }

    pub fn add(&self, other: &AffinePolynomial, base: &Level) -> Result<AffinePolynomial> {
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        AffinePolynomial::from_terms(self.nvars, terms, base)
    }

    pub fn mul(&self, other: &AffinePolynomial, base: &Level) -> Result<AffinePolynomial> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                terms.push((e, base.mul(*ca, *cb)));
            }
        }
        AffinePolynomial::from_terms(self.nvars, terms, base)
    }

    pub fn partial(&self, i: usize, base: &Level) -> Result<AffinePolynomial> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange { index: i, vars: self.nvars });
        }
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let mut e = e.clone();
                let factor = base.from_int(e[i] as i64);
                e[i] -= 1;
                (e, base.mul(*c, factor))
            })
            .collect();
        AffinePolynomial::from_terms(self.nvars, terms, base)
    }

    pub fn evaluate(&self, tower: &FieldTower, k: usize, point: &[Elem]) -> Result<Elem> {
        if point.len() != self.nvars {
            return Err(Error::CoordinateCount { expected: self.nvars, got: point.len() });
        }
        let level = tower.level(k)?;
        let d = self.degree().unwrap_or(0) as usize;
        let powers = power_table(level, point, d);
        let mut acc = Elem::ZERO;
        for (e, c) in &self.terms {
            let mut term = tower.embed(*c, 1, k)?;
            for (v, &ev) in e.iter().enumerate() {
                if ev > 0 {
                    term = level.mul(term, powers[v][ev as usize]);
                }
            }
            acc = level.add(acc, term);
        }
        Ok(acc)
    }
}

/// A parse failure at a 1-based column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Terms of a parsed polynomial before homogeneity is checked; coefficients
/// are already reduced mod `p`.
pub type ParsedTerms = Vec<(Vec<u32>, u32)>;

/// Parses `2*x0^3*x1 + x2^4 - x1*x2` over `F_p` in variables `x0..x{nvars-1}`.
pub fn parse_polynomial(text: &str, nvars: usize, p: u32) -> std::result::Result<ParsedTerms, ParseError> {
    Parser { s: text.as_bytes(), pos: 0, nvars, p }.poly()
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    nvars: usize,
    p: u32,
}

impl Parser<'_> {
    fn err<T>(&self, at: usize, msg: impl Into<String>) -> std::result::Result<T, ParseError> {
        Err(ParseError { column: at + 1, message: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn number(&mut self) -> std::result::Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err(start, "expected a number");
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        match digits.parse::<u64>() {
            Ok(v) => Ok(v),
            Err(_) => self.err(start, format!("number `{digits}` is too large")),
        }
    }

    fn poly(&mut self) -> std::result::Result<ParsedTerms, ParseError> {
        let mut acc: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        let mut first = true;
        loop {
            let negative = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                None if first => return self.err(self.pos, "empty polynomial"),
                None => break,
                Some(c) if first => {
                    let _ = c;
                    false
                }
                Some(c) => return self.err(self.pos, format!("expected `+` or `-`, found `{}`", c as char)),
            };
            first = false;
            let (exps, coeff) = self.term()?;
            let p = self.p as u64;
            let c = if negative { (p - coeff % p) % p } else { coeff % p };
            let slot = acc.entry(exps).or_insert(0);
            *slot = (*slot + c) % p;
        }
        Ok(acc.into_iter().filter(|(_, c)| *c != 0).map(|(e, c)| (e, c as u32)).collect())
    }

    fn term(&mut self) -> std::result::Result<(Vec<u32>, u64), ParseError> {
        let mut exps = vec![0u32; self.nvars];
        let mut coeff = 1u64;
        loop {
            match self.peek() {
                Some(b'x') => {
                    let at = self.pos;
                    self.pos += 1;
                    if !self.s.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                        return self.err(at, "variable name must be x followed by an index");
                    }
                    let idx = self.number()? as usize;
                    if idx >= self.nvars {
                        return self.err(at, format!("unknown variable x{idx} (variables are x0..x{})", self.nvars - 1));
                    }
                    let mut e = 1u64;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        e = self.number()?;
                    }
                    exps[idx] += e as u32;
                }
                Some(c) if c.is_ascii_digit() => {
                    let v = self.number()? % self.p as u64;
                    coeff = coeff * v % self.p as u64;
                }
                Some(c) => {
                    let at = self.pos;
                    return self.err(at, format!("unexpected `{}`", c as char));
                }
                None => return self.err(self.pos, "expected a factor"),
            }
            match self.peek() {
                Some(b'*') => self.pos += 1,
                _ => break,
            }
        }
        Ok((exps, coeff))
    }
}

/// Parses and checks homogeneity in one step.
pub fn parse_form(text: &str, n: usize, base: &Level) -> std::result::Result<HomogeneousPolynomial, String> {
    let terms = parse_polynomial(text, n + 1, base.p()).map_err(|e| e.to_string())?;
    let terms: Vec<(Vec<u32>, Elem)> = terms.into_iter().map(|(e, c)| (e, Elem(c))).collect();
    HomogeneousPolynomial::from_terms(n, &terms, base).map_err(|e| e.to_string())
}

impl PartialOrd for HomogeneousPolynomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HomogeneousPolynomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.basis.n, self.basis.d, &self.coeffs).cmp(&(other.basis.n, other.basis.d, &other.coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form(t: &FieldTower, n: usize, s: &str) -> HomogeneousPolynomial {
        parse_form(s, n, t.base()).unwrap()
    }

    fn random_form(rng: &mut ChaCha8Rng, n: usize, d: usize, base: &Level) -> HomogeneousPolynomial {
        let basis = MonomialBasis::new(n, d);
        let coeffs = (0..basis.len()).map(|_| Elem(rng.gen_range(0..base.order()))).collect();
        HomogeneousPolynomial::from_coeffs(basis, coeffs).unwrap()
    }

    #[test]
    fn basis_sizes() {
        for n in 0..=4 {
            for d in 0..=10 {
                let b = MonomialBasis::new(n, d);
                assert_eq!(b.len() as u64, binomial((n + d) as u64, n as u64));
                for (i, m) in b.iter().enumerate() {
                    assert_eq!(b.rank(m), i);
                }
            }
        }
        let b = MonomialBasis::new(1, 2);
        assert_eq!(b.monomial(0), &[2, 0]);
        assert_eq!(b.monomial(1), &[1, 1]);
        assert_eq!(b.monomial(2), &[0, 2]);
    }

    #[test]
    fn dehomogenize_examples() {
        let t = FieldTower::new(2, 1, 3).unwrap();
        let base = t.base();
        let f = form(&t, 1, "x0^2 + x0*x1");
        let g = f.dehomogenize(0, base).unwrap();
        let expected =
            AffinePolynomial::from_terms(1, vec![(vec![0], Elem::ONE), (vec![1], Elem::ONE)], base).unwrap();
        assert_eq!(g, expected);
        let h = form(&t, 1, "x1^5").dehomogenize(0, base).unwrap();
        assert_eq!(h.terms(), &[(vec![5], Elem::ONE)]);
        assert!(matches!(f.dehomogenize(2, base), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn dehomogenize_agrees_on_chart() {
        let t = FieldTower::new(3, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_form(&mut rng, 3, 4, t.base());
        let lvl = t.level(2).unwrap();
        for j in 0..=3 {
            let g = f.dehomogenize(j, t.base()).unwrap();
            for _ in 0..20 {
                let mut pt: Vec<Elem> = (0..4).map(|_| Elem(rng.gen_range(0..lvl.order()))).collect();
                pt[j] = Elem::ONE;
                let affine: Vec<Elem> = pt.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect();
                assert_eq!(f.evaluate(&t, 2, &pt).unwrap(), g.evaluate(&t, 2, &affine).unwrap());
            }
        }
    }

    #[test]
    fn partial_examples() {
        let t = FieldTower::new(2, 1, 1).unwrap();
        let base = t.base();
        assert!(form(&t, 1, "x0^2").partial(0, base).unwrap().is_zero());
        assert_eq!(form(&t, 1, "x0*x1").partial(0, base).unwrap(), form(&t, 1, "x1"));
        assert!(matches!(form(&t, 1, "x0").partial(5, base), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn leibniz_rule() {
        let t = FieldTower::new(3, 2, 1).unwrap();
        let base = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = random_form(&mut rng, 2, 3, base);
            let g = random_form(&mut rng, 2, 4, base);
            for i in 0..=2 {
                let lhs = f.mul(&g, base).partial(i, base).unwrap();
                let rhs = f
                    .mul(&g.partial(i, base).unwrap(), base)
                    .add(&g.mul(&f.partial(i, base).unwrap(), base), base)
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
            // the same identity in the affine representation
            let fa = f.dehomogenize(0, base).unwrap();
            let ga = g.dehomogenize(0, base).unwrap();
            let lhs = fa.mul(&ga, base).unwrap().partial(1, base).unwrap();
            let rhs = fa
                .mul(&ga.partial(1, base).unwrap(), base)
                .unwrap()
                .add(&ga.mul(&fa.partial(1, base).unwrap(), base).unwrap(), base)
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn euler_relation() {
        for (p, a) in [(2u32, 1usize), (3, 1), (5, 1), (2, 2)] {
            let t = FieldTower::new(p, a, 1).unwrap();
            let base = t.base();
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            for d in 1..=6 {
                let f = random_form(&mut rng, 2, d, base);
                let mut sum = HomogeneousPolynomial::zero(2, d);
                for i in 0..=2 {
                    let xi = HomogeneousPolynomial::monomial(2, &[(i == 0) as u32, (i == 1) as u32, (i == 2) as u32], Elem::ONE)
                        .unwrap();
                    sum = sum.add(&xi.mul(&f.partial(i, base).unwrap(), base), base).unwrap();
                }
                assert_eq!(sum, f.scale(base.from_int(d as i64), base), "p={p} d={d}");
            }
        }
    }

    #[test]
    fn evaluation_examples() {
        let t = FieldTower::new(2, 1, 3).unwrap();
        let x0 = form(&t, 2, "x0");
        assert_eq!(x0.evaluate(&t, 1, &[Elem::ONE, Elem::ZERO, Elem::ZERO]).unwrap(), Elem::ONE);
        assert!(matches!(x0.evaluate(&t, 1, &[Elem::ONE]), Err(Error::CoordinateCount { .. })));
        assert!(x0.evaluate(&t, 9, &[Elem::ONE, Elem::ZERO, Elem::ZERO]).is_err());
    }

    #[test]
    fn evaluation_is_galois_equivariant_and_linear() {
        let t = FieldTower::new(2, 2, 3).unwrap();
        let base = t.base();
        let lvl = t.level(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = random_form(&mut rng, 2, 3, base);
            let g = random_form(&mut rng, 2, 3, base);
            let pt: Vec<Elem> = (0..3).map(|_| Elem(rng.gen_range(0..lvl.order()))).collect();
            let conj: Vec<Elem> = pt.iter().map(|&x| lvl.frobenius(x)).collect();
            let v = f.evaluate(&t, 3, &pt).unwrap();
            assert_eq!(f.evaluate(&t, 3, &conj).unwrap(), lvl.frobenius(v));
            let sum = f.add(&g, base).unwrap().evaluate(&t, 3, &pt).unwrap();
            assert_eq!(sum, lvl.add(v, g.evaluate(&t, 3, &pt).unwrap()));
        }
    }

    #[test]
    fn twist_restrict_examples() {
        let t = FieldTower::new(3, 1, 2).unwrap();
        let base = t.base();
        let lvl = t.level(2).unwrap();
        let f = form(&t, 2, "x0^3");
        let pt = [Elem::ONE, Elem(4), Elem(7)];
        assert_eq!(f.twist_restrict(&t, 2, &pt).unwrap(), Elem::ONE);
        // scaling invariance, exhaustive over λ ∈ F_9^×
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_form(&mut rng, 2, 4, base);
        let pt = [Elem::ZERO, Elem(5), Elem(2)];
        let v = g.twist_restrict(&t, 2, &pt).unwrap();
        for lam in lvl.elements().skip(1) {
            let scaled: Vec<Elem> = pt.iter().map(|&x| lvl.mul(x, lam)).collect();
            assert_eq!(g.twist_restrict(&t, 2, &scaled).unwrap(), v);
        }
        // a form vanishing at the point restricts to zero
        let h = form(&t, 2, "x0*x1");
        assert_eq!(h.twist_restrict(&t, 2, &pt).unwrap(), Elem::ZERO);
        assert_eq!(g.twist_restrict(&t, 2, &[Elem::ZERO; 3]), Err(Error::NoInvertibleCoordinate));
    }

    #[test]
    fn parser_accepts_and_rejects() {
        let terms = parse_polynomial("2*x0^3*x1 + x2^4", 3, 3).unwrap();
        assert_eq!(terms, vec![(vec![0, 0, 4], 1), (vec![3, 1, 0], 2)]);
        assert_eq!(parse_polynomial("x0 - x0", 2, 5).unwrap(), vec![]);
        assert_eq!(parse_polynomial("-x1", 2, 5).unwrap(), vec![(vec![0, 1], 4)]);
        assert_eq!(parse_polynomial("7", 2, 5).unwrap(), vec![(vec![0, 0], 2)]);
        let err = parse_polynomial("x0 + y1", 2, 2).unwrap_err();
        assert_eq!(err.column, 6);
        let err = parse_polynomial("x0 + x3", 2, 2).unwrap_err();
        assert!(err.message.contains("unknown variable x3"));
        assert!(parse_polynomial("", 2, 2).is_err());
        assert!(parse_polynomial("x0 x1", 2, 2).is_err());
        let t = FieldTower::new(2, 1, 1).unwrap();
        assert!(parse_form("x0 + x1^2", 1, t.base()).unwrap_err().contains("not homogeneous"));
    }

    #[test]
    fn text_roundtrip() {
        let t = FieldTower::new(5, 1, 1).unwrap();
        let f = form(&t, 2, "3*x0^2*x1 + x2^3 - x0*x1*x2");
        let g = form(&t, 2, &f.to_text(t.base()));
        assert_eq!(f, g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn twist_restrict_is_linear(seed in any::<u64>()) {
            let t = FieldTower::new(2, 2, 2).unwrap();
            let base = t.base();
            let lvl = t.level(2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_form(&mut rng, 2, 3, base);
            let g = random_form(&mut rng, 2, 3, base);
            let c = Elem(rng.gen_range(0..base.order()));
            let mut pt: Vec<Elem> = (0..3).map(|_| Elem(rng.gen_range(0..lvl.order()))).collect();
            pt[0] = Elem(1 + rng.gen_range(0..lvl.order() - 1));
            let lhs = f.scale(c, base).add(&g, base).unwrap().twist_restrict(&t, 2, &pt).unwrap();
            let ce = t.embed(c, 1, 2).unwrap();
            let rhs = lvl.add(lvl.mul(ce, f.twist_restrict(&t, 2, &pt).unwrap()), g.twist_restrict(&t, 2, &pt).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }
}
