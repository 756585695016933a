//! Finite field towers `F_p ⊆ F_q = F_{p^a} ⊆ F_{q^k}`.
//!
//! Each level `F_{q^k}` is realized directly as `F_p[t]/(m_k)` where `m_k` is
//! the lexicographically first monic irreducible polynomial of degree `a·k`
//! over `F_p`. Elements are packed integers: the coefficient of `t^i` is the
//! `i`-th base-`p` digit. Levels up to [`TABLE_LIMIT`] elements carry
//! exp/log/Zech tables; larger levels fall back to polynomial arithmetic.
//!
//! Embeddings `F_{q^{k1}} → F_{q^{k2}}` are fixed once at construction by
//! choosing roots of `m_{k1}` inside level `k2`, compatibly with the chosen
//! image of the `F_q` generator at every level.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default upper bound on the number of elements of any constructed level.
pub const DEFAULT_FIELD_BOUND: u64 = 1 << 22;

/// Levels with at most this many elements get log/exp/Zech tables.
pub const TABLE_LIMIT: u32 = 1 << 16;

const NO_LOG: u32 = u32::MAX;

/// A field element, packed as base-`p` digits of its `F_p`-coordinates.
///
/// An `Elem` carries no level; the [`Level`] that owns it interprets it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_pow(p: u32, e: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(p as u64)?;
    }
    Some(acc)
}

/// Dense univariate polynomials over `F_p`, coefficients low to high.
pub(crate) mod fp_poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn inv_mod(x: u32, p: u32) -> u32 {
        let mut base = x as u64 % p as u64;
        let mut e = p as u64 - 2;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        acc as u32
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let mut out: Vec<u32> = out.into_iter().map(|c| c as u32).collect();
        trim(&mut out);
        out
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let len = a.len().max(b.len());
        let mut out: Vec<u32> = (0..len)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    /// Remainder of `a` modulo a nonzero `m`.
    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let dm = m.len() - 1;
        let lead_inv = inv_mod(m[dm], p) as u64;
        while r.len() > dm {
            let top = r.len() - 1;
            let c = r[top] as u64 * lead_inv % p as u64;
            if c != 0 {
                for j in 0..=dm {
                    let idx = top - dm + j;
                    let sub = c * m[j] as u64 % p as u64;
                    r[idx] = ((r[idx] as u64 + p as u64 - sub) % p as u64) as u32;
                }
            }
            r.pop();
            trim(&mut r);
        }
        r
    }

    pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        rem(&mul(a, b, p), m, p)
    }

    /// Monic gcd.
    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        if let Some(&lead) = x.last() {
            let li = inv_mod(lead, p) as u64;
            for c in x.iter_mut() {
                *c = (*c as u64 * li % p as u64) as u32;
            }
        }
        x
    }

    /// Ben-Or test: `f` has no irreducible factor of degree `j ≤ deg/2`,
    /// checked through `gcd(f, x^{p^j} − x) = 1`.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let n = f.len() - 1;
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let x = vec![0, 1];
        let mut h = x.clone();
        for _ in 1..=n / 2 {
            // h <- h^p mod f
            let mut acc = vec![1u32];
            let mut base = h.clone();
            let mut e = p;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mulmod(&acc, &base, f, p);
                }
                base = mulmod(&base, &base, f, p);
                e >>= 1;
            }
            h = acc;
            let g = gcd(f, &sub(&h, &x, p), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

/// The lexicographically first monic irreducible polynomial of degree `n`
/// over `F_p`, coefficients low to high (leading 1 included).
///
/// Candidates `x^n + c_{n-1}x^{n-1} + … + c_0` are ordered by the integer
/// `Σ c_i p^i` read with `c_{n-1}` most significant.
pub fn find_irreducible(p: u32, n: usize, bound: u64) -> Result<Vec<u32>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if n == 0 {
        return Err(Error::Invalid("irreducible polynomial of degree 0".into()));
    }
    let count = checked_pow(p, n).filter(|&c| c <= bound).ok_or(Error::BoundExceeded {
        p,
        degree: n,
        bound,
    })?;
    for idx in 0..count {
        let mut coeffs = vec![0u32; n + 1];
        coeffs[n] = 1;
        let mut rest = idx;
        // c_0 is the least significant digit of idx.
        for c in coeffs.iter_mut().take(n) {
            *c = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        if fp_poly::is_irreducible(&coeffs, p) {
            return Ok(coeffs);
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

struct Tables {
    /// `exp[i] = γ^i` for `i < 2(Q-1)`.
    exp: Vec<u32>,
    log: Vec<u32>,
    /// `zech[i] = log(1 + γ^i)`, or `NO_LOG` when `1 + γ^i = 0`.
    zech: Vec<u32>,
}

/// One level `F_{q^k}` of a tower.
pub struct Level {
    k: usize,
    p: u32,
    degree: usize,
    order: u32,
    q: u64,
    modulus: Vec<u32>,
    primitive: Elem,
    tables: Option<Tables>,
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Level")
            .field("k", &self.k)
            .field("p", &self.p)
            .field("degree", &self.degree)
            .field("modulus", &self.modulus)
            .finish()
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl Level {
    fn new(k: usize, p: u32, a: usize, modulus: Vec<u32>) -> Level {
        let degree = modulus.len() - 1;
        let order = checked_pow(p, degree).expect("checked by caller") as u32;
        let q = checked_pow(p, a).expect("checked by caller");
        let mut level = Level {
            k,
            p,
            degree,
            order,
            q,
            modulus,
            primitive: Elem::ONE,
            tables: None,
        };
        level.primitive = level.find_primitive();
        if order <= TABLE_LIMIT {
            level.tables = Some(level.build_tables());
        }
        level
    }

    /// Extension degree over `F_q`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Degree over `F_p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// The defining polynomial over `F_p`, low to high.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// A generator of the multiplicative group.
    pub fn primitive(&self) -> Elem {
        self.primitive
    }

    /// The class of `t` in `F_p[t]/(m_k)`.
    pub fn generator(&self) -> Elem {
        if self.degree == 1 {
            // t ≡ -m_0
            Elem((self.p - self.modulus[0]) % self.p)
        } else {
            Elem(self.p)
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.order).map(Elem)
    }

    /// `F_p`-coordinates of `x`, length [`Level::degree`].
    pub fn coeffs(&self, x: Elem) -> Vec<u32> {
        let mut v = x.0;
        (0..self.degree)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Elem {
        let reduced = fp_poly::rem(
            &coeffs.iter().map(|c| c % self.p).collect::<Vec<_>>(),
            &self.modulus,
            self.p,
        );
        self.pack(&reduced)
    }

    fn pack(&self, digits: &[u32]) -> Elem {
        let mut v = 0u32;
        for &d in digits.iter().rev() {
            v = v * self.p + d;
        }
        Elem(v)
    }

    /// The image of an integer under `Z → F_p ⊆ F_{q^k}`.
    pub fn from_int(&self, c: i64) -> Elem {
        Elem(c.rem_euclid(self.p as i64) as u32)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.p == 2 {
            return Elem(a.0 ^ b.0);
        }
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        if let Some(t) = &self.tables {
            let n = self.order - 1;
            let la = t.log[a.0 as usize];
            let lb = t.log[b.0 as usize];
            let diff = if lb >= la { lb - la } else { lb + n - la };
            let z = t.zech[diff as usize];
            if z == NO_LOG {
                return Elem::ZERO;
            }
            return Elem(t.exp[(la + z) as usize]);
        }
        self.add_digits(a, b)
    }

    fn add_digits(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p;
        let (mut x, mut y) = (a.0, b.0);
        let (mut out, mut place) = (0u32, 1u32);
        for i in 0..self.degree {
            let s = (x % p + y % p) % p;
            out += s * place;
            x /= p;
            y /= p;
            if i + 1 < self.degree {
                place *= p;
            }
        }
        Elem(out)
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if self.p == 2 || a.0 == 0 {
            return a;
        }
        if let Some(t) = &self.tables {
            let n = self.order - 1;
            let half = n / 2;
            return Elem(t.exp[(t.log[a.0 as usize] + half) as usize]);
        }
        let p = self.p;
        let mut x = a.0;
        let (mut out, mut place) = (0u32, 1u32);
        for i in 0..self.degree {
            let d = x % p;
            out += ((p - d) % p) * place;
            x /= p;
            if i + 1 < self.degree {
                place *= p;
            }
        }
        Elem(out)
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.0 == 0 || b.0 == 0 {
            return Elem::ZERO;
        }
        if let Some(t) = &self.tables {
            let i = t.log[a.0 as usize] + t.log[b.0 as usize];
            return Elem(t.exp[i as usize]);
        }
        self.mul_poly(a, b)
    }

    fn mul_poly(&self, a: Elem, b: Elem) -> Elem {
        let prod = fp_poly::mulmod(&self.coeffs(a), &self.coeffs(b), &self.modulus, self.p);
        self.pack(&prod)
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    /// Panics on zero.
    pub fn inv(&self, a: Elem) -> Elem {
        assert!(!a.is_zero(), "inverse of zero");
        if let Some(t) = &self.tables {
            let n = self.order - 1;
            let l = t.log[a.0 as usize];
            return Elem(t.exp[((n - l) % n) as usize]);
        }
        self.pow(a, self.order as u64 - 2)
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.is_zero() {
            return Elem::ZERO;
        }
        if let Some(t) = &self.tables {
            let n = (self.order - 1) as u64;
            let l = t.log[a.0 as usize] as u64 * (e % n) % n;
            return Elem(t.exp[l as usize]);
        }
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_poly(acc, base);
            }
            base = self.mul_poly(base, base);
            e >>= 1;
        }
        acc
    }

    /// `x ↦ x^q`, the Frobenius relative to the base field `F_q`.
    pub fn frobenius(&self, a: Elem) -> Elem {
        self.pow(a, self.q)
    }

    fn find_primitive(&self) -> Elem {
        let n = self.order as u64 - 1;
        let factors = prime_factors(n);
        for cand in 1..self.order {
            let g = Elem(cand);
            if factors.iter().all(|&l| self.pow_slow(g, n / l) != Elem::ONE) {
                return g;
            }
        }
        unreachable!("the multiplicative group of a finite field is cyclic")
    }

    fn pow_slow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_poly(acc, base);
            }
            base = self.mul_poly(base, base);
            e >>= 1;
        }
        acc
    }

    fn build_tables(&self) -> Tables {
        let n = (self.order - 1) as usize;
        let mut exp = vec![0u32; 2 * n.max(1)];
        let mut log = vec![NO_LOG; self.order as usize];
        let mut cur = Elem::ONE;
        for i in 0..n {
            exp[i] = cur.0;
            log[cur.0 as usize] = i as u32;
            cur = self.mul_poly(cur, self.primitive);
        }
        for i in n..2 * n {
            exp[i] = exp[i - n];
        }
        let zech = (0..n)
            .map(|i| {
                let s = self.add_digits(Elem::ONE, Elem(exp[i]));
                if s.is_zero() {
                    NO_LOG
                } else {
                    log[s.0 as usize]
                }
            })
            .collect();
        Tables { exp, log, zech }
    }
}

/// An `F_p`-linear (in fact field) embedding of one level into another.
struct Embedding {
    /// Images of `1, t, t^2, …` of the source level.
    basis_images: Vec<Elem>,
    table: Option<Vec<Elem>>,
}

/// A tower `F_p ⊆ F_q ⊆ F_{q^k}` for `k = 1..=max_level`.
///
/// Immutable after construction; shareable across threads.
pub struct FieldTower {
    p: u32,
    a: usize,
    bound: u64,
    levels: Vec<Option<Level>>,
    embeddings: HashMap<(usize, usize), Embedding>,
    /// Image of the `F_q` generator `t_1` at each level.
    base_images: Vec<Elem>,
}

impl fmt::Debug for FieldTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldTower")
            .field("p", &self.p)
            .field("a", &self.a)
            .field("max_level", &self.max_level())
            .finish()
    }
}

impl FieldTower {
    pub fn new(p: u32, a: usize, max_level: usize) -> Result<FieldTower> {
        FieldTower::with_bound(p, a, max_level, DEFAULT_FIELD_BOUND)
    }

    /// Builds every level `k ≤ max_level` with `p^{a·k} ≤ bound`. Level 1 must
    /// fit; higher levels that do not fit are left unconstructed and report
    /// [`Error::BoundExceeded`] on access.
    pub fn with_bound(p: u32, a: usize, max_level: usize, bound: u64) -> Result<FieldTower> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if a == 0 {
            return Err(Error::Invalid("a must be positive".into()));
        }
        let bound = bound.min(u32::MAX as u64);
        let max_level = max_level.max(1);
        let mut levels: Vec<Option<Level>> = vec![None];
        for k in 1..=max_level {
            let fits = checked_pow(p, a * k).is_some_and(|o| o <= bound);
            if !fits {
                if k == 1 {
                    return Err(Error::BoundExceeded { p, degree: a, bound });
                }
                break;
            }
            let modulus = find_irreducible(p, a * k, bound)?;
            levels.push(Some(Level::new(k, p, a, modulus)));
        }
        let built = levels.len() - 1;
        let mut tower = FieldTower {
            p,
            a,
            bound,
            levels,
            embeddings: HashMap::new(),
            base_images: vec![Elem::ZERO; built + 1],
        };
        tower.base_images[1] = tower.levels[1].as_ref().unwrap().generator();
        for k2 in 2..=built {
            let base = tower.build_embedding(1, k2, None);
            tower.base_images[k2] = tower.apply_images(&base.basis_images, k2, tower.base_images[1], 1);
            tower.embeddings.insert((1, k2), base);
            for k1 in 2..k2 {
                if k2 % k1 == 0 {
                    let target = tower.base_images[k2];
                    let emb = tower.build_embedding(k1, k2, Some(target));
                    tower.embeddings.insert((k1, k2), emb);
                }
            }
        }
        Ok(tower)
    }

    fn lvl(&self, k: usize) -> &Level {
        self.levels[k].as_ref().expect("level constructed")
    }

    fn apply_images(&self, images: &[Elem], to: usize, x: Elem, from: usize) -> Elem {
        let dst = self.lvl(to);
        let src = self.lvl(from);
        let mut acc = Elem::ZERO;
        for (i, c) in src.coeffs(x).into_iter().enumerate() {
            if c != 0 {
                acc = dst.add(acc, dst.mul(dst.from_int(c as i64), images[i]));
            }
        }
        acc
    }

    /// Picks the smallest root `r` of `m_{k1}` in level `k2` (restricted to
    /// roots sending the `F_q` generator image at `k1` to `compat`).
    fn build_embedding(&self, k1: usize, k2: usize, compat: Option<Elem>) -> Embedding {
        let src = self.lvl(k1);
        let dst = self.lvl(k2);
        let sub_order = src.order() as u64;
        let exponent = (dst.order() as u64 - 1) / (sub_order - 1);
        let beta = dst.pow(dst.primitive(), exponent);
        let eval = |x: Elem| -> Elem {
            let mut acc = Elem::ZERO;
            for &c in src.modulus().iter().rev() {
                acc = dst.add(dst.mul(acc, x), dst.from_int(c as i64));
            }
            acc
        };
        let mut roots = Vec::new();
        if eval(Elem::ZERO).is_zero() {
            roots.push(Elem::ZERO);
        }
        let mut cur = Elem::ONE;
        for _ in 0..sub_order - 1 {
            if eval(cur).is_zero() {
                roots.push(cur);
            }
            cur = dst.mul(cur, beta);
        }
        roots.sort();
        let powers = |r: Elem| -> Vec<Elem> {
            let mut out = Vec::with_capacity(src.degree());
            let mut cur = Elem::ONE;
            for _ in 0..src.degree() {
                out.push(cur);
                cur = dst.mul(cur, r);
            }
            out
        };
        let basis_images = roots
            .into_iter()
            .map(powers)
            .find(|imgs| match compat {
                None => true,
                Some(target) => self.apply_images(imgs, k2, self.base_images[k1], k1) == target,
            })
            .expect("a compatible embedding exists");
        let table = (src.order() <= TABLE_LIMIT).then(|| {
            src.elements()
                .map(|x| self.apply_images(&basis_images, k2, x, k1))
                .collect()
        });
        Embedding { basis_images, table }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn a(&self) -> usize {
        self.a
    }

    /// `q = p^a`.
    pub fn q(&self) -> u64 {
        checked_pow(self.p, self.a).unwrap()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Largest constructed level.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> Result<&Level> {
        if k == 0 {
            return Err(Error::MissingLevel(0));
        }
        match self.levels.get(k) {
            Some(Some(l)) => Ok(l),
            _ => {
                let fits = checked_pow(self.p, self.a * k).is_some_and(|o| o <= self.bound);
                if fits {
                    Err(Error::MissingLevel(k))
                } else {
                    Err(Error::BoundExceeded { p: self.p, degree: self.a * k, bound: self.bound })
                }
            }
        }
    }

    /// The base field `F_q` (level 1).
    pub fn base(&self) -> &Level {
        self.lvl(1)
    }

    /// Image of the chosen `F_q` generator inside level `k`.
    pub fn generator_image(&self, k: usize) -> Result<Elem> {
        self.level(k)?;
        Ok(self.base_images[k])
    }

    pub fn embed(&self, x: Elem, from: usize, to: usize) -> Result<Elem> {
        if from == 0 || !to.is_multiple_of(from) {
            return Err(Error::IncompatibleLevels { from, to });
        }
        self.level(from)?;
        self.level(to)?;
        if from == to {
            return Ok(x);
        }
        let emb = &self.embeddings[&(from, to)];
        if let Some(t) = &emb.table {
            return Ok(t[x.0 as usize]);
        }
        Ok(self.apply_images(&emb.basis_images, to, x, from))
    }

    pub fn frobenius(&self, x: Elem, k: usize) -> Result<Elem> {
        Ok(self.level(k)?.frobenius(x))
    }

    /// Degree over `F_q` of the smallest subfield containing `x`.
    pub fn element_degree(&self, x: Elem, k: usize) -> Result<usize> {
        let level = self.level(k)?;
        let mut cur = level.frobenius(x);
        let mut i = 1;
        while cur != x {
            cur = level.frobenius(cur);
            i += 1;
        }
        Ok(i)
    }

    /// Finds the preimage of `y` (at level `from`) under the embedding of
    /// level `to` into level `from`, if `y` lies in that subfield.
    pub fn descend(&self, y: Elem, from: usize, to: usize) -> Result<Option<Elem>> {
        if to == 0 || !from.is_multiple_of(to) {
            return Err(Error::IncompatibleLevels { from: to, to: from });
        }
        let sub = self.level(to)?;
        for x in sub.elements() {
            if self.embed(x, to, from)? == y {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }
}
