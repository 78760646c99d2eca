//! Polynomials of individual degree at most d on F_q^m, lines, restriction and interpolation.

use num_rational::Ratio;

use crate::error::{guard, sat_pow, Error, Result};
use crate::field::{Fe, Field};

/// A point of F_q^m.
pub type Point = Vec<Fe>;

/// Largest `q^m` for exhaustive point enumeration.
pub const MAX_POINTS: u128 = 100_000;
/// Largest `|P(m,q,d)|` for exhaustive enumeration.
pub const MAX_POLYSPACE: u128 = 1_000_000;

/// All points of F_q^m in lexicographic order (first coordinate most significant).
pub fn points(field: &Field, m: usize) -> impl Iterator<Item = Point> + Clone {
    let q = field.q() as u64;
    let total = q.pow(m as u32);
    (0..total).map(move |mut n| {
        let mut v = vec![Fe(0); m];
        for j in (0..m).rev() {
            v[j] = Fe((n % q) as u32);
            n /= q;
        }
        v
    })
}

/// Position of `u` in [`points`] order.
pub fn point_index(field: &Field, u: &[Fe]) -> usize {
    u.iter().fold(0usize, |acc, x| acc * field.q() as usize + x.0 as usize)
}

/// Univariate polynomial with a fixed degree bound (`coeffs.len() - 1`), low degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniPoly {
    pub coeffs: Vec<Fe>,
}

impl UniPoly {
    pub fn zero(bound: usize) -> Self {
        UniPoly { coeffs: vec![Fe(0); bound + 1] }
    }

    pub fn constant(c: Fe, bound: usize) -> Self {
        let mut p = Self::zero(bound);
        p.coeffs[0] = c;
        p
    }

    pub fn bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Actual degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn eval(&self, field: &Field, t: Fe) -> Fe {
        self.coeffs.iter().rev().fold(Fe(0), |acc, &c| field.add(field.mul(acc, t), c))
    }

    /// Same polynomial with a different degree bound; fails if the degree does not fit.
    pub fn with_bound(&self, bound: usize) -> Result<Self> {
        if self.degree().is_some_and(|d| d > bound) {
            return Err(Error::Poly(format!("degree exceeds bound {bound}")));
        }
        let mut c = self.coeffs.clone();
        c.resize(bound + 1, Fe(0));
        Ok(UniPoly { coeffs: c })
    }

    fn mul_trunc(&self, other: &UniPoly, field: &Field, bound: usize) -> UniPoly {
        let mut out = vec![Fe(0); bound + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    debug_assert!(i + j <= bound);
                    out[i + j] = field.add(out[i + j], field.mul(a, b));
                }
            }
        }
        UniPoly { coeffs: out }
    }

    /// Enumerates all polynomials with degree bound `bound`.
    pub fn all(field: &Field, bound: usize) -> Result<Vec<UniPoly>> {
        let q = field.q() as u128;
        let count = sat_pow(q, bound as u128 + 1);
        guard("q^(bound+1)", count, MAX_POLYSPACE)?;
        Ok((0..count as u64)
            .map(|mut n| {
                let mut c = vec![Fe(0); bound + 1];
                for slot in c.iter_mut() {
                    *slot = Fe((n % q as u64) as u32);
                    n /= q as u64;
                }
                UniPoly { coeffs: c }
            })
            .collect())
    }
}

/// Polynomial on F_q^m with every exponent at most `d`, stored densely.
///
/// `coeffs[idx]` is the coefficient of `x_1^{e_1} .. x_m^{e_m}` where
/// `idx = sum_j e_j (d+1)^{m-1-j}` (row-major, first variable most significant).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiPoly {
    pub m: usize,
    pub d: usize,
    pub coeffs: Vec<Fe>,
}

impl MultiPoly {
    pub fn zero(m: usize, d: usize) -> Self {
        MultiPoly { m, d, coeffs: vec![Fe(0); (d + 1).pow(m as u32)] }
    }

    pub fn from_coeffs(m: usize, d: usize, coeffs: Vec<Fe>) -> Result<Self> {
        if coeffs.len() != (d + 1).pow(m as u32) {
            return Err(Error::Poly(format!(
                "expected {} coefficients, got {}",
                (d + 1).pow(m as u32),
                coeffs.len()
            )));
        }
        Ok(MultiPoly { m, d, coeffs })
    }

    /// Builds a polynomial from `(coefficient, exponents)` terms; rejects any exponent above `d`.
    pub fn from_terms(field: &Field, m: usize, d: usize, terms: &[(Fe, Vec<usize>)]) -> Result<Self> {
        let mut p = Self::zero(m, d);
        for (c, e) in terms {
            if e.len() != m {
                return Err(Error::Poly("exponent tuple has wrong length".into()));
            }
            if let Some(&bad) = e.iter().find(|&&x| x > d) {
                return Err(Error::Poly(format!("exponent {bad} exceeds individual degree {d}")));
            }
            let idx = p.index_of(e);
            p.coeffs[idx] = field.add(p.coeffs[idx], *c);
        }
        Ok(p)
    }

    pub fn index_of(&self, exps: &[usize]) -> usize {
        exps.iter().fold(0, |acc, &e| acc * (self.d + 1) + e)
    }

    pub fn exponents(&self, mut idx: usize) -> Vec<usize> {
        let mut e = vec![0; self.m];
        for j in (0..self.m).rev() {
            e[j] = idx % (self.d + 1);
            idx /= self.d + 1;
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn evaluate(&self, field: &Field, u: &[Fe]) -> Result<Fe> {
        if u.len() != self.m {
            return Err(Error::Dimension(format!("point has {} coordinates, polynomial {}", u.len(), self.m)));
        }
        Ok(self.eval(field, u))
    }

    /// Unchecked evaluation: Horner in the last variable, innermost.
    pub fn eval(&self, field: &Field, u: &[Fe]) -> Fe {
        // fold the last variable first, collapsing blocks of d+1 coefficients
        let mut layer = self.coeffs.clone();
        for j in (0..self.m).rev() {
            let x = u[j];
            layer = layer
                .chunks(self.d + 1)
                .map(|blk| blk.iter().rev().fold(Fe(0), |acc, &c| field.add(field.mul(acc, x), c)))
                .collect();
        }
        layer.first().copied().unwrap_or(Fe(0))
    }

    pub fn sub(&self, field: &Field, other: &MultiPoly) -> MultiPoly {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| field.sub(a, b)).collect();
        MultiPoly { m: self.m, d: self.d, coeffs }
    }

    /// Table of values at every point of F_q^m, in [`points`] order.
    pub fn value_table(&self, field: &Field) -> Vec<Fe> {
        points(field, self.m).map(|u| self.eval(field, &u)).collect()
    }

    /// Restriction to an axis-parallel line, a univariate polynomial of degree at most `d`.
    pub fn restrict_axis(&self, field: &Field, line: &AxisLine) -> UniPoly {
        let mut out = vec![Fe(0); self.d + 1];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.exponents(idx);
            let mut term = c;
            for (j, &ej) in e.iter().enumerate() {
                if j != line.dir {
                    term = field.mul(term, field.pow(line.base[j], ej as u64));
                }
            }
            let k = e[line.dir];
            out[k] = field.add(out[k], term);
        }
        UniPoly { coeffs: out }
    }

    /// Restriction to a diagonal line, a univariate polynomial with degree bound `m d`.
    /// The degenerate line restricts to the constant `g(base)`.
    pub fn restrict_diagonal(&self, field: &Field, line: &DiagonalLine) -> UniPoly {
        let bound = self.m * self.d;
        if line.is_degenerate() {
            return UniPoly::constant(self.eval(field, &line.base), bound);
        }
        // powers[j][e] = (base_j + t dir_j)^e
        let lin: Vec<UniPoly> = (0..self.m)
            .map(|j| UniPoly { coeffs: vec![line.base[j], line.dir[j]] })
            .collect();
        let powers: Vec<Vec<UniPoly>> = lin
            .iter()
            .map(|l| {
                let mut v = vec![UniPoly::constant(Fe(1), 0)];
                for e in 1..=self.d {
                    let next = v[e - 1].mul_trunc(l, field, e);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = vec![Fe(0); bound + 1];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.exponents(idx);
            let mut term = UniPoly::constant(c, 0);
            let mut deg = 0;
            for (j, &ej) in e.iter().enumerate() {
                deg += ej;
                term = term.mul_trunc(&powers[j][ej], field, deg);
            }
            for (k, &tc) in term.coeffs.iter().enumerate() {
                out[k] = field.add(out[k], tc);
            }
        }
        UniPoly { coeffs: out }
    }

    /// Fixes the last variable to `x`, giving a polynomial in `m - 1` variables.
    pub fn slice_last(&self, field: &Field, x: Fe) -> MultiPoly {
        let coeffs = self
            .coeffs
            .chunks(self.d + 1)
            .map(|blk| blk.iter().rev().fold(Fe(0), |acc, &c| field.add(field.mul(acc, x), c)))
            .collect();
        MultiPoly { m: self.m - 1, d: self.d, coeffs }
    }

    /// Appends `x` as a new last coordinate: the restriction `u -> g(u, x)` as a polynomial.
    /// Alias of [`MultiPoly::slice_last`] named after its role in the induction.
    pub fn append_x(&self, field: &Field, x: Fe) -> MultiPoly {
        self.slice_last(field, x)
    }
}

/// Axis-parallel line `{base + t e_dir}` with `base[dir] = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxisLine {
    /// Zero-based direction index.
    pub dir: usize,
    pub base: Point,
}

impl AxisLine {
    /// The line through `u` in direction `dir`.
    pub fn through(u: &[Fe], dir: usize) -> Self {
        let mut base = u.to_vec();
        base[dir] = Fe(0);
        AxisLine { dir, base }
    }

    /// Parameter of `u` on the line.
    pub fn param(&self, u: &[Fe]) -> Fe {
        u[self.dir]
    }

    pub fn point_at(&self, t: Fe) -> Point {
        let mut u = self.base.clone();
        u[self.dir] = t;
        u
    }

    pub fn contains(&self, u: &[Fe]) -> bool {
        u.iter().enumerate().all(|(j, &x)| j == self.dir || x == self.base[j])
    }
}

/// Line `{base + t dir}` in canonical form: the first nonzero coordinate of `dir` is 1
/// and `base` vanishes there. `dir = 0` is the single-point line `{base}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagonalLine {
    pub base: Point,
    pub dir: Point,
}

impl DiagonalLine {
    /// Canonical form of `{u + t v}`.
    pub fn through(field: &Field, u: &[Fe], v: &[Fe]) -> Self {
        match v.iter().position(|x| !x.is_zero()) {
            None => DiagonalLine { base: u.to_vec(), dir: v.to_vec() },
            Some(k) => {
                let s = field.inv(v[k]).expect("nonzero pivot");
                let dir: Point = v.iter().map(|&x| field.mul(s, x)).collect();
                let shift = u[k];
                let base = u.iter().zip(&dir).map(|(&a, &b)| field.sub(a, field.mul(shift, b))).collect();
                DiagonalLine { base, dir }
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.dir.iter().all(|x| x.is_zero())
    }

    /// Index of the first nonzero direction coordinate.
    pub fn pivot(&self) -> Option<usize> {
        self.dir.iter().position(|x| !x.is_zero())
    }

    /// Smallest `i` such that the last `m - i` coordinates of `dir` vanish.
    pub fn tail_index(&self) -> usize {
        self.dir.iter().rposition(|x| !x.is_zero()).map_or(0, |k| k + 1)
    }

    /// Parameter of a point of the line (0 on the degenerate line).
    pub fn param(&self, u: &[Fe]) -> Fe {
        self.pivot().map_or(Fe(0), |k| u[k])
    }

    pub fn point_at(&self, field: &Field, t: Fe) -> Point {
        self.base.iter().zip(&self.dir).map(|(&b, &v)| field.add(b, field.mul(t, v))).collect()
    }

    pub fn contains(&self, field: &Field, u: &[Fe]) -> bool {
        self.point_at(field, self.param(u)) == u
    }
}

/// Lagrange interpolation of `d + 1` parallel slices: the unique `h` in `P(m+1,q,d)`
/// with `h(., x_j) = g_j`. The new variable is the last one.
pub fn interpolate_parallel(field: &Field, slices: &[(Fe, MultiPoly)], d: usize) -> Result<MultiPoly> {
    if slices.len() != d + 1 {
        return Err(Error::Poly(format!("expected {} slices, got {}", d + 1, slices.len())));
    }
    let m = slices[0].1.m;
    if slices.iter().any(|(_, g)| g.m != m || g.d != d) {
        return Err(Error::Poly("slices must share (m, d)".into()));
    }
    for (i, (xi, _)) in slices.iter().enumerate() {
        if slices[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(Error::Poly("duplicate interpolation node".into()));
        }
    }
    // Lagrange basis coefficients
    let basis: Vec<UniPoly> = slices
        .iter()
        .enumerate()
        .map(|(j, (xj, _))| {
            let mut num = UniPoly::constant(Fe(1), 0);
            let mut den = Fe(1);
            for (k, (xk, _)) in slices.iter().enumerate() {
                if k != j {
                    let lin = UniPoly { coeffs: vec![field.neg(*xk), Fe(1)] };
                    let b = num.bound() + 1;
                    num = num.mul_trunc(&lin, field, b);
                    den = field.mul(den, field.sub(*xj, *xk));
                }
            }
            let s = field.inv(den).expect("distinct nodes");
            UniPoly { coeffs: num.coeffs.iter().map(|&c| field.mul(c, s)).collect() }
        })
        .collect();
    let inner = (d + 1).pow(m as u32);
    let mut coeffs = vec![Fe(0); inner * (d + 1)];
    for ((_, g), l) in slices.iter().zip(&basis) {
        for (idx, &c) in g.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (e, &lc) in l.coeffs.iter().enumerate() {
                let k = idx * (d + 1) + e;
                coeffs[k] = field.add(coeffs[k], field.mul(c, lc));
            }
        }
    }
    Ok(MultiPoly { m: m + 1, d, coeffs })
}

/// Exact fraction of points of F_q^m where `g` and `h` agree.
pub fn agreement_fraction(field: &Field, g: &MultiPoly, h: &MultiPoly) -> Result<Ratio<i64>> {
    if g.m != h.m || g.d != h.d {
        return Err(Error::Dimension("polynomials from different spaces".into()));
    }
    let total = sat_pow(field.q() as u128, g.m as u128);
    guard("q^m", total, MAX_POINTS)?;
    let diff = g.sub(field, h);
    let zeros = points(field, g.m).filter(|u| diff.eval(field, u).is_zero()).count();
    Ok(Ratio::new(zeros as i64, total as i64))
}

/// Indexable enumeration of `P(m,q,d)`: index `n` has base-q digits as coefficients.
#[derive(Clone, Debug)]
pub struct PolySpace {
    pub field: Field,
    pub m: usize,
    pub d: usize,
    len: usize,
}

impl PolySpace {
    pub fn new(field: &Field, m: usize, d: usize) -> Result<Self> {
        let ncoef = sat_pow(d as u128 + 1, m as u128);
        let len = sat_pow(field.q() as u128, ncoef);
        guard("|P(m,q,d)|", len, MAX_POLYSPACE)?;
        Ok(PolySpace { field: field.clone(), m, d, len: len as usize })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mut n: usize) -> MultiPoly {
        let q = self.field.q() as usize;
        let k = (self.d + 1).pow(self.m as u32);
        let mut coeffs = vec![Fe(0); k];
        for c in coeffs.iter_mut() {
            *c = Fe((n % q) as u32);
            n /= q;
        }
        MultiPoly { m: self.m, d: self.d, coeffs }
    }

    pub fn index(&self, g: &MultiPoly) -> usize {
        let q = self.field.q() as usize;
        g.coeffs.iter().rev().fold(0, |acc, c| acc * q + c.0 as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiPoly> + '_ {
        (0..self.len).map(move |n| self.get(n))
    }
}

/// Every member of `P(m,q,d)` exactly once.
pub fn enumerate_polyspace(field: &Field, m: usize, d: usize) -> Result<Vec<MultiPoly>> {
    let space = PolySpace::new(field, m, d)?;
    Ok(space.iter().collect())
}
