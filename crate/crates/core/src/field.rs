//! Arithmetic in the finite field F_q with q = p^t.
//!
//! Elements are stored packed: the polynomial-basis coefficient vector
//! `(c_0, .., c_{t-1})` is the base-p integer `c_0 + c_1 p + .. + c_{t-1} p^{t-1}`.
//! Multiplication goes through discrete log tables built from a primitive
//! element, so every operation is a table lookup or a short digit loop.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_Q: u32 = 1 << 16;

/// Largest order for which an explicit modulus is checked by exhaustive factor search.
pub const MAX_IRREDUCIBILITY_CHECK: u32 = 10_000;

/// Built-in moduli `(p, t, [c_0, .., c_t])` for every prime power up to 64.
/// Conway polynomials, so runs never depend on a search order.
const MODULUS_TABLE: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 1, 1, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (5, 2, &[2, 4, 1]),
    (7, 2, &[3, 6, 1]),
];

/// An element of F_q in packed form. Only meaningful together with its [`Field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Characteristic, degree and modulus of a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldParams {
    pub p: u32,
    pub t: u32,
    /// Monic modulus, `c_0 .. c_t` with `c_t = 1`.
    pub modulus: Vec<u32>,
}

#[derive(Debug)]
struct Tables {
    params: FieldParams,
    q: u32,
    /// `exp[i] = g^i` for `i < q - 1`, `g` primitive.
    exp: Vec<u32>,
    /// `log[x]` for nonzero `x`.
    log: Vec<u32>,
    /// Row-major addition table, empty for large fields.
    add: Vec<u32>,
    neg: Vec<u32>,
    trace: Vec<u32>,
}

/// The field F_{p^t}. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Field {
    tab: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.tab.params == other.tab.params
    }
}

impl Eq for Field {}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u32;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Remainder of `a` modulo the monic polynomial `m` over F_p (coefficient lists, low first).
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (j, &c) in m.iter().enumerate() {
                let idx = shift + j;
                r[idx] = (r[idx] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Exhaustive irreducibility test: no monic factor of degree `1..=t/2`.
pub fn is_irreducible(p: u32, modulus: &[u32]) -> bool {
    let t = modulus.len() - 1;
    if t == 0 || modulus[t] != 1 {
        return false;
    }
    if t == 1 {
        return true;
    }
    for k in 1..=t / 2 {
        let count = (p as u64).pow(k as u32);
        for code in 0..count {
            let mut f = Vec::with_capacity(k + 1);
            let mut c = code;
            for _ in 0..k {
                f.push((c % p as u64) as u32);
                c /= p as u64;
            }
            f.push(1);
            if poly_rem(modulus, &f, p).iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// F_{p^t} with the built-in modulus (or the first irreducible one found by
    /// lexicographic search for orders beyond the table).
    pub fn new(p: u32, t: u32) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::Field(format!("{p} is not prime")));
        }
        if t == 0 {
            return Err(Error::Field("extension degree must be at least 1".into()));
        }
        let modulus = if t == 1 {
            vec![0, 1]
        } else if let Some((_, _, m)) = MODULUS_TABLE.iter().find(|(pp, tt, _)| *pp == p && *tt == t) {
            m.to_vec()
        } else {
            let q = (p as u64).checked_pow(t).filter(|&q| q <= MAX_Q as u64).ok_or_else(|| {
                Error::Field(format!("order {p}^{t} exceeds {MAX_Q}"))
            })?;
            let mut found = None;
            for code in 0..q {
                let mut m = Vec::with_capacity(t as usize + 1);
                let mut c = code;
                for _ in 0..t {
                    m.push((c % p as u64) as u32);
                    c /= p as u64;
                }
                m.push(1);
                if m[0] != 0 && is_irreducible(p, &m) {
                    found = Some(m);
                    break;
                }
            }
            found.ok_or_else(|| Error::Field("no irreducible modulus found".into()))?
        };
        Self::build(FieldParams { p, t, modulus })
    }

    /// F_q for a prime power `q`.
    pub fn of_order(q: u32) -> Result<Field> {
        for p in 2..=q {
            if q % p == 0 {
                let mut t = 0;
                let mut r = q;
                while r % p == 0 {
                    r /= p;
                    t += 1;
                }
                if r != 1 {
                    return Err(Error::Field(format!("{q} is not a prime power")));
                }
                return Field::new(p, t);
            }
        }
        Err(Error::Field(format!("{q} is not a prime power")))
    }

    /// F_{p^t} with a user-supplied modulus, checked for irreducibility.
    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::Field(format!("{p} is not prime")));
        }
        if modulus.len() < 2 {
            return Err(Error::Field("modulus must have degree at least 1".into()));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::Field("modulus coefficient out of range".into()));
        }
        let t = modulus.len() as u32 - 1;
        let q = (p as u64).checked_pow(t).unwrap_or(u64::MAX);
        if q > MAX_IRREDUCIBILITY_CHECK as u64 {
            return Err(Error::Field(format!(
                "explicit moduli are only checked for orders up to {MAX_IRREDUCIBILITY_CHECK}"
            )));
        }
        if !is_irreducible(p, &modulus) {
            return Err(Error::Field(format!("modulus {modulus:?} is not irreducible over F_{p}")));
        }
        Self::build(FieldParams { p, t, modulus })
    }

    fn build(params: FieldParams) -> Result<Field> {
        let (p, t) = (params.p, params.t);
        let q = (p as u64)
            .checked_pow(t)
            .filter(|&q| q <= MAX_Q as u64)
            .ok_or_else(|| Error::Field(format!("order {p}^{t} exceeds {MAX_Q}")))? as u32;
        let digits = |x: u32| -> Vec<u32> {
            let mut v = Vec::with_capacity(t as usize);
            let mut r = x;
            for _ in 0..t {
                v.push(r % p);
                r /= p;
            }
            v
        };
        let pack = |v: &[u32]| -> u32 { v.iter().rev().fold(0, |acc, &c| acc * p + c) };
        let slow_mul = |x: u32, y: u32| -> u32 {
            let (a, b) = (digits(x), digits(y));
            let mut prod = vec![0u32; 2 * t as usize - 1];
            for (i, &ai) in a.iter().enumerate() {
                for (j, &bj) in b.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + ai * bj) % p;
                }
            }
            let mut r = poly_rem(&prod, &params.modulus, p);
            r.resize(t as usize, 0);
            pack(&r)
        };
        let slow_add = |x: u32, y: u32| -> u32 {
            let (a, b) = (digits(x), digits(y));
            let s: Vec<u32> = a.iter().zip(&b).map(|(u, v)| (u + v) % p).collect();
            pack(&s)
        };

        // primitive element: order exactly q - 1
        let order = q - 1;
        let mut prime_factors = Vec::new();
        let mut r = order;
        let mut k = 2;
        while k * k <= r {
            if r % k == 0 {
                prime_factors.push(k);
                while r % k == 0 {
                    r /= k;
                }
            }
            k += 1;
        }
        if r > 1 {
            prime_factors.push(r);
        }
        let slow_pow = |x: u32, mut e: u32| -> u32 {
            let (mut acc, mut base) = (1u32, x);
            while e > 0 {
                if e & 1 == 1 {
                    acc = slow_mul(acc, base);
                }
                base = slow_mul(base, base);
                e >>= 1;
            }
            acc
        };
        let gen = (1..q)
            .find(|&g| q == 2 || prime_factors.iter().all(|&f| slow_pow(g, order / f) != 1))
            .ok_or_else(|| Error::Field("no primitive element".into()))?;
        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..order {
            exp.push(x);
            log[x as usize] = i;
            x = slow_mul(x, gen);
        }
        let add = if q <= 256 {
            let mut tab = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    tab[(a * q + b) as usize] = slow_add(a, b);
                }
            }
            tab
        } else {
            Vec::new()
        };
        let neg = (0..q)
            .map(|x| pack(&digits(x).iter().map(|&c| (p - c) % p).collect::<Vec<_>>()))
            .collect();
        let draft = Field { tab: Arc::new(Tables { params, q, exp, log, add, neg, trace: Vec::new() }) };
        let trace = (0..q).map(|x| draft.trace_slow(Fe(x)).0).collect();
        let mut tab = Arc::try_unwrap(draft.tab).expect("draft field is not shared");
        tab.trace = trace;
        Ok(Field { tab: Arc::new(tab) })
    }

    pub fn p(&self) -> u32 {
        self.tab.params.p
    }

    pub fn t(&self) -> u32 {
        self.tab.params.t
    }

    pub fn q(&self) -> u32 {
        self.tab.q
    }

    pub fn params(&self) -> &FieldParams {
        &self.tab.params
    }

    pub fn zero(&self) -> Fe {
        Fe(0)
    }

    pub fn one(&self) -> Fe {
        Fe(1)
    }

    /// The prime-subfield element `c mod p`.
    pub fn from_int(&self, c: i64) -> Fe {
        Fe(c.rem_euclid(self.p() as i64) as u32)
    }

    /// Element from its polynomial-basis coefficients (length `t`).
    pub fn elem(&self, coeffs: &[u32]) -> Result<Fe> {
        if coeffs.len() != self.t() as usize || coeffs.iter().any(|&c| c >= self.p()) {
            return Err(Error::Field(format!("bad coefficient vector {coeffs:?}")));
        }
        Ok(Fe(coeffs.iter().rev().fold(0, |acc, &c| acc * self.p() + c)))
    }

    /// Element from its packed index, checked against `q`.
    pub fn from_index(&self, x: u32) -> Result<Fe> {
        if x < self.q() {
            Ok(Fe(x))
        } else {
            Err(Error::Field(format!("element index {x} out of range for q = {}", self.q())))
        }
    }

    pub fn coeffs(&self, x: Fe) -> Vec<u32> {
        let p = self.p();
        let mut r = x.0;
        (0..self.t())
            .map(|_| {
                let c = r % p;
                r /= p;
                c
            })
            .collect()
    }

    /// All elements in packed order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> + Clone {
        (0..self.q()).map(Fe)
    }

    pub fn add(&self, x: Fe, y: Fe) -> Fe {
        debug_assert!(x.0 < self.q() && y.0 < self.q());
        if !self.tab.add.is_empty() {
            return Fe(self.tab.add[(x.0 * self.q() + y.0) as usize]);
        }
        let p = self.p();
        let (mut a, mut b, mut out, mut place) = (x.0, y.0, 0u32, 1u32);
        for _ in 0..self.t() {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        Fe(out)
    }

    pub fn neg(&self, x: Fe) -> Fe {
        Fe(self.tab.neg[x.0 as usize])
    }

    pub fn sub(&self, x: Fe, y: Fe) -> Fe {
        self.add(x, self.neg(y))
    }

    pub fn mul(&self, x: Fe, y: Fe) -> Fe {
        if x.0 == 0 || y.0 == 0 {
            return Fe(0);
        }
        let n = self.q() - 1;
        let s = (self.tab.log[x.0 as usize] + self.tab.log[y.0 as usize]) % n;
        Fe(self.tab.exp[s as usize])
    }

    pub fn inv(&self, x: Fe) -> Result<Fe> {
        if x.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let n = self.q() - 1;
        let l = self.tab.log[x.0 as usize];
        Ok(Fe(self.tab.exp[((n - l) % n) as usize]))
    }

    pub fn div(&self, x: Fe, y: Fe) -> Result<Fe> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn pow(&self, x: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe(1);
        }
        if x.0 == 0 {
            return Fe(0);
        }
        let n = (self.q() - 1) as u64;
        let l = self.tab.log[x.0 as usize] as u64;
        Fe(self.tab.exp[((l * (e % n)) % n) as usize])
    }

    fn trace_slow(&self, x: Fe) -> Fe {
        let mut acc = Fe(0);
        let mut y = x;
        for _ in 0..self.t() {
            acc = self.add(acc, y);
            y = self.pow(y, self.p() as u64);
        }
        acc
    }

    /// Field trace `x + x^p + .. + x^{p^{t-1}}`, an element of the prime subfield.
    pub fn trace(&self, x: Fe) -> Fe {
        Fe(self.tab.trace[x.0 as usize])
    }

    /// The trace as an integer in `[0, p)`.
    pub fn trace_value(&self, x: Fe) -> u32 {
        self.tab.trace[x.0 as usize]
    }

    /// The primitive p-th root of unity `e^{2 pi i / p}`.
    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / self.p() as f64)
    }

    /// `omega^{tr(x)}`.
    pub fn character(&self, x: Fe) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.trace_value(x) as f64 / self.p() as f64)
    }

    /// `E_x omega^{tr(x a)}`: 1 for `a = 0`, 0 otherwise.
    pub fn character_sum(&self, a: Fe) -> Complex64 {
        let s: Complex64 = self.elements().map(|x| self.character(self.mul(x, a))).sum();
        s / self.q() as f64
    }

    /// `E_u omega^{tr(u . v)}` over `u` in F_q^m, `m = v.len()`.
    pub fn vector_character_sum(&self, v: &[Fe]) -> Result<Complex64> {
        let m = v.len() as u32;
        let total = (self.q() as u128).checked_pow(m).unwrap_or(u128::MAX);
        crate::error::guard("q^m", total, 1_000_000)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for u in crate::poly::points(self, v.len()) {
            let dot = u.iter().zip(v).fold(Fe(0), |acc, (&a, &b)| self.add(acc, self.mul(a, b)));
            sum += self.character(dot);
        }
        Ok(sum / total as f64)
    }

    pub fn dot(&self, u: &[Fe], v: &[Fe]) -> Fe {
        u.iter().zip(v).fold(Fe(0), |acc, (&a, &b)| self.add(acc, self.mul(a, b)))
    }
}

/// Additive character data: the root of unity used by [`Field::character`].
#[derive(Clone, Copy, Debug)]
pub struct Character {
    pub p: u32,
    pub omega: Complex64,
}

impl Character {
    pub fn new(field: &Field) -> Self {
        Character { p: field.p(), omega: field.omega() }
    }

    /// `omega^{tr(x)}`.
    pub fn eval(&self, field: &Field, x: Fe) -> Complex64 {
        self.omega.powu(field.trace_value(x))
    }
}
