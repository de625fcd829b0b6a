//! Exact scalars: rationals and elements of a cyclotomic field `Q(zeta_m)`.
//!
//! A [`Cyc`] is stored in the group algebra `Q[Z/m]` as a sparse list of
//! `(exponent, coefficient)` pairs. Arithmetic never reduces modulo the
//! cyclotomic polynomial; reduction happens only in [`Cyc::is_zero`],
//! equality and the export helpers. Every character value in this crate is a
//! sum of roots of unity of one fixed order, so a single modulus per run is
//! enough.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Reduced rational number with positive denominator.
pub type Rat = Ratio<i64>;

/// Coefficients of `Phi_m`, lowest degree first. Cached per `m`.
pub fn cyclotomic_poly(m: u32) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&m) {
        return hit.clone();
    }
    assert!(m >= 1, "cyclotomic order must be positive");
    // x^m - 1
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    for d in 1..m {
        if m.is_multiple_of(d) {
            let phi_d = cyclotomic_poly(d);
            num = div_exact_monic(&num, &phi_d);
        }
    }
    let out = Arc::new(num);
    cache.lock().unwrap().insert(m, out.clone());
    out
}

fn div_exact_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let qlen = num.len() - dn;
    let mut quot = vec![0i64; qlen];
    for k in (0..qlen).rev() {
        let c = rem[k + dn];
        quot[k] = c;
        if c != 0 {
            for (i, &d) in den.iter().enumerate() {
                rem[k + i] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0), "inexact cyclotomic division");
    quot
}

/// Element of `Q(zeta_order)` written as `sum c_j zeta^j`.
#[derive(Clone, Debug)]
pub struct Cyc {
    order: u32,
    terms: Vec<(u32, Rat)>,
}

impl Cyc {
    pub fn zero(order: u32) -> Self {
        assert!(order >= 1);
        Cyc { order, terms: Vec::new() }
    }

    pub fn one(order: u32) -> Self {
        Self::root(order, 0)
    }

    pub fn from_rat(order: u32, c: Rat) -> Self {
        let mut z = Self::zero(order);
        if !c.is_zero() {
            z.terms.push((0, c));
        }
        z
    }

    pub fn from_int(order: u32, c: i64) -> Self {
        Self::from_rat(order, Rat::from_integer(c))
    }

    /// `zeta_order^k`, exponent reduced modulo the order.
    pub fn root(order: u32, k: i64) -> Self {
        assert!(order >= 1);
        let e = k.rem_euclid(order as i64) as u32;
        Cyc { order, terms: vec![(e, Rat::one())] }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Raw group-algebra terms (not reduced modulo the cyclotomic polynomial).
    pub fn terms(&self) -> &[(u32, Rat)] {
        &self.terms
    }

    pub fn from_terms(order: u32, terms: impl IntoIterator<Item = (u32, Rat)>) -> Self {
        let mut v: Vec<(u32, Rat)> = terms.into_iter().map(|(e, c)| (e % order, c)).collect();
        normalize(&mut v);
        Cyc { order, terms: v }
    }

    /// Complex conjugation: `zeta^j -> zeta^{-j}`.
    pub fn conj(&self) -> Self {
        let m = self.order;
        let mut v: Vec<(u32, Rat)> =
            self.terms.iter().map(|&(e, c)| ((m - e) % m, c)).collect();
        normalize(&mut v);
        Cyc { order: m, terms: v }
    }

    pub fn scale(&self, c: Rat) -> Self {
        if c.is_zero() {
            return Cyc::zero(self.order);
        }
        Cyc {
            order: self.order,
            terms: self.terms.iter().map(|&(e, x)| (e, x * c)).collect(),
        }
    }

    /// Multiplies by `zeta^k`.
    pub fn rotate(&self, k: i64) -> Self {
        let m = self.order as i64;
        let mut v: Vec<(u32, Rat)> = self
            .terms
            .iter()
            .map(|&(e, c)| (((e as i64 + k).rem_euclid(m)) as u32, c))
            .collect();
        normalize(&mut v);
        Cyc { order: self.order, terms: v }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Cyc::one(self.order);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Coefficients of the canonical representative of degree `< phi(order)`.
    pub fn reduced(&self) -> Vec<Rat> {
        let m = self.order as usize;
        let phi = cyclotomic_poly(self.order);
        let deg = phi.len() - 1;
        let mut dense = vec![Rat::zero(); m.max(deg)];
        for &(e, c) in &self.terms {
            dense[e as usize] += c;
        }
        for k in (deg..dense.len()).rev() {
            let c = dense[k];
            if c.is_zero() {
                continue;
            }
            let shift = k - deg;
            for (i, &d) in phi.iter().enumerate() {
                if d != 0 {
                    dense[shift + i] -= c * Rat::from_integer(d);
                }
            }
        }
        dense.truncate(deg);
        dense
    }

    /// Canonical form: the reduced representative as a term list.
    pub fn canonical(&self) -> Cyc {
        let red = self.reduced();
        Cyc {
            order: self.order,
            terms: red
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (e as u32, c))
                .collect(),
        }
    }

    /// Exact zero test modulo the cyclotomic polynomial.
    pub fn is_zero(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        self.reduced().iter().all(|c| c.is_zero())
    }

    /// The value as a rational number, if it lies in `Q`.
    pub fn to_rat(&self) -> Option<Rat> {
        let red = self.reduced();
        if red.iter().skip(1).all(|c| c.is_zero()) {
            Some(red.first().copied().unwrap_or_else(Rat::zero))
        } else {
            None
        }
    }

    /// The value as an integer, if it lies in `Z`.
    pub fn to_integer(&self) -> Option<i64> {
        self.to_rat().filter(|r| r.is_integer()).map(|r| r.to_integer())
    }

    /// Re-expresses the value in `Q(zeta_new)`; `new` must be a multiple of the order.
    pub fn lift_to(&self, new: u32) -> Cyc {
        assert_eq!(new % self.order, 0, "target order must be a multiple");
        let f = new / self.order;
        Cyc { order: new, terms: self.terms.iter().map(|&(e, c)| (e * f, c)).collect() }
    }

    /// Floating evaluation at `exp(2 pi i / order)`, for sanity checks only.
    pub fn eval_f64(&self) -> (f64, f64) {
        let m = self.order as f64;
        self.terms.iter().fold((0.0, 0.0), |(re, im), &(e, c)| {
            let x = *c.numer() as f64 / *c.denom() as f64;
            let ang = 2.0 * std::f64::consts::PI * e as f64 / m;
            (re + x * ang.cos(), im + x * ang.sin())
        })
    }

    /// Export format: space separated `exp:coeff` pairs of the canonical form.
    pub fn to_exponent_list(&self) -> String {
        let c = self.canonical();
        if c.terms.is_empty() {
            return "0".to_string();
        }
        c.terms
            .iter()
            .map(|(e, x)| format!("{e}:{x}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_exponent_list(order: u32, s: &str) -> Option<Cyc> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Some(Cyc::zero(order));
        }
        let mut terms = Vec::new();
        for tok in s.split_whitespace() {
            let (e, c) = tok.split_once(':')?;
            let e: u32 = e.parse().ok()?;
            let c: Rat = c.parse().ok()?;
            terms.push((e, c));
        }
        Some(Cyc::from_terms(order, terms))
    }

    fn check_order(&self, other: &Cyc) {
        assert_eq!(self.order, other.order, "mixed cyclotomic orders");
    }
}

fn normalize(v: &mut Vec<(u32, Rat)>) {
    v.sort_unstable_by_key(|t| t.0);
    let mut out: Vec<(u32, Rat)> = Vec::with_capacity(v.len());
    for &(e, c) in v.iter() {
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 += c,
            _ => out.push((e, c)),
        }
    }
    out.retain(|t| !t.1.is_zero());
    *v = out;
}

impl PartialEq for Cyc {
    fn eq(&self, other: &Self) -> bool {
        self.check_order(other);
        (self - other).is_zero()
    }
}

impl Eq for Cyc {}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.canonical();
        if c.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = c
            .terms
            .iter()
            .map(|(e, x)| match e {
                0 => format!("{x}"),
                _ => format!("{x}*z{}^{e}", self.order),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'a> Add<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn add(self, rhs: &'a Cyc) -> Cyc {
        self.check_order(rhs);
        let mut v = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &rhs.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    v.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    v.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = a[i].1 + b[j].1;
                    if !c.is_zero() {
                        v.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        v.extend_from_slice(&a[i..]);
        v.extend_from_slice(&b[j..]);
        Cyc { order: self.order, terms: v }
    }
}

impl Add for Cyc {
    type Output = Cyc;
    fn add(self, rhs: Cyc) -> Cyc {
        &self + &rhs
    }
}

impl AddAssign<&Cyc> for Cyc {
    fn add_assign(&mut self, rhs: &Cyc) {
        *self = &*self + rhs;
    }
}

impl Neg for &Cyc {
    type Output = Cyc;
    fn neg(self) -> Cyc {
        Cyc { order: self.order, terms: self.terms.iter().map(|&(e, c)| (e, -c)).collect() }
    }
}

impl Neg for Cyc {
    type Output = Cyc;
    fn neg(self) -> Cyc {
        -&self
    }
}

impl<'a> Sub<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn sub(self, rhs: &'a Cyc) -> Cyc {
        self + &(-rhs)
    }
}

impl Sub for Cyc {
    type Output = Cyc;
    fn sub(self, rhs: Cyc) -> Cyc {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn mul(self, rhs: &'a Cyc) -> Cyc {
        self.check_order(rhs);
        if self.terms.is_empty() || rhs.terms.is_empty() {
            return Cyc::zero(self.order);
        }
        let m = self.order;
        let mut v = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for &(e1, c1) in &self.terms {
            for &(e2, c2) in &rhs.terms {
                let e = (e1 as u64 + e2 as u64) % m as u64;
                v.push((e as u32, c1 * c2));
            }
        }
        normalize(&mut v);
        Cyc { order: m, terms: v }
    }
}

impl Mul for Cyc {
    type Output = Cyc;
    fn mul(self, rhs: Cyc) -> Cyc {
        &self * &rhs
    }
}

/// `zeta_m^k` (free-function form).
pub fn cyc_root(m: u32, k: i64) -> Cyc {
    Cyc::root(m, k)
}

pub fn cyc_is_zero(x: &Cyc) -> bool {
    x.is_zero()
}

pub fn cyc_conj(x: &Cyc) -> Cyc {
    x.conj()
}

/// Exact integer `s`-th root of a non-negative rational, when it exists.
pub fn rat_nth_root(x: Rat, s: u32) -> Option<Rat> {
    if x.is_negative() {
        return None;
    }
    let r = |v: i64| -> Option<i64> {
        let guess = (v as f64).powf(1.0 / s as f64).round() as i64;
        (guess.saturating_sub(1)..=guess + 1)
            .find(|&g| g >= 0 && g.checked_pow(s) == Some(v))
    };
    Some(Rat::new(r(*x.numer())?, r(*x.denom())?))
}

/// Least common multiple helper used when choosing the run modulus.
pub fn lcm_u32(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

/// A ring map `Z[1/N][zeta_m] -> F_P` sending `zeta_m` to a primitive `m`-th
/// root of unity mod a prime `P = 1 mod m`. Used for exact sums of many
/// cyclotomic products whose result is known to be a small rational integer.
#[derive(Clone, Debug)]
pub struct ModEmbedding {
    modulus: u64,
    order: u32,
    powers: Vec<u64>,
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d: &u64| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
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

impl ModEmbedding {
    /// Smallest prime `P = 1 mod m` above `2^40`, with the least generator-derived root.
    pub fn new(order: u32) -> Self {
        let m = order as u64;
        let mut modulus = ((1u64 << 40) / m + 1) * m + 1;
        while !is_prime_u64(modulus) {
            modulus += m;
        }
        let qs = prime_factors(m);
        let zeta = (2..modulus)
            .map(|x| powmod(x, (modulus - 1) / m, modulus))
            .find(|&z| qs.iter().all(|&q| powmod(z, m / q, modulus) != 1))
            .expect("F_P^* is cyclic");
        let powers = (0..m).scan(1u64, |acc, _| {
            let cur = *acc;
            *acc = mulmod(*acc, zeta, modulus);
            Some(cur)
        });
        ModEmbedding { modulus, order, powers: powers.collect() }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rat(&self, c: Rat) -> u64 {
        let p = self.modulus as i128;
        let num = ((*c.numer() as i128 % p + p) % p) as u64;
        let den = ((*c.denom() as i128 % p + p) % p) as u64;
        mulmod(num, powmod(den, self.modulus - 2, self.modulus), self.modulus)
    }

    /// Image of `x`.
    pub fn embed(&self, x: &Cyc) -> u64 {
        assert_eq!(x.order, self.order, "embedding order mismatch");
        x.terms.iter().fold(0, |acc, &(e, c)| {
            (acc + mulmod(self.powers[e as usize], self.rat(c), self.modulus)) % self.modulus
        })
    }

    /// Image of the complex conjugate of `x`.
    pub fn embed_conj(&self, x: &Cyc) -> u64 {
        self.embed(&x.conj())
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mulmod(a, b, self.modulus)
    }

    /// Lifts a residue to the integer of least absolute value.
    pub fn centered(&self, a: u64) -> i64 {
        if a > self.modulus / 2 {
            -((self.modulus - a) as i64)
        } else {
            a as i64
        }
    }
}


#[cfg(test)]
mod embedding_tests {
    use super::*;

    #[test]
    fn embedding_is_a_ring_map() {
        let e = ModEmbedding::new(216);
        assert_eq!(e.modulus() % 216, 1);
        let a = Cyc::root(216, 5) + Cyc::from_int(216, 3);
        let b = Cyc::root(216, 100).scale(Rat::new(2, 3));
        assert_eq!(e.embed(&(&a * &b)), e.mul(e.embed(&a), e.embed(&b)));
        assert_eq!(e.embed(&(&a + &b)), (e.embed(&a) + e.embed(&b)) % e.modulus());
        // sum of all 216th roots of unity is zero
        let s = (0..216).fold(Cyc::zero(216), |acc, k| acc + Cyc::root(216, k));
        assert_eq!(e.embed(&s), 0);
        assert_eq!(e.centered(e.modulus() - 4), -4);
    }
}
