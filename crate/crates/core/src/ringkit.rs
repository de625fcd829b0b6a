//! Arithmetic in `Z/p^r`, polynomials over it, and small linear algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sympcore::MatZq;

/// Split `r = l + l'` with `0 < l' <= l` and `l` minimal.
pub fn split_level(r: u32) -> Result<(u32, u32)> {
    if r < 2 {
        return Err(Error::InvalidLevel(r));
    }
    let l = r.div_ceil(2);
    Ok((l, r - l))
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Odd prime power modulus `p^r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimePower {
    p: u64,
    r: u32,
}

impl PrimePower {
    /// `r = 1` is allowed for residue-field computations; level data needs `r >= 2`.
    pub fn new(p: u64, r: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Config(format!("p = {p} must be an odd prime")));
        }
        if r == 0 {
            return Err(Error::InvalidLevel(r));
        }
        let q = p.checked_pow(r).ok_or_else(|| Error::Config("p^r overflows".into()))?;
        if q > u32::MAX as u64 {
            return Err(Error::Config(format!("p^r = {q} exceeds the supported range")));
        }
        Ok(PrimePower { p, r })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// The modulus `p^r`.
    pub fn q(&self) -> u64 {
        self.p.pow(self.r)
    }

    pub fn pow_p(&self, k: u32) -> u64 {
        self.p.pow(k)
    }

    /// `(l, l')`.
    pub fn levels(&self) -> Result<(u32, u32)> {
        split_level(self.r)
    }

    pub fn is_even(&self) -> bool {
        self.r.is_multiple_of(2)
    }

    /// Same prime, exponent `k`.
    pub fn with_r(&self, k: u32) -> Result<PrimePower> {
        PrimePower::new(self.p, k)
    }

    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.q() as i64) as u64
    }

    pub fn zq(&self, x: i64) -> Zq {
        Zq { value: self.reduce(x), pp: *self }
    }

    /// p-adic valuation of `x` as an element of `Z/p^r` (`r` for zero).
    pub fn valuation(&self, x: u64) -> u32 {
        let x = x % self.q();
        if x == 0 {
            return self.r;
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        v
    }

    pub fn inv(&self, x: u64) -> Result<u64> {
        mod_inv(x % self.q(), self.q()).ok_or(Error::NotAUnit { value: x, modulus: self.q() })
    }
}

/// Inverse modulo `m` by the extended Euclidean algorithm.
pub fn mod_inv(x: u64, m: u64) -> Option<u64> {
    let (mut a, mut b) = (x as i128, m as i128);
    let (mut u, mut v) = (1i128, 0i128);
    while b != 0 {
        let t = a / b;
        a -= t * b;
        std::mem::swap(&mut a, &mut b);
        u -= t * v;
        std::mem::swap(&mut u, &mut v);
    }
    if a != 1 {
        return None;
    }
    Some(u.rem_euclid(m as i128) as u64)
}

/// Residue modulo `p^r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Zq {
    value: u64,
    pp: PrimePower,
}

impl Zq {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn context(&self) -> PrimePower {
        self.pp
    }

    pub fn is_unit(&self) -> bool {
        !self.value.is_multiple_of(self.pp.p)
    }

    pub fn add(self, o: Zq) -> Zq {
        Zq { value: (self.value + o.value) % self.pp.q(), pp: self.pp }
    }

    pub fn mul(self, o: Zq) -> Zq {
        Zq { value: self.value * o.value % self.pp.q(), pp: self.pp }
    }

    pub fn neg(self) -> Zq {
        Zq { value: (self.pp.q() - self.value) % self.pp.q(), pp: self.pp }
    }
}

pub fn zq_inv(x: Zq) -> Result<Zq> {
    Ok(Zq { value: x.pp.inv(x.value)?, pp: x.pp })
}

/// Polynomial over `Z/p^r`, coefficients lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyZq {
    coeffs: Vec<u64>,
    pp: PrimePower,
}

impl PolyZq {
    pub fn new(coeffs: Vec<u64>, pp: PrimePower) -> Self {
        let q = pp.q();
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| c % q).collect();
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        PolyZq { coeffs, pp }
    }

    pub fn from_signed(coeffs: &[i64], pp: PrimePower) -> Self {
        PolyZq::new(coeffs.iter().map(|&c| pp.reduce(c)).collect(), pp)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        *self.coeffs.last().unwrap() == 1
    }

    pub fn context(&self) -> PrimePower {
        self.pp
    }

    /// Evaluates at a square matrix (Horner), used for Cayley-Hamilton checks.
    pub fn eval_matrix(&self, m: &MatZq) -> MatZq {
        let mut acc = MatZq::zero(m.dim(), m.context());
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(m).add(&MatZq::identity(m.dim(), m.context()).scale(c));
        }
        acc
    }
}

// ---- polynomials over F_p (lowest degree first, trimmed) ----

fn trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = mod_inv(*b.last().unwrap(), p).expect("nonzero leading coefficient");
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let c = *r.last().unwrap() * lead_inv % p;
        let shift = r.len() - 1 - db;
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - c * bi % p) % p;
        }
        r.pop();
        if r.is_empty() {
            r.push(0);
        }
        trim(&mut r);
    }
    r
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    poly_rem(&out, f, p)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut x, mut y) = (a.to_vec(), b.to_vec());
    trim(&mut x);
    trim(&mut y);
    while !(y.len() == 1 && y[0] == 0) {
        let r = poly_rem(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

/// Whether `f mod p` is irreducible over `F_p` (Ben-Or: `gcd(f, x^{p^k} - x) = 1`
/// for all `k <= deg/2`).
pub fn residually_irreducible(f: &PolyZq) -> bool {
    let p = f.pp.p;
    let mut g: Vec<u64> = f.coeffs.iter().map(|c| c % p).collect();
    trim(&mut g);
    let d = g.len() - 1;
    if d == 0 || g[d] == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let mut xpk = poly_rem(&x, &g, p);
    for _ in 1..=d / 2 {
        // xpk <- xpk^p mod g
        let mut acc = vec![1u64];
        let mut base = xpk.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_mulmod(&acc, &base, &g, p);
            }
            base = poly_mulmod(&base, &base, &g, p);
            e >>= 1;
        }
        xpk = acc;
        let mut diff = xpk.clone();
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        trim(&mut diff);
        let h = poly_gcd(&g, &diff, p);
        if h.len() > 1 {
            return false;
        }
    }
    true
}

/// Characteristic polynomial `det(t - M)` by Berkowitz's division-free recursion.
pub fn charpoly(m: &MatZq) -> PolyZq {
    let n = m.dim();
    let q = m.modulus();
    let pp = m.context();
    let at = |i: usize, j: usize| m.get(i, j);
    // highest-degree-first coefficient vector of the trailing principal block
    let mut v: Vec<u64> = vec![1, (q - at(n - 1, n - 1)) % q];
    for k in (0..n - 1).rev() {
        let size = n - 1 - k;
        let a = at(k, k);
        // powers: col_j = sub^j * C
        let mut col: Vec<u64> = (0..size).map(|i| at(k + 1 + i, k)).collect();
        let mut t = Vec::with_capacity(size + 2);
        t.push(1u64);
        t.push((q - a) % q);
        for _ in 0..size {
            let rc = (0..size).fold(0u64, |s, i| (s + at(k, k + 1 + i) * col[i]) % q);
            t.push((q - rc) % q);
            let next: Vec<u64> = (0..size)
                .map(|i| (0..size).fold(0u64, |s, j| (s + at(k + 1 + i, k + 1 + j) * col[j]) % q))
                .collect();
            col = next;
        }
        let mut w = vec![0u64; size + 2];
        for (i, wi) in w.iter_mut().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                if i >= j {
                    *wi = (*wi + t[i - j] * vj) % q;
                }
            }
        }
        v = w;
    }
    v.reverse();
    PolyZq::new(v, pp)
}

/// Solves `a x = b` over `Z/p^r` by elimination with unit pivots. Returns one
/// solution (free variables set to zero), or `None` when a pivot row has no unit
/// entry or the system is inconsistent.
pub fn solve_linear(a: &[Vec<u64>], b: &[u64], pp: PrimePower) -> Option<Vec<u64>> {
    let q = pp.q();
    let p = pp.p();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r: Vec<u64> = row.iter().map(|x| x % q).collect();
            r.push(bi % q);
            r
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; cols];
    for i in 0..rows {
        let Some(j) = (0..cols).find(|&j| !used[j] && !m[i][j].is_multiple_of(p)) else {
            if m[i].iter().all(|&x| x == 0) {
                continue;
            }
            return None;
        };
        used[j] = true;
        let inv = mod_inv(m[i][j], q)?;
        for x in m[i].iter_mut() {
            *x = *x * inv % q;
        }
        for k in 0..rows {
            if k != i && m[k][j] != 0 {
                let f = m[k][j];
                for c in 0..=cols {
                    m[k][c] = (m[k][c] + q - f * m[i][c] % q) % q;
                }
            }
        }
        pivots.push((i, j));
    }
    let mut x = vec![0u64; cols];
    for (i, j) in pivots {
        x[j] = m[i][cols];
    }
    Some(x)
}

/// Basis of the null space of `a` over `F_p` (each row of `a` is an equation).
pub fn nullspace_mod_p(a: &[Vec<u64>], cols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(pr) = (row..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(row, pr);
        let inv = mod_inv(m[row][c], p).unwrap();
        for x in m[row].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..m.len() {
            if i != row && m[i][c] != 0 {
                let f = m[i][c];
                for k in 0..cols {
                    m[i][k] = (m[i][k] + p - f * m[row][k] % p) % p;
                }
            }
        }
        pivot_cols.push(c);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (i, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = (p - m[i][f]) % p;
            }
            v
        })
        .collect()
}

/// Determinant over `F_p`.
pub fn det_mod_p(a: &[Vec<u64>], p: u64) -> u64 {
    let n = a.len();
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let mut det = 1u64;
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| m[i][c] != 0) else { return 0 };
        if pr != c {
            m.swap(pr, c);
            det = (p - det) % p;
        }
        det = det * m[c][c] % p;
        let inv = mod_inv(m[c][c], p).unwrap();
        for i in c + 1..n {
            let f = m[i][c] * inv % p;
            for k in c..n {
                m[i][k] = (m[i][k] + p - f * m[c][k] % p) % p;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(p: u64, r: u32) -> PrimePower {
        PrimePower::new(p, r).unwrap()
    }

    #[test]
    fn split_level_examples() {
        assert_eq!(split_level(2).unwrap(), (1, 1));
        assert_eq!(split_level(3).unwrap(), (2, 1));
        assert_eq!(split_level(8).unwrap(), (4, 4));
        assert!(matches!(split_level(1), Err(Error::InvalidLevel(1))));
        for r in 2..=64 {
            let (l, lp) = split_level(r).unwrap();
            assert!(l >= lp && lp >= 1 && 2 * lp + 1 >= r && l + lp == r);
        }
    }

    #[test]
    fn inverse_examples() {
        let z9 = pp(3, 2);
        assert_eq!(zq_inv(z9.zq(2)).unwrap().value(), 5);
        assert_eq!(zq_inv(z9.zq(1)).unwrap().value(), 1);
        assert!(matches!(zq_inv(z9.zq(3)), Err(Error::NotAUnit { .. })));
        assert!(z9.zq(2).is_unit());
    }

    #[test]
    fn bad_prime_rejected() {
        assert!(PrimePower::new(2, 3).is_err());
        assert!(PrimePower::new(9, 1).is_err());
    }

    /// Brute-force oracle: a polynomial of degree <= 4 over F_p is reducible iff
    /// it has a root or (degree 4) a monic quadratic factor.
    fn reducible_by_search(f: &[u64], p: u64) -> bool {
        let d = f.len() - 1;
        let eval = |x: u64| f.iter().rev().fold(0u64, |s, &c| (s * x + c) % p);
        if (0..p).any(|x| eval(x) == 0) {
            return true;
        }
        if d == 4 {
            for a in 0..p {
                for b in 0..p {
                    let g = vec![b, a, 1];
                    if poly_rem(f, &g, p) == vec![0] {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn residual_irreducibility_examples() {
        let z9 = pp(3, 2);
        assert!(residually_irreducible(&PolyZq::from_signed(&[-2, 0, 1], z9)));
        assert!(!residually_irreducible(&PolyZq::from_signed(&[-1, 0, 1], z9)));
        // t^4 + t + 2 over F_3 against exhaustive factor search
        let f = PolyZq::from_signed(&[2, 1, 0, 0, 1], z9);
        let oracle = !reducible_by_search(&[2, 1, 0, 0, 1], 3);
        assert_eq!(residually_irreducible(&f), oracle);
    }

    #[test]
    fn irreducibility_matches_search_for_all_quartics_mod_3() {
        let z3 = pp(3, 1);
        for code in 0..81u64 {
            let c = [code % 3, code / 3 % 3, code / 9 % 3, code / 27 % 3, 1];
            let f = PolyZq::new(c.to_vec(), z3);
            assert_eq!(residually_irreducible(&f), !reducible_by_search(&c, 3), "{c:?}");
        }
    }

    #[test]
    fn charpoly_examples() {
        let z9 = pp(3, 2);
        let m = MatZq::from_rows(&[vec![0, 2], vec![1, 0]], z9);
        // cofactor oracle: det(t - M) = t^2 - 2
        assert_eq!(charpoly(&m), PolyZq::from_signed(&[-2, 0, 1], z9));
        let id = MatZq::identity(2, z9);
        assert_eq!(charpoly(&id), PolyZq::from_signed(&[1, -2, 1], z9));
        let zero = MatZq::zero(4, z9);
        assert_eq!(charpoly(&zero), PolyZq::from_signed(&[0, 0, 0, 0, 1], z9));
    }

    #[test]
    fn charpoly_3x3_against_cofactor_oracle() {
        let z = pp(5, 2);
        let rows = vec![vec![1, 2, 3], vec![4, 0, 6], vec![7, 8, 9]];
        let m = MatZq::from_rows(&rows, z);
        // trace 10, principal 2x2 minors (-8) + (-12) + (-48) = -68, det 60
        let expect = PolyZq::from_signed(&[-60, -68, -10, 1], z);
        assert_eq!(charpoly(&m), expect);
    }

    #[test]
    fn linear_solve_and_nullspace() {
        let z = pp(3, 2);
        let a = vec![vec![1, 3], vec![0, 2]];
        let x = solve_linear(&a, &[4, 1], z).unwrap();
        assert_eq!((x[0] + 3 * x[1]) % 9, 4);
        assert_eq!(2 * x[1] % 9, 1);
        let ns = nullspace_mod_p(&[vec![1, 1, 0]], 3, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert_eq!((v[0] + v[1]) % 3, 0);
        }
        assert_eq!(det_mod_p(&[vec![0, 1], vec![2, 0]], 3), 1);
    }
}
