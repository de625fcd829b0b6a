//! `Sp_2n(Z/p^r)` and its Lie algebra.
//!
//! The symplectic form is `J = [[0, I], [-I, 0]]` where `I` is the
//! anti-diagonal identity, and `^tau a = I a^t I` is the transpose about the
//! second diagonal. Matrix indices are 0-based throughout.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ringkit::{mod_inv, PrimePower};

pub const DEFAULT_BUDGET: u128 = 20_000_000;

/// Square matrix over `Z/p^r`, row-major.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatZq {
    dim: usize,
    pp: PrimePower,
    data: Vec<u32>,
}

impl fmt::Debug for MatZq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.dim).map(|j| self.get(i, j).to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "] mod {}", self.pp.q())
    }
}

impl MatZq {
    pub fn zero(dim: usize, pp: PrimePower) -> Self {
        MatZq { dim, pp, data: vec![0; dim * dim] }
    }

    pub fn identity(dim: usize, pp: PrimePower) -> Self {
        let mut m = Self::zero(dim, pp);
        for i in 0..dim {
            m.data[i * dim + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>], pp: PrimePower) -> Self {
        let dim = rows.len();
        let mut m = Self::zero(dim, pp);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "matrix must be square");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, pp.reduce(x));
            }
        }
        m
    }

    pub fn from_fn(dim: usize, pp: PrimePower, f: impl Fn(usize, usize) -> i64) -> Self {
        let mut m = Self::zero(dim, pp);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, pp.reduce(f(i, j)));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn context(&self) -> PrimePower {
        self.pp
    }

    pub fn modulus(&self) -> u64 {
        self.pp.q()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.dim + j] as u64
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.dim + j] = (v % self.pp.q()) as u32;
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = u64> + '_ {
        self.data.iter().map(|&x| x as u64)
    }

    pub fn mul(&self, o: &MatZq) -> MatZq {
        debug_assert_eq!(self.dim, o.dim);
        let n = self.dim;
        let q = self.pp.q();
        let mut out = MatZq::zero(n, self.pp);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k] as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let idx = i * n + j;
                    out.data[idx] = ((out.data[idx] as u64 + a * o.data[k * n + j] as u64) % q) as u32;
                }
            }
        }
        out
    }

    pub fn add(&self, o: &MatZq) -> MatZq {
        let q = self.pp.q();
        let data = self.data.iter().zip(&o.data).map(|(&a, &b)| ((a as u64 + b as u64) % q) as u32).collect();
        MatZq { dim: self.dim, pp: self.pp, data }
    }

    pub fn neg(&self) -> MatZq {
        let q = self.pp.q();
        let data = self.data.iter().map(|&a| ((q - a as u64) % q) as u32).collect();
        MatZq { dim: self.dim, pp: self.pp, data }
    }

    pub fn sub(&self, o: &MatZq) -> MatZq {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: u64) -> MatZq {
        let q = self.pp.q();
        let c = c % q;
        let data = self.data.iter().map(|&a| (a as u64 * c % q) as u32).collect();
        MatZq { dim: self.dim, pp: self.pp, data }
    }

    pub fn transpose(&self) -> MatZq {
        let mut m = MatZq::zero(self.dim, self.pp);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(j, i, self.get(i, j));
            }
        }
        m
    }

    /// Transpose about the second diagonal: `^tau a = I a^t I`.
    pub fn anti_transpose(&self) -> MatZq {
        let n = self.dim;
        let mut m = MatZq::zero(n, self.pp);
        for i in 0..n {
            for j in 0..n {
                m.set(n - 1 - j, n - 1 - i, self.get(i, j));
            }
        }
        m
    }

    /// The involution `x^tau = J x^t J^{-1}` of the full matrix algebra.
    pub fn involution(&self) -> MatZq {
        let j = jmat_dim(self.dim, self.pp);
        j.mul(&self.transpose()).mul(&j.neg())
    }

    pub fn trace(&self) -> u64 {
        (0..self.dim).fold(0, |s, i| (s + self.get(i, i)) % self.pp.q())
    }

    pub fn pow(&self, mut k: u64) -> MatZq {
        let mut base = self.clone();
        let mut acc = MatZq::identity(self.dim, self.pp);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn bracket(&self, o: &MatZq) -> MatZq {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == MatZq::identity(self.dim, self.pp)
    }

    /// Whether every entry is divisible by `p^a`.
    pub fn divisible_by(&self, a: u32) -> bool {
        let m = self.pp.pow_p(a);
        self.entries().all(|x| x % m == 0)
    }

    /// Whether `self = 1 mod p^a`.
    pub fn in_level(&self, a: u32) -> bool {
        self.sub(&MatZq::identity(self.dim, self.pp)).divisible_by(a)
    }

    /// Entries divided by `p^a` and taken modulo `p^k`.
    pub fn divide_p(&self, a: u32, k: u32) -> Result<MatZq> {
        if !self.divisible_by(a) {
            return Err(Error::NotInLevel(a));
        }
        let d = self.pp.pow_p(a);
        let pk = self.pp.with_r(k)?;
        let mut m = MatZq::zero(self.dim, pk);
        for (i, x) in self.entries().enumerate() {
            m.data[i] = ((x / d) % pk.q()) as u32;
        }
        Ok(m)
    }

    /// Reduction to `Z/p^k`, `k <= r`.
    pub fn reduce(&self, k: u32) -> MatZq {
        let pk = self.pp.with_r(k).expect("valid reduction level");
        let q = pk.q();
        MatZq { dim: self.dim, pp: pk, data: self.data.iter().map(|&x| (x as u64 % q) as u32).collect() }
    }

    /// Lifts entries (as integers in `[0, p^k)`) into another modulus.
    pub fn lift(&self, pp: PrimePower) -> MatZq {
        let q = pp.q();
        MatZq { dim: self.dim, pp, data: self.data.iter().map(|&x| (x as u64 % q) as u32).collect() }
    }

    /// Multiplies by `p^a` and lifts into `pp` (entries of `self` read as integers).
    pub fn times_p_into(&self, a: u32, pp: PrimePower) -> MatZq {
        let f = pp.pow_p(a) % pp.q();
        self.lift(pp).scale(f)
    }

    /// Gauss-Jordan inverse with unit pivots.
    pub fn inverse(&self) -> Option<MatZq> {
        let n = self.dim;
        let q = self.pp.q();
        let p = self.pp.p();
        let mut a: Vec<Vec<u64>> = self.rows();
        let mut inv: Vec<Vec<u64>> = MatZq::identity(n, self.pp).rows();
        for c in 0..n {
            let pr = (c..n).find(|&i| !a[i][c].is_multiple_of(p))?;
            a.swap(c, pr);
            inv.swap(c, pr);
            let f = mod_inv(a[c][c], q)?;
            for j in 0..n {
                a[c][j] = a[c][j] * f % q;
                inv[c][j] = inv[c][j] * f % q;
            }
            for i in 0..n {
                if i != c && a[i][c] != 0 {
                    let g = a[i][c];
                    for j in 0..n {
                        a[i][j] = (a[i][j] + q - g * a[c][j] % q) % q;
                        inv[i][j] = (inv[i][j] + q - g * inv[c][j] % q) % q;
                    }
                }
            }
        }
        let mut m = MatZq::zero(n, self.pp);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, inv[i][j]);
            }
        }
        Some(m)
    }

    /// Inverse of a symplectic matrix: `J^{-1} g^t J`.
    pub fn sp_inverse(&self) -> MatZq {
        let j = jmat_dim(self.dim, self.pp);
        j.neg().mul(&self.transpose()).mul(&j)
    }

    pub fn is_symplectic(&self) -> bool {
        let j = jmat_dim(self.dim, self.pp);
        self.mul(&j).mul(&self.transpose()) == j
    }

    pub fn is_lie(&self) -> bool {
        let j = jmat_dim(self.dim, self.pp);
        self.mul(&j).add(&j.mul(&self.transpose())).is_zero()
    }

    /// `(1 + X/2)(1 - X/2)^{-1}`, symplectic for `X` in the Lie algebra.
    pub fn cayley(&self) -> Option<MatZq> {
        let half = self.pp.inv(2).ok()?;
        let id = MatZq::identity(self.dim, self.pp);
        let h = self.scale(half);
        id.sub(&h).inverse().map(|i| id.add(&h).mul(&i))
    }

    /// `1 + X + X^2/2`; the exponential when `X^3 = 0`.
    pub fn exp_nil3(&self) -> MatZq {
        let half = self.pp.inv(2).expect("p odd");
        let id = MatZq::identity(self.dim, self.pp);
        id.add(self).add(&self.mul(self).scale(half))
    }

    /// Sub-block `rows r0..r0+h`, `cols c0..c0+w` as a new square matrix (h == w).
    pub fn block(&self, r0: usize, c0: usize, size: usize) -> MatZq {
        let mut m = MatZq::zero(size, self.pp);
        for i in 0..size {
            for j in 0..size {
                m.set(i, j, self.get(r0 + i, c0 + j));
            }
        }
        m
    }

    pub fn entry_vec(&self) -> Vec<u64> {
        self.entries().collect()
    }
}

/// Group element: `g J g^t = J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpElem(MatZq);

impl SpElem {
    pub fn new(m: MatZq) -> Result<Self> {
        if !m.dim().is_multiple_of(2) || !m.is_symplectic() {
            return Err(Error::Config(format!("{m:?} is not symplectic")));
        }
        Ok(SpElem(m))
    }

    pub fn mat(&self) -> &MatZq {
        &self.0
    }

    pub fn into_mat(self) -> MatZq {
        self.0
    }
}

/// Lie algebra element: `X J + J X^t = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LieElem(MatZq);

impl LieElem {
    pub fn new(m: MatZq) -> Result<Self> {
        if !m.dim().is_multiple_of(2) || !m.is_lie() {
            return Err(Error::Config(format!("{m:?} is not in sp_2n")));
        }
        Ok(LieElem(m))
    }

    pub fn mat(&self) -> &MatZq {
        &self.0
    }
}

/// Congruence level `a`: the kernel `G(p^a/p^r)` (`a = 0` is the whole group).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CongLevel(pub u32);

fn jmat_dim(dim: usize, pp: PrimePower) -> MatZq {
    jmat(dim / 2, pp)
}

/// `J_n` with anti-diagonal identity blocks.
pub fn jmat(n: usize, pp: PrimePower) -> MatZq {
    let mut j = MatZq::zero(2 * n, pp);
    let q = pp.q();
    for i in 0..n {
        j.set(i, 2 * n - 1 - i, 1);
        j.set(n + i, n - 1 - i, q - 1);
    }
    j
}

/// `B(X, Y) = tr(XY)`.
pub fn trace_form(x: &MatZq, y: &MatZq) -> u64 {
    let n = x.dim();
    let q = x.modulus();
    let mut s = 0u64;
    for i in 0..n {
        for k in 0..n {
            s = (s + x.get(i, k) * y.get(k, i)) % q;
        }
    }
    s
}

/// `Ad(g) X = g X g^{-1}` for symplectic `g`.
pub fn ad(g: &MatZq, x: &MatZq) -> MatZq {
    g.mul(x).mul(&g.sp_inverse())
}

/// `|Sp_2n(Z/p^r)| = p^{n(2n+1)r - n(n+1)} prod_{k=1}^n (p^{2k} - 1)`.
pub fn group_order(n: usize, p: u64, r: u32) -> u128 {
    let n128 = n as u128;
    let e = n128 * (2 * n128 + 1) * r as u128 - n128 * (n128 + 1);
    let p = p as u128;
    let mut acc = p.pow(e as u32);
    for k in 1..=n as u32 {
        acc *= p.pow(2 * k) - 1;
    }
    acc
}

/// Sign of `J` at row `i`: `+1` on the top half, `-1` on the bottom half.
fn jsign(i: usize, n: usize) -> i64 {
    if i < n {
        1
    } else {
        -1
    }
}

/// A `Z/p^k`-basis of `sp_2n`: `E_ij - s E_{j'i'}` for paired positions and
/// `E_{i,i'}` on the second diagonal (`i' = 2n-1-i`). Deterministic order.
pub fn lie_basis(n: usize, pp: PrimePower) -> Vec<MatZq> {
    lie_basis_positions(n)
        .into_iter()
        .map(|(i, j)| basis_element(n, i, j, pp))
        .collect()
}

/// Representative position of each basis element, in basis order.
pub fn lie_basis_positions(n: usize) -> Vec<(usize, usize)> {
    let d = 2 * n;
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let partner = (d - 1 - j, d - 1 - i);
            if (i, j) <= partner {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn basis_element(n: usize, i: usize, j: usize, pp: PrimePower) -> MatZq {
    let d = 2 * n;
    let (pi, pj) = (d - 1 - j, d - 1 - i);
    let mut m = MatZq::zero(d, pp);
    m.set(i, j, 1);
    if (pi, pj) != (i, j) {
        // X^tau = -X forces X[j'][i'] = -s_{j'} s_{i'} X[i][j]
        let c = -jsign(pi, n) * jsign(pj, n);
        m.set(pi, pj, pp.reduce(c));
    }
    m
}

/// Coordinates of a Lie algebra element in [`lie_basis`].
pub fn lie_coords(x: &MatZq) -> Vec<u64> {
    lie_basis_positions(x.dim() / 2).into_iter().map(|(i, j)| x.get(i, j)).collect()
}

pub fn lie_from_coords(n: usize, coords: &[u64], pp: PrimePower) -> MatZq {
    let basis = lie_basis(n, pp);
    basis
        .iter()
        .zip(coords)
        .fold(MatZq::zero(2 * n, pp), |acc, (b, &c)| acc.add(&b.scale(c)))
}

pub fn lie_dim(n: usize) -> usize {
    n * (2 * n + 1)
}

/// Explicitly listed finite group with an index lookup.
#[derive(Debug)]
pub struct FiniteGroup {
    elems: Vec<MatZq>,
    index: HashMap<MatZq, usize>,
}

impl FiniteGroup {
    pub fn from_elems(elems: Vec<MatZq>) -> Self {
        let index = elems.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        FiniteGroup { elems, index }
    }

    pub fn elems(&self) -> &[MatZq] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn index_of(&self, g: &MatZq) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &MatZq) -> bool {
        self.index.contains_key(g)
    }

    pub fn get(&self, i: usize) -> &MatZq {
        &self.elems[i]
    }

    pub fn filter(&self, pred: impl Fn(&MatZq) -> bool) -> FiniteGroup {
        FiniteGroup::from_elems(self.elems.iter().filter(|g| pred(g)).cloned().collect())
    }
}

/// Closure of `gens` under multiplication, breadth first from the identity.
/// Neighbours are visited in generator order, generators sorted lexicographically.
pub fn bfs_closure(gens: &[MatZq], budget: u128, what: &str) -> Result<Vec<MatZq>> {
    let Some(first) = gens.first() else {
        return Err(Error::Config("empty generator list".into()));
    };
    let mut gens = gens.to_vec();
    gens.sort();
    gens.dedup();
    let id = MatZq::identity(first.dim(), first.context());
    let mut seen: HashMap<MatZq, ()> = HashMap::new();
    let mut order = vec![id.clone()];
    seen.insert(id, ());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let g = order[i].clone();
        for s in &gens {
            let h = s.mul(&g);
            if !seen.contains_key(&h) {
                seen.insert(h.clone(), ());
                order.push(h);
                if order.len() as u128 > budget {
                    return Err(Error::BudgetExceeded {
                        what: what.to_string(),
                        size: order.len() as u128,
                        budget,
                    });
                }
                queue.push_back(order.len() - 1);
            }
        }
    }
    Ok(order)
}

/// Root-group generators `1 + E` for the off-diagonal basis vectors of `sp_2n`.
pub fn generators(n: usize, pp: PrimePower) -> Vec<SpElem> {
    let id = MatZq::identity(2 * n, pp);
    let mut gens: Vec<MatZq> = lie_basis_positions(n)
        .into_iter()
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| id.add(&basis_element(n, i, j, pp)))
        .collect();
    gens.sort();
    gens.into_iter().map(SpElem).collect()
}

/// Full enumeration of `Sp_2n(Z/p^r)` in BFS order.
pub fn enumerate_group(n: usize, pp: PrimePower, budget: u128) -> Result<FiniteGroup> {
    let order = group_order(n, pp.p(), pp.r());
    if order > budget {
        return Err(Error::BudgetExceeded { what: format!("Sp_{}(Z/{})", 2 * n, pp.q()), size: order, budget });
    }
    let gens: Vec<MatZq> = generators(n, pp).into_iter().map(SpElem::into_mat).collect();
    let elems = bfs_closure(&gens, budget, "group enumeration")?;
    if elems.len() as u128 != order {
        return Err(Error::CertificationFailed { reached: elems.len() as u128, expected: order });
    }
    Ok(FiniteGroup::from_elems(elems))
}

/// Checks that [`generators`] produce a group of the formula order. Within budget
/// this is a full BFS. Otherwise the residue-field group is enumerated by BFS and
/// the `p`-th powers of generator images mod `p^2`, conjugated by that group, are
/// checked to span the first congruence layer `sp_2n(F_p)`.
pub fn certify_generators(n: usize, pp: PrimePower, budget: u128) -> Result<u128> {
    let expected = group_order(n, pp.p(), pp.r());
    if expected <= budget {
        return enumerate_group(n, pp, budget).map(|g| g.len() as u128);
    }
    let base = pp.with_r(1)?;
    let g1 = enumerate_group(n, base, budget)?;
    let pp2 = pp.with_r(2)?;
    let id = MatZq::identity(2 * n, pp2);
    let layer: Vec<MatZq> = generators(n, pp2)
        .into_iter()
        .map(|s| s.into_mat().pow(pp.p()).sub(&id).divide_p(1, 1))
        .collect::<Result<_>>()?;
    let dim = lie_dim(n);
    let mut span = RowSpan::new(dim, pp.p());
    'outer: for h in g1.elems() {
        for x in &layer {
            span.insert(lie_coords(&ad(h, x)));
            if span.rank() == dim {
                break 'outer;
            }
        }
    }
    let layer_size = (pp.p() as u128).pow(span.rank() as u32);
    let reached = g1.len() as u128 * layer_size.pow(pp.r() - 1);
    if reached != expected {
        return Err(Error::CertificationFailed { reached, expected });
    }
    Ok(expected)
}

/// Incrementally maintained row echelon basis over `F_p`.
struct RowSpan {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
    cols: usize,
}

impl RowSpan {
    fn new(cols: usize, p: u64) -> Self {
        RowSpan { p, rows: Vec::new(), cols }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn insert(&mut self, v: Vec<u64>) {
        let p = self.p;
        let mut v: Vec<u64> = v.into_iter().map(|x| x % p).collect();
        for (piv, row) in &self.rows {
            let f = v[*piv];
            if f != 0 {
                for k in 0..self.cols {
                    v[k] = (v[k] + p - f * row[k] % p) % p;
                }
            }
        }
        if let Some(piv) = v.iter().position(|&x| x != 0) {
            let inv = mod_inv(v[piv], p).expect("p prime");
            let v: Vec<u64> = v.iter().map(|x| x * inv % p).collect();
            for (_, row) in self.rows.iter_mut() {
                let f = row[piv];
                if f != 0 {
                    for k in 0..self.cols {
                        row[k] = (row[k] + p - f * v[k] % p) % p;
                    }
                }
            }
            self.rows.push((piv, v));
        }
    }
}

/// `G(p^a/p^r)`. For `2a >= r` this is `{1 + p^a X : X in sp(Z/p^{r-a})}`;
/// otherwise a BFS from Cayley transforms of `p^a` times the Lie basis.
pub fn congruence_elements(n: usize, pp: PrimePower, a: u32, budget: u128) -> Result<FiniteGroup> {
    let r = pp.r();
    if a > r {
        return Err(Error::NotInLevel(a));
    }
    if a == 0 {
        return enumerate_group(n, pp, budget);
    }
    let size = (pp.p() as u128).pow((r - a) * lie_dim(n) as u32);
    if size > budget {
        return Err(Error::BudgetExceeded { what: format!("G(p^{a}/p^{r})"), size, budget });
    }
    let id = MatZq::identity(2 * n, pp);
    if 2 * a >= r {
        if a == r {
            return Ok(FiniteGroup::from_elems(vec![id]));
        }
        let low = pp.with_r(r - a)?;
        let dim = lie_dim(n);
        let k = low.q();
        let mut elems = Vec::with_capacity(size as usize);
        let mut coords = vec![0u64; dim];
        loop {
            let x = lie_from_coords(n, &coords, low);
            elems.push(id.add(&x.times_p_into(a, pp)));
            // odometer
            let mut c = 0;
            while c < dim {
                coords[c] += 1;
                if coords[c] < k {
                    break;
                }
                coords[c] = 0;
                c += 1;
            }
            if c == dim {
                break;
            }
        }
        return Ok(FiniteGroup::from_elems(elems));
    }
    let pa = pp.pow_p(a);
    let gens: Vec<MatZq> = lie_basis(n, pp)
        .iter()
        .map(|b| b.scale(pa).cayley().expect("1 - p^a X/2 is invertible"))
        .collect();
    let elems = bfs_closure(&gens, budget, "congruence kernel")?;
    if elems.len() as u128 != size {
        return Err(Error::CertificationFailed { reached: elems.len() as u128, expected: size });
    }
    Ok(FiniteGroup::from_elems(elems))
}

/// Positions allowed in `u_i` (block sizes `i, n-i, n-i, i`).
fn u_i_allows(n: usize, i: usize, row: usize, col: usize) -> bool {
    let d = 2 * n;
    let block = |x: usize| {
        if x < i {
            0
        } else if x < n {
            1
        } else if x < d - i {
            2
        } else {
            3
        }
    };
    let (br, bc) = (block(row), block(col));
    match br {
        0 => bc >= 1 || false,
        1 | 2 => bc == 3,
        _ => false,
    }
}

/// Basis of `u_i` (`1 <= i <= n`) inside [`lie_basis`].
pub fn u_i_basis(n: usize, i: usize, pp: PrimePower) -> Vec<MatZq> {
    lie_basis(n, pp)
        .into_iter()
        .filter(|b| {
            (0..2 * n).all(|r| (0..2 * n).all(|c| b.get(r, c) == 0 || u_i_allows(n, i, r, c)))
        })
        .collect()
}

pub(crate) fn odometer(len: usize, base: u64, mut f: impl FnMut(&[u64])) {
    let mut v = vec![0u64; len];
    loop {
        f(&v);
        let mut c = 0;
        while c < len {
            v[c] += 1;
            if v[c] < base {
                break;
            }
            v[c] = 0;
            c += 1;
        }
        if c == len {
            return;
        }
    }
}

/// `U` (for `i = 0`, the Borel unipotent radical) or `U_i` (`1 <= i <= n`).
///
/// `U` is parametrized as `[[a, a c], [0, ^tau a^{-1}]]` with `a` upper
/// unitriangular and `^tau c = c`; `U_i` as `exp(X)` for `X` in `u_i`.
pub fn unipotent_elements(n: usize, pp: PrimePower, i: usize) -> Result<FiniteGroup> {
    if i > n {
        return Err(Error::Config(format!("unipotent index {i} > n = {n}")));
    }
    let q = pp.q();
    let mut elems = Vec::new();
    if i == 0 {
        let upper: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let sym: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).filter(move |&b| a + b < n).map(move |b| (a, b))).collect();
        odometer(upper.len() + sym.len(), q, |v| {
            let mut a = MatZq::identity(n, pp);
            for (k, &(x, y)) in upper.iter().enumerate() {
                a.set(x, y, v[k]);
            }
            let mut c = MatZq::zero(n, pp);
            for (k, &(x, y)) in sym.iter().enumerate() {
                let val = v[upper.len() + k];
                c.set(x, y, val);
                c.set(n - 1 - y, n - 1 - x, val);
            }
            let b = a.mul(&c);
            let d = a.inverse().expect("unitriangular").anti_transpose();
            let mut h = MatZq::zero(2 * n, pp);
            for r in 0..n {
                for s in 0..n {
                    h.set(r, s, a.get(r, s));
                    h.set(r, n + s, b.get(r, s));
                    h.set(n + r, n + s, d.get(r, s));
                }
            }
            elems.push(h);
        });
    } else {
        let basis = u_i_basis(n, i, pp);
        odometer(basis.len(), q, |v| {
            let x = basis
                .iter()
                .zip(v)
                .fold(MatZq::zero(2 * n, pp), |acc, (b, &c)| acc.add(&b.scale(c)));
            elems.push(x.exp_nil3());
        });
    }
    Ok(FiniteGroup::from_elems(elems))
}

/// `H(p^a/p^r)` for a listed subgroup: the elements congruent to 1 mod `p^a`.
pub fn level_part(group: &FiniteGroup, a: u32) -> FiniteGroup {
    group.filter(|g| g.in_level(a))
}

/// Shared handle used by the representation modules.
pub type GroupRef = Arc<FiniteGroup>;
