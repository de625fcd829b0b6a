//! The regular element `beta`, its norm-one torus `T`, the stabilizer
//! `H = T G(p^l'/p^r)`, coset representatives of `G/H`, and the characters
//! `theta` of `T` that extend `psi_beta`.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::Cyc;
use crate::repbuild::{psi_beta, Tau};
use crate::ringkit::{charpoly, residually_irreducible, solve_linear, PolyZq, PrimePower};
use crate::sympcore::{
    basis_element, generators, group_order, jmat, level_part, lie_basis, odometer, FiniteGroup, MatZq,
    SpElem,
};

const RANDOM_RETRIES: usize = 10_000;

/// A regular element of `sp_2n(Z/p^r)` with residually irreducible
/// characteristic polynomial.
#[derive(Clone, Debug)]
pub struct BetaDatum {
    n: usize,
    pp: PrimePower,
    beta: MatZq,
    chi: PolyZq,
    powers: Vec<MatZq>,
}

/// On-disk form of a [`BetaDatum`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BetaFile {
    pub n: usize,
    pub p: u64,
    pub r: u32,
    pub entries: Vec<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaMode {
    Canonical,
    Random(u64),
}

impl BetaDatum {
    /// Validates every invariant: `beta^tau = -beta`, residual irreducibility
    /// and freeness of `(Z/p^r)[beta]` on `1, beta, ..., beta^{2n-1}`.
    pub fn new(beta: MatZq) -> Result<Self> {
        let pp = beta.context();
        let dim = beta.dim();
        if !dim.is_multiple_of(2) || !beta.is_lie() {
            return Err(Error::InvalidBeta(format!("{beta:?} is not in sp_2n")));
        }
        let chi = charpoly(&beta);
        if !residually_irreducible(&chi) {
            return Err(Error::InvalidBeta(format!("charpoly of {beta:?} is reducible mod p")));
        }
        let mut powers = vec![MatZq::identity(dim, pp)];
        for k in 1..dim {
            powers.push(powers[k - 1].mul(&beta));
        }
        Ok(BetaDatum { n: dim / 2, pp, beta, chi, powers })
    }

    pub fn from_file(file: &BetaFile) -> Result<Self> {
        let pp = PrimePower::new(file.p, file.r)?;
        if file.entries.len() != 2 * file.n || file.entries.iter().any(|r| r.len() != 2 * file.n) {
            return Err(Error::InvalidBeta(format!("expected a {0}x{0} matrix", 2 * file.n)));
        }
        BetaDatum::new(MatZq::from_rows(&file.entries, pp))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: BetaFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> BetaFile {
        BetaFile {
            n: self.n,
            p: self.pp.p(),
            r: self.pp.r(),
            entries: self.beta.rows().into_iter().map(|r| r.into_iter().map(|x| x as i64).collect()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pp(&self) -> PrimePower {
        self.pp
    }

    pub fn beta(&self) -> &MatZq {
        &self.beta
    }

    pub fn chi(&self) -> &PolyZq {
        &self.chi
    }

    /// `(l, l')`; panics for `r = 1`, where no level data exists.
    pub fn levels(&self) -> (u32, u32) {
        self.pp.levels().expect("level data needs r >= 2")
    }

    pub fn powers(&self) -> &[MatZq] {
        &self.powers
    }

    /// Order of the cyclotomic field holding every character value:
    /// `p^r (p^n + 1) 2`.
    pub fn cyc_order(&self) -> u32 {
        cyc_order(self.n, self.pp)
    }

    /// `Ad(g) beta` as a new datum.
    pub fn conjugate(&self, g: &MatZq) -> Result<Self> {
        BetaDatum::new(crate::sympcore::ad(g, &self.beta))
    }

    /// The same element read modulo `p^k`.
    pub fn reduce(&self, k: u32) -> Result<Self> {
        BetaDatum::new(self.beta.reduce(k))
    }

    /// `sum_k a_k beta^k`.
    pub fn algebra_element(&self, coeffs: &[u64]) -> MatZq {
        self.powers
            .iter()
            .zip(coeffs)
            .fold(MatZq::zero(2 * self.n, self.pp), |acc, (b, &c)| acc.add(&b.scale(c)))
    }
}

pub fn cyc_order(n: usize, pp: PrimePower) -> u32 {
    let m = pp.q() * (pp.p().pow(n as u32) + 1) * 2;
    u32::try_from(m).expect("cyclotomic order fits in u32")
}

/// Whether `beta` has the normal form: the `A` block has ones on its
/// sub-diagonal and zeros below it, and the lower-left block is the matrix
/// with a single one in its top-right corner.
pub fn in_canonical_form(beta: &MatZq) -> bool {
    let n = beta.dim() / 2;
    for i in 0..n {
        for j in 0..n {
            if i == j + 1 && beta.get(i, j) != 1 {
                return false;
            }
            if i > j + 1 && beta.get(i, j) != 0 {
                return false;
            }
            let c = beta.get(n + i, j);
            let want = u64::from(i == 0 && j == n - 1);
            if c != want {
                return false;
            }
        }
    }
    true
}

/// The fixed part of the canonical template: sub-diagonal ones in `A`
/// (mirrored into `-^tau A`) and the corner of `C`.
fn template(n: usize, pp: PrimePower) -> MatZq {
    let mut t = basis_element(n, n, n - 1, pp);
    for k in 0..n - 1 {
        t = t.add(&basis_element(n, k + 1, k, pp));
    }
    t
}

pub fn find_beta(n: usize, pp: PrimePower, mode: BetaMode) -> Result<BetaDatum> {
    match mode {
        BetaMode::Canonical => {
            // free entries: the first row (the last column follows from the
            // Lie condition), searched lexicographically over 0..p
            let base = template(n, pp);
            let free: Vec<MatZq> = (0..2 * n).map(|j| basis_element(n, 0, j, pp)).collect();
            let mut found = None;
            let total = pp.p().pow(free.len() as u32);
            for idx in 0..total {
                let mut digits = vec![0u64; free.len()];
                let mut rest = idx;
                for d in digits.iter_mut().rev() {
                    *d = rest % pp.p();
                    rest /= pp.p();
                }
                let beta = free.iter().zip(&digits).fold(base.clone(), |acc, (b, &c)| acc.add(&b.scale(c)));
                if let Ok(datum) = BetaDatum::new(beta) {
                    found = Some(datum);
                    break;
                }
            }
            found.ok_or(Error::SearchExhausted(total as usize))
        }
        BetaMode::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let basis = lie_basis(n, pp);
            for _ in 0..RANDOM_RETRIES {
                let beta = basis
                    .iter()
                    .fold(MatZq::zero(2 * n, pp), |acc, b| acc.add(&b.scale(rng.gen_range(0..pp.q()))));
                if let Ok(datum) = BetaDatum::new(beta) {
                    return Ok(datum);
                }
            }
            Err(Error::SearchExhausted(RANDOM_RETRIES))
        }
    }
}

/// `<x, y> = x^t J y`.
fn pairing(x: &[u64], y: &[u64], j: &MatZq) -> u64 {
    let q = j.modulus();
    let d = x.len();
    let mut s = 0;
    for a in 0..d {
        for b in 0..d {
            let jab = j.get(a, b);
            if jab != 0 {
                s = (s + x[a] * jab % q * y[b]) % q;
            }
        }
    }
    s
}

fn apply(m: &MatZq, v: &[u64]) -> Vec<u64> {
    let q = m.modulus();
    (0..m.dim()).map(|i| (0..m.dim()).fold(0, |s, k| (s + m.get(i, k) * v[k]) % q)).collect()
}

/// `g` in `Sp_2n(Z/p^r)` with `Ad(g) beta` in canonical form.
///
/// The columns of `g^{-1}` are a symplectic basis `v, beta v, ..., beta^n v,
/// f_{n+1}, ..., f_{2n-1}`: a cyclic vector `v` is searched for the pairing
/// conditions, and the remaining vectors are solved for linearly.
pub fn canonicalize_beta(b: &BetaDatum) -> Result<MatZq> {
    let n = b.n;
    let pp = b.pp;
    let d = 2 * n;
    if in_canonical_form(&b.beta) {
        return Ok(MatZq::identity(d, pp));
    }
    let j = jmat(n, pp);
    let q = pp.q();
    let sign = if n % 2 == 1 { 1 } else { q - 1 };
    let mut result = None;
    odometer(d, q, |v| {
        if result.is_some() {
            return;
        }
        let mut krylov = vec![v.to_vec()];
        for k in 1..d {
            krylov.push(apply(&b.beta, &krylov[k - 1]));
        }
        for k in (1..d - 1).step_by(2) {
            if pairing(v, &krylov[k], &j) != 0 {
                return;
            }
        }
        if pairing(v, &krylov[d - 1], &j) * sign % q != 1 {
            return;
        }
        let mut cols: Vec<Option<Vec<u64>>> = vec![None; d];
        for k in 0..=n {
            cols[k] = Some(krylov[k].clone());
        }
        for idx in n + 1..d {
            let known: Vec<usize> = (0..d).filter(|&k| cols[k].is_some()).collect();
            let a: Vec<Vec<u64>> = known
                .iter()
                .map(|&k| {
                    let e = cols[k].as_ref().unwrap();
                    (0..d).map(|c| (0..d).fold(0, |s, r| (s + e[r] * j.get(r, c)) % q)).collect()
                })
                .collect();
            let rhs: Vec<u64> = known.iter().map(|&k| j.get(k, idx)).collect();
            match solve_linear(&a, &rhs, pp) {
                Some(x) => cols[idx] = Some(x),
                None => return,
            }
        }
        let p_mat = MatZq::from_fn(d, pp, |r, c| cols[c].as_ref().unwrap()[r] as i64);
        if !p_mat.is_symplectic() {
            return;
        }
        let g = p_mat.sp_inverse();
        if in_canonical_form(&crate::sympcore::ad(&g, &b.beta)) {
            result = Some(g);
        }
    });
    result.ok_or_else(|| Error::NotFound("no cyclic vector with the required pairings".into()))
}

/// Exhaustive search over a listed group; used for `n = 1` and as an oracle.
pub fn canonicalize_by_search(b: &BetaDatum, group: &FiniteGroup) -> Option<MatZq> {
    group.elems().iter().find(|g| in_canonical_form(&crate::sympcore::ad(g, &b.beta))).cloned()
}

/// The norm-one torus `T = {x in (Z/p^r)[beta] : x x^tau = 1}` with an
/// independent generating set.
#[derive(Debug)]
pub struct TorusGroup {
    group: FiniteGroup,
    gens: Vec<(MatZq, u64)>,
    exponents: HashMap<MatZq, Vec<u64>>,
}

impl TorusGroup {
    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn elems(&self) -> &[MatZq] {
        self.group.elems()
    }

    pub fn len(&self) -> usize {
        self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.is_empty()
    }

    /// Generators with their orders.
    pub fn gens(&self) -> &[(MatZq, u64)] {
        &self.gens
    }

    /// Exponents of `t` with respect to [`TorusGroup::gens`].
    pub fn exponents(&self, t: &MatZq) -> Option<&[u64]> {
        self.exponents.get(t).map(|v| v.as_slice())
    }

    /// `T cap G(p^a/p^r)`.
    pub fn level(&self, a: u32) -> FiniteGroup {
        level_part(&self.group, a)
    }
}

/// Closed-form `|T(Z/p^r)| = p^{nr} + p^{n(r-1)}`.
pub fn torus_order(n: usize, p: u64, r: u32) -> u128 {
    let p = p as u128;
    let n = n as u32;
    p.pow(n * r) + p.pow(n * (r - 1))
}

/// Scans `(Z/p^r)^{2n}` for norm-one algebra elements.
pub fn torus_elements(b: &BetaDatum, budget: u128) -> Result<FiniteGroup> {
    let d = 2 * b.n;
    let size = (b.pp.q() as u128).pow(d as u32);
    if size > budget {
        return Err(Error::BudgetExceeded { what: "torus scan".into(), size, budget });
    }
    let mut elems = Vec::new();
    odometer(d, b.pp.q(), |c| {
        let x = b.algebra_element(c);
        if x.mul(&x.involution()).is_identity() {
            elems.push(x);
        }
    });
    elems.sort();
    Ok(FiniteGroup::from_elems(elems))
}

fn element_order(x: &MatZq) -> u64 {
    let mut k = 1;
    let mut y = x.clone();
    while !y.is_identity() {
        y = y.mul(x);
        k += 1;
    }
    k
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Independent generators of a finite abelian group, Sylow subgroup by Sylow
/// subgroup: repeatedly take an element of maximal order meeting the span of
/// the previous choices trivially. The decomposition is certified by expanding
/// every product of generator powers.
pub fn abelian_decompose(group: &FiniteGroup) -> Result<(Vec<(MatZq, u64)>, HashMap<MatZq, Vec<u64>>)> {
    let orders: Vec<u64> = group.elems().iter().map(element_order).collect();
    let total = group.len() as u64;
    let mut gens: Vec<(MatZq, u64)> = Vec::new();
    for ell in prime_factors(total) {
        let sylow: Vec<usize> = (0..group.len()).filter(|&i| is_power_of(orders[i], ell)).collect();
        let id = group.get(0);
        let mut span: Vec<MatZq> = vec![MatZq::identity(id.dim(), id.context())];
        while span.len() < sylow.len() {
            let span_set: std::collections::HashSet<&MatZq> = span.iter().collect();
            let candidate = sylow
                .iter()
                .copied()
                .filter(|&i| {
                    let x = group.get(i);
                    let mut y = x.clone();
                    for _ in 1..orders[i] {
                        if span_set.contains(&y) {
                            return false;
                        }
                        y = y.mul(x);
                    }
                    true
                })
                .max_by_key(|&i| (orders[i], std::cmp::Reverse(i)))
                .ok_or_else(|| Error::NotFound("abelian decomposition stalled".into()))?;
            let x = group.get(candidate).clone();
            let ord = orders[candidate];
            let mut next = Vec::with_capacity(span.len() * ord as usize);
            let mut power = MatZq::identity(x.dim(), x.context());
            for _ in 0..ord {
                next.extend(span.iter().map(|s| s.mul(&power)));
                power = power.mul(&x);
            }
            span = next;
            gens.push((x, ord));
        }
    }
    // certify: every exponent vector gives a distinct element
    let mut exponents = HashMap::new();
    let mut stack = vec![(MatZq::identity(group.get(0).dim(), group.get(0).context()), Vec::new())];
    for (g, ord) in &gens {
        let mut next = Vec::new();
        for (x, e) in stack {
            let mut y = x;
            for k in 0..*ord {
                let mut e2: Vec<u64> = e.clone();
                e2.push(k);
                next.push((y.clone(), e2));
                y = y.mul(g);
            }
        }
        stack = next;
    }
    for (x, e) in stack {
        if !group.contains(&x) || exponents.insert(x, e).is_some() {
            return Err(Error::NotFound("generators are not independent".into()));
        }
    }
    if exponents.len() != group.len() {
        return Err(Error::NotFound("generators do not span".into()));
    }
    Ok((gens, exponents))
}

fn is_power_of(mut x: u64, ell: u64) -> bool {
    while x.is_multiple_of(ell) {
        x /= ell;
    }
    x == 1
}

pub fn build_torus(b: &BetaDatum, budget: u128) -> Result<TorusGroup> {
    let group = torus_elements(b, budget)?;
    let (gens, exponents) = abelian_decompose(&group)?;
    Ok(TorusGroup { group, gens, exponents })
}

/// `H = {g : Ad(g) beta = beta mod p^l'}`.
pub fn in_stabilizer(b: &BetaDatum, g: &MatZq) -> bool {
    let (_, lp) = b.levels();
    let diff = g.mul(&b.beta).sub(&b.beta.mul(g));
    diff.divisible_by(lp)
}

/// `|H| = |T(Z/p^l')| |G(Z/p^r)| / |G(Z/p^l')|`.
pub fn stabilizer_order(n: usize, p: u64, r: u32) -> u128 {
    let lp = r / 2;
    torus_order(n, p, lp) * group_order(n, p, r) / group_order(n, p, lp)
}

/// Elements of `H` listed from an enumerated group.
pub fn stabilizer_h(b: &BetaDatum, group: &FiniteGroup) -> FiniteGroup {
    group.filter(|g| in_stabilizer(b, g))
}

/// Representatives `x_i` of the left cosets `x_i H`, as the BFS orbit of
/// `beta mod p^l'` under left multiplication by the generators.
pub fn coset_reps(b: &BetaDatum, budget: u128) -> Result<Vec<MatZq>> {
    let (_, lp) = b.levels();
    let gens: Vec<MatZq> = generators(b.n, b.pp).into_iter().map(SpElem::into_mat).collect();
    let id = MatZq::identity(2 * b.n, b.pp);
    let key = |x: &MatZq| crate::sympcore::ad(x, &b.beta).reduce(lp);
    let mut seen = HashMap::new();
    seen.insert(key(&id), 0usize);
    let mut reps = vec![id];
    let mut head = 0;
    while head < reps.len() {
        let x = reps[head].clone();
        head += 1;
        for s in &gens {
            let y = s.mul(&x);
            let k = key(&y);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                e.insert(reps.len());
                reps.push(y);
                if reps.len() as u128 > budget {
                    return Err(Error::BudgetExceeded {
                        what: "coset orbit".into(),
                        size: reps.len() as u128,
                        budget,
                    });
                }
            }
        }
    }
    Ok(reps)
}

/// A character of `T`, given by the exponent `a_i` with `theta(g_i) = zeta_{d_i}^{a_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaChar {
    pub images: Vec<u64>,
    pub orders: Vec<u64>,
}

impl ThetaChar {
    pub fn eval(&self, torus: &TorusGroup, t: &MatZq, cyc_order: u32) -> Result<Cyc> {
        let e = torus.exponents(t).ok_or(Error::GNotInTorus)?;
        let mut acc = 0i64;
        for ((&a, &d), &k) in self.images.iter().zip(&self.orders).zip(e) {
            acc += (a * k % d * (cyc_order as u64 / d)) as i64;
        }
        Ok(Cyc::root(cyc_order, acc))
    }

    /// Pointwise product.
    pub fn mul(&self, o: &ThetaChar) -> ThetaChar {
        ThetaChar {
            images: self.images.iter().zip(&o.images).zip(&self.orders).map(|((a, b), d)| (a + b) % d).collect(),
            orders: self.orders.clone(),
        }
    }

    pub fn inverse(&self) -> ThetaChar {
        ThetaChar {
            images: self.images.iter().zip(&self.orders).map(|(a, d)| (d - a) % d).collect(),
            orders: self.orders.clone(),
        }
    }
}

/// All characters of `T`.
pub fn all_torus_characters(torus: &TorusGroup) -> Vec<ThetaChar> {
    let orders: Vec<u64> = torus.gens.iter().map(|(_, d)| *d).collect();
    let mut out = Vec::new();
    let mut images = vec![0u64; orders.len()];
    loop {
        out.push(ThetaChar { images: images.clone(), orders: orders.clone() });
        let mut c = 0;
        while c < orders.len() {
            images[c] += 1;
            if images[c] < orders[c] {
                break;
            }
            images[c] = 0;
            c += 1;
        }
        if c == orders.len() {
            return out;
        }
    }
}

/// The set `Theta`: characters of `T` equal to `psi_beta` on `T cap G(p^l/p^r)`.
pub fn theta_characters(b: &BetaDatum, torus: &TorusGroup, tau: Tau) -> Result<Vec<ThetaChar>> {
    let (l, _) = b.levels();
    let m = b.cyc_order();
    let sub = torus.level(l);
    let psi: Vec<Cyc> = sub.elems().iter().map(|h| psi_beta(b, h, tau)).collect::<Result<_>>()?;
    for (i, x) in sub.elems().iter().enumerate() {
        for (j, y) in sub.elems().iter().enumerate() {
            let k = sub.index_of(&x.mul(y)).ok_or_else(|| {
                Error::InconsistentRestriction("T cap G(p^l) is not closed".into())
            })?;
            if psi[k] != &psi[i] * &psi[j] {
                return Err(Error::InconsistentRestriction(format!(
                    "psi_beta is not multiplicative at {x:?}, {y:?}"
                )));
            }
        }
    }
    let mut out = Vec::new();
    for theta in all_torus_characters(torus) {
        let mut ok = true;
        for (h, v) in sub.elems().iter().zip(&psi) {
            if theta.eval(torus, h, m)? != *v {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(theta);
        }
    }
    Ok(out)
}
