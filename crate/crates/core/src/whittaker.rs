//! Characters of the unipotent radical `U` and Whittaker Hom-dimensions of
//! `delta_{beta,theta}` at finite level.
//!
//! A parameter `u_k = unit * p^{-v_k}` stands for the element `unit / p^{v_k}`
//! of `F / O`. Over the local field the genericity argument works with torus
//! representatives `p^{m_i}` and an exponent `e`; at level `r` those choices
//! become the depth pattern `v_k`, and the condition on `e` and `m_i` becomes
//! the statement that only depth `v = r` can carry Whittaker vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{Cyc, Rat};
use crate::regular_orbit::{in_stabilizer, BetaDatum, ThetaChar};
use crate::repbuild::{psi_beta, DeltaContext, GroupChar, Tau};
use crate::ringkit::PrimePower;
use crate::sympcore::{level_part, unipotent_elements, FiniteGroup, MatZq};

/// `u = (u_1, ..., u_n)` with `u_k = units[k] * p^{-vals[k]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenericParam {
    pub units: Vec<u64>,
    pub vals: Vec<u32>,
}

impl GenericParam {
    pub fn new(units: Vec<u64>, vals: Vec<u32>) -> Self {
        assert_eq!(units.len(), vals.len());
        GenericParam { units, vals }
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    /// Well defined on `U(Z/p^r)` when every depth is at most `r`.
    pub fn well_defined(&self, r: u32) -> bool {
        self.vals.iter().all(|&v| v <= r)
    }

    /// All coefficients are units of positive depth.
    pub fn is_generic(&self, p: u64) -> bool {
        self.units.iter().all(|u| u % p != 0) && self.vals.iter().all(|&v| v > 0)
    }
}

/// The character `chi_u` of `U(Z/p^r)`.
#[derive(Clone, Debug)]
pub struct UChar {
    pub par: GenericParam,
    pp: PrimePower,
    tau: Tau,
    order: u32,
}

/// Whether `h` has the shape of an element of `U`.
pub fn in_u(h: &MatZq) -> bool {
    let d = h.dim();
    let n = d / 2;
    let lower_ok = (0..d).all(|i| (0..i).all(|j| h.get(i, j) == 0));
    let diag_ok = (0..d).all(|i| h.get(i, i) == 1);
    let block_ok = (n..d).all(|i| (0..n).all(|j| h.get(i, j) == 0));
    lower_ok && diag_ok && block_ok && h.is_symplectic()
}

impl UChar {
    pub fn new(par: GenericParam, pp: PrimePower, tau: Tau, order: u32) -> Result<Self> {
        if !par.well_defined(pp.r()) {
            return Err(Error::Config(format!("depths {:?} exceed r = {}", par.vals, pp.r())));
        }
        Ok(UChar { par, pp, tau, order })
    }

    /// `tau(sum_k u_k a_{k,k+1} + u_n b_{n,1})`.
    pub fn eval(&self, h: &MatZq) -> Result<Cyc> {
        if !in_u(h) {
            return Err(Error::NotInU);
        }
        let n = self.par.n();
        let q = self.pp.q();
        let r = self.pp.r();
        let mut e = 0u64;
        for k in 0..n {
            // a_{k,k+1} for k < n-1; the corner b_{n,1} sits at (n-1, n)
            let x = h.get(k, k + 1);
            let w = self.par.units[k] % q * self.pp.pow_p(r - self.par.vals[k]) % q;
            e = (e + w * x) % q;
        }
        Ok(self.tau.eval(e, r, self.pp.p(), self.order))
    }
}

/// `chi_u` for an explicit parameter.
pub fn chi_u(par: &GenericParam, pp: PrimePower, tau: Tau, order: u32, h: &MatZq) -> Result<Cyc> {
    UChar::new(par.clone(), pp, tau, order)?.eval(h)
}

/// `chi_r`: depth `r` everywhere, units `2, ..., 2, 1`.
pub fn chi_r(n: usize, pp: PrimePower, tau: Tau, order: u32) -> UChar {
    let mut units = vec![2; n];
    units[n - 1] = 1;
    UChar::new(GenericParam::new(units, vec![pp.r(); n]), pp, tau, order).expect("depth r is allowed")
}

/// `<Res_U chi_delta, chi_u>_U`; the carrier of `chi` must contain every element of `u`.
pub fn hom_dim(group: &FiniteGroup, chi: &GroupChar, u: &FiniteGroup, uchar: &UChar) -> Result<u64> {
    let terms: Vec<Cyc> = u
        .elems()
        .par_iter()
        .map(|h| {
            let idx = group.index_of(h).ok_or(Error::NotInU)?;
            Ok(&chi.values[idx] * &uchar.eval(h)?.conj())
        })
        .collect::<Result<_>>()?;
    let mut acc = Cyc::zero(chi.order);
    for t in &terms {
        acc += t;
    }
    nonneg_integer(&acc, u.len())
}

fn nonneg_integer(acc: &Cyc, size: usize) -> Result<u64> {
    let r = acc
        .to_rat()
        .map(|r| r / Rat::from_integer(size as i64))
        .ok_or_else(|| Error::NonIntegerResult(acc.to_string()))?;
    if r.is_integer() && *r.numer() >= 0 {
        Ok(*r.numer() as u64)
    } else {
        Err(Error::NonIntegerResult(r.to_string()))
    }
}

/// `U(p^a/p^r)`.
pub fn u_level(n: usize, pp: PrimePower, a: u32) -> Result<FiniteGroup> {
    Ok(level_part(&unipotent_elements(n, pp, 0)?, a))
}

/// Exhaustive comparison of `psi_beta` with `chi_r` on `U(p^l/p^r)`.
fn agrees_on_deep_u(b: &BetaDatum, tau: Tau, deep: &FiniteGroup) -> Result<bool> {
    let x = chi_r(b.n(), b.pp(), tau, b.cyc_order());
    for h in deep.elems() {
        if psi_beta(b, h, tau)? != x.eval(h)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Even `r`: `psi_beta = chi_r` on `U(p^l/p^r)`.
pub fn even_criterion(b: &BetaDatum, tau: Tau) -> Result<bool> {
    if !b.pp().is_even() {
        return Err(Error::UsageParity);
    }
    let (l, _) = b.levels();
    agrees_on_deep_u(b, tau, &u_level(b.n(), b.pp(), l)?)
}

/// Outcome of the odd-`r` criterion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OddCriterion {
    pub holds: bool,
    pub witness: Option<Vec<u64>>,
    /// How many `g` in `G(p^{l-1}/p^r)` were checked by the scan.
    pub scanned: usize,
    /// How many of them satisfied the condition.
    pub satisfied: usize,
}

/// Odd `r`: some `g in G(p^{l-1}/p^r)` with `psi_{Ad(g) beta} = chi_r` on `U(p^l/p^r)`.
///
/// `Ad(g) beta = beta mod p^{l-1}` for every such `g`, and `psi` only sees
/// `beta mod p^{l-1}` on `G(p^l)`. The linear condition on the `p^{l-1}`-layer
/// of `g` therefore has zero coefficients and the answer is decided at `g = 1`.
/// The optional scan over `kernel` confirms this element by element.
pub fn odd_criterion(b: &BetaDatum, tau: Tau, kernel: Option<&FiniteGroup>) -> Result<OddCriterion> {
    if b.pp().is_even() {
        return Err(Error::UsageParity);
    }
    let (l, _) = b.levels();
    let deep = u_level(b.n(), b.pp(), l)?;
    let at_one = agrees_on_deep_u(b, tau, &deep)?;
    let mut out = OddCriterion {
        holds: at_one,
        witness: at_one.then(|| MatZq::identity(2 * b.n(), b.pp()).entries().collect()),
        scanned: 0,
        satisfied: 0,
    };
    if let Some(k) = kernel {
        let hits: Vec<bool> = k
            .elems()
            .par_iter()
            .map(|g| b.conjugate(g).and_then(|bg| agrees_on_deep_u(&bg, tau, &deep)))
            .collect::<Result<_>>()?;
        out.scanned = hits.len();
        out.satisfied = hits.iter().filter(|&&x| x).count();
        if out.witness.is_none() {
            out.witness = hits.iter().position(|&x| x).map(|i| k.get(i).entries().collect());
            out.holds = out.witness.is_some();
        }
    }
    Ok(out)
}

/// One cell of the depth scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub unit: u64,
    pub depth: u32,
    pub hom_dim: u64,
}

/// `hom_dim(delta, chi_u)` for `n = 1`, `u = unit p^{-v}`, `v = 0..=r`, units `1, 2`.
pub fn valuation_scan(ctx: &DeltaContext, delta: &GroupChar) -> Result<Vec<ScanEntry>> {
    let pp = ctx.beta.pp();
    if ctx.beta.n() != 1 {
        return Err(Error::Config("valuation scan is implemented for n = 1".into()));
    }
    let u = unipotent_elements(1, pp, 0)?;
    let mut out = Vec::new();
    for unit in [1u64, 2] {
        for depth in 0..=pp.r() {
            let x = UChar::new(GenericParam::new(vec![unit], vec![depth]), pp, ctx.tau, delta.order)?;
            out.push(ScanEntry { unit, depth, hom_dim: hom_dim(&ctx.group, delta, &u, &x)? });
        }
    }
    Ok(out)
}

/// Sums of `hom_dim` over the characters `b -> zeta_{p^r}^{c b}` of `U` for
/// `n = 1`: `(over units c, over all c)`. The second sum equals `dim delta`.
pub fn whittaker_mass(ctx: &DeltaContext, delta: &GroupChar) -> Result<(u64, u64)> {
    let pp = ctx.beta.pp();
    if ctx.beta.n() != 1 {
        return Err(Error::Config("Whittaker mass is implemented for n = 1".into()));
    }
    let u = unipotent_elements(1, pp, 0)?;
    let (mut units, mut all) = (0, 0);
    for c in 0..pp.q() {
        let x = UChar::new(GenericParam::new(vec![c], vec![pp.r()]), pp, ctx.tau, delta.order)?;
        let d = hom_dim(&ctx.group, delta, &u, &x)?;
        all += d;
        if c % pp.p() != 0 {
            units += d;
        }
    }
    Ok((units, all))
}

/// Result of the double-coset recomputation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MackeyReport {
    pub direct: u64,
    pub mackey: u64,
    pub double_cosets: usize,
}

/// Recomputes `hom_dim(delta, chi_r)` as `sum over U\G/H of
/// <sigma^g, chi_r>` on `U cap gHg^{-1}`, using only `sigma` on `H`.
pub fn mackey_crosscheck(ctx: &DeltaContext, theta: &ThetaChar) -> Result<MackeyReport> {
    let b = &ctx.beta;
    let pp = b.pp();
    let n = b.n();
    let m = b.cyc_order();
    let u = unipotent_elements(n, pp, 0)?;
    let xr = chi_r(n, pp, ctx.tau, m);
    let delta = ctx.delta_character(theta)?;
    let direct = hom_dim(&ctx.group, &delta, &u, &xr)?;
    let sigma = ctx.sigma(theta)?;

    // U-orbits on the left cosets x_i H, keyed by Ad(x) beta mod p^l'
    let (_, lp) = b.levels();
    let key = |x: &MatZq| crate::sympcore::ad(x, b.beta()).reduce(lp);
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for x in &ctx.reps {
        if seen.contains(&key(x)) {
            continue;
        }
        for y in u.elems() {
            seen.insert(key(&y.mul(x)));
        }
        reps.push(x.clone());
    }

    let mut mackey = 0u64;
    for g in &reps {
        let gi = g.sp_inverse();
        let mut acc = Cyc::zero(m);
        let mut size = 0usize;
        for y in u.elems() {
            let c = gi.mul(y).mul(g);
            if in_stabilizer(b, &c) {
                size += 1;
                acc += &(&sigma.value(&c)? * &xr.eval(y)?.conj());
            }
        }
        mackey += nonneg_integer(&acc, size)?;
    }
    if mackey != direct {
        return Err(Error::MackeyMismatch { direct: direct as i64, mackey: mackey as i64 });
    }
    Ok(MackeyReport { direct, mackey, double_cosets: reps.len() })
}

/// JSON-ready genericity summary for one `theta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericityReport {
    pub beta: Vec<u64>,
    pub theta_index: usize,
    pub criterion: bool,
    pub hom_dim_chi_r: u64,
    pub scan: Vec<ScanEntry>,
    pub witness: Option<Vec<u64>>,
}
