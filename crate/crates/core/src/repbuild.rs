//! Characters `psi_beta`, `sigma_{beta,theta}` and `delta_{beta,theta}`, and
//! the finite-level checks run on them.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{Cyc, ModEmbedding, Rat};
use crate::heiswel::{HeisOp, OddModel, RhoChar, WeilLift};
use crate::regular_orbit::{
    build_torus, coset_reps, in_stabilizer, stabilizer_h, theta_characters, torus_order, BetaDatum, ThetaChar,
    TorusGroup,
};
use crate::ringkit::split_level;
use crate::sympcore::{enumerate_group, group_order, level_part, trace_form, FiniteGroup, MatZq};

/// The additive character `tau(p^{-k} a) = zeta_{p^k}^{u a}` for a fixed unit
/// twist `u` (`u = 1` is the standard normalization).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tau {
    twist: u64,
}

impl Tau {
    pub fn standard() -> Self {
        Tau { twist: 1 }
    }

    pub fn twisted(twist: u64) -> Self {
        Tau { twist }
    }

    pub fn twist(&self) -> u64 {
        self.twist
    }

    /// `tau(p^{-k} a)` in `Q(zeta_m)`; requires `p^k | m`.
    pub fn eval(&self, a: u64, k: u32, p: u64, m: u32) -> Cyc {
        let pk = p.pow(k);
        debug_assert_eq!(m as u64 % pk, 0);
        let e = (a % pk) * (self.twist % pk) % pk;
        Cyc::root(m, (e * (m as u64 / pk)) as i64)
    }
}

/// `psi_beta(1 + p^l X) = tau(p^{-l'} B(X, beta))` on `G(p^l/p^r)`.
pub fn psi_beta(b: &BetaDatum, h: &MatZq, tau: Tau) -> Result<Cyc> {
    let (l, lp) = b.levels();
    let pp = b.pp();
    let x = h.sub(&MatZq::identity(h.dim(), pp)).divide_p(l, lp).map_err(|_| Error::NotInLevel(l))?;
    let form = trace_form(&x, &b.beta().reduce(lp));
    Ok(tau.eval(form, lp, pp.p(), b.cyc_order()))
}

/// Values of a class function on an enumerated carrier, in carrier order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupChar {
    pub order: u32,
    pub values: Vec<Cyc>,
}

impl GroupChar {
    pub fn degree(&self) -> Cyc {
        // carriers list the identity first (BFS order and sorted filters both do)
        self.values[0].clone()
    }
}

/// `sigma_{beta,theta}` on `H`, with the data needed to split `k = t h`.
pub struct Sigma<'a> {
    b: &'a BetaDatum,
    torus: &'a TorusGroup,
    theta: ThetaChar,
    tau: Tau,
    lookup: HashMap<MatZq, MatZq>,
    odd: Option<OddSigma>,
}

struct OddSigma {
    model: OddModel,
    lift: WeilLift,
    rho: RhoChar,
}

impl<'a> Sigma<'a> {
    pub fn new(b: &'a BetaDatum, torus: &'a TorusGroup, theta: &ThetaChar, tau: Tau) -> Result<Self> {
        let (_, lp) = b.levels();
        let mut lookup = HashMap::new();
        for t in torus.elems() {
            lookup.entry(t.reduce(lp)).or_insert_with(|| t.clone());
        }
        let odd = if b.pp().is_even() {
            None
        } else {
            let model = OddModel::new(b, tau)?;
            let lift = WeilLift::new(model.heis(), torus)?;
            let rho = model.rho_from_theta(theta, torus)?;
            let m = b.cyc_order();
            for t in torus.level(lp).elems() {
                if model.psi_beta_rho(&rho, t)? != theta.eval(torus, t, m)? {
                    return Err(Error::OverlapMismatch(format!("{t:?}")));
                }
            }
            Some(OddSigma { model, lift, rho })
        };
        Ok(Sigma { b, torus, theta: theta.clone(), tau, lookup, odd })
    }

    /// `p^{n^2}` at odd `r`, `1` at even `r`.
    pub fn degree(&self) -> u64 {
        match &self.odd {
            Some(o) => o.model.heis().model_dim() as u64,
            None => 1,
        }
    }

    /// `k = t h` with `t in T`, `h in G(p^l'/p^r)`.
    pub fn split(&self, k: &MatZq) -> Result<(MatZq, MatZq)> {
        let (_, lp) = self.b.levels();
        let t = self.lookup.get(&k.reduce(lp)).ok_or_else(|| {
            Error::WellDefinednessFailure(format!("{k:?} is not in H"))
        })?;
        Ok((t.clone(), t.sp_inverse().mul(k)))
    }

    /// Operator `theta(t) Omega(tbar) omega_{beta,rho}(h)` at odd `r`.
    pub fn op(&self, k: &MatZq) -> Result<HeisOp> {
        let o = self.odd.as_ref().ok_or(Error::UsageParity)?;
        let (t, h) = self.split(k)?;
        let th = self.theta.eval(self.torus, &t, self.b.cyc_order())?;
        let w = o.model.omega_beta_rho(&o.rho, &h)?;
        Ok(o.lift.omega(&t)?.mul(&w).scale(&th))
    }

    pub fn value(&self, k: &MatZq) -> Result<Cyc> {
        match &self.odd {
            Some(_) => Ok(self.op(k)?.trace()),
            None => {
                let (t, h) = self.split(k)?;
                let th = self.theta.eval(self.torus, &t, self.b.cyc_order())?;
                Ok((&th * &psi_beta(self.b, &h, self.tau)?).canonical())
            }
        }
    }

    /// Character values on the elements of `h`.
    pub fn character(&self, h: &FiniteGroup) -> Result<GroupChar> {
        let values = h.elems().par_iter().map(|k| self.value(k)).collect::<Result<Vec<_>>>()?;
        Ok(GroupChar { order: self.b.cyc_order(), values })
    }
}

/// `Ind_H^G` via left coset representatives: `sum_i sigma(x_i^{-1} g x_i)`.
pub fn induce(
    b: &BetaDatum,
    group: &FiniteGroup,
    h: &FiniteGroup,
    reps: &[MatZq],
    sigma: &GroupChar,
) -> GroupChar {
    let inv: Vec<MatZq> = reps.iter().map(MatZq::sp_inverse).collect();
    let m = sigma.order;
    let values = group
        .elems()
        .par_iter()
        .map(|g| {
            let mut acc = Cyc::zero(m);
            for (x, xi) in reps.iter().zip(&inv) {
                let c = xi.mul(g).mul(x);
                if in_stabilizer(b, &c) {
                    let idx = h.index_of(&c).expect("H is closed under conjugation");
                    acc += &sigma.values[idx];
                }
            }
            acc.canonical()
        })
        .collect();
    GroupChar { order: m, values }
}

/// Frobenius formula `(1/|H|) sum_{x in G} sigma(x^{-1} g x)`; quadratic in `|G|`.
pub fn induce_frobenius(group: &FiniteGroup, h: &FiniteGroup, sigma: &GroupChar) -> GroupChar {
    let m = sigma.order;
    let scale = Rat::new(1, h.len() as i64);
    let values = group
        .elems()
        .par_iter()
        .map(|g| {
            let mut acc = Cyc::zero(m);
            for x in group.elems() {
                if let Some(idx) = h.index_of(&x.sp_inverse().mul(g).mul(x)) {
                    acc += &sigma.values[idx];
                }
            }
            acc.scale(scale).canonical()
        })
        .collect();
    GroupChar { order: m, values }
}

/// Everything needed to build `delta_{beta,theta}` on a fully enumerated group.
pub struct DeltaContext {
    pub beta: BetaDatum,
    pub tau: Tau,
    pub group: FiniteGroup,
    pub h: FiniteGroup,
    pub reps: Vec<MatZq>,
    pub torus: TorusGroup,
    pub thetas: Vec<ThetaChar>,
}

impl DeltaContext {
    pub fn new(beta: BetaDatum, tau: Tau, budget: u128) -> Result<Self> {
        let group = enumerate_group(beta.n(), beta.pp(), budget)?;
        let h = stabilizer_h(&beta, &group);
        let reps = coset_reps(&beta, budget)?;
        let torus = build_torus(&beta, budget)?;
        let thetas = theta_characters(&beta, &torus, tau)?;
        Ok(DeltaContext { beta, tau, group, h, reps, torus, thetas })
    }

    pub fn sigma(&self, theta: &ThetaChar) -> Result<Sigma<'_>> {
        Sigma::new(&self.beta, &self.torus, theta, self.tau)
    }

    pub fn sigma_character(&self, theta: &ThetaChar) -> Result<GroupChar> {
        self.sigma(theta)?.character(&self.h)
    }

    pub fn delta_character(&self, theta: &ThetaChar) -> Result<GroupChar> {
        let s = self.sigma_character(theta)?;
        Ok(induce(&self.beta, &self.group, &self.h, &self.reps, &s))
    }
}

/// `dim delta = |Sp_2n(Z/p^l')| / |T(Z/p^l')|`, times `p^{n^2}` at odd `r`.
pub fn dim_delta(n: usize, p: u64, r: u32) -> Result<u128> {
    let (_, lp) = split_level(r)?;
    let base = group_order(n, p, lp) / torus_order(n, p, lp);
    Ok(if r.is_multiple_of(2) { base } else { base * (p as u128).pow((n * n) as u32) })
}

/// `(1/|G|) sum_g a(g) conj(b(g))` computed exactly through a modular embedding.
///
/// The sum is a rational integer of absolute value at most `|G| a(1) b(1)`; the
/// embedding prime exceeds twice that bound, so the centered residue is exact.
pub fn inner_product(a: &GroupChar, b: &GroupChar) -> Result<Rat> {
    let emb = ModEmbedding::new(a.order);
    let deg = |c: &GroupChar| c.degree().to_integer().unwrap_or(i64::MAX / 4).unsigned_abs();
    let bound = a.values.len() as u128 * deg(a) as u128 * deg(b) as u128;
    if 2 * bound >= emb.modulus() as u128 {
        return Err(Error::Config(format!("inner product bound {bound} exceeds the embedding prime")));
    }
    let p = emb.modulus();
    let sum = a
        .values
        .par_iter()
        .zip(&b.values)
        .map(|(x, y)| emb.mul(emb.embed(x), emb.embed_conj(y)))
        .reduce(|| 0, |s, t| (s + t) % p);
    Ok(Rat::new(emb.centered(sum), a.values.len() as i64))
}

/// Direct cyclotomic evaluation of [`inner_product`]; used as a cross-check.
pub fn inner_product_exact(a: &GroupChar, b: &GroupChar) -> Result<Rat> {
    let mut acc = Cyc::zero(a.order);
    for (x, y) in a.values.iter().zip(&b.values) {
        acc += &(x * &y.conj());
    }
    acc.to_rat()
        .map(|r| r / Rat::from_integer(a.values.len() as i64))
        .ok_or_else(|| Error::NonIntegerResult(acc.to_string()))
}

/// `dim` of the vectors fixed by the subgroup `k` of the carrier of `chi`:
/// `(1/|K|) sum_{k in K} chi(k)`.
pub fn fixed_dim(group: &FiniteGroup, chi: &GroupChar, k: &FiniteGroup) -> Result<u64> {
    let mut acc = Cyc::zero(chi.order);
    for x in k.elems() {
        let idx = group.index_of(x).ok_or(Error::NotInU)?;
        acc += &chi.values[idx];
    }
    let r = acc
        .to_rat()
        .map(|r| r / Rat::from_integer(k.len() as i64))
        .ok_or_else(|| Error::NonIntegerResult(acc.to_string()))?;
    if r.is_integer() && *r.numer() >= 0 {
        Ok(*r.numer() as u64)
    } else {
        Err(Error::NonIntegerResult(r.to_string()))
    }
}

/// Multiplicity of `psi_beta` in `delta` restricted to `G(p^l/p^r)`.
pub fn clifford_multiplicity(ctx: &DeltaContext, delta: &GroupChar) -> Result<u64> {
    let (l, _) = ctx.beta.levels();
    let m = ctx.beta.cyc_order();
    let k = level_part(&ctx.group, l);
    let mut acc = Cyc::zero(m);
    for x in k.elems() {
        let idx = ctx.group.index_of(x).expect("level part of the group");
        acc += &(&delta.values[idx] * &psi_beta(&ctx.beta, x, ctx.tau)?.conj());
    }
    let r = acc
        .to_rat()
        .map(|r| r / Rat::from_integer(k.len() as i64))
        .ok_or_else(|| Error::NonIntegerResult(acc.to_string()))?;
    if r.is_integer() && *r.numer() >= 0 {
        Ok(*r.numer() as u64)
    } else {
        Err(Error::NonIntegerResult(r.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CharRow {
    element: String,
    value: String,
}

/// Writes `element,value` rows: entries in row-major order, value as `exp:coeff` pairs.
pub fn export_csv(path: &Path, group: &FiniteGroup, chi: &GroupChar) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (g, v) in group.elems().iter().zip(&chi.values) {
        let element = g.entries().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        w.serialize(CharRow { element, value: v.to_exponent_list() })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`export_csv`] back into `(entries, value)` pairs.
pub fn import_csv(path: &Path, order: u32) -> Result<Vec<(Vec<u64>, Cyc)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CharRow = row?;
        let entries = row
            .element
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let v = Cyc::parse_exponent_list(order, &row.value)
            .ok_or_else(|| Error::Config(format!("bad value {}", row.value)))?;
        out.push((entries, v));
    }
    Ok(out)
}
