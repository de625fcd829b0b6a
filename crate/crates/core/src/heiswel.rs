//! The residual symplectic space at odd `r`, its Heisenberg group in the
//! Schrodinger model, the characters `psi_{beta,rho}` and `omega_{beta,rho}`,
//! and a homomorphic Weil lift on the torus image.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exactnum::{rat_nth_root, Cyc, Rat};
use crate::regular_orbit::{BetaDatum, ThetaChar, TorusGroup};
use crate::repbuild::Tau;
use crate::ringkit::{nullspace_mod_p, PrimePower};
use crate::sympcore::{lie_basis, lie_coords, lie_dim, lie_from_coords, trace_form, FiniteGroup, MatZq};

/// Square matrix over `Q(zeta_m)` acting on functions on the Lagrangian `W'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeisOp {
    dim: usize,
    order: u32,
    data: Vec<Cyc>,
}

impl HeisOp {
    pub fn zero(dim: usize, order: u32) -> Self {
        HeisOp { dim, order, data: vec![Cyc::zero(order); dim * dim] }
    }

    pub fn identity(dim: usize, order: u32) -> Self {
        let mut m = Self::zero(dim, order);
        for i in 0..dim {
            m.data[i * dim + i] = Cyc::one(order);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Cyc {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Cyc) {
        self.data[i * self.dim + j] = v;
    }

    pub fn mul(&self, o: &HeisOp) -> HeisOp {
        let d = self.dim;
        let mut out = Self::zero(d, self.order);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.terms().is_empty() {
                    continue;
                }
                for j in 0..d {
                    let b = o.get(k, j);
                    if !b.terms().is_empty() {
                        out.data[i * d + j] += &(a * b);
                    }
                }
            }
        }
        for x in out.data.iter_mut() {
            *x = x.canonical();
        }
        out
    }

    pub fn add(&self, o: &HeisOp) -> HeisOp {
        let data = self.data.iter().zip(&o.data).map(|(a, b)| (a + b).canonical()).collect();
        HeisOp { dim: self.dim, order: self.order, data }
    }

    pub fn scale(&self, c: &Cyc) -> HeisOp {
        let data = self.data.iter().map(|a| (a * c).canonical()).collect();
        HeisOp { dim: self.dim, order: self.order, data }
    }

    pub fn pow(&self, k: u64) -> HeisOp {
        (0..k).fold(Self::identity(self.dim, self.order), |acc, _| acc.mul(self))
    }

    pub fn trace(&self) -> Cyc {
        let mut acc = Cyc::zero(self.order);
        for i in 0..self.dim {
            acc += self.get(i, i);
        }
        acc.canonical()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Cyc::is_zero)
    }

    /// `Some(c)` when the operator is `c` times the identity.
    pub fn scalar_value(&self) -> Option<Cyc> {
        let d = self.dim;
        let c = self.get(0, 0).clone();
        for i in 0..d {
            for j in 0..d {
                let x = self.get(i, j);
                let ok = if i == j { *x == c } else { x.is_zero() };
                if !ok {
                    return None;
                }
            }
        }
        Some(c)
    }

    /// First nonzero entry in row-major order.
    fn first_nonzero(&self) -> Option<&Cyc> {
        self.data.iter().find(|x| !x.is_zero())
    }
}

/// `V = t(F_p)^perp` inside `sp_2n(F_p)` with `<X, Y> = B([X, Y], beta)`.
#[derive(Clone, Debug)]
pub struct ResidueSympSpace {
    n: usize,
    fp: PrimePower,
    beta_bar: MatZq,
    t_basis: Vec<MatZq>,
    v_basis: Vec<MatZq>,
    gram: Vec<Vec<u64>>,
    split: MatZq,
}

impl ResidueSympSpace {
    pub fn new(b: &BetaDatum) -> Result<Self> {
        let n = b.n();
        let p = b.pp().p();
        let fp = PrimePower::new(p, 1)?;
        let beta_bar = b.beta().reduce(1);
        let t_basis: Vec<MatZq> = (0..n).map(|k| b.powers()[2 * k + 1].reduce(1)).collect();
        let basis = lie_basis(n, fp);
        let eqs: Vec<Vec<u64>> =
            t_basis.iter().map(|t| basis.iter().map(|e| trace_form(e, t)).collect()).collect();
        let d = lie_dim(n);
        let v_basis: Vec<MatZq> =
            nullspace_mod_p(&eqs, d, p).into_iter().map(|c| lie_from_coords(n, &c, fp)).collect();
        if v_basis.len() != 2 * n * n {
            return Err(Error::DegenerateForm);
        }
        let cols: Vec<Vec<u64>> = v_basis.iter().chain(&t_basis).map(lie_coords).collect();
        let change = MatZq::from_fn(d, fp, |i, j| cols[j][i] as i64);
        let split = change.inverse().ok_or(Error::DegenerateForm)?;
        let mut space = ResidueSympSpace { n, fp, beta_bar, t_basis, v_basis, gram: Vec::new(), split };
        let gram: Vec<Vec<u64>> = (0..space.v_basis.len())
            .map(|i| (0..space.v_basis.len()).map(|j| space.form_mat(&space.v_basis[i], &space.v_basis[j])).collect())
            .collect();
        space.gram = gram;
        let rows: Vec<Vec<u64>> = space.gram.clone();
        if crate::ringkit::det_mod_p(&rows, p) == 0 {
            return Err(Error::DegenerateForm);
        }
        Ok(space)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.fp.p()
    }

    pub fn dim(&self) -> usize {
        self.v_basis.len()
    }

    pub fn v_basis(&self) -> &[MatZq] {
        &self.v_basis
    }

    pub fn t_basis(&self) -> &[MatZq] {
        &self.t_basis
    }

    pub fn gram(&self) -> &[Vec<u64>] {
        &self.gram
    }

    fn form_mat(&self, x: &MatZq, y: &MatZq) -> u64 {
        trace_form(&x.bracket(y), &self.beta_bar)
    }

    /// `<u, v>` for coordinate vectors in the `V` basis.
    pub fn pairing(&self, u: &[u64], v: &[u64]) -> u64 {
        let p = self.p();
        let mut acc = 0;
        for (i, &a) in u.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &c) in v.iter().enumerate() {
                acc = (acc + a * c % p * self.gram[i][j]) % p;
            }
        }
        acc
    }

    /// Splits `X in sp_2n(F_p)` as `[v] + Y` with `v in V`, `Y in t(F_p)`.
    pub fn decompose(&self, x: &MatZq) -> (Vec<u64>, Vec<u64>) {
        let x = x.reduce(1);
        let c = lie_coords(&x);
        let d = c.len();
        let p = self.p();
        let all: Vec<u64> = (0..d).map(|i| (0..d).map(|j| self.split.get(i, j) * c[j]).sum::<u64>() % p).collect();
        let k = self.dim();
        (all[..k].to_vec(), all[k..].to_vec())
    }

    pub fn element(&self, v: &[u64]) -> MatZq {
        self.v_basis
            .iter()
            .zip(v)
            .fold(MatZq::zero(2 * self.n, self.fp), |acc, (b, &c)| acc.add(&b.scale(c)))
    }

    /// Matrix of `v -> Ad(g)^{-1} v` on `V` coordinates (columns are images).
    pub fn action(&self, g: &MatZq) -> Result<Vec<Vec<u64>>> {
        let g = g.reduce(1);
        let gi = g.inverse().ok_or(Error::DegenerateForm)?;
        let k = self.dim();
        let mut m = vec![vec![0u64; k]; k];
        for (j, v) in self.v_basis.iter().enumerate() {
            let (img, y) = self.decompose(&gi.mul(v).mul(&g));
            if y.iter().any(|&c| c != 0) {
                return Err(Error::DegenerateForm);
            }
            for i in 0..k {
                m[i][j] = img[i];
            }
        }
        Ok(m)
    }
}

/// Applies a `V`-coordinate matrix to a vector.
pub fn apply(m: &[Vec<u64>], v: &[u64], p: u64) -> Vec<u64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b % p).sum::<u64>() % p).collect()
}

/// A symplectic basis `w'_i, w_i` of `V` with `<w'_i, w_j> = delta_ij`.
#[derive(Clone, Debug)]
pub struct Polarization {
    wp: Vec<Vec<u64>>,
    w: Vec<Vec<u64>>,
    to_polar: MatZq,
}

impl Polarization {
    pub fn half_dim(&self) -> usize {
        self.wp.len()
    }

    pub fn lagrangians(&self) -> (&[Vec<u64>], &[Vec<u64>]) {
        (&self.wp, &self.w)
    }

    /// `(a, b)` with `v = sum a_i w'_i + sum b_i w_i`.
    pub fn coords(&self, v: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let k = v.len();
        let p = self.to_polar.context().p();
        let all: Vec<u64> =
            (0..k).map(|i| (0..k).map(|j| self.to_polar.get(i, j) * v[j]).sum::<u64>() % p).collect();
        let h = k / 2;
        (all[..h].to_vec(), all[h..].to_vec())
    }
}

/// Symplectic Gram-Schmidt starting from the standard coordinate basis.
pub fn polarize(space: &ResidueSympSpace) -> Result<Polarization> {
    let k = space.dim();
    let start: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
    polarize_from(space, start)
}

/// Symplectic Gram-Schmidt starting from any basis of `V`.
pub fn polarize_from(space: &ResidueSympSpace, start: Vec<Vec<u64>>) -> Result<Polarization> {
    let p = space.p();
    let k = space.dim();
    let mut rest = start;
    let (mut wp, mut w) = (Vec::new(), Vec::new());
    let comb = |a: &[u64], ca: u64, b: &[u64], cb: u64, c: &[u64], cc: u64| -> Vec<u64> {
        (0..a.len()).map(|i| (a[i] * ca + b[i] * cb + c[i] * cc) % p).collect()
    };
    while !rest.is_empty() {
        let x = rest.remove(0);
        let pos = rest.iter().position(|y| space.pairing(&x, y) != 0).ok_or(Error::DegenerateForm)?;
        let y0 = rest.remove(pos);
        let s = crate::ringkit::mod_inv(space.pairing(&x, &y0), p).ok_or(Error::DegenerateForm)?;
        let y: Vec<u64> = y0.iter().map(|c| c * s % p).collect();
        rest = rest
            .into_iter()
            .map(|z| {
                // z - <z,y> x + <z,x> y is orthogonal to both x and y
                let zy = space.pairing(&z, &y);
                let zx = space.pairing(&z, &x);
                comb(&z, 1, &x, (p - zy) % p, &y, zx)
            })
            .collect();
        wp.push(x);
        w.push(y);
    }
    let fp = PrimePower::new(p, 1)?;
    let cols: Vec<&Vec<u64>> = wp.iter().chain(&w).collect();
    let m = MatZq::from_fn(k, fp, |i, j| cols[j][i] as i64);
    let to_polar = m.inverse().ok_or(Error::DegenerateForm)?;
    Ok(Polarization { wp, w, to_polar })
}

/// The Heisenberg group `V x mu_p` in the Schrodinger model on `W'`.
#[derive(Clone, Debug)]
pub struct Schrodinger {
    space: ResidueSympSpace,
    pol: Polarization,
    tau: Tau,
    order: u32,
}

impl Schrodinger {
    pub fn new(space: ResidueSympSpace, pol: Polarization, tau: Tau, order: u32) -> Self {
        Schrodinger { space, pol, tau, order }
    }

    pub fn space(&self) -> &ResidueSympSpace {
        &self.space
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `p^{n^2}`.
    pub fn model_dim(&self) -> usize {
        (self.space.p() as usize).pow(self.pol.half_dim() as u32)
    }

    /// `tau(p^{-1} x)`.
    pub fn tau_hat(&self, x: u64) -> Cyc {
        self.tau.eval(x, 1, self.space.p(), self.order)
    }

    fn index(&self, a: &[u64]) -> usize {
        let p = self.space.p() as usize;
        a.iter().rev().fold(0, |acc, &x| acc * p + x as usize)
    }

    fn point(&self, mut idx: usize) -> Vec<u64> {
        let p = self.space.p() as usize;
        (0..self.pol.half_dim())
            .map(|_| {
                let x = idx % p;
                idx /= p;
                x as u64
            })
            .collect()
    }

    /// Heisenberg product `(u,s)(v,t) = (u+v, s t tau_hat(<u,v>/2))`.
    pub fn product(&self, u: &[u64], s: &Cyc, v: &[u64], t: &Cyc) -> (Vec<u64>, Cyc) {
        let p = self.space.p();
        let half = p.div_ceil(2);
        let sum: Vec<u64> = u.iter().zip(v).map(|(a, b)| (a + b) % p).collect();
        let c = self.tau_hat(half * self.space.pairing(u, v) % p);
        (sum, (&(s * t) * &c).canonical())
    }

    /// `(omega(u,s) f)(w) = s tau_hat(<u-,u+>/2 + <w,u+>) f(w + u-)`.
    pub fn op(&self, u: &[u64], s: &Cyc) -> HeisOp {
        let p = self.space.p();
        let half = p.div_ceil(2);
        let (ua, ub) = self.pol.coords(u);
        let dot = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x * y % p).sum::<u64>() % p;
        let base = half * dot(&ua, &ub) % p;
        let d = self.model_dim();
        let mut m = HeisOp::zero(d, self.order);
        for i in 0..d {
            let w = self.point(i);
            let tgt: Vec<u64> = w.iter().zip(&ua).map(|(a, b)| (a + b) % p).collect();
            let e = (base + dot(&w, &ub)) % p;
            m.set(i, self.index(&tgt), (s * &self.tau_hat(e)).canonical());
        }
        m
    }

    /// All points of `V` as coordinate vectors.
    pub fn all_points(&self) -> Vec<Vec<u64>> {
        let p = self.space.p();
        let k = self.space.dim();
        let total = (p as usize).pow(k as u32);
        (0..total)
            .map(|mut idx| {
                (0..k)
                    .map(|_| {
                        let x = idx as u64 % p;
                        idx /= p as usize;
                        x
                    })
                    .collect()
            })
            .collect()
    }

    /// Some nonzero operator `A` with `omega(u) A = A omega(uS)` for all `u`.
    pub fn intertwiner(&self, s: &[Vec<u64>]) -> Result<HeisOp> {
        let p = self.space.p();
        let d = self.model_dim();
        let one = Cyc::one(self.order);
        let pts = self.all_points();
        for a in 0..d {
            for b in 0..d {
                let mut e = HeisOp::zero(d, self.order);
                e.set(a, b, one.clone());
                let mut acc = HeisOp::zero(d, self.order);
                for u in &pts {
                    let us = apply(s, u, p);
                    let neg: Vec<u64> = us.iter().map(|x| (p - x) % p).collect();
                    acc = acc.add(&self.op(u, &one).mul(&e).mul(&self.op(&neg, &one)));
                }
                if !acc.is_zero() {
                    return Ok(acc);
                }
            }
        }
        Err(Error::LiftInconsistent("no nonzero intertwiner".into()))
    }
}

/// A character `rho` of `t(F_p)`: `rho(sum c_k beta^{2k+1}) = zeta_p^{sum e_k c_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RhoChar {
    pub exps: Vec<u64>,
}

/// The odd-`r` model: `H = T G(p^{l'})` with `l' = l - 1`.
#[derive(Clone, Debug)]
pub struct OddModel {
    b: BetaDatum,
    heis: Schrodinger,
    tau: Tau,
}

impl OddModel {
    pub fn new(b: &BetaDatum, tau: Tau) -> Result<Self> {
        if b.pp().is_even() || b.pp().r() < 3 {
            return Err(Error::InvalidLevel(b.pp().r()));
        }
        let space = ResidueSympSpace::new(b)?;
        let pol = polarize(&space)?;
        Ok(Self::with_polarization(b, tau, space, pol))
    }

    pub fn with_polarization(b: &BetaDatum, tau: Tau, space: ResidueSympSpace, pol: Polarization) -> Self {
        let heis = Schrodinger::new(space, pol, tau, b.cyc_order());
        OddModel { b: b.clone(), heis, tau }
    }

    pub fn heis(&self) -> &Schrodinger {
        &self.heis
    }

    pub fn beta(&self) -> &BetaDatum {
        &self.b
    }

    /// `(l, l')`.
    pub fn levels(&self) -> (u32, u32) {
        self.b.levels()
    }

    /// `T` with `h = 1 + p^{l'} T`, read modulo `p^l`.
    fn log_part(&self, h: &MatZq) -> Result<MatZq> {
        let (l, lp) = self.levels();
        let id = MatZq::identity(h.dim(), h.context());
        h.sub(&id).divide_p(lp, l).map_err(|_| Error::NotInLevel(lp))
    }

    /// `tau(p^{-l} B(T, beta) - p^{-1} B(T^2, beta) / 2)`.
    fn scalar_part(&self, t: &MatZq) -> Cyc {
        let (l, _) = self.levels();
        let pp = self.b.pp();
        let p = pp.p();
        let pl = p.pow(l);
        let lin = trace_form(t, &self.b.beta().reduce(l)) % pl;
        let tb = t.reduce(1);
        let quad = trace_form(&tb.mul(&tb), &self.b.beta().reduce(1)) % p;
        let half = p.div_ceil(2);
        let corr = half * quad % p * p.pow(l - 1) % pl;
        let e = (lin + pl - corr) % pl;
        self.tau.eval(e, l, p, self.b.cyc_order())
    }

    pub fn rho_value(&self, rho: &RhoChar, y: &[u64]) -> Cyc {
        let p = self.b.pp().p();
        let e: u64 = rho.exps.iter().zip(y).map(|(a, b)| a * b % p).sum::<u64>() % p;
        let m = self.b.cyc_order();
        Cyc::root(m, (e * (m as u64 / p)) as i64)
    }

    /// Whether `h in G(p^{l'})` lies in `Z` (its residual part is in `t(F_p)`).
    pub fn in_z(&self, h: &MatZq) -> bool {
        match self.log_part(h) {
            Ok(t) => self.heis.space.decompose(&t).0.iter().all(|&c| c == 0),
            Err(_) => false,
        }
    }

    /// `psi_{beta,rho}` on `Z`.
    pub fn psi_beta_rho(&self, rho: &RhoChar, h: &MatZq) -> Result<Cyc> {
        let t = self.log_part(h)?;
        let (v, y) = self.heis.space.decompose(&t);
        if v.iter().any(|&c| c != 0) {
            return Err(Error::NotInZ);
        }
        Ok((&self.scalar_part(&t) * &self.rho_value(rho, &y)).canonical())
    }

    /// `omega_{beta,rho}` on `G(p^{l'})`.
    pub fn omega_beta_rho(&self, rho: &RhoChar, h: &MatZq) -> Result<HeisOp> {
        let t = self.log_part(h)?;
        let (v, y) = self.heis.space.decompose(&t);
        let s = (&self.scalar_part(&t) * &self.rho_value(rho, &y)).canonical();
        Ok(self.heis.op(&v, &s))
    }

    /// `1 + p^{l'} Y + p^{2l'} Y^2 / 2` for `Y = beta^{2k+1}`; lies in `T`.
    pub fn torus_lift(&self, k: usize) -> MatZq {
        let pp = self.b.pp();
        let (_, lp) = self.levels();
        let y = self.b.powers()[2 * k + 1].clone();
        let x = y.scale(pp.pow_p(lp) % pp.q());
        let half = pp.inv(2).expect("p is odd");
        MatZq::identity(y.dim(), pp).add(&x).add(&x.mul(&x).scale(half))
    }

    /// The unique `rho` with `psi_{beta,rho} = theta` on the lifts of `t(F_p)`.
    pub fn rho_from_theta(&self, theta: &ThetaChar, torus: &TorusGroup) -> Result<RhoChar> {
        let p = self.b.pp().p();
        let m = self.b.cyc_order();
        let n = self.b.n();
        let mut exps = Vec::with_capacity(n);
        for k in 0..n {
            let g = self.torus_lift(k);
            let th = theta.eval(torus, &g, m)?;
            let t = self.log_part(&g)?;
            let (v, y) = self.heis.space.decompose(&t);
            debug_assert!(v.iter().all(|&c| c == 0));
            debug_assert!(y.iter().enumerate().all(|(i, &c)| c == u64::from(i == k)));
            let target = &th * &self.scalar_part(&t).conj();
            let e = (0..p)
                .find(|&e| Cyc::root(m, (e * (m as u64 / p)) as i64) == target)
                .ok_or_else(|| Error::InconsistentRestriction(format!("theta/psi at beta^{} is not a p-th root", 2 * k + 1)))?;
            exps.push(e);
        }
        Ok(RhoChar { exps })
    }

    /// Checks `Ind_Z^{G(p^{l'})} psi_{beta,rho} = p^{n^2} chi_omega` and returns
    /// the norm of the induced character.
    pub fn verify_isotypic(&self, rho: &RhoChar, kgroup: &FiniteGroup) -> Result<Rat> {
        let mut reps: HashMap<Vec<u64>, &MatZq> = HashMap::new();
        for h in kgroup.elems() {
            let (v, _) = self.heis.space.decompose(&self.log_part(h)?);
            reps.entry(v).or_insert(h);
        }
        let m = self.b.cyc_order();
        let deg = self.heis.model_dim() as i64;
        let mut norm = Cyc::zero(m);
        for h in kgroup.elems() {
            let ind = if self.in_z(h) {
                let mut acc = Cyc::zero(m);
                for x in reps.values() {
                    let c = x.mul(h).mul(&x.sp_inverse());
                    acc += &self.psi_beta_rho(rho, &c)?;
                }
                acc.canonical()
            } else {
                Cyc::zero(m)
            };
            let tr = self.omega_beta_rho(rho, h)?.trace();
            if tr.scale(Rat::from_integer(deg)) != ind {
                return Err(Error::IsotypicFailure(format!("trace mismatch at {h:?}")));
            }
            norm += &(&ind * &ind.conj());
        }
        norm.to_rat()
            .map(|r| r / Rat::from_integer(kgroup.len() as i64))
            .ok_or_else(|| Error::IsotypicFailure("norm is not rational".into()))
    }
}

/// A homomorphic lift `Omega` of the torus image `S` in `Sp(V)`.
#[derive(Clone, Debug)]
pub struct WeilLift {
    gen: MatZq,
    action: Vec<Vec<u64>>,
    s_order: usize,
    powers: Vec<HeisOp>,
    table: HashMap<MatZq, usize>,
    correction: u32,
}

impl WeilLift {
    /// Builds `Omega` on the cyclic group `T(F_p)`, factoring through `S`.
    pub fn new(heis: &Schrodinger, torus: &TorusGroup) -> Result<Self> {
        let p = heis.space.p();
        let m = heis.order();
        let mut residues: Vec<MatZq> = torus.elems().iter().map(|t| t.reduce(1)).collect();
        residues.sort();
        residues.dedup();
        let order_of = |g: &MatZq| -> usize {
            let mut x = g.clone();
            let mut k = 1;
            while !x.is_identity() {
                x = x.mul(g);
                k += 1;
            }
            k
        };
        let gen = residues
            .iter()
            .max_by_key(|g| (order_of(g), std::cmp::Reverse((*g).clone())))
            .cloned()
            .ok_or(Error::GNotInTorus)?;
        let d = order_of(&gen);
        if d != residues.len() {
            return Err(Error::LiftInconsistent("T(F_p) is not cyclic".into()));
        }
        let action = heis.space.action(&gen)?;
        let k = action.len();
        let ident: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
        let mut s_order = 1;
        let mut acc = action.clone();
        while acc != ident {
            acc = (0..k)
                .map(|i| (0..k).map(|j| (0..k).map(|l| acc[i][l] * action[l][j] % p).sum::<u64>() % p).collect())
                .collect();
            s_order += 1;
        }
        let a = heis.intertwiner(&action)?;
        let lead = a.first_nonzero().expect("nonzero intertwiner").clone();
        let lead_inv = invert_monomial(&lead)?;
        let a = a.scale(&lead_inv);
        let mu = a
            .pow(s_order as u64)
            .scalar_value()
            .ok_or_else(|| Error::LiftInconsistent("A^s is not scalar".into()))?;
        let mut found = None;
        for j in 0..m {
            let z = (&mu * &Cyc::root(m, (j as usize * s_order) as i64)).canonical();
            if let Some(q) = z.to_rat() {
                if q > Rat::from_integer(0) {
                    if let Some(root) = rat_nth_root(Rat::from_integer(1) / q, s_order as u32) {
                        found = Some((j, Cyc::root(m, j as i64).scale(root)));
                        break;
                    }
                }
            }
        }
        let (correction, c) =
            found.ok_or_else(|| Error::LiftInconsistent("no root-of-unity correction normalizes A".into()))?;
        let omega = a.scale(&c);
        let mut powers = vec![HeisOp::identity(omega.dim(), m)];
        for i in 1..=s_order {
            let next = powers[i - 1].mul(&omega);
            powers.push(next);
        }
        if powers[s_order] != HeisOp::identity(omega.dim(), m) {
            return Err(Error::LiftInconsistent("Omega^s is not the identity".into()));
        }
        powers.truncate(s_order);
        let mut table = HashMap::new();
        let mut x = MatZq::identity(gen.dim(), gen.context());
        for i in 0..d {
            table.insert(x.clone(), i % s_order);
            x = x.mul(&gen);
        }
        Ok(WeilLift { gen, action, s_order, powers, table, correction })
    }

    pub fn generator(&self) -> &MatZq {
        &self.gen
    }

    pub fn generator_action(&self) -> &[Vec<u64>] {
        &self.action
    }

    /// Order of the image `S`.
    pub fn s_order(&self) -> usize {
        self.s_order
    }

    /// Exponent `j` of the chosen `zeta_m^j` correction.
    pub fn correction(&self) -> u32 {
        self.correction
    }

    /// `Omega(sigma_tbar)` for `tbar` in `T(F_p)`.
    pub fn omega(&self, tbar: &MatZq) -> Result<&HeisOp> {
        let k = self.table.get(&tbar.reduce(1)).ok_or(Error::GNotInTorus)?;
        Ok(&self.powers[*k])
    }
}

/// `1/x` for `x = c zeta^k` (a single-term cyclotomic number).
fn invert_monomial(x: &Cyc) -> Result<Cyc> {
    let c = x.canonical();
    match c.terms() {
        [(e, q)] => Ok(Cyc::root(c.order(), -(*e as i64)).scale(Rat::from_integer(1) / *q)),
        _ => {
            // general case: x^{-1} = conj-free norm trick is not needed at supported sizes
            Err(Error::LiftInconsistent(format!("leading entry {c} is not a monomial")))
        }
    }
}

/// Finds the residue action of `t` on `V` in `V` coordinates.
pub fn torus_action(space: &ResidueSympSpace, t: &MatZq) -> Result<Vec<Vec<u64>>> {
    space.action(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regular_orbit::{build_torus, find_beta, theta_characters, BetaMode};
    use crate::sympcore::{congruence_elements, DEFAULT_BUDGET};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn beta(n: usize, p: u64, r: u32) -> BetaDatum {
        find_beta(n, PrimePower::new(p, r).unwrap(), BetaMode::Canonical).unwrap()
    }

    fn heis(p: u64, r: u32) -> Schrodinger {
        let b = beta(1, p, r);
        let space = ResidueSympSpace::new(&b).unwrap();
        let pol = polarize(&space).unwrap();
        Schrodinger::new(space, pol, Tau::standard(), b.cyc_order())
    }

    #[test]
    fn residue_space_shape() {
        for (n, p) in [(1, 3), (1, 5), (2, 3)] {
            let b = beta(n, p, 1);
            let s = ResidueSympSpace::new(&b).unwrap();
            assert_eq!(s.dim(), 2 * n * n);
            for v in s.v_basis() {
                for t in s.t_basis() {
                    assert_eq!(trace_form(v, t), 0);
                }
            }
            // alternating
            for i in 0..s.dim() {
                assert_eq!(s.gram()[i][i], 0);
                for j in 0..s.dim() {
                    assert_eq!((s.gram()[i][j] + s.gram()[j][i]) % p, 0);
                }
            }
        }
    }

    #[test]
    fn polarization_is_symplectic() {
        let b = beta(2, 3, 1);
        let s = ResidueSympSpace::new(&b).unwrap();
        let pol = polarize(&s).unwrap();
        let (wp, w) = pol.lagrangians();
        for i in 0..wp.len() {
            for j in 0..wp.len() {
                assert_eq!(s.pairing(&wp[i], &wp[j]), 0);
                assert_eq!(s.pairing(&w[i], &w[j]), 0);
                assert_eq!(s.pairing(&wp[i], &w[j]), u64::from(i == j));
            }
        }
    }

    #[test]
    fn heisenberg_group_law_exhaustive() {
        for p in [3u64, 5] {
            let h = heis(p, 1);
            let one = Cyc::one(h.order());
            let pts = h.all_points();
            assert_eq!(pts.len() as u64, p * p);
            let ops: Vec<HeisOp> = pts.iter().map(|u| h.op(u, &one)).collect();
            for (i, u) in pts.iter().enumerate() {
                for (j, v) in pts.iter().enumerate() {
                    let (w, c) = h.product(u, &one, v, &one);
                    assert_eq!(ops[i].mul(&ops[j]), h.op(&w, &c), "p={p} u={u:?} v={v:?}");
                }
            }
        }
    }

    #[test]
    fn schrodinger_character_is_delta_at_zero() {
        // trace of omega(u,1) is p^{n^2} at u = 0 and 0 elsewhere
        let h = heis(3, 1);
        let one = Cyc::one(h.order());
        for u in h.all_points() {
            let tr = h.op(&u, &one).trace();
            let expect = if u.iter().all(|&c| c == 0) { 3 } else { 0 };
            assert_eq!(tr, Cyc::from_int(h.order(), expect));
        }
    }

    fn odd_setup() -> (BetaDatum, OddModel, TorusGroup, Vec<ThetaChar>, FiniteGroup) {
        let b = beta(1, 3, 3);
        let model = OddModel::new(&b, Tau::standard()).unwrap();
        let torus = build_torus(&b, DEFAULT_BUDGET).unwrap();
        let thetas = theta_characters(&b, &torus, Tau::standard()).unwrap();
        let k = congruence_elements(1, b.pp(), 1, DEFAULT_BUDGET).unwrap();
        (b, model, torus, thetas, k)
    }

    #[test]
    fn rho_coupling_matches_theta_on_torus_kernel() {
        let (_, model, torus, thetas, _) = odd_setup();
        let m = model.beta().cyc_order();
        let kernel = torus.level(1);
        assert_eq!(kernel.len(), 9);
        for th in &thetas {
            let rho = model.rho_from_theta(th, &torus).unwrap();
            for t in kernel.elems() {
                assert!(model.in_z(t));
                assert_eq!(model.psi_beta_rho(&rho, t).unwrap(), th.eval(&torus, t, m).unwrap());
            }
        }
    }

    #[test]
    fn psi_beta_rho_is_a_character_of_z() {
        let (_, model, torus, thetas, k) = odd_setup();
        let rho = model.rho_from_theta(&thetas[0], &torus).unwrap();
        let z: Vec<&MatZq> = k.elems().iter().filter(|h| model.in_z(h)).collect();
        assert_eq!(z.len(), 81);
        for x in &z {
            for y in &z {
                let lhs = model.psi_beta_rho(&rho, &x.mul(y)).unwrap();
                let rhs = &model.psi_beta_rho(&rho, x).unwrap() * &model.psi_beta_rho(&rho, y).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn omega_is_a_homomorphism() {
        let (_, model, torus, thetas, k) = odd_setup();
        let rho = model.rho_from_theta(&thetas[1], &torus).unwrap();
        let ops: Vec<HeisOp> = k.elems().iter().map(|h| model.omega_beta_rho(&rho, h).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let i = rng.gen_range(0..k.len());
            let j = rng.gen_range(0..k.len());
            let prod = k.index_of(&k.get(i).mul(k.get(j))).unwrap();
            assert_eq!(ops[i].mul(&ops[j]), ops[prod]);
        }
    }

    #[test]
    fn induced_character_is_isotypic() {
        let (_, model, torus, thetas, k) = odd_setup();
        assert_eq!(k.len(), 729);
        for th in thetas.iter().take(3) {
            let rho = model.rho_from_theta(th, &torus).unwrap();
            assert_eq!(model.verify_isotypic(&rho, &k).unwrap(), Rat::from_integer(9));
        }
    }

    #[test]
    fn weil_lift_intertwines_and_is_homomorphic() {
        let (_, model, torus, _, _) = odd_setup();
        let h = model.heis();
        let lift = WeilLift::new(h, &torus).unwrap();
        // n = 1, p = 3: T(F_3) has order 4 and its generator acts by -1 on V
        assert_eq!(lift.s_order(), 2);
        let one = Cyc::one(h.order());
        let om = lift.omega(lift.generator()).unwrap();
        for u in h.all_points() {
            let us = apply(lift.generator_action(), &u, 3);
            assert_eq!(h.op(&u, &one).mul(om), om.mul(&h.op(&us, &one)));
        }
        assert_eq!(om.pow(2), HeisOp::identity(3, h.order()));
        let mut x = lift.generator().clone();
        for _ in 0..4 {
            let y = x.mul(lift.generator());
            assert_eq!(lift.omega(&x).unwrap().mul(om), *lift.omega(&y).unwrap());
            x = y;
        }
    }

    #[test]
    fn polarization_independence_of_character() {
        let (b, model, torus, thetas, k) = odd_setup();
        let rho = model.rho_from_theta(&thetas[2], &torus).unwrap();
        let space = ResidueSympSpace::new(&b).unwrap();
        // a different starting basis: (v1 + v2, 2 v2)
        let other = polarize_from(&space, vec![vec![1, 1], vec![0, 2]]).unwrap();
        let alt = OddModel::with_polarization(&b, Tau::standard(), space, other);
        for h in k.elems().iter().step_by(7) {
            let a = model.omega_beta_rho(&rho, h).unwrap().trace();
            let c = alt.omega_beta_rho(&rho, h).unwrap().trace();
            assert_eq!(a, c);
        }
    }

    #[test]
    fn literal_quadratic_term_breaks_multiplicativity() {
        // Without the -B(T^2, beta)/2p term the scalar is not a character on
        // G(p^{l'}): compare the two forms on all pairs and expect a failure.
        let (b, model, _, _, k) = odd_setup();
        let (l, _) = model.levels();
        let m = b.cyc_order();
        let literal = |h: &MatZq| {
            let t = model.log_part(h).unwrap();
            let e = trace_form(&t, &b.beta().reduce(l));
            Tau::standard().eval(e, l, 3, m)
        };
        let mut failures = 0;
        for x in k.elems().iter().step_by(5) {
            for y in k.elems().iter().step_by(11) {
                if !(model.in_z(x) && model.in_z(y)) {
                    continue;
                }
                if literal(&x.mul(y)) != &literal(x) * &literal(y) {
                    failures += 1;
                }
            }
        }
        // on Z itself the quadratic term is a character of t(F_p), so both agree
        assert_eq!(failures, 0);
        let mut off_z = 0;
        for x in k.elems().iter().step_by(5) {
            for y in k.elems().iter().step_by(11) {
                let lhs = literal(&x.mul(y));
                if lhs != &literal(x) * &literal(y) {
                    off_z += 1;
                }
            }
        }
        assert!(off_z > 0);
    }
}
