//! Acceptance criteria. Each criterion prints one line; the process exits
//! nonzero if any criterion fails.
//!
//! Pinned tolerances: integer and cyclotomic quantities are compared exactly
//! (tolerance 0); the floating-point character oracle uses `FLOAT_TOL`; wall
//! clock limits are `ORDERS_LIMIT`, `NORMS_LIMIT` and `GENERIC_LIMIT`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sprep::cli::{run, RunConfig, Suite};
use sprep::exactnum::{Cyc, Rat};
use sprep::heiswel::{apply, polarize_from, HeisOp, OddModel, ResidueSympSpace, WeilLift};
use sprep::regular_orbit::{
    canonicalize_beta, find_beta, torus_elements, BetaDatum, BetaMode,
};
use sprep::repbuild::{fixed_dim, inner_product, inner_product_exact, DeltaContext, GroupChar, Tau};
use sprep::ringkit::{charpoly, PrimePower};
use sprep::sympcore::{
    congruence_elements, enumerate_group, generators, level_part, trace_form, unipotent_elements, MatZq,
    DEFAULT_BUDGET,
};
use sprep::whittaker::{chi_r, even_criterion, hom_dim, mackey_crosscheck, odd_criterion, valuation_scan};

const FLOAT_TOL: f64 = 1e-6;
const ORDERS_LIMIT: Duration = Duration::from_secs(10);
const NORMS_LIMIT: Duration = Duration::from_secs(60);
const GENERIC_LIMIT: Duration = Duration::from_secs(300);

type Outcome = std::result::Result<String, String>;

fn pp(p: u64, r: u32) -> PrimePower {
    PrimePower::new(p, r).unwrap()
}

fn canonical(n: usize, p: u64, r: u32) -> BetaDatum {
    find_beta(n, pp(p, r), BetaMode::Canonical).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ctx(p: u64, r: u32) -> DeltaContext {
    DeltaContext::new(canonical(1, p, r), Tau::standard(), DEFAULT_BUDGET).unwrap()
}

/// `p^{n(2n+1)r} prod_k (1 - p^{-2k})` as an integer.
fn group_order_oracle(n: u32, p: u128, r: u32) -> u128 {
    let mut num = p.pow(n * (2 * n + 1) * r);
    for k in 1..=n {
        num = num / p.pow(2 * k) * (p.pow(2 * k) - 1);
    }
    num
}

/// Brute-force count of `a + b beta` with `a^2 - c b^2 = 1`, where `beta^2 = c`.
fn torus_count_oracle(b: &BetaDatum) -> u64 {
    let q = b.pp().q();
    let c = b.beta().mul(b.beta()).get(0, 0);
    let mut count = 0;
    for a in 0..q {
        for x in 0..q {
            if (a * a % q + q - c * x % q * x % q) % q == 1 {
                count += 1;
            }
        }
    }
    count
}

/// `q^{n^2 r}(1 - q^{-n}) prod_{k<n}(1 - q^{-2k})` as an exact rational.
fn degree_formula(n: u32, p: i64, r: u32) -> Rat {
    let q = Rat::from_integer(p);
    let mut d = q.pow((n * n * r) as i32) * (Rat::from_integer(1) - q.pow(-(n as i32)));
    for k in 1..n {
        d *= Rat::from_integer(1) - q.pow(-2 * k as i32);
    }
    d
}

fn complex(c: &Cyc) -> Complex64 {
    let (re, im) = c.eval_f64();
    Complex64::new(re, im)
}

fn float_inner(a: &GroupChar, b: &GroupChar) -> Complex64 {
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| complex(x) * complex(y).conj()).sum();
    s / a.values.len() as f64
}

fn c1_orders() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (p, r, expect_g, expect_t) in [(3u64, 2u32, 648u128, 12u64), (3, 3, 17496, 36), (5, 2, 15000, 30)] {
        let g = enumerate_group(1, pp(p, r), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(g.len() as u128 == expect_g, format!("|Sp2(Z/{})| = {}", p.pow(r), g.len()))?;
        ensure(group_order_oracle(1, p as u128, r) == expect_g, "order formula")?;
        let b = canonical(1, p, r);
        let t = torus_elements(&b, DEFAULT_BUDGET).map_err(|e| e.to_string())?.len() as u64;
        let formula = p.pow(r) + p.pow(r - 1);
        ensure(t == expect_t && t == formula && t == torus_count_oracle(&b), format!("|T| = {t} at p={p} r={r}"))?;
        parts.push(format!("{}/{}", g.len(), t));
    }
    let el = start.elapsed();
    ensure(el < ORDERS_LIMIT, format!("took {el:?}"))?;
    Ok(format!("group/torus orders {}; {:.1?}", parts.join(", "), el))
}

fn c2_dimension(contexts: &[(&str, &DeltaContext)]) -> Outcome {
    let mut parts = Vec::new();
    for (name, c) in contexts {
        let pp = c.beta.pp();
        let expect = degree_formula(1, pp.p() as i64, pp.r());
        for th in &c.thetas {
            let d = c.delta_character(th).map_err(|e| e.to_string())?;
            let deg = d.degree().to_rat().ok_or("degree not rational")?;
            ensure(deg == expect, format!("{name}: degree {deg} != {expect}"))?;
        }
        parts.push(format!("{name}: {} thetas, degree {expect}", c.thetas.len()));
    }
    Ok(parts.join("; "))
}

fn c3_norms(contexts: &[(&str, &DeltaContext)]) -> Outcome {
    let mut parts = Vec::new();
    for (name, c) in contexts {
        let start = Instant::now();
        let deltas: Vec<GroupChar> =
            c.thetas.iter().map(|t| c.delta_character(t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for (i, a) in deltas.iter().enumerate() {
            for (j, b) in deltas.iter().enumerate().skip(i) {
                let exact = inner_product(a, b).map_err(|e| e.to_string())?;
                let expect = Rat::from_integer(i64::from(i == j));
                ensure(exact == expect, format!("{name}: <delta_{i}, delta_{j}> = {exact}"))?;
                let f = float_inner(a, b);
                let e = if i == j { 1.0 } else { 0.0 };
                ensure((f.re - e).abs() < FLOAT_TOL && f.im.abs() < FLOAT_TOL, format!("{name}: float oracle {f}"))?;
            }
        }
        let el = start.elapsed();
        ensure(el < NORMS_LIMIT, format!("{name} took {el:?}"))?;
        parts.push(format!("{name} {} pairs in {:.1?}", deltas.len() * (deltas.len() + 1) / 2, el));
    }
    Ok(parts.join("; "))
}

fn c4_isotypic(s2: &DeltaContext) -> Outcome {
    let model = OddModel::new(&s2.beta, s2.tau).map_err(|e| e.to_string())?;
    let k = congruence_elements(1, s2.beta.pp(), 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(k.len() == 729, "|G(p/p^3)|")?;
    let m = s2.beta.cyc_order();
    for th in &s2.thetas {
        let rho = model.rho_from_theta(th, &s2.torus).map_err(|e| e.to_string())?;
        let norm = model.verify_isotypic(&rho, &k).map_err(|e| e.to_string())?;
        ensure(norm == Rat::from_integer(9), format!("induced norm {norm}"))?;
        let omega = GroupChar {
            order: m,
            values: k.elems().iter().map(|h| model.omega_beta_rho(&rho, h).unwrap().trace()).collect(),
        };
        ensure(omega.values[0] == Cyc::from_int(m, 3), "degree of chi_omega")?;
        let n1 = inner_product_exact(&omega, &omega).map_err(|e| e.to_string())?;
        ensure(n1 == Rat::from_integer(1), format!("chi_omega norm {n1}"))?;
    }
    Ok(format!("{} rho: <Ind,Ind> = 9, chi_omega norm 1, degree 3", s2.thetas.len()))
}

fn c5_heisenberg(s2: &DeltaContext) -> Outcome {
    let mut law_pairs = 0;
    for p in [3u64, 5] {
        let b = canonical(1, p, 3);
        let model = OddModel::new(&b, Tau::standard()).map_err(|e| e.to_string())?;
        let h = model.heis();
        let one = Cyc::one(h.order());
        let pts = h.all_points();
        let ops: Vec<HeisOp> = pts.iter().map(|u| h.op(u, &one)).collect();
        for (i, u) in pts.iter().enumerate() {
            for (j, v) in pts.iter().enumerate() {
                let (w, c) = h.product(u, &one, v, &one);
                ensure(ops[i].mul(&ops[j]) == h.op(&w, &c), format!("group law at p={p}"))?;
                law_pairs += 1;
            }
        }
    }
    let model = OddModel::new(&s2.beta, s2.tau).map_err(|e| e.to_string())?;
    let k = congruence_elements(1, s2.beta.pp(), 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let rho = model.rho_from_theta(&s2.thetas[0], &s2.torus).map_err(|e| e.to_string())?;
    let ops: Vec<HeisOp> = k.elems().iter().map(|h| model.omega_beta_rho(&rho, h).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    const PAIRS: usize = 10_000;
    for _ in 0..PAIRS {
        let (i, j) = (rng.gen_range(0..k.len()), rng.gen_range(0..k.len()));
        let prod = k.index_of(&k.get(i).mul(k.get(j))).unwrap();
        ensure(ops[i].mul(&ops[j]) == ops[prod], "omega_{beta,rho} homomorphism")?;
    }
    let h = model.heis();
    let lift = WeilLift::new(h, &s2.torus).map_err(|e| e.to_string())?;
    let one = Cyc::one(h.order());
    let space = h.space();
    let mut checks = 0;
    for t in s2.torus.elems() {
        let s = space.action(t).map_err(|e| e.to_string())?;
        let om = lift.omega(t).map_err(|e| e.to_string())?;
        for u in h.all_points() {
            let us = apply(&s, &u, 3);
            ensure(h.op(&u, &one).mul(om) == om.mul(&h.op(&us, &one)), "Omega intertwining")?;
            checks += 1;
        }
    }
    Ok(format!("{law_pairs} law pairs, {PAIRS} homomorphism pairs, {checks} intertwining checks"))
}

fn c6_fixed(contexts: &[(&str, &DeltaContext)]) -> Outcome {
    let mut parts = Vec::new();
    for (name, c) in contexts {
        let r = c.beta.pp().r();
        let u1 = level_part(&unipotent_elements(1, c.beta.pp(), 1).map_err(|e| e.to_string())?, r - 1);
        ensure(u1.len() as u64 == c.beta.pp().p(), "|U_1(p^{r-1}/p^r)| = p")?;
        for th in &c.thetas {
            let d = c.delta_character(th).map_err(|e| e.to_string())?;
            let f = fixed_dim(&c.group, &d, &u1).map_err(|e| e.to_string())?;
            ensure(f == 0, format!("{name}: fixed dim {f}"))?;
        }
        parts.push(format!("{name}: 0 for {} thetas", c.thetas.len()));
    }
    Ok(parts.join("; "))
}

/// `psi_{beta'} = chi_r` on `U(p^l/p^r)` by integer arithmetic only: for
/// `h = [[1, p^l x], [0, 1]]` compare `B(X, beta') p^l` with `p^l x` mod `p^r`.
fn witness_oracle(beta: &MatZq, p: u64, r: u32) -> bool {
    let l = r.div_ceil(2);
    let lp = r - l;
    let (q, ql, qlp) = (p.pow(r), p.pow(l), p.pow(lp));
    (0..p.pow(lp)).all(|x| {
        // X = [[0, x], [0, 0]], B(X, beta') = x beta'[1][0]
        let b = x * beta.get(1, 0) % qlp;
        b * ql % q == x * ql % q
    })
}

fn c7_generic(s1: &DeltaContext, s2: &DeltaContext) -> Outcome {
    let start = Instant::now();
    ensure(even_criterion(&s1.beta, s1.tau).map_err(|e| e.to_string())?, "even criterion at S1")?;
    let k = congruence_elements(1, s2.beta.pp(), 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let odd = odd_criterion(&s2.beta, s2.tau, Some(&k)).map_err(|e| e.to_string())?;
    let w = odd.witness.clone().ok_or("no witness")?;
    let g = MatZq::from_fn(2, s2.beta.pp(), |i, j| w[2 * i + j] as i64);
    let moved = sprep::sympcore::ad(&g, s2.beta.beta());
    ensure(odd.holds && witness_oracle(&moved, 3, 3), "odd criterion witness")?;
    let mut dims = Vec::new();
    for (name, c) in [("S1", s1), ("S2", s2)] {
        let pp = c.beta.pp();
        let u = unipotent_elements(1, pp, 0).map_err(|e| e.to_string())?;
        let xr = chi_r(1, pp, c.tau, c.beta.cyc_order());
        for th in &c.thetas {
            let d = c.delta_character(th).map_err(|e| e.to_string())?;
            let hd = hom_dim(&c.group, &d, &u, &xr).map_err(|e| e.to_string())?;
            ensure(hd >= 1, format!("{name}: hom_dim {hd}"))?;
            dims.push(hd);
            for e in valuation_scan(c, &d).map_err(|e| e.to_string())? {
                ensure((e.hom_dim > 0) == (e.depth == pp.r()), format!("{name}: scan {e:?}"))?;
            }
            let mk = mackey_crosscheck(c, th).map_err(|e| e.to_string())?;
            ensure(mk.direct == mk.mackey && mk.direct == hd, "Mackey")?;
        }
    }
    let el = start.elapsed();
    ensure(el < GENERIC_LIMIT, format!("took {el:?}"))?;
    dims.sort_unstable();
    dims.dedup();
    Ok(format!("criteria hold, hom_dim(chi_r) in {dims:?}, scan nonzero only at v = r; {el:.1?}"))
}

/// Template check written out entry by entry.
fn template_oracle(b: &MatZq) -> bool {
    let n = b.dim() / 2;
    (0..n).all(|i| {
        (0..n).all(|j| {
            let a = b.get(i, j);
            let a_ok = if i == j + 1 { a == 1 } else if i > j + 1 { a == 0 } else { true };
            a_ok && b.get(n + i, j) == u64::from(i == 0 && j == n - 1)
        })
    })
}

fn c8_canonical() -> Outcome {
    let mut count = 0;
    for (p, r) in [(3u64, 2u32), (3, 3)] {
        let z = pp(p, r);
        let b = BetaDatum::new(MatZq::from_rows(&[vec![0, 1], vec![2, 0]], z)).unwrap();
        let g = canonicalize_beta(&b).map_err(|e| e.to_string())?;
        ensure(g.is_symplectic() && template_oracle(b.conjugate(&g).unwrap().beta()), format!("p={p} r={r}"))?;
        count += 1;
    }
    for seed in 0..5 {
        let b = find_beta(2, pp(3, 1), BetaMode::Random(seed)).map_err(|e| e.to_string())?;
        let g = canonicalize_beta(&b).map_err(|e| e.to_string())?;
        ensure(g.is_symplectic() && template_oracle(b.conjugate(&g).unwrap().beta()), format!("n=2 seed {seed}"))?;
        count += 1;
    }
    Ok(format!("{count} conjugations match the template"))
}

fn c9_structural() -> Outcome {
    let b = canonical(2, 3, 2);
    let t = torus_elements(&b, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let t_kernel = t.elems().iter().filter(|x| x.in_level(1)).count() as u128;
    let t = t.len() as u128;
    let g = group_order_oracle(2, 3, 2);
    let g_kernel = 3u128.pow(10);
    // |H| = |T| |G(p/p^2)| / |T cap G(p/p^2)|, sigma is one-dimensional at even r
    let index = g * t_kernel / (t * g_kernel);
    let formula = degree_formula(2, 3, 2);
    let lib = sprep::repbuild::dim_delta(2, 3, 2).map_err(|e| e.to_string())?;
    ensure(formula == Rat::from_integer(index as i64), format!("formula {formula} vs index {index}"))?;
    ensure(lib == index, format!("dim_delta {lib}"))?;
    Ok(format!("|T(Z/9)| = {t}, index = {index} = formula = dim_delta"))
}

fn random_group_element(n: usize, z: PrimePower, rng: &mut ChaCha8Rng) -> MatZq {
    let gens = generators(n, z);
    (0..40).fold(MatZq::identity(2 * n, z), |acc, _| {
        let s = gens[rng.gen_range(0..gens.len())].mat();
        acc.mul(&s.pow(rng.gen_range(1..z.q())))
    })
}

fn random_matrix(d: usize, z: PrimePower, rng: &mut ChaCha8Rng) -> MatZq {
    let rows: Vec<Vec<i64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(0..z.q() as i64)).collect()).collect();
    MatZq::from_rows(&rows, z)
}

fn c10_robustness(s2: &DeltaContext) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut samples = 0;
    for (n, p, r) in [(1usize, 3u64, 3u32), (1, 5, 2), (2, 3, 2), (2, 5, 1)] {
        let z = pp(p, r);
        for _ in 0..25 {
            let x = random_matrix(2 * n, z, &mut rng);
            ensure(charpoly(&x).eval_matrix(&x).is_zero(), "Cayley-Hamilton")?;
            let g = random_group_element(n, z, &mut rng);
            ensure(charpoly(&sprep::sympcore::ad(&g, &x)) == charpoly(&x), "charpoly conjugation")?;
            let y = random_matrix(2 * n, z, &mut rng);
            ensure(
                trace_form(&sprep::sympcore::ad(&g, &x), &sprep::sympcore::ad(&g, &y)) == trace_form(&x, &y),
                "trace form invariance",
            )?;
            samples += 1;
        }
    }
    for (p, r) in [(3u64, 2u32), (3, 3), (5, 2)] {
        for twist in 2..p {
            let mut cfg = RunConfig::new(1, p, r, RunConfig::all_suites(1, r));
            cfg.tau_twist = twist;
            if p == 5 {
                cfg.suites.retain(|s| *s != Suite::Genericity);
            }
            let rep = run(&cfg).map_err(|e| e.to_string())?;
            ensure(rep.passed, format!("verdicts change under twist {twist} at p={p} r={r}"))?;
        }
    }
    let model = OddModel::new(&s2.beta, s2.tau).map_err(|e| e.to_string())?;
    let rho = model.rho_from_theta(&s2.thetas[3], &s2.torus).map_err(|e| e.to_string())?;
    let space = ResidueSympSpace::new(&s2.beta).map_err(|e| e.to_string())?;
    let k = congruence_elements(1, s2.beta.pp(), 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    for start in [vec![vec![1, 1], vec![0, 2]], vec![vec![0, 1], vec![1, 0]], vec![vec![2, 1], vec![1, 1]]] {
        let pol = polarize_from(&space, start).map_err(|e| e.to_string())?;
        let alt = OddModel::with_polarization(&s2.beta, s2.tau, space.clone(), pol);
        for h in k.elems() {
            let a = model.omega_beta_rho(&rho, h).unwrap().trace();
            let b = alt.omega_beta_rho(&rho, h).unwrap().trace();
            ensure(a == b, "polarization dependence")?;
        }
    }
    Ok(format!("{samples} matrix samples, twisted runs at S1/S2/S1', 3 polarizations"))
}

fn main() {
    let s1 = ctx(3, 2);
    let s2 = ctx(3, 3);
    let s1p = ctx(5, 2);
    let all = [("S1", &s1), ("S2", &s2), ("S1'", &s1p)];
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("order formulas", Box::new(c1_orders)),
        ("Clifford dimension", Box::new(|| c2_dimension(&all))),
        ("irreducibility and injectivity", Box::new(|| c3_norms(&[("S1", &s1), ("S2", &s2)]))),
        ("isotypic decomposition at S2", Box::new(|| c4_isotypic(&s2))),
        ("Heisenberg and Schrodinger laws", Box::new(|| c5_heisenberg(&s2))),
        ("no U_1(p^{r-1}) fixed vectors", Box::new(|| c6_fixed(&all))),
        ("genericity", Box::new(|| c7_generic(&s1, &s2))),
        ("canonical form", Box::new(c8_canonical)),
        ("structural n = 2 dimension", Box::new(c9_structural)),
        ("robustness properties", Box::new(|| c10_robustness(&s2))),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS {title}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL {title}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
