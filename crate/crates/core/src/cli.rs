//! Batch driver: run configuration, suites and the JSON report.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactnum::{Cyc, Rat};
use crate::heiswel::{apply, OddModel, WeilLift};
use crate::regular_orbit::{
    build_torus, canonicalize_beta, find_beta, in_canonical_form, torus_elements, torus_order, BetaDatum, BetaFile,
    BetaMode,
};
use crate::repbuild::{
    clifford_multiplicity, dim_delta, export_csv, fixed_dim, inner_product, DeltaContext, GroupChar, Tau,
};
use crate::ringkit::PrimePower;
use crate::sympcore::{
    certify_generators, congruence_elements, enumerate_group, group_order, level_part, unipotent_elements,
    DEFAULT_BUDGET,
};
use crate::whittaker::{chi_r, even_criterion, hom_dim, mackey_crosscheck, odd_criterion, valuation_scan};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BetaSource {
    Canonical,
    Random { seed: u64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSelector {
    All,
    Indices(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Orders,
    Clifford,
    Heisenberg,
    Genericity,
    CanonicalForm,
}

fn default_budget() -> u128 {
    DEFAULT_BUDGET
}

fn default_twist() -> u64 {
    1
}

/// Flat JSON run description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub p: u64,
    pub r: u32,
    #[serde(default = "BetaSource::canonical")]
    pub beta: BetaSource,
    #[serde(default = "ThetaSelector::all")]
    pub thetas: ThetaSelector,
    pub suites: Vec<Suite>,
    #[serde(default = "default_budget")]
    pub budget: u128,
    #[serde(default = "default_twist")]
    pub tau_twist: u64,
    /// Directory for character CSV files; `None` disables export.
    #[serde(default)]
    pub csv_dir: Option<PathBuf>,
    /// Adds wall-clock timings (makes the report run-dependent).
    #[serde(default)]
    pub timings: bool,
}

impl BetaSource {
    fn canonical() -> Self {
        BetaSource::Canonical
    }
}

impl ThetaSelector {
    fn all() -> Self {
        ThetaSelector::All
    }
}

impl RunConfig {
    pub fn new(n: usize, p: u64, r: u32, suites: Vec<Suite>) -> Self {
        RunConfig {
            n,
            p,
            r,
            beta: BetaSource::Canonical,
            thetas: ThetaSelector::All,
            suites,
            budget: DEFAULT_BUDGET,
            tau_twist: 1,
            csv_dir: None,
            timings: false,
        }
    }

    /// Every suite meaningful for the instance.
    pub fn all_suites(n: usize, r: u32) -> Vec<Suite> {
        if n >= 2 {
            return vec![Suite::Orders, Suite::CanonicalForm];
        }
        let mut s = vec![Suite::Orders, Suite::Clifford];
        if r % 2 == 1 {
            s.push(Suite::Heisenberg);
        }
        s.extend([Suite::Genericity, Suite::CanonicalForm]);
        s
    }

    /// Support matrix: `n = 1` runs everything; `n = 2` only formula and
    /// structural suites.
    pub fn validate(&self) -> Result<PrimePower> {
        let pp = PrimePower::new(self.p, self.r)?;
        if self.n == 0 || self.n > 2 {
            return Err(Error::Config(format!("n = {} is outside the support matrix", self.n)));
        }
        if self.tau_twist.is_multiple_of(self.p) {
            return Err(Error::Config("tau twist must be a unit".into()));
        }
        for s in &self.suites {
            let heavy = matches!(s, Suite::Clifford | Suite::Heisenberg | Suite::Genericity);
            if self.n == 2 && heavy {
                return Err(Error::Config(format!("suite {s:?} needs n = 1")));
            }
            if *s == Suite::Heisenberg && self.r.is_multiple_of(2) {
                return Err(Error::UsageParity);
            }
            if *s != Suite::CanonicalForm && self.r < 2 {
                return Err(Error::InvalidLevel(self.r));
            }
        }
        Ok(pp)
    }

    fn tau(&self) -> Tau {
        Tau::twisted(self.tau_twist)
    }
}

/// One asserted quantity, with both sides recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: Value,
    pub expected: Value,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Measurements recorded without an assertion.
    pub recorded: Vec<(String, Value)>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub beta: Option<Vec<u64>>,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
    pub environment: Value,
}

impl Report {
    /// `0` pass, `1` assertion failure, `2` configuration or budget error.
    pub fn exit_code(&self) -> i32 {
        if self.suites.iter().any(|s| s.error.is_some()) {
            2
        } else if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Default)]
struct Sink {
    checks: Vec<Check>,
    recorded: Vec<(String, Value)>,
}

impl Sink {
    fn check(&mut self, name: impl Into<String>, measured: impl Serialize, expected: impl Serialize, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            measured: json!(measured),
            expected: json!(expected),
            passed,
        });
    }

    fn eq<T: Serialize + PartialEq>(&mut self, name: impl Into<String>, measured: T, expected: T) {
        let ok = measured == expected;
        self.check(name, measured, expected, ok);
    }

    fn record(&mut self, name: impl Into<String>, v: impl Serialize) {
        self.recorded.push((name.into(), json!(v)));
    }
}

fn load_beta(cfg: &RunConfig, pp: PrimePower) -> Result<BetaDatum> {
    let b = match &cfg.beta {
        BetaSource::Canonical => find_beta(cfg.n, pp, BetaMode::Canonical)?,
        BetaSource::Random { seed } => find_beta(cfg.n, pp, BetaMode::Random(*seed))?,
        BetaSource::File { path } => BetaDatum::load(path)?,
    };
    if b.n() != cfg.n || b.pp() != pp {
        return Err(Error::Config("beta file does not match (n, p, r)".into()));
    }
    Ok(b)
}

fn rat_json(r: Rat) -> String {
    r.to_string()
}

fn int(c: &Cyc) -> Option<i64> {
    c.to_integer()
}

/// Runs the configured suites in dependency order.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let pp = cfg.validate()?;
    let beta = load_beta(cfg, pp);
    let mut suites = Vec::new();
    let order = [Suite::Orders, Suite::CanonicalForm, Suite::Clifford, Suite::Heisenberg, Suite::Genericity];
    let mut ctx_cache: Option<DeltaContext> = None;
    for suite in order.into_iter().filter(|s| cfg.suites.contains(s)) {
        let start = Instant::now();
        let mut sink = Sink::default();
        let outcome = match &beta {
            Err(e) => Err(Error::Config(e.to_string())),
            Ok(b) => run_suite(suite, cfg, b, &mut sink, &mut ctx_cache),
        };
        let error = outcome.err().map(|e| e.to_string());
        suites.push(SuiteReport {
            suite,
            passed: error.is_none() && sink.checks.iter().all(|c| c.passed),
            checks: sink.checks,
            recorded: sink.recorded,
            error,
            millis: cfg.timings.then(|| start.elapsed().as_millis()),
        });
    }
    let passed = suites.iter().all(|s| s.passed);
    Ok(Report {
        config: cfg.clone(),
        beta: beta.ok().map(|b| b.beta().entries().collect()),
        suites,
        passed,
        environment: json!({
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
        }),
    })
}

fn context<'a>(cfg: &RunConfig, b: &BetaDatum, cache: &'a mut Option<DeltaContext>) -> Result<&'a DeltaContext> {
    if cache.is_none() {
        *cache = Some(DeltaContext::new(b.clone(), cfg.tau(), cfg.budget)?);
    }
    Ok(cache.as_ref().expect("just filled"))
}

fn selected(cfg: &RunConfig, count: usize) -> Result<Vec<usize>> {
    match &cfg.thetas {
        ThetaSelector::All => Ok((0..count).collect()),
        ThetaSelector::Indices(v) => {
            if let Some(bad) = v.iter().find(|&&i| i >= count) {
                return Err(Error::Config(format!("theta index {bad} out of range 0..{count}")));
            }
            Ok(v.clone())
        }
    }
}

fn run_suite(
    suite: Suite,
    cfg: &RunConfig,
    b: &BetaDatum,
    sink: &mut Sink,
    cache: &mut Option<DeltaContext>,
) -> Result<()> {
    let pp = b.pp();
    let (n, p, r) = (cfg.n, cfg.p, cfg.r);
    match suite {
        Suite::Orders => {
            let expected = group_order(n, p, r);
            if expected <= cfg.budget {
                sink.eq("group_order", enumerate_group(n, pp, cfg.budget)?.len() as u128, expected);
            } else {
                sink.eq("generators_certified", certify_generators(n, pp, cfg.budget)?, expected);
            }
            sink.eq("torus_order", torus_elements(b, cfg.budget)?.len() as u128, torus_order(n, p, r));
            let (_, lp) = pp.levels()?;
            let index = group_order(n, p, lp) / torus_order(n, p, lp);
            let sigma_deg = if r % 2 == 0 { 1 } else { (p as u128).pow((n * n) as u32) };
            sink.eq("dim_delta", dim_delta(n, p, r)?, index * sigma_deg);
        }
        Suite::CanonicalForm => {
            let g = canonicalize_beta(b)?;
            let moved = b.conjugate(&g)?;
            sink.eq("conjugator_symplectic", g.is_symplectic(), true);
            sink.eq("template_match", in_canonical_form(moved.beta()), true);
            sink.record("canonical_beta", moved.beta().entries().collect::<Vec<_>>());
        }
        Suite::Clifford => {
            let ctx = context(cfg, b, cache)?;
            let idx = selected(cfg, ctx.thetas.len())?;
            sink.record("theta_count", ctx.thetas.len());
            let dim = dim_delta(n, p, r)? as i64;
            let sigma_deg = if r % 2 == 0 { 1 } else { p.pow((n * n) as u32) };
            let u1 = level_part(&unipotent_elements(n, pp, 1)?, r - 1);
            let mut deltas: Vec<(usize, GroupChar)> = Vec::new();
            for &i in &idx {
                let d = ctx.delta_character(&ctx.thetas[i])?;
                sink.eq(format!("theta[{i}].degree"), int(&d.degree()), Some(dim));
                sink.eq(format!("theta[{i}].clifford_multiplicity"), clifford_multiplicity(ctx, &d)?, sigma_deg);
                sink.eq(format!("theta[{i}].u1_fixed_dim"), fixed_dim(&ctx.group, &d, &u1)?, 0);
                if let Some(dir) = &cfg.csv_dir {
                    std::fs::create_dir_all(dir)?;
                    export_csv(&dir.join(format!("delta_{n}_{p}_{r}_theta{i}.csv")), &ctx.group, &d)?;
                }
                deltas.push((i, d));
            }
            for (a, (i, x)) in deltas.iter().enumerate() {
                for (j, y) in deltas.iter().skip(a) {
                    let expect = Rat::from_integer(i64::from(i == j));
                    let got = inner_product(x, y)?;
                    sink.check(format!("inner[{i},{j}]"), rat_json(got), rat_json(expect), got == expect);
                }
            }
        }
        Suite::Heisenberg => {
            let ctx = context(cfg, b, cache)?;
            let model = OddModel::new(b, cfg.tau())?;
            let (_, lp) = b.levels();
            let kernel = congruence_elements(n, pp, lp, cfg.budget)?;
            let sq = (p as u128).pow((2 * n * n) as u32);
            for i in selected(cfg, ctx.thetas.len())? {
                let rho = model.rho_from_theta(&ctx.thetas[i], &ctx.torus)?;
                let norm = model.verify_isotypic(&rho, &kernel)?;
                sink.eq(format!("theta[{i}].induced_norm"), rat_json(norm), rat_json(Rat::from_integer(sq as i64)));
            }
            let h = model.heis();
            let one = Cyc::one(h.order());
            let pts = h.all_points();
            let mut law = true;
            for u in &pts {
                for v in &pts {
                    let (w, c) = h.product(u, &one, v, &one);
                    law &= h.op(u, &one).mul(&h.op(v, &one)) == h.op(&w, &c);
                }
            }
            sink.eq("heisenberg_group_law", law, true);
            let torus = build_torus(b, cfg.budget)?;
            let lift = WeilLift::new(h, &torus)?;
            let om = lift.omega(lift.generator())?;
            let intertwines = pts.iter().all(|u| {
                let us = apply(lift.generator_action(), u, p);
                h.op(u, &one).mul(om) == om.mul(&h.op(&us, &one))
            });
            sink.eq("weil_intertwining", intertwines, true);
            sink.record("torus_image_order", lift.s_order());
        }
        Suite::Genericity => {
            let ctx = context(cfg, b, cache)?;
            if r % 2 == 0 {
                sink.eq("even_criterion", even_criterion(b, cfg.tau())?, true);
            } else {
                let (_, lp) = b.levels();
                let kernel = congruence_elements(n, pp, lp, cfg.budget)?;
                let res = odd_criterion(b, cfg.tau(), Some(&kernel))?;
                sink.eq("odd_criterion", res.holds, true);
                sink.record("odd_criterion_witness", res.witness);
                sink.record("odd_criterion_satisfied", (res.satisfied, res.scanned));
            }
            let u = unipotent_elements(n, pp, 0)?;
            let xr = chi_r(n, pp, cfg.tau(), b.cyc_order());
            for i in selected(cfg, ctx.thetas.len())? {
                let th = &ctx.thetas[i];
                let d = ctx.delta_character(th)?;
                let hd = hom_dim(&ctx.group, &d, &u, &xr)?;
                sink.check(format!("theta[{i}].hom_dim_chi_r"), hd, ">= 1", hd >= 1);
                let scan = valuation_scan(ctx, &d)?;
                let shallow_zero = scan.iter().filter(|e| e.depth < r).all(|e| e.hom_dim == 0);
                let deep_nonzero = scan.iter().filter(|e| e.depth == r).all(|e| e.hom_dim >= 1);
                sink.eq(format!("theta[{i}].scan_zero_below_r"), shallow_zero, true);
                sink.eq(format!("theta[{i}].scan_nonzero_at_r"), deep_nonzero, true);
                sink.record(format!("theta[{i}].scan"), &scan);
                let m = mackey_crosscheck(ctx, th)?;
                sink.eq(format!("theta[{i}].mackey"), m.mackey, m.direct);
            }
        }
    }
    Ok(())
}

/// Writes the report as pretty JSON.
pub fn write_report(report: &Report, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

/// Saves a [`BetaDatum`] as JSON.
pub fn write_beta(b: &BetaDatum, path: &std::path::Path) -> Result<()> {
    let f: BetaFile = b.to_file();
    std::fs::write(path, serde_json::to_string_pretty(&f)? + "\n")?;
    Ok(())
}
