//! The acceptance suite as a library: ten seeded property suites with a
//! machine-readable report. Used by `corrlab selftest`, the FFI layer and the
//! `acceptance` test target.

use std::cell::RefCell;
use std::time::Instant;

use serde::Serialize;

use crate::bicat::{corner_embedding, gamma_multiplicativity, left_action_hom, morita_inverse_of_corner, u_of_corr};
use crate::error::Result;
use crate::extension::k0::{integer_inverse, k0_of_corr, k0_of_hom, IntMat, K0Functor, K0Homotopy, K0Nerve};
use crate::extension::ncorr::{GammaFunctor, NCorrOracle};
use crate::extension::relative::extend_relative;
use crate::extension::{extend_bar_g, Engine, FillKind};
use crate::hilbert::{identity_corr, tensor};
use crate::nerve::{fill_inner_horn, gamma_simplex, CstSimplex, HornSpec, NCorrSimplex};
use crate::random::{self, Limits, TestRng};
use crate::subdivision::{simplicial_identity_report, SubdivisionFunctor, MAX_N};

/// Parameters of a run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Config {
    pub seed: u64,
    /// Residual threshold for the numerical suites.
    pub eps: f64,
    /// Runs a tenth of the cases (at least one per suite).
    pub quick: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            eps: crate::linalg::EPS,
            quick: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseRecord {
    pub suite: String,
    pub case: String,
    /// Largest residual of the case; for exact suites, the number of
    /// mismatching entries. `None` when the case could not be evaluated.
    pub residual: Option<f64>,
    pub passed: bool,
    pub time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRecord {
    pub id: usize,
    pub suite: String,
    pub description: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub max_residual: Option<f64>,
    pub time_ms: f64,
    pub time_limit_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub eps: f64,
    pub quick: bool,
    pub passed: bool,
    pub suites: Vec<SuiteRecord>,
    pub cases: Vec<CaseRecord>,
}

/// Names, descriptions and time limits of the ten suites.
pub const SUITES: [(&str, &str, Option<f64>); 10] = [
    (
        "gamma_multiplicativity",
        "Γφ ⊗ Γψ ≅ Γ(ψ∘φ) for 200 random composable pairs",
        Some(30.0),
    ),
    ("nerve_coherence", "Γ-images of 100 random 3-chains satisfy every pentagon", Some(60.0)),
    (
        "subdivision_functoriality",
        "f_TU ∘ f_ST = f_SU for 50 random simplices of dimension ≤ 3",
        Some(120.0),
    ),
    ("u_lemma", "E ⊗ Γ(i_E) ≅ Γ(f_E) for 100 random correspondences", None),
    (
        "morita_inverse",
        "both composites with the corner quasi-inverse are identities, 50 modules",
        None,
    ),
    ("horn_uniqueness", "refilling inner faces of 50 3-simplices recovers them", None),
    (
        "k0_extension",
        "F̄ with the K₀ oracle on 50 edges and 20 triangles equals K₀ of the bimodules",
        Some(120.0),
    ),
    ("section_property", "guided F̄ ∘ Γ = Γ on random finite diagrams", None),
    ("relative_extension", "H extends h and ∂H over Δ¹ on 10 random instances", None),
    (
        "combinatorics",
        "simplicial identities of ĈSd(Δⁿ), n ≤ 3, ℓ ≤ 4, and the n = 2 fill sequence",
        None,
    ),
];

struct Suite<'c> {
    id: usize,
    cfg: &'c Config,
    cases: Vec<CaseRecord>,
}

impl<'c> Suite<'c> {
    fn new(id: usize, cfg: &'c Config) -> Self {
        Suite {
            id,
            cfg,
            cases: Vec::new(),
        }
    }

    fn rng(&self) -> TestRng {
        random::rng(self.cfg.seed.wrapping_mul(1_000_003).wrapping_add(self.id as u64))
    }

    fn count(&self, full: usize) -> usize {
        if self.cfg.quick {
            full.div_ceil(10)
        } else {
            full
        }
    }

    /// Runs one case whose closure returns `(residual, detail)`; the case
    /// passes when the residual is at most `tol`.
    fn case(&mut self, name: String, tol: f64, f: impl FnOnce() -> Result<(f64, Option<String>)>) {
        let t = Instant::now();
        let out = f();
        let time_ms = t.elapsed().as_secs_f64() * 1e3;
        let (residual, passed, detail) = match out {
            Ok((r, d)) => (Some(r), r <= tol, d),
            Err(e) => (None, false, Some(e.to_string())),
        };
        self.cases.push(CaseRecord {
            suite: SUITES[self.id - 1].0.to_string(),
            case: name,
            residual,
            passed,
            time_ms,
            detail,
        });
    }

    fn float_case(&mut self, name: String, f: impl FnOnce() -> Result<f64>) {
        let eps = self.cfg.eps;
        self.case(name, eps, || f().map(|r| (r, None)))
    }

    fn exact_case(&mut self, name: String, f: impl FnOnce() -> Result<(f64, Option<String>)>) {
        self.case(name, 0.0, f)
    }
}

fn mismatches(a: &IntMat, b: &IntMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::from(u32::MAX);
    }
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count() as f64
}

fn small() -> Limits {
    Limits {
        max_blocks: 2,
        max_size: 3,
    }
}

fn tiny() -> Limits {
    Limits {
        max_blocks: 2,
        max_size: 2,
    }
}

fn suite_1(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(200) {
        let unital = idx % 2 == 0;
        let chain = random::random_chain(&mut r, 2, Limits::default(), unital);
        s.float_case(format!("pair {idx}"), || {
            Ok(gamma_multiplicativity(&chain[0], &chain[1])?.residuals().max())
        });
    }
}

fn suite_2(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(100) {
        let chain = random::random_chain(&mut r, 3, small(), idx % 2 == 0);
        s.float_case(format!("chain {idx}"), || {
            let rep = gamma_simplex(&chain)?.pentagon_report_with(true)?;
            Ok(rep.pentagon_residual.max(rep.unit_residual))
        });
    }
}

fn suite_3(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(50) {
        let n = 1 + idx % MAX_N.min(3);
        let gauged = idx % 2 == 1;
        let lim = if n == 3 { tiny() } else { small() };
        let sigma = random::random_simplex(&mut r, n, lim, gauged);
        let kind = if gauged { "hand-built" } else { "Γ-image" };
        s.float_case(format!("{kind} {n}-simplex {idx}"), || {
            let f = SubdivisionFunctor::build(&sigma?)?;
            Ok(f.functoriality_report().max_residual)
        });
    }
}

fn suite_4(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(100) {
        let a = random::random_algebra(&mut r, Limits::default());
        let e = random::random_corr(&mut r, &a, Limits::default());
        s.float_case(format!("correspondence {idx}"), || {
            let e = e?;
            let u = u_of_corr(&e)?;
            // the source really is E ⊗ Γ(i_E)
            let t = tensor(&e, &u.gamma_i.corr)?;
            let shape = t.corr.dist(u.iso.src());
            Ok(u.iso.residuals().max().max(shape))
        });
    }
}

fn suite_5(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(50) {
        let b = random::random_algebra(&mut r, Limits::default());
        let e = random::random_module(&mut r, &b, 3);
        s.float_case(format!("module {idx}"), || {
            let m = morita_inverse_of_corner(&e)?;
            let id_b = identity_corr(e.base());
            let id_k = identity_corr(&m.corner.compacts);
            let r1 = m.gamma_then_inverse.residuals().max().max(m.gamma_then_inverse.dst().dist(&id_b));
            let r2 = m.inverse_then_gamma.residuals().max().max(m.inverse_then_gamma.dst().dist(&id_k));
            Ok(r1.max(r2))
        });
    }
}

fn suite_6(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(50) {
        let sigma = random::random_simplex(&mut r, 3, tiny(), idx % 2 == 1);
        s.float_case(format!("3-simplex {idx}"), || {
            let sigma = sigma?;
            let mut worst: f64 = 0.0;
            for (k, t) in [(1, (0, 2, 3)), (2, (0, 1, 3))] {
                let filled = fill_inner_horn(&HornSpec::of_simplex(&sigma, k)?)?;
                worst = worst.max(filled.iso(t.0, t.1, t.2).dist(sigma.iso(t.0, t.1, t.2)));
                worst = worst.max(filled.dist(&sigma));
            }
            Ok(worst)
        });
    }
}

fn suite_7(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(50) {
        let a = random::random_algebra(&mut r, small());
        let e = random::random_corr(&mut r, &a, small());
        s.exact_case(format!("edge {idx}"), || {
            let e = e?;
            let v = crate::extension::bar_f(&K0Nerve, &K0Functor, &NCorrSimplex::edge(&e)?, None)?;
            let direct = k0_of_corr(&e);
            // the formula K₀(i_E)⁻¹ K₀(f_E), evaluated independently
            let i = k0_of_hom(&corner_embedding(e.module())?);
            let f = k0_of_hom(&left_action_hom(&e)?);
            let formula = integer_inverse(&i).map(|inv| inv * f);
            let mut bad = mismatches(v.map(0, 1), &direct);
            match formula {
                Some(m) => bad += mismatches(&m, &direct),
                None => bad += 1.0,
            }
            Ok((bad, None))
        });
    }
    for idx in 0..s.count(20) {
        let sigma = random::random_simplex(&mut r, 2, tiny(), true);
        s.exact_case(format!("triangle {idx}"), || {
            let sigma = sigma?;
            let v = crate::extension::bar_f(&K0Nerve, &K0Functor, &sigma, None)?;
            v.check()?;
            let bad = [(0, 1), (1, 2), (0, 2)]
                .iter()
                .map(|&(i, j)| mismatches(v.map(i, j), &k0_of_corr(sigma.corr(i, j))))
                .sum();
            Ok((bad, None))
        });
    }
}

/// Every simplex of dimension ≤ 2 of the nerve of a 3-chain diagram,
/// degenerate ones included.
fn diagram_simplices(tau: &CstSimplex) -> Result<Vec<(String, CstSimplex)>> {
    let mut out = Vec::new();
    let n = tau.dim();
    for i in 0..=n {
        let v = tau.apply_map(&[i])?;
        out.push((format!("vertex {i}"), v.clone()));
        out.push((format!("s0 vertex {i}"), v.degeneracy(0)?));
        for j in i + 1..=n {
            let e = tau.apply_map(&[i, j])?;
            out.push((format!("edge {i}{j}"), e.clone()));
            for d in 0..=1 {
                out.push((format!("s{d} edge {i}{j}"), e.degeneracy(d)?));
            }
            for k in j + 1..=n {
                out.push((format!("triangle {i}{j}{k}"), tau.apply_map(&[i, j, k])?));
            }
        }
    }
    Ok(out)
}

fn suite_8(s: &mut Suite) {
    let mut r = s.rng();
    let diagrams = if s.cfg.quick { 1 } else { 2 };
    for d in 0..diagrams {
        // four objects and the six arrows f_ij
        let chain = random::random_chain(&mut r, 3, tiny(), d % 2 == 0);
        let simplices = CstSimplex::from_chain(&chain).and_then(|tau| diagram_simplices(&tau));
        let simplices = match simplices {
            Ok(v) => v,
            Err(e) => {
                s.float_case(format!("diagram {d}"), || Err(e));
                continue;
            }
        };
        let mut eng = Engine::with_functor(&NCorrOracle, &GammaFunctor, true);
        for (name, tau) in simplices {
            s.float_case(format!("diagram {d} {name}"), || {
                let g = tau.gamma()?;
                let v = eng.bar_f(&g, Some(&g))?;
                Ok(v.dist(&g))
            });
        }
    }
}

fn suite_9(s: &mut Suite) {
    let mut r = s.rng();
    for idx in 0..s.count(10) {
        let len = 1 + idx % 2;
        let chain = random::random_chain(&mut r, len, tiny(), idx % 3 != 2);
        let scale = if idx % 2 == 0 { -1 } else { 1 };
        let e = random::random_corr_between(&mut r, chain[0].src(), chain[0].dst(), tiny());
        let tri = random::random_simplex(&mut r, 2, tiny(), true);
        s.exact_case(format!("instance {idx} (scale {scale})"), || {
            let tau = CstSimplex::from_chain(&chain)?;
            let family = vec![NCorrSimplex::edge(&e?)?, tri?];
            let h = K0Homotopy { scale };
            let bnd = RefCell::new(Engine::with_functor(&K0Nerve, &K0Functor, false));
            let boundary = |x: &NCorrSimplex, _c: usize| bnd.borrow_mut().bar_f(x, None);
            let mut rel = extend_relative(&K0Nerve, Box::new(h), &boundary, 1, std::slice::from_ref(&tau))?;
            let rep = rel.verify(&h, &boundary, &family, std::slice::from_ref(&tau))?;
            let detail = format!(
                "{} boundary, {} Γ and {} face checks",
                rep.boundary_checked, rep.gamma_checked, rep.faces_checked
            );
            let empty = rep.boundary_checked == 0 || rep.gamma_checked == 0;
            Ok((if empty { 1.0 } else { 0.0 }, Some(detail)))
        });
    }
}

fn suite_10(s: &mut Suite) {
    for n in 0..=MAX_N.min(3) {
        s.exact_case(format!("simplicial identities n = {n}"), || {
            let rep = simplicial_identity_report(n, 4)?;
            let detail = format!(
                "{} simplices, {} identities{}",
                rep.simplices,
                rep.identities_checked,
                rep.failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
            );
            Ok((rep.failures.len() as f64, Some(detail)))
        });
    }
    let mut r = s.rng();
    let sigma = random::random_simplex(&mut r, 2, tiny(), true);
    s.exact_case("fill sequence n = 2".into(), || {
        let (_, trace) = extend_bar_g(&K0Nerve, &K0Functor, &sigma?, None)?;
        let top: Vec<_> = trace.iter().filter(|t| t.simplex_dim == 2).collect();
        let seq: Vec<String> = top
            .iter()
            .map(|t| format!("{}:{:?}", t.horn, t.kind))
            .collect();
        let ok = top.len() == 4
            && top[..3].iter().all(|t| t.horn == "Λ^3_2" && t.kind == FillKind::Inner)
            && top[3].horn == "Λ^3_3"
            && top[3].kind == FillKind::Special;
        Ok((if ok { 0.0 } else { 1.0 }, Some(seq.join(", "))))
    });
}

/// Runs suite `id` (1-based).
pub fn run_suite(id: usize, cfg: &Config) -> (SuiteRecord, Vec<CaseRecord>) {
    assert!((1..=SUITES.len()).contains(&id), "suite ids run from 1 to {}", SUITES.len());
    let t = Instant::now();
    let mut s = Suite::new(id, cfg);
    match id {
        1 => suite_1(&mut s),
        2 => suite_2(&mut s),
        3 => suite_3(&mut s),
        4 => suite_4(&mut s),
        5 => suite_5(&mut s),
        6 => suite_6(&mut s),
        7 => suite_7(&mut s),
        8 => suite_8(&mut s),
        9 => suite_9(&mut s),
        _ => suite_10(&mut s),
    }
    let time_ms = t.elapsed().as_secs_f64() * 1e3;
    let (name, desc, limit) = SUITES[id - 1];
    let failures = s.cases.iter().filter(|c| !c.passed).count();
    let max_residual = s
        .cases
        .iter()
        .filter_map(|c| c.residual)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let in_time = limit.is_none_or(|l| time_ms <= l * 1e3);
    let rec = SuiteRecord {
        id,
        suite: name.to_string(),
        description: desc.to_string(),
        passed: failures == 0 && in_time && !s.cases.is_empty(),
        cases: s.cases.len(),
        failures,
        max_residual,
        time_ms,
        time_limit_s: limit,
    };
    (rec, s.cases)
}

pub fn run_all(cfg: &Config) -> Report {
    let mut suites = Vec::new();
    let mut cases = Vec::new();
    for id in 1..=SUITES.len() {
        let (rec, cs) = run_suite(id, cfg);
        suites.push(rec);
        cases.extend(cs);
    }
    Report {
        seed: cfg.seed,
        eps: cfg.eps,
        quick: cfg.quick,
        passed: suites.iter().all(|s| s.passed),
        suites,
        cases,
    }
}
