//! Extending `G: Sd(Δⁿ) → D` to `Ḡ: ĈSd(Δⁿ) → D` by horn filling, the
//! induced `F̄` on simplices of the correspondence nerve, and the relative
//! version over `Δ¹`.
//!
//! The target quasi-category is abstract ([`QuasiCategory`]); two concrete
//! targets live in [`k0`] (the nerve of free abelian groups, reached through
//! K₀) and [`ncorr`] (the correspondence nerve itself, reached through Γ).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cstar::StarHom;
use crate::error::{Error, Result};
use crate::nerve::{codegeneracy, CstSimplex, NCorrSimplex};
use crate::subdivision::{
    elements, enumerate_csd, full_set, max_of, phi_star, subdivision_functor, AugChain, CsdVertex, Subset,
    SubdivisionFunctor, MAX_N,
};

pub mod k0;
pub mod ncorr;
pub mod relative;

/// A horn `Λⁿ_k` in a target quasi-category: every face but the `k`-th.
#[derive(Clone, Debug)]
pub struct Horn<S> {
    pub n: usize,
    pub k: usize,
    pub faces: Vec<Option<S>>,
}

impl<S> Horn<S> {
    pub fn label(&self) -> String {
        format!("Λ^{}_{}", self.n, self.k)
    }

    pub fn is_inner(&self) -> bool {
        self.k > 0 && self.k < self.n
    }
}

/// What the extension engine needs from a target quasi-category.
pub trait QuasiCategory {
    type Simplex: Clone + fmt::Debug;
    /// Proof that an edge is an equivalence, consumed by special fills.
    type Certificate: Clone + fmt::Debug;

    fn name(&self) -> &'static str;
    /// Largest horn dimension the oracle can fill.
    fn max_fill_dim(&self) -> usize;
    fn dim(&self, s: &Self::Simplex) -> usize;
    fn face(&self, s: &Self::Simplex, i: usize) -> Result<Self::Simplex>;
    fn degeneracy(&self, s: &Self::Simplex, i: usize) -> Result<Self::Simplex>;
    fn equal(&self, a: &Self::Simplex, b: &Self::Simplex) -> bool;
    fn fill_inner(&self, horn: &Horn<Self::Simplex>) -> Result<Self::Simplex>;
    /// Fills `Λⁿ_n` whose last edge is certified to be an equivalence.
    fn fill_special_outer(&self, horn: &Horn<Self::Simplex>, cert: &Self::Certificate) -> Result<Self::Simplex>;
    fn is_equivalence(&self, edge: &Self::Simplex) -> Option<Self::Certificate>;
    /// A filler whose missing face is `preferred`, if there is one.
    fn guided_fill(&self, _horn: &Horn<Self::Simplex>, _preferred: &Self::Simplex) -> Option<Self::Simplex> {
        None
    }
    /// Short human-readable identifier of a certificate, for traces.
    fn describe(&self, cert: &Self::Certificate) -> String {
        format!("{cert:?}")
    }
}

/// A simplicial map `N Cst₊ → D` that sends corner embeddings to
/// equivalences.
pub trait CstFunctor<D: QuasiCategory> {
    fn apply(&self, oracle: &D, s: &CstSimplex) -> Result<D::Simplex>;
    /// Certificate that `F(φ)` is an equivalence; `φ` is a corner embedding.
    fn certify(&self, oracle: &D, phi: &StarHom) -> Result<D::Certificate>;
}

/// A simplicial map `h: N Cst₊ × Δᵐ → D`, given on simplices `(τ, s₂)` with
/// `s₂: [n] → [m]` weakly increasing.
pub trait Homotopy<D: QuasiCategory> {
    fn at(&self, oracle: &D, tau: &CstSimplex, s2: &[usize]) -> Result<D::Simplex>;
    /// Certificate for `h(φ, const level)` with `φ` a corner embedding.
    fn certify(&self, oracle: &D, phi: &StarHom, level: usize) -> Result<D::Certificate>;
}

/// A functor seen as the constant homotopy.
pub struct Constant<'a, D: QuasiCategory>(pub &'a dyn CstFunctor<D>);

impl<D: QuasiCategory> Homotopy<D> for Constant<'_, D> {
    fn at(&self, oracle: &D, tau: &CstSimplex, _s2: &[usize]) -> Result<D::Simplex> {
        self.0.apply(oracle, tau)
    }

    fn certify(&self, oracle: &D, phi: &StarHom, _level: usize) -> Result<D::Certificate> {
        self.0.certify(oracle, phi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FillKind {
    Inner,
    Special,
    Guided,
}

/// One horn fill performed by the engine.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    /// Dimension of the simplex whose `Ḡ` was being built.
    pub simplex_dim: usize,
    /// Its coordinate in `Δᵐ` (all zeros outside relative runs).
    pub s2: Vec<usize>,
    pub chain: String,
    pub horn: String,
    pub k: usize,
    pub ell: usize,
    pub kind: FillKind,
    pub certificate: Option<String>,
}

/// `Ḡ` on all nondegenerate simplices of `ĈSd(Δⁿ)`.
#[derive(Clone, Debug)]
pub struct BarG<S> {
    pub n: usize,
    pub values: BTreeMap<AugChain, S>,
}

impl<S: Clone> BarG<S> {
    /// Value on any simplex, degenerate ones through the target's
    /// degeneracy maps.
    pub fn value<D: QuasiCategory<Simplex = S>>(&self, oracle: &D, c: &AugChain) -> Result<S> {
        let (core, degs) = c.normalise();
        let mut v = self
            .values
            .get(&core)
            .cloned()
            .ok_or_else(|| Error::CompatibilityViolated {
                chain: core.to_string(),
                face: 0,
            })?;
        for d in degs {
            v = oracle.degeneracy(&v, d)?;
        }
        Ok(v)
    }

    /// `Ḡ(0, 1, …, n)`.
    pub fn top(&self) -> &S {
        let c = AugChain {
            n: self.n,
            entries: (0..=self.n).map(CsdVertex::Point).collect(),
        };
        &self.values[&c]
    }
}

fn nondegenerate_chains(n: usize) -> Result<Vec<AugChain>> {
    let mut out = Vec::new();
    for l in 0..=n + 1 {
        out.extend(enumerate_csd(n, l)?.into_iter().filter(|c| c.is_nondegenerate()));
    }
    Ok(out)
}

/// The largest subset of a chain: `S_ℓ`, or the point set when `k = ℓ`.
fn top_set(c: &AugChain) -> Subset {
    c.entries.iter().fold(0, |m, v| m | v.as_set())
}

/// Preimage of a chain avoiding `m` under the coface `[n-1] → [n]`.
fn pull(c: &AugChain, m: usize) -> AugChain {
    let down = |i: usize| if i > m { i - 1 } else { i };
    let entries = c
        .entries
        .iter()
        .map(|v| match *v {
            CsdVertex::Point(i) => CsdVertex::Point(down(i)),
            CsdVertex::Set(s) => CsdVertex::Set(elements(s).iter().fold(0, |acc, &i| acc | (1 << down(i)))),
        })
        .collect();
    AugChain {
        n: c.n - 1,
        entries,
    }
}

type MemoKey = (u64, Vec<usize>);

/// The horn-filling engine. One engine holds one homotopy (a functor is the
/// constant homotopy) and memoises `Ḡ` per simplex, so values on shared
/// faces are reused rather than rebuilt.
pub struct Engine<'a, D: QuasiCategory> {
    oracle: &'a D,
    driver: Box<dyn Homotopy<D> + 'a>,
    guided: bool,
    memo: HashMap<MemoKey, Arc<BarG<D::Simplex>>>,
    chains: HashMap<usize, Arc<Vec<AugChain>>>,
    trace: Vec<TraceEntry>,
}

impl<'a, D: QuasiCategory> Engine<'a, D> {
    pub fn with_functor(oracle: &'a D, functor: &'a dyn CstFunctor<D>, guided: bool) -> Self {
        Self::with_homotopy(oracle, Box::new(Constant(functor)), guided)
    }

    pub fn with_homotopy(oracle: &'a D, driver: Box<dyn Homotopy<D> + 'a>, guided: bool) -> Self {
        Engine {
            oracle,
            driver,
            guided,
            memo: HashMap::new(),
            chains: HashMap::new(),
            trace: Vec::new(),
        }
    }

    pub fn oracle(&self) -> &D {
        self.oracle
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// `Ḡ` for `σ`.
    pub fn extend_bar_g(&mut self, sigma: &NCorrSimplex, preferred: Option<&D::Simplex>) -> Result<Arc<BarG<D::Simplex>>> {
        let s2 = vec![0; sigma.dim() + 1];
        self.extend_at(sigma, &s2, preferred)
    }

    /// `F̄(σ) = Ḡ(0, …, n)`.
    pub fn bar_f(&mut self, sigma: &NCorrSimplex, preferred: Option<&D::Simplex>) -> Result<D::Simplex> {
        Ok(self.extend_bar_g(sigma, preferred)?.top().clone())
    }

    /// `Ḡ` for the product simplex `(σ, s₂)`.
    pub fn extend_at(
        &mut self,
        sigma: &NCorrSimplex,
        s2: &[usize],
        preferred: Option<&D::Simplex>,
    ) -> Result<Arc<BarG<D::Simplex>>> {
        let n = sigma.dim();
        if n > MAX_N {
            return Err(Error::DimensionTooLarge { got: n, max: MAX_N });
        }
        if n > 0 && self.oracle.max_fill_dim() < n + 1 {
            return Err(Error::DimensionTooLarge {
                got: n + 1,
                max: self.oracle.max_fill_dim(),
            });
        }
        if s2.len() != n + 1 || s2.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::NotMonotone(s2.to_vec()));
        }
        let key = (sigma.fingerprint(), s2.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let chains = self.chains(n)?;
        let bar = match (0..n).find(|&i| s2[i] == s2[i + 1] && sigma.degenerate_at(i)) {
            Some(i) => self.extend_degenerate(sigma, s2, preferred, i, &chains)?,
            None => self.extend_nondegenerate(sigma, s2, preferred, &chains)?,
        };
        self.check_faces(&bar, &chains)?;
        let bar = Arc::new(bar);
        self.memo.insert(key, bar.clone());
        Ok(bar)
    }

    fn chains(&mut self, n: usize) -> Result<Arc<Vec<AugChain>>> {
        if let Some(c) = self.chains.get(&n) {
            return Ok(c.clone());
        }
        let c = Arc::new(nondegenerate_chains(n)?);
        self.chains.insert(n, c.clone());
        Ok(c)
    }

    /// `σ = s_i τ`: `Ḡ(σ) = Ḡ(τ) ∘ (σ^i)_*`.
    fn extend_degenerate(
        &mut self,
        sigma: &NCorrSimplex,
        s2: &[usize],
        preferred: Option<&D::Simplex>,
        i: usize,
        chains: &[AugChain],
    ) -> Result<BarG<D::Simplex>> {
        let n = sigma.dim();
        let tau = sigma.face(i + 1)?;
        let mut s2_tau = s2.to_vec();
        s2_tau.remove(i + 1);
        let pref = match preferred {
            Some(p) => Some(self.oracle.face(p, i + 1)?),
            None => None,
        };
        let lower = self.extend_at(&tau, &s2_tau, pref.as_ref())?;
        let phi = codegeneracy(n - 1, i);
        let mut values = BTreeMap::new();
        for c in chains {
            let image = phi_star(&phi, n - 1, c)?;
            values.insert(c.clone(), lower.value(self.oracle, &image)?);
        }
        Ok(BarG { n, values })
    }

    fn extend_nondegenerate(
        &mut self,
        sigma: &NCorrSimplex,
        s2: &[usize],
        preferred: Option<&D::Simplex>,
        chains: &[AugChain],
    ) -> Result<BarG<D::Simplex>> {
        let n = sigma.dim();
        let full = full_set(n);
        let sub = subdivision_functor(sigma)?;
        let mut values: BTreeMap<AugChain, D::Simplex> = BTreeMap::new();
        let mut faces: BTreeMap<usize, Arc<BarG<D::Simplex>>> = BTreeMap::new();

        // the subcomplex: S_ℓ ≠ [n] from the faces of σ, k ≤ 0 from G
        for c in chains {
            let top = top_set(c);
            if top != full {
                let m = (0..=n).find(|&m| top & (1 << m) == 0).expect("top is a proper subset");
                if !faces.contains_key(&m) {
                    let face = sigma.face(m)?;
                    let mut s2f = s2.to_vec();
                    s2f.remove(m);
                    let pref = match preferred {
                        Some(p) => Some(self.oracle.face(p, m)?),
                        None => None,
                    };
                    let bar = self.extend_at(&face, &s2f, pref.as_ref())?;
                    faces.insert(m, bar);
                }
                values.insert(c.clone(), faces[&m].value(self.oracle, &pull(c, m))?);
            } else if c.distinct_points() <= 1 {
                values.insert(c.clone(), self.sd_value(&sub, s2, c)?);
            }
        }

        // the recursion over k, then ℓ
        for k in 1..=n {
            for ell in k + 1..=n + 1 {
                for c in chains.iter().filter(|c| {
                    c.k() == k as isize
                        && c.dim() == ell
                        && top_set(c) == full
                        && c.sets().first() == Some(&crate::subdivision::subset(&c.points()))
                }) {
                    let missing = c.face(k + 1)?;
                    if values.contains_key(c) || values.contains_key(&missing) {
                        return Err(Error::CompatibilityViolated {
                            chain: c.to_string(),
                            face: k + 1,
                        });
                    }
                    let mut horn_faces = Vec::with_capacity(ell + 1);
                    for j in 0..=ell {
                        if j == k + 1 {
                            horn_faces.push(None);
                            continue;
                        }
                        let f = c.face(j)?;
                        // faces before the gap lose a point, faces after it lose a set
                        let sound = if j <= k { f.k() < c.k() } else { f.dim() < ell };
                        let v = values.get(&f).filter(|_| sound).ok_or_else(|| Error::OracleFillFailed(format!(
                            "face {j} of {c} is not available before filling"
                        )))?;
                        horn_faces.push(Some(v.clone()));
                    }
                    let horn = Horn {
                        n: ell,
                        k: k + 1,
                        faces: horn_faces,
                    };
                    let (fill, kind, cert) = if horn.is_inner() {
                        (self.oracle.fill_inner(&horn)?, FillKind::Inner, None)
                    } else {
                        // the last edge is G(i_k → S_{k+1}) with i_k = n, a corner embedding
                        let corner = sub.hom(1 << n, full);
                        let cert = self.driver.certify(self.oracle, corner, s2[n])?;
                        let desc = Some(self.oracle.describe(&cert));
                        let guided = match (self.guided, preferred) {
                            (true, Some(p)) => self.oracle.guided_fill(&horn, p),
                            _ => None,
                        };
                        match guided {
                            Some(f) => (f, FillKind::Guided, desc),
                            None => (self.oracle.fill_special_outer(&horn, &cert)?, FillKind::Special, desc),
                        }
                    };
                    for (j, f) in horn.faces.iter().enumerate() {
                        if let Some(f) = f {
                            if !self.oracle.equal(&self.oracle.face(&fill, j)?, f) {
                                return Err(Error::OracleFillFailed(format!(
                                    "{} at {c}: face {j} of the filler differs from the horn",
                                    horn.label()
                                )));
                            }
                        }
                    }
                    self.trace.push(TraceEntry {
                        simplex_dim: n,
                        s2: s2.to_vec(),
                        chain: c.to_string(),
                        horn: horn.label(),
                        k,
                        ell,
                        kind,
                        certificate: cert,
                    });
                    let face = self.oracle.face(&fill, k + 1)?;
                    values.insert(missing, face);
                    values.insert(c.clone(), fill);
                }
            }
        }

        if let Some(c) = chains.iter().find(|c| !values.contains_key(*c)) {
            return Err(Error::CompatibilityViolated {
                chain: c.to_string(),
                face: 0,
            });
        }
        // the values pulled from faces must still restrict to G on Sd
        for c in chains.iter().filter(|c| c.distinct_points() <= 1 && top_set(c) != full) {
            if !self.oracle.equal(&values[c], &self.sd_value(&sub, s2, c)?) {
                return Err(Error::CompatibilityViolated {
                    chain: c.to_string(),
                    face: 0,
                });
            }
        }
        Ok(BarG { n, values })
    }

    fn sd_value(&self, sub: &SubdivisionFunctor, s2: &[usize], c: &AugChain) -> Result<D::Simplex> {
        let sd = c.to_sd().expect("at most one point");
        let tau = sub.apply_chain(&sd)?;
        let s2c: Vec<usize> = sd.sets.iter().map(|&s| s2[max_of(s)]).collect();
        self.driver.at(self.oracle, &tau, &s2c)
    }

    /// Face compatibility of `Ḡ` on every nondegenerate simplex.
    fn check_faces(&self, bar: &BarG<D::Simplex>, chains: &[AugChain]) -> Result<()> {
        for c in chains.iter().filter(|c| c.dim() > 0) {
            let v = &bar.values[c];
            for j in 0..=c.dim() {
                let lhs = self.oracle.face(v, j)?;
                let rhs = bar.value(self.oracle, &c.face(j)?)?;
                if !self.oracle.equal(&lhs, &rhs) {
                    return Err(Error::CompatibilityViolated {
                        chain: c.to_string(),
                        face: j,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `F̄(σ)` with a fresh engine.
pub fn bar_f<D: QuasiCategory>(
    oracle: &D,
    functor: &dyn CstFunctor<D>,
    sigma: &NCorrSimplex,
    preferred: Option<&D::Simplex>,
) -> Result<D::Simplex> {
    Engine::with_functor(oracle, functor, preferred.is_some()).bar_f(sigma, preferred)
}

/// `Ḡ(σ)` with a fresh engine, together with the fill trace.
pub fn extend_bar_g<D: QuasiCategory>(
    oracle: &D,
    functor: &dyn CstFunctor<D>,
    sigma: &NCorrSimplex,
    preferred: Option<&D::Simplex>,
) -> Result<(Arc<BarG<D::Simplex>>, Vec<TraceEntry>)> {
    let mut e = Engine::with_functor(oracle, functor, preferred.is_some());
    let bar = e.extend_bar_g(sigma, preferred)?;
    Ok((bar, e.trace))
}

#[cfg(test)]
mod tests {
    use super::k0::{k0_of_corr, k0_of_hom, integer_inverse, K0Functor, K0Homotopy, K0Nerve, K0Simplex};
    use super::ncorr::{GammaFunctor, NCorrOracle};
    use super::relative::extend_relative;
    use super::*;
    use crate::bicat::{corner_embedding, find_iso, left_action_hom};
    use crate::hilbert::Correspondence;
    use crate::nerve::{fill_inner_horn, gamma_simplex, HornSpec};
    use crate::random::{random_algebra, random_chain, random_corr, random_corr_between, rng, Limits};

    fn small() -> Limits {
        Limits {
            max_blocks: 2,
            max_size: 2,
        }
    }

    /// A 2-simplex with non-Γ edges: `E_02 = E_01 ⊗ E_12` by an inner fill.
    fn corr_triangle(seed: u64) -> NCorrSimplex {
        let mut r = rng(seed);
        let a = random_algebra(&mut r, small());
        let e01 = random_corr(&mut r, &a, small()).unwrap();
        let e12 = random_corr(&mut r, e01.dst(), small()).unwrap();
        let h = HornSpec {
            n: 2,
            k: 1,
            faces: vec![
                Some(NCorrSimplex::edge(&e12).unwrap()),
                None,
                Some(NCorrSimplex::edge(&e01).unwrap()),
            ],
        };
        fill_inner_horn(&h).unwrap()
    }

    fn expected_edge(e: &Correspondence) -> super::k0::IntMat {
        let i = corner_embedding(e.module()).unwrap();
        let f = left_action_hom(e).unwrap();
        integer_inverse(&k0_of_hom(&i)).unwrap() * k0_of_hom(&f)
    }

    #[test]
    fn k0_on_edges() {
        let mut r = rng(31);
        for _ in 0..10 {
            let a = random_algebra(&mut r, small());
            let e = random_corr(&mut r, &a, small()).unwrap();
            let v = bar_f(&K0Nerve, &K0Functor, &NCorrSimplex::edge(&e).unwrap(), None).unwrap();
            assert_eq!(v.map(0, 1), &expected_edge(&e));
            assert_eq!(v.map(0, 1), &k0_of_corr(&e));
        }
    }

    #[test]
    fn k0_on_a_triangle_and_the_fill_count() {
        let s = corr_triangle(32);
        let (bar, trace) = extend_bar_g(&K0Nerve, &K0Functor, &s, None).unwrap();
        let v = bar.top();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert_eq!(v.map(i, j), &k0_of_corr(s.corr(i, j)));
        }
        let top: Vec<_> = trace.iter().filter(|t| t.simplex_dim == 2).collect();
        assert_eq!(top.len(), 4);
        assert!(top[..3].iter().all(|t| t.horn == "Λ^3_2" && t.kind == FillKind::Inner));
        assert_eq!(top[3].horn, "Λ^3_3");
        assert_eq!(top[3].kind, FillKind::Special);
        // each edge needed one (2,2)-horn
        assert_eq!(trace.iter().filter(|t| t.simplex_dim == 1).count(), 3);
    }

    #[test]
    fn k0_on_gamma_images_is_k0() {
        let chain = random_chain(&mut rng(33), 2, small(), true);
        let tau = CstSimplex::from_chain(&chain).unwrap();
        let v = bar_f(&K0Nerve, &K0Functor, &tau.gamma().unwrap(), None).unwrap();
        assert_eq!(v, super::k0::k0_of_simplex(&tau));
    }

    #[test]
    fn degenerate_simplices_give_degenerate_values() {
        let s = corr_triangle(34);
        let edge = s.face(0).unwrap();
        let mut eng = Engine::with_functor(&K0Nerve, &K0Functor, false);
        let v = eng.bar_f(&edge, None).unwrap();
        for i in 0..=1 {
            let d = eng.bar_f(&edge.degeneracy(i).unwrap(), None).unwrap();
            assert_eq!(d, K0Nerve.degeneracy(&v, i).unwrap());
        }
    }

    #[test]
    fn unguided_gamma_edge_is_isomorphic() {
        let mut r = rng(35);
        let a = random_algebra(&mut r, small());
        let e = random_corr(&mut r, &a, small()).unwrap();
        let v = bar_f(&NCorrOracle, &GammaFunctor, &NCorrSimplex::edge(&e).unwrap(), None).unwrap();
        assert!(find_iso(v.corr(0, 1), &e).is_some());
    }

    #[test]
    fn guided_gamma_is_a_section() {
        let chain = random_chain(&mut rng(36), 2, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let mut eng = Engine::with_functor(&NCorrOracle, &GammaFunctor, true);
        for m in 0..=2 {
            let e = s.face(m).unwrap();
            let v = eng.bar_f(&e, Some(&e)).unwrap();
            assert!(v.dist(&e) <= crate::linalg::EPS, "edge {m}: {}", v.dist(&e));
        }
        let v = eng.bar_f(&s, Some(&s)).unwrap();
        assert!(v.dist(&s) <= crate::linalg::EPS, "triangle: {}", v.dist(&s));
        assert!(eng.trace().iter().any(|t| t.kind == FillKind::Guided));
    }

    #[test]
    fn relative_extension_over_an_interval() {
        let chain = random_chain(&mut rng(37), 2, small(), true);
        let tau = CstSimplex::from_chain(&chain).unwrap();
        let mut r = rng(38);
        let e = random_corr_between(&mut r, tau.algebra(0), tau.algebra(1), small()).unwrap();
        let family = vec![NCorrSimplex::edge(&e).unwrap(), corr_triangle(39)];
        for scale in [1, -1] {
            let h = K0Homotopy { scale };
            let bnd_engine = std::cell::RefCell::new(Engine::with_functor(&K0Nerve, &K0Functor, false));
            let boundary = |s: &NCorrSimplex, _c: usize| bnd_engine.borrow_mut().bar_f(s, None);
            let mut rel = extend_relative(&K0Nerve, Box::new(h), &boundary, 1, std::slice::from_ref(&tau)).unwrap();
            let rep = rel.verify(&h, &boundary, &family, std::slice::from_ref(&tau)).unwrap();
            assert!(rep.boundary_checked > 0 && rep.gamma_checked > 0 && rep.faces_checked > 0);
            if scale == 1 {
                // the degenerate homotopy gives H = F̄ ∘ pr
                let v: K0Simplex = rel.value(&family[1], &[0, 1, 1]).unwrap();
                assert_eq!(v, boundary(&family[1], 0).unwrap());
            }
        }
    }

    #[test]
    fn relative_extension_rejects_a_mismatched_boundary() {
        let chain = random_chain(&mut rng(40), 1, small(), true);
        let tau = CstSimplex::from_chain(&chain).unwrap();
        let h = K0Homotopy { scale: 1 };
        let boundary = |s: &NCorrSimplex, _c: usize| -> Result<K0Simplex> {
            let mut v = bar_f(&K0Nerve, &K0Functor, s, None)?;
            if let Some(m) = v.maps.get_mut(&(0, 1)) {
                *m *= 2;
            }
            Ok(v)
        };
        assert!(matches!(
            extend_relative(&K0Nerve, Box::new(h), &boundary, 1, &[tau]),
            Err(Error::BoundaryMismatch(_))
        ));
    }
}
