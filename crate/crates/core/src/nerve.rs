//! Simplices of the Duskin nerve of the proper correspondence bicategory and
//! of the nerve of the category of C*-algebras, with faces, degeneracies,
//! the simplicial map Γ between them, and horn fillers.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bicat::{gamma_multiplicativity_on, gamma_of_hom, EquivalenceWitness, Gamma};
use crate::cstar::{FdCstarAlgebra, StarHom};
use crate::error::{Error, Result};
use crate::hilbert::{
    associator_between, identity_corr, left_unitor_with, right_unitor_with, tensor, tensor_isos_between,
    Correspondence, CorrIso, Tensor,
};
use crate::linalg::{frobenius_diff, CMat, EPS};

pub type Edge = (usize, usize);
pub type Triangle = (usize, usize, usize);

/// Checks that `phi: [m] → [n]` (given by its values) is weakly increasing
/// with values at most `n`.
pub fn check_monotone(phi: &[usize], n: usize) -> Result<()> {
    if phi.is_empty() || phi.windows(2).any(|w| w[0] > w[1]) || phi.iter().any(|&v| v > n) {
        return Err(Error::NotMonotone(phi.to_vec()));
    }
    Ok(())
}

/// The coface `δ_i: [n-1] → [n]`, skipping `i`.
pub fn coface(n: usize, i: usize) -> Vec<usize> {
    (0..=n).filter(|&v| v != i).collect()
}

/// The codegeneracy `σ_i: [n+1] → [n]`, hitting `i` twice.
pub fn codegeneracy(n: usize, i: usize) -> Vec<usize> {
    (0..=n + 1).map(|v| if v <= i { v } else { v - 1 }).collect()
}

/// Residual report of a simplex validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimplexReport {
    pub unit_residual: f64,
    pub pentagon_residual: f64,
    pub worst_pentagon: Option<(usize, usize, usize, usize)>,
    pub pentagons_checked: usize,
}

/// An `n`-simplex `(A_i, E_ij, u_ijk)` of the Duskin nerve.
#[derive(Clone, Debug)]
pub struct NCorrSimplex {
    algebras: Vec<FdCstarAlgebra>,
    corrs: BTreeMap<Edge, Correspondence>,
    isos: BTreeMap<Triangle, CorrIso>,
    tensors: BTreeMap<Triangle, Arc<Tensor>>,
}

/// Raw data before validation; degenerate entries may be omitted and are
/// then filled with the canonical identity correspondences and unitors.
#[derive(Clone, Debug, Default)]
pub struct SimplexData {
    pub algebras: Vec<FdCstarAlgebra>,
    pub corrs: BTreeMap<Edge, Correspondence>,
    /// Unitaries `u_ijk` per base block of `A_k`, in the coordinates of the
    /// canonical tensor product `E_ij ⊗ E_jk`.
    pub unitaries: BTreeMap<Triangle, Vec<CMat>>,
}

fn triangles(n: usize) -> impl Iterator<Item = Triangle> {
    (0..=n).flat_map(move |i| (i..=n).flat_map(move |j| (j..=n).map(move |k| (i, j, k))))
}

/// Strictly increasing quadruples. Pentagons with a repeated index follow
/// from the unit conditions and the coherence of unitors and associators, so
/// validation checks only these.
fn quads(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..=n).flat_map(move |i| {
        (i + 1..=n).flat_map(move |j| (j + 1..=n).flat_map(move |k| (k + 1..=n).map(move |l| (i, j, k, l))))
    })
}

/// Validates raw simplex data: unit conditions and all pentagons.
pub fn validate_simplex(data: SimplexData) -> Result<NCorrSimplex> {
    NCorrSimplex::from_data(data).map(|(s, _)| s)
}

impl NCorrSimplex {
    /// The 0-simplex on `a`.
    pub fn vertex(a: &FdCstarAlgebra) -> Self {
        let data = SimplexData {
            algebras: vec![a.clone()],
            ..Default::default()
        };
        Self::from_data(data).expect("vertices are always valid").0
    }

    /// The 1-simplex given by a single correspondence.
    pub fn edge(e: &Correspondence) -> Result<Self> {
        let mut corrs = BTreeMap::new();
        corrs.insert((0, 1), e.clone());
        let data = SimplexData {
            algebras: vec![e.src().clone(), e.dst().clone()],
            corrs,
            unitaries: BTreeMap::new(),
        };
        Ok(Self::from_data(data)?.0)
    }

    /// Validates and returns the simplex together with its residual report.
    pub fn from_data(data: SimplexData) -> Result<(Self, SimplexReport)> {
        let n = data
            .algebras
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::ShapeMismatch("a simplex needs at least one algebra".into()))?;
        let mut report = SimplexReport::default();
        let mut corrs = BTreeMap::new();
        for i in 0..=n {
            let id = identity_corr(&data.algebras[i]);
            if let Some(given) = data.corrs.get(&(i, i)) {
                let r = given.dist(&id);
                report.unit_residual = report.unit_residual.max(r);
                if r > EPS {
                    return Err(Error::UnitConditionViolated {
                        i,
                        k: i,
                        reason: format!("E_{i}{i} is not the identity correspondence (residual {r:.3e})"),
                    });
                }
            }
            corrs.insert((i, i), id);
            for j in i + 1..=n {
                let e = data
                    .corrs
                    .get(&(i, j))
                    .ok_or_else(|| Error::ShapeMismatch(format!("missing correspondence E_{i}{j}")))?;
                if e.src() != &data.algebras[i] || e.dst() != &data.algebras[j] {
                    return Err(Error::EndpointMismatch(format!("E_{i}{j} has the wrong endpoints")));
                }
                corrs.insert((i, j), e.clone());
            }
        }
        let mut tensors = BTreeMap::new();
        let mut isos = BTreeMap::new();
        for (i, j, k) in triangles(n) {
            let t = Arc::new(tensor(&corrs[&(i, j)], &corrs[&(j, k)])?);
            let canonical = if i == j {
                Some(left_unitor_with(&t)?)
            } else if j == k {
                Some(right_unitor_with(&t)?)
            } else {
                None
            };
            let iso = match (data.unitaries.get(&(i, j, k)), canonical) {
                (Some(us), Some(can)) => {
                    let given = CorrIso::from_blocks(&t.corr, &corrs[&(i, k)], us.clone())?;
                    let r = given.dist(&can);
                    report.unit_residual = report.unit_residual.max(r);
                    if r > EPS {
                        return Err(Error::UnitConditionViolated {
                            i,
                            k,
                            reason: format!("u_{i}{j}{k} is not the canonical unitor (residual {r:.3e})"),
                        });
                    }
                    can
                }
                (None, Some(can)) => can,
                (Some(us), None) => CorrIso::from_blocks(&t.corr, &corrs[&(i, k)], us.clone())?,
                (None, None) => {
                    return Err(Error::ShapeMismatch(format!("missing isomorphism u_{i}{j}{k}")));
                }
            };
            tensors.insert((i, j, k), t);
            isos.insert((i, j, k), iso);
        }
        let s = NCorrSimplex {
            algebras: data.algebras,
            corrs,
            isos,
            tensors,
        };
        let pent = s.pentagon_report()?;
        report.pentagon_residual = pent.pentagon_residual;
        report.worst_pentagon = pent.worst_pentagon;
        report.pentagons_checked = pent.pentagons_checked;
        if let Some((i, j, k, l)) = pent.worst_pentagon {
            if pent.pentagon_residual > EPS {
                return Err(Error::PentagonViolated {
                    i,
                    j,
                    k,
                    l,
                    residual: pent.pentagon_residual,
                });
            }
        }
        Ok((s, report))
    }

    /// Builds from already validated pieces without re-checking pentagons.
    fn from_trusted(
        algebras: Vec<FdCstarAlgebra>,
        corrs: BTreeMap<Edge, Correspondence>,
        isos: BTreeMap<Triangle, CorrIso>,
        tensors: BTreeMap<Triangle, Arc<Tensor>>,
    ) -> Self {
        NCorrSimplex {
            algebras,
            corrs,
            isos,
            tensors,
        }
    }

    /// Hash of the raw coordinates (algebras, left actions, unitaries), used
    /// as a memo key. Equal data gives equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mat = |h: &mut std::collections::hash_map::DefaultHasher, m: &CMat| {
            m.shape().hash(h);
            for z in m.iter() {
                z.re.to_bits().hash(h);
                z.im.to_bits().hash(h);
            }
        };
        for a in &self.algebras {
            a.blocks().hash(&mut h);
        }
        for (key, e) in &self.corrs {
            key.hash(&mut h);
            e.mult().hash(&mut h);
            mat(&mut h, e.left_action().matrix());
        }
        for (key, u) in &self.isos {
            key.hash(&mut h);
            for b in u.blocks() {
                mat(&mut h, b);
            }
        }
        h.finish()
    }

    /// Replaces `u_ijk` by the given blocks with no validation at all.
    pub fn with_iso_unchecked(&self, t: Triangle, blocks: Vec<CMat>) -> Self {
        let mut out = self.clone();
        let old = &self.isos[&t];
        out.isos.insert(t, CorrIso::from_blocks_unchecked(old.src(), old.dst(), blocks));
        out
    }

    pub fn dim(&self) -> usize {
        self.algebras.len() - 1
    }

    pub fn algebra(&self, i: usize) -> &FdCstarAlgebra {
        &self.algebras[i]
    }

    pub fn algebras(&self) -> &[FdCstarAlgebra] {
        &self.algebras
    }

    pub fn corr(&self, i: usize, j: usize) -> &Correspondence {
        &self.corrs[&(i, j)]
    }

    pub fn iso(&self, i: usize, j: usize, k: usize) -> &CorrIso {
        &self.isos[&(i, j, k)]
    }

    /// The canonical `E_ij ⊗ E_jk` that `u_ijk` starts from.
    pub fn tensor(&self, i: usize, j: usize, k: usize) -> &Arc<Tensor> {
        &self.tensors[&(i, j, k)]
    }

    /// Raw data of this simplex, including all degenerate entries.
    pub fn to_data(&self) -> SimplexData {
        SimplexData {
            algebras: self.algebras.clone(),
            corrs: self.corrs.clone(),
            unitaries: self.isos.iter().map(|(&t, u)| (t, u.blocks().to_vec())).collect(),
        }
    }

    /// Pentagon residuals over all `i ≤ j ≤ k ≤ l`.
    pub fn pentagon_report(&self) -> Result<SimplexReport> {
        self.pentagon_report_with(false)
    }

    /// Like [`NCorrSimplex::pentagon_report`]; with `degenerate` set, also
    /// checks the quadruples `i ≤ j ≤ k ≤ l` with repeated indices.
    pub fn pentagon_report_with(&self, degenerate: bool) -> Result<SimplexReport> {
        let n = self.dim();
        let all: Vec<_> = if degenerate {
            triangles(n).flat_map(|(i, j, k)| (k..=n).map(move |l| (i, j, k, l))).collect()
        } else {
            quads(n).collect()
        };
        let mut report = SimplexReport::default();
        for (i, j, k, l) in all {
            let r = self.pentagon_residual(i, j, k, l)?;
            report.pentagons_checked += 1;
            if report.worst_pentagon.is_none() || r > report.pentagon_residual {
                report.pentagon_residual = r;
                report.worst_pentagon = Some((i, j, k, l));
            }
        }
        Ok(report)
    }

    /// `‖u_ijl ∘ (1 ⊗ u_jkl) ∘ assoc − u_ikl ∘ (u_ijk ⊗ 1)‖`.
    pub fn pentagon_residual(&self, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
        let lhs = self.pentagon_lhs(i, j, k, l)?;
        let rhs = self.pentagon_rhs(i, j, k, l)?;
        Ok(blocks_dist(&lhs, &rhs))
    }

    fn pentagon_lhs(&self, i: usize, j: usize, k: usize, l: usize) -> Result<Vec<CMat>> {
        let t_ijk = self.tensor(i, j, k);
        let t_jkl = self.tensor(j, k, l);
        let left = tensor(&t_ijk.corr, self.corr(k, l))?;
        let right = tensor(self.corr(i, j), &t_jkl.corr)?;
        let assoc = associator_between(t_ijk, t_jkl, &left, &right)?;
        let whisker = tensor_isos_between(
            &CorrIso::identity(self.corr(i, j)),
            self.iso(j, k, l),
            &right,
            self.tensor(i, j, l),
        )?;
        Ok(chain(&[self.iso(i, j, l), &whisker, &assoc]))
    }

    fn pentagon_rhs(&self, i: usize, j: usize, k: usize, l: usize) -> Result<Vec<CMat>> {
        let t_ijk = self.tensor(i, j, k);
        let left = tensor(&t_ijk.corr, self.corr(k, l))?;
        let whisker = tensor_isos_between(
            self.iso(i, j, k),
            &CorrIso::identity(self.corr(k, l)),
            &left,
            self.tensor(i, k, l),
        )?;
        Ok(chain(&[self.iso(i, k, l), &whisker]))
    }

    /// Reindexes along a weakly increasing `phi: [m] → [n]`.
    pub fn apply_map(&self, phi: &[usize]) -> Result<NCorrSimplex> {
        check_monotone(phi, self.dim())?;
        let m = phi.len() - 1;
        let algebras = phi.iter().map(|&v| self.algebras[v].clone()).collect();
        let mut corrs = BTreeMap::new();
        for a in 0..=m {
            for b in a..=m {
                corrs.insert((a, b), self.corrs[&(phi[a], phi[b])].clone());
            }
        }
        let mut isos = BTreeMap::new();
        let mut tensors = BTreeMap::new();
        for (a, b, c) in triangles(m) {
            let key = (phi[a], phi[b], phi[c]);
            isos.insert((a, b, c), self.isos[&key].clone());
            tensors.insert((a, b, c), self.tensors[&key].clone());
        }
        Ok(NCorrSimplex::from_trusted(algebras, corrs, isos, tensors))
    }

    pub fn face(&self, i: usize) -> Result<NCorrSimplex> {
        let n = self.dim();
        if n == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        self.apply_map(&coface(n, i))
    }

    pub fn degeneracy(&self, i: usize) -> Result<NCorrSimplex> {
        let n = self.dim();
        if i > n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        self.apply_map(&codegeneracy(n, i))
    }

    /// Largest difference between two simplices of the same shape; infinite
    /// when algebras or multiplicities differ.
    pub fn dist(&self, other: &NCorrSimplex) -> f64 {
        if self.algebras != other.algebras {
            return f64::INFINITY;
        }
        let mut d: f64 = 0.0;
        for (key, e) in &self.corrs {
            d = d.max(e.dist(&other.corrs[key]));
        }
        for (key, u) in &self.isos {
            d = d.max(u.dist(&other.isos[key]));
        }
        d
    }

    /// Whether vertex `i` is repeated, i.e. the simplex is in the image of a
    /// degeneracy. Degeneracy is decided on the nose: identity edge and
    /// unitor triangles.
    pub fn degenerate_at(&self, i: usize) -> bool {
        if i >= self.dim() {
            return false;
        }
        match self.degeneracy_source(i) {
            Some(lower) => lower.degeneracy(i).map(|d| d.dist(self) <= EPS).unwrap_or(false),
            None => false,
        }
    }

    fn degeneracy_source(&self, i: usize) -> Option<NCorrSimplex> {
        if self.algebras[i] != self.algebras[i + 1] {
            return None;
        }
        self.face(i + 1).ok()
    }
}

fn blocks_dist(a: &[CMat], b: &[CMat]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| frobenius_diff(x, y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Blockwise product `u_1 ∘ u_2 ∘ … ∘ u_r` (rightmost applied first).
pub(crate) fn chain(isos: &[&CorrIso]) -> Vec<CMat> {
    let mut acc: Vec<CMat> = isos.last().expect("nonempty").blocks().to_vec();
    for u in isos.iter().rev().skip(1) {
        acc = u.blocks().iter().zip(&acc).map(|(x, y)| x * y).collect();
    }
    acc
}

/// An `n`-simplex of the nerve of C*-algebras: all composites `f_ij` are
/// stored and checked to agree.
#[derive(Clone, Debug)]
pub struct CstSimplex {
    algebras: Vec<FdCstarAlgebra>,
    homs: BTreeMap<Edge, StarHom>,
}

impl CstSimplex {
    pub fn from_chain(phis: &[StarHom]) -> Result<Self> {
        let mut algebras = Vec::with_capacity(phis.len() + 1);
        match phis.first() {
            Some(p) => algebras.push(p.src().clone()),
            None => return Err(Error::ShapeMismatch("empty chain; use CstSimplex::vertex".into())),
        }
        for (idx, p) in phis.iter().enumerate() {
            if p.src() != algebras.last().expect("nonempty") {
                return Err(Error::ShapeMismatch(format!("homomorphism {idx} does not compose")));
            }
            algebras.push(p.dst().clone());
        }
        let n = phis.len();
        let mut homs = BTreeMap::new();
        for i in 0..=n {
            homs.insert((i, i), StarHom::identity(&algebras[i]));
            for j in i + 1..=n {
                let f = if j == i + 1 {
                    phis[i].clone()
                } else {
                    phis[j - 1].compose(&homs[&(i, j - 1)])?
                };
                homs.insert((i, j), f);
            }
        }
        Ok(CstSimplex { algebras, homs })
    }

    pub fn vertex(a: &FdCstarAlgebra) -> Self {
        let mut homs = BTreeMap::new();
        homs.insert((0, 0), StarHom::identity(a));
        CstSimplex {
            algebras: vec![a.clone()],
            homs,
        }
    }

    /// Builds from all `f_ij` and checks `f_ik = f_jk ∘ f_ij`.
    pub fn from_homs(algebras: Vec<FdCstarAlgebra>, mut homs: BTreeMap<Edge, StarHom>) -> Result<Self> {
        let n = algebras.len() - 1;
        for i in 0..=n {
            homs.entry((i, i)).or_insert_with(|| StarHom::identity(&algebras[i]));
        }
        for (i, j, k) in triangles(n) {
            let (f, g, h) = (
                homs.get(&(i, j)).ok_or_else(|| Error::ShapeMismatch(format!("missing f_{i}{j}")))?,
                homs.get(&(j, k)).ok_or_else(|| Error::ShapeMismatch(format!("missing f_{j}{k}")))?,
                homs.get(&(i, k)).ok_or_else(|| Error::ShapeMismatch(format!("missing f_{i}{k}")))?,
            );
            if i == j || j == k {
                continue;
            }
            if f.dst() != g.src() || f.src() != h.src() || g.dst() != h.dst() {
                return Err(Error::ShapeMismatch(format!("f_{i}{j}, f_{j}{k}, f_{i}{k} do not compose")));
            }
            let r = frobenius_diff(&(g.matrix() * f.matrix()), h.matrix());
            if r > EPS {
                return Err(Error::ShapeMismatch(format!(
                    "f_{i}{k} differs from f_{j}{k} ∘ f_{i}{j} by {r:.3e}"
                )));
            }
        }
        Ok(CstSimplex { algebras, homs })
    }

    pub fn dim(&self) -> usize {
        self.algebras.len() - 1
    }

    pub fn algebra(&self, i: usize) -> &FdCstarAlgebra {
        &self.algebras[i]
    }

    pub fn algebras(&self) -> &[FdCstarAlgebra] {
        &self.algebras
    }

    pub fn hom(&self, i: usize, j: usize) -> &StarHom {
        &self.homs[&(i, j)]
    }

    pub fn apply_map(&self, phi: &[usize]) -> Result<CstSimplex> {
        check_monotone(phi, self.dim())?;
        let m = phi.len() - 1;
        let algebras = phi.iter().map(|&v| self.algebras[v].clone()).collect();
        let mut homs = BTreeMap::new();
        for a in 0..=m {
            for b in a..=m {
                homs.insert((a, b), self.homs[&(phi[a], phi[b])].clone());
            }
        }
        Ok(CstSimplex { algebras, homs })
    }

    pub fn face(&self, i: usize) -> Result<CstSimplex> {
        let n = self.dim();
        if n == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        self.apply_map(&coface(n, i))
    }

    pub fn degeneracy(&self, i: usize) -> Result<CstSimplex> {
        self.apply_map(&codegeneracy(self.dim(), i))
    }

    pub fn dist(&self, other: &CstSimplex) -> f64 {
        if self.algebras != other.algebras {
            return f64::INFINITY;
        }
        self.homs
            .iter()
            .map(|(k, f)| f.dist(&other.homs[k]))
            .fold(0.0, f64::max)
    }

    /// `Γ` applied to this simplex: `E_ij = Γ(f_ij)`,
    /// `u_ijk = b ⊗ c ↦ f_jk(b)c`.
    pub fn gamma(&self) -> Result<NCorrSimplex> {
        let n = self.dim();
        let mut gammas: BTreeMap<Edge, Gamma> = BTreeMap::new();
        for (&(i, j), f) in &self.homs {
            if i < j {
                gammas.insert((i, j), gamma_of_hom(f)?);
            }
        }
        let mut corrs = BTreeMap::new();
        for (&(i, j), g) in &gammas {
            corrs.insert((i, j), g.corr.clone());
        }
        let mut unitaries = BTreeMap::new();
        for (i, j, k) in triangles(n) {
            if i < j && j < k {
                let t = tensor(&gammas[&(i, j)].corr, &gammas[&(j, k)].corr)?;
                let u = gamma_multiplicativity_on(&t, &gammas[&(i, j)], &gammas[&(j, k)], &gammas[&(i, k)])?;
                unitaries.insert((i, j, k), u.blocks().to_vec());
            }
        }
        validate_simplex(SimplexData {
            algebras: self.algebras.clone(),
            corrs,
            unitaries,
        })
    }
}

/// `Γ` of a composable chain `φ_1, …, φ_n`.
pub fn gamma_simplex(phis: &[StarHom]) -> Result<NCorrSimplex> {
    CstSimplex::from_chain(phis)?.gamma()
}

/// A horn `Λⁿ_k`: all faces but the `k`-th.
#[derive(Clone, Debug)]
pub struct HornSpec {
    pub n: usize,
    pub k: usize,
    pub faces: Vec<Option<NCorrSimplex>>,
}

impl HornSpec {
    /// The horn obtained from a simplex by forgetting face `k`.
    pub fn of_simplex(s: &NCorrSimplex, k: usize) -> Result<Self> {
        let n = s.dim();
        if n < 2 || k > n {
            return Err(Error::IndexOutOfRange { index: k, dim: n });
        }
        let faces = (0..=n)
            .map(|i| if i == k { Ok(None) } else { s.face(i).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        Ok(HornSpec { n, k, faces })
    }

    pub fn label(&self) -> String {
        format!("Λ^{}_{}", self.n, self.k)
    }
}

/// Everything the horn determines, read off its faces.
struct HornData {
    algebras: Vec<FdCstarAlgebra>,
    corrs: BTreeMap<Edge, Correspondence>,
    unitaries: BTreeMap<Triangle, Vec<CMat>>,
}

fn local(g: usize, m: usize) -> usize {
    if g < m {
        g
    } else {
        g - 1
    }
}

fn assemble(h: &HornSpec, complete: bool) -> Result<HornData> {
    let n = h.n;
    if h.faces.len() != n + 1 || h.k > n || (h.faces[h.k].is_some() && !complete) {
        return Err(Error::ShapeMismatch(format!("malformed horn {}", h.label())));
    }
    for (m, f) in h.faces.iter().enumerate() {
        match f {
            Some(f) if f.dim() != n - 1 => {
                return Err(Error::ShapeMismatch(format!("face {m} has dimension {}", f.dim())))
            }
            None if m != h.k => return Err(Error::ShapeMismatch(format!("face {m} is missing"))),
            _ => {}
        }
    }
    let faces = || h.faces.iter().enumerate().filter_map(|(m, f)| f.as_ref().map(|f| (m, f)));
    let mut algebras: Vec<Option<FdCstarAlgebra>> = vec![None; n + 1];
    let mut corrs: BTreeMap<Edge, Correspondence> = BTreeMap::new();
    let mut unitaries: BTreeMap<Triangle, Vec<CMat>> = BTreeMap::new();
    let mut iso_seen: BTreeMap<Triangle, CorrIso> = BTreeMap::new();
    for (m, f) in faces() {
        for g in (0..=n).filter(|&g| g != m) {
            let a = f.algebra(local(g, m));
            match &algebras[g] {
                Some(prev) if prev != a => {
                    return Err(Error::IncompatibleFaces(format!("vertex {g} differs between faces")))
                }
                _ => algebras[g] = Some(a.clone()),
            }
        }
        for i in (0..=n).filter(|&g| g != m) {
            for j in (i + 1..=n).filter(|&g| g != m) {
                let e = f.corr(local(i, m), local(j, m));
                match corrs.get(&(i, j)) {
                    Some(prev) => {
                        let d = prev.dist(e);
                        if d > EPS {
                            return Err(Error::IncompatibleFaces(format!(
                                "edge ({i}, {j}) differs between faces by {d:.3e}"
                            )));
                        }
                    }
                    None => {
                        corrs.insert((i, j), e.clone());
                    }
                }
                for k in (j + 1..=n).filter(|&g| g != m) {
                    let u = f.iso(local(i, m), local(j, m), local(k, m));
                    match iso_seen.get(&(i, j, k)) {
                        Some(prev) => {
                            let d = prev.dist(u);
                            if d > EPS {
                                return Err(Error::IncompatibleFaces(format!(
                                    "triangle ({i}, {j}, {k}) differs between faces by {d:.3e}"
                                )));
                            }
                        }
                        None => {
                            iso_seen.insert((i, j, k), u.clone());
                            unitaries.insert((i, j, k), u.blocks().to_vec());
                        }
                    }
                }
            }
        }
    }
    let algebras = algebras
        .into_iter()
        .enumerate()
        .map(|(g, a)| a.ok_or_else(|| Error::ShapeMismatch(format!("vertex {g} not covered"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(HornData {
        algebras,
        corrs,
        unitaries,
    })
}

fn finish(d: HornData) -> Result<NCorrSimplex> {
    validate_simplex(SimplexData {
        algebras: d.algebras,
        corrs: d.corrs,
        unitaries: d.unitaries,
    })
}

/// Fills an inner horn, or a special outer horn `Λⁿ_n` whose last edge is
/// an equivalence (the witness is computed).
pub fn fill_horn(h: &HornSpec) -> Result<NCorrSimplex> {
    if h.k > 0 && h.k < h.n {
        return fill_inner_horn(h);
    }
    if h.k == h.n && h.n >= 2 {
        let face0 = h.faces[0]
            .as_ref()
            .ok_or_else(|| Error::ShapeMismatch("face 0 is missing".into()))?;
        let w = crate::bicat::equivalence_witness(face0.corr(h.n - 2, h.n - 1))?;
        return fill_special_outer_horn(h, &w);
    }
    Err(Error::Unfillable(format!("{} is an outer horn that is not special", h.label())))
}

/// Fills `Λⁿ_k` for `0 < k < n`.
pub fn fill_inner_horn(h: &HornSpec) -> Result<NCorrSimplex> {
    if h.k == 0 || h.k >= h.n {
        return Err(Error::Unfillable(format!("{} is not an inner horn", h.label())));
    }
    let mut d = assemble(h, false)?;
    match (h.n, h.k) {
        (2, 1) => {
            let t = tensor(&d.corrs[&(0, 1)], &d.corrs[&(1, 2)])?;
            let us = t.corr.mult().iter().map(|&m| crate::linalg::identity(m)).collect();
            d.corrs.insert((0, 2), t.corr.clone());
            d.unitaries.insert((0, 1, 2), us);
        }
        (3, 1) => {
            let u = solve_u023(&d)?;
            d.unitaries.insert((0, 2, 3), u);
        }
        (3, 2) => {
            let u = solve_u013(&d)?;
            d.unitaries.insert((0, 1, 3), u);
        }
        _ => {}
    }
    finish(d)
}

/// Fills `Λⁿ_n` whose last edge `E_{n-1,n}` is an equivalence with the
/// supplied witness.
pub fn fill_special_outer_horn(h: &HornSpec, witness: &EquivalenceWitness) -> Result<NCorrSimplex> {
    if h.k != h.n || h.n < 2 {
        return Err(Error::Unfillable(format!("{} is not a special outer horn", h.label())));
    }
    let mut d = assemble(h, false)?;
    let n = h.n;
    let last = &d.corrs[&(n - 1, n)];
    let w_src = witness.inverse.dst();
    let w_dst = witness.inverse.src();
    if w_src != last.src() || w_dst != last.dst() || witness.unit.src().src() != last.src() {
        return Err(Error::NotAnEquivalence("witness does not belong to the last edge".into()));
    }
    if witness.unit.src().dist(&tensor(last, &witness.inverse)?.corr) > EPS {
        return Err(Error::NotAnEquivalence("witness does not belong to the last edge".into()));
    }
    match n {
        2 => {
            let (e01, u) = special_fill_2(&d.corrs[&(0, 2)], last, witness)?;
            d.corrs.insert((0, 1), e01);
            d.unitaries.insert((0, 1, 2), u);
        }
        3 => {
            let u = solve_u012(&d, witness)?;
            d.unitaries.insert((0, 1, 2), u);
        }
        _ => {}
    }
    finish(d)
}

/// Completes a horn with a proposed missing face and validates the result.
pub fn fill_with_face(h: &HornSpec, face: &NCorrSimplex) -> Result<NCorrSimplex> {
    let mut full = h.clone();
    if full.k >= full.faces.len() {
        return Err(Error::ShapeMismatch(format!("malformed horn {}", h.label())));
    }
    full.faces[h.k] = Some(face.clone());
    finish(assemble(&full, true)?)
}

/// `E_01 := E_02 ⊗ Ē` with `u = ρ ∘ (1 ⊗ counit) ∘ assoc`.
pub fn special_fill_2(
    e02: &Correspondence,
    e12: &Correspondence,
    w: &EquivalenceWitness,
) -> Result<(Correspondence, Vec<CMat>)> {
    let t_fill = tensor(e02, &w.inverse)?;
    let e01 = t_fill.corr.clone();
    let t_inner = tensor(&w.inverse, e12)?;
    let left = tensor(&e01, e12)?;
    let right = tensor(e02, &t_inner.corr)?;
    let assoc = associator_between(&t_fill, &t_inner, &left, &right)?;
    let id_a2 = identity_corr(e12.dst());
    let t_unit = tensor(e02, &id_a2)?;
    let counit = tensor_isos_between(&CorrIso::identity(e02), &w.counit, &right, &t_unit)?;
    let rho = right_unitor_with(&t_unit)?;
    Ok((e01, chain(&[&rho, &counit, &assoc])))
}

struct Pieces {
    assoc: CorrIso,
    left: Tensor,
    right: Tensor,
}

/// The associator `(E_01 ⊗ E_12) ⊗ E_23 → E_01 ⊗ (E_12 ⊗ E_23)` of horn data.
fn horn_assoc(d: &HornData) -> Result<(Pieces, Tensor, Tensor)> {
    let t012 = tensor(&d.corrs[&(0, 1)], &d.corrs[&(1, 2)])?;
    let t123 = tensor(&d.corrs[&(1, 2)], &d.corrs[&(2, 3)])?;
    let left = tensor(&t012.corr, &d.corrs[&(2, 3)])?;
    let right = tensor(&d.corrs[&(0, 1)], &t123.corr)?;
    let assoc = associator_between(&t012, &t123, &left, &right)?;
    Ok((Pieces { assoc, left, right }, t012, t123))
}

fn horn_iso(d: &HornData, t: &Tensor, key: Triangle) -> Result<CorrIso> {
    let us = d
        .unitaries
        .get(&key)
        .ok_or_else(|| Error::ShapeMismatch(format!("horn lacks u_{}{}{}", key.0, key.1, key.2)))?;
    CorrIso::from_blocks(&t.corr, &d.corrs[&(key.0, key.2)], us.clone())
}

fn solve_u023(d: &HornData) -> Result<Vec<CMat>> {
    let (p, t012, t123) = horn_assoc(d)?;
    let u012 = horn_iso(d, &t012, (0, 1, 2))?;
    let u123 = horn_iso(d, &t123, (1, 2, 3))?;
    let t013 = tensor(&d.corrs[&(0, 1)], &d.corrs[&(1, 3)])?;
    let u013 = horn_iso(d, &t013, (0, 1, 3))?;
    let t023 = tensor(&d.corrs[&(0, 2)], &d.corrs[&(2, 3)])?;
    let w1 = tensor_isos_between(&CorrIso::identity(&d.corrs[&(0, 1)]), &u123, &p.right, &t013)?;
    let w2 = tensor_isos_between(&u012, &CorrIso::identity(&d.corrs[&(2, 3)]), &p.left, &t023)?;
    Ok(chain(&[&u013, &w1, &p.assoc, &w2.inverse()]))
}

fn solve_u013(d: &HornData) -> Result<Vec<CMat>> {
    let (p, t012, t123) = horn_assoc(d)?;
    let u012 = horn_iso(d, &t012, (0, 1, 2))?;
    let u123 = horn_iso(d, &t123, (1, 2, 3))?;
    let t023 = tensor(&d.corrs[&(0, 2)], &d.corrs[&(2, 3)])?;
    let u023 = horn_iso(d, &t023, (0, 2, 3))?;
    let t013 = tensor(&d.corrs[&(0, 1)], &d.corrs[&(1, 3)])?;
    let w1 = tensor_isos_between(&CorrIso::identity(&d.corrs[&(0, 1)]), &u123, &p.right, &t013)?;
    let w2 = tensor_isos_between(&u012, &CorrIso::identity(&d.corrs[&(2, 3)]), &p.left, &t023)?;
    Ok(chain(&[&u023, &w2, &p.assoc.inverse(), &w1.inverse()]))
}

/// Solves the pentagon for `u_012` by cancelling the equivalence `E_23`.
fn solve_u012(d: &HornData, w: &EquivalenceWitness) -> Result<Vec<CMat>> {
    let (p, t012, t123) = horn_assoc(d)?;
    let u123 = horn_iso(d, &t123, (1, 2, 3))?;
    let t013 = tensor(&d.corrs[&(0, 1)], &d.corrs[&(1, 3)])?;
    let u013 = horn_iso(d, &t013, (0, 1, 3))?;
    let e02 = &d.corrs[&(0, 2)];
    let e23 = &d.corrs[&(2, 3)];
    let t023 = tensor(e02, e23)?;
    let u023 = horn_iso(d, &t023, (0, 2, 3))?;
    let w1 = tensor_isos_between(&CorrIso::identity(&d.corrs[&(0, 1)]), &u123, &p.right, &t013)?;
    // X = u_012 ⊗ 1 : (E_01 ⊗ E_12) ⊗ E_23 → E_02 ⊗ E_23
    let x_blocks = chain(&[&u023.inverse(), &u013, &w1, &p.assoc]);
    let x = CorrIso::from_blocks(&p.left.corr, &t023.corr, x_blocks)?;
    let pc = &t012.corr;
    let id_a2 = identity_corr(pc.dst());
    let inv = &w.inverse;
    // P → P ⊗ A_2 → P ⊗ (E_23 ⊗ Ē) → (P ⊗ E_23) ⊗ Ē → (Q ⊗ E_23) ⊗ Ē → Q ⊗ (E_23 ⊗ Ē) → Q ⊗ A_2 → Q
    let t_unit = tensor(e23, inv)?;
    let p_id = tensor(pc, &id_a2)?;
    let q_id = tensor(e02, &id_a2)?;
    let p_unit = tensor(pc, &t_unit.corr)?;
    let q_unit = tensor(e02, &t_unit.corr)?;
    let p_e = &p.left;
    let pe_inv = tensor(&p_e.corr, inv)?;
    let qe_inv = tensor(&t023.corr, inv)?;
    let r_p = right_unitor_with(&p_id)?;
    let r_q = right_unitor_with(&q_id)?;
    let unit_p = tensor_isos_between(&CorrIso::identity(pc), &w.unit, &p_unit, &p_id)?;
    let unit_q = tensor_isos_between(&CorrIso::identity(e02), &w.unit, &q_unit, &q_id)?;
    let assoc_p = associator_between(p_e, &t_unit, &pe_inv, &p_unit)?;
    let assoc_q = associator_between(&t023, &t_unit, &qe_inv, &q_unit)?;
    let x_inv = tensor_isos_between(&x, &CorrIso::identity(inv), &pe_inv, &qe_inv)?;
    Ok(chain(&[
        &r_q,
        &unit_q,
        &assoc_q,
        &x_inv,
        &assoc_p.inverse(),
        &unit_p.inverse(),
        &r_p.inverse(),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicat::{corner_embedding, equivalence_witness, gamma_of_hom, left_action_hom};
    use crate::cstar::make_algebra;
    use crate::hilbert::make_module;
    use crate::random::{random_chain, rng, Limits};

    fn small() -> Limits {
        Limits {
            max_blocks: 2,
            max_size: 3,
        }
    }

    #[test]
    fn vertex_and_edge_are_valid() {
        let a = make_algebra(&[2, 1]).unwrap();
        assert_eq!(NCorrSimplex::vertex(&a).dim(), 0);
        let chain = random_chain(&mut rng(5), 1, small(), true);
        let g = gamma_of_hom(&chain[0]).unwrap();
        assert_eq!(NCorrSimplex::edge(&g.corr).unwrap().dim(), 1);
    }

    #[test]
    fn gamma_simplex_validates_and_commutes_with_faces() {
        let chain = random_chain(&mut rng(11), 2, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let d1 = s.face(1).unwrap();
        let direct = gamma_of_hom(&chain[1].compose(&chain[0]).unwrap()).unwrap();
        assert!(d1.corr(0, 1).dist(&direct.corr) < 1e-12);
    }

    #[test]
    fn degenerate_pentagons_follow_from_the_unit_conditions() {
        let mut r = rng(12);
        let s = crate::random::random_simplex(&mut r, 3, Limits { max_blocks: 2, max_size: 2 }, true).unwrap();
        let mut checked = 0;
        for i in 0..=3 {
            for j in i..=3 {
                for k in j..=3 {
                    for l in k..=3 {
                        assert!(s.pentagon_residual(i, j, k, l).unwrap() < 1e-9, "({i}, {j}, {k}, {l})");
                        checked += 1;
                    }
                }
            }
        }
        assert_eq!(checked, 35);
        assert_eq!(s.pentagon_report().unwrap().pentagons_checked, 1);
        assert_eq!(s.pentagon_report_with(true).unwrap().pentagons_checked, 35);
    }

    #[test]
    fn identity_chain_is_totally_degenerate() {
        let a = make_algebra(&[2, 1]).unwrap();
        let s = gamma_simplex(&[StarHom::identity(&a), StarHom::identity(&a)]).unwrap();
        let v = NCorrSimplex::vertex(&a);
        assert!(s.dist(&v.degeneracy(0).unwrap().degeneracy(0).unwrap()) < 1e-12);
        assert!(s.degenerate_at(0) && s.degenerate_at(1));
    }

    #[test]
    fn simplicial_identities_on_a_3_simplex() {
        let chain = random_chain(&mut rng(2), 3, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        for i in 0..3 {
            for j in i + 1..=3 {
                let a = s.face(j).unwrap().face(i).unwrap();
                let b = s.face(i).unwrap().face(j - 1).unwrap();
                assert_eq!(a.dist(&b), 0.0);
            }
        }
        for j in 0..=3 {
            let up = s.degeneracy(j).unwrap();
            assert_eq!(up.face(j).unwrap().dist(&s), 0.0);
            assert_eq!(up.face(j + 1).unwrap().dist(&s), 0.0);
        }
    }

    #[test]
    fn corrupted_unitary_is_a_pentagon_violation() {
        let chain = random_chain(&mut rng(4), 3, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let mut data = s.to_data();
        let u = data.unitaries.get_mut(&(0, 1, 3)).unwrap();
        for b in u.iter_mut() {
            *b *= crate::linalg::c(0.0, 1.0);
        }
        match validate_simplex(data) {
            Err(Error::PentagonViolated { residual, .. }) => assert!(residual > 1e-3),
            other => panic!("expected pentagon violation, got {other:?}"),
        }
    }

    #[test]
    fn inner_fills_recover_deleted_faces() {
        let chain = random_chain(&mut rng(9), 3, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        for k in 1..=2 {
            let h = HornSpec::of_simplex(&s, k).unwrap();
            let f = fill_inner_horn(&h).unwrap();
            assert!(f.dist(&s) < 1e-9, "Λ³_{k}: {}", f.dist(&s));
        }
        let h = HornSpec::of_simplex(&s.face(3).unwrap(), 1).unwrap();
        let f = fill_inner_horn(&h).unwrap();
        assert!(f.corr(0, 2).mult() == s.corr(0, 2).mult());
    }

    #[test]
    fn special_fills() {
        // Λ²₂ with E_02 = Γ(f_E), E_12 = Γ(i_E): the filled edge is isomorphic to E
        let chain = random_chain(&mut rng(12), 1, small(), true);
        let e = gamma_of_hom(&chain[0]).unwrap().corr;
        let gf = gamma_of_hom(&left_action_hom(&e).unwrap()).unwrap().corr;
        let gi = gamma_of_hom(&corner_embedding(e.module()).unwrap()).unwrap().corr;
        let horn = HornSpec {
            n: 2,
            k: 2,
            faces: vec![Some(NCorrSimplex::edge(&gi).unwrap()), Some(NCorrSimplex::edge(&gf).unwrap()), None],
        };
        let w = equivalence_witness(&gi).unwrap();
        let f = fill_special_outer_horn(&horn, &w).unwrap();
        assert!(crate::bicat::find_iso(f.corr(0, 1), &e).is_some());

        // Λ³₃ from a 3-simplex whose last edge is a corner embedding
        let mut r = rng(3);
        let a0 = make_algebra(&[1, 1]).unwrap();
        let phi = crate::random::random_hom_from(&mut r, &a0, small(), true);
        let psi = crate::random::random_hom_from(&mut r, phi.dst(), small(), true);
        let m = make_module(psi.dst(), &vec![1; psi.dst().num_blocks()]).unwrap();
        let s = gamma_simplex(&[phi, psi, corner_embedding(&m).unwrap()]).unwrap();
        let w = equivalence_witness(s.corr(2, 3)).unwrap();
        let h = HornSpec::of_simplex(&s, 3).unwrap();
        let f = fill_special_outer_horn(&h, &w).unwrap();
        assert!(f.dist(&s) < 1e-9, "{}", f.dist(&s));
    }
}
