//! Barycentric subdivision `Sd(Δⁿ)`, the augmented complex `ĈSd(Δⁿ)`, and
//! the functor `Sd(Δⁿ) → Cst₊` attached to a simplex of the nerve.
//!
//! Subsets of `[n]` are bitmasks. In `ĈSd(Δⁿ)` singletons are written as
//! points, so a vertex is either a point `i` or a subset with at least two
//! elements, and a simplex is `(i_0 ≤ … ≤ i_k, S_{k+1} ⊆ … ⊆ S_ℓ)` with every
//! `i_a ∈ S_{k+1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::cstar::{AlgElement, FdCstarAlgebra, StarHom};
use crate::error::{Error, Result};
use crate::hilbert::{tensor, Correspondence, HilbertModule, ModElem, Tensor};
use crate::linalg::{self, frobenius_diff, CMat, EPS};
use crate::nerve::{check_monotone, CstSimplex, NCorrSimplex};

/// Largest `n` for which subdivisions are enumerated.
#[cfg(feature = "large-n")]
pub const MAX_N: usize = 4;
#[cfg(not(feature = "large-n"))]
pub const MAX_N: usize = 3;

pub type Subset = u32;

pub fn subset(elems: &[usize]) -> Subset {
    elems.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn elements(s: Subset) -> Vec<usize> {
    (0..32).filter(|&i| s & (1 << i) != 0).collect()
}

pub fn max_of(s: Subset) -> usize {
    31 - s.leading_zeros() as usize
}

pub fn is_subset(s: Subset, t: Subset) -> bool {
    s & !t == 0
}

pub fn full_set(n: usize) -> Subset {
    (1 << (n + 1)) - 1
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_N {
        return Err(Error::DimensionTooLarge { got: n, max: MAX_N });
    }
    Ok(())
}

fn fmt_set(s: Subset) -> String {
    let e: Vec<String> = elements(s).iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", e.join(","))
}

/// A chain `S_0 ⊆ … ⊆ S_ℓ` of nonempty subsets of `[n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetChain {
    pub n: usize,
    pub sets: Vec<Subset>,
}

impl SubsetChain {
    pub fn new(n: usize, sets: Vec<Subset>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::ShapeViolation("empty chain".into()));
        }
        for &s in &sets {
            if s == 0 || !is_subset(s, full_set(n)) {
                return Err(Error::ShapeViolation(format!("{} is not a nonempty subset of [{n}]", fmt_set(s))));
            }
        }
        for w in sets.windows(2) {
            if !is_subset(w[0], w[1]) {
                return Err(Error::NotNested(format!("{} ⊄ {}", fmt_set(w[0]), fmt_set(w[1]))));
            }
        }
        Ok(SubsetChain { n, sets })
    }

    pub fn dim(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.sets.windows(2).all(|w| w[0] != w[1])
    }

    pub fn face(&self, j: usize) -> Result<Self> {
        if j > self.dim() || self.dim() == 0 {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim() });
        }
        let mut sets = self.sets.clone();
        sets.remove(j);
        SubsetChain::new(self.n, sets)
    }

    pub fn degeneracy(&self, j: usize) -> Result<Self> {
        if j > self.dim() {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim() });
        }
        let mut sets = self.sets.clone();
        sets.insert(j, sets[j]);
        SubsetChain::new(self.n, sets)
    }
}

impl fmt::Display for SubsetChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sets.iter().map(|&s| fmt_set(s)).collect();
        write!(f, "{}", parts.join(" ⊆ "))
    }
}

/// All `l`-simplices of `Sd(Δⁿ)`, degenerate ones included, in
/// lexicographic order.
pub fn enumerate_sd(n: usize, l: usize) -> Result<Vec<SubsetChain>> {
    check_n(n)?;
    let all: Vec<Subset> = (1..=full_set(n)).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l + 1);
    fn rec(all: &[Subset], l: usize, n: usize, cur: &mut Vec<Subset>, out: &mut Vec<SubsetChain>) {
        if cur.len() == l + 1 {
            out.push(SubsetChain { n, sets: cur.clone() });
            return;
        }
        for &s in all {
            if cur.last().is_none_or(|&p| is_subset(p, s)) {
                cur.push(s);
                rec(all, l, n, cur, out);
                cur.pop();
            }
        }
    }
    rec(&all, l, n, &mut cur, &mut out);
    Ok(out)
}

/// A vertex of `ĈSd(Δⁿ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CsdVertex {
    Point(usize),
    Set(Subset),
}

impl CsdVertex {
    /// The subset this vertex stands for.
    pub fn as_set(&self) -> Subset {
        match *self {
            CsdVertex::Point(i) => 1 << i,
            CsdVertex::Set(s) => s,
        }
    }

    fn normalised(s: Subset) -> CsdVertex {
        if s.count_ones() == 1 {
            CsdVertex::Point(max_of(s))
        } else {
            CsdVertex::Set(s)
        }
    }
}

impl fmt::Display for CsdVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CsdVertex::Point(i) => write!(f, "{i}"),
            CsdVertex::Set(s) => write!(f, "{}", fmt_set(s)),
        }
    }
}

/// A simplex `(i_0, …, i_k, S_{k+1}, …, S_ℓ)` of `ĈSd(Δⁿ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugChain {
    pub n: usize,
    pub entries: Vec<CsdVertex>,
}

impl AugChain {
    pub fn new(n: usize, entries: Vec<CsdVertex>) -> Result<Self> {
        let c = AugChain { n, entries };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::ShapeViolation("empty chain".into()));
        }
        let full = full_set(self.n);
        let mut seen_set: Option<Subset> = None;
        let mut last_point: Option<usize> = None;
        let mut points = 0;
        for v in &self.entries {
            match *v {
                CsdVertex::Point(i) => {
                    if i > self.n {
                        return Err(Error::ShapeViolation(format!("point {i} outside [{}]", self.n)));
                    }
                    if seen_set.is_some() {
                        return Err(Error::ShapeViolation(format!("point {i} after a subset in {self}")));
                    }
                    if last_point.is_some_and(|p| p > i) {
                        return Err(Error::ShapeViolation(format!("points decrease in {self}")));
                    }
                    last_point = Some(i);
                    points |= 1 << i;
                }
                CsdVertex::Set(s) => {
                    if s.count_ones() < 2 || !is_subset(s, full) {
                        return Err(Error::ShapeViolation(format!("{} is not a subset of size ≥ 2", fmt_set(s))));
                    }
                    match seen_set {
                        None => {
                            if !is_subset(points, s) {
                                return Err(Error::ShapeViolation(format!(
                                    "points of {self} are not contained in {}",
                                    fmt_set(s)
                                )));
                            }
                        }
                        Some(p) => {
                            if !is_subset(p, s) {
                                return Err(Error::NotNested(format!("{} ⊄ {}", fmt_set(p), fmt_set(s))));
                            }
                        }
                    }
                    seen_set = Some(s);
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.len() - 1
    }

    /// `i_0, …, i_k`.
    pub fn points(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter_map(|v| match v {
                CsdVertex::Point(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    pub fn sets(&self) -> Vec<Subset> {
        self.entries
            .iter()
            .filter_map(|v| match v {
                CsdVertex::Set(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    /// `k`: index of the last point, `-1` without points.
    pub fn k(&self) -> isize {
        self.points().len() as isize - 1
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] != w[1])
    }

    pub fn top(&self) -> Subset {
        self.entries.last().expect("nonempty").as_set()
    }

    pub fn face(&self, j: usize) -> Result<Self> {
        if self.dim() == 0 || j > self.dim() {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim() });
        }
        let mut entries = self.entries.clone();
        entries.remove(j);
        AugChain::new(self.n, entries)
    }

    pub fn degeneracy(&self, j: usize) -> Result<Self> {
        if j > self.dim() {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim() });
        }
        let mut entries = self.entries.clone();
        entries.insert(j, entries[j]);
        AugChain::new(self.n, entries)
    }

    /// Number of distinct points.
    pub fn distinct_points(&self) -> usize {
        let mut p = self.points();
        p.dedup();
        p.len()
    }

    /// The chain of subsets when at most one distinct point occurs, i.e. the
    /// simplex lies in `Sd(Δⁿ)`.
    pub fn to_sd(&self) -> Option<SubsetChain> {
        if self.distinct_points() > 1 {
            return None;
        }
        Some(SubsetChain {
            n: self.n,
            sets: self.entries.iter().map(|v| v.as_set()).collect(),
        })
    }

    pub fn from_sd(c: &SubsetChain) -> Self {
        AugChain {
            n: c.n,
            entries: c.sets.iter().map(|&s| CsdVertex::normalised(s)).collect(),
        }
    }

    /// Removes repeated entries, returning the nondegenerate core and the
    /// list of degeneracy indices that rebuild `self` from it (apply in
    /// order).
    pub fn normalise(&self) -> (AugChain, Vec<usize>) {
        let mut core = vec![self.entries[0]];
        let mut degs = Vec::new();
        for (pos, v) in self.entries.iter().enumerate().skip(1) {
            if *v == *core.last().expect("nonempty") {
                degs.push(pos - 1);
            } else {
                core.push(*v);
            }
        }
        (
            AugChain {
                n: self.n,
                entries: core,
            },
            degs,
        )
    }
}

impl fmt::Display for AugChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// All `l`-simplices of `ĈSd(Δⁿ)`, degenerate ones included.
pub fn enumerate_csd(n: usize, l: usize) -> Result<Vec<AugChain>> {
    check_n(n)?;
    let full = full_set(n);
    let big: Vec<Subset> = (1..=full).filter(|s| s.count_ones() >= 2).collect();
    let mut out = Vec::new();
    // number of points p = k + 1 ranges over 0..=l+1
    for p in 0..=l + 1 {
        let mut pts = Vec::new();
        point_seqs(n, p, &mut pts, &mut |pts| {
            let pmask = subset(pts);
            let mut sets = Vec::new();
            set_seqs(&big, l + 1 - p, pmask, pts.is_empty(), &mut sets, &mut |sets| {
                let mut entries: Vec<CsdVertex> = pts.iter().map(|&i| CsdVertex::Point(i)).collect();
                entries.extend(sets.iter().map(|&s| CsdVertex::Set(s)));
                out.push(AugChain { n, entries });
            });
        });
    }
    out.sort();
    Ok(out)
}

fn point_seqs(n: usize, len: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == len {
        f(cur);
        return;
    }
    let start = cur.last().copied().unwrap_or(0);
    for i in start..=n {
        cur.push(i);
        point_seqs(n, len, cur, f);
        cur.pop();
    }
}

fn set_seqs(
    big: &[Subset],
    len: usize,
    lower: Subset,
    free: bool,
    cur: &mut Vec<Subset>,
    f: &mut impl FnMut(&[Subset]),
) {
    if cur.len() == len {
        f(cur);
        return;
    }
    for &s in big {
        let ok = match cur.last() {
            Some(&p) => is_subset(p, s),
            None => free || is_subset(lower, s),
        };
        if ok {
            cur.push(s);
            set_seqs(big, len, lower, free, cur, f);
            cur.pop();
        }
    }
}

/// `φ_*: ĈSd(Δᵐ) → ĈSd(Δⁿ)` for weakly increasing `φ: [m] → [n]`, applied to
/// one simplex.
pub fn phi_star(phi: &[usize], n: usize, chain: &AugChain) -> Result<AugChain> {
    check_monotone(phi, n)?;
    if phi.len() != chain.n + 1 {
        return Err(Error::ShapeMismatch(format!(
            "map has {} values but the chain lives in [{}]",
            phi.len(),
            chain.n
        )));
    }
    let entries = chain
        .entries
        .iter()
        .map(|v| match *v {
            CsdVertex::Point(i) => CsdVertex::Point(phi[i]),
            CsdVertex::Set(s) => CsdVertex::normalised(elements(s).iter().fold(0, |m, &i| m | (1 << phi[i]))),
        })
        .collect();
    AugChain::new(n, entries)
}

/// `E_S` and `A_S = K(E_S)` for one subset.
#[derive(Clone, Debug)]
pub struct SdObject {
    pub set: Subset,
    pub top: usize,
    /// `E_S = ⊕_{l ∈ S} E_{l, max S}`, summands in increasing `l`.
    pub module: HilbertModule,
    pub algebra: FdCstarAlgebra,
    pub summands: Vec<usize>,
    /// `row_offsets[a][b]`: first row of summand `a` in base block `b`.
    pub row_offsets: Vec<Vec<usize>>,
    /// `E_S` as an `A_S, A_{max S}`-correspondence.
    pub corr: Correspondence,
}

impl SdObject {
    fn component(&self, x: &ModElem, a: usize, summand_mult: &[usize]) -> ModElem {
        x.iter()
            .enumerate()
            .map(|(b, xb)| xb.rows(self.row_offsets[a][b], summand_mult[b]).into_owned())
            .collect()
    }
}

/// `E_S` for `S ⊆ [n]`.
pub fn module_e_s(sigma: &NCorrSimplex, s: Subset) -> Result<SdObject> {
    let n = sigma.dim();
    if s == 0 || !is_subset(s, full_set(n)) {
        return Err(Error::ShapeViolation(format!("{} is not a nonempty subset of [{n}]", fmt_set(s))));
    }
    let top = max_of(s);
    let summands = elements(s);
    let base = sigma.algebra(top).clone();
    let mut mult = vec![0; base.num_blocks()];
    let mut row_offsets = Vec::with_capacity(summands.len());
    for &l in &summands {
        let m = sigma.corr(l, top).mult();
        row_offsets.push(mult.clone());
        for (acc, x) in mult.iter_mut().zip(m) {
            *acc += x;
        }
    }
    let module = HilbertModule::new(base, mult)?;
    let algebra = module.compacts()?.with_label(format!("A{}", fmt_set(s)));
    let k = module.compacts()?;
    let left = StarHom::new(algebra.clone(), k, linalg::identity(algebra.dim()))?;
    let corr = Correspondence::new(algebra.clone(), module.clone(), left)?;
    Ok(SdObject {
        set: s,
        top,
        module,
        algebra,
        summands,
        row_offsets,
        corr,
    })
}

/// One arrow `f_ST` with the isometry that realises it:
/// `f(x) = J x J*` or `f(x) = J (x ⊗ 1) J*`.
#[derive(Clone, Debug)]
pub struct SdArrow {
    pub hom: StarHom,
    pub isometry: Vec<CMat>,
    pub tensor: Option<Arc<Tensor>>,
    src_module: HilbertModule,
    dst_module: HilbertModule,
}

impl SdArrow {
    /// Evaluates the arrow through its isometry, avoiding the dense matrix.
    pub fn apply_fast(&self, x: &AlgElement) -> AlgElement {
        let ops = self.src_module.operator_blocks(x);
        let lifted = match &self.tensor {
            Some(t) => t.lift_left_operator(&ops),
            None => ops,
        };
        let out: Vec<CMat> = self
            .isometry
            .iter()
            .zip(&lifted)
            .map(|(j, x)| j * x * j.adjoint())
            .collect();
        self.dst_module.compact_element(&out).expect("shapes fixed at construction")
    }
}

fn arrow_from_isometry(
    src: &SdObject,
    dst: &SdObject,
    isometry: Vec<CMat>,
    tensor: Option<Arc<Tensor>>,
) -> Result<SdArrow> {
    let iso_res = linalg::max_residual(isometry.iter().map(linalg::isometry_residual));
    if iso_res > EPS {
        return Err(Error::NotUnitary(iso_res));
    }
    let mut arrow = SdArrow {
        hom: StarHom::identity(&src.algebra),
        isometry,
        tensor,
        src_module: src.module.clone(),
        dst_module: dst.module.clone(),
    };
    let map = crate::cstar::map_from_basis_images(&src.algebra, &dst.algebra, &mut |i, r, c| {
        let e = AlgElement::basis(&src.algebra, src.algebra.basis_index(i, r, c));
        arrow.apply_fast(&e).into_blocks()
    })?;
    arrow.hom = StarHom::new(src.algebra.clone(), dst.algebra.clone(), map)?;
    Ok(arrow)
}

fn build_arrow(sigma: &NCorrSimplex, src: &SdObject, dst: &SdObject) -> Result<SdArrow> {
    if !is_subset(src.set, dst.set) {
        return Err(Error::NotNested(format!("{} ⊄ {}", fmt_set(src.set), fmt_set(dst.set))));
    }
    let (i, j) = (src.top, dst.top);
    let pos_in_dst = |l: usize| dst.summands.iter().position(|&x| x == l).expect("S ⊆ T");
    if i == j {
        // inclusion of a sub-sum
        let base = src.module.base();
        let iso = (0..base.num_blocks())
            .map(|b| {
                let mut m = linalg::zeros(dst.module.mult()[b], src.module.mult()[b]);
                for (a, &l) in src.summands.iter().enumerate() {
                    let rows = sigma.corr(l, i).mult()[b];
                    let (r0s, r0t) = (src.row_offsets[a][b], dst.row_offsets[pos_in_dst(l)][b]);
                    for r in 0..rows {
                        m[(r0t + r, r0s + r)] = linalg::c(1.0, 0.0);
                    }
                }
                m
            })
            .collect();
        return arrow_from_isometry(src, dst, iso, None);
    }
    // E_S ⊗ E_ij → E_T, through u_{l,i,j} on each summand
    let t = Arc::new(tensor(&src.corr, sigma.corr(i, j))?);
    let beta = |x: &ModElem, f: &ModElem| -> ModElem {
        let mut out = dst.module.zero_element();
        for (a, &l) in src.summands.iter().enumerate() {
            let xl = src.component(x, a, sigma.corr(l, i).mult());
            let t_lij = sigma.tensor(l, i, j);
            let y = sigma.iso(l, i, j).apply(&t_lij.balanced(&xl, f));
            let pos = pos_in_dst(l);
            for (b, yb) in y.iter().enumerate() {
                let mut view = out[b].rows_mut(dst.row_offsets[pos][b], yb.nrows());
                view += yb;
            }
        }
        out
    };
    let iso = t.induced_blocks(&dst.module, &beta)?;
    arrow_from_isometry(src, dst, iso, Some(t))
}

/// `f_ST: A_S → A_T`.
pub fn f_st(sigma: &NCorrSimplex, s: Subset, t: Subset) -> Result<StarHom> {
    let src = module_e_s(sigma, s)?;
    let dst = module_e_s(sigma, t)?;
    Ok(build_arrow(sigma, &src, &dst)?.hom)
}

/// The functor `Sd(Δⁿ) → Cst₊` of a simplex: all `A_S` and all `f_ST`.
#[derive(Clone, Debug)]
pub struct SubdivisionFunctor {
    pub n: usize,
    pub objects: BTreeMap<Subset, SdObject>,
    pub arrows: BTreeMap<(Subset, Subset), SdArrow>,
}

/// Residuals of the functoriality check.
#[derive(Clone, Debug, Default)]
pub struct FunctorialityReport {
    pub chains_checked: usize,
    pub max_residual: f64,
    pub worst: Option<(Subset, Subset, Subset)>,
}

/// Builds the functor and checks `f_TU ∘ f_ST = f_SU` on every chain.
pub fn subdivision_functor(sigma: &NCorrSimplex) -> Result<SubdivisionFunctor> {
    let f = SubdivisionFunctor::build(sigma)?;
    let rep = f.functoriality_report();
    if let Some((s, t, u)) = rep.worst {
        if rep.max_residual > EPS {
            return Err(Error::FunctorialityViolated {
                s: elements(s),
                t: elements(t),
                u: elements(u),
                residual: rep.max_residual,
            });
        }
    }
    Ok(f)
}

impl SubdivisionFunctor {
    /// Builds all objects and arrows without the functoriality check.
    pub fn build(sigma: &NCorrSimplex) -> Result<Self> {
        let n = sigma.dim();
        check_n(n)?;
        let mut objects = BTreeMap::new();
        for s in 1..=full_set(n) {
            objects.insert(s, module_e_s(sigma, s)?);
        }
        let mut arrows = BTreeMap::new();
        for (&s, os) in &objects {
            for (&t, ot) in &objects {
                if is_subset(s, t) {
                    arrows.insert((s, t), build_arrow(sigma, os, ot)?);
                }
            }
        }
        Ok(SubdivisionFunctor { n, objects, arrows })
    }

    pub fn algebra(&self, s: Subset) -> &FdCstarAlgebra {
        &self.objects[&s].algebra
    }

    pub fn hom(&self, s: Subset, t: Subset) -> &StarHom {
        &self.arrows[&(s, t)].hom
    }

    /// `max ‖f_TU(f_ST(e)) − f_SU(e)‖` over basis elements `e` of `A_S`.
    pub fn functoriality_residual(&self, s: Subset, t: Subset, u: Subset) -> f64 {
        let st = &self.arrows[&(s, t)];
        let tu = &self.arrows[&(t, u)];
        let su = &self.arrows[&(s, u)];
        let mut worst: f64 = 0.0;
        for idx in 0..self.algebra(s).dim() {
            let mid = st.hom.image_of_basis(idx);
            let via = tu.apply_fast(&mid);
            let direct = su.hom.image_of_basis(idx);
            let r = via
                .blocks()
                .iter()
                .zip(direct.blocks())
                .map(|(a, b)| frobenius_diff(a, b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    pub fn functoriality_report(&self) -> FunctorialityReport {
        let mut rep = FunctorialityReport::default();
        let sets: Vec<Subset> = self.objects.keys().copied().collect();
        for &u in &sets {
            for &t in sets.iter().filter(|&&t| is_subset(t, u)) {
                for &s in sets.iter().filter(|&&s| is_subset(s, t)) {
                    let r = self.functoriality_residual(s, t, u);
                    rep.chains_checked += 1;
                    if rep.worst.is_none() || r > rep.max_residual {
                        rep.max_residual = r;
                        rep.worst = Some((s, t, u));
                    }
                }
            }
        }
        rep
    }

    /// The image of a chain `S_0 ⊆ … ⊆ S_ℓ` as a simplex of the nerve of C*-algebras.
    pub fn apply_chain(&self, c: &SubsetChain) -> Result<CstSimplex> {
        let algebras = c.sets.iter().map(|&s| self.algebra(s).clone()).collect();
        let mut homs = BTreeMap::new();
        for a in 0..c.sets.len() {
            for b in a..c.sets.len() {
                homs.insert((a, b), self.hom(c.sets[a], c.sets[b]).clone());
            }
        }
        CstSimplex::from_homs(algebras, homs)
    }
}

/// Outcome of the exhaustive simplicial-identity check on `ĈSd(Δⁿ)`.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct IdentityReport {
    pub simplices: usize,
    pub identities_checked: usize,
    pub failures: Vec<String>,
}

/// Checks that faces and degeneracies of every `l`-simplex (`l ≤ max_l`)
/// land in the enumeration and satisfy all simplicial identities.
pub fn simplicial_identity_report(n: usize, max_l: usize) -> Result<IdentityReport> {
    use std::collections::BTreeSet;
    let levels: Vec<BTreeSet<AugChain>> = (0..=max_l + 1)
        .map(|l| enumerate_csd(n, l).map(|v| v.into_iter().collect()))
        .collect::<Result<_>>()?;
    let mut rep = IdentityReport::default();
    let fail = |rep: &mut IdentityReport, ok: bool, what: String| {
        rep.identities_checked += 1;
        if !ok && rep.failures.len() < 20 {
            rep.failures.push(what);
        }
    };
    for l in 0..=max_l {
        for x in &levels[l] {
            rep.simplices += 1;
            let d = |c: &AugChain, i: usize| c.face(i).ok();
            let s = |c: &AugChain, i: usize| c.degeneracy(i).ok();
            for i in 0..=l {
                let si = s(x, i);
                let ok = si.as_ref().is_some_and(|y| levels[l + 1].contains(y));
                fail(&mut rep, ok, format!("s_{i}{x} not in the enumeration"));
                if l > 0 {
                    let di = d(x, i);
                    let ok = di.as_ref().is_some_and(|y| levels[l - 1].contains(y));
                    fail(&mut rep, ok, format!("d_{i}{x} not in the enumeration"));
                }
                let Some(si) = si else { continue };
                // d_j s_i
                for j in 0..=l + 1 {
                    let lhs = d(&si, j);
                    let rhs = if j < i {
                        d(x, j).and_then(|y| s(&y, i - 1))
                    } else if j == i || j == i + 1 {
                        Some(x.clone())
                    } else {
                        d(x, j - 1).and_then(|y| s(&y, i))
                    };
                    if j == i || j == i + 1 || l > 0 {
                        fail(&mut rep, lhs == rhs, format!("d_{j} s_{i} on {x}"));
                    }
                }
                // s_j s_i = s_{i+1} s_j for j ≤ i
                for j in 0..=i {
                    let lhs = s(&si, j);
                    let rhs = s(x, j).and_then(|y| s(&y, i + 1));
                    fail(&mut rep, lhs == rhs, format!("s_{j} s_{i} on {x}"));
                }
            }
            // d_i d_j = d_{j-1} d_i for i < j
            if l >= 2 {
                for j in 0..=l {
                    for i in 0..j {
                        let lhs = d(x, j).and_then(|y| d(&y, i));
                        let rhs = d(x, i).and_then(|y| d(&y, j - 1));
                        fail(&mut rep, lhs == rhs, format!("d_{i} d_{j} on {x}"));
                    }
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicat::{corner_embedding, left_action_hom};
    use crate::nerve::gamma_simplex;
    use crate::random::{random_chain, rng, Limits};

    fn small() -> Limits {
        Limits {
            max_blocks: 2,
            max_size: 2,
        }
    }

    fn p(i: usize) -> CsdVertex {
        CsdVertex::Point(i)
    }

    fn st(e: &[usize]) -> CsdVertex {
        CsdVertex::Set(subset(e))
    }

    /// Brute force: strictly increasing chains of length `l+1` in the
    /// poset of nonempty subsets, by filtering all tuples.
    fn brute_nondeg_sd(n: usize, l: usize) -> usize {
        let all: Vec<Subset> = (1..=full_set(n)).collect();
        let mut count = 0;
        let mut idx = vec![0usize; l + 1];
        loop {
            let sets: Vec<Subset> = idx.iter().map(|&i| all[i]).collect();
            if sets.windows(2).all(|w| w[0] != w[1] && is_subset(w[0], w[1])) {
                count += 1;
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return count;
                }
                idx[pos] += 1;
                if idx[pos] < all.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn all_weak_chains_of_the_triangle_are_checked() {
        let phis = crate::random::random_chain(&mut crate::random::rng(3), 2, crate::random::Limits::default(), true);
        let f = SubdivisionFunctor::build(&crate::nerve::gamma_simplex(&phis).unwrap()).unwrap();
        let rep = f.functoriality_report();
        // weak chains S ⊆ T ⊆ U of nonempty subsets of [2]: 3 + 15 + 19 by |U|
        assert_eq!(rep.chains_checked, 37);
        assert!(rep.max_residual < EPS);
    }

    #[test]
    fn sd_counts() {
        let c = enumerate_sd(1, 1).unwrap();
        let nd: Vec<_> = c.iter().filter(|c| c.is_nondegenerate()).collect();
        assert_eq!(nd.len(), 2);
        let nd2 = enumerate_sd(2, 2).unwrap().into_iter().filter(|c| c.is_nondegenerate()).count();
        assert_eq!(nd2, brute_nondeg_sd(2, 2));
        assert_eq!(nd2, 6);
        assert!(matches!(enumerate_sd(MAX_N + 1, 1), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn csd_contains_the_triangle() {
        let c = enumerate_csd(1, 2).unwrap();
        let tri = AugChain::new(1, vec![p(0), p(1), st(&[0, 1])]).unwrap();
        assert!(c.contains(&tri));
        assert!(tri.is_nondegenerate());
        assert_eq!(tri.face(2).unwrap().entries, vec![p(0), p(1)]);
        assert_eq!(tri.face(1).unwrap().entries, vec![p(0), st(&[0, 1])]);
    }

    #[test]
    fn shape_violations() {
        assert!(AugChain::new(2, vec![st(&[0, 1]), p(0)]).is_err());
        assert!(AugChain::new(2, vec![p(2), st(&[0, 1])]).is_err());
        assert!(AugChain::new(2, vec![p(1), p(0)]).is_err());
        assert!(AugChain::new(2, vec![st(&[0, 1]), st(&[1, 2])]).is_err());
        assert!(matches!(
            AugChain::new(1, vec![p(0)]).unwrap().face(0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn enumeration_is_closed_and_duplicate_free() {
        for n in 0..=2 {
            for l in 0..=3 {
                let all = enumerate_csd(n, l).unwrap();
                let mut sorted = all.clone();
                sorted.dedup();
                assert_eq!(sorted.len(), all.len());
                for c in &all {
                    assert!(AugChain::new(n, c.entries.clone()).is_ok());
                    if l > 0 {
                        for j in 0..=l {
                            let f = c.face(j).unwrap();
                            assert!(enumerate_csd(n, l - 1).unwrap().contains(&f));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phi_star_examples() {
        let tri = AugChain::new(1, vec![p(0), p(1), st(&[0, 1])]).unwrap();
        assert_eq!(phi_star(&[0, 1], 1, &tri).unwrap(), tri);
        let inc = phi_star(&[0, 1], 2, &tri).unwrap();
        assert_eq!(inc.entries, vec![p(0), p(1), st(&[0, 1])]);
        let c = AugChain::new(2, vec![p(0), st(&[0, 1]), st(&[0, 1, 2])]).unwrap();
        let collapsed = phi_star(&[0, 0, 1], 1, &c).unwrap();
        assert_eq!(collapsed.entries, vec![p(0), p(0), st(&[0, 1])]);
        assert!(matches!(phi_star(&[1, 0], 1, &tri), Err(Error::NotMonotone(_))));
    }

    #[test]
    fn functor_on_an_edge() {
        let chain = random_chain(&mut rng(21), 1, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let f = subdivision_functor(&s).unwrap();
        let e = s.corr(0, 1);
        // {1} ⊆ {0,1} is the corner embedding, {0} ⊆ {0,1} the left action
        let i = corner_embedding(e.module()).unwrap();
        assert!(f.hom(subset(&[1]), subset(&[0, 1])).dist(&i) < 1e-12);
        let fe = left_action_hom(e).unwrap();
        assert!(f.hom(subset(&[0]), subset(&[0, 1])).dist(&fe) < 1e-9);
        assert!(f.hom(subset(&[0, 1]), subset(&[0, 1])).dist(&StarHom::identity(f.algebra(3))) < 1e-15);
        assert_eq!(f.algebra(subset(&[0])).blocks(), s.algebra(0).blocks());
    }

    #[test]
    fn functor_on_a_triangle() {
        let chain = random_chain(&mut rng(22), 2, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let f = subdivision_functor(&s).unwrap();
        let rep = f.functoriality_report();
        // every chain S ⊆ T ⊆ U of nonempty subsets of [2]
        let mut brute = 0;
        for u in 1..8u32 {
            for t in 1..8u32 {
                for s in 1..8u32 {
                    if is_subset(s, t) && is_subset(t, u) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(rep.chains_checked, brute);
        assert!(rep.max_residual < 1e-9);
        let top = module_e_s(&s, 7).unwrap();
        let expect: Vec<usize> = (0..s.algebra(2).num_blocks())
            .map(|b| (0..3).map(|l| s.corr(l, 2).mult()[b]).sum())
            .collect();
        assert_eq!(top.module.mult(), expect.as_slice());
    }

    #[test]
    fn corrupted_simplex_breaks_functoriality() {
        let chain = random_chain(&mut rng(23), 2, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        assert!(SubdivisionFunctor::build(&s).unwrap().functoriality_report().max_residual < 1e-9);
        // twist u_012 by a unitary that does not commute with the left action
        let mut r = rng(5);
        let blocks: Vec<CMat> = s
            .iso(0, 1, 2)
            .blocks()
            .iter()
            .map(|u| crate::random::random_unitary(&mut r, u.nrows()) * u)
            .collect();
        let bad = s.with_iso_unchecked((0, 1, 2), blocks);
        match subdivision_functor(&bad) {
            Err(Error::FunctorialityViolated { residual, .. }) => assert!(residual > 1e-6),
            other => panic!("expected a functoriality violation, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn simplicial_identities_hold_exhaustively() {
        let rep = simplicial_identity_report(2, 3).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        assert!(rep.identities_checked > 1000);
    }

    #[test]
    fn face_naturality() {
        let chain = random_chain(&mut rng(24), 2, small(), true);
        let s = gamma_simplex(&chain).unwrap();
        let f = SubdivisionFunctor::build(&s).unwrap();
        for m in 0..=2 {
            let d = s.face(m).unwrap();
            let fd = SubdivisionFunctor::build(&d).unwrap();
            let delta = crate::nerve::coface(2, m);
            let push = |x: Subset| elements(x).iter().fold(0, |acc, &i| acc | (1 << delta[i]));
            for (&(a, b), arrow) in &fd.arrows {
                assert!(arrow.hom.dist(f.hom(push(a), push(b))) < 1e-12);
            }
        }
    }
}
