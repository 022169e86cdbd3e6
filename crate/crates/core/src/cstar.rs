//! Finite-dimensional C*-algebras `⊕ M_{n_i}(ℂ)` and *-homomorphisms between
//! them.
//!
//! Coordinates are fixed once and for all: the basis of an algebra is the
//! list of matrix units, block-major and row-major inside each block. A
//! linear map between algebras is stored as a dense matrix in these bases.

use std::fmt;
use std::hash::{Hash, Hasher};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, c, frobenius, frobenius_diff, CMat, C64, EPS};

/// `⊕_i M_{n_i}(ℂ)`, given by its ordered list of block sizes.
#[derive(Clone, Debug)]
pub struct FdCstarAlgebra {
    blocks: Vec<usize>,
    label: Option<String>,
}

impl PartialEq for FdCstarAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }
}

impl Eq for FdCstarAlgebra {}

impl Hash for FdCstarAlgebra {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.blocks.hash(state);
    }
}

impl fmt::Display for FdCstarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|&n| if n == 1 { "C".to_string() } else { format!("M{n}") })
            .collect();
        match &self.label {
            Some(l) => write!(f, "{l} = {}", parts.join(" ⊕ ")),
            None => write!(f, "{}", parts.join(" ⊕ ")),
        }
    }
}

/// Builds `⊕ M_{n_i}` from its block sizes.
pub fn make_algebra(blocks: &[usize]) -> Result<FdCstarAlgebra> {
    FdCstarAlgebra::new(blocks.to_vec())
}

impl FdCstarAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("empty block list".into()));
        }
        if let Some(pos) = blocks.iter().position(|&n| n == 0) {
            return Err(Error::InvalidAlgebra(format!(
                "block {pos} has nonpositive size"
            )));
        }
        Ok(FdCstarAlgebra {
            blocks,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self, i: usize) -> usize {
        self.blocks[i]
    }

    /// Total complex dimension `Σ n_i²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Coordinate offset of block `i`.
    pub fn offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|n| n * n).sum()
    }

    pub fn basis_index(&self, block: usize, row: usize, col: usize) -> usize {
        self.offset(block) + row * self.blocks[block] + col
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_entry(&self, mut idx: usize) -> (usize, usize, usize) {
        for (i, &n) in self.blocks.iter().enumerate() {
            if idx < n * n {
                return (i, idx / n, idx % n);
            }
            idx -= n * n;
        }
        panic!("basis index out of range");
    }
}

/// An element of an [`FdCstarAlgebra`]: one `n_i × n_i` matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgElement {
    parent: FdCstarAlgebra,
    mats: Vec<CMat>,
}

impl AlgElement {
    pub fn new(parent: &FdCstarAlgebra, mats: Vec<CMat>) -> Result<Self> {
        if mats.len() != parent.num_blocks() {
            return Err(Error::LengthMismatch {
                expected: parent.num_blocks(),
                got: mats.len(),
            });
        }
        for (i, (m, &n)) in mats.iter().zip(parent.blocks()).enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} has shape {:?}, expected ({n}, {n})",
                    m.shape()
                )));
            }
        }
        Ok(AlgElement {
            parent: parent.clone(),
            mats,
        })
    }

    pub fn zero(parent: &FdCstarAlgebra) -> Self {
        AlgElement {
            parent: parent.clone(),
            mats: parent.blocks().iter().map(|&n| linalg::zeros(n, n)).collect(),
        }
    }

    pub fn one(parent: &FdCstarAlgebra) -> Self {
        AlgElement {
            parent: parent.clone(),
            mats: parent.blocks().iter().map(|&n| linalg::identity(n)).collect(),
        }
    }

    /// Unit of the `i`-th block.
    pub fn block_unit(parent: &FdCstarAlgebra, i: usize) -> Self {
        let mut e = Self::zero(parent);
        e.mats[i] = linalg::identity(parent.block_size(i));
        e
    }

    /// The matrix unit with the given basis index.
    pub fn basis(parent: &FdCstarAlgebra, idx: usize) -> Self {
        let (b, r, col) = parent.basis_entry(idx);
        let mut e = Self::zero(parent);
        e.mats[b][(r, col)] = c(1.0, 0.0);
        e
    }

    pub fn from_coords(parent: &FdCstarAlgebra, v: &DVector<C64>) -> Result<Self> {
        if v.len() != parent.dim() {
            return Err(Error::LengthMismatch {
                expected: parent.dim(),
                got: v.len(),
            });
        }
        let mut mats = Vec::with_capacity(parent.num_blocks());
        let mut off = 0;
        for &n in parent.blocks() {
            mats.push(CMat::from_fn(n, n, |r, col| v[off + r * n + col]));
            off += n * n;
        }
        Ok(AlgElement {
            parent: parent.clone(),
            mats,
        })
    }

    pub fn to_coords(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.parent.dim());
        let mut off = 0;
        for m in &self.mats {
            let n = m.nrows();
            for r in 0..n {
                for col in 0..n {
                    v[off + r * n + col] = m[(r, col)];
                }
            }
            off += n * n;
        }
        v
    }

    pub fn parent(&self) -> &FdCstarAlgebra {
        &self.parent
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.mats
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.mats
    }

    pub fn mul(&self, other: &AlgElement) -> AlgElement {
        AlgElement {
            parent: self.parent.clone(),
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn adjoint(&self) -> AlgElement {
        AlgElement {
            parent: self.parent.clone(),
            mats: self.mats.iter().map(|a| a.adjoint()).collect(),
        }
    }

    pub fn sub(&self, other: &AlgElement) -> AlgElement {
        AlgElement {
            parent: self.parent.clone(),
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a - b).collect(),
        }
    }

    /// Frobenius norm over all blocks.
    pub fn norm(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| frobenius(m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dist(&self, other: &AlgElement) -> f64 {
        self.sub(other).norm()
    }
}

/// Residual of a linear map as a *-homomorphism, split by failure kind.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HomResiduals {
    pub multiplicative: f64,
    pub worst_pair: (usize, usize),
    pub star: f64,
    pub worst_star: usize,
}

/// A validated *-homomorphism between finite-dimensional C*-algebras.
#[derive(Clone, Debug)]
pub struct StarHom {
    src: FdCstarAlgebra,
    dst: FdCstarAlgebra,
    map: CMat,
    mult: Vec<Vec<usize>>,
}

/// Above this many basis-pair products the multiplicativity check switches
/// from all pairs to the matrix-unit relations, which characterise
/// *-homomorphisms equally well.
const FULL_CHECK_LIMIT: usize = 4096;

/// Validates `raw_map` (a `dim dst × dim src` matrix in the canonical bases)
/// as a *-homomorphism and computes its multiplicity matrix.
pub fn make_star_hom(src: &FdCstarAlgebra, dst: &FdCstarAlgebra, raw_map: CMat) -> Result<StarHom> {
    StarHom::new(src.clone(), dst.clone(), raw_map)
}

/// `psi ∘ phi`, revalidated, with the multiplicity law checked.
pub fn compose_homs(psi: &StarHom, phi: &StarHom) -> Result<StarHom> {
    psi.compose(phi)
}

impl StarHom {
    pub fn new(src: FdCstarAlgebra, dst: FdCstarAlgebra, map: CMat) -> Result<Self> {
        if map.shape() != (dst.dim(), src.dim()) {
            return Err(Error::ShapeMismatch(format!(
                "map has shape {:?}, expected ({}, {})",
                map.shape(),
                dst.dim(),
                src.dim()
            )));
        }
        let res = hom_residuals(&src, &dst, &map);
        if res.multiplicative > EPS {
            return Err(Error::NotMultiplicative {
                left: res.worst_pair.0,
                right: res.worst_pair.1,
                residual: res.multiplicative,
            });
        }
        if res.star > EPS {
            return Err(Error::NotStarPreserving {
                index: res.worst_star,
                residual: res.star,
            });
        }
        let mult = multiplicities(&src, &dst, &map)?;
        Ok(StarHom {
            src,
            dst,
            map,
            mult,
        })
    }

    /// Builds a map from the images of the basis matrix units and validates it.
    pub fn from_basis_images(
        src: &FdCstarAlgebra,
        dst: &FdCstarAlgebra,
        mut image: impl FnMut(usize, usize, usize) -> Vec<CMat>,
    ) -> Result<Self> {
        let map = map_from_basis_images(src, dst, &mut image)?;
        StarHom::new(src.clone(), dst.clone(), map)
    }

    /// `a ↦ W_j (⊕_i 1_{r_ij} ⊗ a_i ⊕ 0) W_j*` in every target block `j`.
    pub fn from_normal_form(
        src: &FdCstarAlgebra,
        dst: &FdCstarAlgebra,
        mult: &[Vec<usize>],
        unitaries: &[CMat],
    ) -> Result<Self> {
        if mult.len() != src.num_blocks() || unitaries.len() != dst.num_blocks() {
            return Err(Error::ShapeMismatch("normal form data has wrong length".into()));
        }
        for j in 0..dst.num_blocks() {
            let used: usize = (0..src.num_blocks())
                .map(|i| mult[i][j] * src.block_size(i))
                .sum();
            if used > dst.block_size(j) || unitaries[j].shape() != (dst.block_size(j), dst.block_size(j)) {
                return Err(Error::ShapeMismatch(format!(
                    "target block {j} cannot hold multiplicities"
                )));
            }
        }
        Self::from_basis_images(src, dst, |i, r, col| {
            (0..dst.num_blocks())
                .map(|j| {
                    let m = dst.block_size(j);
                    let mut d = linalg::zeros(m, m);
                    let mut off: usize = (0..i).map(|i2| mult[i2][j] * src.block_size(i2)).sum();
                    let n = src.block_size(i);
                    for _ in 0..mult[i][j] {
                        d[(off + r, off + col)] = c(1.0, 0.0);
                        off += n;
                    }
                    &unitaries[j] * d * unitaries[j].adjoint()
                })
                .collect()
        })
    }

    pub fn identity(alg: &FdCstarAlgebra) -> Self {
        let n = alg.dim();
        let mult = (0..alg.num_blocks())
            .map(|i| (0..alg.num_blocks()).map(|j| usize::from(i == j)).collect())
            .collect();
        StarHom {
            src: alg.clone(),
            dst: alg.clone(),
            map: linalg::identity(n),
            mult,
        }
    }

    pub fn src(&self) -> &FdCstarAlgebra {
        &self.src
    }

    pub fn dst(&self) -> &FdCstarAlgebra {
        &self.dst
    }

    pub fn matrix(&self) -> &CMat {
        &self.map
    }

    /// `r_{ij}`: multiplicity of source block `i` inside target block `j`.
    pub fn mult_matrix(&self) -> &[Vec<usize>] {
        &self.mult
    }

    pub fn apply(&self, x: &AlgElement) -> AlgElement {
        let v = &self.map * x.to_coords();
        AlgElement::from_coords(&self.dst, &v).expect("dimension fixed at construction")
    }

    /// Image of the basis matrix unit with index `idx`.
    pub fn image_of_basis(&self, idx: usize) -> AlgElement {
        AlgElement::from_coords(&self.dst, &self.map.column(idx).into_owned())
            .expect("dimension fixed at construction")
    }

    /// `φ(1)`.
    pub fn unit_image(&self) -> AlgElement {
        self.apply(&AlgElement::one(&self.src))
    }

    pub fn is_unital(&self) -> bool {
        self.unit_image().dist(&AlgElement::one(&self.dst)) <= EPS
    }

    /// Normal-form multiplicities satisfy `Σ_i r_ij n_i ≤ m_j`, with equality
    /// everywhere exactly for unital maps.
    pub fn is_unital_by_multiplicity(&self) -> bool {
        (0..self.dst.num_blocks()).all(|j| {
            (0..self.src.num_blocks())
                .map(|i| self.mult[i][j] * self.src.block_size(i))
                .sum::<usize>()
                == self.dst.block_size(j)
        })
    }

    pub fn compose(&self, phi: &StarHom) -> Result<StarHom> {
        if phi.dst != self.src {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.src, self.dst, phi.src, phi.dst
            )));
        }
        let map = &self.map * &phi.map;
        let out = StarHom::new(phi.src.clone(), self.dst.clone(), map)?;
        let expected = int_matmul(&phi.mult, &self.mult);
        if out.mult != expected {
            return Err(Error::ShapeMismatch(format!(
                "multiplicity matrix {:?} of composite differs from product {:?}",
                out.mult, expected
            )));
        }
        Ok(out)
    }

    /// Largest entrywise distance between the two maps, infinite if the
    /// endpoints differ.
    pub fn dist(&self, other: &StarHom) -> f64 {
        if self.src != other.src || self.dst != other.dst {
            return f64::INFINITY;
        }
        frobenius_diff(&self.map, &other.map)
    }

    /// Unitaries `W_j`, one per target block, with
    /// `W_j* φ(a)_j W_j = ⊕_i (1_{r_ij} ⊗ a_i) ⊕ 0`.
    pub fn normal_form(&self) -> Vec<CMat> {
        let src = &self.src;
        (0..self.dst.num_blocks())
            .map(|j| {
                let m = self.dst.block_size(j);
                let mut cols: Vec<DVector<C64>> = Vec::with_capacity(m);
                for i in 0..src.num_blocks() {
                    let r = self.mult[i][j];
                    if r == 0 {
                        continue;
                    }
                    let n = src.block_size(i);
                    let p00 = self.image_of_basis(src.basis_index(i, 0, 0)).mats[j].clone();
                    let seeds = linalg::orthonormal_columns(&p00);
                    for copy in 0..seeds.ncols() {
                        let v = seeds.column(copy).into_owned();
                        for s in 0..n {
                            let e_s0 = &self.image_of_basis(src.basis_index(i, s, 0)).mats[j];
                            cols.push(e_s0 * &v);
                        }
                    }
                }
                let mut w = linalg::zeros(m, m);
                for (k, col) in cols.iter().enumerate() {
                    w.set_column(k, col);
                }
                let used = cols.len();
                if used < m {
                    let v = w.columns(0, used).into_owned();
                    let rest = linalg::complement_columns(&v);
                    for k in 0..rest.ncols().min(m - used) {
                        w.set_column(used + k, &rest.column(k));
                    }
                }
                w
            })
            .collect()
    }
}

pub(crate) fn int_matmul(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|k| (0..inner).map(|j| row[j] * b[j][k]).sum())
                .collect()
        })
        .collect()
}

/// Dense matrix of the linear map whose value on the matrix unit
/// `(block, row, col)` of `src` is given by `image`.
pub fn map_from_basis_images(
    src: &FdCstarAlgebra,
    dst: &FdCstarAlgebra,
    image: &mut impl FnMut(usize, usize, usize) -> Vec<CMat>,
) -> Result<CMat> {
    let mut map = linalg::zeros(dst.dim(), src.dim());
    for idx in 0..src.dim() {
        let (b, r, col) = src.basis_entry(idx);
        let el = AlgElement::new(dst, image(b, r, col))?;
        map.set_column(idx, &el.to_coords());
    }
    Ok(map)
}

fn block_images(src: &FdCstarAlgebra, dst: &FdCstarAlgebra, map: &CMat, i: usize) -> Vec<Vec<CMat>> {
    // images[a*n+b][j] = φ(E^{(i)}_{ab}) in target block j
    let n = src.block_size(i);
    (0..n * n)
        .map(|ab| {
            let idx = src.offset(i) + ab;
            AlgElement::from_coords(dst, &map.column(idx).into_owned())
                .expect("shape checked")
                .mats
        })
        .collect()
}

fn blockwise_dist(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| frobenius_diff(x, y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn blockwise_mul(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Multiplicativity and *-preservation residuals of a linear map.
pub fn hom_residuals(src: &FdCstarAlgebra, dst: &FdCstarAlgebra, map: &CMat) -> HomResiduals {
    let mut res = HomResiduals::default();
    let zero: Vec<CMat> = dst.blocks().iter().map(|&m| linalg::zeros(m, m)).collect();
    let images: Vec<Vec<Vec<CMat>>> = (0..src.num_blocks())
        .map(|i| block_images(src, dst, map, i))
        .collect();
    let record = |r: f64, l: usize, rt: usize, res: &mut HomResiduals| {
        if r > res.multiplicative {
            res.multiplicative = r;
            res.worst_pair = (l, rt);
        }
    };
    let pairs: usize = src.blocks().iter().map(|n| n.pow(4)).sum::<usize>()
        + src.dim().pow(2) / src.num_blocks().max(1);
    let full = pairs <= FULL_CHECK_LIMIT;
    for (i, imgs) in images.iter().enumerate() {
        let n = src.block_size(i);
        let off = src.offset(i);
        if full {
            for ab in 0..n * n {
                for cd in 0..n * n {
                    let (a, b) = (ab / n, ab % n);
                    let (cc, d) = (cd / n, cd % n);
                    let prod = blockwise_mul(&imgs[ab], &imgs[cd]);
                    let expect = if b == cc { &imgs[a * n + d] } else { &zero };
                    record(blockwise_dist(&prod, expect), off + ab, off + cd, &mut res);
                }
            }
        } else {
            for a in 0..n {
                for b in 0..n {
                    let prod = blockwise_mul(&imgs[a * n], &imgs[b]);
                    record(blockwise_dist(&prod, &imgs[a * n + b]), off + a * n, off + b, &mut res);
                    let prod2 = blockwise_mul(&imgs[a], &imgs[b * n]);
                    let expect = if a == b { &imgs[0] } else { &zero };
                    record(blockwise_dist(&prod2, expect), off + a, off + b * n, &mut res);
                }
            }
        }
        for ab in 0..n * n {
            let (a, b) = (ab / n, ab % n);
            let adj: Vec<CMat> = imgs[ab].iter().map(|m| m.adjoint()).collect();
            let r = blockwise_dist(&adj, &imgs[b * n + a]);
            if r > res.star {
                res.star = r;
                res.worst_star = off + ab;
            }
        }
    }
    // products across different source blocks must vanish
    for i in 0..src.num_blocks() {
        for i2 in 0..src.num_blocks() {
            if i == i2 {
                continue;
            }
            let (n, n2) = (src.block_size(i), src.block_size(i2));
            if full {
                for ab in 0..n * n {
                    for cd in 0..n2 * n2 {
                        let prod = blockwise_mul(&images[i][ab], &images[i2][cd]);
                        record(
                            blockwise_dist(&prod, &zero),
                            src.offset(i) + ab,
                            src.offset(i2) + cd,
                            &mut res,
                        );
                    }
                }
            } else {
                let one_i = sum_diag(&images[i], n);
                let one_i2 = sum_diag(&images[i2], n2);
                let prod = blockwise_mul(&one_i, &one_i2);
                record(blockwise_dist(&prod, &zero), src.offset(i), src.offset(i2), &mut res);
            }
        }
    }
    res
}

fn sum_diag(imgs: &[Vec<CMat>], n: usize) -> Vec<CMat> {
    let mut acc = imgs[0].clone();
    for a in 1..n {
        for (x, y) in acc.iter_mut().zip(&imgs[a * n + a]) {
            *x += y;
        }
    }
    acc
}

fn multiplicities(src: &FdCstarAlgebra, dst: &FdCstarAlgebra, map: &CMat) -> Result<Vec<Vec<usize>>> {
    let mut mult = vec![vec![0; dst.num_blocks()]; src.num_blocks()];
    for i in 0..src.num_blocks() {
        let n = src.block_size(i);
        let e00 = AlgElement::from_coords(dst, &map.column(src.offset(i)).into_owned())?;
        let one = {
            let mut acc = AlgElement::zero(dst);
            for a in 0..n {
                let e = AlgElement::from_coords(dst, &map.column(src.basis_index(i, a, a)).into_owned())?;
                for (x, y) in acc.mats.iter_mut().zip(&e.mats) {
                    *x += y;
                }
            }
            acc
        };
        for j in 0..dst.num_blocks() {
            let r = linalg::rank(&e00.mats[j]);
            let r_one = linalg::rank(&one.mats[j]);
            if r_one != r * n {
                return Err(Error::ShapeMismatch(format!(
                    "rank {r_one} of the block-{i} unit image in target block {j} is not {n}·{r}"
                )));
            }
            mult[i][j] = r;
        }
    }
    for j in 0..dst.num_blocks() {
        let used: usize = (0..src.num_blocks()).map(|i| mult[i][j] * src.block_size(i)).sum();
        if used > dst.block_size(j) {
            return Err(Error::ShapeMismatch(format!(
                "target block {j} receives {used} > {} dimensions",
                dst.block_size(j)
            )));
        }
    }
    Ok(mult)
}

/// Whether the closed linear span of `B p B` is all of `B`, where
/// `p = φ(1)`. Decided by the rank of the span of all `e_a p e_b`.
pub fn is_full_hom(phi: &StarHom) -> bool {
    let dst = phi.dst();
    let p = phi.unit_image();
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for j in 0..dst.num_blocks() {
        let m = dst.block_size(j);
        for a in 0..m * m {
            for b in 0..m * m {
                let ea = AlgElement::basis(dst, dst.offset(j) + a);
                let eb = AlgElement::basis(dst, dst.offset(j) + b);
                cols.push(ea.mul(&p).mul(&eb).to_coords());
            }
        }
    }
    let mut span = linalg::zeros(dst.dim(), cols.len());
    for (k, col) in cols.iter().enumerate() {
        span.set_column(k, col);
    }
    // rank(S) = rank(S S*), which is cheaper when there are many columns
    let gram = &span * span.adjoint();
    linalg::rank(&gram) == dst.dim()
}

/// A corner `pBp` in canonical block form.
#[derive(Clone, Debug)]
pub struct Corner {
    pub algebra: FdCstarAlgebra,
    pub inclusion: StarHom,
    /// Per block of `B`: a unitary whose first `rank(p_j)` columns span the
    /// range of `p_j`.
    pub frames: Vec<CMat>,
    /// `rank(p_j)` for every block of `B`, including zeros.
    pub ranks: Vec<usize>,
}

/// Presents the corner `pBp` of `b` in canonical block form, dropping
/// blocks where `p` vanishes.
pub fn corner_algebra(p: &AlgElement, b: &FdCstarAlgebra) -> Result<Corner> {
    if p.parent() != b {
        return Err(Error::ShapeMismatch("projection does not live in B".into()));
    }
    let res = p.blocks().iter().map(linalg::projection_residual).fold(0.0, f64::max);
    if res > EPS {
        return Err(Error::NotProjection(res));
    }
    let mut frames = Vec::new();
    let mut ranks = Vec::new();
    let mut isometries = Vec::new();
    for pj in p.blocks() {
        let v = linalg::orthonormal_columns(pj);
        let rest = linalg::complement_columns(&v);
        let m = pj.nrows();
        let mut u = linalg::zeros(m, m);
        for k in 0..v.ncols() {
            u.set_column(k, &v.column(k));
        }
        for k in 0..rest.ncols().min(m - v.ncols()) {
            u.set_column(v.ncols() + k, &rest.column(k));
        }
        ranks.push(v.ncols());
        frames.push(u);
        isometries.push(v);
    }
    let kept: Vec<usize> = (0..ranks.len()).filter(|&j| ranks[j] > 0).collect();
    if kept.is_empty() {
        return Err(Error::InvalidAlgebra("corner of the zero projection".into()));
    }
    let algebra = FdCstarAlgebra::new(kept.iter().map(|&j| ranks[j]).collect())?
        .with_label("pBp");
    let inclusion = StarHom::from_basis_images(&algebra, b, |blk, r, col| {
        let j = kept[blk];
        let v = &isometries[j];
        (0..b.num_blocks())
            .map(|jj| {
                let m = b.block_size(jj);
                if jj != j {
                    return linalg::zeros(m, m);
                }
                let unit = linalg::unit(v.ncols(), v.ncols(), r, col);
                v * unit * v.adjoint()
            })
            .collect()
    })?;
    Ok(Corner {
        algebra,
        inclusion,
        frames,
        ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(b: &[usize]) -> FdCstarAlgebra {
        make_algebra(b).unwrap()
    }

    fn corner_c_to_m2() -> StarHom {
        // ℂ → M₂, z ↦ diag(z, 0)
        StarHom::from_basis_images(&alg(&[1]), &alg(&[2]), |_, _, _| vec![linalg::unit(2, 2, 0, 0)]).unwrap()
    }

    #[test]
    fn algebra_dimensions() {
        assert_eq!(alg(&[2, 1]).dim(), 5);
        assert_eq!(alg(&[1]).dim(), 1);
        assert_eq!(alg(&[3, 2, 2]).dim(), 17);
    }

    #[test]
    fn invalid_algebras_rejected() {
        assert!(matches!(make_algebra(&[]), Err(Error::InvalidAlgebra(_))));
        assert!(matches!(make_algebra(&[2, 0]), Err(Error::InvalidAlgebra(_))));
    }

    #[test]
    fn basis_index_round_trip() {
        let a = alg(&[2, 1, 3]);
        for idx in 0..a.dim() {
            let (b, r, col) = a.basis_entry(idx);
            assert_eq!(a.basis_index(b, r, col), idx);
        }
    }

    #[test]
    fn identity_hom_multiplicity() {
        let a = alg(&[2]);
        let id = make_star_hom(&a, &a, linalg::identity(4)).unwrap();
        assert_eq!(id.mult_matrix(), &[vec![1]]);
        assert!(id.is_unital());
    }

    #[test]
    fn rank_one_corner_is_non_unital() {
        let phi = corner_c_to_m2();
        assert_eq!(phi.mult_matrix(), &[vec![1]]);
        assert!(!phi.is_unital());
        assert!(!phi.is_unital_by_multiplicity());
    }

    #[test]
    fn scalar_diagonal_is_unital_multiplicity_two() {
        // ℂ → M₂, z ↦ diag(z, z); brute force: rank φ(1) = 2
        let phi = StarHom::from_basis_images(&alg(&[1]), &alg(&[2]), |_, _, _| vec![linalg::identity(2)]).unwrap();
        assert_eq!(linalg::rank(phi.unit_image().block(0)), 2);
        assert_eq!(phi.mult_matrix(), &[vec![2]]);
        assert!(phi.is_unital());
    }

    #[test]
    fn corrupted_map_is_rejected() {
        let a = alg(&[2]);
        let mut m = linalg::identity(4);
        m[(1, 1)] = c(1.0 + 1e-6, 0.0);
        match make_star_hom(&a, &a, m) {
            Err(Error::NotMultiplicative { residual, .. }) => assert!(residual > 1e-7),
            other => panic!("expected NotMultiplicative, got {other:?}"),
        }
    }

    #[test]
    fn non_star_map_is_rejected() {
        // z ↦ conj-linear would not be linear; use the transpose on M₂, which
        // preserves adjoints but reverses products
        let a = alg(&[2]);
        let mut m = linalg::zeros(4, 4);
        for r in 0..2 {
            for col in 0..2 {
                m[(col * 2 + r, r * 2 + col)] = c(1.0, 0.0);
            }
        }
        assert!(matches!(make_star_hom(&a, &a, m), Err(Error::NotMultiplicative { .. })));
        // a multiplicative map that is not *-preserving: conjugation by a
        // non-unitary invertible matrix
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s_inv = s.clone().try_inverse().unwrap();
        let h = StarHom::from_basis_images(&a, &a, |_, r, col| vec![&s * linalg::unit(2, 2, r, col) * &s_inv]);
        assert!(matches!(h, Err(Error::NotStarPreserving { .. })));
    }

    #[test]
    fn composition_multiplies_multiplicities() {
        // ℂ → M₂ rank-one corner, then M₂ → M₄, a ↦ a ⊕ a
        let phi = corner_c_to_m2();
        let psi = StarHom::from_normal_form(&alg(&[2]), &alg(&[4]), &[vec![2]], &[linalg::identity(4)]).unwrap();
        let comp = compose_homs(&psi, &phi).unwrap();
        // brute-force: the composite sends 1 to a rank-2 projection
        assert_eq!(linalg::rank(comp.unit_image().block(0)), 2);
        assert_eq!(comp.mult_matrix(), &[vec![2]]);
        let id = StarHom::identity(&alg(&[2]));
        assert!(compose_homs(&id, &phi).unwrap().dist(&phi) < 1e-15);
        assert!(matches!(compose_homs(&phi, &psi), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn fullness_of_homs() {
        assert!(is_full_hom(&StarHom::identity(&alg(&[2, 1]))));
        assert!(is_full_hom(&corner_c_to_m2()));
        let phi = StarHom::from_basis_images(&alg(&[1]), &alg(&[2, 1]), |_, _, _| {
            vec![linalg::unit(2, 2, 0, 0), linalg::zeros(1, 1)]
        })
        .unwrap();
        assert!(!is_full_hom(&phi));
    }

    #[test]
    fn corners() {
        let b = alg(&[3]);
        let one = AlgElement::one(&b);
        let full = corner_algebra(&one, &b).unwrap();
        assert_eq!(full.algebra, b);
        assert!(full.inclusion.dist(&StarHom::identity(&b)) < 1e-14);

        let mut p = AlgElement::zero(&b);
        p.mats[0][(0, 0)] = c(1.0, 0.0);
        p.mats[0][(1, 1)] = c(1.0, 0.0);
        assert_eq!(corner_algebra(&p, &b).unwrap().algebra.blocks(), &[2]);

        let b2 = alg(&[2, 1]);
        let p2 = AlgElement::new(&b2, vec![linalg::unit(2, 2, 0, 0), linalg::identity(1)]).unwrap();
        assert_eq!(corner_algebra(&p2, &b2).unwrap().algebra.blocks(), &[1, 1]);

        let mut bad = AlgElement::zero(&b);
        bad.mats[0][(0, 1)] = c(1.0, 0.0);
        assert!(matches!(corner_algebra(&bad, &b), Err(Error::NotProjection(_))));
    }

    #[test]
    fn normal_form_diagonalises() {
        let a = alg(&[2, 1]);
        let b = alg(&[5]);
        let w = {
            // a fixed non-trivial unitary: permutation times phases
            let mut u = linalg::zeros(5, 5);
            let perm = [3, 0, 4, 1, 2];
            for (k, &p) in perm.iter().enumerate() {
                u[(p, k)] = c((k as f64).cos(), (k as f64).sin());
            }
            u
        };
        let phi = StarHom::from_normal_form(&a, &b, &[vec![2], vec![1]], &[w]).unwrap();
        let nf = phi.normal_form();
        let x = AlgElement::new(&a, vec![CMat::from_fn(2, 2, |r, col| c(r as f64 + 1.0, col as f64)), CMat::from_element(1, 1, c(7.0, 1.0))]).unwrap();
        let img = phi.apply(&x);
        let diag = nf[0].adjoint() * img.block(0) * &nf[0];
        let expect = linalg::block_diag(&[x.block(0).clone(), x.block(0).clone(), x.block(1).clone()]);
        assert!(frobenius_diff(&diag, &expect) < 1e-12);
    }
}
