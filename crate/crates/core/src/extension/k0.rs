//! The nerve of the category of finitely generated free abelian groups, and
//! K₀ as a C*-stable functor into it.
//!
//! `K₀(⊕ M_{n_i}) = ℤ^{#blocks}` and a *-homomorphism acts by the transpose
//! of its multiplicity matrix. Corner embeddings have invertible matrices,
//! which is what makes K₀ C*-stable.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::Ratio;

use super::{CstFunctor, Homotopy, Horn, QuasiCategory};
use crate::cstar::{AlgElement, StarHom};
use crate::error::{Error, Result};
use crate::hilbert::Correspondence;
use crate::nerve::{check_monotone, codegeneracy, coface, CstSimplex, Edge};

pub type IntMat = DMatrix<i64>;

/// An `n`-simplex of the nerve: ranks `r_0, …, r_n` and all composites
/// `M_ij: ℤ^{r_i} → ℤ^{r_j}` with `M_ik = M_jk M_ij` and `M_ii = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K0Simplex {
    pub ranks: Vec<usize>,
    pub maps: BTreeMap<Edge, IntMat>,
}

impl K0Simplex {
    /// Builds from the consecutive maps `M_{i,i+1}`.
    pub fn from_spine(ranks: Vec<usize>, spine: &[IntMat]) -> Result<Self> {
        if ranks.is_empty() || spine.len() + 1 != ranks.len() {
            return Err(Error::LengthMismatch {
                expected: ranks.len().saturating_sub(1),
                got: spine.len(),
            });
        }
        let n = spine.len();
        let mut maps = BTreeMap::new();
        for i in 0..=n {
            maps.insert((i, i), IntMat::identity(ranks[i], ranks[i]));
            for j in i + 1..=n {
                let m = &spine[j - 1] * &maps[&(i, j - 1)];
                maps.insert((i, j), m);
            }
        }
        let s = K0Simplex { ranks, maps };
        s.check()?;
        Ok(s)
    }

    /// Builds from all maps and checks the composition law.
    pub fn from_maps(ranks: Vec<usize>, maps: BTreeMap<Edge, IntMat>) -> Result<Self> {
        let s = K0Simplex { ranks, maps };
        s.check()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.ranks.len() - 1
    }

    pub fn map(&self, i: usize, j: usize) -> &IntMat {
        &self.maps[&(i, j)]
    }

    /// Checks identities on the diagonal and `M_ik = M_jk M_ij`.
    pub fn check(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..=n {
            for j in i..=n {
                let m = self
                    .maps
                    .get(&(i, j))
                    .ok_or_else(|| Error::ShapeMismatch(format!("map ({i}, {j}) is missing")))?;
                if m.shape() != (self.ranks[j], self.ranks[i]) {
                    return Err(Error::ShapeMismatch(format!(
                        "map ({i}, {j}) has shape {:?}, expected {:?}",
                        m.shape(),
                        (self.ranks[j], self.ranks[i])
                    )));
                }
            }
            if self.maps[&(i, i)] != IntMat::identity(self.ranks[i], self.ranks[i]) {
                return Err(Error::ShapeMismatch(format!("map ({i}, {i}) is not the identity")));
            }
        }
        for i in 0..=n {
            for j in i..=n {
                for k in j..=n {
                    if self.maps[&(i, k)] != &self.maps[&(j, k)] * &self.maps[&(i, j)] {
                        return Err(Error::ShapeMismatch(format!("maps do not compose at ({i}, {j}, {k})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_map(&self, phi: &[usize]) -> Result<K0Simplex> {
        check_monotone(phi, self.dim())?;
        let m = phi.len() - 1;
        let ranks = phi.iter().map(|&v| self.ranks[v]).collect();
        let mut maps = BTreeMap::new();
        for a in 0..=m {
            for b in a..=m {
                maps.insert((a, b), self.maps[&(phi[a], phi[b])].clone());
            }
        }
        Ok(K0Simplex { ranks, maps })
    }
}

/// Exact inverse over ℤ, if the matrix is square and unimodular.
pub fn integer_inverse(m: &IntMat) -> Option<IntMat> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    type Q = Ratio<i128>;
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    let mut a: Vec<Vec<Q>> = (0..n)
        .map(|r| {
            (0..2 * n)
                .map(|c| {
                    if c < n {
                        Q::from_integer(m[(r, c)] as i128)
                    } else if c - n == r {
                        one
                    } else {
                        zero
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != zero)?;
        a.swap(col, piv);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col && a[r][col] != zero {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= f * *y;
                }
            }
        }
    }
    let mut inv = IntMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let q = a[r][c + n];
            if !q.is_integer() {
                return None;
            }
            inv[(r, c)] = i64::try_from(q.to_integer()).ok()?;
        }
    }
    Some(inv)
}

/// `K₀(φ)`: the transpose of the multiplicity matrix.
pub fn k0_of_hom(phi: &StarHom) -> IntMat {
    let r = phi.mult_matrix();
    IntMat::from_fn(phi.dst().num_blocks(), phi.src().num_blocks(), |j, i| r[i][j] as i64)
}

/// The K₀ map of a correspondence `E: A → B`, computed directly: the class
/// of a minimal projection `p` of block `i` goes to the class of `p·E`, whose
/// multiplicity in block `j` is the trace of `λ(p)` there.
pub fn k0_of_corr(e: &Correspondence) -> IntMat {
    let a = e.src();
    let mut out = IntMat::zeros(e.dst().num_blocks(), a.num_blocks());
    for i in 0..a.num_blocks() {
        let p = AlgElement::basis(a, a.basis_index(i, 0, 0));
        for (j, blk) in e.action_blocks(&p).iter().enumerate() {
            out[(j, i)] = blk.trace().re.round() as i64;
        }
    }
    out
}

/// The nerve of free abelian groups as an oracle. Every horn of dimension
/// at least three has all its edges, so fills there are forced.
#[derive(Clone, Copy, Debug, Default)]
pub struct K0Nerve;

impl K0Nerve {
    fn collect(&self, horn: &Horn<K0Simplex>) -> Result<(Vec<Option<usize>>, BTreeMap<Edge, IntMat>)> {
        let n = horn.n;
        if horn.faces.len() != n + 1 || horn.k > n || horn.faces[horn.k].is_some() {
            return Err(Error::ShapeMismatch(format!("malformed horn {}", horn.label())));
        }
        let mut ranks = vec![None; n + 1];
        let mut maps: BTreeMap<Edge, IntMat> = BTreeMap::new();
        for (m, f) in horn.faces.iter().enumerate() {
            let Some(f) = f else {
                if m != horn.k {
                    return Err(Error::ShapeMismatch(format!("face {m} is missing")));
                }
                continue;
            };
            if f.dim() + 1 != n {
                return Err(Error::ShapeMismatch(format!("face {m} has dimension {}", f.dim())));
            }
            let delta = coface(n, m);
            for (a, &ga) in delta.iter().enumerate() {
                match ranks[ga] {
                    Some(r) if r != f.ranks[a] => {
                        return Err(Error::IncompatibleFaces(format!("vertex {ga} differs between faces")))
                    }
                    _ => ranks[ga] = Some(f.ranks[a]),
                }
                for (b, &gb) in delta.iter().enumerate().skip(a) {
                    let mat = &f.maps[&(a, b)];
                    match maps.get(&(ga, gb)) {
                        Some(prev) if prev != mat => {
                            return Err(Error::IncompatibleFaces(format!("edge ({ga}, {gb}) differs between faces")))
                        }
                        Some(_) => {}
                        None => {
                            maps.insert((ga, gb), mat.clone());
                        }
                    }
                }
            }
        }
        Ok((ranks, maps))
    }

    fn finish(ranks: Vec<Option<usize>>, maps: BTreeMap<Edge, IntMat>) -> Result<K0Simplex> {
        let ranks = ranks
            .into_iter()
            .enumerate()
            .map(|(g, r)| r.ok_or_else(|| Error::ShapeMismatch(format!("vertex {g} not covered"))))
            .collect::<Result<Vec<_>>>()?;
        K0Simplex::from_maps(ranks, maps).map_err(|e| Error::Unfillable(e.to_string()))
    }
}

impl QuasiCategory for K0Nerve {
    type Simplex = K0Simplex;
    type Certificate = IntMat;

    fn name(&self) -> &'static str {
        "k0nerve"
    }

    fn max_fill_dim(&self) -> usize {
        usize::MAX
    }

    fn dim(&self, s: &K0Simplex) -> usize {
        s.dim()
    }

    fn face(&self, s: &K0Simplex, i: usize) -> Result<K0Simplex> {
        if s.dim() == 0 || i > s.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: s.dim() });
        }
        s.apply_map(&coface(s.dim(), i))
    }

    fn degeneracy(&self, s: &K0Simplex, i: usize) -> Result<K0Simplex> {
        if i > s.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: s.dim() });
        }
        s.apply_map(&codegeneracy(s.dim(), i))
    }

    fn equal(&self, a: &K0Simplex, b: &K0Simplex) -> bool {
        a == b
    }

    fn fill_inner(&self, horn: &Horn<K0Simplex>) -> Result<K0Simplex> {
        if !horn.is_inner() {
            return Err(Error::Unfillable(format!("{} is not an inner horn", horn.label())));
        }
        let (ranks, mut maps) = self.collect(horn)?;
        if horn.n == 2 {
            let m = &maps[&(1, 2)] * &maps[&(0, 1)];
            maps.insert((0, 2), m);
        }
        Self::finish(ranks, maps)
    }

    fn fill_special_outer(&self, horn: &Horn<K0Simplex>, cert: &IntMat) -> Result<K0Simplex> {
        let n = horn.n;
        if horn.k != n || n < 2 {
            return Err(Error::Unfillable(format!("{} is not a special outer horn", horn.label())));
        }
        let (ranks, mut maps) = self.collect(horn)?;
        let last = &maps[&(n - 1, n)];
        let square = |m: &IntMat| m.nrows() == m.ncols();
        if !square(last)
            || !square(cert)
            || cert.nrows() != last.nrows()
            || cert * last != IntMat::identity(last.nrows(), last.nrows())
            || last * cert != IntMat::identity(last.nrows(), last.nrows())
        {
            return Err(Error::NotAnEquivalence("certificate is not an inverse of the last edge".into()));
        }
        if n == 2 {
            let m = cert * &maps[&(0, 2)];
            maps.insert((0, 1), m);
        }
        Self::finish(ranks, maps)
    }

    fn is_equivalence(&self, edge: &K0Simplex) -> Option<IntMat> {
        if edge.dim() != 1 {
            return None;
        }
        integer_inverse(edge.map(0, 1))
    }

    fn guided_fill(&self, horn: &Horn<K0Simplex>, preferred: &K0Simplex) -> Option<K0Simplex> {
        let mut full = horn.clone();
        full.faces[horn.k] = None;
        let (mut ranks, mut maps) = self.collect(&full).ok()?;
        let delta = coface(horn.n, horn.k);
        for (a, &ga) in delta.iter().enumerate() {
            if ranks[ga].is_some_and(|r| r != preferred.ranks[a]) {
                return None;
            }
            ranks[ga] = Some(preferred.ranks[a]);
            for (b, &gb) in delta.iter().enumerate().skip(a) {
                match maps.get(&(ga, gb)) {
                    Some(m) if m != preferred.map(a, b) => return None,
                    Some(_) => {}
                    None => {
                        maps.insert((ga, gb), preferred.map(a, b).clone());
                    }
                }
            }
        }
        Self::finish(ranks, maps).ok()
    }

    fn describe(&self, cert: &IntMat) -> String {
        let rows: Vec<String> = cert
            .row_iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        format!("inverse [{}]", rows.join(","))
    }
}

/// K₀ as a functor on the nerve of C*-algebras.
#[derive(Clone, Copy, Debug, Default)]
pub struct K0Functor;

/// K₀ on a finite diagram, after checking that every marked arrow (the
/// corner embeddings of the diagram) goes to an invertible matrix.
pub fn k0_functor(marked: &[StarHom]) -> Result<K0Functor> {
    for (idx, phi) in marked.iter().enumerate() {
        if integer_inverse(&k0_of_hom(phi)).is_none() {
            return Err(Error::NotStableOnDiagram(format!(
                "marked arrow {idx} has no inverse over ℤ"
            )));
        }
    }
    Ok(K0Functor)
}

pub fn k0_of_simplex(s: &CstSimplex) -> K0Simplex {
    let n = s.dim();
    let ranks = s.algebras().iter().map(|a| a.num_blocks()).collect();
    let mut maps = BTreeMap::new();
    for i in 0..=n {
        for j in i..=n {
            maps.insert((i, j), k0_of_hom(s.hom(i, j)));
        }
    }
    K0Simplex { ranks, maps }
}

impl CstFunctor<K0Nerve> for K0Functor {
    fn apply(&self, _oracle: &K0Nerve, s: &CstSimplex) -> Result<K0Simplex> {
        let k = k0_of_simplex(s);
        k.check()?;
        Ok(k)
    }

    fn certify(&self, _oracle: &K0Nerve, phi: &StarHom) -> Result<IntMat> {
        integer_inverse(&k0_of_hom(phi))
            .ok_or_else(|| Error::NotStableOnDiagram("K₀ of a corner embedding is not invertible".into()))
    }
}

/// The homotopy between K₀ and itself given by multiplying with a fixed
/// integer when crossing from level 0 to level 1. With `scale = 1` this is
/// the degenerate homotopy; with `scale = -1` the two ends are K₀ and
/// K₀ ∘ Ad_u for any unitary `u`, identified through `-1`.
#[derive(Clone, Copy, Debug)]
pub struct K0Homotopy {
    pub scale: i64,
}

impl Homotopy<K0Nerve> for K0Homotopy {
    fn at(&self, _oracle: &K0Nerve, tau: &CstSimplex, s2: &[usize]) -> Result<K0Simplex> {
        let mut k = k0_of_simplex(tau);
        for (&(i, j), m) in k.maps.iter_mut() {
            if s2[i] < s2[j] {
                *m *= self.scale;
            }
        }
        k.check()?;
        Ok(k)
    }

    fn certify(&self, oracle: &K0Nerve, phi: &StarHom, _level: usize) -> Result<IntMat> {
        K0Functor.certify(oracle, phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicat::{corner_embedding, left_action_hom};
    use crate::cstar::{make_algebra, StarHom};
    use crate::hilbert::make_module;
    use crate::linalg;

    fn im(rows: &[&[i64]]) -> IntMat {
        IntMat::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
    }

    #[test]
    fn k0_examples() {
        let a = make_algebra(&[2, 1]).unwrap();
        assert_eq!(k0_of_simplex(&CstSimplex::vertex(&a)).ranks, vec![2]);
        // E = ℂ² over B = ℂ: K₀(i_E) = (1)
        let b = make_algebra(&[1]).unwrap();
        let e = make_module(&b, &[2]).unwrap();
        assert_eq!(k0_of_hom(&corner_embedding(&e).unwrap()), im(&[&[1]]));
        // a ↦ a ⊕ a on M₂ → M₄
        let m2 = make_algebra(&[2]).unwrap();
        let m4 = make_algebra(&[4]).unwrap();
        let us = vec![linalg::identity(4)];
        let phi = StarHom::from_normal_form(&m2, &m4, &[vec![2]], &us).unwrap();
        assert_eq!(k0_of_hom(&phi), im(&[&[2]]));
    }

    #[test]
    fn integer_inverses() {
        assert_eq!(integer_inverse(&im(&[&[2, 1], &[1, 1]])), Some(im(&[&[1, -1], &[-1, 2]])));
        assert_eq!(integer_inverse(&im(&[&[2]])), None);
        assert_eq!(integer_inverse(&im(&[&[1, 2]])), None);
        assert_eq!(integer_inverse(&im(&[&[1, 2], &[2, 4]])), None);
    }

    #[test]
    fn direct_k0_of_corr_matches_left_action() {
        let mut r = crate::random::rng(2);
        for _ in 0..20 {
            let a = crate::random::random_algebra(&mut r, Default::default());
            let e = crate::random::random_corr(&mut r, &a, Default::default()).unwrap();
            let f = left_action_hom(&e).unwrap();
            let i = corner_embedding(e.module()).unwrap();
            let expect = integer_inverse(&k0_of_hom(&i)).unwrap() * k0_of_hom(&f);
            assert_eq!(k0_of_corr(&e), expect);
        }
    }

    #[test]
    fn horns_in_the_nerve() {
        let s = K0Simplex::from_spine(vec![1, 2, 2], &[im(&[&[1], &[2]]), im(&[&[0, 1], &[1, 0]])]).unwrap();
        let o = K0Nerve;
        let horn = |k: usize| Horn {
            n: 2,
            k,
            faces: (0..3).map(|m| if m == k { None } else { Some(o.face(&s, m).unwrap()) }).collect(),
        };
        assert_eq!(o.fill_inner(&horn(1)).unwrap(), s);
        let cert = o.is_equivalence(&o.face(&s, 0).unwrap()).unwrap();
        assert_eq!(o.fill_special_outer(&horn(2), &cert).unwrap(), s);
        assert!(o.fill_special_outer(&horn(2), &im(&[&[1, 0], &[0, 1]])).is_err());
        assert_eq!(o.guided_fill(&horn(2), &o.face(&s, 2).unwrap()), Some(s.clone()));
        assert!(o.guided_fill(&horn(2), &K0Simplex::from_spine(vec![1, 2], &[im(&[&[3], &[2]])]).unwrap()).is_none());
    }
}
