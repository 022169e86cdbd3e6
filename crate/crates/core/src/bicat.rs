//! The passage from *-homomorphisms to correspondences, corner embeddings,
//! their Morita inverses, and the comparison isomorphism `u_E`.

use crate::cstar::{AlgElement, FdCstarAlgebra, StarHom};
use crate::error::{Error, Result};
use crate::hilbert::{
    direct_sum, identity_corr, is_full_corr, tensor, Correspondence, CorrIso, HilbertModule, ModElem,
};
use crate::linalg::{self, CMat, EPS};

/// `Γφ`: the right ideal `φ(1)B` as an `A,B`-correspondence.
///
/// `frames[j]` is a `b_j × m_j` isometry onto the range of `φ(1)_j`; an
/// element `x` of the module corresponds to `V x ∈ φ(1)B`.
#[derive(Clone, Debug)]
pub struct Gamma {
    pub hom: StarHom,
    pub frames: Vec<CMat>,
    pub corr: Correspondence,
}

impl Gamma {
    /// `x ↦ V x`, as an element of `B`.
    pub fn to_ideal(&self, x: &ModElem) -> AlgElement {
        let mats = self.frames.iter().zip(x).map(|(v, xj)| v * xj).collect();
        AlgElement::new(self.hom.dst(), mats).expect("frames match base blocks")
    }

    /// `b ↦ V* b` for `b ∈ φ(1)B`.
    pub fn from_ideal(&self, b: &AlgElement) -> ModElem {
        self.frames.iter().zip(b.blocks()).map(|(v, bj)| v.adjoint() * bj).collect()
    }
}

pub fn gamma_of_hom(phi: &StarHom) -> Result<Gamma> {
    let b = phi.dst();
    let p = phi.unit_image();
    let frames: Vec<CMat> = p.blocks().iter().map(linalg::orthonormal_columns).collect();
    let mult: Vec<usize> = frames.iter().map(|v| v.ncols()).collect();
    let module = HilbertModule::new(b.clone(), mult)?;
    let corr = Correspondence::from_action(phi.src(), module, |i, r, col| {
        let img = phi.image_of_basis(phi.src().basis_index(i, r, col));
        frames
            .iter()
            .zip(img.blocks())
            .map(|(v, a)| v.adjoint() * a * v)
            .collect()
    })?;
    Ok(Gamma {
        hom: phi.clone(),
        frames,
        corr,
    })
}

/// `Γφ ⊗_B Γψ ≅ Γ(ψ∘φ)`, `b ⊗ c ↦ ψ(b)c`.
pub fn gamma_multiplicativity(phi: &StarHom, psi: &StarHom) -> Result<CorrIso> {
    let theta = psi.compose(phi)?;
    gamma_multiplicativity_with(&gamma_of_hom(phi)?, &gamma_of_hom(psi)?, &gamma_of_hom(&theta)?)
}

/// As [`gamma_multiplicativity`], onto a given presentation of `Γ(ψ∘φ)`.
pub fn gamma_multiplicativity_with(gphi: &Gamma, gpsi: &Gamma, gtheta: &Gamma) -> Result<CorrIso> {
    let t = tensor(&gphi.corr, &gpsi.corr)?;
    gamma_multiplicativity_on(&t, gphi, gpsi, gtheta)
}

pub fn gamma_multiplicativity_on(
    t: &crate::hilbert::Tensor,
    gphi: &Gamma,
    gpsi: &Gamma,
    gtheta: &Gamma,
) -> Result<CorrIso> {
    let gap = gpsi.hom.compose(&gphi.hom)?.dist(&gtheta.hom);
    if gap > EPS {
        return Err(Error::EndpointMismatch(format!(
            "target is not Γ of the composite (distance {gap:.3e})"
        )));
    }
    t.induced_iso(&gtheta.corr, |x, y| {
        let b = gphi.to_ideal(x);
        let c = gpsi.to_ideal(y);
        gtheta.from_ideal(&gpsi.hom.apply(&b).mul(&c))
    })
}

/// The module `E ⊕ B` and its compacts `K(E ⊕ B)`, with `E` first in every
/// block.
#[derive(Clone, Debug)]
pub struct CornerData {
    pub module: HilbertModule,
    pub sum: HilbertModule,
    pub compacts: FdCstarAlgebra,
    /// `J_E`, `J_B`: the inclusions of the two summands per block.
    pub j_e: Vec<CMat>,
    pub j_b: Vec<CMat>,
}

pub fn corner_data(e: &HilbertModule) -> Result<CornerData> {
    let std = HilbertModule::standard(e.base());
    let ds = direct_sum(e, &std)?;
    let compacts = ds.module.compacts()?.with_label("K(E⊕B)");
    Ok(CornerData {
        module: e.clone(),
        sum: ds.module,
        compacts,
        j_e: ds.first,
        j_b: ds.second,
    })
}

/// `i_E: B ≅ K(B) → K(E ⊕ B)`, acting on the `B` summand.
pub fn corner_embedding(e: &HilbertModule) -> Result<StarHom> {
    let cd = corner_data(e)?;
    corner_embedding_of(&cd)
}

pub fn corner_embedding_of(cd: &CornerData) -> Result<StarHom> {
    let b = cd.module.base();
    StarHom::from_basis_images(b, &cd.compacts, |i, r, col| {
        (0..b.num_blocks())
            .map(|j| {
                let unit = if i == j {
                    linalg::unit(b.block_size(j), b.block_size(j), r, col)
                } else {
                    linalg::zeros(b.block_size(j), b.block_size(j))
                };
                &cd.j_b[j] * unit * cd.j_b[j].adjoint()
            })
            .collect()
    })
}

/// `f_E: A → K(E) ⊂ K(E ⊕ B)` from the left action.
pub fn left_action_hom(e: &Correspondence) -> Result<StarHom> {
    let cd = corner_data(e.module())?;
    left_action_hom_of(e, &cd)
}

pub fn left_action_hom_of(e: &Correspondence, cd: &CornerData) -> Result<StarHom> {
    let a = e.src();
    StarHom::from_basis_images(a, &cd.compacts, |i, r, col| {
        let act = e.basis_action(a.basis_index(i, r, col));
        act.iter()
            .zip(&cd.j_e)
            .map(|(l, j)| j * l * j.adjoint())
            .collect()
    })
}

/// Everything around the comparison `u_E: E ⊗_B Γ(i_E) ≅ Γ(f_E)`.
#[derive(Clone, Debug)]
pub struct UData {
    pub corner: CornerData,
    pub gamma_i: Gamma,
    pub gamma_f: Gamma,
    pub iso: CorrIso,
}

/// `u_E`, induced by `ξ ⊗ η ↦ |ξ⟩ ∘ η`.
pub fn u_of_corr(e: &Correspondence) -> Result<UData> {
    let corner = corner_data(e.module())?;
    let gamma_i = gamma_of_hom(&corner_embedding_of(&corner)?)?;
    let gamma_f = gamma_of_hom(&left_action_hom_of(e, &corner)?)?;
    let t = tensor(e, &gamma_i.corr)?;
    let iso = t.induced_iso(&gamma_f.corr, |xi, eta| {
        let eta_op = gamma_i.to_ideal(eta);
        corner
            .j_e
            .iter()
            .zip(xi)
            .zip(corner.j_b.iter().zip(eta_op.blocks()))
            .zip(&gamma_f.frames)
            .map(|(((je, x), (jb, h)), vf)| vf.adjoint() * je * x * jb.adjoint() * h)
            .collect()
    })?;
    Ok(UData {
        corner,
        gamma_i,
        gamma_f,
        iso,
    })
}

/// The quasi-inverse `K(B, E ⊕ B)` of `Γ(i_E)`, with both composites
/// identified with identity correspondences.
#[derive(Clone, Debug)]
pub struct MoritaInverse {
    pub corner: CornerData,
    pub gamma_i: Gamma,
    /// `E ⊕ B` as a `K(E⊕B), B`-correspondence.
    pub inverse: Correspondence,
    /// `Γ(i_E) ⊗ inverse ≅ id_B`.
    pub gamma_then_inverse: CorrIso,
    /// `inverse ⊗ Γ(i_E) ≅ id_{K(E⊕B)}`.
    pub inverse_then_gamma: CorrIso,
}

pub fn morita_inverse_of_corner(e: &HilbertModule) -> Result<MoritaInverse> {
    let corner = corner_data(e)?;
    let gamma_i = gamma_of_hom(&corner_embedding_of(&corner)?)?;
    let k = corner.compacts.clone();
    let b = e.base().clone();
    let inverse = Correspondence::new(
        k.clone(),
        corner.sum.clone(),
        StarHom::new(k.clone(), corner.sum.compacts()?, linalg::identity(k.dim()))?,
    )?;
    let id_b = identity_corr(&b);
    let id_k = identity_corr(&k);
    let t1 = tensor(&gamma_i.corr, &inverse)?;
    let gamma_then_inverse = t1.induced_iso(&id_b, |eta, zeta| {
        let h = gamma_i.to_ideal(eta);
        corner
            .j_b
            .iter()
            .zip(h.blocks())
            .zip(zeta)
            .map(|((jb, hj), z)| jb.adjoint() * hj * z)
            .collect()
    })?;
    let t2 = tensor(&inverse, &gamma_i.corr)?;
    let inverse_then_gamma = t2.induced_iso(&id_k, |zeta, eta| {
        let h = gamma_i.to_ideal(eta);
        zeta.iter()
            .zip(&corner.j_b)
            .zip(h.blocks())
            .map(|((z, jb), hj)| z * jb.adjoint() * hj)
            .collect()
    })?;
    Ok(MoritaInverse {
        corner,
        gamma_i,
        inverse,
        gamma_then_inverse,
        inverse_then_gamma,
    })
}

/// Witness that `E: A → B` is a Morita equivalence.
#[derive(Clone, Debug)]
pub struct EquivalenceWitness {
    /// The conjugate module `Ē: B → A`.
    pub inverse: Correspondence,
    /// `E ⊗ Ē ≅ id_A`.
    pub unit: CorrIso,
    /// `Ē ⊗ E ≅ id_B`.
    pub counit: CorrIso,
    /// `W_j` with `W_j* λ(a)_j W_j = a_{π(j)}`.
    pub frames: Vec<CMat>,
    /// `π(j)`: the block of `A` matched with base block `j`.
    pub matching: Vec<usize>,
}

/// Decides whether `E` is full with `λ_E: A → K(E)` bijective and, if so,
/// builds the inverse bimodule with both isomorphisms.
pub fn is_equivalence(e: &Correspondence) -> Option<EquivalenceWitness> {
    equivalence_witness(e).ok()
}

pub fn equivalence_witness(e: &Correspondence) -> Result<EquivalenceWitness> {
    if !is_full_corr(e) {
        return Err(Error::NotAnEquivalence("module is not full".into()));
    }
    let lam = e.left_action();
    let r = lam.mult_matrix();
    let a = e.src();
    let b = e.dst();
    let mut matching = vec![usize::MAX; b.num_blocks()];
    for j in 0..b.num_blocks() {
        let col: Vec<usize> = (0..a.num_blocks()).filter(|&i| r[i][j] > 0).collect();
        if col.len() != 1 || r[col[0]][j] != 1 {
            return Err(Error::NotAnEquivalence(format!(
                "left action is not bijective onto block {j} of K(E)"
            )));
        }
        matching[j] = col[0];
    }
    let mut seen = vec![false; a.num_blocks()];
    for &i in &matching {
        if seen[i] {
            return Err(Error::NotAnEquivalence("left action is not injective".into()));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::NotAnEquivalence("left action is not injective".into()));
    }
    let frames = lam.normal_form();
    // Ē over A: block matching[j] holds b_j × n_i matrices y = x* W
    let mut mult = vec![0; a.num_blocks()];
    let mut owner = vec![0; a.num_blocks()];
    for (j, &i) in matching.iter().enumerate() {
        mult[i] = b.block_size(j);
        owner[i] = j;
    }
    let module = HilbertModule::new(a.clone(), mult)?;
    let inverse = Correspondence::from_action(b, module, |jb, rr, cc| {
        (0..a.num_blocks())
            .map(|i| {
                let j = owner[i];
                let n = b.block_size(j);
                if j == jb {
                    linalg::unit(n, n, rr, cc)
                } else {
                    linalg::zeros(n, n)
                }
            })
            .collect()
    })?;
    let id_a = identity_corr(a);
    let id_b = identity_corr(b);
    let t1 = tensor(e, &inverse)?;
    let unit = t1.induced_iso(&id_a, |x, y| {
        (0..a.num_blocks())
            .map(|i| {
                let j = owner[i];
                frames[j].adjoint() * &x[j] * &y[i]
            })
            .collect()
    })?;
    let t2 = tensor(&inverse, e)?;
    let counit = t2.induced_iso(&id_b, |y, x| {
        (0..b.num_blocks())
            .map(|j| &y[matching[j]] * frames[j].adjoint() * &x[j])
            .collect()
    })?;
    Ok(EquivalenceWitness {
        inverse,
        unit,
        counit,
        frames,
        matching,
    })
}

/// An isomorphism `X ≅ Y` between correspondences with the same endpoints,
/// if one exists. Built from the normal forms of both left actions.
pub fn find_iso(x: &Correspondence, y: &Correspondence) -> Option<CorrIso> {
    if x.src() != y.src() || x.dst() != y.dst() || x.mult() != y.mult() {
        return None;
    }
    if x.left_action().mult_matrix() != y.left_action().mult_matrix() {
        return None;
    }
    let wx = x.left_action().normal_form();
    let wy = y.left_action().normal_form();
    let kept = x.module().compact_blocks();
    let mut blocks: Vec<CMat> = x.mult().iter().map(|&m| linalg::zeros(m, m)).collect();
    for (kk, &j) in kept.iter().enumerate() {
        blocks[j] = &wy[kk] * wx[kk].adjoint();
    }
    CorrIso::from_blocks(x, y, blocks).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar::make_algebra;
    use crate::hilbert::{left_unitor, make_module, right_unitor};
    use crate::linalg::c;

    fn alg(b: &[usize]) -> FdCstarAlgebra {
        make_algebra(b).unwrap()
    }

    fn hom_nf(a: &[usize], b: &[usize], r: &[Vec<usize>]) -> StarHom {
        let (a, b) = (alg(a), alg(b));
        let us: Vec<CMat> = b.blocks().iter().map(|&m| linalg::identity(m)).collect();
        StarHom::from_normal_form(&a, &b, r, &us).unwrap()
    }

    fn twisted(phi: &StarHom, seed: f64) -> StarHom {
        // conjugate the target by a fixed unitary per block
        let us: Vec<CMat> = phi
            .dst()
            .blocks()
            .iter()
            .map(|&m| {
                let h = CMat::from_fn(m, m, |r, col| {
                    let s = seed + (r * 7 + col * 3) as f64;
                    c(s.sin(), s.cos())
                });
                let h = &h + h.adjoint();
                linalg::orthonormal_columns(&(linalg::identity(m) + h * c(0.0, 0.3)))
            })
            .collect();
        StarHom::from_basis_images(phi.src(), phi.dst(), |i, r, col| {
            let img = phi.image_of_basis(phi.src().basis_index(i, r, col));
            us.iter().zip(img.blocks()).map(|(u, x)| u * x * u.adjoint()).collect()
        })
        .unwrap()
    }

    #[test]
    fn gamma_of_identity_is_identity_corr() {
        let a = alg(&[2, 1]);
        let g = gamma_of_hom(&StarHom::identity(&a)).unwrap();
        assert!(g.corr.dist(&identity_corr(&a)) < 1e-15);
    }

    #[test]
    fn gamma_of_rank_one_corner() {
        let phi = hom_nf(&[1], &[2], &[vec![1]]);
        let g = gamma_of_hom(&phi).unwrap();
        assert_eq!(g.corr.mult(), &[1]);
    }

    #[test]
    fn gamma_of_doubling() {
        let phi = hom_nf(&[2], &[4], &[vec![2]]);
        let g = gamma_of_hom(&phi).unwrap();
        assert_eq!(linalg::rank(phi.unit_image().block(0)), 4);
        assert_eq!(g.corr.mult(), &[4]);
        assert_eq!(g.corr.left_action().mult_matrix(), &[vec![2]]);
    }

    #[test]
    fn gamma_multiplicativity_reduces_to_unitors() {
        let phi = twisted(&hom_nf(&[1, 1], &[2, 1], &[vec![1, 0], vec![1, 1]]), 0.4);
        let id_b = StarHom::identity(phi.dst());
        let id_a = StarHom::identity(phi.src());
        let via_psi = gamma_multiplicativity(&phi, &id_b).unwrap();
        let ru = right_unitor(&gamma_of_hom(&phi).unwrap().corr).unwrap();
        assert!(via_psi.dist(&ru) < 1e-10);
        let via_phi = gamma_multiplicativity(&id_a, &phi).unwrap();
        let lu = left_unitor(&gamma_of_hom(&phi).unwrap().corr).unwrap();
        assert!(via_phi.dist(&lu) < 1e-10);
    }

    #[test]
    fn gamma_multiplicativity_nonunital() {
        let phi = twisted(&hom_nf(&[1, 2], &[3, 2], &[vec![1, 0], vec![1, 0]]), 1.0);
        let psi = twisted(&hom_nf(&[3, 2], &[4, 3], &[vec![1, 0], vec![0, 1]]), 2.0);
        let iso = gamma_multiplicativity(&phi, &psi).unwrap();
        assert!(iso.residuals().max() < EPS);
    }

    #[test]
    fn corner_embeddings() {
        let b = alg(&[2]);
        let zero = make_module(&b, &[0]).unwrap();
        let i0 = corner_embedding(&zero).unwrap();
        assert!(i0.is_unital());

        let e = make_module(&alg(&[1]), &[2]).unwrap();
        let i = corner_embedding(&e).unwrap();
        assert_eq!(i.dst().blocks(), &[3]);
        let img = i.unit_image();
        assert!(linalg::frobenius_diff(img.block(0), &linalg::unit(3, 3, 2, 2)) < 1e-15);

        let e = make_module(&b, &[1]).unwrap();
        let i = corner_embedding(&e).unwrap();
        assert_eq!(i.dst().blocks(), &[3]);
        assert_eq!(i.mult_matrix(), &[vec![1]]);
        assert_eq!(linalg::rank(i.unit_image().block(0)), 2);
    }

    #[test]
    fn left_action_hom_is_orthogonal_to_corner() {
        let phi = twisted(&hom_nf(&[1, 1], &[2, 1], &[vec![1, 0], vec![1, 1]]), 0.7);
        let e = gamma_of_hom(&phi).unwrap().corr;
        let f = left_action_hom(&e).unwrap();
        let i = corner_embedding(e.module()).unwrap();
        assert!(f.unit_image().mul(&i.unit_image()).norm() < 1e-14);

        let a = alg(&[1]);
        let e = crate::hilbert::Correspondence::from_action(&a, make_module(&a, &[2]).unwrap(), |_, _, _| {
            vec![linalg::identity(2)]
        })
        .unwrap();
        let f = left_action_hom(&e).unwrap();
        let expect = linalg::block_diag(&[linalg::identity(2), linalg::zeros(1, 1)]);
        assert!(linalg::frobenius_diff(f.unit_image().block(0), &expect) < 1e-15);
    }

    #[test]
    fn u_for_small_examples() {
        let a = alg(&[1]);
        let e = crate::hilbert::Correspondence::from_action(&a, make_module(&a, &[2]).unwrap(), |_, _, _| {
            vec![linalg::identity(2)]
        })
        .unwrap();
        let u = u_of_corr(&e).unwrap();
        assert_eq!(u.gamma_f.corr.mult(), &[2]);
        assert!(u.iso.residuals().max() < 1e-12);

        let id = identity_corr(&alg(&[2, 1]));
        assert!(u_of_corr(&id).unwrap().iso.residuals().max() < 1e-12);

        // A = B = ℂ, E = ℂ: every 1×1 datum is forced
        let one = identity_corr(&a);
        let u = u_of_corr(&one).unwrap();
        assert_eq!(u.iso.blocks()[0].shape(), (1, 1));
        assert!((u.iso.blocks()[0][(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn morita_inverses() {
        for (b, m) in [(vec![2], vec![0]), (vec![1], vec![2]), (vec![2], vec![2]), (vec![2, 1], vec![1, 3])] {
            let e = make_module(&alg(&b), &m).unwrap();
            let mi = morita_inverse_of_corner(&e).unwrap();
            assert!(mi.gamma_then_inverse.residuals().max() < 1e-12);
            assert!(mi.inverse_then_gamma.residuals().max() < 1e-12);
        }
    }

    #[test]
    fn equivalences() {
        assert!(is_equivalence(&identity_corr(&alg(&[2, 1]))).is_some());
        let e = make_module(&alg(&[2, 1]), &[1, 2]).unwrap();
        let gi = gamma_of_hom(&corner_embedding(&e).unwrap()).unwrap();
        let w = is_equivalence(&gi.corr).expect("Γ(i_E) is an equivalence");
        assert!(w.unit.residuals().max() < 1e-12);
        assert!(w.counit.residuals().max() < 1e-12);

        let a = alg(&[1]);
        let not_full = crate::hilbert::Correspondence::from_action(
            &a,
            make_module(&alg(&[2, 1]), &[1, 0]).unwrap(),
            |_, _, _| vec![linalg::identity(1), linalg::zeros(0, 0)],
        )
        .unwrap();
        assert!(is_equivalence(&not_full).is_none());
    }

    #[test]
    fn find_iso_between_twisted_presentations() {
        let phi = hom_nf(&[1, 2], &[3, 2], &[vec![1, 0], vec![1, 1]]);
        let x = gamma_of_hom(&phi).unwrap().corr;
        let y = gamma_of_hom(&twisted(&phi, 3.0)).unwrap().corr;
        let iso = find_iso(&x, &y).expect("isomorphic");
        assert!(iso.residuals().max() < EPS);
    }
}
