//! The correspondence nerve as a target, with Γ as the C*-stable functor.

use std::collections::BTreeMap;

use super::{CstFunctor, Horn, QuasiCategory};
use crate::bicat::{equivalence_witness, find_iso, gamma_of_hom, u_of_corr, EquivalenceWitness};
use crate::cstar::StarHom;
use crate::error::{Error, Result};
use crate::hilbert::tensor;
use crate::linalg::EPS;
use crate::nerve::{
    fill_inner_horn, fill_special_outer_horn, fill_with_face, validate_simplex, CstSimplex, HornSpec,
    NCorrSimplex, SimplexData,
};

/// `N Corr_prop` as an oracle. Equality is agreement of all coordinates to
/// `EPS`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NCorrOracle;

fn horn_spec(h: &Horn<NCorrSimplex>) -> HornSpec {
    HornSpec {
        n: h.n,
        k: h.k,
        faces: h.faces.clone(),
    }
}

impl NCorrOracle {
    /// `Λ²₂` through a prescribed edge `P`: the comparison
    /// `P ⊗ E_12 ≅ E_02` is the canonical rank-one map when the horn is the
    /// `(Γ(f_P), Γ(i_P))` pair, and any isomorphism otherwise.
    fn guided_2(&self, h: &Horn<NCorrSimplex>, p: &NCorrSimplex) -> Option<NCorrSimplex> {
        let d0 = h.faces[0].as_ref()?;
        let d1 = h.faces[1].as_ref()?;
        let e01 = p.corr(0, 1);
        let e12 = d0.corr(0, 1);
        let e02 = d1.corr(0, 1);
        if e01.src() != e02.src() || e01.dst() != e12.src() || e12.dst() != e02.dst() {
            return None;
        }
        let t = tensor(e01, e12).ok()?;
        let canonical = u_of_corr(e01).ok().filter(|u| {
            u.gamma_i.corr.dist(e12) <= EPS && u.gamma_f.corr.dist(e02) <= EPS
        });
        let blocks = match canonical {
            Some(u) => u.iso.blocks().to_vec(),
            None => find_iso(&t.corr, e02)?.blocks().to_vec(),
        };
        let mut corrs = BTreeMap::new();
        corrs.insert((0, 1), e01.clone());
        corrs.insert((1, 2), e12.clone());
        corrs.insert((0, 2), e02.clone());
        let mut unitaries = BTreeMap::new();
        unitaries.insert((0, 1, 2), blocks);
        validate_simplex(SimplexData {
            algebras: vec![e01.src().clone(), e12.src().clone(), e12.dst().clone()],
            corrs,
            unitaries,
        })
        .ok()
    }
}

impl QuasiCategory for NCorrOracle {
    type Simplex = NCorrSimplex;
    type Certificate = EquivalenceWitness;

    fn name(&self) -> &'static str {
        "ncorr"
    }

    fn max_fill_dim(&self) -> usize {
        4
    }

    fn dim(&self, s: &NCorrSimplex) -> usize {
        s.dim()
    }

    fn face(&self, s: &NCorrSimplex, i: usize) -> Result<NCorrSimplex> {
        s.face(i)
    }

    fn degeneracy(&self, s: &NCorrSimplex, i: usize) -> Result<NCorrSimplex> {
        s.degeneracy(i)
    }

    fn equal(&self, a: &NCorrSimplex, b: &NCorrSimplex) -> bool {
        a.dist(b) <= EPS
    }

    fn fill_inner(&self, horn: &Horn<NCorrSimplex>) -> Result<NCorrSimplex> {
        fill_inner_horn(&horn_spec(horn))
    }

    fn fill_special_outer(&self, horn: &Horn<NCorrSimplex>, cert: &EquivalenceWitness) -> Result<NCorrSimplex> {
        fill_special_outer_horn(&horn_spec(horn), cert)
    }

    fn is_equivalence(&self, edge: &NCorrSimplex) -> Option<EquivalenceWitness> {
        if edge.dim() != 1 {
            return None;
        }
        equivalence_witness(edge.corr(0, 1)).ok()
    }

    fn guided_fill(&self, horn: &Horn<NCorrSimplex>, preferred: &NCorrSimplex) -> Option<NCorrSimplex> {
        if horn.n == 2 && horn.k == 2 {
            return self.guided_2(horn, preferred);
        }
        fill_with_face(&horn_spec(horn), preferred).ok()
    }

    fn describe(&self, cert: &EquivalenceWitness) -> String {
        format!("witness matching {:?}", cert.matching)
    }
}

/// Γ as a functor `N Cst₊ → N Corr_prop`.
#[derive(Clone, Copy, Debug, Default)]
pub struct GammaFunctor;

impl CstFunctor<NCorrOracle> for GammaFunctor {
    fn apply(&self, _oracle: &NCorrOracle, s: &CstSimplex) -> Result<NCorrSimplex> {
        s.gamma()
    }

    fn certify(&self, _oracle: &NCorrOracle, phi: &StarHom) -> Result<EquivalenceWitness> {
        let g = gamma_of_hom(phi)?;
        equivalence_witness(&g.corr).map_err(|e| Error::NotStableOnDiagram(e.to_string()))
    }
}
