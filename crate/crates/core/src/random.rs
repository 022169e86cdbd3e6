//! Seeded generators for algebras, homomorphisms, correspondences and
//! simplices used by the self-test corpus and the test suites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cstar::{FdCstarAlgebra, StarHom};
use crate::error::Result;
use std::collections::BTreeMap;

use crate::hilbert::{tensor, tensor_isos_between, CorrIso, Correspondence, HilbertModule};
use crate::nerve::{gamma_simplex, NCorrSimplex, SimplexData};
use crate::linalg::{self, c, CMat};

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size limits for random instances.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_blocks: usize,
    pub max_size: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_blocks: 3,
            max_size: 4,
        }
    }
}

pub fn random_algebra(rng: &mut TestRng, lim: Limits) -> FdCstarAlgebra {
    let nb = rng.gen_range(1..=lim.max_blocks);
    let blocks = (0..nb).map(|_| rng.gen_range(1..=lim.max_size.min(3))).collect();
    FdCstarAlgebra::new(blocks).expect("positive blocks")
}

/// Haar-ish random unitary: QR of a complex Gaussian matrix with the phases
/// of `R` pushed into `Q`.
pub fn random_unitary(rng: &mut TestRng, n: usize) -> CMat {
    if n == 0 {
        return linalg::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for k in 0..n {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / c(d.norm(), 0.0) } else { c(1.0, 0.0) };
        let col = q.column(k) * ph;
        q.set_column(k, &col);
    }
    q
}

/// A multiplicity matrix `r` (src blocks × dst blocks) with every target
/// block of size `Σ_i r_ij n_i + slack_j ≤ max_size`, at least one target
/// block, every target block nonzero and every source block mapped
/// injectively.
fn random_multiplicities(
    rng: &mut TestRng,
    src: &FdCstarAlgebra,
    lim: Limits,
    unital: bool,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    loop {
        let nd = rng.gen_range(1..=lim.max_blocks);
        let mut r = vec![vec![0; nd]; src.num_blocks()];
        let mut sizes = vec![0; nd];
        let mut ok = true;
        for j in 0..nd {
            for (i, row) in r.iter_mut().enumerate() {
                row[j] = rng.gen_range(0..=2);
                sizes[j] += row[j] * src.block_size(i);
            }
            if !unital {
                sizes[j] += rng.gen_range(0..=1);
            }
            if sizes[j] == 0 || sizes[j] > lim.max_size {
                ok = false;
            }
        }
        // injective, so that composites of random chains never vanish
        if ok && r.iter().all(|row| row.iter().any(|&x| x > 0)) {
            return (r, sizes);
        }
    }
}

/// A random *-homomorphism out of `src` whose target is chosen to fit.
pub fn random_hom_from(rng: &mut TestRng, src: &FdCstarAlgebra, lim: Limits, unital: bool) -> StarHom {
    let (r, sizes) = random_multiplicities(rng, src, lim, unital);
    let dst = FdCstarAlgebra::new(sizes).expect("positive sizes");
    let us: Vec<CMat> = dst.blocks().iter().map(|&m| random_unitary(rng, m)).collect();
    StarHom::from_normal_form(src, &dst, &r, &us).expect("normal form data is consistent")
}

/// A chain `A_0 → A_1 → … → A_len` of random *-homomorphisms.
pub fn random_chain(rng: &mut TestRng, len: usize, lim: Limits, unital: bool) -> Vec<StarHom> {
    let mut src = random_algebra(rng, lim);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let phi = random_hom_from(rng, &src, lim, unital);
        src = phi.dst().clone();
        out.push(phi);
    }
    out
}

/// A random module over `base` with multiplicities at most `max_mult`.
pub fn random_module(rng: &mut TestRng, base: &FdCstarAlgebra, max_mult: usize) -> HilbertModule {
    let mult = (0..base.num_blocks()).map(|_| rng.gen_range(0..=max_mult)).collect();
    HilbertModule::new(base.clone(), mult).expect("length matches")
}

/// A random proper correspondence `A → B` with a randomly twisted left
/// action. The module multiplicities stay at most `lim.max_size`.
pub fn random_corr(rng: &mut TestRng, a: &FdCstarAlgebra, lim: Limits) -> Result<Correspondence> {
    let b = random_algebra(rng, lim);
    random_corr_between(rng, a, &b, lim)
}

pub fn random_corr_between(
    rng: &mut TestRng,
    a: &FdCstarAlgebra,
    b: &FdCstarAlgebra,
    lim: Limits,
) -> Result<Correspondence> {
    let (r, mult) = loop {
        let mut r = vec![vec![0; b.num_blocks()]; a.num_blocks()];
        let mut mult = vec![0; b.num_blocks()];
        for j in 0..b.num_blocks() {
            for i in 0..a.num_blocks() {
                r[i][j] = rng.gen_range(0..=2);
                mult[j] += r[i][j] * a.block_size(i);
            }
        }
        if mult.iter().any(|&m| m > 0) && mult.iter().all(|&m| m <= lim.max_size) {
            break (r, mult);
        }
    };
    let module = HilbertModule::new(b.clone(), mult)?;
    let k = module.compacts()?;
    let kept = module.compact_blocks();
    let rk: Vec<Vec<usize>> = r.iter().map(|row| kept.iter().map(|&j| row[j]).collect()).collect();
    let us: Vec<CMat> = k.blocks().iter().map(|&m| random_unitary(rng, m)).collect();
    let left = StarHom::from_normal_form(a, &k, &rk, &us)?;
    Correspondence::new(a.clone(), module, left)
}

/// `E` with its left action conjugated by random unitaries on the
/// multiplicity spaces, together with the isomorphism `E ≅ E'`.
pub fn twist_corr(rng: &mut TestRng, e: &Correspondence) -> Result<(Correspondence, CorrIso)> {
    let ws: Vec<CMat> = e.mult().iter().map(|&m| random_unitary(rng, m)).collect();
    let twisted = Correspondence::from_action(e.src(), e.module().clone(), |i, r, col| {
        let idx = e.src().basis_index(i, r, col);
        e.basis_action(idx)
            .iter()
            .zip(&ws)
            .map(|(a, w)| w * a * w.adjoint())
            .collect()
    })?;
    let v = CorrIso::from_blocks(e, &twisted, ws)?;
    Ok((twisted, v))
}

/// Replaces every nondegenerate edge of `s` by a twisted copy and transports
/// the unitaries `u_ijk` along the twists. The result is a valid simplex
/// isomorphic to `s` whose unitaries are generally far from canonical.
pub fn gauge_simplex(rng: &mut TestRng, s: &NCorrSimplex) -> Result<NCorrSimplex> {
    let n = s.dim();
    let mut corrs = BTreeMap::new();
    let mut twists = BTreeMap::new();
    for i in 0..=n {
        let id = s.corr(i, i).clone();
        twists.insert((i, i), CorrIso::identity(&id));
        corrs.insert((i, i), id);
        for j in i + 1..=n {
            let (e, v) = twist_corr(rng, s.corr(i, j))?;
            corrs.insert((i, j), e);
            twists.insert((i, j), v);
        }
    }
    let mut unitaries = BTreeMap::new();
    for i in 0..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                let t_new = tensor(&corrs[&(i, j)], &corrs[&(j, k)])?;
                let w = tensor_isos_between(&twists[&(i, j)], &twists[&(j, k)], s.tensor(i, j, k), &t_new)?;
                let u = twists[&(i, k)].compose(&s.iso(i, j, k).compose(&w.inverse())?)?;
                unitaries.insert((i, j, k), u.blocks().to_vec());
            }
        }
    }
    let data = SimplexData {
        algebras: s.algebras().to_vec(),
        corrs,
        unitaries,
    };
    Ok(NCorrSimplex::from_data(data)?.0)
}

/// A random valid `n`-simplex: a Γ-image of a random chain, gauged by random
/// twists when `gauged` is set. For `n = 1` and `gauged` the edge is a
/// random correspondence rather than a Γ-image.
pub fn random_simplex(rng: &mut TestRng, n: usize, lim: Limits, gauged: bool) -> Result<NCorrSimplex> {
    if n == 0 {
        return Ok(NCorrSimplex::vertex(&random_algebra(rng, lim)));
    }
    if n == 1 && gauged {
        let a = random_algebra(rng, lim);
        return NCorrSimplex::edge(&random_corr(rng, &a, lim)?);
    }
    let unital = rng.gen_bool(0.5);
    let s = gamma_simplex(&random_chain(rng, n, lim, unital))?;
    if gauged {
        gauge_simplex(rng, &s)
    } else {
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitaries_are_unitary() {
        let mut r = rng(7);
        for n in 0..5 {
            assert!(linalg::unitary_residual(&random_unitary(&mut r, n)) < 1e-12 || n == 0);
        }
    }

    #[test]
    fn generators_respect_limits() {
        let mut r = rng(1);
        let lim = Limits::default();
        for _ in 0..20 {
            let chain = random_chain(&mut r, 2, lim, true);
            for phi in &chain {
                assert!(phi.is_unital());
                assert!(phi.dst().num_blocks() <= 3);
                assert!(phi.dst().blocks().iter().all(|&m| m <= 4));
            }
            let a = random_algebra(&mut r, lim);
            let e = random_corr(&mut r, &a, lim).unwrap();
            assert!(e.mult().iter().all(|&m| m <= 4));
        }
    }

    #[test]
    fn gauged_simplices_are_valid_and_nontrivial() {
        let mut r = rng(11);
        let lim = Limits { max_blocks: 2, max_size: 3 };
        for n in 1..=3 {
            let s = random_simplex(&mut r, n, lim, false).unwrap();
            let g = gauge_simplex(&mut r, &s).unwrap();
            assert!(g.pentagon_report().unwrap().pentagon_residual < 1e-9);
            if n >= 2 {
                assert!(g.dist(&s) > 1e-3);
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = random_chain(&mut rng(3), 2, Limits::default(), false);
        let b = random_chain(&mut rng(3), 2, Limits::default(), false);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.dist(y), 0.0);
        }
    }
}
