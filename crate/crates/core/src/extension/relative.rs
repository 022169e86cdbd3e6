//! The relative extension: from `h: N Cst₊ × Δᵐ → D` and a boundary map
//! `∂H: N Corr × ∂Δᵐ → D` agreeing with `h` along Γ, build
//! `H: N Corr × Δᵐ → D` with `H = ∂H` on the boundary and `H ∘ Γ = h`.
//!
//! `H(σ, s₂) = Ḡ(0, …, n)` where `G` is `h` composed with the subdivision
//! functor of `σ` and the last-vertex map `Sd(Δⁿ) → Δⁿ → Δᵐ`.

use super::{Engine, Homotopy, QuasiCategory};
use crate::error::{Error, Result};
use crate::nerve::{CstSimplex, NCorrSimplex};

/// The boundary data `∂H(σ, c)` for `c` a vertex of `Δ¹`.
pub type Boundary<'b, S> = dyn Fn(&NCorrSimplex, usize) -> Result<S> + 'b;

/// Largest supported `m`.
pub const MAX_M: usize = 1;

/// Largest simplex dimension handled by the relative construction.
pub const MAX_REL_N: usize = 2;

pub struct RelativeExtension<'a, D: QuasiCategory> {
    engine: Engine<'a, D>,
    m: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RelativeReport {
    /// Pairs `(σ, c)` where `H = ∂H` was checked.
    pub boundary_checked: usize,
    /// Pairs `(τ, s₂)` where `H ∘ Γ = h` was checked.
    pub gamma_checked: usize,
    /// Face relations of `H` checked.
    pub faces_checked: usize,
}

/// Weakly increasing maps `[n] → [m]`.
pub fn monotone_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n + 1 {
            out.push(cur.clone());
            return;
        }
        let lo = cur.last().copied().unwrap_or(0);
        for v in lo..=m {
            cur.push(v);
            rec(n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::new(), &mut out);
    out
}

fn with_faces_cst(items: &[CstSimplex]) -> Result<Vec<CstSimplex>> {
    let mut out: Vec<CstSimplex> = Vec::new();
    let mut todo: Vec<CstSimplex> = items.to_vec();
    while let Some(t) = todo.pop() {
        if out.iter().any(|o| o.dim() == t.dim() && o.dist(&t) == 0.0) {
            continue;
        }
        for j in 0..=t.dim() {
            if t.dim() > 0 {
                todo.push(t.face(j)?);
            }
        }
        out.push(t);
    }
    Ok(out)
}

fn with_faces(items: &[NCorrSimplex]) -> Result<Vec<NCorrSimplex>> {
    let mut out: Vec<NCorrSimplex> = Vec::new();
    let mut todo: Vec<NCorrSimplex> = items.to_vec();
    while let Some(t) = todo.pop() {
        if out.iter().any(|o| o.fingerprint() == t.fingerprint()) {
            continue;
        }
        for j in 0..=t.dim() {
            if t.dim() > 0 {
                todo.push(t.face(j)?);
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Checks the hypothesis `h ∘ (id × ι) = ∂H ∘ (Γ × id)` on a finite diagram
/// and returns the extension.
pub fn extend_relative<'a, D: QuasiCategory>(
    oracle: &'a D,
    h: Box<dyn Homotopy<D> + 'a>,
    boundary: &Boundary<'_, D::Simplex>,
    m: usize,
    diagram: &[CstSimplex],
) -> Result<RelativeExtension<'a, D>> {
    if m > MAX_M {
        return Err(Error::DimensionTooLarge { got: m, max: MAX_M });
    }
    let diagram = with_faces_cst(diagram)?;
    if m == 1 {
        for tau in &diagram {
            if tau.dim() > MAX_REL_N {
                return Err(Error::DimensionTooLarge {
                    got: tau.dim(),
                    max: MAX_REL_N,
                });
            }
            let g = tau.gamma()?;
            for c in 0..=1 {
                let lhs = h.at(oracle, tau, &vec![c; tau.dim() + 1])?;
                let rhs = boundary(&g, c)?;
                if !oracle.equal(&lhs, &rhs) {
                    return Err(Error::BoundaryMismatch(format!(
                        "h and ∂H disagree on a Γ-image {}-simplex at level {c}",
                        tau.dim()
                    )));
                }
            }
        }
    }
    Ok(RelativeExtension {
        engine: Engine::with_homotopy(oracle, h, false),
        m,
    })
}

impl<'a, D: QuasiCategory> RelativeExtension<'a, D> {
    pub fn m(&self) -> usize {
        self.m
    }

    /// `H(σ, s₂)`.
    pub fn value(&mut self, sigma: &NCorrSimplex, s2: &[usize]) -> Result<D::Simplex> {
        if sigma.dim() > MAX_REL_N {
            return Err(Error::DimensionTooLarge {
                got: sigma.dim(),
                max: MAX_REL_N,
            });
        }
        if s2.iter().any(|&v| v > self.m) {
            return Err(Error::NotMonotone(s2.to_vec()));
        }
        Ok(self.engine.extend_at(sigma, s2, None)?.top().clone())
    }

    pub fn engine(&self) -> &Engine<'a, D> {
        &self.engine
    }

    /// Verifies `H = ∂H` on `family × ∂Δᵐ`, `H ∘ Γ = h` on `diagram × Δᵐ`,
    /// and the face relations of `H` on everything evaluated. All families
    /// are closed under faces first.
    pub fn verify(
        &mut self,
        h: &dyn Homotopy<D>,
        boundary: &Boundary<'_, D::Simplex>,
        family: &[NCorrSimplex],
        diagram: &[CstSimplex],
    ) -> Result<RelativeReport> {
        let mut rep = RelativeReport::default();
        let family = with_faces(family)?;
        let diagram = with_faces_cst(diagram)?;
        let oracle = self.engine.oracle;
        if self.m == 1 {
            for sigma in &family {
                for c in 0..=1 {
                    let lhs = self.value(sigma, &vec![c; sigma.dim() + 1])?;
                    if !oracle.equal(&lhs, &boundary(sigma, c)?) {
                        return Err(Error::BoundaryMismatch(format!(
                            "H differs from ∂H on a {}-simplex at level {c}",
                            sigma.dim()
                        )));
                    }
                    rep.boundary_checked += 1;
                }
            }
        }
        let mut evaluated: Vec<(NCorrSimplex, Vec<usize>)> = Vec::new();
        for tau in &diagram {
            let g = tau.gamma()?;
            for s2 in monotone_maps(tau.dim(), self.m) {
                let lhs = self.value(&g, &s2)?;
                if !oracle.equal(&lhs, &h.at(oracle, tau, &s2)?) {
                    return Err(Error::BoundaryMismatch(format!(
                        "H ∘ Γ differs from h on a {}-simplex with s₂ = {s2:?}",
                        tau.dim()
                    )));
                }
                rep.gamma_checked += 1;
                evaluated.push((g.clone(), s2));
            }
        }
        for sigma in &family {
            for s2 in monotone_maps(sigma.dim(), self.m) {
                evaluated.push((sigma.clone(), s2));
            }
        }
        for (sigma, s2) in &evaluated {
            if sigma.dim() == 0 {
                continue;
            }
            let v = self.value(sigma, s2)?;
            for j in 0..=sigma.dim() {
                let mut s2f = s2.clone();
                s2f.remove(j);
                let lhs = oracle.face(&v, j)?;
                let rhs = self.value(&sigma.face(j)?, &s2f)?;
                if !oracle.equal(&lhs, &rhs) {
                    return Err(Error::CompatibilityViolated {
                        chain: format!("H on a {}-simplex with s₂ = {s2:?}", sigma.dim()),
                        face: j,
                    });
                }
                rep.faces_checked += 1;
            }
        }
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_map_counts() {
        assert_eq!(monotone_maps(0, 1).len(), 2);
        assert_eq!(monotone_maps(2, 1).len(), 4);
        assert_eq!(monotone_maps(2, 0), vec![vec![0, 0, 0]]);
    }
}
