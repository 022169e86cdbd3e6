//! JSON records for every constructible value.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows, all
//! in the canonical matrix-unit coordinates. Structural problems (wrong
//! lengths, shapes, missing keys) are reported as [`Error::Schema`] with a
//! location; invariant violations keep their own error variants so that a
//! validator can tell bad input apart from bad mathematics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cstar::{FdCstarAlgebra, StarHom};
use crate::error::{Error, Result};
use crate::extension::k0::K0Simplex;
use crate::hilbert::{tensor, CorrIso, Correspondence, HilbertModule};
use crate::linalg::{c, CMat};
use crate::nerve::{HornSpec, NCorrSimplex, SimplexData, SimplexReport};
use crate::subdivision::{elements, SubdivisionFunctor};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarHomJson {
    pub src: AlgebraJson,
    pub dst: AlgebraJson,
    pub matrix: JsonMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleJson {
    pub base: AlgebraJson,
    pub mult: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrJson {
    pub src: AlgebraJson,
    pub dst: AlgebraJson,
    pub mult: Vec<usize>,
    pub left_action: StarHomJson,
}

/// An isomorphism `src ≅ dst`; `unitary` is the full coordinate matrix on
/// the module of `src`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoJson {
    pub src: CorrJson,
    pub dst: CorrJson,
    pub unitary: JsonMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub i: usize,
    pub j: usize,
    pub corr: CorrJson,
}

/// `u_ijk: E_ij ⊗ E_jk ≅ E_ik` as a full matrix in the coordinates of the
/// canonical tensor product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleJson {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub unitary: JsonMatrix,
}

/// Degenerate entries (`i = j` or `j = k`) may be omitted; when present they
/// are checked against the canonical ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexJson {
    pub algebras: Vec<AlgebraJson>,
    #[serde(default)]
    pub corrs: Vec<EdgeJson>,
    #[serde(default)]
    pub isos: Vec<TriangleJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HornJson {
    pub n: usize,
    pub k: usize,
    pub faces: Vec<Option<SimplexJson>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K0MapJson {
    pub i: usize,
    pub j: usize,
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K0SimplexJson {
    pub ranks: Vec<usize>,
    pub maps: Vec<K0MapJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdVertexJson {
    pub set: Vec<usize>,
    pub algebra: AlgebraJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdArrowJson {
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub hom: StarHomJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdFunctorJson {
    pub n: usize,
    pub vertices: Vec<SdVertexJson>,
    pub arrows: Vec<SdArrowJson>,
}

// ---------------------------------------------------------------------------
// to JSON

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
        .collect()
}

pub fn algebra_to_json(a: &FdCstarAlgebra) -> AlgebraJson {
    AlgebraJson {
        blocks: a.blocks().to_vec(),
        label: a.label().map(str::to_string),
    }
}

pub fn hom_to_json(phi: &StarHom) -> StarHomJson {
    StarHomJson {
        src: algebra_to_json(phi.src()),
        dst: algebra_to_json(phi.dst()),
        matrix: matrix_to_json(phi.matrix()),
    }
}

pub fn module_to_json(e: &HilbertModule) -> ModuleJson {
    ModuleJson {
        base: algebra_to_json(e.base()),
        mult: e.mult().to_vec(),
    }
}

pub fn corr_to_json(e: &Correspondence) -> CorrJson {
    CorrJson {
        src: algebra_to_json(e.src()),
        dst: algebra_to_json(e.dst()),
        mult: e.mult().to_vec(),
        left_action: hom_to_json(e.left_action()),
    }
}

pub fn iso_to_json(u: &CorrIso) -> IsoJson {
    IsoJson {
        src: corr_to_json(u.src()),
        dst: corr_to_json(u.dst()),
        unitary: matrix_to_json(&u.full_matrix()),
    }
}

/// Writes the nondegenerate data `E_ij` (`i < j`) and `u_ijk` (`i < j < k`).
pub fn simplex_to_json(s: &NCorrSimplex) -> SimplexJson {
    let n = s.dim();
    let mut corrs = Vec::new();
    let mut isos = Vec::new();
    for i in 0..=n {
        for j in i + 1..=n {
            corrs.push(EdgeJson {
                i,
                j,
                corr: corr_to_json(s.corr(i, j)),
            });
            for k in j + 1..=n {
                isos.push(TriangleJson {
                    i,
                    j,
                    k,
                    unitary: matrix_to_json(&s.iso(i, j, k).full_matrix()),
                });
            }
        }
    }
    SimplexJson {
        algebras: s.algebras().iter().map(algebra_to_json).collect(),
        corrs,
        isos,
    }
}

pub fn horn_to_json(h: &HornSpec) -> HornJson {
    HornJson {
        n: h.n,
        k: h.k,
        faces: h.faces.iter().map(|f| f.as_ref().map(simplex_to_json)).collect(),
    }
}

pub fn k0_to_json(s: &K0Simplex) -> K0SimplexJson {
    K0SimplexJson {
        ranks: s.ranks.clone(),
        maps: s
            .maps
            .iter()
            .filter(|((i, j), _)| i < j)
            .map(|(&(i, j), m)| K0MapJson {
                i,
                j,
                matrix: (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect(),
            })
            .collect(),
    }
}

pub fn functor_to_json(f: &SubdivisionFunctor) -> SdFunctorJson {
    SdFunctorJson {
        n: f.n,
        vertices: f
            .objects
            .iter()
            .map(|(&s, o)| SdVertexJson {
                set: elements(s),
                algebra: algebra_to_json(&o.algebra),
            })
            .collect(),
        arrows: f
            .arrows
            .iter()
            .filter(|((s, t), _)| s != t)
            .map(|(&(s, t), a)| SdArrowJson {
                from: elements(s),
                to: elements(t),
                hom: hom_to_json(&a.hom),
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// from JSON

pub fn matrix_from_json(m: &JsonMatrix, rows: usize, cols: usize, loc: &str) -> Result<CMat> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let got_cols = m.first().map_or(0, Vec::len);
        return Err(Error::schema(
            loc,
            format!("expected a {rows} × {cols} matrix, got {} rows of length {got_cols}", m.len()),
        ));
    }
    Ok(CMat::from_fn(rows, cols, |r, col| {
        let [re, im] = m[r][col];
        c(re, im)
    }))
}

pub fn algebra_from_json(a: &AlgebraJson, loc: &str) -> Result<FdCstarAlgebra> {
    let alg = FdCstarAlgebra::new(a.blocks.clone()).map_err(|e| Error::schema(format!("{loc}.blocks"), e.to_string()))?;
    Ok(match &a.label {
        Some(l) => alg.with_label(l.clone()),
        None => alg,
    })
}

pub fn hom_from_json(h: &StarHomJson, loc: &str) -> Result<StarHom> {
    let src = algebra_from_json(&h.src, &format!("{loc}.src"))?;
    let dst = algebra_from_json(&h.dst, &format!("{loc}.dst"))?;
    let m = matrix_from_json(&h.matrix, dst.dim(), src.dim(), &format!("{loc}.matrix"))?;
    StarHom::new(src, dst, m)
}

pub fn module_from_json(e: &ModuleJson, loc: &str) -> Result<HilbertModule> {
    let base = algebra_from_json(&e.base, &format!("{loc}.base"))?;
    HilbertModule::new(base, e.mult.clone()).map_err(|err| Error::schema(format!("{loc}.mult"), err.to_string()))
}

pub fn corr_from_json(e: &CorrJson, loc: &str) -> Result<Correspondence> {
    let src = algebra_from_json(&e.src, &format!("{loc}.src"))?;
    let dst = algebra_from_json(&e.dst, &format!("{loc}.dst"))?;
    let module =
        HilbertModule::new(dst, e.mult.clone()).map_err(|err| Error::schema(format!("{loc}.mult"), err.to_string()))?;
    let k = module.compacts()?;
    if algebra_from_json(&e.left_action.src, "")? != src || algebra_from_json(&e.left_action.dst, "")? != k {
        return Err(Error::schema(
            format!("{loc}.left_action"),
            format!("left action must map {src} into K(E) = {k}"),
        ));
    }
    let left = hom_from_json(&e.left_action, &format!("{loc}.left_action"))?;
    Correspondence::new(src, module, left)
}

pub fn iso_from_json(u: &IsoJson, loc: &str) -> Result<CorrIso> {
    let src = corr_from_json(&u.src, &format!("{loc}.src"))?;
    let dst = corr_from_json(&u.dst, &format!("{loc}.dst"))?;
    let d = src.module().dim();
    let m = matrix_from_json(&u.unitary, d, d, &format!("{loc}.unitary"))?;
    crate::hilbert::make_iso(&src, &dst, &m)
}

/// Decodes to raw simplex data without validating the coherence conditions.
pub fn simplex_data_from_json(s: &SimplexJson, loc: &str) -> Result<SimplexData> {
    let algebras = s
        .algebras
        .iter()
        .enumerate()
        .map(|(i, a)| algebra_from_json(a, &format!("{loc}.algebras[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let n = algebras
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::schema(format!("{loc}.algebras"), "a simplex needs at least one algebra"))?;
    let mut corrs = BTreeMap::new();
    for (idx, e) in s.corrs.iter().enumerate() {
        let l = format!("{loc}.corrs[{idx}]");
        if e.i > e.j || e.j > n {
            return Err(Error::schema(&l, format!("indices ({}, {}) out of order or range", e.i, e.j)));
        }
        if corrs.insert((e.i, e.j), corr_from_json(&e.corr, &format!("{l}.corr"))?).is_some() {
            return Err(Error::schema(&l, format!("duplicate E_{}{}", e.i, e.j)));
        }
    }
    let mut unitaries = BTreeMap::new();
    for (idx, t) in s.isos.iter().enumerate() {
        let l = format!("{loc}.isos[{idx}]");
        let (i, j, k) = (t.i, t.j, t.k);
        if i > j || j > k || k > n {
            return Err(Error::schema(&l, format!("indices ({i}, {j}, {k}) out of order or range")));
        }
        let id = |a: usize| crate::hilbert::identity_corr(&algebras[a]);
        let eij = corrs.get(&(i, j)).cloned().or_else(|| (i == j).then(|| id(i)));
        let ejk = corrs.get(&(j, k)).cloned().or_else(|| (j == k).then(|| id(j)));
        let (Some(eij), Some(ejk)) = (eij, ejk) else {
            return Err(Error::schema(&l, format!("u_{i}{j}{k} refers to a missing correspondence")));
        };
        let t_corr = tensor(&eij, &ejk)?.corr;
        let d = t_corr.module().dim();
        let m = matrix_from_json(&t.unitary, d, d, &format!("{l}.unitary"))?;
        let (blocks, right_linear) = t_corr.module().blocks_of_matrix(&m)?;
        if right_linear > crate::linalg::EPS {
            return Err(Error::NotRightLinear(right_linear));
        }
        if unitaries.insert((i, j, k), blocks).is_some() {
            return Err(Error::schema(&l, format!("duplicate u_{i}{j}{k}")));
        }
    }
    Ok(SimplexData {
        algebras,
        corrs,
        unitaries,
    })
}

pub fn simplex_from_json(s: &SimplexJson, loc: &str) -> Result<NCorrSimplex> {
    Ok(simplex_with_report(s, loc)?.0)
}

pub fn simplex_with_report(s: &SimplexJson, loc: &str) -> Result<(NCorrSimplex, SimplexReport)> {
    NCorrSimplex::from_data(simplex_data_from_json(s, loc)?)
}

pub fn horn_from_json(h: &HornJson, loc: &str) -> Result<HornSpec> {
    if h.faces.len() != h.n + 1 || h.k > h.n {
        return Err(Error::schema(
            loc,
            format!("Λ^{}_{} needs {} face slots, got {}", h.n, h.k, h.n + 1, h.faces.len()),
        ));
    }
    let faces = h
        .faces
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.as_ref()
                .map(|f| simplex_from_json(f, &format!("{loc}.faces[{i}]")))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HornSpec { n: h.n, k: h.k, faces })
}

// ---------------------------------------------------------------------------
// documents

/// Any top-level JSON document understood by the tools.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Algebra(AlgebraJson),
    StarHom(StarHomJson),
    Module(ModuleJson),
    Correspondence(CorrJson),
    Iso(IsoJson),
    Simplex(SimplexJson),
    Horn(HornJson),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Algebra(_) => "algebra",
            Document::StarHom(_) => "star_hom",
            Document::Module(_) => "module",
            Document::Correspondence(_) => "correspondence",
            Document::Iso(_) => "iso",
            Document::Simplex(_) => "ncorr_simplex",
            Document::Horn(_) => "horn",
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Document::Algebra(x) => serde_json::to_value(x),
            Document::StarHom(x) => serde_json::to_value(x),
            Document::Module(x) => serde_json::to_value(x),
            Document::Correspondence(x) => serde_json::to_value(x),
            Document::Iso(x) => serde_json::to_value(x),
            Document::Simplex(x) => serde_json::to_value(x),
            Document::Horn(x) => serde_json::to_value(x),
        };
        v.expect("records always serialise")
    }
}

fn decode<T: serde::de::DeserializeOwned>(v: Value, kind: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::schema(kind, e.to_string()))
}

/// Parses a document and recognises its schema from its keys.
pub fn parse_document(text: &str) -> Result<Document> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::schema("$", "top-level value must be an object"))?;
    let has = |k: &str| obj.contains_key(k);
    if has("faces") {
        Ok(Document::Horn(decode(v, "horn")?))
    } else if has("algebras") {
        Ok(Document::Simplex(decode(v, "ncorr_simplex")?))
    } else if has("unitary") {
        Ok(Document::Iso(decode(v, "iso")?))
    } else if has("left_action") {
        Ok(Document::Correspondence(decode(v, "correspondence")?))
    } else if has("matrix") {
        Ok(Document::StarHom(decode(v, "star_hom")?))
    } else if has("base") {
        Ok(Document::Module(decode(v, "module")?))
    } else if has("blocks") {
        Ok(Document::Algebra(decode(v, "algebra")?))
    } else {
        Err(Error::schema("$", "unrecognised document: no schema matches its keys"))
    }
}

/// Parses text expected to hold one particular record type.
pub fn parse_as<T: serde::de::DeserializeOwned>(text: &str, kind: &str) -> Result<T> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    decode(v, kind)
}
