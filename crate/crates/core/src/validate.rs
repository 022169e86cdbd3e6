//! Invariant checks for serialised documents.

use serde::Serialize;

use crate::cstar::{hom_residuals, AlgElement};
use crate::error::{Error, Result};
use crate::hilbert::is_full_module;
use crate::nerve::fill_horn;
use crate::serial::{self, Document};

/// One checked invariant.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub invariant: String,
    pub residual: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Every invariant checked for one document.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub kind: &'static str,
    pub eps: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(invariant: &str, residual: f64, eps: f64) -> Check {
    Check {
        invariant: invariant.into(),
        residual: Some(residual),
        passed: residual <= eps,
        detail: None,
    }
}

fn error_check(invariant: &str, e: &Error) -> Check {
    Check {
        invariant: invariant.into(),
        residual: None,
        passed: false,
        detail: Some(format!("{e:?}: {e}")),
    }
}

/// Parses `text` as any document and checks its invariants against `eps`.
///
/// Parse and schema errors are returned as errors; violated invariants are
/// reported as failed checks.
pub fn validate_text(text: &str, eps: f64) -> Result<ValidationReport> {
    let doc = serial::parse_document(text)?;
    let mut checks = Vec::new();
    match &doc {
        Document::Algebra(a) => {
            let alg = serial::algebra_from_json(a, "$")?;
            checks.push(Check {
                invariant: format!("algebra {alg} has positive blocks, dimension {}", alg.dim()),
                residual: Some(0.0),
                passed: true,
                detail: None,
            });
        }
        Document::StarHom(h) => {
            let src = serial::algebra_from_json(&h.src, "$.src")?;
            let dst = serial::algebra_from_json(&h.dst, "$.dst")?;
            let m = serial::matrix_from_json(&h.matrix, dst.dim(), src.dim(), "$.matrix")?;
            let r = hom_residuals(&src, &dst, &m);
            checks.push(check("multiplicative", r.multiplicative, eps));
            checks.push(check("*-preserving", r.star, eps));
            match serial::hom_from_json(h, "$") {
                Ok(phi) => checks.push(Check {
                    invariant: "normal form".into(),
                    residual: Some(0.0),
                    passed: true,
                    detail: Some(format!(
                        "multiplicities {:?}, {}",
                        phi.mult_matrix(),
                        if phi.is_unital() { "unital" } else { "non-unital" }
                    )),
                }),
                Err(e) => checks.push(error_check("normal form", &e)),
            }
        }
        Document::Module(m) => {
            let e = serial::module_from_json(m, "$")?;
            checks.push(Check {
                invariant: "module".into(),
                residual: Some(0.0),
                passed: true,
                detail: Some(format!("dimension {}, full: {}", e.dim(), is_full_module(&e))),
            });
        }
        Document::Correspondence(c) => {
            let lr = &c.left_action;
            let src = serial::algebra_from_json(&lr.src, "$.left_action.src")?;
            let dst = serial::algebra_from_json(&lr.dst, "$.left_action.dst")?;
            let m = serial::matrix_from_json(&lr.matrix, dst.dim(), src.dim(), "$.left_action.matrix")?;
            let r = hom_residuals(&src, &dst, &m);
            checks.push(check("left action multiplicative", r.multiplicative, eps));
            checks.push(check("left action *-preserving", r.star, eps));
            match serial::corr_from_json(c, "$") {
                Ok(e) => {
                    let unit = e.left_action().unit_image();
                    let one = AlgElement::one(e.left_action().dst());
                    checks.push(check("left action unital", unit.dist(&one), eps));
                }
                Err(e) => checks.push(error_check("correspondence", &e)),
            }
        }
        Document::Iso(u) => match serial::iso_from_json(u, "$") {
            Ok(iso) => {
                let r = iso.residuals();
                checks.push(check("unitary", r.unitary, eps));
                checks.push(check("right-linear", r.right_linear, eps));
                checks.push(check("intertwines the left actions", r.intertwining, eps));
            }
            Err(e) => checks.push(error_check("isomorphism", &e)),
        },
        Document::Simplex(s) => match serial::simplex_with_report(s, "$") {
            Ok((simplex, rep)) => {
                checks.push(check("unit conditions", rep.unit_residual, eps));
                let full = simplex.pentagon_report_with(true)?;
                let mut c = check("pentagons", full.pentagon_residual, eps);
                c.detail = Some(format!(
                    "{} quadruples checked{}",
                    full.pentagons_checked,
                    full.worst_pentagon.map(|q| format!(", worst at {q:?}")).unwrap_or_default()
                ));
                checks.push(c);
                for i in 0..=simplex.dim() {
                    for j in i + 1..=simplex.dim() {
                        for k in j + 1..=simplex.dim() {
                            let r = simplex.iso(i, j, k).residuals();
                            checks.push(check(&format!("u_{i}{j}{k} is an isomorphism"), r.max(), eps));
                        }
                    }
                }
            }
            Err(e @ (Error::Parse(_) | Error::Schema { .. })) => return Err(e),
            Err(e) => checks.push(error_check("simplex", &e)),
        },
        Document::Horn(h) => match serial::horn_from_json(h, "$") {
            Ok(horn) => match fill_horn(&horn) {
                Ok(_) => checks.push(Check {
                    invariant: format!("{} is compatible and fillable", horn.label()),
                    residual: Some(0.0),
                    passed: true,
                    detail: None,
                }),
                Err(e) => checks.push(error_check(&horn.label(), &e)),
            },
            Err(e @ (Error::Parse(_) | Error::Schema { .. })) => return Err(e),
            Err(e) => checks.push(error_check("horn faces", &e)),
        },
    }
    Ok(ValidationReport {
        kind: doc.kind(),
        eps,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
