//! Named geometry catalog and the surface product construction.
//!
//! Surfaces (dim 2):
//! - `flat_c`, `flat_d`: the flat complex and para-complex planes,
//!   g = dq₁² + ε dq₂², j(∂₁, ∂₂) = (-ε ∂₂, ∂₁).
//! - `sphere(r)`, `hyperbolic(r)`: conformal round metrics
//!   4r⁴/(r² ± |q|²)²·δ with the rotation structure.
//! - `de_sitter(r)`: null coordinates (u, v), g = 2F du dv with
//!   F = (1 + uv/(2r²))⁻², j(∂ᵤ, ∂ᵥ) = (∂ᵤ, -∂ᵥ). The two null line
//!   fields are preserved by the Levi-Civita connection of any such F,
//!   so j is parallel; this F has constant curvature 1/r².
//! - `bump(a, σ)`: conformal factor exp(2a·exp(-|q|²/σ²)) on δ — a
//!   Kähler surface with nonconstant curvature.
//! - `para_bump(a, σ)`: the same bump profile as F in null coordinates —
//!   para-Kähler with nonconstant curvature.
//!
//! Products (dim 4): block-diagonal metric diag(g_a, s·g_b) and structure,
//! with s = -1 when the second factor is flipped. Flipping a definite factor
//! yields neutral signature; para surfaces are already neutral.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{FieldFn, Geometry, SampleBox};
use crate::error::{EngineError, Result};
use crate::jet::Jet;
use crate::jmat::JMat;

/// Numeric parameters for catalog members.
#[derive(Clone, Debug, Default)]
pub struct CatalogParams(pub BTreeMap<String, f64>);

impl CatalogParams {
    pub fn one(key: &str, value: f64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(key.to_string(), value);
        CatalogParams(m)
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).copied().unwrap_or(default)
    }
}

/// All catalog names, surfaces first, then the named 4-dimensional products.
pub fn catalog_names() -> &'static [&'static str] {
    &[
        "flat_c",
        "flat_d",
        "sphere",
        "hyperbolic",
        "de_sitter",
        "bump",
        "para_bump",
        "product_flat",
        "product_spheres",
        "product_para",
    ]
}

/// Parameters each catalog member understands, for the CLI listing.
pub fn catalog_help() -> Vec<(&'static str, &'static str)> {
    vec![
        ("flat_c", "flat complex plane (no parameters)"),
        ("flat_d", "flat para-complex plane (no parameters)"),
        ("sphere", "round sphere, conformal chart; r > 0 (default 1)"),
        ("hyperbolic", "hyperbolic disc, conformal chart; r > 0 (default 1)"),
        ("de_sitter", "de Sitter surface, null chart; r > 0 (default 1)"),
        ("bump", "Gaussian conformal bump on the plane; a (default 0.5), sigma > 0 (default 0.8)"),
        ("para_bump", "Gaussian bump in null coordinates; a (default 0.5), sigma > 0 (default 0.8)"),
        ("product_flat", "flat_c x flat_c, second factor flipped (neutral, flat)"),
        ("product_spheres", "sphere(1) x sphere(2), second factor flipped (neutral, Scal = 3/2)"),
        ("product_para", "de_sitter(1) x para_bump(0.5, 0.8) (neutral para-Kähler)"),
    ]
}

fn constant_fields(g: DMatrix<f64>, j: DMatrix<f64>) -> (FieldFn, FieldFn) {
    let metric: FieldFn = Arc::new(move |p: &[Jet]| JMat::constant(&p[0], &g));
    let structure: FieldFn = Arc::new(move |p: &[Jet]| JMat::constant(&p[0], &j));
    (metric, structure)
}

/// Rotation structure j∂₁ = -∂₂, j∂₂ = ∂₁ as a component matrix.
fn rotation_j() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Conformal surface g = λ²(q)·δ with the rotation structure (ε = +1).
fn conformal_surface(
    label: String,
    lam2: Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>,
    domain: SampleBox,
) -> Geometry {
    let metric: FieldFn = Arc::new(move |p: &[Jet]| {
        let f = lam2(p);
        let zero = f.zero_like();
        JMat {
            rows: 2,
            cols: 2,
            a: vec![f.clone(), zero.clone(), zero, f],
        }
    });
    let j = rotation_j();
    let structure: FieldFn = Arc::new(move |p: &[Jet]| JMat::constant(&p[0], &j));
    Geometry { dim: 2, epsilon: 1.0, label, domain, metric, structure }
}

/// Null-coordinate surface g = 2F du dv, j = diag(1, -1) (ε = -1).
fn null_surface(
    label: String,
    f_field: Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>,
    domain: SampleBox,
) -> Geometry {
    let metric: FieldFn = Arc::new(move |p: &[Jet]| {
        let f = f_field(p);
        let zero = f.zero_like();
        JMat {
            rows: 2,
            cols: 2,
            a: vec![zero.clone(), f.clone(), f, zero],
        }
    });
    let j = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let structure: FieldFn = Arc::new(move |p: &[Jet]| JMat::constant(&p[0], &j));
    Geometry { dim: 2, epsilon: -1.0, label, domain, metric, structure }
}

fn positive_param(geometry: &str, name: &str, value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(EngineError::InvalidParameter {
            geometry: geometry.to_string(),
            name: name.to_string(),
            value,
        })
    }
}

/// Builds a catalog geometry by name.
pub fn catalog(name: &str, params: &CatalogParams) -> Result<Geometry> {
    match name {
        "flat_c" => {
            let (metric, structure) = constant_fields(DMatrix::identity(2, 2), rotation_j());
            Ok(Geometry {
                dim: 2,
                epsilon: 1.0,
                label: "flat_c".into(),
                domain: SampleBox::symmetric(2, 1.0),
                metric,
                structure,
            })
        }
        "flat_d" => {
            let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
            // j∂₁ = -ε∂₂ = ∂₂, j∂₂ = ∂₁
            let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
            let (metric, structure) = constant_fields(g, j);
            Ok(Geometry {
                dim: 2,
                epsilon: -1.0,
                label: "flat_d".into(),
                domain: SampleBox::symmetric(2, 1.0),
                metric,
                structure,
            })
        }
        "sphere" => {
            let r = positive_param(name, "r", params.get_or("r", 1.0))?;
            let c4 = 4.0 * r.powi(4);
            let r2 = r * r;
            let lam2 = Arc::new(move |p: &[Jet]| {
                let q2 = &(&p[0] * &p[0]) + &(&p[1] * &p[1]);
                let denom = &q2.const_like(r2) + &q2;
                denom.powi(2).recip().expect("r^2 + |q|^2 > 0").scale(c4)
            });
            Ok(conformal_surface(
                format!("sphere({r})"),
                lam2,
                SampleBox::symmetric(2, 0.9 * r),
            ))
        }
        "hyperbolic" => {
            let r = positive_param(name, "r", params.get_or("r", 1.0))?;
            let c4 = 4.0 * r.powi(4);
            let r2 = r * r;
            let lam2 = Arc::new(move |p: &[Jet]| {
                let q2 = &(&p[0] * &p[0]) + &(&p[1] * &p[1]);
                let denom = &q2.const_like(r2) - &q2;
                denom.powi(2).recip().expect("inside the disc r^2 - |q|^2 > 0").scale(c4)
            });
            // box keeps |q| <= 0.9 r, 10% clear of the chart boundary
            let half = 0.9 * r / std::f64::consts::SQRT_2;
            Ok(conformal_surface(
                format!("hyperbolic({r})"),
                lam2,
                SampleBox::symmetric(2, half),
            ))
        }
        "de_sitter" => {
            let r = positive_param(name, "r", params.get_or("r", 1.0))?;
            let half_c = 0.5 / (r * r);
            let f_field = Arc::new(move |p: &[Jet]| {
                let uv = &p[0] * &p[1];
                let denom = &uv.const_like(1.0) + &uv.scale(half_c);
                denom.powi(2).recip().expect("1 + uv/(2r^2) > 0 on the chart box")
            });
            Ok(null_surface(
                format!("de_sitter({r})"),
                f_field,
                SampleBox::symmetric(2, 0.9 * r),
            ))
        }
        "bump" => {
            let a = params.get_or("a", 0.5);
            let sigma = positive_param(name, "sigma", params.get_or("sigma", 0.8))?;
            let inv_s2 = 1.0 / (sigma * sigma);
            let lam2 = Arc::new(move |p: &[Jet]| {
                let q2 = &(&p[0] * &p[0]) + &(&p[1] * &p[1]);
                q2.scale(-inv_s2).exp().scale(2.0 * a).exp()
            });
            Ok(conformal_surface(
                format!("bump({a},{sigma})"),
                lam2,
                SampleBox::symmetric(2, 1.5),
            ))
        }
        "para_bump" => {
            let a = params.get_or("a", 0.5);
            let sigma = positive_param(name, "sigma", params.get_or("sigma", 0.8))?;
            let inv_s2 = 1.0 / (sigma * sigma);
            let f_field = Arc::new(move |p: &[Jet]| {
                let q2 = &(&p[0] * &p[0]) + &(&p[1] * &p[1]);
                q2.scale(-inv_s2).exp().scale(2.0 * a).exp()
            });
            Ok(null_surface(
                format!("para_bump({a},{sigma})"),
                f_field,
                SampleBox::symmetric(2, 1.5),
            ))
        }
        "product_flat" => {
            let a = catalog("flat_c", &CatalogParams::default())?;
            let b = catalog("flat_c", &CatalogParams::default())?;
            product(&a, &b, true)
        }
        "product_spheres" => {
            let a = catalog("sphere", &CatalogParams::one("r", 1.0))?;
            let b = catalog("sphere", &CatalogParams::one("r", 2.0))?;
            product(&a, &b, true)
        }
        "product_para" => {
            let a = catalog("de_sitter", &CatalogParams::one("r", 1.0))?;
            let b = catalog("para_bump", &CatalogParams::default())?;
            product(&a, &b, false)
        }
        other => Err(EngineError::UnknownGeometry(other.to_string())),
    }
}

/// Block-diagonal product of two surfaces, optionally flipping the sign of
/// the second factor's metric. Flipping preserves the Levi-Civita connection
/// of the factor, so the product of Kähler factors stays Kähler.
pub fn product(a: &Geometry, b: &Geometry, flip_second: bool) -> Result<Geometry> {
    if a.epsilon != b.epsilon {
        return Err(EngineError::ProductMismatch(format!(
            "epsilon mismatch: {} vs {}",
            a.epsilon, b.epsilon
        )));
    }
    if a.dim != 2 || b.dim != 2 {
        return Err(EngineError::ProductMismatch(format!(
            "only surface factors are supported, got dims {} and {}",
            a.dim, b.dim
        )));
    }
    let s = if flip_second { -1.0 } else { 1.0 };
    let (am, bm) = (a.metric.clone(), b.metric.clone());
    let metric: FieldFn = Arc::new(move |p: &[Jet]| {
        let ga = am(&p[..2]);
        let gb = bm(&p[2..]).scale(s);
        let zero = p[0].zero_like();
        JMat::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
            (true, true) => ga.at(i, j).clone(),
            (false, false) => gb.at(i - 2, j - 2).clone(),
            _ => zero.clone(),
        })
    });
    let (aj, bj) = (a.structure.clone(), b.structure.clone());
    let structure: FieldFn = Arc::new(move |p: &[Jet]| {
        let ja = aj(&p[..2]);
        let jb = bj(&p[2..]);
        let zero = p[0].zero_like();
        JMat::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
            (true, true) => ja.at(i, j).clone(),
            (false, false) => jb.at(i - 2, j - 2).clone(),
            _ => zero.clone(),
        })
    });
    Ok(Geometry {
        dim: 4,
        epsilon: a.epsilon,
        label: format!("product({},{},{})", a.label, b.label, flip_second),
        domain: a.domain.concat(&b.domain),
        metric,
        structure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_c_matches_the_stated_fields() {
        let g = catalog("flat_c", &CatalogParams::default()).unwrap();
        assert_eq!(g.epsilon, 1.0);
        let m = g.metric_values(&[0.2, 0.3]);
        assert_eq!(m, DMatrix::identity(2, 2));
        let j = g.structure_values(&[0.2, 0.3]);
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn unknown_names_and_bad_parameters_are_rejected() {
        assert!(matches!(
            catalog("torus", &CatalogParams::default()),
            Err(EngineError::UnknownGeometry(_))
        ));
        assert!(matches!(
            catalog("sphere", &CatalogParams::one("r", -1.0)),
            Err(EngineError::InvalidParameter { .. })
        ));
        assert!(matches!(
            catalog("bump", &CatalogParams::one("sigma", 0.0)),
            Err(EngineError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn product_requires_matching_structure_kind() {
        let a = catalog("flat_c", &CatalogParams::default()).unwrap();
        let b = catalog("flat_d", &CatalogParams::default()).unwrap();
        assert!(matches!(product(&a, &b, true), Err(EngineError::ProductMismatch(_))));
    }

    #[test]
    fn flipped_flat_product_is_neutral() {
        let g = catalog("product_flat", &CatalogParams::default()).unwrap();
        let m = g.metric_values(&[0.1, 0.2, -0.3, 0.4]);
        let eig = m.symmetric_eigen().eigenvalues;
        assert_eq!(eig.iter().filter(|&&e| e > 0.0).count(), 2);
        assert_eq!(eig.iter().filter(|&&e| e < 0.0).count(), 2);
    }
}
