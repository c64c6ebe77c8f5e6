//! Chart-based pseudo- and para-Kähler geometries.
//!
//! A [`Geometry`] is a coordinate chart of even dimension `2n` carrying a
//! jet-evaluable metric field `g(x)`, a jet-evaluable structure field `j(x)`
//! with `j² = -ε·Id` (ε = +1 complex case, ε = -1 para-complex case), and a
//! seeded sampling box kept clear of coordinate singularities.
//!
//! Geometries are immutable after construction and all evaluations are pure;
//! the intended execution model is a parallel map over sample points.

mod catalog;
mod levi_civita;

pub use catalog::{catalog, catalog_help, catalog_names, product, CatalogParams};
pub use levi_civita::{
    christoffel, christoffel_jets, curvature_suite, nabla_tensor, CurvatureSuite, JetTensor,
    PointTensor, Variance,
};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{EngineError, Result};
use crate::jet::Jet;
use crate::jmat::JMat;
use crate::rng::SplitMix64;

/// A coefficient field on a chart: takes the seeded coordinate jets of a
/// point (possibly embedded in a larger variable space) and returns a matrix
/// of jets in the same truncation space.
pub type FieldFn = Arc<dyn Fn(&[Jet]) -> JMat + Send + Sync>;

/// Axis-aligned sampling box, already shrunk away from any chart singularity.
#[derive(Clone, Debug)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        SampleBox { lo: vec![-half_width; dim], hi: vec![half_width; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| rng.uniform(a, b)).collect()
    }

    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    /// Concatenation with another box (product chart).
    pub fn concat(&self, other: &SampleBox) -> SampleBox {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        SampleBox { lo, hi }
    }
}

/// A chart-based pseudo- or para-Kähler manifold candidate.
///
/// Construction does not verify the Kähler axioms; [`kahler_audit`] reports
/// the residuals and callers that require the axioms (e.g. the tangent-bundle
/// lift) enforce a threshold on them.
#[derive(Clone)]
pub struct Geometry {
    pub dim: usize,
    /// ε with j² = -ε·Id: +1 complex case, -1 para-complex case.
    pub epsilon: f64,
    pub label: String,
    pub domain: SampleBox,
    pub metric: FieldFn,
    pub structure: FieldFn,
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry")
            .field("dim", &self.dim)
            .field("epsilon", &self.epsilon)
            .field("label", &self.label)
            .finish()
    }
}

impl Geometry {
    /// Metric coefficients as jets at a seeded point.
    pub fn metric_jets(&self, point: &[Jet]) -> JMat {
        debug_assert_eq!(point.len(), self.dim);
        (self.metric)(point)
    }

    /// Structure coefficients as jets at a seeded point.
    pub fn structure_jets(&self, point: &[Jet]) -> JMat {
        debug_assert_eq!(point.len(), self.dim);
        (self.structure)(point)
    }

    /// Metric values at a point.
    pub fn metric_values(&self, x: &[f64]) -> DMatrix<f64> {
        let seeds = Jet::seed_point_unchecked(x, 1);
        self.metric_jets(&seeds).values()
    }

    /// Structure values at a point.
    pub fn structure_values(&self, x: &[f64]) -> DMatrix<f64> {
        let seeds = Jet::seed_point_unchecked(x, 1);
        self.structure_jets(&seeds).values()
    }

    /// Checks metric invertibility at a point, logging the conditioning.
    pub fn check_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric_values(x);
        let det = g.determinant();
        if det.abs() < 1e-10 {
            return Err(EngineError::DegenerateMetric { point: x.to_vec(), det });
        }
        let svd = g.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        log::debug!("{}: metric condition number at {:?} = {:.3e}", self.label, x, smax / smin);
        Ok(g)
    }

    /// Draws `count` points from the chart domain.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        (0..count).map(|_| self.domain.sample(&mut rng)).collect()
    }
}

/// Residuals of the four Kähler axioms at a point.
#[derive(Clone, Debug)]
pub struct KahlerResiduals {
    /// max |j² + ε·Id|
    pub j_square: f64,
    /// max |g(j·, j·) - ε·g|, as the matrix identity jᵀ g j - ε g
    pub compatibility: f64,
    /// max |∇j|
    pub nabla_j: f64,
    /// max |dω| with ω(X, Y) = g(jX, Y)
    pub d_omega: f64,
}

impl KahlerResiduals {
    pub fn max(&self) -> f64 {
        self.j_square.max(self.compatibility).max(self.nabla_j).max(self.d_omega)
    }
}

/// Audits the Kähler axioms at a point: j² = -ε·Id, compatibility of g with
/// j, parallelism of j, and closedness of ω = g(j·,·). Residuals only;
/// thresholds are applied by the caller.
pub fn kahler_audit(geom: &Geometry, x: &[f64]) -> Result<KahlerResiduals> {
    let n = geom.dim;
    geom.check_metric(x)?;
    let seeds = Jet::seed_point_unchecked(x, 2);
    let g = geom.metric_jets(&seeds);
    let j = geom.structure_jets(&seeds);

    // (a) j² + ε Id
    let j2 = j.matmul(&j);
    let mut r_j2: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            let want = if i == k { -geom.epsilon } else { 0.0 };
            r_j2 = r_j2.max((j2.at(i, k).value() - want).abs());
        }
    }

    // (b) jᵀ g j - ε g
    let jgj = j.transpose().matmul(&g).matmul(&j);
    let mut r_compat: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            r_compat = r_compat
                .max((jgj.at(i, k).value() - geom.epsilon * g.at(i, k).value()).abs());
        }
    }

    // (c) ∇j via the generic covariant derivative of the (1,1) field
    let structure = geom.structure.clone();
    let dim = geom.dim;
    let field = move |p: &[Jet]| -> JetTensor {
        let jm = structure(p);
        JetTensor {
            shape: vec![dim, dim],
            variance: vec![Variance::Contra, Variance::Co],
            data: jm.a,
        }
    };
    let njt = nabla_tensor(geom, &field, x, 2)?;
    let r_nabla_j = njt.max_abs();

    // (d) dω, ω_ab = j^c_a g_cb
    let omega = JMat::from_fn(n, n, |a, b| {
        let mut acc = j.at(0, a) * g.at(0, b);
        for c in 1..n {
            acc = &acc + &(j.at(c, a) * g.at(c, b));
        }
        acc
    });
    let mut r_domega: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let d = omega.at(b, c).derivative(a).value()
                    - omega.at(a, c).derivative(b).value()
                    + omega.at(a, b).derivative(c).value();
                r_domega = r_domega.max(d.abs());
            }
        }
    }

    Ok(KahlerResiduals {
        j_square: r_j2,
        compatibility: r_compat,
        nabla_j: r_nabla_j,
        d_omega: r_domega,
    })
}

/// Maximum Kähler residual over sampled points; convenience for gatekeeping.
pub fn kahler_audit_sampled(geom: &Geometry, points: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in geom.sample_points(points, seed) {
        worst = worst.max(kahler_audit(geom, &x)?.max());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plane_audit_is_exact() {
        let g = catalog("flat_c", &CatalogParams::default()).unwrap();
        let r = kahler_audit(&g, &[0.3, -0.4]).unwrap();
        assert_eq!(r.j_square, 0.0);
        assert_eq!(r.compatibility, 0.0);
        assert_eq!(r.nabla_j, 0.0);
        assert_eq!(r.d_omega, 0.0);
    }

    #[test]
    fn sphere_audit_passes() {
        let g = catalog("sphere", &CatalogParams::one("r", 1.0)).unwrap();
        for x in g.sample_points(16, 42) {
            let r = kahler_audit(&g, &x).unwrap();
            assert!(r.max() < 1e-10, "residuals {:?} at {:?}", r, x);
        }
    }

    #[test]
    fn broken_structure_is_detected() {
        let g = catalog("sphere", &CatalogParams::one("r", 1.0)).unwrap();
        let structure = g.structure.clone();
        let broken = Geometry {
            structure: Arc::new(move |p: &[Jet]| structure(p).scale(1.01)),
            ..g
        };
        let r = kahler_audit(&broken, &[0.2, 0.1]).unwrap();
        assert!((r.j_square - (1.01f64 * 1.01 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn all_catalog_members_pass_the_audit() {
        for name in catalog_names() {
            let g = catalog(name, &CatalogParams::default()).unwrap();
            for x in g.sample_points(16, 7) {
                let r = kahler_audit(&g, &x).unwrap();
                assert!(r.max() < 1e-8, "{name}: residuals {r:?} at {x:?}");
            }
        }
    }
}
