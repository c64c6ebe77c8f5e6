//! The lifted almost (para-)complex structure for bases that carry only a
//! structure field — no metric and no integrability assumed.
//!
//! At (x, ξ) the lifted structure acts on doubled tangent coordinates by
//!
//! ```text
//! (X, Ξ) ↦ (j(x)X, j(x)Ξ + (D_ξ j)(x)X)
//! ```
//!
//! where `D_ξ j` is the directional derivative of the matrix field along the
//! fiber point. Differentiating `j² = -ε·Id` gives `j·D_ξj + D_ξj·j = 0`,
//! which forces the lift to square to `-ε·Id` as well; both facts are
//! auditable numerically. The definition is chart-invariant under induced
//! chart maps `Φ(x, ξ) = (φ(x), dφ(x)ξ)`, which [`chart_invariance_audit`]
//! checks by evaluating both sides of the intertwining identity through jets.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{EngineError, Result};
use crate::geometry::{FieldFn, Geometry, SampleBox};
use crate::jet::Jet;
use crate::jmat::JMat;

/// A chart with a jet-evaluable almost (para-)complex structure field only.
#[derive(Clone)]
pub struct AlmostStructure {
    pub dim: usize,
    pub epsilon: f64,
    pub label: String,
    pub domain: SampleBox,
    pub j_field: FieldFn,
}

impl AlmostStructure {
    pub fn from_geometry(geom: &Geometry) -> Self {
        AlmostStructure {
            dim: geom.dim,
            epsilon: geom.epsilon,
            label: geom.label.clone(),
            domain: geom.domain.clone(),
            j_field: geom.structure.clone(),
        }
    }

    /// A deliberately non-constant test structure: the conjugate of the flat
    /// structure by the shear S(x) = I + [[0, a·x₁], [b·x₂, 0]], which keeps
    /// j² = -ε·Id exactly while making every entry position-dependent.
    pub fn sheared_test_structure(epsilon: f64, a: f64, b: f64) -> Self {
        let j0 = if epsilon > 0.0 {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        } else {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        };
        let j_field: FieldFn = Arc::new(move |p: &[Jet]| {
            let one = p[0].const_like(1.0);
            let s = JMat {
                rows: 2,
                cols: 2,
                a: vec![one.clone(), p[0].scale(a), p[1].scale(b), one],
            };
            let sinv = s.inverse().expect("shear is invertible on the chart box");
            s.matmul(&JMat::constant(&p[0], &j0)).matmul(&sinv)
        });
        AlmostStructure {
            dim: 2,
            epsilon,
            label: format!("sheared_structure(eps={epsilon},{a},{b})"),
            domain: SampleBox::symmetric(2, 0.8),
            j_field,
        }
    }

    pub fn j_values(&self, x: &[f64]) -> DMatrix<f64> {
        (self.j_field)(&Jet::seed_point_unchecked(x, 1)).values()
    }

    /// Directional derivative (D_ξ j)(x) of the structure field.
    pub fn directional_derivative(&self, x: &[f64], xi: &[f64]) -> DMatrix<f64> {
        let seeds = Jet::seed_point_unchecked(x, 1);
        let j = (self.j_field)(&seeds);
        let n = self.dim;
        DMatrix::from_fn(n, n, |a, b| {
            (0..n).map(|k| xi[k] * j.at(a, b).derivative(k).value()).sum()
        })
    }

    /// Applies the lifted structure to a doubled tangent vector at
    /// p = (x, ξ): (X, Ξ) ↦ (jX, jΞ + (D_ξ j)X).
    pub fn apply_lifted(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let (x, xi) = p.split_at(n);
        let j = self.j_values(x);
        let dj = self.directional_derivative(x, xi);
        let (cap_x, cap_xi) = v.split_at(n);
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            out.push((0..n).map(|k| j[(i, k)] * cap_x[k]).sum());
        }
        for i in 0..n {
            let main: f64 = (0..n).map(|k| j[(i, k)] * cap_xi[k]).sum();
            let corr: f64 = (0..n).map(|k| dj[(i, k)] * cap_x[k]).sum();
            out.push(main + corr);
        }
        out
    }

    /// Max |(lifted structure)² v + ε v| over the given vector.
    pub fn square_residual(&self, p: &[f64], v: &[f64]) -> f64 {
        let once = self.apply_lifted(p, v);
        let twice = self.apply_lifted(p, &once);
        twice
            .iter()
            .zip(v)
            .fold(0.0f64, |m, (t, o)| m.max((t + self.epsilon * o).abs()))
    }

    /// Max |j·D_ξj + D_ξj·j| — the anti-commutation forced by j² = -ε·Id.
    pub fn anticommutation_residual(&self, x: &[f64], xi: &[f64]) -> f64 {
        let j = self.j_values(x);
        let dj = self.directional_derivative(x, xi);
        (&j * &dj + &dj * &j).amax()
    }
}

/// A polynomial chart map used for invariance audits, with its jet-evaluable
/// components.
#[derive(Clone)]
pub struct ChartMap {
    pub label: String,
    pub map: Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>,
}

impl ChartMap {
    pub fn identity(dim: usize) -> Self {
        ChartMap {
            label: "identity".into(),
            map: Arc::new(move |p: &[Jet]| p[..dim].to_vec()),
        }
    }

    pub fn linear(mat: DMatrix<f64>) -> Self {
        ChartMap {
            label: "linear".into(),
            map: Arc::new(move |p: &[Jet]| {
                (0..mat.nrows())
                    .map(|i| {
                        let mut acc = p[0].zero_like();
                        for k in 0..mat.ncols() {
                            acc = &acc + &p[k].scale(mat[(i, k)]);
                        }
                        acc
                    })
                    .collect()
            }),
        }
    }

    /// φ(x) = x + strength·(x₁², x₁x₂): a quadratic perturbation of the
    /// identity, invertible near the origin for small strength.
    pub fn quadratic_perturbation(strength: f64) -> Self {
        ChartMap {
            label: format!("quadratic({strength})"),
            map: Arc::new(move |p: &[Jet]| {
                vec![
                    &p[0] + &(&p[0] * &p[0]).scale(strength),
                    &p[1] + &(&p[0] * &p[1]).scale(strength),
                ]
            }),
        }
    }
}

/// Residual of the intertwining identity `dΦ ∘ J̃ = J̃' ∘ dΦ` at (p, v),
/// where Φ(x, ξ) = (φ(x), dφ(x)ξ) and J̃' is built from the pushed-forward
/// structure field. Both sides are evaluated independently through jets.
pub fn chart_invariance_audit(
    alm: &AlmostStructure,
    chart: &ChartMap,
    p: &[f64],
    v: &[f64],
) -> Result<f64> {
    let n = alm.dim;
    let (x, xi) = p.split_at(n);
    let (cap_x, cap_xi) = v.split_at(n);

    let seeds = Jet::seed_point_unchecked(x, 2);
    let phi = (chart.map)(&seeds);
    assert_eq!(phi.len(), n, "chart map must preserve the dimension");

    // dφ, d²φ and det check
    let dphi = DMatrix::from_fn(n, n, |i, k| phi[i].derivative(k).value());
    let det = dphi.determinant();
    if det.abs() < 0.1 {
        return Err(EngineError::SingularChartMap(det));
    }
    let dphi_inv = dphi.clone().try_inverse().expect("determinant bounded away from zero");
    let d2 = |a: &[f64], b: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        acc += phi[i].derivative(k).derivative(l).value() * a[k] * b[l];
                    }
                }
                acc
            })
            .collect()
    };

    // left side: dΦ(J̃(X, Ξ))
    let jv = alm.apply_lifted(p, v);
    let (jx, jxi) = jv.split_at(n);
    let mut lhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        lhs.push((0..n).map(|k| dphi[(i, k)] * jx[k]).sum::<f64>());
    }
    let d2_jx_xi = d2(jx, xi);
    for i in 0..n {
        let lin: f64 = (0..n).map(|k| dphi[(i, k)] * jxi[k]).sum();
        lhs.push(lin + d2_jx_xi[i]);
    }

    // right side: J̃'(y, η)(Y, H) with the pushed-forward structure.
    // j'∘φ is evaluated as a jet matrix so its x-derivatives are exact;
    // derivatives in y come from the chain rule through dφ⁻¹.
    let j_base = (alm.j_field)(&seeds);
    let dphi_jets = JMat::from_fn(n, n, |i, k| phi[i].derivative(k));
    let j_trunc = JMat::from_fn(n, n, |i, k| j_base.at(i, k).truncate(1));
    let jprime_of_x = dphi_jets.matmul(&j_trunc).matmul(&dphi_jets.inverse()?);

    let y: Vec<f64> = (0..n).map(|i| (0..n).map(|k| dphi[(i, k)] * cap_x[k]).sum()).collect();
    let d2_x_xi = d2(cap_x, xi);
    let h_vec: Vec<f64> = (0..n)
        .map(|i| {
            let lin: f64 = (0..n).map(|k| dphi[(i, k)] * cap_xi[k]).sum();
            lin + d2_x_xi[i]
        })
        .collect();
    let eta: Vec<f64> = (0..n).map(|i| (0..n).map(|k| dphi[(i, k)] * xi[k]).sum()).collect();

    let jp = jprime_of_x.values();
    // (D_η j')(y) = Σ_k (dφ⁻¹ η)_k ∂_{x_k}(j'∘φ)
    let eta_back: Vec<f64> =
        (0..n).map(|i| (0..n).map(|k| dphi_inv[(i, k)] * eta[k]).sum()).collect();
    let dj_prime = DMatrix::from_fn(n, n, |a, b| {
        (0..n)
            .map(|k| eta_back[k] * jprime_of_x.at(a, b).derivative(k).value())
            .sum::<f64>()
    });

    let mut rhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        rhs.push((0..n).map(|k| jp[(i, k)] * y[k]).sum::<f64>());
    }
    for i in 0..n {
        let main: f64 = (0..n).map(|k| jp[(i, k)] * h_vec[k]).sum();
        let corr: f64 = (0..n).map(|k| dj_prime[(i, k)] * y[k]).sum();
        rhs.push(main + corr);
    }

    Ok(lhs
        .iter()
        .zip(&rhs)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}
