//! Symplectic audits of the lifted structure: the cotangent pullback route
//! to Ω, the flat-plane coordinate identifications, and the compatibility
//! identity Ω(J̃·, J̃·) = ε·Ω together with closedness of Ω.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::jet::Jet;

use super::TangentGeometry;

/// Which flat identification to audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentificationCase {
    /// Flat complex plane: chart (q, p) ↦ (x₁, y₁, x₂, y₂) with
    /// x₁ = (√2/2)(p₁ − q₂), y₁ = (√2/2)(p₂ + q₁),
    /// x₂ = (√2/2)(p₁ + q₂), y₂ = (√2/2)(p₂ − q₁),
    /// target form −dx₁∧dy₁ + dx₂∧dy₂.
    Complex,
    /// Flat para-complex plane: chart (q, p) ↦ (u₁, v₁, u₂, v₂) with
    /// u₁ = (√2/2)(p₁ − q₂), v₁ = (√2/2)(p₂ − q₁),
    /// u₂ = (√2/2)(p₂ + q₁), v₂ = (√2/2)(p₁ + q₂),
    /// target form du₁∧dv₁ + du₂∧dv₂.
    Para,
}

/// Antisymmetric matrix of `Σ s_i · da_i ∧ db_i` given (a_i, b_i, s_i)
/// index/sign triples, in the convention (da∧db)(u, v) = a(u)b(v) − a(v)b(u).
fn wedge_form(dim: usize, terms: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &(a, b, s) in terms {
        m[(a, b)] += s;
        m[(b, a)] -= s;
    }
    m
}

/// Pulls the named flat model's symplectic form back through the stated
/// real-linear coordinate change and returns the max-norm difference from Ω
/// of the lifted flat plane, plus the same residual with the √2/2 factor
/// dropped (a deliberate scaling fault, expected to be order one).
pub fn symplectic_identification_audit(
    tg: &TangentGeometry,
    case: IdentificationCase,
) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // rows: target coordinates as linear combinations of (q₁, q₂, p₁, p₂)
    let (l, target) = match case {
        IdentificationCase::Complex => (
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    0.0, -h, h, 0.0, // x₁
                    h, 0.0, 0.0, h, // y₁
                    0.0, h, h, 0.0, // x₂
                    -h, 0.0, 0.0, h, // y₂
                ],
            ),
            wedge_form(4, &[(0, 1, -1.0), (2, 3, 1.0)]),
        ),
        IdentificationCase::Para => (
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    0.0, -h, h, 0.0, // u₁
                    -h, 0.0, 0.0, h, // v₁
                    h, 0.0, 0.0, h, // u₂
                    0.0, h, h, 0.0, // v₂
                ],
            ),
            wedge_form(4, &[(0, 1, 1.0), (2, 3, 1.0)]),
        ),
    };
    let omega = tg.omega_values(&[0.0, 0.0, 0.0, 0.0]);
    let pulled = l.transpose() * &target * &l;
    let residual = (&pulled - &omega).amax();
    let faulted = (l.transpose() * &target * &l).scale(2.0);
    let fault_residual = (faulted - omega).amax();
    (residual, fault_residual)
}

/// Pulls the canonical cotangent form Σ dq_i∧dp_i back through the metric
/// isomorphism ι(x, ξ) = (x, g(x)ξ) and returns the max-norm difference
/// from the lifted chart's Ω at p.
pub fn liouville_pullback_audit(tg: &TangentGeometry, p: &[f64]) -> Result<f64> {
    let n = tg.base_dim();
    let (x, xi) = p.split_at(n);
    let seeds = Jet::seed_point_unchecked(x, 1);
    let g = tg.base.metric_jets(&seeds);

    // dι = [[I, 0], [(∂_k g · ξ), g]]
    let mut diota = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        diota[(i, i)] = 1.0;
        for k in 0..n {
            diota[(n + i, n + k)] = g.at(i, k).value();
            let mut acc = 0.0;
            for j in 0..n {
                acc += g.at(i, j).derivative(k).value() * xi[j];
            }
            diota[(n + i, k)] = acc;
        }
    }
    let canonical = wedge_form(
        2 * n,
        &(0..n).map(|i| (i, n + i, 1.0)).collect::<Vec<_>>(),
    );
    let pulled = diota.transpose() * canonical * diota;
    Ok((pulled - tg.omega_values(p)).amax())
}

/// Residuals of the compatibility identity and of closedness of Ω.
#[derive(Clone, Debug)]
pub struct CompatibilityResiduals {
    /// max |J̃ᵀ Ω J̃ − ε Ω|
    pub compatibility: f64,
    /// max |dΩ| from jets of the Ω coefficient field
    pub d_omega: f64,
}

impl CompatibilityResiduals {
    pub fn max(&self) -> f64 {
        self.compatibility.max(self.d_omega)
    }
}

/// Audits Ω(J̃·, J̃·) = ε·Ω and dΩ = 0 at a lifted chart point.
pub fn compatibility_audit(tg: &TangentGeometry, p: &[f64]) -> CompatibilityResiduals {
    let dim = tg.dim;
    let seeds = Jet::seed_point_unchecked(p, 1);
    let omega_jets = tg.omega_jets(&seeds);
    let omega = omega_jets.values();
    let jt = tg.structure_values(p);
    let compatibility = (jt.transpose() * &omega * &jt - omega.scale(tg.epsilon())).amax();

    let mut d_omega: f64 = 0.0;
    for a in 0..dim {
        for b in (a + 1)..dim {
            for c in (b + 1)..dim {
                let d = omega_jets.at(b, c).derivative(a).value()
                    - omega_jets.at(a, c).derivative(b).value()
                    + omega_jets.at(a, b).derivative(c).value();
                d_omega = d_omega.max(d.abs());
            }
        }
    }
    CompatibilityResiduals { compatibility, d_omega }
}
