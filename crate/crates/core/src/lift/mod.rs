//! The induced structure (J̃, g̃, Ω) on the tangent bundle of a Kähler chart.
//!
//! For a base chart of dimension 2n, the lifted chart has coordinates
//! (x, ξ) with ξ the fiber coordinate. The connection splitting sends a
//! doubled tangent vector (X, Ξ) to (Π, K) = (X, Ξ + Γ(x)(X, ξ)); in block
//! form `[Π; K] = S [X; Ξ]` with `S = [[I, 0], [C, I]]`, `C = Γ(·, ξ)`.
//!
//! On split components the three structure fields are
//!
//! ```text
//! J̃ (Π, K)          = (jΠ, jK)
//! Ω((Π₁,K₁),(Π₂,K₂)) = g(Π₁, K₂) − g(K₁, Π₂)
//! g̃(·,·)            = Ω(·, J̃·)
//! ```
//!
//! so the coordinate coefficient matrices are `Sᵀ M S` with
//! `M_Ω = [[0, g], [−g, 0]]` and `M_g̃ = M_Ω · diag(j, j)`. With these signs
//! Ω restricts to `Σᵢ dqᵢ∧dpᵢ`-type canonical forms on the flat planes and
//! pulls back from the cotangent chart through the metric isomorphism; all
//! three fields are exact Taylor expansions of the base metric data.
//!
//! A non-Kähler base is refused: the splitting expression for J̃ needs a
//! parallel structure field. The weaker construction that only needs an
//! almost (para-)complex structure lives in [`almost`].

pub mod almost;
mod audits;

pub use almost::{chart_invariance_audit, AlmostStructure, ChartMap};
pub use audits::{
    compatibility_audit, liouville_pullback_audit, symplectic_identification_audit,
    CompatibilityResiduals, IdentificationCase,
};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{EngineError, Result};
use crate::geometry::{
    christoffel, christoffel_jets, curvature_suite, kahler_audit, FieldFn, Geometry, SampleBox,
};
use crate::jet::Jet;
use crate::jmat::JMat;

/// Fiber sampling half-width: the lifted tensors are linear in the fiber
/// point, so a moderate box exercises everything and scaled fibers give a
/// linearity regression check.
pub const FIBER_HALF_WIDTH: f64 = 2.0;

/// Threshold on the base Kähler audit below which a lift is accepted.
pub const LIFT_KAHLER_GATE: f64 = 1e-7;

/// A base vector field given by jet-evaluable components.
pub type BaseField = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;

/// The constant coordinate field ∂_i.
pub fn coordinate_field(dim: usize, i: usize) -> BaseField {
    Arc::new(move |p: &[Jet]| {
        (0..dim).map(|k| p[0].const_like(if k == i { 1.0 } else { 0.0 })).collect()
    })
}

/// The field x ↦ j(x)·F(x).
pub fn structure_applied(geom: &Geometry, f: &BaseField) -> BaseField {
    let structure = geom.structure.clone();
    let f = f.clone();
    Arc::new(move |p: &[Jet]| structure(p).mul_vec(&f(p)))
}

/// A decomposed doubled tangent vector: pi = Π (base projection),
/// k = K (connection map value).
#[derive(Clone, Debug, PartialEq)]
pub struct SplitVector {
    pub pi: Vec<f64>,
    pub k: Vec<f64>,
}

/// The tangent-bundle chart geometry induced by a Kähler base.
pub struct TangentGeometry {
    pub base: Arc<Geometry>,
    /// 4n.
    pub dim: usize,
    pub domain: SampleBox,
}

impl TangentGeometry {
    /// Builds the lift, refusing bases that fail the Kähler audit at
    /// [`LIFT_KAHLER_GATE`] on a fixed internal sample.
    pub fn lift(base: Arc<Geometry>) -> Result<TangentGeometry> {
        for x in base.sample_points(8, 0x6b61686c) {
            let r = kahler_audit(&base, &x)?;
            if r.max() >= LIFT_KAHLER_GATE {
                return Err(EngineError::NonKahlerBase {
                    label: base.label.clone(),
                    residual: r.max(),
                    point: x,
                });
            }
        }
        let fiber = SampleBox::symmetric(base.dim, FIBER_HALF_WIDTH);
        let domain = base.domain.concat(&fiber);
        Ok(TangentGeometry { dim: 2 * base.dim, base, domain })
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.base.epsilon
    }

    /// The splitting matrix S and base data as jets, one order above the
    /// ambient order so that the Christoffel coefficients keep full accuracy.
    /// Returns (S, g, j) with all entries at the ambient order.
    fn split_data(&self, p: &[Jet]) -> (JMat, JMat, JMat) {
        let n = self.base_dim();
        assert_eq!(p.len(), 2 * n, "lifted chart point has 2 * base dim coordinates");
        let order = p[0].order();
        let values: Vec<f64> = p.iter().map(|j| j.value()).collect();
        // Coefficient fields are Taylor expansions around the evaluation
        // point; reseed one order up to keep Γ exact at the ambient order.
        let seeds = Jet::seed_point_unchecked(&values, order + 1);
        let g_hi = self.base.metric_jets(&seeds[..n]);
        let gamma = christoffel_jets(&g_hi).expect("lift gate guarantees invertible metric");
        let gat = |k: usize, i: usize, jj: usize| &gamma[(k * n + i) * n + jj];
        let xi: Vec<Jet> = seeds[n..].iter().map(|j| j.truncate(order)).collect();
        let c = JMat::from_fn(n, n, |k, i| {
            let mut acc = gat(k, i, 0) * &xi[0];
            for jj in 1..n {
                acc = &acc + &(gat(k, i, jj) * &xi[jj]);
            }
            acc
        });
        let zero = c.a[0].zero_like();
        let one = c.a[0].const_like(1.0);
        let s = JMat::from_fn(2 * n, 2 * n, |i, j| {
            if i < n {
                if i == j { one.clone() } else { zero.clone() }
            } else if j >= n {
                if i == j { one.clone() } else { zero.clone() }
            } else {
                c.at(i - n, j).clone()
            }
        });
        let g = g_hi.truncate(order);
        let j = self.base.structure_jets(&seeds[..n]).truncate(order);
        (s, g, j)
    }

    /// Coefficient field of g̃ on the lifted chart.
    pub fn metric_jets(&self, p: &[Jet]) -> JMat {
        let n = self.base_dim();
        let (s, g, j) = self.split_data(p);
        let gj = g.matmul(&j);
        let zero = gj.a[0].zero_like();
        let m = JMat::from_fn(2 * n, 2 * n, |i, jj| match (i < n, jj < n) {
            (true, false) => gj.at(i, jj - n).clone(),
            (false, true) => gj.at(i - n, jj).scale(-1.0),
            _ => zero.clone(),
        });
        s.transpose().matmul(&m).matmul(&s)
    }

    /// Coefficient field of Ω on the lifted chart.
    pub fn omega_jets(&self, p: &[Jet]) -> JMat {
        let n = self.base_dim();
        let (s, g, _) = self.split_data(p);
        let zero = g.a[0].zero_like();
        let m = JMat::from_fn(2 * n, 2 * n, |i, jj| match (i < n, jj < n) {
            (true, false) => g.at(i, jj - n).clone(),
            (false, true) => g.at(i - n, jj).scale(-1.0),
            _ => zero.clone(),
        });
        s.transpose().matmul(&m).matmul(&s)
    }

    /// Coefficient field of J̃ on the lifted chart: blocks
    /// `[[j, 0], [jC − Cj, j]]`, which is the splitting conjugation of
    /// diag(j, j) and coincides with the almost-structure formula because
    /// ∂j = jΓ − Γj for a parallel structure.
    pub fn structure_jets(&self, p: &[Jet]) -> JMat {
        let n = self.base_dim();
        let (s, _, j) = self.split_data(p);
        let c = JMat::from_fn(n, n, |i, jj| s.at(n + i, jj).clone());
        let lower = j.matmul(&c).sub(&c.matmul(&j));
        let zero = j.a[0].zero_like();
        JMat::from_fn(2 * n, 2 * n, |i, jj| match (i < n, jj < n) {
            (true, true) => j.at(i, jj).clone(),
            (false, false) => j.at(i - n, jj - n).clone(),
            (false, true) => lower.at(i - n, jj).clone(),
            (true, false) => zero.clone(),
        })
    }

    pub fn metric_values(&self, p: &[f64]) -> DMatrix<f64> {
        self.metric_jets(&Jet::seed_point_unchecked(p, 1)).values()
    }

    pub fn omega_values(&self, p: &[f64]) -> DMatrix<f64> {
        self.omega_jets(&Jet::seed_point_unchecked(p, 1)).values()
    }

    pub fn structure_values(&self, p: &[f64]) -> DMatrix<f64> {
        self.structure_jets(&Jet::seed_point_unchecked(p, 1)).values()
    }

    /// Signature of g̃ at a point as an exact eigenvalue sign count.
    pub fn signature(&self, p: &[f64]) -> (usize, usize) {
        let eig = self.metric_values(p).symmetric_eigen().eigenvalues;
        (
            eig.iter().filter(|&&e| e > 0.0).count(),
            eig.iter().filter(|&&e| e < 0.0).count(),
        )
    }

    /// Splits a doubled tangent vector at p = (x, ξ):
    /// Π = X, K = Ξ + Γ(x)(X, ξ).
    pub fn split(&self, p: &[f64], v: &[f64]) -> Result<SplitVector> {
        let n = self.base_dim();
        let gamma = christoffel(&self.base, &p[..n])?;
        let pi = v[..n].to_vec();
        let mut k = v[n..].to_vec();
        for (kk, kv) in k.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    *kv += gamma.get(&[kk, i, j]) * v[i] * p[n + j];
                }
            }
        }
        Ok(SplitVector { pi, k })
    }

    /// Inverse of [`split`]: reassembles coordinate components.
    pub fn assemble(&self, p: &[f64], sv: &SplitVector) -> Result<Vec<f64>> {
        let n = self.base_dim();
        let gamma = christoffel(&self.base, &p[..n])?;
        let mut out = sv.pi.clone();
        out.extend_from_slice(&sv.k);
        for kk in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[n + kk] -= gamma.get(&[kk, i, j]) * sv.pi[i] * p[n + j];
                }
            }
        }
        Ok(out)
    }

    /// Horizontal lift of a base vector: coordinate components
    /// (X, −Γ(x)(X, ξ)), the unique vector with split (X, 0).
    pub fn horizontal_lift(&self, p: &[f64], x2n: &[f64]) -> Result<Vec<f64>> {
        self.assemble(p, &SplitVector { pi: x2n.to_vec(), k: vec![0.0; self.base_dim()] })
    }

    /// Vertical lift of a base vector: coordinate components (0, X).
    pub fn vertical_lift(&self, _p: &[f64], x2n: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.base_dim()];
        out.extend_from_slice(x2n);
        out
    }

    /// Applies J̃ to a coordinate vector at p.
    pub fn apply_structure(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let jt = self.structure_values(p);
        (0..self.dim).map(|i| (0..self.dim).map(|k| jt[(i, k)] * v[k]).sum()).collect()
    }

    /// Evaluates the lifted field of a projectable pair Ȳ = Y₁ʰ + Y₂ᵛ as
    /// coordinate component jets on the lifted chart.
    pub fn projectable_field_jets(&self, p: &[Jet], y1: &BaseField, y2: &BaseField) -> Vec<Jet> {
        let n = self.base_dim();
        let (s, _, _) = self.split_data(p);
        let order = p[0].order();
        let values: Vec<f64> = p.iter().map(|j| j.value()).collect();
        let seeds = Jet::seed_point_unchecked(&values, order + 1);
        let f1: Vec<Jet> = y1(&seeds[..n]).iter().map(|j| j.truncate(order)).collect();
        let f2: Vec<Jet> = y2(&seeds[..n]).iter().map(|j| j.truncate(order)).collect();
        // vertical component: Y₂ − C Y₁
        let mut out = f1.clone();
        for k in 0..n {
            let mut acc = f2[k].clone();
            for i in 0..n {
                acc = &acc - &(s.at(n + k, i) * &f1[i]);
            }
            out.push(acc);
        }
        out
    }

    /// Wraps the lift as an ordinary chart geometry of dimension 4n, so the
    /// whole intrinsic machinery (curvature suite, audits, frames) applies
    /// to g̃ directly. This direct-chart route is the independent oracle for
    /// every lifted-tensor formula.
    pub fn as_geometry(self: &Arc<Self>) -> Geometry {
        let tg = self.clone();
        let metric: FieldFn = Arc::new(move |p: &[Jet]| tg.metric_jets(p));
        let tg = self.clone();
        let structure: FieldFn = Arc::new(move |p: &[Jet]| tg.structure_jets(p));
        Geometry {
            dim: self.dim,
            epsilon: self.epsilon(),
            label: format!("lift({})", self.base.label),
            domain: self.domain.clone(),
            metric,
            structure,
        }
    }
}

/// Residuals of the three bracket identities for lifted fields at a point:
/// `[Xᵛ,Yᵛ] = 0`, `[Xʰ,Yᵛ] = (∇_X Y)ᵛ`, and
/// `split([Xʰ,Yʰ]) = ([X,Y], −R(X,Y)ξ)`.
#[derive(Clone, Debug)]
pub struct BracketResiduals {
    pub vertical_vertical: f64,
    pub horizontal_vertical: f64,
    pub horizontal_pair_base: f64,
    pub horizontal_pair_fiber: f64,
}

impl BracketResiduals {
    pub fn max(&self) -> f64 {
        self.vertical_vertical
            .max(self.horizontal_vertical)
            .max(self.horizontal_pair_base)
            .max(self.horizontal_pair_fiber)
    }
}

/// Coordinate Lie bracket of two jet-valued vector fields at the basepoint.
fn lie_bracket_values(a: &[Jet], b: &[Jet]) -> Vec<f64> {
    let dim = a.len();
    (0..dim)
        .map(|mu| {
            let mut acc = 0.0;
            for nu in 0..dim {
                acc += a[nu].value() * b[mu].derivative(nu).value();
                acc -= b[nu].value() * a[mu].derivative(nu).value();
            }
            acc
        })
        .collect()
}

/// Base covariant derivative (∇_X Y)(x) for jet-evaluable fields.
pub fn base_covariant_derivative(
    geom: &Geometry,
    x_field: &BaseField,
    y_field: &BaseField,
    x: &[f64],
) -> Result<Vec<f64>> {
    let n = geom.dim;
    let seeds = Jet::seed_point_unchecked(x, 2);
    let xv: Vec<f64> = x_field(&seeds).iter().map(|j| j.value()).collect();
    let yj = y_field(&seeds);
    let gamma = christoffel(geom, x)?;
    Ok((0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                acc += xv[i] * yj[k].derivative(i).value();
                for j in 0..n {
                    acc += gamma.get(&[k, i, j]) * xv[i] * yj[j].value();
                }
            }
            acc
        })
        .collect())
}

/// Audits the lifted-field bracket identities at a point of the lifted chart.
pub fn bracket_audit(
    tg: &TangentGeometry,
    x_field: &BaseField,
    y_field: &BaseField,
    p: &[f64],
) -> Result<BracketResiduals> {
    let n = tg.base_dim();
    let zero = coordinate_zero(n);
    let p_jets = Jet::seed_point_unchecked(p, 1);

    let xh = tg.projectable_field_jets(&p_jets, x_field, &zero);
    let yh = tg.projectable_field_jets(&p_jets, y_field, &zero);
    let xv = tg.projectable_field_jets(&p_jets, &zero, x_field);
    let yv = tg.projectable_field_jets(&p_jets, &zero, y_field);

    // [Xᵛ, Yᵛ] = 0
    let vv = lie_bracket_values(&xv, &yv);
    let r_vv = vv.iter().fold(0.0f64, |m, t| m.max(t.abs()));

    // [Xʰ, Yᵛ] = (∇_X Y)ᵛ
    let hv = lie_bracket_values(&xh, &yv);
    let nxy = base_covariant_derivative(&tg.base, x_field, y_field, &p[..n])?;
    let mut r_hv: f64 = 0.0;
    for i in 0..n {
        r_hv = r_hv.max(hv[i].abs());
        r_hv = r_hv.max((hv[n + i] - nxy[i]).abs());
    }

    // split([Xʰ, Yʰ]) = ([X, Y], −R(X, Y)ξ)
    let hh = lie_bracket_values(&xh, &yh);
    let sv = tg.split(p, &hh)?;
    let seeds = Jet::seed_point_unchecked(&p[..n], 1);
    let xvals: Vec<f64> = x_field(&seeds).iter().map(|j| j.value()).collect();
    let yvals: Vec<f64> = y_field(&seeds).iter().map(|j| j.value()).collect();
    let base_bracket = {
        let s2 = Jet::seed_point_unchecked(&p[..n], 1);
        lie_bracket_values(&x_field(&s2), &y_field(&s2))
    };
    let cs = curvature_suite(&tg.base, &p[..n], 2)?;
    let rxyv = cs.r_vec(&xvals, &yvals, &p[n..]);
    let mut r_hh_base: f64 = 0.0;
    let mut r_hh_fiber: f64 = 0.0;
    for i in 0..n {
        r_hh_base = r_hh_base.max((sv.pi[i] - base_bracket[i]).abs());
        r_hh_fiber = r_hh_fiber.max((sv.k[i] + rxyv[i]).abs());
    }

    Ok(BracketResiduals {
        vertical_vertical: r_vv,
        horizontal_vertical: r_hv,
        horizontal_pair_base: r_hh_base,
        horizontal_pair_fiber: r_hh_fiber,
    })
}

fn coordinate_zero(dim: usize) -> BaseField {
    Arc::new(move |p: &[Jet]| (0..dim).map(|_| p[0].zero_like()).collect())
}

/// Max |g̃ − Ω(·, J̃·)| at a point (coefficient matrices).
pub fn metric_from_omega_residual(tg: &TangentGeometry, p: &[f64]) -> f64 {
    let gt = tg.metric_values(p);
    let om = tg.omega_values(p);
    let jt = tg.structure_values(p);
    ((&om * &jt) - gt).amax()
}
