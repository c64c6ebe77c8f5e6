//! Bivector algebra on four-dimensional neutral Kähler charts: adapted
//! frames, the induced metric and Hodge star on Λ², the 6×6 curvature
//! operator, Weyl blocks in the Hodge eigenbasis, and the duality audit
//! (W⁻ = 0 ⇔ Scal = 0).
//!
//! Frame conventions: (e₁, e₁', e₂, e₂') with e₁' = j·e₁, e₂' = j·e₂ and
//! norms (−1, −1, +1, +1) in the pseudo case, (+1, −1, +1, −1) in the para
//! case; the frame's own wedge e₁∧e₁'∧e₂∧e₂' defines the positive
//! orientation (determined by ω up to a fixed sign, so frames at different
//! points orient consistently). The Λ² basis is
//! B = (e₁∧e₁', e₁∧e₂, e₁∧e₂', e₁'∧e₂, e₁'∧e₂', e₂∧e₂') with induced
//! metric g(e_a∧e_b) = g(e_a)·g(e_b) of signature (2, 4).
//!
//! Curvature enters in the operator orientation `Rm(X,Y,Z,W) = g(R(X,Y)W,Z)`
//! (positive plane diagonals on the round sphere), the negative of the
//! curvature suite's (0,4) array; the Weyl operator is
//! `W = Rm − ½·Ric⊼g + (Scal/12)·g⊼g` in that orientation. Block values in
//! the E^± bases are reported on the unnormalized eigenvectors
//! (e.g. e₁∧e₁' ± e₂∧e₂'), i.e. at twice the orthonormal-basis values.

use nalgebra::DMatrix;

use crate::error::{EngineError, Result};
use crate::geometry::{curvature_suite, CurvatureSuite, Geometry};

/// The six index pairs of the bivector basis, lexicographic in the frame
/// order (e₁, e₁', e₂, e₂').
pub const BIVECTOR_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureCase {
    Pseudo,
    Para,
}

impl StructureCase {
    pub fn from_epsilon(eps: f64) -> Self {
        if eps > 0.0 {
            StructureCase::Pseudo
        } else {
            StructureCase::Para
        }
    }

    /// Required frame norms (g(e₁), g(e₁'), g(e₂), g(e₂')).
    pub fn frame_signs(self) -> [f64; 4] {
        match self {
            StructureCase::Pseudo => [-1.0, -1.0, 1.0, 1.0],
            StructureCase::Para => [1.0, -1.0, 1.0, -1.0],
        }
    }

    /// Scal-multiple pattern of the W⁻ block in the unnormalized E⁻ basis.
    pub fn w_minus_pattern(self) -> [f64; 3] {
        match self {
            StructureCase::Pseudo => [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            StructureCase::Para => [-1.0 / 3.0, -1.0 / 6.0, 1.0 / 6.0],
        }
    }
}

/// A j-adapted orthonormal frame at a point of a 4-dimensional neutral chart.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub vectors: [Vec<f64>; 4],
    pub case: StructureCase,
    pub signs: [f64; 4],
    /// Max deviation from the required Gram matrix and j-adaptedness.
    pub residual: f64,
}

fn inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += g[(i, j)] * a[i] * b[j];
        }
    }
    acc
}

fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..4).map(|i| (0..4).map(|k| m[(i, k)] * v[k]).sum()).collect()
}

/// Deterministic pivot candidates: coordinate directions, their pairwise
/// sums and differences, and the eigenvectors of the metric. The
/// eigenvectors guarantee candidates of both causal characters even when
/// whole coordinate planes are null (which happens on lifted charts); all
/// candidates are normalized to unit Euclidean length so the pivot choice
/// maximizes the causal character |g(v,v)|, not the raw size.
fn pivot_candidates(g: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for i in 0..4 {
        let mut v = vec![0.0; 4];
        v[i] = 1.0;
        cands.push(v);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; 4];
                v[i] = 1.0;
                v[j] = s;
                cands.push(v);
            }
        }
    }
    let eig = g.clone().symmetric_eigen();
    for c in 0..4 {
        cands.push(eig.eigenvectors.column(c).iter().copied().collect());
    }
    for v in &mut cands {
        let len = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        for t in v.iter_mut() {
            *t /= len;
        }
    }
    cands
}

/// Builds the case-appropriate adapted frame at a point by signature-pivoted
/// Gram-Schmidt followed by j-completion.
pub fn adapted_frame(geom4: &Geometry, x: &[f64]) -> Result<AdaptedFrame> {
    assert_eq!(geom4.dim, 4, "adapted frames are a dimension-four construction");
    let g = geom4.metric_values(x);
    let j = geom4.structure_values(x);
    let case = StructureCase::from_epsilon(geom4.epsilon);
    let signs = case.frame_signs();

    // e₁ of the required causal character
    let candidates = pivot_candidates(&g);
    let want_first = signs[0];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for v in &candidates {
        let n = inner(&g, v, v);
        if n * want_first > 1e-9 && best.as_ref().map_or(true, |(b, _)| n.abs() > *b) {
            best = Some((n.abs(), v.clone()));
        }
    }
    let (norm1, v1) = best.ok_or_else(|| EngineError::FrameNotFound { point: x.to_vec() })?;
    let e1: Vec<f64> = v1.iter().map(|t| t / norm1.sqrt()).collect();
    let e1p = apply(&j, &e1);

    // second pivot, orthogonalized against span(e₁, e₁')
    let mut best2: Option<(f64, Vec<f64>)> = None;
    for v in &candidates {
        let mut w = v.clone();
        let c1 = inner(&g, &w, &e1) / signs[0];
        let c2 = inner(&g, &w, &e1p) / signs[1];
        for i in 0..4 {
            w[i] -= c1 * e1[i] + c2 * e1p[i];
        }
        let euclid = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if euclid < 1e-9 {
            continue;
        }
        for t in w.iter_mut() {
            *t /= euclid;
        }
        let n = inner(&g, &w, &w);
        if n * signs[2] > 1e-9 && best2.as_ref().map_or(true, |(b, _)| n.abs() > *b) {
            best2 = Some((n.abs(), w));
        }
    }
    let (norm2, v2) = best2.ok_or_else(|| EngineError::FrameNotFound { point: x.to_vec() })?;
    let mut e2: Vec<f64> = v2.iter().map(|t| t / norm2.sqrt()).collect();
    // one re-orthogonalization pass to shed rounding from the pivot search
    let c1 = inner(&g, &e2, &e1) / signs[0];
    let c2 = inner(&g, &e2, &e1p) / signs[1];
    for i in 0..4 {
        e2[i] -= c1 * e1[i] + c2 * e1p[i];
    }
    let n2 = inner(&g, &e2, &e2);
    for t in e2.iter_mut() {
        *t /= n2.abs().sqrt();
    }
    let e2p = apply(&j, &e2);

    let vectors = [e1, e1p, e2, e2p];
    let mut residual: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { signs[a] } else { 0.0 };
            residual = residual.max((inner(&g, &vectors[a], &vectors[b]) - want).abs());
        }
    }
    for (adapted, source) in [(1usize, 0usize), (3, 2)] {
        let jv = apply(&j, &vectors[source]);
        for i in 0..4 {
            residual = residual.max((vectors[adapted][i] - jv[i]).abs());
        }
    }
    if residual > 1e-8 {
        return Err(EngineError::FrameNotFound { point: x.to_vec() });
    }
    Ok(AdaptedFrame { vectors, case, signs, residual })
}

/// Induced metric, Hodge star, and eigenbases on Λ² for an adapted frame.
#[derive(Clone, Debug)]
pub struct BivectorOps {
    /// Diagonal of the induced metric on the basis B.
    pub lambda_metric: [f64; 6],
    /// Hodge star as a 6×6 matrix on B.
    pub star6: DMatrix<f64>,
    /// Unnormalized self-dual eigenvectors (columns, in B components).
    pub eplus: DMatrix<f64>,
    /// Unnormalized anti-self-dual eigenvectors.
    pub eminus: DMatrix<f64>,
}

fn permutation_sign(p: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Builds the Λ² data; `flip_orientation` negates the volume form, which
/// exchanges the two eigenspaces.
pub fn bivector_ops(frame: &AdaptedFrame, flip_orientation: bool) -> Result<BivectorOps> {
    let mut lambda = [0.0; 6];
    for (idx, &(a, b)) in BIVECTOR_PAIRS.iter().enumerate() {
        lambda[idx] = frame.signs[a] * frame.signs[b];
    }

    // wedge pairing: coefficient of the frame volume in B_I ∧ B_J
    let orient = if flip_orientation { -1.0 } else { 1.0 };
    let mut pairing = DMatrix::zeros(6, 6);
    for (i, &(a, b)) in BIVECTOR_PAIRS.iter().enumerate() {
        for (jx, &(c, d)) in BIVECTOR_PAIRS.iter().enumerate() {
            let mut seen = [false; 4];
            for &t in &[a, b, c, d] {
                seen[t] = true;
            }
            if seen == [true; 4] {
                pairing[(i, jx)] = orient * permutation_sign([a, b, c, d]);
            }
        }
    }
    // α ∧ *β = ⟨α, β⟩ vol  ⇔  P · (*β) = Λ β
    let lambda_mat = DMatrix::from_fn(6, 6, |i, j| if i == j { lambda[i] } else { 0.0 });
    let star6 = pairing
        .clone()
        .try_inverse()
        .expect("wedge pairing on complementary pairs is invertible")
        * lambda_mat;

    // star² = Id and Λ-self-adjointness
    let id_residual = (&star6 * &star6 - DMatrix::identity(6, 6)).amax();
    if id_residual > 1e-12 {
        return Err(EngineError::StarEigenCheck(format!(
            "star squared deviates from the identity by {id_residual:e}"
        )));
    }
    let adj = DMatrix::from_fn(6, 6, |i, j| lambda[i] * star6[(i, j)] - lambda[j] * star6[(j, i)]);
    if adj.amax() > 1e-12 {
        return Err(EngineError::StarEigenCheck("star is not metric-self-adjoint".into()));
    }

    // unnormalized eigenvectors per case; columns E₁, E₂, E₃. Negating the
    // volume form negates the star, so the two families trade eigenvalues.
    let combos: [[f64; 2]; 3] = match frame.case {
        StructureCase::Pseudo => [[1.0, 1.0], [1.0, 1.0], [1.0, -1.0]],
        StructureCase::Para => [[1.0, -1.0], [1.0, -1.0], [1.0, -1.0]],
    };
    // partner slots in B: (B₀, B₅), (B₁, B₄), (B₂, B₃)
    let partners = [(0usize, 5usize), (1, 4), (2, 3)];
    let build = |sign_flip: f64| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6, 3);
        for (col, (&(p, q), combo)) in partners.iter().zip(&combos).enumerate() {
            m[(p, col)] = combo[0];
            m[(q, col)] = combo[1] * sign_flip;
        }
        m
    };
    let (eplus, eminus) = if flip_orientation {
        (build(-1.0), build(1.0))
    } else {
        (build(1.0), build(-1.0))
    };

    for (mat, want) in [(&eplus, 1.0), (&eminus, -1.0)] {
        let res = (&star6 * mat - mat.scale(want)).amax();
        if res > 1e-12 {
            return Err(EngineError::StarEigenCheck(format!(
                "eigenvector defect {res:e} for the {:+} eigenspace",
                want
            )));
        }
    }

    Ok(BivectorOps { lambda_metric: lambda, star6, eplus, eminus })
}

/// The curvature operator on Λ² in an adapted frame, in the operator
/// orientation (sphere-positive plane diagonals).
#[derive(Clone, Debug)]
pub struct CurvatureOperator {
    pub matrix6: DMatrix<f64>,
    pub lambda_metric: [f64; 6],
    pub star6: DMatrix<f64>,
    /// Max violation of the case-specific structure symmetries of the table.
    pub symmetry_residual: f64,
    /// |Ric(e₁, e₁')| and |Ric(e₂, e₂')| — both vanish by j-invariance.
    pub ric_cross_residual: f64,
}

/// Rm in the operator orientation on frame vectors a, b, c, d.
fn rm_frame(cs: &CurvatureSuite, f: &AdaptedFrame, a: usize, b: usize, c: usize, d: usize) -> f64 {
    -cs.rm_scalar(&f.vectors[a], &f.vectors[b], &f.vectors[c], &f.vectors[d])
}

pub fn curvature_operator(
    geom4: &Geometry,
    x: &[f64],
    frame: &AdaptedFrame,
) -> Result<CurvatureOperator> {
    let cs = curvature_suite(geom4, x, 2)?;
    let ops = bivector_ops(frame, false)?;
    let mut matrix6 = DMatrix::zeros(6, 6);
    for (i, &(a, b)) in BIVECTOR_PAIRS.iter().enumerate() {
        for (jx, &(c, d)) in BIVECTOR_PAIRS.iter().enumerate() {
            matrix6[(i, jx)] = rm_frame(&cs, frame, a, b, c, d);
        }
    }

    // case-specific symmetries from the structure invariance of Rm
    // (indices into the frame: 0 = e₁, 1 = e₁', 2 = e₂, 3 = e₂')
    let r = |a: usize, b: usize, c: usize, d: usize| rm_frame(&cs, frame, a, b, c, d);
    let checks: Vec<(f64, f64)> = match frame.case {
        StructureCase::Pseudo => vec![
            (r(0, 1, 1, 2), -r(0, 1, 0, 3)),
            (r(0, 1, 1, 3), r(0, 1, 0, 2)),
            (r(0, 2, 1, 2), -r(0, 2, 0, 3)),
            (r(0, 2, 1, 3), r(0, 2, 0, 2)),
            (r(0, 3, 1, 3), r(0, 2, 0, 3)),
            (r(1, 2, 1, 2), r(0, 3, 0, 3)),
            (r(1, 2, 1, 3), -r(0, 2, 0, 3)),
            (r(1, 2, 2, 3), -r(0, 3, 2, 3)),
            (r(1, 3, 1, 3), r(0, 2, 0, 2)),
            (r(1, 3, 2, 3), r(0, 2, 2, 3)),
        ],
        StructureCase::Para => vec![
            (r(0, 1, 1, 2), -r(0, 1, 0, 3)),
            (r(0, 1, 1, 3), -r(0, 1, 0, 2)),
            (r(0, 2, 1, 2), -r(0, 2, 0, 3)),
            (r(0, 2, 1, 3), -r(0, 2, 0, 2)),
            (r(0, 3, 1, 2), -r(0, 3, 0, 3)),
            (r(1, 2, 1, 2), r(0, 3, 0, 3)),
            (r(1, 2, 1, 3), r(0, 2, 0, 3)),
            (r(1, 2, 2, 3), -r(0, 3, 2, 3)),
            (r(1, 3, 1, 3), r(0, 2, 0, 2)),
            (r(1, 3, 2, 3), -r(0, 2, 2, 3)),
        ],
    };
    let mut symmetry_residual: f64 = 0.0;
    for (lhs, rhs) in checks {
        symmetry_residual = symmetry_residual.max((lhs - rhs).abs());
    }

    // Ric(e₁, e₁') = Ric(e₂, e₂') = 0 by the structure invariance of Ric
    let ric_frame = |a: usize, b: usize| -> f64 {
        (0..4)
            .map(|i| frame.signs[i] * rm_frame(&cs, frame, a, i, b, i))
            .sum()
    };
    let ric_cross_residual = ric_frame(0, 1).abs().max(ric_frame(2, 3).abs());

    Ok(CurvatureOperator {
        matrix6,
        lambda_metric: ops.lambda_metric,
        star6: ops.star6,
        symmetry_residual,
        ric_cross_residual,
    })
}

/// Weyl blocks in the Hodge eigenbases (unnormalized eigenvectors).
#[derive(Clone, Debug)]
pub struct WeylBlocks {
    pub w_plus: DMatrix<f64>,
    pub w_minus: DMatrix<f64>,
    pub offdiag: DMatrix<f64>,
    pub scal: f64,
    /// Trace of each block against the restricted Λ²-metric.
    pub trace_plus: f64,
    pub trace_minus: f64,
}

impl WeylBlocks {
    /// Max deviation of W⁻ from Scal times the case pattern.
    pub fn w_minus_pattern_residual(&self, case: StructureCase) -> f64 {
        let pat = case.w_minus_pattern();
        let mut res: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { self.scal * pat[i] } else { 0.0 };
                res = res.max((self.w_minus[(i, j)] - want).abs());
            }
        }
        res
    }

    /// Max deviation of W⁺ from Scal times the case pattern. W⁻ always takes
    /// that multiple; W⁺ is not pinned by the scalar curvature, and this
    /// residual is the witness. Surface products are degenerate witnesses
    /// (their blockwise curvature forces W⁺ onto the pattern too); lifted
    /// bundles over nonconstant-curvature bases separate the blocks.
    pub fn w_plus_scal_pattern_residual(&self, case: StructureCase) -> f64 {
        let pat = case.w_minus_pattern();
        let mut res: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { self.scal * pat[i] } else { 0.0 };
                res = res.max((self.w_plus[(i, j)] - want).abs());
            }
        }
        res
    }
}

pub fn weyl_blocks(geom4: &Geometry, x: &[f64]) -> Result<WeylBlocks> {
    weyl_blocks_oriented(geom4, x, false)
}

pub fn weyl_blocks_oriented(
    geom4: &Geometry,
    x: &[f64],
    flip_orientation: bool,
) -> Result<WeylBlocks> {
    let frame = adapted_frame(geom4, x)?;
    let ops = bivector_ops(&frame, flip_orientation)?;
    let cs = curvature_suite(geom4, x, 2)?;

    // W = Rm − ½ Ric⊼g + (Scal/12) g⊼g on frame vectors, operator orientation
    let ric = |a: usize, b: usize| cs.ric_bilinear(&frame.vectors[a], &frame.vectors[b]);
    let gf = |a: usize, b: usize| if a == b { frame.signs[a] } else { 0.0 };
    let w_abcd = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        let rm = rm_frame(&cs, &frame, a, b, c, d);
        let kn_ric = ric(a, c) * gf(b, d) + ric(b, d) * gf(a, c)
            - ric(a, d) * gf(b, c)
            - ric(b, c) * gf(a, d);
        let kn_gg = 2.0 * (gf(a, c) * gf(b, d) - gf(a, d) * gf(b, c));
        rm - 0.5 * kn_ric + cs.scal / 12.0 * kn_gg
    };
    let mut w6 = DMatrix::zeros(6, 6);
    for (i, &(a, b)) in BIVECTOR_PAIRS.iter().enumerate() {
        for (jx, &(c, d)) in BIVECTOR_PAIRS.iter().enumerate() {
            w6[(i, jx)] = w_abcd(a, b, c, d);
        }
    }

    let w_plus = ops.eplus.transpose() * &w6 * &ops.eplus;
    let w_minus = ops.eminus.transpose() * &w6 * &ops.eminus;
    let offdiag = ops.eplus.transpose() * &w6 * &ops.eminus;

    // restricted Λ-metric on the eigenbases: η_i = ½ ⟨Ẽ_i, Ẽ_i⟩
    let eta = |evecs: &DMatrix<f64>, i: usize| -> f64 {
        (0..6).map(|k| ops.lambda_metric[k] * evecs[(k, i)] * evecs[(k, i)]).sum::<f64>() / 2.0
    };
    let trace_plus: f64 = (0..3).map(|i| eta(&ops.eplus, i) * w_plus[(i, i)]).sum();
    let trace_minus: f64 = (0..3).map(|i| eta(&ops.eminus, i) * w_minus[(i, i)]).sum();

    Ok(WeylBlocks { w_plus, w_minus, offdiag, scal: cs.scal, trace_plus, trace_minus })
}

/// Aggregated duality verdict over sampled points.
#[derive(Clone, Debug)]
pub struct DualityReport {
    pub max_offdiag: f64,
    pub max_w_minus: f64,
    pub max_w_plus: f64,
    pub max_scal: f64,
    /// W⁻ vanishes iff Scal does (both under threshold or both over).
    pub verdict: bool,
    /// The same verdict with the orientation flipped, i.e. read off W⁺.
    pub verdict_flipped: bool,
}

pub const DUALITY_THRESHOLD: f64 = 1e-7;

/// Runs the W⁻ = 0 ⇔ Scal = 0 audit over the given points.
pub fn duality_audit(geom4: &Geometry, points: &[Vec<f64>]) -> Result<DualityReport> {
    assert!(points.len() >= 8, "duality audit needs at least 8 points");
    let mut max_offdiag: f64 = 0.0;
    let mut max_w_minus: f64 = 0.0;
    let mut max_w_plus: f64 = 0.0;
    let mut max_scal: f64 = 0.0;
    for x in points {
        let wb = weyl_blocks(geom4, x)?;
        max_offdiag = max_offdiag.max(wb.offdiag.amax());
        max_w_minus = max_w_minus.max(wb.w_minus.amax());
        max_w_plus = max_w_plus.max(wb.w_plus.amax());
        max_scal = max_scal.max(wb.scal.abs());
    }
    let verdict = (max_w_minus < DUALITY_THRESHOLD) == (max_scal < DUALITY_THRESHOLD);
    let verdict_flipped = (max_w_plus < DUALITY_THRESHOLD) == (max_scal < DUALITY_THRESHOLD);
    Ok(DualityReport { max_offdiag, max_w_minus, max_w_plus, max_scal, verdict, verdict_flipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catalog, CatalogParams};
    use crate::lift::TangentGeometry;
    use std::sync::Arc;

    fn product(name: &str) -> Geometry {
        catalog(name, &CatalogParams::default()).unwrap()
    }

    #[test]
    fn adapted_frames_satisfy_their_invariants() {
        for name in ["product_flat", "product_spheres", "product_para"] {
            let g = product(name);
            for x in g.sample_points(16, 131) {
                let f = adapted_frame(&g, &x).unwrap();
                assert!(f.residual < 1e-9, "{name}: residual {}", f.residual);
                let want = StructureCase::from_epsilon(g.epsilon);
                assert_eq!(f.case, want);
            }
        }
    }

    #[test]
    fn bivector_metric_matches_the_case_tables() {
        let g = product("product_spheres");
        let x = g.sample_points(1, 5)[0].clone();
        let f = adapted_frame(&g, &x).unwrap();
        let ops = bivector_ops(&f, false).unwrap();
        // pseudo: all −1 except the two structure planes
        assert_eq!(ops.lambda_metric, [1.0, -1.0, -1.0, -1.0, -1.0, 1.0]);

        let gp = product("product_para");
        let xp = gp.sample_points(1, 5)[0].clone();
        let fp = adapted_frame(&gp, &xp).unwrap();
        let opsp = bivector_ops(&fp, false).unwrap();
        assert_eq!(opsp.lambda_metric, [-1.0, 1.0, -1.0, -1.0, 1.0, -1.0]);

        // signature (2, 4) in both cases
        for lm in [ops.lambda_metric, opsp.lambda_metric] {
            assert_eq!(lm.iter().filter(|&&s| s > 0.0).count(), 2);
        }
    }

    #[test]
    fn star_squares_to_identity_and_e2_minus_is_antiselfdual() {
        for name in ["product_flat", "product_spheres", "product_para"] {
            let g = product(name);
            let x = g.sample_points(1, 7)[0].clone();
            let f = adapted_frame(&g, &x).unwrap();
            let ops = bivector_ops(&f, false).unwrap();
            assert!((&ops.star6 * &ops.star6 - DMatrix::identity(6, 6)).amax() < 1e-12);
            let e2m = ops.eminus.column(1);
            let starred = &ops.star6 * e2m;
            assert!((starred + e2m).amax() < 1e-12, "{name}: *E₂⁻ = −E₂⁻");
        }
    }

    #[test]
    fn orientation_flip_swaps_the_eigenspaces() {
        let g = product("product_spheres");
        let x = g.sample_points(1, 9)[0].clone();
        let f = adapted_frame(&g, &x).unwrap();
        let ops = bivector_ops(&f, false).unwrap();
        let flipped = bivector_ops(&f, true).unwrap();
        assert_eq!(ops.eplus, flipped.eminus);
        assert_eq!(ops.eminus, flipped.eplus);
    }

    #[test]
    fn curvature_operator_symmetries_hold() {
        for name in ["product_spheres", "product_para"] {
            let g = product(name);
            for x in g.sample_points(8, 11) {
                let f = adapted_frame(&g, &x).unwrap();
                let op = curvature_operator(&g, &x, &f).unwrap();
                assert!(
                    op.symmetry_residual < 1e-8,
                    "{name}: symmetry residual {}",
                    op.symmetry_residual
                );
                assert!(op.ric_cross_residual < 1e-8, "{name}: {}", op.ric_cross_residual);
                assert!((&op.matrix6 - op.matrix6.transpose()).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_product_has_zero_operator() {
        let g = product("product_flat");
        let x = g.sample_points(1, 13)[0].clone();
        let f = adapted_frame(&g, &x).unwrap();
        let op = curvature_operator(&g, &x, &f).unwrap();
        assert!(op.matrix6.amax() < 1e-12);
    }

    #[test]
    fn weyl_blocks_are_block_diagonal_and_traceless() {
        for name in ["product_spheres", "product_para"] {
            let g = product(name);
            for x in g.sample_points(8, 17) {
                let wb = weyl_blocks(&g, &x).unwrap();
                assert!(wb.offdiag.amax() < 1e-8, "{name}: offdiag {}", wb.offdiag.amax());
                assert!(wb.trace_plus.abs() < 1e-8, "{name}: tr W⁺ {}", wb.trace_plus);
                assert!(wb.trace_minus.abs() < 1e-8, "{name}: tr W⁻ {}", wb.trace_minus);
            }
        }
    }

    #[test]
    fn w_minus_takes_the_scal_pattern() {
        // pseudo product: Scal = 3/2 so W⁻ = diag(1/2, 1/4, 1/4)
        let g = product("product_spheres");
        for x in g.sample_points(8, 19) {
            let wb = weyl_blocks(&g, &x).unwrap();
            assert!((wb.scal - 1.5).abs() < 1e-8);
            assert!(
                wb.w_minus_pattern_residual(StructureCase::Pseudo) < 1e-7,
                "W⁻ = {:?}",
                wb.w_minus
            );
            assert!((wb.w_minus[(0, 0)] - 0.5).abs() < 1e-8);
            assert!((wb.w_minus[(1, 1)] - 0.25).abs() < 1e-8);
            assert!((wb.w_minus[(2, 2)] - 0.25).abs() < 1e-8);
        }
        // para product: W⁻ = Scal · diag(−1/3, −1/6, 1/6) pointwise
        let gp = product("product_para");
        for x in gp.sample_points(8, 23) {
            let wb = weyl_blocks(&gp, &x).unwrap();
            assert!(
                wb.w_minus_pattern_residual(StructureCase::Para) < 1e-7,
                "Scal = {}, W⁻ = {:?}",
                wb.scal,
                wb.w_minus
            );
        }
    }

    #[test]
    fn w_plus_is_not_scal_times_the_pattern() {
        // surface products are degenerate: both blocks take the pattern
        let g = product("product_spheres");
        for x in g.sample_points(4, 29) {
            let wb = weyl_blocks(&g, &x).unwrap();
            assert!(wb.w_plus_scal_pattern_residual(StructureCase::Pseudo) < 1e-8);
        }
        // a lifted bundle over a nonconstant-curvature base separates them:
        // Scal̃ = 0 pins W⁻ = 0 while W⁺ stays alive
        let base = Arc::new(catalog("bump", &CatalogParams::default()).unwrap());
        let tg = Arc::new(TangentGeometry::lift(base).unwrap());
        let geom4 = tg.as_geometry();
        let mut best: f64 = 0.0;
        for x in geom4.sample_points(8, 29) {
            let wb = weyl_blocks(&geom4, &x).unwrap();
            best = best.max(wb.w_plus_scal_pattern_residual(StructureCase::Pseudo));
        }
        assert!(best > 1e-4, "W⁺ deviation from the Scal pattern: {best}");
    }

    #[test]
    fn duality_verdicts() {
        // flat product: both Scal and W⁻ vanish
        let flat = product("product_flat");
        let pts = flat.sample_points(8, 31);
        let rep = duality_audit(&flat, &pts).unwrap();
        assert!(rep.verdict, "{rep:?}");
        assert!(rep.max_w_minus < 1e-10 && rep.max_scal < 1e-10);

        // curved products: both sides over threshold
        for name in ["product_spheres", "product_para"] {
            let g = product(name);
            let pts = g.sample_points(8, 37);
            let rep = duality_audit(&g, &pts).unwrap();
            assert!(rep.verdict, "{name}: {rep:?}");
            assert!(rep.max_w_minus > 1e-3 && rep.max_scal > 1e-3);
        }
    }

    #[test]
    fn lifted_surface_bundles_are_self_dual() {
        // Scal̃ = 0 forces W⁻ = 0; constant curvature kills W⁺ as well,
        // the bump keeps it alive
        for (name, anti_self_dual) in [
            ("sphere", true),
            ("hyperbolic", true),
            ("de_sitter", true),
            ("bump", false),
            ("para_bump", false),
        ] {
            let base = Arc::new(catalog(name, &CatalogParams::default()).unwrap());
            let tg = Arc::new(TangentGeometry::lift(base).unwrap());
            let geom4 = tg.as_geometry();
            let pts = geom4.sample_points(8, 41);
            let rep = duality_audit(&geom4, &pts).unwrap();
            assert!(rep.verdict, "{name}: {rep:?}");
            assert!(rep.max_scal < 1e-9, "{name}: Scal̃ = {}", rep.max_scal);
            assert!(rep.max_w_minus < 1e-7, "{name}: W⁻ = {}", rep.max_w_minus);
            assert!(rep.max_offdiag < 1e-7, "{name}: offdiag = {}", rep.max_offdiag);
            if anti_self_dual {
                assert!(rep.max_w_plus < 1e-7, "{name}: W⁺ = {}", rep.max_w_plus);
            } else {
                assert!(rep.max_w_plus > 1e-4, "{name}: W⁺ = {}", rep.max_w_plus);
            }
        }
    }
}
