//! Truncated multivariate Taylor arithmetic (forward-mode jets).
//!
//! A [`Jet`] carries the Taylor expansion of a scalar quantity around a chart
//! point, truncated at a fixed total degree. Coefficients are stored in
//! Taylor-normalized form, `c_α = ∂^α f / α!`, so multiplication is plain
//! truncated polynomial multiplication and elementary functions compose via
//! their univariate series (Faà di Bruno comes for free). Arithmetic is exact
//! for polynomial inputs up to the truncation degree.
//!
//! Jets are immutable values and all operations are pure, so they can be
//! evaluated in parallel across chart points with no shared mutable state.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

/// Margin below which singular elementary functions (division, log, sqrt,
/// non-integer powers) refuse to evaluate rather than amplify noise.
pub const SINGULAR_MARGIN: f64 = 1e-12;

/// Largest order the public seeding API accepts.
pub const MAX_SEED_ORDER: usize = 3;

/// Errors produced by jet construction and arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    /// Seed order outside the supported range.
    #[error("jet order {0} outside supported range 1..={MAX_SEED_ORDER}")]
    InvalidOrder(usize),
    /// Seed variable index out of range.
    #[error("variable index {index} out of range for {nvars} variables")]
    VarOutOfRange { index: usize, nvars: usize },
    /// Operands live in different (nvars, order) truncation spaces.
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3}) (nvars, order)")]
    ShapeMismatch(usize, usize, usize, usize),
    /// Singular elementary function evaluated inside the guard margin.
    #[error("domain violation in jet `{op}`: value {value:e} within margin {SINGULAR_MARGIN:e}")]
    Domain { op: &'static str, value: f64 },
}

/// Precomputed index tables for one (nvars, order) truncation space.
///
/// Multi-indices are enumerated sorted by (total degree, lexicographic), so
/// the table of order `m-1` is a prefix of the table of order `m` and
/// truncation/differentiation are prefix operations.
pub struct JetTable {
    nvars: usize,
    order: usize,
    /// All multi-indices of total degree <= order.
    midx: Vec<Vec<u8>>,
    /// Position lookup.
    lookup: HashMap<Vec<u8>, usize>,
    /// Multiplication gather lists: for each result slot k, the (i, j) pairs
    /// with α_i + α_j = α_k.
    prod: Vec<Vec<(u32, u32)>>,
    /// Differentiation maps: deriv[v] lists (target, source, factor) with
    /// target enumerated in the order-(m-1) prefix.
    deriv: Vec<Vec<(u32, u32, f64)>>,
    /// Number of indices with total degree <= d, for d = 0..=order.
    degree_prefix: Vec<usize>,
}

impl JetTable {
    fn build(nvars: usize, order: usize) -> Self {
        let mut midx: Vec<Vec<u8>> = Vec::new();
        let mut stack = vec![0u8; nvars];
        enumerate(&mut midx, &mut stack, 0, order);
        midx.sort_by(|a, b| {
            let da: u32 = a.iter().map(|&x| x as u32).sum();
            let db: u32 = b.iter().map(|&x| x as u32).sum();
            da.cmp(&db).then_with(|| a.cmp(b))
        });
        let lookup: HashMap<Vec<u8>, usize> =
            midx.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let deg = |a: &[u8]| -> usize { a.iter().map(|&x| x as usize).sum() };

        let mut degree_prefix = vec![0usize; order + 1];
        for d in 0..=order {
            degree_prefix[d] = midx.iter().filter(|a| deg(a) <= d).count();
        }

        let mut prod: Vec<Vec<(u32, u32)>> = vec![Vec::new(); midx.len()];
        for (i, a) in midx.iter().enumerate() {
            for (j, b) in midx.iter().enumerate() {
                if deg(a) + deg(b) <= order {
                    let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    let k = lookup[&sum];
                    prod[k].push((i as u32, j as u32));
                }
            }
        }

        let mut deriv: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); nvars];
        if order >= 1 {
            for v in 0..nvars {
                for (t, a) in midx.iter().enumerate() {
                    if deg(a) <= order - 1 {
                        let mut up = a.clone();
                        up[v] += 1;
                        let s = lookup[&up];
                        deriv[v].push((t as u32, s as u32, (a[v] + 1) as f64));
                    }
                }
            }
        }

        JetTable { nvars, order, midx, lookup, prod, deriv, degree_prefix }
    }

    /// Number of coefficients in this truncation space.
    pub fn len(&self) -> usize {
        self.midx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midx.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

fn enumerate(out: &mut Vec<Vec<u8>>, stack: &mut Vec<u8>, var: usize, budget: usize) {
    if var == stack.len() {
        out.push(stack.clone());
        return;
    }
    for d in 0..=budget {
        stack[var] = d as u8;
        enumerate(out, stack, var + 1, budget - d);
    }
    stack[var] = 0;
}

fn table_cache() -> &'static RwLock<HashMap<(usize, usize), Arc<JetTable>>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<JetTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Table for the given truncation space, building and caching on first use.
pub fn table(nvars: usize, order: usize) -> Arc<JetTable> {
    if let Some(t) = table_cache().read().unwrap().get(&(nvars, order)) {
        return t.clone();
    }
    let t = Arc::new(JetTable::build(nvars, order));
    table_cache().write().unwrap().entry((nvars, order)).or_insert_with(|| t.clone());
    table_cache().read().unwrap()[&(nvars, order)].clone()
}

/// A truncated multivariate Taylor expansion.
#[derive(Clone)]
pub struct Jet {
    table: Arc<JetTable>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Jet(nvars={}, order={}, value={}, coeffs={:?})",
            self.table.nvars, self.table.order, self.value(), self.coeffs
        )
    }
}

impl Jet {
    /// The coordinate function `x_{var}` expanded around `point`, truncated
    /// at `order`: constant term `point[var]`, linear coefficient 1 on its
    /// own variable, everything else zero.
    pub fn seed(point: &[f64], var: usize, order: usize) -> Result<Jet, JetError> {
        if !(1..=MAX_SEED_ORDER).contains(&order) {
            return Err(JetError::InvalidOrder(order));
        }
        if var >= point.len() {
            return Err(JetError::VarOutOfRange { index: var, nvars: point.len() });
        }
        Ok(Self::seed_unchecked(point, var, order))
    }

    /// Seeding without the public order cap; internal plumbing (lifted-chart
    /// coefficient fields) needs one order above the caller's.
    pub(crate) fn seed_unchecked(point: &[f64], var: usize, order: usize) -> Jet {
        let t = table(point.len(), order);
        let mut coeffs = vec![0.0; t.len()];
        coeffs[0] = point[var];
        let mut e = vec![0u8; point.len()];
        e[var] = 1;
        coeffs[t.lookup[&e]] = 1.0;
        Jet { table: t, coeffs }
    }

    /// Seed every coordinate of a chart point at once.
    pub fn seed_point(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        (0..point.len()).map(|v| Jet::seed(point, v, order)).collect()
    }

    pub(crate) fn seed_point_unchecked(point: &[f64], order: usize) -> Vec<Jet> {
        (0..point.len()).map(|v| Jet::seed_unchecked(point, v, order)).collect()
    }

    /// A constant in the same truncation space as `self`.
    pub fn const_like(&self, v: f64) -> Jet {
        let mut coeffs = vec![0.0; self.table.len()];
        coeffs[0] = v;
        Jet { table: self.table.clone(), coeffs }
    }

    pub fn zero_like(&self) -> Jet {
        Jet { table: self.table.clone(), coeffs: vec![0.0; self.table.len()] }
    }

    pub fn nvars(&self) -> usize {
        self.table.nvars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    /// The value (zero multi-index coefficient).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor-normalized coefficient of a multi-index, zero if absent.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.table.lookup.get(alpha).map_or(0.0, |&i| self.coeffs[i])
    }

    /// Partial derivative `∂^α f` (coefficient times α!).
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        let fact: f64 = alpha.iter().map(|&a| (1..=a as u64).product::<u64>() as f64).product();
        self.coeff(alpha) * fact
    }

    /// First-order gradient.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.table.nvars)
            .map(|v| {
                let mut e = vec![0u8; self.table.nvars];
                e[v] = 1;
                self.coeff(&e)
            })
            .collect()
    }

    fn check_shape(&self, rhs: &Jet) {
        assert!(
            Arc::ptr_eq(&self.table, &rhs.table)
                || (self.table.nvars == rhs.table.nvars && self.table.order == rhs.table.order),
            "{}",
            JetError::ShapeMismatch(
                self.table.nvars, self.table.order, rhs.table.nvars, rhs.table.order
            )
        );
    }

    /// Truncate to a lower order (exact operation on Taylor coefficients).
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.table.order, "cannot truncate upwards");
        if order == self.table.order {
            return self.clone();
        }
        let t = table(self.table.nvars, order);
        let n = self.table.degree_prefix[order];
        Jet { table: t, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Partial derivative as a jet one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.table.order >= 1, "cannot differentiate an order-0 jet");
        assert!(var < self.table.nvars, "derivative variable out of range");
        let t = table(self.table.nvars, self.table.order - 1);
        let mut coeffs = vec![0.0; t.len()];
        for &(tgt, src, fac) in &self.table.deriv[var] {
            coeffs[tgt as usize] = self.coeffs[src as usize] * fac;
        }
        Jet { table: t, coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { table: self.table.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Compose a univariate series with the fluctuation of `self` around its
    /// value: given `series[k] = f^{(k)}(value)/k!`, returns the truncation
    /// of `f(self)`. Evaluated in Horner form; the fluctuation has zero
    /// constant term so the result is exact at the truncation order.
    fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.const_like(series[self.table.order]);
        for k in (0..self.table.order).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut series = vec![0.0; self.table.order + 1];
        let mut fact = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *s = e / fact;
        }
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= SINGULAR_MARGIN {
            return Err(JetError::Domain { op: "ln", value: v });
        }
        let mut series = vec![0.0; self.table.order + 1];
        series[0] = v.ln();
        for (k, s) in series.iter_mut().enumerate().skip(1) {
            *s = if k % 2 == 1 { 1.0 } else { -1.0 } / (k as f64 * v.powi(k as i32));
        }
        Ok(self.compose(&series))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= SINGULAR_MARGIN {
            return Err(JetError::Domain { op: "sqrt", value: v });
        }
        Ok(self.powf_series(0.5, v))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v.abs() <= SINGULAR_MARGIN {
            return Err(JetError::Domain { op: "recip", value: v });
        }
        let mut series = vec![0.0; self.table.order + 1];
        for (k, s) in series.iter_mut().enumerate() {
            *s = if k % 2 == 0 { 1.0 } else { -1.0 } / v.powi(k as i32 + 1);
        }
        Ok(self.compose(&series))
    }

    /// Real power; requires a positive base with margin.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= SINGULAR_MARGIN {
            return Err(JetError::Domain { op: "powf", value: v });
        }
        Ok(self.powf_series(p, v))
    }

    fn powf_series(&self, p: f64, v: f64) -> Jet {
        // binomial series: (v + h)^p = v^p Σ C(p,k) (h/v)^k
        let vp = v.powf(p);
        let mut series = vec![0.0; self.table.order + 1];
        let mut binom = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            if k > 0 {
                binom *= (p - (k as f64 - 1.0)) / k as f64;
            }
            *s = vp * binom / v.powi(k as i32);
        }
        self.compose(&series)
    }

    /// Integer power by repeated multiplication (no domain restriction for
    /// non-negative exponents).
    pub fn powi(&self, mut p: u32) -> Jet {
        let mut acc = self.const_like(1.0);
        let mut base = self.clone();
        while p > 0 {
            if p & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            p >>= 1;
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut series = vec![0.0; self.table.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 4] / fact;
        }
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let mut series = vec![0.0; self.table.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 4] / fact;
        }
        self.compose(&series)
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        Ok(self * &rhs.recip()?)
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.check_shape(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Jet { table: self.table.clone(), coeffs }
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.check_shape(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Jet { table: self.table.clone(), coeffs }
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.check_shape(rhs);
        let mut coeffs = vec![0.0; self.table.len()];
        for (k, pairs) in self.table.prod.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, j) in pairs {
                acc += self.coeffs[i as usize] * rhs.coeffs[j as usize];
            }
            coeffs[k] = acc;
        }
        Jet { table: self.table.clone(), coeffs }
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($trait:ident :: $m:ident),*) => {$(
        impl std::ops::$trait for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { std::ops::$trait::$m(&self, &rhs) }
        }
        impl std::ops::$trait<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { std::ops::$trait::$m(&self, rhs) }
        }
    )*};
}
owned_ops!(Add::add, Sub::sub, Mul::mul);

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}
