//! Graded connections, geodesic exponentials, and the global exponential
//! charts of the tangent groupoid.
//!
//! At `t ≠ 0` the tangent groupoid fiber is the pair groupoid; an arrow is
//! produced by the groupoid exponential `(x, v) ↦ (exp_x(ψ δ_t v), x)` of a
//! connection conjugated through a splitting.  At `t = 0` the fiber is the
//! osculating group bundle with its exact BCH multiplication.  This module
//! integrates the geodesic equation numerically (classical fixed-step RK4,
//! binary64), inverts charts by damped-Newton shooting, and, for flat
//! connections whose frame makes geodesics coordinate-affine, runs the same
//! pipeline exactly over the rationals.
//!
//! Product-order convention: composing `multiply(g, h)` of osculating
//! elements multiplies as `bch(h.v, g.v)`.  This is not an arbitrary
//! choice; it is the order the chart-pullback pair product converges to,
//! derived once by exact symbolic computation on the Heisenberg chart (see
//! the `convention_derivation` test) and pinned here.

use crate::filtration::{format_point, FiltrationError, Splitting, ValidatedChart};
use crate::graded_algebra::{AlgebraError, AlgebraVector};
use crate::linalg::{f64_solve, f64_solve_inplace, LinalgError, RatMat};
use crate::polyfields::{PolyError, Polynomial};
use crate::rational::{format_rat, rat_pow, rat_to_f64, Rat};
use crate::sampling::Sampler;
use num::Zero;
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Human-readable statement of the pinned fiber-product orientation; quoted
/// in deformation report headers.
pub const PRODUCT_CONVENTION: &str =
    "multiply(g, h) at t = 0 is (base, bch(h.v, g.v)); derived from the exact symbolic \
     Heisenberg chart-pullback product";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChartError {
    #[error("graded coordinate {coord} of the dilated vector exceeds the domain radius {radius}")]
    DomainExceeded { coord: f64, radius: f64 },
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),
    #[error("chart inversion did not converge: residual {residual:.3e} after {iters} iterations")]
    NewtonNoConvergence { iters: u32, residual: f64 },
    #[error("arrow lies outside the probed injectivity domain")]
    OutsideInjectivityDomain,
    #[error("arrows are not composable: {0}")]
    NonComposable(String),
    #[error("arrows live at different deformation parameters")]
    TMismatch,
    #[error("the exact pipeline needs a flat connection and a coordinate-affine frame")]
    ExactRouteUnavailable,
    #[error("element at t = 0 passed where a pair arrow was expected (or vice versa)")]
    WrongFiber,
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl From<LinalgError> for ChartError {
    fn from(e: LinalgError) -> Self {
        ChartError::IntegratorFailure(e.to_string())
    }
}

/// A connection on the graded bundle in the graded frame: Christoffel
/// polynomials `Γ_{c a}^{b}(x)` indexed by coordinate direction `c` and
/// frame indices `a → b`.  Graded means block-diagonal: `Γ_{ca}^b = 0`
/// unless `o_a = o_b`, which is exactly invariance under conjugation by
/// every dilation.
#[derive(Debug, Clone)]
pub struct GradedConnection {
    chart: ValidatedChart,
    /// keyed by `(c, a, b)`, zero-based
    christoffels: BTreeMap<(usize, usize, usize), Polynomial>,
}

impl GradedConnection {
    pub fn new(
        chart: &ValidatedChart,
        christoffels: BTreeMap<(usize, usize, usize), Polynomial>,
    ) -> Result<GradedConnection, ChartError> {
        let n = chart.dim();
        for (&(c, a, b), poly) in &christoffels {
            if c >= n || a >= n || b >= n {
                return Err(ChartError::Filtration(FiltrationError::Shape(format!(
                    "christoffel index ({},{},{}) out of range",
                    c + 1,
                    a + 1,
                    b + 1
                ))));
            }
            if poly.vars().names() != chart.vars().names() {
                return Err(ChartError::Filtration(FiltrationError::Shape(format!(
                    "christoffel ({},{},{}) uses different variables",
                    c + 1,
                    a + 1,
                    b + 1
                ))));
            }
        }
        Ok(GradedConnection {
            chart: chart.clone(),
            christoffels,
        })
    }

    /// The flat connection in the graded frame: all Christoffels zero.
    /// Automatically graded.
    pub fn flat(chart: &ValidatedChart) -> GradedConnection {
        GradedConnection {
            chart: chart.clone(),
            christoffels: BTreeMap::new(),
        }
    }

    pub fn chart(&self) -> &ValidatedChart {
        &self.chart
    }

    pub fn is_flat(&self) -> bool {
        self.christoffels.values().all(Polynomial::is_zero)
    }

    pub fn christoffel(&self, c: usize, a: usize, b: usize) -> Polynomial {
        self.christoffels
            .get(&(c, a, b))
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(self.chart.vars()))
    }

    pub fn christoffels(&self) -> &BTreeMap<(usize, usize, usize), Polynomial> {
        &self.christoffels
    }

    /// Pass iff every Christoffel crossing grading blocks is identically
    /// zero; the witness lists the offending index triples.
    pub fn validate(&self) -> ConnectionReport {
        let orders = self.chart.orders();
        let mut offending = Vec::new();
        for (&(c, a, b), poly) in &self.christoffels {
            if orders[a] != orders[b] && !poly.is_zero() {
                offending.push(format!(
                    "Γ[{}][{}]^[{}] crosses orders {} → {}",
                    c + 1,
                    a + 1,
                    b + 1,
                    orders[a],
                    orders[b]
                ));
            }
        }
        ConnectionReport {
            passed: offending.is_empty(),
            offending,
        }
    }
}

/// See [`GradedConnection::validate`].
pub fn validate_graded_connection(conn: &GradedConnection) -> ConnectionReport {
    conn.validate()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionReport {
    pub passed: bool,
    pub offending: Vec<String>,
}

impl fmt::Display for ConnectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            writeln!(f, "graded: pass")
        } else {
            writeln!(f, "graded: FAIL ({})", self.offending.join("; "))
        }
    }
}

/// Integration and inversion parameters for the chart maps.
#[derive(Debug, Clone)]
pub struct ChartDomain {
    /// Bound on the graded-frame coordinates of the dilated vector.
    pub radius: f64,
    /// Fixed RK4 step count on [0, 1].
    pub steps: u32,
    /// Coordinate tolerance for the Newton shooting in `chart_log`.
    pub newton_tol: f64,
    pub newton_max_iter: u32,
}

impl Default for ChartDomain {
    fn default() -> Self {
        ChartDomain {
            radius: 1.0,
            steps: 256,
            newton_tol: 1e-12,
            newton_max_iter: 60,
        }
    }
}

/// Point of the tangent groupoid: a pair-groupoid arrow at `t ≠ 0` or an
/// osculating group element at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentGroupoidElement {
    Pair {
        range: Vec<f64>,
        source: Vec<f64>,
        t: f64,
    },
    Osculating {
        base: Vec<Rat>,
        v: AlgebraVector,
    },
}

impl TangentGroupoidElement {
    pub fn t(&self) -> f64 {
        match self {
            TangentGroupoidElement::Pair { t, .. } => *t,
            TangentGroupoidElement::Osculating { .. } => 0.0,
        }
    }
}

/// Fully rational groupoid element, produced by the exact pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactGroupoidElement {
    Pair {
        range: Vec<Rat>,
        source: Vec<Rat>,
        t: Rat,
    },
    Osculating {
        base: Vec<Rat>,
        v: AlgebraVector,
    },
}

/// Output of `chart_log`: the chart coordinates of an arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCoords {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

/// Polynomial precompiled to f64 coefficients for the integrator hot path;
/// exact evaluation stays on the rational originals.
#[derive(Debug, Clone)]
struct CompiledPoly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl CompiledPoly {
    fn compile(p: &Polynomial) -> CompiledPoly {
        CompiledPoly {
            terms: p
                .terms()
                .map(|(m, c)| (rat_to_f64(c), m.clone()))
                .collect(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, exps) in &self.terms {
            let mut term = *c;
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    term *= x[i];
                }
            }
            acc += term;
        }
        acc
    }

}

/// The global exponential chart determined by a graded connection and a
/// splitting.  Precomputes the symbolic coordinate matrix of the split
/// frame and its derivatives once; all pointwise work is evaluation.
pub struct ExponentialChart {
    chart: ValidatedChart,
    psi: Splitting,
    /// coordinate matrix of the split frame, `P = F · M_ψ`
    p_poly: Vec<Vec<Polynomial>>,
    p_fast: Vec<Vec<CompiledPoly>>,
    /// nonzero entries of `∂_i P`, flattened as `(dir, row, col, poly)`
    dp_fast: Vec<(usize, usize, usize, CompiledPoly)>,
    /// nonzero Christoffels `(dir, a, b, poly)`
    gamma_fast: Vec<(usize, usize, usize, CompiledPoly)>,
    flat: bool,
    affine: bool,
}

impl ExponentialChart {
    pub fn new(conn: &GradedConnection, psi: &Splitting) -> Result<ExponentialChart, ChartError> {
        if conn.chart() != psi.chart() {
            return Err(ChartError::NonComposable(
                "connection and splitting live on different charts".to_string(),
            ));
        }
        let chart = psi.chart().clone();
        let n = chart.dim();
        let p_poly = psi.coordinate_matrix_poly()?;
        let p_fast = p_poly
            .iter()
            .map(|row| row.iter().map(CompiledPoly::compile).collect())
            .collect();
        let mut dp_fast = Vec::new();
        for dir in 0..n {
            for (row, cols) in p_poly.iter().enumerate() {
                for (col, p) in cols.iter().enumerate() {
                    let d = p.derivative(dir);
                    if !d.is_zero() {
                        dp_fast.push((dir, row, col, CompiledPoly::compile(&d)));
                    }
                }
            }
        }
        let gamma_fast = conn
            .christoffels()
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(&(c, a, b), p)| (c, a, b, CompiledPoly::compile(p)))
            .collect();
        let flat = conn.is_flat();
        let affine = flat && columns_are_autoparallel(&chart, &p_poly)?;
        Ok(ExponentialChart {
            chart,
            psi: psi.clone(),
            p_poly,
            p_fast,
            dp_fast,
            gamma_fast,
            flat,
            affine,
        })
    }

    pub fn chart(&self) -> &ValidatedChart {
        &self.chart
    }

    pub fn splitting(&self) -> &Splitting {
        &self.psi
    }

    /// True when the chart maps can be computed exactly over the
    /// rationals: flat connection and coordinate-affine geodesics.
    pub fn exact_available(&self) -> bool {
        self.affine
    }

    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn p_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.p_fast
            .iter()
            .map(|row| row.iter().map(|p| p.eval(x)).collect())
            .collect()
    }

    fn p_at_exact(&self, x: &[Rat]) -> Result<RatMat, ChartError> {
        let n = self.dim();
        let mut m = RatMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                *m.at_mut(i, j) = self.p_poly[i][j].eval(x).map_err(ChartError::Poly)?;
            }
        }
        Ok(m)
    }

    /// Geodesic acceleration: `v'^k = −Σ_i v^i [P(Γ_i b) − (∂_i P) b]^k`
    /// with `b = P^{-1} v` the frame coordinates of the velocity.
    /// Writes into the scratch buffers; allocation-free.
    fn acceleration_into(
        &self,
        x: &[f64],
        v: &[f64],
        scratch: &mut Scratch,
        out: &mut [f64],
    ) -> Result<(), ChartError> {
        let n = self.dim();
        for (i, row) in self.p_fast.iter().enumerate() {
            for (j, poly) in row.iter().enumerate() {
                let value = poly.eval(x);
                scratch.p[i * n + j] = value;
                scratch.plu[i * n + j] = value;
            }
        }
        scratch.b.copy_from_slice(v);
        if !f64_solve_inplace(&mut scratch.plu, &mut scratch.b, n) {
            return Err(ChartError::IntegratorFailure(format!(
                "frame singular along trajectory near ({})",
                x.iter()
                    .map(|c| format!("{c:.6}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        out.fill(0.0);
        // +Σ_dir v^dir · (∂_dir P) b: every nonzero ∂P entry contributes once
        for (dir, row, col, poly) in &self.dp_fast {
            let vd = v[*dir];
            if vd == 0.0 {
                continue;
            }
            out[*row] += vd * poly.eval(x) * scratch.b[*col];
        }
        if !self.flat {
            // −Σ_dir v^dir · P·(Γ_dir b)
            scratch.gb.fill(0.0);
            for (dir, a, bb, poly) in &self.gamma_fast {
                if v[*dir] == 0.0 {
                    continue;
                }
                scratch.gb[*dir * n + *bb] += poly.eval(x) * scratch.b[*a];
            }
            for dir in 0..n {
                if v[dir] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        s += scratch.p[k * n + a] * scratch.gb[dir * n + a];
                    }
                    out[k] -= v[dir] * s;
                }
            }
        }
        Ok(())
    }

    /// Integrates the geodesic of the conjugated connection from `(x, v)`
    /// to parameter 1 with classical fixed-step RK4.
    fn integrate(&self, x0: &[f64], v0: &[f64], steps: u32) -> Result<Vec<f64>, ChartError> {
        let n = self.dim();
        let steps = steps.max(1);
        let h = 1.0 / f64::from(steps);
        let mut scratch = Scratch::new(n);
        let mut x = x0.to_vec();
        let mut v = v0.to_vec();
        let mut stage_x = vec![0.0; n];
        let mut stage_v = vec![0.0; n];
        // kx stages equal the stage velocities; only kv needs storage
        let mut kv = vec![vec![0.0; n]; 4];
        let mut kx = vec![vec![0.0; n]; 4];
        for _ in 0..steps {
            kx[0].copy_from_slice(&v);
            {
                let (k, rest) = kv.split_first_mut().expect("four stages");
                let _ = rest;
                self.acceleration_into(&x, &v, &mut scratch, k)?;
            }
            for stage in 1..4 {
                let factor = if stage == 3 { h } else { 0.5 * h };
                for i in 0..n {
                    stage_x[i] = x[i] + factor * kx[stage - 1][i];
                    stage_v[i] = v[i] + factor * kv[stage - 1][i];
                }
                kx[stage].copy_from_slice(&stage_v);
                let (head, tail) = kv.split_at_mut(stage);
                let _ = head;
                self.acceleration_into(&stage_x, &stage_v, &mut scratch, &mut tail[0])?;
            }
            for i in 0..n {
                x[i] += h / 6.0 * (kx[0][i] + 2.0 * kx[1][i] + 2.0 * kx[2][i] + kx[3][i]);
                v[i] += h / 6.0 * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
            }
            for &c in x.iter().chain(v.iter()) {
                if !c.is_finite() || c.abs() > 1e12 {
                    return Err(ChartError::IntegratorFailure(
                        "trajectory escaped (coordinate bound exceeded)".to_string(),
                    ));
                }
            }
        }
        Ok(x)
    }

    /// Geodesic exponential of the conjugated connection: follows the
    /// geodesic from `x` with initial velocity `v` (a coordinate vector)
    /// to parameter 1.
    pub fn exp_geodesic(
        &self,
        x: &[f64],
        v: &[f64],
        ctrl: &ChartDomain,
    ) -> Result<Vec<f64>, ChartError> {
        if v.iter().all(|&c| c == 0.0) {
            return Ok(x.to_vec());
        }
        self.integrate(x, v, ctrl.steps)
    }

    /// Pair-groupoid exponential at `t = 1`: `(x, v) ↦ (exp_x(v), x)`.
    pub fn groupoid_exp(
        &self,
        x: &[f64],
        v: &[f64],
        ctrl: &ChartDomain,
    ) -> Result<TangentGroupoidElement, ChartError> {
        Ok(TangentGroupoidElement::Pair {
            range: self.exp_geodesic(x, v, ctrl)?,
            source: x.to_vec(),
            t: 1.0,
        })
    }

    fn delta_f64(&self, v: &AlgebraVector, t: f64) -> Vec<f64> {
        v.coords()
            .iter()
            .zip(self.chart.orders())
            .map(|(c, &o)| rat_to_f64(c) * t.powi(o as i32))
            .collect()
    }

    fn check_domain(&self, dilated: &[f64], ctrl: &ChartDomain) -> Result<(), ChartError> {
        for &c in dilated {
            if c.abs() > ctrl.radius {
                return Err(ChartError::DomainExceeded {
                    coord: c,
                    radius: ctrl.radius,
                });
            }
        }
        Ok(())
    }

    /// The global exponential chart `(x, v, t) ↦ 𝕋_HM`: identity on the
    /// `t = 0` fiber, pair arrow `(exp_x(ψ δ_t v), x, t)` otherwise.
    pub fn global_chart(
        &self,
        x: &[Rat],
        v: &AlgebraVector,
        t: &Rat,
        ctrl: &ChartDomain,
    ) -> Result<TangentGroupoidElement, ChartError> {
        if t.is_zero() {
            return Ok(TangentGroupoidElement::Osculating {
                base: x.to_vec(),
                v: v.clone(),
            });
        }
        let xf: Vec<f64> = x.iter().map(rat_to_f64).collect();
        self.global_chart_f64(&xf, v, rat_to_f64(t), ctrl)
    }

    /// Numeric chart at `t ≠ 0` from a binary64 base point.
    pub fn global_chart_f64(
        &self,
        x: &[f64],
        v: &AlgebraVector,
        t: f64,
        ctrl: &ChartDomain,
    ) -> Result<TangentGroupoidElement, ChartError> {
        assert!(t != 0.0, "the t = 0 fiber is exact; use global_chart");
        let dilated = self.delta_f64(v, t);
        self.check_domain(&dilated, ctrl)?;
        let p = self.p_at(x);
        let n = self.dim();
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|a| p[i][a] * dilated[a]).sum())
            .collect();
        Ok(TangentGroupoidElement::Pair {
            range: self.exp_geodesic(x, &w, ctrl)?,
            source: x.to_vec(),
            t,
        })
    }

    /// Inverts the global chart on a pair arrow by damped-Newton shooting
    /// on the initial velocity, then unwinds the splitting and dilation.
    pub fn chart_log(
        &self,
        g: &TangentGroupoidElement,
        ctrl: &ChartDomain,
    ) -> Result<LogCoords, ChartError> {
        match g {
            TangentGroupoidElement::Osculating { base, v } => Ok(LogCoords {
                x: base.iter().map(rat_to_f64).collect(),
                v: v.coords().iter().map(rat_to_f64).collect(),
                t: 0.0,
            }),
            TangentGroupoidElement::Pair { range, source, t } => {
                let w = self.shoot(source, range, ctrl)?;
                let p = self.p_at(source);
                let dilated = f64_solve(&p, &w).map_err(|_| {
                    ChartError::IntegratorFailure("frame singular at source".to_string())
                })?;
                let v: Vec<f64> = dilated
                    .iter()
                    .zip(self.chart.orders())
                    .map(|(c, &o)| c / t.powi(o as i32))
                    .collect();
                for &c in &dilated {
                    if c.abs() > ctrl.radius * (1.0 + 1e-9) {
                        return Err(ChartError::OutsideInjectivityDomain);
                    }
                }
                Ok(LogCoords {
                    x: source.clone(),
                    v,
                    t: *t,
                })
            }
        }
    }

    /// Damped Newton iteration solving `exp_x(w) = y` for `w`.
    fn shoot(&self, x: &[f64], y: &[f64], ctrl: &ChartDomain) -> Result<Vec<f64>, ChartError> {
        let n = self.dim();
        let mut w: Vec<f64> = (0..n).map(|i| y[i] - x[i]).collect();
        let coarse = ChartDomain {
            steps: (ctrl.steps / 4).max(32),
            ..ctrl.clone()
        };
        let residual = |w: &[f64]| -> Result<(Vec<f64>, f64), ChartError> {
            let reached = self.exp_geodesic(x, w, ctrl)?;
            let r: Vec<f64> = (0..n).map(|i| reached[i] - y[i]).collect();
            let norm = r.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
            Ok((r, norm))
        };
        let (mut r, mut norm) = residual(&w)?;
        for _ in 0..ctrl.newton_max_iter {
            if norm <= ctrl.newton_tol {
                return Ok(w);
            }
            // finite-difference Jacobian at coarse integrator resolution
            let base = self.exp_geodesic(x, &w, &coarse)?;
            let scale = 1e-6 * w.iter().fold(1.0f64, |m, &c| m.max(c.abs()));
            let mut jac = vec![vec![0.0; n]; n];
            for j in 0..n {
                let mut wj = w.clone();
                wj[j] += scale;
                let shifted = self.exp_geodesic(x, &wj, &coarse)?;
                for i in 0..n {
                    jac[i][j] = (shifted[i] - base[i]) / scale;
                }
            }
            let step = f64_solve(&jac, &r)
                .map_err(|_| ChartError::IntegratorFailure("singular shooting Jacobian".into()))?;
            let mut alpha = 1.0;
            loop {
                let candidate: Vec<f64> = (0..n).map(|i| w[i] - alpha * step[i]).collect();
                match residual(&candidate) {
                    Ok((rc, nc)) if nc < norm || nc <= ctrl.newton_tol => {
                        w = candidate;
                        r = rc;
                        norm = nc;
                        break;
                    }
                    _ if alpha > 1e-4 => alpha *= 0.5,
                    _ => {
                        return Err(ChartError::NewtonNoConvergence {
                            iters: ctrl.newton_max_iter,
                            residual: norm,
                        })
                    }
                }
            }
        }
        if norm <= ctrl.newton_tol {
            Ok(w)
        } else {
            Err(ChartError::NewtonNoConvergence {
                iters: ctrl.newton_max_iter,
                residual: norm,
            })
        }
    }

    /// Exact chart for flat connections with coordinate-affine geodesics:
    /// `(x, v, t) ↦ (x + P(x)·δ_t v, x, t)` over the rationals.
    pub fn global_chart_exact(
        &self,
        x: &[Rat],
        v: &AlgebraVector,
        t: &Rat,
    ) -> Result<ExactGroupoidElement, ChartError> {
        if t.is_zero() {
            return Ok(ExactGroupoidElement::Osculating {
                base: x.to_vec(),
                v: v.clone(),
            });
        }
        if !self.exact_available() {
            return Err(ChartError::ExactRouteUnavailable);
        }
        let p = self.p_at_exact(x)?;
        let dilated: Vec<Rat> = v
            .coords()
            .iter()
            .zip(self.chart.orders())
            .map(|(c, &o)| c.clone() * rat_pow(t, o))
            .collect();
        let moved = p.mul_vec(&dilated);
        let range: Vec<Rat> = x
            .iter()
            .zip(&moved)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(ExactGroupoidElement::Pair {
            range,
            source: x.to_vec(),
            t: t.clone(),
        })
    }

    /// Exact inverse of [`ExponentialChart::global_chart_exact`].
    pub fn chart_log_exact(
        &self,
        g: &ExactGroupoidElement,
    ) -> Result<(Vec<Rat>, AlgebraVector, Rat), ChartError> {
        match g {
            ExactGroupoidElement::Osculating { base, v } => {
                Ok((base.clone(), v.clone(), Rat::zero()))
            }
            ExactGroupoidElement::Pair { range, source, t } => {
                if !self.exact_available() {
                    return Err(ChartError::ExactRouteUnavailable);
                }
                let p = self.p_at_exact(source)?;
                let w: Vec<Rat> = range
                    .iter()
                    .zip(source)
                    .map(|(r, s)| r.clone() - s.clone())
                    .collect();
                let dilated = p
                    .solve(&w)
                    .map_err(|_| FiltrationError::SingularFrame(format_point(source)))?;
                let v: Vec<Rat> = dilated
                    .iter()
                    .zip(self.chart.orders())
                    .map(|(c, &o)| c.clone() / rat_pow(t, o))
                    .collect();
                Ok((source.clone(), AlgebraVector::new(v), t.clone()))
            }
        }
    }

    /// Samples the candidate domain for collisions of the pair-groupoid
    /// exponential: two distinct `(x, v)` mapping to coordinate-identical
    /// arrows within `tol`.  Statistical evidence only, never a
    /// certificate.
    pub fn injectivity_probe(
        &self,
        ctrl: &ChartDomain,
        samples: usize,
        seed: u64,
    ) -> ProbeReport {
        let tol = 1e-9;
        let v_separation = 1e-6;
        let n = self.dim();
        let bases = self.chart.sample_points();
        let mut sampler = Sampler::new(seed);
        let mut escaped = 0usize;
        let mut tested = 0usize;
        let mut collision = None;
        'outer: for (bi, base) in bases.iter().enumerate() {
            let share = samples / bases.len()
                + usize::from(bi < samples % bases.len());
            let xf: Vec<f64> = base.iter().map(rat_to_f64).collect();
            let p = self.p_at(&xf);
            let mut buckets: HashMap<Vec<i64>, Vec<(Vec<f64>, Vec<f64>)>> = HashMap::new();
            for _ in 0..share {
                let v: Vec<f64> = (0..n)
                    .map(|_| sampler.f64_in(-ctrl.radius, ctrl.radius))
                    .collect();
                let w: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|a| p[i][a] * v[a]).sum())
                    .collect();
                tested += 1;
                let target = match self.exp_geodesic(&xf, &w, ctrl) {
                    Ok(y) => y,
                    Err(_) => {
                        escaped += 1;
                        continue;
                    }
                };
                let key: Vec<i64> = target.iter().map(|&c| (c / tol).round() as i64).collect();
                // compare against occupants of the surrounding cells
                let mut neighbor = vec![0i64; n];
                let mut found = None;
                search_cells(&key, &mut neighbor, 0, &mut |cell: &[i64]| {
                    if found.is_some() {
                        return;
                    }
                    if let Some(entries) = buckets.get(cell) {
                        for (v2, target2) in entries {
                            let dist = target
                                .iter()
                                .zip(target2)
                                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                            let vdist = v
                                .iter()
                                .zip(v2)
                                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                            if dist <= tol && vdist >= v_separation {
                                found = Some(Collision {
                                    base: xf.clone(),
                                    v1: v2.clone(),
                                    v2: v.clone(),
                                    arrow_distance: dist,
                                });
                                return;
                            }
                        }
                    }
                });
                if let Some(c) = found {
                    collision = Some(c);
                    break 'outer;
                }
                buckets.entry(key).or_default().push((v.clone(), target));
            }
        }
        let message = match &collision {
            Some(c) => format!(
                "collision after {tested} samples: base ({}), |Δarrow|∞ = {:.3e}",
                c.base
                    .iter()
                    .map(|x| format!("{x:.4}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                c.arrow_distance
            ),
            None => format!("no collision found at {tested} samples (tolerance {tol:.0e})"),
        };
        ProbeReport {
            samples: tested,
            escaped,
            collision,
            message,
        }
    }

    /// Runs the tangent-groupoid deformation check: composes two chart
    /// arrows at each `t`, pulls the product back through the chart, and
    /// compares against the osculating product at the base point.  Uses
    /// the exact rational pipeline whenever it is available, the RK4/Newton
    /// pipeline otherwise.
    pub fn deformation_limit_check(
        &self,
        x: &[Rat],
        v: &AlgebraVector,
        w: &AlgebraVector,
        t_seq: &[Rat],
        ctrl: &ChartDomain,
    ) -> Result<DeformationReport, ChartError> {
        let alg = self.chart.osculating_algebra_at(x)?;
        let limit = alg.bch_product(w, v)?;
        let exact = self.exact_available();
        let mut rows = Vec::with_capacity(t_seq.len());
        for t in t_seq {
            if exact {
                let h = self.global_chart_exact(x, w, t)?;
                let range = match &h {
                    ExactGroupoidElement::Pair { range, .. } => range.clone(),
                    ExactGroupoidElement::Osculating { base, .. } => base.clone(),
                };
                let g = self.global_chart_exact(&range, v, t)?;
                let prod = multiply_exact(&self.chart, &g, &h)?;
                let u = match &prod {
                    ExactGroupoidElement::Osculating { v, .. } => v.clone(),
                    ExactGroupoidElement::Pair { .. } => self.chart_log_exact(&prod)?.1,
                };
                let diff = u.sub(&limit);
                let error = diff
                    .coords()
                    .iter()
                    .fold(0.0f64, |m, c| m.max(rat_to_f64(c).abs()));
                rows.push(DeformationRow {
                    t: t.clone(),
                    product_coords: u.coords().iter().map(format_rat).collect(),
                    error,
                    exact_zero: diff.is_zero(),
                });
            } else if t.is_zero() {
                let u = limit.clone();
                rows.push(DeformationRow {
                    t: t.clone(),
                    product_coords: u.coords().iter().map(format_rat).collect(),
                    error: 0.0,
                    exact_zero: true,
                });
            } else {
                let xf: Vec<f64> = x.iter().map(rat_to_f64).collect();
                let tf = rat_to_f64(t);
                let h = self.global_chart_f64(&xf, w, tf, ctrl)?;
                let range = match &h {
                    TangentGroupoidElement::Pair { range, .. } => range.clone(),
                    TangentGroupoidElement::Osculating { .. } => unreachable!("t ≠ 0"),
                };
                let g = self.global_chart_f64(&range, v, tf, ctrl)?;
                let prod = multiply(&self.chart, &g, &h)?;
                let log = self.chart_log(&prod, ctrl)?;
                let error = log
                    .v
                    .iter()
                    .zip(limit.coords())
                    .fold(0.0f64, |m, (a, b)| m.max((a - rat_to_f64(b)).abs()));
                rows.push(DeformationRow {
                    t: t.clone(),
                    product_coords: log.v.iter().map(|c| format!("{c:.17e}")).collect(),
                    error,
                    exact_zero: false,
                });
            }
        }
        let first = rows.first().map_or(0.0, |r| r.error);
        let last = rows.last().map_or(0.0, |r| r.error);
        let converged = rows.iter().all(|r| r.exact_zero)
            || last <= 1e-12
            || (t_seq.len() > 1 && last <= 0.5 * first);
        Ok(DeformationReport {
            convention: PRODUCT_CONVENTION.to_string(),
            exact_pipeline: exact,
            limit,
            rows,
            converged,
        })
    }
}

/// Reusable integrator buffers: the evaluated frame matrix, its LU copy,
/// frame velocity coordinates, and the Christoffel contraction.
struct Scratch {
    p: Vec<f64>,
    plu: Vec<f64>,
    b: Vec<f64>,
    gb: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Scratch {
        Scratch {
            p: vec![0.0; n * n],
            plu: vec![0.0; n * n],
            b: vec![0.0; n],
            gb: vec![0.0; n * n],
        }
    }
}

fn search_cells(key: &[i64], current: &mut Vec<i64>, dim: usize, visit: &mut impl FnMut(&[i64])) {
    if dim == key.len() {
        visit(current);
        return;
    }
    for delta in -1..=1 {
        current[dim] = key[dim] + delta;
        search_cells(key, current, dim + 1, visit);
    }
}

/// Symbolic check that constant-coefficient combinations of the columns of
/// `p` flow along straight lines: the symmetrized directional derivatives
/// `Y_a(Y_b^i) + Y_b(Y_a^i)` must all vanish identically.
fn columns_are_autoparallel(
    chart: &ValidatedChart,
    p: &[Vec<Polynomial>],
) -> Result<bool, ChartError> {
    let n = chart.dim();
    let column = |a: usize| -> Vec<&Polynomial> { (0..n).map(|i| &p[i][a]).collect() };
    let direct = |a: usize, f: &Polynomial| -> Result<Polynomial, PolyError> {
        let mut acc = f.zero_like();
        for (j, comp) in column(a).iter().enumerate() {
            acc = acc.add(&comp.mul(&f.derivative(j))?);
        }
        Ok(acc)
    };
    for a in 0..n {
        for b in a..n {
            for i in 0..n {
                let fwd = direct(a, &p[i][b])?;
                let bwd = direct(b, &p[i][a])?;
                if !fwd.add(&bwd).is_zero() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    pub base: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub arrow_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub samples: usize,
    pub escaped: usize,
    pub collision: Option<Collision>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationRow {
    pub t: Rat,
    /// exact rational strings on the exact pipeline, decimal floats
    /// otherwise
    pub product_coords: Vec<String>,
    pub error: f64,
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationReport {
    pub convention: String,
    pub exact_pipeline: bool,
    pub limit: AlgebraVector,
    pub rows: Vec<DeformationRow>,
    pub converged: bool,
}

impl DeformationReport {
    /// Ratios `e(t_{i+1}) / e(t_i)` over consecutive rows with nonzero
    /// errors.
    pub fn error_ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| w[0].error > 0.0)
            .map(|w| w[1].error / w[0].error)
            .collect()
    }
}

/// Groupoid multiplication.  Pair arrows compose as
/// `(z, y, t)·(y, x, t) = (z, x, t)`; osculating elements over the same
/// base multiply through the BCH product in the pinned order
/// (`multiply(g, h) = bch(h.v, g.v)`).
pub fn multiply(
    chart: &ValidatedChart,
    g: &TangentGroupoidElement,
    h: &TangentGroupoidElement,
) -> Result<TangentGroupoidElement, ChartError> {
    match (g, h) {
        (
            TangentGroupoidElement::Pair {
                range: gz,
                source: gy,
                t: gt,
            },
            TangentGroupoidElement::Pair {
                range: hy,
                source: hx,
                t: ht,
            },
        ) => {
            if gt != ht {
                return Err(ChartError::TMismatch);
            }
            if gy != hy {
                return Err(ChartError::NonComposable(
                    "source of the left arrow differs from range of the right arrow".to_string(),
                ));
            }
            Ok(TangentGroupoidElement::Pair {
                range: gz.clone(),
                source: hx.clone(),
                t: *gt,
            })
        }
        (
            TangentGroupoidElement::Osculating { base: gb, v: gv },
            TangentGroupoidElement::Osculating { base: hb, v: hv },
        ) => {
            if gb != hb {
                return Err(ChartError::NonComposable(
                    "osculating elements sit over different base points".to_string(),
                ));
            }
            let alg = chart.osculating_algebra_at(gb)?;
            Ok(TangentGroupoidElement::Osculating {
                base: gb.clone(),
                v: alg.bch_product(hv, gv)?,
            })
        }
        _ => Err(ChartError::TMismatch),
    }
}

/// Exact-arithmetic variant of [`multiply`].
pub fn multiply_exact(
    chart: &ValidatedChart,
    g: &ExactGroupoidElement,
    h: &ExactGroupoidElement,
) -> Result<ExactGroupoidElement, ChartError> {
    match (g, h) {
        (
            ExactGroupoidElement::Pair {
                range: gz,
                source: gy,
                t: gt,
            },
            ExactGroupoidElement::Pair {
                range: hy,
                source: hx,
                t: ht,
            },
        ) => {
            if gt != ht {
                return Err(ChartError::TMismatch);
            }
            if gy != hy {
                return Err(ChartError::NonComposable(
                    "source of the left arrow differs from range of the right arrow".to_string(),
                ));
            }
            Ok(ExactGroupoidElement::Pair {
                range: gz.clone(),
                source: hx.clone(),
                t: gt.clone(),
            })
        }
        (
            ExactGroupoidElement::Osculating { base: gb, v: gv },
            ExactGroupoidElement::Osculating { base: hb, v: hv },
        ) => {
            if gb != hb {
                return Err(ChartError::NonComposable(
                    "osculating elements sit over different base points".to_string(),
                ));
            }
            let alg = chart.osculating_algebra_at(gb)?;
            Ok(ExactGroupoidElement::Osculating {
                base: gb.clone(),
                v: alg.bch_product(hv, gv)?,
            })
        }
        _ => Err(ChartError::TMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use num::One;
    use crate::polyfields::VarSet;
    use crate::rational::{rat, rat_int};

    fn flat_canonical(chart: &ValidatedChart) -> ExponentialChart {
        let conn = GradedConnection::flat(chart);
        let psi = Splitting::canonical(chart);
        ExponentialChart::new(&conn, &psi).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn graded_connection_validation() {
        let chart = bundled::heisenberg3_validated();
        assert!(GradedConnection::flat(&chart).validate().passed);
        // Γ_{13}^1 crosses orders 2 → 1: not graded
        let mut table = BTreeMap::new();
        table.insert((0usize, 2usize, 0usize), Polynomial::one(chart.vars()));
        let bad = GradedConnection::new(&chart, table).unwrap();
        let report = bad.validate();
        assert!(!report.passed);
        assert!(report.offending[0].contains("Γ[1][3]^[1]"));
        // Γ_{11}^2(x) = z stays inside the order-1 block: graded
        let mut ok = BTreeMap::new();
        ok.insert(
            (0usize, 0usize, 1usize),
            Polynomial::var(chart.vars(), 2),
        );
        assert!(GradedConnection::new(&chart, ok).unwrap().validate().passed);
    }

    #[test]
    fn heisenberg_flat_chart_is_exactly_affine() {
        let chart = bundled::heisenberg3_validated();
        let exp = flat_canonical(&chart);
        assert!(exp.exact_available());
        let engel = bundled::engel4_validated();
        assert!(!flat_canonical(&engel).exact_available());
        let twisted = bundled::twisted_heisenberg_validated();
        assert!(!flat_canonical(&twisted).exact_available());
        let abelian = bundled::abelian_validated(3);
        assert!(flat_canonical(&abelian).exact_available());
    }

    #[test]
    fn exp_geodesic_basics() {
        let chart = bundled::engel4_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = [0.25, -0.5, 0.125, 0.0];
        // zero velocity stays put
        assert_eq!(exp.exp_geodesic(&x, &[0.0; 4], &ctrl).unwrap(), x.to_vec());
        // coordinate frame: straight lines, exactly
        let abelian = bundled::abelian_validated(3);
        let aexp = flat_canonical(&abelian);
        let y = aexp
            .exp_geodesic(&[0.1, 0.2, 0.3], &[0.4, -0.2, 0.05], &ctrl)
            .unwrap();
        assert!(max_abs_diff(&y, &[0.5, 0.0, 0.35]) < 1e-14);
        // step-halving agreement on the curved chart
        let v = [0.3, 0.4, -0.2, 0.1];
        let coarse = exp.exp_geodesic(&x, &v, &ctrl).unwrap();
        let fine = exp
            .exp_geodesic(
                &x,
                &v,
                &ChartDomain {
                    steps: 512,
                    ..ctrl.clone()
                },
            )
            .unwrap();
        let scale = fine.iter().fold(1.0f64, |m, &c| m.max(c.abs()));
        assert!(max_abs_diff(&coarse, &fine) / scale < 1e-10);
    }

    #[test]
    fn groupoid_exp_source_is_base() {
        let chart = bundled::heisenberg3_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = [0.5, -0.25, 0.0];
        match exp.groupoid_exp(&x, &[0.0; 3], &ctrl).unwrap() {
            TangentGroupoidElement::Pair { range, source, t } => {
                assert_eq!(range, x.to_vec());
                assert_eq!(source, x.to_vec());
                assert_eq!(t, 1.0);
            }
            _ => panic!("expected a pair arrow"),
        }
        match exp.groupoid_exp(&x, &[0.1, 0.2, 0.3], &ctrl).unwrap() {
            TangentGroupoidElement::Pair { source, .. } => assert_eq!(source, x.to_vec()),
            _ => panic!("expected a pair arrow"),
        }
    }

    #[test]
    fn global_chart_examples() {
        let chart = bundled::heisenberg3_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let origin = vec![Rat::zero(); 3];
        let v = AlgebraVector::basis(3, 2);
        // t = 0 is the identity on (x, v)
        match exp.global_chart(&origin, &v, &Rat::zero(), &ctrl).unwrap() {
            TangentGroupoidElement::Osculating { base, v: vv } => {
                assert_eq!(base, origin);
                assert_eq!(vv, v);
            }
            _ => panic!("expected the osculating fiber"),
        }
        // t = 1/2 dilates the weight-2 vector by 1/4 and exponentiates
        match exp.global_chart(&origin, &v, &rat(1, 2), &ctrl).unwrap() {
            TangentGroupoidElement::Pair { range, source, t } => {
                assert!(max_abs_diff(&range, &[0.0, 0.0, 0.25]) < 1e-13);
                assert_eq!(source, vec![0.0; 3]);
                assert_eq!(t, 0.5);
            }
            _ => panic!("expected a pair arrow"),
        }
        // abelian chart at t = 1: x + v
        let abelian = bundled::abelian_validated(2);
        let aexp = flat_canonical(&abelian);
        let x = vec![rat(1, 4), rat(-1, 2)];
        let av = AlgebraVector::new(vec![rat(1, 2), rat(1, 4)]);
        match aexp.global_chart(&x, &av, &Rat::one(), &ctrl).unwrap() {
            TangentGroupoidElement::Pair { range, .. } => {
                assert!(max_abs_diff(&range, &[0.75, -0.25]) < 1e-14);
            }
            _ => panic!("expected a pair arrow"),
        }
        // the domain bound applies to the dilated coordinates
        let big = AlgebraVector::new(vec![rat_int(3), Rat::zero(), Rat::zero()]);
        assert!(matches!(
            aexp.global_chart(&x, &big, &Rat::one(), &ctrl),
            Err(ChartError::DomainExceeded { .. })
        ));
    }

    #[test]
    fn flat_affine_charts_match_closed_form() {
        for chart in [
            bundled::heisenberg3_validated(),
            bundled::abelian_validated(3),
        ] {
            let exp = flat_canonical(&chart);
            let ctrl = ChartDomain::default();
            let mut s = Sampler::new(97);
            for _ in 0..20 {
                let x = s.rational_vec(chart.dim(), 2)
                    .iter()
                    .map(|c| c.clone() * rat(1, 4))
                    .collect::<Vec<_>>();
                let v = AlgebraVector::new(
                    s.rational_vec(chart.dim(), 2)
                        .iter()
                        .map(|c| c.clone() * rat(1, 3))
                        .collect(),
                );
                for t in [Rat::one(), rat(1, 2), rat(1, 4)] {
                    let numeric = match exp.global_chart(&x, &v, &t, &ctrl).unwrap() {
                        TangentGroupoidElement::Pair { range, .. } => range,
                        _ => unreachable!(),
                    };
                    let exact = match exp.global_chart_exact(&x, &v, &t).unwrap() {
                        ExactGroupoidElement::Pair { range, .. } => {
                            range.iter().map(rat_to_f64).collect::<Vec<_>>()
                        }
                        _ => unreachable!(),
                    };
                    assert!(
                        max_abs_diff(&numeric, &exact) < 1e-12,
                        "closed form mismatch at t = {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn chart_log_round_trip() {
        let chart = bundled::engel4_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let mut s = Sampler::new(131);
        for _ in 0..10 {
            let x: Vec<Rat> = s
                .rational_vec(4, 2)
                .iter()
                .map(|c| c.clone() * rat(1, 4))
                .collect();
            let v = AlgebraVector::new(
                s.rational_vec(4, 2)
                    .iter()
                    .map(|c| c.clone() * rat(1, 3))
                    .collect(),
            );
            for t in [Rat::one(), rat(1, 2), rat(1, 4)] {
                let arrow = exp.global_chart(&x, &v, &t, &ctrl).unwrap();
                let log = exp.chart_log(&arrow, &ctrl).unwrap();
                let expect: Vec<f64> = v.coords().iter().map(rat_to_f64).collect();
                assert!(
                    max_abs_diff(&log.v, &expect) < 1e-10,
                    "round trip error {} at t = {t}",
                    max_abs_diff(&log.v, &expect)
                );
            }
        }
        // unit arrows log to v = 0
        let x = vec![rat(1, 4), Rat::zero(), Rat::zero(), rat(-1, 2)];
        let unit = exp
            .global_chart(&x, &AlgebraVector::zero(4), &Rat::one(), &ctrl)
            .unwrap();
        let log = exp.chart_log(&unit, &ctrl).unwrap();
        assert!(log.v.iter().all(|&c| c.abs() < 1e-12));
    }

    #[test]
    fn multiply_pair_and_osculating() {
        let chart = bundled::heisenberg3_validated();
        let g = TangentGroupoidElement::Pair {
            range: vec![3.0, 0.0, 0.0],
            source: vec![2.0, 0.0, 0.0],
            t: 0.5,
        };
        let h = TangentGroupoidElement::Pair {
            range: vec![2.0, 0.0, 0.0],
            source: vec![1.0, 0.0, 0.0],
            t: 0.5,
        };
        match multiply(&chart, &g, &h).unwrap() {
            TangentGroupoidElement::Pair { range, source, t } => {
                assert_eq!(range, vec![3.0, 0.0, 0.0]);
                assert_eq!(source, vec![1.0, 0.0, 0.0]);
                assert_eq!(t, 0.5);
            }
            _ => panic!("expected a pair arrow"),
        }
        // arrows must chain
        assert!(matches!(
            multiply(&chart, &h, &g),
            Err(ChartError::NonComposable(_))
        ));
        // t must match
        let h2 = TangentGroupoidElement::Pair {
            range: vec![2.0, 0.0, 0.0],
            source: vec![1.0, 0.0, 0.0],
            t: 0.25,
        };
        assert!(matches!(multiply(&chart, &g, &h2), Err(ChartError::TMismatch)));

        // osculating fiber: unit law and the pinned convention
        let base = vec![Rat::zero(); 3];
        let e1 = TangentGroupoidElement::Osculating {
            base: base.clone(),
            v: AlgebraVector::basis(3, 0),
        };
        let e2 = TangentGroupoidElement::Osculating {
            base: base.clone(),
            v: AlgebraVector::basis(3, 1),
        };
        let unit = TangentGroupoidElement::Osculating {
            base: base.clone(),
            v: AlgebraVector::zero(3),
        };
        match multiply(&chart, &e1, &unit).unwrap() {
            TangentGroupoidElement::Osculating { v, .. } => {
                assert_eq!(v, AlgebraVector::basis(3, 0))
            }
            _ => unreachable!(),
        }
        // multiply(g = e2-element, h = e1-element) = bch(e1, e2):
        // the e3 slot carries +1/2
        match multiply(&chart, &e2, &e1).unwrap() {
            TangentGroupoidElement::Osculating { v, .. } => {
                assert_eq!(
                    v,
                    AlgebraVector::new(vec![rat_int(1), rat_int(1), rat(1, 2)])
                );
            }
            _ => unreachable!(),
        }
        // associativity on the fiber is inherited from BCH; spot-check
        let g3 = TangentGroupoidElement::Osculating {
            base: base.clone(),
            v: AlgebraVector::new(vec![rat(1, 2), rat(1, 3), rat(-1, 4)]),
        };
        let left = multiply(&chart, &multiply(&chart, &g3, &e2).unwrap(), &e1).unwrap();
        let right = multiply(&chart, &g3, &multiply(&chart, &e2, &e1).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    /// The spec-mandated symbolic derivation of the fiber-product
    /// convention: run the Heisenberg chart-pullback product with t as a
    /// polynomial variable, entirely in rational arithmetic, and observe
    /// which BCH order it equals.  The pinned `PRODUCT_CONVENTION` and the
    /// `multiply` implementation must match this derivation.
    #[test]
    fn convention_derivation() {
        let chart = bundled::heisenberg3_validated();
        let tvars = VarSet::with_cap(vec!["t"], 16);
        let t = Polynomial::var(&tvars, 0);
        let orders = chart.orders();
        let mut s = Sampler::new(201);
        for _ in 0..8 {
            let x = s.rational_vec(3, 2);
            let w = AlgebraVector::new(s.rational_vec(3, 2));
            let v = AlgebraVector::new(s.rational_vec(3, 2));
            // δ_t w with symbolic t: coordinate a carries t^{o_a}
            let dilate_sym = |u: &AlgebraVector| -> Vec<Polynomial> {
                u.coords()
                    .iter()
                    .zip(orders)
                    .map(|(c, &o)| {
                        let mut p = Polynomial::constant(&tvars, c.clone());
                        for _ in 0..o {
                            p = p.mul(&t).unwrap();
                        }
                        p
                    })
                    .collect()
            };
            // frame matrix evaluated at a point whose coordinates are
            // polynomials in t
            let frame_at = |point: &[Polynomial]| -> Vec<Vec<Polynomial>> {
                let n = chart.dim();
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|a| {
                                chart.frame_field(a).component(i).eval_poly(point).unwrap()
                            })
                            .collect()
                    })
                    .collect()
            };
            let apply = |m: &[Vec<Polynomial>], u: &[Polynomial]| -> Vec<Polynomial> {
                m.iter()
                    .map(|row| {
                        row.iter()
                            .zip(u)
                            .fold(Polynomial::zero(&tvars), |acc, (e, c)| {
                                acc.add(&e.mul(c).unwrap())
                            })
                    })
                    .collect()
            };
            let x_sym: Vec<Polynomial> = x
                .iter()
                .map(|c| Polynomial::constant(&tvars, c.clone()))
                .collect();
            // h: straight-line exponential from x with ψδ_t(w)
            let y1 = {
                let moved = apply(&frame_at(&x_sym), &dilate_sym(&w));
                x_sym
                    .iter()
                    .zip(&moved)
                    .map(|(a, b)| a.add(b))
                    .collect::<Vec<_>>()
            };
            // g: from range(h) with ψδ_t(v)
            let z = {
                let moved = apply(&frame_at(&y1), &dilate_sym(&v));
                y1.iter().zip(&moved).map(|(a, b)| a.add(b)).collect::<Vec<_>>()
            };
            // chart log of the composed arrow (z, x): solve F(x)c = z − x,
            // then undo the dilation
            let fx = chart.frame_matrix_at(&x).unwrap();
            let finv = fx.inverse().unwrap();
            let diff: Vec<Polynomial> = z.iter().zip(&x_sym).map(|(a, b)| a.sub(b)).collect();
            let mut u_coords = Vec::new();
            for a in 0..3 {
                let mut acc = Polynomial::zero(&tvars);
                for (j, d) in diff.iter().enumerate() {
                    acc = acc.add(&d.scale(finv.at(a, j)));
                }
                u_coords.push(acc.div_var_pow(0, orders[a]).unwrap());
            }
            // every coordinate of u(t) is constant in t and equals the
            // BCH product taken in the order bch(w, v)
            let alg = chart.osculating_algebra_at(&x).unwrap();
            let wv = alg.bch_product(&w, &v).unwrap();
            let vw = alg.bch_product(&v, &w).unwrap();
            for (a, u) in u_coords.iter().enumerate() {
                assert!(u.is_constant(), "u(t) must be constant in t, got {u}");
                assert_eq!(&u.constant_term(), wv.coord(a));
            }
            // the opposite order differs whenever [w, v] ≠ 0, so the
            // derivation genuinely pins an orientation
            if !alg.bracket(&w, &v).unwrap().is_zero() {
                assert_ne!(wv, vw);
            }
        }
    }

    #[test]
    fn deformation_exact_on_heisenberg() {
        let chart = bundled::heisenberg3_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = vec![rat(1, 4), rat(-1, 2), Rat::zero()];
        let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 3), rat(-1, 4)]);
        let w = AlgebraVector::new(vec![rat(-1, 3), rat(1, 2), rat(1, 5)]);
        let ts = [Rat::one(), rat(1, 2), rat(1, 4), rat(1, 8)];
        let report = exp
            .deformation_limit_check(&x, &v, &w, &ts, &ctrl)
            .unwrap();
        assert!(report.exact_pipeline);
        assert!(report.converged);
        for row in &report.rows {
            assert!(row.exact_zero, "u(t) differs from bch(w,v) at t = {}", row.t);
        }
    }

    #[test]
    fn deformation_abelian_is_componentwise_sum() {
        let chart = bundled::abelian_validated(3);
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = vec![Rat::zero(); 3];
        let v = AlgebraVector::new(vec![rat(1, 3), rat(-1, 4), rat(1, 5)]);
        let w = AlgebraVector::new(vec![rat(1, 7), rat(2, 5), rat(-1, 3)]);
        let ts = [Rat::one(), rat(1, 2), rat(1, 4)];
        let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
        assert_eq!(report.limit, v.add(&w));
        assert!(report.rows.iter().all(|r| r.exact_zero));
    }

    #[test]
    fn deformation_numeric_route_on_twisted_chart() {
        let chart = bundled::twisted_heisenberg_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = vec![Rat::zero(); 3];
        let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 4), rat(1, 8)]);
        let w = AlgebraVector::new(vec![rat(1, 4), rat(-1, 2), rat(1, 8)]);
        let ts: Vec<Rat> = (3..=8).map(|k| rat(1, 1 << k)).collect();
        let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
        assert!(!report.exact_pipeline);
        assert!(report.converged, "errors: {:?}", report.rows.iter().map(|r| r.error).collect::<Vec<_>>());
        // first-order convergence: each halving of t roughly halves e(t)
        for ratio in report.error_ratios() {
            assert!(
                (0.35..=0.65).contains(&ratio),
                "ratio {ratio} outside [0.35, 0.65]; errors {:?}",
                report.rows.iter().map(|r| r.error).collect::<Vec<_>>()
            );
        }
    }

    /// Non-graded connections genuinely break the t → 0 compatibility:
    /// a Christoffel entry raising the weight leaves a t-independent
    /// quadratic defect in the chart-pullback product, while an entry
    /// lowering the weight is suppressed by the dilations.
    #[test]
    fn non_graded_connection_breaks_deformation_limit() {
        let chart = bundled::heisenberg3_validated();
        let psi = Splitting::canonical(&chart);
        let ctrl = ChartDomain::default();
        let x = vec![Rat::zero(); 3];
        let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 4), rat(1, 8)]);
        let w = AlgebraVector::new(vec![rat(1, 4), rat(-1, 2), rat(1, 8)]);
        let ts: Vec<Rat> = (0..=8).map(|k| rat(1, 1 << k)).collect();

        // weight-raising entry Γ_{x,1}^{3}: the geodesic correction
        // (1/2)·Γ·(δ_t v)_1² sits at weight 2 and survives δ_t^{-1}
        // undiminished; the error plateaus at (1/2)·v1² = 1/8 exactly
        let mut raising = BTreeMap::new();
        raising.insert((0usize, 0usize, 2usize), Polynomial::one(chart.vars()));
        let conn = GradedConnection::new(&chart, raising).unwrap();
        assert!(!conn.validate().passed);
        let exp = ExponentialChart::new(&conn, &psi).unwrap();
        let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
        assert!(!report.converged);
        let last = report.rows.last().unwrap().error;
        assert!(
            (last - 0.125).abs() < 1e-6,
            "expected a persistent defect of 1/8, got {last}"
        );

        // weight-lowering entry Γ_{x,3}^{1}: its correction enters at a
        // higher t-order than the slot it lands in, so the limit survives
        let mut lowering = BTreeMap::new();
        lowering.insert((0usize, 2usize, 0usize), Polynomial::one(chart.vars()));
        let conn = GradedConnection::new(&chart, lowering).unwrap();
        assert!(!conn.validate().passed);
        let exp = ExponentialChart::new(&conn, &psi).unwrap();
        let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
        assert!(report.converged);
    }

    #[test]
    fn injectivity_probe_examples() {
        // flat coordinate frame: globally injective
        let abelian = bundled::abelian_validated(2);
        let exp = flat_canonical(&abelian);
        let report = exp.injectivity_probe(&ChartDomain::default(), 2000, 7);
        assert!(report.collision.is_none(), "{}", report.message);

        // curved chart, moderate radius: no collision at 10^4 samples
        let engel = bundled::engel4_validated();
        let eexp = flat_canonical(&engel);
        let ctrl = ChartDomain {
            radius: 0.5,
            ..ChartDomain::default()
        };
        let report = eexp.injectivity_probe(&ctrl, 10_000, 11);
        assert_eq!(report.samples, 10_000);
        assert!(report.collision.is_none(), "{}", report.message);
    }

    #[test]
    fn injectivity_probe_finds_periodic_collision() {
        // rotation/dilation frame: the exponential is 2π-periodic in the
        // rotation coefficient and contracts hard for negative radial
        // coefficients, so a huge radius produces coordinate collisions
        let chart = bundled::spiral2_validated();
        let exp = flat_canonical(&chart);
        let ctrl = ChartDomain {
            radius: 25.0,
            ..ChartDomain::default()
        };
        let report = exp.injectivity_probe(&ctrl, 4000, 13);
        assert!(report.collision.is_some(), "{}", report.message);
        let c = report.collision.unwrap();
        assert!(c.arrow_distance <= 1e-9);
        // the colliding velocities are genuinely far apart
        let vdist = c
            .v1
            .iter()
            .zip(&c.v2)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(vdist > 1e-6);
    }
}
