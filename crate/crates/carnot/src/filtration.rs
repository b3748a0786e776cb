//! Filtered manifolds as ordered polynomial frames on a chart.
//!
//! A chart consists of `n` polynomial frame fields `X_1 … X_n` spanning the
//! tangent space, each labelled with an order `o_a ∈ {1..N}`.  The subbundle
//! `H^i` is the span of the frame fields of order ≤ i.  Validation checks,
//! at a finite set of rational sample points, that the frame is invertible
//! and that `[X_a, X_b]` lies in the span of the fields of order
//! ≤ min(o_a + o_b, N) — the Lie filtration condition.  Charts that pass
//! become [`ValidatedChart`]s, the token the rest of the crate requires.

use crate::graded_algebra::GradedNilpotentLieAlgebra;
use crate::linalg::{poly_solve, LinalgError, PolySolveError, RatMat};
use crate::polyfields::{PolyError, PolyVectorField, Polynomial, VarSet};
use crate::rational::{format_rat, Rat};
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

/// Fixed seed for the default pseudorandom sample points.
pub const SAMPLE_POINT_SEED: u64 = 0x0517_ca11;

/// Number of pseudorandom sample points joined to the origin by default.
pub const DEFAULT_SAMPLE_COUNT: usize = 16;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FiltrationError {
    #[error("malformed chart: {0}")]
    Shape(String),
    #[error("frame is singular at point ({0})")]
    SingularFrame(String),
    #[error("chart failed filtration validation: {0}")]
    InvalidChart(String),
    #[error("frame coordinates of [X_{a}, X_{b}] are not polynomial: {detail}")]
    NonPolynomialBracket { a: usize, b: usize, detail: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<LinalgError> for FiltrationError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => FiltrationError::SingularFrame("unspecified".to_string()),
            LinalgError::Dimension(d) => FiltrationError::Shape(d),
        }
    }
}

pub(crate) fn format_point(p: &[Rat]) -> String {
    p.iter().map(format_rat).collect::<Vec<_>>().join(", ")
}

/// A filtered manifold chart: polynomial frame with nondecreasing orders.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredChart {
    vars: Arc<VarSet>,
    frame: Vec<PolyVectorField>,
    orders: Vec<u32>,
    depth: u32,
    sample_points: Vec<Vec<Rat>>,
}

impl FilteredChart {
    pub fn new(
        vars: Arc<VarSet>,
        frame: Vec<PolyVectorField>,
        orders: Vec<u32>,
        depth: u32,
        sample_points: Vec<Vec<Rat>>,
    ) -> Result<FilteredChart, FiltrationError> {
        let n = vars.len();
        if frame.len() != n {
            return Err(FiltrationError::Shape(format!(
                "{} frame fields for a {n}-dimensional chart",
                frame.len()
            )));
        }
        for (i, field) in frame.iter().enumerate() {
            if field.dim() != n {
                return Err(FiltrationError::Shape(format!(
                    "frame field {} has {} components, expected {n}",
                    i + 1,
                    field.dim()
                )));
            }
            if field.vars().names() != vars.names() {
                return Err(FiltrationError::Shape(format!(
                    "frame field {} uses different variables",
                    i + 1
                )));
            }
        }
        if orders.len() != n {
            return Err(FiltrationError::Shape(format!(
                "{} orders for {n} frame fields",
                orders.len()
            )));
        }
        if depth == 0 {
            return Err(FiltrationError::Shape("depth must be positive".to_string()));
        }
        if orders.iter().any(|&o| o == 0 || o > depth) {
            return Err(FiltrationError::Shape(format!(
                "orders must lie in 1..={depth}"
            )));
        }
        if orders.windows(2).any(|w| w[0] > w[1]) {
            return Err(FiltrationError::Shape(
                "orders must be nondecreasing".to_string(),
            ));
        }
        if sample_points.is_empty() {
            return Err(FiltrationError::Shape(
                "at least one sample point required".to_string(),
            ));
        }
        for p in &sample_points {
            if p.len() != n {
                return Err(FiltrationError::Shape(format!(
                    "sample point ({}) has dimension {}, chart has {n}",
                    format_point(p),
                    p.len()
                )));
            }
        }
        Ok(FilteredChart {
            vars,
            frame,
            orders,
            depth,
            sample_points,
        })
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn frame(&self) -> &[PolyVectorField] {
        &self.frame
    }

    pub fn frame_field(&self, a: usize) -> &PolyVectorField {
        &self.frame[a]
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn sample_points(&self) -> &[Vec<Rat>] {
        &self.sample_points
    }

    /// Ranks `r_i = #{a : o_a ≤ i}` of the subbundles `H^i`.
    pub fn ranks(&self) -> Vec<usize> {
        (1..=self.depth)
            .map(|i| self.orders.iter().filter(|&&o| o <= i).count())
            .collect()
    }

    /// Frame matrix `F(p)` with columns `X_a(p)`.
    pub fn frame_matrix_at(&self, p: &[Rat]) -> Result<RatMat, FiltrationError> {
        let cols: Vec<Vec<Rat>> = self
            .frame
            .iter()
            .map(|x| x.evaluate(p))
            .collect::<Result<_, _>>()?;
        Ok(RatMat::from_columns(&cols))
    }

    /// Symbolic frame matrix with polynomial entries, `F[i][a] = X_a^i`.
    pub fn frame_matrix_poly(&self) -> Vec<Vec<Polynomial>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|a| self.frame[a].component(i).clone()).collect())
            .collect()
    }

    /// Unique coefficients `c` with `Σ c_a X_a(p) = v`, by exact solve.
    pub fn frame_coordinates_at(&self, p: &[Rat], v: &[Rat]) -> Result<Vec<Rat>, FiltrationError> {
        let f = self.frame_matrix_at(p)?;
        f.solve(v)
            .map_err(|_| FiltrationError::SingularFrame(format_point(p)))
    }

    /// Validates the chart and wraps it as a [`ValidatedChart`].
    pub fn validated(self) -> Result<ValidatedChart, Box<FiltrationReport>> {
        let report = validate_filtration(&self);
        if !report.passed() {
            return Err(Box::new(report));
        }
        Ok(ValidatedChart(Arc::new(ValidatedInner {
            chart: self,
            frame_brackets: OnceLock::new(),
            bracket_coords: OnceLock::new(),
            autoparallel: OnceLock::new(),
        })))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

/// Outcome of [`validate_filtration`]; an entry per check, verified at the
/// chart's sample points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationReport {
    pub checks: Vec<FiltrationCheck>,
}

impl FiltrationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&FiltrationCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

impl fmt::Display for FiltrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.witness {
                None => writeln!(f, "{}: pass (verified at sample points)", c.name)?,
                Some(w) => writeln!(f, "{}: FAIL ({w})", c.name)?,
            }
        }
        Ok(())
    }
}

/// Checks frame invertibility and the Lie filtration condition
/// `[Γ(H^i), Γ(H^j)] ⊆ Γ(H^{i+j})` at every sample point, reporting a
/// `(pair, point)` witness on failure.
pub fn validate_filtration(chart: &FilteredChart) -> FiltrationReport {
    let mut checks = Vec::new();
    let n = chart.dim();

    let mut invertible = None;
    for p in chart.sample_points() {
        match chart.frame_matrix_at(p) {
            Ok(f) if f.is_invertible() => {}
            _ => {
                invertible = Some(format!("frame singular at point ({})", format_point(p)));
                break;
            }
        }
    }
    checks.push(FiltrationCheck {
        name: "frame_invertible",
        passed: invertible.is_none(),
        witness: invertible.clone(),
    });

    let mut computable = None;
    let mut condition = None;
    if invertible.is_none() {
        'pairs: for a in 0..n {
            for b in (a + 1)..n {
                let bracket = match chart.frame[a].lie_bracket(&chart.frame[b]) {
                    Ok(x) => x,
                    Err(e) => {
                        computable = Some(format!("[X_{}, X_{}]: {e}", a + 1, b + 1));
                        break 'pairs;
                    }
                };
                let bound = (chart.orders[a] + chart.orders[b]).min(chart.depth);
                for p in chart.sample_points() {
                    let value = match bracket.evaluate(p) {
                        Ok(v) => v,
                        Err(e) => {
                            computable = Some(format!("[X_{}, X_{}] at point: {e}", a + 1, b + 1));
                            break 'pairs;
                        }
                    };
                    let coords = chart
                        .frame_coordinates_at(p, &value)
                        .expect("frame invertibility already checked");
                    for (c, coeff) in coords.iter().enumerate() {
                        if chart.orders[c] > bound && !coeff.is_zero() {
                            condition = Some(format!(
                                "pair ({},{}) at point ({}): [X_{},X_{}] has coefficient {} on \
                                 X_{} of order {} > {}",
                                a + 1,
                                b + 1,
                                format_point(p),
                                a + 1,
                                b + 1,
                                format_rat(coeff),
                                c + 1,
                                chart.orders[c],
                                bound
                            ));
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }
    checks.push(FiltrationCheck {
        name: "brackets_computable",
        passed: computable.is_none(),
        witness: computable,
    });
    checks.push(FiltrationCheck {
        name: "bracket_filtration",
        passed: condition.is_none(),
        witness: condition,
    });

    FiltrationReport { checks }
}

#[derive(Debug)]
struct ValidatedInner {
    chart: FilteredChart,
    frame_brackets: OnceLock<Result<Arc<Vec<Vec<PolyVectorField>>>, FiltrationError>>,
    bracket_coords: OnceLock<Result<Arc<Vec<Vec<Vec<Polynomial>>>>, FiltrationError>>,
    autoparallel: OnceLock<bool>,
}

/// A chart that has passed [`validate_filtration`].  Cheap to clone; caches
/// the symbolic frame brackets and their frame coordinates.
#[derive(Debug, Clone)]
pub struct ValidatedChart(Arc<ValidatedInner>);

impl Deref for ValidatedChart {
    type Target = FilteredChart;

    fn deref(&self) -> &FilteredChart {
        &self.0.chart
    }
}

impl PartialEq for ValidatedChart {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.chart == other.0.chart
    }
}

impl ValidatedChart {
    pub fn chart(&self) -> &FilteredChart {
        &self.0.chart
    }

    /// Symbolic brackets `[X_a, X_b]` for all pairs, cached.
    pub fn frame_brackets(&self) -> Result<Arc<Vec<Vec<PolyVectorField>>>, FiltrationError> {
        self.0
            .frame_brackets
            .get_or_init(|| {
                let n = self.dim();
                let mut all = Vec::with_capacity(n);
                for a in 0..n {
                    let mut row = Vec::with_capacity(n);
                    for b in 0..n {
                        row.push(self.frame()[a].lie_bracket(&self.frame()[b])?);
                    }
                    all.push(row);
                }
                Ok(Arc::new(all))
            })
            .clone()
    }

    /// Symbolic frame coordinates `c_{ab}^c(x)` with
    /// `[X_a, X_b] = Σ_c c_{ab}^c(x) X_c`, cached.  Errors when the exact
    /// solve has no polynomial solution (possible for frames with
    /// non-constant determinant).
    pub fn bracket_coordinates(&self) -> Result<Arc<Vec<Vec<Vec<Polynomial>>>>, FiltrationError> {
        self.0
            .bracket_coords
            .get_or_init(|| {
                let n = self.dim();
                let brackets = self.frame_brackets()?;
                let f = self.frame_matrix_poly();
                let zero = vec![Polynomial::zero(self.vars()); n];
                let mut table = vec![vec![zero; n]; n];
                for a in 0..n {
                    for b in (a + 1)..n {
                        let rhs: Vec<Polynomial> = brackets[a][b].components().to_vec();
                        let coords = poly_solve(&f, &rhs).map_err(|e| match e {
                            PolySolveError::Singular => {
                                FiltrationError::SingularFrame("symbolic frame matrix".to_string())
                            }
                            other => FiltrationError::NonPolynomialBracket {
                                a: a + 1,
                                b: b + 1,
                                detail: other.to_string(),
                            },
                        })?;
                        table[b][a] = coords.iter().map(Polynomial::neg).collect();
                        table[a][b] = coords;
                    }
                }
                Ok(Arc::new(table))
            })
            .clone()
    }

    /// True when every symmetrized frame derivative
    /// `X_a(X_b^i) + X_b(X_a^i)` vanishes identically.  For such frames the
    /// geodesics of the frame-flat connection are coordinate-affine, which
    /// enables the exact rational chart pipeline.
    pub fn frame_is_autoparallel(&self) -> bool {
        *self.0.autoparallel.get_or_init(|| {
            let n = self.dim();
            for a in 0..n {
                for b in a..n {
                    for i in 0..n {
                        let fwd = self.frame()[a].apply(self.frame()[b].component(i));
                        let bwd = self.frame()[b].apply(self.frame()[a].component(i));
                        match (fwd, bwd) {
                            (Ok(f), Ok(g)) => {
                                if !f.add(&g).is_zero() {
                                    return false;
                                }
                            }
                            _ => return false,
                        }
                    }
                }
            }
            true
        })
    }

    /// See [`osculating_algebra_at`].
    pub fn osculating_algebra_at(
        &self,
        p: &[Rat],
    ) -> Result<GradedNilpotentLieAlgebra, FiltrationError> {
        osculating_algebra_at(self, p)
    }
}

/// The osculating graded nilpotent Lie algebra at a point: weights are the
/// frame orders, and `c_{ab}^k` is the `k`-th frame coordinate of
/// `[X_a, X_b](p)` when `o_k = o_a + o_b` (the grading class), zero
/// otherwise.  Lower-order components are discarded, never stored, so
/// gradedness holds by construction.
pub fn osculating_algebra_at(
    chart: &ValidatedChart,
    p: &[Rat],
) -> Result<GradedNilpotentLieAlgebra, FiltrationError> {
    let n = chart.dim();
    let frame = chart.frame_matrix_at(p)?;
    if !frame.is_invertible() {
        return Err(FiltrationError::SingularFrame(format_point(p)));
    }
    let brackets = chart.frame_brackets()?;
    let mut constants = vec![vec![vec![Rat::zero(); n]; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let value = brackets[a][b].evaluate(p)?;
            let coords = frame
                .solve(&value)
                .map_err(|_| FiltrationError::SingularFrame(format_point(p)))?;
            for k in 0..n {
                if chart.orders()[k] == chart.orders()[a] + chart.orders()[b]
                    && !coords[k].is_zero()
                {
                    constants[a][b][k] = coords[k].clone();
                    constants[b][a][k] = -coords[k].clone();
                }
            }
        }
    }
    Ok(
        GradedNilpotentLieAlgebra::new(chart.orders().to_vec(), constants)
            .expect("orders are valid weights"),
    )
}

/// A splitting of the associated graded bundle back into the frame: the
/// degree-`o_a` class of `X_a` maps to `X_a + Σ_{o_b < o_a} s_{ab}(x)·X_b`.
/// The trivial corrections give the canonical splitting.
#[derive(Debug, Clone)]
pub struct Splitting {
    chart: ValidatedChart,
    corrections: BTreeMap<(usize, usize), Polynomial>,
}

impl Splitting {
    /// Splitting with the given corrections `s_{ab}` (zero-based indices,
    /// requires `o_b < o_a`).
    pub fn new(
        chart: &ValidatedChart,
        corrections: BTreeMap<(usize, usize), Polynomial>,
    ) -> Result<Splitting, FiltrationError> {
        for (&(a, b), poly) in &corrections {
            if a >= chart.dim() || b >= chart.dim() {
                return Err(FiltrationError::Shape(format!(
                    "correction index ({},{}) out of range",
                    a + 1,
                    b + 1
                )));
            }
            if chart.orders()[b] >= chart.orders()[a] {
                return Err(FiltrationError::Shape(format!(
                    "correction s[{}][{}] requires order {} < {}",
                    a + 1,
                    b + 1,
                    chart.orders()[b],
                    chart.orders()[a]
                )));
            }
            if poly.vars().names() != chart.vars().names() {
                return Err(FiltrationError::Shape(format!(
                    "correction s[{}][{}] uses different variables",
                    a + 1,
                    b + 1
                )));
            }
        }
        Ok(Splitting {
            chart: chart.clone(),
            corrections,
        })
    }

    /// The canonical splitting: the frame itself, all corrections zero.
    pub fn canonical(chart: &ValidatedChart) -> Splitting {
        Splitting {
            chart: chart.clone(),
            corrections: BTreeMap::new(),
        }
    }

    /// Seeded random splitting with low-degree polynomial corrections.
    pub fn random(chart: &ValidatedChart, sampler: &mut crate::sampling::Sampler) -> Splitting {
        let mut corrections = BTreeMap::new();
        let n = chart.dim();
        for a in 0..n {
            for b in 0..n {
                if chart.orders()[b] < chart.orders()[a] {
                    let p = sampler.polynomial(chart.vars(), 2, 1);
                    if !p.is_zero() {
                        corrections.insert((a, b), p);
                    }
                }
            }
        }
        Splitting {
            chart: chart.clone(),
            corrections,
        }
    }

    pub fn chart(&self) -> &ValidatedChart {
        &self.chart
    }

    pub fn corrections(&self) -> &BTreeMap<(usize, usize), Polynomial> {
        &self.corrections
    }

    pub fn is_canonical(&self) -> bool {
        self.corrections.is_empty()
    }

    /// Correction polynomial `s_{ab}`, zero when absent.
    pub fn correction(&self, a: usize, b: usize) -> Polynomial {
        self.corrections
            .get(&(a, b))
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(self.chart.vars()))
    }

    /// The matrix of the splitting in the frame basis: entry `(b, a)` is
    /// `δ_ab + s_{ab}(x)`; unitriangular with respect to the order grading.
    pub fn matrix_poly(&self) -> Vec<Vec<Polynomial>> {
        let n = self.chart.dim();
        let vars = self.chart.vars();
        let mut m = vec![vec![Polynomial::zero(vars); n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Polynomial::one(vars);
        }
        for (&(a, b), poly) in &self.corrections {
            m[b][a] = poly.clone();
        }
        m
    }

    /// Splitting matrix evaluated at a point.
    pub fn matrix_at(&self, p: &[Rat]) -> Result<RatMat, FiltrationError> {
        let poly = self.matrix_poly();
        let n = self.chart.dim();
        let mut m = RatMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                *m.at_mut(i, j) = poly[i][j].eval(p)?;
            }
        }
        Ok(m)
    }

    /// Symbolic inverse of the splitting matrix.  The correction block is
    /// nilpotent (it strictly lowers order), so the Neumann series
    /// terminates after depth steps.
    pub fn inverse_matrix_poly(&self) -> Result<Vec<Vec<Polynomial>>, PolyError> {
        let n = self.chart.dim();
        let vars = self.chart.vars();
        let mut s = vec![vec![Polynomial::zero(vars); n]; n];
        for (&(a, b), poly) in &self.corrections {
            s[b][a] = poly.clone();
        }
        let mut inv = identity_poly(vars, n);
        let mut power = identity_poly(vars, n);
        for step in 1..=self.chart.depth() {
            power = mat_mul_poly(&power, &s)?;
            if power.iter().all(|row| row.iter().all(Polynomial::is_zero)) {
                break;
            }
            let signed: Vec<Vec<Polynomial>> = power
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|p| if step % 2 == 1 { p.neg() } else { p.clone() })
                        .collect()
                })
                .collect();
            inv = mat_add_poly(&inv, &signed);
        }
        Ok(inv)
    }

    /// Coordinate matrix of `ψ` composed with the graded frame: column `a`
    /// holds the coordinates of `ψ(σ_{o_a}-class of X_a)`; equals
    /// `F(x) · M_ψ(x)`.
    pub fn coordinate_matrix_poly(&self) -> Result<Vec<Vec<Polynomial>>, PolyError> {
        mat_mul_poly(&self.chart.frame_matrix_poly(), &self.matrix_poly())
    }
}

pub(crate) fn identity_poly(vars: &Arc<VarSet>, n: usize) -> Vec<Vec<Polynomial>> {
    let mut m = vec![vec![Polynomial::zero(vars); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Polynomial::one(vars);
    }
    m
}

pub(crate) fn mat_mul_poly(
    a: &[Vec<Polynomial>],
    b: &[Vec<Polynomial>],
) -> Result<Vec<Vec<Polynomial>>, PolyError> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![a[0][0].zero_like(); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = a[0][0].zero_like();
            for k in 0..inner {
                if a[i][k].is_zero() || b[k][j].is_zero() {
                    continue;
                }
                acc = acc.add(&a[i][k].mul(&b[k][j])?);
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

pub(crate) fn mat_add_poly(a: &[Vec<Polynomial>], b: &[Vec<Polynomial>]) -> Vec<Vec<Polynomial>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect())
        .collect()
}

/// Default sample set: the origin plus pseudorandom rational points from
/// the fixed seed.
pub fn default_sample_points(dim: usize) -> Vec<Vec<Rat>> {
    let mut sampler = crate::sampling::Sampler::new(SAMPLE_POINT_SEED);
    let mut points = vec![vec![Rat::zero(); dim]];
    for _ in 0..DEFAULT_SAMPLE_COUNT {
        points.push(sampler.point(dim));
    }
    points
}
