//! Sections of the tangent Lie algebroid of a filtered manifold.
//!
//! Working over a chart, a section of `TM × ℝ` is written in the frame as
//! `Σ_a p_a(x,t)·X_a` with polynomial coefficients.  The module of sections
//! of the tangent algebroid consists of those sections whose coefficient of
//! an order-`m` frame field is divisible by `t^m`; in that representation
//! the Taylor-coefficient condition "the k-th t-derivative at t = 0 has
//! order ≤ k" becomes a divisibility check, and the evaluation maps, the
//! splitting isomorphism `Φ^ψ` and its inverse, and the fiberwise bracket
//! are all exact polynomial algebra.

use crate::filtration::{format_point, FiltrationError, Splitting, ValidatedChart};
use crate::graded_algebra::AlgebraVector;
use crate::linalg::LinalgError;
use crate::polyfields::{PolyError, PolyVectorField, Polynomial, VarSet};
use crate::rational::Rat;
use num::Zero;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SectionError {
    #[error("sections live on different charts")]
    ChartMismatch,
    #[error(
        "not in the section module: coefficient of X_{field} (order {order}) has a nonzero \
         t^{t_degree} term"
    )]
    MembershipViolated {
        field: usize,
        order: u32,
        t_degree: u32,
    },
    #[error("evaluation at t = 0 must go through the graded evaluation map")]
    EvAtZero,
    #[error("frame is singular at point ({0})")]
    SingularFrame(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
}

impl From<LinalgError> for SectionError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => SectionError::SingularFrame("unspecified".to_string()),
            LinalgError::Dimension(d) => SectionError::Poly(PolyError::VarMismatch(d, String::new())),
        }
    }
}

/// Result of the membership test, with a witness on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    Member,
    /// Coefficient of frame field `field` (zero-based) has order
    /// `order = o_field` but a nonzero coefficient at `t^{t_degree}` with
    /// `t_degree < order`.
    Violation { field: usize, order: u32, t_degree: u32 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }
}

fn section_vars(chart: &ValidatedChart) -> Arc<VarSet> {
    chart.vars().extended("t")
}

fn check_section_coeffs(
    chart: &ValidatedChart,
    coeffs: &[Polynomial],
) -> Result<Arc<VarSet>, SectionError> {
    let vars = section_vars(chart);
    if coeffs.len() != chart.dim() {
        return Err(SectionError::Poly(PolyError::PointDimension {
            got: coeffs.len(),
            want: chart.dim(),
        }));
    }
    for c in coeffs {
        if c.vars().names() != vars.names() {
            return Err(SectionError::Poly(PolyError::VarMismatch(
                c.vars().names().join(","),
                vars.names().join(","),
            )));
        }
    }
    Ok(vars)
}

/// A section of `TM × ℝ` in frame coefficients: `Σ_a p_a(x,t)·X_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSection {
    chart: ValidatedChart,
    coeffs: Vec<Polynomial>,
}

impl HSection {
    pub fn new(chart: &ValidatedChart, coeffs: Vec<Polynomial>) -> Result<HSection, SectionError> {
        check_section_coeffs(chart, &coeffs)?;
        Ok(HSection {
            chart: chart.clone(),
            coeffs,
        })
    }

    pub fn zero(chart: &ValidatedChart) -> HSection {
        let vars = section_vars(chart);
        HSection {
            chart: chart.clone(),
            coeffs: vec![Polynomial::zero(&vars); chart.dim()],
        }
    }

    /// The section `t^m · X_a`: a vector field of order m glued to its
    /// grading class.
    pub fn monomial(chart: &ValidatedChart, a: usize, m: u32) -> Result<HSection, SectionError> {
        let vars = section_vars(chart);
        let t = chart.dim();
        let mut coeffs = vec![Polynomial::zero(&vars); chart.dim()];
        coeffs[a] = Polynomial::one(&vars).mul_var_pow(t, m)?;
        HSection::new(chart, coeffs)
    }

    pub fn chart(&self) -> &ValidatedChart {
        &self.chart
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    pub fn vars(&self) -> Arc<VarSet> {
        section_vars(&self.chart)
    }

    fn t_index(&self) -> usize {
        self.chart.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Polynomial::is_zero)
    }

    pub fn add(&self, other: &HSection) -> Result<HSection, SectionError> {
        if self.chart != other.chart {
            return Err(SectionError::ChartMismatch);
        }
        Ok(HSection {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    /// Multiplies by a function on `M × ℝ` (module structure).
    pub fn scale_poly(&self, f: &Polynomial) -> Result<HSection, SectionError> {
        Ok(HSection {
            chart: self.chart.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|p| p.mul(f))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Membership in the section module: `t^{o_a}` must divide `p_a` for
    /// every frame index; equivalently every t-Taylor coefficient at
    /// `t = 0` of the section has the right order.  The witness is the
    /// first `(a, k)` with `k < o_a` and a nonzero `t^k` coefficient.
    pub fn membership(&self) -> Membership {
        let t = self.t_index();
        for (a, p) in self.coeffs.iter().enumerate() {
            let order = self.chart.orders()[a];
            if let Some(min) = p.min_degree_in(t) {
                if min < order {
                    return Membership::Violation {
                        field: a,
                        order,
                        t_degree: min,
                    };
                }
            }
        }
        Membership::Member
    }

    fn require_membership(&self) -> Result<(), SectionError> {
        match self.membership() {
            Membership::Member => Ok(()),
            Membership::Violation {
                field,
                order,
                t_degree,
            } => Err(SectionError::MembershipViolated {
                field: field + 1,
                order,
                t_degree,
            }),
        }
    }

    /// Restriction to a fixed `t ≠ 0`, a plain vector field on the chart.
    pub fn ev_t(&self, t0: &Rat) -> Result<PolyVectorField, SectionError> {
        if t0.is_zero() {
            return Err(SectionError::EvAtZero);
        }
        self.ev_t_unchecked(t0)
    }

    fn ev_t_unchecked(&self, t0: &Rat) -> Result<PolyVectorField, SectionError> {
        let t = self.t_index();
        let mut acc = PolyVectorField::zero(self.chart.vars(), self.chart.dim());
        for (a, p) in self.coeffs.iter().enumerate() {
            let restricted = p.subst(t, t0).drop_var(t, self.chart.vars())?;
            if restricted.is_zero() {
                continue;
            }
            acc = acc.add(&self.chart.frame()[a].scale_poly(&restricted)?)?;
        }
        Ok(acc)
    }

    /// The raw restriction at `t = 0` (used to confirm that the anchor of
    /// a member section vanishes there).
    pub fn ev_zero_raw(&self) -> Result<PolyVectorField, SectionError> {
        self.ev_t_unchecked(&Rat::zero())
    }

    /// Graded evaluation at `t = 0`: the degree-`i` component collects the
    /// `t^{o_a}` Taylor coefficients of the order-`i` frame coefficients.
    /// Requires membership.
    pub fn ev0h(&self) -> Result<GradedSection, SectionError> {
        self.require_membership()?;
        let t = self.t_index();
        let coeffs: Vec<Polynomial> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(a, p)| p.coeff_of(t, self.chart.orders()[a]))
            .collect();
        GradedSection::new(&self.chart, coeffs)
    }

    /// Fiberwise Lie bracket with `t` as a parameter.  Both sections must
    /// belong to the module; the result does again (Lie filtration).
    pub fn algebroid_bracket(&self, other: &HSection) -> Result<HSection, SectionError> {
        if self.chart != other.chart {
            return Err(SectionError::ChartMismatch);
        }
        self.require_membership()?;
        other.require_membership()?;
        let vars = self.vars();
        let n = self.chart.dim();
        let table = self.chart.bracket_coordinates()?;
        let frame_lifted: Vec<PolyVectorField> = self
            .chart
            .frame()
            .iter()
            .map(|x| x.lift(&vars))
            .collect::<Result<_, _>>()?;
        let mut out = vec![Polynomial::zero(&vars); n];
        for c in 0..n {
            let mut acc = Polynomial::zero(&vars);
            // structure part: Σ_{a,b} p_a q_b c_{ab}^c
            for a in 0..n {
                if self.coeffs[a].is_zero() {
                    continue;
                }
                for b in 0..n {
                    if other.coeffs[b].is_zero() || table[a][b][c].is_zero() {
                        continue;
                    }
                    let coeff = table[a][b][c].lift(&vars)?;
                    acc = acc.add(&self.coeffs[a].mul(&other.coeffs[b])?.mul(&coeff)?);
                }
            }
            // derivative part: Σ_a p_a·X_a(q_c) − Σ_b q_b·X_b(p_c)
            for a in 0..n {
                if !self.coeffs[a].is_zero() {
                    acc = acc.add(&self.coeffs[a].mul(&frame_lifted[a].apply(&other.coeffs[c])?)?);
                }
                if !other.coeffs[a].is_zero() {
                    acc = acc.sub(&other.coeffs[a].mul(&frame_lifted[a].apply(&self.coeffs[c])?)?);
                }
            }
            out[c] = acc;
        }
        let result = HSection {
            chart: self.chart.clone(),
            coeffs: out,
        };
        debug_assert!(result.membership().is_member());
        Ok(result)
    }
}

/// A section of the graded bundle over `M × ℝ`: `Σ_a q_a(x,t)·σ_{o_a}(X_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSection {
    chart: ValidatedChart,
    coeffs: Vec<Polynomial>,
}

impl GradedSection {
    pub fn new(
        chart: &ValidatedChart,
        coeffs: Vec<Polynomial>,
    ) -> Result<GradedSection, SectionError> {
        check_section_coeffs(chart, &coeffs)?;
        Ok(GradedSection {
            chart: chart.clone(),
            coeffs,
        })
    }

    pub fn zero(chart: &ValidatedChart) -> GradedSection {
        let vars = section_vars(chart);
        GradedSection {
            chart: chart.clone(),
            coeffs: vec![Polynomial::zero(&vars); chart.dim()],
        }
    }

    /// Constant section `σ_{o_a}(X_a)`.
    pub fn basis(chart: &ValidatedChart, a: usize) -> GradedSection {
        let vars = section_vars(chart);
        let mut coeffs = vec![Polynomial::zero(&vars); chart.dim()];
        coeffs[a] = Polynomial::one(&vars);
        GradedSection {
            chart: chart.clone(),
            coeffs,
        }
    }

    /// Seeded random graded section with low-degree coefficients.
    pub fn random(chart: &ValidatedChart, sampler: &mut crate::sampling::Sampler) -> GradedSection {
        let vars = section_vars(chart);
        let coeffs = (0..chart.dim())
            .map(|_| sampler.polynomial(&vars, 2, 2))
            .collect();
        GradedSection {
            chart: chart.clone(),
            coeffs,
        }
    }

    pub fn chart(&self) -> &ValidatedChart {
        &self.chart
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Polynomial::is_zero)
    }

    /// Restriction to `t = t0` (a section of the graded bundle over `M`).
    pub fn restrict_t(&self, t0: &Rat) -> GradedSection {
        let t = self.chart.dim();
        GradedSection {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|p| p.subst(t, t0)).collect(),
        }
    }

    /// Fiber value at a point, at `t = t0`.
    pub fn value_at(&self, p: &[Rat], t0: &Rat) -> Result<AlgebraVector, SectionError> {
        let mut point = p.to_vec();
        point.push(t0.clone());
        let coords = self
            .coeffs
            .iter()
            .map(|q| q.eval(&point))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AlgebraVector::new(coords))
    }
}

/// The splitting isomorphism `Φ^ψ`: sends a graded section `𝕐` to the
/// section `ψ(δ_t 𝕐)` of `TM × ℝ`.  In frame coefficients
/// `p_b = Σ_a ψ-matrix[b][a] · t^{o_a} · q_a`, which lands in the section
/// module by construction.
pub fn phi_psi(psi: &Splitting, section: &GradedSection) -> Result<HSection, SectionError> {
    if psi.chart() != section.chart() {
        return Err(SectionError::ChartMismatch);
    }
    let chart = section.chart();
    let vars = section_vars(chart);
    let t = chart.dim();
    let n = chart.dim();
    let m = psi.matrix_poly();
    let dilated: Vec<Polynomial> = section
        .coeffs
        .iter()
        .enumerate()
        .map(|(a, q)| q.mul_var_pow(t, chart.orders()[a]))
        .collect::<Result<_, _>>()?;
    let mut out = vec![Polynomial::zero(&vars); n];
    for b in 0..n {
        let mut acc = Polynomial::zero(&vars);
        for (a, d) in dilated.iter().enumerate() {
            if m[b][a].is_zero() || d.is_zero() {
                continue;
            }
            acc = acc.add(&m[b][a].lift(&vars)?.mul(d)?);
        }
        out[b] = acc;
    }
    let result = HSection {
        chart: chart.clone(),
        coeffs: out,
    };
    debug_assert!(result.membership().is_member());
    Ok(result)
}

/// Inverse of [`phi_psi`]: peels off the splitting matrix by its exact
/// unitriangular inverse, then divides the degree-`o_a` coefficient by
/// `t^{o_a}`.  Requires membership (otherwise the division is impossible).
pub fn phi_psi_inverse(psi: &Splitting, section: &HSection) -> Result<GradedSection, SectionError> {
    if psi.chart() != section.chart() {
        return Err(SectionError::ChartMismatch);
    }
    section.require_membership()?;
    let chart = section.chart();
    let vars = section_vars(chart);
    let t = chart.dim();
    let n = chart.dim();
    let minv = psi.inverse_matrix_poly()?;
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mut acc = Polynomial::zero(&vars);
        for b in 0..n {
            if minv[a][b].is_zero() || section.coeffs[b].is_zero() {
                continue;
            }
            acc = acc.add(&minv[a][b].lift(&vars)?.mul(&section.coeffs[b])?);
        }
        out.push(acc.div_var_pow(t, chart.orders()[a])?);
    }
    GradedSection::new(chart, out)
}

/// The matrix of `δ_t^{-1} ∘ φ^{-1} ∘ ψ ∘ δ_t` in the graded basis at a
/// point, with `t` symbolic: entry `(b, a)` is the rational
/// `(M_φ^{-1} M_ψ)[b][a]` times `t^{o_a − o_b}`.  Unitriangular in the
/// order grading, identity at `t = 0`.
pub fn transition_matrix(
    psi: &Splitting,
    phi: &Splitting,
    p: &[Rat],
) -> Result<Vec<Vec<Polynomial>>, SectionError> {
    if psi.chart() != phi.chart() {
        return Err(SectionError::ChartMismatch);
    }
    let chart = psi.chart();
    let n = chart.dim();
    let mpsi = psi.matrix_at(p)?;
    let mphi = phi.matrix_at(p)?;
    let prod = mphi
        .inverse()
        .map_err(|_| SectionError::SingularFrame(format_point(p)))?
        .mul(&mpsi);
    let tvars = VarSet::new(vec!["t"]);
    let mut out = vec![vec![Polynomial::zero(&tvars); n]; n];
    for b in 0..n {
        for a in 0..n {
            let entry = prod.at(b, a);
            if entry.is_zero() {
                continue;
            }
            let (oa, ob) = (chart.orders()[a], chart.orders()[b]);
            // splitting transitions never raise order; a nonzero entry
            // below the order diagonal means corrupted splitting data
            if oa < ob {
                return Err(SectionError::Filtration(FiltrationError::Shape(format!(
                    "transition entry ({}, {}) crosses orders {} → {}",
                    b + 1,
                    a + 1,
                    oa,
                    ob
                ))));
            }
            out[b][a] = Polynomial::constant(&tvars, entry.clone()).mul_var_pow(0, oa - ob)?;
        }
    }
    Ok(out)
}
