//! Pointwise and sample-level identity checks, plus the static catalog that
//! describes every check the crate implements.
//!
//! Each pointwise check evaluates `LHS − RHS` of one identity from jets at a
//! single point. Scalar identities report the absolute value; covector and
//! tensor identities report the invariant `g`-norm and keep the coordinate
//! components for debugging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, LocalGeometry, VectorField};
use crate::jets::Jet;
use crate::qem::{self, LambdaSource, QemStructure, RankOneVerdict, StructureFrame};

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("unknown identity {0:?}")]
    Unknown(String),
    #[error("identity {id} does not apply: {reason}")]
    NotApplicable { id: String, reason: String },
    #[error("identity {0} is not a pointwise check")]
    WrongKind(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Pointwise,
    Sample,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceClass {
    Order2,
    Order3,
    Order4,
    Integral,
}

/// Jet orders needed for the metric, the potential and `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JetOrders {
    pub g: usize,
    pub f: usize,
    #[serde(rename = "λ")]
    pub lambda: usize,
}

impl JetOrders {
    const fn new(g: usize, f: usize, lambda: usize) -> Self {
        JetOrders { g, f, lambda }
    }

    /// Seed order of a frame that meets these requirements. A trace-solved
    /// `λ` loses two orders against the metric and the potential.
    pub fn frame_order(&self, source: LambdaSource) -> usize {
        let lambda = match source {
            LambdaSource::ClosedForm => self.lambda,
            LambdaSource::TraceSolved => self.lambda + 2,
        };
        self.g.max(self.f).max(lambda).max(1)
    }

    pub fn max(&self) -> usize {
        self.g.max(self.f).max(self.lambda)
    }
}

/// Per-class tolerances; every catalog entry scales one of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub order2: f64,
    pub order3: f64,
    pub order4: f64,
    pub integral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            order2: 1e-8,
            order3: 1e-7,
            order4: 1e-6,
            integral: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn class(&self, class: ToleranceClass) -> f64 {
        match class {
            ToleranceClass::Order2 => self.order2,
            ToleranceClass::Order3 => self.order3,
            ToleranceClass::Order4 => self.order4,
            ToleranceClass::Integral => self.integral,
        }
    }

    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            order2: self.order2 * factor,
            order3: self.order3 * factor,
            order4: self.order4 * factor,
            integral: self.integral * factor,
        }
    }
}

/// Static description of one check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub group: &'static str,
    /// The identity being checked, written out as a formula.
    pub anchor: &'static str,
    pub kind: CheckKind,
    pub order: JetOrders,
    pub class: ToleranceClass,
    /// Multiplier applied to the class tolerance.
    pub factor: f64,
    pub needs_finite_m: bool,
    pub needs_einstein: bool,
    pub needs_compact: bool,
    pub min_dim: usize,
    /// `false` for checks that only report a value.
    pub asserted: bool,
}

impl CatalogEntry {
    pub fn tolerance(&self, tols: &Tolerances) -> f64 {
        tols.class(self.class) * self.factor
    }

    /// Reason the entry cannot run on `s`, if any. Einstein requirements are
    /// documentary: every model structure is Einstein.
    pub fn inapplicable(&self, s: &QemStructure) -> Option<String> {
        if self.needs_finite_m && s.coupling().finite().is_none() {
            return Some("needs finite m".into());
        }
        if s.dim() < self.min_dim {
            return Some(format!("needs n >= {}", self.min_dim));
        }
        if self.needs_compact && !s.chart().is_compact() {
            return Some("needs a compact manifold".into());
        }
        None
    }
}

const fn entry(
    id: &'static str,
    group: &'static str,
    anchor: &'static str,
    kind: CheckKind,
    order: JetOrders,
    class: ToleranceClass,
) -> CatalogEntry {
    CatalogEntry {
        id,
        group,
        anchor,
        kind,
        order,
        class,
        factor: 1.0,
        needs_finite_m: false,
        needs_einstein: false,
        needs_compact: false,
        min_dim: 2,
        asserted: true,
    }
}

const fn finite_m(mut e: CatalogEntry) -> CatalogEntry {
    e.needs_finite_m = true;
    e
}

const fn einstein(mut e: CatalogEntry) -> CatalogEntry {
    e.needs_einstein = true;
    e
}

const fn compact(mut e: CatalogEntry) -> CatalogEntry {
    e.needs_compact = true;
    e
}

const fn factor(mut e: CatalogEntry, factor: f64) -> CatalogEntry {
    e.factor = factor;
    e
}

const fn min_dim(mut e: CatalogEntry, dim: usize) -> CatalogEntry {
    e.min_dim = dim;
    e
}

const fn reported(mut e: CatalogEntry) -> CatalogEntry {
    e.asserted = false;
    e
}

use CheckKind::{Integral, Pointwise, Sample};
use ToleranceClass::{Order2, Order3, Order4};

static CATALOG: [CatalogEntry; 35] = [
    entry(
        "defining_equation",
        "structure",
        "Ric + ∇²f − (1/m) df⊗df − λ g = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order2,
    ),
    entry(
        "traceless_equation",
        "structure",
        "∇²f − (Δf/n) g − (1/m)(df⊗df − (|∇f|²/n) g) + Ric − (R/n) g = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order2,
    ),
    entry(
        "radial_identity",
        "structure",
        "Ric(∇f,∇f) + ⟨∇_∇f ∇f, ∇f⟩ − (1/m)|∇f|⁴ − λ|∇f|² = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    ),
    finite_m(entry(
        "trace_identity",
        "structure",
        "m Δf − |∇f|² − m(nλ − R) = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    )),
    finite_m(entry(
        "u_transform",
        "structure",
        "∇²f − (1/m) df⊗df + (m/u) ∇²u = 0 with u = exp(−f/m)",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    )),
    finite_m(entry(
        "u_laplacian",
        "structure",
        "Δu − (u/m)(R − nλ) = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    )),
    entry(
        "trace_derivative",
        "gradient",
        "⟨∇f,∇R⟩ + ⟨∇f,∇Δf⟩ − (1/m)⟨∇f,∇|∇f|²⟩ − n⟨∇λ,∇f⟩ = 0",
        Pointwise,
        JetOrders::new(3, 3, 1),
        Order3,
    ),
    entry(
        "gradient_norm_laplacian",
        "gradient",
        "½Δ|∇f|² = |∇²f|² − Ric(∇f,∇f) + (2/m)|∇f|²Δf − (n−2)⟨∇λ,∇f⟩",
        Pointwise,
        JetOrders::new(3, 3, 1),
        Order3,
    ),
    entry(
        "scalar_curvature_gradient",
        "gradient",
        "½∇R = ((m−1)/m) Ric(∇f) + (1/m)(R − (n−1)λ)∇f + (n−1)∇λ",
        Pointwise,
        JetOrders::new(3, 2, 1),
        Order3,
    ),
    entry(
        "scalar_curvature_gradient_contracted",
        "gradient",
        "½⟨∇R,Z⟩ = ((m−1)/m) Ric(∇f,Z) + (1/m)(R − (n−1)λ)⟨∇f,Z⟩ + (n−1)⟨∇λ,Z⟩ for five fixed Z; \
         at Z = ∇f: Ric(∇f,∇f) + (n−1)⟨∇λ,∇f⟩ = ½⟨∇R,∇f⟩ + (1/m)Ric(∇f,∇f) − (1/m)(R − (n−1)λ)|∇f|²",
        Pointwise,
        JetOrders::new(3, 2, 1),
        Order3,
    ),
    entry(
        "modified_scalar_gradient",
        "gradient",
        "∇(R + |∇f|² − 2(n−1)λ) = 2λ∇f + (2/m)(∇_∇f ∇f + (|∇f|² − Δf)∇f)",
        Pointwise,
        JetOrders::new(3, 3, 1),
        Order3,
    ),
    entry(
        "scalar_curvature_laplacian",
        "laplacian",
        "½ΔR = −|∇²f − (Δf/n)g|² − ((m+n)/(nm))(Δf)² − (n/2)⟨∇f,∇λ⟩ + ⟨∇f,∇R⟩ \
         + ((m−2)/(2m))⟨∇f,∇Δf⟩ + (1/m) div(∇_∇f ∇f) + (n−1)Δλ + λΔf",
        Pointwise,
        JetOrders::new(4, 3, 2),
        Order4,
    ),
    factor(
        entry(
            "scalar_curvature_laplacian_fd",
            "laplacian",
            "ΔR from jets agrees with ΔR from central differences of R (step 1e−3)",
            Pointwise,
            JetOrders::new(4, 3, 2),
            Order4,
        ),
        100.0,
    ),
    entry(
        "contracted_bianchi",
        "general",
        "div Ric − ½ dR = 0",
        Pointwise,
        JetOrders::new(3, 0, 0),
        Order3,
    ),
    entry(
        "gradient_square_divergence",
        "general",
        "div(df⊗df) = Δf df + ∇_∇f df",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    ),
    entry(
        "hessian_divergence",
        "general",
        "div ∇²f = Ric(∇f) + dΔf",
        Pointwise,
        JetOrders::new(3, 3, 0),
        Order3,
    ),
    entry(
        "bochner_formula",
        "general",
        "½Δ|∇f|² = |∇²f|² + ⟨∇f,∇Δf⟩ + Ric(∇f,∇f)",
        Pointwise,
        JetOrders::new(3, 3, 0),
        Order3,
    ),
    entry(
        "lie_derivative_divergence",
        "general",
        "div(L_X g)(X) = ½Δ|X|² − |∇X|² + Ric(X,X) + X(div X) for a fixed non-gradient X",
        Pointwise,
        JetOrders::new(3, 0, 0),
        Order3,
    ),
    einstein(finite_m(entry(
        "gradient_u_conformality",
        "einstein",
        "½ L_∇u g − (div ∇u / n) g = 0",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order2,
    ))),
    einstein(finite_m(entry(
        "conformal_flux_divergence",
        "einstein",
        "div(|X|² X) = ((n+2)/n)|X|² div X for the conformal field X = ∇u",
        Pointwise,
        JetOrders::new(2, 2, 0),
        Order3,
    ))),
    min_dim(
        einstein(finite_m(entry(
            "einstein_u_hessian",
            "einstein",
            "∇²u = (−R u/(n(n−1)) + c/m) g with c constant; Δu = (R/m)u − (n/m)λu; \
             ∇(λu) = R(m+n−1)/(n(n−1)) ∇u",
            Sample,
            JetOrders::new(3, 3, 1),
            Order2,
        ))),
        3,
    ),
    entry(
        "trace_sign_change",
        "global",
        "R − nλ takes both signs on a compact non-trivial structure",
        Sample,
        JetOrders::new(2, 2, 0),
        Order2,
    ),
    entry(
        "gradient_rank_one",
        "global",
        "df⊗df = ρ g has only the solution df = 0, ρ = 0 when n ≥ 2",
        Sample,
        JetOrders::new(1, 1, 0),
        Order2,
    ),
    reported(finite_m(entry(
        "critical_points",
        "global",
        "number of sample points where |∇u| falls below tolerance",
        Sample,
        JetOrders::new(1, 1, 0),
        Order2,
    ))),
    compact(entry(
        "traceless_hessian_balance",
        "integral",
        "∫|∇²f − (Δf/n)g|² + ((n+2)/(2n))∫(Δf)² = ∫⟨∇f,∇R⟩ − ((n+2)/2)∫⟨∇f,∇λ⟩",
        Integral,
        JetOrders::new(3, 2, 1),
        ToleranceClass::Integral,
    )),
    compact(entry(
        "ricci_gradient_balance",
        "integral",
        "∫(Ric(∇f,∇f) + ⟨∇f,∇R⟩) = (3/2)∫(Δf)² + ((n+2)/2)∫⟨∇f,∇λ⟩",
        Integral,
        JetOrders::new(3, 2, 1),
        ToleranceClass::Integral,
    )),
    compact(entry(
        "traceless_hessian_curvature_balance",
        "integral",
        "∫|∇²f − (Δf/n)g|² = ((n−2)/(2n))∫⟨∇f,∇R⟩ − ((n+2)/(2nm))∫|∇f|²Δf",
        Integral,
        JetOrders::new(3, 2, 1),
        ToleranceClass::Integral,
    )),
    compact(entry(
        "hessian_norm_balance",
        "integral",
        "∫|∇²f|² = ∫Ric(∇f,∇f) − (2/m)∫|∇f|²Δf + (n−2)∫⟨∇λ,∇f⟩",
        Integral,
        JetOrders::new(3, 2, 1),
        ToleranceClass::Integral,
    )),
    compact(finite_m(entry(
        "bochner_u_balance",
        "integral",
        "∫|∇²u − (Δu/n)g|² = ((n−1)/n)∫(Δu)² − ∫Ric(∇u,∇u)",
        Integral,
        JetOrders::new(2, 2, 0),
        ToleranceClass::Integral,
    ))),
    factor(
        einstein(compact(finite_m(entry(
            "conformal_equality",
            "integral",
            "∫Ric(∇u,∇u) = ((n−1)/n)∫(Δu)² when ∇u is conformal",
            Integral,
            JetOrders::new(2, 2, 0),
            ToleranceClass::Integral,
        )))),
        1e-2,
    ),
    factor(
        einstein(compact(finite_m(entry(
            "conformal_flux_integral",
            "integral",
            "∫|∇u|² Δu = 0 when ∇u is conformal",
            Integral,
            JetOrders::new(2, 2, 0),
            ToleranceClass::Integral,
        )))),
        1e-3,
    ),
    compact(entry(
        "nontriviality_gap",
        "integral",
        "∫⟨∇R,∇f⟩ − ((n+2)/2)∫⟨∇f,∇λ⟩ > 0 unless f is constant",
        Integral,
        JetOrders::new(3, 2, 1),
        ToleranceClass::Integral,
    )),
    factor(
        compact(entry(
            "laplacian_integral",
            "quadrature",
            "∫Δφ = 0 for φ = h_v, h_v³, exp(h_v)",
            Integral,
            JetOrders::new(2, 0, 0),
            ToleranceClass::Integral,
        )),
        1e-3,
    ),
    factor(
        compact(entry(
            "integration_by_parts",
            "quadrature",
            "∫⟨∇φ,∇ψ⟩ + ∫φΔψ = 0 for polynomials φ, ψ in h_v",
            Integral,
            JetOrders::new(2, 0, 0),
            ToleranceClass::Integral,
        )),
        1e-3,
    ),
    factor(
        compact(entry(
            "total_measure",
            "quadrature",
            "∫1 = vol(Sⁿ(r)) and ∫h_v² = r² vol(Sⁿ(r))/(n+1)",
            Integral,
            JetOrders::new(0, 0, 0),
            ToleranceClass::Integral,
        )),
        1e-4,
    ),
];

pub fn catalog() -> &'static [CatalogEntry] {
    &CATALOG
}

pub fn lookup(id: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.id == id)
}

/// Signed or normed residual with the raw components behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub components: Vec<f64>,
}

impl Residual {
    fn scalar(value: f64) -> Self {
        Residual {
            value: value.abs(),
            components: vec![value],
        }
    }
}

/// Outcome of one pointwise check at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub identity_id: String,
    pub point: Vec<f64>,
    pub residual: f64,
    pub components: Vec<f64>,
    pub required_jet_order: usize,
    pub tolerance_used: f64,
    pub pass: bool,
}

fn covector_norm(geometry: &LocalGeometry<'_>, w: &[Jet]) -> Residual {
    let raised = geometry.raise(w);
    let norm2 = geometry.pair(w, &raised).value();
    Residual {
        value: norm2.max(0.0).sqrt(),
        components: w.iter().map(Jet::value).collect(),
    }
}

fn tensor_norm(geometry: &LocalGeometry<'_>, t: &[Jet]) -> Residual {
    Residual {
        value: geometry.norm2_tensor2(t).value().max(0.0).sqrt(),
        components: t.iter().map(Jet::value).collect(),
    }
}

fn sub(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `∇²f(∇f, ·)`, i.e. `∇_∇f ∇f` lowered.
fn hess_grad_covector(frame: &StructureFrame<'_>) -> Result<Vec<Jet>, GeometryError> {
    let n = frame.geometry().dim();
    let hess = frame.hess_f()?;
    let grad = frame.grad_f()?;
    Ok((0..n)
        .map(|j| {
            let mut acc = &hess[j] * &grad[0];
            for i in 1..n {
                acc = acc + &hess[i * n + j] * &grad[i];
            }
            acc
        })
        .collect())
}

fn ricci_covector(geometry: &LocalGeometry<'_>, x: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
    let n = geometry.dim();
    let ric = geometry.ricci()?;
    Ok((0..n)
        .map(|j| {
            let mut acc = &ric[j] * &x[0];
            for i in 1..n {
                acc = acc + &ric[i * n + j] * &x[i];
            }
            acc
        })
        .collect())
}

pub fn defining_equation(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    Ok(tensor_norm(frame.geometry(), &frame.defining_residual()?))
}

pub fn traceless_equation(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    Ok(tensor_norm(frame.geometry(), &frame.traceless_residual()?))
}

pub fn radial_identity(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    Ok(Residual::scalar(qem::radial_value(frame)?))
}

fn require_m(frame: &StructureFrame<'_>) -> Result<f64, GeometryError> {
    frame
        .coupling()
        .finite()
        .ok_or_else(|| GeometryError::Argument("identity needs finite m".into()))
}

pub fn trace_identity(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let m = require_m(frame)?;
    let n = frame.n();
    let lap = frame.lap_f()?.value();
    let g2 = frame.grad_f_norm2()?.value();
    let r = frame.geometry().scalar_curvature()?.value();
    let lambda = frame.lambda().value();
    Ok(Residual::scalar(m * lap - g2 - m * (n * lambda - r)))
}

pub fn u_transform(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    Ok(tensor_norm(frame.geometry(), &qem::u_transform_jets(frame)?))
}

pub fn u_laplacian(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let m = require_m(frame)?;
    let u = frame.u()?;
    let lap_u = frame.geometry().laplacian(&u)?.value();
    let r = frame.geometry().scalar_curvature()?.value();
    Ok(Residual::scalar(
        lap_u - u.value() / m * (r - frame.n() * frame.lambda().value()),
    ))
}

pub fn trace_derivative(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let grad = frame.grad_f()?;
    let d_r = geometry.differential(geometry.scalar_curvature()?)?;
    let d_lap = geometry.differential(&frame.lap_f()?)?;
    let d_g2 = geometry.differential(&frame.grad_f_norm2()?)?;
    let d_lambda = geometry.differential(frame.lambda())?;
    let value = geometry.pair(&d_r, &grad).value() + geometry.pair(&d_lap, &grad).value()
        - frame.inv_m() * geometry.pair(&d_g2, &grad).value()
        - frame.n() * geometry.pair(&d_lambda, &grad).value();
    Ok(Residual::scalar(value))
}

pub fn gradient_norm_laplacian(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let n = frame.n();
    let grad = frame.grad_f()?;
    let hess = frame.hess_f()?;
    let g2 = frame.grad_f_norm2()?;
    let lhs = 0.5 * geometry.laplacian(&g2)?.value();
    let ric_ff = geometry.apply2(geometry.ricci()?, &grad, &grad).value();
    let d_lambda = geometry.differential(frame.lambda())?;
    let rhs = geometry.norm2_tensor2(&hess).value() - ric_ff
        + 2.0 * frame.inv_m() * g2.value() * frame.lap_f()?.value()
        - (n - 2.0) * geometry.pair(&d_lambda, &grad).value();
    Ok(Residual::scalar(lhs - rhs))
}

/// `½dR − ((m−1)/m)Ric(∇f) − (1/m)(R − (n−1)λ)df − (n−1)dλ` as a covector.
fn scalar_gradient_defect(frame: &StructureFrame<'_>) -> Result<Vec<Jet>, GeometryError> {
    let geometry = frame.geometry();
    let n = frame.n();
    let inv_m = frame.inv_m();
    let r = geometry.scalar_curvature()?;
    let d_r = geometry.differential(r)?;
    let ric_f = ricci_covector(geometry, &frame.grad_f()?)?;
    let df = frame.df()?;
    let d_lambda = geometry.differential(frame.lambda())?;
    let coefficient = (r - frame.lambda().scale(n - 1.0)).scale(inv_m);
    Ok((0..geometry.dim())
        .map(|j| {
            d_r[j].scale(0.5)
                - ric_f[j].scale(1.0 - inv_m)
                - &coefficient * &df[j]
                - d_lambda[j].scale(n - 1.0)
        })
        .collect())
}

pub fn scalar_curvature_gradient(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    Ok(covector_norm(frame.geometry(), &scalar_gradient_defect(frame)?))
}

/// Five fixed probe directions, deterministic per dimension.
pub fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a5a_0000 + n as u64);
    (0..5)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// The scalar-curvature gradient identity contracted with five fixed
/// directions and with `∇f` (in its rearranged form). Reports the largest
/// defect; components list each contraction.
pub fn scalar_curvature_gradient_contracted(
    frame: &StructureFrame<'_>,
) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let n = frame.n();
    let inv_m = frame.inv_m();
    let r = geometry.scalar_curvature()?.value();
    let lambda = frame.lambda().value();
    let ric = geometry.ricci()?;
    let d_r = geometry.differential(geometry.scalar_curvature()?)?;
    let df = frame.df()?;
    let grad = frame.grad_f()?;
    let d_lambda = geometry.differential(frame.lambda())?;
    let like = frame.lambda();
    let mut components = Vec::with_capacity(6);
    for z in probe_directions(geometry.dim()) {
        let z: Vec<Jet> = z.iter().map(|&c| like.constant_like(c)).collect();
        let value = 0.5 * geometry.pair(&d_r, &z).value()
            - (1.0 - inv_m) * geometry.apply2(ric, &grad, &z).value()
            - inv_m * (r - (n - 1.0) * lambda) * geometry.pair(&df, &z).value()
            - (n - 1.0) * geometry.pair(&d_lambda, &z).value();
        components.push(value);
    }
    let ric_ff = geometry.apply2(ric, &grad, &grad).value();
    let g2 = frame.grad_f_norm2()?.value();
    let lhs = ric_ff + (n - 1.0) * geometry.pair(&d_lambda, &grad).value();
    let rhs = 0.5 * geometry.pair(&d_r, &grad).value() + inv_m * ric_ff
        - inv_m * (r - (n - 1.0) * lambda) * g2;
    components.push(lhs - rhs);
    Ok(Residual {
        value: components.iter().fold(0.0f64, |m, c| m.max(c.abs())),
        components,
    })
}

pub fn modified_scalar_gradient(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let n = frame.n();
    let inv_m = frame.inv_m();
    let g2 = frame.grad_f_norm2()?;
    let potential = geometry.scalar_curvature()? + &g2 - frame.lambda().scale(2.0 * (n - 1.0));
    let lhs = geometry.differential(&potential)?;
    let df = frame.df()?;
    let nabla_ff = hess_grad_covector(frame)?;
    let coefficient = g2 - frame.lap_f()?;
    let defect: Vec<Jet> = (0..geometry.dim())
        .map(|j| {
            &lhs[j]
                - (frame.lambda() * &df[j]).scale(2.0)
                - (&nabla_ff[j] + &coefficient * &df[j]).scale(2.0 * inv_m)
        })
        .collect();
    Ok(covector_norm(geometry, &defect))
}

/// Right-hand side of the `½ΔR` formula, without the `½ΔR` itself.
fn scalar_laplacian_rhs(frame: &StructureFrame<'_>) -> Result<f64, GeometryError> {
    let geometry = frame.geometry();
    let n = frame.n();
    let inv_m = frame.inv_m();
    let hess = frame.hess_f()?;
    let lap = frame.lap_f()?;
    let grad = frame.grad_f()?;
    let traceless = sub(&hess, &geometry.scaled_metric(&lap.scale(1.0 / n)));
    let traceless2 = geometry.norm2_tensor2(&traceless).value();
    let d_lambda = geometry.differential(frame.lambda())?;
    let d_r = geometry.differential(geometry.scalar_curvature()?)?;
    let d_lap = geometry.differential(&lap)?;
    let nabla_ff = geometry.raise(&hess_grad_covector(frame)?);
    let div_nabla_ff = geometry.divergence(&nabla_ff)?.value();
    let lap_lambda = geometry.laplacian(frame.lambda())?.value();
    let lap_v = lap.value();
    Ok(-traceless2 - (1.0 / n + inv_m) * lap_v * lap_v
        - 0.5 * n * geometry.pair(&d_lambda, &grad).value()
        + geometry.pair(&d_r, &grad).value()
        + (0.5 - inv_m) * geometry.pair(&d_lap, &grad).value()
        + inv_m * div_nabla_ff
        + (n - 1.0) * lap_lambda
        + frame.lambda().value() * lap_v)
}

pub fn scalar_curvature_laplacian(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let lap_r = frame.geometry().laplacian(frame.geometry().scalar_curvature()?)?.value();
    Ok(Residual::scalar(0.5 * lap_r - scalar_laplacian_rhs(frame)?))
}

/// Step of the central-difference `ΔR`.
pub const FD_STEP: f64 = 1e-3;

/// `ΔR` at the frame's point from central differences of the scalar
/// curvature, with the first-order Christoffel correction taken from jets.
pub fn scalar_laplacian_fd(s: &QemStructure, frame: &StructureFrame<'_>) -> Result<f64, GeometryError> {
    let geometry = frame.geometry();
    let n = geometry.dim();
    let p = geometry.point().to_vec();
    let h = FD_STEP;
    let chart = s.chart();
    let r_at = |offsets: &[(usize, f64)]| -> Result<f64, GeometryError> {
        let mut q = p.clone();
        for &(axis, delta) in offsets {
            q[axis] += delta;
        }
        Ok(LocalGeometry::new(chart, &q, 2)?.scalar_curvature()?.value())
    };
    let r0 = r_at(&[])?;
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    for i in 0..n {
        let plus = r_at(&[(i, h)])?;
        let minus = r_at(&[(i, -h)])?;
        first[i] = (plus - minus) / (2.0 * h);
        second[i * n + i] = (plus - 2.0 * r0 + minus) / (h * h);
        for j in 0..i {
            let value = (r_at(&[(i, h), (j, h)])? - r_at(&[(i, h), (j, -h)])?
                - r_at(&[(i, -h), (j, h)])?
                + r_at(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            second[i * n + j] = value;
            second[j * n + i] = value;
        }
    }
    let gamma = geometry.christoffel()?;
    let inverse = geometry.inverse_values();
    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let correction: f64 = (0..n)
                .map(|k| gamma[(k * n + i) * n + j].value() * first[k])
                .sum();
            lap += inverse[i * n + j] * (second[i * n + j] - correction);
        }
    }
    Ok(lap)
}

/// Difference between the `½ΔR` residual computed with jet `ΔR` and with
/// finite-difference `ΔR`.
pub fn scalar_curvature_laplacian_fd(
    s: &QemStructure,
    frame: &StructureFrame<'_>,
) -> Result<Residual, GeometryError> {
    let jet = frame.geometry().laplacian(frame.geometry().scalar_curvature()?)?.value();
    let fd = scalar_laplacian_fd(s, frame)?;
    let rhs = scalar_laplacian_rhs(frame)?;
    let with_jets = 0.5 * jet - rhs;
    let with_fd = 0.5 * fd - rhs;
    Ok(Residual {
        value: (with_jets - with_fd).abs(),
        components: vec![with_jets, with_fd],
    })
}

pub fn contracted_bianchi(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let div_ric = geometry.div_tensor2(geometry.ricci()?)?;
    let d_r = geometry.differential(geometry.scalar_curvature()?)?;
    let defect: Vec<Jet> = div_ric
        .iter()
        .zip(&d_r)
        .map(|(a, b)| a - b.scale(0.5))
        .collect();
    Ok(covector_norm(geometry, &defect))
}

pub fn gradient_square_divergence(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let div = geometry.div_tensor2(&frame.df_outer_df()?)?;
    let df = frame.df()?;
    let lap = frame.lap_f()?;
    let nabla_ff = hess_grad_covector(frame)?;
    let defect: Vec<Jet> = (0..geometry.dim())
        .map(|j| &div[j] - &lap * &df[j] - &nabla_ff[j])
        .collect();
    Ok(covector_norm(geometry, &defect))
}

pub fn hessian_divergence(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let div = geometry.div_tensor2(&frame.hess_f()?)?;
    let ric_f = ricci_covector(geometry, &frame.grad_f()?)?;
    let d_lap = geometry.differential(&frame.lap_f()?)?;
    let defect: Vec<Jet> = (0..geometry.dim())
        .map(|j| &div[j] - &ric_f[j] - &d_lap[j])
        .collect();
    Ok(covector_norm(geometry, &defect))
}

pub fn bochner_formula(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let grad = frame.grad_f()?;
    let lhs = 0.5 * geometry.laplacian(&frame.grad_f_norm2()?)?.value();
    let d_lap = geometry.differential(&frame.lap_f()?)?;
    let rhs = geometry.norm2_tensor2(&frame.hess_f()?).value()
        + geometry.pair(&d_lap, &grad).value()
        + geometry.apply2(geometry.ricci()?, &grad, &grad).value();
    Ok(Residual::scalar(lhs - rhs))
}

/// A fixed vector field that is not a gradient in any of the model charts.
pub fn probe_vector_field(n: usize) -> VectorField {
    VectorField::new("non-gradient probe", move |x| {
        let mut out = Vec::with_capacity(n);
        out.push(x[1].sin() + &x[0] * &x[1]);
        out.push(x[0].cos() - x[0].square());
        for k in 2..n {
            out.push(&x[k] * &x[0] + x[k - 1].sin());
        }
        Ok(out)
    })
}

/// `div(L_X g)(X) − ½Δ|X|² + |∇X|² − Ric(X,X) − X(div X)` for a vector field.
pub fn lie_derivative_divergence_of(
    geometry: &LocalGeometry<'_>,
    x: &[Jet],
) -> Result<Residual, GeometryError> {
    let n = geometry.dim();
    let lie = geometry.lie_metric(x)?;
    let lhs = geometry.pair(&geometry.div_tensor2(&lie)?, x).value();
    let norm2 = geometry.dot(x, x);
    let lap_norm = geometry.laplacian(&norm2)?.value();
    let nabla_x = geometry.covariant_derivative(x)?;
    // |∇X|² = g_ik g^jl (∇X)^i_j (∇X)^k_l
    let g = geometry.metric_values();
    let g_inv = geometry.inverse_values();
    let dx: Vec<f64> = nabla_x.iter().map(Jet::value).collect();
    let mut grad_norm2 = 0.0;
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    grad_norm2 += g[i * n + k] * g_inv[j * n + l] * dx[i * n + j] * dx[k * n + l];
                }
            }
        }
    }
    let ric_xx = geometry.apply2(geometry.ricci()?, x, x).value();
    let d_div = geometry.differential(&geometry.divergence(x)?)?;
    let x_div = geometry.pair(&d_div, x).value();
    Ok(Residual::scalar(
        lhs - (0.5 * lap_norm - grad_norm2 + ric_xx + x_div),
    ))
}

pub fn lie_derivative_divergence(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let x = geometry.vector(&probe_vector_field(geometry.dim()))?;
    lie_derivative_divergence_of(geometry, &x)
}

/// `|½L_X g − (div X / n) g|` in the invariant norm.
pub fn conformality_of(geometry: &LocalGeometry<'_>, x: &[Jet]) -> Result<Residual, GeometryError> {
    let n = geometry.dim() as f64;
    let half_lie: Vec<Jet> = geometry.lie_metric(x)?.iter().map(|t| t.scale(0.5)).collect();
    let rho = geometry.divergence(x)?.scale(1.0 / n);
    Ok(tensor_norm(geometry, &sub(&half_lie, &geometry.scaled_metric(&rho))))
}

/// Conformality defect of a vector field at `p`.
pub fn conformality_residual(
    chart: &crate::geometry::Chart,
    x: &VectorField,
    p: &[f64],
) -> Result<f64, GeometryError> {
    let geometry = LocalGeometry::new(chart, p, 2)?;
    let jets = geometry.vector(x)?;
    Ok(conformality_of(&geometry, &jets)?.value)
}

pub fn gradient_u_conformality(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let grad_u = geometry.gradient(&frame.u()?)?;
    conformality_of(geometry, &grad_u)
}

/// `div(|X|²X) − ((n+2)/n)|X|² div X`.
pub fn conformal_flux_divergence_of(
    geometry: &LocalGeometry<'_>,
    x: &[Jet],
) -> Result<Residual, GeometryError> {
    let n = geometry.dim() as f64;
    let norm2 = geometry.dot(x, x);
    let flux: Vec<Jet> = x.iter().map(|xi| xi * &norm2).collect();
    let lhs = geometry.divergence(&flux)?.value();
    let rhs = (n + 2.0) / n * norm2.value() * geometry.divergence(x)?.value();
    Ok(Residual::scalar(lhs - rhs))
}

pub fn conformal_flux_divergence(frame: &StructureFrame<'_>) -> Result<Residual, GeometryError> {
    let geometry = frame.geometry();
    let grad_u = geometry.gradient(&frame.u()?)?;
    conformal_flux_divergence_of(geometry, &grad_u)
}

fn dispatch(
    id: &str,
    s: &QemStructure,
    frame: &StructureFrame<'_>,
) -> Result<Residual, IdentityError> {
    Ok(match id {
        "defining_equation" => defining_equation(frame)?,
        "traceless_equation" => traceless_equation(frame)?,
        "radial_identity" => radial_identity(frame)?,
        "trace_identity" => trace_identity(frame)?,
        "u_transform" => u_transform(frame)?,
        "u_laplacian" => u_laplacian(frame)?,
        "trace_derivative" => trace_derivative(frame)?,
        "gradient_norm_laplacian" => gradient_norm_laplacian(frame)?,
        "scalar_curvature_gradient" => scalar_curvature_gradient(frame)?,
        "scalar_curvature_gradient_contracted" => scalar_curvature_gradient_contracted(frame)?,
        "modified_scalar_gradient" => modified_scalar_gradient(frame)?,
        "scalar_curvature_laplacian" => scalar_curvature_laplacian(frame)?,
        "scalar_curvature_laplacian_fd" => scalar_curvature_laplacian_fd(s, frame)?,
        "contracted_bianchi" => contracted_bianchi(frame)?,
        "gradient_square_divergence" => gradient_square_divergence(frame)?,
        "hessian_divergence" => hessian_divergence(frame)?,
        "bochner_formula" => bochner_formula(frame)?,
        "lie_derivative_divergence" => lie_derivative_divergence(frame)?,
        "gradient_u_conformality" => gradient_u_conformality(frame)?,
        "conformal_flux_divergence" => conformal_flux_divergence(frame)?,
        other => return Err(IdentityError::WrongKind(other.to_string())),
    })
}

/// Evaluates one pointwise catalog entry at `p`.
pub fn evaluate(
    id: &str,
    s: &QemStructure,
    p: &[f64],
    tols: &Tolerances,
) -> Result<IdentityResult, IdentityError> {
    let entry = lookup(id).ok_or_else(|| IdentityError::Unknown(id.to_string()))?;
    if entry.kind != CheckKind::Pointwise {
        return Err(IdentityError::WrongKind(id.to_string()));
    }
    if let Some(reason) = entry.inapplicable(s) {
        return Err(IdentityError::NotApplicable {
            id: id.to_string(),
            reason,
        });
    }
    let order = entry.order.frame_order(s.lambda_source());
    let frame = s.frame(p, order)?;
    let residual = dispatch(id, s, &frame)?;
    let tolerance = entry.tolerance(tols);
    Ok(IdentityResult {
        identity_id: id.to_string(),
        point: p.to_vec(),
        pass: residual.value < tolerance,
        residual: residual.value,
        components: residual.components,
        required_jet_order: entry.order.max(),
        tolerance_used: tolerance,
    })
}

/// Aggregated statistics of one check over a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub id: String,
    pub anchor: String,
    pub n_points: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Runs a pointwise entry over every sample point. Points are processed in
/// order so the statistics are reproducible bit for bit.
pub fn summarize_pointwise(
    id: &str,
    s: &QemStructure,
    sample: &[Vec<f64>],
    tols: &Tolerances,
) -> Result<CheckSummary, IdentityError> {
    let entry = lookup(id).ok_or_else(|| IdentityError::Unknown(id.to_string()))?;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for p in sample {
        let r = evaluate(id, s, p, tols)?;
        max = max.max(r.residual);
        sum += r.residual;
    }
    let tolerance = entry.tolerance(tols);
    Ok(CheckSummary {
        id: id.to_string(),
        anchor: entry.anchor.to_string(),
        n_points: sample.len(),
        max_residual: max,
        mean_residual: if sample.is_empty() { 0.0 } else { sum / sample.len() as f64 },
        tolerance,
        pass: !sample.is_empty() && max < tolerance,
        note: None,
    })
}

/// Residuals of the Einstein-case description of `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EinsteinReport {
    pub n_points: usize,
    /// `c` estimated at the first sample point.
    pub c_estimate: f64,
    /// Spread of the per-point estimates of `c`.
    pub c_spread: f64,
    pub hessian_residual: f64,
    pub lap_residual: f64,
    pub gradlam_residual: f64,
    /// `sup |Ric − (R/n) g|`, confirming the Einstein hypothesis.
    pub einstein_residual: f64,
}

impl EinsteinReport {
    pub fn max_residual(&self) -> f64 {
        self.hessian_residual
            .max(self.lap_residual)
            .max(self.gradlam_residual)
            .max(self.einstein_residual)
    }
}

/// Checks `∇²u = (−R u/(n(n−1)) + c/m) g` with a single constant `c`, and the
/// companion identities for `Δu` and `∇(λu)`.
pub fn einstein_u_hessian(
    s: &QemStructure,
    sample: &[Vec<f64>],
) -> Result<EinsteinReport, IdentityError> {
    let id = "einstein_u_hessian";
    let entry = lookup(id).expect("catalog entry");
    if let Some(reason) = entry.inapplicable(s) {
        return Err(IdentityError::NotApplicable {
            id: id.into(),
            reason,
        });
    }
    if sample.is_empty() {
        return Err(GeometryError::Argument("empty sample".into()).into());
    }
    let m = s.coupling().finite().expect("checked finite m");
    let n = s.dim() as f64;
    let order = entry.order.frame_order(s.lambda_source());
    let mut report = EinsteinReport {
        n_points: sample.len(),
        c_estimate: f64::NAN,
        c_spread: 0.0,
        hessian_residual: 0.0,
        lap_residual: 0.0,
        gradlam_residual: 0.0,
        einstein_residual: 0.0,
    };
    let (mut c_min, mut c_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in sample {
        let frame = s.frame(p, order)?;
        let geometry = frame.geometry();
        let u = frame.u()?;
        let r = geometry.scalar_curvature()?;
        let rv = r.value();
        let uv = u.value();
        let lap_u = geometry.laplacian(&u)?.value();
        let c = m * (lap_u / n + rv * uv / (n * (n - 1.0)));
        if report.c_estimate.is_nan() {
            report.c_estimate = c;
        }
        c_min = c_min.min(c);
        c_max = c_max.max(c);

        let hess_u = geometry.hessian(&u)?;
        let factor = -rv / (n * (n - 1.0)) * uv + report.c_estimate / m;
        let target = geometry.scaled_metric(&u.constant_like(factor));
        report.hessian_residual = report
            .hessian_residual
            .max(tensor_norm(geometry, &sub(&hess_u, &target)).value);

        let lambda = frame.lambda().value();
        let lap_defect = lap_u - rv / m * uv + n / m * lambda * uv;
        report.lap_residual = report.lap_residual.max(lap_defect.abs());

        let lambda_u = frame.lambda() * &u;
        let d_lu = geometry.differential(&lambda_u)?;
        let du = geometry.differential(&u)?;
        let coefficient = rv * (m + n - 1.0) / (n * (n - 1.0));
        let defect: Vec<Jet> = d_lu
            .iter()
            .zip(&du)
            .map(|(a, b)| a - b.scale(coefficient))
            .collect();
        report.gradlam_residual = report
            .gradlam_residual
            .max(covector_norm(geometry, &defect).value);

        let einstein = sub(geometry.ricci()?, &geometry.scaled_metric(&r.scale(1.0 / n)));
        report.einstein_residual = report
            .einstein_residual
            .max(tensor_norm(geometry, &einstein).value);
    }
    report.c_spread = c_max - c_min;
    Ok(report)
}

/// Range of `R − nλ` over a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignScan {
    pub min: f64,
    pub max: f64,
    pub sign_changes: bool,
    /// Whether the chart covers a compact manifold, so that a missing sign
    /// change would contradict non-triviality.
    pub conclusive: bool,
}

pub fn trace_sign_change(s: &QemStructure, sample: &[Vec<f64>]) -> Result<SignScan, IdentityError> {
    if sample.is_empty() {
        return Err(GeometryError::Argument("empty sample".into()).into());
    }
    let order = JetOrders::new(2, 2, 0).frame_order(s.lambda_source());
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in sample {
        let frame = s.frame(p, order)?;
        let value = frame.geometry().scalar_curvature()?.value() - frame.n() * frame.lambda().value();
        min = min.min(value);
        max = max.max(value);
    }
    Ok(SignScan {
        min,
        max,
        sign_changes: min < 0.0 && 0.0 < max,
        conclusive: s.chart().is_compact(),
    })
}

/// Rank-one verdicts for `df` over a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneSummary {
    pub n_points: usize,
    pub zero: usize,
    pub impossible: usize,
    /// Smallest `|df|²` among the impossible verdicts.
    pub min_gap: f64,
}

pub fn gradient_rank_one(
    s: &QemStructure,
    sample: &[Vec<f64>],
    tol: f64,
) -> Result<RankOneSummary, IdentityError> {
    let mut summary = RankOneSummary {
        n_points: sample.len(),
        zero: 0,
        impossible: 0,
        min_gap: f64::INFINITY,
    };
    for p in sample {
        let geometry = LocalGeometry::new(s.chart(), p, 1)?;
        let df: Vec<f64> = geometry
            .differential(&geometry.scalar(s.potential())?)?
            .iter()
            .map(Jet::value)
            .collect();
        match qem::rank_one_proportionality(&df, &geometry.metric_values(), tol)? {
            RankOneVerdict::Zero { .. } => summary.zero += 1,
            RankOneVerdict::Impossible { eigen_gap, .. } => {
                summary.impossible += 1;
                summary.min_gap = summary.min_gap.min(eigen_gap);
            }
        }
    }
    Ok(summary)
}

/// Number of sample points where `|∇u|_g < tol`. Reported, never asserted.
pub fn critical_points(s: &QemStructure, sample: &[Vec<f64>], tol: f64) -> Result<usize, IdentityError> {
    let mut count = 0;
    for p in sample {
        let frame = s.frame(p, 1)?;
        let du = frame.geometry().differential(&frame.u()?)?;
        if covector_norm(frame.geometry(), &du).value < tol {
            count += 1;
        }
    }
    Ok(count)
}

/// Runs the sample-level entry `id` and folds it into a summary.
pub fn summarize_sample(
    id: &str,
    s: &QemStructure,
    sample: &[Vec<f64>],
    tols: &Tolerances,
) -> Result<CheckSummary, IdentityError> {
    let entry = lookup(id).ok_or_else(|| IdentityError::Unknown(id.to_string()))?;
    if let Some(reason) = entry.inapplicable(s) {
        return Err(IdentityError::NotApplicable {
            id: id.into(),
            reason,
        });
    }
    let tolerance = entry.tolerance(tols);
    let mut summary = CheckSummary {
        id: id.to_string(),
        anchor: entry.anchor.to_string(),
        n_points: sample.len(),
        max_residual: 0.0,
        mean_residual: 0.0,
        tolerance,
        pass: true,
        note: None,
    };
    match id {
        "einstein_u_hessian" => {
            let report = einstein_u_hessian(s, sample)?;
            summary.max_residual = report.max_residual().max(report.c_spread);
            summary.mean_residual = summary.max_residual;
            summary.pass = report.max_residual() < tolerance && report.c_spread < 0.1 * tolerance;
            summary.note = Some(format!(
                "c = {:.12e}, c spread = {:.3e}, einstein residual = {:.3e}",
                report.c_estimate, report.c_spread, report.einstein_residual
            ));
        }
        "trace_sign_change" => {
            let scan = trace_sign_change(s, sample)?;
            summary.max_residual = scan.max;
            summary.mean_residual = scan.min;
            summary.pass = scan.sign_changes || !scan.conclusive;
            summary.note = Some(format!(
                "R − nλ ranges over [{:.6e}, {:.6e}]{}",
                scan.min,
                scan.max,
                if scan.conclusive { "" } else { "; not asserted on a noncompact chart" }
            ));
        }
        "gradient_rank_one" => {
            let ranks = gradient_rank_one(s, sample, tolerance)?;
            summary.max_residual = ranks.zero as f64;
            summary.pass = ranks.zero + ranks.impossible == ranks.n_points;
            summary.note = Some(format!(
                "{} of {} points impossible, {} zero",
                ranks.impossible, ranks.n_points, ranks.zero
            ));
        }
        "critical_points" => {
            let count = critical_points(s, sample, tolerance)?;
            summary.max_residual = count as f64;
            summary.mean_residual = count as f64;
            summary.note = Some(format!("{count} sample points with |∇u| < {tolerance:e}; reported only"));
        }
        other => return Err(IdentityError::WrongKind(other.to_string())),
    }
    Ok(summary)
}
