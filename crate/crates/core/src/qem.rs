//! Generalized m-quasi-Einstein structures and their defining residuals.
//!
//! A structure is a chart together with a potential `f`, a coupling `m` and a
//! function `λ` that should satisfy `Ric + ∇²f − (1/m) df⊗df = λ g`. When no
//! closed form for `λ` is supplied it is solved pointwise from the trace,
//! `λ = (R + Δf − |∇f|²/m) / n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::geometry::{Chart, GeometryError, LocalGeometry, ScalarField, TensorValue, Valence};
use crate::jets::Jet;

/// The constant `m` in `(1/m) df⊗df`; `Infinite` means `1/m = 0` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn new(m: f64) -> Result<Coupling, GeometryError> {
        if m == f64::INFINITY {
            Ok(Coupling::Infinite)
        } else if m.is_finite() && m > 0.0 {
            Ok(Coupling::Finite(m))
        } else {
            Err(GeometryError::Argument(format!(
                "m must be a positive real or inf, got {m}"
            )))
        }
    }

    /// `1/m`, zero for `m = ∞`.
    pub fn inverse(&self) -> f64 {
        match self {
            Coupling::Finite(m) => 1.0 / m,
            Coupling::Infinite => 0.0,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Coupling::Finite(m) => Some(*m),
            Coupling::Infinite => None,
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Finite(m) => write!(f, "{m}"),
            Coupling::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Coupling {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Coupling::Infinite),
            other => {
                let m: f64 = other.parse().map_err(|_| {
                    GeometryError::Argument(format!("cannot parse m from {other:?}"))
                })?;
                Coupling::new(m)
            }
        }
    }
}

impl Serialize for Coupling {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Coupling::Finite(m) => serializer.serialize_f64(*m),
            Coupling::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Coupling {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(m) => Coupling::new(m).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    ClosedForm,
    TraceSolved,
}

/// `(chart, f, m, λ)`.
#[derive(Clone, Debug)]
pub struct QemStructure {
    label: String,
    chart: Chart,
    potential: ScalarField,
    coupling: Coupling,
    lambda: Option<ScalarField>,
}

impl QemStructure {
    /// Structure with a closed-form `λ` field.
    pub fn new(
        label: impl Into<String>,
        chart: Chart,
        potential: ScalarField,
        coupling: Coupling,
        lambda: ScalarField,
    ) -> Self {
        QemStructure {
            label: label.into(),
            chart,
            potential,
            coupling,
            lambda: Some(lambda),
        }
    }

    /// Structure whose `λ` is solved pointwise from the trace identity.
    pub fn trace_solved(
        label: impl Into<String>,
        chart: Chart,
        potential: ScalarField,
        coupling: Coupling,
    ) -> Self {
        QemStructure {
            label: label.into(),
            chart,
            potential,
            coupling,
            lambda: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn lambda_source(&self) -> LambdaSource {
        if self.lambda.is_some() {
            LambdaSource::ClosedForm
        } else {
            LambdaSource::TraceSolved
        }
    }

    pub fn lambda_field(&self) -> Option<&ScalarField> {
        self.lambda.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `u = e^{−f/m}` as a field; `None` for `m = ∞`.
    pub fn u_field(&self) -> Option<ScalarField> {
        let m = self.coupling.finite()?;
        Some(self.potential.map("u", move |f| Ok(f.scale(-1.0 / m).exp())))
    }

    /// Jets of the metric, `f` and `λ` at `p`, seeded at `order`.
    pub fn frame(&self, p: &[f64], order: usize) -> Result<StructureFrame<'_>, GeometryError> {
        let geometry = LocalGeometry::new(&self.chart, p, order)?;
        let potential = geometry.scalar(&self.potential)?;
        let lambda = match &self.lambda {
            Some(field) => geometry.scalar(field)?,
            None => {
                if order < 2 {
                    return Err(GeometryError::Capability {
                        op: "solve_lambda",
                        required: 2,
                        available: order,
                    });
                }
                trace_lambda(&geometry, &potential, self.coupling.inverse())?
            }
        };
        Ok(StructureFrame {
            geometry,
            potential,
            lambda,
            coupling: self.coupling,
        })
    }

    /// Minimum of `u` over `points`; fails if `u ≤ 0` anywhere.
    pub fn check_u_positive(&self, points: &[Vec<f64>]) -> Result<f64, GeometryError> {
        let Some(u) = self.u_field() else {
            return Ok(f64::INFINITY);
        };
        let mut min = f64::INFINITY;
        for p in points {
            let value = u.value_at(p)?;
            if !(value > 0.0) {
                return Err(GeometryError::Argument(format!(
                    "u = exp(-f/m) must stay positive, got {value} at {p:?}"
                )));
            }
            min = min.min(value);
        }
        Ok(min)
    }
}

fn trace_lambda(geometry: &LocalGeometry<'_>, f: &Jet, inv_m: f64) -> Result<Jet, GeometryError> {
    let n = geometry.dim() as f64;
    let r = geometry.scalar_curvature()?;
    let lap = geometry.laplacian(f)?;
    let df = geometry.differential(f)?;
    let grad2 = geometry.pair(&df, &geometry.raise(&df));
    Ok((r + &lap - grad2.scale(inv_m)).scale(1.0 / n))
}

/// Jet data of a structure at one point; every identity is written on top.
pub struct StructureFrame<'s> {
    geometry: LocalGeometry<'s>,
    potential: Jet,
    lambda: Jet,
    coupling: Coupling,
}

impl<'s> StructureFrame<'s> {
    pub fn geometry(&self) -> &LocalGeometry<'s> {
        &self.geometry
    }

    pub fn potential(&self) -> &Jet {
        &self.potential
    }

    pub fn lambda(&self) -> &Jet {
        &self.lambda
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn inv_m(&self) -> f64 {
        self.coupling.inverse()
    }

    pub fn n(&self) -> f64 {
        self.geometry.dim() as f64
    }

    pub fn point(&self) -> &[f64] {
        self.geometry.point()
    }

    /// `u = e^{−f/m}`; unavailable for `m = ∞`.
    pub fn u(&self) -> Result<Jet, GeometryError> {
        let m = self.coupling.finite().ok_or(GeometryError::Capability {
            op: "u = exp(-f/m) needs finite m; order",
            required: 1,
            available: 0,
        })?;
        Ok(self.potential.scale(-1.0 / m).exp())
    }

    pub fn df(&self) -> Result<Vec<Jet>, GeometryError> {
        self.geometry.differential(&self.potential)
    }

    pub fn grad_f(&self) -> Result<Vec<Jet>, GeometryError> {
        self.geometry.gradient(&self.potential)
    }

    pub fn hess_f(&self) -> Result<Vec<Jet>, GeometryError> {
        self.geometry.hessian(&self.potential)
    }

    pub fn lap_f(&self) -> Result<Jet, GeometryError> {
        self.geometry.laplacian(&self.potential)
    }

    /// `|∇f|²`.
    pub fn grad_f_norm2(&self) -> Result<Jet, GeometryError> {
        let df = self.df()?;
        Ok(self.geometry.pair(&df, &self.geometry.raise(&df)))
    }

    pub fn df_outer_df(&self) -> Result<Vec<Jet>, GeometryError> {
        let df = self.df()?;
        Ok(self.geometry.outer(&df, &df))
    }

    /// `Ric + ∇²f − (1/m) df⊗df`.
    pub fn bakry_emery(&self) -> Result<Vec<Jet>, GeometryError> {
        let ric = self.geometry.ricci()?;
        let hess = self.hess_f()?;
        let dfdf = self.df_outer_df()?;
        let inv_m = self.inv_m();
        Ok(ric
            .iter()
            .zip(&hess)
            .zip(&dfdf)
            .map(|((r, h), d)| r + h - d.scale(inv_m))
            .collect())
    }

    /// `Ric_f − λ g`.
    pub fn defining_residual(&self) -> Result<Vec<Jet>, GeometryError> {
        let be = self.bakry_emery()?;
        let lambda_g = self.geometry.scaled_metric(&self.lambda);
        Ok(be.iter().zip(&lambda_g).map(|(a, b)| a - b).collect())
    }

    /// Traceless part of `Ric_f`, independent of `λ`.
    pub fn traceless_residual(&self) -> Result<Vec<Jet>, GeometryError> {
        let be = self.bakry_emery()?;
        let n = self.n();
        let trace = self.geometry.trace(&be).scale(1.0 / n);
        let g = self.geometry.scaled_metric(&trace);
        Ok(be.iter().zip(&g).map(|(a, b)| a - b).collect())
    }

    /// `λ` recomputed from the trace identity.
    pub fn trace_lambda(&self) -> Result<Jet, GeometryError> {
        trace_lambda(&self.geometry, &self.potential, self.inv_m())
    }

    pub fn tensor(&self, valence: Valence, jets: &[Jet]) -> TensorValue {
        TensorValue::from_jets(self.point(), self.geometry.dim(), valence, jets)
    }
}

/// `Ric_f = Ric + ∇²f − (1/m) df⊗df` at `p`.
pub fn bakry_emery_ricci(s: &QemStructure, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let frame = s.frame(p, 2)?;
    Ok(frame.tensor(Valence::COVARIANT2, &frame.bakry_emery()?))
}

/// `λ(p) = (R + Δf − |∇f|²/m) / n`.
pub fn solve_lambda(
    chart: &Chart,
    f: &ScalarField,
    coupling: Coupling,
    p: &[f64],
) -> Result<f64, GeometryError> {
    let geometry = LocalGeometry::new(chart, p, 2)?;
    let potential = geometry.scalar(f)?;
    Ok(trace_lambda(&geometry, &potential, coupling.inverse())?.value())
}

pub fn defining_residual(s: &QemStructure, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let frame = s.frame(p, 2)?;
    Ok(frame.tensor(Valence::COVARIANT2, &frame.defining_residual()?))
}

/// Residual statistics of the defining equation over a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GqemReport {
    pub n_points: usize,
    /// Coordinate-frame sup of `|Ric_f − λg|_ij`.
    pub max_component: f64,
    pub mean_component: f64,
    /// Invariant norm `|Ric_f − λg|_g`.
    pub max_norm: f64,
    pub mean_norm: f64,
    /// Invariant norm of the traceless part of `Ric_f`.
    pub max_traceless: f64,
    pub mean_traceless: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the defining equation at every sample point. Passes iff both the
/// full and the traceless residual stay below `tol` in the invariant norm.
pub fn is_gqem(s: &QemStructure, sample: &[Vec<f64>], tol: f64) -> Result<GqemReport, GeometryError> {
    if sample.is_empty() {
        return Err(GeometryError::Argument("empty sample".into()));
    }
    let mut report = GqemReport {
        n_points: sample.len(),
        max_component: 0.0,
        mean_component: 0.0,
        max_norm: 0.0,
        mean_norm: 0.0,
        max_traceless: 0.0,
        mean_traceless: 0.0,
        tolerance: tol,
        pass: false,
    };
    for p in sample {
        let frame = s.frame(p, 2)?;
        let geometry = frame.geometry();
        let residual = frame.defining_residual()?;
        let traceless = frame.traceless_residual()?;
        let component = residual.iter().fold(0.0f64, |m, j| m.max(j.value().abs()));
        let norm = geometry.norm2_tensor2(&residual).value().max(0.0).sqrt();
        let tl = geometry.norm2_tensor2(&traceless).value().max(0.0).sqrt();
        report.max_component = report.max_component.max(component);
        report.mean_component += component;
        report.max_norm = report.max_norm.max(norm);
        report.mean_norm += norm;
        report.max_traceless = report.max_traceless.max(tl);
        report.mean_traceless += tl;
    }
    let count = sample.len() as f64;
    report.mean_component /= count;
    report.mean_norm /= count;
    report.mean_traceless /= count;
    report.pass = report.max_norm < tol && report.max_traceless < tol;
    Ok(report)
}

/// `∇²f − (1/m) df⊗df + (m/u) ∇²u`, which vanishes for every smooth `f`.
pub fn u_transform_residual(s: &QemStructure, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let frame = s.frame(p, 2)?;
    Ok(frame.tensor(Valence::COVARIANT2, &u_transform_jets(&frame)?))
}

pub(crate) fn u_transform_jets(frame: &StructureFrame<'_>) -> Result<Vec<Jet>, GeometryError> {
    let Some(m) = frame.coupling().finite() else {
        return Err(GeometryError::Argument(
            "the u-transform needs finite m".into(),
        ));
    };
    let u = frame.u()?;
    let hess_u = frame.geometry().hessian(&u)?;
    let hess_f = frame.hess_f()?;
    let dfdf = frame.df_outer_df()?;
    let m_over_u = u.recip()?.scale(m);
    Ok(hess_f
        .iter()
        .zip(&dfdf)
        .zip(&hess_u)
        .map(|((h, d), hu)| h - d.scale(1.0 / m) + &m_over_u * hu)
        .collect())
}

/// `Ric(∇f,∇f) + ⟨∇_∇f ∇f, ∇f⟩ − |∇f|⁴/m − λ|∇f|²` (signed).
pub fn radial_identity_residual(s: &QemStructure, p: &[f64]) -> Result<f64, GeometryError> {
    let frame = s.frame(p, 2)?;
    radial_value(&frame)
}

pub(crate) fn radial_value(frame: &StructureFrame<'_>) -> Result<f64, GeometryError> {
    let geometry = frame.geometry();
    let ric = geometry.ricci()?;
    let grad = frame.grad_f()?;
    let hess = frame.hess_f()?;
    // ⟨∇_∇f ∇f, ∇f⟩ = ∇²f(∇f, ∇f)
    let ric_ff = geometry.apply2(ric, &grad, &grad).value();
    let hess_ff = geometry.apply2(&hess, &grad, &grad).value();
    let g2 = frame.grad_f_norm2()?.value();
    Ok(ric_ff + hess_ff - frame.inv_m() * g2 * g2 - frame.lambda().value() * g2)
}

/// Outcome of asking whether `ω ⊗ ω = ρ g` has a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RankOneVerdict {
    /// `ω` vanishes (within tolerance) and `ρ = 0`.
    Zero { rho: f64 },
    /// `ω ⊗ ω` has rank one while `g` has rank `n ≥ 2`.
    Impossible {
        /// Spread between the largest and smallest eigenvalue of
        /// `g⁻¹(ω⊗ω)`, equal to `|ω|²`.
        eigen_gap: f64,
        /// Distance `|ω⊗ω − ρ g|` from the best multiple `ρ = |ω|²/n`.
        best_fit_residual: f64,
    },
}

/// Decides solvability of `ω⊗ω = ρ g` for a covector `ω` and metric `g`.
pub fn rank_one_proportionality(
    covector: &[f64],
    metric: &[f64],
    tol: f64,
) -> Result<RankOneVerdict, GeometryError> {
    let n = covector.len();
    if n < 2 {
        return Err(GeometryError::Argument(format!(
            "rank-one test needs dimension >= 2, got {n}"
        )));
    }
    if metric.len() != n * n {
        return Err(GeometryError::Argument(format!(
            "metric has {} entries for a covector of length {n}",
            metric.len()
        )));
    }
    let inverse = crate::geometry::invert_matrix(metric, n).ok_or_else(|| {
        GeometryError::Degenerate {
            point: covector.to_vec(),
        }
    })?;
    let norm2: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| inverse[i * n + j] * covector[i] * covector[j])
        .sum::<f64>()
        .max(0.0);
    if norm2.sqrt() < tol {
        return Ok(RankOneVerdict::Zero { rho: 0.0 });
    }
    let nf = n as f64;
    Ok(RankOneVerdict::Impossible {
        eigen_gap: norm2,
        best_fit_residual: norm2 * (1.0 - 1.0 / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CovariantField2, SampleRegion};

    fn euclidean(n: usize) -> Chart {
        Chart::new(
            "euclidean",
            n,
            CovariantField2::conformal("delta", ScalarField::constant(1.0)),
            |_| true,
            SampleRegion::cube(n, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn coupling_parsing() {
        assert_eq!("inf".parse::<Coupling>().unwrap(), Coupling::Infinite);
        assert_eq!("2.5".parse::<Coupling>().unwrap(), Coupling::Finite(2.5));
        assert!("0".parse::<Coupling>().is_err());
        assert!("-1".parse::<Coupling>().is_err());
        assert_eq!(Coupling::Infinite.inverse(), 0.0);
    }

    #[test]
    fn constant_potential_on_flat_space() {
        let s = QemStructure::trace_solved(
            "flat",
            euclidean(3),
            ScalarField::constant(2.0),
            Coupling::Finite(2.0),
        );
        let be = bakry_emery_ricci(&s, &[0.1, 0.2, 0.3]).unwrap();
        assert!(be.max_abs() < 1e-15);
        assert_eq!(solve_lambda(s.chart(), s.potential(), s.coupling(), &[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn solve_lambda_hand_value() {
        // f = −3 ln(1 + |x|²) at (1, 0): Δf = −3, |∇f|² = 9.
        let f = ScalarField::new("f", |x| {
            let s = 1.0 + x[0].square() + x[1].square();
            Ok(s.ln()?.scale(-3.0))
        });
        let lambda = solve_lambda(&euclidean(2), &f, Coupling::Finite(3.0), &[1.0, 0.0]).unwrap();
        assert!((lambda + 3.0).abs() < 1e-14);
    }

    #[test]
    fn linear_potential_fails_the_defining_equation() {
        let s = QemStructure::trace_solved(
            "linear",
            euclidean(2),
            ScalarField::coordinate(0),
            Coupling::Finite(2.0),
        );
        let sample = s.chart().sample_points(5, 1).unwrap();
        let report = is_gqem(&s, &sample, 1e-8).unwrap();
        assert!(!report.pass);
        // Residual (1/(2m)) diag(−1, 1) with m = 2 has norm √2/4.
        assert!((report.max_norm - 2f64.sqrt() / 4.0).abs() < 1e-14);
        assert!((report.max_traceless - 2f64.sqrt() / 4.0).abs() < 1e-14);
        let r = defining_residual(&s, &[0.5, 0.5]).unwrap();
        assert!((r.get(&[0, 0]) + 0.25).abs() < 1e-15);
        assert!((r.get(&[1, 1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gaussian_soliton_passes_with_infinite_m() {
        let f = ScalarField::new("|x|^2/2", |x| {
            Ok((x[0].square() + x[1].square()).scale(0.5))
        });
        let s = QemStructure::trace_solved("gaussian", euclidean(2), f, Coupling::Infinite);
        let sample = s.chart().sample_points(10, 7).unwrap();
        let report = is_gqem(&s, &sample, 1e-8).unwrap();
        assert!(report.pass, "{report:?}");
        let frame = s.frame(&[0.3, 0.4], 2).unwrap();
        assert!((frame.lambda().value() - 1.0).abs() < 1e-15);
        assert!(u_transform_residual(&s, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn radial_identity_negative_control() {
        // f = x₁³ on R², m = 2, at (1, 0): 54 − 81/2 − 0.75·9 = 6.75.
        let f = ScalarField::new("x^3", |x| x[0].powi(3));
        let s = QemStructure::trace_solved("cubic", euclidean(2), f, Coupling::Finite(2.0));
        let r = radial_identity_residual(&s, &[1.0, 0.0]).unwrap();
        assert!((r - 6.75).abs() < 1e-12, "{r}");
    }

    #[test]
    fn rank_one_verdicts() {
        let g = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(
            rank_one_proportionality(&[0.0, 0.0], &g, 1e-12).unwrap(),
            RankOneVerdict::Zero { rho: 0.0 }
        );
        assert!(matches!(
            rank_one_proportionality(&[1.0, 0.0], &g, 1e-12).unwrap(),
            RankOneVerdict::Impossible { .. }
        ));
        match rank_one_proportionality(&[3.0, 4.0], &g, 1e-12).unwrap() {
            RankOneVerdict::Impossible { eigen_gap, .. } => assert!((eigen_gap - 25.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(rank_one_proportionality(&[1.0], &[1.0], 1e-12).is_err());
    }

    #[test]
    fn trace_solved_lambda_needs_order_two() {
        let s = QemStructure::trace_solved(
            "flat",
            euclidean(2),
            ScalarField::constant(0.0),
            Coupling::Finite(1.0),
        );
        assert!(matches!(
            s.frame(&[0.0, 0.0], 1),
            Err(GeometryError::Capability { op: "solve_lambda", required: 2, .. })
        ));
    }
}
