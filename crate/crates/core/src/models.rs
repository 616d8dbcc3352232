//! Model geometries (Euclidean space, round spheres, hyperbolic space) and
//! the explicit structures built from height functions on them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    AmbientSignature, Chart, CovariantField2, Embedding, GeometryError, SampleRegion, ScalarField,
};
use crate::jets::Jet;
use crate::qem::{Coupling, QemStructure};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported chart {chart} for the {family} family")]
    UnsupportedChart { family: Family, chart: ChartKind },
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Sphere,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Cartesian,
    Stereographic,
    Polar,
    PoincareBall,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Euclidean => "euclidean",
            Family::Sphere => "sphere",
            Family::Hyperbolic => "hyperbolic",
        })
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChartKind::Cartesian => "cartesian",
            ChartKind::Stereographic => "stereographic",
            ChartKind::Polar => "polar",
            ChartKind::PoincareBall => "poincare_ball",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Family::Euclidean),
            "sphere" => Ok(Family::Sphere),
            "hyperbolic" => Ok(Family::Hyperbolic),
            other => Err(format!(
                "unknown family {other:?} (expected euclidean, sphere or hyperbolic)"
            )),
        }
    }
}

impl FromStr for ChartKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartesian" => Ok(ChartKind::Cartesian),
            "stereographic" => Ok(ChartKind::Stereographic),
            "polar" => Ok(ChartKind::Polar),
            "poincare_ball" => Ok(ChartKind::PoincareBall),
            other => Err(format!(
                "unknown chart {other:?} (expected cartesian, stereographic, polar or poincare_ball)"
            )),
        }
    }
}

/// Parameters of a model structure.
///
/// `v_axis` selects the ambient axis `e_k` used by height functions. For the
/// hyperbolic family only the apex `e_0` lies on the hyperboloid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub dim: usize,
    pub radius: f64,
    pub chart: ChartKind,
    pub tau: f64,
    pub m: Coupling,
    pub v_axis: usize,
}

impl ModelSpec {
    /// Default chart per family: cartesian, polar, poincare_ball.
    pub fn new(family: Family, dim: usize, tau: f64, m: Coupling) -> Self {
        let chart = match family {
            Family::Euclidean => ChartKind::Cartesian,
            Family::Sphere => ChartKind::Polar,
            Family::Hyperbolic => ChartKind::PoincareBall,
        };
        ModelSpec {
            family,
            dim,
            radius: 1.0,
            chart,
            tau,
            m,
            v_axis: 0,
        }
    }

    pub fn with_chart(mut self, chart: ChartKind) -> Self {
        self.chart = chart;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_axis(mut self, v_axis: usize) -> Self {
        self.v_axis = v_axis;
        self
    }

    /// Checks the geometric parameters and the chart pairing.
    pub fn validate_geometry(&self) -> Result<(), ModelError> {
        let n = self.dim;
        if n < 2 {
            return Err(ModelError::Constraint(format!(
                "dimension n must be >= 2, got {n}"
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ModelError::Constraint(format!(
                "radius r must be positive, got {}",
                self.radius
            )));
        }
        let supported = matches!(
            (self.family, self.chart),
            (Family::Euclidean, ChartKind::Cartesian)
                | (Family::Sphere, ChartKind::Stereographic)
                | (Family::Sphere, ChartKind::Polar)
                | (Family::Hyperbolic, ChartKind::PoincareBall)
        );
        if !supported {
            return Err(ModelError::UnsupportedChart {
                family: self.family,
                chart: self.chart,
            });
        }
        match self.family {
            Family::Hyperbolic if self.radius != 1.0 => Err(ModelError::Constraint(format!(
                "hyperbolic space has fixed curvature -1, so r must be 1 (got {})",
                self.radius
            ))),
            Family::Hyperbolic if self.v_axis != 0 => Err(ModelError::Constraint(format!(
                "hyperbolic height functions need v on the hyperboloid: only v_axis = 0 is allowed (got {})",
                self.v_axis
            ))),
            Family::Sphere if self.v_axis > n => Err(ModelError::Constraint(format!(
                "v_axis must lie in 0..={n} for an n-sphere in R^(n+1) (got {})",
                self.v_axis
            ))),
            _ => Ok(()),
        }
    }

    /// Full check including the potential's parameter constraints.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.validate_geometry()?;
        if self.m.finite().is_none() {
            return Err(ModelError::Constraint(
                "model potentials f = -m ln u need finite m".into(),
            ));
        }
        let n = self.dim as f64;
        match self.family {
            Family::Sphere => {
                let bound = self.radius / n;
                if !(self.tau > bound) {
                    return Err(ModelError::Constraint(format!(
                        "sphere potential requires tau > r/n = {bound} so that u = tau - h_v/n > 0 (got tau = {})",
                        self.tau
                    )));
                }
            }
            Family::Euclidean => {
                if !(self.tau > 0.0) {
                    return Err(ModelError::Constraint(format!(
                        "euclidean potential requires tau > 0 so that u = tau + |x|^2 > 0 (got tau = {})",
                        self.tau
                    )));
                }
            }
            Family::Hyperbolic => {
                if !(self.tau > -1.0) {
                    return Err(ModelError::Constraint(format!(
                        "hyperbolic potential requires tau > -1 so that u = tau + h_v > 0 (got tau = {})",
                        self.tau
                    )));
                }
            }
        }
        if !self.tau.is_finite() {
            return Err(ModelError::Constraint(format!("tau must be finite (got {})", self.tau)));
        }
        Ok(())
    }
}

fn norm2(x: &[Jet]) -> Jet {
    let mut s = x[0].square();
    for xi in &x[1..] {
        s = s + xi.square();
    }
    s
}

fn euclidean_chart(n: usize) -> Result<Chart, GeometryError> {
    Chart::new(
        format!("R^{n} cartesian"),
        n,
        CovariantField2::conformal("delta", ScalarField::constant(1.0)),
        |_| true,
        SampleRegion::cube(n, 1.5),
    )
}

fn stereographic_chart(n: usize, r: f64) -> Result<Chart, GeometryError> {
    let r2 = r * r;
    let factor = ScalarField::new("4r^4/(r^2+|x|^2)^2", move |x| {
        Ok((norm2(x) + r2).powi(-2)?.scale(4.0 * r2 * r2))
    });
    let embedding = Embedding::new(n + 1, AmbientSignature::Euclidean, move |x| {
        let s = norm2(x);
        let denom = (&s + r2).recip()?;
        let mut out = Vec::with_capacity(n + 1);
        out.push((&s - r2).scale(r) * &denom);
        for xi in x {
            out.push(xi.scale(2.0 * r2) * &denom);
        }
        Ok(out)
    });
    Ok(Chart::new(
        format!("S^{n}({r}) stereographic"),
        n,
        CovariantField2::conformal("stereographic", factor),
        |_| true,
        SampleRegion::cube(n, 1.5 * r),
    )?
    .with_embedding(embedding))
}

/// Polar angles `(θ₁, …, θ_n)`, last angle periodic.
fn polar_chart(n: usize, r: f64) -> Result<Chart, GeometryError> {
    let r2 = r * r;
    let metric = CovariantField2::new("r^2 diag(1, sin^2 θ1, ...)", move |x| {
        let zero = x[0].zero_like();
        let mut out = vec![zero; n * n];
        let mut factor = x[0].constant_like(r2);
        for k in 0..n {
            out[k * n + k] = factor.clone();
            if k + 1 < n {
                factor = factor * x[k].sin().square();
            }
        }
        Ok(out)
    });
    let embedding = Embedding::new(n + 1, AmbientSignature::Euclidean, move |x| {
        let mut out = Vec::with_capacity(n + 1);
        let mut prefix = x[0].constant_like(r);
        for xk in x {
            out.push(&prefix * &xk.cos());
            prefix = prefix * xk.sin();
        }
        out.push(prefix);
        Ok(out)
    });
    let mut bounds = vec![(0.0, PI); n];
    bounds[n - 1] = (0.0, 2.0 * PI);
    let mut sampling = vec![(0.15, PI - 0.15); n];
    sampling[n - 1] = (0.0, 2.0 * PI);
    Ok(Chart::new(
        format!("S^{n}({r}) polar"),
        n,
        metric,
        move |x| x[..n - 1].iter().all(|&t| t > 0.0 && t < PI),
        SampleRegion {
            bounds: sampling,
            max_radius: None,
        },
    )?
    .with_embedding(embedding)
    .with_compact_cover(bounds))
}

fn poincare_chart(n: usize) -> Result<Chart, GeometryError> {
    let factor = ScalarField::new("4/(1-|x|^2)^2", |x| {
        Ok((1.0 - norm2(x)).powi(-2)?.scale(4.0))
    });
    let embedding = Embedding::new(n + 1, AmbientSignature::Minkowski, move |x| {
        let s = norm2(x);
        let denom = (1.0 - &s).recip()?;
        let mut out = Vec::with_capacity(n + 1);
        out.push((1.0 + &s) * &denom);
        for xi in x {
            out.push(xi.scale(2.0) * &denom);
        }
        Ok(out)
    });
    Ok(Chart::new(
        format!("H^{n} poincare ball"),
        n,
        CovariantField2::conformal("poincare", factor),
        |x| x.iter().map(|v| v * v).sum::<f64>() < 1.0,
        SampleRegion {
            bounds: vec![(-0.75, 0.75); n],
            max_radius: Some(0.75),
        },
    )?
    .with_embedding(embedding))
}

pub fn make_chart(spec: &ModelSpec) -> Result<Chart, ModelError> {
    spec.validate_geometry()?;
    let n = spec.dim;
    Ok(match spec.chart {
        ChartKind::Cartesian => euclidean_chart(n)?,
        ChartKind::Stereographic => stereographic_chart(n, spec.radius)?,
        ChartKind::Polar => polar_chart(n, spec.radius)?,
        ChartKind::PoincareBall => poincare_chart(n)?,
    })
}

/// Height function along `e_{v_axis}`: the ambient coordinate on the sphere,
/// `cosh` of the distance to the apex on hyperbolic space.
pub fn height_field(spec: &ModelSpec) -> Result<ScalarField, ModelError> {
    spec.validate_geometry()?;
    let axis = spec.v_axis;
    let chart = make_chart(spec)?;
    match spec.family {
        Family::Euclidean => Err(ModelError::UnsupportedChart {
            family: spec.family,
            chart: spec.chart,
        }),
        Family::Sphere | Family::Hyperbolic => {
            let embedding = chart
                .embedding()
                .cloned()
                .expect("model sphere and hyperbolic charts carry an embedding");
            Ok(ScalarField::new(format!("h_e{axis}"), move |x| {
                Ok(embedding.eval(x)?.swap_remove(axis))
            }))
        }
    }
}

/// Three admissible values of `τ` used by parameter sweeps.
pub fn default_taus(family: Family, dim: usize, radius: f64) -> [f64; 3] {
    match family {
        Family::Sphere => {
            let bound = radius / dim as f64;
            [bound + 0.25, bound + 0.5, bound + 1.5]
        }
        Family::Euclidean => [0.5, 1.0, 2.0],
        Family::Hyperbolic => [-0.5, 0.5, 2.0],
    }
}

/// `u` as a function of the chart variables.
fn u_field(spec: &ModelSpec) -> Result<ScalarField, ModelError> {
    let tau = spec.tau;
    let n = spec.dim as f64;
    Ok(match spec.family {
        Family::Euclidean => ScalarField::new("tau + |x|^2", move |x| Ok(norm2(x) + tau)),
        Family::Sphere => height_field(spec)?.map("tau - h_v/n", move |h| Ok(tau - h.scale(1.0 / n))),
        Family::Hyperbolic => height_field(spec)?.map("tau + h_v", move |h| Ok(h + tau)),
    })
}

/// Explicit structure `f = −m ln u` with its closed-form `λ` (trace-solved on
/// spheres of radius `r ≠ 1`).
pub fn example_structure(spec: &ModelSpec) -> Result<QemStructure, ModelError> {
    spec.validate()?;
    let chart = make_chart(spec)?;
    let m = spec.m.finite().expect("validated finite m");
    let n = spec.dim as f64;
    let tau = spec.tau;
    let u = u_field(spec)?;
    let f = u.map("-m ln u", move |u| Ok(u.ln()?.scale(-m)));
    let label = format!(
        "{} n={} r={} tau={} m={}",
        spec.family, spec.dim, spec.radius, spec.tau, spec.m
    );
    let lambda: Option<ScalarField> = match spec.family {
        Family::Euclidean => Some(u.map("-2m/u", move |u| Ok(u.recip()?.scale(-2.0 * m)))),
        Family::Sphere if spec.radius == 1.0 => Some(u.map("(n-1) - m(tau-u)/u", move |u| {
            Ok(((tau - u).checked_div(u)?).scale(-m) + (n - 1.0))
        })),
        Family::Sphere => None,
        Family::Hyperbolic => Some(u.map("-(n-1) - m(u-tau)/u", move |u| {
            Ok(((u - tau).checked_div(u)?).scale(-m) - (n - 1.0))
        })),
    };
    let structure = match lambda {
        Some(lambda) => QemStructure::new(label, chart, f, spec.m, lambda),
        None => QemStructure::trace_solved(label, chart, f, spec.m),
    };
    let probe = structure.chart().sample_points(64, 0x5eed)?;
    structure
        .check_u_positive(&probe)
        .map_err(|e| ModelError::Constraint(e.to_string()))?;
    Ok(structure)
}

/// Stereographic coordinates (projection from the pole `X₀ = r`) of a point
/// on the embedded sphere of radius `r`.
pub fn ambient_to_stereographic(ambient: &[f64], r: f64) -> Vec<f64> {
    let scale = r / (r - ambient[0]);
    ambient[1..].iter().map(|x| x * scale).collect()
}

/// Polar angles of a point on an embedded sphere, the last angle in `[0, 2π)`.
pub fn ambient_to_polar(ambient: &[f64]) -> Vec<f64> {
    let n = ambient.len() - 1;
    let mut angles = Vec::with_capacity(n);
    let mut tail2: f64 = ambient.iter().map(|x| x * x).sum::<f64>();
    for k in 0..n - 1 {
        tail2 -= ambient[k] * ambient[k];
        let rest = tail2.max(0.0).sqrt();
        angles.push(rest.atan2(ambient[k]));
    }
    let last = ambient[n].atan2(ambient[n - 1]);
    angles.push(if last < 0.0 { last + 2.0 * PI } else { last });
    angles
}

/// `|x|²` of the coordinate jets.
pub fn coordinate_norm2(x: &[Jet]) -> Jet {
    norm2(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hessian, scalar_curvature, LocalGeometry};
    use crate::qem::is_gqem;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn metrics_at_origin() {
        let sphere = ModelSpec::new(Family::Sphere, 3, 1.0, Coupling::Finite(2.0))
            .with_chart(ChartKind::Stereographic);
        let g = make_chart(&sphere).unwrap().metric_at(&[0.0; 3]).unwrap();
        assert_eq!(g, vec![4.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 4.0]);
        let ball = ModelSpec::new(Family::Hyperbolic, 2, 1.0, Coupling::Finite(2.0));
        let g = make_chart(&ball).unwrap().metric_at(&[0.0; 2]).unwrap();
        assert_eq!(g, vec![4.0, 0.0, 0.0, 4.0]);
        let flat = ModelSpec::new(Family::Euclidean, 2, 1.0, Coupling::Finite(2.0));
        let g = make_chart(&flat).unwrap().metric_at(&[0.3, -7.0]).unwrap();
        assert_eq!(g, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unsupported_pairs_and_constraints() {
        let bad = ModelSpec::new(Family::Euclidean, 2, 1.0, Coupling::Finite(2.0))
            .with_chart(ChartKind::Polar);
        assert!(matches!(make_chart(&bad), Err(ModelError::UnsupportedChart { .. })));
        let low_tau = ModelSpec::new(Family::Sphere, 2, 0.5, Coupling::Finite(2.0));
        let err = example_structure(&low_tau).unwrap_err().to_string();
        assert!(err.contains("tau > r/n"), "{err}");
        let flat = ModelSpec::new(Family::Euclidean, 2, 0.0, Coupling::Finite(2.0));
        assert!(example_structure(&flat).unwrap_err().to_string().contains("tau > 0"));
        let hyp = ModelSpec::new(Family::Hyperbolic, 2, -1.0, Coupling::Finite(2.0));
        assert!(example_structure(&hyp).unwrap_err().to_string().contains("tau > -1"));
        let inf = ModelSpec::new(Family::Euclidean, 2, 1.0, Coupling::Infinite);
        assert!(example_structure(&inf).is_err());
        let axis = ModelSpec::new(Family::Hyperbolic, 2, 1.0, Coupling::Finite(2.0)).with_axis(1);
        assert!(make_chart(&axis).is_err());
    }

    #[test]
    fn hand_lambda_values() {
        // The pole of e_0 sits on the polar chart boundary, so use v = e_1.
        let polar = ModelSpec::new(Family::Sphere, 2, 1.0, Coupling::Finite(2.0)).with_axis(1);
        let s = example_structure(&polar).unwrap();
        // X₁ = sinθ₁cosθ₂ = 1 at (π/2, 0).
        let lambda = s.lambda_field().unwrap().value_at(&[PI / 2.0, 0.0]).unwrap();
        close(lambda, -1.0, 1e-14);

        let flat = example_structure(&ModelSpec::new(Family::Euclidean, 2, 1.0, Coupling::Finite(3.0)))
            .unwrap();
        close(flat.lambda_field().unwrap().value_at(&[1.0, 0.0]).unwrap(), -3.0, 1e-14);

        let hyp = example_structure(&ModelSpec::new(Family::Hyperbolic, 2, 1.0, Coupling::Finite(2.0)))
            .unwrap();
        close(hyp.lambda_field().unwrap().value_at(&[0.0, 0.0]).unwrap(), -2.0, 1e-14);
    }

    #[test]
    fn height_values() {
        let sphere = ModelSpec::new(Family::Sphere, 3, 1.0, Coupling::Finite(2.0)).with_radius(2.0);
        let h = height_field(&sphere).unwrap();
        close(h.value_at(&[0.7, 1.0, 2.0]).unwrap(), 2.0 * 0.7f64.cos(), 1e-15);
        let hyp = ModelSpec::new(Family::Hyperbolic, 3, 0.0, Coupling::Finite(2.0));
        close(height_field(&hyp).unwrap().value_at(&[0.0; 3]).unwrap(), 1.0, 1e-15);
        // cosh of distance 2 artanh|y|.
        let y = 0.5f64;
        let d = 2.0 * y.atanh();
        close(height_field(&hyp).unwrap().value_at(&[0.0, y, 0.0]).unwrap(), d.cosh(), 1e-14);
    }

    #[test]
    fn sphere_height_hessian() {
        for (chart, r) in [(ChartKind::Polar, 1.7), (ChartKind::Stereographic, 0.6)] {
            let spec = ModelSpec::new(Family::Sphere, 3, 1.0, Coupling::Finite(2.0))
                .with_chart(chart)
                .with_radius(r)
                .with_axis(2);
            let c = make_chart(&spec).unwrap();
            let h = height_field(&spec).unwrap();
            for p in c.sample_points(20, 3).unwrap() {
                let hess = hessian(&c, &h, &p).unwrap();
                let g = c.metric_at(&p).unwrap();
                let hv = h.value_at(&p).unwrap();
                for k in 0..9 {
                    assert!((hess.components[k] + hv / (r * r) * g[k]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn hyperbolic_height_hessian_is_h_times_g() {
        let spec = ModelSpec::new(Family::Hyperbolic, 3, 0.5, Coupling::Finite(2.0));
        let c = make_chart(&spec).unwrap();
        let h = height_field(&spec).unwrap();
        for p in c.sample_points(20, 4).unwrap() {
            let hess = hessian(&c, &h, &p).unwrap();
            let g = c.metric_at(&p).unwrap();
            let hv = h.value_at(&p).unwrap();
            for k in 0..9 {
                assert!((hess.components[k] - hv * g[k]).abs() < 1e-8 * (1.0 + g[k].abs() * hv));
            }
        }
    }

    #[test]
    fn examples_satisfy_the_defining_equation() {
        let specs = [
            ModelSpec::new(Family::Sphere, 2, 1.0, Coupling::Finite(2.0)),
            ModelSpec::new(Family::Sphere, 3, 0.8, Coupling::Finite(1.5)).with_chart(ChartKind::Stereographic),
            ModelSpec::new(Family::Sphere, 3, 2.0, Coupling::Finite(3.0)).with_radius(2.5),
            ModelSpec::new(Family::Euclidean, 3, 0.5, Coupling::Finite(4.0)),
            ModelSpec::new(Family::Hyperbolic, 2, -0.5, Coupling::Finite(2.0)),
            ModelSpec::new(Family::Hyperbolic, 4, 3.0, Coupling::Finite(0.7)),
        ];
        for spec in specs {
            let s = example_structure(&spec).unwrap();
            let sample = s.chart().sample_points(100, 11).unwrap();
            let report = is_gqem(&s, &sample, 1e-8).unwrap();
            assert!(report.pass, "{spec:?}: {report:?}");
            assert!(report.max_component < 1e-8, "{spec:?}: {report:?}");
        }
    }

    #[test]
    fn closed_form_lambda_matches_trace() {
        for spec in [
            ModelSpec::new(Family::Sphere, 3, 1.0, Coupling::Finite(2.0)),
            ModelSpec::new(Family::Hyperbolic, 3, 0.2, Coupling::Finite(5.0)),
        ] {
            let s = example_structure(&spec).unwrap();
            for p in s.chart().sample_points(30, 9).unwrap() {
                let frame = s.frame(&p, 2).unwrap();
                close(frame.lambda().value(), frame.trace_lambda().unwrap().value(), 1e-9);
            }
        }
    }

    #[test]
    fn sphere_invariants_agree_across_charts() {
        let base = ModelSpec::new(Family::Sphere, 3, 1.0, Coupling::Finite(2.0)).with_radius(1.3);
        let polar = example_structure(&base.clone().with_chart(ChartKind::Polar)).unwrap();
        let stereo = example_structure(&base.with_chart(ChartKind::Stereographic)).unwrap();
        let embedding = polar.chart().embedding().unwrap();
        for p in polar.chart().sample_points(25, 5).unwrap() {
            let ambient = embedding.point(&p).unwrap();
            let q = ambient_to_stereographic(&ambient, 1.3);
            let back = stereo.chart().embedding().unwrap().point(&q).unwrap();
            for (a, b) in ambient.iter().zip(&back) {
                close(*a, *b, 1e-12);
            }
            let fp = polar.frame(&p, 2).unwrap();
            let fq = stereo.frame(&q, 2).unwrap();
            close(
                fp.geometry().scalar_curvature().unwrap().value(),
                fq.geometry().scalar_curvature().unwrap().value(),
                1e-8,
            );
            close(fp.grad_f_norm2().unwrap().value(), fq.grad_f_norm2().unwrap().value(), 1e-8);
            close(fp.lap_f().unwrap().value(), fq.lap_f().unwrap().value(), 1e-8);
            close(fp.lambda().value(), fq.lambda().value(), 1e-8);
        }
    }

    #[test]
    fn polar_round_trip() {
        let spec = ModelSpec::new(Family::Sphere, 4, 1.0, Coupling::Finite(2.0)).with_radius(0.9);
        let c = make_chart(&spec).unwrap();
        for p in c.sample_points(10, 2).unwrap() {
            let back = ambient_to_polar(&c.embedding().unwrap().point(&p).unwrap());
            for (a, b) in p.iter().zip(&back) {
                close(*a, *b, 1e-12);
            }
        }
        let r = scalar_curvature(&c, &c.sample_points(1, 8).unwrap()[0]).unwrap();
        close(r, 12.0 / 0.81, 1e-10);
        assert!(LocalGeometry::new(&c, &[0.0, 1.0, 1.0, 1.0], 2).is_err());
    }
}
