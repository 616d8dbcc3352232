//! A structure with non-constant scalar curvature and non-constant `λ`:
//! the plane with `g = (1 + |x|²) δ`, `u = τ + s + s²/2` (`s = |x|²`) and
//! `f = −m ln u`. Here `du/ds = 1 + s` matches the conformal factor, which
//! makes `∇u` a conformal field, so `λ` can be solved from the trace.

use qemcheck_core::geometry::{Chart, CovariantField2, SampleRegion, ScalarField};
use qemcheck_core::identities::{catalog, evaluate, CheckKind, Tolerances};
use qemcheck_core::jets::Jet;
use qemcheck_core::qem::{is_gqem, Coupling, QemStructure};

fn warped_plane(tau: f64, m: f64) -> QemStructure {
    let factor = ScalarField::new("1 + |x|^2", |x: &[Jet]| Ok(1.0 + x[0].square() + x[1].square()));
    let chart = Chart::new(
        "warped plane",
        2,
        CovariantField2::conformal("(1 + |x|^2) delta", factor),
        |_| true,
        SampleRegion::cube(2, 1.5),
    )
    .unwrap();
    let f = ScalarField::new("-m ln(tau + s + s^2/2)", move |x: &[Jet]| {
        let s = x[0].square() + x[1].square();
        Ok((tau + s.clone() + s.square().scale(0.5)).ln()?.scale(-m))
    });
    QemStructure::trace_solved("warped plane", chart, f, Coupling::Finite(m))
}

/// `R = −4/(1+s)³` and `ΔR = (1+s)⁻¹(4R' + 4sR'')` with `' = d/ds`.
fn curvature_oracle(p: &[f64]) -> (f64, f64) {
    let s = p[0] * p[0] + p[1] * p[1];
    let w = 1.0 + s;
    let r = -4.0 / w.powi(3);
    let r1 = 12.0 / w.powi(4);
    let r2 = -48.0 / w.powi(5);
    (r, (4.0 * r1 + 4.0 * s * r2) / w)
}

#[test]
fn structure_solves_the_equation_with_varying_curvature() {
    for (tau, m) in [(0.5, 1.0), (1.0, 2.0), (2.0, 5.0)] {
        let s = warped_plane(tau, m);
        let sample = s.chart().sample_points(100, 11).unwrap();
        let report = is_gqem(&s, &sample, 1e-8).unwrap();
        assert!(report.pass, "{report:?}");

        let mut lambdas = Vec::new();
        for p in sample.iter().take(10) {
            let frame = s.frame(p, 4).unwrap();
            let geometry = frame.geometry();
            let r = geometry.scalar_curvature().unwrap();
            let (r_exact, lap_exact) = curvature_oracle(p);
            assert!((r.value() - r_exact).abs() < 1e-12, "{} {r_exact}", r.value());
            let lap = geometry.laplacian(r).unwrap().value();
            assert!((lap - lap_exact).abs() < 1e-10 * (1.0 + lap_exact.abs()), "{lap} {lap_exact}");
            lambdas.push(frame.lambda().value());
        }
        let spread = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-2, "λ should vary, spread {spread}");
    }
}

#[test]
fn every_applicable_pointwise_identity_holds() {
    let tols = Tolerances::default();
    let s = warped_plane(1.0, 2.0);
    let sample = s.chart().sample_points(12, 3).unwrap();
    for entry in catalog().iter().filter(|e| e.kind == CheckKind::Pointwise) {
        if entry.inapplicable(&s).is_some() {
            continue;
        }
        for p in &sample {
            let r = evaluate(entry.id, &s, p, &tols).unwrap();
            assert!(r.pass, "{} at {p:?}: {} >= {}", entry.id, r.residual, r.tolerance_used);
        }
    }
}

#[test]
fn finite_difference_laplacian_sees_the_curvature_variation() {
    let tols = Tolerances::default();
    let s = warped_plane(1.0, 2.0);
    for p in [[0.3, -0.2], [1.0, 0.4], [-0.7, 1.1]] {
        let (_, lap_exact) = curvature_oracle(&p);
        assert!(lap_exact.abs() > 0.5);
        let r = evaluate("scalar_curvature_laplacian_fd", &s, &p, &tols).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.residual > 0.0);
    }
}
