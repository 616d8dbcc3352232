//! `m = ∞` on the round sphere: `f = h_v` gives `∇²f = −h_v g` and
//! `Ric = (n−1) g`, so `λ = (n−1) − h_v` varies while `1/m = 0`.

use qemcheck_core::identities::{catalog, evaluate, CheckKind, Tolerances};
use qemcheck_core::models::{height_field, make_chart, Family, ModelSpec};
use qemcheck_core::qem::{is_gqem, Coupling, QemStructure};

fn soliton_sphere(n: usize) -> (QemStructure, ModelSpec) {
    let spec = ModelSpec::new(Family::Sphere, n, 1.0, Coupling::Infinite);
    let chart = make_chart(&spec).unwrap();
    let h = height_field(&spec).unwrap();
    (QemStructure::trace_solved("height potential", chart, h, Coupling::Infinite), spec)
}

#[test]
fn trace_solved_lambda_matches_the_closed_form() {
    for n in [2, 3, 4] {
        let (s, spec) = soliton_sphere(n);
        let h = height_field(&spec).unwrap();
        let sample = s.chart().sample_points(50, 8).unwrap();
        assert!(is_gqem(&s, &sample, 1e-8).unwrap().pass);
        for p in &sample {
            let lambda = s.frame(p, 2).unwrap().lambda().value();
            let hv = h.value_at(p).unwrap();
            assert!((lambda - ((n - 1) as f64 - hv)).abs() < 1e-10, "{lambda} {hv}");
        }
    }
}

#[test]
fn pointwise_identities_hold_without_the_quadratic_term() {
    let tols = Tolerances::default();
    for n in [2, 3] {
        let (s, _) = soliton_sphere(n);
        let sample = s.chart().sample_points(10, 9).unwrap();
        let mut checked = Vec::new();
        for entry in catalog().iter().filter(|e| e.kind == CheckKind::Pointwise) {
            if entry.inapplicable(&s).is_some() {
                continue;
            }
            for p in &sample {
                let r = evaluate(entry.id, &s, p, &tols).unwrap();
                assert!(r.pass, "n={n} {} at {p:?}: {} >= {}", entry.id, r.residual, r.tolerance_used);
            }
            checked.push(entry.id);
        }
        assert!(checked.contains(&"scalar_curvature_laplacian"), "{checked:?}");
    }
}
