//! Coordinate charts, jet-evaluable fields and Levi-Civita calculus.
//!
//! Every operator works on jets: a [`LocalGeometry`] holds the metric and its
//! inverse as jets at a base point, and each differential operator consumes
//! jets of order `k` and returns jets of order `k - 1` or `k - 2`. Results can
//! therefore be differentiated again (`∇R`, `ΔR`, `div ∇_∇f ∇f`) as long as
//! enough order was seeded. Operators check the order they need and fail with
//! [`GeometryError::Capability`] instead of returning truncated garbage.
//!
//! Flat index conventions: a 2-tensor `T_ij` lives at `i * n + j`, the
//! Christoffel symbol `Γ^k_ij` at `(k * n + i) * n + j`, and the Riemann
//! tensor `R^l_ijk` at `((l * n + i) * n + j) * n + k`.

use std::cell::OnceCell;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{op} needs jets of order {required}, only {available} available")]
    Capability {
        op: &'static str,
        required: usize,
        available: usize,
    },
    #[error("metric is degenerate or not positive definite at {point:?}")]
    Degenerate { point: Vec<f64> },
    #[error("metric is not symmetric at {point:?}")]
    Asymmetric { point: Vec<f64> },
    #[error("point {point:?} lies outside the domain of chart {chart}")]
    OutsideDomain { chart: String, point: Vec<f64> },
    #[error("valence mismatch: expected {expected}, found {found}")]
    Valence { expected: Valence, found: Valence },
    #[error("field {label} returned {got} components, expected {expected}")]
    FieldShape {
        label: String,
        got: usize,
        expected: usize,
    },
    #[error("{0}")]
    Argument(String),
}

pub type FieldFn<T> = dyn Fn(&[Jet]) -> Result<T, JetError> + Send + Sync;

/// A scalar function of chart coordinates, evaluated on seeded jets.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    eval: Arc<FieldFn<Jet>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

impl ScalarField {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[Jet]) -> Result<Jet, JetError> + Send + Sync + 'static,
    {
        ScalarField {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: f64) -> Self {
        ScalarField::new(format!("const({value})"), move |x| {
            Ok(x[0].constant_like(value))
        })
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(axis: usize) -> Self {
        ScalarField::new(format!("x{axis}"), move |x| Ok(x[axis].clone()))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, vars: &[Jet]) -> Result<Jet, JetError> {
        (self.eval)(vars)
    }

    pub fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, GeometryError> {
        Ok(self.eval(&Jet::seed_point(point, order.max(1))?)?.truncate(order))
    }

    pub fn value_at(&self, point: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.jet_at(point, 1)?.value())
    }

    /// `field ∘ self`: post-composes with a jet map.
    pub fn map<F>(&self, label: impl Into<String>, op: F) -> ScalarField
    where
        F: Fn(&Jet) -> Result<Jet, JetError> + Send + Sync + 'static,
    {
        let inner = self.clone();
        ScalarField::new(label, move |x| op(&inner.eval(x)?))
    }
}

/// A contravariant vector field `X^i`.
#[derive(Clone)]
pub struct VectorField {
    label: String,
    eval: Arc<FieldFn<Vec<Jet>>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.label)
    }
}

impl VectorField {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[Jet]) -> Result<Vec<Jet>, JetError> + Send + Sync + 'static,
    {
        VectorField {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    /// Constant coordinate components.
    pub fn constant(components: Vec<f64>) -> Self {
        VectorField::new("const", move |x| {
            Ok(components.iter().map(|&c| x[0].constant_like(c)).collect())
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, vars: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let out = (self.eval)(vars)?;
        if out.len() != vars.len() {
            return Err(GeometryError::FieldShape {
                label: self.label.clone(),
                got: out.len(),
                expected: vars.len(),
            });
        }
        Ok(out)
    }
}

/// A covariant 2-tensor field `T_ij`, stored row-major.
#[derive(Clone)]
pub struct CovariantField2 {
    label: String,
    eval: Arc<FieldFn<Vec<Jet>>>,
}

impl fmt::Debug for CovariantField2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovariantField2({})", self.label)
    }
}

impl CovariantField2 {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[Jet]) -> Result<Vec<Jet>, JetError> + Send + Sync + 'static,
    {
        CovariantField2 {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    /// `φ(x) δ_ij`, the shape of every conformally flat metric.
    pub fn conformal(label: impl Into<String>, factor: ScalarField) -> Self {
        CovariantField2::new(label, move |x| {
            let n = x.len();
            let c = factor.eval(x)?;
            let zero = c.zero_like();
            Ok((0..n * n)
                .map(|ij| if ij / n == ij % n { c.clone() } else { zero.clone() })
                .collect())
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, vars: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let out = (self.eval)(vars)?;
        let n = vars.len();
        if out.len() != n * n {
            return Err(GeometryError::FieldShape {
                label: self.label.clone(),
                got: out.len(),
                expected: n * n,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientSignature {
    Euclidean,
    /// `-x₀² + x₁² + … + x_n²`.
    Minkowski,
}

/// Map from chart coordinates into an ambient linear space.
#[derive(Clone)]
pub struct Embedding {
    pub ambient_dim: usize,
    pub signature: AmbientSignature,
    map: Arc<FieldFn<Vec<Jet>>>,
}

impl Embedding {
    pub fn new<F>(ambient_dim: usize, signature: AmbientSignature, map: F) -> Self
    where
        F: Fn(&[Jet]) -> Result<Vec<Jet>, JetError> + Send + Sync + 'static,
    {
        Embedding {
            ambient_dim,
            signature,
            map: Arc::new(map),
        }
    }

    pub fn eval(&self, vars: &[Jet]) -> Result<Vec<Jet>, JetError> {
        (self.map)(vars)
    }

    pub fn point(&self, coords: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let vars = Jet::seed_point(coords, 1)?;
        Ok(self.eval(&vars)?.iter().map(Jet::value).collect())
    }
}

/// Coordinate box used for random sampling, optionally cut to a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    pub bounds: Vec<(f64, f64)>,
    pub max_radius: Option<f64>,
}

impl SampleRegion {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        SampleRegion {
            bounds: vec![(-half_width, half_width); dim],
            max_radius: None,
        }
    }

    fn admits(&self, p: &[f64]) -> bool {
        self.max_radius
            .is_none_or(|r| p.iter().map(|x| x * x).sum::<f64>() < r * r)
    }
}

type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A single-chart Riemannian manifold (or a dense open piece of one).
#[derive(Clone)]
pub struct Chart {
    label: String,
    dim: usize,
    metric: CovariantField2,
    domain: DomainFn,
    embedding: Option<Embedding>,
    sampling: SampleRegion,
    compact_cover: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Chart {
    pub fn new<D>(
        label: impl Into<String>,
        dim: usize,
        metric: CovariantField2,
        domain: D,
        sampling: SampleRegion,
    ) -> Result<Chart, GeometryError>
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(GeometryError::Argument(format!(
                "charts need dimension n >= 2, got {dim}"
            )));
        }
        if sampling.bounds.len() != dim {
            return Err(GeometryError::Argument(format!(
                "sample region has {} axes for a {dim}-dimensional chart",
                sampling.bounds.len()
            )));
        }
        Ok(Chart {
            label: label.into(),
            dim,
            metric,
            domain: Arc::new(domain),
            embedding: None,
            sampling,
            compact_cover: None,
        })
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = Some(embedding);
        self
    }

    /// Marks the chart as covering a compact manifold up to a null set: the
    /// open coordinate box `bounds` maps onto the manifold minus measure zero.
    pub fn with_compact_cover(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.compact_cover = Some(bounds);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric_field(&self) -> &CovariantField2 {
        &self.metric
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn sampling(&self) -> &SampleRegion {
        &self.sampling
    }

    pub fn compact_cover(&self) -> Option<&[(f64, f64)]> {
        self.compact_cover.as_deref()
    }

    pub fn is_compact(&self) -> bool {
        self.compact_cover.is_some()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && p.iter().all(|x| x.is_finite()) && (self.domain)(p)
    }

    /// Metric components `g_ij(p)`, row-major.
    pub fn metric_at(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_point(p)?;
        let vars = Jet::seed_point(p, 1)?;
        Ok(self.metric.eval(&vars)?.iter().map(Jet::value).collect())
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if !self.contains(p) {
            return Err(GeometryError::OutsideDomain {
                chart: self.label.clone(),
                point: p.to_vec(),
            });
        }
        Ok(())
    }

    /// Uniform samples in the chart's sampling box, rejection-filtered to the
    /// domain. Deterministic in `seed`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GeometryError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        let max_attempts = 1000 * count.max(1);
        let mut attempts = 0;
        while points.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(GeometryError::Argument(format!(
                    "sampling region of chart {} rejected {max_attempts} draws",
                    self.label
                )));
            }
            let p: Vec<f64> = self
                .sampling
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            if self.contains(&p) && self.sampling.admits(&p) {
                points.push(p);
            }
        }
        Ok(points)
    }
}

/// Cholesky test for positive definiteness of a row-major symmetric matrix.
pub fn is_positive_definite(a: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    true
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination.
pub fn invert_matrix(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n)
        .map(|ij| if ij / n == ij % n { 1.0 } else { 0.0 })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            m[r * n + col]
                .abs()
                .partial_cmp(&m[s * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot * n + col] == 0.0 {
            return None;
        }
        for k in 0..n {
            m.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r * n + col];
                if factor != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= factor * m[col * n + k];
                        inv[r * n + k] -= factor * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn is_zero(j: &Jet) -> bool {
    j.coeffs().iter().all(|&c| c == 0.0)
}

/// `Σ a_i b_i`, skipping structurally zero factors.
fn dot_jets<'a>(pairs: impl Iterator<Item = (&'a Jet, &'a Jet)>, like: &Jet) -> Jet {
    let mut acc: Option<Jet> = None;
    for (a, b) in pairs {
        if is_zero(a) || is_zero(b) {
            continue;
        }
        let term = a * b;
        acc = Some(match acc {
            Some(s) => s + term,
            None => term,
        });
    }
    acc.unwrap_or_else(|| like.zero_like())
}

fn invert_jet_matrix(g: &[Jet], n: usize) -> Result<Vec<Jet>, JetError> {
    let diagonal = (0..n * n).all(|ij| ij / n == ij % n || is_zero(&g[ij]));
    if diagonal {
        let zero = g[0].zero_like();
        let mut out = vec![zero; n * n];
        for i in 0..n {
            out[i * n + i] = g[i * n + i].recip()?;
        }
        return Ok(out);
    }
    let mut m = g.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|ij| g[0].constant_like(if ij / n == ij % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .value()
                    .abs()
                    .partial_cmp(&m[s * n + col].value().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty pivot range");
        for k in 0..n {
            m.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let d = m[col * n + col].recip()?;
        for k in 0..n {
            m[col * n + k] = &m[col * n + k] * &d;
            inv[col * n + k] = &inv[col * n + k] * &d;
        }
        for r in 0..n {
            if r == col || is_zero(&m[r * n + col]) {
                continue;
            }
            let factor = m[r * n + col].clone();
            for k in 0..n {
                m[r * n + k] = &m[r * n + k] - &(&factor * &m[col * n + k]);
                inv[r * n + k] = &inv[r * n + k] - &(&factor * &inv[col * n + k]);
            }
        }
    }
    Ok(inv)
}

fn require(op: &'static str, available: usize, required: usize) -> Result<(), GeometryError> {
    if available < required {
        return Err(GeometryError::Capability {
            op,
            required,
            available,
        });
    }
    Ok(())
}

/// Metric jets and lazily derived curvature at one point of a chart.
pub struct LocalGeometry<'c> {
    chart: &'c Chart,
    point: Vec<f64>,
    order: usize,
    vars: Vec<Jet>,
    metric: Vec<Jet>,
    inverse: Vec<Jet>,
    christoffel: OnceCell<Vec<Jet>>,
    ricci: OnceCell<Vec<Jet>>,
    scalar: OnceCell<Jet>,
}

impl<'c> LocalGeometry<'c> {
    /// Seeds the coordinates at `point` with jets of `order` (1..=4) and
    /// evaluates the metric.
    pub fn new(chart: &'c Chart, point: &[f64], order: usize) -> Result<Self, GeometryError> {
        chart.check_point(point)?;
        let n = chart.dim();
        let vars = Jet::seed_point(point, order)?;
        let metric = chart.metric.eval(&vars)?;
        let values: Vec<f64> = metric.iter().map(Jet::value).collect();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(GeometryError::Asymmetric {
                        point: point.to_vec(),
                    });
                }
            }
        }
        if !is_positive_definite(&values, n) {
            return Err(GeometryError::Degenerate {
                point: point.to_vec(),
            });
        }
        let inverse = invert_jet_matrix(&metric, n).map_err(|_| GeometryError::Degenerate {
            point: point.to_vec(),
        })?;
        Ok(LocalGeometry {
            chart,
            point: point.to_vec(),
            order,
            vars,
            metric,
            inverse,
            christoffel: OnceCell::new(),
            ricci: OnceCell::new(),
            scalar: OnceCell::new(),
        })
    }

    pub fn chart(&self) -> &'c Chart {
        self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Seeded coordinate jets, the input of every field.
    pub fn vars(&self) -> &[Jet] {
        &self.vars
    }

    pub fn metric(&self) -> &[Jet] {
        &self.metric
    }

    pub fn inverse_metric(&self) -> &[Jet] {
        &self.inverse
    }

    pub fn metric_values(&self) -> Vec<f64> {
        self.metric.iter().map(Jet::value).collect()
    }

    pub fn inverse_values(&self) -> Vec<f64> {
        self.inverse.iter().map(Jet::value).collect()
    }

    /// `√det g` at the base point.
    pub fn volume_density(&self) -> f64 {
        let n = self.dim();
        let values = self.metric_values();
        // Cholesky: det = Π l_ii².
        let mut l = vec![0.0; n * n];
        let mut det_sqrt = 1.0;
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                if i == j {
                    l[i * n + i] = (values[i * n + i] - s).sqrt();
                    det_sqrt *= l[i * n + i];
                } else {
                    l[i * n + j] = (values[i * n + j] - s) / l[j * n + j];
                }
            }
        }
        det_sqrt
    }

    pub fn scalar(&self, field: &ScalarField) -> Result<Jet, GeometryError> {
        Ok(field.eval(&self.vars)?)
    }

    pub fn vector(&self, field: &VectorField) -> Result<Vec<Jet>, GeometryError> {
        field.eval(&self.vars)
    }

    pub fn covariant2(&self, field: &CovariantField2) -> Result<Vec<Jet>, GeometryError> {
        field.eval(&self.vars)
    }

    /// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, order `K − 1`.
    pub fn christoffel(&self) -> Result<&[Jet], GeometryError> {
        require("christoffel", self.order, 1)?;
        Ok(self.christoffel.get_or_init(|| {
            let n = self.dim();
            // dg[(l * n + i) * n + j] = ∂_l g_ij
            let mut dg = Vec::with_capacity(n * n * n);
            for l in 0..n {
                for ij in 0..n * n {
                    dg.push(self.metric[ij].derivative(l).expect("order checked"));
                }
            }
            let at = |l: usize, i: usize, j: usize| &dg[(l * n + i) * n + j];
            // First kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let mut first = Vec::with_capacity(n * n * n);
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        first.push((at(i, j, l) + at(j, i, l) - at(l, i, j)).scale(0.5));
                    }
                }
            }
            let mut gamma = Vec::with_capacity(n * n * n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let pairs = (0..n).map(|l| (&self.inverse[k * n + l], &first[(l * n + i) * n + j]));
                        gamma.push(dot_jets(pairs, &first[0]));
                    }
                }
            }
            gamma
        }))
    }

    fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        let n = self.dim();
        &self.christoffel().expect("caller checked order")[(k * n + i) * n + j]
    }

    /// `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`,
    /// so that `Ric_jk = R^i_ijk`.
    pub fn riemann(&self) -> Result<Vec<Jet>, GeometryError> {
        require("riemann", self.order, 2)?;
        let n = self.dim();
        let gamma = self.christoffel()?;
        let dgamma = self.christoffel_derivatives(gamma)?;
        let dg = |a: usize, l: usize, j: usize, k: usize| &dgamma[((a * n + l) * n + j) * n + k];
        let mut out = Vec::with_capacity(n * n * n * n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let quad = dot_jets(
                            (0..n).map(|m| (self.gamma(l, i, m), self.gamma(m, j, k))),
                            &gamma[0],
                        ) - dot_jets(
                            (0..n).map(|m| (self.gamma(l, j, m), self.gamma(m, i, k))),
                            &gamma[0],
                        );
                        out.push(dg(i, l, j, k) - dg(j, l, i, k) + quad);
                    }
                }
            }
        }
        Ok(out)
    }

    // d[((a * n + k) * n + i) * n + j] = ∂_a Γ^k_ij
    fn christoffel_derivatives(&self, gamma: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n * n * n);
        for a in 0..n {
            for g in gamma {
                out.push(g.derivative(a)?);
            }
        }
        Ok(out)
    }

    /// Ricci tensor (0,2), order `K − 2`.
    pub fn ricci(&self) -> Result<&[Jet], GeometryError> {
        require("ricci", self.order, 2)?;
        if let Some(r) = self.ricci.get() {
            return Ok(r);
        }
        let n = self.dim();
        let gamma = self.christoffel()?;
        let dgamma = self.christoffel_derivatives(gamma)?;
        let dg = |a: usize, l: usize, j: usize, k: usize| &dgamma[((a * n + l) * n + j) * n + k];
        // Contracted trace Γ^i_im, reused for every component.
        let trace: Vec<Jet> = (0..n)
            .map(|m| {
                (1..n).fold(self.gamma(0, 0, m).clone(), |acc, i| acc + self.gamma(i, i, m))
            })
            .collect();
        let mut ric: Vec<Jet> = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                if k < j {
                    let sym = ric[k * n + j].clone();
                    ric.push(sym);
                    continue;
                }
                let mut acc = dg(0, 0, j, k) - dg(j, 0, 0, k);
                for i in 1..n {
                    acc = acc + dg(i, i, j, k) - dg(j, i, i, k);
                }
                let contracted = dot_jets((0..n).map(|m| (&trace[m], self.gamma(m, j, k))), &acc);
                acc = acc + contracted;
                let mut quad = Vec::with_capacity(n * n);
                for i in 0..n {
                    for m in 0..n {
                        quad.push((self.gamma(i, j, m), self.gamma(m, i, k)));
                    }
                }
                let quad = dot_jets(quad.into_iter(), &acc);
                acc = acc - quad;
                ric.push(acc);
            }
        }
        let _ = self.ricci.set(ric);
        Ok(self.ricci.get().expect("just set"))
    }

    /// Scalar curvature `R = g^{ij} Ric_ij`, order `K − 2`.
    pub fn scalar_curvature(&self) -> Result<&Jet, GeometryError> {
        require("scalar_curvature", self.order, 2)?;
        if let Some(r) = self.scalar.get() {
            return Ok(r);
        }
        let ric = self.ricci()?.to_vec();
        let r = self.trace(&ric);
        let _ = self.scalar.set(r);
        Ok(self.scalar.get().expect("just set"))
    }

    /// `∂_i φ` as a covector.
    pub fn differential(&self, phi: &Jet) -> Result<Vec<Jet>, GeometryError> {
        require("differential", phi.order(), 1)?;
        (0..self.dim())
            .map(|i| Ok(phi.derivative(i)?))
            .collect()
    }

    /// `X^i = g^{ij} ω_j`.
    pub fn raise(&self, covector: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n)
            .map(|i| dot_jets((0..n).map(|j| (&self.inverse[i * n + j], &covector[j])), &covector[0]))
            .collect()
    }

    /// `ω_i = g_ij X^j`.
    pub fn lower(&self, vector: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n)
            .map(|i| dot_jets((0..n).map(|j| (&self.metric[i * n + j], &vector[j])), &vector[0]))
            .collect()
    }

    /// `∇φ` as a vector field.
    pub fn gradient(&self, phi: &Jet) -> Result<Vec<Jet>, GeometryError> {
        Ok(self.raise(&self.differential(phi)?))
    }

    /// `g(X, Y)`.
    pub fn dot(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let n = self.dim();
        let lowered = self.lower(x);
        dot_jets((0..n).map(|i| (&lowered[i], &y[i])), &x[0])
    }

    /// Pairing of a covector with a vector, `ω(X)`.
    pub fn pair(&self, covector: &[Jet], vector: &[Jet]) -> Jet {
        dot_jets(covector.iter().zip(vector), &covector[0])
    }

    /// `(∇²φ)_ij = ∂_i∂_jφ − Γ^k_ij ∂_kφ`.
    pub fn hessian(&self, phi: &Jet) -> Result<Vec<Jet>, GeometryError> {
        require("hessian", phi.order(), 2)?;
        let n = self.dim();
        let dphi = self.differential(phi)?;
        self.christoffel()?;
        let mut out: Vec<Jet> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    let sym = out[j * n + i].clone();
                    out.push(sym);
                    continue;
                }
                let second = dphi[i].derivative(j)?;
                let correction = dot_jets((0..n).map(|k| (self.gamma(k, i, j), &dphi[k])), &second);
                out.push(second - correction);
            }
        }
        Ok(out)
    }

    /// `g^{ij} T_ij`.
    pub fn trace(&self, t: &[Jet]) -> Jet {
        dot_jets(self.inverse.iter().zip(t), &t[0])
    }

    pub fn laplacian(&self, phi: &Jet) -> Result<Jet, GeometryError> {
        require("laplacian", phi.order(), 2)?;
        Ok(self.trace(&self.hessian(phi)?))
    }

    /// Fully raised copy `T^{ij} = g^{ia} g^{jb} T_ab`.
    pub fn raise2(&self, t: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        let mut half = Vec::with_capacity(n * n);
        for i in 0..n {
            for b in 0..n {
                half.push(dot_jets(
                    (0..n).map(|a| (&self.inverse[i * n + a], &t[a * n + b])),
                    &t[0],
                ));
            }
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(dot_jets(
                    (0..n).map(|b| (&half[i * n + b], &self.inverse[j * n + b])),
                    &t[0],
                ));
            }
        }
        out
    }

    /// `⟨A, B⟩ = A_ij B^{ij}` for covariant 2-tensors.
    pub fn inner2(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let raised = self.raise2(b);
        dot_jets(a.iter().zip(&raised), &a[0])
    }

    pub fn norm2_tensor2(&self, t: &[Jet]) -> Jet {
        self.inner2(t, t)
    }

    /// `T(X, Y) = T_ij X^i Y^j`.
    pub fn apply2(&self, t: &[Jet], x: &[Jet], y: &[Jet]) -> Jet {
        let n = self.dim();
        let tx: Vec<Jet> = (0..n)
            .map(|j| dot_jets((0..n).map(|i| (&t[i * n + j], &x[i])), &t[0]))
            .collect();
        dot_jets(tx.iter().zip(y), &t[0])
    }

    /// The vector `T(X)^i = g^{ij} T_jk X^k`.
    pub fn apply2_vector(&self, t: &[Jet], x: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        let covector: Vec<Jet> = (0..n)
            .map(|j| dot_jets((0..n).map(|k| (&t[j * n + k], &x[k])), &t[0]))
            .collect();
        self.raise(&covector)
    }

    /// `(∇X)^i_j = ∂_j X^i + Γ^i_jk X^k`, stored at `i * n + j`.
    pub fn covariant_derivative(&self, x: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        let min_order = x.iter().map(Jet::order).min().unwrap_or(0);
        require("covariant_derivative", min_order, 1)?;
        self.christoffel()?;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let d = x[i].derivative(j)?;
                let corr = dot_jets((0..n).map(|k| (self.gamma(i, j, k), &x[k])), &d);
                out.push(d + corr);
            }
        }
        Ok(out)
    }

    /// `(∇_X Y)^i = X^j (∇Y)^i_j`.
    pub fn directional(&self, x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        let dy = self.covariant_derivative(y)?;
        Ok((0..n)
            .map(|i| dot_jets((0..n).map(|j| (&x[j], &dy[i * n + j])), &dy[0]))
            .collect())
    }

    /// `div X = ∂_i X^i + Γ^i_ik X^k`.
    pub fn divergence(&self, x: &[Jet]) -> Result<Jet, GeometryError> {
        let n = self.dim();
        let dx = self.covariant_derivative(x)?;
        Ok((1..n).fold(dx[0].clone(), |acc, i| acc + &dx[i * n + i]))
    }

    /// `(L_X g)_ij = g_ik (∇X)^k_j + g_jk (∇X)^k_i`.
    pub fn lie_metric(&self, x: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        let dx = self.covariant_derivative(x)?;
        // Lowered ∇X: (∇X)_ij = g_ik (∇X)^k_j
        let mut lowered = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                lowered.push(dot_jets(
                    (0..n).map(|k| (&self.metric[i * n + k], &dx[k * n + j])),
                    &dx[0],
                ));
            }
        }
        Ok((0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                &lowered[i * n + j] + &lowered[j * n + i]
            })
            .collect())
    }

    /// `(div T)_j = g^{ik} ∇_i T_kj` for a covariant 2-tensor.
    pub fn div_tensor2(&self, t: &[Jet]) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        let min_order = t.iter().map(Jet::order).min().unwrap_or(0);
        require("div_tensor2", min_order, 1)?;
        self.christoffel()?;
        // ∇_i T_kj = ∂_i T_kj − Γ^m_ik T_mj − Γ^m_ij T_km
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut terms = Vec::with_capacity(n * n);
            for i in 0..n {
                for k in 0..n {
                    let d = t[k * n + j].derivative(i)?;
                    let c1 = dot_jets((0..n).map(|m| (self.gamma(m, i, k), &t[m * n + j])), &d);
                    let c2 = dot_jets((0..n).map(|m| (self.gamma(m, i, j), &t[k * n + m])), &d);
                    terms.push(d - c1 - c2);
                }
            }
            out.push(dot_jets(self.inverse.iter().zip(&terms), &terms[0]));
        }
        Ok(out)
    }

    /// `ω ⊗ η` for covectors.
    pub fn outer(&self, a: &[Jet], b: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n * n).map(|ij| &a[ij / n] * &b[ij % n]).collect()
    }

    /// Scales the metric: `c g` at the jet level.
    pub fn scaled_metric(&self, c: &Jet) -> Vec<Jet> {
        self.metric.iter().map(|g| g * c).collect()
    }
}

/// Rank bookkeeping of a [`TensorValue`]: indices are stored contravariant
/// first, then covariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Valence {
    pub contravariant: usize,
    pub covariant: usize,
}

impl Valence {
    pub const SCALAR: Valence = Valence::new(0, 0);
    pub const VECTOR: Valence = Valence::new(1, 0);
    pub const COVECTOR: Valence = Valence::new(0, 1);
    pub const COVARIANT2: Valence = Valence::new(0, 2);
    pub const MIXED11: Valence = Valence::new(1, 1);

    pub const fn new(contravariant: usize, covariant: usize) -> Self {
        Valence {
            contravariant,
            covariant,
        }
    }

    pub fn rank(&self) -> usize {
        self.contravariant + self.covariant
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.contravariant, self.covariant)
    }
}

/// Dense tensor components at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub point: Vec<f64>,
    pub dim: usize,
    pub valence: Valence,
    pub components: Vec<f64>,
}

impl TensorValue {
    pub fn new(
        point: Vec<f64>,
        dim: usize,
        valence: Valence,
        components: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        let expected = dim.pow(valence.rank() as u32);
        if components.len() != expected {
            return Err(GeometryError::Argument(format!(
                "valence {valence} in dimension {dim} needs {expected} components, got {}",
                components.len()
            )));
        }
        Ok(TensorValue {
            point,
            dim,
            valence,
            components,
        })
    }

    pub fn from_jets(point: &[f64], dim: usize, valence: Valence, jets: &[Jet]) -> Self {
        TensorValue::new(
            point.to_vec(),
            dim,
            valence,
            jets.iter().map(Jet::value).collect(),
        )
        .expect("jet tensor has consistent shape")
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.valence.rank());
        let flat = index.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.components[flat]
    }

    /// Largest absolute component in the coordinate frame.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn expect_valence(&self, expected: Valence) -> Result<(), GeometryError> {
        if self.valence != expected {
            return Err(GeometryError::Valence {
                expected,
                found: self.valence,
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &TensorValue) -> Result<TensorValue, GeometryError> {
        other.expect_valence(self.valence)?;
        Ok(TensorValue {
            point: self.point.clone(),
            dim: self.dim,
            valence: self.valence,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// Contracts index slot `pos` of a rank-`rank` tensor with a symmetric matrix.
fn contract_slot(components: &[f64], dim: usize, rank: usize, pos: usize, matrix: &[f64]) -> Vec<f64> {
    let stride = dim.pow((rank - pos - 1) as u32);
    let mut out = vec![0.0; components.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % dim;
        let base = flat - i * stride;
        *o = (0..dim)
            .map(|j| matrix[i * dim + j] * components[base + j * stride])
            .sum();
    }
    out
}

fn all_covariant(t: &TensorValue, metric: &[f64]) -> Vec<f64> {
    let rank = t.valence.rank();
    (0..t.valence.contravariant).fold(t.components.clone(), |acc, pos| {
        contract_slot(&acc, t.dim, rank, pos, metric)
    })
}

fn all_contravariant(covariant: &[f64], dim: usize, rank: usize, inverse: &[f64]) -> Vec<f64> {
    (0..rank).fold(covariant.to_vec(), |acc, pos| {
        contract_slot(&acc, dim, rank, pos, inverse)
    })
}

/// Full metric contraction `⟨A, B⟩` at the tensors' base point.
pub fn inner(chart: &Chart, a: &TensorValue, b: &TensorValue) -> Result<f64, GeometryError> {
    b.expect_valence(a.valence)?;
    let metric = chart.metric_at(&a.point)?;
    let inverse = invert_matrix(&metric, chart.dim()).ok_or_else(|| GeometryError::Degenerate {
        point: a.point.clone(),
    })?;
    let rank = a.valence.rank();
    let a_cov = all_covariant(a, &metric);
    let b_up = all_contravariant(&all_covariant(b, &metric), a.dim, rank, &inverse);
    Ok(a_cov.iter().zip(&b_up).map(|(x, y)| x * y).sum())
}

/// `|T|²` with every index contracted through `g` or `g⁻¹`.
pub fn tensor_norm2(chart: &Chart, t: &TensorValue) -> Result<f64, GeometryError> {
    Ok(inner(chart, t, t)?.max(0.0))
}

/// Tensor product of two tensors of pure type (both covariant or both
/// contravariant).
pub fn outer(v: &TensorValue, w: &TensorValue) -> Result<TensorValue, GeometryError> {
    let pure = |t: &TensorValue| t.valence.contravariant == 0 || t.valence.covariant == 0;
    let same_kind = (v.valence.covariant == 0) == (w.valence.covariant == 0);
    if !pure(v) || !pure(w) || !same_kind {
        return Err(GeometryError::Valence {
            expected: v.valence,
            found: w.valence,
        });
    }
    let components = v
        .components
        .iter()
        .flat_map(|a| w.components.iter().map(move |b| a * b))
        .collect();
    TensorValue::new(
        v.point.clone(),
        v.dim,
        Valence::new(
            v.valence.contravariant + w.valence.contravariant,
            v.valence.covariant + w.valence.covariant,
        ),
        components,
    )
}

pub fn christoffel(chart: &Chart, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    Ok(TensorValue::from_jets(
        p,
        chart.dim(),
        Valence::new(1, 2),
        local.christoffel()?,
    ))
}

pub fn riemann(chart: &Chart, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 2)?;
    Ok(TensorValue::from_jets(
        p,
        chart.dim(),
        Valence::new(1, 3),
        &local.riemann()?,
    ))
}

pub fn ricci(chart: &Chart, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 2)?;
    Ok(TensorValue::from_jets(
        p,
        chart.dim(),
        Valence::COVARIANT2,
        local.ricci()?,
    ))
}

pub fn scalar_curvature(chart: &Chart, p: &[f64]) -> Result<f64, GeometryError> {
    Ok(LocalGeometry::new(chart, p, 2)?.scalar_curvature()?.value())
}

pub fn gradient(chart: &Chart, phi: &ScalarField, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    let grad = local.gradient(&local.scalar(phi)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::VECTOR, &grad))
}

pub fn hessian(chart: &Chart, phi: &ScalarField, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 2)?;
    let hess = local.hessian(&local.scalar(phi)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::COVARIANT2, &hess))
}

pub fn laplacian(chart: &Chart, phi: &ScalarField, p: &[f64]) -> Result<f64, GeometryError> {
    let local = LocalGeometry::new(chart, p, 2)?;
    Ok(local.laplacian(&local.scalar(phi)?)?.value())
}

/// `∇X` as a (1,1) tensor, index order `(∇X)^i_j`.
pub fn covariant_derivative_vector(
    chart: &Chart,
    x: &VectorField,
    p: &[f64],
) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    let dx = local.covariant_derivative(&local.vector(x)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::MIXED11, &dx))
}

pub fn directional(
    chart: &Chart,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    let v = local.directional(&local.vector(x)?, &local.vector(y)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::VECTOR, &v))
}

pub fn div_vector(chart: &Chart, x: &VectorField, p: &[f64]) -> Result<f64, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    Ok(local.divergence(&local.vector(x)?)?.value())
}

pub fn div_tensor2(
    chart: &Chart,
    t: &CovariantField2,
    p: &[f64],
) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    let d = local.div_tensor2(&local.covariant2(t)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::COVECTOR, &d))
}

pub fn lie_metric(chart: &Chart, x: &VectorField, p: &[f64]) -> Result<TensorValue, GeometryError> {
    let local = LocalGeometry::new(chart, p, 1)?;
    let l = local.lie_metric(&local.vector(x)?)?;
    Ok(TensorValue::from_jets(p, chart.dim(), Valence::COVARIANT2, &l))
}

/// The gradient of a scalar field as a vector field (evaluated through the
/// chart metric, one jet order lower than the seed).
pub fn gradient_field(chart: &Chart, phi: &ScalarField) -> VectorField {
    let metric = chart.metric_field().clone();
    let phi = phi.clone();
    let label = format!("grad {}", phi.label());
    VectorField::new(label, move |x| {
        let n = x.len();
        let g = (metric.eval)(x)?;
        let inverse = invert_jet_matrix(&g, n)?;
        let f = phi.eval(x)?;
        let df: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect::<Result<_, _>>()?;
        Ok((0..n)
            .map(|i| dot_jets((0..n).map(|j| (&inverse[i * n + j], &df[j])), &df[0]))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn round_s2_polar() -> Chart {
        let metric = CovariantField2::new("s2", |x| {
            let s = x[0].sin();
            let zero = x[0].zero_like();
            Ok(vec![x[0].constant_like(1.0), zero.clone(), zero, s.square()])
        });
        Chart::new(
            "s2-polar",
            2,
            metric,
            |p| p[0] > 0.0 && p[0] < std::f64::consts::PI,
            SampleRegion {
                bounds: vec![(0.2, 2.9), (0.0, 6.2)],
                max_radius: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let chart = euclidean(3);
        let gamma = christoffel(&chart, &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
        assert_eq!(gamma.valence, Valence::new(1, 2));
    }

    #[test]
    fn sphere_polar_christoffel() {
        let chart = round_s2_polar();
        let theta = std::f64::consts::FRAC_PI_3;
        let gamma = christoffel(&chart, &[theta, 0.4]).unwrap();
        let expected = -(3f64.sqrt()) / 4.0;
        assert!((gamma.get(&[0, 1, 1]) - expected).abs() < 1e-14);
        assert!((gamma.get(&[1, 0, 1]) - gamma.get(&[1, 1, 0])).abs() < 1e-15);
    }

    #[test]
    fn sphere_scalar_curvature_is_two() {
        let chart = round_s2_polar();
        for p in chart.sample_points(10, 3).unwrap() {
            assert!((scalar_curvature(&chart, &p).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn capability_error_names_required_order() {
        let chart = round_s2_polar();
        let local = LocalGeometry::new(&chart, &[1.0, 1.0], 1).unwrap();
        assert_eq!(
            local.ricci().unwrap_err(),
            GeometryError::Capability {
                op: "ricci",
                required: 2,
                available: 1
            }
        );
        let err = local.scalar_curvature().unwrap_err().to_string();
        assert!(err.contains("order 2"), "{err}");
    }

    #[test]
    fn outside_domain_is_rejected() {
        let chart = round_s2_polar();
        assert!(matches!(
            LocalGeometry::new(&chart, &[-0.1, 0.0], 2),
            Err(GeometryError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let metric = CovariantField2::new("bad", |x| {
            let z = x[0].zero_like();
            Ok(vec![x[0].constant_like(1.0), z.clone(), z.clone(), z])
        });
        let chart = Chart::new("bad", 2, metric, |_| true, SampleRegion::cube(2, 1.0)).unwrap();
        assert!(matches!(
            LocalGeometry::new(&chart, &[0.0, 0.0], 1),
            Err(GeometryError::Degenerate { .. })
        ));
    }

    #[test]
    fn norm_of_metric_is_dimension() {
        let chart = round_s2_polar();
        let p = [0.7, 1.0];
        let g = TensorValue::new(p.to_vec(), 2, Valence::COVARIANT2, chart.metric_at(&p).unwrap())
            .unwrap();
        assert!((tensor_norm2(&chart, &g).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn valence_mismatch_is_an_error() {
        let chart = euclidean(2);
        let v = TensorValue::new(vec![0.0, 0.0], 2, Valence::VECTOR, vec![1.0, 2.0]).unwrap();
        let w = TensorValue::new(vec![0.0, 0.0], 2, Valence::COVECTOR, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            inner(&chart, &v, &w),
            Err(GeometryError::Valence { .. })
        ));
        assert!(outer(&v, &w).is_err());
        assert_eq!(outer(&v, &v).unwrap().components, vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn general_inverse_matches_value_inverse() {
        let metric = CovariantField2::new("sheared", |x| {
            let a = 2.0 + x[0].sin();
            let b = x[0].clone() * &x[1] * 0.3;
            let c = 1.5 + x[1].square();
            Ok(vec![a, b.clone(), b, c])
        });
        let chart = Chart::new("sheared", 2, metric, |_| true, SampleRegion::cube(2, 1.0)).unwrap();
        let p = [0.3, -0.6];
        let local = LocalGeometry::new(&chart, &p, 3).unwrap();
        let g = local.metric();
        let gi = local.inverse_metric();
        // g g⁻¹ = I holds for every jet coefficient.
        for i in 0..2 {
            for j in 0..2 {
                let prod = &g[i * 2] * &gi[j] + &g[i * 2 + 1] * &gi[2 + j];
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((prod.value() - expected).abs() < 1e-14);
                for c in &prod.coeffs()[1..] {
                    assert!(c.abs() < 1e-13);
                }
            }
        }
    }
}
