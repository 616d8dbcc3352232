//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] in `n` variables of order `K` carries every partial derivative
//! `∂^α φ(x₀)` with `|α| ≤ K`. Coefficients store the derivative itself, not
//! the Taylor coefficient `∂^α φ / α!`, so extraction sites never deal with
//! factorials. Multiplication applies the multivariate Leibniz rule and every
//! elementary function is evaluated by composing its univariate derivative
//! sequence with the powers of the jet's non-constant remainder.
//!
//! Coefficients are laid out in graded order: all multi-indices of degree 0,
//! then degree 1, and so on. The layout of order `K - 1` is therefore a prefix
//! of the layout of order `K`, which makes truncation a slice operation.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Highest supported total derivative order.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("axis {axis} out of range for a jet in {dim} variables")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("jet order {order} outside the supported range {min}..={max}", max = MAX_ORDER)]
    InvalidOrder { order: usize, min: usize },
    #[error("jets need at least one variable")]
    InvalidDim,
    #[error("multi-index of total degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
    #[error("multi-index has {got} entries but the jet has {dim} variables")]
    IndexLength { got: usize, dim: usize },
    #[error("{op}: value {value} lies outside the function domain")]
    Domain { op: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy)]
struct MulTerm {
    left: u32,
    right: u32,
    weight: f64,
}

/// Multi-index tables shared by every jet of one `(dim, order)` pair.
struct Layout {
    dim: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    mul_offsets: Vec<usize>,
    mul_terms: Vec<MulTerm>,
    // raise[axis][a] = position of (a + e_axis) in this layout, for a in the
    // layout of order - 1.
    raise: Vec<Vec<u32>>,
    lower: Option<Arc<Layout>>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .finish()
    }
}

fn push_degree(dim: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == dim {
        prefix.push(degree as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first as u8);
        push_degree(dim, degree - first, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl Layout {
    fn build(dim: usize, order: usize, lower: Option<Arc<Layout>>) -> Layout {
        let mut indices = Vec::new();
        for degree in 0..=order {
            push_degree(dim, degree, &mut Vec::with_capacity(dim), &mut indices);
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(pos, alpha)| (alpha.clone(), pos))
            .collect();

        let mut mul_offsets = Vec::with_capacity(indices.len() + 1);
        let mut mul_terms = Vec::new();
        mul_offsets.push(0);
        for alpha in &indices {
            // Enumerate every β ≤ α componentwise.
            let mut beta = vec![0u8; dim];
            loop {
                let gamma: Vec<u8> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                let weight = alpha
                    .iter()
                    .zip(&beta)
                    .map(|(&a, &b)| binomial(a as usize, b as usize))
                    .product();
                mul_terms.push(MulTerm {
                    left: lookup[&beta] as u32,
                    right: lookup[&gamma] as u32,
                    weight,
                });
                let mut axis = 0;
                loop {
                    if axis == dim {
                        break;
                    }
                    if beta[axis] < alpha[axis] {
                        beta[axis] += 1;
                        break;
                    }
                    beta[axis] = 0;
                    axis += 1;
                }
                if axis == dim {
                    break;
                }
            }
            mul_offsets.push(mul_terms.len());
        }

        let lower_len = lower.as_ref().map_or(0, |l| l.indices.len());
        let raise = (0..dim)
            .map(|axis| {
                indices[..lower_len]
                    .iter()
                    .map(|alpha| {
                        let mut raised = alpha.clone();
                        raised[axis] += 1;
                        lookup[&raised] as u32
                    })
                    .collect()
            })
            .collect();

        Layout {
            dim,
            order,
            indices,
            lookup,
            mul_offsets,
            mul_terms,
            raise,
            lower,
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    /// Layout of a lower order, obtained by walking the `lower` chain.
    fn at_order(self: &Arc<Self>, order: usize) -> Arc<Layout> {
        let mut current = Arc::clone(self);
        while current.order > order {
            current = Arc::clone(current.lower.as_ref().expect("lower layout chain"));
        }
        current
    }
}

type LayoutCache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;

fn layout(dim: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    let mut below: Option<Arc<Layout>> = None;
    for k in 0..=order {
        let entry = guard
            .entry((dim, k))
            .or_insert_with(|| Arc::new(Layout::build(dim, k, below.clone())));
        below = Some(Arc::clone(entry));
    }
    below.expect("order loop runs at least once")
}

/// Truncated Taylor expansion of a scalar function around a point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// Constant jet. Order 0 is allowed here since differentiation produces it.
    pub fn constant(value: f64, dim: usize, order: usize) -> Result<Jet, JetError> {
        if dim == 0 {
            return Err(JetError::InvalidDim);
        }
        if order > MAX_ORDER {
            return Err(JetError::InvalidOrder { order, min: 0 });
        }
        let layout = layout(dim, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Ok(Jet { layout, coeffs })
    }

    /// The coordinate function `x_axis` expanded at `x0`.
    pub fn variable(axis: usize, x0: f64, dim: usize, order: usize) -> Result<Jet, JetError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(JetError::InvalidOrder { order, min: 1 });
        }
        if axis >= dim {
            return Err(JetError::InvalidAxis { axis, dim });
        }
        let mut jet = Jet::constant(x0, dim, order)?;
        // Degree-one block follows the value; e_0 comes first.
        jet.coeffs[1 + axis] = 1.0;
        Ok(jet)
    }

    /// Seeds every coordinate of `point` as an independent variable.
    pub fn seed_point(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        let dim = point.len();
        (0..dim)
            .map(|axis| Jet::variable(axis, point[axis], dim, order))
            .collect()
    }

    /// Constant jet sharing this jet's dimension and order.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Jet {
        self.constant_like(0.0)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw coefficients in graded multi-index order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices matching [`Jet::coeffs`].
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u8]> {
        self.layout.indices.iter().map(Vec::as_slice)
    }

    /// `∂^α` of the expanded function at the base point.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64, JetError> {
        if alpha.len() != self.dim() {
            return Err(JetError::IndexLength {
                got: alpha.len(),
                dim: self.dim(),
            });
        }
        let degree: usize = alpha.iter().sum();
        if degree > self.order() {
            return Err(JetError::OrderExceeded {
                degree,
                order: self.order(),
            });
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.coeffs[self.layout.lookup[&key]])
    }

    /// First partial `∂_axis`, or 0 for an order-0 jet.
    pub fn d(&self, axis: usize) -> f64 {
        if self.order() == 0 {
            0.0
        } else {
            self.coeffs[1 + axis]
        }
    }

    /// The jet of `∂_axis φ`, one order lower.
    pub fn derivative(&self, axis: usize) -> Result<Jet, JetError> {
        if axis >= self.dim() {
            return Err(JetError::InvalidAxis {
                axis,
                dim: self.dim(),
            });
        }
        let lower = match &self.layout.lower {
            Some(lower) => Arc::clone(lower),
            None => {
                return Err(JetError::OrderExceeded {
                    degree: 1,
                    order: 0,
                })
            }
        };
        let coeffs = self.layout.raise[axis]
            .iter()
            .map(|&pos| self.coeffs[pos as usize])
            .collect();
        Ok(Jet {
            layout: lower,
            coeffs,
        })
    }

    /// Drops every coefficient above `order`; a no-op when `order ≥ self.order()`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = self.layout.at_order(order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    fn assert_same_dim(&self, other: &Jet) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "jet arithmetic across different variable counts"
        );
    }

    fn common_layout<'a>(&'a self, other: &'a Jet) -> &'a Arc<Layout> {
        self.assert_same_dim(other);
        if self.order() <= other.order() {
            &self.layout
        } else {
            &other.layout
        }
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        let layout = Arc::clone(self.common_layout(other));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .take(layout.len())
            .map(|(&a, &b)| op(a, b))
            .collect();
        Jet { layout, coeffs }
    }

    fn map_coeffs(&self, op: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|&c| op(c)).collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        let layout = Arc::clone(self.common_layout(other));
        let mut coeffs = vec![0.0; layout.len()];
        for (pos, out) in coeffs.iter_mut().enumerate() {
            let terms = &layout.mul_terms[layout.mul_offsets[pos]..layout.mul_offsets[pos + 1]];
            *out = terms
                .iter()
                .map(|t| t.weight * self.coeffs[t.left as usize] * other.coeffs[t.right as usize])
                .sum();
        }
        Jet { layout, coeffs }
    }

    /// Applies a univariate function given its derivatives `φ^{(k)}(value)`,
    /// `k = 0..=order`, through the truncated series in the remainder.
    pub fn compose(&self, derivatives: &[f64]) -> Jet {
        let order = self.order();
        assert!(
            derivatives.len() > order,
            "compose needs {} derivatives, got {}",
            order + 1,
            derivatives.len()
        );
        let mut out = self.constant_like(derivatives[0]);
        if order == 0 {
            return out;
        }
        let mut remainder = self.clone();
        remainder.coeffs[0] = 0.0;
        let mut power = remainder.clone();
        let mut factorial = 1.0;
        for (k, &dk) in derivatives.iter().enumerate().take(order + 1).skip(1) {
            factorial *= k as f64;
            let scale = dk / factorial;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += scale * p;
            }
            if k < order {
                power = power.product(&remainder);
            }
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { op: "ln", value: x });
        }
        let mut derivs = vec![x.ln()];
        let mut term = 1.0 / x;
        for k in 1..=self.order() {
            derivs.push(term);
            term *= -(k as f64) / x;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { op: "sqrt", value: x });
        }
        Ok(self.compose(&power_derivatives(x, 0.5, self.order())))
    }

    /// Real power `x^p`; requires a positive value.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { op: "powf", value: x });
        }
        Ok(self.compose(&power_derivatives(x, p, self.order())))
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, p: i32) -> Result<Jet, JetError> {
        let x = self.value();
        if p < 0 && (x == 0.0 || !x.is_finite()) {
            return Err(JetError::Domain { op: "powi", value: x });
        }
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut falling = 1.0;
        for k in 0..=self.order() {
            let exponent = p - k as i32;
            if falling == 0.0 {
                derivs.push(0.0);
            } else {
                derivs.push(falling * x.powi(exponent));
            }
            falling *= exponent as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x == 0.0 || !x.is_finite() {
            return Err(JetError::Domain { op: "div", value: x });
        }
        self.powi(-1)
    }

    /// `self / other`, failing when the divisor's value vanishes.
    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self * &other.recip()?)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn sinh(&self) -> Jet {
        let x = self.value();
        let cycle = [x.sinh(), x.cosh()];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 2]).collect::<Vec<_>>())
    }

    pub fn cosh(&self) -> Jet {
        let x = self.value();
        let cycle = [x.cosh(), x.sinh()];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 2]).collect::<Vec<_>>())
    }

    pub fn square(&self) -> Jet {
        self.product(self)
    }

    pub fn scale(&self, factor: f64) -> Jet {
        self.map_coeffs(|c| c * factor)
    }
}

fn power_derivatives(x: f64, p: f64, order: usize) -> Vec<f64> {
    let mut derivs = Vec::with_capacity(order + 1);
    let mut falling = 1.0;
    for k in 0..=order {
        derivs.push(falling * x.powf(p - k as f64));
        falling *= p - k as f64;
    }
    derivs
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));

macro_rules! jet_scalar_op {
    ($trait:ident, $method:ident, $jet_first:expr, $scalar_first:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $jet_first;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $scalar_first;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_scalar_op!(
    Add,
    add,
    |j, c| {
        let mut out = j.clone();
        out.coeffs[0] += c;
        out
    },
    |c, j| {
        let mut out = j.clone();
        out.coeffs[0] += c;
        out
    }
);
jet_scalar_op!(
    Sub,
    sub,
    |j, c| {
        let mut out = j.clone();
        out.coeffs[0] -= c;
        out
    },
    |c, j| {
        let mut out = j.scale(-1.0);
        out.coeffs[0] += c;
        out
    }
);
jet_scalar_op!(Mul, mul, |j, c| j.scale(c), |c, j| j.scale(c));

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(jets: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut iter = jets.into_iter();
    let first = iter.next()?.clone();
    Some(iter.fold(first, |acc, j| acc + j))
}
