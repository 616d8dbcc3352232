//! Independent derivative oracle shared by the jet tests and the acceptance
//! harness: random composite functions evaluated both as jets and as plain
//! floats, with partials recovered by Richardson-extrapolated central
//! differences. Also random jet pairs for the Leibniz and truncation
//! invariants.

use qemcheck_core::jets::{Jet, JetError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    /// `ln(1 + e²)`
    SoftLog(Box<Expr>),
    /// `sqrt(1 + e²)`
    Hyp(Box<Expr>),
    /// `1 / (2 + sin e)`
    Bump(Box<Expr>),
}

pub fn random_expr(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.75) {
            Expr::Var(rng.gen_range(0..dim))
        } else {
            Expr::Const(rng.gen_range(-1.0..1.0))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, dim, depth - 1));
    match rng.gen_range(0..8) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Mul(sub(rng), sub(rng)),
        2 => Expr::Sin(sub(rng)),
        3 => Expr::Cos(sub(rng)),
        4 => Expr::Exp(Box::new(Expr::Mul(
            Box::new(Expr::Const(0.5)),
            Box::new(Expr::Sin(sub(rng))),
        ))),
        5 => Expr::SoftLog(sub(rng)),
        6 => Expr::Hyp(sub(rng)),
        _ => Expr::Bump(sub(rng)),
    }
}

impl Expr {
    pub fn jet(&self, x: &[Jet]) -> Result<Jet, JetError> {
        Ok(match self {
            Expr::Var(i) => x[*i].clone(),
            Expr::Const(c) => x[0].constant_like(*c),
            Expr::Add(a, b) => a.jet(x)? + b.jet(x)?,
            Expr::Mul(a, b) => a.jet(x)? * b.jet(x)?,
            Expr::Sin(a) => a.jet(x)?.sin(),
            Expr::Cos(a) => a.jet(x)?.cos(),
            Expr::Exp(a) => a.jet(x)?.exp(),
            Expr::SoftLog(a) => (1.0 + a.jet(x)?.square()).ln()?,
            Expr::Hyp(a) => (1.0 + a.jet(x)?.square()).sqrt()?,
            Expr::Bump(a) => (2.0 + a.jet(x)?.sin()).recip()?,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.value(x) + b.value(x),
            Expr::Mul(a, b) => a.value(x) * b.value(x),
            Expr::Sin(a) => a.value(x).sin(),
            Expr::Cos(a) => a.value(x).cos(),
            Expr::Exp(a) => a.value(x).exp(),
            Expr::SoftLog(a) => (1.0 + a.value(x).powi(2)).ln(),
            Expr::Hyp(a) => (1.0 + a.value(x).powi(2)).sqrt(),
            Expr::Bump(a) => 1.0 / (2.0 + a.value(x).sin()),
        }
    }
}

/// One-dimensional central stencil `(offsets, weights)` for the `k`-th
/// derivative with step `h`, second-order accurate.
fn stencil(k: usize, h: f64) -> Vec<(f64, f64)> {
    match k {
        0 => vec![(0.0, 1.0)],
        1 => vec![(h, 0.5 / h), (-h, -0.5 / h)],
        2 => vec![(h, 1.0 / (h * h)), (0.0, -2.0 / (h * h)), (-h, 1.0 / (h * h))],
        3 => {
            let c = 1.0 / (2.0 * h * h * h);
            vec![(2.0 * h, c), (h, -2.0 * c), (-h, 2.0 * c), (-2.0 * h, -c)]
        }
        _ => unreachable!(),
    }
}

/// Tensor-product central difference of `∂^α` with step `h`.
fn central(e: &Expr, x: &[f64], alpha: &[usize], h: f64) -> f64 {
    let stencils: Vec<Vec<(f64, f64)>> = alpha.iter().map(|&k| stencil(k, h)).collect();
    let mut total = 0.0;
    let mut index = vec![0usize; alpha.len()];
    loop {
        let mut point = x.to_vec();
        let mut weight = 1.0;
        for (axis, &i) in index.iter().enumerate() {
            let (offset, w) = stencils[axis][i];
            point[axis] += offset;
            weight *= w;
        }
        total += weight * e.value(&point);
        let mut axis = 0;
        loop {
            if axis == alpha.len() {
                return total;
            }
            index[axis] += 1;
            if index[axis] < stencils[axis].len() {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}

pub fn richardson(e: &Expr, x: &[f64], alpha: &[usize]) -> f64 {
    let h = 1e-3;
    (4.0 * central(e, x, alpha, h) - central(e, x, alpha, 2.0 * h)) / 3.0
}

pub fn multi_indices(dim: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..=max).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .filter(|v| v.iter().sum::<usize>() <= max)
            .collect();
    }
    out
}

/// Outcome of comparing jet partials against the finite-difference oracle.
#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub functions: usize,
    pub partials: usize,
    pub worst: f64,
    /// First partial over `tol`, as a readable message.
    pub failure: Option<String>,
}

/// Draws `count` composite functions in one to three variables and compares
/// every partial of order one to three with `|Δ| / max(1, |jet|)`.
pub fn compare_with_finite_differences(count: usize, seed: u64, tol: f64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::default();
    for case in 0..count {
        let dim = rng.gen_range(1..=3);
        let expr = random_expr(&mut rng, dim, 4);
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vars = Jet::seed_point(&x, 3).expect("order 3 is supported");
        let jet = expr.jet(&vars).expect("functions are defined everywhere");
        report.functions += 1;
        for alpha in multi_indices(dim, 3) {
            if alpha.iter().sum::<usize>() == 0 {
                continue;
            }
            let exact = jet.partial(&alpha).expect("index within order");
            let fd = richardson(&expr, &x, &alpha);
            let err = (exact - fd).abs() / exact.abs().max(1.0);
            report.partials += 1;
            report.worst = report.worst.max(err);
            if err >= tol && report.failure.is_none() {
                report.failure = Some(format!("case {case}: {expr:?} at {x:?}, α = {alpha:?}: jet {exact}, fd {fd}"));
            }
        }
    }
    report
}

/// A non-polynomial test function built from seed variables:
/// `c₀ + Σ cᵢxᵢ + Σ cᵢⱼxᵢxⱼ + sin(a·x) + exp(b·x / 2)`.
pub fn random_jet(vars: &[Jet], seed: u64) -> Jet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || rng.gen_range(-1.0..1.0);
    let mut out = vars[0].constant_like(c());
    let mut a = vars[0].zero_like();
    let mut b = vars[0].zero_like();
    for (i, xi) in vars.iter().enumerate() {
        out = out + xi.scale(c());
        a = a + xi.scale(c());
        b = b + xi.scale(c() * 0.5);
        for xj in &vars[i..] {
            out = out + (xi.clone() * xj.clone()).scale(c());
        }
    }
    out + a.sin() + b.exp()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `β ≤ α` componentwise.
pub fn below(alpha: &[usize]) -> Vec<Vec<usize>> {
    alpha.iter().fold(vec![vec![]], |acc, &a| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..=a).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect()
    })
}

pub fn all_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    below(&vec![order; dim])
        .into_iter()
        .filter(|v| v.iter().sum::<usize>() <= order)
        .collect()
}

/// Largest Leibniz-rule defect `|∂^α(ab) − Σ_β C(α,β) ∂^β a ∂^{α−β} b|`,
/// relative to `1 + |expected|`, over `cases` random jet pairs.
pub fn leibniz_defect(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let order = rng.gen_range(1..=4);
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vars = Jet::seed_point(&x, order).expect("supported order");
        let a = random_jet(&vars, rng.gen());
        let b = random_jet(&vars, rng.gen());
        let ab = a.clone() * b.clone();
        for alpha in all_indices(dim, order) {
            let mut expected = 0.0;
            for beta in below(&alpha) {
                let rest: Vec<usize> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                let weight: f64 = alpha.iter().zip(&beta).map(|(&a, &b)| binomial(a, b)).product();
                expected += weight * a.partial(&beta).unwrap() * b.partial(&rest).unwrap();
            }
            let got = ab.partial(&alpha).unwrap();
            worst = worst.max((got - expected).abs() / (1.0 + expected.abs()));
        }
    }
    worst
}

/// Largest defect between operating then truncating and truncating then
/// operating, for products, `exp` and `sin`.
pub fn truncation_defect(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut compare = |a: &Jet, b: &Jet| {
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            worst = worst.max((x - y).abs() / (1.0 + x.abs()));
        }
    };
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let order = rng.gen_range(1..=4);
        let k = rng.gen_range(0..=order);
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vars = Jet::seed_point(&x, order).expect("supported order");
        let a = random_jet(&vars, rng.gen());
        let b = random_jet(&vars, rng.gen());
        let (ta, tb) = (a.truncate(k), b.truncate(k));
        compare(&(a.clone() * b.clone()).truncate(k), &(ta.clone() * tb));
        compare(&a.exp().truncate(k), &ta.exp());
        compare(&a.sin().truncate(k), &ta.sin());
    }
    worst
}
