//! Closed-form proximal maps and the forward-backward operator
//! `J(x, α) = prox_{αg}(x - α∇f(x))`.
//!
//! Indicator proxes ignore `α`: the projection onto a set does not depend on
//! the scaling of the indicator.

use crate::error::{invalid, Error, Result};
use crate::problem::{norm, CompositeProblem, ExtendedReal, NonsmoothPart, Vector};

/// `g = 0`.
pub fn prox_zero() -> NonsmoothPart {
    NonsmoothPart::new(|_: &Vector| ExtendedReal::Finite(0.0), |_, z: &Vector| z.clone(), |_: &Vector| true)
        .with_projection(|x: &Vector| x.clone())
}

/// Coordinatewise `sign(z)·max(|z| - t, 0)`. Exact ties `|z| = t` map to `0`.
pub fn soft_threshold(z: &Vector, t: f64) -> Vector {
    z.map(|zi| if zi.abs() <= t { 0.0 } else { zi - t.copysign(zi) })
}

/// `g = weight·|x|₁`.
pub fn prox_l1(weight: f64) -> Result<NonsmoothPart> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(invalid(format!("l1 weight must be positive, got {weight}")));
    }
    Ok(NonsmoothPart::new(
        move |x: &Vector| ExtendedReal::Finite(weight * x.lp_norm(1)),
        move |alpha, z: &Vector| soft_threshold(z, alpha * weight),
        |_: &Vector| true,
    )
    .with_projection(|x: &Vector| x.clone()))
}

/// Indicator of the nonnegative orthant.
pub fn prox_indicator_nonneg() -> NonsmoothPart {
    let clamp = |z: &Vector| z.map(|v| v.max(0.0));
    NonsmoothPart::new(
        |x: &Vector| {
            if x.iter().all(|&v| v >= 0.0) {
                ExtendedReal::Finite(0.0)
            } else {
                ExtendedReal::PosInfinity
            }
        },
        move |_, z: &Vector| clamp(z),
        |x: &Vector| x.iter().all(|&v| v >= 0.0),
    )
    .with_projection(clamp)
}

/// Indicator of the box `[lower, upper]`.
pub fn prox_indicator_box(lower: Vector, upper: Vector) -> Result<NonsmoothPart> {
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
    }
    if let Some(i) = lower.iter().zip(upper.iter()).position(|(l, u)| !(l <= u)) {
        return Err(invalid(format!("box bounds out of order at coordinate {i}: {} > {}", lower[i], upper[i])));
    }
    let inside = {
        let (lower, upper) = (lower.clone(), upper.clone());
        move |x: &Vector| {
            x.len() == lower.len() && x.iter().zip(lower.iter().zip(upper.iter())).all(|(v, (l, u))| l <= v && v <= u)
        }
    };
    let clamp = move |z: &Vector| {
        Vector::from_iterator(z.len(), z.iter().zip(lower.iter().zip(upper.iter())).map(|(v, (l, u))| v.clamp(*l, *u)))
    };
    let value_inside = inside.clone();
    let prox_clamp = clamp.clone();
    Ok(NonsmoothPart::new(
        move |x: &Vector| {
            if value_inside(x) {
                ExtendedReal::Finite(0.0)
            } else {
                ExtendedReal::PosInfinity
            }
        },
        move |_, z: &Vector| prox_clamp(z),
        inside,
    )
    .with_projection(clamp))
}

/// `g = (weight/2)·|x|²`, with `prox(α, z) = z / (1 + α·weight)`.
pub fn prox_quadratic(weight: f64) -> Result<NonsmoothPart> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(invalid(format!("quadratic weight must be positive, got {weight}")));
    }
    Ok(NonsmoothPart::new(
        move |x: &Vector| ExtendedReal::Finite(0.5 * weight * x.norm_squared()),
        move |alpha, z: &Vector| z / (1.0 + alpha * weight),
        |_: &Vector| true,
    )
    .with_projection(|x: &Vector| x.clone()))
}

/// A named catalog builder taking a flat parameter list.
#[derive(Clone, Copy)]
pub struct ProxCatalogEntry {
    pub name: &'static str,
    pub builder: fn(&[f64]) -> Result<NonsmoothPart>,
}

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(invalid(format!("{name} takes {n} parameter(s), got {}", params.len())));
    }
    Ok(())
}

/// Every closed-form prox this crate provides. The box builder expects the
/// lower bounds followed by the upper bounds.
pub fn catalog() -> Vec<ProxCatalogEntry> {
    vec![
        ProxCatalogEntry { name: "zero", builder: |p| expect_params("zero", p, 0).map(|_| prox_zero()) },
        ProxCatalogEntry {
            name: "l1",
            builder: |p| {
                expect_params("l1", p, 1)?;
                prox_l1(p[0])
            },
        },
        ProxCatalogEntry {
            name: "indicator_nonneg",
            builder: |p| expect_params("indicator_nonneg", p, 0).map(|_| prox_indicator_nonneg()),
        },
        ProxCatalogEntry {
            name: "indicator_box",
            builder: |p| {
                if p.is_empty() || p.len() % 2 != 0 {
                    return Err(invalid("indicator_box takes 2n parameters (lower, then upper)"));
                }
                let n = p.len() / 2;
                prox_indicator_box(Vector::from_column_slice(&p[..n]), Vector::from_column_slice(&p[n..]))
            },
        },
        ProxCatalogEntry {
            name: "quadratic",
            builder: |p| {
                expect_params("quadratic", p, 1)?;
                prox_quadratic(p[0])
            },
        },
    ]
}

/// `J(x, α)` given a precomputed `∇f(x)`.
pub(crate) fn forward_backward_with_gradient(
    problem: &CompositeProblem,
    x: &Vector,
    gradient: &Vector,
    alpha: f64,
) -> Result<Vector> {
    let z = x - gradient * alpha;
    problem.nonsmooth.prox(alpha, &z)
}

/// `J(x, α) = prox_{αg}(x - α∇f(x))` for `x ∈ dom g` and `α > 0`.
pub fn forward_backward(problem: &CompositeProblem, x: &Vector, alpha: f64) -> Result<Vector> {
    problem.check_dimension(x)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("stepsize must be positive, got {alpha}")));
    }
    if !problem.nonsmooth.in_domain(x) {
        return Err(Error::OutsideDomain);
    }
    let gradient = problem.gradient_checked(x)?;
    forward_backward_with_gradient(problem, x, &gradient, alpha)
}

/// `|x - J(x, α)|`, which vanishes exactly at minimizers.
pub fn residual(problem: &CompositeProblem, x: &Vector, alpha: f64) -> Result<f64> {
    Ok(norm(&(x - forward_backward(problem, x, alpha)?)))
}
