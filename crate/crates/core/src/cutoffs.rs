//! Dominance cut-offs for the shrinkage multiplier `a`.
//!
//! Each bound is the supremum of multipliers for which the paired risk
//! comparison is guaranteed nonpositive, and each is computed by the most
//! independent routes available: closed forms where they exist, radial
//! quadrature otherwise, with the concave-loss bound carried by two separate
//! routes (through the derived mixing scale and through an inverse moment)
//! that must agree to quadrature precision.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::mixture::{MixtureModel, Tilt, TiltedModel};
use crate::quad::{self, QuadResult};

/// Which bound a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundTag {
    /// `2 (d-2) (1-omega) sigma2`: balanced squared error, known scale.
    QuadraticKnownScale,
    /// `2 (d-2)`: balanced squared error with the scale replaced by
    /// `S^2/(k+2)`; the bound applies to the unscaled multiplier.
    QuadraticEstimatedScale,
    /// Concave per-term loss, route through `E(1/W)` of the derived scale.
    ConcaveMixingRoute,
    /// Concave per-term loss, route through `E0[k'(|X|^2)/|X|^2]`.
    ConcaveMomentRoute,
    /// `2 / E0[1/|X|^2]`: unbalanced quadratic loss on a spherical model.
    PlainInverseMoment,
    /// `2 / E*[1/|X|^2]` under the outer-kernel tilt `k'((1-omega) t) f(t)`.
    CompositeTiltedMoment,
}

impl BoundTag {
    pub fn label(&self) -> &'static str {
        match self {
            BoundTag::QuadraticKnownScale => "quadratic_known_scale",
            BoundTag::QuadraticEstimatedScale => "quadratic_estimated_scale",
            BoundTag::ConcaveMixingRoute => "concave_mixing_route",
            BoundTag::ConcaveMomentRoute => "concave_moment_route",
            BoundTag::PlainInverseMoment => "plain_inverse_moment",
            BoundTag::CompositeTiltedMoment => "composite_tilted_moment",
        }
    }
}

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteKind {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl RouteKind {
    pub fn label(&self) -> &'static str {
        match self {
            RouteKind::ClosedForm => "closed_form",
            RouteKind::Quadrature => "quadrature",
            RouteKind::MonteCarlo => "monte_carlo",
        }
    }
}

/// One computed bound with the inputs that made it.
#[derive(Debug, Clone)]
pub struct CutoffReport {
    pub tag: BoundTag,
    pub value: f64,
    pub route: RouteKind,
    /// Propagated quadrature error (0 for closed forms).
    pub error: f64,
    pub model: String,
    pub kernel: String,
    pub omega: f64,
    pub d: usize,
}

fn check_omega(omega: f64) -> Result<()> {
    if (0.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::InvalidOmega(omega))
    }
}

/// `E0[h(|X|^2)]` by radial quadrature, with the reported error bounded by
/// 1e-8 relative.
pub fn radial_expectation(
    model: &MixtureModel,
    h: &dyn Fn(f64) -> f64,
    h_zero_power: f64,
) -> Result<QuadResult> {
    let f = |t: f64| model.radial_density(t);
    let r = quad::radial_integral(
        model.d,
        &f,
        model.density_zero_power(),
        &h,
        h_zero_power,
        model.scale_hint(),
        1e-10,
    )?;
    if r.error > 1e-8 * r.value.abs().max(1e-300) {
        return Err(Error::NonConvergentIntegral(format!(
            "radial expectation error {:.2e} exceeds 1e-8 relative (value {:.6e})",
            r.error, r.value
        )));
    }
    Ok(r)
}

/// Balanced squared error with known scale: `2 (d-2) (1-omega) sigma2`.
pub fn cutoff_quadratic(d: usize, omega: f64, sigma2: f64) -> Result<CutoffReport> {
    if d < 3 {
        return Err(Error::DimensionTooSmall { need: 3, got: d });
    }
    check_omega(omega)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(CutoffReport {
        tag: BoundTag::QuadraticKnownScale,
        value: 2.0 * (d as f64 - 2.0) * (1.0 - omega) * sigma2,
        route: RouteKind::ClosedForm,
        error: 0.0,
        model: format!("normal(sigma2={sigma2})[d={d}]"),
        kernel: "identity".into(),
        omega,
        d,
    })
}

/// Balanced squared error with estimated scale: the multiplier of the
/// `S^2/(k+2)`-scaled shrinkage term must stay below `2 (d-2)`, for any
/// omega and any unknown variance.
pub fn cutoff_estimated_scale(d: usize, omega: f64) -> Result<CutoffReport> {
    if d < 3 {
        return Err(Error::DimensionTooSmall { need: 3, got: d });
    }
    check_omega(omega)?;
    Ok(CutoffReport {
        tag: BoundTag::QuadraticEstimatedScale,
        value: 2.0 * (d as f64 - 2.0),
        route: RouteKind::ClosedForm,
        error: 0.0,
        model: format!("normal(unknown scale)[d={d}]"),
        kernel: "identity".into(),
        omega,
        d,
    })
}

/// Concave per-term balanced loss: both routes to the bound
/// `2 (d-2) K (1-omega) / (E(1/W) * (omega k'(0) + (1-omega) K))`.
///
/// The moment route rewrites `E(1/W)/(d-2)` as `E0[k'(|X|^2)/|X|^2] / K`
/// and is always computed; the mixing route goes through the derived scale
/// of the plain tilt and exists when the kernel carries a mixing record.
/// Returns `(mixing route if available, moment route)`.
pub fn cutoff_concave(
    model: &MixtureModel,
    kernel: &Kernel,
    omega: f64,
) -> Result<(Option<CutoffReport>, CutoffReport)> {
    check_omega(omega)?;
    let slope0 = kernel.k_prime_at_zero();
    if !slope0.is_finite() {
        return Err(Error::InvalidParameter(
            "per-term balanced loss needs a kernel with finite slope at zero".into(),
        ));
    }
    let tilted = TiltedModel::new(model.clone(), kernel.clone(), Tilt::Plain)?;
    let k = tilted.normalizer();
    let k_err = tilted.normalizer_error();
    let denom = omega * slope0 + (1.0 - omega) * k;
    let denom_rel = (1.0 - omega) * k_err / denom;

    // Moment route: E0[k'(t)/t].
    let moment = radial_expectation(
        model,
        &|t| kernel.k_prime(t) / t,
        kernel.k_prime_zero_power() - 1.0,
    )?;
    let value12 = 2.0 * k * k * (1.0 - omega) / (moment.value * denom);
    let rel12 = 2.0 * k_err / k + moment.error / moment.value.abs() + denom_rel;
    let moment_report = CutoffReport {
        tag: BoundTag::ConcaveMomentRoute,
        value: value12,
        route: RouteKind::Quadrature,
        error: value12.abs() * rel12,
        model: model.label(),
        kernel: kernel.label(),
        omega,
        d: model.d,
    };

    // Mixing route: E(1/W) under the derived scale of the plain tilt.
    let mixing_report = match tilted.derived_mixing() {
        Err(Error::NoMixingRecord) => None,
        Err(e) => return Err(e),
        Ok(_) => {
            let mi = tilted.derived_mean_inverse()?;
            if !mi.is_finite() {
                return Err(Error::InfiniteMoment(
                    "E(1/W) of the derived scale diverges; no positive cut-off".into(),
                ));
            }
            let value11 = 2.0 * (model.d as f64 - 2.0) * k * (1.0 - omega) / (mi * denom);
            let rel11 = k_err / k + denom_rel;
            Some(CutoffReport {
                tag: BoundTag::ConcaveMixingRoute,
                value: value11,
                route: RouteKind::Quadrature,
                error: value11.abs() * rel11,
                model: model.label(),
                kernel: kernel.label(),
                omega,
                d: model.d,
            })
        }
    };
    Ok((mixing_report, moment_report))
}

/// Unbalanced quadratic loss on a spherical model: `2 / E0[1/|X|^2]`.
pub fn cutoff_plain_inverse_moment(model: &MixtureModel) -> Result<CutoffReport> {
    let inv = radial_expectation(model, &|t| 1.0 / t, -1.0)?;
    let value = 2.0 / inv.value;
    Ok(CutoffReport {
        tag: BoundTag::PlainInverseMoment,
        value,
        route: RouteKind::Quadrature,
        error: value * inv.error / inv.value.abs(),
        model: model.label(),
        kernel: "identity".into(),
        omega: 0.0,
        d: model.d,
    })
}

/// Composite balanced loss: `2 / E*[1/|X|^2]` under the tilted density
/// `f0*(t)` proportional to `k'((1-omega) t) f(t)`.
///
/// Both finiteness provisos, `E*[|X|^2]` and `E*[1/|X|^2]`, are checked by
/// the quadrature's divergence flags rather than assumed.
pub fn cutoff_composite(
    model: &MixtureModel,
    kernel: &Kernel,
    omega: f64,
) -> Result<CutoffReport> {
    check_omega(omega)?;
    let tilted = TiltedModel::new(model.clone(), kernel.clone(), Tilt::Scaled { omega })?;
    let k1 = tilted.normalizer();
    let k1_err = tilted.normalizer_error();
    let f = |t: f64| model.radial_density(t);
    let f_pow = model.density_zero_power();
    let w_pow = tilted.weight_zero_power();
    // Proviso: E*[t] finite (flags heavy upper tails).
    quad::radial_integral(
        model.d,
        &f,
        f_pow,
        &|t| tilted.weight(t) * t,
        w_pow + 1.0,
        model.scale_hint(),
        1e-10,
    )?;
    // The bound itself: E*[1/t] = E0[w(t)/t] / K1.
    let num = quad::radial_integral(
        model.d,
        &f,
        f_pow,
        &|t| tilted.weight(t) / t,
        w_pow - 1.0,
        model.scale_hint(),
        1e-10,
    )?;
    let e_inv = num.value / k1;
    let e_inv_rel = num.error / num.value.abs() + k1_err / k1;
    let value = 2.0 / e_inv;
    Ok(CutoffReport {
        tag: BoundTag::CompositeTiltedMoment,
        value,
        route: RouteKind::Quadrature,
        error: value * e_inv_rel,
        model: model.label(),
        kernel: kernel.label(),
        omega,
        d: model.d,
    })
}

/// Numerical check that tilting by a nonincreasing weight `k'((1-omega) t)`
/// raises the inverse moment: `E*[1/|X|^2] >= E0[1/|X|^2]`, which caps the
/// composite bound by the plain one.
#[derive(Debug, Clone)]
pub struct TiltOrderingReport {
    pub tilted_inverse_moment: f64,
    pub plain_inverse_moment: f64,
    /// `tilted - plain`; the inequality asks for this to be nonnegative.
    pub margin: f64,
    /// Sum of the two quadrature error bounds.
    pub combined_error: f64,
    /// Inequality not violated beyond quadrature error.
    pub holds: bool,
    /// Margin strictly exceeds the combined error.
    pub strict: bool,
    pub model: String,
    pub kernel: String,
    pub omega: f64,
}

pub fn cutoff_tilt_ordering_check(
    model: &MixtureModel,
    kernel: &Kernel,
    omega: f64,
) -> Result<TiltOrderingReport> {
    check_omega(omega)?;
    let plain = radial_expectation(model, &|t| 1.0 / t, -1.0)?;
    let tilted = TiltedModel::new(model.clone(), kernel.clone(), Tilt::Scaled { omega })?;
    let f = |t: f64| model.radial_density(t);
    let num = quad::radial_integral(
        model.d,
        &f,
        model.density_zero_power(),
        &|t| tilted.weight(t) / t,
        tilted.weight_zero_power() - 1.0,
        model.scale_hint(),
        1e-10,
    )?;
    let k1 = tilted.normalizer();
    let e_tilt = num.value / k1;
    let e_tilt_err =
        e_tilt.abs() * (num.error / num.value.abs() + tilted.normalizer_error() / k1);
    let margin = e_tilt - plain.value;
    let combined = e_tilt_err + plain.error;
    Ok(TiltOrderingReport {
        tilted_inverse_moment: e_tilt,
        plain_inverse_moment: plain.value,
        margin,
        combined_error: combined,
        holds: margin >= -combined,
        strict: margin > combined,
        model: model.label(),
        kernel: kernel.label(),
        omega,
    })
}
