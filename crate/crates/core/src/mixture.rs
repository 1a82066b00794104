//! Scale mixtures of normals and their tilted variants.
//!
//! A model is `X | V ~ N_d(theta, V I_d)` with `V ~ g` on `(0, inf)`, so the
//! density of `X` is radial: `f(|x - theta|^2)` with
//! `f(t) = E_V[(2 pi V)^(-d/2) exp(-t / (2V))]`. Complete monotonicity of `f`
//! characterizes this class, and products of completely monotone functions
//! stay inside it; that is what makes kernel-tilted densities
//! `f*(t) = w(t) f(t) / K` again normal mixtures whenever the tilt weight `w`
//! is an exponential `k2 exp(-t/(2 tau0))`: the mixing scale becomes
//! `W = tau0 V / (tau0 + V)`, i.e. `1/W = 1/V + 1/tau0` pathwise. The mixing
//! law of `W` is not the plain image of `V`: absorbing the tilt into a new
//! normal density leaves the factor `(W/V)^(d/2) = (tau0/(tau0+V))^(d/2)`,
//! which reweights the law of `V` (it cancels only when `V` is degenerate).
//! Expectations under the derived scale carry that weight.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quad;
use crate::rng::{chunk_rng, CHUNK};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const EXPECT_TOL: f64 = 1e-11;

/// Distribution of the mixing scale `V`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingDistribution {
    /// `V = sigma2` a.s.: the plain normal model.
    Degenerate { sigma2: f64 },
    /// Inverse gamma with density `scale^shape / Gamma(shape) v^(-shape-1) e^(-scale/v)`:
    /// gives the multivariate Student model (`nu = 2 shape`, unit scale when
    /// `scale = shape`).
    InverseGamma { shape: f64, scale: f64 },
    /// `V ~ Exp(rate)`. Note `E(1/V) = +infinity`: the inverse moment that
    /// every cut-off needs diverges, so this model exercises the divergence
    /// flags rather than the cut-off formulas.
    Exponential { rate: f64 },
    /// Finite support; exact hand computations.
    Discrete { points: Vec<f64>, weights: Vec<f64> },
    /// `W = tau0 V / (tau0 + V)` for `V ~ base` reweighted by
    /// `(tau0/(tau0+V))^half_d`: the scale of a tilted model in dimension
    /// `d = 2 half_d`, named by the pathwise identity `1/W = 1/V + 1/tau0`.
    InverseShifted { base: Box<MixingDistribution>, tau0: f64, half_d: f64 },
}

impl MixingDistribution {
    pub fn validated(self) -> Result<Self> {
        let ok = match &self {
            MixingDistribution::Degenerate { sigma2 } => *sigma2 > 0.0 && sigma2.is_finite(),
            MixingDistribution::InverseGamma { shape, scale } => {
                *shape > 0.0 && *scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            MixingDistribution::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            MixingDistribution::Discrete { points, weights } => {
                !points.is_empty()
                    && points.len() == weights.len()
                    && points.iter().all(|p| *p > 0.0 && p.is_finite())
                    && weights.iter().all(|w| *w > 0.0)
                    && (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            }
            MixingDistribution::InverseShifted { base, tau0, half_d } => {
                *tau0 > 0.0
                    && tau0.is_finite()
                    && *half_d > 0.0
                    && half_d.is_finite()
                    && base.clone().validated().is_ok()
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("mixing parameters out of domain: {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            MixingDistribution::Degenerate { sigma2 } => format!("normal(sigma2={sigma2})"),
            MixingDistribution::InverseGamma { shape, scale } => {
                format!("inverse_gamma(shape={shape},scale={scale})")
            }
            MixingDistribution::Exponential { rate } => format!("exponential(rate={rate})"),
            MixingDistribution::Discrete { points, weights } => {
                format!("discrete(points={points:?},weights={weights:?})")
            }
            MixingDistribution::InverseShifted { base, tau0, half_d } => {
                format!("inverse_shifted(tau0={tau0},d={},base={})", 2.0 * half_d, base.label())
            }
        }
    }

    /// `E(1/V)`: closed form for the base families (`+infinity` for the
    /// exponential), reweighted-law quadrature for derived scales, where a
    /// flagged divergence again means the moment is infinite.
    pub fn mean_inverse(&self) -> f64 {
        match self {
            MixingDistribution::Degenerate { sigma2 } => 1.0 / sigma2,
            MixingDistribution::InverseGamma { shape, scale } => shape / scale,
            MixingDistribution::Exponential { .. } => f64::INFINITY,
            MixingDistribution::Discrete { points, weights } => {
                points.iter().zip(weights).map(|(p, w)| w / p).sum()
            }
            MixingDistribution::InverseShifted { base, tau0, .. } => match base.as_ref() {
                // Constant reweighting cancels; the harmonic shift is exact.
                MixingDistribution::Degenerate { sigma2 } => 1.0 / sigma2 + 1.0 / tau0,
                MixingDistribution::Discrete { .. } => {
                    self.expect(&|w| 1.0 / w).expect("finite reweighted sum")
                }
                _ => self.expect(&|w| 1.0 / w).unwrap_or(f64::INFINITY),
            },
        }
    }

    /// `E(V)`; errors when the moment is not finite.
    pub fn mean(&self) -> Result<f64> {
        match self {
            MixingDistribution::Degenerate { sigma2 } => Ok(*sigma2),
            MixingDistribution::InverseGamma { shape, scale } => {
                if *shape > 1.0 {
                    Ok(scale / (shape - 1.0))
                } else {
                    Err(Error::InfiniteMoment(format!("E(V) for inverse gamma shape {shape} <= 1")))
                }
            }
            MixingDistribution::Exponential { rate } => Ok(1.0 / rate),
            MixingDistribution::Discrete { points, weights } => {
                Ok(points.iter().zip(weights).map(|(p, w)| w * p).sum())
            }
            // W is bounded by tau0, so the mean always exists; `expect` is
            // exact for point-mass bases.
            MixingDistribution::InverseShifted { .. } => self.expect(&|w| w),
        }
    }

    /// Typical magnitude of `V`, for quadrature anchoring only.
    pub fn scale_hint(&self) -> f64 {
        match self {
            MixingDistribution::Degenerate { sigma2 } => *sigma2,
            MixingDistribution::InverseGamma { shape, scale } => {
                if *shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    *scale
                }
            }
            MixingDistribution::Exponential { rate } => 1.0 / rate,
            MixingDistribution::Discrete { points, weights } => {
                points.iter().zip(weights).map(|(p, w)| w * p).sum()
            }
            MixingDistribution::InverseShifted { base, tau0, .. } => {
                shift_scale(base.scale_hint(), *tau0)
            }
        }
    }

    /// `E(phi(V))` by exact summation over point masses or adaptive
    /// quadrature against the density. `InverseShifted` recurses through the
    /// base law with the `(tau0/(tau0+v))^half_d` reweighting (normalized
    /// inside), which is also how tilted densities get their second,
    /// mixture-form route.
    pub fn expect(&self, phi: &dyn Fn(f64) -> f64) -> Result<f64> {
        match self {
            MixingDistribution::Degenerate { sigma2 } => Ok(phi(*sigma2)),
            MixingDistribution::Discrete { points, weights } => {
                Ok(points.iter().zip(weights).map(|(p, w)| w * phi(*p)).sum())
            }
            MixingDistribution::InverseGamma { shape, scale } => {
                let (a, b) = (*shape, *scale);
                let lc = a * b.ln() - ln_gamma(a);
                let g = move |v: f64| (lc - (a + 1.0) * v.ln() - b / v).exp();
                let r = quad::integrate_zero_inf(
                    &|v| phi(v) * g(v),
                    self.scale_hint(),
                    None,
                    EXPECT_TOL,
                )?;
                Ok(r.value)
            }
            MixingDistribution::Exponential { rate } => {
                let l = *rate;
                let r = quad::integrate_zero_inf(
                    &|v| phi(v) * l * (-l * v).exp(),
                    self.scale_hint(),
                    None,
                    EXPECT_TOL,
                )?;
                Ok(r.value)
            }
            MixingDistribution::InverseShifted { base, tau0, half_d } => {
                let (t0, hd) = (*tau0, *half_d);
                let wt = move |v: f64| (t0 / (t0 + v)).powf(hd);
                let num = base.expect(&|v| wt(v) * phi(shift_scale(v, t0)))?;
                let den = base.expect(&|v| wt(v))?;
                Ok(num / den)
            }
        }
    }

    /// One draw of `V`.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            MixingDistribution::Degenerate { sigma2 } => *sigma2,
            MixingDistribution::InverseGamma { shape, scale } => {
                let g = Gamma::new(*shape, 1.0).expect("validated shape");
                scale / g.sample(rng)
            }
            MixingDistribution::Exponential { rate } => {
                Exp::new(*rate).expect("validated rate").sample(rng)
            }
            MixingDistribution::Discrete { points, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                *points.last().expect("non-empty support")
            }
            // Rejection on the dimension weight, which lies in (0, 1]; the
            // accepted draw is then shifted harmonically.
            MixingDistribution::InverseShifted { base, tau0, half_d } => loop {
                let v = base.draw(rng);
                let wt = (tau0 / (tau0 + v)).powf(*half_d);
                if rng.random::<f64>() < wt {
                    return shift_scale(v, *tau0);
                }
            },
        }
    }

    /// Leading exponent of the induced radial density at `t = 0`: finite
    /// density for all families except the exponential, whose mass near
    /// `V = 0` makes `f(t) ~ c t^(1 - d/2)`.
    pub fn density_zero_power(&self, d: usize) -> f64 {
        match self {
            MixingDistribution::Exponential { .. } => 1.0 - 0.5 * d as f64,
            MixingDistribution::InverseShifted { base, .. } => base.density_zero_power(d),
            _ => 0.0,
        }
    }
}

/// `tau0 v / (tau0 + v)`, the harmonic shift defining a tilted scale.
fn shift_scale(v: f64, tau0: f64) -> f64 {
    if tau0.is_infinite() {
        v
    } else {
        tau0 * v / (tau0 + v)
    }
}

/// Row-major sample matrix.
#[derive(Debug, Clone)]
pub struct Samples {
    pub d: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }
}

/// A scale mixture of normals on `R^d`, `d >= 3`.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    pub d: usize,
    pub mixing: MixingDistribution,
}

impl MixtureModel {
    pub fn new(d: usize, mixing: MixingDistribution) -> Result<Self> {
        if d < 3 {
            return Err(Error::DimensionTooSmall { need: 3, got: d });
        }
        Ok(MixtureModel { d, mixing: mixing.validated()? })
    }

    pub fn label(&self) -> String {
        format!("{}[d={}]", self.mixing.label(), self.d)
    }

    /// Radial density `f(t)`, `t = |x - theta|^2`: closed forms for the
    /// normal, Student, and discrete families, quadrature over the mixing
    /// law otherwise.
    pub fn radial_density(&self, t: f64) -> f64 {
        radial_density_of(&self.mixing, self.d, t)
    }

    /// Leading exponent of `f` at `t = 0`.
    pub fn density_zero_power(&self) -> f64 {
        self.mixing.density_zero_power(self.d)
    }

    /// Typical magnitude of `|X - theta|^2`, used to anchor quadrature.
    pub fn scale_hint(&self) -> f64 {
        self.d as f64 * self.mixing.scale_hint()
    }

    /// Total mass by radial quadrature; a healthy model returns 1 within the
    /// integrator's reported error.
    pub fn normalization(&self) -> Result<quad::QuadResult> {
        let f = |t: f64| self.radial_density(t);
        quad::radial_integral(
            self.d,
            &f,
            self.density_zero_power(),
            &|_| 1.0,
            0.0,
            self.scale_hint(),
            1e-12,
        )
    }

    /// Two-stage sampler: `V` from the mixing law, then `theta + sqrt(V) Z`.
    /// Deterministic in `(seed, n)`: replicate `i` always comes from chunk
    /// `i / CHUNK` of the stream, regardless of threading or total `n`.
    pub fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<Samples> {
        if theta.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: theta.len() });
        }
        let mut data = vec![0.0f64; n * self.d];
        let chunks = n.div_ceil(CHUNK as usize);
        for c in 0..chunks {
            let mut rng = chunk_rng(seed, c as u64);
            let lo = c * CHUNK as usize;
            let hi = ((c + 1) * CHUNK as usize).min(n);
            for row in data[lo * self.d..hi * self.d].chunks_exact_mut(self.d) {
                let sv = self.mixing.draw(&mut rng).sqrt();
                for (j, slot) in row.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *slot = theta[j] + sv * z;
                }
            }
        }
        Ok(Samples { d: self.d, data })
    }
}

fn radial_density_of(mixing: &MixingDistribution, d: usize, t: f64) -> f64 {
    let hd = 0.5 * d as f64;
    match mixing {
        MixingDistribution::Degenerate { sigma2 } => {
            (-hd * (LN_2PI + sigma2.ln()) - 0.5 * t / sigma2).exp()
        }
        MixingDistribution::InverseGamma { shape, scale } => {
            let (a, b) = (*shape, *scale);
            (-hd * LN_2PI + ln_gamma(a + hd) - ln_gamma(a) + a * b.ln()
                - (a + hd) * (b + 0.5 * t).ln())
            .exp()
        }
        MixingDistribution::Discrete { points, weights } => points
            .iter()
            .zip(weights)
            .map(|(p, w)| w * (-hd * (LN_2PI + p.ln()) - 0.5 * t / p).exp())
            .sum(),
        other => {
            if t <= 0.0 && other.density_zero_power(d) < 0.0 {
                return f64::INFINITY;
            }
            other
                .expect(&|v| (-hd * (LN_2PI + v.ln()) - 0.5 * t / v).exp())
                .unwrap_or(f64::NAN)
        }
    }
}

/// Tilt weight: the kernel derivative, evaluated either at `t` (per-term
/// tilts) or at `(1-omega) t` (outer tilts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tilt {
    Plain,
    Scaled { omega: f64 },
}

impl Tilt {
    fn arg_factor(&self) -> f64 {
        match self {
            Tilt::Plain => 1.0,
            Tilt::Scaled { omega } => 1.0 - omega,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Tilt::Plain => "plain".into(),
            Tilt::Scaled { omega } => format!("scaled(omega={omega})"),
        }
    }
}

/// A kernel-derivative tilt of a mixture model:
/// `f*(t) = w(t) f(t) / K`, `K = E0[w(|X|^2)]`, with `w(t) = k'(c t)` and
/// `c = 1` or `1 - omega`.
#[derive(Debug, Clone)]
pub struct TiltedModel {
    pub base: MixtureModel,
    pub kernel: Kernel,
    pub tilt: Tilt,
    normalizer: f64,
    normalizer_error: f64,
}

impl TiltedModel {
    pub fn new(base: MixtureModel, kernel: Kernel, tilt: Tilt) -> Result<Self> {
        let kernel = kernel.validated()?;
        if let Tilt::Scaled { omega } = tilt {
            if !(0.0..1.0).contains(&omega) {
                return Err(Error::InvalidOmega(omega));
            }
        }
        let c = tilt.arg_factor();
        let f = |t: f64| base.radial_density(t);
        let w = |t: f64| kernel.k_prime(c * t);
        let r = quad::radial_integral(
            base.d,
            &f,
            base.density_zero_power(),
            &w,
            kernel.k_prime_zero_power(),
            base.scale_hint(),
            1e-12,
        )?;
        let sup = kernel.k_prime_at_zero();
        if r.value <= 0.0 || (sup.is_finite() && r.value > sup * (1.0 + 1e-9)) {
            return Err(Error::InvalidParameter(format!(
                "tilt normalizer {} outside (0, k'(0)] = (0, {}]",
                r.value, sup
            )));
        }
        Ok(TiltedModel {
            base,
            kernel,
            tilt,
            normalizer: r.value,
            normalizer_error: r.error,
        })
    }

    /// The normalizing constant `K` (per-term tilt) or `K1` (outer tilt).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn normalizer_error(&self) -> f64 {
        self.normalizer_error
    }

    pub fn weight(&self, t: f64) -> f64 {
        self.kernel.k_prime(self.tilt.arg_factor() * t)
    }

    pub fn weight_zero_power(&self) -> f64 {
        self.kernel.k_prime_zero_power()
    }

    /// Tilted radial density by the ratio route `w(t) f(t) / K`.
    pub fn density_ratio_route(&self, t: f64) -> f64 {
        self.weight(t) * self.base.radial_density(t) / self.normalizer
    }

    /// The derived mixing scale `W` with `1/W = 1/V + 1/tau` pathwise,
    /// available when the kernel derivative is exactly exponential; outer
    /// tilts rescale `tau` to `tau0 / (1-omega)`. The law of `W` reweights
    /// the base law by `(tau/(tau+V))^(d/2)`; degenerate and point-mass
    /// bases reduce to closed form.
    pub fn derived_mixing(&self) -> Result<MixingDistribution> {
        let rec = self.kernel.mixing_record().ok_or(Error::NoMixingRecord)?;
        let tau = rec.tau0 / self.tilt.arg_factor();
        if tau.is_infinite() {
            return Ok(self.base.mixing.clone());
        }
        let hd = 0.5 * self.base.d as f64;
        match &self.base.mixing {
            MixingDistribution::Degenerate { sigma2 } => {
                MixingDistribution::Degenerate { sigma2: shift_scale(*sigma2, tau) }.validated()
            }
            MixingDistribution::Discrete { points, weights } => {
                let raw: Vec<f64> = points
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| w * (tau / (tau + p)).powf(hd))
                    .collect();
                let total: f64 = raw.iter().sum();
                MixingDistribution::Discrete {
                    points: points.iter().map(|p| shift_scale(*p, tau)).collect(),
                    weights: raw.into_iter().map(|w| w / total).collect(),
                }
                .validated()
            }
            other => MixingDistribution::InverseShifted {
                base: Box::new(other.clone()),
                tau0: tau,
                half_d: hd,
            }
            .validated(),
        }
    }

    /// Tilted radial density by the mixture route: a fresh normal mixture
    /// over the derived scale `W`. Only defined when `W` exists.
    pub fn density_mixture_route(&self, t: f64) -> Result<f64> {
        let w = self.derived_mixing()?;
        Ok(radial_density_of(&w, self.base.d, t))
    }

    /// `E(1/W)` under the derived scale's (reweighted) law; this is the
    /// quantity that makes the two cut-off routes agree exactly.
    pub fn derived_mean_inverse(&self) -> Result<f64> {
        Ok(self.derived_mixing()?.mean_inverse())
    }

    /// Sample the tilted model: two-stage through the derived scale when it
    /// exists, otherwise rejection against the base model with acceptance
    /// ratio `w(t) / w(0)`; unbounded weights (pure power kernels) have no
    /// sampler, only densities.
    pub fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<Samples> {
        if theta.len() != self.base.d {
            return Err(Error::DimensionMismatch { expected: self.base.d, got: theta.len() });
        }
        let d = self.base.d;
        if let Ok(wmix) = self.derived_mixing() {
            let model = MixtureModel { d, mixing: wmix };
            return model.sample(theta, n, seed);
        }
        let w0 = self.kernel.k_prime_at_zero();
        if !w0.is_finite() {
            return Err(Error::UnboundedTiltWeight);
        }
        let c = self.tilt.arg_factor();
        let mut data = vec![0.0f64; n * d];
        let chunks = n.div_ceil(CHUNK as usize);
        for ch in 0..chunks {
            let mut rng = chunk_rng(seed, ch as u64);
            let lo = ch * CHUNK as usize;
            let hi = ((ch + 1) * CHUNK as usize).min(n);
            for row in data[lo * d..hi * d].chunks_exact_mut(d) {
                loop {
                    let sv = self.base.mixing.draw(&mut rng).sqrt();
                    let mut t = 0.0;
                    for slot in row.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *slot = sv * z;
                        t += (sv * z) * (sv * z);
                    }
                    let u: f64 = rng.random();
                    if u * w0 <= self.kernel.k_prime(c * t) {
                        break;
                    }
                }
                for (slot, th) in row.iter_mut().zip(theta) {
                    *slot += th;
                }
            }
        }
        Ok(Samples { d, data })
    }
}
