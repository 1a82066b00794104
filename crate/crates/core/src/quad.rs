//! Adaptive Gauss-Kronrod quadrature and radial integrals on `R^d`.
//!
//! Spherically symmetric integrands reduce to one dimension: with `t = |x|^2`,
//!
//! ```text
//! int_{R^d} h(|x|^2) f(|x|^2) dx = (S_d / 2) int_0^inf h(t) f(t) t^(d/2-1) dt,
//! S_d = 2 pi^(d/2) / Gamma(d/2).
//! ```
//!
//! The half-line is covered by an anchored window scheme: an adaptive pass on
//! a core interval around the caller's scale, then halving windows toward 0
//! and doubling windows toward infinity until the contributions fall below the
//! requested relative tolerance. Integrable endpoint singularities `t^s` with
//! `s` in `(-1, 0)` are removed exactly by the substitution `t = u^(1/(1+s))`;
//! exponents `s <= -1` are reported as divergent before any evaluation.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// 15-point Kronrod abscissae (positive half, descending) on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_7,
    0.949_107_912_342_758_524_526_189_7,
    0.864_864_423_359_769_072_789_712_8,
    0.741_531_185_599_394_439_863_864_8,
    0.586_087_235_467_691_130_294_144_8,
    0.405_845_151_377_397_166_906_606_4,
    0.207_784_955_007_898_467_600_689_4,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_0,
    0.063_092_092_629_978_553_290_700_7,
    0.104_790_010_322_250_183_839_876_3,
    0.140_653_259_715_525_918_745_189_6,
    0.169_004_726_639_267_902_826_583_4,
    0.190_350_578_064_785_409_913_256_4,
    0.204_432_940_075_298_892_414_162_0,
    0.209_482_141_084_727_828_012_999_2,
];

/// Embedded 7-point Gauss weights (for the odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_4,
    0.279_705_391_489_276_667_901_467_8,
    0.381_830_050_505_118_944_950_369_8,
    0.417_959_183_673_469_387_755_102_0,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
}

impl QuadResult {
    fn add(&mut self, other: QuadResult) {
        self.value += other.value;
        self.error += other.error;
        self.evaluations += other.evaluations;
    }
}

/// One Gauss-Kronrod pass on [a, b]: Kronrod value plus an error estimate in
/// the QUADPACK style (scaled difference against the embedded Gauss rule).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut samples = [0.0f64; 15];
    samples[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (j, s) in samples.iter().enumerate() {
        let w = WGK[j.min(14 - j)];
        if j != 7 {
            resasc += w * (s - mean).abs();
        }
    }

    let value = kronrod * half;
    let resasc = resasc * half.abs();
    let resabs = resabs * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > error {
        error = round;
    }
    QuadResult { value, error, evaluations: 15 }
}

/// Adaptive bisection on a finite interval, splitting the segment with the
/// largest error estimate until the total passes the tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> QuadResult {
    let mut segs: Vec<(f64, f64, QuadResult)> = vec![(a, b, gk15(f, a, b))];
    loop {
        let total: f64 = segs.iter().map(|s| s.2.value).sum();
        let err: f64 = segs.iter().map(|s| s.2.error).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || segs.len() >= max_segments {
            let evals = segs.iter().map(|s| s.2.evaluations).sum();
            return QuadResult { value: total, error: err, evaluations: evals };
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty segment list");
        let (lo, hi, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        segs.push((lo, mid, gk15(f, lo, mid)));
        segs.push((mid, hi, gk15(f, mid, hi)));
    }
}

/// Integral of `f` over `(0, upper]` when `f(t) ~ c t^s` at the origin with
/// `s` in `(-1, 0)`: substituting `t = u^p`, `p = 1/(1+s)`, flattens the
/// singularity so a plain adaptive pass converges at full order.
fn lower_with_substitution<F: Fn(f64) -> f64>(
    f: &F,
    upper: f64,
    s: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> QuadResult {
    let p = 1.0 / (1.0 + s);
    let u1 = upper.powf(1.0 / p);
    let g = |u: f64| f(u.powf(p)) * p * u.powf(p - 1.0);
    adaptive(&g, 0.0, u1, rel_tol, abs_floor, 400)
}

/// Integral over the positive half line, anchored at `scale`.
///
/// `zero_power`, when supplied, is the exact leading exponent of `f` at 0:
/// `f(t) ~ c t^zero_power`. Exponents `<= -1` return `DivergentIntegral`
/// immediately; exponents in `(-1, 0)` route through the substitution above.
/// The upper tail is extended by doubling windows; windows that stop
/// shrinking mark the integral divergent.
pub fn integrate_zero_inf<F: Fn(f64) -> f64>(
    f: &F,
    scale: f64,
    zero_power: Option<f64>,
    rel_tol: f64,
) -> Result<QuadResult> {
    let t0 = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    if let Some(s) = zero_power {
        if s <= -1.0 + 1e-12 {
            return Err(Error::DivergentIntegral(format!(
                "endpoint exponent {s:.6} at t=0 is not integrable"
            )));
        }
    }

    let mut acc = adaptive(f, t0, 2.0 * t0, rel_tol, 0.0, 200);
    let floor = |acc: &QuadResult| 1e-3 * rel_tol * acc.value.abs();

    // Lower part (0, t0].
    match zero_power {
        Some(s) if s < -1e-12 => {
            acc.add(lower_with_substitution(f, t0, s, rel_tol, floor(&acc)));
        }
        _ => {
            // Halving windows toward 0; regular integrands drain fast, and
            // window ratios expose a non-integrable endpoint if the exponent
            // hint was absent.
            let mut hi = t0;
            let mut prev = f64::INFINITY;
            let mut flat = 0usize;
            let mut quiet = 0usize;
            for k in 0..600 {
                let lo = 0.5 * hi;
                let w = adaptive(f, lo, hi, rel_tol, floor(&acc), 100);
                acc.add(w);
                let mag = w.value.abs();
                if mag <= floor(&acc).max(1e-300) {
                    quiet += 1;
                    if quiet >= 2 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                if prev.is_finite() && prev > 0.0 {
                    let ratio = mag / prev;
                    flat = if (0.97..=1.04).contains(&ratio) { flat + 1 } else { 0 };
                    if flat >= 30 {
                        return Err(Error::DivergentIntegral(
                            "window contributions at t->0 do not decay".into(),
                        ));
                    }
                }
                prev = mag;
                hi = lo;
                if k == 599 {
                    return Err(Error::NonConvergentIntegral(
                        "lower windows exhausted before converging".into(),
                    ));
                }
            }
        }
    }

    // Upper tail by doubling windows.
    let mut lo = 2.0 * t0;
    let mut prev = f64::INFINITY;
    let mut grow = 0usize;
    let mut quiet = 0usize;
    let mut last_ratio = 0.0f64;
    for k in 0..220 {
        let hi = 2.0 * lo;
        let w = adaptive(f, lo, hi, rel_tol, floor(&acc), 200);
        acc.add(w);
        let mag = w.value.abs();
        if mag <= floor(&acc).max(1e-300) {
            quiet += 1;
            if quiet >= 2 {
                if last_ratio < 1.0 && last_ratio > 0.0 && prev.is_finite() {
                    acc.error += prev * last_ratio / (1.0 - last_ratio);
                }
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        if prev.is_finite() && prev > 0.0 && mag > 0.0 {
            last_ratio = mag / prev;
            grow = if last_ratio >= 0.999 { grow + 1 } else { 0 };
            if grow >= 12 {
                return Err(Error::DivergentIntegral(
                    "tail window contributions do not decay".into(),
                ));
            }
        }
        if mag > 0.0 {
            prev = mag;
        }
        lo = hi;
        if k == 219 {
            return Err(Error::NonConvergentIntegral(
                "tail windows exhausted before converging".into(),
            ));
        }
    }
    Ok(acc)
}

/// Half surface area of the unit sphere in `R^d`: `pi^(d/2) / Gamma(d/2)`.
pub fn half_surface(d: usize) -> f64 {
    let hd = 0.5 * d as f64;
    (hd * std::f64::consts::PI.ln() - ln_gamma(hd)).exp()
}

/// Integral over `R^d` of `g(|x|^2) f(|x|^2) dx` for a radial density-like
/// factor `f` and weight `g`, as a 1-D integral in `t = |x|^2`.
///
/// `f_zero_power` and `g_zero_power` are the leading exponents of `f` and `g`
/// at `t = 0`; together with the Jacobian factor `t^(d/2-1)` they decide
/// integrability analytically, so divergent moment requests fail fast.
pub fn radial_integral<F, G>(
    d: usize,
    f: &F,
    f_zero_power: f64,
    g: &G,
    g_zero_power: f64,
    scale: f64,
    rel_tol: f64,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let jac_pow = 0.5 * d as f64 - 1.0;
    let total_pow = f_zero_power + g_zero_power + jac_pow;
    let c = half_surface(d);
    let integrand = move |t: f64| c * g(t) * f(t) * t.powf(jac_pow);
    let mut r = integrate_zero_inf(&integrand, scale, Some(total_pow), rel_tol)?;
    // Exponent exactly 0 with d=2 etc. still fine; scale error with value.
    if !r.value.is_finite() {
        return Err(Error::NonConvergentIntegral("non-finite radial integral".into()));
    }
    if r.error.is_nan() {
        r.error = f64::INFINITY;
    }
    Ok(r)
}
