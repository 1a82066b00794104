//! Paired Monte Carlo risk comparison and dominance scans.
//!
//! Replicates are chunked; each chunk owns a stream derived from (seed, task,
//! grid index, chunk index), and chunk summaries merge in chunk order, so an
//! estimate is a pure function of (inputs, seed) for any thread count.
//! Differences are paired: both estimators see the same draws, which is what
//! makes sub-percent risk gaps resolvable at feasible replicate counts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{Estimator, ShrinkFunction};
use crate::kernels::{Kernel, LossFamily, LossSpec};
use crate::mixture::MixtureModel;
use crate::rng::{chunk_rng, task_seed, CHUNK};

/// One Monte Carlo risk (or risk difference) with the inputs that made it.
#[derive(Debug, Clone)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation / sqrt(n).
    pub std_err: f64,
    pub n: usize,
    pub seed: u64,
    pub loss: String,
    pub estimator: String,
    pub theta: Vec<f64>,
}

/// Three-way call on a risk difference against the target at the 3-SE level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Dominates,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn from_difference(diff: f64, std_err: f64) -> Verdict {
        if diff - 3.0 * std_err > 0.0 {
            Verdict::Violated
        } else if diff + 3.0 * std_err < 0.0 {
            Verdict::Dominates
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Dominates => "dominates",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Violated => "violated",
        }
    }

    /// The dominance claim survives: anything but a 3-SE violation.
    pub fn pass(&self) -> bool {
        !matches!(self, Verdict::Violated)
    }
}

/// One grid point of a dominance scan.
#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub theta_norm: f64,
    pub difference: RiskEstimate,
    pub verdict: Verdict,
}

/// Paired risk differences against the target along a |theta| grid.
#[derive(Debug, Clone)]
pub struct DominanceScan {
    pub points: Vec<ScanPoint>,
    pub n_per_point: usize,
    pub seed: u64,
    pub estimator: String,
    pub loss_family: String,
    pub omega: f64,
}

impl DominanceScan {
    /// No point violated at the 3-SE level.
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.verdict.pass())
    }

    pub fn all_dominate(&self) -> bool {
        self.points.iter().all(|p| p.verdict == Verdict::Dominates)
    }
}

/// `|theta|` grid `{0, 0.5, 1, 2, 4, 8} * sqrt(d)`: the shrinkage-relevant
/// range from the origin out to effectively unshrunk signals.
pub fn default_theta_grid(d: usize) -> Vec<f64> {
    let s = (d as f64).sqrt();
    [0.0, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|m| m * s).collect()
}

/// Streaming mean/variance summary; merging two summaries is exact in the
/// same sense as pushing, so chunk-parallel reduction in chunk order gives
/// thread-count-independent results.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Acc) -> Acc {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Acc {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64,
        }
    }

    fn std_err(&self) -> f64 {
        (self.m2 / (self.n as f64 - 1.0) / self.n as f64).sqrt()
    }
}

/// Run `per_chunk` over the chunk grid in parallel and merge in chunk order.
fn chunked<F: Fn(u64, usize) -> Acc + Sync>(n: usize, per_chunk: F) -> Acc {
    let chunk = CHUNK as usize;
    let chunks = n.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|ci| per_chunk(ci as u64, chunk.min(n - ci * chunk)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Acc::default(), Acc::merge)
}

fn draw_x<R: Rng>(model: &MixtureModel, theta: &[f64], rng: &mut R, x: &mut [f64]) {
    let sd = model.mixing.draw(rng).sqrt();
    for (xi, ti) in x.iter_mut().zip(theta) {
        let z: f64 = rng.sample(StandardNormal);
        *xi = ti + sd * z;
    }
}

fn check_inputs(
    model: &MixtureModel,
    loss: &LossSpec,
    theta: &[f64],
    n: usize,
) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates for a standard error, got {n}"
        )));
    }
    if theta.len() != model.d {
        return Err(Error::DimensionMismatch { expected: model.d, got: theta.len() });
    }
    if loss.d != model.d {
        return Err(Error::DimensionMismatch { expected: model.d, got: loss.d });
    }
    Ok(())
}

fn check_fixed_scale(est: &Estimator) -> Result<()> {
    if est.needs_scale() {
        return Err(Error::InvalidParameter(format!(
            "{} wants a scale estimate; this loop draws none (see the unknown-variance scan)",
            est.label()
        )));
    }
    Ok(())
}

fn loss_echo(loss: &LossSpec) -> String {
    format!("{}(omega={},kernel={})", loss.family.label(), loss.omega, loss.kernel.label())
}

/// Monte Carlo estimate of the frequentist risk of `est` at `theta`, with the
/// balanced-loss anchor fixed at `delta0(X) = X`.
pub fn mc_risk(
    model: &MixtureModel,
    loss: &LossSpec,
    est: &Estimator,
    theta: &[f64],
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_inputs(model, loss, theta, n)?;
    check_fixed_scale(est)?;
    // One fallible round up front; the chunk loop then runs infallibly.
    let probe = est.estimate(theta, None)?;
    loss.eval(&probe, theta, theta)?;
    let tseed = task_seed(seed, "mc_risk", 0);
    let acc = chunked(n, |ci, count| {
        let mut rng = chunk_rng(tseed, ci);
        let mut acc = Acc::default();
        let mut x = vec![0.0; model.d];
        for _ in 0..count {
            draw_x(model, theta, &mut rng, &mut x);
            let delta = est.estimate(&x, None).expect("probed");
            acc.push(loss.eval(&delta, &x, theta).expect("probed"));
        }
        acc
    });
    Ok(RiskEstimate {
        mean: acc.mean,
        std_err: acc.std_err(),
        n,
        seed,
        loss: loss_echo(loss),
        estimator: est.label(),
        theta: theta.to_vec(),
    })
}

/// Paired risk difference `R(est_a) - R(est_b)`: both estimators are
/// evaluated on identical draws, replicate by replicate.
pub fn mc_risk_difference(
    model: &MixtureModel,
    loss: &LossSpec,
    est_a: &Estimator,
    est_b: &Estimator,
    theta: &[f64],
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_inputs(model, loss, theta, n)?;
    check_fixed_scale(est_a)?;
    check_fixed_scale(est_b)?;
    let pa = est_a.estimate(theta, None)?;
    let pb = est_b.estimate(theta, None)?;
    loss.eval(&pa, theta, theta)?;
    loss.eval(&pb, theta, theta)?;
    let tseed = task_seed(seed, "mc_risk_diff", 0);
    let acc = chunked(n, |ci, count| {
        let mut rng = chunk_rng(tseed, ci);
        let mut acc = Acc::default();
        let mut x = vec![0.0; model.d];
        for _ in 0..count {
            draw_x(model, theta, &mut rng, &mut x);
            let da = est_a.estimate(&x, None).expect("probed");
            let db = est_b.estimate(&x, None).expect("probed");
            let la = loss.eval(&da, &x, theta).expect("probed");
            let lb = loss.eval(&db, &x, theta).expect("probed");
            acc.push(la - lb);
        }
        acc
    });
    Ok(RiskEstimate {
        mean: acc.mean,
        std_err: acc.std_err(),
        n,
        seed,
        loss: loss_echo(loss),
        estimator: format!("{} - {}", est_a.label(), est_b.label()),
        theta: theta.to_vec(),
    })
}

/// Largest per-replicate residual of the quadratic shift identity
/// `L_w(x + (1-w) g) - L_w(x) = (1-w)^2 [L_0(x + g) - L_0(x)]` when the
/// blend `w x + (1-w) inner(x)` is compared against `x` under the quadratic
/// balanced loss. The identity is algebraic per draw, so the residual is
/// roundoff, not Monte Carlo noise.
pub fn quadratic_pairing_residual(
    model: &MixtureModel,
    inner: &Estimator,
    omega: f64,
    theta: &[f64],
    n: usize,
    seed: u64,
) -> Result<f64> {
    check_fixed_scale(inner)?;
    let loss_w = LossSpec::new(LossFamily::BalancedSquared, omega, Kernel::Identity, model.d)?;
    let loss_0 = LossSpec::new(LossFamily::BalancedSquared, 0.0, Kernel::Identity, model.d)?;
    check_inputs(model, &loss_w, theta, n)?;
    let blend = Estimator::BayesBalanced { omega, inner: Box::new(inner.clone()) };
    let tseed = task_seed(seed, "pairing_residual", 0);
    let chunk = CHUNK as usize;
    let mut worst = 0.0f64;
    let mut x = vec![0.0; model.d];
    for ci in 0..n.div_ceil(chunk) {
        let mut rng = chunk_rng(tseed, ci as u64);
        for _ in 0..chunk.min(n - ci * chunk) {
            draw_x(model, theta, &mut rng, &mut x);
            let du = inner.estimate(&x, None)?;
            let dw = blend.estimate(&x, None)?;
            let lhs = loss_w.eval(&dw, &x, theta)? - loss_w.eval(&x, &x, theta)?;
            let rhs = (1.0 - omega) * (1.0 - omega)
                * (loss_0.eval(&du, &x, theta)? - loss_0.eval(&x, &x, theta)?);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty |theta| grid".into()));
    }
    let ok = grid.iter().all(|g| g.is_finite() && *g >= 0.0)
        && grid.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "|theta| grid must be nonnegative and strictly increasing, got {grid:?}"
        )));
    }
    Ok(())
}

fn axis_point(d: usize, norm: f64) -> Vec<f64> {
    let mut theta = vec![0.0; d];
    theta[0] = norm;
    theta
}

/// Paired comparison of `est` against the target along a `|theta|` grid on
/// the first axis (spherical symmetry makes the direction immaterial).
pub fn dominance_scan(
    model: &MixtureModel,
    loss: &LossSpec,
    est: &Estimator,
    grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<DominanceScan> {
    check_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for (i, norm) in grid.iter().enumerate() {
        let theta = axis_point(model.d, *norm);
        let diff = mc_risk_difference(
            model,
            loss,
            est,
            &Estimator::TargetX,
            &theta,
            n,
            task_seed(seed, "scan_point", i as u64),
        )?;
        let verdict = Verdict::from_difference(diff.mean, diff.std_err);
        points.push(ScanPoint { theta_norm: *norm, difference: diff, verdict });
    }
    Ok(DominanceScan {
        points,
        n_per_point: n,
        seed,
        estimator: est.label(),
        loss_family: loss.family.label().into(),
        omega: loss.omega,
    })
}

/// Unknown-variance scan: `X ~ N_d(theta, sigma2 I)` with an independent
/// `S^2 ~ sigma2 chi^2_k`, comparing `x + (1-omega) (s^2/(k+2)) g(x)` against
/// `x` under the quadratic balanced loss, where `g(x) = -a r(|x|^2) x/|x|^2`.
pub fn unknown_variance_scan(
    d: usize,
    k: usize,
    omega: f64,
    a: f64,
    r: ShrinkFunction,
    sigma2: f64,
    grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<DominanceScan> {
    if k < 1 {
        return Err(Error::InvalidParameter("scale needs at least 1 degree of freedom".into()));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates for a standard error, got {n}"
        )));
    }
    check_grid(grid)?;
    let loss = LossSpec::new(LossFamily::BalancedSquared, omega, Kernel::Identity, d)?;
    let est = Estimator::BayesBalanced {
        omega,
        inner: Box::new(Estimator::UnknownVarianceBaranchik { a, r, k }),
    };
    // S^2/sigma2 ~ chi^2_k = Gamma(k/2, scale 2).
    let chi2 = Gamma::new(k as f64 / 2.0, 2.0)
        .map_err(|e| Error::InvalidParameter(format!("chi-square sampler: {e}")))?;
    let sd = sigma2.sqrt();
    let probe = est.estimate(&vec![1.0; d], Some(sigma2))?;
    loss.eval(&probe, &vec![1.0; d], &vec![0.0; d])?;

    let mut points = Vec::with_capacity(grid.len());
    for (i, norm) in grid.iter().enumerate() {
        let theta = axis_point(d, *norm);
        let tseed = task_seed(task_seed(seed, "uv_point", i as u64), "mc_risk_diff", 0);
        let acc = chunked(n, |ci, count| {
            let mut rng: ChaCha8Rng = chunk_rng(tseed, ci);
            let mut acc = Acc::default();
            let mut x = vec![0.0; d];
            for _ in 0..count {
                for (xi, ti) in x.iter_mut().zip(&theta) {
                    let z: f64 = rng.sample(StandardNormal);
                    *xi = ti + sd * z;
                }
                let s2 = sigma2 * rng.sample(chi2);
                let delta = est.estimate(&x, Some(s2)).expect("probed");
                let la = loss.eval(&delta, &x, &theta).expect("probed");
                let lb = loss.eval(&x, &x, &theta).expect("probed");
                acc.push(la - lb);
            }
            acc
        });
        let diff = RiskEstimate {
            mean: acc.mean,
            std_err: acc.std_err(),
            n,
            seed,
            loss: loss_echo(&loss),
            estimator: format!("{} - x", est.label()),
            theta,
        };
        let verdict = Verdict::from_difference(diff.mean, diff.std_err);
        points.push(ScanPoint { theta_norm: *norm, difference: diff, verdict });
    }
    Ok(DominanceScan {
        points,
        n_per_point: n,
        seed,
        estimator: est.label(),
        loss_family: loss.family.label().into(),
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoffs;
    use crate::mixture::MixingDistribution;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const N: usize = 1 << 16;

    fn normal(d: usize, sigma2: f64) -> MixtureModel {
        MixtureModel::new(d, MixingDistribution::Degenerate { sigma2 }).unwrap()
    }

    fn student(d: usize) -> MixtureModel {
        MixtureModel::new(d, MixingDistribution::InverseGamma { shape: 3.0, scale: 3.0 }).unwrap()
    }

    fn quad_loss(d: usize, omega: f64) -> LossSpec {
        LossSpec::new(LossFamily::BalancedSquared, omega, Kernel::Identity, d).unwrap()
    }

    #[test]
    fn target_risk_matches_closed_form() {
        // Loss of the target reduces to (1-omega)|X-theta|^2 with mean
        // (1-omega) d sigma2.
        let m = normal(5, 1.0);
        let r = mc_risk(&m, &quad_loss(5, 0.3), &Estimator::TargetX, &[0.4, 0.0, 1.0, 0.0, 0.0], N, 5)
            .unwrap();
        assert!((r.mean - 0.7 * 5.0).abs() <= 3.0 * r.std_err, "{} +- {}", r.mean, r.std_err);
        assert!(r.std_err > 0.0 && r.std_err < 0.02);
        assert_eq!(r.n, N);
    }

    #[test]
    fn target_risk_constant_in_theta_under_shared_draws() {
        // |X - theta|^2 has the same law for every theta, and shared streams
        // make the MC estimates agree to roundoff, not just within SE.
        for (family, kernel) in [
            (LossFamily::BalancedSquared, Kernel::Identity),
            (LossFamily::ConcaveBalanced, Kernel::ReflectedNormal { alpha: 2.0 }),
            (LossFamily::CompositeBalanced, Kernel::Log1p),
        ] {
            let m = student(5);
            let loss = LossSpec::new(family, 0.4, kernel, 5).unwrap();
            let risks: Vec<f64> = [0.0, 4.5, 17.9]
                .iter()
                .map(|norm| {
                    mc_risk(&m, &loss, &Estimator::TargetX, &axis_point(5, *norm), 4096, 9)
                        .unwrap()
                        .mean
                })
                .collect();
            assert_abs_diff_eq!(risks[0], risks[1], epsilon = 1e-10);
            assert_abs_diff_eq!(risks[0], risks[2], epsilon = 1e-10);
        }
    }

    #[test]
    fn james_stein_risk_at_origin() {
        // a = d-2 at theta = 0 has risk d - (d-2) = 2 under plain quadratic
        // loss in d = 5.
        let m = normal(5, 1.0);
        let r = mc_risk(
            &m,
            &quad_loss(5, 0.0),
            &Estimator::JamesStein { a: 3.0 },
            &[0.0; 5],
            N,
            11,
        )
        .unwrap();
        assert!(r.mean + 3.0 * r.std_err < 5.0);
        assert!((r.mean - 2.0).abs() <= 4.0 * r.std_err, "{} +- {}", r.mean, r.std_err);
    }

    #[test]
    fn identical_estimators_difference_is_exactly_zero() {
        let m = student(4);
        let loss = LossSpec::new(LossFamily::ConcaveBalanced, 0.3, Kernel::Log1p, 4).unwrap();
        let js = Estimator::JamesStein { a: 1.0 };
        let r = mc_risk_difference(&m, &loss, &js, &js, &[1.0, 0.0, 2.0, 0.0], 4096, 3).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.std_err, 0.0);
    }

    #[test]
    fn risk_estimates_are_deterministic_and_seed_sensitive() {
        let m = normal(5, 1.0);
        let theta = axis_point(5, 1.0);
        // An awkward replicate count spanning a chunk boundary.
        let n = CHUNK as usize + 17;
        let a = mc_risk(&m, &quad_loss(5, 0.2), &Estimator::JamesStein { a: 2.0 }, &theta, n, 7)
            .unwrap();
        let b = mc_risk(&m, &quad_loss(5, 0.2), &Estimator::JamesStein { a: 2.0 }, &theta, n, 7)
            .unwrap();
        let c = mc_risk(&m, &quad_loss(5, 0.2), &Estimator::JamesStein { a: 2.0 }, &theta, n, 8)
            .unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std_err, b.std_err);
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn quadratic_pairing_identity_holds_per_draw() {
        let m = normal(5, 1.0);
        let worst = quadratic_pairing_residual(
            &m,
            &Estimator::JamesStein { a: 3.0 },
            0.3,
            &axis_point(5, 2.0),
            4096,
            13,
        )
        .unwrap();
        assert!(worst <= 1e-12, "worst residual {worst}");
    }

    #[test]
    fn blended_difference_transfers_sign_from_unbalanced_case() {
        // Blending both estimators toward the target scales every paired
        // difference by (1-omega)^2, so means scale exactly and the verdict
        // sign transfers from the omega = 0 comparison at matched seeds.
        let m = normal(5, 1.0);
        let bayes = Estimator::NormalConjugateBayes {
            prior_mean: vec![0.0; 5],
            prior_var: 1.0,
            sigma2: 1.0,
        };
        let competitor = Estimator::JamesStein { a: 3.0 };
        let theta = axis_point(5, 1.5);
        let omega = 0.4;
        let d0 = mc_risk_difference(&m, &quad_loss(5, 0.0), &bayes, &competitor, &theta, 8192, 21)
            .unwrap();
        let blend_a = Estimator::BayesBalanced { omega, inner: Box::new(bayes) };
        let blend_b = Estimator::BayesBalanced { omega, inner: Box::new(competitor) };
        let dw =
            mc_risk_difference(&m, &quad_loss(5, omega), &blend_a, &blend_b, &theta, 8192, 21)
                .unwrap();
        assert_relative_eq!(dw.mean, 0.36 * d0.mean, max_relative = 1e-9);
        assert_eq!(dw.mean.signum(), d0.mean.signum());
    }

    #[test]
    fn zero_multiplier_scan_is_identically_zero() {
        let m = normal(5, 1.0);
        let est = Estimator::Baranchik { a: 0.0, r: ShrinkFunction::rational(5.0).unwrap() };
        let scan =
            dominance_scan(&m, &quad_loss(5, 0.3), &est, &default_theta_grid(5), 4096, 17).unwrap();
        for p in &scan.points {
            assert_eq!(p.difference.mean, 0.0);
            assert_eq!(p.difference.std_err, 0.0);
            assert_eq!(p.verdict, Verdict::Inconclusive);
        }
        assert!(scan.all_pass());
        assert_eq!(scan.n_per_point, 4096);
    }

    #[test]
    fn overshrinkage_is_flagged_at_the_origin() {
        // Twice the quadratic cut-off: the origin difference is
        // a (a - 2(d-2)) E(1/|X|^2) = 24 > 0 in d = 5, far beyond 3 SE.
        let m = normal(5, 1.0);
        let a = 2.0 * cutoffs::cutoff_quadratic(5, 0.0, 1.0).unwrap().value;
        let scan = dominance_scan(
            &m,
            &quad_loss(5, 0.0),
            &Estimator::JamesStein { a },
            &default_theta_grid(5),
            1 << 15,
            19,
        )
        .unwrap();
        assert_eq!(scan.points[0].verdict, Verdict::Violated);
        assert!(!scan.all_pass());
    }

    #[test]
    fn half_cutoff_concave_scan_passes() {
        let m = normal(5, 1.0);
        let kernel = Kernel::ReflectedNormal { alpha: 2.0 };
        let loss = LossSpec::new(LossFamily::ConcaveBalanced, 0.3, kernel.clone(), 5).unwrap();
        let (_, bound) = cutoffs::cutoff_concave(&m, &kernel, 0.3).unwrap();
        let est = Estimator::Baranchik {
            a: 0.5 * bound.value,
            r: ShrinkFunction::rational(5.0).unwrap(),
        };
        let scan = dominance_scan(&m, &loss, &est, &default_theta_grid(5), N, 23).unwrap();
        assert!(scan.all_pass(), "{:?}", scan.points.iter().map(|p| p.verdict).collect::<Vec<_>>());
        assert!(scan.points[0].verdict == Verdict::Dominates);
    }

    #[test]
    fn unknown_variance_scan_zero_g_and_dominance() {
        let grid = [0.0, 2.0, 6.0];
        let zero = unknown_variance_scan(
            5,
            4,
            0.3,
            0.0,
            ShrinkFunction::ConstantOne,
            1.0,
            &grid,
            4096,
            29,
        )
        .unwrap();
        for p in &zero.points {
            // The blend arithmetic leaves only roundoff on the zero shrink.
            assert!(p.difference.mean.abs() <= 1e-14);
            assert!(p.verdict.pass());
        }
        let js = unknown_variance_scan(
            5,
            4,
            0.3,
            3.0,
            ShrinkFunction::ConstantOne,
            1.0,
            &grid,
            1 << 15,
            31,
        )
        .unwrap();
        assert!(js.all_pass());
        assert_eq!(js.points[0].verdict, Verdict::Dominates);
        assert!(unknown_variance_scan(
            5,
            0,
            0.3,
            3.0,
            ShrinkFunction::ConstantOne,
            1.0,
            &grid,
            4096,
            1
        )
        .is_err());
    }

    #[test]
    fn grids_must_be_strictly_increasing_and_clean() {
        let m = normal(5, 1.0);
        let est = Estimator::JamesStein { a: 1.0 };
        for bad in [vec![], vec![1.0, 1.0], vec![2.0, 1.0], vec![-1.0, 0.0]] {
            assert!(dominance_scan(&m, &quad_loss(5, 0.0), &est, &bad, 64, 1).is_err());
        }
        assert!(mc_risk(&m, &quad_loss(5, 0.0), &est, &[0.0; 5], 1, 1).is_err());
        assert!(mc_risk(&m, &quad_loss(4, 0.0), &est, &[0.0; 5], 64, 1).is_err());
        let uv = Estimator::UnknownVarianceBaranchik {
            a: 1.0,
            r: ShrinkFunction::ConstantOne,
            k: 4,
        };
        assert!(mc_risk(&m, &quad_loss(5, 0.0), &uv, &[0.0; 5], 64, 1).is_err());
    }
}
