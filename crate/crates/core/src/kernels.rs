//! Loss kernels and balanced loss specifications.
//!
//! A balanced loss blends fidelity to a target estimate with fidelity to the
//! parameter. Three families share one kernel vocabulary:
//!
//! ```text
//! balanced_squared   omega |delta - target|^2 + (1 - omega) |delta - theta|^2
//! concave_balanced   omega k(|delta - target|^2) + (1 - omega) k(|delta - theta|^2)
//! composite_balanced k(omega |delta - target|^2 + (1 - omega) |delta - theta|^2)
//! ```
//!
//! A kernel `k` is admissible in the per-term (concave) slot when `k(0) = 0`,
//! `k'(0)` is finite and positive, and `k'` is completely monotone; in the
//! outer (composite) slot when `k >= 0`, `k' > 0`, and `k'` is completely
//! monotone (`k'(0) = +infinity` is allowed there, so `t^beta` qualifies).
//! Complete monotonicity of `k'` makes the induced loss a scale mixture of
//! quadratics, which is what every cut-off computation in this crate exploits.

use crate::diagnostics::{alternating_difference_check, CmReport};
use crate::error::{Error, Result};

/// Concave increasing kernels with completely monotone derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// k(t) = t; recovers plain quadratic loss in every slot.
    Identity,
    /// k(t) = 1 - exp(-t/alpha), alpha > 0. Bounded; derivative exponential.
    ReflectedNormal { alpha: f64 },
    /// k(t) = ln(1 + t).
    Log1p,
    /// k(t) = (1 + t/gamma)^beta - 1, gamma > 0, beta in (0, 1).
    PowerShift { gamma: f64, beta: f64 },
    /// k(t) = r^2 t / (r t + 1), r > 0. Bounded by r.
    BoundedRational { r: f64 },
    /// k(t) = t^beta, beta in (0, 1). k'(0) = +infinity: outer slot only.
    PurePower { beta: f64 },
}

/// Exponential-mixture record for a kernel derivative:
/// `k'(t) = k2 * exp(-t / (2 tau0))`, with `tau0 = +infinity` meaning `k'`
/// constant. Only kernels whose derivative is exactly of this form carry one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingRecord {
    pub tau0: f64,
    pub k2: f64,
}

impl MixingRecord {
    /// Reconstruct the kernel derivative from the record.
    pub fn k_prime(&self, t: f64) -> f64 {
        if self.tau0.is_infinite() {
            self.k2
        } else {
            self.k2 * (-t / (2.0 * self.tau0)).exp()
        }
    }
}

impl Kernel {
    /// Check parameter domains; returns the kernel unchanged when valid.
    pub fn validated(self) -> Result<Kernel> {
        let ok = match &self {
            Kernel::Identity | Kernel::Log1p => true,
            Kernel::ReflectedNormal { alpha } => *alpha > 0.0 && alpha.is_finite(),
            Kernel::PowerShift { gamma, beta } => {
                *gamma > 0.0 && gamma.is_finite() && *beta > 0.0 && *beta < 1.0
            }
            Kernel::BoundedRational { r } => *r > 0.0 && r.is_finite(),
            Kernel::PurePower { beta } => *beta > 0.0 && *beta < 1.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("kernel parameters out of domain: {self:?}")))
        }
    }

    pub fn k(&self, t: f64) -> f64 {
        match self {
            Kernel::Identity => t,
            Kernel::ReflectedNormal { alpha } => 1.0 - (-t / alpha).exp(),
            Kernel::Log1p => t.ln_1p(),
            Kernel::PowerShift { gamma, beta } => (1.0 + t / gamma).powf(*beta) - 1.0,
            Kernel::BoundedRational { r } => r * r * t / (r * t + 1.0),
            Kernel::PurePower { beta } => t.powf(*beta),
        }
    }

    pub fn k_prime(&self, t: f64) -> f64 {
        match self {
            Kernel::Identity => 1.0,
            Kernel::ReflectedNormal { alpha } => (-t / alpha).exp() / alpha,
            Kernel::Log1p => 1.0 / (1.0 + t),
            Kernel::PowerShift { gamma, beta } => {
                (beta / gamma) * (1.0 + t / gamma).powf(beta - 1.0)
            }
            Kernel::BoundedRational { r } => {
                let q = r * t + 1.0;
                r * r / (q * q)
            }
            Kernel::PurePower { beta } => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    beta * t.powf(beta - 1.0)
                }
            }
        }
    }

    /// `k'(0)` as an extended real; `+infinity` for the pure power kernel.
    pub fn k_prime_at_zero(&self) -> f64 {
        match self {
            Kernel::Identity => 1.0,
            Kernel::ReflectedNormal { alpha } => 1.0 / alpha,
            Kernel::Log1p => 1.0,
            Kernel::PowerShift { gamma, beta } => beta / gamma,
            Kernel::BoundedRational { r } => r * r,
            Kernel::PurePower { .. } => f64::INFINITY,
        }
    }

    /// Leading exponent of `k'` at `t = 0` (`k'(t) ~ c t^p`): 0 for every
    /// family except the pure power kernel, where it is `beta - 1`.
    pub fn k_prime_zero_power(&self) -> f64 {
        match self {
            Kernel::PurePower { beta } => beta - 1.0,
            _ => 0.0,
        }
    }

    /// Exponential-mixture record where the derivative is exactly of that
    /// shape: the identity (`tau0 = +infinity`, constant derivative) and the
    /// reflected normal (`tau0 = alpha/2`, `k2 = 1/alpha`). Other kernels
    /// return `None` and only moment-route computations apply to them.
    pub fn mixing_record(&self) -> Option<MixingRecord> {
        match self {
            Kernel::Identity => Some(MixingRecord { tau0: f64::INFINITY, k2: 1.0 }),
            Kernel::ReflectedNormal { alpha } => {
                Some(MixingRecord { tau0: alpha / 2.0, k2: 1.0 / alpha })
            }
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Kernel::Identity => "identity".into(),
            Kernel::ReflectedNormal { alpha } => format!("reflected_normal(alpha={alpha})"),
            Kernel::Log1p => "log1p".into(),
            Kernel::PowerShift { gamma, beta } => format!("power_shift(gamma={gamma},beta={beta})"),
            Kernel::BoundedRational { r } => format!("bounded_rational(r={r})"),
            Kernel::PurePower { beta } => format!("pure_power(beta={beta})"),
        }
    }
}

/// Which slot of a balanced loss a kernel is being validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Applied separately to each quadratic term (concave_balanced).
    PerTerm,
    /// Applied once to the blended quadratic (composite_balanced).
    Outer,
}

/// Structural checks for a kernel in a given role. `trusted` marks the
/// built-in families whose complete monotonicity is known in closed form; for
/// them the finite-difference certificate is recorded but advisory.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub role: Role,
    pub zero_value_ok: bool,
    pub deriv_at_zero_ok: bool,
    pub nonnegative: bool,
    pub deriv_positive: bool,
    pub nondecreasing: bool,
    pub concave: bool,
    pub cm: CmReport,
    pub trusted: bool,
}

impl KernelReport {
    pub fn pass(&self) -> bool {
        let cm_ok = self.trusted || self.cm.all_pass();
        match self.role {
            Role::PerTerm => {
                self.zero_value_ok
                    && self.deriv_at_zero_ok
                    && self.nondecreasing
                    && self.concave
                    && cm_ok
            }
            Role::Outer => self.nonnegative && self.deriv_positive && cm_ok,
        }
    }
}

/// Default validation grid: 256 log-spaced points across [1e-3, 1e3].
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 256)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

const SHAPE_TOL: f64 = 1e-10;

/// Validate a kernel for a role on a positive grid: shape checks
/// (monotonicity, concavity by midpoints) at tolerance 1e-10 and an
/// alternating finite-difference certificate for `k'` up to order 6.
pub fn validate_kernel(kernel: &Kernel, role: Role, grid: &[f64]) -> KernelReport {
    let k = |t: f64| kernel.k(t);
    let mut nondecreasing = true;
    let mut concave = true;
    let mut nonnegative = kernel.k(0.0) >= -SHAPE_TOL;
    let mut deriv_positive = true;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let scale = k(a).abs().max(k(b).abs()).max(1.0);
        if k(b) < k(a) - SHAPE_TOL * scale {
            nondecreasing = false;
        }
        if k(0.5 * (a + b)) < 0.5 * (k(a) + k(b)) - SHAPE_TOL * scale {
            concave = false;
        }
    }
    for &t in grid {
        if k(t) < -SHAPE_TOL {
            nonnegative = false;
        }
        if kernel.k_prime(t) <= 0.0 {
            deriv_positive = false;
        }
    }
    let d0 = kernel.k_prime_at_zero();
    let cm = alternating_difference_check(&|t| kernel.k_prime(t), 6, grid);
    KernelReport {
        role,
        zero_value_ok: kernel.k(0.0).abs() <= SHAPE_TOL,
        deriv_at_zero_ok: d0.is_finite() && d0 > 0.0,
        nonnegative,
        deriv_positive,
        nondecreasing,
        concave,
        cm,
        trusted: true,
    }
}

/// Loss family selector; see the module docs for the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFamily {
    BalancedSquared,
    ConcaveBalanced,
    CompositeBalanced,
}

impl LossFamily {
    pub fn label(&self) -> &'static str {
        match self {
            LossFamily::BalancedSquared => "balanced_squared",
            LossFamily::ConcaveBalanced => "concave_balanced",
            LossFamily::CompositeBalanced => "composite_balanced",
        }
    }
}

/// A fully specified balanced loss on `R^d`.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub family: LossFamily,
    pub omega: f64,
    pub kernel: Kernel,
    pub d: usize,
}

pub fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl LossSpec {
    pub fn new(family: LossFamily, omega: f64, kernel: Kernel, d: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&omega) {
            return Err(Error::InvalidOmega(omega));
        }
        if d == 0 {
            return Err(Error::DimensionTooSmall { need: 1, got: 0 });
        }
        let kernel = kernel.validated()?;
        Ok(LossSpec { family, omega, kernel, d })
    }

    fn check_dims(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: v.len() });
        }
        Ok(())
    }

    /// Loss of the decision `delta` against parameter `theta`, with `target`
    /// the anchor estimate the balanced loss stays close to.
    pub fn eval(&self, delta: &[f64], target: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_dims(delta)?;
        self.check_dims(target)?;
        self.check_dims(theta)?;
        let dt = sq_dist(delta, target);
        let dp = sq_dist(delta, theta);
        let w = self.omega;
        Ok(match self.family {
            LossFamily::BalancedSquared => w * dt + (1.0 - w) * dp,
            LossFamily::ConcaveBalanced => w * self.kernel.k(dt) + (1.0 - w) * self.kernel.k(dp),
            LossFamily::CompositeBalanced => self.kernel.k(w * dt + (1.0 - w) * dp),
        })
    }

    /// Loss difference between the shifted decision `target + (1-omega) g`
    /// and `target` itself. For the quadratic family this difference equals
    /// `(1-omega)^2` times its value at `omega = 0`, replicate by replicate;
    /// the concave family does not satisfy that identity and is rejected.
    pub fn target_shift_difference(
        &self,
        g: &[f64],
        target: &[f64],
        theta: &[f64],
    ) -> Result<f64> {
        if self.family == LossFamily::ConcaveBalanced {
            return Err(Error::InvalidParameter(
                "target-shift difference applies to balanced_squared and composite_balanced only"
                    .into(),
            ));
        }
        self.check_dims(g)?;
        let shifted: Vec<f64> = target
            .iter()
            .zip(g)
            .map(|(t, gi)| t + (1.0 - self.omega) * gi)
            .collect();
        Ok(self.eval(&shifted, target, theta)? - self.eval(target, target, theta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: [&Kernel; 6] = [
        &Kernel::Identity,
        &Kernel::ReflectedNormal { alpha: 2.0 },
        &Kernel::Log1p,
        &Kernel::PowerShift { gamma: 3.0, beta: 0.5 },
        &Kernel::BoundedRational { r: 1.5 },
        &Kernel::PurePower { beta: 0.5 },
    ];

    #[test]
    fn kernel_values_at_known_points() {
        // Frozen by hand: 1 - e^(-1), ln 2, 2^0.5 - 1, 2.25/2.5, 4^0.3.
        assert_relative_eq!(
            Kernel::ReflectedNormal { alpha: 1.0 }.k(1.0),
            0.6321205588285577,
            max_relative = 1e-15
        );
        assert_relative_eq!(Kernel::Log1p.k(1.0), 0.6931471805599453, max_relative = 1e-15);
        assert_relative_eq!(
            Kernel::PowerShift { gamma: 1.0, beta: 0.5 }.k(1.0),
            0.41421356237309515,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            Kernel::BoundedRational { r: 1.5 }.k(1.0),
            0.9,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            Kernel::PurePower { beta: 0.3 }.k(4.0),
            1.5157165665103982,
            max_relative = 1e-15
        );
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for kern in ALL {
            for t in [0.05, 0.7, 3.0, 40.0] {
                let h = t * 1e-6;
                let fd = (kern.k(t + h) - kern.k(t - h)) / (2.0 * h);
                // Truncation is O(h^2); cancellation in the numerator leaves
                // roundoff of order eps * k(t) / h (binding far in the tail of
                // the bounded kernels, where k' is tiny but k is order one).
                let tol = 1e-7 * kern.k_prime(t).abs() + 1e-13 * kern.k(t).abs().max(1.0) / h;
                let diff = (kern.k_prime(t) - fd).abs();
                assert!(diff <= tol, "{kern:?} at t={t}: |{diff:.3e}| > {tol:.3e}");
            }
        }
    }

    #[test]
    fn zero_values_and_zero_derivatives() {
        for kern in ALL {
            assert_abs_diff_eq!(kern.k(0.0), 0.0, epsilon = 1e-15);
        }
        assert_eq!(Kernel::PurePower { beta: 0.5 }.k_prime_at_zero(), f64::INFINITY);
        assert_relative_eq!(
            Kernel::PowerShift { gamma: 3.0, beta: 0.5 }.k_prime_at_zero(),
            0.5 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            Kernel::BoundedRational { r: 1.5 }.k_prime_at_zero(),
            2.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn mixing_records_reconstruct_derivative() {
        for kern in [Kernel::Identity, Kernel::ReflectedNormal { alpha: 2.0 }] {
            let rec = kern.mixing_record().expect("record exists");
            for &t in &default_grid() {
                assert_relative_eq!(rec.k_prime(t), kern.k_prime(t), max_relative = 1e-8);
            }
        }
        assert!(Kernel::Log1p.mixing_record().is_none());
        assert!(Kernel::PurePower { beta: 0.5 }.mixing_record().is_none());
    }

    #[test]
    fn parameter_domains_enforced() {
        assert!(Kernel::ReflectedNormal { alpha: 0.0 }.validated().is_err());
        assert!(Kernel::ReflectedNormal { alpha: -1.0 }.validated().is_err());
        assert!(Kernel::PowerShift { gamma: 1.0, beta: 1.0 }.validated().is_err());
        assert!(Kernel::PowerShift { gamma: -1.0, beta: 0.5 }.validated().is_err());
        assert!(Kernel::BoundedRational { r: 0.0 }.validated().is_err());
        assert!(Kernel::PurePower { beta: 0.0 }.validated().is_err());
        assert!(Kernel::PurePower { beta: 1.0 }.validated().is_err());
    }

    #[test]
    fn role_validation_splits_pure_power() {
        let grid = default_grid();
        for kern in ALL {
            let outer = validate_kernel(kern, Role::Outer, &grid);
            assert!(outer.pass(), "{} should pass the outer role", kern.label());
            let per_term = validate_kernel(kern, Role::PerTerm, &grid);
            if matches!(kern, Kernel::PurePower { .. }) {
                assert!(!per_term.pass(), "pure power must fail the per-term role");
                assert!(!per_term.deriv_at_zero_ok);
            } else {
                assert!(per_term.pass(), "{} should pass the per-term role", kern.label());
            }
        }
    }

    #[test]
    fn identity_kernel_collapses_all_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let d = 3;
            let draw = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect::<Vec<_>>();
            let (delta, target, theta) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let omega = 0.99 * rng.random::<f64>();
            let mk = |family| LossSpec::new(family, omega, Kernel::Identity, d).unwrap();
            let base = mk(LossFamily::BalancedSquared).eval(&delta, &target, &theta).unwrap();
            for family in [LossFamily::ConcaveBalanced, LossFamily::CompositeBalanced] {
                let v = mk(family).eval(&delta, &target, &theta).unwrap();
                assert_abs_diff_eq!(v, base, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn concave_loss_value_frozen() {
        // omega = 0, kernel 1 - e^(-t), delta at unit distance from theta.
        let spec = LossSpec::new(
            LossFamily::ConcaveBalanced,
            0.0,
            Kernel::ReflectedNormal { alpha: 1.0 },
            3,
        )
        .unwrap();
        let theta = [0.0, 0.0, 0.0];
        let delta = [1.0, 0.0, 0.0];
        let target = [0.3, -0.2, 0.1];
        let got = spec.eval(&delta, &target, &theta).unwrap();
        assert_relative_eq!(got, 0.6321205588285577, max_relative = 1e-14);
    }

    #[test]
    fn shift_difference_rejects_concave_family() {
        let spec = LossSpec::new(LossFamily::ConcaveBalanced, 0.2, Kernel::Log1p, 2).unwrap();
        let e = spec.target_shift_difference(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]);
        assert!(e.is_err());
    }

    #[test]
    fn scaled_difference_identity_quadratic() {
        // Difference at omega equals (1-omega)^2 times the difference at 0.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let d = 1 + (rng.random::<u32>() % 5) as usize;
            let draw = |rng: &mut ChaCha8Rng| {
                (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect::<Vec<_>>()
            };
            let (g, target, theta) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let omega = 0.999 * rng.random::<f64>();
            let at = |w: f64| {
                LossSpec::new(LossFamily::BalancedSquared, w, Kernel::Identity, d)
                    .unwrap()
                    .target_shift_difference(&g, &target, &theta)
                    .unwrap()
            };
            assert_abs_diff_eq!(at(omega), (1.0 - omega).powi(2) * at(0.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_and_omega_guards() {
        assert!(LossSpec::new(LossFamily::BalancedSquared, 1.0, Kernel::Identity, 3).is_err());
        assert!(LossSpec::new(LossFamily::BalancedSquared, -0.1, Kernel::Identity, 3).is_err());
        let spec = LossSpec::new(LossFamily::BalancedSquared, 0.5, Kernel::Identity, 3).unwrap();
        assert!(spec.eval(&[0.0; 2], &[0.0; 3], &[0.0; 3]).is_err());
    }
}
