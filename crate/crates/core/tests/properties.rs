//! Randomized structural properties of the loss and estimator primitives.

use proptest::prelude::*;

use shrinklab::estimators::{Estimator, ShrinkFunction};
use shrinklab::kernels::{Kernel, LossFamily, LossSpec};

fn vec_in(d: usize, half_width: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half_width..half_width, d)
}

/// Dimension plus three point vectors of that dimension.
fn triple(max_d: usize, half_width: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=max_d).prop_flat_map(move |d| {
        (vec_in(d, half_width), vec_in(d, half_width), vec_in(d, half_width))
    })
}

proptest! {
    /// Blending the shrinkage direction into the target with weight
    /// (1-omega) rescales the quadratic loss difference by exactly
    /// (1-omega)^2, for every single draw.
    #[test]
    fn scaled_difference_identity(
        (theta, delta0, g) in triple(6, 5.0),
        omega in 0.0f64..0.95,
    ) {
        let d = theta.len();
        let blend = LossSpec::new(LossFamily::BalancedSquared, omega, Kernel::Identity, d).unwrap();
        let base = LossSpec::new(LossFamily::BalancedSquared, 0.0, Kernel::Identity, d).unwrap();
        let dw = blend.target_shift_difference(&g, &delta0, &theta).unwrap();
        let d0 = base.target_shift_difference(&g, &delta0, &theta).unwrap();
        prop_assert!((dw - (1.0 - omega) * (1.0 - omega) * d0).abs() <= 1e-11);
    }

    /// The rational shrink factor stays in [0, 1], never decreases, and
    /// keeps r(t)/t nonincreasing: the three conditions the dominance
    /// results place on a Baranchik multiplier.
    #[test]
    fn rational_shrink_satisfies_the_multiplier_conditions(
        c in 0.1f64..50.0,
        t in 0.0f64..1e4,
        dt in 1e-6f64..10.0,
    ) {
        let r = ShrinkFunction::rational(c).unwrap();
        let (v0, v1) = (r.r(t), r.r(t + dt));
        prop_assert!((0.0..=1.0).contains(&v0));
        prop_assert!(v1 >= v0, "r must be nondecreasing: r({t})={v0}, r({})={v1}", t + dt);
        prop_assert!(r.r_prime(t) >= 0.0);
        if t > 0.0 {
            // r(t)/t nonincreasing, allowing for roundoff on the cross terms.
            prop_assert!(v1 / (t + dt) <= (v0 / t) * (1.0 + 1e-12));
        }
    }

    /// Every loss family vanishes when decision, target, and truth coincide
    /// and is nonnegative everywhere.
    #[test]
    fn losses_vanish_at_truth_and_stay_nonnegative(
        family_pick in 0usize..3,
        omega in 0.0f64..0.95,
        (delta, target, theta) in triple(5, 4.0),
    ) {
        let (family, kernel) = match family_pick {
            0 => (LossFamily::BalancedSquared, Kernel::Identity),
            1 => (LossFamily::ConcaveBalanced, Kernel::ReflectedNormal { alpha: 2.0 }),
            _ => (LossFamily::CompositeBalanced, Kernel::Log1p),
        };
        let loss = LossSpec::new(family, omega, kernel, theta.len()).unwrap();
        prop_assert_eq!(loss.eval(&theta, &theta, &theta).unwrap(), 0.0);
        prop_assert!(loss.eval(&delta, &target, &theta).unwrap() >= 0.0);
    }

    /// A balanced blend lies componentwise between the target and the rule
    /// it blends, for any omega in [0, 1).
    #[test]
    fn blend_stays_between_target_and_inner_rule(
        omega in 0.0f64..0.999,
        a in 0.0f64..10.0,
        x in (3usize..=6).prop_flat_map(|d| vec_in(d, 6.0)),
    ) {
        let inner = Estimator::JamesStein { a };
        let blend = Estimator::BayesBalanced { omega, inner: Box::new(inner.clone()) };
        let yi = inner.estimate(&x, None).unwrap();
        let yb = blend.estimate(&x, None).unwrap();
        for j in 0..x.len() {
            let (lo, hi) = if x[j] <= yi[j] { (x[j], yi[j]) } else { (yi[j], x[j]) };
            prop_assert!(yb[j] >= lo - 1e-12 && yb[j] <= hi + 1e-12,
                "component {j}: {} outside [{lo}, {hi}]", yb[j]);
        }
    }
}
