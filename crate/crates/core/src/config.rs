//! Experiment configuration: a TOML file with `[model]`, `[kernel]`,
//! `[loss]`, `[[estimator]]`, and `[run]` sections.
//!
//! Every block is flat key-value; unknown keys and parameters that do not
//! belong to the declared family are rejected before any computation runs.
//! The shrinkage multiplier can be given absolutely (`a`) or as
//! `a_fraction_of_cutoff`, resolved against the bound that the configured
//! loss family's dominance result prescribes:
//!
//! * `balanced_squared`: the bound on the full applied multiplier,
//!   `2 (d-2) (1-omega) sigma2` for the normal model and
//!   `(1-omega) * 2/E0(1/|X|^2)` for other mixtures;
//! * `concave_balanced`: the per-term bound (moment route), multiplier
//!   applied as-is;
//! * `composite_balanced`: the outer-kernel bound, with the `(1-omega)`
//!   factor applied on top of the resolved `a`.

use serde::{Deserialize, Serialize};

use crate::cutoffs;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, ShrinkFunction};
use crate::kernels::{default_grid, validate_kernel, Kernel, LossFamily, LossSpec, Role};
use crate::mixture::{MixingDistribution, MixtureModel};
use crate::risk::default_theta_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub kernel: KernelConfig,
    pub loss: LossConfig,
    #[serde(default)]
    pub estimator: Vec<EstimatorConfig>,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// normal | student | exponential | discrete
    pub family: String,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// identity | reflected_normal | log1p | power_shift | bounded_rational | pure_power
    pub family: String,
    /// per_term | outer; inferred from the loss family when absent, checked
    /// against it when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// balanced_squared | concave_balanced | composite_balanced
    pub family: String,
    pub omegas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// target | james_stein | baranchik | uv_baranchik | conjugate_bayes
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_fraction_of_cutoff: Option<f64>,
    /// constant_one | rational (r(t) = t/(t + r_c))
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_c: Option<f64>,
    /// Degrees of freedom of the scale estimate (uv_baranchik only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Output directory for CSV and manifest files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// A config-resolved estimator: the rule itself plus the multiplier echo for
/// the output rows.
#[derive(Debug, Clone)]
pub struct ResolvedEstimator {
    pub estimator: Estimator,
    /// Multiplier `a` on the bound's own scale (before any `(1-omega)` application).
    pub a: f64,
    /// The bound `a` was resolved against, when a fraction was given.
    pub cutoff: Option<f64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn no_stray(block: &str, family: &str, given: &[(&str, bool)], allowed: &[&str]) -> Result<()> {
    for (name, present) in given {
        if *present && !allowed.contains(name) {
            return Err(bad(format!(
                "[{block}] key `{name}` does not apply to family `{family}`"
            )));
        }
    }
    Ok(())
}

fn need<T: Copy>(block: &str, family: &str, name: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| bad(format!("[{block}] family `{family}` needs key `{name}`")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| bad(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| bad(format!("config emit error: {e}")))
    }

    /// Build every part once; any invalid combination fails here, before
    /// computation starts.
    pub fn validate(&self) -> Result<()> {
        self.build_model()?;
        self.build_kernel_checked()?;
        self.build_losses()?;
        for est in &self.estimator {
            self.check_estimator_shape(est)?;
        }
        if self.run.n < 2 {
            return Err(bad(format!("[run] n must be at least 2, got {}", self.run.n)));
        }
        if let Some(grid) = &self.run.grid {
            let ok = !grid.is_empty()
                && grid.iter().all(|g| g.is_finite() && *g >= 0.0)
                && grid.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                return Err(bad(format!(
                    "[run] grid must be nonnegative and strictly increasing, got {grid:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<MixtureModel> {
        let m = &self.model;
        let given = [
            ("sigma2", m.sigma2.is_some()),
            ("shape", m.shape.is_some()),
            ("scale", m.scale.is_some()),
            ("rate", m.rate.is_some()),
            ("points", m.points.is_some()),
            ("weights", m.weights.is_some()),
        ];
        let mixing = match m.family.as_str() {
            "normal" => {
                no_stray("model", "normal", &given, &["sigma2"])?;
                MixingDistribution::Degenerate {
                    sigma2: need("model", "normal", "sigma2", m.sigma2)?,
                }
            }
            "student" => {
                no_stray("model", "student", &given, &["shape", "scale"])?;
                MixingDistribution::InverseGamma {
                    shape: need("model", "student", "shape", m.shape)?,
                    scale: need("model", "student", "scale", m.scale)?,
                }
            }
            "exponential" => {
                no_stray("model", "exponential", &given, &["rate"])?;
                MixingDistribution::Exponential {
                    rate: need("model", "exponential", "rate", m.rate)?,
                }
            }
            "discrete" => {
                no_stray("model", "discrete", &given, &["points", "weights"])?;
                MixingDistribution::Discrete {
                    points: m
                        .points
                        .clone()
                        .ok_or_else(|| bad("[model] family `discrete` needs key `points`"))?,
                    weights: m
                        .weights
                        .clone()
                        .ok_or_else(|| bad("[model] family `discrete` needs key `weights`"))?,
                }
            }
            other => return Err(bad(format!("[model] unknown family `{other}`"))),
        };
        MixtureModel::new(m.d, mixing)
    }

    fn build_kernel_raw(&self) -> Result<Kernel> {
        let k = &self.kernel;
        let given = [
            ("alpha", k.alpha.is_some()),
            ("gamma", k.gamma.is_some()),
            ("beta", k.beta.is_some()),
            ("r", k.r.is_some()),
        ];
        let kernel = match k.family.as_str() {
            "identity" => {
                no_stray("kernel", "identity", &given, &[])?;
                Kernel::Identity
            }
            "reflected_normal" => {
                no_stray("kernel", "reflected_normal", &given, &["alpha"])?;
                Kernel::ReflectedNormal {
                    alpha: need("kernel", "reflected_normal", "alpha", k.alpha)?,
                }
            }
            "log1p" => {
                no_stray("kernel", "log1p", &given, &[])?;
                Kernel::Log1p
            }
            "power_shift" => {
                no_stray("kernel", "power_shift", &given, &["gamma", "beta"])?;
                Kernel::PowerShift {
                    gamma: need("kernel", "power_shift", "gamma", k.gamma)?,
                    beta: need("kernel", "power_shift", "beta", k.beta)?,
                }
            }
            "bounded_rational" => {
                no_stray("kernel", "bounded_rational", &given, &["r"])?;
                Kernel::BoundedRational { r: need("kernel", "bounded_rational", "r", k.r)? }
            }
            "pure_power" => {
                no_stray("kernel", "pure_power", &given, &["beta"])?;
                Kernel::PurePower { beta: need("kernel", "pure_power", "beta", k.beta)? }
            }
            other => return Err(bad(format!("[kernel] unknown family `{other}`"))),
        };
        kernel.validated()
    }

    /// Role the loss family puts the kernel in.
    pub fn role(&self) -> Result<Role> {
        let implied = match self.loss.family.as_str() {
            "balanced_squared" | "composite_balanced" => Role::Outer,
            "concave_balanced" => Role::PerTerm,
            other => return Err(bad(format!("[loss] unknown family `{other}`"))),
        };
        if let Some(declared) = &self.kernel.role {
            let declared = match declared.as_str() {
                "per_term" => Role::PerTerm,
                "outer" => Role::Outer,
                other => return Err(bad(format!("[kernel] unknown role `{other}`"))),
            };
            if declared != implied {
                return Err(bad(format!(
                    "[kernel] role `{declared:?}` contradicts the `{}` loss",
                    self.loss.family
                )));
            }
        }
        Ok(implied)
    }

    /// Kernel with the role gate applied: a kernel that fails the conditions
    /// of its slot (pure_power per-term, say) is rejected here.
    pub fn build_kernel_checked(&self) -> Result<Kernel> {
        let kernel = self.build_kernel_raw()?;
        if self.loss.family == "balanced_squared" && kernel != Kernel::Identity {
            return Err(bad(
                "[kernel] balanced_squared applies no kernel; use family = \"identity\"",
            ));
        }
        let role = self.role()?;
        let report = validate_kernel(&kernel, role, &default_grid());
        if !report.pass() {
            return Err(bad(format!(
                "[kernel] {} fails the {:?}-slot conditions",
                kernel.label(),
                role
            )));
        }
        Ok(kernel)
    }

    fn loss_family(&self) -> Result<LossFamily> {
        match self.loss.family.as_str() {
            "balanced_squared" => Ok(LossFamily::BalancedSquared),
            "concave_balanced" => Ok(LossFamily::ConcaveBalanced),
            "composite_balanced" => Ok(LossFamily::CompositeBalanced),
            other => Err(bad(format!("[loss] unknown family `{other}`"))),
        }
    }

    /// One loss per configured omega.
    pub fn build_losses(&self) -> Result<Vec<LossSpec>> {
        if self.loss.omegas.is_empty() {
            return Err(bad("[loss] omegas must not be empty"));
        }
        let family = self.loss_family()?;
        let kernel = self.build_kernel_checked()?;
        self.loss
            .omegas
            .iter()
            .map(|omega| LossSpec::new(family, *omega, kernel.clone(), self.model.d))
            .collect()
    }

    fn check_estimator_shape(&self, est: &EstimatorConfig) -> Result<()> {
        let fam = est.family.as_str();
        let given = [
            ("a", est.a.is_some()),
            ("a_fraction_of_cutoff", est.a_fraction_of_cutoff.is_some()),
            ("r", est.r.is_some()),
            ("r_c", est.r_c.is_some()),
            ("k", est.k.is_some()),
            ("prior_mean", est.prior_mean.is_some()),
            ("prior_var", est.prior_var.is_some()),
        ];
        match fam {
            "target" => no_stray("estimator", fam, &given, &[])?,
            "james_stein" => {
                no_stray("estimator", fam, &given, &["a", "a_fraction_of_cutoff"])?
            }
            "baranchik" => no_stray(
                "estimator",
                fam,
                &given,
                &["a", "a_fraction_of_cutoff", "r", "r_c"],
            )?,
            "uv_baranchik" => {
                no_stray(
                    "estimator",
                    fam,
                    &given,
                    &["a", "a_fraction_of_cutoff", "r", "r_c", "k"],
                )?;
                let k = need("estimator", fam, "k", est.k)?;
                if k < 1 {
                    return Err(bad("[estimator] uv_baranchik needs k >= 1"));
                }
                if self.loss.family != "balanced_squared" {
                    return Err(bad(
                        "[estimator] uv_baranchik runs under balanced_squared loss only",
                    ));
                }
                if self.model.family != "normal" {
                    return Err(bad(
                        "[estimator] uv_baranchik needs the normal model (unknown-variance setting)",
                    ));
                }
            }
            "conjugate_bayes" => {
                no_stray("estimator", fam, &given, &["prior_mean", "prior_var"])?;
                need("estimator", fam, "prior_mean", est.prior_mean)?;
                let v0 = need("estimator", fam, "prior_var", est.prior_var)?;
                if !(v0 > 0.0) {
                    return Err(bad("[estimator] conjugate_bayes needs prior_var > 0"));
                }
                if self.model.family != "normal" {
                    return Err(bad(
                        "[estimator] conjugate_bayes needs the normal model",
                    ));
                }
            }
            other => return Err(bad(format!("[estimator] unknown family `{other}`"))),
        }
        if fam == "james_stein" || fam == "baranchik" || fam == "uv_baranchik" {
            match (est.a.is_some(), est.a_fraction_of_cutoff.is_some()) {
                (true, true) => {
                    return Err(bad(
                        "[estimator] give either `a` or `a_fraction_of_cutoff`, not both",
                    ))
                }
                (false, false) => {
                    return Err(bad(
                        "[estimator] one of `a` or `a_fraction_of_cutoff` is required",
                    ))
                }
                _ => {}
            }
            self.build_shrink(est)?;
        }
        Ok(())
    }

    /// Shrink function of a baranchik-type block; `james_stein` pins r = 1.
    pub fn build_shrink(&self, est: &EstimatorConfig) -> Result<ShrinkFunction> {
        if est.family == "james_stein" {
            return Ok(ShrinkFunction::ConstantOne);
        }
        match est.r.as_deref() {
            None | Some("constant_one") => {
                if est.r_c.is_some() && est.r.as_deref() != Some("rational") {
                    return Err(bad("[estimator] key `r_c` needs r = \"rational\""));
                }
                Ok(ShrinkFunction::ConstantOne)
            }
            Some("rational") => ShrinkFunction::rational(
                est.r_c
                    .ok_or_else(|| bad("[estimator] r = \"rational\" needs key `r_c`"))?,
            ),
            Some(other) => Err(bad(format!("[estimator] unknown r kind `{other}`"))),
        }
    }

    /// The dominance bound the loss family prescribes for multiplier
    /// resolution at this omega.
    pub fn resolve_cutoff(&self, omega: f64) -> Result<f64> {
        let model = self.build_model()?;
        let kernel = self.build_kernel_checked()?;
        match self.loss_family()? {
            LossFamily::BalancedSquared => match model.mixing {
                MixingDistribution::Degenerate { sigma2 } => {
                    Ok(cutoffs::cutoff_quadratic(model.d, omega, sigma2)?.value)
                }
                _ => Ok((1.0 - omega) * cutoffs::cutoff_plain_inverse_moment(&model)?.value),
            },
            LossFamily::ConcaveBalanced => {
                let (_, moment) = cutoffs::cutoff_concave(&model, &kernel, omega)?;
                Ok(moment.value)
            }
            LossFamily::CompositeBalanced => {
                Ok(cutoffs::cutoff_composite(&model, &kernel, omega)?.value)
            }
        }
    }

    /// Turn one estimator block into a concrete rule at a given omega.
    ///
    /// For `uv_baranchik` the bound of the estimated-scale result applies
    /// (omega-free, on the unscaled multiplier) and the blend carries the
    /// `(1-omega)`; for `composite_balanced` losses the resolved `a` is
    /// applied as `a (1-omega)` per the outer-kernel dominance form.
    pub fn resolve_estimator(
        &self,
        est: &EstimatorConfig,
        omega: f64,
    ) -> Result<ResolvedEstimator> {
        self.check_estimator_shape(est)?;
        match est.family.as_str() {
            "target" => Ok(ResolvedEstimator { estimator: Estimator::TargetX, a: 0.0, cutoff: None }),
            "conjugate_bayes" => {
                let model = self.build_model()?;
                let sigma2 = match model.mixing {
                    MixingDistribution::Degenerate { sigma2 } => sigma2,
                    _ => unreachable!("shape check requires the normal model"),
                };
                let inner = Estimator::NormalConjugateBayes {
                    prior_mean: vec![est.prior_mean.unwrap(); model.d],
                    prior_var: est.prior_var.unwrap(),
                    sigma2,
                };
                Ok(ResolvedEstimator {
                    estimator: Estimator::BayesBalanced { omega, inner: Box::new(inner) },
                    a: 0.0,
                    cutoff: None,
                })
            }
            "uv_baranchik" => {
                let r = self.build_shrink(est)?;
                let k = est.k.unwrap();
                let (a, cutoff) = match (est.a, est.a_fraction_of_cutoff) {
                    (Some(a), _) => (a, None),
                    (_, Some(frac)) => {
                        let bound =
                            cutoffs::cutoff_estimated_scale(self.model.d, omega)?.value;
                        (frac * bound, Some(bound))
                    }
                    _ => unreachable!("shape check demands one"),
                };
                let inner = Estimator::UnknownVarianceBaranchik { a, r, k };
                Ok(ResolvedEstimator {
                    estimator: Estimator::BayesBalanced { omega, inner: Box::new(inner) },
                    a,
                    cutoff,
                })
            }
            // james_stein | baranchik
            _ => {
                let r = self.build_shrink(est)?;
                let (a, cutoff) = match (est.a, est.a_fraction_of_cutoff) {
                    (Some(a), _) => (a, None),
                    (_, Some(frac)) => {
                        let bound = self.resolve_cutoff(omega)?;
                        (frac * bound, Some(bound))
                    }
                    _ => unreachable!("shape check demands one"),
                };
                let applied = match self.loss_family()? {
                    LossFamily::CompositeBalanced => a * (1.0 - omega),
                    _ => a,
                };
                let estimator = if est.family == "james_stein" {
                    Estimator::JamesStein { a: applied }
                } else {
                    Estimator::Baranchik { a: applied, r }
                };
                Ok(ResolvedEstimator { estimator, a, cutoff })
            }
        }
    }

    /// The |theta| grid: explicit when configured, the default span
    /// otherwise.
    pub fn theta_grid(&self) -> Vec<f64> {
        self.run.grid.clone().unwrap_or_else(|| default_theta_grid(self.model.d))
    }
}
