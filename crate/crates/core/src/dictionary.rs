//! Scalar nonlinearities in their four roles and the translations between
//! them.
//!
//! A diffusivity `g`, a regulariser `Psi`, a shrinkage function `S` and an
//! activation (flux) `Phi` describe the same smoothing behaviour in four
//! paradigms. Six closed-form families are provided, and any role function
//! can be translated into any other role. Translations use only the source
//! evaluator: cells that integrate use composite Simpson quadrature, cells
//! that differentiate use finite differences.
//!
//! Shrinkage functions are tied to a time step `tau` and regularisers to a
//! weight `alpha`; the closed-form families are written for
//! `tau = alpha = 1/4`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Below this magnitude, `x / r` style cells are evaluated as limits.
pub const SINGULARITY_RADIUS: f64 = 1e-8;
/// Half-width of the symmetric difference quotient used for those limits.
const LIMIT_STEP: f64 = 1e-6;
/// Subintervals of composite Simpson per smooth piece of the integrand.
pub const SIMPSON_PANELS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Diffusivity,
    Regulariser,
    Shrinkage,
    Activation,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Diffusivity,
        Role::Regulariser,
        Role::Shrinkage,
        Role::Activation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Diffusivity => "diffusivity",
            Role::Regulariser => "regulariser",
            Role::Shrinkage => "shrinkage",
            Role::Activation => "activation",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "diffusivity" | "g" => Ok(Role::Diffusivity),
            "regulariser" | "regularizer" | "psi" => Ok(Role::Regulariser),
            "shrinkage" | "s" => Ok(Role::Shrinkage),
            "activation" | "flux" | "phi" => Ok(Role::Activation),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Homogeneous diffusion, Whittaker-Tikhonov regularisation.
    Constant,
    Charbonnier,
    /// Huber regulariser, soft shrinkage.
    TruncatedTv,
    PeronaMalik,
    /// Garrote shrinkage.
    TruncatedBfb,
    /// Hard shrinkage.
    TruncatedQuadratic,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Constant,
        Family::Charbonnier,
        Family::TruncatedTv,
        Family::PeronaMalik,
        Family::TruncatedBfb,
        Family::TruncatedQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Charbonnier => "charbonnier",
            Family::TruncatedTv => "truncated-tv",
            Family::PeronaMalik => "perona-malik",
            Family::TruncatedBfb => "truncated-bfb",
            Family::TruncatedQuadratic => "truncated-quadratic",
        }
    }

    /// Whether the family is parametrised by the contrast `lambda`
    /// (otherwise by the threshold `theta`, or by nothing for `Constant`).
    pub fn uses_contrast(self) -> bool {
        matches!(self, Family::Charbonnier | Family::PeronaMalik)
    }

    pub fn uses_threshold(self) -> bool {
        matches!(
            self,
            Family::TruncatedTv | Family::TruncatedBfb | Family::TruncatedQuadratic
        )
    }

    /// Families whose activation is nondecreasing.
    pub fn has_monotone_activation(self) -> bool {
        matches!(
            self,
            Family::Constant | Family::Charbonnier | Family::TruncatedTv
        )
    }

    /// Families whose regulariser is convex.
    pub fn has_convex_regulariser(self) -> bool {
        self.has_monotone_activation()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "constant" | "tikhonov" | "identity" => Ok(Family::Constant),
            "charbonnier" => Ok(Family::Charbonnier),
            "truncated-tv" | "huber" | "soft" => Ok(Family::TruncatedTv),
            "perona-malik" | "pm" => Ok(Family::PeronaMalik),
            "truncated-bfb" | "bfb" | "garrote" => Ok(Family::TruncatedBfb),
            "truncated-quadratic" | "hard" => Ok(Family::TruncatedQuadratic),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// A family together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    family: Family,
    contrast: f64,
    threshold: f64,
}

impl FamilySpec {
    /// The parameter the family does not use is ignored.
    pub fn new(family: Family, contrast: f64, threshold: f64) -> Result<Self> {
        let valid = |x: f64| x.is_finite() && x > 0.0;
        if family.uses_contrast() && !valid(contrast) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: contrast,
            });
        }
        if family.uses_threshold() && !valid(threshold) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: threshold,
            });
        }
        Ok(Self {
            family,
            contrast,
            threshold,
        })
    }

    pub fn constant() -> Self {
        Self {
            family: Family::Constant,
            contrast: 1.0,
            threshold: 1.0,
        }
    }

    pub fn charbonnier(lambda: f64) -> Result<Self> {
        Self::new(Family::Charbonnier, lambda, 1.0)
    }

    pub fn perona_malik(lambda: f64) -> Result<Self> {
        Self::new(Family::PeronaMalik, lambda, 1.0)
    }

    pub fn truncated_tv(theta: f64) -> Result<Self> {
        Self::new(Family::TruncatedTv, 1.0, theta)
    }

    pub fn truncated_bfb(theta: f64) -> Result<Self> {
        Self::new(Family::TruncatedBfb, 1.0, theta)
    }

    pub fn truncated_quadratic(theta: f64) -> Result<Self> {
        Self::new(Family::TruncatedQuadratic, 1.0, theta)
    }

    /// The family with unit contrast or threshold.
    pub fn unit(family: Family) -> Self {
        Self::new(family, 1.0, 1.0).expect("unit parameters are valid")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Lipschitz constant of the activation. It equals the maximal
    /// diffusivity, which is 1 for every family.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    /// Positive branch points of the role's piecewise formula.
    pub fn breakpoints(&self, role: Role) -> Vec<f64> {
        if !self.family.uses_threshold() {
            return Vec::new();
        }
        let theta = self.threshold;
        match role {
            Role::Shrinkage => vec![theta],
            _ => vec![SQRT_2 * theta],
        }
    }

    pub fn eval(&self, role: Role, r: f64) -> f64 {
        eval_family(self, role, r)
    }
}

/// Closed-form value of `role` for the given family at `r`.
pub fn eval_family(spec: &FamilySpec, role: Role, r: f64) -> f64 {
    let lambda = spec.contrast;
    let theta = spec.threshold;
    let knee = SQRT_2 * theta;
    let inner = r.abs() <= knee;
    match (spec.family, role) {
        (Family::Constant, Role::Diffusivity) => 1.0,
        (Family::Constant, Role::Regulariser) => r * r,
        (Family::Constant, Role::Shrinkage) => 0.0,
        (Family::Constant, Role::Activation) => r,

        (Family::Charbonnier, Role::Diffusivity) => 1.0 / (1.0 + r * r / (lambda * lambda)).sqrt(),
        (Family::Charbonnier, Role::Regulariser) => {
            2.0 * lambda * lambda * (1.0 + r * r / (lambda * lambda)).sqrt() - 2.0 * lambda * lambda
        }
        (Family::Charbonnier, Role::Shrinkage) => {
            r * (1.0 - 1.0 / (1.0 + 2.0 * r * r / (lambda * lambda)).sqrt())
        }
        (Family::Charbonnier, Role::Activation) => r / (1.0 + r * r / (lambda * lambda)).sqrt(),

        (Family::TruncatedTv, Role::Diffusivity) => {
            if inner {
                1.0
            } else {
                knee / r.abs()
            }
        }
        (Family::TruncatedTv, Role::Regulariser) => {
            if inner {
                r * r
            } else {
                2.0 * theta * (SQRT_2 * r.abs() - theta)
            }
        }
        (Family::TruncatedTv, Role::Shrinkage) => {
            if r.abs() <= theta {
                0.0
            } else {
                r - theta * r.signum()
            }
        }
        (Family::TruncatedTv, Role::Activation) => {
            if inner {
                r
            } else {
                knee * r.signum()
            }
        }

        (Family::PeronaMalik, Role::Diffusivity) => (-r * r / (2.0 * lambda * lambda)).exp(),
        (Family::PeronaMalik, Role::Regulariser) => {
            2.0 * lambda * lambda * (1.0 - (-r * r / (2.0 * lambda * lambda)).exp())
        }
        (Family::PeronaMalik, Role::Shrinkage) => r * (1.0 - (-r * r / (lambda * lambda)).exp()),
        (Family::PeronaMalik, Role::Activation) => r * (-r * r / (2.0 * lambda * lambda)).exp(),

        (Family::TruncatedBfb, Role::Diffusivity) => {
            if inner {
                1.0
            } else {
                2.0 * theta * theta / (r * r)
            }
        }
        (Family::TruncatedBfb, Role::Regulariser) => {
            if inner {
                r * r
            } else {
                2.0 * theta * theta * ((r * r / (2.0 * theta * theta)).ln() + 1.0)
            }
        }
        (Family::TruncatedBfb, Role::Shrinkage) => {
            if r.abs() <= theta {
                0.0
            } else {
                r - theta * theta / r
            }
        }
        (Family::TruncatedBfb, Role::Activation) => {
            if inner {
                r
            } else {
                2.0 * theta * theta / r
            }
        }

        (Family::TruncatedQuadratic, Role::Diffusivity) => {
            if inner {
                1.0
            } else {
                0.0
            }
        }
        (Family::TruncatedQuadratic, Role::Regulariser) => {
            if inner {
                r * r
            } else {
                2.0 * theta * theta
            }
        }
        (Family::TruncatedQuadratic, Role::Shrinkage) => {
            if r.abs() <= theta {
                0.0
            } else {
                r
            }
        }
        (Family::TruncatedQuadratic, Role::Activation) => {
            if inner {
                r
            } else {
                0.0
            }
        }
    }
}

/// Step size `tau`, regularisation weight `alpha` and grid size `h`.
///
/// Cells between shrinkage and diffusivity/activation need `tau`; cells
/// between shrinkage and regulariser need `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    tau: Option<f64>,
    alpha: Option<f64>,
    h: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            tau: Some(0.25),
            alpha: Some(0.25),
            h: 1.0,
        }
    }
}

impl CouplingParams {
    pub fn new(tau: Option<f64>, alpha: Option<f64>, h: f64) -> Result<Self> {
        let check = |name, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value: x })
            }
        };
        if let Some(t) = tau {
            check("tau", t)?;
        }
        if let Some(a) = alpha {
            check("alpha", a)?;
        }
        check("h", h)?;
        Ok(Self { tau, alpha, h })
    }

    /// `tau = alpha = t`.
    pub fn coupled(t: f64, h: f64) -> Result<Self> {
        Self::new(Some(t), Some(t), h)
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// One applied translation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationStep {
    pub from: Role,
    pub to: Role,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    ClosedForm(FamilySpec),
    UserSupplied(String),
    Translated {
        origin: Box<Provenance>,
        chain: Vec<TranslationStep>,
    },
}

impl Provenance {
    fn origin_and_chain(&self) -> (&Provenance, &[TranslationStep]) {
        match self {
            Provenance::Translated { origin, chain } => (origin, chain),
            other => (other, &[]),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ClosedForm(spec) => write!(f, "{}", spec.family),
            Provenance::UserSupplied(label) => write!(f, "user:{label}"),
            Provenance::Translated { origin, chain } => {
                write!(f, "{origin}")?;
                for step in chain {
                    write!(f, " -> {}", step.to)?;
                }
                Ok(())
            }
        }
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar nonlinearity tagged with its role.
#[derive(Clone)]
pub struct RoleFunction {
    role: Role,
    eval: Evaluator,
    provenance: Provenance,
    breakpoints: Arc<[f64]>,
}

impl fmt::Debug for RoleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RoleFunction")
            .field("role", &self.role)
            .field("provenance", &self.provenance)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl RoleFunction {
    pub fn family(spec: FamilySpec, role: Role) -> Self {
        Self {
            role,
            eval: Arc::new(move |r| eval_family(&spec, role, r)),
            provenance: Provenance::ClosedForm(spec),
            breakpoints: spec.breakpoints(role).into(),
        }
    }

    pub fn user<F>(role: Role, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            role,
            eval: Arc::new(f),
            provenance: Provenance::UserSupplied(label.into()),
            breakpoints: Arc::from([]),
        }
    }

    /// Declares the positive points where the function is not smooth, so
    /// that quadrature and differentiation can avoid straddling them.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|p| p.is_finite() && *p > 0.0);
        points.sort_by(f64::total_cmp);
        self.breakpoints = points.into();
        self
    }

    pub fn identity_activation() -> Self {
        Self::family(FamilySpec::constant(), Role::Activation)
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn expect_role(&self, expected: Role) -> Result<()> {
        if self.role == expected {
            Ok(())
        } else {
            Err(Error::WrongRole {
                expected,
                actual: self.role,
            })
        }
    }

    /// Translates into `to`; see [`translate`].
    pub fn to_role(&self, to: Role, coupling: &CouplingParams) -> Result<RoleFunction> {
        translate(self, to, coupling)
    }
}

/// Translates `f` into the role `to`.
///
/// With `r2 = sqrt(2)`, the cells are
///
/// | from \ to | g                         | Psi                                  | S                         | Phi                       |
/// |-----------|---------------------------|--------------------------------------|---------------------------|---------------------------|
/// | g         |                           | `2 int_0^r g(x) x dx`                | `r (1 - 4 tau g(r2 r))`   | `g(r) r`                  |
/// | Psi       | `Psi'(r) / 2r`            |                                      | `r - r2 alpha Psi'(r2 r)` | `Psi'(r) / 2`             |
/// | S         | `(1 - r2/r S(r/r2)) / 4tau` | `(r^2 - 2 r2 int_0^r S(x/r2) dx) / 4alpha` |                     | `(r - r2 S(r/r2)) / 4tau` |
/// | Phi       | `Phi(r) / r`              | `2 int_0^r Phi(x) dx`                |  `r - 2 r2 tau Phi(r2 r)` |                           |
pub fn translate(f: &RoleFunction, to: Role, coupling: &CouplingParams) -> Result<RoleFunction> {
    let from = f.role;
    if from == to {
        return Ok(f.clone());
    }
    let needs_tau = matches!(
        (from, to),
        (Role::Diffusivity, Role::Shrinkage)
            | (Role::Shrinkage, Role::Diffusivity)
            | (Role::Shrinkage, Role::Activation)
            | (Role::Activation, Role::Shrinkage)
    );
    let needs_alpha = matches!(
        (from, to),
        (Role::Regulariser, Role::Shrinkage) | (Role::Shrinkage, Role::Regulariser)
    );
    let tau = if needs_tau {
        Some(coupling.tau.ok_or(Error::MissingCoupling(to, "tau"))?)
    } else {
        None
    };
    let alpha = if needs_alpha {
        Some(coupling.alpha.ok_or(Error::MissingCoupling(to, "alpha"))?)
    } else {
        None
    };

    let (origin, prior) = f.provenance.origin_and_chain();
    let mut chain = prior.to_vec();
    chain.push(TranslationStep {
        from,
        to,
        tau,
        alpha,
    });
    check_chain_coupling(&chain)?;

    let src = f.eval.clone();
    let bps: Vec<f64> = f.breakpoints.to_vec();
    let scaled = |factor: f64| bps.iter().map(|b| b * factor).collect::<Vec<_>>();

    let (eval, breakpoints): (Evaluator, Vec<f64>) = match (from, to) {
        (Role::Diffusivity, Role::Regulariser) => {
            let b = bps.clone();
            (
                Arc::new(move |r| 2.0 * integrate(|x| src(x) * x, r, &b)),
                bps.clone(),
            )
        }
        (Role::Diffusivity, Role::Shrinkage) => {
            let tau = tau.unwrap();
            (
                Arc::new(move |r| r * (1.0 - 4.0 * tau * src(SQRT_2 * r))),
                scaled(1.0 / SQRT_2),
            )
        }
        (Role::Diffusivity, Role::Activation) => (Arc::new(move |r| src(r) * r), bps.clone()),

        (Role::Regulariser, Role::Diffusivity) => {
            let b = bps.clone();
            (
                Arc::new(move |r| ratio_with_limit(|x| derivative(&*src, x, &b) / 2.0, r)),
                bps.clone(),
            )
        }
        (Role::Regulariser, Role::Shrinkage) => {
            let alpha = alpha.unwrap();
            let b = bps.clone();
            (
                Arc::new(move |r| r - SQRT_2 * alpha * derivative(&*src, SQRT_2 * r, &b)),
                scaled(1.0 / SQRT_2),
            )
        }
        (Role::Regulariser, Role::Activation) => {
            let b = bps.clone();
            (
                Arc::new(move |r| derivative(&*src, r, &b) / 2.0),
                bps.clone(),
            )
        }

        (Role::Shrinkage, Role::Diffusivity) => {
            let tau = tau.unwrap();
            (
                Arc::new(move |r| {
                    let damped = ratio_with_limit(|x| SQRT_2 * src(x / SQRT_2), r);
                    (1.0 - damped) / (4.0 * tau)
                }),
                scaled(SQRT_2),
            )
        }
        (Role::Shrinkage, Role::Regulariser) => {
            let alpha = alpha.unwrap();
            let b = scaled(SQRT_2);
            (
                Arc::new(move |r| {
                    let area = integrate(|x| src(x / SQRT_2), r, &b);
                    (r * r - 2.0 * SQRT_2 * area) / (4.0 * alpha)
                }),
                scaled(SQRT_2),
            )
        }
        (Role::Shrinkage, Role::Activation) => {
            let tau = tau.unwrap();
            (
                Arc::new(move |r| (r - SQRT_2 * src(r / SQRT_2)) / (4.0 * tau)),
                scaled(SQRT_2),
            )
        }

        (Role::Activation, Role::Diffusivity) => {
            (Arc::new(move |r| ratio_with_limit(&*src, r)), bps.clone())
        }
        (Role::Activation, Role::Regulariser) => {
            let b = bps.clone();
            (
                Arc::new(move |r| 2.0 * integrate(&*src, r, &b)),
                bps.clone(),
            )
        }
        (Role::Activation, Role::Shrinkage) => {
            let tau = tau.unwrap();
            (
                Arc::new(move |r| r - 2.0 * SQRT_2 * tau * src(SQRT_2 * r)),
                scaled(1.0 / SQRT_2),
            )
        }
        _ => unreachable!("diagonal handled above"),
    };

    Ok(RoleFunction {
        role: to,
        eval,
        provenance: Provenance::Translated {
            origin: Box::new(origin.clone()),
            chain,
        },
        breakpoints: breakpoints.into(),
    })
}

fn check_chain_coupling(chain: &[TranslationStep]) -> Result<()> {
    let tau = chain.iter().find_map(|s| s.tau);
    let alpha = chain.iter().find_map(|s| s.alpha);
    if let (Some(tau), Some(alpha)) = (tau, alpha) {
        let mismatch = chain
            .iter()
            .flat_map(|s| [s.tau, s.alpha])
            .flatten()
            .any(|v| v != tau);
        if mismatch {
            return Err(Error::CouplingMismatch { tau, alpha });
        }
    }
    Ok(())
}

/// `num(r) / r` for odd `num`, replaced by the slope of `num` at zero when
/// `|r|` is below [`SINGULARITY_RADIUS`].
fn ratio_with_limit(num: impl Fn(f64) -> f64, r: f64) -> f64 {
    if r.abs() < SINGULARITY_RADIUS {
        (num(LIMIT_STEP) - num(-LIMIT_STEP)) / (2.0 * LIMIT_STEP)
    } else {
        num(r) / r
    }
}

/// Central difference with step `max(1e-6, 1e-6 |r|)`. When the stencil
/// would straddle a branch point, a second-order one-sided difference on
/// the side of `r` is used instead.
pub fn derivative(f: impl Fn(f64) -> f64, r: f64, breakpoints: &[f64]) -> f64 {
    let step = (1e-6 * r.abs()).max(1e-6);
    let a = r.abs();
    let straddled = breakpoints.iter().find(|&&b| (a - b).abs() < step);
    match straddled {
        None => (f(r + step) - f(r - step)) / (2.0 * step),
        Some(&b) => {
            // The inner branch owns the branch point itself.
            let toward_zero = a <= b;
            let outward = if r >= 0.0 { 1.0 } else { -1.0 };
            let dir = if toward_zero { -outward } else { outward };
            let d = dir * step;
            dir * (-3.0 * f(r) + 4.0 * f(r + d) - f(r + 2.0 * d)) / (2.0 * step)
        }
    }
}

/// `int_0^r f(x) dx` by composite Simpson, split at the branch points
/// (mirrored for negative `r`). Branch points that bound a piece are
/// evaluated as one-sided limits from inside that piece.
pub fn integrate(f: impl Fn(f64) -> f64, r: f64, breakpoints: &[f64]) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let sign = r.signum();
    let end = r.abs();
    let mut knots = vec![0.0];
    knots.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < end));
    knots.push(end);

    let mut total = 0.0;
    for (k, w) in knots.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let nudge = |x: f64| 1e-13 * x.abs().max(1.0);
        let left_is_branch = k > 0;
        let right_is_branch = k + 2 < knots.len();
        let lo = if left_is_branch { a + nudge(a) } else { a };
        let hi = if right_is_branch { b - nudge(b) } else { b };
        let g = |x: f64| f(sign * x);
        total += simpson(&g, a, b, lo, hi);
    }
    sign * total
}

// Composite Simpson on [a, b]; the endpoint samples are taken at lo/hi.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let n = SIMPSON_PANELS;
    let step = (b - a) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let x = a + step * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * step / 3.0
}

/// Lipschitz constant of an activation on `[-r_max, r_max]`, estimated as
/// the largest difference quotient between consecutive points of a uniform
/// grid with `samples` points.
pub fn estimate_lipschitz(f: &RoleFunction, r_max: f64, samples: usize) -> Result<f64> {
    f.expect_role(Role::Activation)?;
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r_max",
            value: r_max,
        });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
        });
    }
    let dx = 2.0 * r_max / (samples - 1) as f64;
    let mut prev_x = -r_max;
    let mut prev = f.eval(prev_x);
    let mut best: f64 = 0.0;
    for i in 1..samples {
        let x = if i + 1 == samples {
            r_max
        } else {
            -r_max + dx * i as f64
        };
        let y = f.eval(x);
        best = best.max(((y - prev) / (x - prev_x)).abs());
        prev = y;
        prev_x = x;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn family_examples() {
        assert_eq!(
            eval_family(&FamilySpec::constant(), Role::Activation, 2.0),
            2.0
        );
        let pm = FamilySpec::perona_malik(1.0).unwrap();
        assert_eq!(eval_family(&pm, Role::Diffusivity, 0.0), 1.0);
        let tv = FamilySpec::truncated_tv(1.0).unwrap();
        assert!(close(
            eval_family(&tv, Role::Activation, 3.0),
            SQRT_2,
            1e-15
        ));
        let ch = FamilySpec::charbonnier(1.0).unwrap();
        assert!(close(
            eval_family(&ch, Role::Shrinkage, 1.0),
            1.0 - 1.0 / 3f64.sqrt(),
            1e-15
        ));
        assert!(close(
            eval_family(&ch, Role::Shrinkage, 1.0),
            0.42264973,
            1e-8
        ));
    }

    #[test]
    fn inner_branch_owns_the_breakpoint() {
        let tv = FamilySpec::truncated_tv(1.0).unwrap();
        assert_eq!(eval_family(&tv, Role::Shrinkage, 1.0), 0.0);
        let hard = FamilySpec::truncated_quadratic(2.0).unwrap();
        assert_eq!(
            eval_family(&hard, Role::Activation, SQRT_2 * 2.0),
            SQRT_2 * 2.0
        );
        assert_eq!(eval_family(&hard, Role::Shrinkage, 2.0), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(FamilySpec::charbonnier(0.0).is_err());
        assert!(FamilySpec::perona_malik(f64::NAN).is_err());
        assert!(FamilySpec::truncated_tv(-1.0).is_err());
        // irrelevant parameter ignored
        assert!(FamilySpec::new(Family::Charbonnier, 2.0, -5.0).is_ok());
        assert!(FamilySpec::new(Family::Constant, f64::NAN, f64::NAN).is_ok());
    }

    #[test]
    fn parses_names() {
        for fam in Family::ALL {
            assert_eq!(fam.name().parse::<Family>().unwrap(), fam);
        }
        for role in Role::ALL {
            assert_eq!(role.name().parse::<Role>().unwrap(), role);
        }
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn zero_shrinkage_gives_unit_diffusivity() {
        let s = RoleFunction::user(Role::Shrinkage, "zero", |_| 0.0);
        let g = translate(&s, Role::Diffusivity, &CouplingParams::default()).unwrap();
        for r in [-3.0, -1e-9, 0.0, 1e-12, 0.5, 7.0] {
            assert_eq!(g.eval(r), 1.0);
        }
    }

    #[test]
    fn perona_malik_flux_from_diffusivity() {
        let lambda = 1.7;
        let g = RoleFunction::family(FamilySpec::perona_malik(lambda).unwrap(), Role::Diffusivity);
        let phi = translate(&g, Role::Activation, &CouplingParams::default()).unwrap();
        for r in [-4.0, -0.3, 0.0, 1.0, 2.5] {
            let expected = r * (-r * r / (2.0 * lambda * lambda)).exp();
            assert!(close(phi.eval(r), expected, 1e-15));
        }
    }

    #[test]
    fn truncated_tv_diffusivity_to_soft_shrinkage() {
        let theta = 0.8;
        let g = RoleFunction::family(FamilySpec::truncated_tv(theta).unwrap(), Role::Diffusivity);
        let s = translate(&g, Role::Shrinkage, &CouplingParams::default()).unwrap();
        for r in [-3.0f64, -0.81, -0.5, 0.0, 0.79, 1.2, 5.0] {
            let soft = if r.abs() <= theta {
                0.0
            } else {
                r - theta * r.signum()
            };
            assert!(close(s.eval(r), soft, 1e-14), "r={r}");
        }
    }

    #[test]
    fn round_trip_through_regulariser() {
        let phi = RoleFunction::family(FamilySpec::charbonnier(0.7).unwrap(), Role::Activation);
        let c = CouplingParams::default();
        let back = phi
            .to_role(Role::Regulariser, &c)
            .and_then(|psi| psi.to_role(Role::Activation, &c))
            .unwrap();
        for i in 0..41 {
            let r = -10.0 + 0.5 * i as f64;
            assert!(close(back.eval(r), phi.eval(r), 1e-6), "r={r}");
        }
    }

    #[test]
    fn missing_and_mismatched_coupling() {
        let g = RoleFunction::family(FamilySpec::constant(), Role::Diffusivity);
        let no_tau = CouplingParams::new(None, Some(0.25), 1.0).unwrap();
        assert_eq!(
            translate(&g, Role::Shrinkage, &no_tau).unwrap_err(),
            Error::MissingCoupling(Role::Shrinkage, "tau")
        );
        // g -> Psi needs no constant
        assert!(translate(&g, Role::Regulariser, &no_tau).is_ok());

        let split = CouplingParams::new(Some(0.25), Some(0.5), 1.0).unwrap();
        let s = translate(&g, Role::Shrinkage, &split).unwrap();
        assert!(matches!(
            translate(&s, Role::Regulariser, &split),
            Err(Error::CouplingMismatch { .. })
        ));
        assert!(CouplingParams::new(Some(-1.0), None, 1.0).is_err());
    }

    #[test]
    fn provenance_records_chain() {
        let g = RoleFunction::family(FamilySpec::perona_malik(1.0).unwrap(), Role::Diffusivity);
        let c = CouplingParams::default();
        let psi = g
            .to_role(Role::Shrinkage, &c)
            .and_then(|s| s.to_role(Role::Regulariser, &c))
            .unwrap();
        match psi.provenance() {
            Provenance::Translated { origin, chain } => {
                assert!(matches!(**origin, Provenance::ClosedForm(_)));
                assert_eq!(chain.len(), 2);
                assert_eq!(chain[0].tau, Some(0.25));
                assert_eq!(chain[1].alpha, Some(0.25));
            }
            other => panic!("unexpected provenance {other:?}"),
        }
        assert_eq!(
            psi.provenance().to_string(),
            "perona-malik -> shrinkage -> regulariser"
        );
    }

    #[test]
    fn lipschitz_examples() {
        let id = RoleFunction::identity_activation();
        assert!(close(estimate_lipschitz(&id, 3.0, 11).unwrap(), 1.0, 1e-15));
        let tv = RoleFunction::family(FamilySpec::truncated_tv(1.0).unwrap(), Role::Activation);
        assert!(close(
            estimate_lipschitz(&tv, 10.0, 10_001).unwrap(),
            1.0,
            1e-12
        ));
        let g = RoleFunction::family(FamilySpec::constant(), Role::Diffusivity);
        assert!(matches!(
            estimate_lipschitz(&g, 1.0, 10),
            Err(Error::WrongRole { .. })
        ));
        assert!(estimate_lipschitz(&id, 0.0, 10).is_err());
        assert!(estimate_lipschitz(&id, 1.0, 1).is_err());
    }

    #[test]
    fn perona_malik_lipschitz_against_dense_derivative() {
        // independent oracle: sup of the analytic derivative on a dense grid
        let oracle = (0..=1_000_000)
            .map(|i| -10.0 + 20.0 * i as f64 / 1e6)
            .map(|r: f64| ((-r * r / 2.0).exp() * (1.0 - r * r)).abs())
            .fold(0.0, f64::max);
        assert!(close(oracle, 1.0, 1e-12));
        let pm = RoleFunction::family(FamilySpec::perona_malik(1.0).unwrap(), Role::Activation);
        let est = estimate_lipschitz(&pm, 10.0, 1_000_000).unwrap();
        assert!(close(est, oracle, 1e-4));
    }

    #[test]
    fn quadrature_handles_jumps() {
        // hard-threshold flux: integral is r^2/2 inside, constant outside
        let bp = [SQRT_2];
        let flux = |x: f64| if x.abs() <= SQRT_2 { x } else { 0.0 };
        assert!(close(integrate(flux, 5.0, &bp), 1.0, 1e-12));
        // odd integrand, even integral
        assert!(close(integrate(flux, -5.0, &bp), 1.0, 1e-12));
        assert!(close(integrate(flux, 1.0, &bp), 0.5, 1e-12));
        assert_eq!(integrate(flux, 0.0, &bp), 0.0);
    }

    #[test]
    fn one_sided_derivative_near_kink() {
        let bp = [1.0];
        let huber_like = |x: f64| {
            if x.abs() <= 1.0 {
                x * x
            } else {
                2.0 * x.abs() - 1.0
            }
        };
        assert!(close(derivative(huber_like, 1.0, &bp), 2.0, 1e-8));
        assert!(close(derivative(huber_like, 1.0 + 1e-7, &bp), 2.0, 1e-8));
        assert!(close(
            derivative(huber_like, -1.0 + 1e-7, &bp),
            -2.0 + 2e-7,
            1e-8
        ));
        let jump = |x: f64| if x.abs() <= 1.0 { x * x } else { 2.0 };
        assert!(close(derivative(jump, 1.0 + 1e-7, &bp), 0.0, 1e-8));
        assert!(close(derivative(jump, -1.0, &bp), -2.0, 1e-8));
    }
}
