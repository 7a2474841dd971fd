//! Empirical checks of the maximum-minimum principle and of sign stability.

use std::fmt::Write as _;

use crate::dictionary::{Role, RoleFunction};
use crate::diffusion::{local_lipschitz, max_stable_tau, step_values, StabilityMode};
use crate::error::{Error, Result};
use crate::signal::Signal1D;

/// Tolerance for range checks in long chains.
pub const DEFAULT_SLACK: f64 = 1e-12;

/// Sign alternations between consecutive nonzero samples. Zeros are
/// dropped before counting.
pub fn count_sign_changes(u: &Signal1D) -> usize {
    count_sign_changes_in(u.values())
}

pub(crate) fn count_sign_changes_in(v: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for &x in v.iter().filter(|x| **x != 0.0) {
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = x;
    }
    changes
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeCheck {
    pub ok: bool,
    /// Largest distance by which any sample left `[min f, max f]`; zero if
    /// none did.
    pub worst_overshoot: f64,
}

pub fn check_range_preservation(
    f: &Signal1D,
    trajectory: &[Signal1D],
    slack: f64,
) -> Result<RangeCheck> {
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    for state in trajectory {
        f.ensure_same_shape(state)?;
    }
    let (lo, hi) = (f.min(), f.max());
    let worst = trajectory
        .iter()
        .flat_map(|s| s.values())
        .map(|&v| (lo - v).max(v - hi).max(0.0))
        .fold(0.0, f64::max);
    Ok(RangeCheck {
        ok: worst <= slack,
        worst_overshoot: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub lipschitz: f64,
    pub tau: f64,
    pub tau_maxmin: f64,
    pub tau_sign: f64,
    pub steps: usize,
    pub range_ok: bool,
    pub worst_overshoot: f64,
    /// `(before, after)` sign-change counts for every step.
    pub sign_changes: Vec<(usize, usize)>,
    /// Steps (1-based) at which the sign-change count went up.
    pub sign_increases: Vec<usize>,
    /// Samples outside `[min f, max f]` by more than the slack.
    pub violations: Vec<Violation>,
}

impl StabilityReport {
    pub fn sign_changes_input(&self) -> usize {
        self.sign_changes.first().map_or(0, |p| p.0)
    }

    pub fn sign_changes_output(&self) -> usize {
        self.sign_changes.last().map_or(0, |p| p.1)
    }

    /// No step increased the sign-change count.
    pub fn sign_stable_per_step(&self) -> bool {
        self.sign_increases.is_empty()
    }

    /// The output has no more sign changes than the input.
    pub fn sign_stable_overall(&self) -> bool {
        self.sign_changes_output() <= self.sign_changes_input()
    }

    pub fn within_maxmin_bound(&self) -> bool {
        self.tau <= self.tau_maxmin
    }

    pub fn within_sign_bound(&self) -> bool {
        self.tau <= self.tau_sign
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("lipschitz", format!("{:e}", self.lipschitz));
        kv("tau", format!("{:e}", self.tau));
        kv("tau_maxmin", format!("{:e}", self.tau_maxmin));
        kv("tau_sign", format!("{:e}", self.tau_sign));
        kv("steps", self.steps.to_string());
        kv(
            "within_maxmin_bound",
            self.within_maxmin_bound().to_string(),
        );
        kv("within_sign_bound", self.within_sign_bound().to_string());
        kv("range_ok", self.range_ok.to_string());
        kv("worst_overshoot", format!("{:e}", self.worst_overshoot));
        kv("sign_changes_in", self.sign_changes_input().to_string());
        kv("sign_changes_out", self.sign_changes_output().to_string());
        kv(
            "sign_stable_per_step",
            self.sign_stable_per_step().to_string(),
        );
        kv(
            "sign_stable_overall",
            self.sign_stable_overall().to_string(),
        );
        let increases: Vec<String> = self.sign_increases.iter().map(|s| s.to_string()).collect();
        kv("sign_increase_steps", increases.join(","));
        kv("violations", self.violations.len().to_string());
        if let Some(v) = self.violations.first() {
            kv(
                "first_violation",
                format!("step={} index={} value={:e}", v.step, v.index, v.value),
            );
        }
        out
    }
}

/// Runs `steps` explicit steps of size `tau` and records range and
/// sign-change diagnostics after each one.
pub fn analyze(
    f: &Signal1D,
    phi: &RoleFunction,
    tau: f64,
    steps: usize,
) -> Result<StabilityReport> {
    analyze_with_slack(f, phi, tau, steps, DEFAULT_SLACK)
}

pub fn analyze_with_slack(
    f: &Signal1D,
    phi: &RoleFunction,
    tau: f64,
    steps: usize,
    slack: f64,
) -> Result<StabilityReport> {
    phi.expect_role(Role::Activation)?;
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
        });
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    let lipschitz = local_lipschitz(f, phi)?;
    let (tau_maxmin, tau_sign) = if lipschitz > 0.0 {
        (
            max_stable_tau(lipschitz, f.h(), StabilityMode::MaxMin)?,
            max_stable_tau(lipschitz, f.h(), StabilityMode::SignStable)?,
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    let (lo, hi) = (f.min(), f.max());
    let mut u = f.values().to_vec();
    let mut sign_changes = Vec::with_capacity(steps);
    let mut sign_increases = Vec::new();
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for step in 1..=steps {
        let before = count_sign_changes_in(&u);
        u = step_values(&u, phi, tau, f.h());
        let after = count_sign_changes_in(&u);
        sign_changes.push((before, after));
        if after > before {
            sign_increases.push(step);
        }
        for (index, &value) in u.iter().enumerate() {
            let excess = (lo - value).max(value - hi);
            // NaN compares false, so record it explicitly
            if excess > slack || !value.is_finite() {
                violations.push(Violation { step, index, value });
            }
            if excess.is_finite() {
                worst = worst.max(excess);
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(StabilityReport {
        lipschitz,
        tau,
        tau_maxmin,
        tau_sign,
        steps,
        range_ok: violations.is_empty(),
        worst_overshoot: worst,
        sign_changes,
        sign_increases,
        violations,
    })
}
