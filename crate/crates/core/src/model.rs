//! Parameters, states and recorded trajectories.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Thinning,
    Graphical,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "thinning" => Ok(Self::Thinning),
            "graphical" => Ok(Self::Graphical),
            other => Err(format!("unknown engine `{other}` (expected thinning or graphical)")),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Thinning => "thinning",
            Self::Graphical => "graphical",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    #[default]
    None,
    Dissociation,
    Drift,
    BindingMeasure,
}

/// Binding measure in gap coordinates: Lebesgue density `density` on
/// `[0, X − R]` plus an atom of mass `mass` at the pore (gap `X − R`).
///
/// The jump clock runs at `γ·(density·(X − R) + mass)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BindingMeasure<T> {
    Lebesgue,
    DeltaAtPore { mass: T },
    Mixture { density: T, mass: T },
}

impl<T: Real> Default for BindingMeasure<T> {
    fn default() -> Self {
        Self::Lebesgue
    }
}

impl<T: Real> BindingMeasure<T> {
    /// `(density, mass)`.
    pub fn weights(&self) -> (T, T) {
        match *self {
            Self::Lebesgue => (T::one(), T::zero()),
            Self::DeltaAtPore { mass } => (T::zero(), mass),
            Self::Mixture { density, mass } => (density, mass),
        }
    }
}

/// Where newly bound molecules land in the dissociation variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BindingWindow {
    /// Uniform on `[0, X]`.
    #[default]
    Full,
    /// Uniform on `[R, X]`; with no dissociation this is the base ratchet.
    AboveBoundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct VariantSpec<T> {
    pub kind: VariantKind,
    /// Per-molecule unbinding rate.
    pub dissociation_rate: T,
    pub drift: T,
    pub binding: BindingMeasure<T>,
    pub window: BindingWindow,
}

impl<T: Real> Default for VariantSpec<T> {
    fn default() -> Self {
        Self {
            kind: VariantKind::None,
            dissociation_rate: T::zero(),
            drift: T::zero(),
            binding: BindingMeasure::Lebesgue,
            window: BindingWindow::Full,
        }
    }
}

impl<T: Real> VariantSpec<T> {
    pub fn dissociation(rate: T, window: BindingWindow) -> Self {
        Self {
            kind: VariantKind::Dissociation,
            dissociation_rate: rate,
            window,
            ..Self::default()
        }
    }

    pub fn drift(drift: T) -> Self {
        Self {
            kind: VariantKind::Drift,
            drift,
            ..Self::default()
        }
    }

    pub fn binding(binding: BindingMeasure<T>) -> Self {
        Self {
            kind: VariantKind::BindingMeasure,
            binding,
            ..Self::default()
        }
    }

    /// Drift actually applied (zero unless `kind` is `Drift`).
    pub fn effective_drift(&self) -> T {
        if self.kind == VariantKind::Drift {
            self.drift
        } else {
            T::zero()
        }
    }

    /// Binding weights actually applied.
    pub fn effective_binding(&self) -> (T, T) {
        if self.kind == VariantKind::BindingMeasure {
            self.binding.weights()
        } else {
            (T::one(), T::zero())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RatchetParams<T> {
    pub gamma: T,
    pub t_max: T,
    pub dt: T,
    pub x0: T,
    pub engine: EngineKind,
    pub variant: VariantSpec<T>,
    pub seed: u64,
    pub replicas: usize,
    /// Record every `stride`-th grid state (jump times are always recorded).
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl<T: Real> RatchetParams<T> {
    pub fn new(gamma: T, t_max: T, dt: T) -> Self {
        Self {
            gamma,
            t_max,
            dt,
            x0: T::zero(),
            engine: EngineKind::Thinning,
            variant: VariantSpec::default(),
            seed: 0,
            replicas: 1,
            stride: 1,
        }
    }

    pub fn with_engine(mut self, engine: EngineKind) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn with_x0(mut self, x0: T) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_variant(mut self, variant: VariantSpec<T>) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Number of grid steps; the last grid time is `steps()·dt ≈ t_max`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Largest step size not flagged by [`validate`].
    pub fn dt_warning_threshold(&self) -> T {
        T::lit(0.01) * self.gamma.powf(T::lit(-2.0 / 3.0))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            f.write_str("ok")?;
        } else {
            f.write_str(&self.violations.join("; "))?;
        }
        if !self.warnings.is_empty() {
            write!(f, " (warnings: {})", self.warnings.join("; "))?;
        }
        Ok(())
    }
}

/// Check `params`; coarse steps only produce a warning.
pub fn validate<T: Real>(params: &RatchetParams<T>) -> ValidationReport {
    let mut v = Vec::new();
    let mut w = Vec::new();
    let mut positive = |name: &str, x: T| {
        if !(x.is_finite() && x > T::zero()) {
            v.push(format!("{name} must be positive"));
            false
        } else {
            true
        }
    };
    let gamma_ok = positive("gamma", params.gamma);
    let dt_ok = positive("dt", params.dt);
    let t_ok = positive("t_max", params.t_max);
    if dt_ok && t_ok && params.dt >= params.t_max {
        v.push("dt must be smaller than t_max".into());
    }
    if !(params.x0.is_finite() && params.x0 >= T::zero()) {
        v.push("x0 must be non-negative".into());
    }
    if params.replicas == 0 {
        v.push("replicas must be at least 1".into());
    }
    if params.stride == 0 {
        v.push("stride must be at least 1".into());
    }
    let var = &params.variant;
    match var.kind {
        VariantKind::Dissociation => {
            if !(var.dissociation_rate.is_finite() && var.dissociation_rate >= T::zero()) {
                v.push("dissociation_rate must be non-negative".into());
            }
        }
        VariantKind::Drift => {
            if !var.drift.is_finite() {
                v.push("drift must be finite".into());
            }
        }
        VariantKind::BindingMeasure => {
            let (a, b) = var.binding.weights();
            let ok = |x: T| x.is_finite() && x >= T::zero();
            if !(ok(a) && ok(b)) || a + b <= T::zero() {
                v.push("binding weights must be non-negative and not both zero".into());
            }
        }
        VariantKind::None => {}
    }
    if var.kind != VariantKind::None && params.engine == EngineKind::Graphical {
        v.push("variants are simulated with the thinning engine only".into());
    }
    if gamma_ok && dt_ok && params.dt > params.dt_warning_threshold() {
        w.push(format!(
            "dt = {} exceeds 0.01·gamma^(-2/3) = {:.3e}",
            params.dt,
            params.dt_warning_threshold().as_f64()
        ));
    }
    ValidationReport {
        violations: v,
        warnings: w,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RatchetState<T> {
    pub t: T,
    pub x: T,
    pub r: T,
}

impl<T: Real> RatchetState<T> {
    pub fn gap(&self) -> T {
        self.x - self.r
    }
}

/// One boundary jump at time `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent<T> {
    pub tau: T,
    pub x_pre: T,
    pub r_pre: T,
    pub r_post: T,
}

/// A step during which `X` met `R`; `r` is the boundary at that moment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Touch<T> {
    pub t: T,
    pub r: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T> {
    pub params: RatchetParams<T>,
    pub samples: Vec<RatchetState<T>>,
    pub jumps: Vec<JumpEvent<T>>,
    /// Boundary contacts flagged by the engine; empty for loaded CSVs.
    #[serde(default)]
    pub touches: Vec<Touch<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> Option<&RatchetState<T>> {
        self.samples.last()
    }

    /// `X` at the end of the run.
    pub fn final_x(&self) -> T {
        self.samples.last().map_or(self.params.x0, |s| s.x)
    }
}

/// Map a rate-γ trajectory started at 0 to the rate-`gamma_to` ratchet:
/// with `s = gamma_to/γ`, times scale by `s^{-2/3}` and lengths by `s^{-1/3}`.
pub fn rescale_trajectory<T: Real>(traj: &Trajectory<T>, gamma_to: T) -> Result<Trajectory<T>> {
    check_positive("gamma_to", gamma_to)?;
    if traj.params.x0 != T::zero() {
        return Err(Error::NonZeroStart {
            x0: traj.params.x0.as_f64(),
        });
    }
    let s = gamma_to / traj.params.gamma;
    let len = s.cbrt().recip();
    let time = len * len;
    let mut params = traj.params.clone();
    params.gamma = gamma_to;
    params.t_max = params.t_max * time;
    params.dt = params.dt * time;
    Ok(Trajectory {
        params,
        samples: traj
            .samples
            .iter()
            .map(|p| RatchetState {
                t: p.t * time,
                x: p.x * len,
                r: p.r * len,
            })
            .collect(),
        jumps: traj
            .jumps
            .iter()
            .map(|j| JumpEvent {
                tau: j.tau * time,
                x_pre: j.x_pre * len,
                r_pre: j.r_pre * len,
                r_post: j.r_post * len,
            })
            .collect(),
        touches: traj
            .touches
            .iter()
            .map(|c| Touch {
                t: c.t * time,
                r: c.r * len,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RatchetParams<f64> {
        RatchetParams::new(1.0, 100.0, 1e-3)
    }

    #[test]
    fn validation_examples() {
        let ok = validate(&base());
        assert!(ok.is_ok() && ok.warnings.is_empty());

        let mut p = base();
        p.dt = 0.0;
        let r = validate(&p);
        assert!(r.violations.iter().any(|m| m == "dt must be positive"));

        let mut p = base();
        p.gamma = 100.0;
        p.dt = 0.01;
        let r = validate(&p);
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);
        assert!((p.dt_warning_threshold() - 4.641_588_833_612_779e-4).abs() < 1e-15);
    }

    #[test]
    fn validation_collects_all_violations() {
        let mut p = base();
        p.gamma = -1.0;
        p.x0 = f64::NAN;
        p.replicas = 0;
        p.t_max = 1e-4;
        let r = validate(&p);
        assert_eq!(r.violations.len(), 4, "{r}");
        assert!(matches!(r.into_result(), Err(Error::InvalidParams(_))));
    }

    fn toy() -> Trajectory<f64> {
        Trajectory {
            params: RatchetParams::new(1.0, 8.0, 0.5),
            samples: vec![
                RatchetState { t: 0.0, x: 0.0, r: 0.0 },
                RatchetState { t: 8.0, x: 2.0, r: 1.0 },
            ],
            jumps: vec![JumpEvent { tau: 4.0, x_pre: 1.5, r_pre: 0.0, r_post: 1.0 }],
            touches: vec![Touch { t: 0.0, r: 0.0 }],
        }
    }

    #[test]
    fn rescale_worked_example() {
        let out = rescale_trajectory(&toy(), 8.0).unwrap();
        let s = out.samples[1];
        assert!((s.t - 2.0).abs() < 1e-14);
        assert!((s.x - 1.0).abs() < 1e-15);
        assert!((s.r - 0.5).abs() < 1e-15);
        assert_eq!(out.params.gamma, 8.0);
        assert!((out.params.dt - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rescale_identity_and_round_trip() {
        let t = toy();
        assert_eq!(rescale_trajectory(&t, 1.0).unwrap(), t);
        let back = rescale_trajectory(&rescale_trajectory(&t, 3.7).unwrap(), 1.0).unwrap();
        for (a, b) in back.samples.iter().zip(&t.samples) {
            assert!((a.t - b.t).abs() < 1e-12 && (a.x - b.x).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_requires_zero_start() {
        let mut t = toy();
        t.params.x0 = 0.5;
        assert!(matches!(
            rescale_trajectory(&t, 2.0),
            Err(Error::NonZeroStart { .. })
        ));
    }

    #[test]
    fn engine_names_round_trip() {
        for e in [EngineKind::Thinning, EngineKind::Graphical] {
            assert_eq!(e.to_string().parse::<EngineKind>().unwrap(), e);
        }
        assert!("euler".parse::<EngineKind>().is_err());
    }
}
