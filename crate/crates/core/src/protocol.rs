//! Drive schedules for the two-level work protocol, the counter-diabatic
//! correction and the adiabatic parameter.
//!
//! The bare Hamiltonian is `Z·S_z + X(t)·S_x` (kHz). The counter-diabatic
//! variant adds `Y(t)·S_y` with `2π·Y(t) = Z·Ẋ(t)/(X(t)² + Z²)`, which is the
//! rotation rate of the instantaneous eigenbasis. `Y` vanishes whenever `Ẋ`
//! does, so for the cosine ramp both variants share their endpoint
//! Hamiltonians and therefore their two-point-measurement bases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, spin_x, spin_y, spin_z, HamiltonianPath, HermitianOperator};

/// Longitudinal field of the reference protocol, `5/√3` kHz.
pub fn reference_z() -> f64 {
    5.0 / 3f64.sqrt()
}

/// Final transverse field of the reference protocol, kHz.
pub const REFERENCE_X_MAX: f64 = 5.0;

/// Grid used to locate the maximum of the adiabaticity ratio.
pub const DEFAULT_GAMMA_SAMPLES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveKind {
    Bare,
    CounterDiabatic,
}

impl DriveKind {
    pub fn label(self) -> &'static str {
        match self {
            DriveKind::Bare => "bare",
            DriveKind::CounterDiabatic => "cd",
        }
    }
}

/// Shape of `X(t)/x_max` as a function of `s = t/τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// `(1 − cos(π s))/2`
    CosineRamp,
    /// Linear interpolation between `(s, fraction)` knots. The first knot must
    /// sit at `s = 0`, the last at `s = 1`, and `s` must strictly increase.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if let Schedule::PiecewiseLinear { knots } = self {
            if knots.len() < 2 {
                return Err(Error::invalid("schedule.knots", "need at least two knots"));
            }
            if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                return Err(Error::invalid(
                    "schedule.knots",
                    "knots must start at s = 0 and end at s = 1",
                ));
            }
            if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::invalid(
                    "schedule.knots",
                    "knot positions must strictly increase",
                ));
            }
            if knots.iter().any(|k| !k.1.is_finite()) {
                return Err(Error::invalid("schedule.knots", "knot values must be finite"));
            }
        }
        Ok(())
    }

    /// Shape value and its derivative with respect to `s`.
    fn shape(&self, s: f64) -> (f64, f64) {
        match self {
            Schedule::CosineRamp => ((1.0 - (PI * s).cos()) / 2.0, PI * (PI * s).sin() / 2.0),
            Schedule::PiecewiseLinear { knots } => {
                let seg = knots.windows(2).position(|w| s < w[1].0).unwrap_or(knots.len() - 2);
                let (s0, f0) = knots[seg];
                let (s1, f1) = knots[seg + 1];
                let slope = (f1 - f0) / (s1 - s0);
                (f0 + slope * (s - s0), slope)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveProtocol {
    z: f64,
    x_max: f64,
    tau: f64,
    kind: DriveKind,
    schedule: Schedule,
}

impl DriveProtocol {
    pub fn new(z: f64, x_max: f64, tau: f64, kind: DriveKind, schedule: Schedule) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid("z", format!("must be positive and finite, got {z}")));
        }
        if !x_max.is_finite() {
            return Err(Error::invalid("x_max", "must be finite"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be positive and finite, got {tau}")));
        }
        schedule.validate()?;
        Ok(Self {
            z,
            x_max,
            tau,
            kind,
            schedule,
        })
    }

    /// Cosine ramp with `Z = 5/√3` kHz and `X(τ) = 5` kHz.
    pub fn reference(tau: f64, kind: DriveKind) -> Result<Self> {
        Self::new(reference_z(), REFERENCE_X_MAX, tau, kind, Schedule::CosineRamp)
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> DriveKind {
        self.kind
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn with_kind(&self, kind: DriveKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.z, self.x_max, tau, self.kind, self.schedule.clone())
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(Error::TimeOutOfRange { t, tau: self.tau });
        }
        Ok(t / self.tau)
    }

    /// Transverse field `X(t)` in kHz.
    pub fn x_schedule(&self, t: f64) -> Result<f64> {
        let s = self.check_time(t)?;
        Ok(self.x_max * self.schedule.shape(s).0)
    }

    /// `Ẋ(t)` in kHz/ms.
    pub fn x_rate(&self, t: f64) -> Result<f64> {
        let s = self.check_time(t)?;
        Ok(self.x_max * self.schedule.shape(s).1 / self.tau)
    }

    /// Counter-diabatic amplitude `Y(t)` in kHz. Zero for bare protocols.
    pub fn y_field(&self, t: f64) -> Result<f64> {
        match self.kind {
            DriveKind::Bare => {
                self.check_time(t)?;
                Ok(0.0)
            }
            DriveKind::CounterDiabatic => {
                let x = self.x_schedule(t)?;
                let xdot = self.x_rate(t)?;
                Ok(self.z * xdot / (2.0 * PI * (x * x + self.z * self.z)))
            }
        }
    }

    /// `θ(t) = arctan(X(t)/Z)`.
    pub fn mixing_angle(&self, t: f64) -> Result<f64> {
        Ok(self.x_schedule(t)?.atan2(self.z))
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        let x = self.x_schedule(t)?;
        let y = self.y_field(t)?;
        HermitianOperator::linear_combination(&[(self.z, &spin_z()), (x, &spin_x()), (y, &spin_y())])
    }

    /// `∂H/∂t` of the bare path, kHz/ms.
    pub fn bare_hamiltonian_rate(&self, t: f64) -> Result<HermitianOperator> {
        HermitianOperator::linear_combination(&[(self.x_rate(t)?, &spin_x())])
    }

    pub fn endpoint_hamiltonians(&self) -> Result<(HermitianOperator, HermitianOperator)> {
        Ok((self.hamiltonian_at(0.0)?, self.hamiltonian_at(self.tau)?))
    }

    /// Largest instantaneous eigenvalue spread over a uniform time grid, kHz.
    pub fn max_gap(&self) -> Result<f64> {
        const PROBES: usize = 257;
        let mut worst = 0.0f64;
        for k in 0..PROBES {
            let t = self.tau * k as f64 / (PROBES - 1) as f64;
            worst = worst.max(eigendecompose(&self.hamiltonian_at(t)?).spread());
        }
        Ok(worst)
    }

    /// `max(2000, ⌈400·τ·f_max⌉)` midpoint steps.
    pub fn default_steps(&self) -> Result<usize> {
        let by_rate = (400.0 * self.tau * self.max_gap()?).ceil() as usize;
        Ok(by_rate.max(2000))
    }

    /// Adiabaticity ratio `|⟨E_0|∂H/∂t|E_1⟩|/(E_1 − E_0)²` at `t`, with the
    /// Hamiltonian taken in angular-frequency units.
    pub fn adiabaticity_ratio(&self, t: f64) -> Result<f64> {
        let es = eigendecompose(&self.with_kind(DriveKind::Bare).hamiltonian_at(t)?);
        let rate = self.bare_hamiltonian_rate(t)?;
        let lower = es.vector(0);
        let upper = es.vector(1);
        let coupling: num_complex::Complex64 = lower
            .iter()
            .zip(rate.matrix().apply(&upper))
            .map(|(a, b)| a.conj() * b)
            .sum();
        let gap = es.values[1] - es.values[0];
        // (2π·coupling) / (2π·gap)²
        Ok(coupling.norm() / (2.0 * PI * gap * gap))
    }

    /// Maximum of the adiabaticity ratio over `[0, τ]`.
    ///
    /// The ratio is sampled on `n_samples` uniform points and the best grid
    /// point is polished by golden-section search on its neighbouring cells.
    pub fn adiabatic_parameter(&self, n_samples: usize) -> Result<AdiabaticityReport> {
        if n_samples < 100 {
            return Err(Error::invalid(
                "n_samples",
                format!("must be at least 100, got {n_samples}"),
            ));
        }
        if self.kind != DriveKind::Bare {
            return Err(Error::invalid(
                "kind",
                "adiabatic parameter is defined for the bare protocol",
            ));
        }
        let mut samples = Vec::with_capacity(n_samples + 1);
        for k in 0..n_samples {
            let t = self.tau * k as f64 / (n_samples - 1) as f64;
            samples.push((t, self.adiabaticity_ratio(t)?));
        }
        let best = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .expect("n_samples >= 100");
        let lo = samples[best.saturating_sub(1)].0;
        let hi = samples[(best + 1).min(n_samples - 1)].0;
        let (t_star, r_star) = golden_section_max(lo, hi, |t| self.adiabaticity_ratio(t))?;
        if r_star > samples[best].1 {
            let at = samples.partition_point(|&(t, _)| t < t_star);
            samples.insert(at, (t_star, r_star));
        }
        let (argmax_time, gamma) = samples
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        Ok(AdiabaticityReport {
            gamma,
            argmax_time,
            samples,
        })
    }

    /// `(t, Z, X(t), Y(t))` on `n_points` uniform times.
    pub fn waveform(&self, n_points: usize) -> Result<Vec<WaveformSample>> {
        if n_points < 2 {
            return Err(Error::invalid("n_points", "need at least two points"));
        }
        (0..n_points)
            .map(|k| {
                let t = self.tau * k as f64 / (n_points - 1) as f64;
                Ok(WaveformSample {
                    t,
                    z: self.z,
                    x: self.x_schedule(t)?,
                    y: self.y_field(t)?,
                })
            })
            .collect()
    }
}

impl HamiltonianPath for DriveProtocol {
    fn duration(&self) -> f64 {
        self.tau
    }

    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        DriveProtocol::hamiltonian_at(self, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityReport {
    pub gamma: f64,
    /// ms
    pub argmax_time: f64,
    /// `(t, ratio)` in increasing `t`.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSample {
    pub t: f64,
    pub z: f64,
    pub x: f64,
    pub y: f64,
}

fn golden_section_max<F>(mut a: f64, mut b: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_ratio(p: &DriveProtocol, t: f64) -> f64 {
        let x = p.x_schedule(t).unwrap();
        let xdot = p.x_rate(t).unwrap();
        p.z() * xdot / (4.0 * PI * (p.z().powi(2) + x * x).powf(1.5))
    }

    #[test]
    fn cosine_schedule_values() {
        let p = DriveProtocol::reference(0.05, DriveKind::Bare).unwrap();
        assert_eq!(p.x_schedule(0.0).unwrap(), 0.0);
        assert!((p.x_schedule(0.05).unwrap() - 5.0).abs() < 1e-15);
        assert!((p.x_schedule(0.025).unwrap() - 2.5).abs() < 1e-14);
        assert!((p.x_rate(0.025).unwrap() - 5.0 * PI / (2.0 * 0.05)).abs() < 1e-10);
        assert!(matches!(p.x_schedule(0.051), Err(Error::TimeOutOfRange { .. })));
        assert!(p.x_schedule(-1e-9).is_err());
    }

    #[test]
    fn rate_matches_finite_difference() {
        let p = DriveProtocol::reference(0.3, DriveKind::Bare).unwrap();
        let h = 1e-7;
        for t in [0.01, 0.1, 0.2, 0.29] {
            let fd = (p.x_schedule(t + h).unwrap() - p.x_schedule(t - h).unwrap()) / (2.0 * h);
            assert!((fd - p.x_rate(t).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn bare_start_is_pure_longitudinal() {
        let p = DriveProtocol::reference(0.8, DriveKind::Bare).unwrap();
        let es = eigendecompose(&p.hamiltonian_at(0.0).unwrap());
        assert!((es.spread() - 2.8868).abs() < 1e-4);
        assert!((es.spread() - reference_z()).abs() < 1e-13);
    }

    #[test]
    fn counter_diabatic_amplitude_at_midpoint() {
        let p = DriveProtocol::reference(0.05, DriveKind::CounterDiabatic).unwrap();
        let y = p.y_field(0.025).unwrap();
        let z = reference_z();
        let xdot = 5.0 * PI / (2.0 * 0.05);
        let expect = z * xdot / (2.0 * PI * (6.25 + z * z));
        assert!((y - expect).abs() < 1e-12);
        assert!((y - 4.949).abs() < 1e-3);
    }

    #[test]
    fn endpoints_coincide_for_both_kinds() {
        for tau in [0.05, 0.1, 0.2, 0.3, 0.8] {
            let bare = DriveProtocol::reference(tau, DriveKind::Bare).unwrap();
            let cd = bare.with_kind(DriveKind::CounterDiabatic);
            for t in [0.0, tau] {
                let d = bare
                    .hamiltonian_at(t)
                    .unwrap()
                    .matrix()
                    .sub(cd.hamiltonian_at(t).unwrap().matrix());
                assert!(d.max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mixing_angle_values() {
        let p = DriveProtocol::reference(0.2, DriveKind::Bare).unwrap();
        assert_eq!(p.mixing_angle(0.0).unwrap(), 0.0);
        assert!((p.mixing_angle(0.2).unwrap() - PI / 3.0).abs() < 1e-14);
        let q = DriveProtocol::new(2.0, 4.0, 1.0, DriveKind::Bare, Schedule::CosineRamp).unwrap();
        assert!((q.mixing_angle(0.5).unwrap() - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn mixing_angle_eigenvectors() {
        // Lower eigenvector is cos(θ/2)|0⟩ − sin(θ/2)|1⟩ with S_z = diag(−½, ½).
        let p = DriveProtocol::reference(0.1, DriveKind::Bare).unwrap();
        for t in [0.0, 0.03, 0.07, 0.1] {
            let theta = p.mixing_angle(t).unwrap();
            let v = eigendecompose(&p.hamiltonian_at(t).unwrap()).vector(0);
            let overlap = (v[0].conj() * (theta / 2.0).cos() - v[1].conj() * (theta / 2.0).sin()).norm();
            assert!((overlap - 1.0).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn adiabaticity_ratio_matches_closed_form() {
        let p = DriveProtocol::reference(0.05, DriveKind::Bare).unwrap();
        for k in 0..=20 {
            let t = 0.05 * k as f64 / 20.0;
            assert!((p.adiabaticity_ratio(t).unwrap() - closed_form_ratio(&p, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_reference_values() {
        let short = DriveProtocol::reference(0.05, DriveKind::Bare).unwrap();
        let long = DriveProtocol::reference(0.8, DriveKind::Bare).unwrap();
        let g_short = short.adiabatic_parameter(DEFAULT_GAMMA_SAMPLES).unwrap();
        let g_long = long.adiabatic_parameter(DEFAULT_GAMMA_SAMPLES).unwrap();
        assert!((g_short.gamma / 1.014 - 1.0).abs() < 0.01);
        assert!((g_long.gamma / 0.063 - 1.0).abs() < 0.01);
        let max_sample = g_short.samples.iter().map(|s| s.1).fold(0.0, f64::max);
        assert_eq!(max_sample, g_short.gamma);
        assert!(g_short.samples.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn gamma_scales_inversely_with_duration() {
        let g = |tau| {
            DriveProtocol::reference(tau, DriveKind::Bare)
                .unwrap()
                .adiabatic_parameter(DEFAULT_GAMMA_SAMPLES)
                .unwrap()
                .gamma
        };
        for tau in [0.05, 0.1, 0.2, 0.3, 0.8] {
            let ratio = g(2.0 * tau) / (g(tau) / 2.0);
            assert!((ratio - 1.0).abs() < 1e-9, "tau = {tau}");
        }
    }

    #[test]
    fn gamma_rejects_bad_requests() {
        let cd = DriveProtocol::reference(0.05, DriveKind::CounterDiabatic).unwrap();
        assert!(cd.adiabatic_parameter(2001).is_err());
        let bare = cd.with_kind(DriveKind::Bare);
        assert!(bare.adiabatic_parameter(99).is_err());
    }

    #[test]
    fn gap_never_drops_below_z() {
        let p = DriveProtocol::reference(0.8, DriveKind::Bare).unwrap();
        let min_gap = (0..=1000)
            .map(|k| eigendecompose(&p.hamiltonian_at(0.8 * k as f64 / 1000.0).unwrap()).spread())
            .fold(f64::INFINITY, f64::min);
        assert!((min_gap - reference_z()).abs() < 1e-10);
    }

    #[test]
    fn piecewise_linear_schedule() {
        let sched = Schedule::PiecewiseLinear {
            knots: vec![(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)],
        };
        let p = DriveProtocol::new(1.0, 10.0, 2.0, DriveKind::Bare, sched).unwrap();
        assert!((p.x_schedule(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!((p.x_schedule(2.0).unwrap() - 10.0).abs() < 1e-14);
        assert!((p.x_rate(0.2).unwrap() - 2.0).abs() < 1e-14);
        assert!((p.x_rate(1.5).unwrap() - 8.0).abs() < 1e-14);

        let bad = Schedule::PiecewiseLinear {
            knots: vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
        };
        assert!(DriveProtocol::new(1.0, 1.0, 1.0, DriveKind::Bare, bad).is_err());
        let open = Schedule::PiecewiseLinear {
            knots: vec![(0.1, 0.0), (1.0, 1.0)],
        };
        assert!(DriveProtocol::new(1.0, 1.0, 1.0, DriveKind::Bare, open).is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(DriveProtocol::new(0.0, 5.0, 0.1, DriveKind::Bare, Schedule::CosineRamp).is_err());
        assert!(DriveProtocol::new(1.0, 5.0, 0.0, DriveKind::Bare, Schedule::CosineRamp).is_err());
        assert!(DriveProtocol::new(1.0, f64::NAN, 0.1, DriveKind::Bare, Schedule::CosineRamp).is_err());
    }

    #[test]
    fn default_steps_floor() {
        let p = DriveProtocol::reference(0.8, DriveKind::Bare).unwrap();
        assert_eq!(p.default_steps().unwrap(), 2000);
        let slow = p.with_tau(10.0).unwrap();
        // Final gap 2Z dominates: ⌈400·10·2Z⌉.
        assert_eq!(
            slow.default_steps().unwrap(),
            (4000.0 * 2.0 * reference_z()).ceil() as usize
        );
    }

    #[test]
    fn waveform_vanishes_at_endpoints() {
        let p = DriveProtocol::reference(0.05, DriveKind::CounterDiabatic).unwrap();
        let w = p.waveform(201).unwrap();
        assert_eq!(w.len(), 201);
        assert!(w[0].y.abs() < 1e-12 && w[200].y.abs() < 1e-12);
        // Y peaks before τ/2 because X(t)² + Z² grows along the ramp.
        let peak = w.iter().map(|s| s.y).fold(0.0, f64::max);
        let argpeak = w.iter().position(|s| s.y == peak).unwrap();
        assert!(argpeak < 100 && peak > w[100].y);
    }
}
