//! DSG controller: synchronization loop, braking loop, current-magnitude loop
//! and islanded secondary control.
//!
//! Everything here is a pure function of measurements, parameters and state.
//! The closed loop is assembled by [`crate::sim`].
//!
//! Sign convention: `delta_1` is a lag angle, so a converter running above
//! grid frequency shrinks it. With the frequency law
//! `d_omega = K_p (P_E - P_ref) + sign K_Q V_q` this gives
//! `d delta_1 / dt = omega_base K_p (P_ref - S)`, where
//! `S = P_E + sign (K_Q / K_p) V_q` is the revised power. Equilibria on the
//! rising slope of `S` are stable.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::circuit::power_factor_angle;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyncLoop {
    /// `d_omega = K_p (P_E - P_ref) + ...`, no inertia.
    Proportional,
    /// `J d(d_omega)/dt = (S - P_ref) - D d_omega`.
    Inertial { j: f64, d: f64 },
}

/// Which quantity the current-magnitude loop regulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvFeedback {
    /// V-I droop on the terminal voltage magnitude.
    Voltage,
    /// Q-I droop on the reactive power.
    Reactive,
}

/// Transfer function of the current-magnitude loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QvLink {
    /// Static gain `K_V`.
    Proportional,
    /// Inertial link `1 / (J_q s + D_q)`.
    Inertial { j_q: f64, d_q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsgParams {
    pub k_p: f64,
    pub k_q: f64,
    pub k_v: f64,
    /// Braking activation threshold on the power-factor angle, rad.
    pub phi_0: f64,
    /// Width of the deactivation band below `phi_0`, rad. Zero gives a pure threshold.
    pub phi_hysteresis: f64,
    pub i_max: f64,
    pub i_nom: f64,
    pub v_ref: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub sync: SyncLoop,
    pub qv_feedback: QvFeedback,
    pub qv_link: QvLink,
    /// Inner current-loop lag time constant, s. Zero makes the current ideal.
    pub tau_i: f64,
    /// Islanded secondary-control integral gain, 1/s.
    pub k_sec: f64,
}

impl Default for DsgParams {
    fn default() -> Self {
        Self {
            k_p: 0.02,
            k_q: 0.06,
            k_v: 0.01,
            phi_0: 0.0,
            phi_hysteresis: 0.0,
            i_max: 1.05,
            i_nom: 1.0,
            v_ref: 1.0,
            p_ref: 0.8,
            q_ref: 0.0,
            sync: SyncLoop::Proportional,
            qv_feedback: QvFeedback::Voltage,
            qv_link: QvLink::Proportional,
            tau_i: 0.0,
            k_sec: 1.0,
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite"))
    }
}

impl DsgParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dsg.k_p", self.k_p),
            ("dsg.k_q", self.k_q),
            ("dsg.k_v", self.k_v),
            ("dsg.phi_0", self.phi_0),
            ("dsg.phi_hysteresis", self.phi_hysteresis),
            ("dsg.i_max", self.i_max),
            ("dsg.i_nom", self.i_nom),
            ("dsg.v_ref", self.v_ref),
            ("dsg.p_ref", self.p_ref),
            ("dsg.q_ref", self.q_ref),
            ("dsg.tau_i", self.tau_i),
            ("dsg.k_sec", self.k_sec),
        ] {
            finite(name, v)?;
        }
        if self.k_p <= 0.0 {
            return Err(invalid("dsg.k_p", format!("must be > 0, got {}", self.k_p)));
        }
        if self.k_q < 0.0 {
            return Err(invalid("dsg.k_q", format!("must be >= 0, got {}", self.k_q)));
        }
        if self.k_v < 0.0 {
            return Err(invalid("dsg.k_v", format!("must be >= 0, got {}", self.k_v)));
        }
        if self.i_max <= 0.0 {
            return Err(invalid("dsg.i_max", format!("must be > 0, got {}", self.i_max)));
        }
        if !(0.0..=self.i_max).contains(&self.i_nom) {
            return Err(invalid(
                "dsg.i_nom",
                format!("must lie in [0, i_max = {}], got {}", self.i_max, self.i_nom),
            ));
        }
        if !(-FRAC_PI_2..FRAC_PI_2).contains(&self.phi_0) {
            return Err(invalid("dsg.phi_0", format!("must lie in [-pi/2, pi/2), got {}", self.phi_0)));
        }
        if self.phi_hysteresis < 0.0 {
            return Err(invalid("dsg.phi_hysteresis", "must be >= 0"));
        }
        if self.tau_i < 0.0 {
            return Err(invalid("dsg.tau_i", format!("must be >= 0, got {}", self.tau_i)));
        }
        if self.k_sec < 0.0 {
            return Err(invalid("dsg.k_sec", "must be >= 0"));
        }
        if let SyncLoop::Inertial { j, d } = self.sync {
            finite("dsg.j", j)?;
            finite("dsg.d", d)?;
            if j <= 0.0 {
                return Err(invalid("dsg.j", format!("must be > 0, got {j}")));
            }
            if d < 0.0 {
                return Err(invalid("dsg.d", format!("must be >= 0, got {d}")));
            }
        }
        if let QvLink::Inertial { j_q, d_q } = self.qv_link {
            finite("dsg.j_q", j_q)?;
            finite("dsg.d_q", d_q)?;
            if j_q <= 0.0 {
                return Err(invalid("dsg.j_q", format!("must be > 0, got {j_q}")));
            }
            if d_q < 0.0 {
                return Err(invalid("dsg.d_q", format!("must be >= 0, got {d_q}")));
            }
        }
        Ok(())
    }

    /// Braking ratio `K_PL = K_Q / K_p`.
    pub fn k_pl(&self) -> f64 {
        self.k_q / self.k_p
    }
}

/// Integrable controller state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DsgState {
    /// Cumulative dual power angle, rad. Never wrapped.
    pub delta_1: f64,
    /// Frequency deviation, p.u. Integrated in the inertial loop, derived otherwise.
    pub d_omega: f64,
    /// Actual d-axis current, p.u.
    pub i_d: f64,
    /// Integrator of the inertial current-magnitude link.
    pub qv: f64,
    /// Integrator of the islanded secondary control.
    pub sec: f64,
}

impl DsgState {
    pub(crate) fn is_finite(&self) -> bool {
        self.delta_1.is_finite()
            && self.d_omega.is_finite()
            && self.i_d.is_finite()
            && self.qv.is_finite()
            && self.sec.is_finite()
    }

    /// `self + h * rate`, field by field.
    pub(crate) fn advanced(&self, rate: &DsgState, h: f64) -> DsgState {
        DsgState {
            delta_1: self.delta_1 + h * rate.delta_1,
            d_omega: self.d_omega + h * rate.d_omega,
            i_d: self.i_d + h * rate.i_d,
            qv: self.qv + h * rate.qv,
            sec: self.sec + h * rate.sec,
        }
    }
}

/// Braking activation: 1 iff the power-factor angle is at or above `phi_0`.
pub fn braking_sign(p_e: f64, q_e: f64, phi_0: f64) -> Result<u8> {
    let phi = power_factor_angle(p_e, q_e)?;
    Ok(u8::from(phi - phi_0 >= 0.0))
}

/// Threshold with an optional deactivation band: once active, braking stays
/// on until `phi` falls below `phi_0 - band`.
pub fn braking_sign_with_hysteresis(phi: f64, phi_0: f64, band: f64, previous: u8) -> u8 {
    let holding = band > 0.0 && previous == 1 && phi >= phi_0 - band;
    u8::from(phi - phi_0 >= 0.0 || holding)
}

/// Proportional synchronization loop with the braking term.
pub fn frequency_deviation(p_e: f64, v_q: f64, sign: u8, params: &DsgParams) -> f64 {
    params.k_p * (p_e - params.p_ref) + f64::from(sign) * params.k_q * v_q
}

/// Revised power seen by the synchronization loop.
pub fn revised_power_seen(p_e: f64, v_q: f64, sign: u8, params: &DsgParams) -> f64 {
    p_e + f64::from(sign) * params.k_pl() * v_q
}

/// `d(d_omega)/dt` of the inertial synchronization loop.
///
/// The braking term enters as part of the accelerating power, scaled by
/// `K_Q / K_p` so that, with `D = 1 / K_p` and vanishing inertia, the loop
/// settles to the proportional law.
pub fn inertial_sync_derivative(
    p_e: f64,
    v_q: f64,
    sign: u8,
    d_omega: f64,
    params: &DsgParams,
) -> Result<f64> {
    let SyncLoop::Inertial { j, d } = params.sync else {
        return Err(invalid("dsg.sync", "inertial derivative requested for a proportional loop"));
    };
    if !(j > 0.0) {
        return Err(invalid("dsg.j", format!("must be > 0, got {j}")));
    }
    let accelerating = revised_power_seen(p_e, v_q, sign, params) - params.p_ref;
    Ok((accelerating - d * d_omega) / j)
}

/// Rate of change of the dual power angle, rad/s.
pub fn delta_dot(d_omega: f64, f_base: f64) -> f64 {
    -2.0 * PI * f_base * d_omega
}

/// Error signal fed to the current-magnitude loop.
pub fn qv_error(v_mag: f64, q_e: f64, params: &DsgParams) -> f64 {
    match params.qv_feedback {
        QvFeedback::Voltage => params.v_ref - v_mag,
        QvFeedback::Reactive => params.q_ref - q_e,
    }
}

/// Current reference before the limiter.
pub fn unclamped_current_reference(v_mag: f64, q_e: f64, params: &DsgParams, state: &DsgState) -> f64 {
    let base = params.i_nom + state.sec;
    match params.qv_link {
        QvLink::Proportional => base + params.k_v * qv_error(v_mag, q_e, params),
        QvLink::Inertial { .. } => base + state.qv,
    }
}

/// d-axis current reference, limited to `[0, I_max]`. The q-axis reference is always zero.
pub fn current_reference(v_mag: f64, q_e: f64, params: &DsgParams, state: &DsgState) -> f64 {
    unclamped_current_reference(v_mag, q_e, params, state).clamp(0.0, params.i_max)
}

/// Rate of the inertial current-magnitude link, frozen while the limiter
/// holds the reference and the error would push it further out.
pub fn qv_link_derivative(v_mag: f64, q_e: f64, params: &DsgParams, state: &DsgState) -> f64 {
    let QvLink::Inertial { j_q, d_q } = params.qv_link else {
        return 0.0;
    };
    let rate = (qv_error(v_mag, q_e, params) - d_q * state.qv) / j_q;
    let r = unclamped_current_reference(v_mag, q_e, params, state);
    if (r >= params.i_max && rate > 0.0) || (r <= 0.0 && rate < 0.0) {
        0.0
    } else {
        rate
    }
}

/// First-order stand-in for the inner current loop. `None` means the current
/// follows its reference algebraically.
pub fn current_lag_derivative(i_d: f64, i_d_star: f64, tau_i: f64) -> Option<f64> {
    if tau_i > 0.0 {
        Some((i_d_star - i_d) / tau_i)
    } else {
        None
    }
}

/// Islanded secondary control: slow integral trim of the nominal current
/// towards `V_ref`, with anti-windup at both ends of the limiter.
pub fn secondary_control_derivative(v_mag: f64, params: &DsgParams, state: &DsgState) -> f64 {
    let rate = params.k_sec * (params.v_ref - v_mag);
    let total = params.i_nom + state.sec;
    if (total >= params.i_max && rate > 0.0) || (total <= 0.0 && rate < 0.0) {
        0.0
    } else {
        rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn braking_sign_examples() {
        assert_eq!(braking_sign(1.0, 0.26, 0.0).unwrap(), 1);
        assert_eq!(braking_sign(0.5, -0.606, 0.0).unwrap(), 0);
        assert_eq!(braking_sign(1.0, 0.0, 0.0).unwrap(), 1);
        assert!(braking_sign(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn hysteresis_keeps_braking_inside_band() {
        assert_eq!(braking_sign_with_hysteresis(-0.05, 0.0, 0.1, 1), 1);
        assert_eq!(braking_sign_with_hysteresis(-0.05, 0.0, 0.1, 0), 0);
        assert_eq!(braking_sign_with_hysteresis(-0.2, 0.0, 0.1, 1), 0);
        assert_eq!(braking_sign_with_hysteresis(-0.05, 0.0, 0.0, 1), 0);
    }

    #[test]
    fn frequency_deviation_examples() {
        let mut p = DsgParams {
            p_ref: 0.7,
            ..DsgParams::default()
        };
        assert_eq!(frequency_deviation(0.7, 0.3, 0, &p), 0.0);
        p.p_ref = 1.0;
        assert!(close(frequency_deviation(0.5, 0.0, 0, &p), -0.01, 1e-15));
        assert!(close(frequency_deviation(1.0, 0.26, 1, &p), 0.0156, 1e-15));
        // direction: reference above output slows the converter down
        assert!(frequency_deviation(0.9, 0.0, 0, &p) < 0.0);
        assert!(frequency_deviation(1.1, 0.0, 0, &p) > 0.0);
    }

    #[test]
    fn inertial_examples() {
        let p = DsgParams {
            p_ref: 0.5,
            sync: SyncLoop::Inertial { j: 2.0, d: 50.0 },
            ..DsgParams::default()
        };
        assert_eq!(inertial_sync_derivative(0.5, 0.0, 0, 0.0, &p).unwrap(), 0.0);
        assert!(close(inertial_sync_derivative(1.0, 0.0, 0, 0.0, &p).unwrap(), 0.25, 1e-15));
        assert!(close(inertial_sync_derivative(0.5, 0.0, 0, 0.01, &p).unwrap(), -0.25, 1e-15));
        let prop = DsgParams::default();
        assert!(inertial_sync_derivative(0.5, 0.0, 0, 0.0, &prop).is_err());
    }

    #[test]
    fn inertial_quasi_steady_matches_proportional() {
        let base = DsgParams {
            p_ref: 0.6,
            ..DsgParams::default()
        };
        let d = 1.0 / base.k_p;
        let inertial = DsgParams {
            sync: SyncLoop::Inertial { j: 1e-9, d },
            ..base
        };
        for (p_e, v_q, sign) in [(0.9, 0.1, 1), (0.3, -0.4, 0), (0.6, 0.2, 1)] {
            let target = frequency_deviation(p_e, v_q, sign, &base);
            // steady state of the inertial link: zero derivative
            let steady = revised_power_seen(p_e, v_q, sign, &base) - base.p_ref;
            let d_omega = steady / d;
            assert!(close(d_omega, target, 1e-12));
            assert!(inertial_sync_derivative(p_e, v_q, sign, d_omega, &inertial).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn delta_dot_examples() {
        assert_eq!(delta_dot(0.0, 50.0), 0.0);
        assert!(close(delta_dot(-0.01, 50.0), PI, 1e-12));
        assert!(close(delta_dot(0.02, 50.0), -2.0 * PI, 1e-12));
    }

    #[test]
    fn current_reference_examples() {
        let p = DsgParams::default();
        let s = DsgState::default();
        assert_eq!(current_reference(1.0, 0.0, &p, &s), 1.0);
        assert!(close(current_reference(0.6, 0.0, &p, &s), 1.004, 1e-15));
        let hi = DsgParams {
            i_nom: 1.2,
            i_max: 1.05,
            ..p
        };
        assert_eq!(current_reference(1.0, 0.0, &hi, &s), 1.05);
        let qi = DsgParams {
            qv_feedback: QvFeedback::Reactive,
            q_ref: 0.1,
            ..p
        };
        assert!(close(current_reference(1.0, 0.0, &qi, &s), 1.001, 1e-15));
    }

    #[test]
    fn inertial_link_anti_windup() {
        let p = DsgParams {
            qv_link: QvLink::Inertial { j_q: 0.5, d_q: 10.0 },
            i_nom: 1.05,
            ..DsgParams::default()
        };
        let s = DsgState {
            qv: 0.01,
            ..DsgState::default()
        };
        // reference already above I_max, low voltage asks for more
        assert_eq!(qv_link_derivative(0.5, 0.0, &p, &s), 0.0);
        // high voltage pulls it back down
        assert!(qv_link_derivative(1.5, 0.0, &p, &s) < 0.0);
        assert_eq!(current_reference(0.5, 0.0, &p, &s), 1.05);
    }

    #[test]
    fn current_lag_examples() {
        assert_eq!(current_lag_derivative(1.0, 1.0, 0.005), Some(0.0));
        assert!(close(current_lag_derivative(0.9, 1.0, 0.005).unwrap(), 20.0, 1e-12));
        assert_eq!(current_lag_derivative(0.9, 1.0, 0.0), None);
    }

    #[test]
    fn secondary_control_examples() {
        let p = DsgParams::default();
        let s = DsgState::default();
        assert_eq!(secondary_control_derivative(1.0, &p, &s), 0.0);
        assert!(close(secondary_control_derivative(0.98, &p, &s), 0.02, 1e-15));
        let sat = DsgState {
            sec: 0.05,
            ..DsgState::default()
        };
        assert_eq!(secondary_control_derivative(0.9, &p, &sat), 0.0);
        assert!(secondary_control_derivative(1.1, &p, &sat) < 0.0);
    }

    #[test]
    fn validation() {
        assert!(DsgParams::default().validate().is_ok());
        let bad = [
            DsgParams { k_p: 0.0, ..DsgParams::default() },
            DsgParams { k_q: -1.0, ..DsgParams::default() },
            DsgParams { i_nom: 1.1, ..DsgParams::default() },
            DsgParams { phi_0: FRAC_PI_2, ..DsgParams::default() },
            DsgParams { sync: SyncLoop::Inertial { j: 0.0, d: 1.0 }, ..DsgParams::default() },
            DsgParams { qv_link: QvLink::Inertial { j_q: 1.0, d_q: -1.0 }, ..DsgParams::default() },
            DsgParams { tau_i: f64::NAN, ..DsgParams::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
