//! Quasi-static phasor model of a current-source converter behind a reactance.
//!
//! Two circuits are covered: the converter feeding an infinite bus (handled in
//! Norton form, `I_1 = U / X`) and the converter feeding an islanded
//! constant-impedance load. The converter frame puts the d-axis on the
//! converter current `I_0`, with the q-axis current held at zero. The dual
//! power angle `delta_1` is the angle by which `I_0` lags the grid's Norton
//! current `I_1`.
//!
//! With that frame the grid voltage seen from the converter is
//! `U * (sin delta_1 - j cos delta_1)` and the reactance adds a pure q-axis
//! drop `X * I_0`, so
//!
//! ```text
//! P_E = U I_0 sin(delta_1)
//! Q_E = I_0^2 X - U I_0 cos(delta_1)
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use crate::error::{invalid, DsgError, Result};

/// Complex per-unit quantity in rectangular form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    re: f64,
    im: f64,
}

impl Phasor {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(invalid("phasor", format!("non-finite component ({re}, {im})")));
        }
        Ok(Self { re, im })
    }

    pub fn from_polar(magnitude: f64, angle: f64) -> Result<Self> {
        Self::new(magnitude * angle.cos(), magnitude * angle.sin())
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn angle(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }
}

impl Add for Phasor {
    type Output = Phasor;
    fn add(self, rhs: Phasor) -> Phasor {
        Phasor {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for Phasor {
    type Output = Phasor;
    fn sub(self, rhs: Phasor) -> Phasor {
        Phasor {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for Phasor {
    type Output = Phasor;
    fn mul(self, rhs: Phasor) -> Phasor {
        Phasor {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

/// Infinite bus behind the line and grid-side filter reactance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    /// Infinite-bus voltage magnitude, p.u.
    pub u: f64,
    /// Line reactance, p.u.
    pub x_line: f64,
    /// Grid-side filter reactance, p.u.
    pub x_g: f64,
    /// Base frequency, Hz.
    pub f_base: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            u: 1.0,
            x_line: 0.2,
            x_g: 0.06,
            f_base: 50.0,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(invalid("grid.u", format!("must be finite and >= 0, got {}", self.u)));
        }
        if !(self.x_line.is_finite() && self.x_g.is_finite()) {
            return Err(invalid("grid.x_line", "reactances must be finite"));
        }
        if self.reactance() <= 0.0 {
            return Err(invalid(
                "grid.x_line",
                format!("X = x_line + x_g must be > 0, got {}", self.reactance()),
            ));
        }
        if !(self.f_base.is_finite() && self.f_base > 0.0) {
            return Err(invalid("grid.f_base", format!("must be > 0, got {}", self.f_base)));
        }
        Ok(())
    }

    /// Total reactance between the converter and the infinite bus.
    pub fn reactance(&self) -> f64 {
        self.x_line + self.x_g
    }

    pub fn susceptance(&self) -> f64 {
        1.0 / self.reactance()
    }

    /// Norton current `I_1 = U / X`.
    pub fn norton_current(&self) -> f64 {
        self.u / self.reactance()
    }

    pub fn omega_base(&self) -> f64 {
        2.0 * PI * self.f_base
    }
}

/// Constant-impedance load, specified by its power draw at 1 p.u. voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadParams {
    pub p: f64,
    pub q: f64,
}

impl LoadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.q.is_finite()) {
            return Err(invalid("load", "power must be finite"));
        }
        if self.p < 0.0 {
            return Err(invalid("load.p", format!("must be >= 0, got {}", self.p)));
        }
        if self.p == 0.0 && self.q == 0.0 {
            return Err(invalid("load", "zero power draw is an open circuit"));
        }
        Ok(())
    }

    /// Equivalent impedance `Z = V_nom^2 / conj(P + jQ)` with `V_nom = 1`.
    pub fn impedance(&self) -> Result<Phasor> {
        self.validate()?;
        let s2 = self.p * self.p + self.q * self.q;
        Phasor::new(self.p / s2, self.q / s2)
    }
}

/// Algebraic quantities of the circuit at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub p_e: f64,
    pub q_e: f64,
    pub v_d: f64,
    pub v_q: f64,
    pub v_mag: f64,
    /// Power-factor angle; zero when no power flows.
    pub phi: f64,
    pub delta_1: f64,
}

impl OperatingPoint {
    fn from_frame(i_0: f64, v_d: f64, v_q: f64, delta_1: f64) -> Self {
        let p_e = v_d * i_0;
        let q_e = v_q * i_0;
        let phi = if p_e == 0.0 && q_e == 0.0 {
            0.0
        } else {
            q_e.atan2(p_e)
        };
        Self {
            p_e,
            q_e,
            v_d,
            v_q,
            v_mag: v_d.hypot(v_q),
            phi,
            delta_1,
        }
    }
}

fn check_current(i_0: f64) -> Result<()> {
    if !(i_0.is_finite() && i_0 >= 0.0) {
        return Err(invalid("I_0", format!("current magnitude must be >= 0, got {i_0}")));
    }
    Ok(())
}

/// Returns `(I_1, X)`.
pub fn norton_equivalent(grid: &GridParams) -> Result<(f64, f64)> {
    grid.validate()?;
    Ok((grid.norton_current(), grid.reactance()))
}

/// Active and reactive power delivered by the converter into the grid.
pub fn transmitted_power(i_0: f64, delta_1: f64, grid: &GridParams) -> Result<(f64, f64)> {
    check_current(i_0)?;
    let (i_1, x) = norton_equivalent(grid)?;
    let b = 1.0 / x;
    let p = i_1 * i_0 / b * delta_1.sin();
    let q = i_0 * i_0 / b - i_1 * i_0 / b * delta_1.cos();
    Ok((p, q))
}

/// Terminal voltage `(V_d, V_q)` in the converter frame.
pub fn terminal_voltage(i_0: f64, delta_1: f64, grid: &GridParams) -> Result<(f64, f64)> {
    check_current(i_0)?;
    grid.validate()?;
    Ok(grid_frame_voltage(i_0, delta_1, grid.u, grid.reactance()))
}

pub(crate) fn grid_frame_voltage(i_0: f64, delta_1: f64, u: f64, x: f64) -> (f64, f64) {
    let (s, c) = delta_1.sin_cos();
    (u * s, x * i_0 - u * c)
}

/// Full operating point of the grid-connected circuit.
pub fn grid_operating_point(i_0: f64, delta_1: f64, grid: &GridParams) -> Result<OperatingPoint> {
    let (v_d, v_q) = terminal_voltage(i_0, delta_1, grid)?;
    Ok(OperatingPoint::from_frame(i_0, v_d, v_q, delta_1))
}

/// Maps a conventional (leading) power angle onto the dual power angle.
pub fn dual_power_angle(delta_u: f64) -> f64 {
    -delta_u + FRAC_PI_2
}

pub fn power_factor_angle(p_e: f64, q_e: f64) -> Result<f64> {
    if p_e == 0.0 && q_e == 0.0 {
        return Err(DsgError::ZeroPower);
    }
    Ok(q_e.atan2(p_e))
}

/// Islanded circuit: the converter current flows straight into the load, so
/// `V = Z * I_0` and `P + jQ = |I_0|^2 Z`. There is no angle reference, so
/// `delta_1` is reported as zero.
pub fn islanded_operating_point(i_0: f64, load: &LoadParams) -> Result<OperatingPoint> {
    check_current(i_0)?;
    let z = load.impedance()?;
    Ok(island_point(i_0, z, 0.0))
}

pub(crate) fn island_point(i_0: f64, z: Phasor, delta_1: f64) -> OperatingPoint {
    OperatingPoint::from_frame(i_0, z.re() * i_0, z.im() * i_0, delta_1)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}
