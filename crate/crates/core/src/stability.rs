//! Power-angle analysis of the DSG-infinite-bus system.
//!
//! The synchronization loop drives `delta_1` towards the roots of
//! `C(delta_1) = P_ref`, where `C` is either the plain power-angle curve
//! `P_m sin(delta_1)` or, with the braking loop active, the revised power
//!
//! ```text
//! S(delta_1) = P_m sin(delta_1) - K_PL U cos(delta_1) + K_PL X I_d
//!            = P'_m sin(delta_1 - alpha) + K_PL X I_d
//! P'_m = sqrt(P_m^2 + (K_PL U)^2),  alpha = atan(K_PL U / P_m)
//! ```
//!
//! Roots on a rising slope are stable.

use std::f64::consts::PI;

use crate::circuit::{wrap_angle, GridParams};
use crate::control::DsgParams;
use crate::error::{invalid, DsgError, Result};
use crate::sim::TimeSeries;

/// Sample count used to bracket roots of the power-angle curves.
pub const ROOT_GRID: usize = 4096;
/// Power residual at which a bracketed root is accepted.
pub const ROOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakingCurveParams {
    /// Maximum transmissible power `U I_max`, p.u.
    pub p_m: f64,
    /// `K_Q / K_p`.
    pub k_pl: f64,
    pub u: f64,
    pub x: f64,
    /// Current in the constant offset term of `S`.
    pub i_d: f64,
    pub p_ref: f64,
}

impl BrakingCurveParams {
    /// Curve parameters for a grid voltage `u`, with the current at its limit.
    pub fn from_setup(grid: &GridParams, dsg: &DsgParams, u: f64) -> Self {
        Self {
            p_m: u * dsg.i_max,
            k_pl: dsg.k_pl(),
            u,
            x: grid.reactance(),
            i_d: dsg.i_max,
            p_ref: dsg.p_ref,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.p_m, self.k_pl, self.u, self.x, self.i_d, self.p_ref]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("curve", "parameters must be finite"));
        }
        if self.p_m < 0.0 || self.k_pl < 0.0 || self.u < 0.0 || self.i_d < 0.0 {
            return Err(invalid("curve", "p_m, k_pl, u and i_d must be >= 0"));
        }
        if self.x <= 0.0 {
            return Err(invalid("curve.x", format!("must be > 0, got {}", self.x)));
        }
        Ok(())
    }

    /// Amplitude `P'_m` of the sinusoidal part of `S`.
    pub fn p_m_revised(&self) -> f64 {
        self.p_m.hypot(self.k_pl * self.u)
    }

    /// Phase shift `alpha` of the sinusoidal part of `S`.
    pub fn alpha(&self) -> f64 {
        (self.k_pl * self.u).atan2(self.p_m)
    }

    fn offset(&self) -> f64 {
        self.k_pl * self.x * self.i_d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    /// Wrapped to `(-pi, pi]`.
    pub delta_1: f64,
    pub stable: bool,
    pub curve_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakingCriterion {
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosEvent {
    /// Time of the pole slip, linearly interpolated between samples, s.
    pub t: f64,
    /// Signed angle excursion from the initial sample at the slip, rad.
    pub excursion: f64,
}

/// Uniform samples of `P_E = U I_0 sin(delta_1)` over `(-pi, pi]`.
pub fn power_angle_curve(i_0: f64, grid: &GridParams, n_samples: usize) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(invalid("n_samples", "need at least 2 samples"));
    }
    if !(i_0 >= 0.0) {
        return Err(invalid("I_0", "must be >= 0"));
    }
    grid.validate()?;
    let p_m = grid.u * i_0;
    Ok(angle_grid(n_samples)
        .map(|d| (d, p_m * d.sin()))
        .collect())
}

/// Uniform samples of the revised power over `(-pi, pi]`.
pub fn revised_power_curve(params: &BrakingCurveParams, n_samples: usize) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(invalid("n_samples", "need at least 2 samples"));
    }
    params.validate()?;
    Ok(angle_grid(n_samples)
        .map(|d| (d, revised_power(d, params)))
        .collect())
}

/// `n` angles stepping from just above `-pi` up to exactly `pi`.
pub(crate) fn angle_grid(n: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 * PI / n as f64;
    // counted down from pi so the last sample is pi exactly
    (1..=n).map(move |k| PI - h * (n - k) as f64)
}

pub fn revised_power(delta_1: f64, params: &BrakingCurveParams) -> f64 {
    let (s, c) = delta_1.sin_cos();
    params.p_m * s - params.k_pl * params.u * c + params.offset()
}

/// Closed form of the revised power; equal to [`revised_power`] up to rounding.
pub fn revised_power_polar(delta_1: f64, params: &BrakingCurveParams) -> f64 {
    params.p_m_revised() * (delta_1 - params.alpha()).sin() + params.offset()
}

/// Peak of the revised power curve.
pub fn s_max(params: &BrakingCurveParams) -> f64 {
    params.p_m_revised() + params.offset()
}

/// `K_Q / K_p > P_ref / (I_max X)`: with this gain the revised power always
/// reaches the reference, whatever the depth of the voltage dip.
pub fn braking_gain_criterion(k_q: f64, k_p: f64, p_ref: f64, i_max: f64, x: f64) -> Result<BrakingCriterion> {
    if !(k_p > 0.0) {
        return Err(invalid("k_p", format!("must be > 0, got {k_p}")));
    }
    if !(i_max > 0.0) {
        return Err(invalid("i_max", format!("must be > 0, got {i_max}")));
    }
    if !(x > 0.0) {
        return Err(invalid("x", format!("must be > 0, got {x}")));
    }
    let margin = k_q / k_p - p_ref / (i_max * x);
    Ok(BrakingCriterion {
        holds: margin > 0.0,
        margin,
    })
}

/// All roots of `C(delta_1) = P_ref` on `(-pi, pi]`, classified by slope.
///
/// `C` is the plain power-angle curve when `braking` is false, the revised
/// power otherwise. Returns an empty list when the curve never reaches
/// `P_ref`.
pub fn find_equilibria(p_ref: f64, params: &BrakingCurveParams, braking: bool) -> Result<Vec<Equilibrium>> {
    params.validate()?;
    if !p_ref.is_finite() {
        return Err(invalid("p_ref", "must be finite"));
    }
    let curve = |d: f64| {
        if braking {
            revised_power(d, params)
        } else {
            params.p_m * d.sin()
        }
    };
    let slope = |d: f64| {
        let (s, c) = d.sin_cos();
        if braking {
            params.p_m * c + params.k_pl * params.u * s
        } else {
            params.p_m * c
        }
    };
    Ok(bracket_roots(|d| curve(d) - p_ref, ROOT_GRID, ROOT_TOLERANCE)
        .into_iter()
        .map(|d| {
            let delta_1 = wrap_angle(d);
            let curve_slope = slope(delta_1);
            Equilibrium {
                delta_1,
                stable: curve_slope > 0.0,
                curve_slope,
            }
        })
        .collect())
}

/// Roots of a `2 pi`-periodic function, bracketed on an `n`-point grid over
/// `(-pi, pi]` and refined by bisection until `|f| < tol`.
pub(crate) fn bracket_roots<F: Fn(f64) -> f64>(f: F, n: usize, tol: f64) -> Vec<f64> {
    let grid: Vec<f64> = angle_grid(n).collect();
    let values: Vec<f64> = grid.iter().map(|&d| f(d)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (a, fa) = (grid[k], values[k]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        // the last interval wraps from pi to the first sample past -pi
        let (b, fb) = if k + 1 < n {
            (grid[k + 1], values[k + 1])
        } else {
            (grid[0] + 2.0 * PI, values[0])
        };
        if fb != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&f, a, fa, b, tol));
        }
    }
    roots
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < tol || m == a || m == b {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Synchronous-generator power-angle relation: `(U V sin(delta_U) / X, V^2 / X - U V cos(delta_U) / X)`.
pub fn sg_power(delta_u: f64, u: f64, v: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(invalid("x", format!("must be > 0, got {x}")));
    }
    let p = u * v * delta_u.sin() / x;
    let q = v * v / x - u * v * delta_u.cos() / x;
    Ok((p, q))
}

/// Pole slips in a trajectory: one event each time `|delta_1(t) - delta_1(0)|`
/// crosses a further multiple of `2 pi`.
pub fn detect_los(series: &TimeSeries) -> Result<Vec<LosEvent>> {
    let samples = series.samples();
    let first = samples.first().ok_or(DsgError::EmptyTrajectory)?;
    let origin = first.delta_1;
    let mut events = Vec::new();
    let mut slips = 0u32;
    for pair in samples.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let threshold = 2.0 * PI * f64::from(slips + 1);
        let e_prev = (prev.delta_1 - origin).abs();
        let e_cur = (cur.delta_1 - origin).abs();
        if e_cur >= threshold {
            let frac = if e_cur > e_prev {
                ((threshold - e_prev) / (e_cur - e_prev)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            events.push(LosEvent {
                t: prev.t + frac * (cur.t - prev.t),
                excursion: cur.delta_1 - origin,
            });
            slips += 1;
        }
    }
    Ok(events)
}
