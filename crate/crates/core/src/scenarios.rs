//! Built-in reproduction scenarios.
//!
//! Plateau and dip durations are reconstructions: each power plateau lasts
//! 1 s, voltage dips start at t = 1 s and clear at t = 4 s.

use crate::circuit::LoadParams;
use crate::error::{DsgError, Result};
use crate::sim::{Event, EventKind, Mode, Scenario};

pub const BUILTIN_NAMES: [&str; 6] = ["fig4", "fig5a", "fig5b", "fig6a", "fig6b", "fig8"];

/// Active power reference plateaus of the power-step experiment.
pub const FIG4_STEPS: [f64; 5] = [0.3, 0.5, 0.7, 1.0, 1.05];
pub const DIP_START: f64 = 1.0;
pub const DIP_END: f64 = 4.0;
pub const FIG8_LOAD: LoadParams = LoadParams { p: 1.0, q: 0.2 };

/// Converter-side filter reactance and current-loop proportional gain.
pub const X_F: f64 = 0.05;
pub const K_CEP: f64 = 0.4;

/// Closed-loop time constant of a proportional current loop on the
/// converter-side filter inductance, `L_f / K_cep`.
pub fn current_loop_lag(f_base: f64) -> f64 {
    X_F / (2.0 * std::f64::consts::PI * f_base * K_CEP)
}

/// Whether the built-in is expected to lose synchronism.
pub fn expects_los(name: &str) -> bool {
    name == "fig6a"
}

pub fn builtin(name: &str) -> Result<Scenario> {
    match name {
        "fig4" => Ok(power_steps()),
        "fig5a" => Ok(voltage_dip(0.8, false)),
        "fig5b" => Ok(voltage_dip(0.8, true)),
        "fig6a" => Ok(voltage_dip(0.6, false)),
        "fig6b" => Ok(voltage_dip(0.6, true)),
        "fig8" => Ok(islanded()),
        other => Err(DsgError::Config {
            line: 0,
            message: format!("unknown built-in scenario `{other}` (expected one of {})", BUILTIN_NAMES.join(", ")),
        }),
    }
}

fn power_steps() -> Scenario {
    let mut sc = Scenario::default();
    // 1.05 p.u. has to be reachable on the rising slope, so the current
    // rating sits above it
    sc.dsg.i_nom = 1.2;
    sc.dsg.i_max = 1.25;
    sc.dsg.p_ref = FIG4_STEPS[0];
    sc.events = FIG4_STEPS[1..]
        .iter()
        .enumerate()
        .map(|(k, &p)| Event {
            t: (k + 1) as f64,
            kind: EventKind::PowerRefStep(p),
        })
        .collect();
    sc.t_end = FIG4_STEPS.len() as f64 + 1.0;
    sc
}

fn voltage_dip(u_dip: f64, braking: bool) -> Scenario {
    let mut sc = Scenario::default();
    sc.dsg.p_ref = 0.8;
    sc.dsg.tau_i = current_loop_lag(sc.grid.f_base);
    if !braking {
        sc.dsg.k_q = 0.0;
    }
    sc.events = vec![
        Event {
            t: DIP_START,
            kind: EventKind::GridVoltageStep(u_dip),
        },
        Event {
            t: DIP_END,
            kind: EventKind::GridVoltageStep(1.0),
        },
    ];
    sc.t_end = 6.0;
    sc
}

fn islanded() -> Scenario {
    let mut sc = Scenario {
        mode0: Mode::Islanded,
        load: Some(FIG8_LOAD),
        t_end: 6.0,
        ..Scenario::default()
    };
    sc.dsg.p_ref = FIG8_LOAD.p;
    sc
}
