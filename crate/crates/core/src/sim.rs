//! Fixed-step RK4 simulation of the closed-loop DSG system.
//!
//! The integrated state is [`DsgState`]. Algebraic quantities (powers,
//! terminal voltage, braking sign, and the current when the inner loop is
//! ideal) are recomputed from the circuit model at every stage evaluation.
//! Events are applied at the start of the step that begins at their time.

use std::f64::consts::PI;

use crate::circuit::{grid_frame_voltage, island_point, GridParams, LoadParams, OperatingPoint, Phasor};
use crate::control::{
    braking_sign_with_hysteresis, current_lag_derivative, current_reference, delta_dot, frequency_deviation,
    inertial_sync_derivative, qv_link_derivative, revised_power_seen, secondary_control_derivative, DsgParams,
    DsgState, QvLink, SyncLoop,
};
use crate::error::{invalid, DsgError, Result};
use crate::stability::{bisect, find_equilibria, BrakingCurveParams, ROOT_GRID};

/// Largest step the engine accepts, s.
pub const MAX_DT: f64 = 1e-3;
pub const DEFAULT_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    GridVoltageStep(f64),
    PowerRefStep(f64),
    VoltageRefStep(f64),
    SwitchToIsland(LoadParams),
    ReconnectToGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    GridConnected,
    Islanded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    AtEquilibrium,
    Explicit(DsgState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridParams,
    pub dsg: DsgParams,
    /// Load used when the scenario starts islanded.
    pub load: Option<LoadParams>,
    pub events: Vec<Event>,
    pub t_end: f64,
    pub dt: f64,
    pub mode0: Mode,
    pub init: InitialState,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            grid: GridParams::default(),
            dsg: DsgParams::default(),
            load: None,
            events: Vec::new(),
            t_end: 2.0,
            dt: DEFAULT_DT,
            mode0: Mode::GridConnected,
            init: InitialState::AtEquilibrium,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.dsg.validate()?;
        if let Some(load) = &self.load {
            load.validate()?;
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid("scenario.dt", format!("must satisfy 0 < dt <= {MAX_DT}, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("scenario.t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if self.mode0 == Mode::Islanded && self.load.is_none() {
            return Err(invalid("load", "an islanded start needs load.p / load.q"));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return Err(invalid("events.t", format!("event time must be >= 0, got {}", e.t)));
            }
            if e.t <= last {
                return Err(invalid("events.t", "event times must be strictly increasing"));
            }
            if e.t >= self.t_end {
                return Err(invalid("events.t", format!("event at {} is not before t_end = {}", e.t, self.t_end)));
            }
            let k = e.t / self.dt;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(invalid("events.t", format!("event at {} is not on the dt grid", e.t)));
            }
            match e.kind {
                EventKind::GridVoltageStep(u) if !(u.is_finite() && u >= 0.0) => {
                    return Err(invalid("events.value", format!("grid voltage must be >= 0, got {u}")));
                }
                EventKind::PowerRefStep(v) | EventKind::VoltageRefStep(v) if !v.is_finite() => {
                    return Err(invalid("events.value", "reference must be finite"));
                }
                EventKind::SwitchToIsland(load) => load.validate()?,
                _ => {}
            }
            last = e.t;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// One recorded row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub t: f64,
    pub delta_1: f64,
    pub freq: f64,
    pub p_e: f64,
    pub q_e: f64,
    pub v_mag: f64,
    pub i_d: f64,
    pub sign: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    T,
    Delta1,
    Freq,
    PE,
    QE,
    VMag,
    ID,
    Sign,
    S,
}

impl Column {
    pub const ALL: [Column; 9] = [
        Column::T,
        Column::Delta1,
        Column::Freq,
        Column::PE,
        Column::QE,
        Column::VMag,
        Column::ID,
        Column::Sign,
        Column::S,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::T => "t",
            Column::Delta1 => "delta_1",
            Column::Freq => "freq",
            Column::PE => "P_E",
            Column::QE => "Q_E",
            Column::VMag => "V_mag",
            Column::ID => "I_d",
            Column::Sign => "sign",
            Column::S => "S",
        }
    }

    pub fn from_name(name: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn of(self, s: &Sample) -> f64 {
        match self {
            Column::T => s.t,
            Column::Delta1 => s.delta_1,
            Column::Freq => s.freq,
            Column::PE => s.p_e,
            Column::QE => s.q_e,
            Column::VMag => s.v_mag,
            Column::ID => s.i_d,
            Column::Sign => s.sign,
            Column::S => s.s,
        }
    }
}

/// Recorded trajectory on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    samples: Vec<Sample>,
    f_base: f64,
}

impl TimeSeries {
    pub fn with_capacity(n: usize, f_base: f64) -> Self {
        Self {
            samples: Vec::with_capacity(n),
            f_base,
        }
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn f_base(&self) -> f64 {
        self.f_base
    }

    pub fn column(&self, c: Column) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| c.of(s))
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Samples with `t0 <= t <= t1`.
    pub fn between(&self, t0: f64, t1: f64) -> TimeSeries {
        TimeSeries {
            samples: self.samples.iter().filter(|s| s.t >= t0 && s.t <= t1).copied().collect(),
            f_base: self.f_base,
        }
    }

    /// Sample nearest to `t`.
    pub fn at(&self, t: f64) -> Option<&Sample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    /// Largest absolute distance from the mean.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateMetrics {
    pub window: f64,
    stats: Vec<(Column, ColumnStats)>,
}

impl SteadyStateMetrics {
    pub fn get(&self, c: Column) -> ColumnStats {
        self.stats.iter().find(|(k, _)| *k == c).map(|(_, s)| *s).expect("every column is summarized")
    }
}

/// Mean and maximum deviation of every column over the trailing `window` seconds.
pub fn steady_state_metrics(series: &TimeSeries, window: f64) -> Result<SteadyStateMetrics> {
    let (first, last) = match (series.samples.first(), series.samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(DsgError::EmptyTrajectory),
    };
    if !(window > 0.0) {
        return Err(invalid("window", format!("must be > 0, got {window}")));
    }
    let span = last.t - first.t;
    if window > span + 1e-12 {
        return Err(invalid("window", format!("{window} s exceeds the {span} s trace")));
    }
    let t0 = last.t - window * (1.0 + 1e-12);
    let tail: Vec<&Sample> = series.samples.iter().filter(|s| s.t >= t0).collect();
    let n = tail.len() as f64;
    let stats = Column::ALL
        .into_iter()
        .map(|c| {
            let mean = tail.iter().map(|s| c.of(s)).sum::<f64>() / n;
            let max_deviation = tail.iter().map(|s| (c.of(s) - mean).abs()).fold(0.0, f64::max);
            (c, ColumnStats { mean, max_deviation })
        })
        .collect();
    Ok(SteadyStateMetrics { window, stats })
}

/// Algebraic outputs of one right-hand-side evaluation.
#[derive(Debug, Clone, Copy)]
struct Outputs {
    op: OperatingPoint,
    i_d: f64,
    sign: u8,
    d_omega: f64,
    s: f64,
}

/// Mutable plant configuration: changes only at events.
#[derive(Debug, Clone, Copy)]
struct Plant {
    grid: GridParams,
    dsg: DsgParams,
    mode: Mode,
    load_z: Option<Phasor>,
}

impl Plant {
    fn operating_point(&self, delta_1: f64, i_d: f64) -> OperatingPoint {
        match (self.mode, self.load_z) {
            (Mode::Islanded, Some(z)) => island_point(i_d, z, delta_1),
            _ => {
                let (v_d, v_q) = grid_frame_voltage(i_d, delta_1, self.grid.u, self.grid.reactance());
                let p_e = v_d * i_d;
                let q_e = v_q * i_d;
                OperatingPoint {
                    p_e,
                    q_e,
                    v_d,
                    v_q,
                    v_mag: v_d.hypot(v_q),
                    phi: if p_e == 0.0 && q_e == 0.0 { 0.0 } else { q_e.atan2(p_e) },
                    delta_1,
                }
            }
        }
    }

    /// Converter current. With an ideal inner loop and a static V-I/Q-I
    /// gain this is the fixed point `I = clamp(I_nom + sec + K_V e(I))`.
    fn current(&self, state: &DsgState) -> f64 {
        let p = &self.dsg;
        if p.tau_i > 0.0 {
            return state.i_d;
        }
        if let QvLink::Inertial { .. } = p.qv_link {
            return (p.i_nom + state.sec + state.qv).clamp(0.0, p.i_max);
        }
        let map = |i: f64| {
            let op = self.operating_point(state.delta_1, i);
            current_reference(op.v_mag, op.q_e, p, state)
        };
        let mut i = (p.i_nom + state.sec).clamp(0.0, p.i_max);
        for _ in 0..100 {
            let next = map(i);
            if (next - i).abs() <= 1e-15 * next.abs().max(1.0) {
                return next;
            }
            i = next;
        }
        // contraction failed (large gain); the residual changes sign on [0, I_max]
        let residual = |i: f64| map(i) - i;
        let r0 = residual(0.0);
        if r0 <= 0.0 {
            return 0.0;
        }
        bisect(&residual, 0.0, r0, p.i_max, 1e-15)
    }

    fn braking_sign(&self, op: &OperatingPoint, latched: u8) -> u8 {
        // braking only makes sense against a grid
        if self.mode == Mode::Islanded || (op.p_e == 0.0 && op.q_e == 0.0) {
            return 0;
        }
        braking_sign_with_hysteresis(op.phi, self.dsg.phi_0, self.dsg.phi_hysteresis, latched)
    }

    fn outputs(&self, state: &DsgState, latched: u8) -> Outputs {
        let i_d = self.current(state);
        let op = self.operating_point(state.delta_1, i_d);
        let sign = self.braking_sign(&op, latched);
        let d_omega = match self.dsg.sync {
            SyncLoop::Proportional => frequency_deviation(op.p_e, op.v_q, sign, &self.dsg),
            SyncLoop::Inertial { .. } => state.d_omega,
        };
        Outputs {
            op,
            i_d,
            sign,
            d_omega,
            s: revised_power_seen(op.p_e, op.v_q, sign, &self.dsg),
        }
    }

    fn rate(&self, state: &DsgState, latched: u8) -> DsgState {
        let out = self.outputs(state, latched);
        let p = &self.dsg;
        let d_omega_rate = match p.sync {
            SyncLoop::Proportional => 0.0,
            SyncLoop::Inertial { .. } => {
                inertial_sync_derivative(out.op.p_e, out.op.v_q, out.sign, state.d_omega, p).unwrap_or(0.0)
            }
        };
        let i_star = current_reference(out.op.v_mag, out.op.q_e, p, state);
        DsgState {
            delta_1: delta_dot(out.d_omega, self.grid.f_base),
            d_omega: d_omega_rate,
            i_d: current_lag_derivative(state.i_d, i_star, p.tau_i).unwrap_or(0.0),
            qv: qv_link_derivative(out.op.v_mag, out.op.q_e, p, state),
            sec: if self.mode == Mode::Islanded {
                secondary_control_derivative(out.op.v_mag, p, state)
            } else {
                0.0
            },
        }
    }

    fn rk4_step(&self, y: &DsgState, h: f64, latched: u8) -> DsgState {
        let k1 = self.rate(y, latched);
        let k2 = self.rate(&y.advanced(&k1, 0.5 * h), latched);
        let k3 = self.rate(&y.advanced(&k2, 0.5 * h), latched);
        let k4 = self.rate(&y.advanced(&k3, h), latched);
        let mut next = *y;
        next.delta_1 += h / 6.0 * (k1.delta_1 + 2.0 * k2.delta_1 + 2.0 * k3.delta_1 + k4.delta_1);
        next.d_omega += h / 6.0 * (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega);
        next.i_d += h / 6.0 * (k1.i_d + 2.0 * k2.i_d + 2.0 * k3.i_d + k4.i_d);
        next.qv += h / 6.0 * (k1.qv + 2.0 * k2.qv + 2.0 * k3.qv + k4.qv);
        next.sec += h / 6.0 * (k1.sec + 2.0 * k2.sec + 2.0 * k3.sec + k4.sec);
        next
    }

    /// Overwrites the derived state fields after a step.
    fn settle_algebraic(&self, state: &mut DsgState, latched: u8) -> Outputs {
        let p = &self.dsg;
        if p.tau_i > 0.0 {
            state.i_d = state.i_d.clamp(0.0, p.i_max);
        }
        let out = self.outputs(state, latched);
        state.i_d = out.i_d;
        if p.sync == SyncLoop::Proportional {
            state.d_omega = out.d_omega;
        }
        out
    }

    fn apply(&mut self, kind: &EventKind) -> Result<()> {
        match *kind {
            EventKind::GridVoltageStep(u) => self.grid.u = u,
            EventKind::PowerRefStep(p) => self.dsg.p_ref = p,
            EventKind::VoltageRefStep(v) => self.dsg.v_ref = v,
            EventKind::SwitchToIsland(load) => {
                self.load_z = Some(load.impedance()?);
                self.mode = Mode::Islanded;
            }
            EventKind::ReconnectToGrid => self.mode = Mode::GridConnected,
        }
        Ok(())
    }
}

fn plant_of(scenario: &Scenario) -> Result<Plant> {
    Ok(Plant {
        grid: scenario.grid,
        dsg: scenario.dsg,
        mode: scenario.mode0,
        load_z: scenario.load.map(|l| l.impedance()).transpose()?,
    })
}

/// Pre-disturbance operating point: `delta_1` at the stable root of the
/// power-angle curve, `d_omega = 0`, current at its reference, integrators
/// zeroed. Islanded starts put `delta_1` at zero.
pub fn initial_equilibrium(scenario: &Scenario) -> Result<DsgState> {
    scenario.validate()?;
    let plant = plant_of(scenario)?;
    equilibrium_of(&plant)
}

fn equilibrium_of(plant: &Plant) -> Result<DsgState> {
    // the current is evaluated as if the inner loop were ideal
    let algebraic = Plant {
        dsg: DsgParams { tau_i: 0.0, ..plant.dsg },
        ..*plant
    };
    let mut state = DsgState::default();
    if plant.mode == Mode::Islanded {
        let out = algebraic.outputs(&state, 0);
        state.i_d = out.i_d;
        if plant.dsg.sync == SyncLoop::Proportional {
            state.d_omega = out.d_omega;
        }
        return Ok(state);
    }

    let p_ref = plant.dsg.p_ref;
    let u = plant.grid.u;
    let mut delta = 0.0;
    let mut i_d = algebraic.current(&state);
    for _ in 0..100 {
        let curve = BrakingCurveParams {
            p_m: u * i_d,
            k_pl: 0.0,
            u,
            x: plant.grid.reactance(),
            i_d,
            p_ref,
        };
        let stable = find_equilibria(p_ref, &curve, false)?
            .into_iter()
            .find(|e| e.stable)
            .ok_or(DsgError::NoEquilibrium { p_ref, p_max: u * i_d })?;
        delta = stable.delta_1;
        state.delta_1 = delta;
        let next = algebraic.current(&state);
        let converged = (next - i_d).abs() <= 1e-15;
        i_d = next;
        if converged {
            break;
        }
    }

    // Polish against the full closed loop, which may include braking.
    let residual = |d: f64| {
        let s = DsgState { delta_1: d, ..state };
        algebraic.outputs(&s, 0).d_omega
    };
    if residual(delta).abs() > 1e-14 {
        let h = 2.0 * PI / ROOT_GRID as f64;
        let mut best: Option<f64> = None;
        for k in 0..ROOT_GRID / 8 {
            for (a, b) in [(delta + h * k as f64, delta + h * (k + 1) as f64), (delta - h * (k + 1) as f64, delta - h * k as f64)] {
                let (fa, fb) = (residual(a), residual(b));
                // d_omega rising through zero is the attracting crossing
                if fa <= 0.0 && fb > 0.0 {
                    best = Some(bisect(&residual, a, fa, b, 1e-15));
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
        if let Some(d) = best {
            delta = d;
        }
    }
    state.delta_1 = delta;
    let out = algebraic.outputs(&state, 0);
    state.i_d = out.i_d;
    state.d_omega = match plant.dsg.sync {
        SyncLoop::Proportional => out.d_omega,
        SyncLoop::Inertial { .. } => 0.0,
    };
    Ok(state)
}

fn record(series: &mut TimeSeries, t: f64, state: &DsgState, out: &Outputs, f_base: f64) {
    series.push(Sample {
        t,
        delta_1: state.delta_1,
        freq: f_base * (1.0 + out.d_omega),
        p_e: out.op.p_e,
        q_e: out.op.q_e,
        v_mag: out.op.v_mag,
        i_d: out.i_d,
        sign: f64::from(out.sign),
        s: out.s,
    });
}

/// Runs a scenario to `t_end`. The first sample is the initial state; one
/// sample follows every step. Loss of synchronism is data, not an error.
pub fn integrate(scenario: &Scenario) -> Result<TimeSeries> {
    scenario.validate()?;
    let mut plant = plant_of(scenario)?;
    let mut state = match scenario.init {
        InitialState::AtEquilibrium => equilibrium_of(&plant)?,
        InitialState::Explicit(s) => s,
    };
    let dt = scenario.dt;
    let steps = scenario.steps();
    let f_base = scenario.grid.f_base;
    let mut series = TimeSeries::with_capacity(steps + 1, f_base);

    let mut out = plant.settle_algebraic(&mut state, 0);
    let mut latched = out.sign;
    record(&mut series, 0.0, &state, &out, f_base);

    let mut events = scenario.events.iter().peekable();
    for k in 0..steps {
        while let Some(e) = events.next_if(|e| (e.t / dt).round() as usize <= k) {
            plant.apply(&e.kind)?;
        }
        let t_next = (k + 1) as f64 * dt;
        state = plant.rk4_step(&state, dt, latched);
        if !state.is_finite() {
            return Err(DsgError::NonFinite { t: t_next, what: "controller state" });
        }
        out = plant.settle_algebraic(&mut state, latched);
        latched = out.sign;
        if !(out.op.p_e.is_finite() && out.op.q_e.is_finite() && out.op.v_mag.is_finite()) {
            return Err(DsgError::NonFinite { t: t_next, what: "circuit quantities" });
        }
        record(&mut series, t_next, &state, &out, f_base);
    }
    Ok(series)
}
