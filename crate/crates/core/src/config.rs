//! Line-oriented scenario configuration.
//!
//! ```text
//! # comment
//! base = fig6b
//! grid.u = 1
//! dsg.k_q = 0.06
//! events[0].t = 1
//! events[0].kind = grid_voltage
//! events[0].value = 0.6
//! ```
//!
//! Omitted keys keep the value of the base scenario (the defaults unless
//! `base` names a built-in). Unknown keys, duplicate keys, and keys that do
//! not apply to the selected variant are errors carrying the line number.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::circuit::LoadParams;
use crate::control::{QvFeedback, QvLink, SyncLoop};
use crate::error::{DsgError, Result};
use crate::scenarios;
use crate::sim::{Event, EventKind, InitialState, Mode, Scenario};

/// Every scalar key accepted outside `events[n].*`.
pub const KEYS: [&str; 36] = [
    "base",
    "grid.u",
    "grid.x_line",
    "grid.x_g",
    "grid.f_base",
    "dsg.k_p",
    "dsg.k_q",
    "dsg.k_v",
    "dsg.phi_0",
    "dsg.phi_hysteresis",
    "dsg.i_max",
    "dsg.i_nom",
    "dsg.v_ref",
    "dsg.p_ref",
    "dsg.q_ref",
    "dsg.sync",
    "dsg.j",
    "dsg.d",
    "dsg.qv_feedback",
    "dsg.qv_link",
    "dsg.j_q",
    "dsg.d_q",
    "dsg.tau_i",
    "dsg.k_sec",
    "load.p",
    "load.q",
    "scenario.t_end",
    "scenario.dt",
    "scenario.mode",
    "scenario.init",
    "init.delta_1",
    "init.d_omega",
    "init.i_d",
    "init.qv",
    "init.sec",
    "events.count",
];

/// Keys accepted under `events[n].`.
pub const EVENT_KEYS: [&str; 5] = ["t", "kind", "value", "load_p", "load_q"];

/// Origin of a setting, used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Line(usize),
    Override(usize),
}

impl Origin {
    fn line(self) -> usize {
        match self {
            Origin::Line(n) => n,
            Origin::Override(_) => 0,
        }
    }

    fn error(self, message: impl Into<String>) -> DsgError {
        let message = message.into();
        match self {
            Origin::Line(line) => DsgError::Config { line, message },
            Origin::Override(k) => DsgError::Config {
                line: 0,
                message: format!("override #{}: {message}", k + 1),
            },
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    origin: Origin,
}

fn split_line(raw: &str, origin: Origin) -> Result<Option<Entry>> {
    let line = match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    }
    .trim();
    if line.is_empty() {
        return Ok(None);
    }
    let Some((key, value)) = line.split_once('=') else {
        return Err(origin.error(format!("expected `key = value`, got `{line}`")));
    };
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(origin.error("missing key before `=`"));
    }
    if value.is_empty() {
        return Err(origin.error(format!("missing value for `{key}`")));
    }
    Ok(Some(Entry {
        key: key.to_string(),
        value: value.to_string(),
        origin,
    }))
}

fn collect(text: &str, overrides: &[String]) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let Some(entry) = split_line(raw, Origin::Line(n + 1))? else {
            continue;
        };
        if let Some(&first) = seen.get(&entry.key) {
            return Err(entry.origin.error(format!(
                "duplicate key `{}` (first set on line {})",
                entry.key,
                entries[first].origin.line()
            )));
        }
        seen.insert(entry.key.clone(), entries.len());
        entries.push(entry);
    }
    for (k, raw) in overrides.iter().enumerate() {
        let origin = Origin::Override(k);
        let Some(entry) = split_line(raw, origin)? else {
            return Err(origin.error("empty override"));
        };
        match seen.get(&entry.key) {
            Some(&i) => entries[i] = entry,
            None => {
                seen.insert(entry.key.clone(), entries.len());
                entries.push(entry);
            }
        }
    }
    Ok(entries)
}

fn number(e: &Entry) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| e.origin.error(format!("`{}`: expected a number, got `{}`", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(e.origin.error(format!("`{}`: value must be finite", e.key)));
    }
    Ok(v)
}

fn count(e: &Entry) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| e.origin.error(format!("`{}`: expected a non-negative integer, got `{}`", e.key, e.value)))
}

fn choice<'a>(e: &Entry, options: &[&'a str]) -> Result<&'a str> {
    options.iter().copied().find(|o| *o == e.value).ok_or_else(|| {
        e.origin
            .error(format!("`{}`: expected one of {}, got `{}`", e.key, options.join(" | "), e.value))
    })
}

fn event_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix("events[")?;
    let (index, field) = rest.split_once("].")?;
    if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((index.parse().ok()?, field))
}

const EVENT_KINDS: [&str; 5] = ["grid_voltage", "power_ref", "voltage_ref", "island", "reconnect"];

#[derive(Debug, Clone, Default)]
struct EventDraft {
    t: Option<f64>,
    kind: Option<&'static str>,
    value: Option<f64>,
    load_p: Option<f64>,
    load_q: Option<f64>,
    origin: Option<Origin>,
    explicit_value: Option<Origin>,
    explicit_load: Option<Origin>,
}

impl EventDraft {
    fn from_event(e: &Event) -> Self {
        let mut d = EventDraft {
            t: Some(e.t),
            ..Default::default()
        };
        match e.kind {
            EventKind::GridVoltageStep(v) => {
                d.kind = Some("grid_voltage");
                d.value = Some(v);
            }
            EventKind::PowerRefStep(v) => {
                d.kind = Some("power_ref");
                d.value = Some(v);
            }
            EventKind::VoltageRefStep(v) => {
                d.kind = Some("voltage_ref");
                d.value = Some(v);
            }
            EventKind::SwitchToIsland(load) => {
                d.kind = Some("island");
                d.load_p = Some(load.p);
                d.load_q = Some(load.q);
            }
            EventKind::ReconnectToGrid => d.kind = Some("reconnect"),
        }
        d
    }

    fn build(&self, index: usize) -> Result<Event> {
        let here = self.origin.unwrap_or(Origin::Line(0));
        let missing = |field: &str| here.error(format!("events[{index}].{field} is required"));
        let t = self.t.ok_or_else(|| missing("t"))?;
        let kind = self.kind.ok_or_else(|| missing("kind"))?;
        let uses_value = matches!(kind, "grid_voltage" | "power_ref" | "voltage_ref");
        if !uses_value {
            if let Some(o) = self.explicit_value {
                return Err(o.error(format!("events[{index}].value does not apply to kind `{kind}`")));
            }
        }
        if kind != "island" {
            if let Some(o) = self.explicit_load {
                return Err(o.error(format!("events[{index}].load_p/load_q only apply to kind `island`")));
            }
        }
        let kind = match kind {
            "grid_voltage" => EventKind::GridVoltageStep(self.value.ok_or_else(|| missing("value"))?),
            "power_ref" => EventKind::PowerRefStep(self.value.ok_or_else(|| missing("value"))?),
            "voltage_ref" => EventKind::VoltageRefStep(self.value.ok_or_else(|| missing("value"))?),
            "island" => EventKind::SwitchToIsland(LoadParams {
                p: self.load_p.ok_or_else(|| missing("load_p"))?,
                q: self.load_q.unwrap_or(0.0),
            }),
            _ => EventKind::ReconnectToGrid,
        };
        Ok(Event { t, kind })
    }
}

/// Build a scenario from config text.
pub fn parse_config(text: &str) -> Result<Scenario> {
    parse_config_with_overrides(text, &[])
}

/// Build a scenario from config text plus `key = value` overrides that take
/// precedence over the text.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario> {
    let entries = collect(text, overrides)?;

    let mut sc = match entries.iter().find(|e| e.key == "base") {
        Some(e) => scenarios::builtin(&e.value).map_err(|_| {
            e.origin.error(format!(
                "`base`: unknown built-in `{}` (expected one of {})",
                e.value,
                scenarios::BUILTIN_NAMES.join(", ")
            ))
        })?,
        None => Scenario::default(),
    };

    let (mut j, mut d) = match sc.dsg.sync {
        SyncLoop::Inertial { j, d } => (Some(j), Some(d)),
        SyncLoop::Proportional => (None, None),
    };
    let (mut j_q, mut d_q) = match sc.dsg.qv_link {
        QvLink::Inertial { j_q, d_q } => (Some(j_q), Some(d_q)),
        QvLink::Proportional => (None, None),
    };
    let mut inertial_sync = matches!(sc.dsg.sync, SyncLoop::Inertial { .. });
    let mut inertial_link = matches!(sc.dsg.qv_link, QvLink::Inertial { .. });
    let mut sync_keys: Vec<&Entry> = Vec::new();
    let mut link_keys: Vec<&Entry> = Vec::new();
    let mut init_keys: Vec<&Entry> = Vec::new();
    let (mut load_p, mut load_q) = match sc.load {
        Some(l) => (Some(l.p), Some(l.q)),
        None => (None, None),
    };
    let mut explicit = match sc.init {
        InitialState::Explicit(s) => Some(s),
        InitialState::AtEquilibrium => None,
    };
    let mut init_state = explicit.unwrap_or_default();
    let mut drafts: Vec<EventDraft> = sc.events.iter().map(EventDraft::from_event).collect();
    let mut event_count: Option<(usize, Origin)> = None;
    let mut lines: HashMap<&'static str, Origin> = HashMap::new();

    for e in &entries {
        if let Some((index, field)) = event_key(&e.key) {
            if index >= drafts.len() {
                drafts.resize(index + 1, EventDraft::default());
            }
            let draft = &mut drafts[index];
            draft.origin.get_or_insert(e.origin);
            match field {
                "t" => draft.t = Some(number(e)?),
                "kind" => draft.kind = Some(choice(e, &EVENT_KINDS)?),
                "value" => {
                    draft.value = Some(number(e)?);
                    draft.explicit_value = Some(e.origin);
                }
                "load_p" => {
                    draft.load_p = Some(number(e)?);
                    draft.explicit_load = Some(e.origin);
                }
                "load_q" => {
                    draft.load_q = Some(number(e)?);
                    draft.explicit_load = Some(e.origin);
                }
                _ => {
                    return Err(e.origin.error(format!(
                        "unknown key `{}` (event fields: {})",
                        e.key,
                        EVENT_KEYS.join(", ")
                    )))
                }
            }
            continue;
        }
        let Some(&key) = KEYS.iter().find(|k| **k == e.key) else {
            return Err(e.origin.error(format!("unknown key `{}`", e.key)));
        };
        lines.insert(key, e.origin);
        let g = &mut sc.grid;
        let p = &mut sc.dsg;
        match key {
            "base" => {}
            "grid.u" => g.u = number(e)?,
            "grid.x_line" => g.x_line = number(e)?,
            "grid.x_g" => g.x_g = number(e)?,
            "grid.f_base" => g.f_base = number(e)?,
            "dsg.k_p" => p.k_p = number(e)?,
            "dsg.k_q" => p.k_q = number(e)?,
            "dsg.k_v" => p.k_v = number(e)?,
            "dsg.phi_0" => p.phi_0 = number(e)?,
            "dsg.phi_hysteresis" => p.phi_hysteresis = number(e)?,
            "dsg.i_max" => p.i_max = number(e)?,
            "dsg.i_nom" => p.i_nom = number(e)?,
            "dsg.v_ref" => p.v_ref = number(e)?,
            "dsg.p_ref" => p.p_ref = number(e)?,
            "dsg.q_ref" => p.q_ref = number(e)?,
            "dsg.sync" => inertial_sync = choice(e, &["proportional", "inertial"])? == "inertial",
            "dsg.j" => {
                j = Some(number(e)?);
                sync_keys.push(e);
            }
            "dsg.d" => {
                d = Some(number(e)?);
                sync_keys.push(e);
            }
            "dsg.qv_feedback" => {
                p.qv_feedback = match choice(e, &["voltage", "reactive"])? {
                    "voltage" => QvFeedback::Voltage,
                    _ => QvFeedback::Reactive,
                }
            }
            "dsg.qv_link" => inertial_link = choice(e, &["proportional", "inertial"])? == "inertial",
            "dsg.j_q" => {
                j_q = Some(number(e)?);
                link_keys.push(e);
            }
            "dsg.d_q" => {
                d_q = Some(number(e)?);
                link_keys.push(e);
            }
            "dsg.tau_i" => p.tau_i = number(e)?,
            "dsg.k_sec" => p.k_sec = number(e)?,
            "load.p" => load_p = Some(number(e)?),
            "load.q" => load_q = Some(number(e)?),
            "scenario.t_end" => sc.t_end = number(e)?,
            "scenario.dt" => sc.dt = number(e)?,
            "scenario.mode" => {
                sc.mode0 = match choice(e, &["grid", "island"])? {
                    "grid" => Mode::GridConnected,
                    _ => Mode::Islanded,
                }
            }
            "scenario.init" => {
                explicit = match choice(e, &["equilibrium", "explicit"])? {
                    "explicit" => Some(init_state),
                    _ => None,
                }
            }
            "init.delta_1" | "init.d_omega" | "init.i_d" | "init.qv" | "init.sec" => {
                let v = number(e)?;
                match key {
                    "init.delta_1" => init_state.delta_1 = v,
                    "init.d_omega" => init_state.d_omega = v,
                    "init.i_d" => init_state.i_d = v,
                    "init.qv" => init_state.qv = v,
                    _ => init_state.sec = v,
                }
                init_keys.push(e);
            }
            "events.count" => event_count = Some((count(e)?, e.origin)),
            _ => unreachable!("key list and match arms disagree on `{key}`"),
        }
    }

    sc.dsg.sync = if inertial_sync {
        let here = lines.get("dsg.sync").copied().unwrap_or(Origin::Line(0));
        SyncLoop::Inertial {
            j: j.ok_or_else(|| here.error("dsg.sync = inertial needs dsg.j"))?,
            d: d.ok_or_else(|| here.error("dsg.sync = inertial needs dsg.d"))?,
        }
    } else {
        if let Some(e) = sync_keys.first() {
            return Err(e.origin.error(format!("`{}` only applies to dsg.sync = inertial", e.key)));
        }
        SyncLoop::Proportional
    };
    sc.dsg.qv_link = if inertial_link {
        let here = lines.get("dsg.qv_link").copied().unwrap_or(Origin::Line(0));
        QvLink::Inertial {
            j_q: j_q.ok_or_else(|| here.error("dsg.qv_link = inertial needs dsg.j_q"))?,
            d_q: d_q.ok_or_else(|| here.error("dsg.qv_link = inertial needs dsg.d_q"))?,
        }
    } else {
        if let Some(e) = link_keys.first() {
            return Err(e.origin.error(format!("`{}` only applies to dsg.qv_link = inertial", e.key)));
        }
        QvLink::Proportional
    };

    sc.load = match (load_p, load_q) {
        (None, None) => None,
        (p, q) => Some(LoadParams {
            p: p.unwrap_or(0.0),
            q: q.unwrap_or(0.0),
        }),
    };

    sc.init = match explicit {
        Some(_) => InitialState::Explicit(init_state),
        None => {
            if let Some(e) = init_keys.first() {
                return Err(e.origin.error(format!("`{}` needs scenario.init = explicit", e.key)));
            }
            InitialState::AtEquilibrium
        }
    };

    if let Some((n, origin)) = event_count {
        if let Some((i, d)) = drafts.iter().enumerate().skip(n).find(|(_, d)| d.origin.is_some()) {
            return Err(d.origin.unwrap_or(origin).error(format!("events[{i}] is beyond events.count = {n}")));
        }
        drafts.truncate(n);
        if drafts.len() < n {
            return Err(origin.error(format!("events.count = {n} but only {} events are defined", drafts.len())));
        }
    }
    sc.events = drafts.iter().enumerate().map(|(i, d)| d.build(i)).collect::<Result<_>>()?;

    sc.validate().map_err(|err| match err {
        DsgError::InvalidParameter { name, reason } => {
            let origin = lines.get(name).copied().or_else(|| {
                if name.starts_with("events") {
                    drafts.iter().find_map(|d| d.origin)
                } else if name == "load" {
                    lines.get("load.p").or(lines.get("scenario.mode")).copied()
                } else {
                    None
                }
            });
            match origin {
                Some(o) => o.error(format!("invalid `{name}`: {reason}")),
                None => DsgError::InvalidParameter { name, reason },
            }
        }
        other => other,
    })?;
    Ok(sc)
}

/// Render a scenario as config text that parses back to the same value.
pub fn serialize(sc: &Scenario) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k} = {v}");
    };
    let g = &sc.grid;
    kv("grid.u", &g.u);
    kv("grid.x_line", &g.x_line);
    kv("grid.x_g", &g.x_g);
    kv("grid.f_base", &g.f_base);
    let p = &sc.dsg;
    kv("dsg.k_p", &p.k_p);
    kv("dsg.k_q", &p.k_q);
    kv("dsg.k_v", &p.k_v);
    kv("dsg.phi_0", &p.phi_0);
    kv("dsg.phi_hysteresis", &p.phi_hysteresis);
    kv("dsg.i_max", &p.i_max);
    kv("dsg.i_nom", &p.i_nom);
    kv("dsg.v_ref", &p.v_ref);
    kv("dsg.p_ref", &p.p_ref);
    kv("dsg.q_ref", &p.q_ref);
    match p.sync {
        SyncLoop::Proportional => kv("dsg.sync", &"proportional"),
        SyncLoop::Inertial { j, d } => {
            kv("dsg.sync", &"inertial");
            kv("dsg.j", &j);
            kv("dsg.d", &d);
        }
    }
    kv(
        "dsg.qv_feedback",
        &match p.qv_feedback {
            QvFeedback::Voltage => "voltage",
            QvFeedback::Reactive => "reactive",
        },
    );
    match p.qv_link {
        QvLink::Proportional => kv("dsg.qv_link", &"proportional"),
        QvLink::Inertial { j_q, d_q } => {
            kv("dsg.qv_link", &"inertial");
            kv("dsg.j_q", &j_q);
            kv("dsg.d_q", &d_q);
        }
    }
    kv("dsg.tau_i", &p.tau_i);
    kv("dsg.k_sec", &p.k_sec);
    if let Some(load) = sc.load {
        kv("load.p", &load.p);
        kv("load.q", &load.q);
    }
    kv("scenario.t_end", &sc.t_end);
    kv("scenario.dt", &sc.dt);
    kv(
        "scenario.mode",
        &match sc.mode0 {
            Mode::GridConnected => "grid",
            Mode::Islanded => "island",
        },
    );
    match sc.init {
        InitialState::AtEquilibrium => kv("scenario.init", &"equilibrium"),
        InitialState::Explicit(s) => {
            kv("scenario.init", &"explicit");
            kv("init.delta_1", &s.delta_1);
            kv("init.d_omega", &s.d_omega);
            kv("init.i_d", &s.i_d);
            kv("init.qv", &s.qv);
            kv("init.sec", &s.sec);
        }
    }
    kv("events.count", &sc.events.len());
    for (i, e) in sc.events.iter().enumerate() {
        let key = |f: &str| format!("events[{i}].{f}");
        kv(&key("t"), &e.t);
        match e.kind {
            EventKind::GridVoltageStep(v) => {
                kv(&key("kind"), &"grid_voltage");
                kv(&key("value"), &v);
            }
            EventKind::PowerRefStep(v) => {
                kv(&key("kind"), &"power_ref");
                kv(&key("value"), &v);
            }
            EventKind::VoltageRefStep(v) => {
                kv(&key("kind"), &"voltage_ref");
                kv(&key("value"), &v);
            }
            EventKind::SwitchToIsland(load) => {
                kv(&key("kind"), &"island");
                kv(&key("load_p"), &load.p);
                kv(&key("load_q"), &load.q);
            }
            EventKind::ReconnectToGrid => kv(&key("kind"), &"reconnect"),
        }
    }
    out
}

/// The default scenario as config text.
pub fn defaults_text() -> String {
    serialize(&Scenario::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        assert_eq!(parse_config("").unwrap(), Scenario::default());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), Scenario::default());
    }

    #[test]
    fn base_builtin_with_no_other_keys() {
        let sc = parse_config("base = fig6b\n").unwrap();
        assert_eq!(sc, scenarios::builtin("fig6b").unwrap());
        assert_eq!(sc.events.len(), 2);
        assert_eq!(sc.events[0].kind, EventKind::GridVoltageStep(0.6));
        assert_eq!(sc.events[1].kind, EventKind::GridVoltageStep(1.0));
        assert_eq!(sc.dsg.p_ref, 0.8);
        assert_eq!(sc.dsg.k_q, 0.06);
    }

    #[test]
    fn override_k_q_turns_fig6b_into_fig6a() {
        let sc = parse_config_with_overrides("base = fig6b", &["dsg.k_q=0".to_string()]).unwrap();
        assert_eq!(sc, scenarios::builtin("fig6a").unwrap());
    }

    #[test]
    fn coarse_dt_is_rejected_with_its_line() {
        let err = parse_config("grid.u = 1\nscenario.dt = 0.01\n").unwrap_err();
        match err {
            DsgError::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("scenario.dt"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_keys_are_errors() {
        let err = parse_config("grid.u = 1\n\ndsg.kp = 0.02\n").unwrap_err();
        assert!(matches!(err, DsgError::Config { line: 3, .. }), "{err}");
        let err = parse_config("grid.u = 1\ngrid.u = 0.9\n").unwrap_err();
        assert!(matches!(err, DsgError::Config { line: 2, .. }), "{err}");
        assert!(parse_config("events[0].colour = red").is_err());
        assert!(parse_config("grid.u 1").is_err());
        assert!(parse_config("grid.u = nan").is_err());
        assert!(parse_config("base = fig7").is_err());
    }

    #[test]
    fn variant_specific_keys_are_checked() {
        assert!(parse_config("dsg.j = 1").is_err());
        assert!(parse_config("dsg.sync = inertial\ndsg.j = 1").is_err());
        let sc = parse_config("dsg.sync = inertial\ndsg.j = 1\ndsg.d = 50").unwrap();
        assert_eq!(sc.dsg.sync, SyncLoop::Inertial { j: 1.0, d: 50.0 });
        assert!(parse_config("init.delta_1 = 0.3").is_err());
        let sc = parse_config("scenario.init = explicit\ninit.delta_1 = 0.3\ninit.i_d = 1").unwrap();
        assert!(matches!(sc.init, InitialState::Explicit(s) if s.delta_1 == 0.3 && s.i_d == 1.0));
    }

    #[test]
    fn events_build_and_truncate() {
        let text = "scenario.t_end = 3\nevents[0].t = 1\nevents[0].kind = power_ref\nevents[0].value = 0.5\n\
                    events[1].t = 2\nevents[1].kind = island\nevents[1].load_p = 1\n";
        let sc = parse_config(text).unwrap();
        assert_eq!(sc.events[0], Event { t: 1.0, kind: EventKind::PowerRefStep(0.5) });
        assert_eq!(
            sc.events[1],
            Event {
                t: 2.0,
                kind: EventKind::SwitchToIsland(LoadParams { p: 1.0, q: 0.0 })
            }
        );
        assert!(parse_config("events[0].t = 1\nevents[0].kind = reconnect\nevents[0].value = 1").is_err());
        assert!(parse_config("events[1].t = 1\nevents[1].kind = reconnect").is_err());
        let sc = parse_config("base = fig6b\nevents.count = 1").unwrap();
        assert_eq!(sc.events.len(), 1);
        let sc = parse_config("base = fig6b\nevents[0].value = 0.7").unwrap();
        assert_eq!(sc.events[0].kind, EventKind::GridVoltageStep(0.7));
    }

    #[test]
    fn serialize_round_trips_builtins() {
        for name in scenarios::BUILTIN_NAMES {
            let sc = scenarios::builtin(name).unwrap();
            assert_eq!(parse_config(&serialize(&sc)).unwrap(), sc, "{name}");
        }
    }

    #[test]
    fn defaults_dump_is_stable() {
        assert_eq!(defaults_text(), defaults_text());
        assert!(defaults_text().contains("dsg.k_p = 0.02\n"));
        assert!(defaults_text().contains("grid.x_g = 0.06\n"));
    }
}
