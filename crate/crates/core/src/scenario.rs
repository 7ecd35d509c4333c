//! Scenario files and the four reference design examples.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "design2"
//!
//! [plant]              # any omitted key takes the reference value
//! c_o = 1.1e-3
//!
//! [design]             # or [gains] with k_p, t_i and optional t_f
//! scheme = "improved"
//! phase_margin_deg = 45.0
//! bandwidth_hz = 12.93
//!
//! [simulation]
//! t_end = 3.0
//!
//! [[events]]
//! time = 1.0
//! resistor_ohms = 166.67
//!
//! [[events]]
//! time = 2.0           # no load key: disconnect
//!
//! [analysis]
//! harmonic_start = 1.6
//! harmonic_cycles = 20
//! transient_start = 2.0
//! transient_end = 3.0
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{
    bandwidth_for_attenuation, beta_from_phase_margin, design, xi_from_phase_margin, ControllerGains, DesignPoint,
    Scheme, SchemeKind, VscParams,
};
use crate::error::{Error, Result};
use crate::sim::{CurrentLoop, Load, LoadEvent, SimConfig};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Plant overrides; missing keys take [`VscParams::reference`] values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub v_s_rms: Option<f64>,
    pub f_s_hz: Option<f64>,
    pub v_o_ref: Option<f64>,
    pub c_o: Option<f64>,
    pub l_s: Option<f64>,
    pub r_s: Option<f64>,
    pub p_o_max: Option<f64>,
    pub q_max: Option<f64>,
    pub f_sw: Option<f64>,
}

impl PlantSection {
    pub fn resolve(&self) -> Result<VscParams> {
        let r = VscParams::reference();
        let p = VscParams {
            v_s_rms: self.v_s_rms.unwrap_or(r.v_s_rms),
            omega_s: self.f_s_hz.map_or(r.omega_s, |f| 2.0 * PI * f),
            v_o_ref: self.v_o_ref.unwrap_or(r.v_o_ref),
            c_o: self.c_o.unwrap_or(r.c_o),
            l_s: self.l_s.unwrap_or(r.l_s),
            r_s: self.r_s.unwrap_or(r.r_s),
            p_o_max: self.p_o_max.unwrap_or(r.p_o_max),
            q_max: self.q_max.unwrap_or(r.q_max),
            f_sw: self.f_sw.unwrap_or(r.f_sw),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantFile {
    #[serde(default)]
    plant: PlantSection,
}

/// Reads a plant file: a TOML document with an optional `[plant]` table.
pub fn load_plant(path: &Path) -> Result<VscParams> {
    let text = read(path)?;
    let f: PlantFile = toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    f.plant.resolve()
}

/// Design request: a scheme, one shape parameter and one bandwidth source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub scheme: SchemeKind,
    pub phase_margin_deg: Option<f64>,
    pub beta: Option<f64>,
    pub xi: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    /// Third-harmonic target, percent of fundamental.
    pub target_i3_pct: Option<f64>,
}

impl DesignSpec {
    pub fn resolve_scheme(&self) -> Result<Scheme> {
        let scheme = match (self.scheme, self.phase_margin_deg, self.beta, self.xi) {
            (kind, Some(pm), None, None) => kind.at_phase_margin(pm)?,
            (SchemeKind::Improved, None, Some(beta), None) => Scheme::Improved { beta },
            (SchemeKind::Conventional, None, None, Some(xi)) => Scheme::Conventional { xi },
            _ => {
                let shape = match self.scheme {
                    SchemeKind::Improved => "phase_margin_deg or beta",
                    SchemeKind::Conventional => "phase_margin_deg or xi",
                };
                return Err(config_err(format!("give exactly one of {shape}")));
            }
        };
        scheme.phase_margin()?;
        Ok(scheme)
    }

    pub fn resolve(&self, plant: &VscParams) -> Result<DesignPoint> {
        let scheme = self.resolve_scheme()?;
        let omega_n = match (self.bandwidth_hz, self.target_i3_pct) {
            (Some(f), None) => 2.0 * PI * f,
            (None, Some(pct)) => bandwidth_for_attenuation(scheme, plant.omega_s, pct / 50.0)?,
            _ => return Err(config_err("give exactly one of bandwidth_hz or target_i3_pct")),
        };
        design(plant, scheme, omega_n)
    }
}

/// Simulation settings; missing keys take the [`SimConfig::new`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub voltage_loop_rate_hz: Option<f64>,
    pub sim_dt: Option<f64>,
    pub v_o_init: Option<f64>,
    pub i_q_ref: Option<f64>,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub i_p_max: Option<f64>,
    /// `"ideal"` or `"first_order"`.
    pub current_loop: Option<String>,
    /// First-order current-loop bandwidth, rad/s.
    pub current_loop_bandwidth: Option<f64>,
    pub linear_ripple: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub time: f64,
    pub resistor_ohms: Option<f64>,
    pub constant_power_w: Option<f64>,
}

impl EventSection {
    fn resolve(&self) -> Result<LoadEvent> {
        let load = match (self.resistor_ohms, self.constant_power_w) {
            (None, None) => Load::None,
            (Some(ohms), None) => Load::Resistor { ohms },
            (None, Some(watts)) => Load::ConstantPower { watts },
            _ => return Err(config_err(format!("event at {} s sets two loads", self.time))),
        };
        Ok(LoadEvent { time: self.time, load })
    }
}

/// Post-processing windows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    /// Start of the steady-state harmonic window, s.
    pub harmonic_start: Option<f64>,
    /// Harmonic window length in line cycles.
    pub harmonic_cycles: Option<usize>,
    /// Window for the transient metrics, s.
    pub transient_start: Option<f64>,
    pub transient_end: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    #[serde(default)]
    plant: PlantSection,
    design: Option<DesignSpec>,
    gains: Option<ControllerGains>,
    #[serde(default)]
    simulation: SimulationSection,
    #[serde(default)]
    events: Vec<EventSection>,
    #[serde(default)]
    analysis: Analysis,
}

/// A resolved, runnable scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    /// Present when the gains came from a design section.
    pub design: Option<DesignPoint>,
    pub analysis: Analysis,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let plant = f.plant.resolve()?;
        let (gains, design) = match (f.design, f.gains) {
            (Some(spec), None) => {
                let dp = spec.resolve(&plant)?;
                (dp.gains, Some(dp))
            }
            (None, Some(g)) => (g, None),
            _ => return Err(config_err("give exactly one of [design] or [gains]")),
        };
        let mut cfg = SimConfig::new(plant, gains);
        let s = &f.simulation;
        if let Some(v) = s.voltage_loop_rate_hz {
            cfg.voltage_loop_rate = v;
        }
        if let Some(v) = s.sim_dt {
            cfg.sim_dt = v;
        }
        if let Some(v) = s.v_o_init {
            cfg.v_o_init = v;
        }
        if let Some(v) = s.i_q_ref {
            cfg.i_q_ref = v;
        }
        if let Some(v) = s.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = s.dt_out {
            cfg.dt_out = v;
        }
        if let Some(v) = s.i_p_max {
            cfg.i_p_max = v;
        }
        if let Some(v) = s.linear_ripple {
            cfg.linear_ripple = v;
        }
        cfg.current_loop = match (s.current_loop.as_deref(), s.current_loop_bandwidth) {
            (None | Some("ideal"), None) => CurrentLoop::Ideal,
            (Some("first_order"), None) => CurrentLoop::first_order_default(),
            (Some("first_order"), Some(bandwidth)) => CurrentLoop::FirstOrder { bandwidth },
            (Some(other), _) if other != "ideal" && other != "first_order" => {
                return Err(config_err(format!("unknown current_loop '{other}'")))
            }
            _ => {
                return Err(config_err(
                    "current_loop_bandwidth needs current_loop = \"first_order\"",
                ))
            }
        };
        cfg.events = f.events.iter().map(EventSection::resolve).collect::<Result<_>>()?;
        cfg.validate()?;
        Ok(Self {
            name: f.name.unwrap_or_else(|| "scenario".into()),
            config: cfg,
            design,
            analysis: f.analysis,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Reference load of the disconnect scenario, ohm (960 W at 400 V).
pub const REFERENCE_LOAD_OHMS: f64 = 166.67;
pub const LOAD_CONNECT_TIME: f64 = 1.0;
pub const LOAD_DISCONNECT_TIME: f64 = 2.0;
pub const SCENARIO_END: f64 = 3.0;

/// One of the four reference designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignExample {
    pub id: u8,
    pub plant: VscParams,
    pub design: DesignPoint,
}

/// Reference designs, all at a 45 deg phase margin:
///
/// 1. conventional, 4.75 Hz, 1.1 mF
/// 2. improved, 12.93 Hz, 1.1 mF
/// 3. conventional, 8.85 Hz, 1.1 mF
/// 4. improved, 12.93 Hz, 0.68 mF
pub fn design_example(id: u8) -> Result<DesignExample> {
    let (kind, f_n, c_o) = match id {
        1 => (SchemeKind::Conventional, 4.75, 1.1e-3),
        2 => (SchemeKind::Improved, 12.93, 1.1e-3),
        3 => (SchemeKind::Conventional, 8.85, 1.1e-3),
        4 => (SchemeKind::Improved, 12.93, 0.68e-3),
        _ => return Err(crate::error::invalid(format!("design examples are 1 to 4, got {id}"))),
    };
    let plant = VscParams::reference().with_capacitance(c_o);
    let scheme = match kind {
        SchemeKind::Conventional => Scheme::Conventional {
            xi: xi_from_phase_margin(45.0)?,
        },
        SchemeKind::Improved => Scheme::Improved {
            beta: beta_from_phase_margin(45.0)?,
        },
    };
    Ok(DesignExample {
        id,
        plant,
        design: design(&plant, scheme, 2.0 * PI * f_n)?,
    })
}

/// Startup from the line peak, 166.67 ohm connected at 1 s and removed at 2 s.
pub fn disconnect_scenario(ex: &DesignExample) -> Scenario {
    let mut cfg = SimConfig::new(ex.plant, ex.design.gains);
    cfg.t_end = SCENARIO_END;
    cfg.events = vec![
        LoadEvent {
            time: LOAD_CONNECT_TIME,
            load: Load::Resistor {
                ohms: REFERENCE_LOAD_OHMS,
            },
        },
        LoadEvent {
            time: LOAD_DISCONNECT_TIME,
            load: Load::None,
        },
    ];
    Scenario {
        name: format!("design{}", ex.id),
        config: cfg,
        design: Some(ex.design),
        analysis: Analysis {
            harmonic_start: Some(1.6),
            harmonic_cycles: Some(20),
            transient_start: Some(LOAD_DISCONNECT_TIME),
            transient_end: Some(SCENARIO_END),
        },
    }
}
