//! Run configuration: TOML file plus `--set key=value` overrides.
//!
//! Parameter keys carry their unit in the name and are converted to SI and
//! rad/s here. Frequencies marked `_over_2pi_mhz` are multiplied by 2π·10⁶;
//! detunings marked `_over_wphi` are multiples of `ω_φ2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dlgc::model::{DetuningMode, PhysicalParams};
use dlgc::sweep::{Axis, AxisParam, Measure};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

impl Format {
    pub fn parse_list(s: &str) -> Result<Vec<Format>, CliError> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let f = match item {
                "csv" => Format::Csv,
                "svg" => Format::Svg,
                other => return Err(CliError::Config(format!("unknown output format `{other}`"))),
            };
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("no output formats given".into()));
        }
        Ok(out)
    }
}

/// What kind of value a key takes and how it lands in [`PhysicalParams`].
#[derive(Debug, Clone, Copy)]
enum Key {
    MirrorRadiusUm,
    Oam,
    PowerMw(Option<usize>),
    WavelengthNm,
    Finesse,
    QualityFactor,
    CavityLengthMm(Option<usize>),
    MassNg(Option<usize>),
    OmegaPhiMhz(Option<usize>),
    WphiRatio,
    GammaMMhz,
    GmaMhz(Option<usize>),
    DeltaAOverWphi(Option<usize>),
    DeltaMOverWphi,
    TemperatureK,
    DetuningMode,
}

const KEYS: &[(&str, Key)] = &[
    ("mirror_radius_um", Key::MirrorRadiusUm),
    ("oam_l", Key::Oam),
    ("input_power_mw", Key::PowerMw(None)),
    ("input_power1_mw", Key::PowerMw(Some(0))),
    ("input_power2_mw", Key::PowerMw(Some(1))),
    ("laser_wavelength_nm", Key::WavelengthNm),
    ("finesse", Key::Finesse),
    ("quality_factor", Key::QualityFactor),
    ("cavity_length_mm", Key::CavityLengthMm(None)),
    ("cavity_length1_mm", Key::CavityLengthMm(Some(0))),
    ("cavity_length2_mm", Key::CavityLengthMm(Some(1))),
    ("mass_ng", Key::MassNg(None)),
    ("mass1_ng", Key::MassNg(Some(0))),
    ("mass2_ng", Key::MassNg(Some(1))),
    ("omega_phi_over_2pi_mhz", Key::OmegaPhiMhz(None)),
    ("omega_phi1_over_2pi_mhz", Key::OmegaPhiMhz(Some(0))),
    ("omega_phi2_over_2pi_mhz", Key::OmegaPhiMhz(Some(1))),
    ("wphi1_over_wphi2", Key::WphiRatio),
    ("gamma_m_over_2pi_mhz", Key::GammaMMhz),
    ("g_ma_over_2pi_mhz", Key::GmaMhz(None)),
    ("g_ma1_over_2pi_mhz", Key::GmaMhz(Some(0))),
    ("g_ma2_over_2pi_mhz", Key::GmaMhz(Some(1))),
    ("delta_a_over_wphi", Key::DeltaAOverWphi(None)),
    ("delta_a1_over_wphi", Key::DeltaAOverWphi(Some(0))),
    ("delta_a2_over_wphi", Key::DeltaAOverWphi(Some(1))),
    ("delta_m_over_wphi", Key::DeltaMOverWphi),
    ("temperature_k", Key::TemperatureK),
    ("detuning_mode", Key::DetuningMode),
];

pub fn parameter_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _)| *k)
}

fn lookup(key: &str) -> Result<Key, CliError> {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::Config(format!("unknown parameter key `{key}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    fn number(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Value::Number(x) if x.is_finite() => Ok(*x),
            Value::Number(x) => Err(CliError::Config(format!("`{key}` must be finite, got {x}"))),
            Value::Text(t) => t
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("`{key}` expects a number, got `{t}`"))),
        }
    }
}

/// Settles the order keys are applied in: absolute values first (shared
/// keys before per-mirror ones), then the frequency ratio, then detunings
/// relative to `ω_φ2`.
fn stage(key: Key) -> u8 {
    let per_mirror = matches!(
        key,
        Key::PowerMw(Some(_))
            | Key::CavityLengthMm(Some(_))
            | Key::MassNg(Some(_))
            | Key::OmegaPhiMhz(Some(_))
            | Key::GmaMhz(Some(_))
    );
    match key {
        Key::WphiRatio => 2,
        Key::DeltaAOverWphi(None) | Key::DeltaMOverWphi => 3,
        Key::DeltaAOverWphi(Some(_)) => 4,
        _ if per_mirror => 1,
        _ => 0,
    }
}

fn set_pair(target: &mut [f64; 2], which: Option<usize>, v: f64) {
    match which {
        Some(j) => target[j] = v,
        None => *target = [v; 2],
    }
}

/// Applies flat parameter overrides on top of `base`.
pub fn apply_overrides(
    base: &PhysicalParams,
    overrides: &BTreeMap<String, Value>,
) -> Result<PhysicalParams, CliError> {
    let mut staged: Vec<(u8, &str, Key, &Value)> = Vec::new();
    for (k, v) in overrides {
        let key = lookup(k)?;
        staged.push((stage(key), k, key, v));
    }
    staged.sort_by_key(|(s, ..)| *s);

    let mut p = base.clone();
    let mhz = 2.0 * PI * 1e6;
    for (_, name, key, value) in staged {
        if let Key::DetuningMode = key {
            let text = match value {
                Value::Text(t) => t.clone(),
                Value::Number(x) => x.to_string(),
            };
            p.detuning_mode = text.parse::<DetuningMode>().map_err(|_| {
                CliError::Config(format!(
                    "`detuning_mode` must be `effective` or `bare_fixed_point`, got `{text}`"
                ))
            })?;
            continue;
        }
        let v = value.number(name)?;
        let w = p.reference_omega();
        match key {
            Key::MirrorRadiusUm => p.mirror_radius = v * 1e-6,
            Key::Oam => {
                if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                    return Err(CliError::Config(format!(
                        "`oam_l` must be an integer >= 1, got {v}"
                    )));
                }
                p.oam = v as u32;
            }
            Key::PowerMw(j) => set_pair(&mut p.input_power, j, v * 1e-3),
            Key::WavelengthNm => p.laser_wavelength = [v * 1e-9; 2],
            Key::Finesse => p.finesse = v,
            Key::QualityFactor => p.quality_factor = v,
            Key::CavityLengthMm(j) => set_pair(&mut p.cavity_length, j, v * 1e-3),
            Key::MassNg(j) => set_pair(&mut p.mirror_mass, j, v * 1e-12),
            Key::OmegaPhiMhz(j) => set_pair(&mut p.omega_phi, j, v * mhz),
            Key::WphiRatio => p.omega_phi[0] = v * p.omega_phi[1],
            Key::GammaMMhz => p.gamma_m = v * mhz,
            Key::GmaMhz(j) => set_pair(&mut p.g_ma, j, v * mhz),
            Key::DeltaAOverWphi(j) => set_pair(&mut p.delta_a, j, v * w),
            Key::DeltaMOverWphi => p.delta_m = v * w,
            Key::TemperatureK => p.temperature = v,
            Key::DetuningMode => unreachable!(),
        }
    }
    p.validate()
        .map_err(|e| CliError::Config(format!("invalid parameters: {e}")))?;
    Ok(p)
}

/// Parses one `key=value` override.
pub fn parse_assignment(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=value, got `{s}`")))?;
    let k = k.trim().to_string();
    lookup(&k)?;
    let v = v.trim();
    let value = match v.parse::<f64>() {
        Ok(x) => Value::Number(x),
        Err(_) => Value::Text(v.to_string()),
    };
    Ok((k, value))
}

/// `name:start:stop:count`.
pub fn parse_axis(s: &str) -> Result<Axis, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, start, stop, count] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "axis must look like name:start:stop:count, got `{s}`"
        )));
    };
    let param = name
        .parse::<AxisParam>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad number `{t}` in axis `{s}`")))
    };
    let count = count
        .parse::<usize>()
        .map_err(|_| CliError::Config(format!("bad point count `{count}` in axis `{s}`")))?;
    Ok(Axis::new(param, num(start)?, num(stop)?, count))
}

pub fn parse_measures(s: &str) -> Result<Vec<Measure>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let m = item
            .parse::<Measure>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub params: BTreeMap<String, Value>,
    pub axes: Vec<Axis>,
    pub measures: Option<Vec<Measure>>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

fn expect_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str, CliError> {
    v.as_str()
        .ok_or_else(|| CliError::Config(format!("`{key}` expects a string")))
}

fn expect_uint(key: &str, v: &toml::Value) -> Result<u64, CliError> {
    v.as_integer()
        .and_then(|x| u64::try_from(x).ok())
        .ok_or_else(|| CliError::Config(format!("`{key}` expects a non-negative integer")))
}

fn string_list(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Array(items) => items
            .iter()
            .map(|x| expect_str(key, x).map(str::to_string))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.join(",")),
        _ => Err(CliError::Config(format!("`{key}` expects a string or list of strings"))),
    }
}

pub fn parse_file_config(text: &str) -> Result<FileConfig, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("malformed config: {e}")))?;
    let mut cfg = FileConfig::default();
    for (section, body) in &table {
        let body = body
            .as_table()
            .ok_or_else(|| CliError::Config(format!("`{section}` must be a table")))?;
        match section.as_str() {
            "params" => {
                for (k, v) in body {
                    lookup(k)?;
                    let value = match v {
                        toml::Value::Integer(i) => Value::Number(*i as f64),
                        toml::Value::Float(x) => Value::Number(*x),
                        toml::Value::String(s) => Value::Text(s.clone()),
                        _ => {
                            return Err(CliError::Config(format!(
                                "`{k}` expects a number or string"
                            )))
                        }
                    };
                    cfg.params.insert(k.clone(), value);
                }
            }
            "sweep" => {
                for (k, v) in body {
                    match k.as_str() {
                        "axis1" | "axis2" => {
                            let axis = parse_axis(expect_str(k, v)?)?;
                            let slot = if k == "axis1" { 0 } else { 1 };
                            if cfg.axes.len() < slot {
                                return Err(CliError::Config("`axis2` given without `axis1`".into()));
                            }
                            cfg.axes.insert(slot.min(cfg.axes.len()), axis);
                        }
                        "measures" => cfg.measures = Some(parse_measures(&string_list(k, v)?)?),
                        other => {
                            return Err(CliError::Config(format!("unknown key `{other}` in [sweep]")))
                        }
                    }
                }
            }
            "output" => {
                for (k, v) in body {
                    match k.as_str() {
                        "dir" => cfg.out = Some(PathBuf::from(expect_str(k, v)?)),
                        "formats" => cfg.formats = Some(Format::parse_list(&string_list(k, v)?)?),
                        "jobs" => cfg.jobs = Some(expect_uint(k, v)? as usize),
                        other => {
                            return Err(CliError::Config(format!("unknown key `{other}` in [output]")))
                        }
                    }
                }
            }
            "check" => {
                for (k, v) in body {
                    match k.as_str() {
                        "seed" => cfg.seed = Some(expect_uint(k, v)?),
                        other => {
                            return Err(CliError::Config(format!("unknown key `{other}` in [check]")))
                        }
                    }
                }
            }
            other => return Err(CliError::Config(format!("unknown section `[{other}]`"))),
        }
    }
    Ok(cfg)
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_file_config(&text)
}
