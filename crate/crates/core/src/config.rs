//! JSON run configuration: defaults, strict key checking, CLI override
//! precedence, and the mapping onto the library's parameter types.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, TruncationConfig};
use crate::error::{Error, Result};
use crate::noise::{ChannelKind, PointPolicy};
use crate::sweep::{PerChannel, Spacing, SweepSpec, Table2Setup};

/// Operating-point policy as it appears in config files and flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySetting {
    Fixed,
    WorstCase,
}

impl PolicySetting {
    pub fn to_policy(self) -> PointPolicy {
        match self {
            PolicySetting::Fixed => PointPolicy::Fixed,
            PolicySetting::WorstCase => PointPolicy::WorstCase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingSetting {
    Linear,
    Log,
}

impl SpacingSetting {
    pub fn to_spacing(self) -> Spacing {
        match self {
            SpacingSetting::Linear => Spacing::Linear,
            SpacingSetting::Log => Spacing::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSetting {
    Charge,
    Flux,
    Ic,
}

impl ChannelSetting {
    pub fn to_kind(self) -> ChannelKind {
        match self {
            ChannelSetting::Charge => ChannelKind::Charge,
            ChannelSetting::Flux => ChannelKind::Flux,
            ChannelSetting::Ic => ChannelKind::CriticalCurrent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully resolved run configuration. Every field is concrete; parsing fills
/// gaps from [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub ej_sum: f64,
    pub ec: f64,
    pub d: f64,
    pub ng: f64,
    pub phi_ext: f64,
    pub ncut: usize,
    pub convergence_tol_ghz: f64,
    pub amplitude_charge: f64,
    pub amplitude_flux: f64,
    pub amplitude_ic: f64,
    pub policy_charge: PolicySetting,
    pub policy_flux: PolicySetting,
    pub policy_ic: PolicySetting,
    pub channels: Vec<ChannelSetting>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
    pub spacing: SpacingSetting,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub amplitude_override: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ej_sum: 20.0,
            ec: 0.35,
            d: 0.1,
            ng: 0.5,
            phi_ext: 0.0,
            ncut: 30,
            convergence_tol_ghz: 1e-10,
            amplitude_charge: 1e-4,
            amplitude_flux: 1e-5,
            amplitude_ic: 1e-6,
            policy_charge: PolicySetting::WorstCase,
            policy_flux: PolicySetting::WorstCase,
            policy_ic: PolicySetting::Fixed,
            channels: vec![
                ChannelSetting::Charge,
                ChannelSetting::Flux,
                ChannelSetting::Ic,
            ],
            ratio_min: 10.0,
            ratio_max: 150.0,
            points: 81,
            spacing: SpacingSetting::Log,
            format: OutputFormat::Csv,
            out: None,
            svg: None,
            amplitude_override: false,
        }
    }
}

/// The exact key set a config file may contain; anything else is rejected
/// by name.
pub const KNOWN_KEYS: &[&str] = &[
    "ej_sum",
    "ec",
    "d",
    "ng",
    "phi_ext",
    "ncut",
    "convergence_tol_ghz",
    "amplitude_charge",
    "amplitude_flux",
    "amplitude_ic",
    "policy_charge",
    "policy_flux",
    "policy_ic",
    "channels",
    "ratio_min",
    "ratio_max",
    "points",
    "spacing",
    "format",
    "out",
    "svg",
    "amplitude_override",
];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    ej_sum: Option<f64>,
    ec: Option<f64>,
    d: Option<f64>,
    ng: Option<f64>,
    phi_ext: Option<f64>,
    ncut: Option<usize>,
    convergence_tol_ghz: Option<f64>,
    amplitude_charge: Option<f64>,
    amplitude_flux: Option<f64>,
    amplitude_ic: Option<f64>,
    policy_charge: Option<PolicySetting>,
    policy_flux: Option<PolicySetting>,
    policy_ic: Option<PolicySetting>,
    channels: Option<Vec<ChannelSetting>>,
    ratio_min: Option<f64>,
    ratio_max: Option<f64>,
    points: Option<usize>,
    spacing: Option<SpacingSetting>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
    amplitude_override: Option<bool>,
}

fn parse_error(err: &serde_json::Error) -> Error {
    Error::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses UTF-8 JSON into a resolved, validated configuration. Every
/// unknown key is listed in the rejection; CLI flags are applied on top by
/// [`RunConfig::apply_overrides`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::validation("config", "top level must be a JSON object"))?;
    let unknown: Vec<&str> = object
        .keys()
        .map(String::as_str)
        .filter(|k| !KNOWN_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::validation(
            "config",
            format!("unknown keys: {}", unknown.join(", ")),
        ));
    }
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let mut cfg = RunConfig::default();
    macro_rules! take {
        ($($field:ident),* $(,)?) => {
            $(if let Some(v) = raw.$field { cfg.$field = v; })*
        };
    }
    take!(
        ej_sum,
        ec,
        d,
        ng,
        phi_ext,
        ncut,
        convergence_tol_ghz,
        amplitude_charge,
        amplitude_flux,
        amplitude_ic,
        policy_charge,
        policy_flux,
        policy_ic,
        channels,
        ratio_min,
        ratio_max,
        points,
        spacing,
        format,
        amplitude_override,
    );
    if raw.out.is_some() {
        cfg.out = raw.out;
    }
    if raw.svg.is_some() {
        cfg.svg = raw.svg;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Optional per-flag overrides; flags beat config-file values which beat
/// defaults.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub ej_sum: Option<f64>,
    pub ec: Option<f64>,
    pub d: Option<f64>,
    pub ng: Option<f64>,
    pub phi_ext: Option<f64>,
    pub ncut: Option<usize>,
    pub convergence_tol_ghz: Option<f64>,
    pub amplitude_charge: Option<f64>,
    pub amplitude_flux: Option<f64>,
    pub amplitude_ic: Option<f64>,
    pub policy_charge: Option<PolicySetting>,
    pub policy_flux: Option<PolicySetting>,
    pub policy_ic: Option<PolicySetting>,
    pub channels: Option<Vec<ChannelSetting>>,
    pub ratio_min: Option<f64>,
    pub ratio_max: Option<f64>,
    pub points: Option<usize>,
    pub spacing: Option<SpacingSetting>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub amplitude_override: bool,
}

impl RunConfig {
    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        take!(
            ej_sum,
            ec,
            d,
            ng,
            phi_ext,
            ncut,
            convergence_tol_ghz,
            amplitude_charge,
            amplitude_flux,
            amplitude_ic,
            policy_charge,
            policy_flux,
            policy_ic,
            channels,
            ratio_min,
            ratio_max,
            points,
            spacing,
            format,
        );
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if o.svg.is_some() {
            self.svg = o.svg.clone();
        }
        if o.amplitude_override {
            self.amplitude_override = true;
        }
    }

    /// Checks every bound by building the underlying parameter types.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.trunc()?;
        for (field, v) in [
            ("amplitude_charge", self.amplitude_charge),
            ("amplitude_flux", self.amplitude_flux),
            ("amplitude_ic", self.amplitude_ic),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(field, "must be finite and > 0"));
            }
        }
        self.sweep_spec()?.validate()?;
        Ok(())
    }

    pub fn params(&self) -> Result<CircuitParams<f64>> {
        CircuitParams::new(self.ej_sum, self.ec, self.d, self.ng, self.phi_ext)
    }

    pub fn trunc(&self) -> Result<TruncationConfig<f64>> {
        TruncationConfig::new(self.ncut, self.convergence_tol_ghz)
    }

    /// EJΣ/Ec of the resolved parameters.
    pub fn ratio(&self) -> f64 {
        self.ej_sum / self.ec
    }

    pub fn channel_kinds(&self) -> Vec<ChannelKind> {
        self.channels.iter().map(|c| c.to_kind()).collect()
    }

    pub fn amplitudes(&self) -> PerChannel<f64> {
        PerChannel {
            charge: self.amplitude_charge,
            flux: self.amplitude_flux,
            ic: self.amplitude_ic,
        }
    }

    pub fn policies(&self) -> PerChannel<PointPolicy> {
        PerChannel {
            charge: self.policy_charge.to_policy(),
            flux: self.policy_flux.to_policy(),
            ic: self.policy_ic.to_policy(),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            ec: self.ec,
            ratio_min: self.ratio_min,
            ratio_max: self.ratio_max,
            points: self.points,
            spacing: self.spacing.to_spacing(),
            d: self.d,
            ng: self.ng,
            phi_ext: self.phi_ext,
            channels: self.channel_kinds(),
            amplitudes: self.amplitudes(),
            policies: self.policies(),
            trunc: self.trunc()?,
            amplitude_override: self.amplitude_override,
        })
    }

    pub fn table2_setup(&self) -> Result<Table2Setup> {
        Ok(Table2Setup {
            params: self.params()?,
            trunc: self.trunc()?,
            amplitudes: self.amplitudes(),
            policies: self.policies(),
            amplitude_override: self.amplitude_override,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_resolves_to_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.ec, 0.35);
        assert_eq!(cfg.ej_sum, 20.0);
        assert_eq!(cfg.d, 0.1);
        assert_eq!(cfg.ncut, 30);
        assert_eq!(cfg.amplitude_charge, 1e-4);
        assert_eq!(cfg.amplitude_flux, 1e-5);
        assert_eq!(cfg.amplitude_ic, 1e-6);
    }

    #[test]
    fn ratio_of_the_default_point() {
        let cfg = parse_config(r#"{"ej_sum": 20, "ec": 0.35}"#).unwrap();
        assert!((cfg.ratio() - 57.142857142857146).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_asymmetry_names_the_bound() {
        match parse_config(r#"{"d": 1.5}"#) {
            Err(Error::Validation { field, message }) => {
                assert_eq!(field, "d");
                assert!(message.contains("0 <= d < 1"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        match parse_config(r#"{"ej_zum": 1, "nqut": 2, "ec": 0.3}"#) {
            Err(Error::Validation { message, .. }) => {
                assert!(message.contains("ej_zum"), "{message}");
                assert!(message.contains("nqut"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        match parse_config("{\n  \"ec\": 0.35,\n}") {
            Err(Error::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn serialized_config_round_trips() {
        let cfg = RunConfig {
            ej_sum: 25.0,
            policy_ic: PolicySetting::WorstCase,
            channels: vec![ChannelSetting::Flux, ChannelSetting::Ic],
            spacing: SpacingSetting::Linear,
            out: Some(PathBuf::from("rows.csv")),
            ..RunConfig::default()
        };
        let text = cfg.to_json_pretty();
        let back = parse_config(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn serialized_keys_match_the_known_set() {
        let value: serde_json::Value =
            serde_json::from_str(&RunConfig::default().to_json_pretty()).unwrap();
        let keys: Vec<&str> = value
            .as_object()
            .unwrap()
            .keys()
            .map(|s| s.as_str())
            .collect();
        for k in &keys {
            assert!(KNOWN_KEYS.contains(k), "serialized key {k} not known");
        }
        for k in KNOWN_KEYS {
            assert!(keys.contains(k), "known key {k} not serialized");
        }
    }

    #[test]
    fn overrides_beat_config_values() {
        let mut cfg = parse_config(r#"{"ej_sum": 25, "ec": 0.5}"#).unwrap();
        let o = Overrides {
            ej_sum: Some(30.0),
            points: Some(11),
            policy_charge: Some(PolicySetting::Fixed),
            ..Overrides::default()
        };
        cfg.apply_overrides(&o);
        assert_eq!(cfg.ej_sum, 30.0); // flag wins
        assert_eq!(cfg.ec, 0.5); // config wins over default
        assert_eq!(cfg.points, 11);
        assert_eq!(cfg.policy_charge, PolicySetting::Fixed);
    }

    #[test]
    fn settings_map_onto_library_types() {
        let cfg = RunConfig::default();
        let spec = cfg.sweep_spec().unwrap();
        assert_eq!(spec.points, 81);
        assert_eq!(spec.spacing, Spacing::Log);
        assert_eq!(spec.policies.ic, PointPolicy::Fixed);
        let setup = cfg.table2_setup().unwrap();
        assert_eq!(setup.params.ej_sum, 20.0);
        assert_eq!(setup.amplitudes.flux, 1e-5);
        assert_eq!(
            cfg.channel_kinds(),
            vec![
                ChannelKind::Charge,
                ChannelKind::Flux,
                ChannelKind::CriticalCurrent
            ]
        );
    }

    #[test]
    fn non_object_top_level_is_rejected() {
        assert!(matches!(
            parse_config("[1, 2]"),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(parse_config("3.5"), Err(Error::Validation { .. })));
    }
}
