//! Experiment config files: strict TOML with a `[params]` table.
//!
//! ```toml
//! experiment = "weyl_bessel"
//! seed = 7
//! output = "runs/bessel"
//!
//! [params]
//! npts = [1024, 2048, 4096]
//! ```

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use weylab::experiments::{Experiment, ExperimentKind};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct KindOnly {
    experiment: ExperimentKind,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    experiment: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(default)]
    params: T,
}

fn typed<T: DeserializeOwned + Default>(text: &str) -> Result<(T, Option<u64>, Option<PathBuf>), String> {
    let e: Envelope<T> = toml::from_str(text).map_err(|e| e.to_string())?;
    Ok((e.params, e.seed, e.output))
}

/// Parses and validates a config; errors carry line and field diagnostics.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let kind = toml::from_str::<KindOnly>(text).map_err(|e| e.to_string())?.experiment;
    macro_rules! arm {
        ($variant:ident) => {{
            let (p, s, o) = typed(text)?;
            (Experiment::$variant(p), s, o)
        }};
    }
    let (experiment, seed, output) = match kind {
        ExperimentKind::WeylBessel => arm!(WeylBessel),
        ExperimentKind::WeylElliptic => arm!(WeylElliptic),
        ExperimentKind::WeylCommutatorCz => arm!(WeylCommutatorCz),
        ExperimentKind::WeylCommutatorFrac => arm!(WeylCommutatorFrac),
        ExperimentKind::ZetaResidue => arm!(ZetaResidue),
        ExperimentKind::ParametrixCheck => arm!(ParametrixCheck),
        ExperimentKind::PowerGroupCheck => arm!(PowerGroupCheck),
        ExperimentKind::MicrolocalCount => arm!(MicrolocalCount),
        ExperimentKind::DosRandom => arm!(DosRandom),
        ExperimentKind::DixmierTrace => arm!(DixmierTrace),
    };
    experiment.validate().map_err(|e| format!("invalid parameters for {}: {e}", kind.name()))?;
    Ok(RunConfig { experiment, seed, output })
}

/// The resolved config as a runnable TOML document.
pub fn render(cfg: &RunConfig, seed: u64) -> Result<String, String> {
    let env = Envelope { experiment: cfg.experiment.kind(), seed: Some(seed), output: cfg.output.clone(), params: &cfg.experiment };
    toml::to_string(&env).map_err(|e| e.to_string())
}

/// A sweep value: TOML syntax when it parses, otherwise a bare string.
pub fn parse_value(s: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.trim().to_string()))
}

/// Returns `text` with `params.<path>` (dotted) set to `value`.
pub fn with_override(text: &str, path: &str, value: toml::Value) -> Result<String, String> {
    let mut root: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("invalid parameter name {path:?}"));
    }
    let mut table = root.entry("params").or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for key in &keys[..keys.len() - 1] {
        let t = table.as_table_mut().ok_or_else(|| format!("parameter {path:?} does not name a table entry"))?;
        table = t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let t = table.as_table_mut().ok_or_else(|| format!("parameter {path:?} does not name a table entry"))?;
    t.insert(keys[keys.len() - 1].to_string(), value);
    toml::to_string(&root).map_err(|e| e.to_string())
}

/// Default config for an experiment, as TOML.
pub fn template(kind: ExperimentKind) -> Result<String, String> {
    let cfg = RunConfig { experiment: Experiment::default_for(kind), seed: None, output: None };
    render(&cfg, weylab::experiments::DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_roundtrip() {
        for kind in ExperimentKind::ALL {
            let text = template(kind).unwrap();
            let cfg = parse(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", kind.name()));
            assert_eq!(cfg.experiment.kind(), kind);
        }
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let err = parse("experiment = \"weyl_bessel\"\n[params]\nnpts = [64]\nradiuss = 1.0\n").unwrap_err();
        assert!(err.contains("radiuss") && err.contains("line 4"), "{err}");
        let err = parse("experiment = \"weyl_bessel\"\nsed = 3\n").unwrap_err();
        assert!(err.contains("sed"), "{err}");
        let err = parse("experiment = \"nope\"\n").unwrap_err();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_tables() {
        let text = "experiment = \"weyl_elliptic\"\n";
        let out = with_override(text, "window.lo", parse_value("0.05")).unwrap();
        match parse(&out).unwrap().experiment {
            Experiment::WeylElliptic(c) => assert_eq!(c.window.lo, 0.05),
            _ => unreachable!(),
        }
        assert_eq!(parse_value("abc"), toml::Value::String("abc".into()));
        assert_eq!(parse_value("[1, 2]").as_array().map(|a| a.len()), Some(2));
    }
}
