use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataflow::{ArrayGeometry, ArrayRole, HardwareConfig};
use crate::error::{Error, Result};
use crate::mem::AcceleratorKind;
use crate::tensor::LifParams;

/// Layer shape of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelShape {
    Moe {
        tokens: usize,
        steps: usize,
        d_in: usize,
        d_out: usize,
        experts: usize,
        k: usize,
    },
    /// A single dense spiking layer on one expert array, no router.
    Mlp {
        tokens: usize,
        steps: usize,
        d_in: usize,
        d_out: usize,
    },
    Mha {
        tokens: usize,
        steps: usize,
        heads: usize,
        head_dim: usize,
    },
}

impl ModelShape {
    pub fn accelerator(&self) -> AcceleratorKind {
        match self {
            ModelShape::Mha { .. } => AcceleratorKind::Mha,
            _ => AcceleratorKind::Moe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum CalibrationSource {
    Builtin2d,
    Builtin3d,
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub spike_prob: f64,
    pub seed: u64,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub model: ModelShape,
    pub lif: LifParams,
    /// Seeds weight synthesis.
    pub seed: u64,
    pub input: InputSpec,
    pub hardware: HardwareConfig,
    pub calibration: CalibrationSource,
}

impl RunPlan {
    /// Replaces both the weight and the input seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.input.seed = seed;
        self
    }

    pub fn with_calibration(mut self, calibration: CalibrationSource) -> Self {
        self.calibration = calibration;
        self
    }
}

const ROOT_KEYS: &[&str] = &["kind", "seed", "model", "hardware", "calibration", "input"];

/// Collects violations while walking one table of the document.
struct Table<'a> {
    path: &'static str,
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Table<'a> {
    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key))
    }

    fn sub(&self, key: &'static str, path: &'static str, errs: &mut Vec<String>) -> Table<'a> {
        let map = match self.get(key) {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                errs.push(format!("{} must be a table", self.key(key)));
                None
            }
        };
        Table { path, map }
    }

    fn uint(&self, key: &str, default: Option<u64>, min: u64, errs: &mut Vec<String>) -> Option<u64> {
        match self.get(key) {
            None => {
                if default.is_none() {
                    errs.push(format!("missing required field {}", self.key(key)));
                }
                default
            }
            Some(v) => match v.as_u64() {
                Some(n) if n >= min => Some(n),
                Some(n) => {
                    errs.push(format!("{} = {n} is below the minimum {min}", self.key(key)));
                    None
                }
                None => {
                    errs.push(format!("{} must be a non-negative integer, got {v}", self.key(key)));
                    None
                }
            },
        }
    }

    fn size(&self, key: &str, default: Option<usize>, errs: &mut Vec<String>) -> Option<usize> {
        self.uint(key, default.map(|d| d as u64), 1, errs).map(|n| n as usize)
    }

    fn int(&self, key: &str, default: i32, errs: &mut Vec<String>) -> Option<i32> {
        match self.get(key) {
            None => Some(default),
            Some(v) => match v.as_i64().and_then(|n| i32::try_from(n).ok()) {
                Some(n) => Some(n),
                None => {
                    errs.push(format!("{} must be a 32-bit integer, got {v}", self.key(key)));
                    None
                }
            },
        }
    }

    fn string(&self, key: &str, errs: &mut Vec<String>) -> Option<&'a str> {
        match self.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(v) => {
                errs.push(format!("{} must be a string, got {v}", self.key(key)));
                None
            }
        }
    }

    fn reject_unknown(&self, allowed: &[&str], errs: &mut Vec<String>) {
        if let Some(m) = self.map {
            // model fields may share the root table
            let root = |k: &str| self.path.is_empty() && ROOT_KEYS.contains(&k);
            for k in m.keys().filter(|k| !allowed.contains(&k.as_str()) && !root(k)) {
                errs.push(format!("unknown field {}", self.key(k)));
            }
        }
    }
}

fn geometry(
    parent: &Table<'_>,
    key: &'static str,
    path: &'static str,
    default: ArrayGeometry,
    errs: &mut Vec<String>,
) -> ArrayGeometry {
    let t = parent.sub(key, path, errs);
    t.reject_unknown(&["rows", "cols"], errs);
    let rows = t.size("rows", Some(default.rows), errs).unwrap_or(default.rows);
    let cols = t.size("cols", Some(default.cols), errs).unwrap_or(default.cols);
    ArrayGeometry { rows, cols, ..default }
}

/// Validates a configuration tree and reports every violation at once.
///
/// Model fields live under `model`; for brevity they may also be given at the
/// top level (but not in both places).
pub fn parse_workload(doc: &Value) -> Result<RunPlan> {
    let mut errs = Vec::new();
    let Value::Object(root_map) = doc else {
        return Err(Error::Workload(vec!["document must be a table".into()]));
    };
    let root = Table {
        path: "",
        map: Some(root_map),
    };
    const MODEL_KEYS: &[&str] = &["N", "T", "D_in", "D_out", "E", "K", "H", "D", "d", "lif"];
    let top_model: Vec<&str> = MODEL_KEYS.iter().copied().filter(|k| root_map.contains_key(*k)).collect();
    let mut allowed = ROOT_KEYS.to_vec();
    allowed.extend(&top_model);
    root.reject_unknown(&allowed, &mut errs);

    let model = if top_model.is_empty() {
        root.sub("model", "model", &mut errs)
    } else {
        if root_map.contains_key("model") {
            errs.push(format!(
                "model fields given both at top level ({}) and in model",
                top_model.join(", ")
            ));
        }
        Table {
            path: "",
            map: Some(root_map),
        }
    };

    let kind = root.string("kind", &mut errs);
    let shape = match kind {
        None if root.get("kind").is_none() => {
            errs.push("missing required field kind".into());
            None
        }
        None => None,
        Some(k) => parse_model(k, &model, &mut errs),
    };

    let lif_t = model.sub("lif", "model.lif", &mut errs);
    lif_t.reject_unknown(&["v_threshold", "v_leak", "initial_potential"], &mut errs);
    let v_threshold = lif_t.int("v_threshold", 1, &mut errs);
    let v_leak = lif_t.int("v_leak", 0, &mut errs);
    let initial = lif_t.int("initial_potential", 0, &mut errs);
    let mut lif = LifParams::default();
    if let (Some(th), Some(l), Some(i)) = (v_threshold, v_leak, initial) {
        match LifParams::new(th, l, i) {
            Ok(p) => lif = p,
            Err(e) => errs.push(format!("model.lif: {e}")),
        }
    }

    let seed = root.uint("seed", Some(0), 0, &mut errs).unwrap_or(0);

    let input_t = root.sub("input", "input", &mut errs);
    input_t.reject_unknown(&["spike_prob", "seed"], &mut errs);
    let spike_prob = match input_t.get("spike_prob") {
        None => 0.2,
        Some(v) => match v.as_f64() {
            Some(p) if (0.0..=1.0).contains(&p) => p,
            _ => {
                errs.push(format!("input.spike_prob must be a number in [0, 1], got {v}"));
                0.2
            }
        },
    };
    let input_seed = input_t.uint("seed", Some(seed), 0, &mut errs).unwrap_or(seed);

    let hw_t = root.sub("hardware", "hardware", &mut errs);
    hw_t.reject_unknown(
        &[
            "cores",
            "expert_array",
            "routing_array",
            "attention_array",
            "extract_ports",
            "router_overhead_cycles",
        ],
        &mut errs,
    );
    let base = HardwareConfig::default();
    let hardware = HardwareConfig {
        cores: hw_t.size("cores", Some(base.cores), &mut errs).unwrap_or(base.cores),
        expert_array: geometry(
            &hw_t,
            "expert_array",
            "hardware.expert_array",
            ArrayGeometry::expert(),
            &mut errs,
        ),
        routing_array: geometry(
            &hw_t,
            "routing_array",
            "hardware.routing_array",
            ArrayGeometry::routing(),
            &mut errs,
        ),
        attention_array: geometry(
            &hw_t,
            "attention_array",
            "hardware.attention_array",
            ArrayGeometry::attention(),
            &mut errs,
        ),
        extract_ports: hw_t
            .get("extract_ports")
            .and_then(|_| hw_t.size("extract_ports", None, &mut errs)),
        router_overhead_cycles: hw_t
            .get("router_overhead_cycles")
            .and_then(|_| hw_t.uint("router_overhead_cycles", None, 0, &mut errs)),
        word_bits: base.word_bits,
    };
    debug_assert_eq!(hardware.expert_array.role, ArrayRole::Expert);

    let cal_t = root.sub("calibration", "calibration", &mut errs);
    cal_t.reject_unknown(&["source", "path"], &mut errs);
    let calibration = match (cal_t.string("source", &mut errs), cal_t.string("path", &mut errs)) {
        (None | Some("builtin2d"), None) => CalibrationSource::Builtin2d,
        (Some("builtin3d"), None) => CalibrationSource::Builtin3d,
        (Some("file"), Some(p)) => CalibrationSource::File { path: p.into() },
        (Some("file"), None) => {
            errs.push("calibration.source = \"file\" needs calibration.path".into());
            CalibrationSource::Builtin2d
        }
        (Some(s @ ("builtin2d" | "builtin3d")), Some(_)) => {
            errs.push(format!("calibration.path is only valid with source = \"file\", not \"{s}\""));
            CalibrationSource::Builtin2d
        }
        (None, Some(_)) => {
            errs.push("calibration.path given without source = \"file\"".into());
            CalibrationSource::Builtin2d
        }
        (Some(s), _) => {
            errs.push(format!(
                "calibration.source must be builtin2d, builtin3d or file, got \"{s}\""
            ));
            CalibrationSource::Builtin2d
        }
    };

    match shape {
        Some(model) if errs.is_empty() => Ok(RunPlan {
            model,
            lif,
            seed,
            input: InputSpec {
                spike_prob,
                seed: input_seed,
            },
            hardware,
            calibration,
        }),
        _ => Err(Error::Workload(errs)),
    }
}

fn parse_model(kind: &str, m: &Table<'_>, errs: &mut Vec<String>) -> Option<ModelShape> {
    let common = |errs: &mut Vec<String>| (m.size("N", Some(64), errs), m.size("T", Some(4), errs));
    match kind {
        "moe" | "mlp" => {
            let mut allowed = vec!["N", "T", "D_in", "D_out", "lif"];
            if kind == "moe" {
                allowed.extend(["E", "K"]);
            }
            m.reject_unknown(&allowed, errs);
            let (n, t) = common(errs);
            let d_in = m.size("D_in", Some(128), errs);
            let d_out = m.size("D_out", Some(128), errs);
            if kind == "mlp" {
                return Some(ModelShape::Mlp {
                    tokens: n?,
                    steps: t?,
                    d_in: d_in?,
                    d_out: d_out?,
                });
            }
            let e = m.size("E", Some(4), errs);
            let k = m.size("K", Some(1), errs);
            if let (Some(e), Some(k)) = (e, k) {
                if k > e {
                    errs.push(format!("{}: K={k} exceeds E={e}", m.key("K")));
                    return None;
                }
                if k > 1 {
                    errs.push(format!(
                        "{}: K={k} is unsupported, only top-1 routing has a defined merge",
                        m.key("K")
                    ));
                    return None;
                }
            }
            Some(ModelShape::Moe {
                tokens: n?,
                steps: t?,
                d_in: d_in?,
                d_out: d_out?,
                experts: e?,
                k: k?,
            })
        }
        "mha" => {
            m.reject_unknown(&["N", "T", "H", "D", "d", "lif"], errs);
            let (n, t) = common(errs);
            let h = m.size("H", Some(8), errs)?;
            let head_dim = match (m.get("D").is_some(), m.get("d").is_some()) {
                (false, true) => m.size("d", None, errs)?,
                (true, false) | (false, false) => {
                    let d = m.size("D", Some(128), errs)?;
                    if d % h != 0 {
                        errs.push(format!("{}: D={d} is not divisible by H={h}", m.key("D")));
                        return None;
                    }
                    d / h
                }
                (true, true) => {
                    let d = m.size("D", None, errs)?;
                    let hd = m.size("d", None, errs)?;
                    if d != h * hd {
                        errs.push(format!("{}: D={d} does not equal H*d = {}", m.key("D"), h * hd));
                        return None;
                    }
                    hd
                }
            };
            Some(ModelShape::Mha {
                tokens: n?,
                steps: t?,
                heads: h,
                head_dim,
            })
        }
        other => {
            errs.push(format!("kind must be moe, mha or mlp, got \"{other}\""));
            None
        }
    }
}

/// Parses TOML (or JSON when `json` is set) text into a plan.
pub fn parse_workload_str(text: &str, json: bool) -> Result<RunPlan> {
    let doc: Value = if json {
        serde_json::from_str(text).map_err(|e| Error::Workload(vec![format!("not valid JSON: {e}")]))?
    } else {
        let t: toml::Value = toml::from_str(text).map_err(|e| Error::Workload(vec![format!("not valid TOML: {e}")]))?;
        serde_json::to_value(t).expect("TOML values map onto JSON")
    };
    parse_workload(&doc)
}

/// Reads a config file; relative calibration paths resolve against its directory.
pub fn load_plan(path: impl AsRef<Path>) -> Result<RunPlan> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut plan = parse_workload_str(&text, crate::mem::is_json(path)).map_err(|e| match e {
        Error::Workload(v) => Error::Format {
            path: path.into(),
            message: Error::Workload(v).to_string(),
        },
        other => other,
    })?;
    if let CalibrationSource::File { path: p } = &mut plan.calibration {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(plan)
}
