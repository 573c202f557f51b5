//! Config parsing: sections of key = value pairs, arrays as bracketed
//! lists of `(n, re, im)` triples or plain numbers. Every key is validated
//! against the model schema and the chosen subcommand; unknown keys are
//! rejected with line diagnostics.

use std::collections::BTreeMap;
use std::fmt;

use qplab_core::functions::{MeromorphicPotential, ToeplitzKernel, TrigPolynomial};
use qplab_core::spectral::OperatorSpec;
use qplab_core::torus::Frequency;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "config error at line {}: {}", self.line, self.message)
        } else {
            write!(f, "config error: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Text(String),
    List(Vec<Value>),
    Tuple(Vec<f64>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Bool(_) => "bool",
            Value::Text(_) => "string",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
        }
    }
}

type Section = BTreeMap<String, (usize, Value)>;

#[derive(Debug, Default)]
struct RawConfig {
    model: Section,
    experiment: Section,
    output: Section,
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section: Option<&str> = None;
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0usize;
    while i < lines.len() {
        let line_no = i + 1;
        let stripped = strip_comment(lines[i]);
        let trimmed = stripped.trim();
        i += 1;
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            section = match name {
                "model" => Some("model"),
                "experiment" => Some("experiment"),
                "output" => Some("output"),
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let Some((key, rest)) = trimmed.split_once('=') else {
            return Err(err(line_no, format!("expected key = value, got `{trimmed}`")));
        };
        let key = key.trim().to_string();
        let mut value_text = rest.trim().to_string();
        // multi-line lists: keep consuming until brackets balance
        while bracket_depth(&value_text) > 0 && i < lines.len() {
            value_text.push(' ');
            value_text.push_str(strip_comment(lines[i]).trim());
            i += 1;
        }
        if bracket_depth(&value_text) != 0 {
            return Err(err(line_no, format!("unbalanced brackets in value for `{key}`")));
        }
        let value = parse_value(&value_text, line_no)?;
        let target = match section {
            Some("model") => &mut raw.model,
            Some("experiment") => &mut raw.experiment,
            Some("output") => &mut raw.output,
            _ => return Err(err(line_no, "key before any [section] header")),
        };
        if target.insert(key.clone(), (line_no, value)).is_some() {
            return Err(err(line_no, format!("duplicate key `{key}`")));
        }
    }
    Ok(raw)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn bracket_depth(text: &str) -> i32 {
    let mut depth = 0;
    for c in text.chars() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn parse_value(text: &str, line: usize) -> Result<Value, ConfigError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(err(line, "empty value"));
    }
    if let Some(inner) = text.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| err(line, "unterminated list"))?;
        let mut items = Vec::new();
        for part in split_top_level(inner) {
            let part = part.trim();
            if !part.is_empty() {
                items.push(parse_value(part, line)?);
            }
        }
        return Ok(Value::List(items));
    }
    if let Some(inner) = text.strip_prefix('(') {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| err(line, "unterminated tuple"))?;
        let mut entries = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            let v: f64 = part
                .parse()
                .map_err(|_| err(line, format!("tuple entry `{part}` is not a number")))?;
            entries.push(v);
        }
        return Ok(Value::Tuple(entries));
    }
    if let Some(inner) = text.strip_prefix('"') {
        let inner = inner
            .strip_suffix('"')
            .ok_or_else(|| err(line, "unterminated string"))?;
        return Ok(Value::Text(inner.to_string()));
    }
    match text {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    text.parse::<f64>()
        .map(Value::Number)
        .map_err(|_| err(line, format!("cannot parse value `{text}`")))
}

fn split_top_level(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | '[' => {
                depth += 1;
                current.push(c);
            }
            ')' | ']' => {
                depth -= 1;
                current.push(c);
            }
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        parts.push(current);
    }
    parts
}

/// Typed access to one section with unknown-key rejection.
pub struct Params<'a> {
    section: &'a Section,
    section_name: &'static str,
    known: Vec<String>,
}

impl<'a> Params<'a> {
    fn new(section: &'a Section, section_name: &'static str) -> Self {
        Params {
            section,
            section_name,
            known: Vec::new(),
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a (usize, Value)> {
        self.known.push(key.to_string());
        self.section.get(key)
    }

    pub fn req_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some((_, Value::Number(v))) => Ok(*v),
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a number, got {}", v.type_name()))),
            None => Err(err(0, format!("missing required key `{key}` in [{}]", self.section_name))),
        }
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            Some((_, Value::Number(v))) => Ok(Some(*v)),
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a number, got {}", v.type_name()))),
            None => Ok(None),
        }
    }

    pub fn req_usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        let v = self.req_f64(key)?;
        as_usize(v).ok_or_else(|| err(self.line_of(key), format!("`{key}` must be a nonnegative integer")))
    }

    pub fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.opt_f64(key)? {
            None => Ok(None),
            Some(v) => as_usize(v)
                .map(Some)
                .ok_or_else(|| err(self.line_of(key), format!("`{key}` must be a nonnegative integer"))),
        }
    }

    pub fn req_u64(&mut self, key: &str) -> Result<u64, ConfigError> {
        let v = self.req_f64(key)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53) {
            Ok(v as u64)
        } else {
            Err(err(self.line_of(key), format!("`{key}` must be a nonnegative integer")))
        }
    }

    pub fn opt_bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            Some((_, Value::Bool(b))) => Ok(*b),
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a bool, got {}", v.type_name()))),
            None => Ok(default),
        }
    }

    pub fn opt_text(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.get(key) {
            Some((_, Value::Text(s))) => Ok(Some(s.clone())),
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a string, got {}", v.type_name()))),
            None => Ok(None),
        }
    }

    pub fn req_f64_list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            Some((line, Value::List(items))) => {
                let line = *line;
                items
                    .iter()
                    .map(|item| match item {
                        Value::Number(v) => Ok(*v),
                        other => Err(err(line, format!("`{key}` entries must be numbers, got {}", other.type_name()))),
                    })
                    .collect()
            }
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a list, got {}", v.type_name()))),
            None => Err(err(0, format!("missing required key `{key}` in [{}]", self.section_name))),
        }
    }

    pub fn req_usize_list(&mut self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let line = self.line_of(key);
        self.req_f64_list(key)?
            .into_iter()
            .map(|v| as_usize(v).ok_or_else(|| err(line, format!("`{key}` entries must be nonnegative integers"))))
            .collect()
    }

    pub fn req_triples(&mut self, key: &str) -> Result<Vec<(i64, f64, f64)>, ConfigError> {
        match self.get(key) {
            Some((line, Value::List(items))) => {
                let line = *line;
                items
                    .iter()
                    .map(|item| match item {
                        Value::Tuple(t) if t.len() == 3 => {
                            if t[0].fract() != 0.0 {
                                Err(err(line, format!("`{key}` indices must be integers")))
                            } else {
                                Ok((t[0] as i64, t[1], t[2]))
                            }
                        }
                        other => Err(err(
                            line,
                            format!("`{key}` entries must be (n, re, im) triples, got {}", other.type_name()),
                        )),
                    })
                    .collect()
            }
            Some((line, v)) => Err(err(*line, format!("`{key}` must be a list of triples, got {}", v.type_name()))),
            None => Err(err(0, format!("missing required key `{key}` in [{}]", self.section_name))),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.section.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    pub fn finish(self) -> Result<(), ConfigError> {
        for (key, (line, _)) in self.section {
            if !self.known.contains(key) {
                return Err(err(*line, format!("unknown key `{key}` in [{}]", self.section_name)));
            }
        }
        Ok(())
    }
}

/// Fully validated run configuration: the operator model, the experiment
/// parameter map, and output controls.
#[derive(Debug)]
pub struct RunConfig {
    pub spec: OperatorSpec,
    pub raw_experiment: Section,
    pub out_dir: String,
    pub workers: Option<usize>,
    pub subcommand: String,
}

pub const SUBCOMMANDS: &[&str] = &[
    "green", "shiftscan", "ldt", "avgdet", "cartan", "sublevel", "pave", "patch", "badset",
    "orbit", "localize", "dioph",
];

impl RunConfig {
    pub fn experiment(&self) -> Params<'_> {
        Params::new(&self.raw_experiment, "experiment")
    }
}

pub fn parse_config(text: &str, subcommand: &str) -> Result<RunConfig, ConfigError> {
    if !SUBCOMMANDS.contains(&subcommand) {
        return Err(err(0, format!("unknown subcommand `{subcommand}`")));
    }
    let raw = parse_raw(text)?;
    let spec = build_model(&raw.model)?;

    let mut output = Params::new(&raw.output, "output");
    let out_dir = output.opt_text("dir")?.unwrap_or_else(|| "out".to_string());
    output.finish()?;

    let mut probe = Params::new(&raw.experiment, "experiment");
    let workers = probe.opt_usize("workers")?;
    drop(probe);

    let config = RunConfig {
        spec,
        raw_experiment: raw.experiment,
        out_dir,
        workers,
        subcommand: subcommand.to_string(),
    };
    validate_experiment(&config)?;
    Ok(config)
}

fn build_model(section: &Section) -> Result<OperatorSpec, ConfigError> {
    let mut model = Params::new(section, "model");
    let g_terms = model.req_triples("g")?;
    let f_terms = model.req_triples("f")?;
    let kernel_terms = model.req_triples("kernel")?;
    let rho = model.req_f64("rho")?;
    let eps = model.req_f64("eps")?;
    let omega = model.req_f64("omega")?;
    let dc_a = model.req_f64("dc_a")?;
    let dc_power = model.req_f64("dc_power")?;
    let f_min = model.opt_f64("f_min")?;
    let line = model.line_of("eps");
    model.finish()?;

    if eps < 0.0 {
        return Err(err(line, "eps must be >= 0"));
    }
    if eps >= 1.0 {
        return Err(err(line, "eps must be < 1"));
    }
    if rho <= 0.0 {
        return Err(err(section.get("rho").map(|(l, _)| *l).unwrap_or(0), "rho must be > 0"));
    }
    let g = TrigPolynomial::from_terms(&g_terms)
        .map_err(|e| err(line_of(section, "g"), format!("g: {e}")))?;
    let f = TrigPolynomial::from_terms(&f_terms)
        .map_err(|e| err(line_of(section, "f"), format!("f: {e}")))?;
    let potential = MeromorphicPotential::new(g, f)
        .map_err(|e| err(line_of(section, "g"), format!("potential: {e}")))?;
    let kernel = ToeplitzKernel::from_terms(&kernel_terms, rho)
        .map_err(|e| err(line_of(section, "kernel"), format!("{e}")))?;
    let freq = Frequency::new(omega, dc_a, dc_power)
        .map_err(|e| err(line_of(section, "omega"), format!("{e}")))?;
    let mut spec = OperatorSpec::new(potential, kernel, eps, freq)
        .map_err(|e| err(line, format!("{e}")))?;
    if let Some(f_min) = f_min {
        if f_min <= 0.0 {
            return Err(err(line_of(section, "f_min"), "f_min must be > 0"));
        }
        spec = spec.with_f_min(f_min);
    }
    Ok(spec)
}

fn line_of(section: &Section, key: &str) -> usize {
    section.get(key).map(|(l, _)| *l).unwrap_or(0)
}

/// Walk the experiment section exactly as the runner will, so missing,
/// ill-typed, out-of-range, and unknown keys all fail before any
/// computation starts.
fn validate_experiment(config: &RunConfig) -> Result<(), ConfigError> {
    let mut p = config.experiment();
    let _ = p.opt_usize("workers")?;
    match config.subcommand.as_str() {
        "dioph" => {
            let k_max = p.req_u64("k_max")?;
            if k_max == 0 {
                return Err(err(0, "k_max must be >= 1"));
            }
        }
        "green" => {
            require_window(p.req_usize("n")?)?;
            p.req_f64("e")?;
            let x0 = p.opt_f64("x0")?;
            let grid = p.opt_usize("x_grid")?;
            if x0.is_none() && grid.is_none() {
                return Err(err(0, "green needs `x0` or `x_grid`"));
            }
        }
        "shiftscan" => {
            require_window(p.req_usize("n")?)?;
            p.req_f64("e")?;
            require_grid(p.req_usize("x_grid")?)?;
        }
        "ldt" => {
            require_window(p.req_usize("n")?)?;
            p.req_f64("e")?;
            let ms = p.req_usize_list("m_list")?;
            if ms.is_empty() || ms.contains(&0) {
                return Err(err(0, "m_list entries must be >= 1"));
            }
            require_grid(p.req_usize("x_grid")?)?;
            let threshold = p.req_f64("threshold")?;
            if threshold <= 0.0 {
                return Err(err(0, "threshold must be > 0"));
            }
        }
        "avgdet" => {
            require_window(p.req_usize("n")?)?;
            let grid = p.req_usize("x_grid")?;
            if grid < 256 {
                return Err(err(0, "x_grid must be >= 256"));
            }
            if p.req_f64_list("e_list")?.is_empty() {
                return Err(err(0, "e_list must be nonempty"));
            }
        }
        "cartan" => {
            let trials = p.req_usize("trials")?;
            if trials == 0 {
                return Err(err(0, "trials must be >= 1"));
            }
            require_grid(p.req_usize("grid")?)?;
            p.req_u64("seed")?;
            let _ = p.opt_f64("r")?;
            let _ = p.opt_f64("r2")?;
            let _ = p.opt_f64("h")?;
            let _ = p.opt_f64("hp")?;
            let _ = p.opt_f64("delta")?;
            let _ = p.opt_usize("max_zeros")?;
            let _ = p.opt_usize("max_poles")?;
        }
        "sublevel" => {
            p.req_f64("e")?;
            let eps_list = p.req_f64_list("eps_list")?;
            if eps_list.iter().any(|&e| e <= 0.0) {
                return Err(err(0, "eps_list entries must be > 0"));
            }
            let depth = p.req_usize("depth")?;
            if depth == 0 || depth > 24 {
                return Err(err(0, "depth must lie in 1..=24"));
            }
            let _ = p.opt_bool("normalized", false)?;
        }
        "pave" => {
            require_window(p.req_usize("n")?)?;
            require_window(p.req_usize("m")?)?;
        }
        "patch" => {
            require_window(p.req_usize("n")?)?;
            require_window(p.req_usize("m")?)?;
            p.req_f64("e")?;
            p.req_f64("x0")?;
            let _ = p.opt_bool("use_good_shift", true)?;
            let _ = p.opt_f64("c0")?;
            let _ = p.opt_f64("slack")?;
        }
        "badset" => {
            let ns = p.req_usize_list("n_list")?;
            if ns.is_empty() || ns.contains(&0) {
                return Err(err(0, "n_list entries must be >= 1"));
            }
            require_grid(p.req_usize("grid")?)?;
            p.req_f64("e")?;
            require_positive(p.req_f64("c0")?, "c0")?;
            require_positive(p.req_f64("slack_rate")?, "slack_rate")?;
        }
        "orbit" => {
            require_window(p.req_usize("n")?)?;
            require_grid(p.req_usize("grid")?)?;
            p.req_f64("e")?;
            require_positive(p.req_f64("c0")?, "c0")?;
            p.req_f64("slack")?;
            p.req_f64("x0")?;
            require_window(p.req_usize("n1")?)?;
            let delta = p.req_f64("delta")?;
            if !(0.0..1.0).contains(&delta) {
                return Err(err(0, "delta must lie in [0, 1)"));
            }
        }
        "localize" => {
            require_window(p.req_usize("n")?)?;
            p.req_f64("x0")?;
            let _ = p.opt_usize("stride")?;
            let _ = p.opt_f64("e_lo")?;
            let _ = p.opt_f64("e_hi")?;
        }
        other => return Err(err(0, format!("unknown subcommand `{other}`"))),
    }
    p.finish()
}

fn require_window(n: usize) -> Result<usize, ConfigError> {
    if n == 0 {
        return Err(err(0, "window size must be >= 1"));
    }
    Ok(n)
}

fn require_grid(grid: usize) -> Result<usize, ConfigError> {
    if grid == 0 {
        return Err(err(0, "grid must be >= 1"));
    }
    Ok(grid)
}

fn require_positive(v: f64, key: &str) -> Result<f64, ConfigError> {
    if v <= 0.0 {
        return Err(err(0, format!("{key} must be > 0")));
    }
    Ok(v)
}

fn as_usize(v: f64) -> Option<usize> {
    (v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53)).then_some(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL_MARYLAND: &str = r#"
[model]
g = [(1, 0.0, -0.5)]           # sin(2pi x)
f = [(0, 1.0, 0.0), (1, 0.5, 0.0)]
kernel = [(1, 0.18393972058572117, 0.0), (2, 0.06766764161830635, 0.0)]
rho = 1.0
eps = 0.05
omega = 0.6180339887498949
dc_a = 0.1
dc_power = 2.0

[experiment]
k_max = 100

[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_parses() {
        let config = parse_config(MINIMAL_MARYLAND, "dioph").unwrap();
        assert_eq!(config.spec.coupling(), 0.05);
        assert_eq!(config.out_dir, "out");
    }

    #[test]
    fn negative_eps_is_rejected_with_range_message() {
        let text = MINIMAL_MARYLAND.replace("eps = 0.05", "eps = -0.1");
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("eps must be >= 0"), "{e}");
    }

    #[test]
    fn kernel_decay_violation_is_rejected() {
        let text = MINIMAL_MARYLAND.replace(
            "kernel = [(1, 0.18393972058572117, 0.0), (2, 0.06766764161830635, 0.0)]",
            "kernel = [(3, 1.0, 0.0)]",
        );
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("kernel decay violated at n=3"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL_MARYLAND.replace("k_max = 100", "k_max = 100\nbogus = 1");
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("unknown key `bogus`"), "{e}");

        let text = MINIMAL_MARYLAND.replace("rho = 1.0", "rho = 1.0\nmystery = 2");
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("unknown key `mystery`"), "{e}");
    }

    #[test]
    fn missing_required_key_is_rejected() {
        let text = MINIMAL_MARYLAND.replace("k_max = 100", "");
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("missing required key `k_max`"), "{e}");
    }

    #[test]
    fn multiline_lists_parse() {
        let text = MINIMAL_MARYLAND.replace(
            "kernel = [(1, 0.18393972058572117, 0.0), (2, 0.06766764161830635, 0.0)]",
            "kernel = [(1, 0.18393972058572117, 0.0),\n  (2, 0.06766764161830635, 0.0)]",
        );
        assert!(parse_config(&text, "dioph").is_ok());
    }

    #[test]
    fn rational_frequency_is_rejected() {
        let text = MINIMAL_MARYLAND.replace("omega = 0.6180339887498949", "omega = 0.5");
        let e = parse_config(&text, "dioph").unwrap_err();
        assert!(e.message.contains("rational"), "{e}");
    }

    #[test]
    fn line_numbers_point_at_the_offender() {
        let text = "[model]\ng = oops\n";
        let e = parse_config(text, "dioph").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
