//! Strict sectioned key-value run configuration. Unknown sections or keys
//! are errors; every invariant is validated before any computation starts.

use num_complex::Complex64;
use ucs_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub function_id: String,
    pub params: Vec<f64>,
    pub left_margin: f64,
    pub right_margin: f64,
    pub h: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    pub probes: Vec<Complex64>,
    pub fe_samples: Vec<f64>,
    pub tol_solver: f64,
    pub tol_pipeline: f64,
    pub oscillation_cap: f64,
    pub output_path: Option<String>,
    pub format: OutputFormat,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            function_id: "pw".into(),
            params: vec![1.0],
            left_margin: 40.0,
            right_margin: 12.0,
            h: 1.0 / 128.0,
            t_min: 0.0,
            t_max: 0.0,
            t_step: 0.25,
            probes: vec![Complex64::new(0.0, 1.0)],
            fe_samples: vec![],
            tol_solver: 1e-10,
            tol_pipeline: 1e-3,
            oscillation_cap: 0.1,
            output_path: None,
            format: OutputFormat::Csv,
            seed: 1,
            jobs: 0,
        }
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("line {line}: `{key}` expects a real number, got `{v}`")))
}

fn parse_f64_list(v: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(vec![]);
    }
    v.split(',')
        .map(|p| parse_f64(p, line, key))
        .collect()
}

/// Complex literals of the form `a+bi` / `a-bi` / `bi` / `a`.
pub fn parse_complex(v: &str) -> Option<Complex64> {
    let s: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // split at the last +/- that is not an exponent sign or leading
        let chars: Vec<char> = body.chars().collect();
        for k in (1..chars.len()).rev() {
            let c = chars[k];
            if (c == '+' || c == '-') && chars[k - 1] != 'e' && chars[k - 1] != 'E' {
                let re: f64 = body[..k].parse().ok()?;
                let imt = &body[k..];
                let im: f64 = if imt == "+" {
                    1.0
                } else if imt == "-" {
                    -1.0
                } else {
                    imt.parse().ok()?
                };
                return Some(Complex64::new(re, im));
            }
        }
        let im: f64 = if body.is_empty() {
            1.0
        } else {
            body.parse().ok()?
        };
        return Some(Complex64::new(0.0, im));
    }
    s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0))
}

fn parse_complex_list(v: &str, line: usize, key: &str) -> Result<Vec<Complex64>> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(vec![]);
    }
    v.split(',')
        .map(|p| {
            parse_complex(p).ok_or_else(|| {
                Error::Config(format!(
                    "line {line}: `{key}` expects complex literals like `0.5+2i`, got `{p}`"
                ))
            })
        })
        .collect()
}

impl RunConfig {
    /// Parse the strict sectioned format; every key must be known and every
    /// invariant must hold.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {line_no}: malformed section")))?;
                match name {
                    "function" | "grid" | "scan" | "probes" | "tolerances" | "output" | "run" => {
                        section = name.to_string();
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "line {line_no}: unknown section `[{other}]`"
                        )))
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            match (section.as_str(), key) {
                ("function", "id") => cfg.function_id = value.to_string(),
                ("function", "params") => cfg.params = parse_f64_list(value, line_no, key)?,
                ("grid", "left_margin") => cfg.left_margin = parse_f64(value, line_no, key)?,
                ("grid", "right_margin") => cfg.right_margin = parse_f64(value, line_no, key)?,
                ("grid", "h") => cfg.h = parse_f64(value, line_no, key)?,
                ("scan", "t_min") => cfg.t_min = parse_f64(value, line_no, key)?,
                ("scan", "t_max") => cfg.t_max = parse_f64(value, line_no, key)?,
                ("scan", "t_step") => cfg.t_step = parse_f64(value, line_no, key)?,
                ("probes", "z") => cfg.probes = parse_complex_list(value, line_no, key)?,
                ("probes", "fe_x") => cfg.fe_samples = parse_f64_list(value, line_no, key)?,
                ("tolerances", "solver") => cfg.tol_solver = parse_f64(value, line_no, key)?,
                ("tolerances", "pipeline") => cfg.tol_pipeline = parse_f64(value, line_no, key)?,
                ("tolerances", "oscillation_cap") => {
                    cfg.oscillation_cap = parse_f64(value, line_no, key)?
                }
                ("output", "path") => cfg.output_path = Some(value.to_string()),
                ("output", "format") => {
                    cfg.format = match value {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        other => {
                            return Err(Error::Config(format!(
                                "line {line_no}: format must be csv or json, got `{other}`"
                            )))
                        }
                    }
                }
                ("run", "seed") => {
                    cfg.seed = value.parse().map_err(|_| {
                        Error::Config(format!("line {line_no}: seed expects an integer"))
                    })?
                }
                ("run", "jobs") => {
                    cfg.jobs = value.parse().map_err(|_| {
                        Error::Config(format!("line {line_no}: jobs expects an integer"))
                    })?
                }
                ("", k) => {
                    return Err(Error::Config(format!(
                        "line {line_no}: key `{k}` outside any section"
                    )))
                }
                (s, k) => {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown key `{k}` in section `[{s}]`"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ucs_core::unimodular::make_function(&self.function_id, &self.params)?;
        if !(self.h > 0.0) || !(self.left_margin > 0.0) || !(self.right_margin > 0.0) {
            return Err(Error::Config("grid margins and h must be positive".into()));
        }
        if self.t_max < self.t_min {
            return Err(Error::Config(format!(
                "scan range is empty backwards: t_min = {} > t_max = {}",
                self.t_min, self.t_max
            )));
        }
        if !(self.t_step > 0.0) {
            return Err(Error::Config("t_step must be positive".into()));
        }
        let ratio = self.t_step / self.h;
        if (ratio - ratio.round()).abs() > 1e-12 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "t_step = {} must be a multiple of h = {}",
                self.t_step, self.h
            )));
        }
        for z in &self.probes {
            if !(z.im > 0.0) {
                return Err(Error::Config(format!(
                    "probe {z} must lie in the open upper half-plane; real-line \
                     samples go in `fe_x`"
                )));
            }
            if self.h * z.re.abs() > self.oscillation_cap {
                return Err(Error::Config(format!(
                    "h * |Re z| = {} exceeds the oscillation cap {}",
                    self.h * z.re.abs(),
                    self.oscillation_cap
                )));
            }
        }
        for x in &self.fe_samples {
            if self.h * x.abs() > self.oscillation_cap {
                return Err(Error::Config(format!(
                    "h * |x| = {} exceeds the oscillation cap {}",
                    self.h * x.abs(),
                    self.oscillation_cap
                )));
            }
        }
        Ok(())
    }

    pub fn t_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let n = ((self.t_max - self.t_min) / self.t_step + 1e-9).floor() as usize;
        for k in 0..=n {
            out.push(self.t_min + k as f64 * self.t_step);
        }
        out
    }

    pub fn policy(&self) -> ucs_core::operator::GridPolicy {
        ucs_core::operator::GridPolicy::new(self.left_margin, self.right_margin, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
[function]
id = pw
params = 1.0
[grid]
left_margin = 16
right_margin = 8
h = 0.0078125
[scan]
t_min = -1
t_max = 0.5
t_step = 0.25
[probes]
z = 0+1i, 0.5+2i
fe_x = -2, 2
[tolerances]
solver = 1e-10
pipeline = 1e-3
oscillation_cap = 0.1
[output]
format = csv
[run]
seed = 7
jobs = 2
";

    #[test]
    fn parses_good_config() {
        let cfg = RunConfig::parse(GOOD).unwrap();
        assert_eq!(cfg.function_id, "pw");
        assert_eq!(cfg.probes.len(), 2);
        assert_eq!(cfg.probes[1], Complex64::new(0.5, 2.0));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.t_values().len(), 7);
    }

    #[test]
    fn rejects_unknown_key_and_section() {
        let bad = GOOD.replace("[grid]", "[mesh]");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))));
        let bad = GOOD.replace("left_margin", "leftmargin");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("unknown key"), "{err}");
    }

    #[test]
    fn rejects_step_not_multiple_of_h() {
        let bad = GOOD.replace("t_step = 0.25", "t_step = 0.1");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("multiple of h"), "{err}");
    }

    #[test]
    fn rejects_lower_half_plane_probe() {
        let bad = GOOD.replace("z = 0+1i, 0.5+2i", "z = 0-1i");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn rejects_oscillation_cap_violation() {
        let bad = GOOD.replace("fe_x = -2, 2", "fe_x = 50");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("oscillation cap"), "{err}");
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("2i"), Some(Complex64::new(0.0, 2.0)));
        assert_eq!(parse_complex("1.5"), Some(Complex64::new(1.5, 0.0)));
        assert_eq!(parse_complex("-0.5+1i"), Some(Complex64::new(-0.5, 1.0)));
        assert_eq!(parse_complex("1e-2-3i"), Some(Complex64::new(0.01, -3.0)));
        assert_eq!(parse_complex("zz"), None);
    }
}
