//! Command-line and config-file handling.
//!
//! Settings are merged from four layers, later layers winning: built-in
//! defaults, `--seed-defaults`, the `--config` file, explicit flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fracext_core::harness::{ErrorMode, StudySpec, Vary};
use fracext_core::problems::Discretization;

#[derive(Parser, Debug)]
#[command(
    name = "fracext",
    version,
    about = "Spectral-fractional elliptic solves via the extension problem",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Solve (-A)^s u = f and print the trace u on the grid
    Solve(Options),
    /// Evaluate the extension v(t) on a list of t values
    Extend(Options),
    /// Run a convergence study and print the rate table
    Study(Options),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Options {
    /// Problem name: sine1d, disk, elliptic1d, elliptic1d-variable
    #[arg(long)]
    pub problem: Option<String>,
    /// Fractional power in (0, 1]; a comma list for `study`
    #[arg(long)]
    pub s: Option<String>,
    /// Truncation point of the extended variable
    #[arg(long = "M")]
    pub m: Option<String>,
    /// Index of the last quadrature cell (h = M / (N + 1)); excludes --h
    #[arg(long = "N")]
    pub n_cells: Option<String>,
    /// Extended step; excludes --N
    #[arg(long)]
    pub h: Option<String>,
    /// Spatial resolution: interior nodes (1D) or radial cells (disk)
    #[arg(long)]
    pub n: Option<String>,
    /// Angular nodes on the disk
    #[arg(long)]
    pub nth: Option<String>,
    /// Comma list of t values for `extend`
    #[arg(long)]
    pub t: Option<String>,
    /// Comma list of mesh levels for `study`
    #[arg(long)]
    pub levels: Option<String>,
    /// Study variable: spatial, extended, truncation
    #[arg(long)]
    pub vary: Option<String>,
    /// Study error mode: exact, reference, milne
    #[arg(long)]
    pub mode: Option<String>,
    /// Trace solver: extension, split, spectral
    #[arg(long)]
    pub solver: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Flat key=value file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from M = 100, s = 0.9, problem sine1d
    #[arg(long)]
    pub seed_defaults: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Extend,
    Study,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// How the extended step is given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Cells(usize),
    Width(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: String,
    pub solver: String,
    pub s_values: Vec<f64>,
    /// Explicit truncation; `None` leaves command defaults in place.
    pub m: Option<f64>,
    pub step: Option<Step>,
    pub n: Option<usize>,
    pub nth: Option<usize>,
    pub t_values: Vec<f64>,
    pub levels: Option<Vec<f64>>,
    pub vary: Vary,
    pub mode: Option<ErrorMode>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_M: f64 = 20.0;
pub const DEFAULT_H: f64 = 1e-3;

const KEYS: &[&str] = &[
    "problem", "s", "M", "N", "h", "n", "nth", "t", "levels", "vary", "mode", "solver", "out",
    "format",
];

type Layer = BTreeMap<String, String>;

fn seed_layer() -> Layer {
    [("M", "100"), ("s", "0.9"), ("problem", "sine1d")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped; keys may carry leading dashes.
pub fn parse_config_text(text: &str) -> Result<Layer> {
    let mut layer = Layer::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            anyhow!(
                "config line {}: expected key=value, got `{raw}`",
                lineno + 1
            )
        })?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        let key = match key.as_str() {
            "m" => "M".to_string(),
            "seed-defaults" => bail!("config line {}: seed-defaults is a flag only", lineno + 1),
            _ => key,
        };
        if !KEYS.contains(&key.as_str()) {
            bail!(
                "config line {}: unknown key `{key}` (known: {})",
                lineno + 1,
                KEYS.join(", ")
            );
        }
        layer.insert(key, value.trim().to_string());
    }
    Ok(layer)
}

fn flag_layer(o: &Options) -> Layer {
    let pairs: [(&str, Option<String>); 14] = [
        ("problem", o.problem.clone()),
        ("s", o.s.clone()),
        ("M", o.m.clone()),
        ("N", o.n_cells.clone()),
        ("h", o.h.clone()),
        ("n", o.n.clone()),
        ("nth", o.nth.clone()),
        ("t", o.t.clone()),
        ("levels", o.levels.clone()),
        ("vary", o.vary.clone()),
        ("mode", o.mode.clone()),
        ("solver", o.solver.clone()),
        ("out", o.out.as_ref().map(|p| p.display().to_string())),
        ("format", o.format.clone()),
    ];
    pairs
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
}

/// Overlays `top` on `base`. `h` and `N` describe the same quantity, so a
/// layer giving one drops the other from the layers below it.
fn overlay(base: &mut Layer, top: Layer) -> Result<()> {
    if top.contains_key("h") && top.contains_key("N") {
        bail!("conflicting parameters: give either h or N, not both");
    }
    if top.contains_key("h") {
        base.remove("N");
    }
    if top.contains_key("N") {
        base.remove("h");
    }
    base.extend(top);
    Ok(())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| anyhow!("invalid value for {key}: `{v}` is not a number"))?;
    if !x.is_finite() {
        bail!("invalid value for {key}: `{v}` is not finite");
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| anyhow!("invalid value for {key}: `{v}` is not a non-negative integer"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = v
        .split(',')
        .map(|x| parse_f64(key, x))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("invalid value for {key}: empty list");
    }
    Ok(items)
}

fn check_s(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        bail!("invalid value for s: {s} is outside the valid interval (0, 1]");
    }
    Ok(s)
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let (command, opts) = match &cli.command {
            CliCommand::Solve(o) => (Command::Solve, o),
            CliCommand::Extend(o) => (Command::Extend, o),
            CliCommand::Study(o) => (Command::Study, o),
        };
        let file = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                Some(parse_config_text(&text)?)
            }
            None => None,
        };
        Self::from_layers(command, opts.seed_defaults, file, flag_layer(opts))
    }

    /// Merges the layers and validates every value.
    pub fn from_layers(
        command: Command,
        seed_defaults: bool,
        file: Option<Layer>,
        flags: Layer,
    ) -> Result<Self> {
        let mut merged = Layer::new();
        if seed_defaults {
            overlay(&mut merged, seed_layer())?;
        }
        if let Some(file) = file {
            overlay(&mut merged, file)?;
        }
        overlay(&mut merged, flags)?;
        let get = |k: &str| merged.get(k).map(String::as_str);

        let s_values: Vec<f64> = parse_list("s", get("s").unwrap_or("0.5"))?
            .into_iter()
            .map(check_s)
            .collect::<Result<_>>()?;
        if command != Command::Study && s_values.len() != 1 {
            bail!(
                "invalid value for s: `{}` needs a single value",
                get("s").unwrap_or("")
            );
        }

        let m = get("M")
            .map(|v| {
                let m = parse_f64("M", v)?;
                if m <= 0.0 {
                    bail!("invalid value for M: need M > 0, got {m}");
                }
                Ok(m)
            })
            .transpose()?;
        let step = match (get("N"), get("h")) {
            (Some(n), None) => {
                let n = parse_usize("N", n)?;
                if n == 0 {
                    bail!("invalid value for N: need N >= 1");
                }
                Some(Step::Cells(n))
            }
            (None, Some(h)) => {
                let h = parse_f64("h", h)?;
                if h <= 0.0 {
                    bail!("invalid value for h: need h > 0, got {h}");
                }
                Some(Step::Width(h))
            }
            (None, None) => None,
            (Some(_), Some(_)) => bail!("conflicting parameters: give either h or N, not both"),
        };
        let n = get("n").map(|v| parse_usize("n", v)).transpose()?;
        let nth = get("nth").map(|v| parse_usize("nth", v)).transpose()?;
        let t_values = parse_list("t", get("t").unwrap_or("0,0.5,1,2"))?;
        if let Some(t) = t_values.iter().find(|t| **t < 0.0) {
            bail!("invalid value for t: {t} is negative");
        }
        let levels = get("levels").map(|v| parse_list("levels", v)).transpose()?;
        let vary: Vary = get("vary")
            .unwrap_or("spatial")
            .parse()
            .map_err(|e| anyhow!("invalid value for vary: {e}"))?;
        let mode = get("mode")
            .map(|v| v.parse::<ErrorMode>())
            .transpose()
            .map_err(|e| anyhow!("invalid value for mode: {e}"))?;
        let format = match get("format").unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => bail!("invalid value for format: `{other}` (expected csv or json)"),
        };
        Ok(RunConfig {
            command,
            problem: get("problem").unwrap_or("sine1d").to_string(),
            solver: get("solver").unwrap_or("extension").to_string(),
            s_values,
            m,
            step,
            n,
            nth,
            t_values,
            levels,
            vary,
            mode,
            out: get("out").map(PathBuf::from),
            format,
        })
    }

    pub fn s(&self) -> f64 {
        self.s_values[0]
    }

    /// Spatial resolution override, if any was given.
    pub fn discretization(&self, default: Discretization) -> Discretization {
        match (self.n, self.nth) {
            (None, None) => default,
            (n, nth) => Discretization {
                n: n.unwrap_or(default.n),
                nth: nth.or(default.nth),
            },
        }
    }

    /// Study specification: the desk defaults for the chosen variable with
    /// any explicitly given parameter applied on top.
    pub fn study_spec(&self, default_disc: Discretization) -> Result<StudySpec> {
        let mut spec = StudySpec::desk_default(&self.problem, self.vary, self.s_values.clone());
        spec.solver = self.solver.clone();
        if let Some(levels) = &self.levels {
            spec.levels = levels.clone();
        }
        if let Some(m) = self.m {
            spec.m = m;
        }
        match self.step {
            Some(Step::Width(h)) => spec.h = h,
            Some(Step::Cells(n)) => spec.h = spec.m / (n + 1) as f64,
            None => {}
        }
        if let Some(mode) = self.mode {
            spec.mode = mode;
        }
        if self.n.is_some() || self.nth.is_some() {
            if self.vary == Vary::SpatialDx && self.n.is_some() {
                bail!("--n conflicts with --vary spatial; the levels set the resolution");
            }
            spec.discretization = Some(self.discretization(default_disc));
            spec.nth = self.nth;
        }
        spec.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(pairs: &[(&str, &str)]) -> Layer {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn flags_beat_file_beat_seed() {
        let file = layer(&[("s", "0.3"), ("M", "50")]);
        let flags = layer(&[("s", "0.7")]);
        let cfg = RunConfig::from_layers(Command::Solve, true, Some(file), flags).unwrap();
        assert_eq!(cfg.s(), 0.7);
        assert_eq!(cfg.m, Some(50.0));
        assert_eq!(cfg.problem, "sine1d");
    }

    #[test]
    fn seed_defaults() {
        let cfg = RunConfig::from_layers(Command::Study, true, None, Layer::new()).unwrap();
        assert_eq!(cfg.s_values, [0.9]);
        assert_eq!(cfg.m, Some(100.0));
    }

    #[test]
    fn s_out_of_range_names_interval() {
        let err = RunConfig::from_layers(Command::Solve, false, None, layer(&[("s", "1.5")]))
            .unwrap_err()
            .to_string();
        assert!(err.contains("(0, 1]"), "{err}");
    }

    #[test]
    fn h_and_n_conflict_in_one_layer_only() {
        assert!(RunConfig::from_layers(
            Command::Solve,
            false,
            None,
            layer(&[("h", "0.01"), ("N", "99")])
        )
        .is_err());
        let cfg = RunConfig::from_layers(
            Command::Solve,
            false,
            Some(layer(&[("h", "0.01")])),
            layer(&[("N", "99")]),
        )
        .unwrap();
        assert_eq!(cfg.step, Some(Step::Cells(99)));
    }

    #[test]
    fn config_text() {
        let l =
            parse_config_text("# comment\nproblem = disk\n--M=5\n\nnth = 24 # trailing\n").unwrap();
        assert_eq!(l["problem"], "disk");
        assert_eq!(l["M"], "5");
        assert_eq!(l["nth"], "24");
        assert!(parse_config_text("colour = blue").is_err());
        assert!(parse_config_text("no equals sign").is_err());
    }

    #[test]
    fn multiple_s_only_for_study() {
        let flags = layer(&[("s", "0.5,0.7")]);
        assert!(RunConfig::from_layers(Command::Solve, false, None, flags.clone()).is_err());
        let cfg = RunConfig::from_layers(Command::Study, false, None, flags).unwrap();
        assert_eq!(cfg.s_values, [0.5, 0.7]);
    }

    #[test]
    fn study_spec_from_flags() {
        let flags = layer(&[("vary", "spatial"), ("s", "0.9")]);
        let cfg = RunConfig::from_layers(Command::Study, false, None, flags).unwrap();
        let spec = cfg.study_spec(Discretization::line(63)).unwrap();
        assert_eq!(spec.levels, [0.04, 0.02, 0.01, 0.005]);
        assert_eq!(spec.mode, ErrorMode::Exact);
        let bad = layer(&[("vary", "extended"), ("levels", "0.1,0.07,0.01")]);
        let cfg = RunConfig::from_layers(Command::Study, false, None, bad).unwrap();
        assert!(cfg.study_spec(Discretization::line(63)).is_err());
    }

    #[test]
    fn bad_values() {
        for (k, v) in [
            ("M", "-1"),
            ("h", "zero"),
            ("format", "xml"),
            ("vary", "up"),
            ("t", "-1"),
        ] {
            assert!(
                RunConfig::from_layers(Command::Extend, false, None, layer(&[(k, v)])).is_err(),
                "{k}={v}"
            );
        }
    }
}
