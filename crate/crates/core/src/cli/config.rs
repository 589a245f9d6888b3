//! Run configuration: flat `key = value` lines with `#` comments.
//!
//! Keys before the first section header apply to every command. A
//! `[check]`, `[pressure]`, `[decay]` or `[report]` section overrides them
//! for that command only.

use std::fmt;
use std::str::FromStr;

use crate::map_model::{make_dyadic_family, make_perturbed_family, EpsDecay, MapFamily, PerturbedParams};
use crate::numerics::fmt_f64;
use crate::srb::Observable;
use crate::thermo::PotentialShift;

pub const SECTIONS: [&str; 4] = ["check", "pressure", "decay", "report"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Dyadic,
    Perturbed,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Dyadic => "dyadic",
            FamilyKind::Perturbed => "perturbed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: FamilyKind,
    pub trunc_n: usize,
    pub eps: f64,
    pub decay: EpsDecay,
    pub shear: f64,
    /// Overrides of the family's reference constants.
    pub alpha: Option<f64>,
    pub k0: Option<f64>,
    pub c0: Option<f64>,
    pub grid: usize,
    pub cone_samples: usize,
    pub orbit_length: usize,
    pub seed: u64,
    pub n_max: usize,
    pub bins: usize,
    pub lags: usize,
    pub max_rank: usize,
    pub anchor: usize,
    pub tol: f64,
    pub shift: PotentialShift,
    pub obs1: String,
    pub obs2: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Dyadic,
            trunc_n: 20,
            eps: 0.1,
            decay: EpsDecay::Geometric,
            shear: 0.0,
            alpha: None,
            k0: None,
            c0: None,
            grid: 64,
            cone_samples: 10_000,
            orbit_length: 1_000_000,
            seed: 0,
            n_max: 8,
            bins: 4096,
            lags: 12,
            max_rank: 4,
            anchor: 1,
            tol: 1e-3,
            shift: PotentialShift::None,
            obs1: "x".into(),
            obs2: "x".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError(format!("{key}: cannot parse '{value}': {e}")))
}

impl RunConfig {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "family" => {
                self.family = match value {
                    "dyadic" => FamilyKind::Dyadic,
                    "perturbed" => FamilyKind::Perturbed,
                    other => return Err(ConfigError(format!("family: unknown family '{other}'"))),
                }
            }
            "truncN" => self.trunc_n = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "decay" => self.decay = value.parse().map_err(|e| ConfigError(format!("decay: {e}")))?,
            "shear" => self.shear = parse(key, value)?,
            "alpha" => self.alpha = Some(parse(key, value)?),
            "K0" => self.k0 = Some(parse(key, value)?),
            "C0" => self.c0 = Some(parse(key, value)?),
            "grid" => self.grid = parse(key, value)?,
            "coneSamples" => self.cone_samples = parse(key, value)?,
            "orbitLength" => self.orbit_length = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "nMax" => self.n_max = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "lags" => self.lags = parse(key, value)?,
            "maxRank" => self.max_rank = parse(key, value)?,
            "anchor" => self.anchor = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "shift" => self.shift = parse(key, value)?,
            "obs1" => self.obs1 = value.to_string(),
            "obs2" => self.obs2 = value.to_string(),
            other => return Err(ConfigError(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `text` for `command`: global keys first, then that command's
    /// section.
    pub fn parse_for(text: &str, command: &str) -> Result<Self, ConfigError> {
        let mut global = Vec::new();
        let mut local = Vec::new();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {}: malformed section header", n + 1)))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError(format!("line {}: unknown section '{name}'", n + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected 'key = value'", n + 1)))?;
            let entry = (n + 1, key.trim().to_string(), value.trim().to_string());
            match &section {
                None => global.push(entry),
                Some(s) if s == command => local.push(entry),
                Some(_) => {
                    // other sections are still validated
                    RunConfig::default()
                        .set(&entry.1, &entry.2)
                        .map_err(|e| ConfigError(format!("line {}: {e}", entry.0)))?;
                }
            }
        }
        let mut cfg = RunConfig::default();
        for (n, k, v) in global.iter().chain(&local) {
            cfg.set(k, v).map_err(|e| ConfigError(format!("line {n}: {e}")))?;
        }
        Ok(cfg)
    }

    pub fn build_family(&self) -> Result<MapFamily, ConfigError> {
        let fam = match self.family {
            FamilyKind::Dyadic => make_dyadic_family(self.trunc_n),
            FamilyKind::Perturbed => make_perturbed_family(PerturbedParams {
                trunc_n: self.trunc_n,
                eps: self.eps,
                decay: self.decay,
                shear: self.shear,
            }),
        }
        .map_err(|e| ConfigError(e.to_string()))?;
        if self.alpha.is_none() && self.k0.is_none() && self.c0.is_none() {
            return Ok(fam);
        }
        fam.with_parameters(
            self.alpha.unwrap_or(fam.alpha()),
            self.k0.unwrap_or(fam.k0()),
            self.c0.unwrap_or(fam.c0()),
        )
        .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn observables(&self) -> Result<(Observable, Observable), ConfigError> {
        let get = |name: &str| Observable::by_name(name).map_err(|e| ConfigError(e.to_string()));
        Ok((get(&self.obs1)?, get(&self.obs2)?))
    }

    /// The resolved configuration in the input format.
    pub fn echo(&self) -> String {
        let mut lines = vec![
            format!("family = {}", self.family),
            format!("truncN = {}", self.trunc_n),
        ];
        let decay = match self.decay {
            EpsDecay::Constant => "constant",
            EpsDecay::Geometric => "geometric",
        };
        lines.push(format!("eps = {}", fmt_f64(self.eps)));
        lines.push(format!("decay = {decay}"));
        lines.push(format!("shear = {}", fmt_f64(self.shear)));
        for (k, v) in [("alpha", self.alpha), ("K0", self.k0), ("C0", self.c0)] {
            lines.push(match v {
                Some(v) => format!("{k} = {}", fmt_f64(v)),
                None => format!("# {k} = family default"),
            });
        }
        lines.extend([
            format!("grid = {}", self.grid),
            format!("coneSamples = {}", self.cone_samples),
            format!("orbitLength = {}", self.orbit_length),
            format!("seed = {}", self.seed),
            format!("nMax = {}", self.n_max),
            format!("bins = {}", self.bins),
            format!("lags = {}", self.lags),
            format!("maxRank = {}", self.max_rank),
            format!("anchor = {}", self.anchor),
            format!("tol = {}", fmt_f64(self.tol)),
            format!("shift = {}", self.shift),
            format!("obs1 = {}", self.obs1),
            format!("obs2 = {}", self.obs2),
        ]);
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_override_globals() {
        let text = "family = perturbed # nonlinear\neps = 0.05\n\n[decay]\neps = 0.1\n[check]\ngrid = 8\n";
        let d = RunConfig::parse_for(text, "decay").unwrap();
        assert_eq!(d.family, FamilyKind::Perturbed);
        assert_eq!(d.eps, 0.1);
        assert_eq!(d.grid, 64);
        let c = RunConfig::parse_for(text, "check").unwrap();
        assert_eq!(c.eps, 0.05);
        assert_eq!(c.grid, 8);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(RunConfig::parse_for("truncN 20", "check").is_err());
        assert!(RunConfig::parse_for("truncN = twenty", "check").is_err());
        assert!(RunConfig::parse_for("colour = red", "check").is_err());
        assert!(RunConfig::parse_for("[plots]\n", "check").is_err());
        assert!(RunConfig::parse_for("[decay]\nbins = x\n", "check").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text =
            "family = perturbed\neps = 0.1\ndecay = constant\nshear = 0.05\nK0 = 1.4\nseed = 9\nshift = step:0.25\n";
        let cfg = RunConfig::parse_for(text, "report").unwrap();
        assert_eq!(RunConfig::parse_for(&cfg.echo(), "report").unwrap(), cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse_for(&d.echo(), "check").unwrap(), d);
    }

    #[test]
    fn parameter_overrides_reach_the_family() {
        let cfg = RunConfig::parse_for("alpha = 0.25", "check").unwrap();
        let fam = cfg.build_family().unwrap();
        assert_eq!(fam.alpha(), 0.25);
        assert_eq!(fam.k0(), 2.0);
        assert!(RunConfig::parse_for("truncN = 1", "check")
            .unwrap()
            .build_family()
            .is_err());
    }
}
