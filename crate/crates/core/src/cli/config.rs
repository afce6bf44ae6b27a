use serde::{Deserialize, Serialize};

use crate::constants::Dimension;
use crate::error::{Error, Result};
use crate::monotone::PolynomialSpec;
use crate::radial_ivp::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Certify,
    Shoot,
    ConstructOdd,
    ConstructEven,
    Thm31,
    N0Scan,
    Iterate,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Certify => "certify",
            Experiment::Shoot => "shoot",
            Experiment::ConstructOdd => "construct-odd",
            Experiment::ConstructEven => "construct-even",
            Experiment::Thm31 => "thm31",
            Experiment::N0Scan => "n0-scan",
            Experiment::Iterate => "iterate",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimSection {
    pub m: u32,
    pub n: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Full initial data `a_0..a_{m-1}`.
    pub a: Option<Vec<f64>>,
    /// Spherical data with this scale (conformal dimension only).
    pub spherical_lambda: Option<f64>,
    /// `a_0..a_{m-2}` for shooting and constructions.
    pub head: Option<Vec<f64>>,
    /// `a_{m-1}`, combined with `head` when `a` is absent.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub r_max: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub u_cap: Option<f64>,
    pub max_steps: Option<usize>,
}

impl IntegratorSection {
    pub fn apply(&self, mut cfg: IntegratorConfig) -> IntegratorConfig {
        if let Some(r) = self.r_max {
            cfg.set_r_max(r);
        }
        if let Some(t) = self.rel_tol {
            cfg.rel_tol = t;
        }
        if let Some(t) = self.abs_tol {
            cfg.abs_tol = t;
        }
        if let Some(c) = self.u_cap {
            cfg.u_cap = c;
        }
        if let Some(s) = self.max_steps {
            cfg.max_steps = s;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootSection {
    #[serde(default = "default_bracket_tol")]
    pub tol: f64,
    /// Also bracket the certificate threshold below the borderline value.
    #[serde(default)]
    pub threshold: bool,
}

fn default_bracket_tol() -> f64 {
    1e-6
}

impl Default for ShootSection {
    fn default() -> Self {
        ShootSection {
            tol: default_bracket_tol(),
            threshold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    #[serde(default = "default_form_n")]
    pub n: usize,
    #[serde(default)]
    pub annuli: Vec<[f64; 2]>,
    #[serde(default = "yes")]
    pub stop_on_certificate: bool,
}

fn default_form_n() -> usize {
    1024
}

fn yes() -> bool {
    true
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            n: default_form_n(),
            annuli: Vec::new(),
            stop_on_certificate: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateSection {
    /// Explicit `C`; otherwise `C̃_P + c_offset`.
    pub c: Option<f64>,
    #[serde(default)]
    pub c_offset: f64,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub r_trunc: Option<f64>,
    pub boundary_tol: Option<f64>,
    /// Grid levels for Richardson extrapolation of the initial data (0 disables).
    #[serde(default)]
    pub extrapolation_levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Dimension `N`.
    N,
    /// Last initial datum `a_{m-1}`.
    Beta,
    /// Constant `C` of the monotone construction.
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub experiment: Experiment,
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Inclusive range `from, from + step, ..., <= to` appended to `values`.
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,
    pub workers: Option<usize>,
}

impl SweepSection {
    pub fn axis_values(&self) -> Result<Vec<f64>> {
        let mut v = self.values.clone();
        match (self.from, self.to) {
            (Some(a), Some(b)) => {
                let s = self.step.unwrap_or(1.0);
                if !(s > 0.0) {
                    return Err(Error::Config("sweep step must be positive".into()));
                }
                let count = ((b - a) / s + 1e-9).floor();
                if count >= 0.0 {
                    v.extend((0..=count as usize).map(|i| a + i as f64 * s));
                }
            }
            (None, None) => {}
            _ => return Err(Error::Config("sweep range needs both from and to".into())),
        }
        if v.is_empty() {
            return Err(Error::Config("sweep axis is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        Ok(v)
    }
}

/// Parsed run configuration. Every section rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the output root.
    pub output: Option<String>,
    pub dim: Option<DimSection>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub shoot: ShootSection,
    #[serde(default)]
    pub stability: StabilitySection,
    pub polynomial: Option<PolynomialSpec>,
    #[serde(default)]
    pub iterate: IterateSection,
    /// `m` for `n0-scan` when no `dim` is given.
    pub n0_m: Option<u32>,
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dimension(&self) -> Result<Dimension> {
        let d = self
            .dim
            .ok_or_else(|| Error::Config(format!("experiment {} needs [dim]", self.experiment.name())))?;
        Dimension::new(d.m, d.n)
    }

    /// Full initial data from `a`, `spherical_lambda`, or `head` + `beta`.
    pub fn initial_data(&self, dim: Dimension) -> Result<Vec<f64>> {
        let d = &self.data;
        let a = match (&d.a, d.spherical_lambda, &d.head, d.beta) {
            (Some(a), None, None, None) => a.clone(),
            (None, Some(lam), None, None) => {
                if dim.n != 2 * dim.m {
                    return Err(Error::Config("spherical data exist only for N = 2m".into()));
                }
                crate::constants::spherical_initial_data(dim.m, dim.n, lam)
            }
            (None, None, Some(h), Some(b)) => {
                let mut a = h.clone();
                a.push(b);
                a
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of data.a, data.spherical_lambda, or data.head with data.beta".into(),
                ))
            }
        };
        if a.len() != dim.m as usize {
            return Err(Error::Config(format!("need m = {} initial values, got {}", dim.m, a.len())));
        }
        Ok(a)
    }

    pub fn head(&self, dim: Dimension) -> Result<Vec<f64>> {
        let h = self.data.head.clone().unwrap_or_else(|| vec![0.0; dim.m as usize - 1]);
        if h.len() + 1 != dim.m as usize {
            return Err(Error::Config(format!("data.head needs m - 1 = {} entries", dim.m - 1)));
        }
        Ok(h)
    }

    /// Experiment-specific required fields, checked before any computation.
    pub fn validate(&self) -> Result<()> {
        use Experiment::*;
        match self.experiment {
            Solve | Certify => {
                let dim = self.dimension()?;
                self.initial_data(dim)?;
            }
            Shoot | ConstructEven | ConstructOdd => {
                let dim = self.dimension()?;
                self.head(dim)?;
            }
            Thm31 => {
                self.dimension()?;
            }
            N0Scan => {
                if self.dim.is_none() && self.n0_m.is_none() {
                    return Err(Error::Config("n0-scan needs [dim] or n0_m".into()));
                }
            }
            Iterate => {
                let dim = self.dimension()?;
                let p = self
                    .polynomial
                    .as_ref()
                    .ok_or_else(|| Error::Config("iterate needs [polynomial]".into()))?;
                p.check_admissible(dim)?;
            }
            Sweep => {
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::Config("sweep needs [sweep]".into()))?;
                if s.experiment == Sweep {
                    return Err(Error::Config("sweeps do not nest".into()));
                }
                if s.workers == Some(0) {
                    return Err(Error::Config("sweep.workers must be positive".into()));
                }
                let values = s.axis_values()?;
                self.cell(values[0])?.validate()?;
            }
        }
        Ok(())
    }

    /// Configuration of one sweep cell.
    pub fn cell(&self, value: f64) -> Result<RunConfig> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("not a sweep".into()))?;
        let mut c = self.clone();
        c.experiment = s.experiment;
        c.sweep = None;
        match s.axis {
            SweepAxis::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("N axis value {value} is not a positive integer")));
                }
                let m = self.dim.map(|d| d.m).or(self.n0_m).ok_or_else(|| Error::Config("N sweep needs dim.m".into()))?;
                c.dim = Some(DimSection { m, n: value as u32 });
            }
            SweepAxis::Beta => {
                c.data.beta = Some(value);
                c.data.a = None;
                if c.data.head.is_none() {
                    if let Some(d) = self.dim {
                        c.data.head = Some(vec![0.0; d.m.saturating_sub(1) as usize]);
                    }
                }
            }
            SweepAxis::C => c.iterate.c = Some(value),
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_sections() {
        let cfg = RunConfig::from_toml(
            r#"
experiment = "solve"
dim.m = 2
dim.n = 4
data.spherical_lambda = 1.0
integrator.r_max = 10.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Solve);
        assert_eq!(cfg.integrator.r_max, Some(10.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "experiment = \"solve\"\nbogus = 1\n",
            "experiment = \"solve\"\ndim.m = 2\ndim.n = 5\ndim.k = 1\ndata.a = [0.0, 0.0]\n",
            "experiment = \"shoot\"\ndim.m = 2\ndim.n = 5\nshoot.tolerance = 1e-6\n",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn missing_required_fields() {
        assert!(RunConfig::from_toml("experiment = \"solve\"\ndim.m = 2\ndim.n = 5\n").is_err());
        assert!(RunConfig::from_toml("experiment = \"iterate\"\ndim.m = 2\ndim.n = 6\n").is_err());
        assert!(RunConfig::from_toml("experiment = \"n0-scan\"\n").is_err());
    }

    #[test]
    fn sweep_axis_values() {
        let cfg = RunConfig::from_toml(
            "experiment = \"sweep\"\ndim.m = 2\ndim.n = 5\n[sweep]\nexperiment = \"shoot\"\naxis = \"n\"\nfrom = 5\nto = 13\n",
        )
        .unwrap();
        let v = cfg.sweep.as_ref().unwrap().axis_values().unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(cfg.cell(7.0).unwrap().dim.unwrap().n, 7);
        let empty = "experiment = \"sweep\"\ndim.m = 2\ndim.n = 5\n[sweep]\nexperiment = \"shoot\"\naxis = \"n\"\n";
        assert!(matches!(RunConfig::from_toml(empty), Err(Error::Config(_))));
    }
}
