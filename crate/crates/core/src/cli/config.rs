//! Flat `key = value` run configuration and its resolution into a problem,
//! a schedule and solver settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::adapapg::AdapConfig;
use crate::data_io::{lift_features, read_libsvm_file, scale_max_abs};
use crate::error::{Error, Result};
use crate::ippp::{feasible_start_beta, EpsRule, IpppSettings, Schedule, SelectOption, WeakConvexityProfile};
use crate::model::{ConstrainedProblem, Vector};
use crate::problems::{builtin_fixture, default_thresholds, mnpc_build_with, MNPC_LAMBDA};

/// Every key understood by [`RunConfig::from_pairs`].
pub const KEYS: &[&str] = &[
    "name",
    "fixture",
    "data",
    "r",
    "lambda",
    "lift",
    "scale",
    "objective_class",
    "rho_override",
    "x0",
    "schedule",
    "gamma",
    "beta",
    "rho0",
    "rho_c",
    "power",
    "eps_rule",
    "option",
    "eps",
    "k_max",
    "prox_budget",
    "l_min",
    "l_ini",
    "mu0",
    "gamma_inc",
    "gamma_dec",
    "gamma_sc",
    "theta_sc",
    "max_inner_steps",
    "out",
    "trace",
    "report",
    "seed",
    "timing",
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Later occurrences of a key override earlier ones.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("expected key = value, found '{line}'"),
        })?;
        let k = k.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("unknown key '{k}'"),
            });
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::InvalidConfig(format!("{}:{line}: {message}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Fixture(String),
    Mnpc {
        data: PathBuf,
        r: Option<Vec<f64>>,
        lambda: f64,
        lift: Option<f64>,
        scale: bool,
        objective_class: Option<i64>,
        rho_override: Option<f64>,
    },
}

/// Schedule request before problem constants are known.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Convex { gamma: f64, beta: f64, rho0: Option<f64> },
    Nonconvex { beta: f64, rho0: Option<f64>, rho_c: Option<f64> },
    /// `beta = None` selects the theory value for the target `eps`.
    Feasible { beta: Option<f64>, rho0: Option<f64>, rho_c: Option<f64> },
    Scaled { gamma: f64, beta: f64, power: f64, eps: EpsRule },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub instance: InstanceSpec,
    pub schedule: ScheduleSpec,
    pub option: SelectOption,
    pub eps: f64,
    pub k_max: usize,
    pub prox_budget: Option<u64>,
    pub inner: AdapConfig,
    pub x0: Option<Vec<f64>>,
    pub out: PathBuf,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub seed: u64,
    pub timing: bool,
}

/// A configuration resolved against its problem instance.
pub struct Resolved {
    pub problem: ConstrainedProblem,
    pub x0: Vector,
    pub settings: IpppSettings,
}

fn num(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::config(format!("{key}: expected a number, found '{v}'")))
        })
        .transpose()
}

fn num_or(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    Ok(num(map, key)?.unwrap_or(default))
}

fn int(map: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>> {
    map.get(key)
        .map(|v| {
            let t = v.replace('_', "");
            t.parse::<u64>().or_else(|_| {
                // accept exponent notation such as 1e5 when it is integral
                match t.parse::<f64>() {
                    Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
                    _ => Err(Error::config(format!("{key}: expected a non-negative integer, found '{v}'"))),
                }
            })
        })
        .transpose()
}

fn boolean(map: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match map.get(key).map(|s| s.to_ascii_lowercase()) {
        None => Ok(false),
        Some(v) => match v.as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(Error::config(format!("{key}: expected true or false, found '{v}'"))),
        },
    }
}

/// Comma-separated list of reals.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("{key}: bad list entry '{}'", t.trim())))
        })
        .collect()
}

impl RunConfig {
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(format!("unknown key '{k}'")));
        }
        let instance = match (map.get("fixture"), map.get("data")) {
            (Some(_), Some(_)) => return Err(Error::config("give either fixture or data, not both")),
            (Some(f), None) => InstanceSpec::Fixture(f.clone()),
            (None, Some(d)) => InstanceSpec::Mnpc {
                data: PathBuf::from(d),
                r: map.get("r").map(|v| parse_list("r", v)).transpose()?,
                lambda: num_or(map, "lambda", MNPC_LAMBDA)?,
                lift: num(map, "lift")?,
                scale: boolean(map, "scale")?,
                objective_class: map
                    .get("objective_class")
                    .map(|v| {
                        v.parse::<i64>()
                            .map_err(|_| Error::config(format!("objective_class: expected an integer label, found '{v}'")))
                    })
                    .transpose()?,
                rho_override: num(map, "rho_override")?,
            },
            (None, None) => return Err(Error::config("an instance is required: set fixture or data")),
        };
        let schedule_name = map.get("schedule").map_or("convex", String::as_str);
        let schedule = match schedule_name {
            "convex" => ScheduleSpec::Convex {
                gamma: num_or(map, "gamma", 1.0)?,
                beta: num_or(map, "beta", 1.0)?,
                rho0: num(map, "rho0")?,
            },
            "nonconvex" => ScheduleSpec::Nonconvex {
                beta: num_or(map, "beta", 1.0)?,
                rho0: num(map, "rho0")?,
                rho_c: num(map, "rho_c")?,
            },
            "feasible" => ScheduleSpec::Feasible {
                beta: match map.get("beta").map(String::as_str) {
                    None | Some("auto") => None,
                    Some(_) => num(map, "beta")?,
                },
                rho0: num(map, "rho0")?,
                rho_c: num(map, "rho_c")?,
            },
            "scaled" => ScheduleSpec::Scaled {
                gamma: num_or(map, "gamma", 0.1)?,
                beta: num_or(map, "beta", 1000.0)?,
                power: num_or(map, "power", 0.0)?,
                eps: match map.get("eps_rule").map_or("inverse_square", String::as_str) {
                    "inverse_square" => EpsRule::InverseSquare,
                    "penalty_scaled" => EpsRule::PenaltyScaled,
                    other => {
                        return Err(Error::config(format!(
                            "eps_rule: expected inverse_square or penalty_scaled, found '{other}'"
                        )))
                    }
                },
            },
            other => {
                return Err(Error::config(format!(
                    "schedule: expected convex, nonconvex, feasible or scaled, found '{other}'"
                )))
            }
        };
        let option = match map.get("option").map_or("I", String::as_str) {
            "I" | "i" | "1" => SelectOption::I,
            "II" | "ii" | "2" => SelectOption::II,
            other => return Err(Error::config(format!("option: expected I or II, found '{other}'"))),
        };
        let d = AdapConfig::default();
        let inner = AdapConfig {
            l_min: num_or(map, "l_min", d.l_min)?,
            l_ini: num_or(map, "l_ini", d.l_ini)?,
            mu0: num_or(map, "mu0", d.mu0)?,
            gamma_inc: num_or(map, "gamma_inc", d.gamma_inc)?,
            gamma_dec: num_or(map, "gamma_dec", d.gamma_dec)?,
            gamma_sc: num_or(map, "gamma_sc", d.gamma_sc)?,
            theta_sc: num_or(map, "theta_sc", d.theta_sc)?,
            max_prox_steps: int(map, "max_inner_steps")?.unwrap_or(d.max_prox_steps),
            ..d
        };
        inner.validate()?;
        let eps = num_or(map, "eps", 1e-3)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("eps must be positive"));
        }
        let k_max = int(map, "k_max")?.unwrap_or(5000) as usize;
        if k_max == 0 {
            return Err(Error::config("k_max must be positive"));
        }
        let name = map.get("name").cloned().unwrap_or_else(|| match &instance {
            InstanceSpec::Fixture(f) => f.clone(),
            InstanceSpec::Mnpc { data, .. } => data
                .file_stem()
                .map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned()),
        });
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(Error::config(format!("name '{name}' cannot be used as a file name")));
        }
        Ok(Self {
            name,
            instance,
            schedule,
            option,
            eps,
            k_max,
            prox_budget: int(map, "prox_budget")?,
            inner,
            x0: map.get("x0").map(|v| parse_list("x0", v)).transpose()?,
            out: PathBuf::from(map.get("out").map_or(".", String::as_str)),
            trace: map.get("trace").map(PathBuf::from),
            report: map.get("report").map(PathBuf::from),
            seed: int(map, "seed")?.unwrap_or(0),
            timing: boolean(map, "timing")?,
        })
    }

    pub fn trace_path(&self, default_name: &str) -> PathBuf {
        self.trace.clone().unwrap_or_else(|| self.out.join(default_name))
    }

    pub fn report_path(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| self.out.join("kkt_report.txt"))
    }

    pub fn build_problem(&self) -> Result<(ConstrainedProblem, Vector)> {
        let (problem, x0) = match &self.instance {
            InstanceSpec::Fixture(name) => {
                let inst = builtin_fixture(name, self.seed)?;
                (inst.problem, inst.x0)
            }
            InstanceSpec::Mnpc {
                data,
                r,
                lambda,
                lift,
                scale,
                objective_class,
                rho_override,
            } => {
                let (mut ds, _) = read_libsvm_file(data)?;
                if let Some(label) = objective_class {
                    ds = ds.with_objective_class(*label)?;
                }
                if *scale {
                    ds = scale_max_abs(&ds)?;
                }
                if let Some(c) = lift {
                    ds = lift_features(&ds, *c)?;
                }
                let r = r.clone().unwrap_or_else(|| default_thresholds(ds.num_classes()));
                let p = mnpc_build_with(&ds, &r, *lambda, *rho_override)?;
                let x0 = Vector::zeros(p.dim());
                (p, x0)
            }
        };
        let x0 = match &self.x0 {
            Some(v) => {
                if v.len() != problem.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: problem.dim(),
                        found: v.len(),
                    });
                }
                Vector::from_vec(v.clone())
            }
            None => x0,
        };
        Ok((problem, x0))
    }

    pub fn resolve_schedule(&self, p: &ConstrainedProblem) -> Result<Schedule> {
        let profile = || WeakConvexityProfile::from_problem(p);
        let pick = |given: Option<f64>, from: fn(&WeakConvexityProfile) -> f64| -> Result<f64> {
            match given {
                Some(v) => Ok(v),
                None => Ok(from(&profile()?)),
            }
        };
        let schedule = match self.schedule {
            ScheduleSpec::Convex { gamma, beta, rho0 } => Schedule::ConvexSqrt {
                gamma,
                beta,
                rho0: rho0.or(p.f0.meta().weak_convexity),
            },
            ScheduleSpec::Nonconvex { beta, rho0, rho_c } => Schedule::NonconvexCbrt {
                beta,
                rho0: pick(rho0, |w| w.rho0)?,
                rho_c: pick(rho_c, |w| w.rho_c)?,
            },
            ScheduleSpec::Feasible { beta, rho0, rho_c } => {
                let beta = match beta {
                    Some(b) => b,
                    None => {
                        let b_f0 = p
                            .f0
                            .meta()
                            .bound
                            .ok_or_else(|| Error::MissingMetadata("bound of f0 (needed for beta = auto)".into()))?;
                        feasible_start_beta(b_f0, p.reg.value_bound(), p.reg.domain().diameter(), self.eps)
                    }
                };
                Schedule::ConstantFeasible {
                    beta,
                    rho0: pick(rho0, |w| w.rho0)?,
                    rho_c: pick(rho_c, |w| w.rho_c)?,
                }
            }
            ScheduleSpec::Scaled { gamma, beta, power, eps } => Schedule::Scaled { gamma, beta, power, eps },
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let (problem, x0) = self.build_problem()?;
        let schedule = self.resolve_schedule(&problem)?;
        let mut settings = IpppSettings::new(schedule, self.option, self.eps, self.k_max);
        settings.inner = self.inner;
        settings.prox_budget = self.prox_budget;
        settings.timing = self.timing;
        Ok(Resolved { problem, x0, settings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> BTreeMap<String, String> {
        parse_config_text(text).unwrap()
    }

    #[test]
    fn parses_comments_and_overrides() {
        let m = pairs("# run\nfixture = qp1d  # inline\n\nbeta=2\nbeta = 3\nk-max = 1e3\n");
        let c = RunConfig::from_pairs(&m).unwrap();
        assert_eq!(c.instance, InstanceSpec::Fixture("qp1d".into()));
        assert_eq!(c.k_max, 1000);
        assert!(matches!(c.schedule, ScheduleSpec::Convex { beta, .. } if beta == 3.0));
        assert_eq!(c.name, "qp1d");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_config_text("fixture qp1d"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config_text("a = 1\nbogus = 2"), Err(Error::Parse { line: 1, .. })));
        assert!(RunConfig::from_pairs(&pairs("schedule = convex")).is_err());
        assert!(RunConfig::from_pairs(&pairs("fixture = qp1d\noption = III")).is_err());
        assert!(RunConfig::from_pairs(&pairs("fixture = qp1d\neps = -1")).is_err());
        assert!(RunConfig::from_pairs(&pairs("fixture = qp1d\ndata = a.txt")).is_err());
    }

    #[test]
    fn convex_schedule_reads_rho0_from_the_problem() {
        let c = RunConfig::from_pairs(&pairs("fixture = wc\nschedule = convex\ngamma = 0.1")).unwrap();
        let err = c.resolve().err().unwrap().to_string();
        assert!(err.contains("gamma_k = gamma > rho0"), "{err}");
        let c = RunConfig::from_pairs(&pairs("fixture = wc\nschedule = convex\ngamma = 0.5")).unwrap();
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn feasible_auto_beta_uses_theory_value() {
        let c = RunConfig::from_pairs(&pairs("fixture = wc\nschedule = feasible\neps = 0.05")).unwrap();
        let r = c.resolve().unwrap();
        let Schedule::ConstantFeasible { beta, rho0, .. } = r.settings.schedule else { panic!() };
        assert!(beta > 1e4);
        assert_eq!(rho0, 0.2);
    }

    #[test]
    fn x0_dimension_is_checked() {
        let c = RunConfig::from_pairs(&pairs("fixture = qp1d\nx0 = 0, 1")).unwrap();
        assert!(matches!(c.resolve(), Err(Error::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn missing_dataset_names_the_path() {
        let c = RunConfig::from_pairs(&pairs("data = /nonexistent/set.libsvm")).unwrap();
        let err = c.resolve().err().unwrap().to_string();
        assert!(err.contains("/nonexistent/set.libsvm"), "{err}");
    }
}
