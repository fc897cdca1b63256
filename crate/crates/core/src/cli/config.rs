//! TOML run configuration; the grammar is documented in `configs/README.md`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::asymptotics::{dyadic_grid, squared_dyadic_grid, GammaCase, Scaling, SweepField, SweepSpec};
use crate::domain::{BoxRegion, Field, FieldKind, Schedule, SmoothFn, SmoothKind};
use crate::error::{Error, Result};
use crate::quadrature::{Method, QuadConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    defaults: QuadConfig,
    #[serde(default)]
    fields: BTreeMap<String, RawField>,
    #[serde(default)]
    schedules: BTreeMap<String, RawSchedule>,
    #[serde(default)]
    cases: BTreeMap<String, RawCase>,
    #[serde(default)]
    seminorms: BTreeMap<String, RawSeminorm>,
    #[serde(default)]
    constants: Option<RawConstants>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawFactor {
    Constant(f64),
    Poly(Vec<f64>),
    Cos([f64; 2]),
    Sin([f64; 2]),
    Trig {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        cos: Vec<[f64; 2]>,
        #[serde(default)]
        sin: Vec<[f64; 2]>,
    },
}

impl RawFactor {
    fn build(&self) -> Result<SmoothFn> {
        Ok(match self {
            RawFactor::Constant(c) => SmoothFn::constant(*c),
            RawFactor::Poly(c) => SmoothFn::polynomial(c.clone()),
            RawFactor::Cos([a, w]) => SmoothFn::cos(*a, *w),
            RawFactor::Sin([a, w]) => SmoothFn::sin(*a, *w),
            RawFactor::Trig { constant, cos, sin } => SmoothFn::new(SmoothKind::Trig {
                constant: *constant,
                cos: cos.iter().map(|p| (p[0], p[1])).collect(),
                sin: sin.iter().map(|p| (p[0], p[1])).collect(),
            })?,
        })
    }
}

fn one() -> RawFactor {
    RawFactor::Constant(1.0)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawField {
    Smooth {
        horizontal: Vec<RawFactor>,
        #[serde(default = "one")]
        vertical: RawFactor,
        lipschitz: Option<f64>,
        sup_norm: Option<f64>,
    },
    Pwc {
        lo: f64,
        hi: f64,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Step {
        lo: f64,
        hi: f64,
        at: f64,
        height: f64,
    },
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
        lipschitz: Option<f64>,
    },
}

impl RawField {
    fn build(&self) -> Result<Field> {
        let meta = |mut f: Field, l: Option<f64>, m: Option<f64>| -> Result<Field> {
            if let Some(l) = l {
                f = f.with_lipschitz(l)?;
            }
            if let Some(m) = m {
                f = f.with_sup_norm(m)?;
            }
            Ok(f)
        };
        match self {
            RawField::Smooth {
                horizontal,
                vertical,
                lipschitz,
                sup_norm,
            } => {
                let h = horizontal.iter().map(RawFactor::build).collect::<Result<Vec<_>>>()?;
                meta(Field::smooth(h, vertical.build()?)?, *lipschitz, *sup_norm)
            }
            RawField::Pwc {
                lo,
                hi,
                breakpoints,
                values,
            } => Field::piecewise_constant(*lo, *hi, breakpoints.clone(), values.clone()),
            RawField::Step { lo, hi, at, height } => Field::step(*lo, *hi, *at, *height),
            RawField::Grid {
                lower,
                upper,
                shape,
                values,
                lipschitz,
            } => {
                let region = BoxRegion::new(lower.clone(), upper.clone())?;
                meta(Field::grid(region, shape.clone(), values.clone())?, *lipschitz, None)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSchedule {
    Constant { s: f64 },
    LogReciprocal { c: f64 },
    Power { alpha: f64 },
    Table { eps: Vec<f64>, s: Vec<f64> },
}

impl RawSchedule {
    fn build(&self) -> Result<Schedule> {
        match self {
            RawSchedule::Constant { s } => Schedule::constant(*s),
            RawSchedule::LogReciprocal { c } => Schedule::log_reciprocal(*c),
            RawSchedule::Power { alpha } => Schedule::power(*alpha),
            RawSchedule::Table { eps, s } => {
                if eps.len() != s.len() {
                    return Err(Error::invalid(format!(
                        "table has {} eps values but {} exponents",
                        eps.len(),
                        s.len()
                    )));
                }
                Schedule::table(eps.iter().copied().zip(s.iter().copied()).collect())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum GridRule {
    Dyadic([i32; 2]),
    SquaredDyadic([u32; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGrid {
    Values(Vec<f64>),
    Rule(GridRule),
}

impl Default for RawGrid {
    fn default() -> Self {
        RawGrid::Rule(GridRule::Dyadic([3, 8]))
    }
}

impl RawGrid {
    fn build(&self) -> Result<Vec<f64>> {
        match self {
            RawGrid::Values(v) => Ok(v.clone()),
            RawGrid::Rule(GridRule::Dyadic([a, b])) if a <= b && *a >= 1 => Ok(dyadic_grid(*a, *b)),
            RawGrid::Rule(GridRule::SquaredDyadic([a, b])) if a <= b && *b <= 9 => Ok(squared_dyadic_grid(*a, *b)),
            RawGrid::Rule(r) => Err(Error::invalid(format!("bad grid range {r:?}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawCase {
    Dr {
        field: String,
        omega: Option<Vec<[f64; 2]>>,
        s0: f64,
        #[serde(default)]
        eps_grid: RawGrid,
    },
    Vert {
        field: String,
        omega: Option<Vec<[f64; 2]>>,
        s0: f64,
        #[serde(default)]
        eps_grid: RawGrid,
    },
    Jump {
        field: String,
        schedule: String,
        #[serde(default)]
        eps_grid: RawGrid,
    },
    Bbm {
        field: String,
        omega: Option<Vec<[f64; 2]>>,
        s_values: Vec<f64>,
    },
    Zero {
        field: String,
        omega: Option<Vec<[f64; 2]>>,
        schedule: String,
        scaling: String,
        #[serde(default)]
        eps_grid: RawGrid,
    },
    /// A plain sweep with no verdict attached.
    Sweep {
        field: String,
        omega: Option<Vec<[f64; 2]>>,
        schedule: String,
        scaling: String,
        #[serde(default)]
        recovery: bool,
        method: Option<Method>,
        #[serde(default)]
        eps_grid: RawGrid,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeminorm {
    field: String,
    omega: Option<Vec<[f64; 2]>>,
    eps: f64,
    s: f64,
    method: Option<Method>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    s: Vec<f64>,
    d: Vec<usize>,
}

/// A named experiment from the `[cases]` table.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseDef {
    Gamma(GammaCase),
    Sweep(SweepSpec),
}

/// A single seminorm evaluation from the `[seminorms]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormDef {
    pub field: Field,
    pub omega: BoxRegion,
    pub eps: f64,
    pub s: f64,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub quad: QuadConfig,
    /// Cases in name order; the position fixes each case's seed.
    pub cases: Vec<(String, CaseDef)>,
    pub seminorms: Vec<(String, SeminormDef)>,
    /// `(s values, d values)` for the `constants` subcommand.
    pub constants: (Vec<f64>, Vec<usize>),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            quad: QuadConfig::default(),
            cases: Vec::new(),
            seminorms: Vec::new(),
            constants: (vec![0.05, 0.15, 0.25, 0.35, 0.45], vec![2, 3]),
        }
    }
}

fn ctx(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::InvalidInput(format!("{path}: {e}"))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

/// Natural `ω` of a field: its horizontal box, or the unit box of the right dimension.
fn default_omega(u: &Field) -> Result<BoxRegion> {
    match u.kind() {
        FieldKind::PiecewiseConstant1D { lo, hi, .. } => BoxRegion::interval(*lo, *hi),
        FieldKind::GridSample { region, .. } => region.base(),
        FieldKind::SmoothSeparable { horizontal, .. } => Ok(BoxRegion::unit(horizontal.len())),
    }
}

fn omega_of(u: &Field, raw: &Option<Vec<[f64; 2]>>) -> Result<BoxRegion> {
    match raw {
        None => default_omega(u),
        Some(axes) => BoxRegion::new(axes.iter().map(|a| a[0]).collect(), axes.iter().map(|a| a[1]).collect()),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        raw.defaults.validate().map_err(ctx("defaults"))?;

        let mut fields = BTreeMap::new();
        for (name, f) in &raw.fields {
            fields.insert(name.as_str(), f.build().map_err(ctx(&format!("fields.{name}")))?);
        }
        let mut schedules = BTreeMap::new();
        for (name, s) in &raw.schedules {
            schedules.insert(name.as_str(), s.build().map_err(ctx(&format!("schedules.{name}")))?);
        }
        let field = |path: &str, name: &str| -> Result<Field> {
            fields
                .get(name)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("{path}.field: no field named '{name}'")))
        };
        let schedule = |path: &str, name: &str| -> Result<Schedule> {
            schedules
                .get(name)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("{path}.schedule: no schedule named '{name}'")))
        };

        let mut cases = Vec::new();
        for (name, c) in &raw.cases {
            let path = format!("cases.{name}");
            if !valid_name(name) {
                return Err(Error::InvalidInput(format!("{path}: names may use [A-Za-z0-9_.-] only")));
            }
            let def = (|| -> Result<CaseDef> {
                Ok(match c {
                    RawCase::Dr {
                        field: f,
                        omega,
                        s0,
                        eps_grid,
                    } => {
                        let u = field(&path, f)?;
                        CaseDef::Gamma(GammaCase::Dr {
                            omega: omega_of(&u, omega)?,
                            field: u,
                            s0: *s0,
                            eps_grid: eps_grid.build()?,
                        })
                    }
                    RawCase::Vert {
                        field: f,
                        omega,
                        s0,
                        eps_grid,
                    } => {
                        let u = field(&path, f)?;
                        CaseDef::Gamma(GammaCase::Vert {
                            omega: omega_of(&u, omega)?,
                            field: u,
                            s0: *s0,
                            eps_grid: eps_grid.build()?,
                        })
                    }
                    RawCase::Jump {
                        field: f,
                        schedule: s,
                        eps_grid,
                    } => CaseDef::Gamma(GammaCase::Jump {
                        field: field(&path, f)?,
                        schedule: schedule(&path, s)?,
                        eps_grid: eps_grid.build()?,
                    }),
                    RawCase::Bbm {
                        field: f,
                        omega,
                        s_values,
                    } => {
                        let u = field(&path, f)?;
                        CaseDef::Gamma(GammaCase::Bbm {
                            omega: omega_of(&u, omega)?,
                            field: u,
                            s_values: s_values.clone(),
                        })
                    }
                    RawCase::Zero {
                        field: f,
                        omega,
                        schedule: s,
                        scaling,
                        eps_grid,
                    } => {
                        let u = field(&path, f)?;
                        CaseDef::Gamma(GammaCase::Zero {
                            omega: omega_of(&u, omega)?,
                            field: u,
                            schedule: schedule(&path, s)?,
                            scaling: scaling.parse::<Scaling>()?,
                            eps_grid: eps_grid.build()?,
                        })
                    }
                    RawCase::Sweep {
                        field: f,
                        omega,
                        schedule: s,
                        scaling,
                        recovery,
                        method,
                        eps_grid,
                    } => {
                        let u = field(&path, f)?;
                        CaseDef::Sweep(SweepSpec {
                            case_id: name.clone(),
                            omega: omega_of(&u, omega)?,
                            field: if *recovery { SweepField::Recovery(u) } else { SweepField::Fixed(u) },
                            schedule: schedule(&path, s)?,
                            eps_grid: eps_grid.build()?,
                            scaling: scaling.parse::<Scaling>()?,
                            method: *method,
                        })
                    }
                })
            })()
            .map_err(|e| match e {
                Error::InvalidInput(m) if m.starts_with(&path) => Error::InvalidInput(m),
                other => ctx(&path)(other),
            })?;
            cases.push((name.clone(), def));
        }

        let mut seminorms = Vec::new();
        for (name, s) in &raw.seminorms {
            let path = format!("seminorms.{name}");
            if !valid_name(name) {
                return Err(Error::InvalidInput(format!("{path}: names may use [A-Za-z0-9_.-] only")));
            }
            let u = field(&path, &s.field)?;
            let omega = omega_of(&u, &s.omega).map_err(ctx(&path))?;
            seminorms.push((
                name.clone(),
                SeminormDef {
                    field: u,
                    omega,
                    eps: s.eps,
                    s: s.s,
                    method: s.method,
                },
            ));
        }

        let mut cfg = RunConfig {
            seed: raw.seed,
            quad: raw.defaults,
            cases,
            seminorms,
            ..RunConfig::default()
        };
        if let Some(c) = raw.constants {
            cfg.constants = (c.s, c.d);
        }
        Ok(cfg)
    }

    pub fn case(&self, name: &str) -> Option<(usize, &CaseDef)> {
        self.cases.iter().position(|(n, _)| n == name).map(|i| (i, &self.cases[i].1))
    }
}
