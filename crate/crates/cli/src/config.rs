//! Experiment configuration: a JSON file `{kind, seed, out, jobs, params}`
//! whose fields are overridden by command-line flags.

use crate::RunError;
use hitlab_core::builder::{
    build_exponential_pair_with_budget, build_pair, build_pair_with_budget, IntertwinedPair, Regime, SeedPrefix,
    DEFAULT_BIT_BUDGET,
};
use hitlab_core::indicator::Schedule;
use hitlab_core::io::parse_rational;
use hitlab_core::trig::{TrigPoly, TrigTerm};
use hitlab_core::{Angle, ContinuedFraction};
use rug::{Integer, Rational};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BuildPair,
    Hit,
    Indicators,
    LevelMeasure,
    KeyLemma,
    BorelCantelli,
    Flow,
    Corr,
    VerifyAll,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::BuildPair => "build-pair",
            Kind::Hit => "hit",
            Kind::Indicators => "indicators",
            Kind::LevelMeasure => "level-measure",
            Kind::KeyLemma => "key-lemma",
            Kind::BorelCantelli => "borel-cantelli",
            Kind::Flow => "flow",
            Kind::Corr => "corr",
            Kind::VerifyAll => "verify-all",
        }
    }
}

/// The file as written by the user.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Values given on the command line; each one wins over the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug)]
pub struct Resolved {
    pub kind: Kind,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub params: Params,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Params {
    BuildPair(BuildPairParams),
    Hit(HitParams),
    Indicators(IndicatorParams),
    LevelMeasure(LevelMeasureParams),
    KeyLemma(KeyLemmaParams),
    BorelCantelli(BorelCantelliParams),
    Flow(FlowParams),
    Corr(CorrParams),
    VerifyAll(VerifyAllParams),
}

fn parse_json<T: DeserializeOwned>(v: serde_json::Value, what: &str) -> Result<T, RunError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { what.to_string() } else { format!("{what}.{path}") };
        RunError::Config(format!("{at}: {}", e.inner()))
    })
}

pub fn read_file(path: &Path) -> Result<ConfigFile, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| RunError::Config(format!("{}: {}: {}", path.display(), e.path(), e.inner())))
}

/// Merges file and flags and validates the parameters of `kind`.
pub fn resolve(kind: Kind, ov: Overrides) -> Result<Resolved, RunError> {
    let file = match &ov.config {
        Some(p) => read_file(p)?,
        None => ConfigFile::default(),
    };
    if let Some(k) = file.kind {
        if k != kind {
            return Err(RunError::Config(format!(
                "kind: config file is for {:?} but the subcommand is {}",
                k.name(),
                kind.name()
            )));
        }
    }
    let params = match file.params {
        serde_json::Value::Null => serde_json::Value::Object(Default::default()),
        v => v,
    };
    let params = parse_params(kind, params)?;
    let jobs = ov.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err(RunError::Config("jobs: must be at least 1".into()));
    }
    Ok(Resolved {
        kind,
        seed: ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out: ov.out.or(file.out).unwrap_or_else(|| PathBuf::from(format!("out/{}", kind.name()))),
        jobs,
        params,
    })
}

pub fn parse_params(kind: Kind, v: serde_json::Value) -> Result<Params, RunError> {
    let p = match kind {
        Kind::BuildPair => Params::BuildPair(parse_json(v, "params")?),
        Kind::Hit => Params::Hit(parse_json(v, "params")?),
        Kind::Indicators => Params::Indicators(parse_json(v, "params")?),
        Kind::LevelMeasure => Params::LevelMeasure(parse_json(v, "params")?),
        Kind::KeyLemma => Params::KeyLemma(parse_json(v, "params")?),
        Kind::BorelCantelli => Params::BorelCantelli(parse_json(v, "params")?),
        Kind::Flow => Params::Flow(parse_json(v, "params")?),
        Kind::Corr => Params::Corr(parse_json(v, "params")?),
        Kind::VerifyAll => Params::VerifyAll(parse_json(v, "params")?),
    };
    Ok(p)
}

/// An angle named in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleSpec {
    /// `[0; 1, 1, ...]` truncated at `depth`.
    Golden { depth: usize },
    /// `[0; a_1, ..., a_n]`, a truncation unless `exact`.
    Quotients {
        quotients: Vec<u64>,
        #[serde(default)]
        exact: bool,
    },
    /// An exact rational `num/den`.
    Rational { value: String },
    /// `a_1 = 2`, `a_{k+1} = c q_k`.
    TypeTwo {
        depth: usize,
        #[serde(default = "one")]
        c: u64,
    },
    /// One component of a greedy pair in `Y_gamma`.
    Pair {
        gamma: f64,
        levels: usize,
        #[serde(default)]
        prime: bool,
    },
}

fn one() -> u64 {
    1
}

pub fn type_two(depth: usize, c: u64) -> Result<ContinuedFraction, RunError> {
    let mut cf = ContinuedFraction::new(Integer::new(), vec![Integer::from(2)])?;
    while cf.depth() < depth {
        let q = Integer::from(cf.q(cf.depth()) * c);
        cf.push(q)?;
    }
    Ok(cf)
}

impl AngleSpec {
    pub fn build(&self) -> Result<Angle, RunError> {
        Ok(match self {
            AngleSpec::Golden { depth } => {
                if *depth == 0 {
                    return Err(RunError::Config("golden depth must be positive".into()));
                }
                Angle::truncation(ContinuedFraction::golden(*depth))
            }
            AngleSpec::Quotients { quotients, exact } => {
                let cf = ContinuedFraction::from_u64(0, quotients)?;
                if *exact {
                    Angle::exact(cf)
                } else {
                    Angle::truncation(cf)
                }
            }
            AngleSpec::Rational { value } => Angle::rational(rational(value, "angle value")?),
            AngleSpec::TypeTwo { depth, c } => Angle::truncation(type_two(*depth, *c)?),
            AngleSpec::Pair { gamma, levels, prime } => {
                let pair = build_pair(*gamma, *levels, None)?;
                Angle::truncation(if *prime { pair.alpha_prime } else { pair.alpha })
            }
        })
    }
}

pub fn rational(s: &str, what: &str) -> Result<Rational, RunError> {
    parse_rational(s).ok_or_else(|| RunError::Config(format!("{what}: not a rational: {s:?}")))
}

pub fn golden(depth: usize) -> AngleSpec {
    AngleSpec::Golden { depth }
}

/// Geometric radius schedule; `base` absent means `e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub base: Option<f64>,
    pub n_start: u32,
    pub n_end: u32,
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule, RunError> {
        Ok(match self.base {
            None => Schedule::exponential(self.n_start, self.n_end)?,
            Some(b) => Schedule::new(b, self.n_start, self.n_end)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildPairParams {
    pub gamma: f64,
    pub levels: usize,
    pub regime: Regime,
    pub seed_prefix: Option<SeedPrefix>,
    /// Largest denominator, in bits, the builder may produce.
    pub bit_budget: u64,
}

impl Default for BuildPairParams {
    fn default() -> Self {
        BuildPairParams {
            gamma: 2.0,
            levels: 6,
            regime: Regime::Power,
            seed_prefix: None,
            bit_budget: DEFAULT_BIT_BUDGET,
        }
    }
}

impl BuildPairParams {
    pub fn build(&self) -> Result<IntertwinedPair, RunError> {
        Ok(match self.regime {
            Regime::Power => build_pair_with_budget(self.gamma, self.levels, self.seed_prefix.as_ref(), self.bit_budget)?,
            Regime::Exponential => build_exponential_pair_with_budget(self.levels, self.bit_budget)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HitParams {
    /// One angle per coordinate (1 to 3).
    pub angles: Vec<AngleSpec>,
    pub instances: usize,
    pub radius: String,
    pub horizon: u64,
    /// Lower the horizon to the largest admissible one instead of failing.
    pub clamp_horizon: bool,
    /// Entry times listed per instance (circle only when above 1).
    pub entries: usize,
    pub recurrence: bool,
    pub point_bits: u32,
    /// Re-check every instance by direct iteration.
    pub oracle: bool,
}

impl Default for HitParams {
    fn default() -> Self {
        HitParams {
            angles: vec![golden(40)],
            instances: 100,
            radius: "1/100".into(),
            horizon: 1_000_000,
            clamp_horizon: true,
            entries: 1,
            recurrence: false,
            point_bits: 32,
            oracle: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicatorParams {
    pub angles: Vec<AngleSpec>,
    /// Use the doubling map instead of the translation given by `angles`.
    pub doubling: bool,
    pub instances: usize,
    /// Fixed target `x0` as `num/den` strings; sampled from the seed when absent.
    pub target: Option<Vec<String>>,
    pub schedule: ScheduleSpec,
    pub tail: usize,
    pub recurrence: bool,
    pub cap: u64,
    pub point_bits: u32,
    /// Pass threshold on `R_low` and the number of points that must reach it.
    pub min_r_low: Option<f64>,
    pub min_pass: Option<usize>,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            angles: vec![
                AngleSpec::Pair {
                    gamma: 2.0,
                    levels: 6,
                    prime: false,
                },
                AngleSpec::Pair {
                    gamma: 2.0,
                    levels: 6,
                    prime: true,
                },
            ],
            doubling: false,
            instances: 50,
            target: None,
            schedule: ScheduleSpec {
                base: None,
                n_start: 2,
                n_end: 14,
            },
            tail: 8,
            recurrence: false,
            cap: 1 << 62,
            point_bits: 32,
            min_r_low: None,
            min_pass: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelMeasureParams {
    pub angle: AngleSpec,
    pub window: usize,
    pub x0: String,
    /// `2r`; defaults to the middle of `(||q_n a||, ||q_{n-1} a||]`.
    pub two_r: Option<String>,
    /// Defaults to `3 q_n`.
    pub k_max: Option<u64>,
}

impl Default for LevelMeasureParams {
    fn default() -> Self {
        LevelMeasureParams {
            angle: golden(30),
            window: 6,
            x0: "0".into(),
            two_r: None,
            k_max: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyLemmaParams {
    pub gamma: f64,
    pub levels: usize,
    pub betas: Vec<f64>,
    pub ms: Vec<String>,
    pub ns: Vec<String>,
    pub x0: String,
    pub min_valid: usize,
}

impl Default for KeyLemmaParams {
    fn default() -> Self {
        KeyLemmaParams {
            gamma: 2.0,
            levels: 6,
            betas: vec![1.2, 1.5, 1.8],
            ms: vec!["1".into(), "2".into(), "3".into()],
            ns: vec!["2".into(), "3".into(), "5".into()],
            x0: "0".into(),
            min_valid: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BorelCantelliParams {
    pub gamma: f64,
    pub levels: usize,
    pub beta: f64,
    pub report_levels: usize,
}

impl Default for BorelCantelliParams {
    fn default() -> Self {
        BorelCantelliParams {
            gamma: 2.0,
            levels: 6,
            beta: 1.8,
            report_levels: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    /// Direction `(1, alpha, ...)`, one or two angles.
    pub angles: Vec<AngleSpec>,
    pub speed: TrigPoly,
    /// Certified ratio bound; computed from `speed` when absent.
    pub c: Option<f64>,
    pub instances: usize,
    pub radius: f64,
    pub t_max: f64,
    pub n_max: u64,
    /// Number of exact section-map comparisons.
    pub section_checks: usize,
}

pub fn cosine_speed(dim: usize) -> TrigPoly {
    let mut freq = vec![0; dim];
    freq[0] = 1;
    TrigPoly::new(
        dim,
        vec![
            TrigTerm {
                freq: vec![0; dim],
                cos: 1.0,
                sin: 0.0,
            },
            TrigTerm { freq, cos: 0.5, sin: 0.0 },
        ],
    )
    .expect("valid")
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            angles: vec![golden(40), AngleSpec::Quotients { quotients: vec![2; 40], exact: false }],
            speed: cosine_speed(3),
            c: Some(3.0),
            instances: 50,
            radius: 0.05,
            t_max: 1e4,
            n_max: 20_000,
            section_checks: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `cos(2 pi x_1)`.
    Cos1,
    Hat {
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        centered: bool,
    },
    Trig {
        poly: TrigPoly,
        #[serde(default)]
        centered: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrSystem {
    Rotation,
    Doubling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrParams {
    pub system: CorrSystem,
    /// Rotation angle (ignored for the doubling map).
    pub angle: AngleSpec,
    pub f: ObservableSpec,
    pub g: ObservableSpec,
    pub n_min: u64,
    pub n_max: u64,
    /// Witness levels `k <= witness_levels` with `||q_k a|| < witness_norm`.
    pub witness_levels: usize,
    pub witness_norm: String,
    pub witness_min: f64,
}

impl Default for CorrParams {
    fn default() -> Self {
        CorrParams {
            system: CorrSystem::Rotation,
            angle: golden(40),
            f: ObservableSpec::Cos1,
            g: ObservableSpec::Cos1,
            n_min: 1,
            n_max: 40,
            witness_levels: 8,
            witness_norm: "1/20".into(),
            witness_min: 0.4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyAllParams {
    pub convergent_instances: usize,
    pub pair_levels: usize,
    pub hit_instances: usize,
    pub flow_instances: usize,
}

impl Default for VerifyAllParams {
    fn default() -> Self {
        VerifyAllParams {
            convergent_instances: 200,
            pair_levels: 5,
            hit_instances: 200,
            flow_instances: 10,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_param_reports_its_path() {
        let v = serde_json::json!({"schedule": {"n_start": 2, "n_end": 4, "bsae": 3}});
        let e = parse_params(Kind::Indicators, v).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("params.schedule"), "{msg}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn angle_specs_build() {
        let a: AngleSpec = serde_json::from_value(serde_json::json!({"kind": "rational", "value": "355/1131"})).unwrap();
        assert_eq!(a.build().unwrap().frac(), &Rational::from((355, 1131)));
        let bad = serde_json::from_value::<AngleSpec>(serde_json::json!({"kind": "golden", "depth": 3, "x": 1}));
        assert!(bad.is_err());
        let t = type_two(5, 1).unwrap();
        for k in 1..5 {
            assert_eq!(t.quotient(k + 1).unwrap(), t.q(k));
        }
    }
}
