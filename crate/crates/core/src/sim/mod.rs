//! Monte-Carlo experiments: sweep definitions, the parallel trial runner
//! and CSV output.

pub mod benchmarks;
pub mod output;
pub mod stats;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelSet};
use crate::multi::{gsm_multi_from_seed, optimize_phase_upperbound, sum_mrb_from_phases, sum_ob_from_phases};
use crate::single::{gsm_single_from_seed, sum_single, OptConfig};
use crate::system::Power;
use crate::{Error, Result};

pub use benchmarks::{benchmark_no_ris, benchmark_random_phase, BenchmarkDesign};

pub const DEFAULT_TRIALS: usize = 200;
pub const FULL_SCALE_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Single-antenna relay (`M = 1`), scalar amplification.
    #[serde(alias = "single")]
    SingleAntenna,
    /// Multi-antenna relay with a beamforming matrix.
    #[serde(alias = "multi")]
    MultiAntenna,
}

impl Scenario {
    pub fn default_algorithms(self) -> Vec<Algorithm> {
        use Algorithm::*;
        match self {
            Scenario::SingleAntenna => vec![Sum, Gsm, NoRis, RandomPhase],
            Scenario::MultiAntenna => vec![SumMrb, SumOb, GsmMrb, GsmOb, NoRis, RandomPhase],
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single_antenna" => Ok(Scenario::SingleAntenna),
            "multi" | "multi_antenna" => Ok(Scenario::MultiAntenna),
            _ => Err(Error::InvalidParameter(format!("unknown scenario '{s}' (expected single or multi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sum,
    Gsm,
    SumOb,
    SumMrb,
    GsmOb,
    GsmMrb,
    NoRis,
    RandomPhase,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Sum,
        Algorithm::Gsm,
        Algorithm::SumOb,
        Algorithm::SumMrb,
        Algorithm::GsmOb,
        Algorithm::GsmMrb,
        Algorithm::NoRis,
        Algorithm::RandomPhase,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Sum => "sum",
            Algorithm::Gsm => "gsm",
            Algorithm::SumOb => "sum_ob",
            Algorithm::SumMrb => "sum_mrb",
            Algorithm::GsmOb => "gsm_ob",
            Algorithm::GsmMrb => "gsm_mrb",
            Algorithm::NoRis => "no_ris",
            Algorithm::RandomPhase => "random_phase",
        }
    }

    pub fn is_benchmark(self) -> bool {
        matches!(self, Algorithm::NoRis | Algorithm::RandomPhase)
    }

    fn supports(self, scenario: Scenario) -> bool {
        match self {
            Algorithm::Sum | Algorithm::Gsm => scenario == Scenario::SingleAntenna,
            Algorithm::SumOb | Algorithm::SumMrb | Algorithm::GsmOb | Algorithm::GsmMrb => {
                scenario == Scenario::MultiAntenna
            }
            Algorithm::NoRis | Algorithm::RandomPhase => true,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Relay power budget in dBm.
    PbDbm,
    /// Vertical RIS elements (`N_h` fixed).
    Nv,
    /// Relay antennas.
    M,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PbDbm => "pb_dbm",
            SweepVar::Nv => "nv",
            SweepVar::M => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn power(values: &[f64]) -> Self {
        Sweep { var: SweepVar::PbDbm, values: values.to_vec() }
    }

    pub fn elements(values: &[usize]) -> Self {
        Sweep { var: SweepVar::Nv, values: values.iter().map(|&v| v as f64).collect() }
    }

    pub fn antennas(values: &[usize]) -> Self {
        Sweep { var: SweepVar::M, values: values.iter().map(|&v| v as f64).collect() }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Empty means the scenario's default set.
    pub algorithms: Vec<Algorithm>,
    /// Without a sweep the experiment runs once at `pb_dbm`.
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub base_seed: u64,
    pub ps_dbm: f64,
    pub pb_dbm: f64,
    /// `array.m` is ignored (taken as 1) in the single-antenna scenario.
    #[serde(default)]
    pub model: ChannelModel,
    pub opt: OptConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::new(Scenario::SingleAntenna)
    }
}

impl ExperimentSpec {
    /// Defaults for a scenario; the single-antenna case gets `M = 1`.
    pub fn new(scenario: Scenario) -> Self {
        let mut model = ChannelModel::default();
        if scenario == Scenario::SingleAntenna {
            model.array.m = 1;
        }
        ExperimentSpec {
            scenario,
            algorithms: Vec::new(),
            sweep: None,
            trials: DEFAULT_TRIALS,
            base_seed: 1,
            ps_dbm: 0.0,
            pb_dbm: 10.0,
            model,
            opt: OptConfig::default(),
        }
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        if self.algorithms.is_empty() {
            self.scenario.default_algorithms()
        } else {
            let mut a: Vec<Algorithm> = Vec::new();
            for &x in &self.algorithms {
                if !a.contains(&x) {
                    a.push(x);
                }
            }
            a
        }
    }

    fn sweep_or_point(&self) -> Sweep {
        self.sweep.clone().unwrap_or_else(|| Sweep::power(&[self.pb_dbm]))
    }

    /// Channel model and powers at one sweep value.
    pub fn point(&self, var: SweepVar, value: f64) -> Result<(ChannelModel, Power)> {
        let mut model = self.model.clone();
        let mut pb = self.pb_dbm;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= 1e6 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("{} must be a non-negative integer, got {v}", var.name())))
            }
        };
        match var {
            SweepVar::PbDbm => pb = value,
            SweepVar::Nv => model.array.n_v = as_count(value)?,
            SweepVar::M => model.array.m = as_count(value)?,
        }
        if self.scenario == Scenario::SingleAntenna {
            if var == SweepVar::M {
                return Err(Error::InvalidParameter("the single-antenna scenario cannot sweep m".into()));
            }
            model.array.m = 1;
        }
        model.validate()?;
        let power = Power::from_dbm(self.ps_dbm, pb, model.geometry.bandwidth_hz)?;
        Ok((model, power))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        for a in self.algorithms() {
            if !a.supports(self.scenario) {
                return Err(Error::InvalidParameter(format!(
                    "algorithm '{a}' is not available in the {:?} scenario",
                    self.scenario
                )));
            }
        }
        let sweep = self.sweep_or_point();
        if sweep.values.is_empty() {
            return Err(Error::InvalidParameter("sweep has no values".into()));
        }
        for &v in &sweep.values {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("sweep value {v} is not finite")));
            }
            self.point(sweep.var, v)?;
        }
        Ok(())
    }
}

/// SplitMix64 finaliser; stable across platforms and releases.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines seed components into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const DOMAIN_CHANNEL: u64 = 0xC0;
const DOMAIN_ALGO: u64 = 0xA1;

/// Channel seed of a trial. It ignores the sweep point so every point of a
/// sweep sees the same realizations (nested when `N` or `M` grows).
pub fn channel_seed(base_seed: u64, trial: usize) -> u64 {
    derive_seed(&[DOMAIN_CHANNEL, base_seed, trial as u64])
}

fn algo_rng(base_seed: u64, point: usize, trial: usize, family: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[DOMAIN_ALGO, base_seed, point as u64, trial as u64, family]))
}

/// Min-SNR (linear) of one algorithm, or why it failed.
pub type Outcome = std::result::Result<f64, String>;

/// Runs every requested algorithm on one channel realization. Designs that
/// share a prefix (the SUM phases, the SUM seed of GSM) are computed once.
pub fn run_trial(
    scenario: Scenario,
    algorithms: &[Algorithm],
    ch: &ChannelSet,
    pw: &Power,
    opt: &OptConfig,
    seeds: (u64, usize, usize),
) -> Vec<(Algorithm, Outcome)> {
    let (base, point, trial) = seeds;
    let wants = |a: Algorithm| algorithms.contains(&a);
    let mut out: Vec<(Algorithm, Outcome)> = Vec::new();
    match scenario {
        Scenario::SingleAntenna if wants(Algorithm::Sum) || wants(Algorithm::Gsm) => {
            let mut rng = algo_rng(base, point, trial, 1);
            match sum_single(ch, pw, opt, &mut rng) {
                Ok(seed) => {
                    let sum_snr = seed.min_snr;
                    if wants(Algorithm::Gsm) {
                        let g = gsm_single_from_seed(ch, pw, opt, seed, &mut rng).map(|d| d.min_snr).map_err(|e| e.to_string());
                        out.push((Algorithm::Gsm, g));
                    }
                    out.push((Algorithm::Sum, Ok(sum_snr)));
                }
                Err(e) => {
                    for a in [Algorithm::Sum, Algorithm::Gsm] {
                        out.push((a, Err(e.to_string())));
                    }
                }
            }
        }
        Scenario::MultiAntenna
            if [Algorithm::SumOb, Algorithm::SumMrb, Algorithm::GsmOb, Algorithm::GsmMrb]
                .iter()
                .any(|&a| wants(a)) =>
        {
            let mut rng = algo_rng(base, point, trial, 2);
            match optimize_phase_upperbound(ch, opt, &mut rng) {
                Ok(phi) => {
                    if wants(Algorithm::SumOb) || wants(Algorithm::GsmOb) {
                        let mut r = rng.clone();
                        match sum_ob_from_phases(ch, phi.clone(), pw, opt, &mut r) {
                            Ok(seed) => {
                                out.push((Algorithm::SumOb, Ok(seed.min_snr)));
                                if wants(Algorithm::GsmOb) {
                                    let g = gsm_multi_from_seed(ch, pw, opt, seed, &mut r).map(|d| d.min_snr).map_err(|e| e.to_string());
                                    out.push((Algorithm::GsmOb, g));
                                }
                            }
                            Err(e) => {
                                out.push((Algorithm::SumOb, Err(e.to_string())));
                                out.push((Algorithm::GsmOb, Err(e.to_string())));
                            }
                        }
                    }
                    if wants(Algorithm::SumMrb) || wants(Algorithm::GsmMrb) {
                        match sum_mrb_from_phases(ch, phi, pw) {
                            Ok(seed) => {
                                out.push((Algorithm::SumMrb, Ok(seed.min_snr)));
                                if wants(Algorithm::GsmMrb) {
                                    let mut r = rng.clone();
                                    let g = gsm_multi_from_seed(ch, pw, opt, seed, &mut r).map(|d| d.min_snr).map_err(|e| e.to_string());
                                    out.push((Algorithm::GsmMrb, g));
                                }
                            }
                            Err(e) => {
                                out.push((Algorithm::SumMrb, Err(e.to_string())));
                                out.push((Algorithm::GsmMrb, Err(e.to_string())));
                            }
                        }
                    }
                }
                Err(e) => {
                    for a in [Algorithm::SumOb, Algorithm::SumMrb, Algorithm::GsmOb, Algorithm::GsmMrb] {
                        out.push((a, Err(e.to_string())));
                    }
                }
            }
        }
        _ => {}
    }
    if wants(Algorithm::NoRis) {
        out.push((Algorithm::NoRis, benchmark_no_ris(ch, pw, scenario).map(|d| d.min_snr).map_err(|e| e.to_string())));
    }
    if wants(Algorithm::RandomPhase) {
        let mut rng = algo_rng(base, point, trial, 3);
        out.push((Algorithm::RandomPhase, benchmark_random_phase(ch, pw, scenario, &mut rng).map(|d| d.min_snr).map_err(|e| e.to_string())));
    }
    out.retain(|(a, _)| wants(*a));
    out.sort_by_key(|(a, _)| algorithms.iter().position(|b| b == a));
    out
}

/// One Monte-Carlo outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub min_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub mean_db: f64,
    pub p10_db: f64,
    pub p50_db: f64,
    pub p90_db: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub sweep_var: SweepVar,
    pub sweep_values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// Ordered by sweep point, then trial, then algorithm.
    pub samples: Vec<Sample>,
    pub failures: Vec<Failure>,
}

impl RunResult {
    /// Min-SNR samples (dB) of one algorithm at one sweep value.
    pub fn values(&self, sweep_value: f64, algorithm: Algorithm) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.sweep_value == sweep_value && s.algorithm == algorithm)
            .map(|s| s.min_snr_db)
            .collect()
    }

    /// Mean of the dB samples.
    pub fn mean_db(&self, sweep_value: f64, algorithm: Algorithm) -> f64 {
        stats::mean(&self.values(sweep_value, algorithm))
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for &v in &self.sweep_values {
            for &a in &self.algorithms {
                let s = self.values(v, a);
                rows.push(SummaryRow {
                    sweep_value: v,
                    algorithm: a,
                    mean_db: stats::mean(&s),
                    p10_db: stats::percentile(&s, 10.0),
                    p50_db: stats::percentile(&s, 50.0),
                    p90_db: stats::percentile(&s, 90.0),
                    count: s.len(),
                });
            }
        }
        rows
    }
}

/// Runs the experiment. Trials are spread over the current rayon pool; the
/// result does not depend on scheduling.
pub fn run(spec: &ExperimentSpec) -> Result<RunResult> {
    spec.validate()?;
    let sweep = spec.sweep_or_point();
    let algorithms = spec.algorithms();
    let points: Vec<(ChannelModel, Power)> =
        sweep.values.iter().map(|&v| spec.point(sweep.var, v)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let outcomes: Vec<Result<Vec<(Algorithm, Outcome)>>> = tasks
        .par_iter()
        .map(|&(p, t)| {
            let (model, pw) = &points[p];
            let ch = model.sample(channel_seed(spec.base_seed, t))?;
            Ok(run_trial(spec.scenario, &algorithms, &ch, pw, &spec.opt, (spec.base_seed, p, t)))
        })
        .collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (&(p, trial), outcome) in tasks.iter().zip(outcomes) {
        let sweep_value = sweep.values[p];
        for (algorithm, r) in outcome? {
            match r {
                Ok(snr) => samples.push(Sample { sweep_value, algorithm, trial, min_snr_db: crate::to_db(snr) }),
                Err(message) => failures.push(Failure { sweep_value, algorithm, trial, message }),
            }
        }
    }
    Ok(RunResult { sweep_var: sweep.var, sweep_values: sweep.values, algorithms, samples, failures })
}

/// Like [`run`], on a dedicated pool of `threads` workers.
pub fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<RunResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ArrayConfig;

    fn small(scenario: Scenario) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(scenario);
        s.model.array = ArrayConfig { m: s.model.array.m.min(2), n_h: 2, n_v: 2, ..Default::default() };
        s.trials = 3;
        s.opt.randomization.draws = 20;
        s.opt.gsm.generations = 1;
        s
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(channel_seed(1, 0), channel_seed(1, 1));
        assert_ne!(channel_seed(1, 0), channel_seed(2, 0));
        assert_eq!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 3]));
        assert_ne!(derive_seed(&[1, 2, 3]), derive_seed(&[3, 2, 1]));
    }

    #[test]
    fn parsing() {
        assert_eq!("gsm_ob".parse::<Algorithm>().unwrap(), Algorithm::GsmOb);
        assert!("gsm-ob".parse::<Algorithm>().is_err());
        assert_eq!("multi".parse::<Scenario>().unwrap(), Scenario::MultiAntenna);
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
        }
    }

    #[test]
    fn validation() {
        let mut s = small(Scenario::SingleAntenna);
        s.algorithms = vec![Algorithm::SumOb];
        assert!(s.validate().is_err());
        let mut s = small(Scenario::SingleAntenna);
        s.sweep = Some(Sweep::antennas(&[1, 2]));
        assert!(s.validate().is_err());
        let mut s = small(Scenario::MultiAntenna);
        s.sweep = Some(Sweep { var: SweepVar::Nv, values: vec![2.5] });
        assert!(s.validate().is_err());
        let mut s = small(Scenario::MultiAntenna);
        s.trials = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn run_is_deterministic_and_complete() {
        for scenario in [Scenario::SingleAntenna, Scenario::MultiAntenna] {
            let mut s = small(scenario);
            s.sweep = Some(Sweep::power(&[0.0, 10.0]));
            let a = run_with_threads(&s, 1).unwrap();
            let b = run_with_threads(&s, 3).unwrap();
            assert_eq!(a, b);
            assert!(a.failures.is_empty(), "{:?}", a.failures);
            assert_eq!(a.samples.len(), 2 * 3 * s.algorithms().len());
        }
    }

    #[test]
    fn gsm_dominates_its_seed_per_trial() {
        let s = small(Scenario::MultiAntenna);
        let r = run(&s).unwrap();
        let v = s.pb_dbm;
        for (seed, refined) in [(Algorithm::SumOb, Algorithm::GsmOb), (Algorithm::SumMrb, Algorithm::GsmMrb)] {
            for (x, y) in r.values(v, seed).iter().zip(r.values(v, refined)) {
                assert!(y >= *x - 1e-9);
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let mut s = small(Scenario::MultiAntenna);
        s.sweep = Some(Sweep::elements(&[4, 7]));
        let text = serde_json::to_string(&s).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        let partial: ExperimentSpec = serde_json::from_str(r#"{"scenario": "multi", "trials": 5}"#).unwrap();
        assert_eq!(partial.trials, 5);
        assert_eq!(partial.scenario, Scenario::MultiAntenna);
        assert_eq!(partial.model.array.m, 4);
    }
}
