//! Composite runs behind the command-line tool. Each scenario returns a JSON
//! summary and, where it has one, plot-ready CSV detail.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::filter::{apply_all, simulate_preparation, FilterEnsemble};
use crate::hidden::{hidden_search_detailed, map_to_csv, records_to_csv, sample_ensemble, sweep_state_map, Region, SearchConfig};
use crate::optim::NelderMead;
use crate::quantum::{concurrence, family_state, fidelity, trace_distance, DensityMatrix, Side, StateParams};
use crate::steering::{
    analytic_predicates, classify, radius_fixed_dirs, Configuration, Correlations, MeasurementTriple, SolverConfig,
    SteeringReport,
};
use crate::tomography::{
    fit_process, process_fidelity, process_settings, reconstruct_state, simulate_counts, state_settings, ChiMatrix,
    CountSource, Noise, StateDesign,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Classify,
    FilterApply,
    FindFilters,
    Reverse,
    Distill,
    Amplify,
    HiddenSearch,
    Map,
    TomoState,
    TomoProcess,
    PrepCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::Classify,
        Scenario::FilterApply,
        Scenario::FindFilters,
        Scenario::Reverse,
        Scenario::Distill,
        Scenario::Amplify,
        Scenario::HiddenSearch,
        Scenario::Map,
        Scenario::TomoState,
        Scenario::TomoProcess,
        Scenario::PrepCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Classify => "classify",
            Scenario::FilterApply => "filter-apply",
            Scenario::FindFilters => "find-filters",
            Scenario::Reverse => "reverse",
            Scenario::Distill => "distill",
            Scenario::Amplify => "amplify",
            Scenario::HiddenSearch => "hidden-search",
            Scenario::Map => "map",
            Scenario::TomoState => "tomo-state",
            Scenario::TomoProcess => "tomo-process",
            Scenario::PrepCheck => "prep-check",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|x| x.as_str() == s).ok_or_else(|| Error::Parse(format!("unknown scenario {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub enum StateSource {
    Params(StateParams),
    Matrix(DensityMatrix),
}

impl StateSource {
    pub fn density(&self) -> DensityMatrix {
        match self {
            StateSource::Params(p) => family_state(*p),
            StateSource::Matrix(m) => m.clone(),
        }
    }

    pub fn params(&self) -> Option<StateParams> {
        match self {
            StateSource::Params(p) => Some(*p),
            StateSource::Matrix(_) => None,
        }
    }
}

/// The ensemble of the amplification experiment.
pub fn amplification_ensemble() -> FilterEnsemble {
    FilterEnsemble::from_diagonals(0.70, 0.20, 0.12, 0.16).expect("valid amplitudes")
}

#[derive(Clone, Debug)]
pub struct ScenarioInput {
    pub state: Option<StateSource>,
    pub filters: Option<FilterEnsemble>,
    /// Sample count, random-ensemble budget or counts per setting, depending
    /// on the scenario.
    pub samples: Option<usize>,
    pub seed: u64,
    pub err: Option<f64>,
    pub full: bool,
}

impl Default for ScenarioInput {
    fn default() -> Self {
        Self { state: None, filters: None, samples: None, seed: 42, err: None, full: false }
    }
}

impl ScenarioInput {
    pub fn solver(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(e) = self.err {
            cfg.err = e;
        }
        cfg
    }

    fn state(&self) -> Result<&StateSource> {
        self.state.as_ref().ok_or_else(|| Error::InvalidState("a state is required (--theta/--eta or --state)".into()))
    }

    fn filters(&self) -> Result<FilterEnsemble> {
        self.filters.ok_or_else(|| Error::InvalidState("filters are required (--filters or --waveplates)".into()))
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub json: Value,
    pub csv: Option<String>,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Parse(e.to_string()))
}

/// Classification of one filtered branch.
#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub branch: [usize; 2],
    pub probability: f64,
    pub state: Option<DensityMatrix>,
    pub steering: Option<SteeringReport>,
}

impl BranchReport {
    pub fn configuration(&self) -> Option<Configuration> {
        self.steering.as_ref().map(|s| s.configuration)
    }
}

/// Applies every branch and classifies the non-degenerate ones.
pub fn evaluate_branches(rho: &DensityMatrix, f: &FilterEnsemble, cfg: &SolverConfig) -> Result<Vec<BranchReport>> {
    apply_all(rho, f)?
        .into_iter()
        .map(|out| {
            let (i, j) = out.branch;
            let steering = match &out.state {
                Some(s) => Some(classify(s, cfg)?),
                None => None,
            };
            Ok(BranchReport { branch: [i, j], probability: out.probability, state: out.state, steering })
        })
        .collect()
}

/// Radii for the {x̂, ŷ, ẑ} triple only; a lower bound on the steering radii
/// used to screen candidate ensembles.
pub fn mub_radii(rho: &DensityMatrix, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let mub = MeasurementTriple::mub();
    let ab = radius_fixed_dirs(&Correlations::new(rho, Side::A)?.targets(&mub), cfg)?.radius;
    let ba = radius_fixed_dirs(&Correlations::new(rho, Side::B)?.targets(&mub), cfg)?.radius;
    Ok((ab, ba))
}

/// What a filter search tries to produce among the four branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchGoal {
    /// One branch per configuration, with the two-way branch distilled
    /// (both radii above the input's).
    Complete,
    /// A branch that is one-way B→A.
    Reverse,
    /// A two-way branch with both radii above the input's.
    Distill,
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterSearchConfig {
    pub random: usize,
    pub refine: usize,
    pub seed: u64,
    pub min_branch_prob: f64,
}

impl Default for FilterSearchConfig {
    fn default() -> Self {
        Self { random: 2000, refine: 200, seed: 42, min_branch_prob: 1e-3 }
    }
}

/// Signed margin of `(r_ab, r_ba)` for a configuration; positive when met.
/// The two-way slot measures distillation relative to `input`.
fn slot_margin(slot: usize, r: (f64, f64), input: (f64, f64)) -> f64 {
    let (ab, ba) = r;
    match slot {
        0 => (ab - input.0).min(ba - input.1).min(ab - 1.0).min(ba - 1.0),
        1 => (ab - 1.0).min(1.0 - ba),
        2 => (ba - 1.0).min(1.0 - ab),
        _ => (1.0 - ab).min(1.0 - ba),
    }
}

fn goal_score(goal: SearchGoal, radii: &[Option<(f64, f64)>; 4], input: (f64, f64)) -> f64 {
    const MISSING: f64 = -10.0;
    let best = |slot: usize| {
        radii.iter().map(|r| r.map_or(MISSING, |r| slot_margin(slot, r, input))).fold(MISSING, f64::max)
    };
    match goal {
        SearchGoal::Reverse => best(2),
        SearchGoal::Distill => best(0),
        SearchGoal::Complete => {
            let mut best_perm = MISSING;
            let mut perm = [0usize, 1, 2, 3];
            // Heap's algorithm over the 24 slot assignments.
            let mut c = [0usize; 4];
            let mut eval = |p: &[usize; 4]| {
                let s = (0..4).map(|b| radii[b].map_or(MISSING, |r| slot_margin(p[b], r, input))).fold(f64::INFINITY, f64::min);
                best_perm = best_perm.max(s);
            };
            eval(&perm);
            let mut i = 0;
            while i < 4 {
                if c[i] < i {
                    if i % 2 == 0 {
                        perm.swap(0, i);
                    } else {
                        perm.swap(c[i], i);
                    }
                    eval(&perm);
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            best_perm
        }
    }
}

fn screen(rho: &DensityMatrix, f: &FilterEnsemble, cfg: &SolverConfig, min_prob: f64) -> Result<[Option<(f64, f64)>; 4]> {
    let outs = apply_all(rho, f)?;
    let mut radii = [None; 4];
    for (b, out) in outs.iter().enumerate() {
        if let (Some(s), true) = (&out.state, out.probability >= min_prob) {
            radii[b] = Some(mub_radii(s, cfg)?);
        }
    }
    Ok(radii)
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterSearchReport {
    pub goal: SearchGoal,
    pub input: SteeringReport,
    pub ensemble: FilterEnsemble,
    pub waveplates_deg: Option<[f64; 4]>,
    /// Margin of the screening radii at the returned ensemble.
    pub screening_score: f64,
    pub evaluations: usize,
    pub branches: Vec<BranchReport>,
    pub configurations: Vec<Option<Configuration>>,
    pub complete: bool,
    pub reversal: bool,
    pub distillation: bool,
}

/// Random search followed by simplex refinement of the screening margin; the
/// final ensemble is classified with the full solver budget.
pub fn find_filters(rho: &DensityMatrix, goal: SearchGoal, search: &FilterSearchConfig, cfg: &SolverConfig) -> Result<FilterSearchReport> {
    if search.random == 0 {
        return Err(Error::OutOfRange { name: "random", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    let input = classify(rho, cfg)?;
    let input_mub = mub_radii(rho, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut evaluations = 0;
    let mut best: Option<(f64, FilterEnsemble)> = None;
    for _ in 0..search.random {
        let f = sample_ensemble(&mut rng);
        let s = goal_score(goal, &screen(rho, &f, cfg, search.min_branch_prob)?, input_mub);
        evaluations += 1;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, f));
        }
    }
    let (mut score, mut ensemble) = best.expect("random > 0");

    // Amplitudes a = 0.01 + 0.99 sin²x keep the simplex inside the box.
    let (lo, span) = (0.01, 0.99);
    let to_x = |a: f64| ((a - lo) / span).clamp(0.0, 1.0).sqrt().asin();
    let to_a = |x: f64| lo + span * x.sin().powi(2);
    if search.refine > 0 {
        let mut failure = None;
        let mut objective = |x: &[f64]| -> f64 {
            evaluations += 1;
            let f = FilterEnsemble::from_diagonals(to_a(x[0]), to_a(x[1]), to_a(x[2]), to_a(x[3])).expect("in range");
            match screen(rho, &f, cfg, search.min_branch_prob) {
                Ok(r) => -goal_score(goal, &r, input_mub),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let x0: Vec<f64> = ensemble.params().iter().map(|&a| to_x(a)).collect();
        let nm = NelderMead { f_tol: 1e-6, x_tol: 1e-6, max_evals: search.refine };
        let m = nm.minimize(&mut objective, &x0, &[0.1; 4]);
        if let Some(e) = failure {
            return Err(e);
        }
        if -m.value > score {
            score = -m.value;
            ensemble = FilterEnsemble::from_diagonals(to_a(m.x[0]), to_a(m.x[1]), to_a(m.x[2]), to_a(m.x[3]))?;
        }
    }

    let branches = evaluate_branches(rho, &ensemble, cfg)?;
    let configurations: Vec<Option<Configuration>> = branches.iter().map(BranchReport::configuration).collect();
    let has = |c: Configuration| configurations.contains(&Some(c));
    let complete = [Configuration::TwoWay, Configuration::OneWayAToB, Configuration::OneWayBToA, Configuration::TwoWayUnsteerable]
        .into_iter()
        .all(has);
    let distillation = branches.iter().any(|b| {
        b.steering.as_ref().is_some_and(|s| {
            s.configuration == Configuration::TwoWay && s.r_ab > input.r_ab && s.r_ba > input.r_ba
        })
    });
    Ok(FilterSearchReport {
        goal,
        waveplates_deg: ensemble.to_waveplates().map(|w| w.degrees()),
        input,
        ensemble,
        screening_score: score,
        evaluations,
        reversal: has(Configuration::OneWayBToA),
        complete,
        distillation,
        branches,
        configurations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplifyBranch {
    pub branch: [usize; 2],
    pub probability: f64,
    pub r_ab: Option<f64>,
    pub r_ba: Option<f64>,
    pub delta_ab: Option<f64>,
    pub delta_ba: Option<f64>,
    /// A→B radius increased while B→A decreased.
    pub amplified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplifyReport {
    pub input: SteeringReport,
    pub ensemble: FilterEnsemble,
    pub branches: Vec<AmplifyBranch>,
    pub any_amplified: bool,
}

pub fn amplify(rho: &DensityMatrix, f: &FilterEnsemble, cfg: &SolverConfig) -> Result<AmplifyReport> {
    let input = classify(rho, cfg)?;
    let branches: Vec<AmplifyBranch> = evaluate_branches(rho, f, cfg)?
        .into_iter()
        .map(|b| {
            let r_ab = b.steering.as_ref().map(|s| s.r_ab);
            let r_ba = b.steering.as_ref().map(|s| s.r_ba);
            let delta_ab = r_ab.map(|r| r - input.r_ab);
            let delta_ba = r_ba.map(|r| r - input.r_ba);
            let amplified = matches!((delta_ab, delta_ba), (Some(a), Some(b)) if a > 0.0 && b < 0.0);
            AmplifyBranch { branch: b.branch, probability: b.probability, r_ab, r_ba, delta_ab, delta_ba, amplified }
        })
        .collect();
    let any_amplified = branches.iter().any(|b| b.amplified);
    Ok(AmplifyReport { input, ensemble: *f, branches, any_amplified })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Maximum deviation between the simulated preparation and the family state
/// over an `n × n` grid of (θ, η).
pub fn preparation_grid_error(n: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &theta in &linspace(0.0, FRAC_PI_2, n) {
        for &eta in &linspace(0.0, 1.0, n) {
            let p = StateParams::new(theta, eta)?;
            worst = worst.max(simulate_preparation(p).matrix().max_abs_diff(family_state(p).matrix()));
        }
    }
    Ok(worst)
}

fn state_summary(src: &StateSource) -> Result<Value> {
    let rho = src.density();
    let mut v = json!({ "concurrence": concurrence(&rho)? });
    if let Some(p) = src.params() {
        v["params"] = to_value(&p)?;
        v["predicates"] = to_value(&analytic_predicates(p))?;
    }
    Ok(v)
}

fn chi_summary(chi: &ChiMatrix) -> Result<Value> {
    Ok(json!({ "chi": to_value(chi)?, "trace_preservation_residual": chi.trace_preservation_residual() }))
}

pub fn run(scenario: Scenario, input: &ScenarioInput) -> Result<ScenarioOutput> {
    let cfg = input.solver();
    cfg.validate()?;
    let mut csv = None;
    let body = match scenario {
        Scenario::Classify => {
            let src = input.state()?;
            let report = classify(&src.density(), &cfg)?;
            json!({ "state": state_summary(src)?, "report": to_value(&report)? })
        }
        Scenario::FilterApply => {
            let src = input.state()?;
            let f = input.filters()?;
            let rho = src.density();
            let branches = evaluate_branches(&rho, &f, &cfg)?;
            json!({
                "state": state_summary(src)?,
                "input": to_value(&classify(&rho, &cfg)?)?,
                "ensemble": to_value(&f)?,
                "branches": to_value(&branches)?,
            })
        }
        Scenario::FindFilters | Scenario::Reverse | Scenario::Distill => {
            let src = input.state()?;
            let goal = match scenario {
                Scenario::FindFilters => SearchGoal::Complete,
                Scenario::Reverse => SearchGoal::Reverse,
                _ => SearchGoal::Distill,
            };
            let search = FilterSearchConfig { random: input.samples.unwrap_or(2000), seed: input.seed, ..Default::default() };
            let report = find_filters(&src.density(), goal, &search, &cfg)?;
            json!({ "state": state_summary(src)?, "search": to_value(&search)?, "result": to_value(&report)? })
        }
        Scenario::Amplify => {
            let src = input.state()?;
            let f = input.filters.unwrap_or_else(amplification_ensemble);
            let report = amplify(&src.density(), &f, &cfg)?;
            json!({ "state": state_summary(src)?, "result": to_value(&report)? })
        }
        Scenario::HiddenSearch => {
            let src = input.state()?;
            let mut search = SearchConfig { rng_seed: input.seed, ..Default::default() };
            if let Some(n) = input.samples {
                search.n_samples = n;
            }
            if let Some(e) = input.err {
                search = search.with_err(e);
            }
            let (mut report, records) = hidden_search_detailed(&src.density(), &search)?;
            report.params = src.params();
            if input.full {
                csv = Some(records_to_csv(&records)?);
            }
            json!({ "state": state_summary(src)?, "config": to_value(&search)?, "report": to_value(&report)? })
        }
        Scenario::Map => {
            let thetas = linspace(0.0, FRAC_PI_2 / 2.0, 46);
            let etas = linspace(0.0, 1.0, 101);
            let cells = sweep_state_map(&thetas, &etas)?;
            let count = |r: Region| cells.iter().filter(|c| c.region == r).count();
            csv = Some(map_to_csv(&cells)?);
            json!({
                "theta_range": [thetas[0], thetas[thetas.len() - 1]],
                "eta_range": [etas[0], etas[etas.len() - 1]],
                "grid": [thetas.len(), etas.len()],
                "regions": { "pink": count(Region::Pink), "blue": count(Region::Blue), "yellow": count(Region::Yellow) },
            })
        }
        Scenario::TomoState => {
            let src = input.state()?;
            let rho = src.density();
            let n = input.samples.unwrap_or(10_000) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(input.seed);
            let settings = state_settings(StateDesign::Overcomplete);
            let exact = reconstruct_state(&simulate_counts(CountSource::State(&rho), &settings, n, Noise::Noiseless, &mut rng)?)?;
            let counts = simulate_counts(CountSource::State(&rho), &settings, n, Noise::Poisson, &mut rng)?;
            let est = reconstruct_state(&counts)?;
            if input.full {
                csv = Some(counts.to_csv()?);
            }
            json!({
                "state": state_summary(src)?,
                "counts_per_setting": n,
                "settings": settings.len(),
                "noiseless_fidelity": fidelity(&exact, &rho)?,
                "poisson_fidelity": fidelity(&est, &rho)?,
                "poisson_trace_distance": trace_distance(&est, &rho)?,
                "reconstruction": to_value(&est)?,
            })
        }
        Scenario::TomoProcess => {
            let f = input.filters.unwrap_or_else(amplification_ensemble);
            let n = input.samples.unwrap_or(10_000) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(input.seed);
            let mut sides = serde_json::Map::new();
            let mut all_counts = String::new();
            for side in [Side::A, Side::B] {
                let truth = ChiMatrix::from_kraus(&[f.operator(side, 1), f.operator(side, 2)])?;
                let src = CountSource::Filter { ensemble: &f, side };
                let (chi0, fit0) = fit_process(&simulate_counts(src, &process_settings(), n, Noise::Noiseless, &mut rng)?)?;
                let counts = simulate_counts(src, &process_settings(), n, Noise::Poisson, &mut rng)?;
                let (chi, fit) = fit_process(&counts)?;
                if input.full {
                    all_counts.push_str(&format!("# side {side:?}\n{}", counts.to_csv()?));
                }
                sides.insert(
                    format!("{side:?}"),
                    json!({
                        "truth_diagonals": [f.diagonal(side, 1), f.diagonal(side, 2)],
                        "noiseless": {
                            "tomography": chi_summary(&chi0)?,
                            "fit": to_value(&fit0)?,
                            "diagonals": fit0.coefficients.diagonal_amplitudes(),
                            "process_fidelity": process_fidelity(&chi0, &truth)?,
                        },
                        "poisson": {
                            "tomography": chi_summary(&chi)?,
                            "fit": to_value(&fit)?,
                            "diagonals": fit.coefficients.diagonal_amplitudes(),
                            "process_fidelity": process_fidelity(&chi, &truth)?,
                            "fit_fidelity": process_fidelity(&fit.coefficients.chi(), &truth)?,
                        },
                    }),
                );
            }
            if input.full {
                csv = Some(all_counts);
            }
            json!({ "ensemble": to_value(&f)?, "counts_per_setting": n, "sides": Value::Object(sides) })
        }
        Scenario::PrepCheck => {
            let grid = preparation_grid_error(10)?;
            let mut v = json!({ "grid": [10, 10], "grid_max_abs_error": grid });
            if let Some(src) = &input.state {
                let p = src.params().ok_or_else(|| Error::InvalidState("prep-check needs --theta/--eta".into()))?;
                v["params"] = to_value(&p)?;
                v["max_abs_error"] = json!(simulate_preparation(p).matrix().max_abs_diff(family_state(p).matrix()));
            }
            v
        }
    };
    let json = json!({ "scenario": scenario.as_str(), "seed": input.seed, "result": body });
    Ok(ScenarioOutput { json, csv })
}
