//! Monte Carlo search for hidden steerability.
//!
//! Random diagonal filter ensembles are applied to a state and every
//! sufficiently likely branch is classified in both directions. Local
//! unitaries do not change steerability, so diagonal filters cover the
//! relevant orbit of the family states.
//!
//! Each sample is first screened with a reduced solver budget. The strongest
//! candidates in each direction are then recomputed with the full budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply_all, FilterEnsemble};
use crate::quantum::{concurrence, DensityMatrix, StateParams};
use crate::steering::{analytic_predicates, steering_radius, AnalyticPredicates, Direction, SolverConfig};

/// Range of the sampled filter amplitudes.
pub const AMPLITUDE_RANGE: (f64, f64) = (0.01, 1.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_samples: usize,
    pub rng_seed: u64,
    pub min_branch_prob: f64,
    /// Budget used for every sampled branch.
    pub screening: SolverConfig,
    /// Budget used for the re-verification pass.
    pub verification: SolverConfig,
    /// Candidates per direction recomputed with `verification`.
    pub verify_top: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            rng_seed: 42,
            min_branch_prob: 1e-3,
            screening: SolverConfig { outer_seeds: 2, outer_max_evals: 60, bisection_tol: 1e-3, ..Default::default() },
            verification: SolverConfig::default(),
            verify_top: 10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::OutOfRange { name: "n_samples", value: 0.0, lo: 1.0, hi: f64::INFINITY });
        }
        if !(self.min_branch_prob > 0.0 && self.min_branch_prob <= 0.25) {
            return Err(Error::OutOfRange { name: "min_branch_prob", value: self.min_branch_prob, lo: 0.0, hi: 0.25 });
        }
        self.screening.validate()?;
        self.verification.validate()
    }

    /// Applies the same feasibility threshold to both budgets.
    pub fn with_err(mut self, err: f64) -> Self {
        self.screening.err = err;
        self.verification.err = err;
        self
    }
}

/// Draws `a1, a2, b1, b2` independently and uniformly from [0.01, 1].
pub fn sample_ensemble<R: Rng + ?Sized>(rng: &mut R) -> FilterEnsemble {
    let (lo, hi) = AMPLITUDE_RANGE;
    let [a1, a2, b1, b2] = std::array::from_fn(|_| rng.random_range(lo..=hi));
    FilterEnsemble::from_diagonals(a1, a2, b1, b2).expect("amplitudes lie in [0, 1]")
}

/// Screening result for one sampled ensemble. Branches follow the order
/// (1,1), (1,2), (2,1), (2,2); `None` marks a skipped or failed branch.
#[derive(Clone, Debug, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub ensemble: FilterEnsemble,
    pub probabilities: [f64; 4],
    pub radius_ab: [Option<f64>; 4],
    pub radius_ba: [Option<f64>; 4],
    pub skipped: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchRef {
    pub sample: usize,
    pub branch: [usize; 2],
    pub ensemble: FilterEnsemble,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifiedCandidate {
    pub sample: usize,
    pub branch: [usize; 2],
    pub direction: Direction,
    pub screening_radius: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub params: Option<StateParams>,
    pub concurrence: f64,
    pub n_samples: usize,
    pub rng_seed: u64,
    pub max_radius_ab: f64,
    pub max_radius_ba: f64,
    pub argmax_ab: Option<BranchRef>,
    pub argmax_ba: Option<BranchRef>,
    /// Branches classified (at most `4·n_samples`).
    pub samples_evaluated: usize,
    pub branches_skipped: usize,
    pub solver_failures: usize,
    pub verified: Vec<VerifiedCandidate>,
}

const BRANCHES: [[usize; 2]; 4] = [[1, 1], [1, 2], [2, 1], [2, 2]];

fn screen_sample(rho: &DensityMatrix, index: usize, ensemble: FilterEnsemble, cfg: &SearchConfig) -> SampleRecord {
    let mut rec = SampleRecord {
        index,
        ensemble,
        probabilities: [0.0; 4],
        radius_ab: [None; 4],
        radius_ba: [None; 4],
        skipped: 0,
        failures: 0,
    };
    let outcomes = match apply_all(rho, &ensemble) {
        Ok(o) => o,
        Err(_) => {
            rec.failures = 4;
            return rec;
        }
    };
    for (b, out) in outcomes.iter().enumerate() {
        rec.probabilities[b] = out.probability;
        let state = match out.state() {
            Ok(s) if out.probability >= cfg.min_branch_prob => s,
            _ => {
                rec.skipped += 1;
                continue;
            }
        };
        for (dir, slot) in [(Direction::AtoB, &mut rec.radius_ab[b]), (Direction::BtoA, &mut rec.radius_ba[b])] {
            match steering_radius(state, dir, &cfg.screening) {
                Ok(r) => *slot = Some(r.radius),
                Err(_) => rec.failures += 1,
            }
        }
    }
    rec
}

/// Screens every sample and returns the per-sample records alongside the
/// summary.
pub fn hidden_search_detailed(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<(SearchReport, Vec<SampleRecord>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let ensembles: Vec<FilterEnsemble> = (0..cfg.n_samples).map(|_| sample_ensemble(&mut rng)).collect();
    let records: Vec<SampleRecord> =
        ensembles.into_par_iter().enumerate().map(|(i, e)| screen_sample(rho, i, e, cfg)).collect();

    let mut solver_failures: usize = records.iter().map(|r| r.failures).sum();
    let branches_skipped = records.iter().map(|r| r.skipped).sum();
    let samples_evaluated =
        records.iter().map(|r| r.radius_ab.iter().zip(&r.radius_ba).filter(|(a, b)| a.is_some() || b.is_some()).count()).sum();

    let mut verified = Vec::new();
    let mut argmax = [None::<BranchRef>, None::<BranchRef>];
    for (d, dir) in [Direction::AtoB, Direction::BtoA].into_iter().enumerate() {
        let radii = |r: &SampleRecord| if d == 0 { r.radius_ab } else { r.radius_ba };
        let mut cands: Vec<(f64, usize, usize)> = records
            .iter()
            .flat_map(|r| radii(r).into_iter().enumerate().filter_map(move |(b, x)| x.map(|x| (x, r.index, b))))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let top: Vec<(f64, usize, usize)> = cands.iter().take(cfg.verify_top).copied().collect();
        let rechecked: Vec<(f64, usize, usize, Option<f64>)> = top
            .into_par_iter()
            .map(|(screen, i, b)| {
                let out = apply_all(rho, &records[i].ensemble).ok().and_then(|o| {
                    let state = o[b].state().ok()?.clone();
                    steering_radius(&state, dir, &cfg.verification).ok()
                });
                (screen, i, b, out.map(|r| r.radius))
            })
            .collect();

        let mut best: Option<(f64, usize, usize)> = None;
        let mut consider = |x: f64, i: usize, b: usize| {
            if best.is_none_or(|(bx, _, _)| x > bx) {
                best = Some((x, i, b));
            }
        };
        for &(screen, i, b, full) in &rechecked {
            match full {
                Some(x) => {
                    verified.push(VerifiedCandidate { sample: i, branch: BRANCHES[b], direction: dir, screening_radius: screen, radius: x });
                    consider(x, i, b);
                }
                None => {
                    solver_failures += 1;
                    consider(screen, i, b);
                }
            }
        }
        for &(x, i, b) in cands.iter().skip(cfg.verify_top) {
            consider(x, i, b);
        }
        argmax[d] = best.map(|(radius, i, b)| BranchRef { sample: i, branch: BRANCHES[b], ensemble: records[i].ensemble, radius });
    }

    let [argmax_ab, argmax_ba] = argmax;
    let report = SearchReport {
        params: None,
        concurrence: concurrence(rho)?,
        n_samples: cfg.n_samples,
        rng_seed: cfg.rng_seed,
        max_radius_ab: argmax_ab.as_ref().map_or(0.0, |b| b.radius),
        max_radius_ba: argmax_ba.as_ref().map_or(0.0, |b| b.radius),
        argmax_ab,
        argmax_ba,
        samples_evaluated,
        branches_skipped,
        solver_failures,
        verified,
    };
    Ok((report, records))
}

pub fn hidden_search(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<SearchReport> {
    hidden_search_detailed(rho, cfg).map(|(r, _)| r)
}

/// CSV detail: one row per sample with ensemble, branch probabilities and
/// per-branch radii (empty when skipped).
pub fn records_to_csv(records: &[SampleRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample".to_string(), "a1".into(), "a2".into(), "b1".into(), "b2".into()];
    for prefix in ["p", "r_ab_", "r_ba_"] {
        header.extend(BRANCHES.iter().map(|[i, j]| format!("{prefix}{i}{j}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    let opt = |x: &Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in records {
        let mut row = vec![r.index.to_string()];
        row.extend(r.ensemble.params().iter().map(f64::to_string));
        row.extend(r.probabilities.iter().map(f64::to_string));
        row.extend(r.radius_ab.iter().map(opt));
        row.extend(r.radius_ba.iter().map(opt));
        w.write_record(&row).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).map_err(|e| Error::Parse(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Region colors of the (θ, η) state map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// Two-way steerable.
    Pink,
    /// One-way A→B.
    Blue,
    /// Two-way unsteerable.
    Yellow,
}

impl Region {
    pub fn from_predicates(p: &AnalyticPredicates) -> Self {
        match (p.ab_steerable_3set, p.oneway_window) {
            (false, _) => Region::Yellow,
            (true, true) => Region::Blue,
            (true, false) => Region::Pink,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Pink => "pink",
            Region::Blue => "blue",
            Region::Yellow => "yellow",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapCell {
    pub theta: f64,
    pub eta: f64,
    pub region: Region,
    pub predicates: AnalyticPredicates,
}

/// Labels every grid point with its analytic region, θ-major.
pub fn sweep_state_map(theta_grid: &[f64], eta_grid: &[f64]) -> Result<Vec<MapCell>> {
    if theta_grid.is_empty() || eta_grid.is_empty() {
        return Err(Error::InvalidState("empty map grid".into()));
    }
    let mut cells = Vec::with_capacity(theta_grid.len() * eta_grid.len());
    for &theta in theta_grid {
        for &eta in eta_grid {
            let predicates = analytic_predicates(StateParams::new(theta, eta)?);
            cells.push(MapCell { theta, eta, region: Region::from_predicates(&predicates), predicates });
        }
    }
    Ok(cells)
}

pub fn map_to_csv(cells: &[MapCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["theta", "eta", "region", "ab_steerable_3set", "oneway_window", "ba_unsteerable_infset"])
        .map_err(csv_err)?;
    for c in cells {
        let p = &c.predicates;
        w.write_record([
            c.theta.to_string(),
            c.eta.to_string(),
            c.region.as_str().to_string(),
            p.ab_steerable_3set.to_string(),
            p.oneway_window.to_string(),
            p.ba_unsteerable_infset.to_string(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).map_err(|e| Error::Parse(e.to_string()))
}
