//! Sequential sampling missions: visit seed locations, then alternate
//! planner decisions with observation, variogram refitting, and
//! whole-field prediction.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::field::{rmse, Cell, FieldInstance, GridField};
use crate::kriging::{
    empirical_semivariogram, fit_spherical, predict_map, KrigingError, PredictionMap, SampleSet,
    VariogramParams, DEFAULT_N_LAGS,
};
use crate::planner::{
    path_length, plan_gs, plan_ls, plan_random, CellMask, GsTspPlanner, Path, PlanError,
    PlannerContext, QueueOrigin,
};
use crate::rng::{self, SeedMix};

/// The three fixed bootstrap sampling locations.
pub const DEFAULT_SEED_LOCS: [Cell; 3] = [Cell::new(1, 1), Cell::new(2, 2), Cell::new(3, 3)];

/// Default per-mission sample budget, seeds included.
pub const DEFAULT_BUDGET: usize = 15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MissionError {
    #[error("budget {budget} cannot cover {seeds} seed locations")]
    BudgetTooSmall { budget: usize, seeds: usize },
    #[error("waypoint ({0}, {1}) is outside the field or already visited")]
    BadWaypoint(usize, usize),
    #[error("mission needs at least one seed location")]
    NoSeeds,
    #[error(transparent)]
    Kriging(#[from] KrigingError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Fixed low-level policies runnable without a learned controller.
#[derive(Debug, Clone, PartialEq)]
pub enum MissionPolicy {
    Random,
    GlobalSearch,
    LocalSearch { radius: f64 },
    GsTsp { q_init: usize },
}

impl MissionPolicy {
    pub fn label(&self) -> String {
        match self {
            MissionPolicy::Random => String::from("Rand"),
            MissionPolicy::GlobalSearch => String::from("GS"),
            MissionPolicy::LocalSearch { radius } => ls_label(*radius),
            MissionPolicy::GsTsp { .. } => String::from("GS-TSP"),
        }
    }
}

/// Canonical label for a local-search radius: multiples of ten become
/// `LS-1`, `LS-2`, ...; anything else spells the radius out.
pub fn ls_label(radius: f64) -> String {
    let level = radius / 10.0;
    if level.fract() == 0.0 && level >= 1.0 {
        alloc::format!("LS-{}", level as u64)
    } else {
        alloc::format!("LS-r{radius}")
    }
}

/// One sampling step of a mission trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Sample index, 1-based; seed visits come first.
    pub t: usize,
    pub action_label: String,
    pub waypoint: Cell,
    pub observation: f64,
    /// RMSE of the prediction map refitted after this observation.
    pub rmse: f64,
    pub cumulative_distance: f64,
    /// Training reward; absent for seeds and evaluation rollouts.
    pub reward: Option<f64>,
    /// GS-TSP instrumentation: where the visited queue entry came from.
    pub queue_origin: Option<QueueOrigin>,
    /// GS-TSP instrumentation: variance rank percentile at visit time.
    pub kv_rank_pct: Option<f64>,
}

/// Complete record of one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub instance_id: String,
    pub steps: Vec<StepRecord>,
    pub final_map: PredictionMap,
}

impl EpisodeTrace {
    pub fn final_rmse(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.rmse)
    }

    pub fn total_distance(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_distance)
    }

    pub fn path(&self) -> Path {
        let mut p = Path::new();
        for s in &self.steps {
            p.push(s.waypoint).expect("trace waypoints never repeat");
        }
        p
    }

    /// Steps chosen by a planner (everything after the seed visits).
    pub fn decisions(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.action_label != "seed")
    }
}

/// Outcome of ingesting one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: f64,
    pub rmse: f64,
}

/// Live mission state shared by the fixed policies and the RL
/// environment: sampling history, fitted variogram, latest prediction
/// map, and the robot's position.
#[derive(Debug, Clone)]
pub struct MissionState {
    instance_id: String,
    truth: GridField,
    samples: SampleSet,
    params: VariogramParams,
    pmap: PredictionMap,
    visited: CellMask,
    position: Cell,
    path: Path,
    rng: ChaCha8Rng,
    last_rmse: f64,
}

impl MissionState {
    /// Visits the seed locations in order, fitting the variogram and
    /// refreshing the prediction map after each observation.
    pub fn bootstrap(
        instance: &FieldInstance,
        seed_locs: &[Cell],
        seed: u64,
    ) -> Result<(Self, Vec<StepRecord>), MissionError> {
        if seed_locs.is_empty() {
            return Err(MissionError::NoSeeds);
        }
        let (h, w) = instance.truth.dims();
        let mut state = MissionState {
            instance_id: instance.id.clone(),
            truth: instance.truth.clone(),
            samples: SampleSet::new(),
            params: VariogramParams::flat(),
            pmap: PredictionMap {
                mean: GridField::filled(h, w, 0.0)?,
                variance: GridField::filled(h, w, 0.0)?,
            },
            visited: CellMask::new(h, w),
            position: seed_locs[0],
            path: Path::new(),
            rng: rng::rng_from_seed(SeedMix::new(seed).str("mission").build()),
            last_rmse: f64::NAN,
        };
        let mut records = Vec::with_capacity(seed_locs.len());
        for (i, &cell) in seed_locs.iter().enumerate() {
            let out = state.observe(cell)?;
            records.push(StepRecord {
                t: i + 1,
                action_label: String::from("seed"),
                waypoint: cell,
                observation: out.observation,
                rmse: out.rmse,
                cumulative_distance: state.cumulative_distance(),
                reward: None,
                queue_origin: None,
                kv_rank_pct: None,
            });
        }
        Ok((state, records))
    }

    /// Samples the field at `cell`, refits the variogram on the enlarged
    /// history, recomputes the prediction map, and moves the robot.
    pub fn observe(&mut self, cell: Cell) -> Result<StepOutcome, MissionError> {
        if !self.visited.in_bounds(cell) || self.visited.is_visited(cell) {
            return Err(MissionError::BadWaypoint(cell.row, cell.col));
        }
        let observation = self.truth.at(cell);
        self.samples.push(cell, observation)?;
        self.visited.visit(cell);
        self.path.push(cell)?;
        self.position = cell;
        self.params = if self.samples.len() >= 2 {
            fit_spherical(&empirical_semivariogram(&self.samples, DEFAULT_N_LAGS)?)?
        } else {
            VariogramParams::flat()
        };
        let (h, w) = self.truth.dims();
        self.pmap = predict_map(&self.samples, h, w, &self.params)?;
        self.last_rmse = rmse(&self.pmap.mean, &self.truth)?;
        Ok(StepOutcome { observation, rmse: self.last_rmse })
    }

    pub fn plan_random(&mut self) -> Result<Cell, PlanError> {
        let mut ctx = PlannerContext {
            position: self.position,
            visited: &self.visited,
            pmap: Some(&self.pmap),
            rng: &mut self.rng,
        };
        plan_random(&mut ctx)
    }

    pub fn plan_gs(&mut self) -> Result<Cell, PlanError> {
        let mut ctx = PlannerContext {
            position: self.position,
            visited: &self.visited,
            pmap: Some(&self.pmap),
            rng: &mut self.rng,
        };
        plan_gs(&mut ctx)
    }

    pub fn plan_ls(&mut self, radius: f64) -> Result<Cell, PlanError> {
        let mut ctx = PlannerContext {
            position: self.position,
            visited: &self.visited,
            pmap: Some(&self.pmap),
            rng: &mut self.rng,
        };
        plan_ls(&mut ctx, radius)
    }

    pub fn plan_gs_tsp(
        &mut self,
        planner: &mut GsTspPlanner,
    ) -> Result<crate::planner::GsTspDecision, PlanError> {
        let mut ctx = PlannerContext {
            position: self.position,
            visited: &self.visited,
            pmap: Some(&self.pmap),
            rng: &mut self.rng,
        };
        planner.plan(&mut ctx)
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn pmap(&self) -> &PredictionMap {
        &self.pmap
    }

    pub fn params(&self) -> &VariogramParams {
        &self.params
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn position(&self) -> Cell {
        self.position
    }

    pub fn visited(&self) -> &CellMask {
        &self.visited
    }

    /// Number of samples taken so far.
    pub fn t(&self) -> usize {
        self.samples.len()
    }

    pub fn cumulative_distance(&self) -> f64 {
        path_length(&self.path)
    }

    pub fn last_rmse(&self) -> f64 {
        self.last_rmse
    }

    pub fn dims(&self) -> (usize, usize) {
        self.truth.dims()
    }

    /// Swaps in a different random stream; used by counterfactual
    /// simulations so they cannot disturb the live trajectory's draws.
    pub fn replace_rng(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Order-sensitive digest of the mission-visible state, for isolation
    /// assertions in tests.
    pub fn fingerprint(&self) -> u64 {
        let mut mix = SeedMix::new(0xf1e1d);
        for (c, v) in self.samples.cells().iter().zip(self.samples.values()) {
            mix = mix.u64(c.row as u64).u64(c.col as u64).u64(v.to_bits());
        }
        for &v in self.pmap.mean.values() {
            mix = mix.u64(v.to_bits());
        }
        for &v in self.pmap.variance.values() {
            mix = mix.u64(v.to_bits());
        }
        mix = mix.u64(self.position.row as u64).u64(self.position.col as u64);
        mix = mix.u64(self.params.partial_sill.to_bits());
        mix = mix.u64(self.params.range.to_bits());
        mix = mix.u64(self.params.nugget.to_bits());
        mix.build()
    }
}

/// Runs one full mission under a fixed policy and returns its trace.
pub fn run_mission(
    instance: &FieldInstance,
    policy: &MissionPolicy,
    budget: usize,
    seed_locs: &[Cell],
    seed: u64,
) -> Result<EpisodeTrace, MissionError> {
    if budget < seed_locs.len() {
        return Err(MissionError::BudgetTooSmall { budget, seeds: seed_locs.len() });
    }
    let (mut state, mut steps) = MissionState::bootstrap(instance, seed_locs, seed)?;
    let label = policy.label();
    let mut gs_tsp = match policy {
        MissionPolicy::GsTsp { q_init } => Some(GsTspPlanner::new(*q_init)),
        _ => None,
    };
    for t in seed_locs.len() + 1..=budget {
        let (waypoint, origin, rank) = match policy {
            MissionPolicy::Random => (state.plan_random()?, None, None),
            MissionPolicy::GlobalSearch => (state.plan_gs()?, None, None),
            MissionPolicy::LocalSearch { radius } => (state.plan_ls(*radius)?, None, None),
            MissionPolicy::GsTsp { .. } => {
                let d = state.plan_gs_tsp(gs_tsp.as_mut().expect("planner state exists"))?;
                (d.cell, Some(d.origin), Some(d.kv_rank_pct))
            }
        };
        let out = state.observe(waypoint)?;
        steps.push(StepRecord {
            t,
            action_label: label.clone(),
            waypoint,
            observation: out.observation,
            rmse: out.rmse,
            cumulative_distance: state.cumulative_distance(),
            reward: None,
            queue_origin: origin,
            kv_rank_pct: rank,
        });
    }
    Ok(EpisodeTrace { instance_id: state.instance_id.clone(), steps, final_map: state.pmap })
}
