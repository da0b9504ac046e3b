//! Low-level waypoint policies: uniform random, global kriging-variance
//! search, radius-limited local search, and the TSP-queued global search,
//! plus path geometry helpers.
//!
//! Every policy draws one noisy variance map per decision (not per
//! candidate) so all candidates compete under a single perturbation, and
//! residual ties fall back to row-major order. Policies only ever return
//! unvisited, in-bounds cells.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::field::{Cell, GridField};
use crate::kriging::{noisy_kv, PredictionMap};
use crate::rng;
use crate::tsp;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlanError {
    #[error("no unvisited cells remain")]
    NoUnvisitedCells,
    #[error("planner requires a prediction map")]
    MissingPredictionMap,
    #[error("radius must be positive")]
    InvalidRadius,
    #[error("waypoint repeats the previous path entry")]
    RepeatedWaypoint,
}

/// Visited-cell mask over the mission grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    h: usize,
    w: usize,
    visited: Vec<bool>,
    n_visited: usize,
}

impl CellMask {
    pub fn new(h: usize, w: usize) -> Self {
        CellMask { h, w, visited: alloc::vec![false; h * w], n_visited: 0 }
    }

    pub fn visit(&mut self, cell: Cell) {
        let idx = cell.row * self.w + cell.col;
        if !self.visited[idx] {
            self.visited[idx] = true;
            self.n_visited += 1;
        }
    }

    pub fn is_visited(&self, cell: Cell) -> bool {
        self.visited[cell.row * self.w + cell.col]
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.h && cell.col < self.w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn unvisited_count(&self) -> usize {
        self.h * self.w - self.n_visited
    }

    /// Row-major iteration over unvisited cells.
    pub fn unvisited(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.w;
        self.visited
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v)
            .map(move |(i, _)| Cell::new(i / w, i % w))
    }
}

/// Ordered mission path; consecutive waypoints must differ.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    waypoints: Vec<Cell>,
}

impl Path {
    pub fn new() -> Self {
        Path::default()
    }

    pub fn push(&mut self, cell: Cell) -> Result<(), PlanError> {
        if self.waypoints.last() == Some(&cell) {
            return Err(PlanError::RepeatedWaypoint);
        }
        self.waypoints.push(cell);
        Ok(())
    }

    pub fn waypoints(&self) -> &[Cell] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn last(&self) -> Option<Cell> {
        self.waypoints.last().copied()
    }
}

/// Sum of Euclidean distances between consecutive waypoints; zero for a
/// single waypoint.
pub fn path_length(path: &Path) -> f64 {
    tsp::open_path_length(&path.waypoints)
}

/// Everything a low-level policy may look at when choosing the next
/// waypoint. The RNG drives the per-decision variance noise and any
/// random choices.
pub struct PlannerContext<'a> {
    pub position: Cell,
    pub visited: &'a CellMask,
    pub pmap: Option<&'a PredictionMap>,
    pub rng: &'a mut ChaCha8Rng,
}

/// Uniform choice over unvisited cells.
pub fn plan_random(ctx: &mut PlannerContext) -> Result<Cell, PlanError> {
    let n = ctx.visited.unvisited_count();
    if n == 0 {
        return Err(PlanError::NoUnvisitedCells);
    }
    let k = rand::Rng::gen_range(ctx.rng, 0..n);
    Ok(ctx.visited.unvisited().nth(k).expect("index within unvisited count"))
}

/// Global search: the unvisited cell with the highest noisy kriging
/// variance.
pub fn plan_gs(ctx: &mut PlannerContext) -> Result<Cell, PlanError> {
    let noisy = noisy_variance(ctx)?;
    argmax_within(ctx, &noisy, f64::INFINITY)
}

/// Local search: the highest-noisy-KV unvisited cell within `radius` of
/// the current position. An empty candidate set doubles the radius until
/// one exists.
pub fn plan_ls(ctx: &mut PlannerContext, radius: f64) -> Result<Cell, PlanError> {
    if !(radius > 0.0) {
        return Err(PlanError::InvalidRadius);
    }
    if ctx.visited.unvisited_count() == 0 {
        return Err(PlanError::NoUnvisitedCells);
    }
    let noisy = noisy_variance(ctx)?;
    let mut rad = radius;
    loop {
        if let Ok(cell) = argmax_within(ctx, &noisy, rad) {
            return Ok(cell);
        }
        rad *= 2.0;
    }
}

fn noisy_variance(ctx: &mut PlannerContext) -> Result<GridField, PlanError> {
    let pmap = ctx.pmap.ok_or(PlanError::MissingPredictionMap)?;
    Ok(noisy_kv(&pmap.variance, ctx.rng))
}

fn argmax_within(ctx: &PlannerContext, noisy: &GridField, radius: f64) -> Result<Cell, PlanError> {
    let mut best: Option<(Cell, f64)> = None;
    for cell in ctx.visited.unvisited() {
        if ctx.position.distance(cell) > radius {
            continue;
        }
        let v = noisy.at(cell);
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((cell, v)),
        }
    }
    best.map(|(c, _)| c).ok_or(PlanError::NoUnvisitedCells)
}

/// Who put an entry into the TSP queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueOrigin {
    RandomInit,
    KvSelected,
}

/// Pending waypoints for the TSP-queued global search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TspQueue {
    entries: Vec<(Cell, QueueOrigin)>,
}

impl TspQueue {
    pub fn new() -> Self {
        TspQueue::default()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.entries.iter().any(|(c, _)| *c == cell)
    }

    pub fn push(&mut self, cell: Cell, origin: QueueOrigin) {
        debug_assert!(!self.contains(cell));
        self.entries.push((cell, origin));
    }

    pub fn remove(&mut self, cell: Cell) -> Option<QueueOrigin> {
        let idx = self.entries.iter().position(|(c, _)| *c == cell)?;
        Some(self.entries.remove(idx).1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.entries.iter().map(|(c, _)| *c).collect()
    }
}

/// Outcome of one GS-TSP decision, with the instrumentation the paper
/// trail cares about: where the visited entry came from and how its
/// (noise-free) variance ranked among unvisited cells at visit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsTspDecision {
    pub cell: Cell,
    pub origin: QueueOrigin,
    /// Fraction of unvisited cells with strictly higher kriging variance
    /// at the moment of the visit (0 = the global maximum).
    pub kv_rank_pct: f64,
}

/// Global search routed through a TSP-ordered queue.
///
/// On the first decision the queue is seeded with `q_init` uniform random
/// unvisited cells. Every decision then appends the current global
/// noisy-KV argmax (if not already pending), reorders the pending entries
/// as an open TSP path from the robot position, and pops the first stop.
#[derive(Debug, Clone)]
pub struct GsTspPlanner {
    pub queue: TspQueue,
    q_init: usize,
    seeded: bool,
}

impl GsTspPlanner {
    pub fn new(q_init: usize) -> Self {
        GsTspPlanner { queue: TspQueue::new(), q_init, seeded: false }
    }

    pub fn plan(&mut self, ctx: &mut PlannerContext) -> Result<GsTspDecision, PlanError> {
        if ctx.visited.unvisited_count() == 0 && self.queue.is_empty() {
            return Err(PlanError::NoUnvisitedCells);
        }
        if !self.seeded {
            let unvisited: Vec<Cell> = ctx.visited.unvisited().collect();
            for cell in rng::sample_distinct(&unvisited, self.q_init, ctx.rng) {
                self.queue.push(cell, QueueOrigin::RandomInit);
            }
            self.seeded = true;
        }
        let kv_argmax = plan_gs(ctx)?;
        if !self.queue.contains(kv_argmax) {
            self.queue.push(kv_argmax, QueueOrigin::KvSelected);
        }
        let tour = tsp::tsp_order(&self.queue.cells(), ctx.position);
        let next = tour[1];
        let origin = self.queue.remove(next).expect("tour stops come from the queue");
        let pmap = ctx.pmap.ok_or(PlanError::MissingPredictionMap)?;
        let v_next = pmap.variance.at(next);
        let mut higher = 0usize;
        let mut total = 0usize;
        for cell in ctx.visited.unvisited() {
            total += 1;
            if pmap.variance.at(cell) > v_next {
                higher += 1;
            }
        }
        let kv_rank_pct = if total > 0 { higher as f64 / total as f64 } else { 0.0 };
        Ok(GsTspDecision { cell: next, origin, kv_rank_pct })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kriging::{predict_map, SampleSet, VariogramParams};
    use alloc::vec;

    fn center_sample_map(h: usize, w: usize) -> PredictionMap {
        let mut s = SampleSet::new();
        s.push(Cell::new(h / 2, w / 2), 0.5).unwrap();
        let vp = VariogramParams::new(1.0, 6.0, 0.1).unwrap();
        predict_map(&s, h, w, &vp).unwrap()
    }

    #[test]
    fn random_returns_the_only_unvisited_cell() {
        let mut mask = CellMask::new(2, 2);
        mask.visit(Cell::new(0, 0));
        mask.visit(Cell::new(0, 1));
        mask.visit(Cell::new(1, 0));
        let mut rng = crate::rng::rng_from_seed(0);
        let mut ctx =
            PlannerContext { position: Cell::new(0, 0), visited: &mask, pmap: None, rng: &mut rng };
        assert_eq!(plan_random(&mut ctx).unwrap(), Cell::new(1, 1));
        mask.visit(Cell::new(1, 1));
        let mut ctx =
            PlannerContext { position: Cell::new(0, 0), visited: &mask, pmap: None, rng: &mut rng };
        assert_eq!(plan_random(&mut ctx), Err(PlanError::NoUnvisitedCells));
    }

    #[test]
    fn random_is_reproducible_and_roughly_uniform() {
        let mask = CellMask::new(4, 4);
        let mut counts = [0usize; 16];
        let mut rng = crate::rng::rng_from_seed(9);
        for _ in 0..10_000 {
            let mut ctx = PlannerContext {
                position: Cell::new(0, 0),
                visited: &mask,
                pmap: None,
                rng: &mut rng,
            };
            let c = plan_random(&mut ctx).unwrap();
            counts[c.row * 4 + c.col] += 1;
        }
        // Multinomial: mean 625, sd = sqrt(n p (1-p)) ~ 24.2; allow 3 sigma.
        for (i, &count) in counts.iter().enumerate() {
            assert!((count as f64 - 625.0).abs() < 3.0 * 24.21, "cell {i}: {count}");
        }
        let mut r1 = crate::rng::rng_from_seed(5);
        let mut r2 = crate::rng::rng_from_seed(5);
        let mut c1 = PlannerContext { position: Cell::new(0, 0), visited: &mask, pmap: None, rng: &mut r1 };
        let mut c2 = PlannerContext { position: Cell::new(0, 0), visited: &mask, pmap: None, rng: &mut r2 };
        assert_eq!(plan_random(&mut c1).unwrap(), plan_random(&mut c2).unwrap());
    }

    #[test]
    fn gs_picks_a_far_corner_for_a_center_sample() {
        // Single sample at the center: KV rises with distance, so the
        // argmax must be one of the four corners. Cross-check against an
        // exhaustive scan of the noise-free map.
        let pmap = center_sample_map(9, 9);
        let mut mask = CellMask::new(9, 9);
        mask.visit(Cell::new(4, 4));
        let mut rng = crate::rng::rng_from_seed(2);
        let mut ctx = PlannerContext {
            position: Cell::new(4, 4),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        let pick = plan_gs(&mut ctx).unwrap();
        let corners =
            [Cell::new(0, 0), Cell::new(0, 8), Cell::new(8, 0), Cell::new(8, 8)];
        assert!(corners.contains(&pick), "picked {pick:?}");
        let max_v = corners.iter().map(|c| pmap.variance.at(*c)).fold(f64::MIN, f64::max);
        let exhaustive_max = mask
            .unvisited()
            .map(|c| pmap.variance.at(c))
            .fold(f64::MIN, f64::max);
        assert!((max_v - exhaustive_max).abs() < 1e-12);
    }

    #[test]
    fn gs_forced_when_one_cell_left() {
        let pmap = center_sample_map(3, 3);
        let mut mask = CellMask::new(3, 3);
        for cell in (GridField::filled(3, 3, 0.0).unwrap()).cells() {
            if cell != Cell::new(2, 2) {
                mask.visit(cell);
            }
        }
        let mut rng = crate::rng::rng_from_seed(0);
        let mut ctx = PlannerContext {
            position: Cell::new(1, 1),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        assert_eq!(plan_gs(&mut ctx).unwrap(), Cell::new(2, 2));
    }

    #[test]
    fn noise_cannot_flip_a_large_kv_gap() {
        // Two candidate cells whose KV differ by much more than the noise
        // scale: the larger one must always win.
        let pmap = center_sample_map(9, 9);
        let near = Cell::new(4, 5); // close to the sample, low KV
        let far = Cell::new(0, 0); // corner, high KV
        assert!(pmap.variance.at(far) - pmap.variance.at(near) > 1e-3);
        let mut mask = CellMask::new(9, 9);
        for cell in GridField::filled(9, 9, 0.0).unwrap().cells() {
            if cell != near && cell != far {
                mask.visit(cell);
            }
        }
        for seed in 0..50 {
            let mut rng = crate::rng::rng_from_seed(seed);
            let mut ctx = PlannerContext {
                position: Cell::new(4, 4),
                visited: &mask,
                pmap: Some(&pmap),
                rng: &mut rng,
            };
            assert_eq!(plan_gs(&mut ctx).unwrap(), far);
        }
    }

    #[test]
    fn ls_candidate_set_matches_enumeration() {
        // Radius 10 from the corner of a 32x32 grid: compare the chosen
        // cell against an argmax over the enumerated candidate disk.
        let mut s = SampleSet::new();
        s.push(Cell::new(16, 16), 0.4).unwrap();
        let vp = VariogramParams::new(1.0, 12.0, 0.05).unwrap();
        let pmap = predict_map(&s, 32, 32, &vp).unwrap();
        let mut mask = CellMask::new(32, 32);
        mask.visit(Cell::new(16, 16));
        let seed_rng = crate::rng::rng_from_seed(77);
        let mut rng = seed_rng.clone();
        let mut ctx = PlannerContext {
            position: Cell::new(0, 0),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        let pick = plan_ls(&mut ctx, 10.0).unwrap();
        assert!(Cell::new(0, 0).distance(pick) <= 10.0);
        // Recompute with an identical rng stream.
        let mut rng2 = seed_rng.clone();
        let noisy = noisy_kv(&pmap.variance, &mut rng2);
        let mut best: Option<(Cell, f64)> = None;
        for cell in mask.unvisited() {
            if Cell::new(0, 0).distance(cell) <= 10.0 {
                let v = noisy.at(cell);
                if best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((cell, v));
                }
            }
        }
        assert_eq!(pick, best.unwrap().0);
    }

    #[test]
    fn ls_radius_fallback_doubles() {
        // Everything within radius 2 of the position is visited; the
        // fallback must reach the remaining far cell.
        let pmap = center_sample_map(8, 8);
        let mut mask = CellMask::new(8, 8);
        let far = Cell::new(7, 7);
        for cell in GridField::filled(8, 8, 0.0).unwrap().cells() {
            if cell != far {
                mask.visit(cell);
            }
        }
        let mut rng = crate::rng::rng_from_seed(1);
        let mut ctx = PlannerContext {
            position: Cell::new(0, 0),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        assert_eq!(plan_ls(&mut ctx, 2.0).unwrap(), far);
    }

    #[test]
    fn ls_with_huge_radius_equals_gs() {
        let pmap = center_sample_map(12, 12);
        let mut mask = CellMask::new(12, 12);
        mask.visit(Cell::new(6, 6));
        mask.visit(Cell::new(2, 3));
        for seed in 0..20 {
            let mut r1 = crate::rng::rng_from_seed(seed);
            let mut r2 = crate::rng::rng_from_seed(seed);
            let mut ctx1 = PlannerContext {
                position: Cell::new(2, 3),
                visited: &mask,
                pmap: Some(&pmap),
                rng: &mut r1,
            };
            let mut ctx2 = PlannerContext {
                position: Cell::new(2, 3),
                visited: &mask,
                pmap: Some(&pmap),
                rng: &mut r2,
            };
            assert_eq!(plan_ls(&mut ctx1, 1e9).unwrap(), plan_gs(&mut ctx2).unwrap());
        }
    }

    #[test]
    fn path_length_cases() {
        let mut p = Path::new();
        p.push(Cell::new(0, 0)).unwrap();
        assert_eq!(path_length(&p), 0.0);
        p.push(Cell::new(3, 4)).unwrap();
        assert!((path_length(&p) - 5.0).abs() < 1e-12);
        let mut q = Path::new();
        q.push(Cell::new(0, 0)).unwrap();
        q.push(Cell::new(1, 0)).unwrap();
        q.push(Cell::new(1, 1)).unwrap();
        assert!((path_length(&q) - 2.0).abs() < 1e-12);
        assert_eq!(q.push(Cell::new(1, 1)), Err(PlanError::RepeatedWaypoint));
    }

    #[test]
    fn gs_tsp_single_seed_returns_it_when_nearest() {
        let pmap = center_sample_map(9, 9);
        let mut mask = CellMask::new(9, 9);
        mask.visit(Cell::new(4, 4));
        let mut planner = GsTspPlanner::new(0);
        planner.queue.push(Cell::new(5, 5), QueueOrigin::RandomInit);
        planner.seeded = true;
        let mut rng = crate::rng::rng_from_seed(3);
        let mut ctx = PlannerContext {
            position: Cell::new(4, 4),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        // The KV argmax (a far corner) joins the queue, but (5,5) is the
        // nearer first stop of the tour.
        let decision = planner.plan(&mut ctx).unwrap();
        assert_eq!(decision.cell, Cell::new(5, 5));
        assert_eq!(decision.origin, QueueOrigin::RandomInit);
        assert_eq!(planner.queue.len(), 1); // the appended argmax remains
    }

    #[test]
    fn gs_tsp_seeds_queue_once() {
        let pmap = center_sample_map(9, 9);
        let mut mask = CellMask::new(9, 9);
        mask.visit(Cell::new(4, 4));
        let mut planner = GsTspPlanner::new(4);
        let mut rng = crate::rng::rng_from_seed(8);
        let mut ctx = PlannerContext {
            position: Cell::new(4, 4),
            visited: &mask,
            pmap: Some(&pmap),
            rng: &mut rng,
        };
        let d = planner.plan(&mut ctx).unwrap();
        assert!(mask.in_bounds(d.cell));
        assert!(!mask.is_visited(d.cell));
        assert!((0.0..=1.0).contains(&d.kv_rank_pct));
        // 4 random seeds + possibly one argmax - one popped.
        assert!(planner.queue.len() == 4 || planner.queue.len() == 3);
    }
}
