//! Open-path traveling-salesman heuristic: nearest-neighbor construction
//! refined by 2-opt segment reversals. The start point is fixed, the end
//! is free.

use alloc::vec::Vec;

use crate::field::Cell;

/// Orders `points` into an open path starting at `start`.
///
/// Nearest-neighbor construction refined by 2-opt reversals and Or-opt
/// segment relocations until no move improves. The result always begins
/// with `start`, contains every input point exactly once, and is never
/// longer than the plain nearest-neighbor tour. Ties in distance are
/// broken by input order.
pub fn tsp_order(points: &[Cell], start: Cell) -> Vec<Cell> {
    if points.is_empty() {
        return alloc::vec![start];
    }
    let mut tour = nearest_neighbor(points, start);
    loop {
        let improved_2opt = two_opt_open(&mut tour);
        let improved_oropt = or_opt_open(&mut tour);
        if !improved_2opt && !improved_oropt {
            break;
        }
    }
    tour
}

/// Total Euclidean length of an open path.
pub fn open_path_length(path: &[Cell]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}

fn nearest_neighbor(points: &[Cell], start: Cell) -> Vec<Cell> {
    let mut remaining: Vec<Cell> = points.to_vec();
    let mut tour = Vec::with_capacity(points.len() + 1);
    tour.push(start);
    let mut current = start;
    while !remaining.is_empty() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in remaining.iter().enumerate() {
            let d = current.distance(*p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        current = remaining.remove(best);
        tour.push(current);
    }
    tour
}

/// Best-improvement 2-opt on an open path with a fixed first node.
/// Reversing `tour[i..=j]` changes only the edge into `i` and (when `j`
/// is interior) the edge out of `j`. Returns whether anything improved.
fn two_opt_open(tour: &mut [Cell]) -> bool {
    let n = tour.len();
    if n < 3 {
        return false;
    }
    let mut any = false;
    loop {
        let mut best_delta = -1e-12;
        let mut best: Option<(usize, usize)> = None;
        for i in 1..n - 1 {
            for j in i + 1..n {
                let mut delta = tour[i - 1].distance(tour[j]) - tour[i - 1].distance(tour[i]);
                if j + 1 < n {
                    delta += tour[i].distance(tour[j + 1]) - tour[j].distance(tour[j + 1]);
                }
                if delta < best_delta {
                    best_delta = delta;
                    best = Some((i, j));
                }
            }
        }
        match best {
            Some((i, j)) => {
                tour[i..=j].reverse();
                any = true;
            }
            None => break,
        }
    }
    any
}

/// Best-improvement Or-opt: relocates segments of 1 to 3 consecutive
/// nodes (either orientation) to every other slot. Queue sizes are tiny,
/// so candidate lengths are simply recomputed. Returns whether anything
/// improved.
fn or_opt_open(tour: &mut Vec<Cell>) -> bool {
    let n = tour.len();
    if n < 3 {
        return false;
    }
    let mut any = false;
    loop {
        let current = open_path_length(tour);
        let mut best: Option<(Vec<Cell>, f64)> = None;
        for seg_len in 1..=3usize.min(n - 2) {
            for i in 1..n - seg_len + 1 {
                let mut rest = tour.clone();
                let segment: Vec<Cell> = rest.drain(i..i + seg_len).collect();
                for slot in 1..=rest.len() {
                    if slot == i {
                        continue;
                    }
                    for reversed in [false, true] {
                        if reversed && seg_len == 1 {
                            continue;
                        }
                        let mut candidate = rest.clone();
                        let mut seg = segment.clone();
                        if reversed {
                            seg.reverse();
                        }
                        candidate.splice(slot..slot, seg);
                        let len = open_path_length(&candidate);
                        if len < current - 1e-12
                            && best.as_ref().is_none_or(|(_, bl)| len < *bl)
                        {
                            best = Some((candidate, len));
                        }
                    }
                }
            }
        }
        match best {
            Some((candidate, _)) => {
                *tour = candidate;
                any = true;
            }
            None => break,
        }
    }
    any
}
