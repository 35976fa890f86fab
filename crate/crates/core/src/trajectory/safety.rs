//! Separation checks between a candidate trajectory and its leaders.

use super::Motion;
use crate::numeric::{bisect, golden_section};

/// A stretch of time where the separation to one leader drops below the
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breach {
    /// Index into the leader slice.
    pub leader: usize,
    pub start: f64,
    pub end: f64,
    pub closest_time: f64,
    pub closest_distance: f64,
}

const TIME_TOL: f64 = 1e-9;

fn grid(from: f64, to: f64, step: f64) -> usize {
    (((to - from) / step).ceil() as usize).max(1)
}

/// Smallest distance between `a` and `b` on `[from, to]`: sampled every
/// `step`, with each sampled local minimum refined by golden section.
pub fn min_separation<A: Motion + ?Sized, B: Motion + ?Sized>(a: &A, b: &B, from: f64, to: f64, step: f64) -> (f64, f64) {
    let dist = |t: f64| a.sample(t).position.distance(b.sample(t).position);
    let n = grid(from, to, step);
    let time = |k: usize| from + (to - from) * k as f64 / n as f64;
    let mut best = (from, dist(from));
    let mut prev2 = f64::INFINITY;
    let mut prev = best.1;
    for k in 1..=n {
        let d = dist(time(k));
        if d < best.1 {
            best = (time(k), d);
        }
        if k >= 2 && prev < prev2 && prev <= d {
            let (t, v) = golden_section(dist, time(k - 2), time(k), TIME_TOL);
            if v < best.1 {
                best = (t, v);
            }
        }
        prev2 = prev;
        prev = d;
    }
    best
}

fn breach_against<A: Motion + ?Sized, B: Motion + ?Sized>(
    follower: &A,
    leader: &B,
    index: usize,
    from: f64,
    to: f64,
    step: f64,
    threshold: f64,
) -> Option<Breach> {
    let gap = |t: f64| follower.sample(t).position.distance(leader.sample(t).position) - threshold;
    let n = grid(from, to, step);
    let time = |k: usize| from + (to - from) * k as f64 / n as f64;

    let finish = |start: f64, inside: f64| -> Breach {
        // Walk forward to where the separation recovers.
        let mut lo = inside;
        let mut end = to;
        let m = grid(inside, to, step);
        for j in 1..=m {
            let t = inside + (to - inside) * j as f64 / m as f64;
            if gap(t) >= 0.0 {
                end = bisect(gap, lo, t, TIME_TOL);
                break;
            }
            lo = t;
        }
        let (closest_time, g) = golden_section(gap, start, end, TIME_TOL);
        let (closest_time, g) = if gap(inside) < g { (inside, gap(inside)) } else { (closest_time, g) };
        Breach {
            leader: index,
            start,
            end,
            closest_time,
            closest_distance: g + threshold,
        }
    };

    let g0 = gap(from);
    if g0 < 0.0 {
        return Some(finish(from, from));
    }
    let (mut prev2, mut prev) = (f64::INFINITY, g0);
    for k in 1..=n {
        let t = time(k);
        let g = gap(t);
        if g < 0.0 {
            let start = bisect(gap, time(k - 1), t, TIME_TOL);
            return Some(finish(start, t));
        }
        if k >= 2 && prev < prev2 && prev <= g {
            let (tm, gm) = golden_section(gap, time(k - 2), t, TIME_TOL);
            if gm < 0.0 {
                let start = bisect(gap, time(k - 2), tm, TIME_TOL);
                return Some(finish(start, tm));
            }
        }
        prev2 = prev;
        prev = g;
    }
    None
}

/// Earliest breach of `threshold` between `follower` and any leader on
/// `[from, to]`, sampled every `step` with local minima refined.
pub fn first_breach<A: Motion + ?Sized, B: Motion>(
    follower: &A,
    leaders: &[B],
    from: f64,
    to: f64,
    step: f64,
    threshold: f64,
) -> Option<Breach> {
    let mut best: Option<Breach> = None;
    for (i, leader) in leaders.iter().enumerate() {
        if let Some(b) = breach_against(follower, leader, i, from, to, step, threshold) {
            if best.map_or(true, |x| b.start < x.start) {
                best = Some(b);
            }
        }
    }
    best
}
