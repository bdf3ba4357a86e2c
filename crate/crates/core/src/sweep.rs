//! Parameter tuning by full-history replay.
//!
//! A sweep fixes one parameter at each grid value and re-optimizes `K` for
//! it, minimizing the mean prediction error. `K` is searched by golden
//! section; if the sampled error curve turns out not to be unimodal the
//! search falls back to a full grid scan at the requested resolution.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{EngineError, RoundInput};
use crate::exec::{self, Execution};
use crate::rating::{RatingError, RatingParams};
use crate::replay;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid is not sorted ascending")]
    UnsortedGrid,
    #[error("history has no rounds")]
    EmptyHistory,
    #[error("invalid K search range [{lo}, {hi}] step {step}")]
    KRange { lo: f64, hi: f64, step: f64 },
    #[error(transparent)]
    Params(#[from] RatingError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepParam {
    K,
    Alpha,
    C,
    M,
    B,
    N,
}

impl SweepParam {
    pub fn set(self, params: &mut RatingParams, value: f64) {
        match self {
            SweepParam::K => params.k = value,
            SweepParam::Alpha => params.alpha = value,
            SweepParam::C => params.c = value,
            SweepParam::M => params.m = value,
            SweepParam::B => params.b = value,
            SweepParam::N => params.n = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::K => "K",
            SweepParam::Alpha => "alpha",
            SweepParam::C => "C",
            SweepParam::M => "M",
            SweepParam::B => "B",
            SweepParam::N => "N",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "K" | "k" => SweepParam::K,
            "alpha" | "W" | "w" => SweepParam::Alpha,
            "C" | "c" => SweepParam::C,
            "M" | "m" => SweepParam::M,
            "B" | "b" => SweepParam::B,
            "N" | "n" => SweepParam::N,
            other => return Err(format!("unknown sweep parameter `{other}`")),
        })
    }
}

/// Interval and resolution of the `K` re-optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSearch {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for KSearch {
    fn default() -> Self {
        KSearch {
            lo: 10.0,
            hi: 1500.0,
            step: 5.0,
        }
    }
}

impl KSearch {
    fn validate(&self) -> Result<(), SweepError> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo > 0.0
            && self.lo <= self.hi
            && self.step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SweepError::KRange {
                lo: self.lo,
                hi: self.hi,
                step: self.step,
            })
        }
    }

    /// `lo, lo + step, ...` up to and including `hi`.
    pub fn grid(&self) -> Vec<f64> {
        let steps = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        let mut g: Vec<f64> = (0..=steps)
            .map(|i| self.lo + i as f64 * self.step)
            .collect();
        if g.last().is_some_and(|&last| last < self.hi) {
            g.push(self.hi);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub target: SweepParam,
    pub grid: Vec<f64>,
    pub base: RatingParams,
    pub k_search: KSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub best_k: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub target: SweepParam,
    pub points: Vec<SweepPoint>,
    pub argmin: usize,
}

impl SweepResult {
    pub fn best(&self) -> &SweepPoint {
        &self.points[self.argmin]
    }
}

/// Outcome of a one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    /// True when the golden-section samples were not unimodal and the result
    /// comes from a full grid scan.
    pub grid_fallback: bool,
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
}

fn unimodal(samples: &mut [(f64, f64)]) -> bool {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(min) = (0..samples.len()).min_by(|&i, &j| samples[i].1.total_cmp(&samples[j].1))
    else {
        return true;
    };
    samples[..=min].windows(2).all(|w| w[0].1 >= w[1].1)
        && samples[min..].windows(2).all(|w| w[0].1 <= w[1].1)
}

/// Golden-section search of `f` over `[search.lo, search.hi]` until the
/// bracket is narrower than `search.step`, with a grid-scan fallback.
pub fn minimize_golden<E, F>(search: &KSearch, mut f: F) -> Result<Minimum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut eval = |x: f64, samples: &mut Vec<(f64, f64)>| -> Result<f64, E> {
        let v = f(x)?;
        samples.push((x, v));
        Ok(v)
    };

    let (mut a, mut b) = (search.lo, search.hi);
    eval(a, &mut samples)?;
    if b > a {
        eval(b, &mut samples)?;
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut samples)?;
    let mut fd = eval(d, &mut samples)?;
    while b - a > search.step {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut samples)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut samples)?;
        }
    }

    let mut grid_fallback = false;
    if !unimodal(&mut samples) {
        grid_fallback = true;
        for x in search.grid() {
            eval(x, &mut samples)?;
        }
    }
    let best = samples
        .iter()
        .copied()
        .reduce(|best, s| if better(s, best) { s } else { best })
        .expect("at least one sample");
    Ok(Minimum {
        x: best.0,
        value: best.1,
        evaluations: samples.len(),
        grid_fallback,
    })
}

fn check_grid(grid: &[f64]) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(SweepError::UnsortedGrid);
    }
    Ok(())
}

fn objective(
    history: &[RoundInput],
    params: RatingParams,
    exec: Execution,
) -> Result<f64, SweepError> {
    params.validate()?;
    Ok(replay::mean_error(history, &params, exec)?)
}

/// Best `K` for the given fixed parameters.
pub fn optimize_k(
    history: &[RoundInput],
    base: &RatingParams,
    search: &KSearch,
    exec: Execution,
) -> Result<Minimum, SweepError> {
    search.validate()?;
    minimize_golden(search, |k| {
        objective(history, RatingParams { k, ..*base }, exec)
    })
}

/// Evaluates every grid point (in parallel when enabled) with `K`
/// re-optimized per point, unless `K` itself is the target.
pub fn run_sweep(
    spec: &SweepSpec,
    history: &[RoundInput],
    exec: Execution,
) -> Result<SweepResult, SweepError> {
    check_grid(&spec.grid)?;
    if history.is_empty() {
        return Err(SweepError::EmptyHistory);
    }
    spec.k_search.validate()?;
    let points = exec::map_indices(spec.grid.len(), exec, 1, |i| {
        let value = spec.grid[i];
        let mut params = spec.base;
        spec.target.set(&mut params, value);
        if spec.target == SweepParam::K {
            let mean_error = objective(history, params, exec)?;
            Ok(SweepPoint {
                value,
                best_k: value,
                mean_error,
            })
        } else {
            params.validate()?;
            let min = optimize_k(history, &params, &spec.k_search, exec)?;
            Ok(SweepPoint {
                value,
                best_k: min.x,
                mean_error: min.value,
            })
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>, SweepError>>()?;

    let argmin = (0..points.len())
        .reduce(|best, i| {
            if points[i].mean_error < points[best].mean_error {
                i
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    Ok(SweepResult {
        target: spec.target,
        points,
        argmin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum {
    pub x_index: usize,
    pub y_index: usize,
    pub value: f64,
    pub evaluations: usize,
}

/// Alternating line minimization over a two-dimensional grid, starting from
/// the smallest values. Each pass moves one coordinate to its best grid
/// value with the other fixed; ties prefer smaller values. Stops when
/// neither coordinate moves.
pub fn coordinate_descent<E, F>(
    x_grid: &[f64],
    y_grid: &[f64],
    exec: Execution,
    f: F,
) -> Result<GridMinimum, E>
where
    E: Send,
    F: Fn(f64, f64) -> Result<f64, E> + Sync + Send,
{
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let line = |cache: &mut HashMap<(usize, usize), f64>,
                cells: Vec<(usize, usize)>|
     -> Result<Vec<f64>, E> {
        let missing: Vec<(usize, usize)> = cells
            .iter()
            .copied()
            .filter(|c| !cache.contains_key(c))
            .collect();
        let values = exec::map_indices(missing.len(), exec, 1, |i| {
            let (xi, yi) = missing[i];
            f(x_grid[xi], y_grid[yi])
        });
        for (cell, v) in missing.into_iter().zip(values) {
            cache.insert(cell, v?);
        }
        Ok(cells.iter().map(|c| cache[c]).collect())
    };
    let argmin = |values: &[f64]| {
        (0..values.len())
            .reduce(|best, i| if values[i] < values[best] { i } else { best })
            .expect("non-empty grid")
    };

    let (mut xi, mut yi) = (0usize, 0usize);
    let mut current = line(&mut cache, vec![(0, 0)])?[0];
    loop {
        let mut moved = false;
        let xs = line(&mut cache, (0..x_grid.len()).map(|i| (i, yi)).collect())?;
        let bx = argmin(&xs);
        if bx != xi && (xs[bx] < current || (xs[bx] == current && bx < xi)) {
            xi = bx;
            current = xs[bx];
            moved = true;
        }
        let ys = line(&mut cache, (0..y_grid.len()).map(|j| (xi, j)).collect())?;
        let by = argmin(&ys);
        if by != yi && (ys[by] < current || (ys[by] == current && by < yi)) {
            yi = by;
            current = ys[by];
            moved = true;
        }
        if !moved {
            return Ok(GridMinimum {
                x_index: xi,
                y_index: yi,
                value: current,
                evaluations: cache.len(),
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointResult {
    pub n: f64,
    pub b: f64,
    pub mean_error: f64,
    pub evaluations: usize,
}

/// Joint tuning of new-player inflation `N` and bonus `B` with the other
/// parameters held at `base`.
pub fn joint_search(
    n_grid: &[f64],
    b_grid: &[f64],
    base: &RatingParams,
    history: &[RoundInput],
    exec: Execution,
) -> Result<JointResult, SweepError> {
    check_grid(n_grid)?;
    check_grid(b_grid)?;
    if history.is_empty() {
        return Err(SweepError::EmptyHistory);
    }
    let min = coordinate_descent(n_grid, b_grid, exec, |n, b| {
        objective(history, RatingParams { n, b, ..*base }, exec)
    })?;
    Ok(JointResult {
        n: n_grid[min.x_index],
        b: b_grid[min.y_index],
        mean_error: min.value,
        evaluations: min.evaluations,
    })
}
