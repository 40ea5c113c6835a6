//! Layout calibration: snap Gaussian means to an `s_min` grid, re-partition
//! the frame by how many snapped means each region holds, and re-derive each
//! Gaussian from its region as `{w/6, h/6, 0, center}`.

use crate::complexity::Region;
use crate::error::{Error, Result};
use crate::gaussians::GaussianGeom;
use crate::partition::{is_eligible, split_region, Axis, SplitRecord};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibConfig {
    /// Grid spacing and minimal region side.
    pub s_min: u32,
    pub width: u32,
    pub height: u32,
}

impl CalibConfig {
    pub fn new(s_min: u32, width: u32, height: u32) -> Result<Self> {
        let cfg = Self { s_min, width, height };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_min == 0 || self.width == 0 || self.height == 0 || self.s_min > self.width.min(self.height) {
            return Err(Error::InvalidInput(format!(
                "s_min {} must lie in [1, min({}, {})]",
                self.s_min, self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    /// Calibrated Gaussians in final region-list order.
    pub geoms: Vec<GaussianGeom<T>>,
    pub regions: Vec<Region>,
    pub trace: Vec<SplitRecord>,
    /// `assignment[i]` is the region (and calibrated Gaussian) index given
    /// to input Gaussian `i`.
    pub assignment: Vec<usize>,
    pub snapped: Vec<(u32, u32)>,
}

/// Nearest multiple of `step` in `[0, limit - 1]`, ties toward the smaller one.
fn snap_axis(v: f64, step: u32, limit: u32) -> u32 {
    let top = (limit - 1) / step;
    let q = v / f64::from(step);
    if q.is_nan() || q <= 0.0 {
        return 0;
    }
    let lower = q.floor();
    let idx = if q - lower > 0.5 { lower + 1.0 } else { lower };
    if idx >= f64::from(top) {
        top * step
    } else {
        idx as u32 * step
    }
}

pub fn snap_means<T: Scalar>(geoms: &[GaussianGeom<T>], cfg: &CalibConfig) -> Result<Vec<(u32, u32)>> {
    cfg.validate()?;
    if geoms.is_empty() {
        return Err(Error::InvalidInput("no Gaussians to calibrate".into()));
    }
    Ok(geoms
        .iter()
        .map(|g| {
            (
                snap_axis(g.mu_x.as_f64(), cfg.s_min, cfg.width),
                snap_axis(g.mu_y.as_f64(), cfg.s_min, cfg.height),
            )
        })
        .collect())
}

fn count_in(r: &Region, snapped: &[(u32, u32)]) -> usize {
    snapped
        .iter()
        .filter(|&&(x, y)| r.contains(i64::from(x), i64::from(y)))
        .count()
}

/// Splits until `l` regions exist, always taking the eligible region holding
/// the most snapped means (lowest index on ties).
pub fn count_partition(snapped: &[(u32, u32)], cfg: &CalibConfig, l: usize) -> Result<(Vec<Region>, Vec<SplitRecord>)> {
    cfg.validate()?;
    if l == 0 || snapped.len() != l {
        return Err(Error::InvalidInput(format!(
            "expected {l} snapped means (l >= 1), got {}",
            snapped.len()
        )));
    }
    let full = Region::full(cfg.width, cfg.height);
    let mut list = vec![(full, count_in(&full, snapped))];
    let mut trace = Vec::new();
    while list.len() < l {
        let mut best: Option<usize> = None;
        for (i, (r, m)) in list.iter().enumerate() {
            if is_eligible(r, cfg.s_min) && best.is_none_or(|b| *m > list[b].1) {
                best = Some(i);
            }
        }
        let Some(idx) = best else {
            return Err(Error::InfeasiblePartition {
                reached: list.len(),
                target: l,
            });
        };
        let r = list[idx].0;
        let (w, h) = (r.width(), r.height());
        let axis = if w > h {
            Axis::Width
        } else if w < h {
            Axis::Height
        } else {
            let mid = (r.x1 + r.x2) / 2;
            let on_line = snapped
                .iter()
                .any(|&(x, y)| x == mid && r.contains(i64::from(x), i64::from(y)));
            if on_line {
                Axis::Height
            } else {
                Axis::Width
            }
        };
        let (a, b) = split_region(&r, axis)?;
        trace.push(SplitRecord {
            step: trace.len(),
            index: idx,
            axis,
        });
        list[idx] = (a, count_in(&a, snapped));
        list.insert(idx + 1, (b, count_in(&b, snapped)));
    }
    Ok((list.into_iter().map(|(r, _)| r).collect(), trace))
}

/// Pairs each input with the region holding its snapped mean; inputs whose
/// region is already taken are matched to the leftover regions in ascending
/// order.
fn assign(snapped: &[(u32, u32)], regions: &[Region]) -> Vec<usize> {
    let mut taken = vec![false; regions.len()];
    let mut assignment = vec![usize::MAX; snapped.len()];
    for (i, &(x, y)) in snapped.iter().enumerate() {
        if let Some(r) = regions.iter().position(|r| r.contains(i64::from(x), i64::from(y))) {
            if !taken[r] {
                taken[r] = true;
                assignment[i] = r;
            }
        }
    }
    let mut free = (0..regions.len()).filter(|&r| !taken[r]);
    for slot in assignment.iter_mut().filter(|a| **a == usize::MAX) {
        *slot = free.next().expect("as many regions as inputs");
    }
    assignment
}

pub fn calibrate<T: Scalar>(geoms: &[GaussianGeom<T>], cfg: &CalibConfig) -> Result<Calibration<T>> {
    let snapped = snap_means(geoms, cfg)?;
    let (regions, trace) = count_partition(&snapped, cfg, geoms.len())?;
    let assignment = assign(&snapped, &regions);
    Ok(Calibration {
        geoms: regions.iter().map(GaussianGeom::from_region).collect(),
        regions,
        trace,
        assignment,
        snapped,
    })
}
