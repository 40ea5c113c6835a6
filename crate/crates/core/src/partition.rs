//! Complexity-driven recursive bisection of an image into exactly `l` regions.
//!
//! Each step picks the eligible region (a side longer than `s_min`) with the
//! highest complexity and halves it: along the longer side for rectangles,
//! and for squares along whichever axis leaves the smaller minimum child
//! complexity (width wins ties). The first child takes the parent's list
//! slot and the second is inserted right after it.

use crate::complexity::{region_complexity, ComplexityConfig, Region};
use crate::error::{Error, Result};
use crate::imageio::{gradient_map, GradientMap, RasterImage};
use serde::{Deserialize, Serialize};

pub const DEFAULT_S_MIN: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Cut the width in two (a vertical cut line).
    Width,
    /// Cut the height in two (a horizontal cut line).
    Height,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    pub l: usize,
    pub s_min: u32,
    pub complexity: ComplexityConfig,
}

impl PartitionConfig {
    pub fn new(l: usize) -> Self {
        Self {
            l,
            s_min: DEFAULT_S_MIN,
            complexity: ComplexityConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidInput("target region count must be >= 1".into()));
        }
        if self.s_min == 0 {
            return Err(Error::InvalidInput("s_min must be >= 1".into()));
        }
        self.complexity.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub step: usize,
    pub index: usize,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub regions: Vec<Region>,
    pub trace: Vec<SplitRecord>,
}

/// Halves `r` along `axis`; the first child gets `floor(side / 2)`.
pub fn split_region(r: &Region, axis: Axis) -> Result<(Region, Region)> {
    match axis {
        Axis::Width => {
            let w = r.width();
            if w < 2 {
                return Err(Error::SideTooSmall(w));
            }
            let mid = r.x1 + w / 2;
            Ok((Region { x2: mid, ..*r }, Region { x1: mid, ..*r }))
        }
        Axis::Height => {
            let h = r.height();
            if h < 2 {
                return Err(Error::SideTooSmall(h));
            }
            let mid = r.y1 + h / 2;
            Ok((Region { y2: mid, ..*r }, Region { y1: mid, ..*r }))
        }
    }
}

#[inline]
pub(crate) fn is_eligible(r: &Region, s_min: u32) -> bool {
    r.width().max(r.height()) > s_min
}

/// Partitions `img` using the gradient map of its grayscale version.
pub fn partition_image(
    img: &RasterImage,
    cfg: &PartitionConfig,
    importance: Option<&GradientMap>,
) -> Result<PartitionResult> {
    let e = gradient_map(img)?;
    partition_gradient_map(&e, cfg, importance)
}

/// Partition driven by a precomputed gradient map.
pub fn partition_gradient_map(
    e: &GradientMap,
    cfg: &PartitionConfig,
    importance: Option<&GradientMap>,
) -> Result<PartitionResult> {
    cfg.validate()?;
    if let Some(imp) = importance {
        if imp.width() != e.width() || imp.height() != e.height() {
            return Err(Error::ShapeMismatch("importance map size differs from image".into()));
        }
        if imp.data().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput("importance values must be > 0".into()));
        }
    }
    let m = |r: &Region| region_complexity(e, r, &cfg.complexity, importance);

    let full = Region::full(e.width(), e.height());
    // (region, cached complexity)
    let mut list: Vec<(Region, f64)> = vec![(full, m(&full)?)];
    let mut trace = Vec::with_capacity(cfg.l.saturating_sub(1));

    while list.len() < cfg.l {
        let mut best: Option<usize> = None;
        for (i, (r, mi)) in list.iter().enumerate() {
            if is_eligible(r, cfg.s_min) && best.is_none_or(|b| *mi > list[b].1) {
                best = Some(i);
            }
        }
        let Some(idx) = best else {
            return Err(Error::InfeasiblePartition {
                reached: list.len(),
                target: cfg.l,
            });
        };
        let parent = list[idx].0;
        let (w, h) = (parent.width(), parent.height());
        let (axis, first, second) = if w != h {
            let axis = if w > h { Axis::Width } else { Axis::Height };
            let (a, b) = split_region(&parent, axis)?;
            let (ma, mb) = rayon::join(|| m(&a), || m(&b));
            (axis, (a, ma?), (b, mb?))
        } else {
            let (r1, r2) = split_region(&parent, Axis::Width)?;
            let (r3, r4) = split_region(&parent, Axis::Height)?;
            let ((m1, m2), (m3, m4)) = rayon::join(
                || rayon::join(|| m(&r1), || m(&r2)),
                || rayon::join(|| m(&r3), || m(&r4)),
            );
            let (m1, m2, m3, m4) = (m1?, m2?, m3?, m4?);
            if m1.min(m2) <= m3.min(m4) {
                (Axis::Width, (r1, m1), (r2, m2))
            } else {
                (Axis::Height, (r3, m3), (r4, m4))
            }
        };
        trace.push(SplitRecord {
            step: trace.len(),
            index: idx,
            axis,
        });
        list[idx] = first;
        list.insert(idx + 1, second);
    }

    Ok(PartitionResult {
        regions: list.into_iter().map(|(r, _)| r).collect(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half_noise(w: u32, h: u32, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, _)| if x < w / 2 { 128.0 } else { rng.gen_range(0.0f32..=255.0) })
            .collect();
        RasterImage::new(w, h, 1, data).unwrap()
    }

    fn assert_tiles(regions: &[Region], w: u32, h: u32) {
        let area: u64 = regions.iter().map(Region::area).sum();
        assert_eq!(area, u64::from(w) * u64::from(h));
        for (i, a) in regions.iter().enumerate() {
            assert!(a.is_valid_within(w, h));
            for b in &regions[i + 1..] {
                assert!(!a.intersects(b), "{a:?} overlaps {b:?}");
            }
        }
    }

    #[test]
    fn split_examples() {
        let r = Region::new(0, 0, 10, 4);
        assert_eq!(split_region(&r, Axis::Width).unwrap(), (Region::new(0, 0, 5, 4), Region::new(5, 0, 10, 4)));
        let r = Region::new(0, 0, 7, 4);
        assert_eq!(split_region(&r, Axis::Width).unwrap(), (Region::new(0, 0, 3, 4), Region::new(3, 0, 7, 4)));
        let r = Region::new(0, 0, 4, 6);
        assert_eq!(split_region(&r, Axis::Height).unwrap(), (Region::new(0, 0, 4, 3), Region::new(0, 3, 4, 6)));
        assert!(matches!(split_region(&Region::new(3, 0, 4, 6), Axis::Width), Err(Error::SideTooSmall(1))));
    }

    #[test]
    fn single_region() {
        let img = half_noise(20, 12, 1);
        let res = partition_image(&img, &PartitionConfig::new(1), None).unwrap();
        assert_eq!(res.regions, vec![Region::full(20, 12)]);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn two_regions_follow_longer_side() {
        let img = half_noise(64, 32, 2);
        let res = partition_image(&img, &PartitionConfig::new(2), None).unwrap();
        assert_eq!(res.regions, vec![Region::new(0, 0, 32, 32), Region::new(32, 0, 64, 32)]);
        let flat = RasterImage::filled(64, 32, 1, 9.0).unwrap();
        assert_eq!(partition_image(&flat, &PartitionConfig::new(2), None).unwrap().regions, res.regions);
    }

    #[test]
    fn noisy_half_gets_more_regions() {
        let img = half_noise(64, 64, 3);
        for l in [8, 16, 32] {
            let res = partition_image(&img, &PartitionConfig::new(l), None).unwrap();
            assert_eq!(res.regions.len(), l);
            assert_tiles(&res.regions, 64, 64);
            let right = res.regions.iter().filter(|r| r.x1 >= 32).count();
            assert!(right as f64 >= 0.6 * l as f64, "l={l}: {right} regions on the noisy half");
        }
    }

    #[test]
    fn infeasible_when_regions_run_out() {
        // a 4x4 image with s_min = 4 cannot be split at all
        let img = RasterImage::filled(4, 4, 1, 0.0).unwrap();
        let err = partition_image(&img, &PartitionConfig::new(2), None);
        assert!(matches!(err, Err(Error::InfeasiblePartition { reached: 1, target: 2 })));
        // 8x8 with s_min 4 admits at most four 4x4 regions
        let img = RasterImage::filled(8, 8, 1, 0.0).unwrap();
        assert!(partition_image(&img, &PartitionConfig::new(4), None).is_ok());
        assert!(matches!(
            partition_image(&img, &PartitionConfig::new(5), None),
            Err(Error::InfeasiblePartition { reached: 4, target: 5 })
        ));
    }

    #[test]
    fn rejects_invalid_config() {
        let img = RasterImage::filled(8, 8, 1, 0.0).unwrap();
        assert!(matches!(partition_image(&img, &PartitionConfig::new(0), None), Err(Error::InvalidInput(_))));
        let cfg = PartitionConfig { s_min: 0, ..PartitionConfig::new(2) };
        assert!(matches!(partition_image(&img, &cfg, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn importance_pulls_regions() {
        // flat image with lambda = 0: importance alone decides which area wins
        let img = RasterImage::filled(32, 32, 1, 50.0).unwrap();
        let imp: Vec<f32> = (0..32u32)
            .flat_map(|y| (0..32u32).map(move |x| (x, y)))
            .map(|(x, _)| if x < 16 { 1.0 } else { 10.0 })
            .collect();
        let imp = GradientMap::new(32, 32, imp).unwrap();
        let cfg = PartitionConfig {
            complexity: ComplexityConfig::with_lambda(0.0),
            ..PartitionConfig::new(10)
        };
        let res = partition_image(&img, &cfg, Some(&imp)).unwrap();
        let right = res.regions.iter().filter(|r| r.x1 >= 16).count();
        assert!(right >= 8, "{:?}", res.regions);
    }

    #[test]
    fn square_case_prefers_width_on_ties() {
        let img = RasterImage::filled(16, 16, 1, 0.0).unwrap();
        let res = partition_image(&img, &PartitionConfig::new(2), None).unwrap();
        assert_eq!(res.trace, vec![SplitRecord { step: 0, index: 0, axis: Axis::Width }]);
    }
}
