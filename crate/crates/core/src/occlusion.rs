//! Depth-ordered occlusion decisions between neighbouring instance masks,
//! and the crop normalization applied before per-instance generation.

use std::collections::BTreeSet;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::raster::{check_dims, Mask};

/// Default neighbourhood for [`adjacency_pairs`], in pixels.
pub const DEFAULT_DILATION: u32 = 3;
/// Depths closer than this (relative) are treated as equal.
pub const DEPTH_TIE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    masks: Vec<Mask>,
    per_object_mean_depth: Vec<f64>,
}

impl MaskSet {
    pub fn new(masks: Vec<Mask>, per_object_mean_depth: Vec<f64>) -> Result<Self> {
        if masks.len() != per_object_mean_depth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} masks but {} depths",
                masks.len(),
                per_object_mean_depth.len()
            )));
        }
        if let Some(first) = masks.first() {
            for m in &masks[1..] {
                check_dims(first.width(), first.height(), m.width(), m.height())?;
            }
        }
        for (i, (m, &d)) in masks.iter().zip(&per_object_mean_depth).enumerate() {
            if !m.is_empty() && !(d.is_finite() && d > 0.0) {
                return Err(Error::DegenerateObservation(format!("object {i} has mean depth {d}")));
            }
        }
        Ok(Self {
            masks,
            per_object_mean_depth,
        })
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn mean_depths(&self) -> &[f64] {
        &self.per_object_mean_depth
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// Dilation by a `(2r+1)²` square, done as a row pass then a column pass.
pub fn dilate(mask: &Mask, radius: u32) -> Mask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let r = radius as i64;
    let run = |get: &dyn Fn(i64) -> bool, i: i64, n: i64| ((i - r).max(0)..=(i + r).min(n - 1)).any(get);
    let rows = Mask::from_fn(mask.width(), mask.height(), |x, y| {
        run(&|xx| mask.get(xx as u32, y), i64::from(x), w)
    });
    Mask::from_fn(mask.width(), mask.height(), |x, y| {
        run(&|yy| rows.get(x, yy as u32), i64::from(y), h)
    })
}

/// Index pairs `(i, j)`, `i < j`, whose masks come within `radius` pixels
/// (Chebyshev distance) of each other.
pub fn adjacency_pairs(set: &MaskSet, radius: u32) -> BTreeSet<(usize, usize)> {
    let grown: Vec<Mask> = set.masks.iter().map(|m| dilate(m, radius)).collect();
    let mut pairs = BTreeSet::new();
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            if grown[i].intersection_count(&set.masks[j]) > 0 {
                pairs.insert((i, j));
            }
        }
    }
    pairs
}

/// For each adjacent pair the member with the larger mean depth is marked
/// occluded. Nearly equal depths mark neither.
pub fn occlusion_flags(set: &MaskSet, pairs: &BTreeSet<(usize, usize)>) -> Vec<bool> {
    let d = &set.per_object_mean_depth;
    let mut occluded = vec![false; set.len()];
    for &(i, j) in pairs {
        if (d[i] - d[j]).abs() <= DEPTH_TIE * d[i].max(d[j]) {
            continue;
        }
        occluded[if d[i] > d[j] { i } else { j }] = true;
    }
    occluded
}

/// Uniform scale and offset: `p ↦ scale·p + offset`, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropTransform {
    pub scale: f64,
    pub offset: Vector2<f64>,
}

impl CropTransform {
    pub fn apply(&self, p: &Vector2<f64>) -> Vector2<f64> {
        p * self.scale + self.offset
    }
}

/// Pixel-edge box `(min, max)` of a region.
pub type PixelBox = (Vector2<f64>, Vector2<f64>);

/// Centers the box in the image and scales its larger side to
/// `alpha · max(w, h)`.
pub fn normalize_box(bbox: PixelBox, image_dims: (u32, u32), alpha: f64) -> Result<CropTransform> {
    let (lo, hi) = bbox;
    let side = (hi - lo).max();
    if !(side > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("box side {side}, alpha {alpha}")));
    }
    let (w, h) = (f64::from(image_dims.0), f64::from(image_dims.1));
    let scale = alpha * w.max(h) / side;
    let offset = Vector2::new(w / 2.0, h / 2.0) - (lo + hi) / 2.0 * scale;
    Ok(CropTransform { scale, offset })
}

/// [`normalize_box`] on the tight pixel-edge box of a mask.
pub fn normalize_crop(mask: &Mask, image_dims: (u32, u32), alpha: f64) -> Result<CropTransform> {
    let (x0, y0, x1, y1) = mask.pixel_bounds().ok_or(Error::EmptyMask)?;
    let lo = Vector2::new(f64::from(x0), f64::from(y0));
    let hi = Vector2::new(f64::from(x1) + 1.0, f64::from(y1) + 1.0);
    normalize_box((lo, hi), image_dims, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(w: u32, h: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> Mask {
        Mask::from_fn(w, h, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
    }

    fn set(masks: Vec<Mask>, depths: Vec<f64>) -> MaskSet {
        MaskSet::new(masks, depths).unwrap()
    }

    /// Pixel-by-pixel oracle: any pair of set pixels within Chebyshev `r`.
    fn brute_adjacent(a: &Mask, b: &Mask, r: u32) -> bool {
        let pts = |m: &Mask| {
            (0..m.height())
                .flat_map(|y| (0..m.width()).map(move |x| (x, y)))
                .filter(|&(x, y)| m.get(x, y))
                .collect::<Vec<_>>()
        };
        let pb = pts(b);
        pts(a).iter().any(|&(ax, ay)| {
            pb.iter().any(|&(bx, by)| ax.abs_diff(bx) <= r && ay.abs_diff(by) <= r)
        })
    }

    #[test]
    fn adjacency_examples() {
        let touching = set(vec![rect(40, 20, 0, 0, 10, 10), rect(40, 20, 10, 0, 20, 10)], vec![1.0, 2.0]);
        assert_eq!(adjacency_pairs(&touching, 3), BTreeSet::from([(0, 1)]));
        let apart = set(vec![rect(40, 20, 0, 0, 10, 10), rect(40, 20, 20, 0, 30, 10)], vec![1.0, 2.0]);
        assert!(adjacency_pairs(&apart, 3).is_empty());
        let row = set(
            vec![rect(40, 20, 0, 0, 10, 10), rect(40, 20, 11, 0, 20, 10), rect(40, 20, 22, 0, 30, 10)],
            vec![1.0, 2.0, 3.0],
        );
        let pairs = adjacency_pairs(&row, 3);
        assert_eq!(pairs, BTreeSet::from([(0, 1), (1, 2)]));
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(pairs.contains(&(i, j)), brute_adjacent(&row.masks()[i], &row.masks()[j], 3));
            }
        }
        let empty = set(vec![Mask::from_fn(4, 4, |_, _| false), rect(4, 4, 0, 0, 4, 4)], vec![0.0, 1.0]);
        assert!(adjacency_pairs(&empty, 3).is_empty());
    }

    #[test]
    fn occlusion_examples() {
        let two = set(vec![rect(8, 8, 0, 0, 4, 4), rect(8, 8, 4, 0, 8, 4)], vec![2.0, 3.0]);
        assert_eq!(occlusion_flags(&two, &adjacency_pairs(&two, 3)), vec![false, true]);
        let lone = set(vec![rect(8, 8, 0, 0, 2, 2)], vec![5.0]);
        assert_eq!(occlusion_flags(&lone, &adjacency_pairs(&lone, 3)), vec![false]);
        let chain = set(vec![rect(8, 8, 0, 0, 1, 1); 3], vec![1.0, 2.0, 3.0]);
        assert_eq!(occlusion_flags(&chain, &BTreeSet::from([(0, 1), (1, 2)])), vec![false, true, true]);
        let tie = set(vec![rect(8, 8, 0, 0, 1, 1); 2], vec![2.0, 2.0 * (1.0 + 1e-9)]);
        assert_eq!(occlusion_flags(&tie, &BTreeSet::from([(0, 1)])), vec![false, false]);
    }

    #[test]
    fn crop_examples() {
        let m = rect(512, 512, 10, 20, 110, 70);
        let c = normalize_crop(&m, (512, 512), 0.6).unwrap();
        assert!((c.scale - 3.072).abs() < 1e-12);

        let fixed = rect(500, 500, 100, 200, 400, 300);
        let c = normalize_crop(&fixed, (500, 500), 0.6).unwrap();
        assert!((c.scale - 1.0).abs() < 1e-12 && c.offset.norm() < 1e-9);

        let sq = rect(300, 300, 5, 5, 25, 25);
        let c = normalize_crop(&sq, (300, 300), 0.6).unwrap();
        let center = c.apply(&Vector2::new(15.0, 15.0));
        assert!((center - Vector2::new(150.0, 150.0)).norm() < 1e-9);

        assert!(matches!(
            normalize_crop(&Mask::from_fn(4, 4, |_, _| false), (4, 4), 0.6),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn mask_set_validation() {
        assert!(MaskSet::new(vec![rect(4, 4, 0, 0, 1, 1)], vec![]).is_err());
        assert!(MaskSet::new(vec![rect(4, 4, 0, 0, 1, 1), rect(5, 4, 0, 0, 1, 1)], vec![1.0, 1.0]).is_err());
        assert!(MaskSet::new(vec![rect(4, 4, 0, 0, 1, 1)], vec![-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn dilation_matches_brute_force(
            bits in prop::collection::vec(prop::bool::weighted(0.05), 24 * 16),
            other in prop::collection::vec(prop::bool::weighted(0.05), 24 * 16),
            r in 0u32..5,
        ) {
            let a = Mask::new(24, 16, bits).unwrap();
            let b = Mask::new(24, 16, other).unwrap();
            let s = set(vec![a.clone(), b.clone()], vec![1.0, 2.0]);
            let found = adjacency_pairs(&s, r).contains(&(0, 1));
            prop_assert_eq!(found, brute_adjacent(&a, &b, r));
            // Symmetric.
            let swapped = set(vec![b, a], vec![1.0, 2.0]);
            prop_assert_eq!(found, adjacency_pairs(&swapped, r).contains(&(0, 1)));
        }

        #[test]
        fn crop_is_idempotent(
            x in 0.0f64..400.0, y in 0.0f64..300.0, w in 1.0f64..200.0, h in 1.0f64..200.0,
            iw in 64u32..1024, ih in 64u32..1024, alpha in 0.1f64..1.0,
        ) {
            let b = (Vector2::new(x, y), Vector2::new(x + w, y + h));
            let c = normalize_box(b, (iw, ih), alpha).unwrap();
            let moved = (c.apply(&b.0), c.apply(&b.1));
            let again = normalize_box(moved, (iw, ih), alpha).unwrap();
            prop_assert!((again.scale - 1.0).abs() < 1e-9);
            prop_assert!(again.offset.norm() < 1e-9 * f64::from(iw.max(ih)));
        }
    }
}
