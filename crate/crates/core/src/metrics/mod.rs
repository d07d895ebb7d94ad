//! Scene and object scoring: Chamfer distance, F-score, box IoU, surface
//! sampling and a rigid pre-alignment.

mod align;
mod boxes;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::Vector3;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub use align::{align_rigid, kabsch, RigidTransform, ICP_ITERATIONS, ICP_TOLERANCE};
pub use boxes::{volume_iou, Aabb3};

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vector3<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateGeometry("empty point set".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self {
            points: self.points.iter().map(f).collect(),
        }
    }

    /// Concatenation of several sets.
    pub fn union<'a>(sets: impl IntoIterator<Item = &'a PointSet>) -> Result<Self> {
        Self::new(sets.into_iter().flat_map(|s| s.points.iter().copied()).collect())
    }
}

/// Area-weighted uniform samples on the surface, reproducible from `seed`.
pub fn sample_points(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be ≥ 1".into()));
    }
    let areas: Vec<f64> = (0..mesh.triangles().len()).map(|t| mesh.triangle_area(t)).collect();
    let pick = WeightedIndex::new(&areas).map_err(|_| Error::DegenerateMesh("zero surface area".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = mesh.vertices();
    let points = (0..n)
        .map(|_| {
            let [a, b, c] = mesh.triangles()[pick.sample(&mut rng)].map(|i| v[i as usize]);
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let s = r1.sqrt();
            a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
        })
        .collect();
    PointSet::new(points)
}

/// Exact nearest-neighbour lookups into a fixed point set.
pub struct NearestNeighbors {
    tree: ImmutableKdTree<f64, 3>,
}

impl NearestNeighbors {
    pub fn new(set: &PointSet) -> Self {
        let coords: Vec<[f64; 3]> = set.points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let tree = ImmutableKdTree::new_from_slice(&coords).expect("non-empty finite point set");
        Self { tree }
    }

    /// Squared distance to, and index of, the closest point.
    pub fn nearest(&self, q: &Vector3<f64>) -> (f64, usize) {
        let hit = self
            .tree
            .query(&[q.x, q.y, q.z])
            .nearest_one::<SquaredEuclidean<f64>>()
            .execute();
        (hit.distance, hit.item as usize)
    }

    /// Euclidean distance from each query point to the set.
    pub fn distances(&self, queries: &PointSet) -> Vec<f64> {
        queries.points.iter().map(|q| self.nearest(q).0.sqrt()).collect()
    }
}

/// Nearest-neighbour distances from every point of `from` into `to`.
pub fn nn_distances(from: &PointSet, to: &PointSet) -> Vec<f64> {
    NearestNeighbors::new(to).distances(from)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChamferConvention {
    /// Halved sum of the two mean unsquared distances.
    #[default]
    MeanL2,
    /// Same, with squared distances. Not the default.
    MeanSquaredL2,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `0.5·(mean_a d(a, B) + mean_b d(b, A))`, raw units (multiply by 100 to
/// report as a percentage).
pub fn chamfer(a: &PointSet, b: &PointSet) -> f64 {
    chamfer_with(a, b, ChamferConvention::MeanL2)
}

pub fn chamfer_with(a: &PointSet, b: &PointSet, convention: ChamferConvention) -> f64 {
    let mut ab = nn_distances(a, b);
    let mut ba = nn_distances(b, a);
    if convention == ChamferConvention::MeanSquaredL2 {
        ab.iter_mut().chain(ba.iter_mut()).for_each(|d| *d *= *d);
    }
    0.5 * (mean(&ab) + mean(&ba))
}

/// F-score at threshold `tau`, as a percentage. A point counts as matched
/// when its nearest neighbour is at distance `≤ tau`.
pub fn fscore(a: &PointSet, b: &PointSet, tau: f64) -> f64 {
    let frac = |d: Vec<f64>| d.iter().filter(|&&x| x <= tau).count() as f64 / d.len() as f64;
    let precision = frac(nn_distances(a, b));
    let recall = frac(nn_distances(b, a));
    if precision + recall == 0.0 {
        return 0.0;
    }
    200.0 * precision * recall / (precision + recall)
}

/// Joint similarity that centers the ground-truth box at the origin and
/// scales its longest side to 1. Apply the same map to both scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneNormalization {
    pub center: [f64; 3],
    pub scale: f64,
}

impl SceneNormalization {
    pub fn fit(gt: &PointSet) -> Result<Self> {
        let b = Aabb3::from_points(gt.points());
        let side = (b.max - b.min).max();
        if !(side > 0.0) {
            return Err(Error::DegenerateGeometry("ground-truth scene has zero extent".into()));
        }
        let c = (b.min + b.max) / 2.0;
        Ok(Self {
            center: [c.x, c.y, c.z],
            scale: 1.0 / side,
        })
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (p - Vector3::from(self.center)) * self.scale
    }

    pub fn apply_set(&self, s: &PointSet) -> PointSet {
        s.map(|p| self.apply(p))
    }
}
