//! Pinhole camera model.
//!
//! Camera space is +Z forward, +X right, +Y down. Pixel coordinates have their
//! origin at the top-left image corner, so the pixel `(i, j)` covers
//! `[i, i + 1) x [j, j + 1)` and its center sits at `(i + 0.5, j + 0.5)`.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intrinsics of an ideal (distortion free) pinhole camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCamera")]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Deserialize)]
struct RawCamera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl TryFrom<RawCamera> for PinholeCamera {
    type Error = Error;

    fn try_from(raw: RawCamera) -> Result<Self> {
        PinholeCamera::new(raw.fx, raw.fy, raw.cx, raw.cy, raw.width, raw.height)
    }
}

impl PinholeCamera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image must be at least 1x1".into()));
        }
        if !(cx.is_finite() && cy.is_finite())
            || cx < 0.0
            || cy < 0.0
            || cx > f64::from(width)
            || cy > f64::from(height)
        {
            return Err(Error::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Square-pixel camera with the principal point at the image center and
    /// the given field of view spanning the larger image dimension.
    pub fn from_fov(fov_degrees: f64, width: u32, height: u32) -> Result<Self> {
        if !(fov_degrees > 0.0 && fov_degrees < 180.0) {
            return Err(Error::InvalidCamera(format!(
                "field of view {fov_degrees} outside (0, 180)"
            )));
        }
        let half_extent = f64::from(width.max(height)) / 2.0;
        let f = half_extent / (fov_degrees.to_radians() / 2.0).tan();
        Self::new(
            f,
            f,
            f64::from(width) / 2.0,
            f64::from(height) / 2.0,
            width,
            height,
        )
    }

    /// Field of view across the larger image dimension, in degrees.
    pub fn fov_degrees(&self) -> f64 {
        let (half, f) = if self.width >= self.height {
            (f64::from(self.width) / 2.0, self.fx)
        } else {
            (f64::from(self.height) / 2.0, self.fy)
        };
        2.0 * (half / f).atan().to_degrees()
    }

    /// Projects a camera-space point to pixel coordinates.
    pub fn project(&self, point: &Vector3<f64>) -> Result<Vector2<f64>> {
        if point.z <= 0.0 || !point.z.is_finite() {
            return Err(Error::PointBehindCamera(point.z));
        }
        Ok(self.project_unchecked(point))
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, point: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(
            self.cx + self.fx * point.x / point.z,
            self.cy + self.fy * point.y / point.z,
        )
    }

    /// Camera-space point at depth `z` along the ray through pixel `(u, v)`.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Same camera with every intrinsic scaled by `k` (image dimensions are
    /// rounded to the nearest pixel).
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let width = (f64::from(self.width) * k).round().max(1.0) as u32;
        let height = (f64::from(self.height) * k).round().max(1.0) as u32;
        Self::new(
            self.fx * k,
            self.fy * k,
            (self.cx * k).min(f64::from(width)),
            (self.cy * k).min(f64::from(height)),
            width,
            height,
        )
    }
}
