use nalgebra::Vector3;

use crate::bbox::BBox2D;
use crate::error::{Error, Result};

/// Per-pixel depth in meters, row-major; `0` marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} depth values for {width}x{height}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidConfig(format!("depth value {v} is not >= 0")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn covered_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// True when no pixel was hit.
    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn coverage(&self) -> Mask {
        Mask::from_fn(self.width, self.height, |x, y| self.get(x, y) != 0.0)
    }

    /// Keeps values inside `mask`, zeroing the rest.
    pub fn masked(&self, mask: &Mask) -> Result<Self> {
        check_dims(self.width, self.height, mask.width(), mask.height())?;
        let values = self
            .values
            .iter()
            .zip(mask.data())
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        Ok(Self { values, ..*self })
    }
}

/// Per-pixel unit normals, zero where nothing was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: u32,
    height: u32,
    values: Vec<Vector3<f64>>,
}

impl NormalMap {
    pub fn new(width: u32, height: u32, values: Vec<Vector3<f64>>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} normals for {width}x{height}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![Vector3::zeros(); width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Vector3<f64>] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Vector3<f64> {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn is_covered(&self, index: usize) -> bool {
        self.values[index] != Vector3::zeros()
    }

    pub fn coverage(&self) -> Mask {
        Mask::from_fn(self.width, self.height, |x, y| self.get(x, y) != Vector3::zeros())
    }

    pub fn masked(&self, mask: &Mask) -> Result<Self> {
        check_dims(self.width, self.height, mask.width(), mask.height())?;
        let values = self
            .values
            .iter()
            .zip(mask.data())
            .map(|(&v, &m)| if m { v } else { Vector3::zeros() })
            .collect();
        Ok(Self { values, ..*self })
    }
}

/// Binary image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} mask pixels for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Inclusive `(min_x, min_y, max_x, max_y)` over set pixels.
    pub fn pixel_bounds(&self) -> Option<(u32, u32, u32, u32)> {
        let mut out: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out = Some(match out {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        out
    }

    /// Box through the centers of the extreme set pixels. This matches the
    /// pixel-center sampling of the rasterizer, so a rendered object's box is
    /// reproduced exactly by its own extremal points.
    pub fn center_bbox(&self) -> Result<BBox2D> {
        let (x0, y0, x1, y1) = self.pixel_bounds().ok_or(Error::EmptyMask)?;
        BBox2D::new(
            f64::from(x0) + 0.5,
            f64::from(x1) + 0.5,
            f64::from(y0) + 0.5,
            f64::from(y1) + 0.5,
        )
        .map_err(|_| {
            Error::DegenerateObservation(format!(
                "mask spans a single pixel row or column ({x0}..={x1}, {y0}..={y1})"
            ))
        })
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| **a && **b)
            .count()
    }
}

pub(crate) fn check_dims(w0: u32, h0: u32, w1: u32, h1: u32) -> Result<()> {
    if (w0, h0) != (w1, h1) {
        return Err(Error::DimensionMismatch(format!("{w0}x{h0} vs {w1}x{h1}")));
    }
    Ok(())
}
