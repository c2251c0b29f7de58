//! Row-major image grids.
//!
//! [`Plane`] holds unconstrained reals (the image of [`LipImage`] under `xi`),
//! [`LipImage`] holds grey levels together with their LIP ceiling.

use crate::error::{Error, Result};
use crate::lip::{self, check_ceiling, same_ceiling};

/// A real-valued grid. Values may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "empty grid {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Plane::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Maps every value back through `xi^-1`.
    pub fn to_lip(&self, ceiling: f64) -> Result<LipImage> {
        check_ceiling(ceiling)?;
        Ok(LipImage {
            width: self.width,
            height: self.height,
            ceiling,
            pixels: self.data.iter().map(|&u| lip::xi_inv(u, ceiling)).collect(),
        })
    }
}

/// A grey-level image under the LIP model.
#[derive(Debug, Clone, PartialEq)]
pub struct LipImage {
    width: usize,
    height: usize,
    ceiling: f64,
    pixels: Vec<f64>,
}

/// A map of distances shares the image representation; values lie in `[0, M]`.
pub type DistanceMap = LipImage;

impl LipImage {
    pub fn new(width: usize, height: usize, ceiling: f64, pixels: Vec<f64>) -> Result<Self> {
        check_ceiling(ceiling)?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "empty image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(bad) = pixels.iter().find(|v| v.is_nan() || **v > ceiling) {
            return Err(Error::InvalidValue(format!(
                "grey level {bad} outside (-inf, {ceiling}]"
            )));
        }
        Ok(LipImage {
            width,
            height,
            ceiling,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, ceiling: f64, value: f64) -> Result<Self> {
        LipImage::new(width, height, ceiling, vec![value; width * height])
    }

    /// Promotes 8-bit data to `f64`.
    pub fn from_u8(width: usize, height: usize, ceiling: f64, bytes: &[u8]) -> Result<Self> {
        LipImage::new(
            width,
            height,
            ceiling,
            bytes.iter().map(|&b| f64::from(b)).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pixels
    }

    pub fn same_shape(&self, other: &LipImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &LipImage, f: impl Fn(f64, f64, f64) -> f64) -> Result<LipImage> {
        same_ceiling(self.ceiling, other.ceiling)?;
        self.same_shape(other)?;
        let m = self.ceiling;
        Ok(LipImage {
            width: self.width,
            height: self.height,
            ceiling: m,
            pixels: self
                .pixels
                .iter()
                .zip(&other.pixels)
                .map(|(&a, &b)| f(a, b, m))
                .collect(),
        })
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> LipImage {
        LipImage {
            width: self.width,
            height: self.height,
            ceiling: self.ceiling,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn lip_add(&self, other: &LipImage) -> Result<LipImage> {
        self.zip_with(other, lip::lip_add)
    }

    pub fn lip_sub(&self, other: &LipImage) -> Result<LipImage> {
        self.zip_with(other, lip::lip_sub)
    }

    /// LIP-adds the constant `k` to every pixel.
    pub fn lip_add_constant(&self, k: f64) -> LipImage {
        let m = self.ceiling;
        self.map_values(|v| lip::lip_add(v, k, m))
    }

    /// LIP-subtracts the constant `k` from every pixel.
    pub fn lip_sub_constant(&self, k: f64) -> LipImage {
        let m = self.ceiling;
        self.map_values(|v| lip::lip_sub(v, k, m))
    }

    pub fn lip_negate(&self) -> LipImage {
        let m = self.ceiling;
        self.map_values(|v| lip::lip_negate(v, m))
    }

    pub fn lip_scale(&self, lambda: f64) -> LipImage {
        let m = self.ceiling;
        self.map_values(|v| lip::lip_scalar_mul(lambda, v, m))
    }

    /// Elementwise `xi`.
    pub fn to_xi(&self) -> Plane {
        let m = self.ceiling;
        Plane {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|&v| lip::xi(v, m)).collect(),
        }
    }

    /// Elementwise `xi`, first clamping values at or above `M` to `M - 1`.
    ///
    /// Returns the plane and the number of clamped pixels.
    pub fn to_xi_clamped(&self) -> (Plane, usize) {
        let m = self.ceiling;
        let mut clamped = 0;
        let data = self
            .pixels
            .iter()
            .map(|&v| {
                if v >= m {
                    clamped += 1;
                    lip::xi(m - 1.0, m)
                } else {
                    lip::xi(v, m)
                }
            })
            .collect();
        (
            Plane {
                width: self.width,
                height: self.height,
                data,
            },
            clamped,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            LipImage::new(2, 2, 256.0, vec![0.0; 3]),
            Err(Error::BufferLength { .. })
        ));
        assert!(LipImage::new(1, 1, 256.0, vec![300.0]).is_err());
        assert!(LipImage::new(1, 1, 256.0, vec![f64::NAN]).is_err());
        assert!(LipImage::new(0, 1, 256.0, vec![]).is_err());
    }

    #[test]
    fn elementwise_ops_check_ceiling_and_shape() {
        let a = LipImage::filled(2, 2, 256.0, 64.0).unwrap();
        let b = LipImage::filled(2, 2, 256.0, 128.0).unwrap();
        assert_eq!(a.lip_add(&b).unwrap().as_slice(), &[160.0; 4]);
        assert_eq!(a.lip_add(&b).unwrap().lip_sub(&b).unwrap().as_slice(), &[64.0; 4]);
        let other = LipImage::filled(2, 2, 512.0, 1.0).unwrap();
        assert!(matches!(a.lip_add(&other), Err(Error::CeilingMismatch { .. })));
        let small = LipImage::filled(1, 2, 256.0, 1.0).unwrap();
        assert!(matches!(a.lip_sub(&small), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn xi_round_trip_on_images() {
        let img = LipImage::new(3, 1, 256.0, vec![0.0, 100.0, 255.0]).unwrap();
        let back = img.to_xi().to_lip(256.0).unwrap();
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn clamped_xi_replaces_ceiling_values() {
        let img = LipImage::new(2, 1, 256.0, vec![256.0, 3.0]).unwrap();
        let (plane, clamped) = img.to_xi_clamped();
        assert_eq!(clamped, 1);
        assert!(plane.get(0, 0).is_finite());
        assert_eq!(plane.get(0, 0), lip::xi(255.0, 256.0));
    }
}
