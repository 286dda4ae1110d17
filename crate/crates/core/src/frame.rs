//! Grayscale frames and the sampling primitives shared by the stabilizer and
//! the face normalizer.

use thiserror::Error;

/// Smallest accepted frame edge in pixels.
pub const MIN_FRAME_EDGE: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame {width}x{height} is smaller than {MIN_FRAME_EDGE}x{MIN_FRAME_EDGE}")]
    TooSmall { width: usize, height: usize },
    #[error("frame data has {got} bytes, expected {expected}")]
    BadLength { expected: usize, got: usize },
}

/// Row-major 8-bit grayscale image with a capture timestamp in milliseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
    timestamp: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>, timestamp: u64) -> Result<Self, FrameError> {
        if width < MIN_FRAME_EDGE || height < MIN_FRAME_EDGE {
            return Err(FrameError::TooSmall { width, height });
        }
        if data.len() != width * height {
            return Err(FrameError::BadLength {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            timestamp,
        })
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel center.
    pub fn from_fn(
        width: usize,
        height: usize,
        timestamp: u64,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, FrameError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, timestamp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn with_timestamp(mut self, timestamp: u64) -> Self {
        self.timestamp = timestamp;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample with border replication.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let plane = PlaneRef {
            width: self.width,
            height: self.height,
            data: &self.data,
        };
        plane.sample(x, y)
    }
}

/// Borrowed view used by the bilinear sampler so the same code serves `u8`
/// frames and `f32` pyramid levels.
pub(crate) struct PlaneRef<'a, T> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [T],
}

impl<T: Copy + Into<f64>> PlaneRef<'_, T> {
    #[inline]
    fn px(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc].into()
    }

    /// Bilinear interpolation written as nested lerps, so sampling a constant
    /// neighbourhood returns that constant exactly.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let p00 = self.px(xi, yi);
        let p10 = self.px(xi + 1, yi);
        let p01 = self.px(xi, yi + 1);
        let p11 = self.px(xi + 1, yi + 1);
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        top + (bottom - top) * fy
    }
}

/// Rounds and saturates an intensity to the 8-bit range.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert_eq!(
            Frame::new(16, 40, vec![0; 640], 0),
            Err(FrameError::TooSmall { width: 16, height: 40 })
        );
        assert_eq!(
            Frame::new(32, 32, vec![0; 10], 0),
            Err(FrameError::BadLength { expected: 1024, got: 10 })
        );
    }

    #[test]
    fn bilinear_hits_pixels_and_midpoints() {
        let f = Frame::from_fn(32, 32, 0, |x, y| (x * 2 + y) as u8).unwrap();
        assert_eq!(f.sample(3.0, 4.0), 10.0);
        assert!((f.sample(3.5, 4.0) - 11.0).abs() < 1e-12);
        assert!((f.sample(3.5, 4.5) - 11.5).abs() < 1e-12);
        // replicated border
        assert_eq!(f.sample(-5.0, 0.0), 0.0);
        assert_eq!(f.sample(40.0, 31.0), (31 * 2 + 31) as f64);
    }

    #[test]
    fn constant_plane_is_exact() {
        let f = Frame::new(32, 32, vec![77; 1024], 0).unwrap();
        for &(x, y) in &[(0.3, 0.7), (10.123, 5.999), (30.5, 30.5)] {
            assert_eq!(f.sample(x, y), 77.0);
        }
    }
}
