//! Binary rasters.

use crate::error::{Error, Result};

/// Integer pixel coordinate, column `x` and row `y`, origin top-left.
pub type Pixel = (u32, u32);

/// Row-major boolean raster. White dots are `true`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    /// All-zero image.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        assert!(width >= 1 && height >= 1, "image must be at least 1x1");
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image must be at least 1x1".into()));
        }
        if bits.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} bits for {width}x{height}, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but out-of-bounds coordinates read as 0.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub(crate) fn set_index(&mut self, index: usize) {
        self.bits[index] = true;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// White pixels in row-major order.
    pub fn white_pixels(&self) -> Vec<Pixel> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ((i % self.width) as u32, (i / self.width) as u32))
            .collect()
    }

    /// Pixelwise OR in place.
    pub fn or_assign(&mut self, other: &BinaryImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_pixels_are_row_major() {
        let mut img = BinaryImage::new(3, 2);
        img.set(2, 0, true);
        img.set(0, 1, true);
        assert_eq!(img.white_pixels(), vec![(2, 0), (0, 1)]);
        assert_eq!(img.count_ones(), 2);
    }

    #[test]
    fn from_bits_checks_length() {
        assert!(BinaryImage::from_bits(2, 2, vec![false; 3]).is_err());
        assert!(BinaryImage::from_bits(0, 2, vec![]).is_err());
    }

    #[test]
    fn signed_access_outside_is_zero() {
        let img = BinaryImage::filled(2, 2, true);
        assert!(img.get_signed(1, 1));
        assert!(!img.get_signed(-1, 0));
        assert!(!img.get_signed(0, 2));
    }
}
