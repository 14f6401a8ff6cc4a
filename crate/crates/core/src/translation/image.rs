//! Padded images viewed through a movable crop window, so that translations
//! within the pad are lossless and exactly invertible.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row-major `rows × cols × channels` pixel tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixels {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Pixels {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 {
            return Err(Error::invalid("shape", "all dimensions must be positive"));
        }
        if data.len() != rows * cols * channels {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols * channels,
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::RangeViolation { index, value, lo: 0.0, hi: 1.0 });
        }
        Ok(Pixels { rows, cols, channels, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn at(&self, r: usize, c: usize, ch: usize) -> f64 {
        self.data[(r * self.cols + c) * self.channels + ch]
    }
}

/// Integer translation `v = (dy, dx)`; positive `dy` moves content down and
/// positive `dx` moves it right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shift {
    pub dy: i64,
    pub dx: i64,
}

impl Shift {
    pub const ZERO: Shift = Shift { dy: 0, dx: 0 };

    pub fn new(dy: i64, dx: i64) -> Self {
        Shift { dy, dx }
    }

    pub fn reversed(self) -> Shift {
        Shift::new(-self.dy, -self.dx)
    }

    pub fn max_norm(self) -> i64 {
        self.dy.abs().max(self.dx.abs())
    }

    pub fn norm2_squared(self) -> i64 {
        self.dy * self.dy + self.dx * self.dx
    }
}

/// An image: the crop at `offset` of a padded source. Translation moves the
/// window and never touches the shared pixels.
#[derive(Debug, Clone)]
pub struct SourceImage {
    pixels: Arc<Pixels>,
    pad: u32,
    offset: Shift,
    label: usize,
}

impl SourceImage {
    pub fn new(pixels: Pixels, pad: u32, label: usize) -> Result<Self> {
        let p = pad as usize;
        if pixels.rows <= 2 * p || pixels.cols <= 2 * p {
            return Err(Error::invalid("pad", "leaves an empty view"));
        }
        Ok(SourceImage {
            pixels: Arc::new(pixels),
            pad,
            offset: Shift::ZERO,
            label,
        })
    }

    pub fn pad(&self) -> u32 {
        self.pad
    }

    pub fn offset(&self) -> Shift {
        self.offset
    }

    /// The stored class; never changed by translation.
    pub fn label(&self) -> usize {
        self.label
    }

    pub fn view_rows(&self) -> usize {
        self.pixels.rows - 2 * self.pad as usize
    }

    pub fn view_cols(&self) -> usize {
        self.pixels.cols - 2 * self.pad as usize
    }

    pub fn channels(&self) -> usize {
        self.pixels.channels
    }

    pub fn view_len(&self) -> usize {
        self.view_rows() * self.view_cols() * self.channels()
    }

    /// Same source, shifted content.
    pub fn translate(&self, v: Shift) -> Result<SourceImage> {
        let offset = Shift::new(self.offset.dy - v.dy, self.offset.dx - v.dx);
        if offset.max_norm() > self.pad as i64 {
            return Err(Error::OutOfPad {
                x: offset.dx,
                y: offset.dy,
                pad: self.pad,
            });
        }
        Ok(SourceImage {
            offset,
            ..self.clone()
        })
    }

    /// Row-major view pixels.
    pub fn view(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.view_len());
        self.for_each_view_pixel(|v| out.push(v));
        out
    }

    fn for_each_view_pixel(&self, mut visit: impl FnMut(f64)) {
        let top = (self.pad as i64 + self.offset.dy) as usize;
        let left = (self.pad as i64 + self.offset.dx) as usize;
        for r in 0..self.view_rows() {
            for c in 0..self.view_cols() {
                for ch in 0..self.channels() {
                    visit(self.pixels.at(top + r, left + c, ch));
                }
            }
        }
    }

    /// Bit pattern of the view, for exact equality and hashing.
    pub fn view_key(&self) -> ViewKey {
        let mut bits = Vec::with_capacity(self.view_len() + 2);
        bits.push(self.view_rows() as u64);
        bits.push(self.view_cols() as u64);
        self.for_each_view_pixel(|v| bits.push(v.to_bits()));
        ViewKey(bits)
    }
}

/// Images are compared by their views, bit for bit.
impl PartialEq for SourceImage {
    fn eq(&self, other: &Self) -> bool {
        if self.view_rows() != other.view_rows()
            || self.view_cols() != other.view_cols()
            || self.channels() != other.channels()
        {
            return false;
        }
        if Arc::ptr_eq(&self.pixels, &other.pixels) && self.offset == other.offset {
            return true;
        }
        self.view_key() == other.view_key()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewKey(Vec<u64>);

impl ViewKey {
    /// View dimensions followed by the pixel bit patterns.
    pub fn bits(&self) -> &[u64] {
        &self.0
    }
}

/// `𝒱_ε`: nonzero shifts of max-norm at most `ε`, top to bottom then left to
/// right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationSet {
    epsilon: u32,
    vectors: Vec<Shift>,
}

impl TranslationSet {
    pub fn new(epsilon: u32) -> Result<Self> {
        if epsilon == 0 {
            return Err(Error::invalid("epsilon", "must be at least 1"));
        }
        let e = epsilon as i64;
        let vectors = (-e..=e)
            .flat_map(|dy| (-e..=e).map(move |dx| Shift::new(dy, dx)))
            .filter(|&v| v != Shift::ZERO)
            .collect();
        Ok(TranslationSet { epsilon, vectors })
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn vectors(&self) -> &[Shift] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Largest attack radius whose density weights stay computable: the
/// dependency chain of `g` reaches `3ε` from the image.
pub fn max_valid_epsilon(pad: u32) -> u32 {
    pad / 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(rows: usize, cols: usize, pad: u32) -> SourceImage {
        let n = rows * cols;
        let data = (0..n).map(|i| i as f64 / n as f64).collect();
        SourceImage::new(Pixels::new(rows, cols, 1, data).unwrap(), pad, 2).unwrap()
    }

    #[test]
    fn pixel_validation() {
        assert!(Pixels::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Pixels::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Pixels::new(0, 1, 1, vec![]).is_err());
        let p = Pixels::new(4, 4, 1, vec![0.0; 16]).unwrap();
        assert!(SourceImage::new(p, 2, 0).is_err());
    }

    #[test]
    fn translation_moves_content() {
        let img = ramp(5, 5, 1);
        assert_eq!(img.view_rows(), 3);
        let view = img.view();
        let moved = img.translate(Shift::new(0, 1)).unwrap();
        let mv = moved.view();
        // Content shifts right: new column c holds old column c - 1.
        for r in 0..3 {
            for c in 1..3 {
                assert_eq!(mv[r * 3 + c], view[r * 3 + c - 1]);
            }
        }
        assert_eq!(moved.label(), img.label());
    }

    #[test]
    fn translation_examples() {
        let img = ramp(9, 9, 3);
        assert_eq!(img.translate(Shift::ZERO).unwrap(), img);
        let a = img.translate(Shift::new(1, 2)).unwrap().translate(Shift::new(2, -1)).unwrap();
        assert_eq!(a, img.translate(Shift::new(3, 1)).unwrap());
        assert!(matches!(img.translate(Shift::new(4, 0)), Err(Error::OutOfPad { pad: 3, .. })));
    }

    #[test]
    fn translation_set_sizes_and_order() {
        for e in 1..=5u32 {
            let set = TranslationSet::new(e).unwrap();
            assert_eq!(set.len(), ((2 * e + 1).pow(2) - 1) as usize);
            assert!(set.vectors().windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(TranslationSet::new(1).unwrap().vectors()[0], Shift::new(-1, -1));
        assert_eq!(TranslationSet::new(5).unwrap().len(), 120);
        assert!(TranslationSet::new(0).is_err());
    }

    #[test]
    fn max_valid_epsilon_examples() {
        assert_eq!(max_valid_epsilon(16), 5);
        assert_eq!(max_valid_epsilon(2), 0);
        assert_eq!(max_valid_epsilon(9), 3);
    }

    #[test]
    fn equality_is_by_view() {
        // A constant image looks the same at every offset.
        let p = Pixels::new(5, 5, 1, vec![0.5; 25]).unwrap();
        let img = SourceImage::new(p, 1, 0).unwrap();
        assert_eq!(img.translate(Shift::new(1, 1)).unwrap(), img);
        let r = ramp(5, 5, 1);
        assert_ne!(r.translate(Shift::new(1, 0)).unwrap(), r);
        assert_eq!(r.translate(Shift::new(1, 0)).unwrap().view_key(), r.translate(Shift::new(1, 0)).unwrap().view_key());
    }

    proptest! {
        #[test]
        fn translation_round_trips(dy in -4i64..=4, dx in -4i64..=4, ey in -2i64..=2, ex in -2i64..=2) {
            let img = ramp(14, 14, 6).translate(Shift::new(ey, ex)).unwrap();
            let v = Shift::new(dy, dx);
            let there = img.translate(v).unwrap();
            let back = there.translate(v.reversed()).unwrap();
            prop_assert_eq!(back.view_key(), img.view_key());
            prop_assert_eq!(back.offset(), img.offset());
        }
    }
}
