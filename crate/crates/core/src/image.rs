use alloc::vec;
use alloc::vec::Vec;

/// One 8-bit sRGB pixel.
pub type Rgb = [u8; 3];

/// Owned row-major RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    /// Wraps a pixel buffer; returns `None` when the length does not match.
    pub fn from_pixels(width: usize, height: usize, data: Vec<Rgb>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from packed `RGBRGB...` bytes.
    pub fn from_raw(width: usize, height: usize, raw: &[u8]) -> Option<Self> {
        if raw.len() != width * height * 3 {
            return None;
        }
        let data = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    /// Pixel at signed coordinates, `None` when out of bounds.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> Option<Rgb> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.data[y as usize * self.width + x as usize])
        }
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, px: Rgb) {
        self.data[y * self.width + x] = px;
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn to_raw(&self) -> Vec<u8> {
        self.data.iter().flat_map(|p| p.iter().copied()).collect()
    }
}
