//! Dense row-major 2D grids used for frames, probability maps and masks.

use serde::{Deserialize, Serialize};

/// Row-major 2D grid. Index `(row, col)`; `row` grows downward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

/// Grayscale frame or probability map with values in `[0, 1]`.
pub type ProbGrid = Grid<f64>;

/// Binary segmentation mask.
pub type BinaryMask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    /// Wraps `data` (row-major). Returns `None` when the length does not match.
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == height * width).then_some(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    #[inline]
    pub fn size(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Grid<bool> {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn complement(&self) -> Self {
        self.map(|&v| !v)
    }
}

impl Grid<f64> {
    /// Bilinear resampling with half-pixel-centred coordinates
    /// (align-corners = false). Source coordinates falling outside the grid
    /// are clamped to the edge samples, so output values stay within the
    /// input range. Equal sizes reproduce the input exactly.
    ///
    /// Panics if either the source or the target is empty.
    pub fn resize_bilinear(&self, height: usize, width: usize) -> Grid<f64> {
        assert!(!self.is_empty() && height > 0 && width > 0);
        if (height, width) == self.size() {
            return self.clone();
        }
        let xs = axis_samples(self.width, width);
        let ys = axis_samples(self.height, height);
        let mut data = Vec::with_capacity(height * width);
        for &(r0, r1, fy) in &ys {
            let top = self.row(r0);
            let bottom = self.row(r1);
            for &(c0, c1, fx) in &xs {
                let t = lerp(top[c0], top[c1], fx);
                let b = lerp(bottom[c0], bottom[c1], fx);
                data.push(lerp(t, b, fy));
            }
        }
        Grid { height, width, data }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.data.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

// Clamped so rounding never leaves [min(a, b), max(a, b)].
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (a + (b - a) * t).clamp(a.min(b), a.max(b))
}

/// For each output index: the two source indices and the blend weight.
fn axis_samples(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = x.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}
