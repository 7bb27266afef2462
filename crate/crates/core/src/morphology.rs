//! Probability map to clean binary mask.
//!
//! The chain is: bilinear upsample to native size, inclusive threshold,
//! opening with a 5x5 cross, 13x13 median. Erosion and dilation treat pixels
//! outside the grid as background; the median replicates edge pixels.

use thiserror::Error;

use crate::grid::{BinaryMask, Grid, ProbGrid};

/// Default probability cut for foreground.
pub const DEFAULT_MASK_THRESHOLD: f64 = 0.6;
/// Arm length of the 5x5 cross structuring element.
const CROSS_RADIUS: usize = 2;
/// Half-width of the 13x13 median window.
const MEDIAN_RADIUS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphError {
    #[error("target size must be non-zero, got {0}x{1}")]
    BadSize(usize, usize),
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
}

pub fn upsample_mask(prob: &ProbGrid, target: (usize, usize)) -> Result<ProbGrid, MorphError> {
    let (h, w) = target;
    if h == 0 || w == 0 || prob.is_empty() {
        return Err(MorphError::BadSize(h, w));
    }
    Ok(prob.resize_bilinear(h, w))
}

/// `out = prob >= p`.
pub fn threshold(prob: &ProbGrid, p: f64) -> Result<BinaryMask, MorphError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MorphError::BadThreshold(p));
    }
    Ok(prob.map(|&v| v >= p))
}

/// Erosion then dilation with the 5x5 cross (centre row and column).
pub fn open_cross5(mask: &BinaryMask) -> BinaryMask {
    dilate_cross(&erode_cross(mask, CROSS_RADIUS), CROSS_RADIUS)
}

/// The cross is the union of a horizontal and a vertical segment, so erosion
/// is the AND of two 1-D erosions and dilation the OR of two 1-D dilations.
pub fn erode_cross(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.size();
    let rows = run_lengths_rows(mask);
    let cols = run_lengths_cols(mask);
    Grid::from_fn(h, w, |r, c| {
        let (left, right) = rows[r * w + c];
        let (up, down) = cols[r * w + c];
        *mask.get(r, c)
            && left as usize >= radius
            && right as usize >= radius
            && up as usize >= radius
            && down as usize >= radius
    })
}

pub fn dilate_cross(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.size();
    // Distance to the nearest set pixel along the row / column.
    let mut out = Grid::filled(h, w, false);
    for r in 0..h {
        let row = mask.row(r);
        let near = nearest_set_1d(row.len(), |i| row[i]);
        for c in 0..w {
            if near[c] <= radius {
                out.set(r, c, true);
            }
        }
    }
    for c in 0..w {
        let near = nearest_set_1d(h, |i| *mask.get(i, c));
        for r in 0..h {
            if near[r] <= radius {
                out.set(r, c, true);
            }
        }
    }
    out
}

/// For each position, the distance to the closest index where `set` holds
/// (`usize::MAX` when there is none).
fn nearest_set_1d(n: usize, set: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut d = vec![usize::MAX; n];
    let mut last = None;
    for i in 0..n {
        if set(i) {
            last = Some(i);
        }
        if let Some(j) = last {
            d[i] = i - j;
        }
    }
    last = None;
    for i in (0..n).rev() {
        if set(i) {
            last = Some(i);
        }
        if let Some(j) = last {
            d[i] = d[i].min(j - i);
        }
    }
    d
}

/// Per pixel: number of consecutive set pixels strictly to the left / right.
fn run_lengths_rows(mask: &BinaryMask) -> Vec<(u32, u32)> {
    let (h, w) = mask.size();
    let mut out = vec![(0u32, 0u32); h * w];
    for r in 0..h {
        let row = mask.row(r);
        let mut run = 0u32;
        for c in 0..w {
            out[r * w + c].0 = run;
            run = if row[c] { run + 1 } else { 0 };
        }
        run = 0;
        for c in (0..w).rev() {
            out[r * w + c].1 = run;
            run = if row[c] { run + 1 } else { 0 };
        }
    }
    out
}

/// Per pixel: number of consecutive set pixels strictly above / below.
fn run_lengths_cols(mask: &BinaryMask) -> Vec<(u32, u32)> {
    let (h, w) = mask.size();
    let mut out = vec![(0u32, 0u32); h * w];
    for c in 0..w {
        let mut run = 0u32;
        for r in 0..h {
            out[r * w + c].0 = run;
            run = if *mask.get(r, c) { run + 1 } else { 0 };
        }
        run = 0;
        for r in (0..h).rev() {
            out[r * w + c].1 = run;
            run = if *mask.get(r, c) { run + 1 } else { 0 };
        }
    }
    out
}

/// 13x13 median with edge replication.
pub fn median_smooth13(mask: &BinaryMask) -> BinaryMask {
    median_binary(mask, MEDIAN_RADIUS)
}

/// Square-window binary median of side `2 * radius + 1` with edge
/// replication. On binary data the median is a majority vote, evaluated here
/// with a summed-area table over the replicated image.
pub fn median_binary(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.size();
    if h == 0 || w == 0 {
        return mask.clone();
    }
    let side = 2 * radius + 1;
    let majority = (side * side) as u32 / 2 + 1;
    let ph = h + 2 * radius;
    let pw = w + 2 * radius;
    // integral[(r, c)] = ones in padded[0..r, 0..c]
    let stride = pw + 1;
    let mut integral = vec![0u32; (ph + 1) * stride];
    for pr in 0..ph {
        let sr = pr.saturating_sub(radius).min(h - 1);
        let src = mask.row(sr);
        let mut acc = 0u32;
        for pc in 0..pw {
            let sc = pc.saturating_sub(radius).min(w - 1);
            acc += u32::from(src[sc]);
            integral[(pr + 1) * stride + pc + 1] = integral[pr * stride + pc + 1] + acc;
        }
    }
    Grid::from_fn(h, w, |r, c| {
        // Window in padded coordinates: rows r..r+side, cols c..c+side.
        let (r0, c0, r1, c1) = (r, c, r + side, c + side);
        let ones = integral[r1 * stride + c1] + integral[r0 * stride + c0]
            - integral[r0 * stride + c1]
            - integral[r1 * stride + c0];
        ones >= majority
    })
}

/// Thresholded and cleaned masks at native resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Postprocessed {
    /// Thresholded upsampled mask before morphology.
    pub raw: BinaryMask,
    /// After opening and median smoothing.
    pub clean: BinaryMask,
}

/// Upsample, threshold, open, median.
pub fn postprocess(prob: &ProbGrid, native: (usize, usize), mask_threshold: f64) -> Result<Postprocessed, MorphError> {
    let up = upsample_mask(prob, native)?;
    let raw = threshold(&up, mask_threshold)?;
    let clean = median_smooth13(&open_cross5(&raw));
    Ok(Postprocessed { raw, clean })
}
