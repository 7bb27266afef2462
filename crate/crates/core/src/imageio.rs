//! 8-bit grayscale PNG reading and writing.

use std::path::Path;

use image::{DynamicImage, GrayImage};

use crate::grid::Grid;

/// Reads an 8-bit single-channel PNG. Any other pixel format is rejected.
pub fn read_gray8(path: &Path) -> Result<Grid<u8>, String> {
    let img = image::open(path).map_err(|e| e.to_string())?;
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            Ok(Grid::from_vec(h as usize, w as usize, g.into_raw()).expect("dimensions match buffer"))
        }
        other => Err(format!("expected 8-bit grayscale, found {:?}", other.color())),
    }
}

pub fn write_gray8(path: &Path, grid: &Grid<u8>) -> Result<(), String> {
    let (h, w) = grid.size();
    let img = GrayImage::from_raw(w as u32, h as u32, grid.as_slice().to_vec())
        .ok_or_else(|| "buffer size mismatch".to_string())?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| e.to_string())
}
