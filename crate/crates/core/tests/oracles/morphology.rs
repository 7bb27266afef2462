//! Direct double-loop morphology and random mask generation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sonobiometry::{BinaryMask, Grid};

pub const SIDE: usize = 64;

pub fn cross_offsets(radius: isize) -> Vec<(isize, isize)> {
    let mut v = Vec::new();
    for d in -radius..=radius {
        v.push((d, 0));
        if d != 0 {
            v.push((0, d));
        }
    }
    v
}

pub fn naive_erode(m: &BinaryMask) -> BinaryMask {
    let (h, w) = m.size();
    let mut out = Grid::filled(h, w, false);
    for r in 0..h {
        for c in 0..w {
            let mut all = true;
            for (dr, dc) in cross_offsets(2) {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                let inside = rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w;
                if !inside || !*m.get(rr as usize, cc as usize) {
                    all = false;
                }
            }
            out.set(r, c, all);
        }
    }
    out
}

pub fn naive_dilate(m: &BinaryMask) -> BinaryMask {
    let (h, w) = m.size();
    let mut out = Grid::filled(h, w, false);
    for r in 0..h {
        for c in 0..w {
            let mut any = false;
            for (dr, dc) in cross_offsets(2) {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w && *m.get(rr as usize, cc as usize) {
                    any = true;
                }
            }
            out.set(r, c, any);
        }
    }
    out
}

pub fn naive_median13(m: &BinaryMask) -> BinaryMask {
    let (h, w) = m.size();
    let mut out = Grid::filled(h, w, false);
    for r in 0..h {
        for c in 0..w {
            let mut window = Vec::with_capacity(169);
            for dr in -6isize..=6 {
                for dc in -6isize..=6 {
                    let rr = (r as isize + dr).clamp(0, h as isize - 1) as usize;
                    let cc = (c as isize + dc).clamp(0, w as isize - 1) as usize;
                    window.push(u8::from(*m.get(rr, cc)));
                }
            }
            window.sort_unstable();
            out.set(r, c, window[84] == 1);
        }
    }
    out
}

/// Half the masks are i.i.d. noise at a random density, half are unions of
/// rectangles and discs with salt-and-pepper flips.
pub fn random_mask(rng: &mut ChaCha8Rng, i: usize) -> BinaryMask {
    if i % 2 == 0 {
        let p: f64 = rng.random_range(0.2..0.95);
        return Grid::from_fn(SIDE, SIDE, |_, _| rng.random_bool(p));
    }
    let mut m = Grid::filled(SIDE, SIDE, false);
    for _ in 0..rng.random_range(1..6) {
        let (r0, c0) = (rng.random_range(0..SIDE), rng.random_range(0..SIDE));
        let size = rng.random_range(2..30);
        let disc = rng.random_bool(0.5);
        for r in 0..SIDE {
            for c in 0..SIDE {
                let (dr, dc) = (r as f64 - r0 as f64, c as f64 - c0 as f64);
                let hit = if disc {
                    dr * dr + dc * dc <= (size * size) as f64 / 4.0
                } else {
                    r >= r0 && c >= c0 && r < r0 + size && c < c0 + size / 2 + 1
                };
                if hit {
                    m.set(r, c, true);
                }
            }
        }
    }
    let flip: f64 = rng.random_range(0.0..0.1);
    m.map(|&v| if rng.random_bool(flip) { !v } else { v })
}
