//! Synthetic piecewise-constant test images.

use crate::image::Image;

/// Three flat regions separated by two oblique edges, with values in
/// `(0, 1]`. The slopes are not multiples of 45 degrees, so neither
/// difference axis is aligned with an edge.
pub fn oblique_edge(rows: usize, cols: usize) -> Image {
    let sx = 64.0 / cols as f64;
    let sy = 64.0 / rows as f64;
    Image::from_fn(rows, cols, |i, j| {
        let (x, y) = (j as f64 * sx, i as f64 * sy);
        if y > 0.6 * x + 12.0 {
            0.25
        } else if x + 0.5 * y > 60.0 {
            0.6
        } else {
            1.0
        }
    })
}

/// A disc and a tilted bar on a ramp-free background, values in `(0, 1]`.
pub fn disc_and_bar(rows: usize, cols: usize) -> Image {
    let (cy, cx) = (rows as f64 * 0.4, cols as f64 * 0.35);
    let radius = rows.min(cols) as f64 * 0.22;
    Image::from_fn(rows, cols, |i, j| {
        let (y, x) = (i as f64, j as f64);
        let in_disc = (y - cy).powi(2) + (x - cx).powi(2) < radius * radius;
        // bar along the direction (cos 30deg, sin 30deg) through the lower right
        let (px, py) = (x - cols as f64 * 0.65, y - rows as f64 * 0.7);
        let along = px * 0.866 + py * 0.5;
        let across = -px * 0.5 + py * 0.866;
        let in_bar = along.abs() < cols as f64 * 0.3 && across.abs() < rows as f64 * 0.06;
        if in_bar {
            1.0
        } else if in_disc {
            0.7
        } else {
            0.2
        }
    })
}
