//! Modified Shepp-Logan head phantom.

use crate::error::{Error, Result};
use crate::grid::ComplexImage;

/// `(intensity, semi-axis x, semi-axis y, centre x, centre y, rotation in degrees)`
pub const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Phantom value at normalised coordinates, `x` to the right and `y` up,
/// both spanning `[-1, 1]`.
pub fn phantom_value(x: f64, y: f64) -> f64 {
    ELLIPSES
        .iter()
        .filter(|&&(_, a, b, x0, y0, phi)| {
            let (s, c) = phi.to_radians().sin_cos();
            let (dx, dy) = (x - x0, y - y0);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / a).powi(2) + (v / b).powi(2) <= 1.0
        })
        .map(|e| e.0)
        .sum()
}

/// Real-valued phantom on an `h × w` grid with values in `[0, 1]`. Pixel
/// `(h/2, w/2)` sits at the origin; row 0 is the top of the head.
pub fn shepp_logan(height: usize, width: usize) -> Result<ComplexImage> {
    if height < 32 || width < 32 || height % 2 != 0 || width % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "phantom needs even dimensions of at least 32, got {height}x{width}"
        )));
    }
    let (hh, hw) = ((height / 2) as f64, (width / 2) as f64);
    let values: Vec<f64> = (0..height * width)
            .map(|i| {
                let (r, c) = (i / width, i % width);
                let x = (c as f64 - hw) / hw;
                let y = (hh - r as f64) / hh;
                phantom_value(x, y).clamp(0.0, 1.0)
            })
            .collect();
    ComplexImage::from_real(height, width, &values)
}
