//! Dense 2D complex grids and sampling masks.
//!
//! Images and k-space share one storage type, [`Grid`], tagged with a domain
//! marker so that an image cannot be handed to an operator expecting k-space
//! (or vice versa) without an explicit transform.

use std::fmt;
use std::marker::PhantomData;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Image-domain marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageDomain {}

/// Fourier-domain marker. Storage is DC-centered: the zero frequency lives at
/// `(height / 2, width / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSpaceDomain {}

/// Row-major dense complex grid.
pub struct Grid<D> {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
    _domain: PhantomData<D>,
}

pub type ComplexImage = Grid<ImageDomain>;
pub type KSpaceGrid = Grid<KSpaceDomain>;

impl<D> Clone for Grid<D> {
    fn clone(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.clone(),
            _domain: PhantomData,
        }
    }
}

impl<D> PartialEq for Grid<D> {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.data == other.data
    }
}

impl<D> fmt::Debug for Grid<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("norm", &self.norm())
            .finish()
    }
}

impl<D> Grid<D> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, Complex64::new(0.0, 0.0))
    }

    pub fn filled(height: usize, width: usize, value: Complex64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
            _domain: PhantomData,
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "{}x{} grid needs {} samples, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
            _domain: PhantomData,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
            _domain: PhantomData,
        }
    }

    /// Real-valued grid from a slice of magnitudes/intensities.
    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(
            height,
            width,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.width + col] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{what} contains non-finite values")))
        }
    }

    pub fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() == shape {
            Ok(())
        } else {
            Err(Error::dims(shape, self.shape()))
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `⟨self, other⟩ = Σ conj(self_i) · other_i`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&z| f(z)).collect(),
            _domain: PhantomData,
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        Self {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            _domain: PhantomData,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.im).collect()
    }

    /// Reassemble from separate real and imaginary channels.
    pub fn from_parts(height: usize, width: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::InvalidInput("channel lengths differ".into()));
        }
        Self::from_vec(
            height,
            width,
            re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
        )
    }
}

/// Center-anchored rectangle of fully sampled k-space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AcsRegion {
    pub height: usize,
    pub width: usize,
}

impl AcsRegion {
    pub fn square(side: usize) -> Self {
        Self {
            height: side,
            width: side,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.height == 0 || self.width == 0
    }

    /// Row and column ranges of the region inside a `grid_h × grid_w` grid.
    pub fn ranges(
        &self,
        grid_h: usize,
        grid_w: usize,
    ) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        (
            centered_range(grid_h, self.height),
            centered_range(grid_w, self.width),
        )
    }

    pub fn contains(&self, grid_h: usize, grid_w: usize, row: usize, col: usize) -> bool {
        let (rows, cols) = self.ranges(grid_h, grid_w);
        rows.contains(&row) && cols.contains(&col)
    }
}

/// `len` consecutive indices centred on `n / 2`.
pub(crate) fn centered_range(n: usize, len: usize) -> std::ops::Range<usize> {
    let start = (n / 2).saturating_sub(len / 2);
    start..(start + len).min(n)
}

/// Boolean sampling pattern Ω in centered k-space coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    sampled: Vec<bool>,
    count: usize,
    acs: AcsRegion,
}

impl SamplingMask {
    pub fn new(height: usize, width: usize, sampled: Vec<bool>, acs: AcsRegion) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "mask dimensions must be positive, got {height}x{width}"
            )));
        }
        if sampled.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "{height}x{width} mask needs {} entries, got {}",
                height * width,
                sampled.len()
            )));
        }
        if acs.height > height || acs.width > width {
            return Err(Error::InvalidInput(format!(
                "ACS region {}x{} exceeds mask {height}x{width}",
                acs.height, acs.width
            )));
        }
        let mask = Self {
            height,
            width,
            count: sampled.iter().filter(|&&s| s).count(),
            sampled,
            acs,
        };
        if !mask.covers_acs(acs) {
            return Err(Error::InvalidInput(
                "mask does not sample every point of its ACS region".into(),
            ));
        }
        Ok(mask)
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            sampled: vec![true; height * width],
            count: height * width,
            acs: AcsRegion { height, width },
        }
    }

    /// Mask with nothing sampled and no ACS region. Only useful in tests.
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            sampled: vec![false; height * width],
            count: 0,
            acs: AcsRegion::default(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of sampled points, `m`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn acs(&self) -> AcsRegion {
        self.acs
    }

    pub fn sampled(&self) -> &[bool] {
        &self.sampled
    }

    pub fn is_sampled(&self, row: usize, col: usize) -> bool {
        self.sampled[row * self.width + col]
    }

    pub fn sampled_fraction(&self) -> f64 {
        self.count as f64 / (self.height * self.width) as f64
    }

    /// True when every point of `region` (centred) is sampled.
    pub fn covers_acs(&self, region: AcsRegion) -> bool {
        let (rows, cols) = region.ranges(self.height, self.width);
        if rows.len() != region.height || cols.len() != region.width {
            return false;
        }
        rows.into_iter()
            .all(|r| cols.clone().all(|c| self.sampled[r * self.width + c]))
    }

    pub fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() == shape {
            Ok(())
        } else {
            Err(Error::dims(shape, self.shape()))
        }
    }

    /// Sampled indices in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.sampled
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        other.ensure_shape(self.shape())?;
        let sampled = self
            .sampled
            .iter()
            .zip(&other.sampled)
            .map(|(&a, &b)| a || b)
            .collect();
        let acs = if self.acs.height * self.acs.width >= other.acs.height * other.acs.width {
            self.acs
        } else {
            other.acs
        };
        Self::new(self.height, self.width, sampled, acs)
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        self.sampled
            .iter()
            .zip(&other.sampled)
            .filter(|(&a, &b)| a && b)
            .count()
    }
}
