//! Cartesian variable-density masks and per-epoch Λ/Υ subset splits.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{centered_range, AcsRegion, SamplingMask};

/// Parameters of a 1D Cartesian mask. Full vertical read-out lines are kept;
/// which columns (phase-encode lines) are sampled is random.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub height: usize,
    pub width: usize,
    /// Reduction factor R: one line in R is acquired.
    pub reduction: f64,
    /// Number of central lines always acquired, also the side of the ACS square.
    pub acs_size: usize,
    /// `c` in the line density `1 / (1 + c·|k| / k_max)`.
    pub density_decay: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(height: usize, width: usize, reduction: f64, seed: u64) -> Self {
        Self {
            height,
            width,
            reduction,
            acs_size: 20,
            density_decay: 1.0,
            seed,
        }
    }

    pub fn with_acs(mut self, acs_size: usize) -> Self {
        self.acs_size = acs_size;
        self
    }

    pub fn with_density_decay(mut self, decay: f64) -> Self {
        self.density_decay = decay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Config("mask dimensions must be positive".into()));
        }
        if !(self.reduction >= 1.0) || !self.reduction.is_finite() {
            return Err(Error::Config(format!(
                "reduction factor must be a finite value >= 1, got {}",
                self.reduction
            )));
        }
        if self.acs_size > self.height.min(self.width) {
            return Err(Error::Config(format!(
                "ACS size {} exceeds mask side {}",
                self.acs_size,
                self.height.min(self.width)
            )));
        }
        if !(self.density_decay >= 0.0) || !self.density_decay.is_finite() {
            return Err(Error::Config(format!(
                "density decay must be finite and non-negative, got {}",
                self.density_decay
            )));
        }
        Ok(())
    }

    /// Number of phase-encode lines acquired: `round(width / R)`.
    pub fn line_count(&self) -> usize {
        (self.width as f64 / self.reduction).round() as usize
    }
}

/// Which columns are acquired, in addition to the forced central band.
pub fn select_lines(spec: &MaskSpec) -> Result<Vec<bool>> {
    spec.validate()?;
    let w = spec.width;
    let target = spec.line_count();
    if target < spec.acs_size {
        return Err(Error::Config(format!(
            "R = {} leaves {target} lines, fewer than the {} ACS lines",
            spec.reduction, spec.acs_size
        )));
    }
    let mut lines = vec![false; w];
    for c in centered_range(w, spec.acs_size) {
        lines[c] = true;
    }

    let k_max = (w / 2).max(1) as f64;
    let mut candidates: Vec<usize> = (0..w).filter(|&c| !lines[c]).collect();
    let mut weights: Vec<f64> = candidates
        .iter()
        .map(|&c| {
            let k = (c as f64 - (w / 2) as f64).abs();
            1.0 / (1.0 + spec.density_decay * k / k_max)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut remaining = target - spec.acs_size;
    while remaining > 0 && !candidates.is_empty() {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = candidates.len() - 1;
        for (i, &wt) in weights.iter().enumerate() {
            if u < wt {
                pick = i;
                break;
            }
            u -= wt;
        }
        lines[candidates.swap_remove(pick)] = true;
        weights.swap_remove(pick);
        remaining -= 1;
    }
    Ok(lines)
}

/// Generate a 1D Cartesian undersampling mask. Deterministic in `spec.seed`.
pub fn generate_cartesian_mask(spec: &MaskSpec) -> Result<SamplingMask> {
    let lines = select_lines(spec)?;
    let mut sampled = Vec::with_capacity(spec.height * spec.width);
    for _ in 0..spec.height {
        sampled.extend_from_slice(&lines);
    }
    SamplingMask::new(
        spec.height,
        spec.width,
        sampled,
        AcsRegion::square(spec.acs_size),
    )
}

/// How the non-ACS samples of Ω are divided between Λ and Υ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// Individual k-space points are assigned independently of their line.
    #[default]
    Pointwise,
    /// Whole phase-encode columns are assigned together.
    Linewise,
}

/// A training split of Ω: the network sees Λ and is scored on Υ.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPair {
    pub lambda: SamplingMask,
    pub upsilon: SamplingMask,
}

/// Split Ω into Λ and Υ. The central `acs_size` square goes to both; of the
/// remaining sampled points a uniformly random `round(fraction · n)` join Λ
/// and the rest join Υ.
pub fn split_subsets(
    omega: &SamplingMask,
    fraction: f64,
    acs_size: usize,
    seed: u64,
) -> Result<SubsetPair> {
    split_subsets_with_mode(omega, fraction, acs_size, seed, SplitMode::Pointwise)
}

pub fn split_subsets_with_mode(
    omega: &SamplingMask,
    fraction: f64,
    acs_size: usize,
    seed: u64,
    mode: SplitMode,
) -> Result<SubsetPair> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let acs = AcsRegion::square(acs_size);
    if !omega.covers_acs(acs) {
        return Err(Error::Precondition(format!(
            "sampling mask does not contain the central {acs_size}x{acs_size} ACS square"
        )));
    }
    let (h, w) = omega.shape();
    let (acs_rows, acs_cols) = acs.ranges(h, w);
    let in_acs = |i: usize| acs_rows.contains(&(i / w)) && acs_cols.contains(&(i % w));

    let mut lambda = vec![false; h * w];
    let mut upsilon = vec![false; h * w];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    match mode {
        SplitMode::Pointwise => {
            let free: Vec<usize> = omega.indices().filter(|&i| !in_acs(i)).collect();
            let take = (fraction * free.len() as f64).round() as usize;
            let chosen = index::sample(&mut rng, free.len(), take);
            for j in chosen {
                lambda[free[j]] = true;
            }
            for &i in &free {
                if !lambda[i] {
                    upsilon[i] = true;
                }
            }
        }
        SplitMode::Linewise => {
            let columns: Vec<usize> = (0..w)
                .filter(|&c| (0..h).any(|r| omega.is_sampled(r, c) && !in_acs(r * w + c)))
                .collect();
            let take = (fraction * columns.len() as f64).round() as usize;
            let mut to_lambda = vec![false; w];
            for j in index::sample(&mut rng, columns.len(), take) {
                to_lambda[columns[j]] = true;
            }
            for i in omega.indices().filter(|&i| !in_acs(i)) {
                if to_lambda[i % w] {
                    lambda[i] = true;
                } else {
                    upsilon[i] = true;
                }
            }
        }
    }
    for r in acs_rows {
        for c in acs_cols.clone() {
            lambda[r * w + c] = true;
            upsilon[r * w + c] = true;
        }
    }
    Ok(SubsetPair {
        lambda: SamplingMask::new(h, w, lambda, acs)?,
        upsilon: SamplingMask::new(h, w, upsilon, acs)?,
    })
}
