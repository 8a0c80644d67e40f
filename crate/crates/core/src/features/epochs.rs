use serde::{Deserialize, Serialize};

/// Overlapping analysis windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochGrid {
    /// Seconds.
    pub epoch_length: f64,
    /// In `[0, 1)`.
    pub overlap_fraction: f64,
}

impl EpochGrid {
    pub const OVERLAP: f64 = 0.75;

    pub fn new(epoch_length: f64) -> Self {
        EpochGrid {
            epoch_length,
            overlap_fraction: Self::OVERLAP,
        }
    }

    pub fn length_samples(&self, fs: f64) -> usize {
        (self.epoch_length * fs).round() as usize
    }

    pub fn step_samples(&self, fs: f64) -> usize {
        ((self.epoch_length * (1.0 - self.overlap_fraction)) * fs).round().max(1.0) as usize
    }

    /// Start and end (exclusive) sample indices; windows running past the end are dropped.
    pub fn slices(&self, n_samples: usize, fs: f64) -> Vec<(usize, usize)> {
        epoch_slices(n_samples, self.length_samples(fs), self.step_samples(fs))
    }

    /// Epoch centre times in seconds.
    pub fn centers(&self, n_samples: usize, fs: f64) -> Vec<f64> {
        self.slices(n_samples, fs)
            .into_iter()
            .map(|(s, e)| (s + e) as f64 / 2.0 / fs)
            .collect()
    }
}

pub fn epoch_slices(n_samples: usize, length: usize, step: usize) -> Vec<(usize, usize)> {
    if length < 2 || n_samples < length {
        return Vec::new();
    }
    (0..=(n_samples - length) / step)
        .map(|j| (j * step, j * step + length))
        .collect()
}
