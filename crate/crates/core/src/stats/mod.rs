//! Invariant-measure sampling, cell statistics, correlation estimation and
//! rate fitting.

pub mod sampling;

pub use sampling::{
    induced_sample, phi_from_uniform, sample_batch, sample_full_phase, sample_reduced,
    DiscardCounters, InducedSample, SampleBatch, SamplingError,
};
pub mod fit;

pub use fit::{
    fit_exponential_rate, fit_power_law, hill_from_counts, ExponentialFit, FitError, HillEstimate,
    PowerLawFit,
};
pub mod moments;

pub use moments::{batch_means, CrossMoments, RunningStats};
pub mod correlation;

pub use correlation::{
    correlation_from_series, estimate_correlation, estimate_correlation_orbit, orbit_series,
    CorrelationEstimate, CorrelationMethod, LagEstimate, OrbitSeries,
};
pub mod birkhoff;

pub use birkhoff::{
    birkhoff_full, birkhoff_induced, direct_full, direct_induced, BirkhoffReport, MeanEstimate,
};
pub mod cells;

pub use cells::{
    cell_stats_from_histogram, cloud_extent, dominant_diameters, estimate_cell_diameters, estimate_cell_measures,
    CellClouds, CellDiameter, CellRecord, CellStats, CloudExtent, CloudOptions, DiameterError,
    LevelEstimate,
};
