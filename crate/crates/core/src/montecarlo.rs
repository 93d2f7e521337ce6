//! Trajectory sampling and statistical mixing estimation.
