//! Mandelbrot canonical cascade measures on `[0, 1]`: sampling, Fourier and
//! Hausdorff dimension theory, and Monte Carlo estimators.

pub mod cascade;
pub mod cli;
pub mod estimators;
pub mod io;
pub mod numeric;
pub mod regimes;
pub mod spectrum;
pub mod verify;
pub mod weights;
