//! Biased adjacent-transposition Markov chains on permutations and particle
//! arrangements: exact kernels, stationary distributions, mixing times,
//! canonical-path and comparison congestion, and seeded Monte Carlo sampling.
//!
//! The chain families covered are the simple and constant-bias shuffles, the
//! gladiator chain (items swap with probability proportional to strength),
//! linear particle systems over typed indistinguishable particles, the
//! jump/hop chain on three-type words, league-hierarchy chains driven by a
//! strength-labeled tree, and the move-ahead-one self-organizing-list chain.
//!
//! Everything that feeds a correctness claim runs in exact rational
//! arithmetic (`num::BigRational`); float kernels exist for large-space
//! mixing computations and trajectory sampling.

pub mod chains;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod flows;
pub mod measures;
pub mod montecarlo;

pub use error::{Error, Result};

/// Exact scalar used everywhere correctness matters.
pub type Rat = num::BigRational;

use num::BigInt;

/// Shorthand for a rational from an integer pair.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Natural log of a positive rational, stable for values far outside f64 range.
pub fn ln_rat(x: &Rat) -> f64 {
    ln_big(x.numer()) - ln_big(x.denom())
}

fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return num::ToPrimitive::to_f64(x).expect("small BigInt fits f64").ln();
    }
    // Take the top 52 bits as a mantissa and add back the shifted-out scale.
    let shift = bits - 52;
    let top: BigInt = x >> shift;
    let mantissa = num::ToPrimitive::to_f64(&top).expect("52-bit value fits f64");
    mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
}
