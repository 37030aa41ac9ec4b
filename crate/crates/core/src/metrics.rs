//! Ones-probability statistics and the coding/energy figures of merit.

use bitvec::prelude::*;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_segment, SegmentConfig};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("bit sequence is empty")]
    EmptyInput,
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("segment width {0} exceeds the enumeration bound of 16")]
    EnumerationBound(u32),
}

/// Largest segment width [`expected_ones_uniform`] will enumerate.
pub const ENUMERATION_BOUND: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitStats {
    pub total_bits: u64,
    pub ones: u64,
    pub p1: f64,
}

impl BitStats {
    pub fn from_counts(ones: u64, total_bits: u64) -> Result<Self, MetricsError> {
        if total_bits == 0 {
            return Err(MetricsError::EmptyInput);
        }
        assert!(ones <= total_bits, "ones exceed total bits");
        Ok(Self {
            total_bits,
            ones,
            p1: ones as f64 / total_bits as f64,
        })
    }
}

pub fn ones_probability(bits: &BitSlice<u8, Msb0>) -> Result<BitStats, MetricsError> {
    BitStats::from_counts(bits.count_ones() as u64, bits.len() as u64)
}

/// Redundancy and energy inputs to the gain formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainInputs {
    pub overhead: f64,
    pub eff: f64,
    pub pe: f64,
}

impl GainInputs {
    pub fn new(overhead: f64, pe: f64) -> Result<Self, MetricsError> {
        check_overhead(overhead)?;
        if !(pe > -1.0 && pe < 1.0) {
            return Err(MetricsError::Domain {
                name: "pe",
                value: pe,
                range: "(-1, 1)",
            });
        }
        Ok(Self {
            overhead,
            eff: 1.0 - overhead,
            pe,
        })
    }

    pub fn energy_gain(&self, p1: f64) -> Result<f64, MetricsError> {
        Ok(energy_gain(self.pe, coding_gain(self.overhead, p1)?))
    }
}

fn check_overhead(overhead: f64) -> Result<(), MetricsError> {
    if !(0.0..1.0).contains(&overhead) {
        return Err(MetricsError::Domain {
            name: "overhead",
            value: overhead,
            range: "[0, 1)",
        });
    }
    Ok(())
}

/// Coding gain `(1 - overhead) * p1`.
pub fn coding_gain(overhead: f64, p1: f64) -> Result<f64, MetricsError> {
    check_overhead(overhead)?;
    if !(0.0..=1.0).contains(&p1) {
        return Err(MetricsError::Domain {
            name: "p1",
            value: p1,
            range: "[0, 1]",
        });
    }
    Ok((1.0 - overhead) * p1)
}

/// Energy gain `pe * cg`.
pub fn energy_gain(pe: f64, cg: f64) -> f64 {
    pe * cg
}

/// Exact ones fraction of the codewords when every `n`-bit segment value is equally likely.
pub fn expected_ones_uniform(cfg: SegmentConfig) -> Result<Ratio<u64>, MetricsError> {
    let n = cfg.n();
    if n > ENUMERATION_BOUND {
        return Err(MetricsError::EnumerationBound(n));
    }
    let ones: u64 = (0..1u64 << n)
        .map(|seg| u64::from(encode_segment(seg, cfg).expect("in range").weight()))
        .sum();
    Ok(Ratio::new(ones, u64::from(cfg.k()) << n))
}

/// Lower bound on the ones fraction of any encoded payload, `(m + 1) / k`.
pub fn ones_density_floor(cfg: SegmentConfig) -> Ratio<u64> {
    Ratio::new(u64::from(cfg.m() + 1), u64::from(cfg.k()))
}
