//! Weight discretization onto memristor conductance levels.
//!
//! Levels are spaced linearly in conductance between `g_min = 1/r_max` and
//! `g_max = 1/r_min`. Signed weights use a differential pair of cells per synapse
//! (`G+ - G-`); unsigned mode stores magnitudes only and removes the `g_min` baseline
//! analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignedMode {
    Differential,
    Unsigned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantConfig {
    pub bits: u32,
    /// Ohms.
    pub r_min: f64,
    /// Ohms.
    pub r_max: f64,
    /// Volts applied to a spiking row.
    pub v_read: f64,
    pub signed_mode: SignedMode,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            bits: 4,
            r_min: 20e3,
            r_max: 200e3,
            v_read: 0.5,
            signed_mode: SignedMode::Differential,
        }
    }
}

impl QuantConfig {
    pub fn with_bits(self, bits: u32) -> Self {
        QuantConfig { bits, ..self }
    }

    pub fn with_mode(self, signed_mode: SignedMode) -> Self {
        QuantConfig { signed_mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bits) {
            return Err(Error::Config(format!("quant.bits must be in [1, 8], got {}", self.bits)));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < r_min < r_max, got r_min={} r_max={}",
                self.r_min, self.r_max
            )));
        }
        if !(self.v_read > 0.0 && self.v_read.is_finite()) {
            return Err(Error::Config(format!("v_read must be positive, got {}", self.v_read)));
        }
        Ok(())
    }

    /// Number of conductance levels, `2^bits`.
    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn max_level(&self) -> u32 {
        self.levels() - 1
    }

    pub fn g_min(&self) -> f64 {
        1.0 / self.r_max
    }

    pub fn g_max(&self) -> f64 {
        1.0 / self.r_min
    }

    /// Conductance difference between adjacent levels.
    pub fn g_step(&self) -> f64 {
        (self.g_max() - self.g_min()) / self.max_level() as f64
    }

    /// Physical crossbar columns used per logical output neuron.
    pub fn columns_per_output(&self) -> usize {
        match self.signed_mode {
            SignedMode::Differential => 2,
            SignedMode::Unsigned => 1,
        }
    }
}

/// Levels programmed into the cell pair of one synapse. Unsigned mode only uses `plus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuantizedEntry {
    pub plus: u16,
    pub minus: u16,
}

impl QuantizedEntry {
    pub fn signed_level(&self) -> i32 {
        self.plus as i32 - self.minus as i32
    }
}

/// One crossbar column: a quantized entry per row and the layer's weight scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedColumn {
    pub entries: Vec<QuantizedEntry>,
    pub w_max: f64,
}

impl QuantizedColumn {
    pub fn from_weights(weights: &[f64], w_max: f64, cfg: &QuantConfig) -> Result<Self> {
        let entries = weights.iter().map(|&w| quantize_weight(w, w_max, cfg)).collect::<Result<_>>()?;
        Ok(QuantizedColumn { entries, w_max })
    }
}

pub fn quantize_weight(w: f64, w_max: f64, cfg: &QuantConfig) -> Result<QuantizedEntry> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::invalid(format!("w_max must be positive, got {w_max}")));
    }
    if w.is_nan() || w.abs() > w_max {
        return Err(Error::invalid(format!("|{w}| exceeds w_max {w_max}; rescale the layer")));
    }
    let level = (w.abs() / w_max * cfg.max_level() as f64).round() as u16;
    match cfg.signed_mode {
        SignedMode::Differential if w < 0.0 => Ok(QuantizedEntry { plus: 0, minus: level }),
        SignedMode::Differential => Ok(QuantizedEntry { plus: level, minus: 0 }),
        SignedMode::Unsigned if w < 0.0 => {
            Err(Error::invalid(format!("negative weight {w} cannot be stored in unsigned mode")))
        }
        SignedMode::Unsigned => Ok(QuantizedEntry { plus: level, minus: 0 }),
    }
}

pub fn level_to_conductance(level: u32, cfg: &QuantConfig) -> Result<f64> {
    if level > cfg.max_level() {
        return Err(Error::invalid(format!("level {level} outside [0, {}]", cfg.max_level())));
    }
    Ok(cfg.g_min() + level as f64 * cfg.g_step())
}

/// Column current in amps for a binary row-input vector.
///
/// Differential mode returns `v_read · Σ s_i (G+_i - G-_i)`. Unsigned mode returns the raw
/// `v_read · Σ s_i G_i`, which still contains [`baseline_current`].
pub fn column_current(spikes: &[bool], column: &QuantizedColumn, cfg: &QuantConfig) -> Result<f64> {
    if spikes.len() != column.entries.len() {
        return Err(Error::shape(format!(
            "{} input spikes for a {}-row column",
            spikes.len(),
            column.entries.len()
        )));
    }
    let mut sum = 0.0;
    for (e, _) in column.entries.iter().zip(spikes).filter(|(_, &s)| s) {
        let g = match cfg.signed_mode {
            SignedMode::Differential => {
                level_to_conductance(e.plus as u32, cfg)? - level_to_conductance(e.minus as u32, cfg)?
            }
            SignedMode::Unsigned => level_to_conductance(e.plus as u32, cfg)?,
        };
        sum += g;
    }
    Ok(cfg.v_read * sum)
}

/// Current contributed by `g_min` on `n_spiking` driven rows of an unsigned column.
pub fn baseline_current(n_spiking: usize, cfg: &QuantConfig) -> f64 {
    cfg.g_min() * n_spiking as f64 * cfg.v_read
}

pub fn effective_weight(entry: QuantizedEntry, w_max: f64, cfg: &QuantConfig) -> f64 {
    entry.signed_level() as f64 / cfg.max_level() as f64 * w_max
}

/// Amps per unit of effective weight: `column current = kappa · Σ s_i w_eff_i`
/// (after baseline removal in unsigned mode).
pub fn kappa(w_max: f64, cfg: &QuantConfig) -> f64 {
    cfg.v_read * (cfg.g_max() - cfg.g_min()) / w_max
}

/// Neuron threshold expressed in units of one conductance step, the unit in which
/// crossbar partial sums are accumulated.
pub fn threshold_in_level_units(threshold: f64, w_max: f64, cfg: &QuantConfig) -> f64 {
    threshold * cfg.max_level() as f64 / w_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs())
    }

    #[test]
    fn endpoint_conductances() {
        let cfg = QuantConfig::default();
        assert!(rel_eq(level_to_conductance(0, &cfg).unwrap(), 5.0e-6, 1e-12));
        assert!(rel_eq(level_to_conductance(15, &cfg).unwrap(), 5.0e-5, 1e-12));
        assert!(rel_eq(level_to_conductance(5, &cfg).unwrap(), 2.0e-5, 1e-12));
        assert!(level_to_conductance(16, &cfg).is_err());
    }

    #[test]
    fn quantize_examples() {
        let cfg = QuantConfig::default();
        assert_eq!(quantize_weight(1.0, 1.0, &cfg).unwrap(), QuantizedEntry { plus: 15, minus: 0 });
        assert_eq!(quantize_weight(0.0, 1.0, &cfg).unwrap(), QuantizedEntry::default());
        assert_eq!(quantize_weight(-0.5, 1.0, &cfg).unwrap(), QuantizedEntry { plus: 0, minus: 8 });
    }

    #[test]
    fn quantize_matches_nearest_level_enumeration() {
        let cfg = QuantConfig::default();
        for k in 0..=1000 {
            let w = k as f64 / 1000.0;
            let got = quantize_weight(w, 1.0, &cfg).unwrap().plus as i32;
            // Nearest of all 16 levels; exact halves resolve upward.
            let best = (0..16)
                .min_by(|&a, &b| {
                    let da = (a as f64 / 15.0 - w).abs();
                    let db = (b as f64 / 15.0 - w).abs();
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            assert_eq!(got, best, "w = {w}");
        }
    }

    #[test]
    fn quantize_errors() {
        let cfg = QuantConfig::default();
        assert!(quantize_weight(1.5, 1.0, &cfg).is_err());
        assert!(quantize_weight(0.5, 0.0, &cfg).is_err());
        assert!(quantize_weight(-0.1, 1.0, &cfg.with_mode(SignedMode::Unsigned)).is_err());
        assert!(quantize_weight(f64::NAN, 1.0, &cfg).is_err());
    }

    #[test]
    fn column_current_examples() {
        let cfg = QuantConfig::default();
        let col = QuantizedColumn {
            entries: vec![QuantizedEntry { plus: 15, minus: 0 }; 3],
            w_max: 1.0,
        };
        assert_eq!(column_current(&[false; 3], &col, &cfg).unwrap(), 0.0);
        let one = column_current(&[true, false, false], &col, &cfg).unwrap();
        assert!(rel_eq(one, 2.25e-5, 1e-12));
        let three = column_current(&[true; 3], &col, &cfg).unwrap();
        assert!(rel_eq(three, 3.0 * one, 1e-12));
        assert!(column_current(&[true; 2], &col, &cfg).is_err());
    }

    #[test]
    fn unsigned_baseline_removal() {
        let cfg = QuantConfig::default().with_mode(SignedMode::Unsigned);
        let col = QuantizedColumn::from_weights(&[0.0, 0.0], 1.0, &cfg).unwrap();
        let raw = column_current(&[true, true], &col, &cfg).unwrap();
        assert!(rel_eq(raw, baseline_current(2, &cfg), 1e-12));
    }

    #[test]
    fn effective_weight_examples() {
        let cfg = QuantConfig::default();
        assert_eq!(effective_weight(QuantizedEntry { plus: 15, minus: 0 }, 1.0, &cfg), 1.0);
        assert_eq!(effective_weight(QuantizedEntry::default(), 1.0, &cfg), 0.0);
        let cfg8 = cfg.with_bits(8);
        let e = effective_weight(quantize_weight(0.3, 1.0, &cfg8).unwrap(), 1.0, &cfg8);
        assert!((e - 0.3).abs() <= 1.0 / (2.0 * 255.0));
    }

    proptest! {
        #[test]
        fn error_bound(bits in 1u32..=8, w_max in 0.01f64..100.0, frac in -1.0f64..=1.0) {
            let cfg = QuantConfig::default().with_bits(bits);
            let w = frac * w_max;
            let e = quantize_weight(w, w_max, &cfg).unwrap();
            let bound = w_max / (2.0 * cfg.max_level() as f64);
            prop_assert!((effective_weight(e, w_max, &cfg) - w).abs() <= bound * (1.0 + 1e-12));
            prop_assert_eq!(e.plus as u32 * e.minus as u32, 0);
        }

        #[test]
        fn monotone_levels(bits in 1u32..=8, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let cfg = QuantConfig::default().with_bits(bits);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let la = quantize_weight(lo, 1.0, &cfg).unwrap().plus;
            let lb = quantize_weight(hi, 1.0, &cfg).unwrap().plus;
            prop_assert!(la <= lb);
        }

        #[test]
        fn current_is_kappa_scaled_dot(
            bits in 1u32..=8,
            col in prop::collection::vec((-1.0f64..=1.0, any::<bool>()), 1..40),
        ) {
            let cfg = QuantConfig::default().with_bits(bits);
            let w_max = col.iter().fold(0.0f64, |m, (w, _)| m.max(w.abs())).max(1e-3);
            let weights: Vec<f64> = col.iter().map(|c| c.0).collect();
            let spikes: Vec<bool> = col.iter().map(|c| c.1).collect();
            let q = QuantizedColumn::from_weights(&weights, w_max, &cfg).unwrap();
            let dot: f64 = q.entries.iter().zip(&spikes)
                .filter(|(_, &s)| s)
                .map(|(e, _)| effective_weight(*e, w_max, &cfg))
                .sum();
            let current = column_current(&spikes, &q, &cfg).unwrap();
            let expect = kappa(w_max, &cfg) * dot;
            let scale = kappa(w_max, &cfg) * w_max * spikes.len() as f64;
            prop_assert!((current - expect).abs() <= 1e-12 * scale, "{} vs {}", current, expect);
        }
    }
}
