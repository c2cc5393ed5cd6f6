//! Sequential probability ratio testing over per-input mutation trials.
//!
//! Each adversarial input accumulates Bernoulli trials (does mutant k flip
//! this input's prediction?). The SPRT decides between "mutation score at
//! least `zeta_h + delta`" (select) and "at most `zeta_h - delta`" (discard)
//! with error bounds `alpha`/`beta`. Selecting on the upper threshold
//! follows the method's hypothesis that mutation-sensitive inputs are the
//! fault-prone ones.

mod calibrate;
mod prioritize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calibrate::{calibrate_nmax, calibrate_zeta, NmaxCalibration};
pub use prioritize::{prioritize, PrioritizedSuite, SuiteEntry};

fn default_p_clamp() -> f64 {
    1e-3
}

fn default_subset_fraction() -> f64 {
    0.1
}

fn default_decided_target() -> f64 {
    0.9
}

fn default_nmax_ceiling() -> usize {
    1000
}

/// Sequential-test parameters. `p0`/`p1` derive from `zeta_h -/+ delta`,
/// clamped into `[p_clamp, 1 - p_clamp]` so the likelihood logs stay finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprtConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub zeta_h: f64,
    #[serde(default = "default_p_clamp")]
    pub p_clamp: f64,
    /// Fraction of the adversarial set used to calibrate `n_max`.
    #[serde(default = "default_subset_fraction")]
    pub subset_fraction: f64,
    /// Calibration stops once this fraction of the probe subset is decided.
    #[serde(default = "default_decided_target")]
    pub decided_target: f64,
    /// Hard cap on mutants consumed during calibration.
    #[serde(default = "default_nmax_ceiling")]
    pub nmax_ceiling: usize,
}

impl SprtConfig {
    /// The 5% defaults with a measured indifference center.
    pub fn with_zeta(zeta_h: f64) -> Self {
        Self {
            alpha: 0.05,
            beta: 0.05,
            delta: 0.05,
            zeta_h,
            p_clamp: default_p_clamp(),
            subset_fraction: default_subset_fraction(),
            decided_target: default_decided_target(),
            nmax_ceiling: default_nmax_ceiling(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::Config(format!("{name} must be in (0, 1)")));
            }
        }
        if self.alpha + self.beta >= 1.0 {
            return Err(Error::Config("alpha + beta must be below 1".into()));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::Config("delta must be positive".into()));
        }
        if !self.zeta_h.is_finite() || !(0.0..=1.0).contains(&self.zeta_h) {
            return Err(Error::Config("zeta_h must be in [0, 1]".into()));
        }
        if !self.p_clamp.is_finite() || self.p_clamp <= 0.0 || self.p_clamp >= 0.5 {
            return Err(Error::Config("p_clamp must be in (0, 0.5)".into()));
        }
        if !(0.0..=1.0).contains(&self.subset_fraction) || self.subset_fraction == 0.0 {
            return Err(Error::Config("subset_fraction must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.decided_target) {
            return Err(Error::Config("decided_target must be in [0, 1]".into()));
        }
        if self.nmax_ceiling == 0 {
            return Err(Error::Config("nmax_ceiling must be positive".into()));
        }
        if self.p0() >= self.p1() {
            return Err(Error::Config(format!(
                "clamped hypotheses collapsed: p0 {} >= p1 {}",
                self.p0(),
                self.p1()
            )));
        }
        Ok(())
    }

    /// Low-score hypothesis rate.
    pub fn p0(&self) -> f64 {
        (self.zeta_h - self.delta).clamp(self.p_clamp, 1.0 - self.p_clamp)
    }

    /// High-score hypothesis rate.
    pub fn p1(&self) -> f64 {
        (self.zeta_h + self.delta).clamp(self.p_clamp, 1.0 - self.p_clamp)
    }

    /// Selection threshold `(1 - beta) / alpha`.
    pub fn upper_threshold(&self) -> f64 {
        (1.0 - self.beta) / self.alpha
    }

    /// Discard threshold `beta / (1 - alpha)`.
    pub fn lower_threshold(&self) -> f64 {
        self.beta / (1.0 - self.alpha)
    }
}

/// Bernoulli likelihood ratio `p1^z (1-p1)^(n-z) / (p0^z (1-p0)^(n-z))`,
/// computed in log space and exponentiated.
pub fn sprt_ratio(n: usize, z: usize, cfg: &SprtConfig) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("SPRT ratio needs at least one trial".into()));
    }
    if z > n {
        return Err(Error::Domain(format!("z = {z} exceeds n = {n}")));
    }
    Ok(log_ratio(n, z, cfg).exp())
}

fn log_ratio(n: usize, z: usize, cfg: &SprtConfig) -> f64 {
    let p0 = cfg.p0();
    let p1 = cfg.p1();
    let z = z as f64;
    let n = n as f64;
    z * (p1 / p0).ln() + (n - z) * ((1.0 - p1) / (1.0 - p0)).ln()
}

/// Terminal or pending outcome of one input's sequential test. The
/// iteration records which mutant (1-based, in pool order) settled it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Selected { iteration: usize },
    Discarded { iteration: usize },
    Undecided,
}

impl Decision {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Decision::Undecided)
    }
}

/// Per-input trial accumulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SprtState {
    pub input_id: usize,
    pub n: usize,
    pub z: usize,
    pub decision: Decision,
}

impl SprtState {
    pub fn new(input_id: usize) -> Self {
        Self {
            input_id,
            n: 0,
            z: 0,
            decision: Decision::Undecided,
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self.decision, Decision::Undecided)
    }

    /// Records one trial at mutant `iteration` and re-evaluates the ratio.
    /// Once terminal, the decision is immutable: stepping again is a
    /// contract violation.
    pub fn step(&mut self, differs: bool, cfg: &SprtConfig, iteration: usize) -> Result<Decision> {
        if self.is_terminal() {
            return Err(Error::Contract(format!(
                "input {} already decided as {:?}",
                self.input_id, self.decision
            )));
        }
        self.n += 1;
        if differs {
            self.z += 1;
        }
        let log_s = log_ratio(self.n, self.z, cfg);
        if log_s >= cfg.upper_threshold().ln() {
            self.decision = Decision::Selected { iteration };
        } else if log_s <= cfg.lower_threshold().ln() {
            self.decision = Decision::Discarded { iteration };
        }
        Ok(self.decision)
    }

    /// Mutation-score estimate `z / n`.
    pub fn score(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.z as f64 / self.n as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn anchor_cfg() -> SprtConfig {
        // zeta 0.10, delta 0.05 -> p0 = 0.05, p1 = 0.15
        SprtConfig::with_zeta(0.10)
    }

    #[test]
    fn five_percent_thresholds_are_19_and_one_19th() {
        let cfg = anchor_cfg();
        assert!((cfg.upper_threshold() - 19.0).abs() < 1e-12);
        assert!((cfg.lower_threshold() - 1.0 / 19.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_matches_direct_evaluation() {
        let cfg = anchor_cfg();
        assert!((cfg.p0() - 0.05).abs() < 1e-15);
        assert!((cfg.p1() - 0.15).abs() < 1e-15);

        // Single differing trial with p0 = 0.25, p1 = 0.75: S = 3.
        let wide = SprtConfig {
            delta: 0.25,
            zeta_h: 0.5,
            ..anchor_cfg()
        };
        assert!((sprt_ratio(1, 1, &wide).unwrap() - 3.0).abs() < 1e-12);

        // Log-space oracle for S(10, 5).
        let oracle = (5.0 * (0.15_f64 / 0.05).ln() + 5.0 * (0.85_f64 / 0.95).ln()).exp();
        let s = sprt_ratio(10, 5, &cfg).unwrap();
        assert!((s - oracle).abs() < 1e-9);
        assert!((s - 139.3).abs() <= 0.1, "S(10,5) = {s}");

        // (0.85/0.95)^30
        let s = sprt_ratio(30, 0, &cfg).unwrap();
        assert!((s - (0.85_f64 / 0.95).powi(30)).abs() < 1e-12);
        assert!((s - 0.0355).abs() < 5e-4);
    }

    #[test]
    fn ratio_rejects_bad_counts() {
        let cfg = anchor_cfg();
        assert!(sprt_ratio(0, 0, &cfg).is_err());
        assert!(sprt_ratio(3, 4, &cfg).is_err());
    }

    #[test]
    fn all_differs_select_at_trial_three() {
        let cfg = anchor_cfg();
        let mut state = SprtState::new(0);
        for iter in 1..=10 {
            let d = state.step(true, &cfg, iter).unwrap();
            if iter < 3 {
                assert_eq!(d, Decision::Undecided, "iteration {iter}");
            } else {
                assert_eq!(d, Decision::Selected { iteration: 3 });
                break;
            }
        }
        assert_eq!(state.n, 3);
        assert_eq!(state.z, 3);
    }

    #[test]
    fn no_differs_discard_at_trial_27() {
        let cfg = anchor_cfg();
        let mut state = SprtState::new(1);
        for iter in 1..=30 {
            let d = state.step(false, &cfg, iter).unwrap();
            if iter < 27 {
                assert_eq!(d, Decision::Undecided, "iteration {iter}");
            } else {
                assert_eq!(d, Decision::Discarded { iteration: 27 });
                break;
            }
        }
        assert_eq!(state.n, 27);
    }

    #[test]
    fn stepping_a_terminal_state_is_a_contract_violation() {
        let cfg = anchor_cfg();
        let mut state = SprtState::new(2);
        for iter in 1..=3 {
            state.step(true, &cfg, iter).unwrap();
        }
        assert!(state.is_terminal());
        assert!(matches!(state.step(true, &cfg, 4), Err(Error::Contract(_))));
    }

    #[test]
    fn ratio_is_monotone_in_z_for_fixed_n() {
        let cfg = anchor_cfg();
        let mut prev = 0.0;
        for z in 0..=20 {
            let s = sprt_ratio(20, z, &cfg).unwrap();
            assert!(s > prev, "S(20, {z}) = {s} not increasing");
            prev = s;
        }
    }

    #[test]
    fn wald_error_bounds_hold_empirically() {
        // Simulating the boundary hypotheses: selection under p0 happens at
        // most ~alpha of the time, discarding under p1 at most ~beta.
        let cfg = anchor_cfg();
        let streams: usize = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

        let mut selected_under_p0 = 0usize;
        let mut discarded_under_p1 = 0usize;
        for id in 0..streams {
            let mut s0 = SprtState::new(id);
            let mut s1 = SprtState::new(id);
            for iter in 1..=10_000 {
                if !s0.is_terminal() {
                    s0.step(rng.gen_bool(cfg.p0()), &cfg, iter).unwrap();
                }
                if !s1.is_terminal() {
                    s1.step(rng.gen_bool(cfg.p1()), &cfg, iter).unwrap();
                }
                if s0.is_terminal() && s1.is_terminal() {
                    break;
                }
            }
            if matches!(s0.decision, Decision::Selected { .. }) {
                selected_under_p0 += 1;
            }
            if matches!(s1.decision, Decision::Discarded { .. }) {
                discarded_under_p1 += 1;
            }
        }
        let sel_frac = selected_under_p0 as f64 / streams as f64;
        let dis_frac = discarded_under_p1 as f64 / streams as f64;
        assert!(
            sel_frac <= cfg.alpha + 0.02,
            "select rate under p0: {sel_frac}"
        );
        assert!(
            dis_frac <= cfg.beta + 0.02,
            "discard rate under p1: {dis_frac}"
        );
    }
}
