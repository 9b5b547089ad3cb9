//! Poisson hop-length weights for the heat kernel.
//!
//! `eta[k] = e^{-t} t^k / k!` is the probability that a heat-kernel walk has
//! length exactly `k`, and `psi[k]` is the tail mass from `k` onwards. The
//! ratio `eta[k] / psi[k]` is the probability that a walk which has reached
//! hop `k` stops there.

use crate::error::{Error, Result};

/// Default truncation threshold on the tail mass.
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;

/// Largest heat constant for which `e^{-t}` stays a normal double.
pub const MAX_HEAT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    t: f64,
    tail_tol: f64,
    eta: Vec<f64>,
    psi: Vec<f64>,
    k_cap: usize,
}

impl PoissonWeights {
    pub fn new(t: f64) -> Result<Self> {
        Self::with_tolerance(t, DEFAULT_TAIL_TOL)
    }

    pub fn with_tolerance(t: f64, tail_tol: f64) -> Result<Self> {
        if !(t > 0.0 && t <= MAX_HEAT) {
            return Err(Error::param(format!(
                "heat constant t must lie in (0, {MAX_HEAT}], got {t}"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::param(format!(
                "tail tolerance must lie in (0, 1), got {tail_tol}"
            )));
        }

        // Forward recurrence until past the mode and far below the tolerance,
        // so the backward tail sums below are accurate.
        let mut eta = vec![(-t).exp()];
        loop {
            let k = eta.len() - 1;
            let next = eta[k] * t / (k + 1) as f64;
            eta.push(next);
            if (k + 1) as f64 > t && next < tail_tol * 1e-3 {
                break;
            }
        }

        let mut psi = vec![0.0; eta.len()];
        let mut acc = 0.0;
        for k in (0..eta.len()).rev() {
            acc += eta[k];
            psi[k] = acc;
        }
        psi[0] = 1.0;

        let k_cap = psi
            .iter()
            .position(|&p| p < tail_tol)
            .expect("recurrence runs past the tolerance");
        eta.truncate(k_cap + 1);
        psi.truncate(k_cap + 1);

        Ok(Self {
            t,
            tail_tol,
            eta,
            psi,
            k_cap,
        })
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Hop at which every walk is forced to stop.
    #[inline]
    pub fn k_cap(&self) -> usize {
        self.k_cap
    }

    /// `eta(k)`, zero beyond the truncation point.
    #[inline]
    pub fn eta(&self, k: usize) -> f64 {
        self.eta.get(k).copied().unwrap_or(0.0)
    }

    /// `psi(k)`, zero beyond the truncation point.
    #[inline]
    pub fn psi(&self, k: usize) -> f64 {
        self.psi.get(k).copied().unwrap_or(0.0)
    }

    pub fn eta_slice(&self) -> &[f64] {
        &self.eta
    }

    pub fn psi_slice(&self) -> &[f64] {
        &self.psi
    }

    /// Probability that a walk at hop `k` terminates there; 1 from `k_cap` on.
    #[inline]
    pub fn stop_probability(&self, k: usize) -> f64 {
        if k >= self.k_cap {
            1.0
        } else {
            self.eta[k] / self.psi[k]
        }
    }

    /// Walk-length distribution with the truncated tail folded into `k_cap`.
    pub fn length_distribution(&self) -> Vec<f64> {
        let mut w = self.eta[..self.k_cap].to_vec();
        w.push(self.psi[self.k_cap]);
        w
    }
}
