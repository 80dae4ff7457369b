//! Picard iteration for contraction mappings on complete metric spaces.
//!
//! For an `L`-contraction `T` with iterates `x_{k+1} = T(x_k)` the Cauchy
//! estimate gives two error bounds on `d(x_m, x*)`:
//!
//! * a priori: `L^m / (1 - L) * d(x_1, x_0)`
//! * a posteriori: `L / (1 - L) * d(x_m, x_{m-1})`
//!
//! The engine stops as soon as the a posteriori bound drops below the
//! requested tolerance, so the returned point is within `tol` of the unique
//! fixed point whenever the supplied modulus is a true contraction modulus.

use std::marker::PhantomData;

use thiserror::Error;

/// Iteration cap used when callers do not pick one.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error("contraction modulus must lie strictly inside (0, 1), got {0}")]
    InvalidModulus(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {} iterations (last residual {:e})", .trace.iterations(), .trace.last_residual().unwrap_or(f64::NAN))]
    NonConvergence { trace: IterationTrace },
}

/// Residual history of one Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    modulus: f64,
    residuals: Vec<f64>,
}

impl IterationTrace {
    fn new(modulus: f64) -> Self {
        Self {
            modulus,
            residuals: Vec::new(),
        }
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// Number of map applications performed.
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// `residuals()[k] = d(x_{k+1}, x_k)`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn first_residual(&self) -> Option<f64> {
        self.residuals.first().copied()
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// `L^m / (1 - L) * d(x_1, x_0)` for the iterate `x_m`.
    pub fn a_priori_bound_at(&self, m: usize) -> f64 {
        let d1 = self.first_residual().unwrap_or(0.0);
        let l = self.modulus;
        l.powi(m as i32) / (1.0 - l) * d1
    }

    /// `L / (1 - L) * d(x_m, x_{m-1})` for the iterate `x_m`, `m >= 1`.
    pub fn a_posteriori_bound_at(&self, m: usize) -> f64 {
        assert!(
            m >= 1 && m <= self.residuals.len(),
            "iterate {m} not in trace"
        );
        let l = self.modulus;
        l / (1.0 - l) * self.residuals[m - 1]
    }

    /// A priori bound at the final iterate.
    pub fn a_priori_bound(&self) -> f64 {
        self.a_priori_bound_at(self.iterations())
    }

    /// A posteriori bound at the final iterate (0 for an empty trace).
    pub fn a_posteriori_bound(&self) -> f64 {
        match self.iterations() {
            0 => 0.0,
            m => self.a_posteriori_bound_at(m),
        }
    }

    /// Largest violation of `r_{k+1} <= L * r_k` over the trace.
    pub fn worst_contraction_excess(&self) -> f64 {
        self.residuals
            .windows(2)
            .map(|w| w[1] - self.modulus * w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A self-map together with its contraction modulus and metric.
pub struct ContractionMap<P, F, D> {
    map: F,
    modulus: f64,
    metric: D,
    _point: PhantomData<fn(&P) -> P>,
}

impl<P, F, D> std::fmt::Debug for ContractionMap<P, F, D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContractionMap")
            .field("modulus", &self.modulus)
            .finish_non_exhaustive()
    }
}

impl<P, F, D> ContractionMap<P, F, D>
where
    F: Fn(&P) -> P,
    D: Fn(&P, &P) -> f64,
{
    pub fn new(map: F, modulus: f64, metric: D) -> Result<Self, FixedPointError> {
        if !(modulus > 0.0 && modulus < 1.0) {
            return Err(FixedPointError::InvalidModulus(modulus));
        }
        Ok(Self {
            map,
            modulus,
            metric,
            _point: PhantomData,
        })
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn apply(&self, x: &P) -> P {
        (self.map)(x)
    }

    pub fn distance(&self, x: &P, y: &P) -> f64 {
        (self.metric)(x, y)
    }

    /// Checks `d(Tx, Ty) <= L d(x, y) + slack` for one pair.
    pub fn contracts_pair(&self, x: &P, y: &P, slack: f64) -> bool {
        let before = self.distance(x, y);
        let after = self.distance(&self.apply(x), &self.apply(y));
        after <= self.modulus * before + slack
    }

    /// Runs Picard iteration from `start` until `d(x_{k+1}, x_k) <= tol (1 - L) / L`.
    ///
    /// The returned point is the last iterate; the trace records every residual.
    pub fn iterate_to_fixed_point(
        &self,
        start: P,
        tol: f64,
        max_iters: usize,
    ) -> Result<(P, IterationTrace), FixedPointError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(FixedPointError::InvalidTolerance(tol));
        }
        let l = self.modulus;
        let threshold = tol * (1.0 - l) / l;
        let mut trace = IterationTrace::new(l);
        let mut current = start;
        for _ in 0..max_iters {
            let next = self.apply(&current);
            let residual = self.distance(&next, &current);
            trace.residuals.push(residual);
            current = next;
            if residual <= threshold {
                return Ok((current, trace));
            }
        }
        Err(FixedPointError::NonConvergence { trace })
    }
}

/// Smallest `m` with `L^m / (1 - L) * d1 <= tol`.
///
/// Returns 0 when `d1 == 0` (the start is already fixed).
pub fn a_priori_iterations(l: f64, d1: f64, tol: f64) -> Result<usize, FixedPointError> {
    if !(l > 0.0 && l < 1.0) {
        return Err(FixedPointError::InvalidModulus(l));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(FixedPointError::InvalidTolerance(tol));
    }
    if d1 <= 0.0 {
        return Ok(0);
    }
    let bound = |m: usize| l.powi(m as i32) / (1.0 - l) * d1;
    // Log estimate, then walk to the exact boundary of the floating-point bound.
    let estimate = ((tol * (1.0 - l) / d1).ln() / l.ln()).ceil();
    let mut m = if estimate.is_finite() && estimate > 0.0 {
        estimate as usize
    } else {
        0
    };
    while m > 0 && bound(m - 1) <= tol {
        m -= 1;
    }
    while bound(m) > tol {
        m += 1;
    }
    Ok(m)
}
