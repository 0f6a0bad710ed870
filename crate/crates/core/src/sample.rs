use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Mellin development point `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelExponent(pub f64);

impl Default for ModelExponent {
    fn default() -> Self {
        ModelExponent(crate::DEFAULT_C)
    }
}

impl ModelExponent {
    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::domain(format!("c must be finite, got {c}")));
        }
        Ok(ModelExponent(c))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Where a simulated sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub generator: String,
    pub seed: u64,
    pub stream: u64,
}

/// Strictly positive observations `Y_1..Y_n`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    provenance: Option<SeedProvenance>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::domain(format!(
                "observation {i} is {v}; observations must be finite and strictly positive"
            )));
        }
        Ok(Self {
            values,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: SeedProvenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Option<&SeedProvenance> {
        self.provenance.as_ref()
    }

    /// Elementwise product `Y = X * U`.
    pub fn product(signal: &[f64], error: &[f64]) -> Result<Self> {
        if signal.len() != error.len() {
            return Err(Error::argument(format!(
                "signal and error samples differ in length ({} vs {})",
                signal.len(),
                error.len()
            )));
        }
        Sample::new(signal.iter().zip(error).map(|(x, u)| x * u).collect())
    }
}

impl AsRef<[f64]> for Sample {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Finite, strictly increasing grid of positive cut-offs. Ties in any
/// selection over the grid resolve to the smaller cut-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KGrid(Vec<f64>);

impl KGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::argument("cut-off grid is empty"));
        }
        if let Some(k) = points.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::argument(format!("cut-off {k} is not a positive finite number")));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::argument("cut-off grid must be strictly increasing"));
        }
        Ok(KGrid(points))
    }

    /// `start, start + step, ...` up to `end` inclusive (with a small slack for
    /// rounding), each point rounded to 12 decimals.
    pub fn arithmetic(start: f64, step: f64, end: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::argument("grid step must be positive"));
        }
        let count = ((end - start) / step + 1e-9).floor() as i64 + 1;
        if count < 1 {
            return Err(Error::argument("grid end precedes its start"));
        }
        let points = (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        KGrid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Points `<= bound`, keeping at least the first.
    pub fn truncated(&self, bound: f64) -> KGrid {
        let kept: Vec<f64> = self.0.iter().copied().take_while(|k| *k <= bound).collect();
        if kept.is_empty() {
            KGrid(vec![self.0[0]])
        } else {
            KGrid(kept)
        }
    }
}

impl TryFrom<Vec<f64>> for KGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        KGrid::new(v)
    }
}

impl From<KGrid> for Vec<f64> {
    fn from(g: KGrid) -> Self {
        g.0
    }
}
