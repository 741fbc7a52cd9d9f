use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid `0 = r_0 < r_1 < ... < r_m` with trapezoidal weights.
///
/// Serializes as its node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("r-grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Config(format!("r-grid must start at 0, got {}", nodes[0])));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Config("r-grid nodes must be finite and strictly increasing".into()));
        }
        let m = nodes.len() - 1;
        let weights = (0..=m)
            .map(|k| {
                let left = if k > 0 { nodes[k] - nodes[k - 1] } else { 0.0 };
                let right = if k < m { nodes[k + 1] - nodes[k] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(RGrid { nodes, weights })
    }

    /// `cells` steps on `[0, r_max]` growing by `ratio` from one step to
    /// the next.
    pub fn geometric(r_max: f64, cells: usize, ratio: f64) -> Result<Self> {
        if !(r_max > 0.0) || cells == 0 || !(ratio >= 1.0) {
            return Err(Error::Config("geometric r-grid needs r_max > 0, cells > 0 and ratio >= 1".into()));
        }
        if ratio == 1.0 {
            return Self::uniform(r_max, cells);
        }
        let denom = ratio.powi(cells as i32) - 1.0;
        let mut nodes: Vec<f64> = (0..=cells).map(|k| r_max * (ratio.powi(k as i32) - 1.0) / denom).collect();
        nodes[cells] = r_max;
        Self::from_nodes(nodes)
    }

    pub fn uniform(r_max: f64, cells: usize) -> Result<Self> {
        if !(r_max > 0.0) || cells == 0 {
            return Err(Error::Config("uniform r-grid needs r_max > 0 and cells > 0".into()));
        }
        Self::from_nodes((0..=cells).map(|k| r_max * k as f64 / cells as f64).collect())
    }

    /// 160 geometric cells out to 40 mean units, first step about 0.01.
    pub fn standard() -> Self {
        Self::geometric(40.0, 160, 1.03).unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Largest cell width.
    pub fn max_cell(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Trapezoidal integral of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Piecewise-linear interpolation; clamps to the end values outside.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        if r <= 0.0 {
            return values[0];
        }
        if r >= self.r_max() {
            return values[values.len() - 1];
        }
        let i = self.nodes.partition_point(|&x| x <= r) - 1;
        let w = (r - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        values[i] + w * (values[i + 1] - values[i])
    }
}

impl TryFrom<Vec<f64>> for RGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        RGrid::from_nodes(v)
    }
}

impl From<RGrid> for Vec<f64> {
    fn from(g: RGrid) -> Self {
        g.nodes
    }
}
