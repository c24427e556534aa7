use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScalerMode {
    /// `(x − min) / (max − min)`
    #[default]
    MinMax,
    /// `(x − mean) / std`, population std.
    Standard,
}

impl std::fmt::Display for ScalerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalerMode::MinMax => "minmax",
            ScalerMode::Standard => "standard",
        })
    }
}

impl std::str::FromStr for ScalerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" | "min-max" => Ok(ScalerMode::MinMax),
            "standard" => Ok(ScalerMode::Standard),
            other => Err(Error::Config(format!("unknown scaler `{other}`"))),
        }
    }
}

/// Per-feature affine map `x ↦ (x − offset) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler<T> {
    pub mode: ScalerMode,
    pub offset: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Scaler<T> {
    /// `columns[j]` holds every training value of feature `names[j]`.
    pub fn fit(mode: ScalerMode, columns: &[&[T]], names: &[&str]) -> Result<Self> {
        let mut offset = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let name = names.get(j).copied().unwrap_or("?");
            let degenerate = |reason: String| Error::DegenerateFeature {
                feature: name.to_string(),
                reason,
            };
            if col.is_empty() {
                return Err(degenerate("no training values".into()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(degenerate("non-finite training values".into()));
            }
            let (o, s) = match mode {
                ScalerMode::MinMax => {
                    let min = col.iter().copied().fold(T::infinity(), T::min);
                    let max = col.iter().copied().fold(T::neg_infinity(), T::max);
                    if !(max > min) {
                        return Err(degenerate(format!("max == min == {min}")));
                    }
                    (min, max - min)
                }
                ScalerMode::Standard => {
                    let n = T::from_usize_lossy(col.len());
                    let mean = col.iter().copied().sum::<T>() / n;
                    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
                    if !(var > T::zero()) {
                        return Err(degenerate(format!("zero variance around {mean}")));
                    }
                    (mean, var.sqrt())
                }
            };
            offset.push(o);
            scale.push(s);
        }
        Ok(Self { mode, offset, scale })
    }

    pub fn features(&self) -> usize {
        self.offset.len()
    }

    pub fn transform(&self, feature: usize, x: T) -> T {
        (x - self.offset[feature]) / self.scale[feature]
    }

    pub fn inverse(&self, feature: usize, y: T) -> T {
        y * self.scale[feature] + self.offset[feature]
    }
}
