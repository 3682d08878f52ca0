//! Small synthetic classification problems for experiments and tests.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Two Gaussian blobs with centers 5σ apart and noise truncated at 2σ.
    Separable,
    /// A few informative columns behind a linear rule, the rest noise, 5% label noise.
    MadelonLike,
    /// N(0,1) informative columns plus one N(0, 1000²) noise column.
    ScaleSensitive,
    /// Labels independent of the features.
    NoiseOnly,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [
        SynthKind::Separable,
        SynthKind::MadelonLike,
        SynthKind::ScaleSensitive,
        SynthKind::NoiseOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::Separable => "separable",
            SynthKind::MadelonLike => "madelon_like",
            SynthKind::ScaleSensitive => "scale_sensitive",
            SynthKind::NoiseOnly => "noise_only",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown synthetic kind `{s}` (expected one of separable, madelon_like, scale_sensitive, noise_only)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub d: usize,
    /// Informative columns for `madelon_like`; ignored otherwise.
    pub informative: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n: usize, d: usize, seed: u64) -> Self {
        SynthSpec {
            kind,
            n,
            d,
            informative: 5,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Columns that carry label information, ascending.
    pub informative: Vec<usize>,
}

const MADELON_LABEL_NOISE: f64 = 0.05;
const SCALE_NOISE_STD: f64 = 1000.0;

pub fn synthesize(spec: &SynthSpec) -> Result<Synthetic> {
    let SynthSpec { kind, n, d, seed, .. } = *spec;
    if n < 20 {
        return Err(Error::Config(format!("need at least 20 rows, got {n}")));
    }
    if d < 1 {
        return Err(Error::Config("need at least one column".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut x = Array2::<f64>::zeros((n, d));
    let mut y = vec![0usize; n];
    let informative: Vec<usize>;

    match kind {
        SynthKind::Separable => {
            for (i, label) in y.iter_mut().enumerate() {
                *label = i % 2;
            }
            rng.shuffle(&mut y);
            for i in 0..n {
                let center = if y[i] == 0 { -2.5 } else { 2.5 };
                for j in 0..d {
                    let z = loop {
                        let z = rng.normal();
                        if z.abs() <= 2.0 {
                            break z;
                        }
                    };
                    x[[i, j]] = center + z;
                }
            }
            informative = (0..d).collect();
        }
        SynthKind::MadelonLike => {
            let k = spec.informative.clamp(1, d);
            let mut cols: Vec<usize> = (0..d).collect();
            rng.shuffle(&mut cols);
            let mut chosen = cols[..k].to_vec();
            chosen.sort_unstable();
            for v in x.iter_mut() {
                *v = rng.normal();
            }
            for i in 0..n {
                let s: f64 = chosen
                    .iter()
                    .enumerate()
                    .map(|(w, &j)| if w % 2 == 0 { x[[i, j]] } else { -x[[i, j]] })
                    .sum();
                let mut label = usize::from(s > 0.0);
                if rng.unit() < MADELON_LABEL_NOISE {
                    label = 1 - label;
                }
                y[i] = label;
            }
            informative = chosen;
        }
        SynthKind::ScaleSensitive => {
            if d < 2 {
                return Err(Error::Config("scale_sensitive needs at least two columns".into()));
            }
            for i in 0..n {
                for j in 0..d - 1 {
                    x[[i, j]] = rng.normal();
                }
                x[[i, d - 1]] = SCALE_NOISE_STD * rng.normal();
                let s: f64 = (0..d - 1).map(|j| x[[i, j]]).sum();
                y[i] = usize::from(s > 0.0);
            }
            informative = (0..d - 1).collect();
        }
        SynthKind::NoiseOnly => {
            for v in x.iter_mut() {
                *v = rng.normal();
            }
            for label in y.iter_mut() {
                *label = usize::from(rng.unit() < 0.5);
            }
            informative = Vec::new();
        }
    }

    let dataset = Dataset::from_parts(x, y, vec!["0".into(), "1".into()])?;
    Ok(Synthetic { dataset, informative })
}
