//! Generative measure descriptions and their deterministic samplers.
//!
//! Sampling uses ChaCha20 (a counter-based generator) seeded with
//! `seed_from_u64(seed)`; plain sampling reads stream 0 and regularizing
//! samples read stream 1, so a cloud and its regularizer never share draws.
//! Finite atoms sampled at the top level use systematic resampling (one
//! uniform offset, then evenly spaced positions in cumulative weight), so `N`
//! equally weighted atoms sampled `N` times give back the atoms themselves.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const SAMPLE_STREAM: u64 = 0;
pub(crate) const REGULARIZE_STREAM: u64 = 1;

/// A measure to sample from, optionally declaring its center of symmetry.
///
/// JSON form: `{"type": "gaussian", "mean": [...], "cov_factor": [[...]]}`,
/// `{"type": "uniform_box", "lo": [...], "hi": [...]}`,
/// `{"type": "uniform_simplex", "vertices": [[...], ...]}`,
/// `{"type": "atoms", "points": [[...]], "weights": [...]}` or
/// `{"type": "mixture", "components": [{"weight": w, "spec": {...}}]}`,
/// each with an optional `"symmetry_center": [...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(flatten)]
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_center: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpecKind {
    /// `mean + L z` with `z` standard normal; `L` defaults to the identity.
    Gaussian {
        mean: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cov_factor: Option<Vec<Vec<f64>>>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    UniformSimplex {
        vertices: Vec<Vec<f64>>,
    },
    Atoms {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Mixture {
        components: Vec<WeightedComponent>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedComponent {
    pub weight: f64,
    pub spec: MeasureSpec,
}

impl MeasureSpec {
    pub fn new(kind: SpecKind) -> Self {
        MeasureSpec {
            kind,
            symmetry_center: None,
        }
    }

    pub fn gaussian(mean: Vec<f64>, cov_factor: Option<Vec<Vec<f64>>>) -> Self {
        Self::new(SpecKind::Gaussian { mean, cov_factor })
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self::new(SpecKind::UniformBox { lo, hi })
    }

    pub fn atoms(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Self {
        Self::new(SpecKind::Atoms { points, weights })
    }

    pub fn with_symmetry_center(mut self, z: Vec<f64>) -> Self {
        self.symmetry_center = Some(z);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: MeasureSpec = serde_json::from_str(s)?;
        spec.dim()?;
        Ok(spec)
    }

    /// Validates the spec and returns its dimension.
    pub fn dim(&self) -> Result<usize> {
        let dim = match &self.kind {
            SpecKind::Gaussian { mean, cov_factor } => {
                let n = mean.len();
                nonzero(n)?;
                finite(mean)?;
                if let Some(l) = cov_factor {
                    full_rank(l, n, "covariance factor")?;
                }
                n
            }
            SpecKind::UniformBox { lo, hi } => {
                let n = lo.len();
                nonzero(n)?;
                same(n, hi.len())?;
                finite(lo)?;
                finite(hi)?;
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::DegenerateSpec("box needs lo < hi on every axis".into()));
                }
                n
            }
            SpecKind::UniformSimplex { vertices } => {
                let n = vertices.first().map_or(0, Vec::len);
                nonzero(n)?;
                same(n + 1, vertices.len())?;
                let edges: Vec<Vec<f64>> = vertices[1..]
                    .iter()
                    .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect())
                    .collect();
                for v in vertices {
                    same(n, v.len())?;
                    finite(v)?;
                }
                full_rank(&edges, n, "simplex")?;
                n
            }
            SpecKind::Atoms { points, weights } => {
                let n = points.first().map_or(0, Vec::len);
                nonzero(n)?;
                for p in points {
                    same(n, p.len())?;
                    finite(p)?;
                }
                if let Some(w) = weights {
                    same(points.len(), w.len())?;
                    positive(w)?;
                }
                n
            }
            SpecKind::Mixture { components } => {
                let first = components
                    .first()
                    .ok_or_else(|| Error::DegenerateSpec("empty mixture".into()))?;
                let n = first.spec.dim()?;
                for c in components {
                    same(n, c.spec.dim()?)?;
                }
                positive(&components.iter().map(|c| c.weight).collect::<Vec<_>>())?;
                n
            }
        };
        if let Some(z) = &self.symmetry_center {
            same(dim, z.len())?;
            finite(z)?;
        }
        Ok(dim)
    }
}

fn nonzero(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::DegenerateSpec("zero-dimensional spec".into()))
    } else {
        Ok(())
    }
}

fn same(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DegenerateSpec(format!("expected {expected} entries, got {got}")))
    }
}

fn finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateSpec("non-finite value".into()))
    }
}

fn positive(w: &[f64]) -> Result<()> {
    if w.iter().all(|x| x.is_finite() && *x > 0.0) {
        Ok(())
    } else {
        Err(Error::DegenerateSpec("weights must be positive".into()))
    }
}

fn full_rank(rows: &[Vec<f64>], n: usize, what: &str) -> Result<()> {
    same(n, rows.len())?;
    for r in rows {
        same(n, r.len())?;
        finite(r)?;
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let sv = m.svd(false, false).singular_values;
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::DegenerateSpec(format!("{what} is rank deficient")));
    }
    Ok(())
}

pub(crate) fn sample_points(spec: &MeasureSpec, n: usize, seed: u64, stream: u64) -> Result<Vec<Vec<f64>>> {
    spec.dim()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    if let SpecKind::Atoms { points, weights } = &spec.kind {
        return Ok(systematic(points, weights.as_deref(), n, &mut rng));
    }
    Ok((0..n).map(|_| draw(&spec.kind, &mut rng)).collect())
}

fn systematic(points: &[Vec<f64>], weights: Option<&[f64]>, n: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; points.len()], <[f64]>::to_vec);
    let total: f64 = w.iter().sum();
    let u: f64 = rng.random();
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    let mut cum = w[0];
    for i in 0..n {
        let pos = (i as f64 + u) / n as f64 * total;
        while pos >= cum && j + 1 < points.len() {
            j += 1;
            cum += w[j];
        }
        out.push(points[j].clone());
    }
    out
}

fn categorical(weights: &[f64], rng: &mut ChaCha20Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if target < cum {
            return i;
        }
    }
    weights.len() - 1
}

fn draw(kind: &SpecKind, rng: &mut ChaCha20Rng) -> Vec<f64> {
    match kind {
        SpecKind::Gaussian { mean, cov_factor } => {
            let z: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(rng)).collect();
            match cov_factor {
                None => mean.iter().zip(&z).map(|(m, z)| m + z).collect(),
                Some(l) => mean
                    .iter()
                    .zip(l)
                    .map(|(m, row)| m + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())
                    .collect(),
            }
        }
        SpecKind::UniformBox { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(a, b)| a + rng.random::<f64>() * (b - a))
            .collect(),
        SpecKind::UniformSimplex { vertices } => {
            let e: Vec<f64> = (0..vertices.len()).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            let mut p = vec![0.0; vertices[0].len()];
            for (v, ei) in vertices.iter().zip(&e) {
                for (pj, vj) in p.iter_mut().zip(v) {
                    *pj += ei / s * vj;
                }
            }
            p
        }
        SpecKind::Atoms { points, weights } => {
            let i = match weights {
                Some(w) => categorical(w, rng),
                None => rng.random_range(0..points.len()),
            };
            points[i].clone()
        }
        SpecKind::Mixture { components } => {
            let w: Vec<f64> = components.iter().map(|c| c.weight).collect();
            draw(&components[categorical(&w, rng)].spec.kind, rng)
        }
    }
}
