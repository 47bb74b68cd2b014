//! Finite weighted point clouds standing in for measures on `R^n`.
//!
//! Points are stored in the coordinates of a coordinate system, in ascending
//! id order; every mass summation walks that order so results do not depend on
//! how a computation was scheduled.

mod spec;

pub use spec::{MeasureSpec, SpecKind, WeightedComponent};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CoordinateSystem, HalfSpace};

/// Relative slack used when comparing cumulative weights against a quantile level.
pub const MASS_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    ids: Vec<u64>,
}

impl WeightedPointCloud {
    /// Builds a cloud from row-major coordinates; ids must be strictly ascending.
    pub fn from_parts(dim: usize, coords: Vec<f64>, weights: Vec<f64>, ids: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * weights.len(),
                got: coords.len(),
            });
        }
        if ids.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: ids.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("weight {w} is not positive and finite")));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("ids must be unique and ascending".into()));
        }
        Ok(WeightedPointCloud {
            dim,
            coords,
            weights,
            ids,
        })
    }

    /// Unit-weight cloud with ids `0..N`.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        Self::from_weighted_points(dim, points, &vec![1.0; points.len()])
    }

    pub fn from_weighted_points(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_parts(dim, coords, weights.to_vec(), (0..points.len() as u64).collect())
    }

    /// Converts ambient points into `system` coordinates.
    pub fn from_ambient(system: &CoordinateSystem, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        let coords: Vec<Vec<f64>> = points
            .iter()
            .map(|p| system.to_coords(p))
            .collect::<Result<_>>()?;
        Self::from_weighted_points(system.dim(), &coords, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.points().map(|p| p[k]).collect()
    }

    /// Keeps the first `m` coordinates of every point.
    pub fn truncate(&self, m: usize) -> WeightedPointCloud {
        assert!(m >= 1 && m <= self.dim, "truncate to {m} of {}", self.dim);
        if m == self.dim {
            return self.clone();
        }
        let coords = self.points().flat_map(|p| p[..m].iter().copied()).collect();
        WeightedPointCloud {
            dim: m,
            coords,
            weights: self.weights.clone(),
            ids: self.ids.clone(),
        }
    }

    /// Applies `f` to every point, keeping weights and ids.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<WeightedPointCloud> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            let q = f(p);
            if q.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: q.len(),
                });
            }
            coords.extend(q);
        }
        Self::from_parts(self.dim, coords, self.weights.clone(), self.ids.clone())
    }

    /// Same points and weights under fresh ids given by `relabel(old index)`.
    pub fn relabeled(&self, relabel: &[u64]) -> Result<WeightedPointCloud> {
        if relabel.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: relabel.len(),
            });
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| relabel[i]);
        let coords = order.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let weights = order.iter().map(|&i| self.weights[i]).collect();
        let ids = order.iter().map(|&i| relabel[i]).collect();
        Self::from_parts(self.dim, coords, weights, ids)
    }

    /// Union of two clouds with disjoint ids.
    pub fn merged(&self, other: &WeightedPointCloud) -> Result<WeightedPointCloud> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (mut i, mut j) = (0, 0);
        let mut coords = Vec::with_capacity(self.coords.len() + other.coords.len());
        let mut weights = Vec::with_capacity(self.len() + other.len());
        let mut ids = Vec::with_capacity(self.len() + other.len());
        while i < self.len() || j < other.len() {
            let take_self = j >= other.len() || (i < self.len() && self.ids[i] < other.ids[j]);
            let (src, k) = if take_self { (self, &mut i) } else { (other, &mut j) };
            coords.extend_from_slice(src.point(*k));
            weights.push(src.weights[*k]);
            ids.push(src.ids[*k]);
            *k += 1;
        }
        Self::from_parts(self.dim, coords, weights, ids)
    }

    pub fn max_id(&self) -> Option<u64> {
        self.ids.last().copied()
    }

    /// SHA-256 over dimension, ids, coordinate bits and weight bits.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.len() as u64).to_le_bytes());
        for i in 0..self.len() {
            h.update(self.ids[i].to_le_bytes());
            h.update(self.weights[i].to_bits().to_le_bytes());
            for x in self.point(i) {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Largest coordinate range over all axes (a crude data scale).
    pub fn extent(&self) -> f64 {
        (0..self.dim)
            .map(|k| {
                let (lo, hi) = self
                    .points()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[k]), hi.max(p[k]))
                    });
                if lo.is_finite() { hi - lo } else { 0.0 }
            })
            .fold(0.0, f64::max)
    }
}

/// Quantile of a weighted sample: the midpoint of the interval
/// `[inf{t : W(t) >= q M}, sup{t : W(t-) <= q M}]` where `W` is the cumulative
/// weight and `M` the total.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {q} not in (0, 1)")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    let level = q * total;
    let slack = MASS_RTOL * total;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut cum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let v = values[order[i]];
        while i < order.len() && values[order[i]] == v {
            cum += weights[order[i]];
            i += 1;
        }
        if cum >= level - slack {
            // the median interval extends to the next distinct value only when
            // the mass at or below v is exactly the level
            let upper = if (cum - level).abs() <= slack && i < order.len() {
                values[order[i]]
            } else {
                v
            };
            return Ok(0.5 * (v + upper));
        }
    }
    Ok(values[order[order.len() - 1]])
}

/// A cloud cut in two halves of equal mass by the hyperplane `{x_k = alpha}`.
#[derive(Clone, Debug)]
pub struct MedianSplit {
    pub alpha: f64,
    pub low: WeightedPointCloud,
    pub high: WeightedPointCloud,
}

/// Splits at the weighted median of coordinate `k`. Points at `alpha` are
/// assigned to the low half by ascending id until it holds half the mass; at
/// most one point is shared, with its weight divided between the halves.
pub fn split_at_median(cloud: &WeightedPointCloud, k: usize) -> Result<MedianSplit> {
    if cloud.is_empty() {
        return Err(Error::Empty);
    }
    if k >= cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: k + 1,
        });
    }
    let values = cloud.coordinate(k);
    let alpha = weighted_quantile(&values, cloud.weights(), 0.5)?;
    let total = cloud.total_mass();
    let slack = MASS_RTOL * total;
    let below: f64 = values
        .iter()
        .zip(cloud.weights())
        .filter(|(x, _)| **x < alpha)
        .map(|(_, w)| w)
        .sum();
    let mut need = 0.5 * total - below;

    let dim = cloud.dim();
    let mut low = Builder::with_capacity(dim, cloud.len() / 2 + 1);
    let mut high = Builder::with_capacity(dim, cloud.len() / 2 + 1);
    for (i, &x) in values.iter().enumerate() {
        let (p, w, id) = (cloud.point(i), cloud.weight(i), cloud.id(i));
        if x < alpha {
            low.push(p, w, id);
        } else if x > alpha {
            high.push(p, w, id);
        } else if need <= slack {
            high.push(p, w, id);
        } else if w <= need + slack {
            low.push(p, w, id);
            need -= w;
        } else {
            low.push(p, need, id);
            high.push(p, w - need, id);
            need = 0.0;
        }
    }
    Ok(MedianSplit {
        alpha,
        low: low.finish(dim)?,
        high: high.finish(dim)?,
    })
}

struct Builder {
    coords: Vec<f64>,
    weights: Vec<f64>,
    ids: Vec<u64>,
}

impl Builder {
    fn with_capacity(dim: usize, n: usize) -> Self {
        Builder {
            coords: Vec::with_capacity(dim * n),
            weights: Vec::with_capacity(n),
            ids: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, p: &[f64], w: f64, id: u64) {
        self.coords.extend_from_slice(p);
        self.weights.push(w);
        self.ids.push(id);
    }

    fn finish(self, dim: usize) -> Result<WeightedPointCloud> {
        WeightedPointCloud::from_parts(dim, self.coords, self.weights, self.ids)
    }
}

/// Projects along `axis` (with `axis[0] == 1`) onto `{x_1 = alpha}` and drops
/// the first coordinate: `x -> x - (x_1 - alpha) axis`.
pub fn project_measure(side: &WeightedPointCloud, alpha: f64, axis: &[f64]) -> Result<WeightedPointCloud> {
    let n = side.dim();
    if n < 2 {
        return Err(Error::InvalidInput("projection needs dimension at least 2".into()));
    }
    if axis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: axis.len(),
        });
    }
    if axis[0] != 1.0 {
        return Err(Error::InvalidInput(format!(
            "axis must be normalized (first component 1, got {})",
            axis[0]
        )));
    }
    let mut coords = Vec::with_capacity(side.len() * (n - 1));
    for p in side.points() {
        let t = p[0] - alpha;
        coords.extend(p[1..].iter().zip(&axis[1..]).map(|(x, a)| x - t * a));
    }
    WeightedPointCloud::from_parts(n - 1, coords, side.weights.clone(), side.ids.clone())
}

/// Total weight of the points with `normal . x >= offset`, summed in id order.
pub fn halfspace_mass(cloud: &WeightedPointCloud, h: &HalfSpace) -> Result<f64> {
    if h.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: h.dim(),
        });
    }
    Ok(cloud
        .points()
        .zip(cloud.weights())
        .filter(|(p, _)| h.contains(p))
        .map(|(_, w)| w)
        .sum())
}

/// The mixture `cloud + (1/p) gamma`, with `gamma` represented by `m` samples
/// carrying total extra mass `mass(cloud) / p`. New points get ids after the
/// cloud's largest id.
pub fn regularize(
    cloud: &WeightedPointCloud,
    gamma: &MeasureSpec,
    p: f64,
    m: usize,
    seed: u64,
) -> Result<WeightedPointCloud> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("regularization parameter {p} must be positive")));
    }
    if m == 0 {
        return Err(Error::InvalidInput("need at least one regularizing sample".into()));
    }
    if gamma.dim()? != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: gamma.dim()?,
        });
    }
    let extra = spec::sample_points(gamma, m, seed, spec::REGULARIZE_STREAM)?;
    let w = cloud.total_mass() / (p * m as f64);
    let first = cloud.max_id().map_or(0, |i| i + 1);
    let coords = extra.into_iter().flatten().collect();
    let add = WeightedPointCloud::from_parts(
        cloud.dim(),
        coords,
        vec![w; m],
        (first..first + m as u64).collect(),
    )?;
    cloud.merged(&add)
}

/// `cloud` together with its reflection `x -> 2z - x`, all weights halved.
/// Point `i` keeps slot `2i`; its mirror image takes slot `2i + 1`.
pub fn symmetrize(cloud: &WeightedPointCloud, z: &[f64]) -> Result<WeightedPointCloud> {
    if z.len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: z.len(),
        });
    }
    let mut b = Builder::with_capacity(cloud.dim(), 2 * cloud.len());
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let w = 0.5 * cloud.weight(i);
        let mirror: Vec<f64> = p.iter().zip(z).map(|(x, c)| 2.0 * c - x).collect();
        b.push(p, w, 2 * i as u64);
        b.push(&mirror, w, 2 * i as u64 + 1);
    }
    b.finish(cloud.dim())
}

/// Draws `n` unit-weight points from `spec` (see [`MeasureSpec`] for the generator).
pub fn sample(spec: &MeasureSpec, n: usize, seed: u64) -> Result<WeightedPointCloud> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let dim = spec.dim()?;
    let pts = spec::sample_points(spec, n, seed, spec::SAMPLE_STREAM)?;
    WeightedPointCloud::from_points(dim, &pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud1(xs: &[f64]) -> WeightedPointCloud {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        WeightedPointCloud::from_points(1, &pts).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(weighted_quantile(&[0.0, 1.0], &[1.0, 1.0], 0.5).unwrap(), 0.5);
        assert_eq!(weighted_quantile(&[1.0, 2.0, 3.0], &[1.0; 3], 0.5).unwrap(), 2.0);
        assert_eq!(weighted_quantile(&[0.0, 0.0, 0.0, 1.0], &[1.0; 4], 0.5).unwrap(), 0.0);
        assert_eq!(weighted_quantile(&[3.0, 0.0, 2.0, 1.0], &[1.0; 4], 0.25).unwrap(), 0.5);
        assert_eq!(weighted_quantile(&[0.0, 10.0], &[3.0, 1.0], 0.5).unwrap(), 0.0);
        assert!(matches!(weighted_quantile(&[], &[], 0.5), Err(Error::Empty)));
        assert!(weighted_quantile(&[1.0], &[1.0], 1.0).is_err());
        assert!(weighted_quantile(&[1.0], &[0.0], 0.5).is_err());
    }

    #[test]
    fn split_examples() {
        let s = split_at_median(&cloud1(&[0.0, 1.0, 2.0, 3.0]), 0).unwrap();
        assert_eq!(s.alpha, 1.5);
        assert_eq!(s.low.total_mass(), 2.0);
        assert_eq!(s.high.total_mass(), 2.0);
        assert_eq!(s.low.ids(), &[0, 1]);
        assert_eq!(s.high.ids(), &[2, 3]);

        let s = split_at_median(&cloud1(&[0.0, 0.0, 0.0, 1.0]), 0).unwrap();
        assert_eq!(s.alpha, 0.0);
        assert_eq!(s.low.ids(), &[0, 1]);
        assert_eq!(s.high.ids(), &[2, 3]);
        assert_eq!(s.low.total_mass(), 2.0);
        assert_eq!(s.high.total_mass(), 2.0);

        let single = WeightedPointCloud::from_weighted_points(1, &[vec![4.0]], &[2.0]).unwrap();
        let s = split_at_median(&single, 0).unwrap();
        assert_eq!(s.alpha, 4.0);
        assert_eq!(s.low.weights(), &[1.0]);
        assert_eq!(s.high.weights(), &[1.0]);
        assert_eq!(s.low.ids(), s.high.ids());
    }

    #[test]
    fn projection_examples() {
        let c = WeightedPointCloud::from_points(2, &[vec![3.0, 3.0], vec![0.0, 0.0]]).unwrap();
        let p = project_measure(&c, 1.5, &[1.0, 0.0]).unwrap();
        assert_eq!(p.point(0), &[3.0]);
        let p = project_measure(&c, 1.5, &[1.0, 0.5]).unwrap();
        assert_eq!(p.point(0), &[2.25]);
        assert_eq!(p.point(1), &[0.75]);
        assert_eq!(p.total_mass(), c.total_mass());
        assert!(project_measure(&cloud1(&[1.0]), 0.0, &[1.0]).is_err());
        assert!(project_measure(&c, 1.5, &[2.0, 0.5]).is_err());
    }

    #[test]
    fn halfspace_mass_examples() {
        let sq = WeightedPointCloud::from_points(
            2,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let h = HalfSpace::new(vec![1.0, 0.0], 0.5).unwrap();
        assert_eq!(halfspace_mass(&sq, &h).unwrap(), 2.0);
        let all = HalfSpace::new(vec![1.0, 0.0], -1e300).unwrap();
        assert_eq!(halfspace_mass(&sq, &all).unwrap(), 4.0);
        let none = HalfSpace::new(vec![1.0, 0.0], 1e300).unwrap();
        assert_eq!(halfspace_mass(&sq, &none).unwrap(), 0.0);
    }

    #[test]
    fn symmetrize_example() {
        let c = WeightedPointCloud::from_points(2, &[vec![0.0, 0.0]]).unwrap();
        let s = symmetrize(&c, &[1.0, 1.0]).unwrap();
        assert_eq!(s.point(0), &[0.0, 0.0]);
        assert_eq!(s.point(1), &[2.0, 2.0]);
        assert_eq!(s.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn regularize_doubles_mass_at_p_one() {
        let c = cloud1(&[0.0, 1.0, 5.0]);
        let g = MeasureSpec::gaussian(vec![0.0], None);
        let r = regularize(&c, &g, 1.0, 7, 3).unwrap();
        assert_eq!(r.len(), 10);
        assert!((r.total_mass() - 6.0).abs() < 1e-12);
        assert_eq!(&r.ids()[..3], &[0, 1, 2]);
        assert!(regularize(&c, &g, 0.0, 7, 3).is_err());
    }

    #[test]
    fn merged_keeps_id_order() {
        let a = WeightedPointCloud::from_parts(1, vec![0.0, 2.0], vec![1.0, 1.0], vec![0, 4]).unwrap();
        let b = WeightedPointCloud::from_parts(1, vec![1.0], vec![1.0], vec![2]).unwrap();
        let m = a.merged(&b).unwrap();
        assert_eq!(m.ids(), &[0, 2, 4]);
        assert_eq!(m.coordinate(0), vec![0.0, 1.0, 2.0]);
        assert!(a.merged(&a).is_err());
    }

    #[test]
    fn invalid_clouds_rejected() {
        assert!(WeightedPointCloud::from_weighted_points(1, &[vec![0.0]], &[-1.0]).is_err());
        assert!(WeightedPointCloud::from_parts(1, vec![0.0, 1.0], vec![1.0, 1.0], vec![1, 1]).is_err());
        assert!(WeightedPointCloud::from_points(2, &[vec![0.0]]).is_err());
    }
}
