//! Affine coordinate systems, half-spaces and simplicial cone regions.
//!
//! All cone data lives in the coordinates of a [`CoordinateSystem`]: there the
//! generators of a region form a unit lower-triangular matrix, so membership is
//! a forward substitution and the facet inequalities are the rows of its
//! inverse.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the condition number of a coordinate system's linear part.
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

/// Relative facet fuzz used by [`ConeRegion::contains_default`].
pub const MEMBERSHIP_RTOL: f64 = 1e-9;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `n` affine forms `l_i(x) = matrix[i] . x + offset[i]` whose joint map is one to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct CoordinateSystem {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
    inverse: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl TryFrom<SystemDoc> for CoordinateSystem {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        CoordinateSystem::new(doc.matrix, doc.offset)
    }
}

impl From<CoordinateSystem> for SystemDoc {
    fn from(s: CoordinateSystem) -> Self {
        SystemDoc {
            matrix: s.matrix,
            offset: s.offset,
        }
    }
}

impl CoordinateSystem {
    pub fn standard(n: usize) -> Self {
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        CoordinateSystem {
            inverse: matrix.clone(),
            matrix,
            offset: vec![0.0; n],
        }
    }

    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        Self::with_max_condition(matrix, offset, DEFAULT_MAX_CONDITION)
    }

    pub fn with_max_condition(
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        max_condition: f64,
    ) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        check_dim(n, offset.len())?;
        for row in &matrix {
            check_dim(n, row.len())?;
        }
        if matrix.iter().flatten().chain(&offset).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate system entry".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        let sv = m.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(cond <= max_condition) {
            return Err(Error::IllConditioned(cond));
        }
        let inv = m.try_inverse().ok_or(Error::IllConditioned(cond))?;
        let inverse = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
        Ok(CoordinateSystem {
            matrix,
            offset,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Coordinates `(l_1(x), ..., l_n(x))` of an ambient point.
    pub fn to_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| dot(row, x) + b)
            .collect())
    }

    /// Ambient point with the given coordinates.
    pub fn to_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        let shifted: Vec<f64> = y.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        Ok(self.inverse.iter().map(|row| dot(row, &shifted)).collect())
    }

    /// Ambient vector whose coordinate components are `v`.
    pub fn vector_to_ambient(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(self.inverse.iter().map(|row| dot(row, v)).collect())
    }

    /// The dual basis vector `e^i` (ambient), i.e. column `i` of the inverse.
    pub fn dual_basis(&self, i: usize) -> Vec<f64> {
        self.inverse.iter().map(|row| row[i]).collect()
    }

    /// Re-express an ambient half-space in coordinates.
    pub fn halfspace_to_coords(&self, h: &HalfSpace) -> Result<HalfSpace> {
        check_dim(self.dim(), h.dim())?;
        // a.x >= c with x = inv (y - b)  =>  (inv^T a).y >= c + (inv^T a).b
        let n = self.dim();
        let normal: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| h.normal[i] * self.inverse[i][j]).sum())
            .collect();
        let offset = h.offset + dot(&normal, &self.offset);
        HalfSpace::new(normal, offset)
    }
}

/// The closed half-space `{ y : normal . y >= offset }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() || normal.iter().all(|&a| a == 0.0) || normal.iter().any(|a| !a.is_finite())
        {
            return Err(Error::DegenerateNormal);
        }
        if offset.is_nan() {
            return Err(Error::InvalidInput("half-space offset is NaN".into()));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The affine form `l(y) = normal . y - offset`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        dot(&self.normal, y) - self.offset
    }

    /// The linear part of the form applied to a vector.
    pub fn linear(&self, v: &[f64]) -> f64 {
        dot(&self.normal, v)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        dot(&self.normal, y) >= self.offset
    }

    /// The opposite closed half-space, sharing the boundary hyperplane.
    pub fn flipped(&self) -> HalfSpace {
        HalfSpace {
            normal: self.normal.iter().map(|a| -a).collect(),
            offset: -self.offset,
        }
    }

    /// Exact certificate that a full region lies in this closed half-space:
    /// the apex is inside and no signed generator points outward.
    pub fn contains_region(&self, region: &ConeRegion) -> Result<bool> {
        check_dim(region.dim(), self.dim())?;
        if !region.is_full() {
            return Err(Error::Precondition(
                "half-space certificate needs a full region".into(),
            ));
        }
        if !self.contains(&region.apex) {
            return Ok(false);
        }
        Ok((0..region.rank()).all(|i| self.linear(&region.signed_generator(i)) >= 0.0))
    }
}

/// A sequence of signs in `{-1, +1}`; ordered lexicographically with `-1 < +1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignSequence(Vec<i8>);

impl SignSequence {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("signs must be -1 or +1".into()));
        }
        Ok(SignSequence(signs))
    }

    pub fn empty() -> Self {
        SignSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn push(&mut self, positive: bool) {
        self.0.push(if positive { 1 } else { -1 });
    }

    /// The concatenation `(self, tail)`.
    pub fn concat(&self, tail: &SignSequence) -> SignSequence {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        SignSequence(v)
    }

    pub fn prefix(&self, k: usize) -> SignSequence {
        SignSequence(self.0[..k].to_vec())
    }

    /// All `2^k` sequences of length `k` in ascending order.
    pub fn all(k: usize) -> impl Iterator<Item = SignSequence> {
        (0..1usize << k).map(move |bits| {
            SignSequence(
                (0..k)
                    .map(|i| if bits >> (k - 1 - i) & 1 == 1 { 1 } else { -1 })
                    .collect(),
            )
        })
    }
}

impl TryFrom<Vec<i8>> for SignSequence {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        SignSequence::new(v)
    }
}

impl From<SignSequence> for Vec<i8> {
    fn from(s: SignSequence) -> Self {
        s.0
    }
}

impl PartialOrd for SignSequence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignSequence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Generators `u^1..u^k` (length `n` each) with `u^i_j = 0` for `j < i` and `u^i_i = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubDiagonalBasis {
    dim: usize,
    gens: Vec<Vec<f64>>,
}

impl SubDiagonalBasis {
    pub fn new(dim: usize, gens: Vec<Vec<f64>>) -> Result<Self> {
        if gens.len() > dim {
            return Err(Error::NotSubDiagonal(format!(
                "{} generators in dimension {dim}",
                gens.len()
            )));
        }
        for (i, g) in gens.iter().enumerate() {
            check_dim(dim, g.len())?;
            if g[..i].iter().any(|&x| x != 0.0) {
                return Err(Error::NotSubDiagonal(format!(
                    "generator {} has a non-zero entry above the diagonal",
                    i + 1
                )));
            }
            if g[i] != 1.0 {
                return Err(Error::NotSubDiagonal(format!(
                    "generator {} has diagonal entry {} (expected 1)",
                    i + 1,
                    g[i]
                )));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NotSubDiagonal(format!(
                    "generator {} is not finite",
                    i + 1
                )));
            }
        }
        Ok(SubDiagonalBasis { dim, gens })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generator(&self, i: usize) -> &[f64] {
        &self.gens[i]
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.gens
    }
}

/// `apex + pos(s_1 u^1, ..., s_k u^k) + lin(e^{k+1}, ..., e^n)`, in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeRegion {
    apex: Vec<f64>,
    basis: SubDiagonalBasis,
    signs: SignSequence,
}

impl ConeRegion {
    pub fn new(apex: Vec<f64>, basis: SubDiagonalBasis, signs: SignSequence) -> Result<Self> {
        check_dim(basis.dim(), apex.len())?;
        check_dim(basis.len(), signs.len())?;
        Ok(ConeRegion { apex, basis, signs })
    }

    pub fn dim(&self) -> usize {
        self.apex.len()
    }

    /// Number of signed generators `k`.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn lineality_rank(&self) -> usize {
        self.dim() - self.rank()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn apex(&self) -> &[f64] {
        &self.apex
    }

    pub fn basis(&self) -> &SubDiagonalBasis {
        &self.basis
    }

    pub fn signs(&self) -> &SignSequence {
        &self.signs
    }

    /// `s_i u^i` (negation is exact, so certificates are sign-symmetric).
    pub fn signed_generator(&self, i: usize) -> Vec<f64> {
        let g = self.basis.generator(i);
        if self.signs.0[i] > 0 {
            g.to_vec()
        } else {
            g.iter().map(|x| -x).collect()
        }
    }

    /// Coefficients `c` with `p - apex = sum c_i s_i u^i + (lineality part)`.
    pub fn coefficients(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), p.len())?;
        let k = self.rank();
        let mut c = Vec::with_capacity(k);
        for j in 0..k {
            let mut r = p[j] - self.apex[j];
            for (i, ci) in c.iter().enumerate() {
                r -= ci * f64::from(self.signs.0[i]) * self.basis.gens[i][j];
            }
            c.push(f64::from(self.signs.0[j]) * r);
        }
        Ok(c)
    }

    /// The point `apex + sum c_i s_i u^i`.
    pub fn point_from_coefficients(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rank(), c.len())?;
        let mut p = self.apex.clone();
        for (i, ci) in c.iter().enumerate() {
            let s = f64::from(self.signs.0[i]);
            for (pj, uj) in p.iter_mut().zip(&self.basis.gens[i]) {
                *pj += ci * s * uj;
            }
        }
        Ok(p)
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool> {
        Ok(self.coefficients(p)?.iter().all(|&c| c >= -tol))
    }

    /// Scale-aware membership: `tol = 1e-9 (1 + |apex| + |p|)`.
    pub fn contains_default(&self, p: &[f64]) -> Result<bool> {
        self.contains(p, default_tolerance(&self.apex, p))
    }

    /// The `k` facet half-spaces of the region (rows of the inverse generator
    /// matrix); the `j`-th has linear part in `span(l_1..l_j)` with `l_j`
    /// coefficient `s_j`.
    pub fn halfspace_rep(&self) -> Result<Vec<HalfSpace>> {
        let n = self.dim();
        let k = self.rank();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            for (i, ri) in rows.iter().enumerate() {
                let f = f64::from(self.signs.0[i]) * self.basis.gens[i][j];
                if f != 0.0 {
                    for (a, b) in r.iter_mut().zip(ri) {
                        *a -= f * b;
                    }
                }
            }
            let s = f64::from(self.signs.0[j]);
            for a in r.iter_mut() {
                *a *= s;
            }
            rows.push(r);
        }
        rows.into_iter()
            .map(|r| {
                let c = dot(&r, &self.apex);
                HalfSpace::new(r, c).map_err(|_| {
                    Error::NotSubDiagonal("singular generator matrix".into())
                })
            })
            .collect()
    }
}

pub fn default_tolerance(apex: &[f64], p: &[f64]) -> f64 {
    MEMBERSHIP_RTOL * (1.0 + max_abs(apex) + max_abs(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(apex: &[f64], gens: &[&[f64]], signs: &[i8]) -> ConeRegion {
        let basis =
            SubDiagonalBasis::new(apex.len(), gens.iter().map(|g| g.to_vec()).collect()).unwrap();
        ConeRegion::new(apex.to_vec(), basis, SignSequence::new(signs.to_vec()).unwrap()).unwrap()
    }

    fn skew(signs: &[i8]) -> ConeRegion {
        region(&[1.5, 1.5], &[&[1.0, 0.5], &[0.0, 1.0]], signs)
    }

    #[test]
    fn coefficients_examples() {
        let id = region(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[1, 1]);
        assert_eq!(id.coefficients(&[2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        let flip = region(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[-1, 1]);
        assert_eq!(flip.coefficients(&[-2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(skew(&[1, 1]).coefficients(&[2.5, 3.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            id.coefficients(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn containment_examples() {
        let id = region(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[1, 1]);
        assert!(id.contains(&[2.0, 3.0], 0.0).unwrap());
        assert!(!id.contains(&[-1.0, 0.0], 0.0).unwrap());
        assert!(skew(&[1, 1]).contains(&[1.5, 1.5], 0.0).unwrap());
    }

    #[test]
    fn halfspace_certificate_examples() {
        let h = HalfSpace::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!(h.contains_region(&skew(&[1, 1])).unwrap());
        assert!(!h.contains_region(&skew(&[-1, 1])).unwrap());
        let h0 = HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap();
        let id = region(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[1, 1]);
        assert!(h0.contains_region(&id).unwrap());
    }

    #[test]
    fn halfspace_rep_examples() {
        let id = region(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[1, 1]);
        let hs = id.halfspace_rep().unwrap();
        assert_eq!(hs[0].normal(), &[1.0, 0.0]);
        assert_eq!(hs[0].offset(), 0.0);
        assert_eq!(hs[1].normal(), &[0.0, 1.0]);
        assert_eq!(hs[1].offset(), 0.0);

        let hs = skew(&[1, 1]).halfspace_rep().unwrap();
        assert_eq!(hs[0].normal(), &[1.0, 0.0]);
        assert_eq!(hs[0].offset(), 1.5);
        assert_eq!(hs[1].normal(), &[-0.5, 1.0]);
        assert_eq!(hs[1].offset(), 0.75);

        // c1 = -(x - 1.5); c2 = (y - 1.5) + 0.5 c1 = y - 0.5 x - 0.75
        let hs = skew(&[-1, 1]).halfspace_rep().unwrap();
        assert_eq!(hs[0].normal(), &[-1.0, 0.0]);
        assert_eq!(hs[0].offset(), -1.5);
        assert_eq!(hs[1].normal(), &[-0.5, 1.0]);
        assert_eq!(hs[1].offset(), 0.75);
        // the boundary ray apex - u^1 lies on the second facet
        assert_eq!(hs[1].eval(&[0.5, 1.0]), 0.0);
    }

    #[test]
    fn sub_diagonal_is_enforced() {
        assert!(SubDiagonalBasis::new(2, vec![vec![1.0, 0.3], vec![0.0, 1.0]]).is_ok());
        assert!(SubDiagonalBasis::new(2, vec![vec![0.9, 0.3]]).is_err());
        assert!(SubDiagonalBasis::new(2, vec![vec![1.0, 0.0], vec![0.1, 1.0]]).is_err());
        assert!(SubDiagonalBasis::new(1, vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn partial_region_has_lineality() {
        let r = region(&[0.5, 0.5], &[&[1.0, 0.0]], &[1]);
        assert_eq!(r.lineality_rank(), 1);
        assert!(r.contains(&[0.7, -100.0], 0.0).unwrap());
        assert!(!r.contains(&[0.4, 0.5], 0.0).unwrap());
        let hs = r.halfspace_rep().unwrap();
        assert_eq!(hs.len(), 1);
        assert!(matches!(h_err(&r), Err(Error::Precondition(_))));
    }

    fn h_err(r: &ConeRegion) -> Result<bool> {
        HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap().contains_region(r)
    }

    #[test]
    fn degenerate_normal_rejected() {
        assert!(matches!(HalfSpace::new(vec![0.0, 0.0], 1.0), Err(Error::DegenerateNormal)));
        assert!(HalfSpace::new(vec![f64::NAN, 1.0], 0.0).is_err());
    }

    #[test]
    fn sign_sequences_order_minus_first() {
        let all: Vec<String> = SignSequence::all(2).map(|s| s.to_string()).collect();
        assert_eq!(all, ["--", "-+", "+-", "++"]);
        assert!(SignSequence::new(vec![-1, 1]).unwrap() < SignSequence::new(vec![1, -1]).unwrap());
        assert!(SignSequence::new(vec![0]).is_err());
    }

    #[test]
    fn coordinate_round_trip() {
        let sys = CoordinateSystem::new(
            vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, -1.0], vec![1.0, 0.0, 3.0]],
            vec![0.5, -1.0, 2.0],
        )
        .unwrap();
        let x = [0.3, -7.0, 11.0];
        let y = sys.to_coords(&x).unwrap();
        let back = sys.to_point(&y).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        // dual basis: l_i(e^j) linear part = delta_ij
        for j in 0..3 {
            let e = sys.dual_basis(j);
            for i in 0..3 {
                let v = dot(&sys.matrix()[i], &e);
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_system_rejected() {
        let r = CoordinateSystem::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![0.0, 0.0]);
        assert!(matches!(r, Err(Error::IllConditioned(_))));
    }

    #[test]
    fn halfspace_maps_to_coordinates() {
        let sys = CoordinateSystem::new(vec![vec![2.0, 1.0], vec![0.0, 1.0]], vec![1.0, -1.0]).unwrap();
        let h = HalfSpace::new(vec![1.0, -2.0], 0.25).unwrap();
        let hc = sys.halfspace_to_coords(&h).unwrap();
        for x in [[0.0, 0.0], [1.0, 3.0], [-2.0, 0.5]] {
            let y = sys.to_coords(&x).unwrap();
            assert!((h.eval(&x) - hc.eval(&y)).abs() < 1e-12);
        }
    }
}
