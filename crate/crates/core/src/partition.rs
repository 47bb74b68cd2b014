//! The partition tree: a shared center plus one normalized axis per node.
//!
//! A node at depth `k` (root at depth 0) splits along `{y_{k+1} = x_{k+1}}`
//! where `x` is the global center, so split values are never stored. Its axis
//! has `k` leading zeros followed by a 1. The region indexed by `eps` has apex
//! `x` and generators `eps_i u^i`, with `u^i` the axis of the node reached by
//! the prefix `eps_1..eps_{i-1}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{default_tolerance, ConeRegion, CoordinateSystem, HalfSpace, SignSequence, SubDiagonalBasis};
use crate::solver::{AxisSolveTrace, SolverConfig};

pub const SCHEMA: &str = "yaoyao-partition/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionNode {
    pub axis: Vec<f64>,
    pub neg: Option<Box<PartitionNode>>,
    pub pos: Option<Box<PartitionNode>>,
}

impl PartitionNode {
    pub fn leaf(axis: Vec<f64>) -> Self {
        PartitionNode {
            axis,
            neg: None,
            pos: None,
        }
    }

    pub fn internal(axis: Vec<f64>, neg: PartitionNode, pos: PartitionNode) -> Self {
        PartitionNode {
            axis,
            neg: Some(Box::new(neg)),
            pos: Some(Box::new(pos)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.neg.is_none() && self.pos.is_none()
    }

    pub fn child(&self, sign: i8) -> Option<&PartitionNode> {
        if sign < 0 {
            self.neg.as_deref()
        } else {
            self.pos.as_deref()
        }
    }

    /// The same subtree seen from one dimension up: every axis gains a leading zero.
    pub fn embedded(self) -> PartitionNode {
        let mut axis = Vec::with_capacity(self.axis.len() + 1);
        axis.push(0.0);
        axis.extend(self.axis);
        PartitionNode {
            axis,
            neg: self.neg.map(|n| Box::new(n.embedded())),
            pos: self.pos.map(|n| Box::new(n.embedded())),
        }
    }

    fn validate(&self, depth: usize, n: usize) -> Result<()> {
        if self.axis.len() != n {
            return Err(Error::Schema(format!(
                "axis at depth {depth} has {} components, expected {n}",
                self.axis.len()
            )));
        }
        if self.axis.iter().any(|x| !x.is_finite()) {
            return Err(Error::Schema(format!("non-finite axis at depth {depth}")));
        }
        if self.axis[..depth].iter().any(|&x| x != 0.0) || self.axis[depth] != 1.0 {
            return Err(Error::Schema(format!(
                "axis at depth {depth} is not normalized and sub-diagonal: {:?}",
                self.axis
            )));
        }
        match (&self.neg, &self.pos, depth + 1 < n) {
            (Some(a), Some(b), true) => {
                a.validate(depth + 1, n)?;
                b.validate(depth + 1, n)
            }
            (None, None, false) => Ok(()),
            (_, _, true) => Err(Error::Schema(format!("node at depth {depth} is missing a child"))),
            (_, _, false) => Err(Error::Schema(format!(
                "node at depth {depth} should be a leaf in dimension {n}"
            ))),
        }
    }
}

/// Provenance recorded alongside a computed tree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionMeta {
    pub config: SolverConfig,
    pub points: usize,
    pub total_mass: f64,
    /// SHA-256 of the input cloud (coordinates, weights, ids).
    pub input_digest: String,
    pub root_trace: Option<AxisSolveTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTree {
    system: CoordinateSystem,
    center: Vec<f64>,
    root: PartitionNode,
    meta: PartitionMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    schema: String,
    dim: usize,
    system: CoordinateSystem,
    center: Vec<f64>,
    root: PartitionNode,
    #[serde(default)]
    meta: PartitionMeta,
}

impl PartitionTree {
    pub fn new(
        system: CoordinateSystem,
        center: Vec<f64>,
        root: PartitionNode,
        meta: PartitionMeta,
    ) -> Result<Self> {
        let n = system.dim();
        if center.len() != n {
            return Err(Error::Schema(format!("center has {} coordinates, expected {n}", center.len())));
        }
        if center.iter().any(|x| !x.is_finite()) {
            return Err(Error::Schema("non-finite center".into()));
        }
        root.validate(0, n)?;
        Ok(PartitionTree {
            system,
            center,
            root,
            meta,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// The center in system coordinates.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn center_ambient(&self) -> Vec<f64> {
        self.system
            .to_point(&self.center)
            .expect("center dimension matches system")
    }

    pub fn system(&self) -> &CoordinateSystem {
        &self.system
    }

    pub fn root(&self) -> &PartitionNode {
        &self.root
    }

    pub fn meta(&self) -> &PartitionMeta {
        &self.meta
    }

    /// The node reached from the root by following `prefix`.
    pub fn node_at(&self, prefix: &[i8]) -> Option<&PartitionNode> {
        prefix.iter().try_fold(&self.root, |node, &s| node.child(s))
    }

    fn cone(&self, eps: &SignSequence) -> Result<ConeRegion> {
        let n = self.dim();
        if eps.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: eps.len(),
            });
        }
        let s = eps.as_slice();
        let gens = (0..s.len())
            .map(|i| {
                self.node_at(&s[..i])
                    .map(|node| node.axis.clone())
                    .ok_or_else(|| Error::Schema("path leaves the tree".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        ConeRegion::new(self.center.clone(), SubDiagonalBasis::new(n, gens)?, eps.clone())
    }

    /// The partial region `P(eps)` for `|eps| < n`: it has lineality rank
    /// `n - |eps|` and is the union of its two one-longer extensions.
    pub fn prefix_region(&self, eps: &SignSequence) -> Result<ConeRegion> {
        if eps.len() >= self.dim() {
            return Err(Error::Precondition(format!(
                "prefix of length {} in dimension {}",
                eps.len(),
                self.dim()
            )));
        }
        self.cone(eps)
    }

    /// The full region for a sign sequence of length `n`.
    pub fn region(&self, eps: &SignSequence) -> Result<ConeRegion> {
        if eps.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: eps.len(),
            });
        }
        self.cone(eps)
    }

    /// All `2^n` regions, keyed by sign sequence.
    pub fn regions(&self) -> BTreeMap<SignSequence, ConeRegion> {
        SignSequence::all(self.dim())
            .map(|eps| {
                let r = self.cone(&eps).expect("validated tree");
                (eps, r)
            })
            .collect()
    }

    /// A region contained in the closed half-space `h` (in system coordinates),
    /// which must contain the center: at each node take `+1` iff the form is
    /// non-decreasing along the node's axis.
    pub fn witness_region(&self, h: &HalfSpace) -> Result<SignSequence> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h.dim(),
            });
        }
        if !h.contains(&self.center) {
            return Err(Error::Precondition("the half-space does not contain the center".into()));
        }
        let mut eps = SignSequence::empty();
        let mut node = Some(&self.root);
        while let Some(nd) = node {
            let up = h.linear(&nd.axis) >= 0.0;
            eps.push(up);
            node = nd.child(if up { 1 } else { -1 });
        }
        Ok(eps)
    }

    /// Point location with the default scale-aware tolerance.
    pub fn region_of_point(&self, p: &[f64]) -> Result<SignSequence> {
        self.region_of_point_with_tol(p, default_tolerance(&self.center, p))
    }

    /// The lexicographically smallest (`-1 < +1`) sign sequence whose region
    /// contains `p` within `tol`.
    pub fn region_of_point_with_tol(&self, p: &[f64], tol: f64) -> Result<SignSequence> {
        let n = self.dim();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        // a region contains p iff every prefix does, and one of the two
        // extensions of a containing prefix always contains p
        let mut eps = SignSequence::empty();
        for _ in 0..n {
            let mut found = false;
            for up in [false, true] {
                let mut trial = eps.clone();
                trial.push(up);
                if self.cone(&trial)?.contains(p, tol)? {
                    eps = trial;
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::NoContainingRegion);
            }
        }
        Ok(eps)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TreeDoc {
            schema: SCHEMA.to_string(),
            dim: self.dim(),
            system: self.system.clone(),
            center: self.center.clone(),
            root: self.root.clone(),
            meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema != SCHEMA {
            return Err(Error::Schema(format!(
                "unsupported schema {:?} (expected {SCHEMA})",
                doc.schema
            )));
        }
        if doc.dim != doc.system.dim() {
            return Err(Error::Schema(format!(
                "dim {} does not match the {}-dimensional system",
                doc.dim,
                doc.system.dim()
            )));
        }
        PartitionTree::new(doc.system, doc.center, doc.root, doc.meta)
    }
}
