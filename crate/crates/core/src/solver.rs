//! Recursive center computation.
//!
//! In dimension 1 the center is the weighted median. In dimension `m >= 2` the
//! cloud is cut at the median `alpha` of its first coordinate, and for a
//! normalized axis `v = (1, v_2, ..., v_m)` both halves are projected along
//! `v` onto `{x_1 = alpha}`. The residual `T(v) = x_low(v) - x_high(v)` of the
//! two projected centers is driven to zero one component at a time: the first
//! `k` components of `T` depend only on `v_2..v_{k+1}`, and `T_k` tends to
//! `+inf` / `-inf` as `v_k` does, so each component is a scalar root-finding
//! problem solved by bracketing and bisection.
//!
//! Component `k` is evaluated on clouds truncated to their first `k + 1`
//! coordinates. The prefix dependence of `T` is therefore exact, bit for bit.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CoordinateSystem;
use crate::measures::{project_measure, split_at_median, weighted_quantile, WeightedPointCloud};
use crate::partition::{PartitionMeta, PartitionNode, PartitionTree};

/// Hard ceiling on `max_dim`: work grows like `2^n` regions and worse for the solves.
pub const DIM_CEILING: usize = 12;

const MEMO_CAPACITY: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Bisection stops once the bracket is this narrow (axis-coordinate units).
    pub root_tol: f64,
    /// Bisection stops once `|T_k|` is this small (center-coordinate units).
    pub residual_tol: f64,
    pub initial_half_width: f64,
    pub growth: f64,
    pub max_expansions: usize,
    pub max_iterations: usize,
    pub max_dim: usize,
    /// Cache projected-cloud centers by content digest.
    pub memoize: bool,
    /// Re-evaluate earlier residual components after each axis component is fixed.
    pub check_prefix: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            root_tol: 1e-10,
            residual_tol: 1e-9,
            initial_half_width: 1.0,
            growth: 2.0,
            max_expansions: 60,
            max_iterations: 200,
            max_dim: 8,
            memoize: false,
            check_prefix: false,
        }
    }
}

impl SolverConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SolverConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive and finite")))
            }
        };
        positive("root_tol", self.root_tol)?;
        positive("residual_tol", self.residual_tol)?;
        positive("initial_half_width", self.initial_half_width)?;
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidInput("growth must exceed 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        if self.max_dim == 0 || self.max_dim > DIM_CEILING {
            return Err(Error::InvalidInput(format!("max_dim must be in 1..={DIM_CEILING}")));
        }
        Ok(())
    }

    /// The larger of the two solver tolerances.
    pub fn tolerance(&self) -> f64 {
        self.root_tol.max(self.residual_tol)
    }
}

/// How one axis component was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSolve {
    /// Index of the axis component (the first component is fixed to 1).
    pub index: usize,
    pub bracket: [f64; 2],
    pub expansions: usize,
    pub iterations: usize,
    /// `|T_index|` at the returned root.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSolveTrace {
    pub coordinates: Vec<CoordinateSolve>,
    /// `max |x_low - x_high|` at the final axis.
    pub center_gap: f64,
}

impl AxisSolveTrace {
    pub fn max_residual(&self) -> f64 {
        self.coordinates.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectOutcome {
    pub root: f64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub expansions: usize,
    pub iterations: usize,
}

/// Finds a zero of `g` near `t0`: widens `[t0 - h, t0 + h]` geometrically until
/// `g` changes sign, then bisects until the bracket is narrower than
/// `root_tol` or `|g| <= residual_tol`. No monotonicity is assumed; the first
/// sign-changing bracket wins.
pub fn bracket_and_bisect<F>(mut g: F, t0: f64, cfg: &SolverConfig) -> Result<BisectOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut eval = |t: f64| -> Result<f64> {
        let v = g(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(t))
        }
    };
    let tol = cfg.residual_tol;
    let mut h = cfg.initial_half_width;
    let mut expansions = 0;
    let (mut lo, mut hi, mut g_lo) = loop {
        let (lo, hi) = (t0 - h, t0 + h);
        let (g_lo, g_hi) = (eval(lo)?, eval(hi)?);
        for (t, v) in [(lo, g_lo), (hi, g_hi)] {
            if v.abs() <= tol {
                return Ok(BisectOutcome {
                    root: t,
                    value: v,
                    lo,
                    hi,
                    expansions,
                    iterations: 0,
                });
            }
        }
        if (g_lo < 0.0) != (g_hi < 0.0) {
            break (lo, hi, g_lo);
        }
        if expansions == cfg.max_expansions {
            return Err(Error::BracketNotFound {
                lo,
                hi,
                g_lo,
                g_hi,
                expansions,
            });
        }
        expansions += 1;
        h *= cfg.growth;
    };
    for iterations in 1..=cfg.max_iterations {
        let mid = lo + 0.5 * (hi - lo);
        let g_mid = eval(mid)?;
        if g_mid.abs() <= tol || hi - lo <= cfg.root_tol || mid <= lo || mid >= hi {
            return Ok(BisectOutcome {
                root: mid,
                value: g_mid,
                lo,
                hi,
                expansions,
                iterations,
            });
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        lo,
        hi,
    })
}

/// Residual of the axis map at one axis, with the two projected centers.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisResidual {
    /// `x_low - x_high`, componentwise.
    pub residual: Vec<f64>,
    pub low_center: Vec<f64>,
    pub high_center: Vec<f64>,
}

struct Solved {
    center: Vec<f64>,
    node: Option<PartitionNode>,
    trace: Option<AxisSolveTrace>,
}

/// Center solver with optional memoization and fork-join parallelism. Results
/// are bit-identical whichever options are enabled.
pub struct Solver {
    cfg: SolverConfig,
    parallel: bool,
    memo: Option<Mutex<HashMap<[u8; 32], Vec<f64>>>>,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let memo = cfg.memoize.then(|| Mutex::new(HashMap::new()));
        Ok(Solver {
            cfg,
            parallel: false,
            memo,
        })
    }

    /// Runs the two child computations at each axis on the rayon pool.
    pub fn with_parallelism(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn check_input(&self, cloud: &WeightedPointCloud) -> Result<()> {
        if cloud.is_empty() {
            return Err(Error::Empty);
        }
        if cloud.dim() > self.cfg.max_dim {
            return Err(Error::DimensionTooLarge {
                dim: cloud.dim(),
                max: self.cfg.max_dim,
            });
        }
        Ok(())
    }

    /// The center of `cloud`, in its own coordinates.
    pub fn center(&self, cloud: &WeightedPointCloud) -> Result<Vec<f64>> {
        self.check_input(cloud)?;
        self.center_of(cloud)
    }

    /// The center together with the full partition tree.
    pub fn partition(&self, cloud: &WeightedPointCloud, system: &CoordinateSystem) -> Result<PartitionTree> {
        self.check_input(cloud)?;
        if system.dim() != cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                got: cloud.dim(),
            });
        }
        let solved = self.solve(cloud, true)?;
        let meta = PartitionMeta {
            config: self.cfg.clone(),
            points: cloud.len(),
            total_mass: cloud.total_mass(),
            input_digest: hex(&cloud.digest()),
            root_trace: solved.trace,
        };
        let root = solved.node.expect("tree requested");
        PartitionTree::new(system.clone(), solved.center, root, meta)
    }

    /// `T(v)` for the two halves of a median split at `alpha`; `axis[0]` must be 1.
    pub fn evaluate_axis_residual(
        &self,
        low: &WeightedPointCloud,
        high: &WeightedPointCloud,
        alpha: f64,
        axis: &[f64],
    ) -> Result<AxisResidual> {
        self.residual(low, high, alpha, axis)
    }

    /// Solves `T(v) = 0` component by component; returns the normalized axis.
    pub fn triangular_axis_solve(
        &self,
        low: &WeightedPointCloud,
        high: &WeightedPointCloud,
        alpha: f64,
    ) -> Result<(Vec<f64>, AxisSolveTrace)> {
        self.axis_solve(low, high, alpha).map(|(axis, trace, _)| (axis, trace))
    }

    fn axis_solve(
        &self,
        low: &WeightedPointCloud,
        high: &WeightedPointCloud,
        alpha: f64,
    ) -> Result<(Vec<f64>, AxisSolveTrace, AxisResidual)> {
        let m = low.dim();
        if m < 2 || high.dim() != m {
            return Err(Error::InvalidInput(
                "axis solve needs two halves of dimension at least 2".into(),
            ));
        }
        let mut axis = vec![0.0; m];
        axis[0] = 1.0;
        let mut coordinates = Vec::with_capacity(m - 1);
        for k in 1..m {
            let (low_k, high_k) = (low.truncate(k + 1), high.truncate(k + 1));
            let mut trial = axis[..=k].to_vec();
            let out = bracket_and_bisect(
                |t| {
                    trial[k] = t;
                    let r = self.residual(&low_k, &high_k, alpha, &trial)?;
                    Ok(r.residual[k - 1])
                },
                0.0,
                &self.cfg,
            )?;
            axis[k] = out.root;
            coordinates.push(CoordinateSolve {
                index: k,
                bracket: [out.lo, out.hi],
                expansions: out.expansions,
                iterations: out.iterations,
                residual: out.value.abs(),
            });
            if self.cfg.check_prefix && k > 1 {
                let r = self.residual(&low_k, &high_k, alpha, &axis[..=k])?;
                for (j, c) in coordinates.iter().enumerate().take(k - 1) {
                    let value = r.residual[j].abs();
                    if value > self.cfg.residual_tol.max(c.residual) + 1e-12 {
                        return Err(Error::PrefixDrift { index: j + 1, value });
                    }
                }
            }
        }
        let r = self.residual(low, high, alpha, &axis)?;
        let center_gap = r.residual.iter().fold(0.0_f64, |g, x| g.max(x.abs()));
        Ok((
            axis,
            AxisSolveTrace {
                coordinates,
                center_gap,
            },
            r,
        ))
    }

    fn join<A, B>(&self, a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B)
    where
        A: Send,
        B: Send,
    {
        if self.parallel {
            rayon::join(a, b)
        } else {
            (a(), b())
        }
    }

    fn residual(
        &self,
        low: &WeightedPointCloud,
        high: &WeightedPointCloud,
        alpha: f64,
        axis: &[f64],
    ) -> Result<AxisResidual> {
        let lo = project_measure(low, alpha, axis)?;
        let hi = project_measure(high, alpha, axis)?;
        let (low_center, high_center) = self.join(|| self.center_of(&lo), || self.center_of(&hi));
        let (low_center, high_center) = (low_center?, high_center?);
        let residual = low_center.iter().zip(&high_center).map(|(a, b)| a - b).collect();
        Ok(AxisResidual {
            residual,
            low_center,
            high_center,
        })
    }

    fn center_of(&self, cloud: &WeightedPointCloud) -> Result<Vec<f64>> {
        if cloud.dim() == 1 {
            return Ok(vec![weighted_quantile(&cloud.coordinate(0), cloud.weights(), 0.5)?]);
        }
        let Some(memo) = &self.memo else {
            return Ok(self.solve(cloud, false)?.center);
        };
        let key = cloud.digest();
        if let Some(c) = memo.lock().expect("memo lock").get(&key) {
            return Ok(c.clone());
        }
        let center = self.solve(cloud, false)?.center;
        let mut map = memo.lock().expect("memo lock");
        if map.len() >= MEMO_CAPACITY {
            map.clear();
        }
        map.insert(key, center.clone());
        Ok(center)
    }

    fn solve(&self, cloud: &WeightedPointCloud, want_tree: bool) -> Result<Solved> {
        let m = cloud.dim();
        if m == 1 {
            let alpha = weighted_quantile(&cloud.coordinate(0), cloud.weights(), 0.5)?;
            return Ok(Solved {
                center: vec![alpha],
                node: want_tree.then(|| PartitionNode::leaf(vec![1.0])),
                trace: None,
            });
        }
        let split = split_at_median(cloud, 0)?;
        let (axis, trace, final_residual) = self.axis_solve(&split.low, &split.high, split.alpha)?;

        let mut center = Vec::with_capacity(m);
        center.push(split.alpha);
        let node = if want_tree {
            let lo = project_measure(&split.low, split.alpha, &axis)?;
            let hi = project_measure(&split.high, split.alpha, &axis)?;
            let (a, b) = self.join(|| self.solve(&lo, true), || self.solve(&hi, true));
            let (a, b) = (a?, b?);
            center.extend(a.center.iter().zip(&b.center).map(|(x, y)| 0.5 * (x + y)));
            Some(PartitionNode::internal(
                axis,
                a.node.expect("tree requested").embedded(),
                b.node.expect("tree requested").embedded(),
            ))
        } else {
            let r = final_residual;
            center.extend(r.low_center.iter().zip(&r.high_center).map(|(x, y)| 0.5 * (x + y)));
            None
        };
        Ok(Solved {
            center,
            node,
            trace: Some(trace),
        })
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the equipartition tree of `cloud` (given in `system` coordinates).
pub fn compute_center_partition(
    cloud: &WeightedPointCloud,
    system: &CoordinateSystem,
    cfg: &SolverConfig,
) -> Result<PartitionTree> {
    Solver::new(cfg.clone())?.partition(cloud, system)
}

/// The center of `cloud` in its own coordinates, without building the tree.
pub fn compute_center(cloud: &WeightedPointCloud, cfg: &SolverConfig) -> Result<Vec<f64>> {
    Solver::new(cfg.clone())?.center(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::split_at_median;

    fn pts(v: &[[f64; 2]]) -> WeightedPointCloud {
        WeightedPointCloud::from_points(2, &v.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn skew() -> WeightedPointCloud {
        pts(&[[0.0, 0.0], [1.0, 2.0], [2.0, 1.0], [3.0, 3.0]])
    }

    fn square() -> WeightedPointCloud {
        pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    }

    #[test]
    fn bisect_linear_and_cubic() {
        let cfg = SolverConfig::default();
        let out = bracket_and_bisect(|t| Ok(2.0 * t - 1.0), 0.0, &cfg).unwrap();
        assert_eq!(out.root, 0.5);
        let out = bracket_and_bisect(|t| Ok(t * t * t), 3.0, &cfg).unwrap();
        assert!(out.root.abs() <= cfg.root_tol.max(1e-3), "{}", out.root);
        assert!(out.value.abs() <= cfg.residual_tol || out.hi - out.lo <= cfg.root_tol);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        let cfg = SolverConfig {
            max_expansions: 5,
            ..SolverConfig::default()
        };
        let err = bracket_and_bisect(|t| Ok(t * t + 1.0), 0.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::BracketNotFound { expansions: 5, .. }));
        let err = bracket_and_bisect(|_| Ok(f64::NAN), 0.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn bisect_respects_iteration_cap() {
        let cfg = SolverConfig {
            max_iterations: 3,
            ..SolverConfig::default()
        };
        let err = bracket_and_bisect(|t| Ok(t - 0.123456), 0.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn one_dimensional_center_is_median() {
        let c = WeightedPointCloud::from_points(1, &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(compute_center(&c, &SolverConfig::default()).unwrap(), vec![1.5]);
    }

    #[test]
    fn residual_on_skew_fixture_is_two_v_minus_one() {
        let s = split_at_median(&skew(), 0).unwrap();
        assert_eq!(s.alpha, 1.5);
        let solver = Solver::new(SolverConfig::default()).unwrap();
        for (v, t) in [(0.0, -1.0), (0.5, 0.0), (1.0, 1.0)] {
            let r = solver.evaluate_axis_residual(&s.low, &s.high, s.alpha, &[1.0, v]).unwrap();
            assert_eq!(r.residual, vec![t]);
        }
    }

    #[test]
    fn axis_solve_fixtures() {
        let solver = Solver::new(SolverConfig {
            residual_tol: 1e-10,
            ..SolverConfig::default()
        })
        .unwrap();
        let s = split_at_median(&square(), 0).unwrap();
        let (axis, trace) = solver.triangular_axis_solve(&s.low, &s.high, s.alpha).unwrap();
        assert_eq!(axis, vec![1.0, 0.0]);
        assert_eq!(trace.max_residual(), 0.0);

        let s = split_at_median(&skew(), 0).unwrap();
        let (axis, trace) = solver.triangular_axis_solve(&s.low, &s.high, s.alpha).unwrap();
        assert!((axis[1] - 0.5).abs() < 1e-10);
        assert!(trace.max_residual() <= 1e-10);
    }

    #[test]
    fn centers_of_fixtures() {
        let cfg = SolverConfig::default();
        let c = compute_center(&square(), &cfg).unwrap();
        assert_eq!(c, vec![0.5, 0.5]);
        let c = compute_center(&skew(), &cfg).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-9 && (c[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn reflection_symmetric_3d_cloud_has_coordinate_axis() {
        // closed under (x, y, z) -> (x, -y, -z)
        let base = [[0.3, 1.0, 2.0], [1.7, -0.4, 0.9], [2.2, 0.8, -1.3], [-0.5, 2.5, 0.2]];
        let mut v = Vec::new();
        for p in base {
            v.push(p.to_vec());
            v.push(vec![p[0], -p[1], -p[2]]);
        }
        let c = WeightedPointCloud::from_points(3, &v).unwrap();
        let s = split_at_median(&c, 0).unwrap();
        let solver = Solver::new(SolverConfig::default()).unwrap();
        let (axis, _) = solver.triangular_axis_solve(&s.low, &s.high, s.alpha).unwrap();
        assert_eq!(axis[0], 1.0);
        assert!(axis[1].abs() < 1e-9 && axis[2].abs() < 1e-9, "{axis:?}");
    }

    #[test]
    fn dimension_limits_enforced() {
        let c = WeightedPointCloud::from_points(3, &[vec![0.0; 3]]).unwrap();
        let cfg = SolverConfig {
            max_dim: 2,
            ..SolverConfig::default()
        };
        assert!(matches!(compute_center(&c, &cfg), Err(Error::DimensionTooLarge { .. })));
        assert!(SolverConfig {
            max_dim: 13,
            ..SolverConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg = SolverConfig::from_json(r#"{"residual_tol": 1e-8}"#).unwrap();
        assert_eq!(cfg.residual_tol, 1e-8);
        assert_eq!(cfg.root_tol, 1e-10);
        assert_eq!(cfg.max_dim, 8);
        assert!(SolverConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(SolverConfig::from_json(r#"{"root_tol": -1}"#).is_err());
    }
}
