//! Property checks and independent oracles for computed partitions.
//!
//! Every check is a pure function of its inputs and seed. Avoidance and depth
//! hold structurally for any valid tree, so a failure there is a bug rather
//! than sampling noise.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{dot, max_abs, HalfSpace, SignSequence};
use crate::measures::{halfspace_mass, project_measure, regularize, symmetrize, MeasureSpec, WeightedPointCloud};
use crate::partition::PartitionTree;
use crate::solver::{compute_center, SolverConfig};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub stats: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CheckReport {
    fn new(name: &str, seed: Option<u64>) -> Self {
        CheckReport {
            name: name.to_string(),
            pass: false,
            stats: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            seed,
        }
    }

    fn stat(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.stats.insert(key.to_string(), v.into());
        self
    }

    fn tol(mut self, key: &str, v: f64) -> Self {
        self.tolerances.insert(key.to_string(), v);
        self
    }

    fn finish(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }
}

/// A set of reports with an overall verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

impl VerificationReport {
    pub fn new(checks: Vec<CheckReport>) -> Self {
        VerificationReport {
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_unit(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn check_tree_cloud(tree: &PartitionTree, cloud: &WeightedPointCloud) -> Result<()> {
    if tree.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: tree.dim(),
            got: cloud.dim(),
        });
    }
    if cloud.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Mass of every full region, by point location (each point counted once).
pub fn region_masses(tree: &PartitionTree, cloud: &WeightedPointCloud) -> Result<BTreeMap<SignSequence, f64>> {
    check_tree_cloud(tree, cloud)?;
    let mut masses: BTreeMap<SignSequence, f64> = SignSequence::all(tree.dim()).map(|e| (e, 0.0)).collect();
    for (p, w) in cloud.points().zip(cloud.weights()) {
        *masses.get_mut(&tree.region_of_point(p)?).expect("all regions listed") += w;
    }
    Ok(masses)
}

/// Every region should carry `2^-n` of the mass, within relative `tol`.
pub fn check_equipartition(tree: &PartitionTree, cloud: &WeightedPointCloud, tol: f64) -> Result<CheckReport> {
    let masses = region_masses(tree, cloud)?;
    let target = cloud.total_mass() / masses.len() as f64;
    let deviation = masses
        .values()
        .map(|m| (m - target).abs() / target)
        .fold(0.0, f64::max);
    let per_region: BTreeMap<String, f64> = masses.iter().map(|(e, m)| (e.to_string(), *m)).collect();
    Ok(CheckReport::new("equipartition", None)
        .stat("target", target)
        .stat("masses", json!(per_region))
        .stat("max_relative_deviation", deviation)
        .tol("relative", tol)
        .finish(deviation <= tol))
}

/// Every prefix region `P(eps_1..eps_k)` should carry `2^-k` of the mass.
pub fn check_prefix_masses(tree: &PartitionTree, cloud: &WeightedPointCloud, tol: f64) -> Result<CheckReport> {
    let masses = region_masses(tree, cloud)?;
    let total = cloud.total_mass();
    let n = tree.dim();
    let mut worst = 0.0_f64;
    let mut per_level = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut prefix: BTreeMap<SignSequence, f64> = BTreeMap::new();
        for (e, m) in &masses {
            *prefix.entry(e.prefix(k)).or_insert(0.0) += m;
        }
        let target = total / (1u64 << k) as f64;
        let dev = prefix
            .values()
            .map(|m| (m - target).abs() / target)
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        per_level.push(dev);
    }
    Ok(CheckReport::new("prefix_masses", None)
        .stat("max_relative_deviation_by_level", per_level)
        .stat("max_relative_deviation", worst)
        .tol("relative", tol)
        .finish(worst <= tol))
}

/// Certifies the hyperplane `{normal . y = offset}`: orients it so the closed
/// half-space contains the center and returns a region inside that half-space.
pub fn certify_hyperplane(tree: &PartitionTree, normal: Vec<f64>, offset: f64) -> Result<(SignSequence, HalfSpace, bool)> {
    let mut h = HalfSpace::new(normal, offset)?;
    if !h.contains(tree.center()) {
        h = h.flipped();
    }
    let eps = tree.witness_region(&h)?;
    let ok = h.contains_region(&tree.region(&eps)?)?;
    Ok((eps, h, ok))
}

/// Random hyperplanes (unit normal, through a random data point, or through a
/// perturbed center when no cloud is given) must each miss some region.
pub fn check_avoidance(
    tree: &PartitionTree,
    cloud: Option<&WeightedPointCloud>,
    count: usize,
    seed: u64,
) -> Result<CheckReport> {
    if let Some(c) = cloud {
        check_tree_cloud(tree, c)?;
    }
    let n = tree.dim();
    let mut rng = rng_for(seed);
    let mut certified = 0usize;
    for _ in 0..count {
        let normal = random_unit(&mut rng, n);
        let anchor: Vec<f64> = match cloud {
            Some(c) => c.point(rng.random_range(0..c.len())).to_vec(),
            None => tree
                .center()
                .iter()
                .map(|x| x + rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        let offset = dot(&normal, &anchor);
        let (_, _, ok) = certify_hyperplane(tree, normal, offset)?;
        certified += usize::from(ok);
    }
    Ok(CheckReport::new("avoidance", Some(seed))
        .stat("hyperplanes", count)
        .stat("certified", certified)
        .finish(certified == count))
}

/// Every half-space containing the center carries at least `2^-n` of the mass.
/// Half of the samples pass through the center, the rest through random data
/// points (oriented to contain the center).
pub fn check_depth(tree: &PartitionTree, cloud: &WeightedPointCloud, count: usize, seed: u64) -> Result<CheckReport> {
    check_tree_cloud(tree, cloud)?;
    let n = tree.dim();
    let total = cloud.total_mass();
    let floor = total / (1u64 << n) as f64;
    let slack = 1e-6;
    let mut rng = rng_for(seed);
    let mut min_ratio = f64::INFINITY;
    let mut failures = 0usize;
    for i in 0..count {
        let normal = random_unit(&mut rng, n);
        let anchor = if i % 2 == 0 {
            tree.center().to_vec()
        } else {
            cloud.point(rng.random_range(0..cloud.len())).to_vec()
        };
        let mut h = HalfSpace::new(normal.clone(), dot(&normal, &anchor))?;
        if !h.contains(tree.center()) {
            h = h.flipped();
        }
        let mass = halfspace_mass(cloud, &h)?;
        min_ratio = min_ratio.min(mass / floor);
        if mass < floor * (1.0 - slack) {
            failures += 1;
        }
    }
    Ok(CheckReport::new("depth", Some(seed))
        .stat("halfspaces", count)
        .stat("failures", failures)
        .stat("min_mass_over_floor", if count == 0 { Value::Null } else { json!(min_ratio) })
        .tol("relative", slack)
        .finish(failures == 0))
}

/// The center of a measure symmetric about `z` is `z`. With `symmetrize_first`
/// the cloud is first replaced by `cloud + reflection`; `tol` defaults to
/// `50 residual_tol`.
pub fn check_symmetry(
    cloud: &WeightedPointCloud,
    z: &[f64],
    cfg: &SolverConfig,
    symmetrize_first: bool,
    tol: Option<f64>,
) -> Result<CheckReport> {
    let input = if symmetrize_first {
        symmetrize(cloud, z)?
    } else {
        cloud.clone()
    };
    if z.len() != input.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim(),
            got: z.len(),
        });
    }
    let center = compute_center(&input, cfg)?;
    let dist = center.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let tol = tol.unwrap_or(50.0 * cfg.residual_tol);
    Ok(CheckReport::new("symmetry", None)
        .stat("center", center)
        .stat("distance", dist)
        .tol("max_abs", tol)
        .finish(dist <= tol))
}

/// Applying a shear that moves only coordinates after `k`, by amounts that
/// depend only on the first `k` coordinates, must not move the first `k`
/// coordinates of the center. `shear` maps the first `k` coordinates to the
/// displacement of the remaining `n - k`.
pub fn check_prefix_dependence(
    cloud: &WeightedPointCloud,
    k: usize,
    shear: &dyn Fn(&[f64]) -> Vec<f64>,
    cfg: &SolverConfig,
) -> Result<CheckReport> {
    let n = cloud.dim();
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("prefix length {k} must be in 1..={n}")));
    }
    let sheared = cloud.map_points(|p| {
        let d = shear(&p[..k]);
        let mut q = p.to_vec();
        for (qj, dj) in q[k..].iter_mut().zip(d.iter().chain(std::iter::repeat(&0.0))) {
            *qj += dj;
        }
        q
    })?;
    let before = compute_center(cloud, cfg)?;
    let after = compute_center(&sheared, cfg)?;
    let dist = before[..k]
        .iter()
        .zip(&after[..k])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tol = 10.0 * cfg.tolerance();
    Ok(CheckReport::new("prefix_dependence", None)
        .stat("before", before)
        .stat("after", after)
        .stat("prefix_distance", dist)
        .tol("max_abs", tol)
        .finish(dist <= tol))
}

/// Settings for [`check_continuity`].
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityParams {
    /// Perturbation sizes; `0` means the unperturbed cloud.
    pub eps: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Distances must stay below `rate * sqrt(eps) * extent`.
    pub rate: f64,
}

/// Centers of `cloud + eps gamma` should approach the center of `cloud` as
/// `eps` decreases: distances are non-increasing (within `10 residual_tol`)
/// and bounded by `rate sqrt(eps)` times the data extent. The same `gamma`
/// samples are reused for every `eps`.
pub fn check_continuity(
    cloud: &WeightedPointCloud,
    gamma: &MeasureSpec,
    params: &ContinuityParams,
    cfg: &SolverConfig,
) -> Result<CheckReport> {
    let base = compute_center(cloud, cfg)?;
    let scale = cloud.extent().max(f64::MIN_POSITIVE);
    let mut eps = params.eps.clone();
    if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidInput("perturbation sizes must be non-negative".into()));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut distances = Vec::with_capacity(eps.len());
    for &e in &eps {
        let d = if e == 0.0 {
            0.0
        } else {
            let mixed = regularize(cloud, gamma, 1.0 / e, params.samples, params.seed)?;
            let c = compute_center(&mixed, cfg)?;
            c.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        distances.push(d);
    }
    let slack = 10.0 * cfg.residual_tol;
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + slack);
    let bounded = eps
        .iter()
        .zip(&distances)
        .all(|(e, d)| *d <= params.rate * e.sqrt() * scale + slack);
    Ok(CheckReport::new("continuity", Some(params.seed))
        .stat("eps", eps)
        .stat("distances", distances)
        .stat("extent", scale)
        .stat("monotone", monotone)
        .stat("bounded", bounded)
        .tol("monotone_slack", slack)
        .tol("rate", params.rate)
        .finish(monotone && bounded))
}

/// Lifts the half-space `A = {a . y >= c}` of the split hyperplane
/// `{x_1 = alpha}` along `base_axis + t (0, direction)` for each step `t`, and
/// records the mass of the lifted set `{x_1 >= alpha, projection in A}`. The
/// masses must be non-increasing when the form increases along `direction`,
/// non-decreasing when it decreases, and constant when it is flat.
pub fn check_monotone_lift(
    cloud: &WeightedPointCloud,
    alpha: f64,
    region: &HalfSpace,
    base_axis: &[f64],
    direction: &[f64],
    steps: &[f64],
) -> Result<CheckReport> {
    let n = cloud.dim();
    if n < 2 || region.dim() != n - 1 || direction.len() != n - 1 || base_axis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: base_axis.len(),
        });
    }
    let high_idx: Vec<usize> = (0..cloud.len()).filter(|&i| cloud.point(i)[0] >= alpha).collect();
    let coords = high_idx.iter().flat_map(|&i| cloud.point(i).iter().copied()).collect();
    let weights = high_idx.iter().map(|&i| cloud.weight(i)).collect();
    let ids = high_idx.iter().map(|&i| cloud.id(i)).collect();
    let masses: Vec<f64> = if high_idx.is_empty() {
        vec![0.0; steps.len()]
    } else {
        let high = WeightedPointCloud::from_parts(n, coords, weights, ids)?;
        steps
            .iter()
            .map(|t| {
                let mut axis = base_axis.to_vec();
                for (a, d) in axis[1..].iter_mut().zip(direction) {
                    *a += t * d;
                }
                let proj = project_measure(&high, alpha, &axis)?;
                halfspace_mass(&proj, region)
            })
            .collect::<Result<_>>()?
    };
    let slope = region.linear(direction);
    let ordered_steps = steps.windows(2).all(|w| w[0] <= w[1]);
    let pass = ordered_steps
        && masses.windows(2).all(|w| {
            if slope > 0.0 {
                w[1] <= w[0]
            } else if slope < 0.0 {
                w[1] >= w[0]
            } else {
                w[1] == w[0]
            }
        });
    Ok(CheckReport::new("monotone_lift", None)
        .stat("masses", masses.clone())
        .stat("final_mass", masses.last().copied().unwrap_or(0.0))
        .stat("slope", slope)
        .finish(pass))
}

/// H-representation and V-representation membership must agree on random
/// samples away from facets, and every region's generators must be exactly
/// sub-diagonal.
pub fn check_representations(tree: &PartitionTree, samples: usize, seed: u64) -> Result<CheckReport> {
    let n = tree.dim();
    let mut rng = rng_for(seed);
    let center = tree.center();
    let spread = 1.0 + max_abs(center);
    let mut disagreements = 0usize;
    let mut skipped = 0usize;
    let mut sub_diagonal = true;
    for region in tree.regions().values() {
        for (i, g) in region.basis().generators().iter().enumerate() {
            sub_diagonal &= g[..i].iter().all(|&x| x == 0.0) && g[i] == 1.0;
        }
        let facets = region.halfspace_rep()?;
        for _ in 0..samples {
            let p: Vec<f64> = center
                .iter()
                .map(|x| x + spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let fuzz = 1e-9 * (1.0 + max_abs(&p) + max_abs(center));
            let near_facet = facets.iter().any(|h| {
                let scale = dot(h.normal(), h.normal()).sqrt();
                (h.eval(&p) / scale).abs() <= fuzz
            });
            if near_facet {
                skipped += 1;
                continue;
            }
            let h_member = facets.iter().all(|h| h.contains(&p));
            if h_member != region.contains(&p, 0.0)? {
                disagreements += 1;
            }
        }
    }
    Ok(CheckReport::new("representations", Some(seed))
        .stat("regions", 1u64 << n)
        .stat("samples_per_region", samples)
        .stat("disagreements", disagreements)
        .stat("skipped_near_facet", skipped)
        .stat("sub_diagonal", sub_diagonal)
        .tol("facet_fuzz", 1e-9)
        .finish(disagreements == 0 && sub_diagonal))
}

/// Brute-force center of a 2-D cloud, independent of the solver: the first
/// coordinate is the weighted median, the second is found by scanning the
/// axis slope on successively refined grids for the sign change of the
/// difference between the medians of the two projected halves.
pub fn oracle_center_2d(cloud: &WeightedPointCloud) -> Result<[f64; 2]> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: cloud.dim(),
        });
    }
    if cloud.is_empty() {
        return Err(Error::Empty);
    }
    let xs = cloud.coordinate(0);
    let ys = cloud.coordinate(1);
    let ws = cloud.weights();
    let alpha = brute_median(&xs, ws);

    // halves with ties at alpha shared out by ascending id
    let total: f64 = ws.iter().sum();
    let slack = 1e-12 * total;
    let mut need = 0.5 * total - xs.iter().zip(ws).filter(|(x, _)| **x < alpha).map(|(_, w)| w).sum::<f64>();
    let mut low: Vec<(f64, f64, f64)> = Vec::new();
    let mut high: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..xs.len() {
        let (x, y, w) = (xs[i], ys[i], ws[i]);
        if x < alpha {
            low.push((x, y, w));
        } else if x > alpha {
            high.push((x, y, w));
        } else if need <= slack {
            high.push((x, y, w));
        } else if w <= need + slack {
            low.push((x, y, w));
            need -= w;
        } else {
            low.push((x, y, need));
            high.push((x, y, w - need));
            need = 0.0;
        }
    }
    let projected_median = |side: &[(f64, f64, f64)], s: f64| {
        let v: Vec<f64> = side.iter().map(|(x, y, _)| y - (x - alpha) * s).collect();
        let w: Vec<f64> = side.iter().map(|t| t.2).collect();
        brute_median(&v, &w)
    };
    let gap = |s: f64| projected_median(&low, s) - projected_median(&high, s);

    let mut r = 1.0;
    while !(gap(-r) <= 0.0 && gap(r) >= 0.0) {
        r *= 2.0;
        if r > 1e18 {
            return Err(Error::BracketNotFound {
                lo: -r,
                hi: r,
                g_lo: gap(-r),
                g_hi: gap(r),
                expansions: 60,
            });
        }
    }
    let (mut a, mut b) = (-r, r);
    const CELLS: usize = 64;
    for _ in 0..40 {
        if b - a <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        let step = (b - a) / CELLS as f64;
        let mut prev = a;
        for i in 1..=CELLS {
            let s = if i == CELLS { b } else { a + step * i as f64 };
            if gap(s) >= 0.0 {
                a = prev;
                b = s;
                break;
            }
            prev = s;
        }
    }
    let s = 0.5 * (a + b);
    let y = 0.5 * (projected_median(&low, s) + projected_median(&high, s));
    Ok([alpha, y])
}

/// Midpoint of the weighted median interval, by direct evaluation of the
/// cumulative weight at every candidate value.
fn brute_median(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let half = 0.5 * total;
    let slack = 1e-12 * total;
    let mut candidates = values.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let cumulative = |t: f64| -> f64 {
        values
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v <= t)
            .map(|(_, w)| w)
            .sum()
    };
    for (i, &t) in candidates.iter().enumerate() {
        let w = cumulative(t);
        if w >= half - slack {
            let upper = if (w - half).abs() <= slack && i + 1 < candidates.len() {
                candidates[i + 1]
            } else {
                t
            };
            return 0.5 * (t + upper);
        }
    }
    *candidates.last().expect("non-empty")
}
