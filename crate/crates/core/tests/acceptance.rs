//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use yaoyao::geometry::{CoordinateSystem, SignSequence};
use yaoyao::measures::{sample, MeasureSpec, SpecKind, WeightedComponent, WeightedPointCloud};
use yaoyao::partition::PartitionTree;
use yaoyao::solver::{compute_center, compute_center_partition, SolverConfig};
use yaoyao::verify::{self, ContinuityParams};

const DELTA_V: f64 = 1e-10;
const DELTA_T: f64 = 1e-9;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg() -> SolverConfig {
    let c = SolverConfig::default();
    assert_eq!((c.root_tol, c.residual_tol), (DELTA_V, DELTA_T));
    c
}

fn tree_of(cloud: &WeightedPointCloud) -> PartitionTree {
    compute_center_partition(cloud, &CoordinateSystem::standard(cloud.dim()), &cfg()).expect("partition")
}

fn gaussian(n: usize) -> MeasureSpec {
    MeasureSpec::gaussian(vec![0.0; n], None)
}

fn correlated(n: usize) -> MeasureSpec {
    let l: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if j < i { 0.4 } else if j == i { 1.0 + 0.5 * i as f64 } else { 0.0 }).collect())
        .collect();
    MeasureSpec::gaussian((0..n).map(|i| i as f64).collect(), Some(l))
}

fn fixture_skew() -> WeightedPointCloud {
    WeightedPointCloud::from_points(2, &[vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]]).unwrap()
}

fn fixture_square() -> WeightedPointCloud {
    WeightedPointCloud::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()
}

fn skew_fixture() -> Outcome {
    let start = Instant::now();
    let tree = tree_of(&fixture_skew());
    let elapsed = start.elapsed();
    let c = tree.center();
    let axis = &tree.root().axis;
    let err = (c[0] - 1.5).abs().max((c[1] - 1.5).abs()).max((axis[0] - 1.0).abs()).max((axis[1] - 0.5).abs());
    outcome(
        err <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("center {c:?}, axis {axis:?}, max error {err:.2e}, {elapsed:.2?}"),
    )
}

fn symmetry() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut pass = true;
    for (n, z, seed) in [(2, vec![1.0, 2.0], 21u64), (3, vec![0.0, 0.0, 0.0], 22)] {
        let base = sample(&correlated(n), 300, seed).unwrap();
        let r = verify::check_symmetry(&base, &z, &cfg(), true, Some(50.0 * DELTA_T)).unwrap();
        worst = worst.max(r.stats["distance"].as_f64().unwrap());
        pass &= r.pass;
    }
    let elapsed = start.elapsed();
    outcome(
        pass && elapsed < Duration::from_secs(30),
        format!("max |center - z| = {worst:.2e} (tol {:.1e}), {elapsed:.2?}", 50.0 * DELTA_T),
    )
}

struct Trees {
    items: Vec<(WeightedPointCloud, PartitionTree)>,
    elapsed: Duration,
}

fn equipartition_trees() -> Trees {
    let start = Instant::now();
    let mut items = Vec::new();
    for n in [2usize, 3] {
        for (big, seed) in [(1024usize, 31u64), (4096, 32)] {
            let cloud = sample(&correlated(n), big, seed + n as u64).unwrap();
            let tree = tree_of(&cloud);
            items.push((cloud, tree));
        }
    }
    Trees {
        items,
        elapsed: start.elapsed(),
    }
}

fn equipartition(trees: &Trees) -> Outcome {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for (cloud, tree) in &trees.items {
        let full = verify::check_equipartition(tree, cloud, 1e-6).unwrap();
        let prefix = verify::check_prefix_masses(tree, cloud, 1e-6).unwrap();
        worst = worst
            .max(full.stats["max_relative_deviation"].as_f64().unwrap())
            .max(prefix.stats["max_relative_deviation"].as_f64().unwrap());
        pass &= full.pass && prefix.pass;
    }
    outcome(
        pass && trees.elapsed < Duration::from_secs(60),
        format!(
            "{} trees, max relative deviation {worst:.2e} (tol 1e-6), solve time {:.2?}",
            trees.items.len(),
            trees.elapsed
        ),
    )
}

fn avoidance(trees: &Trees) -> Outcome {
    let mut certified = 0;
    let mut total = 0;
    for (i, (cloud, tree)) in trees.items.iter().enumerate() {
        let r = verify::check_avoidance(tree, Some(cloud), 1000, 400 + i as u64).unwrap();
        certified += r.stats["certified"].as_u64().unwrap();
        total += 1000;
    }
    outcome(certified == total, format!("{certified}/{total} hyperplanes certified"))
}

fn depth(trees: &Trees) -> Outcome {
    let mut failures = 0;
    let mut min_ratio = f64::INFINITY;
    for (i, (cloud, tree)) in trees.items.iter().enumerate() {
        let r = verify::check_depth(tree, cloud, 1000, 500 + i as u64).unwrap();
        failures += r.stats["failures"].as_u64().unwrap();
        min_ratio = min_ratio.min(r.stats["min_mass_over_floor"].as_f64().unwrap());
    }
    outcome(
        failures == 0,
        format!("{failures} violations, min mass / 2^-n total = {min_ratio:.4}"),
    )
}

fn oracle_2d() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for seed in 0..50u64 {
        let spec = if seed % 2 == 0 { gaussian(2) } else { correlated(2) };
        let cloud = sample(&spec, 128, 600 + seed).unwrap();
        let got = compute_center(&cloud, &cfg()).unwrap();
        let want = verify::oracle_center_2d(&cloud).unwrap();
        worst = worst.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-4 && elapsed < Duration::from_secs(60),
        format!("50 clouds, max deviation {worst:.2e} (tol 1e-4), {elapsed:.2?}"),
    )
}

fn prefix_dependence() -> Outcome {
    let cloud = sample(&correlated(3), 512, 70).unwrap();
    let r = verify::check_prefix_dependence(&cloud, 2, &|p| vec![(p[0] + p[1]).sin()], &cfg()).unwrap();
    let tol = 10.0 * DELTA_V.max(DELTA_T);
    let d = r.stats["prefix_distance"].as_f64().unwrap();
    outcome(r.pass && d <= tol, format!("prefix drift {d:.2e} (tol {tol:.1e})"))
}

fn continuity() -> Outcome {
    let cloud = sample(&correlated(2), 2048, 80).unwrap();
    let component = |mean: Vec<f64>, s: f64| WeightedComponent {
        weight: 1.0,
        spec: MeasureSpec::gaussian(mean, Some(vec![vec![s, 0.0], vec![0.0, s]])),
    };
    let gamma = MeasureSpec::new(SpecKind::Mixture {
        components: vec![component(vec![3.0, 0.0], 1.0), component(vec![-1.0, 4.0], 0.5)],
    });
    let params = ContinuityParams {
        eps: vec![0.2, 0.1, 0.05, 0.0],
        samples: 2048,
        seed: 81,
        rate: 0.5,
    };
    let r = verify::check_continuity(&cloud, &gamma, &params, &cfg()).unwrap();
    outcome(
        r.pass,
        format!(
            "eps {} -> distances {} (extent {:.3}, monotone {}, bounded {})",
            r.stats["eps"], r.stats["distances"], r.stats["extent"].as_f64().unwrap(), r.stats["monotone"], r.stats["bounded"]
        ),
    )
}

fn representations() -> Outcome {
    let fixtures = [
        fixture_square(),
        fixture_skew(),
        sample(&correlated(3), 64, 90).unwrap(),
    ];
    let mut pass = true;
    let mut checked = 0;
    let mut disagreements = 0;
    for (i, c) in fixtures.iter().enumerate() {
        let tree = tree_of(c);
        let r = verify::check_representations(&tree, 10_000, 900 + i as u64).unwrap();
        pass &= r.pass;
        disagreements += r.stats["disagreements"].as_u64().unwrap();
        checked += tree.regions().len();
        for eps in SignSequence::all(tree.dim()) {
            let region = tree.region(&eps).unwrap();
            for (k, g) in region.basis().generators().iter().enumerate() {
                pass &= g[..k].iter().all(|&x| x == 0.0) && g[k] == 1.0;
            }
        }
    }
    outcome(
        pass,
        format!("{checked} regions x 10^4 samples, {disagreements} disagreements, generators sub-diagonal"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cloud = sample(&correlated(3), 2048, 100).unwrap();
    let points = dir.path().join("points.csv");
    yaoyao::io::write_cloud(std::fs::File::create(&points).unwrap(), &cloud).unwrap();
    let mut docs = Vec::new();
    for (i, threads) in ["1", "1", "2", "4"].iter().enumerate() {
        let out = dir.path().join(format!("p{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_yaoyao"))
            .args(["center", points.to_str().unwrap(), "--threads", threads, "-o", out.to_str().unwrap()])
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run {i} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        docs.push(std::fs::read(out).unwrap());
    }
    let identical = docs.windows(2).all(|w| w[0] == w[1]);
    outcome(identical, format!("{} runs (threads 1,1,2,4), identical: {identical}", docs.len()))
}

fn main() {
    let trees = equipartition_trees();
    let criteria: Vec<Criterion> = vec![
        ("1 fixture center and axis", Box::new(skew_fixture)),
        ("2 symmetry", Box::new(symmetry)),
        ("3 equipartition and prefix masses", Box::new(|| equipartition(&trees))),
        ("4 hyperplane avoidance", Box::new(|| avoidance(&trees))),
        ("5 center depth", Box::new(|| depth(&trees))),
        ("6 planar oracle agreement", Box::new(oracle_2d)),
        ("7 prefix dependence", Box::new(prefix_dependence)),
        ("8 continuity under perturbation", Box::new(continuity)),
        ("9 H/V representations", Box::new(representations)),
        ("10 determinism across thread counts", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
