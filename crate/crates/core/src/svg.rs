//! SVG rendering of planar partitions.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::HalfSpace;
use crate::partition::PartitionTree;

const SIZE: f64 = 600.0;
const FILLS: [&str; 4] = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072"];

/// Sutherland-Hodgman clip of a convex polygon against `{normal . y >= offset}`.
fn clip(poly: &[[f64; 2]], h: &HalfSpace) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (h.eval(&a), h.eval(&b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[0] - self.lo[0]) * self.scale,
            SIZE - (p[1] - self.lo[1]) * self.scale,
        )
    }
}

fn fmt(x: f64) -> String {
    format!("{:.3}", x)
}

/// Draws the four regions (clipped to the data bounding box grown by 20%),
/// the boundary rays from the center, the points and the center, all in
/// ambient coordinates.
pub fn render(tree: &PartitionTree, points: &[Vec<f64>]) -> Result<String> {
    if tree.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "plotting needs a planar partition, got dimension {}",
            tree.dim()
        )));
    }
    if let Some(p) = points.iter().find(|p| p.len() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.len(),
        });
    }
    let system = tree.system();
    let c = tree.center_ambient();
    let mut lo = [c[0], c[1]];
    let mut hi = lo;
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let half = (0..2)
        .map(|k| 0.6 * (hi[k] - lo[k]))
        .fold(0.0, f64::max)
        .max(1.0);
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let lo = [mid[0] - half, mid[1] - half];
    let hi = [mid[0] + half, mid[1] + half];
    let frame = Frame {
        lo,
        scale: SIZE / (2.0 * half),
    };

    // clip in system coordinates, where the regions live; the map is affine
    let to2 = |v: Vec<f64>| [v[0], v[1]];
    let bbox = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
        .iter()
        .map(|p| system.to_coords(p).map(to2))
        .collect::<Result<Vec<_>>>()?;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = SIZE
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for (i, (eps, region)) in tree.regions().iter().enumerate() {
        let mut poly = bbox.clone();
        for h in region.halfspace_rep()? {
            poly = clip(&poly, &h);
        }
        if poly.len() < 3 {
            continue;
        }
        let pts = poly
            .iter()
            .map(|q| {
                let a = system.to_point(q)?;
                let (x, y) = frame.map([a[0], a[1]]);
                Ok(format!("{},{}", fmt(x), fmt(y)))
            })
            .collect::<Result<Vec<_>>>()?
            .join(" ");
        let _ = writeln!(
            svg,
            r#"<polygon points="{pts}" fill="{}" fill-opacity="0.6" stroke="none"><title>{eps}</title></polygon>"#,
            FILLS[i % FILLS.len()]
        );
    }

    // region boundaries: the lines through the center along u^1 and e^2
    let reach = 4.0 * half;
    let (cx, cy) = frame.map([c[0], c[1]]);
    for u in [tree.root().axis.clone(), vec![0.0, 1.0]] {
        let d = system.vector_to_ambient(&u)?;
        let norm = d[0].hypot(d[1]);
        for t in [-1.0, 1.0] {
            let end = [c[0] + t * reach * d[0] / norm, c[1] + t * reach * d[1] / norm];
            let (x, y) = frame.map(end);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333" stroke-width="1.5"/>"##,
                fmt(cx),
                fmt(cy),
                fmt(x),
                fmt(y)
            );
        }
    }

    for p in points {
        let (x, y) = frame.map([p[0], p[1]]);
        let _ = writeln!(
            svg,
            r##"<circle cx="{}" cy="{}" r="2" fill="#1f4e79"/>"##,
            fmt(x),
            fmt(y)
        );
    }
    let _ = writeln!(
        svg,
        r##"<circle cx="{}" cy="{}" r="5" fill="#d62728" stroke="#000000"><title>center {:?},{:?}</title></circle>"##,
        fmt(cx),
        fmt(cy),
        c[0],
        c[1]
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
