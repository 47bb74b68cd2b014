//! CSV point clouds: a header `x1,...,xn` with an optional trailing `w`
//! column of weights (missing weights are 1). Ids are row indices.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::measures::WeightedPointCloud;

/// Raw rows as read from a CSV file, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTable {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PointTable {
    pub fn to_cloud(&self) -> Result<WeightedPointCloud> {
        WeightedPointCloud::from_weighted_points(self.dim, &self.points, &self.weights)
    }
}

fn parse_header(header: &csv::StringRecord) -> Result<(usize, bool)> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let weighted = names.last() == Some(&"w");
    let dim = names.len() - usize::from(weighted);
    if dim == 0 {
        return Err(Error::Csv("header needs at least one coordinate column".into()));
    }
    for (i, name) in names[..dim].iter().enumerate() {
        if *name != format!("x{}", i + 1) {
            return Err(Error::Csv(format!(
                "column {} is named {name:?}, expected \"x{}\"",
                i + 1,
                i + 1
            )));
        }
    }
    Ok((dim, weighted))
}

pub fn read_points<R: Read>(reader: R) -> Result<PointTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let (dim, weighted) = parse_header(rdr.headers()?)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> Result<f64> {
            let field = rec.get(j).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| Error::Csv(format!("row {}: cannot parse {field:?} as a number", row + 1)))
        };
        let point = (0..dim).map(parse).collect::<Result<Vec<f64>>>()?;
        let w = if weighted { parse(dim)? } else { 1.0 };
        points.push(point);
        weights.push(w);
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    Ok(PointTable { dim, points, weights })
}

pub fn read_points_file(path: &Path) -> Result<PointTable> {
    read_points(std::fs::File::open(path)?)
}

/// Writes points (and weights when any differs from 1) with shortest
/// round-trip float formatting.
pub fn write_points<W: Write>(writer: W, dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<()> {
    let weighted = weights.iter().any(|&w| w != 1.0);
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if weighted {
        header.push("w".into());
    }
    wtr.write_record(&header)?;
    for (p, w) in points.iter().zip(weights) {
        let mut rec: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        if weighted {
            rec.push(format!("{w:?}"));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_cloud<W: Write>(writer: W, cloud: &WeightedPointCloud) -> Result<()> {
    let points: Vec<Vec<f64>> = cloud.points().map(<[f64]>::to_vec).collect();
    write_points(writer, cloud.dim(), &points, cloud.weights())
}
