use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::histogram::GridHistogram;
use crate::error::{Error, Result};

/// One projected transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub player: String,
    pub game: u32,
    pub ply: u16,
    pub x: f64,
    pub y: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_points_csv(path: &Path, rows: &[PointRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_points_csv(path: &Path) -> Result<Vec<PointRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub fn histogram_json(h: &GridHistogram) -> serde_json::Value {
    serde_json::json!({
        "bounds": {
            "xmin": h.bounds.xmin,
            "xmax": h.bounds.xmax,
            "ymin": h.bounds.ymin,
            "ymax": h.bounds.ymax,
        },
        "grid": h.grid,
        "count": h.count,
        "bins": h.bins,
    })
}

pub fn write_histogram_json(path: &Path, h: &GridHistogram) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer_pretty(f, &histogram_json(h))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::style::{build_histogram, GridBounds};

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        let rows = vec![
            PointRow { player: "a".into(), game: 3, ply: 7, x: 0.125, y: -2.5 },
            PointRow { player: "b, c".into(), game: 0, ply: 1, x: 1e-3, y: 4.0 },
        ];
        write_points_csv(&p, &rows).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("player,game,ply,x,y\n"));
        assert_eq!(read_points_csv(&p).unwrap(), rows);
    }

    #[test]
    fn histogram_json_fields() {
        let b = GridBounds::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let h = build_histogram(&[(0.0, 0.0)], &b, 15).unwrap();
        let v = histogram_json(&h);
        assert_eq!(v["grid"], 15);
        assert_eq!(v["bins"].as_array().unwrap().len(), 225);
        assert_eq!(v["bins"][0], 1.0);
    }
}
