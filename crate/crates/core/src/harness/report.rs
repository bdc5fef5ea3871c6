//! CSV/JSON tables and heatmaps. Column order is fixed; jsd values carry
//! three decimals and accuracies are percentages with one decimal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::experiment::{AccuracyTable, AlignmentTable, DivergenceMatrix, ExperimentResults};

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn jsd3(v: f64) -> String {
    format!("{v:.3}")
}

fn pct1(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn accuracy_csv(t: &AccuracyTable) -> String {
    let mut out = String::from("player");
    for v in &t.variants {
        let _ = write!(out, ",{v},{v}_std");
    }
    out.push('\n');
    for r in &t.rows {
        out.push_str(&csv_field(&r.player));
        for c in &r.cells {
            let _ = write!(out, ",{},{}", pct1(c.mean), pct1(c.std));
        }
        out.push('\n');
    }
    out.push_str("average");
    for (m, s) in t.average() {
        let _ = write!(out, ",{},{}", pct1(m), pct1(s));
    }
    out.push('\n');
    out
}

pub fn accuracy_json(t: &AccuracyTable) -> serde_json::Value {
    let row = |player: &str, cells: Vec<(f64, f64)>| {
        let mut m = serde_json::Map::new();
        m.insert("player".into(), player.into());
        for (v, (mean, std)) in t.variants.iter().zip(cells) {
            m.insert(
                v.name().into(),
                serde_json::json!({ "percent": pct1(mean).parse::<f64>().unwrap(), "std": pct1(std).parse::<f64>().unwrap() }),
            );
        }
        serde_json::Value::Object(m)
    };
    let mut rows: Vec<_> = t
        .rows
        .iter()
        .map(|r| row(&r.player, r.cells.iter().map(|c| (c.mean, c.std)).collect()))
        .collect();
    rows.push(row("average", t.average()));
    serde_json::json!({ "std_estimator": "bootstrap, 100 resamples over pairs", "rows": rows })
}

pub fn matrix_csv(m: &DivergenceMatrix) -> String {
    let mut out = String::from("train\\test");
    for p in &m.players {
        let _ = write!(out, ",{}", csv_field(p));
    }
    out.push('\n');
    for (p, row) in m.players.iter().zip(&m.values) {
        out.push_str(&csv_field(p));
        for v in row {
            let _ = write!(out, ",{}", jsd3(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses [`matrix_csv`] output back into a matrix.
pub fn parse_matrix_csv(text: &str) -> Result<DivergenceMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let players: Vec<String> = r
        .headers()
        .map_err(|e| Error::Config(e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("`{s}`: {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != players.len() {
            return Err(Error::Config("ragged divergence matrix".into()));
        }
        values.push(row);
    }
    Ok(DivergenceMatrix { players, values })
}

pub fn matrix_json(m: &DivergenceMatrix) -> serde_json::Value {
    let rounded: Vec<Vec<f64>> = m
        .values
        .iter()
        .map(|r| r.iter().map(|v| jsd3(*v).parse().unwrap()).collect())
        .collect();
    serde_json::json!({ "rows": "train", "columns": "test", "players": m.players, "jsd": rounded })
}

/// Grayscale P2 image, one pixel per cell, `[0, max] -> [0, 255]`.
pub fn matrix_pgm(m: &DivergenceMatrix) -> String {
    let n = m.players.len();
    let max = m.max_value();
    let mut out = format!("P2\n{n} {n}\n255\n");
    for row in &m.values {
        let line: Vec<String> = row
            .iter()
            .map(|&v| if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 }.to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Heatmap with one colored cell per entry, value labels and player axes.
pub fn matrix_svg(m: &DivergenceMatrix) -> String {
    const CELL: usize = 48;
    const MARGIN: usize = 140;
    let n = m.players.len();
    let size = MARGIN + n * CELL + 10;
    let max = m.max_value();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" font-family=\"sans-serif\" font-size=\"10\">\n"
    );
    for (i, row) in m.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if max > 0.0 { v / max } else { 0.0 };
            // white to dark blue
            let r = (255.0 * (1.0 - t)) as u8;
            let g = (255.0 * (1.0 - 0.7 * t)) as u8;
            let x = MARGIN + j * CELL;
            let y = MARGIN + i * CELL;
            let _ = writeln!(
                out,
                "<rect class=\"cell\" x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb({r},{g},255)\" stroke=\"#888\"/>"
            );
            let color = if t > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{color}\">{}</text>",
                x + CELL / 2,
                y + CELL / 2 + 4,
                jsd3(v)
            );
        }
    }
    for (k, p) in m.players.iter().enumerate() {
        let p = xml_escape(p);
        let c = MARGIN + k * CELL + CELL / 2;
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{p}</text>", MARGIN - 6, c + 4);
        let _ = writeln!(
            out,
            "<text x=\"{c}\" y=\"{}\" text-anchor=\"start\" transform=\"rotate(-45 {c} {})\">{p}</text>",
            MARGIN - 6,
            MARGIN - 6
        );
    }
    let _ = writeln!(out, "<text x=\"4\" y=\"14\">rows: train, columns: test (Jensen-Shannon divergence)</text>");
    out.push_str("</svg>\n");
    out
}

pub fn alignment_csv(t: &AlignmentTable) -> String {
    let mut out = String::from("player,test,test_std");
    for v in &t.variants {
        let _ = write!(out, ",{v},{v}_std");
    }
    out.push('\n');
    for r in &t.rows {
        out.push_str(&csv_field(&r.player));
        for c in std::iter::once(&r.test).chain(&r.cells) {
            let _ = write!(out, ",{},{}", jsd3(c.jsd), jsd3(c.std));
        }
        out.push('\n');
    }
    out.push_str("average");
    for c in t.average() {
        let _ = write!(out, ",{},{}", jsd3(c.jsd), jsd3(c.std));
    }
    out.push('\n');
    out
}

pub fn alignment_json(t: &AlignmentTable) -> serde_json::Value {
    let cell = |c: &crate::harness::experiment::JsdCell| {
        serde_json::json!({ "jsd": jsd3(c.jsd).parse::<f64>().unwrap(), "std": jsd3(c.std).parse::<f64>().unwrap() })
    };
    let mut rows: Vec<serde_json::Value> = t
        .rows
        .iter()
        .map(|r| {
            let mut m = serde_json::Map::new();
            m.insert("player".into(), r.player.clone().into());
            m.insert("test".into(), cell(&r.test));
            for (v, c) in t.variants.iter().zip(&r.cells) {
                m.insert(v.name().into(), cell(c));
            }
            serde_json::Value::Object(m)
        })
        .collect();
    let avg = t.average();
    let mut m = serde_json::Map::new();
    m.insert("player".into(), "average".into());
    m.insert("test".into(), cell(&avg[0]));
    for (v, c) in t.variants.iter().zip(&avg[1..]) {
        m.insert(v.name().into(), cell(c));
    }
    rows.push(serde_json::Value::Object(m));
    serde_json::json!({ "std_estimator": "bootstrap, 100 resamples over transitions", "rows": rows })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes every table present in `results` under `dir`; returns the paths.
pub fn emit_report(results: &ExperimentResults, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        write(&p, &text)?;
        files.push(p);
        Ok(())
    };
    let m = &results.matrix;
    put("divergence.csv", matrix_csv(m))?;
    put("divergence.json", pretty(&matrix_json(m)))?;
    put("divergence.pgm", matrix_pgm(m))?;
    put("divergence.svg", matrix_svg(m))?;
    if let Some(a) = &results.accuracy {
        put("accuracy.csv", accuracy_csv(a))?;
        put("accuracy.json", pretty(&accuracy_json(a)))?;
    }
    if let Some(a) = &results.alignment {
        put("alignment.csv", alignment_csv(a))?;
        put("alignment.json", pretty(&alignment_json(a)))?;
    }
    let b = &results.bounds;
    put(
        "grid.json",
        pretty(&serde_json::json!({ "xmin": b.xmin, "xmax": b.xmax, "ymin": b.ymin, "ymax": b.ymax })),
    )?;
    Ok(files)
}
