//! Static SVG panels of a sweep: accuracy, seconds and iterations against
//! the number of annotators per question.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::bench::{SweepReport, SweepRow};
use crate::error::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// File stem, axis label, and the value plotted for each row.
type Panel = (&'static str, &'static str, fn(&SweepRow) -> Option<f64>);

/// Writes `accuracy.svg`, `iterations.svg` and, when timings were recorded,
/// `seconds.svg` into `dir`. Returns the paths written.
pub fn plot_sweep(report: &SweepReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let panels: [Panel; 3] = [
        ("accuracy", "Accuracy", |r| Some(r.accuracy)),
        ("iterations", "Iterations", |r| Some(r.iterations).filter(|x| x.is_finite())),
        ("seconds", "Seconds", |r| r.seconds),
    ];
    for (stem, title, metric) in panels {
        let series: Vec<(String, Vec<(f64, f64)>)> = report
            .algorithms()
            .into_iter()
            .map(|name| {
                let points = report
                    .rows
                    .iter()
                    .filter(|r| r.algorithm == name)
                    .filter_map(|r| metric(r).map(|y| (r.k as f64, y)))
                    .collect();
                (name, points)
            })
            .filter(|(_, pts): &(String, Vec<(f64, f64)>)| !pts.is_empty())
            .collect();
        if series.is_empty() {
            continue;
        }
        let path = dir.join(format!("{stem}.svg"));
        draw(&path, title, &series).map_err(|e| Error::Plot(e.to_string()))?;
        written.push(path);
    }
    Ok(written)
}

fn draw(path: &Path, title: &str, series: &[(String, Vec<(f64, f64)>)]) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let pad = ((y_max - y_min) * 0.05).max(1e-6);
    let root = SVGBackend::new(path, (640, 420)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0.5..x_max + 0.5, (y_min - pad)..(y_max + pad))?;
    chart.configure_mesh().x_desc("annotators per question").y_desc(title).draw()?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::SweepRow;

    fn row(k: usize, algorithm: &str, accuracy: f64) -> SweepRow {
        SweepRow {
            k,
            algorithm: algorithm.into(),
            repeats: 1,
            accuracy,
            accuracy_std: 0.0,
            nll: 1.0,
            nll_std: 0.0,
            iterations: 3.0,
            iterations_std: 0.0,
            seconds: None,
            seconds_std: None,
            converged: true,
            external: false,
        }
    }

    #[test]
    fn writes_panels() {
        let report = SweepReport {
            rows: vec![row(1, "mv", 0.6), row(1, "fds", 0.6), row(2, "mv", 0.7), row(2, "fds", 0.8)],
            cells: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let written = plot_sweep(&report, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        let svg = std::fs::read_to_string(&written[0]).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}
