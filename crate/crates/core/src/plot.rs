//! Standalone SVG line charts of a run: crater counts, position errors and
//! attitude errors against time.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::StepRecord;

/// One named line; `None` values break the line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, Option<f64>)>,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
];

fn plot_error<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl LineChart {
    /// Renders the chart as an SVG document.
    pub fn to_svg(&self) -> Result<String> {
        let mut svg = String::new();
        {
            let root = SVGBackend::with_string(&mut svg, (900, 500)).into_drawing_area();
            root.fill(&WHITE).map_err(plot_error)?;
            let all = || self.series.iter().flat_map(|s| s.points.iter());
            let (x0, x1) = range(all().map(|p| p.0));
            let (y0, y1) = range(all().filter_map(|p| p.1));
            let mut chart = ChartBuilder::on(&root)
                .caption(&self.title, ("sans-serif", 22))
                .margin(12)
                .x_label_area_size(40)
                .y_label_area_size(80)
                .build_cartesian_2d(x0..x1, y0..y1)
                .map_err(plot_error)?;
            chart
                .configure_mesh()
                .x_desc(self.x_label.as_str())
                .y_desc(self.y_label.as_str())
                .draw()
                .map_err(plot_error)?;
            for (k, s) in self.series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let mut first = true;
                for segment in s.points.split(|p| p.1.is_none()).filter(|seg| !seg.is_empty()) {
                    let line = LineSeries::new(
                        segment.iter().map(|p| (p.0, p.1.unwrap_or_default())),
                        color.stroke_width(1),
                    );
                    let drawn = chart.draw_series(line).map_err(plot_error)?;
                    if first {
                        drawn
                            .label(s.name.as_str())
                            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
                        first = false;
                    }
                }
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.85))
                .border_style(BLACK)
                .draw()
                .map_err(plot_error)?;
            root.present().map_err(plot_error)?;
        }
        Ok(svg)
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg()?).map_err(|e| Error::file(path, e))
    }
}

fn series<F: Fn(&StepRecord) -> Option<f64>>(records: &[StepRecord], name: &str, f: F) -> Series {
    Series {
        name: name.into(),
        points: records.iter().map(|r| (r.t, f(r))).collect(),
    }
}

pub fn crater_count_chart(records: &[StepRecord]) -> LineChart {
    LineChart {
        title: "Craters in view".into(),
        x_label: "time (s)".into(),
        y_label: "count".into(),
        series: vec![
            series(records, "visible", |r| Some(r.visible_count as f64)),
            series(records, "identified", |r| Some(r.identified_count as f64)),
            series(records, "used", |r| Some(r.used_count as f64)),
        ],
    }
}

pub fn position_error_chart(records: &[StepRecord]) -> LineChart {
    let axis = |k: usize| move |r: &StepRecord| r.position_error_m.map(|e| e[k]);
    LineChart {
        title: "Position estimation error".into(),
        x_label: "time (s)".into(),
        y_label: "error (m)".into(),
        series: vec![
            series(records, "X", axis(0)),
            series(records, "Y", axis(1)),
            series(records, "Z", axis(2)),
        ],
    }
}

pub fn attitude_error_chart(records: &[StepRecord]) -> LineChart {
    let angle = |k: usize| move |r: &StepRecord| r.attitude_error_deg.map(|e| e[k]);
    LineChart {
        title: "Attitude estimation error".into(),
        x_label: "time (s)".into(),
        y_label: "error (deg)".into(),
        series: vec![
            series(records, "phi", angle(0)),
            series(records, "theta", angle(1)),
            series(records, "psi", angle(2)),
        ],
    }
}

/// File names written by [`write_run_plots`].
pub const PLOT_FILES: [&str; 3] = ["craters.svg", "position_error.svg", "attitude_error.svg"];

pub fn write_run_plots(records: &[StepRecord], dir: &Path, prefix: &str) -> Result<Vec<String>> {
    let charts = [
        crater_count_chart(records),
        position_error_chart(records),
        attitude_error_chart(records),
    ];
    let mut names = Vec::new();
    for (chart, file) in charts.iter().zip(PLOT_FILES) {
        let name = format!("{prefix}{file}");
        chart.write_svg(&dir.join(&name))?;
        names.push(name);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_lines_and_legend() {
        let chart = LineChart {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series {
                    name: "alpha".into(),
                    points: vec![(0.0, Some(1.0)), (1.0, None), (2.0, Some(3.0)), (3.0, Some(2.0))],
                },
                Series {
                    name: "flat".into(),
                    points: vec![(0.0, Some(5.0)), (3.0, Some(5.0))],
                },
            ],
        };
        let svg = chart.to_svg().unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("alpha") && svg.contains("flat"));
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn empty_series_still_renders() {
        let chart = LineChart {
            title: "empty".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                name: "none".into(),
                points: vec![(0.0, None)],
            }],
        };
        assert!(chart.to_svg().unwrap().contains("</svg>"));
    }
}
