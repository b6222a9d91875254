//! SVG figures: one panel per channel, stacked vertically.

use std::path::Path;
use std::str::FromStr;

use host_core::Trajectory;
use plotters::prelude::*;

use crate::error::{CliError, Result};

const PANEL_HEIGHT: u32 = 260;
const WIDTH: u32 = 900;
/// Buckets per trace; each keeps its min and max sample.
const BUCKETS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    States,
    Control,
    Integral,
    V0,
    V1,
    W,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::States => "states",
            Channel::Control => "control",
            Channel::Integral => "integral",
            Channel::V0 => "v0",
            Channel::V1 => "v1",
            Channel::W => "w",
        }
    }

    fn traces(self, traj: &Trajectory) -> Result<Vec<(String, Vec<f64>)>> {
        let lyap = |ch: &Option<Vec<f64>>, label: &str| {
            ch.clone()
                .map(|v| vec![(label.to_string(), v)])
                .ok_or_else(|| CliError::config("outputs.plot", format!("channel `{}` was not recorded", self.name())))
        };
        Ok(match self {
            Channel::States => (0..traj.order)
                .map(|i| (format!("z{}", i + 1), traj.states.iter().map(|z| z[i]).collect()))
                .collect(),
            Channel::Control => vec![("u".into(), traj.controls.clone())],
            Channel::Integral => vec![("I".into(), traj.integrals.clone())],
            Channel::V0 => lyap(&traj.v0, "V0")?,
            Channel::V1 => lyap(&traj.v1, "V1")?,
            Channel::W => lyap(&traj.w, "W")?,
        })
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "states" => Channel::States,
            "control" => Channel::Control,
            "integral" => Channel::Integral,
            "v0" => Channel::V0,
            "v1" => Channel::V1,
            "w" => Channel::W,
            other => return Err(format!("unknown channel `{other}`")),
        })
    }
}

/// Min/max decimation keeping spikes visible.
fn decimate(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    if t.len() <= 2 * BUCKETS {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let size = t.len().div_ceil(BUCKETS);
    let mut out = Vec::with_capacity(2 * BUCKETS);
    for start in (0..t.len()).step_by(size) {
        let end = (start + size).min(t.len());
        let (mut lo, mut hi) = (start, start);
        for k in start..end {
            if y[k] < y[lo] {
                lo = k;
            }
            if y[k] > y[hi] {
                hi = k;
            }
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push((t[a], y[a]));
        if b != a {
            out.push((t[b], y[b]));
        }
    }
    out
}

pub fn emit_plot(traj: &Trajectory, path: &Path, channels: &[Channel]) -> Result<()> {
    if traj.is_empty() || channels.is_empty() {
        return Err(CliError::NothingToPlot);
    }
    let panels = channels.iter().map(|c| c.traces(traj)).collect::<Result<Vec<_>>>()?;
    let plot_err = |e: &dyn std::fmt::Display| CliError::Plot(e.to_string());

    let root = SVGBackend::new(path, (WIDTH, PANEL_HEIGHT * channels.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let areas = root.split_evenly((channels.len(), 1));
    let t0 = traj.times[0];
    let t1 = traj.times[traj.len() - 1].max(t0 + f64::EPSILON);

    for ((area, ch), traces) in areas.iter().zip(channels).zip(&panels) {
        let (mut lo, mut hi) = traces
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-12);
        let mut chart = ChartBuilder::on(area)
            .caption(ch.name(), ("sans-serif", 18))
            .margin(8)
            .x_label_area_size(32)
            .y_label_area_size(64)
            .build_cartesian_2d(t0..t1, (lo - pad)..(hi + pad))
            .map_err(|e| plot_err(&e))?;
        chart
            .configure_mesh()
            .x_desc("t [s]")
            .y_desc(ch.name())
            .draw()
            .map_err(|e| plot_err(&e))?;
        for (k, (label, y)) in traces.iter().enumerate() {
            let color = Palette99::pick(k).to_rgba();
            chart
                .draw_series(LineSeries::new(decimate(&traj.times, y), color.stroke_width(1)))
                .map_err(|e| plot_err(&e))?
                .label(label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| plot_err(&e))?;
    }
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}
