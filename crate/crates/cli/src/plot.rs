//! SVG rendering of CSV files written by the sweep commands. Only the CSV
//! text is consulted, so a plot can always be regenerated from a file.

use std::fmt::Write as _;

use crate::args::PlotKind;
use crate::error::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

struct Data {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Data {
    fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn values(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

fn malformed(msg: impl Into<String>) -> CliError {
    CliError::Io(format!("malformed CSV: {}", msg.into()))
}

fn parse(text: &str) -> Result<Data, CliError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns: Vec<String> = rdr.headers().map_err(|e| malformed(e.to_string()))?.iter().map(str::to_string).collect();
    let numeric = columns.iter().filter(|c| *c != "error").count();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let mut row = Vec::with_capacity(numeric);
        for field in rec.iter().take(numeric) {
            let v = if field.is_empty() {
                f64::NAN
            } else {
                field.parse::<f64>().map_err(|_| malformed(format!("row {}: `{field}` is not a number", line + 1)))?
            };
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }
    Ok(Data { columns, rows })
}

/// Renders `text` as SVG; `kind` is inferred from the columns when `None`.
pub fn render_csv(text: &str, kind: Option<PlotKind>) -> Result<String, CliError> {
    let data = parse(text)?;
    let is_grid = ["lambda", "a", "b", "tc"].iter().all(|c| data.col(c).is_some());
    let kind = kind.unwrap_or(if is_grid { PlotKind::Heatmap } else { PlotKind::Line });
    match kind {
        PlotKind::Heatmap if is_grid => Ok(heatmap(&data)),
        PlotKind::Heatmap => Err(malformed("heatmap needs columns lambda,a,b,tc")),
        PlotKind::Line => line(&data),
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn finite_range(xs: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = xs.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn open_svg(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<title>{title}</title>"#);
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text class="x-label" x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text class="y-label" x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{y_label}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
}

/// Maps data to pixels, optionally on a log scale.
struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, log: bool, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        Self { lo, hi, log, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| 10f64.powi(e)).collect();
            }
        }
        (0..=4)
            .map(|i| {
                let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(v)
                } else {
                    v
                }
            })
            .collect()
    }
}

fn draw_ticks(out: &mut String, xs: &Scale, ys: &Scale) {
    let bottom = HEIGHT - BOTTOM;
    for t in xs.ticks() {
        let x = xs.map(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 20.0, fmt_tick(t));
    }
    for t in ys.ticks() {
        let y = ys.map(t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
}

fn line(data: &Data) -> Result<String, CliError> {
    let (x_name, series): (&str, Vec<&str>) = if data.col("m_prime").is_some() {
        ("delta", vec!["m_prime", "lower_envelope", "upper_envelope"])
    } else if data.col("tc").is_some() && data.col("lambda").is_some() {
        ("lambda", vec!["tc"])
    } else {
        return Err(malformed("line plots need lambda,tc or delta,m_prime columns"));
    };
    let xi = data.col(x_name).ok_or_else(|| malformed(format!("missing column {x_name}")))?;
    let cols: Vec<usize> = series
        .iter()
        .map(|s| data.col(s).ok_or_else(|| malformed(format!("missing column {s}"))))
        .collect::<Result<_, _>>()?;
    let xs = data.values(xi);
    let (x_lo, x_hi) = finite_range(xs.iter().copied()).ok_or_else(|| malformed("no finite x values"))?;
    let (y_lo, y_hi) = finite_range(cols.iter().flat_map(|&c| data.values(c)))
        .ok_or_else(|| malformed("no finite y values"))?;
    let log_x = x_name == "delta" && x_lo > 0.0;
    let sx = Scale::new(x_lo, x_hi, log_x, LEFT, WIDTH - RIGHT);
    let sy = Scale::new(y_lo, y_hi, false, HEIGHT - BOTTOM, TOP);

    let mut out = String::new();
    open_svg(&mut out, &format!("{} vs {x_name}", series[0]));
    if y_lo < 0.0 && y_hi > 0.0 {
        let y0 = sy.map(0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y0:.2}" x2="{}" y2="{y0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            WIDTH - RIGHT
        );
    }
    for (k, (&c, name)) in cols.iter().zip(&series).enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(data.values(c))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, y)| format!("{:.2},{:.2}", sx.map(x), sy.map(y)))
            .collect();
        let dash = if k == 0 { "" } else { r#" stroke-dasharray="6 4""# };
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-name="{name}" fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{}">{name}</text>"#,
            WIDTH - RIGHT + 10.0,
            TOP + 15.0 + 18.0 * k as f64,
            PALETTE[k % PALETTE.len()]
        );
    }
    draw_ticks(&mut out, &sx, &sy);
    axis_labels(&mut out, x_name, series[0]);
    out.push_str("</svg>\n");
    Ok(out)
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

/// Interpolates between dark blue and yellow.
fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { return "#cccccc".into() };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

fn heatmap(data: &Data) -> String {
    let (ai, bi, ti) = (data.col("a").unwrap(), data.col("b").unwrap(), data.col("tc").unwrap());
    let a_vals = unique_sorted(data.values(ai));
    let b_vals = unique_sorted(data.values(bi));
    let (t_lo, t_hi) = finite_range(data.values(ti).into_iter()).unwrap_or((0.0, 1.0));

    // Cell edges sit halfway (in log space) between grid values.
    let edges = |vals: &[f64]| -> Vec<f64> {
        let logs: Vec<f64> = vals.iter().map(|v| v.log10()).collect();
        let step = if logs.len() > 1 { logs[1] - logs[0] } else { 1.0 };
        let mut e = vec![logs[0] - step / 2.0];
        e.extend(logs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        e.push(logs[logs.len() - 1] + step / 2.0);
        e.into_iter().map(|l| 10f64.powf(l)).collect()
    };
    let (ae, be) = (edges(&a_vals), edges(&b_vals));
    let sx = Scale::new(ae[0], ae[ae.len() - 1], true, LEFT, WIDTH - RIGHT);
    let sy = Scale::new(be[0], be[be.len() - 1], true, HEIGHT - BOTTOM, TOP);

    let mut out = String::new();
    open_svg(&mut out, "tc over (a, b)");
    for row in &data.rows {
        let i = a_vals.iter().position(|&v| v == row[ai]).expect("value from column");
        let j = b_vals.iter().position(|&v| v == row[bi]).expect("value from column");
        let (x0, x1) = (sx.map(ae[i]), sx.map(ae[i + 1]));
        let (y0, y1) = (sy.map(be[j + 1]), sy.map(be[j]));
        let t = (row[ti] - t_lo) / (t_hi - t_lo);
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x1 - x0,
            y1 - y0,
            color(t)
        );
    }
    // Legend.
    let lx = WIDTH - RIGHT + 20.0;
    let lh = HEIGHT - TOP - BOTTOM;
    for k in 0..50 {
        let t = 1.0 - k as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            TOP + lh * k as f64 / 50.0,
            lh / 50.0 + 0.5,
            color(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 25.0, TOP + 10.0, fmt_tick(t_hi));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 25.0, TOP + lh, fmt_tick(t_lo));
    let _ = writeln!(out, r#"<text x="{lx}" y="{}">tc</text>"#, TOP - 8.0);
    draw_ticks(&mut out, &sx, &sy);
    axis_labels(&mut out, "a", "b");
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_body_is_io_error() {
        let err = render_csv("# comment\nlambda,tc\n", None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn line_has_one_polyline() {
        let svg = render_csv("lambda,tc\n1,3\n2,2\n3,1.5\n", None).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">lambda</text>") && svg.contains(">tc</text>"));
    }

    #[test]
    fn non_numeric_cell_rejected() {
        assert!(render_csv("lambda,tc\n1,abc\n", None).is_err());
    }
}
