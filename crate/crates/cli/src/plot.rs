use std::fmt::Write as _;

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 10.0;

/// Input (grey) and output (blue) as polylines in a standalone SVG.
pub fn write_svg(input: &[f64], output: &[f64]) -> String {
    let n = input.len().max(output.len()).max(2);
    let (lo, hi) = input
        .iter()
        .chain(output)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let points = |v: &[f64]| {
        let mut s = String::new();
        for (i, y) in v.iter().enumerate() {
            let px = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
            let py = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (y - lo) / span;
            let _ = write!(s, "{px:.2},{py:.2} ");
        }
        s
    };
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\">\n\
         <polyline fill=\"none\" stroke=\"#999\" stroke-width=\"1\" points=\"{}\"/>\n\
         <polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\" points=\"{}\"/>\n\
         </svg>\n",
        points(input),
        points(output)
    )
}
