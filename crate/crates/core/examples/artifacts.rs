//! Writes a grid function as CSV and binary, reads both back, and plots a
//! kernel slice next to its Gaussian marginal.

use grushin::io::{from_bytes, read_csv, to_bytes, write_csv};
use grushin::kernel::{kernel_row, KernelQuadrature};
use grushin::plot::{render_svg, PlotSpec, Scale, Series};
use grushin::{Grid, ModelParams};

fn main() -> grushin::Result<()> {
    let params = ModelParams::reference();
    let grid = Grid::cube(1, 1, 4.0, 32)?;
    let k = kernel_row(&[0.0], &[0.0], 1.0, &grid, &params, &KernelQuadrature::default())?;

    let mut csv = Vec::new();
    write_csv(&mut csv, &k, &["kernel row at x = 0, y = 0, t = 1".into()])?;
    assert_eq!(read_csv(&csv[..])?, k);
    let (back, meta) = from_bytes(&to_bytes(&k, &serde_json::json!({ "t": 1.0 }))?)?;
    assert_eq!(back, k);
    println!("CSV {} bytes, binary round trip ok, meta {meta}", csv.len());

    // Slice along y at the x node nearest 0.
    let ys = grid.y_axes()[0].nodes();
    let ix = grid.x_axes()[0].count / 2;
    let slice: Vec<f64> = (0..ys.len()).map(|j| k.value_at_node(&[ix, j])).collect();
    let spec = PlotSpec {
        title: "K(x, 0, y; 1) along y".into(),
        x_label: "y".into(),
        y_label: "K".into(),
        y_scale: Scale::Log,
        ..PlotSpec::default()
    };
    let svg = render_svg(&[Series::new("kernel", ys, slice)], &spec)?;
    println!("SVG {} bytes", svg.len());
    Ok(())
}
