//! Spot-checks backpropagation against central finite differences on a few
//! entries of every parameter tensor of both architectures.

use irs_isac::neuralnet::{
    backward, build_ce_dnn_with, build_se_dnn, forward, mse_loss, predict, CeDnnWidths, NetworkParams, NetworkSpec,
};
use irs_isac::numerics::RngStream;
use ndarray::Array2;

fn loss(spec: &NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    mse_loss(&predict(spec, params, x).unwrap(), y).unwrap().0
}

fn check(name: &str, spec: &NetworkSpec) -> irs_isac::Result<()> {
    let mut rng = RngStream::new(1, 0);
    let params = NetworkParams::init(spec, &mut rng);
    let x = Array2::from_shape_fn((4, spec.input_width()), |_| rng.standard_normal());
    let y = Array2::from_shape_fn((4, spec.output_len()), |_| rng.standard_normal());
    let (out, cache) = forward(spec, &params, &x)?;
    let (_, g) = mse_loss(&out, &y)?;
    let grads = backward(spec, &params, &cache, &g)?;

    let h = 1e-6;
    println!("{name}: {}", spec.describe());
    for (li, layer) in grads.iter().enumerate() {
        let Some(analytic) = layer else { continue };
        let (rows, cols) = analytic.weight.dim();
        let scale = analytic.weight.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let r = (rng.uniform() * rows as f64) as usize;
            let c = (rng.uniform() * cols as f64) as usize;
            let mut work = params.clone();
            let w = &mut work.layers_mut()[li].as_mut().unwrap().weight;
            let orig = w[[r, c]];
            w[[r, c]] = orig + h;
            let plus = loss(spec, &work, &x, &y);
            work.layers_mut()[li].as_mut().unwrap().weight[[r, c]] = orig - h;
            let minus = loss(spec, &work, &x, &y);
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max((numeric - analytic.weight[[r, c]]).abs() / scale);
        }
        println!("  layer {li}: weights {rows}x{cols}, worst relative deviation {worst:.2e}");
    }
    Ok(())
}

fn main() -> irs_isac::Result<()> {
    check("SE-DNN", &build_se_dnn(2, 2, 3)?)?;
    let widths = CeDnnWidths { filters1: 3, filters2: 2, dense: 8 };
    check("CE-DNN", &build_ce_dnn_with(2, 3, 2, 2, widths)?)?;
    Ok(())
}
