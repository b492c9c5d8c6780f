use rand::Rng;

use super::{Network, NumericsError, Tensor};

/// Loss closure: network output -> (loss, d loss / d output).
pub type LossFn<'a> = dyn Fn(&Tensor) -> (f64, Tensor) + 'a;

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Compares analytic gradients with central finite differences on `samples`
/// coordinates drawn uniformly from all parameters and input entries.
///
/// Returns the largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<R: Rng + ?Sized>(
    net: &Network,
    input: &Tensor,
    loss: &LossFn<'_>,
    samples: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64, NumericsError> {
    let acts = net.forward(input)?;
    let (_, out_grad) = loss(acts.output());
    let (grads, input_grad) = net.backward(&acts, &out_grad)?;
    let analytic_params = grads.flat();
    let n_params = analytic_params.len();
    let total = n_params + input.len();

    let eval = |n: &Network, x: &Tensor| -> Result<f64, NumericsError> { Ok(loss(&n.predict(x)?).0) };

    let base_params = net.flat_params();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let k = rng.gen_range(0..total);
        let (analytic, numeric) = if k < n_params {
            let mut p = base_params.clone();
            p[k] = base_params[k] + epsilon;
            probe.set_flat_params(&p)?;
            let plus = eval(&probe, input)?;
            p[k] = base_params[k] - epsilon;
            probe.set_flat_params(&p)?;
            let minus = eval(&probe, input)?;
            (analytic_params[k], (plus - minus) / (2.0 * epsilon))
        } else {
            let i = k - n_params;
            let mut x = input.clone();
            x.values_mut()[i] += epsilon;
            let plus = eval(net, &x)?;
            x.values_mut()[i] -= 2.0 * epsilon;
            let minus = eval(net, &x)?;
            (input_grad.values()[i], (plus - minus) / (2.0 * epsilon))
        };
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    Ok(worst)
}
