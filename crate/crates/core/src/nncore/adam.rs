use super::ModelParams;
use crate::error::{Error, Result};

/// Adam optimizer state: moment accumulators shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(
        params: &ModelParams,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let positive = [learning_rate, beta1, beta2, epsilon]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || beta1 >= 1.0 || beta2 >= 1.0 {
            return Err(Error::Config(format!(
                "invalid Adam hyperparameters lr={learning_rate} beta1={beta1} beta2={beta2} eps={epsilon}"
            )));
        }
        Ok(AdamState {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        })
    }

    /// Defaults: lr 1e-3, betas (0.9, 0.999), epsilon 1e-8.
    pub fn with_defaults(params: &ModelParams) -> Self {
        Self::new(params, 1e-3, 0.9, 0.999, 1e-8).expect("default hyperparameters are valid")
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    params: &mut ModelParams,
    gradients: &ModelParams,
    state: &mut AdamState,
) -> Result<()> {
    if !params.same_shape(gradients)
        || !params.same_shape(&state.first_moment)
        || !params.same_shape(&state.second_moment)
    {
        return Err(Error::ShapeMismatch(
            "Adam parameters, gradients and moments differ in shape".into(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;

    let grads = gradients
        .layers()
        .flat_map(|l| l.weights.iter().chain(&l.bias));
    let firsts = state.first_moment.flat_mut();
    let seconds = state.second_moment.flat_mut();
    for (((p, g), m), v) in params.flat_mut().zip(grads).zip(firsts).zip(seconds) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
