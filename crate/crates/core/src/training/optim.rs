use crate::network::ParameterVector;

/// `theta <- theta - rate * grad`.
pub fn sgd_step(params: &mut ParameterVector, grad: &[f64], rate: f64) {
    assert_eq!(params.len(), grad.len(), "gradient shape");
    for (p, g) in params.as_mut_slice().iter_mut().zip(grad) {
        *p -= rate * g;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { first_moment: vec![0.0; len], second_moment: vec![0.0; len], step: 0 }
    }
}

/// One Adam update. Bias corrections use the exponent `step + 1`, so the
/// first update (`step = 0`) is well defined.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ParameterVector,
    grad: &[f64],
    rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) {
    assert_eq!(params.len(), grad.len(), "gradient shape");
    assert_eq!(state.first_moment.len(), grad.len(), "optimizer state shape");
    let t = (state.step + 1) as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let theta = params.as_mut_slice();
    for i in 0..grad.len() {
        let g = grad[i];
        let x = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        let y = beta2 * state.second_moment[i] + (1.0 - beta2) * g * g;
        state.first_moment[i] = x;
        state.second_moment[i] = y;
        theta[i] -= rate * (x / c1) / ((y.abs() / c2).sqrt() + epsilon);
    }
    state.step += 1;
}
