use super::model::{EqualizerModel, Gradients, ParamBlock};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

fn update(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

fn update_block<B: ParamBlock>(params: &mut B, grads: &B, m: &mut B, v: &mut B, lr: f64, c1: f64, c2: f64) {
    let g = grads.slices();
    for (((p, g), m), v) in params
        .slices_mut()
        .into_iter()
        .zip(g)
        .zip(m.slices_mut())
        .zip(v.slices_mut())
    {
        update(p, g, m, v, lr, c1, c2);
    }
}

/// One bias-corrected Adam step over the blocks present in `grads`.
/// Blocks that are frozen (or absent from `grads`) are left untouched,
/// moments included.
pub fn adam_step(model: &mut EqualizerModel, grads: &Gradients, lr: f64) {
    model.adam.step += 1;
    let t = model.adam.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let fz = model.freeze;
    let p = &mut model.params;
    let (m, v) = (&mut model.adam.m, &mut model.adam.v);
    if let (Some(g), false) = (&grads.conv, fz.conv) {
        update_block(&mut p.conv, g, &mut m.conv, &mut v.conv, lr, c1, c2);
    }
    if let (Some(g), false) = (&grads.bilstm, fz.bilstm) {
        update_block(&mut p.bilstm, g, &mut m.bilstm, &mut v.bilstm, lr, c1, c2);
    }
    if let (Some(g), false) = (&grads.dense, fz.dense) {
        update_block(&mut p.dense, g, &mut m.dense, &mut v.dense, lr, c1, c2);
    }
}
