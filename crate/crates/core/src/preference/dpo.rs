use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

pub const DEFAULT_BETA: f64 = 0.1;

/// Noise and predictions for one preference pair at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoSample<T> {
    pub eps: Vec<T>,
    pub eps_ref_w: Vec<T>,
    pub eps_theta_w: Vec<T>,
    pub eps_ref_l: Vec<T>,
    pub eps_theta_l: Vec<T>,
    pub beta: T,
}

impl<T: Scalar> DpoSample<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.eps.len();
        let vecs = [&self.eps, &self.eps_ref_w, &self.eps_theta_w, &self.eps_ref_l, &self.eps_theta_l];
        if vecs.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("dpo sample vectors differ in length".into()));
        }
        if vecs.iter().any(|v| v.iter().any(|x| !x.is_finite())) || !self.beta.is_finite() {
            return Err(Error::invalid("dpo sample has non-finite entries"));
        }
        if self.beta <= T::zero() {
            return Err(Error::invalid("beta must be positive"));
        }
        Ok(())
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let terms: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).collect();
    pairwise_sum(&terms)
}

/// `|eps - eps_ref|^2 - |eps - eps_theta|^2`: how much closer the model is
/// to the true noise than the reference.
pub fn dpo_implicit_reward<T: Scalar>(eps: &[T], eps_ref: &[T], eps_theta: &[T]) -> Result<T> {
    if eps.len() != eps_ref.len() || eps.len() != eps_theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "reward vectors have lengths {}, {}, {}",
            eps.len(),
            eps_ref.len(),
            eps_theta.len()
        )));
    }
    Ok(sq_dist(eps, eps_ref) - sq_dist(eps, eps_theta))
}

/// `log(1 + e^x)` without overflow.
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function evaluated without overflow.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpoOutput<T> {
    pub loss: T,
    /// `beta * (delta_w - delta_l)`.
    pub z: T,
    pub grad_theta_w: Vec<T>,
    pub grad_theta_l: Vec<T>,
}

/// `-log sigmoid(beta (delta_w - delta_l))` and its gradients with respect
/// to both model predictions.
pub fn dpo_loss<T: Scalar>(s: &DpoSample<T>) -> Result<DpoOutput<T>> {
    s.validate()?;
    let dw = dpo_implicit_reward(&s.eps, &s.eps_ref_w, &s.eps_theta_w)?;
    let dl = dpo_implicit_reward(&s.eps, &s.eps_ref_l, &s.eps_theta_l)?;
    let z = s.beta * (dw - dl);
    let loss = softplus(-z);
    // dloss/dz = -sigmoid(-z)
    let coef = sigmoid(-z) * s.beta * T::lit(2.0);
    let grad_theta_w = s.eps.iter().zip(&s.eps_theta_w).map(|(&e, &p)| -coef * (e - p)).collect();
    let grad_theta_l = s.eps.iter().zip(&s.eps_theta_l).map(|(&e, &p)| coef * (e - p)).collect();
    Ok(DpoOutput { loss, z, grad_theta_w, grad_theta_l })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpoBatch<T> {
    pub mean_loss: T,
    /// Gradient of the mean loss with respect to each sample's predictions.
    pub grads: Vec<(Vec<T>, Vec<T>)>,
}

/// Mean loss over a batch. The reduction order depends only on batch size.
pub fn dpo_batch_loss<T: Scalar>(samples: &[DpoSample<T>]) -> Result<DpoBatch<T>> {
    if samples.is_empty() {
        return Err(Error::invalid("empty dpo batch"));
    }
    let outs: Vec<DpoOutput<T>> = samples.iter().map(dpo_loss).collect::<Result<_>>()?;
    let n = T::from_usize_lossy(samples.len());
    let losses: Vec<T> = outs.iter().map(|o| o.loss).collect();
    let grads = outs
        .into_iter()
        .map(|o| (o.grad_theta_w.into_iter().map(|g| g / n).collect(), o.grad_theta_l.into_iter().map(|g| g / n).collect()))
        .collect();
    Ok(DpoBatch { mean_loss: pairwise_sum(&losses) / n, grads })
}
