//! The abstract setting shared by every solver: a functional `F = T - U` on a
//! finite-dimensional space with an inner product, a way back onto a level
//! set `{U = λ}`, and the scaling action that transports minimizers between
//! levels.

use crate::error::Result;
use crate::grid::ScalingKind;
use crate::linalg::sub;

pub trait Variational: Sync {
    fn dim(&self) -> usize;

    fn eval_t(&self, u: &[f64]) -> f64;

    fn eval_u(&self, u: &[f64]) -> f64;

    fn eval_f(&self, u: &[f64]) -> f64 {
        self.eval_t(u) - self.eval_u(u)
    }

    /// Riesz representative of `T'(u)` for [`Variational::inner`].
    fn grad_t(&self, u: &[f64]) -> Vec<f64>;

    /// Riesz representative of `U'(u)` for [`Variational::inner`].
    fn grad_u(&self, u: &[f64]) -> Vec<f64>;

    fn grad_f(&self, u: &[f64]) -> Vec<f64> {
        sub(&self.grad_t(u), &self.grad_u(u))
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64;

    fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Maps a gradient to a search direction. Identity by default; grid
    /// problems apply an `H¹`-type inverse so descent rates do not degrade
    /// with mesh refinement.
    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        g.to_vec()
    }

    /// Search-direction map for minimizing `T` on a level set, where the
    /// relevant Hessian is that of `T - θU`. Defaults to [`Variational::precondition`].
    fn precondition_for_multiplier(&self, g: &[f64], theta: f64) -> Vec<f64> {
        let _ = theta;
        self.precondition(g)
    }

    /// Moves `u` onto `{U = level}` along a one-parameter family through `u`.
    fn retract(&self, u: &[f64], level: f64) -> Result<Vec<f64>>;

    /// The group action relating minimizers at different levels.
    fn action(&self) -> ScalingKind;

    /// Applies the group action carrying level `from` to level `to`.
    fn transport(&self, v: &[f64], from: f64, to: f64) -> Result<Vec<f64>>;

    /// Default starting point for minimization, not yet on any level set.
    fn seed(&self) -> Vec<f64>;

    /// Exponent `α` of the scaling law `i_λ = λ^α i_1` implied by the action.
    fn level_exponent(&self) -> f64;
}

/// Scale factor `β` with `U(β u) = level` for `U` homogeneous of degree `degree`.
pub(crate) fn homogeneous_amplitude(current: f64, level: f64, degree: f64) -> Option<f64> {
    if current > 0.0 && level > 0.0 {
        Some((level / current).powf(1.0 / degree))
    } else {
        None
    }
}
