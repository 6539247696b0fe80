//! Adomian polynomials.
//!
//! `A_k(N; u_0, ..., u_k)` is the `t^k` coefficient of `N(u_0 + t u_1 + t^2 u_2 + ...)`.
//! It is computed by composing the Taylor jet of `N` about `u_0` with the
//! increment polynomial `t u_1 + t^2 u_2 + ...` in truncated power-series
//! arithmetic, which avoids enumerating partitions.

use thiserror::Error;

use crate::expr::Jet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdomianError {
    #[error("jet of order {jet_order} cannot produce Adomian polynomials up to A_{needed}")]
    OrderMismatch { jet_order: usize, needed: usize },
    #[error("at least one series value is required")]
    Empty,
}

/// Arguments of `A_0..A_k`: the jet of `N` about `u_values[0]` and the series
/// values `u^(0)..u^(k)` at one point.
#[derive(Debug, Clone)]
pub struct AdomianInput<'a> {
    pub n_jet: &'a Jet,
    pub u_values: &'a [f64],
}

impl<'a> AdomianInput<'a> {
    pub fn new(n_jet: &'a Jet, u_values: &'a [f64]) -> Result<Self, AdomianError> {
        if u_values.is_empty() {
            return Err(AdomianError::Empty);
        }
        let needed = u_values.len() - 1;
        if n_jet.order() < needed {
            return Err(AdomianError::OrderMismatch {
                jet_order: n_jet.order(),
                needed,
            });
        }
        Ok(AdomianInput { n_jet, u_values })
    }
}

/// `[A_0, ..., A_k]` for `k = u_values.len() - 1`.
pub fn adomian_polys(input: &AdomianInput<'_>) -> Vec<f64> {
    let series = Jet::from_coeffs(input.u_values.to_vec());
    input.n_jet.compose(&series).coeffs().to_vec()
}

/// Convenience wrapper validating the input first.
pub fn adomian_polys_checked(n_jet: &Jet, u_values: &[f64]) -> Result<Vec<f64>, AdomianError> {
    Ok(adomian_polys(&AdomianInput::new(n_jet, u_values)?))
}

/// `A_{j+1}(N; u_0, ..., u_j, 0)` with `j = u_values.len() - 1`.
pub fn adomian_tail(n_jet: &Jet, u_values: &[f64]) -> Result<f64, AdomianError> {
    let mut extended = Vec::with_capacity(u_values.len() + 1);
    extended.extend_from_slice(u_values);
    extended.push(0.0);
    let polys = adomian_polys_checked(n_jet, &extended)?;
    Ok(polys[polys.len() - 1])
}
