#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use wns_core::{KondratievElement, MultiIndex};

/// Dense multi-index with `len ≤ num_vars` positions and total degree `≤ max_degree`.
pub fn multi_index(num_vars: usize, max_degree: u32) -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0..=max_degree, num_vars).prop_map(move |mut dense| {
        // Strip degrees from the back until the total fits.
        let mut total: u32 = dense.iter().sum();
        for d in dense.iter_mut().rev() {
            while total > max_degree && *d > 0 {
                *d -= 1;
                total -= 1;
            }
        }
        MultiIndex::from_dense(&dense)
    })
}

pub fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

pub fn element(num_vars: usize, max_degree: u32, max_terms: usize) -> impl Strategy<Value = KondratievElement> {
    prop::collection::vec((multi_index(num_vars, max_degree), coeff()), 1..=max_terms)
        .prop_map(KondratievElement::from_terms)
}

/// Largest coefficient modulus, floored at 1; the scale for relative errors.
pub fn scale(f: &KondratievElement) -> f64 {
    f.terms().map(|(_, c)| c.norm()).fold(1.0, f64::max)
}
