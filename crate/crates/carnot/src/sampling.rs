//! Seeded pseudorandom generation of rationals, points, and polynomials.
//!
//! Every randomized sweep in the crate draws from a `Sampler` built from an
//! explicit 64-bit seed, so reports and test runs are reproducible
//! bit-for-bit.

use crate::polyfields::{Polynomial, VarSet};
use crate::rational::{rat, Rat};
use num::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Small rational with numerator in `[-bound, bound]` and denominator
    /// in `{1, 2, 3}`.
    pub fn rational(&mut self, bound: i64) -> Rat {
        let numer = self.rng.gen_range(-bound..=bound);
        let denom = self.rng.gen_range(1..=3);
        rat(numer, denom)
    }

    /// Nonzero variant of [`Sampler::rational`].
    pub fn nonzero_rational(&mut self, bound: i64) -> Rat {
        loop {
            let r = self.rational(bound);
            if !r.is_zero() {
                return r;
            }
        }
    }

    pub fn rational_vec(&mut self, len: usize, bound: i64) -> Vec<Rat> {
        (0..len).map(|_| self.rational(bound)).collect()
    }

    /// A rational sample point with small coordinates.
    pub fn point(&mut self, dim: usize) -> Vec<Rat> {
        self.rational_vec(dim, 3)
    }

    /// Random polynomial of total degree ≤ `max_degree` with coefficient
    /// numerators bounded by `bound`; roughly half the candidate monomials
    /// are kept.
    pub fn polynomial(&mut self, vars: &Arc<VarSet>, bound: i64, max_degree: u32) -> Polynomial {
        let mut acc = Polynomial::zero(vars);
        let monos = monomials_up_to(vars.len(), max_degree);
        for mono in monos {
            if self.rng.gen_bool(0.5) {
                continue;
            }
            let coef = self.rational(bound);
            if coef.is_zero() {
                continue;
            }
            let mut term = Polynomial::constant(vars, coef);
            for (i, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    term = term
                        .mul(&Polynomial::var(vars, i))
                        .expect("degree below cap");
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn usize_below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

/// All exponent vectors of total degree ≤ `max_degree`, in a fixed order.
fn monomials_up_to(nvars: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fill(&mut out, &mut current, 0, max_degree);
    out
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, var: usize, budget: u32) {
    if var == current.len() {
        out.push(current.clone());
        return;
    }
    for e in 0..=budget {
        current[var] = e;
        fill(out, current, var + 1, budget - e);
    }
    current[var] = 0;
}
