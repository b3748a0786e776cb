//! Exact graded nilpotent Lie algebra kernel.
//!
//! A graded nilpotent Lie algebra is given by a weight for each basis
//! vector and a rank-3 array of rational structure constants,
//! `[e_a, e_b] = Σ_k c_{ab}^k e_k`, with `c_{ab}^k = 0` unless
//! `w_k = w_a + w_b`.  These are the fibers of the osculating algebroid of
//! a filtered manifold; the group law on each fiber is the
//! Baker-Campbell-Hausdorff product, which terminates because gradedness
//! with positive weights bounds every bracket word by the depth.

use crate::rational::{format_rat, rat_pow, Rat};
use num::{One, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("vector has dimension {got}, algebra has dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("malformed algebra data: {0}")]
    Shape(String),
}

/// Element of a graded algebra in the graded basis; also a group element of
/// the osculating group in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraVector {
    coords: Vec<Rat>,
}

impl AlgebraVector {
    pub fn new(coords: Vec<Rat>) -> AlgebraVector {
        AlgebraVector { coords }
    }

    pub fn zero(dim: usize) -> AlgebraVector {
        AlgebraVector {
            coords: vec![Rat::zero(); dim],
        }
    }

    pub fn basis(dim: usize, index: usize) -> AlgebraVector {
        let mut v = Self::zero(dim);
        v.coords[index] = Rat::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Rat {
        &self.coords[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &AlgebraVector) -> AlgebraVector {
        AlgebraVector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &AlgebraVector) -> AlgebraVector {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AlgebraVector {
        AlgebraVector {
            coords: self.coords.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> AlgebraVector {
        AlgebraVector {
            coords: self.coords.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }
}

impl fmt::Display for AlgebraVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(format_rat).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Graded nilpotent Lie algebra: weights plus exact structure constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedNilpotentLieAlgebra {
    weights: Vec<u32>,
    /// `constants[a][b][k]` is `c_{ab}^k`.
    constants: Vec<Vec<Vec<Rat>>>,
}

impl GradedNilpotentLieAlgebra {
    pub fn new(
        weights: Vec<u32>,
        constants: Vec<Vec<Vec<Rat>>>,
    ) -> Result<GradedNilpotentLieAlgebra, AlgebraError> {
        let n = weights.len();
        if n == 0 {
            return Err(AlgebraError::Shape("empty basis".to_string()));
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(AlgebraError::Shape("weights must be positive".to_string()));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(AlgebraError::Shape(
                "weights must be nondecreasing".to_string(),
            ));
        }
        if constants.len() != n
            || constants
                .iter()
                .any(|row| row.len() != n || row.iter().any(|col| col.len() != n))
        {
            return Err(AlgebraError::Shape(format!(
                "structure constants must form an {n}x{n}x{n} array"
            )));
        }
        Ok(GradedNilpotentLieAlgebra { weights, constants })
    }

    /// Builds the constant array from the nonzero brackets
    /// `[e_a, e_b] = c·e_k` with `a < b`; antisymmetric counterparts are
    /// filled in automatically. Indices are zero-based.
    pub fn from_sparse_brackets(
        weights: Vec<u32>,
        brackets: &[(usize, usize, usize, Rat)],
    ) -> Result<GradedNilpotentLieAlgebra, AlgebraError> {
        let n = weights.len();
        let mut constants = vec![vec![vec![Rat::zero(); n]; n]; n];
        for (a, b, k, c) in brackets {
            if *a >= n || *b >= n || *k >= n {
                return Err(AlgebraError::Shape(format!(
                    "bracket index ({a},{b},{k}) out of range for dimension {n}"
                )));
            }
            constants[*a][*b][*k] = c.clone();
            constants[*b][*a][*k] = -c.clone();
        }
        Self::new(weights, constants)
    }

    /// The abelian algebra with all weights 1.
    pub fn abelian(dim: usize) -> GradedNilpotentLieAlgebra {
        Self::from_sparse_brackets(vec![1; dim], &[]).expect("valid shape")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Depth: the largest weight.
    pub fn depth(&self) -> u32 {
        *self.weights.iter().max().expect("nonempty basis")
    }

    pub fn constant(&self, a: usize, b: usize, k: usize) -> &Rat {
        &self.constants[a][b][k]
    }

    fn check_dim(&self, v: &AlgebraVector) -> Result<(), AlgebraError> {
        if v.dim() != self.dim() {
            return Err(AlgebraError::DimensionMismatch {
                got: v.dim(),
                want: self.dim(),
            });
        }
        Ok(())
    }

    /// Lie bracket by bilinear expansion over the structure constants.
    pub fn bracket(
        &self,
        u: &AlgebraVector,
        v: &AlgebraVector,
    ) -> Result<AlgebraVector, AlgebraError> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let n = self.dim();
        let mut out = vec![Rat::zero(); n];
        for a in 0..n {
            if u.coords[a].is_zero() {
                continue;
            }
            for b in 0..n {
                if v.coords[b].is_zero() {
                    continue;
                }
                let uv = u.coords[a].clone() * v.coords[b].clone();
                for k in 0..n {
                    let c = &self.constants[a][b][k];
                    if !c.is_zero() {
                        out[k] += uv.clone() * c.clone();
                    }
                }
            }
        }
        Ok(AlgebraVector::new(out))
    }

    /// Group law in exponential coordinates: the Dynkin form of the
    /// Baker-Campbell-Hausdorff series, evaluated exactly.  Bracket words
    /// longer than the depth vanish, so the series is finite.
    pub fn bch_product(
        &self,
        u: &AlgebraVector,
        v: &AlgebraVector,
    ) -> Result<AlgebraVector, AlgebraError> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let depth = self.depth() as usize;
        let mut acc = AlgebraVector::zero(self.dim());
        let mut blocks: Vec<(u32, u32)> = Vec::new();
        self.bch_blocks(u, v, depth, &mut blocks, &mut acc)?;
        Ok(acc)
    }

    /// Recursively enumerates the block sequences `(p_1,q_1)…(p_n,q_n)` of
    /// the Dynkin sum with total length ≤ depth and accumulates
    /// `(-1)^{n-1}/n · [word] / (m · Π p_i! q_i!)` where `m` is the word
    /// length and `[word]` the right-nested bracket of
    /// `u^{p_1} v^{q_1} … u^{p_n} v^{q_n}`.
    fn bch_blocks(
        &self,
        u: &AlgebraVector,
        v: &AlgebraVector,
        depth: usize,
        blocks: &mut Vec<(u32, u32)>,
        acc: &mut AlgebraVector,
    ) -> Result<(), AlgebraError> {
        if !blocks.is_empty() {
            let n_blocks = blocks.len() as i64;
            let m: u32 = blocks.iter().map(|(p, q)| p + q).sum();
            let mut denom = Rat::from_integer((n_blocks * i64::from(m)).into());
            for (p, q) in blocks.iter() {
                denom *= Rat::from_integer(factorial(*p).into());
                denom *= Rat::from_integer(factorial(*q).into());
            }
            let sign = if n_blocks % 2 == 1 {
                Rat::one()
            } else {
                -Rat::one()
            };
            let word = self.bracket_word(u, v, blocks)?;
            if !word.is_zero() {
                *acc = acc.add(&word.scale(&(sign / denom)));
            }
        }
        let used: u32 = blocks.iter().map(|(p, q)| p + q).sum();
        let remaining = depth as u32 - used;
        if remaining == 0 {
            return Ok(());
        }
        for p in 0..=remaining {
            for q in 0..=(remaining - p) {
                if p + q == 0 {
                    continue;
                }
                blocks.push((p, q));
                self.bch_blocks(u, v, depth, blocks, acc)?;
                blocks.pop();
            }
        }
        Ok(())
    }

    /// Right-nested bracket of the letter word encoded by the blocks.
    fn bracket_word(
        &self,
        u: &AlgebraVector,
        v: &AlgebraVector,
        blocks: &[(u32, u32)],
    ) -> Result<AlgebraVector, AlgebraError> {
        let mut letters: Vec<&AlgebraVector> = Vec::new();
        for (p, q) in blocks {
            for _ in 0..*p {
                letters.push(u);
            }
            for _ in 0..*q {
                letters.push(v);
            }
        }
        let mut value = letters.last().expect("nonempty word").to_owned().clone();
        for letter in letters.iter().rev().skip(1) {
            if value.is_zero() {
                return Ok(value);
            }
            value = self.bracket(letter, &value)?;
        }
        Ok(value)
    }

    /// Dilation `δ_λ`: scales the weight-`w` coordinate by `λ^w`.
    pub fn dilate(&self, lambda: &Rat, v: &AlgebraVector) -> Result<AlgebraVector, AlgebraError> {
        self.check_dim(v)?;
        Ok(AlgebraVector::new(
            v.coords
                .iter()
                .zip(&self.weights)
                .map(|(c, &w)| c.clone() * rat_pow(lambda, w))
                .collect(),
        ))
    }

    /// Inverse dilation, defined for `λ ≠ 0`.
    pub fn dilate_inverse(
        &self,
        lambda: &Rat,
        v: &AlgebraVector,
    ) -> Result<AlgebraVector, AlgebraError> {
        assert!(!lambda.is_zero(), "dilations invert only for nonzero λ");
        self.dilate(&(Rat::one() / lambda.clone()), v)
    }

    /// Projection onto the weight-`w` coordinates.
    pub fn weight_component(&self, v: &AlgebraVector, w: u32) -> AlgebraVector {
        AlgebraVector::new(
            v.coords
                .iter()
                .zip(&self.weights)
                .map(|(c, &wa)| if wa == w { c.clone() } else { Rat::zero() })
                .collect(),
        )
    }

    /// Exact verification of the algebra invariants: antisymmetry,
    /// gradedness, the Jacobi identity on all basis triples, and direct
    /// nilpotency (all bracket words of length depth+1 vanish).  Failures
    /// carry a witness.
    pub fn verify(&self) -> AlgebraReport {
        let n = self.dim();
        let mut checks = Vec::new();

        let mut antisym = None;
        'anti: for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let sum = self.constants[a][b][k].clone() + self.constants[b][a][k].clone();
                    if !sum.is_zero() {
                        antisym = Some(format!(
                            "c[{}][{}][{}] + c[{}][{}][{}] = {}",
                            a + 1,
                            b + 1,
                            k + 1,
                            b + 1,
                            a + 1,
                            k + 1,
                            format_rat(&sum)
                        ));
                        break 'anti;
                    }
                }
            }
        }
        checks.push(AlgebraCheck::new("antisymmetry", antisym));

        let mut graded = None;
        'grad: for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    if self.weights[k] != self.weights[a] + self.weights[b]
                        && !self.constants[a][b][k].is_zero()
                    {
                        graded = Some(format!(
                            "c[{}][{}][{}] = {} but w_{} = {} ≠ {} + {}",
                            a + 1,
                            b + 1,
                            k + 1,
                            format_rat(&self.constants[a][b][k]),
                            k + 1,
                            self.weights[k],
                            self.weights[a],
                            self.weights[b]
                        ));
                        break 'grad;
                    }
                }
            }
        }
        checks.push(AlgebraCheck::new("gradedness", graded));

        let mut jacobi = None;
        'jac: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ea = AlgebraVector::basis(n, a);
                    let eb = AlgebraVector::basis(n, b);
                    let ec = AlgebraVector::basis(n, c);
                    let t1 = self
                        .bracket(&self.bracket(&ea, &eb).expect("dims"), &ec)
                        .expect("dims");
                    let t2 = self
                        .bracket(&self.bracket(&eb, &ec).expect("dims"), &ea)
                        .expect("dims");
                    let t3 = self
                        .bracket(&self.bracket(&ec, &ea).expect("dims"), &eb)
                        .expect("dims");
                    let sum = t1.add(&t2).add(&t3);
                    if !sum.is_zero() {
                        jacobi = Some(format!(
                            "basis triple ({},{},{}) gives cyclic sum {}",
                            a + 1,
                            b + 1,
                            c + 1,
                            sum
                        ));
                        break 'jac;
                    }
                }
            }
        }
        checks.push(AlgebraCheck::new("jacobi", jacobi));

        let depth = self.depth() as usize;
        let mut nilpotent = None;
        let mut level: Vec<(Vec<usize>, AlgebraVector)> = (0..n)
            .map(|a| (vec![a], AlgebraVector::basis(n, a)))
            .collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for (word, value) in &level {
                if value.is_zero() {
                    continue;
                }
                for a in 0..n {
                    let mut w = vec![a];
                    w.extend_from_slice(word);
                    let v = self
                        .bracket(&AlgebraVector::basis(n, a), value)
                        .expect("dims");
                    next.push((w, v));
                }
            }
            level = next;
        }
        // level now holds all right-nested words of length depth+1
        for (word, value) in &level {
            if !value.is_zero() {
                let pretty: Vec<String> = word.iter().map(|i| format!("e{}", i + 1)).collect();
                nilpotent = Some(format!(
                    "bracket word [{}] of length {} is {}",
                    pretty.join(","),
                    depth + 1,
                    value
                ));
                break;
            }
        }
        checks.push(AlgebraCheck::new("nilpotency", nilpotent));

        AlgebraReport { checks }
    }
}

fn factorial(k: u32) -> u64 {
    (1..=u64::from(k)).product::<u64>().max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

impl AlgebraCheck {
    fn new(name: &'static str, witness: Option<String>) -> AlgebraCheck {
        AlgebraCheck {
            name,
            passed: witness.is_none(),
            witness,
        }
    }
}

/// Pass/fail per invariant, with a witness for each failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraReport {
    pub checks: Vec<AlgebraCheck>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failure(&self, name: &str) -> Option<&AlgebraCheck> {
        self.checks.iter().find(|c| c.name == name && !c.passed)
    }
}

impl fmt::Display for AlgebraReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.witness {
                None => writeln!(f, "{}: pass", c.name)?,
                Some(w) => writeln!(f, "{}: FAIL ({w})", c.name)?,
            }
        }
        Ok(())
    }
}

/// The 3-dimensional Heisenberg algebra: weights (1,1,2), `[e1,e2] = e3`.
pub fn heisenberg() -> GradedNilpotentLieAlgebra {
    GradedNilpotentLieAlgebra::from_sparse_brackets(vec![1, 1, 2], &[(0, 1, 2, Rat::one())])
        .expect("valid data")
}

/// The Engel algebra: weights (1,1,2,3), `[e1,e2] = e3`, `[e1,e3] = e4`.
pub fn engel() -> GradedNilpotentLieAlgebra {
    GradedNilpotentLieAlgebra::from_sparse_brackets(
        vec![1, 1, 2, 3],
        &[(0, 1, 2, Rat::one()), (0, 2, 3, Rat::one())],
    )
    .expect("valid data")
}
