//! Size-indexed Hamiltonians `h = (h_0, ..., h_n)` and log-domain Gibbs
//! weights `log w_beta(C) = beta * h_{|C|}`.

use crate::error::{invalid, Result};
use crate::log2n;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    Identity,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    values: Vec<f64>,
    kind: HamiltonianKind,
}

/// Why a Hamiltonian fails the regularity assumption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Irregularity {
    /// `h_0 != 0`.
    NonzeroGround(f64),
    /// First `(q, q')`, `q < q'`, in lexicographic order with
    /// `|h_q - h_q'| > |q - q'|` inside the window.
    Lipschitz(usize, usize),
}

impl HamiltonianSpec {
    /// `h_q = q`.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        Ok(Self {
            values: (0..=n).map(|q| q as f64).collect(),
            kind: HamiltonianKind::Identity,
        })
    }

    /// Explicit vector; must have length `n + 1` and finite entries.
    /// Regularity is not enforced here, see [`HamiltonianSpec::check_regular`].
    pub fn custom(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != n + 1 {
            return invalid(format!(
                "hamiltonian has {} entries, expected n+1 = {}",
                values.len(),
                n + 1
            ));
        }
        if let Some(q) = values.iter().position(|x| !x.is_finite()) {
            return invalid(format!("h_{q} is not finite"));
        }
        Ok(Self {
            values,
            kind: HamiltonianKind::Custom,
        })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    /// Largest size `n` the vector covers.
    #[inline]
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    #[inline]
    pub fn get(&self, q: usize) -> f64 {
        self.values[q]
    }

    /// Regularity window `floor(2.1 * log2 n)`, clipped to `n`.
    pub fn regularity_window(n: usize) -> usize {
        ((2.1 * log2n(n)).floor() as usize).min(n)
    }

    /// `Ok(None)` when regular (`h_0 = 0` and 1-Lipschitz on the window),
    /// `Ok(Some(_))` with the first violation otherwise.
    pub fn check_regular(&self, n: usize) -> Result<Option<Irregularity>> {
        if self.values.len() != n + 1 {
            return invalid(format!(
                "hamiltonian length {} does not match n+1 = {}",
                self.values.len(),
                n + 1
            ));
        }
        if self.values[0] != 0.0 {
            return Ok(Some(Irregularity::NonzeroGround(self.values[0])));
        }
        let w = Self::regularity_window(n);
        for q in 0..=w {
            for q2 in (q + 1)..=w {
                // small slack for values produced by float arithmetic
                if (self.values[q] - self.values[q2]).abs() > (q2 - q) as f64 + 1e-12 {
                    return Ok(Some(Irregularity::Lipschitz(q, q2)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_regular(&self) -> bool {
        matches!(self.check_regular(self.n()), Ok(None))
    }

    /// Non-decreasing in `q`.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Inverse temperature plus Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsContext {
    pub beta: f64,
    pub h: HamiltonianSpec,
}

impl GibbsContext {
    pub fn new(beta: f64, h: HamiltonianSpec) -> Result<Self> {
        if !beta.is_finite() {
            return invalid("beta must be finite (use the greedy dynamics for beta = +inf)");
        }
        Ok(Self { beta, h })
    }

    /// `beta * h_size`.
    #[inline]
    pub fn log_weight(&self, size: usize) -> f64 {
        let h = self.h.get(size);
        if self.beta == 0.0 {
            0.0
        } else {
            self.beta * h
        }
    }

    /// `min(0, beta * (h_to - h_from))` for a one-vertex move.
    pub fn log_acceptance(&self, from: usize, to: usize) -> Result<f64> {
        if from.abs_diff(to) != 1 {
            return invalid(format!("size jump {from} -> {to} is not a single vertex"));
        }
        if from.max(to) > self.h.n() {
            return invalid(format!("size {} beyond n = {}", from.max(to), self.h.n()));
        }
        Ok(self.log_acceptance_unchecked(from, to))
    }

    #[inline]
    pub(crate) fn log_acceptance_unchecked(&self, from: usize, to: usize) -> f64 {
        (self.log_weight(to) - self.log_weight(from)).min(0.0)
    }
}

/// `log(sum exp(x_i))`, stable; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_values_and_regularity() {
        let h = HamiltonianSpec::identity(5).unwrap();
        assert_eq!(h.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        for n in [1, 2, 7, 100, 1000] {
            assert!(HamiltonianSpec::identity(n).unwrap().is_regular());
        }
        let ctx = GibbsContext::new(2.0, HamiltonianSpec::identity(5).unwrap()).unwrap();
        assert_eq!(ctx.log_weight(3), 6.0);
    }

    #[test]
    fn regularity_violations() {
        let mut v = vec![0.0; 9];
        v[1] = 2.0;
        let h = HamiltonianSpec::custom(v, 8).unwrap();
        assert_eq!(
            h.check_regular(8).unwrap(),
            Some(Irregularity::Lipschitz(0, 1))
        );

        let h = HamiltonianSpec::custom(vec![1.0; 9], 8).unwrap();
        assert!(matches!(
            h.check_regular(8).unwrap(),
            Some(Irregularity::NonzeroGround(_))
        ));
        assert!(h.check_regular(7).is_err());
    }

    #[test]
    fn lipschitz_only_checked_inside_window() {
        // n = 4: window floor(2.1 * 2) = 4 covers everything.
        let h = HamiltonianSpec::custom(vec![0.0, 1.0, 2.0, 3.0, 9.0], 4).unwrap();
        assert_eq!(
            h.check_regular(4).unwrap(),
            Some(Irregularity::Lipschitz(0, 4))
        );
        // n = 16: window floor(8.4) = 8; a jump at 9 -> 10 is allowed.
        let mut v: Vec<f64> = (0..=16).map(|q| q as f64).collect();
        v[10] = 50.0;
        let h = HamiltonianSpec::custom(v, 16).unwrap();
        assert_eq!(HamiltonianSpec::regularity_window(16), 8);
        assert!(h.is_regular());
    }

    #[test]
    fn acceptance_fixtures() {
        let h = HamiltonianSpec::identity(6).unwrap();
        let cold = GibbsContext::new(1.0, h.clone()).unwrap();
        assert_eq!(cold.log_acceptance(3, 2).unwrap(), -1.0);
        assert_eq!(cold.log_acceptance(2, 3).unwrap(), 0.0);
        let hot = GibbsContext::new(0.0, h.clone()).unwrap();
        assert_eq!(hot.log_acceptance(5, 4).unwrap(), 0.0);
        assert!(cold.log_acceptance(2, 4).is_err());
        assert!(cold.log_acceptance(6, 7).is_err());
        assert!(GibbsContext::new(f64::INFINITY, h).is_err());
    }

    #[test]
    fn custom_rejects_bad_input() {
        assert!(HamiltonianSpec::custom(vec![0.0, 1.0], 3).is_err());
        assert!(HamiltonianSpec::custom(vec![0.0, f64::NAN], 1).is_err());
    }

    proptest! {
        #[test]
        fn size_factor_detailed_balance(
            beta in 0.0f64..50.0,
            raw in proptest::collection::vec(-3.0f64..3.0, 2..30),
        ) {
            let n = raw.len() - 1;
            let h = HamiltonianSpec::custom(raw, n).unwrap();
            let ctx = GibbsContext::new(beta, h).unwrap();
            for a in 0..n {
                let b = a + 1;
                let lhs = ctx.log_acceptance(a, b).unwrap() + ctx.log_weight(a);
                let rhs = ctx.log_acceptance(b, a).unwrap() + ctx.log_weight(b);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn log_sum_exp_is_permutation_invariant(
            mut xs in proptest::collection::vec(-700.0f64..700.0, 1..40),
            seed in any::<u64>(),
        ) {
            let a = log_sum_exp(xs.iter().copied());
            use rand::seq::SliceRandom;
            xs.shuffle(&mut crate::rng::prng(seed));
            let b = log_sum_exp(xs.iter().copied());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
