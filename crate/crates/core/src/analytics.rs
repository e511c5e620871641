//! Closed-form first-moment and stationary-law formulas evaluated at finite
//! `n`, in natural-log domain via log-gamma.

use crate::chains::Ladder;
use crate::error::{invalid, Result};
use crate::graph::expansion_ceiling;
use crate::hamiltonian::{log_sum_exp, GibbsContext};
use serde::Serialize;
use std::f64::consts::LN_2;
use std::io::Write;

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= 4096 {
        // Falling factorial term by term: differencing two huge lgamma values
        // loses all precision once n is large.
        (0..k).map(|i| ((n - i) as f64).ln()).sum::<f64>() - ln_factorial(k)
    } else {
        ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

#[inline]
fn pairs(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// `ln E[W_{q,r}] = ln[C(k,r) C(n-k,q-r) 2^{C(r,2)-C(q,2)}]`.
pub fn expected_census(n: u64, k: u64, q: u64, r: u64) -> Result<f64> {
    if k > n || q > n || r > q.min(k) {
        return invalid(format!(
            "need r <= min(q,k), q <= n, k <= n; got n={n} k={k} q={q} r={r}"
        ));
    }
    Ok(ln_binom(k, r) + ln_binom(n - k, q - r) + (pairs(r) - pairs(q)) * LN_2)
}

/// Leading-order exponent of `E[W_{q,r}]` in units of `(log2 n)^2` for
/// `q = rho log2 n`, `r = gamma log2 n`, `k = n^alpha`:
/// `ln2 (rho - rho^2/2 - (1-alpha) gamma + gamma^2/2)`. Meaningful for
/// `0 <= gamma <= rho`.
pub fn asymptotic_exponent(alpha: f64, rho: f64, gamma: f64) -> f64 {
    LN_2 * (rho - rho * rho / 2.0 - (1.0 - alpha) * gamma + gamma * gamma / 2.0)
}

/// First-moment bound on the number of `q`-gateways of size `p` with
/// overlap at most `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GatewayMoment {
    pub log_value: f64,
    /// False when `2p - q - u < 0` or `p > q`.
    pub feasible: bool,
}

pub fn gateway_first_moment(n: u64, k: u64, q: u64, p: u64, u: u64) -> GatewayMoment {
    let infeasible = GatewayMoment {
        log_value: f64::NEG_INFINITY,
        feasible: false,
    };
    if p > q || q > n || k > n || 2 * p < q + u {
        return infeasible;
    }
    let free = 2 * p - q - u;
    let terms = (0..=u.min(k).min(p)).map(|r| {
        ln_binom(k, r) + ln_binom(n - k, p - r) + ln_binom(n - p, q - p) + ln_binom(p - r, free)
            - (pairs(p) - pairs(r) + ((q - p) * free) as f64) * LN_2
    });
    GatewayMoment {
        log_value: log_sum_exp(terms),
        feasible: true,
    }
}

/// `ln nu(p) - ln nu(q)` for the size walk:
/// `ln[20^{q-p} (q!/p!) 2^{C(q,2)-C(p,2)} n^{-(q-p)} e^{beta(h_p - h_q)}]`.
pub fn bd_stationary_ratio(ctx: &GibbsContext, eta: f64, n: u64, p: u64, q: u64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta = {eta} not in (0,1)"));
    }
    let top = expansion_ceiling(n as usize, eta) as u64;
    if p > q || q > top {
        return invalid(format!("need p <= q <= {top}, got p={p}, q={q}"));
    }
    if ctx.h.n() < q as usize {
        return invalid("hamiltonian too short");
    }
    let d = (q - p) as f64;
    Ok(
        d * 20f64.ln() + ln_factorial(q) - ln_factorial(p) + (pairs(q) - pairs(p)) * LN_2
            - d * (n as f64).ln()
            + ctx.log_weight(p as usize)
            - ctx.log_weight(q as usize),
    )
}

/// Unnormalised `ln nu((s, j))` of the size/temperature walk:
/// `-ln Z_hat_j + ln[n^s / (20^s s! 2^{C(s,2)})] + beta_j h_s`.
pub fn st_2d_stationary(n: u64, ladder: &Ladder, eta: f64, s: u64, j: usize) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta = {eta} not in (0,1)"));
    }
    if !ladder.h().is_monotone() {
        return invalid("the stationary law of the size/temperature walk assumes nondecreasing h");
    }
    let top = expansion_ceiling(n as usize, eta) as u64;
    if s > top {
        return invalid(format!("s = {s} beyond the ceiling {top}"));
    }
    if j > ladder.m() {
        return invalid(format!("temperature index {j} beyond m = {}", ladder.m()));
    }
    let sf = s as f64;
    Ok(-ladder.log_z_hat()[j] + sf * (n as f64).ln()
        - sf * 20f64.ln()
        - ln_factorial(s)
        - pairs(s) * LN_2
        + ladder.level(j).log_weight(s as usize))
}

/// Normalised `ln nu` on the grid `0..=ceiling × 0..=m`, indexed
/// `[s][j]`.
pub fn st_2d_stationary_grid(n: u64, ladder: &Ladder, eta: f64) -> Result<Vec<Vec<f64>>> {
    let top = expansion_ceiling(n as usize, eta) as u64;
    let mut grid = Vec::with_capacity(top as usize + 1);
    for s in 0..=top {
        grid.push(
            (0..=ladder.m())
                .map(|j| st_2d_stationary(n, ladder, eta, s, j))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let z = log_sum_exp(grid.iter().flatten().copied());
    for row in &mut grid {
        for x in row.iter_mut() {
            *x -= z;
        }
    }
    Ok(grid)
}

/// `ln E[W_{q,r}]` over a set of cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub n: u64,
    pub k: u64,
    pub entries: Vec<(u64, u64, f64)>,
}

impl MomentTable {
    /// Every feasible cell with `q <= q_max`.
    pub fn build(n: u64, k: u64, q_max: u64) -> Result<Self> {
        if k > n {
            return invalid(format!("k = {k} > n = {n}"));
        }
        let mut entries = Vec::new();
        for q in 0..=q_max.min(n) {
            for r in 0..=q.min(k) {
                entries.push((q, r, expected_census(n, k, q, r)?));
            }
        }
        Ok(Self { n, k, entries })
    }

    /// CSV `n,k,q,r,log_expected`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "n,k,q,r,log_expected")?;
        }
        for &(q, r, l) in &self.entries {
            writeln!(w, "{},{},{q},{r},{l}", self.n, self.k)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::BirthDeath1d;
    use crate::hamiltonian::HamiltonianSpec;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn big_binom(n: u64, k: u64) -> BigUint {
        if k > n {
            return BigUint::from(0u32);
        }
        (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
    }

    fn ln_big(x: &BigUint) -> f64 {
        let bits = x.bits();
        if bits <= 60 {
            return (x.to_u64_digits().first().copied().unwrap_or(0) as f64).ln();
        }
        let shift = bits - 60;
        let top = (x >> shift).to_u64_digits()[0] as f64;
        top.ln() + shift as f64 * LN_2
    }

    fn ctx(beta: f64, n: usize) -> GibbsContext {
        GibbsContext::new(beta, HamiltonianSpec::identity(n).unwrap()).unwrap()
    }

    #[test]
    fn census_fixtures() {
        assert_eq!(expected_census(37, 5, 0, 0).unwrap(), 0.0);
        assert!((expected_census(20, 4, 3, 1).unwrap() - 60f64.ln()).abs() < 1e-12);
        assert!(expected_census(20, 4, 3, 4).is_err());
        assert!(expected_census(20, 4, 21, 0).is_err());
        for q in 0..=6 {
            assert!((expected_census(50, 9, q, q).unwrap() - ln_binom(9, q)).abs() < 1e-12);
        }
    }

    #[test]
    fn census_against_big_integers() {
        for (n, k) in [
            (20u64, 4u64),
            (64, 8),
            (300, 17),
            (1000, 31),
            (1 << 40, 1 << 20),
            (10_000, 9_000),
        ] {
            for q in 0..=12.min(n) {
                for r in 0..=q.min(k) {
                    let num = big_binom(k, r) * big_binom(n - k, q - r);
                    let expect = ln_big(&num) + (pairs(r) - pairs(q)) * LN_2;
                    let got = expected_census(n, k, q, r).unwrap();
                    if num.bits() == 0 {
                        assert_eq!(got, f64::NEG_INFINITY);
                    } else {
                        assert!(
                            (got - expect).abs() < 1e-9 * expect.abs().max(1.0),
                            "{n} {k} {q} {r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn exponent_fixtures() {
        assert_eq!(asymptotic_exponent(0.5, 2.0, 0.0), 0.0);
        assert!((asymptotic_exponent(0.3, 1.0, 0.0) - LN_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_gap_shrinks_with_n() {
        let (alpha, rho, gamma) = (0.5, 1.0, 0.25);
        let target = asymptotic_exponent(alpha, rho, gamma);
        let gap = |e: u32| {
            let l = e as f64;
            let n = 1u64 << e;
            let k = 2f64.powf(alpha * l).floor() as u64;
            let q = (rho * l).round() as u64;
            let r = (gamma * l).round() as u64;
            (expected_census(n, k, q, r).unwrap() / (l * l) - target).abs()
        };
        let gaps: Vec<f64> = [12u32, 20, 28, 40, 52, 60]
            .iter()
            .map(|&e| gap(e))
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[3] < 0.05, "{gaps:?}");
    }

    #[test]
    fn gateway_moment_reduces_to_direct_sum() {
        for (n, k, p) in [(40u64, 6u64, 4u64), (100, 10, 5)] {
            let got = gateway_first_moment(n, k, p, p, p);
            assert!(got.feasible);
            let mut total = 0.0;
            for r in 0..=p.min(k) {
                let num = big_binom(k, r) * big_binom(n - k, p - r) * big_binom(p - r, 0);
                total += (ln_big(&num) - (pairs(p) - pairs(r)) * LN_2).exp();
            }
            assert!((got.log_value - total.ln()).abs() < 1e-9);
            // With q = p = u the sum is exactly the expected number of p-cliques.
            let census = log_sum_exp((0..=p.min(k)).map(|r| expected_census(n, k, p, r).unwrap()));
            assert!(got.log_value >= census - 1e-9);
        }
        let bad = gateway_first_moment(100, 10, 9, 4, 1);
        assert!(!bad.feasible && bad.log_value == f64::NEG_INFINITY);
    }

    #[test]
    fn gateway_moment_big_integer_general_case() {
        let (n, k, q, p, u) = (60u64, 7u64, 6u64, 5u64, 2u64);
        let free = 2 * p - q - u;
        let mut total = 0.0;
        for r in 0..=u {
            let num = big_binom(k, r)
                * big_binom(n - k, p - r)
                * big_binom(n - p, q - p)
                * big_binom(p - r, free);
            if num.bits() > 0 {
                total +=
                    (ln_big(&num) - (pairs(p) - pairs(r) + ((q - p) * free) as f64) * LN_2).exp();
            }
        }
        assert!((gateway_first_moment(n, k, q, p, u).log_value - total.ln()).abs() < 1e-9);
    }

    #[test]
    fn bd_ratio_fixtures() {
        let c = ctx(0.0, 64);
        assert_eq!(bd_stationary_ratio(&c, 0.3, 64, 2, 2).unwrap(), 0.0);
        let expect = (20f64.powi(3) * 6.0 * 8.0 / 64f64.powi(3)).ln();
        assert!((bd_stationary_ratio(&c, 0.3, 64, 0, 3).unwrap() - expect).abs() < 1e-12);
        assert!(bd_stationary_ratio(&c, 0.3, 64, 0, 5).is_err());
    }

    #[test]
    fn bd_ratio_matches_kernel_product() {
        for beta in [0.0, 0.7, 2.0] {
            let bd = BirthDeath1d::new(256, ctx(beta, 256), 0.2).unwrap();
            for p in 0..=bd.ceiling() as u64 {
                for q in p..=bd.ceiling() as u64 {
                    let product = bd.log_nu(p as usize) - bd.log_nu(q as usize);
                    let closed = bd_stationary_ratio(bd.ctx(), 0.2, 256, p, q).unwrap();
                    assert!((product - closed).abs() < 1e-12, "beta {beta} p {p} q {q}");
                }
            }
        }
    }

    #[test]
    fn st_2d_reduces_to_1d() {
        let h = HamiltonianSpec::identity(32).unwrap();
        let l = Ladder::new(vec![0.6], vec![2.5], 0.5, h.clone()).unwrap();
        assert!((st_2d_stationary(32, &l, 0.3, 0, 0).unwrap() + 2.5).abs() < 1e-15);
        let c = GibbsContext::new(0.6, h).unwrap();
        for s in 0..=3u64 {
            let one = -bd_stationary_ratio(&c, 0.3, 32, 0, s).unwrap();
            let two = st_2d_stationary(32, &l, 0.3, s, 0).unwrap() + 2.5;
            assert!((one - two).abs() < 1e-12);
        }
        assert!(st_2d_stationary(32, &l, 0.3, 4, 0).is_err());
        let grid = st_2d_stationary_grid(32, &l, 0.3).unwrap();
        assert!((log_sum_exp(grid.iter().flatten().copied())).abs() < 1e-12);
    }

    #[test]
    fn moment_table_csv() {
        let t = MomentTable::build(20, 4, 3).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,k,q,r,log_expected\n20,4,0,0,0\n"));
        assert_eq!(text.lines().count(), 1 + 1 + 2 + 3 + 4);
    }

    proptest! {
        #[test]
        fn bd_ratio_telescopes(beta in -2.0f64..3.0, p in 0u64..5, a in 0u64..3, b in 0u64..3) {
            let c = ctx(beta, 1024);
            let (s, q) = (p + a, p + a + b);
            prop_assume!(q <= 7);
            let whole = bd_stationary_ratio(&c, 0.3, 1024, p, q).unwrap();
            let parts = bd_stationary_ratio(&c, 0.3, 1024, p, s).unwrap()
                + bd_stationary_ratio(&c, 0.3, 1024, s, q).unwrap();
            prop_assert!((whole - parts).abs() < 1e-12);
        }

        #[test]
        fn exponent_quadratic_shape(alpha in 0.01f64..0.99, rho in 0.0f64..2.0) {
            let peak = asymptotic_exponent(alpha, 1.0, 0.0);
            prop_assert!(asymptotic_exponent(alpha, rho, 0.0) <= peak + 1e-15);
            prop_assert!(asymptotic_exponent(alpha, 2.0, 0.0).abs() < 1e-15);
        }
    }
}
