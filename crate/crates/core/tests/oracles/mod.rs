//! Independent reference computations used to check the estimators.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(α, β)` of the binary-regressor Poisson MLE: log cell means.
pub fn binary_closed_form(z: &[bool], y: &[f64]) -> (f64, f64) {
    let pick = |arm: bool| -> Vec<f64> { z.iter().zip(y).filter(|(t, _)| **t == arm).map(|(_, v)| *v).collect() };
    let (m0, m1) = (mean(&pick(false)), mean(&pick(true)));
    (m0.ln(), (m1 / m0).ln())
}

/// `(α, β, η, γ)` of the saturated 2×2 model from the four cell means.
pub fn saturated_closed_form(z: &[bool], x: &[bool], y: &[f64]) -> [f64; 4] {
    let cell = |t: bool, c: bool| -> f64 {
        let v: Vec<f64> = z.iter().zip(x).zip(y).filter(|((a, b), _)| **a == t && **b == c).map(|(_, v)| *v).collect();
        mean(&v)
    };
    let (m00, m10, m01, m11) = (cell(false, false), cell(true, false), cell(false, true), cell(true, true));
    [m00.ln(), (m10 / m00).ln(), (m01 / m00).ln(), ((m11 / m01) / (m10 / m00)).ln()]
}

pub fn poisson_loglik(rows: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(x, &yi)| {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            yi * eta - eta.exp()
        })
        .sum()
}

/// Gauss-Jordan inverse with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
}

/// `A⁻¹ B A⁻¹` by explicit summation over observations.
pub fn brute_force_hc0(rows: &[Vec<f64>], y: &[f64], mu: &[f64]) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![vec![0.0; p]; p];
    for ((x, &yi), &mi) in rows.iter().zip(y).zip(mu) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += x[i] * x[j] * mi;
                b[i][j] += x[i] * x[j] * (yi - mi) * (yi - mi);
            }
        }
    }
    let inv = invert(&a);
    matmul(&matmul(&inv, &b), &inv)
}

/// Over-dispersed counts: Poisson with a Gamma(shape, mean/shape) rate,
/// i.e. negative binomial with variance `mean + mean²/shape`.
pub fn overdispersed<R: Rng>(rng: &mut R, mean: f64, shape: f64) -> f64 {
    let rate = Gamma::new(shape, mean / shape).unwrap().sample(rng);
    if rate <= 0.0 {
        return 0.0;
    }
    Poisson::new(rate).unwrap().sample(rng)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A printed effect row: effect, CI bounds (percent) and the printed p.
pub struct PrintedRow {
    pub outcome: &'static str,
    pub effect: f64,
    pub low: f64,
    pub high: f64,
    pub p: &'static str,
}

const fn row(outcome: &'static str, effect: f64, low: f64, high: f64, p: &'static str) -> PrintedRow {
    PrintedRow { outcome, effect, low, high, p }
}

/// The published average-effect table.
pub const PUBLISHED_EFFECTS: [PrintedRow; 13] = [
    row("post_starts", -5.7, -7.8, -3.5, "<0.001"),
    row("posts_submitted", -13.0, -15.8, -10.2, "<0.001"),
    row("posts_non_removed", 5.8, 0.6, 11.2, "0.03"),
    row("automod_removals", -34.9, -37.0, -32.8, "<0.001"),
    row("mod_removals", 2.7, -1.7, 7.2, "0.236"),
    row("admin_removals", -9.2, -17.3, -0.4, "0.042"),
    row("num_reports", -9.4, -14.4, -4.1, "0.001"),
    row("received_comments", 28.6, 8.2, 52.9, "0.004"),
    row("received_views", 26.6, 2.8, 56.0, "0.027"),
    row("received_upvotes", 36.1, 10.1, 68.1, "0.004"),
    row("days_contributing", -2.0, -5.2, 1.3, "0.233"),
    row("days_voting", -1.9, -5.0, 1.2, "0.229"),
    row("days_active", -1.4, -2.9, 0.1, "0.059"),
];

impl PrintedRow {
    /// A `(β, se)` pair consistent with every printed figure: each printed
    /// percentage pins its log-ratio to an interval of half a unit in the
    /// last place; β and β ± 1.96·se must fall in their intervals. Picks
    /// the midpoint of the feasible set.
    pub fn back_compute(&self) -> (f64, f64) {
        let bounds = |pct: f64| ((1.0 + (pct - 0.05) / 100.0).ln(), (1.0 + (pct + 0.05) / 100.0).ln());
        let (e_lo, e_hi) = bounds(self.effect);
        let (l_lo, l_hi) = bounds(self.low);
        let (u_lo, u_hi) = bounds(self.high);
        let beta_lo = e_lo.max((l_lo + u_lo) / 2.0);
        let beta_hi = e_hi.min((l_hi + u_hi) / 2.0);
        assert!(beta_lo <= beta_hi, "{}: printed figures are inconsistent", self.outcome);
        let beta = (beta_lo + beta_hi) / 2.0;
        let w_lo = (beta - l_hi).max(u_lo - beta);
        let w_hi = (beta - l_lo).min(u_hi - beta);
        assert!(w_lo <= w_hi, "{}: no interval width fits", self.outcome);
        (beta, (w_lo + w_hi) / 2.0 / 1.96)
    }

    pub fn rendered(&self) -> String {
        let f = |v: f64| format!("{v:.1}%");
        format!("{}; 95% CI [{}, {}]", f(self.effect), f(self.low), f(self.high))
    }

    pub fn printed_significant(&self) -> bool {
        self.p == "<0.001" || self.p.parse::<f64>().unwrap() < 0.05
    }
}
