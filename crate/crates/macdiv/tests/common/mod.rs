//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01};

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Exact sampler for `(x, x + y)` with `x ~ χ²₂₍ᵣ₋ⱼ₊₁₎`, `y ~ χ²₂₍ⱼ₋₁₎`
/// (independent), conditioned on `x + y > u`.
///
/// With `t = u/2`, the conditional law of `(x+y)/2 − t` is a mixture of
/// `Gamma(r − m)` with weights proportional to `t^m / m!`, `m = 0..r−1`.
/// Given the sum, `x/(x+y) ~ Beta(r−j+1, j−1)`.
pub struct ConditionalSampler {
    cumulative: Vec<f64>,
    gammas: Vec<Gamma<f64>>,
    beta: Beta<f64>,
    t: f64,
}

impl ConditionalSampler {
    pub fn new(r: u32, j: u32, u: f64) -> Self {
        assert!(j > 1 && j <= r && u > 0.0);
        let t = u / 2.0;
        let mut w = vec![1.0f64];
        for m in 1..r as usize {
            let prev = w[m - 1];
            w.push(prev * t / m as f64);
        }
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        let cumulative = w
            .iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect();
        let gammas = (0..r).map(|m| Gamma::new((r - m) as f64, 1.0).unwrap()).collect();
        let beta = Beta::new((r - j + 1) as f64, (j - 1) as f64).unwrap();
        Self { cumulative, gammas, beta, t }
    }

    /// Returns `(x, x + y)`.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let v: f64 = Open01.sample(rng);
        let m = self.cumulative.iter().position(|&c| v <= c).unwrap_or(self.cumulative.len() - 1);
        let s = 2.0 * (self.t + self.gammas[m].sample(rng));
        (s * self.beta.sample(rng), s)
    }
}

/// Same conditional law by brute-force rejection; only usable for small `u`.
pub fn rejection_draw(rng: &mut ChaCha8Rng, r: u32, j: u32, u: f64) -> (f64, f64) {
    let gx = Gamma::new((r - j + 1) as f64, 2.0).unwrap();
    let gy = Gamma::new((j - 1) as f64, 2.0).unwrap();
    loop {
        let x = gx.sample(rng);
        let y = gy.sample(rng);
        if x + y > u {
            return (x, x + y);
        }
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_macdiv")
}

/// Runs the binary with a fixed thread count.
pub fn run(args: &[&str], threads: Option<usize>, cwd: &Path) -> Output {
    let mut c = Command::new(bin());
    c.args(args).current_dir(cwd);
    match threads {
        Some(t) => c.env("MACDIV_THREADS", t.to_string()),
        None => c.env_remove("MACDIV_THREADS"),
    };
    c.output().expect("spawn macdiv")
}
