//! Monte Carlo quantiles of the Johansen trace statistic under the null of
//! `n` unit roots, for checking the embedded critical-value tables.
//!
//! Usage: `johansen_quantiles [T] [replications] [max_n]`

use nalgebra::DMatrix;
use ohlcast::stats::{johansen_trace_test_with, tables::trace_critical_value, JohansenDeterministic, Significance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn statistic(n: usize, t: usize, seed: u64, det: JohansenDeterministic) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // One extra white-noise column when n = 1 keeps the system two-dimensional.
    let k = n.max(2);
    let mut y = DMatrix::zeros(t, k);
    for i in 0..t {
        for j in 0..k {
            let e: f64 = StandardNormal.sample(&mut rng);
            y[(i, j)] = if j < n && i > 0 { y[(i - 1, j)] + e } else { e };
        }
    }
    let r = johansen_trace_test_with(&y, 1, Significance::Five, det).expect("simulated data is well posed");
    r.trace_statistics[k - n]
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let t = args.first().copied().unwrap_or(1000);
    let reps = args.get(1).copied().unwrap_or(20_000);
    let max_n = args.get(2).copied().unwrap_or(12).min(12);
    for (label, det) in [
        ("restricted constant", JohansenDeterministic::RestrictedConstant),
        ("unrestricted constant", JohansenDeterministic::UnrestrictedConstant),
    ] {
        println!("{label}, T = {t}, {reps} replications");
        println!("{:>3} {:>9} {:>9} {:>9}   {:>9} {:>9} {:>9}", "n", "q90", "q95", "q99", "tab90", "tab95", "tab99");
        let restricted = det == JohansenDeterministic::RestrictedConstant;
        for n in 1..=max_n {
            let mut s: Vec<f64> = (0..reps as u64)
                .into_par_iter()
                .map(|seed| statistic(n, t, seed * 7919 + n as u64, det))
                .collect();
            s.sort_by(f64::total_cmp);
            let tab = |sig| trace_critical_value(n, sig, restricted).unwrap_or(f64::NAN);
            println!(
                "{n:>3} {:>9.2} {:>9.2} {:>9.2}   {:>9.2} {:>9.2} {:>9.2}",
                quantile(&s, 0.90),
                quantile(&s, 0.95),
                quantile(&s, 0.99),
                tab(Significance::Ten),
                tab(Significance::Five),
                tab(Significance::One)
            );
        }
    }
}
