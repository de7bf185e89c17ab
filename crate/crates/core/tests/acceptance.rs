//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use syncq::drift::{self, LATTICE_STEP};
use syncq::montecarlo::{self, GrowthVerdict};
use syncq::queue::{Policy, QueueState, SystemParams};
use syncq::series::{self, Backend, Classification};
use syncq::Prob;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn big(v: u64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn prob_big(p: Prob) -> BigRational {
    BigRational::new(p.numer().into(), p.denom().into())
}

/// Walks every joint arrival sequence of length `n` and tallies, by total
/// number of arrivals, the sequences that leave all queues level.
fn count_level_sequences(d: usize, n: usize) -> Vec<u64> {
    fn go(d: usize, left: usize, counts: &mut [u64; 8], ones: usize, tally: &mut Vec<u64>) {
        if left == 0 {
            if counts[..d].iter().all(|&c| c == counts[0]) {
                tally[ones] += 1;
            }
            return;
        }
        for mask in 0u32..(1 << d) {
            for (i, c) in counts.iter_mut().enumerate().take(d) {
                *c += u64::from(mask >> i & 1);
            }
            go(d, left - 1, counts, ones + mask.count_ones() as usize, tally);
            for (i, c) in counts.iter_mut().enumerate().take(d) {
                *c -= u64::from(mask >> i & 1);
            }
        }
    }
    let mut tally = vec![0u64; n * d + 1];
    go(d, n, &mut [0; 8], 0, &mut tally);
    tally
}

fn brute_force_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for d in [2usize, 3] {
        for p in [Prob::HALF, Prob::new(1, 3).unwrap()] {
            let (pb, qb) = (prob_big(p), prob_big(p.complement()));
            for n in 0..=8usize {
                let tally = count_level_sequences(d, n);
                let oracle: BigRational = tally
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| big(c) * Pow::pow(&pb, k) * Pow::pow(&qb, n * d - k))
                    .sum();
                let got = series::rd_exact(n as u64, d as u32, p).into_inner();
                if got != oracle {
                    return outcome(false, format!("d={d} p={p} n={n}: {got} != {oracle}"));
                }
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(secs < 120.0, format!("{checked} cases equal, {secs:.1}s"))
}

fn closed_form_oracle() -> Outcome {
    // Pascal's triangle up to row 1000, by additions only.
    let mut row = vec![BigUint::one()];
    let mut central = vec![BigUint::one()];
    for m in 1..=1000usize {
        let mut next = vec![BigUint::one(); m + 1];
        for k in 1..m {
            next[k] = &row[k - 1] + &row[k];
        }
        row = next;
        if m % 2 == 0 {
            central.push(row[m / 2].clone());
        }
    }
    for (n, c) in central.iter().enumerate() {
        let want = BigRational::new(c.clone().into(), BigUint::from(4u32).pow(n as u32).into());
        if series::rd_exact(n as u64, 2, Prob::HALF).into_inner() != want {
            return outcome(false, format!("mismatch at n={n}"));
        }
    }
    let out = Command::new(env!("CARGO_BIN_EXE_syncq")).args(["series", "--fig2"]).output().expect("run syncq");
    if !out.status.success() {
        return outcome(false, "series --fig2 failed");
    }
    let text = String::from_utf8(out.stdout).unwrap();
    let inv40 = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == "2" && f[1] == "40")
        .map(|f| f[3].to_string());
    let want = BigRational::new(BigUint::from(4u32).pow(40u32).into(), central[40].clone().into());
    match inv40 {
        Some(s) if s == want.to_string() => outcome(true, format!("n <= 500 exact; fig2 inv_r(40) = {s}")),
        other => outcome(false, format!("fig2 inv_r(40) = {other:?}, want {want}")),
    }
}

fn normalization_and_symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n = rng.random_range(0..=100u64);
        let d = rng.random_range(1..=5u32);
        let den = rng.random_range(2..=64u64);
        let num = rng.random_range(1..den);
        let p = Prob::new(num, den).unwrap();
        if !series::row_normalization(n, p).value().is_one() {
            return outcome(false, format!("case {case}: row {n} at p={p} does not sum to one"));
        }
        if series::rd_exact(n, d, p) != series::rd_exact(n, d, p.complement()) {
            return outcome(false, format!("case {case}: R_{d}({n}) differs at p={p} and 1-p"));
        }
    }
    outcome(true, "200 random cases exact")
}

fn asymptotic_slopes() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for (d, target, tol) in [(2u32, -0.5, 0.05), (3, -1.0, 0.05), (4, -1.5, 0.1)] {
        let rep = series::partial_sum_window(2000, d, Prob::HALF, Backend::Log, (1000, 2000));
        let slope = rep.slope.as_ref().map_or(f64::NAN, |s| s.slope);
        let class_ok = match d {
            2 => rep.classification == Classification::DivergingLike,
            3 => {
                rep.classification == Classification::DivergingLike
                    || (rep.classification == Classification::Inconclusive && (slope + 1.0).abs() <= 0.02)
            }
            _ => rep.classification == Classification::ConvergingLike,
        };
        let ok = (slope - target).abs() <= tol && class_ok;
        pass &= ok;
        notes.push(format!("d={d} slope={slope:.4} {:?}", rep.classification));
    }
    notes.push(format!("{:.2}s", start.elapsed().as_secs_f64()));
    outcome(pass, notes.join("; "))
}

fn clt_diagnostic() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for d in [2u32, 3, 4] {
        let exact = series::rd_exact(2000, d, Prob::HALF).to_f64();
        let dev = (exact / series::clt_approx(2000, d) - 1.0).abs();
        pass &= dev <= 0.05;
        notes.push(format!("d={d} |ratio-1|={dev:.2e}"));
    }
    outcome(pass, notes.join("; "))
}

fn stirling_peak() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for p in [Prob::HALF, Prob::new(1, 3).unwrap(), Prob::new(1, 10).unwrap()] {
        let scan = series::stirling_threshold(p, 0.01, 5000);
        let late = scan.violations.iter().filter(|&&n| n >= scan.n_threshold).count();
        let ok = scan.n_threshold <= 5000 && late == 0 && scan.interval_failures.is_empty();
        pass &= ok;
        notes.push(format!(
            "p={p} N={} max ratio={:.4} interval misses={}",
            scan.n_threshold,
            scan.max_ratio_beyond_threshold,
            scan.interval_failures.len()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn power_sum_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=20usize);
        let w: Vec<u64> = (0..len).map(|_| if rng.random_bool(0.1) { 0 } else { rng.random_range(1..=1000) }).collect();
        let total: u64 = w.iter().sum::<u64>().max(1);
        let mut x: Vec<BigRational> = w.iter().map(|&v| BigRational::new(v.into(), total.into())).collect();
        if x.iter().all(Zero::is_zero) {
            x[0] = BigRational::one();
        }
        let d = rng.random_range(4..=8u32);
        let rep = series::lemma1_check(&x, d).expect("stochastic vector");
        violations += usize::from(!rep.holds());
    }
    outcome(violations == 0, format!("1000 vectors, {violations} violations"))
}

fn d2_lower_bound() -> Outcome {
    let rep = series::d2_lower_bound(200, Prob::HALF);
    let exact_ok = rep.holds() && rep.series_sum_half >= rep.harmonic_sum;
    let long = series::partial_sum(2000, 2, Prob::HALF, Backend::Log);
    let first_above = (0..=2000).find(|&n| long.partial_f64(n) > 4.0);
    let ok = exact_ok && first_above.is_some();
    outcome(
        ok,
        format!(
            "sum to 200 = {:.4} >= H = {:.4}; partial sum passes 4 at n = {first_above:?}, {:.2} at 2000",
            ratio_f64(&rep.series_sum_half),
            ratio_f64(&rep.harmonic_sum),
            long.partial_f64(2000)
        ),
    )
}

fn ratio_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn kendall_drift() -> Outcome {
    let start = Instant::now();
    let (small, large, stable) = match drift::stability_check(200.0, drift::DEFAULT_MAX_STATES) {
        Ok(v) => v,
        Err(e) => return outcome(false, e.to_string()),
    };
    let origin = drift::delta_f(&[0, 0, 0]);
    let want = 0.75 * (std::f64::consts::E + 2.0 / 3.0).ln().ln();
    let origin_ok = (origin - want).abs() <= 1e-10;
    let negative = small.kendall.negative_outside_exceptional && large.kendall.negative_outside_exceptional;

    let classes = drift::classes_within(400.0 * 400.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = classes[rng.random_range(0..classes.len())];
        let (r, phi) = drift::polar_coords(&x);
        worst = worst.max((drift::polar_drift(r, phi, LATTICE_STEP) - drift::delta_f(&x)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = stable && origin_ok && negative && large.margin > 0.0 && worst <= 1e-10 && secs < 60.0;
    outcome(
        pass,
        format!(
            "stable={stable} ({} classes, rho0={:.3}); origin drift {origin:.12}; margin beyond rho0 {:.3e}; polar gap {worst:.1e}; {secs:.1}s",
            small.exceptional_states.len(),
            small.rho0,
            large.margin
        ),
    )
}

fn monte_carlo_consistency() -> Outcome {
    let ns = [1u64, 5, 10];
    let mut notes = Vec::new();
    let mut pass = true;
    for d in [2usize, 3, 4] {
        let first = montecarlo::estimate_rd_at(&ns, d, Prob::HALF, 1_000_000, 2024).unwrap();
        let again = montecarlo::estimate_rd_at(&ns, d, Prob::HALF, 1_000_000, 2024).unwrap();
        pass &= first == again;
        for e in &first.estimates {
            let exact = series::rd_exact(e.n, d as u32, Prob::HALF).to_f64();
            let z = (e.estimate - exact) / e.std_error;
            pass &= z.abs() <= 4.0;
            notes.push(format!("({},{d}) z={z:+.2}", e.n));
        }
    }
    outcome(pass, format!("{}; reruns identical", notes.join(" ")))
}

fn visit_growth() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for d in 2usize..=6 {
        let rep = montecarlo::visit_growth(d, Prob::HALF, 100_000, 64, 99).unwrap();
        match rep.verdict {
            GrowthVerdict::Fail => pass = false,
            GrowthVerdict::Pass | GrowthVerdict::Informational => {}
        }
        if d == 2 || d == 6 {
            pass &= rep.verdict == GrowthVerdict::Pass;
        }
        notes.push(format!("d={d} ratio={:.3} between={:.3} {:?}", rep.ratio, rep.mean_visits_between, rep.verdict));
    }
    outcome(pass, notes.join("; "))
}

fn control_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..50 {
        let seed: u64 = rng.random();
        let d = 2 + i % 3;
        let params = SystemParams::new(d, Prob::new(1, 4).unwrap(), Prob::HALF).unwrap();
        let greedy = montecarlo::excess_path(&params, Policy::Greedy, 10_000, seed, QueueState::empty(d)).unwrap();
        let idle = montecarlo::excess_path(&params, Policy::NeverServe, 10_000, seed, QueueState::empty(d)).unwrap();
        if greedy != idle {
            return outcome(false, format!("seed {seed} (d={d}) paths differ"));
        }
    }
    outcome(true, "50 seeds, identical excess paths over 10^4 slots")
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("brute-force oracle equivalence", brute_force_oracle),
        ("closed form d=2, p=1/2", closed_form_oracle),
        ("row normalization and symmetry", normalization_and_symmetry),
        ("asymptotic slopes", asymptotic_slopes),
        ("CLT diagnostic", clt_diagnostic),
        ("Stirling peak bound", stirling_peak),
        ("power-sum inequalities", power_sum_suite),
        ("d=2 harmonic lower bound", d2_lower_bound),
        ("Lyapunov drift certification", kendall_drift),
        ("Monte Carlo consistency", monte_carlo_consistency),
        ("recurrence/transience diagnostics", visit_growth),
        ("control independence", control_independence),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let el: Duration = t.elapsed();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1}s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", criteria.len() - failed, total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
