//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report is always
//! printed.

use std::time::{Duration, Instant};

use zeno::parallel::run_ensemble;
use zeno::reference::{Printed, TABLE1, TABLE2};
use zeno::{tables, RunConfig};
use zeno_core::analytic::{rho22_ideal, ProbeCorrection};
use zeno_core::bloch::{self, renewal_reconstruct, run_schedule, run_segments, RunOptions};
use zeno_core::linalg3::{c, expm9, expm_action3, Complex, Mat3C, Vec3C};
use zeno_core::nophoton::{self, NoPhotonCurve, TABLE1_COUNTS, TABLE1_RATIOS};
use zeno_core::presets::{itano, itano_schedule};
use zeno_core::trajectories::{open_uniform, stream, TrajectoryEngine, CHUNK};
use zeno_core::vsystem::{liouvillian, reduced_operator};
use zeno_core::{DensityMatrix3, Mode, Placement, Segment, VParams};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn canonical(n: usize) -> (VParams, zeno_core::PulseSchedule) {
    (itano(), itano_schedule(n, Mode::Simultaneous))
}

fn correction(n: usize) -> ProbeCorrection {
    let (p, s) = canonical(n);
    ProbeCorrection::from_params(&p, &s).unwrap()
}

/// Compare a computed Table 2 column against the printed one.
fn table2_column(
    tol: f64,
    printed: impl Fn(&zeno::reference::Table2Row) -> f64,
    computed: impl Fn(usize) -> f64,
) -> (bool, String) {
    let mut pass = true;
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for row in &TABLE2 {
        let got = computed(row.n);
        let d = (got - printed(row)).abs();
        worst = worst.max(d);
        if d > tol {
            pass = false;
            misses.push(format!(
                "n={} got {got:.6} printed {:.5}",
                row.n,
                printed(row)
            ));
        }
    }
    let detail = if misses.is_empty() {
        format!("max |Δ| {worst:.2e} ≤ {tol:.0e}")
    } else {
        format!("|Δ| > {tol:.0e} at {}", misses.join("; "))
    };
    (pass, detail)
}

fn criterion1() -> Verdict {
    let started = Instant::now();
    let values: Vec<f64> = TABLE2.iter().map(|r| rho22_ideal(r.n)).collect();
    let elapsed = started.elapsed();
    let (pass, detail) = table2_column(
        5e-6,
        |r| r.ideal,
        |n| values[TABLE2.iter().position(|r| r.n == n).unwrap()],
    );
    let fast = elapsed < Duration::from_millis(1);
    Verdict::new(pass && fast, format!("{detail}; {:.4} ms", ms(elapsed)))
}

fn criterion2() -> Verdict {
    let (pass, detail) = table2_column(5e-5, |r| r.modified, |n| correction(n).rho22_modified(n));
    Verdict::new(pass, detail)
}

fn criterion3() -> Verdict {
    let (pass, detail) = table2_column(1e-4, |r| r.quantum_jump, |n| correction(n).rho22_jump(n));
    Verdict::new(pass, format!("eps_p {:.3e}; {detail}", correction(4).eps_p))
}

fn criterion4() -> Verdict {
    let started = Instant::now();
    let bloch: Vec<(usize, f64)> = TABLE2
        .iter()
        .map(|r| {
            let (p, s) = canonical(r.n);
            (
                r.n,
                bloch::final_state(&p, &s, false).unwrap().population(2),
            )
        })
        .collect();
    let elapsed = started.elapsed();
    let value = |n: usize| bloch.iter().find(|b| b.0 == n).unwrap().1;
    let (vs_printed, detail) = table2_column(2e-4, |r| r.bloch, value);
    let jump_gap = bloch
        .iter()
        .map(|&(n, b)| (b - correction(n).rho22_jump(n)).abs())
        .fold(0.0, f64::max);
    let pass = vs_printed && jump_gap <= 2e-4 && elapsed < Duration::from_secs(1);
    Verdict::new(
        pass,
        format!(
            "{detail}; max |bloch − jump| {jump_gap:.2e}; {:.1} ms for all n",
            ms(elapsed)
        ),
    )
}

fn criterion5() -> Verdict {
    let started = Instant::now();
    let cells = nophoton::table1(&TABLE1_RATIOS, &TABLE1_COUNTS).unwrap();
    let elapsed = started.elapsed();
    let mut misses = Vec::new();
    let mut over_bound = Vec::new();
    for cell in &cells {
        let i = TABLE1_RATIOS.iter().position(|&r| r == cell.ratio).unwrap();
        let j = TABLE1_COUNTS
            .iter()
            .position(|&n| n == cell.n_photons)
            .unwrap();
        let printed: Printed = TABLE1[i][j];
        if !printed.matches(cell.max_norm) {
            misses.push(format!(
                "ratio {} N={} got {:.4e} printed {}",
                cell.ratio, cell.n_photons, cell.max_norm, printed.0
            ));
        }
        if cell.max_norm > 1.04 * (-(cell.n_photons as f64) / 2.0).exp() {
            over_bound.push(format!("ratio {} N={}", cell.ratio, cell.n_photons));
        }
    }
    let pass = cells.len() == 28
        && misses.is_empty()
        && over_bound.is_empty()
        && elapsed < Duration::from_secs(1);
    let mut detail = format!("{}/28 entries match", 28 - misses.len());
    if !misses.is_empty() {
        detail += &format!(" (miss: {})", misses.join("; "));
    }
    detail += &format!(
        "; {} above 1.04·e^(−N/2); {:.1} ms",
        over_bound.len(),
        ms(elapsed)
    );
    Verdict::new(pass, detail)
}

fn criterion6() -> Verdict {
    const N_TRAJ: u64 = 100_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1usize, 4, 16] {
        let (p, s) = canonical(n);
        let engine = TrajectoryEngine::new(&p, &s).unwrap();
        let started = Instant::now();
        let run = run_ensemble(&engine, N_TRAJ, 2024, None, false).unwrap();
        let elapsed = started.elapsed();
        let st = run.stats;
        let bloch = bloch::final_state(&p, &s, false).unwrap();
        let se = st.population_se(2);
        let d22 = (st.rho_hat.population(2) - bloch.population(2)).abs();
        let dmax = (*st.rho_hat.matrix() - *bloch.matrix()).max_abs();
        // Determinism: a few chunks on 1 and 8 workers.
        let small = 3 * CHUNK + 17;
        let one = run_ensemble(&engine, small, 7, Some(1), true).unwrap();
        let eight = run_ensemble(&engine, small, 7, Some(8), true).unwrap();
        let same = one == eight;
        let ok = d22 <= 4.0 * se
            && dmax <= 4.0 * st.max_se()
            && same
            && elapsed < Duration::from_secs(60);
        pass &= ok;
        parts.push(format!(
            "n={n}: rho22 {:.5} bloch {:.5} |Δ|/SE {:.2} (SE {se:.1e}), max-entry |Δ|/maxSE {:.2}, workers 1≡8 {same}, {:.1} s",
            st.rho_hat.population(2),
            bloch.population(2),
            d22 / se,
            dmax / st.max_se(),
            elapsed.as_secs_f64()
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

// Criterion 7: property checks on seeded samples.

/// Uniform draws, one substream per draw.
struct Sampler {
    seed: u64,
    drawn: u64,
}

impl Sampler {
    fn new(seed: u64) -> Self {
        Sampler { seed, drawn: 0 }
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.drawn += 1;
        lo + (hi - lo) * open_uniform(&mut stream(self.seed, self.drawn))
    }

    fn complex(&mut self) -> Complex {
        c(self.uniform(-1.0, 1.0), self.uniform(-1.0, 1.0))
    }

    fn vec3(&mut self) -> Vec3C {
        Vec3C([self.complex(), self.complex(), self.complex()])
    }

    fn mat3(&mut self, norm: f64) -> Mat3C {
        let m = Mat3C([0, 1, 2].map(|_| [self.complex(), self.complex(), self.complex()]));
        m.scale(c(norm / m.norm1(), 0.0))
    }

    fn params(&mut self) -> VParams {
        VParams::new(
            self.uniform(0.0, 3.0),
            self.uniform(0.0, 3.0),
            self.uniform(0.0, 3.0),
            self.uniform(0.0, 3.0),
        )
        .unwrap()
    }

    fn density(&mut self) -> DensityMatrix3 {
        // Mixture of two random pure states.
        let a = DensityMatrix3::pure(&self.vec3()).unwrap();
        let b = DensityMatrix3::pure(&self.vec3()).unwrap();
        let w = self.uniform(0.0, 1.0);
        DensityMatrix3::mix(w, &a, 1.0 - w, &b)
    }
}

type Arr = [[Complex; 3]; 3];

fn arr_mul(a: &Arr, b: &Arr) -> Arr {
    let mut out = [[c(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Scaled 40-term Taylor series with repeated squaring on plain arrays.
fn taylor_expm(a: Arr) -> Arr {
    let norm = (0..3)
        .map(|j| (0..3).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let x = a.map(|r| r.map(|z| z * 0.5f64.powi(s)));
    let mut term = [[c(0.0, 0.0); 3]; 3];
    for (i, row) in term.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    let mut sum = term;
    for k in 1..40 {
        term = arr_mul(&term, &x).map(|r| r.map(|z| z / k as f64));
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = arr_mul(&sum, &sum);
    }
    sum
}

fn check(failures: &mut Vec<String>, name: &str, ok: bool) {
    if !ok && !failures.iter().any(|f| f == name) {
        failures.push(name.to_owned());
    }
}

fn criterion7() -> Verdict {
    let mut failures = Vec::new();
    let mut r = Sampler::new(77);

    // expm action against the Taylor oracle, and the semigroup law.
    for _ in 0..500 {
        let norm = r.uniform(0.0, 10.0);
        let m = r.mat3(norm);
        let t = r.uniform(0.0, 2.0);
        let v = r.vec3();
        let e = taylor_expm(m.scale(c(-t, 0.0)).0);
        let want: Vec<Complex> = (0..3)
            .map(|i| (0..3).map(|k| e[i][k] * v.0[k]).sum())
            .collect();
        let got = expm_action3(&m, t, &v);
        let err = (0..3)
            .map(|i| (got.0[i] - want[i]).norm())
            .fold(0.0, f64::max);
        let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
        check(&mut failures, "expm-vs-Taylor", err <= 1e-9 * scale);

        let s = r.uniform(0.0, 2.0);
        let joint = expm_action3(&m, t + s, &v);
        let split = expm_action3(&m, t, &expm_action3(&m, s, &v));
        check(
            &mut failures,
            "semigroup",
            (joint - split).max_abs() <= 1e-10 * joint.max_abs().max(1.0),
        );
    }
    for _ in 0..50 {
        let l = liouvillian(&r.params());
        let (t, s) = (r.uniform(0.0, 2.0), r.uniform(0.0, 2.0));
        let joint = expm9(&l, t + s).unwrap();
        let split = expm9(&l, t).unwrap() * expm9(&l, s).unwrap();
        check(
            &mut failures,
            "semigroup",
            (joint - split).max_abs() <= 1e-10,
        );
    }

    // w1 against a fourth-order central difference of P0.
    let mut fd_cases = 0;
    while fd_cases < 300 {
        let p = r.params();
        let psi = r.vec3().normalized().unwrap();
        let t = r.uniform(0.05, 5.0);
        let curve = NoPhotonCurve::new(&reduced_operator(&p), &psi);
        let w = curve.w1(t);
        if w <= 1e-4 {
            continue;
        }
        fd_cases += 1;
        let h = 1e-3;
        let fd = -(curve.p0(t - 2.0 * h) - 8.0 * curve.p0(t - h) + 8.0 * curve.p0(t + h)
            - curve.p0(t + 2.0 * h))
            / (12.0 * h);
        check(&mut failures, "w1-vs-FD", (fd - w).abs() <= 1e-6 * w);
    }

    // Trace, Hermiticity and positivity along Bloch traces.
    let p = itano();
    for n in 1..=64 {
        for mode in [Mode::Simultaneous, Mode::Intermittent] {
            let s = itano_schedule(n, mode);
            let rho0 = if n % 4 == 0 {
                DensityMatrix3::ground()
            } else {
                r.density()
            };
            let opts = RunOptions {
                sample_step: Some(1.0 / 97.0),
                settle: n % 8 == 0,
            };
            for (_, rho) in &run_schedule(&p, &s, &rho0, &opts).unwrap().samples {
                check(&mut failures, "trace", (rho.trace() - 1.0).abs() <= 1e-10);
                check(
                    &mut failures,
                    "hermiticity",
                    rho.hermiticity_defect() <= 1e-10,
                );
                check(&mut failures, "positivity", rho.min_eigenvalue() >= -1e-8);
            }
        }
    }

    // Renewal reconstruction against direct Bloch propagation.
    let probe = itano().probe_only();
    let t = 5.0 / probe.a3;
    let seg = |t: f64, pi_on: bool| Segment {
        start: 0.0,
        end: t,
        duration: t,
        probe_on: true,
        pi_on,
        window: None,
    };
    let cases = [
        (probe, seg(t, false), DensityMatrix3::ground()),
        (
            VParams::new(0.7, 1.3, 0.2, 1.0).unwrap(),
            seg(3.0, true),
            DensityMatrix3::pure(&Vec3C([c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)])).unwrap(),
        ),
    ];
    for (p, seg, rho0) in cases {
        let direct = run_segments(&p, &[seg], &rho0, &RunOptions::default()).unwrap();
        let rebuilt = renewal_reconstruct(&p, seg.duration, &rho0, 10_000).unwrap();
        check(
            &mut failures,
            "renewal",
            (direct.last().0 - rebuilt.0).max_abs() <= 1e-8,
        );
    }

    // β recurrence against its closed form, and the ε_p → 0 collapse.
    for pc in [
        correction(4),
        ProbeCorrection::new(0.01, 0.02),
        ProbeCorrection::new(0.0, 0.0),
    ] {
        for n in 1..=64 {
            for (k, b) in pc.beta_sequence(n).iter().enumerate() {
                check(
                    &mut failures,
                    "beta-identity",
                    (b - pc.beta_closed(n, k + 1)).abs() <= 1e-14,
                );
            }
        }
    }
    for n in 1..=64 {
        let pc = ProbeCorrection::new(0.0, 0.009375);
        check(
            &mut failures,
            "eps-collapse",
            pc.rho22_jump(n) == pc.rho22_modified(n),
        );
        let ideal = ProbeCorrection::new(0.0, 0.0);
        check(
            &mut failures,
            "eps-collapse",
            ideal.rho22_modified(n) == rho22_ideal(n) && ideal.rho22_jump(n) == rho22_ideal(n),
        );
    }

    let detail = if failures.is_empty() {
        "semigroup, expm-vs-Taylor 1e-9, w1-vs-FD 1e-6, trace/Hermiticity 1e-10, positivity 1e-8, renewal 1e-8, beta identity 1e-14, eps_p→0 exact".to_owned()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    Verdict::new(failures.is_empty(), detail)
}

fn criterion8() -> Verdict {
    let canonical = RunConfig {
        ns: TABLE2.iter().map(|r| r.n).collect(),
        ..RunConfig::resolve(&Default::default(), Default::default()).unwrap()
    };
    let rows = tables::table2(&canonical, false).unwrap();
    let echoed = rows
        .iter()
        .zip(&TABLE2)
        .all(|(row, r)| row.observed == Some(r.observed));
    let other = RunConfig {
        placement: Placement::Start,
        ..canonical.clone()
    };
    let hidden = tables::table2(&other, false)
        .unwrap()
        .iter()
        .all(|row| row.observed.is_none());
    let observed: Vec<String> = TABLE2
        .iter()
        .map(|r| format!("{}:{}", r.n, r.observed))
        .collect();
    Verdict::new(
        echoed && hidden,
        format!(
            "not a target; echoed for the canonical setting only ({})",
            observed.join(" ")
        ),
    )
}

type Criterion = fn() -> Verdict;

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("Table 2 ideal column", criterion1),
        ("Table 2 modified-interval column", criterion2),
        ("Table 2 quantum-jump column", criterion3),
        ("Table 2 Bloch column", criterion4),
        ("Table 1 non-reduced norms", criterion5),
        ("Monte-Carlo ensemble vs Bloch", criterion6),
        ("Property suites", criterion7),
        ("Observed column echoed only", criterion8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let started = Instant::now();
        let v = run();
        let verdict = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {verdict}: {name} [{:.2} s] {}",
            started.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria failed",
        failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
