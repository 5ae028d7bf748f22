//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{cases, exit_coupling_holds, no_worse, oracle_for, random_tuple, reach_coupling_holds, relative_gap, LP_TOL};
use ftbarrier::bounds::{
    evaluate_bound, lower_bound_safety, reversed_sign_bounds, upper_bound_safety_t1, validate_certificate_params,
    Certificate, CertificateKind,
};
use ftbarrier::bundled;
use ftbarrier::checker::{check_certificate, DEFAULT_BUDGET};
use ftbarrier::model::{DisturbanceSpec, ProblemKind, ProblemSpec};
use ftbarrier::montecarlo::{exact_probability, simulate_event, MCResult};
use ftbarrier::polynomial::{parse_polynomial, var_names};
use ftbarrier::synth::{synthesize, BetaChoice, SynthesisOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ms(d: Duration) -> String {
    format!("{} ms", d.as_millis())
}

/// Estimates for the four reference probabilities, with their run times.
struct Simulations {
    runs: Vec<(&'static str, f64, MCResult, Duration)>,
}

impl Simulations {
    fn get(&self, name: &str) -> &MCResult {
        &self.runs.iter().find(|r| r.0 == name).unwrap().2
    }
}

fn simulate_references() -> Simulations {
    let refs = [
        ("random walk exit", bundled::random_walk(ProblemKind::Safety), 0.0085),
        ("random walk reach-avoid", bundled::random_walk(ProblemKind::ReachAvoid), 0.0128),
        ("contraction exit", bundled::contraction(ProblemKind::Safety), 0.2321),
        ("contraction reach-avoid", bundled::contraction(ProblemKind::ReachAvoid), 0.7708),
    ];
    let runs = refs
        .into_iter()
        .map(|(name, p, expected)| {
            let t = Instant::now();
            let r = simulate_event(&p, 200_000, 2024).unwrap();
            (name, expected, r, t.elapsed())
        })
        .collect();
    Simulations { runs }
}

fn monte_carlo(sims: &Simulations) -> Outcome {
    let mut parts = Vec::new();
    for (name, expected, r, took) in &sims.runs {
        ensure((r.estimate - expected).abs() <= 0.01, || {
            format!("{name}: {} is not within 0.01 of {expected}", r.estimate)
        })?;
        ensure(*took < Duration::from_secs(60), || format!("{name} took {}", ms(*took)))?;
        parts.push(format!("{name} {:.4} (ref {expected}, {})", r.estimate, ms(*took)));
    }
    Ok(parts.join("; "))
}

fn hand_certificate(sims: &Simulations) -> Outcome {
    let p = bundled::random_walk(ProblemKind::Safety);
    let v = parse_polynomial("x^2", &var_names(&["x"])).unwrap();
    let cert = Certificate::new(v, CertificateKind::SafetyUpperT1, 1.0, 1.0 / 300.0, None).unwrap();
    let report = check_certificate(&cert, &p, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(report.is_verified(), || format!("checker says {:?}", report.overall))?;
    let bound = cert.bound(&p.x0, p.horizon).unwrap().raw;
    ensure((bound - 0.14).abs() <= 1e-12, || format!("bound {bound}, expected 0.14"))?;
    let hi = sims.get("random walk exit").ci_hi;
    ensure(0.14 >= hi, || format!("0.14 is below the upper confidence limit {hi}"))?;
    Ok(format!("verified, bound {bound:.12}, upper confidence limit {hi:.4}"))
}

fn closed_forms() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for (i, kind) in CertificateKind::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        for _ in 0..1000 {
            let tu = random_tuple(&mut rng, kind);
            let case = validate_certificate_params(kind, tu.alpha, tu.beta, tu.m).unwrap().case;
            let r = evaluate_bound(kind, tu.v0, tu.alpha, tu.beta, tu.m, tu.n).unwrap();
            let gap = relative_gap(r.raw, oracle_for(&r, case));
            ensure(gap <= 1e-9, || format!("{tu:?}: relative gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {}", ms(took)))?;
    Ok(format!("6000 tuples, worst relative gap {worst:.1e}, {}", ms(took)))
}

/// Three-point variants of both examples, all with horizon 10.
fn finite_variants() -> Vec<(&'static str, ProblemSpec)> {
    let three = |pts: [(f64, f64); 3]| DisturbanceSpec::FiniteSupport(pts.iter().map(|&(d, q)| (vec![d], q)).collect());
    let walk = |kind| bundled::random_walk(kind).with_x0(vec![0.7]).unwrap().with_horizon(10);
    let contraction = |kind| bundled::contraction(kind).with_horizon(10);
    let specs: [(&str, fn(ProblemKind) -> ProblemSpec, DisturbanceSpec); 5] = [
        ("walk, symmetric", walk, three([(-0.1, 1.0 / 3.0), (0.0, 1.0 / 3.0), (0.1, 1.0 / 3.0)])),
        ("walk, drifting", walk, three([(-0.1, 0.2), (0.0, 0.3), (0.1, 0.5)])),
        ("contraction, symmetric", contraction, three([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])),
        ("contraction, skewed", contraction, three([(-0.8, 1.0 / 3.0), (0.0, 1.0 / 3.0), (0.9, 1.0 / 3.0)])),
        ("contraction, wide", contraction, three([(-1.0, 0.3), (0.2, 0.4), (1.0, 0.3)])),
    ];
    let mut out = Vec::new();
    for (name, base, d) in specs {
        for kind in [ProblemKind::Safety, ProblemKind::ReachAvoid] {
            out.push((name, base(kind).with_disturbance(d.clone()).unwrap()));
        }
    }
    out
}

fn kinds_for(kind: ProblemKind) -> [(CertificateKind, f64, BetaChoice); 3] {
    match kind {
        ProblemKind::Safety => [
            (CertificateKind::SafetyUpperT1, 1.0, BetaChoice::Free),
            (CertificateKind::SafetyUpperKushner, 1.01, BetaChoice::Free),
            (CertificateKind::SafetyLower, 1.1, BetaChoice::Fixed(0.0)),
        ],
        ProblemKind::ReachAvoid => [
            (CertificateKind::RaUpperT3, 1.0, BetaChoice::Free),
            (CertificateKind::RaUpperKushner, 1.01, BetaChoice::Free),
            (CertificateKind::RaLower, 1.06, BetaChoice::Fixed(0.0)),
        ],
    }
}

fn bracketing() -> Outcome {
    let options = SynthesisOptions {
        degree: 6,
        depth: 5,
        ..Default::default()
    };
    let (mut uppers, mut lowers) = (0, 0);
    let mut tightest = f64::INFINITY;
    for (name, p) in finite_variants() {
        let exact = exact_probability(&p, p.horizon).map_err(|e| e.to_string())?;
        for (kind, alpha, beta) in kinds_for(p.kind) {
            let Ok(s) = synthesize(&p, kind, alpha, beta, &options) else {
                continue;
            };
            // the synthesizer already audits; check again from the serialized form
            let cert = s.certificate.to_certificate(&p.system.state_vars)?;
            let report = check_certificate(&cert, &p, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            if !report.is_verified() {
                continue;
            }
            let b = cert.bound(&p.x0, p.horizon).map_err(|e| e.to_string())?.clamped;
            let margin = if kind.is_lower() { exact - b } else { b - exact };
            ensure(margin >= -1e-9, || format!("{name} {kind}: bound {b} vs exact {exact}"))?;
            tightest = tightest.min(margin);
            if kind.is_lower() {
                lowers += 1;
            } else {
                uppers += 1;
            }
        }
    }
    ensure(uppers > 0 && lowers > 0, || format!("only {uppers} upper and {lowers} lower certificates"))?;
    Ok(format!("10 variants, {uppers} upper and {lowers} lower certificates, smallest margin {tightest:.2e}"))
}

fn timed_synthesis(
    p: &ProblemSpec,
    kind: CertificateKind,
    alpha: f64,
    beta: BetaChoice,
    degree: u32,
) -> Result<(f64, Duration), String> {
    let t = Instant::now();
    let s = synthesize(p, kind, alpha, beta, &SynthesisOptions { degree, ..Default::default() })
        .map_err(|e| format!("{kind} α={alpha} degree {degree}: {e}"))?;
    let took = t.elapsed();
    ensure(took < Duration::from_secs(600), || format!("{kind} degree {degree} took {}", ms(took)))?;
    Ok((s.bound.clamped, took))
}

fn synthesis_targets(sims: &Simulations) -> Outcome {
    let walk = bundled::random_walk(ProblemKind::Safety);
    let (t1, _) = timed_synthesis(&walk, CertificateKind::SafetyUpperT1, 1.0, BetaChoice::Free, 2)?;
    ensure(t1 <= 0.145, || format!("random walk α=1 degree 2: {t1}"))?;

    let lo = sims.get("random walk exit").ci_lo;
    let (discounted, _) = timed_synthesis(&walk, CertificateKind::SafetyUpperT1, 1.0 / 1.1, BetaChoice::Free, 12)?;
    ensure(discounted < t1 && discounted >= lo, || {
        format!("random walk α=1/1.1 degree 12: {discounted} (α=1 bound {t1}, lower confidence limit {lo})")
    })?;

    let walk_ra = bundled::random_walk(ProblemKind::ReachAvoid);
    let (ra, _) = timed_synthesis(&walk_ra, CertificateKind::RaUpperT3, 1.0, BetaChoice::Free, 4)?;
    ensure(ra <= 0.19, || format!("random walk reach-avoid α=1 degree 4: {ra}"))?;

    let contraction_ra = bundled::contraction(ProblemKind::ReachAvoid);
    let (lower, _) = timed_synthesis(&contraction_ra, CertificateKind::RaLower, 1.06, BetaChoice::Fixed(0.0), 4)?;
    ensure(lower >= 0.10, || format!("contraction reach-avoid lower degree 4: {lower}"))?;

    Ok(format!(
        "walk α=1 d2 {t1:.4}; walk α=1/1.1 d12 {discounted:.4}; walk reach-avoid d4 {ra:.4}; contraction lower d4 {lower:.4}"
    ))
}

fn couplings() -> Outcome {
    let t = Instant::now();
    exit_coupling_holds(&bundled::random_walk(ProblemKind::Safety))?;
    exit_coupling_holds(&bundled::contraction(ProblemKind::Safety))?;
    reach_coupling_holds(&bundled::random_walk(ProblemKind::ReachAvoid))?;
    reach_coupling_holds(&bundled::contraction(ProblemKind::ReachAvoid))?;
    let took = t.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {}", ms(took)))?;
    Ok(format!("exit and reach couplings on both examples, {}", ms(took)))
}

fn reversed_sign() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let v0 = rng.random_range(-2.0..=0.0);
        let alpha = if rng.random_bool(0.2) { 1.0 } else { rng.random_range(0.3..1.0) };
        let beta = rng.random_range(-1.0..1.0);
        let n = rng.random_range(0..80);
        let r = reversed_sign_bounds(v0, alpha, beta, n);
        ensure(r.raw <= 1e-12, || format!("raw {} at {:?}", r.raw, (v0, alpha, beta, n)))?;
        worst = worst.max(r.raw);
    }
    Ok(format!("1000 tuples, largest raw bound {worst:.3e}"))
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..1000 {
        let (v0, beta, n) = (rng.random_range(0.0..1.0), rng.random_range(0.0..=1.0), rng.random_range(0..100));
        let a = upper_bound_safety_t1(v0, 1.0, beta, n).unwrap().raw;
        let b = upper_bound_safety_t1(v0, 1.0, beta, n + 1).unwrap().raw;
        ensure(b >= a, || format!("upper bound decreases in N at {:?}", (v0, beta, n)))?;
        let m = rng.random_range(0.0..3.0);
        let v0 = m * rng.random_range(0.0..=1.0);
        let beta = rng.random_range(1e-3..1.0);
        let a = lower_bound_safety(v0, m, 1.0, beta, n).unwrap().raw;
        let b = lower_bound_safety(v0, m, 1.0, beta, n + 1).unwrap().raw;
        ensure(b >= a, || format!("lower bound decreases in N at {:?}", (v0, m, beta, n)))?;
    }
    for c in cases() {
        let run = |degree, depth| {
            synthesize(&c.problem, c.kind, c.alpha, c.beta, &common::options(degree, depth))
                .map(|s| s.bound.raw)
                .map_err(|e| format!("{} degree {degree} depth {depth}: {e}", c.kind))
        };
        let by_degree = [2, 4, 6, 8, 10].map(|d| run(d, 5)).into_iter().collect::<Result<Vec<_>, _>>()?;
        let by_depth = (2..=7).map(|k| run(6, k)).collect::<Result<Vec<_>, _>>()?;
        for seq in [&by_degree, &by_depth] {
            ensure(seq.windows(2).all(|w| no_worse(c.kind, w[0], w[1], LP_TOL)), || {
                format!("{}: {seq:?}", c.kind)
            })?;
        }
    }
    Ok("horizon (2000 tuples), degree 2..10 and depth 2..7 on five synthesis cases".into())
}

fn main() {
    let sims = simulate_references();
    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "Monte-Carlo reference probabilities", monte_carlo(&sims)),
        (2, "hand certificate", hand_certificate(&sims)),
        (3, "closed forms against the recursion oracle", closed_forms()),
        (4, "bracketing of exact probabilities", bracketing()),
        (5, "synthesis targets", synthesis_targets(&sims)),
        (6, "coupling suites", couplings()),
        (7, "reversed-sign bounds", reversed_sign()),
        (8, "monotonicity suites", monotonicity()),
    ];
    let mut failed = 0;
    for (id, title, r) in &results {
        match r {
            Ok(detail) => println!("criterion {id} PASS: {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} FAIL: {title}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
