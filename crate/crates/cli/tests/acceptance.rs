use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use upbbell::bell::{equivalent, gyni_inequality, inequality_from_set, unit_inequality, BellInequality, Scenario};
use upbbell::bounds::{
    bell_operator, classical_bound, ns::ns_bound, own_projectors, product_epsilon, quantum_spectral_bound,
    random_projectors, sample_normalized_witness, upb_witness, witness_value_check,
};
use upbbell::families::{default_e, gyni_upb, random_p_set, recursive_extend, shifts_upb, LocalPairChoice};
use upbbell::linalg::{span_projector, Ket};
use upbbell::product_set::{check_property_p, gram_orthogonality_check, same_up_to_order_and_phase, ProductVectorSet};
use upbbell::ratio::{self, Rational};
use upbbell::tightness::{is_tight, polytope_dimension};
use upbbell::upb::{
    completability_search, completed_set, cross_check, numeric_extendibility, unextendible_qubit, Completion,
    COMPLETION_BUDGET,
};

const SHIFTS_BETA_N: (i64, i64) = (4, 3);
const SHIFTS_EPSILON: f64 = 0.081441346456309;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Check {
    ensure(t.elapsed() < limit, || format!("took {:?}, limit {limit:?}", t.elapsed()))
}

fn own_inequality(set: &ProductVectorSet, weights: &[Rational]) -> Result<BellInequality, String> {
    let p = check_property_p(set);
    let part = p.partition().ok_or("set violates (P)")?;
    inequality_from_set(set, part, weights).map_err(|e| e.to_string())
}

fn ones(k: usize) -> Vec<Rational> {
    vec![Rational::from_integer(1.into()); k]
}

fn shifts_end_to_end() -> Check {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_upbbell"))
        .args(["pipeline", "--n", "3", "--format", "compact"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let ineq: BellInequality = serde_json::from_value(v["inequality"].clone()).map_err(|e| e.to_string())?;
    let listed = unit_inequality(3, &["000|000", "100|011", "011|101", "111|110"]).map_err(|e| e.to_string())?;
    ensure(equivalent(&ineq, &listed).map_err(|e| e.to_string())?, || "canonical forms differ".into())?;
    ensure(v["bounds"]["beta_c"] == "1/1", || format!("beta_c {}", v["bounds"]["beta_c"]))?;
    let spectral = v["bounds"]["beta_q_spectral"].as_f64().ok_or("no spectral bound")?;
    ensure((spectral - 1.0).abs() <= 1e-9, || format!("max eigenvalue {spectral}"))?;
    within(t, Duration::from_secs(10))
}

fn supraquantum_violation() -> Check {
    let t = Instant::now();
    let set = shifts_upb(None).map_err(|e| e.to_string())?;
    let pi = span_projector(&set.global_kets()).map_err(|e| e.to_string())?;
    let eps = product_epsilon(&pi, set.dims(), 64, 0).map_err(|e| e.to_string())?.value;
    let w = upb_witness(&set, eps).map_err(|e| e.to_string())?;
    ensure(w.trace_bw > 1.0 + 1e-6, || format!("Tr(BW) = {}", w.trace_bw))?;
    let formula = 4.0 * (1.0 - eps) / (4.0 - 8.0 * eps);
    ensure((w.trace_bw - formula).abs() <= 1e-8, || format!("Tr(BW) {} vs {formula}", w.trace_bw))?;
    ensure((eps - SHIFTS_EPSILON).abs() <= 1e-6, || format!("epsilon {eps}"))?;
    let ineq = own_inequality(&set, &ones(4))?;
    let beta_n = ns_bound(&ineq).map_err(|e| e.to_string())?.value;
    let frozen = Rational::new(SHIFTS_BETA_N.0.into(), SHIFTS_BETA_N.1.into());
    ensure(beta_n == frozen, || format!("beta_n {}", ratio::format(&beta_n)))?;
    within(t, Duration::from_secs(60))
}

fn gyni_family() -> Check {
    let t = Instant::now();
    let mut chain = gyni_upb(3, &LocalPairChoice::default_for(3)).map_err(|e| e.to_string())?;
    for n in 3..=6 {
        let set = gyni_upb(n, &LocalPairChoice::default_for(n)).map_err(|e| e.to_string())?;
        let g = gram_orthogonality_check(&set);
        ensure(g.worst_overlap <= 1e-12, || format!("n={n}: overlap {}", g.worst_overlap))?;
        let q = unextendible_qubit(&set).map_err(|e| e.to_string())?;
        ensure(q.is_upb(), || format!("n={n}: {:?}", q.status))?;
        let v = numeric_extendibility(&set, 8, n as u64).map_err(|e| e.to_string())?;
        ensure(v > 1e-4, || format!("n={n}: numeric {v}"))?;
        if n > 3 {
            chain = recursive_extend(&chain, &default_e()).map_err(|e| e.to_string())?;
            ensure(same_up_to_order_and_phase(&chain, &set), || format!("n={n}: recursion differs"))?;
        }
    }
    within(t, Duration::from_secs(120))
}

fn bound_entanglement() -> Check {
    let set = shifts_upb(None).map_err(|e| e.to_string())?;
    let pi = span_projector(&set.global_kets()).map_err(|e| e.to_string())?;
    let eps = product_epsilon(&pi, set.dims(), 64, 0).map_err(|e| e.to_string())?.value;
    let w = upb_witness(&set, eps).map_err(|e| e.to_string())?;
    ensure((w.trace_rho - 1.0).abs() <= 1e-12, || format!("Tr(rho) {}", w.trace_rho))?;
    ensure(w.ppt_flags.len() == 3, || format!("{} bipartitions", w.ppt_flags.len()))?;
    for f in &w.ppt_flags {
        ensure(f.min_eigenvalue >= -1e-10, || format!("{:?}: {}", f.parties, f.min_eigenvalue))?;
    }
    ensure(w.trace_w_rho < -1e-6, || format!("Tr(W rho) {}", w.trace_w_rho))
}

fn fact_one_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..100 {
        let set = random_p_set(3, &mut rng).map_err(|e| e.to_string())?;
        let w: Vec<Rational> = (0..set.len())
            .map(|_| Rational::new(rng.random_range(1..=40).into(), rng.random_range(1..=12).into()))
            .collect();
        let qmax = w.iter().max().ok_or("empty set")?.clone();
        let ineq = own_inequality(&set, &w)?;
        let c = classical_bound(&ineq).map_err(|e| e.to_string())?.value;
        ensure(c == qmax, || format!("instance {k}: beta_c {} vs {}", ratio::format(&c), ratio::format(&qmax)))?;
        let part = check_property_p(&set).partition().cloned().ok_or("no partition")?;
        let q = ratio::to_f64(&qmax);
        let own = quantum_spectral_bound(&ineq, &own_projectors(&part)).map_err(|e| e.to_string())?;
        ensure((own - q).abs() <= 1e-9, || format!("instance {k}: spectral {own} vs {q}"))?;
        for r in 0..10 {
            let proj = random_projectors(&ineq.scenario, &[3, 3, 3], &mut rng);
            let v = quantum_spectral_bound(&ineq, &proj).map_err(|e| e.to_string())?;
            ensure((v - q).abs() <= 1e-9, || format!("instance {k}, reassignment {r}: {v} vs {q}"))?;
        }
    }
    Ok(())
}

fn tightness() -> Check {
    let t = Instant::now();
    for (n, dim) in [(2, 8), (3, 26)] {
        let s = Scenario::uniform(n, 2, 2).map_err(|e| e.to_string())?;
        let d = polytope_dimension(&s).map_err(|e| e.to_string())?;
        ensure(d == dim, || format!("n={n}: dimension {d}"))?;
    }
    let r = is_tight(&gyni_inequality(3).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(r.is_facet, || format!("n=3: {r:?}"))?;
    within(t, Duration::from_secs(30))?;
    let r = is_tight(&gyni_inequality(4).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(r.is_facet, || format!("n=4: {r:?}"))?;
    within(t, Duration::from_secs(600))
}

fn basis(strings: &[&str]) -> ProductVectorSet {
    let n = strings[0].len();
    let members = strings
        .iter()
        .map(|s| s.chars().map(|c| Ket::basis(2, c.to_digit(10).unwrap() as usize)).collect())
        .collect();
    ProductVectorSet::new(vec![2; n], members).unwrap()
}

fn plus_minus(sign: f64) -> Ket {
    Ket::from_real(&[1.0, sign]).unwrap()
}

fn fact_four_smoke() -> Check {
    let full = basis(&["000", "001", "010", "011", "100", "101", "110", "111"]);
    let pair = basis(&["000", "011"]);
    let mixed = ProductVectorSet::new(
        vec![2, 2],
        vec![vec![Ket::basis(2, 0), Ket::basis(2, 0)], vec![Ket::basis(2, 1), plus_minus(1.0)]],
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sampled = 0;
    for (k, set) in [full, pair, mixed].iter().enumerate() {
        match completability_search(set, COMPLETION_BUDGET).map_err(|e| e.to_string())? {
            Completion::Found(c) => {
                let whole = completed_set(set, &c).map_err(|e| e.to_string())?;
                ensure(whole.span_rank() == whole.total_dim(), || format!("set {k}: completion not spanning"))?;
            }
            other => return Err(format!("set {k}: {other:?}")),
        }
        let w: Vec<Rational> = (0..set.len())
            .map(|_| Rational::new(rng.random_range(1..=30).into(), 10.into()))
            .collect();
        let qmax = ratio::to_f64(w.iter().max().ok_or("empty")?);
        let ineq = own_inequality(set, &w)?;
        let part = check_property_p(set).partition().cloned().ok_or("no partition")?;
        let b = bell_operator(&ineq, &own_projectors(&part)).map_err(|e| e.to_string())?;
        let per_set = if k == 0 { 16 } else { 17 };
        for s in 0..per_set {
            let wit = sample_normalized_witness(set.dims(), 1000 * k as u64 + s, 16).map_err(|e| e.to_string())?;
            let v = witness_value_check(&b, &wit.witness).map_err(|e| e.to_string())?;
            ensure(v <= qmax + 1e-9, || format!("set {k}, witness {s}: Tr(BW) {v} > {qmax}"))?;
            sampled += 1;
        }
    }
    ensure(sampled == 50, || format!("{sampled} witnesses"))
}

fn upb_corpus() -> Result<Vec<ProductVectorSet>, String> {
    let mut sets = vec![shifts_upb(None).map_err(|x| x.to_string())?];
    let tilted = LocalPairChoice::from_angles(&[0.4, 0.9, 1.2]).map_err(|x| x.to_string())?;
    sets.push(shifts_upb(Some(&tilted)).map_err(|x| x.to_string())?);
    for n in 3..=6 {
        sets.push(gyni_upb(n, &LocalPairChoice::default_for(n)).map_err(|x| x.to_string())?);
    }
    for angles in [[0.3, 0.5, 0.7], [0.2, 1.1, 0.4]] {
        sets.push(gyni_upb(3, &LocalPairChoice::from_angles(&angles).map_err(|x| x.to_string())?).map_err(|x| x.to_string())?);
    }
    // A UPB minus one member is extendible by the removed member.
    for upb in sets.clone() {
        let mut members = upb.members().to_vec();
        members.pop();
        sets.push(ProductVectorSet::new(upb.dims().to_vec(), members).map_err(|x| x.to_string())?);
    }
    sets.push(basis(&["000", "011", "101", "110"]));
    sets.push(basis(&["00"]));
    sets.push(basis(&["000", "011"]));
    sets.push(basis(&["00", "01", "10", "11"]));
    sets.push(basis(&["000", "001", "010", "011", "100", "101", "110", "111"]));
    sets.push(
        ProductVectorSet::new(
            vec![2, 2],
            vec![
                vec![Ket::basis(2, 0), plus_minus(1.0)],
                vec![Ket::basis(2, 0), plus_minus(-1.0)],
                vec![Ket::basis(2, 1), Ket::basis(2, 0)],
                vec![Ket::basis(2, 1), Ket::basis(2, 1)],
            ],
        )
        .map_err(|x| x.to_string())?,
    );
    Ok(sets)
}

fn cross_method_agreement() -> Check {
    let sets = upb_corpus()?;
    ensure(sets.len() >= 20, || format!("corpus of {}", sets.len()))?;
    for (k, set) in sets.iter().enumerate() {
        let c = cross_check(set, 8, k as u64).map_err(|e| e.to_string())?;
        ensure(c.agree, || format!("set {k}: {c:?}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("Shifts end to end", shifts_end_to_end),
        ("supraquantum violation", supraquantum_violation),
        ("GYNI family n=3..6", gyni_family),
        ("bound entanglement evidence", bound_entanglement),
        ("classical and spectral bounds on random (P)-sets", fact_one_suite),
        ("tightness and polytope dimensions", tightness),
        ("sampled witnesses on completable sets", fact_four_smoke),
        ("cross-method unextendibility agreement", cross_method_agreement),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match check() {
            Ok(()) => println!("PASS {} {name} ({:.2?})", k + 1, t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name} ({:.2?}): {msg}", k + 1, t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
