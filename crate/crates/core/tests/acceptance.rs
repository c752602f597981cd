//! Acceptance suite. Every check is an exact integer identity; the only pinned
//! tolerances are the wall-clock limits below. Prints one line per criterion
//! and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num::BigUint;
use ooakit::bounds::{dims, ooa_lower_bound};
use ooakit::construct::hermite_ooa;
use ooakit::design::{binomial, count_shapes, enumerate_shapes};
use ooakit::gf::FieldSpec;
use ooakit::klp::{
    build_phi_matrix, certify, enumerate_domain_family, enumerate_fprime, CertifyOptions, CodomainKind,
    PartialAssignment,
};
use ooakit::search::{find_min_size, SearchMode, SearchResult, SearchStatus, DEFAULT_BUDGET};
use ooakit::verify::{verify_oa, verify_ooa, VerifyOptions};
use ooakit::{ColumnIndex, SymbolArray};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXAMPLE: [[u32; 4]; 4] = [[0, 0, 0, 0], [0, 1, 1, 1], [1, 0, 1, 0], [1, 1, 0, 1]];
const SEED: u64 = 0x00A7;
const INVARIANCE_CASES: usize = 500;
const RECURSION_SAMPLES: usize = 200;

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    check: Check,
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "golden example", limit: Duration::from_secs(1), check: golden_example },
    Criterion { id: 2, name: "construction round trip", limit: Duration::from_secs(30), check: construction },
    Criterion { id: 3, name: "space certification", limit: Duration::from_secs(60), check: certification },
    Criterion { id: 4, name: "dimension ledger", limit: Duration::from_secs(10), check: dimension_ledger },
    Criterion { id: 5, name: "shape counting", limit: Duration::from_secs(5), check: counting },
    Criterion { id: 6, name: "search exactness", limit: Duration::from_secs(60), check: search_exactness },
    Criterion { id: 7, name: "bound coherence", limit: Duration::from_secs(60), check: bound_coherence },
    Criterion { id: 8, name: "property suites", limit: Duration::from_secs(120), check: property_suites },
];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example() -> SymbolArray {
    SymbolArray::new(2, 2, 2, EXAMPLE.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn sorted(mut rows: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    rows.sort();
    rows
}

fn golden_example() -> Result<String, String> {
    let a = example();
    let rep = verify_ooa(&a, 2, 2, 2, 2, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.pass && rep.lambda_observed == Some(1), || format!("OOA check: {rep:?}"))?;

    let oa = verify_oa(&a, 2, 2, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(!oa.pass, || "OA check passed".into())?;
    ensure(oa.failing_columns() == vec![vec![2, 4]], || format!("failing columns {:?}", oa.failing_columns()))?;
    let missing = oa.missing_tuples(&[2, 4]);
    ensure(missing == vec![vec![0, 1], vec![1, 0]], || format!("missing tuples {missing:?}"))?;

    // same verdicts through the binary
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("example.txt");
    std::fs::write(&path, ooakit::io::format_array(&a, 2)).map_err(|e| e.to_string())?;
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_ooakit")).arg("verify").args(extra).arg(&path).output().unwrap()
    };
    let ok = run(&[]);
    ensure(ok.status.code() == Some(0) && String::from_utf8_lossy(&ok.stdout).contains("λ = 1"), || {
        format!("cli verify: {ok:?}")
    })?;
    let bad = run(&["--oa"]);
    let text = String::from_utf8_lossy(&bad.stdout);
    ensure(bad.status.code() == Some(1) && text.contains("columns {2,4}: missing tuples 01, 10"), || {
        format!("cli verify --oa: {text}")
    })?;
    Ok("OOA λ = 1; OA fails only on columns {2,4}, missing 01 and 10".into())
}

fn hermite_grid() -> impl Iterator<Item = (u32, usize, usize, usize)> {
    [2u32, 3, 4, 5, 7, 8].into_iter().flat_map(|q| {
        (1..=q as usize).flat_map(move |n| (1..=3).flat_map(move |r| (1..=(n * r).min(4)).map(move |t| (q, n, r, t))))
    })
}

fn construction() -> Result<String, String> {
    let f2 = FieldSpec::from_order(2).unwrap();
    let a = hermite_ooa(&f2, 2, 2, 2, None).map_err(|e| e.to_string())?;
    ensure(sorted(a.to_rows()) == sorted(example().to_rows()), || format!("GF(2) rows {:?}", a.to_rows()))?;
    let mut count = 0;
    for (q, n, r, t) in hermite_grid() {
        let field = FieldSpec::from_order(q).unwrap();
        let a = hermite_ooa(&field, n, r, t, None).map_err(|e| e.to_string())?;
        let rep = verify_ooa(&a, q, n, r, t, &VerifyOptions::default()).map_err(|e| e.to_string())?;
        ensure(rep.pass && rep.lambda_observed == Some(1), || format!("hermite ({q},{n},{r},{t}) failed"))?;
        count += 1;
    }
    Ok(format!("GF(2) example reproduced; {count} instances verified with λ = 1"))
}

fn certify_grid() -> impl Iterator<Item = (u32, usize, usize, usize)> {
    [2u32, 3].into_iter().flat_map(|q| {
        (1..=2).flat_map(move |n| (1..=2).flat_map(move |r| (1..=(n * r).min(3)).map(move |t| (q, n, r, t))))
    })
}

fn certification() -> Result<String, String> {
    let mut count = 0;
    for (q, n, r, t) in certify_grid() {
        let rep = certify(q, n, r, t, &CertifyOptions::default()).map_err(|e| e.to_string())?;
        let names: Vec<&str> = rep.entries.iter().map(|e| e.name).collect();
        ensure(names == ["C1", "C2", "C3", "C4", "C5", "lattice", "spanning"], || format!("entries {names:?}"))?;
        if let Some(bad) = rep.entries.iter().find(|e| !e.pass) {
            return Err(format!("({q},{n},{r},{t}) {}: {:?}", bad.name, bad.witness));
        }
        ensure(rep.constants.c1 == (q as u64).pow(t as u32), || format!("c1 = {}", rep.constants.c1))?;
        ensure(rep.constants.decodability_bound == 1 << t, || {
            format!("max ‖γ_b‖₁ = {}", rep.constants.decodability_bound)
        })?;
        dual_basis_oracle(q, n, r, t)?;
        count += 1;
    }
    Ok(format!("{count} instances, all seven checks PASS; γᵀφ = I and ‖γ_b‖₁ = 2^|T| recomputed independently"))
}

/// `γ_b = Σ_{S ⊆ T} (-1)^{|T|-|S|} e_{x^{b|S}}` where `x^c` writes `q-1` off the domain of `c`.
/// Checks `Σ_x γ_b(x) φ_a(x) = [a = b]` on the basis and `‖γ_b‖₁ = 2^{|T|}`.
fn dual_basis_oracle(q: u32, n: usize, r: usize, t: usize) -> Result<(), String> {
    let basis: Vec<Vec<(ColumnIndex, u32)>> = enumerate_fprime(q, n, r, t)
        .unwrap()
        .iter()
        .map(|b| b.domain().into_iter().zip(b.values().iter().copied()).collect())
        .collect();
    for (i, b) in basis.iter().enumerate() {
        let mut gamma: std::collections::BTreeMap<Vec<u32>, i64> = Default::default();
        for mask in 0u32..1 << b.len() {
            let mut x = vec![q - 1; n * r];
            for (k, (c, v)) in b.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    x[c.offset(r)] = *v;
                }
            }
            let sign = if (b.len() - mask.count_ones() as usize).is_multiple_of(2) { 1 } else { -1 };
            *gamma.entry(x).or_default() += sign;
        }
        let norm: i64 = gamma.values().map(|g| g.abs()).sum();
        ensure(norm == 1 << b.len(), || format!("({q},{n},{r},{t}) ‖γ_b‖₁ = {norm} for {b:?}"))?;
        for (j, a) in basis.iter().enumerate() {
            let pairing: i64 = gamma.iter().map(|(x, g)| g * agrees(x, a, r)).sum();
            ensure(pairing == i64::from(i == j), || format!("({q},{n},{r},{t}) ⟨γ_b, φ_a⟩ = {pairing}"))?;
        }
    }
    Ok(())
}

fn dimension_ledger() -> Result<String, String> {
    let d = dims(2, 2, 2, 2).map_err(|e| e.to_string())?;
    let got: Vec<u64> = [&d.size_x, &d.size_s, &d.size_f, &d.size_fprime, &d.c1, &d.c2, &d.c3]
        .into_iter()
        .map(|v| u64::try_from(v).unwrap())
        .collect();
    ensure(got == [16, 3, 12, 8, 4, 1, 96], || format!("dims {got:?}"))?;
    ensure(enumerate_fprime(2, 2, 2, 2).unwrap().len() == 8, || "enumerated |F'| differs".into())?;
    let rank = build_phi_matrix(2, 2, 2, 2).map_err(|e| e.to_string())?.rank();
    ensure(rank == 8, || format!("rank φ = {rank}"))?;
    Ok("|X| 16, |S| 3, |F| 12, |F'| 8, c1 4, c2 1, c3 96, rank φ 8".into())
}

fn counting() -> Result<String, String> {
    let mut triples = 0;
    for n in 1..=6 {
        for r in 1..=6 {
            for t in 1..=6.min(n * r) {
                let listed = BigUint::from(enumerate_shapes(n, r, t).map_err(|e| e.to_string())?.len());
                let counted = count_shapes(n, r, t);
                let bound = binomial((n + t - 1) as u64, t as u64);
                ensure(counted == listed, || format!("({n},{r},{t}): {counted} vs {listed}"))?;
                ensure(counted <= bound, || format!("({n},{r},{t}) exceeds C(n+t-1,t)"))?;
                ensure(r < t || counted == bound, || format!("({n},{r},{t}) below C(n+t-1,t) with r >= t"))?;
                triples += 1;
            }
        }
    }
    Ok(format!("{triples} triples agree"))
}

fn exact(q: u32, n: usize, r: usize, t: usize, mode: SearchMode) -> Result<SearchResult, String> {
    let res = find_min_size(q, n, r, t, mode, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(res.status == SearchStatus::ExactMinimum, || format!("({q},{n},{r},{t}) {:?}", res.status))?;
    let w = res.witness.as_ref().ok_or("no witness")?;
    let rep = verify_ooa(w, q, n, r, t, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.pass, || format!("({q},{n},{r},{t}) witness fails"))?;
    if mode == SearchMode::Set {
        ensure(sorted(w.to_rows()).windows(2).all(|p| p[0] != p[1]), || "set witness repeats a row".into())?;
    }
    Ok(res)
}

fn search_exactness() -> Result<String, String> {
    let cases = [
        (2, 2, 2, 2, SearchMode::Set, 4),
        (2, 2, 2, 2, SearchMode::Multiset, 4),
        (2, 2, 1, 2, SearchMode::Multiset, 4),
        (2, 1, 1, 1, SearchMode::Multiset, 2),
    ];
    for (q, n, r, t, mode, want) in cases {
        let res = exact(q, n, r, t, mode)?;
        ensure(res.size == Some(want), || format!("({q},{n},{r},{t}) {mode:?}: size {:?}", res.size))?;
    }
    Ok("N(2,2,2,2) = 4 (set, multiset), N(2,2,1,2) = 4, N(2,1,1,1) = 2".into())
}

fn bound_coherence() -> Result<String, String> {
    let mut arrays = 0;
    for (q, n, r, t) in hermite_grid() {
        let a = hermite_ooa(&FieldSpec::from_order(q).unwrap(), n, r, t, None).map_err(|e| e.to_string())?;
        let lower = ooa_lower_bound(q, n, r, t);
        ensure(lower <= BigUint::from(a.num_rows()), || {
            format!("({q},{n},{r},{t}): lower {lower} > {}", a.num_rows())
        })?;
        arrays += 1;
    }
    let mut chains = Vec::new();
    for (q, n, r, t) in [(2u32, 2, 2, 2), (2, 2, 1, 2), (2, 1, 1, 1)] {
        let mid = exact(q, n, r, t, SearchMode::Multiset)?.size.unwrap();
        let set = exact(q, n, r, t, SearchMode::Set)?.size.unwrap();
        for size in [mid, set] {
            let lower = ooa_lower_bound(q, n, r, t);
            ensure(lower <= BigUint::from(size), || format!("({q},{n},{r},{t}): lower {lower} > {size}"))?;
            arrays += 1;
        }
        let below = exact(q, n, 1, t, SearchMode::Multiset)?.size.unwrap();
        let above = exact(q, n * r, 1, t, SearchMode::Multiset)?.size.unwrap();
        ensure(below <= mid && mid <= above, || format!("({q},{n},{r},{t}): {below} <= {mid} <= {above} fails"))?;
        chains.push(format!("{below} <= {mid} <= {above}"));
    }
    Ok(format!("{arrays} sizes above the lower bound; chains {}", chains.join(", ")))
}

fn verdict(a: &SymbolArray, t: usize) -> (bool, usize) {
    let rep = verify_ooa(a, a.q(), a.blocks(), a.depth(), t, &VerifyOptions::default()).unwrap();
    (rep.pass, rep.total_failures)
}

fn invariance_cases(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..INVARIANCE_CASES {
        let q = [2u32, 3, 4][rng.gen_range(0..3)];
        let n = rng.gen_range(1..=q.min(3) as usize);
        let r = rng.gen_range(1..=3);
        let t = rng.gen_range(1..=(n * r).min(3));
        let base = if case % 2 == 0 {
            hermite_ooa(&FieldSpec::from_order(q).unwrap(), n, r, t, None).unwrap()
        } else {
            let rows = (0..(q as usize).pow(t as u32) * rng.gen_range(1..=2))
                .map(|_| (0..n * r).map(|_| rng.gen_range(0..q)).collect())
                .collect();
            SymbolArray::new(q, n, r, rows).unwrap()
        };
        let mut rows = base.to_rows();
        rows.shuffle(rng);
        let permuted = SymbolArray::new(q, n, r, rows).unwrap();
        let relabel: Vec<Vec<u32>> = (0..n * r)
            .map(|_| {
                let mut p: Vec<u32> = (0..q).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        let relabeled = SymbolArray::new(
            q,
            n,
            r,
            base.rows().map(|row| row.iter().enumerate().map(|(j, &s)| relabel[j][s as usize]).collect()).collect(),
        )
        .unwrap();
        let v = verdict(&base, t);
        ensure(verdict(&permuted, t) == v, || format!("case {case}: row permutation changed the verdict"))?;
        ensure(verdict(&relabeled, t) == v, || format!("case {case}: relabeling changed the verdict"))?;
        ensure(case % 2 == 1 || v == (true, 0), || format!("case {case}: hermite array failed"))?;
    }
    Ok(())
}

fn points(q: u32, width: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..width {
        out = out.into_iter().flat_map(|p| (0..q).map(move |s| [p.clone(), vec![s]].concat())).collect();
    }
    out
}

fn agrees(x: &[u32], entries: &[(ColumnIndex, u32)], r: usize) -> i64 {
    i64::from(entries.iter().all(|(c, v)| x[c.offset(r)] == *v))
}

fn recursion_and_divisibility(rng: &mut ChaCha8Rng) -> Result<(usize, usize), String> {
    let (mut recursions, mut sums) = (0, 0);
    for (q, n, r, t) in certify_grid() {
        let xs = points(q, n * r);
        let domains: Vec<Vec<ColumnIndex>> =
            enumerate_domain_family(n, r, t).unwrap().into_iter().filter(|d| !d.is_empty()).collect();
        for _ in 0..RECURSION_SAMPLES {
            let domain = &domains[rng.gen_range(0..domains.len())];
            let mut entries: Vec<(ColumnIndex, u32)> = domain.iter().map(|&c| (c, rng.gen_range(0..q))).collect();
            let pos = rng.gen_range(0..entries.len());
            entries[pos].1 = q - 1;
            // the map is admissible as an intermediate assignment
            PartialAssignment::new(q, n, r, t, CodomainKind::General, entries.clone()).map_err(|e| e.to_string())?;
            let mut rest = entries.clone();
            rest.remove(pos);
            for x in &xs {
                let lhs = agrees(x, &entries, r);
                let mut rhs = agrees(x, &rest, r);
                for k in 0..q - 1 {
                    let mut ak = entries.clone();
                    ak[pos].1 = k;
                    rhs -= agrees(x, &ak, r);
                }
                ensure(lhs == rhs, || format!("({q},{n},{r},{t}) recursion fails at {x:?} for {entries:?}"))?;
            }
            recursions += 1;
        }
        for b in enumerate_fprime(q, n, r, t).unwrap() {
            let entries: Vec<(ColumnIndex, u32)> = b.domain().into_iter().zip(b.values().iter().copied()).collect();
            let sum: i64 = xs.iter().map(|x| agrees(x, &entries, r)).sum();
            let want = (q as i64).pow((n * r - b.len()) as u32);
            ensure(sum == want, || format!("({q},{n},{r},{t}) Σ φ_b = {sum}, want {want} for {b}"))?;
            sums += 1;
        }
    }
    Ok((recursions, sums))
}

fn property_suites() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    invariance_cases(&mut rng)?;
    let (recursions, sums) = recursion_and_divisibility(&mut rng)?;
    Ok(format!(
        "{INVARIANCE_CASES} invariance cases, {recursions} recursion samples, {sums} divisibility sums (seed {SEED})"
    ))
}

fn main() -> ExitCode {
    println!("acceptance: {} criteria, exact integer checks, seed {SEED}", CRITERIA.len());
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > c.limit => Err(format!("took {elapsed:.2?}, limit {:?}", c.limit)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(detail) => ("PASS", detail.as_str()),
            Err(why) => ("FAIL", why.as_str()),
        };
        println!("[{tag}] {} {} ({elapsed:.2?}, limit {:?}): {detail}", c.id, c.name, c.limit);
        failed += usize::from(outcome.is_err());
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
