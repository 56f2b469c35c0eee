//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p polyattn-core --test acceptance -- --nocapture`.
//! The tests hold a shared lock so that the timing criterion is not
//! disturbed by the others running in parallel.

use std::sync::Mutex;
use std::time::Instant;

use polyattn::approx::{
    attend_strassen_approx, attend_tensor_approx, attend_tree_approx, exp_approx_poly, reduce_to_tensor,
    ApproxConfig,
};
use polyattn::bench::{loglog_slope, median_time};
use polyattn::constructions::{
    brute_force_root, default_scale, encode_composition, encode_root_finding, solve_composition, solve_root_finding,
    CompositionInstance, IntPoly, RootFindingOptions,
};
use polyattn::linalg::hadamard;
use polyattn::rng::{random_inputs, rng, InstanceRng};
use polyattn::{
    attend_bruteforce, attend_cycle, attend_exact, attend_tree, classify, AttentionInputs, AttentionPolynomial,
    Matrix, PolyClass,
};
use rand::Rng;

static SERIAL: Mutex<()> = Mutex::new(());

const H2: &str = "x1*x2+x2*x3";
const TREE7: &str = "x1*x2+x1*x3+x1*x4+x2*x5+x2*x6+x4*x7";
const STRASSEN: &str = "x1*x2+x2*x3+x3*x1";
const CYCLE4: &str = "x1*x2+x2*x3+x3*x4+x4*x1";
const TENSOR3: &str = "x1*x2*x3";
const TEST_POLYS: [&str; 6] = ["x1*x2", H2, TREE7, STRASSEN, CYCLE4, TENSOR3];

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!("{} criterion {id} ({name}): {detail}", if ok { "PASS" } else { "FAIL" });
}

fn poly(text: &str) -> AttentionPolynomial {
    AttentionPolynomial::parse(text).unwrap()
}

fn max_err(a: &Matrix, b: &Matrix) -> f64 {
    a.max_abs_diff(b).unwrap()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut runs = 0usize;
    for text in TEST_POLYS {
        let h = poly(text);
        let class = classify(&h);
        // The seven-variable tree enumerates n^6 tuples per row; keep it at n <= 5.
        let n_max = if h.t() > 5 { 5 } else { 7 };
        for seed in 0..100u64 {
            let mut g = rng(seed);
            let n = g.random_range(1..=n_max);
            let d = g.random_range(1..=4);
            let inp = random_inputs(&h, n, d, 1.0, &mut g);
            let oracle = attend_bruteforce(&inp).unwrap().matrix;
            let mut engines = vec![attend_exact(&inp).unwrap().matrix];
            match class {
                PolyClass::TreeForest => engines.push(attend_tree(&inp).unwrap().matrix),
                PolyClass::SingleCycle { .. } => engines.push(attend_cycle(&inp).unwrap().matrix),
                PolyClass::General => {}
            }
            for m in &engines {
                worst = worst.max(max_err(m, &oracle));
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-9 && secs < 30.0;
    report(1, "oracle equivalence", ok, &format!("{runs} engine runs, max err {worst:.2e}, {secs:.1} s"));
    assert!(ok);
}

/// Renames `x1, x2, x3` of a three-variable polynomial to `x1, x4, x5`.
fn relabel(text: &str) -> String {
    text.replace("x2", "x4").replace("x3", "x5")
}

#[test]
fn criterion_2_separability() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let parts = ["x1*x2", "x1*x2+x2*x3", "x1*x2+x1*x3", "x1*x3+x2*x3", "x1*x2*x3", "x1*x2+x2*x3+x3*x1", "x1*x2*x3+x2*x3"];
    let mut worst = 0.0f64;
    let mut g = rng(2024);
    for _ in 0..50 {
        let f_text = parts[g.random_range(0..parts.len())];
        let g_text = parts[g.random_range(0..parts.len())];
        let n = g.random_range(1..=6);
        let d = g.random_range(1..=3);
        let h = AttentionPolynomial::parse_with_t(&format!("{f_text}+{}", relabel(g_text)), Some(5)).unwrap();
        let full = random_inputs(&h, n, d, 1.0, &mut g);
        let q = full.q_all();
        let v = full.v_all();
        let f_in = AttentionInputs::new(
            AttentionPolynomial::parse_with_t(f_text, Some(3)).unwrap(),
            vec![q[0].clone(), q[1].clone(), q[2].clone()],
            vec![v[0].clone(), v[1].clone()],
        )
        .unwrap();
        let g_in = AttentionInputs::new(
            AttentionPolynomial::parse_with_t(g_text, Some(3)).unwrap(),
            vec![q[0].clone(), q[3].clone(), q[4].clone()],
            vec![v[2].clone(), v[3].clone()],
        )
        .unwrap();
        let att_f = attend_bruteforce(&f_in).unwrap().matrix;
        let att_g = attend_bruteforce(&g_in).unwrap().matrix;
        let att_h = attend_bruteforce(&full).unwrap().matrix;
        worst = worst.max(max_err(&hadamard(&att_f, &att_g).unwrap(), &att_h));
    }
    let ok = worst <= 1e-12;
    report(2, "separability identity", ok, &format!("50 instances, max err {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_3_approximation_contract() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (b, d, eps) = (0.4, 4, 1e-6);
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut lines = Vec::new();
    for (k, &n) in [64usize, 128, 256].iter().enumerate() {
        let seed = 300 + k as u64;
        let errs = |e: f64| -> [f64; 3] {
            let cfg = ApproxConfig::with_eps(e);
            let s = random_inputs(&poly(STRASSEN), n, d, b, &mut rng(seed));
            let s_err = max_err(&attend_strassen_approx(&s, &cfg).unwrap().matrix, &attend_cycle(&s).unwrap().matrix);
            let t = random_inputs(&poly(H2), n, d, b, &mut rng(seed));
            let t_err = max_err(&attend_tree_approx(&t, &cfg).unwrap().matrix, &attend_tree(&t).unwrap().matrix);
            let x = random_inputs(&poly(TENSOR3), n, d, b, &mut rng(seed));
            let approx = attend_tensor_approx(&reduce_to_tensor(&x), &cfg, x.d_scale()).unwrap().matrix;
            let x_err = max_err(&approx, &attend_bruteforce(&x).unwrap().matrix);
            [s_err, t_err, x_err]
        };
        let full = errs(eps);
        let half = errs(eps / 2.0);
        worst = full.iter().chain(&half).fold(worst, |m, &e| m.max(e));
        monotone &= full.iter().zip(&half).all(|(a, h)| h <= a);
        lines.push(format!(
            "n={n}: strassen {:.1e}->{:.1e}, tree {:.1e}->{:.1e}, tensor {:.1e}->{:.1e}",
            full[0], half[0], full[1], half[1], full[2], half[2]
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-5 && monotone && secs < 120.0;
    report(
        3,
        "approximation contract",
        ok,
        &format!("max err {worst:.2e}, halving eps monotone: {monotone}, {secs:.1} s; {}", lines.join("; ")),
    );
    assert!(ok);
}

fn slope_for(
    label: &str,
    sizes: &[usize],
    mut run: impl FnMut(&AttentionInputs) -> polyattn::Result<polyattn::AttentionOutput>,
    make: impl Fn(usize) -> AttentionInputs,
) -> f64 {
    let points: Vec<(usize, u64)> = sizes
        .iter()
        .map(|&n| {
            let inp = make(n);
            let (ns, _) = median_time(5, || run(&inp)).unwrap();
            (n, ns)
        })
        .collect();
    let slope = loglog_slope(&points).unwrap();
    println!("  {label}: {points:?} slope {slope:.2}");
    slope
}

#[test]
fn criterion_4_scaling_slopes() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = ApproxConfig::default();
    let tree = slope_for("tree", &[128, 256, 512, 1024], attend_tree, |n| {
        random_inputs(&poly(H2), n, 4, 1.0, &mut rng(n as u64))
    });
    let brute = slope_for("brute t=3", &[16, 32, 64, 128], attend_bruteforce, |n| {
        random_inputs(&poly(TENSOR3), n, 4, 1.0, &mut rng(n as u64))
    });
    let lowrank = slope_for(
        "low-rank tree",
        &[512, 1024, 2048, 4096],
        |inp| attend_tree_approx(inp, &cfg),
        |n| random_inputs(&poly(H2), n, 4, 0.4, &mut rng(n as u64)),
    );
    let ok = (1.7..=2.3).contains(&tree) && brute >= 2.6 && lowrank <= 1.5;
    report(
        4,
        "scaling exponents",
        ok,
        &format!("tree {tree:.2} in [1.7, 2.3], brute {brute:.2} >= 2.6, low-rank {lowrank:.2} <= 1.5"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_function_composition() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let n = 25;
    let mut summary = Vec::new();
    let mut ok = true;
    for r in [2usize, 3, 4] {
        let mut g = rng(500 + r as u64);
        let mut correct = 0;
        for _ in 0..100 {
            let inst = CompositionInstance::random(r, n, &mut g).unwrap();
            let enc = encode_composition(&inst, default_scale(r)).unwrap();
            if solve_composition(&enc).ok() == Some(inst.direct_answer()) {
                correct += 1;
            }
        }
        ok &= correct == 100;
        summary.push(format!("r={r} (tokens {}): {correct}/100", r * n + 1));
    }
    report(5, "function composition", ok, &summary.join(", "));
    assert!(ok);
}

/// `n` distinct odd integers in `[-limit, limit]`, excluding `avoid`.
fn distinct_odds(g: &mut InstanceRng, count: usize, limit: i64, avoid: &[i64]) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::with_capacity(count);
    while out.len() < count {
        let v = 2 * g.random_range(-limit / 2..limit / 2) + 1;
        if !out.contains(&v) && !avoid.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Two odd elements and one even element summing to zero, plus odd filler,
/// resampled until the zero-sum multiset is unique.
fn planted_set(g: &mut InstanceRng, n: usize) -> (Vec<f64>, [i64; 3]) {
    let p = IntPoly::parse("x1+x2+x3").unwrap();
    loop {
        let ab = distinct_odds(g, 2, 99, &[]);
        let c = -ab[0] - ab[1];
        if c == 0 {
            continue;
        }
        let mut set = ab.clone();
        set.push(c);
        set.extend(distinct_odds(g, n - 3, 99, &ab));
        let shuffle: Vec<f64> = {
            let mut s = set.clone();
            for i in (1..s.len()).rev() {
                s.swap(i, g.random_range(0..=i));
            }
            s.into_iter().map(|v| v as f64).collect()
        };
        let roots = zero_sum_multisets(&shuffle);
        let mut planted = [ab[0], ab[1], c];
        planted.sort_unstable();
        if roots.len() == 1 && roots[0] == planted && brute_force_root(&p, &shuffle).is_some() {
            return (shuffle, planted);
        }
    }
}

fn zero_sum_multisets(set: &[f64]) -> Vec<[i64; 3]> {
    let mut found = Vec::new();
    for &a in set {
        for &b in set {
            for &c in set {
                if a + b + c == 0.0 {
                    let mut m = [a as i64, b as i64, c as i64];
                    m.sort_unstable();
                    if !found.contains(&m) {
                        found.push(m);
                    }
                }
            }
        }
    }
    found
}

#[test]
fn criterion_6_match3() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let p = IntPoly::parse("x1+x2+x3").unwrap();
    let opts = RootFindingOptions::default();
    let mut g = rng(600);
    let (mut planted_ok, mut empty_ok) = (0, 0);
    for _ in 0..50 {
        let (set, planted) = planted_set(&mut g, 20);
        let found = solve_root_finding(&encode_root_finding(&p, &set, &opts).unwrap()).unwrap();
        if let Some(tuple) = found {
            let mut m = [tuple[0] as i64, tuple[1] as i64, tuple[2] as i64];
            m.sort_unstable();
            if m == planted && p.eval(&tuple) == 0.0 {
                planted_ok += 1;
            }
        }
    }
    for _ in 0..50 {
        let set: Vec<f64> = distinct_odds(&mut g, 20, 99, &[]).into_iter().map(|v| v as f64).collect();
        assert!(brute_force_root(&p, &set).is_none());
        let found = solve_root_finding(&encode_root_finding(&p, &set, &opts).unwrap()).unwrap();
        if found.is_none() {
            empty_ok += 1;
        }
    }
    let ok = planted_ok == 50 && empty_ok == 50;
    report(
        6,
        "Match3 root finding",
        ok,
        &format!("planted found {planted_ok}/50, solution-free none {empty_ok}/50"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_exp_polynomial() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut ok = true;
    let mut cells = Vec::new();
    for gamma in [0.5, 1.0, 2.0] {
        for eps in [1e-4, 1e-6] {
            let p = exp_approx_poly(gamma, eps).unwrap();
            let worst = (0..10_000)
                .map(|i| -gamma + 2.0 * gamma * i as f64 / 9_999.0)
                .map(|x| ((p.eval(x) - x.exp()) / x.exp()).abs())
                .fold(0.0f64, f64::max);
            ok &= worst <= eps;
            cells.push(format!("G'={gamma} eps={eps:.0e}: deg {} err {worst:.1e}", p.degree()));
        }
    }
    report(7, "exp polynomial", ok, &cells.join(", "));
    assert!(ok);
}

#[test]
fn criterion_8_reduction_identity() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut worst = 0.0f64;
    let mut g = rng(800);
    for text in TEST_POLYS {
        let h = poly(text);
        for _ in 0..20 {
            let n = g.random_range(1..=6);
            let d = g.random_range(1..=4);
            let inp = random_inputs(&h, n, d, 1.0, &mut g);
            let red = reduce_to_tensor(&inp);
            let rows: Vec<usize> = (0..h.t()).map(|_| g.random_range(0..n)).collect();
            let mut prod = red.k[1].row(rows[1]).to_vec();
            for (k, &r) in red.k[2..].iter().zip(&rows[2..]) {
                prod.iter_mut().zip(k.row(r)).for_each(|(a, b)| *a *= b);
            }
            let inner: f64 = red.k[0].row(rows[0]).iter().zip(&prod).map(|(a, b)| a * b).sum();
            let ys: Vec<&[f64]> = rows.iter().enumerate().map(|(j, &r)| inp.q(j + 1).row(r)).collect();
            worst = worst.max((inner - h.evaluate(&ys).unwrap()).abs());
        }
    }
    let ok = worst <= 1e-12;
    report(8, "reduction identity", ok, &format!("120 instances, max err {worst:.2e}"));
    assert!(ok);
}
