//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use graph_reduce::cli::{baseline_table, cluster_table, cmd_cluster, RunConfig};
use graph_reduce::spectral::smallest_eigenpairs;
use graph_reduce::{
    acc, ari, build_knn, default_k_max, edge_percentage, export_pairs, gen_synthetic, laplacian, reduce_graph,
    PointSet, Seed, Synthetic,
};
use rand::Rng;

const REPEATS: usize = 50;
const DATA_SEED: u64 = 0;

/// (a) three well-separated Gaussian blobs, N = 300.
const BLOBS: &str = "blobs:clusters=3,per=100,spread=0.5,sep=10";
/// (b) two concentric rings, N = 400, noise 5% of the ring gap.
const RINGS: &str = "circles:per=200,radii=1/3,noise=0.1";
/// (c) a dense and a sparse blob.
const MIXED: &str = "mixed-density:sizes=200/100,spreads=0.3/1.5,sep=7";

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dataset(recipe: &str) -> PointSet {
    gen_synthetic(&recipe.parse::<Synthetic>().unwrap(), Seed(DATA_SEED)).unwrap()
}

fn config(recipe: &str) -> RunConfig {
    RunConfig::synthetic(recipe, DATA_SEED, REPEATS, std::env::temp_dir())
}

fn metrics_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut acc_bad = 0;
    let mut worst_ari = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..120);
        let ct = rng.random_range(1..=6.min(n));
        let cp = rng.random_range(1..=6.min(n));
        let t = random_labels(&mut rng, n, ct);
        let p = random_labels(&mut rng, n, cp);
        if acc(&t, &p).unwrap() != brute_force_acc(&t, &p) {
            acc_bad += 1;
        }
        worst_ari = worst_ari.max((ari(&t, &p).unwrap() - contingency_ari(&t, &p)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        acc_bad == 0 && worst_ari <= 1e-12 && secs < 10.0,
        format!("ACC mismatches {acc_bad}/200, max ARI diff {worst_ari:.1e} (tol 1e-12), {secs:.2}s (limit 10s)"),
    )
}

fn knn_oracle_check() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut bad = 0;
    for _ in 0..50 {
        let ps = random_points(&mut rng, 300);
        let k = rng.random_range(1..ps.len());
        if neighbor_rows(&build_knn(&ps, k).unwrap()) != knn_oracle(&ps, k) {
            bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs < 10.0,
        format!("{bad}/50 tables differ from the all-pairs sort, {secs:.2}s (limit 10s)"),
    )
}

/// Orthogonal projector onto the given columns.
fn projector(vecs: &ndarray::Array2<f64>, cols: &[usize]) -> ndarray::Array2<f64> {
    let n = vecs.nrows();
    ndarray::Array2::from_shape_fn((n, n), |(i, j)| cols.iter().map(|&c| vecs[[i, c]] * vecs[[j, c]]).sum())
}

fn eigensolver_check() -> Outcome {
    let mut rng = rng(3);
    let mut bad_mult = 0;
    let mut worst_value = 0.0f64;
    let mut worst_space = 0.0f64;
    let mut with_singletons = 0;
    for _ in 0..30 {
        let ps = random_points(&mut rng, 100);
        let g = reduce_graph(&ps, default_k_max(ps.len())).unwrap();
        let n = g.n();
        let (got, got_vecs) = smallest_eigenpairs(&laplacian(&g), n).unwrap();
        let got_vecs = ndarray::Array2::from_shape_fn((n, n), |(i, j)| got_vecs[(i, j)]);
        let (want, want_vecs) = jacobi_eigen(&dense_laplacian(&g));

        let sizes = component_sizes(&g);
        let singletons = sizes.iter().filter(|&&s| s == 1).count();
        with_singletons += usize::from(singletons > 0);
        // An isolated vertex has an identity row in L, so it contributes
        // eigenvalue 1 rather than 0.
        let zeros = got.iter().filter(|v| v.abs() < 1e-8).count();
        let ones = got.iter().filter(|v| (*v - 1.0).abs() < 1e-8).count();
        if zeros != sizes.len() - singletons || ones < singletons {
            bad_mult += 1;
        }

        for (a, b) in got.iter().zip(&want) {
            worst_value = worst_value.max((a - b).abs());
        }
        // Compare invariant subspaces cluster by cluster of equal eigenvalues.
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && want[j] - want[j - 1] < 1e-6 {
                j += 1;
            }
            let cols: Vec<usize> = (i..j).collect();
            let diff = projector(&got_vecs, &cols) - projector(&want_vecs, &cols);
            worst_space = worst_space.max(diff.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            i = j;
        }
    }
    outcome(
        bad_mult == 0 && worst_value <= 1e-8 && worst_space <= 1e-8,
        format!(
            "multiplicity mismatches {bad_mult}/30 ({with_singletons} graphs with isolated vertices), \
             max eigenvalue diff {worst_value:.1e}, max projector diff {worst_space:.1e} (tol 1e-8)"
        ),
    )
}

fn mutuality_check() -> Outcome {
    let mut rng = rng(4);
    let mut bad = 0;
    for _ in 0..100 {
        let ps = random_points(&mut rng, 200);
        let g = reduce_graph(&ps, default_k_max(ps.len())).unwrap();
        let forward: BTreeSet<(usize, usize)> =
            (0..g.n()).flat_map(|p| g.neighbors(p).iter().map(move |&(q, _)| (p, q))).collect();
        let transpose: BTreeSet<(usize, usize)> = forward.iter().map(|&(p, q)| (q, p)).collect();
        let weights_agree = g.edges().all(|(p, q, w)| g.weight(q, p) == Some(w));
        if forward != transpose || !weights_agree || edge_set(&g) != mutual_oracle(&g) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad}/100 graphs differ from their transpose"))
}

fn scale_invariance_check() -> Outcome {
    let mut sets: Vec<PointSet> = [BLOBS, RINGS, MIXED].iter().map(|r| dataset(r)).collect();
    let mut rng = rng(5);
    sets.extend((0..10).map(|_| random_points(&mut rng, 150)));
    let mut bad = 0;
    for ps in &sets {
        let k = default_k_max(ps.len());
        let base = edge_set(&reduce_graph(ps, k).unwrap());
        for c in [0.01, 1.0, 100.0] {
            if edge_set(&reduce_graph(&ps.scaled(c).unwrap(), k).unwrap()) != base {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("{bad}/{} (dataset, factor) cases changed the edge set", 3 * sets.len()),
    )
}

fn determinism_check() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &std::path::Path| {
        let cfg = RunConfig {
            out: dir.to_path_buf(),
            ..config(BLOBS)
        };
        let table = cmd_cluster(&cfg).unwrap();
        (std::fs::read(dir.join("cluster_metrics.csv")).unwrap(), table)
    };
    let (x, table) = run(a.path());
    let (y, _) = run(b.path());
    let sd = table.summary()[0].1;
    outcome(
        x == y && sd <= 0.01,
        format!("outputs identical: {}, std(ACC) over {REPEATS} repeats {sd:.4} (limit 0.01)", x == y),
    )
}

fn quality_check() -> Outcome {
    let start = Instant::now();
    let blobs = cluster_table(&config(BLOBS), &dataset(BLOBS)).unwrap();
    let perfect = blobs.runs.iter().filter(|r| r.ari == 1.0).count();

    let rings = cluster_table(&config(RINGS), &dataset(RINGS)).unwrap();
    let rings_median = rings.median_ari();

    let mixed_ps = dataset(MIXED);
    let mixed = cluster_table(&config(MIXED), &mixed_ps).unwrap().median_ari();
    let baseline = baseline_table(&config(MIXED), &mixed_ps, 2).unwrap().median_ari();
    let secs = start.elapsed().as_secs_f64();

    outcome(
        perfect >= 49 && rings_median >= 0.95 && mixed >= baseline && secs < 120.0,
        format!(
            "(a) ARI=1 in {perfect}/{REPEATS} (need 49); (b) median ARI {rings_median:.4} (need 0.95); \
             (c) median ARI {mixed:.4} vs mutual 2-NN {baseline:.4}; {secs:.1}s (limit 120s)"
        ),
    )
}

fn economy_check() -> Outcome {
    let values: Vec<f64> = [BLOBS, RINGS, MIXED]
        .iter()
        .map(|r| {
            let ps = dataset(r);
            edge_percentage(&reduce_graph(&ps, default_k_max(ps.len())).unwrap())
        })
        .collect();
    outcome(
        values.iter().all(|&e| e < 0.20),
        format!(
            "E% (a) {:.2}%, (b) {:.2}%, (c) {:.2}% (limit 20%)",
            100.0 * values[0],
            100.0 * values[1],
            100.0 * values[2]
        ),
    )
}

fn insensitivity_check() -> Outcome {
    let ps = dataset(BLOBS);
    let medians: Vec<(usize, f64)> = (20..=60)
        .step_by(10)
        .map(|k| {
            let cfg = RunConfig {
                k_max: Some(k),
                ..config(BLOBS)
            };
            (k, cluster_table(&cfg, &ps).unwrap().median_ari())
        })
        .collect();
    let lo = medians.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = medians.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let listed: Vec<String> = medians.iter().map(|(k, m)| format!("{k}:{m:.4}")).collect();
    outcome(
        hi - lo <= 0.05,
        format!("median ARI by k_max [{}], spread {:.4} (limit 0.05)", listed.join(" "), hi - lo),
    )
}

fn pairs_check() -> Outcome {
    let ps = dataset(RINGS);
    let n = ps.len();
    let nt = build_knn(&ps, default_k_max(n)).unwrap();
    let g = reduce_graph(&ps, nt.k_max()).unwrap();
    let pairs = export_pairs(&g, &nt, Seed(DATA_SEED)).unwrap();
    let positives: BTreeSet<(usize, usize)> = pairs.positives.iter().copied().collect();
    let positives_ok = positives == edge_set(&g) && pairs.positives.len() == g.edge_count();

    let mut bad_points = 0;
    for p in 0..n {
        let count = pairs.negatives.iter().filter(|x| x.0 == p).count();
        let expected = if pairs.exhausted.contains(&p) {
            g.degree(p).min(n - 1 - g.degree(p))
        } else {
            g.degree(p)
        };
        if count != expected {
            bad_points += 1;
        }
    }
    let k_fixed = 4;
    let total = pairs.total();
    outcome(
        positives_ok && bad_points == 0 && total < n * k_fixed,
        format!(
            "positives = mutual edges: {positives_ok}; negative-count mismatches {bad_points} ({} exhausted); \
             total pairs {total} vs N*k_fixed = {} (mean degree {:.2})",
            pairs.exhausted.len(),
            n * k_fixed,
            2.0 * g.edge_count() as f64 / n as f64
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("oracle equivalence: metrics", metrics_oracles),
        ("oracle equivalence: k-NN", knn_oracle_check),
        ("eigensolver correctness", eigensolver_check),
        ("mutuality invariant", mutuality_check),
        ("scale invariance", scale_invariance_check),
        ("determinism", determinism_check),
        ("clustering quality", quality_check),
        ("graph economy", economy_check),
        ("parameter insensitivity", insensitivity_check),
        ("pair export", pairs_check),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed().as_secs_f64();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {name}: {} [{took:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
