//! Acceptance suite: one pass/fail line per criterion, with wall-clock limits.
//!
//! Runs without the libtest harness so that criteria execute one after the
//! other and their timings are not skewed by each other.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shallow_lab::adversary::{
    build_instance, instance_report, BuildOptions, PaddingValidation, ReportOptions,
};
use shallow_lab::geom::{dualize_line, dualize_point, frac, int, side_of_line, Line, Point, Rational, Side};
use shallow_lab::levels::{k_level, shallow_line_classes};
use shallow_lab::partition::{
    baseline_partition, coloring_from_partition, crossing_number, validate_partition, KPartition, Triangle,
};
use shallow_lab::treecolor::{adversary_min_bruteforce, greedy_colorful_path, slice_bound, MultiColoredTree};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored; a plain
    // word filters criteria by name.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria = [
        Criterion { id: 1, name: "construction fidelity", limit: secs(10), run: c1_construction },
        Criterion { id: 2, name: "duality properties", limit: secs(5), run: c2_duality },
        Criterion { id: 3, name: "level oracle equivalence", limit: secs(30), run: c3_levels },
        Criterion { id: 4, name: "crossing evaluator completeness", limit: secs(120), run: c4_evaluator },
        Criterion { id: 5, name: "lemma machinery", limit: secs(60), run: c5_lemma },
        Criterion { id: 6, name: "exhaustive lemma check", limit: secs(60), run: c6_bruteforce },
        Criterion { id: 7, name: "theorem arithmetic", limit: secs(60), run: c7_arithmetic },
        Criterion { id: 8, name: "end-to-end consistency", limit: secs(120), run: c8_consistency },
        Criterion { id: 9, name: "padding validity", limit: secs(120), run: c9_padding },
    ];
    let mut failed = 0;
    let mut ran = 0;
    for c in &criteria {
        if filter.as_ref().is_some_and(|f| !c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("over time limit; {d}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {:<32} {}  {:>7.2}s / {:>3}s  {}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Strict side of `p` relative to `l`, by direct substitution.
fn side(l: &Line, p: &Point) -> std::cmp::Ordering {
    p.y.cmp(&(&l.slope * &p.x + &l.intercept))
}

fn below_count(lines: &[Line], p: &Point) -> usize {
    lines.iter().filter(|l| side(l, p).is_gt()).count()
}

fn c1_construction() -> Outcome {
    let mut instances = 0;
    let mut hull_vertices = 0;
    for beta in 1..=6u32 {
        let m = 1usize << beta;
        let lv = beta as usize + 1;
        let ks: BTreeSet<usize> = [lv, 2 * lv, lv + 1].into();
        for &k in &ks {
            let inst = build_instance(m, k).map_err(|e| format!("m={m} k={k}: {e}"))?;
            instances += 1;
            let kp = k / lv * lv;
            let want = (2 * m - 1) * kp / lv + (k - kp);
            ensure(inst.lines.len() == want, || {
                format!("m={m} k={k}: {} lines, expected {want}", inst.lines.len())
            })?;

            for l in &inst.lines {
                let w = 1usize << l.provenance.j;
                let t = l.provenance.t as usize;
                for i in 1..=m {
                    let v = Point::from_ints(i as i64, -(i as i64 * i as i64));
                    let above = side(&l.line, &v).is_gt();
                    let inside = (t - 1) * w < i && i <= t * w;
                    ensure(above == inside && side(&l.line, &v).is_ne(), || {
                        format!("m={m} k={k}: line {:?} wrong side at v_{i}", l.provenance)
                    })?;
                }
            }

            let lines = inst.dual_lines();
            for i in 1..=m {
                let v = Point::from_ints(i as i64, -(i as i64 * i as i64));
                let below: Vec<usize> = (0..lines.len()).filter(|&l| side(&lines[l], &v).is_gt()).collect();
                ensure(below.len() == k, || format!("m={m} k={k}: v_{i} has {} lines below", below.len()))?;
                ensure(below == inst.chain_conflict_set(i), || format!("m={m} k={k}: conflict set of v_{i}"))?;
            }
            let level = k_level(&lines, k).map_err(|e| format!("m={m} k={k}: {e}"))?;
            for v in level.hull.vertices() {
                hull_vertices += 1;
                let below: Vec<usize> = (0..lines.len()).filter(|&i| side(&lines[i], v).is_gt()).collect();
                ensure(below.len() == k, || {
                    format!("m={m} k={k}: hull vertex {v} has {} lines below", below.len())
                })?;
            }
            ensure(level.conflicts.len() == level.hull.len(), || {
                format!("m={m} k={k}: a hull vertex was filtered")
            })?;
        }
    }
    Ok(format!("{instances} instances; chain vertices and {hull_vertices} k-level hull vertices have exactly k lines below"))
}

fn rand_rational(rng: &mut ChaCha8Rng) -> Rational {
    frac(rng.gen_range(-10_000..=10_000), rng.gen_range(1..=10_000))
}

fn c2_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0usize; 3];
    for i in 0..100_000 {
        let p0 = Point::new(rand_rational(&mut rng), rand_rational(&mut rng));
        let l = Line::new(rand_rational(&mut rng), rand_rational(&mut rng));
        // Every tenth point is moved onto the line.
        let p = if i % 10 == 0 { Point::new(p0.x.clone(), l.eval(&p0.x)) } else { p0 };
        ensure(dualize_line(&dualize_point(&p)) == p, || format!("involution fails at {p}"))?;
        ensure(dualize_point(&dualize_line(&l)) == l, || format!("involution fails at {l}"))?;
        let primal = side(&l, &p);
        let dual = side(&dualize_point(&p), &dualize_line(&l));
        ensure(primal == dual, || format!("order not preserved for {p} and {l}"))?;
        ensure(side_of_line(&l, &p) == to_side(primal), || format!("side_of_line wrong for {p}, {l}"))?;
        counts[(primal as i8 + 1) as usize] += 1;
    }
    Ok(format!(
        "100000 pairs ({} below, {} on, {} above)",
        counts[0], counts[1], counts[2]
    ))
}

fn to_side(o: std::cmp::Ordering) -> Side {
    match o {
        std::cmp::Ordering::Less => Side::Below,
        std::cmp::Ordering::Equal => Side::On,
        std::cmp::Ordering::Greater => Side::Above,
    }
}

fn c3_levels() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut edges = 0;
    let mut arrangements = 0;
    while arrangements < 200 {
        let n = rng.gen_range(2..=40);
        let mut set = BTreeSet::new();
        while set.len() < n {
            let a = frac(rng.gen_range(-60..=60), rng.gen_range(1..=6));
            let b = frac(rng.gen_range(-60..=60), rng.gen_range(1..=6));
            set.insert(Line::new(a, b));
        }
        let mut lines: Vec<Line> = set.into_iter().collect();
        lines.shuffle(&mut rng);
        let k = rng.gen_range(0..n);
        arrangements += 1;

        let lev = k_level(&lines, k).map_err(|e| format!("n={n} k={k}: {e}"))?;
        let poly = &lev.polyline;
        ensure(poly.windows(2).all(|w| w[0].x < w[1].x), || format!("n={n} k={k}: not x-monotone"))?;
        ensure(lev.segments.len() == poly.len() + 1, || format!("n={n} k={k}: segment count"))?;
        // Sample every edge and both rays.
        let mut samples: Vec<(Rational, usize)> = Vec::new();
        for i in 0..=poly.len() {
            let x = match (i.checked_sub(1).map(|j| &poly[j]), poly.get(i)) {
                (Some(a), Some(b)) => (&a.x + &b.x) / int(2),
                (Some(a), None) => &a.x + int(1),
                (None, Some(b)) => &b.x - int(1),
                (None, None) => int(0),
            };
            samples.push((x, lev.segments[i]));
        }
        for (x, s) in samples {
            let p = Point::new(x.clone(), lines[s].eval(&x));
            let below = below_count(&lines, &p);
            ensure(below == k, || format!("n={n} k={k}: {below} lines below edge point {p}"))?;
            edges += 1;
        }
        for (i, p) in poly.iter().enumerate() {
            for s in [lev.segments[i], lev.segments[i + 1]] {
                ensure(side(&lines[s], p).is_eq(), || format!("n={n} k={k}: vertex {p} off its lines"))?;
            }
        }

        let mirrored: Vec<Line> = lines.iter().map(Line::mirror_y).collect();
        let refl = k_level(&mirrored, n - 1 - k).map_err(|e| format!("reflected n={n}: {e}"))?;
        let back: Vec<Point> = refl.polyline.iter().map(Point::mirror_y).collect();
        ensure(&back == poly, || format!("n={n} k={k}: reflection property fails"))?;
    }
    Ok(format!("{arrangements} arrangements, {edges} edge/ray samples"))
}

// ---------- criterion 4: evaluator against a random-line sampler ----------

const SCALE: i128 = 1 << 24;

#[derive(Clone, Copy)]
struct IPoint(i128, i128);

fn to_ipoint(p: &Point) -> IPoint {
    let conv = |r: &Rational| -> i128 {
        assert!(r.is_integer(), "sampler instances use integer coordinates");
        let v: i64 = r.to_integer().try_into().unwrap();
        v as i128 * SCALE
    };
    IPoint(conv(&p.x), conv(&p.y))
}

/// Sign of `p` relative to the line through `a`, `b` (`a.0 != b.0`):
/// positive above, negative below.
fn iside(a: IPoint, b: IPoint, p: IPoint) -> i128 {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    cross.signum() * (b.0 - a.0).signum()
}

fn sampler_best(points: &[IPoint], triangles: &[[IPoint; 3]], k: usize, samples: usize, rng: &mut ChaCha8Rng) -> usize {
    let sites: Vec<IPoint> = points.iter().copied().chain(triangles.iter().flatten().copied()).collect();
    let (lo_x, hi_x) = (sites.iter().map(|p| p.0).min().unwrap(), sites.iter().map(|p| p.0).max().unwrap());
    let (lo_y, hi_y) = (sites.iter().map(|p| p.1).min().unwrap(), sites.iter().map(|p| p.1).max().unwrap());
    let mut best = 0;
    for s in 0..samples {
        let (a, b) = if s % 10 == 0 {
            let pick = |rng: &mut ChaCha8Rng| {
                IPoint(
                    rng.gen_range(lo_x - SCALE..=hi_x + SCALE),
                    rng.gen_range(lo_y - SCALE..=hi_y + SCALE),
                )
            };
            (pick(rng), pick(rng))
        } else {
            let jit = |p: IPoint, rng: &mut ChaCha8Rng| {
                let r: i128 = 1 << rng.gen_range(0..27);
                IPoint(p.0 + rng.gen_range(-r..=r), p.1 + rng.gen_range(-r..=r))
            };
            let a = sites[rng.gen_range(0..sites.len())];
            let b = sites[rng.gen_range(0..sites.len())];
            (jit(a, rng), jit(b, rng))
        };
        if a.0 == b.0 {
            continue;
        }
        let mut below = 0;
        let mut on = false;
        for &p in points {
            match iside(a, b, p) {
                0 => on = true,
                x if x < 0 => below += 1,
                _ => {}
            }
        }
        if on || below > k {
            continue;
        }
        let crossed = triangles
            .iter()
            .filter(|t| {
                let s: Vec<i128> = t.iter().map(|&v| iside(a, b, v)).collect();
                !(s.iter().all(|&x| x > 0) || s.iter().all(|&x| x < 0))
            })
            .count();
        best = best.max(crossed);
    }
    best
}

fn no_three_collinear(pts: &[IPoint]) -> bool {
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for l in j + 1..pts.len() {
                let (a, b, c) = (pts[i], pts[j], pts[l]);
                if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) == 0 {
                    return false;
                }
            }
        }
    }
    true
}

fn c4_evaluator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    let mut values = Vec::new();
    while done < 50 {
        let n = rng.gen_range(4..=12);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::from_ints(rng.gen_range(0..=1000), rng.gen_range(0..=1000)))
            .collect();
        let k = rng.gen_range(2..=n / 2 + 1);
        let part = baseline_partition(&pts, k).map_err(|e| e.to_string())?;
        let ipts: Vec<IPoint> = pts.iter().map(to_ipoint).collect();
        let itri: Vec<[IPoint; 3]> = part
            .triangles
            .iter()
            .map(|t| t.vertices().each_ref().map(to_ipoint))
            .collect();
        if !no_three_collinear(&ipts) {
            continue;
        }
        done += 1;
        let exact = crossing_number(&pts, &part, k).map_err(|e| e.to_string())?;
        let sampled = sampler_best(&ipts, &itri, k, 1_000_000, &mut rng);
        ensure(sampled == exact.value, || {
            format!("instance {done} (n={n}, k={k}): exact {} vs sampler {sampled}", exact.value)
        })?;
        values.push(exact.value);
    }
    Ok(format!("50 instances, crossing numbers {values:?}"))
}

// ---------- criterion 5: greedy path on random valid colorings ----------

fn complete_slices(beta: u32) -> usize {
    let (mut used, mut count) = (0u64, 0usize);
    for i in 1.. {
        let s = (3 * i * beta as u64).next_power_of_two().trailing_zeros() as u64;
        if used + s > beta as u64 + 1 {
            break;
        }
        used += s;
        count += 1;
    }
    count
}

/// A coloring with `q` slots per node and classes of at most `cap` slots.
/// Slots are visited in one of several orders and filled with runs of one
/// color, which concentrates colors on levels, subtrees or nothing at all.
fn random_coloring(beta: u32, q: usize, cap: usize, rng: &mut ChaCha8Rng) -> MultiColoredTree {
    let nodes = (1usize << (beta + 1)) - 1;
    let mut slots: Vec<(usize, usize)> = (0..nodes).flat_map(|v| (0..q).map(move |s| (v, s))).collect();
    match rng.gen_range(0..4) {
        0 => slots.shuffle(rng),
        1 => {}
        2 => {
            // Preorder: runs fill whole subtrees.
            let mut order = Vec::with_capacity(nodes);
            let mut stack = vec![0usize];
            while let Some(v) = stack.pop() {
                order.push(v);
                if 2 * v + 2 < nodes {
                    stack.push(2 * v + 2);
                    stack.push(2 * v + 1);
                }
            }
            slots = order.into_iter().flat_map(|v| (0..q).map(move |s| (v, s))).collect();
        }
        _ => {
            // By depth from the bottom, then left to right.
            slots.sort_by_key(|&(v, s)| (std::cmp::Reverse((v + 1).ilog2()), v, s));
        }
    }
    let mut colors = vec![Vec::with_capacity(q); nodes];
    let mut color = 0;
    let mut left = 0;
    for (v, _) in slots {
        if left == 0 {
            color += 1;
            left = if rng.gen_bool(0.5) { cap } else { rng.gen_range(1..=cap) };
        }
        colors[v].push(color);
        left -= 1;
    }
    MultiColoredTree::new(beta, colors).unwrap()
}

fn c5_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_margin = i64::MAX;
    for beta in 4..=14u32 {
        let bound = slice_bound(beta);
        ensure(bound == complete_slices(beta), || format!("slice_bound({beta}) = {bound}"))?;
        for trial in 0..1000 {
            let q = if beta >= 12 { 1 } else { rng.gen_range(1..=3) };
            let k = q * (beta as usize + 1);
            let tree = random_coloring(beta, q, 2 * k, &mut rng);
            let g = greedy_colorful_path(&tree);
            ensure(g.violations.is_empty(), || format!("beta={beta} trial {trial}: {:?}", g.violations))?;
            ensure(g.nodes.len() == beta as usize + 1 && g.nodes.windows(2).all(|w| w[1] == 2 * w[0] + 1 || w[1] == 2 * w[0] + 2), || {
                format!("beta={beta} trial {trial}: not a root-leaf path")
            })?;
            ensure(g.distinct == tree.distinct_on(&g.nodes), || format!("beta={beta}: distinct miscounted"))?;
            ensure(g.distinct >= bound, || {
                format!("beta={beta} trial {trial}: {} distinct < slice bound {bound}", g.distinct)
            })?;
            worst_margin = worst_margin.min(g.distinct as i64 - bound as i64);
        }
    }

    // Σ_{i≤b} ⌈log₂(3iβ)⌉ ≤ 3b·log₂ β for 4 ≤ β ≤ 2^16, 1 ≤ b ≤ β.
    let mut exact_checks = 0u64;
    for beta in 4..=(1u64 << 16) {
        let floor_log = 63 - beta.leading_zeros() as u64;
        let mut s = 0u64;
        for b in 1..=beta {
            s += (3 * b * beta).next_power_of_two().trailing_zeros() as u64;
            if s <= 3 * b * floor_log {
                continue;
            }
            exact_checks += 1;
            let lhs = BigUint::from(1u8) << s as usize;
            let rhs = BigUint::from(beta).pow(3 * b as u32);
            ensure(lhs <= rhs, || format!("summation chain fails at beta={beta}, b={b}"))?;
        }
    }
    Ok(format!(
        "11000 colorings, min margin over bound {worst_margin}; summation chain holds on 4..2^16 ({exact_checks} exact checks)"
    ))
}

// ---------- criterion 6 ----------

/// Min over colorings of 3 single-slot nodes (classes ≤ cap) of the max
/// path distinct count, by listing all 3^3 assignments.
fn tiny_min_max(cap: usize) -> usize {
    let mut best = usize::MAX;
    for code in 0..27 {
        let c = [code % 3, code / 3 % 3, code / 9];
        if (0..3).any(|x| c.iter().filter(|&&y| y == x).count() > cap) {
            continue;
        }
        let d = |a: usize, b: usize| if a == b { 1 } else { 2 };
        best = best.min(d(c[0], c[1]).max(d(c[0], c[2])));
    }
    best
}

fn c6_bruteforce() -> Outcome {
    let mut results = Vec::new();
    for beta in [1u32, 2] {
        for cap in [2usize, 3, 4] {
            let v = adversary_min_bruteforce(beta, beta as usize + 1, cap).map_err(|e| e.to_string())?;
            let bound = slice_bound(beta);
            ensure(v >= bound, || format!("beta={beta} cap={cap}: {v} < {bound}"))?;
            if beta == 1 {
                let t = tiny_min_max(cap);
                ensure(v == t, || format!("beta=1 cap={cap}: oracle {v}, direct listing {t}"))?;
            }
            results.push(format!("b{beta}c{cap}={v}"));
        }
    }
    Ok(results.join(" "))
}

// ---------- criterion 7 ----------

fn theorem_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for e in 6..=14u32 {
        let n = 1usize << e;
        let l = e as usize;
        let ks: BTreeSet<usize> = [l, 2 * l, n / 8, n / 4].into();
        grid.extend(ks.into_iter().map(|k| (n, k)));
    }
    grid
}

fn c7_arithmetic() -> Outcome {
    let grid = theorem_grid();
    for &(n, k) in &grid {
        let opts = ReportOptions { build: BuildOptions::fast(), pad: false };
        let (_, r) = instance_report(n, k, opts).map_err(|e| format!("n={n} k={k}: {e}"))?;
        let mut beta = 1u32;
        while ((1u64 << (beta + 2)) - 1) * 2 * k as u64 <= n as u64 * (beta as u64 + 2) {
            beta += 1;
        }
        let m = 1usize << beta;
        let lv = beta as usize + 1;
        let kp = k / lv * lv;
        let np = (2 * m - 1) * kp / lv + k - kp;
        ensure((r.beta, r.m, r.n_prime) == (beta, m, np), || {
            format!("n={n} k={k}: report ({}, {}, {}) vs ({beta}, {m}, {np})", r.beta, r.m, r.n_prime)
        })?;
        ensure(8 * np >= n && np <= n, || format!("n={n} k={k}: n'={np} outside [n/8, n]"))?;
        ensure(9 * k * m >= n, || format!("n={n} k={k}: m={m} < n/(9k)"))?;
        ensure(r.all_pass(), || format!("n={n} k={k}: failed checks {:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()))?;
    }
    Ok(format!("{} (n, k) pairs", grid.len()))
}

// ---------- criterion 8 ----------

fn random_partition(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> KPartition {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(rng);
    let mut parts = Vec::new();
    let mut triangles = Vec::new();
    for chunk in order.chunks(k) {
        let xs = chunk.iter().map(|&i| &points[i].x);
        let ys = chunk.iter().map(|&i| &points[i].y);
        let (x0, x1) = (xs.clone().min().unwrap().clone(), xs.max().unwrap().clone());
        let (y0, y1) = (ys.clone().min().unwrap().clone(), ys.max().unwrap().clone());
        let (w, h) = (&x1 - &x0, &y1 - &y0);
        // Right triangle at a random corner of the bounding box, legs doubled.
        let (cx, dx) = if rng.gen_bool(0.5) { (x0, w * int(2)) } else { (x1, -w * int(2)) };
        let (cy, dy) = if rng.gen_bool(0.5) { (y0, h * int(2)) } else { (y1, -h * int(2)) };
        triangles.push(Triangle::new(
            Point::new(cx.clone(), cy.clone()),
            Point::new(&cx + dx, cy.clone()),
            Point::new(cx, cy + dy),
        ));
        parts.push(chunk.to_vec());
    }
    KPartition { parts, triangles }
}

fn c8_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut instances = Vec::new();
    for beta in 1..=3u32 {
        let lv = beta as usize + 1;
        for k in [lv, lv + 1, 2 * lv] {
            instances.push(build_instance(1 << beta, k).map_err(|e| e.to_string())?);
        }
    }
    for (n, k) in [(64, 6), (64, 8), (64, 12)] {
        let (inst, _) = instance_report(n, k, ReportOptions::default()).map_err(|e| e.to_string())?;
        instances.push(inst);
    }
    let mut evaluated = 0;
    let mut tightest = i64::MAX;
    for inst in &instances {
        let k = inst.k;
        let points = inst.all_points();
        let mut partitions = vec![baseline_partition(&points, k).map_err(|e| e.to_string())?];
        partitions.extend((0..20).map(|_| random_partition(&points, k, &mut rng)));
        for (pi, part) in partitions.iter().enumerate() {
            let at = || format!("m={} k={k} n={} partition {pi}", inst.m, points.len());
            ensure(validate_partition(&points, part, k).is_valid(), || format!("{}: invalid", at()))?;
            let cn = crossing_number(&points, part, k).map_err(|e| format!("{}: {e}", at()))?;
            let col = coloring_from_partition(inst, part, k).map_err(|e| format!("{}: {e}", at()))?;
            ensure(col.ok(), || format!("{}: {:?}", at(), col.violations))?;

            // Recount the colors of every chain conflict set directly.
            let lines = inst.dual_lines();
            let mut owner = BTreeMap::new();
            for (p, members) in part.parts.iter().enumerate() {
                for &i in members {
                    owner.insert(i, p);
                }
            }
            let max_distinct = inst
                .chain
                .vertices()
                .iter()
                .map(|v| {
                    let colors: BTreeSet<usize> =
                        (0..lines.len()).filter(|&i| side(&lines[i], v).is_gt()).map(|i| owner[&i]).collect();
                    colors.len()
                })
                .max()
                .unwrap();
            ensure(max_distinct <= col.max_distinct, || format!("{}: recount disagrees", at()))?;
            ensure(col.max_distinct <= cn.value + 1, || {
                format!("{}: {} colors > crossing {} + 1", at(), col.max_distinct, cn.value)
            })?;
            ensure(col.max_probe_crossed <= cn.value, || format!("{}: probe beats evaluator", at()))?;
            tightest = tightest.min(cn.value as i64 + 1 - col.max_distinct as i64);
            evaluated += 1;
        }
    }
    Ok(format!(
        "{} instances, {evaluated} partitions, smallest slack {tightest}",
        instances.len()
    ))
}

// ---------- criterion 9 ----------

fn c9_padding() -> Outcome {
    // 20 padded instances small enough for class enumeration.
    let mut pairs: Vec<(usize, usize)> = theorem_grid().into_iter().filter(|&(n, _)| n <= 128).collect();
    for n in [80usize, 96, 112, 120] {
        let l = (usize::BITS - (n - 1).leading_zeros()) as usize;
        let ks: BTreeSet<usize> = [l, 2 * l, n / 8, n / 4].into();
        pairs.extend(ks.into_iter().filter(|&k| k >= l).map(|k| (n, k)));
    }
    pairs.truncate(20);

    let mut failures = Vec::new();
    let mut enumerated = 0;
    for &(n, k) in &pairs {
        let (inst, report) = instance_report(n, k, ReportOptions::default()).map_err(|e| e.to_string())?;
        if !inst.padding_verified {
            failures.push(format!("({n},{k}) n'={}", report.n_prime));
            continue;
        }
        let all = inst.all_points();
        let classes = shallow_line_classes(&all, k as i64, &[]).map_err(|e| e.to_string())?;
        let n_prime = inst.points.len();
        for c in &classes {
            let below = all.iter().filter(|p| side_of_line(&c.representative, p) == Side::Below).count();
            ensure(below == c.below_points.len() && below <= k, || format!("({n},{k}): class miscounted"))?;
            ensure(c.below_points.iter().all(|&i| i < n_prime), || {
                format!("({n},{k}): k-shallow line {} has padding below", c.representative)
            })?;
        }
        enumerated += 1;
    }

    // Every pair of the theorem grid.
    let mut grid_failures = Vec::new();
    let mut grid_ok = 0;
    for (n, k) in theorem_grid() {
        let opts = ReportOptions { build: BuildOptions::fast(), pad: true };
        let (inst, report) = instance_report(n, k, opts).map_err(|e| e.to_string())?;
        let method = report.check("padding_verified").map(|c| c.detail.clone()).unwrap_or_default();
        if inst.padding_verified && inst.padding.len() == n - inst.points.len() {
            grid_ok += 1;
            debug_assert!(method.starts_with(&format!("{:?}", PaddingValidation::DepthCertificate)) || n <= 128);
        } else {
            grid_failures.push(format!("({n},{k}) n'={}", report.n_prime));
        }
    }
    let summary = format!(
        "{enumerated}/{} enumerated instances verified, {grid_ok}/{} grid instances verified",
        pairs.len(),
        grid_ok + grid_failures.len()
    );
    if failures.is_empty() && grid_failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!(
            "{summary}; unverifiable (fewer than 2k instance points): {} | grid: {}",
            failures.join(" "),
            grid_failures.join(" ")
        ))
    }
}
