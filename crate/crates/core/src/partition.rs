//! k-partitions: validation, exact crossing numbers over all k-shallow line
//! classes, the dual coloring of an adversary instance, and a brute-force
//! optimum for tiny point sets.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{primal_line, AdversaryInstance};
use crate::error::{Error, Result};
use crate::geom::{int, orient, side_of_line, Line, Point, Rational, Side, Turn};
use crate::levels::{k_level, shallow_line_classes, ShallowLineClass};

/// Largest instance whose dual level is recomputed by
/// [`coloring_from_partition`]; larger ones use the chain vertices only.
pub const LEVEL_CHECK_LIMIT: usize = 600;

/// A closed triangle, possibly degenerate (repeated or collinear vertices).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triangle(pub [Point; 3]);

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        Triangle([a, b, c])
    }

    pub fn vertices(&self) -> &[Point; 3] {
        &self.0
    }

    pub fn is_degenerate(&self) -> bool {
        let [a, b, c] = &self.0;
        orient(a, b, c) == Turn::Straight
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point) -> bool {
        let [a, b, c] = &self.0;
        if !self.is_degenerate() {
            let s = [orient(a, b, p), orient(b, c, p), orient(c, a, p)];
            return !(s.contains(&Turn::Left) && s.contains(&Turn::Right));
        }
        let lo = self.0.iter().min().unwrap();
        let hi = self.0.iter().max().unwrap();
        if lo == hi {
            return p == lo;
        }
        orient(lo, hi, p) == Turn::Straight && lo <= p && p <= hi
    }

    /// Closed intersection with a line: the vertices are neither all
    /// strictly above nor all strictly below it.
    pub fn intersects(&self, line: &Line) -> bool {
        let sides = self.0.each_ref().map(|v| side_of_line(line, v));
        !(sides.iter().all(|&s| s == Side::Above) || sides.iter().all(|&s| s == Side::Below))
    }

    pub fn strictly_below(&self, line: &Line) -> bool {
        self.0.iter().all(|v| side_of_line(line, v) == Side::Below)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KPartition {
    pub parts: Vec<Vec<usize>>,
    pub triangles: Vec<Triangle>,
}

impl KPartition {
    /// `part_of[i]` is the part holding point `i`, for a partition of `n`
    /// points with every index in range.
    pub fn part_of(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (p, part) in self.parts.iter().enumerate() {
            for &i in part {
                if i < n {
                    out[i] = Some(p);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub violations: Vec<String>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the k-partition conditions: parts disjoint and covering, `⌊n/k⌋`
/// parts of size `k` plus one part of size `n mod k` when non-zero (in any
/// order), one triangle per part, and closed containment of every part in
/// its triangle.
pub fn validate_partition(points: &[Point], partition: &KPartition, k: usize) -> PartitionReport {
    let n = points.len();
    let mut v = Vec::new();
    if k == 0 {
        v.push("k must be at least 1".to_string());
        return PartitionReport { violations: v };
    }
    if partition.parts.len() != partition.triangles.len() {
        v.push(format!(
            "{} parts but {} triangles",
            partition.parts.len(),
            partition.triangles.len()
        ));
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (p, part) in partition.parts.iter().enumerate() {
        for &i in part {
            if i >= n {
                v.push(format!("part {p} refers to point {i}, only {n} points"));
                continue;
            }
            match owner[i] {
                Some(q) => v.push(format!("point {i} is in parts {q} and {p}")),
                None => owner[i] = Some(p),
            }
        }
    }
    let missing: Vec<usize> = (0..n).filter(|&i| owner[i].is_none()).collect();
    if !missing.is_empty() {
        v.push(format!("points {missing:?} are in no part"));
    }

    let mut want: Vec<usize> = vec![k; n / k];
    if !n.is_multiple_of(k) {
        want.push(n % k);
    }
    let mut got: Vec<usize> = partition.parts.iter().map(Vec::len).collect();
    want.sort_unstable();
    got.sort_unstable();
    if want != got {
        v.push(format!("part sizes {got:?}, expected {want:?}"));
    }

    for (p, (part, tri)) in partition.parts.iter().zip(&partition.triangles).enumerate() {
        for &i in part.iter().filter(|&&i| i < n) {
            if !tri.contains(&points[i]) {
                v.push(format!("point {i} ({}) lies outside triangle {p}", points[i]));
            }
        }
    }
    PartitionReport { violations: v }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossingCertificate {
    pub value: usize,
    pub witness: Line,
    pub below_count: usize,
    pub crossed: BTreeSet<usize>,
}

/// The largest number of triangles met by a k-shallow line avoiding all
/// points. Ties go to the witness with the smallest `(slope, intercept)`.
pub fn crossing_number(points: &[Point], partition: &KPartition, k: usize) -> Result<CrossingCertificate> {
    let report = validate_partition(points, partition, k);
    if !report.is_valid() {
        return Err(Error::InvalidPartition(report.violations.join("; ")));
    }
    let sites: Vec<Point> = partition
        .triangles
        .iter()
        .flat_map(|t| t.vertices().iter().cloned())
        .collect();
    let classes = shallow_line_classes(points, k as i64, &sites)?;
    Ok(best_certificate(&classes, &partition.triangles))
}

/// Maximum crossing over the given class representatives.
pub fn best_certificate(classes: &[ShallowLineClass], triangles: &[Triangle]) -> CrossingCertificate {
    classes
        .par_iter()
        .map(|c| certificate_for(&c.representative, c.below_points.len(), triangles))
        .reduce_with(better)
        .expect("the class of lines below every point always exists")
}

/// Certificate for a single line, recomputed from raw side predicates.
pub fn certificate_for(line: &Line, below_count: usize, triangles: &[Triangle]) -> CrossingCertificate {
    let crossed: BTreeSet<usize> = triangles
        .iter()
        .enumerate()
        .filter(|(_, t)| t.intersects(line))
        .map(|(i, _)| i)
        .collect();
    CrossingCertificate {
        value: crossed.len(),
        witness: line.clone(),
        below_count,
        crossed,
    }
}

fn better(a: CrossingCertificate, b: CrossingCertificate) -> CrossingCertificate {
    match a.value.cmp(&b.value) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if b.witness < a.witness {
                b
            } else {
                a
            }
        }
    }
}

/// Number of triangles with all three vertices strictly below `line`.
pub fn triangles_below(line: &Line, partition: &KPartition) -> usize {
    partition.triangles.iter().filter(|t| t.strictly_below(line)).count()
}

/// Points sorted by `(x, y)` and cut into runs of `k`. Each run gets the
/// right triangle with legs along the bottom and left sides of its bounding
/// box, twice as long as the box.
pub fn baseline_partition(points: &[Point], k: usize) -> Result<KPartition> {
    if points.is_empty() || k == 0 {
        return Err(Error::ParameterRange("baseline needs at least one point and k >= 1".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].cmp(&points[b]));
    let mut parts = Vec::new();
    let mut triangles = Vec::new();
    for chunk in order.chunks(k) {
        let xs = chunk.iter().map(|&i| &points[i].x);
        let ys = chunk.iter().map(|&i| &points[i].y);
        let (x0, x1) = (xs.clone().min().unwrap(), xs.max().unwrap());
        let (y0, y1) = (ys.clone().min().unwrap(), ys.max().unwrap());
        let w2: Rational = (x1 - x0) * int(2);
        let h2: Rational = (y1 - y0) * int(2);
        triangles.push(Triangle::new(
            Point::new(x0.clone(), y0.clone()),
            Point::new(x0 + w2, y0.clone()),
            Point::new(x0.clone(), y0 + h2),
        ));
        parts.push(chunk.to_vec());
    }
    Ok(KPartition { parts, triangles })
}

/// Distinct colors of one conflict set, compared with the triangles met by
/// a k-shallow probe line through the conflict vertex's dual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexColoring {
    /// Dual vertex.
    pub vertex: Point,
    /// 1-based chain index, or `None` for a hull vertex of the k-level.
    pub chain_index: Option<usize>,
    pub conflict: Vec<usize>,
    pub distinct: usize,
    /// Primal line of the vertex, moved down below any site it touches.
    pub probe: Line,
    /// Points of the whole (padded) set strictly below the probe.
    pub probe_below: usize,
    pub crossed: usize,
    pub wholly_below: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColoringCheck {
    /// `colors[line]` = part containing the line's primal point.
    pub colors: Vec<usize>,
    pub largest_class: usize,
    pub vertices: Vec<VertexColoring>,
    pub max_distinct: usize,
    /// Largest `crossed` over all probes; a lower bound on the crossing
    /// number.
    pub max_probe_crossed: usize,
    pub violations: Vec<String>,
}

impl ColoringCheck {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Colors every instance line by the part of its primal point and checks,
/// at each conflict vertex (chain vertices and, for instances up to
/// [`LEVEL_CHECK_LIMIT`] lines, hull vertices of the dual k-level), that the
/// conflict set has at most `crossed + wholly_below` colors with at most one
/// triangle wholly below.
///
/// The partition may cover the instance points alone or the padded set.
pub fn coloring_from_partition(
    inst: &AdversaryInstance,
    partition: &KPartition,
    k: usize,
) -> Result<ColoringCheck> {
    let n_lines = inst.lines.len();
    let points = if covered(partition) == n_lines {
        inst.points.clone()
    } else if covered(partition) == n_lines + inst.padding.len() {
        inst.all_points()
    } else {
        return Err(Error::InvalidInput(format!(
            "partition covers {} points, instance has {} (or {} padded)",
            covered(partition),
            n_lines,
            n_lines + inst.padding.len()
        )));
    };
    let report = validate_partition(&points, partition, k);
    if !report.is_valid() {
        return Err(Error::InvalidInput(report.violations.join("; ")));
    }
    let part_of = partition.part_of(points.len());
    let colors: Vec<usize> = (0..n_lines).map(|i| part_of[i].expect("validated")).collect();

    let mut violations = Vec::new();
    let mut class_size: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &colors {
        *class_size.entry(c).or_insert(0) += 1;
    }
    let largest_class = class_size.values().copied().max().unwrap_or(0);
    if largest_class > k {
        violations.push(format!("a color class has {largest_class} lines, more than k={k}"));
    }

    let mut targets: Vec<(Point, Option<usize>, Vec<usize>)> = inst
        .chain
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), Some(i + 1), inst.chain_conflict_set(i + 1)))
        .collect();
    if n_lines <= LEVEL_CHECK_LIMIT && k < n_lines {
        let level = k_level(&inst.dual_lines(), k)?;
        for (&h, set) in &level.conflicts {
            targets.push((level.hull.vertices()[h].clone(), None, set.iter().copied().collect()));
        }
    }

    let sites: Vec<&Point> = points
        .iter()
        .chain(partition.triangles.iter().flat_map(|t| t.vertices().iter()))
        .collect();
    let vertices: Vec<VertexColoring> = targets
        .into_par_iter()
        .map(|(vertex, chain_index, conflict)| {
            let probe = probe_line(&primal_line(&vertex), &sites);
            let mut cs: Vec<usize> = conflict.iter().map(|&i| colors[i]).collect();
            cs.sort_unstable();
            cs.dedup();
            VertexColoring {
                probe_below: points.iter().filter(|p| side_of_line(&probe, p) == Side::Below).count(),
                crossed: partition.triangles.iter().filter(|t| t.intersects(&probe)).count(),
                wholly_below: triangles_below(&probe, partition),
                distinct: cs.len(),
                vertex,
                chain_index,
                conflict,
                probe,
            }
        })
        .collect();

    for v in &vertices {
        let at = match v.chain_index {
            Some(i) => format!("chain vertex {i}"),
            None => format!("level vertex {}", v.vertex),
        };
        if v.conflict.len() != k {
            violations.push(format!("{at}: conflict set has {} lines", v.conflict.len()));
        }
        if v.probe_below != k {
            violations.push(format!("{at}: probe has {} points below, expected {k}", v.probe_below));
        }
        if v.wholly_below > 1 {
            violations.push(format!("{at}: {} triangles wholly below", v.wholly_below));
        }
        if v.distinct > v.crossed + v.wholly_below {
            violations.push(format!(
                "{at}: {} colors but only {} crossed + {} below",
                v.distinct, v.crossed, v.wholly_below
            ));
        }
    }
    Ok(ColoringCheck {
        colors,
        largest_class,
        max_distinct: vertices.iter().map(|v| v.distinct).max().unwrap_or(0),
        max_probe_crossed: vertices.iter().map(|v| v.crossed).max().unwrap_or(0),
        vertices,
        violations,
    })
}

fn covered(partition: &KPartition) -> usize {
    partition.parts.iter().map(Vec::len).sum()
}

/// Moves `line` down so that sites on it end up strictly above while sites
/// strictly below stay strictly below.
fn probe_line(line: &Line, sites: &[&Point]) -> Line {
    if !sites.iter().any(|p| side_of_line(line, p) == Side::On) {
        return line.clone();
    }
    let gap = sites
        .iter()
        .map(|p| line.eval(&p.x) - &p.y)
        .filter(|d| *d > int(0))
        .min()
        .unwrap_or_else(|| int(2));
    line.shifted_down(&(gap / int(2)))
}

/// Largest point set accepted by [`oracle_min_crossing`].
pub const ORACLE_MAX_POINTS: usize = 9;
pub const ORACLE_MAX_K: usize = 3;

/// Minimum crossing number over all k-partitions whose triangles are the
/// convex hulls of their parts (exact for `k ≤ 3`), with an optimal
/// partition. Ties go to the first partition in canonical order.
pub fn oracle_min_crossing(points: &[Point], k: usize) -> Result<(CrossingCertificate, KPartition)> {
    let n = points.len();
    if n == 0 || k == 0 {
        return Err(Error::ParameterRange("oracle needs n >= 1 and k >= 1".into()));
    }
    if n > ORACLE_MAX_POINTS || k > ORACLE_MAX_K {
        return Err(Error::OracleTooLarge(format!(
            "n={n}, k={k}; the exhaustive oracle handles n <= {ORACLE_MAX_POINTS}, k <= {ORACLE_MAX_K}"
        )));
    }
    let classes = shallow_line_classes(points, k as i64, &[])?;
    let mut sizes = vec![k; n / k];
    if !n.is_multiple_of(k) {
        sizes.push(n % k);
    }
    let mut all = Vec::new();
    enumerate_partitions(&mut vec![false; n], &mut sizes.clone(), &mut Vec::new(), &mut all);

    let mut best: Option<(CrossingCertificate, KPartition)> = None;
    for parts in all {
        let triangles: Vec<Triangle> = parts.iter().map(|p| hull_triangle(points, p)).collect();
        let cert = best_certificate(&classes, &triangles);
        if best.as_ref().is_none_or(|(b, _)| cert.value < b.value) {
            best = Some((cert, KPartition { parts, triangles }));
        }
    }
    Ok(best.expect("at least one partition exists"))
}

fn hull_triangle(points: &[Point], part: &[usize]) -> Triangle {
    let a = &points[part[0]];
    let b = &points[*part.get(1).unwrap_or(&part[0])];
    let c = &points[*part.get(2).unwrap_or(&part[part.len() - 1])];
    Triangle::new(a.clone(), b.clone(), c.clone())
}

/// Set partitions with the given part sizes, each listed once: every new
/// part starts with the smallest unused index, and parts of equal size are
/// opened in a fixed order.
fn enumerate_partitions(
    used: &mut Vec<bool>,
    sizes: &mut Vec<usize>,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    let Some(first) = used.iter().position(|u| !u) else {
        out.push(current.clone());
        return;
    };
    let mut tried = BTreeSet::new();
    for s in 0..sizes.len() {
        let size = sizes[s];
        if !tried.insert(size) {
            continue;
        }
        sizes.remove(s);
        used[first] = true;
        let rest: Vec<usize> = (first + 1..used.len()).filter(|&i| !used[i]).collect();
        for combo in combinations(&rest, size - 1) {
            for &i in &combo {
                used[i] = true;
            }
            let mut part = vec![first];
            part.extend(&combo);
            current.push(part);
            enumerate_partitions(used, sizes, current, out);
            current.pop();
            for &i in &combo {
                used[i] = false;
            }
        }
        used[first] = false;
        sizes.insert(s, size);
    }
}

fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    if items.len() < r {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], r - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}
