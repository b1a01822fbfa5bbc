//! k-levels of line arrangements, their upper hulls and conflict sets, and
//! the finite enumeration of k-shallow line classes.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{
    int, upper_hull_indices, Chain, Line, Point, Rational, Side,
};

/// The k-level of a set of lines as an x-monotone polyline.
///
/// `segments[i]` is the index of the line carrying the piece of the level
/// left of `polyline[i]` (and `segments[len]` carries the right ray), so the
/// two unbounded rays are represented by their supporting lines rather than
/// by clipped endpoints.
#[derive(Clone, Debug, Serialize)]
pub struct LevelChain {
    pub k: usize,
    pub lines: Vec<Line>,
    pub polyline: Vec<Point>,
    /// Number of lines strictly below each polyline vertex (`k` at a convex
    /// bend, `k − 1` at a concave one).
    pub below_counts: Vec<usize>,
    pub segments: Vec<usize>,
    pub hull: Chain,
    /// For each hull vertex, its index in `polyline`.
    pub hull_vertices: Vec<usize>,
    /// Hull-vertex index → indices of the lines strictly below it.
    pub conflicts: BTreeMap<usize, BTreeSet<usize>>,
    /// Points where three or more lines meet (resolved by index order).
    pub degeneracies: Vec<Point>,
}

impl LevelChain {
    pub fn left_ray(&self) -> &Line {
        &self.lines[self.segments[0]]
    }

    pub fn right_ray(&self) -> &Line {
        &self.lines[*self.segments.last().expect("level has at least one segment")]
    }
}

/// Computes `lev_k` by sweeping the arrangement left to right while keeping
/// the vertical order of all lines.
pub fn k_level(lines: &[Line], k: usize) -> Result<LevelChain> {
    let n = lines.len();
    if k >= n {
        return Err(Error::InvalidDepth { k: k as i64, n });
    }
    {
        let mut seen = BTreeSet::new();
        for (i, l) in lines.iter().enumerate() {
            if !seen.insert(l) {
                return Err(Error::DegenerateInput(format!("line {i} ({l}) is repeated")));
            }
        }
    }

    // Order at x = −∞: larger slope is lower; parallel lines by intercept.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        lines[b]
            .slope
            .cmp(&lines[a].slope)
            .then_with(|| lines[a].intercept.cmp(&lines[b].intercept))
    });
    let mut pos = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        pos[i] = r;
    }

    let events = arrangement_vertices(lines);

    let mut polyline = Vec::new();
    let mut below_counts = Vec::new();
    let mut segments = vec![order[k]];
    let mut degeneracies = Vec::new();

    for (point, through) in events {
        let lo = through.iter().map(|&i| pos[i]).min().unwrap();
        let hi = through.iter().map(|&i| pos[i]).max().unwrap();
        if hi - lo + 1 != through.len() {
            return Err(Error::DegenerateInput(format!(
                "lines through {point} are not adjacent in the sweep order"
            )));
        }
        if through.len() > 2 {
            degeneracies.push(point.clone());
        }
        let before = order[k];
        order[lo..=hi].reverse();
        for (r, &i) in order.iter().enumerate().take(hi + 1).skip(lo) {
            pos[i] = r;
        }
        if (lo..=hi).contains(&k) && order[k] != before {
            polyline.push(point);
            below_counts.push(lo);
            segments.push(order[k]);
        }
    }

    let (hull, hull_vertices) = level_hull(lines, &polyline, &segments)?;
    let mut level = LevelChain {
        k,
        lines: lines.to_vec(),
        polyline,
        below_counts,
        segments,
        hull,
        hull_vertices,
        conflicts: BTreeMap::new(),
        degeneracies,
    };
    level.conflicts = hull_conflicts(&level);
    Ok(level)
}

/// All arrangement vertices sorted by (x, y), each with the lines through it.
fn arrangement_vertices(lines: &[Line]) -> Vec<(Point, Vec<usize>)> {
    let n = lines.len();
    let mut pairs: Vec<(Point, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                lines[i].intersection(&lines[j]).map(|p| (p, i, j))
            })
        })
        .collect();
    pairs.par_sort_unstable();

    let mut out: Vec<(Point, Vec<usize>)> = Vec::new();
    for (p, i, j) in pairs {
        match out.last_mut() {
            Some((q, members)) if *q == p => {
                for v in [i, j] {
                    if !members.contains(&v) {
                        members.push(v);
                    }
                }
            }
            _ => out.push((p, vec![i, j])),
        }
    }
    out
}

/// Upper hull of the level, accounting for its two unbounded rays: a finite
/// hull vertex survives only if some supporting slope at it also lies
/// strictly between the right-ray and left-ray slopes.
fn level_hull(lines: &[Line], polyline: &[Point], segments: &[usize]) -> Result<(Chain, Vec<usize>)> {
    if polyline.is_empty() {
        return Ok((Chain::default(), Vec::new()));
    }
    let left_slope = &lines[segments[0]].slope;
    let right_slope = &lines[*segments.last().unwrap()].slope;
    let idx = upper_hull_indices(polyline)?;
    let slope = |a: usize, b: usize| -> Rational {
        (&polyline[b].y - &polyline[a].y) / (&polyline[b].x - &polyline[a].x)
    };
    let mut kept = Vec::new();
    for (h, &v) in idx.iter().enumerate() {
        // Support interval (lower, upper) of slopes at v, intersected with
        // (right_slope, left_slope).
        let mut lower = right_slope.clone();
        if h + 1 < idx.len() {
            lower = lower.max(slope(v, idx[h + 1]));
        }
        let mut upper = left_slope.clone();
        if h > 0 {
            upper = upper.min(slope(idx[h - 1], v));
        }
        if lower < upper {
            kept.push(v);
        }
    }
    let chain = Chain::new(kept.iter().map(|&i| polyline[i].clone()).collect())?;
    Ok((chain, kept))
}

/// Conflict sets of the hull vertices: the lines strictly below each vertex,
/// recounted by direct substitution. Vertices whose count is not exactly `k`
/// (concave `k − 1` bends of the closure) are omitted.
pub fn hull_conflicts(level: &LevelChain) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut out = BTreeMap::new();
    for (h, &v) in level.hull_vertices.iter().enumerate() {
        let p = &level.polyline[v];
        let below: BTreeSet<usize> = level
            .lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.eval(&p.x) < p.y)
            .map(|(i, _)| i)
            .collect();
        if below.len() == level.k {
            out.insert(h, below);
        }
    }
    out
}

/// One combinatorial class of k-shallow lines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShallowLineClass {
    pub representative: Line,
    /// Indices of the input points strictly below every line of the class.
    pub below_points: BTreeSet<usize>,
    /// Side of each extra site with respect to the lines of the class.
    pub site_sides: Vec<Side>,
}

/// Enumerates every class of non-vertical lines that avoid all `points` and
/// have at most `k` of them strictly below, where a class fixes the set of
/// points below and the side of every extra site.
///
/// Works in the dual: each site becomes a line, and every cell (vertex, edge
/// or face) of the dual arrangement is sampled. Sampling abscissae are the
/// vertex abscissae, the midpoints between consecutive ones, and one
/// abscissa beyond each end; every cell meets one of these verticals, and on
/// a vertical the cells are read off the sorted order of the dual lines.
///
/// The representative of a class is its smallest line in `(slope,
/// intercept)` order among the samples.
pub fn shallow_line_classes(
    points: &[Point],
    k: i64,
    extra_sites: &[Point],
) -> Result<Vec<ShallowLineClass>> {
    if k < 0 {
        return Err(Error::InvalidDepth { k, n: points.len() });
    }
    let k = k as usize;
    let duals = DualSites::new(points, extra_sites);
    let xs = duals.sample_abscissae();

    // A primal line's slope is twice its dual abscissa, and its intercept
    // falls as the dual ordinate rises, so the smallest representative is
    // the first sample in (x ascending, y descending) order.
    let found: Vec<BTreeMap<ClassKey, BigInt>> = xs
        .par_iter()
        .map(|x| duals.classes_on_vertical(x, k))
        .collect();
    let mut merged: BTreeMap<ClassKey, (usize, BigInt)> = BTreeMap::new();
    for (xi, part) in found.into_iter().enumerate() {
        for (key, y2) in part {
            merged.entry(key).or_insert((xi, y2));
        }
    }

    let mut classes: Vec<ShallowLineClass> = merged
        .into_iter()
        .map(|(key, (xi, y2))| ShallowLineClass {
            representative: duals.primal_line(&xs[xi], y2),
            below_points: key.below.into_iter().map(|i| i as usize).collect(),
            site_sides: key.sites,
        })
        .collect();
    classes.sort_by(|a, b| a.representative.cmp(&b.representative));
    Ok(classes)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ClassKey {
    below: Vec<u32>,
    sites: Vec<Side>,
}

/// Distinct site locations and their dual lines, after scaling the plane
/// by the common denominator `scale` of all coordinates so that every dual
/// line has integer coefficients.
struct DualSites {
    slopes: Vec<BigInt>,
    intercepts: Vec<BigInt>,
    scale: BigInt,
    /// Input points located at each distinct site.
    point_members: Vec<Vec<u32>>,
    /// Extra sites located at each distinct site.
    extra_members: Vec<Vec<u32>>,
    n_extra: usize,
}

impl DualSites {
    fn new(points: &[Point], extra: &[Point]) -> Self {
        let mut index: BTreeMap<&Point, usize> = BTreeMap::new();
        let mut distinct: Vec<&Point> = Vec::new();
        let mut point_members: Vec<Vec<u32>> = Vec::new();
        let mut extra_members: Vec<Vec<u32>> = Vec::new();
        for (i, p) in points.iter().chain(extra.iter()).enumerate() {
            let id = *index.entry(p).or_insert_with(|| {
                distinct.push(p);
                point_members.push(Vec::new());
                extra_members.push(Vec::new());
                distinct.len() - 1
            });
            if i < points.len() {
                point_members[id].push(i as u32);
            } else {
                extra_members[id].push((i - points.len()) as u32);
            }
        }
        let scale = distinct
            .iter()
            .flat_map(|p| [p.x.denom(), p.y.denom()])
            .fold(BigInt::one(), |acc, d| acc.lcm(d));
        // Dual of the scaled point (X, Y) is y = 2X·x − Y.
        let slopes = distinct
            .iter()
            .map(|p| (&p.x * &scale).to_integer() * 2)
            .collect();
        let intercepts = distinct.iter().map(|p| -(&p.y * &scale).to_integer()).collect();
        DualSites {
            slopes,
            intercepts,
            scale,
            point_members,
            extra_members,
            n_extra: extra.len(),
        }
    }

    fn len(&self) -> usize {
        self.slopes.len()
    }

    fn sample_abscissae(&self) -> Vec<Rational> {
        let n = self.len();
        let mut crit: Vec<Rational> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                (i + 1..n).filter(move |&j| self.slopes[i] != self.slopes[j]).map(move |j| {
                    Rational::new(
                        &self.intercepts[j] - &self.intercepts[i],
                        &self.slopes[i] - &self.slopes[j],
                    )
                })
            })
            .collect();
        crit.par_sort_unstable();
        crit.dedup();

        if crit.is_empty() {
            return vec![int(0)];
        }
        let mut xs = Vec::with_capacity(2 * crit.len() + 1);
        xs.push(&crit[0] - int(1));
        for (i, c) in crit.iter().enumerate() {
            xs.push(c.clone());
            if let Some(next) = crit.get(i + 1) {
                xs.push((c + next) / int(2));
            }
        }
        xs.push(crit.last().unwrap() + int(1));
        xs
    }

    /// Primal line (in original coordinates) of the dual point
    /// `(x, y2 / (2·denom(x)))`.
    fn primal_line(&self, x: &Rational, y2: BigInt) -> Line {
        let y = Rational::new(y2, x.denom() * BigInt::from(2));
        Line::new(x * int(2), -y / Rational::from_integer(self.scale.clone()))
    }

    /// Classes met by the vertical line at `x`, scanning from the top down
    /// and stopping once more than `k` points are below. Each class maps to
    /// `2·denom(x)` times the ordinate of its highest sample.
    fn classes_on_vertical(&self, x: &Rational, k: usize) -> BTreeMap<ClassKey, BigInt> {
        let (p, q) = (x.numer(), x.denom());
        // values[i] = q · (dual line i at x)
        let values: Vec<BigInt> = (0..self.len())
            .map(|i| &self.slopes[i] * p + &self.intercepts[i] * q)
            .collect();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| values[a].cmp(&values[b]));

        // Groups of dual lines with equal value at x, bottom to top.
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for r in 1..=order.len() {
            if r == order.len() || values[order[r]] != values[order[start]] {
                groups.push((start, r));
                start = r;
            }
        }

        // A dual point q lying above a site's dual line means the primal line
        // q* has that site above it, so sites on dual lines above q are the
        // ones below the primal line.
        let mut out = BTreeMap::new();
        let mut sides = vec![Side::Above; self.n_extra];
        let mut below: Vec<u32> = Vec::new();

        let mut emit = |y2: BigInt, sides: &[Side], below: &[u32]| {
            let mut b = below.to_vec();
            b.sort_unstable();
            let key = ClassKey {
                below: b,
                sites: sides.to_vec(),
            };
            out.entry(key).or_insert(y2);
        };

        let two_q = q * BigInt::from(2);
        let top = &values[order[groups.last().unwrap().0]];
        emit(top * 2 + &two_q, &sides, &below);

        for g in (0..groups.len()).rev() {
            let (s, e) = groups[g];
            let members = &order[s..e];
            let value = &values[members[0]];
            let has_point = members.iter().any(|&d| !self.point_members[d].is_empty());
            if !has_point {
                for &d in members {
                    for &site in &self.extra_members[d] {
                        sides[site as usize] = Side::On;
                    }
                }
                emit(value * 2, &sides, &below);
            }
            for &d in members {
                for &site in &self.extra_members[d] {
                    sides[site as usize] = Side::Below;
                }
                below.extend_from_slice(&self.point_members[d]);
            }
            if below.len() > k {
                break;
            }
            let y2 = if g == 0 {
                value * 2 - &two_q
            } else {
                value + &values[order[groups[g - 1].0]]
            };
            emit(y2, &sides, &below);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{frac, side_of_line};

    fn line(a: i64, b: i64) -> Line {
        Line::new(int(a), int(b))
    }

    #[test]
    fn two_line_levels() {
        let lines = [line(1, 0), line(-1, 0)];
        let lev0 = k_level(&lines, 0).unwrap();
        assert_eq!(lev0.polyline, vec![Point::from_ints(0, 0)]);
        assert_eq!(lev0.segments, vec![0, 1]);
        assert_eq!(lev0.below_counts, vec![0]);
        assert_eq!(lev0.hull_vertices, vec![0]);
        assert_eq!(lev0.conflicts.get(&0).map(|s| s.len()), Some(0));

        let lev1 = k_level(&lines, 1).unwrap();
        assert_eq!(lev1.polyline, vec![Point::from_ints(0, 0)]);
        assert_eq!(lev1.segments, vec![1, 0]);
        assert_eq!(lev1.below_counts, vec![0]);
        // The valley at the origin is not a hull vertex and has only k−1
        // lines below it, so nothing is reported.
        assert!(lev1.hull.is_empty());
        assert!(lev1.conflicts.is_empty());
    }

    #[test]
    fn depth_out_of_range() {
        assert!(matches!(k_level(&[line(1, 0)], 1), Err(Error::InvalidDepth { .. })));
        assert!(matches!(
            k_level(&[line(1, 0), line(1, 0)], 0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            shallow_line_classes(&[], -1, &[]),
            Err(Error::InvalidDepth { .. })
        ));
    }

    #[test]
    fn concurrent_lines_are_flagged() {
        let lines = [line(1, 0), line(-1, 0), line(0, 0), line(2, 5)];
        let lev = k_level(&lines, 1).unwrap();
        assert_eq!(lev.degeneracies, vec![Point::from_ints(0, 0)]);
    }

    #[test]
    fn parallel_lines_have_no_vertices() {
        let lines = [line(1, 0), line(1, 3), line(1, -2)];
        let lev = k_level(&lines, 1).unwrap();
        assert!(lev.polyline.is_empty());
        assert_eq!(lev.segments, vec![0]);
        assert!(lev.hull.is_empty());
    }

    #[test]
    fn hull_with_rays_keeps_peak() {
        // Lower envelope of a cap: rays slope 2 on the left and -2 on the right.
        let lines = [line(2, 0), line(0, 1), line(-2, 4)];
        let lev = k_level(&lines, 0).unwrap();
        assert_eq!(lev.polyline.len(), 2);
        assert_eq!(lev.hull_vertices, vec![0, 1]);
        for set in lev.conflicts.values() {
            assert!(set.is_empty());
        }
    }

    #[test]
    fn single_point_classes() {
        let classes = shallow_line_classes(&[Point::from_ints(0, 0)], 0, &[]).unwrap();
        assert_eq!(classes.len(), 1);
        assert!(classes[0].below_points.is_empty());
        let p = Point::from_ints(0, 0);
        assert_eq!(side_of_line(&classes[0].representative, &p), Side::Below.flipped());

        let classes = shallow_line_classes(&[Point::from_ints(0, 0)], 1, &[]).unwrap();
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn classes_report_extra_site_sides() {
        let pts = [Point::from_ints(0, 0)];
        let sites = [Point::new(int(1), frac(1, 2)), Point::from_ints(0, 0)];
        let classes = shallow_line_classes(&pts, 0, &sites).unwrap();
        for c in &classes {
            for (s, side) in sites.iter().zip(&c.site_sides) {
                assert_eq!(side_of_line(&c.representative, s), *side);
            }
            // the second site coincides with the point, so it is never on the line
            assert_ne!(c.site_sides[1], Side::On);
        }
        let on = classes.iter().filter(|c| c.site_sides[0] == Side::On).count();
        assert!(on >= 1);
    }
}
