//! Exact rational planar primitives.
//!
//! Every predicate here is decided on arbitrary-precision rationals; there is
//! no floating-point path. Lines are always non-vertical (`y = slope·x +
//! intercept`), which is the only kind of line the shallow-line machinery
//! ever quantifies over.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Canonical arbitrary-precision rational (`num_rational` normalizes on
/// construction, so structural equality is value equality).
pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"num/den"` or `"num"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad_rational(s))?;
            let d: BigInt = d.trim().parse().map_err(|_| bad_rational(s))?;
            if d.is_zero() {
                return Err(bad_rational(s));
            }
            Rational::new(n, d)
        }
        None => Rational::from_integer(s.parse().map_err(|_| bad_rational(s))?),
    };
    Ok(parsed)
}

fn bad_rational(s: &str) -> Error {
    Error::InvalidInput(format!("not a rational: {s:?}"))
}

/// `"num/den"` with the denominator omitted when it is 1.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Serde adapter for rationals stored as strings.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(int(x), int(y))
    }

    /// Reflection across the x-axis.
    pub fn mirror_y(&self) -> Point {
        Point::new(self.x.clone(), -&self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format_rational(&self.x), format_rational(&self.y)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[String; 2]>::deserialize(d)?;
        Ok(Point::new(
            parse_rational(&x).map_err(D::Error::custom)?,
            parse_rational(&y).map_err(D::Error::custom)?,
        ))
    }
}

/// Non-vertical line `y = slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Line {
    #[serde(with = "rational_serde")]
    pub slope: Rational,
    #[serde(with = "rational_serde")]
    pub intercept: Rational,
}

impl Line {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Line { slope, intercept }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// The line through `p` and `q`; `None` when they share an abscissa.
    pub fn through(p: &Point, q: &Point) -> Option<Line> {
        if p.x == q.x {
            return None;
        }
        let slope = (&q.y - &p.y) / (&q.x - &p.x);
        let intercept = &p.y - &slope * &p.x;
        Some(Line::new(slope, intercept))
    }

    /// Intersection point, or `None` for parallel lines.
    pub fn intersection(&self, other: &Line) -> Option<Point> {
        if self.slope == other.slope {
            return None;
        }
        let x = (&other.intercept - &self.intercept) / (&self.slope - &other.slope);
        let y = self.eval(&x);
        Some(Point::new(x, y))
    }

    /// Reflection across the x-axis.
    pub fn mirror_y(&self) -> Line {
        Line::new(-&self.slope, -&self.intercept)
    }

    /// Same line moved down by `amount`.
    pub fn shifted_down(&self, amount: &Rational) -> Line {
        Line::new(self.slope.clone(), &self.intercept - amount)
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y = {}·x + {}", self.slope, self.intercept)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Turn {
    Right,
    Straight,
    Left,
}

impl Turn {
    pub fn sign(self) -> i8 {
        match self {
            Turn::Right => -1,
            Turn::Straight => 0,
            Turn::Left => 1,
        }
    }

    pub fn reversed(self) -> Turn {
        match self {
            Turn::Right => Turn::Left,
            Turn::Straight => Turn::Straight,
            Turn::Left => Turn::Right,
        }
    }
}

/// Sign of `(q − p) × (r − p)`.
pub fn orient(p: &Point, q: &Point, r: &Point) -> Turn {
    let cross = (&q.x - &p.x) * (&r.y - &p.y) - (&q.y - &p.y) * (&r.x - &p.x);
    if cross.is_positive() {
        Turn::Left
    } else if cross.is_negative() {
        Turn::Right
    } else {
        Turn::Straight
    }
}

/// Position of a point relative to a line (or of a site relative to a query
/// line). `Below` is the open halfplane under the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    On,
    Above,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Below => Side::Above,
            Side::On => Side::On,
            Side::Above => Side::Below,
        }
    }
}

/// Side of `p` with respect to `line`.
pub fn side_of_line(line: &Line, p: &Point) -> Side {
    match p.y.cmp(&line.eval(&p.x)) {
        std::cmp::Ordering::Less => Side::Below,
        std::cmp::Ordering::Equal => Side::On,
        std::cmp::Ordering::Greater => Side::Above,
    }
}

/// Paraboloid duality: `(px, py)` maps to `y = 2·px·x − py`.
pub fn dualize_point(p: &Point) -> Line {
    Line::new(&p.x * int(2), -&p.y)
}

/// Inverse of [`dualize_point`].
pub fn dualize_line(l: &Line) -> Point {
    Point::new(&l.slope / int(2), -&l.intercept)
}

/// An x-monotone chain whose interior vertices are all strict right turns.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chain {
    vertices: Vec<Point>,
}

impl Chain {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        for w in vertices.windows(2) {
            if w[0].x >= w[1].x {
                return Err(Error::DegenerateInput(format!(
                    "chain abscissae not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for w in vertices.windows(3) {
            if orient(&w[0], &w[1], &w[2]) != Turn::Right {
                return Err(Error::DegenerateInput(format!(
                    "chain vertex {} is not a strict right turn",
                    w[1]
                )));
            }
        }
        Ok(Chain { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

/// Upper convex hull, left to right. Collinear middle points are dropped, so
/// the result satisfies the [`Chain`] invariant.
pub fn upper_hull(points: &[Point]) -> Result<Chain> {
    let idx = upper_hull_indices(points)?;
    Ok(Chain {
        vertices: idx.into_iter().map(|i| points[i].clone()).collect(),
    })
}

/// Indices of the upper hull vertices, left to right.
pub fn upper_hull_indices(points: &[Point]) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::DegenerateInput("upper hull of an empty set".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.cmp(&points[b].x));
    for w in order.windows(2) {
        if points[w[0]].x == points[w[1]].x {
            return Err(Error::DegenerateInput(format!(
                "duplicate abscissa {} (points {} and {})",
                points[w[0]].x, w[0], w[1]
            )));
        }
    }
    let mut stack: Vec<usize> = Vec::with_capacity(points.len());
    for &i in &order {
        while stack.len() >= 2 {
            let a = &points[stack[stack.len() - 2]];
            let b = &points[stack[stack.len() - 1]];
            if orient(a, b, &points[i]) == Turn::Right {
                break;
            }
            stack.pop();
        }
        stack.push(i);
    }
    Ok(stack)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GeneralPositionReport {
    /// Pairs of point indices sharing an abscissa.
    pub duplicate_x: Vec<(usize, usize)>,
    /// Collinear triples, each sorted ascending.
    pub collinear: Vec<[usize; 3]>,
}

impl GeneralPositionReport {
    pub fn is_clean(&self) -> bool {
        self.duplicate_x.is_empty() && self.collinear.is_empty()
    }
}

/// Reports shared abscissae and collinear triples. Runs in expected
/// `O(n²)` by bucketing point pairs by their supporting line.
pub fn general_position_check(points: &[Point]) -> GeneralPositionReport {
    let mut report = GeneralPositionReport::default();

    let mut by_x: HashMap<&Rational, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        by_x.entry(&p.x).or_default().push(i);
    }
    let mut columns: Vec<Vec<usize>> = by_x.into_values().filter(|v| v.len() > 1).collect();
    columns.sort();
    for col in &columns {
        for a in 0..col.len() {
            for b in a + 1..col.len() {
                report.duplicate_x.push((col[a], col[b]));
            }
        }
        push_triples(col, &mut report.collinear);
    }

    // Pairs are bucketed by their supporting line reduced modulo a prime, on
    // integer-scaled coordinates; only buckets that collide are rebuilt
    // exactly, so the report is the same as with exact keys throughout.
    let (xs, ys) = scaled_residues(points);
    let mut by_residue: HashMap<(u64, u64), Vec<(usize, usize)>> = HashMap::new();
    let mut unreduced = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = sub_mod(xs[j], xs[i]);
            if dx == 0 {
                if points[i].x != points[j].x {
                    unreduced.push((i, j));
                }
                continue;
            }
            let slope = mul_mod(sub_mod(ys[j], ys[i]), inv_mod(dx));
            let intercept = sub_mod(ys[i], mul_mod(slope, xs[i]));
            by_residue.entry((slope, intercept)).or_default().push((i, j));
        }
    }
    let mut by_line: HashMap<Line, Vec<usize>> = HashMap::new();
    let candidates = by_residue
        .into_values()
        .filter(|pairs| pairs.len() > 1)
        .flatten()
        .chain(unreduced);
    for (i, j) in candidates {
        if let Some(l) = Line::through(&points[i], &points[j]) {
            let members = by_line.entry(l).or_default();
            for v in [i, j] {
                if !members.contains(&v) {
                    members.push(v);
                }
            }
        }
    }
    let mut rows: Vec<Vec<usize>> = by_line
        .into_values()
        .filter(|v| v.len() > 2)
        .map(|mut v| {
            v.sort_unstable();
            v
        })
        .collect();
    rows.sort();
    for row in &rows {
        push_triples(row, &mut report.collinear);
    }
    report.collinear.sort_unstable();
    report.collinear.dedup();
    report
}

const PRIME: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn sub_mod(a: u64, b: u64) -> u64 {
    (a + PRIME - b) % PRIME
}

fn inv_mod(a: u64) -> u64 {
    let (mut base, mut e, mut acc) = (a, PRIME - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        e >>= 1;
    }
    acc
}

/// Coordinates multiplied by the common denominator of each axis, reduced
/// modulo [`PRIME`].
fn scaled_residues(points: &[Point]) -> (Vec<u64>, Vec<u64>) {
    let axis = |get: fn(&Point) -> &Rational| -> Vec<u64> {
        let lcm = points
            .iter()
            .fold(BigInt::one(), |acc, p| num_integer::Integer::lcm(&acc, get(p).denom()));
        let prime = BigInt::from(PRIME);
        points
            .iter()
            .map(|p| {
                let v = get(p).numer() * (&lcm / get(p).denom());
                let r = num_integer::Integer::mod_floor(&v, &prime);
                u64::try_from(r).expect("residue fits in u64")
            })
            .collect()
    };
    (axis(|p| &p.x), axis(|p| &p.y))
}

fn push_triples(members: &[usize], out: &mut Vec<[usize; 3]>) {
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            for c in b + 1..members.len() {
                let mut t = [members[a], members[b], members[c]];
                t.sort_unstable();
                out.push(t);
            }
        }
    }
}

/// `⌈log₂ x⌉` for `x ≥ 1`: the smallest `s` with `2^s ≥ x`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1, "ceil_log2 of zero");
    if x == 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}
