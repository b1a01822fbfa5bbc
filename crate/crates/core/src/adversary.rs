//! The lower-bound instance: a downward convex chain on `y = −x²`, families of
//! block lines below dyadic runs of its vertices, replication, and padding.
//!
//! Line `(j, t, c)` is copy `c` of the `t`-th line of family `j`; it lies
//! strictly below chain vertices `v_{(t−1)2^j+1} .. v_{t·2^j}` and strictly
//! above all others.
//!
//! The primal point of a dual line is its paraboloid dual mirrored in the
//! x-axis. With the plain transform a line below a chain vertex `v` would
//! become a point *above* the primal line of `v`; the mirror turns every
//! conflict set into the set of points strictly below a primal line, which is
//! what makes chain vertices k-shallow lines.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    ceil_log2, dualize_line, dualize_point, frac, general_position_check, int, orient,
    side_of_line, Chain, Line, Point, Rational, Side, Turn,
};
use crate::levels::shallow_line_classes;
use crate::treecolor::slice_bound;

/// Largest instance on which the O(n²) general-position scan is run.
pub const GENERAL_POSITION_LIMIT: usize = 1500;
/// Largest padded point set validated by full class enumeration; larger
/// sets are validated with the depth certificate.
pub const PADDING_ENUMERATION_LIMIT: usize = 128;
pub const PADDING_RETRY_CAP: u32 = 6;
const EPS_HALVINGS: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    /// Family index: the line lies below `2^j` consecutive chain vertices.
    pub j: u32,
    /// 1-based block index within the family.
    pub t: u32,
    /// Copy index.
    pub c: u32,
}

impl Provenance {
    /// 1-based inclusive range of chain vertices the line lies below.
    pub fn block(&self) -> (usize, usize) {
        let w = 1usize << self.j;
        ((self.t as usize - 1) * w + 1, self.t as usize * w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceLine {
    pub line: Line,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdversaryInstance {
    pub m: usize,
    pub beta: u32,
    pub k: usize,
    pub k_prime: usize,
    pub chain: Chain,
    /// Shift used for the block lines after all retries.
    pub eps: Rational,
    pub lines: Vec<InstanceLine>,
    /// `points[i]` is the primal point of `lines[i]`.
    pub points: Vec<Point>,
    pub padding: Vec<Point>,
    pub padding_verified: bool,
    pub n_target: usize,
    pub checks: Vec<Check>,
}

impl AdversaryInstance {
    pub fn n_prime(&self) -> usize {
        self.lines.len()
    }

    /// Instance points followed by padding points.
    pub fn all_points(&self) -> Vec<Point> {
        self.points.iter().chain(&self.padding).cloned().collect()
    }

    pub fn dual_lines(&self) -> Vec<Line> {
        self.lines.iter().map(|l| l.line.clone()).collect()
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Indices of the lines strictly below chain vertex `i` (1-based).
    pub fn chain_conflict_set(&self, i: usize) -> Vec<usize> {
        let v = &self.chain.vertices()[i - 1];
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| side_of_line(&l.line, v) == Side::Above)
            .map(|(idx, _)| idx)
            .collect()
    }
}

/// Primal point of a dual line `y = a·x + b`: `(a/2, b)`.
pub fn primal_point(line: &Line) -> Point {
    dualize_line(line).mirror_y()
}

/// Primal line of a dual point `v`: `y = −2·v.x·x + v.y`.
pub fn primal_line(v: &Point) -> Line {
    dualize_point(v).mirror_y()
}

/// Largest `β ≥ 1` with `(2^{β+1} − 1)/(β + 1) ≤ n/(2k)`.
pub fn choose_beta(n: usize, k: usize) -> Result<u32> {
    if k == 0 {
        return Err(Error::ParameterRange("k must be at least 1".into()));
    }
    let fits = |beta: u32| -> bool {
        let lhs = ((1u128 << (beta + 1)) - 1) * 2 * k as u128;
        lhs <= n as u128 * (beta as u128 + 1)
    };
    if !fits(1) {
        return Err(Error::ParameterRange(format!(
            "no beta >= 1 with (2^(b+1)-1)/(b+1) <= n/2k for n={n}, k={k}"
        )));
    }
    let mut beta = 1;
    while beta < 120 && fits(beta + 1) {
        beta += 1;
    }
    Ok(beta)
}

/// `v_i = (i, −i²)` for `i = 1..=m`.
pub fn build_chain(m: usize) -> Result<Chain> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::ParameterRange(format!(
            "chain size must be a power of two >= 2, got {m}"
        )));
    }
    Chain::new(
        (1..=m as i64)
            .map(|i| Point::from_ints(i, -i * i))
            .collect(),
    )
}

/// A line strictly below `v_a..=v_b` (1-based) and strictly above all other
/// chain vertices: the chord through `v_a, v_b` (or the parabola tangent at
/// `v_a` when `a = b`) moved down by `eps`.
pub fn build_block_line(chain: &Chain, a: usize, b: usize, eps: &Rational) -> Result<Line> {
    block_line(chain, a, b, eps, true)
}

fn block_line(chain: &Chain, a: usize, b: usize, eps: &Rational, exhaustive: bool) -> Result<Line> {
    let m = chain.len();
    if a < 1 || a > b || b > m {
        return Err(Error::ParameterRange(format!(
            "block {a}..={b} outside chain of {m} vertices"
        )));
    }
    if *eps <= int(0) {
        return Err(Error::ParameterRange("eps must be positive".into()));
    }
    let va = &chain.vertices()[a - 1];
    let base = if a < b {
        Line::through(va, &chain.vertices()[b - 1]).expect("chain abscissae are distinct")
    } else {
        let slope = -(&va.x * int(2));
        let intercept = &va.y - &slope * &va.x;
        Line::new(slope, intercept)
    };
    let line = base.shifted_down(eps);
    if let Some(bad) = side_pattern_violation(chain, &line, a, b, exhaustive) {
        return Err(Error::EpsilonTooLarge {
            eps: eps.to_string(),
            detail: bad,
        });
    }
    Ok(line)
}

/// Checks that `line` is strictly below exactly `v_a..=v_b`. With
/// `exhaustive = false` only the four vertices at the ends of the run are
/// tested, which suffices because chain height minus a line is concave.
fn side_pattern_violation(
    chain: &Chain,
    line: &Line,
    a: usize,
    b: usize,
    exhaustive: bool,
) -> Option<String> {
    let m = chain.len();
    let probe: Vec<usize> = if exhaustive {
        (1..=m).collect()
    } else {
        let mut v = vec![a, b];
        if a > 1 {
            v.push(a - 1);
        }
        if b < m {
            v.push(b + 1);
        }
        v
    };
    for i in probe {
        let want = if (a..=b).contains(&i) {
            Side::Above
        } else {
            Side::Below
        };
        let got = side_of_line(line, &chain.vertices()[i - 1]);
        if got != want {
            return Some(format!(
                "vertex {i} is {got:?} line {line}, expected {want:?} (block {a}..={b})"
            ));
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Test every line against every chain vertex.
    pub exhaustive: bool,
    /// Run the general-position scan (skipped above
    /// [`GENERAL_POSITION_LIMIT`] lines regardless).
    pub general_position: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            exhaustive: true,
            general_position: true,
        }
    }
}

impl BuildOptions {
    /// Constant-time side checks and no general-position scan.
    pub fn fast() -> Self {
        BuildOptions {
            exhaustive: false,
            general_position: false,
        }
    }
}

pub fn build_instance(m: usize, k: usize) -> Result<AdversaryInstance> {
    build_instance_with(m, k, BuildOptions::default())
}

pub fn build_instance_with(m: usize, k: usize, opts: BuildOptions) -> Result<AdversaryInstance> {
    let chain = build_chain(m)?;
    let beta = m.trailing_zeros();
    let levels = beta as usize + 1;
    if k < levels {
        return Err(Error::ParameterRange(format!(
            "k={k} must be at least beta+1={levels}"
        )));
    }
    let k_prime = k / levels * levels;
    let copies = k_prime / levels;

    let mut provenance = Vec::new();
    for c in 0..copies {
        for j in 0..=beta {
            for t in 1..=(m >> j) {
                provenance.push(Provenance { j, t: t as u32, c: c as u32 });
            }
        }
    }
    for e in 0..k - k_prime {
        provenance.push(Provenance {
            j: beta,
            t: 1,
            c: (copies + e) as u32,
        });
    }

    let mut eps = frac(1, 8);
    let mut last_failure = String::new();
    for _ in 0..EPS_HALVINGS {
        match try_build(&chain, &provenance, &eps, opts) {
            Ok((lines, gp_check)) => {
                let mut inst = AdversaryInstance {
                    m,
                    beta,
                    k,
                    k_prime,
                    chain,
                    eps,
                    points: lines.iter().map(|l| primal_point(&l.line)).collect(),
                    lines,
                    padding: Vec::new(),
                    padding_verified: true,
                    n_target: 0,
                    checks: Vec::new(),
                };
                inst.n_target = inst.lines.len();
                inst.checks = instance_checks(&inst, opts, gp_check);
                return Ok(inst);
            }
            Err(msg) => {
                last_failure = msg;
                eps /= int(2);
            }
        }
    }
    Err(Error::DegenerateInput(format!(
        "no valid perturbation after {EPS_HALVINGS} halvings of eps: {last_failure}"
    )))
}

/// Builds and perturbs all lines for one value of `eps`. Line `g` gets slope
/// offset `eps/(2m(g+2))` and a further downward shift `eps/(g+3)`; the
/// total change at any chain abscissa stays below `eps/2`, which keeps every
/// side pattern while making all slopes distinct.
fn try_build(
    chain: &Chain,
    provenance: &[Provenance],
    eps: &Rational,
    opts: BuildOptions,
) -> std::result::Result<(Vec<InstanceLine>, Option<Check>), String> {
    let m = chain.len() as i64;
    let mut lines = Vec::with_capacity(provenance.len());
    for (g, p) in provenance.iter().enumerate() {
        let (a, b) = p.block();
        let base = block_line(chain, a, b, eps, opts.exhaustive).map_err(|e| e.to_string())?;
        let g = g as i64;
        let slope = &base.slope + eps * frac(1, 2 * m * (g + 2));
        let intercept = &base.intercept - eps * frac(1, g + 3);
        let line = Line::new(slope, intercept);
        if let Some(bad) = side_pattern_violation(chain, &line, a, b, opts.exhaustive) {
            return Err(bad);
        }
        lines.push(InstanceLine {
            line,
            provenance: *p,
        });
    }
    let gp = if opts.general_position && lines.len() <= GENERAL_POSITION_LIMIT {
        let pts: Vec<Point> = lines.iter().map(|l| primal_point(&l.line)).collect();
        let report = general_position_check(&pts);
        if !report.is_clean() {
            return Err(format!(
                "general position violated: {} shared abscissae, {} collinear triples",
                report.duplicate_x.len(),
                report.collinear.len()
            ));
        }
        Some(Check::new("general_position", true, "no shared abscissae or collinear triples"))
    } else {
        None
    };
    Ok((lines, gp))
}

fn instance_checks(inst: &AdversaryInstance, opts: BuildOptions, gp: Option<Check>) -> Vec<Check> {
    let m = inst.m;
    let levels = inst.beta as usize + 1;
    let mut checks = Vec::new();

    let expected = (2 * m - 1) * inst.k_prime / levels + (inst.k - inst.k_prime);
    checks.push(Check::new(
        "line_count",
        inst.lines.len() == expected,
        format!("{} lines, expected (2m-1)k'/(beta+1) + (k-k') = {expected}", inst.lines.len()),
    ));

    let copies = inst.k_prime / levels;
    let family_ok = (0..=inst.beta).all(|j| {
        let size = inst
            .lines
            .iter()
            .filter(|l| l.provenance.j == j && (l.provenance.c as usize) < copies)
            .count();
        size == copies * (m >> j)
    });
    checks.push(Check::new(
        "family_sizes",
        family_ok,
        format!("|L_j| = m/2^j for every family, {copies} copies of 2m-1 = {} lines", 2 * m - 1),
    ));

    let pattern_failures: Vec<String> = inst
        .lines
        .iter()
        .filter_map(|l| {
            let (a, b) = l.provenance.block();
            side_pattern_violation(&inst.chain, &l.line, a, b, opts.exhaustive)
        })
        .collect();
    checks.push(Check::new(
        "side_patterns",
        pattern_failures.is_empty(),
        if pattern_failures.is_empty() {
            if opts.exhaustive {
                "every line checked against every chain vertex".to_string()
            } else {
                "every line checked at the ends of its block".to_string()
            }
        } else {
            pattern_failures[0].clone()
        },
    ));

    let counts: Vec<usize> = if opts.exhaustive {
        (1..=m).map(|i| inst.chain_conflict_set(i).len()).collect()
    } else {
        let mut diff = vec![0i64; m + 2];
        for l in &inst.lines {
            let (a, b) = l.provenance.block();
            diff[a] += 1;
            diff[b + 1] -= 1;
        }
        let mut acc = 0i64;
        (1..=m)
            .map(|i| {
                acc += diff[i];
                acc as usize
            })
            .collect()
    };
    let bad: Vec<usize> = (1..=m).filter(|&i| counts[i - 1] != inst.k).collect();
    checks.push(Check::new(
        "chain_conflicts_exactly_k",
        bad.is_empty(),
        if bad.is_empty() {
            format!("all {m} chain vertices have exactly k={} lines below", inst.k)
        } else {
            format!("vertices {bad:?} have conflict sizes {:?}", bad.iter().map(|&i| counts[i - 1]).collect::<Vec<_>>())
        },
    ));

    let distinct = inst.lines.iter().map(|l| &l.line).collect::<HashSet<_>>().len() == inst.lines.len();
    checks.push(Check::new("lines_distinct", distinct, "no two instance lines coincide"));

    let round_trip = inst.lines.iter().all(|l| dualize_point(&dualize_line(&l.line)) == l.line);
    checks.push(Check::new("duality_round_trip", round_trip, "dualize_point(dualize_line(l)) = l"));

    let convex = inst
        .chain
        .vertices()
        .windows(3)
        .all(|w| orient(&w[0], &w[1], &w[2]) == Turn::Right);
    checks.push(Check::new("chain_convex", convex, "consecutive chain vertices turn right"));

    checks.push(gp.unwrap_or_else(|| {
        Check::new(
            "general_position",
            true,
            format!("skipped (scan disabled or more than {GENERAL_POSITION_LIMIT} lines)"),
        )
    }));
    checks
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingValidation {
    /// Nothing to pad.
    Empty,
    /// Every k-shallow class of the padded set was enumerated.
    ClassEnumeration,
    /// Exact counting argument: all padding lies above every instance point
    /// and strictly inside an abscissa gap with at least `k` instance points
    /// on each side, so any line with a padding point below it has those `k`
    /// points below it on its non-decreasing side.
    DepthCertificate,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Padding {
    pub points: Vec<Point>,
    pub verified: bool,
    pub method: PaddingValidation,
    pub attempts: u32,
    pub detail: String,
}

/// Adds `n − n′` points that no k-shallow line has below it: a tiny cup of
/// points high above the instance, inside the median abscissa gap.
pub fn pad_points(inst: &AdversaryInstance, n: usize) -> Result<Padding> {
    let n_prime = inst.points.len();
    if n < n_prime {
        return Err(Error::ParameterRange(format!(
            "target n={n} smaller than instance size {n_prime}"
        )));
    }
    let r = n - n_prime;
    if r == 0 {
        return Ok(Padding {
            points: Vec::new(),
            verified: true,
            method: PaddingValidation::Empty,
            attempts: 0,
            detail: "no padding needed".into(),
        });
    }
    let k = inst.k;

    let mut xs: Vec<&Rational> = inst.points.iter().map(|p| &p.x).collect();
    xs.sort();
    let left = n_prime / 2;
    if left < k || n_prime - left < k || left == 0 {
        return Err(Error::PaddingUnverifiable(Box::new(Padding {
            points: Vec::new(),
            verified: false,
            method: PaddingValidation::Failed,
            attempts: 0,
            detail: format!(
                "{n_prime} instance points cannot put k={k} on each side of the padding; \
                 the leftmost padding point would lie below a steep k-shallow line"
            ),
        })));
    }
    let x_c = (xs[left - 1] + xs[left]) / int(2);
    let half_gap = (xs[left] - xs[left - 1]) / int(2);
    let max_y = inst.points.iter().map(|p| &p.y).max().unwrap().clone();
    let min_y = inst.points.iter().map(|p| &p.y).min().unwrap().clone();
    let span = &max_y - &min_y + int(1);

    let mut detail = String::new();
    let mut scale = int(1);
    for attempt in 1..=PADDING_RETRY_CAP {
        let height = &max_y + &span * &scale;
        let width = &half_gap / &scale;
        let pads: Vec<Point> = (0..r as i64)
            .map(|j| {
                let u = frac(2 * j - (r as i64 - 1), 2 * r as i64);
                Point::new(&x_c + &width * &u, &height + &width * &u * &u)
            })
            .collect();
        let combined: Vec<Point> = inst.points.iter().chain(&pads).cloned().collect();

        let gp_ok = combined.len() > GENERAL_POSITION_LIMIT
            || general_position_check(&combined).is_clean();
        let (ok, method) = if !gp_ok {
            detail = format!("attempt {attempt}: padded set not in general position");
            (false, PaddingValidation::Failed)
        } else if combined.len() <= PADDING_ENUMERATION_LIMIT {
            let classes = shallow_line_classes(&combined, k as i64, &[])?;
            let offending = classes
                .iter()
                .find(|c| c.below_points.iter().any(|&i| i >= n_prime));
            match offending {
                Some(c) => {
                    detail = format!(
                        "attempt {attempt}: k-shallow line {} has padding below",
                        c.representative
                    );
                    (false, PaddingValidation::Failed)
                }
                None => (true, PaddingValidation::ClassEnumeration),
            }
        } else {
            let lo = &x_c - &width / int(2);
            let hi = &x_c + &width / int(2);
            let left_count = inst.points.iter().filter(|p| p.x < lo).count();
            let right_count = inst.points.iter().filter(|p| p.x > hi).count();
            let above = pads.iter().all(|q| q.y > max_y && q.x > lo && q.x < hi);
            if left_count >= k && right_count >= k && above {
                (true, PaddingValidation::DepthCertificate)
            } else {
                detail = format!(
                    "attempt {attempt}: certificate failed ({left_count} left, {right_count} right, k={k})"
                );
                (false, PaddingValidation::Failed)
            }
        };
        if ok {
            return Ok(Padding {
                points: pads,
                verified: true,
                method,
                attempts: attempt,
                detail: format!("{r} padding points verified"),
            });
        }
        scale *= int(4);
    }
    Err(Error::PaddingUnverifiable(Box::new(Padding {
        points: Vec::new(),
        verified: false,
        method: PaddingValidation::Failed,
        attempts: PADDING_RETRY_CAP,
        detail,
    })))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub n: usize,
    pub k: usize,
    pub beta: u32,
    pub m: usize,
    pub k_prime: usize,
    pub n_prime: usize,
    pub padding: usize,
    pub crossing_lower_bound: usize,
    pub checks: Vec<Check>,
}

impl ConstructionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReportOptions {
    pub build: BuildOptions,
    pub pad: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            build: BuildOptions::default(),
            pad: true,
        }
    }
}

/// Parameter arithmetic plus construction for a target `(n, k)` with
/// `⌈log₂ n⌉ ≤ k ≤ ⌊n/4⌋`. Padding failures are recorded as a failed check
/// (and the instance keeps its unverified padding) rather than returned as
/// an error.
pub fn instance_report(
    n: usize,
    k: usize,
    opts: ReportOptions,
) -> Result<(AdversaryInstance, ConstructionReport)> {
    if n < 4 {
        return Err(Error::ParameterRange(format!("n={n} too small")));
    }
    let log_n = ceil_log2(n as u64) as usize;
    if k < log_n || k > n / 4 {
        return Err(Error::ParameterRange(format!(
            "k={k} outside [ceil(log2 n), floor(n/4)] = [{log_n}, {}] for n={n}",
            n / 4
        )));
    }
    let beta = choose_beta(n, k)?;
    let m = 1usize << beta;
    let mut inst = build_instance_with(m, k, opts.build)?;
    inst.n_target = n;
    let n_prime = inst.n_prime();

    let mut checks = inst.checks.clone();
    checks.push(Check::new(
        "n_prime_at_least_n_over_8",
        8 * n_prime >= n,
        format!("n' = {n_prime}, n/8 = {}", n as f64 / 8.0),
    ));
    checks.push(Check::new(
        "n_prime_at_most_n",
        n_prime <= n,
        format!("n' = {n_prime}, n = {n}"),
    ));
    checks.push(Check::new(
        "m_at_least_n_over_9k",
        9 * k * m >= n,
        format!("m = {m}, n/(9k) = {:.4}", n as f64 / (9 * k) as f64),
    ));

    if opts.pad && n_prime <= n {
        let padding = match pad_points(&inst, n) {
            Ok(p) => p,
            Err(Error::PaddingUnverifiable(p)) => *p,
            Err(e) => return Err(e),
        };
        let pad_count = n - n_prime;
        checks.push(Check::new(
            "padding_at_most_7n_over_8",
            8 * pad_count <= 7 * n,
            format!("{pad_count} padding points, 7n/8 = {}", 7.0 * n as f64 / 8.0),
        ));
        checks.push(Check::new(
            "padding_verified",
            padding.verified,
            format!("{:?}: {}", padding.method, padding.detail),
        ));
        inst.padding_verified = padding.verified;
        inst.padding = padding.points;
    }

    inst.checks = checks.clone();
    let report = ConstructionReport {
        n,
        k,
        beta,
        m,
        k_prime: inst.k_prime,
        n_prime,
        padding: inst.padding.len(),
        crossing_lower_bound: slice_bound(beta).saturating_sub(1),
        checks,
    };
    Ok((inst, report))
}
