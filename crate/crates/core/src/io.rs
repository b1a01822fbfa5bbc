//! JSON file formats. Rationals are written as `"num/den"` strings.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    build_chain, primal_point, AdversaryInstance, Check, InstanceLine, Provenance,
};
use crate::error::{Error, Result};
use crate::geom::{rational_serde, Line, Point, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRecord {
    #[serde(with = "rational_serde")]
    pub slope: Rational,
    #[serde(with = "rational_serde")]
    pub intercept: Rational,
    pub j: u32,
    pub t: u32,
    pub c: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub beta: u32,
    pub k: usize,
    pub k_prime: usize,
    pub n_target: usize,
    #[serde(with = "rational_serde")]
    pub eps: Rational,
    pub lines: Vec<LineRecord>,
    pub points: Vec<Point>,
    pub padding: Vec<Point>,
    pub padding_verified: bool,
    pub checks: Vec<Check>,
}

impl From<&AdversaryInstance> for InstanceFile {
    fn from(inst: &AdversaryInstance) -> Self {
        InstanceFile {
            m: inst.m,
            beta: inst.beta,
            k: inst.k,
            k_prime: inst.k_prime,
            n_target: inst.n_target,
            eps: inst.eps.clone(),
            lines: inst
                .lines
                .iter()
                .map(|l| LineRecord {
                    slope: l.line.slope.clone(),
                    intercept: l.line.intercept.clone(),
                    j: l.provenance.j,
                    t: l.provenance.t,
                    c: l.provenance.c,
                })
                .collect(),
            points: inst.points.clone(),
            padding: inst.padding.clone(),
            padding_verified: inst.padding_verified,
            checks: inst.checks.clone(),
        }
    }
}

impl InstanceFile {
    /// Rebuilds the instance, checking that the stored points are the primal
    /// points of the stored lines and that every provenance fits the chain.
    pub fn into_instance(self) -> Result<AdversaryInstance> {
        let chain = build_chain(self.m)?;
        if self.beta != self.m.trailing_zeros() {
            return Err(Error::InvalidInput(format!("beta={} does not match m={}", self.beta, self.m)));
        }
        if self.points.len() != self.lines.len() {
            return Err(Error::InvalidInput(format!(
                "{} points for {} lines",
                self.points.len(),
                self.lines.len()
            )));
        }
        let mut lines = Vec::with_capacity(self.lines.len());
        for (i, r) in self.lines.into_iter().enumerate() {
            let provenance = Provenance { j: r.j, t: r.t, c: r.c };
            if r.j > self.beta || r.t == 0 || r.t as usize > self.m >> r.j {
                return Err(Error::InvalidInput(format!("line {i} has provenance {provenance:?} outside the tree")));
            }
            let line = Line::new(r.slope, r.intercept);
            if primal_point(&line) != self.points[i] {
                return Err(Error::InvalidInput(format!("point {i} is not the primal point of line {i}")));
            }
            lines.push(InstanceLine { line, provenance });
        }
        Ok(AdversaryInstance {
            m: self.m,
            beta: self.beta,
            k: self.k,
            k_prime: self.k_prime,
            chain,
            eps: self.eps,
            lines,
            points: self.points,
            padding: self.padding,
            padding_verified: self.padding_verified,
            n_target: self.n_target,
            checks: self.checks,
        })
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize to JSON");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(value))
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<AdversaryInstance> {
    read_json::<InstanceFile>(path)?.into_instance()
}

pub fn write_instance(path: impl AsRef<Path>, inst: &AdversaryInstance) -> Result<()> {
    write_json(path, &InstanceFile::from(inst))
}
