//! Plain-text partition descriptors.
//!
//! ```text
//! # comment lines start with '#'
//! domain rectangle <width> <height>      (or: circle <circumference> | torus <width> <height>)
//! subdomains <k>
//! subdomain <id> arc <start> <length>
//! subdomain <id> region <x_min> <x_max> <y_min> <y_max> <area>
//! interfaces <m>
//! interface <id> <adjacent0> <adjacent1> <nu_sign> point <n>
//! interface <id> <adjacent0> <adjacent1> <nu_sign> open <start> <end> <n>
//! interface <id> <adjacent0> <adjacent1> <nu_sign> closed <period> <n>
//! <parameter> <x> <y>                   (n rows per interface)
//! ```
//!
//! Quadrature weights are not stored; they are recomputed from the node
//! parameters and the curve kind.

use std::fmt::Write as _;

use super::{CurveKind, Domain, Interface, Partition, Subdomain, SubdomainShape};
use crate::error::{Error, Result};

pub fn write_partition(p: &Partition) -> String {
    let mut out = String::new();
    out.push_str("# equipart partition v1\n");
    match p.domain {
        Domain::Circle { circumference } => writeln!(out, "domain circle {circumference}"),
        Domain::Rectangle { width, height } => writeln!(out, "domain rectangle {width} {height}"),
        Domain::Torus { width, height } => writeln!(out, "domain torus {width} {height}"),
    }
    .unwrap();
    writeln!(out, "subdomains {}", p.subdomains.len()).unwrap();
    for s in &p.subdomains {
        match s.shape {
            SubdomainShape::Arc { start, length } => {
                writeln!(out, "subdomain {} arc {start} {length}", s.id)
            }
            SubdomainShape::Region {
                x_min,
                x_max,
                y_min,
                y_max,
                area,
            } => writeln!(out, "subdomain {} region {x_min} {x_max} {y_min} {y_max} {area}", s.id),
        }
        .unwrap();
    }
    writeln!(out, "interfaces {}", p.interfaces.len()).unwrap();
    for i in &p.interfaces {
        let kind = match i.kind {
            CurveKind::Point => "point".to_string(),
            CurveKind::Open { start, end } => format!("open {start} {end}"),
            CurveKind::Closed { period } => format!("closed {period}"),
        };
        writeln!(
            out,
            "interface {} {} {} {} {kind} {}",
            i.id,
            i.adjacent[0],
            i.adjacent[1],
            i.nu_sign,
            i.nodes.len()
        )
        .unwrap();
        for n in &i.nodes {
            writeln!(out, "{} {} {}", n.parameter, n.x, n.y).unwrap();
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_record(&mut self) -> Result<Vec<&'a str>> {
        for (i, raw) in self.inner.by_ref() {
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Ok(text.split_whitespace().collect());
        }
        Err(Error::Parse {
            line: self.line + 1,
            message: "unexpected end of input".into(),
        })
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn expect(&mut self, keyword: &str, arity: usize) -> Result<Vec<&'a str>> {
        let rec = self.next_record()?;
        if rec.first() != Some(&keyword) {
            return Err(self.err(format!("expected '{keyword}'")));
        }
        if rec.len() < arity + 1 {
            return Err(self.err(format!("'{keyword}' needs {arity} fields")));
        }
        Ok(rec[1..].to_vec())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid number '{s}'")))
    }
}

pub fn read_partition(text: &str) -> Result<Partition> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let d = lines.expect("domain", 2)?;
    let domain = match d[0] {
        "circle" => Domain::Circle {
            circumference: lines.num(d[1])?,
        },
        "rectangle" | "torus" => {
            if d.len() < 3 {
                return Err(lines.err("domain needs width and height"));
            }
            let (width, height) = (lines.num(d[1])?, lines.num(d[2])?);
            if d[0] == "rectangle" {
                Domain::Rectangle { width, height }
            } else {
                Domain::Torus { width, height }
            }
        }
        other => return Err(lines.err(format!("unknown domain '{other}'"))),
    };

    let k: usize = {
        let r = lines.expect("subdomains", 1)?;
        lines.num(r[0])?
    };
    let mut subdomains = Vec::with_capacity(k);
    for _ in 0..k {
        let r = lines.expect("subdomain", 2)?;
        let id = lines.num(r[0])?;
        let shape = match r[1] {
            "arc" if r.len() >= 4 => SubdomainShape::Arc {
                start: lines.num(r[2])?,
                length: lines.num(r[3])?,
            },
            "region" if r.len() >= 7 => SubdomainShape::Region {
                x_min: lines.num(r[2])?,
                x_max: lines.num(r[3])?,
                y_min: lines.num(r[4])?,
                y_max: lines.num(r[5])?,
                area: lines.num(r[6])?,
            },
            _ => return Err(lines.err("malformed subdomain record")),
        };
        subdomains.push(Subdomain { id, shape });
    }

    let m: usize = {
        let r = lines.expect("interfaces", 1)?;
        lines.num(r[0])?
    };
    let mut interfaces = Vec::with_capacity(m);
    for _ in 0..m {
        let r = lines.expect("interface", 6)?;
        let id = lines.num(r[0])?;
        let adjacent = [lines.num(r[1])?, lines.num(r[2])?];
        let nu_sign: i8 = lines.num(r[3])?;
        let (kind, rest) = match r[4] {
            "point" => (CurveKind::Point, &r[5..]),
            "open" if r.len() >= 8 => (
                CurveKind::Open {
                    start: lines.num(r[5])?,
                    end: lines.num(r[6])?,
                },
                &r[7..],
            ),
            "closed" if r.len() >= 7 => (
                CurveKind::Closed {
                    period: lines.num(r[5])?,
                },
                &r[6..],
            ),
            _ => return Err(lines.err("malformed interface record")),
        };
        let n: usize = lines.num(rest[0])?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let row = lines.next_record()?;
            if row.len() != 3 {
                return Err(lines.err("node rows have three columns: parameter x y"));
            }
            samples.push((lines.num(row[0])?, lines.num(row[1])?, lines.num(row[2])?));
        }
        interfaces.push(Interface::new(id, adjacent, nu_sign, kind, &samples));
    }
    Partition::new(domain, subdomains, interfaces)
}
