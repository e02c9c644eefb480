//! Text format for polynomial automorphisms. See docs/map-format.md.
//!
//! ```text
//! label = henon
//! dim = 2
//! lambda1 = 2
//! [forward 1]
//! 2 0   1.0 0.0
//! 0 1   0.3 0.0
//! [forward 2]
//! 1 0   1.0 0.0
//! [backward 1]
//! 0 1   1.0 0.0
//! [backward 2]
//! 1 0   3.3333333333333335 0.0
//! 0 2  -3.3333333333333335 0.0
//! ```

use std::fmt::Write as _;

use crate::cvec::C64;
use crate::error::{Error, Result};
use crate::poly::{Direction, Poly, PolyMap};

type Term = (Vec<u32>, C64);

pub fn parse_map(text: &str) -> Result<PolyMap> {
    let mut label = String::from("unnamed");
    let mut dim: Option<usize> = None;
    let mut lambda1: Option<f64> = None;
    let mut lambda1_backward: Option<f64> = None;
    let mut sections: Vec<(Direction, usize, Vec<Term>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| err("unclosed section header".into()))?;
            let mut parts = inner.split_whitespace();
            let dir = match parts.next() {
                Some("forward") => Direction::Forward,
                Some("backward") => Direction::Backward,
                other => return Err(err(format!("unknown section {other:?}"))),
            };
            let k: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| err("section needs a coordinate index >= 1".into()))?;
            if sections.iter().any(|(d, j, _)| *d == dir && *j == k) {
                return Err(err(format!("duplicate section [{} {k}]", dir_name(dir))));
            }
            sections.push((dir, k, Vec::new()));
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            let num = || value.parse::<f64>().map_err(|_| err(format!("bad number {value:?}")));
            match key.trim() {
                "label" => label = value.to_string(),
                "dim" => dim = Some(value.parse().map_err(|_| err(format!("bad dim {value:?}")))?),
                "lambda1" => lambda1 = Some(num()?),
                "lambda1_backward" => lambda1_backward = Some(num()?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
            continue;
        }
        let n = dim.ok_or_else(|| err("dim must be declared before terms".into()))?;
        let section = sections.last_mut().ok_or_else(|| err("term outside a section".into()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n + 2 {
            return Err(err(format!("expected {} exponents and 2 coefficients, got {} fields", n, fields.len())));
        }
        let exps = fields[..n]
            .iter()
            .map(|s| s.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| err("exponents must be nonnegative integers".into()))?;
        let re: f64 = fields[n].parse().map_err(|_| err(format!("bad coefficient {:?}", fields[n])))?;
        let im: f64 = fields[n + 1].parse().map_err(|_| err(format!("bad coefficient {:?}", fields[n + 1])))?;
        section.2.push((exps, C64::new(re, im)));
    }

    let n = dim.ok_or(Error::Parse { line: 0, msg: "missing dim".into() })?;
    let lambda1 = lambda1.ok_or(Error::Parse { line: 0, msg: "missing lambda1".into() })?;
    let mut forward = vec![None; n];
    let mut backward = vec![None; n];
    for (dir, k, terms) in sections {
        if k > n {
            return Err(Error::Parse { line: 0, msg: format!("coordinate {k} exceeds dim {n}") });
        }
        let slot = match dir {
            Direction::Forward => &mut forward[k - 1],
            Direction::Backward => &mut backward[k - 1],
        };
        *slot = Some(Poly::new(n, terms)?);
    }
    let collect = |v: Vec<Option<Poly>>, dir: Direction| -> Result<Vec<Poly>> {
        v.into_iter()
            .enumerate()
            .map(|(k, p)| {
                p.ok_or(Error::Parse { line: 0, msg: format!("missing section [{} {}]", dir_name(dir), k + 1) })
            })
            .collect()
    };
    let map =
        PolyMap::new(collect(forward, Direction::Forward)?, collect(backward, Direction::Backward)?, lambda1, &label)?;
    match lambda1_backward {
        Some(l) => map.with_lambda1_backward(l),
        None => Ok(map),
    }
}

pub fn write_map(map: &PolyMap) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "label = {}", map.label());
    let _ = writeln!(s, "dim = {}", map.dim());
    let _ = writeln!(s, "lambda1 = {}", map.lambda1());
    if map.lambda(Direction::Backward) != map.lambda1() {
        let _ = writeln!(s, "lambda1_backward = {}", map.lambda(Direction::Backward));
    }
    for dir in [Direction::Forward, Direction::Backward] {
        for (k, p) in map.components(dir).iter().enumerate() {
            let _ = writeln!(s, "[{} {}]", dir_name(dir), k + 1);
            for (e, c) in p.terms() {
                let exps: Vec<String> = e.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "{} {:?} {:?}", exps.join(" "), c.re, c.im);
            }
        }
    }
    s
}

fn dir_name(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Backward => "backward",
    }
}
