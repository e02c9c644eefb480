//! Square lattices over complex slices and the text formats they are
//! written in.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::error::{Error, Result};

/// Stored in place of -inf; such cells also carry a pole flag.
pub const SENTINEL: f64 = -1.0e300;

/// The complex line {base + w * direction : w in [-extent, extent]^2},
/// cut into resolution^2 cells. Cell (i, j) has parameter
/// (-extent + (i + 1/2) h) + i (-extent + (j + 1/2) h).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceSpec {
    base: CVec,
    direction: CVec,
    extent: f64,
    resolution: usize,
}

impl SliceSpec {
    pub fn new(base: CVec, direction: CVec, extent: f64, resolution: usize) -> Result<Self> {
        base.check_dim(direction.dim())?;
        let norm = direction.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("slice direction must be nonzero".into()));
        }
        if resolution < 16 {
            return Err(Error::InvalidArgument(format!("resolution {resolution} below 16")));
        }
        if !(extent > 0.0) {
            return Err(Error::InvalidArgument("slice extent must be positive".into()));
        }
        let direction = direction.scale(C64::new(1.0 / norm, 0.0));
        Ok(SliceSpec { base, direction, extent, resolution })
    }

    /// The plane C itself, centered at 0.
    pub fn plane(extent: f64, resolution: usize) -> Result<Self> {
        Self::new(CVec::zeros(1), CVec::new(vec![C64::new(1.0, 0.0)])?, extent, resolution)
    }

    pub fn base(&self) -> &CVec {
        &self.base
    }

    pub fn direction(&self) -> &CVec {
        &self.direction
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.extent / self.resolution as f64
    }

    pub fn cells(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn param(&self, i: usize, j: usize) -> C64 {
        let h = self.cell_size();
        C64::new(-self.extent + (i as f64 + 0.5) * h, -self.extent + (j as f64 + 0.5) * h)
    }

    pub fn param_of_index(&self, idx: usize) -> C64 {
        self.param(idx % self.resolution, idx / self.resolution)
    }

    pub fn point_at(&self, w: C64) -> CVec {
        let mut p = self.base.clone();
        for (x, d) in p.iter_mut().zip(self.direction.iter()) {
            *x += w * d;
        }
        p
    }

    pub fn point(&self, i: usize, j: usize) -> CVec {
        self.point_at(self.param(i, j))
    }

    /// Continuous cell coordinates of a parameter (cell centers are integers).
    pub fn locate(&self, w: C64) -> (f64, f64) {
        let h = self.cell_size();
        ((w.re + self.extent) / h - 0.5, (w.im + self.extent) / h - 0.5)
    }

    pub fn same_as(&self, other: &SliceSpec) -> bool {
        self == other
    }
}

/// Real values on the cells of a slice; -inf is stored as SENTINEL with a
/// pole flag and skipped by averaging operations.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    slice: SliceSpec,
    values: Vec<f64>,
    pole: Vec<bool>,
}

impl GridField {
    pub fn new(slice: SliceSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != slice.cells() {
            return Err(Error::Dimension { expected: slice.cells(), got: values.len() });
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidArgument("grid values must be finite or -inf".into()));
        }
        let pole: Vec<bool> = values.iter().map(|v| *v == f64::NEG_INFINITY || *v <= SENTINEL).collect();
        let values = values.into_iter().zip(&pole).map(|(v, &p)| if p { SENTINEL } else { v }).collect();
        Ok(GridField { slice, values, pole })
    }

    pub fn constant(slice: SliceSpec, c: f64) -> Self {
        let cells = slice.cells();
        GridField::new(slice, vec![c; cells]).expect("finite constant")
    }

    /// Samples f at every cell's point of C^n, in parallel.
    pub fn from_fn<F>(slice: SliceSpec, f: F) -> Self
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        let values: Vec<f64> =
            (0..slice.cells()).into_par_iter().map(|idx| f(&slice.point_at(slice.param_of_index(idx)))).collect();
        GridField::new(slice, values).expect("sampled field must not be NaN")
    }

    /// Samples a function of the slice parameter.
    pub fn from_param_fn<F>(slice: SliceSpec, f: F) -> Self
    where
        F: Fn(C64) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..slice.cells()).into_par_iter().map(|idx| f(slice.param_of_index(idx))).collect();
        GridField::new(slice, values).expect("sampled field must not be NaN")
    }

    pub fn slice(&self) -> &SliceSpec {
        &self.slice
    }

    pub fn resolution(&self) -> usize {
        self.slice.resolution
    }

    pub fn cell_size(&self) -> f64 {
        self.slice.cell_size()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.slice.index(i, j)]
    }

    /// Value with poles reported as -inf.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let idx = self.slice.index(i, j);
        if self.pole[idx] {
            f64::NEG_INFINITY
        } else {
            self.values[idx]
        }
    }

    pub fn is_pole(&self, i: usize, j: usize) -> bool {
        self.pole[self.slice.index(i, j)]
    }

    pub fn poles(&self) -> &[bool] {
        &self.pole
    }

    pub fn pole_count(&self) -> usize {
        self.pole.iter().filter(|p| **p).count()
    }

    /// Cellwise values with -inf restored, for callers that want plain floats.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().zip(&self.pole).map(|(v, p)| if *p { f64::NEG_INFINITY } else { *v }).collect()
    }

    /// Bilinear interpolation between cell centers, clamped at the edge.
    /// Returns -inf when any of the four cells is a pole.
    pub fn interpolate(&self, w: C64) -> f64 {
        let res = self.resolution();
        let (x, y) = self.slice.locate(w);
        let x = x.clamp(0.0, (res - 1) as f64);
        let y = y.clamp(0.0, (res - 1) as f64);
        let i0 = (x.floor() as usize).min(res - 2);
        let j0 = (y.floor() as usize).min(res - 2);
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        let mut acc = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                if self.is_pole(i0 + di, j0 + dj) {
                    return f64::NEG_INFINITY;
                }
                acc += wx * wy * self.get(i0 + di, j0 + dj);
            }
        }
        acc
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        let vals = self.to_vec().into_iter().map(f).collect();
        GridField::new(self.slice.clone(), vals).expect("mapped field must stay finite or -inf")
    }
}

/// Fixed-width text rendering of a float that round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY || v <= SENTINEL {
        "-inf".to_string()
    } else {
        format!("{v:.17e}")
    }
}

fn fmt_cvec(z: &CVec) -> String {
    z.iter().map(|c| format!("{} {}", fmt_f64(c.re), fmt_f64(c.im))).collect::<Vec<_>>().join(" ")
}

/// CSV with a four-line header: base point, direction, extent and
/// resolution, then the column names. One row per cell, row-major in j.
pub fn field_csv(field: &GridField, extra: Option<(&str, &[String])>) -> String {
    let s = field.slice();
    let mut out = String::new();
    let _ = writeln!(out, "# base {}", fmt_cvec(s.base()));
    let _ = writeln!(out, "# direction {}", fmt_cvec(s.direction()));
    let _ =
        writeln!(out, "# extent {} resolution {} cell {}", fmt_f64(s.extent()), s.resolution(), fmt_f64(s.cell_size()));
    match extra {
        Some((name, _)) => {
            let _ = writeln!(out, "re,im,value,{name}");
        }
        None => {
            let _ = writeln!(out, "re,im,value");
        }
    }
    for idx in 0..s.cells() {
        let w = s.param_of_index(idx);
        let v = if field.poles()[idx] { "-inf".to_string() } else { fmt_f64(field.values()[idx]) };
        match extra {
            Some((_, col)) => {
                let _ = writeln!(out, "{},{},{},{}", fmt_f64(w.re), fmt_f64(w.im), v, col[idx]);
            }
            None => {
                let _ = writeln!(out, "{},{},{}", fmt_f64(w.re), fmt_f64(w.im), v);
            }
        }
    }
    out
}

/// Parses what `field_csv` writes (extra columns are ignored).
pub fn parse_field_csv(text: &str) -> Result<GridField> {
    let mut lines = text.lines();
    let mut header = |tag: &str, line: usize| -> Result<Vec<f64>> {
        let l = lines.next().ok_or(Error::Parse { line, msg: "truncated header".into() })?;
        let rest = l
            .strip_prefix("# ")
            .and_then(|r| r.strip_prefix(tag))
            .ok_or(Error::Parse { line, msg: format!("expected '# {tag}'") })?;
        rest.split_whitespace()
            .filter(|t| t.parse::<f64>().is_ok() || *t == "-inf")
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line, msg: "bad number".into() }))
            .collect()
    };
    let base = header("base", 1)?;
    let dir = header("direction", 2)?;
    let geo = header("extent", 3)?;
    if geo.len() != 3 {
        return Err(Error::Parse { line: 3, msg: "expected extent, resolution and cell".into() });
    }
    let slice = SliceSpec::new(CVec::from_reals(&base)?, CVec::from_reals(&dir)?, geo[0], geo[1] as usize)?;
    let _columns = lines.next();
    let mut values = Vec::with_capacity(slice.cells());
    for (k, l) in lines.enumerate() {
        let v = l.split(',').nth(2).ok_or(Error::Parse { line: k + 5, msg: "missing value column".into() })?;
        let v = if v == "-inf" {
            f64::NEG_INFINITY
        } else {
            v.parse().map_err(|_| Error::Parse { line: k + 5, msg: format!("bad value {v:?}") })?
        };
        values.push(v);
    }
    GridField::new(slice, values)
}

/// Plain (ASCII) 8-bit PGM; rows are written top to bottom, so the
/// largest imaginary part comes first.
pub fn pgm(values: &[f64], res: usize, to_gray: impl Fn(f64) -> u8) -> String {
    let mut out = format!("P2\n{res} {res}\n255\n");
    for j in (0..res).rev() {
        let row: Vec<String> = (0..res).map(|i| to_gray(values[j * res + i]).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Gray level from log(1 + v) scaled to the field maximum; poles are black.
pub fn log_scaled_pgm(field: &GridField) -> String {
    let top = field
        .values()
        .iter()
        .zip(field.poles())
        .filter(|(_, p)| !**p)
        .map(|(v, _)| v.max(0.0).ln_1p())
        .fold(0.0, f64::max);
    let vals = field.to_vec();
    pgm(&vals, field.resolution(), |v| {
        if !v.is_finite() || top == 0.0 {
            0
        } else {
            (255.0 * v.max(0.0).ln_1p() / top).round().clamp(0.0, 255.0) as u8
        }
    })
}

/// Linear gray level between the field's finite min and max.
pub fn linear_pgm(field: &GridField) -> String {
    let finite: Vec<f64> = field.values().iter().zip(field.poles()).filter(|(_, p)| !**p).map(|(v, _)| *v).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vals = field.to_vec();
    pgm(&vals, field.resolution(), |v| {
        if !v.is_finite() || !(hi > lo) {
            0
        } else {
            (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
        }
    })
}

pub fn mask_pgm(mask: &[bool], res: usize) -> String {
    let vals: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    pgm(&vals, res, |v| if v > 0.5 { 255 } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_poles() {
        let s = SliceSpec::plane(1.0, 16).unwrap();
        let f = GridField::from_param_fn(s, |w| if w.norm() < 0.1 { f64::NEG_INFINITY } else { w.re });
        assert!(f.pole_count() > 0);
        let back = parse_field_csv(&field_csv(&f, None)).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn interpolation_is_exact_on_affine_fields() {
        let s = SliceSpec::plane(1.0, 32).unwrap();
        let f = GridField::from_param_fn(s, |w| 2.0 * w.re - w.im + 0.5);
        let w = C64::new(0.123, -0.456);
        assert!((f.interpolate(w) - (2.0 * w.re - w.im + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn pgm_has_expected_shape() {
        let s = SliceSpec::plane(1.0, 16).unwrap();
        let f = GridField::from_param_fn(s, |w| w.norm());
        let img = linear_pgm(&f);
        let lines: Vec<&str> = img.lines().collect();
        assert_eq!(lines[1], "16 16");
        assert_eq!(lines.len(), 3 + 16);
    }
}
