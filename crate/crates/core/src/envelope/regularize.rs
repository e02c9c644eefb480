//! Upper regularization on grids and the limit checks built on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridField;

/// Cellwise max over the (2w+1)^2 window, clipped at the grid edge. Poles
/// count as -inf, so an isolated pole takes its neighbors' max.
pub fn usc_regularize(g: &GridField, w: usize) -> GridField {
    let res = g.resolution();
    let vals = g.values();
    // separable: rows first, then columns
    let mut rows = vec![0.0; vals.len()];
    for j in 0..res {
        for i in 0..res {
            let (lo, hi) = (i.saturating_sub(w), (i + w).min(res - 1));
            rows[j * res + i] = vals[j * res + lo..=j * res + hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![0.0; vals.len()];
    for j in 0..res {
        let (lo, hi) = (j.saturating_sub(w), (j + w).min(res - 1));
        for i in 0..res {
            out[j * res + i] = (lo..=hi).map(|jj| rows[jj * res + i]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    GridField::new(g.slice().clone(), out).expect("max of valid values")
}

fn check_family(fields: &[GridField]) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    if fields.iter().any(|f| !f.slice().same_as(first.slice())) {
        return Err(Error::SliceMismatch);
    }
    Ok(())
}

fn cellwise_max(fields: &[GridField]) -> GridField {
    let mut vals = fields[0].values().to_vec();
    for f in &fields[1..] {
        for (a, b) in vals.iter_mut().zip(f.values()) {
            *a = a.max(*b);
        }
    }
    GridField::new(fields[0].slice().clone(), vals).expect("max of valid values")
}

/// Upper regularization of the cellwise supremum of a family.
pub fn sup_star_family(fields: &[GridField], w: usize) -> Result<GridField> {
    check_family(fields)?;
    Ok(usc_regularize(&cellwise_max(fields), w))
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    #[serde(skip)]
    pub mask: Vec<bool>,
    pub defect_cells: usize,
    pub region_cells: usize,
    pub fraction: f64,
    pub tol: f64,
}

/// Cells where the regularized limsup exceeds the limsup by more than tol.
/// The limsup is the cellwise max over the second half of the sequence.
/// The fraction is taken over `region` when given, else over all cells.
pub fn limsup_defect(fields: &[GridField], w: usize, tol: f64, region: Option<&[bool]>) -> Result<DefectReport> {
    if fields.len() < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 fields, got {}", fields.len())));
    }
    check_family(fields)?;
    let limsup = cellwise_max(&fields[fields.len() / 2..]);
    let star = usc_regularize(&limsup, w);
    let mask: Vec<bool> = star
        .to_vec()
        .iter()
        .zip(limsup.to_vec())
        .map(|(s, l)| s - l > tol || (l == f64::NEG_INFINITY && s.is_finite()))
        .collect();
    let cells = mask.len();
    let (defect_cells, region_cells) = match region {
        Some(r) => {
            if r.len() != cells {
                return Err(Error::Dimension { expected: cells, got: r.len() });
            }
            (mask.iter().zip(r).filter(|(m, r)| **m && **r).count(), r.iter().filter(|r| **r).count())
        }
        None => (mask.iter().filter(|m| **m).count(), cells),
    };
    let fraction = if region_cells == 0 { 0.0 } else { defect_cells as f64 / region_cells as f64 };
    Ok(DefectReport { mask, defect_cells, region_cells, fraction, tol })
}

/// Mask grown by `r` cells in the Chebyshev metric.
pub fn dilate(mask: &[bool], res: usize, r: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for j in 0..res {
        for i in 0..res {
            if !mask[j * res + i] {
                continue;
            }
            for jj in j.saturating_sub(r)..=(j + r).min(res - 1) {
                for ii in i.saturating_sub(r)..=(i + r).min(res - 1) {
                    out[jj * res + ii] = true;
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct HartogsReport {
    /// First index from which every field stays below f + eps on the
    /// checked cells; None if the last field still violates.
    pub n0: Option<usize>,
    pub checked_cells: usize,
    /// Per field, the fraction of checked cells within the bound.
    pub ok_fraction: Vec<f64>,
    /// Cells over the bound in the last field.
    pub violating: Vec<usize>,
}

/// Looks for n0 with fields[n] <= f + eps on (K dilated by `dilation`
/// cells) intersected with S, for all n >= n0. E must be nowhere dense in
/// K: every K cell needs a K cell outside E within two cells.
pub fn hartogs_bound_check(
    fields: &[GridField],
    k_mask: &[bool],
    s_mask: &[bool],
    e_mask: &[bool],
    f: &[f64],
    eps: f64,
    dilation: usize,
) -> Result<HartogsReport> {
    check_family(fields)?;
    let res = fields[0].resolution();
    let cells = res * res;
    for m in [k_mask, s_mask, e_mask] {
        if m.len() != cells {
            return Err(Error::Dimension { expected: cells, got: m.len() });
        }
    }
    if f.len() != cells {
        return Err(Error::Dimension { expected: cells, got: f.len() });
    }
    let good: Vec<bool> = k_mask.iter().zip(e_mask).map(|(k, e)| *k && !*e).collect();
    let near_good = dilate(&good, res, 2);
    if k_mask.iter().zip(&near_good).any(|(k, g)| *k && !*g) {
        return Err(Error::Precondition("E is not nowhere dense in K".into()));
    }
    let check: Vec<usize> = dilate(k_mask, res, dilation)
        .iter()
        .zip(s_mask)
        .enumerate()
        .filter(|(_, (v, s))| **v && **s)
        .map(|(k, _)| k)
        .collect();
    let over =
        |g: &GridField| -> Vec<usize> { check.iter().copied().filter(|&k| g.values()[k] > f[k] + eps).collect() };
    let mut ok_fraction = Vec::with_capacity(fields.len());
    let mut n0 = Some(0);
    let mut violating = Vec::new();
    for (n, g) in fields.iter().enumerate() {
        violating = over(g);
        ok_fraction.push(if check.is_empty() { 1.0 } else { 1.0 - violating.len() as f64 / check.len() as f64 });
        if !violating.is_empty() {
            n0 = (n + 1 < fields.len()).then_some(n + 1);
        }
    }
    Ok(HartogsReport { n0, checked_cells: check.len(), ok_fraction, violating })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SliceSpec;

    #[test]
    fn isolated_pole_is_filled() {
        let s = SliceSpec::plane(1.0, 16).unwrap();
        let mut v = vec![1.0; 256];
        v[5 * 16 + 5] = f64::NEG_INFINITY;
        let g = GridField::new(s, v).unwrap();
        assert_eq!(g.pole_count(), 1);
        let r = usc_regularize(&g, 1);
        assert_eq!(r.pole_count(), 0);
        assert_eq!(r.get(5, 5), 1.0);
    }
}
