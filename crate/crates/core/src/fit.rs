//! Least-squares fit of the straight-insertion force model
//! `F_i(L) = F_p + C * L`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StraightInsertionFit {
    pub piercing_force: f64,
    pub c_friction: f64,
    pub r_squared: f64,
    /// `None` with fewer than three points.
    pub adjusted_r_squared: Option<f64>,
    /// Set when the fitted intercept is negative, which is unphysical.
    pub negative_piercing_force: bool,
    pub points: usize,
}

/// Ordinary least squares of force against depth.
pub fn fit_straight_insertion(data: &[(f64, f64)]) -> Result<StraightInsertionFit> {
    if data.iter().any(|(d, f)| !d.is_finite() || !f.is_finite()) {
        return Err(Error::NonFinite("insertion data"));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::RankDeficient(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mean_x = data.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = data.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in data {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let spread = data.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if sxx <= (f64::EPSILON * spread).powi(2) * nf {
        return Err(Error::RankDeficient("all depths are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = data
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let adjusted_r_squared =
        (n > 2).then(|| 1.0 - (1.0 - r_squared) * (nf - 1.0) / (nf - 2.0));
    Ok(StraightInsertionFit {
        piercing_force: intercept,
        c_friction: slope,
        r_squared,
        adjusted_r_squared,
        negative_piercing_force: intercept < 0.0,
        points: n,
    })
}

/// Parses the `depth_m,force_N` CSV form.
pub fn parse_insertion_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "depth_m,force_N" => {}
        _ => {
            return Err(Error::Parse {
                path: "header".into(),
                message: "expected `depth_m,force_N`".into(),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let bad = |what: &str| Error::Parse {
                path: format!("line {}", i + 1),
                message: format!("{what}: `{line}`"),
            };
            let mut cols = line.split(',').map(str::trim);
            let (Some(d), Some(f), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected two columns"));
            };
            let d = d.parse::<f64>().map_err(|_| bad("bad depth"))?;
            let f = f.parse::<f64>().map_err(|_| bad("bad force"))?;
            Ok((d, f))
        })
        .collect()
}
