use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::dist::{stable_sum, LabeledDistribution};
use crate::error::{check_dim, Error, Result};

/// Slack for floating comparisons in the TV inequalities.
pub const TV_TOL: f64 = 1e-12;

/// Half-L1 distance between two labeled distributions over `(point, label)`.
pub fn tv_distance(a: &LabeledDistribution, b: &LabeledDistribution) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let mut cells: BTreeMap<u64, [f64; 4]> = BTreeMap::new();
    for (k, dist) in [a, b].into_iter().enumerate() {
        let total = dist.total();
        for i in 0..dist.cell_count() {
            let (n, p) = dist.masses(i);
            let e = cells.entry(dist.point(i).bits()).or_default();
            e[2 * k] += n / total;
            e[2 * k + 1] += p / total;
        }
    }
    Ok(0.5
        * stable_sum(
            cells
                .values()
                .map(|c| (c[0] - c[2]).abs() + (c[1] - c[3]).abs()),
        ))
}

/// Half-L1 distance between two mass vectors on one finite domain.
pub fn tv_marginal(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(0.5 * stable_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvMomentReport {
    pub eta: f64,
    /// `|E_1[f] - E_2[f]|`.
    pub d_mean: f64,
    /// `|Var_1[f] - Var_2[f]|`.
    pub d_var: f64,
    /// `|Cov_1[f,g] - Cov_2[f,g]|`.
    pub d_cov: f64,
    pub pass: bool,
}

impl TvMomentReport {
    /// Smallest of the three slacks `eta - |dE|`, `eta - |dVar|`, `2 eta - |dCov|`.
    pub fn min_slack(&self) -> f64 {
        (self.eta - self.d_mean)
            .min(self.eta - self.d_var)
            .min(2.0 * self.eta - self.d_cov)
    }
}

fn moments(m: &[f64], f: &[f64], g: &[f64]) -> (f64, f64, f64) {
    let ef = stable_sum(m.iter().zip(f).map(|(p, x)| p * x));
    let eg = stable_sum(m.iter().zip(g).map(|(p, x)| p * x));
    let var = stable_sum(m.iter().zip(f).map(|(p, x)| p * (x - ef) * (x - ef)));
    let cov = stable_sum(
        m.iter()
            .zip(f.iter().zip(g))
            .map(|(p, (x, y))| p * (x - ef) * (y - eg)),
    );
    (ef, var, cov)
}

/// Moment gaps between two distributions on one finite domain, for
/// `f, g` valued in `[0,1]`, against `eta = dtv(m1, m2)`.
pub fn tv_moment_bounds_check(
    m1: &[f64],
    m2: &[f64],
    f: &[f64],
    g: &[f64],
) -> Result<TvMomentReport> {
    let n = m1.len();
    for v in [m2, f, g] {
        if v.len() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    for m in [m1, m2] {
        let s = stable_sum(m.iter().copied());
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::NonNormalized { sum: s });
        }
    }
    if f.iter().chain(g).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutOfRange("test functions must lie in [0,1]".into()));
    }
    let eta = tv_marginal(m1, m2)?;
    let (e1, v1, c1) = moments(m1, f, g);
    let (e2, v2, c2) = moments(m2, f, g);
    let (d_mean, d_var, d_cov) = ((e1 - e2).abs(), (v1 - v2).abs(), (c1 - c2).abs());
    Ok(TvMomentReport {
        eta,
        d_mean,
        d_var,
        d_cov,
        pass: d_mean <= eta + TV_TOL && d_var <= eta + TV_TOL && d_cov <= 2.0 * eta + TV_TOL,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafTvReport {
    /// `E_{l ~ D}[dtv(D_{x|l}, D'_{x|l})]`.
    pub lhs: BigRational,
    /// `2 dtv(D, D')` over leaves x points.
    pub rhs: BigRational,
    pub pass: bool,
}

impl LeafTvReport {
    pub fn lhs_f64(&self) -> f64 {
        self.lhs.to_f64().unwrap_or(f64::NAN)
    }

    pub fn rhs_f64(&self) -> f64 {
        self.rhs.to_f64().unwrap_or(f64::NAN)
    }
}

fn normalized(j: &[Vec<BigRational>]) -> Result<Vec<Vec<BigRational>>> {
    let total: BigRational = j.iter().flatten().sum();
    if total.is_zero() {
        return Err(Error::ZeroWeight);
    }
    if j.iter().flatten().any(|v| v.is_negative()) {
        return Err(Error::OutOfRange("negative joint mass".into()));
    }
    Ok(j.iter()
        .map(|row| row.iter().map(|v| v / &total).collect())
        .collect())
}

/// Exact leaf-conditional TV check on joints indexed `[leaf][point]`.
/// Joints are normalized first. Leaves outside `j1`'s support contribute 0;
/// a leaf with mass only under `j1` counts as distance 1.
pub fn leaf_tv_check(j1: &[Vec<BigRational>], j2: &[Vec<BigRational>]) -> Result<LeafTvReport> {
    if j1.len() != j2.len() {
        return Err(Error::DimMismatch {
            expected: j1.len(),
            found: j2.len(),
        });
    }
    for (a, b) in j1.iter().zip(j2) {
        if a.len() != b.len() {
            return Err(Error::DimMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
    }
    let (a, b) = (normalized(j1)?, normalized(j2)?);
    let half = BigRational::new(1.into(), 2.into());
    let mut lhs = BigRational::zero();
    let mut rhs = BigRational::zero();
    for (ra, rb) in a.iter().zip(&b) {
        let wa: BigRational = ra.iter().sum();
        let wb: BigRational = rb.iter().sum();
        for (x, y) in ra.iter().zip(rb) {
            rhs += (x - y).abs();
        }
        if wa.is_zero() {
            continue;
        }
        if wb.is_zero() {
            lhs += wa;
            continue;
        }
        let dist: BigRational = ra
            .iter()
            .zip(rb)
            .map(|(x, y)| (x / &wa - y / &wb).abs())
            .sum::<BigRational>()
            * &half;
        lhs += wa * dist;
    }
    let pass = lhs <= rhs;
    Ok(LeafTvReport { lhs, rhs, pass })
}

/// [`leaf_tv_check`] on floating joints, each converted exactly.
pub fn leaf_tv_check_f64(j1: &[Vec<f64>], j2: &[Vec<f64>]) -> Result<LeafTvReport> {
    let conv = |j: &[Vec<f64>]| -> Result<Vec<Vec<BigRational>>> {
        j.iter()
            .map(|row| {
                row.iter()
                    .map(|&v| {
                        BigRational::from_float(v)
                            .ok_or_else(|| Error::OutOfRange(format!("mass {v}")))
                    })
                    .collect()
            })
            .collect()
    };
    leaf_tv_check(&conv(j1)?, &conv(j2)?)
}
