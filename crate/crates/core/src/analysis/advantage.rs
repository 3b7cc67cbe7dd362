use crate::cube::{Restriction, MAX_EXPLICIT_DIM};
use crate::dist::{Constraint, LabeledDistribution};
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::{Hypothesis, HypothesisClass};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvantageOptions {
    /// Condition only on coordinate restrictions, even for non-projection classes.
    pub restrictions_only: bool,
    /// Longest conjunction enumerated for general classes.
    pub depth_cap: usize,
    /// Largest number of induced distributions visited.
    pub cap: u64,
}

impl Default for AdvantageOptions {
    fn default() -> Self {
        Self {
            restrictions_only: true,
            depth_cap: 3,
            cap: 3u64.pow(16),
        }
    }
}

/// Where the minimum is attained.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Restriction(Restriction),
    Path(Vec<(usize, bool)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdvantageReport {
    /// `min` over nondegenerate induced distributions of `max_h |Cov| / Var`;
    /// 1 when the label is constant on every induced distribution.
    pub gamma: f64,
    pub witness: Option<Witness>,
    /// Ratio per induced distribution in enumeration order; NaN where the
    /// distribution has zero weight or zero label variance.
    pub ratios: Vec<f64>,
}

/// Restriction at position `idx` of the lexicographic order over
/// `{-1, +1, *}^d` with coordinate 0 most significant.
pub fn restriction_from_index(d: usize, mut idx: u64) -> Restriction {
    let mut vals = vec![None; d];
    for i in (0..d).rev() {
        vals[i] = match idx % 3 {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        };
        idx /= 3;
    }
    Restriction::from_values(&vals)
}

/// Exact weak-learning advantage of `class` for `dist`.
pub fn weak_learning_advantage(
    dist: &LabeledDistribution,
    class: &HypothesisClass,
    opts: AdvantageOptions,
) -> Result<AdvantageReport> {
    dist.as_explicit()?;
    check_dim(class.dim(), dist.dim())?;
    if class.is_empty() {
        return Err(Error::EmptyHypothesisClass);
    }
    if opts.restrictions_only || class.is_projection_class() {
        restriction_sweep(dist, class, opts.cap)
    } else {
        conjunction_sweep(dist, class, opts)
    }
}

/// Weight of digit position of coordinate `i` (coordinate 0 most significant).
fn place(d: usize, i: usize) -> u64 {
    3u64.pow((d - 1 - i) as u32)
}

/// Sums a dense table over points into all `3^d` sub-cubes.
fn subcube_sums(d: usize, base: &[f64]) -> Vec<f64> {
    let n = 3usize.pow(d as u32);
    let mut t = vec![0.0; n];
    let mut digits = vec![0u8; d];
    for idx in 0..n {
        if idx > 0 {
            // Increment the base-3 counter; digits[0] is the most significant.
            let mut j = d;
            loop {
                j -= 1;
                digits[j] += 1;
                if digits[j] < 3 {
                    break;
                }
                digits[j] = 0;
            }
        }
        let star = (0..d).rev().find(|&j| digits[j] == 2);
        let v = match star {
            Some(j) => {
                let w = place(d, j) as usize;
                t[idx - 2 * w] + t[idx - w]
            }
            None => {
                let mut bits = 0usize;
                for (j, &dg) in digits.iter().enumerate() {
                    bits |= (dg as usize) << j;
                }
                base[bits]
            }
        };
        t[idx] = v;
    }
    t
}

fn restriction_sweep(
    dist: &LabeledDistribution,
    class: &HypothesisClass,
    cap: u64,
) -> Result<AdvantageReport> {
    let d = dist.dim();
    if d > MAX_EXPLICIT_DIM {
        return Err(Error::OutOfRange(format!("restriction sweep for d = {d}")));
    }
    let count = 3u64.checked_pow(d as u32).unwrap_or(u64::MAX);
    if count > cap {
        return Err(Error::ExplosionGuard { count, cap });
    }
    let n = count as usize;
    let mut pos = vec![0.0; 1 << d];
    let mut neg = vec![0.0; 1 << d];
    for i in 0..dist.cell_count() {
        let (a, b) = dist.masses(i);
        let x = dist.point(i).bits() as usize;
        neg[x] += a;
        pos[x] += b;
    }
    let y = subcube_sums(d, &pos);
    let no = subcube_sums(d, &neg);
    let mut best = vec![0.0f64; n];

    let mut proj_done = vec![false; d];
    for h in class.iter() {
        match h {
            Hypothesis::Projection(i) if !proj_done[*i] => {
                proj_done[*i] = true;
                let w = place(d, *i) as usize;
                for idx in 0..n {
                    if (idx / w) % 3 != 2 {
                        continue;
                    }
                    let tot = y[idx] + no[idx];
                    if y[idx] == 0.0 || no[idx] == 0.0 {
                        continue;
                    }
                    let mu = y[idx] / tot;
                    let c = idx - w;
                    let (y1, w1) = (y[c], y[c] + no[c]);
                    let cov = y1 / tot - (w1 / tot) * mu;
                    let r = cov.abs() / (mu * (1.0 - mu));
                    if r > best[idx] {
                        best[idx] = r;
                    }
                }
            }
            Hypothesis::Projection(_) => {}
            Hypothesis::Table(t) => {
                let hp: Vec<f64> = (0..1usize << d)
                    .map(|x| if t.get(x as u64) { pos[x] } else { 0.0 })
                    .collect();
                let hw: Vec<f64> = (0..1usize << d)
                    .map(|x| {
                        if t.get(x as u64) {
                            pos[x] + neg[x]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let hy = subcube_sums(d, &hp);
                let hm = subcube_sums(d, &hw);
                for idx in 0..n {
                    if y[idx] == 0.0 || no[idx] == 0.0 {
                        continue;
                    }
                    let tot = y[idx] + no[idx];
                    let mu = y[idx] / tot;
                    let cov = hy[idx] / tot - (hm[idx] / tot) * mu;
                    let r = cov.abs() / (mu * (1.0 - mu));
                    if r > best[idx] {
                        best[idx] = r;
                    }
                }
            }
        }
    }

    let mut gamma = 1.0f64;
    let mut witness = None;
    let mut ratios = vec![f64::NAN; n];
    for idx in 0..n {
        if y[idx] == 0.0 || no[idx] == 0.0 {
            continue;
        }
        let r = best[idx].min(1.0);
        ratios[idx] = r;
        if witness.is_none() || r < gamma {
            gamma = r;
            witness = Some(idx);
        }
    }
    Ok(AdvantageReport {
        gamma,
        witness: witness.map(|i| Witness::Restriction(restriction_from_index(d, i as u64))),
        ratios,
    })
}

fn conjunction_sweep(
    dist: &LabeledDistribution,
    class: &HypothesisClass,
    opts: AdvantageOptions,
) -> Result<AdvantageReport> {
    let m = class.len();
    let mut visited = 0u64;
    let mut gamma = 1.0f64;
    let mut witness: Option<Vec<(usize, bool)>> = None;
    let mut ratios = Vec::new();
    // Depth-first over conjunctions with strictly increasing hypothesis index.
    let mut stack: Vec<(usize, Vec<(usize, bool)>)> = vec![(0, Vec::new())];
    while let Some((next, path)) = stack.pop() {
        visited += 1;
        if visited > opts.cap {
            return Err(Error::ExplosionGuard {
                count: visited,
                cap: opts.cap,
            });
        }
        let constraints: Vec<Constraint> = path
            .iter()
            .map(|&(h, b)| Constraint::new(class.get(h).expect("index").clone(), b))
            .collect();
        let view = crate::dist::condition(dist, &constraints)?;
        let (neg, pos) = view.raw_masses();
        let mut r = f64::NAN;
        if neg > 0.0 && pos > 0.0 {
            let mu = pos / (neg + pos);
            let var = mu * (1.0 - mu);
            let mut best = 0.0f64;
            for h in class.iter() {
                let cov = crate::impurity::split_covariance(&view, h)?;
                best = best.max(cov.abs() / var);
            }
            r = best.min(1.0);
            if witness.is_none() || r < gamma {
                gamma = r;
                witness = Some(path.clone());
            }
        }
        ratios.push(r);
        if path.len() < opts.depth_cap && neg + pos > 0.0 {
            for h in (next..m).rev() {
                for b in [true, false] {
                    let mut p = path.clone();
                    p.push((h, b));
                    stack.push((h + 1, p));
                }
            }
        }
    }
    Ok(AdvantageReport {
        gamma,
        witness: witness.map(Witness::Path),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::TruthTable;
    use crate::dist::ExplicitDist;

    fn uniform(f: &TruthTable) -> LabeledDistribution {
        ExplicitDist::uniform_with(f).unwrap().into()
    }

    #[test]
    fn lexicographic_index() {
        assert_eq!(restriction_from_index(2, 0).to_string(), "--");
        assert_eq!(restriction_from_index(2, 1).to_string(), "-+");
        assert_eq!(restriction_from_index(2, 2).to_string(), "-*");
        assert_eq!(restriction_from_index(2, 8).to_string(), "**");
    }

    #[test]
    fn dictator_has_full_advantage() {
        let d = uniform(&TruthTable::from_fn(3, |x| x.get(0)));
        let r = weak_learning_advantage(&d, &HypothesisClass::projections(3), Default::default())
            .unwrap();
        assert_eq!(r.gamma, 1.0);
    }

    #[test]
    fn parity_has_none() {
        let d = uniform(&TruthTable::from_fn(2, |x| x.get(0) ^ x.get(1)));
        let r = weak_learning_advantage(&d, &HypothesisClass::projections(2), Default::default())
            .unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(
            r.witness,
            Some(Witness::Restriction(Restriction::parse("**").unwrap()))
        );
    }

    #[test]
    fn or_of_two() {
        let d = uniform(&TruthTable::from_fn(3, |x| x.get(0) || x.get(1)));
        let r = weak_learning_advantage(&d, &HypothesisClass::projections(3), Default::default())
            .unwrap();
        // Root: Cov = 1/8, Var = 3/16.
        assert!((r.gamma - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn conjunction_sweep_agrees_on_projections() {
        let f = TruthTable::from_fn(3, |x| (x.get(0) && x.get(1)) || x.get(2));
        let d = uniform(&f);
        let class = HypothesisClass::projections(3);
        let a = weak_learning_advantage(&d, &class, Default::default()).unwrap();
        let b = conjunction_sweep(
            &d,
            &class,
            AdvantageOptions {
                restrictions_only: false,
                depth_cap: 3,
                cap: 1 << 20,
            },
        )
        .unwrap();
        assert!((a.gamma - b.gamma).abs() < 1e-15);
    }

    #[test]
    fn explosion_guard() {
        let d = uniform(&TruthTable::from_fn(4, |x| x.get(0)));
        let opts = AdvantageOptions {
            cap: 10,
            ..Default::default()
        };
        assert!(matches!(
            weak_learning_advantage(&d, &HypothesisClass::projections(4), opts),
            Err(Error::ExplosionGuard { .. })
        ));
    }
}
