use crate::cube::{BoolFn, TruthTable, MAX_EXPLICIT_DIM};
use crate::dist::{stable_sum, ExplicitDist};
use crate::error::{check_dim, Error, Result};

/// Product marginal on `{-1,+1}^d` with `Pr[x_i = +1] = p_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDistribution {
    p: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > 64 {
            return Err(Error::OutOfRange(format!("{} coordinates", p.len())));
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("probability {bad}")));
        }
        Ok(Self { p })
    }

    pub fn uniform(d: usize) -> Self {
        Self { p: vec![0.5; d] }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn is_uniform(&self) -> bool {
        self.p.iter().all(|&v| v == 0.5)
    }

    /// Dense masses indexed by point bits.
    pub fn masses(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        if d > MAX_EXPLICIT_DIM {
            return Err(Error::OutOfRange(format!("dense marginal for d = {d}")));
        }
        let mut m = vec![1.0f64];
        for &pi in &self.p {
            // Appending the `x_i = +1` half puts coordinate i at bit i.
            let mut next = Vec::with_capacity(m.len() * 2);
            next.extend(m.iter().map(|v| v * (1.0 - pi)));
            next.extend(m.iter().map(|v| v * pi));
            m = next;
        }
        Ok(m)
    }

    /// Explicit distribution with labels `y = f(x)`.
    pub fn labeled<F: BoolFn + ?Sized>(&self, f: &F) -> Result<ExplicitDist> {
        check_dim(self.dim(), f.dim())?;
        ExplicitDist::from_marginal(&self.masses()?, f)
    }
}

/// `{-1,+1}` values of `f` indexed by point bits.
pub fn signed_values(f: &TruthTable) -> Vec<f64> {
    (0..1u64 << f.dim())
        .map(|b| if f.get(b) { 1.0 } else { -1.0 })
        .collect()
}

/// Values of the signed coordinate `x_i`.
pub fn coordinate_values(d: usize, i: usize) -> Vec<f64> {
    (0..1u64 << d)
        .map(|b| if b >> i & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

fn check_lengths(mass: &[f64], a: &[f64]) -> Result<f64> {
    if a.len() != mass.len() {
        return Err(Error::DimMismatch {
            expected: mass.len(),
            found: a.len(),
        });
    }
    let w = stable_sum(mass.iter().copied());
    if w <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(w)
}

/// `Cov[a, b]` under the (possibly unnormalized) weights `mass`.
pub fn covariance(a: &[f64], b: &[f64], mass: &[f64]) -> Result<f64> {
    let w = check_lengths(mass, a)?;
    check_lengths(mass, b)?;
    let ea = stable_sum(a.iter().zip(mass).map(|(x, m)| x * m)) / w;
    let eb = stable_sum(b.iter().zip(mass).map(|(x, m)| x * m)) / w;
    Ok(stable_sum(
        a.iter()
            .zip(b)
            .zip(mass)
            .map(|((x, y), m)| (x - ea) * (y - eb) * m),
    ) / w)
}

pub fn variance(a: &[f64], mass: &[f64]) -> Result<f64> {
    covariance(a, a, mass)
}

/// `Inf_i(f) = 2 Pr[f(x) != f(x with x_i rerandomized)]` under `pd`.
pub fn influence(f: &TruthTable, pd: &ProductDistribution, i: usize) -> Result<f64> {
    check_dim(pd.dim(), f.dim())?;
    if i >= f.dim() {
        return Err(Error::OutOfRange(format!(
            "coordinate {i} in dim {}",
            f.dim()
        )));
    }
    let mass = pd.masses()?;
    let (p, q) = (pd.p[i], 1.0 - pd.p[i]);
    let flip = 1u64 << i;
    let terms = (0..1u64 << f.dim()).filter_map(|b| {
        if f.get(b) == f.get(b ^ flip) {
            return None;
        }
        // The rerandomized bit must land on the other side.
        let other = if b & flip != 0 { q } else { p };
        Some(mass[b as usize] * other)
    });
    Ok(2.0 * stable_sum(terms))
}

pub fn influences(f: &TruthTable, pd: &ProductDistribution) -> Result<Vec<f64>> {
    (0..f.dim()).map(|i| influence(f, pd, i)).collect()
}

/// `(Inf_i, Cov[f, x_i])` per coordinate, signed view; requires monotone `f`.
pub fn inf_cov_identity_check(f: &TruthTable, pd: &ProductDistribution) -> Result<Vec<(f64, f64)>> {
    check_dim(pd.dim(), f.dim())?;
    if !f.is_monotone() {
        return Err(Error::NotMonotone);
    }
    let mass = pd.masses()?;
    let fv = signed_values(f);
    (0..f.dim())
        .map(|i| {
            let inf = influence(f, pd, i)?;
            let cov = covariance(&fv, &coordinate_values(f.dim(), i), &mass)?;
            Ok((inf, cov))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{majority, projection};

    #[test]
    fn masses_follow_bit_order() {
        let pd = ProductDistribution::new(vec![0.3, 0.7]).unwrap();
        let m = pd.masses().unwrap();
        let expect = [0.7 * 0.3, 0.3 * 0.3, 0.7 * 0.7, 0.3 * 0.7];
        for (a, b) in m.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dictator_and_majority_influence() {
        let u = ProductDistribution::uniform(3);
        let dict = projection(0, 3).unwrap();
        assert_eq!(influence(&dict, &u, 0).unwrap(), 1.0);
        assert_eq!(influence(&dict, &u, 1).unwrap(), 0.0);
        let maj = majority(3, 3).unwrap();
        for i in 0..3 {
            assert!((influence(&maj, &u, i).unwrap() - 0.5).abs() < 1e-15);
        }
        let fixed = ProductDistribution::new(vec![1.0, 0.5, 0.5]).unwrap();
        assert_eq!(influence(&maj, &fixed, 0).unwrap(), 0.0);
    }

    #[test]
    fn majority_covariance_with_coordinate() {
        let u = ProductDistribution::uniform(3);
        let maj = majority(3, 3).unwrap();
        let c = covariance(
            &signed_values(&maj),
            &coordinate_values(3, 0),
            &u.masses().unwrap(),
        )
        .unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        let c01 = covariance(
            &coordinate_values(3, 0),
            &coordinate_values(3, 1),
            &u.masses().unwrap(),
        )
        .unwrap();
        assert_eq!(c01, 0.0);
    }

    #[test]
    fn identity_rejects_non_monotone() {
        let f = TruthTable::from_fn(2, |x| x.get(0) ^ x.get(1));
        assert_eq!(
            inf_cov_identity_check(&f, &ProductDistribution::uniform(2)),
            Err(Error::NotMonotone)
        );
    }
}
