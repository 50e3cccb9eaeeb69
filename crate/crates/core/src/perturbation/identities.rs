//! Exact integer checks of the third-order hopping-string identities.
//!
//! Each left side is a literal sum of six-operator strings
//! `b†_· b_· b†_· b_· b†_· b_·` over the stated site exclusions; each right
//! side is a polynomial in the total number operator `N̂` times `b†_l b_i`
//! (open and closed-loop hops) or `n_i` (closed loops).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IdentityName {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    V1,
    V2,
    V3,
    TC1,
    TC2,
    TC3,
}

impl IdentityName {
    pub const ALL: [IdentityName; 12] = [
        Self::T1,
        Self::T2,
        Self::T3,
        Self::T4,
        Self::T5,
        Self::T6,
        Self::V1,
        Self::V2,
        Self::V3,
        Self::TC1,
        Self::TC2,
        Self::TC3,
    ];

    pub fn min_sites(self) -> usize {
        match self {
            Self::T1 | Self::T2 | Self::T3 | Self::T4 | Self::T5 | Self::T6 => 4,
            _ => 3,
        }
    }

    fn is_loop(self) -> bool {
        matches!(self, Self::V1 | Self::V2 | Self::V3)
    }
}

impl std::fmt::Display for IdentityName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for IdentityName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown identity {s:?}")))
    }
}

/// Deviation of one identity (or equality between two left sides) on one
/// particle-number sector, maximized over all site labels `(l, i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_name: String,
    pub n_sites: usize,
    pub particle_number: usize,
    pub max_abs_deviation: i64,
    pub exact: bool,
}

#[derive(Clone, Copy, Debug)]
enum Ladder {
    Create(usize),
    Annihilate(usize),
}

use Ladder::{Annihilate as B, Create as Bd};

/// Matrix of a product of hard-core-boson ladder operators (leftmost acts last).
fn string_matrix(n_sites: usize, ops: &[Ladder]) -> Matrix<i64> {
    let dim = 1usize << n_sites;
    let mut m = Matrix::zeros(dim, dim);
    for col in 0..dim {
        let mut state = Some(col);
        for op in ops.iter().rev() {
            state = state.and_then(|s| match *op {
                Bd(k) if s >> k & 1 == 0 => Some(s | 1 << k),
                B(k) if s >> k & 1 == 1 => Some(s & !(1 << k)),
                _ => None,
            });
        }
        if let Some(row) = state {
            m[(row, col)] += 1;
        }
    }
    m
}

fn sum_strings(n_sites: usize, strings: impl Iterator<Item = Vec<Ladder>>) -> Matrix<i64> {
    let dim = 1usize << n_sites;
    let mut acc = Matrix::zeros(dim, dim);
    for s in strings {
        acc = acc.try_add(&string_matrix(n_sites, &s)).expect("equal dimensions");
    }
    acc
}

/// Ordered pairs `(j, k)` with `j ≠ k` and both outside `excluded`.
fn distinct_pairs(n: usize, excluded: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in (0..n).filter(|j| !excluded.contains(j)) {
        for k in (0..n).filter(|k| *k != j && !excluded.contains(k)) {
            out.push((j, k));
        }
    }
    out
}

/// Left side for hop labels `(l, i)`; for the closed loops `l` is ignored.
fn raw_side(name: IdentityName, n: usize, l: usize, i: usize) -> Matrix<i64> {
    use IdentityName::*;
    match name {
        T1 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(l), B(k), Bd(k), B(j), Bd(j), B(i)])),
        T2 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(j), B(i), Bd(l), B(k), Bd(k), B(j)])),
        T3 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(l), B(k), Bd(j), B(i), Bd(k), B(j)])),
        T4 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(k), B(j), Bd(j), B(i), Bd(l), B(k)])),
        T5 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(k), B(j), Bd(l), B(k), Bd(j), B(i)])),
        T6 => sum_strings(n, distinct_pairs(n, &[i, l]).into_iter().map(|(j, k)| vec![Bd(j), B(i), Bd(k), B(j), Bd(l), B(k)])),
        V1 => sum_strings(n, distinct_pairs(n, &[i]).into_iter().map(|(j, k)| vec![Bd(i), B(k), Bd(k), B(j), Bd(j), B(i)])),
        V2 => sum_strings(n, distinct_pairs(n, &[i]).into_iter().map(|(j, k)| vec![Bd(i), B(k), Bd(j), B(i), Bd(k), B(j)])),
        V3 => sum_strings(n, distinct_pairs(n, &[i]).into_iter().map(|(j, k)| vec![Bd(k), B(j), Bd(i), B(k), Bd(j), B(i)])),
        TC1 => sum_strings(n, (0..n).filter(|j| *j != i && *j != l).map(|j| vec![Bd(l), B(i), Bd(i), B(j), Bd(j), B(i)])),
        TC2 => sum_strings(n, (0..n).filter(|k| *k != i && *k != l).map(|k| vec![Bd(l), B(k), Bd(k), B(l), Bd(l), B(i)])),
        TC3 => string_matrix(n, &[Bd(l), B(i), Bd(i), B(l), Bd(l), B(i)]),
    }
}

/// `c − N̂` as a diagonal matrix.
fn shifted_total(n: usize, c: i64) -> Matrix<i64> {
    Matrix::diagonal(&(0..1usize << n).map(|s| c - s.count_ones() as i64).collect::<Vec<_>>())
}

fn product(ms: &[Matrix<i64>]) -> Matrix<i64> {
    ms.iter()
        .skip(1)
        .fold(ms[0].clone(), |acc, m| acc.try_matmul(m).expect("square factors"))
}

/// Right side in closed form.
fn closed_side(name: IdentityName, n: usize, l: usize, i: usize) -> Matrix<i64> {
    use IdentityName::*;
    let nn = n as i64;
    let hop = string_matrix(n, &[Bd(l), B(i)]);
    let number = string_matrix(n, &[Bd(i), B(i)]);
    // N̂ − c = −(c − N̂)
    let minus = |c: i64| shifted_total(n, c).scale(&-1);
    match name {
        T1 => product(&[shifted_total(n, nn - 1), shifted_total(n, nn - 2), hop]),
        T2 | T3 | T4 | T5 => product(&[minus(1), shifted_total(n, nn - 1), hop]),
        T6 => product(&[minus(1), minus(2), hop]),
        V1 => product(&[shifted_total(n, nn), shifted_total(n, nn - 1), number]),
        V2 | V3 => product(&[minus(1), shifted_total(n, nn), number]),
        TC1 | TC2 => product(&[shifted_total(n, nn - 1), hop]),
        TC3 => hop,
    }
}

fn label_pairs(name: IdentityName, n: usize) -> Vec<(usize, usize)> {
    if name.is_loop() {
        (0..n).map(|i| (i, i)).collect()
    } else {
        (0..n).flat_map(|l| (0..n).filter(move |i| *i != l).map(move |i| (l, i))).collect()
    }
}

/// Per-sector maximum of `|a − b|` over columns with the given particle number.
fn sector_deviation(a: &Matrix<i64>, b: &Matrix<i64>, particles: usize) -> i64 {
    let mut worst = 0;
    for col in (0..a.cols()).filter(|c| c.count_ones() as usize == particles) {
        for row in 0..a.rows() {
            worst = worst.max((a[(row, col)] - b[(row, col)]).abs());
        }
    }
    worst
}

fn reports(label: String, n: usize, sides: &[(Matrix<i64>, Matrix<i64>)]) -> Vec<IdentityReport> {
    (0..=n)
        .map(|particles| {
            let dev = sides
                .iter()
                .map(|(a, b)| sector_deviation(a, b, particles))
                .max()
                .unwrap_or(0);
            IdentityReport {
                identity_name: label.clone(),
                n_sites: n,
                particle_number: particles,
                max_abs_deviation: dev,
                exact: dev == 0,
            }
        })
        .collect()
}

/// Checks one identity on an `N`-site lattice: one report per particle-number sector.
pub fn operator_identity(name: IdentityName, n_sites: usize) -> Result<Vec<IdentityReport>> {
    if n_sites < name.min_sites() {
        return Err(Error::InvalidArgument(format!(
            "{name} needs at least {} sites, got {n_sites}",
            name.min_sites()
        )));
    }
    if n_sites > 10 {
        return Err(Error::InvalidArgument("identity checks are limited to 10 sites".into()));
    }
    let sides: Vec<_> = label_pairs(name, n_sites)
        .into_iter()
        .map(|(l, i)| (raw_side(name, n_sites, l, i), closed_side(name, n_sites, l, i)))
        .collect();
    Ok(reports(name.to_string(), n_sites, &sides))
}

/// The equalities between left sides: T3 = T2, T4 = T2, T5 = T4, V3 = V2, TC2 = TC1.
pub const LEFT_SIDE_EQUALITIES: [(IdentityName, IdentityName); 5] = [
    (IdentityName::T3, IdentityName::T2),
    (IdentityName::T4, IdentityName::T2),
    (IdentityName::T5, IdentityName::T4),
    (IdentityName::V3, IdentityName::V2),
    (IdentityName::TC2, IdentityName::TC1),
];

pub fn operator_equality(a: IdentityName, b: IdentityName, n_sites: usize) -> Result<Vec<IdentityReport>> {
    let min = a.min_sites().max(b.min_sites());
    if n_sites < min || a.is_loop() != b.is_loop() {
        return Err(Error::InvalidArgument(format!("cannot compare {a} and {b} on {n_sites} sites")));
    }
    let sides: Vec<_> = label_pairs(a, n_sites)
        .into_iter()
        .map(|(l, i)| (raw_side(a, n_sites, l, i), raw_side(b, n_sites, l, i)))
        .collect();
    Ok(reports(format!("{a}={b}"), n_sites, &sides))
}

/// Every identity and left-side equality on one lattice size.
pub fn all_identity_reports(n_sites: usize) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for name in IdentityName::ALL {
        out.extend(operator_identity(name, n_sites)?);
    }
    for (a, b) in LEFT_SIDE_EQUALITIES {
        out.extend(operator_equality(a, b, n_sites)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_strings_are_hcb() {
        // b b† + b† b = 1 on one site, b² = 0.
        let anti = string_matrix(1, &[B(0), Bd(0)])
            .try_add(&string_matrix(1, &[Bd(0), B(0)]))
            .unwrap();
        assert_eq!(anti, Matrix::identity(2));
        assert!(string_matrix(1, &[B(0), B(0)]).is_zero());
    }

    #[test]
    fn t1_on_four_sites() {
        let r = operator_identity(IdentityName::T1, 4).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|x| x.exact));
    }

    #[test]
    fn v1_on_three_sites() {
        assert!(operator_identity(IdentityName::V1, 3).unwrap().iter().all(|x| x.exact));
    }

    #[test]
    fn tc3_on_four_sites() {
        assert!(operator_identity(IdentityName::TC3, 4).unwrap().iter().all(|x| x.exact));
    }

    #[test]
    fn all_identities_four_and_five_sites() {
        for n in [4, 5] {
            let r = all_identity_reports(n).unwrap();
            assert_eq!(r.len(), 17 * (n + 1));
            for x in &r {
                assert!(x.exact, "{} failed on N={n}, sector {}", x.identity_name, x.particle_number);
            }
        }
    }

    #[test]
    fn wrong_closed_form_is_detected() {
        // T6's right side is not T1's: the checker must see a nonzero deviation.
        let n = 4;
        let sides: Vec<_> = label_pairs(IdentityName::T1, n)
            .into_iter()
            .map(|(l, i)| (raw_side(IdentityName::T6, n, l, i), closed_side(IdentityName::T1, n, l, i)))
            .collect();
        assert!(reports("x".into(), n, &sides).iter().any(|r| !r.exact));
    }

    #[test]
    fn too_few_sites() {
        assert!(operator_identity(IdentityName::T1, 3).is_err());
        assert!(operator_identity(IdentityName::V2, 2).is_err());
    }

    #[test]
    fn names_round_trip() {
        for n in IdentityName::ALL {
            assert_eq!(n.to_string().parse::<IdentityName>().unwrap(), n);
        }
        assert!("T7".parse::<IdentityName>().is_err());
    }
}
