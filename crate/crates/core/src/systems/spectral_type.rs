//! Spectral types: multiplicity data of a Riemann scheme.
//!
//! String grammar: point-types are comma separated. A Fuchsian point is a
//! digit string of its parts (`211`); parts of ten or more are written in
//! parentheses (`(10)1`). A Poincaré-rank-1 point is the concatenation of its
//! parenthesized inner partitions (`(111)(11)`), whose parts must be below
//! ten. A token made of two or more parenthesized groups is read as a rank-1
//! point unless some group contains the digit `0`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A partition stored with weakly decreasing parts, all positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidType("empty partition".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidType("partition with a zero part".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_part(&self) -> usize {
        self.0[0]
    }

    pub fn sum_of_squares(&self) -> usize {
        self.0.iter().map(|p| p * p).sum()
    }

    /// Removes one copy of the largest part. `None` when nothing remains.
    pub fn without_max(&self) -> Option<Partition> {
        (self.0.len() > 1).then(|| Partition(self.0[1..].to_vec()))
    }

    /// Adds a part (ignored when zero).
    pub fn with_part(&self, part: usize) -> Partition {
        let mut v = self.0.clone();
        if part > 0 {
            v.push(part);
        }
        Partition::new(v).expect("nonempty")
    }

    /// All ways of grouping `self`'s parts into blocks of sizes `outer`,
    /// each result listing one sub-partition per block of `outer`.
    pub fn groupings_into(&self, outer: &Partition) -> Vec<Vec<Partition>> {
        fn rec(
            parts: &[usize],
            i: usize,
            outer: &[usize],
            sums: &mut [usize],
            groups: &mut [Vec<usize>],
            out: &mut Vec<Vec<Partition>>,
        ) {
            if i == parts.len() {
                if sums.iter().zip(outer).all(|(s, o)| s == o) {
                    let g: Vec<Partition> = groups
                        .iter()
                        .map(|g| Partition::new(g.clone()).expect("nonempty block"))
                        .collect();
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
                return;
            }
            for k in 0..outer.len() {
                // Equal outer blocks are interchangeable: only try the first empty one.
                if k > 0 && outer[k] == outer[k - 1] && sums[k - 1] == 0 && sums[k] == 0 {
                    continue;
                }
                if sums[k] + parts[i] <= outer[k] {
                    sums[k] += parts[i];
                    groups[k].push(parts[i]);
                    rec(parts, i + 1, outer, sums, groups, out);
                    groups[k].pop();
                    sums[k] -= parts[i];
                }
            }
        }
        let mut out = Vec::new();
        if self.size() != outer.size() {
            return out;
        }
        let mut sums = vec![0; outer.len()];
        let mut groups = vec![Vec::new(); outer.len()];
        rec(&self.0, 0, &outer.0, &mut sums, &mut groups, &mut out);
        out
    }

    pub fn refines(&self, outer: &Partition) -> bool {
        !self.groupings_into(outer).is_empty()
    }

    fn order_key(&self) -> (usize, Vec<std::cmp::Reverse<usize>>) {
        (self.0.len(), self.0.iter().map(|&p| std::cmp::Reverse(p)).collect())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.0 {
            if p < 10 {
                write!(f, "{p}")?;
            } else {
                write!(f, "({p})")?;
            }
        }
        Ok(())
    }
}

/// Multiplicity data of one singular point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PointType {
    /// Regular singular point: multiplicities of the residue eigenvalues.
    Fuchsian(Partition),
    /// Unramified Poincaré-rank-1 point: one inner partition per eigenvalue
    /// block of the leading matrix. The outer partition is the block sizes.
    Irregular(Vec<Partition>),
}

impl PointType {
    pub fn size(&self) -> usize {
        match self {
            PointType::Fuchsian(p) => p.size(),
            PointType::Irregular(blocks) => blocks.iter().map(Partition::size).sum(),
        }
    }

    pub fn is_fuchsian(&self) -> bool {
        matches!(self, PointType::Fuchsian(_))
    }

    /// Outer partition of a rank-1 point (block sizes).
    pub fn outer(&self) -> Option<Partition> {
        match self {
            PointType::Irregular(b) => Some(Partition::new(b.iter().map(Partition::size).collect()).expect("blocks")),
            PointType::Fuchsian(_) => None,
        }
    }

    /// Canonical form: sorted blocks; a rank-1 point with a single block is
    /// removable by a scalar gauge and becomes Fuchsian.
    fn canonical(self) -> PointType {
        match self {
            PointType::Irregular(mut blocks) if blocks.len() > 1 => {
                blocks.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| block_cmp(a, b)));
                PointType::Irregular(blocks)
            }
            PointType::Irregular(mut blocks) => PointType::Fuchsian(blocks.pop().expect("one block")),
            p => p,
        }
    }

    fn is_trivial(&self) -> bool {
        matches!(self, PointType::Fuchsian(p) if p.len() == 1)
    }
}

fn block_cmp(a: &Partition, b: &Partition) -> Ordering {
    // larger parts first, lexicographically
    b.parts().cmp(a.parts())
}

fn point_cmp(a: &PointType, b: &PointType) -> Ordering {
    match (a, b) {
        (PointType::Irregular(_), PointType::Fuchsian(_)) => Ordering::Less,
        (PointType::Fuchsian(_), PointType::Irregular(_)) => Ordering::Greater,
        (PointType::Fuchsian(x), PointType::Fuchsian(y)) => x.order_key().cmp(&y.order_key()),
        (PointType::Irregular(x), PointType::Irregular(y)) => x
            .len()
            .cmp(&y.len())
            .then_with(|| {
                x.iter()
                    .zip(y)
                    .map(|(p, q)| q.size().cmp(&p.size()).then_with(|| block_cmp(p, q)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            }),
    }
}

impl fmt::Display for PointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointType::Fuchsian(p) => write!(f, "{p}"),
            PointType::Irregular(blocks) => {
                for b in blocks {
                    write!(f, "(")?;
                    for &p in b.parts() {
                        write!(f, "{p}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Spectral type of a system of rank `rank`.
///
/// Always stored canonically: parts weakly decreasing, single-block rank-1
/// points turned Fuchsian, points whose partition has a single part
/// (scalar residue, removable by an addition) dropped, and point-types sorted
/// with rank-1 points first, then Fuchsian points by ascending number of
/// parts and lexicographically descending parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectralType {
    rank: usize,
    points: Vec<PointType>,
}

impl SpectralType {
    pub fn new(rank: usize, points: Vec<PointType>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidType("rank must be positive".into()));
        }
        for p in &points {
            if p.size() != rank {
                return Err(Error::InvalidType(format!(
                    "point-type {p} has size {} but rank is {rank}",
                    p.size()
                )));
            }
        }
        let mut points: Vec<PointType> = points
            .into_iter()
            .map(PointType::canonical)
            .filter(|p| !p.is_trivial())
            .collect();
        points.sort_by(point_cmp);
        Ok(SpectralType { rank, points })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn points(&self) -> &[PointType] {
        &self.points
    }

    pub fn is_fuchsian(&self) -> bool {
        self.points.iter().all(PointType::is_fuchsian)
    }

    pub fn irregular_count(&self) -> usize {
        self.points.iter().filter(|p| !p.is_fuchsian()).count()
    }

    /// Index of the unique rank-1 point, if exactly one exists.
    pub fn irregular_index(&self) -> Option<usize> {
        let idx: Vec<usize> = (0..self.points.len())
            .filter(|&i| !self.points[i].is_fuchsian())
            .collect();
        (idx.len() == 1).then(|| idx[0])
    }
}

impl fmt::Display for SpectralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

fn parse_digits(s: &str) -> Result<Vec<usize>> {
    s.chars()
        .map(|ch| {
            ch.to_digit(10)
                .map(|d| d as usize)
                .ok_or_else(|| Error::Parse(format!("unexpected character {ch:?}")))
        })
        .collect()
}

fn parse_fuchsian(tok: &str) -> Result<Partition> {
    let mut parts = Vec::new();
    let mut rest = tok;
    while let Some(ch) = rest.chars().next() {
        if ch == '(' {
            let end = rest
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed '(' in {tok:?}")))?;
            let n: usize = rest[1..end]
                .parse()
                .map_err(|_| Error::Parse(format!("bad part in {tok:?}")))?;
            parts.push(n);
            rest = &rest[end + 1..];
        } else {
            parts.extend(parse_digits(&rest[..1])?);
            rest = &rest[1..];
        }
    }
    Partition::new(parts).map_err(|e| Error::Parse(format!("{tok:?}: {e}")))
}

fn parse_groups(tok: &str) -> Option<Vec<&str>> {
    let mut groups = Vec::new();
    let mut rest = tok;
    while !rest.is_empty() {
        if !rest.starts_with('(') {
            return None;
        }
        let end = rest.find(')')?;
        groups.push(&rest[1..end]);
        rest = &rest[end + 1..];
    }
    Some(groups)
}

fn parse_point(tok: &str) -> Result<PointType> {
    if tok.is_empty() {
        return Err(Error::Parse("empty point-type".into()));
    }
    if let Some(groups) = parse_groups(tok) {
        if groups.len() >= 2 && groups.iter().all(|g| !g.is_empty() && !g.contains('0')) {
            let blocks = groups
                .iter()
                .map(|g| parse_digits(g).and_then(Partition::new))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Parse(format!("{tok:?}: {e}")))?;
            return Ok(PointType::Irregular(blocks));
        }
    }
    parse_fuchsian(tok).map(PointType::Fuchsian)
}

impl FromStr for SpectralType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty spectral type".into()));
        }
        let points = s.split(',').map(parse_point).collect::<Result<Vec<_>>>()?;
        let rank = points[0].size();
        SpectralType::new(rank, points).map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    }
}

impl Serialize for SpectralType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SpectralType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> SpectralType {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_order() {
        assert_eq!(t("1111,211,1111").to_string(), "211,1111,1111");
        assert_eq!(t("1111,22,31,22").to_string(), "31,22,22,1111");
        assert_eq!(t("11111,(11)(111)").to_string(), "(111)(11),11111");
        assert_eq!(t("211,(1)(1)(1)(1)").to_string(), "(1)(1)(1)(1),211");
    }

    #[test]
    fn single_block_is_fuchsian_and_trivial_points_drop() {
        let one = PointType::Irregular(vec![Partition::new(vec![1, 1, 1, 1]).unwrap()]);
        let p211 = PointType::Fuchsian(Partition::new(vec![2, 1, 1]).unwrap());
        let ty = SpectralType::new(4, vec![one.clone(), p211, one]).unwrap();
        assert_eq!(ty.to_string(), "211,1111,1111");
        assert_eq!(t("3,111,111,111").to_string(), "111,111,111");
    }

    #[test]
    fn big_parts() {
        let ty = t("(10)1,(11)");
        assert_eq!(ty.rank(), 11);
        assert_eq!(ty.to_string(), "(10)1");
        assert_eq!(t("(10)(10),(10)(10),5555").rank(), 20);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!("211,111".parse::<SpectralType>().is_err());
        assert!("2x1".parse::<SpectralType>().is_err());
        assert!("".parse::<SpectralType>().is_err());
    }

    #[test]
    fn groupings() {
        let outer = Partition::new(vec![3, 2]).unwrap();
        let inner = Partition::new(vec![1; 5]).unwrap();
        let g = inner.groupings_into(&outer);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0][0].parts(), &[1, 1, 1]);
        let outer = Partition::new(vec![4, 2]).unwrap();
        let inner = Partition::new(vec![2, 2, 1, 1]).unwrap();
        assert_eq!(inner.groupings_into(&outer).len(), 2);
        let a = Partition::new(vec![5, 5]).unwrap();
        let b = Partition::new(vec![3, 3, 3, 1]).unwrap();
        assert!(!b.refines(&a));
    }
}
