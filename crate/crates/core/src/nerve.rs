//! Simplicial complexes and the nerve of the doubled-ball cover.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::packing::Packing;
use crate::space::MetricMeasureSpace;

pub const DEFAULT_MULTIPLICITY_CAP: usize = 24;

/// A finite simplicial complex truncated at dimension `dmax`.
///
/// Simplices are strictly increasing vertex tuples, stored per dimension in
/// lexicographic order. Every face of a stored simplex is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    vertex_count: usize,
    simplices: Vec<Vec<Vec<usize>>>,
}

impl SimplicialComplex {
    /// Builds a complex from an arbitrary collection of simplices and checks
    /// downward closure. `dmax` fixes the number of stored dimensions; larger
    /// simplices are rejected.
    pub fn from_simplices<I>(dmax: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut by_dim: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); dmax + 1];
        for s in simplices {
            if s.is_empty() {
                return Err(Error::param("empty simplex"));
            }
            if !s.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::param(format!(
                    "simplex {s:?} is not strictly increasing"
                )));
            }
            let d = s.len() - 1;
            if d > dmax {
                return Err(Error::param(format!(
                    "simplex {s:?} has dimension {d} > dmax {dmax}"
                )));
            }
            by_dim[d].insert(s);
        }
        let vertex_count = by_dim[0].len();
        let complex = Self {
            vertex_count,
            simplices: by_dim.into_iter().map(|set| set.into_iter().collect()).collect(),
        };
        complex.check_closed()?;
        Ok(complex)
    }

    /// Downward closure of a set of simplices, truncated at `dmax`.
    pub fn closure<I>(dmax: usize, generators: I) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut by_dim: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); dmax + 1];
        for mut g in generators {
            g.sort_unstable();
            g.dedup();
            for_each_subset(&g, dmax + 1, |sub| {
                by_dim[sub.len() - 1].insert(sub.to_vec());
            });
        }
        Self {
            vertex_count: by_dim[0].len(),
            simplices: by_dim.into_iter().map(|set| set.into_iter().collect()).collect(),
        }
    }

    fn check_closed(&self) -> Result<()> {
        for d in 1..self.simplices.len() {
            for s in &self.simplices[d] {
                for face in faces(s) {
                    if self.simplices[d - 1].binary_search(&face).is_err() {
                        return Err(Error::NotDownwardClosed {
                            simplex: s.clone(),
                            face,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_downward_closed(&self) -> bool {
        self.check_closed().is_ok()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dmax(&self) -> usize {
        self.simplices.len() - 1
    }

    /// The `d`-simplices, lexicographically ordered; empty beyond `dmax`.
    pub fn simplices(&self, d: usize) -> &[Vec<usize>] {
        self.simplices.get(d).map_or(&[], Vec::as_slice)
    }

    /// Position of a simplex within its dimension's ordering.
    pub fn index_of(&self, simplex: &[usize]) -> Option<usize> {
        let d = simplex.len().checked_sub(1)?;
        self.simplices
            .get(d)?
            .binary_search_by(|s| s.as_slice().cmp(simplex))
            .ok()
    }

    /// `t_0, ..., t_dmax`.
    pub fn counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    /// Text form: a header `dmax t_0 ... t_dmax`, then one simplex per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = std::iter::once(self.dmax())
            .chain(self.counts())
            .map(|v| v.to_string())
            .collect();
        out.push_str(&header.join(" "));
        out.push('\n');
        for dim in &self.simplices {
            for s in dim {
                let mut first = true;
                for v in s {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let header: Vec<usize> = header
            .split_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| Error::parse(hline, format!("bad header field {tok:?}")))
            })
            .collect::<Result<_>>()?;
        let (&dmax, counts) = header
            .split_first()
            .ok_or_else(|| Error::parse(hline, "empty header"))?;
        if counts.len() != dmax + 1 {
            return Err(Error::parse(
                hline,
                format!("header lists {} counts, expected dmax + 1 = {}", counts.len(), dmax + 1),
            ));
        }
        let mut simplices = Vec::new();
        let mut seen = vec![0usize; dmax + 1];
        for (ln, line) in lines {
            let s: Vec<usize> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse()
                        .map_err(|_| Error::parse(ln, format!("bad vertex id {tok:?}")))
                })
                .collect::<Result<_>>()?;
            if !s.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::parse(ln, "vertices must be strictly increasing"));
            }
            let d = s.len() - 1;
            if d > dmax {
                return Err(Error::parse(ln, format!("simplex of dimension {d} exceeds dmax {dmax}")));
            }
            seen[d] += 1;
            simplices.push(s);
        }
        let complex = Self::from_simplices(dmax, simplices)?;
        if complex.counts() != counts || seen != counts {
            return Err(Error::parse(
                hline,
                format!("header counts {counts:?} disagree with the listed simplices {seen:?}"),
            ));
        }
        Ok(complex)
    }
}

/// Codimension-one faces of a simplex, in the order obtained by deleting
/// vertex 0, 1, ..., d.
pub fn faces(simplex: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..simplex.len()).filter(move |_| simplex.len() > 1).map(move |skip| {
        simplex
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &v)| v)
            .collect()
    })
}

/// Calls `f` on every nonempty subset of the sorted slice `set` with at most
/// `max_len` elements. Subsets are visited in lexicographic order.
fn for_each_subset(set: &[usize], max_len: usize, mut f: impl FnMut(&[usize])) {
    fn rec(set: &[usize], start: usize, max_len: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        for i in start..set.len() {
            buf.push(set[i]);
            f(buf);
            if buf.len() < max_len {
                rec(set, i + 1, max_len, buf, f);
            }
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(max_len);
    rec(set, 0, max_len, &mut buf, &mut f);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nerve {
    pub complex: SimplicialComplex,
    /// Largest number of doubled balls containing a single sample point.
    pub max_multiplicity: usize,
}

/// Nerve of `{B(p_j, 2R_j)}` with witness semantics: vertices `j_0 < ... < j_d`
/// span a simplex iff some sample point lies in all of the corresponding
/// doubled balls.
pub fn build_nerve(
    space: &MetricMeasureSpace,
    packing: &Packing,
    dmax: usize,
    multiplicity_cap: usize,
) -> Result<Nerve> {
    if dmax < 1 {
        return Err(Error::param("nerve dimension must be at least 1"));
    }
    let cover_sets: Vec<Vec<usize>> = (0..space.len())
        .into_par_iter()
        .map(|x| packing.cover_set(space, x))
        .collect();
    let (max_at, max_multiplicity) = cover_sets
        .iter()
        .enumerate()
        .map(|(x, s)| (x, s.len()))
        .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if max_multiplicity > multiplicity_cap {
        return Err(Error::MultiplicityCap {
            point: max_at,
            multiplicity: max_multiplicity,
            cap: multiplicity_cap,
        });
    }
    // Points sharing a cover set contribute identical subsets.
    let distinct: BTreeSet<&Vec<usize>> = cover_sets.iter().filter(|s| !s.is_empty()).collect();
    let distinct: Vec<&Vec<usize>> = distinct.into_iter().collect();
    let per_set: Vec<Vec<Vec<usize>>> = distinct
        .par_iter()
        .map(|s| {
            let mut out = Vec::new();
            for_each_subset(s, dmax + 1, |sub| out.push(sub.to_vec()));
            out
        })
        .collect();
    let complex = SimplicialComplex::closure(dmax, per_set.into_iter().flatten());
    if complex.vertex_count() != packing.len() {
        return Err(Error::Internal(format!(
            "nerve has {} vertices for {} cover sets",
            complex.vertex_count(),
            packing.len()
        )));
    }
    Ok(Nerve {
        complex,
        max_multiplicity,
    })
}

/// Simplex counts plus the two recorded observations about them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexCounts {
    pub t: Vec<usize>,
    /// `t_0 <= 2 t_1`; `None` when `t_1 = 0`.
    pub t0_le_2t1: Option<bool>,
    /// `max_{i >= 2} t_i`; `None` when `dmax < 2`.
    pub max_higher: Option<usize>,
    /// `t_i <= t_1` for every `2 <= i <= dmax`; `None` when `dmax < 2`.
    pub ti_le_t1: Option<bool>,
}

pub fn simplex_counts(complex: &SimplicialComplex) -> SimplexCounts {
    let t = complex.counts();
    let t1 = t.get(1).copied().unwrap_or(0);
    let t0_le_2t1 = (t1 > 0).then(|| t[0] <= 2 * t1);
    let max_higher = t.iter().skip(2).copied().max();
    SimplexCounts {
        t0_le_2t1,
        ti_le_t1: max_higher.map(|m| m <= t1),
        max_higher,
        t,
    }
}
