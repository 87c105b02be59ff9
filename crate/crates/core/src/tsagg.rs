//! Typical-period aggregation of hourly series.
//!
//! Days are clustered by Ward-linkage agglomeration on min-max normalized,
//! concatenated daily profiles. Each cluster is represented by its medoid
//! (the member day closest to the centroid) or by the centroid itself, and
//! the representative day is cut into contiguous segments by an exact
//! dynamic program. Segment values are means over the cut. A final rescale
//! per attribute makes every weighted annual sum equal the original sum.
//!
//! Centroids average away the day-to-day spread inside a cluster, which
//! makes a cost-minimizing model see calmer weather than the real year;
//! medoids are real days and keep it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::HOURS_PER_YEAR;

pub const DAYS: usize = 365;
pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum TsaggError {
    #[error("series `{name}` has {got} values, expected {expected}")]
    Length { name: String, expected: usize, got: usize },
    #[error("n_periods must lie in [1, 365], got {0}")]
    Periods(usize),
    #[error("n_segments must lie in [1, 24], got {0}")]
    Segments(usize),
    #[error("no series to aggregate")]
    Empty,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("dispatch index out of range: {0}")]
    Index(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    #[default]
    Medoid,
    Centroid,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregateOptions {
    pub representation: Representation,
    /// Keeps the day holding this attribute's annual maximum in a cluster of
    /// its own.
    pub pin_peak_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalPeriods {
    pub n_periods: usize,
    pub n_segments: usize,
    /// Days represented by each period; sums to 365.
    pub period_weights: Vec<u32>,
    /// Hours per segment per period; each row sums to 24.
    pub segment_durations: Vec<Vec<u32>>,
    /// attribute → period → segment.
    pub representative_values: BTreeMap<String, Vec<Vec<f64>>>,
    /// Original day → period.
    pub assignment: Vec<usize>,
}

impl TypicalPeriods {
    /// Hours of the year represented by one (period, segment) step.
    pub fn weight(&self, p: usize, s: usize) -> f64 {
        self.period_weights[p] as f64 * self.segment_durations[p][s] as f64
    }

    pub fn values(&self, attr: &str) -> Option<&Vec<Vec<f64>>> {
        self.representative_values.get(attr)
    }

    /// Weighted annual sum of an attribute.
    pub fn annual_sum(&self, attr: &str) -> Option<f64> {
        self.values(attr).map(|v| self.weighted_sum(v))
    }

    pub fn weighted_sum(&self, v: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (p, row) in v.iter().enumerate() {
            for (s, x) in row.iter().enumerate() {
                total += self.weight(p, s) * x;
            }
        }
        total
    }

    /// (period, segment) of every hour of the year.
    pub fn hour_index(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(DAYS * HOURS_PER_DAY);
        for &p in &self.assignment {
            for (s, &d) in self.segment_durations[p].iter().enumerate() {
                out.extend(std::iter::repeat_n((p, s), d as usize));
            }
        }
        out
    }

    /// Checks the structural invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.period_weights.iter().sum::<u32>() != DAYS as u32 {
            return Err("period weights do not sum to 365".into());
        }
        for (p, d) in self.segment_durations.iter().enumerate() {
            if d.iter().sum::<u32>() != HOURS_PER_DAY as u32 || d.contains(&0) {
                return Err(format!("segment durations of period {p} are invalid"));
            }
        }
        if self.assignment.len() != DAYS || self.assignment.iter().any(|&p| p >= self.n_periods) {
            return Err("assignment does not map every day to a period".into());
        }
        for (p, &w) in self.period_weights.iter().enumerate() {
            if self.assignment.iter().filter(|&&a| a == p).count() as u32 != w {
                return Err(format!("weight of period {p} differs from its member count"));
            }
        }
        Ok(())
    }

    /// Audit dump: one row per (period, segment).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("period,segment,duration,weight");
        for name in self.representative_values.keys() {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for p in 0..self.n_periods {
            for seg in 0..self.n_segments {
                let _ = write!(s, "{p},{seg},{},{}", self.segment_durations[p][seg], self.period_weights[p]);
                for v in self.representative_values.values() {
                    let _ = write!(s, ",{}", v[p][seg]);
                }
                s.push('\n');
            }
        }
        s
    }
}

pub fn aggregate(
    series: &BTreeMap<String, Vec<f64>>,
    n_periods: usize,
    n_segments: usize,
) -> Result<TypicalPeriods, TsaggError> {
    aggregate_with(series, n_periods, n_segments, &AggregateOptions::default())
}

pub fn aggregate_with(
    series: &BTreeMap<String, Vec<f64>>,
    n_periods: usize,
    n_segments: usize,
    opts: &AggregateOptions,
) -> Result<TypicalPeriods, TsaggError> {
    if series.is_empty() {
        return Err(TsaggError::Empty);
    }
    for (name, v) in series {
        if v.len() != HOURS_PER_YEAR {
            return Err(TsaggError::Length {
                name: name.clone(),
                expected: HOURS_PER_YEAR,
                got: v.len(),
            });
        }
    }
    if !(1..=DAYS).contains(&n_periods) {
        return Err(TsaggError::Periods(n_periods));
    }
    if !(1..=HOURS_PER_DAY).contains(&n_segments) {
        return Err(TsaggError::Segments(n_segments));
    }
    let attrs: Vec<&Vec<f64>> = series.values().collect();
    let norm: Vec<Vec<f64>> = attrs.iter().map(|v| normalize(v)).collect();
    // a shape that appears twice would only count twice in the distance
    let distinct: Vec<&Vec<f64>> = norm
        .iter()
        .enumerate()
        .filter(|(i, a)| !norm[..*i].iter().any(|b| same_shape(a, b)))
        .map(|(_, a)| a)
        .collect();
    let dim = distinct.len() * HOURS_PER_DAY;
    // day vectors: attribute-major within each day
    let days: Vec<Vec<f64>> = (0..DAYS)
        .map(|d| {
            let mut v = Vec::with_capacity(dim);
            for a in &distinct {
                v.extend_from_slice(&a[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]);
            }
            v
        })
        .collect();

    let pinned = match &opts.pin_peak_of {
        Some(name) => {
            let v = series.get(name).ok_or_else(|| TsaggError::UnknownAttribute(name.clone()))?;
            let mut best = 0;
            for (h, x) in v.iter().enumerate() {
                if *x > v[best] {
                    best = h;
                }
            }
            Some(best / HOURS_PER_DAY)
        }
        None => None,
    };

    let mut labels = match pinned {
        Some(peak) if n_periods > 1 => {
            let rest: Vec<usize> = (0..DAYS).filter(|&d| d != peak).collect();
            let sub: Vec<Vec<f64>> = rest.iter().map(|&d| days[d].clone()).collect();
            let mut sub_labels = ward(&sub, n_periods - 1);
            // ward labels are point indices; compact them below the pin
            relabel_by_first_day(&mut sub_labels);
            let mut l = vec![0; DAYS];
            for (i, &d) in rest.iter().enumerate() {
                l[d] = sub_labels[i];
            }
            l[peak] = n_periods - 1;
            l
        }
        _ => ward(&days, n_periods),
    };
    relabel_by_first_day(&mut labels);

    let mut weights = vec![0u32; n_periods];
    for &l in &labels {
        weights[l] += 1;
    }

    // representatives in normalized and original units
    let mut durations = Vec::with_capacity(n_periods);
    let mut reps: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n_periods); attrs.len()];
    for p in 0..n_periods {
        let members: Vec<usize> = (0..DAYS).filter(|&d| labels[d] == p).collect();
        let medoid = match opts.representation {
            Representation::Medoid => Some(medoid(&days, &members)),
            Representation::Centroid => None,
        };
        let representative = |src: &[f64]| -> Vec<f64> {
            if let Some(d) = medoid {
                return src[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY].to_vec();
            }
            let mut c = vec![0.0; HOURS_PER_DAY];
            for &d in &members {
                for (h, ch) in c.iter_mut().enumerate() {
                    *ch += src[d * HOURS_PER_DAY + h];
                }
            }
            let n = members.len() as f64;
            c.iter_mut().for_each(|x| *x /= n);
            c
        };
        let norm_c: Vec<Vec<f64>> = norm.iter().map(|a| representative(a)).collect();
        let dur = segment(&norm_c, n_segments);
        for (a, src) in attrs.iter().enumerate() {
            let c = representative(src);
            let mut start = 0;
            let mut row = Vec::with_capacity(n_segments);
            for &d in &dur {
                let d = d as usize;
                row.push(c[start..start + d].iter().sum::<f64>() / d as f64);
                start += d;
            }
            reps[a].push(row);
        }
        durations.push(dur);
    }

    let mut tp = TypicalPeriods {
        n_periods,
        n_segments,
        period_weights: weights,
        segment_durations: durations,
        representative_values: BTreeMap::new(),
        assignment: labels,
    };
    for ((name, src), mut rep) in series.iter().zip(reps) {
        let original: f64 = src.iter().sum();
        let agg = tp.weighted_sum(&rep);
        if agg != 0.0 && ((original - agg) / agg).abs() > 1e-12 {
            let f = original / agg;
            rep.iter_mut().flatten().for_each(|x| *x *= f);
        }
        tp.representative_values.insert(name.clone(), rep);
    }
    Ok(tp)
}

/// Maps each hour back to its (period, segment) value.
pub fn expand(tp: &TypicalPeriods, values: &[Vec<f64>]) -> Result<Vec<f64>, TsaggError> {
    if values.len() != tp.n_periods {
        return Err(TsaggError::Index(format!("{} periods given, {} expected", values.len(), tp.n_periods)));
    }
    for (p, row) in values.iter().enumerate() {
        if row.len() != tp.segment_durations[p].len() {
            return Err(TsaggError::Index(format!("period {p} has {} segments, {} expected", row.len(), tp.n_segments)));
        }
    }
    Ok(tp.hour_index().into_iter().map(|(p, s)| values[p][s]).collect())
}

/// Root mean square deviation between the series and their reconstruction,
/// on the same min-max normalization the clustering uses.
pub fn rms(series: &BTreeMap<String, Vec<f64>>, tp: &TypicalPeriods) -> Result<f64, TsaggError> {
    let mut sq = 0.0;
    let mut n = 0usize;
    for (name, v) in series {
        let rep = tp.values(name).ok_or_else(|| TsaggError::UnknownAttribute(name.clone()))?;
        let rec = expand(tp, rep)?;
        let (_, span) = range(v);
        for (x, y) in v.iter().zip(&rec) {
            let d = if span > 0.0 { (x - y) / span } else { 0.0 };
            sq += d * d;
            n += 1;
        }
    }
    Ok((sq / n as f64).sqrt())
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi - lo)
}

fn same_shape(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let (lo, span) = range(v);
    if span > 0.0 {
        v.iter().map(|x| (x - lo) / span).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Ward agglomeration down to `k` clusters. Merge cost is the increase in
/// within-cluster squared error; ties go to the lowest index pair. Returns a
/// cluster label per point (labels are arbitrary but deterministic).
fn ward(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    let k = k.min(n);
    let mut centroid: Vec<Vec<f64>> = points.to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let cost = |ci: &[f64], ni: usize, cj: &[f64], nj: usize| {
        let d2: f64 = ci.iter().zip(cj).map(|(a, b)| (a - b) * (a - b)).sum();
        (ni * nj) as f64 / (ni + nj) as f64 * d2
    };
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            dist[i][j] = cost(&centroid[i], 1, &centroid[j], 1);
        }
    }
    for _ in 0..n - k {
        let (mut bi, mut bj, mut best) = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && dist[i][j] < best {
                    (bi, bj, best) = (i, j, dist[i][j]);
                }
            }
        }
        if bi == usize::MAX {
            // all remaining costs infinite cannot happen with finite data;
            // fall back to the first active pair
            let act: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
            (bi, bj) = (act[0], act[1]);
        }
        let (ni, nj) = (size[bi], size[bj]);
        let merged: Vec<f64> = centroid[bi]
            .iter()
            .zip(&centroid[bj])
            .map(|(a, b)| (a * ni as f64 + b * nj as f64) / (ni + nj) as f64)
            .collect();
        centroid[bi] = merged;
        size[bi] = ni + nj;
        active[bj] = false;
        parent[bj] = bi;
        for o in 0..n {
            if o != bi && active[o] {
                let c = cost(&centroid[bi], size[bi], &centroid[o], size[o]);
                if o < bi {
                    dist[o][bi] = c;
                } else {
                    dist[bi][o] = c;
                }
            }
        }
    }
    let root = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    (0..n).map(root).collect()
}

/// Member closest to the members' mean; the earliest day wins ties.
fn medoid(days: &[Vec<f64>], members: &[usize]) -> usize {
    let dim = days[members[0]].len();
    let mut mean = vec![0.0; dim];
    for &d in members {
        for (m, x) in mean.iter_mut().zip(&days[d]) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= members.len() as f64);
    let mut best = (f64::INFINITY, members[0]);
    for &d in members {
        let dist: f64 = days[d].iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum();
        if dist < best.0 {
            best = (dist, d);
        }
    }
    best.1
}

/// Renumbers labels 0.. in order of each cluster's first day.
fn relabel_by_first_day(labels: &mut [usize]) {
    let mut map = BTreeMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
}

/// Optimal contiguous cut of one day into `k` segments minimizing the summed
/// squared deviation from segment means over all attributes. Among equal
/// errors the cut with the smaller sum of squared durations wins, then the
/// one with the earliest cut.
fn segment(day: &[Vec<f64>], k: usize) -> Vec<u32> {
    let h = HOURS_PER_DAY;
    // prefix sums per attribute
    let pre: Vec<(Vec<f64>, Vec<f64>)> = day
        .iter()
        .map(|a| {
            let mut s = vec![0.0; h + 1];
            let mut q = vec![0.0; h + 1];
            for t in 0..h {
                s[t + 1] = s[t] + a[t];
                q[t + 1] = q[t] + a[t] * a[t];
            }
            (s, q)
        })
        .collect();
    let sse = |i: usize, j: usize| -> f64 {
        let n = (j - i) as f64;
        pre.iter()
            .map(|(s, q)| {
                let sum = s[j] - s[i];
                ((q[j] - q[i]) - sum * sum / n).max(0.0)
            })
            .sum()
    };
    // cost[m][j]: best split of hours [0, j) into m segments
    let inf = (f64::INFINITY, usize::MAX);
    let mut cost = vec![vec![inf; h + 1]; k + 1];
    let mut arg = vec![vec![0usize; h + 1]; k + 1];
    cost[0][0] = (0.0, 0);
    for m in 1..=k {
        for j in m..=h {
            for i in (m - 1)..j {
                let (c0, q0) = cost[m - 1][i];
                if c0.is_infinite() {
                    continue;
                }
                let cand = (c0 + sse(i, j), q0 + (j - i) * (j - i));
                let cur = cost[m][j];
                let better = cand.0 < cur.0 - 1e-12 * cur.0.abs().max(1e-300)
                    || (cand.0 <= cur.0 + 1e-12 * cur.0.abs().max(1e-300) && cand.1 < cur.1);
                if better || cur.0.is_infinite() {
                    cost[m][j] = cand;
                    arg[m][j] = i;
                }
            }
        }
    }
    let mut cuts = vec![h];
    let mut j = h;
    for m in (1..=k).rev() {
        j = arg[m][j];
        cuts.push(j);
    }
    cuts.reverse();
    cuts.windows(2).map(|w| (w[1] - w[0]) as u32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(seed: f64) -> Vec<f64> {
        (0..HOURS_PER_YEAR)
            .map(|h| {
                let d = (h / 24) as f64;
                let t = (h % 24) as f64;
                10.0 + 5.0 * (2.0 * std::f64::consts::PI * d / 365.0).cos()
                    + 3.0 * (2.0 * std::f64::consts::PI * t / 24.0 + seed).sin()
                    + ((h as f64 * 12.9898 + seed).sin() * 43758.5453).fract().abs()
            })
            .collect()
    }

    fn set() -> BTreeMap<String, Vec<f64>> {
        BTreeMap::from([("a".to_string(), wave(0.0)), ("b".to_string(), wave(1.3))])
    }

    #[test]
    fn full_resolution_is_lossless() {
        let s = set();
        let tp = aggregate(&s, 365, 24).unwrap();
        tp.check().unwrap();
        for (name, v) in &s {
            assert_eq!(&expand(&tp, tp.values(name).unwrap()).unwrap(), v);
        }
    }

    #[test]
    fn constant_series_stay_constant() {
        let s = BTreeMap::from([("c".to_string(), vec![4.25; HOURS_PER_YEAR])]);
        let tp = aggregate(&s, 7, 5).unwrap();
        tp.check().unwrap();
        assert!(tp.values("c").unwrap().iter().flatten().all(|v| *v == 4.25));
        let d = &tp.segment_durations[0];
        assert!(d.iter().max().unwrap() - d.iter().min().unwrap() <= 1);
    }

    #[test]
    fn sums_are_conserved() {
        let s = set();
        let tp = aggregate(&s, 60, 16).unwrap();
        tp.check().unwrap();
        for (name, v) in &s {
            let orig: f64 = v.iter().sum();
            assert!((tp.annual_sum(name).unwrap() - orig).abs() <= 1e-9 * orig);
        }
    }

    #[test]
    fn more_periods_reduce_error() {
        let s = set();
        let coarse = rms(&s, &aggregate(&s, 10, 16).unwrap()).unwrap();
        let fine = rms(&s, &aggregate(&s, 60, 16).unwrap()).unwrap();
        assert!(fine < coarse);
    }

    #[test]
    fn peak_day_gets_its_own_period() {
        let mut s = set();
        s.get_mut("a").unwrap()[200 * 24 + 5] = 1000.0;
        let opts = AggregateOptions {
            pin_peak_of: Some("a".into()),
            ..Default::default()
        };
        let tp = aggregate_with(&s, 12, 6, &opts).unwrap();
        tp.check().unwrap();
        let p = tp.assignment[200];
        assert_eq!(tp.period_weights[p], 1);
        assert!(tp.period_weights.iter().all(|w| *w > 0));
    }

    #[test]
    fn medoids_are_member_days_up_to_the_rescale() {
        let s = set();
        let tp = aggregate(&s, 20, 24).unwrap();
        for (name, v) in &s {
            let rep = tp.values(name).unwrap();
            let mut factors = Vec::new();
            for (p, row) in rep.iter().enumerate() {
                let hit = (0..DAYS).filter(|&d| tp.assignment[d] == p).find_map(|d| {
                    let day = &v[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY];
                    let f = row[0] / day[0];
                    row.iter().zip(day).all(|(r, x)| (r - f * x).abs() <= 1e-9 * r.abs()).then_some(f)
                });
                factors.push(hit.expect("representative is not a member day"));
            }
            // one common rescale factor per attribute
            assert!(factors.iter().all(|f| (f - factors[0]).abs() <= 1e-9));
        }
    }

    #[test]
    fn centroids_average_the_members() {
        let s = set();
        let opts = AggregateOptions {
            representation: Representation::Centroid,
            ..Default::default()
        };
        let tp = aggregate_with(&s, 20, 24, &opts).unwrap();
        let v = &s["a"];
        let p = tp.assignment[0];
        let members: Vec<usize> = (0..DAYS).filter(|&d| tp.assignment[d] == p).collect();
        let mean0 = members.iter().map(|d| v[d * HOURS_PER_DAY]).sum::<f64>() / members.len() as f64;
        let f = v.iter().sum::<f64>() / tp.weighted_sum(&centroid_rows(&tp, v));
        assert!((tp.values("a").unwrap()[p][0] - f * mean0).abs() <= 1e-9 * mean0);
    }

    /// Unscaled member means per period and hour.
    fn centroid_rows(tp: &TypicalPeriods, v: &[f64]) -> Vec<Vec<f64>> {
        (0..tp.n_periods)
            .map(|p| {
                let members: Vec<usize> = (0..DAYS).filter(|&d| tp.assignment[d] == p).collect();
                (0..HOURS_PER_DAY)
                    .map(|h| members.iter().map(|d| v[d * HOURS_PER_DAY + h]).sum::<f64>() / members.len() as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn bad_arguments() {
        let s = set();
        assert_eq!(aggregate(&s, 0, 4), Err(TsaggError::Periods(0)));
        assert_eq!(aggregate(&s, 4, 25), Err(TsaggError::Segments(25)));
        let short = BTreeMap::from([("x".to_string(), vec![1.0; 10])]);
        assert!(matches!(aggregate(&short, 4, 4), Err(TsaggError::Length { .. })));
    }

    #[test]
    fn segmentation_matches_brute_force_on_small_cases() {
        // three segments over 24 hours: enumerate every pair of cuts
        let day = vec![wave(0.4)[..24].to_vec()];
        let got = segment(&day, 3);
        let err = |cuts: &[usize]| {
            let mut e = 0.0;
            for w in cuts.windows(2) {
                let xs = &day[0][w[0]..w[1]];
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                e += xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            }
            e
        };
        let mut best = f64::INFINITY;
        for a in 1..23 {
            for b in a + 1..24 {
                best = best.min(err(&[0, a, b, 24]));
            }
        }
        let mut cuts = vec![0usize];
        for d in &got {
            cuts.push(cuts.last().unwrap() + *d as usize);
        }
        assert!((err(&cuts) - best).abs() <= 1e-9 * best.max(1.0));
    }
}
