//! Cylinder frequencies along an orbit against unstable cross-sections.

use std::collections::HashMap;

use super::{random_start, simulate};
use crate::error::{invalid, Result};
use crate::manifolds::reference_unstable;
use crate::map_model::MapFamily;
use crate::numerics::fmt_f64;
use crate::symbolic::{build_cylinder, Word};
use crate::thermo::cross_section_length;

/// Visits below which a cylinder is left out of the comparison.
pub const MIN_VISITS: usize = 100;
/// Leading points dropped before counting.
const BURN_IN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsRow {
    pub word: Word,
    pub visits: usize,
    /// Fraction of counted windows of this rank that spell `word`.
    pub frequency: f64,
    /// Length of the cylinder's cross-section of the reference unstable leaf.
    pub length: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsReport {
    pub rows: Vec<GibbsRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub rank1_min: f64,
    pub rank1_max: f64,
    pub escape_rate: f64,
}

impl GibbsReport {
    /// Every ratio lies in `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        !self.rows.is_empty() && self.min_ratio >= lo && self.max_ratio <= hi
    }
}

/// Frequencies of forward words of rank `1..=max_rank` along a dithered
/// orbit, divided by the lengths of the matching cross-sections. Windows
/// that contain an escape are not counted.
pub fn gibbs_vs_srb(fam: &MapFamily, max_rank: usize, orbit_length: usize, seed: u64) -> Result<GibbsReport> {
    if !(1..=4).contains(&max_rank) {
        return invalid(format!("max_rank must lie in 1..=4, got {max_rank}"));
    }
    if orbit_length < 10_000 {
        return invalid(format!("orbit_length must be at least 10000, got {orbit_length}"));
    }
    let orbit = simulate(fam, random_start(seed), orbit_length + BURN_IN, seed)?;
    let branches = &orbit.branches[BURN_IN..];
    let reference = reference_unstable(fam)?;
    let mut rows = Vec::new();
    for rank in 1..=max_rank {
        let mut counts: HashMap<&[u32], usize> = HashMap::new();
        let mut total = 0usize;
        for w in branches.windows(rank) {
            if w.contains(&0) {
                continue;
            }
            *counts.entry(w).or_default() += 1;
            total += 1;
        }
        let mut words: Vec<(&[u32], usize)> = counts.into_iter().filter(|e| e.1 >= MIN_VISITS).collect();
        words.sort();
        for (w, visits) in words {
            let word = Word(w.iter().map(|&s| s as usize).collect());
            let length = cross_section_length(&reference, &build_cylinder(fam, &word)?);
            let frequency = visits as f64 / total as f64;
            rows.push(GibbsRow {
                word,
                visits,
                frequency,
                length,
                ratio: frequency / length,
            });
        }
    }
    let fold = |rank1: bool| {
        rows.iter()
            .filter(|r| !rank1 || r.word.len() == 1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.ratio), hi.max(r.ratio))
            })
    };
    let (min_ratio, max_ratio) = fold(false);
    let (rank1_min, rank1_max) = fold(true);
    Ok(GibbsReport {
        min_ratio,
        max_ratio,
        rank1_min,
        rank1_max,
        escape_rate: orbit.escape_rate(),
        rows,
    })
}

pub const GIBBS_CSV_HEADER: &str = "cylinder,frequency,length,ratio";

pub fn gibbs_to_csv(report: &GibbsReport) -> String {
    let mut out = String::from(GIBBS_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.word,
            fmt_f64(r.frequency),
            fmt_f64(r.length),
            fmt_f64(r.ratio)
        ));
    }
    out
}
