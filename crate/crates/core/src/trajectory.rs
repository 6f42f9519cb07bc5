//! Time series of observables produced by exact and mean-field propagation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Exact,
    ClassicalDrive,
    MeanField,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    /// `max_t | ‖ψ(t)‖ − 1 |`
    pub max_norm_drift: f64,
    /// Largest population found in any top Fock level.
    pub max_top_population: f64,
    pub truncation_flagged: bool,
    pub norm_warning: bool,
    /// Largest drift of the per-site Bloch invariant (mean-field runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_invariant_drift: Option<f64>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Column-major-by-name storage: `rows[i][c]` is column `c` at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
    /// Full state vectors at each output time, kept only on request.
    #[serde(skip)]
    pub states: Option<Vec<Vec<C64>>>,
}

/// Column names for a model with the given numbers of sites and modes.
///
/// Per site `s{l}_minus_re, s{l}_minus_im, s{l}_plus_re, s{l}_plus_im, s{l}_z`;
/// per field mode `a{k}_re, a{k}_im, n{k}, top{k}`; per phonon mode
/// `b{q}_re, b{q}_im, phtop{q}`; then `norm`, `energy`.
pub fn standard_columns(n_sites: usize, n_field: usize, n_phonon: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(5 * n_sites + 4 * n_field + 3 * n_phonon + 2);
    for l in 0..n_sites {
        for suffix in ["minus_re", "minus_im", "plus_re", "plus_im", "z"] {
            cols.push(format!("s{l}_{suffix}"));
        }
    }
    for k in 0..n_field {
        cols.extend([format!("a{k}_re"), format!("a{k}_im"), format!("n{k}"), format!("top{k}")]);
    }
    for q in 0..n_phonon {
        cols.extend([format!("b{q}_re"), format!("b{q}_im"), format!("phtop{q}")]);
    }
    cols.push("norm".into());
    cols.push("energy".into());
    cols
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind, columns: Vec<String>) -> Self {
        Self {
            kind,
            columns,
            times: Vec::new(),
            rows: Vec::new(),
            meta: TrajectoryMeta::default(),
            states: None,
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Complex series from a `{prefix}_re` / `{prefix}_im` column pair.
    pub fn complex_column(&self, prefix: &str) -> Option<Vec<C64>> {
        let re = self.column_index(&format!("{prefix}_re"))?;
        let im = self.column_index(&format!("{prefix}_im"))?;
        Some(self.rows.iter().map(|r| C64::new(r[re], r[im])).collect())
    }

    /// Either a real column or a complex pair; a real column becomes a
    /// complex series with zero imaginary part.
    pub fn series(&self, name: &str) -> Option<Vec<C64>> {
        self.complex_column(name)
            .or_else(|| self.column(name).map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect()))
    }

    /// Sum of `s{j}_z` over every site at each time.
    pub fn total_inversion(&self) -> Vec<f64> {
        let idx: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.starts_with('s') && c.ends_with("_z"))
            .map(|(i, _)| i)
            .collect();
        self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_layout() {
        let cols = standard_columns(2, 1, 1);
        assert_eq!(cols.len(), 10 + 4 + 3 + 2);
        assert_eq!(cols[0], "s0_minus_re");
        assert_eq!(cols[9], "s1_z");
        assert_eq!(cols[10], "a0_re");
        assert_eq!(cols[14], "b0_re");
        assert_eq!(cols.last().unwrap(), "energy");
    }

    #[test]
    fn series_access() {
        let mut tr = Trajectory::new(TrajectoryKind::Exact, standard_columns(2, 0, 0));
        let mut row = vec![0.0; tr.columns.len()];
        row[0] = 0.5;
        row[1] = -0.25;
        row[4] = 1.0;
        row[9] = -0.5;
        tr.push(0.0, row);
        assert_eq!(tr.complex_column("s0_minus").unwrap(), vec![C64::new(0.5, -0.25)]);
        assert_eq!(tr.series("s0_z").unwrap(), vec![C64::new(1.0, 0.0)]);
        assert_eq!(tr.total_inversion(), vec![0.5]);
        assert!(tr.column("nope").is_none());
    }
}
