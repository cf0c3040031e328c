//! JSON file formats: matrix sets, decomposition reports, and optimizer
//! reports. Matrices are nested arrays of `[re, im]` pairs; doubles survive
//! a write/read round trip bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wdfs_core::mat::{self, C64, CMat};
use wdfs_core::wedderburn::{Side, SimpleComponent, WedderburnStructure};
use wdfs_core::{tol, Decomposition, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Kraus,
    HermitianGenerators,
    CommutantBasis,
}

/// One complex matrix as row-major `[re, im]` pairs.
pub type MatrixPayload = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_payload(a: &CMat) -> MatrixPayload {
    a.rows()
        .into_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn payload_to_matrix(p: &MatrixPayload, n: usize) -> Result<CMat> {
    if p.len() != n || p.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix payload is not {n}×{n}"
        )));
    }
    let mut out = mat::czeros(n, n);
    for (i, row) in p.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            out[[i, j]] = C64::new(re, im);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSetFile {
    pub n: usize,
    pub kind: MatrixKind,
    pub label: String,
    /// Seed the matrices were generated from, when they came from a
    /// seeded source.
    pub seed: Option<u64>,
    pub ops: Vec<MatrixPayload>,
}

impl MatrixSetFile {
    pub fn from_matrices(
        kind: MatrixKind,
        label: impl Into<String>,
        seed: Option<u64>,
        mats: &[CMat],
    ) -> Self {
        Self {
            n: mats.first().map_or(0, |a| a.nrows()),
            kind,
            label: label.into(),
            seed,
            ops: mats.iter().map(matrix_to_payload).collect(),
        }
    }

    /// Dimension/finiteness checks plus the Kraus normalization policy:
    /// defect ≤ 10⁻⁸ is clean, ≤ 10⁻⁶ earns a warning, beyond is rejected.
    /// Returns the warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(Error::EmptyInput("matrix set dimension"));
        }
        if self.ops.is_empty() {
            return Err(Error::EmptyInput("matrix set operator list"));
        }
        let mats = self.matrices()?;
        let mut warnings = Vec::new();
        if self.kind == MatrixKind::Kraus {
            let mut sum = mat::czeros(self.n, self.n);
            for a in &mats {
                sum = sum + mat::dagger(a).dot(a);
            }
            let defect = mat::fro_norm(&(sum - mat::eye(self.n)));
            if defect > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "Kraus set is not trace preserving: ‖ΣA†A − I‖_F = {defect:.3e}"
                )));
            }
            if defect > 1e-8 {
                warnings.push(format!(
                    "Kraus normalization defect {defect:.3e} exceeds 1e-8; proceeding"
                ));
            }
        }
        Ok(warnings)
    }

    pub fn matrices(&self) -> Result<Vec<CMat>> {
        self.ops
            .iter()
            .map(|p| payload_to_matrix(p, self.n))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideTag {
    Algebra,
    Commutant,
}

impl From<Side> for SideTag {
    fn from(s: Side) -> Self {
        match s {
            Side::Algebra => SideTag::Algebra,
            Side::Commutant => SideTag::Commutant,
        }
    }
}

impl From<SideTag> for Side {
    fn from(s: SideTag) -> Self {
        match s {
            SideTag::Algebra => Side::Algebra,
            SideTag::Commutant => Side::Commutant,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub n_i: usize,
    pub m_i: usize,
    pub offset: usize,
}

/// Structure-derived dimension counts, always relative to the original
/// input algebra: `dim_algebra` counts its span, `dim_commutant` its
/// commutant's, whichever side was decomposed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counting {
    pub sum_nm: usize,
    pub dim_algebra: usize,
    pub dim_commutant: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub side: SideTag,
    pub n: usize,
    pub seed: u64,
    pub label: String,
    /// "verified" or "unverified"; the latter carries diagnostics only.
    pub status: String,
    pub residual: f64,
    pub attempts: u32,
    pub components: Vec<ComponentEntry>,
    pub counting: Counting,
    /// Indices of components whose protected factor stores more than a
    /// scalar.
    pub useful_dfs: Vec<usize>,
    pub unitary: MatrixPayload,
}

pub fn counting_for(side: Side, components: &[ComponentEntry]) -> Counting {
    let sum_nm = components.iter().map(|c| c.n_i * c.m_i).sum();
    let native: usize = components.iter().map(|c| c.n_i * c.n_i).sum();
    let dual: usize = components.iter().map(|c| c.m_i * c.m_i).sum();
    let (dim_algebra, dim_commutant) = match side {
        Side::Algebra => (native, dual),
        Side::Commutant => (dual, native),
    };
    Counting {
        sum_nm,
        dim_algebra,
        dim_commutant,
    }
}

impl DecompositionReport {
    /// Builds the report from a finished decomposition. The stored residual
    /// is recomputed against `gs` (the original input generators) so that a
    /// later re-verification from the same file reproduces it exactly; for
    /// commutant-side runs this is the dual-pattern residual.
    pub fn from_decomposition(
        label: impl Into<String>,
        seed: u64,
        dec: &Decomposition,
        gs: &wdfs_core::GeneratorSet,
    ) -> Self {
        let ws = &dec.structure;
        let residual = wdfs_core::wedderburn::verify_structure(gs, ws);
        let components: Vec<ComponentEntry> = ws
            .components
            .iter()
            .map(|c| ComponentEntry {
                n_i: c.block_size,
                m_i: c.multiplicity,
                offset: c.offset,
            })
            .collect();
        let useful_dfs = (0..ws.components.len())
            .filter(|&i| ws.protected_dim(i) > 1)
            .collect();
        Self {
            side: ws.side.into(),
            n: ws.dim(),
            seed,
            label: label.into(),
            status: "verified".into(),
            residual,
            attempts: dec.attempts,
            counting: counting_for(ws.side, &components),
            components,
            useful_dfs,
            unitary: matrix_to_payload(&ws.unitary),
        }
    }

    /// Diagnostics-only report for a run whose best attempt failed
    /// verification.
    pub fn unverified(
        label: impl Into<String>,
        side: Side,
        n: usize,
        seed: u64,
        attempts: u32,
        residual: f64,
    ) -> Self {
        Self {
            side: side.into(),
            n,
            seed,
            label: label.into(),
            status: "unverified".into(),
            residual,
            attempts,
            components: Vec::new(),
            counting: Counting {
                sum_nm: 0,
                dim_algebra: 0,
                dim_commutant: 0,
            },
            useful_dfs: Vec::new(),
            unitary: Vec::new(),
        }
    }

    /// Rebuilds the structure payload; errors on unverified or malformed
    /// reports.
    pub fn structure(&self) -> Result<WedderburnStructure> {
        if self.status != "verified" {
            return Err(Error::InvalidInput(format!(
                "report has status \"{}\", no structure to rebuild",
                self.status
            )));
        }
        let unitary = payload_to_matrix(&self.unitary, self.n)?;
        let components: Vec<SimpleComponent> = self
            .components
            .iter()
            .map(|c| SimpleComponent {
                block_size: c.n_i,
                multiplicity: c.m_i,
                member_clusters: Vec::new(),
                offset: c.offset,
            })
            .collect();
        let total: usize = components.iter().map(|c| c.dim()).sum();
        if total != self.n {
            return Err(Error::DimensionMismatch(format!(
                "components cover {total} of {} coordinates",
                self.n
            )));
        }
        let mut expected = 0;
        for c in &components {
            if c.offset != expected {
                return Err(Error::InvalidInput(format!(
                    "component offset {} does not tile the space (expected {expected})",
                    c.offset
                )));
            }
            expected += c.dim();
        }
        Ok(WedderburnStructure {
            unitary,
            components,
            side: self.side.into(),
        })
    }

    /// Re-derives counting and the DFS list from the stored components and
    /// compares with the stored values.
    pub fn check_consistency(&self) -> Result<()> {
        if self.status != "verified" {
            return Ok(());
        }
        let counting = counting_for(self.side.into(), &self.components);
        if counting.sum_nm != self.counting.sum_nm
            || counting.dim_algebra != self.counting.dim_algebra
            || counting.dim_commutant != self.counting.dim_commutant
        {
            return Err(Error::InvalidInput(
                "stored counting disagrees with the component list".into(),
            ));
        }
        if counting.sum_nm != self.n {
            return Err(Error::InvalidInput(format!(
                "components account for {} of {} dimensions",
                counting.sum_nm, self.n
            )));
        }
        let ws = self.structure()?;
        let useful: Vec<usize> = (0..ws.components.len())
            .filter(|&i| ws.protected_dim(i) > 1)
            .collect();
        if useful != self.useful_dfs {
            return Err(Error::InvalidInput(
                "stored DFS index list disagrees with the component list".into(),
            ));
        }
        if !self.residual.is_finite() || self.residual > tol::VERIFY_RESIDUAL {
            return Err(Error::InvalidInput(format!(
                "verified report stores residual {:.3e} above {:.0e}",
                self.residual,
                tol::VERIFY_RESIDUAL
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdfsRunRow {
    pub init: String,
    pub seed: Option<u64>,
    pub j_init: f64,
    pub j_min: f64,
    pub iterations: usize,
    pub termination: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdfsReport {
    pub n: usize,
    /// (noisy, logical) factor dimensions of the candidate.
    pub shape: [usize; 2],
    pub seed: u64,
    pub label: String,
    pub rows: Vec<AdfsRunRow>,
    pub best_row: usize,
    pub j_min: f64,
    /// J along the best run: initial value plus one entry per accepted step.
    pub trace: Vec<f64>,
    pub line_search_warnings: bool,
    pub u_opt: MatrixPayload,
}

impl AdfsReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_payload_round_trip_is_bit_exact() {
        let a: CMat = array![
            [C64::new(0.1 + 0.2, -1.0 / 3.0), C64::new(f64::MIN_POSITIVE, 1e300)],
            [C64::new(-0.0, 2.0_f64.sqrt()), C64::new(std::f64::consts::PI, -1e-308)]
        ];
        let payload = matrix_to_payload(&a);
        let text = serde_json::to_string(&payload).unwrap();
        let parsed: MatrixPayload = serde_json::from_str(&text).unwrap();
        let back = payload_to_matrix(&parsed, 2).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    // Hand-picked constants parse exactly even on serde_json's default lossy
    // fast path; a bit-pattern sweep is what actually exercises the
    // float_roundtrip feature this format depends on.
    #[test]
    fn random_bit_patterns_round_trip_through_json() {
        let mut values = Vec::new();
        let mut i = 0;
        while values.len() < 4096 {
            let x = f64::from_bits(wdfs_core::seed::sub_seed(0xF10A7, i));
            i += 1;
            if x.is_finite() {
                values.push(x);
            }
        }
        let text = serde_json::to_string(&values).unwrap();
        let parsed: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (x, y) in values.iter().zip(parsed.iter()) {
            assert_eq!(x.to_bits(), y.to_bits(), "{x:e} did not survive JSON");
        }
    }

    #[test]
    fn kraus_validation_bands() {
        let ok = MatrixSetFile::from_matrices(MatrixKind::Kraus, "id", None, &[mat::eye(2)]);
        assert!(ok.validate().unwrap().is_empty());

        let mut warn = ok.clone();
        warn.ops[0][0][0][0] = 1.0 + 3e-8;
        assert_eq!(warn.validate().unwrap().len(), 1);

        let mut bad = ok.clone();
        bad.ops[0][0][0][0] = 1.1;
        assert!(bad.validate().is_err());

        let mut nan = ok;
        nan.ops[0][1][1][0] = f64::NAN;
        assert!(nan.validate().is_err());
    }

    #[test]
    fn counting_flips_with_side() {
        let comps = vec![
            ComponentEntry { n_i: 2, m_i: 1, offset: 0 },
            ComponentEntry { n_i: 3, m_i: 3, offset: 2 },
            ComponentEntry { n_i: 1, m_i: 5, offset: 11 },
        ];
        let a = counting_for(Side::Algebra, &comps);
        assert_eq!((a.sum_nm, a.dim_algebra, a.dim_commutant), (16, 14, 35));
        let c = counting_for(Side::Commutant, &comps);
        assert_eq!((c.sum_nm, c.dim_algebra, c.dim_commutant), (16, 35, 14));
    }
}
