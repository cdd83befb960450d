//! Rigidity mechanisms: torsion reduction, short-time heat content,
//! curvature constancy, interior-surface overdetermination and the
//! per-eigenspace pairing test.

mod gamma;
mod heat_content;
mod interior;
mod torsion;

pub use gamma::{heat_pairings, mode_gammas, zero_average_test_functions, GammaEntry, RNG_NAME, TEST_MODES};
pub use heat_content::{
    fit_short_time, heat_content, heat_content_experiment, HeatContentFit, HeatContentReport, HeatContentSample,
    HeatContentTargets, Window, HARMONIC_TOL, MAX_CONDITION,
};
pub use interior::{interior_surface_check, InterfaceFluxEntry, InteriorReport, TraceEntry};
pub use torsion::{serrin_check, torsion, TorsionPair};

use crate::error::Result;
use crate::geometry::{boundary_curvature, Mesh};

/// Spread of the discrete curvature along the outer boundary loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub mean: f64,
    pub std: f64,
    /// `std / |mean|`.
    pub relative_std: f64,
    /// Number of vertices with collinear neighbours.
    pub degenerate: usize,
    /// `false` for polygonal domains, whose corners carry the curvature.
    pub smooth: bool,
}

pub fn curvature_constancy_check(mesh: &Mesh) -> Result<CurvatureReport> {
    let profile = boundary_curvature(mesh, 0)?;
    let (mean, std) = profile.mean_and_std();
    let smooth = mesh.spec.as_ref().is_none_or(|s| s.is_smooth());
    if !smooth {
        log::warn!("curvature check on a polygonal domain: corners are outside the smooth theory");
    }
    Ok(CurvatureReport { mean, std, relative_std: std / mean.abs(), degenerate: profile.degenerate.len(), smooth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};

    #[test]
    fn curvature_spread() {
        let disk = curvature_constancy_check(&make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap()).unwrap();
        assert!(disk.relative_std <= 0.02);
        let ell = curvature_constancy_check(&make_domain(&DomainSpec::ellipse(1.5, 1.0, 0.05)).unwrap()).unwrap();
        assert!(ell.relative_std >= 0.2, "{}", ell.relative_std);
        let rad = curvature_constancy_check(&make_domain(&DomainSpec::radial(0.05, 3, 0.05)).unwrap()).unwrap();
        assert!(rad.relative_std >= 0.05, "{}", rad.relative_std);
    }
}
