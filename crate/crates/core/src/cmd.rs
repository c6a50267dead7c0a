//! Cross Model Distance (CMD) over generated-image, real-image and text
//! feature distributions.
//!
//! `CMD = Dis(f, r) + |Dis(f, l) − Dis(r, l)|` where `Dis` is the Fréchet
//! distance. The first term measures image quality; the second (ITDis)
//! measures how far the generated images drift from the text distribution
//! compared with real images.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frechet::{frechet_distance_detailed, trace_sqrt_product};
use crate::stats::GaussianStats;

/// Whether the ridge fallback fired for each pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RegularizationFlags {
    pub dis_fr: bool,
    pub dis_fl: bool,
    pub dis_rl: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmdReport {
    pub dis_fr: f64,
    pub dis_fl: f64,
    pub dis_rl: f64,
    pub itdis: f64,
    pub cmd: f64,
    pub regularized: RegularizationFlags,
}

fn check_triple(f: &GaussianStats, r: &GaussianStats, l: &GaussianStats) -> Result<()> {
    for other in [r, l] {
        if other.dim() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: other.dim(),
            });
        }
    }
    Ok(())
}

pub fn compute_cmd(f: &GaussianStats, r: &GaussianStats, l: &GaussianStats) -> Result<CmdReport> {
    check_triple(f, r, l)?;
    let fr = frechet_distance_detailed(f, r)?;
    let fl = frechet_distance_detailed(f, l)?;
    let rl = frechet_distance_detailed(r, l)?;
    let itdis = (fl.value - rl.value).abs();
    Ok(CmdReport {
        dis_fr: fr.value,
        dis_fl: fl.value,
        dis_rl: rl.value,
        itdis,
        cmd: fr.value + itdis,
        regularized: RegularizationFlags {
            dis_fr: fr.regularized,
            dis_fl: fl.regularized,
            dis_rl: rl.regularized,
        },
    })
}

/// The image-text consistency term `|Dis(f, l) − Dis(r, l)|`.
pub fn compute_itdis(f: &GaussianStats, r: &GaussianStats, l: &GaussianStats) -> Result<f64> {
    check_triple(f, r, l)?;
    let fl = frechet_distance_detailed(f, l)?;
    let rl = frechet_distance_detailed(r, l)?;
    Ok((fl.value - rl.value).abs())
}

/// CMD through its expanded form, branching on the sign of
/// `Dis(f, l) − Dis(r, l)`:
///
/// ```text
/// signed > 0:  2[(μf − μr)·(μf − μl) + Tr(εf − √(εf εl) + √(εr εl) − √(εf εr))]
/// signed < 0:  2[(μr − μf)·(μr − μl) + Tr(εr + √(εf εl) − √(εr εl) − √(εf εr))]
/// signed = 0:  Dis(f, r)
/// ```
///
/// Shares no code with [`compute_cmd`] beyond the trace-of-root primitive,
/// so the two serve as cross-checks of each other. No clamping or ridge
/// fallback is applied.
pub fn cmd_expanded(f: &GaussianStats, r: &GaussianStats, l: &GaussianStats) -> Result<f64> {
    check_triple(f, r, l)?;
    let (mf, mr, ml) = (f.mean(), r.mean(), l.mean());
    let (cf, cr, cl) = (f.cov(), r.cov(), l.cov());
    let root_fl = trace_sqrt_product(cf, cl)?;
    let root_rl = trace_sqrt_product(cr, cl)?;
    let root_fr = trace_sqrt_product(cf, cr)?;

    let signed_bias = (mf - ml).norm_squared() - (mr - ml).norm_squared() + cf.trace()
        - cr.trace()
        - 2.0 * root_fl
        + 2.0 * root_rl;

    let value = if signed_bias > 0.0 {
        2.0 * ((mf - mr).dot(&(mf - ml)) + cf.trace() - root_fl + root_rl - root_fr)
    } else if signed_bias < 0.0 {
        2.0 * ((mr - mf).dot(&(mr - ml)) + cr.trace() + root_fl - root_rl - root_fr)
    } else {
        (mf - mr).norm_squared() + cf.trace() + cr.trace() - 2.0 * root_fr
    };
    Ok(value)
}
