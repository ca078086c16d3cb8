//! Euclidean cone projections.
//!
//! Second-order blocks are laid out `(x, t)` with the scalar last, matching
//! the lowering convention. PSD and exponential projections are not
//! implemented: lowering may still emit those cones for export, but the
//! embedded solver refuses them.

use crate::conic::ConeKind;

#[derive(Debug, thiserror::Error)]
#[error("no projection implemented for the {0} cone")]
pub struct UnsupportedCone(pub &'static str);

/// Cones the embedded solver can project onto.
pub fn is_supported(kind: ConeKind) -> bool {
    matches!(
        kind,
        ConeKind::Zero | ConeKind::Free | ConeKind::NonNeg | ConeKind::SecondOrder
    )
}

/// Dual cone of each supported cone (NonNeg and SecondOrder are self-dual).
pub fn dual_kind(kind: ConeKind) -> ConeKind {
    match kind {
        ConeKind::Zero => ConeKind::Free,
        ConeKind::Free => ConeKind::Zero,
        other => other,
    }
}

/// Project `v` onto the cone in place.
pub fn project_in_place(kind: ConeKind, v: &mut [f64]) -> Result<(), UnsupportedCone> {
    match kind {
        ConeKind::Zero => v.iter_mut().for_each(|x| *x = 0.0),
        ConeKind::Free => {}
        ConeKind::NonNeg => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        ConeKind::SecondOrder => {
            let (x, t_slice) = v.split_at_mut(v.len() - 1);
            let t = t_slice[0];
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm <= t {
                // inside: unchanged
            } else if norm <= -t {
                x.iter_mut().for_each(|a| *a = 0.0);
                t_slice[0] = 0.0;
            } else {
                let scale = (norm + t) / 2.0;
                let inv = scale / norm;
                x.iter_mut().for_each(|a| *a *= inv);
                t_slice[0] = scale;
            }
        }
        ConeKind::Psd => return Err(UnsupportedCone("psd")),
        ConeKind::Exponential => return Err(UnsupportedCone("exp")),
    }
    Ok(())
}

/// Projection returning a fresh vector.
pub fn project(kind: ConeKind, v: &[f64]) -> Result<Vec<f64>, UnsupportedCone> {
    let mut out = v.to_vec();
    project_in_place(kind, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonneg_clamps() {
        assert_eq!(project(ConeKind::NonNeg, &[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn soc_interior_unchanged() {
        let v = vec![0.3, 0.4, 1.0];
        assert_eq!(project(ConeKind::SecondOrder, &v).unwrap(), v);
    }

    #[test]
    fn soc_boundary_formula() {
        // ((3, 4), 0) projects to ((1.5, 2), 2.5)
        let p = project(ConeKind::SecondOrder, &[3.0, 4.0, 0.0]).unwrap();
        assert!((p[0] - 1.5).abs() < 1e-15);
        assert!((p[1] - 2.0).abs() < 1e-15);
        assert!((p[2] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn soc_polar_interior_maps_to_origin() {
        let p = project(ConeKind::SecondOrder, &[0.1, 0.0, -1.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn psd_and_exp_are_refused() {
        assert!(project(ConeKind::Psd, &[1.0]).is_err());
        assert!(project(ConeKind::Exponential, &[1.0, 1.0, 1.0]).is_err());
    }
}
