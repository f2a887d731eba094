//! Canonical forms and symmetry-orbit deduplication.

use crate::configuration::Configuration;

/// Coordinates snapped to a grid of spacing `grid`, points in order.
pub fn snapped(c: &Configuration, grid: f64) -> Vec<i64> {
    c.points().iter().flat_map(|p| p.iter().map(move |x| (x / grid).round() as i64)).collect()
}

/// The group image with the lexicographically smallest snapped coordinates,
/// together with that key.
pub fn canonical_form(c: &Configuration, grid: f64) -> (Configuration, Vec<i64>) {
    c.group_orbit()
        .into_iter()
        .map(|img| {
            let key = snapped(&img, grid);
            (img, key)
        })
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("the orbit contains the identity image")
}

/// Number of distinct group images (distance above `tolerance`).
pub fn orbit_size(c: &Configuration, tolerance: f64) -> usize {
    let mut distinct: Vec<Configuration> = Vec::new();
    for img in c.group_orbit() {
        if !distinct.iter().any(|d| d.distance(&img) <= tolerance) {
            distinct.push(img);
        }
    }
    distinct.len()
}

/// Keeps the first configuration of every symmetry orbit, in input order.
pub fn deduplicate(configs: Vec<Configuration>, tolerance: f64) -> Vec<Configuration> {
    let mut kept: Vec<Configuration> = Vec::new();
    for c in configs {
        if !kept.iter().any(|k| k.orbit_distance(&c) <= tolerance) {
            kept.push(c);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;
    use crate::symmetry::DihedralElement;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn reversal_and_dihedral_images_collapse() {
        let body = Arc::new(ConvexBody::unit_sphere(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<_> = (0..4).map(|_| body.sample_point(&mut rng).unwrap()).collect();
        let anchor = body.sample_point(&mut rng).unwrap();
        let closed = Configuration::closed_string(body.clone(), anchor, pts.clone()).unwrap();
        let out = deduplicate(vec![closed.clone(), closed.reflect_t().unwrap()], 1e-9);
        assert_eq!(out.len(), 1);
        let cyc = Configuration::cyclic(body, pts).unwrap();
        let images: Vec<_> = DihedralElement::all(4).into_iter().map(|g| cyc.dihedral_act(g).unwrap()).collect();
        assert_eq!(deduplicate(images.clone(), 1e-9).len(), 1);
        let keys: Vec<_> = images.iter().map(|c| canonical_form(c, 1e-7).1).collect();
        assert!(keys.iter().all(|k| *k == keys[0]));
        assert_eq!(orbit_size(&cyc, 1e-9), 8);
    }

    #[test]
    fn ellipse_axis_orbits_stay_distinct() {
        let body = Arc::new(ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap());
        let major = Configuration::cyclic(body.clone(), vec![v(&[2.0, 0.0]), v(&[-2.0, 0.0])]).unwrap();
        let minor = Configuration::cyclic(body, vec![v(&[0.0, 1.0]), v(&[0.0, -1.0])]).unwrap();
        assert_eq!(deduplicate(vec![major.clone(), minor, major.clone()], 2e-7).len(), 2);
        // a 2-bounce orbit is fixed by a reflection
        assert_eq!(orbit_size(&major, 1e-9), 2);
    }
}
