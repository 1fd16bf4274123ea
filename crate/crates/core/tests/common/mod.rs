#![allow(dead_code)]

use dislox::dislocation::manufactured::mms_mesh;
use dislox::dislocation::Setup;
use dislox::fem::SlipField;
use dislox::material::{Admissibility, ElasticModel};
use dislox::mesh::Point;

pub const ADM: Admissibility = Admissibility { alpha0: 0.5, beta0: 1.0, m_bound: 40.0 };

/// Unit square with the standard fault; `ring` adds region 3 to Ω⁻.
pub fn square(n: usize, ring: bool) -> Setup {
    let (mesh, roles) = mms_mesh(n, false, ring).unwrap();
    Setup::new(mesh, roles).unwrap()
}

/// Same geometry with tractions on the whole boundary.
pub fn free_square(n: usize) -> Setup {
    let (mesh, mut roles) = mms_mesh(n, false, false).unwrap();
    roles.free_tags.extend(roles.sigma_tags.iter().copied());
    roles.sigma_tags.clear();
    Setup::new(mesh, roles).unwrap()
}

/// Graded material, identical on every region.
pub fn graded(regions: &[i32]) -> ElasticModel {
    let mut m = ElasticModel::homogeneous(regions, 1.5, 1.0, ADM);
    for l in m.regions.values_mut() {
        l.lambda = dislox::material::Affine::new([1.5, 0.5, 0.0]);
        l.mu = dislox::material::Affine::new([1.0, 0.0, 0.5]);
    }
    m
}

pub fn bump_slip(setup: &Setup, amp: f64, dir: Point) -> SlipField {
    SlipField::from_fn(&setup.mesh, &setup.ft, |x| {
        let r = (x[0] - 0.5) / 0.25;
        let w = if r.abs() >= 1.0 { 0.0 } else { amp * (1.0 - r * r).powi(2) };
        [w * dir[0], w * dir[1]]
    })
}

pub fn rel_l2(setup: &Setup, a: &[f64], b: &[f64]) -> f64 {
    let m = &setup.split.mesh;
    dislox::fem::norms::l2_difference(m, a, b) / dislox::fem::norms::l2_norm(m, b).max(f64::MIN_POSITIVE)
}
