//! End-to-end: eigenfunctions computed on the truncated cylinder, projected
//! onto the cross-sectional eigenbasis, satisfy the Gronwall-type bound.

use std::f64::consts::PI;

use num_complex::Complex64;

use cylspec::cylinder::{assemble_cylinder, eig_symmetric, symmetrize};
use cylspec::profiles::{
    exact_front, front_potential, make_cubic, periodic_wave, synth_example_potential, uniform_grid, BoundaryCondition,
    CrossSection, CylinderPotential,
};
use cylspec::spatial::{bnorm_curve, build_bisemigroup, gronwall_verify, project_trajectory};
use cylspec::sturm::limit_spectrum;

/// Runs the check on the `z ≥ 0` half of the leading weighted eigenfunction.
fn check(v: &CylinderPotential, c: f64, target: f64) {
    let op = symmetrize(&assemble_cylinder(v, c, BoundaryCondition::Dirichlet).unwrap()).unwrap();
    let res = eig_symmetric(&op, 2, target).unwrap();
    let pair = res.pairs.iter().max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re)).unwrap();
    let field: Vec<f64> = pair.vector.iter().map(|x| x.re).collect();

    let z = v.z_grid();
    let mid = z.len() / 2;
    let sp = limit_spectrum(v.cross_section(), v.v_plus(), None).unwrap();
    let traj = project_trajectory(&field, v.n_x(), z, &sp.eigenvectors, mid..z.len());
    let norms = traj.norms();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let norms: Vec<f64> = norms.iter().map(|n| n / scale).collect();

    let bs = build_bisemigroup(&sp.eigenvalues, Complex64::new(pair.lambda.re, 0.0), c).unwrap();
    let big_c = bs.projection_norms().into_iter().fold(0.0, f64::max);
    let m = big_c * norms[0].max(1.0);
    let (g_plus, _) = bnorm_curve(v);
    let rep = gronwall_verify(&traj.z, &norms, bs.nu, m, &g_plus[mid..]).unwrap();
    assert!(rep.pass, "violation {} > {}", rep.max_violation, rep.tol);
    assert!(rep.delta_hat > 0.5 * c.abs());
}

#[test]
fn allen_cahn_translation_mode() {
    let f = make_cubic(0.25).unwrap();
    let front = exact_front(&f, &uniform_grid(-20.0, 20.0, 801)).unwrap();
    check(&front_potential(&front).unwrap(), front.speed, 0.0);
}

#[test]
fn cylinder_eigenfunction_with_bump() {
    let f = make_cubic(0.5).unwrap();
    let l = 4.5 * PI;
    let wave = periodic_wave(&f, l, 1e-12).unwrap();
    let cs = CrossSection::interval(l, BoundaryCondition::Periodic, 31).unwrap();
    let z = uniform_grid(-20.0, 20.0, 401);
    let v = synth_example_potential(&f, &wave, 1.0, cs, z.clone()).unwrap();
    let bumped =
        CylinderPotential::from_fn(cs, z.clone(), |i, k| v.value(i, k) + (-z[k] * z[k] / 4.0).exp(), v.v_plus().to_vec(), v.v_minus().to_vec())
            .unwrap();
    check(&bumped, 0.5, 0.5);
}
