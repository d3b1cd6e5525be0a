use ctmc_localtime::density::density_integral;
use ctmc_localtime::oracles::quad::exp_sinh;
use ctmc_localtime::oracles::SimplexResolution;
use ctmc_localtime::{Generator, RangeSpec};
use nalgebra::DMatrix;

/// `int_0^inf E_a[exp(<v - lam, l_T>) 1{X_T = b, R_T = R}] dT` by inclusion-exclusion of
/// resolvent entries over the sub-ranges containing `a` and `b`.
fn resolvent_side(gen: &Generator, spec: &RangeSpec, v: &[f64], lam: f64) -> f64 {
    let r = spec.range();
    let m = r.len();
    let (a, b) = (spec.start_local(), spec.end_local());
    let mut total = 0.0;
    for mask in 1u32..1 << m {
        if mask >> a & 1 == 0 || mask >> b & 1 == 0 {
            continue;
        }
        let members: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let k = members.len();
        let sub: Vec<usize> = members.iter().map(|&i| r[i]).collect();
        let a_s = gen.submatrix(&sub);
        let mut mtx = DMatrix::from_fn(k, k, |i, j| -a_s[(i, j)]);
        for (i, &x) in members.iter().enumerate() {
            mtx[(i, i)] += lam - v[x];
        }
        let inv = mtx.try_inverse().expect("invertible");
        let ia = members.iter().position(|&x| x == a).unwrap();
        let ib = members.iter().position(|&x| x == b).unwrap();
        let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * inv[(ia, ib)];
    }
    total
}

fn density_side(gen: &Generator, spec: &RangeSpec, v: &[f64], lam: f64, nodes: usize) -> f64 {
    let (ts, ws) = exp_sinh(1.0 / 16.0);
    let mut total = 0.0;
    for (t, w) in ts.iter().zip(&ws) {
        if lam * t > 600.0 || *t < 1e-10 {
            continue;
        }
        let f = |l: &[f64]| l.iter().zip(v).map(|(x, vx)| x * vx).sum::<f64>().exp();
        let r = density_integral(gen, spec, *t, f, SimplexResolution::Grid { nodes }, 1e-12).unwrap();
        total += w * (-lam * t).exp() * r.value;
    }
    total
}

fn check(gen: &Generator, spec: &RangeSpec, v: &[f64], lam: f64, nodes: usize, tol: f64) {
    let lhs = density_side(gen, spec, v, lam, nodes);
    let rhs = resolvent_side(gen, spec, v, lam);
    let rel = (lhs - rhs).abs() / rhs.abs();
    assert!(rel < tol, "lam {lam}: density side {lhs}, resolvent side {rhs}, rel {rel:e}");
}

#[test]
fn two_state_transform_matches_resolvent() {
    let gen = Generator::two_state(1.0, 2.0).unwrap();
    for (a, b) in [(0, 0), (0, 1), (1, 0)] {
        let spec = RangeSpec::new(&gen, &[0, 1], a, b).unwrap();
        for lam in [0.5, 1.0, 3.0] {
            check(&gen, &spec, &[-0.3, -1.1], lam, 64, 1e-6);
        }
    }
}

#[test]
fn killed_range_transform_matches_resolvent() {
    let gen = Generator::from_rows(&[vec![-1.5, 1.0, 0.5], vec![0.7, -1.2, 0.5], vec![0.3, 0.9, -1.2]]).unwrap();
    let spec = RangeSpec::new(&gen, &[0, 1], 0, 1).unwrap();
    check(&gen, &spec, &[0.0, -0.5], 1.0, 64, 1e-6);
}

#[test]
fn three_state_transform_matches_resolvent() {
    let gen = Generator::from_rows(&[vec![-1.5, 1.0, 0.5], vec![0.7, -1.2, 0.5], vec![0.3, 0.9, -1.2]]).unwrap();
    for (a, b) in [(0, 0), (0, 2)] {
        let spec = RangeSpec::new(&gen, &[0, 1, 2], a, b).unwrap();
        check(&gen, &spec, &[-0.2, 0.0, -0.4], 1.5, 32, 1e-4);
    }
}
