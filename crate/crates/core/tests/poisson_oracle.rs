use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hpde_core::poisson::{
    solve_poisson_dirichlet, solve_poisson_neumann, NeumannData, PoissonConfig, PoissonMethod,
};
use hpde_core::{Field2D, GridSpec};

fn footprint(nx: usize, ny: usize, lx: f64, ly: f64) -> GridSpec {
    GridSpec::new(lx, ly, 1.0, nx, ny, 4).unwrap()
}

/// Five-point Laplacian with `ghost = sign * inside` on every side.
fn five_point(g: &GridSpec, sign: f64) -> DMatrix<f64> {
    let n = g.nx * g.ny;
    let mut a = DMatrix::zeros(n, n);
    let (cx, cy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    for j in 0..g.ny {
        for i in 0..g.nx {
            let r = i + g.nx * j;
            a[(r, r)] -= 2.0 * (cx + cy);
            let mut link = |ok: bool, other: usize, c: f64| {
                if ok {
                    a[(r, other)] += c;
                } else {
                    a[(r, r)] += sign * c;
                }
            };
            link(i > 0, r.wrapping_sub(1), cx);
            link(i + 1 < g.nx, r + 1, cx);
            link(j > 0, r.wrapping_sub(g.nx), cy);
            link(j + 1 < g.ny, r + g.nx, cy);
        }
    }
    a
}

fn random_field(g: GridSpec, rng: &mut ChaCha8Rng) -> Field2D {
    Field2D::new(g, (0..g.nx * g.ny).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn dirichlet_matches_dense_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = footprint(8, 8, 1.0, 0.7);
    let a = five_point(&g, -1.0);
    let lu = a.lu();
    for _ in 0..5 {
        let f = random_field(g, &mut rng);
        let exact = lu.solve(&DVector::from_vec(f.data.clone())).unwrap();
        let q = solve_poisson_dirichlet(&f, &PoissonConfig::with_tol(1e-13)).unwrap().q;
        let err = (DVector::from_vec(q.data) - &exact).amax();
        assert!(err <= 1e-9 * exact.amax(), "err {err:e}");
    }
}

#[test]
fn neumann_matches_bordered_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = footprint(8, 8, 0.9, 1.1);
    let n = g.nx * g.ny;
    let a = five_point(&g, 1.0);
    let mut bordered = DMatrix::zeros(n + 1, n + 1);
    bordered.view_mut((0, 0), (n, n)).copy_from(&a);
    for r in 0..n {
        bordered[(r, n)] = 1.0;
        bordered[(n, r)] = 1.0;
    }
    let lu = bordered.lu();
    for _ in 0..5 {
        let mut data = NeumannData::zeros(g.nx, g.ny);
        for side in [&mut data.west, &mut data.east, &mut data.south, &mut data.north] {
            side.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        }
        // Make int f = oint g.
        let f = random_field(g, &mut rng);
        let shift = (data.boundary_integral(g.dx, g.dy) - f.integral()) / (g.lx * g.ly);
        let f = f.like(f.data.iter().map(|v| v + shift).collect());

        let mut rhs = f.data.clone();
        for j in 0..g.ny {
            rhs[j * g.nx] -= data.west[j] / g.dx;
            rhs[j * g.nx + g.nx - 1] -= data.east[j] / g.dx;
        }
        for i in 0..g.nx {
            rhs[i] -= data.south[i] / g.dy;
            rhs[(g.ny - 1) * g.nx + i] -= data.north[i] / g.dy;
        }
        rhs.push(0.0);
        let sol = lu.solve(&DVector::from_vec(rhs)).unwrap();
        let exact = sol.rows(0, n).into_owned();

        let out = solve_poisson_neumann(&f, &data, &PoissonConfig::with_tol(1e-13)).unwrap();
        assert!(out.compatibility_defect.abs() < 1e-12);
        let err = (DVector::from_vec(out.q.data) - &exact).amax();
        assert!(err <= 1e-9 * exact.amax(), "err {err:e}");
    }
}

#[test]
fn dense_method_agrees_with_cg() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = footprint(10, 7, 1.0, 1.0);
    let f = random_field(g, &mut rng);
    let dense = PoissonConfig {
        method: PoissonMethod::Dense,
        ..PoissonConfig::with_tol(1e-13)
    };
    let a = solve_poisson_dirichlet(&f, &dense).unwrap().q;
    let b = solve_poisson_dirichlet(&f, &PoissonConfig::with_tol(1e-13)).unwrap().q;
    assert!(a.add_scaled(-1.0, &b).max_abs() < 1e-10);
}

#[test]
fn neumann_zero_data_gives_zero() {
    let g = footprint(6, 6, 1.0, 1.0);
    let out = solve_poisson_neumann(&Field2D::zeros(g), &NeumannData::zeros(6, 6), &PoissonConfig::default())
        .unwrap();
    assert_eq!(out.q.max_abs(), 0.0);
}

#[test]
fn neumann_cosine_converges_at_second_order() {
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = footprint(n, n, 2.0, 1.0);
        let k = PI / g.lx;
        let exact = Field2D::from_fn(g, |x, _| (k * x).cos());
        let f = exact.scaled(-k * k);
        let q = solve_poisson_neumann(&f, &NeumannData::zeros(n, n), &PoissonConfig::with_tol(1e-13))
            .unwrap()
            .q;
        assert!(q.mean().abs() < 1e-12);
        errs.push(q.add_scaled(-1.0, &exact).max_abs());
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
    }
}

#[test]
fn incompatible_data_is_corrected_and_reported() {
    let g = footprint(8, 8, 1.0, 1.0);
    let f = Field2D::from_fn(g, |_, _| 1.0);
    let out = solve_poisson_neumann(&f, &NeumannData::zeros(8, 8), &PoissonConfig::default()).unwrap();
    assert!((out.compatibility_defect - 1.0).abs() < 1e-12);
    assert!(out.q.max_abs() < 1e-8);
}
