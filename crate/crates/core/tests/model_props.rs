mod common;

use common::benchmark_fd;
use dclqr::model::{
    benchmark_jacobians, load_vertices, parse_vertices, save_vertices, vertices_from_grid, BenchmarkPlant,
    DifferenceInclusion, GridPoint, Plant, VertexSystem,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn jacobians_match_central_differences(
        x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, u in -3.0f64..3.0, theta in 0.0f64..0.5,
    ) {
        let (a, b) = benchmark_jacobians([x1, x2], u, theta);
        let (fa, fb) = benchmark_fd([x1, x2], u, theta);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!(rel_close(a[i][j], fa[i][j], 1e-5), "A[{i}][{j}] {} vs {}", a[i][j], fa[i][j]);
            }
            prop_assert!(rel_close(b[i], fb[i], 1e-5));
        }
    }

    #[test]
    fn plant_trait_agrees_with_free_functions(x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, u in -2.0f64..2.0) {
        let plant = BenchmarkPlant::default();
        let x = DVector::from_vec(vec![x1, x2]);
        let uv = DVector::from_vec(vec![u]);
        let (a, b) = plant.jacobians(&x, &uv);
        let (fa, fb) = benchmark_jacobians([x1, x2], u, 1.0 / 6.0);
        prop_assert_eq!(a, DMatrix::from_row_slice(2, 2, &[fa[0][0], fa[0][1], fa[1][0], fa[1][1]]));
        prop_assert_eq!(b, DMatrix::from_row_slice(2, 1, &fb));
    }

    #[test]
    fn linear_plant_has_one_vertex_value(points in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 1..30)) {
        let grid: Vec<_> = points.iter().map(|&(a, b, c)| GridPoint {
            state: DVector::from_vec(vec![a, b]),
            input: DVector::from_vec(vec![c]),
        }).collect();
        let inc = vertices_from_grid(&BenchmarkPlant::new(0.0), &grid).unwrap();
        prop_assert_eq!(inc.len(), grid.len());
        let a0 = DMatrix::from_row_slice(2, 2, &[0.98, 0.1, 0.0, 0.95]);
        let b0 = DMatrix::from_row_slice(2, 1, &[0.0, 0.1]);
        for v in inc.vertices() {
            prop_assert_eq!(&v.a, &a0);
            prop_assert_eq!(&v.b, &b0);
        }
    }

    #[test]
    fn grid_order_is_preserved(points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..20)) {
        let plant = BenchmarkPlant::default();
        let grid: Vec<_> = points.iter().map(|&(a, b, c)| GridPoint {
            state: DVector::from_vec(vec![a, b]),
            input: DVector::from_vec(vec![c]),
        }).collect();
        let inc = vertices_from_grid(&plant, &grid).unwrap();
        for (v, p) in inc.vertices().iter().zip(&grid) {
            let (a, b) = plant.jacobians(&p.state, &p.input);
            prop_assert_eq!(&v.a, &a);
            prop_assert_eq!(&v.b, &b);
        }
    }

    #[test]
    fn vertex_file_round_trip(
        rx in 1usize..4, ru in 1usize..3, n in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let vertices = (0..n)
            .map(|_| VertexSystem::new(common::gaussian_matrix(&mut rng, rx, rx), common::gaussian_matrix(&mut rng, rx, ru)))
            .collect();
        let inc = DifferenceInclusion::new(vertices).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        save_vertices(&inc, &path).unwrap();
        let back = load_vertices(&path).unwrap();
        prop_assert_eq!(back.vertices(), inc.vertices());
    }
}

#[test]
fn mismatched_b_rows_rejected() {
    let text = r#"{"r_x": 2, "r_u": 1, "vertices": [{"A": [[1, 0], [0, 1]], "B": [[1], [0], [2]]}]}"#;
    assert!(parse_vertices(text).is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_vertices("/definitely/not/here.json").unwrap_err();
    assert!(matches!(err, dclqr::Error::Io(_)));
}
