use perfhom::geometry::{
    build_perforated_domain_mesh, build_square_mesh, build_unit_cell_mesh, mesh_quality, read_mesh, write_mesh,
    BoundaryTag, CellGeometry, HoleShape, MeshError, QUALITY_FLOOR_DEG,
};
use proptest::prelude::*;
use std::f64::consts::PI;

const DISK_PORE_AREA: f64 = 1.0 - PI * 0.0625;

#[test]
fn disk_cell_area_close_to_analytic() {
    let mesh = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / 32.0).unwrap();
    assert!((mesh.area() - DISK_PORE_AREA).abs() <= 0.01, "{}", mesh.area());
}

#[test]
fn disk_cell_area_converges_at_second_order() {
    let err: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|n| (build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / n).unwrap().area() - DISK_PORE_AREA).abs())
        .collect();
    for w in err.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((1.8..2.2).contains(&rate), "errors {err:?}");
    }
}

#[test]
fn solid_cell_area_is_exactly_one() {
    let mesh = build_unit_cell_mesh(&CellGeometry::no_hole(), 1.0 / 8.0).unwrap();
    assert_eq!(mesh.area(), 1.0);
}

#[test]
fn square_hole_area_is_exact() {
    let mesh = build_unit_cell_mesh(&CellGeometry::square(0.25), 1.0 / 8.0).unwrap();
    assert!((mesh.area() - 0.75).abs() < 1e-14, "{}", mesh.area());
    assert!((mesh.boundary_length(BoundaryTag::Hole) - 2.0).abs() < 1e-14);
}

#[test]
fn hole_vertices_lie_on_the_circle_and_edges_within_second_order() {
    let h = 1.0 / 32.0;
    let mesh = build_unit_cell_mesh(&CellGeometry::disk(0.25), h).unwrap();
    let mut worst: f64 = 0.0;
    for [a, b] in mesh.edges_with_tag(BoundaryTag::Hole) {
        for p in [mesh.vertices[a], mesh.vertices[b]] {
            assert!(((p[0] - 0.5).hypot(p[1] - 0.5) - 0.25).abs() < 1e-14);
        }
        let m = [(mesh.vertices[a][0] + mesh.vertices[b][0]) / 2.0, (mesh.vertices[a][1] + mesh.vertices[b][1]) / 2.0];
        worst = worst.max(0.25 - (m[0] - 0.5).hypot(m[1] - 0.5));
    }
    assert!(worst < h * h, "sagitta {worst}");
}

#[test]
fn hole_touching_the_cell_boundary_is_rejected() {
    let e = build_unit_cell_mesh(&CellGeometry::disk(0.5), 1.0 / 16.0).unwrap_err();
    assert!(matches!(e, MeshError::GeometryError(_)), "{e}");
}

#[test]
fn generated_meshes_meet_the_quality_floor() {
    for shape in [HoleShape::Disk, HoleShape::Square] {
        for r in [0.05, 0.1, 0.2, 0.25, 0.3, 0.35] {
            for n in [8.0, 16.0, 32.0] {
                let geom = CellGeometry { shape, radius: r };
                let mesh = build_unit_cell_mesh(&geom, 1.0 / n).unwrap();
                let q = mesh_quality(&mesh).unwrap();
                assert!(q.min_angle_deg >= QUALITY_FLOOR_DEG, "{shape:?} r={r} n={n}: {}", q.min_angle_deg);
            }
        }
    }
}

#[test]
fn uniform_square_tiling_has_right_angles_halved() {
    let q = mesh_quality(&build_square_mesh(10)).unwrap();
    assert!((q.min_angle_deg - 45.0).abs() < 1e-9);
    assert!((q.area - 1.0).abs() < 1e-14);
}

#[test]
fn degenerate_triangle_fails_quality() {
    let mut mesh = build_square_mesh(2);
    let [a, b, _] = mesh.triangles[0];
    mesh.triangles[0] = [a, b, b];
    assert!(matches!(mesh_quality(&mesh), Err(MeshError::QualityFailure(_))));
}

#[test]
fn periodic_pairs_match_opposite_faces_one_to_one() {
    for geom in [CellGeometry::disk(0.25), CellGeometry::square(0.2), CellGeometry::no_hole()] {
        let mesh = build_unit_cell_mesh(&geom, 1.0 / 16.0).unwrap();
        let mut slaves = std::collections::HashSet::new();
        for &(m, s) in &mesh.periodic_pairs {
            assert!(slaves.insert(s), "slave {s} paired twice");
            let (pm, ps) = (mesh.vertices[m], mesh.vertices[s]);
            let dx = (ps[0] - pm[0]).abs();
            let dy = (ps[1] - pm[1]).abs();
            assert!(
                (dx == 1.0 && ps[1] == pm[1]) || (dy == 1.0 && ps[0] == pm[0]),
                "pair {pm:?} {ps:?} is not a face translate"
            );
        }
        // Following a pair and then the translate back returns to the start.
        let roots = mesh.periodic_roots();
        for (v, &(root, shift)) in roots.iter().enumerate() {
            let p = mesh.vertices[v];
            let q = mesh.vertices[root];
            assert_eq!([q[0] + shift[0] as f64, q[1] + shift[1] as f64], p);
        }
        // The faces x = 1 and y = 1 are exactly the slave side.
        let upper: std::collections::HashSet<usize> =
            (0..mesh.n_vertices()).filter(|&v| mesh.vertices[v][0] == 1.0 || mesh.vertices[v][1] == 1.0).collect();
        prop_assert_eq_sets(&slaves, &upper);
    }
}

fn prop_assert_eq_sets(a: &std::collections::HashSet<usize>, b: &std::collections::HashSet<usize>) {
    assert_eq!(a, b, "slave set differs from the upper faces");
}

#[test]
fn quarter_tiling_has_sixteen_holes() {
    let cell = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / 8.0).unwrap();
    let mesh = build_perforated_domain_mesh(&cell, 0.25).unwrap();
    let hole_edges = mesh.edges_with_tag(BoundaryTag::Hole).count();
    assert_eq!(hole_edges, 16 * cell.edges_with_tag(BoundaryTag::Hole).count());
    assert!((mesh.area() - cell.area()).abs() < 1e-12);
    assert!((mesh.area() - DISK_PORE_AREA).abs() < 0.01);
    assert!((mesh.boundary_length(BoundaryTag::Exterior) - 4.0).abs() < 1e-12);
}

#[test]
fn single_tile_is_the_cell_mesh_with_exterior_tags() {
    let cell = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / 8.0).unwrap();
    let mesh = build_perforated_domain_mesh(&cell, 1.0).unwrap();
    assert_eq!(mesh.n_vertices(), cell.n_vertices());
    assert_eq!(mesh.n_triangles(), cell.n_triangles());
    for (ct, mt) in cell.triangles.iter().zip(&mesh.triangles) {
        for a in 0..3 {
            assert_eq!(mesh.vertices[mt[a]], cell.vertices[ct[a]]);
        }
    }
    let hole = |m: &perfhom::geometry::Mesh| m.edges_with_tag(BoundaryTag::Hole).count();
    assert_eq!(hole(&mesh), hole(&cell));
    assert!((mesh.boundary_length(BoundaryTag::Exterior) - 4.0).abs() < 1e-14);
    assert!(mesh.periodic_pairs.is_empty());
}

#[test]
fn tile_vertices_are_bit_identical_to_scaled_cell_vertices() {
    let cell = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / 64.0).unwrap();
    let k = 8;
    let eps = 1.0 / k as f64;
    let mesh = build_perforated_domain_mesh(&cell, eps).unwrap();
    let nct = cell.n_triangles();
    for tj in 0..k {
        for ti in 0..k {
            for (c, tri) in cell.triangles.iter().enumerate() {
                let global = mesh.triangles[(tj * k + ti) * nct + c];
                for a in 0..3 {
                    let y = cell.vertices[tri[a]];
                    let x = mesh.vertices[global[a]];
                    assert_eq!(x[0].to_bits(), (eps * (y[0] + ti as f64)).to_bits());
                    assert_eq!(x[1].to_bits(), (eps * (y[1] + tj as f64)).to_bits());
                }
            }
        }
    }
}

#[test]
fn non_reciprocal_epsilon_is_a_tiling_error() {
    let cell = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / 8.0).unwrap();
    assert!(matches!(build_perforated_domain_mesh(&cell, 0.3), Err(MeshError::TilingError(_))));
}

#[test]
fn perforated_area_converges_with_the_cell_area() {
    let err: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|n| {
            let cell = build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / n).unwrap();
            (build_perforated_domain_mesh(&cell, 0.25).unwrap().area() - DISK_PORE_AREA).abs()
        })
        .collect();
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
}

fn geometry_strategy() -> impl Strategy<Value = CellGeometry> {
    prop_oneof![
        (0.05f64..0.4).prop_map(CellGeometry::disk),
        (0.05f64..0.35).prop_map(CellGeometry::square),
        Just(CellGeometry::no_hole()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_text_round_trips_bit_exactly(geom in geometry_strategy(), n in 4usize..20, k in 1usize..4) {
        let cell = build_unit_cell_mesh(&geom, 1.0 / n as f64).unwrap();
        for mesh in [cell.clone(), build_perforated_domain_mesh(&cell, 1.0 / k as f64).unwrap()] {
            let text = write_mesh(&mesh, &["config 0123".to_string()]);
            let back = read_mesh(&text).unwrap();
            prop_assert_eq!(&back, &mesh);
            prop_assert_eq!(back.hash(), mesh.hash());
        }
    }

    #[test]
    fn triangles_are_positively_oriented(geom in geometry_strategy(), n in 4usize..24) {
        let mesh = build_unit_cell_mesh(&geom, 1.0 / n as f64).unwrap();
        for t in 0..mesh.n_triangles() {
            prop_assert!(mesh.signed_area(t) > 0.0);
        }
        prop_assert!((mesh.area() - geom.pore_area()).abs() < 4.0 / (n * n) as f64);
    }
}
