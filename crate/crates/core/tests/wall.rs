use brickscan_core::geom::Vec3;
use brickscan_core::mesh::TriangleMesh;
use brickscan_core::pipeline::load_pattern_text;
use brickscan_core::wall::obj::{obj_string, read_obj};
use brickscan_core::wall::{
    generate_brick, generate_wall, parse_pattern, parse_pattern_with, BrickKind, BrickSpec, BrickType, Orientation,
    PatternConfig, WallError,
};
use proptest::prelude::*;

fn pattern_44c() -> String {
    load_pattern_text("44c").unwrap()
}

#[test]
fn three_stretchers_parse_with_natural_and_unit_spans() {
    let p = parse_pattern::<f64>("H H H").unwrap();
    assert_eq!((p.rows, p.cols), (1, 12));
    assert_eq!(p.placements.len(), 3);
    assert!(p.placements.iter().all(|pl| pl.kind == BrickKind::H && pl.span == 4));

    let unit = PatternConfig::<f64> { h_span: 1, v_span: 1, l_span: 1, ..PatternConfig::default() };
    let p = parse_pattern_with::<f64>("H H H", &unit).unwrap();
    assert_eq!((p.rows, p.cols), (1, 3));
    assert!(p.placements.iter().all(|pl| pl.span == 1));
    assert_eq!(p.placements.iter().map(|pl| pl.col).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn overlap_shape_and_token_errors() {
    // A V2 in the first row runs down into the second row's first cell.
    assert_eq!(parse_pattern::<f64>("V2 H1\nH2").unwrap_err(), WallError::PatternOverlap { row: 1, col: 0 });
    assert!(matches!(parse_pattern::<f64>("H1 H1\nH1"), Err(WallError::PatternShape(_))));
    assert!(matches!(parse_pattern::<f64>("H1 X"), Err(WallError::PatternToken { line: 1, .. })));
    assert!(matches!(parse_pattern::<f64>("# only a comment\n"), Err(WallError::PatternShape(_))));
}

#[test]
fn band_44c_placement_count_matches_hand_count() {
    // Counted by hand in the file: 5 + 5 long stretchers, 6 soldiers,
    // 6 columns of 4 stacked stretchers.
    let p = parse_pattern::<f64>(&pattern_44c()).unwrap();
    assert_eq!(p.placements.len(), 40);
    assert_eq!(p.count(BrickKind::L), 10);
    assert_eq!(p.count(BrickKind::V), 6);
    assert_eq!(p.count(BrickKind::H), 24);
    assert_eq!(p.rows, 6);
}

#[test]
fn ideal_brick_is_the_nominal_box() {
    let spec = BrickSpec::<f64>::ideal();
    let mesh = generate_brick(&spec, 3).unwrap();
    mesh.validate().unwrap();
    let ext = mesh.bounds().extent();
    assert_eq!((ext.x, ext.y, ext.z), (spec.face_length, spec.face_height, spec.depth));
    assert_eq!(mesh.triangles.len(), 12);
}

#[test]
fn brick_generation_is_deterministic() {
    let spec = BrickSpec::<f64>::default();
    let a = generate_brick(&spec, 11).unwrap();
    let b = generate_brick(&spec, 11).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.vertices, generate_brick(&spec, 12).unwrap().vertices);
}

#[test]
fn length_jitter_population_statistics() {
    let spec = BrickSpec::<f64> { length_jitter_sd: 2.0, ..BrickSpec::ideal() };
    let lengths: Vec<f64> = (0..1000).map(|s| generate_brick(&spec, s).unwrap().bounds().extent().x).collect();
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let sd = (lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - spec.face_length).abs() <= 0.2, "mean {mean}");
    assert!((sd - 2.0).abs() <= 0.25, "sd {sd}");
}

#[test]
fn stretcher_row_gaps_equal_the_joint() {
    let p = parse_pattern::<f64>("H H H").unwrap();
    let wall = generate_wall(&p, &BrickSpec::ideal(), 1).unwrap();
    let a = &wall.annotations;
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|x| (x.rect.w, x.rect.h, x.rect.y) == (a[0].rect.w, a[0].rect.h, a[0].rect.y)));
    for pair in a.windows(2) {
        assert!((pair[1].rect.x - pair[0].rect.right() - p.joint).abs() < 1e-9);
    }
}

#[test]
fn empty_pattern_is_mortar_only() {
    let p = parse_pattern::<f64>(". . .\n. . .").unwrap();
    let wall = generate_wall(&p, &BrickSpec::default(), 1).unwrap();
    assert!(wall.annotations.is_empty());
    assert_eq!(wall.mesh.triangles.len(), 12);
}

#[test]
fn band_44c_wall_matches_its_pattern() {
    let p = parse_pattern::<f64>(&pattern_44c()).unwrap();
    let wall = generate_wall(&p, &BrickSpec::default(), 7).unwrap();
    assert_eq!(wall.annotations.len(), p.placements.len());
    let mut ids: Vec<u32> = wall.annotations.iter().map(|a| a.brick_id).collect();
    ids.dedup();
    assert_eq!(ids.len(), wall.annotations.len());
    for a in &wall.annotations {
        assert!(a.rect.w > 0.0 && a.rect.h > 0.0);
        if a.orientation == Orientation::V {
            assert!(a.rect.h > a.rect.w);
        }
    }
    let longs = wall.annotations.iter().filter(|a| a.brick_type == BrickType::Long).count();
    assert_eq!(longs, 10);
    let b = wall.mesh.bounds();
    for a in &wall.annotations {
        assert!(a.rect.x >= b.min.x && a.rect.right() <= b.max.x && a.rect.y >= b.min.y && a.rect.top() <= b.max.y);
    }
    wall.mesh.validate().unwrap();
}

#[test]
fn ideal_annotations_are_the_exact_front_faces() {
    let p = parse_pattern::<f64>(&pattern_44c()).unwrap();
    let wall = generate_wall(&p, &BrickSpec::ideal(), 0).unwrap();
    let front: Vec<Vec3<f64>> = wall.mesh.vertices.iter().copied().filter(|v| v.z == 0.0).collect();
    assert_eq!(front.len(), 4 * wall.annotations.len());
    for a in &wall.annotations {
        let r = &a.rect;
        for (x, y) in [(r.x, r.y), (r.right(), r.y), (r.x, r.top()), (r.right(), r.top())] {
            let hit = front.iter().any(|v| (v.x - x).abs() < 1e-9 && (v.y - y).abs() < 1e-9);
            assert!(hit, "corner ({x}, {y}) of brick {} missing", a.brick_id);
        }
    }
}

#[test]
fn pitch_mismatch_is_reported() {
    let p = parse_pattern::<f64>("H H").unwrap();
    let tall = BrickSpec::<f64> { face_height: 50.0, ..BrickSpec::ideal() };
    assert!(matches!(generate_wall(&p, &tall, 0), Err(WallError::GridPitchMismatch(_))));
}

#[test]
fn single_triangle_obj() {
    let mesh = TriangleMesh::new(
        vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.5)],
        vec![[0, 1, 2]],
    );
    let text = obj_string(&mesh);
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 1);
    assert_eq!(read_obj::<f64>(text.as_bytes()).unwrap(), mesh);
}

#[test]
fn obj_errors() {
    let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    assert!(matches!(read_obj::<f64>(quad.as_bytes()), Err(WallError::ObjFace { line: 5, vertices: 4 })));
    let oob = "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 4\n";
    assert!(matches!(read_obj::<f64>(oob.as_bytes()), Err(WallError::ObjIndex { line: 4, index: 4 })));
    let junk = "v 0 zero 0\n";
    assert!(matches!(read_obj::<f64>(junk.as_bytes()), Err(WallError::ObjSyntax { line: 1, .. })));
}

#[test]
fn wall_obj_round_trip_is_exact() {
    let p = parse_pattern::<f64>(&pattern_44c()).unwrap();
    let wall = generate_wall(&p, &BrickSpec::default(), 5).unwrap();
    assert!(wall.mesh.triangles.len() > 1000);
    let back = read_obj::<f64>(obj_string(&wall.mesh).as_bytes()).unwrap();
    assert_eq!(back.vertices.len(), wall.mesh.vertices.len());
    assert_eq!(back.triangles, wall.mesh.triangles);
    assert_eq!(back.bounds(), wall.mesh.bounds());
    assert_eq!(back, wall.mesh);
}

#[test]
fn f32_walls_build_too() {
    let p = parse_pattern::<f32>("H H\nV .").unwrap_err();
    assert!(matches!(p, WallError::PatternShape(_)));
    let p = parse_pattern::<f32>("H1 H1").unwrap();
    let unit = BrickSpec::<f32> { face_length: 45.0, ..BrickSpec::ideal() };
    let wall = generate_wall(&p, &unit, 0).unwrap();
    assert_eq!(wall.annotations.len(), 2);
}

fn row_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop_oneof![Just("H"), Just("."), Just("H1"), Just("H2")], 1..6).prop_map(|t| t.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn walls_are_deterministic_and_annotated_once_per_placement(row in row_strategy(), seed in any::<u64>()) {
        let p = parse_pattern::<f64>(&row).unwrap();
        let spec = BrickSpec::<f64> { face_length: 105.0, ..BrickSpec::default() };
        let fits = p.placements.iter().all(|pl| pl.span as f64 * 60.0 >= 120.0);
        let a = generate_wall(&p, &spec, seed);
        prop_assert_eq!(a.is_ok(), fits);
        if let Ok(a) = a {
            let b = generate_wall(&p, &spec, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.annotations.len(), p.placements.len());
        }
    }

    #[test]
    fn damaged_silhouette_stays_near_the_nominal_box(seed in any::<u64>(), amp in 0.0f64..3.0) {
        let spec = BrickSpec::<f64> { damage_amplitude: amp, chip_probability: 0.0, ..BrickSpec::ideal() };
        let mesh = generate_brick(&spec, seed).unwrap();
        let (hx, hy) = (spec.face_length / 2.0, spec.face_height / 2.0);
        for v in &mesh.vertices {
            prop_assert!(v.x.abs() <= hx + amp + 1e-9 && v.y.abs() <= hy + amp + 1e-9);
        }
    }

    #[test]
    fn obj_round_trip_on_random_bricks(seed in any::<u64>()) {
        let mesh = generate_brick(&BrickSpec::<f64>::default(), seed).unwrap();
        prop_assert_eq!(read_obj::<f64>(obj_string(&mesh).as_bytes()).unwrap(), mesh);
    }
}
