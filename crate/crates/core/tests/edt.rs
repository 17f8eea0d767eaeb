mod common;

use common::*;
use mavplan::edt::{compute_edt, squared_edt, DistanceField, NO_SITE};
use mavplan::ringbuffer::RingBuffer3D;
use mavplan::{Index3, LogOddsParams, OccupancyMap, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_grids_match_brute_force_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 32;
    for g in 0..100 {
        let occ = random_grid(&mut rng, n);
        assert_eq!(squared_edt(&occ, n), brute_force_edt(&occ, n), "grid {g}");
    }
}

#[test]
fn empty_and_full_grids() {
    let n = 8;
    assert!(squared_edt(&vec![false; n * n * n], n).iter().all(|&d| d == NO_SITE));
    assert!(squared_edt(&vec![true; n * n * n], n).iter().all(|&d| d == 0));
}

#[test]
fn field_of_a_moved_buffer_matches_world_distances() {
    // occupancy written at world indices after several moves; distances are
    // between voxel centres and must not depend on the storage rotation
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut buf = RingBuffer3D::new(5, 0.1, false).unwrap();
    for _ in 0..5 {
        let c = random_point(&mut rng, 3.0);
        buf.move_volume(&c).unwrap();
    }
    let idx: Vec<Index3> = buf.indices().collect();
    let sites: Vec<Index3> = (0..20).map(|_| idx[rng.random_range(0..idx.len())]).collect();
    for s in &sites {
        buf.set(s, true);
    }
    let f = DistanceField::from_occupancy(&buf, |o| o);
    for x in idx.iter().step_by(7) {
        let want = sites.iter().map(|s| (s - x).map(|c| c as f64).norm()).fold(f64::INFINITY, f64::min) * 0.1;
        assert!((f.voxel_distance(x).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn mapped_plane_gives_planar_distances() {
    let mut map = OccupancyMap::new(5, 0.1, LogOddsParams::default()).unwrap();
    let origin = Point3::new(0.05, 0.05, 0.05);
    // a dense wall at x = 1.05 seen from the origin
    let pts: Vec<Point3> = (-10..10)
        .flat_map(|j| (-10..10).map(move |k| Point3::new(1.05, j as f64 * 0.1 + 0.05, k as f64 * 0.1 + 0.05)))
        .collect();
    map.insert_point_cloud(&origin, &pts).unwrap();
    let f = compute_edt(&map, false);
    for x in [0.05, 0.35, 0.65] {
        let d = f.distance_at(&Point3::new(x, 0.05, 0.05));
        assert!((d - (1.05 - x)).abs() < 1e-9, "x = {x}: {d}");
    }
}
