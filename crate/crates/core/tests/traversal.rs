mod common;

use common::{grid64, oracle_voxels, to_index, Box3};
use freespace::{traverse_ray, traverse_until_preoccupied, GridConfig, VoxelMask};
use proptest::prelude::*;

fn in_grid() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(0.0f64..16.0)
}

#[test]
fn spec_examples_match_oracle() {
    let g = GridConfig::new([0.0; 3], [1.0; 3], 0.25).unwrap();
    let b = Box3::of(&g);
    for (o, e) in [
        ([0.125; 3], [0.875, 0.125, 0.125]),
        ([0.125; 3], [0.625, 0.625, 0.125]),
        ([0.125; 3], [0.375; 3]),
        ([0.8, 0.1, 0.9], [0.05, 0.95, 0.2]),
    ] {
        let expected: Vec<_> = oracle_voxels(o, e, &b).into_iter().map(to_index).collect();
        assert_eq!(traverse_ray(o, e, &g).unwrap().visited, expected);
    }
}

#[test]
fn clipped_rays_match_oracle() {
    let g = GridConfig::new([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0], 0.25).unwrap();
    let b = Box3::of(&g);
    for (o, e) in [
        ([-5.0, 0.3, 0.1], [5.0, -0.7, 0.2]),
        ([0.3, 0.3, 0.3], [9.0, 4.0, -3.0]),
        ([-3.0, -3.0, -2.0], [0.1, 0.2, 0.3]),
        ([0.0, 0.0, 5.0], [0.1, 0.2, -5.0]),
    ] {
        let expected: Vec<_> = oracle_voxels(o, e, &b).into_iter().map(to_index).collect();
        let t = traverse_ray(o, e, &g).unwrap();
        assert_eq!(t.visited, expected, "{o:?} -> {e:?}");
    }
}

#[test]
fn endpoints_on_lower_faces_are_reached() {
    let g = GridConfig::<f64>::default();
    let b = Box3::of(&g);
    for (o, e) in [
        ([0.0; 3], [2.5, -0.5, 0.5]),
        ([0.0; 3], [-2.5, -0.5, -0.5]),
        ([0.1, 0.1, 0.1], [-1.0, 0.1, 0.1]),
    ] {
        let expected: Vec<_> = oracle_voxels(o, e, &b).into_iter().map(to_index).collect();
        let t = traverse_ray(o, e, &g).unwrap();
        assert!(t.reached_endpoint, "{o:?} -> {e:?}");
        assert_eq!(t.visited, expected, "{o:?} -> {e:?}");
    }
}

// eighth-voxel lattice: endpoints on faces, edges and corners
fn lattice() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3((0i32..512).prop_map(|q| f64::from(q) / 32.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lattice_rays_match_oracle(o in lattice(), e in lattice()) {
        let g = grid64();
        prop_assume!(o != e);
        let expected: Vec<_> = oracle_voxels(o, e, &Box3::of(&g)).into_iter().map(to_index).collect();
        let t = traverse_ray(o, e, &g).unwrap();
        prop_assert_eq!(&t.visited, &expected);
        prop_assert!(t.reached_endpoint);
    }

    #[test]
    fn matches_oracle(o in in_grid(), e in in_grid()) {
        let g = grid64();
        prop_assume!((0..3).map(|a| (e[a] - o[a]).powi(2)).sum::<f64>() > 1e-6);
        let expected: Vec<_> = oracle_voxels(o, e, &Box3::of(&g)).into_iter().map(to_index).collect();
        let t = traverse_ray(o, e, &g).unwrap();
        prop_assert_eq!(&t.visited, &expected);
        prop_assert!(t.reached_endpoint);
    }

    #[test]
    fn face_steps_and_bound(o in prop::array::uniform3(-30.0f64..30.0), e in prop::array::uniform3(-30.0f64..30.0)) {
        let g = grid64();
        prop_assume!((0..3).map(|a| (e[a] - o[a]).powi(2)).sum::<f64>() > 1e-6);
        let t = traverse_ray(o, e, &g).unwrap();
        for w in t.visited.windows(2) {
            let d = (w[0].i.abs_diff(w[1].i)) + (w[0].j.abs_diff(w[1].j)) + (w[0].k.abs_diff(w[1].k));
            prop_assert_eq!(d, 1);
        }
        let [nx, ny, nz] = g.dims();
        prop_assert!(t.visited.len() <= nx + ny + nz + 3);
        let mut sorted = t.visited.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), t.visited.len());
    }

    #[test]
    fn preoccupied_is_prefix(o in in_grid(), e in in_grid(), blockers in prop::collection::vec(in_grid(), 0..40)) {
        let g = grid64();
        prop_assume!((0..3).map(|a| (e[a] - o[a]).powi(2)).sum::<f64>() > 1e-6);
        let mask = VoxelMask::from_points(&g, blockers.iter().copied());
        let full = traverse_ray(o, e, &g).unwrap();
        let cut = traverse_until_preoccupied(o, e, &mask, &g).unwrap();
        prop_assert_eq!(&full.visited[..cut.visited.len()], &cut.visited[..]);
        let first_block = full.visited.iter().position(|&v| Some(v) != full.endpoint_voxel && mask.contains(v));
        match first_block {
            Some(p) => {
                prop_assert!(cut.blocked && !cut.reached_endpoint);
                prop_assert_eq!(cut.visited.len(), p + 1);
            }
            None => prop_assert_eq!(&cut, &full),
        }
    }
}
