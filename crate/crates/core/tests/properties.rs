mod common;

use comcover::balanced::{balanced, baumslag_solitar, random_cover_rank_one};
use comcover::cover::{induced_cover, random_connected_cover};
use comcover::gos::{check_flip_identity, colour_reversal, cylinder_numbers, densities, stretch_ratio};
use comcover::leighton::leighton_fins;
use comcover::sample::{random_gwf, reserialize};
use comcover::types::{canonical_colours, refine_local_types, same_universal_cover, ColourMode, UniversalCoverVerdict};
use comcover::words::{pattern_to_fins, random_reduced_word, rigidity_sufficient, Word};
use comcover::{verify_covering, CoveringMap, GraphWithFins, LeightonError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cover_of(x: &GraphWithFins, degree: usize, rng: &mut ChaCha8Rng) -> Option<(GraphWithFins, CoveringMap)> {
    let (g, gc) = random_connected_cover(x.graph(), degree, 32, rng)?;
    Some(induced_cover(x, &g, &gc).expect("graph cover lifts"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verified_covers_multiply_size_and_euler_characteristic(seed in any::<u64>(), degree in 1usize..=4) {
        let mut r = rng(seed);
        let x = random_gwf(8, 4, 3, &mut r);
        let Some((c, m)) = cover_of(&x, degree, &mut r) else { return Ok(()) };
        let report = verify_covering(&c, &x, &m);
        prop_assert!(report.ok, "{:?}", report.failures);
        prop_assert_eq!(report.degree, Some(degree));
        prop_assert_eq!(c.num_vertices(), degree * x.num_vertices());
        prop_assert_eq!(c.graph().euler_characteristic(), degree as i64 * x.graph().euler_characteristic());
        for colour in x.colour_set() {
            prop_assert_eq!(common::density(&c, &colour), common::density(&x, &colour));
        }
    }

    #[test]
    fn composites_of_covers_are_covers(seed in any::<u64>(), d1 in 1usize..=2, d2 in 1usize..=3) {
        let mut r = rng(seed);
        let x = random_gwf(5, 3, 0, &mut r);
        let Some((y, m1)) = cover_of(&x, d1, &mut r) else { return Ok(()) };
        let Some((z, m2)) = cover_of(&y, d2, &mut r) else { return Ok(()) };
        let composite = m2.then(&y, &x, &m1);
        let report = verify_covering(&z, &x, &composite);
        prop_assert!(report.ok, "{:?}", report.failures);
        prop_assert_eq!(report.degree, Some(d1 * d2));
    }

    #[test]
    fn reserializing_is_a_degree_one_cover(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_gwf(8, 5, 2, &mut r);
        let (y, iso) = reserialize(&x, &mut r);
        let report = verify_covering(&x, &y, &iso);
        prop_assert!(report.ok, "{:?}", report.failures);
        prop_assert_eq!(report.degree, Some(1));
    }

    #[test]
    fn nested_subdivision_matches_a_single_one(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=3) {
        let mut r = rng(seed);
        let x = random_gwf(5, 3, 0, &mut r);
        let twice = x.subdivide(k).unwrap().subdivide(m).unwrap();
        let once = x.subdivide(k * m).unwrap();
        // Edges line up index for index; vertices only up to renaming.
        prop_assert_eq!(twice.num_vertices(), once.num_vertices());
        prop_assert_eq!(twice.graph().num_edges(), once.graph().num_edges());
        let mut rename = vec![None; twice.num_vertices()];
        for e in 0..once.graph().num_edges() {
            let (a, b) = twice.graph().edge_ends(e);
            let (p, q) = once.graph().edge_ends(e);
            for (u, v) in [(a, p), (b, q)] {
                prop_assert!(rename[u].is_none_or(|w| w == v));
                rename[u] = Some(v);
            }
        }
        let cycles = |g: &GraphWithFins| g.fins().iter().map(|f| f.cycle.clone()).collect::<Vec<_>>();
        prop_assert_eq!(cycles(&twice), cycles(&once));
        prop_assert_eq!(twice.colour_pairs(), once.colour_pairs());
    }

    #[test]
    fn types_are_stable_under_covers(seed in any::<u64>(), degree in 1usize..=3) {
        let mut r = rng(seed);
        let x = random_gwf(6, 4, 2, &mut r);
        let Some((c, m)) = cover_of(&x, degree, &mut r) else { return Ok(()) };
        let table = refine_local_types(&[&c, &x], ColourMode::Respect);
        for v in 0..c.num_vertices() {
            prop_assert_eq!(table.vertex[0][v], table.vertex[1][m.vertex_map[v]]);
        }
        let elements: usize = [&c, &x]
            .iter()
            .map(|g| g.num_vertices() + g.graph().num_darts() + 2 * g.fins().iter().map(|f| f.len()).sum::<usize>())
            .sum();
        prop_assert!(table.rounds <= elements + 1);
        prop_assert_eq!(&table, &refine_local_types(&[&c, &x], ColourMode::Respect));
    }

    #[test]
    fn canonical_labels_pull_back_along_covers(seed in any::<u64>(), degree in 1usize..=3) {
        let mut r = rng(seed);
        let x = random_gwf(6, 4, 0, &mut r);
        let Some((c, m)) = cover_of(&x, degree, &mut r) else { return Ok(()) };
        for mode in [ColourMode::Respect, ColourMode::Ignore] {
            let (_, canon) = canonical_colours(&[&c, &x], mode);
            for of in c.oriented_fins() {
                prop_assert_eq!(canon.label(0, of), canon.label(1, m.map_oriented(of)));
            }
        }
    }

    #[test]
    fn universal_cover_comparison_is_an_equivalence_on_covers(seed in any::<u64>(), degree in 1usize..=3) {
        let mut r = rng(seed);
        let x = random_gwf(6, 4, 2, &mut r);
        let y = random_gwf(6, 4, 2, &mut r);
        let compatible = |a: &GraphWithFins, b: &GraphWithFins| {
            same_universal_cover(a, b, ColourMode::Respect) == UniversalCoverVerdict::Compatible
        };
        prop_assert!(compatible(&x, &x));
        prop_assert_eq!(compatible(&x, &y), compatible(&y, &x));
        if let Some((c, _)) = cover_of(&x, degree, &mut r) {
            prop_assert!(compatible(&c, &x));
            prop_assert_eq!(compatible(&c, &y), compatible(&x, &y));
        }
    }

    #[test]
    fn common_covers_survive_subdivision(seed in any::<u64>(), degree in 1usize..=2) {
        let mut r = rng(seed);
        let x = random_gwf(4, 3, 0, &mut r);
        let Some((c, _)) = cover_of(&x, degree, &mut r) else { return Ok(()) };
        let (y, _) = reserialize(&c, &mut r);
        for k in [1, 2] {
            let cc = leighton_fins(&x.subdivide(k).unwrap(), &y.subdivide(k).unwrap());
            // Periodic fins make every arc alike, so the pair count can pass the cap.
            prop_assume!(!matches!(cc, Err(LeightonError::StarIsomorphismLimit { .. })));
            let cc = cc.unwrap();
            prop_assert!(cc.ok());
            prop_assert!(cc.gluing.iter().all(|f| f.ok && f.constant_within_sides));
        }
    }

    #[test]
    fn primitive_roots_rebuild_the_word(seed in any::<u64>(), len in 1usize..40, power in 1usize..4) {
        let mut r = rng(seed);
        let base = random_reduced_word(2, len, &mut r);
        let w = Word((0..power).flat_map(|_| base.0.clone()).collect());
        let Ok((cw, _)) = w.cyclic_reduce() else { return Ok(()) };
        let (root, k) = cw.primitive_root();
        let rebuilt: Vec<i32> = (0..k).flat_map(|_| root.letters().to_vec()).collect();
        prop_assert_eq!(rebuilt.as_slice(), cw.letters());
    }

    #[test]
    fn rigidity_ignores_rotation_and_inversion(seed in any::<u64>(), len in 3usize..60, rank in 2usize..=3) {
        let mut r = rng(seed);
        let w = random_reduced_word(rank, len, &mut r);
        let Ok((cw, _)) = w.cyclic_reduce() else { return Ok(()) };
        let letters = cw.letters().to_vec();
        let shift = r.gen_range(0..letters.len());
        let rotated = Word(letters[shift..].iter().chain(&letters[..shift]).copied().collect());
        let verdict = rigidity_sufficient(rank, std::slice::from_ref(&w)).unwrap();
        prop_assert_eq!(rigidity_sufficient(rank, &[rotated]).unwrap(), verdict);
        prop_assert_eq!(rigidity_sufficient(rank, &[w.inverse()]).unwrap(), verdict);
    }

    #[test]
    fn line_patterns_give_valid_fins_of_the_right_length(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let words: Vec<Word> = (0..n).map(|_| random_reduced_word(2, r.gen_range(1..20), &mut r)).collect();
        let Ok(x) = pattern_to_fins(2, &words) else { return Ok(()) };
        for (w, fin) in words.iter().zip(x.fins()) {
            prop_assert_eq!(fin.len(), w.cyclic_reduce().unwrap().0.len());
        }
    }

    #[test]
    fn balancedness_is_invariant_under_covers(seed in any::<u64>(), m in 1i64..=6, n in 1i64..=6, degree in 2usize..=5) {
        let mut r = rng(seed);
        let m = if r.gen_bool(0.5) { -m } else { m };
        let raw = baumslag_solitar(m, n);
        let verdict = balanced(&raw).unwrap().verdict;
        let cover = random_cover_rank_one(&raw, degree, 64, &mut r).expect("some partition is feasible");
        prop_assert_eq!(balanced(&cover).unwrap().verdict, verdict);
    }

    #[test]
    fn graph_of_spaces_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = common::random_gos(&mut r);
        let report = densities(&g).unwrap();
        prop_assert!(report.ok);
        let t = cylinder_numbers(&g);
        prop_assert!(check_flip_identity(&g, &t, &colour_reversal(&g).unwrap()));
        let sub = g.subdivide_rigid(2).unwrap();
        for v in 0..g.cylinders.len() {
            prop_assert_eq!(stretch_ratio(&g, v), stretch_ratio(&sub, v));
        }
    }
}
