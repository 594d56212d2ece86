use ccm_core::cma::isolated_modes;
use ccm_core::coupled::couple_array;
use ccm_core::mom::{assemble_array, ArrayLayout, BlockImpedance, WireDipole};
use ccm_core::oracle::{full_coupled_modes, match_modes, ModeMatch};

fn pair(length_b: f64, spacing: f64, segments: Option<usize>) -> BlockImpedance {
    let make = |length, x| match segments {
        Some(s) => WireDipole::new(length, 0.005, x, s).unwrap(),
        None => WireDipole::with_default_mesh(length, 0.005, x).unwrap(),
    };
    assemble_array(&ArrayLayout::new(vec![make(0.5, 0.0), make(length_b, spacing)]).unwrap()).unwrap()
}

fn compare(blocks: &BlockImpedance, retained: &[usize]) -> ModeMatch {
    let (c, blocks) = couple_array(blocks, retained).unwrap();
    let full = full_coupled_modes(&blocks, blocks.total_size()).unwrap();
    match_modes(&c, &full, &blocks).unwrap()
}

#[test]
fn full_retention_reproduces_the_coupled_spectrum() {
    let m = compare(&pair(0.5, 0.3, Some(31)), &[30, 30]);
    assert_eq!(m.pairs.len(), 60);
    assert!(m.max_eig_rel_err() < 1e-8, "{}", m.max_eig_rel_err());
    assert!(m.min_similarity() > 1.0 - 1e-8, "{}", m.min_similarity());

    let d = WireDipole::new(0.5, 0.005, 0.0, 15).unwrap();
    let five = assemble_array(&ArrayLayout::uniform(d, 5, 0.4).unwrap()).unwrap();
    let m = compare(&five, &[14; 5]);
    assert_eq!(m.pairs.len(), 70);
    assert!(m.max_eig_rel_err() < 1e-8, "{}", m.max_eig_rel_err());
    assert!(m.min_similarity() > 1.0 - 1e-8, "{}", m.min_similarity());
}

#[test]
fn dominant_modes_survive_truncation() {
    for length_b in [0.3, 0.5, 0.7] {
        let m = compare(&pair(length_b, 0.3, None), &[4, 4]);
        assert!(m.current_similarity[0] > 0.99 && m.current_similarity[1] > 0.99);
        assert!(m.eig_rel_err[0] < 1e-4, "B = {length_b}: {}", m.eig_rel_err[0]);
    }
}

#[test]
fn dominant_fidelity_improves_with_retained_modes() {
    // the two modes kept at k = 1 are tracked as the subspace grows
    for length_b in [0.3, 0.5, 0.7] {
        let blocks = pair(length_b, 0.3, None);
        let runs: Vec<ModeMatch> = [1, 2, 4, 8].iter().map(|&k| compare(&blocks, &[k, k])).collect();
        let mean: Vec<f64> = runs
            .iter()
            .map(|m| (m.current_similarity[0] + m.current_similarity[1]) / 2.0)
            .collect();
        let err: Vec<f64> = runs.iter().map(|m| m.eig_rel_err[0].max(m.eig_rel_err[1])).collect();
        assert!(mean.windows(2).all(|w| w[1] >= w[0]), "B = {length_b}: {mean:?}");
        assert!(err.windows(2).all(|w| w[1] <= w[0]), "B = {length_b}: {err:?}");
        assert!(err[3] < 1e-3 * err[0]);
    }
}

#[test]
fn truncation_degradation_is_reported() {
    // the highest retained modes lose accuracy; the comparison still
    // completes and exposes it
    let m = compare(&pair(0.3, 0.3, None), &[8, 8]);
    assert!(m.min_similarity() < 0.99, "{}", m.min_similarity());
    assert!(m.min_similarity() >= 0.5);
    let k1 = compare(&pair(0.5, 0.3, None), &[1, 1]);
    assert!(k1.max_eig_rel_err() > 1e-5);
}

#[test]
fn identical_pair_full_spectrum_brackets_isolated_mode() {
    let blocks = pair(0.5, 0.3, None);
    let (blocks, _) = blocks.regularized().unwrap();
    let full = full_coupled_modes(&blocks, 8).unwrap();
    let (r, x) = blocks.self_block(0);
    let iso = isolated_modes(r, x, 1).unwrap().lambdas()[0];
    let l = full.lambdas();
    assert!(l[0] < iso && iso < l[1], "{l:?} vs {iso}");
}

#[test]
fn distant_elements_decouple() {
    let (blocks, _) = pair(0.3, 100.0, None).regularized().unwrap();
    let full = full_coupled_modes(&blocks, 8).unwrap();
    let mut isolated: Vec<f64> = (0..2)
        .flat_map(|i| {
            let (r, x) = blocks.self_block(i);
            isolated_modes(r, x, 4).unwrap().lambdas().to_vec()
        })
        .collect();
    isolated.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    for (f, i) in full.lambdas().iter().zip(&isolated) {
        assert!((f - i).abs() <= 1e-3 * i.abs(), "{f} vs {i}");
    }
}
