use ldlab_wasm_demo::{anneal_plane, crossover, fission, profile};

#[test]
fn profile_is_interleaved_and_decreasing_outside() {
    let p = profile(3, 1.0, 3.0, 31).unwrap();
    assert_eq!(p.len(), 62);
    assert_eq!(p[0], 0.0);
    let outside: Vec<f64> = p.chunks(2).filter(|c| c[0] > 1.0).map(|c| c[1]).collect();
    assert!(outside.windows(2).all(|w| w[1] < w[0]));
    assert!(profile(3, 3.0, 3.0, 31).is_err());
    assert!(profile(3, 1.0, 3.0, 1).is_err());
}

#[test]
fn fission_curves_cross_at_the_crossover() {
    let m_star = crossover(3, 1.0).unwrap();
    assert!((m_star - 1.756).abs() < 1e-3);
    let rows = fission(3, 1.0, 4.0, 400, 3).unwrap();
    assert_eq!(rows.len(), 400 * 4);
    for r in rows.chunks(4) {
        let (m, one, two) = (r[0], r[1], r[2]);
        if m < 0.99 * m_star {
            assert!(one < two, "{m}");
        } else if m > 1.01 * m_star {
            assert!(two < one, "{m}");
        }
    }
}

#[test]
fn plane_annealing_keeps_mass() {
    let v = anneal_plane(1.0, 0.5, 0.05, 20_000, 3).unwrap();
    assert_eq!(v.cells().len(), v.width() * v.height());
    assert_eq!(v.cells().iter().filter(|&&c| c == 1).count(), 200);
    assert!(v.energy().is_finite() && v.ball_energy() > 0.0);
    assert!(v.components() >= 1);
    assert!(anneal_plane(1.0, 0.5, 1.0, 100, 0).is_err());
}
