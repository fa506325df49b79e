//! Property-based invariants across modules.

use metasurf::cell::{compute_coefficients, HomogenizedCoeffs, MaterialPair, DESIGN_BAND};
use metasurf::config::RunConfig;
use metasurf::io::fmt;
use metasurf::macroscale::{boundary_energy_flux, build_macro_mesh, macro_solve, power_imbalance, MacroConfig, MacroGeometry};
use metasurf::mesh::{cell_base_mesh, generate_rect_mesh, refine_near, BoundaryTag, Side};
use metasurf::optimizer::moving_average;
use metasurf::par::{self, Exec};
use metasurf::sensitivity::map_to_jprime;
use proptest::prelude::*;
use std::sync::Arc;

fn coeffs() -> impl Strategy<Value = HomogenizedCoeffs> {
    (0.1..1.0f64, -3.0..3.0f64, 3e-6..9e-6f64, 1.0..12.0f64).prop_map(|(a11, b1, kinv, f)| HomogenizedCoeffs { a11, b1, kinv, f })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn homogeneous_cell_reproduces_its_medium(rho in 0.5..3000.0f64, k in 1e4..1e11f64) {
        let mat = MaterialPair::new(rho, k, rho, k).unwrap();
        let (_, c) = compute_coefficients(Arc::new(cell_base_mesh(10, DESIGN_BAND).unwrap()), &mat).unwrap();
        prop_assert!((c.a11 * rho - 1.0).abs() < 1e-9);
        prop_assert!(c.b1.abs() < 1e-9);
        prop_assert!((c.kinv * k - 1.0).abs() < 1e-9);
        prop_assert!((c.f / rho - 1.0).abs() < 1e-9);
    }

    #[test]
    fn macro_is_lossless_for_real_coefficients(c in coeffs(), k0 in 5.0..40.0f64, design in any::<bool>()) {
        let g = if design { MacroGeometry::design() } else { MacroGeometry::validation() };
        let cfg = MacroConfig::from_k0(k0, g);
        let sol = macro_solve(&build_macro_mesh(&cfg, 10, 10).unwrap(), &c, &cfg).unwrap();
        prop_assert!(power_imbalance(&sol).unwrap() < 1e-9);
        let out: f64 = g.outlet_tags().into_iter().map(|t| boundary_energy_flux(&sol, t).unwrap()).sum();
        prop_assert!(out <= cfg.incident_power() * (1.0 + 1e-9));
    }

    #[test]
    fn macro_is_linear_in_incident_amplitude(c in coeffs(), s in -5.0..5.0f64) {
        let cfg = MacroConfig::from_k0(25.0, MacroGeometry::design());
        let mesh = build_macro_mesh(&cfg, 10, 8).unwrap();
        let a = macro_solve(&mesh, &c, &cfg).unwrap();
        let b = macro_solve(&mesh, &c, &MacroConfig { p_in: s, ..cfg }).unwrap();
        let scale = a.stacked().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (x, y) in a.stacked().iter().zip(b.stacked()) {
            prop_assert!((x * s - y).norm() <= 1e-10 * scale.max(1.0) * s.abs().max(1.0));
        }
    }

    #[test]
    fn rect_mesh_tiles_the_rectangle(w in 0.1..3.0f64, h in 0.1..3.0f64, nx in 1usize..12, ny in 1usize..12) {
        let tags = |side: Side, _: [f64; 2]| if side == Side::Bottom { BoundaryTag::Inlet } else { BoundaryTag::Wall };
        let m = generate_rect_mesh(w, h, nx, ny, &tags).unwrap();
        prop_assert!((m.total_area() - w * h).abs() < 1e-12 * w * h);
        prop_assert_eq!(m.n_triangles(), 2 * nx * ny);
        prop_assert!((m.boundary_length(BoundaryTag::Inlet) - w).abs() < 1e-12 * w);
    }

    #[test]
    fn local_refinement_preserves_area_and_nodes(cx in 0.25..0.75f64, cy in 0.15..0.85f64, h in 0.01..0.05f64) {
        let base = cell_base_mesh(10, DESIGN_BAND).unwrap();
        let r = refine_near(&base, [cx, cy], 0.05, h).unwrap();
        prop_assert!((r.total_area() - 1.0).abs() < 1e-12);
        prop_assert_eq!(&r.nodes[..base.n_nodes()], &base.nodes[..]);
        prop_assert!(r.validate().is_ok());
    }

    #[test]
    fn jprime_is_normalized_and_signed(v in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64, -1.0..1.0f64), 1..60)) {
        let ae: Vec<f64> = v.iter().map(|t| t.0).collect();
        let ea: Vec<f64> = v.iter().map(|t| t.1).collect();
        let phi: Vec<f64> = v.iter().map(|t| t.2).collect();
        let j = map_to_jprime(&ae, &ea, &phi);
        let max = j.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(max == 0.0 || (max - 1.0).abs() < 1e-12);
        for i in 0..j.len() {
            let raw = if phi[i] > 0.0 { ea[i] } else { -ae[i] };
            prop_assert!(j[i] * raw >= 0.0);
        }
    }

    #[test]
    fn moving_average_of_constant_history_is_zero(j in -10.0..-1e-3f64, n in 11usize..40) {
        prop_assert_eq!(moving_average(&vec![j; n]), Some(0.0));
        prop_assert_eq!(moving_average(&vec![j; 10]), None);
    }

    #[test]
    fn table_format_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trips_through_ini(k0 in 1.0..80.0f64, w in 0.0..1.0f64, case in 1u8..=2, n in 1usize..6) {
        let cfg = RunConfig { k0, w, case, cell_mesh_n: 10 * n, ..RunConfig::default() };
        let back = RunConfig::parse(&cfg.to_ini()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn parallel_map_matches_serial(v in prop::collection::vec(-1e6..1e6f64, 0..200)) {
        let f = |x: &f64| (x.sin() * 3.0).exp();
        let a = par::map(Exec::Serial, &v, f);
        let b = par::map(Exec::Parallel, &v, f);
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}
