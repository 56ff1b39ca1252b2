// SPDX-License-Identifier: Apache-2.0

use heatglue::graph_heat::{glue_i, heat_kernel};
use heatglue::heat1d::{glue_rays, EvalParams, Geometry, Kernel1D, Representation};
use heatglue::path_sum::pathsum_heat;
use heatglue::{Decomposition, Graph, KernelMatrix};

fn line3() -> Decomposition {
    Decomposition::from_labels(&Graph::line(3, 1), &["2"], None, None).unwrap()
}

#[test]
fn kernel_matrix_json_round_trip() {
    let k = glue_i(&line3()).unwrap();
    let text = serde_json::to_string(&k).unwrap();
    let back: KernelMatrix = serde_json::from_str(&text).unwrap();
    assert_eq!(back, k);
    let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(raw["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn glued_kernel_matches_heat_kernel_and_path_sum() {
    let d = line3();
    let glued = glue_i(&d).unwrap();
    let direct = heat_kernel(d.graph()).unwrap();
    assert!(glued.max_coef_diff(&direct) < 1e-12);
    let g = d.graph();
    for t in [0.2, 1.5] {
        let m = direct.evaluate(t).unwrap();
        for (u, v) in [(0, 2), (1, 1)] {
            let p = pathsum_heat(g, u, v, t, 1e-12).unwrap();
            let exact = glued.entry(g.label(u), g.label(v)).unwrap().evaluate(t).unwrap();
            assert!((p.value - exact).abs() <= p.tail_bound + 1e-14);
            assert!((m[(u, v)] - exact).abs() < 1e-14);
        }
    }
}

#[test]
fn interval_representations_agree() {
    let p = EvalParams::default();
    let images = Kernel1D::new(Geometry::Interval(2.0), Representation::Images).unwrap();
    let spectral = Kernel1D::new(Geometry::Interval(2.0), Representation::Spectral).unwrap();
    for t in [0.05, 0.5, 3.0] {
        let a = images.value(0.4, 1.3, t, &p).unwrap();
        let b = spectral.value(0.4, 1.3, t, &p).unwrap();
        assert!((a.value - b.value).abs() <= a.bound + b.bound + 1e-14, "t={t}");
    }
}

#[test]
fn geometry_json_shape() {
    let g: Geometry = serde_json::from_str(r#"{"kind":"circle","length":3.0}"#).unwrap();
    assert_eq!(g, Geometry::Circle(3.0));
    assert_eq!(serde_json::to_string(&Geometry::Ray).unwrap(), r#"{"kind":"ray"}"#);
}

#[test]
fn errors_are_classified() {
    let bad_point = glue_rays(0.0, 1.0, 1.0).unwrap_err();
    assert!(!bad_point.is_numerical());
    let g = Graph::line(3, 1);
    let capped = pathsum_heat(&g, 0, 2, 1000.0, 1e-15).unwrap_err();
    assert!(capped.is_numerical());
}
