use ndarray::Array2;
use rand::Rng;
use tsgb_core::rng::seeded;
use tsgb_core::{gen_sine_nd, SineNDParams};
use tsgb_viz::fan::BAND_CLASS;
use tsgb_viz::tsne::span;
use tsgb_viz::*;

fn random_draws(s: usize, len: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    Array2::from_shape_simple_fn((s, len), || rng.random_range(-2.0..2.0))
}

fn is_png(bytes: &[u8]) -> bool {
    bytes.starts_with(&[0x89, b'P', b'N', b'G'])
}

#[test]
fn twins_coincide_in_joint_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let real = gen_sine_nd(&SineNDParams::new(40, 12, 2, 3)).unwrap();
    let fake = real.clone();
    let spec = PlotSpec::new(dir.path().join("tsne.png")).with_perplexity(10.0).with_seed(5);
    let out = tsne_overlay(&real, &fake, &spec).unwrap();
    let s = span(&out.embedding);
    assert!(s > 0.0);
    for i in 0..out.n_real {
        let (a, b) = (out.embedding[i], out.embedding[i + out.n_real]);
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!(d <= 1e-6 * s, "twin {i} distance {d} span {s}");
    }
}

#[test]
fn overlay_files_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let real = gen_sine_nd(&SineNDParams::new(30, 10, 2, 1)).unwrap();
    let fake = gen_sine_nd(&SineNDParams::new(30, 10, 2, 2)).unwrap();
    for format in [ImageFormat::Png, ImageFormat::Svg] {
        let a = PlotSpec::new(dir.path().join(format!("a.{}", format.extension())))
            .with_format(format)
            .with_perplexity(10.0);
        let b = PlotSpec { path: dir.path().join(format!("b.{}", format.extension())), ..a.clone() };
        let out_a = tsne_overlay(&real, &fake, &a).unwrap();
        tsne_overlay(&real, &fake, &b).unwrap();
        let (ba, bb) = (std::fs::read(&a.path).unwrap(), std::fs::read(&b.path).unwrap());
        assert!(!ba.is_empty());
        assert_eq!(ba, bb);
        match format {
            ImageFormat::Png => assert!(is_png(&ba)),
            ImageFormat::Svg => assert!(String::from_utf8(ba).unwrap().starts_with("<svg")),
        }
        let side = Sidecar::read(&out_a.sidecar).unwrap();
        let xs = side.column("x").unwrap();
        let ys = side.column("y").unwrap();
        for (i, p) in out_a.embedding.iter().enumerate() {
            assert_eq!(xs[i], Some(p[0]));
            assert_eq!(ys[i], Some(p[1]));
        }
    }
}

#[test]
fn overlay_rejects_too_few_samples() {
    let dir = tempfile::tempdir().unwrap();
    let real = gen_sine_nd(&SineNDParams::new(20, 8, 1, 1)).unwrap();
    let spec = PlotSpec::new(dir.path().join("x.png"));
    assert!(matches!(tsne_overlay(&real, &real, &spec), Err(VizError::Parameter(_))));
    assert!(!spec.path.exists());
}

#[test]
fn single_draw_collapses_bands_onto_mean() {
    let dir = tempfile::tempdir().unwrap();
    let draws = random_draws(1, 8, 1);
    let truth = vec![0.0; 8];
    let out = fan_chart(&[0.5, 0.25], draws.view(), &truth, &PlotSpec::new(dir.path().join("f.svg"))).unwrap();
    for (j, m) in out.mean.iter().enumerate() {
        assert_eq!(*m, draws[[0, j]]);
    }
    for (_, q) in &out.quantiles {
        assert_eq!(q, &out.mean);
    }
}

#[test]
fn sidecar_echoes_inputs_and_bands_nest() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seeded(9);
    let history: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 3.0 - 1.0).collect();
    let truth: Vec<f64> = (0..6).map(|_| rng.random::<f64>() / 7.0).collect();
    let draws = random_draws(50, 6, 2);
    let spec = PlotSpec::new(dir.path().join("fan.png"));
    let out = fan_chart(&history, draws.view(), &truth, &spec).unwrap();
    assert_eq!(out.bands, 2);
    assert!(is_png(&std::fs::read(&out.image).unwrap()));

    let side = Sidecar::read(&out.sidecar).unwrap();
    let hist_col: Vec<f64> = side.column("history").unwrap().into_iter().flatten().collect();
    let truth_col: Vec<f64> = side.column("truth").unwrap().into_iter().flatten().collect();
    assert_eq!(hist_col, history);
    assert_eq!(truth_col, truth);
    let q = |l: f64| side.column(&format!("q{l}")).unwrap();
    let (q10, q25, q75, q90) = (q(0.1), q(0.25), q(0.75), q(0.9));
    let mut checked = 0;
    for t in 0..side.rows.len() {
        if let (Some(a), Some(b), Some(c), Some(d)) = (q10[t], q25[t], q75[t], q90[t]) {
            assert!(a <= b && b <= c && c <= d, "step {t}");
            checked += 1;
        }
    }
    assert_eq!(checked, 6);
}

#[test]
fn imputation_chart_shades_only_missing_steps() {
    let dir = tempfile::tempdir().unwrap();
    let truth: Vec<f64> = (0..10).map(|t| (t as f64).sin()).collect();
    let draws = random_draws(20, 10, 3);

    let all_observed = vec![1u8; 10];
    let spec = PlotSpec::new(dir.path().join("none.svg"));
    let out = imputation_fan_chart(&truth, &all_observed, draws.view(), &truth, &spec).unwrap();
    assert_eq!(out.bands, 0);
    let svg = std::fs::read_to_string(&out.image).unwrap();
    assert!(!svg.contains(&format!("class=\"{BAND_CLASS}\"")));
    let side = Sidecar::read(&out.sidecar).unwrap();
    assert!(side.column("q0.1").unwrap().iter().all(Option::is_none));
    assert_eq!(side.column("observed").unwrap().into_iter().flatten().collect::<Vec<_>>(), truth);

    let mask = vec![1u8, 0, 0, 1, 1, 0, 1, 1, 1, 0];
    let spec = PlotSpec::new(dir.path().join("some.svg"));
    let out = imputation_fan_chart(&truth, &mask, draws.view(), &truth, &spec).unwrap();
    assert_eq!(out.bands, 2 * 3);
    let side = Sidecar::read(&out.sidecar).unwrap();
    let q10 = side.column("q0.1").unwrap();
    for (t, &m) in mask.iter().enumerate() {
        assert_eq!(q10[t].is_some(), m == 0);
    }
}

#[test]
fn invalid_levels_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let draws = random_draws(4, 3, 1);
    let spec = PlotSpec::new(dir.path().join("bad.png")).with_levels(vec![0.0, 1.0]);
    assert!(matches!(fan_chart(&[], draws.view(), &[0.0; 3], &spec), Err(VizError::Parameter(_))));
    let empty = Array2::<f64>::zeros((0, 3));
    let spec = PlotSpec::new(dir.path().join("e.png"));
    assert!(fan_chart(&[], empty.view(), &[0.0; 3], &spec).is_err());
}
