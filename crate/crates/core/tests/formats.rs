use num_complex::Complex64;
use proptest::prelude::*;

use wallsense::channel::{ChannelMatrix, FrequencyGrid};
use wallsense::imaging::{ImagingWindow, ReflectivityMap};
use wallsense::pipeline::{
    container_len, decode_channel, encode_channel, load_scene, map_csv, parse_map_csv, quantize,
    save_scene, MapMeta, Scene,
};

fn channel(m: usize, n: usize, freqs: Vec<f64>, seed: f64) -> ChannelMatrix {
    let len = m * n * freqs.len();
    let data = (0..len)
        .map(|k| {
            Complex64::new(
                (seed + k as f64).sin() * 1e-3,
                (seed * 2.0 + k as f64).cos() * 1e-5,
            )
        })
        .collect();
    ChannelMatrix::from_data(m, n, FrequencyGrid::from_freqs(freqs).unwrap(), data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn container_round_trip(
        m in 1usize..6,
        n in 1usize..6,
        start in 1e9f64..5e9,
        steps in prop::collection::vec(1e3f64..1e8, 1..8),
        seed in -10.0f64..10.0,
    ) {
        let mut freqs = vec![start];
        for s in steps {
            freqs.push(freqs.last().unwrap() + s);
        }
        let h = quantize(&channel(m, n, freqs, seed));
        let bytes = encode_channel(&h);
        prop_assert_eq!(bytes.len(), container_len(m, n, h.grid().len()));
        prop_assert_eq!(decode_channel(&bytes).unwrap(), h);
    }

    #[test]
    fn truncated_containers_are_rejected(cut in 1usize..200) {
        let h = channel(2, 3, vec![3e9, 4e9, 5e9], 0.5);
        let bytes = encode_channel(&h);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_channel(&bytes[..keep]).is_err());
    }

    #[test]
    fn map_csv_is_lossless(re in prop::collection::vec(-1e3f64..1e3, 6), im in prop::collection::vec(-1e-9f64..1e-9, 6)) {
        let window = ImagingWindow::axis_aligned(-0.3, 0.1, 3, 2, 0.07, 1.2).unwrap();
        let map = ReflectivityMap {
            values: re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect(),
            window,
            grid: FrequencyGrid::linear(3e9, 10e9, 4).unwrap(),
        };
        let meta = MapMeta::of(&map);
        let json = serde_json::to_string(&meta).unwrap();
        let meta: MapMeta = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parse_map_csv(&map_csv(&map), &meta).unwrap(), map);
    }
}

#[test]
fn scene_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.toml");
    for scene in [Scene::desk(), Scene::reference()] {
        save_scene(&scene, &path).unwrap();
        assert_eq!(load_scene(&path).unwrap(), scene);
    }
}

#[test]
fn unknown_scene_keys_are_rejected() {
    let text = Scene::desk().to_toml().unwrap() + "\ncolour = \"blue\"\n";
    let err = Scene::from_toml(&text).unwrap_err().to_string();
    assert!(err.contains("colour"), "{err}");
}
