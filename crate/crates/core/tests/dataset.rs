//! Whole-dataset generation checks.

use std::fs;

use clothflat::datagen::{gen_dataset, gen_samples, GenConfig, WrinkleType, MANIFEST_FILE};
use clothflat::manifest::Manifest;
use clothflat::pipeline::Dataset;
use clothflat::BinaryImage;

/// 8-connected components of black pixels.
fn black_components(map: &BinaryImage) -> usize {
    let (w, h) = (map.width(), map.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || map.data()[start] != 0 {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && map.data()[j] == 0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}

#[test]
fn default_dataset_is_clean() {
    let cfg = GenConfig::default();
    let samples = gen_samples(&cfg).unwrap();
    assert_eq!(samples.len(), 122);
    for kind in WrinkleType::ALL {
        assert_eq!(samples.iter().filter(|s| s.kind() == kind).count(), cfg.counts.get(kind));
    }
    for s in &samples {
        assert_eq!((s.processed.width(), s.processed.height()), (100, 100));
        let parts = black_components(&s.processed);
        if s.kind() == WrinkleType::Flat {
            assert_eq!(parts, 0, "flat sample {} shows structure", s.index);
        } else {
            // one ridge gives its two flanks, possibly merged at the border
            assert!((1..=2).contains(&parts), "sample {} has {parts} components", s.index);
        }
    }
}

#[test]
fn written_dataset_is_deterministic_and_loadable() {
    let mut cfg = GenConfig::default();
    cfg.counts.horizontal = 2;
    cfg.counts.vertical = 1;
    cfg.counts.inclined = 1;
    cfg.counts.flat = 1;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = gen_dataset(&cfg, a.path()).unwrap();
    gen_dataset(&cfg, b.path()).unwrap();
    assert_eq!(manifest.len(), 5);
    for rel in [MANIFEST_FILE, "provenance.txt", "processed/0000_horizontal.pgm", "scenes/0004_flat.ppm"] {
        assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{rel}");
    }
    let read = Manifest::read(&a.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(read.len(), 5);
    let ds = Dataset::load(&a.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(ds.entries[4].kind, WrinkleType::Flat);
    assert!(ds.entries[4].action.to_array().iter().all(|&v| v == 0.0));
    assert!(ds.entries[0].image.data().contains(&0));
}
