//! Loads an IDX image/label pair and prints a digit as ASCII art.
//!
//!     cargo run --example mnist_idx -- <images-idx3-ubyte> <labels-idx1-ubyte>
//!
//! Without arguments it writes and reads back a tiny 2-image file pair.

use std::path::PathBuf;

use corrguard::fl::load_idx;

fn tiny_fixture() -> std::io::Result<(PathBuf, PathBuf)> {
    let dir = std::env::temp_dir();
    let images = dir.join("corrguard-demo-images.idx3");
    let labels = dir.join("corrguard-demo-labels.idx1");
    let mut img = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 5, 0, 0, 0, 5];
    for k in 0..50u32 {
        let (i, j) = ((k % 25) / 5, k % 5);
        let on = if k < 25 { j == 2 } else { i == 0 || i == 4 || j == 0 || j == 4 };
        img.push(if on { 255 } else { 0 });
    }
    std::fs::write(&images, img)?;
    std::fs::write(&labels, [0, 0, 8, 1, 0, 0, 0, 2, 1, 0])?;
    Ok((images, labels))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (images, labels) = match args.as_slice() {
        [i, l] => (PathBuf::from(i), PathBuf::from(l)),
        _ => tiny_fixture()?,
    };
    let samples = load_idx(&images, &labels)?;
    println!("{} samples of {} pixels", samples.len(), samples[0].features.len());
    for sample in samples.iter().take(2) {
        let side = (sample.features.len() as f64).sqrt() as usize;
        println!("label {}", sample.label);
        for row in sample.features.chunks(side) {
            let line: String = row.iter().map(|&p| if p > 0.5 { '#' } else { '.' }).collect();
            println!("  {line}");
        }
    }
    Ok(())
}
