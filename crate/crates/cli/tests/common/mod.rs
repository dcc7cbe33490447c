#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grfkit::{BinaryMask, RgbImage};

pub const BIN: &str = env!("CARGO_BIN_EXE_grf-toolkit");

pub fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(cwd).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn image_id(k: usize) -> String {
    format!("img{k:02}")
}

/// `n` records; every third record leaves hdd empty and relies on the
/// postcode table.
pub fn metadata_csv(n: usize) -> String {
    let mut s = String::from("image_id,patient_id,dob,gender,postcode,hdd\n");
    for k in 0..n {
        let year = 1935 + (k * 7) % 60;
        let month = 1 + (k * 5) % 12;
        let day = 1 + (k * 11) % 28;
        let gender = if k % 2 == 0 { "female" } else { "male" };
        let hdd = if k % 3 == 2 { String::new() } else { (1 + k % 10).to_string() };
        s.push_str(&format!("{},p{k:03},{year}-{month:02}-{day:02},{gender},M{} {}AB,{hdd}\n", image_id(k), k % 9 + 1, k % 7));
    }
    s
}

pub fn postcode_table(n: usize) -> String {
    let mut s = String::from("postcode,decile\n");
    for k in 0..n {
        s.push_str(&format!("M{}{}AB,{}\n", k % 9 + 1, k % 7, 10 - k % 10));
    }
    s
}

/// Smooth colour gradient with a per-image offset.
pub fn rgb_image(k: usize, width: usize, height: usize) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| {
        [((x * 255) / width.max(1)) as u8, ((y * 255) / height.max(1)) as u8, ((k * 40 + x + y) % 256) as u8]
    })
    .unwrap()
}

pub fn disc(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r).unwrap()
}

/// Layout written by [`write_dataset`], relative to its root.
pub struct Dataset {
    pub root: PathBuf,
    pub n: usize,
}

/// Metadata, postcode table, RGB images, ground-truth masks and three
/// perturbed prediction sets under `root`.
pub fn write_dataset(root: &Path, n: usize, width: usize, height: usize) -> Dataset {
    fs::write(root.join("metadata.csv"), metadata_csv(n)).unwrap();
    fs::write(root.join("postcodes.csv"), postcode_table(n)).unwrap();
    for dir in ["images", "gt", "pred_a", "pred_b", "pred_c"] {
        fs::create_dir_all(root.join(dir)).unwrap();
    }
    let (w, h) = (width as f64, height as f64);
    for k in 0..n {
        let id = image_id(k);
        rgb_image(k, width, height).save_png(&root.join("images").join(format!("{id}.png"))).unwrap();
        let (cx, cy, r) = (w * (0.3 + 0.08 * k as f64), h * 0.5, h * 0.25);
        disc(width, height, cx, cy, r).save_png(&root.join("gt").join(format!("{id}.png"))).unwrap();
        for (j, dir) in ["pred_a", "pred_b", "pred_c"].iter().enumerate() {
            let shift = (j as f64 - 1.0) * w * 0.04;
            let pred = disc(width, height, cx + shift, cy - shift / 2.0, r * (0.9 + 0.1 * j as f64));
            pred.save_png(&root.join(dir).join(format!("{id}.png"))).unwrap();
        }
    }
    Dataset { root: root.to_path_buf(), n }
}

/// Relative path → bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(path.strip_prefix(base).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn count_with_suffix(dir: &Path, suffix: &str) -> usize {
    fs::read_dir(dir)
        .map(|rd| rd.filter_map(Result::ok).filter(|e| e.file_name().to_string_lossy().ends_with(suffix)).count())
        .unwrap_or(0)
}
