//! File formats: images, descriptor dumps, pattern, model, keypoint and
//! field text files, label maps, disparity (PFM, 16-bit PGM), flow (.flo)
//! and training manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageError, ImageFormat, Luma};

use crate::dasc::DescriptorField;
use crate::error::{DascError, Result};
use crate::geofield::GeometricFieldMap;
use crate::image::{to_grayscale, Image, RgbImage};
use crate::learn::{SvmModel, TrainingPair};
use crate::matching::{DisparityMap, FlowField};
use crate::pattern::{PatternPair, SamplingPatternSet};
use crate::superpixel::SuperpixelMap;
use crate::wmsd::Keypoint;

const DESCRIPTOR_MAGIC: &[u8; 4] = b"DASC";
const FLO_MAGIC: f32 = 202021.25;
/// Middlebury marks unknown flow with components above this.
const FLO_UNKNOWN: f32 = 1e10;

fn format_err(path: &Path, msg: impl std::fmt::Display) -> DascError {
    DascError::Format(format!("{}: {msg}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| DascError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DascError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| DascError::io(path, e))
}

fn image_err(path: &Path, e: ImageError) -> DascError {
    match e {
        ImageError::IoError(io) => DascError::io(path, io),
        other => format_err(path, other),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields<T: std::str::FromStr>(path: &Path, line_no: usize, line: &str, count: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(format_err(
            path,
            format!("line {line_no}: expected {count} fields, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| format_err(path, format!("line {line_no}: cannot parse '{p}'")))
        })
        .collect()
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| DascError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| DascError::io(path, e))?;
    reader.decode().map_err(|e| image_err(path, e))
}

fn rgb_from_dynamic(img: &DynamicImage) -> Result<RgbImage> {
    let rgb = img.to_rgb32f();
    let data: Vec<f64> = rgb.as_raw().iter().map(|&v| v as f64).collect();
    RgbImage::from_interleaved(rgb.width() as usize, rgb.height() as usize, &data)
}

/// PNG or PGM/PPM, 8 or 16 bit, as grayscale in `[0, 1]`. Color input is
/// converted with Rec. 601 weights.
pub fn load_gray(path: &Path) -> Result<Image> {
    let img = open_image(path)?;
    if img.color().has_color() {
        return Ok(to_grayscale(&rgb_from_dynamic(&img)?));
    }
    let luma = img.to_luma32f();
    Image::new(
        luma.width() as usize,
        luma.height() as usize,
        luma.as_raw().iter().map(|&v| v as f64).collect(),
    )
}

/// Color image in `[0, 1]`; `None` for single-channel files.
pub fn load_rgb(path: &Path) -> Result<Option<RgbImage>> {
    let img = open_image(path)?;
    if img.color().has_color() {
        rgb_from_dynamic(&img).map(Some)
    } else {
        Ok(None)
    }
}

/// 8-bit grayscale PNG, values clamped to `[0, 1]`.
pub fn save_gray_png(path: &Path, img: &Image) -> Result<()> {
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, bytes)
            .ok_or_else(|| DascError::Format("image buffer size".into()))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples).
fn save_pgm16(path: &Path, width: usize, height: usize, values: Vec<u16>) -> Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n65535\n").into_bytes();
    bytes.extend(values.iter().flat_map(|v| v.to_be_bytes()));
    write_bytes(path, &bytes)
}

fn load_u16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let img = open_image(path)?;
    if img.color().has_color() {
        return Err(format_err(path, "expected a single-channel image"));
    }
    let luma = img.to_luma16();
    Ok((luma.width() as usize, luma.height() as usize, luma.into_raw()))
}

/// Superpixel labels as a 16-bit PGM.
pub fn write_labels(path: &Path, spmap: &SuperpixelMap) -> Result<()> {
    if spmap.count() > u16::MAX as usize + 1 {
        return Err(DascError::Format(format!(
            "{} labels do not fit a 16-bit map",
            spmap.count()
        )));
    }
    let values = spmap.labels().iter().map(|&l| l as u16).collect();
    save_pgm16(path, spmap.width(), spmap.height(), values)
}

/// Integer label map from an 8- or 16-bit single-channel image.
pub fn read_label_image(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(u32::from).collect(),
        _ => return Err(format_err(path, "label maps must be 8- or 16-bit grayscale")),
    };
    Ok((w, h, values))
}

/// Superpixel map from a label image; labels must be dense from 0.
pub fn read_labels(path: &Path) -> Result<SuperpixelMap> {
    let (w, h, values) = read_label_image(path)?;
    SuperpixelMap::from_labels(w, h, values).map_err(|e| format_err(path, e))
}

/// Descriptor dump: magic, little-endian `u32` width, height, dim, then
/// `f32` values pixel-major.
pub fn write_descriptors(path: &Path, field: &DescriptorField) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + field.values().len() * 4);
    bytes.extend_from_slice(DESCRIPTOR_MAGIC);
    for v in [field.width(), field.height(), field.dim()] {
        bytes.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for &v in field.values() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_bytes(path, &bytes)
}

pub fn read_descriptors(path: &Path) -> Result<DescriptorField> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 16 || &bytes[..4] != DESCRIPTOR_MAGIC {
        return Err(format_err(path, "missing DASC header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, dim) = (word(0), word(1), word(2));
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(dim))
        .ok_or_else(|| format_err(path, "header size overflow"))?;
    if bytes.len() != 16 + 4 * count {
        return Err(format_err(
            path,
            format!("{w}x{h}x{dim} needs {} bytes, file has {}", 16 + 4 * count, bytes.len()),
        ));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DescriptorField::new(w, h, dim, values)
}

/// Pattern file: one line `l sx sy tx ty weight` per pattern.
pub fn write_patterns(path: &Path, set: &SamplingPatternSet) -> Result<()> {
    let mut out = String::new();
    for (l, (p, w)) in set.pairs().iter().zip(set.weights()).enumerate() {
        out.push_str(&format!("{l} {} {} {} {} {w}\n", p.s[0], p.s[1], p.t[0], p.t[1]));
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_patterns(path: &Path) -> Result<SamplingPatternSet> {
    let text = read_text(path)?;
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(format_err(
                path,
                format!("line {line_no}: expected 'l sx sy tx ty weight'"),
            ));
        }
        let l: usize = parts[0]
            .parse()
            .map_err(|_| format_err(path, format!("line {line_no}: bad index '{}'", parts[0])))?;
        if l != pairs.len() {
            return Err(format_err(
                path,
                format!("line {line_no}: index {l}, expected {}", pairs.len()),
            ));
        }
        let c: Vec<isize> = parse_fields(path, line_no, &parts[1..5].join(" "), 4)?;
        let w: f64 = parts[5]
            .parse()
            .map_err(|_| format_err(path, format!("line {line_no}: bad weight '{}'", parts[5])))?;
        pairs.push(PatternPair {
            s: [c[0], c[1]],
            t: [c[2], c[3]],
        });
        weights.push(w);
    }
    if pairs.is_empty() {
        return Err(format_err(path, "no patterns"));
    }
    SamplingPatternSet::with_weights(pairs, weights).map_err(|e| format_err(path, e))
}

/// Model file: one line `v_0 ... v_{n-1} b`.
pub fn write_model(path: &Path, model: &SvmModel) -> Result<()> {
    let mut parts: Vec<String> = model.weights.iter().map(|v| v.to_string()).collect();
    parts.push(model.bias.to_string());
    write_bytes(path, format!("{}\n", parts.join(" ")).as_bytes())
}

pub fn read_model(path: &Path) -> Result<SvmModel> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    for (line_no, line) in content_lines(&text) {
        for p in line.split_whitespace() {
            values.push(
                p.parse::<f64>()
                    .map_err(|_| format_err(path, format!("line {line_no}: cannot parse '{p}'")))?,
            );
        }
    }
    let bias = values.pop().ok_or_else(|| format_err(path, "empty model"))?;
    Ok(SvmModel {
        weights: values,
        bias,
    })
}

/// Keypoint file: one line `x y rho theta` per keypoint.
pub fn write_keypoints(path: &Path, kps: &[Keypoint]) -> Result<()> {
    let mut out = String::new();
    for k in kps {
        out.push_str(&format!("{} {} {} {}\n", k.x, k.y, k.rho, k.theta));
    }
    write_bytes(path, out.as_bytes())
}

/// Keypoints read back carry level 0 and no degeneracy flag.
pub fn read_keypoints(path: &Path) -> Result<Vec<Keypoint>> {
    let text = read_text(path)?;
    content_lines(&text)
        .map(|(line_no, line)| {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(format_err(path, format!("line {line_no}: expected 'x y rho theta'")));
            }
            let xy: Vec<usize> = parse_fields(path, line_no, &parts[..2].join(" "), 2)?;
            let rt: Vec<f64> = parse_fields(path, line_no, &parts[2..].join(" "), 2)?;
            Ok(Keypoint {
                x: xy[0],
                y: xy[1],
                rho: rt[0],
                theta: rt[1],
                level: 0,
                degenerate: false,
            })
        })
        .collect()
}

/// Field map: one line `m G_rho G_theta p` per superpixel, `p` is 1 for
/// constrained entries.
pub fn write_fields(path: &Path, fields: &GeometricFieldMap) -> Result<()> {
    let mut out = String::new();
    for m in 0..fields.len() {
        out.push_str(&format!(
            "{m} {} {} {}\n",
            fields.g_rho[m],
            fields.g_theta[m],
            u8::from(fields.constrained[m])
        ));
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_fields(path: &Path) -> Result<GeometricFieldMap> {
    let text = read_text(path)?;
    let mut fields = GeometricFieldMap {
        g_rho: Vec::new(),
        g_theta: Vec::new(),
        constrained: Vec::new(),
    };
    for (line_no, line) in content_lines(&text) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(format_err(path, format!("line {line_no}: expected 'm G_rho G_theta p'")));
        }
        let bad = |p: &str| format_err(path, format!("line {line_no}: cannot parse '{p}'"));
        let m: usize = parts[0].parse().map_err(|_| bad(parts[0]))?;
        if m != fields.len() {
            return Err(format_err(
                path,
                format!("line {line_no}: index {m}, expected {}", fields.len()),
            ));
        }
        fields.g_rho.push(parts[1].parse().map_err(|_| bad(parts[1]))?);
        fields.g_theta.push(parts[2].parse().map_err(|_| bad(parts[2]))?);
        fields.constrained.push(match parts[3] {
            "0" => false,
            "1" => true,
            p => return Err(bad(p)),
        });
    }
    fields.validate().map_err(|e| format_err(path, e))?;
    Ok(fields)
}

/// Little-endian PFM (`Pf`, scale -1), rows bottom to top; invalid pixels
/// are written as infinity.
pub fn write_pfm(path: &Path, map: &DisparityMap) -> Result<()> {
    let mut bytes = format!("Pf\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    for y in (0..map.height).rev() {
        for x in 0..map.width {
            let p = y * map.width + x;
            let v = if map.valid[p] { map.values[p] as f32 } else { f32::INFINITY };
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_bytes(path, &bytes)
}

/// Reads `Pf` files of either byte order; non-finite values are invalid.
pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let bytes = read_bytes(path)?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated PFM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(format_err(path, format!("expected 'Pf', found '{magic}'")));
    }
    let w: usize = token()?.parse().map_err(|_| format_err(path, "bad PFM width"))?;
    let h: usize = token()?.parse().map_err(|_| format_err(path, "bad PFM height"))?;
    let scale: f64 = token()?.parse().map_err(|_| format_err(path, "bad PFM scale"))?;
    // exactly one whitespace byte separates the header from the data
    let data = &bytes[(pos + 1).min(bytes.len())..];
    if data.len() != 4 * w * h {
        return Err(format_err(path, format!("{w}x{h} PFM needs {} data bytes, found {}", 4 * w * h, data.len())));
    }
    let little = scale < 0.0;
    let mut values = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    for (k, c) in data.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = c.try_into().unwrap();
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, row) = (k % w, k / w);
        let p = (h - 1 - row) * w + x;
        if v.is_finite() {
            values[p] = v as f64;
            valid[p] = true;
        }
    }
    DisparityMap::new(w, h, values, valid)
}

/// 16-bit PGM disparity storing `round(d * scale)`; 0 marks invalid pixels.
pub fn write_disparity_pgm(path: &Path, map: &DisparityMap, scale: f64) -> Result<()> {
    if !(scale > 0.0) {
        return Err(DascError::param("disparity scale must be > 0"));
    }
    let values = map
        .values
        .iter()
        .zip(&map.valid)
        .map(|(&d, &ok)| if ok { (d * scale).round().clamp(0.0, 65535.0) as u16 } else { 0 })
        .collect();
    save_pgm16(path, map.width, map.height, values)
}

pub fn read_disparity_pgm(path: &Path, scale: f64) -> Result<DisparityMap> {
    if !(scale > 0.0) {
        return Err(DascError::param("disparity scale must be > 0"));
    }
    let (w, h, raw) = load_u16(path)?;
    let values = raw.iter().map(|&v| v as f64 / scale).collect();
    let valid = raw.iter().map(|&v| v > 0).collect();
    DisparityMap::new(w, h, values, valid)
}

/// Disparity by extension: `.pfm`, otherwise 16-bit PGM with `scale`.
pub fn read_disparity(path: &Path, scale: f64) -> Result<DisparityMap> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pfm") => read_pfm(path),
        _ => read_disparity_pgm(path, scale),
    }
}

pub fn write_disparity(path: &Path, map: &DisparityMap, scale: f64) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pfm") => write_pfm(path, map),
        _ => write_disparity_pgm(path, map, scale),
    }
}

/// Middlebury `.flo`; invalid vectors are written as unknown flow.
pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    let mut bytes = Vec::with_capacity(12 + 8 * flow.values.len());
    bytes.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(flow.width as i32).to_le_bytes());
    bytes.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for (uv, &ok) in flow.values.iter().zip(&flow.valid) {
        let [u, v] = if ok { [uv[0] as f32, uv[1] as f32] } else { [FLO_UNKNOWN; 2] };
        bytes.extend_from_slice(&u.to_le_bytes());
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes(path, &bytes)
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 12 || f32::from_le_bytes(bytes[..4].try_into().unwrap()) != FLO_MAGIC {
        return Err(format_err(path, "missing .flo magic"));
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if w < 0 || h < 0 {
        return Err(format_err(path, "negative .flo dimensions"));
    }
    let (w, h) = (w as usize, h as usize);
    if bytes.len() != 12 + 8 * w * h {
        return Err(format_err(path, format!("{w}x{h} flow needs {} bytes, found {}", 12 + 8 * w * h, bytes.len())));
    }
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for c in bytes[12..].chunks_exact(8) {
        let u = f32::from_le_bytes(c[..4].try_into().unwrap());
        let v = f32::from_le_bytes(c[4..].try_into().unwrap());
        let ok = u.is_finite() && v.is_finite() && u.abs() < 1e9 && v.abs() < 1e9;
        values.push(if ok { [u as f64, v as f64] } else { [0.0, 0.0] });
        valid.push(ok);
    }
    FlowField::new(w, h, values, valid)
}

/// One manifest row; paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path_a: PathBuf,
    pub path_b: PathBuf,
    pub matched: bool,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "match" | "matched" => Some(true),
        "0" | "-1" | "false" | "nonmatch" | "unmatched" => Some(false),
        _ => None,
    }
}

/// CSV `path_a,path_b,label` with an optional header row.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        if rec.len() != 3 {
            return Err(format_err(path, format!("row {}: expected path_a,path_b,label", i + 1)));
        }
        let Some(matched) = parse_label(&rec[2]) else {
            if i == 0 && rec[2].eq_ignore_ascii_case("label") {
                continue;
            }
            return Err(format_err(path, format!("row {}: bad label '{}'", i + 1, &rec[2])));
        };
        out.push(ManifestEntry {
            path_a: base.join(&rec[0]),
            path_b: base.join(&rec[1]),
            matched,
        });
    }
    if out.is_empty() {
        return Err(format_err(path, "empty manifest"));
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| DascError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| format_err(path, e);
    w.write_record(["path_a", "path_b", "label"]).map_err(io)?;
    for e in entries {
        w.write_record([
            e.path_a.to_string_lossy().as_ref(),
            e.path_b.to_string_lossy().as_ref(),
            if e.matched { "1" } else { "0" },
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| DascError::io(path, e))
}

/// Loads every manifest pair as grayscale windows.
pub fn load_training_pairs(manifest: &Path) -> Result<Vec<TrainingPair>> {
    read_manifest(manifest)?
        .into_iter()
        .map(|e| {
            Ok(TrainingPair {
                window_a: load_gray(&e.path_a)?,
                window_b: load_gray(&e.path_b)?,
                matched: e.matched,
            })
        })
        .collect()
}

/// Plain `key value` text report, one line per entry, in the given order.
pub fn write_metrics(path: &Path, metrics: &[(&str, f64)]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| DascError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (k, v) in metrics {
        writeln!(w, "{k} {v}").map_err(|e| DascError::io(path, e))?;
    }
    w.flush().map_err(|e| DascError::io(path, e))
}
