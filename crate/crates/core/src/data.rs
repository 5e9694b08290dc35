//! Point sets: CSV ingestion, synthetic generators and seeding.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Seed for every randomized step. Equal seeds give bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed for the `index`-th repeat or restart derived from this one.
    pub fn derive(self, index: u64) -> Seed {
        Seed(self.0.wrapping_add(index))
    }
}

/// N points in R^d with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Array2<f64>,
    labels: Option<Vec<usize>>,
    name: String,
}

impl PointSet {
    /// Validates shape, finiteness and label contiguity.
    pub fn new(points: Array2<f64>, labels: Option<Vec<usize>>, name: impl Into<String>) -> Result<Self> {
        let (n, d) = points.dim();
        if n < 2 {
            return Err(Error::input(format!("a point set needs at least 2 points, got {n}")));
        }
        if d < 1 {
            return Err(Error::input("points must have at least one coordinate"));
        }
        if let Some((idx, _)) = points.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite coordinate at point {}, dimension {}",
                idx / d,
                idx % d
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::input(format!(
                    "label count {} does not match point count {n}",
                    labels.len()
                )));
            }
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; classes];
            for &l in labels {
                seen[l] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::input("class ids must form a contiguous range starting at 0"));
            }
        }
        Ok(Self {
            points,
            labels,
            name: name.into(),
        })
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Number of ground-truth classes, if labeled.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Same points with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<PointSet> {
        PointSet::new(&self.points * factor, self.labels.clone(), self.name.clone())
    }

    /// Reorders points so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<PointSet> {
        let (n, d) = self.points.dim();
        if perm.len() != n {
            return Err(Error::input("permutation length mismatch"));
        }
        let points = Array2::from_shape_fn((n, d), |(i, j)| self.points[[perm[i], j]]);
        let labels = self
            .labels
            .as_ref()
            .map(|l| perm.iter().map(|&p| l[p]).collect());
        PointSet::new(points, labels, self.name.clone())
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads a comma-separated point file.
///
/// A first row in which no cell parses as a number is treated as a header.
/// When `label_column` is given, that column is removed from the coordinates
/// and its distinct values are re-encoded to `0..C` in sorted order (numeric
/// order if every label is numeric, lexicographic otherwise). Row numbers in
/// errors are 1-based physical lines.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    parse_csv(&text, label_column, name)
}

/// CSV parsing behind [`load_csv`], usable on in-memory text.
pub fn parse_csv(text: &str, label_column: Option<usize>, name: impl Into<String>) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut coords: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut arity: Option<usize> = None;
    let mut rows = 0usize;

    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if i == 0 && record.iter().all(|c| parse_cell(c).is_none()) {
            continue;
        }
        match arity {
            None => arity = Some(record.len()),
            Some(a) if a != record.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {a} columns, found {}", record.len()),
                })
            }
            Some(_) => {}
        }
        if let Some(lc) = label_column {
            if lc >= record.len() {
                return Err(Error::Parse {
                    row,
                    message: format!("label column {lc} out of range for {} columns", record.len()),
                });
            }
        }
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_column {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v = parse_cell(cell).filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                message: format!("column {j}: {cell:?} is not a finite number"),
            })?;
            coords.push(v);
        }
        rows += 1;
    }

    if rows < 2 {
        return Err(Error::input(format!("a point set needs at least 2 rows, found {rows}")));
    }
    let d = arity.unwrap_or(0) - usize::from(label_column.is_some());
    let points = Array2::from_shape_vec((rows, d), coords).map_err(|e| Error::input(e.to_string()))?;
    let labels = label_column.map(|_| encode_labels(&raw_labels));
    PointSet::new(points, labels, name)
}

fn encode_labels(raw: &[String]) -> Vec<usize> {
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| parse_cell(s)).collect();
    match numeric {
        Some(values) => {
            let mut distinct = values.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            values
                .iter()
                .map(|v| distinct.partition_point(|d| d.total_cmp(v).is_lt()))
                .collect()
        }
        None => {
            let mut ids = BTreeMap::new();
            for s in raw {
                ids.entry(s.as_str()).or_insert(0usize);
            }
            for (i, v) in ids.values_mut().enumerate() {
                *v = i;
            }
            raw.iter().map(|s| ids[s.as_str()]).collect()
        }
    }
}

/// Writes points (and labels as a trailing column) with round-trip precision.
pub fn save_csv(ps: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_csv(ps)).map_err(|e| Error::io(path, e))
}

pub fn format_csv(ps: &PointSet) -> String {
    let mut out = String::new();
    for (i, row) in ps.points.rows().into_iter().enumerate() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            // `Display` for f64 is the shortest representation that round-trips.
            let _ = write!(out, "{v}");
        }
        if let Some(labels) = &ps.labels {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

/// Synthetic dataset recipes. All generators are pure functions of
/// `(recipe, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Synthetic {
    /// Isotropic Gaussian blobs with centers on a circle of radius `separation`.
    Blobs {
        clusters: usize,
        per_cluster: usize,
        spread: f64,
        separation: f64,
    },
    /// Concentric rings at evenly spaced angles plus Gaussian coordinate noise.
    Circles {
        per_ring: usize,
        radii: Vec<f64>,
        noise: f64,
    },
    /// Two interleaving half circles, evenly spaced along each arc.
    Moons { per_moon: usize, noise: f64 },
    /// Gaussian blobs side by side along the x axis, each with its own
    /// size and spread, so clusters of very different density sit together.
    MixedDensity {
        blobs: Vec<(usize, f64)>,
        separation: f64,
    },
}

impl Synthetic {
    pub fn kind(&self) -> &'static str {
        match self {
            Synthetic::Blobs { .. } => "blobs",
            Synthetic::Circles { .. } => "circles",
            Synthetic::Moons { .. } => "moons",
            Synthetic::MixedDensity { .. } => "mixed-density",
        }
    }

    /// Default recipe for a kind name.
    pub fn default_for(kind: &str) -> Result<Self> {
        match kind {
            "blobs" => Ok(Synthetic::Blobs {
                clusters: 3,
                per_cluster: 100,
                spread: 0.5,
                separation: 10.0,
            }),
            "circles" => Ok(Synthetic::Circles {
                per_ring: 200,
                radii: vec![1.0, 3.0],
                noise: 0.1,
            }),
            "moons" => Ok(Synthetic::Moons {
                per_moon: 150,
                noise: 0.05,
            }),
            "mixed-density" => Ok(Synthetic::MixedDensity {
                blobs: vec![(200, 0.3), (100, 1.5)],
                separation: 7.0,
            }),
            other => Err(Error::input(format!(
                "unknown synthetic kind {other:?} (expected blobs, circles, moons or mixed-density)"
            ))),
        }
    }
}

/// Parses `kind[:key=value,...]`, e.g. `circles:per=200,radii=1/3,noise=0.1`.
///
/// Keys per kind: blobs `clusters, per, spread, sep`; circles `per, radii,
/// noise`; moons `per, noise`; mixed-density `sizes, spreads, sep` where the
/// lists are `/`-separated.
impl FromStr for Synthetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut recipe = Synthetic::default_for(kind.trim())?;
        for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected key=value, got {kv:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::input(format!("{key}: {v:?} is not a number")))
            };
            let count = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| Error::input(format!("{key}: {v:?} is not a count")))
            };
            let unknown = || Error::input(format!("unknown parameter {key:?} for {kind}"));
            match &mut recipe {
                Synthetic::Blobs {
                    clusters,
                    per_cluster,
                    spread,
                    separation,
                } => match key {
                    "clusters" => *clusters = count(value)?,
                    "per" => *per_cluster = count(value)?,
                    "spread" => *spread = num(value)?,
                    "sep" => *separation = num(value)?,
                    _ => return Err(unknown()),
                },
                Synthetic::Circles {
                    per_ring,
                    radii,
                    noise,
                } => match key {
                    "per" => *per_ring = count(value)?,
                    "radii" => *radii = value.split('/').map(num).collect::<Result<_>>()?,
                    "noise" => *noise = num(value)?,
                    _ => return Err(unknown()),
                },
                Synthetic::Moons { per_moon, noise } => match key {
                    "per" => *per_moon = count(value)?,
                    "noise" => *noise = num(value)?,
                    _ => return Err(unknown()),
                },
                Synthetic::MixedDensity { blobs, separation } => match key {
                    "sizes" => {
                        let sizes: Vec<usize> = value.split('/').map(count).collect::<Result<_>>()?;
                        let spread = blobs.first().map_or(1.0, |b| b.1);
                        *blobs = sizes
                            .into_iter()
                            .enumerate()
                            .map(|(i, n)| (n, blobs.get(i).map_or(spread, |b| b.1)))
                            .collect();
                    }
                    "spreads" => {
                        let spreads: Vec<f64> = value.split('/').map(num).collect::<Result<_>>()?;
                        if spreads.len() != blobs.len() {
                            return Err(Error::input("spreads must list one value per blob"));
                        }
                        for (b, s) in blobs.iter_mut().zip(spreads) {
                            b.1 = s;
                        }
                    }
                    "sep" => *separation = num(value)?,
                    _ => return Err(unknown()),
                },
            }
        }
        Ok(recipe)
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if noise.is_finite() && noise >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("noise/spread must be finite and >= 0, got {noise}")))
    }
}

fn check_count(n: usize) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::input(format!("each cluster needs at least 2 points, got {n}")))
    }
}

/// Zero noise yields an exact zero offset without consuming arbitrary state.
fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sd).expect("sd is finite and positive").sample(rng)
    }
}

/// Generates a labeled synthetic point set.
pub fn gen_synthetic(recipe: &Synthetic, seed: Seed) -> Result<PointSet> {
    let mut rng = seed.rng();
    let mut coords: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();

    match recipe {
        Synthetic::Blobs {
            clusters,
            per_cluster,
            spread,
            separation,
        } => {
            check_count(*per_cluster)?;
            check_noise(*spread)?;
            if *clusters < 1 {
                return Err(Error::input("blobs needs at least one cluster"));
            }
            for c in 0..*clusters {
                let angle = 2.0 * PI * c as f64 / *clusters as f64;
                let (cx, cy) = (separation * angle.cos(), separation * angle.sin());
                for _ in 0..*per_cluster {
                    coords.push(cx + gaussian(&mut rng, *spread));
                    coords.push(cy + gaussian(&mut rng, *spread));
                    labels.push(c);
                }
            }
        }
        Synthetic::Circles {
            per_ring,
            radii,
            noise,
        } => {
            check_count(*per_ring)?;
            check_noise(*noise)?;
            if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(Error::input("circles needs positive finite radii"));
            }
            for (c, r) in radii.iter().enumerate() {
                for i in 0..*per_ring {
                    let t = 2.0 * PI * i as f64 / *per_ring as f64;
                    coords.push(r * t.cos() + gaussian(&mut rng, *noise));
                    coords.push(r * t.sin() + gaussian(&mut rng, *noise));
                    labels.push(c);
                }
            }
        }
        Synthetic::Moons { per_moon, noise } => {
            check_count(*per_moon)?;
            check_noise(*noise)?;
            for c in 0..2 {
                for i in 0..*per_moon {
                    let t = PI * i as f64 / (*per_moon - 1) as f64;
                    let (x, y) = if c == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    coords.push(x + gaussian(&mut rng, *noise));
                    coords.push(y + gaussian(&mut rng, *noise));
                    labels.push(c);
                }
            }
        }
        Synthetic::MixedDensity { blobs, separation } => {
            if blobs.is_empty() {
                return Err(Error::input("mixed-density needs at least one blob"));
            }
            for (c, &(n, spread)) in blobs.iter().enumerate() {
                check_count(n)?;
                check_noise(spread)?;
                let cx = separation * c as f64;
                for _ in 0..n {
                    coords.push(cx + gaussian(&mut rng, spread));
                    coords.push(gaussian(&mut rng, spread));
                    labels.push(c);
                }
            }
        }
    }

    let n = labels.len();
    let points = Array2::from_shape_vec((n, 2), coords).map_err(|e| Error::input(e.to_string()))?;
    PointSet::new(points, Some(labels), recipe.kind())
}
