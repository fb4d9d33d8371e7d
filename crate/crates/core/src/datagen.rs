//! Synthetic score matrices of controlled difficulty.
//!
//! Courses are split into `buckets`; each (group, bucket) pair has its own
//! mean score `M[p][q]`. The first row of `M` is drawn from
//! `N(mu_m, d_m)` and row `p` is that row rotated left by `p`, so every group
//! sees the same multiset of bucket means in a different order. Scores are
//! then drawn from `N(M[group][bucket], d_y)`. The `Uni` preset instead draws
//! every score from `U[0, 1)`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`: stream 0 feeds the mean
//! matrix and stream 1 feeds the scores, so the two are independent yet both
//! determined by the one seed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_groups, write_scores};
use crate::model::{Dataset, GroupPartition};

pub const MEANS_STREAM: u64 = 0;
pub const SCORES_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Uni,
    Gauss,
}

/// The three difficulty levels used for benchmarking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "uni")]
    Uni,
    #[serde(rename = "gauss-1-01")]
    Gauss1_01,
    #[serde(rename = "gauss-1-03")]
    Gauss1_03,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Uni, Family::Gauss1_01, Family::Gauss1_03];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Uni => "uni",
            Family::Gauss1_01 => "gauss-1-01",
            Family::Gauss1_03 => "gauss-1-03",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Uni => "Uni",
            Family::Gauss1_01 => "Gauss(1,0.1)",
            Family::Gauss1_03 => "Gauss(1,0.3)",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s) || f.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown family {s:?} (valid: {})",
                    Family::ALL.map(Family::as_str).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub groups: usize,
    pub buckets: usize,
    pub mu_m: f64,
    pub d_m: f64,
    pub d_y: f64,
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_proportions: Option<Vec<f64>>,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 1 {
            return bad("n must be ≥ 1".into());
        }
        if self.m < 1 {
            return bad("m must be ≥ 1".into());
        }
        if self.groups < 1 || self.groups > self.n {
            return bad(format!("groups must be in 1..={}, got {}", self.n, self.groups));
        }
        if self.buckets < 1 || self.buckets > self.m {
            return bad(format!("buckets must be in 1..={}, got {}", self.m, self.buckets));
        }
        if !self.mu_m.is_finite() {
            return bad(format!("mu_m must be finite, got {}", self.mu_m));
        }
        if !(self.d_m >= 0.0 && self.d_m.is_finite()) {
            return bad(format!("d_m must be a finite value ≥ 0, got {}", self.d_m));
        }
        if !(self.d_y >= 0.0 && self.d_y.is_finite()) {
            return bad(format!("d_y must be a finite value ≥ 0, got {}", self.d_y));
        }
        if let Some(props) = &self.group_proportions {
            if props.len() != self.groups {
                return bad(format!("{} group proportions for {} groups", props.len(), self.groups));
            }
            if props.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return bad("group proportions must be non-negative".into());
            }
            let sum: f64 = props.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("group proportions sum to {sum}, expected 1"));
            }
        }
        Ok(())
    }

    fn group_sizes(&self) -> Result<Vec<usize>> {
        let sizes = match &self.group_proportions {
            Some(props) => largest_remainder(self.n, props),
            None => equal_split(self.n, self.groups),
        };
        if let Some(p) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!(
                "group {p} receives no students with n = {}",
                self.n
            )));
        }
        Ok(sizes)
    }
}

/// Benchmark parameterization of a family: 600 students, 60 courses,
/// 4 buckets, `d_y = 0.3`, `mu_m = 1` and `d_m` of 0.1 or 0.3.
pub fn preset_family(family: Family, groups: usize, seed: u64) -> GenParams {
    let (preset, d_m) = match family {
        Family::Uni => (Preset::Uni, 0.0),
        Family::Gauss1_01 => (Preset::Gauss, 0.1),
        Family::Gauss1_03 => (Preset::Gauss, 0.3),
    };
    GenParams {
        n: 600,
        m: 60,
        groups,
        buckets: 4,
        mu_m: 1.0,
        d_m,
        d_y: 0.3,
        preset,
        group_proportions: None,
        seed,
    }
}

/// Course-to-bucket map; contiguous blocks whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketAssignment {
    pub bucket_of: Vec<usize>,
}

impl BucketAssignment {
    pub fn contiguous(m: usize, buckets: usize) -> Self {
        Self {
            bucket_of: contiguous_labels(&equal_split(m, buckets)),
        }
    }

    pub fn num_buckets(&self) -> usize {
        self.bucket_of.iter().max().map_or(0, |b| b + 1)
    }
}

/// Sizes of `parts` blocks covering `total`; the first `total % parts`
/// blocks get one extra element.
pub fn equal_split(total: usize, parts: usize) -> Vec<usize> {
    let (base, extra) = (total / parts, total % parts);
    (0..parts).map(|p| base + usize::from(p < extra)).collect()
}

/// Integer sizes proportional to `proportions` that sum to `total`
/// (largest-remainder rounding, ties to the lower index).
pub fn largest_remainder(total: usize, proportions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * total as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &p in order.iter().cycle().take(total.saturating_sub(assigned)) {
        sizes[p] += 1;
    }
    sizes
}

fn contiguous_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(label, &size)| std::iter::repeat_n(label, size))
        .collect()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::InvalidParameter(format!("normal({mean}, {sd}): {e}")))
}

/// `groups x buckets` matrix of mean scores. Row 0 is sampled; row `p` is row
/// 0 rotated left by `p` positions.
pub fn generate_mean_matrix<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let dist = normal(params.mu_m, params.d_m)?;
    let first: Vec<f64> = (0..params.buckets).map(|_| dist.sample(rng)).collect();
    Ok((0..params.groups)
        .map(|p| {
            let mut row = first.clone();
            row.rotate_left(p % params.buckets);
            row
        })
        .collect())
}

/// A generated instance together with the hidden structure that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub params: GenParams,
    pub dataset: Dataset,
    pub partition: GroupPartition,
    pub buckets: BucketAssignment,
    /// Mean matrix; absent for the uniform preset.
    pub means: Option<Vec<Vec<f64>>>,
}

pub fn generate_dataset(params: &GenParams) -> Result<GeneratedDataset> {
    params.validate()?;
    let group_sizes = params.group_sizes()?;
    let group_of = contiguous_labels(&group_sizes);
    let buckets = BucketAssignment::contiguous(params.m, params.buckets);

    let mut score_rng = stream_rng(params.seed, SCORES_STREAM);
    let mut scores = Vec::with_capacity(params.n * params.m);
    let means = match params.preset {
        Preset::Uni => {
            scores.extend((0..params.n * params.m).map(|_| score_rng.random::<f64>()));
            None
        }
        Preset::Gauss => {
            let means = generate_mean_matrix(params, &mut stream_rng(params.seed, MEANS_STREAM))?;
            let dists = means
                .iter()
                .map(|row| row.iter().map(|&mu| normal(mu, params.d_y)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            for &p in &group_of {
                for &q in &buckets.bucket_of {
                    scores.push(dists[p][q].sample(&mut score_rng));
                }
            }
            Some(means)
        }
    };

    let width = digits(params.n);
    let course_width = digits(params.m);
    let dataset = Dataset::new(
        (0..params.n).map(|i| format!("s{i:0width$}")).collect(),
        (0..params.m).map(|j| format!("c{j:0course_width$}")).collect(),
        scores,
    )?;
    let labels = (0..params.groups).map(|p| format!("g{p}")).collect();
    let partition = GroupPartition::with_labels(group_of, labels)?;
    Ok(GeneratedDataset {
        params: params.clone(),
        dataset,
        partition,
        buckets,
        means,
    })
}

fn digits(count: usize) -> usize {
    count.saturating_sub(1).max(1).to_string().len()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    generator: &'static str,
    means_stream: u64,
    scores_stream: u64,
    params: &'a GenParams,
    group_sizes: &'a [usize],
    bucket_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    means: Option<&'a Vec<Vec<f64>>>,
}

/// Writes `scores.csv`, `groups.csv` and `manifest.json` into `dir`.
pub fn write_generated(dir: &Path, generated: &GeneratedDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_scores(&dir.join("scores.csv"), &generated.dataset)?;
    write_groups(&dir.join("groups.csv"), &generated.dataset, &generated.partition)?;
    let manifest = Manifest {
        generator: "chacha8",
        means_stream: MEANS_STREAM,
        scores_stream: SCORES_STREAM,
        params: &generated.params,
        group_sizes: generated.partition.sizes(),
        bucket_sizes: equal_split(generated.params.m, generated.params.buckets),
        means: generated.means.as_ref(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
