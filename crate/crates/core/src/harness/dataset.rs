//! Feature-catalog ingestion and generation.
//!
//! A catalog is a features CSV with header `arm_id,f1,...,fd,mean_reward`
//! and a ratings CSV with header `arm_id,rating` holding any number of
//! ratings per arm. Arms are indexed by their row in the features file.
//! A function class is a CSV with header `context_id,m0,m1,...` giving each
//! member's prediction per catalog row index.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::{
    derived_spec, unit_ball, unit_sphere, ArmContext, ArmCount, ConstraintSet, Cost, Delay, Environment, Noise,
    Regressor, RewardModel, SetDistribution,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCatalog {
    pub arm_ids: Vec<String>,
    pub contexts: Vec<ArmContext>,
    pub means: Vec<f64>,
    pub ratings: Vec<Vec<f64>>,
}

/// Decision-set law and reward scaling applied to a catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSetup {
    pub arms: ArmCount,
    pub delay: Delay,
    pub cost: Cost,
    pub constraint: ConstraintSet,
    /// Means and ratings are mapped to `(v - rating_offset) * rating_scale`.
    pub rating_offset: f64,
    pub rating_scale: f64,
}

fn schema(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::SchemaError {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?)
}

fn parse_number(path: &Path, line: u64, field: &str, column: &str) -> Result<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        schema(
            path,
            line,
            format!("column `{column}`: `{field}` is not a finite number"),
        )
    })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads a features CSV and its companion ratings CSV.
pub fn load_feature_dataset(features: &Path, ratings: &Path) -> Result<FeatureCatalog> {
    let mut rdr = reader(features)?;
    let header = rdr.headers()?.clone();
    let columns: Vec<&str> = header.iter().collect();
    let dim = columns.len().saturating_sub(2);
    let expected_features = (1..=dim).all(|k| columns[k] == format!("f{k}"));
    if columns.len() < 3 || columns[0] != "arm_id" || columns[columns.len() - 1] != "mean_reward" || !expected_features
    {
        return Err(schema(features, 1, "expected header `arm_id,f1,...,fd,mean_reward`"));
    }

    let mut catalog = FeatureCatalog {
        arm_ids: Vec::new(),
        contexts: Vec::new(),
        means: Vec::new(),
        ratings: Vec::new(),
    };
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != columns.len() {
            return Err(schema(
                features,
                line,
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(schema(features, line, "empty arm_id"));
        }
        let row = catalog.contexts.len();
        if index.insert(id.clone(), row).is_some() {
            return Err(schema(features, line, format!("duplicate arm_id `{id}`")));
        }
        let values = (1..=dim)
            .map(|k| parse_number(features, line, &record[k], columns[k]))
            .collect::<Result<Vec<f64>>>()?;
        let mean = parse_number(features, line, &record[dim + 1], "mean_reward")?;
        catalog.arm_ids.push(id);
        catalog.contexts.push(ArmContext::new(row, values));
        catalog.means.push(mean);
        catalog.ratings.push(Vec::new());
    }
    if catalog.contexts.is_empty() {
        return Err(Error::EmptyCatalog(features.to_path_buf()));
    }

    let mut rdr = reader(ratings)?;
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "arm_id" || &header[1] != "rating" {
        return Err(schema(ratings, 1, "expected header `arm_id,rating`"));
    }
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(schema(
                ratings,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let row = *index
            .get(&record[0])
            .ok_or_else(|| schema(ratings, line, format!("unknown arm_id `{}`", &record[0])))?;
        let rating = parse_number(ratings, line, &record[1], "rating")?;
        catalog.ratings[row].push(rating);
    }
    if let Some(row) = catalog.ratings.iter().position(Vec::is_empty) {
        return Err(schema(
            ratings,
            0,
            format!("arm `{}` has no ratings", catalog.arm_ids[row]),
        ));
    }
    Ok(catalog)
}

impl FeatureCatalog {
    pub fn dim(&self) -> usize {
        self.contexts.first().map_or(0, ArmContext::dim)
    }

    /// Stored means as the regressor, stored ratings as the reward draws.
    pub fn reward_model(&self, offset: f64, scale: f64) -> RewardModel {
        let rescale = |v: f64| (v - offset) * scale;
        let means: Vec<f64> = self.means.iter().map(|&m| rescale(m)).collect();
        let ratings: Vec<Vec<f64>> = self
            .ratings
            .iter()
            .map(|list| list.iter().map(|&r| rescale(r)).collect())
            .collect();
        RewardModel::new(Regressor::Table(means.into()), Noise::Ratings(Arc::new(ratings)))
    }

    /// Environment drawing `setup.arms` catalog entries per set uniformly
    /// without replacement.
    pub fn environment(&self, setup: &CatalogSetup) -> Result<Environment> {
        let sets = SetDistribution::Catalog {
            contexts: Arc::new(self.contexts.clone()),
            arms: setup.arms,
            delay: setup.delay,
            cost: setup.cost,
        };
        let spec = derived_spec(&sets, setup.constraint.clone(), self.dim())?;
        Environment::new(spec, sets, self.reward_model(setup.rating_offset, setup.rating_scale))
    }
}

/// Writes a synthetic linear catalog to `features.csv` and `ratings.csv` in
/// `dir`: contexts uniform in the unit ball, `θ*` uniform on the unit sphere
/// and `ratings_per_arm` ratings per arm (rounded up to even) placed
/// symmetrically around the mean as `mean ± z`, `z ~ N(0, 1)`.
pub fn write_synthetic_catalog(
    dir: &Path,
    size: usize,
    dim: usize,
    seed: u64,
    ratings_per_arm: usize,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = unit_sphere(dim, &mut rng);
    let features_path = dir.join("features.csv");
    let ratings_path = dir.join("ratings.csv");
    let mut features = csv::Writer::from_path(&features_path)?;
    let mut ratings = csv::Writer::from_path(&ratings_path)?;

    let mut header = vec!["arm_id".to_string()];
    header.extend((1..=dim).map(|k| format!("f{k}")));
    header.push("mean_reward".into());
    features.write_record(&header)?;
    ratings.write_record(["arm_id", "rating"])?;
    for arm in 0..size {
        let x = unit_ball(dim, &mut rng);
        let mean: f64 = theta.iter().zip(&x).map(|(a, b)| a * b).sum();
        let mut row = vec![arm.to_string()];
        row.extend(x.iter().map(f64::to_string));
        row.push(mean.to_string());
        features.write_record(&row)?;
        for _ in 0..ratings_per_arm.div_ceil(2) {
            let z: f64 = StandardNormal.sample(&mut rng);
            ratings.write_record([arm.to_string(), (mean + z).to_string()])?;
            ratings.write_record([arm.to_string(), (mean - z).to_string()])?;
        }
    }
    features.flush()?;
    ratings.flush()?;
    Ok((features_path, ratings_path))
}

/// Reads a tabulated function class; `contexts` is the number of catalog
/// rows every member must cover.
pub fn load_function_class(path: &Path, contexts: usize) -> Result<Vec<Regressor>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let members = header.len().saturating_sub(1);
    let expected = (0..members).all(|m| header[m + 1] == *format!("m{m}"));
    if members == 0 || &header[0] != "context_id" || !expected {
        return Err(schema(path, 1, "expected header `context_id,m0,m1,...`"));
    }
    let mut table = vec![vec![f64::NAN; contexts]; members];
    let mut seen = vec![false; contexts];
    let mut last_line = 1;
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        last_line = line;
        if record.len() != members + 1 {
            return Err(schema(
                path,
                line,
                format!("expected {} fields, found {}", members + 1, record.len()),
            ));
        }
        let id = record[0]
            .parse::<usize>()
            .ok()
            .filter(|&id| id < contexts)
            .ok_or_else(|| schema(path, line, format!("context_id `{}` is not a catalog row", &record[0])))?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(schema(path, line, format!("duplicate context_id {id}")));
        }
        for m in 0..members {
            table[m][id] = parse_number(path, line, &record[m + 1], &header[m + 1])?;
        }
    }
    if let Some(id) = seen.iter().position(|s| !s) {
        return Err(schema(path, last_line, format!("context_id {id} is missing")));
    }
    Ok(table
        .into_iter()
        .map(|values| Regressor::Table(values.into()))
        .collect())
}

/// Writes a tabulated function class in the format read by
/// [`load_function_class`].
pub fn write_function_class(path: &Path, members: &[Vec<f64>]) -> Result<()> {
    let mut out = File::create(path)?;
    write!(out, "context_id")?;
    for m in 0..members.len() {
        write!(out, ",m{m}")?;
    }
    writeln!(out)?;
    let contexts = members.first().map_or(0, Vec::len);
    for id in 0..contexts {
        write!(out, "{id}")?;
        for member in members {
            write!(out, ",{}", member[id])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
