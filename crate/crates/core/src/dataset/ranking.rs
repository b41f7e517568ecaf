use super::{DataError, FeatureId, LabeledDataset};

/// Outcome of evaluating one feature subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// Percentage in [0, 100].
    pub accuracy: f64,
    /// Percentage in [0, 100]; absent when the evaluation set had no anomalies.
    pub detection_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub features: Vec<FeatureId>,
    pub score: Score,
    /// Feature deleted to reach this row from the previous one.
    pub removed: Option<FeatureId>,
}

/// Rows ordered from the full base set down to two features, each subset
/// nested in the one before it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureRanking {
    pub rows: Vec<RankingRow>,
}

impl FeatureRanking {
    pub fn row(&self, size: usize) -> Option<&RankingRow> {
        self.rows.iter().find(|r| r.features.len() == size)
    }

    /// The rows with the requested subset sizes, in request order.
    pub fn rows_for_sizes(&self, sizes: &[usize]) -> Vec<&RankingRow> {
        sizes.iter().filter_map(|&s| self.row(s)).collect()
    }
}

/// Backward elimination: at each step drop the feature whose removal gives
/// the best accuracy under `evaluate`. Equal accuracies drop the feature with
/// the higher field index.
pub fn rank_features<E, F>(ds: &LabeledDataset, base: &[FeatureId], mut evaluate: F) -> Result<FeatureRanking, E>
where
    E: From<DataError>,
    F: FnMut(&LabeledDataset) -> Result<Score, E>,
{
    if base.len() < 2 {
        return Err(DataError::Invalid(format!(
            "feature ranking needs at least 2 base features, got {}",
            base.len()
        ))
        .into());
    }
    let mut current = base.to_vec();
    let first = evaluate(&ds.project(&current)?)?;
    let mut rows = vec![RankingRow {
        features: current.clone(),
        score: first,
        removed: None,
    }];

    while current.len() > 2 {
        let mut best: Option<(usize, Score)> = None;
        for pos in 0..current.len() {
            let mut subset = current.clone();
            subset.remove(pos);
            let score = evaluate(&ds.project(&subset)?)?;
            let better = match &best {
                None => true,
                Some((best_pos, best_score)) => {
                    score.accuracy > best_score.accuracy
                        || (score.accuracy == best_score.accuracy && current[pos].index() > current[*best_pos].index())
                }
            };
            if better {
                best = Some((pos, score));
            }
        }
        let (pos, score) = best.expect("at least three candidates");
        let removed = current.remove(pos);
        rows.push(RankingRow {
            features: current.clone(),
            score,
            removed: Some(removed),
        });
    }
    Ok(FeatureRanking { rows })
}
