use std::cmp::Ordering;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Per-line scores plus the induced total order: descending score, ties
/// broken by ascending line index. `+inf` ranks first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

impl RankingResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        RankingResult { scores, order }
    }

    /// An explicit order (most suspicious first) without scores; scores are
    /// synthesized as descending ranks.
    pub fn from_order(order: Vec<usize>) -> Self {
        let n = order.len();
        let mut scores = vec![0.0; n];
        for (rank, &line) in order.iter().enumerate() {
            scores[line] = (n - rank) as f64;
        }
        RankingResult { scores, order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 0-based rank of `line`.
    pub fn rank_of(&self, line: usize) -> Option<usize> {
        self.order.iter().position(|&l| l == line)
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

/// JSON form of a score: finite values as numbers, infinities as `"inf"` / `"-inf"`.
pub fn score_to_json(score: f64) -> serde_json::Value {
    if score.is_finite() {
        serde_json::json!(score)
    } else if score > 0.0 {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::Value::String("-inf".into())
    }
}

pub fn score_from_json(value: &serde_json::Value) -> Option<f64> {
    match value {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) if s == "inf" => Some(f64::INFINITY),
        serde_json::Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

impl Serialize for RankingResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let scores: Vec<serde_json::Value> = self.scores.iter().map(|&s| score_to_json(s)).collect();
        let mut st = serializer.serialize_struct("RankingResult", 2)?;
        st.serialize_field("scores", &scores)?;
        st.serialize_field("order", &self.order)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RankingResult {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            scores: Vec<serde_json::Value>,
            #[serde(default)]
            order: Option<Vec<usize>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let scores = raw
            .scores
            .iter()
            .map(|v| score_from_json(v).ok_or_else(|| serde::de::Error::custom(format!("bad score {v}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        let ranking = RankingResult::from_scores(scores);
        if let Some(order) = raw.order {
            if order != ranking.order {
                return Err(serde::de::Error::custom("order disagrees with scores"));
            }
        }
        Ok(ranking)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_toward_lower_index() {
        let r = RankingResult::from_scores(vec![0.5, 0.9, 0.5, f64::INFINITY]);
        assert_eq!(r.order, vec![3, 1, 0, 2]);
        assert_eq!(r.rank_of(2), Some(3));
    }

    #[test]
    fn infinity_serializes_as_string() {
        let r = RankingResult::from_scores(vec![1.0, f64::INFINITY]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"scores":[1.0,"inf"],"order":[1,0]}"#);
        let back: RankingResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn explicit_order_round_trips() {
        let r = RankingResult::from_order(vec![2, 0, 1]);
        assert_eq!(RankingResult::from_scores(r.scores.clone()).order, vec![2, 0, 1]);
    }
}
