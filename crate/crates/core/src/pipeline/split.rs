use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::LabelSet;
use crate::numeric::SeededRng;

/// Disjoint train/test node ids, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// `true` at training nodes, over `n` nodes.
    pub fn train_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.train {
            mask[i] = true;
        }
        mask
    }
}

/// Per-class random split of the known nodes. Each class sends
/// `round(ratio · count)` nodes to train (halves round up), clamped so both
/// parts keep at least one node of the class; the rest go to test.
pub fn stratified_split(labels: &LabelSet, ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    let known: Vec<usize> = (0..labels.len()).filter(|&i| labels.known_mask[i]).collect();
    if known.len() < 5 {
        return Err(Error::InvalidArgument(format!("split needs at least 5 labeled nodes (got {})", known.len())));
    }
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = known.iter().partition(|&&i| labels.labels[i] == 1);
    let minority = pos.len().min(neg.len());
    if minority < 2 {
        return Err(Error::SingleClass(format!(
            "split needs at least 2 minority samples ({} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [&mut neg, &mut pos] {
        rng.shuffle(class);
        let take = ((ratio * class.len() as f64 + 0.5).floor() as usize).clamp(1, class.len() - 1);
        train.extend_from_slice(&class[..take]);
        test.extend_from_slice(&class[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
