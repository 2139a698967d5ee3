use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, UNLABELED};

/// Pixel confusion counts; rows are ground truth, columns prediction.
/// Ground-truth pixels equal to the ignore index are skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    classes: usize,
    ignore: u8,
    counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiouReport {
    /// IoU per class; `None` when the class is absent from both ground
    /// truth and prediction.
    pub per_class: Vec<Option<f64>>,
    pub miou: f64,
    pub scored_pixels: u64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self::with_ignore(classes, UNLABELED)
    }

    pub fn with_ignore(classes: usize, ignore: u8) -> Self {
        Self {
            classes,
            ignore,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        if pred.dims() != gt.dims() {
            let d = |m: &LabelMap| (m.height() as usize, m.width() as usize);
            return Err(Error::dims("confusion", d(gt), d(pred)));
        }
        let c = self.classes;
        for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
            if g == self.ignore {
                continue;
            }
            if g as usize >= c || p as usize >= c {
                return Err(Error::InvalidArgument(format!(
                    "class out of range: gt {g}, prediction {p}, {c} classes"
                )));
            }
            self.counts[g as usize * c + p as usize] += 1;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<MiouReport> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyEvaluation);
        }
        let c = self.classes;
        let per_class: Vec<Option<f64>> = (0..c)
            .map(|k| {
                let tp = self.get(k, k);
                let fp: u64 = (0..c).map(|g| self.get(g, k)).sum::<u64>() - tp;
                let fn_: u64 = (0..c).map(|p| self.get(k, p)).sum::<u64>() - tp;
                let denom = tp + fp + fn_;
                (denom > 0).then(|| tp as f64 / denom as f64)
            })
            .collect();
        let present: Vec<f64> = per_class.iter().flatten().copied().collect();
        let miou = present.iter().sum::<f64>() / present.len() as f64;
        Ok(MiouReport {
            per_class,
            miou,
            scored_pixels: total,
        })
    }
}

/// mIoU over a set of images, accumulated through one confusion matrix.
pub fn evaluate_miou(preds: &[LabelMap], gts: &[LabelMap], classes: usize) -> Result<MiouReport> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} ground-truth maps",
            preds.len(),
            gts.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (p, g) in preds.iter().zip(gts) {
        cm.add(p, g)?;
    }
    cm.report()
}
