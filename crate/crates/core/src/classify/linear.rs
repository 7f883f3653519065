use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{sigmoid, softplus, Matrix, Sgd};

use super::{check_inputs, single_class, ClassifierKind, ClassifierModel, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            epochs: 1000,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 1000,
            learning_rate: 0.1,
        }
    }
}

/// Mean binary cross-entropy plus `l2·‖w‖²/2` for parameters `[w (m×1), b (1×1)]`.
pub fn logreg_loss_and_grad(x: &Matrix, y: &[u8], l2: f64, params: &[Matrix]) -> (f64, Vec<Matrix>) {
    let (w, b) = (&params[0], params[1].get(0, 0));
    let n = x.rows() as f64;
    let z = x.matmul(w);
    let mut loss = 0.0;
    let mut dz = Matrix::zeros(x.rows(), 1);
    for i in 0..x.rows() {
        let s = z.get(i, 0) + b;
        let t = f64::from(y[i]);
        loss += softplus(s) - t * s;
        dz.set(i, 0, (sigmoid(s) - t) / n);
    }
    let mut dw = x.t_matmul(&dz);
    dw.scaled_add_assign(l2, w);
    let db: f64 = dz.as_slice().iter().sum();
    (loss / n + 0.5 * l2 * w.sum_sq(), vec![dw, Matrix::filled(1, 1, db)])
}

/// Full-batch gradient descent from zero weights. `seed` is recorded only;
/// training is deterministic.
pub fn train_logreg(x: &Matrix, y: &[u8], cfg: &LogRegConfig, seed: u64) -> Result<ClassifierModel> {
    check_inputs(x, y)?;
    if let Some(p) = single_class(y, "logistic regression") {
        return Ok(ClassifierModel::new(ClassifierKind::Logreg, cfg, seed, Parameters::Constant { probability: p }));
    }
    let mut params = vec![Matrix::zeros(x.cols(), 1), Matrix::zeros(1, 1)];
    let sgd = Sgd { lr: cfg.learning_rate };
    for _ in 0..cfg.epochs {
        let (_, grads) = logreg_loss_and_grad(x, y, cfg.l2, &params);
        sgd.step(&mut params, &grads);
    }
    Ok(ClassifierModel::new(
        ClassifierKind::Logreg,
        cfg,
        seed,
        Parameters::Linear {
            weights: params[0].as_slice().to_vec(),
            bias: params[1].get(0, 0),
            link_scale: 1.0,
            link_offset: 0.0,
        },
    ))
}

/// Mean hinge loss of margins `w·x + b` against labels mapped to ±1.
pub fn hinge_loss(x: &Matrix, y: &[u8], w: &[f64], b: f64) -> f64 {
    (0..x.rows())
        .map(|i| {
            let t = if y[i] == 1 { 1.0 } else { -1.0 };
            (1.0 - t * (crate::numeric::dot(x.row(i), w) + b)).max(0.0)
        })
        .sum::<f64>()
        / x.rows() as f64
}

/// Minimizes `λ‖w‖²/2 + mean hinge` with `λ = 1/(c·n)` by proximal subgradient
/// steps of size `lr/√t`, then fits a logistic link on the training margins.
pub fn train_linear_svm(x: &Matrix, y: &[u8], cfg: &SvmConfig, seed: u64) -> Result<ClassifierModel> {
    check_inputs(x, y)?;
    if let Some(p) = single_class(y, "linear SVM") {
        return Ok(ClassifierModel::new(ClassifierKind::LinearSvm, cfg, seed, Parameters::Constant { probability: p }));
    }
    let (n, m) = (x.rows(), x.cols());
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let targets: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    for t in 0..cfg.epochs {
        let lr = cfg.learning_rate / ((t + 1) as f64).sqrt();
        let mut gw = vec![0.0; m];
        let mut gb = 0.0;
        for i in 0..n {
            let row = x.row(i);
            if targets[i] * (crate::numeric::dot(row, &w) + b) < 1.0 {
                for (g, v) in gw.iter_mut().zip(row) {
                    *g -= targets[i] * v / n as f64;
                }
                gb -= targets[i] / n as f64;
            }
        }
        for (wk, g) in w.iter_mut().zip(&gw) {
            *wk = (*wk - lr * g) / (1.0 + lr * lambda);
        }
        b -= lr * gb;
    }
    let margins: Vec<f64> = (0..n).map(|i| crate::numeric::dot(x.row(i), &w) + b).collect();
    let (link_scale, link_offset) = fit_logistic_link(&margins, y);
    Ok(ClassifierModel::new(
        ClassifierKind::LinearSvm,
        cfg,
        seed,
        Parameters::Linear {
            weights: w,
            bias: b,
            link_scale,
            link_offset,
        },
    ))
}

/// Fits `σ(a·m + c)` to labels with smoothed targets by Newton's method.
fn fit_logistic_link(margins: &[f64], y: &[u8]) -> (f64, f64) {
    let pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let neg = y.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let targets: Vec<f64> = y.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let (mut a, mut c) = (1.0, ((pos + 1.0) / (neg + 1.0)).ln());
    for _ in 0..100 {
        let (mut ga, mut gc, mut haa, mut hac, mut hcc) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&m, &t) in margins.iter().zip(&targets) {
            let p = sigmoid(a * m + c);
            let d = p - t;
            let w = p * (1.0 - p);
            ga += d * m;
            gc += d;
            haa += w * m * m;
            hac += w * m;
            hcc += w;
        }
        let det = haa * hcc - hac * hac;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (hcc * ga - hac * gc) / det;
        let dc = (haa * gc - hac * ga) / det;
        a -= da;
        c -= dc;
        if da.abs() < 1e-12 && dc.abs() < 1e-12 {
            break;
        }
    }
    (a, c)
}
