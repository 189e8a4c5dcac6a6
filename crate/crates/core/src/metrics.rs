//! Confusion matrices and per-class precision / recall / F1 reports.

use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

/// `counts[t][p]` = samples with true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(QtcError::validation(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(QtcError::validation(format!(
                "label pair ({t}, {p}) out of range for {n_classes} classes"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Undefined precision or recall (empty column or row) is reported as 0.
pub fn report(cm: &ConfusionMatrix, class_names: &[String]) -> Result<ClassificationReport> {
    let n = cm.n_classes();
    if cm.counts.iter().any(|r| r.len() != n) {
        return Err(QtcError::validation("confusion matrix is not square"));
    }
    if class_names.len() != n {
        return Err(QtcError::validation(format!(
            "{} class names for {n} classes",
            class_names.len()
        )));
    }
    let total = cm.total();
    if total == 0 {
        return Err(QtcError::validation("confusion matrix has no samples"));
    }
    let classes: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let precision = ratio(cm.counts[c][c], cm.col_sum(c));
            let recall = ratio(cm.counts[c][c], cm.row_sum(c));
            ClassMetrics {
                class: class_names[c].clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();
    let trace: u64 = (0..n).map(|c| cm.counts[c][c]).sum();
    let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / n as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        classes.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    Ok(ClassificationReport {
        accuracy: ratio(trace, total),
        macro_avg: Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            support: total,
        },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
            support: total,
        },
        classes,
        confusion: cm.clone(),
    })
}

impl ClassificationReport {
    /// Fixed-width table, three decimals throughout:
    ///
    /// ```text
    ///               precision    recall  f1-score   support
    ///            0      0.800     0.167     0.276    24.000
    ///     accuracy      0.569     0.569     0.569     0.569
    /// ```
    pub fn render(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.class.chars().count())
            .chain(std::iter::once("weighted avg".len()))
            .max()
            .unwrap_or(12);
        let row = |name: &str, vals: [f64; 4]| {
            format!(
                "{name:>width$} {:>10.3}{:>10.3}{:>10.3}{:>10.3}\n",
                vals[0], vals[1], vals[2], vals[3]
            )
        };
        let mut out = format!(
            "{:>width$} {:>10}{:>10}{:>10}{:>10}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for c in &self.classes {
            out.push_str(&row(
                &c.class,
                [c.precision, c.recall, c.f1, c.support as f64],
            ));
        }
        let a = self.accuracy;
        out.push_str(&row("accuracy", [a, a, a, a]));
        for (name, avg) in [
            ("macro avg", &self.macro_avg),
            ("weighted avg", &self.weighted_avg),
        ] {
            out.push_str(&row(
                name,
                [avg.precision, avg.recall, avg.f1, avg.support as f64],
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 2]]);
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(confusion(&[], &[], 2).unwrap().counts, vec![vec![0, 0]; 2]);
        assert!(confusion(&[0, 2], &[0, 1], 2).is_err());
        assert!(confusion(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn two_class_hand_values() {
        let cm = ConfusionMatrix {
            counts: vec![vec![2, 0], vec![1, 1]],
        };
        let r = report(&cm, &names(2)).unwrap();
        assert!((r.classes[0].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.classes[0].recall, 1.0);
        assert!((r.classes[0].f1 - 0.8).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix {
            counts: vec![vec![3, 0, 0], vec![0, 5, 0], vec![0, 0, 2]],
        };
        let r = report(&cm, &names(3)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r
            .classes
            .iter()
            .all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
    }

    #[test]
    fn empty_column_reports_zero() {
        let cm = ConfusionMatrix {
            counts: vec![vec![0, 4], vec![0, 4]],
        };
        let r = report(&cm, &names(2)).unwrap();
        assert_eq!(r.classes[0].precision, 0.0);
        assert_eq!(r.classes[0].f1, 0.0);
        assert!(report(
            &ConfusionMatrix {
                counts: vec![vec![0, 0], vec![0, 0]]
            },
            &names(2)
        )
        .is_err());
    }

    #[test]
    fn weighted_recall_is_accuracy() {
        let cm = ConfusionMatrix {
            counts: vec![vec![5, 2, 1], vec![0, 7, 3], vec![4, 0, 9]],
        };
        let r = report(&cm, &names(3)).unwrap();
        assert!((r.weighted_avg.recall - r.accuracy).abs() < 1e-15);
    }

    #[test]
    fn permuting_classes_permutes_report() {
        let cm = ConfusionMatrix {
            counts: vec![vec![5, 2, 1], vec![0, 7, 3], vec![4, 0, 9]],
        };
        let perm = [2, 0, 1];
        let permuted = ConfusionMatrix {
            counts: (0..3)
                .map(|i| (0..3).map(|j| cm.counts[perm[i]][perm[j]]).collect())
                .collect(),
        };
        let names_p: Vec<String> = perm.iter().map(|&p| p.to_string()).collect();
        let (a, b) = (
            report(&cm, &names(3)).unwrap(),
            report(&permuted, &names_p).unwrap(),
        );
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(b.classes[i], a.classes[p]);
        }
        assert_eq!(a.accuracy, b.accuracy);
        assert!((a.macro_avg.f1 - b.macro_avg.f1).abs() < 1e-15);
    }

    #[test]
    fn render_layout() {
        let cm = ConfusionMatrix {
            counts: vec![vec![2, 0], vec![1, 1]],
        };
        let text = report(&cm, &names(2)).unwrap().render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "              precision    recall  f1-score   support"
        );
        assert_eq!(
            lines[1],
            "           0      0.667     1.000     0.800     2.000"
        );
        assert_eq!(
            lines[3],
            "    accuracy      0.750     0.750     0.750     0.750"
        );
        assert!(lines[4].starts_with("   macro avg"));
        assert!(lines[5].starts_with("weighted avg"));
    }
}
