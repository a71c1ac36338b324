use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

/// Cohen's κ for the binary presence of `label` in two codings.
pub fn cohens_kappa(a: &[BTreeSet<String>], b: &[BTreeSet<String>], label: &str) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!("coding lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Validation("no items to compare".into()));
    }
    let n = a.len() as f64;
    let (mut agree, mut a_yes, mut b_yes) = (0usize, 0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        let (px, py) = (x.contains(label), y.contains(label));
        agree += usize::from(px == py);
        a_yes += usize::from(px);
        b_yes += usize::from(py);
    }
    let p_o = agree as f64 / n;
    let (pa, pb) = (a_yes as f64 / n, b_yes as f64 / n);
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(Error::UndefinedKappa);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaRow {
    pub label: String,
    pub support_a: usize,
    pub support_b: usize,
    /// `None` when κ is undefined for the label.
    pub kappa: Option<f64>,
}

/// κ for every label.
pub fn kappa_table(a: &[BTreeSet<String>], b: &[BTreeSet<String>], labels: &[String]) -> Result<Vec<KappaRow>> {
    labels
        .iter()
        .map(|label| {
            let kappa = match cohens_kappa(a, b, label) {
                Ok(k) => Some(k),
                Err(Error::UndefinedKappa) => None,
                Err(e) => return Err(e),
            };
            Ok(KappaRow {
                label: label.clone(),
                support_a: a.iter().filter(|s| s.contains(label)).count(),
                support_b: b.iter().filter(|s| s.contains(label)).count(),
                kappa,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(v: &[&[&str]]) -> Vec<BTreeSet<String>> {
        v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn perfect_agreement() {
        let a = sets(&[&["x"], &[], &["x", "y"], &["y"]]);
        assert_eq!(cohens_kappa(&a, &a, "x").unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_table() {
        let a = sets(&[&["x"], &[], &["x"], &[]]);
        let b = sets(&[&["x"], &[], &[], &[]]);
        // p_o = 0.75, p_e = 0.5·0.25 + 0.5·0.75 = 0.5
        assert!((cohens_kappa(&a, &b, "x").unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_opposite_coders() {
        // p_o = 0 and p_e = 1·0 + 0·1 = 0, so κ = 0
        let a = sets(&[&["x"], &["x"], &["x"]]);
        let b = sets(&[&[], &[], &[]]);
        assert_eq!(cohens_kappa(&a, &b, "x").unwrap(), 0.0);
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let a = sets(&[&["x"], &[], &["x"], &[]]);
        let b = sets(&[&[], &["x"], &[], &["x"]]);
        assert!((cohens_kappa(&a, &b, "x").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_invalid() {
        let a = sets(&[&[], &[]]);
        assert!(matches!(cohens_kappa(&a, &a, "x"), Err(Error::UndefinedKappa)));
        assert!(matches!(cohens_kappa(&a, &a[..1], "x"), Err(Error::Validation(_))));
        let rows = kappa_table(&a, &a, &["x".to_string()]).unwrap();
        assert_eq!(rows[0].kappa, None);
    }
}
