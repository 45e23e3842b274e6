use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::AggregatePath;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    replicate: usize,
    t: usize,
    y_star: String,
    y_sum: String,
    n_terms: usize,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write paths as `replicate,t,y_star,y_sum,n_terms` (both indices 1-based).
///
/// Paths carrying the lead term are audited for `z1 Y_{t,1} ≤ Y* ≤ Y`
/// before anything is written.
pub fn export_paths(paths: &[AggregatePath], dest: &Path) -> Result<()> {
    if paths.is_empty() {
        return Err(invalid("nothing to export"));
    }
    for (r, p) in paths.iter().enumerate() {
        if p.y_sum.len() != p.len() || p.n_terms.len() != p.len() {
            return Err(invalid(format!("replicate {} has ragged columns", r + 1)));
        }
        if let Some(&t) = p.sandwich_violations().first() {
            return Err(Error::Invariant(format!(
                "replicate {}, t = {}: z1 Y = {}, Y* = {}, Y = {}",
                r + 1,
                t + 1,
                p.lead[t],
                p.y_star[t],
                p.y_sum[t]
            )));
        }
    }
    let mut w = csv::Writer::from_path(dest).map_err(csv_err(dest))?;
    for (r, p) in paths.iter().enumerate() {
        for t in 0..p.len() {
            w.serialize(Row {
                replicate: r + 1,
                t: t + 1,
                y_star: fmt(p.y_star[t]),
                y_sum: fmt(p.y_sum[t]),
                n_terms: p.n_terms[t],
            })
            .map_err(csv_err(dest))?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: dest.to_owned(),
        source,
    })
}

/// Read a file written by [`export_paths`]; the lead column is not stored,
/// so it comes back empty.
pub fn import_paths(src: &Path) -> Result<Vec<AggregatePath>> {
    let mut rdr = csv::Reader::from_path(src).map_err(csv_err(src))?;
    let mut paths: Vec<AggregatePath> = Vec::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_err(src))?;
        let bad = |what: &str| invalid(format!("{}: data row {}: {what}", src.display(), line + 1));
        if row.replicate == paths.len() + 1 {
            paths.push(AggregatePath::default());
        } else if row.replicate != paths.len() || row.replicate == 0 {
            return Err(bad("replicates must be numbered 1, 2, ... in order"));
        }
        let p = paths.last_mut().expect("pushed above");
        if row.t != p.len() + 1 {
            return Err(bad("times must run 1, 2, ... within each replicate"));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad("value is not a number"))
        };
        p.y_star.push(parse(&row.y_star)?);
        p.y_sum.push(parse(&row.y_sum)?);
        p.n_terms.push(row.n_terms);
    }
    if paths.is_empty() {
        return Err(invalid(format!("{} holds no data rows", src.display())));
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: &[f64]) -> AggregatePath {
        AggregatePath {
            y_star: values.to_vec(),
            y_sum: values.iter().map(|v| v * 1.5).collect(),
            y_star2: vec![],
            lead: values.iter().map(|v| v * 0.5).collect(),
            n_terms: vec![3; values.len()],
        }
    }

    #[test]
    fn rows_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        export_paths(&[path(&[1.0, 2.0])], &f).unwrap();
        let text = std::fs::read_to_string(&f).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(
            text.lines().next().unwrap(),
            "replicate,t,y_star,y_sum,n_terms"
        );

        let odd = [0.1, std::f64::consts::PI, 1e-300, 123456789.12345679];
        let paths: Vec<_> = (0..3)
            .map(|r| path(&[odd[r], odd[r + 1], 7.0, 1.0 / 3.0]))
            .collect();
        export_paths(&paths, &f).unwrap();
        let text = std::fs::read_to_string(&f).unwrap();
        let keys: Vec<(usize, usize)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split(',');
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(keys.len(), 12);
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let back = import_paths(&f).unwrap();
        for (a, b) in paths.iter().zip(&back) {
            assert_eq!(
                a.y_star.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.y_star.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert_eq!(a.y_sum, b.y_sum);
            assert_eq!(a.n_terms, b.n_terms);
        }
    }

    #[test]
    fn sandwich_violation_blocks_export() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = path(&[1.0, 2.0]);
        p.lead[1] = 5.0;
        let err = export_paths(&[p], &dir.path().join("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn io_errors_name_the_destination() {
        let err = export_paths(&[path(&[1.0])], Path::new("/nonexistent/dir/p.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/p.csv"));
    }
}
