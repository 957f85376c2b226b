//! In-memory datasets and their delimited-text file format.
//!
//! The first record declares the layout: `features,<d>,labels,<yes|no>`.
//! Every following record holds one sample: `d` reals, then an integer label
//! when labels are present.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    samples: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(dim: usize, samples: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(pos) = samples.iter().position(|s| s.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "sample {pos} has {} features, expected {dim}",
                samples[pos].len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != samples.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {} samples",
                    l.len(),
                    samples.len()
                )));
            }
        }
        Ok(Dataset {
            dim,
            samples,
            labels,
        })
    }

    pub fn unlabeled(dim: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, samples, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Samples whose label is in `classes`, relabeled to their position in `classes`.
    pub fn select_classes(&self, classes: &[usize]) -> Result<Dataset> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("dataset has no labels".into()))?;
        let mut samples = Vec::new();
        let mut new_labels = Vec::new();
        for (s, l) in self.samples.iter().zip(labels) {
            if let Some(pos) = classes.iter().position(|c| c == l) {
                samples.push(s.clone());
                new_labels.push(pos);
            }
        }
        Dataset::new(self.dim, samples, Some(new_labels))
    }

    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(Vec::new());
        let has_labels = if self.labels.is_some() { "yes" } else { "no" };
        writer
            .write_record(["features", &self.dim.to_string(), "labels", has_labels])
            .expect("in-memory write");
        for (i, sample) in self.samples.iter().enumerate() {
            let mut row: Vec<String> = sample.iter().map(|v| format!("{v:?}")).collect();
            if let Some(labels) = &self.labels {
                row.push(labels[i].to_string());
            }
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8 output")
    }

    pub fn from_csv_str(text: &str) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Truncated("dataset file is empty".into()))?
            .map_err(|e| Error::parse(1, e.to_string()))?;
        if header.len() != 4 || &header[0] != "features" || &header[2] != "labels" {
            return Err(Error::parse(1, "expected header 'features,<d>,labels,<yes|no>'"));
        }
        let dim: usize = header[1]
            .parse()
            .map_err(|_| Error::parse(1, format!("invalid feature count '{}'", &header[1])))?;
        let labeled = match &header[3] {
            "yes" => true,
            "no" => false,
            other => return Err(Error::parse(1, format!("invalid labels flag '{other}'"))),
        };
        let width = dim + usize::from(labeled);
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for (idx, record) in records.enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
            if record.len() != width {
                return Err(Error::parse(
                    line,
                    format!("expected {width} fields, found {}", record.len()),
                ));
            }
            let sample = record
                .iter()
                .take(dim)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("invalid feature '{f}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if labeled {
                let f = &record[dim];
                labels.push(
                    f.parse::<usize>()
                        .map_err(|_| Error::parse(line, format!("invalid label '{f}'")))?,
                );
            }
            samples.push(sample);
        }
        Dataset::new(dim, samples, labeled.then_some(labels))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_with_and_without_labels() {
        let labeled = Dataset::new(
            2,
            vec![vec![0.1, -2.5e-9], vec![1.0 / 3.0, 7.0]],
            Some(vec![1, 0]),
        )
        .unwrap();
        let text = labeled.to_csv_string();
        assert!(text.starts_with("features,2,labels,yes\n"));
        assert_eq!(Dataset::from_csv_str(&text).unwrap(), labeled);

        let plain = Dataset::unlabeled(1, vec![vec![0.5], vec![-0.25]]).unwrap();
        assert_eq!(Dataset::from_csv_str(&plain.to_csv_string()).unwrap(), plain);
    }

    #[test]
    fn bad_rows_report_line() {
        let text = "features,2,labels,no\n1,2\n3\n";
        assert!(matches!(
            Dataset::from_csv_str(text),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn select_classes_relabels() {
        let d = Dataset::new(
            1,
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            Some(vec![0, 1, 2, 3]),
        )
        .unwrap();
        let s = d.select_classes(&[3, 1]).unwrap();
        assert_eq!(s.samples(), &[vec![1.0], vec![3.0]]);
        assert_eq!(s.labels().unwrap(), &[1, 0]);
    }
}
