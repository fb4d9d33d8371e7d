//! File formats: scores CSV, groups CSV, fair-distribution CSV and the
//! solution JSON document.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, FairDistribution, GroupPartition, Solution};

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    Ok(reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

/// Reads a scores CSV (`student_id,<course_id>,...`) and a groups CSV
/// (`student_id,group`). Students keep the scores-file order; group labels
/// get dense indices in order of first appearance in the groups file.
pub fn load_dataset(scores_path: &Path, groups_path: &Path) -> Result<(Dataset, GroupPartition)> {
    let dataset = load_scores(scores_path)?;

    let mut reader = open_csv(groups_path)?;
    let header = headers(groups_path, &mut reader)?;
    if header.len() != 2 {
        return Err(Error::csv(
            groups_path,
            format!("expected header `student_id,group`, got {} columns", header.len()),
        ));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut group_by_student: HashMap<String, usize> = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(groups_path, e))?;
        if record.len() != 2 {
            return Err(Error::csv(
                groups_path,
                format!("row {} has {} columns, expected 2", line + 1, record.len()),
            ));
        }
        let (student, label) = (&record[0], &record[1]);
        let p = match labels.iter().position(|l| l == label) {
            Some(p) => p,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        };
        if group_by_student.insert(student.to_string(), p).is_some() {
            return Err(Error::DuplicateId(student.to_string()));
        }
    }

    let mut group_of = Vec::with_capacity(dataset.num_students());
    for id in dataset.student_ids() {
        match group_by_student.remove(id) {
            Some(p) => group_of.push(p),
            None => return Err(Error::UnpartitionedStudent(id.clone())),
        }
    }
    if let Some(extra) = group_by_student.keys().min() {
        return Err(Error::UnknownStudent(extra.clone()));
    }
    let partition = GroupPartition::with_labels(group_of, labels)?;
    Ok((dataset, partition))
}

/// Reads only the scores CSV.
pub fn load_scores(path: &Path) -> Result<Dataset> {
    let mut reader = open_csv(path)?;
    let header = headers(path, &mut reader)?;
    if header.len() < 2 {
        return Err(Error::csv(path, "header needs student_id and at least one course"));
    }
    let course_ids: Vec<String> = header[1..].to_vec();
    let m = course_ids.len();
    let mut student_ids = Vec::new();
    let mut scores = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != m + 1 {
            return Err(Error::csv(
                path,
                format!("row {} has {} columns, expected {}", row + 1, record.len(), m + 1),
            ));
        }
        student_ids.push(record[0].to_string());
        for (col, cell) in record.iter().skip(1).enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericScore {
                row,
                col,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteScore { row, col });
            }
            scores.push(value);
        }
    }
    Dataset::new(student_ids, course_ids, scores)
}

/// Reads a fair-distribution CSV (`course_id,<group_label>,...`).
///
/// Columns are matched to the partition's group labels by name. With a single
/// row the target is broadcast to every course; otherwise there must be one
/// row per course, matched by course id.
pub fn load_fair_distribution(path: &Path, course_ids: &[String], group_labels: &[String]) -> Result<FairDistribution> {
    let mut reader = open_csv(path)?;
    let header = headers(path, &mut reader)?;
    let g = group_labels.len();
    if header.len() != g + 1 {
        return Err(Error::Dimension(format!(
            "fair distribution has {} group columns, expected {g}",
            header.len().saturating_sub(1)
        )));
    }
    let column_of: Vec<usize> = group_labels
        .iter()
        .map(|label| {
            header[1..]
                .iter()
                .position(|h| h == label)
                .ok_or_else(|| Error::Dimension(format!("fair distribution lacks group column {label:?}")))
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != g + 1 {
            return Err(Error::Dimension(format!(
                "fair distribution row {} has {} entries, expected {g}",
                row + 1,
                record.len().saturating_sub(1)
            )));
        }
        let values = column_of
            .iter()
            .map(|&c| {
                let cell = &record[c + 1];
                cell.parse::<f64>()
                    .map_err(|_| Error::csv(path, format!("non-numeric ratio {cell:?} in row {}", row + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        raw.push((record[0].to_string(), values));
    }

    let m = course_ids.len();
    let rows: Vec<Vec<f64>> = if raw.len() == 1 || raw.len() != m {
        raw.into_iter().map(|(_, v)| v).collect()
    } else {
        let mut by_course: HashMap<String, Vec<f64>> = raw.into_iter().collect();
        course_ids
            .iter()
            .map(|id| by_course.remove(id).ok_or_else(|| Error::UnknownCourse(id.clone())))
            .collect::<Result<_>>()?
    };
    FairDistribution::from_rows(&rows, m, g)
}

/// Formats a float with the shortest representation that round-trips.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_scores(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        write!(w, "student_id")?;
        for c in dataset.course_ids() {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (i, id) in dataset.student_ids().iter().enumerate() {
            write!(w, "{id}")?;
            for &y in dataset.row(i) {
                write!(w, ",{}", fmt_f64(y))?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn write_groups(path: &Path, dataset: &Dataset, partition: &GroupPartition) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "student_id,group")?;
        for (i, id) in dataset.student_ids().iter().enumerate() {
            writeln!(w, "{id},{}", partition.labels()[partition.group_of(i)])?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// On-disk solution: `{ "k": int, "lists": { "<student_id>": ["<course_id>", ...] } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub k: usize,
    pub lists: BTreeMap<String, Vec<String>>,
}

impl SolutionFile {
    pub fn from_solution(solution: &Solution, dataset: &Dataset) -> Self {
        let lists = dataset
            .student_ids()
            .iter()
            .zip(solution.lists())
            .map(|(sid, list)| {
                let courses = list.iter().map(|&j| dataset.course_ids()[j].clone()).collect();
                (sid.clone(), courses)
            })
            .collect();
        Self { k: solution.k(), lists }
    }

    /// Resolves ids against `dataset` and rebuilds the counters.
    pub fn to_solution(&self, dataset: &Dataset, partition: &GroupPartition) -> Result<Solution> {
        let course_index: HashMap<&str, usize> = dataset
            .course_ids()
            .iter()
            .enumerate()
            .map(|(j, c)| (c.as_str(), j))
            .collect();
        let mut lists = Vec::with_capacity(dataset.num_students());
        for sid in dataset.student_ids() {
            let courses = self
                .lists
                .get(sid)
                .ok_or_else(|| Error::UnpartitionedStudent(sid.clone()))?;
            if courses.len() != self.k {
                return Err(Error::Dimension(format!(
                    "student {sid} has {} courses, expected k = {}",
                    courses.len(),
                    self.k
                )));
            }
            let list = courses
                .iter()
                .map(|c| course_index.get(c.as_str()).copied().ok_or_else(|| Error::UnknownCourse(c.clone())))
                .collect::<Result<Vec<_>>>()?;
            lists.push(list);
        }
        if let Some(extra) = self.lists.keys().find(|s| dataset.student_index(s).is_none()) {
            return Err(Error::UnknownStudent(extra.clone()));
        }
        Solution::from_lists(lists, self.k, dataset.num_courses(), partition)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Json {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.into(),
            message: e.to_string(),
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hsc_solution;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_small_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "s.csv", "student_id,math,art\na,0.9,0.1\nb,0.2,0.8\nc,0.5,0.5\n");
        let g = write(dir.path(), "g.csv", "student_id,group\nb,B\na,A\nc,B\n");
        let (ds, part) = load_dataset(&s, &g).unwrap();
        assert_eq!((ds.num_students(), ds.num_courses()), (3, 2));
        assert_eq!(part.num_groups(), 2);
        assert_eq!(part.labels(), &["B", "A"]);
        assert_eq!(part.assignments(), &[1, 0, 0]);
        assert_eq!(ds.score(1, 1), 0.8);
    }

    #[test]
    fn non_numeric_score_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "s.csv", "student_id,x,y\na,0.9,abc\n");
        let g = write(dir.path(), "g.csv", "student_id,group\na,A\n");
        let err = load_dataset(&s, &g).unwrap_err();
        assert!(err.to_string().starts_with("non-numeric score at (0,1)"), "{err}");
    }

    #[test]
    fn missing_and_extra_students_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "s.csv", "student_id,x\na,1\nb,2\n");
        let g = write(dir.path(), "g.csv", "student_id,group\na,A\n");
        let err = load_dataset(&s, &g).unwrap_err();
        assert!(err.to_string().contains("unpartitioned student"), "{err}");

        let g = write(dir.path(), "g2.csv", "student_id,group\na,A\nb,A\nz,B\n");
        assert!(matches!(load_dataset(&s, &g), Err(Error::UnknownStudent(id)) if id == "z"));
    }

    #[test]
    fn fair_distribution_file_matches_columns_by_label() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", "course_id,B,A\n*,0.4,0.6\n");
        let courses: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        let labels: Vec<String> = vec!["A".into(), "B".into()];
        let fair = load_fair_distribution(&f, &courses, &labels).unwrap();
        assert_eq!(fair.num_courses(), 3);
        assert!((0..3).all(|j| fair.row(j) == [0.6, 0.4]));

        let f = write(dir.path(), "f2.csv", "course_id,A,B\nz,0.1,0.9\nx,0.5,0.5\ny,0.3,0.7\n");
        let fair = load_fair_distribution(&f, &courses, &labels).unwrap();
        assert_eq!(fair.row(0), &[0.5, 0.5]);
        assert_eq!(fair.row(2), &[0.1, 0.9]);

        let f = write(dir.path(), "f3.csv", "course_id,A,B\n*,0.5,0.4\n");
        let err = load_fair_distribution(&f, &courses, &labels).unwrap_err();
        assert!(err.to_string().contains("row sum"));
    }

    #[test]
    fn solution_json_shape() {
        let ds = Dataset::from_rows(&[vec![0.9, 0.2, 0.7], vec![0.1, 0.2, 0.3]]).unwrap();
        let part = GroupPartition::new(vec![0, 1], 2).unwrap();
        let sol = hsc_solution(&ds, &part, 2).unwrap();
        let file = SolutionFile::from_solution(&sol, &ds);
        let json = serde_json::to_value(&file).unwrap();
        assert_eq!(json["k"], 2);
        assert_eq!(json["lists"]["s0"], serde_json::json!(["c0", "c2"]));
        assert_eq!(file.to_solution(&ds, &part).unwrap(), sol);

        let mut bad = file.clone();
        bad.lists.insert("s1".into(), vec!["c0".into(), "nope".into()]);
        assert!(matches!(bad.to_solution(&ds, &part), Err(Error::UnknownCourse(c)) if c == "nope"));
    }
}
