//! Annotation tracks and window labeling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{csv_records, read_text};
use crate::windowing::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    InsideActivity,
    OutsideEvent,
    RoadType,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::InsideActivity, Category::OutsideEvent, Category::RoadType];

    /// Suffix used in annotation and output file names.
    pub fn file_stem(self) -> &'static str {
        match self {
            Category::InsideActivity => "inside_activity",
            Category::OutsideEvent => "outside_event",
            Category::RoadType => "road_type",
        }
    }

    pub fn default_classes(self) -> &'static [&'static str] {
        match self {
            Category::InsideActivity => &[
                "Checking Sides",
                "Eating/Drinking",
                "Working with Center Stack",
                "Checking Speed Stack",
                "Touching Face",
                "Working with Phone",
                "Singing and Dancing",
                "Searching for an Item",
            ],
            Category::OutsideEvent => &[
                "Change Lane",
                "Passing an Intersection",
                "Traffic Light",
                "Stuck in Traffic",
            ],
            Category::RoadType => &[
                "City Street",
                "Parking Lot",
                "Merging Ramp",
                "2L - Highway",
                "3L - Highway",
            ],
        }
    }

    pub fn annotation_file_name(self, trip_id: &str) -> String {
        format!("{trip_id}_{}.csv", self.file_stem())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Category::ALL
            .into_iter()
            .find(|c| c.file_stem().replace('_', "") == norm)
            .ok_or_else(|| Error::Config(format!("unknown category `{s}`")))
    }
}

/// Ordered class list of one labeling category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub category: Category,
    pub classes: Vec<String>,
}

impl Taxonomy {
    pub fn standard(category: Category) -> Self {
        Self {
            category,
            classes: category.default_classes().iter().map(|s| s.to_string()).collect(),
        }
    }

    /// A taxonomy with caller-chosen class names, e.g. for synthetic experiments.
    pub fn custom(category: Category, classes: Vec<String>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Taxonomy("taxonomy needs at least one class".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.contains(',') || c.trim() != c || c.is_empty() {
                return Err(Error::Taxonomy(format!("invalid class name `{c}`")));
            }
            if classes[..i].contains(c) {
                return Err(Error::Taxonomy(format!("duplicate class `{c}`")));
            }
        }
        Ok(Self { category, classes })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Taxonomy(format!("`{name}` is not a {} class", self.category)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelInterval {
    pub start_ms: i64,
    /// Exclusive.
    pub end_ms: i64,
    pub class: usize,
}

impl LabelInterval {
    pub fn contains(&self, t_ms: f64) -> bool {
        t_ms >= self.start_ms as f64 && t_ms < self.end_ms as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTrack {
    pub taxonomy: Taxonomy,
    /// Sorted by start, non-overlapping.
    pub intervals: Vec<LabelInterval>,
}

impl LabelTrack {
    pub fn new(taxonomy: Taxonomy, mut intervals: Vec<LabelInterval>) -> Result<Self> {
        for iv in &intervals {
            if iv.start_ms >= iv.end_ms {
                return Err(Error::Annotation(format!(
                    "interval [{}, {}) is empty",
                    iv.start_ms, iv.end_ms
                )));
            }
            if iv.class >= taxonomy.len() {
                return Err(Error::Taxonomy(format!("class index {} out of range", iv.class)));
            }
        }
        intervals.sort_by_key(|iv| (iv.start_ms, iv.end_ms));
        for w in intervals.windows(2) {
            if w[1].start_ms < w[0].end_ms {
                return Err(Error::Annotation(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    w[0].start_ms, w[0].end_ms, w[1].start_ms, w[1].end_ms
                )));
            }
        }
        Ok(Self { taxonomy, intervals })
    }

    /// Class of the interval containing `t_ms`, if any.
    pub fn class_at(&self, t_ms: f64) -> Option<usize> {
        let idx = self.intervals.partition_point(|iv| (iv.start_ms as f64) <= t_ms);
        let iv = self.intervals[..idx].last()?;
        iv.contains(t_ms).then_some(iv.class)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("start_ms,end_ms,class_name\n");
        for iv in &self.intervals {
            s.push_str(&format!("{},{},{}\n", iv.start_ms, iv.end_ms, self.taxonomy.classes[iv.class]));
        }
        s
    }
}

pub fn parse_annotations(text: &str, taxonomy: &Taxonomy, origin: &str) -> Result<LabelTrack> {
    let mut intervals = Vec::new();
    for (line, fields) in csv_records(text) {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        if fields.len() != 3 {
            return Err(perr(format!("expected 3 fields, found {}", fields.len())));
        }
        let start_ms: i64 = fields[0].parse().map_err(|_| perr(format!("invalid start `{}`", fields[0])))?;
        let end_ms: i64 = fields[1].parse().map_err(|_| perr(format!("invalid end `{}`", fields[1])))?;
        let class = taxonomy.index_of(fields[2])?;
        intervals.push(LabelInterval { start_ms, end_ms, class });
    }
    LabelTrack::new(taxonomy.clone(), intervals)
}

pub fn load_annotations(path: &Path, taxonomy: &Taxonomy) -> Result<LabelTrack> {
    let text = read_text(path)?;
    parse_annotations(&text, taxonomy, &path.display().to_string())
}

/// Windows that fell inside an annotated interval, with their class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledWindowSet {
    pub category: Category,
    /// Positions into the window list passed to [`label_windows`].
    pub windows: Vec<usize>,
    pub labels: Vec<usize>,
}

impl LabeledWindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Labels each window by the interval containing its midpoint; windows whose
/// midpoint is unannotated are left out.
pub fn label_windows<T>(windows: &[Window<T>], track: &LabelTrack) -> LabeledWindowSet {
    let mut set = LabeledWindowSet {
        category: track.taxonomy.category,
        windows: Vec::new(),
        labels: Vec::new(),
    };
    for (i, w) in windows.iter().enumerate() {
        if let Some(class) = track.class_at(w.midpoint_ms()) {
            set.windows.push(i);
            set.labels.push(class);
        }
    }
    set
}
