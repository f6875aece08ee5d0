use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One corpus row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongRecord {
    pub id: String,
    pub title: String,
    pub artist: String,
    /// Raw genre tag as found in the corpus (`tag` column).
    pub genre: String,
    pub year: i32,
    pub views: u64,
    pub lyrics: String,
    /// ISO-639-1 code.
    pub language: String,
}

/// The five musical genres that remain once `misc` is dropped.
///
/// Variant order is the alphabetical class order used by every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Country,
    Pop,
    Rap,
    Rb,
    Rock,
}

impl Genre {
    pub const ALL: [Genre; 5] = [
        Genre::Country,
        Genre::Pop,
        Genre::Rap,
        Genre::Rb,
        Genre::Rock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::Country => "country",
            Genre::Pop => "pop",
            Genre::Rap => "rap",
            Genre::Rb => "rb",
            Genre::Rock => "rock",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genre::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::UnknownGenre(s.to_string()))
    }
}

/// Which predictor a curated dataset feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Genre,
    Success,
    Year,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Genre, Task::Success, Task::Year];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Genre => "genre",
            Task::Success => "success",
            Task::Year => "year",
        }
    }

    /// Class order for the classification tasks.
    pub fn classes(self) -> Option<Vec<String>> {
        match self {
            Task::Genre => Some(Genre::ALL.iter().map(|g| g.to_string()).collect()),
            Task::Success => Some(vec!["fail".into(), "success".into()]),
            Task::Year => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown task {s:?}")))
    }
}

/// Per-record target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Genre(Genre),
    Success(bool),
    Year(i32),
}

impl Label {
    /// Textual form stored in the dataset file and used as class name.
    pub fn to_class(self) -> String {
        match self {
            Label::Genre(g) => g.to_string(),
            Label::Success(true) => "success".into(),
            Label::Success(false) => "fail".into(),
            Label::Year(y) => y.to_string(),
        }
    }

    pub fn parse(task: Task, s: &str) -> Result<Self, Error> {
        match task {
            Task::Genre => s.parse().map(Label::Genre),
            Task::Success => match s {
                "success" => Ok(Label::Success(true)),
                "fail" => Ok(Label::Success(false)),
                other => Err(Error::UnknownLabel(other.to_string())),
            },
            Task::Year => s
                .parse()
                .map(Label::Year)
                .map_err(|_| Error::UnknownLabel(s.to_string())),
        }
    }

    pub fn year(self) -> Option<i32> {
        match self {
            Label::Year(y) => Some(y),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown split {s:?}")))
    }
}
