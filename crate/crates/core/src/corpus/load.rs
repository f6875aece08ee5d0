use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::SongRecord;
use crate::error::{Error, Result};

/// Maps logical fields to CSV header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    /// Optional; rows get `row-<n>` ids when absent.
    pub id: Option<String>,
    pub title: String,
    pub artist: String,
    pub genre: String,
    pub year: String,
    pub views: String,
    pub lyrics: String,
    pub language: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            id: Some("id".into()),
            title: "title".into(),
            artist: "artist".into(),
            genre: "tag".into(),
            year: "year".into(),
            views: "views".into(),
            lyrics: "lyrics".into(),
            language: "language".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based data row number (header excluded).
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: u64,
    pub rows_rejected: u64,
    pub rejects: Vec<Reject>,
}

impl LoadReport {
    /// Writes the rejected rows as a `row,reason` CSV sidecar.
    pub fn write_rejects(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["row", "reason"])?;
        for r in &self.rejects {
            w.write_record([r.row.to_string(), r.reason.clone()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

struct Columns {
    id: Option<usize>,
    title: usize,
    artist: usize,
    genre: usize,
    year: usize,
    views: usize,
    lyrics: usize,
    language: usize,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, mapping: &ColumnMapping) -> Result<Self> {
        let find = |field: &str, column: &str| {
            headers
                .iter()
                .position(|h| h == column)
                .ok_or_else(|| Error::MissingColumn {
                    field: field.to_string(),
                    column: column.to_string(),
                })
        };
        Ok(Self {
            id: match &mapping.id {
                Some(col) => Some(find("id", col)?),
                None => None,
            },
            title: find("title", &mapping.title)?,
            artist: find("artist", &mapping.artist)?,
            genre: find("genre", &mapping.genre)?,
            year: find("year", &mapping.year)?,
            views: find("views", &mapping.views)?,
            lyrics: find("lyrics", &mapping.lyrics)?,
            language: find("language", &mapping.language)?,
        })
    }

    fn parse(&self, row: u64, rec: &csv::StringRecord) -> std::result::Result<SongRecord, String> {
        let get = |i: usize, name: &str| {
            rec.get(i)
                .ok_or_else(|| format!("missing field {name}"))
        };
        let year = get(self.year, "year")?
            .trim()
            .parse::<i32>()
            .map_err(|_| "year not an integer".to_string())?;
        let views_raw = get(self.views, "views")?.trim();
        let views = views_raw.parse::<u64>().map_err(|_| {
            if views_raw.parse::<i64>().is_ok() {
                "views negative".to_string()
            } else {
                "views not an integer".to_string()
            }
        })?;
        let id = match self.id {
            Some(i) => {
                let id = get(i, "id")?.trim();
                if id.is_empty() {
                    return Err("id empty".into());
                }
                id.to_string()
            }
            None => format!("row-{row}"),
        };
        Ok(SongRecord {
            id,
            title: get(self.title, "title")?.to_string(),
            artist: get(self.artist, "artist")?.to_string(),
            genre: get(self.genre, "genre")?.trim().to_string(),
            year,
            views,
            lyrics: get(self.lyrics, "lyrics")?.to_string(),
            language: get(self.language, "language")?.trim().to_string(),
        })
    }
}

/// Streaming reader yielding parsed records or row-level rejects.
pub struct CorpusReader<R: io::Read> {
    reader: csv::Reader<R>,
    columns: Columns,
    row: u64,
}

impl CorpusReader<File> {
    pub fn open(path: &Path, mapping: &ColumnMapping) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, mapping)
    }
}

impl<R: io::Read> CorpusReader<R> {
    pub fn from_reader(input: R, mapping: &ColumnMapping) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let headers = reader.headers()?.clone();
        let columns = Columns::resolve(&headers, mapping)?;
        Ok(Self {
            reader,
            columns,
            row: 0,
        })
    }
}

impl<R: io::Read> Iterator for CorpusReader<R> {
    type Item = std::result::Result<SongRecord, Reject>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut rec = csv::StringRecord::new();
        self.row += 1;
        let row = self.row;
        match self.reader.read_record(&mut rec) {
            Ok(false) => None,
            Ok(true) => Some(self.columns.parse(row, &rec).map_err(|reason| Reject { row, reason })),
            Err(e) => Some(Err(Reject {
                row,
                reason: format!("malformed row: {e}"),
            })),
        }
    }
}

/// Loads a whole corpus file. Unparseable rows are counted and skipped.
pub fn load_corpus(path: &Path, mapping: &ColumnMapping) -> Result<(Vec<SongRecord>, LoadReport)> {
    let reader = CorpusReader::open(path, mapping)?;
    Ok(collect(reader))
}

pub fn load_corpus_from<R: io::Read>(
    input: R,
    mapping: &ColumnMapping,
) -> Result<(Vec<SongRecord>, LoadReport)> {
    Ok(collect(CorpusReader::from_reader(input, mapping)?))
}

fn collect<R: io::Read>(reader: CorpusReader<R>) -> (Vec<SongRecord>, LoadReport) {
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for item in reader {
        report.rows_read += 1;
        match item {
            Ok(r) => records.push(r),
            Err(reject) => {
                log::debug!("rejected row {}: {}", reject.row, reject.reason);
                report.rows_rejected += 1;
                report.rejects.push(reject);
            }
        }
    }
    (records, report)
}

/// Writes raw records with the default column names.
pub fn write_corpus<W: Write>(out: W, records: &[SongRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "title", "tag", "artist", "year", "views", "lyrics", "language"])?;
    for r in records {
        w.write_record([
            r.id.as_str(),
            &r.title,
            &r.genre,
            &r.artist,
            &r.year.to_string(),
            &r.views.to_string(),
            &r.lyrics,
            &r.language,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<corpus writer>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    const HEADER: &str = "id,title,tag,artist,year,views,lyrics,language\n";

    fn load(body: &str) -> (Vec<SongRecord>, LoadReport) {
        load_corpus_from(format!("{HEADER}{body}").as_bytes(), &ColumnMapping::default()).unwrap()
    }

    #[test]
    fn three_rows_no_rejects() {
        let (records, report) = load(
            "1,A,pop,X,2001,10,\"la la\",en\n2,B,rap,Y,1999,5,yo,en\n3,C,rock,Z,1970,0,\"say \"\"hi\"\"\",en\n",
        );
        assert_eq!(records.len(), 3);
        assert_eq!(report.rows_read, 3);
        assert_eq!(report.rows_rejected, 0);
        assert_eq!(records[2].lyrics, "say \"hi\"");
    }

    #[test]
    fn all_six_tags_survive_loading() {
        let body: String = ["pop", "rock", "rb", "rap", "misc", "country"]
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{i},t,{t},a,2000,1,words,en\n"))
            .collect();
        let (records, _) = load(&body);
        let tags: BTreeSet<_> = records.iter().map(|r| r.genre.as_str()).collect();
        assert_eq!(tags.len(), 6);
        assert!(tags.contains("misc"));
    }

    #[test]
    fn bad_views_is_rejected_with_reason() {
        let (records, report) = load("1,A,pop,X,2001,abc,la,en\n2,B,pop,X,2001,-4,la,en\n");
        assert!(records.is_empty());
        assert_eq!(report.rows_rejected, 2);
        assert_eq!(report.rejects[0].reason, "views not an integer");
        assert_eq!(report.rejects[0].row, 1);
        assert_eq!(report.rejects[1].reason, "views negative");
    }

    #[test]
    fn short_row_is_rejected_not_fatal() {
        let (records, report) = load("1,A,pop\n2,B,rap,Y,1999,5,yo,en\n");
        assert_eq!(records.len(), 1);
        assert_eq!(report.rows_rejected, 1);
        assert!(report.rejects[0].reason.starts_with("missing field"));
    }

    #[test]
    fn missing_mapped_column_is_fatal() {
        let mapping = ColumnMapping {
            genre: "genre".into(),
            ..ColumnMapping::default()
        };
        let err = load_corpus_from(HEADER.as_bytes(), &mapping).err().unwrap();
        assert!(matches!(err, Error::MissingColumn { column, .. } if column == "genre"));
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = load_corpus(Path::new("/nonexistent/lyrics.csv"), &ColumnMapping::default())
            .err()
            .unwrap();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn ids_synthesized_without_id_column() {
        let mapping = ColumnMapping {
            id: None,
            ..ColumnMapping::default()
        };
        let data = "title,tag,artist,year,views,lyrics,language\nA,pop,X,2001,10,la,en\n";
        let (records, _) = load_corpus_from(data.as_bytes(), &mapping).unwrap();
        assert_eq!(records[0].id, "row-1");
    }

    #[test]
    fn write_then_load_preserves_records() {
        let (records, _) = load("7,T,pop,\"A, B\",1988,12,\"line one\nline two\",en\n");
        let mut buf = Vec::new();
        write_corpus(&mut buf, &records).unwrap();
        let (again, _) = load_corpus_from(buf.as_slice(), &ColumnMapping::default()).unwrap();
        assert_eq!(records, again);
    }
}
