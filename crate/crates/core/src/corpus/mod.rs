//! Corpus ingestion, lyric cleaning and task-specific curation.

mod clean;
mod curate;
pub mod io;
mod load;
mod record;
mod split;
pub mod synthetic;

pub use clean::{clean_lyrics, word_count};
pub use curate::{
    apply_base_filters, curate, curate_genre_dataset, curate_success_dataset, curate_year_dataset,
    BaseFilterConfig, CuratedDataset, CuratedEntry, CurationConfig, GenreCuration,
    SuccessCuration, YearCuration,
};
pub use load::{
    load_corpus, load_corpus_from, write_corpus, ColumnMapping, CorpusReader, LoadReport, Reject,
};
pub use record::{Genre, Label, SongRecord, Split, Task};
pub use split::{assign_splits, SplitRatios};
