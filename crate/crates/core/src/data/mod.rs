//! Series ingest, aggregation, normalization, windowing and date splits.

mod normalize;
mod series;
mod split;
pub mod synth;
mod window;

pub use normalize::Normalizer;
pub use series::{
    aggregate, format_timestamp, ingest_csv, parse_timestamp, write_series_csv, AggregateOp,
    GapPolicy, IngestOptions, SeriesSidecar, TimeSeries,
};
pub use split::{split_by_date, SplitSpec};
pub use window::{make_windows, read_windows, write_windows, WindowSidecar, WindowedDataset};
