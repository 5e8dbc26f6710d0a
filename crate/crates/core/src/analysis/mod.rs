//! Valence scores, distinctive words and dialect clustering.

mod cluster;
mod valence;

pub use cluster::{
    cluster_dialects, cluster_reference, parse_dendrogram_json, Dendrogram, Linkage, Merge, Metric,
};
pub use valence::{
    count_terms, default_groups, export_projection_matrix, read_valence_csv, top_valence_words, valence,
    valence_vectors, write_valence_csv, RankedTerm, TermCounts, ValenceMatrix, MSA_GROUP,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("group list is empty or has duplicates")]
    BadGroups,
    #[error("term `{0}` does not occur in any group")]
    AbsentTerm(String),
    #[error("group index {0} out of range")]
    GroupIndex(usize),
    #[error("term counts have different group lists")]
    GroupMismatch,
    #[error("clustering needs at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("non-finite value in column `{0}`")]
    NonFinite(String),
    #[error("malformed valence table: {0}")]
    BadTable(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
