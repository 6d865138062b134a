//! The feature catalog: metric acronyms and their canonical column orders.

/// Method-level product metrics.
pub const METHOD_METRICS: [&str; 31] = [
    "CC", "MND", "NP", "HD", "HL", "HV", "HVOL", "HEFF", "HMI", "HDOP", "HDND", "HTOP", "HTOA",
    "LOC", "BLOC", "DLOC", "ELOC", "STMT", "DSTMT", "ESTMT", "NIN", "NOUT", "NE", "NEE", "COMLOC",
    "CCR", "CLWB", "CCR-B", "FI", "FO", "CR",
];

/// Class-level product metrics, taken from the method's innermost enclosing class.
pub const CLASS_METRICS: [&str; 12] = [
    "CLLOC", "CCODE", "CDLOC", "CELOC", "NOM", "NOM-A", "NIV", "CCOM", "CCR-C", "DIT", "BCs", "DCs",
];

/// File-level product metrics.
pub const FILE_METRICS: [&str; 11] = [
    "F-CC", "F-MND", "F-NPLOG", "F-TLOC", "F-CLOC", "F-BLOC", "F-STMT", "F-DSTMT", "F-ESTMT",
    "F-COMLOC", "F-CCR",
];

pub const PYTHON_METRICS: [&str; 2] = ["PMI", "PMN"];

pub const STATISTICAL_METRICS: [&str; 1] = ["ENT"];

/// Process metrics in catalog order.
pub const PROCESS_METRICS: [&str; 25] = [
    "AGE", "BD", "FC", "ACCH", "MCCH", "TCCH", "TMS", "TC", "CMC", "MCLC", "ACLC", "TCC", "CCA",
    "CCD", "CPC", "MCA", "MCD", "TMC", "AMLC", "MMLC", "DA", "ADE", "DCN", "ACA", "ACCA",
];

/// Number of product metric columns (method, class, file, Python-specific).
pub const PRODUCT_COUNT: usize = 56;

/// Number of model features: product, statistical and process metrics.
pub const FEATURE_COUNT: usize = 82;

/// Product metric columns grouped method / class / file / Python-specific.
pub fn product_columns() -> Vec<&'static str> {
    METHOD_METRICS
        .iter()
        .chain(CLASS_METRICS.iter())
        .chain(FILE_METRICS.iter())
        .chain(PYTHON_METRICS.iter())
        .copied()
        .collect()
}

/// All model features in catalog order (category by category, as the metric
/// table lists them). This is the dataset header.
pub fn feature_columns() -> Vec<&'static str> {
    [
        // complexity
        "CC", "MND", "NP", "HD", "HL", "HV", "HVOL", "HEFF", "HMI", "HDOP", "HDND", "HTOP", "HTOA",
        "F-CC", "F-MND", "F-NPLOG",
        // size
        "LOC", "BLOC", "DLOC", "ELOC", "STMT", "DSTMT", "ESTMT", "NIN", "NOUT", "NE", "NEE",
        "CLLOC", "CCODE", "CDLOC", "CELOC", "NOM", "NOM-A", "NIV",
        "F-TLOC", "F-CLOC", "F-BLOC", "F-STMT", "F-DSTMT", "F-ESTMT",
        // documentation
        "COMLOC", "CCR", "CLWB", "CCR-B", "CCOM", "CCR-C", "F-COMLOC", "F-CCR",
        // coupling & inheritance
        "FI", "FO", "CR", "DIT", "BCs", "DCs",
        // python specific
        "PMI", "PMN",
        // statistical
        "ENT",
    ]
    .iter()
    .chain(PROCESS_METRICS.iter())
    .copied()
    .collect()
}
