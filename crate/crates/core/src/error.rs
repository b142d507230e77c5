// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the quantization pipeline.
///
/// Validation problems in a parsed netlist are reported as data through
/// [`crate::netlist::Violation`]; this type covers failures that stop a
/// computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: mesh `{mesh}` references unknown branch `{branch}`")]
    UnknownBranch { line: usize, mesh: String, branch: String },

    #[error("line {line}: parameter {name} of `{id}` must be positive, got {value}")]
    NonPositiveParameter {
        line: usize,
        id: String,
        name: String,
        value: f64,
    },

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("{0} requires a single mesh")]
    NotSingleLoop(&'static str),

    #[error("mesh matrix is rank deficient (rank {rank}, {meshes} meshes)")]
    RankDeficient { rank: usize, meshes: usize },

    #[error("circuit `{circuit}` is numerically ill-conditioned: {detail}")]
    IllConditioned { circuit: String, detail: String },

    #[error("augmented transform matrix is singular; dof rows are not independent of the mesh rows")]
    SingularTransform,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("gauge pair ({m_l}, {m_r}) is not allowed: {reason}")]
    InvalidGauge { m_l: f64, m_r: f64, reason: String },

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error("requested {requested} eigenpairs but the basis has dimension {dimension}")]
    TooManyEigenpairs { requested: usize, dimension: usize },

    #[error("index {index} out of range (have {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("time step {dt} ns is too coarse (limit {limit} ns)")]
    TimeStepTooCoarse { dt: f64, limit: f64 },

    #[error("noise band limit {band_limit} rad/ns does not cover the transition frequency {omega} rad/ns")]
    BandTooNarrow { band_limit: f64, omega: f64 },

    #[error("invalid simulation setting: {0}")]
    InvalidSetting(String),

    #[error("fit window [{start}, {end}] ns contains fewer than three samples")]
    EmptyFitWindow { start: f64, end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
