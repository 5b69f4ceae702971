use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid quadrature: {0}")]
    Quadrature(String),

    #[error("grid functions live on different meshes")]
    MeshMismatch,

    #[error("evaluation failed: {0}")]
    Eval(String),

    #[error("f({t}, {u}, {v}) = {value} is negative")]
    NegativeSource { t: f64, u: f64, v: f64, value: f64 },

    #[error("g({t}) = {value} is negative")]
    NegativeWeight { t: f64, value: f64 },

    #[error("sigma({s}) = {value} leaves the history-extended interval [{lo}, 1]")]
    DeviationOutOfRange { s: f64, value: f64, lo: f64 },

    #[error("boundary functional is negative: B[u] = {0}")]
    NegativeFunctional(f64),

    #[error("F(u) vanishes on [0,1]; condition (c) violated numerically")]
    DegenerateImage,

    #[error("cone defect {defect:e} exceeds tolerance {tol:e}")]
    ConeViolation { defect: f64, tol: f64 },

    #[error("invalid solver options: {0}")]
    Options(String),
}
