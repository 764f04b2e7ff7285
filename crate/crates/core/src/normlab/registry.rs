//! Operator ids and their parameters, as they appear in configs.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bumps::{BumpProfile, PartitionFamily};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridFunction2D};
use crate::transforms::{
    Composed, EvalOptions, FieldSpec, GridOperator, HighFreqPart, HilbertParabolic, HilbertTruncation, Identity,
    LinearizedMaximal, MaximalOp, OscillatoryPiece, PieceKernel, ProjectPk, ScaleField, SingleScale,
};

/// Declarative scale field `k(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScaleSpec {
    Constant { k: i32 },
    /// Independent uniform integers in `[k_min, k_max]` per grid point.
    Random { k_min: i32, k_max: i32, seed: u64 },
}

impl ScaleSpec {
    pub fn build(&self, grid: &Grid2D) -> Result<ScaleField> {
        match *self {
            ScaleSpec::Constant { k } => Ok(ScaleField::constant(grid, k)),
            ScaleSpec::Random { k_min, k_max, seed } => {
                if k_min > k_max {
                    return Err(Error::InvalidArgument(format!("scale range [{k_min}, {k_max}] is empty")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = Array2::from_shape_simple_fn((grid.nx(), grid.ny()), || rng.random_range(k_min..=k_max));
                ScaleField::new(values, k_min, k_max)
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_truncation() -> HilbertTruncation {
    HilbertTruncation::Sharp { eps: 0.0, r: 4.0 }
}

/// An operator id with its parameters; `build` binds it to a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", deny_unknown_fields)]
pub enum OperatorSpec {
    #[serde(rename = "identity")]
    Identity {
        #[serde(default = "one")]
        scale: f64,
    },
    Pk {
        k: i32,
        #[serde(default)]
        bump: BumpProfile,
    },
    Msharp {
        field: FieldSpec,
        k_min: i32,
        k_max: i32,
        #[serde(default)]
        eval: EvalOptions,
    },
    Msmooth {
        field: FieldSpec,
        k_min: i32,
        k_max: i32,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
    Mk {
        u: f64,
        k: i32,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
    Mlin {
        field: FieldSpec,
        scales: ScaleSpec,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
    H {
        field: FieldSpec,
        #[serde(default = "default_truncation")]
        truncation: HilbertTruncation,
        #[serde(default)]
        family: PartitionFamily,
        #[serde(default)]
        eval: EvalOptions,
    },
    Tl {
        field: FieldSpec,
        l: i32,
        #[serde(default = "abs_kernel")]
        kernel: PieceKernel,
        #[serde(default)]
        family: PartitionFamily,
        #[serde(default)]
        eval: EvalOptions,
    },
    Hhigh {
        field: FieldSpec,
        #[serde(default)]
        family: PartitionFamily,
        #[serde(default)]
        eval: EvalOptions,
    },
    /// The complex single-scale average, whose multiplier is `m^u_k`.
    #[serde(rename = "muk")]
    Muk {
        u: f64,
        k: i32,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
    #[serde(rename = "Msmooth∘Pk", alias = "Msmooth-Pk")]
    MsmoothPk {
        field: FieldSpec,
        k_min: i32,
        k_max: i32,
        k: i32,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
    #[serde(rename = "H∘Pk", alias = "H-Pk")]
    HPk {
        field: FieldSpec,
        k: i32,
        #[serde(default = "default_truncation")]
        truncation: HilbertTruncation,
        #[serde(default)]
        family: PartitionFamily,
        #[serde(default)]
        bump: BumpProfile,
        #[serde(default)]
        eval: EvalOptions,
    },
}

fn abs_kernel() -> PieceKernel {
    PieceKernel::Abs
}

/// `muk` as an operator: the linear average before the modulus.
#[derive(Debug)]
struct MukOp(SingleScale);

impl GridOperator for MukOp {
    fn id(&self) -> String {
        "muk".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.0.average(f)
    }
}

impl OperatorSpec {
    pub fn id(&self) -> &'static str {
        match self {
            OperatorSpec::Identity { .. } => "identity",
            OperatorSpec::Pk { .. } => "Pk",
            OperatorSpec::Msharp { .. } => "Msharp",
            OperatorSpec::Msmooth { .. } => "Msmooth",
            OperatorSpec::Mk { .. } => "Mk",
            OperatorSpec::Mlin { .. } => "Mlin",
            OperatorSpec::H { .. } => "H",
            OperatorSpec::Tl { .. } => "Tl",
            OperatorSpec::Hhigh { .. } => "Hhigh",
            OperatorSpec::Muk { .. } => "muk",
            OperatorSpec::MsmoothPk { .. } => "Msmooth∘Pk",
            OperatorSpec::HPk { .. } => "H∘Pk",
        }
    }

    /// Binds the operator to `grid` (fields are sampled on its x-grid).
    pub fn build(&self, grid: &Grid2D) -> Result<Box<dyn GridOperator>> {
        Ok(match self {
            OperatorSpec::Identity { scale } => Box::new(Identity { scale: *scale }),
            OperatorSpec::Pk { k, bump } => Box::new(ProjectPk { k: *k, profile: *bump }),
            OperatorSpec::Msharp { field, k_min, k_max, eval } => {
                Box::new(MaximalOp::sharp(field.build(grid)?, (*k_min, *k_max), *eval)?)
            }
            OperatorSpec::Msmooth {
                field,
                k_min,
                k_max,
                bump,
                eval,
            } => Box::new(MaximalOp::smoothed(field.build(grid)?, *bump, (*k_min, *k_max), *eval)?),
            OperatorSpec::Mk { u, k, bump, eval } => Box::new(SingleScale::new(*u, *k, *bump, *eval)?),
            OperatorSpec::Mlin {
                field,
                scales,
                bump,
                eval,
            } => Box::new(LinearizedMaximal::new(field.build(grid)?, scales.build(grid)?, *bump, *eval)?),
            OperatorSpec::H {
                field,
                truncation,
                family,
                eval,
            } => Box::new(HilbertParabolic::new(field.build(grid)?, *truncation, *family, *eval)?),
            OperatorSpec::Tl {
                field,
                l,
                kernel,
                family,
                eval,
            } => Box::new(OscillatoryPiece::new(field.build(grid)?, *l, *kernel, *family, *eval)),
            OperatorSpec::Hhigh { field, family, eval } => Box::new(HighFreqPart::new(field.build(grid)?, *family, *eval)),
            OperatorSpec::Muk { u, k, bump, eval } => Box::new(MukOp(SingleScale::new(*u, *k, *bump, *eval)?)),
            OperatorSpec::MsmoothPk {
                field,
                k_min,
                k_max,
                k,
                bump,
                eval,
            } => Box::new(Composed {
                outer: Box::new(MaximalOp::smoothed(field.build(grid)?, *bump, (*k_min, *k_max), *eval)?),
                inner: Box::new(ProjectPk { k: *k, profile: *bump }),
            }),
            OperatorSpec::HPk {
                field,
                k,
                truncation,
                family,
                bump,
                eval,
            } => Box::new(Composed {
                outer: Box::new(HilbertParabolic::new(field.build(grid)?, *truncation, *family, *eval)?),
                inner: Box::new(ProjectPk { k: *k, profile: *bump }),
            }),
        })
    }
}

/// One parameter of a catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub kind: &'static str,
    pub required: bool,
}

/// A catalog entry for `list-ops`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpInfo {
    pub id: &'static str,
    pub summary: &'static str,
    pub params: Vec<ParamInfo>,
}

const FIELD: ParamInfo = ParamInfo {
    name: "field",
    kind: "field spec {kind: constant|steps|sinusoid|random, ...}",
    required: true,
};
const BUMP: ParamInfo = ParamInfo {
    name: "bump",
    kind: "{support: [a, b], plateau: [c, d]}",
    required: false,
};
const FAMILY: ParamInfo = ParamInfo {
    name: "family",
    kind: "{support: [a, b], plateau: [c, d]} with d = 2a, b = 2c",
    required: false,
};
const EVAL: ParamInfo = ParamInfo {
    name: "eval",
    kind: "{scheme: fourier|bilinear, boundary: periodic|zero, fixed_nodes: int}",
    required: false,
};

const fn int(name: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        kind: "integer",
        required: true,
    }
}

const fn real(name: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        kind: "real",
        required: true,
    }
}

const TRUNC: ParamInfo = ParamInfo {
    name: "truncation",
    kind: "{kind: sharp, eps, r} | {kind: partition, levels}",
    required: false,
};

/// Every operator id with its parameter schema.
pub fn catalog() -> Vec<OpInfo> {
    vec![
        OpInfo {
            id: "identity",
            summary: "c f",
            params: vec![ParamInfo {
                name: "scale",
                kind: "real",
                required: false,
            }],
        },
        OpInfo {
            id: "Pk",
            summary: "Littlewood-Paley projection in y, height-1 symbol phi0(eta / 2^k)",
            params: vec![int("k"), BUMP],
        },
        OpInfo {
            id: "Msharp",
            summary: "sup over k of the window mean along (t, u(x) t^2), |t| <= 2^k",
            params: vec![FIELD, int("k_min"), int("k_max"), EVAL],
        },
        OpInfo {
            id: "Msmooth",
            summary: "sup over k of |integral f(x - t, y - u(x) t^2) phi_k(t) dt|",
            params: vec![FIELD, int("k_min"), int("k_max"), BUMP, EVAL],
        },
        OpInfo {
            id: "Mk",
            summary: "single-scale average for fixed u and k, modulus",
            params: vec![real("u"), int("k"), BUMP, EVAL],
        },
        OpInfo {
            id: "Mlin",
            summary: "linearised maximal operator with scale field k(x, y)",
            params: vec![
                FIELD,
                ParamInfo {
                    name: "scales",
                    kind: "{kind: constant, k} | {kind: random, k_min, k_max, seed}",
                    required: true,
                },
                BUMP,
                EVAL,
            ],
        },
        OpInfo {
            id: "H",
            summary: "truncated Hilbert transform along (t, u(x) t^2)",
            params: vec![FIELD, TRUNC, FAMILY, EVAL],
        },
        OpInfo {
            id: "Tl",
            summary: "dyadic piece integral f(x - t, y - u t^2) psi_l(u^(1/2) t) dt / |t| (or / t)",
            params: vec![
                FIELD,
                int("l"),
                ParamInfo {
                    name: "kernel",
                    kind: "abs|signed",
                    required: false,
                },
                FAMILY,
                EVAL,
            ],
        },
        OpInfo {
            id: "Hhigh",
            summary: "high part integral f(x - t, y - u t^2) Psi0(u^(1/2) t) dt / t",
            params: vec![FIELD, FAMILY, EVAL],
        },
        OpInfo {
            id: "muk",
            summary: "operator with multiplier m^u_k (complex single-scale average)",
            params: vec![real("u"), int("k"), BUMP, EVAL],
        },
        OpInfo {
            id: "Msmooth∘Pk",
            summary: "Msmooth after Pk",
            params: vec![FIELD, int("k_min"), int("k_max"), int("k"), BUMP, EVAL],
        },
        OpInfo {
            id: "H∘Pk",
            summary: "H after Pk",
            params: vec![FIELD, int("k"), TRUNC, FAMILY, BUMP, EVAL],
        },
    ]
}

/// Catalog entry for `id`, or [`Error::UnknownOperator`].
pub fn lookup(id: &str) -> Result<OpInfo> {
    catalog()
        .into_iter()
        .find(|o| o.id == id)
        .ok_or_else(|| Error::UnknownOperator(id.to_string()))
}
