//! Concrete polynomial models `Q_d`, their input laws and samplers.

pub mod dist;
pub mod index;
pub mod model;
pub mod sample;
pub mod tensor;

pub use dist::{Centering, DistKind, DistSpec, InputDistribution, QuantileFn};
pub use index::{binomial, enumerate_indices, IndexIter, IndexTuple};
pub use model::{normalize_model, standardize_model, Coupling, ModelSpec, PolynomialModel};
pub use sample::{
    read_f64le, sample_cells, sample_distribution, sample_q, sample_q_multi, sample_r, sample_reverse_v, sample_running_max, write_f64le,
    write_sample_csv,
};
pub use tensor::{variance_of_q, CoefficientTensor, TensorSpec};
