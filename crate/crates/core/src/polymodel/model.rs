use serde::{Deserialize, Serialize};

use super::dist::{Centering, DistSpec, InputDistribution};
use super::tensor::{CoefficientTensor, TensorSpec};
use crate::calculus::{
    combined_exponent, zeta_chain, ChainGrid, DependenceRegime, Direction, GrowthConstant, RegimeTag, ZetaChain,
};
use crate::envelope::MomentEnvelope;
use crate::error::{Error, Result};

/// How the cells `ξ(i, m)` depend on each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    /// Every cell draws its own uniform.
    Independent,
    /// All cells with the same index `i` share one uniform (and sign).
    Coincident,
    /// `ξ(i, m) = s(i, m)·|F_m⁻¹(ω(i − m + 1))|` with fresh fair signs: the
    /// factors of the diagonal tuples `(i, i+1, …)` share one magnitude.
    LaggedMagnitude,
    /// `ξ(i, m) = η(i, m)·w_i`, `w_i = 1 + spread·(mean sign of all earlier
    /// cells)`: conditionally centered but not independent.
    Modulated { spread: f64 },
    /// Same modulator, driven separately by each vector's own past.
    VectorModulated { spread: f64 },
}

impl Coupling {
    pub fn allowed_in(&self, tag: RegimeTag) -> bool {
        use Coupling::*;
        match tag {
            RegimeTag::Martingale => true,
            RegimeTag::CommonIndependent => matches!(self, Independent),
            RegimeTag::InsideIndependent => matches!(self, Independent | Coincident | LaggedMagnitude),
            RegimeTag::VectorIndependent => matches!(self, Independent | VectorModulated { .. }),
        }
    }

    /// Bound on `|ξ|_p / |η|_p`.
    pub fn inflation(&self) -> f64 {
        match self {
            Coupling::Modulated { spread } | Coupling::VectorModulated { spread } => 1.0 + spread,
            _ => 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Coupling::Independent => "independent",
            Coupling::Coincident => "coincident",
            Coupling::LaggedMagnitude => "lagged_magnitude",
            Coupling::Modulated { .. } => "modulated",
            Coupling::VectorModulated { .. } => "vector_modulated",
        }
    }
}

/// `Q_d = Σ_I b(I)·Π_m ξ(i_m, m)` with its dependence structure.
#[derive(Debug, Clone)]
pub struct PolynomialModel {
    coefficients: CoefficientTensor,
    regime: DependenceRegime,
    factors: Vec<InputDistribution>,
    coupling: Coupling,
}

impl PolynomialModel {
    pub fn new(
        coefficients: CoefficientTensor,
        regime: DependenceRegime,
        factors: Vec<InputDistribution>,
        coupling: Coupling,
    ) -> Result<Self> {
        if factors.len() != coefficients.d() {
            return Err(Error::InvalidParameter(format!(
                "{} factor laws for a degree-{} tensor",
                factors.len(),
                coefficients.d()
            )));
        }
        if !coupling.allowed_in(regime.tag) {
            return Err(Error::Unsupported(format!("coupling {} is not valid in regime {:?}", coupling.label(), regime.tag)));
        }
        match coupling {
            Coupling::LaggedMagnitude if factors.iter().any(|f| f.centering() != Centering::SignSymmetric) => {
                return Err(Error::Unsupported("lagged magnitudes need sign-symmetric factors".into()));
            }
            Coupling::Modulated { spread } | Coupling::VectorModulated { spread } if !(0.0..1.0).contains(&spread) => {
                return Err(Error::InvalidParameter(format!("modulator spread {spread} must lie in [0, 1)")));
            }
            _ => {}
        }
        Ok(Self { coefficients, regime, factors, coupling })
    }

    pub fn d(&self) -> usize {
        self.coefficients.d()
    }

    pub fn n(&self) -> usize {
        self.coefficients.n()
    }

    pub fn coefficients(&self) -> &CoefficientTensor {
        &self.coefficients
    }

    pub fn regime(&self) -> DependenceRegime {
        self.regime
    }

    pub fn factors(&self) -> &[InputDistribution] {
        &self.factors
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn with_coefficients(&self, coefficients: CoefficientTensor) -> Result<Self> {
        Self::new(coefficients, self.regime, self.factors.clone(), self.coupling)
    }

    pub fn with_factors(&self, factors: Vec<InputDistribution>) -> Result<Self> {
        Self::new(self.coefficients.clone(), self.regime, factors, self.coupling)
    }

    /// `(Σ 1/r_m)^(−1)` over the factor laws.
    pub fn combined_exponent(&self) -> f64 {
        combined_exponent(self.factors.iter().map(|f| f.moment_boundary()))
    }

    /// Envelopes `ν_m` dominating every cell of factor `m`: the natural
    /// envelope of the law, inflated by the modulator bound.
    pub fn input_envelopes(&self) -> Result<Vec<MomentEnvelope>> {
        let k = self.coupling.inflation();
        self.factors
            .iter()
            .map(|f| {
                let e = f.natural_envelope()?;
                if k == 1.0 {
                    Ok(e)
                } else {
                    e.scaled(k)
                }
            })
            .collect()
    }

    /// The `ζ` chain of this model's regime with the default constants.
    pub fn zeta(&self, p_grid: &[f64]) -> Result<ZetaChain> {
        zeta_chain(
            self.regime,
            &self.input_envelopes()?,
            &GrowthConstant::MartingaleKM,
            &GrowthConstant::IndependentKI,
            p_grid,
            &ChainGrid::default(),
        )
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        Ok(ModelSpec {
            d: self.d(),
            n: self.n(),
            tensor: TensorSpec::Entries { entries: self.coefficients.iter().map(|(k, v)| (k.clone(), v)).collect() },
            regime: self.regime.tag,
            direction: self.regime.direction,
            coupling: self.coupling,
            factors: self.factors.iter().map(|f| f.spec()).collect::<Result<_>>()?,
            standardize: false,
        })
    }
}

fn forward() -> Direction {
    Direction::Forward
}

/// Serialized form of a [`PolynomialModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub d: usize,
    pub n: usize,
    pub tensor: TensorSpec,
    pub regime: RegimeTag,
    #[serde(default = "forward")]
    pub direction: Direction,
    pub coupling: Coupling,
    /// One law per factor, or a single law shared by all factors.
    pub factors: Vec<DistSpec>,
    /// Rescale to unit-variance inputs and `Var Q = 1`.
    #[serde(default)]
    pub standardize: bool,
}

impl ModelSpec {
    pub fn build(&self) -> Result<PolynomialModel> {
        let laws: Vec<InputDistribution> =
            self.factors.iter().cloned().map(InputDistribution::from_spec).collect::<Result<_>>()?;
        let laws = match laws.len() {
            1 if self.d > 1 => vec![laws[0].clone(); self.d],
            _ => laws,
        };
        let regime = DependenceRegime { tag: self.regime, direction: self.direction };
        let model = PolynomialModel::new(self.tensor.build(self.d, self.n)?, regime, laws, self.coupling)?;
        if self.standardize {
            standardize_model(&model)
        } else {
            Ok(model)
        }
    }
}

/// Divides each factor by its standard deviation and multiplies `b(I)` by
/// `Π_m σ_m`, so `Q` is unchanged while the inputs have unit variance.
pub fn normalize_model(model: &PolynomialModel) -> Result<PolynomialModel> {
    let mut sigmas = Vec::with_capacity(model.d());
    for (m, f) in model.factors.iter().enumerate() {
        let s = f.std_dev().map_err(|_| Error::DegenerateVariance { m: m + 1 })?;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::DegenerateVariance { m: m + 1 });
        }
        sigmas.push(s);
    }
    if sigmas.iter().all(|&s| (s - 1.0).abs() <= 1e-15) {
        return Ok(model.clone());
    }
    let factors = model
        .factors
        .iter()
        .zip(&sigmas)
        .map(|(f, s)| f.clone().with_scale(f.scale() / s))
        .collect::<Result<Vec<_>>>()?;
    let coefficients = model.coefficients.scaled(sigmas.iter().product());
    PolynomialModel::new(coefficients, model.regime, factors, model.coupling)
}

/// [`normalize_model`] followed by rescaling `b` to unit norm, so that
/// `Var Q = 1` whenever the regime makes distinct tuples uncorrelated.
pub fn standardize_model(model: &PolynomialModel) -> Result<PolynomialModel> {
    let m = normalize_model(model)?;
    if m.coefficients.is_normalized() {
        return Ok(m);
    }
    let b = m.coefficients.normalized()?;
    m.with_coefficients(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pareto_model(coupling: Coupling, tag: RegimeTag, centering: Centering) -> Result<PolynomialModel> {
        let f = InputDistribution::pareto_power(6.0, centering)?;
        PolynomialModel::new(
            CoefficientTensor::uniform(2, 4)?,
            DependenceRegime::forward(tag),
            vec![f.clone(), f],
            coupling,
        )
    }

    #[test]
    fn regime_coupling_compatibility() {
        assert!(pareto_model(Coupling::Coincident, RegimeTag::CommonIndependent, Centering::Mean).is_err());
        assert!(pareto_model(Coupling::Coincident, RegimeTag::InsideIndependent, Centering::Mean).is_ok());
        assert!(pareto_model(Coupling::LaggedMagnitude, RegimeTag::InsideIndependent, Centering::Mean).is_err());
        assert!(pareto_model(Coupling::LaggedMagnitude, RegimeTag::Martingale, Centering::SignSymmetric).is_ok());
        assert!(pareto_model(Coupling::Modulated { spread: 0.5 }, RegimeTag::VectorIndependent, Centering::Mean).is_err());
        assert!(pareto_model(Coupling::Modulated { spread: 1.5 }, RegimeTag::Martingale, Centering::Mean).is_err());
    }

    #[test]
    fn normalization_scales_coefficients() {
        let f = InputDistribution::discrete(vec![-2.0, 2.0], vec![0.5, 0.5]).unwrap();
        let m = PolynomialModel::new(
            CoefficientTensor::uniform(2, 3).unwrap(),
            DependenceRegime::forward(RegimeTag::CommonIndependent),
            vec![f.clone(), f],
            Coupling::Independent,
        )
        .unwrap();
        let n = normalize_model(&m).unwrap();
        let (t, b) = m.coefficients().iter().next().unwrap();
        assert_relative_eq!(n.coefficients().get(t), 4.0 * b, max_relative = 1e-15);
        assert_relative_eq!(n.factors()[0].scale(), 0.5);
        let again = normalize_model(&n).unwrap();
        assert_eq!(again.coefficients(), n.coefficients());
        assert!(standardize_model(&m).unwrap().coefficients().is_normalized());
    }

    #[test]
    fn infinite_variance_rejected() {
        let f = InputDistribution::pareto_power(2.0, Centering::Mean).unwrap();
        let m = PolynomialModel::new(
            CoefficientTensor::uniform(1, 3).unwrap(),
            DependenceRegime::forward(RegimeTag::Martingale),
            vec![f],
            Coupling::Independent,
        )
        .unwrap();
        assert!(matches!(normalize_model(&m), Err(Error::DegenerateVariance { m: 1 })));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"d":2,"n":3,"tensor":{"kind":"uniform"},"regime":"common_independent",
            "coupling":{"kind":"independent"},"factors":[{"law":{"kind":"rademacher"}}]}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.factors().len(), 2);
        let again = m.spec().unwrap().build().unwrap();
        assert_eq!(again.coefficients(), m.coefficients());
    }
}
