use std::fmt;

use serde::{Deserialize, Serialize};

use super::laws::{AsymptoticLaw, LawShape};
use super::scaling::{R0Scaling, ScalingSpec};
use crate::error::{Error, Result};

/// Margins closer to zero than this are treated as exact ties.
const MARGIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    C1_1,
    C1_2,
    C1_3,
    C2_1,
    C2_2,
    Boundary,
    OutOfScope(String),
}

impl CaseLabel {
    pub fn is_case(&self) -> bool {
        !matches!(self, Self::Boundary | Self::OutOfScope(_))
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::C1_1 => f.write_str("C1_1"),
            Self::C1_2 => f.write_str("C1_2"),
            Self::C1_3 => f.write_str("C1_3"),
            Self::C2_1 => f.write_str("C2_1"),
            Self::C2_2 => f.write_str("C2_2"),
            Self::Boundary => f.write_str("boundary"),
            Self::OutOfScope(reason) => write!(f, "out_of_scope({reason})"),
        }
    }
}

/// One strict inequality `margin < 0` evaluated on the exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub condition: &'static str,
    /// Negative when the condition holds, zero on the boundary.
    pub margin: f64,
}

impl ConditionCheck {
    fn new(condition: &'static str, margin: f64) -> Self {
        Self { condition, margin }
    }

    pub fn holds(&self) -> bool {
        self.margin < -MARGIN_TOL
    }

    pub fn tied(&self) -> bool {
        self.margin.abs() <= MARGIN_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: CaseLabel,
    pub checks: Vec<ConditionCheck>,
}

fn settle(label: CaseLabel, checks: Vec<ConditionCheck>) -> Classification {
    Classification { label, checks }
}

/// Outcome of one case's conditions: all hold, some tie, or some fail.
fn verdict(checks: &[ConditionCheck]) -> Option<bool> {
    if checks.iter().all(ConditionCheck::holds) {
        Some(true)
    } else if checks.iter().any(|c| !c.holds() && !c.tied()) {
        Some(false)
    } else {
        None
    }
}

/// Assigns the scaling to a case by exponent arithmetic.
pub fn classify_case(spec: &ScalingSpec) -> CaseLabel {
    classify_detailed(spec).label
}

/// [`classify_case`] with the individual condition margins.
pub fn classify_detailed(spec: &ScalingSpec) -> Classification {
    if let Err(e) = spec.validate() {
        return settle(CaseLabel::OutOfScope(format!("invalid scaling: {e}")), Vec::new());
    }
    let gap = &spec.lambda_gap;
    let g = gap.order();
    let u = spec.i0.exponent.0;
    let gamma_order = -spec.gamma.exponent.0;

    match spec.r0 {
        R0Scaling::Fraction { .. } => {
            if !gap.at_most_critical() {
                return settle(
                    CaseLabel::OutOfScope("macroscopic R0 requires λ <= 1".into()),
                    Vec::new(),
                );
            }
            let small = vec![
                ConditionCheck::new("γ → 0", gamma_order),
                ConditionCheck::new("I₀ = o(N)", u - 1.0),
            ];
            if u == 0.0 {
                let checks = vec![small[0].clone()];
                return match verdict(&checks) {
                    Some(true) => settle(CaseLabel::C2_1, checks),
                    Some(false) => settle(CaseLabel::OutOfScope("γ does not vanish".into()), checks),
                    None => settle(CaseLabel::Boundary, checks),
                };
            }
            let mut checks = small;
            checks.push(ConditionCheck::new("I₀ → ∞", -u));
            match verdict(&checks) {
                Some(true) => settle(CaseLabel::C2_2, checks),
                Some(false) => settle(CaseLabel::OutOfScope("no case conditions hold".into()), checks),
                None => settle(CaseLabel::Boundary, checks),
            }
        }
        R0Scaling::Power { exponent, .. } => {
            let v = exponent.0;
            let c11 = vec![
                ConditionCheck::new("I₀|1−λ| → 0", u + g),
                ConditionCheck::new("I₀R₀ = o(N)", u + v - 1.0),
                ConditionCheck::new("I₀ = o(N^½γ^½)", u - (1.0 + gamma_order) / 2.0),
            ];
            let v11 = verdict(&c11);
            if gap.supercritical() {
                return match v11 {
                    Some(true) => settle(CaseLabel::C1_1, c11),
                    None => settle(CaseLabel::Boundary, c11),
                    Some(false) => settle(
                        CaseLabel::OutOfScope("supercritical beyond Case 1.1".into()),
                        c11,
                    ),
                };
            }
            if v11 == Some(true) {
                return settle(CaseLabel::C1_1, c11);
            }

            let subcritical = gap.strictly_subcritical();
            let mut all = c11.clone();
            if (u + g).abs() <= MARGIN_TOL && subcritical {
                let c12 = vec![c11[1].clone(), c11[2].clone()];
                all = c12.clone();
                match verdict(&c12) {
                    Some(true) => return settle(CaseLabel::C1_2, c12),
                    None => return settle(CaseLabel::Boundary, c12),
                    Some(false) => {}
                }
            } else if u + g > MARGIN_TOL && subcritical {
                let c13 = vec![
                    ConditionCheck::new("I₀(1−λ) → ∞", -(u + g)),
                    ConditionCheck::new("I₀ = o(N(1−λ)γ/log)", u - (1.0 + g + gamma_order)),
                    ConditionCheck::new("R₀ log = o(N(1−λ))", v - (1.0 + g)),
                ];
                all = c13.clone();
                match verdict(&c13) {
                    Some(true) => return settle(CaseLabel::C1_3, c13),
                    None => return settle(CaseLabel::Boundary, c13),
                    Some(false) => {}
                }
            } else if v11.is_none() {
                return settle(CaseLabel::Boundary, c11);
            }
            if !subcritical && !gap.at_most_critical() {
                return settle(CaseLabel::OutOfScope("λ is not eventually below 1".into()), all);
            }
            settle(CaseLabel::OutOfScope("no case conditions hold".into()), all)
        }
    }
}

/// Limit law for the given case with its normalization evaluated at the
/// finite population `n`.
///
/// The normalized time is `w = t / time_scale − time_shift`, so Case 1.3's
/// `(1−λ)T − log((1−λ)I₀)` becomes `time_scale = 1/(1−λ)` and
/// `time_shift = log((1−λ)I₀)`.
pub fn law_for_case(label: &CaseLabel, spec: &ScalingSpec, n: u64) -> Result<AsymptoticLaw> {
    spec.validate()?;
    let i0 = spec.i0(n);
    let growing = spec.i0.exponent.0 > 0.0;
    let gap_n = spec.lambda_gap.value(n as f64);
    let lim_gap = spec.lambda_gap.limit();
    let macro_a = lim_gap + (1.0 - lim_gap) * spec.r0_fraction_limit();
    match label {
        CaseLabel::C1_1 if growing => AsymptoticLaw::new(LawShape::Case11Growing, i0 as f64, 0.0),
        CaseLabel::C1_1 => AsymptoticLaw::unscaled(LawShape::Case11Finite { i0 }),
        CaseLabel::C1_2 => {
            // lim I₀(1−λ)
            let a = if growing {
                spec.i0.coeff * spec.lambda_gap.coeff
            } else {
                i0 as f64 * lim_gap
            };
            if growing {
                AsymptoticLaw::new(LawShape::Case12Growing { a }, i0 as f64, 0.0)
            } else {
                AsymptoticLaw::unscaled(LawShape::Case12Finite { a, i0 })
            }
        }
        CaseLabel::C1_3 => {
            if !(gap_n > 0.0) {
                return Err(Error::Hypothesis(format!("Case 1.3 needs λ < 1, got 1−λ = {gap_n} at N = {n}")));
            }
            AsymptoticLaw::new(LawShape::Gumbel, 1.0 / gap_n, (gap_n * i0 as f64).ln())
        }
        CaseLabel::C2_1 => AsymptoticLaw::unscaled(LawShape::Case12Finite { a: macro_a, i0 }),
        CaseLabel::C2_2 => AsymptoticLaw::new(LawShape::Gumbel, 1.0 / macro_a, (macro_a * i0 as f64).ln()),
        other => Err(Error::Unsupported(format!("no limit law for label {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::scaling::{Exponent, LambdaGap, PowerLaw};

    fn power_spec(sign: i8, p: f64, q: f64, u: f64, v: f64) -> ScalingSpec {
        ScalingSpec {
            lambda_gap: LambdaGap::power(sign, 1.0, p),
            gamma: PowerLaw::new(1.0, q),
            i0: PowerLaw::new(1.0, u),
            r0: R0Scaling::Power {
                coeff: 1.0,
                exponent: Exponent(v),
            },
        }
    }

    #[test]
    fn labels_display() {
        assert_eq!(CaseLabel::C2_1.to_string(), "C2_1");
        assert_eq!(CaseLabel::Boundary.to_string(), "boundary");
        assert_eq!(
            CaseLabel::OutOfScope("supercritical beyond Case 1.1".into()).to_string(),
            "out_of_scope(supercritical beyond Case 1.1)"
        );
    }

    #[test]
    fn boundary_on_exact_tie() {
        // u = (1 - q)/2 exactly
        let spec = power_spec(1, 0.5, 0.5, 0.25, 0.1);
        assert_eq!(classify_case(&spec), CaseLabel::Boundary);
    }

    #[test]
    fn supercritical_outside_case_1_1() {
        let spec = power_spec(-1, 0.1, 0.1, 0.3, 0.1);
        assert_eq!(classify_case(&spec), CaseLabel::OutOfScope("supercritical beyond Case 1.1".into()));
    }

    #[test]
    fn case_1_2_with_constant_initial_infecteds() {
        let spec = ScalingSpec {
            lambda_gap: LambdaGap::power(1, 0.5, 0.0),
            gamma: PowerLaw::new(1.0, 0.5),
            i0: PowerLaw::new(3.0, 0.0),
            r0: R0Scaling::Power {
                coeff: 1.0,
                exponent: Exponent(0.2),
            },
        };
        assert_eq!(classify_case(&spec), CaseLabel::C1_2);
        let law = law_for_case(&CaseLabel::C1_2, &spec, 1000).unwrap();
        assert_eq!(law.shape, LawShape::Case12Finite { a: 1.5, i0: 3 });
    }

    #[test]
    fn case_1_1_scale_dichotomy() {
        let growing = power_spec(1, 0.5, 1.0 / 6.0, 0.25, 0.5);
        let law = law_for_case(&CaseLabel::C1_1, &growing, 10_000).unwrap();
        assert_eq!(law.time_scale, 10.0);
        let mut constant = growing;
        constant.i0 = PowerLaw::new(2.0, 0.0);
        let law = law_for_case(&CaseLabel::C1_1, &constant, 10_000).unwrap();
        assert_eq!(law.time_scale, 1.0);
        assert_eq!(law.shape, LawShape::Case11Finite { i0: 2 });
    }

    #[test]
    fn non_cases_have_no_law() {
        let spec = power_spec(1, 0.5, 0.5, 0.25, 0.1);
        assert!(law_for_case(&CaseLabel::Boundary, &spec, 100).is_err());
        assert!(law_for_case(&CaseLabel::OutOfScope("x".into()), &spec, 100).is_err());
    }

    #[test]
    fn gamma_constant_with_macroscopic_r0_is_boundary() {
        let spec = ScalingSpec {
            lambda_gap: LambdaGap::power(1, 1.0, 0.25),
            gamma: PowerLaw::new(1.0, 0.0),
            i0: PowerLaw::new(1.0, 0.2),
            r0: R0Scaling::Fraction { fraction: 0.5 },
        };
        assert_eq!(classify_case(&spec), CaseLabel::Boundary);
    }
}
