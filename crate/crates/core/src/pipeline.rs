//! End-to-end run for one set: orthogonality, property (P), the
//! inequality, its bounds, the witness, unextendibility and tightness.

use serde::{Serialize, Serializer};

use crate::bell::{inequality_from_set, relabel_canonical, BellInequality};
use crate::bounds::{bounds_report, product_epsilon, upb_witness, BoundsOptions, BoundsReport, WitnessReport};
use crate::error::{Error, Result};
use crate::families::{gyni_upb, shifts_upb, LocalPairChoice};
use crate::linalg::span_projector;
use crate::product_set::{check_property_p, gram_orthogonality_check, OrthogonalityReport, PropertyP, PropertyViolation, ProductVectorSet};
use crate::ratio::Rational;
use crate::tightness::{is_tight_with, TightnessOptions, TightnessReport};
use crate::upb::{unextendible_general, unextendible_qubit, ExtendibilityReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A sub-report, or the reason it was not produced.
#[derive(Clone, Debug)]
pub enum Section<T> {
    Done(T),
    Skipped(String),
}

impl<T> Section<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            Section::Done(t) => Some(t),
            Section::Skipped(_) => None,
        }
    }

    /// Capacity and precondition failures become skips; anything else is an
    /// error of the whole run.
    fn from_result(r: Result<T>) -> Result<Self> {
        match r {
            Ok(t) => Ok(Section::Done(t)),
            Err(e @ (Error::Capacity { .. } | Error::Precondition(_) | Error::Undecided(_))) => {
                Ok(Section::Skipped(e.to_string()))
            }
            Err(e) => Err(e),
        }
    }
}

impl<T: Serialize> Serialize for Section<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Skip<'a> {
            skipped: &'a str,
        }
        match self {
            Section::Done(t) => t.serialize(s),
            Section::Skipped(reason) => Skip { skipped: reason }.serialize(s),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDescriptor {
    pub family: String,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyPSummary {
    pub holds: bool,
    /// Measurements per party when (P) holds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<PropertyViolation>,
}

impl From<&PropertyP> for PropertyPSummary {
    fn from(p: &PropertyP) -> Self {
        match p {
            PropertyP::Holds(part) => PropertyPSummary {
                holds: true,
                inputs: Some(part.parties.iter().map(|q| q.subsets.len()).collect()),
                violation: None,
            },
            PropertyP::Violated(v) => PropertyPSummary {
                holds: false,
                inputs: None,
                violation: Some(v.clone()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub input: InputDescriptor,
    pub orthogonality: OrthogonalityReport,
    pub property_p: PropertyPSummary,
    /// Canonical form, with its classical bound.
    pub inequality: Section<BellInequality>,
    pub bounds: Section<BoundsReport>,
    pub witness: Section<WitnessReport>,
    pub extendibility: ExtendibilityReport,
    pub tightness: Section<TightnessReport>,
    pub version: &'static str,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    pub bounds: BoundsOptions,
    pub tightness: TightnessOptions,
}

/// The Shifts set for three parties, the GYNI-type set otherwise.
pub fn family_set(n: usize) -> Result<(InputDescriptor, ProductVectorSet)> {
    let (family, set) = if n == 3 {
        ("shifts", shifts_upb(None)?)
    } else {
        ("gyni", gyni_upb(n, &LocalPairChoice::default_for(n))?)
    };
    Ok((
        InputDescriptor {
            family: family.into(),
            n,
        },
        set,
    ))
}

pub fn pipeline(n: usize, opts: &PipelineOptions) -> Result<PipelineReport> {
    let (input, set) = family_set(n)?;
    pipeline_for_set(input, &set, opts)
}

pub fn pipeline_for_set(input: InputDescriptor, set: &ProductVectorSet, opts: &PipelineOptions) -> Result<PipelineReport> {
    let orthogonality = gram_orthogonality_check(set);
    let p = check_property_p(set);
    let own = match p.partition() {
        Some(part) => {
            let ineq = inequality_from_set(set, part, &vec![Rational::from_integer(1.into()); set.len()])?;
            let beta_c = crate::bounds::classical_bound(&ineq)?.value;
            Ok(ineq.with_classical_bound(beta_c))
        }
        None => Err(Error::Precondition("set violates property (P)".into())),
    };
    let inequality = Section::from_result(own.as_ref().map_err(clone_precondition).and_then(relabel_canonical))?;
    let bounds = Section::from_result(
        own.as_ref()
            .map_err(clone_precondition)
            .and_then(|ineq| bounds_report(ineq, Some(set), &opts.bounds)),
    )?;
    let epsilon = match bounds.done().and_then(|b| b.epsilon) {
        Some(e) => e,
        None => {
            let pi = span_projector(&set.global_kets())?;
            product_epsilon(&pi, set.dims(), opts.bounds.epsilon_restarts, opts.bounds.seed)?.value
        }
    };
    let witness = Section::from_result(upb_witness(set, epsilon).map(WitnessReport::without_matrices))?;
    let extendibility = if set.dims().iter().all(|&d| d == 2) {
        unextendible_qubit(set)?
    } else {
        unextendible_general(set)?
    };
    let tightness = Section::from_result(
        own.as_ref()
            .map_err(clone_precondition)
            .and_then(|ineq| is_tight_with(ineq, &opts.tightness)),
    )?;
    Ok(PipelineReport {
        input,
        orthogonality,
        property_p: (&p).into(),
        inequality,
        bounds,
        witness,
        extendibility,
        tightness,
        version: VERSION,
        seed: opts.bounds.seed,
    })
}

fn clone_precondition(e: &Error) -> Error {
    Error::Precondition(e.to_string())
}
