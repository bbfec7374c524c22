//! Per-prime verdicts: whether the three hypotheses of the pseudo-null
//! criterion hold for `Q(ζ_p)`, together with the generator/relation counts
//! along the tower and the free pro-`p` consequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernoulli::{irregular_pairs, BernoulliError};
use crate::iwasawa::{self, BranchInvariants, EscalationPolicy, IwasawaError, Orientation};
use crate::padic::{check_prime, PadicError};
use crate::vandiver::{self, Eigenweight, VandiverError, VandiverStatus, WitnessReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_N_MAX: u32 = 3;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Bernoulli(#[from] BernoulliError),
    #[error(transparent)]
    Iwasawa(#[from] IwasawaError),
    #[error(transparent)]
    Vandiver(#[from] VandiverError),
    #[error("the criterion does not apply to p = {0}; no consequence is stated")]
    NotApplicable(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyConfig {
    pub policy: EscalationPolicy,
    pub max_witnesses: usize,
    pub n_max: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            policy: EscalationPolicy::default(),
            max_witnesses: vandiver::DEFAULT_MAX_WITNESSES,
            n_max: DEFAULT_N_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailedCondition {
    /// a witness refuted Vandiver; the one-sided test never produces this
    Vandiver,
    Lambda,
    MLeA,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrregularPairData {
    pub k: u64,
    /// odd companion `p - k`; the branch character `ω^(1-j)` equals `ω^k`
    pub j: u64,
    /// absent when escalation could not settle the branch
    pub invariants: Option<BranchInvariants>,
    pub invariants_error: Option<String>,
    pub vandiver: WitnessReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub applies: bool,
    pub reason: String,
    pub failed_conditions: Vec<FailedCondition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerRow {
    pub n: u32,
    pub g: u64,
    pub s: u64,
    pub r_2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub series: Orientation,
    pub eigenweight: Eigenweight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeCertificate {
    pub schema_version: u32,
    pub p: u64,
    pub is_regular: bool,
    pub index_of_irregularity: usize,
    pub pairs: Vec<IrregularPairData>,
    /// sum of the branch λ's: the minus part, which is all of λ_p under Vandiver
    pub lambda_p: u32,
    pub alpha: usize,
    /// `alpha` rests on an unverified Vandiver hypothesis
    pub alpha_conditional: bool,
    pub theorem1: CriterionVerdict,
    pub lemma2_table: Vec<TowerRow>,
    pub theorem2_note: Option<String>,
    /// `None` for regular primes, where no convention is exercised
    pub conventions: Option<Conventions>,
    /// wall time; excluded from integrity hashes
    #[serde(default)]
    pub elapsed_ms: u64,
}

impl PrimeCertificate {
    /// The unique pair when `i(p) = 1`.
    pub fn single_pair(&self) -> Option<&IrregularPairData> {
        match self.pairs.as_slice() {
            [pair] => Some(pair),
            _ => None,
        }
    }
}

/// `(g, s, r_2)` for `Q(ζ_{p^n})` with `p`-rank `alpha`:
/// `r_2 = φ(p^n)/2`, `g = r_2 + 1 + alpha`, `s = alpha`.
pub fn lemma2_gs(p: u64, n: u32, alpha: u64) -> Result<(u64, u64, u64), PadicError> {
    check_prime(p)?;
    if n == 0 {
        return Err(PadicError::ZeroPrecision);
    }
    let pn = p.checked_pow(n).ok_or(PadicError::PrecisionOverflow { p, prec: n })?;
    let r_2 = (pn - pn / p) / 2;
    Ok((r_2 + 1 + alpha, alpha, r_2))
}

/// The printed variant `r_2 = (p^n + p^(n-1))/2`, kept for comparison only.
pub fn lemma2_gs_printed(p: u64, n: u32, alpha: u64) -> Result<(u64, u64, u64), PadicError> {
    check_prime(p)?;
    if n == 0 {
        return Err(PadicError::ZeroPrecision);
    }
    let pn = p.checked_pow(n).ok_or(PadicError::PrecisionOverflow { p, prec: n })?;
    let r_2 = (pn + pn / p) / 2;
    Ok((r_2 + 1 + alpha, alpha, r_2))
}

pub fn certify(p: u64, config: &CertifyConfig) -> Result<PrimeCertificate, CertificateError> {
    check_prime(p)?;
    let started = std::time::Instant::now();
    let set = irregular_pairs(p)?;
    let mut pairs = Vec::with_capacity(set.indices.len());
    for &k in &set.indices {
        let (invariants, invariants_error) = match iwasawa::branch_invariants(p, k, &config.policy) {
            Ok(inv) => (Some(inv), None),
            Err(e @ IwasawaError::EscalationExhausted { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        };
        if let Some(inv) = &invariants {
            assert!(inv.a >= 1, "irregular branch ({p}, {k}) with a unit f(0)");
        }
        let report = vandiver::vandiver_test(p, k, config.max_witnesses)?;
        pairs.push(IrregularPairData {
            k,
            j: p - k,
            invariants,
            invariants_error,
            vandiver: report,
        });
    }

    let is_regular = pairs.is_empty();
    let lambda_p = pairs
        .iter()
        .filter_map(|d| d.invariants.as_ref())
        .map(|inv| inv.lambda)
        .sum();
    let theorem1 = evaluate_conditions(&pairs, lambda_p);
    let alpha_conditional = pairs.iter().any(|d| d.vandiver.status != VandiverStatus::Verified);
    let alpha = pairs.len();
    let lemma2_table = (1..=config.n_max)
        .map(|n| {
            let (g, s, r_2) = lemma2_gs(p, n, alpha as u64)?;
            Ok(TowerRow { n, g, s, r_2 })
        })
        .collect::<Result<Vec<_>, PadicError>>()?;
    let conventions = if is_regular {
        None
    } else {
        Some(Conventions {
            series: iwasawa::pinned_orientation()?,
            eigenweight: vandiver::pinned_eigenweight()?,
        })
    };
    let mut cert = PrimeCertificate {
        schema_version: SCHEMA_VERSION,
        p,
        is_regular,
        index_of_irregularity: set.indices.len(),
        pairs,
        lambda_p,
        alpha,
        alpha_conditional,
        theorem1,
        lemma2_table,
        theorem2_note: None,
        conventions,
        elapsed_ms: 0,
    };
    cert.theorem2_note = theorem2_note(&cert).ok();
    cert.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok(cert)
}

fn evaluate_conditions(pairs: &[IrregularPairData], lambda_p: u32) -> CriterionVerdict {
    if pairs.is_empty() {
        return CriterionVerdict {
            applies: true,
            reason: "regular".into(),
            failed_conditions: Vec::new(),
        };
    }
    let mut failed = Vec::new();
    let mut inconclusive = pairs.iter().any(|d| d.vandiver.status == VandiverStatus::Inconclusive);
    let all_known = pairs.iter().all(|d| d.invariants.is_some());
    if all_known {
        if lambda_p != 1 {
            failed.push(FailedCondition::Lambda);
        }
    } else if pairs.len() > 1 {
        // two or more branches each contribute λ >= 1
        failed.push(FailedCondition::Lambda);
    } else {
        inconclusive = true;
    }
    if failed.is_empty() {
        if let Some(inv) = pairs[0].invariants.as_ref() {
            if inv.m > inv.a {
                failed.push(FailedCondition::MLeA);
            } else if inv.m_is_lower_bound {
                inconclusive = true;
            }
        }
    }
    if inconclusive {
        failed.push(FailedCondition::Inconclusive);
    }
    failed.sort();
    let applies = failed.is_empty();
    let reason = if applies {
        "vandiver verified, lambda_p = 1, m <= a".to_string()
    } else {
        failed
            .iter()
            .map(|f| serde_json::to_value(f).expect("enum").as_str().unwrap_or_default().to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    CriterionVerdict {
        applies,
        reason,
        failed_conditions: failed,
    }
}

/// Whether the `p`-class group of `Q(ζ_{p^n})` is certified cyclic.
pub fn corollary2_check(cert: &PrimeCertificate, _n: u32) -> bool {
    if cert.is_regular {
        return true;
    }
    let Some(pair) = cert.single_pair() else { return false };
    pair.vandiver.status == VandiverStatus::Verified && pair.invariants.as_ref().is_some_and(|inv| inv.lambda == 1)
}

/// The free pro-`p` statement for `Q(ζ_p)`, available only when the
/// criterion applies.
pub fn theorem2_note(cert: &PrimeCertificate) -> Result<String, CertificateError> {
    if !cert.theorem1.applies {
        return Err(CertificateError::NotApplicable(cert.p));
    }
    let (_, _, r_2) = lemma2_gs(cert.p, 1, 0)?;
    let rank = r_2 + 1;
    Ok(if cert.is_regular {
        format!("maximal pro-{} quotient of G_K unramified outside p is free of rank {rank}", cert.p)
    } else {
        format!("no free pro-{} quotient of rank {rank} (p irregular, pseudo-null conjecture verified)", cert.p)
    })
}
