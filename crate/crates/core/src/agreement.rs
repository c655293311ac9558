//! Inter-rater agreement over nominal ratings: percent agreement, Cohen's
//! kappa and Krippendorff's alpha, plus the third-reviewer threshold check.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{DynamicForm, Session};
use crate::status::StatusKind;
use crate::tree::Answer;

/// Missing-value token in delimited ratings files.
pub const MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgreementError {
    #[error("at least 2 raters required, got {0}")]
    TooFewRaters(usize),
    #[error("at least 1 unit required")]
    NoUnits,
    #[error("rater `{0}` has the wrong number of ratings")]
    RaggedRow(String),
    #[error("duplicate rater `{0}`")]
    DuplicateRater(String),
    #[error("duplicate unit `{0}`")]
    DuplicateUnit(String),
    #[error("rating `{0}` is outside the rating domain")]
    OutOfDomain(String),
    #[error("metric needs exactly 2 raters, got {0}")]
    RaterCountUnsupported(usize),
    #[error("metric needs complete ratings")]
    MissingValues,
    #[error("no unit has two or more ratings")]
    NoPairableValues,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("ratings file: {0}")]
    Format(String),
}

type Row = [Option<usize>];

/// Raters × units nominal ratings; values are indices into `domain`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingsMatrix {
    raters: Vec<String>,
    units: Vec<String>,
    domain: Vec<String>,
    values: Vec<Vec<Option<usize>>>,
}

impl RatingsMatrix {
    /// `rows[r][u]` is rater r's rating of unit u, or `None` when missing.
    pub fn new<S: AsRef<str>>(
        raters: Vec<String>,
        units: Vec<String>,
        domain: Vec<String>,
        rows: &[Vec<Option<S>>],
    ) -> Result<Self, AgreementError> {
        if raters.len() < 2 {
            return Err(AgreementError::TooFewRaters(raters.len()));
        }
        if units.is_empty() {
            return Err(AgreementError::NoUnits);
        }
        if let Some(d) = first_duplicate(&raters) {
            return Err(AgreementError::DuplicateRater(d));
        }
        if let Some(d) = first_duplicate(&units) {
            return Err(AgreementError::DuplicateUnit(d));
        }
        if rows.len() != raters.len() {
            return Err(AgreementError::RaggedRow(
                raters.get(rows.len()).cloned().unwrap_or_default(),
            ));
        }
        let mut values = Vec::with_capacity(rows.len());
        for (rater, row) in raters.iter().zip(rows) {
            if row.len() != units.len() {
                return Err(AgreementError::RaggedRow(rater.clone()));
            }
            let row = row
                .iter()
                .map(|v| match v {
                    None => Ok(None),
                    Some(v) => domain
                        .iter()
                        .position(|d| d == v.as_ref())
                        .map(Some)
                        .ok_or_else(|| AgreementError::OutOfDomain(v.as_ref().to_string())),
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Ok(Self {
            raters,
            units,
            domain,
            values,
        })
    }

    /// Like [`RatingsMatrix::new`] with the domain taken from the present
    /// values, sorted.
    pub fn from_labels<S: AsRef<str>>(
        raters: Vec<String>,
        units: Vec<String>,
        rows: &[Vec<Option<S>>],
    ) -> Result<Self, AgreementError> {
        let domain: BTreeSet<String> = rows
            .iter()
            .flatten()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect();
        Self::new(raters, units, domain.into_iter().collect(), rows)
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn value(&self, rater: usize, unit: usize) -> Option<&str> {
        self.values[rater][unit].map(|v| self.domain[v].as_str())
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().flatten().all(Option::is_some)
    }

    /// Copy with units reordered by `order` (indices into the current units).
    pub fn permute_units(&self, order: &[usize]) -> Self {
        Self {
            raters: self.raters.clone(),
            units: order.iter().map(|&u| self.units[u].clone()).collect(),
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .map(|row| order.iter().map(|&u| row[u]).collect())
                .collect(),
        }
    }

    /// Copy with raters reordered by `order`.
    pub fn permute_raters(&self, order: &[usize]) -> Self {
        Self {
            raters: order.iter().map(|&r| self.raters[r].clone()).collect(),
            units: self.units.clone(),
            domain: self.domain.clone(),
            values: order.iter().map(|&r| self.values[r].clone()).collect(),
        }
    }

    /// Parses the delimited format: a header `rater,<unit>...` followed by one
    /// row per rater, `NA` marking missing values.
    pub fn from_delimited(text: &str) -> Result<Self, AgreementError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let fmt_err = |e: csv::Error| AgreementError::Format(e.to_string());
        let header = reader.headers().map_err(fmt_err)?.clone();
        let units: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut raters = Vec::new();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(fmt_err)?;
            let mut fields = record.iter();
            raters.push(fields.next().unwrap_or_default().to_string());
            rows.push(
                fields
                    .map(|f| {
                        if f == MISSING || f.is_empty() {
                            None
                        } else {
                            Some(f.to_string())
                        }
                    })
                    .collect::<Vec<_>>(),
            );
        }
        Self::from_labels(raters, units, &rows)
    }

    pub fn to_delimited(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("rater").chain(self.units.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (r, rater) in self.raters.iter().enumerate() {
            let row = std::iter::once(rater.as_str())
                .chain((0..self.units.len()).map(|u| self.value(r, u).unwrap_or(MISSING)));
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    fn complete_pair(&self) -> Result<(&Row, &Row), AgreementError> {
        if self.raters.len() != 2 {
            return Err(AgreementError::RaterCountUnsupported(self.raters.len()));
        }
        if !self.is_complete() {
            return Err(AgreementError::MissingValues);
        }
        Ok((&self.values[0], &self.values[1]))
    }
}

fn first_duplicate(xs: &[String]) -> Option<String> {
    let mut seen = BTreeSet::new();
    xs.iter().find(|x| !seen.insert(x.as_str())).cloned()
}

/// Fraction of units both raters rated identically.
pub fn percent_agreement(m: &RatingsMatrix) -> Result<f64, AgreementError> {
    let (a, b) = m.complete_pair()?;
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Share of agreeing pairs among all pairable rating pairs, for any number
/// of raters and missing values.
pub fn pairwise_agreement(m: &RatingsMatrix) -> Result<f64, AgreementError> {
    let (mut pairs, mut same) = (0u64, 0u64);
    for u in 0..m.units.len() {
        let present: Vec<usize> = m.values.iter().filter_map(|row| row[u]).collect();
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                pairs += 1;
                same += u64::from(present[i] == present[j]);
            }
        }
    }
    if pairs == 0 {
        return Err(AgreementError::NoPairableValues);
    }
    Ok(same as f64 / pairs as f64)
}

/// Cohen's kappa; `None` when chance agreement is 1.
pub fn cohen_kappa(m: &RatingsMatrix) -> Result<Option<f64>, AgreementError> {
    let (a, b) = m.complete_pair()?;
    let k = m.domain.len();
    let mut ma = vec![0u64; k];
    let mut mb = vec![0u64; k];
    let mut agree = 0u64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.expect("complete"), y.expect("complete"));
        ma[x] += 1;
        mb[y] += 1;
        agree += u64::from(x == y);
    }
    let n = a.len() as u64;
    let chance: u64 = ma.iter().zip(&mb).map(|(p, q)| p * q).sum();
    if chance == n * n {
        return Ok(None);
    }
    let p_o = agree as f64 / n as f64;
    let p_e = chance as f64 / (n * n) as f64;
    Ok(Some((p_o - p_e) / (1.0 - p_e)))
}

/// Krippendorff's alpha for nominal data via the coincidence matrix; `None`
/// when expected disagreement is zero.
pub fn krippendorff_alpha(m: &RatingsMatrix) -> Result<Option<f64>, AgreementError> {
    let k = m.domain.len();
    let mut coincidence = vec![vec![0f64; k]; k];
    for u in 0..m.units.len() {
        let mut counts = vec![0f64; k];
        for row in &m.values {
            if let Some(v) = row[u] {
                counts[v] += 1.0;
            }
        }
        let m_u: f64 = counts.iter().sum();
        if m_u < 2.0 {
            continue;
        }
        for c in 0..k {
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1.0)
                } else {
                    counts[c] * counts[d]
                };
                coincidence[c][d] += pairs / (m_u - 1.0);
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if n == 0.0 {
        return Err(AgreementError::NoPairableValues);
    }
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += coincidence[c][d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == 0.0 {
        return Ok(None);
    }
    Ok(Some(1.0 - (n - 1.0) * observed / expected))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    PercentAgreement,
    #[default]
    CohenKappa,
    KrippendorffAlpha,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "percent" | "percent-agreement" => Ok(Metric::PercentAgreement),
            "kappa" | "cohen-kappa" => Ok(Metric::CohenKappa),
            "alpha" | "krippendorff-alpha" => Ok(Metric::KrippendorffAlpha),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::PercentAgreement => "percent-agreement",
            Metric::CohenKappa => "cohen-kappa",
            Metric::KrippendorffAlpha => "krippendorff-alpha",
        })
    }
}

/// What a rating is, per essential item.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeBasis {
    /// The yes/no answer to the item itself.
    #[default]
    RootAnswers,
    /// The status the item's follow-up path ended in.
    Statuses,
}

impl FromStr for ScopeBasis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "root-answers" | "root" => Ok(ScopeBasis::RootAnswers),
            "statuses" | "status" => Ok(ScopeBasis::Statuses),
            other => Err(format!("unknown scope `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementScope {
    pub basis: ScopeBasis,
    /// Restricts the units to these item keys; empty means every essential
    /// item.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub metric: Metric,
    pub threshold: f64,
    #[serde(default)]
    pub scope: AgreementScope,
    #[serde(default = "yes")]
    pub treat_degenerate_as_pass: bool,
}

fn yes() -> bool {
    true
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            metric: Metric::CohenKappa,
            threshold: 0.6,
            scope: AgreementScope::default(),
            treat_degenerate_as_pass: true,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<(), AgreementError> {
        let t = self.threshold;
        if !(-1.0..=1.0).contains(&t) {
            return Err(AgreementError::InvalidPolicy(format!("threshold {t} outside [-1, 1]")));
        }
        if self.metric == Metric::PercentAgreement && t < 0.0 {
            return Err(AgreementError::InvalidPolicy(format!(
                "percent threshold {t} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recommendation {
    Sufficient,
    RecruitThirdReviewer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub metric: Metric,
    pub threshold: f64,
    pub percent: f64,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    /// The policy metric is undefined for this matrix.
    pub degenerate: bool,
    pub recommendation: Recommendation,
}

impl AgreementReport {
    /// Value of the policy metric, if defined.
    pub fn value(&self) -> Option<f64> {
        match self.metric {
            Metric::PercentAgreement => Some(self.percent),
            Metric::CohenKappa => self.kappa,
            Metric::KrippendorffAlpha => self.alpha,
        }
    }
}

/// Computes every applicable statistic and recommends a third reviewer when
/// the policy metric falls below the threshold.
pub fn evaluate_threshold(m: &RatingsMatrix, p: &ThresholdPolicy) -> Result<AgreementReport, AgreementError> {
    p.validate()?;
    let value = match p.metric {
        Metric::PercentAgreement => Some(percent_agreement(m)?),
        Metric::CohenKappa => cohen_kappa(m)?,
        Metric::KrippendorffAlpha => krippendorff_alpha(m)?,
    };
    let percent = match percent_agreement(m) {
        Ok(v) => v,
        Err(_) => pairwise_agreement(m)?,
    };
    let kappa = cohen_kappa(m).ok().flatten();
    let alpha = krippendorff_alpha(m).ok().flatten();
    let recommendation = match value {
        Some(v) if v < p.threshold => Recommendation::RecruitThirdReviewer,
        Some(_) => Recommendation::Sufficient,
        None if p.treat_degenerate_as_pass && percent == 1.0 => Recommendation::Sufficient,
        None => Recommendation::RecruitThirdReviewer,
    };
    Ok(AgreementReport {
        metric: p.metric,
        threshold: p.threshold,
        percent,
        kappa,
        alpha,
        degenerate: value.is_none(),
        recommendation,
    })
}

/// Builds the ratings matrix of `sessions` over the essential items in
/// `scope`, one rater per session.
pub fn ratings_from_sessions(
    form: &DynamicForm,
    sessions: &[Session],
    scope: &AgreementScope,
) -> Result<RatingsMatrix, AgreementError> {
    let units: Vec<String> = form
        .form()
        .essential_items()
        .filter(|i| scope.items.is_empty() || scope.items.contains(&i.key))
        .map(|i| i.key.clone())
        .collect();
    let domain: Vec<String> = match scope.basis {
        ScopeBasis::RootAnswers => vec!["yes".into(), "no".into()],
        ScopeBasis::Statuses => StatusKind::ALL.iter().map(|s| s.as_str().to_string()).collect(),
    };
    let rows: Vec<Vec<Option<String>>> = sessions
        .iter()
        .map(|s| {
            units
                .iter()
                .map(|key| match scope.basis {
                    ScopeBasis::RootAnswers => match s.root_answer(key) {
                        Some(Answer::Yes) => Some("yes".to_string()),
                        Some(Answer::No) => Some("no".to_string()),
                        _ => None,
                    },
                    ScopeBasis::Statuses => s
                        .item_status(form, key)
                        .ok()
                        .flatten()
                        .map(|st| st.kind.as_str().to_string()),
                })
                .collect()
        })
        .collect();
    let raters = sessions.iter().map(|s| s.reviewer_id.clone()).collect();
    RatingsMatrix::new(raters, units, domain, &rows)
}
