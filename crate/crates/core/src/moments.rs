//! Shifted moments `Σ_f Π_j |L(½+it_j, f)|^{a_j}` over a family, with the
//! per-bucket split of the Harper decomposition.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::Eigenform;
use crate::harper::{self, BucketKind, BucketLabel, HarperConfig, ShiftSpec};
use crate::lfun;

/// A named collection of forms.
#[derive(Debug, Clone)]
pub struct Family {
    pub id: String,
    pub forms: Vec<Eigenform>,
}

impl Family {
    pub fn new(id: impl Into<String>, forms: Vec<Eigenform>) -> Self {
        Family { id: id.into(), forms }
    }

    /// Largest level in the family, 0 when empty.
    pub fn level(&self) -> u64 {
        self.forms.iter().map(Eigenform::level).max().unwrap_or(0)
    }

    /// The common weight, or 0 when weights differ or the family is empty.
    pub fn weight(&self) -> u32 {
        match self.forms.first() {
            Some(f) if self.forms.iter().all(|g| g.weight() == f.weight()) => f.weight(),
            _ => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormMoment {
    pub form_id: String,
    /// `S(j)` once attributed.
    pub bucket: Option<BucketLabel>,
    pub p_bucket: Option<BucketLabel>,
    /// `Σ_j a_j log |L(½+it_j, f)|`.
    pub log_product: f64,
    pub product: f64,
    pub surrogate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormFailure {
    pub form_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketTotal {
    pub kind: BucketKind,
    pub index: u32,
    pub count: usize,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub family_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub kappa: u32,
    pub spec: ShiftSpec,
    /// Sorted by form id.
    pub per_form: Vec<FormMoment>,
    pub failures: Vec<FormFailure>,
    pub total: f64,
    /// `total / N`; 0 for an empty family.
    pub normalized: f64,
    /// Ascending in [`BucketLabel`] order; empty until attributed.
    pub bucket_totals: Vec<BucketTotal>,
    pub surrogate_total: Option<f64>,
    /// `surrogate_total − total`.
    pub surrogate_margin: Option<f64>,
}

impl MomentReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    fn renormalize(&mut self) {
        self.normalized = if self.n == 0 { 0.0 } else { self.total / self.n as f64 };
    }
}

fn form_log_product(f: &Eigenform, spec: &ShiftSpec) -> Result<f64> {
    let mut acc = 0.0;
    for (&a, &t) in spec.a().iter().zip(spec.t()) {
        acc += a * lfun::central_value(f, t)?.value.norm().ln();
    }
    Ok(acc)
}

/// Computes every per-form product from central values.
///
/// Forms whose L-values cannot be evaluated land in `failures` and are left
/// out of the total.
///
/// ```
/// use lmoment::forms::builtin_form;
/// use lmoment::harper::ShiftSpec;
/// use lmoment::moments::{shifted_moment, Family};
/// let fam = Family::new("one", vec![builtin_form("level11_weight2", 200).unwrap()]);
/// let spec = ShiftSpec::new(vec![2.0], vec![0.0], 1.0).unwrap();
/// let r = shifted_moment(&fam, &spec);
/// assert!((r.total - 0.2538418608559107f64.powi(2)).abs() < 1e-10);
/// assert_eq!(r.normalized, r.total / 11.0);
/// ```
pub fn shifted_moment(family: &Family, spec: &ShiftSpec) -> MomentReport {
    let results: Vec<(String, Result<f64>)> = family
        .forms
        .par_iter()
        .map(|f| (f.id().to_string(), form_log_product(f, spec)))
        .collect();
    let mut per_form = Vec::new();
    let mut failures = Vec::new();
    for (form_id, r) in results {
        match r {
            Ok(log_product) => per_form.push(FormMoment {
                form_id,
                bucket: None,
                p_bucket: None,
                log_product,
                product: log_product.exp(),
                surrogate: None,
            }),
            Err(e) => failures.push(FormFailure { form_id, error: e.to_string() }),
        }
    }
    per_form.sort_by(|a, b| a.form_id.cmp(&b.form_id));
    failures.sort_by(|a, b| a.form_id.cmp(&b.form_id));
    let total = per_form.iter().map(|m| m.product).sum();
    let mut report = MomentReport {
        family_id: family.id.clone(),
        n: family.level(),
        kappa: family.weight(),
        spec: spec.clone(),
        per_form,
        failures,
        total,
        normalized: 0.0,
        bucket_totals: Vec::new(),
        surrogate_total: None,
        surrogate_margin: None,
    };
    report.renormalize();
    report
}

/// Labels every form of `report` with its `S(j)` and `𝒫(m)` buckets, fills the
/// bucket totals and the majorant aggregate.
///
/// `total` is recomputed as the sum of the bucket totals taken in label order,
/// so the two agree bit for bit.
pub fn bucket_attribution(report: &MomentReport, family: &Family, cfg: &HarperConfig) -> Result<MomentReport> {
    let by_id: BTreeMap<&str, &Eigenform> = family.forms.iter().map(|f| (f.id(), f)).collect();
    let spec = &report.spec;
    let labelled: Vec<FormMoment> = report
        .per_form
        .par_iter()
        .map(|m| -> Result<FormMoment> {
            let f = by_id
                .get(m.form_id.as_str())
                .ok_or_else(|| Error::Data(format!("form {} is not in family {}", m.form_id, family.id)))?;
            let class = harper::classify(f, spec, cfg)?;
            let surrogate = harper::surrogate(f, spec, cfg, &class)?;
            Ok(FormMoment {
                bucket: Some(class.s_bucket),
                p_bucket: class.p_bucket,
                surrogate: Some(surrogate),
                ..m.clone()
            })
        })
        .collect::<Result<_>>()?;
    let mut buckets: BTreeMap<BucketLabel, (usize, f64)> = BTreeMap::new();
    for m in &labelled {
        let e = buckets.entry(m.bucket.expect("labelled above")).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += m.product;
    }
    let mut out = report.clone();
    out.total = buckets.values().map(|v| v.1).sum();
    out.renormalize();
    out.bucket_totals = buckets
        .into_iter()
        .map(|(b, (count, total))| BucketTotal { kind: b.kind, index: b.index, count, total })
        .collect();
    let surrogate_total: f64 = labelled.iter().map(|m| m.surrogate.unwrap_or(0.0)).sum();
    out.surrogate_total = Some(surrogate_total);
    out.surrogate_margin = Some(surrogate_total - out.total);
    out.per_form = labelled;
    Ok(out)
}

/// `x` with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }
}

/// Serializes any value as JSON with floats written to 17 significant digits.
pub fn to_json_writer<T: Serialize>(value: &T, writer: impl Write) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, Digits17);
    value.serialize(&mut ser)?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    to_json_writer(value, &mut buf)?;
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

/// `form_id,bucket_kind,bucket_index,product` rows and a closing
/// `TOTAL,<total>,<normalized>` row.
pub fn write_csv(report: &MomentReport, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    w.write_record(["form_id", "bucket_kind", "bucket_index", "product"])?;
    for m in &report.per_form {
        let (kind, index) = match m.bucket {
            Some(b) => (format!("{:?}", b.kind), b.index.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([m.form_id.as_str(), &kind, &index, &fmt17(m.product)])?;
    }
    w.write_record(["TOTAL", &fmt17(report.total), &fmt17(report.normalized)])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{builtin_form, synthetic_family, SyntheticSpec};

    fn level1() -> Family {
        let forms = ["delta12", "level1_weight16", "level1_weight20"]
            .iter()
            .map(|id| builtin_form(id, 1000).unwrap())
            .collect();
        Family::new("fixture", forms)
    }

    #[test]
    fn empty_family() {
        let spec = ShiftSpec::new(vec![1.0], vec![0.0], 1.0).unwrap();
        let r = shifted_moment(&Family::new("e", vec![]), &spec);
        assert_eq!(r.total, 0.0);
        assert_eq!(r.normalized, 0.0);
        assert!(r.per_form.is_empty());
    }

    #[test]
    fn conjugate_shifts() {
        let fam = level1();
        let pair = ShiftSpec::new(vec![1.0, 1.0], vec![0.5, -0.5], 1.0).unwrap();
        let single = ShiftSpec::new(vec![2.0], vec![0.5], 1.0).unwrap();
        let a = shifted_moment(&fam, &pair);
        let b = shifted_moment(&fam, &single);
        for (x, y) in a.per_form.iter().zip(&b.per_form) {
            assert!((x.product / y.product - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scaling_and_determinism() {
        let fam = level1();
        let spec = ShiftSpec::new(vec![1.0, 0.5], vec![1.0, -2.0], 1.0).unwrap();
        let a = shifted_moment(&fam, &spec);
        assert_eq!(a, shifted_moment(&fam, &spec));
        let s = 1.7;
        let b = shifted_moment(&fam, &spec.scaled(s).unwrap());
        for (x, y) in a.per_form.iter().zip(&b.per_form) {
            assert!((x.product.powf(s) / y.product - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn attribution_partitions() {
        let spec = ShiftSpec::new(vec![1.0, 1.0], vec![1.0, -1.0], 1.0).unwrap();
        let syn = SyntheticSpec { level: 10007, weight: 2, n_max: 12_000, root_number: None };
        let mut fam = level1();
        fam.forms.extend(synthetic_family(&syn, 4, 5).unwrap());
        let cfg = HarperConfig::new(1_000_000, 1.0).unwrap();
        let r = bucket_attribution(&shifted_moment(&fam, &spec), &fam, &cfg).unwrap();
        let counted: usize = r.bucket_totals.iter().map(|b| b.count).sum();
        assert_eq!(counted, fam.len());
        assert_eq!(r.total, r.bucket_totals.iter().map(|b| b.total).sum::<f64>());
        assert!(r.surrogate_margin.unwrap() > 0.0);
    }

    #[test]
    fn outputs() {
        let fam = level1();
        let spec = ShiftSpec::new(vec![2.0], vec![0.0], 1.0).unwrap();
        let r = shifted_moment(&fam, &spec);
        let json = to_json_string(&r).unwrap();
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["total"].as_f64().unwrap(), r.total);
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "form_id,bucket_kind,bucket_index,product");
        assert_eq!(lines.len(), fam.len() + 2);
        assert!(lines.last().unwrap().starts_with("TOTAL,"));
    }
}
