//! Plain-text result documents.
//!
//! Every command renders to ordered `key = value` lines so runs can be
//! diffed; sweeps render to CSV with a header row. Output is fully
//! deterministic: fixed key order, no timestamps, floats at twelve
//! significant digits.

use crate::capacity::{DegradedReport, IdentityCheck, MultiLetterReport, QuantizedFamily, RateReport};
use crate::protocol::{ProtocolReport, SweepPoint};
use std::fmt::Write as _;

/// Formats a float with twelve significant digits, trimming trailing
/// zeros. Values far from 1 fall back to exponential notation.
pub fn sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let e = format!("{:.11e}", v);
    let (mantissa, exp) = e.split_once('e').expect("exponential form");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..15).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            for _ in 0..point - digits.len() {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = trimmed.to_string();
    }
    if out == "-0" {
        out = "0".into();
    }
    out
}

/// An ordered list of `key = value` lines.
#[derive(Debug, Default, Clone)]
pub struct Document {
    lines: Vec<(String, String)>,
}

impl Document {
    pub fn new() -> Self {
        Document::default()
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn int(&mut self, key: &str, value: impl Into<i128>) {
        self.lines.push((key.to_string(), value.into().to_string()));
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), sig12(value)));
    }

    pub fn boolean(&mut self, key: &str, value: bool) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn render_rate(rep: &RateReport) -> Document {
    let mut d = Document::new();
    d.float("gamma", rep.gamma);
    d.float("value", rep.value);
    d.int("limiting_class", rep.limiting_class as i128);
    d.int("classes", rep.classes.len() as i128);
    for c in &rep.classes {
        let p = format!("class.{}", c.class_index);
        d.float(&format!("{p}.value"), c.value);
        d.float(&format!("{p}.raw"), c.raw);
        d.boolean(&format!("{p}.feasible"), c.feasible);
        d.float(&format!("{p}.forward"), c.terms.forward);
        d.float(&format!("{p}.leak"), c.terms.leak);
        d.float(&format!("{p}.constraint"), c.terms.constraint);
        d.int(&format!("{p}.u_size"), c.aux.u_size() as i128);
        d.int(&format!("{p}.v_size"), c.aux.v_size() as i128);
    }
    d
}

pub fn render_degraded(rep: &DegradedReport, checks: &[IdentityCheck]) -> Document {
    let mut d = Document::new();
    d.float("value", rep.value);
    d.float("raw", rep.raw);
    d.boolean("clamped", rep.clamped);
    d.boolean("all_degraded", rep.all_degraded);
    d.int("limiting_class", rep.limiting_class as i128);
    for c in &rep.classes {
        let p = format!("class.{}", c.class_index);
        d.float(&format!("{p}.forward_inf"), c.forward_inf);
        d.float(&format!("{p}.leak_sup"), c.leak_sup);
        d.float(&format!("{p}.raw"), c.raw);
        d.int(&format!("{p}.forward_state"), c.forward_state as i128);
        d.int(&format!("{p}.leak_state"), c.leak_state as i128);
    }
    d.int("identity_checks", checks.len() as i128);
    for (i, c) in checks.iter().enumerate() {
        let p = format!("check.{i}");
        d.int(&format!("{p}.class"), c.class_index as i128);
        d.int(&format!("{p}.from_state"), c.from_state as i128);
        d.int(&format!("{p}.to_state"), c.to_state as i128);
        if c.skipped {
            d.boolean(&format!("{p}.skipped"), true);
        } else {
            d.float(&format!("{p}.direct"), c.direct);
            d.float(&format!("{p}.conditional"), c.conditional);
            d.float(&format!("{p}.gap"), c.gap);
            d.boolean(&format!("{p}.ok"), c.ok);
        }
    }
    d
}

pub fn render_multi_letter(rep: &MultiLetterReport) -> Document {
    let mut d = Document::new();
    d.int("n", rep.n as i128);
    d.float("single", rep.single.value);
    d.float("block", rep.block.value);
    d.float("per_letter", rep.per_letter);
    d.float("gain", rep.per_letter - rep.single.value);
    d
}

pub fn render_quantized(q: &QuantizedFamily, shift_bound: f64) -> Document {
    let mut d = Document::new();
    d.int("grid", q.l as i128);
    d.int("u_size", q.aux.u_size() as i128);
    d.int("v_size", q.aux.v_size() as i128);
    d.float("net_log2", q.net_log2);
    d.float("max_row_distance", q.max_row_distance);
    d.float("rate_shift_bound", shift_bound);
    d
}

pub fn render_mi_bound(gamma: f64, a: usize, b: usize, bound: f64) -> Document {
    let mut d = Document::new();
    d.float("gamma", gamma);
    d.int("a_size", a as i128);
    d.int("b_size", b as i128);
    d.float("bound", bound);
    d
}

pub fn render_protocol(rep: &ProtocolReport) -> Document {
    let mut d = Document::new();
    d.int("n", rep.n as i128);
    d.float("delta", rep.delta);
    d.float("gamma", rep.gamma);
    d.boolean("layer_b", rep.layer_b);
    d.int("trials", rep.trials as i128);
    d.int("master_seed", rep.master_seed as i128);
    d.int("k", rep.k as i128);
    d.float("key_rate", rep.key_rate);
    d.float("public_rate", rep.public_rate);
    d.int("classes", rep.classes.len() as i128);
    for c in &rep.classes {
        let p = format!("class.{}", c.class_index);
        d.int(&format!("{p}.n1"), c.sizes.n1 as i128);
        d.int(&format!("{p}.n2"), c.sizes.n2 as i128);
        if rep.layer_b {
            d.int(&format!("{p}.n3"), c.sizes.n3 as i128);
            d.int(&format!("{p}.n4"), c.sizes.n4 as i128);
        }
        d.int(&format!("{p}.key_columns"), c.key_columns as i128);
        d.int(&format!("{p}.codebook_seed"), c.codebook_seed as i128);
        d.int(&format!("{p}.extractor_seed"), c.extractor_seed as i128);
    }
    for s in &rep.states {
        let p = format!("state.{}", s.state);
        d.int(&format!("{p}.class"), s.class_index as i128);
        d.int(&format!("{p}.trials"), s.trials as i128);
        d.int(&format!("{p}.disagreements"), s.disagreements as i128);
        d.float(&format!("{p}.disagreement_rate"), s.disagreement_rate);
        d.float(&format!("{p}.ci_low"), s.ci_low);
        d.float(&format!("{p}.ci_high"), s.ci_high);
        d.int(
            &format!("{p}.estimator_mismatches"),
            s.estimator_mismatches as i128,
        );
        d.int(&format!("{p}.encode_failures"), s.encode_failures as i128);
        d.int(&format!("{p}.decode_failures"), s.decode_failures as i128);
    }
    for a in &rep.security {
        for st in &a.states {
            let p = format!("security.state.{}", st.state);
            d.float(&format!("{p}.proof_index"), st.proof_index);
            d.float(&format!("{p}.plain_index"), st.plain_index);
            d.float(&format!("{p}.key_entropy"), st.key_entropy);
        }
    }
    let ach = &rep.achievability;
    d.float("epsilon", ach.epsilon);
    d.float("error_max", ach.error_max);
    d.boolean("error_ok", ach.error_ok);
    if let (Some(l), Some(lok)) = (ach.leakage_max, ach.leakage_ok) {
        d.float("leakage_max", l);
        d.boolean("leakage_ok", lok);
    }
    if let (Some(u), Some(uok)) = (ach.uniformity_max, ach.uniformity_ok) {
        d.float("uniformity_max", u);
        d.boolean("uniformity_ok", uok);
    }
    d.boolean("rate_ok", ach.rate_ok);
    d
}

/// One CSV row per sweep point, header first. Fields missing at a
/// point (no security pass, say) render as empty cells.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "axis,value,n,gamma,trials,k,key_rate,public_rate,error_max,worst_ci_high,leakage_max,uniformity_max,error_ok\n",
    );
    for p in points {
        let r = &p.report;
        let worst_hi = r.states.iter().map(|s| s.ci_high).fold(0.0, f64::max);
        let leak = r
            .achievability
            .leakage_max
            .map(sig12)
            .unwrap_or_default();
        let unif = r
            .achievability
            .uniformity_max
            .map(sig12)
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.axis,
            sig12(p.value),
            r.n,
            sig12(r.gamma),
            r.trials,
            r.k,
            sig12(r.key_rate),
            sig12(r.public_rate),
            sig12(r.achievability.error_max),
            sig12(worst_hi),
            leak,
            unif,
            r.achievability.error_ok,
        );
    }
    out
}
