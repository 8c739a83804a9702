//! Declarative job files in, machine-readable verification reports out.
//!
//! One job file describes one command, one kernel, and (where needed) one
//! tuple and a truncation order; the result is a single JSON report whose
//! residuals are each paired with the tolerance they were judged against.
//! Identical jobs produce identical reports except for the timestamp field.

use serde::{Deserialize, Serialize};

use crate::contraction::{
    defect_operator, pureness_residuals, spectral_safety, OperatorTuple, TupleWire,
    DEFAULT_SERIES_TOL,
};
use crate::corpus::{
    corpus_entries, corpus_entry, corpus_families, corpus_kernel, random_diagonalizable,
    random_jordan_single, random_nilpotent_pair, truncation_tail, CorpusEntry,
};
use crate::dilation::{
    build_wt, canonical_dilation, verify_pack, wandering_subspace, DilationOptions,
};
use crate::error::{Error, Result};
use crate::metric::C64;
use crate::realization::{
    build_w_from_quadruple, check_conditions, da_multiplier_check, verify_kinner,
    DEFAULT_COND_TOL, DEFAULT_KIN_TOL, DEFAULT_MEM_TOL, DEFAULT_PSD_TOL,
};
use crate::series::{parse_coeff_values, Family, KernelSpec};

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    CheckKernel,
    AnalyzeTuple,
    Dilate,
    Wandering,
    Realize,
    Corpus,
}

/// Kernel selection: a named family (with optional power parameter) or an
/// explicit coefficient list; strings parse as exact rationals.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelJob {
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub coeffs: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    pub max_degree: Option<usize>,
}

/// Tuple source: inline matrices, a named corpus entry, or a seeded random
/// structure class.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleJob {
    #[serde(default)]
    pub inline: Option<TupleWire>,
    #[serde(default)]
    pub corpus: Option<String>,
    #[serde(default)]
    pub random: Option<RandomTupleJob>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTupleJob {
    /// `nilpotent_pair`, `diagonalizable`, or `jordan_single`.
    pub class: String,
    pub seed: u64,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub pure_tol: Option<f64>,
    #[serde(default)]
    pub iso_tol: Option<f64>,
    #[serde(default)]
    pub mem_tol: Option<f64>,
    #[serde(default)]
    pub sep_tol: Option<f64>,
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default)]
    pub psd_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub command: Command,
    #[serde(default)]
    pub kernel: Option<KernelJob>,
    #[serde(default)]
    pub tuple: Option<TupleJob>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    /// Number of sample points for the multiplier check.
    #[serde(default)]
    pub points: Option<usize>,
    /// Whether `realize` also runs the multiplier positivity check.
    #[serde(default)]
    pub multiplier_check: Option<bool>,
    /// Corpus entry names to run; all when absent.
    #[serde(default)]
    pub entries: Option<Vec<String>>,
}

/// Session-level knobs from the command line that rescale or override the
/// job's own settings.
#[derive(Debug, Clone)]
pub struct RunOverrides {
    pub tol_scale: f64,
    pub horizon: Option<usize>,
    /// Seed override (from the environment) for fuzzing runs.
    pub seed: Option<u64>,
}

impl Default for RunOverrides {
    fn default() -> RunOverrides {
        RunOverrides {
            tol_scale: 1.0,
            horizon: None,
            seed: None,
        }
    }
}

/// One residual paired with the tolerance it was judged against; limit-style
/// claims also carry the horizon they were observed at.
#[derive(Debug, Clone, Serialize)]
pub struct ReportItem {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub command: Command,
    pub timestamp: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub verdict: bool,
    pub items: Vec<ReportItem>,
    /// Command-specific payload (full sub-reports, diagnostics).
    pub detail: serde_json::Value,
}

fn item(name: &str, residual: f64, tolerance: f64, horizon: Option<usize>) -> ReportItem {
    ReportItem {
        name: name.to_string(),
        residual,
        tolerance,
        pass: residual <= tolerance,
        horizon,
    }
}

fn build_kernel(job: &JobFile, n_hint: usize, overrides: &RunOverrides) -> Result<KernelSpec> {
    let spec = job
        .kernel
        .as_ref()
        .ok_or_else(|| Error::BadJob("missing kernel".into()))?;
    if let Some(values) = &spec.coeffs {
        if spec.family.is_some() || spec.nu.is_some() {
            return Err(Error::BadJob(
                "give either a family or explicit coeffs, not both".into(),
            ));
        }
        let coeffs = parse_coeff_values(values).map_err(Error::BadJob)?;
        return KernelSpec::from_coeffs("explicit", coeffs);
    }
    let family = match (spec.family.as_deref(), spec.nu) {
        (Some("drury_arveson"), None) => Family::DruryArveson,
        (Some("dirichlet"), None) => Family::Dirichlet,
        (Some("power"), Some(nu)) => Family::Power(nu),
        (Some(other), _) => {
            return Err(Error::BadJob(format!(
                "unknown kernel family {other:?} (expected drury_arveson, dirichlet, or power with nu)"
            )))
        }
        (None, _) => return Err(Error::BadJob("kernel needs a family or coeffs".into())),
    };
    let horizon = overrides
        .horizon
        .or(spec.max_degree)
        .unwrap_or(n_hint + 24);
    KernelSpec::builtin(family, horizon)
}

fn build_tuple(job: &JobFile) -> Result<(OperatorTuple, Option<usize>)> {
    let spec = job
        .tuple
        .as_ref()
        .ok_or_else(|| Error::BadJob("missing tuple".into()))?;
    let given = [
        spec.inline.is_some(),
        spec.corpus.is_some(),
        spec.random.is_some(),
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if given != 1 {
        return Err(Error::BadJob(
            "tuple needs exactly one of inline | corpus | random".into(),
        ));
    }
    if let Some(wire) = &spec.inline {
        return Ok((OperatorTuple::from_wire(wire)?, None));
    }
    if let Some(name) = &spec.corpus {
        let entry = corpus_entry(name)
            .ok_or_else(|| Error::BadJob(format!("unknown corpus entry {name:?}")))?;
        return Ok((entry.tuple, Some(entry.n)));
    }
    let r = spec.random.as_ref().unwrap();
    let p = r.p.unwrap_or(3);
    let radius = r.radius.unwrap_or(0.4);
    let t = match r.class.as_str() {
        "nilpotent_pair" => random_nilpotent_pair(r.seed, p),
        "diagonalizable" => random_diagonalizable(r.seed, r.d.unwrap_or(2), p, radius),
        "jordan_single" => random_jordan_single(r.seed, p, radius),
        other => {
            return Err(Error::BadJob(format!(
                "unknown random class {other:?} (expected nilpotent_pair, diagonalizable, jordan_single)"
            )))
        }
    };
    Ok((t, None))
}

fn dilation_options(job: &JobFile) -> DilationOptions {
    let mut opts = DilationOptions::default();
    if let Some(t) = &job.tolerances {
        if let Some(v) = t.pure_tol {
            opts.pure_tol = v;
        }
        if let Some(v) = t.iso_tol {
            opts.iso_tol = v;
        }
        if let Some(v) = t.mem_tol {
            opts.mem_tol = v;
        }
        if let Some(v) = t.sep_tol {
            opts.sep_tol = v;
        }
    }
    opts
}

fn residual_tol(job: &JobFile, overrides: &RunOverrides) -> f64 {
    job.tolerances
        .as_ref()
        .and_then(|t| t.residual_tol)
        .unwrap_or(1e-8)
        * overrides.tol_scale
}

fn report(
    job_command: &Command,
    seed: u64,
    n: Option<usize>,
    items: Vec<ReportItem>,
    detail: serde_json::Value,
) -> Report {
    let verdict = items.iter().all(|i| i.pass);
    Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: job_command.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        seed,
        n,
        verdict,
        items,
        detail,
    }
}

pub fn cmd_check_kernel(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    let kernel = build_kernel(job, job.n.unwrap_or(8), overrides)?;
    let horizon = kernel.max_degree;
    let recip = kernel.reciprocal_residual();
    let sign = crate::series::nevanlinna_sign_check(&kernel);
    let normality = crate::series::essential_normality_diagnostic(&kernel);
    let items = vec![item(
        "reciprocal_convolution",
        recip,
        1e-12 * overrides.tol_scale,
        Some(horizon),
    )];
    let detail = serde_json::json!({
        "kernel": kernel,
        "c": kernel.c().to_f64_vec(),
        "sign_check": sign,
        "essential_normality": normality,
        "ratio_inf": kernel.ratio_inf,
        "ratio_sup": kernel.ratio_sup,
        "r_estimate": kernel.r_estimate,
    });
    Ok(report(&job.command, 0, None, items, detail))
}

pub fn cmd_analyze_tuple(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    let (tuple, n_default) = build_tuple(job)?;
    let n = job.n.or(n_default).unwrap_or(10);
    let kernel = build_kernel(job, n, overrides)?;
    let seed = overrides.seed.or(job.seed).unwrap_or(0);
    let safety = spectral_safety(&tuple, &kernel, 32, seed);
    let defect = defect_operator(&tuple, &kernel, DEFAULT_SERIES_TOL)?;
    let pureness = pureness_residuals(&tuple, &kernel, &defect, n)?;
    let opts = dilation_options(job);
    let items = vec![
        item(
            "defect_min_eig_negativity",
            (-defect.min_eig).max(0.0),
            defect.pos_tol * overrides.tol_scale,
            None,
        ),
        item(
            "pureness_final_residual",
            pureness.final_residual,
            opts.pure_tol * overrides.tol_scale,
            Some(n),
        ),
    ];
    let detail = serde_json::json!({
        "tuple": tuple.to_wire(),
        "safety": safety,
        "defect_dim": defect.defect_dim,
        "defect_min_eig": defect.min_eig,
        "series_terms_used": defect.series_terms_used,
        "tail_estimate": defect.tail_estimate,
        "pureness": pureness,
    });
    Ok(report(&job.command, seed, Some(n), items, detail))
}

fn dilation_items(
    rep: &crate::dilation::DilationReport,
    tol: f64,
    n: usize,
) -> Vec<ReportItem> {
    let inter = rep
        .intertwining_residuals
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    vec![
        item("iso_residual", rep.iso_residual, tol, Some(n)),
        item("intertwining_max", inter, tol, Some(n)),
        item("ttilde_sigma_identity", rep.ttilde_sigma_identity, tol, Some(n)),
        item("ttilde_range_identity", rep.ttilde_range_identity, tol, Some(n)),
        item("block_unitary", rep.block_unitary_residual, tol, Some(n)),
        item("defect_intertwine", rep.defect_intertwine, tol, Some(n)),
        item(
            "wandering_param",
            rep.wandering_param_residual,
            tol,
            Some(n),
        ),
        item(
            "norm_identity_rel",
            rep.norm_identity_rel_error,
            tol,
            Some(n),
        ),
        item("wt_gram", rep.wt_gram_residual, tol, Some(n)),
        item(
            "wt_principal_angle",
            rep.wt_principal_angle_max,
            (100.0 * tol).max(1e-6),
            Some(n),
        ),
        item("cf_lemma", rep.cf_lemma_residual, tol, Some(n)),
    ]
}

pub fn cmd_dilate(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    let (tuple, n_default) = build_tuple(job)?;
    let n = job.n.or(n_default).unwrap_or(10);
    let kernel = build_kernel(job, n, overrides)?;
    let seed = overrides.seed.or(job.seed).unwrap_or(0);
    let opts = dilation_options(job);
    let pack = canonical_dilation(&tuple, &kernel, n, &opts)?;
    let rep = verify_pack(&pack, seed)?;
    let tail = truncation_tail(&kernel, &tuple, n);
    let tol = residual_tol(job, overrides).max(tail);
    let items = dilation_items(&rep, tol, n);
    let detail = serde_json::json!({
        "report": rep,
        "truncation_tail": tail,
        "defect_dim": pack.defect.defect_dim,
    });
    Ok(report(&job.command, seed, Some(n), items, detail))
}

pub fn cmd_wandering(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    let (tuple, n_default) = build_tuple(job)?;
    let n = job.n.or(n_default).unwrap_or(10);
    let kernel = build_kernel(job, n, overrides)?;
    let seed = overrides.seed.or(job.seed).unwrap_or(0);
    let opts = dilation_options(job);
    let pack = canonical_dilation(&tuple, &kernel, n, &opts)?;
    let wandering = wandering_subspace(&pack)?;
    let (poly, _) = build_wt(&pack)?;
    let wcols = poly.to_space_vectors(&pack.space)?;
    let g = pack.space.metric();
    let angle = if poly.source_dim == wandering.dim && wandering.dim > 0 {
        let ob = crate::metric::orthonormalize(&wcols, &g, 0.5);
        crate::metric::principal_angles(&ob.basis, &wandering.basis, &g)
            .into_iter()
            .fold(0.0f64, f64::max)
    } else if poly.source_dim == wandering.dim {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let tol = residual_tol(job, overrides);
    let items = vec![
        item("span_principal_angle", angle, (100.0 * tol).max(1e-6), Some(n)),
        item(
            "dim_mismatch",
            (poly.source_dim as f64 - wandering.dim as f64).abs(),
            0.5,
            Some(n),
        ),
    ];
    let detail = serde_json::json!({
        "wandering_dim": wandering.dim,
        "complement_dim": wandering.m_dim,
        "wt_source_dim": poly.source_dim,
        "separation_svals": wandering.sep_svals,
    });
    Ok(report(&job.command, seed, Some(n), items, detail))
}

pub fn cmd_realize(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    let (tuple, n_default) = build_tuple(job)?;
    let n = job.n.or(n_default).unwrap_or(10);
    let kernel = build_kernel(job, n, overrides)?;
    let seed = overrides.seed.or(job.seed).unwrap_or(0);
    let opts = dilation_options(job);
    let pack = canonical_dilation(&tuple, &kernel, n, &opts)?;
    let (poly, quad) = build_wt(&pack)?;
    let tol = residual_tol(job, overrides);
    let mem_tol = DEFAULT_MEM_TOL * overrides.tol_scale;
    let cond = check_conditions(&quad, &kernel, n, DEFAULT_COND_TOL * overrides.tol_scale, mem_tol)?;
    let (rebuilt, eval_res) = build_w_from_quadruple(&quad, &kernel, n)?;
    let mut coeff_diff = 0.0f64;
    for idx in 0..poly.basis.len() {
        coeff_diff = coeff_diff
            .max(crate::metric::op_norm(&(&rebuilt.coeffs[idx] - &poly.coeffs[idx])));
    }
    let kin = verify_kinner(&poly, &kernel, n, DEFAULT_KIN_TOL * overrides.tol_scale)?;
    let mut items = vec![
        item("k1", cond.k1, cond.tol, Some(n)),
        item("k2", cond.k2, cond.tol, Some(n)),
        item("k3", cond.k3, cond.tol, Some(n)),
        item("k4", cond.k4, cond.mem_tol, Some(cond.validated_band)),
        item("rebuild_coeff_diff", coeff_diff, 1e-10 * overrides.tol_scale, Some(n)),
        item("rebuild_eval_residual", eval_res, tol, Some(n)),
        item("kinner_isometry", kin.isometry_residual, kin.tol, Some(n)),
        item(
            "kinner_orthogonality",
            kin.orthogonality_residual,
            kin.tol,
            Some(kin.band),
        ),
    ];
    let mut detail = serde_json::json!({
        "conditions": cond,
        "kinner": kin,
        "source_dim": quad.source_dim,
        "target_dim": quad.target_dim,
    });
    if job.multiplier_check.unwrap_or(false) {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = job.points.unwrap_or(10);
        let scale = 0.3 / (tuple.d as f64).sqrt();
        let points: Vec<Vec<C64>> = (0..m)
            .map(|_| {
                (0..tuple.d)
                    .map(|_| {
                        C64::new(
                            (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                            (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                        )
                    })
                    .collect()
            })
            .collect();
        let psd_tol = job
            .tolerances
            .as_ref()
            .and_then(|t| t.psd_tol)
            .unwrap_or(DEFAULT_PSD_TOL)
            * overrides.tol_scale;
        let mult = da_multiplier_check(&poly, &kernel, &points, psd_tol)?;
        items.push(item(
            "multiplier_negativity",
            (-mult.min_eig).max(0.0),
            psd_tol,
            None,
        ));
        detail["multiplier"] = serde_json::to_value(&mult)?;
    }
    Ok(report(&job.command, seed, Some(n), items, detail))
}

pub fn cmd_corpus(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    use rayon::prelude::*;
    let seed = overrides.seed.or(job.seed).unwrap_or(0);
    let all = corpus_entries();
    let selected: Vec<CorpusEntry> = match &job.entries {
        None => all,
        Some(names) => {
            let mut picked = Vec::new();
            for name in names {
                picked.push(
                    corpus_entry(name)
                        .ok_or_else(|| Error::BadJob(format!("unknown corpus entry {name:?}")))?,
                );
            }
            picked
        }
    };
    let tol = residual_tol(job, overrides);
    let mut runs: Vec<(CorpusEntry, &'static str, Family)> = Vec::new();
    for entry in &selected {
        for (kname, fam) in corpus_families() {
            runs.push((entry.clone(), kname, fam));
        }
    }
    let mut results: Vec<(String, std::result::Result<Vec<ReportItem>, String>)> = runs
        .par_iter()
        .map(|(entry, kname, fam)| {
            let label = format!("{}/{}", entry.name, kname);
            let run = || -> Result<Vec<ReportItem>> {
                let n = job.n.unwrap_or(entry.n);
                let kernel = corpus_kernel(fam, n)?;
                let pack =
                    canonical_dilation(&entry.tuple, &kernel, n, &DilationOptions::strict())?;
                let rep = verify_pack(&pack, seed)?;
                let tail = truncation_tail(&kernel, &entry.tuple, n);
                Ok(dilation_items(&rep, tol.max(tail), n))
            };
            (label, run().map_err(|e| e.to_string()))
        })
        .collect();
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (label, res) in &results {
        match res {
            Ok(entry_items) => {
                for it in entry_items {
                    if !it.pass {
                        items.push(ReportItem {
                            name: format!("{label}/{}", it.name),
                            ..it.clone()
                        });
                    }
                }
                let worst = entry_items
                    .iter()
                    .cloned()
                    .max_by(|a, b| {
                        (a.residual / a.tolerance)
                            .partial_cmp(&(b.residual / b.tolerance))
                            .unwrap()
                    })
                    .unwrap();
                items.push(ReportItem {
                    name: format!("{label}/worst:{}", worst.name),
                    ..worst
                });
            }
            Err(msg) => failures.push(serde_json::json!({ "entry": label, "error": msg })),
        }
    }
    if !failures.is_empty() {
        // surface hard failures as a failing item so the exit code is nonzero
        items.push(ReportItem {
            name: "entries_with_errors".into(),
            residual: failures.len() as f64,
            tolerance: 0.0,
            pass: false,
            horizon: None,
        });
    }
    let detail = serde_json::json!({
        "entries_run": results.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
        "errors": failures,
    });
    Ok(report(&job.command, seed, job.n, items, detail))
}

/// Dispatch a parsed job file.
pub fn run_job(job: &JobFile, overrides: &RunOverrides) -> Result<Report> {
    match job.command {
        Command::CheckKernel => cmd_check_kernel(job, overrides),
        Command::AnalyzeTuple => cmd_analyze_tuple(job, overrides),
        Command::Dilate => cmd_dilate(job, overrides),
        Command::Wandering => cmd_wandering(job, overrides),
        Command::Realize => cmd_realize(job, overrides),
        Command::Corpus => cmd_corpus(job, overrides),
    }
}
