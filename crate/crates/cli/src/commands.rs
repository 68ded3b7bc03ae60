use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use sbtd::experiments::{gen_illcond_btd, gen_invariance_case, gen_random_sbtd, perturbation_probe, IllCondParams, ProbeResult};
use sbtd::serde_ext::extended_f64;
use sbtd::{condition_compressed, condition_direct, cost_model, ConditionReport, CoreStructure, Decomposition};
use serde::{Deserialize, Serialize};

use crate::document::{load_decomposition, save_decomposition};
use crate::error::{CliError, CliResult};
use crate::spec::{parse_dims, parse_ranks};
use crate::{Format, MethodArg, Model};

/// Probe bound slack and the floor for the singular-direction check.
const PROBE_REL_TOL: f64 = 1e-8;
const SINGULAR_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    #[serde(with = "extended_f64")]
    pub relative_discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub seed: u64,
    pub kind: String,
    pub core_dims: Vec<usize>,
    pub inflated_dims: Vec<usize>,
    #[serde(with = "extended_f64")]
    pub kappa_core: f64,
    #[serde(with = "extended_f64")]
    pub kappa_inflated: f64,
    #[serde(with = "extended_f64")]
    pub kappa_compressed: f64,
    #[serde(with = "extended_f64")]
    pub rel_inflation: f64,
    #[serde(with = "extended_f64")]
    pub rel_methods: f64,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub trials: usize,
    pub passed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub failing_seeds: Vec<u64>,
    pub rel_tol: f64,
    pub max_kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub dims: Vec<usize>,
    pub ranks: Vec<Vec<usize>>,
    pub repeat: usize,
    pub direct_seconds: f64,
    pub compressed_seconds: f64,
    pub speedup: f64,
    pub predicted_ratio: f64,
    #[serde(with = "extended_f64")]
    pub kappa_direct: f64,
    #[serde(with = "extended_f64")]
    pub kappa_compressed: f64,
    pub compressed_dims: Option<Vec<usize>>,
}

fn emit<S: Serialize>(out: &mut dyn Write, record: &S) -> CliResult<()> {
    let line = serde_json::to_string(record).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

/// `|a - b| / max(|a|, |b|)`, zero when both are infinite.
pub fn relative_discrepancy(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn write_text(out: &mut dyn Write, r: &ConditionReport) -> CliResult<()> {
    let method = match r.method {
        sbtd::Method::Direct => "direct",
        sbtd::Method::Compressed => "compressed",
    };
    writeln!(out, "method            {method}")?;
    writeln!(out, "kappa             {:.16e}", r.kappa)?;
    writeln!(out, "sigma_min         {:.16e}", r.sigma_min)?;
    writeln!(out, "sigma_max         {:.16e}", r.sigma_max)?;
    writeln!(out, "abs_tol           {:.16e}", r.abs_tol)?;
    writeln!(out, "ill_posed         {}", r.ill_posed)?;
    writeln!(out, "terracini_shape   {}x{}", r.terracini_shape.0, r.terracini_shape.1)?;
    if let Some(d) = &r.compressed_dims {
        let d: Vec<String> = d.iter().map(usize::to_string).collect();
        writeln!(out, "compressed_dims   {}", d.join("x"))?;
    }
    writeln!(out, "wall_time         {:.6}s", r.wall_time.as_secs_f64())?;
    Ok(())
}

pub fn cond(
    path: &Path,
    method: MethodArg,
    tol: Option<f64>,
    format: Format,
    fail_on_illposed: bool,
    out: &mut dyn Write,
) -> CliResult<()> {
    let s = load_decomposition(path)?;
    let mut reports = Vec::new();
    if matches!(method, MethodArg::Direct | MethodArg::Both) {
        reports.push(condition_direct(&s, tol)?);
    }
    if matches!(method, MethodArg::Compressed | MethodArg::Both) {
        reports.push(condition_compressed(&s, tol)?);
    }
    for r in &reports {
        match format {
            Format::Json => emit(out, r)?,
            Format::Text => write_text(out, r)?,
        }
    }
    if let [a, b] = reports.as_slice() {
        let d = relative_discrepancy(a.kappa, b.kappa);
        match format {
            Format::Json => emit(out, &Discrepancy { relative_discrepancy: d })?,
            Format::Text => writeln!(out, "relative_discrepancy {d:.16e}")?,
        }
    }
    if fail_on_illposed {
        if let Some(r) = reports.iter().find(|r| r.ill_posed) {
            return Err(CliError::IllPosed(format!("σ_min = {:e} at tolerance {:e}", r.sigma_min, r.abs_tol)));
        }
    }
    Ok(())
}

struct Params<'a> {
    model: &'a str,
    entries: &'a [(String, String)],
    used: Vec<bool>,
}

impl<'a> Params<'a> {
    fn new(model: &'a str, entries: &'a [(String, String)]) -> Self {
        Self {
            model,
            entries,
            used: vec![false; entries.len()],
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let i = self.entries.iter().rposition(|(k, _)| k == key)?;
        for (j, (k, _)) in self.entries.iter().enumerate() {
            if k == key {
                self.used[j] = true;
            }
        }
        Some(self.entries[i].1.as_str())
    }

    fn dims(&mut self, key: &str, default: Vec<usize>) -> CliResult<Vec<usize>> {
        self.raw(key).map_or(Ok(default), parse_dims)
    }

    fn number<N: std::str::FromStr>(&mut self, key: &str, default: N) -> CliResult<N> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Input(format!("--param {key}={v}: not a number"))),
        }
    }

    fn finish(self) -> CliResult<()> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(CliError::Input(format!(
                "--param {}: not a parameter of {}",
                self.entries[i].0, self.model
            ))),
            None => Ok(()),
        }
    }
}

pub fn gen(
    model: Model,
    seed: u64,
    entries: &[(String, String)],
    out: &Path,
    out_inflated: Option<&Path>,
) -> CliResult<()> {
    if out_inflated.is_some() && model != Model::IllcondBtd {
        return Err(CliError::Input("--out-inflated applies to illcond-btd only".into()));
    }
    match model {
        Model::IllcondBtd => {
            let mut p = Params::new("illcond-btd", entries);
            let d = IllCondParams::default();
            let params = IllCondParams {
                n: p.number("n", d.n)?,
                core_dims: p.dims("core_dims", d.core_dims)?,
                dims: p.dims("dims", d.dims)?,
                inflated_dims: p.dims("inflated_dims", d.inflated_dims)?,
                seed,
            };
            p.finish()?;
            let inst = gen_illcond_btd::<f64>(&params)?;
            save_decomposition(out, &inst.core)?;
            if let Some(path) = out_inflated {
                save_decomposition(path, &inst.inflated)?;
            }
        }
        Model::RandomCpd => {
            let mut p = Params::new("random-cpd", entries);
            let dims = p.dims("dims", vec![5, 5, 5])?;
            let rank: usize = p.number("rank", 3)?;
            p.finish()?;
            if rank == 0 {
                return Err(CliError::Input("--param rank: must be positive".into()));
            }
            let structures = vec![CoreStructure::Rank1; rank];
            let ranks = vec![vec![1; dims.len()]; rank];
            save_decomposition(out, &gen_random_sbtd::<f64>(&dims, &structures, &ranks, seed)?)?;
        }
        Model::RandomBtd => {
            let mut p = Params::new("random-btd", entries);
            let dims = p.dims("dims", vec![6, 6, 4])?;
            let blocks = p.raw("blocks").unwrap_or("2x2x1,2x2x1");
            p.finish()?;
            let (structures, ranks): (Vec<_>, Vec<_>) = parse_ranks(blocks, dims.len())?.into_iter().unzip();
            save_decomposition(out, &gen_random_sbtd::<f64>(&dims, &structures, &ranks, seed)?)?;
        }
    }
    Ok(())
}

/// κ with ill-posed instances mapped to `+∞`.
fn kappa(r: sbtd::Result<ConditionReport>) -> CliResult<f64> {
    match r {
        Ok(r) => Ok(r.kappa),
        Err(sbtd::Error::IllPosed(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn verify_one(seed: u64, max_kappa: f64, rel_tol: f64, adversarial: bool) -> CliResult<VerifyRecord> {
    let (kind, core, inflated): (String, Decomposition, Decomposition) = if adversarial {
        let params = IllCondParams {
            n: 150.0,
            inflated_dims: vec![12, 10, 6],
            ..IllCondParams::new(150.0, seed)
        };
        let inst = gen_illcond_btd::<f64>(&params)?;
        ("illcond".into(), inst.core, inst.inflated)
    } else {
        let case = gen_invariance_case::<f64>(seed)?;
        (case.kind, case.core, case.inflated)
    };
    let kappa_core = kappa(condition_direct(&core, None))?;
    let kappa_inflated = kappa(condition_direct(&inflated, None))?;
    let kappa_compressed = kappa(condition_compressed(&inflated, None))?;
    let rel_inflation = relative_discrepancy(kappa_inflated, kappa_core);
    let rel_methods = relative_discrepancy(kappa_compressed, kappa_inflated);
    let status = if kappa_core > max_kappa {
        Status::Skipped
    } else if rel_inflation <= rel_tol && rel_methods <= rel_tol {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(VerifyRecord {
        seed,
        kind,
        core_dims: core.dims().to_vec(),
        inflated_dims: inflated.dims().to_vec(),
        kappa_core,
        kappa_inflated,
        kappa_compressed,
        rel_inflation,
        rel_methods,
        status,
    })
}

pub fn verify(
    trials: usize,
    seed: u64,
    max_kappa: f64,
    rel_tol: f64,
    adversarial: bool,
    out: &mut dyn Write,
) -> CliResult<()> {
    let mut summary = VerifySummary {
        trials,
        passed: 0,
        skipped: 0,
        failed: 0,
        failing_seeds: Vec::new(),
        rel_tol,
        max_kappa,
    };
    for k in 0..trials as u64 {
        let s = seed.wrapping_add(k);
        let record = verify_one(s, max_kappa, rel_tol, adversarial)?;
        match record.status {
            Status::Pass => summary.passed += 1,
            Status::Skipped => summary.skipped += 1,
            Status::Fail => {
                summary.failed += 1;
                summary.failing_seeds.push(s);
            }
        }
        emit(out, &record)?;
    }
    emit(out, &summary)?;
    if summary.failed > 0 {
        return Err(CliError::Verification(format!(
            "{} of {trials} instances differ by more than {rel_tol:e}; seeds {:?}",
            summary.failed, summary.failing_seeds
        )));
    }
    Ok(())
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2].as_secs_f64()
    } else {
        (xs[n / 2 - 1].as_secs_f64() + xs[n / 2].as_secs_f64()) / 2.0
    }
}

pub fn bench(dims_list: &[String], ranks: &str, repeat: usize, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    if repeat == 0 {
        return Err(CliError::Input("--repeat must be at least 1".into()));
    }
    let configs = dims_list.iter().map(|d| parse_dims(d)).collect::<CliResult<Vec<_>>>()?;
    for dims in configs {
        let (structures, blocks): (Vec<_>, Vec<_>) = parse_ranks(ranks, dims.len())?.into_iter().unzip();
        let s = gen_random_sbtd::<f64>(&dims, &structures, &blocks, seed)?;
        let mut direct = Vec::with_capacity(repeat);
        let mut compressed = Vec::with_capacity(repeat);
        let mut kappa_direct = f64::NAN;
        let mut kappa_compressed = f64::NAN;
        let mut compressed_dims = None;
        for _ in 0..repeat {
            let t = Instant::now();
            let r = condition_direct(&s, None)?;
            direct.push(t.elapsed());
            kappa_direct = r.kappa;
            let t = Instant::now();
            let r = condition_compressed(&s, None)?;
            compressed.push(t.elapsed());
            kappa_compressed = r.kappa;
            compressed_dims = r.compressed_dims;
        }
        let direct_seconds = median(direct);
        let compressed_seconds = median(compressed);
        let geo = dims.iter().map(|&n| (n as f64).ln()).sum::<f64>() / dims.len() as f64;
        let n = geo.exp().round() as usize;
        let l = blocks.iter().flatten().copied().max().unwrap_or(1);
        let predicted_ratio = cost_model(n, dims.len(), blocks.len(), l).ratio();
        emit(
            out,
            &BenchRecord {
                dims,
                ranks: blocks,
                repeat,
                direct_seconds,
                compressed_seconds,
                speedup: direct_seconds / compressed_seconds,
                predicted_ratio,
                kappa_direct,
                kappa_compressed,
                compressed_dims,
            },
        )?;
    }
    Ok(())
}

pub fn probe(path: &Path, samples: usize, seed: u64, inject_singular: bool, out: &mut dyn Write) -> CliResult<()> {
    let s = load_decomposition(path)?;
    let mut result: ProbeResult = perturbation_probe(&s, samples, seed)?;
    let kappa = result.kappa_ref;
    if inject_singular {
        result.max_ratio = result.max_ratio.max(result.singular_ratio);
    }
    emit(out, &result)?;
    if result.max_ratio > kappa * (1.0 + PROBE_REL_TOL) {
        return Err(CliError::Verification(format!(
            "max_ratio {:e} exceeds κ = {kappa:e}",
            result.max_ratio
        )));
    }
    if inject_singular {
        // both σ_min and the solve carry an error of order κ·ε
        let tol = SINGULAR_REL_TOL.max(100.0 * kappa * f64::EPSILON);
        let dev = relative_discrepancy(result.singular_ratio, kappa);
        if dev > tol {
            return Err(CliError::Verification(format!(
                "singular-direction ratio {:e} differs from κ = {kappa:e} by {dev:e}",
                result.singular_ratio
            )));
        }
    }
    Ok(())
}
