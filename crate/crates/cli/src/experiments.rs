//! One runner per command. Each seed produces CSV records plus a metadata object;
//! seeds fan out over a rayon pool and are merged back in seed order.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use bwres_core::adversary::{prune_to_floor, triangle_blocker, wipe_neighborhood};
use bwres_core::bandwidth::{exact_bandwidth, Labeling, PlanConstants};
use bwres_core::embedder::{embed_spanning, EmbedParams};
use bwres_core::graphcore::{complete, complete_multipartite, cycle, disjoint_copies, disjoint_union, generate_gnp, path, random_regular, Graph};
use bwres_core::packing::{almost_perfect_pack, PackParams, PackRow};
use bwres_core::params::{parameter_sheet, ParameterSheet};
use bwres_core::probharness::{
    chernoff_tail_check, chromatic_number, expander_mixing_check, random_turan_check, second_eigenvalue, verify_lemma61, CheckReport, Lemma61Config,
    MixingMode, CHECK_CSV_HEADER,
};
use bwres_core::regularity::{check_regularity, EngineParams};

use crate::config::{Command, ExperimentConfig, Provenance};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run produces before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: Value,
    pub stage_errors: usize,
}

struct SeedResult {
    rows: Vec<Vec<String>>,
    detail: Value,
    stage_error: bool,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parameter sheet with user overrides applied, and the hash of sheet plus parameters
/// (seeds excluded, so runs over different seed lists share the hash).
pub fn sheet_and_hash(cfg: &ExperimentConfig) -> Result<(ParameterSheet, String), CliError> {
    let r = cfg.usize("r")?;
    let gamma = cfg.f64("gamma")?;
    let mut sheet = parameter_sheet(r, cfg.f64("p")?, gamma, cfg.usize("delta")?.max(1))?;
    for key in ["d", "c", "eps", "xi", "beta", "alpha"] {
        if cfg.is_user_set(key) {
            if let Some(v) = cfg.opt_f64(key)? {
                sheet.set(key, v);
            }
        }
    }
    let mut params = cfg.values.clone();
    params.remove("seeds");
    let canon = serde_json::to_string(&json!({ "command": cfg.command.name(), "check": cfg.check, "sheet": sheet, "params": params }))
        .expect("sheet serializes");
    Ok((sheet, hex(&Sha256::digest(canon.as_bytes()))[..16].to_string()))
}

/// Named small graphs: `K<m>`, `C<m>`, `P<m>`, and complete multipartite `K<a>,<b>,...`.
pub fn parse_h0(name: &str) -> Result<Graph, CliError> {
    let bad = || CliError::Usage(format!("h0: unknown graph `{name}`"));
    let (head, rest) = name.split_at(1.min(name.len()));
    let nums: Vec<usize> = rest.split(',').map(|s| s.trim().parse::<usize>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let g = match (head.to_ascii_uppercase().as_str(), nums.as_slice()) {
        ("K", [m]) if *m >= 1 => complete(*m),
        ("K", parts) if parts.len() >= 2 => complete_multipartite(parts)?,
        ("C", [m]) => cycle(*m)?,
        ("P", [m]) if *m >= 1 => path(*m),
        _ => return Err(bad()),
    };
    Ok(g)
}

fn c4_block_order(copies: std::ops::Range<usize>) -> impl Iterator<Item = usize> {
    copies.flat_map(|t| [4 * t, 4 * t + 1, 4 * t + 3, 4 * t + 2])
}

/// Spanning `H` families for the embed command, with their labelings.
pub fn build_h(cfg: &ExperimentConfig) -> Result<(Graph, Option<Labeling>), CliError> {
    let n = cfg.usize("n")?;
    let family = cfg.text("h").to_ascii_lowercase();
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(CliError::Usage(format!("h = {family}: {what}"))) };
    match family.as_str() {
        "c4-factor" => {
            need(n % 4 == 0, "n must be divisible by 4")?;
            let h = disjoint_copies(&cycle(4)?, n / 4)?;
            let order: Vec<usize> = c4_block_order(0..n / 4).collect();
            Ok((h, Some(Labeling::from_order(&order)?)))
        }
        "c4-path" => {
            let len = cfg.usize("path_len")?;
            need(len >= 2 && len < n && (n - len) % 4 == 0, "n - path_len must be a positive multiple of 4")?;
            let copies = (n - len) / 4;
            let before = copies / 2;
            let h = disjoint_union(&[&disjoint_copies(&cycle(4)?, copies.max(1))?, &path(len)]);
            let h = if copies == 0 { path(len) } else { h };
            let mut order: Vec<usize> = c4_block_order(0..before).collect();
            order.extend(4 * copies..4 * copies + len);
            order.extend(c4_block_order(before..copies));
            Ok((h, Some(Labeling::from_order(&order)?)))
        }
        "path" => Ok((path(n), Some(Labeling::identity(n)))),
        "p3-factor" => {
            need(n % 3 == 0, "n must be divisible by 3")?;
            Ok((disjoint_copies(&path(3), n / 3)?, Some(Labeling::identity(n))))
        }
        _ => Err(CliError::Usage(format!("h: unknown family `{family}` (c4-factor, c4-path, path, p3-factor)"))),
    }
}

fn engine_params(cfg: &ExperimentConfig, r: usize, seed: u64) -> Result<EngineParams, CliError> {
    let mut e = EngineParams::new(r, cfg.f64("gamma")?, cfg.f64("p")?, cfg.f64("eps")?, seed);
    e.d = cfg.f64("d")?;
    e.xi0 = cfg.f64("xi0")?;
    e.k = cfg.opt_usize("k")?;
    e.budget = cfg.u64("budget")?;
    if let Some(eb) = cfg.opt_f64("eps_bad")? {
        e.eps_bad = eb;
    }
    Ok(e)
}

fn degree_floor(n: usize, p: f64, r: usize, gamma: f64) -> usize {
    ((1.0 - 1.0 / r as f64 + gamma) * n as f64 * p - 1e-9).ceil() as usize
}

/// Seeded host plus its adversarial subgraph.
fn host(cfg: &ExperimentConfig, r: usize, seed: u64) -> Result<(Graph, Graph, Vec<usize>), CliError> {
    let (n, p) = (cfg.usize("n")?, cfg.f64("p")?);
    let g = generate_gnp(n, p, seed)?;
    let (gp, report) = match cfg.text("adversary") {
        "none" => return Ok((g.clone(), g, Vec::new())),
        "prune" => prune_to_floor(&g, degree_floor(n, p, r, cfg.f64("gamma")?), seed)?,
        "triangle_blocker" => triangle_blocker(&g, p, cfg.f64("eps")?, seed)?,
        "wipe" => wipe_neighborhood(&g, cfg.usize("vertex")?)?,
        other => return Err(CliError::Usage(format!("adversary: unknown kind `{other}` (none, prune, triangle_blocker, wipe)"))),
    };
    Ok((g, gp, report.blocked_set))
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn run_generate(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let (n, p) = (cfg.usize("n")?, cfg.f64("p")?);
    let g = generate_gnp(n, p, seed)?;
    let mut file = String::new();
    if cfg.bool("write_graphs")? {
        let dir = cfg.out_dir.join("graphs");
        std::fs::create_dir_all(&dir)?;
        file = format!("graphs/gnp_n{n}_p{p}_seed{seed}.txt");
        let out = std::io::BufWriter::new(std::fs::File::create(cfg.out_dir.join(&file))?);
        g.write_to(out)?;
    }
    let row = vec![seed.to_string(), n.to_string(), fmt_f(p), g.edge_count().to_string(), g.min_degree().to_string(), g.max_degree().to_string(), file];
    Ok(SeedResult { rows: vec![row], detail: json!({}), stage_error: false })
}

fn run_adversary(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let r = cfg.usize("r")?;
    let (g, gp, blocked) = host(cfg, r, seed)?;
    let row = vec![
        seed.to_string(),
        g.n().to_string(),
        fmt_f(cfg.f64("p")?),
        cfg.text("adversary").to_string(),
        (g.edge_count() - gp.edge_count()).to_string(),
        g.min_degree().to_string(),
        gp.min_degree().to_string(),
        blocked.len().to_string(),
    ];
    if cfg.bool("write_graphs")? {
        let dir = cfg.out_dir.join("graphs");
        std::fs::create_dir_all(&dir)?;
        let file = dir.join(format!("{}_n{}_seed{seed}.txt", cfg.text("adversary"), g.n()));
        gp.write_to(std::io::BufWriter::new(std::fs::File::create(file)?))?;
    }
    Ok(SeedResult { rows: vec![row], detail: json!({ "blocked_set": blocked }), stage_error: false })
}

fn run_embed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let r = cfg.usize("r")?;
    let (h, labeling) = build_h(cfg)?;
    let (g, gp, _) = host(cfg, r, seed)?;
    let engine = engine_params(cfg, r, seed)?;
    let mut params = EmbedParams::new(engine, cfg.f64("beta")?, cfg.f64("xi")?, h.max_degree());
    if let Some(c) = cfg.opt_f64("c")? {
        params.c = c;
    }
    params.consts = PlanConstants { beta_denominator: cfg.f64("beta_denominator")?, block_factor: cfg.f64("block_factor")? };
    params.buffer_factor = cfg.f64("buffer")?;
    let base = vec![seed.to_string(), h.n().to_string(), fmt_f(cfg.f64("p")?), r.to_string(), cfg.text("h").to_string(), cfg.text("adversary").to_string()];
    let (row, detail, failed) = match embed_spanning(&gp, Some(&g), &h, labeling.as_ref(), &params) {
        Ok(rep) => {
            let mut row = base;
            row.extend(["true".into(), String::new(), String::new(), String::new(), rep.k.to_string(), rep.bad.to_string(), rep.x.to_string(), rep.moves.to_string()]);
            (row, json!({ "embedding": rep.embedding.map }), false)
        }
        Err(e) => {
            let (stage, vertex, message, trace) = match e.as_stage() {
                Some(s) => (s.stage.clone(), s.vertex.map_or(String::new(), |v| v.to_string()), s.message.clone(), s.trace.clone()),
                None => ("unknown".into(), String::new(), e.to_string(), Vec::new()),
            };
            let mut row = base;
            row.extend(["false".into(), stage.clone(), vertex, message.clone(), String::new(), String::new(), String::new(), String::new()]);
            (row, json!({ "stage": stage, "message": message, "trace": trace }), true)
        }
    };
    Ok(SeedResult { rows: vec![row], detail, stage_error: failed })
}

/// Fill in values that depend on other parameters: `pack` takes `r = chi(H0)` unless given.
pub fn derive(cfg: &ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let mut out = cfg.clone();
    if cfg.command == Command::Pack && !cfg.is_user_set("r") {
        let chi = chromatic_number(&parse_h0(cfg.text("h0"))?)?.max(1);
        out.values.insert("r".into(), chi.to_string());
        out.provenance.insert("r".into(), Provenance::Derived);
    }
    Ok(out)
}

fn run_pack(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let h0 = parse_h0(cfg.text("h0"))?;
    let r = cfg.usize("r")?;
    let (g, gp, blocked) = host(cfg, r, seed)?;
    let mut params = PackParams::new(engine_params(cfg, r, seed)?);
    params.cleanup = cfg.bool("cleanup")?;
    params.buffer_factor = cfg.f64("buffer")?;
    let p = cfg.f64("p")?;
    let rep = match almost_perfect_pack(&gp, Some(&g), &h0, &params) {
        Ok(rep) => rep,
        Err(bwres_core::Error::Stage(s)) => {
            let mut record = vec![g.n().to_string(), fmt_f(p), r.to_string(), cfg.text("adversary").to_string()];
            record.extend(["", "", &seed.to_string(), "", "", "", "", "false", "", &s.stage].map(String::from));
            return Ok(SeedResult { rows: vec![record], detail: json!({ "stage": s.stage, "message": s.message, "trace": s.trace }), stage_error: true });
        }
        Err(e) => return Err(e.into()),
    };
    let row = PackRow::new(&rep, p, r, cfg.text("adversary"), seed);
    let blocked_uncovered = blocked.iter().filter(|v| rep.packing.uncovered.binary_search(v).is_ok()).count();
    let record = vec![
        row.n.to_string(),
        fmt_f(row.p),
        row.r.to_string(),
        row.adversary,
        row.uncovered.to_string(),
        row.copies.to_string(),
        row.seed.to_string(),
        rep.bad.to_string(),
        rep.bad_covered.to_string(),
        blocked_uncovered.to_string(),
        rep.precondition_ok.to_string(),
        rep.endgame_error.is_none().to_string(),
        rep.cleanup_copies.to_string(),
        rep.endgame_error.as_ref().map_or(String::new(), |e| e.stage.clone()),
    ];
    let detail = json!({
        "column_totals": rep.column_totals,
        "trimmed": rep.trimmed,
        "failed_columns": rep.failed_columns,
        "endgame_error": rep.endgame_error,
    });
    Ok(SeedResult { rows: vec![record], detail, stage_error: rep.endgame_error.is_some() })
}

fn run_verify(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let (n, p) = (cfg.usize("n")?, cfg.f64("p")?);
    let reports: Vec<CheckReport> = match cfg.check.as_deref() {
        Some("lemma61") => {
            let g = generate_gnp(n, p, seed)?;
            verify_lemma61(&g, p, &Lemma61Config::new(cfg.f64("alpha")?, cfg.f64("big_c")?, seed))?
        }
        Some("chernoff") => vec![chernoff_tail_check(n as u64, p, cfg.f64("lambda")?, cfg.u64("trials")?, seed)?],
        Some("mixing") => {
            let g = random_regular(n, cfg.usize("deg")?, seed)?;
            let prof = second_eigenvalue(&g, 1e-10, 1_000_000)?;
            let mode = if n <= 12 { MixingMode::Exhaustive } else { MixingMode::Sampled { trials: cfg.u64("trials")?, seed } };
            let mut rep = expander_mixing_check(&g, &prof, mode)?;
            rep.seeds = vec![seed];
            vec![rep]
        }
        Some("turan") => {
            let g = generate_gnp(n, p, seed)?;
            let h0 = parse_h0(cfg.text("h0"))?;
            let t = random_turan_check(&g, &h0, cfg.f64("gamma")?, seed)?;
            let mut rep = CheckReport::new("turan", &[("n", n as f64), ("p", p), ("gamma", cfg.f64("gamma")?)], vec![seed]);
            rep.trials = 1;
            rep.failures = u64::from(t.above_threshold && !t.found);
            rep.metrics.insert("chi".into(), t.chi as f64);
            rep.metrics.insert("threshold_edges".into(), t.threshold_edges);
            rep.metrics.insert("edges_after".into(), t.edges_after as f64);
            rep.metrics.insert("found".into(), if t.found { 1.0 } else { 0.0 });
            vec![rep]
        }
        other => return Err(CliError::Usage(format!("unknown check `{}`", other.unwrap_or("")))),
    };
    let failed = reports.iter().any(|r| !r.passed());
    Ok(SeedResult { rows: reports.iter().map(CheckReport::csv_record).collect(), detail: json!({ "all_passed": !failed }), stage_error: false })
}

fn run_bench(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult, CliError> {
    let (n, p) = (cfg.usize("n")?, cfg.f64("p")?);
    let mut rows = Vec::new();
    let mut timings = serde_json::Map::new();
    let t = Instant::now();
    let g = generate_gnp(n, p, seed)?;
    timings.insert("gnp".into(), json!(t.elapsed().as_secs_f64()));
    rows.push(vec![seed.to_string(), "gnp".into(), n.to_string(), g.edge_count().to_string()]);
    let t = Instant::now();
    let small = generate_gnp(9, 0.4, seed)?;
    let (bw, _) = exact_bandwidth(&small)?;
    timings.insert("exact_bandwidth".into(), json!(t.elapsed().as_secs_f64()));
    rows.push(vec![seed.to_string(), "exact_bandwidth".into(), "9".into(), bw.to_string()]);
    let half = n / 2;
    let t = Instant::now();
    let a: Vec<usize> = (0..half).collect();
    let b: Vec<usize> = (half..2 * half).collect();
    let v = check_regularity(&g, &a, &b, cfg.f64("eps")?, cfg.u64("budget")?)?;
    timings.insert("check_regularity".into(), json!(t.elapsed().as_secs_f64()));
    rows.push(vec![seed.to_string(), "check_regularity".into(), n.to_string(), v.is_refuted().to_string()]);
    let t = Instant::now();
    let prof = second_eigenvalue(&g, 1e-8, 100_000)?;
    timings.insert("second_eigenvalue".into(), json!(t.elapsed().as_secs_f64()));
    rows.push(vec![seed.to_string(), "second_eigenvalue".into(), n.to_string(), format!("{:.6}", prof.lambda)]);
    Ok(SeedResult { rows, detail: json!({ "timings_s": timings }), stage_error: false })
}

fn header(cfg: &ExperimentConfig) -> Vec<String> {
    let cols: Vec<&str> = match cfg.command {
        Command::Generate => vec!["seed", "n", "p", "edges", "min_degree", "max_degree", "file"],
        Command::Adversary => vec!["seed", "n", "p", "adversary", "deleted_edges", "min_degree_before", "min_degree_after", "blocked"],
        Command::Embed => vec!["seed", "n", "p", "r", "h", "adversary", "success", "stage", "vertex", "message", "k", "bad", "x", "moves"],
        Command::Pack => vec![
            "n",
            "p",
            "r",
            "adversary",
            "uncovered",
            "copies",
            "seed",
            "bad",
            "bad_covered",
            "blocked_uncovered",
            "precondition_ok",
            "endgame_ok",
            "cleanup_copies",
            "stage",
        ],
        Command::Verify => CHECK_CSV_HEADER.to_vec(),
        Command::Bench => vec!["seed", "kernel", "n", "result"],
        Command::Sheet => vec!["name", "value", "rule", "source"],
    };
    cols.into_iter().map(String::from).chain(std::iter::once("sheet_hash".to_string())).collect()
}

/// Run a resolved configuration. Per-seed failures of the experiment itself are
/// counted in `stage_errors`; configuration and I/O problems abort.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let cfg = &derive(cfg)?;
    let (sheet, hash) = sheet_and_hash(cfg)?;
    let name = match (&cfg.command, &cfg.check) {
        (Command::Verify, Some(c)) => format!("verify_{c}"),
        (c, _) => c.name().to_string(),
    };
    let params: serde_json::Map<String, Value> =
        cfg.values.iter().map(|(k, v)| (k.clone(), json!({ "value": v, "source": cfg.provenance[k] }))).collect();
    let mut notes = Vec::new();
    if cfg.command == Command::Pack {
        let h = parse_h0(cfg.text("h0"))?.n();
        if cfg.usize("n")? % h != 0 {
            notes.push(format!("n is not divisible by |V(H0)| = {h}; a perfect packing is impossible"));
        }
    }
    if cfg.command == Command::Sheet {
        let rows = sheet
            .entries
            .iter()
            .map(|e| vec![e.name.clone(), e.value.map_or(String::new(), fmt_f), e.rule.clone(), format!("{:?}", e.source).to_lowercase(), hash.clone()])
            .collect();
        let meta = json!({ "schema_version": SCHEMA_VERSION, "command": name, "parameters": params, "sheet": sheet, "sheet_hash": hash });
        return Ok(RunOutput { name, header: header(cfg), rows, meta, stage_errors: 0 });
    }
    let runner = |seed: u64| -> Result<(SeedResult, f64), CliError> {
        let t = Instant::now();
        let res = match cfg.command {
            Command::Generate => run_generate(cfg, seed),
            Command::Adversary => run_adversary(cfg, seed),
            Command::Embed => run_embed(cfg, seed),
            Command::Pack => run_pack(cfg, seed),
            Command::Verify => run_verify(cfg, seed),
            Command::Bench => run_bench(cfg, seed),
            Command::Sheet => unreachable!("handled above"),
        }?;
        Ok((res, t.elapsed().as_secs_f64()))
    };
    let results: Vec<Result<(SeedResult, f64), CliError>> = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("jobs: {e}")))?
            .install(|| cfg.seeds.par_iter().map(|&s| runner(s)).collect()),
        None => cfg.seeds.par_iter().map(|&s| runner(s)).collect(),
    };
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut stage_errors = 0;
    for (seed, res) in cfg.seeds.iter().zip(results) {
        let (res, secs) = res?;
        stage_errors += usize::from(res.stage_error);
        rows.extend(res.rows.into_iter().map(|mut r| {
            r.push(hash.clone());
            r
        }));
        runs.push(json!({ "seed": seed, "runtime_s": secs, "stage_error": res.stage_error, "detail": res.detail }));
    }
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "parameters": params,
        "sheet": sheet,
        "sheet_hash": hash,
        "seeds": cfg.seeds,
        "runs": runs,
        "notes": notes,
    });
    Ok(RunOutput { name, header: header(cfg), rows, meta, stage_errors })
}

/// CSV body as bytes (header included).
pub fn csv_bytes(out: &RunOutput) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&out.header)?;
    for r in &out.rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Write `<name>.csv` and `<name>.json` under `dir`; returns the CSV path.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<std::path::PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", out.name));
    std::fs::write(&csv_path, csv_bytes(out)?)?;
    let meta = serde_json::to_string_pretty(&out.meta).expect("metadata serializes");
    std::fs::write(dir.join(format!("{}.json", out.name)), meta)?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn cfg(command: Command, check: Option<&str>, kv: &[(&str, &str)]) -> ExperimentConfig {
        let cli: BTreeMap<String, String> = kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::resolve(command, check.map(String::from), &cli, &BTreeMap::new(), std::env::temp_dir(), Some(1)).unwrap()
    }

    #[test]
    fn h0_names() {
        assert_eq!(parse_h0("K3").unwrap().edge_count(), 3);
        assert_eq!(parse_h0("C4").unwrap().edge_count(), 4);
        assert_eq!(parse_h0("P3").unwrap().edge_count(), 2);
        assert_eq!(parse_h0("K1,2,2").unwrap().n(), 5);
        assert!(parse_h0("Q5").is_err());
        assert!(parse_h0("").is_err());
    }

    #[test]
    fn h_families_have_small_bandwidth() {
        for fam in ["c4-factor", "c4-path", "path", "p3-factor"] {
            let c = cfg(Command::Embed, None, &[("n", "120"), ("h", fam), ("path_len", "40")]);
            let (h, l) = build_h(&c).unwrap();
            assert_eq!(h.n(), 120);
            let l = l.unwrap();
            assert!(bwres_core::bandwidth::labeling_bandwidth(&h, l.labels()).unwrap() <= 2, "{fam}");
        }
        let c = cfg(Command::Embed, None, &[("n", "122"), ("h", "c4-factor")]);
        assert!(build_h(&c).is_err());
    }

    #[test]
    fn hash_ignores_seeds_but_not_parameters() {
        let a = sheet_and_hash(&cfg(Command::Generate, None, &[("seeds", "1..3")])).unwrap().1;
        let b = sheet_and_hash(&cfg(Command::Generate, None, &[("seeds", "4")])).unwrap().1;
        let c = sheet_and_hash(&cfg(Command::Generate, None, &[("p", "0.3")])).unwrap().1;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn generate_rows_are_deterministic() {
        let c = cfg(Command::Generate, None, &[("n", "50"), ("seeds", "1..3"), ("write_graphs", "false")]);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(csv_bytes(&a).unwrap(), csv_bytes(&b).unwrap());
        assert_eq!(a.rows.len(), 3);
        assert!(a.rows.iter().all(|r| r.len() == a.header.len()));
    }

    #[test]
    fn pack_derives_r_from_h0() {
        let c = derive(&cfg(Command::Pack, None, &[("h0", "K3")])).unwrap();
        assert_eq!((c.usize("r").unwrap(), c.provenance["r"]), (3, Provenance::Derived));
        let c = derive(&cfg(Command::Pack, None, &[("h0", "K3"), ("r", "4")])).unwrap();
        assert_eq!((c.usize("r").unwrap(), c.provenance["r"]), (4, Provenance::Cli));
        assert_eq!(derive(&cfg(Command::Pack, None, &[])).unwrap().usize("r").unwrap(), 2);
    }

    #[test]
    fn verify_chernoff_row_shape() {
        let c = cfg(Command::Verify, Some("chernoff"), &[("trials", "1000")]);
        let out = run(&c).unwrap();
        assert_eq!(out.name, "verify_chernoff");
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].len(), out.header.len());
    }
}
