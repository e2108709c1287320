//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are printed on every `cargo test`.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use guidance_core::analysis::{
    ate_report, build_report, fit_poisson, fit_poisson_robust, interaction_report, CoefRole, Design, EffectEstimate,
    ReportRequest, Z_95,
};
use guidance_core::corpus::{evaluate_corpus, read_corpus};
use guidance_core::experiment::scenario::{heterogeneity_config, recovery_config, RECOVERY_TARGETS};
use guidance_core::experiment::truth::{null_outcomes, true_interaction_ratios, true_ratios};
use guidance_core::experiment::{
    compute_outcomes, funnel_stats, read_events, simulate_prepared, Arm, Covariate, EventKind, ExperimentEvent,
    Outcome, PreparedSim,
};
use guidance_core::guidance::catalog::reference_rules;
use guidance_core::guidance::compile_ruleset_json;
use oracles::{binary_closed_form, brute_force_hc0, overdispersed, rng, saturated_closed_form, PUBLISHED_EFFECTS};
use rand::Rng;
use serde_json::{json, Value};

type Verdict = Result<String, String>;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples")
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Verdict {
    if elapsed <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn golden_suite() -> Verdict {
    let start = Instant::now();
    let dir = examples().join("appendix_b");
    let mut drafts = 0;
    for rule in reference_rules() {
        let text = std::fs::read_to_string(dir.join(format!("{}.json", rule.slug))).map_err(|e| e.to_string())?;
        let compiled = compile_ruleset_json(&text).map_err(|e| format!("{}: {e}", rule.slug))?;
        let file = std::fs::File::open(dir.join(format!("{}.corpus.jsonl", rule.slug))).map_err(|e| e.to_string())?;
        let entries = read_corpus(BufReader::new(file)).map_err(|e| e.to_string())?;
        let labeled = entries.iter().filter(|e| e.label.is_some()).count();
        if labeled < 5 {
            return Err(format!("{}: only {labeled} labeled drafts", rule.slug));
        }
        let run = evaluate_corpus(&compiled, &entries).map_err(|e| e.to_string())?;
        if run.summary.mismatches > 0 {
            return Err(format!("{}: {} of {labeled} drafts disagree", rule.slug, run.summary.mismatches));
        }
        drafts += labeled;
    }
    let all = std::fs::read_to_string(dir.join("all.json")).map_err(|e| e.to_string())?;
    let n = compile_ruleset_json(&all).map_err(|e| e.to_string())?.rules().len();
    if n != 7 {
        return Err(format!("combined ruleset has {n} rules"));
    }
    within(start.elapsed(), Duration::from_secs(1), format!("7 rules, {drafts} labeled drafts, 100% agreement"))
}

fn binary_dataset(seed: u64) -> (Vec<bool>, Vec<f64>) {
    let mut r = rng(seed);
    let n = r.random_range(20..400);
    let base = r.random_range(0.2..20.0);
    let ratio = r.random_range(0.3..3.0);
    let z: Vec<bool> = (0..n).map(|i| i % 2 == 1 || (i > 4 && r.random_bool(0.3))).collect();
    let mut y: Vec<f64> = z.iter().map(|&t| overdispersed(&mut r, if t { base * ratio } else { base }, 0.7)).collect();
    y[0] += 1.0;
    y[1] += 1.0;
    (z, y)
}

fn saturated_dataset(seed: u64) -> (Vec<bool>, Vec<bool>, Vec<f64>) {
    let mut r = rng(1_000_000 + seed);
    let n = r.random_range(40..500);
    let means: [f64; 4] = std::array::from_fn(|_| r.random_range(0.3..15.0));
    let (mut z, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let (t, c) = if i < 8 { (i % 2 == 1, (i / 2) % 2 == 1) } else { (r.random_bool(0.5), r.random_bool(0.4)) };
        let m = means[usize::from(t) + 2 * usize::from(c)];
        y.push(overdispersed(&mut r, m, 1.5) + f64::from(u8::from(i < 8)));
        z.push(t);
        x.push(c);
    }
    (z, x, y)
}

fn closed_form() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let (z, y) = binary_dataset(seed);
        let (alpha, beta) = binary_closed_form(&z, &y);
        let fit = fit_poisson(&y, &Design::treatment(&z)).map_err(|e| format!("binary {seed}: {e}"))?;
        worst = worst.max((fit.coefficients[0] - alpha).abs()).max((fit.coefficients[1] - beta).abs());
    }
    for seed in 0..200 {
        let (z, x, y) = saturated_dataset(seed);
        let want = saturated_closed_form(&z, &x, &y);
        let design = Design::interaction(&z, &x, "x").map_err(|e| e.to_string())?;
        let fit = fit_poisson(&y, &design).map_err(|e| format!("saturated {seed}: {e}"))?;
        for (got, want) in fit.coefficients.iter().zip(want) {
            worst = worst.max((got - want).abs());
        }
    }
    if worst >= 1e-8 {
        return Err(format!("largest deviation {worst:.2e}"));
    }
    within(start.elapsed(), Duration::from_secs(10), format!("400 datasets, largest deviation {worst:.1e}"))
}

fn hc0_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let mut r = rng(2_000_000 + seed);
        let n = r.random_range(12..=50);
        let x1: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
        let x2: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| overdispersed(&mut r, (0.3 * x1[i] + x2[i]).exp() + 0.5, 1.0)).collect();
        let design = Design::from_columns(&["z", "x"], &[x1, x2]).map_err(|e| e.to_string())?;
        let fit = fit_poisson_robust(&y, &design).map_err(|e| format!("dataset {seed}: {e}"))?;
        let rows: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
        let want = brute_force_hc0(&rows, &y, &fit.fitted);
        let got = fit.covariance.as_ref().ok_or("robust fit has no covariance")?;
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                worst = worst.max((got[(i, j)] - w).abs());
            }
        }
    }
    if worst >= 1e-10 {
        return Err(format!("sandwich differs from brute force by {worst:.2e}"));
    }

    let truth = 0.8f64.ln();
    let reps = 1000;
    let mut covered = 0;
    for rep in 0..reps {
        let mut r = rng(3_000_000 + rep);
        let z: Vec<bool> = (0..600).map(|i| i % 2 == 0).collect();
        let y: Vec<f64> = z.iter().map(|&t| overdispersed(&mut r, if t { 3.0 * 0.8 } else { 3.0 }, 0.8)).collect();
        let fit = fit_poisson_robust(&y, &Design::treatment(&z)).map_err(|e| e.to_string())?;
        let se = fit.std_error(1).ok_or("missing standard error")?;
        if (fit.coefficients[1] - truth).abs() <= Z_95 * se {
            covered += 1;
        }
    }
    let rate = f64::from(covered) / reps as f64;
    let detail = format!("50 sandwiches within {worst:.1e}; coverage {rate:.3} over {reps} replications");
    if !(0.93..=0.97).contains(&rate) {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(120), detail)
}

/// Spreads `count` items over `users` slots as evenly as possible.
fn share(count: u64, users: u64, slot: u64) -> u64 {
    count / users + u64::from(slot < count % users)
}

fn funnel_log(arm: Arm, counts: (u64, u64, u64), users: u64, events: &mut Vec<ExperimentEvent>, next_post: &mut u64) {
    let (starts, submitted, kept) = counts;
    for slot in 0..users {
        let user = format!("{arm}-{slot}");
        events.push(ExperimentEvent::new(0, user.as_str(), "c", EventKind::Enrolled { arm }));
        for _ in 0..share(starts, users, slot) {
            events.push(ExperimentEvent::new(10, user.as_str(), "c", EventKind::PostStart));
        }
        let removed = share(submitted - kept, users, slot);
        for i in 0..share(submitted, users, slot) {
            let post_id = *next_post;
            *next_post += 1;
            events.push(ExperimentEvent::new(20, user.as_str(), "c", EventKind::PostSubmit { post_id }));
            if i < removed {
                events.push(ExperimentEvent::new(
                    80,
                    user.as_str(),
                    "c",
                    EventKind::ModRemoval { post_id: Some(post_id) },
                ));
            }
        }
    }
}

fn funnel() -> Verdict {
    let start = Instant::now();
    let mut events = Vec::new();
    let mut next_post = 1;
    funnel_log(Arm::Control, (85421, 53500, 23268), 50, &mut events, &mut next_post);
    funnel_log(Arm::Treatment, (80593, 46522, 24527), 50, &mut events, &mut next_post);
    let records = compute_outcomes(&events, 28).map_err(|e| e.to_string())?;
    let table = funnel_stats(&records).map_err(|e| e.to_string())?;
    let got: Vec<String> = [table.control.losses(), table.treatment.losses()]
        .iter()
        .flatten()
        .map(|l| guidance_core::experiment::format_loss(*l))
        .collect();
    let want = ["37.4%", "56.5%", "42.3%", "47.3%"];
    let rendered = table.render();
    if got != want || !want.iter().all(|w| rendered.contains(w)) {
        return Err(format!("got {got:?}"));
    }
    within(start.elapsed(), Duration::from_secs(1), got.join("/"))
}

fn table2_rendering() -> Verdict {
    let start = Instant::now();
    for row in &PUBLISHED_EFFECTS {
        let (beta, se) = row.back_compute();
        let e = EffectEstimate::new(row.outcome, CoefRole::Beta, beta, se, 1);
        if e.render() != row.rendered() {
            return Err(format!("{}: rendered {} vs printed {}", row.outcome, e.render(), row.rendered()));
        }
        if e.significant() != row.printed_significant() || e.ci_excludes_zero() != row.printed_significant() {
            return Err(format!("{}: significance verdict differs", row.outcome));
        }
    }
    within(start.elapsed(), Duration::from_secs(1), format!("{} rows render as printed", PUBLISHED_EFFECTS.len()))
}

const SEEDS: u64 = 20;
const USERS: usize = 100_000;

fn recovery() -> Verdict {
    let start = Instant::now();
    let mut covered: BTreeMap<Outcome, u32> = BTreeMap::new();
    let mut quiet: BTreeMap<Outcome, u32> = BTreeMap::new();
    let mut automod_close = 0;
    for seed in 1..=SEEDS {
        let config = recovery_config(USERS, seed).map_err(|e| e.to_string())?;
        let prepared = PreparedSim::new(&config).map_err(|e| e.to_string())?;
        let ratios = true_ratios(&prepared);
        let out = simulate_prepared(&prepared);
        let records = compute_outcomes(&out.events, config.follow_up_days).map_err(|e| e.to_string())?;
        for (outcome, target) in RECOVERY_TARGETS {
            if (ratios[outcome.index()] - target).abs() > 1e-9 {
                return Err(format!(
                    "seed {seed}: {outcome} truth {} is not the target {target}",
                    ratios[outcome.index()]
                ));
            }
            let e = ate_report(&records, outcome).map_err(|e| format!("seed {seed} {outcome}: {e}"))?;
            *covered.entry(outcome).or_default() += u32::from(e.covers_ratio(target));
            if outcome == Outcome::AutomodRemovals && (e.effect - (target - 1.0)).abs() <= 0.03 {
                automod_close += 1;
            }
        }
        for outcome in null_outcomes(&ratios) {
            let e = ate_report(&records, outcome).map_err(|e| format!("seed {seed} {outcome}: {e}"))?;
            *quiet.entry(outcome).or_default() += u32::from(e.p_value > 0.05);
        }
    }
    let cover_text: Vec<String> = covered.iter().map(|(o, n)| format!("{o} {n}/{SEEDS}")).collect();
    let quiet_text: Vec<String> = quiet.iter().map(|(o, n)| format!("{o} {n}/{SEEDS}")).collect();
    let detail = format!(
        "CI covers truth: {}; null p > 0.05: {}; automod within 3pp: {automod_close}/{SEEDS}",
        cover_text.join(", "),
        if quiet_text.is_empty() { "no null outcomes".into() } else { quiet_text.join(", ") }
    );
    let ok = covered.values().all(|&n| n >= 18)
        && !quiet.is_empty()
        && quiet.values().all(|&n| n >= 18)
        && automod_close == SEEDS as u32;
    if !ok {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(300), detail)
}

fn heterogeneity() -> Verdict {
    let start = Instant::now();
    let outcome = Outcome::AutomodRemovals;
    let mut unequal = 0;
    let mut equal = 0;
    let mut truth_seen = 0.0;
    for seed in 1..=SEEDS {
        for (newcomer, others) in [(0.45, 0.80), (0.80, 0.80)] {
            let config = heterogeneity_config(USERS, seed, newcomer, others);
            let prepared = PreparedSim::new(&config).map_err(|e| e.to_string())?;
            let truth =
                true_interaction_ratios(&prepared, Covariate::Newcomer).ok_or("empty stratum")?[outcome.index()];
            let out = simulate_prepared(&prepared);
            let records = compute_outcomes(&out.events, config.follow_up_days).map_err(|e| e.to_string())?;
            let e =
                interaction_report(&records, outcome, Covariate::Newcomer).map_err(|e| format!("seed {seed}: {e}"))?;
            if newcomer == others {
                if (truth - 1.0).abs() > 1e-12 {
                    return Err(format!("equal strata give a true interaction ratio of {truth}"));
                }
                equal += u32::from(e.covers_ratio(1.0));
            } else {
                truth_seen = truth;
                unequal += u32::from(e.covers_ratio(truth));
            }
        }
    }
    let detail =
        format!("γ covers truth e^γ = {truth_seen:.4} in {unequal}/{SEEDS}; equal strata cover 0 in {equal}/{SEEDS}");
    let detail = format!("{detail} ({:.0?})", start.elapsed());
    if unequal >= 18 && equal >= 18 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Server {
    child: Child,
    base: String,
}

fn launch(config: &Path) -> Result<Server, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_guidance"))
        .args(["serve", "--config"])
        .arg(config)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().ok_or("no stdout")?).read_line(&mut line).map_err(|e| e.to_string())?;
    let addr = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner {line:?}"))?;
    Ok(Server { base: format!("http://{addr}"), child })
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(10))).build().into()
}

fn post(agent: &ureq::Agent, url: &str, body: &Value) -> Result<Value, String> {
    let mut r = agent.post(url).send_json(body).map_err(|e| e.to_string())?;
    r.body_mut().read_json().map_err(|e| e.to_string())
}

fn get_text(agent: &ureq::Agent, url: &str) -> Result<String, String> {
    let mut r = agent.get(url).call().map_err(|e| e.to_string())?;
    r.body_mut().read_to_string().map_err(|e| e.to_string())
}

fn get_json(agent: &ureq::Agent, url: &str) -> Result<Value, String> {
    serde_json::from_str(&get_text(agent, url)?).map_err(|e| e.to_string())
}

fn unix_now() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs() as i64)
}

/// Acknowledged state changes, as the clients saw them.
#[derive(Default)]
struct Acked {
    posts: Vec<(String, String, u64)>,
    views: HashMap<(String, String), u64>,
}

/// Drives evaluate/submit/ingest traffic from several clients until `stop`
/// is set or the server stops answering.
fn wait_for(acked: &Mutex<Acked>, posts: usize) -> Result<(), String> {
    let deadline = Instant::now() + Duration::from_secs(60);
    while acked.lock().unwrap().posts.len() < posts {
        if Instant::now() > deadline {
            return Err(format!("load stalled before {posts} acknowledged posts"));
        }
        thread::sleep(Duration::from_millis(20));
    }
    Ok(())
}

fn load(
    base: &str,
    clients: usize,
    tag: &str,
    stop: Arc<AtomicBool>,
    acked: Arc<Mutex<Acked>>,
) -> Vec<thread::JoinHandle<()>> {
    (0..clients)
        .map(|c| {
            let (base, tag, stop, acked) = (base.to_string(), tag.to_string(), stop.clone(), acked.clone());
            thread::spawn(move || {
                let agent = agent();
                for i in 0.. {
                    if stop.load(Ordering::SeqCst) {
                        return;
                    }
                    let user = format!("{tag}-{c}-{}", i % 40);
                    let community = ["alpha", "beta", "gamma"][i % 3];
                    let title = if i % 4 == 0 { "A statement" } else { "A question?" };
                    let draft = json!({ "user_id": user, "title": title, "body": "Some body text for the post." });
                    if post(&agent, &format!("{base}/communities/{community}/evaluate"), &draft).is_err() {
                        return;
                    }
                    let Ok(s) = post(&agent, &format!("{base}/communities/{community}/submit"), &draft) else { return };
                    let Some(post_id) = s["post_id"].as_u64() else { continue };
                    acked.lock().unwrap().posts.push((user.clone(), community.to_string(), post_id));
                    let views = json!([{
                        "timestamp": unix_now(), "user_id": user, "community_id": community,
                        "kind": "received_view", "post_id": post_id, "count": 3
                    }]);
                    if post(&agent, &format!("{base}/events"), &views).is_err() {
                        return;
                    }
                    *acked.lock().unwrap().views.entry((user, community.to_string())).or_default() += 3;
                }
            })
        })
        .collect()
}

fn offline_report(log: &Path) -> Result<(String, Vec<guidance_core::OutcomeRecord>), String> {
    let file = std::fs::File::open(log).map_err(|e| e.to_string())?;
    let events = read_events(BufReader::new(file)).map_err(|e| e.to_string())?;
    let records = compute_outcomes(&events, 28).map_err(|e| e.to_string())?;
    let report = build_report(&records, &ReportRequest::default()).map_err(|e| e.to_string())?;
    Ok((report.to_csv(), records))
}

fn crash_consistency() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("service.toml");
    let data = dir.path().join("data");
    std::fs::write(
        &config,
        format!("data_dir = {:?}\nlisten = \"127.0.0.1:0\"\nsalt = \"crash\"\n", data.to_str().unwrap()),
    )
    .map_err(|e| e.to_string())?;
    let log = data.join("events.jsonl");
    let agent = agent();

    let ask_rule = reference_rules().into_iter().find(|r| r.slug == "ask").ok_or("no ask rule")?.rule;
    let mut server = launch(&config)?;
    for community in ["alpha", "beta", "gamma"] {
        let doc = json!({
            "community_id": community, "version": 1,
            "rules": [serde_json::to_value(&ask_rule).unwrap()]
        });
        agent
            .put(&format!("{}/communities/{community}/ruleset", server.base))
            .send_json(&doc)
            .map_err(|e| format!("upload: {e}"))?;
    }

    // Round one: SIGKILL while eight clients are mid-request.
    let acked = Arc::new(Mutex::new(Acked::default()));
    let stop = Arc::new(AtomicBool::new(false));
    let clients = load(&server.base, 8, "r1", stop.clone(), acked.clone());
    wait_for(&acked, 400)?;
    server.child.kill().map_err(|e| e.to_string())?;
    server.child.wait().map_err(|e| e.to_string())?;
    stop.store(true, Ordering::SeqCst);
    for c in clients {
        let _ = c.join();
    }

    let server = launch(&config)?;
    let (csv, records) = offline_report(&log)?;
    let served = get_text(&agent, &format!("{}/report?format=csv", server.base))?;
    if served != csv {
        return Err("report after restart differs from the offline report on the replayed log".into());
    }
    let by_unit: HashMap<(&str, &str), &guidance_core::OutcomeRecord> =
        records.iter().map(|r| ((r.user_id.as_str(), r.community_id.as_str()), r)).collect();
    let text = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let logged_posts: std::collections::HashSet<u64> = text
        .lines()
        .filter_map(|l| serde_json::from_str::<Value>(l).ok())
        .filter(|v| v["kind"] == "post_submit")
        .filter_map(|v| v["post_id"].as_u64())
        .collect();
    let acked = acked.lock().unwrap();
    let lost_posts = acked.posts.iter().filter(|(_, _, id)| !logged_posts.contains(id)).count();
    let short_views = acked
        .views
        .iter()
        .filter(|((u, c), n)| {
            by_unit.get(&(u.as_str(), c.as_str())).is_none_or(|r| r.get(Outcome::ReceivedViews) < **n)
        })
        .count();
    if lost_posts > 0 || short_views > 0 {
        return Err(format!("{lost_posts} acknowledged posts and {short_views} acknowledged view counts were lost"));
    }
    let round_one = (acked.posts.len(), logged_posts.len());
    drop(acked);

    // Round two: quiesce, snapshot, SIGKILL, restart, compare.
    let acked = Arc::new(Mutex::new(Acked::default()));
    let stop = Arc::new(AtomicBool::new(false));
    let clients = load(&server.base, 8, "r2", stop.clone(), acked.clone());
    wait_for(&acked, 200)?;
    stop.store(true, Ordering::SeqCst);
    for c in clients {
        let _ = c.join();
    }
    let before = get_text(&agent, &format!("{}/report?format=csv", server.base))?;
    let before_events = get_json(&agent, &format!("{}/healthz", server.base))?["events"].clone();
    let mut server = server;
    server.child.kill().map_err(|e| e.to_string())?;
    server.child.wait().map_err(|e| e.to_string())?;

    let mut server = launch(&config)?;
    let after = get_text(&agent, &format!("{}/report?format=csv", server.base))?;
    let after_events = get_json(&agent, &format!("{}/healthz", server.base))?["events"].clone();
    let (offline, _) = offline_report(&log)?;
    let fresh = post(
        &agent,
        &format!("{}/communities/alpha/submit", server.base),
        &json!({ "user_id": "late", "title": "Still working?" }),
    )?;
    let _ = server.child.kill();
    let _ = server.child.wait();
    if before != after || after != offline || before_events != after_events {
        return Err("report or event count changed across a restart".into());
    }
    if fresh["post_id"].as_u64().is_none_or(|id| logged_posts.contains(&id)) {
        return Err("post ids repeat after a restart".into());
    }
    Ok(format!(
        "killed under load after {} acknowledged posts ({} logged), none lost; quiesced kill reproduced {} events and \
         the report exactly ({:.1?})",
        round_one.0,
        round_one.1,
        after_events,
        start.elapsed()
    ))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("appendix-b golden suite", golden_suite),
        ("poisson closed form", closed_form),
        ("hc0 oracle and coverage", hc0_oracle),
        ("funnel arithmetic", funnel),
        ("effect-transform rendering", table2_rendering),
        ("end-to-end recovery", recovery),
        ("heterogeneity recovery", heterogeneity),
        ("service crash-consistency", crash_consistency),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        let _ = writeln!(out, "{tag} {name}: {detail}");
        let _ = out.flush();
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
