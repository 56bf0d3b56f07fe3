//! Acceptance run: drives the `pricelab` binary through every experiment and
//! prints one PASS/FAIL line per criterion. Exits nonzero if any is red.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pricelab");

struct Run {
    name: String,
    dir: PathBuf,
    code: i32,
    elapsed: Duration,
    report: Option<Value>,
}

impl Run {
    fn checks(&self) -> Vec<(String, bool)> {
        let Some(r) = &self.report else {
            return Vec::new();
        };
        r["checks"]
            .as_array()
            .map(|cs| {
                cs.iter()
                    .map(|c| {
                        (
                            c["name"].as_str().unwrap_or_default().to_string(),
                            c["passed"].as_bool().unwrap_or(false),
                        )
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn passed(&self) -> bool {
        self.code == 0 && self.report.as_ref().is_some_and(|r| r["passed"] == true)
    }

    /// Ran to completion (exit 0 or 1) and wrote a report.
    fn completed(&self) -> bool {
        (self.code == 0 || self.code == 1) && self.report.is_some()
    }

    fn failing(&self, filter: impl Fn(&str) -> bool) -> Vec<String> {
        self.checks()
            .into_iter()
            .filter(|(n, ok)| filter(n) && !ok)
            .map(|(n, _)| n)
            .collect()
    }

    fn matching(&self, filter: impl Fn(&str) -> bool) -> usize {
        self.checks().iter().filter(|(n, _)| filter(n)).count()
    }
}

fn pricelab(root: &Path, name: &str, args: &[&str]) -> Run {
    let dir = root.join(name);
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(&dir)
        .output()
        .expect("spawn pricelab");
    let elapsed = start.elapsed();
    let code = out.status.code().unwrap_or(-1);
    if code == 2 {
        eprintln!(
            "{name}: pricelab failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let report = std::fs::read(dir.join("report.json"))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok());
    eprintln!(
        "  ran {name} in {:.1}s (exit {code})",
        elapsed.as_secs_f64()
    );
    Run {
        name: name.to_string(),
        dir,
        code,
        elapsed,
        report,
    }
}

struct Verdicts {
    lines: Vec<(usize, bool, String)>,
}

impl Verdicts {
    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        self.lines.push((id, ok, format!("{title}: {detail}")));
    }
}

fn summarize(fails: &[String]) -> String {
    if fails.is_empty() {
        "all checks pass".into()
    } else {
        format!("failing: {}", fails.join("; "))
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut v = Verdicts { lines: Vec::new() };

    // Stackelberg values across k.
    let sweep = pricelab(
        root,
        "sweep",
        &[
            "stackelberg-sweep",
            "--ks",
            "20,50,100,150,200",
            "--oracle-ks",
        ],
    );
    let fails = sweep.failing(|_| true);
    v.record(
        1,
        "Stackelberg leader and follower within 2% of (k-1)/(ek), buyer price >= 2/3, k in {20,50,100,150,200}",
        sweep.passed() && sweep.elapsed <= Duration::from_secs(300),
        format!("{} in {:.1}s", summarize(&fails), sweep.elapsed.as_secs_f64()),
    );

    let strategy = pricelab(root, "strategy", &["stackelberg-strategy", "--k", "100"]);
    v.record(
        2,
        "k=100 follower tie band 36/100..98/100 and perturbed best response 98/100",
        strategy.passed(),
        summarize(&strategy.failing(|_| true)),
    );

    let oracle = pricelab(
        root,
        "oracle",
        &["stackelberg-sweep", "--ks", "2", "--oracle-ks", "2,3,4,5"],
    );
    let n = oracle.matching(|n| n.contains("grid search"));
    v.record(
        3,
        "LP leader value matches a 1/1000 grid search within 1e-2, k in {2,3,4,5}",
        oracle.passed() && n == 4 && oracle.elapsed <= Duration::from_secs(60),
        format!(
            "{n} oracle checks, {} in {:.1}s",
            summarize(&oracle.failing(|_| true)),
            oracle.elapsed.as_secs_f64()
        ),
    );

    let dominance = pricelab(root, "dominance", &["dominance", "--ks", "20,50,100"]);
    v.record(
        4,
        "iterated dominance leaves exactly {1/k, 2/k} for k in {20,50,100}",
        dominance.passed(),
        summarize(&dominance.failing(|_| true)),
    );

    let uni_b = pricelab(
        root,
        "uniform_bertrand",
        &[
            "uniform-bound",
            "--learner",
            "hedge",
            "--k",
            "20",
            "--rounds",
            "100000",
        ],
    );
    v.record(
        5,
        "Bertrand: uniform optimizer average >= 6/625 - R/T against Hedge, best response to uniform >= 1/5",
        uni_b.passed(),
        summarize(&uni_b.failing(|_| true)),
    );

    let uni_l = pricelab(
        root,
        "uniform_logit",
        &[
            "uniform-bound",
            "--model",
            "logit",
            "--learner",
            "hedge",
            "--k",
            "20",
            "--rounds",
            "100000",
        ],
    );
    v.record(
        6,
        "logit tau=2k: uniform optimizer average >= 1/128 - R/T against Hedge, best response to uniform >= 1/8",
        uni_l.passed(),
        summarize(&uni_l.failing(|_| true)),
    );

    let loot_b = pricelab(root, "looting_bertrand", &["equal-looting"]);
    let loot_l = pricelab(
        root,
        "looting_logit",
        &["equal-looting", "--model", "logit", "--k", "20"],
    );
    let loot_u = pricelab(
        root,
        "looting_uniform",
        &["equal-looting", "--optimizer", "uniform", "--k", "20"],
    );

    let conv_h = pricelab(
        root,
        "conv_hedge",
        &["convergence", "--alg-a", "hedge", "--alg-b", "hedge"],
    );
    let conv_f = pricelab(
        root,
        "conv_ftpl",
        &["convergence", "--alg-a", "ftpl", "--alg-b", "ftpl"],
    );
    let conv_b = pricelab(
        root,
        "conv_bm",
        &[
            "convergence",
            "--alg-a",
            "blum-mansour",
            "--alg-b",
            "blum-mansour",
        ],
    );
    let nash = pricelab(root, "nash", &["nash-in-alg-space"]);
    let battery = pricelab(root, "battery", &["regret-battery"]);
    let threat_c = pricelab(
        root,
        "threat_compliant",
        &["threat", "--follower", "compliant"],
    );
    let threat_d = pricelab(
        root,
        "threat_deviating",
        &["threat", "--follower", "deviating", "--deviate-at", "all"],
    );
    let audit_h = pricelab(
        root,
        "audit_conv",
        &[
            "audit",
            conv_h.dir.join("transcript.jsonl").to_str().unwrap(),
        ],
    );
    let audit_n = pricelab(
        root,
        "audit_nash",
        &[
            "audit",
            nash.dir.join("transcript_T100000.jsonl").to_str().unwrap(),
        ],
    );
    let matrix = pricelab(root, "matrix", &["payoff-matrix", "--k", "20"]);

    let learning: Vec<&Run> = vec![
        &uni_b, &uni_l, &loot_b, &loot_l, &loot_u, &conv_h, &conv_f, &conv_b, &nash, &battery,
    ];
    let all_ran = learning.iter().all(|r| r.completed());
    let looting = |needle: &str| {
        let n: usize = learning
            .iter()
            .map(|r| r.matching(|c| c.contains(needle)))
            .sum();
        let fails: Vec<String> = learning
            .iter()
            .flat_map(|r| {
                r.failing(|c| c.contains(needle))
                    .into_iter()
                    .map(move |c| format!("{}: {c}", r.name))
            })
            .collect();
        (n, fails)
    };
    let (n7, f7) = looting("average >= c^2/8");
    let logit_seen = [&uni_l, &loot_l]
        .iter()
        .all(|r| r.matching(|c| c.contains("average >= c^2/8")) > 0);
    v.record(
        7,
        "no-regret learner average >= c^2/8 - R/T in every run, Bertrand and logit",
        all_ran && n7 > 0 && logit_seen && f7.is_empty(),
        format!(
            "{n7} checks over {} runs, {}",
            learning.len(),
            summarize(&f7)
        ),
    );
    let (n8, f8) = looting("4(sqrt(1.5) - 1)");
    v.record(
        8,
        "optimizer average <= 4(sqrt(1.5) - 1) + R/T against every no-regret learner",
        all_ran && n8 > 0 && f8.is_empty(),
        format!("{n8} checks, {}", summarize(&f8)),
    );

    let conv_ok = |r: &Run| {
        r.passed()
            && r.matching(|c| c.contains("tail average buyer price <= 3/k")) == 1
            && r.elapsed <= Duration::from_secs(300)
    };
    v.record(
        9,
        "Hedge/Hedge and FTPL/FTPL, k=10, T=1e6: tail buyer price <= 3/k, tail mass on prices >= 4/k <= 0.05",
        conv_ok(&conv_h) && conv_ok(&conv_f),
        format!(
            "hedge {} ({:.1}s); ftpl {} ({:.1}s)",
            summarize(&conv_h.failing(|_| true)),
            conv_h.elapsed.as_secs_f64(),
            summarize(&conv_f.failing(|_| true)),
            conv_f.elapsed.as_secs_f64()
        ),
    );
    v.record(
        10,
        "Blum-Mansour/Blum-Mansour, k=10, T=1e6: tail mass on prices >= 3/k <= 0.05",
        conv_b.passed() && conv_b.matching(|c| c.contains("tail mass on prices >= 3/k")) == 2,
        summarize(&conv_b.failing(|_| true)),
    );

    let nash_claim =
        |c: &str| c.contains("strictly decreasing") || c.contains("buyer price >= 2/3");
    let f11 = nash.failing(nash_claim);
    v.record(
        11,
        "no-swap-regret learner vs static Stackelberg, T in {1e4,1e5,1e6}: gaps/T strictly decreasing, buyer price >= 2/3",
        nash.completed() && nash.matching(nash_claim) == 5 && f11.is_empty(),
        summarize(&f11),
    );

    let mut f12 = threat_c.failing(|_| true);
    f12.extend(threat_d.failing(|_| true));
    v.record(
        12,
        "threat leader, k=20, T=1e4: leader >= 17T/80, compliant follower = T/2 + 1 - 1/k, deviators capped",
        threat_c.passed() && threat_d.passed(),
        summarize(&f12),
    );

    let regret_claim = |c: &str| c.contains("sqrt(T ln k)") || c.contains("sqrt(T k ln k)");
    let mut swap_runs: Vec<&Run> = learning.clone();
    swap_runs.extend([&threat_c, &threat_d, &audit_h, &audit_n]);
    let swap_fails: Vec<String> = swap_runs
        .iter()
        .flat_map(|r| r.failing(|c| c.contains("swap regret >= external regret")))
        .collect();
    let mut f13 = battery.failing(regret_claim);
    f13.extend(swap_fails);
    v.record(
        13,
        "Hedge external regret <= 2 sqrt(T ln k), Blum-Mansour swap regret <= 3 sqrt(T k ln k), swap >= external everywhere",
        battery.completed() && battery.matching(regret_claim) == 8 && f13.is_empty(),
        format!(
            "{} bound checks on the battery, {}",
            battery.matching(regret_claim),
            summarize(&f13)
        ),
    );

    let acct_runs = swap_runs.clone();
    let acct = |c: &str| c.contains("(U1 + U2) / T");
    let n14: usize = acct_runs.iter().map(|r| r.matching(acct)).sum();
    let f14: Vec<String> = acct_runs.iter().flat_map(|r| r.failing(acct)).collect();
    v.record(
        14,
        "average buyer price = (U1 + U2) / T within 1e-12 on every transcript",
        acct_runs.iter().all(|r| r.completed()) && n14 > 0 && f14.is_empty(),
        format!("{n14} checks, {}", summarize(&f14)),
    );

    // Replay every subcommand's manifest, including a replay's own.
    let originals: Vec<&Run> = vec![
        &sweep, &strategy, &oracle, &dominance, &uni_b, &loot_b, &conv_h, &threat_c, &threat_d,
        &nash, &battery, &audit_h, &matrix,
    ];
    let mut f15 = Vec::new();
    let mut replays = Vec::new();
    for r in originals {
        let name = format!("replay_{}", r.name);
        let rep = pricelab(
            root,
            &name,
            &["replay", r.dir.join("manifest.json").to_str().unwrap()],
        );
        if !rep.passed() {
            f15.push(format!("{}: {}", r.name, summarize(&rep.failing(|_| true))));
        }
        replays.push(rep);
    }
    let nested = pricelab(
        root,
        "replay_of_replay",
        &[
            "replay",
            replays
                .last()
                .unwrap()
                .dir
                .join("manifest.json")
                .to_str()
                .unwrap(),
        ],
    );
    if !nested.passed() {
        f15.push(format!("replay: {}", summarize(&nested.failing(|_| true))));
    }
    v.record(
        15,
        "re-running each subcommand from its manifest reproduces every output checksum",
        f15.is_empty(),
        format!(
            "{} manifests replayed, {}",
            replays.len() + 1,
            summarize(&f15)
        ),
    );

    println!();
    let mut red = 0;
    for (id, ok, text) in &v.lines {
        if !ok {
            red += 1;
        }
        println!(
            "{} criterion {id:>2}. {text}",
            if *ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "\n{} of {} criteria pass",
        v.lines.len() - red,
        v.lines.len()
    );
    if red > 0 {
        std::process::exit(1);
    }
}
