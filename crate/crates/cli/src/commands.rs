use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use isomon::linalg::C64;
use isomon::monodromy::{compare_reps, monodromy_rep, tolerance_from_env, MonodromyRep, DEFAULT_REP_TOL};
use isomon::schlesinger::{build_fuchsian_211, schlesinger_step_with, Direction, GarnierState};
use isomon::spectral::{
    degeneration_graph_with, expected_degenerations, parse_types, EdgeStatus, GraphOptions,
    FOUR_ACCESSORY_MULTI_POINT, FOUR_ACCESSORY_THREE_POINT,
};
use isomon::verify::{run_suite, table, Suite};
use isomon::{Error, SpectralType};

use crate::{DirArg, SuiteArg};

#[derive(Debug)]
pub enum Failure {
    Verification(String),
    Input(String),
    NonGeneric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Input(_) => 2,
            Failure::NonGeneric(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::NonGeneric(m) => write!(f, "non-generic point: {m}"),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Variant name of a library error, e.g. `SpectralCollision`.
fn error_name(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string()
}

fn non_generic(e: Error, context: &str) -> Failure {
    Failure::NonGeneric(format!("{} at {context}: {e}", error_name(&e)))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<GarnierState, Failure> {
    let text = read(path)?;
    let s: GarnierState = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    s.validate().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn state_json(s: &GarnierState) -> String {
    serde_json::to_string_pretty(s).expect("state serializes")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cnum(z: C64) -> String {
    format!("{},{}", num(z.re), num(z.im))
}

fn csv_header() -> String {
    let mut cols = vec!["step".to_string(), "direction".to_string()];
    let complex = ["q1", "p1", "q2", "p2", "w1", "w2", "w3", "w4", "u", "t1", "t2"];
    for name in complex {
        cols.push(format!("{name}_re"));
        cols.push(format!("{name}_im"));
    }
    cols.extend(["rebuild_residual", "kernel_residual", "formula_mismatch"].map(String::from));
    for name in ["rho_t1", "rho_t2", "sigma_1", "sigma_2"] {
        cols.push(format!("{name}_re"));
        cols.push(format!("{name}_im"));
    }
    cols.join(",")
}

fn monodromy_of(s: &GarnierState, tol: f64) -> Result<MonodromyRep, Error> {
    monodromy_rep(&build_fuchsian_211(s).to_system(s.eps)?, None, tol)
}

pub fn evolve(
    state_path: &Path,
    dir: DirArg,
    steps: usize,
    out: Option<&Path>,
    verify_every: Option<usize>,
) -> CmdResult {
    let start = load_state(state_path)?;
    if verify_every == Some(0) {
        return Err(Failure::Input("--verify-monodromy needs K >= 1".into()));
    }
    let tol = tolerance_from_env();
    let mut csv = csv_header();
    csv.push('\n');
    let mut notes = Vec::new();
    let mut failed = Vec::new();
    let reference = match verify_every {
        Some(_) if steps > 0 => Some(monodromy_of(&start, tol).map_err(|e| non_generic(e, "step 0"))?),
        _ => None,
    };
    let mut s = start;
    for k in 1..=steps {
        let d = match dir {
            DirArg::S1 => Direction::S1,
            DirArg::S2 => Direction::S2,
            DirArg::Alternate if k % 2 == 1 => Direction::S1,
            DirArg::Alternate => Direction::S2,
        };
        let outcome = schlesinger_step_with(&s, d, isomon::linalg::LuNormalization::UnitDiagonalU)
            .map_err(|e| non_generic(e, &format!("step {k}")))?;
        s = outcome.state;
        let rho = s.rho();
        let sigma = s.sigma();
        let mut row = vec![k.to_string(), if d == Direction::S1 { "s1" } else { "s2" }.to_string()];
        for z in [s.q1, s.p1, s.q2, s.p2, s.w[0], s.w[1], s.w[2], s.w[3], s.u, s.t1, s.t2] {
            row.push(cnum(z));
        }
        for x in [outcome.rebuild_residual, outcome.kernel_residual, outcome.formula_mismatch] {
            row.push(num(x));
        }
        for z in [rho[0], rho[1], sigma[0], sigma[1]] {
            row.push(cnum(z));
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
        if let (Some(every), Some(r0)) = (verify_every, &reference) {
            if k % every == 0 {
                let rep = monodromy_of(&s, tol).map_err(|e| non_generic(e, &format!("step {k}")))?;
                let cmp = compare_reps(r0, &rep, DEFAULT_REP_TOL.max(1e-6));
                let line = format!(
                    "# checkpoint step={k} verdict={} max_mismatch={} relation_defect={}",
                    cmp.verdict,
                    num(cmp.max_mismatch),
                    num(rep.relation_defect)
                );
                if !cmp.compatible || rep.relation_defect > DEFAULT_REP_TOL {
                    failed.push(k);
                }
                notes.push(line);
            }
        }
    }
    for n in &notes {
        csv.push_str(n);
        csv.push('\n');
        eprintln!("{}", n.trim_start_matches("# "));
    }
    if let Some(path) = out {
        write(path, &csv)?;
    }
    println!("{}", state_json(&s));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("monodromy checkpoints failed at steps {failed:?}")))
    }
}

fn parse_seed_list(text: &str) -> Result<Vec<SpectralType>, Failure> {
    let items: Vec<String> = match serde_json::from_str::<Vec<String>>(text) {
        Ok(list) => list,
        Err(_) => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
    };
    items
        .iter()
        .map(|s| s.parse::<SpectralType>().map_err(|e| Failure::Input(format!("'{s}': {e}"))))
        .collect()
}

fn parse_arrows(text: &str) -> Result<Vec<(SpectralType, SpectralType)>, Failure> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (a, b) = l
                .split_once("->")
                .ok_or_else(|| Failure::Input(format!("expected 'A -> B', got '{l}'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<SpectralType>()
                    .map_err(|e| Failure::Input(format!("'{}': {e}", s.trim())))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

pub fn degenerations(
    seeds: Option<&Path>,
    oshima: bool,
    out: Option<&Path>,
    dot: Option<&Path>,
    expected: Option<&Path>,
) -> CmdResult {
    let (seed_types, opts) = if oshima {
        let mut v = parse_types(&FOUR_ACCESSORY_THREE_POINT);
        v.extend(parse_types(&FOUR_ACCESSORY_MULTI_POINT));
        (v, GraphOptions::default())
    } else {
        let path = seeds.ok_or_else(|| Failure::Input("either --seeds or --oshima-3pt is required".into()))?;
        let opts = GraphOptions {
            expand_targets: true,
            ..Default::default()
        };
        (parse_seed_list(&read(path)?)?, opts)
    };
    let arrows = match expected {
        Some(p) => Some(parse_arrows(&read(p)?)?),
        None if oshima => Some(expected_degenerations()),
        None => None,
    };
    let graph = degeneration_graph_with(&seed_types, opts);
    if let Some(p) = out {
        write(p, &graph.to_json())?;
    }
    if let Some(p) = dot {
        write(p, &graph.to_dot())?;
    }
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(w, "{} classes, {} edges", graph.nodes.len(), graph.edges.len());
    for e in &graph.edges {
        let tag = if e.transitive { " (transitive)" } else { "" };
        let _ = writeln!(w, "{} -> {}{tag}", e.from, e.to);
    }
    let Some(arrows) = arrows else {
        return Ok(());
    };
    let mut unmatched = 0;
    for m in graph.match_expected(&arrows) {
        let label = match m.status {
            EdgeStatus::Matched => "MATCHED",
            EdgeStatus::MatchedTransitive => "MATCHED-TRANSITIVE",
            EdgeStatus::Unmatched => {
                unmatched += 1;
                "UNMATCHED"
            }
        };
        let _ = writeln!(w, "{label} {} -> {}", m.from, m.to);
    }
    if oshima {
        // covering edges among the seeded classes that no arrow accounts for
        let sub = graph.restricted_to(&seed_types);
        let spurious: Vec<_> = sub
            .covering_edges()
            .into_iter()
            .filter(|e| !arrows.iter().any(|(a, b)| a == &e.from && b == &e.to))
            .collect();
        for e in &spurious {
            let _ = writeln!(w, "SPURIOUS {} -> {}", e.from, e.to);
        }
        unmatched += spurious.len();
    }
    if unmatched == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{unmatched} arrows unmatched or spurious")))
    }
}

pub fn verify(state_path: &Path, suite: SuiteArg) -> CmdResult {
    let s = load_state(state_path)?;
    let suite = match suite {
        SuiteArg::Exponents => Suite::Exponents,
        SuiteArg::Gauge => Suite::Gauge,
        SuiteArg::Monodromy => Suite::Monodromy,
        SuiteArg::All => Suite::All,
    };
    let checks = run_suite(&s, suite, tolerance_from_env()).map_err(|e| non_generic(e, "verification"))?;
    print!("{}", table(&checks));
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        println!("PASS ({} checks)", checks.len());
        Ok(())
    } else {
        println!("FAIL ({failed} of {} checks)", checks.len());
        Err(Failure::Verification(format!("{failed} checks failed")))
    }
}
