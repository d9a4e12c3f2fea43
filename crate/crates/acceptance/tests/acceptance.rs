use std::f64::consts::PI;
use std::fs;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use sqg_sheets::cli::{parse_config, run};
use sqg_sheets::contour::{verify_strength, verify_tangency};
use sqg_sheets::diagnostics::{mirror_check, wslope_fit};
use sqg_sheets::io::parse_records_json;
use sqg_sheets::kernels::{constant_c, measure_multipliers};
use sqg_sheets::linop::{assemble_blocks, finite_difference_blocks, BlockSource};
use sqg_sheets::pointvortex::{integrate_rk4, wstar, PointKernel, PointSystem};
use sqg_sheets::solver::{
    continuation, eps_ladder, solve_record, ContinuationRecord, ContinuationRun, Init, SolverConfig,
};
use sqg_sheets::trig::Grid;
use sqg_sheets_acceptance::{series_c, Verdict};

struct Sweep {
    run: ContinuationRun,
    elapsed: Duration,
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let t0 = Instant::now();
        let run = continuation(&eps_ladder(0.1, 0.01).unwrap(), 1.0, &SolverConfig::default()).unwrap();
        Sweep {
            run,
            elapsed: t0.elapsed(),
        }
    })
}

#[test]
fn criterion_01_trivial_branch_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cfg = parse_config(["sqg-sheets", "solve", "--eps", "0", "--d", "1", "--out-dir", out_dir]).unwrap();
    let t0 = Instant::now();
    let mut report = Vec::new();
    let status = run(&cfg, &mut report);
    let elapsed = t0.elapsed();
    let text = String::from_utf8(report).unwrap();
    let records: Vec<ContinuationRecord> = status
        .ok()
        .and_then(|_| fs::read_to_string(dir.path().join("records.json")).ok())
        .and_then(|s| parse_records_json(&s).ok())
        .unwrap_or_default();
    let rec = records.first();
    let zero = rec.is_some_and(|r| r.p_coeffs.iter().chain(&r.q_coeffs).all(|&c| c == 0.0));
    let w = rec.map_or(f64::NAN, |r| r.w);
    let magnitude_ok = w.abs() == 0.5 || w.abs() == 0.25;
    let stated = text.contains("sign ") && text.contains("magnitude ");
    let both = text.contains("1/(2d)^2 = 2.5000000000000000e-1") && text.contains("1/(2d^2) = 5.0000000000000000e-1");
    let fast = elapsed < Duration::from_secs(1);
    Verdict::new(
        1,
        "trivial branch point",
        zero && magnitude_ok && stated && both && fast,
        format!(
            "p = q = 0: {zero}, W0 = {w}, orientation stated: {stated}, both displayed values printed: {both}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
    .emit();
}

#[test]
fn criterion_02_constant_c_anchor() {
    let t0 = Instant::now();
    let grid = Grid::new(4096).unwrap();
    let c1 = constant_c(1, &grid).unwrap();
    let elapsed = t0.elapsed();
    let oracle = series_c(1);
    let target = -5.0 / (3.0 * PI);
    let matches_target = (c1 - target).abs() < 1e-6;
    let matches_oracle = (c1 - oracle).abs() < 1e-6;
    let fast = elapsed < Duration::from_secs(1);
    Verdict::new(
        2,
        "constant C anchor",
        matches_target && matches_oracle && fast,
        format!(
            "C_1(M=4096) = {c1:.9}, target -5/(3pi) = {target:.9} (gap {:.3e}), series oracle = {oracle:.9} (gap {:.3e}), {:.3} s",
            (c1 - target).abs(),
            (c1 - oracle).abs(),
            elapsed.as_secs_f64()
        ),
    )
    .emit();
}

#[test]
fn criterion_03_jacobian_consistency() {
    let t0 = Instant::now();
    let grid = Grid::new(256).unwrap();
    let table = measure_multipliers(32, &grid).unwrap();
    let op = assemble_blocks(&table, BlockSource::Measured).unwrap();
    let fd = finite_difference_blocks(16, 32, 1.0, &grid, 1e-6).unwrap();
    let mut worst = 0.0f64;
    for j in 1..=16 {
        let q = op.block(j).unwrap();
        let scale = q.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((q[r][c] - fd.blocks[j - 1][r][c]).abs() / scale);
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = worst < 1e-8 && elapsed < Duration::from_secs(10);
    Verdict::new(
        3,
        "Jacobian consistency",
        pass,
        format!(
            "max relative block error {worst:.3e}, off-block response {:.3e}, {:.2} s",
            fd.max_off_block,
            elapsed.as_secs_f64()
        ),
    )
    .emit();
}

#[test]
fn criterion_04_newton_along_branch() {
    let s = sweep();
    let recs = &s.run.records;
    let reached = s.run.empirical_eps0().unwrap_or(0.0);
    let max_iter = recs.iter().map(|r| r.iterations).max().unwrap_or(usize::MAX);
    let max_res = recs.iter().map(|r| r.residual_sup).fold(0.0, f64::max);
    let pass = reached >= 0.05 - 1e-12 && max_iter <= 10 && max_res < 1e-9 && s.elapsed < Duration::from_secs(120);
    Verdict::new(
        4,
        "Newton convergence along the branch",
        pass,
        format!(
            "reached eps = {reached}, {} records, max iterations {max_iter}, max residual {max_res:.3e}, {:.1} s",
            recs.len(),
            s.elapsed.as_secs_f64()
        ),
    )
    .emit();
}

#[test]
fn criterion_05_speed_asymptotics() {
    let fit = wslope_fit(&sweep().run.records);
    let exponent = fit.as_ref().ok().and_then(|f| f.exponent);
    let pass = exponent.is_some_and(|e| e >= 1.8);
    Verdict::new(5, "speed asymptotics", pass, format!("fitted exponent {exponent:?}")).emit();
}

#[test]
fn criterion_06_convexity() {
    let recs = &sweep().run.records;
    let min = recs.iter().map(|r| r.min_curvature).fold(f64::INFINITY, f64::min);
    let pass = !recs.is_empty() && min > 0.9;
    Verdict::new(6, "convexity", pass, format!("min curvature over {} records {min:.9}", recs.len())).emit();
}

#[test]
fn criterion_07_cross_path_physics() {
    let s = sweep();
    let state = s.run.states.last().unwrap();
    let grid = Grid::new(256).unwrap();
    let tangency = verify_tangency(state, &grid).unwrap();
    let sup = tangency.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let strength = verify_strength(state, &grid).unwrap();
    let spread = strength.relative_spread();
    let pass = sup < 1e-7 && spread < 1e-6;
    Verdict::new(
        7,
        "cross-path physics",
        pass,
        format!("eps = {}: tangency sup {sup:.3e}, strength std/|mean| {spread:.3e}", state.eps),
    )
    .emit();
}

#[test]
fn criterion_08_mirror_symmetry() {
    let cfg = SolverConfig::default();
    let eps = 0.05;
    let (plus, _) = solve_record(eps, 1.0, Init::Predictor, &cfg).unwrap();
    let (minus, _) = solve_record(-eps, 1.0, Init::Predictor, &cfg).unwrap();
    let report = mirror_check(&plus, &minus).unwrap();
    Verdict::new(
        8,
        "mirror symmetry",
        report.passed,
        format!(
            "eps = +/-{eps}: max coefficient gap {:.3e} at {:?}, W gap {:.3e}",
            report.max_coeff_diff, report.worst_mode, report.w_diff
        ),
    )
    .emit();
}

#[test]
fn criterion_09_point_vortex_translation() {
    let t0 = Instant::now();
    let sys = PointSystem::lattice(2, 1.0).unwrap();
    let w = wstar(2, 1.0, &PointKernel::default()).unwrap();
    let traj = integrate_rk4(&sys, 10.0, 1e-3).unwrap();
    let t = *traj.times.last().unwrap();
    let deviation = sys
        .positions
        .iter()
        .zip(traj.last())
        .map(|(z0, z)| (z[0] - z0[0]).hypot(z[1] - z0[1] - w * t))
        .fold(0.0, f64::max);
    let d0 = 2.0;
    let drift = traj
        .positions
        .iter()
        .map(|p| ((p[0][0] - p[1][0]).hypot(p[0][1] - p[1][1]) - d0).abs())
        .fold(0.0, f64::max);
    let elapsed = t0.elapsed();
    let pass = w == 0.25 && deviation < 1e-6 && drift < 1e-8 && elapsed < Duration::from_secs(5);
    Verdict::new(
        9,
        "point-vortex translation",
        pass,
        format!(
            "W* = {w}, endpoint deviation {deviation:.3e}, distance drift {drift:.3e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
    .emit();
}

#[test]
fn criterion_10_determinism() {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut outputs = Vec::new();
    for threads in [1, 2, max] {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "sqg-sheets",
            "continue",
            "--eps-max",
            "0.1",
            "--eps-step",
            "0.01",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ];
        let cfg = parse_config(args).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&cfg, &mut Vec::new())).unwrap();
        outputs.push((threads, fs::read(dir.path().join("records.json")).unwrap()));
    }
    let same = outputs.windows(2).all(|w| w[0].1 == w[1].1);
    let sizes: Vec<_> = outputs.iter().map(|(t, b)| format!("{t} threads: {} bytes", b.len())).collect();
    Verdict::new(10, "determinism", same, format!("{}; identical: {same}", sizes.join(", "))).emit();
}
