use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::rc::Rc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, Format};
use super::report::{CheckRecord, EnvironmentStamp, RunReport, Timing};
use super::svg::{seminorm_plot, Series};
use crate::acs::{
    involutivity_check, j_from_a, lift, nijenhuis, polydisc_points, write_defect_csv, AlmostComplexStructure2D,
    DefectRow, FrameChoice, PolyVectorField, bracket_defect,
};
use crate::beltrami::{
    decompose, mu_from_coefficient, solve_beltrami, Chart, SolverOptions, TRUSTED_RADIUS,
};
use crate::coeff::{verify_properties, CounterexampleCoefficient};
use crate::error::{Error, Result};
use crate::field::{differentiate, sample, ComplexField, Direction, DiskGrid, ProbeSet};
use crate::regularity::{
    fit_sqrt_log, holder_seminorm, lemma_blowup_experiment, lipschitz_quotient, zygmund_seminorm, GridField, LogFit,
    SeminormTable,
};
use crate::transforms::{probe_transform, QuadSpec, TransformEngine, TransformKind, UnitDiskIndicator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CoeffCheck,
    TransformSelftest,
    SolveChart,
    LemmaBlowup,
    ChartRegularity,
    NijenhuisCheck,
    All,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::CoeffCheck,
        Command::TransformSelftest,
        Command::SolveChart,
        Command::LemmaBlowup,
        Command::ChartRegularity,
        Command::NijenhuisCheck,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CoeffCheck => "coeff-check",
            Command::TransformSelftest => "transform-selftest",
            Command::SolveChart => "solve-chart",
            Command::LemmaBlowup => "lemma-blowup",
            Command::ChartRegularity => "chart-regularity",
            Command::NijenhuisCheck => "nijenhuis-check",
            Command::All => "all",
        }
    }

    fn stages(self) -> Vec<Command> {
        match self {
            Command::All => Command::ALL[..6].to_vec(),
            c => vec![c],
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub timing: Timing,
}

/// Per-`k` chart measurements are gated for `k = 1` only.
const GATED_CHART_K: u32 = 1;
/// Smallest dyadic exponent of the chart regularity window; `2^-3` is the
/// plateau radius of the cutoff.
const CHART_J_MIN: u32 = 3;
const HOLDER_ALPHA: f64 = 0.75;
const BOUNDED_GROWTH: f64 = 3.0;
const SURROGATE_TOL: f64 = 0.05;

/// Runs every stage of `command`, writing artifacts to `cfg.out_dir`. Stage
/// failures become failed checks; only I/O and configuration problems are
/// returned as errors.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut ctx = Context {
        cfg,
        report: RunReport::new(
            command.name(),
            EnvironmentStamp {
                version: env!("CARGO_PKG_VERSION").into(),
                seed: cfg.probes.seed,
                grid_n: cfg.grid_n,
                pad_half_width: cfg.pad_half_width,
                k: cfg.k,
            },
        ),
        timing: Timing::default(),
        chart: None,
    };
    for stage in command.stages() {
        let start = Instant::now();
        match stage {
            Command::CoeffCheck => ctx.coeff_check()?,
            Command::TransformSelftest => ctx.transform_selftest()?,
            Command::SolveChart => ctx.solve_chart()?,
            Command::LemmaBlowup => ctx.lemma_blowup()?,
            Command::ChartRegularity => ctx.chart_regularity()?,
            Command::NijenhuisCheck => ctx.nijenhuis_check()?,
            Command::All => unreachable!("expanded by stages()"),
        }
        ctx.timing.record(stage.name(), start.elapsed());
    }
    let Context { report, timing, .. } = ctx;
    if cfg.wants(Format::Json) {
        write_json(&cfg.out_dir.join("report.json"), &report)?;
        write_json(&cfg.out_dir.join("timing.json"), &timing)?;
    }
    Ok(RunOutcome { report, timing })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    report: RunReport,
    timing: Timing,
    chart: Option<std::result::Result<Rc<Chart>, String>>,
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

impl Context<'_> {
    fn grid(&self, n: usize) -> Result<DiskGrid> {
        DiskGrid::new(n, self.cfg.pad_half_width)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn csv(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        if !self.cfg.wants(Format::Csv) {
            return Ok(());
        }
        let mut out = BufWriter::new(File::create(self.path(name))?);
        body(&mut out)?;
        out.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if self.cfg.wants(Format::Json) {
            write_json(&self.path(name), value)?;
        }
        Ok(())
    }

    fn svg(&self, name: &str, body: impl FnOnce() -> String) -> Result<()> {
        if self.cfg.wants(Format::Svg) {
            std::fs::write(self.path(name), body())?;
        }
        Ok(())
    }

    fn push(&mut self, check: CheckRecord) {
        self.report.push(check);
    }

    fn coeff_check(&mut self) -> Result<()> {
        let grid = self.grid(self.cfg.grid_n)?;
        let probes = self.cfg.probe_set()?;
        let mut reports = Vec::new();
        for k in 1..=3 {
            let coeff = CounterexampleCoefficient::new(k)?;
            let rep = verify_properties(&coeff, &grid, &probes);
            for c in &rep.checks {
                self.push(CheckRecord::holds(format!("coeff k={k}: {}", c.name), c.measured, c.pass).with_detail(&c.detail));
            }
            self.push(
                CheckRecord::at_most(format!("coeff k={k}: sup |a| on grid"), rep.sup_abs_a, 0.004)
                    .with_detail("well below delta_0 = 0.1"),
            );
            reports.push(rep);
        }
        self.json("coeff_properties.json", &reports)
    }

    fn transform_selftest(&mut self) -> Result<()> {
        let n = self.cfg.grid_n;
        let mut rows = Vec::new();
        for m in [n / 2, n] {
            let err = right_inverse_error(&self.grid(m)?)?;
            rows.push((m, err));
        }
        let order = (rows[0].1 / rows[1].1).log2();
        self.push(
            CheckRecord::at_most("transform: right inverse of DzInv on a bump", rows[1].1, 1e-3)
                .with_detail("sup |d_z DzInv phi - phi| / sup |phi| on |z| <= 0.9")
                .gate_from_n(n, 1024),
        );
        self.push(
            CheckRecord::at_least("transform: right inverse observed order", order, 2.0)
                .with_detail(format!("errors at n = {} and n = {}", rows[0].0, rows[1].0)),
        );

        let grid = self.grid(n)?;
        let engine = TransformEngine::shared(&grid);
        let indicator = sample(&grid, |z| Complex64::new(if z.norm() < 1.0 { 1.0 } else { 0.0 }, 0.0))?;
        let zbar = engine.apply(TransformKind::DzbarInv, &indicator)?;
        let err = zbar.map_with_node(|z, v| v - z.conj()).sup_norm_within(TRUSTED_RADIUS);
        self.push(CheckRecord::at_most("transform: DzbarInv(1_disk) = conj(z)", err, 2e-3).gate_from_n(n, 1024));
        let zed = engine.apply(TransformKind::DzInv, &indicator)?;
        let err = zed.map_with_node(|z, v| v - z).sup_norm_within(TRUSTED_RADIUS);
        self.push(CheckRecord::at_most("transform: DzInv(1_disk) = z", err, 2e-3).gate_from_n(n, 1024));
        let s = engine.apply(TransformKind::Beurling, &indicator)?;
        self.push(
            CheckRecord::at_most("transform: Beurling(1_disk) = 0", s.sup_norm_within(TRUSTED_RADIUS), 5e-3)
                .gate_from_n(n, 1024),
        );

        let phi = sample(&grid, mean_zero_bump)?;
        let s = engine.apply(TransformKind::Beurling, &phi)?;
        let ratio = l2_within(&s, 1.5) / l2_within(&phi, 1.5);
        self.push(
            CheckRecord::relative("transform: Beurling L2 isometry", ratio, 1.0, 0.02)
                .with_detail("norm ratio on |z| <= 1.5 for a mean-zero bump"),
        );

        let z = Complex64::new(0.01, 0.0);
        let v = probe_transform(TransformKind::DzInv, &UnitDiskIndicator, z, &QuadSpec::with_rel_tol(1e-8))?;
        self.push(CheckRecord::at_most("transform: probe DzInv(1_disk) at z = 0.01", (v - z).norm(), 1e-5));

        self.csv("transform_selftest.csv", |out| {
            writeln!(out, "n,right_inverse_error")?;
            for (m, e) in &rows {
                writeln!(out, "{m},{e:e}")?;
            }
            Ok(())
        })
    }

    fn ensure_chart(&mut self) -> Result<()> {
        if self.chart.is_none() {
            let grid = self.grid(self.cfg.grid_n)?;
            let coeff = CounterexampleCoefficient::new(self.cfg.k)?;
            let opts = SolverOptions {
                tol: self.cfg.tol,
                max_iter: self.cfg.max_iter,
            };
            let chart = mu_from_coefficient(&grid, &coeff).and_then(|mu| solve_beltrami(&mu, &opts));
            self.chart = Some(chart.map(Rc::new).map_err(|e| e.to_string()));
        }
        Ok(())
    }

    fn solve_chart(&mut self) -> Result<()> {
        let grid = self.grid(self.cfg.grid_n)?;
        let opts = SolverOptions {
            tol: self.cfg.tol,
            max_iter: self.cfg.max_iter,
        };
        match solve_beltrami(&ComplexField::zeros(grid), &opts) {
            Ok(id) => {
                let dev = id
                    .w
                    .map_with_node(|z, v| v - z)
                    .sup_norm_within(TRUSTED_RADIUS)
                    .max(id.f.sup_norm_within(TRUSTED_RADIUS));
                self.push(
                    CheckRecord::holds("chart: identity for mu = 0", dev, dev <= self.cfg.tol && id.iterations == 1)
                        .with_detail(format!("{} iteration(s); measured sup |w - z| + |f|", id.iterations)),
                );
            }
            Err(e) => self.push(CheckRecord::error("chart: identity for mu = 0", &e)),
        }

        self.ensure_chart()?;
        let chart = match self.chart.as_ref().expect("solved above") {
            Ok(c) => c.clone(),
            Err(msg) => {
                self.push(CheckRecord::error("chart: Neumann solve", &Error::Residual(msg.clone())));
                return Ok(());
            }
        };
        let sup_mu = chart.mu.sup_norm();
        let ratio = chart
            .increments
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max);
        self.push(CheckRecord::at_most("chart: Neumann iterations", chart.iterations as f64, 8.0));
        self.push(CheckRecord::at_most("chart: increment decay ratio", ratio, 0.01));
        self.push(
            CheckRecord::at_most("chart: increment ratio against 1.5 sup|mu|", ratio, 1.5 * sup_mu)
                .with_detail(format!("sup |mu| = {sup_mu:e}")),
        );
        let last = chart.increments.last().copied().unwrap_or(0.0);
        self.push(CheckRecord::at_most("chart: final increment", last, self.cfg.tol));
        self.push(
            CheckRecord::at_most("chart: residual |w_zbar + abar w_z| on |z| <= 0.9", chart.residual, 5e-3)
                .gate_from_n(self.cfg.grid_n, 2048),
        );
        self.push(
            CheckRecord::report(
                "chart: log equation relative residual",
                chart.log.eq2_residual / chart.log.eq2_scale,
            )
            .with_detail("sup |f_zbar + abar f_z + abar_z| / sup |abar_z| on 1/32 <= |z| <= 1/2"),
        );
        self.push(CheckRecord::report(
            "chart: log continued along rows",
            if chart.log.path_continued { 1.0 } else { 0.0 },
        ));

        self.json("chart_summary.json", &chart.summary())?;
        self.csv("chart_increments.csv", |out| {
            writeln!(out, "iteration,increment")?;
            for (i, v) in chart.increments.iter().enumerate() {
                writeln!(out, "{},{v:e}", i + 1)?;
            }
            Ok(())
        })?;
        self.csv("chart_profile.csv", |out| {
            writeln!(out, "x,w_re,w_im,f_re,f_im")?;
            let g = chart.w.grid();
            let j = g.n() / 2;
            for i in g.n() / 2..g.n() {
                let x = g.node(i, j).re;
                if x > 1.0 {
                    break;
                }
                let (w, f) = (chart.w.at(i, j), chart.f.at(i, j));
                writeln!(out, "{x},{:e},{:e},{:e},{:e}", w.re, w.im, f.re, f.im)?;
            }
            Ok(())
        })
    }

    fn lemma_blowup(&mut self) -> Result<()> {
        let k = self.cfg.k;
        let probes = self.cfg.probe_set()?;
        let name = |s: &str| format!("lemma k={k}: {s}");
        let res = match lemma_blowup_experiment(k, &probes, &QuadSpec::with_rel_tol(self.cfg.quad_tol)) {
            Ok(r) => r,
            Err(e) => {
                self.push(CheckRecord::error(name("experiment"), &e));
                return Ok(());
            }
        };
        self.push(
            CheckRecord::relative(name("slope against sqrt(-log r)"), res.transform_fit.slope, res.target, self.cfg.fit_tol)
                .with_detail(format!("window 2^-{}..2^-{}", probes.j_min(), probes.j_max())),
        );
        self.push(CheckRecord::at_most(name("surrogate slope difference"), res.slope_difference, SURROGATE_TOL));
        self.push(CheckRecord::holds(
            name("nondecreasing as r decreases"),
            res.transform.growth_over_coarsest(),
            res.transform.is_nondecreasing(1, 0.02),
        ));
        self.push(CheckRecord::report(name("fit R^2"), res.transform_fit.r2));

        self.csv(&format!("lemma_k{k}_transform.csv"), |out| res.transform.write_csv(out))?;
        self.csv(&format!("lemma_k{k}_surrogate.csv"), |out| res.surrogate.write_csv(out))?;
        #[derive(Serialize)]
        struct LemmaFits {
            transform: crate::regularity::FitRecord,
            surrogate: crate::regularity::FitRecord,
            slope_difference: f64,
        }
        let tol = self.cfg.fit_tol;
        self.json(
            &format!("lemma_k{k}_fit.json"),
            &LemmaFits {
                transform: res.transform_fit.record(Some(res.target), Some(tol)),
                surrogate: res.surrogate_fit.record(Some(res.target), Some(tol)),
                slope_difference: res.slope_difference,
            },
        )?;
        self.svg(&format!("lemma_k{k}.svg"), || {
            seminorm_plot(
                &format!("max_theta |d_zbar^{k} u|, k = {k}"),
                &[
                    Series {
                        label: "transform",
                        table: &res.transform,
                        fit: Some(&res.transform_fit),
                        color: "steelblue",
                    },
                    Series {
                        label: "surrogate",
                        table: &res.surrogate,
                        fit: Some(&res.surrogate_fit),
                        color: "darkorange",
                    },
                ],
                Some(res.target),
            )
        })
    }

    fn chart_regularity(&mut self) -> Result<()> {
        let k = self.cfg.k;
        self.ensure_chart()?;
        let chart = match self.chart.as_ref().expect("solved above") {
            Ok(c) => c.clone(),
            Err(msg) => {
                self.push(CheckRecord::error("regularity: chart solve", &Error::Residual(msg.clone())));
                return Ok(());
            }
        };
        let gate = |c: CheckRecord| {
            if k == GATED_CHART_K {
                c
            } else {
                c.ungated(format!("gated for k = {GATED_CHART_K} only"))
            }
        };
        let coeff = CounterexampleCoefficient::new(k)?;
        let dec = match decompose(&chart, &coeff) {
            Ok(d) => d,
            Err(e) => {
                self.push(CheckRecord::error("decomposition: g and h equations", &e));
                return Ok(());
            }
        };
        let d = &dec.diagnostics;
        let n = self.cfg.grid_n;
        self.push(
            CheckRecord::at_most("decomposition: anti-holomorphic term d_z (L2)", d.antiholo_dz_l2_rel, 1e-2)
                .with_detail("|d_z(g - DzbarInv g_zbar)|_2 / |g|_2 on |z| <= 0.9")
                .gate_from_n(n, 2048),
        );
        self.push(CheckRecord::report(
            "decomposition: anti-holomorphic term d_z (sup)",
            d.antiholo_dz / d.g_sup,
        ));
        self.push(CheckRecord::at_most("decomposition: four terms sum to g", d.sum_residual / d.g_sup, 1e-2));
        self.push(CheckRecord::at_most(
            "decomposition: cutoff term vanishes off the transition band",
            d.cutoff_outside_transition,
            1e-14,
        ));
        self.push(CheckRecord::report("decomposition: g equation relative residual", d.eq3_residual / d.eq3_scale));
        self.push(CheckRecord::report("decomposition: h equation relative residual", d.eq4_residual / d.eq4_scale));
        self.json("decomposition.json", d)?;

        let grid = *chart.f.grid();
        let j_grid = (-grid.spacing().log2()).floor() as u32 + 1;
        let j_max = self.cfg.probes.j_max.min(j_grid);
        let probes = match ProbeSet::new(CHART_J_MIN, j_max, self.cfg.probes.angles) {
            Ok(p) => p,
            Err(e) => {
                self.push(CheckRecord::error("regularity: probe window", &e));
                return Ok(());
            }
        };
        let spec = self.cfg.pair_spec();
        let m = (k - 1) as usize;
        let fit_or_none = |t: &SeminormTable| fit_sqrt_log(t).ok();

        let f = GridField::new(&chart.f, &[m])?;
        let lip = lipschitz_quotient(&f, m, &probes, &spec)?;
        let lip_fit = fit_or_none(&lip);
        self.push(gate(CheckRecord::at_least("regularity: f Lipschitz table scales", lip.len() as f64, 6.0)));
        self.push(gate(CheckRecord::holds(
            "regularity: f Lipschitz quotient nondecreasing",
            lip.growth_over_coarsest(),
            lip.is_nondecreasing(1, 0.02),
        )));
        match lip_fit {
            Some(fit) => {
                self.push(gate(CheckRecord::holds(
                    "regularity: f sqrt-log slope positive",
                    fit.slope,
                    fit.slope > 0.0,
                )));
                self.push(gate(CheckRecord::at_least("regularity: f sqrt-log fit R^2", fit.r2, 0.9)));
                self.push(CheckRecord::report("regularity: f sqrt-log slope c", fit.slope));
            }
            None => self.push(gate(CheckRecord::error(
                "regularity: f sqrt-log fit",
                &Error::TooFewRows(lip.len()),
            ))),
        }
        let zyg = zygmund_seminorm(&f, m, &probes, &spec)?;
        self.push(CheckRecord::report(
            "regularity: f Zygmund table growth over coarsest",
            zyg.growth_over_coarsest(),
        ));

        let h = GridField::new(&dec.h, &[k as usize])?;
        let hh = holder_seminorm(&h, k as usize, HOLDER_ALPHA, &probes, &spec)?;
        self.push(gate(CheckRecord::at_most(
            "regularity: h Hoelder-0.75 growth over coarsest",
            hh.growth_over_coarsest(),
            BOUNDED_GROWTH,
        )));
        let g_z = differentiate(&dec.g, Direction::Z, 1)?;
        let abar_gz = chart.mu.mul(&g_z).scale(Complex64::new(-1.0, 0.0));
        let ag = GridField::new(&abar_gz, &[m])?;
        let agh = holder_seminorm(&ag, m, HOLDER_ALPHA, &probes, &spec)?;
        self.push(gate(CheckRecord::at_most(
            "regularity: abar g_z Hoelder-0.75 growth over coarsest",
            agh.growth_over_coarsest(),
            BOUNDED_GROWTH,
        )));

        self.csv("chart_lipschitz_f.csv", |out| lip.write_csv(out))?;
        self.csv("chart_zygmund_f.csv", |out| zyg.write_csv(out))?;
        self.csv("chart_holder_h.csv", |out| hh.write_csv(out))?;
        self.csv("chart_holder_abar_gz.csv", |out| agh.write_csv(out))?;
        self.json(
            "chart_lipschitz_fit.json",
            &lip_fit.map(|f: LogFit| f.record(None, None)),
        )?;
        self.svg("chart_lipschitz_f.svg", || {
            seminorm_plot(
                &format!("Lipschitz quotient of f, order {m}"),
                &[Series {
                    label: "f",
                    table: &lip,
                    fit: lip_fit.as_ref(),
                    color: "steelblue",
                }],
                Some(crate::regularity::lemma_target(k)),
            )
        })
    }

    fn nijenhuis_check(&mut self) -> Result<()> {
        let seed = self.cfg.probes.seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let a = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..std::f64::consts::TAU));
            let j = j_from_a(a)?;
            let err = (j * j + nalgebra::Matrix2::identity()).abs().max() / j.abs().max().powi(2).max(1.0);
            worst = worst.max(err);
        }
        self.push(CheckRecord::at_most("geometry: J^2 = -I at 10^4 points", worst, 1e-12).with_detail("relative to |J|^2"));

        let coeff = CounterexampleCoefficient::new(self.cfg.k)?;
        let base = AlmostComplexStructure2D::from_coefficient(&coeff);
        let x2 = PolyVectorField::random(2, 2, seed);
        let y2 = PolyVectorField::random(2, 2, seed + 1);
        let mut n2 = 0.0f64;
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.gen_range(0.05..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
            n2 = n2.max(nijenhuis(&base, &x2, &y2, &[z.re, z.im], 1e-2)?.norm());
        }
        self.push(CheckRecord::at_most("geometry: Nijenhuis tensor in dimension 2", n2, 1e-6));

        let lifted = lift(&base, 2)?;
        let x4 = PolyVectorField::random(4, 2, seed + 2);
        let y4 = PolyVectorField::random(4, 2, seed + 3);
        let points: Vec<Vec<f64>> = polydisc_points(2, 200, 0.6, seed)
            .into_iter()
            .filter(|p| p[0].hypot(p[1]) >= 0.05)
            .take(100)
            .collect();
        let mut n4 = 0.0f64;
        for p in points.iter().take(20) {
            n4 = n4.max(nijenhuis(&lifted, &x4, &y4, p, 1e-2)?.norm());
        }
        self.push(CheckRecord::at_most("geometry: Nijenhuis tensor of the n = 2 lift", n4, 1e-6));

        let frame = FrameChoice::generic_default();
        let coarse = involutivity_check(&lifted, &points, 1e-3, frame);
        let fine = involutivity_check(&lifted, &points, 5e-4, frame);
        self.push(
            CheckRecord::at_most("geometry: bracket defect of the n = 2 lift at step 1e-3", coarse, 1e-6)
                .with_detail("generic frame, 100 points"),
        );
        self.push(CheckRecord::at_least("geometry: bracket defect shrink on step halving", coarse / fine, 3.0));
        self.push(CheckRecord::report(
            "geometry: bracket defect with the canonical frame",
            involutivity_check(&lifted, &points, 1e-3, FrameChoice::Canonical),
        ));

        let mut rows = Vec::new();
        for p in &points {
            for step in [1e-3, 5e-4] {
                rows.push(DefectRow {
                    point: p.clone(),
                    step,
                    defect: bracket_defect(&lifted, p, step, frame),
                });
            }
        }
        self.csv("nijenhuis_defect.csv", |out| write_defect_csv(&rows, out))
    }
}

/// Smooth bump of radius 1/2 with a non-radial factor.
pub fn selftest_bump(z: Complex64) -> Complex64 {
    bump_envelope(z) * Complex64::new(1.0 + z.re, 0.3 * z.im)
}

/// Smooth bump of radius 1/2 with vanishing mean.
pub fn mean_zero_bump(z: Complex64) -> Complex64 {
    bump_envelope(z) * Complex64::new(z.re, 0.5 * z.im)
}

fn bump_envelope(z: Complex64) -> f64 {
    let r2 = z.norm_sqr() / 0.25;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// `sup |d_z DzInv phi - phi| / sup |phi|` on `|z| <= 0.9` for [`selftest_bump`].
pub fn right_inverse_error(grid: &DiskGrid) -> Result<f64> {
    let phi = sample(grid, selftest_bump)?;
    let u = TransformEngine::shared(grid).apply(TransformKind::DzInv, &phi)?;
    let back = differentiate(&u, Direction::Z, 1)?;
    Ok(back.sub(&phi).sup_norm_within(TRUSTED_RADIUS) / phi.sup_norm())
}

fn l2_within(u: &ComplexField, radius: f64) -> f64 {
    u.values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| u.grid().node_at(*idx).norm() <= radius)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}
