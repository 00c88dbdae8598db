use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Result};
use num_traits::Zero;
use relu_pwl::network::{extract_pwl, from_hinge, from_pwl_2layer, pieces_upper_bound, sawtooth_net, size_lower_bound};
use relu_pwl::pwl::{sawtooth, PWL_FORMAT};
use relu_pwl::rational::{format_rational, int, to_f64};
use relu_pwl::regions::{analyze_pieces, BoundingBox, EnumerateOptions};
use relu_pwl::trainer::{train_global, train_global_1d, train_global_1d_units, TrainOptions};
use relu_pwl::zonotope::{
    family_pieces_power_formula, family_pieces_sum_formula, support_net, vertex_formula_half, zonotope_family_net,
    ZONOTOPE_FORMAT,
};
use relu_pwl::network::{HINGE_FORMAT, NETWORK_FORMAT};
use relu_pwl::{random, Error, HingeForm, PwlFunction1D, Rational, ReluNetwork, SawtoothParams, Zonotope, ZonotopeFamilyParams};

use crate::io::{emit, format_of, read_dataset, read_text, write_file};
use crate::{BoxArgs, BuildArgs, Cli, Command, CountArgs, Emit, GenerateKind, Method, SampleArgs, TrainArgs, VerifyArgs};

/// A failed check reported by `verify`.
#[derive(Debug)]
pub struct Violation(pub usize);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for Violation {}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate { kind } => generate(kind, cli.seed, out),
        Command::Build(args) => build(args, out),
        Command::Count(args) => count(args, out),
        Command::Train(args) => train(args, out),
        Command::Verify(args) => verify(args, out),
        Command::Sample(args) => sample(args, out),
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::Invalid(msg.into()).into()
}

fn generate(kind: &GenerateKind, seed: u64, out: Option<&Path>) -> Result<()> {
    let mut rng = random::seeded(seed);
    match kind {
        GenerateKind::Sawtooth { w, k, m, emit: what } => {
            let params = SawtoothParams::uniform(*w, *k, m.clone())?;
            match what {
                Emit::Net => {
                    let net = sawtooth_net(&params)?;
                    eprintln!(
                        "sawtooth w={w} k={k} M={}: depth {} size {}, predicted pieces w^k = {}",
                        show_rational(m),
                        net.depth(),
                        net.size(),
                        params.predicted_pieces()
                    );
                    emit(out, &net.to_json_string())
                }
                Emit::Pwl => {
                    let f = sawtooth(&params)?;
                    eprintln!(
                        "sawtooth w={w} k={k}: {} pieces in [0, M], predicted w^k = {}",
                        f.pieces_in(&Rational::zero(), m),
                        params.predicted_pieces()
                    );
                    emit(out, &f.to_json_string())
                }
            }
        }
        GenerateKind::ZonotopeFamily { n, m, w, k, height, generators } => {
            let z = match generators {
                Some(path) => {
                    let z = Zonotope::from_json_str(&read_text(path)?)?;
                    ensure!(
                        z.dim() == *n && z.num_generators() == *m,
                        invalid(format!(
                            "generator file has n={} m={}, flags say n={n} m={m}",
                            z.dim(),
                            z.num_generators()
                        ))
                    );
                    z
                }
                None => {
                    if *n == 0 || *m == 0 {
                        return Err(invalid("zonotope family needs n >= 1 and m >= 1"));
                    }
                    random::zonotope(&mut rng, *n, *m)
                }
            };
            let params = ZonotopeFamilyParams::new(z, SawtoothParams::uniform(*w, *k, height.clone())?)?;
            let net = zonotope_family_net(&params)?;
            eprintln!("zonotope family n={n} m={m} w={w} k={k}: depth {} size {}", net.depth(), net.size());
            eprintln!("  expected depth k+2 = {}, size 2m+wk = {}", k + 2, 2 * m + w * k);
            eprintln!("  (m-1)^(n-1) w^k = {}", family_pieces_power_formula(*n, *m, *w, *k));
            eprintln!("  sum_i C(m-1,i) w^k = {}", family_pieces_sum_formula(*n, *m, *w, *k));
            eprintln!("  2 sum_i C(m-1,i) w^k = {}", family_pieces_sum_formula(*n, *m, *w, *k) * 2u32);
            emit(out, &net.to_json_string())
        }
        GenerateKind::RandomPwl { pieces } => {
            if *pieces == 0 {
                return Err(invalid("--pieces must be at least 1"));
            }
            emit(out, &random::pwl(&mut rng, *pieces).to_json_string())
        }
        GenerateKind::RandomZonotope { n, m } => {
            if *n == 0 || *m == 0 {
                return Err(invalid("random zonotope needs n >= 1 and m >= 1"));
            }
            emit(out, &random::zonotope(&mut rng, *n, *m).to_json_string())
        }
    }
}

fn build(args: &BuildArgs, out: Option<&Path>) -> Result<()> {
    let text = read_text(&args.input)?;
    let format = format_of(&text)?;
    let net = match format.as_str() {
        f if f == PWL_FORMAT => from_pwl_2layer(&PwlFunction1D::from_json_str(&text)?),
        f if f == HINGE_FORMAT => from_hinge(&HingeForm::from_json_str(&text)?)?,
        f if f == ZONOTOPE_FORMAT => support_net(&Zonotope::from_json_str(&text)?),
        f if f == NETWORK_FORMAT => ReluNetwork::from_json_str(&text)?,
        other => return Err(Error::Parse(format!("cannot build a network from format {other:?}")).into()),
    };
    eprintln!("built from {format}: input_dim {} depth {} size {}", net.input_dim(), net.depth(), net.size());
    emit(out, &net.to_json_string())
}

fn load_net(path: &Path) -> Result<ReluNetwork> {
    let net = ReluNetwork::from_json_str(&read_text(path)?)?;
    ensure!(net.output_dim() == 1, invalid(format!("expected a scalar-output network, got output dimension {}", net.output_dim())));
    Ok(net)
}

fn bounding_box(n: usize, b: &BoxArgs) -> Result<BoundingBox> {
    let half = int(relu_pwl::regions::DEFAULT_BOX_HALF_WIDTH);
    let lo = b.lo.clone().unwrap_or_else(|| -half.clone());
    let hi = b.hi.clone().unwrap_or(half);
    Ok(BoundingBox::cube(n, lo, hi)?)
}

/// `p/q`, or `p` for integers.
fn show_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format_rational(q)
    }
}

fn describe_box(b: &BoundingBox) -> String {
    format!("[{}, {}]^{}", show_rational(&b.lo[0]), show_rational(&b.hi[0]), b.dim())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "MATCH"
    } else {
        "MISMATCH"
    }
}

fn count(args: &CountArgs, out: Option<&Path>) -> Result<()> {
    let net = load_net(&args.net)?;
    let n = net.input_dim();
    let bbox = bounding_box(n, &args.bounds)?;
    let opts = EnumerateOptions { bounding_box: Some(bbox.clone()), cell_budget: args.budget };
    let start = Instant::now();
    let analysis = analyze_pieces(&net, &opts)?;
    let wall_ms = start.elapsed().as_millis();
    let pieces = analysis.pieces;

    let mut report = String::new();
    writeln!(report, "network: input_dim {n} depth {} size {} widths {:?}", net.depth(), net.size(), net.widths())?;
    writeln!(report, "box: {}", describe_box(&bbox))?;
    writeln!(report, "cells: {}", analysis.cells.len())?;
    writeln!(report, "merged_pieces: {pieces}")?;
    if n == 1 {
        let f = extract_pwl(&net)?;
        let bound = pieces_upper_bound(&net.widths());
        writeln!(report, "extract_pwl_pieces: {}", f.pieces_in(&bbox.lo[0], &bbox.hi[0]))?;
        writeln!(
            report,
            "piece bound 2^(k-1) (w1+1) w2..wk: {bound} ({})",
            if (pieces as u128) <= bound { "within" } else { "EXCEEDED" }
        )?;
    } else {
        writeln!(report, "piece bound 2^(k-1) (w1+1) w2..wk: {} (stated for scalar inputs)", pieces_upper_bound(&net.widths()))?;
    }
    if let Some(wk) = &args.sawtooth {
        let [w, k] = wk.0[..] else {
            return Err(invalid("--sawtooth expects W,K"));
        };
        let predicted = (w as u128).pow(k as u32);
        writeln!(report, "sawtooth w^k: {predicted} {}", verdict(pieces as u128 == predicted))?;
    }
    if let Some(p) = &args.zonotope_family {
        let [zn, zm, w, k] = p.0[..] else {
            return Err(invalid("--zonotope-family expects N,M,W,K"));
        };
        if zn == 0 || zm == 0 {
            return Err(invalid("--zonotope-family needs N >= 1 and M >= 1"));
        }
        let power = family_pieces_power_formula(zn, zm, w, k);
        let sum = family_pieces_sum_formula(zn, zm, w, k);
        let classical = &sum * 2u32;
        let b = num_bigint::BigUint::from(pieces);
        writeln!(report, "formula (m-1)^(n-1) w^k: {power} {}", verdict(b == power))?;
        writeln!(report, "formula sum_i C(m-1,i) w^k: {sum} {}", verdict(b == sum))?;
        writeln!(report, "formula 2 sum_i C(m-1,i) w^k: {classical} {}", verdict(b == classical))?;
        writeln!(report, "vertex count sum_i C(m-1,i): {}", vertex_formula_half(zn, zm))?;
    }
    emit(out, &report)?;

    if let Some(path) = &args.cells {
        let mut lines = String::new();
        for cell in &analysis.cells {
            lines.push_str(&serde_json::to_string(&cell.to_json())?);
            lines.push('\n');
        }
        write_file(path, &lines)?;
    }
    if let Some(path) = &args.summary {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cells", "merged_pieces", "wall_ms"])?;
        let ms = if args.timing { wall_ms.to_string() } else { String::new() };
        w.write_record([analysis.cells.len().to_string(), pieces.to_string(), ms])?;
        write_file(path, &String::from_utf8(w.into_inner()?)?)?;
    }
    Ok(())
}

fn train(args: &TrainArgs, out: Option<&Path>) -> Result<()> {
    let data = read_dataset(&args.data)?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(invalid("--tol must be positive and finite"));
    }
    let opts = TrainOptions { tol: args.tol, budget: args.budget, verify: args.verify };
    let method = match args.method {
        Method::Auto if data.dim() == 1 => Method::Global1d,
        Method::Auto => Method::Global,
        m => m,
    };
    let result = match method {
        Method::Global1d => train_global_1d(&data, args.width, args.loss, &opts)?,
        Method::Global1dUnits => train_global_1d_units(&data, args.width, args.loss, &opts)?,
        _ => train_global(&data, args.width, args.loss, &opts)?,
    };
    let c = &result.certificate;
    eprintln!("method {} width {} loss {} ({})", result.method, result.width, result.loss, result.loss_kind);
    eprintln!(
        "certificate: {} sign vectors x {} choices per unit = {} subproblems; solved {} pruned {} failed {}",
        c.sign_vectors, c.choices, c.grid, c.solved, c.pruned, c.failures
    );
    if c.failures > 0 {
        eprintln!("warning: {} subproblems did not converge", c.failures);
    }
    let mut json = result.to_json_string();
    json.push('\n');
    emit(out, &json)?;
    if let Some(path) = &args.net_out {
        write_file(path, &result.network.to_json_string())?;
    }
    Ok(())
}

fn verify(args: &VerifyArgs, out: Option<&Path>) -> Result<()> {
    let net = load_net(&args.net)?;
    let n = net.input_dim();
    let bbox = bounding_box(n, &args.bounds)?;
    let opts = EnumerateOptions { bounding_box: Some(bbox.clone()), cell_budget: args.budget };
    let mut report = String::new();
    let mut failed = 0;
    let mut check = |report: &mut String, name: &str, ok: bool, detail: String| -> Result<()> {
        if !ok {
            failed += 1;
        }
        writeln!(report, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" })?;
        Ok(())
    };

    let back = ReluNetwork::from_json_str(&net.to_json_string())?;
    check(&mut report, "json_round_trip", back == net, "relu-net-v1".into())?;

    let analysis = analyze_pieces(&net, &opts)?;
    let mut bad_cells = 0;
    for cell in &analysis.cells {
        if net.eval(&cell.interior)? != cell.affine.apply(&cell.interior)[0] {
            bad_cells += 1;
        }
    }
    check(
        &mut report,
        "cell_functionals",
        bad_cells == 0,
        format!("{} cells in {}, {bad_cells} disagree", analysis.cells.len(), describe_box(&bbox)),
    )?;

    if n == 1 {
        let f = extract_pwl(&net)?;
        let p = f.pieces();
        let bound = pieces_upper_bound(&net.widths());
        check(&mut report, "piece_bound", p as u128 <= bound, format!("{p} pieces <= 2^(k-1) (w1+1) w2..wk = {bound}"))?;
        let in_box = f.pieces_in(&bbox.lo[0], &bbox.hi[0]);
        check(
            &mut report,
            "regions_vs_extract",
            analysis.pieces == in_box,
            format!("merged cells {} vs pieces in box {in_box}", analysis.pieces),
        )?;
        let k = net.depth() - 1;
        if k >= 1 {
            let lower = size_lower_bound(p as u64, k as u32);
            check(
                &mut report,
                "size_lower_bound",
                net.size() as f64 >= lower - 1e-9,
                format!("size {} >= k p^(1/k) / 2 - 1 = {lower:.6}", net.size()),
            )?;
        }
        let rebuilt = from_pwl_2layer(&f);
        let flat_end = f.left_slope().is_zero() || f.right_slope().is_zero();
        let cap = if flat_end && p > 1 { p - 1 } else { p.max(2) };
        check(
            &mut report,
            "two_layer_size",
            rebuilt.size() <= cap,
            format!("2-layer rebuild has size {} (cap {cap})", rebuilt.size()),
        )?;
        let same = extract_pwl(&rebuilt)? == f;
        check(&mut report, "two_layer_round_trip", same, "extract(rebuild(f)) == f".into())?;
    }
    emit(out, &report)?;
    if failed > 0 {
        bail!(Violation(failed));
    }
    Ok(())
}

fn grid(lo: &Rational, hi: &Rational, points: usize) -> Vec<Rational> {
    if points == 1 {
        return vec![lo.clone()];
    }
    let steps = int(points as i64 - 1);
    (0..points).map(|i| lo + (hi - lo) * int(i as i64) / &steps).collect()
}

type Evaluator = dyn Fn(&[Rational]) -> relu_pwl::Result<Rational>;

fn sample(args: &SampleArgs, out: Option<&Path>) -> Result<()> {
    if args.points == 0 {
        return Err(invalid("--points must be at least 1"));
    }
    if args.lo > args.hi {
        return Err(invalid("--lo must not exceed --hi"));
    }
    let text = read_text(&args.input)?;
    let format = format_of(&text)?;
    let (n, f): (usize, Box<Evaluator>) = match format.as_str() {
        f if f == NETWORK_FORMAT => {
            let net = ReluNetwork::from_json_str(&text)?;
            ensure!(net.output_dim() == 1, invalid("sampling needs a scalar-output network"));
            (net.input_dim(), Box::new(move |x| net.eval(x)))
        }
        f if f == ZONOTOPE_FORMAT => {
            let z = Zonotope::from_json_str(&text)?;
            (z.dim(), Box::new(move |r| z.support(r)))
        }
        other => return Err(Error::Parse(format!("cannot sample format {other:?}")).into()),
    };
    let show = |q: &Rational| if args.exact { show_rational(q) } else { to_f64(q).to_string() };
    let axis = grid(&args.lo, &args.hi, args.points);
    let mut w = csv::Writer::from_writer(Vec::new());
    match n {
        1 => {
            w.write_record(["x", "f"])?;
            for x in &axis {
                w.write_record([show(x), show(&f(std::slice::from_ref(x))?)])?;
            }
        }
        2 => {
            w.write_record(["x1", "x2", "f"])?;
            for x1 in &axis {
                for x2 in &axis {
                    let p = [x1.clone(), x2.clone()];
                    w.write_record([show(x1), show(x2), show(&f(&p)?)])?;
                }
            }
        }
        other => return Err(invalid(format!("grid sampling supports input dimension 1 or 2, got {other}"))),
    }
    emit(out, &String::from_utf8(w.into_inner()?)?)
}
