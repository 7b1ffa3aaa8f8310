use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use lanebias::counterfactual::{d_to_centis, render_text, swap_draw};
use lanebias::meta::{read_summaries, write_summaries};
use lanebias::report::{fit_json, pretty, round_numbers, to_value};
use lanebias::simulate::{monte_carlo, SimConfig};
use lanebias::{
    adjusted_differences, analyze_event, combine, heterogeneity, parse_event, parse_olympic,
    power_plan, predict_range, speculate, split_half, validate_model, EventAnalysis, EventSummary,
    ScanOptions,
};
use serde_json::{json, Value};

use crate::table::{f3, Table};
use crate::{
    Command, FitArgs, Format, McArgs, MetaArgs, Output, PowerArgs, Screening, SpeculateArgs,
    ValidateArgs, ValidateTable,
};

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Fit(a) => emit(&a.output, fit(a)?),
        Command::Meta(a) => emit(&a.output, meta(a)?),
        Command::Speculate(a) => emit(&a.output, speculate_cmd(a)?),
        Command::Validate(a) => emit(&a.output, validate(a)?),
        Command::Power(a) => emit(&a.output, power(a)?),
        Command::Mc(a) => emit(&a.output, mc(a)?),
    }
}

fn emit(out: &Output, body: String) -> Result<()> {
    match &out.out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).context("writing stdout")
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn scan_options(s: &Screening) -> ScanOptions {
    ScanOptions {
        threshold: s.threshold,
        tails: s.tails,
    }
}

fn analyze(path: &Path, s: &Screening) -> Result<EventAnalysis> {
    let ds = parse_event(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    analyze_event(&ds, s.lane_policy, scan_options(s))
        .with_context(|| format!("fitting {}", ds.label()))
}

fn is_event_file(src: &str) -> bool {
    src.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with("#event"))
}

fn join(names: &[String]) -> String {
    if names.is_empty() {
        "none".into()
    } else {
        names.join(", ")
    }
}

fn fit(a: &FitArgs) -> Result<String> {
    let events: Vec<EventAnalysis> = a
        .inputs
        .iter()
        .map(|p| analyze(p, &a.screening))
        .collect::<Result<_>>()?;
    Ok(match a.output.format {
        Format::Json => {
            let rows: Vec<Value> = events
                .iter()
                .map(|e| {
                    json!({
                        "label": e.label,
                        "venue": e.venue,
                        "year": e.year,
                        "usable": e.usable.len(),
                        "removed": e.clean.removed,
                        "initial": fit_json(&e.clean.initial),
                        "fit": fit_json(&e.clean.fit),
                        "screening": to_value(&e.clean.report),
                        "warnings": e.all_warnings(),
                    })
                })
                .collect();
            pretty(&json!({ "events": rows }))
        }
        Format::Csv => {
            let mut out = String::from("label,n,a1,a2,b,d,rho,sigma,kappa,se_d,removed\n");
            for e in &events {
                let f = &e.clean.fit;
                writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                    e.label,
                    f.n,
                    f.a1(),
                    f.a2(),
                    f.b(),
                    f.d(),
                    f.rho,
                    f.sigma_un,
                    f.kappa_un,
                    f.se_d(),
                    e.clean.removed.join(";")
                )?;
            }
            out
        }
        Format::Text => {
            let mut t = Table::new(&[
                "event", "n", "a1", "a2", "b", "d", "rho", "sigma", "kappa", "se(d)",
            ]);
            for e in &events {
                let f = &e.clean.fit;
                t.row(vec![
                    e.label.clone(),
                    f.n.to_string(),
                    f3(f.a1()),
                    f3(f.a2()),
                    f3(f.b()),
                    f3(f.d()),
                    f3(f.rho),
                    f3(f.sigma_un),
                    f3(f.kappa_un),
                    f3(f.se_d()),
                ]);
            }
            let mut out = t.render();
            out.push_str("\noutliers removed\n");
            for e in &events {
                writeln!(out, "  {}: {}", e.label, join(&e.clean.removed))?;
            }
            let warned: Vec<_> = events
                .iter()
                .filter(|e| !e.all_warnings().is_empty())
                .collect();
            if !warned.is_empty() {
                out.push_str("\nwarnings\n");
                for e in warned {
                    for w in e.all_warnings() {
                        writeln!(out, "  {}: {w}", e.label)?;
                    }
                }
            }
            out
        }
    })
}

fn meta(a: &MetaArgs) -> Result<String> {
    let mut summaries: Vec<EventSummary> = Vec::new();
    let mut analyses = Vec::new();
    for p in &a.inputs {
        let src = read(p)?;
        if is_event_file(&src) {
            let e = analyze(p, &a.screening)?;
            summaries.push(e.summary());
            analyses.push(e);
        } else {
            let rows = read_summaries(&src).with_context(|| format!("parsing {}", p.display()))?;
            summaries.extend(rows);
        }
    }
    let m = combine(&summaries)?;
    // one event carries no between-event spread
    let h = if summaries.len() > 1 {
        Some(heterogeneity(&summaries, m.grand_d)?)
    } else {
        None
    };
    let range = predict_range(m.grand_d, m.omega0, a.coverage);
    let split = if a.split_half {
        anyhow::ensure!(
            !analyses.is_empty(),
            "--split-half needs event files, not summaries"
        );
        let pairs: Vec<_> = analyses.iter().map(EventAnalysis::cleaned).collect();
        Some(split_half(&pairs)?)
    } else {
        None
    };
    Ok(match a.output.format {
        Format::Json => {
            let mut v = json!({
                "events": to_value(&summaries),
                "combined": to_value(&m),
                "heterogeneity": h.as_ref().map(to_value),
                "prediction": round_numbers(json!({
                    "coverage": a.coverage,
                    "interval": [range.0, range.1],
                })),
            });
            if let Some(s) = &split {
                v["split_half"] = to_value(s);
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut out = write_summaries(&summaries);
            writeln!(out, "grand average,{:.6},{:.6},", m.grand_d, m.grand_se)?;
            out
        }
        Format::Text => {
            let mut t = Table::new(&["event", "d", "se", "n"]);
            for s in &summaries {
                t.row(vec![
                    s.label.clone(),
                    f3(s.d_hat),
                    f3(s.se),
                    s.n.map(|n| n.to_string()).unwrap_or_default(),
                ]);
            }
            t.row(vec![
                "grand average".into(),
                f3(m.grand_d),
                f3(m.grand_se),
                String::new(),
            ]);
            let mut out = t.render();
            writeln!(
                out,
                "\nz = {:.2}, one-sided p = {:.4}, two-sided p = {:.4}",
                m.z, m.p_one_sided, m.p_two_sided
            )?;
            writeln!(out, "95% interval [{}, {}]", f3(m.ci95.0), f3(m.ci95.1))?;
            if let Some(h) = &h {
                writeln!(
                    out,
                    "omega0 = {} (T = {:.2} on {} events); {:.0}% range for a new event [{}, {}]",
                    f3(m.omega0),
                    h.t,
                    m.k,
                    100.0 * a.coverage,
                    f3(range.0),
                    f3(range.1)
                )?;
            }
            if let Some(s) = &split {
                let mut t =
                    Table::new(&["event", "n best", "d best", "se", "n rest", "d rest", "se"]);
                for e in &s.events {
                    t.row(vec![
                        e.label.clone(),
                        e.n_best.to_string(),
                        f3(e.d_best),
                        f3(e.se_best),
                        e.n_rest.to_string(),
                        f3(e.d_rest),
                        f3(e.se_rest),
                    ]);
                }
                out.push_str("\nsplit half (fastest half against the rest)\n");
                out.push_str(&t.render());
                writeln!(
                    out,
                    "d best - d rest = {} (se {})",
                    f3(s.combined_delta),
                    f3(s.combined_se)
                )?;
                for w in &s.warnings {
                    writeln!(out, "  warning: {w}")?;
                }
            }
            out
        }
    })
}

fn speculate_cmd(a: &SpeculateArgs) -> Result<String> {
    let path = &a.input;
    let list =
        parse_olympic(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if a.swap {
        let swapped = swap_draw(&list, d_to_centis(a.d));
        return Ok(match a.output.format {
            Format::Json => pretty(&to_value(&swapped)),
            Format::Csv | Format::Text => swapped.to_csv(),
        });
    }
    let spec = speculate(&list, a.d);
    Ok(match a.output.format {
        Format::Json => pretty(&json!({
            "real": to_value(&list.ranked()),
            "speculative": to_value(&spec),
        })),
        Format::Csv => spec.to_csv(),
        Format::Text => render_text(&list, &spec),
    })
}

fn validate(a: &ValidateArgs) -> Result<String> {
    let e = analyze(&a.input, &a.screening)?;
    let v = validate_model(&e.clean.kept, &e.clean.fit, a.bandwidth, a.moments)
        .with_context(|| format!("validating {}", e.label))?;
    let adj =
        adjusted_differences(&e.clean.kept).with_context(|| format!("null fit of {}", e.label))?;
    let (plus, minus) = adj.group_sizes();
    Ok(match a.output.format {
        Format::Json => pretty(&json!({
            "label": e.label,
            "n": e.clean.fit.n,
            "validation": to_value(&v),
            "adjusted": {
                "fit": fit_json(&adj.fit),
                "group_sizes": [plus, minus],
                "records": to_value(&adj.records),
            },
        })),
        Format::Csv => match a.table {
            ValidateTable::Residuals => v.to_csv(),
            ValidateTable::KdeAve => v.kde_ave.to_csv(),
            ValidateTable::KdeDiff => v.kde_diff.to_csv(),
            ValidateTable::Adjusted => adj.to_csv(),
        },
        Format::Text => {
            let inside = |x: f64, band: f64| if x.abs() <= band { "yes" } else { "no" };
            let mut t = Table::new(&["statistic", "value", "90% band", "inside"]);
            for (name, x, band) in [
                ("skewness diff*", v.skew_diff, v.band_skew),
                ("kurtosis diff*", v.kurt_diff, v.band_kurt),
                ("skewness ave*", v.skew_ave, v.band_skew),
                ("kurtosis ave*", v.kurt_ave, v.band_kurt),
                ("corr(ave*, diff*)", v.corr, v.band_corr),
            ] {
                t.row(vec![
                    name.into(),
                    f3(x),
                    format!("±{}", f3(band)),
                    inside(x, band).into(),
                ]);
            }
            let mut out = format!("{}, n = {} after screening\n\n", e.label, e.clean.fit.n);
            out.push_str(&t.render());
            writeln!(
                out,
                "\nkernel bandwidth: ave* {}, diff* {}",
                f3(v.kde_ave.bandwidth),
                f3(v.kde_diff.bandwidth)
            )?;
            writeln!(
                out,
                "adjusted differences: {plus} with w = +1/2, {minus} with w = -1/2"
            )?;
            out
        }
    })
}

fn power(a: &PowerArgs) -> Result<String> {
    let p = power_plan(a.sigma, a.se, a.d, a.alpha)?;
    Ok(match a.output.format {
        Format::Json => pretty(&to_value(&p)),
        Format::Csv => format!(
            "sigma,target_se,true_d,alpha,n_required,power\n{},{},{},{},{},{:.6}\n",
            p.sigma, p.target_se, p.true_d, p.alpha, p.n_required, p.power
        ),
        Format::Text => format!(
            "sigma {}, target se {}, d {}, one-sided alpha {}\nskaters required: {}\npower: {:.3}\n",
            p.sigma, p.target_se, p.true_d, p.alpha, p.n_required, p.power
        ),
    })
}

fn mc(a: &McArgs) -> Result<String> {
    anyhow::ensure!(a.reps >= 2, "--reps must be at least 2");
    let cfg = SimConfig {
        n: a.n,
        sigma: a.sigma,
        kappa: a.kappa,
        d: a.d,
        ..SimConfig::default()
    };
    let r = monte_carlo(&cfg, a.reps, a.seed);
    Ok(match a.output.format {
        Format::Json => pretty(&json!({ "seed": a.seed, "config": to_value(&cfg), "report": to_value(&r) })),
        Format::Csv => format!(
            "reps,failures,n,true_d,mean_d,var_d,var_d_theory,var_ratio,mean_se_d,mean_sigma2_un,sigma2_ratio,mean_d_simple,var_d_simple\n\
             {},{},{},{},{:.6e},{:.6e},{:.6e},{:.6},{:.6e},{:.6e},{:.6},{:.6e},{:.6e}\n",
            r.reps,
            r.failures,
            r.n,
            r.true_d,
            r.mean_d,
            r.var_d,
            r.var_d_theory,
            r.var_ratio,
            r.mean_se_d,
            r.mean_sigma2_un,
            r.sigma2_ratio,
            r.mean_d_simple,
            r.var_d_simple
        ),
        Format::Text => {
            let mut t = Table::new(&["quantity", "value"]);
            for (k, v) in [
                ("mean d", r.mean_d),
                ("var d", r.var_d),
                ("2 sigma^2 / n", r.var_d_theory),
                ("ratio", r.var_ratio),
                ("mean se(d)", r.mean_se_d),
                ("mean sigma^2 (unbiased)", r.mean_sigma2_un),
                ("sigma^2 ratio", r.sigma2_ratio),
                ("mean d, difference regression", r.mean_d_simple),
                ("var d, difference regression", r.var_d_simple),
            ] {
                t.row(vec![k.into(), format!("{v:.6}")]);
            }
            format!(
                "{} replications of n = {} (seed {}, true d {}), {} failed fits\n\n{}",
                r.reps,
                r.n,
                a.seed,
                r.true_d,
                r.failures,
                t.render()
            )
        }
    })
}
