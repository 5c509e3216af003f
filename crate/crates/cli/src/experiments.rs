//! One function per experiment. Each writes its CSV files and a JSON
//! summary through the shared [`Writer`].

use serde_json::{json, Value};

use randcycles::beta::{
    digit_stats, golden_density, mean_distance_limit, q_closed_form_golden, q_from_density, symmetric_mean_limit,
    DigitSequence,
};
use randcycles::cycles::annealed_log_z_direct;
use randcycles::lsv::{classify_case, neutral_mass_profile, return_time_tail, LsvSpec};
use randcycles::measures::{kolmogorov_distance, pelikan_index, ulam_stationary, Cdf, PiecewiseConstantDensity};
use randcycles::tolerances::ULAM_MAX_ITER;
use randcycles::{
    cycle_measure_xi, enumerate_cycles, enumerate_preimages, enumerate_skew_fixed_points, sample_averaged_measure,
    weighted_functional_average, BranchKind, Cycle, SampleWord, SymbolicSystem,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{finite, num, Header, Writer};

/// Annealed pressure is reported alongside per-sample runs up to this many
/// periodic words.
const ANNEALED_SIDE_LIMIT: f64 = 1e6;

const PELIKAN_GRID: usize = 10_000;

pub fn run(cfg: &ExperimentConfig, w: &mut Writer) -> CliResult<()> {
    let header = Header::new(cfg.experiment.name(), &cfg.config_sha256, &cfg.seeds);
    match cfg.experiment {
        Experiment::Validate => validate(cfg, w, &header),
        Experiment::Cycles => cycles(cfg, w, &header),
        Experiment::Equidistribute => equidistribute(cfg, w, &header),
        Experiment::Annealed => annealed(cfg, w, &header),
        Experiment::Digits => digits(cfg, w, &header),
        Experiment::Stationary => stationary(cfg, w, &header),
        Experiment::LsvTails => lsv_tails(cfg, w, &header),
        Experiment::Preimages => preimages(cfg, w, &header),
    }
}

/// Symbols joined 1-based with `-`.
fn word_label(word: &[usize]) -> String {
    word.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join("-")
}

fn joined(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

fn ulam(cfg: &ExperimentConfig) -> CliResult<PiecewiseConstantDensity> {
    Ok(ulam_stationary(&cfg.system, cfg.cells, cfg.tolerances.ulam, ULAM_MAX_ITER)?)
}

fn is_beta_system(sym: &SymbolicSystem) -> bool {
    (0..sym.alphabet().len()).all(|a| matches!(sym.branch(a).kind(), BranchKind::BetaPiece { .. }))
}

fn validate(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let mut failed = Vec::new();
    let maps: Vec<Value> = cfg
        .system
        .maps()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let r = m.validate_markov(cfg.tolerances.markov);
            if !r.passed {
                failed.push(k + 1);
            }
            json!({
                "map": k + 1,
                "passed": r.passed,
                "max_endpoint_mismatch": r.max_endpoint_mismatch(),
                "undeclared_non_expanding": r.undeclared_non_expanding,
                "branches": r.branches.iter().map(|b| json!({
                    "branch": b.branch + 1,
                    "image": [b.image.lo(), b.image.hi()],
                    "covered_cells": b.covered_cells.iter().map(|c| c + 1).collect::<Vec<_>>(),
                    "ok": b.ok,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let pelikan = pelikan_index(&cfg.system, PELIKAN_GRID);
    let coding = match SymbolicSystem::new(cfg.system.clone(), cfg.tolerances.markov) {
        Ok(sym) => json!({
            "alphabet_size": sym.alphabet().len(),
            "transition_matrix": sym.matrix().to_rows(),
            "irreducible": sym.matrix().is_irreducible(),
            "mixing_index": sym.mixing_index(),
        }),
        Err(e) => {
            failed.push(0);
            json!({ "error": e.to_string() })
        }
    };
    w.json(
        "validate.json",
        header,
        json!({
            "maps": maps,
            "coding": coding,
            "pelikan_index": pelikan,
            "expanding_on_average": pelikan < 1.0,
            "passed": failed.is_empty(),
        }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check("Markov validation failed; see validate.json".into()))
    }
}

fn cycles(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let sym = cfg.symbolic()?;
    let opts = cfg.options();
    let with_digits = is_beta_system(&sym);
    let mut columns = vec!["word", "x", "log_weight", "orbit"];
    if with_digits {
        columns.push("digits");
    }
    let mut runs = Vec::new();
    for &n in cfg.require_n()? {
        let annealed = if sym.matrix().word_count(n) <= ANNEALED_SIDE_LIMIT {
            Some(finite(annealed_log_z_direct(&sym, n, &opts)? / n as f64, "annealed pressure")?)
        } else {
            None
        };
        for &seed in &cfg.seeds {
            let omega = SampleWord::sample(cfg.system.probs(), n, seed)?;
            let cs = enumerate_cycles(&sym, &omega, &opts)?;
            let rows = cs
                .cycles
                .iter()
                .map(|c| {
                    let mut row = vec![word_label(&c.word), num(c.point), num(c.log_weight), joined(&c.orbit)];
                    if with_digits {
                        let d = DigitSequence::from_cycle(&sym, c)?;
                        row.push(d.digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"));
                    }
                    Ok(row)
                })
                .collect::<CliResult<Vec<_>>>()?;
            w.csv(
                &format!("cycles_n{n}_seed{seed}.csv"),
                &header.with_seed(seed),
                &[format!("n {n}"), format!("omega {}", omega.display())],
                &columns,
                &rows,
            )?;
            runs.push(json!({
                "n": n,
                "seed": seed,
                "omega": omega.display(),
                "cycles": cs.len(),
                "duplicates_removed": cs.duplicates_removed,
                "log_z": finite(cs.log_z, "log Z")?,
                "z": cs.z(),
                "pressure": cs.log_z / n as f64,
                "annealed_pressure": annealed,
            }));
        }
    }
    w.json("cycles_summary.json", header, json!({ "runs": runs }))
}

/// Mean of `rows[i][col]` grouped by `n`, in the order of `ns`.
fn means_by_n(ns: &[usize], values: &[(usize, f64)]) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            let v: Vec<f64> = values.iter().filter(|(m, _)| *m == n).map(|(_, x)| *x).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect()
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|p| p[1] <= p[0])
}

fn equidistribute(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let sym = cfg.symbolic()?;
    let opts = cfg.options();
    let ns = cfg.require_n()?;
    let density = ulam(cfg)?;
    let lo = cfg.system.ambient().lo();
    let mut rows = Vec::new();
    let mut dist = Vec::new();
    for &n in ns {
        for &seed in &cfg.seeds {
            let omega = SampleWord::sample(cfg.system.probs(), n, seed)?;
            let cs = enumerate_cycles(&sym, &omega, &opts)?;
            let xi = cycle_measure_xi(&cs)?;
            let d = kolmogorov_distance(&xi, &density);
            dist.push((n, d));
            rows.push(vec![
                n.to_string(),
                seed.to_string(),
                cs.len().to_string(),
                num(d),
                num(xi.cdf(lo)),
            ]);
        }
    }
    w.csv(
        "equidistribute.csv",
        header,
        &[format!("ulam_cells {}", cfg.cells)],
        &["n", "seed", "cycles", "kolmogorov_ulam", "mass_at_left_end"],
        &rows,
    )?;
    let means = means_by_n(ns, &dist);
    w.json(
        "equidistribute_summary.json",
        header,
        json!({
            "n": ns,
            "mean_kolmogorov_ulam": means,
            "monotone_decreasing": non_increasing(&means),
            "ulam_cells": cfg.cells,
        }),
    )
}

fn annealed(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let sym = cfg.symbolic()?;
    let opts = cfg.options();
    let ns = cfg.require_n()?;
    let density = ulam(cfg)?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for &n in ns {
        let skew = enumerate_skew_fixed_points(&sym, n, &opts)?;
        let direct = annealed_log_z_direct(&sym, n, &opts)?;
        let zeta = skew.zeta()?;
        let averaged = sample_averaged_measure(&sym, n, &cfg.seeds, &opts)?;
        let gap = (skew.log_z - direct).abs();
        gaps.push(gap);
        rows.push(vec![
            n.to_string(),
            skew.per_omega.len().to_string(),
            skew.total_cycles().to_string(),
            num(skew.log_z),
            num(direct),
            num(gap),
            num(skew.log_z / n as f64),
            num(kolmogorov_distance(&zeta, &density)),
            num(kolmogorov_distance(&averaged, &density)),
        ]);
    }
    w.csv(
        "annealed.csv",
        header,
        &[format!("ulam_cells {}", cfg.cells)],
        &[
            "n",
            "sample_words",
            "cycles",
            "log_z_skew",
            "log_z_direct",
            "gap",
            "annealed_pressure",
            "kolmogorov_zeta_ulam",
            "kolmogorov_sample_average_ulam",
        ],
        &rows,
    )?;
    w.json(
        "annealed_summary.json",
        header,
        json!({ "n": ns, "max_gap": gaps.iter().copied().fold(0.0, f64::max) }),
    )
}

fn digits(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let beta = cfg
        .common_beta()
        .ok_or_else(|| CliError::Usage("digits needs every map to be a beta map for one beta".into()))?;
    let max_digit = beta.floor() as u32;
    let sym = cfg.symbolic()?;
    let opts = cfg.options();
    let mut columns: Vec<String> = vec!["word".into(), "x".into(), "digits".into()];
    columns.extend((0..=max_digit).map(|i| format!("freq_{i}")));
    columns.push("symmetric_mean".into());
    columns.push("mean_distance".into());
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();

    let stats_of = |c: &Cycle| -> randcycles::Result<_> {
        let d = DigitSequence::from_cycle(&sym, c)?;
        let s = digit_stats(&d.digits, max_digit)?;
        Ok((d, s))
    };
    let mut runs = Vec::new();
    for &n in cfg.require_n()? {
        for &seed in &cfg.seeds {
            let omega = SampleWord::sample(cfg.system.probs(), n, seed)?;
            let cs = enumerate_cycles(&sym, &omega, &opts)?;
            let mut rows = Vec::with_capacity(cs.len());
            for c in &cs.cycles {
                let (d, s) = stats_of(c)?;
                let mut row = vec![
                    word_label(&c.word),
                    num(c.point),
                    d.digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"),
                ];
                row.extend(s.freq.iter().map(|&f| num(f)));
                row.push(num(s.symmetric_mean));
                row.push(num(s.mean_distance));
                rows.push(row);
            }
            w.csv(
                &format!("digits_n{n}_seed{seed}.csv"),
                &header.with_seed(seed),
                &[format!("n {n}"), format!("omega {}", omega.display())],
                &columns,
                &rows,
            )?;
            let avg = |pick: &dyn Fn(&randcycles::beta::DigitStats) -> f64| {
                weighted_functional_average(&cs, |_, c| stats_of(c).map_or(f64::NAN, |(_, s)| pick(&s)))
            };
            let freqs = (0..=max_digit as usize)
                .map(|i| avg(&|s| s.freq[i]))
                .collect::<randcycles::Result<Vec<_>>>()?;
            runs.push(json!({
                "n": n,
                "seed": seed,
                "omega": omega.display(),
                "cycles": cs.len(),
                "weighted_freq": freqs,
                "weighted_symmetric_mean": avg(&|s| s.symmetric_mean)?,
                "weighted_mean_distance": avg(&|s| s.mean_distance)?,
            }));
        }
    }
    let limits = match &cfg.beta_pair {
        Some(bs) => {
            let q = q_from_density(bs, cfg.system.probs(), &ulam(cfg)?);
            let mut l = json!({
                "q_ulam": q,
                "symmetric_mean_limit": symmetric_mean_limit(&q),
                "mean_distance_limit": mean_distance_limit(&q),
            });
            if cfg.is_golden_pair() {
                let (q0, q1) = q_closed_form_golden(cfg.system.probs()[0]);
                l["q_closed_form"] = json!([q0, q1]);
                l["symmetric_mean_limit"] = json!(symmetric_mean_limit(&[q0, q1]));
                l["mean_distance_limit"] = json!(mean_distance_limit(&[q0, q1]));
            }
            l
        }
        None => Value::Null,
    };
    w.json(
        "digits_summary.json",
        header,
        json!({ "beta": beta, "runs": runs, "limits": limits }),
    )
}

fn stationary(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let density = ulam(cfg)?;
    let rows: Vec<Vec<String>> = density
        .cells()
        .map(|(lo, hi, v)| vec![num(lo), num(hi), num(v)])
        .collect();
    w.csv(
        "stationary_density.csv",
        header,
        &[format!("ulam_cells {}", cfg.cells)],
        &["breakpoint_lo", "breakpoint_hi", "value"],
        &rows,
    )?;
    let mut body = json!({
        "ulam_cells": cfg.cells,
        "pelikan_index": pelikan_index(&cfg.system, PELIKAN_GRID),
    });
    if cfg.is_golden_pair() {
        let beta = cfg.common_beta().unwrap_or_default();
        let exact = golden_density(cfg.system.probs()[0]);
        body["sup_distance_closed_form"] = json!(density.sup_distance(&exact, &[1.0 / beta, 1.0], 0.01));
        body["kolmogorov_closed_form"] = json!(kolmogorov_distance(&density, &exact));
    }
    w.json("stationary_summary.json", header, body)
}

fn lsv_tails(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let alphas = cfg
        .lsv_alphas()
        .ok_or_else(|| CliError::Usage("lsv-tails needs every map to be an lsv map".into()))?;
    let spec = LsvSpec::new(alphas.clone(), cfg.system.probs().to_vec())?;
    let mut tails = Vec::new();
    for (k, m) in cfg.system.maps().iter().enumerate() {
        let t = return_time_tail(m, 0, cfg.tail_n_max)?;
        let rows: Vec<Vec<String>> = t
            .tail
            .iter()
            .enumerate()
            .map(|(n, v)| vec![n.to_string(), num(*v)])
            .collect();
        w.csv(
            &format!("lsv_tail_map{}.csv", k + 1),
            header,
            &[format!("alpha {}", num(alphas[k]))],
            &["n", "tail_measure"],
            &rows,
        )?;
        tails.push(json!({
            "map": k + 1,
            "alpha": alphas[k],
            "fitted_exponent": t.exponent,
            "expected_exponent": -1.0 / alphas[k],
        }));
    }
    if !cfg.n.is_empty() {
        let sym = cfg.symbolic()?;
        let opts = cfg.options();
        for &seed in &cfg.seeds {
            let mut rows = Vec::new();
            for &n in &cfg.n {
                let omega = SampleWord::sample(cfg.system.probs(), n, seed)?;
                let p = neutral_mass_profile(&sym, &omega, &opts)?;
                for (eps, mass) in &p.masses {
                    rows.push(vec![n.to_string(), num(*eps), num(*mass), num(p.neutral_weight)]);
                }
            }
            w.csv(
                &format!("lsv_profile_seed{seed}.csv"),
                &header.with_seed(seed),
                &[],
                &["n", "eps", "mass", "neutral_weight_normalized"],
                &rows,
            )?;
        }
    }
    w.json(
        "lsv_summary.json",
        header,
        json!({
            "case": classify_case(&spec).label(),
            "tail_n_max": cfg.tail_n_max,
            "tails": tails,
        }),
    )
}

fn preimages(cfg: &ExperimentConfig, w: &mut Writer, header: &Header) -> CliResult<()> {
    let x0 = cfg
        .x0
        .ok_or_else(|| CliError::Usage("preimages needs --x0".into()))?;
    let sym = cfg.symbolic()?;
    let density = ulam(cfg)?;
    let mut runs = Vec::new();
    for &n in cfg.require_n()? {
        for &seed in &cfg.seeds {
            let omega = SampleWord::sample(cfg.system.probs(), n, seed)?;
            let mu = enumerate_preimages(&sym, &omega, x0)?;
            let rows: Vec<Vec<String>> = mu.atoms().map(|(x, m)| vec![num(x), num(m)]).collect();
            w.csv(
                &format!("preimages_n{n}_seed{seed}.csv"),
                &header.with_seed(seed),
                &[format!("n {n}"), format!("omega {}", omega.display()), format!("x0 {}", num(x0))],
                &["point", "weight"],
                &rows,
            )?;
            runs.push(json!({
                "n": n,
                "seed": seed,
                "omega": omega.display(),
                "atoms": mu.len(),
                "kolmogorov_ulam": kolmogorov_distance(&mu, &density),
            }));
        }
    }
    w.json(
        "preimages_summary.json",
        header,
        json!({ "x0": x0, "ulam_cells": cfg.cells, "runs": runs }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(word_label(&[0, 3, 11]), "1-4-12");
        assert_eq!(joined(&[0.5, 1.0]), "5.0000000000000000e-1;1.0000000000000000e0");
    }

    #[test]
    fn trend() {
        assert!(non_increasing(&[0.3, 0.2, 0.2, 0.1]));
        assert!(!non_increasing(&[0.3, 0.4]));
        assert_eq!(means_by_n(&[2, 3], &[(2, 1.0), (3, 4.0), (2, 3.0)]), vec![2.0, 4.0]);
    }
}
