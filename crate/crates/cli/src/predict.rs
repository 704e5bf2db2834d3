use std::path::PathBuf;

use clap::{Args, Subcommand};
use primegame_core::engine::CheckpointDir;
use primegame_core::heuristics::*;
use primegame_core::ntcore::nth_prime;

use crate::{emit, parse_psi, CliError, CliResult, Context};

#[derive(Args, Debug, Clone)]
pub struct PsiArg {
    /// unity, limit, default or cutoff:<k>.
    #[arg(long, default_value = "limit")]
    psi: String,
}

impl PsiArg {
    fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::with_psi(parse_psi(&self.psi)?))
    }
}

#[derive(Subcommand, Debug)]
pub enum PredictCmd {
    /// Probability that a member founds no infinite branch.
    Omega {
        #[arg(long)]
        stage: usize,
        /// Wheel throttle prime (1 for none).
        #[arg(long, default_value_t = 1)]
        k: u64,
        /// Stage where the downward recursion starts.
        #[arg(long)]
        start: Option<usize>,
        /// ω at the start stage.
        #[arg(long)]
        omega_start: Option<f64>,
        /// Print the whole series as `s,p,omega`.
        #[arg(long)]
        series: bool,
        #[command(flatten)]
        psi: PsiArg,
    },
    /// Descendant-count distribution of one member (`s,p,P0..P7,Pgt7`).
    Table6 {
        #[arg(long, default_value_t = 100)]
        from: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "101,102,103,110,150,200,1000,2000"
        )]
        rows: Vec<usize>,
        #[command(flatten)]
        psi: PsiArg,
    },
    /// Expected next count, or prediction records for a stage log.
    Growth {
        #[arg(long)]
        stage: Option<usize>,
        #[arg(long)]
        n: Option<f64>,
        /// Checkpoint directory whose stage log is compared against the model.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        psi: PsiArg,
    },
    /// First stages where the projected count passes each target.
    Project {
        #[arg(long, default_value_t = 318)]
        from: usize,
        #[arg(long, default_value_t = 592_642.0)]
        n: f64,
        #[arg(long, value_delimiter = ',', default_value = "1e6,1e9,1e12")]
        targets: Vec<f64>,
        /// Use ψ ≈ 1 − log p/(2p) instead of the model ψ.
        #[arg(long)]
        asymptotic: bool,
        #[command(flatten)]
        psi: PsiArg,
    },
    /// Probability of a k-fold split into lasting branches.
    Split {
        #[arg(long)]
        stage: usize,
        #[arg(long, default_value_t = 3)]
        fold: u64,
        /// Population of the previous stage, for the aggregate probability.
        #[arg(long)]
        n: Option<u64>,
        #[command(flatten)]
        psi: PsiArg,
    },
}

pub fn cmd_predict(_ctx: &Context, cmd: PredictCmd) -> CliResult<()> {
    let out = match cmd {
        PredictCmd::Omega {
            stage,
            k,
            start,
            omega_start,
            series,
            psi,
        } => {
            if stage < 1 {
                return Err(CliError::Usage("stage must be at least 1".into()));
            }
            let params = psi.params()?;
            let t = start.unwrap_or_else(|| default_start_stage(stage));
            let w0 = omega_start.unwrap_or_else(|| default_omega_start(t));
            let sr = omega_series(stage, t, w0, Throttle::new(k)?, &params)?;
            if series {
                sr.to_csv()
            } else {
                let w = sr.get(stage).expect("stage in series");
                format!(
                    "stage={stage}\np={}\nk={k}\nstart={t}\nomega={w:.9}\n",
                    nth_prime(stage)
                )
            }
        }
        PredictCmd::Table6 { from, rows, psi } => table6_csv(&table6(from, &rows, &psi.params()?)?),
        PredictCmd::Growth { stage, n, dir, psi } => {
            let params = psi.params()?;
            match (dir, stage, n) {
                (Some(d), _, _) => {
                    let log = CheckpointDir::new(d, false)?.read_log()?;
                    let actual: Vec<(usize, u64)> = log.iter().map(|r| (r.s, r.n as u64)).collect();
                    deviation_series(&actual, &params)?.to_csv()
                }
                (None, Some(s), Some(n)) => {
                    let next = predict_next_n(n, s, &params);
                    format!(
                        "stage={}\np={}\npredicted={next:.3}\nsigma={:.3}\n",
                        s + 1,
                        nth_prime(s + 1),
                        next.sqrt()
                    )
                }
                _ => {
                    return Err(CliError::Usage(
                        "growth needs --dir, or both --stage and --n".into(),
                    ))
                }
            }
        }
        PredictCmd::Project {
            from,
            n,
            targets,
            asymptotic,
            psi,
        } => {
            let mode = if asymptotic {
                ProjectionPsi::Asymptotic
            } else {
                ProjectionPsi::Model
            };
            let got = project_stage_targets(from, n, &targets, mode, &psi.params()?)?;
            let mut s = String::from("target,stage,p\n");
            for (t, st) in got {
                s.push_str(&format!("{t:e},{st},{}\n", nth_prime(st)));
            }
            s
        }
        PredictCmd::Split {
            stage,
            fold,
            n,
            psi,
        } => {
            if stage < 2 {
                return Err(CliError::Usage("stage must be at least 2".into()));
            }
            let params = psi.params()?;
            let w = omega_at(stage - 1, Throttle::none(), &params)?;
            let v = split_probability(stage, fold, w, &params);
            let mut s = format!(
                "stage={stage}\nfold={fold}\nomega_prev={w:.9}\nper_prime_percent={:.6}\n",
                100.0 * v
            );
            if let Some(n) = n {
                s.push_str(&format!(
                    "n={n}\naggregate_percent={:.4}\n",
                    100.0 * aggregate_probability(v, n)
                ));
            }
            s
        }
    };
    emit(&out)
}
