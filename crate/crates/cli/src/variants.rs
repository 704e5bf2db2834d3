use std::path::PathBuf;

use clap::Subcommand;
use primegame_core::engine::{y_bounds, Engine};
use primegame_core::seedvariants::*;
use rug::{Integer, Rational};

use crate::{emit, CliError, CliResult, Context};

#[derive(Subcommand, Debug)]
pub enum VariantsCmd {
    /// Smallest m with p#·m − 1 prime for all p ≤ r (`r,m`).
    Chains {
        #[arg(long, default_value_t = 31)]
        r_max: u64,
        #[arg(long, default_value_t = 1)]
        m_start: u64,
        #[arg(long)]
        m_cap: Option<u64>,
    },
    /// Semi-sequences: one base, or the extinction records up to `b_max`.
    Semi {
        #[arg(long, conflicts_with = "b_max")]
        base: Option<u64>,
        #[arg(long)]
        b_max: Option<u64>,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
    },
    /// Greedy nested-interval seed A with ⌊A^(cⁿ)⌋ prime.
    Power {
        /// Exponent base as a rational, e.g. 3 or 1001/1000.
        #[arg(long)]
        c: String,
        #[arg(long)]
        q0: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 60)]
        precision: usize,
    },
    /// Floors ⌊A^(cⁿ)⌋ for a truncated decimal A (`n,prp,digits,floor`).
    VerifyPower {
        /// Decimal digits of A.
        #[arg(long, conflicts_with = "file")]
        a: Option<String>,
        /// File holding the digits of A.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        c: String,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Print every floor in full.
        #[arg(long)]
        full: bool,
    },
}

fn rational(text: &str) -> CliResult<Rational> {
    text.trim()
        .parse::<Rational>()
        .map_err(|_| CliError::Usage(format!("not a rational: {text:?}")))
}

pub fn cmd_variants(ctx: &Context, cmd: VariantsCmd) -> CliResult<()> {
    let out = match cmd {
        VariantsCmd::Chains {
            r_max,
            m_start,
            m_cap,
        } => {
            let res = chain_search(r_max, m_start, m_cap)?;
            if !res.complete {
                eprintln!("cap reached; search continues at m = {}", res.next_m);
            }
            res.to_csv()
        }
        VariantsCmd::Semi {
            base,
            b_max,
            horizon,
        } => match (base, b_max) {
            (Some(b), _) => {
                let engine = Engine::new(ctx.threads)?;
                match semi_scan(b, horizon, &engine)? {
                    SemiOutcome::Extinct(s) => format!("B={b}\nextinct_at={s}\n"),
                    SemiOutcome::Alive(st) => {
                        let yb = y_bounds(&st);
                        format!(
                            "B={b}\nstage={}\nn={}\ny_min={}\n",
                            st.s,
                            st.n(),
                            yb.min.render(30).0
                        )
                    }
                }
            }
            (None, Some(m)) => semi_records_csv(&semi_record_scan(m, horizon)?),
            (None, None) => return Err(CliError::Usage("semi needs --base or --b-max".into())),
        },
        VariantsCmd::Power {
            c,
            q0,
            depth,
            precision,
        } => {
            let c = rational(&c)?;
            let q0: Integer = q0
                .parse()
                .map_err(|_| CliError::Usage(format!("not an integer: {q0:?}")))?;
            let seed = construct_power_seed(&c, &q0, depth, precision)?;
            let (lo, hi) = seed.render();
            let mut s = format!("c={}\na_lo={lo}\na_hi={hi}\nn,q\n", seed.c);
            for (n, q) in seed.chain.iter().enumerate() {
                s.push_str(&format!("{n},{q}\n"));
            }
            s
        }
        VariantsCmd::VerifyPower {
            a,
            file,
            c,
            n_max,
            full,
        } => {
            let digits = match (a, file) {
                (Some(a), _) => a,
                (None, Some(f)) => std::fs::read_to_string(&f)
                    .map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?,
                (None, None) => {
                    return Err(CliError::Usage("verify-power needs --a or --file".into()))
                }
            };
            let c = rational(&c)?;
            let verdicts = verify_power_seed(digits.trim(), &c, n_max)?;
            let mut s = String::from("n,prp,digits,floor\n");
            for v in verdicts {
                let text = v.floor.to_string();
                let shown = if full || text.len() <= 40 {
                    text.clone()
                } else {
                    format!("{}...{}", &text[..12], &text[text.len() - 12..])
                };
                s.push_str(&format!("{},{},{},{shown}\n", v.n, v.prp, text.len()));
            }
            s
        }
    };
    emit(&out)
}
