use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use primegame_core::engine::{
    seed, y_bounds, CheckpointDir, CheckpointSink, Engine, RunOutcome, StageState, VariantRule,
};

use crate::{emit, CliError, CliResult, Context};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// floor, round or semi:<B>.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    to_stage: Option<usize>,
    #[arg(long, alias = "dir")]
    checkpoint_dir: Option<PathBuf>,
    /// Re-test every member of a resumed checkpoint.
    #[arg(long)]
    prp_rechecks: bool,
    /// Skip the parent maps (genealogy commands will then refuse the directory).
    #[arg(long)]
    no_parents: bool,
    /// Decimal places for the reported y bounds.
    #[arg(long)]
    precision: Option<usize>,
    /// No per-stage progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

/// Resolved run settings.
#[derive(Debug)]
pub struct RunConfig {
    pub variant: VariantRule,
    pub to_stage: usize,
    pub checkpoint_dir: PathBuf,
    pub threads: usize,
    pub prp_rechecks: bool,
    pub parents: bool,
    pub precision: usize,
}

impl RunConfig {
    fn resolve(ctx: &Context, a: &RunArgs) -> CliResult<Self> {
        let cfg = &ctx.config;
        let variant = ctx.variant(a.variant.as_deref())?;
        let to_stage = match a.to_stage {
            Some(s) => s,
            None => cfg
                .get::<usize>("to_stage")?
                .ok_or_else(|| CliError::Usage("missing --to-stage".into()))?,
        };
        if to_stage < 1 {
            return Err(CliError::Usage("to_stage must be at least 1".into()));
        }
        let checkpoint_dir = a
            .checkpoint_dir
            .clone()
            .or_else(|| cfg.path("checkpoint_dir"))
            .ok_or_else(|| CliError::Usage("missing --checkpoint-dir".into()))?;
        Ok(RunConfig {
            variant,
            to_stage,
            checkpoint_dir,
            threads: ctx.threads,
            prp_rechecks: a.prp_rechecks || cfg.flag("prp_rechecks")?.unwrap_or(false),
            parents: !a.no_parents && cfg.flag("parents")?.unwrap_or(true),
            precision: a.precision.or(cfg.get("precision")?).unwrap_or(30),
        })
    }
}

struct Progress {
    dir: CheckpointDir,
    to: usize,
    quiet: bool,
}

impl CheckpointSink for Progress {
    fn on_stage(
        &mut self,
        state: &StageState,
        parents: Option<&[usize]>,
        elapsed: Duration,
    ) -> primegame_core::Result<()> {
        self.dir.on_stage(state, parents, elapsed)?;
        if !self.quiet {
            eprintln!(
                "stage {}/{}  p={}  n={}  {} ms",
                state.s,
                self.to,
                state.p,
                state.n(),
                elapsed.as_millis()
            );
        }
        Ok(())
    }

    fn on_extinct(&mut self, last: &StageState, stage: usize) -> primegame_core::Result<()> {
        if !self.quiet {
            eprintln!("stage {stage}: no members left after stage {}", last.s);
        }
        Ok(())
    }
}

pub fn cmd_run(ctx: &Context, a: RunArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(ctx, &a)?;
    let dir = CheckpointDir::new(&rc.checkpoint_dir, rc.parents)?;
    let mut sink = Progress {
        dir: dir.clone(),
        to: rc.to_stage,
        quiet: a.quiet,
    };
    let start = match dir.latest_stage()? {
        Some(s) => {
            let st = dir.load_stage(s, rc.variant, rc.prp_rechecks)?;
            if !a.quiet {
                eprintln!("resuming from stage {s} ({} members)", st.n());
            }
            st
        }
        None => {
            let st = seed(rc.variant);
            sink.on_stage(&st, None, Duration::ZERO)?;
            st
        }
    };
    let engine = Engine::new(rc.threads)?;
    let target = rc.to_stage.max(start.s);
    let mut report = format!("variant={}\n", rc.variant.label());
    match engine.run(start, target, &mut sink)? {
        RunOutcome::Completed(st) => {
            let b = y_bounds(&st);
            let (lo, _) = b.min.render(rc.precision);
            let (_, hi) = b.max.render(rc.precision);
            report.push_str(&format!(
                "stage={}\np={}\nn={}\ny_min={lo}\ny_max={hi}\n",
                st.s,
                st.p,
                st.n()
            ));
        }
        RunOutcome::Extinct { last, stage } => {
            report.push_str(&format!(
                "extinct_at={stage}\nlast_stage={}\nlast_n={}\n",
                last.s,
                last.n()
            ));
        }
    }
    emit(&report)
}
