use clap::Subcommand;
use primegame_core::decimal::to_scientific;
use primegame_core::engine::{y_bounds, CheckpointDir};
use primegame_core::genealogy::{GenealogyForest, Instance};

use crate::{emit, CliError, CliResult, Context, DirArgs};

#[derive(Subcommand, Debug)]
pub enum AnalyzeCmd {
    /// Decimal bounds on y implied by one stage.
    Ybounds {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        stage: Option<usize>,
        #[arg(long, default_value_t = 50)]
        digits: usize,
    },
    /// First member with at least `size` children.
    Tuplets {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// First member with exactly `count` descendants `order` stages later.
    Descendants {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Members per stage with descendants at the horizon (`s,p,n,n_star`).
    Survivors {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Share of horizon members descending from each member of a stage.
    Strength {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        split: usize,
        #[arg(long)]
        horizon: Option<usize>,
    },
}

fn open(ctx: &Context, d: &DirArgs) -> CliResult<CheckpointDir> {
    let path = ctx.dir(d)?;
    if !path.is_dir() {
        return Err(CliError::Io(format!(
            "{} is not a directory",
            path.display()
        )));
    }
    Ok(CheckpointDir::new(path, false)?)
}

fn horizon_or_latest(dir: &CheckpointDir, h: Option<usize>) -> CliResult<usize> {
    match h {
        Some(h) => Ok(h),
        None => dir
            .latest_stage()?
            .ok_or_else(|| CliError::Io(format!("no checkpoints in {}", dir.path().display()))),
    }
}

fn forest(
    ctx: &Context,
    d: &DirArgs,
    horizon: Option<usize>,
) -> CliResult<(GenealogyForest, usize)> {
    let dir = open(ctx, d)?;
    let h = horizon_or_latest(&dir, horizon)?;
    let variant = ctx.variant(d.variant.as_deref())?;
    Ok((GenealogyForest::from_dir(&dir, variant, 1, h)?, h))
}

fn instance_report(found: Option<Instance>, what: &str, horizon: usize) -> String {
    match found {
        None => format!("found=false\nnote=no {what} up to stage {horizon}\n"),
        Some(i) => {
            let join = |v: Vec<String>| v.join(",");
            format!(
                "found=true\nstage={}\nordinal={}\nmultipliers={}\noffsets={}\nnotation={}\n",
                i.stage,
                i.index + 1,
                join(i.multipliers.iter().map(u64::to_string).collect()),
                join(i.offsets.iter().map(|o| o.to_string()).collect()),
                i.notation()
            )
        }
    }
}

pub fn cmd_analyze(ctx: &Context, cmd: AnalyzeCmd) -> CliResult<()> {
    let out = match cmd {
        AnalyzeCmd::Ybounds { dir, stage, digits } => {
            let cp = open(ctx, &dir)?;
            let s = horizon_or_latest(&cp, stage)?;
            let st = cp.load_stage(s, ctx.variant(dir.variant.as_deref())?, false)?;
            let b = y_bounds(&st);
            format!(
                "stage={s}\nn={}\ny_min={}\ny_max={}\ngap={}\n",
                st.n(),
                b.min.render(digits).0,
                b.max.render(digits).1,
                to_scientific(&b.gap(), 20)
            )
        }
        AnalyzeCmd::Tuplets { dir, size, horizon } => {
            if size < 1 {
                return Err(CliError::Usage("size must be at least 1".into()));
            }
            let (f, h) = forest(ctx, &dir, horizon)?;
            instance_report(f.find_tuplets(size)?, &format!("{size}-tuplet"), h)
        }
        AnalyzeCmd::Descendants {
            dir,
            order,
            count,
            horizon,
        } => {
            let (f, h) = forest(ctx, &dir, horizon)?;
            instance_report(
                f.descendants_of_order(order, count)?,
                &format!("member with {count} order-{order} descendants"),
                h,
            )
        }
        AnalyzeCmd::Survivors { dir, horizon } => {
            let (f, h) = forest(ctx, &dir, horizon)?;
            f.survivors_csv(h)?
        }
        AnalyzeCmd::Strength {
            dir,
            split,
            horizon,
        } => {
            let (f, h) = forest(ctx, &dir, horizon)?;
            let mut s = String::from("index,size,percent\n");
            for g in f.branch_strength(split, h)? {
                s.push_str(&format!("{},{},{:.2}\n", g.index + 1, g.size, g.percent));
            }
            s
        }
    };
    emit(&out)
}
