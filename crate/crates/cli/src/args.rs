use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wqed2d::config::{Angle, MomentumSpec, RunConfig};
use wqed2d::kernels::CouplingKernel;

#[derive(Debug, Parser)]
#[command(name = "wqed2d", version, about = "Two-excitation physics of 2D atomic arrays in a 2D waveguide or free space")]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the config `output` key).
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "WQED2D_THREADS")]
    pub threads: Option<usize>,

    /// Also write an SVG rendering next to each CSV.
    #[arg(long, global = true)]
    pub svg: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-excitation band along Gamma-X-M-Gamma.
    Bands {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        path: PathArg,
    },
    /// Single-excitation band gap versus spacing.
    GapScan {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Size scaling of the single-excitation decay at a symmetry point.
    SingleScaling {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        sizes: SizesArg,
        #[command(flatten)]
        momentum: MomentumArg,
    },
    /// Finite-array two-excitation states at one center-of-mass momentum.
    TwobodySpectrum {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        size: SizeArg,
        #[command(flatten)]
        momentum: MomentumArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Bound state of the impurity model.
    Boundstate {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        momentum: MomentumArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        rel: RelArg,
    },
    /// Bound-state energy and mean separation versus spacing.
    BsScan {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        momentum: MomentumArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        rel: RelArg,
    },
    /// Decay rates of the tracked two-excitation states versus spacing.
    FiniteSize {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        size: SizeArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Size scaling of the tracked two-excitation decay rates.
    Scaling {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        sizes: SizesArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Time evolution of a localized pair and its correlator.
    Dynamics {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        size: SizeArg,
        #[command(flatten)]
        dynamics: DynamicsArgs,
    },
    /// Free-space scattering-resonance decay versus spacing.
    FreespaceSrScan {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        size: SizeArg,
        #[command(flatten)]
        momentum: MomentumArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Free-space band along the symmetry path and its gap versus spacing.
    FreespaceBands {
        #[command(flatten)]
        spacing: SpacingArg,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        path: PathArg,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bands { .. } => "bands",
            Command::GapScan { .. } => "gap-scan",
            Command::SingleScaling { .. } => "single-scaling",
            Command::TwobodySpectrum { .. } => "twobody-spectrum",
            Command::Boundstate { .. } => "boundstate",
            Command::BsScan { .. } => "bs-scan",
            Command::FiniteSize { .. } => "finite-size",
            Command::Scaling { .. } => "scaling",
            Command::Dynamics { .. } => "dynamics",
            Command::FreespaceSrScan { .. } => "freespace-sr-scan",
            Command::FreespaceBands { .. } => "freespace-bands",
        }
    }

    /// Writes every flag given on the command line into `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        let parts: Vec<&dyn Override> = match self {
            Command::Bands { kernel, spacing, grid, path } => vec![kernel, spacing, grid, path],
            Command::GapScan { kernel, scan, grid } => vec![kernel, scan, grid],
            Command::SingleScaling { kernel, spacing, sizes, momentum } => vec![kernel, spacing, sizes, momentum],
            Command::TwobodySpectrum { kernel, spacing, size, momentum, grid } => vec![kernel, spacing, size, momentum, grid],
            Command::Boundstate { kernel, spacing, momentum, grid, rel } => vec![kernel, spacing, momentum, grid, rel],
            Command::BsScan { kernel, scan, momentum, grid, rel } => vec![kernel, scan, momentum, grid, rel],
            Command::FiniteSize { kernel, scan, size, grid } => vec![kernel, scan, size, grid],
            Command::Scaling { kernel, spacing, sizes, grid } => vec![kernel, spacing, sizes, grid],
            Command::Dynamics { kernel, spacing, size, dynamics } => vec![kernel, spacing, size, dynamics],
            Command::FreespaceSrScan { scan, size, momentum, grid } => vec![scan, size, momentum, grid],
            Command::FreespaceBands { spacing, scan, grid, path } => vec![spacing, scan, grid, path],
        };
        for p in parts {
            p.apply(cfg);
        }
    }
}

pub trait Override {
    fn apply(&self, cfg: &mut RunConfig);
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn parse_kernel(s: &str) -> Result<CouplingKernel, String> {
    match s {
        "waveguide" => Ok(CouplingKernel::Waveguide2D),
        "free_space" | "free-space" => Ok(CouplingKernel::FreeSpaceZZ),
        _ => Err(format!("unknown kernel {s:?}; expected waveguide or free_space")),
    }
}

#[derive(Debug, Args)]
pub struct KernelArg {
    /// Coupling kernel: waveguide or free_space.
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<CouplingKernel>,
}

impl Override for KernelArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.kernel, &self.kernel);
    }
}

#[derive(Debug, Args)]
pub struct SpacingArg {
    /// Spacing k0*d, e.g. 0.52pi.
    #[arg(long, allow_hyphen_values = true)]
    pub k0d: Option<Angle>,
}

impl Override for SpacingArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.k0d, &self.k0d);
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub k0d_min: Option<Angle>,
    #[arg(long)]
    pub k0d_max: Option<Angle>,
    /// Number of spacings, both ends included.
    #[arg(long)]
    pub steps: Option<usize>,
}

impl Override for ScanArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.k0d_min, &self.k0d_min);
        set(&mut cfg.k0d_max, &self.k0d_max);
        set(&mut cfg.steps, &self.steps);
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Momentum grid points per axis.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Linear size of the lattice sum behind the dispersion.
    #[arg(long)]
    pub l_sum: Option<usize>,
}

impl Override for GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.grid_n, &self.grid_n);
        set(&mut cfg.l_sum, &self.l_sum);
    }
}

#[derive(Debug, Args)]
pub struct SizeArg {
    /// Linear array size L (N = L^2 atoms).
    #[arg(long)]
    pub l: Option<usize>,
}

impl Override for SizeArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.l, &self.l);
    }
}

#[derive(Debug, Args)]
pub struct SizesArg {
    /// Comma-separated linear sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

impl Override for SizesArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.sizes, &self.sizes);
    }
}

#[derive(Debug, Args)]
pub struct MomentumArg {
    /// Center-of-mass momentum: gamma, x, m or kx,ky.
    #[arg(long = "K", visible_alias = "momentum", allow_hyphen_values = true)]
    pub momentum: Option<MomentumSpec>,
}

impl Override for MomentumArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.momentum, &self.momentum);
    }
}

#[derive(Debug, Args)]
pub struct RelArg {
    /// Linear extent of the relative-coordinate grid.
    #[arg(long)]
    pub l_r: Option<usize>,
}

impl Override for RelArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.l_r, &self.l_r);
    }
}

#[derive(Debug, Args)]
pub struct PathArg {
    #[arg(long)]
    pub points_per_segment: Option<usize>,
}

impl Override for PathArg {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.points_per_segment, &self.points_per_segment);
    }
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Initial separation (l, l) of the two excitations.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Final time in units of the inverse decay rate.
    #[arg(long = "tmax", visible_alias = "t-max")]
    pub t_max: Option<f64>,
    /// Number of uniform output times.
    #[arg(long)]
    pub samples: Option<usize>,
}

impl Override for DynamicsArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.ell, &self.ell);
        set(&mut cfg.t_max, &self.t_max);
        set(&mut cfg.samples, &self.samples);
    }
}
