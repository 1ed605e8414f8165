use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use golgol::circuit::library::Library;
use golgol::circuit::protocol::{verify_gate, VerifyOptions};
use golgol::floodfill::{ff_drive, parse_diagram, parse_seeds, Diagram, DriveOptions, DriveReport};
use golgol::life::torus::TorusArena;
use golgol::life::{rle, step_n, WorldState};
use golgol::mega::{self, MegaCellLayout};

#[derive(Parser)]
#[command(name = "golgol", version, about = "Game of Life circuits and the GOL-in-GOL compiler")]
struct Cli {
    /// Fixes the randomness of property checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Sparse,
    Packed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs a pattern for a number of generations.
    Sim {
        input: PathBuf,
        #[arg(long)]
        steps: u64,
        /// Torus size, `WxH`.
        #[arg(long, value_parser = parse_size)]
        torus: Option<(usize, usize)>,
        #[arg(long, value_enum, default_value = "sparse")]
        backend: Backend,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Verifies a gate's pattern against its specification in every orientation.
    VerifyGate {
        name: String,
        #[arg(long = "lib", required = true)]
        libs: Vec<PathBuf>,
        /// Writes certificates here, one file per orientation.
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Drives a diagram and stamps its gates into a mega-cell layout.
    Assemble {
        diagram: PathBuf,
        #[arg(long = "lib", required = true)]
        libs: Vec<PathBuf>,
        /// Seed file; defaults to the diagram path with extension `seeds`.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(short)]
        o: PathBuf,
    },
    /// Tiles a pattern into mega-cells.
    Compile {
        input: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        /// Mega grid `PxQ`; defaults to the input's extent.
        #[arg(long, value_parser = parse_size)]
        grid: Option<(usize, usize)>,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Samples a mega-cell pattern back to one cell per mega-cell.
    Readback {
        input: PathBuf,
        #[arg(long, value_parser = parse_size)]
        grid: (usize, usize),
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Runs the nextCell enumeration and the seeded property suites.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Drives a diagram and prints the transcript.
    Drive {
        diagram: PathBuf,
        #[arg(long = "lib", required = true)]
        libs: Vec<PathBuf>,
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Processes the queue newest first.
        #[arg(long)]
        reverse: bool,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let n = |t: &str| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (w, h) = (n(w)?, n(h)?);
    if w == 0 || h == 0 {
        return Err("sizes must be positive".into());
    }
    Ok((w, h))
}

/// Failures map to exit codes: 1 for a failed check, 2 for bad input.
enum Fail {
    Check(String),
    Usage(String),
}

type Res = Result<(), Fail>;

fn usage<E: std::fmt::Display>(e: E) -> Fail {
    Fail::Usage(e.to_string())
}

fn read_pattern(p: &Path) -> Result<WorldState, Fail> {
    let bytes = std::fs::read(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    rle::decode(&bytes).map(|d| d.state).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn write_out(o: &Option<PathBuf>, text: &str) -> Res {
    match o {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_lib(libs: &[PathBuf]) -> Result<Library, Fail> {
    Library::load_dirs(libs, false).map_err(usage)
}

fn drive(diagram: &Path, libs: &[PathBuf], seeds: Option<&Path>, reverse: bool) -> Result<(Diagram, Library, DriveReport), Fail> {
    let text = std::fs::read_to_string(diagram).map_err(|e| usage(format!("{}: {e}", diagram.display())))?;
    let d = parse_diagram(&text).map_err(|e| usage(format!("{}: {e}", diagram.display())))?;
    let seeds_path = seeds.map(Path::to_path_buf).unwrap_or_else(|| diagram.with_extension("seeds"));
    let seeds = match std::fs::read_to_string(&seeds_path) {
        Ok(t) => parse_seeds(&t).map_err(|e| usage(format!("{}: {e}", seeds_path.display())))?,
        Err(e) => return Err(usage(format!("{}: {e}", seeds_path.display()))),
    };
    let lib = load_lib(libs)?;
    let r = ff_drive(&d, &lib, &seeds, DriveOptions { reverse }).map_err(|e| Fail::Check(e.to_string()))?;
    Ok((d, lib, r))
}

fn run(cli: Cli) -> Res {
    match cli.cmd {
        Cmd::Sim { input, steps, torus, backend, o } => {
            let s = read_pattern(&input)?;
            let out = match (torus, backend) {
                (None, Backend::Sparse) => step_n(&s, steps as usize),
                (None, Backend::Packed) => return Err(usage("the packed backend needs --torus")),
                (Some((w, h)), Backend::Packed) => {
                    let mut t = TorusArena::from_world(w, h, &s).map_err(usage)?;
                    t.step_n(steps);
                    t.to_world()
                }
                (Some((w, h)), Backend::Sparse) => {
                    let mut s = s;
                    for _ in 0..steps {
                        s = mega::small_torus_step(&s, w as i64, h as i64);
                    }
                    s
                }
            };
            write_out(&o, &(rle::encode_positioned(&out) + "\n"))
        }
        Cmd::VerifyGate { name, libs, o } => {
            let lib = load_lib(&libs)?;
            let g = lib.get(&name).ok_or_else(|| usage(format!("no gate named {name}")))?;
            if !g.has_pattern {
                return Err(Fail::Check(format!("{name} has no pattern to verify")));
            }
            if let Some(dir) = &o {
                std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            }
            for og in &g.oriented {
                let c = og.orientation.to_char();
                match verify_gate(&og.spec.init, &og.spec, VerifyOptions::default()) {
                    Ok(cert) => {
                        println!("{name} {c}: verified, delay {}, fixpoint at tick {}", cert.delay(), cert.fixpoint_tick);
                        if let Some(dir) = &o {
                            let p = dir.join(format!("{name}.{}.cert", og.orientation.0));
                            std::fs::write(&p, cert.to_text()).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                        }
                    }
                    Err(e) => return Err(Fail::Check(format!("{name} {c}: counterexample: {e}"))),
                }
            }
            Ok(())
        }
        Cmd::Assemble { diagram, libs, seeds, o } => {
            let (d, lib, r) = drive(&diagram, &libs, seeds.as_deref(), false)?;
            if !r.finalize.ok {
                return Err(Fail::Check(format!("diagram does not close:\n{}", r.finalize.lines.join("\n"))));
            }
            let layout = mega::assemble_layout(&d, &lib, Some(&r.state)).map_err(|e| Fail::Check(e.to_string()))?;
            layout.save(&o).map_err(usage)?;
            println!(
                "layout: {} / {} live cells, latch at {}",
                layout.variant0.len(),
                layout.variant1.len(),
                layout.latch.map_or("?".to_string(), |a| a.to_string())
            );
            Ok(())
        }
        Cmd::Compile { input, layout, grid, o } => {
            let s = read_pattern(&input)?;
            let l = MegaCellLayout::load(&layout).map_err(usage)?;
            let (p, q) = match grid {
                Some(g) => g,
                None => match s.bbox() {
                    None => (1, 1),
                    Some(b) if b.min.x < 0 || b.min.y < 0 => return Err(usage("input has negative coordinates; pass --grid")),
                    Some(b) => (b.max.x as usize + 1, b.max.y as usize + 1),
                },
            };
            let t = mega::build_mega_cells(&s, p, q, &l).map_err(usage)?;
            write_out(&o, &(rle::encode_positioned(&t.to_world()) + "\n"))
        }
        Cmd::Readback { input, grid: (p, q), o } => {
            let s = read_pattern(&input)?;
            let out: WorldState = mega::read_mega_cells_plane(&s)
                .iter()
                .filter(|c| (0..p as i64).contains(&c.x) && (0..q as i64).contains(&c.y))
                .collect();
            write_out(&o, &(rle::encode_positioned(&out) + "\n"))
        }
        Cmd::OracleCheck { cases } => {
            let mut failed = None;
            for (name, r) in golgol::checks::run_all(cli.seed, cases) {
                match r {
                    Ok(line) => println!("{line}"),
                    Err(e) => {
                        println!("FAIL {name}: {e}");
                        failed.get_or_insert(e);
                    }
                }
            }
            failed.map_or(Ok(()), |e| Err(Fail::Check(e)))
        }
        Cmd::Drive { diagram, libs, seeds, reverse } => {
            let (_, _, r) = drive(&diagram, &libs, seeds.as_deref(), reverse)?;
            print!("{}", r.transcript_text());
            if r.finalize.ok && r.conditions.is_ok() {
                Ok(())
            } else {
                Err(Fail::Check("diagram does not close".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(m)) => {
            eprintln!("golgol: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("golgol: {m}");
            ExitCode::from(2)
        }
    }
}
