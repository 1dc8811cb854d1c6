use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "tdi", version, about = "Time-domain interferometry scans on discrete-site targets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// model file (JSON) or built-in name: doublewell, chain, classical-ctmc
    #[arg(long, global = true, default_value = "doublewell")]
    pub model: String,

    /// output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: String,

    /// seed for Monte Carlo sources
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// algebraic tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// average scans uniformly over t1 within one period
    #[arg(long, global = true)]
    pub average_t1: bool,

    /// allow phase grids the discriminator would reject (scan only)
    #[arg(long, global = true)]
    pub allow_sparse: bool,

    /// override a model parameter, e.g. --param gamma_re=0.2 (repeatable)
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

/// Times and momenta. Numbers accept `pi` forms such as `pi/2` or `0.5pi`.
#[derive(Args, Debug, Clone)]
pub struct GridOpts {
    /// momentum transfer p.d along the model's reference vector (comma list)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = parse_num, default_value = "0")]
    pub pd: Vec<f64>,

    /// first scattering time(s)
    #[arg(long, value_delimiter = ',', value_parser = parse_num, default_value = "0")]
    pub t1: Vec<f64>,

    /// delay(s) t2 - t1
    #[arg(long, value_delimiter = ',', value_parser = parse_num, default_value = "0")]
    pub dt: Vec<f64>,

    /// Monte Carlo trajectories for classical models
    #[arg(long, default_value_t = 100_000)]
    pub n_traj: usize,
}

#[derive(Args, Debug, Clone)]
pub struct PhaseOpts {
    /// explicit phase grid (comma list, strictly increasing)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = parse_num)]
    pub phi: Option<Vec<f64>>,

    /// uniform phase grid k 2pi/N when --phi is absent
    #[arg(long, default_value_t = 8)]
    pub phi_points: usize,

    /// averaging period for --average-t1 (defaults to 2pi/omega for double wells)
    #[arg(long, value_parser = parse_num)]
    pub period: Option<f64>,

    /// t1 samples per period for --average-t1
    #[arg(long, default_value_t = 16)]
    pub t1_samples: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// intermediate scattering function over a (p.d, t1, dt) grid
    Isf {
        #[command(flatten)]
        grid: GridOpts,
    },
    /// couple-correlation function at every site separation
    Dcf {
        #[command(flatten)]
        grid: GridOpts,
    },
    /// phase scan of I+ and I-
    TdiScan {
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        phase: PhaseOpts,
    },
    /// phase scan plus classicality verdict (exit 3 when a classical model is excluded)
    Discriminate {
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        phase: PhaseOpts,
    },
    /// time-resolved signal behind a moving resonant foil
    Moessbauer {
        /// momentum transfer p.d
        #[arg(long, allow_negative_numbers = true, value_parser = parse_num, default_value = "0")]
        pd: f64,
        /// time grid: start:stop:count or a comma list
        #[arg(long, default_value = "0:705:1024")]
        t_grid: String,
        /// foil lifetime T
        #[arg(long, allow_negative_numbers = true, value_parser = parse_num, default_value = "141")]
        lifetime: f64,
        /// Doppler frequency Omega_D
        #[arg(long, allow_negative_numbers = true, value_parser = parse_num, default_value = "0")]
        doppler: f64,
        /// channel phase
        #[arg(long, allow_negative_numbers = true, value_parser = parse_num, default_value = "0")]
        phase: f64,
    },
    /// printed double-well closed forms against exact evaluation
    DoublewellReport,
    /// Monte Carlo ISF of a classical hopping model
    Classical {
        #[command(flatten)]
        grid: GridOpts,
    },
}

/// Parses `1.5`, `pi`, `-pi/2`, `0.5pi`, `3*pi/4`.
pub fn parse_num(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let Some(at) = t.find("pi") else {
        return t.parse::<f64>().map_err(|e| format!("bad number '{s}': {e}"));
    };
    let coef = t[..at].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|e| format!("bad number '{s}': {e}"))?,
    };
    let rest = &t[at + 2..];
    let den = match rest.strip_prefix('/') {
        Some(d) => d.parse::<f64>().map_err(|e| format!("bad number '{s}': {e}"))?,
        None if rest.is_empty() => 1.0,
        None => return Err(format!("bad number '{s}'")),
    };
    Ok(coef * std::f64::consts::PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_forms() {
        assert_eq!(parse_num("pi").unwrap(), PI);
        assert_eq!(parse_num("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_num("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_num("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_num("2.5").unwrap(), 2.5);
        assert!(parse_num("pie").is_err());
        assert!(parse_num("x").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli =
            Cli::try_parse_from(["tdi", "tdi-scan", "--pd", "pi/2", "--dt", "pi/2", "--model", "doublewell"]).unwrap();
        assert!(matches!(cli.cmd, Command::TdiScan { .. }));
        assert_eq!(cli.global.model, "doublewell");
    }
}
