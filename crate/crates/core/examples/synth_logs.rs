//! Writes synthetic identification logs for the default pendulum.
//!
//! cargo run --example synth_logs -- [OUT_DIR] [TRIALS]

use std::path::PathBuf;
use std::{env, fs};

use pendulum_lqr::harness::synth::{gravity_log, horizontal_log, GravitySweep, HorizontalRun};
use pendulum_lqr::sysid::format_log;
use pendulum_lqr::PendulumParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "logs".into()));
    let trials: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(6);
    fs::create_dir_all(&dir)?;

    let params = PendulumParams::IDENTIFIED;
    for seed in 0..trials {
        let run = HorizontalRun { seed, effort_noise_std: 0.01, ..HorizontalRun::default() };
        let path = dir.join(format!("horizontal_{seed}.csv"));
        fs::write(&path, format_log(&horizontal_log(&params, &run)?))?;
        println!("{}", path.display());

        let sweep = GravitySweep { seed, effort_noise_std: 0.002, ..GravitySweep::default() };
        let path = dir.join(format!("vertical_{seed}.csv"));
        fs::write(&path, format_log(&gravity_log(&params, &sweep)?))?;
        println!("{}", path.display());
    }
    Ok(())
}
