// Config text plus overrides, dispatched through the command-line entry.

use classe_forge::config::parse_config_with;

const CONFIG: &str = r#"
[design]
pout_dbm = 25.1
pout_scope = "differential"

[sweep]
vramp_points = 5
vramp_stop = 0.9
"#;

pub fn run_example() -> classe_forge::Result<()> {
    let cfg = parse_config_with(CONFIG, &["circuit.r_on=0.25".to_string()])?;
    println!("r_on override: {}", cfg.circuit.r_on);
    println!("vramp grid: {:?}", cfg.vramp_grid());

    let dir = std::env::temp_dir().join("classe_forge_config_example");
    let config_path = dir.join("pa.toml");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&config_path, CONFIG)?;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = classe_forge::cli::run_with(
        [
            "classe-forge".as_ref(),
            "vramp-sweep".as_ref(),
            "--config".as_ref(),
            config_path.as_os_str(),
            "--out".as_ref(),
            dir.as_os_str(),
        ],
        &mut out,
        &mut err,
    );
    print!("{}", String::from_utf8_lossy(&out));
    eprint!("{}", String::from_utf8_lossy(&err));
    println!("exit code {code}");
    let csv = std::fs::read_to_string(dir.join("vramp_sweep.csv"))?;
    print!("{csv}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
