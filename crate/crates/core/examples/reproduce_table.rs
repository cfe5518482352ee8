//! Runs the eight reference experiments and prints them next to the
//! published values, flagging every difference.

use scenario_barrier::pipeline::reproduce;

fn main() -> scenario_barrier::Result<()> {
    let table = reproduce(0);
    print!("{}", table.to_text());
    let dir = std::env::temp_dir().join("scenario-barrier-reproduce");
    for path in table.write_all(&dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
